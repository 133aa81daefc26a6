//! Flat row-major matrix kernels used by the hand-written forward/backward.

/// `a (m x k) . b (k x n)` into a fresh `m x n` buffer.
pub fn matmul(a: &[f64], m: usize, k: usize, b: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// `a (m x k) . b^T` where `b` is `n x k`.
pub fn matmul_bt(a: &[f64], m: usize, k: usize, b: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            out[i * n + j] = arow.iter().zip(brow).map(|(&x, &y)| x * y).sum();
        }
    }
    out
}

/// `a^T . b` where `a` is `k x m` and `b` is `k x n`.
pub fn matmul_at(a: &[f64], k: usize, m: usize, b: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    let mut out = vec![0.0; m * n];
    for p in 0..k {
        let arow = &a[p * m..(p + 1) * m];
        let brow = &b[p * n..(p + 1) * n];
        for (i, &av) in arow.iter().enumerate() {
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// Add a length-`n` bias to every row of `x (m x n)`.
pub fn add_bias_rows(x: &mut [f64], m: usize, n: usize, bias: &[f64]) {
    debug_assert_eq!(x.len(), m * n);
    debug_assert_eq!(bias.len(), n);
    for i in 0..m {
        for (v, &b) in x[i * n..(i + 1) * n].iter_mut().zip(bias) {
            *v += b;
        }
    }
}

/// Numerically safe row-wise softmax in place over `m x n`.
pub fn softmax_rows(x: &mut [f64], m: usize, n: usize) {
    for i in 0..m {
        let row = &mut x[i * n..(i + 1) * n];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Backward of a row-wise softmax: given post-softmax values `a` and
/// upstream `da`, returns the gradient w.r.t. the pre-softmax scores.
pub fn softmax_rows_backward(a: &[f64], da: &[f64], m: usize, n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(da.len(), m * n);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        let darow = &da[i * n..(i + 1) * n];
        let dot: f64 = arow.iter().zip(darow).map(|(&x, &y)| x * y).sum();
        for j in 0..n {
            out[i * n + j] = arow[j] * (darow[j] - dot);
        }
    }
    out
}
