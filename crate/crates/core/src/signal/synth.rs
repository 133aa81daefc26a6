//! Synthetic bona fide / spoof / partial-spoof utterance generation.
//!
//! Bona fide utterances are harmonic bursts with per-period f0 jitter and
//! random harmonic phases, separated by a low-level noise floor. Spoof
//! utterances share the exact same segment layout but carry the planted
//! artifact: deterministic (zero) phase, zero jitter, and a fixed-frequency
//! low-amplitude tone gated to the voiced segments. The artifact is spectral
//! and phase-based, not amplitude-based, so energy-category analyses are not
//! trivially confounded.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{peak_normalize, Label, RegionLabel, Utterance, Waveform};
use crate::error::{Error, Result};
use crate::seeding;

/// Parameters of the synthetic utterance generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    /// Utterance length in samples.
    pub num_samples: usize,
    pub sample_rate: u32,
    /// Voiced segment duration range, ms.
    pub voiced_ms: (f64, f64),
    /// Gap (noise floor only) duration range, ms.
    pub gap_ms: (f64, f64),
    /// RMS of the noise floor filling silence.
    pub silence_rms: f64,
    /// Fundamental frequency range, Hz.
    pub f0_hz: (f64, f64),
    /// Number of harmonics in the voiced stack.
    pub harmonics: usize,
    /// Fractional per-period f0 jitter (standard deviation); bona fide only.
    pub jitter_sd: f64,
    /// Peak envelope amplitude range for voiced segments.
    pub peak_amp: (f64, f64),
    /// Attack/release ramp of the voiced envelope, ms.
    pub attack_ms: f64,
    /// Planted tone frequency, Hz; spoof only.
    pub tone_hz: f64,
    /// Planted tone amplitude; spoof only.
    pub tone_amp: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            num_samples: 4000,
            sample_rate: 4000,
            voiced_ms: (100.0, 400.0),
            gap_ms: (50.0, 150.0),
            silence_rms: 0.01,
            f0_hz: (120.0, 250.0),
            harmonics: 4,
            jitter_sd: 0.02,
            peak_amp: (0.4, 0.9),
            attack_ms: 10.0,
            tone_hz: 1237.0,
            tone_amp: 0.08,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::Config("generator num_samples must be > 0".into()));
        }
        if self.sample_rate == 0 {
            return Err(Error::Config("generator sample_rate must be > 0".into()));
        }
        if self.harmonics == 0 {
            return Err(Error::Config("generator harmonics must be >= 1".into()));
        }
        if self.tone_hz <= 0.0 || self.tone_hz >= self.sample_rate as f64 / 2.0 {
            return Err(Error::Config(format!(
                "tone_hz {} outside (0, nyquist)",
                self.tone_hz
            )));
        }
        if self.voiced_ms.0 > self.voiced_ms.1 || self.voiced_ms.0 <= 0.0 {
            return Err(Error::Config("invalid voiced_ms range".into()));
        }
        if self.gap_ms.0 > self.gap_ms.1 || self.gap_ms.0 < 0.0 {
            return Err(Error::Config("invalid gap_ms range".into()));
        }
        Ok(())
    }

    fn ms_to_samples(&self, ms: f64) -> usize {
        (ms / 1000.0 * self.sample_rate as f64).round() as usize
    }
}

/// Generator ground truth retained alongside a synthesized utterance.
#[derive(Debug, Clone)]
pub struct SynthMeta {
    /// True where the envelope of a voiced segment is active.
    pub voiced: Vec<bool>,
    pub voiced_fraction: f64,
}

#[derive(Debug, Clone)]
struct VoicedSeg {
    start: usize,
    len: usize,
    f0: f64,
    amp: f64,
}

/// Draw the segment layout. Both classes share this for a given seed, so
/// bona fide / spoof pairs differ only inside the voiced content.
fn draw_layout(spec: &GeneratorSpec, rng: &mut impl Rng) -> Vec<VoicedSeg> {
    let t = spec.num_samples;
    let mut segs = Vec::new();
    let mut cursor = 0usize;
    loop {
        let gap = spec.ms_to_samples(rng.random_range(spec.gap_ms.0..=spec.gap_ms.1));
        cursor = cursor.saturating_add(gap);
        if cursor >= t {
            break;
        }
        let want = spec.ms_to_samples(rng.random_range(spec.voiced_ms.0..=spec.voiced_ms.1));
        let len = want.min(t - cursor);
        if len < spec.ms_to_samples(spec.voiced_ms.0) / 2 {
            break;
        }
        segs.push(VoicedSeg {
            start: cursor,
            len,
            f0: rng.random_range(spec.f0_hz.0..=spec.f0_hz.1),
            amp: rng.random_range(spec.peak_amp.0..=spec.peak_amp.1),
        });
        cursor += len;
    }
    // Tiny utterances may not fit the gap/voiced alternation; force one
    // segment so every utterance has voiced content.
    if segs.is_empty() {
        let len = (t / 2).max(1);
        segs.push(VoicedSeg {
            start: t / 4,
            len: len.min(t - t / 4),
            f0: rng.random_range(spec.f0_hz.0..=spec.f0_hz.1),
            amp: rng.random_range(spec.peak_amp.0..=spec.peak_amp.1),
        });
    }
    segs
}

/// Trapezoid envelope in [0, 1] with `ramp`-sample attack and release.
fn envelope(i: usize, len: usize, ramp: usize) -> f64 {
    let ramp = ramp.max(1).min(len / 2 + 1);
    let up = (i as f64 + 1.0) / ramp as f64;
    let down = (len - i) as f64 / ramp as f64;
    up.min(down).min(1.0)
}

fn render(
    spec: &GeneratorSpec,
    class: Label,
    layout: &[VoicedSeg],
    rng: &mut impl Rng,
) -> Vec<f64> {
    let t = spec.num_samples;
    let sr = spec.sample_rate as f64;
    let mut samples: Vec<f64> = (0..t)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * spec.silence_rms
        })
        .collect();

    let ramp = spec.ms_to_samples(spec.attack_ms);
    let harm_norm: f64 = (1..=spec.harmonics).map(|k| 1.0 / k as f64).sum();

    for seg in layout {
        let spoofed = class != Label::Bonafide;
        // Bona fide: random harmonic phases (cycles); spoof: zero phase.
        let phases: Vec<f64> = (0..spec.harmonics)
            .map(|_| {
                if spoofed {
                    0.0
                } else {
                    rng.random_range(0.0..1.0)
                }
            })
            .collect();

        let mut phase = 0.0f64; // fundamental phase, cycles
        let mut period_f0 = seg.f0;
        let mut last_period = 0u64;
        for i in 0..seg.len {
            let idx = seg.start + i;
            if idx >= t {
                break;
            }
            // Redraw the instantaneous f0 once per completed period.
            let period = phase.floor() as u64;
            if period != last_period {
                last_period = period;
                if !spoofed {
                    let z: f64 = rng.sample(StandardNormal);
                    period_f0 = seg.f0 * (1.0 + spec.jitter_sd * z);
                }
            }
            let env = envelope(i, seg.len, ramp) * seg.amp;
            let mut v = 0.0;
            for (k, ph) in phases.iter().enumerate() {
                let k1 = (k + 1) as f64;
                v += (1.0 / k1)
                    * (std::f64::consts::TAU * (k1 * phase + ph)).sin();
            }
            samples[idx] += env * v / harm_norm;
            if spoofed {
                samples[idx] +=
                    spec.tone_amp * (std::f64::consts::TAU * spec.tone_hz * idx as f64 / sr).sin();
            }
            phase += period_f0 / sr;
        }
    }
    samples
}

fn meta_from_layout(spec: &GeneratorSpec, layout: &[VoicedSeg]) -> SynthMeta {
    let mut voiced = vec![false; spec.num_samples];
    for seg in layout {
        let end = (seg.start + seg.len).min(spec.num_samples);
        voiced[seg.start..end].fill(true);
    }
    let frac = voiced.iter().filter(|&&v| v).count() as f64 / spec.num_samples as f64;
    SynthMeta {
        voiced,
        voiced_fraction: frac,
    }
}

/// Synthesize one bona fide or spoof utterance. Identical `(spec, class,
/// seed)` yields bit-identical output.
pub fn synth_utterance(spec: &GeneratorSpec, class: Label, seed: u64) -> Result<Utterance> {
    synth_utterance_with_meta(spec, class, seed).map(|(u, _)| u)
}

/// As [`synth_utterance`] but also returns the generator ground truth.
pub fn synth_utterance_with_meta(
    spec: &GeneratorSpec,
    class: Label,
    seed: u64,
) -> Result<(Utterance, SynthMeta)> {
    spec.validate()?;
    if class == Label::Partial {
        return Err(Error::Config(
            "synth_utterance generates bonafide or spoof; use synth_partial".into(),
        ));
    }
    let layout = draw_layout(spec, &mut seeding::substream(seed, &["layout"]));
    let samples = render(
        spec,
        class,
        &layout,
        &mut seeding::substream(seed, &["content"]),
    );
    let (waveform, _) = peak_normalize(&Waveform::new(samples, spec.sample_rate));
    let meta = meta_from_layout(spec, &layout);
    Ok((
        Utterance {
            id: String::new(),
            waveform,
            label: class,
            regions: None,
        },
        meta,
    ))
}

/// How the first segment of a partial utterance is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartialStart {
    Bonafide,
    Spoof,
    /// Seeded coin flip (default).
    Seeded,
}

/// Parameters for partial-spoof synthesis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PartialSpec {
    pub base: GeneratorSpec,
    /// Inclusive range for the number of alternating segments.
    pub segments: (usize, usize),
    /// Target fraction of SR-labelled samples.
    pub spoof_fraction: f64,
    /// Crossfade at segment boundaries, ms.
    pub crossfade_ms: f64,
    pub start: PartialStart,
}

impl Default for PartialSpec {
    fn default() -> Self {
        PartialSpec {
            base: GeneratorSpec::default(),
            segments: (2, 4),
            spoof_fraction: 0.5,
            crossfade_ms: 5.0,
            start: PartialStart::Seeded,
        }
    }
}

impl PartialSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.segments.0 < 2 || self.segments.0 > self.segments.1 {
            return Err(Error::Config(
                "partial segments range must satisfy 2 <= min <= max".into(),
            ));
        }
        if !(self.spoof_fraction > 0.0 && self.spoof_fraction < 1.0) {
            return Err(Error::Config("spoof_fraction must be in (0, 1)".into()));
        }
        if self.crossfade_ms < 0.0 {
            return Err(Error::Config("crossfade_ms must be >= 0".into()));
        }
        Ok(())
    }
}

/// Seeded alternating segment layout for a partial utterance. Segment
/// lengths are drawn so the SR total hits `round(spoof_fraction * T)`
/// exactly; both labels always occur.
pub fn partial_layout(spec: &PartialSpec, seed: u64) -> Result<Vec<(RegionLabel, usize)>> {
    spec.validate()?;
    let t = spec.base.num_samples;
    let mut rng = seeding::substream(seed, &["partial-layout"]);
    let n_segs = rng.random_range(spec.segments.0..=spec.segments.1);
    let first = match spec.start {
        PartialStart::Bonafide => RegionLabel::Br,
        PartialStart::Spoof => RegionLabel::Sr,
        PartialStart::Seeded => {
            if rng.random::<bool>() {
                RegionLabel::Sr
            } else {
                RegionLabel::Br
            }
        }
    };

    let labels: Vec<RegionLabel> = (0..n_segs)
        .map(|i| {
            if i % 2 == 0 {
                first
            } else {
                match first {
                    RegionLabel::Br => RegionLabel::Sr,
                    RegionLabel::Sr => RegionLabel::Br,
                }
            }
        })
        .collect();

    let sr_total = (spec.spoof_fraction * t as f64).round() as usize;
    let sr_total = sr_total.clamp(1, t - 1);
    let br_total = t - sr_total;

    // Split each label's budget over its slots with seeded proportions.
    let split = |total: usize, slots: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> {
        let weights: Vec<f64> = (0..slots).map(|_| rng.random_range(0.5..1.5)).collect();
        let wsum: f64 = weights.iter().sum();
        let mut out: Vec<usize> = weights
            .iter()
            .map(|w| ((w / wsum) * total as f64).floor() as usize)
            .collect();
        let mut assigned: usize = out.iter().sum();
        let mut i = 0;
        while assigned < total {
            out[i % slots] += 1;
            assigned += 1;
            i += 1;
        }
        out
    };

    let sr_slots = labels.iter().filter(|&&l| l == RegionLabel::Sr).count();
    let br_slots = n_segs - sr_slots;
    let sr_lens = split(sr_total, sr_slots, &mut rng);
    let br_lens = split(br_total, br_slots, &mut rng);

    let (mut si, mut bi) = (0usize, 0usize);
    let layout: Vec<(RegionLabel, usize)> = labels
        .iter()
        .map(|&l| match l {
            RegionLabel::Sr => {
                let v = sr_lens[si];
                si += 1;
                (l, v)
            }
            RegionLabel::Br => {
                let v = br_lens[bi];
                bi += 1;
                (l, v)
            }
        })
        .collect();
    if layout.iter().any(|&(_, len)| len == 0) {
        return Err(Error::Config(format!(
            "partial layout produced an empty segment (T={t}, segments={n_segs})"
        )));
    }
    Ok(layout)
}

/// Render a partial utterance from an explicit `(region, length)` layout.
///
/// Two full-length aligned sources are synthesized (bona fide and spoof with
/// the same voiced layout); the output switches between them at segment
/// boundaries with a crossfade. Boundary samples are labelled by the segment
/// owning the sample midpoint, so labels change exactly at the boundary.
pub fn render_partial(
    spec: &PartialSpec,
    layout: &[(RegionLabel, usize)],
    seed: u64,
) -> Result<Utterance> {
    spec.validate()?;
    if layout.len() < 2 {
        return Err(Error::Config("partial layout needs >= 2 segments".into()));
    }
    if layout.iter().any(|&(_, len)| len == 0) {
        return Err(Error::Config("partial layout has an empty segment".into()));
    }
    let has = |lab: RegionLabel| layout.iter().any(|&(l, _)| l == lab);
    if !has(RegionLabel::Br) || !has(RegionLabel::Sr) {
        return Err(Error::Config(
            "partial layout must contain both BR and SR segments".into(),
        ));
    }

    let t: usize = layout.iter().map(|&(_, len)| len).sum();
    let mut base = spec.base.clone();
    base.num_samples = t;

    let voiced = draw_layout(&base, &mut seeding::substream(seed, &["layout"]));
    let bona = render(
        &base,
        Label::Bonafide,
        &voiced,
        &mut seeding::substream(seed, &["content-br"]),
    );
    let spoof = render(
        &base,
        Label::Spoof,
        &voiced,
        &mut seeding::substream(seed, &["content-sr"]),
    );

    let mut regions = Vec::with_capacity(t);
    for &(label, len) in layout {
        regions.extend(std::iter::repeat_n(label, len));
    }

    let pick = |label: RegionLabel, i: usize| match label {
        RegionLabel::Br => bona[i],
        RegionLabel::Sr => spoof[i],
    };
    let mut samples: Vec<f64> = (0..t).map(|i| pick(regions[i], i)).collect();

    // Crossfade across each boundary: blend the two sources over a window
    // centered on the boundary. Labels are untouched.
    let fade = base.ms_to_samples(spec.crossfade_ms);
    if fade >= 2 {
        let mut boundary = 0usize;
        for w in layout.windows(2) {
            boundary += w[0].1;
            let (left, right) = (w[0].0, w[1].0);
            let lo = boundary.saturating_sub(fade / 2);
            let hi = (boundary + fade - fade / 2).min(t);
            for i in lo..hi {
                let alpha = (i - lo) as f64 / (hi - lo) as f64;
                samples[i] = (1.0 - alpha) * pick(left, i) + alpha * pick(right, i);
            }
        }
    }

    let (waveform, _) = peak_normalize(&Waveform::new(samples, base.sample_rate));
    Ok(Utterance {
        id: String::new(),
        waveform,
        label: Label::Partial,
        regions: Some(regions),
    })
}

/// Synthesize a partial-spoof utterance with a seeded layout.
pub fn synth_partial(spec: &PartialSpec, seed: u64) -> Result<Utterance> {
    let layout = partial_layout(spec, seed)?;
    render_partial(spec, &layout, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_is_deterministic() {
        let spec = GeneratorSpec::default();
        let a = synth_utterance(&spec, Label::Bonafide, 7).unwrap();
        let b = synth_utterance(&spec, Label::Bonafide, 7).unwrap();
        assert_eq!(a.waveform.samples, b.waveform.samples);
    }

    #[test]
    fn spoof_differs_inside_voiced_segments() {
        let spec = GeneratorSpec::default();
        let (bona, meta) = synth_utterance_with_meta(&spec, Label::Bonafide, 7).unwrap();
        let spoof = synth_utterance(&spec, Label::Spoof, 7).unwrap();
        let diff = bona
            .waveform
            .samples
            .iter()
            .zip(&spoof.waveform.samples)
            .zip(&meta.voiced)
            .filter(|((a, b), &v)| v && (*a - *b).abs() > 1e-9)
            .count();
        assert!(diff > 100, "only {diff} voiced samples differ");
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let mut spec = GeneratorSpec::default();
        spec.num_samples = 0;
        assert!(synth_utterance(&spec, Label::Bonafide, 1).is_err());
        let mut spec = GeneratorSpec::default();
        spec.sample_rate = 0;
        assert!(synth_utterance(&spec, Label::Bonafide, 1).is_err());
    }

    // DFT-magnitude oracle (Goertzel recurrence): the spoof spectrum must
    // dominate the bona fide spectrum at the planted tone bin.
    fn goertzel(samples: &[f64], freq_hz: f64, sample_rate: f64) -> f64 {
        let w = std::f64::consts::TAU * freq_hz / sample_rate;
        let coeff = 2.0 * w.cos();
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for &x in samples {
            let s0 = x + coeff * s1 - s2;
            s2 = s1;
            s1 = s0;
        }
        (s1 * s1 + s2 * s2 - coeff * s1 * s2).sqrt()
    }

    #[test]
    fn spoof_has_planted_tone_energy() {
        let spec = GeneratorSpec::default();
        for seed in [1u64, 2, 3] {
            let bona = synth_utterance(&spec, Label::Bonafide, seed).unwrap();
            let spoof = synth_utterance(&spec, Label::Spoof, seed).unwrap();
            let sr = spec.sample_rate as f64;
            let mb = goertzel(&bona.waveform.samples, spec.tone_hz, sr);
            let ms = goertzel(&spoof.waveform.samples, spec.tone_hz, sr);
            assert!(
                ms > 3.0 * mb,
                "seed {seed}: tone bin magnitude spoof {ms} vs bona {mb}"
            );
        }
    }

    #[test]
    fn partial_labels_follow_explicit_layout() {
        let mut spec = PartialSpec::default();
        spec.base.num_samples = 2000;
        let layout = [(RegionLabel::Br, 1000usize), (RegionLabel::Sr, 1000usize)];
        let utt = render_partial(&spec, &layout, 3).unwrap();
        let regions = utt.regions.as_ref().unwrap();
        assert_eq!(regions.len(), 2000);
        assert!(regions[..1000].iter().all(|&r| r == RegionLabel::Br));
        assert!(regions[1000..].iter().all(|&r| r == RegionLabel::Sr));
    }

    #[test]
    fn partial_is_deterministic_and_has_both_labels() {
        let spec = PartialSpec::default();
        let a = synth_partial(&spec, 5).unwrap();
        let b = synth_partial(&spec, 5).unwrap();
        assert_eq!(a.waveform.samples, b.waveform.samples);
        let regions = a.regions.as_ref().unwrap();
        assert_eq!(regions.len(), a.waveform.len());
        assert!(regions.contains(&RegionLabel::Br));
        assert!(regions.contains(&RegionLabel::Sr));
    }

    // Label-count oracle: SR fraction must hit the generator target.
    #[test]
    fn partial_sr_fraction_matches_target() {
        let spec = PartialSpec::default();
        for seed in 0u64..20 {
            let utt = synth_partial(&spec, seed).unwrap();
            let regions = utt.regions.as_ref().unwrap();
            let sr = regions.iter().filter(|&&r| r == RegionLabel::Sr).count() as f64;
            let frac = sr / regions.len() as f64;
            let allowance = 1.0 / regions.len() as f64 + 1e-12;
            assert!(
                (frac - spec.spoof_fraction).abs() <= allowance,
                "seed {seed}: SR fraction {frac} vs target {}",
                spec.spoof_fraction
            );
        }
    }

    #[test]
    fn boundary_crossfade_keeps_label_partition() {
        let spec = PartialSpec::default();
        let utt = synth_partial(&spec, 42).unwrap();
        // Every sample carries exactly one label by construction; just check
        // the length partition and value domain.
        let regions = utt.regions.as_ref().unwrap();
        assert_eq!(regions.len(), utt.waveform.len());
    }
}
