//! Deterministic CSV emission for the evaluation tables.
//!
//! Values are formatted with six decimals so identical runs produce
//! byte-identical files.

use crate::analysis::RcqReport;
use crate::metrics::{FaithfulnessReport, PerturbationCurve};

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

/// One method's row for the AUC/faithfulness comparison table.
#[derive(Debug, Clone)]
pub struct Table1Row {
    pub method: String,
    pub auc_pos: f64,
    pub auc_neg: f64,
    pub ai: f64,
    pub ad: f64,
    pub ag: f64,
    pub fid_in: f64,
}

pub fn table1_csv(rows: &[Table1Row]) -> String {
    let mut out = String::from("method,auc_pos,auc_neg,ai,ad,ag,fid_in\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            fmt(r.auc_pos),
            fmt(r.auc_neg),
            fmt(r.ai),
            fmt(r.ad),
            fmt(r.ag),
            fmt(r.fid_in)
        ));
    }
    out
}

/// One method's row for the partial-spoof localization table.
#[derive(Debug, Clone)]
pub struct Table2Row {
    pub method: String,
    pub rcq_br: f64,
    pub rcq_sr: f64,
    pub rma: f64,
    pub rra: f64,
}

pub fn table2_csv(rows: &[Table2Row]) -> String {
    let mut out = String::from("method,rcq_br,rcq_sr,rma,rra\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method,
            fmt(r.rcq_br),
            fmt(r.rcq_sr),
            fmt(r.rma),
            fmt(r.rra)
        ));
    }
    out
}

/// Long-form perturbation curves: one row per (method, polarity, fraction).
pub fn perturbation_csv(curves: &[(String, &PerturbationCurve)]) -> String {
    let mut out = String::from("method,polarity,n,eer\n");
    for (method, curve) in curves {
        for (&n, &e) in curve.n_grid.iter().zip(&curve.eer_percent) {
            out.push_str(&format!(
                "{},{},{},{}\n",
                method,
                curve.polarity.as_str(),
                fmt(n),
                fmt(e)
            ));
        }
    }
    out
}

/// RCQ reports, normalized column included when present.
pub fn rcq_csv(reports: &[(String, &RcqReport)]) -> String {
    let mut out = String::from("method,subset,category,count,s_c,rcq,rcq_normalized\n");
    for (method, report) in reports {
        for e in &report.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                method,
                report.subset,
                e.category,
                e.count,
                fmt(e.s_c),
                fmt(e.rcq),
                e.normalized.map(fmt).unwrap_or_default()
            ));
        }
    }
    out
}

/// Per-utterance faithfulness diagnostics for one method.
pub fn faithfulness_detail_csv(method: &str, report: &FaithfulnessReport) -> String {
    let mut out = String::from("method,utterance,f_orig,f_mod,ai,ad,ag,fid_match\n");
    for r in &report.per_utterance {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            method,
            r.id,
            fmt(r.f_orig),
            fmt(r.f_mod),
            u8::from(r.ai_term),
            r.ad_term.map(fmt).unwrap_or_default(),
            r.ag_term.map(fmt).unwrap_or_default(),
            u8::from(r.fid_match)
        ));
    }
    out
}

/// Held-out score dump: `utterance,label,score`.
pub fn scores_csv(rows: &[(String, bool, f64)]) -> String {
    let mut out = String::from("utterance,label,score\n");
    for (id, is_spoof, score) in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            id,
            if *is_spoof { "spoof" } else { "bonafide" },
            fmt(*score)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_header_matches_expected_columns() {
        let csv = table1_csv(&[]);
        assert_eq!(csv.lines().next().unwrap(), "method,auc_pos,auc_neg,ai,ad,ag,fid_in");
    }

    #[test]
    fn table2_header_matches_expected_columns() {
        let csv = table2_csv(&[]);
        assert_eq!(csv.lines().next().unwrap(), "method,rcq_br,rcq_sr,rma,rra");
    }

    #[test]
    fn formatting_is_fixed_width() {
        let rows = [Table1Row {
            method: "gatr".into(),
            auc_pos: 1.0,
            auc_neg: 0.5,
            ai: 12.3456789,
            ad: 0.0,
            ag: 50.0,
            fid_in: 0.998,
        }];
        let csv = table1_csv(&rows);
        assert!(csv.contains("gatr,1.000000,0.500000,12.345679,0.000000,50.000000,0.998000"));
    }
}
