//! `rlens eval`: faithfulness, perturbation curves, partial-spoof
//! localization, and category RCQ reports as CSV.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;

use rlens_core::analysis::{
    energy_tertiles, energy_vad, load_category_file, normalize_rcq, rcq, rma, rra, CategoryMap,
    RcqReport,
};
use rlens_core::attribution::{load_heatmap, Heatmap};
use rlens_core::error::{Error, Result};
use rlens_core::metrics::{
    default_n_grid, eer, faithfulness, perturbation_test, Polarity, ScoreSet, ThresholdMode,
};
use rlens_core::model::{load_checkpoint, score_dataset, ModelParams};
use rlens_core::reports::{
    faithfulness_detail_csv, perturbation_csv, rcq_csv, scores_csv, table1_csv, table2_csv,
    Table1Row, Table2Row,
};
use rlens_core::signal::{Label, RegionLabel, Utterance};

use crate::commands::load_sorted;
use crate::config::load_json_config;
use crate::provenance::{config_hash, write_provenance, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum WhichArg {
    Faithfulness,
    Perturbation,
    Partial,
    Rcq,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubsetArg {
    Bonafide,
    Spoof,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PerturbThresholdArg {
    /// Recompute the EER operating point at each fraction.
    Fresh,
    /// Hold the unperturbed threshold fixed.
    Fixed,
}

/// Analysis settings accepted as JSON via --analysis-config.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub vad: rlens_core::analysis::VadConfig,
    pub tertiles: rlens_core::analysis::TertileConfig,
    /// Restrict RMA/RRA to utterances the classifier predicts spoof at the
    /// EER threshold (the default), or score every partial utterance.
    pub localization_all_utterances: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,

    #[arg(long)]
    pub manifest: PathBuf,

    /// Heatmap directory from `rlens explain`; repeat for several methods.
    #[arg(long = "heatmaps", required = true)]
    pub heatmap_dirs: Vec<PathBuf>,

    #[arg(long)]
    pub out: PathBuf,

    /// Which reports to compute (repeatable / comma-separated).
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [WhichArg::All])]
    pub which: Vec<WhichArg>,

    /// Utterance subset for the category RCQ report.
    #[arg(long, value_enum, env = "RLENS_SUBSET", default_value_t = SubsetArg::All)]
    pub subset: SubsetArg,

    /// Perturbation fraction grid.
    #[arg(long, value_delimiter = ',', env = "RLENS_N_GRID")]
    pub n_grid: Option<Vec<f64>>,

    #[arg(long, value_enum, default_value_t = PerturbThresholdArg::Fresh)]
    pub perturb_threshold: PerturbThresholdArg,

    #[arg(long, env = "RLENS_SEED", default_value_t = 7)]
    pub seed: u64,

    /// JSON analysis settings (VAD, tertiles, localization scope).
    #[arg(long)]
    pub analysis_config: Option<PathBuf>,

    /// Directory of per-utterance `<id>.csv` category files
    /// (start_sample,end_sample,category rows). Adds an RCQ report over
    /// these user-supplied categories to the rcq output.
    #[arg(long)]
    pub category_files: Option<PathBuf>,
}

struct MethodHeatmaps {
    name: String,
    maps: Vec<Heatmap>,
}

fn load_method_heatmaps(dir: &Path, utterances: &[Utterance]) -> Result<MethodHeatmaps> {
    let maps: Vec<Heatmap> = utterances
        .iter()
        .map(|u| {
            let h = load_heatmap(dir, &u.id)?;
            if h.scores.len() != u.waveform.len() {
                return Err(Error::Data(format!(
                    "heatmap for {} has length {}, waveform has {}",
                    u.id,
                    h.scores.len(),
                    u.waveform.len()
                )));
            }
            Ok(h)
        })
        .collect::<Result<Vec<_>>>()?;
    let name = maps
        .first()
        .map(|h| h.method.as_str().to_string())
        .ok_or_else(|| Error::Data(format!("{}: no heatmaps", dir.display())))?;
    if maps.iter().any(|h| h.method.as_str() != name) {
        return Err(Error::Data(format!(
            "{}: mixed attribution methods in one directory",
            dir.display()
        )));
    }
    if maps.iter().all(|h| h.scores.iter().all(|&v| v == 0.0)) {
        return Err(Error::Degenerate(format!(
            "every {name} heatmap in {} is zero",
            dir.display()
        )));
    }
    Ok(MethodHeatmaps { name, maps })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let which: BTreeSet<WhichArg> = if args.which.contains(&WhichArg::All) {
        [
            WhichArg::Faithfulness,
            WhichArg::Perturbation,
            WhichArg::Partial,
            WhichArg::Rcq,
        ]
        .into_iter()
        .collect()
    } else {
        args.which.iter().copied().collect()
    };
    if which.is_empty() {
        return Err(Error::Config("no reports selected".into()));
    }
    let analysis: AnalysisConfig = load_json_config(args.analysis_config.as_deref())?;
    let n_grid = args.n_grid.clone().unwrap_or_else(default_n_grid);

    let params = load_checkpoint(&args.checkpoint)?;
    let utterances = load_sorted(&args.manifest)?;
    let methods: Vec<MethodHeatmaps> = args
        .heatmap_dirs
        .iter()
        .map(|d| load_method_heatmaps(d, &utterances))
        .collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    // Unperturbed operating point; every downstream metric reuses it.
    let scores = score_dataset(&params, &utterances)?;
    let score_rows: Vec<rlens_core::model::ScoreRow> = utterances
        .iter()
        .zip(&scores)
        .map(|(u, &s)| (u.id.clone(), u.label.is_spoof(), s))
        .collect();
    write(&args.out.join("scores.csv"), &scores_csv(&score_rows))?;
    let base_eer = eer(&ScoreSet {
        scores: scores.clone(),
        is_spoof: utterances.iter().map(|u| u.label.is_spoof()).collect(),
    })?;

    let mut table1: Vec<Table1Row> = Vec::new();
    let mut faith_rows = String::new();
    let mut curves_owned: Vec<(String, rlens_core::metrics::PerturbationCurve)> = Vec::new();

    for m in &methods {
        let mut row = Table1Row {
            method: m.name.clone(),
            auc_pos: f64::NAN,
            auc_neg: f64::NAN,
            ai: f64::NAN,
            ad: f64::NAN,
            ag: f64::NAN,
            fid_in: f64::NAN,
        };
        if which.contains(&WhichArg::Faithfulness) {
            let report = faithfulness(&params, &utterances, &m.maps, base_eer.threshold)?;
            row.ai = report.ai;
            row.ad = report.ad;
            row.ag = report.ag;
            row.fid_in = report.fid_in;
            let detail = faithfulness_detail_csv(&m.name, &report);
            if faith_rows.is_empty() {
                faith_rows.push_str(&detail);
            } else {
                // Skip the header on subsequent methods.
                faith_rows.push_str(detail.split_once('\n').map(|x| x.1).unwrap_or(""));
            }
        }
        if which.contains(&WhichArg::Perturbation) {
            let mode = match args.perturb_threshold {
                PerturbThresholdArg::Fresh => ThresholdMode::FreshPerFraction,
                PerturbThresholdArg::Fixed => {
                    ThresholdMode::FixedFromUnperturbed(base_eer.threshold)
                }
            };
            for polarity in [Polarity::Positive, Polarity::Negative] {
                let curve = perturbation_test(
                    &params,
                    &utterances,
                    &m.maps,
                    polarity,
                    &n_grid,
                    args.seed,
                    mode,
                )?;
                match polarity {
                    Polarity::Positive => row.auc_pos = curve.auc,
                    Polarity::Negative => row.auc_neg = curve.auc,
                }
                curves_owned.push((m.name.clone(), curve));
            }
        }
        table1.push(row);
    }

    if which.contains(&WhichArg::Faithfulness) {
        write(&args.out.join("faithfulness_detail.csv"), &faith_rows)?;
    }
    if which.contains(&WhichArg::Perturbation) {
        let refs: Vec<(String, &rlens_core::metrics::PerturbationCurve)> = curves_owned
            .iter()
            .map(|(n, c)| (n.clone(), c))
            .collect();
        write(&args.out.join("perturbation_curves.csv"), &perturbation_csv(&refs))?;
    }
    if which.contains(&WhichArg::Faithfulness) && which.contains(&WhichArg::Perturbation) {
        write(&args.out.join("table1.csv"), &table1_csv(&table1))?;
    }

    if which.contains(&WhichArg::Partial) {
        run_partial(args, &params, &utterances, &scores, base_eer.threshold, &methods, &analysis)?;
    }

    if which.contains(&WhichArg::Rcq) {
        run_rcq(args, &utterances, &methods, &analysis)?;
    }

    write_provenance(
        &args.out,
        &Provenance {
            command: "eval",
            version: 1,
            seed: Some(args.seed),
            config_sha256: Some(config_hash(&analysis)?),
        },
    )?;
    println!(
        "eval: wrote reports for {} methods to {} (EER {:.6}%)",
        methods.len(),
        args.out.display(),
        base_eer.eer_percent
    );
    Ok(())
}

fn run_partial(
    args: &EvalArgs,
    _params: &ModelParams,
    utterances: &[Utterance],
    scores: &[f64],
    threshold: f64,
    methods: &[MethodHeatmaps],
    analysis: &AnalysisConfig,
) -> Result<()> {
    let partial_idx: Vec<usize> = (0..utterances.len())
        .filter(|&i| utterances[i].label == Label::Partial)
        .collect();
    if partial_idx.is_empty() {
        return Err(Error::Data(
            "partial report requested but the manifest has no partial utterances".into(),
        ));
    }

    let mut table2: Vec<Table2Row> = Vec::new();
    let mut rcq_reports: Vec<(String, RcqReport)> = Vec::new();
    for m in methods {
        // RCQ over BR/SR categories on the partial subset.
        let region_maps: Vec<CategoryMap> = partial_idx
            .iter()
            .map(|&i| CategoryMap::from_regions(utterances[i].regions.as_ref().unwrap()))
            .collect();
        let pairs: Vec<(&Heatmap, &CategoryMap)> = partial_idx
            .iter()
            .zip(&region_maps)
            .map(|(&i, c)| (&m.maps[i], c))
            .collect();
        let mut report = rcq(&pairs, "partial")?;
        if report.degenerate {
            return Err(Error::Degenerate(format!(
                "partial RCQ for {} degenerated: all heatmap mass is zero",
                m.name
            )));
        }
        normalize_rcq(&mut report);
        let norm_of = |cat: &str| {
            report
                .entries
                .iter()
                .find(|e| e.category == cat)
                .and_then(|e| e.normalized)
                .unwrap_or(f64::NAN)
        };

        // Localization over predicted-spoof partial utterances by default.
        let selected: Vec<usize> = partial_idx
            .iter()
            .copied()
            .filter(|&i| analysis.localization_all_utterances || scores[i] >= threshold)
            .collect();
        if selected.is_empty() {
            return Err(Error::Data(
                "no partial utterances predicted spoof; localization undefined".into(),
            ));
        }
        let (rma_sum, rra_sum, counted) = selected
            .par_iter()
            .map(|&i| {
                let gt: Vec<bool> = utterances[i]
                    .regions
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|&r| r == RegionLabel::Sr)
                    .collect();
                let h = &m.maps[i];
                match (rma(&h.scores, &gt), rra(&h.scores, &gt)) {
                    (Some(a), Some(b)) => (a, b, 1usize),
                    _ => (0.0, 0.0, 0usize),
                }
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0, 0usize), |acc, v| {
                (acc.0 + v.0, acc.1 + v.1, acc.2 + v.2)
            });
        if counted == 0 {
            return Err(Error::Degenerate(format!(
                "all selected {} heatmaps are degenerate; RMA/RRA undefined",
                m.name
            )));
        }

        table2.push(Table2Row {
            method: m.name.clone(),
            rcq_br: norm_of("BR"),
            rcq_sr: norm_of("SR"),
            rma: rma_sum / counted as f64,
            rra: rra_sum / counted as f64,
        });
        rcq_reports.push((m.name.clone(), report));
    }

    write(&args.out.join("table2.csv"), &table2_csv(&table2))?;
    let refs: Vec<(String, &RcqReport)> = rcq_reports.iter().map(|(n, r)| (n.clone(), r)).collect();
    write(&args.out.join("rcq_partial.csv"), &rcq_csv(&refs))?;
    Ok(())
}

fn run_rcq(
    args: &EvalArgs,
    utterances: &[Utterance],
    methods: &[MethodHeatmaps],
    analysis: &AnalysisConfig,
) -> Result<()> {
    // The bool selects the bona fide side; partial utterances count as spoof.
    let subsets: Vec<(&str, bool)> = match args.subset {
        SubsetArg::Bonafide => vec![("bonafide", true)],
        SubsetArg::Spoof => vec![("spoof", false)],
        SubsetArg::All => vec![("bonafide", true), ("spoof", false)],
    };

    // Category maps are method-independent; build once per utterance.
    let vad_maps: Vec<CategoryMap> = utterances
        .par_iter()
        .map(|u| energy_vad(&u.waveform, &analysis.vad))
        .collect();
    let tert_maps: Vec<CategoryMap> = utterances
        .par_iter()
        .zip(&vad_maps)
        .map(|(u, vm)| energy_tertiles(&u.waveform, vm, &analysis.vad, &analysis.tertiles))
        .collect::<Result<Vec<_>>>()?;

    let mut reports: Vec<(String, RcqReport)> = Vec::new();
    for m in methods {
        for &(subset_name, want_bonafide) in &subsets {
            let idx: Vec<usize> = (0..utterances.len())
                .filter(|&i| (utterances[i].label == Label::Bonafide) == want_bonafide)
                .collect();
            if idx.is_empty() {
                continue;
            }
            let vad_pairs: Vec<(&Heatmap, &CategoryMap)> =
                idx.iter().map(|&i| (&m.maps[i], &vad_maps[i])).collect();
            let tert_pairs: Vec<(&Heatmap, &CategoryMap)> =
                idx.iter().map(|&i| (&m.maps[i], &tert_maps[i])).collect();
            let speech_report = rcq(&vad_pairs, subset_name)?;
            let mut merged = rcq(&tert_pairs, subset_name)?;
            if merged.degenerate || speech_report.degenerate {
                return Err(Error::Degenerate(format!(
                    "RCQ for {} on subset {subset_name} degenerated: zero heatmap mass",
                    m.name
                )));
            }
            // The S entry complements NS/LS/MS/HS; S_All agrees because both
            // maps cover the same samples.
            if let Some(s_entry) = speech_report.entries.into_iter().find(|e| e.category == "S") {
                merged.entries.insert(0, s_entry);
            }
            normalize_rcq(&mut merged);
            reports.push((m.name.clone(), merged));

            // User-supplied categories (e.g. phoneme classes) ride along as
            // an extra report over the same subset.
            if let Some(dir) = &args.category_files {
                let external: Vec<CategoryMap> = idx
                    .iter()
                    .map(|&i| {
                        load_category_file(
                            &dir.join(format!("{}.csv", utterances[i].id)),
                            utterances[i].waveform.len(),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                let pairs: Vec<(&Heatmap, &CategoryMap)> = idx
                    .iter()
                    .zip(&external)
                    .map(|(&i, c)| (&m.maps[i], c))
                    .collect();
                let mut report = rcq(&pairs, subset_name)?;
                if report.degenerate {
                    return Err(Error::Degenerate(format!(
                        "external-category RCQ for {} on subset {subset_name} degenerated",
                        m.name
                    )));
                }
                normalize_rcq(&mut report);
                reports.push((m.name.clone(), report));
            }
        }
    }

    let refs: Vec<(String, &RcqReport)> = reports.iter().map(|(n, r)| (n.clone(), r)).collect();
    write(&args.out.join("rcq_report.csv"), &rcq_csv(&refs))?;
    Ok(())
}
