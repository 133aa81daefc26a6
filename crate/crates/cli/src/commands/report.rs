//! `rlens report`: grouped bar chart of normalized RCQ values.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use rlens_core::error::{Error, Result};

use crate::provenance::hex_digest;
use crate::svg::{grouped_bar_chart, BarSeries};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// RCQ report CSV(s) produced by `rlens eval`; repeatable.
    #[arg(long = "rcq", required = true)]
    pub rcq_csvs: Vec<PathBuf>,

    /// Output SVG path.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value = "Normalized RCQ by category")]
    pub title: String,
}

pub fn run(args: &ReportArgs) -> Result<()> {
    // Categories in first-seen order across inputs; one series per
    // (file, method, subset) triple in row order.
    let mut categories: Vec<String> = Vec::new();
    let mut series: Vec<BarSeries> = Vec::new();

    for path in &args.rcq_csvs {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data(format!("{}: empty csv", path.display())))?;
        let cols: Vec<&str> = header.split(',').collect();
        let col = |name: &str| {
            cols.iter()
                .position(|&c| c == name)
                .ok_or_else(|| Error::Data(format!("{}: missing column {name}", path.display())))
        };
        let method_col = col("method")?;
        let subset_col = col("subset")?;
        let cat_col = col("category")?;
        let norm_col = col("rcq_normalized")?;

        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(Error::Data(format!(
                    "{}:{}: expected {} columns",
                    path.display(),
                    lineno + 2,
                    cols.len()
                )));
            }
            let value: f64 = fields[norm_col].parse().map_err(|_| {
                Error::Data(format!(
                    "{}:{}: rcq_normalized is not a number",
                    path.display(),
                    lineno + 2
                ))
            })?;
            let category = fields[cat_col].to_string();
            if !categories.contains(&category) {
                categories.push(category.clone());
            }
            let series_name = format!("{stem}:{}:{}", fields[method_col], fields[subset_col]);
            let cat_idx = categories.iter().position(|c| c == &category).unwrap();
            match series.iter_mut().find(|s| s.name == series_name) {
                Some(s) => s.set(cat_idx, value),
                None => {
                    let mut s = BarSeries::new(series_name);
                    s.set(cat_idx, value);
                    series.push(s);
                }
            }
        }
    }
    if series.is_empty() {
        return Err(Error::Data("no RCQ rows found in the inputs".into()));
    }

    let svg = grouped_bar_chart(&args.title, &categories, &series);
    fs::write(&args.out, &svg).map_err(|e| Error::io(&args.out, e))?;
    println!(
        "report: wrote {} ({} categories, {} series, sha256 {})",
        args.out.display(),
        categories.len(),
        series.len(),
        &hex_digest(svg.as_bytes())[..12]
    );
    Ok(())
}
