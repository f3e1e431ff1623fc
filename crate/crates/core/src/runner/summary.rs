use std::fs;
use std::path::Path;

use crate::analysis::{final_scatter, median, trajectory_spearman, CurvatureMeasure, RunKey, RunRecord, RunStatus};
use crate::error::{Error, Result};

use super::csv::{fmt_f64, fmt_opt, parse_f64, parse_opt};

pub const SUMMARY_HEADER: &str = "optimizer,beta,arch,lr,median_final_mse,median_final_kappa_omega,\
median_final_kappa_t,spearman_kw_mse,spearman_kt_mse,n_diverged";

pub const SCATTER_HEADER: &str =
    "optimizer,beta,arch,lr,init_seed,status,final_kappa_omega,final_kappa_t,final_mse,spearman_kw_mse,spearman_kt_mse";

/// Written in place of the median error when every run of a group diverged.
pub const DIVERGED_MARKER: &str = "diverged";

/// Aggregates for one configuration. Medians and correlations use the runs
/// that did not diverge; `None` means nothing was available.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub key: RunKey,
    pub median_final_mse: Option<f64>,
    pub median_final_kappa_omega: Option<f64>,
    pub median_final_kappa_t: Option<f64>,
    /// Median over runs of the whole-trajectory ρ(κ_ω, MSE).
    pub spearman_kw_mse: Option<f64>,
    pub spearman_kt_mse: Option<f64>,
    pub n_runs: usize,
    pub n_diverged: usize,
}

/// Groups runs by configuration, in a deterministic order.
pub fn group_runs(records: &[RunRecord]) -> Vec<(RunKey, Vec<&RunRecord>)> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp_key(&b.key).then(a.init_seed.cmp(&b.init_seed)));
    let mut groups: Vec<(RunKey, Vec<&RunRecord>)> = Vec::new();
    for r in sorted {
        match groups.last_mut() {
            Some((k, v)) if k.cmp_key(&r.key).is_eq() => v.push(r),
            _ => groups.push((r.key.clone(), vec![r])),
        }
    }
    groups
}

fn rho(record: &RunRecord, m: CurvatureMeasure) -> Option<f64> {
    trajectory_spearman(record, m, None).ok().map(|c| c.rho)
}

fn median_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().filter(|x| x.is_finite()).collect();
    median(&v)
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    group_runs(records)
        .into_iter()
        .map(|(key, runs)| {
            let ok: Vec<&RunRecord> = runs.iter().copied().filter(|r| r.status != RunStatus::Diverged).collect();
            let last = |f: fn(&crate::analysis::EpochRecord) -> Option<f64>| median_of(ok.iter().map(|r| r.last().and_then(f)));
            SummaryRow {
                key,
                median_final_mse: last(|e| Some(e.mse)),
                median_final_kappa_omega: last(|e| e.kappa_omega),
                median_final_kappa_t: last(|e| e.kappa_t),
                spearman_kw_mse: median_of(ok.iter().map(|r| rho(r, CurvatureMeasure::KappaOmega))),
                spearman_kt_mse: median_of(ok.iter().map(|r| rho(r, CurvatureMeasure::KappaT))),
                n_runs: runs.len(),
                n_diverged: runs.len() - ok.len(),
            }
        })
        .collect()
}

fn key_fields(k: &RunKey) -> String {
    format!("{},{},{},{}", k.optimizer, fmt_f64(k.beta), csv_text(&k.arch), fmt_f64(k.lr))
}

/// Quotes a field containing commas, as custom architecture labels do.
fn csv_text(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

/// Splits one CSV line, honouring double-quoted fields without escapes.
fn split_line(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in line.chars() {
        match c {
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

pub fn format_summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let mse = match r.median_final_mse {
            Some(v) => fmt_f64(v),
            None if r.n_runs > 0 && r.n_diverged == r.n_runs => DIVERGED_MARKER.to_string(),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            key_fields(&r.key),
            mse,
            fmt_opt(r.median_final_kappa_omega),
            fmt_opt(r.median_final_kappa_t),
            fmt_opt(r.spearman_kw_mse),
            fmt_opt(r.spearman_kt_mse),
            r.n_diverged
        ));
    }
    out
}

/// Parses a summary table. `n_runs` is not stored and is reconstructed as
/// the diverged count when the group is marked diverged, else left at 0.
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == SUMMARY_HEADER => {}
        _ => return Err(Error::Parse("unexpected summary CSV header".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f = split_line(line);
        if f.len() != 10 {
            return Err(Error::Parse(format!("line {n}: expected 10 fields, got {}", f.len())));
        }
        let n_diverged: usize = f[9].trim().parse().map_err(|_| Error::Parse(format!("line {n}: bad count '{}'", f[9])))?;
        let all_diverged = f[4].trim() == DIVERGED_MARKER;
        rows.push(SummaryRow {
            key: RunKey { optimizer: f[0].parse()?, beta: parse_f64(&f[1], n)?, arch: f[2].clone(), lr: parse_f64(&f[3], n)? },
            median_final_mse: if all_diverged { None } else { parse_opt(&f[4], n)? },
            median_final_kappa_omega: parse_opt(&f[5], n)?,
            median_final_kappa_t: parse_opt(&f[6], n)?,
            spearman_kw_mse: parse_opt(&f[7], n)?,
            spearman_kt_mse: parse_opt(&f[8], n)?,
            n_runs: if all_diverged { n_diverged } else { 0 },
            n_diverged,
        });
    }
    Ok(rows)
}

/// Final curvature, final error and per-run correlations, one line per run.
pub fn format_scatter_csv(records: &[RunRecord]) -> String {
    let mut out = format!("{SCATTER_HEADER}\n");
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp_key(&b.key).then(a.init_seed.cmp(&b.init_seed)));
    for r in sorted {
        let p = &final_scatter(std::slice::from_ref(r))[0];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            key_fields(&p.key),
            p.init_seed,
            p.status,
            fmt_opt(p.kappa_omega),
            fmt_opt(p.kappa_t),
            fmt_opt(p.mse),
            fmt_opt(rho(r, CurvatureMeasure::KappaOmega)),
            fmt_opt(rho(r, CurvatureMeasure::KappaT)),
        ));
    }
    out
}

pub fn write_summary(records: &[RunRecord], dir: &Path) -> Result<Vec<SummaryRow>> {
    fs::create_dir_all(dir)?;
    let rows = summarize(records);
    fs::write(dir.join("summary.csv"), format_summary_csv(&rows))?;
    fs::write(dir.join("final_scatter.csv"), format_scatter_csv(records))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::EpochRecord;
    use crate::model::LossBreakdown;
    use crate::optim::OptimizerKind;

    fn run(seed: u64, status: RunStatus, mse: &[f64], kw: &[Option<f64>]) -> RunRecord {
        let z = LossBreakdown::new(0.0, 0.0, 0.0);
        RunRecord {
            key: RunKey { optimizer: OptimizerKind::Lbfgs, beta: 1.0, arch: "S".into(), lr: 0.1 },
            data_seed: 0,
            init_seed: seed,
            status,
            epochs: mse
                .iter()
                .zip(kw)
                .enumerate()
                .map(|(i, (&m, &k))| EpochRecord { epoch: i, train: z, test: z, mse: m, kappa_t: k, kappa_omega: k, cos_theta: None })
                .collect(),
        }
    }

    #[test]
    fn single_run_group() {
        let r = run(0, RunStatus::Completed, &[0.5, 0.25], &[None, None]);
        let s = summarize(&[r]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].median_final_mse, Some(0.25));
        assert_eq!(s[0].n_diverged, 0);
    }

    #[test]
    fn all_diverged_group_is_marked() {
        let runs = vec![run(0, RunStatus::Diverged, &[1e7], &[None]), run(1, RunStatus::Diverged, &[1e8], &[None])];
        let rows = summarize(&runs);
        assert_eq!((rows[0].median_final_mse, rows[0].n_diverged), (None, 2));
        let text = format_summary_csv(&rows);
        assert_eq!(text.lines().nth(1).unwrap(), "LBFGS,1.0,S,0.1,diverged,,,,,2");
        assert_eq!(parse_summary_csv(&text).unwrap(), rows);
    }

    #[test]
    fn anti_monotone_series_gives_minus_one() {
        let r = run(0, RunStatus::Completed, &[0.4, 0.3, 0.2, 0.1], &[None, Some(1.0), Some(2.0), Some(3.0)]);
        let s = summarize(&[r]);
        assert_eq!(s[0].spearman_kw_mse, Some(-1.0));
        assert_eq!(s[0].spearman_kt_mse, Some(-1.0));
    }

    #[test]
    fn groups_are_ordered_and_split() {
        let mut a = run(1, RunStatus::Completed, &[0.1], &[None]);
        let b = run(0, RunStatus::Completed, &[0.3], &[None]);
        a.key.beta = 5.0;
        let rows = summarize(&[a, b]);
        assert_eq!(rows.iter().map(|r| r.key.beta).collect::<Vec<_>>(), vec![1.0, 5.0]);
    }

    #[test]
    fn custom_arch_label_survives_csv() {
        let mut r = run(0, RunStatus::Completed, &[0.1], &[None]);
        r.key.arch = "[2,8,1]".into();
        let rows = summarize(&[r]);
        let mut back = parse_summary_csv(&format_summary_csv(&rows)).unwrap();
        back[0].n_runs = rows[0].n_runs;
        assert_eq!(back, rows);
    }
}
