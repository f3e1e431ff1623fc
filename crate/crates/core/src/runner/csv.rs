//! Run telemetry as CSV plus a `key = value` sidecar with seeds and status.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{EpochRecord, RunKey, RunRecord, RunStatus};
use crate::error::{Error, Result};
use crate::model::LossBreakdown;

use super::config::{format_entries, parse_entries, ExperimentConfig};

/// `bc_loss_*` is the initial-condition term, `bcp_loss_*` the periodic
/// boundary term and `bulk_loss_*` the PDE residual.
pub const RUN_CSV_HEADER: &str = "epoch,train_loss_total,bc_loss_train,bulk_loss_train,bcp_loss_train,\
test_loss_total,bc_loss_test,bulk_loss_test,bcp_loss_test,mse,kappa_t,kappa_omega,cos_theta";

const COLUMNS: usize = 13;

/// Shortest decimal that parses back to the same value.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub(crate) fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse(format!("line {line}: bad number '{field}'")))
}

pub(crate) fn parse_opt(field: &str, line: usize) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(field, line).map(Some)
    }
}

pub fn format_run_csv(epochs: &[EpochRecord]) -> String {
    let mut out = String::with_capacity(64 * (epochs.len() + 1));
    out.push_str(RUN_CSV_HEADER);
    out.push('\n');
    for e in epochs {
        let fields = [
            e.epoch.to_string(),
            fmt_f64(e.train.total),
            fmt_f64(e.train.ic),
            fmt_f64(e.train.bulk),
            fmt_f64(e.train.bc),
            fmt_f64(e.test.total),
            fmt_f64(e.test.ic),
            fmt_f64(e.test.bulk),
            fmt_f64(e.test.bc),
            fmt_f64(e.mse),
            fmt_opt(e.kappa_t),
            fmt_opt(e.kappa_omega),
            fmt_opt(e.cos_theta),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_run_csv(text: &str) -> Result<Vec<EpochRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == RUN_CSV_HEADER => {}
        Some((_, h)) => return Err(Error::Parse(format!("unexpected run CSV header '{h}'"))),
        None => return Err(Error::Parse("empty run CSV".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != COLUMNS {
            return Err(Error::Parse(format!("line {n}: expected {COLUMNS} fields, got {}", f.len())));
        }
        let epoch = f[0].trim().parse().map_err(|_| Error::Parse(format!("line {n}: bad epoch '{}'", f[0])))?;
        let loss = |o: usize| -> Result<LossBreakdown> {
            Ok(LossBreakdown {
                total: parse_f64(f[o], n)?,
                ic: parse_f64(f[o + 1], n)?,
                bulk: parse_f64(f[o + 2], n)?,
                bc: parse_f64(f[o + 3], n)?,
            })
        };
        out.push(EpochRecord {
            epoch,
            train: loss(1)?,
            test: loss(5)?,
            mse: parse_f64(f[9], n)?,
            kappa_t: parse_opt(f[10], n)?,
            kappa_omega: parse_opt(f[11], n)?,
            cos_theta: parse_opt(f[12], n)?,
        });
    }
    Ok(out)
}

pub fn write_run_csv(record: &RunRecord, path: &Path) -> Result<()> {
    fs::write(path, format_run_csv(&record.epochs))?;
    Ok(())
}

pub fn read_run_csv(path: &Path) -> Result<Vec<EpochRecord>> {
    parse_run_csv(&fs::read_to_string(path)?)
}

/// File stem such as `Adam0.001_beta1_NN0_seed3`.
pub fn run_file_stem(cfg: &ExperimentConfig) -> String {
    format!(
        "{}{}_beta{}_{}_seed{}",
        cfg.optimizer.kind,
        cfg.optimizer.learning_rate,
        cfg.beta,
        cfg.arch.file_tag(),
        cfg.init_seed
    )
}

/// Writes `<stem>.csv` and `<stem>.meta` into `dir`; returns the CSV path.
/// `cfg` must be the configuration of this particular run.
pub fn write_run(record: &RunRecord, cfg: &ExperimentConfig, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let stem = run_file_stem(cfg);
    let csv = dir.join(format!("{stem}.csv"));
    write_run_csv(record, &csv)?;
    let mut entries = cfg.to_entries();
    entries.insert("init_seed".into(), record.init_seed.to_string());
    entries.insert("data_seed".into(), record.data_seed.to_string());
    entries.insert("seeds".into(), "1".into());
    let mut meta = format!("# status of {stem}.csv\nstatus = {}\n", record.status);
    meta.push_str(&format_entries(&entries));
    fs::write(csv.with_extension("meta"), meta)?;
    Ok(csv)
}

/// Reads a run written by [`write_run`].
pub fn read_run(csv: &Path) -> Result<RunRecord> {
    let meta_path = csv.with_extension("meta");
    let mut entries = parse_entries(&fs::read_to_string(&meta_path)?)?;
    let status: RunStatus = entries
        .remove("status")
        .ok_or_else(|| Error::Parse(format!("{}: missing status", meta_path.display())))?
        .parse()?;
    let cfg = ExperimentConfig::from_entries(&entries)?;
    Ok(RunRecord {
        key: RunKey {
            optimizer: cfg.optimizer.kind,
            beta: cfg.beta,
            arch: cfg.arch.label(),
            lr: cfg.optimizer.learning_rate,
        },
        data_seed: cfg.data_seed,
        init_seed: cfg.init_seed,
        status,
        epochs: read_run_csv(csv)?,
    })
}

/// Every run in `dir` that has both a CSV and a sidecar, ordered by
/// configuration and seed.
pub fn load_runs(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && p.with_extension("meta").is_file())
        .collect();
    paths.sort();
    let mut runs = paths.iter().map(|p| read_run(p)).collect::<Result<Vec<_>>>()?;
    runs.sort_by(|a, b| a.key.cmp_key(&b.key).then(a.init_seed.cmp(&b.init_seed)));
    Ok(runs)
}

/// Human-readable one-line description of a run's outcome.
pub fn describe(record: &RunRecord) -> String {
    let mut s = String::new();
    let _ = write!(s, "{} lr={} beta={} arch={} seed={}: {}", record.key.optimizer, record.key.lr, record.key.beta, record.key.arch, record.init_seed, record.status);
    if let Some(last) = record.last() {
        let _ = write!(s, " after {} epochs, train loss {:.3e}, mse {:.3e}", last.epoch, last.train.total, last.mse);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::OptimizerKind;
    use crate::runner::ArchChoice;

    fn row(epoch: usize, k: Option<f64>) -> EpochRecord {
        EpochRecord {
            epoch,
            train: LossBreakdown::new(0.1, 0.2, 0.3),
            test: LossBreakdown { ic: 1e-7, bulk: 2.5, bc: 0.0, total: 1e300 },
            mse: 1.0 / 3.0,
            kappa_t: k,
            kappa_omega: k.map(|v| v * 2.0),
            cos_theta: None,
        }
    }

    #[test]
    fn header_and_row_count() {
        let text = format_run_csv(&[row(0, None), row(1, None), row(2, Some(0.5))]);
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("epoch,train_loss_total,bc_loss_train,bulk_loss_train,bcp_loss_train,test_loss_total"));
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 13);
    }

    #[test]
    fn round_trip_is_lossless() {
        let rows = vec![row(0, None), row(1, Some(f64::MIN_POSITIVE)), row(2, Some(0.1 + 0.2))];
        assert_eq!(parse_run_csv(&format_run_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(parse_run_csv("epoch,loss\n").is_err());
        let bad = format!("{RUN_CSV_HEADER}\n1,2\n");
        assert!(parse_run_csv(&bad).is_err());
    }

    #[test]
    fn file_stem() {
        let cfg = ExperimentConfig::new(OptimizerKind::Adam, 1.0, ArchChoice::Small).with_seeds(0, 3);
        assert_eq!(run_file_stem(&cfg), "Adam0.001_beta1_NN0_seed3");
        let cfg = ExperimentConfig::new(OptimizerKind::Lbfgs, 30.0, ArchChoice::Large).with_lr(1e-4);
        assert_eq!(run_file_stem(&cfg), "LBFGS0.0001_beta30_NN1_seed0");
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::new(OptimizerKind::Bbi, 5.0, ArchChoice::Small).with_seeds(2, 9);
        let record = RunRecord {
            key: crate::runner::run_key(&cfg),
            data_seed: 2,
            init_seed: 9,
            status: RunStatus::Diverged,
            epochs: vec![row(0, None)],
        };
        let path = write_run(&record, &cfg, dir.path()).unwrap();
        assert_eq!(read_run(&path).unwrap(), record);
        assert_eq!(load_runs(dir.path()).unwrap(), vec![record]);
    }
}
