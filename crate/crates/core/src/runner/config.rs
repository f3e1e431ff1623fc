use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{MlpArchitecture, SamplingConfig, UniformGrid};
use crate::optim::{OptimizerConfig, OptimizerKind};

/// Network size: one of the two reference architectures or explicit widths.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ArchChoice {
    /// `[2,25,25,1]`
    Small,
    /// `[2,50,50,50,50,1]`
    Large,
    Custom(Vec<usize>),
}

impl ArchChoice {
    pub fn build(&self) -> Result<MlpArchitecture> {
        match self {
            ArchChoice::Small => Ok(MlpArchitecture::small()),
            ArchChoice::Large => Ok(MlpArchitecture::large()),
            ArchChoice::Custom(sizes) => MlpArchitecture::new(sizes.clone()),
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    /// Short tag for file names.
    pub fn file_tag(&self) -> String {
        match self {
            ArchChoice::Small => "NN0".into(),
            ArchChoice::Large => "NN1".into(),
            ArchChoice::Custom(s) => {
                format!("NNc{}", s.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("-"))
            }
        }
    }
}

impl fmt::Display for ArchChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchChoice::Small => f.write_str("S"),
            ArchChoice::Large => f.write_str("L"),
            ArchChoice::Custom(s) => {
                let body: Vec<String> = s.iter().map(|w| w.to_string()).collect();
                write!(f, "[{}]", body.join(","))
            }
        }
    }
}

impl FromStr for ArchChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "S" | "s" => return Ok(ArchChoice::Small),
            "L" | "l" => return Ok(ArchChoice::Large),
            _ => {}
        }
        let body = s.trim_start_matches('[').trim_end_matches(']');
        let sizes = body
            .split(',')
            .map(|w| w.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad layer width '{w}' in '{s}'"))))
            .collect::<Result<Vec<_>>>()?;
        MlpArchitecture::new(sizes.clone())?;
        Ok(match sizes.as_slice() {
            [2, 25, 25, 1] => ArchChoice::Small,
            [2, 50, 50, 50, 50, 1] => ArchChoice::Large,
            _ => ArchChoice::Custom(sizes),
        })
    }
}

/// Wave speeds at which the reference learning rates were tuned.
const TUNED_BETAS: [f64; 4] = [1.0, 5.0, 15.0, 30.0];

/// Learning rates with the lowest test loss in the reference grid search,
/// per tuned β, ordered BBI, LBFGS, GD, Adam.
const SMALL_LRS: [[f64; 4]; 4] =
    [[0.1, 0.1, 0.01, 0.001], [0.01, 0.1, 0.01, 0.001], [0.01, 0.01, 0.0001, 0.01], [0.01, 0.01, 0.001, 0.01]];
const LARGE_LRS: [[f64; 4]; 4] =
    [[0.01, 0.1, 0.01, 0.0001], [0.01, 0.1, 0.01, 0.001], [0.01, 1.0, 0.01, 0.001], [0.01, 0.001, 0.001, 0.001]];

/// Tuned learning rate for the tuned β closest to `beta` on a log scale.
/// Custom architectures use the small network's rates.
pub fn default_learning_rate(kind: OptimizerKind, arch: &ArchChoice, beta: f64) -> f64 {
    let row = TUNED_BETAS
        .iter()
        .map(|b| (beta.ln() - b.ln()).abs())
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(0, |(i, _)| i);
    let col = match kind {
        OptimizerKind::Bbi => 0,
        OptimizerKind::Lbfgs => 1,
        OptimizerKind::Gd => 2,
        OptimizerKind::Adam => 3,
    };
    let table = if *arch == ArchChoice::Large { &LARGE_LRS } else { &SMALL_LRS };
    table[row][col]
}

/// Epoch budget when none is given: LBFGS needs far fewer epochs.
pub fn default_epochs(kind: OptimizerKind, beta: f64) -> usize {
    match kind {
        OptimizerKind::Lbfgs if beta <= 5.0 => 1000,
        OptimizerKind::Lbfgs => 2000,
        _ => 5000,
    }
}

/// Loss level above which a run counts as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Everything needed to reproduce one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub beta: f64,
    pub arch: ArchChoice,
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    pub data_seed: u64,
    /// Initialization seed of the first run; a batch uses consecutive seeds.
    pub init_seed: u64,
    /// Runs per batch.
    pub seeds: usize,
    pub sampling: SamplingConfig,
    /// Grid on which the error against the exact solution is measured.
    pub mse_grid: UniformGrid,
}

impl ExperimentConfig {
    /// Reference settings for an optimizer, β and architecture.
    pub fn new(kind: OptimizerKind, beta: f64, arch: ArchChoice) -> Self {
        let lr = default_learning_rate(kind, &arch, beta);
        Self {
            beta,
            arch,
            optimizer: OptimizerConfig::new(kind, lr),
            epochs: default_epochs(kind, beta),
            data_seed: 0,
            init_seed: 0,
            seeds: 10,
            sampling: SamplingConfig::default(),
            mse_grid: UniformGrid::REFERENCE,
        }
    }

    pub fn with_lr(mut self, lr: f64) -> Self {
        self.optimizer.learning_rate = lr;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_seeds(mut self, data_seed: u64, init_seed: u64) -> Self {
        self.data_seed = data_seed;
        self.init_seed = init_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!("beta must be positive, got {}", self.beta)));
        }
        self.arch.build()?;
        self.optimizer.validate()?;
        if self.seeds == 0 {
            return Err(Error::config("seeds must be at least 1"));
        }
        UniformGrid::new(self.mse_grid.nx, self.mse_grid.nt)?;
        Ok(())
    }

    /// Resolves a configuration from `key = value` entries. Missing learning
    /// rate and epoch count fall back to the per-optimizer defaults.
    pub fn from_entries(entries: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| entries.get(k).map(String::as_str);
        let kind: OptimizerKind = get("optimizer").ok_or_else(|| Error::config("missing key 'optimizer'"))?.parse()?;
        let beta = get("beta").map(|v| parse_num::<f64>("beta", v)).transpose()?.unwrap_or(1.0);
        let arch: ArchChoice = get("arch").map(str::parse).transpose()?.unwrap_or(ArchChoice::Small);
        let mut cfg = ExperimentConfig::new(kind, beta, arch);

        for (key, value) in entries {
            let v = value.as_str();
            let o = &mut cfg.optimizer;
            match key.as_str() {
                "optimizer" | "beta" | "arch" => {}
                "lr" => o.learning_rate = parse_num("lr", v)?,
                "epochs" => cfg.epochs = parse_num("epochs", v)?,
                "seeds" => cfg.seeds = parse_num("seeds", v)?,
                "data_seed" => cfg.data_seed = parse_num("data_seed", v)?,
                "init_seed" => cfg.init_seed = parse_num("init_seed", v)?,
                "adam.beta1" => o.adam.beta1 = parse_num(key, v)?,
                "adam.beta2" => o.adam.beta2 = parse_num(key, v)?,
                "adam.eps" => o.adam.eps = parse_num(key, v)?,
                "adam.weight_decay" => o.adam.weight_decay = parse_num(key, v)?,
                "adam.batch_size" => o.adam.batch_size = parse_num(key, v)?,
                "lbfgs.max_iter" => o.lbfgs.max_iter = parse_num(key, v)?,
                "lbfgs.tolerance_grad" => o.lbfgs.tolerance_grad = parse_num(key, v)?,
                "lbfgs.tolerance_change" => o.lbfgs.tolerance_change = parse_num(key, v)?,
                "lbfgs.history_size" => o.lbfgs.history_size = parse_num(key, v)?,
                "lbfgs.line_search" => o.lbfgs.line_search = parse_bool(key, v)?,
                "bbi.delta_v" => o.bbi.delta_v = parse_num(key, v)?,
                "bbi.delta_e" => o.bbi.delta_e = parse_num(key, v)?,
                "bbi.n_bounces" => o.bbi.n_bounces = parse_num(key, v)?,
                "bbi.t0" => o.bbi.t0 = parse_num(key, v)?,
                "bbi.t1" => o.bbi.t1 = parse_num(key, v)?,
                "bbi.progress_threshold" => o.bbi.progress_threshold = parse_num(key, v)?,
                "bbi.rescale_energy" => o.bbi.rescale_energy = parse_bool(key, v)?,
                "data.n_u" => cfg.sampling.n_u = parse_num(key, v)?,
                "data.n_f" => cfg.sampling.n_f = parse_num(key, v)?,
                "data.n_b" => cfg.sampling.n_b = parse_num(key, v)?,
                "data.nx" => cfg.sampling.grid.nx = parse_num(key, v)?,
                "data.nt" => cfg.sampling.grid.nt = parse_num(key, v)?,
                "data.train_fraction" => cfg.sampling.train_fraction = parse_num(key, v)?,
                "mse.nx" => cfg.mse_grid.nx = parse_num(key, v)?,
                "mse.nt" => cfg.mse_grid.nt = parse_num(key, v)?,
                other => return Err(Error::config(format!("unknown config key '{other}'"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every setting as `key = value` entries; inverse of [`Self::from_entries`].
    pub fn to_entries(&self) -> BTreeMap<String, String> {
        let o = &self.optimizer;
        let pairs: Vec<(&str, String)> = vec![
            ("optimizer", o.kind.to_string()),
            ("lr", format!("{:?}", o.learning_rate)),
            ("beta", format!("{:?}", self.beta)),
            ("arch", self.arch.label()),
            ("epochs", self.epochs.to_string()),
            ("seeds", self.seeds.to_string()),
            ("data_seed", self.data_seed.to_string()),
            ("init_seed", self.init_seed.to_string()),
            ("adam.beta1", format!("{:?}", o.adam.beta1)),
            ("adam.beta2", format!("{:?}", o.adam.beta2)),
            ("adam.eps", format!("{:?}", o.adam.eps)),
            ("adam.weight_decay", format!("{:?}", o.adam.weight_decay)),
            ("adam.batch_size", o.adam.batch_size.to_string()),
            ("lbfgs.max_iter", o.lbfgs.max_iter.to_string()),
            ("lbfgs.tolerance_grad", format!("{:?}", o.lbfgs.tolerance_grad)),
            ("lbfgs.tolerance_change", format!("{:?}", o.lbfgs.tolerance_change)),
            ("lbfgs.history_size", o.lbfgs.history_size.to_string()),
            ("lbfgs.line_search", o.lbfgs.line_search.to_string()),
            ("bbi.delta_v", format!("{:?}", o.bbi.delta_v)),
            ("bbi.delta_e", format!("{:?}", o.bbi.delta_e)),
            ("bbi.n_bounces", o.bbi.n_bounces.to_string()),
            ("bbi.t0", o.bbi.t0.to_string()),
            ("bbi.t1", o.bbi.t1.to_string()),
            ("bbi.progress_threshold", format!("{:?}", o.bbi.progress_threshold)),
            ("bbi.rescale_energy", o.bbi.rescale_energy.to_string()),
            ("data.n_u", self.sampling.n_u.to_string()),
            ("data.n_f", self.sampling.n_f.to_string()),
            ("data.n_b", self.sampling.n_b.to_string()),
            ("data.nx", self.sampling.grid.nx.to_string()),
            ("data.nt", self.sampling.grid.nt.to_string()),
            ("data.train_fraction", format!("{:?}", self.sampling.train_fraction)),
            ("mse.nx", self.mse_grid.nx.to_string()),
            ("mse.nt", self.mse_grid.nt.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_config_text(&self) -> String {
        format_entries(&self.to_entries())
    }

    pub fn from_config_text(text: &str) -> Result<Self> {
        Self::from_entries(&parse_entries(text)?)
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Parse(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Parse(format!("invalid boolean '{value}' for '{key}'"))),
    }
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped;
/// a repeated key keeps its last value.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected 'key = value', got '{raw}'", n + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", n + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn format_entries(entries: &BTreeMap<String, String>) -> String {
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

pub fn read_entries(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_entries(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arch_labels() {
        assert_eq!("S".parse::<ArchChoice>().unwrap(), ArchChoice::Small);
        assert_eq!("[2,50,50,50,50,1]".parse::<ArchChoice>().unwrap(), ArchChoice::Large);
        let c: ArchChoice = "2, 8, 8, 1".parse().unwrap();
        assert_eq!(c.label(), "[2,8,8,1]");
        assert_eq!(c.file_tag(), "NNc2-8-8-1");
        assert!("[3,1]".parse::<ArchChoice>().is_err());
        assert!("M".parse::<ArchChoice>().is_err());
    }

    #[test]
    fn reference_learning_rates() {
        use OptimizerKind::*;
        let (s, l) = (ArchChoice::Small, ArchChoice::Large);
        let row = |arch: &ArchChoice, beta: f64| -> Vec<f64> {
            [Bbi, Lbfgs, Gd, Adam].iter().map(|&k| default_learning_rate(k, arch, beta)).collect()
        };
        assert_eq!(row(&s, 1.0), vec![0.1, 0.1, 0.01, 0.001]);
        assert_eq!(row(&s, 5.0), vec![0.01, 0.1, 0.01, 0.001]);
        assert_eq!(row(&s, 30.0), vec![0.01, 0.01, 0.001, 0.01]);
        assert_eq!(row(&l, 1.0), vec![0.01, 0.1, 0.01, 0.0001]);
        assert_eq!(row(&l, 15.0), vec![0.01, 1.0, 0.01, 0.001]);
        assert_eq!(row(&l, 30.0), vec![0.01, 0.001, 0.001, 0.001]);
        // untuned speeds fall back to the nearest tuned one
        assert_eq!(row(&s, 0.5), row(&s, 1.0));
        assert_eq!(row(&s, 3.0), row(&s, 5.0));
        assert_eq!(row(&s, 100.0), row(&s, 30.0));
        assert_eq!(row(&ArchChoice::Custom(vec![2, 4, 1]), 5.0), row(&s, 5.0));
    }

    #[test]
    fn epoch_defaults() {
        assert_eq!(default_epochs(OptimizerKind::Lbfgs, 1.0), 1000);
        assert_eq!(default_epochs(OptimizerKind::Lbfgs, 30.0), 2000);
        assert_eq!(default_epochs(OptimizerKind::Adam, 1.0), 5000);
    }

    #[test]
    fn parse_with_comments_and_overrides() {
        let text = "# run\noptimizer = LBFGS\nbeta = 5 # advection speed\nlbfgs.history_size = 10\nlr=0.5\nlr = 0.25\n";
        let cfg = ExperimentConfig::from_config_text(text).unwrap();
        assert_eq!(cfg.optimizer.kind, OptimizerKind::Lbfgs);
        assert_eq!(cfg.optimizer.learning_rate, 0.25);
        assert_eq!(cfg.optimizer.lbfgs.history_size, 10);
        assert_eq!(cfg.epochs, 1000);
        assert_eq!(cfg.beta, 5.0);
    }

    #[test]
    fn round_trip_through_text() {
        let mut cfg = ExperimentConfig::new(OptimizerKind::Bbi, 15.0, "2,8,1".parse().unwrap()).with_seeds(3, 7);
        cfg.optimizer.bbi.rescale_energy = false;
        cfg.optimizer.bbi.delta_e = 0.7;
        let back = ExperimentConfig::from_config_text(&cfg.to_config_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::from_config_text("lr = 1"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_config_text("optimizer = GD\nfoo = 1"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_config_text("optimizer = GD\nlr = fast"), Err(Error::Parse(_))));
        assert!(matches!(ExperimentConfig::from_config_text("optimizer = GD\nlr = -1"), Err(Error::Config(_))));
        assert!(matches!(parse_entries("no equals sign"), Err(Error::Parse(_))));
    }
}
