use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptimizerKind {
    Gd,
    Adam,
    Lbfgs,
    Bbi,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [OptimizerKind::Bbi, OptimizerKind::Lbfgs, OptimizerKind::Gd, OptimizerKind::Adam];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Gd => "GD",
            OptimizerKind::Adam => "Adam",
            OptimizerKind::Lbfgs => "LBFGS",
            OptimizerKind::Bbi => "BBI",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gd" | "sgd" => Ok(OptimizerKind::Gd),
            "adam" => Ok(OptimizerKind::Adam),
            "lbfgs" | "l-bfgs" => Ok(OptimizerKind::Lbfgs),
            "bbi" => Ok(OptimizerKind::Bbi),
            other => Err(Error::Parse(format!("unknown optimizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Target number of points per mini-batch.
    pub batch_size: usize,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0, batch_size: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsParams {
    /// Inner iterations per epoch.
    pub max_iter: usize,
    pub tolerance_grad: f64,
    pub tolerance_change: f64,
    pub history_size: usize,
    /// Strong-Wolfe line search instead of a fixed step.
    pub line_search: bool,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        Self { max_iter: 20, tolerance_grad: 1e-7, tolerance_change: 1e-9, history_size: 100, line_search: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbiParams {
    /// Shift added to the objective so the potential is positive.
    pub delta_v: f64,
    /// Extra initial energy: `E = V₀ + δE`.
    pub delta_e: f64,
    pub n_bounces: usize,
    /// A bounce fires every `t0` steps.
    pub t0: usize,
    /// Window for the progress-dependent bounce.
    pub t1: usize,
    /// Relative loss decrease over `t1` steps below which a bounce fires.
    pub progress_threshold: f64,
    pub rescale_energy: bool,
}

impl Default for BbiParams {
    fn default() -> Self {
        Self {
            delta_v: 0.0,
            delta_e: 2.0,
            n_bounces: 4,
            t0: 500,
            t1: 100,
            progress_threshold: 1e-3,
            rescale_energy: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub adam: AdamParams,
    pub lbfgs: LbfgsParams,
    pub bbi: BbiParams,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        Self {
            kind,
            learning_rate,
            adam: AdamParams::default(),
            lbfgs: LbfgsParams::default(),
            bbi: BbiParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.eps > 0.0) {
            return Err(Error::config("adam needs beta1, beta2 in [0, 1) and eps > 0"));
        }
        if a.batch_size == 0 {
            return Err(Error::config("adam batch size must be positive"));
        }
        let l = &self.lbfgs;
        if l.history_size == 0 || l.max_iter == 0 {
            return Err(Error::config("lbfgs needs history_size >= 1 and max_iter >= 1"));
        }
        if !(l.tolerance_grad >= 0.0 && l.tolerance_change >= 0.0) {
            return Err(Error::config("lbfgs tolerances must be non-negative"));
        }
        let b = &self.bbi;
        if !(b.delta_e > 0.0) {
            return Err(Error::config("bbi delta_e must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_round_trip() {
        for k in OptimizerKind::ALL {
            assert_eq!(k.name().parse::<OptimizerKind>().unwrap(), k);
        }
        assert!("rmsprop".parse::<OptimizerKind>().is_err());
    }

    #[test]
    fn validation() {
        assert!(OptimizerConfig::new(OptimizerKind::Gd, 0.1).validate().is_ok());
        assert!(OptimizerConfig::new(OptimizerKind::Gd, 0.0).validate().is_err());
        let mut c = OptimizerConfig::new(OptimizerKind::Lbfgs, 1.0);
        c.lbfgs.history_size = 0;
        assert!(c.validate().is_err());
    }
}
