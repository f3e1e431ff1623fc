//! Local curvature of a discrete training trajectory.
//!
//! With consecutive steps `V_{k-1}` and `V_k` and
//! `a = ⟨V_k, V_k⟩, b = ⟨V_{k-1}, V_k⟩, c = ⟨V_{k-1}, V_{k-1}⟩`:
//!
//! ```text
//! κ_t = sqrt(c − b²/a) / sqrt(a)       (rate of turning per step)
//! κ_ω = κ_t / ‖V_k‖                     (turning per unit arc length)
//! ```

use crate::error::{Error, Result};
use crate::kernels::dot;

/// Relative band around zero in which `c − b²/a` is treated as rounding noise.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// One parameter-space step `V_k = ω_{k+1} − ω_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDelta {
    pub step_index: usize,
    pub v: Vec<f64>,
}

impl StepDelta {
    pub fn between(step_index: usize, from: &[f64], to: &[f64]) -> Self {
        Self { step_index, v: to.iter().zip(from).map(|(b, a)| b - a).collect() }
    }
}

/// Telemetry for one step. `None` marks a quantity that is undefined because a
/// step had zero length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    pub step_index: usize,
    pub kappa_t: Option<f64>,
    pub kappa_omega: Option<f64>,
    /// `‖V_k‖`.
    pub speed: f64,
    pub cos_theta: Option<f64>,
}

fn check_lengths(prev: &[f64], curr: &[f64]) -> Result<()> {
    if prev.len() != curr.len() {
        return Err(Error::config(format!("step lengths differ: {} vs {}", prev.len(), curr.len())));
    }
    Ok(())
}

/// `c − b²/a`, the squared component of `V_{k-1}` orthogonal to `V_k`.
fn orthogonal_sq(a: f64, b: f64, c: f64) -> Result<f64> {
    let diff = c - b * b / a;
    if diff.abs() <= CLAMP_TOLERANCE * c {
        Ok(0.0)
    } else if diff < 0.0 {
        Err(Error::Internal(format!("Cauchy-Schwarz violated: c - b²/a = {diff:e} with c = {c:e}")))
    } else {
        Ok(diff)
    }
}

pub fn kappa_t(prev: &[f64], curr: &[f64]) -> Result<Option<f64>> {
    check_lengths(prev, curr)?;
    let a = dot(curr, curr);
    if a == 0.0 {
        return Ok(None);
    }
    let b = dot(prev, curr);
    let c = dot(prev, prev);
    Ok(Some(orthogonal_sq(a, b, c)?.sqrt() / a.sqrt()))
}

pub fn kappa_omega(prev: &[f64], curr: &[f64]) -> Result<Option<f64>> {
    check_lengths(prev, curr)?;
    let a = dot(curr, curr);
    if a == 0.0 {
        return Ok(None);
    }
    let b = dot(prev, curr);
    let c = dot(prev, prev);
    Ok(Some(orthogonal_sq(a, b, c)?.sqrt() / a))
}

pub fn cosine_similarity(prev: &[f64], curr: &[f64]) -> Result<Option<f64>> {
    check_lengths(prev, curr)?;
    let np = dot(prev, prev).sqrt();
    let nc = dot(curr, curr).sqrt();
    if np == 0.0 || nc == 0.0 {
        return Ok(None);
    }
    Ok(Some((dot(prev, curr) / (np * nc)).clamp(-1.0, 1.0)))
}

/// All telemetry for the step pair `(V_{k-1}, V_k)`, sharing the dot products.
pub fn sample(step_index: usize, prev: &[f64], curr: &[f64]) -> Result<CurvatureSample> {
    check_lengths(prev, curr)?;
    let a = dot(curr, curr);
    let b = dot(prev, curr);
    let c = dot(prev, prev);
    let speed = a.sqrt();
    let (kappa_t, kappa_omega) = if a == 0.0 {
        (None, None)
    } else {
        let kt = orthogonal_sq(a, b, c)?.sqrt() / speed;
        (Some(kt), Some(kt / speed))
    };
    let cos_theta = if a == 0.0 || c == 0.0 { None } else { Some((b / (speed * c.sqrt())).clamp(-1.0, 1.0)) };
    Ok(CurvatureSample { step_index, kappa_t, kappa_omega, speed, cos_theta })
}

/// Streaming curvature tracker.
///
/// Keeps only the previous snapshot and the previous step, so memory does
/// not grow with trajectory length.
#[derive(Debug, Clone, Default)]
pub struct CurvatureTracker {
    last_snapshot: Option<Vec<f64>>,
    last_step: Option<Vec<f64>>,
    snapshots_seen: usize,
}

impl CurvatureTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds snapshot `ω_k`. Returns a sample once two steps are known, i.e.
    /// from the third snapshot on; its `step_index` is `k`.
    pub fn push(&mut self, snapshot: &[f64]) -> Result<Option<CurvatureSample>> {
        let k = self.snapshots_seen;
        self.snapshots_seen += 1;
        let Some(prev_snapshot) = self.last_snapshot.as_mut() else {
            self.last_snapshot = Some(snapshot.to_vec());
            return Ok(None);
        };
        check_lengths(prev_snapshot, snapshot)?;
        let step: Vec<f64> = snapshot.iter().zip(prev_snapshot.iter()).map(|(n, o)| n - o).collect();
        prev_snapshot.copy_from_slice(snapshot);
        let out = match &self.last_step {
            Some(prev_step) => Some(sample(k, prev_step, &step)?),
            None => None,
        };
        self.last_step = Some(step);
        Ok(out)
    }

    /// Number of snapshots consumed so far.
    pub fn len(&self) -> usize {
        self.snapshots_seen
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots_seen == 0
    }
}

/// Runs a tracker over a whole sequence of snapshots.
pub fn track<'a>(snapshots: impl IntoIterator<Item = &'a [f64]>) -> Result<Vec<CurvatureSample>> {
    let mut tracker = CurvatureTracker::new();
    let mut out = Vec::new();
    for s in snapshots {
        if let Some(sample) = tracker.push(s)? {
            out.push(sample);
        }
    }
    Ok(out)
}
