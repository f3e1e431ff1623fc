//! Standalone SVG charts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::RunRecord;
use crate::error::Result;
use crate::optim::OptimizerKind;

use super::summary::SummaryRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        if log {
            (lo, hi) = (lo.floor(), hi.ceil());
        } else {
            let pad = 0.05 * (hi - lo);
            (lo, hi) = (lo - pad, hi + pad);
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0);
            let mut out = Vec::new();
            let mut e = self.lo;
            while e <= self.hi + 1e-9 {
                out.push((10f64.powf(e), format!("1e{}", e as i64)));
                e += step;
            }
            out
        } else {
            (0..=5)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 5.0;
                    (v, format!("{v:.3}"))
                })
                .collect()
        }
    }
}

impl Chart {
    fn usable(&self, p: (f64, f64)) -> bool {
        p.0.is_finite() && p.1.is_finite() && (!self.log_x || p.0 > 0.0) && (!self.log_y || p.1 > 0.0)
    }

    pub fn to_svg(&self) -> String {
        let pts = || self.series.iter().flat_map(|s| s.points.iter().copied()).filter(|&p| self.usable(p));
        let xa = Axis::fit(pts().map(|p| p.0), self.log_x);
        let ya = Axis::fit(pts().map(|p| p.1), self.log_y);
        let pw = WIDTH - MARGIN_L - MARGIN_R;
        let ph = HEIGHT - MARGIN_T - MARGIN_B;
        let sx = |x: f64| MARGIN_L + xa.frac(x) * pw;
        let sy = |y: f64| MARGIN_T + (1.0 - ya.frac(y)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, MARGIN_L + pw / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for (v, label) in xa.ticks() {
            let x = sx(v);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{MARGIN_T}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, MARGIN_T + ph);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, MARGIN_T + ph + 16.0, escape(&label));
        }
        for (v, label) in ya.ticks() {
            let y = sy(v);
            let _ = writeln!(s, r##"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, MARGIN_L + pw);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN_L - 6.0, y + 4.0, escape(&label));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, MARGIN_L + pw / 2.0, HEIGHT - 14.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            MARGIN_T + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let visible: Vec<(f64, f64)> = series.points.iter().copied().filter(|&p| self.usable(p)).collect();
            match series.mark {
                Mark::Line if visible.len() > 1 => {
                    let path: Vec<String> = visible.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                    let _ = writeln!(s, r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
                }
                _ => {
                    for &(x, y) in &visible {
                        let _ = writeln!(
                            s,
                            r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="4" fill="{color}"><title>{}: ({x:e}, {y:e})</title></circle>"#,
                            sx(x),
                            sy(y),
                            escape(&series.name)
                        );
                    }
                }
            }
            let ly = MARGIN_T + 14.0 + 18.0 * i as f64;
            let lx = MARGIN_L + pw + 12.0;
            let _ = writeln!(s, r#"<rect x="{lx}" y="{:.2}" width="12" height="12" fill="{color}"/>"#, ly - 10.0);
            let _ = writeln!(s, r#"<text x="{}" y="{ly:.2}">{}</text>"#, lx + 18.0, escape(&series.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Median final MSE against β, one line per optimizer and architecture.
pub fn mse_vs_beta_chart(rows: &[SummaryRow]) -> Chart {
    let mut series: Vec<Series> = Vec::new();
    for kind in OptimizerKind::ALL {
        let mut archs: Vec<&str> = rows.iter().filter(|r| r.key.optimizer == kind).map(|r| r.key.arch.as_str()).collect();
        archs.dedup();
        for arch in archs {
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.key.optimizer == kind && r.key.arch == arch)
                .filter_map(|r| r.median_final_mse.map(|m| (r.key.beta, m)))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            series.push(Series { name: format!("{kind} {arch}"), points: pts, mark: Mark::Line });
        }
    }
    Chart {
        title: "Median final MSE".into(),
        x_label: "beta".into(),
        y_label: "MSE".into(),
        log_x: false,
        log_y: true,
        series,
    }
}

/// Final MSE against final κ_ω, one point per summary row.
pub fn mse_vs_curvature_chart(rows: &[SummaryRow]) -> Chart {
    let series = OptimizerKind::ALL
        .iter()
        .map(|&kind| Series {
            name: kind.to_string(),
            points: rows
                .iter()
                .filter(|r| r.key.optimizer == kind)
                .filter_map(|r| Some((r.median_final_kappa_omega?, r.median_final_mse?)))
                .collect(),
            mark: Mark::Points,
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    Chart {
        title: "Final MSE against final curvature".into(),
        x_label: "kappa_omega".into(),
        y_label: "MSE".into(),
        log_x: true,
        log_y: true,
        series,
    }
}

/// Train loss decomposition of one run.
pub fn loss_chart(record: &RunRecord) -> Chart {
    let pick = |f: fn(&crate::analysis::EpochRecord) -> f64| record.epochs.iter().map(|e| (e.epoch as f64, f(e))).collect();
    Chart {
        title: format!("{} lr={} beta={} {} seed {}", record.key.optimizer, record.key.lr, record.key.beta, record.key.arch, record.init_seed),
        x_label: "epoch".into(),
        y_label: "train loss".into(),
        log_x: false,
        log_y: true,
        series: vec![
            Series { name: "Total".into(), points: pick(|e| e.train.total), mark: Mark::Line },
            Series { name: "IC".into(), points: pick(|e| e.train.ic), mark: Mark::Line },
            Series { name: "Bulk".into(), points: pick(|e| e.train.bulk), mark: Mark::Line },
            Series { name: "BC".into(), points: pick(|e| e.train.bc), mark: Mark::Line },
        ],
    }
}

/// Writes the summary charts (when `rows` is nonempty) and one loss chart
/// per run into `dir`. Returns the files written.
pub fn emit_plots(rows: &[SummaryRow], records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if rows.is_empty() && records.is_empty() {
        return Ok(written);
    }
    fs::create_dir_all(dir)?;
    let mut save = |name: String, chart: Chart| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, chart.to_svg())?;
        written.push(path);
        Ok(())
    };
    if !rows.is_empty() {
        save("median_mse_vs_beta.svg".into(), mse_vs_beta_chart(rows))?;
        save("mse_vs_kappa_omega.svg".into(), mse_vs_curvature_chart(rows))?;
    }
    for r in records {
        let name = format!(
            "loss_{}{}_beta{}_{}_seed{}.svg",
            r.key.optimizer,
            r.key.lr,
            r.key.beta,
            r.key.arch.replace(['[', ']'], "").replace(',', "-"),
            r.init_seed
        );
        save(name, loss_chart(r))?;
    }
    Ok(written)
}
