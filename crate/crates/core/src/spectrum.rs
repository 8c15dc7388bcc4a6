//! Sweeps over `lambda`: transmission spectra, resonance flags and the
//! threshold limit of junction matrices.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::cross_section;
use crate::dense::{CMatrix, C64};
use crate::error::{Error, Result};
use crate::graph::{collides, MetricGraph};
use crate::solver::{self, energy_report, SolveRequest, RCOND_THRESHOLD};

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    /// Per incident column: `sum_j |t_j|^2`.
    pub abs_t_sq: Vec<f64>,
    /// Per incident column: flux balance of the solved scattering matrix.
    pub flux_residual: Vec<f64>,
    pub rcond: f64,
    pub certified: bool,
}

/// A point between grid nodes where the system is singular to working precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resonance {
    pub lambda: f64,
    pub rcond: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Maximal runs of uncertified grid points, as `[first, last]` lambda.
    pub flagged: Vec<(f64, f64)>,
    pub resonances: Vec<Resonance>,
}

fn rcond_at(g: &MetricGraph, eps: f64, lambda: f64) -> Option<f64> {
    solver::solve(g, &SolveRequest::all(lambda, eps))
        .ok()
        .map(|s| s.rcond)
}

const GOLDEN_ITERATIONS: usize = 200;

/// Golden-section search for the smallest reciprocal condition on `[a, b]`.
fn minimize_rcond(g: &MetricGraph, eps: f64, mut a: f64, mut b: f64, threshold: f64) -> Option<Resonance> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let f = |x: f64| rcond_at(g, eps, x).unwrap_or(f64::INFINITY);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITERATIONS {
        if f1.min(f2) < 1e-3 * threshold || b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    let (lambda, rcond) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    rcond.is_finite().then_some(Resonance { lambda, rcond })
}

/// Solves the graph on `steps` equally spaced points of `[lo, hi]`.
///
/// Grid points are flagged when their own reciprocal condition is below
/// [`RCOND_THRESHOLD`], and also when a singular point is found between them:
/// every local minimum of the condition along the grid is refined by
/// golden-section search over its two neighboring cells.
pub fn sweep(g: &MetricGraph, eps: f64, lo: f64, hi: f64, steps: usize) -> Result<SweepResult> {
    sweep_with_threshold(g, eps, lo, hi, steps, RCOND_THRESHOLD)
}

/// [`sweep`] with a caller-chosen reciprocal-condition threshold.
pub fn sweep_with_threshold(
    g: &MetricGraph,
    eps: f64,
    lo: f64,
    hi: f64,
    steps: usize,
    threshold: f64,
) -> Result<SweepResult> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!("rcond threshold {threshold} must lie in (0, 1)")));
    }
    if steps < 2 {
        return Err(Error::InvalidParameter(format!("steps = {steps} must be at least 2")));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("need lo < hi, got [{lo}, {hi}]")));
    }
    g.ensure_valid()?;
    for c in &g.channels {
        for t in cross_section::ModeTable::up_to(&c.cross_section, hi * (1.0 + 1e-6) + 1.0).thresholds() {
            if (lo <= t && t <= hi) || collides(lo, t) || collides(hi, t) {
                return Err(Error::IntervalContainsThreshold {
                    lo,
                    hi,
                    threshold: t,
                    channel: c.id,
                });
            }
        }
    }
    let step = (hi - lo) / (steps - 1) as f64;
    let grid: Vec<f64> = (0..steps)
        .map(|i| if i + 1 == steps { hi } else { lo + i as f64 * step })
        .collect();
    let mut rows = grid
        .par_iter()
        .map(|&lambda| {
            let s = solver::solve(g, &SolveRequest::all(lambda, eps))?;
            let t = &s.scattering.t;
            let abs_t_sq = (0..t.ncols())
                .map(|c| (0..t.nrows()).map(|r| t[(r, c)].norm_sqr()).sum())
                .collect();
            let flux_residual = energy_report(&s.scattering).balances;
            Ok(SweepRow {
                lambda,
                abs_t_sq,
                flux_residual,
                rcond: s.rcond,
                certified: s.rcond >= threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let minima: Vec<usize> = (0..steps)
        .filter(|&i| {
            let here = rows[i].rcond;
            (i == 0 || here <= rows[i - 1].rcond) && (i + 1 == steps || here <= rows[i + 1].rcond)
        })
        .collect();
    let mut resonances: Vec<Resonance> = minima
        .par_iter()
        .filter_map(|&i| {
            let a = grid[i.saturating_sub(1)];
            let b = grid[(i + 1).min(steps - 1)];
            minimize_rcond(g, eps, a, b, threshold).filter(|r| r.rcond < threshold)
        })
        .collect();
    resonances.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    resonances.dedup_by(|a, b| (a.lambda - b.lambda).abs() <= step);
    for r in &resonances {
        let k = (((r.lambda - lo) / step).floor().max(0.0) as usize).min(steps - 2);
        rows[k].certified = false;
        rows[k + 1].certified = false;
    }

    let mut flagged = Vec::new();
    let mut i = 0;
    while i < steps {
        if rows[i].certified {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < steps && !rows[i + 1].certified {
            i += 1;
        }
        flagged.push((rows[start].lambda, rows[i].lambda));
        i += 1;
    }
    Ok(SweepResult {
        rows,
        flagged,
        resonances,
    })
}

/// Polynomial fit of a junction matrix in `z = sqrt(lambda - lambda0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdFit {
    /// Sample points, strictly decreasing.
    pub z: Vec<f64>,
    /// Fitted coefficients of `z^0, z^1, ...`.
    pub coefficients: Vec<CMatrix>,
    /// Largest entrywise misfit over all samples.
    pub residual: f64,
}

impl ThresholdFit {
    /// Extrapolated value at the threshold.
    pub fn t0(&self) -> &CMatrix {
        &self.coefficients[0]
    }

    /// Coefficient of `z`.
    pub fn linear(&self) -> &CMatrix {
        &self.coefficients[1]
    }
}

pub const FIT_DEGREE: usize = 3;
pub const MIN_FIT_SAMPLES: usize = 5;
const MAX_FIT_Z: f64 = 0.5;

/// Least-squares cubic in `z` through each entry of the sampled matrices.
pub fn threshold_extrapolate(samples: &[(f64, CMatrix)], lambda0: f64) -> Result<ThresholdFit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            got: samples.len(),
        });
    }
    let mut sorted: Vec<(f64, &CMatrix)> = samples
        .iter()
        .map(|(lambda, t)| ((lambda - lambda0).sqrt(), t))
        .collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    for w in sorted.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(Error::InvalidParameter("sample points must be distinct".into()));
        }
    }
    for &(z, _) in &sorted {
        if !(z > 0.0 && z <= MAX_FIT_Z * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "sample at z = {z} is outside (0, {MAX_FIT_Z}]"
            )));
        }
    }
    let (rows, cols) = (sorted[0].1.nrows(), sorted[0].1.ncols());
    for (_, t) in &sorted {
        if t.nrows() != rows || t.ncols() != cols {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: t.nrows(),
                context: "threshold samples".into(),
            });
        }
    }
    let z: Vec<f64> = sorted.iter().map(|s| s.0).collect();
    let qr = Qr::vandermonde(&z, FIT_DEGREE + 1);
    let mut coefficients = vec![CMatrix::zeros(rows, cols); FIT_DEGREE + 1];
    let mut residual: f64 = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let y: Vec<C64> = sorted.iter().map(|s| s.1[(i, j)]).collect();
            let c = if y.iter().all(|&v| v == y[0]) {
                let mut c = vec![C64::new(0.0, 0.0); FIT_DEGREE + 1];
                c[0] = y[0];
                c
            } else {
                let re = qr.solve(&y.iter().map(|v| v.re).collect::<Vec<_>>());
                let im = qr.solve(&y.iter().map(|v| v.im).collect::<Vec<_>>());
                re.into_iter().zip(im).map(|(a, b)| C64::new(a, b)).collect()
            };
            for (k, &zk) in z.iter().enumerate() {
                let fit: C64 = c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &ck| acc * zk + ck);
                residual = residual.max((fit - y[k]).norm());
            }
            for (d, ck) in c.into_iter().enumerate() {
                coefficients[d][(i, j)] = ck;
            }
        }
    }
    Ok(ThresholdFit {
        z,
        coefficients,
        residual,
    })
}

/// Householder QR of a tall real matrix, for least squares.
struct Qr {
    m: usize,
    n: usize,
    /// Column-major `R` above the diagonal, reflectors below.
    a: Vec<f64>,
    diag: Vec<f64>,
}

impl Qr {
    fn vandermonde(z: &[f64], n: usize) -> Self {
        let m = z.len();
        let mut a = vec![0.0; m * n];
        for (i, &zi) in z.iter().enumerate() {
            for j in 0..n {
                a[j * m + i] = zi.powi(j as i32);
            }
        }
        let mut diag = vec![0.0; n];
        for k in 0..n {
            let norm = (k..m).map(|i| a[k * m + i].powi(2)).sum::<f64>().sqrt();
            let alpha = if a[k * m + k] > 0.0 { -norm } else { norm };
            a[k * m + k] -= alpha;
            let vnorm = (k..m).map(|i| a[k * m + i].powi(2)).sum::<f64>().sqrt();
            for i in k..m {
                a[k * m + i] /= vnorm;
            }
            for j in k + 1..n {
                let dot: f64 = (k..m).map(|i| a[k * m + i] * a[j * m + i]).sum();
                for i in k..m {
                    a[j * m + i] -= 2.0 * dot * a[k * m + i];
                }
            }
            diag[k] = alpha;
        }
        Self { m, n, a, diag }
    }

    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut b = y.to_vec();
        for k in 0..n {
            let dot: f64 = (k..m).map(|i| self.a[k * m + i] * b[i]).sum();
            for i in k..m {
                b[i] -= 2.0 * dot * self.a[k * m + i];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| self.a[j * m + k] * x[j]).sum();
            x[k] = (b[k] - s) / self.diag[k];
        }
        x
    }
}

/// CSV text of a sweep, one row per `(lambda, incident column)`.
pub fn spectrum_csv(sr: &SweepResult) -> String {
    let mut out = String::from("lambda,col,abs_t_sq,flux_residual,rcond,certified\n");
    for row in &sr.rows {
        for (col, (t, f)) in row.abs_t_sq.iter().zip(&row.flux_residual).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.lambda,
                col,
                t,
                f,
                row.rcond,
                u8::from(row.certified)
            );
        }
    }
    out
}

pub fn export_spectrum(sr: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, spectrum_csv(sr))?;
    Ok(())
}
