//! Dirichlet spectra of channel cross-sections.
//!
//! Intervals and rectangles are closed-form. Disk thresholds are squared Bessel
//! zeros over the squared radius; each `m >= 1` level is doubly degenerate and
//! listed as a cosine mode followed by a sine mode.

use std::f64::consts::PI;

use crate::bessel::{bessel_j, bessel_zeros};
use crate::error::{Error, Result};
use crate::graph::{collides, ChannelLength, CrossSectionShape, MetricGraph};

#[derive(Clone, Copy, Debug, PartialEq)]
enum ModeKind {
    /// `sqrt(2/w) sin((n+1) pi y / w)`
    Sine { k: u32 },
    /// Product of sines with indices `(p, q)`.
    Product { p: u32, q: u32 },
    /// `J_m(j rho / r)` times `1`, `cos(m theta)` or `sin(m theta)`.
    Bessel { m: u32, zero: f64, sine: bool },
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Mode {
    threshold: f64,
    kind: ModeKind,
    norm: f64,
}

/// The lowest modes of one cross-section, ascending by threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTable {
    shape: CrossSectionShape,
    modes: Vec<Mode>,
}

impl ModeTable {
    /// Table holding (at least) the first `count` modes.
    pub fn new(shape: &CrossSectionShape, count: usize) -> Self {
        let mut cutoff = first_threshold_guess(shape) * 4.0;
        loop {
            let modes = modes_up_to(shape, cutoff);
            if modes.len() >= count {
                return Self {
                    shape: shape.clone(),
                    modes,
                };
            }
            cutoff *= 2.0;
        }
    }

    /// Table holding every mode with threshold `<= cutoff`.
    pub fn up_to(shape: &CrossSectionShape, cutoff: f64) -> Self {
        Self {
            shape: shape.clone(),
            modes: modes_up_to(shape, cutoff),
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.threshold).collect()
    }

    pub fn eigenfunction(&self, n: usize, y: &[f64]) -> Result<f64> {
        let mode = self.modes.get(n).ok_or(Error::ModeOutOfRange {
            index: n,
            available: self.modes.len(),
        })?;
        check_domain(&self.shape, y)?;
        Ok(evaluate(&self.shape, mode, y))
    }
}

fn first_threshold_guess(shape: &CrossSectionShape) -> f64 {
    match *shape {
        CrossSectionShape::Interval { width } => (PI / width).powi(2),
        CrossSectionShape::Rectangle { a, b } => PI * PI * (1.0 / (a * a) + 1.0 / (b * b)),
        CrossSectionShape::Disk { radius } => (2.4 / radius).powi(2),
    }
}

fn modes_up_to(shape: &CrossSectionShape, cutoff: f64) -> Vec<Mode> {
    let mut modes = Vec::new();
    match *shape {
        CrossSectionShape::Interval { width } => {
            let norm = (2.0 / width).sqrt();
            let mut k = 1u32;
            loop {
                let t = (k as f64 * PI / width).powi(2);
                if t > cutoff {
                    break;
                }
                modes.push(Mode {
                    threshold: t,
                    kind: ModeKind::Sine { k },
                    norm,
                });
                k += 1;
            }
        }
        CrossSectionShape::Rectangle { a, b } => {
            let norm = 2.0 / (a * b).sqrt();
            let mut p = 1u32;
            while (p as f64 * PI / a).powi(2) + (PI / b).powi(2) <= cutoff {
                let mut q = 1u32;
                loop {
                    let t = (p as f64 * PI / a).powi(2) + (q as f64 * PI / b).powi(2);
                    if t > cutoff {
                        break;
                    }
                    modes.push(Mode {
                        threshold: t,
                        kind: ModeKind::Product { p, q },
                        norm,
                    });
                    q += 1;
                }
                p += 1;
            }
            modes.sort_by(|x, y| {
                let key = |m: &Mode| match m.kind {
                    ModeKind::Product { p, q } => (p, q),
                    _ => unreachable!(),
                };
                x.threshold.total_cmp(&y.threshold).then(key(x).cmp(&key(y)))
            });
        }
        CrossSectionShape::Disk { radius } => {
            let xmax = cutoff.sqrt() * radius;
            let mut m = 0u32;
            // j_{m,1} > m bounds the orders that can contribute.
            while (m as f64) < xmax {
                let mut count = 1;
                let zeros = loop {
                    let z = bessel_zeros(m, count);
                    if *z.last().unwrap() > xmax {
                        break z;
                    }
                    count += 4;
                };
                for zero in zeros.into_iter().filter(|&z| z <= xmax) {
                    let t = (zero / radius).powi(2);
                    let jm1 = bessel_j(m + 1, zero).abs();
                    let angular = if m == 0 { 2.0 * PI } else { PI };
                    let norm = 1.0 / (radius * jm1 * (angular / 2.0).sqrt());
                    modes.push(Mode {
                        threshold: t,
                        kind: ModeKind::Bessel { m, zero, sine: false },
                        norm,
                    });
                    if m > 0 {
                        modes.push(Mode {
                            threshold: t,
                            kind: ModeKind::Bessel { m, zero, sine: true },
                            norm,
                        });
                    }
                }
                m += 1;
            }
            modes.sort_by(|x, y| {
                let key = |md: &Mode| match md.kind {
                    ModeKind::Bessel { m, sine, .. } => (m, sine),
                    _ => unreachable!(),
                };
                x.threshold.total_cmp(&y.threshold).then(key(x).cmp(&key(y)))
            });
        }
    }
    modes
}

const DOMAIN_SLACK: f64 = 1e-12;

fn check_domain(shape: &CrossSectionShape, y: &[f64]) -> Result<()> {
    let inside = match *shape {
        CrossSectionShape::Interval { width } => {
            y.len() == 1 && y[0] >= -DOMAIN_SLACK && y[0] <= width + DOMAIN_SLACK
        }
        CrossSectionShape::Rectangle { a, b } => {
            y.len() == 2
                && y[0] >= -DOMAIN_SLACK
                && y[0] <= a + DOMAIN_SLACK
                && y[1] >= -DOMAIN_SLACK
                && y[1] <= b + DOMAIN_SLACK
        }
        CrossSectionShape::Disk { radius } => {
            y.len() == 2 && y[0].hypot(y[1]) <= radius * (1.0 + DOMAIN_SLACK)
        }
    };
    if inside && y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::OutOfDomain { point: y.to_vec() })
    }
}

fn evaluate(shape: &CrossSectionShape, mode: &Mode, y: &[f64]) -> f64 {
    match (shape, mode.kind) {
        (CrossSectionShape::Interval { width }, ModeKind::Sine { k }) => {
            mode.norm * (k as f64 * PI * y[0] / width).sin()
        }
        (CrossSectionShape::Rectangle { a, b }, ModeKind::Product { p, q }) => {
            mode.norm * (p as f64 * PI * y[0] / a).sin() * (q as f64 * PI * y[1] / b).sin()
        }
        (CrossSectionShape::Disk { radius }, ModeKind::Bessel { m, zero, sine }) => {
            let rho = y[0].hypot(y[1]).min(*radius);
            let radial = bessel_j(m, zero * rho / radius);
            let angular = if m == 0 {
                1.0
            } else {
                let theta = y[1].atan2(y[0]);
                if sine {
                    (m as f64 * theta).sin()
                } else {
                    (m as f64 * theta).cos()
                }
            };
            mode.norm * radial * angular
        }
        _ => unreachable!("mode kind always matches its table's shape"),
    }
}

/// The first `count` Dirichlet eigenvalues, ascending, with multiplicity.
pub fn thresholds(shape: &CrossSectionShape, count: usize) -> Vec<f64> {
    let mut t = ModeTable::new(shape, count).thresholds();
    t.truncate(count);
    t
}

/// The `n`-th normalized eigenfunction evaluated at `y`.
pub fn eigenfunction(shape: &CrossSectionShape, n: usize, y: &[f64]) -> Result<f64> {
    ModeTable::new(shape, n + 1).eigenfunction(n, y)
}

/// Number of thresholds strictly below `lambda` (that is `m_j + 1`).
pub fn propagating_count(shape: &CrossSectionShape, lambda: f64) -> Result<usize> {
    propagating_count_for(shape, lambda, 0)
}

pub(crate) fn propagating_count_for(
    shape: &CrossSectionShape,
    lambda: f64,
    channel: usize,
) -> Result<usize> {
    let cutoff = lambda.abs() * (1.0 + 1e-6) + 1.0;
    let table = ModeTable::up_to(shape, cutoff);
    let mut count = 0;
    for (mode, t) in table.thresholds().into_iter().enumerate() {
        if collides(lambda, t) {
            return Err(Error::ThresholdCollision {
                lambda,
                threshold: t,
                channel,
                mode,
            });
        }
        if t < lambda {
            count += 1;
        }
    }
    Ok(count)
}

/// The propagating thresholds `lambda_{j,0..=m_j}` below `lambda`.
pub fn propagating_thresholds(shape: &CrossSectionShape, lambda: f64) -> Result<Vec<f64>> {
    let n = propagating_count(shape, lambda)?;
    Ok(thresholds(shape, n.max(1)).into_iter().take(n).collect())
}

/// Bottom of the continuous spectrum: the smallest first threshold over infinite channels.
pub fn lambda0(g: &MetricGraph) -> Result<f64> {
    g.channels
        .iter()
        .filter(|c| c.length == ChannelLength::Infinite)
        .map(|c| thresholds(&c.cross_section, 1)[0])
        .min_by(f64::total_cmp)
        .ok_or(Error::NoInfiniteChannels)
}
