//! Modes of the discrete 1-D Dirichlet Laplacian across a stub, and the
//! per-step propagation multipliers of the 5-point stencil along it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::collides;

/// Cross-section of a stub with `cells` grid cells across (`cells - 1` interior nodes).
#[derive(Clone, Debug)]
pub struct DiscreteModes {
    cells: usize,
    h: f64,
}

impl DiscreteModes {
    pub fn new(cells: usize, h: f64) -> Self {
        Self { cells, h }
    }

    /// Number of interior nodes, which is also the number of discrete modes.
    pub fn len(&self) -> usize {
        self.cells - 1
    }

    pub fn is_empty(&self) -> bool {
        self.cells < 2
    }

    /// Eigenvalue of mode `n` (0-based): `(4/h^2) sin^2((n+1) pi / 2N)`.
    pub fn eigenvalue(&self, n: usize) -> f64 {
        let s = ((n + 1) as f64 * PI / (2.0 * self.cells as f64)).sin();
        4.0 * s * s / (self.h * self.h)
    }

    /// Orthonormal (in the plain Euclidean sense) eigenvector entries at
    /// interior nodes `i = 1..N-1`, stored 0-based.
    pub fn vector(&self, n: usize) -> Vec<f64> {
        let norm = (2.0 / self.cells as f64).sqrt();
        (1..self.cells)
            .map(|i| norm * ((n + 1) as f64 * PI * i as f64 / self.cells as f64).sin())
            .collect()
    }

    /// Number of modes with eigenvalue below `lambda`.
    pub fn propagating_count(&self, lambda: f64) -> Result<usize> {
        let mut count = 0;
        for n in 0..self.len() {
            let t = self.eigenvalue(n);
            if collides(lambda, t) {
                return Err(Error::ThresholdCollision {
                    lambda,
                    threshold: t,
                    channel: usize::MAX,
                    mode: n,
                });
            }
            if t < lambda {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Outgoing multiplier `mu` with `u_{l+1} = mu u_l` for a pure mode-`n`
    /// wave: unimodular with positive imaginary part when the mode propagates,
    /// in `(0, 1)` when it is evanescent.
    pub fn multiplier(&self, n: usize, lambda: f64) -> Result<Complex64> {
        let c = 1.0 - 0.5 * self.h * self.h * (lambda - self.eigenvalue(n));
        if c <= -1.0 {
            return Err(Error::GridTooCoarse(format!(
                "mode {n} is beyond the stencil's resolvable band at lambda = {lambda}"
            )));
        }
        Ok(if c < 1.0 {
            Complex64::new(c, (1.0 - c * c).sqrt())
        } else {
            Complex64::new(c - (c * c - 1.0).sqrt(), 0.0)
        })
    }
}
