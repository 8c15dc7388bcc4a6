//! Finite-difference Helmholtz oracle for planar (two-dimensional) fiber networks.
//!
//! `-Laplace u = lambda u` is discretized with the 5-point stencil on a uniform
//! grid, with homogeneous Dirichlet walls. Every semi-infinite stub is cut at a
//! finite length and closed by an exact discrete radiation condition: the trace
//! on the last grid line is split into the eigenvectors of the discrete
//! cross-section Laplacian, and each retained mode gets its outgoing
//! multiplier from the discrete dispersion relation. The modal coefficients are
//! extra unknowns, so the matrix is the sparse stencil bordered by a few dense
//! rows per stub.
//!
//! Amplitudes are read off one stub width inside the cut and carried back to
//! the stub's attachment line with the same discrete multipliers, so the
//! reported scattering matrix is that of the discrete problem with truly
//! infinite stubs.

mod grid;
mod modes;
mod network;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cross_section;
use crate::dense::{CMatrix, C64};
use crate::error::{Error, Result};
use crate::graph::CrossSectionShape;

pub use grid::DiscreteField;
pub use modes::DiscreteModes;
pub use network::{solve_network, NetworkOracle, GRID_BUDGET};

/// Evanescent modes retained in each stub's radiation condition by default.
pub const DEFAULT_EVANESCENT_MODES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl Direction {
    /// Unit step along the stub axis, outward.
    pub fn axis(self) -> (i64, i64) {
        match self {
            Direction::PlusX => (1, 0),
            Direction::MinusX => (-1, 0),
            Direction::PlusY => (0, 1),
            Direction::MinusY => (0, -1),
        }
    }

    /// Unit step along the stub cross-section. Always `+y` for x-stubs and
    /// `+x` for y-stubs, so two facing stubs share their transverse coordinate.
    pub fn transverse(self) -> (i64, i64) {
        match self {
            Direction::PlusX | Direction::MinusX => (0, 1),
            Direction::PlusY | Direction::MinusY => (1, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::PlusX => Direction::MinusX,
            Direction::MinusX => Direction::PlusX,
            Direction::PlusY => Direction::MinusY,
            Direction::MinusY => Direction::PlusY,
        }
    }
}

/// A straight channel stub leaving the junction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stub {
    pub direction: Direction,
    /// Corner of the attachment segment with the smallest transverse coordinate.
    pub origin: [f64; 2],
    pub width: f64,
    /// Distance from the attachment line to the truncation line.
    pub length: f64,
}

/// A junction: a union of axis-aligned rectangles with stubs attached to its boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarGeometry {
    pub h: f64,
    /// `[x0, y0, x1, y1]` rectangles whose union is the junction.
    pub rects: Vec<[f64; 4]>,
    pub stubs: Vec<Stub>,
    #[serde(default = "default_evanescent")]
    pub evanescent_modes: usize,
}

fn default_evanescent() -> usize {
    DEFAULT_EVANESCENT_MODES
}

impl PlanarGeometry {
    /// Two collinear stubs of width `w` joined by a `core x w` duct segment.
    /// With `core == 0` the stubs abut and the junction is degenerate.
    pub fn straight_duct(w: f64, core: f64, h: f64) -> Self {
        let rects = if core > 0.0 { vec![[0.0, 0.0, core, w]] } else { vec![] };
        Self {
            h,
            rects,
            stubs: vec![
                Stub {
                    direction: Direction::MinusX,
                    origin: [0.0, 0.0],
                    width: w,
                    length: 2.0 * w,
                },
                Stub {
                    direction: Direction::PlusX,
                    origin: [core, 0.0],
                    width: w,
                    length: 2.0 * w,
                },
            ],
            evanescent_modes: DEFAULT_EVANESCENT_MODES,
        }
    }

    /// Square `w x w` core with four identical stubs, ordered `-x, +x, -y, +y`.
    pub fn cross(w: f64, h: f64) -> Self {
        let a = 2.0 * w;
        let stub = |direction, origin| Stub {
            direction,
            origin,
            width: w,
            length: a,
        };
        Self {
            h,
            rects: vec![[0.0, 0.0, w, w]],
            stubs: vec![
                stub(Direction::MinusX, [0.0, 0.0]),
                stub(Direction::PlusX, [w, 0.0]),
                stub(Direction::MinusY, [0.0, 0.0]),
                stub(Direction::PlusY, [0.0, w]),
            ],
            evanescent_modes: DEFAULT_EVANESCENT_MODES,
        }
    }

    /// L-shaped corner: a `w x w` core with stubs leaving along `-x` and `+y`.
    pub fn bend(w: f64, h: f64) -> Self {
        Self {
            h,
            rects: vec![[0.0, 0.0, w, w]],
            stubs: vec![
                Stub {
                    direction: Direction::MinusX,
                    origin: [0.0, 0.0],
                    width: w,
                    length: 2.0 * w,
                },
                Stub {
                    direction: Direction::PlusY,
                    origin: [0.0, w],
                    width: w,
                    length: 2.0 * w,
                },
            ],
            evanescent_modes: DEFAULT_EVANESCENT_MODES,
        }
    }

    /// Same geometry with every stub cut at `factor` times its length.
    pub fn with_stub_lengths_scaled(&self, factor: f64) -> Self {
        let mut g = self.clone();
        for s in &mut g.stubs {
            s.length *= factor;
        }
        g
    }

    pub fn with_h(&self, h: f64) -> Self {
        Self { h, ..self.clone() }
    }

    pub fn with_evanescent_modes(&self, n: usize) -> Self {
        Self {
            evanescent_modes: n,
            ..self.clone()
        }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("geometry serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Grid units for a coordinate that must lie on the grid.
    pub(crate) fn grid_units(&self, x: f64, what: &str) -> Result<i64> {
        let u = x / self.h;
        let r = u.round();
        if !x.is_finite() || (u - r).abs() > 1e-6 {
            return Err(Error::GeometryInvalid(format!(
                "{what} = {x} is not a multiple of h = {}",
                self.h
            )));
        }
        Ok(r as i64)
    }

    /// Checks the geometric invariants that do not need the grid itself.
    pub fn check(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::GeometryInvalid(format!("grid spacing {} must be positive", self.h)));
        }
        if self.stubs.is_empty() {
            return Err(Error::GeometryInvalid("junction has no stubs".into()));
        }
        for (i, r) in self.rects.iter().enumerate() {
            for (k, &v) in r.iter().enumerate() {
                self.grid_units(v, &format!("rect {i} coordinate {k}"))?;
            }
            if !(r[2] > r[0] && r[3] > r[1]) {
                return Err(Error::GeometryInvalid(format!("rect {i} is empty or inverted")));
            }
        }
        for (i, s) in self.stubs.iter().enumerate() {
            if !(s.width > 0.0 && s.length > 0.0) {
                return Err(Error::GeometryInvalid(format!("stub {i}: width and length must be positive")));
            }
            let cells = self.grid_units(s.width, &format!("stub {i} width"))?;
            if cells < 2 {
                return Err(Error::GeometryInvalid(format!("stub {i}: width must span at least 2 cells")));
            }
            self.grid_units(s.length, &format!("stub {i} length"))?;
            self.grid_units(s.origin[0], &format!("stub {i} origin x"))?;
            self.grid_units(s.origin[1], &format!("stub {i} origin y"))?;
            if s.length < 2.0 * s.width * (1.0 - 1e-12) {
                return Err(Error::GeometryInvalid(format!(
                    "stub {i}: truncation length {} is below twice the width {}",
                    s.length, s.width
                )));
            }
        }
        Ok(())
    }

    /// Continuum cross-section of stub `i`.
    pub fn stub_shape(&self, i: usize) -> CrossSectionShape {
        CrossSectionShape::Interval {
            width: self.stubs[i].width,
        }
    }
}

/// Incident wave for a junction solve: unit mode `mode` on stub `stub`, times `amplitude`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Incident {
    pub stub: usize,
    pub mode: usize,
    pub amplitude: C64,
}

impl Incident {
    pub fn unit(stub: usize, mode: usize) -> Self {
        Self {
            stub,
            mode,
            amplitude: C64::new(1.0, 0.0),
        }
    }
}

/// Outgoing amplitudes on one stub.
#[derive(Clone, Debug, PartialEq)]
pub struct StubAmplitudes {
    /// One entry per propagating mode, referred to the attachment line.
    pub outgoing: Vec<C64>,
    /// Norm of the scattered field's evanescent part at the extraction line.
    pub evanescent_tail: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModalAmplitudes {
    pub stubs: Vec<StubAmplitudes>,
}

impl ModalAmplitudes {
    /// All outgoing amplitudes in stub-then-mode order.
    pub fn flatten(&self) -> Vec<C64> {
        self.stubs.iter().flat_map(|s| s.outgoing.iter().copied()).collect()
    }
}

/// A computed junction matrix with the data needed to reproduce it.
#[derive(Clone, Debug, PartialEq)]
pub struct JunctionMatrix {
    pub lambda: f64,
    pub h: f64,
    pub geometry_hash: String,
    pub matrix: CMatrix,
    /// Continuum thresholds of the rows, in the vertex-local mode order.
    pub thresholds: Vec<f64>,
}

impl JunctionMatrix {
    /// `D^{1/2} T D^{-1/2}` with continuum `D`.
    pub fn symmetrized(&self) -> CMatrix {
        let d: Vec<f64> = self.thresholds.iter().map(|t| (self.lambda - t).sqrt()).collect();
        CMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| {
            self.matrix[(i, j)] * (d[i].sqrt() / d[j].sqrt())
        })
    }
}

fn check_resolution(h: f64, lambda: f64) -> Result<()> {
    let limit = 2.0 * PI / (10.0 * lambda.sqrt());
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse(format!(
            "h = {h} exceeds {limit} (10 points per wavelength at lambda = {lambda})"
        )));
    }
    Ok(())
}

/// Propagating-mode count of a stub, checked against the continuum count.
fn stub_mode_count(width: f64, h: f64, lambda: f64) -> Result<usize> {
    let cells = (width / h).round() as usize;
    let discrete = DiscreteModes::new(cells, h).propagating_count(lambda)?;
    let continuum = cross_section::propagating_count(&CrossSectionShape::Interval { width }, lambda)?;
    if discrete != continuum {
        return Err(Error::GridTooCoarse(format!(
            "stub width {width}: {discrete} discrete vs {continuum} continuum propagating modes at lambda = {lambda}"
        )));
    }
    Ok(discrete)
}

/// Scattered field and outgoing amplitudes for one incident wave on a junction.
pub fn solve_junction_scattering(
    geom: &PlanarGeometry,
    lambda: f64,
    incident: Incident,
) -> Result<(DiscreteField, ModalAmplitudes)> {
    let domain = grid::Domain::from_junction(geom, lambda)?;
    let port = domain.ports.get(incident.stub).ok_or_else(|| {
        Error::InvalidParameter(format!("incident stub {} does not exist", incident.stub))
    })?;
    if incident.mode >= port.propagating {
        return Err(Error::InvalidParameter(format!(
            "incident mode {} does not propagate on stub {} ({} propagating)",
            incident.mode, incident.stub, port.propagating
        )));
    }
    let mut solved = domain.solve(&[incident])?;
    let amplitudes = solved.amplitudes.remove(0);
    let field = solved.fields.remove(0);
    Ok((field, amplitudes))
}

/// Junction scattering matrix: one column per propagating `(stub, mode)`, in stub order.
pub fn junction_matrix(geom: &PlanarGeometry, lambda: f64) -> Result<JunctionMatrix> {
    let domain = grid::Domain::from_junction(geom, lambda)?;
    let incidents: Vec<Incident> = domain
        .ports
        .iter()
        .enumerate()
        .flat_map(|(s, p)| (0..p.propagating).map(move |k| Incident::unit(s, k)))
        .collect();
    let solved = domain.solve_amplitudes(&incidents)?;
    let m = incidents.len();
    let mut matrix = CMatrix::zeros(m, m);
    for (col, amps) in solved.iter().enumerate() {
        matrix.set_column(col, &amps.flatten());
    }
    let mut thresholds = Vec::with_capacity(m);
    for (s, p) in domain.ports.iter().enumerate() {
        let t = cross_section::thresholds(&geom.stub_shape(s), p.propagating.max(1));
        thresholds.extend(t.into_iter().take(p.propagating));
    }
    Ok(JunctionMatrix {
        lambda,
        h: geom.h,
        geometry_hash: geom.hash(),
        matrix,
        thresholds,
    })
}
