//! Grid construction, bordered sparse assembly and amplitude extraction.

use std::collections::{BTreeSet, HashMap};

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::modes::DiscreteModes;
use super::{
    check_resolution, stub_mode_count, Incident, ModalAmplitudes, PlanarGeometry, StubAmplitudes,
};
use crate::dense::C64;
use crate::error::{Error, Result};

type Cell = (i64, i64);
type Node = (i64, i64);

const RESIDUAL_LIMIT: f64 = 1e-8;

/// Solution values on the interior nodes of the grid.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    pub h: f64,
    pub lambda: f64,
    pub geometry_hash: String,
    /// Interior nodes in grid units; physical position is `h * node`.
    pub nodes: Vec<(i64, i64)>,
    pub values: Vec<C64>,
}

impl DiscreteField {
    /// Value at a grid node, zero on walls and outside the domain.
    pub fn value_at(&self, node: (i64, i64)) -> C64 {
        match self.nodes.binary_search(&node) {
            Ok(i) => self.values[i],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// A truncated stub, in grid units.
#[derive(Clone, Debug)]
pub(crate) struct PortSpec {
    pub origin: (i64, i64),
    pub axis: (i64, i64),
    pub trans: (i64, i64),
    pub cells: usize,
    pub length: i64,
}

impl PortSpec {
    pub fn node(&self, l: i64, i: i64) -> Node {
        (
            self.origin.0 + l * self.axis.0 + i * self.trans.0,
            self.origin.1 + l * self.axis.1 + i * self.trans.1,
        )
    }

    /// Cell in layer `l` (between lines `l` and `l + 1`) and column `i`.
    fn cell(&self, l: i64, i: i64) -> Cell {
        let (nx, ny) = self.node(l, i);
        (
            nx + self.axis.0.min(0),
            ny + self.axis.1.min(0),
        )
    }

    /// Cells of the stub from the attachment line out to one layer past the cut.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..=self.length).flat_map(move |l| (0..self.cells as i64).map(move |i| self.cell(l, i)))
    }
}

pub(crate) struct Port {
    pub spec: PortSpec,
    pub propagating: usize,
    /// Multipliers of the retained modes; the first `propagating` are unimodular.
    mu: Vec<C64>,
    vectors: Vec<Vec<f64>>,
    /// Column of the first modal unknown.
    offset: usize,
}

impl Port {
    fn extraction_line(&self) -> i64 {
        self.spec.length - self.spec.cells as i64
    }

    fn trace(&self, values: &[C64], index: &HashMap<Node, usize>, l: i64) -> Vec<C64> {
        (1..self.spec.cells as i64)
            .map(|i| values[index[&self.spec.node(l, i)]])
            .collect()
    }
}

pub(crate) struct Domain {
    pub h: f64,
    pub lambda: f64,
    pub geometry_hash: String,
    nodes: Vec<Node>,
    index: HashMap<Node, usize>,
    pub ports: Vec<Port>,
    unknowns: usize,
}

pub(crate) struct Solved {
    pub fields: Vec<DiscreteField>,
    pub amplitudes: Vec<ModalAmplitudes>,
}

fn add_cells(cells: &mut BTreeSet<Cell>, new: impl Iterator<Item = Cell>, what: &str) -> Result<()> {
    for c in new {
        if !cells.insert(c) {
            return Err(Error::GeometryInvalid(format!("{what} overlaps another part of the geometry")));
        }
    }
    Ok(())
}

pub(crate) fn rect_cells(
    geom: &PlanarGeometry,
    r: &[f64; 4],
    shift: (i64, i64),
) -> Result<impl Iterator<Item = Cell>> {
    let x0 = geom.grid_units(r[0], "rect x0")? + shift.0;
    let y0 = geom.grid_units(r[1], "rect y0")? + shift.1;
    let x1 = geom.grid_units(r[2], "rect x1")? + shift.0;
    let y1 = geom.grid_units(r[3], "rect y1")? + shift.1;
    Ok((x0..x1).flat_map(move |x| (y0..y1).map(move |y| (x, y))))
}

pub(crate) fn stub_spec(geom: &PlanarGeometry, i: usize, shift: (i64, i64)) -> Result<PortSpec> {
    let s = &geom.stubs[i];
    Ok(PortSpec {
        origin: (
            geom.grid_units(s.origin[0], "stub origin x")? + shift.0,
            geom.grid_units(s.origin[1], "stub origin y")? + shift.1,
        ),
        axis: s.direction.axis(),
        trans: s.direction.transverse(),
        cells: geom.grid_units(s.width, "stub width")? as usize,
        length: geom.grid_units(s.length, "stub length")?,
    })
}

/// Junction cells: the rectangles, with overlaps between rectangles allowed.
pub(crate) fn junction_cells(geom: &PlanarGeometry, shift: (i64, i64)) -> Result<BTreeSet<Cell>> {
    let mut cells = BTreeSet::new();
    for r in &geom.rects {
        cells.extend(rect_cells(geom, r, shift)?);
    }
    Ok(cells)
}

impl Domain {
    pub fn from_junction(geom: &PlanarGeometry, lambda: f64) -> Result<Self> {
        geom.check()?;
        let mut cells = junction_cells(geom, (0, 0))?;
        let mut specs = Vec::with_capacity(geom.stubs.len());
        for i in 0..geom.stubs.len() {
            let spec = stub_spec(geom, i, (0, 0))?;
            add_cells(&mut cells, spec.cells(), &format!("stub {i}"))?;
            specs.push(spec);
        }
        Self::build(
            geom.h,
            lambda,
            geom.hash(),
            &cells,
            specs,
            geom.evanescent_modes,
            super::GRID_BUDGET,
        )
    }

    pub fn build(
        h: f64,
        lambda: f64,
        geometry_hash: String,
        cells: &BTreeSet<Cell>,
        specs: Vec<PortSpec>,
        evanescent_modes: usize,
        budget: usize,
    ) -> Result<Self> {
        check_resolution(h, lambda)?;
        let covered = |x: i64, y: i64| cells.contains(&(x, y));
        let interior = |(x, y): Node| {
            covered(x - 1, y - 1) && covered(x, y - 1) && covered(x - 1, y) && covered(x, y)
        };
        let mut candidates = BTreeSet::new();
        for &(x, y) in cells {
            for n in [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)] {
                if interior(n) {
                    candidates.insert(n);
                }
            }
        }
        let nodes: Vec<Node> = candidates.into_iter().collect();
        if nodes.len() > budget {
            return Err(Error::GridBudgetExceeded {
                nodes: nodes.len(),
                budget,
            });
        }
        let index: HashMap<Node, usize> = nodes.iter().enumerate().map(|(k, &n)| (n, k)).collect();

        let mut ports = Vec::with_capacity(specs.len());
        let mut offset = nodes.len();
        for (p, spec) in specs.into_iter().enumerate() {
            let n = spec.cells as i64;
            for l in 0..=spec.length {
                for i in 1..n {
                    if !interior(spec.node(l, i)) {
                        return Err(Error::GeometryInvalid(format!(
                            "stub {p} is not attached to the junction or is cut by another part"
                        )));
                    }
                }
                if l > 0 && (interior(spec.node(l, 0)) || interior(spec.node(l, n))) {
                    return Err(Error::GeometryInvalid(format!(
                        "stub {p} side wall touches another part of the geometry"
                    )));
                }
            }
            if interior(spec.node(spec.length + 1, 1)) {
                return Err(Error::GeometryInvalid(format!(
                    "stub {p} truncation line is not free"
                )));
            }
            let width = spec.cells as f64 * h;
            let propagating = stub_mode_count(width, h, lambda)?;
            let modes = DiscreteModes::new(spec.cells, h);
            let retained = propagating + evanescent_modes.min(modes.len() - propagating);
            let mu = (0..retained)
                .map(|m| modes.multiplier(m, lambda))
                .collect::<Result<Vec<_>>>()?;
            let vectors = (0..retained).map(|m| modes.vector(m)).collect();
            ports.push(Port {
                spec,
                propagating,
                mu,
                vectors,
                offset,
            });
            offset += retained;
        }
        Ok(Self {
            h,
            lambda,
            geometry_hash,
            nodes,
            index,
            ports,
            unknowns: offset,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn triplets(&self) -> Vec<Triplet<usize, usize, C64>> {
        let h2 = self.h * self.h;
        let diag = C64::new(4.0 - self.lambda * h2, 0.0);
        let minus_one = C64::new(-1.0, 0.0);
        let mut t = Vec::with_capacity(5 * self.nodes.len());
        for (r, &(x, y)) in self.nodes.iter().enumerate() {
            t.push(Triplet::new(r, r, diag));
            for n in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
                if let Some(&c) = self.index.get(&n) {
                    t.push(Triplet::new(r, c, minus_one));
                }
            }
        }
        for port in &self.ports {
            let last = port.spec.length;
            for (m, (phi, mu)) in port.vectors.iter().zip(&port.mu).enumerate() {
                let row = port.offset + m;
                t.push(Triplet::new(row, row, C64::new(1.0, 0.0)));
                for (i, &v) in phi.iter().enumerate() {
                    let node = self.index[&port.spec.node(last, i as i64 + 1)];
                    t.push(Triplet::new(row, node, C64::new(-v, 0.0)));
                    t.push(Triplet::new(node, row, -mu * v));
                }
            }
        }
        t
    }

    fn rhs(&self, incidents: &[Incident]) -> Mat<C64> {
        let mut b = Mat::<C64>::zeros(self.unknowns, incidents.len());
        for (col, inc) in incidents.iter().enumerate() {
            let port = &self.ports[inc.stub];
            let mu = port.mu[inc.mode];
            let l = port.spec.length;
            let scale = inc.amplitude * mu.powi(-(l as i32)) * (mu.inv() - mu);
            for (i, &v) in port.vectors[inc.mode].iter().enumerate() {
                let node = self.index[&port.spec.node(l, i as i64 + 1)];
                b[(node, col)] = scale * v;
            }
        }
        b
    }

    fn solve_raw(&self, incidents: &[Incident]) -> Result<Mat<C64>> {
        for inc in incidents {
            let port = self.ports.get(inc.stub).ok_or_else(|| {
                Error::InvalidParameter(format!("incident stub {} does not exist", inc.stub))
            })?;
            if inc.mode >= port.propagating {
                return Err(Error::InvalidParameter(format!(
                    "incident mode {} does not propagate on stub {}",
                    inc.mode, inc.stub
                )));
            }
        }
        let n = self.unknowns;
        let triplets = self.triplets();
        let a = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::NonConvergedSolve(format!("assembly failed: {e:?}")))?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::NonConvergedSolve(format!("sparse factorization failed: {e:?}")))?;
        let b = self.rhs(incidents);
        let mut x = lu.solve(&b);
        let r = &b - &a * &x;
        x += lu.solve(&r);
        let r = &b - &a * &x;
        for col in 0..b.ncols() {
            let bn = column_norm(&b, col);
            let rn = column_norm(&r, col);
            let rel = if bn > 0.0 { rn / bn } else { rn };
            if !(rel <= RESIDUAL_LIMIT) {
                return Err(Error::NonConvergedSolve(format!(
                    "relative residual {rel:e} after refinement"
                )));
            }
        }
        Ok(x)
    }

    fn extract(&self, values: &[C64], incident: &Incident) -> ModalAmplitudes {
        let stubs = self
            .ports
            .iter()
            .enumerate()
            .map(|(p, port)| {
                let le = port.extraction_line();
                let mut scattered = port.trace(values, &self.index, le);
                if p == incident.stub {
                    let inc = incident.amplitude * port.mu[incident.mode].powi(-(le as i32));
                    for (s, &v) in scattered.iter_mut().zip(&port.vectors[incident.mode]) {
                        *s -= inc * v;
                    }
                }
                let mut outgoing = Vec::with_capacity(port.propagating);
                for m in 0..port.propagating {
                    let phi = &port.vectors[m];
                    let s: C64 = scattered.iter().zip(phi).map(|(u, &v)| u * v).sum();
                    for (u, &v) in scattered.iter_mut().zip(phi) {
                        *u -= s * v;
                    }
                    outgoing.push(s / port.mu[m].powi(le as i32));
                }
                let evanescent_tail = scattered.iter().map(|u| u.norm_sqr()).sum::<f64>().sqrt();
                StubAmplitudes {
                    outgoing,
                    evanescent_tail,
                }
            })
            .collect();
        ModalAmplitudes { stubs }
    }

    pub fn solve(&self, incidents: &[Incident]) -> Result<Solved> {
        let x = self.solve_raw(incidents)?;
        let mut fields = Vec::with_capacity(incidents.len());
        let mut amplitudes = Vec::with_capacity(incidents.len());
        for (col, inc) in incidents.iter().enumerate() {
            let values: Vec<C64> = (0..self.unknowns).map(|r| x[(r, col)]).collect();
            amplitudes.push(self.extract(&values, inc));
            let mut values = values;
            values.truncate(self.nodes.len());
            fields.push(DiscreteField {
                h: self.h,
                lambda: self.lambda,
                geometry_hash: self.geometry_hash.clone(),
                nodes: self.nodes.clone(),
                values,
            });
        }
        Ok(Solved { fields, amplitudes })
    }

    pub fn solve_amplitudes(&self, incidents: &[Incident]) -> Result<Vec<ModalAmplitudes>> {
        if incidents.is_empty() {
            return Ok(Vec::new());
        }
        let x = self.solve_raw(incidents)?;
        Ok(incidents
            .iter()
            .enumerate()
            .map(|(col, inc)| {
                let values: Vec<C64> = (0..self.unknowns).map(|r| x[(r, col)]).collect();
                self.extract(&values, inc)
            })
            .collect())
    }
}

fn column_norm(m: &Mat<C64>, col: usize) -> f64 {
    (0..m.nrows()).map(|r| m[(r, col)].norm_sqr()).sum::<f64>().sqrt()
}
