//! The limiting-graph scattering problem.
//!
//! On channel `j` the field is `sum_n (alpha_n e^{i kappa_n t/eps} + beta_n e^{-i kappa_n t/eps}) phi_n`
//! with `kappa_n = sqrt(lambda - lambda_{j,n})` and `t` running from the start
//! vertex. At a vertex `v`, with every adjacent channel parametrized outward,
//! the traces satisfy the gluing condition
//! `eps (I + T_v) D_v^{-1} s'(0) + i (I - T_v) s(0) = 0`.

use crate::cross_section::{self, propagating_count_for};
use crate::dense::{solve_refined, CMatrix, C64};
use crate::error::{Error, Result};
use crate::graph::{
    collides, global_ordering, ChannelLength, End, GlobalModeOrdering, JunctionModel,
    JunctionSample, MetricGraph, Vertex,
};
use crate::helmholtz;
use crate::phase::propagation_factor;

/// Reciprocal condition below which a solve is reported as uncertified.
pub const RCOND_THRESHOLD: f64 = 1e-10;

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IncidentSelection {
    /// One right-hand side per entry of the global mode ordering.
    All,
    /// Unit incident wave in mode `mode` of infinite channel `channel`.
    One { channel: usize, mode: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveRequest {
    pub lambda: f64,
    pub eps: f64,
    pub incident: IncidentSelection,
}

impl SolveRequest {
    pub fn all(lambda: f64, eps: f64) -> Self {
        Self {
            lambda,
            eps,
            incident: IncidentSelection::All,
        }
    }
}

/// A junction evaluated at one `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexScatteringResolved {
    pub vertex: usize,
    pub t: CMatrix,
    /// Diagonal of `D_v`: `sqrt(lambda - lambda_{s,k})` per local mode.
    pub d: Vec<f64>,
    /// Local mode order: `(channel, end, mode)`.
    pub order: Vec<(usize, End, usize)>,
}

impl VertexScatteringResolved {
    pub fn dim(&self) -> usize {
        self.order.len()
    }

    /// `D^{1/2} T D^{-1/2}`.
    pub fn symmetrized(&self) -> CMatrix {
        symmetrize(&self.t, &self.d)
    }
}

pub(crate) fn symmetrize(t: &CMatrix, d: &[f64]) -> CMatrix {
    CMatrix::from_fn(t.nrows(), t.ncols(), |i, j| t[(i, j)] * (d[i].sqrt() / d[j].sqrt()))
}

/// Amplitudes on one channel in its canonical parametrization.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelWave {
    pub channel: usize,
    pub length: ChannelLength,
    pub thresholds: Vec<f64>,
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
}

/// The solved field for one incident wave.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWaveField {
    pub lambda: f64,
    pub eps: f64,
    pub channels: Vec<ChannelWave>,
}

impl EdgeWaveField {
    pub fn channel(&self, id: usize) -> Option<&ChannelWave> {
        self.channels.iter().find(|c| c.channel == id)
    }

    /// Value and outward derivative of each mode at the given channel end.
    pub fn trace(&self, channel: usize, end: End) -> Option<(Vec<C64>, Vec<C64>)> {
        let w = self.channel(channel)?;
        let mut values = Vec::with_capacity(w.alpha.len());
        let mut derivs = Vec::with_capacity(w.alpha.len());
        for n in 0..w.alpha.len() {
            let kappa = (self.lambda - w.thresholds[n]).sqrt();
            let ik = I * (kappa / self.eps);
            match end {
                End::Start => {
                    values.push(w.alpha[n] + w.beta[n]);
                    derivs.push(ik * (w.alpha[n] - w.beta[n]));
                }
                End::End => {
                    let l = w.length.finite()?;
                    let e = propagation_factor(self.lambda, w.thresholds[n], l, self.eps);
                    let a = w.alpha[n] * e;
                    let b = w.beta[n] * e.conj();
                    values.push(a + b);
                    derivs.push(-ik * (a - b));
                }
            }
        }
        Some((values, derivs))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkScattering {
    /// Column `(s,k)` holds the outgoing amplitudes for a unit incident wave in that mode.
    pub t: CMatrix,
    /// Diagonal of `D`.
    pub d: Vec<f64>,
    pub lambda: f64,
    pub eps: f64,
    pub ordering: GlobalModeOrdering,
}

impl NetworkScattering {
    /// `D^{1/2} T D^{-1/2}`.
    pub fn symmetrized(&self) -> CMatrix {
        symmetrize(&self.t, &self.d)
    }
}

/// The dense system built by [`assemble_system`].
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CMatrix,
    /// One column per incident wave.
    pub rhs: CMatrix,
    /// `(channel, is_beta, mode)` for each unknown.
    pub unknowns: Vec<(usize, bool, usize)>,
    /// Global-ordering position of each right-hand side.
    pub columns: Vec<usize>,
    pub vertices: Vec<VertexScatteringResolved>,
    pub ordering: GlobalModeOrdering,
}

/// Outcome of a solve that is allowed to be uncertified.
#[derive(Clone, Debug)]
pub struct Solution {
    pub fields: Vec<EdgeWaveField>,
    pub scattering: NetworkScattering,
    pub rcond: f64,
    pub certified: bool,
}

fn unresolvable(v: &Vertex, reason: impl Into<String>) -> Error {
    Error::UnresolvableJunction {
        vertex: v.id,
        reason: reason.into(),
    }
}

/// Evaluates the junction model of `v` at `lambda`.
pub fn resolve_vertex(
    g: &MetricGraph,
    v: &Vertex,
    lambda: f64,
) -> Result<VertexScatteringResolved> {
    let mut order = Vec::new();
    let mut d = Vec::new();
    let mut per_end = Vec::with_capacity(v.incident_ends.len());
    let mut open_threshold = f64::NEG_INFINITY;
    for &(cid, end) in &v.incident_ends {
        let c = g
            .channel(cid)
            .ok_or_else(|| unresolvable(v, format!("channel {cid} does not exist")))?;
        let count = propagating_count_for(&c.cross_section, lambda, cid)?;
        let thresholds = cross_section::thresholds(&c.cross_section, count.max(1));
        for (n, &t) in thresholds.iter().take(count).enumerate() {
            order.push((cid, end, n));
            d.push((lambda - t).sqrt());
            open_threshold = open_threshold.max(t);
        }
        per_end.push(count);
    }
    let dim = order.len();
    let t = match &v.junction {
        JunctionModel::Dirichlet => CMatrix::identity(dim).scale(-ONE),
        JunctionModel::Transparent => {
            if per_end.len() != 2 || per_end[0] != per_end[1] {
                return Err(unresolvable(v, "transparent junction needs two matching ends"));
            }
            let m = per_end[0];
            CMatrix::from_fn(dim, dim, |i, j| if (i + m) % dim == j && m > 0 { ONE } else { ZERO })
        }
        JunctionModel::Matrix { lambda: at, matrix } => {
            if !collides(lambda, *at) {
                return Err(unresolvable(
                    v,
                    format!("matrix is given at lambda = {at}, requested {lambda}"),
                ));
            }
            check_dim(matrix, dim, v)?;
            matrix.clone()
        }
        JunctionModel::Tabulated { samples, .. } => {
            let t = interpolate(samples, lambda, open_threshold, v)?;
            check_dim(&t, dim, v)?;
            t
        }
        JunctionModel::FromOracle(geom) => {
            let jm = helmholtz::junction_matrix(geom, lambda)
                .map_err(|e| unresolvable(v, format!("oracle failed: {e}")))?;
            check_dim(&jm.matrix, dim, v)?;
            jm.matrix
        }
    };
    Ok(VertexScatteringResolved {
        vertex: v.id,
        t,
        d,
        order,
    })
}

fn check_dim(m: &CMatrix, dim: usize, v: &Vertex) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.nrows(),
            context: format!("junction matrix at vertex {}", v.id),
        });
    }
    Ok(())
}

/// Linear interpolation in `z = sqrt(lambda - lambda_open)`, where
/// `lambda_open` is the highest threshold already open at the vertex; the
/// junction matrix is analytic in that variable between thresholds.
fn interpolate(
    samples: &[JunctionSample],
    lambda: f64,
    open_threshold: f64,
    v: &Vertex,
) -> Result<CMatrix> {
    let (first, last) = match (samples.first(), samples.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(unresolvable(v, "empty table")),
    };
    if let Some(s) = samples.iter().find(|s| collides(lambda, s.lambda)) {
        return Ok(s.matrix.clone());
    }
    if lambda < first.lambda || lambda > last.lambda {
        return Err(unresolvable(
            v,
            format!(
                "lambda = {lambda} outside table range [{}, {}]",
                first.lambda, last.lambda
            ),
        ));
    }
    let k = samples
        .windows(2)
        .position(|w| w[0].lambda <= lambda && lambda <= w[1].lambda)
        .expect("lambda is inside the table range");
    let (a, b) = (&samples[k], &samples[k + 1]);
    if a.matrix.nrows() != b.matrix.nrows() || a.lambda <= open_threshold {
        return Err(unresolvable(
            v,
            format!("a threshold lies between table samples {} and {}", a.lambda, b.lambda),
        ));
    }
    let z = |x: f64| (x - open_threshold).max(0.0).sqrt();
    let w = if open_threshold.is_finite() {
        (z(lambda) - z(a.lambda)) / (z(b.lambda) - z(a.lambda))
    } else {
        (lambda - a.lambda) / (b.lambda - a.lambda)
    };
    Ok(CMatrix::from_fn(a.matrix.nrows(), a.matrix.ncols(), |i, j| {
        a.matrix[(i, j)] * (1.0 - w) + b.matrix[(i, j)] * w
    }))
}

fn check_request(g: &MetricGraph, req: &SolveRequest) -> Result<()> {
    if !(req.eps > 0.0 && req.eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps = {} must be positive", req.eps)));
    }
    if !req.lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {} must be finite", req.lambda)));
    }
    let lambda0 = cross_section::lambda0(g)?;
    if req.lambda <= lambda0 {
        return Err(Error::BelowSpectrum {
            lambda: req.lambda,
            lambda0,
        });
    }
    Ok(())
}

/// Builds the square system for the amplitudes: `alpha` on every channel and
/// `beta` on finite channels; known incident `beta` on infinite channels go to
/// the right-hand side.
pub fn assemble_system(g: &MetricGraph, req: &SolveRequest) -> Result<LinearSystem> {
    g.ensure_valid()?;
    check_request(g, req)?;
    let lambda = req.lambda;
    let ordering = global_ordering(g, lambda)?;
    let columns: Vec<usize> = match req.incident {
        IncidentSelection::All => (0..ordering.len()).collect(),
        IncidentSelection::One { channel, mode } => {
            vec![ordering.position(channel, mode).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "({channel}, {mode}) is not a propagating mode of an infinite channel"
                ))
            })?]
        }
    };

    let mut unknowns = Vec::new();
    let mut alpha_at = std::collections::HashMap::new();
    let mut beta_at = std::collections::HashMap::new();
    let mut thresholds = std::collections::HashMap::new();
    for c in &g.channels {
        let count = propagating_count_for(&c.cross_section, lambda, c.id)?;
        let t: Vec<f64> = cross_section::thresholds(&c.cross_section, count.max(1))
            .into_iter()
            .take(count)
            .collect();
        for n in 0..count {
            alpha_at.insert((c.id, n), unknowns.len());
            unknowns.push((c.id, false, n));
        }
        if !c.length.is_infinite() {
            for n in 0..count {
                beta_at.insert((c.id, n), unknowns.len());
                unknowns.push((c.id, true, n));
            }
        }
        thresholds.insert(c.id, t);
    }
    let n = unknowns.len();

    let vertices = g
        .vertices
        .iter()
        .map(|v| resolve_vertex(g, v, lambda))
        .collect::<Result<Vec<_>>>()?;
    let rows: usize = vertices.iter().map(|v| v.dim()).sum();
    if rows != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rows,
            context: "vertex equations vs amplitude unknowns".into(),
        });
    }

    let mut matrix = CMatrix::zeros(n, n);
    let mut rhs = CMatrix::zeros(n, columns.len());
    let mut row = 0;
    for vr in &vertices {
        let dim = vr.dim();
        // P = eps (I + T) D^{-1}, Q = i (I - T)
        let p = CMatrix::from_fn(dim, dim, |r, c| {
            let id = if r == c { ONE } else { ZERO };
            (id + vr.t[(r, c)]) * (req.eps / vr.d[c])
        });
        let q = CMatrix::from_fn(dim, dim, |r, c| {
            let id = if r == c { ONE } else { ZERO };
            I * (id - vr.t[(r, c)])
        });
        for r in 0..dim {
            for (c, &(cid, end, m)) in vr.order.iter().enumerate() {
                let ik = I * (vr.d[c] / req.eps);
                // s = a + b, s' = i kappa / eps (a - b) in the outward coordinate
                let coef_out = p[(r, c)] * ik + q[(r, c)];
                let coef_in = -p[(r, c)] * ik + q[(r, c)];
                let channel = g.channel(cid).expect("validated");
                match (end, channel.length) {
                    (End::Start, ChannelLength::Infinite) => {
                        matrix[(row + r, alpha_at[&(cid, m)])] += coef_out;
                        for (col, &gpos) in columns.iter().enumerate() {
                            if ordering.entries[gpos] == (cid, m) {
                                rhs[(row + r, col)] -= coef_in;
                            }
                        }
                    }
                    (End::Start, ChannelLength::Finite(_)) => {
                        matrix[(row + r, alpha_at[&(cid, m)])] += coef_out;
                        matrix[(row + r, beta_at[&(cid, m)])] += coef_in;
                    }
                    (End::End, ChannelLength::Finite(l)) => {
                        let e = propagation_factor(lambda, thresholds[&cid][m], l, req.eps);
                        // outgoing here is beta e^{-i theta}, incoming is alpha e^{i theta}
                        matrix[(row + r, beta_at[&(cid, m)])] += coef_out * e.conj();
                        matrix[(row + r, alpha_at[&(cid, m)])] += coef_in * e;
                    }
                    (End::End, ChannelLength::Infinite) => {
                        unreachable!("validation rejects the end of an infinite channel")
                    }
                }
            }
        }
        row += dim;
    }
    if vertices.iter().any(|v| v.d.iter().any(|&x| !(x > 0.0))) {
        return Err(Error::SingularAtThreshold);
    }
    Ok(LinearSystem {
        matrix,
        rhs,
        unknowns,
        columns,
        vertices,
        ordering,
    })
}

/// Solves and reports the condition estimate whether or not it is certified.
pub fn solve(g: &MetricGraph, req: &SolveRequest) -> Result<Solution> {
    let sys = assemble_system(g, req)?;
    let sol = solve_refined(&sys.matrix, &sys.rhs);
    let lambda = req.lambda;
    let m = sys.ordering.len();

    let mut fields = Vec::with_capacity(sys.columns.len());
    let mut t = CMatrix::zeros(m, sys.columns.len());
    for (col, &gpos) in sys.columns.iter().enumerate() {
        let mut channels = Vec::with_capacity(g.channels.len());
        for c in &g.channels {
            let count = propagating_count_for(&c.cross_section, lambda, c.id)?;
            let thresholds: Vec<f64> = cross_section::thresholds(&c.cross_section, count.max(1))
                .into_iter()
                .take(count)
                .collect();
            let mut alpha = vec![ZERO; count];
            let mut beta = vec![ZERO; count];
            for (k, &(cid, is_beta, n)) in sys.unknowns.iter().enumerate() {
                if cid == c.id {
                    let x = sol.solution[(k, col)];
                    if is_beta {
                        beta[n] = x;
                    } else {
                        alpha[n] = x;
                    }
                }
            }
            if c.length.is_infinite() {
                for (n, b) in beta.iter_mut().enumerate() {
                    *b = if sys.ordering.entries[gpos] == (c.id, n) { ONE } else { ZERO };
                }
            }
            channels.push(ChannelWave {
                channel: c.id,
                length: c.length,
                thresholds,
                alpha,
                beta,
            });
        }
        let field = EdgeWaveField {
            lambda,
            eps: req.eps,
            channels,
        };
        for (row, &(cid, n)) in sys.ordering.entries.iter().enumerate() {
            t[(row, col)] = field.channel(cid).expect("infinite channel").alpha[n];
        }
        fields.push(field);
    }
    let d = sys
        .ordering
        .entries
        .iter()
        .map(|&(cid, n)| {
            let c = g.channel(cid).expect("ordering comes from the graph");
            (lambda - cross_section::thresholds(&c.cross_section, n + 1)[n]).sqrt()
        })
        .collect();
    let certified = sol.rcond >= RCOND_THRESHOLD;
    Ok(Solution {
        fields,
        scattering: NetworkScattering {
            t,
            d,
            lambda,
            eps: req.eps,
            ordering: sys.ordering,
        },
        rcond: sol.rcond,
        certified,
    })
}

/// Certified solve: refuses with [`Error::NearSingular`] when the system is
/// too ill-conditioned to trust.
pub fn solve_scattering(
    g: &MetricGraph,
    req: &SolveRequest,
) -> Result<(Vec<EdgeWaveField>, NetworkScattering)> {
    let s = solve(g, req)?;
    if !s.certified {
        return Err(Error::NearSingular {
            lambda: req.lambda,
            rcond: s.rcond,
        });
    }
    Ok((s.fields, s.scattering))
}

/// Largest violation of the gluing condition at `v`, evaluated mode by mode
/// from the channel traces.
pub fn gc_residual(field: &EdgeWaveField, v: &VertexScatteringResolved, eps: f64) -> f64 {
    let mut s = Vec::with_capacity(v.dim());
    let mut ds = Vec::with_capacity(v.dim());
    for &(cid, end, n) in &v.order {
        let (values, derivs) = match field.trace(cid, end) {
            Some(t) => t,
            None => return f64::INFINITY,
        };
        s.push(values[n]);
        ds.push(derivs[n]);
    }
    let mut worst: f64 = 0.0;
    for r in 0..v.dim() {
        let mut sum = ZERO;
        for c in 0..v.dim() {
            let delta = if r == c { 1.0 } else { 0.0 };
            sum += (delta + v.t[(r, c)]) * (eps / v.d[c]) * ds[c];
            sum += I * (delta - v.t[(r, c)]) * s[c];
        }
        worst = worst.max(sum.norm());
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    /// Per incident column: `sum_j kappa_j |t_j|^2 - kappa_incident`.
    pub balances: Vec<f64>,
    /// Per pair of distinct columns `(c, c')`: `sum_j kappa_j t_{j,c} conj(t_{j,c'})`.
    pub cross: Vec<((usize, usize), C64)>,
}

impl EnergyReport {
    pub fn max_balance(&self) -> f64 {
        self.balances.iter().map(|b| b.abs()).fold(0.0, f64::max)
    }

    pub fn max_cross(&self) -> f64 {
        self.cross.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }
}

/// Flux balance of a square network scattering matrix.
pub fn energy_report(ns: &NetworkScattering) -> EnergyReport {
    let m = ns.t.nrows();
    let cols = ns.t.ncols();
    let inner = |a: usize, b: usize| -> C64 {
        (0..m).map(|j| ns.t[(j, a)] * ns.t[(j, b)].conj() * ns.d[j]).sum()
    };
    let balances = (0..cols).map(|c| inner(c, c).re - ns.d[c]).collect();
    let mut cross = Vec::new();
    for a in 0..cols {
        for b in a + 1..cols {
            cross.push(((a, b), inner(a, b)));
        }
    }
    EnergyReport { balances, cross }
}
