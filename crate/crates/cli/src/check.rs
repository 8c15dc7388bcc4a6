//! The `check` property table.

use anyhow::anyhow;
use fiberwave_core::solver::{self, energy_report, gc_residual, resolve_vertex};
use fiberwave_core::{
    CMatrix, Channel, End, MetricGraph, SolveRequest, Vertex, C64,
};

use crate::commands::load_graph;
use crate::{CheckArgs, Failure, EXIT_NUMERIC};

struct Row {
    name: String,
    value: f64,
    tol: f64,
    /// The value must reach the tolerance rather than stay below it.
    floor: bool,
}

impl Row {
    fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tol, floor: false }
    }

    fn pass(&self) -> bool {
        if self.floor {
            self.value >= self.tol
        } else {
            self.value <= self.tol
        }
    }
}

fn defects(a: &CMatrix) -> (f64, f64) {
    let u = (&(&a.adjoint() * a) - &CMatrix::identity(a.nrows())).norm_fro();
    (u, (a - &a.transpose()).norm_fro())
}

/// The vertex alone, with every incident end turned into an outgoing infinite channel.
fn spider_of(g: &MetricGraph, v: &Vertex) -> MetricGraph {
    let mut channels = Vec::new();
    let mut ends = Vec::new();
    for (i, &(cid, _)) in v.incident_ends.iter().enumerate() {
        let c = g.channel(cid).expect("validated graph");
        channels.push(Channel::infinite(i, c.cross_section.clone(), 0));
        ends.push((i, End::Start));
    }
    MetricGraph {
        channels,
        vertices: vec![Vertex {
            id: 0,
            incident_ends: ends,
            junction: v.junction.clone(),
        }],
    }
}

/// Largest of `|S(0) - (I + T)|` and `eps |S'(0) - (i/eps) D (T - I)|` on the spider of `v`.
fn spider_deviation(g: &MetricGraph, v: &Vertex, lambda: f64, eps: f64) -> fiberwave_core::Result<f64> {
    let sg = spider_of(g, v);
    let rv = resolve_vertex(&sg, &sg.vertices[0], lambda)?;
    let s = solver::solve(&sg, &SolveRequest::all(lambda, eps))?;
    let mut worst: f64 = 0.0;
    for (col, f) in s.fields.iter().enumerate() {
        for (row, &(cid, end, n)) in rv.order.iter().enumerate() {
            let (val, der) = f.trace(cid, end).expect("spider channel");
            let delta = if row == col { 1.0 } else { 0.0 };
            let sigma = rv.t[(row, col)] + delta;
            let dsigma = C64::new(0.0, rv.d[row]) * (rv.t[(row, col)] - delta);
            worst = worst.max((val[n] - sigma).norm()).max((der[n] * eps - dsigma).norm());
        }
    }
    Ok(worst)
}

pub fn run(a: CheckArgs) -> Result<(), Failure> {
    let g = load_graph(&a.graph)?;
    let s = solver::solve(&g, &SolveRequest::all(a.lambda, a.eps))?;
    let mut rows = Vec::new();
    let tol = a.tol;

    for v in &g.vertices {
        let rv = resolve_vertex(&g, v, a.lambda)?;
        let (u, sym) = defects(&rv.symmetrized());
        rows.push(Row::at_most(format!("junction {} unitarity", v.id), u, tol));
        rows.push(Row::at_most(format!("junction {} symmetry", v.id), sym, tol));
    }
    rows.push(Row {
        name: "reciprocal condition (at least)".into(),
        value: s.rcond,
        tol: solver::RCOND_THRESHOLD,
        floor: true,
    });
    let (u, sym) = defects(&s.scattering.symmetrized());
    rows.push(Row::at_most("network unitarity", u, tol));
    rows.push(Row::at_most("network symmetry", sym, tol));
    let e = energy_report(&s.scattering);
    rows.push(Row::at_most("flux balance", e.max_balance(), tol));
    rows.push(Row::at_most("flux cross terms", e.max_cross(), tol));
    for v in &g.vertices {
        let rv = resolve_vertex(&g, v, a.lambda)?;
        let r = s.fields.iter().map(|f| gc_residual(f, &rv, a.eps)).fold(0.0, f64::max);
        rows.push(Row::at_most(format!("gluing condition at vertex {}", v.id), r, tol));
    }
    for v in &g.vertices {
        let d = spider_deviation(&g, v, a.lambda, a.eps)?;
        rows.push(Row::at_most(format!("spider consistency at vertex {}", v.id), d, tol));
    }

    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    println!("{:width$}  {:>10}  {:>10}  result", "check", "value", "tolerance");
    for r in &rows {
        println!(
            "{:width$}  {:>10.3e}  {:>10.3e}  {}",
            r.name,
            r.value,
            r.tol,
            if r.pass() { "PASS" } else { "FAIL" }
        );
    }
    let failed = rows.iter().filter(|r| !r.pass()).count();
    if failed > 0 {
        return Err(Failure::new(EXIT_NUMERIC, anyhow!("{failed} check(s) failed")));
    }
    Ok(())
}
