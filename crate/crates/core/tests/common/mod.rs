#![allow(dead_code)]

use std::f64::consts::PI;

use fiberwave_core::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn iv(w: f64) -> CrossSectionShape {
    CrossSectionShape::Interval { width: w }
}

pub fn vertex(id: usize, ends: &[(usize, End)], junction: JunctionModel) -> Vertex {
    Vertex {
        id,
        incident_ends: ends.to_vec(),
        junction,
    }
}

/// One infinite channel of width pi ending at a Dirichlet vertex.
pub fn dirichlet_one() -> MetricGraph {
    MetricGraph {
        channels: vec![Channel::infinite(0, iv(PI), 0)],
        vertices: vec![vertex(0, &[(0, End::Start)], JunctionModel::Dirichlet)],
    }
}

/// Two infinite channels joined by a transparent vertex.
pub fn transparent_pair() -> MetricGraph {
    MetricGraph {
        channels: vec![Channel::infinite(0, iv(PI), 0), Channel::infinite(1, iv(PI), 0)],
        vertices: vec![vertex(
            0,
            &[(0, End::Start), (1, End::Start)],
            JunctionModel::Transparent,
        )],
    }
}

/// infinite -(v0)- finite(l) -(v1), with the given junctions.
pub fn stub_line(l: f64, v0: JunctionModel, v1: JunctionModel) -> MetricGraph {
    MetricGraph {
        channels: vec![Channel::infinite(0, iv(PI), 0), Channel::finite(1, l, iv(PI), 0, 1)],
        vertices: vec![
            vertex(0, &[(0, End::Start), (1, End::Start)], v0),
            vertex(1, &[(1, End::End)], v1),
        ],
    }
}

/// infinite -(transparent)- finite(l) -(transparent)- infinite.
pub fn fabry_perot(l: f64) -> MetricGraph {
    MetricGraph {
        channels: vec![
            Channel::infinite(0, iv(PI), 0),
            Channel::finite(1, l, iv(PI), 0, 1),
            Channel::infinite(2, iv(PI), 1),
        ],
        vertices: vec![
            vertex(0, &[(0, End::Start), (1, End::Start)], JunctionModel::Transparent),
            vertex(1, &[(1, End::End), (2, End::Start)], JunctionModel::Transparent),
        ],
    }
}

/// Two planar junctions joined through their facing stubs by one finite channel.
/// Vertex 0 uses stub `out` toward vertex 1, which uses stub `back`.
pub fn planar_pair(a: &PlanarGeometry, out: usize, b: &PlanarGeometry, back: usize, l: f64) -> MetricGraph {
    let w = a.stubs[out].width;
    let mut channels = vec![Channel::finite(0, l, iv(w), 0, 1)];
    let mut ends0 = Vec::new();
    let mut ends1 = Vec::new();
    let mut next = 1;
    for (i, s) in a.stubs.iter().enumerate() {
        if i == out {
            ends0.push((0, End::Start));
        } else {
            channels.push(Channel::infinite(next, iv(s.width), 0));
            ends0.push((next, End::Start));
            next += 1;
        }
    }
    for (i, s) in b.stubs.iter().enumerate() {
        if i == back {
            ends1.push((0, End::End));
        } else {
            channels.push(Channel::infinite(next, iv(s.width), 1));
            ends1.push((next, End::Start));
            next += 1;
        }
    }
    MetricGraph {
        channels,
        vertices: vec![
            vertex(0, &ends0, JunctionModel::FromOracle(Box::new(a.clone()))),
            vertex(1, &ends1, JunctionModel::FromOracle(Box::new(b.clone()))),
        ],
    }
}

/// Two crosses joined along x (`+x` of the first to `-x` of the second).
pub fn two_crosses(h: f64, l: f64) -> MetricGraph {
    let c = PlanarGeometry::cross(PI, h);
    planar_pair(&c, 1, &c, 0, l)
}

/// Reflection on a uniform single-mode line: the incident side is a
/// half-line, then transparent interfaces, then a Dirichlet wall after total
/// length `l`. Solved as a 3x3 system in plane-wave amplitudes, independent
/// of the graph assembly.
pub fn line_reflection_dirichlet(kappa: f64, l: f64, eps: f64) -> C64 {
    // u = e^{i k x} + r e^{-i k x} for x < 0; A e^{i k x} + B e^{-i k x} on (0, l); u(l) = 0
    let th = kappa * l / eps;
    let e = C64::from_polar(1.0, th);
    // unknowns (r, A, B); rows: value at 0, derivative at 0, value at l
    let m = [
        [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(-1.0, 0.0)],
        [C64::new(-1.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(0.0, 0.0), e, e.inv()],
    ];
    let b = [C64::new(-1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 0.0)];
    cramer3(&m, &b)[0]
}

/// Transmission through a free segment of length `l`, again from plane waves.
pub fn line_transmission_free(kappa: f64, l: f64, eps: f64) -> C64 {
    // the right half-line's outgoing wave starts at x = l with amplitude e^{i k l / eps}
    C64::from_polar(1.0, kappa * l / eps)
}

fn cramer3(m: &[[C64; 3]; 3], b: &[C64; 3]) -> [C64; 3] {
    let det = |a: &[[C64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    let mut out = [C64::new(0.0, 0.0); 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = *m;
        for r in 0..3 {
            mk[r][k] = b[r];
        }
        *o = det(&mk) / d;
    }
    out
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Haar-distributed unitary matrix from Gram-Schmidt on a complex Gaussian matrix.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for q in &cols {
                let dot: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= dot * y;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|x| x / norm).collect());
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Random symmetric unitary `U U^T`.
pub fn random_symmetric_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let u = haar_unitary(n, rng);
    &u * &u.transpose()
}

/// `T = D^{-1/2} A D^{1/2}`, so that `D^{1/2} T D^{-1/2} = A`.
pub fn junction_from_symmetrized(a: &CMatrix, d: &[f64]) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * (d[j].sqrt() / d[i].sqrt()))
}

/// `sqrt(lambda - lambda_n)` over the propagating modes of each listed end.
pub fn vertex_kappas(g: &MetricGraph, ends: &[(usize, End)], lambda: f64) -> Vec<f64> {
    let mut d = Vec::new();
    for &(cid, _) in ends {
        let c = g.channel(cid).unwrap();
        let t = cross_section::propagating_thresholds(&c.cross_section, lambda).unwrap();
        d.extend(t.iter().map(|t| (lambda - t).sqrt()));
    }
    d
}

/// Fills every vertex of `g` with a random junction whose symmetrized form
/// is a random symmetric unitary at `lambda`.
pub fn assign_unitary_junctions(g: &mut MetricGraph, lambda: f64, rng: &mut impl Rng) {
    for k in 0..g.vertices.len() {
        let d = vertex_kappas(g, &g.vertices[k].incident_ends, lambda);
        let a = random_symmetric_unitary(d.len(), rng);
        g.vertices[k].junction = JunctionModel::Matrix {
            lambda,
            matrix: junction_from_symmetrized(&a, &d),
        };
    }
}

const WIDTHS: [f64; 3] = [PI, 1.2 * PI, 0.8 * PI];

/// A random network with at most 6 vertices and 10 channels, carrying random
/// unitary-symmetric junctions at a random `lambda`; returns `(g, lambda, eps)`.
pub fn random_network(rng: &mut impl Rng) -> (MetricGraph, f64, f64) {
    loop {
        let nv = rng.random_range(1..=6usize);
        let mut channels = Vec::new();
        let mut ends: Vec<Vec<(usize, End)>> = vec![Vec::new(); nv];
        let mut add_finite = |a: usize, b: usize, channels: &mut Vec<Channel>, rng: &mut dyn rand::RngCore| {
            let id = channels.len();
            let w = WIDTHS[rng.random_range(0..WIDTHS.len())];
            let l = rng.random_range(0.2..3.0);
            channels.push(Channel::finite(id, l, iv(w), a, b));
            ends[a].push((id, End::Start));
            ends[b].push((id, End::End));
        };
        for v in 1..nv {
            let u = rng.random_range(0..v);
            add_finite(u, v, &mut channels, rng);
        }
        let extra = rng.random_range(0..=(9 - (nv - 1)).min(3));
        for _ in 0..extra {
            let a = rng.random_range(0..nv);
            let b = rng.random_range(0..nv);
            add_finite(a, b, &mut channels, rng);
        }
        let infinite = rng.random_range(1..=(10 - channels.len()).min(4));
        for _ in 0..infinite {
            let id = channels.len();
            let v = rng.random_range(0..nv);
            let w = WIDTHS[rng.random_range(0..WIDTHS.len())];
            channels.push(Channel::infinite(id, iv(w), v));
            ends[v].push((id, End::Start));
        }
        let vertices = ends
            .into_iter()
            .enumerate()
            .map(|(id, e)| vertex(id, &e, JunctionModel::Dirichlet))
            .collect();
        let mut g = MetricGraph { channels, vertices };
        let lambda = rng.random_range(1.6..7.0);
        let near_threshold = g.channels.iter().any(|c| {
            cross_section::thresholds(&c.cross_section, 6)
                .iter()
                .any(|t| (lambda - t).abs() < 1e-3)
        });
        if near_threshold {
            continue;
        }
        let eps = 10f64.powf(rng.random_range(-2.0..0.0));
        assign_unitary_junctions(&mut g, lambda, rng);
        return (g, lambda, eps);
    }
}

/// `(||A*A - I||_F, ||A - A^T||_F)`.
pub fn unitarity_defects(a: &CMatrix) -> (f64, f64) {
    let p = &a.adjoint() * a;
    let u = (&p - &CMatrix::identity(a.nrows())).norm_fro();
    let s = (a - &a.transpose()).norm_fro();
    (u, s)
}
