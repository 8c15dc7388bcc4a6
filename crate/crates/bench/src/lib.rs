//! Fixture networks shared by the benchmarks.

use std::f64::consts::PI;

use fiberwave_core::{Channel, CrossSectionShape, End, JunctionModel, MetricGraph, Vertex};

fn iv() -> CrossSectionShape {
    CrossSectionShape::Interval { width: PI }
}

/// A half-line feeding a finite edge of length `l` closed by Dirichlet vertices.
pub fn dirichlet_edge(l: f64) -> MetricGraph {
    MetricGraph {
        channels: vec![Channel::infinite(0, iv(), 0), Channel::finite(1, l, iv(), 0, 1)],
        vertices: vec![
            Vertex {
                id: 0,
                incident_ends: vec![(0, End::Start), (1, End::Start)],
                junction: JunctionModel::Dirichlet,
            },
            Vertex {
                id: 1,
                incident_ends: vec![(1, End::End)],
                junction: JunctionModel::Dirichlet,
            },
        ],
    }
}

/// `n` transparent vertices in a row, joined by finite edges, with a half-line at each end.
pub fn transparent_chain(n: usize, l: f64) -> MetricGraph {
    assert!(n >= 1);
    let mut channels = vec![Channel::infinite(0, iv(), 0)];
    for k in 0..n - 1 {
        channels.push(Channel::finite(k + 1, l, iv(), k, k + 1));
    }
    channels.push(Channel::infinite(n, iv(), n - 1));
    let vertices = (0..n)
        .map(|k| Vertex {
            id: k,
            incident_ends: vec![(k, if k == 0 { End::Start } else { End::End }), (k + 1, End::Start)],
            junction: JunctionModel::Transparent,
        })
        .collect();
    MetricGraph { channels, vertices }
}
