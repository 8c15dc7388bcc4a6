//! The limiting metric graph: channels, vertices and junction models.
//!
//! Indexing conventions live here. A vertex's `incident_ends` order is the row
//! and column order of its junction matrix, each end expanded into its
//! propagating modes by ascending mode index. The network-level ordering sorts
//! infinite channels by ascending id, then modes by ascending index.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::cross_section;
use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::helmholtz::PlanarGeometry;

/// Relative tolerance for rejecting `lambda` at a threshold.
pub const THRESHOLD_TOLERANCE: f64 = 1e-9;

/// True when `lambda` is within the collision tolerance of `threshold`.
pub fn collides(lambda: f64, threshold: f64) -> bool {
    (lambda - threshold).abs() < THRESHOLD_TOLERANCE * lambda.abs().max(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub enum CrossSectionShape {
    Interval { width: f64 },
    Rectangle { a: f64, b: f64 },
    Disk { radius: f64 },
}

impl CrossSectionShape {
    pub fn dims(&self) -> Vec<f64> {
        match *self {
            CrossSectionShape::Interval { width } => vec![width],
            CrossSectionShape::Rectangle { a, b } => vec![a, b],
            CrossSectionShape::Disk { radius } => vec![radius],
        }
    }

    pub fn is_valid(&self) -> bool {
        self.dims().iter().all(|d| d.is_finite() && *d > 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelLength {
    Finite(f64),
    Infinite,
}

impl ChannelLength {
    pub fn is_infinite(self) -> bool {
        matches!(self, ChannelLength::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ChannelLength::Finite(l) => Some(l),
            ChannelLength::Infinite => None,
        }
    }
}

/// Which end of a channel a vertex touches. `Start` is `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Start,
    End,
}

impl fmt::Display for End {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            End::Start => "start",
            End::End => "end",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub id: usize,
    pub length: ChannelLength,
    pub cross_section: CrossSectionShape,
    pub start_vertex: usize,
    pub end_vertex: Option<usize>,
}

impl Channel {
    pub fn infinite(id: usize, cross_section: CrossSectionShape, start_vertex: usize) -> Self {
        Self {
            id,
            length: ChannelLength::Infinite,
            cross_section,
            start_vertex,
            end_vertex: None,
        }
    }

    pub fn finite(
        id: usize,
        length: f64,
        cross_section: CrossSectionShape,
        start_vertex: usize,
        end_vertex: usize,
    ) -> Self {
        Self {
            id,
            length: ChannelLength::Finite(length),
            cross_section,
            start_vertex,
            end_vertex: Some(end_vertex),
        }
    }
}

/// One `(lambda, T)` sample of a tabulated junction.
#[derive(Clone, Debug, PartialEq)]
pub struct JunctionSample {
    pub lambda: f64,
    pub matrix: CMatrix,
}

/// Where a computed junction table came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub h: f64,
    pub geometry_hash: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum JunctionModel {
    /// Decoupling condition, `T_v = -I`.
    Dirichlet,
    /// Straight pass-through between the vertex's two ends.
    Transparent,
    /// A matrix valid only at `lambda`.
    Matrix { lambda: f64, matrix: CMatrix },
    Tabulated {
        samples: Vec<JunctionSample>,
        provenance: Option<Provenance>,
    },
    /// Computed on demand by the finite-difference oracle.
    FromOracle(Box<PlanarGeometry>),
}

impl JunctionModel {
    pub fn kind(&self) -> &'static str {
        match self {
            JunctionModel::Dirichlet => "dirichlet",
            JunctionModel::Transparent => "transparent",
            JunctionModel::Matrix { .. } => "matrix",
            JunctionModel::Tabulated { .. } => "tabulated",
            JunctionModel::FromOracle(_) => "oracle",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub incident_ends: Vec<(usize, End)>,
    pub junction: JunctionModel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricGraph {
    pub channels: Vec<Channel>,
    pub vertices: Vec<Vertex>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonPositiveCrossSection { channel: usize },
    NonPositiveLength { channel: usize },
    InfiniteEndMismatch { channel: usize },
    DuplicateChannel { channel: usize },
    DuplicateVertex { vertex: usize },
    EmptyVertex { vertex: usize },
    UnknownChannel { vertex: usize, channel: usize },
    /// A channel end whose declared vertex does not list it.
    DanglingEnd { channel: usize, end: End },
    /// A channel end listed at a vertex other than the one the channel declares,
    /// or listed more than once.
    MisattachedEnd { vertex: usize, channel: usize, end: End },
    EndOfInfiniteChannel { vertex: usize, channel: usize },
    TransparentArity { vertex: usize, ends: usize },
    CrossSectionMismatch { vertex: usize },
    NonSquareMatrix { vertex: usize },
    TableNotIncreasing { vertex: usize },
    EmptyTable { vertex: usize },
    NoInfiniteChannels,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NonPositiveCrossSection { channel } => {
                write!(f, "channel {channel}: cross-section dimensions must be positive and finite")
            }
            NonPositiveLength { channel } => write!(f, "channel {channel}: finite length must be positive"),
            InfiniteEndMismatch { channel } => {
                write!(f, "channel {channel}: infinite length requires no end vertex and vice versa")
            }
            DuplicateChannel { channel } => write!(f, "channel id {channel} is duplicated"),
            DuplicateVertex { vertex } => write!(f, "vertex id {vertex} is duplicated"),
            EmptyVertex { vertex } => write!(f, "vertex {vertex}: no incident ends"),
            UnknownChannel { vertex, channel } => {
                write!(f, "vertex {vertex}: references unknown channel {channel}")
            }
            DanglingEnd { channel, end } => {
                write!(f, "channel {channel}: {end} end is not attached to its declared vertex (dangling end)")
            }
            MisattachedEnd { vertex, channel, end } => {
                write!(f, "vertex {vertex}: end ({channel}, {end}) is attached elsewhere or listed twice")
            }
            EndOfInfiniteChannel { vertex, channel } => {
                write!(f, "vertex {vertex}: infinite channel {channel} has no end")
            }
            TransparentArity { vertex, ends } => {
                write!(f, "vertex {vertex}: transparent junction needs exactly 2 ends, has {ends}")
            }
            CrossSectionMismatch { vertex } => {
                write!(f, "vertex {vertex}: transparent junction pairs different cross-sections (cross-section mismatch)")
            }
            NonSquareMatrix { vertex } => write!(f, "vertex {vertex}: junction matrix is not square"),
            TableNotIncreasing { vertex } => {
                write!(f, "vertex {vertex}: tabulated lambdas must be strictly increasing")
            }
            EmptyTable { vertex } => write!(f, "vertex {vertex}: tabulated junction has no samples"),
            NoInfiniteChannels => write!(f, "graph has no infinite channels"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant and reports all violations found.
pub fn validate_graph(g: &MetricGraph) -> ValidationReport {
    let mut out = Vec::new();

    let mut channels: HashMap<usize, &Channel> = HashMap::new();
    for c in &g.channels {
        if channels.insert(c.id, c).is_some() {
            out.push(Violation::DuplicateChannel { channel: c.id });
        }
        if !c.cross_section.is_valid() {
            out.push(Violation::NonPositiveCrossSection { channel: c.id });
        }
        if let ChannelLength::Finite(l) = c.length {
            if !(l.is_finite() && l > 0.0) {
                out.push(Violation::NonPositiveLength { channel: c.id });
            }
        }
        if c.length.is_infinite() != c.end_vertex.is_none() {
            out.push(Violation::InfiniteEndMismatch { channel: c.id });
        }
    }

    let mut vertex_ids = HashSet::new();
    // (channel, end) -> vertices listing it
    let mut attached: BTreeMap<(usize, End), Vec<usize>> = BTreeMap::new();
    for v in &g.vertices {
        if !vertex_ids.insert(v.id) {
            out.push(Violation::DuplicateVertex { vertex: v.id });
        }
        if v.incident_ends.is_empty() {
            out.push(Violation::EmptyVertex { vertex: v.id });
        }
        for &(cid, end) in &v.incident_ends {
            match channels.get(&cid) {
                None => out.push(Violation::UnknownChannel { vertex: v.id, channel: cid }),
                Some(c) => {
                    if end == End::End && c.length.is_infinite() {
                        out.push(Violation::EndOfInfiniteChannel { vertex: v.id, channel: cid });
                        continue;
                    }
                    attached.entry((cid, end)).or_default().push(v.id);
                }
            }
        }
        validate_junction(v, &channels, &mut out);
    }

    for c in &g.channels {
        let mut ends = vec![(End::Start, Some(c.start_vertex))];
        if !c.length.is_infinite() {
            ends.push((End::End, c.end_vertex));
        }
        for (end, declared) in ends {
            let Some(declared) = declared else { continue };
            let listed = attached.get(&(c.id, end)).map(Vec::as_slice).unwrap_or(&[]);
            if !listed.contains(&declared) {
                out.push(Violation::DanglingEnd { channel: c.id, end });
            }
            let mut seen_declared = false;
            for &vid in listed {
                if vid == declared && !seen_declared {
                    seen_declared = true;
                } else {
                    out.push(Violation::MisattachedEnd {
                        vertex: vid,
                        channel: c.id,
                        end,
                    });
                }
            }
        }
    }

    if !g.channels.iter().any(|c| c.length.is_infinite()) {
        out.push(Violation::NoInfiniteChannels);
    }

    ValidationReport { violations: out }
}

fn validate_junction(
    v: &Vertex,
    channels: &HashMap<usize, &Channel>,
    out: &mut Vec<Violation>,
) {
    match &v.junction {
        JunctionModel::Transparent => {
            if v.incident_ends.len() != 2 {
                out.push(Violation::TransparentArity {
                    vertex: v.id,
                    ends: v.incident_ends.len(),
                });
                return;
            }
            let a = channels.get(&v.incident_ends[0].0);
            let b = channels.get(&v.incident_ends[1].0);
            if let (Some(a), Some(b)) = (a, b) {
                if a.cross_section != b.cross_section {
                    out.push(Violation::CrossSectionMismatch { vertex: v.id });
                }
            }
        }
        JunctionModel::Matrix { matrix, .. } => {
            if !matrix.is_square() {
                out.push(Violation::NonSquareMatrix { vertex: v.id });
            }
        }
        JunctionModel::Tabulated { samples, .. } => {
            if samples.is_empty() {
                out.push(Violation::EmptyTable { vertex: v.id });
            }
            if samples.iter().any(|s| !s.matrix.is_square()) {
                out.push(Violation::NonSquareMatrix { vertex: v.id });
            }
            if samples.windows(2).any(|w| !(w[0].lambda < w[1].lambda)) {
                out.push(Violation::TableNotIncreasing { vertex: v.id });
            }
        }
        JunctionModel::Dirichlet | JunctionModel::FromOracle(_) => {}
    }
}

/// Network-level mode order: `(channel id, mode index)` over infinite channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalModeOrdering {
    pub entries: Vec<(usize, usize)>,
}

impl GlobalModeOrdering {
    /// Total number of propagating modes `M`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, channel: usize, mode: usize) -> Option<usize> {
        self.entries.iter().position(|&e| e == (channel, mode))
    }
}

impl MetricGraph {
    pub fn channel(&self, id: usize) -> Option<&Channel> {
        self.channels.iter().find(|c| c.id == id)
    }

    pub fn vertex(&self, id: usize) -> Option<&Vertex> {
        self.vertices.iter().find(|v| v.id == id)
    }

    /// Infinite channel ids in ascending order.
    pub fn infinite_channel_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .channels
            .iter()
            .filter(|c| c.length.is_infinite())
            .map(|c| c.id)
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Validation as a hard error, for entry points that need a sound graph.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_graph(self);
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(report.to_string()))
        }
    }
}

/// Propagating modes of the infinite channels at `lambda`.
pub fn global_ordering(g: &MetricGraph, lambda: f64) -> Result<GlobalModeOrdering> {
    let mut entries = Vec::new();
    for id in g.infinite_channel_ids() {
        let c = g.channel(id).expect("id from the graph");
        let count = cross_section::propagating_count_for(&c.cross_section, lambda, id)?;
        entries.extend((0..count).map(|n| (id, n)));
    }
    Ok(GlobalModeOrdering { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn iv(w: f64) -> CrossSectionShape {
        CrossSectionShape::Interval { width: w }
    }

    fn one_dirichlet() -> MetricGraph {
        MetricGraph {
            channels: vec![Channel::infinite(1, iv(PI), 0)],
            vertices: vec![Vertex {
                id: 0,
                incident_ends: vec![(1, End::Start)],
                junction: JunctionModel::Dirichlet,
            }],
        }
    }

    #[test]
    fn minimal_graph_is_valid() {
        assert!(validate_graph(&one_dirichlet()).is_valid());
    }

    #[test]
    fn unreferenced_end_vertex_is_one_dangling_end() {
        let mut g = one_dirichlet();
        g.channels.push(Channel::finite(2, 1.0, iv(PI), 0, 7));
        g.vertices[0].incident_ends.push((2, End::Start));
        let r = validate_graph(&g);
        assert_eq!(r.violations, vec![Violation::DanglingEnd { channel: 2, end: End::End }]);
    }

    #[test]
    fn transparent_width_mismatch_is_one_violation() {
        let g = MetricGraph {
            channels: vec![Channel::infinite(1, iv(PI), 0), Channel::infinite(2, iv(PI / 2.0), 0)],
            vertices: vec![Vertex {
                id: 0,
                incident_ends: vec![(1, End::Start), (2, End::Start)],
                junction: JunctionModel::Transparent,
            }],
        };
        assert_eq!(
            validate_graph(&g).violations,
            vec![Violation::CrossSectionMismatch { vertex: 0 }]
        );
    }

    #[test]
    fn end_listed_at_two_vertices_is_reported() {
        let mut g = one_dirichlet();
        g.vertices.push(Vertex {
            id: 1,
            incident_ends: vec![(1, End::Start)],
            junction: JunctionModel::Dirichlet,
        });
        let r = validate_graph(&g);
        assert_eq!(
            r.violations,
            vec![Violation::MisattachedEnd { vertex: 1, channel: 1, end: End::Start }]
        );
    }

    #[test]
    fn infinite_channel_with_end_vertex_is_flagged() {
        let mut g = one_dirichlet();
        g.channels[0].end_vertex = Some(0);
        assert!(validate_graph(&g)
            .violations
            .contains(&Violation::InfiniteEndMismatch { channel: 1 }));
    }

    #[test]
    fn graph_without_infinite_channels_is_flagged() {
        let g = MetricGraph {
            channels: vec![Channel::finite(1, 1.0, iv(PI), 0, 0)],
            vertices: vec![Vertex {
                id: 0,
                incident_ends: vec![(1, End::Start), (1, End::End)],
                junction: JunctionModel::Dirichlet,
            }],
        };
        assert_eq!(validate_graph(&g).violations, vec![Violation::NoInfiniteChannels]);
    }

    #[test]
    fn ordering_two_channels_two_modes() {
        let g = MetricGraph {
            channels: vec![Channel::infinite(2, iv(PI), 0), Channel::infinite(1, iv(PI), 0)],
            vertices: vec![Vertex {
                id: 0,
                incident_ends: vec![(1, End::Start), (2, End::Start)],
                junction: JunctionModel::Dirichlet,
            }],
        };
        let o = global_ordering(&g, 5.0).unwrap();
        assert_eq!(o.entries, vec![(1, 0), (1, 1), (2, 0), (2, 1)]);
        assert_eq!(o.len(), 4);
    }

    #[test]
    fn ordering_below_threshold_is_empty() {
        let o = global_ordering(&one_dirichlet(), 0.5).unwrap();
        assert!(o.is_empty());
    }

    #[test]
    fn ordering_mixed_widths() {
        let g = MetricGraph {
            channels: vec![Channel::infinite(1, iv(PI), 0), Channel::infinite(2, iv(PI / 2.0), 0)],
            vertices: vec![Vertex {
                id: 0,
                incident_ends: vec![(1, End::Start), (2, End::Start)],
                junction: JunctionModel::Dirichlet,
            }],
        };
        assert_eq!(global_ordering(&g, 2.0).unwrap().entries, vec![(1, 0)]);
    }

    #[test]
    fn ordering_rejects_threshold() {
        let err = global_ordering(&one_dirichlet(), 4.0 + 1e-12).unwrap_err();
        assert!(matches!(err, Error::ThresholdCollision { channel: 1, mode: 1, .. }));
    }
}
