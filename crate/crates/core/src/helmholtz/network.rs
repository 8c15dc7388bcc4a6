//! Whole-network solves: every junction and finite channel meshed together.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::grid::{self, Domain, PortSpec};
use super::{Incident, ModalAmplitudes, PlanarGeometry};
use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::graph::{global_ordering, ChannelLength, CrossSectionShape, End, JunctionModel, MetricGraph};

/// Largest number of interior grid nodes a single solve may use.
pub const GRID_BUDGET: usize = 500_000;

/// A meshed network, ready to solve for any incident wave on its infinite channels.
pub struct NetworkOracle {
    domain: Domain,
    /// Infinite channel id of each port, ascending.
    channels: Vec<usize>,
}

fn geometry_of(g: &MetricGraph, v: usize) -> Result<&PlanarGeometry> {
    let vertex = &g.vertices[v];
    match &vertex.junction {
        JunctionModel::FromOracle(geom) => {
            if geom.stubs.len() != vertex.incident_ends.len() {
                return Err(Error::GeometryInvalid(format!(
                    "vertex {}: {} stubs for {} channel ends",
                    vertex.id,
                    geom.stubs.len(),
                    vertex.incident_ends.len()
                )));
            }
            Ok(geom)
        }
        other => Err(Error::GeometryInvalid(format!(
            "vertex {} has a {} junction; the network oracle needs a planar geometry at every vertex",
            vertex.id,
            other.kind()
        ))),
    }
}

impl NetworkOracle {
    /// Meshes `g` at thickness `eps`: junctions keep their size and finite
    /// channels are stretched to `length / eps`.
    pub fn new(g: &MetricGraph, lambda: f64, eps: f64) -> Result<Self> {
        g.ensure_valid()?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
        }
        if g.vertices.is_empty() {
            return Err(Error::GeometryInvalid("network has no vertices".into()));
        }
        let geoms = (0..g.vertices.len())
            .map(|v| geometry_of(g, v))
            .collect::<Result<Vec<_>>>()?;
        for geom in &geoms {
            geom.check()?;
        }
        let h = geoms[0].h;
        if geoms.iter().any(|geom| geom.h != h) {
            return Err(Error::GeometryInvalid("all junction geometries must share one grid spacing".into()));
        }
        let evanescent = geoms.iter().map(|geom| geom.evanescent_modes).max().unwrap_or(0);
        // (vertex index, stub index) for each channel end
        let mut stub_of: HashMap<(usize, End), (usize, usize)> = HashMap::new();
        for (k, v) in g.vertices.iter().enumerate() {
            for (i, &end) in v.incident_ends.iter().enumerate() {
                stub_of.insert(end, (k, i));
            }
        }
        for c in &g.channels {
            let (v, i) = stub_of[&(c.id, End::Start)];
            let CrossSectionShape::Interval { width } = c.cross_section else {
                return Err(Error::GeometryInvalid(format!(
                    "channel {}: planar networks need interval cross-sections",
                    c.id
                )));
            };
            if (geoms[v].stubs[i].width - width).abs() > 1e-9 * width {
                return Err(Error::GeometryInvalid(format!(
                    "channel {}: width {width} differs from its stub width {}",
                    c.id, geoms[v].stubs[i].width
                )));
            }
        }

        // Place every junction by walking finite channels from the first vertex.
        let mut shift: Vec<Option<(i64, i64)>> = vec![None; g.vertices.len()];
        let mut finite_specs = Vec::new();
        shift[0] = Some((0, 0));
        let mut queue = VecDeque::from([0usize]);
        let mut seen_channels = BTreeSet::new();
        while let Some(v) = queue.pop_front() {
            let sv = shift[v].expect("queued vertices are placed");
            for &(cid, end) in &g.vertices[v].incident_ends {
                let c = g.channel(cid).expect("validated");
                let ChannelLength::Finite(l) = c.length else {
                    continue;
                };
                let other_end = match end {
                    End::Start => End::End,
                    End::End => End::Start,
                };
                let (w, j) = stub_of[&(cid, other_end)];
                if w == v {
                    return Err(Error::GeometryInvalid(format!("channel {cid} is a self-loop")));
                }
                let (_, i) = stub_of[&(cid, end)];
                let here = grid::stub_spec(geoms[v], i, sv)?;
                let there_dir = geoms[w].stubs[j].direction;
                if there_dir != geoms[v].stubs[i].direction.opposite() {
                    return Err(Error::GeometryInvalid(format!(
                        "channel {cid}: stubs at its two ends do not face each other"
                    )));
                }
                let span = geoms[v].grid_units(l / eps, &format!("channel {cid} length / eps"))?;
                let target = here.node(span, 0);
                let raw = grid::stub_spec(geoms[w], j, (0, 0))?;
                let sw = (target.0 - raw.origin.0, target.1 - raw.origin.1);
                match shift[w] {
                    None => {
                        shift[w] = Some(sw);
                        queue.push_back(w);
                    }
                    Some(existing) if existing != sw => {
                        return Err(Error::GeometryInvalid(format!(
                            "channel {cid} closes a cycle whose lengths are inconsistent in the plane"
                        )));
                    }
                    Some(_) => {}
                }
                if seen_channels.insert(cid) {
                    finite_specs.push((
                        cid,
                        PortSpec {
                            length: span - 1,
                            ..here
                        },
                    ));
                }
            }
        }
        if let Some(v) = shift.iter().position(Option::is_none) {
            return Err(Error::GeometryInvalid(format!(
                "vertex {} is not connected to vertex {} through finite channels",
                g.vertices[v].id, g.vertices[0].id
            )));
        }
        let shift: Vec<(i64, i64)> = shift.into_iter().map(|s| s.expect("checked")).collect();
        // Channel interiors alone can exceed the budget; catch that before meshing.
        let channel_nodes: usize = finite_specs
            .iter()
            .map(|(_, s)| s.length.max(0) as usize * (s.cells - 1))
            .sum();
        if channel_nodes > GRID_BUDGET {
            return Err(Error::GridBudgetExceeded {
                nodes: channel_nodes,
                budget: GRID_BUDGET,
            });
        }

        let mut cells = BTreeSet::new();
        for (v, geom) in geoms.iter().enumerate() {
            let own = grid::junction_cells(geom, shift[v])?;
            add_cells(&mut cells, own.into_iter(), &format!("junction {}", g.vertices[v].id))?;
        }
        for (cid, spec) in &finite_specs {
            add_cells(&mut cells, spec.cells(), &format!("channel {cid}"))?;
        }
        let channels = g.infinite_channel_ids();
        let mut specs = Vec::with_capacity(channels.len());
        for &cid in &channels {
            let (v, i) = stub_of[&(cid, End::Start)];
            let spec = grid::stub_spec(geoms[v], i, shift[v])?;
            add_cells(&mut cells, spec.cells(), &format!("channel {cid}"))?;
            specs.push(spec);
        }
        let hash = {
            let ids: Vec<String> = geoms.iter().map(|geom| geom.hash()).collect();
            format!("network:{}:eps={eps}", ids.join(","))
        };
        let domain = Domain::build(h, lambda, hash, &cells, specs, evanescent, GRID_BUDGET)?;
        let expected = global_ordering(g, lambda)?;
        let got: usize = domain.ports.iter().map(|p| p.propagating).sum();
        if got != expected.len() {
            return Err(Error::GridTooCoarse(format!(
                "grid resolves {got} open modes, the network has {}",
                expected.len()
            )));
        }
        Ok(Self { domain, channels })
    }

    pub fn node_count(&self) -> usize {
        self.domain.node_count()
    }

    fn port_of(&self, channel: usize) -> Result<usize> {
        self.channels
            .iter()
            .position(|&c| c == channel)
            .ok_or_else(|| Error::InvalidParameter(format!("channel {channel} is not an infinite channel")))
    }

    /// Outgoing amplitudes on the infinite channels (ascending id) for a unit
    /// incident wave in mode `mode` of channel `channel`.
    pub fn solve(&self, channel: usize, mode: usize) -> Result<ModalAmplitudes> {
        let port = self.port_of(channel)?;
        let mut a = self.domain.solve_amplitudes(&[Incident::unit(port, mode)])?;
        Ok(a.remove(0))
    }

    /// Full `M x M` scattering matrix in global mode order.
    pub fn scattering_matrix(&self) -> Result<CMatrix> {
        let incidents: Vec<Incident> = self
            .domain
            .ports
            .iter()
            .enumerate()
            .flat_map(|(s, p)| (0..p.propagating).map(move |k| Incident::unit(s, k)))
            .collect();
        let m = incidents.len();
        let mut t = CMatrix::zeros(m, m);
        for (col, a) in self.domain.solve_amplitudes(&incidents)?.iter().enumerate() {
            t.set_column(col, &a.flatten());
        }
        Ok(t)
    }
}

fn add_cells(
    cells: &mut BTreeSet<(i64, i64)>,
    new: impl Iterator<Item = (i64, i64)>,
    what: &str,
) -> Result<()> {
    for c in new {
        if !cells.insert(c) {
            return Err(Error::GeometryInvalid(format!("{what} overlaps another part of the network")));
        }
    }
    Ok(())
}

/// Outgoing amplitudes on the infinite channels for one incident `(channel, mode)`.
pub fn solve_network(
    g: &MetricGraph,
    lambda: f64,
    eps: f64,
    channel: usize,
    mode: usize,
) -> Result<ModalAmplitudes> {
    NetworkOracle::new(g, lambda, eps)?.solve(channel, mode)
}
