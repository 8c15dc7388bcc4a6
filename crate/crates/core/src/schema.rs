//! JSON encoding of graphs and junction tables.
//!
//! ```json
//! {"channels": [{"id": 0, "length": "inf", "cross_section": {"shape": "interval", "dims": [3.14]},
//!                "start": 0, "end": null}],
//!  "vertices": [{"id": 0, "ends": [[0, "start"]], "junction": {"kind": "dirichlet"}}]}
//! ```
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.
//! Junction kinds: `dirichlet`, `transparent`, `matrix` (with `lambda` and
//! `matrix`), `tabulated` (with `table` of `{lambda, matrix}` and an optional
//! `provenance` of `{h, geometry_hash}`) and `oracle` (with `geometry`).

use serde::{Deserialize, Serialize};

use crate::dense::{CMatrix, C64};
use crate::error::{Error, Result};
use crate::graph::{
    Channel, ChannelLength, CrossSectionShape, End, JunctionModel, JunctionSample, MetricGraph,
    Provenance, Vertex,
};
use crate::helmholtz::{JunctionMatrix, PlanarGeometry};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonGraph {
    channels: Vec<JsonChannel>,
    vertices: Vec<JsonVertex>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonChannel {
    id: usize,
    length: JsonLength,
    cross_section: JsonCrossSection,
    start: usize,
    end: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JsonLength {
    Finite(f64),
    Tag(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonCrossSection {
    shape: String,
    dims: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonVertex {
    id: usize,
    ends: Vec<(usize, String)>,
    junction: JsonJunction,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonJunction {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<C64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<JsonSample>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<JsonProvenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    geometry: Option<PlanarGeometry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonSample {
    lambda: f64,
    matrix: Vec<Vec<C64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonProvenance {
    h: f64,
    geometry_hash: String,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidGraph(msg.into())
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn matrix_from_rows(rows: Vec<Vec<C64>>, what: &str) -> Result<CMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(invalid(format!("{what}: rows have different lengths")));
    }
    Ok(CMatrix::from_rows(&rows))
}

fn shape_from_json(cs: JsonCrossSection, channel: usize) -> Result<CrossSectionShape> {
    let want = match cs.shape.as_str() {
        "interval" | "disk" => 1,
        "rectangle" => 2,
        other => return Err(invalid(format!("channel {channel}: unknown shape {other:?}"))),
    };
    if cs.dims.len() != want {
        return Err(invalid(format!(
            "channel {channel}: shape {} takes {want} dims, got {}",
            cs.shape,
            cs.dims.len()
        )));
    }
    Ok(match cs.shape.as_str() {
        "interval" => CrossSectionShape::Interval { width: cs.dims[0] },
        "disk" => CrossSectionShape::Disk { radius: cs.dims[0] },
        _ => CrossSectionShape::Rectangle {
            a: cs.dims[0],
            b: cs.dims[1],
        },
    })
}

fn shape_to_json(s: &CrossSectionShape) -> JsonCrossSection {
    let shape = match s {
        CrossSectionShape::Interval { .. } => "interval",
        CrossSectionShape::Rectangle { .. } => "rectangle",
        CrossSectionShape::Disk { .. } => "disk",
    };
    JsonCrossSection {
        shape: shape.into(),
        dims: s.dims(),
    }
}

fn junction_from_json(j: JsonJunction, vertex: usize) -> Result<JunctionModel> {
    let missing = |field: &str| invalid(format!("vertex {vertex}: {} junction needs {field:?}", j.kind));
    Ok(match j.kind.as_str() {
        "dirichlet" => JunctionModel::Dirichlet,
        "transparent" => JunctionModel::Transparent,
        "matrix" => JunctionModel::Matrix {
            lambda: j.lambda.ok_or_else(|| missing("lambda"))?,
            matrix: matrix_from_rows(
                j.matrix.clone().ok_or_else(|| missing("matrix"))?,
                &format!("vertex {vertex} matrix"),
            )?,
        },
        "tabulated" => {
            let table = j.table.ok_or_else(|| missing("table"))?;
            let samples = table
                .into_iter()
                .map(|s| {
                    Ok(JunctionSample {
                        lambda: s.lambda,
                        matrix: matrix_from_rows(s.matrix, &format!("vertex {vertex} table"))?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            JunctionModel::Tabulated {
                samples,
                provenance: j.provenance.map(|p| Provenance {
                    h: p.h,
                    geometry_hash: p.geometry_hash,
                }),
            }
        }
        "oracle" => JunctionModel::FromOracle(Box::new(j.geometry.ok_or_else(|| missing("geometry"))?)),
        other => return Err(invalid(format!("vertex {vertex}: unknown junction kind {other:?}"))),
    })
}

fn junction_to_json(j: &JunctionModel) -> JsonJunction {
    let mut out = JsonJunction {
        kind: j.kind().into(),
        lambda: None,
        matrix: None,
        table: None,
        provenance: None,
        geometry: None,
    };
    match j {
        JunctionModel::Dirichlet | JunctionModel::Transparent => {}
        JunctionModel::Matrix { lambda, matrix } => {
            out.lambda = Some(*lambda);
            out.matrix = Some(matrix.to_rows());
        }
        JunctionModel::Tabulated { samples, provenance } => {
            out.table = Some(
                samples
                    .iter()
                    .map(|s| JsonSample {
                        lambda: s.lambda,
                        matrix: s.matrix.to_rows(),
                    })
                    .collect(),
            );
            out.provenance = provenance.as_ref().map(|p| JsonProvenance {
                h: p.h,
                geometry_hash: p.geometry_hash.clone(),
            });
        }
        JunctionModel::FromOracle(geom) => out.geometry = Some((**geom).clone()),
    }
    out
}

fn end_from_json(s: &str, vertex: usize) -> Result<End> {
    match s {
        "start" => Ok(End::Start),
        "end" => Ok(End::End),
        other => Err(invalid(format!("vertex {vertex}: channel end must be \"start\" or \"end\", got {other:?}"))),
    }
}

/// Parses a graph. Syntax errors carry their line and column; the structural
/// invariants are left to [`crate::graph::validate_graph`].
pub fn parse_graph(text: &str) -> Result<MetricGraph> {
    let raw: JsonGraph = serde_json::from_str(text).map_err(parse_error)?;
    let channels = raw
        .channels
        .into_iter()
        .map(|c| {
            let length = match c.length {
                JsonLength::Finite(l) => ChannelLength::Finite(l),
                JsonLength::Tag(t) if t == "inf" => ChannelLength::Infinite,
                JsonLength::Tag(t) => {
                    return Err(invalid(format!("channel {}: length must be a number or \"inf\", got {t:?}", c.id)))
                }
            };
            Ok(Channel {
                id: c.id,
                length,
                cross_section: shape_from_json(c.cross_section, c.id)?,
                start_vertex: c.start,
                end_vertex: c.end,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let vertices = raw
        .vertices
        .into_iter()
        .map(|v| {
            let incident_ends = v
                .ends
                .iter()
                .map(|(c, e)| Ok((*c, end_from_json(e, v.id)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Vertex {
                id: v.id,
                incident_ends,
                junction: junction_from_json(v.junction, v.id)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricGraph { channels, vertices })
}

fn to_json(g: &MetricGraph) -> JsonGraph {
    JsonGraph {
        channels: g
            .channels
            .iter()
            .map(|c| JsonChannel {
                id: c.id,
                length: match c.length {
                    ChannelLength::Finite(l) => JsonLength::Finite(l),
                    ChannelLength::Infinite => JsonLength::Tag("inf".into()),
                },
                cross_section: shape_to_json(&c.cross_section),
                start: c.start_vertex,
                end: c.end_vertex,
            })
            .collect(),
        vertices: g
            .vertices
            .iter()
            .map(|v| JsonVertex {
                id: v.id,
                ends: v.incident_ends.iter().map(|&(c, e)| (c, e.to_string())).collect(),
                junction: junction_to_json(&v.junction),
            })
            .collect(),
    }
}

pub fn graph_to_value(g: &MetricGraph) -> serde_json::Value {
    serde_json::to_value(to_json(g)).expect("graph encodes to JSON")
}

pub fn graph_to_json(g: &MetricGraph) -> String {
    serde_json::to_string_pretty(&to_json(g)).expect("graph encodes to JSON")
}

/// A single-sample `tabulated` junction block for a computed junction matrix.
pub fn tabulated_block(jm: &JunctionMatrix) -> serde_json::Value {
    tabulated_block_from(std::slice::from_ref(jm))
}

/// A `tabulated` junction block from matrices computed on one geometry.
pub fn tabulated_block_from(jms: &[JunctionMatrix]) -> serde_json::Value {
    let model = JunctionModel::Tabulated {
        samples: jms
            .iter()
            .map(|jm| JunctionSample {
                lambda: jm.lambda,
                matrix: jm.matrix.clone(),
            })
            .collect(),
        provenance: jms.first().map(|jm| Provenance {
            h: jm.h,
            geometry_hash: jm.geometry_hash.clone(),
        }),
    };
    serde_json::to_value(junction_to_json(&model)).expect("junction encodes to JSON")
}

pub fn parse_geometry(text: &str) -> Result<PlanarGeometry> {
    serde_json::from_str(text).map_err(parse_error)
}

/// Encodes a complex matrix as rows of `[re, im]` pairs.
pub fn matrix_to_value(m: &CMatrix) -> serde_json::Value {
    serde_json::to_value(m.to_rows()).expect("matrix encodes to JSON")
}
