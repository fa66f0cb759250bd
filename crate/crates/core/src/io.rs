//! JSON encodings used by the command-line tool. Vertices are 1-based here
//! and 0-based everywhere else.
//!
//! ```text
//! matrix   {"m": 3, "entries": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}
//! complex  {"m": 3, "facets": [[1, 2], [2, 3]]}
//! graph    {"m": 3, "edges": [[1, 2], [2, 3]]}
//! params   {"values": [{"face": [1, 2], "vertex": 2, "gamma": 0.5}]}
//! ```

use std::collections::HashSet;
use std::io;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::complex::{SimplicialComplex, VertexSet};
use crate::error::{Error, Result};
use crate::factor::FactorParams;
use crate::graph::{Graph, MAX_VERTICES};
use crate::matrix::SymmetricMatrix;
use crate::membership::MembershipOutcome;
use crate::verdict::MembershipVerdict;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub m: usize,
    pub entries: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexJson {
    pub m: usize,
    pub facets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub m: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamEntry {
    pub face: Vec<usize>,
    pub vertex: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsJson {
    pub values: Vec<ParamEntry>,
}

/// A graph or a simplicial complex, distinguished by the `edges` or
/// `facets` key.
#[derive(Debug, Clone)]
pub enum Structure {
    Graph(Graph),
    Complex(SimplicialComplex),
}

fn from_str<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("malformed {what} JSON: {e}")))
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 || m > MAX_VERTICES {
        return Err(Error::InvalidInput(format!("m must be between 1 and {MAX_VERTICES}, got {m}")));
    }
    Ok(())
}

fn zero_based(v: usize, m: usize) -> Result<usize> {
    if v == 0 || v > m {
        return Err(Error::InvalidInput(format!("vertex {v} is outside 1..={m}")));
    }
    Ok(v - 1)
}

fn face_zero_based(face: &[usize], m: usize) -> Result<VertexSet> {
    let mut out = VertexSet::EMPTY;
    for &v in face {
        let v0 = zero_based(v, m)?;
        if out.contains(v0) {
            return Err(Error::InvalidInput(format!("vertex {v} repeated in {face:?}")));
        }
        out.insert(v0);
    }
    Ok(out)
}

fn one_based(face: VertexSet) -> Vec<usize> {
    face.iter().map(|v| v + 1).collect()
}

pub fn parse_matrix(text: &str) -> Result<SymmetricMatrix> {
    matrix_from_json(&from_str(text, "matrix")?)
}

pub fn matrix_from_json(j: &MatrixJson) -> Result<SymmetricMatrix> {
    check_m(j.m)?;
    if j.entries.len() != j.m || j.entries.iter().any(|r| r.len() != j.m) {
        return Err(Error::InvalidInput(format!("entries must be a {0}x{0} array", j.m)));
    }
    SymmetricMatrix::from_rows(&j.entries)
}

pub fn matrix_json(s: &SymmetricMatrix) -> Value {
    json!({ "m": s.dim(), "entries": s.rows() })
}

pub fn parse_complex(text: &str) -> Result<SimplicialComplex> {
    complex_from_json(&from_str(text, "complex")?)
}

pub fn complex_from_json(j: &ComplexJson) -> Result<SimplicialComplex> {
    check_m(j.m)?;
    let sets = j
        .facets
        .iter()
        .map(|f| face_zero_based(f, j.m))
        .collect::<Result<Vec<_>>>()?;
    SimplicialComplex::from_sets(j.m, sets)
}

pub fn complex_json(c: &SimplicialComplex) -> Value {
    let facets: Vec<Vec<usize>> = c.facets().iter().map(|f| one_based(*f)).collect();
    json!({ "m": c.ground_size(), "facets": facets })
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    graph_from_json(&from_str(text, "graph")?)
}

pub fn graph_from_json(j: &GraphJson) -> Result<Graph> {
    check_m(j.m)?;
    let edges = j
        .edges
        .iter()
        .map(|&[a, b]| Ok((zero_based(a, j.m)?, zero_based(b, j.m)?)))
        .collect::<Result<Vec<_>>>()?;
    Graph::from_edges(j.m, &edges)
}

pub fn graph_json(g: &Graph) -> Value {
    let edges: Vec<[usize; 2]> = g.edges().iter().map(|&(a, b)| [a + 1, b + 1]).collect();
    json!({ "m": g.vertex_count(), "edges": edges })
}

pub fn parse_structure(text: &str) -> Result<Structure> {
    let v: Value = from_str(text, "graph or complex")?;
    if v.get("edges").is_some() {
        let j: GraphJson = serde_json::from_value(v).map_err(|e| Error::InvalidInput(format!("malformed graph JSON: {e}")))?;
        Ok(Structure::Graph(graph_from_json(&j)?))
    } else if v.get("facets").is_some() {
        let j: ComplexJson =
            serde_json::from_value(v).map_err(|e| Error::InvalidInput(format!("malformed complex JSON: {e}")))?;
        Ok(Structure::Complex(complex_from_json(&j)?))
    } else {
        Err(Error::InvalidInput("expected an \"edges\" or \"facets\" key".into()))
    }
}

/// Parameters on `complex`; entries not listed are zero.
pub fn parse_params(text: &str, complex: Arc<SimplicialComplex>) -> Result<FactorParams> {
    params_from_json(&from_str(text, "params")?, complex)
}

pub fn params_from_json(j: &ParamsJson, complex: Arc<SimplicialComplex>) -> Result<FactorParams> {
    let m = complex.ground_size();
    let mut out = FactorParams::zeros(complex);
    let mut seen = HashSet::new();
    for e in &j.values {
        let face = face_zero_based(&e.face, m)?;
        let v = zero_based(e.vertex, m)?;
        if !e.gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma for {:?}, {} is not finite", e.face, e.vertex)));
        }
        if !seen.insert((face, v)) {
            return Err(Error::InvalidInput(format!("duplicate entry for face {:?}, vertex {}", e.face, e.vertex)));
        }
        out.set_gamma(face, v, e.gamma)
            .map_err(|_| Error::InvalidInput(format!("face {:?} with vertex {} is not in the complex", e.face, e.vertex)))?;
    }
    Ok(out)
}

/// Every parameter, zeros included, in face order.
pub fn params_json(p: &FactorParams) -> Value {
    let values: Vec<Value> = p
        .iter()
        .map(|(face, v, g)| json!({ "face": one_based(face), "vertex": v + 1, "gamma": g }))
        .collect();
    json!({ "values": values })
}

pub fn verdict_json(v: &MembershipVerdict) -> Value {
    let mut out = json!({
        "member": v.member,
        "boundary": v.boundary,
        "slack": v.slack,
    });
    if let Some(c) = &v.certificate {
        out["certificate"] = params_json(c);
    }
    if let Some(viol) = &v.violation {
        out["violation"] = json!({
            "edge": [viol.edge.0 + 1, viol.edge.1 + 1],
            "det_sigma": viol.det_sigma,
            "det_flipped": viol.det_flipped,
        });
    }
    out
}

pub fn outcome_json(o: &MembershipOutcome) -> Value {
    let mut out = verdict_json(&o.verdict);
    out["route"] = json!(o.route.name());
    out["psd"] = json!(o.psd);
    if !o.flip_determinants.is_empty() {
        out["flip_determinants"] = o
            .flip_determinants
            .iter()
            .map(|&((a, b), det)| json!({ "edge": [a + 1, b + 1], "det": det }))
            .collect();
    }
    out
}

/// The error with its vertex indices shifted to 1-based.
pub fn one_based_error(e: &Error) -> Error {
    match e.clone() {
        Error::NonFinite { row, col } => Error::NonFinite { row: row + 1, col: col + 1 },
        Error::PatternViolation { i, j, value } => Error::PatternViolation { i: i + 1, j: j + 1, value },
        Error::NotChordal { cycle } => Error::NotChordal {
            cycle: cycle.iter().map(|v| v + 1).collect(),
        },
        Error::ZeroDiagonal { vertex, value } => Error::ZeroDiagonal { vertex: vertex + 1, value },
        Error::ZeroDiagonalParam { vertex } => Error::ZeroDiagonalParam { vertex: vertex + 1 },
        other => other,
    }
}

pub fn error_json(e: &Error) -> Value {
    json!({ "error": { "code": e.code(), "message": one_based_error(e).to_string() } })
}

/// Writes floats with 17 significant digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct RoundTripFormatter;

impl serde_json::ser::Formatter for RoundTripFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RoundTripFormatter);
    value.serialize(&mut ser).expect("serialising to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let s = SymmetricMatrix::from_rows(&[vec![1.0 / 3.0, 0.1], vec![0.1, std::f64::consts::PI]]).unwrap();
        let text = to_json_string(&matrix_json(&s));
        assert!(text.contains("3.3333333333333331e-1"));
        assert_eq!(parse_matrix(&text).unwrap(), s);
    }

    #[test]
    fn matrix_shape_errors() {
        assert!(parse_matrix(r#"{"m": 2, "entries": [[1, 0]]}"#).is_err());
        assert!(parse_matrix(r#"{"m": 2, "entries": [[1, 0], [0]]}"#).is_err());
        assert!(parse_matrix(r#"{"m": 2, "entries": [[1, 0.5], [0, 1]]}"#).is_err());
        assert!(parse_matrix("{").is_err());
    }

    #[test]
    fn complex_and_graph_round_trip() {
        let c = parse_complex(r#"{"m": 4, "facets": [[1, 2, 3], [3, 4]]}"#).unwrap();
        assert_eq!(c.facets().len(), 2);
        assert_eq!(parse_complex(&to_json_string(&complex_json(&c))).unwrap(), c);
        let g = parse_graph(r#"{"m": 4, "edges": [[1, 2], [2, 3], [3, 4], [4, 1]]}"#).unwrap();
        assert_eq!(g, Graph::cycle(4).unwrap());
        assert_eq!(parse_graph(&to_json_string(&graph_json(&g))).unwrap(), g);
        assert!(parse_graph(r#"{"m": 3, "edges": [[0, 1]]}"#).is_err());
        assert!(parse_complex(r#"{"m": 3, "facets": [[1, 4]]}"#).is_err());
        assert!(matches!(parse_structure(r#"{"m": 2, "edges": []}"#), Ok(Structure::Graph(_))));
        assert!(matches!(parse_structure(r#"{"m": 2, "facets": [[1, 2]]}"#), Ok(Structure::Complex(_))));
        assert!(parse_structure(r#"{"m": 2}"#).is_err());
    }

    #[test]
    fn params_defaults_and_duplicates() {
        let c = Arc::new(parse_complex(r#"{"m": 2, "facets": [[1, 2]]}"#).unwrap());
        let p = parse_params(r#"{"values": [{"face": [1, 2], "vertex": 2, "gamma": 0.5}]}"#, c.clone()).unwrap();
        assert_eq!(p.edge(1, 0), 0.5);
        assert_eq!(p.edge(0, 1), 0.0);
        assert_eq!(p.singleton(0), 0.0);
        assert_eq!(parse_params(&to_json_string(&params_json(&p)), c.clone()).unwrap(), p);
        let dup = r#"{"values": [{"face": [1], "vertex": 1, "gamma": 1}, {"face": [1], "vertex": 1, "gamma": 2}]}"#;
        assert!(parse_params(dup, c.clone()).is_err());
        assert!(parse_params(r#"{"values": [{"face": [1], "vertex": 2, "gamma": 1}]}"#, c.clone()).is_err());
        assert!(parse_params(r#"{"values": [{"face": [3], "vertex": 3, "gamma": 1}]}"#, c).is_err());
    }

    #[test]
    fn errors_report_one_based_vertices() {
        let e = Error::PatternViolation { i: 0, j: 2, value: 1.0 };
        let j = error_json(&e);
        assert_eq!(j["error"]["code"], "PatternViolation");
        assert!(j["error"]["message"].as_str().unwrap().starts_with("entry (1, 3)"));
    }
}
