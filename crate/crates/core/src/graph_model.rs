//! Z^n-periodic metric graphs with Robin vertices and potential-carrying
//! edges, bilayer constructions, decorated layers, the builtin example
//! models, and the JSON graph-spec file format.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::edge_spectral::{self, default_class_grid, DIRICHLET_GUARD};
use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialKind};

type C = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: String,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    /// Z^n shift: the edge runs from `tail` in the fundamental domain to the
    /// copy of `head` translated by this vector.
    pub shift: Vec<i32>,
    pub length: f64,
    /// Index into the graph's potential pool; the potential is parameterized
    /// from tail to head.
    pub potential: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndCondition {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DanglingEdge {
    pub vertex: usize,
    pub length: f64,
    pub potential: usize,
    pub end: EndCondition,
}

/// One fundamental domain of a periodic quantum graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGraph {
    pub rank: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub dangling: Vec<DanglingEdge>,
    pub potentials: Vec<Potential>,
    /// Names for the potential pool, used by the file format.
    pub potential_ids: Vec<String>,
}

impl PeriodicGraph {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let nv = self.vertices.len();
        if nv == 0 {
            errors.push("graph has no vertices".to_string());
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.tail >= nv || e.head >= nv {
                errors.push(format!("edge {i} references a missing vertex"));
                continue;
            }
            if e.shift.len() != self.rank {
                errors.push(format!(
                    "edge {i} ({} -> {}) has shift of length {}, expected rank {}",
                    self.vertices[e.tail].id,
                    self.vertices[e.head].id,
                    e.shift.len(),
                    self.rank
                ));
            }
            if e.tail == e.head && e.shift.iter().all(|&s| s == 0) {
                errors.push(format!(
                    "edge {i} is a loop at {} with zero shift; loops are not supported",
                    self.vertices[e.tail].id
                ));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                errors.push(format!("edge {i} has non-positive length {}", e.length));
            }
            if e.potential >= self.potentials.len() {
                errors.push(format!("edge {i} references a missing potential"));
            } else if (self.potentials[e.potential].length() - e.length).abs() > 1e-12 {
                errors.push(format!(
                    "edge {i}: potential length {} does not match edge length {}",
                    self.potentials[e.potential].length(),
                    e.length
                ));
            }
        }
        for (i, d) in self.dangling.iter().enumerate() {
            if d.vertex >= nv {
                errors.push(format!("dangling edge {i} references a missing vertex"));
            }
            if d.potential >= self.potentials.len() {
                errors.push(format!("dangling edge {i} references a missing potential"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(errors))
        }
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    fn add_potential(&mut self, id: String, p: Potential) -> usize {
        if let Some(i) = self
            .potential_ids
            .iter()
            .position(|x| *x == id)
        {
            return i;
        }
        self.potentials.push(p);
        self.potential_ids.push(id);
        self.potentials.len() - 1
    }

    /// True iff lambda is numerically off the Dirichlet spectrum of every
    /// edge (and off the pole set of every dangling-edge reduction term).
    pub fn dirichlet_guard_check(&self, lambda: C, slices: usize) -> Result<bool> {
        for e in &self.edges {
            let es = edge_spectral::endpoint_data(&self.potentials[e.potential], lambda, slices)?;
            if es.s.norm() <= DIRICHLET_GUARD {
                return Ok(false);
            }
        }
        for d in &self.dangling {
            let es = edge_spectral::endpoint_data(&self.potentials[d.potential], lambda, slices)?;
            let denom = match d.end {
                EndCondition::Dirichlet => es.s,
                EndCondition::Neumann => es.s_prime,
            };
            if denom.norm() <= DIRICHLET_GUARD {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// A single layer plus one unit-length connector potential per vertex; the
/// blueprint for a bilayer graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BilayerSpec {
    pub layer: PeriodicGraph,
    /// Potential index (into `layer.potentials`) for each vertex, in vertex
    /// order.
    pub connectors: Vec<usize>,
}

impl BilayerSpec {
    pub fn new(layer: PeriodicGraph, connectors: Vec<usize>) -> Result<Self> {
        let spec = BilayerSpec { layer, connectors };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.layer.validate()?;
        let mut errors = Vec::new();
        if self.connectors.len() != self.layer.vertices.len() {
            errors.push(format!(
                "{} connectors for {} vertices",
                self.connectors.len(),
                self.layer.vertices.len()
            ));
        }
        for (v, &pi) in self.connectors.iter().enumerate() {
            if pi >= self.layer.potentials.len() {
                errors.push(format!(
                    "connector at vertex {} references a missing potential",
                    self.layer.vertices.get(v).map(|x| x.id.as_str()).unwrap_or("?")
                ));
            } else if (self.layer.potentials[pi].length() - 1.0).abs() > 1e-12 {
                errors.push(format!(
                    "connector at vertex {} must have unit length",
                    self.layer.vertices[v].id
                ));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(errors))
        }
    }

    pub fn connector_potential(&self, v: usize) -> &Potential {
        &self.layer.potentials[self.connectors[v]]
    }
}

/// Join two copies of the layer by unit-length edges at corresponding
/// vertices. Vertex order is layer-major: all copy-1 vertices, then all
/// copy-2 vertices. Each connector runs from (v,1) to (v,2), so its c-value
/// seen from copy 1 is c of q_v and from copy 2 is c of the reflected q_v.
pub fn build_bilayer(spec: &BilayerSpec) -> Result<PeriodicGraph> {
    spec.validate()?;
    let layer = &spec.layer;
    let m = layer.vertices.len();
    let mut vertices = Vec::with_capacity(2 * m);
    for copy in 1..=2 {
        for v in &layer.vertices {
            vertices.push(Vertex { id: format!("{}.{copy}", v.id), alpha: v.alpha });
        }
    }
    let mut edges = Vec::with_capacity(2 * layer.edges.len() + m);
    for offset in [0, m] {
        for e in &layer.edges {
            edges.push(Edge {
                tail: e.tail + offset,
                head: e.head + offset,
                shift: e.shift.clone(),
                length: e.length,
                potential: e.potential,
            });
        }
    }
    for (v, &pi) in spec.connectors.iter().enumerate() {
        edges.push(Edge {
            tail: v,
            head: v + m,
            shift: vec![0; layer.rank],
            length: 1.0,
            potential: pi,
        });
    }
    let g = PeriodicGraph {
        rank: layer.rank,
        vertices,
        edges,
        dangling: Vec::new(),
        potentials: layer.potentials.clone(),
        potential_ids: layer.potential_ids.clone(),
    };
    g.validate()?;
    Ok(g)
}

/// Attach to every vertex a dangling edge carrying the first half of a
/// symmetric connector potential, with the given condition at the free end.
pub fn build_decorated_layer(
    layer: &PeriodicGraph,
    connector: &Potential,
    bc: EndCondition,
    slices: usize,
) -> Result<PeriodicGraph> {
    if !edge_spectral::is_symmetric(connector, 1e-12, slices)? {
        return Err(Error::Precondition(
            "decorated layers require a symmetric connector potential".into(),
        ));
    }
    let half = connector.first_half()?;
    let mut g = layer.clone();
    let pi = g.add_potential("dangling.half".to_string(), half.clone());
    for v in 0..g.vertices.len() {
        g.dangling.push(DanglingEdge { vertex: v, length: half.length(), potential: pi, end: bc });
    }
    g.validate()?;
    Ok(g)
}

/// Builtin graphs with custom potentials.
pub mod builtin {
    use super::*;

    /// Square lattice: one vertex, two unit edges with shifts (1,0) and (0,1).
    pub fn square_lattice(potential: Potential, alpha: f64) -> PeriodicGraph {
        assert!((potential.length() - 1.0).abs() < 1e-12, "unit edges");
        PeriodicGraph {
            rank: 2,
            vertices: vec![Vertex { id: "v".into(), alpha }],
            edges: vec![
                Edge { tail: 0, head: 0, shift: vec![1, 0], length: 1.0, potential: 0 },
                Edge { tail: 0, head: 0, shift: vec![0, 1], length: 1.0, potential: 0 },
            ],
            dangling: Vec::new(),
            potentials: vec![potential],
            potential_ids: vec!["q".into()],
        }
    }

    /// Bilayer over the square lattice with one connector potential.
    pub fn square_bilayer(layer_potential: Potential, alpha: f64, connector: Potential) -> BilayerSpec {
        let mut layer = square_lattice(layer_potential, alpha);
        let pi = layer.add_potential("qc".into(), connector);
        BilayerSpec { layer, connectors: vec![pi] }
    }

    /// Hexagonal layer: two vertices, three edges from v1 to v2 with shifts
    /// (0,0), (1,0) and (0,1).
    pub fn graphene_layer(
        qa: Potential,
        qb: Potential,
        qc: Potential,
        alpha1: f64,
        alpha2: f64,
    ) -> PeriodicGraph {
        PeriodicGraph {
            rank: 2,
            vertices: vec![
                Vertex { id: "v1".into(), alpha: alpha1 },
                Vertex { id: "v2".into(), alpha: alpha2 },
            ],
            edges: vec![
                Edge { tail: 0, head: 1, shift: vec![0, 0], length: 1.0, potential: 0 },
                Edge { tail: 0, head: 1, shift: vec![1, 0], length: 1.0, potential: 1 },
                Edge { tail: 0, head: 1, shift: vec![0, 1], length: 1.0, potential: 2 },
            ],
            dangling: Vec::new(),
            potentials: vec![qa, qb, qc],
            potential_ids: vec!["qa".into(), "qb".into(), "qc".into()],
        }
    }

    /// Bilayer graphene with connector potentials q1 (at v1) and q2 (at v2).
    pub fn graphene_bilayer(
        qa: Potential,
        qb: Potential,
        qc: Potential,
        alpha1: f64,
        alpha2: f64,
        q1: Potential,
        q2: Potential,
    ) -> BilayerSpec {
        let mut layer = graphene_layer(qa, qb, qc, alpha1, alpha2);
        let p1 = layer.add_potential("q1".into(), q1);
        let p2 = layer.add_potential("q2".into(), q2);
        BilayerSpec { layer, connectors: vec![p1, p2] }
    }

    /// Double square lattice: a fundamental domain holds two adjacent unit
    /// squares (vertices v1, v2; periods are two steps in x and one in y).
    /// Edges: v1->v2 at shift (0,0), v2->v1 at shift (1,0), and a vertical
    /// edge at shift (0,1) on each vertex. All four edges carry the same
    /// potential and both vertices the same Robin constant.
    pub fn double_square(potential: Potential, alpha: f64) -> PeriodicGraph {
        assert!((potential.length() - 1.0).abs() < 1e-12, "unit edges");
        PeriodicGraph {
            rank: 2,
            vertices: vec![
                Vertex { id: "v1".into(), alpha },
                Vertex { id: "v2".into(), alpha },
            ],
            edges: vec![
                Edge { tail: 0, head: 1, shift: vec![0, 0], length: 1.0, potential: 0 },
                Edge { tail: 1, head: 0, shift: vec![1, 0], length: 1.0, potential: 0 },
                Edge { tail: 0, head: 0, shift: vec![0, 1], length: 1.0, potential: 0 },
                Edge { tail: 1, head: 1, shift: vec![0, 1], length: 1.0, potential: 0 },
            ],
            dangling: Vec::new(),
            potentials: vec![potential],
            potential_ids: vec!["q".into()],
        }
    }

    /// Bilayer over the double square with connectors q1 and q2.
    pub fn double_square_bilayer(
        potential: Potential,
        alpha: f64,
        q1: Potential,
        q2: Potential,
    ) -> BilayerSpec {
        let mut layer = double_square(potential, alpha);
        let p1 = layer.add_potential("q1".into(), q1);
        let p2 = layer.add_potential("q2".into(), q2);
        BilayerSpec { layer, connectors: vec![p1, p2] }
    }
}

/// A parsed graph-spec file: either a plain periodic graph or a bilayer
/// blueprint (when `connectors` is present).
#[derive(Debug, Clone)]
pub enum ParsedGraph {
    Graph(PeriodicGraph),
    Bilayer(BilayerSpec),
}

impl ParsedGraph {
    pub fn as_bilayer(self) -> Result<BilayerSpec> {
        match self {
            ParsedGraph::Bilayer(b) => Ok(b),
            ParsedGraph::Graph(_) => {
                Err(Error::Precondition("this operation needs a bilayer spec (connectors section)".into()))
            }
        }
    }

    pub fn as_graph(self) -> Result<PeriodicGraph> {
        match self {
            ParsedGraph::Graph(g) => Ok(g),
            ParsedGraph::Bilayer(b) => build_bilayer(&b),
        }
    }

    pub fn layer(&self) -> &PeriodicGraph {
        match self {
            ParsedGraph::Graph(g) => g,
            ParsedGraph::Bilayer(b) => &b.layer,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexFile {
    id: String,
    #[serde(default)]
    alpha: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeFile {
    tail: String,
    head: String,
    shift: Vec<i32>,
    #[serde(default = "one")]
    length: f64,
    potential: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct DanglingFile {
    vertex: String,
    #[serde(default = "one")]
    length: f64,
    potential: String,
    end: EndCondition,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    rank: usize,
    vertices: Vec<VertexFile>,
    edges: Vec<EdgeFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    dangling: Vec<DanglingFile>,
    potentials: BTreeMap<String, PotentialKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    connectors: Option<BTreeMap<String, String>>,
}

/// Parse a graph-spec JSON document. Schema violations are collected with
/// the offending vertex/edge named.
pub fn parse_graph_spec(text: &str) -> Result<ParsedGraph> {
    let file: GraphFile = serde_json::from_str(text)?;
    let mut errors = Vec::new();

    let vertices: Vec<Vertex> = file
        .vertices
        .iter()
        .map(|v| Vertex { id: v.id.clone(), alpha: v.alpha })
        .collect();
    let vertex_index = |id: &str| vertices.iter().position(|v| v.id == id);

    let mut potentials = Vec::new();
    let mut potential_ids = Vec::new();
    // resolve each (name, length) pair to one pool entry
    let mut pool: BTreeMap<(String, u64), usize> = BTreeMap::new();
    let mut resolve = |name: &str,
                       length: f64,
                       potentials: &mut Vec<Potential>,
                       potential_ids: &mut Vec<String>,
                       errors: &mut Vec<String>|
     -> usize {
        let key = (name.to_string(), length.to_bits());
        if let Some(&i) = pool.get(&key) {
            return i;
        }
        let p = match file.potentials.get(name) {
            Some(kind) => match Potential::new(kind.clone(), length) {
                Ok(p) => p,
                Err(e) => {
                    errors.push(format!("potential {name}: {e}"));
                    Potential::zero(length)
                }
            },
            None => {
                errors.push(format!("potential {name} is not defined"));
                Potential::zero(length)
            }
        };
        potentials.push(p);
        potential_ids.push(name.to_string());
        pool.insert(key, potentials.len() - 1);
        potentials.len() - 1
    };

    let mut edges = Vec::new();
    for (i, e) in file.edges.iter().enumerate() {
        let tail = vertex_index(&e.tail);
        let head = vertex_index(&e.head);
        if tail.is_none() {
            errors.push(format!("edge {i}: tail vertex {} does not exist", e.tail));
        }
        if head.is_none() {
            errors.push(format!("edge {i}: head vertex {} does not exist", e.head));
        }
        let (Some(tail), Some(head)) = (tail, head) else { continue };
        let pi = resolve(&e.potential, e.length, &mut potentials, &mut potential_ids, &mut errors);
        edges.push(Edge { tail, head, shift: e.shift.clone(), length: e.length, potential: pi });
    }

    let mut dangling = Vec::new();
    for (i, d) in file.dangling.iter().enumerate() {
        match vertex_index(&d.vertex) {
            Some(v) => {
                let pi = resolve(&d.potential, d.length, &mut potentials, &mut potential_ids, &mut errors);
                dangling.push(DanglingEdge { vertex: v, length: d.length, potential: pi, end: d.end });
            }
            None => errors.push(format!("dangling edge {i}: vertex {} does not exist", d.vertex)),
        }
    }

    let connectors = match &file.connectors {
        None => None,
        Some(map) => {
            let mut list = Vec::with_capacity(vertices.len());
            for v in &vertices {
                match map.get(&v.id) {
                    Some(name) => {
                        let pi = resolve(name, 1.0, &mut potentials, &mut potential_ids, &mut errors);
                        list.push(pi);
                    }
                    None => errors.push(format!("vertex {} has no connector", v.id)),
                }
            }
            for id in map.keys() {
                if vertex_index(id).is_none() {
                    errors.push(format!("connector names unknown vertex {id}"));
                }
            }
            Some(list)
        }
    };

    if !errors.is_empty() {
        return Err(Error::Schema(errors));
    }

    let graph = PeriodicGraph { rank: file.rank, vertices, edges, dangling, potentials, potential_ids };
    graph.validate()?;
    match connectors {
        Some(connectors) => Ok(ParsedGraph::Bilayer(BilayerSpec::new(graph, connectors)?)),
        None => Ok(ParsedGraph::Graph(graph)),
    }
}

pub fn parse_graph_file(path: &std::path::Path) -> Result<ParsedGraph> {
    let text = std::fs::read_to_string(path)?;
    parse_graph_spec(&text)
}

/// Serialize a graph (or bilayer blueprint) back to the file format.
pub fn write_graph_spec(g: &PeriodicGraph, connectors: Option<&[usize]>) -> Result<String> {
    let file = GraphFile {
        rank: g.rank,
        vertices: g
            .vertices
            .iter()
            .map(|v| VertexFile { id: v.id.clone(), alpha: v.alpha })
            .collect(),
        edges: g
            .edges
            .iter()
            .map(|e| EdgeFile {
                tail: g.vertices[e.tail].id.clone(),
                head: g.vertices[e.head].id.clone(),
                shift: e.shift.clone(),
                length: e.length,
                potential: g.potential_ids[e.potential].clone(),
            })
            .collect(),
        dangling: g
            .dangling
            .iter()
            .map(|d| DanglingFile {
                vertex: g.vertices[d.vertex].id.clone(),
                length: d.length,
                potential: g.potential_ids[d.potential].clone(),
                end: d.end,
            })
            .collect(),
        potentials: g
            .potential_ids
            .iter()
            .zip(&g.potentials)
            .map(|(id, p)| (id.clone(), p.kind().clone()))
            .collect(),
        connectors: connectors.map(|list| {
            list.iter()
                .enumerate()
                .map(|(v, &pi)| (g.vertices[v].id.clone(), g.potential_ids[pi].clone()))
                .collect()
        }),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Grid of guarded sweep energies: deterministic, mixing real and complex
/// points, nudged off any edge Dirichlet eigenvalue.
pub fn guarded_lambda_sweep(g: &PeriodicGraph, count: usize, slices: usize) -> Result<Vec<C>> {
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    let mut trial = 0usize;
    while out.len() < count && trial < 10 * count + 100 {
        trial += 1;
        let t = k as f64;
        let lam = if k.is_multiple_of(2) {
            C::new(-8.0 + 0.83 * t, 0.0)
        } else {
            C::new(-6.5 + 0.79 * t, 0.6 + 0.15 * (k % 7) as f64)
        };
        k += 1;
        if g.dirichlet_guard_check(lam, slices)? {
            out.push(lam);
        }
    }
    if out.len() < count {
        return Err(Error::Numeric("could not assemble a guarded lambda sweep".into()));
    }
    Ok(out)
}

/// Same-class test grid re-exported for bilayer preconditions.
pub fn class_grid() -> Vec<C> {
    default_class_grid()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c64;

    #[test]
    fn bilayer_counts() {
        // square lattice: 1 vertex, 2 edges -> 2 vertices, 5 edges
        let spec = builtin::square_bilayer(Potential::zero(1.0), 0.0, Potential::zero(1.0));
        let g = build_bilayer(&spec).unwrap();
        assert_eq!(g.vertices.len(), 2);
        assert_eq!(g.edges.len(), 5);

        // graphene: 2 vertices, 3 edges -> 4 vertices, 8 edges
        let spec = builtin::graphene_bilayer(
            Potential::zero(1.0),
            Potential::zero(1.0),
            Potential::zero(1.0),
            0.0,
            0.0,
            Potential::zero(1.0),
            Potential::constant(1.0, 1.0),
        );
        let g = build_bilayer(&spec).unwrap();
        assert_eq!(g.vertices.len(), 4);
        assert_eq!(g.edges.len(), 8);

        // double square: 2 vertices, 4 edges -> 4 vertices, 10 edges
        let spec = builtin::double_square_bilayer(
            Potential::zero(1.0),
            0.0,
            Potential::zero(1.0),
            Potential::zero(1.0),
        );
        let g = build_bilayer(&spec).unwrap();
        assert_eq!(g.vertices.len(), 4);
        assert_eq!(g.edges.len(), 10);
    }

    #[test]
    fn builtin_shapes() {
        let g = builtin::square_lattice(Potential::zero(1.0), 0.0);
        assert_eq!((g.rank, g.vertices.len(), g.edges.len()), (2, 1, 2));
        let g = builtin::graphene_layer(
            Potential::zero(1.0),
            Potential::zero(1.0),
            Potential::zero(1.0),
            0.0,
            0.0,
        );
        assert_eq!((g.rank, g.vertices.len(), g.edges.len()), (2, 2, 3));
        let g = builtin::double_square(Potential::zero(1.0), 0.0);
        assert_eq!((g.rank, g.vertices.len(), g.edges.len()), (2, 2, 4));
        g.validate().unwrap();
    }

    #[test]
    fn decorated_layer_requires_symmetry() {
        let layer = builtin::square_lattice(Potential::zero(1.0), 0.0);
        let g = build_decorated_layer(&layer, &Potential::zero(1.0), EndCondition::Neumann, 256).unwrap();
        assert_eq!(g.dangling.len(), 1);
        assert_eq!(g.dangling[0].length, 0.5);
        let d = build_decorated_layer(&layer, &Potential::zero(1.0), EndCondition::Dirichlet, 256).unwrap();
        assert_eq!(d.dangling[0].end, EndCondition::Dirichlet);

        let step = Potential::step(5.0, 0.5, 1.0);
        assert!(build_decorated_layer(&layer, &step, EndCondition::Neumann, 256).is_err());
    }

    #[test]
    fn guard_check_flags_dirichlet_points() {
        let g = builtin::square_lattice(Potential::zero(1.0), 0.0);
        let pi2 = std::f64::consts::PI.powi(2);
        assert!(!g.dirichlet_guard_check(c64(pi2, 0.0), 128).unwrap());
        assert!(g.dirichlet_guard_check(c64(1.0, 0.0), 128).unwrap());
    }

    #[test]
    fn guard_check_is_union_over_edges() {
        // distinct edge potentials: guarded iff no single edge is Dirichlet
        let layer = builtin::graphene_layer(
            Potential::zero(1.0),
            Potential::constant(3.0, 1.0),
            Potential::constant(7.0, 1.0),
            0.0,
            0.0,
        );
        let pi2 = std::f64::consts::PI.powi(2);
        for shift in [0.0, 3.0, 7.0] {
            assert!(!layer.dirichlet_guard_check(c64(pi2 + shift, 0.0), 256).unwrap());
        }
        assert!(layer.dirichlet_guard_check(c64(1.0, 0.0), 256).unwrap());
    }

    #[test]
    fn file_round_trip_all_builtins() {
        let cases: Vec<(PeriodicGraph, Option<Vec<usize>>)> = vec![
            (builtin::square_lattice(Potential::zero(1.0), 0.5), None),
            (
                builtin::graphene_layer(
                    Potential::constant(2.0, 1.0),
                    Potential::step(5.0, 0.5, 1.0),
                    Potential::zero(1.0),
                    0.1,
                    -0.2,
                ),
                None,
            ),
            (builtin::double_square(Potential::constant(1.0, 1.0), 0.0), None),
        ];
        for (g, _) in cases {
            let text = write_graph_spec(&g, None).unwrap();
            let parsed = parse_graph_spec(&text).unwrap();
            match parsed {
                ParsedGraph::Graph(h) => assert_eq!(g, h),
                _ => panic!("expected plain graph"),
            }
        }

        let spec = builtin::graphene_bilayer(
            Potential::zero(1.0),
            Potential::zero(1.0),
            Potential::zero(1.0),
            0.0,
            0.0,
            Potential::step(5.0, 0.5, 1.0),
            Potential::zero(1.0),
        );
        let text = write_graph_spec(&spec.layer, Some(&spec.connectors)).unwrap();
        match parse_graph_spec(&text).unwrap() {
            ParsedGraph::Bilayer(b) => {
                assert_eq!(b.layer.vertices, spec.layer.vertices);
                assert_eq!(b.connectors.len(), 2);
                assert_eq!(
                    b.connector_potential(0).kind(),
                    spec.connector_potential(0).kind()
                );
            }
            _ => panic!("expected bilayer"),
        }
    }

    #[test]
    fn schema_errors_name_the_offender() {
        let bad = r#"{
            "rank": 2,
            "vertices": [{"id": "v1"}],
            "edges": [{"tail": "v1", "head": "nowhere", "shift": [0,0], "potential": "q"}],
            "potentials": {"q": {"kind": "zero"}}
        }"#;
        match parse_graph_spec(bad) {
            Err(Error::Schema(errors)) => {
                assert!(errors.iter().any(|e| e.contains("nowhere")), "{errors:?}");
            }
            other => panic!("expected schema error, got {other:?}"),
        }

        let missing_connector = r#"{
            "rank": 2,
            "vertices": [{"id": "v1"}, {"id": "v2"}],
            "edges": [{"tail": "v1", "head": "v2", "shift": [0,0], "potential": "q"}],
            "potentials": {"q": {"kind": "zero"}},
            "connectors": {"v1": "q"}
        }"#;
        match parse_graph_spec(missing_connector) {
            Err(Error::Schema(errors)) => {
                assert!(errors.iter().any(|e| e.contains("v2")), "{errors:?}");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn loops_are_rejected() {
        let mut g = builtin::square_lattice(Potential::zero(1.0), 0.0);
        g.edges.push(Edge { tail: 0, head: 0, shift: vec![0, 0], length: 1.0, potential: 0 });
        assert!(g.validate().is_err());
    }
}
