//! Graph (cluster) states with a local-Clifford frame per vertex.
//!
//! A [`GraphState`] stands for the physical state `(⊗_v F_v) |G⟩`, where
//! `|G⟩ = Π_{(u,v)∈E} CZ_{uv} |+⟩^{⊗V}` and `F_v` is the frame of `v`.
//! Qubit conventions: `|↑⟩ = |0⟩`, `|↓⟩ = |1⟩`.
//!
//! Heralded corrections are not applied physically; they are absorbed into
//! the frames. A frame is applied physically ("flushed") only when a vertex
//! takes part in an EO, or before a Z measurement the frame would rotate
//! into another basis. Every operation returns the list of physical steps
//! it stands for, which [`dense::DenseQubitState::run`] can replay.

pub mod check;
pub mod clifford;
pub mod dense;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

pub use clifford::Clifford;
pub use dense::{DenseQubitState, MAX_DENSE_QUBITS};

/// Herald of one EO as seen by the graph layer.
///
/// On failure both participants are measured in Z; `z_a`, `z_b` are those
/// results (0 for `|↑⟩`) for the arm-A and arm-B qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EoOutcome {
    Success { sign: i8 },
    Failure { z_a: u8, z_b: u8 },
}

impl EoOutcome {
    pub fn is_success(self) -> bool {
        matches!(self, EoOutcome::Success { .. })
    }

    fn validate(self) -> Result<()> {
        match self {
            EoOutcome::Success { sign } if sign != 1 && sign != -1 => {
                Err(Error::graph(format!("EO sign must be +1 or -1, got {sign}")))
            }
            EoOutcome::Failure { z_a, z_b } if z_a > 1 || z_b > 1 => {
                Err(Error::graph("Z measurement results must be 0 or 1"))
            }
            _ => Ok(()),
        }
    }

    /// Every herald the graph layer distinguishes.
    pub fn all() -> [EoOutcome; 6] {
        [
            EoOutcome::Success { sign: 1 },
            EoOutcome::Success { sign: -1 },
            EoOutcome::Failure { z_a: 0, z_b: 0 },
            EoOutcome::Failure { z_a: 0, z_b: 1 },
            EoOutcome::Failure { z_a: 1, z_b: 0 },
            EoOutcome::Failure { z_a: 1, z_b: 1 },
        ]
    }
}

/// Result of a measurement in the `|±⟩ = (|↑⟩ ± |↓⟩)/√2` basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XResult {
    Plus,
    Minus,
}

impl XResult {
    pub const ALL: [XResult; 2] = [XResult::Plus, XResult::Minus];

    pub fn sign(self) -> i8 {
        match self {
            XResult::Plus => 1,
            XResult::Minus => -1,
        }
    }
}

/// One physical step on the qubit register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PhysicalOp {
    /// Fresh qubit in `|+⟩`.
    Prepare { qubit: usize },
    Local { qubit: usize, gate: Clifford },
    /// `a` sits in arm A, `b` in arm B.
    Eo { a: usize, b: usize, outcome: EoOutcome },
    MeasureZ { qubit: usize, result: u8 },
    MeasureX { qubit: usize, result: XResult },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "GraphRecord", try_from = "GraphRecord")]
pub struct GraphState {
    vertices: BTreeSet<usize>,
    edges: BTreeSet<(usize, usize)>,
    frames: BTreeMap<usize, Clifford>,
}

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    vertices: Vec<usize>,
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    frames: BTreeMap<usize, Clifford>,
}

impl From<GraphState> for GraphRecord {
    fn from(g: GraphState) -> Self {
        GraphRecord {
            vertices: g.vertices.into_iter().collect(),
            edges: g.edges.into_iter().collect(),
            frames: g.frames,
        }
    }
}

impl TryFrom<GraphRecord> for GraphState {
    type Error = Error;
    fn try_from(r: GraphRecord) -> Result<Self> {
        let mut g = GraphState::from_edges(r.vertices, r.edges)?;
        for (v, f) in r.frames {
            g.set_frame(v, f)?;
        }
        Ok(g)
    }
}

fn edge(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

impl GraphState {
    pub fn new() -> Self {
        Self::default()
    }

    /// A single qubit in `|+⟩`.
    pub fn single(v: usize) -> Self {
        let mut g = Self::new();
        g.vertices.insert(v);
        g
    }

    /// Canonical linear chain over `labels`, in order.
    pub fn path(labels: &[usize]) -> Result<Self> {
        GraphState::from_edges(labels.to_vec(), labels.windows(2).map(|w| (w[0], w[1])).collect())
    }

    pub fn from_edges(vertices: Vec<usize>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let set: BTreeSet<usize> = vertices.iter().copied().collect();
        if set.len() != vertices.len() {
            return Err(Error::graph("duplicate vertex label"));
        }
        let mut g = GraphState { vertices: set, ..Self::default() };
        for (u, v) in edges {
            if u == v || !g.contains(u) || !g.contains(v) {
                return Err(Error::graph(format!("invalid edge ({u}, {v})")));
            }
            g.edges.insert(edge(u, v));
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.contains(&v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&edge(u, v))
    }

    pub fn neighbours(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| if a == v { Some(b) } else if b == v { Some(a) } else { None })
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbours(v).len()
    }

    /// Smallest label not in use.
    pub fn next_label(&self) -> usize {
        self.vertices.last().map_or(0, |m| m + 1)
    }

    pub fn frame(&self, v: usize) -> Clifford {
        self.frames.get(&v).copied().unwrap_or_default()
    }

    pub fn set_frame(&mut self, v: usize, f: Clifford) -> Result<()> {
        self.require(v)?;
        if f.is_identity() {
            self.frames.remove(&v);
        } else {
            self.frames.insert(v, f);
        }
        Ok(())
    }

    /// True when every frame is the identity.
    pub fn is_canonical(&self) -> bool {
        self.frames.is_empty()
    }

    /// Vertex order along the graph if it is a single path, starting at the
    /// end with the smaller label. An empty graph gives an empty order.
    pub fn chain_order(&self) -> Option<Vec<usize>> {
        if self.is_empty() {
            return Some(Vec::new());
        }
        if self.edges.len() + 1 != self.len() || self.vertices().any(|v| self.degree(v) > 2) {
            return None;
        }
        let start = self.vertices().find(|&v| self.degree(v) <= 1)?;
        let mut order = vec![start];
        let mut prev = None;
        let mut cur = start;
        while let Some(next) = self.neighbours(cur).into_iter().find(|&u| Some(u) != prev) {
            order.push(next);
            prev = Some(cur);
            cur = next;
        }
        (order.len() == self.len()).then_some(order)
    }

    fn require(&self, v: usize) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::graph(format!("vertex {v} not in graph")))
        }
    }

    fn remove_vertex(&mut self, v: usize) {
        self.vertices.remove(&v);
        self.edges.retain(|&(a, b)| a != v && b != v);
        self.frames.remove(&v);
    }

    fn flush(&mut self, v: usize, ops: &mut Vec<PhysicalOp>) {
        if let Some(f) = self.frames.remove(&v) {
            ops.push(PhysicalOp::Local { qubit: v, gate: f.inverse() });
        }
    }

    fn measure_z(&mut self, v: usize, result: u8, ops: &mut Vec<PhysicalOp>) {
        let flip = match self.frame(v).z_measurement_flip() {
            Some(flip) => flip,
            None => {
                self.flush(v, ops);
                false
            }
        };
        ops.push(PhysicalOp::MeasureZ { qubit: v, result });
        if (result == 1) != flip {
            for u in self.neighbours(v) {
                let f = self.frame(u) * Clifford::z();
                self.set_frame(u, f).expect("neighbour exists");
            }
        }
        self.remove_vertex(v);
    }

    /// Adds a fresh `|+⟩` qubit as an isolated vertex.
    pub fn prepare(&self, v: usize) -> Result<(GraphState, Vec<PhysicalOp>)> {
        if self.contains(v) {
            return Err(Error::graph(format!("vertex {v} already in graph")));
        }
        let mut g = self.clone();
        g.vertices.insert(v);
        Ok((g, vec![PhysicalOp::Prepare { qubit: v }]))
    }

    /// Attaches a fresh qubit `new` to `end` with a successful EO (new qubit
    /// in arm A). The result is the graph plus the edge `(new, end)`, with the
    /// pending corrections `X_end` and then `H_new` (and `X_new` for sign −1)
    /// recorded as frames.
    pub fn extend_chain(&self, end: usize, new: usize, outcome: EoOutcome) -> Result<(GraphState, Vec<PhysicalOp>)> {
        outcome.validate()?;
        let EoOutcome::Success { sign } = outcome else {
            return Err(Error::graph("extend_chain needs a successful EO; use attempt_extension"));
        };
        self.require(end)?;
        let (mut g, mut ops) = self.prepare(new)?;
        g.flush(end, &mut ops);
        ops.push(PhysicalOp::Eo { a: new, b: end, outcome });
        g.edges.insert(edge(new, end));
        g.set_frame(end, Clifford::x())?;
        let f_new = if sign == 1 { Clifford::h() } else { Clifford::h() * Clifford::x() };
        g.set_frame(new, f_new)?;
        Ok((g, ops))
    }

    /// Like [`GraphState::extend_chain`] but also handles failure: both
    /// participants are measured in Z and `end` drops out.
    pub fn attempt_extension(&self, end: usize, new: usize, outcome: EoOutcome) -> Result<(GraphState, Vec<PhysicalOp>)> {
        outcome.validate()?;
        match outcome {
            EoOutcome::Success { .. } => self.extend_chain(end, new, outcome),
            EoOutcome::Failure { z_a, z_b } => {
                self.require(end)?;
                let (mut g, mut ops) = self.prepare(new)?;
                g.flush(end, &mut ops);
                ops.push(PhysicalOp::Eo { a: new, b: end, outcome });
                g.measure_z(new, z_a, &mut ops);
                g.measure_z(end, z_b, &mut ops);
                Ok((g, ops))
            }
        }
    }

    /// Removes `lost` by a Z measurement with the given result; its
    /// neighbours pick up a `Z` in their frames when the graph-level
    /// outcome is `|↓⟩`.
    pub fn shrink_on_failure(&self, lost: usize, result: u8) -> Result<(GraphState, Vec<PhysicalOp>)> {
        self.require(lost)?;
        if result > 1 {
            return Err(Error::graph("Z measurement results must be 0 or 1"));
        }
        let mut g = self.clone();
        let mut ops = Vec::new();
        g.measure_z(lost, result, &mut ops);
        Ok((g, ops))
    }

    /// Joins `a1` of this graph with `b1` of `other` (labels must be
    /// disjoint). See [`GraphState::join`].
    pub fn join_chains(
        &self,
        a1: usize,
        other: &GraphState,
        b1: usize,
        outcome: EoOutcome,
        b1_result: XResult,
    ) -> Result<(GraphState, Vec<PhysicalOp>)> {
        if let Some(v) = other.vertices().find(|&v| self.contains(v)) {
            return Err(Error::graph(format!("graphs share vertex {v}")));
        }
        self.require(a1)?;
        other.require(b1)?;
        let mut merged = self.clone();
        merged.vertices.extend(other.vertices.iter().copied());
        merged.edges.extend(other.edges.iter().copied());
        merged.frames.extend(other.frames.iter().map(|(&k, &v)| (k, v)));
        merged.join(a1, b1, outcome, b1_result)
    }

    /// Joins two non-adjacent vertices: `X` on `a1`, EO with `a1` in arm A,
    /// then `b1` measured in the `±` basis. On success `b1` is consumed and
    /// `a1` takes over its neighbourhood (edges toggled); the sign times the
    /// `±` result decides whether `a1` owes a `Z`. On failure both are
    /// measured in Z and removed.
    pub fn join(&self, a1: usize, b1: usize, outcome: EoOutcome, b1_result: XResult) -> Result<(GraphState, Vec<PhysicalOp>)> {
        outcome.validate()?;
        self.require(a1)?;
        self.require(b1)?;
        if a1 == b1 || self.has_edge(a1, b1) {
            return Err(Error::graph(format!("cannot join vertices {a1} and {b1}")));
        }
        let mut g = self.clone();
        let mut ops = Vec::new();
        g.flush(a1, &mut ops);
        g.flush(b1, &mut ops);
        ops.push(PhysicalOp::Local { qubit: a1, gate: Clifford::x() });
        ops.push(PhysicalOp::Eo { a: a1, b: b1, outcome });
        match outcome {
            EoOutcome::Success { sign } => {
                ops.push(PhysicalOp::MeasureX { qubit: b1, result: b1_result });
                for u in g.neighbours(b1) {
                    let e = edge(a1, u);
                    if !g.edges.remove(&e) {
                        g.edges.insert(e);
                    }
                }
                g.remove_vertex(b1);
                if sign * b1_result.sign() == -1 {
                    g.set_frame(a1, Clifford::z())?;
                }
            }
            EoOutcome::Failure { z_a, z_b } => {
                g.set_frame(a1, Clifford::x())?;
                g.measure_z(a1, z_a, &mut ops);
                g.measure_z(b1, z_b, &mut ops);
            }
        }
        Ok((g, ops))
    }

    /// Builds an I-shaped cluster whose labels start at `first`.
    pub fn i_cluster(shape: IShape, first: usize) -> Result<ICluster> {
        shape.validate()?;
        let mut next = first;
        let mut take = |n: usize| {
            let v: Vec<usize> = (next..next + n).collect();
            next += n;
            v
        };
        let upper = take(shape.arm);
        let bar = take(shape.bar);
        let mut lower = take(shape.arm);
        lower.reverse();
        let spine: Vec<usize> = upper.iter().chain(&bar).chain(&lower).copied().collect();
        let mut edges: Vec<(usize, usize)> = spine.windows(2).map(|w| (w[0], w[1])).collect();
        let mut vertices = spine.clone();
        for junction in [*upper.last().unwrap(), lower[0]] {
            let tail = take(shape.tail);
            let mut prev = junction;
            for &t in &tail {
                edges.push((prev, t));
                prev = t;
            }
            vertices.extend(tail);
        }
        Ok(ICluster {
            graph: GraphState::from_edges(vertices, edges)?,
            top: upper[0],
            bottom: *lower.last().unwrap(),
        })
    }

    /// Links `a_vertex` and `b_vertex` through an I-shaped cluster: its top
    /// terminal is joined to `a_vertex`, then its bottom terminal to
    /// `b_vertex`. Each join's herald is given separately.
    pub fn attach_cross_link(
        &self,
        a_vertex: usize,
        b_vertex: usize,
        cluster: &ICluster,
        top: (EoOutcome, XResult),
        bottom: (EoOutcome, XResult),
    ) -> Result<(GraphState, Vec<PhysicalOp>)> {
        self.require(b_vertex)?;
        let (g, mut ops) = self.join_chains(a_vertex, &cluster.graph, cluster.top, top.0, top.1)?;
        if !g.contains(cluster.bottom) || !g.contains(b_vertex) {
            return Ok((g, ops));
        }
        let (g, more) = g.join(b_vertex, cluster.bottom, bottom.0, bottom.1)?;
        ops.extend(more);
        Ok((g, ops))
    }

    /// Dense state vector `(⊗F_v)|G⟩` over the sorted labels.
    pub fn dense_expand(&self) -> Result<DenseQubitState> {
        let n = self.len();
        if n > MAX_DENSE_QUBITS {
            return Err(Error::TooManyQubits { n, max: MAX_DENSE_QUBITS });
        }
        let amp = C64::new(0.5f64.powf(n as f64 / 2.0), 0.0);
        let mut s = DenseQubitState::from_amplitudes(self.vertices().collect(), vec![amp; 1 << n])?;
        for (u, v) in self.edges() {
            s.apply_cz(u, v)?;
        }
        for (&v, &f) in &self.frames {
            s.apply_clifford(v, f)?;
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph state serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::graph(e.to_string()))
    }
}

/// Shape of an I cluster: two arms of `arm` vertices ending in the join
/// terminals, a vertical bar of `bar` vertices between them and a side tail
/// of `tail` vertices at each arm's inner end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IShape {
    pub arm: usize,
    pub tail: usize,
    pub bar: usize,
}

impl IShape {
    pub const MINIMAL: IShape = IShape { arm: 1, tail: 0, bar: 1 };

    pub fn vertex_count(&self) -> usize {
        2 * (self.arm + self.tail) + self.bar
    }

    fn validate(&self) -> Result<()> {
        if self.arm == 0 {
            return Err(Error::graph("I cluster needs arm >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ICluster {
    pub graph: GraphState,
    pub top: usize,
    pub bottom: usize,
}
