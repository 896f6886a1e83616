//! Drives random or exhaustive sequences of chain operations and checks the
//! tracked graph against a literal state-vector replay.

#![allow(dead_code)]

use heralded::graphstate::{DenseQubitState, EoOutcome, GraphState, XResult};
use heralded::C64;

pub const MAX_QUBITS: usize = 10;
pub const TOLERANCE: f64 = 1e-10;

/// Canonical chain straight from `Π_i (|↑⟩_i + |↓⟩_i Z_{i+1})`, labels in chain order.
pub fn chain_formula(labels: &[usize]) -> DenseQubitState {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    let n = labels.len();
    let pos: Vec<usize> = labels.iter().map(|l| sorted.binary_search(l).unwrap()).collect();
    let amps = (0..1usize << n)
        .map(|idx| {
            let bit = |i: usize| (idx >> pos[i]) & 1;
            let parity: usize = (0..n.saturating_sub(1)).map(|i| bit(i) * bit(i + 1)).sum();
            let s = if parity % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(s * 0.5f64.powf(n as f64 / 2.0), 0.0)
        })
        .collect();
    DenseQubitState::from_amplitudes(sorted, amps).unwrap()
}

#[derive(Clone, Copy, Debug)]
pub enum Step {
    /// Attach a fresh qubit at one end (`far` picks the other end).
    Extend { far: bool, outcome: EoOutcome },
    /// Measure out one end.
    Shrink { far: bool, z: u8 },
    /// Join a fresh `len`-chain at one of our ends and one of its ends.
    Join { len: usize, far: bool, partner_far: bool, outcome: EoOutcome, x: XResult },
}

/// Tracked graph plus its literal replay.
#[derive(Clone, Debug)]
pub struct Run {
    pub graph: GraphState,
    pub physical: DenseQubitState,
    next: usize,
}

impl Run {
    pub fn chain(len: usize) -> Run {
        let labels: Vec<usize> = (0..len).collect();
        Run { graph: GraphState::path(&labels).unwrap(), physical: chain_formula(&labels), next: len }
    }

    fn end(&self, far: bool) -> Option<usize> {
        let order = self.graph.chain_order().expect("operations keep a path");
        if far { order.last().copied() } else { order.first().copied() }
    }

    fn fresh(&mut self) -> usize {
        self.next += 1;
        self.next - 1
    }

    /// Applies a step; returns false if it was skipped for lack of room or
    /// an empty chain (an empty chain is restarted with a fresh `|+⟩`).
    pub fn apply(&mut self, step: Step) -> bool {
        if self.graph.is_empty() {
            let v = self.fresh();
            let (g, ops) = self.graph.prepare(v).unwrap();
            self.physical.run(&ops).unwrap();
            self.graph = g;
        }
        let (g, ops) = match step {
            Step::Extend { far, outcome } => {
                if self.graph.len() + 1 > MAX_QUBITS {
                    return false;
                }
                let end = self.end(far).unwrap();
                let new = self.fresh();
                self.graph.attempt_extension(end, new, outcome).unwrap()
            }
            Step::Shrink { far, z } => {
                let end = self.end(far).unwrap();
                self.graph.shrink_on_failure(end, z).unwrap()
            }
            Step::Join { len, far, partner_far, outcome, x } => {
                if self.graph.len() + len > MAX_QUBITS {
                    return false;
                }
                let labels: Vec<usize> = (0..len).map(|_| self.fresh()).collect();
                let partner = GraphState::path(&labels).unwrap();
                self.physical = self.physical.adjoin(&chain_formula(&labels)).unwrap();
                let b1 = if partner_far { labels[len - 1] } else { labels[0] };
                let a1 = self.end(far).unwrap();
                let (mut g, mut ops) = self.graph.join_chains(a1, &partner, b1, outcome, x).unwrap();
                if !outcome.is_success() {
                    // The partner's remnant is discarded qubit by qubit.
                    for &v in labels.iter().filter(|&&v| v != b1) {
                        let (h, more) = g.shrink_on_failure(v, 0).unwrap();
                        g = h;
                        ops.extend(more);
                    }
                }
                (g, ops)
            }
        };
        self.physical.run(&ops).unwrap();
        self.graph = g;
        true
    }

    pub fn overlap(&self) -> f64 {
        self.graph.dense_expand().unwrap().overlap(&self.physical).unwrap()
    }
}

/// Every branch of every step kind acting on the far end.
pub fn step_menu() -> Vec<Step> {
    let mut out = Vec::new();
    for outcome in EoOutcome::all() {
        out.push(Step::Extend { far: true, outcome });
    }
    for z in [0, 1] {
        out.push(Step::Shrink { far: true, z });
    }
    for outcome in EoOutcome::all() {
        let xs: &[XResult] = if outcome.is_success() { &XResult::ALL } else { &[XResult::Plus] };
        for &x in xs {
            out.push(Step::Join { len: 2, far: true, partner_far: false, outcome, x });
        }
    }
    out
}

/// Depth-first over every branch sequence of length `depth` from each
/// starting chain length. Returns (leaves checked, worst overlap).
pub fn exhaustive(start_lengths: &[usize], depth: usize) -> (usize, f64) {
    fn go(run: &Run, depth: usize, menu: &[Step], leaves: &mut usize, worst: &mut f64) {
        *worst = worst.min(run.overlap());
        if depth == 0 {
            *leaves += 1;
            return;
        }
        for &step in menu {
            let mut next = run.clone();
            if next.apply(step) {
                go(&next, depth - 1, menu, leaves, worst);
            }
        }
    }
    let menu = step_menu();
    let (mut leaves, mut worst) = (0, 1.0f64);
    for &len in start_lengths {
        go(&Run::chain(len), depth, &menu, &mut leaves, &mut worst);
    }
    (leaves, worst)
}

pub mod strategies {
    use super::*;
    use proptest::prelude::*;

    pub fn outcome() -> impl Strategy<Value = EoOutcome> {
        prop::sample::select(EoOutcome::all().to_vec())
    }

    pub fn x_result() -> impl Strategy<Value = XResult> {
        prop::sample::select(XResult::ALL.to_vec())
    }

    pub fn step() -> impl Strategy<Value = Step> {
        prop_oneof![
            (any::<bool>(), outcome()).prop_map(|(far, outcome)| Step::Extend { far, outcome }),
            (any::<bool>(), 0u8..2).prop_map(|(far, z)| Step::Shrink { far, z }),
            (1usize..4, any::<bool>(), any::<bool>(), outcome(), x_result()).prop_map(
                |(len, far, partner_far, outcome, x)| Step::Join { len, far, partner_far, outcome, x }
            ),
        ]
    }

    pub fn sequence() -> impl Strategy<Value = (usize, Vec<Step>)> {
        (1usize..5, prop::collection::vec(step(), 1..=6))
    }
}

/// Runs a sequence, returning the worst overlap seen after any step.
pub fn check_sequence(start: usize, steps: &[Step]) -> f64 {
    let mut run = Run::chain(start);
    let mut worst = run.overlap();
    for &s in steps {
        run.apply(s);
        assert!(run.graph.len() <= MAX_QUBITS);
        worst = worst.min(run.overlap());
    }
    worst
}
