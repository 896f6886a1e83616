//! Replays chain operations literally on state vectors and compares with the
//! tracked graph. Used by the command-line verifier.

use rand::Rng;

use crate::error::Result;
use crate::rng;
use crate::C64;

use super::{DenseQubitState, EoOutcome, GraphState, XResult};

/// Largest register a check run lets the chain reach.
pub const MAX_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckSummary {
    /// Operation sequences (random) or branch paths (exhaustive) checked.
    pub paths: usize,
    /// Smallest overlap between tracked and replayed state seen anywhere.
    pub worst_overlap: f64,
}

/// Chain state from `Π_i (|↑⟩_i + |↓⟩_i Z_{i+1})`, labels in chain order.
pub fn chain_formula(labels: &[usize]) -> Result<DenseQubitState> {
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
    DenseQubitState::from_amplitudes(sorted, amps)
}

#[derive(Clone, Copy, Debug)]
enum Step {
    Extend { far: bool, outcome: EoOutcome },
    Shrink { far: bool, z: u8 },
    Join { len: usize, far: bool, partner_far: bool, outcome: EoOutcome, x: XResult },
}

#[derive(Clone)]
struct Run {
    graph: GraphState,
    physical: DenseQubitState,
    next: usize,
}

impl Run {
    fn chain(len: usize) -> Result<Run> {
        let labels: Vec<usize> = (0..len).collect();
        Ok(Run { graph: GraphState::path(&labels)?, physical: chain_formula(&labels)?, next: len })
    }

    fn end(&self, far: bool) -> usize {
        let order = self.graph.chain_order().expect("chain operations keep a path");
        if far { order[order.len() - 1] } else { order[0] }
    }

    fn fresh(&mut self) -> usize {
        self.next += 1;
        self.next - 1
    }

    fn apply(&mut self, step: Step) -> Result<bool> {
        if self.graph.is_empty() {
            let v = self.fresh();
            let (g, ops) = self.graph.prepare(v)?;
            self.physical.run(&ops)?;
            self.graph = g;
        }
        let (g, ops) = match step {
            Step::Extend { far, outcome } => {
                if self.graph.len() + 1 > MAX_QUBITS {
                    return Ok(false);
                }
                let end = self.end(far);
                let new = self.fresh();
                self.graph.attempt_extension(end, new, outcome)?
            }
            Step::Shrink { far, z } => self.graph.shrink_on_failure(self.end(far), z)?,
            Step::Join { len, far, partner_far, outcome, x } => {
                if self.graph.len() + len > MAX_QUBITS {
                    return Ok(false);
                }
                let labels: Vec<usize> = (0..len).map(|_| self.fresh()).collect();
                self.physical = self.physical.adjoin(&chain_formula(&labels)?)?;
                let b1 = if partner_far { labels[len - 1] } else { labels[0] };
                let a1 = self.end(far);
                let (mut g, mut ops) = self.graph.join_chains(a1, &GraphState::path(&labels)?, b1, outcome, x)?;
                if !outcome.is_success() {
                    for &v in labels.iter().filter(|&&v| v != b1) {
                        let (h, more) = g.shrink_on_failure(v, 0)?;
                        g = h;
                        ops.extend(more);
                    }
                }
                (g, ops)
            }
        };
        self.physical.run(&ops)?;
        self.graph = g;
        Ok(true)
    }

    fn overlap(&self) -> Result<f64> {
        self.graph.dense_expand()?.overlap(&self.physical)
    }
}

fn random_step(rng: &mut rng::SimRng) -> Step {
    let outcome = EoOutcome::all()[rng.random_range(0..6)];
    let far = rng.random::<bool>();
    match rng.random_range(0..3) {
        0 => Step::Extend { far, outcome },
        1 => Step::Shrink { far, z: rng.random_range(0..2) },
        _ => Step::Join {
            len: rng.random_range(1..4),
            far,
            partner_far: rng.random::<bool>(),
            outcome,
            x: XResult::ALL[rng.random_range(0..2)],
        },
    }
}

/// `count` random sequences of up to `max_steps` operations, sequence `k`
/// drawn from stream `k` of `seed`.
pub fn random_sequences(count: usize, max_steps: usize, seed: u64) -> Result<CheckSummary> {
    let mut worst: f64 = 1.0;
    for k in 0..count {
        let mut rng = rng::stream(seed, k as u64);
        let mut run = Run::chain(rng.random_range(1..5))?;
        worst = worst.min(run.overlap()?);
        for _ in 0..rng.random_range(1..=max_steps.max(1)) {
            run.apply(random_step(&mut rng))?;
            worst = worst.min(run.overlap()?);
        }
    }
    Ok(CheckSummary { paths: count, worst_overlap: worst })
}

fn menu() -> Vec<Step> {
    let mut out: Vec<Step> = EoOutcome::all().iter().map(|&outcome| Step::Extend { far: true, outcome }).collect();
    out.extend([0, 1].map(|z| Step::Shrink { far: true, z }));
    for outcome in EoOutcome::all() {
        let xs: &[XResult] = if outcome.is_success() { &XResult::ALL } else { &[XResult::Plus] };
        for &x in xs {
            out.push(Step::Join { len: 2, far: true, partner_far: false, outcome, x });
        }
    }
    out
}

/// Every herald and measurement branch of extend / shrink / join, `depth`
/// steps deep, from each starting chain length.
pub fn exhaustive(start_lengths: &[usize], depth: usize) -> Result<CheckSummary> {
    fn go(run: &Run, depth: usize, menu: &[Step], acc: &mut CheckSummary) -> Result<()> {
        acc.worst_overlap = acc.worst_overlap.min(run.overlap()?);
        if depth == 0 {
            acc.paths += 1;
            return Ok(());
        }
        for &step in menu {
            let mut next = run.clone();
            if next.apply(step)? {
                go(&next, depth - 1, menu, acc)?;
            }
        }
        Ok(())
    }
    let menu = menu();
    let mut acc = CheckSummary { paths: 0, worst_overlap: 1.0 };
    for &len in start_lengths {
        go(&Run::chain(len)?, depth, &menu, &mut acc)?;
    }
    Ok(acc)
}
