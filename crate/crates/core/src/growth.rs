//! Monte Carlo cost accounting for growing linear clusters with a
//! probabilistic EO.
//!
//! The EO is reduced to a Bernoulli draw with success probability `p`
//! (or `p` is taken from [`crate::protocol::run_eo_exact`] in physical
//! mode). Only EOs are counted as cost; fresh qubits are tallied
//! separately.
//!
//! Seeds: work is split into fixed chunks and chunk `c` of a run keyed by
//! `seed` draws from [`crate::rng::stream`]`(seed, c)`, so results do not
//! depend on the number of threads.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, JoinStrategy};
use crate::error::{Error, Result};
use crate::protocol::{run_eo_exact, ProtocolConfig};
use crate::rng::{self, SimRng};

const CHUNK: u64 = 4096;

/// What a failed EO does to the chain being grown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Sequential growth restarts from a single fresh qubit; a pairwise
    /// join discards both halves.
    #[default]
    Discard,
    /// The chain end is measured out and the chain loses one qubit (never
    /// below one); a pairwise join keeps both shortened halves.
    Shrink,
}

/// How the short chains fed into joins are made.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainRecipe {
    /// One qubit at a time.
    Sequential,
    /// Two `(m+1)/2`-chains grown one qubit at a time, then joined.
    Pairwise,
}

/// Divide-and-conquer strategy: build `m`-chains, join them onto a long chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthStrategy {
    pub m: usize,
    pub recipe: ChainRecipe,
    #[serde(default)]
    pub policy: FailurePolicy,
    /// Reserved; must be false.
    #[serde(default)]
    pub recycling: bool,
}

impl GrowthStrategy {
    pub fn sequential(m: usize) -> Self {
        GrowthStrategy { m, recipe: ChainRecipe::Sequential, policy: FailurePolicy::Discard, recycling: false }
    }

    pub fn pairwise(m: usize) -> Self {
        GrowthStrategy { m, recipe: ChainRecipe::Pairwise, ..Self::sequential(m) }
    }

    /// The strategy behind the analytic `C4` / `C5` costs.
    pub fn from_join_strategy(s: JoinStrategy) -> Self {
        match s {
            JoinStrategy::C4 => Self::sequential(4),
            JoinStrategy::C5 => Self::pairwise(5),
        }
    }

    pub fn with_policy(self, policy: FailurePolicy) -> Self {
        GrowthStrategy { policy, ..self }
    }

    pub fn label(&self) -> String {
        let recipe = match self.recipe {
            ChainRecipe::Sequential => "sequential",
            ChainRecipe::Pairwise => "pairwise",
        };
        let policy = match self.policy {
            FailurePolicy::Discard => "discard",
            FailurePolicy::Shrink => "shrink",
        };
        format!("m={} {recipe} {policy}", self.m)
    }

    fn validate(&self) -> Result<()> {
        if self.recycling {
            return Err(Error::invalid("recycling strategies are not supported"));
        }
        if self.m < 2 {
            return Err(Error::invalid("short chains need m >= 2"));
        }
        if self.recipe == ChainRecipe::Pairwise && (self.m < 3 || self.m % 2 == 0) {
            return Err(Error::invalid(format!("pairwise recipe needs odd m >= 3 (got {})", self.m)));
        }
        Ok(())
    }

    fn check_growth(&self, p: f64) -> Result<()> {
        if p * self.m as f64 <= 1.0 {
            return Err(Error::GrowthCondition { m: self.m, p });
        }
        Ok(())
    }

    /// Expected EOs to produce one short chain.
    pub fn expected_chain_cost(&self, p: f64) -> Result<f64> {
        self.validate()?;
        check_p(p)?;
        match self.recipe {
            ChainRecipe::Sequential => expected_sequential_cost(self.m, p, self.policy),
            ChainRecipe::Pairwise => {
                let k = self.m.div_ceil(2);
                let first = 2.0 * expected_sequential_cost(k, p, self.policy)? + 1.0;
                let retry = match self.policy {
                    FailurePolicy::Discard => first,
                    FailurePolicy::Shrink => 2.0 * shrink_step_cost(k - 1, p) + 1.0,
                };
                Ok(first + (1.0 - p) / p * retry)
            }
        }
    }

    /// Expected EOs per net qubit added to the long chain.
    pub fn expected_cost_per_qubit(&self, p: f64) -> Result<f64> {
        self.check_growth(p)?;
        Ok((self.expected_chain_cost(p)? + 1.0) / (p * self.m as f64 - 1.0))
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1] (got {p})")));
    }
    Ok(())
}

/// Expected EOs to go from length `len` to `len + 1` when a failure costs one qubit.
fn shrink_step_cost(len: usize, p: f64) -> f64 {
    // e_1 = 1/p, e_i = (1 + (1 - p) e_{i-1}) / p
    (2..=len).fold(1.0 / p, |e, _| (1.0 + (1.0 - p) * e) / p)
}

/// Expected EOs to grow an `m`-chain from one qubit under `policy`.
pub fn expected_sequential_cost(m: usize, p: f64, policy: FailurePolicy) -> Result<f64> {
    check_p(p)?;
    if m < 1 {
        return Err(Error::invalid("chain length must be >= 1"));
    }
    match policy {
        FailurePolicy::Discard => analytic::chain_cost_no_recycling(m, p),
        FailurePolicy::Shrink => Ok((1..m).map(|len| shrink_step_cost(len, p)).sum()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// One EO adding a qubit to the end of a chain.
    Extend { success: bool },
    /// A short chain was finished at the given EO cost.
    ShortChain { cost: u64 },
    /// One EO joining a short chain onto the long chain.
    Join { success: bool },
    /// The long chain was lost and is restarted from a fresh short chain.
    Restart,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthEvent {
    pub kind: EventKind,
    /// Length of the chain the event acted on, afterwards.
    pub length: usize,
    pub eo_total: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GrowthTrace {
    pub eo_attempts: u64,
    pub qubits_consumed: u64,
    pub final_length: usize,
    pub events: Vec<GrowthEvent>,
}

struct Counter<'a> {
    eo: u64,
    qubits: u64,
    log: Option<&'a mut Vec<GrowthEvent>>,
}

impl Counter<'_> {
    fn quiet() -> Counter<'static> {
        Counter { eo: 0, qubits: 0, log: None }
    }

    fn record(&mut self, kind: EventKind, length: usize) {
        let eo_total = self.eo;
        if let Some(log) = self.log.as_deref_mut() {
            log.push(GrowthEvent { kind, length, eo_total });
        }
    }

    fn attempt(&mut self, rng: &mut SimRng, p: f64) -> bool {
        self.eo += 1;
        self.qubits += 1;
        rng.random::<f64>() < p
    }
}

/// Grows a chain from `len` to `m` qubits one at a time.
fn grow_sequential(mut len: usize, m: usize, p: f64, policy: FailurePolicy, rng: &mut SimRng, c: &mut Counter) {
    if len == 0 {
        c.qubits += 1;
        len = 1;
    }
    while len < m {
        let ok = c.attempt(rng, p);
        len = match (ok, policy) {
            (true, _) => len + 1,
            (false, FailurePolicy::Discard) => {
                c.qubits += 1;
                1
            }
            (false, FailurePolicy::Shrink) if len == 1 => {
                c.qubits += 1;
                1
            }
            (false, FailurePolicy::Shrink) => len - 1,
        };
        c.record(EventKind::Extend { success: ok }, len);
    }
}

fn build_short_chain(s: &GrowthStrategy, p: f64, rng: &mut SimRng, c: &mut Counter) {
    let start = c.eo;
    match s.recipe {
        ChainRecipe::Sequential => grow_sequential(0, s.m, p, s.policy, rng, c),
        ChainRecipe::Pairwise => {
            let k = s.m.div_ceil(2);
            let (mut a, mut b) = (0, 0);
            loop {
                grow_sequential(a, k, p, s.policy, rng, c);
                grow_sequential(b, k, p, s.policy, rng, c);
                c.eo += 1;
                let ok = rng.random::<f64>() < p;
                c.record(EventKind::Join { success: ok }, if ok { s.m } else { 0 });
                if ok {
                    break;
                }
                (a, b) = match s.policy {
                    FailurePolicy::Discard => (0, 0),
                    FailurePolicy::Shrink => (k - 1, k - 1),
                };
            }
        }
    }
    let cost = c.eo - start;
    c.record(EventKind::ShortChain { cost }, s.m);
}

/// One sequential growth run with its full event log.
pub fn trace_sequential(m: usize, p: f64, policy: FailurePolicy, seed: u64) -> Result<GrowthTrace> {
    check_p(p)?;
    let mut rng = rng::stream(seed, 0);
    let mut trace = GrowthTrace::default();
    let mut c = Counter { eo: 0, qubits: 0, log: Some(&mut trace.events) };
    grow_sequential(0, m.max(1), p, policy, &mut rng, &mut c);
    let (eo, qubits) = (c.eo, c.qubits);
    trace.eo_attempts = eo;
    trace.qubits_consumed = qubits;
    trace.final_length = m.max(1);
    Ok(trace)
}

/// Grows a long chain to at least `target` qubits by joining short chains.
/// A failed join measures out the long chain's end; if the long chain
/// empties, the next short chain becomes the new long chain.
pub fn trace_join_growth(strategy: &GrowthStrategy, p: f64, target: usize, seed: u64) -> Result<GrowthTrace> {
    strategy.validate()?;
    check_p(p)?;
    strategy.check_growth(p)?;
    let mut rng = rng::stream(seed, 0);
    let mut trace = GrowthTrace::default();
    let mut c = Counter { eo: 0, qubits: 0, log: Some(&mut trace.events) };
    let mut long = 0usize;
    while long < target {
        build_short_chain(strategy, p, &mut rng, &mut c);
        if long == 0 {
            long = strategy.m;
            c.record(EventKind::Restart, long);
            continue;
        }
        c.eo += 1;
        let ok = rng.random::<f64>() < p;
        long = if ok { long + strategy.m - 1 } else { long - 1 };
        c.record(EventKind::Join { success: ok }, long);
    }
    let (eo, qubits) = (c.eo, c.qubits);
    trace.eo_attempts = eo;
    trace.qubits_consumed = qubits;
    trace.final_length = long;
    Ok(trace)
}

/// Mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// `|mean - x|` in units of the standard error (infinite if the error is 0 and they differ).
    pub fn sigmas_from(&self, x: f64) -> f64 {
        let d = (self.mean - x).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub strategy: String,
    pub p: f64,
    /// Independent samples: chains built, or joins attempted.
    pub samples: u64,
    pub seed: u64,
    /// EOs per chain (sequential) or per net qubit (joins).
    pub cost: Estimate,
    pub predicted: Option<f64>,
    pub relative_deviation: Option<f64>,
    /// Mean fresh qubits per sample.
    pub qubits_per_sample: f64,
    /// Per-join change in long-chain length (joins only).
    pub length_gain: Option<Estimate>,
}

impl CostReport {
    fn finish(mut self) -> Self {
        self.relative_deviation = self.predicted.map(|x| (self.cost.mean - x) / x);
        self
    }
}

/// Running sums for a ratio of means.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: f64,
    x: f64,
    y: f64,
    xx: f64,
    yy: f64,
    xy: f64,
    q: f64,
}

impl Moments {
    fn add(&mut self, x: f64, y: f64, q: f64) {
        self.n += 1.0;
        self.x += x;
        self.y += y;
        self.xx += x * x;
        self.yy += y * y;
        self.xy += x * y;
        self.q += q;
    }

    fn merge(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            x: self.x + o.x,
            y: self.y + o.y,
            xx: self.xx + o.xx,
            yy: self.yy + o.yy,
            xy: self.xy + o.xy,
            q: self.q + o.q,
        }
    }

    fn var(s: f64, ss: f64, n: f64) -> f64 {
        if n < 2.0 {
            return 0.0;
        }
        ((ss - s * s / n) / (n - 1.0)).max(0.0)
    }

    fn mean_x(&self) -> Estimate {
        Estimate { mean: self.x / self.n, std_error: (Self::var(self.x, self.xx, self.n) / self.n).sqrt() }
    }

    fn mean_y(&self) -> Estimate {
        Estimate { mean: self.y / self.n, std_error: (Self::var(self.y, self.yy, self.n) / self.n).sqrt() }
    }

    /// `Σx / Σy` with a first-order (delta-method) standard error.
    fn ratio(&self) -> Estimate {
        let n = self.n;
        let (mx, my) = (self.x / n, self.y / n);
        let r = mx / my;
        let cov = if n < 2.0 { 0.0 } else { (self.xy - self.x * self.y / n) / (n - 1.0) };
        let v = Self::var(self.x, self.xx, n) - 2.0 * r * cov + r * r * Self::var(self.y, self.yy, n);
        Estimate { mean: r, std_error: (v.max(0.0) / n).sqrt() / my.abs() }
    }
}

/// Runs `samples` draws in fixed chunks, each chunk on its own stream.
fn run_chunked<F>(samples: u64, seed: u64, draw: F) -> Moments
where
    F: Fn(&mut SimRng, &mut Moments) + Sync,
{
    let chunk = |c: u64| {
        let mut rng = rng::stream(seed, c);
        let mut m = Moments::default();
        for _ in c * CHUNK..((c + 1) * CHUNK).min(samples) {
            draw(&mut rng, &mut m);
        }
        m
    };
    let chunks = samples.div_ceil(CHUNK);
    #[cfg(feature = "parallel")]
    let parts: Vec<Moments> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(chunk).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Moments> = (0..chunks).map(chunk).collect();
    parts.into_iter().fold(Moments::default(), Moments::merge)
}

fn check_samples(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    Ok(())
}

/// Mean EO count to grow an `m_target`-chain from a single qubit.
pub fn simulate_sequential(m_target: usize, p: f64, policy: FailurePolicy, trials: u64, seed: u64) -> Result<CostReport> {
    check_p(p)?;
    check_samples(trials)?;
    let m = m_target.max(1);
    let mom = run_chunked(trials, seed, |rng, acc| {
        let mut c = Counter::quiet();
        grow_sequential(0, m, p, policy, rng, &mut c);
        acc.add(c.eo as f64, 1.0, c.qubits as f64);
    });
    let label = GrowthStrategy { m: m.max(2), recipe: ChainRecipe::Sequential, policy, recycling: false }.label();
    Ok(CostReport {
        strategy: format!("single chain {label}"),
        p,
        samples: trials,
        seed,
        cost: mom.mean_x(),
        predicted: Some(expected_sequential_cost(m, p, policy)?),
        relative_deviation: None,
        qubits_per_sample: mom.q / mom.n,
        length_gain: None,
    }
    .finish())
}

/// EOs per net qubit when a long chain grows by joining short chains.
///
/// Each sample is one join attempt: its cost is the EOs spent on the short
/// chain plus the join itself, its gain is `m - 1` on success and `-1` on
/// failure. The long chain is taken to be long enough that it never empties.
pub fn simulate_join_growth(strategy: &GrowthStrategy, p: f64, joins: u64, seed: u64) -> Result<CostReport> {
    strategy.validate()?;
    check_p(p)?;
    check_samples(joins)?;
    strategy.check_growth(p)?;
    let s = *strategy;
    let mom = run_chunked(joins, seed, |rng, acc| {
        let mut c = Counter::quiet();
        build_short_chain(&s, p, rng, &mut c);
        let gain = if rng.random::<f64>() < p { s.m as f64 - 1.0 } else { -1.0 };
        acc.add(c.eo as f64 + 1.0, gain, c.qubits as f64);
    });
    Ok(CostReport {
        strategy: strategy.label(),
        p,
        samples: joins,
        seed,
        cost: mom.ratio(),
        predicted: Some(strategy.expected_cost_per_qubit(p)?),
        relative_deviation: None,
        qubits_per_sample: mom.q / mom.n,
        length_gain: Some(mom.mean_y()),
    }
    .finish())
}

/// [`simulate_join_growth`] with `p` taken from the exact EO enumeration.
pub fn simulate_join_growth_physical(
    strategy: &GrowthStrategy,
    config: &ProtocolConfig,
    joins: u64,
    seed: u64,
) -> Result<CostReport> {
    let p = physical_success_probability(config)?;
    simulate_join_growth(strategy, p, joins, seed)
}

/// Heralded success probability of one EO attempt for the given configuration.
pub fn physical_success_probability(config: &ProtocolConfig) -> Result<f64> {
    Ok(run_eo_exact(config)?.success_probability())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JoinLengthReport {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub trials: u64,
    pub length: Estimate,
    pub predicted: f64,
}

/// Mean long-chain length after a single join of an `m`-chain onto an `n`-chain.
pub fn empirical_join_length(n: usize, m: usize, p: f64, trials: u64, seed: u64) -> Result<JoinLengthReport> {
    if n < 1 || m < 2 {
        return Err(Error::invalid("need N >= 1 and m >= 2"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p must lie in [0, 1] (got {p})")));
    }
    check_samples(trials)?;
    let mom = run_chunked(trials, seed, |rng, acc| {
        let len = if rng.random::<f64>() < p { n + m - 1 } else { n - 1 };
        acc.add(len as f64, 1.0, 0.0);
    });
    Ok(JoinLengthReport { n, m, p, trials, length: mom.mean_x(), predicted: analytic::join_length(n, m, p) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub p: f64,
    /// Smallest short-chain length with `p m > 1`.
    pub min_m: usize,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
}

pub fn threshold_scan(grid: &[f64]) -> Result<Vec<ThresholdRow>> {
    grid.iter()
        .map(|&p| {
            check_p(p)?;
            Ok(ThresholdRow {
                p,
                min_m: analytic::min_chain_length(p)?,
                c4: analytic::cost_per_qubit(JoinStrategy::C4, p).ok(),
                c5: analytic::cost_per_qubit(JoinStrategy::C5, p).ok(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_success_is_exact() {
        let r = simulate_sequential(2, 1.0, FailurePolicy::Discard, 100, 1).unwrap();
        assert_eq!(r.cost.mean, 1.0);
        assert_eq!(r.cost.std_error, 0.0);
        let r = simulate_join_growth(&GrowthStrategy::sequential(4), 1.0, 1000, 1).unwrap();
        assert!((r.cost.mean - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.cost.std_error, 0.0);
    }

    #[test]
    fn sequential_matches_sum() {
        let r = simulate_sequential(4, 0.5, FailurePolicy::Discard, 100_000, 7).unwrap();
        assert_eq!(r.predicted, Some(14.0));
        assert!(r.relative_deviation.unwrap().abs() < 0.01, "{r:?}");
        let r = simulate_sequential(5, 0.245, FailurePolicy::Discard, 100_000, 8).unwrap();
        assert!(r.relative_deviation.unwrap().abs() < 0.01, "{r:?}");
    }

    #[test]
    fn shrink_policy_cost() {
        // e1 = 2, e2 = 4, e3 = 6 at p = 1/2.
        assert!((expected_sequential_cost(4, 0.5, FailurePolicy::Shrink).unwrap() - 12.0).abs() < 1e-12);
        let r = simulate_sequential(4, 0.5, FailurePolicy::Shrink, 100_000, 9).unwrap();
        assert!(r.cost.sigmas_from(12.0) < 4.0, "{r:?}");
    }

    #[test]
    fn join_strategies_match_analytic_costs() {
        for js in [JoinStrategy::C4, JoinStrategy::C5] {
            let s = GrowthStrategy::from_join_strategy(js);
            for p in [0.3, 0.5, 0.9] {
                let a = analytic::cost_per_qubit(js, p).unwrap();
                assert!((s.expected_cost_per_qubit(p).unwrap() - a).abs() < 1e-9 * a);
            }
        }
    }

    #[test]
    fn pairwise_shrink_is_cheaper() {
        let d = GrowthStrategy::pairwise(5);
        let s = d.with_policy(FailurePolicy::Shrink);
        let (cd, cs) = (d.expected_chain_cost(0.245).unwrap(), s.expected_chain_cost(0.245).unwrap());
        assert!(cs < cd);
        let r = simulate_join_growth(&s, 0.4, 200_000, 3).unwrap();
        assert!(r.cost.sigmas_from(r.predicted.unwrap()) < 4.0, "{r:?}");
    }

    #[test]
    fn growth_condition() {
        let e = simulate_join_growth(&GrowthStrategy::sequential(4), 0.25, 10, 1).unwrap_err();
        assert!(e.to_string().contains("should satisfy m > 1/p"));
        assert!(simulate_join_growth(&GrowthStrategy::pairwise(4), 0.5, 10, 1).is_err());
        let mut rec = GrowthStrategy::sequential(4);
        rec.recycling = true;
        assert!(simulate_join_growth(&rec, 0.5, 10, 1).is_err());
    }

    #[test]
    fn length_gain_is_pm_minus_one() {
        for (m, p) in [(3, 0.5), (4, 0.36125), (5, 0.245)] {
            let s = if m == 5 { GrowthStrategy::pairwise(m) } else { GrowthStrategy::sequential(m) };
            let r = simulate_join_growth(&s, p, 50_000, 11).unwrap();
            let g = r.length_gain.unwrap();
            assert!(g.sigmas_from(p * m as f64 - 1.0) < 3.0, "{g:?}");
        }
    }

    #[test]
    fn join_length_edges() {
        assert_eq!(empirical_join_length(10, 5, 1.0, 100, 1).unwrap().length.mean, 14.0);
        assert_eq!(empirical_join_length(10, 5, 0.0, 100, 1).unwrap().length.mean, 9.0);
        let r = empirical_join_length(10, 5, 0.5, 50_000, 2).unwrap();
        assert_eq!(r.predicted, 11.5);
        assert!(r.length.sigmas_from(11.5) < 3.0);
        assert!(empirical_join_length(0, 5, 0.5, 10, 1).is_err());
    }

    #[test]
    fn thresholds() {
        let rows = threshold_scan(&[0.24, 0.26, 0.5, 1.0]).unwrap();
        let ms: Vec<usize> = rows.iter().map(|r| r.min_m).collect();
        assert_eq!(ms, vec![5, 4, 3, 2]);
        assert!(rows[0].c4.is_none() && rows[0].c5.is_some());
        assert!(threshold_scan(&[0.0]).is_err());
    }

    #[test]
    fn traces_are_deterministic_and_consistent() {
        let s = GrowthStrategy::pairwise(5);
        let a = trace_join_growth(&s, 0.3, 40, 5).unwrap();
        let b = trace_join_growth(&s, 0.3, 40, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.final_length >= 40);
        assert!(a.eo_attempts as usize >= a.final_length - 1);
        assert_eq!(a.events.last().unwrap().eo_total, a.eo_attempts);
        let t = trace_sequential(6, 0.4, FailurePolicy::Discard, 3).unwrap();
        assert_eq!(t, trace_sequential(6, 0.4, FailurePolicy::Discard, 3).unwrap());
        assert_eq!(t.events.iter().filter(|e| matches!(e.kind, EventKind::Extend { .. })).count() as u64, t.eo_attempts);
        assert!(t.qubits_consumed > t.eo_attempts);
    }

    #[test]
    fn seeds_do_not_depend_on_scheduling() {
        let s = GrowthStrategy::sequential(4);
        let a = simulate_join_growth(&s, 0.5, 20_000, 42).unwrap();
        let b = simulate_join_growth(&s, 0.5, 20_000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_join_growth(&s, 0.5, 20_000, 43).unwrap();
        assert_ne!(a.cost.mean, c.cost.mean);
    }
}
