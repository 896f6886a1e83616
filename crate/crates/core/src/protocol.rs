//! The double-heralded entangling operation as an executable procedure.
//!
//! One attempt: prepare both qubits, π-pulse both `|↓⟩ → |e⟩` transitions,
//! watch the detectors for `t_wait`, let the system relax for `t_relax`; if
//! exactly one detector reported, flip both qubits, π-pulse again and run a
//! second round. The attempt succeeds when both rounds report exactly one
//! detector. Same detector twice heralds `|Ψ⁺⟩`, different detectors `|Ψ⁻⟩`.
//!
//! A round that does not report exactly one detector ends the attempt: the
//! qubits must be prepared afresh. Running the second round anyway would be
//! wrong, not merely wasteful, because a silent first round leaves `|↑↑⟩`,
//! which the flip turns into a doubly excited state whose two photons
//! always leave through one port and fake a single click.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analytic::bell_state;
use crate::error::{Error, Result};
use crate::fockspace::{qubit_block, Arm, DensityMatrix, FockSpace, Level, Operator, PureState, SpaceConfig};
use crate::rng;
use crate::trajectories::{
    dark_patterns, ClickRecord, Detector, DetectorModel, DetectorReport, RoundEngine, RoundTiming, SystemParams,
    TrajectorySampler,
};
use crate::C64;

/// Population threshold above which leftover excitation or photons are reported.
pub const RESIDUAL_WARNING: f64 = 1e-6;

fn matter_gate(space: &FockSpace, arm: Arm, pairs: &[(Level, Level)]) -> Operator {
    let mut m = DMatrix::zeros(3, 3);
    for &(from, to) in pairs {
        m[(to.index(), from.index())] = C64::new(1.0, 0.0);
    }
    space.embed(arm, &space.arm_matter_operator(&m))
}

/// Instantaneous π-pulse on `|↓⟩ ↔ |e⟩`: `|↑⟩⟨↑| + |e⟩⟨↓| + |↓⟩⟨e|`.
/// Real phase convention, so it is its own inverse.
pub fn pi_pulse(space: &FockSpace, arm: Arm) -> Operator {
    matter_gate(space, arm, &[(Level::Up, Level::Up), (Level::Down, Level::Excited), (Level::Excited, Level::Down)])
}

/// Spin flip `|↑⟩ ↔ |↓⟩`, leaving `|e⟩` alone.
pub fn x_flip(space: &FockSpace, arm: Arm) -> Operator {
    matter_gate(space, arm, &[(Level::Up, Level::Down), (Level::Down, Level::Up), (Level::Excited, Level::Excited)])
}

fn both(space: &FockSpace, f: fn(&FockSpace, Arm) -> Operator) -> Operator {
    &f(space, Arm::A) * &f(space, Arm::B)
}

/// Population of `|e⟩` on either emitter.
pub fn excited_population(space: &FockSpace, rho: &DensityMatrix) -> f64 {
    space
        .labels()
        .enumerate()
        .filter(|(_, l)| l.q_a == Level::Excited || l.q_b == Level::Excited)
        .map(|(i, _)| rho.matrix()[(i, i)].re)
        .sum()
}

/// Single-qubit state `up |↑⟩ + down |↓⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub up: C64,
    pub down: C64,
}

impl QubitState {
    pub fn plus() -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        QubitState { up: h, down: h }
    }

    pub fn up() -> Self {
        QubitState { up: C64::new(1.0, 0.0), down: C64::new(0.0, 0.0) }
    }

    pub fn down() -> Self {
        QubitState { up: C64::new(0.0, 0.0), down: C64::new(1.0, 0.0) }
    }

    fn matter(&self) -> Result<[C64; 3]> {
        let n = (self.up.norm_sqr() + self.down.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok([self.up / n, self.down / n, C64::new(0.0, 0.0)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub params: SystemParams,
    pub detectors: DetectorModel,
    /// `None` picks [`RoundTiming::default_for`] the current parameters.
    pub timing: Option<RoundTiming>,
    pub initial: [QubitState; 2],
    pub space: SpaceConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            params: SystemParams::default(),
            detectors: DetectorModel::default(),
            timing: None,
            initial: [QubitState::plus(); 2],
            space: SpaceConfig::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn new(params: SystemParams, detectors: DetectorModel) -> Self {
        ProtocolConfig { params, detectors, ..Default::default() }
    }

    pub fn timing(&self) -> Result<RoundTiming> {
        match self.timing {
            Some(t) => {
                t.validate()?;
                Ok(t)
            }
            None => RoundTiming::default_for(&self.params),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.detectors.validate()?;
        self.timing()?;
        FockSpace::new(self.space)?;
        for q in &self.initial {
            q.matter()?;
        }
        Ok(())
    }

    /// The same configuration with the arm labels exchanged.
    pub fn swapped(&self) -> Self {
        ProtocolConfig { params: self.params.swapped(), initial: [self.initial[1], self.initial[0]], ..*self }
    }

    fn initial_state(&self, space: &FockSpace) -> Result<PureState> {
        Ok(space.product_vacuum_state(self.initial[0].matter()?, self.initial[1].matter()?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Heralded { first: Detector, second: Detector },
    /// Both rounds reported one detector, but a dark count contributed to
    /// at least one report.
    DarkContaminated { first: Detector, second: Detector },
    NoClickRound1,
    TwoClicksRound1,
    NoClickRound2,
    TwoClicksRound2,
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Heralded { .. })
    }

    pub fn pattern(&self) -> Option<(Detector, Detector)> {
        match *self {
            Outcome::Heralded { first, second } | Outcome::DarkContaminated { first, second } => Some((first, second)),
            _ => None,
        }
    }

    /// `+1` for `|Ψ⁺⟩`, `-1` for `|Ψ⁻⟩`, when a detector pair was reported.
    pub fn sign(&self) -> Option<i8> {
        self.pattern().map(|(a, b)| if a == b { 1 } else { -1 })
    }

    pub fn name(&self) -> String {
        let d = |d: &Detector| match d {
            Detector::Plus => "+",
            Detector::Minus => "-",
        };
        match self {
            Outcome::Heralded { first, second } => format!("D{}D{}", d(first), d(second)),
            Outcome::DarkContaminated { first, second } => format!("DARK_D{}D{}", d(first), d(second)),
            Outcome::NoClickRound1 => "NO_CLICK_R1".into(),
            Outcome::TwoClicksRound1 => "TWO_CLICKS_R1".into(),
            Outcome::NoClickRound2 => "NO_CLICK_R2".into(),
            Outcome::TwoClicksRound2 => "TWO_CLICKS_R2".into(),
        }
    }

    fn round1_failure(report: DetectorReport) -> Option<Outcome> {
        match report {
            DetectorReport::NoClick => Some(Outcome::NoClickRound1),
            DetectorReport::Both => Some(Outcome::TwoClicksRound1),
            _ => None,
        }
    }

    fn after_round2(first: Detector, report: DetectorReport, contaminated: bool) -> Outcome {
        match report.single() {
            None if report == DetectorReport::NoClick => Outcome::NoClickRound2,
            None => Outcome::TwoClicksRound2,
            Some(second) if contaminated => Outcome::DarkContaminated { first, second },
            Some(second) => Outcome::Heralded { first, second },
        }
    }

    pub const PATTERNS: [(Detector, Detector); 4] = [
        (Detector::Plus, Detector::Plus),
        (Detector::Plus, Detector::Minus),
        (Detector::Minus, Detector::Plus),
        (Detector::Minus, Detector::Minus),
    ];
}

/// One outcome of an attempt. In exact mode it stands for the whole outcome
/// class and carries its probability.
#[derive(Clone, Debug)]
pub struct EoResult {
    pub outcome: Outcome,
    pub success: bool,
    pub sign: Option<i8>,
    /// Normalized two-qubit state (basis `|q_A q_B⟩`, `↑ = 0`) at the end of
    /// the last round that ran, cavities traced out.
    pub final_state: DensityMatrix,
    /// Overlap with the sign-matched Bell state, when a pair was reported.
    pub fidelity: Option<f64>,
    pub probability: Option<f64>,
    /// Sampled mode only.
    pub records: Vec<ClickRecord>,
}

fn fidelity_of(qubits: &DensityMatrix, sign: i8) -> f64 {
    qubits.overlap(&bell_state(sign))
}

/// Two-qubit part of a 9 × 9 emitter state; the population on `|e⟩` is
/// kept out of the block and so counts against the fidelity.
fn qubit_state(matter: &DensityMatrix) -> Result<DensityMatrix> {
    let normalized = matter.normalized()?;
    Ok(qubit_block(&normalized).0)
}

fn result_from_matter(outcome: Outcome, matter: &DensityMatrix, probability: Option<f64>, records: Vec<ClickRecord>) -> Result<EoResult> {
    let final_state = qubit_state(matter)?;
    let sign = outcome.sign();
    Ok(EoResult {
        outcome,
        success: outcome.is_success(),
        sign,
        fidelity: sign.map(|s| fidelity_of(&final_state, s)),
        final_state,
        probability,
        records,
    })
}

/// Every outcome class of one attempt with its exact probability.
#[derive(Clone, Debug)]
pub struct EoSummary {
    pub outcomes: Vec<EoResult>,
    pub warnings: Vec<String>,
    pub timing: RoundTiming,
}

impl EoSummary {
    pub fn probability(&self, outcome: Outcome) -> f64 {
        self.outcomes.iter().filter(|r| r.outcome == outcome).filter_map(|r| r.probability).sum()
    }

    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().filter_map(|r| r.probability).sum()
    }

    pub fn success_probability(&self) -> f64 {
        self.outcomes.iter().filter(|r| r.success).filter_map(|r| r.probability).sum()
    }

    pub fn pattern_probability(&self, first: Detector, second: Detector) -> f64 {
        self.probability(Outcome::Heralded { first, second })
    }

    pub fn dark_contaminated_probability(&self) -> f64 {
        self.outcomes
            .iter()
            .filter(|r| matches!(r.outcome, Outcome::DarkContaminated { .. }))
            .filter_map(|r| r.probability)
            .sum()
    }

    /// Fidelity conditioned on a successful herald, averaged over patterns.
    pub fn fidelity(&self) -> Option<f64> {
        let p = self.success_probability();
        (p > 0.0).then(|| {
            self.outcomes
                .iter()
                .filter(|r| r.success)
                .map(|r| r.probability.unwrap_or(0.0) * r.fidelity.unwrap_or(0.0))
                .sum::<f64>()
                / p
        })
    }

    /// Lowest fidelity over the successful patterns.
    pub fn worst_fidelity(&self) -> Option<f64> {
        self.outcomes.iter().filter(|r| r.success).filter_map(|r| r.fidelity).reduce(f64::min)
    }
}

/// Exact outcome statistics of one attempt.
pub fn run_eo_exact(config: &ProtocolConfig) -> Result<EoSummary> {
    config.validate()?;
    let space = FockSpace::new(config.space)?;
    let timing = config.timing()?;
    let engine = RoundEngine::new(&space, &config.params, &config.detectors, &timing)?;
    ExactRunner { space: &space, engine: &engine }.run(config, timing)
}

struct ExactRunner<'a> {
    space: &'a FockSpace,
    engine: &'a RoundEngine,
}

impl ExactRunner<'_> {
    /// Cavities traced out and re-embedded in vacuum, with a warning if the
    /// relaxation left photons behind.
    fn settle(&self, rho: &DensityMatrix, warnings: &mut Vec<String>, what: &str) -> DensityMatrix {
        let t = rho.trace();
        if t > 0.0 {
            let photons = self.space.photon_weight(rho) / t;
            if photons > RESIDUAL_WARNING {
                warnings.push(format!("{what}: residual photon weight {photons:.3e} discarded after relaxation"));
            }
        }
        self.space.trace_cavities(rho)
    }

    fn run(&self, config: &ProtocolConfig, timing: RoundTiming) -> Result<EoSummary> {
        let space = self.space;
        let mut warnings = Vec::new();
        let pulse = both(space, pi_pulse);
        let flip = both(space, x_flip);
        let q = self.engine.dark_click_probability();
        let darks = dark_patterns(q);

        let start = pulse.conjugate(&config.initial_state(space)?.density())?;
        let round1 = self.engine.propagate(&start)?;
        let mut acc: BTreeMap<Outcome, DMatrix<C64>> = BTreeMap::new();
        let mut add = |o: Outcome, m: &DensityMatrix, w: f64| {
            let e = acc.entry(o).or_insert_with(|| DMatrix::zeros(9, 9));
            *e += m.matrix() * C64::new(w, 0.0);
        };

        for s1 in DetectorReport::ALL {
            let class = round1.class(s1);
            if class.trace() <= 0.0 {
                continue;
            }
            let matter1 = self.settle(class, &mut warnings, "round 1");
            // Round 2 is linear in its input, so it runs once per physical
            // class and dark-count weights are applied afterwards.
            let mut round2 = None;
            for &(d1, w1) in &darks {
                let r1 = s1.union(d1);
                if let Some(fail) = Outcome::round1_failure(r1) {
                    add(fail, &matter1, w1);
                    continue;
                }
                let first = r1.single().expect("single report");
                if round2.is_none() {
                    let full = space.embed_vacuum(&matter1);
                    let excited = excited_population(space, &full) / full.trace();
                    if excited > RESIDUAL_WARNING {
                        warnings.push(format!("spin flip applied with excited population {excited:.3e}"));
                    }
                    let input = pulse.conjugate(&flip.conjugate(&full)?)?;
                    round2 = Some(self.engine.propagate(&input)?);
                }
                let classes2 = round2.as_ref().expect("round 2 computed");
                for s2 in DetectorReport::ALL {
                    let class2 = classes2.class(s2);
                    if class2.trace() <= 0.0 {
                        continue;
                    }
                    let matter2 = self.settle(class2, &mut warnings, "round 2");
                    for &(d2, w2) in &darks {
                        let r2 = s2.union(d2);
                        let contaminated = r1 != s1 || r2 != s2;
                        add(Outcome::after_round2(first, r2, contaminated), &matter2, w1 * w2);
                    }
                }
            }
        }

        warnings.sort();
        warnings.dedup();
        let mut outcomes = Vec::new();
        for (outcome, m) in acc {
            let m = DensityMatrix::new(m).hermitian_part();
            let p = m.trace();
            if p > 0.0 {
                outcomes.push(result_from_matter(outcome, &m, Some(p), Vec::new())?);
            }
        }
        Ok(EoSummary { outcomes, warnings, timing })
    }
}

/// Probability that an excited emitter's photon leaves through its cavity
/// within the detection window, inferred from the ideal-detector success
/// probability `p = p_cav² / 2`.
pub fn cavity_extraction_probability(config: &ProtocolConfig) -> Result<f64> {
    let ideal = ProtocolConfig { detectors: DetectorModel { eta: 1.0, dark_rate: 0.0, ..config.detectors }, ..*config };
    Ok((2.0 * run_eo_exact(&ideal)?.success_probability()).sqrt())
}

/// Monte Carlo attempts drawn from one configuration.
#[derive(Clone, Debug)]
pub struct EoSampler {
    config: ProtocolConfig,
    sampler: TrajectorySampler,
    pulse: Operator,
    flip: Operator,
    initial: PureState,
}

impl EoSampler {
    pub fn new(config: &ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let space = FockSpace::new(config.space)?;
        let sampler = TrajectorySampler::new(&space, &config.params, &config.detectors, &config.timing()?)?;
        Ok(EoSampler {
            config: *config,
            pulse: both(&space, pi_pulse),
            flip: both(&space, x_flip),
            initial: config.initial_state(&space)?,
            sampler,
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    /// Attempt number `trial` of the run keyed by `seed`.
    pub fn trial(&self, seed: u64, trial: u64) -> Result<EoResult> {
        let space = self.sampler.space();
        let mut rng = rng::stream(seed, trial);
        let psi = self.pulse.apply(&self.initial)?;
        let (rec1, psi) = self.sampler.run_round(&psi, &mut rng)?;
        let r1 = rec1.reported();
        if let Some(fail) = Outcome::round1_failure(r1) {
            let matter = space.trace_cavities(&psi.density());
            return result_from_matter(fail, &matter, None, vec![rec1]);
        }
        let first = r1.single().expect("single report");
        let psi = self.sampler.reset_cavities(&psi, &mut rng)?;
        let psi = self.pulse.apply(&self.flip.apply(&psi)?)?;
        let (rec2, psi) = self.sampler.run_round(&psi, &mut rng)?;
        let contaminated = rec1.physical() != r1 || rec2.physical() != rec2.reported();
        let outcome = Outcome::after_round2(first, rec2.reported(), contaminated);
        let matter = space.trace_cavities(&psi.density());
        result_from_matter(outcome, &matter, None, vec![rec1, rec2])
    }
}

/// One sampled attempt; identical seeds give identical results.
pub fn run_eo_sampled(config: &ProtocolConfig, seed: u64) -> Result<EoResult> {
    EoSampler::new(config)?.trial(seed, 0)
}

/// Outcome counts over many sampled attempts (`trial = 0..trials`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledStatistics {
    pub seed: u64,
    pub trials: u64,
    pub counts: BTreeMap<String, u64>,
    /// Mean fidelity over heralded successes.
    pub mean_fidelity: Option<f64>,
    /// Mean fidelity over dark-contaminated attempts.
    pub contaminated_fidelity: Option<f64>,
    #[serde(skip)]
    pub by_outcome: BTreeMap<Outcome, u64>,
}

impl SampledStatistics {
    pub fn count(&self, outcome: Outcome) -> u64 {
        self.by_outcome.get(&outcome).copied().unwrap_or(0)
    }

    pub fn frequency(&self, outcome: Outcome) -> f64 {
        self.count(outcome) as f64 / self.trials as f64
    }

    pub fn successes(&self) -> u64 {
        self.by_outcome.iter().filter(|(o, _)| o.is_success()).map(|(_, n)| n).sum()
    }
}

#[derive(Default)]
struct Tally {
    by_outcome: BTreeMap<Outcome, u64>,
    fid: (f64, u64),
    dark_fid: (f64, u64),
}

impl Tally {
    fn add(&mut self, r: &EoResult) {
        *self.by_outcome.entry(r.outcome).or_default() += 1;
        if let Some(f) = r.fidelity {
            let slot = if r.success { &mut self.fid } else { &mut self.dark_fid };
            slot.0 += f;
            slot.1 += 1;
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (k, v) in other.by_outcome {
            *self.by_outcome.entry(k).or_default() += v;
        }
        self.fid = (self.fid.0 + other.fid.0, self.fid.1 + other.fid.1);
        self.dark_fid = (self.dark_fid.0 + other.dark_fid.0, self.dark_fid.1 + other.dark_fid.1);
        self
    }
}

/// Number of consecutive trials handled by one worker task.
const CHUNK: u64 = 512;

pub fn sample_eo_statistics(config: &ProtocolConfig, seed: u64, trials: u64) -> Result<SampledStatistics> {
    let sampler = EoSampler::new(config)?;
    let chunk = |c: u64| -> Result<Tally> {
        let mut t = Tally::default();
        for k in c * CHUNK..((c + 1) * CHUNK).min(trials) {
            t.add(&sampler.trial(seed, k)?);
        }
        Ok(t)
    };
    let chunks = trials.div_ceil(CHUNK);
    #[cfg(feature = "parallel")]
    let tallies: Vec<Result<Tally>> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(chunk).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let tallies: Vec<Result<Tally>> = (0..chunks).map(chunk).collect();
    let mut total = Tally::default();
    for t in tallies {
        total = total.merge(t?);
    }
    let mean = |(s, n): (f64, u64)| (n > 0).then(|| s / n as f64);
    Ok(SampledStatistics {
        seed,
        trials,
        counts: total.by_outcome.iter().map(|(o, n)| (o.name(), *n)).collect(),
        mean_fidelity: mean(total.fid),
        contaminated_fidelity: mean(total.dark_fid),
        by_outcome: total.by_outcome,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Detector efficiency.
    Eta,
    /// Spontaneous emission rate on both arms, in units of the base `Γ_slow`.
    GammaOverSlow,
    /// `κ_A/κ_B` with `κ_B` and both couplings from the base configuration.
    KappaRatio,
    /// `g_A/g_B` with `g_B` and both decays from the base configuration.
    GRatio,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Eta => "eta",
            SweepAxis::GammaOverSlow => "gamma-over-slow",
            SweepAxis::KappaRatio => "kappa-ratio",
            SweepAxis::GRatio => "g-ratio",
        }
    }

    pub fn parse(s: &str) -> Result<SweepAxis> {
        [SweepAxis::Eta, SweepAxis::GammaOverSlow, SweepAxis::KappaRatio, SweepAxis::GRatio]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown sweep axis '{s}'")))
    }

    /// Configuration at grid value `x`.
    pub fn apply(self, base: &ProtocolConfig, x: f64) -> Result<ProtocolConfig> {
        let mut c = *base;
        match self {
            SweepAxis::Eta => c.detectors.eta = x,
            SweepAxis::GammaOverSlow => {
                let g = x * base.params.slowest_decay();
                c.params.gamma_a = g;
                c.params.gamma_b = g;
            }
            SweepAxis::KappaRatio => c.params.kappa_a = x * base.params.kappa_b,
            SweepAxis::GRatio => c.params.g_a = x * base.params.g_b,
        }
        c.validate()?;
        Ok(c)
    }
}

/// Column order of sweep tables.
pub const SWEEP_COLUMNS: [&str; 13] = [
    "axis",
    "x",
    "p_success",
    "fidelity",
    "p_pp",
    "p_pm",
    "p_mp",
    "p_mm",
    "no_click_r1",
    "two_clicks_r1",
    "no_click_r2",
    "two_clicks_r2",
    "dark_contaminated",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub x: f64,
    pub p_success: f64,
    /// Post-selected fidelity; `None` where nothing succeeds.
    pub fidelity: Option<f64>,
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
    pub no_click_r1: f64,
    pub two_clicks_r1: f64,
    pub no_click_r2: f64,
    pub two_clicks_r2: f64,
    pub dark_contaminated: f64,
}

impl SweepRow {
    pub fn from_summary(axis: SweepAxis, x: f64, s: &EoSummary) -> SweepRow {
        let (p, m) = (Detector::Plus, Detector::Minus);
        SweepRow {
            axis: axis.name().into(),
            x,
            p_success: s.success_probability(),
            fidelity: s.fidelity(),
            p_pp: s.pattern_probability(p, p),
            p_pm: s.pattern_probability(p, m),
            p_mp: s.pattern_probability(m, p),
            p_mm: s.pattern_probability(m, m),
            no_click_r1: s.probability(Outcome::NoClickRound1),
            two_clicks_r1: s.probability(Outcome::TwoClicksRound1),
            no_click_r2: s.probability(Outcome::NoClickRound2),
            two_clicks_r2: s.probability(Outcome::TwoClicksRound2),
            dark_contaminated: s.dark_contaminated_probability(),
        }
    }
}

/// Exact success probability and post-selected fidelity along one axis.
/// Rows come back in grid order regardless of scheduling.
pub fn fidelity_sweep(axis: SweepAxis, grid: &[f64], base: &ProtocolConfig) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    let point = |&x: &f64| -> Result<SweepRow> {
        let config = axis.apply(base, x)?;
        Ok(SweepRow::from_summary(axis, x, &run_eo_exact(&config)?))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.par_iter().map(point).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.iter().map(point).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::BasisLabel;
    use crate::linalg::max_abs_diff;

    fn space() -> FockSpace {
        FockSpace::new(SpaceConfig::default()).unwrap()
    }

    fn ket(s: &FockSpace, qa: Level, qb: Level) -> PureState {
        s.basis_state(&BasisLabel::new(qa, 0, qb, 0)).unwrap()
    }

    #[test]
    fn pulse_and_flip_actions() {
        let s = space();
        let p = pi_pulse(&s, Arm::A);
        assert_eq!(p.apply(&ket(&s, Level::Down, Level::Up)).unwrap(), ket(&s, Level::Excited, Level::Up));
        assert_eq!(p.apply(&ket(&s, Level::Up, Level::Up)).unwrap(), ket(&s, Level::Up, Level::Up));
        assert!(max_abs_diff((&p * &p).matrix(), s.identity().matrix()) == 0.0);
        let x = x_flip(&s, Arm::B);
        assert_eq!(x.apply(&ket(&s, Level::Up, Level::Up)).unwrap(), ket(&s, Level::Up, Level::Down));
        assert_eq!(x.apply(&ket(&s, Level::Up, Level::Down)).unwrap(), ket(&s, Level::Up, Level::Up));
        assert_eq!(x.apply(&ket(&s, Level::Up, Level::Excited)).unwrap(), ket(&s, Level::Up, Level::Excited));
        assert!(max_abs_diff((&x * &x).matrix(), s.identity().matrix()) == 0.0);
    }

    #[test]
    fn ideal_attempt() {
        let summary = run_eo_exact(&ProtocolConfig::default()).unwrap();
        assert!((summary.total_probability() - 1.0).abs() < 1e-9);
        assert!((summary.success_probability() - 0.5).abs() < 1e-6);
        for (a, b) in Outcome::PATTERNS {
            assert!((summary.pattern_probability(a, b) - 0.125).abs() < 1e-6);
        }
        for r in summary.outcomes.iter().filter(|r| r.success) {
            assert!(1.0 - r.fidelity.unwrap() < 1e-9, "{:?}", r.outcome);
        }
        // |↑↑⟩ is silent in round 1; |ee⟩ clicks once in round 1 (both photons
        // bunch) but leaves |↓↓⟩, which is silent after the flip.
        assert!((summary.probability(Outcome::NoClickRound1) - 0.25).abs() < 1e-6);
        assert!((summary.probability(Outcome::NoClickRound2) - 0.25).abs() < 1e-6);
        assert!(summary.probability(Outcome::TwoClicksRound1) < 1e-9);
        assert!(summary.probability(Outcome::TwoClicksRound2) < 1e-9);
    }

    #[test]
    fn signs_follow_detector_pattern() {
        let summary = run_eo_exact(&ProtocolConfig::default()).unwrap();
        for r in summary.outcomes.iter().filter(|r| r.success) {
            let (a, b) = r.outcome.pattern().unwrap();
            let plus = r.final_state.overlap(&bell_state(1));
            let minus = r.final_state.overlap(&bell_state(-1));
            if a == b {
                assert!(plus > 1.0 - 1e-9 && minus < 1e-9);
            } else {
                assert!(minus > 1.0 - 1e-9 && plus < 1e-9);
            }
        }
    }

    #[test]
    fn inefficient_detectors_keep_fidelity() {
        let config = ProtocolConfig::new(SystemParams::default(), DetectorModel::with_eta(0.85));
        let s = run_eo_exact(&config).unwrap();
        assert!((s.success_probability() - 0.36125).abs() < 1e-3);
        assert!(1.0 - s.worst_fidelity().unwrap() < 1e-9);
    }

    #[test]
    fn mismatched_decay_costs_little_fidelity() {
        let params = SystemParams { kappa_a: 1.05, ..Default::default() };
        let s = run_eo_exact(&ProtocolConfig::new(params, DetectorModel::default())).unwrap();
        let f = s.fidelity().unwrap();
        assert!(1.0 - f < 1e-3 && 1.0 - f > 0.0, "{f}");
    }

    #[test]
    fn exchange_symmetry() {
        let params = SystemParams { g_a: 0.32, kappa_a: 0.9, gamma_b: 0.01, ..Default::default() };
        let config = ProtocolConfig { detectors: DetectorModel::with_eta(0.9), ..ProtocolConfig::new(params, DetectorModel::default()) };
        let a = run_eo_exact(&config).unwrap();
        let b = run_eo_exact(&config.swapped()).unwrap();
        assert!((a.success_probability() - b.success_probability()).abs() < 1e-10);
        for (x, y) in Outcome::PATTERNS {
            assert!((a.pattern_probability(x, y) - b.pattern_probability(x, y)).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_attempt_is_reproducible() {
        let config = ProtocolConfig { detectors: DetectorModel { dark_rate: 1e-3, ..Default::default() }, ..Default::default() };
        let a = run_eo_sampled(&config, 9).unwrap();
        let b = run_eo_sampled(&config, 9).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.records, b.records);
        assert_eq!(a.final_state, b.final_state);
    }

    #[test]
    fn dark_counts_contaminate() {
        let base = ProtocolConfig::default();
        let timing = base.timing().unwrap();
        let rate = -(0.9f64).ln() / timing.t_wait; // 10 % per detector per window
        let config = ProtocolConfig { detectors: DetectorModel { dark_rate: rate, ..Default::default() }, ..base };
        let s = run_eo_exact(&config).unwrap();
        assert!((s.total_probability() - 1.0).abs() < 1e-9);
        let dark = s.dark_contaminated_probability();
        assert!(dark > 0.01, "{dark}");
        let worst = s
            .outcomes
            .iter()
            .filter(|r| matches!(r.outcome, Outcome::DarkContaminated { .. }))
            .filter_map(|r| r.fidelity)
            .fold(1.0, f64::min);
        assert!(worst < 0.99);
        assert!(1.0 - s.worst_fidelity().unwrap() < 1e-9);
    }

    #[test]
    fn sweep_rows_follow_grid() {
        let rows = fidelity_sweep(SweepAxis::Eta, &[1.0, 0.5], &ProtocolConfig::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].x, 1.0);
        assert!((rows[1].p_success - 0.125).abs() < 1e-6);
        assert!(fidelity_sweep(SweepAxis::Eta, &[], &ProtocolConfig::default()).is_err());
        assert!(fidelity_sweep(SweepAxis::Eta, &[1.5], &ProtocolConfig::default()).is_err());
        assert_eq!(SweepAxis::parse("g-ratio").unwrap(), SweepAxis::GRatio);
    }
}
