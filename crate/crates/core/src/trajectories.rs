//! Conditional evolution under the non-Hermitian effective Hamiltonian,
//! the jump channels of the two-detector setup, exact enumeration of the
//! click classes of one detection round, and seeded Monte Carlo unraveling.
//!
//! Exact enumeration works on density matrices. For a set `S` of detector
//! channels, `Φ_S(t)` is the Lindblad evolution in which the jumps in `S`
//! are removed from the recycling term but kept in `H_eff`; its output is the
//! unnormalized sum over every record with no click in `S`. The four classes
//! a pair of non-resolving detectors can report then follow by
//! inclusion–exclusion:
//!
//! ```text
//! none  = Φ_{+,-}
//! +only = Φ_{-} - Φ_{+,-}
//! -only = Φ_{+} - Φ_{+,-}
//! both  = Φ_{} - Φ_{+} - Φ_{-} + Φ_{+,-}
//! ```
//!
//! which integrates over every click time in closed form instead of by
//! quadrature. Propagators are matrix exponentials of the Liouvillian
//! restricted to the subspace reachable from the initial support.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{Arm, DensityMatrix, FockSpace, Level, Operator, PureState};
use crate::linalg::BlockExp;
use crate::rng;
use crate::C64;

const IM: C64 = C64 { re: 0.0, im: 1.0 };

/// Per-arm rates in units of a reference cavity decay (`κ_ref = 1`).
/// The field of cavity `i` leaks at `2κ_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub g_a: f64,
    pub g_b: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams::symmetric(0.3, 1.0, 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmParams {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl ArmParams {
    /// Slower decay rate of the damped single-excitation problem,
    /// `κ - Re sqrt(κ² - g²)`. Equals `κ` in the underdamped regime.
    pub fn slow_rate(&self) -> f64 {
        let disc = self.kappa * self.kappa - self.g * self.g;
        if disc > 0.0 {
            // g²/(κ + s) avoids the cancellation in κ - s for small g.
            self.g * self.g / (self.kappa + disc.sqrt())
        } else {
            self.kappa
        }
    }
}

impl SystemParams {
    pub fn symmetric(g: f64, kappa: f64, gamma: f64) -> Self {
        SystemParams { g_a: g, g_b: g, kappa_a: kappa, kappa_b: kappa, gamma_a: gamma, gamma_b: gamma }
    }

    pub fn arm(&self, arm: Arm) -> ArmParams {
        match arm {
            Arm::A => ArmParams { g: self.g_a, kappa: self.kappa_a, gamma: self.gamma_a },
            Arm::B => ArmParams { g: self.g_b, kappa: self.kappa_b, gamma: self.gamma_b },
        }
    }

    /// Same system with the arm labels exchanged.
    pub fn swapped(&self) -> Self {
        SystemParams {
            g_a: self.g_b,
            g_b: self.g_a,
            kappa_a: self.kappa_b,
            kappa_b: self.kappa_a,
            gamma_a: self.gamma_b,
            gamma_b: self.gamma_a,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("g_A", self.g_a),
            ("g_B", self.g_b),
            ("kappa_A", self.kappa_a),
            ("kappa_B", self.kappa_b),
            ("gamma_A", self.gamma_a),
            ("gamma_B", self.gamma_b),
        ];
        for (name, v) in named {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be a finite rate >= 0 (got {v})")));
            }
        }
        if self.kappa_a <= 0.0 || self.kappa_b <= 0.0 {
            return Err(Error::invalid("kappa_A and kappa_B must be > 0"));
        }
        Ok(())
    }

    /// Slowest single-excitation decay rate over the two arms.
    pub fn slowest_decay(&self) -> f64 {
        self.arm(Arm::A).slow_rate().min(self.arm(Arm::B).slow_rate())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub eta: f64,
    /// Dark counts per unit time, per detector.
    pub dark_rate: f64,
    #[serde(default)]
    pub resolves_photon_number: bool,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel { eta: 1.0, dark_rate: 0.0, resolves_photon_number: false }
    }
}

impl DetectorModel {
    pub fn with_eta(eta: f64) -> Self {
        DetectorModel { eta, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid(format!("eta must lie in [0, 1] (got {})", self.eta)));
        }
        if !self.dark_rate.is_finite() || self.dark_rate < 0.0 {
            return Err(Error::invalid(format!("dark_rate must be >= 0 (got {})", self.dark_rate)));
        }
        if self.resolves_photon_number {
            return Err(Error::invalid("photon-number-resolving detectors are not supported"));
        }
        Ok(())
    }

    /// Probability of at least one dark count in one detector over `window`.
    pub fn dark_click_probability(&self, window: f64) -> f64 {
        -(-self.dark_rate * window).exp_m1()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Channel {
    DetectPlus,
    DetectMinus,
    LossA,
    LossB,
    SpontA,
    SpontB,
}

impl Channel {
    pub const ALL: [Channel; 6] =
        [Channel::DetectPlus, Channel::DetectMinus, Channel::LossA, Channel::LossB, Channel::SpontA, Channel::SpontB];

    pub fn is_detector(self) -> bool {
        matches!(self, Channel::DetectPlus | Channel::DetectMinus)
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::DetectPlus => "DETECT_PLUS",
            Channel::DetectMinus => "DETECT_MINUS",
            Channel::LossA => "LOSS_A",
            Channel::LossB => "LOSS_B",
            Channel::SpontA => "SPONT_A",
            Channel::SpontB => "SPONT_B",
        }
    }
}

/// Jump operator including its `sqrt(rate)` prefactor.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpChannel {
    pub channel: Channel,
    pub operator: Operator,
}

impl JumpChannel {
    pub fn is_zero(&self) -> bool {
        self.operator.max_abs() == 0.0
    }
}

/// `H` on one emitter ⊗ cavity factor.
pub fn arm_hamiltonian(space: &FockSpace, p: ArmParams) -> DMatrix<C64> {
    let c = space.arm_annihilation();
    let cd = c.adjoint();
    let emit = space.arm_transition(Level::Excited, Level::Down) * &cd;
    let mut h = (&emit + emit.adjoint()) * C64::new(p.g / 2.0, 0.0);
    h -= (&cd * &c) * C64::new(0.0, p.kappa);
    h -= space.arm_transition(Level::Excited, Level::Excited) * C64::new(0.0, p.gamma / 2.0);
    h
}

/// `H_eff = Σ_i (g_i/2)(|↓⟩⟨e| c_i† + h.c.) - i κ_i c_i†c_i - i (γ_i/2)|e⟩⟨e|`.
pub fn effective_hamiltonian(space: &FockSpace, params: &SystemParams) -> Operator {
    let ha = space.embed(Arm::A, &arm_hamiltonian(space, params.arm(Arm::A)));
    let hb = space.embed(Arm::B, &arm_hamiltonian(space, params.arm(Arm::B)));
    &ha + &hb
}

/// All six channels in [`Channel::ALL`] order; some may be identically zero.
pub fn jump_channels(space: &FockSpace, params: &SystemParams, detectors: &DetectorModel) -> Vec<JumpChannel> {
    let eta = detectors.eta;
    let r = |x: f64| C64::new(x.max(0.0).sqrt(), 0.0);
    let ca = space.annihilation(Arm::A);
    let cb = space.annihilation(Arm::B);
    let da = ca.scaled(r(2.0 * params.kappa_a * eta));
    let db = cb.scaled(r(2.0 * params.kappa_b * eta));
    let half = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let ops = [
        (&da + &db).scaled(half),
        (&da - &db).scaled(half),
        ca.scaled(r(2.0 * params.kappa_a * (1.0 - eta))),
        cb.scaled(r(2.0 * params.kappa_b * (1.0 - eta))),
        space.transition(Arm::A, Level::Excited, Level::Down).scaled(r(params.gamma_a)),
        space.transition(Arm::B, Level::Excited, Level::Down).scaled(r(params.gamma_b)),
    ];
    Channel::ALL.into_iter().zip(ops).map(|(channel, operator)| JumpChannel { channel, operator }).collect()
}

/// `Σ_c L_c† L_c`.
pub fn decay_operator(channels: &[JumpChannel]) -> Operator {
    let dim = channels.first().map_or(0, |c| c.operator.dim());
    channels.iter().fold(Operator::zeros(dim), |acc, c| &acc + &(&c.operator.adjoint() * &c.operator))
}

/// `exp(-i H_eff t)` stored as the two per-arm factors.
#[derive(Clone, Debug)]
pub struct NoJumpPropagator {
    arm_dim: usize,
    u_a: DMatrix<C64>,
    u_b: DMatrix<C64>,
}

impl NoJumpPropagator {
    pub fn new(space: &FockSpace, params: &SystemParams, t: f64) -> Self {
        let gen = |arm| arm_hamiltonian(space, params.arm(arm)) * (-IM);
        NoJumpPropagator {
            arm_dim: space.arm_dim(),
            u_a: BlockExp::new(&gen(Arm::A), t).to_dense(),
            u_b: BlockExp::new(&gen(Arm::B), t).to_dense(),
        }
    }

    pub fn apply(&self, state: &PureState) -> PureState {
        let d = self.arm_dim;
        let psi = state.amplitudes();
        assert_eq!(psi.len(), d * d);
        let m = DMatrix::from_fn(d, d, |a, b| psi[a * d + b]);
        let out = &self.u_a * m * self.u_b.transpose();
        PureState::new(DVector::from_fn(d * d, |k, _| out[(k / d, k % d)]))
    }

    pub fn to_operator(&self) -> Operator {
        Operator::new(self.u_a.kronecker(&self.u_b))
    }
}

/// Unnormalized conditional state `exp(-i H_eff t)|ψ⟩`; its squared norm is
/// the probability of no jump of any kind during `[0, t]`.
pub fn no_jump_propagate(space: &FockSpace, state: &PureState, params: &SystemParams, t: f64) -> Result<PureState> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("propagation time must be finite and >= 0 (got {t})")));
    }
    if state.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: state.dim() });
    }
    Ok(NoJumpPropagator::new(space, params, t).apply(state))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTiming {
    pub t_wait: f64,
    pub t_relax: f64,
}

impl RoundTiming {
    /// Multiple of `1/Γ_slow` used for both the detection window and the
    /// relaxation period when no timing is given. At this length the
    /// undetected tail `exp(-Γ_slow t)` is about 2e-9.
    pub const DEFAULT_SLOW_TIMES: f64 = 20.0;

    pub fn default_for(params: &SystemParams) -> Result<RoundTiming> {
        RoundTiming::slow_multiples(params, Self::DEFAULT_SLOW_TIMES, Self::DEFAULT_SLOW_TIMES)
    }

    pub fn slow_multiples(params: &SystemParams, wait: f64, relax: f64) -> Result<RoundTiming> {
        let slow = params.slowest_decay();
        if !(slow > 0.0) {
            return Err(Error::invalid("default timing needs g > 0 on both arms (Γ_slow = 0)"));
        }
        let t = RoundTiming { t_wait: wait / slow, t_relax: relax / slow };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("t_wait", self.t_wait), ("t_relax", self.t_relax)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and > 0 (got {v})")));
            }
        }
        Ok(())
    }
}

/// What a pair of non-resolving detectors reports for one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DetectorReport {
    NoClick,
    Plus,
    Minus,
    Both,
}

impl DetectorReport {
    pub const ALL: [DetectorReport; 4] =
        [DetectorReport::NoClick, DetectorReport::Plus, DetectorReport::Minus, DetectorReport::Both];

    pub fn from_flags(plus: bool, minus: bool) -> Self {
        match (plus, minus) {
            (false, false) => DetectorReport::NoClick,
            (true, false) => DetectorReport::Plus,
            (false, true) => DetectorReport::Minus,
            (true, true) => DetectorReport::Both,
        }
    }

    pub fn flags(self) -> (bool, bool) {
        match self {
            DetectorReport::NoClick => (false, false),
            DetectorReport::Plus => (true, false),
            DetectorReport::Minus => (false, true),
            DetectorReport::Both => (true, true),
        }
    }

    pub fn union(self, other: DetectorReport) -> DetectorReport {
        let (a, b) = self.flags();
        let (c, d) = other.flags();
        DetectorReport::from_flags(a || c, b || d)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// The single detector that fired, if exactly one did.
    pub fn single(self) -> Option<Detector> {
        match self {
            DetectorReport::Plus => Some(Detector::Plus),
            DetectorReport::Minus => Some(Detector::Minus),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Detector {
    Plus,
    Minus,
}

impl Detector {
    pub fn channel(self) -> Channel {
        match self {
            Detector::Plus => Channel::DetectPlus,
            Detector::Minus => Channel::DetectMinus,
        }
    }
}

/// Dark-count sets for one round with their probabilities, given a
/// per-detector click probability `q`. Zero-weight sets are omitted.
pub fn dark_patterns(q: f64) -> Vec<(DetectorReport, f64)> {
    DetectorReport::ALL
        .into_iter()
        .map(|d| {
            let (p, m) = d.flags();
            let w = |on: bool| if on { q } else { 1.0 - q };
            (d, w(p) * w(m))
        })
        .filter(|&(_, w)| w > 0.0)
        .collect()
}

/// One measurement branch of a round.
#[derive(Clone, Debug)]
pub struct Branch {
    /// Detectors fired by photons.
    pub physical: DetectorReport,
    /// Detectors reported, photons and dark counts merged.
    pub report: DetectorReport,
    pub probability: f64,
    /// Normalized state at `t_wait + t_relax`, cavities included.
    pub state: DensityMatrix,
}

/// Unnormalized post-round states for each physical click class, after the
/// relaxation period, on the full space.
#[derive(Clone, Debug)]
pub struct RoundClasses {
    pub classes: [DensityMatrix; 4],
    /// Largest population seen on cutoff photon number (`p = n_max`).
    pub cutoff_weight: f64,
    /// Largest population seen on states whose couplings the cutoff drops.
    pub leak_weight: f64,
}

impl RoundClasses {
    pub fn class(&self, report: DetectorReport) -> &DensityMatrix {
        &self.classes[report.index()]
    }
}

/// Lindblad generator restricted to the subspace reachable from a seed set.
#[derive(Clone, Debug)]
struct Liouvillian {
    dim: usize,
    active: Vec<usize>,
    h: DMatrix<C64>,
    jumps: Vec<(Channel, DMatrix<C64>)>,
}

impl Liouvillian {
    fn new(h: &Operator, channels: &[JumpChannel], seeds: impl IntoIterator<Item = usize>) -> Self {
        let dim = h.dim();
        let ops: Vec<&DMatrix<C64>> =
            std::iter::once(h.matrix()).chain(channels.iter().map(|c| c.operator.matrix())).collect();
        let mut seen = vec![false; dim];
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(j) = stack.pop() {
            if std::mem::replace(&mut seen[j], true) {
                continue;
            }
            for m in &ops {
                for i in 0..dim {
                    if !seen[i] && m[(i, j)] != C64::new(0.0, 0.0) {
                        stack.push(i);
                    }
                }
            }
        }
        let active: Vec<usize> = (0..dim).filter(|&i| seen[i]).collect();
        let restrict = |m: &DMatrix<C64>| DMatrix::from_fn(active.len(), active.len(), |a, b| m[(active[a], active[b])]);
        Liouvillian {
            dim,
            h: restrict(h.matrix()),
            jumps: channels.iter().filter(|c| !c.is_zero()).map(|c| (c.channel, restrict(c.operator.matrix()))).collect(),
            active,
        }
    }

    /// Column-major vectorization: `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.
    fn generator(&self, suppressed: &[Channel]) -> DMatrix<C64> {
        let n = self.active.len();
        let id = DMatrix::<C64>::identity(n, n);
        let mut s = id.kronecker(&self.h) * (-IM) + self.h.conjugate().kronecker(&id) * IM;
        for (ch, l) in &self.jumps {
            if !suppressed.contains(ch) {
                s += l.conjugate().kronecker(l);
            }
        }
        s
    }

    fn vectorize(&self, rho: &DensityMatrix) -> Result<DVector<C64>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: rho.dim() });
        }
        let m = rho.matrix();
        let inside: f64 = self.active.iter().map(|&i| m[(i, i)].re).sum();
        let outside = rho.trace() - inside;
        if outside.abs() > 1e-12 * rho.trace().abs().max(1.0) {
            return Err(Error::invalid("state has support outside the subspace this engine was built for"));
        }
        let n = self.active.len();
        Ok(DVector::from_fn(n * n, |k, _| m[(self.active[k % n], self.active[k / n])]))
    }

    fn unvectorize(&self, v: &DVector<C64>) -> DensityMatrix {
        let n = self.active.len();
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for b in 0..n {
            for a in 0..n {
                out[(self.active[a], self.active[b])] = v[a + n * b];
            }
        }
        DensityMatrix::new(out)
    }

    fn population(&self, v: &DVector<C64>, positions: &[usize]) -> f64 {
        let n = self.active.len();
        positions.iter().map(|&a| v[a + n * a].re).sum()
    }
}

/// Precomputed propagators for one detection round; reusable for any input
/// supported on the reachable subspace (by default, every matter state with
/// both cavities in vacuum).
#[derive(Clone, Debug)]
pub struct RoundEngine {
    space: FockSpace,
    timing: RoundTiming,
    detectors: DetectorModel,
    liouvillian: Liouvillian,
    /// Window propagators with no detector, `+`, `-`, both detectors suppressed.
    windows: [BlockExp; 4],
    relax: BlockExp,
    midpoint: Option<BlockExp>,
    leak_positions: Vec<usize>,
    cutoff_positions: Vec<usize>,
}

impl RoundEngine {
    pub fn new(space: &FockSpace, params: &SystemParams, detectors: &DetectorModel, timing: &RoundTiming) -> Result<Self> {
        let seeds: Vec<usize> = (0..space.dim())
            .filter(|&i| {
                let l = space.label(i);
                l.p_a == 0 && l.p_b == 0
            })
            .collect();
        Self::with_seeds(space, params, detectors, timing, seeds)
    }

    pub fn with_seeds(
        space: &FockSpace,
        params: &SystemParams,
        detectors: &DetectorModel,
        timing: &RoundTiming,
        seeds: Vec<usize>,
    ) -> Result<Self> {
        params.validate()?;
        detectors.validate()?;
        timing.validate()?;
        let h = effective_hamiltonian(space, params);
        let channels = jump_channels(space, params, detectors);
        let liouvillian = Liouvillian::new(&h, &channels, seeds);
        let (plus, minus) = (Channel::DetectPlus, Channel::DetectMinus);
        let window = |suppressed: &[Channel]| BlockExp::new(&liouvillian.generator(suppressed), timing.t_wait);
        let windows = [window(&[]), window(&[plus]), window(&[minus]), window(&[plus, minus])];
        let full = liouvillian.generator(&[]);
        let relax = BlockExp::new(&full, timing.t_relax);
        let n_max = space.n_max();
        let positions = |pred: &dyn Fn(Level, usize) -> bool| -> Vec<usize> {
            liouvillian
                .active
                .iter()
                .enumerate()
                .filter(|(_, &i)| {
                    let l = space.label(i);
                    pred(l.q_a, l.p_a) || pred(l.q_b, l.p_b)
                })
                .map(|(a, _)| a)
                .collect()
        };
        let leak_positions = positions(&|q, p| q == Level::Excited && p == n_max);
        let cutoff_positions = positions(&|_, p| p == n_max);
        let midpoint = (!leak_positions.is_empty()).then(|| BlockExp::new(&full, timing.t_wait / 2.0));
        Ok(RoundEngine {
            space: space.clone(),
            timing: *timing,
            detectors: *detectors,
            liouvillian,
            windows,
            relax,
            midpoint,
            leak_positions,
            cutoff_positions,
        })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn timing(&self) -> RoundTiming {
        self.timing
    }

    pub fn detectors(&self) -> DetectorModel {
        self.detectors
    }

    /// Size of the reachable subspace the propagators act on.
    pub fn active_dim(&self) -> usize {
        self.liouvillian.active.len()
    }

    /// Per-detector dark-click probability for one window.
    pub fn dark_click_probability(&self) -> f64 {
        self.detectors.dark_click_probability(self.timing.t_wait)
    }

    /// Physical click classes of one round starting from `rho`.
    pub fn propagate(&self, rho: &DensityMatrix) -> Result<RoundClasses> {
        let l = &self.liouvillian;
        let v = l.vectorize(rho)?;
        let phi: Vec<DVector<C64>> = self.windows.iter().map(|w| w.apply(&v)).collect();
        let (all, no_plus, no_minus, none) = (&phi[0], &phi[1], &phi[2], &phi[3]);
        let windowed = [none.clone(), no_minus - none, no_plus - none, all - no_plus - no_minus + none];

        let mut leak = 0.0f64;
        let mut cutoff = l.population(all, &self.cutoff_positions);
        if let Some(mid) = &self.midpoint {
            let m = mid.apply(&v);
            leak = leak.max(l.population(&m, &self.leak_positions)).max(l.population(all, &self.leak_positions));
            cutoff = cutoff.max(l.population(&m, &self.cutoff_positions));
        }
        let relaxed: Vec<DVector<C64>> = windowed.iter().map(|w| self.relax.apply(w)).collect();
        if !self.leak_positions.is_empty() {
            let total = relaxed.iter().fold(DVector::zeros(v.len()), |acc, r| acc + r);
            leak = leak.max(l.population(&total, &self.leak_positions));
        }
        let tolerance = self.space.config().leak_tolerance;
        if leak > tolerance {
            return Err(Error::TruncationBreach { weight: leak, tolerance });
        }
        let classes = [0, 1, 2, 3].map(|k| l.unvectorize(&relaxed[k]).hermitian_part());
        Ok(RoundClasses { classes, cutoff_weight: cutoff, leak_weight: leak })
    }

    /// Branches of one round from `rho`, with dark counts merged into the
    /// reports. Branches with probability below `1e-14` are dropped.
    pub fn enumerate(&self, rho: &DensityMatrix) -> Result<Vec<Branch>> {
        let classes = self.propagate(rho)?;
        let q = self.dark_click_probability();
        let mut out = Vec::new();
        for physical in DetectorReport::ALL {
            let rho_s = classes.class(physical);
            for (dark, w) in dark_patterns(q) {
                let p = rho_s.trace() * w;
                if p > 1e-14 {
                    out.push(Branch {
                        physical,
                        report: physical.union(dark),
                        probability: p,
                        state: rho_s.normalized()?,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Exhaustive branch enumeration of one detection round from a pure state.
pub fn enumerate_round(
    space: &FockSpace,
    initial: &PureState,
    params: &SystemParams,
    detectors: &DetectorModel,
    timing: &RoundTiming,
) -> Result<Vec<Branch>> {
    if !initial.is_normalized() {
        return Err(Error::invalid("enumerate_round needs a normalized initial state"));
    }
    let seeds: Vec<usize> = (0..initial.dim()).filter(|&i| initial.amplitudes()[i].norm_sqr() > 0.0).collect();
    let engine = RoundEngine::with_seeds(space, params, detectors, timing, seeds)?;
    engine.enumerate(&initial.density())
}

/// State conditioned on the first detector click landing at `t1` in
/// `detector`, followed by unmonitored evolution for `t_after`.
///
/// Returns the click-time probability density at `t1` and the normalized
/// two-emitter state (cavities traced out, basis `q_A * 3 + q_B`).
pub fn click_conditioned_state(
    space: &FockSpace,
    initial: &PureState,
    params: &SystemParams,
    detectors: &DetectorModel,
    t1: f64,
    detector: Detector,
    t_after: f64,
) -> Result<(f64, DensityMatrix)> {
    params.validate()?;
    detectors.validate()?;
    let h = effective_hamiltonian(space, params);
    let channels = jump_channels(space, params, detectors);
    let seeds: Vec<usize> = (0..initial.dim()).filter(|&i| initial.amplitudes()[i].norm_sqr() > 0.0).collect();
    let l = Liouvillian::new(&h, &channels, seeds);
    let detect = [Channel::DetectPlus, Channel::DetectMinus];
    let before = BlockExp::new(&l.generator(&detect), t1).apply(&l.vectorize(&initial.density())?);
    let rho_t1 = l.unvectorize(&before);
    let jump = channels.iter().find(|c| c.channel == detector.channel()).expect("detector channel");
    let clicked = jump.operator.conjugate(&rho_t1)?;
    let density = clicked.trace();
    let after = BlockExp::new(&l.generator(&[]), t_after).apply(&l.vectorize(&clicked)?);
    let matter = space.trace_cavities(&l.unvectorize(&after));
    Ok((density, matter.normalized()?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickEvent {
    pub time: f64,
    pub channel: Channel,
    pub dark: bool,
}

/// Detector events of one round in time order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub events: Vec<ClickEvent>,
}

impl ClickRecord {
    fn report_of(&self, include_dark: bool) -> DetectorReport {
        let fired = |ch| self.events.iter().any(|e| e.channel == ch && (include_dark || !e.dark));
        DetectorReport::from_flags(fired(Channel::DetectPlus), fired(Channel::DetectMinus))
    }

    /// What non-resolving detectors report.
    pub fn reported(&self) -> DetectorReport {
        self.report_of(true)
    }

    /// Detectors fired by photons alone.
    pub fn physical(&self) -> DetectorReport {
        self.report_of(false)
    }
}

/// Jump unraveling of the round dynamics.
#[derive(Clone, Debug)]
pub struct TrajectorySampler {
    space: FockSpace,
    params: SystemParams,
    detectors: DetectorModel,
    timing: RoundTiming,
    channels: Vec<JumpChannel>,
    decay: Operator,
}

impl TrajectorySampler {
    pub fn new(space: &FockSpace, params: &SystemParams, detectors: &DetectorModel, timing: &RoundTiming) -> Result<Self> {
        params.validate()?;
        detectors.validate()?;
        timing.validate()?;
        let all = jump_channels(space, params, detectors);
        let decay = decay_operator(&all);
        Ok(TrajectorySampler {
            space: space.clone(),
            params: *params,
            detectors: *detectors,
            timing: *timing,
            channels: all.into_iter().filter(|c| !c.is_zero()).collect(),
            decay,
        })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn timing(&self) -> RoundTiming {
        self.timing
    }

    fn propagate(&self, psi: &PureState, t: f64) -> PureState {
        NoJumpPropagator::new(&self.space, &self.params, t).apply(psi)
    }

    /// Solves `‖exp(-i H t)ψ‖² = target` on `(0, horizon)` by Newton steps on
    /// the log-norm, kept inside a shrinking bisection bracket.
    fn jump_time(&self, psi: &PureState, target: f64, horizon: f64) -> (f64, PureState) {
        let (mut lo, mut hi) = (0.0, horizon);
        let rate0 = self.mean_decay(psi) / psi.norm_sqr();
        let mut t = if rate0 > 0.0 { (-target.ln() / rate0).clamp(0.0, horizon) } else { 0.5 * horizon };
        for _ in 0..200 {
            let phi = self.propagate(psi, t);
            let n = phi.norm_sqr();
            let f = n.ln() - target.ln();
            if f > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            if f.abs() < 1e-13 || hi - lo <= 1e-14 * horizon {
                return (t, phi);
            }
            let rate = self.mean_decay(&phi) / n;
            let newton = t + f / rate;
            t = if rate > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        (t, self.propagate(psi, t))
    }

    fn mean_decay(&self, psi: &PureState) -> f64 {
        let v = psi.amplitudes();
        v.dotc(&(self.decay.matrix() * v)).re
    }

    fn evolve_interval<R: Rng + ?Sized>(
        &self,
        psi: &mut PureState,
        start: f64,
        end: f64,
        mut record: Option<&mut ClickRecord>,
        rng: &mut R,
    ) -> Result<()> {
        let mut t = start;
        loop {
            let r = rng::open01(rng);
            let horizon = end - t;
            let at_end = self.propagate(psi, horizon);
            if at_end.norm_sqr() >= r {
                *psi = at_end.normalized()?;
                return Ok(());
            }
            let (tau, phi) = self.jump_time(psi, r, horizon);
            let weights: Vec<f64> = self.channels.iter().map(|c| c.operator.apply(&phi).map(|x| x.norm_sqr())).collect::<Result<_>>()?;
            let total: f64 = weights.iter().sum();
            if !(total > 0.0) {
                return Err(Error::ZeroNorm);
            }
            let mut u = rng.random::<f64>() * total;
            let mut pick = weights.len() - 1;
            for (k, w) in weights.iter().enumerate() {
                if u < *w {
                    pick = k;
                    break;
                }
                u -= w;
            }
            let ch = &self.channels[pick];
            *psi = ch.operator.apply(&phi)?.normalized()?;
            t = (t + tau).min(end);
            if ch.channel.is_detector() {
                if let Some(rec) = record.as_deref_mut() {
                    rec.events.push(ClickEvent { time: t, channel: ch.channel, dark: false });
                }
            }
        }
    }

    /// One detection window followed by the relaxation period. Photon
    /// clicks and dark counts during the window are recorded; jumps during
    /// relaxation are unravelled but not recorded.
    pub fn run_round<R: Rng + ?Sized>(&self, initial: &PureState, rng: &mut R) -> Result<(ClickRecord, PureState)> {
        if initial.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), found: initial.dim() });
        }
        let mut psi = initial.normalized()?;
        let mut record = ClickRecord::default();
        let RoundTiming { t_wait, t_relax } = self.timing;
        self.evolve_interval(&mut psi, 0.0, t_wait, Some(&mut record), rng)?;
        self.evolve_interval(&mut psi, t_wait, t_wait + t_relax, None, rng)?;
        let rate = self.detectors.dark_rate;
        if rate > 0.0 {
            for channel in [Channel::DetectPlus, Channel::DetectMinus] {
                let mut t = 0.0;
                loop {
                    t += -rng::open01(rng).ln() / rate;
                    if t > t_wait {
                        break;
                    }
                    record.events.push(ClickEvent { time: t, channel, dark: true });
                }
            }
        }
        record.events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok((record, psi))
    }

    /// Projects both cavities onto a photon-number configuration drawn by
    /// the Born rule and moves the conditional emitter state to vacuum.
    pub fn reset_cavities<R: Rng + ?Sized>(&self, psi: &PureState, rng: &mut R) -> Result<PureState> {
        let s = &self.space;
        let levels = s.photon_levels();
        let mut weights = vec![0.0; levels * levels];
        for (i, l) in s.labels().enumerate() {
            weights[l.p_a * levels + l.p_b] += psi.amplitudes()[i].norm_sqr();
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = 0;
        for (k, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                pick = k;
                if u < *w {
                    break;
                }
                u -= w;
            }
        }
        let (pa, pb) = (pick / levels, pick % levels);
        let mut out = DVector::zeros(s.dim());
        for (i, l) in s.labels().enumerate() {
            if l.p_a == pa && l.p_b == pb {
                let j = s.index(&crate::fockspace::BasisLabel::new(l.q_a, 0, l.q_b, 0))?;
                out[j] = psi.amplitudes()[i];
            }
        }
        PureState::new(out).normalized()
    }
}

/// One seeded trajectory of a single round (window plus relaxation).
pub fn sample_trajectory(
    space: &FockSpace,
    initial: &PureState,
    params: &SystemParams,
    detectors: &DetectorModel,
    timing: &RoundTiming,
    seed: u64,
) -> Result<(ClickRecord, PureState)> {
    let sampler = TrajectorySampler::new(space, params, detectors, timing)?;
    sampler.run_round(initial, &mut rng::stream(seed, 0))
}
