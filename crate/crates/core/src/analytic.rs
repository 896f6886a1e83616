//! Closed forms: decay rates and envelopes of the damped emitter-cavity
//! problem, the relaxed post-click state, success probabilities, chain
//! growth costs and error-budget estimates.
//!
//! `alpha` and `beta` are the envelopes that appear in the conditional state
//! after a first click when both emitters start in `(|↑⟩ + |e⟩)/√2`:
//! `beta` is the surviving `|e⟩` amplitude of one excited emitter and
//! `alpha` is half its one-photon cavity amplitude.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::DensityMatrix;
use crate::trajectories::{DetectorModel, SystemParams};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealRates {
    pub gamma_fast: f64,
    pub gamma_slow: f64,
    pub critically_damped: bool,
}

/// `Γ_fast,slow = κ ± sqrt(κ² - g²)` for `κ >= g`.
pub fn decay_rates(g: f64, kappa: f64) -> Result<IdealRates> {
    if !(g >= 0.0) || !(kappa > 0.0) || !g.is_finite() || !kappa.is_finite() {
        return Err(Error::invalid(format!("decay rates need g >= 0 and kappa > 0 (got g = {g}, kappa = {kappa})")));
    }
    let critically_damped = (kappa - g).abs() <= 1e-12 * kappa;
    if g > kappa && !critically_damped {
        return Err(Error::DegenerateClosedForm { g, kappa });
    }
    let root = if critically_damped { 0.0 } else { (kappa * kappa - g * g).sqrt() };
    let gamma_fast = kappa + root;
    // g²/Γ_fast instead of κ - root keeps full precision for g << κ.
    let gamma_slow = if gamma_fast > 0.0 { g * g / gamma_fast } else { 0.0 };
    Ok(IdealRates { gamma_fast, gamma_slow, critically_damped })
}

fn strict(g: f64, kappa: f64) -> Result<(f64, IdealRates)> {
    let rates = decay_rates(g, kappa)?;
    if rates.critically_damped || g >= kappa {
        return Err(Error::DegenerateClosedForm { g, kappa });
    }
    Ok(((kappa * kappa - g * g).sqrt(), rates))
}

/// `α(t) = -i g/(4 sqrt(κ² - g²)) (exp(-Γ_slow t/2) - exp(-Γ_fast t/2))`.
pub fn alpha(t: f64, g: f64, kappa: f64) -> Result<C64> {
    let (root, r) = strict(g, kappa)?;
    let env = (-r.gamma_slow * t / 2.0).exp() - (-r.gamma_fast * t / 2.0).exp();
    Ok(C64::new(0.0, -g / (4.0 * root) * env))
}

/// `β(t) = ½(1 + κ/s) exp(-Γ_slow t/2) + ½(1 - κ/s) exp(-Γ_fast t/2)`, `s = sqrt(κ² - g²)`.
pub fn beta(t: f64, g: f64, kappa: f64) -> Result<f64> {
    let (root, r) = strict(g, kappa)?;
    let ratio = kappa / root;
    Ok(0.5 * (1.0 + ratio) * (-r.gamma_slow * t / 2.0).exp() + 0.5 * (1.0 - ratio) * (-r.gamma_fast * t / 2.0).exp())
}

/// `p = (η p_cav)² / 2`.
pub fn ideal_success_probability(eta: f64, p_cav: f64) -> Result<f64> {
    for (name, v) in [("eta", eta), ("p_cav", p_cav)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("{name} must lie in [0, 1] (got {v})")));
        }
    }
    Ok(0.5 * (eta * p_cav).powi(2))
}

/// Normalization of the relaxed round-1 state, `1 + |β|² + 4|α|²`.
///
/// The weights follow from the conditional state after the click: the
/// entangled part carries `|α|²`, the excited remainder `|αβ|²` and the
/// two-photon remainder `|2α²|²`.
pub fn relaxed_normalization(t1: f64, g: f64, kappa: f64) -> Result<f64> {
    let a = alpha(t1, g, kappa)?.norm_sqr();
    let b = beta(t1, g, kappa)?;
    Ok(1.0 + b * b + 4.0 * a)
}

/// `1 + |β|² + |α|²`, the normalization with the `4` dropped. Kept for
/// comparison only; the relaxed state uses [`relaxed_normalization`].
pub fn printed_normalization(t1: f64, g: f64, kappa: f64) -> Result<f64> {
    let a = alpha(t1, g, kappa)?.norm_sqr();
    let b = beta(t1, g, kappa)?;
    Ok(1.0 + b * b + a)
}

/// `|Ψ±⟩ = (|↓↑⟩ ± |↑↓⟩)/√2` in the two-qubit basis `|q_A q_B⟩` (`↑ = 0`).
pub fn bell_state(sign: i8) -> nalgebra::DVector<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = nalgebra::DVector::zeros(4);
    v[2] = C64::new(h, 0.0);
    v[1] = C64::new(if sign >= 0 { h } else { -h }, 0.0);
    v
}

/// `ρ = (1/N)|Ψ±⟩⟨Ψ±| + (1 - 1/N)|↓↓⟩⟨↓↓|` over two-qubit labels.
pub fn relaxed_round1_state(t1: f64, g: f64, kappa: f64, sign: i8) -> Result<DensityMatrix> {
    if !(t1 >= 0.0) {
        return Err(Error::invalid("t1 must be >= 0"));
    }
    let n = relaxed_normalization(t1, g, kappa)?;
    let psi = bell_state(sign);
    let mut rho = &psi * psi.adjoint() * C64::new(1.0 / n, 0.0);
    rho[(3, 3)] += C64::new(1.0 - 1.0 / n, 0.0);
    Ok(DensityMatrix::new(rho))
}

fn check_p(p: f64) -> Result<()> {
    if p == 0.0 {
        return Err(Error::Divergent("EO success probability is 0".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1] (got {p})")));
    }
    Ok(())
}

/// Expected EO count to grow an `m`-chain one qubit at a time, discarding
/// the chain on failure: `Σ_{i=1}^{m-1} p^{-i}`.
pub fn chain_cost_no_recycling(m: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    if m < 1 {
        return Err(Error::invalid("chain length must be >= 1"));
    }
    Ok((1..m).map(|i| p.powi(-(i as i32))).sum())
}

/// `p^{1-m}(1 - p^{m-2})/(1 - p)`, the closed form that often accompanies the
/// sum above. It equals the sum minus `1/p`, so it disagrees for every `m`
/// (at `m = 2` it gives 0). Exposed so the discrepancy can be shown.
pub fn chain_cost_printed_closed_form(m: usize, p: f64) -> f64 {
    let m = m as i32;
    p.powi(1 - m) * (1.0 - p.powi(m - 2)) / (1.0 - p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JoinStrategy {
    /// 4-chains grown one qubit at a time.
    C4,
    /// 5-chains made by joining two 3-chains.
    C5,
}

impl JoinStrategy {
    pub fn chain_length(self) -> usize {
        match self {
            JoinStrategy::C4 => 4,
            JoinStrategy::C5 => 5,
        }
    }

    /// Expected EO count to produce one short chain.
    pub fn chain_cost(self, p: f64) -> Result<f64> {
        check_p(p)?;
        Ok(match self {
            JoinStrategy::C4 => chain_cost_no_recycling(4, p)?,
            // Two 3-chains, p^-1 + p^-2 each, and one joining attempt; the
            // whole lot is discarded on a failed join, so the expected total
            // is p^-1 (2 p^-2 + 2 p^-1 + 1).
            JoinStrategy::C5 => (2.0 * chain_cost_no_recycling(3, p)? + 1.0) / p,
        })
    }
}

/// Expected EOs per qubit added to a long chain by repeatedly joining
/// short chains: `(chain cost + 1)/(p m - 1)`.
pub fn cost_per_qubit(strategy: JoinStrategy, p: f64) -> Result<f64> {
    check_p(p)?;
    let m = strategy.chain_length();
    let gain = p * m as f64 - 1.0;
    if gain <= 0.0 {
        return Err(Error::GrowthCondition { m, p });
    }
    Ok((strategy.chain_cost(p)? + 1.0) / gain)
}

/// Mean chain length after one join attempt: `p(N + m - 1) + (1 - p)(N - 1)`.
pub fn join_length(n: usize, m: usize, p: f64) -> f64 {
    p * (n + m - 1) as f64 + (1.0 - p) * (n as f64 - 1.0)
}

/// Smallest short-chain length with `p m > 1`.
pub fn min_chain_length(p: f64) -> Result<usize> {
    check_p(p)?;
    let mut m = (1.0 / p).floor() as usize;
    while p * m as f64 <= 1.0 {
        m += 1;
    }
    while m > 1 && p * (m - 1) as f64 > 1.0 {
        m -= 1;
    }
    Ok(m.max(2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimates {
    /// Clock time, `10/Γ_slow`.
    pub t_c: f64,
    pub t_d: f64,
    pub m: usize,
    /// Spin-decoherence error `(m/2) t_c / t_d`.
    pub epsilon: f64,
    /// Dark-count probability per window, `Γ_dc t_wait`.
    pub p_dc: f64,
}

/// Order-of-magnitude error estimates. All times share the unit of the rates.
pub fn error_budget(params: &SystemParams, detectors: &DetectorModel, t_d: f64, m: usize, t_wait: f64) -> Result<NoiseEstimates> {
    params.validate()?;
    detectors.validate()?;
    if !(t_d > 0.0) {
        return Err(Error::invalid("t_d must be > 0"));
    }
    if !(t_wait >= 0.0) {
        return Err(Error::invalid("t_wait must be >= 0"));
    }
    let slow = params.slowest_decay();
    if !(slow > 0.0) {
        return Err(Error::invalid("clock time needs Γ_slow > 0"));
    }
    let t_c = 10.0 / slow;
    let epsilon = if t_d.is_infinite() { 0.0 } else { m as f64 / 2.0 * t_c / t_d };
    let p_dc = (detectors.dark_rate * t_wait).min(1.0);
    Ok(NoiseEstimates { t_c, t_d, m, epsilon, p_dc })
}

/// Physical parameter set for NV centres in diamond, in nanoseconds:
/// `γ⁻¹ = 25 ns`, `g = 100 γ`, critically damped cavity `κ = g`,
/// `t_d = 32 μs`, chains of up to 8 qubits, `Γ_dc = 500 s⁻¹` and a
/// detection window of `3/Γ_slow`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvPreset {
    pub params: SystemParams,
    pub detectors: DetectorModel,
    pub t_d: f64,
    pub m: usize,
    pub t_wait: f64,
}

impl Default for NvPreset {
    fn default() -> Self {
        let gamma = 1.0 / 25.0;
        let g = 100.0 * gamma;
        let params = SystemParams::symmetric(g, g, gamma);
        NvPreset {
            params,
            detectors: DetectorModel { eta: 1.0, dark_rate: 500.0 * 1e-9, resolves_photon_number: false },
            t_d: 32_000.0,
            m: 8,
            t_wait: 3.0 / params.slowest_decay(),
        }
    }
}

impl NvPreset {
    pub fn budget(&self) -> Result<NoiseEstimates> {
        error_budget(&self.params, &self.detectors, self.t_d, self.m, self.t_wait)
    }
}

/// Embeds a two-qubit density matrix (basis `|q_A q_B⟩`) into the 9 × 9
/// two-emitter space (basis `q_A * 3 + q_B`).
pub fn qubits_to_matter(rho: &DensityMatrix) -> DensityMatrix {
    assert_eq!(rho.dim(), 4);
    let map = [0usize, 1, 3, 4];
    let mut out = DMatrix::zeros(9, 9);
    for i in 0..4 {
        for j in 0..4 {
            out[(map[i], map[j])] = rho.matrix()[(i, j)];
        }
    }
    DensityMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{qubit_block, FockSpace, Level, SpaceConfig};
    use crate::linalg::max_abs_diff;
    use crate::trajectories::{click_conditioned_state, no_jump_propagate, Detector};
    use proptest::prelude::*;

    #[test]
    fn rates_at_reference_point() {
        let r = decay_rates(0.3, 1.0).unwrap();
        assert!((r.gamma_fast - 1.95394).abs() < 5e-6);
        assert!((r.gamma_slow - 0.04606).abs() < 5e-6);
        assert!(!r.critically_damped);
        let c = decay_rates(1.0, 1.0).unwrap();
        assert!(c.critically_damped && c.gamma_fast == 1.0 && c.gamma_slow == 1.0);
        assert_eq!(decay_rates(0.0, 1.0).unwrap().gamma_slow, 0.0);
        assert!(matches!(decay_rates(1.2, 1.0), Err(Error::DegenerateClosedForm { .. })));
    }

    proptest! {
        #[test]
        fn rate_sum_and_product(kappa in 0.01..10.0f64, frac in 0.0..1.0f64) {
            let g = frac * kappa;
            let r = decay_rates(g, kappa).unwrap();
            prop_assert!(((r.gamma_fast + r.gamma_slow) - 2.0 * kappa).abs() <= 1e-12 * kappa);
            prop_assert!((r.gamma_fast * r.gamma_slow - g * g).abs() <= 1e-12 * kappa * kappa);
            prop_assert!(r.gamma_fast >= r.gamma_slow);
        }

        #[test]
        fn growth_cost_recursion(p in 0.05..1.0f64, m in 2usize..12) {
            let prev = chain_cost_no_recycling(m - 1, p).unwrap();
            let next = chain_cost_no_recycling(m, p).unwrap();
            prop_assert!((next - (prev + 1.0) / p).abs() <= 1e-12 * next);
        }
    }

    #[test]
    fn envelopes_initial_and_final() {
        assert_eq!(alpha(0.0, 0.3, 1.0).unwrap(), C64::new(0.0, 0.0));
        assert!((beta(0.0, 0.3, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(alpha(5e3, 0.3, 1.0).unwrap().norm() < 1e-30);
        assert!(beta(5e3, 0.3, 1.0).unwrap().abs() < 1e-30);
        assert!(alpha(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn envelopes_match_matrix_exponential() {
        // From (|↑⟩+|e⟩)(|↑⟩+|e⟩)/2: ⟨↓,1;↑,0|ψ(t)⟩ = α(t) and
        // ⟨e,0;↑,0|ψ(t)⟩ = β(t)/2 (γ = 0, no jumps).
        let s = FockSpace::new(SpaceConfig::default()).unwrap();
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let z = C64::new(0.0, 0.0);
        let psi0 = s.product_vacuum_state([h, z, h], [h, z, h]);
        let idx = |qa, pa| s.index(&crate::fockspace::BasisLabel::new(qa, pa, Level::Up, 0)).unwrap();
        for (g, kappa) in [(0.3, 1.0), (0.5, 1.0), (0.9, 1.0)] {
            let p = SystemParams::symmetric(g, kappa, 0.0);
            let t_end = 10.0 / decay_rates(g, kappa).unwrap().gamma_slow;
            for k in 0..=40 {
                let t = t_end * k as f64 / 40.0;
                let psi = no_jump_propagate(&s, &psi0, &p, t).unwrap();
                let a = alpha(t, g, kappa).unwrap();
                let b = beta(t, g, kappa).unwrap();
                assert!((psi.amplitudes()[idx(Level::Down, 1)] - a).norm() < 1e-8);
                assert!((psi.amplitudes()[idx(Level::Excited, 0)] - C64::new(b / 2.0, 0.0)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn relaxed_state_matches_click_conditioned_evolution() {
        let s = FockSpace::new(SpaceConfig::default()).unwrap();
        let (g, kappa) = (0.3, 1.0);
        let p = SystemParams::symmetric(g, kappa, 0.0);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let z = C64::new(0.0, 0.0);
        let psi0 = s.product_vacuum_state([h, z, h], [h, z, h]);
        let relax = 40.0 / decay_rates(g, kappa).unwrap().gamma_slow;
        for t1 in [0.2, 1.0, 5.0, 20.0] {
            for (det, sign) in [(Detector::Plus, 1), (Detector::Minus, -1)] {
                let (_, matter) =
                    click_conditioned_state(&s, &psi0, &p, &DetectorModel::default(), t1, det, relax).unwrap();
                let (qubits, outside) = qubit_block(&matter);
                assert!(outside.abs() < 1e-9);
                let expected = relaxed_round1_state(t1, g, kappa, sign).unwrap();
                assert!(max_abs_diff(qubits.matrix(), expected.matrix()) < 1e-6, "t1 = {t1}");
            }
        }
        // The version without the factor 4 is off by a visible amount at t1 = 1.
        let n_ok = relaxed_normalization(1.0, g, kappa).unwrap();
        let n_printed = printed_normalization(1.0, g, kappa).unwrap();
        assert!((1.0 / n_ok - 1.0 / n_printed).abs() > 1e-3);
    }

    #[test]
    fn unwanted_weight_is_largest_at_zero_delay() {
        let w = |t: f64| 1.0 - 1.0 / relaxed_normalization(t, 0.3, 1.0).unwrap();
        let w0 = w(0.0);
        for k in 1..200 {
            assert!(w(k as f64 * 0.5) <= w0);
        }
        assert!(w(2e3) < 1e-15);
    }

    #[test]
    fn success_probability_anchors() {
        assert_eq!(ideal_success_probability(1.0, 1.0).unwrap(), 0.5);
        assert!((ideal_success_probability(0.85, 1.0).unwrap() - 0.36125).abs() < 1e-15);
        assert_eq!(ideal_success_probability(0.0, 1.0).unwrap(), 0.0);
        assert!(ideal_success_probability(1.1, 1.0).is_err());
    }

    #[test]
    fn chain_cost_values() {
        assert_eq!(chain_cost_no_recycling(2, 0.5).unwrap(), 2.0);
        assert_eq!(chain_cost_no_recycling(4, 0.5).unwrap(), 14.0);
        assert!((chain_cost_no_recycling(4, 0.36125).unwrap() - 31.64).abs() < 0.005);
        assert!(matches!(chain_cost_no_recycling(4, 0.0), Err(Error::Divergent(_))));
    }

    #[test]
    fn printed_closed_form_is_off_by_one_over_p() {
        assert_eq!(chain_cost_printed_closed_form(2, 0.5), 0.0);
        assert!((chain_cost_printed_closed_form(3, 0.5) - 4.0).abs() < 1e-12);
        for m in 2..10 {
            for p in [0.2, 0.36125, 0.5, 0.9] {
                let gap = chain_cost_no_recycling(m, p).unwrap() - chain_cost_printed_closed_form(m, p);
                assert!((gap - 1.0 / p).abs() < 1e-9 * chain_cost_no_recycling(m, p).unwrap());
            }
        }
    }

    #[test]
    fn join_costs() {
        let c4 = cost_per_qubit(JoinStrategy::C4, 0.85f64.powi(2) / 2.0).unwrap();
        assert!((c4 - 73.4).abs() < 0.1, "{c4}");
        let c5 = cost_per_qubit(JoinStrategy::C5, 0.70f64.powi(2) / 2.0).unwrap();
        assert!((c5 - 775.0).abs() < 1.0, "{c5}");
        assert!((cost_per_qubit(JoinStrategy::C4, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let err = cost_per_qubit(JoinStrategy::C4, 0.24).unwrap_err();
        assert!(err.to_string().contains("should satisfy m > 1/p"));
        assert!(cost_per_qubit(JoinStrategy::C5, 0.24).is_ok());
        // Printed numerators, written out independently.
        for p in [0.3f64, 0.5, 0.9] {
            let c4 = (p.powi(-3) + p.powi(-2) + 1.0 / p + 1.0) / (4.0 * p - 1.0);
            let c5 = (2.0 * p.powi(-3) + 2.0 * p.powi(-2) + 1.0 / p + 1.0) / (5.0 * p - 1.0);
            assert!((cost_per_qubit(JoinStrategy::C4, p).unwrap() - c4).abs() < 1e-12 * c4);
            assert!((cost_per_qubit(JoinStrategy::C5, p).unwrap() - c5).abs() < 1e-12 * c5);
        }
    }

    #[test]
    fn threshold_lengths() {
        assert_eq!(min_chain_length(0.24).unwrap(), 5);
        assert_eq!(min_chain_length(0.26).unwrap(), 4);
        assert_eq!(min_chain_length(0.5).unwrap(), 3);
        assert_eq!(min_chain_length(0.25).unwrap(), 5);
        assert_eq!(min_chain_length(1.0).unwrap(), 2);
    }

    #[test]
    fn join_length_formula() {
        assert_eq!(join_length(10, 5, 0.5), 11.5);
        assert_eq!(join_length(10, 5, 1.0), 14.0);
        assert_eq!(join_length(10, 5, 0.0), 9.0);
    }

    #[test]
    fn nv_budget() {
        let b = NvPreset::default().budget().unwrap();
        assert!(b.epsilon > 1.5e-4 && b.epsilon < 6e-4, "{}", b.epsilon);
        assert!(b.p_dc > 1e-7 && b.p_dc < 1e-6, "{}", b.p_dc);
        let never = error_budget(&NvPreset::default().params, &DetectorModel::default(), f64::INFINITY, 8, 1.0).unwrap();
        assert_eq!(never.epsilon, 0.0);
    }
}
