//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each export returns a flat `Float64Array`; the page knows the layout.

use heralded::analytic::{cost_per_qubit, min_chain_length, JoinStrategy};
use heralded::growth::{simulate_join_growth, GrowthStrategy};
use heralded::protocol::{fidelity_sweep, ProtocolConfig, SweepAxis};
use heralded::trajectories::{DetectorModel, SystemParams};
use wasm_bindgen::prelude::*;

fn grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|k| from + (to - from) * k as f64 / (n - 1) as f64).collect()
}

fn base(g: f64, kappa: f64, gamma_over_slow: f64) -> Result<ProtocolConfig, String> {
    let mut params = SystemParams::symmetric(g, kappa, 0.0);
    let slow = params.slowest_decay();
    params.gamma_a = gamma_over_slow * slow;
    params.gamma_b = gamma_over_slow * slow;
    let config = ProtocolConfig::new(params, DetectorModel::default());
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

/// `[η_0, p_0, η_1, p_1, ...]` for `η` evenly spaced over `[0, 1]`.
pub fn success_curve(g: f64, kappa: f64, gamma_over_slow: f64, points: usize) -> Result<Vec<f64>, String> {
    let etas = grid(0.0, 1.0, points);
    let rows = fidelity_sweep(SweepAxis::Eta, &etas, &base(g, kappa, gamma_over_slow)?).map_err(|e| e.to_string())?;
    Ok(rows.iter().flat_map(|r| [r.x, r.p_success]).collect())
}

/// `[x_0, 1 - F_0, ...]` with `x` the arm-A/arm-B ratio of `κ` (`axis = "kappa"`) or `g`.
pub fn infidelity_curve(axis: &str, max_ratio: f64, points: usize) -> Result<Vec<f64>, String> {
    let axis = match axis {
        "kappa" => SweepAxis::KappaRatio,
        "g" => SweepAxis::GRatio,
        other => return Err(format!("unknown mismatch axis '{other}'")),
    };
    if !(max_ratio > 1.0 && max_ratio <= 2.0) {
        return Err(format!("max ratio must lie in (1, 2] (got {max_ratio})"));
    }
    let xs = grid(1.0, max_ratio, points);
    let rows = fidelity_sweep(axis, &xs, &base(0.3, 1.0, 0.0)?).map_err(|e| e.to_string())?;
    Ok(rows.iter().flat_map(|r| [r.x, 1.0 - r.fidelity.unwrap_or(0.0)]).collect())
}

/// `[min m, C4, C5, simulated cost, its standard error]` at EO success
/// probability `p`; unavailable entries are NaN. The simulation uses
/// `joins` join attempts of the cheaper strategy.
pub fn cost_summary(p: f64, joins: u32, seed: u32) -> Result<Vec<f64>, String> {
    let m = min_chain_length(p).map_err(|e| e.to_string())?;
    let c4 = cost_per_qubit(JoinStrategy::C4, p).unwrap_or(f64::NAN);
    let c5 = cost_per_qubit(JoinStrategy::C5, p).unwrap_or(f64::NAN);
    let pick = match (c4.is_nan(), c5.is_nan()) {
        (true, true) => None,
        (false, true) => Some(JoinStrategy::C4),
        (true, false) => Some(JoinStrategy::C5),
        _ => Some(if c4 <= c5 { JoinStrategy::C4 } else { JoinStrategy::C5 }),
    };
    let (mean, se) = match pick {
        Some(s) if joins > 0 => {
            let r = simulate_join_growth(&GrowthStrategy::from_join_strategy(s), p, joins.into(), seed.into())
                .map_err(|e| e.to_string())?;
            (r.cost.mean, r.cost.std_error)
        }
        _ => (f64::NAN, f64::NAN),
    };
    Ok(vec![m as f64, c4, c5, mean, se])
}

#[wasm_bindgen]
pub fn success_vs_eta(g: f64, kappa: f64, gamma_over_slow: f64, points: usize) -> Result<Vec<f64>, JsError> {
    success_curve(g, kappa, gamma_over_slow, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fidelity_vs_mismatch(axis: &str, max_ratio: f64, points: usize) -> Result<Vec<f64>, JsError> {
    infidelity_curve(axis, max_ratio, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn growth_costs(p: f64, joins: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    cost_summary(p, joins, seed).map_err(|e| JsError::new(&e))
}
