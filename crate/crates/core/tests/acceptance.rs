//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p heralded --test acceptance -- --nocapture` (the output is
//! printed either way since this target has no harness).

mod common;

use std::time::Instant;

use heralded::analytic::{
    self, alpha, beta, chain_cost_no_recycling, chain_cost_printed_closed_form, decay_rates, JoinStrategy, NvPreset,
};
use heralded::fockspace::{BasisLabel, FockSpace, Level, SpaceConfig};
use heralded::growth::{empirical_join_length, simulate_join_growth, GrowthStrategy};
use heralded::protocol::{run_eo_exact, sample_eo_statistics, Outcome, ProtocolConfig};
use heralded::trajectories::{no_jump_propagate, DetectorModel, NoJumpPropagator, SystemParams};
use heralded::C64;
use proptest::test_runner::{Config, TestRunner};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ideal_eo() -> Check {
    let start = Instant::now();
    let s = run_eo_exact(&ProtocolConfig::default()).map_err(err)?;
    let elapsed = start.elapsed().as_secs_f64();
    let p = s.success_probability();
    let patterns: Vec<f64> = Outcome::PATTERNS.iter().map(|&(a, b)| s.pattern_probability(a, b)).collect();
    let f = s.worst_fidelity().unwrap_or(0.0);
    let ok = (p - 0.5).abs() <= 1e-6
        && patterns.iter().all(|q| (q - 0.125).abs() <= 1e-6)
        && f >= 1.0 - 1e-9
        && elapsed < 5.0;
    ensure(ok, format!("p = {p:.9}, patterns = {patterns:.9?}, 1-F = {:.1e}, {elapsed:.2} s", 1.0 - f))
}

fn loss_robustness() -> Check {
    let etas = [0.5, 0.7, 0.85, 1.0];
    let base = SystemParams::default();
    let slow = base.slowest_decay();
    let mut worst_f: f64 = 1.0;
    let mut worst_dev: f64 = 0.0;
    let mut monotone = true;
    for eta in etas {
        let mut prev = f64::INFINITY;
        for frac in [0.0, 0.1, 0.2] {
            let params = SystemParams::symmetric(base.g_a, base.kappa_a, frac * slow);
            let run = |eta| run_eo_exact(&ProtocolConfig::new(params, DetectorModel::with_eta(eta)));
            let s = run(eta).map_err(err)?;
            let p_cav = (2.0 * run(1.0).map_err(err)?.success_probability()).sqrt();
            let p = s.success_probability();
            worst_f = worst_f.min(s.worst_fidelity().unwrap_or(0.0));
            worst_dev = worst_dev.max((p - eta * eta / 2.0 * p_cav * p_cav).abs());
            monotone &= p < prev;
            prev = p;
        }
    }
    ensure(
        1.0 - worst_f <= 1e-9 && worst_dev <= 1e-4 && monotone,
        format!("worst 1-F = {:.1e}, max |p - eta^2 p_cav^2/2| = {worst_dev:.1e}, decreasing in gamma: {monotone}", 1.0 - worst_f),
    )
}

fn mismatch_robustness() -> Check {
    let base = SystemParams::default();
    let kappa = SystemParams { kappa_a: 1.05 * base.kappa_b, ..base };
    let g = SystemParams { g_a: 1.05 * base.g_b, ..base };
    let infidelity = |params| -> Result<f64, String> {
        let s = run_eo_exact(&ProtocolConfig::new(params, DetectorModel::default())).map_err(err)?;
        Ok(1.0 - s.fidelity().unwrap_or(0.0))
    };
    let (ik, ig) = (infidelity(kappa)?, infidelity(g)?);
    // Largest g ratio that still meets the bound, for the record.
    let (mut lo, mut hi) = (1.0, 1.05);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if infidelity(SystemParams { g_a: mid * base.g_b, ..base })? < 1e-3 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ensure(
        ik < 1e-3 && ig < 1e-3,
        format!(
            "1-F = {ik:.2e} (kappa 5%), {ig:.2e} (g 5%); g bound holds up to g1/g2 = {lo:.4}; \
             the g value agrees with the photon wave-packet overlap oracle (tests/mismatch_oracle.rs)"
        ),
    )
}

/// Eigenvalues of a 2 × 2 complex matrix.
fn eig2(m: [[C64; 2]; 2]) -> [C64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - det * 4.0).sqrt();
    [(tr + disc) / 2.0, (tr - disc) / 2.0]
}

fn closed_forms() -> Check {
    let s = FockSpace::new(SpaceConfig::default()).map_err(err)?;
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    let psi0 = s.product_vacuum_state([h, z, h], [h, z, h]);
    let idx = |q, n| s.index(&BasisLabel::new(q, n, Level::Up, 0)).unwrap();
    let (e0, d1) = (idx(Level::Excited, 0), idx(Level::Down, 1));
    let mut worst: f64 = 0.0;
    for (g, kappa) in [(0.3, 1.0), (0.5, 1.0), (0.9, 1.0)] {
        let params = SystemParams::symmetric(g, kappa, 0.0);
        let rates = decay_rates(g, kappa).map_err(err)?;
        let t_end = 10.0 / rates.gamma_slow;
        for k in 0..=50 {
            let t = t_end * k as f64 / 50.0;
            let psi = no_jump_propagate(&s, &psi0, &params, t).map_err(err)?;
            let a = alpha(t, g, kappa).map_err(err)?;
            let b = beta(t, g, kappa).map_err(err)?;
            worst = worst.max((psi.amplitudes()[d1] - a).norm());
            worst = worst.max((psi.amplitudes()[e0] - C64::new(b / 2.0, 0.0)).norm());
        }
        // Rates from the eigenvalues of the propagated one-excitation block.
        let t = 1.0;
        let u = NoJumpPropagator::new(&s, &params, t).to_operator();
        let m = u.matrix();
        let block = [[m[(e0, e0)], m[(e0, d1)]], [m[(d1, e0)], m[(d1, d1)]]];
        let mut found: Vec<f64> = eig2(block).iter().map(|mu| -2.0 * mu.norm().ln() / t).collect();
        found.sort_by(f64::total_cmp);
        worst = worst.max((found[0] - rates.gamma_slow).abs()).max((found[1] - rates.gamma_fast).abs());
    }
    ensure(worst <= 1e-8, format!("max deviation {worst:.1e} over 3 (g, kappa) pairs"))
}

fn mc_consistency() -> Check {
    let params = SystemParams { kappa_a: 1.05, ..SystemParams::symmetric(0.3, 1.0, 0.1 * SystemParams::default().slowest_decay()) };
    let timing = heralded::trajectories::RoundTiming::default_for(&params).map_err(err)?;
    let detectors = DetectorModel { eta: 0.85, dark_rate: 0.02 / timing.t_wait, resolves_photon_number: false };
    let config = ProtocolConfig::new(params, detectors);
    let exact = run_eo_exact(&config).map_err(err)?;
    let trials = 100_000u64;
    let start = Instant::now();
    let sampled = sample_eo_statistics(&config, 2024, trials).map_err(err)?;
    let elapsed = start.elapsed().as_secs_f64();
    let again = sample_eo_statistics(&config, 2024, trials).map_err(err)?;
    let n = trials as f64;
    let mut worst: f64 = 0.0;
    let mut seen = 0u64;
    for r in &exact.outcomes {
        let p = r.probability.unwrap_or(0.0);
        let count = sampled.count(r.outcome) as f64;
        seen += sampled.count(r.outcome);
        let sigma = (n * p * (1.0 - p)).sqrt();
        let z = if sigma > 0.0 { (count - n * p).abs() / sigma } else if count == 0.0 { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
    }
    let reproducible = sampled.counts == again.counts && sampled.mean_fidelity == again.mean_fidelity;
    ensure(
        worst <= 3.0 && seen == trials && reproducible,
        format!(
            "{} classes, worst deviation {worst:.2} sigma, reproducible: {reproducible}, {elapsed:.1} s",
            exact.outcomes.len()
        ),
    )
}

fn cluster_correctness() -> Check {
    let mut runner = TestRunner::new(Config { cases: 256, failure_persistence: None, ..Config::default() });
    let worst_random = std::cell::Cell::new(1.0f64);
    let result = runner.run(&common::strategies::sequence(), |(start, steps)| {
        let w = common::check_sequence(start, &steps);
        worst_random.set(worst_random.get().min(w));
        proptest::prop_assert!(w >= 1.0 - common::TOLERANCE);
        Ok(())
    });
    let (leaves, worst_all) = common::exhaustive(&[1, 2, 3], 3);
    ensure(
        result.is_ok() && worst_all >= 1.0 - common::TOLERANCE,
        format!(
            "256 random sequences (worst overlap 1-{:.1e}), {leaves} exhaustive branch paths (worst 1-{:.1e}){}",
            1.0 - worst_random.get(),
            1.0 - worst_all,
            result.err().map(|e| format!(", {e}")).unwrap_or_default()
        ),
    )
}

fn cost_reproduction() -> Check {
    let (p4, p5) = (0.85f64.powi(2) / 2.0, 0.70f64.powi(2) / 2.0);
    let c4 = analytic::cost_per_qubit(JoinStrategy::C4, p4).map_err(err)?;
    let c5 = analytic::cost_per_qubit(JoinStrategy::C5, p5).map_err(err)?;
    // 10^5 joins give a relative standard error of ~1.4% (C4) and ~3% (C5),
    // too coarse to resolve a 2% band, so the band is checked at 10^7.
    let joins = 10_000_000;
    let s4 = simulate_join_growth(&GrowthStrategy::from_join_strategy(JoinStrategy::C4), p4, joins, 4).map_err(err)?;
    let s5 = simulate_join_growth(&GrowthStrategy::from_join_strategy(JoinStrategy::C5), p5, joins, 5).map_err(err)?;
    let small4 = simulate_join_growth(&GrowthStrategy::from_join_strategy(JoinStrategy::C4), p4, 100_000, 4).map_err(err)?;
    let small5 = simulate_join_growth(&GrowthStrategy::from_join_strategy(JoinStrategy::C5), p5, 100_000, 5).map_err(err)?;
    let rel = |x: f64, y: f64| (x - y).abs() / y;
    let ok = (c4 - 73.4).abs() <= 0.1
        && (c5 - 775.0).abs() <= 1.0
        && rel(s4.cost.mean, c4) <= 0.02
        && rel(s5.cost.mean, c5) <= 0.02;
    ensure(
        ok,
        format!(
            "C4 = {c4:.2}, C5 = {c5:.1}; 1e7 joins: {:.2} +- {:.2}, {:.1} +- {:.1}; 1e5 joins: {:.1} +- {:.1}, {:.0} +- {:.0}",
            s4.cost.mean, s4.cost.std_error, s5.cost.mean, s5.cost.std_error,
            small4.cost.mean, small4.cost.std_error, small5.cost.mean, small5.cost.std_error
        ),
    )
}

fn join_length_law() -> Check {
    let mut worst: f64 = 0.0;
    let mut seed = 100;
    for n in [10, 20] {
        for m in [3, 5] {
            for p in [0.3, 0.5, 0.8] {
                seed += 1;
                let r = empirical_join_length(n, m, p, 100_000, seed).map_err(err)?;
                worst = worst.max(r.length.sigmas_from(r.predicted));
            }
        }
    }
    ensure(worst <= 3.0, format!("12 (N, m, p) points, worst deviation {worst:.2} sigma"))
}

fn error_budget() -> Check {
    let b = NvPreset::default().budget().map_err(err)?;
    ensure(
        (1.5e-4..=6e-4).contains(&b.epsilon) && (1e-7..=1e-6).contains(&b.p_dc),
        format!("epsilon = {:.3e}, p_dc = {:.3e}", b.epsilon, b.p_dc),
    )
}

fn chain_cost_forms() -> Check {
    let p = 0.5;
    let printed: Vec<(usize, f64, f64)> = [2, 3]
        .iter()
        .map(|&m| (m, chain_cost_printed_closed_form(m, p), chain_cost_no_recycling(m, p).unwrap()))
        .collect();
    let differs = printed.iter().all(|(_, a, b)| (a - b).abs() > 0.5);
    let mut exact = true;
    for p in [0.5, 0.25, 0.125] {
        for m in 2..12 {
            let prev = chain_cost_no_recycling(m - 1, p).map_err(err)?;
            exact &= chain_cost_no_recycling(m, p).map_err(err)? == (prev + 1.0) / p;
        }
    }
    let mut close = true;
    for p in [0.245, 0.36125, 0.7] {
        for m in 2..12 {
            let prev = chain_cost_no_recycling(m - 1, p).map_err(err)?;
            let next = chain_cost_no_recycling(m, p).map_err(err)?;
            close &= (next - (prev + 1.0) / p).abs() <= 1e-12 * next;
        }
    }
    ensure(
        differs && exact && close,
        format!(
            "printed vs sum at p = 1/2: m=2 {:.0} vs {:.0}, m=3 {:.0} vs {:.0}; recursion exact (dyadic p): {exact}, to 1e-12 otherwise: {close}",
            printed[0].1, printed[0].2, printed[1].1, printed[1].2
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("ideal EO", ideal_eo),
        ("loss robustness", loss_robustness),
        ("mismatch robustness", mismatch_robustness),
        ("closed-form oracle", closed_forms),
        ("MC consistency", mc_consistency),
        ("cluster correctness", cluster_correctness),
        ("cost reproduction", cost_reproduction),
        ("join-length law", join_length_law),
        ("error budget", error_budget),
        ("N_EO sum vs closed form", chain_cost_forms),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}: {name}: {detail}", i + 1);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
