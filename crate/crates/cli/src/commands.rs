use heralded::analytic::{error_budget, JoinStrategy};
use heralded::growth::{
    physical_success_probability, simulate_join_growth, simulate_sequential, threshold_scan, ChainRecipe, CostReport,
    FailurePolicy, GrowthStrategy,
};
use heralded::protocol::{fidelity_sweep, run_eo_exact, sample_eo_statistics, Outcome, SweepAxis, SWEEP_COLUMNS};
use heralded::trajectories::{Detector, DetectorModel, SystemParams};
use serde_json::{json, Value};

use crate::args::{BudgetArgs, EoArgs, GrowArgs, PolicyArg, Preset, RecipeArg, SweepArgs, VerifyArgs};
use crate::output::{Meta, Report, Table};
use crate::units::{hz_to_per_ns, us_to_ns};
use crate::{verify, CliError};

/// Every outcome class, in table order.
pub fn all_outcomes() -> Vec<Outcome> {
    let pairs = [
        (Detector::Plus, Detector::Plus),
        (Detector::Plus, Detector::Minus),
        (Detector::Minus, Detector::Plus),
        (Detector::Minus, Detector::Minus),
    ];
    let mut out: Vec<Outcome> = pairs.iter().map(|&(first, second)| Outcome::Heralded { first, second }).collect();
    out.extend(pairs.iter().map(|&(first, second)| Outcome::DarkContaminated { first, second }));
    out.extend([Outcome::NoClickRound1, Outcome::TwoClicksRound1, Outcome::NoClickRound2, Outcome::TwoClicksRound2]);
    out
}

pub fn eo(a: &EoArgs) -> Result<(), CliError> {
    let config = a.physics.to_config()?;
    let scale = a.physics.scale()?;
    let timing = config.timing()?;
    let mut summary = vec![
        ("mode".to_string(), json!(if a.sampled { "sampled" } else { "exact" })),
        ("t_wait".to_string(), json!(scale.time_out(timing.t_wait))),
        ("t_relax".to_string(), json!(scale.time_out(timing.t_relax))),
    ];
    let report = if a.sampled {
        if a.trials == 0 {
            return Err(CliError::validation("--trials must be >= 1"));
        }
        let stats = sample_eo_statistics(&config, a.seed, a.trials)?;
        let mut table = Table::new(&["outcome", "success", "count", "frequency"]);
        for o in all_outcomes() {
            table.push(vec![json!(o.name()), json!(o.is_success()), json!(stats.count(o)), json!(stats.frequency(o))]);
        }
        summary.extend([
            ("trials".to_string(), json!(a.trials)),
            ("success_frequency".to_string(), json!(stats.successes() as f64 / a.trials as f64)),
            ("mean_fidelity".to_string(), json!(stats.mean_fidelity)),
            ("contaminated_fidelity".to_string(), json!(stats.contaminated_fidelity)),
        ]);
        Report { meta: Meta::new("eo", a, Some(a.seed)), summary, table, rows_key: "outcomes" }
    } else {
        let s = run_eo_exact(&config)?;
        let mut table = Table::new(&["outcome", "success", "probability", "fidelity"]);
        for o in all_outcomes() {
            let p = s.probability(o);
            let weighted: f64 = s
                .outcomes
                .iter()
                .filter(|r| r.outcome == o)
                .map(|r| r.probability.unwrap_or(0.0) * r.fidelity.unwrap_or(0.0))
                .sum();
            let fidelity = (o.sign().is_some() && p > 0.0).then(|| weighted / p);
            table.push(vec![json!(o.name()), json!(o.is_success()), json!(p), json!(fidelity)]);
        }
        summary.extend([
            ("p_success".to_string(), json!(s.success_probability())),
            ("fidelity".to_string(), json!(s.fidelity())),
            ("worst_fidelity".to_string(), json!(s.worst_fidelity())),
            ("total_probability".to_string(), json!(s.total_probability())),
            ("warnings".to_string(), json!(s.warnings)),
        ]);
        Report { meta: Meta::new("eo", a, None), summary, table, rows_key: "outcomes" }
    };
    report.emit(&a.output)
}

fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![from],
        n => (0..n).map(|k| from + (to - from) * k as f64 / (n - 1) as f64).collect(),
    }
}

impl Preset {
    fn axis(self) -> SweepAxis {
        match self {
            Preset::Fig2a => SweepAxis::Eta,
            Preset::Fig2bKappa => SweepAxis::KappaRatio,
            Preset::Fig2bG => SweepAxis::GRatio,
        }
    }

    fn grid(self) -> Vec<f64> {
        match self {
            Preset::Fig2a => linspace(0.0, 1.0, 21),
            Preset::Fig2bKappa | Preset::Fig2bG => linspace(1.0, 1.1, 21),
        }
    }

    /// Spontaneous emission values, as multiples of Γ_slow, one curve each.
    fn series(self) -> Vec<Option<f64>> {
        match self {
            Preset::Fig2a => vec![Some(0.0), Some(0.1), Some(0.2)],
            _ => vec![None],
        }
    }
}

pub fn sweep(a: &SweepArgs) -> Result<(), CliError> {
    let base = a.physics.to_config()?;
    let axis = match (a.preset, &a.axis) {
        (Some(p), _) => p.axis(),
        (None, Some(name)) => SweepAxis::parse(name)?,
        (None, None) => return Err(CliError::validation("sweep needs --preset or --axis")),
    };
    let grid = if !a.grid.is_empty() {
        a.grid.clone()
    } else if let (Some(from), Some(to), Some(points)) = (a.from, a.to, a.points) {
        linspace(from, to, points)
    } else if a.from.is_some() || a.to.is_some() || a.points.is_some() {
        return Err(CliError::validation("--from, --to and --points go together"));
    } else {
        a.preset.map(Preset::grid).unwrap_or_default()
    };
    if grid.is_empty() {
        return Err(CliError::validation("sweep grid is empty"));
    }
    let series = a.preset.map_or(vec![None], Preset::series);
    let mut columns = vec!["series"];
    columns.extend(SWEEP_COLUMNS);
    let mut table = Table::new(&columns);
    for s in series {
        let (label, config) = match s {
            Some(x) => (format!("gamma={x}"), SweepAxis::GammaOverSlow.apply(&base, x)?),
            None => ("base".to_string(), base),
        };
        for row in fidelity_sweep(axis, &grid, &config)? {
            let v = serde_json::to_value(&row).map_err(CliError::internal)?;
            let mut cells = vec![json!(label)];
            cells.extend(SWEEP_COLUMNS.iter().map(|c| v.get(*c).cloned().unwrap_or(Value::Null)));
            table.push(cells);
        }
    }
    let summary = vec![("axis".to_string(), json!(axis.name())), ("points".to_string(), json!(table.rows.len()))];
    Report { meta: Meta::new("sweep", a, None), summary, table, rows_key: "rows" }.emit(&a.output)
}

const COST_COLUMNS: [&str; 11] = [
    "strategy",
    "p",
    "samples",
    "seed",
    "cost",
    "std_error",
    "predicted",
    "relative_deviation",
    "qubits_per_sample",
    "length_gain",
    "length_gain_std_error",
];

fn cost_row(r: &CostReport) -> Vec<Value> {
    vec![
        json!(r.strategy),
        json!(r.p),
        json!(r.samples),
        json!(r.seed),
        json!(r.cost.mean),
        json!(r.cost.std_error),
        json!(r.predicted),
        json!(r.relative_deviation),
        json!(r.qubits_per_sample),
        json!(r.length_gain.map(|e| e.mean)),
        json!(r.length_gain.map(|e| e.std_error)),
    ]
}

pub fn grow(a: &GrowArgs) -> Result<(), CliError> {
    let policy = match a.policy {
        PolicyArg::Discard => FailurePolicy::Discard,
        PolicyArg::Shrink => FailurePolicy::Shrink,
    };
    if !a.thresholds.is_empty() {
        let rows = threshold_scan(&a.thresholds)?;
        let table = Table::from_records(&["p", "min_m", "c4", "c5"], &rows);
        let report = Report { meta: Meta::new("grow", a, None), summary: Vec::new(), table, rows_key: "thresholds" };
        return report.emit(&a.output);
    }
    let preset = if a.paper_c4 {
        Some((JoinStrategy::C4, 0.36125, 73.4))
    } else if a.paper_c5 {
        Some((JoinStrategy::C5, 0.245, 775.0))
    } else {
        None
    };
    let samples = a.samples.unwrap_or(if preset.is_some() { 10_000_000 } else { 100_000 });
    if samples == 0 {
        return Err(CliError::validation("--samples must be >= 1"));
    }
    let (strategy, p) = match preset {
        Some((s, p, _)) => (GrowthStrategy::from_join_strategy(s).with_policy(policy), p),
        None => {
            let recipe = match a.recipe {
                RecipeArg::Sequential => ChainRecipe::Sequential,
                RecipeArg::Pairwise => ChainRecipe::Pairwise,
            };
            let p = match a.p {
                Some(p) => p,
                None => physical_success_probability(&a.physics.to_config()?)?,
            };
            (GrowthStrategy { m: a.m, recipe, policy, recycling: false }, p)
        }
    };
    let report = if a.single_chain {
        if strategy.recipe != ChainRecipe::Sequential {
            return Err(CliError::validation("--single-chain grows one qubit at a time; drop --recipe pairwise"));
        }
        simulate_sequential(strategy.m, p, policy, samples, a.seed)?
    } else {
        simulate_join_growth(&strategy, p, samples, a.seed)?
    };
    let mut summary = Vec::new();
    if let Some((_, _, target)) = preset {
        let deviation = (report.cost.mean - target) / target;
        summary.push(("target_cost".to_string(), json!(target)));
        summary.push(("target_deviation".to_string(), json!(deviation)));
        summary.push(("within_2_percent".to_string(), json!(deviation.abs() <= 0.02)));
    }
    let mut table = Table::new(&COST_COLUMNS);
    table.push(cost_row(&report));
    Report { meta: Meta::new("grow", a, Some(a.seed)), summary, table, rows_key: "reports" }.emit(&a.output)
}

pub fn budget(a: &BudgetArgs) -> Result<(), CliError> {
    if !(a.gamma_inv_ns > 0.0) {
        return Err(CliError::validation("--gamma-inv-ns must be > 0"));
    }
    let gamma = 1.0 / a.gamma_inv_ns;
    let g = a.g_over_gamma * gamma;
    let params = SystemParams::symmetric(g, a.kappa_over_g * g, gamma);
    let detectors = DetectorModel { eta: 1.0, dark_rate: hz_to_per_ns(a.dark_rate_hz), resolves_photon_number: false };
    let slow = params.slowest_decay();
    if !(slow > 0.0) {
        return Err(CliError::validation("budget needs g > 0"));
    }
    let t_wait = a.window_slow / slow;
    let e = error_budget(&params, &detectors, us_to_ns(a.t_d_us), a.m, t_wait)?;
    let mut table = Table::new(&["gamma_slow_per_ns", "t_wait_ns", "t_c_ns", "t_d_ns", "m", "epsilon", "p_dc"]);
    table.push(vec![json!(slow), json!(t_wait), json!(e.t_c), json!(e.t_d), json!(e.m), json!(e.epsilon), json!(e.p_dc)]);
    Report { meta: Meta::new("budget", a, None), summary: Vec::new(), table, rows_key: "rows" }.emit(&a.output)
}

pub fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let lines = verify::run(a.level, a.seed);
    let version = env!("CARGO_PKG_VERSION");
    println!("# heralded {version} verify\n# params: {}\n# seed: {}", serde_json::to_string(a).map_err(CliError::internal)?, a.seed);
    for l in &lines {
        println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
    }
    let passed = lines.iter().filter(|l| l.pass).count();
    println!("verify: {passed} of {} checks pass", lines.len());
    if passed == lines.len() {
        Ok(())
    } else {
        Err(CliError::Verify(format!("{} check(s) failed", lines.len() - passed)))
    }
}
