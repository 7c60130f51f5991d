//! Cross-module self-checks: pilot exactness, contamination closed form,
//! expectation formula against Monte Carlo, and solver correctness.

use irsguard_core::channel::{complex_gaussian, ChannelSampler};
use irsguard_core::objective::{
    alignment_e, f_mu, mc_expectation_oracle, AlignmentParams, ExpectationConvention, McEstimate, ObjectiveSpec,
};
use irsguard_core::optimizer::{
    run_alternating, solve_x_subproblem, solve_y_subproblem, OptimizerConfig, StepKind, ThetaInit, YSolverConfig,
};
use irsguard_core::scalar::{cis, creal, rel_err, Cx};
use irsguard_core::scenario::{build_correlation_set, large_scale_gains, ScenarioConfig};
use irsguard_core::training::{build_pilots, contaminated_estimates_analytic, estimate_channels, simulate_uplink_training};
use irsguard_core::{PerTerminal, Terminal};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::seeds::{rng, SeedPlan};

pub const ALL_CHECKS: [&str; 6] = ["pilot_exactness", "contamination", "expectation", "x_residuals", "y_grid", "monotonicity"];

pub const PILOT_TOL: f64 = 1e-10;
pub const CONTAMINATION_TOL: f64 = 1e-10;
pub const EXPECTATION_REL_TOL: f64 = 0.05;
pub const CROSS_PAIR_SIGMAS: f64 = 3.0;
pub const X_RESIDUAL_TOL: f64 = 1e-9;
pub const Y_GRID_REL_TOL: f64 = 0.02;
pub const MONOTONE_TOL: f64 = 1e-8;
/// Upper bound on oracle blocks per probe when sharpening the standard error.
pub const EXPECTATION_MAX_BLOCKS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub metric: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn outcome(name: &str, metric: f64, tolerance: f64, detail: String) -> CheckOutcome {
    CheckOutcome { name: name.to_string(), passed: metric.is_finite() && metric < tolerance, metric, tolerance, detail }
}

/// Scenario used by the channel-level checks: the configured geometry with
/// `N = 8`, `K = 2` and the given IRS size.
fn check_scenario(cfg: &ExperimentConfig, m_irs: usize, alpha_e: f64) -> Result<ScenarioConfig<f64>> {
    let mut c = cfg.clone();
    c.system.n_bs = 8;
    c.system.k_users = 2;
    c.system.attacked_user = 0;
    c.run.weights = None;
    c.placement.users = None;
    c.power.p_uplink_linear = vec![1.0];
    c.power.alpha_e = alpha_e;
    c.timing = None;
    c.scenario(&c.resolve_placement(), m_irs)
}

fn max_rel(a: &[DVector<Cx<f64>>], b: &[DVector<Cx<f64>>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| rel_err(x, y)).fold(0.0, f64::max)
}

fn fro_rel(a: &DMatrix<Cx<f64>>, b: &DMatrix<Cx<f64>>) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn pilot_exactness(cfg: &ExperimentConfig, seeds: SeedPlan) -> Result<CheckOutcome> {
    let scenario = check_scenario(cfg, 16, cfg.power.alpha_e)?;
    let sampler = ChannelSampler::new(&build_correlation_set(&scenario)?, &large_scale_gains(&scenario)?)?;
    let pilots = build_pilots(2, 16, 2, 2)?;
    let mut worst = 0.0f64;
    for run in 0..cfg.validate.realizations {
        let real = sampler.sample(&mut rng(seeds.validation(1, run as u64)));
        let blocks = simulate_uplink_training(&real, &pilots, &scenario.powers, 0, false)?;
        let est = estimate_channels(&blocks, &pilots, &scenario.powers, 0);
        let truth: Vec<_> = real.h.users.clone();
        worst = worst.max(max_rel(&est.h_hat, &truth));
        for k in 0..2 {
            worst = worst.max(fro_rel(&est.f_hat[k], &real.cascade(Terminal::User(k))));
        }
    }
    Ok(outcome(
        "pilot_exactness",
        worst,
        PILOT_TOL,
        format!("{} realizations, N=8 M=16 K=2, attack off", cfg.validate.realizations),
    ))
}

fn contamination(cfg: &ExperimentConfig, seeds: SeedPlan) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    let alphas = [0.25, 0.5, 1.0];
    for (i, &alpha) in alphas.iter().enumerate() {
        let scenario = check_scenario(cfg, 8, alpha)?;
        let sampler = ChannelSampler::new(&build_correlation_set(&scenario)?, &large_scale_gains(&scenario)?)?;
        let pilots = build_pilots(2, 8, 2, 2)?;
        let analytic_alpha = cfg.validate.inject_alpha_e.unwrap_or(alpha);
        for run in 0..cfg.validate.realizations.min(20) {
            let real = sampler.sample(&mut rng(seeds.validation(2, (i * 1000 + run) as u64)));
            let blocks = simulate_uplink_training(&real, &pilots, &scenario.powers, 0, true)?;
            let est = estimate_channels(&blocks, &pilots, &scenario.powers, 0);
            let closed = contaminated_estimates_analytic(&real, analytic_alpha, 0);
            worst = worst.max(max_rel(&est.h_hat, &closed.h_hat));
            for k in 0..2 {
                worst = worst.max(fro_rel(&est.f_hat[k], &closed.f_hat[k]));
            }
            let shift = &est.h_hat[0] - &real.h.users[0];
            worst = worst.max(rel_err(&shift, &(&real.h.eve * creal(analytic_alpha.sqrt()))));
        }
    }
    let detail = match cfg.validate.inject_alpha_e {
        Some(a) => format!("alpha_e in {alphas:?}, analytic side forced to {a}"),
        None => format!("alpha_e in {alphas:?}"),
    };
    Ok(outcome("contamination", worst, CONTAMINATION_TOL, detail))
}

fn random_unit_probe<R: Rng>(rng: &mut R, m: usize) -> DVector<Cx<f64>> {
    DVector::from_fn(m, |_, _| cis(rng.random::<f64>() * std::f64::consts::TAU))
}

/// Oracle blocks of `n` samples pooled until the standard error is within
/// a third of the tolerance relative to `scale`; `scale = 0` takes one block.
#[allow(clippy::too_many_arguments)]
fn pooled_oracle<R: Rng>(
    sampler: &ChannelSampler<f64>,
    alpha: f64,
    observer: Terminal,
    user: usize,
    x: &DVector<Cx<f64>>,
    y: &DVector<Cx<f64>>,
    n: usize,
    scale: f64,
    rng: &mut R,
) -> McEstimate<f64> {
    let (mut sum, mut sum_sq, mut count) = (Cx::new(0.0, 0.0), 0.0, 0usize);
    loop {
        let block = mc_expectation_oracle(sampler, alpha, 0, observer, user, x, y, n, rng);
        let bn = block.n_samples as f64;
        sum += block.mean * bn;
        sum_sq += block.std_err.powi(2) * bn * (bn - 1.0).max(1.0) + block.mean.norm_sqr() * bn;
        count += block.n_samples;
        let total = count as f64;
        let mean = sum / total;
        let var = (sum_sq / total - mean.norm_sqr()).max(0.0) * total / (total - 1.0).max(1.0);
        let std_err = (var / total).sqrt();
        if scale == 0.0 || std_err <= scale * EXPECTATION_REL_TOL / 3.0 || count >= n * EXPECTATION_MAX_BLOCKS {
            return McEstimate { mean, std_err, n_samples: count };
        }
    }
}

fn expectation(cfg: &ExperimentConfig, seeds: SeedPlan) -> Result<Vec<CheckOutcome>> {
    let alpha = cfg.power.alpha_e;
    let scenario = check_scenario(cfg, 8, alpha)?;
    let corr = build_correlation_set(&scenario)?;
    let gains = large_scale_gains(&scenario)?;
    let sampler = ChannelSampler::new(&corr, &gains)?;
    let params = AlignmentParams::from_statistics(&corr, &gains).with_convention(ExpectationConvention::Conjugated);
    let n = cfg.validate.mc_samples;
    let mut probe_rng = rng(seeds.validation(3, 0));
    let (mut worst_own, mut worst_cross, mut worst_attacked) = (0.0f64, 0.0f64, 0.0f64);
    let mut most = n;
    for probe in 0..5u64 {
        let x = random_unit_probe(&mut probe_rng, 8);
        let y = random_unit_probe(&mut probe_rng, 8);
        let mc = |observer, user, tag, scale: f64| {
            let mut r = rng(seeds.validation(3, 10 * (probe + 1) + tag));
            pooled_oracle(&sampler, alpha, observer, user, &x, &y, n, scale, &mut r)
        };
        // Non-attacked user: its estimate is exact, so the oracle targets E_k itself.
        let e1 = alignment_e(&params, Terminal::User(1), &x, &y);
        let own = mc(Terminal::User(1), 1, 1, e1.norm());
        worst_own = worst_own.max((own.mean - e1).norm() / e1.norm());
        let cross = mc(Terminal::Eve, 1, 2, 0.0);
        worst_cross = worst_cross.max(cross.mean.norm() / cross.std_err);
        let expect = alignment_e(&params, Terminal::Eve, &x, &y) * creal(alpha.sqrt());
        let attacked = mc(Terminal::Eve, 0, 3, expect.norm());
        worst_attacked = worst_attacked.max((attacked.mean - expect).norm() / expect.norm());
        most = most.max(own.n_samples).max(attacked.n_samples);
    }
    Ok(vec![
        outcome("expectation", worst_own, EXPECTATION_REL_TOL, format!("5 probes, M=8, {n}..{most} samples, relative error")),
        outcome("expectation_cross_pair", worst_cross, CROSS_PAIR_SIGMAS, "eavesdropper vs non-attacked user, |mean|/SE".into()),
        outcome(
            "expectation_attacked_pair",
            worst_attacked,
            EXPECTATION_REL_TOL,
            "eavesdropper vs attacked user against sqrt(alpha_e) E_e".into(),
        ),
    ])
}

fn random_psd<R: Rng>(rng: &mut R, m: usize) -> DMatrix<Cx<f64>> {
    let a = DMatrix::from_fn(m, m, |_, _| complex_gaussian::<f64, _>(rng));
    &a * a.adjoint()
}

/// Generic (full-rank) statistics for solver checks.
pub fn random_instance<R: Rng>(rng: &mut R, m: usize, k: usize, mu: f64) -> (AlignmentParams<f64>, ObjectiveSpec<f64>) {
    let params = AlignmentParams {
        beta_tr: PerTerminal::new((0..k).map(|_| 0.5 + rng.random::<f64>()).collect(), 0.5 + rng.random::<f64>()),
        xi_tr_scale: PerTerminal::new((0..k).map(|_| 0.5 + rng.random::<f64>()).collect(), 0.5 + rng.random::<f64>()),
        r_irs: random_psd(rng, m),
        v: PerTerminal::new((0..k).map(|_| random_psd(rng, m)).collect(), random_psd(rng, m)),
        convention: ExpectationConvention::AsPrinted,
    };
    let zeta = (0..k).map(|_| Cx::new(1.0 + 4.0 * rng.random::<f64>(), 0.0)).collect();
    let spec = ObjectiveSpec { mu, zeta, attacked: 0, alpha_e: 0.5, include_alpha_in_leakage: false };
    (params, spec)
}

fn x_residuals(cfg: &ExperimentConfig, seeds: SeedPlan) -> CheckOutcome {
    let mut worst = 0.0f64;
    for run in 0..cfg.validate.solver_runs as u64 {
        let mut r = rng(seeds.validation(4, run));
        let (params, spec) = random_instance(&mut r, 6, 2, 1.0);
        let y = random_unit_probe(&mut r, 6);
        let sol = solve_x_subproblem(&spec, &params, &y);
        for k in 0..2 {
            let e = alignment_e(&params, Terminal::User(k), &sol.xs[k], &y);
            worst = worst.max((e - spec.zeta[k]).norm() / spec.zeta[k].norm());
        }
        let leak = alignment_e(&params, Terminal::Eve, &sol.xs[0], &y).norm();
        worst = worst.max(leak / params.beta_tr.eve);
    }
    outcome("x_residuals", worst, X_RESIDUAL_TOL, format!("{} full-rank instances, M=6 K=2", cfg.validate.solver_runs))
}

/// Polar grid over the unit disk in each coordinate.
pub fn grid_minimum(f: impl Fn(&DVector<Cx<f64>>) -> f64, m: usize, per_axis: usize) -> f64 {
    let radii: Vec<f64> = (0..per_axis).map(|i| i as f64 / (per_axis - 1) as f64).collect();
    let points: Vec<Cx<f64>> = radii
        .iter()
        .flat_map(|&r| (0..per_axis).map(move |j| cis(std::f64::consts::TAU * j as f64 / per_axis as f64) * r))
        .collect();
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; m];
    loop {
        let y = DVector::from_fn(m, |i, _| points[idx[i]]);
        best = best.min(f(&y));
        let mut d = 0;
        while d < m {
            idx[d] += 1;
            if idx[d] < points.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == m {
            return best;
        }
    }
}

fn y_grid(cfg: &ExperimentConfig, seeds: SeedPlan) -> CheckOutcome {
    let mut worst = f64::NEG_INFINITY;
    for run in 0..cfg.validate.solver_runs.max(1) as u64 {
        let m = 1 + (run % 2) as usize;
        let mut r = rng(seeds.validation(5, run));
        let (params, spec) = random_instance(&mut r, m, 1, 1.0);
        let xs = vec![DVector::from_fn(m, |_, _| complex_gaussian::<f64, _>(&mut r))];
        let warm = random_unit_probe(&mut r, m);
        let sol = solve_y_subproblem(&spec, &params, &xs, &warm, &YSolverConfig::default());
        // 10^4 grid samples in total.
        let per_axis = if m == 1 { 100 } else { 10 };
        let grid = grid_minimum(|y| f_mu(&spec, &params, &xs, y), m, per_axis);
        worst = worst.max((sol.objective - grid) / grid.max(1e-12));
    }
    outcome("y_grid", worst, Y_GRID_REL_TOL, "relaxed phase step vs 10^4-sample grid, M <= 2".into())
}

fn monotonicity(cfg: &ExperimentConfig, seeds: SeedPlan) -> CheckOutcome {
    let mut worst = f64::NEG_INFINITY;
    for run in 0..cfg.validate.solver_runs as u64 {
        let mut r = rng(seeds.validation(6, run));
        let (params, mut spec) = random_instance(&mut r, 4, 2, 1.0);
        // Targets beyond reach keep the phase step active.
        for z in spec.zeta.iter_mut() {
            *z *= creal(50.0);
        }
        let opt = OptimizerConfig { theta_init: ThetaInit::RandomPhase(run), max_outer_iters: 10, ..OptimizerConfig::default() };
        let res = run_alternating(&spec, &params, &opt);
        for pair in res.objective_trace.windows(2) {
            if matches!(pair[1].kind, StepKind::Relaxed | StepKind::Coefficients) {
                worst = worst.max(pair[1].objective - pair[0].objective);
            }
        }
    }
    outcome("monotonicity", worst.max(0.0), MONOTONE_TOL, format!("{} seeded alternating runs", cfg.validate.solver_runs))
}

/// Runs the checks selected in `cfg.validate`.
pub fn run_validation_suite(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    let seeds = cfg.seeds();
    let selected: Vec<String> = cfg
        .validate
        .checks
        .clone()
        .unwrap_or_else(|| ALL_CHECKS.iter().map(|s| s.to_string()).collect());
    let mut report = ValidationReport::default();
    for name in &selected {
        match name.as_str() {
            "pilot_exactness" => report.checks.push(pilot_exactness(cfg, seeds)?),
            "contamination" => report.checks.push(contamination(cfg, seeds)?),
            "expectation" => report.checks.extend(expectation(cfg, seeds)?),
            "x_residuals" => report.checks.push(x_residuals(cfg, seeds)),
            "y_grid" => report.checks.push(y_grid(cfg, seeds)),
            "monotonicity" => report.checks.push(monotonicity(cfg, seeds)),
            other => {
                return Err(crate::error::HarnessError::Config(format!(
                    "unknown check `{other}` (known: {})",
                    ALL_CHECKS.join(", ")
                )))
            }
        }
    }
    Ok(report)
}
