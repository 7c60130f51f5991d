//! Sweep orchestration: one statistical design per point, then paired Monte
//! Carlo evaluation of the proposed and benchmark schemes.

use irsguard_core::channel::ChannelSampler;
use irsguard_core::downlink::{benchmark_design, ergodic_rates, evaluate_trial, proposed_design, RateReport, Scheme, TrialSample};
use irsguard_core::objective::{ones, AlignmentParams, ObjectiveSpec};
use irsguard_core::optimizer::{initial_theta, run_alternating, DesignResult};
use irsguard_core::scenario::{build_correlation_set, large_scale_gains, ScenarioConfig};
use irsguard_core::training::{build_pilots, estimate_channels, simulate_uplink_training};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::{ExperimentConfig, ResolvedPlacement, TerminalEntry, ZetaReference};
use crate::error::{HarnessError, Result};
use crate::seeds::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Fig1,
    Fig2,
    Single,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::Fig1 => "fig1",
            SweepKind::Fig2 => "fig2",
            SweepKind::Single => "run",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSummary {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub zero_at_init: bool,
}

impl DesignSummary {
    fn of(design: &DesignResult<f64>) -> Self {
        Self {
            objective: design.objective,
            iterations: design.iterations,
            converged: design.converged,
            zero_at_init: design.zero_at_init,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub report: RateReport<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub sweep_value: f64,
    pub m_irs: usize,
    pub n_trials: usize,
    pub design: Option<DesignSummary>,
    pub outcomes: Vec<SchemeOutcome>,
    pub error: Option<String>,
}

impl PointResult {
    pub fn scheme(&self, scheme: Scheme) -> Option<&RateReport<f64>> {
        self.outcomes.iter().find(|o| o.scheme == scheme).map(|o| &o.report)
    }

    /// Weighted secrecy sum of `scheme`, NaN if the point failed.
    pub fn weighted_secrecy(&self, scheme: Scheme) -> f64 {
        self.scheme(scheme).map_or(f64::NAN, |r| r.weighted_sum)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub kind: SweepKind,
    pub placement: ResolvedPlacement,
    pub points: Vec<PointResult>,
}

/// Builds the worker pool; `jobs = 0` uses every available core.
pub fn thread_pool(jobs: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| HarnessError::Pool(e.to_string()))
}

/// Runs the alternating optimizer on the scenario statistics.
pub fn design_for(cfg: &ExperimentConfig, scenario: &ScenarioConfig<f64>) -> Result<DesignResult<f64>> {
    let corr = build_correlation_set(scenario)?;
    let gains = large_scale_gains(scenario)?;
    let params = AlignmentParams::from_statistics(&corr, &gains).with_convention(cfg.objective.convention()?);
    let opt = cfg.optimizer.to_core();
    let reference = match cfg.objective.zeta_reference {
        ZetaReference::InitialPhases => initial_theta(&params, opt.theta_init),
        ZetaReference::AllOnes => ones(params.m_irs()),
    };
    let mut spec = ObjectiveSpec::with_reference_targets(
        &params,
        &reference,
        cfg.objective.mu,
        scenario.dims.attacked,
        scenario.alpha_e(),
    );
    spec.include_alpha_in_leakage = cfg.objective.include_alpha_in_leakage;
    Ok(run_alternating(&spec, &params, &opt))
}

type TrialPair = (Option<TrialSample<f64>>, Option<TrialSample<f64>>);

fn run_trial(
    cfg: &ExperimentConfig,
    scenario: &ScenarioConfig<f64>,
    sampler: &ChannelSampler<f64>,
    pilots: &irsguard_core::training::PilotBook<f64>,
    design: Option<&DesignResult<f64>>,
    t: usize,
) -> Result<TrialPair> {
    let seeds = cfg.seeds();
    let powers = &scenario.powers;
    let attacked = scenario.dims.attacked;
    let real = sampler.sample(&mut rng(seeds.trial(t)));
    let blocks = simulate_uplink_training(&real, pilots, powers, attacked, true)?;
    let est = estimate_channels(&blocks, pilots, powers, attacked);
    let proposed = match design {
        Some(d) => Some(evaluate_trial(&real, &proposed_design(&est, d, powers.p_t)?, powers.sigma2, powers.rho2)),
        None => None,
    };
    let benchmark = if cfg.run.scheme.benchmark() {
        let b = benchmark_design(&est, &mut rng(seeds.benchmark(t)), powers.p_t)?;
        Some(evaluate_trial(&real, &b, powers.sigma2, powers.rho2))
    } else {
        None
    };
    Ok((proposed, benchmark))
}

fn evaluate_point_inner(
    cfg: &ExperimentConfig,
    scenario: &ScenarioConfig<f64>,
    pool: &ThreadPool,
    result: &mut PointResult,
) -> Result<()> {
    let corr = build_correlation_set(scenario)?;
    let gains = large_scale_gains(scenario)?;
    let sampler = ChannelSampler::new(&corr, &gains)?;
    let (tau_d, tau_c) = cfg.pilot_lengths();
    let pilots = build_pilots(scenario.dims.k_users, scenario.dims.m_irs, tau_d, tau_c)?;
    let design = if cfg.run.scheme.proposed() {
        let d = design_for(cfg, scenario)?;
        result.design = Some(DesignSummary::of(&d));
        Some(d)
    } else {
        None
    };

    let n = cfg.run.n_trials;
    let trials: Vec<Result<TrialPair>> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|t| run_trial(cfg, scenario, &sampler, &pilots, design.as_ref(), t))
            .collect()
    });
    let mut proposed = Vec::with_capacity(n);
    let mut benchmark = Vec::with_capacity(n);
    for trial in trials {
        let (p, b) = trial?;
        proposed.extend(p);
        benchmark.extend(b);
    }
    let prefactor = scenario.prefactor();
    let weights = cfg.weights();
    if !proposed.is_empty() {
        result.outcomes.push(SchemeOutcome { scheme: Scheme::Proposed, report: ergodic_rates(&proposed, prefactor, &weights)? });
    }
    if !benchmark.is_empty() {
        result
            .outcomes
            .push(SchemeOutcome { scheme: Scheme::Benchmark, report: ergodic_rates(&benchmark, prefactor, &weights)? });
    }
    Ok(())
}

/// Design plus Monte Carlo evaluation at one sweep point. Failures are
/// recorded on the point instead of aborting the sweep.
pub fn evaluate_point(cfg: &ExperimentConfig, scenario: &ScenarioConfig<f64>, sweep_value: f64, pool: &ThreadPool) -> PointResult {
    let mut result = PointResult {
        sweep_value,
        m_irs: scenario.dims.m_irs,
        n_trials: cfg.run.n_trials,
        design: None,
        outcomes: Vec::new(),
        error: None,
    };
    if let Err(e) = evaluate_point_inner(cfg, scenario, pool, &mut result) {
        log::warn!("sweep point {sweep_value} failed: {e}");
        result.outcomes.clear();
        result.error = Some(e.to_string());
    }
    result
}

/// Secrecy rate against IRS size.
pub fn run_fig1(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<SweepOutput> {
    cfg.validate()?;
    let placement = cfg.resolve_placement();
    let mut points = Vec::with_capacity(cfg.fig1.m_values.len());
    for &m in &cfg.fig1.m_values {
        log::info!("fig1: M = {m}");
        let point = match cfg.scenario(&placement, m) {
            Ok(scenario) => evaluate_point(cfg, &scenario, m as f64, pool),
            Err(e) => failed_point(cfg, m as f64, m, e),
        };
        points.push(point);
    }
    Ok(SweepOutput { kind: SweepKind::Fig1, placement, points })
}

fn failed_point(cfg: &ExperimentConfig, sweep_value: f64, m_irs: usize, e: HarnessError) -> PointResult {
    PointResult {
        sweep_value,
        m_irs,
        n_trials: cfg.run.n_trials,
        design: None,
        outcomes: Vec::new(),
        error: Some(e.to_string()),
    }
}

/// Eavesdropper geometry at sweep position `theta`: both azimuths offset from
/// the attacked user's by `(theta − theta_star)·span`, elevations equal to the
/// user's, distances scaled by the configured factor.
pub fn fig2_eavesdropper(cfg: &ExperimentConfig, user: &TerminalEntry, theta: f64) -> TerminalEntry {
    let delta = (theta - cfg.fig2.theta_star) * cfg.fig2.azimuth_span_rad;
    let f = cfg.fig2.eve_distance_factor;
    TerminalEntry {
        direct_azimuth_rad: user.direct_azimuth_rad + delta,
        direct_elevation_rad: user.direct_elevation_rad,
        reflect_azimuth_rad: user.reflect_azimuth_rad + delta,
        reflect_elevation_rad: user.reflect_elevation_rad,
        d_direct_m: user.d_direct_m * f,
        d_reflect_m: user.d_reflect_m * f,
    }
}

/// Secrecy rate against eavesdropper azimuth at fixed IRS size.
pub fn run_fig2(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<SweepOutput> {
    cfg.validate()?;
    let base = cfg.resolve_placement();
    let user = base.users[cfg.system.attacked_user];
    let mut points = Vec::new();
    for theta in cfg.fig2.grid() {
        log::info!("fig2: theta = {theta}");
        let mut placement = base.clone();
        placement.eve = fig2_eavesdropper(cfg, &user, theta);
        let point = match cfg.scenario(&placement, cfg.fig2.m_irs) {
            Ok(scenario) => evaluate_point(cfg, &scenario, theta, pool),
            Err(e) => failed_point(cfg, theta, cfg.fig2.m_irs, e),
        };
        points.push(point);
    }
    Ok(SweepOutput { kind: SweepKind::Fig2, placement: base, points })
}

/// One point at `system.m_irs` with the configured placement.
pub fn run_single(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<SweepOutput> {
    cfg.validate()?;
    let placement = cfg.resolve_placement();
    let scenario = cfg.scenario(&placement, cfg.system.m_irs)?;
    let point = evaluate_point(cfg, &scenario, cfg.system.m_irs as f64, pool);
    Ok(SweepOutput { kind: SweepKind::Single, placement, points: vec![point] })
}
