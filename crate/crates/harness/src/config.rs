//! Experiment configuration (TOML, schema version 1).
//!
//! Every section has defaults equal to the reference operating point, so a
//! file holding only `schema_version = 1` is a complete configuration.
//! Physical quantities carry their unit in the key name.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use std::path::Path;

use irsguard_core::objective::ExpectationConvention;
use irsguard_core::optimizer::{OptimizerConfig, ThetaInit, YSolverConfig};
use irsguard_core::scenario::{
    sample_terminal, AngleSpec, Dimensions, IrsGeometry, LargeScaleSpec, PlacementRanges, PowerSpec, ScenarioConfig,
    SpacingSpec, TerminalSpec, TimingSpec,
};
use irsguard_core::PerTerminal;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::seeds::{rng, SeedPlan};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeSelection {
    Proposed,
    Benchmark,
    #[default]
    Both,
}

impl SchemeSelection {
    pub fn proposed(self) -> bool {
        matches!(self, Self::Proposed | Self::Both)
    }

    pub fn benchmark(self) -> bool {
        matches!(self, Self::Benchmark | Self::Both)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "proposed" => Some(Self::Proposed),
            "benchmark" => Some(Self::Benchmark),
            "both" => Some(Self::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub master_seed: u64,
    pub n_trials: usize,
    pub scheme: SchemeSelection,
    /// Secrecy weights `ω_k`; all ones when absent.
    pub weights: Option<Vec<f64>>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { master_seed: 1, n_trials: 500, scheme: SchemeSelection::Both, weights: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub n_bs: usize,
    pub k_users: usize,
    /// 0-based index of the user whose pilot is replayed.
    pub attacked_user: usize,
    /// IRS size for `run`.
    pub m_irs: usize,
    pub d_bs_over_lambda: f64,
    pub d_irs_over_lambda: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self { n_bs: 8, k_users: 1, attacked_user: 0, m_irs: 64, d_bs_over_lambda: 0.25, d_irs_over_lambda: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LargeScaleSection {
    pub beta0_db: f64,
    pub xi0_db: f64,
    pub alpha_d: f64,
    pub alpha_r: f64,
    pub d0_m: f64,
}

impl Default for LargeScaleSection {
    fn default() -> Self {
        Self { beta0_db: -10.0, xi0_db: -13.0, alpha_d: 3.6, alpha_r: 2.1, d0_m: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerSection {
    pub p_t_linear: f64,
    /// One entry per user, or a single entry shared by all.
    pub p_uplink_linear: Vec<f64>,
    /// Attack power relative to the attacked user's pilot power.
    pub alpha_e: f64,
    pub sigma2_linear: f64,
    pub rho2_linear: f64,
}

impl Default for PowerSection {
    fn default() -> Self {
        Self { p_t_linear: 1.0, p_uplink_linear: vec![1.0], alpha_e: 0.5, sigma2_linear: 0.1, rho2_linear: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    pub t_coherence_symbols: usize,
    pub tau_d_symbols: usize,
    pub tau_c_symbols: usize,
    #[serde(default)]
    pub tau_feedback_symbols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalEntry {
    pub direct_azimuth_rad: f64,
    pub direct_elevation_rad: f64,
    pub reflect_azimuth_rad: f64,
    pub reflect_elevation_rad: f64,
    pub d_direct_m: f64,
    pub d_reflect_m: f64,
}

impl TerminalEntry {
    pub fn to_spec(self) -> TerminalSpec<f64> {
        TerminalSpec {
            direct: AngleSpec::new(self.direct_azimuth_rad, self.direct_elevation_rad),
            reflect: AngleSpec::new(self.reflect_azimuth_rad, self.reflect_elevation_rad),
            d_direct: self.d_direct_m,
            d_reflect: self.d_reflect_m,
        }
    }

    pub fn from_spec(spec: &TerminalSpec<f64>) -> Self {
        Self {
            direct_azimuth_rad: spec.direct.azimuth,
            direct_elevation_rad: spec.direct.elevation,
            reflect_azimuth_rad: spec.reflect.azimuth,
            reflect_elevation_rad: spec.reflect.elevation,
            d_direct_m: spec.d_direct,
            d_reflect_m: spec.d_reflect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrsEntry {
    pub bs_side_azimuth_rad: f64,
    pub bs_side_elevation_rad: f64,
    pub irs_side_azimuth_rad: f64,
    pub irs_side_elevation_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlacementSection {
    /// Seed for random placement; derived from the master seed when absent.
    pub seed: Option<u64>,
    pub d_direct_m: [f64; 2],
    pub d_reflect_m: [f64; 2],
    /// Explicit geometry; overrides the random draw for the entries given.
    pub users: Option<Vec<TerminalEntry>>,
    pub eve: Option<TerminalEntry>,
    pub irs: Option<IrsEntry>,
}

impl Default for PlacementSection {
    fn default() -> Self {
        Self { seed: None, d_direct_m: [20.0, 30.0], d_reflect_m: [20.0, 30.0], users: None, eve: None, irs: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZetaReference {
    /// `ζ_k = E_k(θ⁰, θ⁰)` at the optimizer's initial phases.
    #[default]
    InitialPhases,
    /// `ζ_k = E_k(1, 1)`.
    AllOnes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveSection {
    pub mu: f64,
    pub convention: String,
    pub include_alpha_in_leakage: bool,
    pub zeta_reference: ZetaReference,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        Self {
            mu: 1.0,
            convention: ExpectationConvention::AsPrinted.as_str().to_string(),
            include_alpha_in_leakage: false,
            zeta_reference: ZetaReference::InitialPhases,
        }
    }
}

impl ObjectiveSection {
    pub fn convention(&self) -> Result<ExpectationConvention> {
        ExpectationConvention::parse(&self.convention)
            .ok_or_else(|| HarnessError::Config(format!("unknown expectation convention `{}`", self.convention)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThetaInitKind {
    AllOnes,
    RandomPhase,
    #[default]
    StatisticalAlignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub eps_theta: f64,
    pub eps_c: f64,
    pub max_outer_iters: usize,
    pub theta_init: ThetaInitKind,
    pub theta_init_seed: u64,
    pub y_step_scale: f64,
    pub y_max_inner_iters: usize,
    pub y_objective_tol: f64,
    pub y_restart_period: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let core = OptimizerConfig::<f64>::default();
        Self {
            eps_theta: core.eps_theta,
            eps_c: core.eps_c,
            max_outer_iters: core.max_outer_iters,
            theta_init: ThetaInitKind::StatisticalAlignment,
            theta_init_seed: 0,
            y_step_scale: core.y_solver.step_scale,
            y_max_inner_iters: core.y_solver.max_inner_iters,
            y_objective_tol: core.y_solver.objective_tol,
            y_restart_period: core.y_solver.restart_period,
        }
    }
}

impl OptimizerSection {
    pub fn to_core(&self) -> OptimizerConfig<f64> {
        OptimizerConfig {
            eps_theta: self.eps_theta,
            eps_c: self.eps_c,
            max_outer_iters: self.max_outer_iters,
            y_solver: YSolverConfig {
                step_scale: self.y_step_scale,
                max_inner_iters: self.y_max_inner_iters,
                objective_tol: self.y_objective_tol,
                restart_period: self.y_restart_period,
            },
            theta_init: match self.theta_init {
                ThetaInitKind::AllOnes => ThetaInit::AllOnes,
                ThetaInitKind::RandomPhase => ThetaInit::RandomPhase(self.theta_init_seed),
                ThetaInitKind::StatisticalAlignment => ThetaInit::StatisticalAlignment,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig1Section {
    pub m_values: Vec<usize>,
}

impl Default for Fig1Section {
    fn default() -> Self {
        Self { m_values: (1..=8).map(|i| 8 * i).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig2Section {
    pub m_irs: usize,
    /// Evenly spaced points on `[0, 1]`; `theta_star` is added if missing.
    pub n_points: usize,
    pub theta_star: f64,
    /// Azimuth change over the whole `ϑ ∈ [0, 1]` sweep.
    pub azimuth_span_rad: f64,
    /// Eavesdropper distances relative to the attacked user's.
    pub eve_distance_factor: f64,
}

impl Default for Fig2Section {
    fn default() -> Self {
        Self { m_irs: 64, n_points: 41, theta_star: 0.5, azimuth_span_rad: TAU, eve_distance_factor: 1.1 }
    }
}

impl Fig2Section {
    pub fn grid(&self) -> Vec<f64> {
        let mut grid: Vec<f64> = match self.n_points {
            0 => Vec::new(),
            1 => vec![self.theta_star],
            n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        };
        if !grid.iter().any(|v| (v - self.theta_star).abs() < 1e-12) {
            grid.push(self.theta_star);
            grid.sort_by(f64::total_cmp);
        }
        grid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    /// Checks to run; all when absent, none when empty.
    pub checks: Option<Vec<String>>,
    pub realizations: usize,
    pub mc_samples: usize,
    pub solver_runs: usize,
    /// Use this `α_e` for the analytic side of the contamination check.
    pub inject_alpha_e: Option<f64>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self { checks: None, realizations: 100, mc_samples: 100_000, solver_runs: 20, inject_alpha_e: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub large_scale: LargeScaleSection,
    #[serde(default)]
    pub power: PowerSection,
    #[serde(default)]
    pub timing: Option<TimingSection>,
    #[serde(default)]
    pub placement: PlacementSection,
    #[serde(default)]
    pub objective: ObjectiveSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub fig1: Fig1Section,
    #[serde(default)]
    pub fig2: Fig2Section,
    #[serde(default)]
    pub validate: ValidateSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            run: RunSection::default(),
            system: SystemSection::default(),
            large_scale: LargeScaleSection::default(),
            power: PowerSection::default(),
            timing: None,
            placement: PlacementSection::default(),
            objective: ObjectiveSection::default(),
            optimizer: OptimizerSection::default(),
            fig1: Fig1Section::default(),
            fig2: Fig2Section::default(),
            validate: ValidateSection::default(),
        }
    }
}

/// Terminal and IRS geometry after the random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedPlacement {
    pub seed: u64,
    pub users: Vec<TerminalEntry>,
    pub eve: TerminalEntry,
    pub irs: IrsEntry,
}

fn random_angle<R: Rng>(rng: &mut R) -> (f64, f64) {
    (rng.random::<f64>() * TAU, FRAC_PI_4 + rng.random::<f64>() * (FRAC_PI_2 - FRAC_PI_4))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
        let cfg = Self::from_toml_str(&text).map_err(|source| HarnessError::Parse { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn seeds(&self) -> SeedPlan {
        SeedPlan::new(self.run.master_seed)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.run.n_trials == 0 {
            return bad("run.n_trials must be at least 1".into());
        }
        let k = self.system.k_users;
        if k == 0 || self.system.attacked_user >= k {
            return bad(format!("system.attacked_user {} out of range for {k} users", self.system.attacked_user));
        }
        if let Some(w) = &self.run.weights {
            if w.len() != k {
                return bad(format!("run.weights has {} entries for {k} users", w.len()));
            }
        }
        let p = &self.power.p_uplink_linear;
        if p.len() != 1 && p.len() != k {
            return bad(format!("power.p_uplink_linear has {} entries for {k} users", p.len()));
        }
        if !(self.power.alpha_e >= 0.0) {
            return bad("power.alpha_e must be non-negative".into());
        }
        for (name, [lo, hi]) in [("d_direct_m", self.placement.d_direct_m), ("d_reflect_m", self.placement.d_reflect_m)] {
            if !(lo > 0.0 && hi >= lo) {
                return bad(format!("placement.{name} must satisfy 0 < lo <= hi"));
            }
        }
        if let Some(users) = &self.placement.users {
            if users.len() != k {
                return bad(format!("placement.users has {} entries for {k} users", users.len()));
            }
        }
        if self.fig1.m_values.is_empty() {
            return bad("fig1.m_values must not be empty".into());
        }
        if self.fig2.n_points == 0 || !(0.0..=1.0).contains(&self.fig2.theta_star) {
            return bad("fig2 needs n_points >= 1 and theta_star in [0, 1]".into());
        }
        if !(self.fig2.eve_distance_factor > 0.0) {
            return bad("fig2.eve_distance_factor must be positive".into());
        }
        self.objective.convention()?;
        if !(self.objective.mu >= 0.0) {
            return bad("objective.mu must be non-negative".into());
        }
        self.scenario(&self.resolve_placement(), self.system.m_irs)?.validate()?;
        Ok(())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.run.weights.clone().unwrap_or_else(|| vec![1.0; self.system.k_users])
    }

    /// Draws the geometry not fixed explicitly in the config.
    pub fn resolve_placement(&self) -> ResolvedPlacement {
        let seed = self.placement.seed.unwrap_or_else(|| self.seeds().placement());
        let mut rng = rng(seed);
        let ranges = PlacementRanges {
            d_direct: (self.placement.d_direct_m[0], self.placement.d_direct_m[1]),
            d_reflect: (self.placement.d_reflect_m[0], self.placement.d_reflect_m[1]),
        };
        let users: Vec<TerminalEntry> = (0..self.system.k_users)
            .map(|_| TerminalEntry::from_spec(&sample_terminal(&mut rng, &ranges)))
            .collect();
        let eve = TerminalEntry::from_spec(&sample_terminal(&mut rng, &ranges));
        let (bs_az, bs_el) = random_angle(&mut rng);
        let (irs_az, irs_el) = random_angle(&mut rng);
        let irs = IrsEntry {
            bs_side_azimuth_rad: bs_az,
            bs_side_elevation_rad: bs_el,
            irs_side_azimuth_rad: irs_az,
            irs_side_elevation_rad: irs_el,
        };
        ResolvedPlacement {
            seed,
            users: self.placement.users.clone().unwrap_or(users),
            eve: self.placement.eve.unwrap_or(eve),
            irs: self.placement.irs.unwrap_or(irs),
        }
    }

    pub fn timing(&self) -> Option<TimingSpec> {
        self.timing.as_ref().map(|t| TimingSpec {
            t_coherence: t.t_coherence_symbols,
            tau_d: t.tau_d_symbols,
            tau_c: t.tau_c_symbols,
            tau_feedback: t.tau_feedback_symbols,
        })
    }

    /// Pilot lengths `(τ_d, τ_c)`; the minimum `K` when no timing is given.
    pub fn pilot_lengths(&self) -> (usize, usize) {
        self.timing
            .as_ref()
            .map_or((self.system.k_users, self.system.k_users), |t| (t.tau_d_symbols, t.tau_c_symbols))
    }

    pub fn scenario(&self, placement: &ResolvedPlacement, m_irs: usize) -> Result<ScenarioConfig<f64>> {
        let k = self.system.k_users;
        let p_uplink = if self.power.p_uplink_linear.len() == 1 {
            vec![self.power.p_uplink_linear[0]; k]
        } else {
            self.power.p_uplink_linear.clone()
        };
        let attacked = self.system.attacked_user;
        let p_eve = self.power.alpha_e * p_uplink.get(attacked).copied().unwrap_or(1.0);
        let cfg = ScenarioConfig {
            dims: Dimensions { n_bs: self.system.n_bs, m_irs, k_users: k, attacked },
            spacing: SpacingSpec {
                d_bs_over_lambda: self.system.d_bs_over_lambda,
                d_irs_over_lambda: self.system.d_irs_over_lambda,
            },
            large_scale: LargeScaleSpec {
                beta0_db: self.large_scale.beta0_db,
                xi0_db: self.large_scale.xi0_db,
                alpha_d: self.large_scale.alpha_d,
                alpha_r: self.large_scale.alpha_r,
                d0: self.large_scale.d0_m,
            },
            powers: PowerSpec {
                p_t: self.power.p_t_linear,
                p_uplink,
                p_eve,
                sigma2: self.power.sigma2_linear,
                rho2: self.power.rho2_linear,
            },
            timing: self.timing(),
            terminals: PerTerminal::new(
                placement.users.iter().map(|u| u.to_spec()).collect(),
                placement.eve.to_spec(),
            ),
            irs: IrsGeometry {
                bs_side: AngleSpec::new(placement.irs.bs_side_azimuth_rad, placement.irs.bs_side_elevation_rad),
                irs_side: AngleSpec::new(placement.irs.irs_side_azimuth_rad, placement.irs.irs_side_elevation_rad),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
