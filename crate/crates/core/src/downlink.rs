//! Beamformer assembly, the random-phase MRT benchmark and secrecy rates.

use std::fmt;

use nalgebra::DVector;
use rand::Rng;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::optimizer::DesignResult;
use crate::scalar::{cis, creal, modulus, vconj, vnorm, Cx, Real};
use crate::scenario::Terminal;
use crate::training::EstimatedCsi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Proposed,
    Benchmark,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Benchmark => "benchmark",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderDesign<T: Real> {
    /// Per-user beamformers, each with `‖w_k‖² = P_T`.
    pub w: Vec<DVector<Cx<T>>>,
    pub theta: DVector<Cx<T>>,
    pub source: Scheme,
}

fn normalized_mrt<T: Real>(g: &DVector<Cx<T>>, p_t: T, user: usize) -> Result<DVector<Cx<T>>> {
    let norm = vnorm(g);
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::DegenerateBeamformer(user));
    }
    Ok(vconj(g) * creal(p_t.sqrt() / norm))
}

/// `w_k = √P_T conj(ĝ_k(c_k)) / ‖ĝ_k(c_k)‖`.
pub fn assemble_beamformer<T: Real>(est: &EstimatedCsi<T>, k: usize, c_k: &DVector<Cx<T>>, p_t: T) -> Result<DVector<Cx<T>>> {
    if k >= est.k_users() {
        return Err(Error::Dimension(format!("user {k} out of range for {} users", est.k_users())));
    }
    if c_k.len() != est.f_hat[k].ncols() {
        return Err(Error::Dimension(format!("coefficient length {} != {}", c_k.len(), est.f_hat[k].ncols())));
    }
    normalized_mrt(&est.g_hat(k, c_k), p_t, k)
}

/// Beamformers from the statistically designed coefficients, paired with the designed phases.
pub fn proposed_design<T: Real>(est: &EstimatedCsi<T>, design: &DesignResult<T>, p_t: T) -> Result<PrecoderDesign<T>> {
    let w = design
        .c
        .iter()
        .enumerate()
        .map(|(k, c)| assemble_beamformer(est, k, c, p_t))
        .collect::<Result<Vec<_>>>()?;
    Ok(PrecoderDesign { w, theta: design.theta.clone(), source: Scheme::Proposed })
}

/// Uniform random IRS phases and MRT over the estimated end-to-end channels.
pub fn benchmark_design<T: Real, R: Rng + ?Sized>(est: &EstimatedCsi<T>, rng: &mut R, p_t: T) -> Result<PrecoderDesign<T>> {
    let m = est.f_hat.first().map_or(0, |f| f.ncols());
    let theta = DVector::from_fn(m, |_, _| cis(T::lit(rng.random::<f64>() * std::f64::consts::TAU)));
    let w = (0..est.k_users())
        .map(|k| assemble_beamformer(est, k, &theta, p_t))
        .collect::<Result<Vec<_>>>()?;
    Ok(PrecoderDesign { w, theta, source: Scheme::Benchmark })
}

fn gain<T: Real>(g: &DVector<Cx<T>>, w: &DVector<Cx<T>>) -> T {
    g.iter().zip(w.iter()).fold(Cx::new(T::zero(), T::zero()), |acc, (a, b)| acc + *a * *b).norm_sqr()
}

/// `|g_kᵀ w_k|² / (σ² + Σ_{j≠k} |g_kᵀ w_j|²)` on the true channel.
pub fn sinr<T: Real>(real: &ChannelRealization<T>, design: &PrecoderDesign<T>, k: usize, sigma2: T) -> T {
    let g = real.end_to_end_raw(Terminal::User(k), &design.theta);
    let signal = gain(&g, &design.w[k]);
    let interference = design
        .w
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .fold(T::zero(), |acc, (_, w)| acc + gain(&g, w));
    signal / (sigma2 + interference)
}

/// `|g_eᵀ w_k|² / ρ²` on the true eavesdropper channel.
pub fn esnr<T: Real>(real: &ChannelRealization<T>, design: &PrecoderDesign<T>, k: usize, rho2: T) -> T {
    let g = real.end_to_end_raw(Terminal::Eve, &design.theta);
    gain(&g, &design.w[k]) / rho2
}

/// Per-user SINR and ESNR of one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSample<T> {
    pub sinr: Vec<T>,
    pub esnr: Vec<T>,
}

pub fn evaluate_trial<T: Real>(real: &ChannelRealization<T>, design: &PrecoderDesign<T>, sigma2: T, rho2: T) -> TrialSample<T> {
    let k_users = design.w.len();
    TrialSample {
        sinr: (0..k_users).map(|k| sinr(real, design, k, sigma2)).collect(),
        esnr: (0..k_users).map(|k| esnr(real, design, k, rho2)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserRates<T> {
    pub sinr_samples: Vec<T>,
    pub esnr_samples: Vec<T>,
    pub rate: T,
    pub leakage: T,
    pub secrecy: T,
    /// Standard error of the unclamped secrecy mean (prefactor applied).
    pub secrecy_std_err: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport<T> {
    pub users: Vec<UserRates<T>>,
    pub weighted_sum: T,
    pub prefactor: T,
    pub n_trials: usize,
}

fn log2_1p<T: Real>(x: T) -> T {
    (T::one() + x).log2()
}

/// Ergodic rates over a trial stream. The positive part is applied to the
/// mean log ratio, never per trial.
pub fn ergodic_rates<T: Real>(samples: &[TrialSample<T>], prefactor: T, weights: &[T]) -> Result<RateReport<T>> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::InvalidConfig("ergodic rates need at least one trial".into()));
    }
    let k_users = samples[0].sinr.len();
    if weights.len() != k_users || samples.iter().any(|s| s.sinr.len() != k_users || s.esnr.len() != k_users) {
        return Err(Error::Dimension("trial samples and weights disagree on the number of users".into()));
    }
    let nt = T::lit(n as f64);
    let mut users = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let sinr_samples: Vec<T> = samples.iter().map(|s| s.sinr[k]).collect();
        let esnr_samples: Vec<T> = samples.iter().map(|s| s.esnr[k]).collect();
        let ratios: Vec<T> = sinr_samples.iter().zip(&esnr_samples).map(|(s, e)| log2_1p(*s) - log2_1p(*e)).collect();
        let mean = |v: &mut dyn Iterator<Item = T>| v.fold(T::zero(), |a, b| a + b) / nt;
        let rate = mean(&mut sinr_samples.iter().map(|s| log2_1p(*s)));
        let leakage = mean(&mut esnr_samples.iter().map(|e| log2_1p(*e)));
        let ratio_mean = mean(&mut ratios.iter().copied());
        let std_err = if n > 1 {
            let var = ratios.iter().fold(T::zero(), |a, r| a + (*r - ratio_mean) * (*r - ratio_mean)) / T::lit((n - 1) as f64);
            (var / nt).sqrt()
        } else {
            T::zero()
        };
        users.push(UserRates {
            sinr_samples,
            esnr_samples,
            rate: prefactor * rate,
            leakage: prefactor * leakage,
            secrecy: prefactor * ratio_mean.max(T::zero()),
            secrecy_std_err: prefactor * std_err,
        });
    }
    let weighted_sum = users.iter().zip(weights).fold(T::zero(), |a, (u, w)| a + *w * u.secrecy);
    Ok(RateReport { users, weighted_sum, prefactor, n_trials: n })
}

/// `|g_kᵀ w|` for diagnostics.
pub fn beam_gain<T: Real>(g: &DVector<Cx<T>>, w: &DVector<Cx<T>>) -> T {
    modulus(g.iter().zip(w.iter()).fold(Cx::new(T::zero(), T::zero()), |acc, (a, b)| acc + *a * *b))
}
