//! Statistical alignment functional and the regularized stochastic SRZF objective.
//!
//! For a terminal `k` with large-scale gains `β_k, ξ_k` the alignment between
//! the true end-to-end channel at phase vector `y` and the (possibly
//! contaminated) estimate expanded with coefficients `x` is
//!
//! ```text
//! E_k(x, y) = β_k Tr(T_k) + ξ_k Tr(T_irs) · Tr(R_irs diag(x) V_k diag(y)ᴴ)
//! ```
//!
//! which is affine in `x` and affine in `conj(y)`. The objective sums the
//! distances of the users' alignments to their targets `ζ_k` and a weighted
//! leakage term toward the eavesdropper.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::channel::ChannelSampler;
use crate::scalar::{cone, creal, czero, modulus, Cx, Real};
use crate::scenario::{CorrelationSet, Gains, PerTerminal, Terminal};

/// Which complex value [`alignment_e`] reports.
///
/// `AsPrinted` evaluates the trace form literally. Sampling
/// `E[g_obs(y)ᵀ conj(ĝ(x))]` yields its complex conjugate, which is what
/// `Conjugated` returns. Both share the same modulus whenever the targets
/// are real, so the designed coefficients do not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpectationConvention {
    #[default]
    AsPrinted,
    Conjugated,
}

impl ExpectationConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AsPrinted => "as_printed",
            Self::Conjugated => "conjugated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "as_printed" => Some(Self::AsPrinted),
            "conjugated" => Some(Self::Conjugated),
            _ => None,
        }
    }

    fn apply<T: Real>(self, z: Cx<T>) -> Cx<T> {
        match self {
            Self::AsPrinted => z,
            Self::Conjugated => z.conj(),
        }
    }
}

impl fmt::Display for ExpectationConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Channel statistics needed to evaluate `E_k` for every terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentParams<T: Real> {
    /// `β_k Tr(T_k)`.
    pub beta_tr: PerTerminal<T>,
    /// `ξ_k Tr(T_irs)`.
    pub xi_tr_scale: PerTerminal<T>,
    pub r_irs: DMatrix<Cx<T>>,
    pub v: PerTerminal<DMatrix<Cx<T>>>,
    pub convention: ExpectationConvention,
}

impl<T: Real> AlignmentParams<T> {
    pub fn from_statistics(correlations: &CorrelationSet<T>, gains: &PerTerminal<Gains<T>>) -> Self {
        let tr_irs = correlations.t_irs.trace().re;
        let mut beta_tr = gains.map(|g| g.beta);
        for t in gains.terminals() {
            *beta_tr.get_mut(t) *= correlations.t.get(t).trace().re;
        }
        Self {
            beta_tr,
            xi_tr_scale: gains.map(|g| g.xi * tr_irs),
            r_irs: correlations.r_irs.clone(),
            v: correlations.v.clone(),
            convention: ExpectationConvention::AsPrinted,
        }
    }

    pub fn with_convention(mut self, convention: ExpectationConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn m_irs(&self) -> usize {
        self.r_irs.nrows()
    }

    pub fn k_users(&self) -> usize {
        self.beta_tr.k_users()
    }

    /// Hermitian PSD matrix `G_k = R_irs ∘ V_kᵀ` with
    /// `Tr(R_irs diag(y) V_k diag(y)ᴴ) = yᴴ G_k y`.
    pub fn reflect_gram(&self, t: Terminal) -> DMatrix<Cx<T>> {
        let v = self.v.get(t);
        DMatrix::from_fn(self.m_irs(), self.m_irs(), |i, j| self.r_irs[(i, j)] * v[(j, i)])
    }
}

/// `Σ_{i,j} R_ij x_j V_ji conj(y_i)`.
fn trace_term<T: Real>(r: &DMatrix<Cx<T>>, v: &DMatrix<Cx<T>>, x: &DVector<Cx<T>>, y: &DVector<Cx<T>>) -> Cx<T> {
    let m = r.nrows();
    let mut acc: Cx<T> = czero();
    for i in 0..m {
        let mut row: Cx<T> = czero();
        for j in 0..m {
            row += r[(i, j)] * x[j] * v[(j, i)];
        }
        acc += row * y[i].conj();
    }
    acc
}

/// `E_k(diag(x), diag(y))`, reported under `params.convention`.
pub fn alignment_e<T: Real>(params: &AlignmentParams<T>, t: Terminal, x: &DVector<Cx<T>>, y: &DVector<Cx<T>>) -> Cx<T> {
    params.convention.apply(alignment_printed(params, t, x, y))
}

fn alignment_printed<T: Real>(params: &AlignmentParams<T>, t: Terminal, x: &DVector<Cx<T>>, y: &DVector<Cx<T>>) -> Cx<T> {
    let tr = trace_term(&params.r_irs, params.v.get(t), x, y);
    creal(*params.beta_tr.get(t)) + tr * *params.xi_tr_scale.get(t)
}

/// `offset + Σ coeffs_j z_j`, where `z` is `x` or `conj(y)` depending on the reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm<T: Real> {
    pub offset: Cx<T>,
    pub coeffs: DVector<Cx<T>>,
}

impl<T: Real> AffineForm<T> {
    pub fn eval(&self, z: &DVector<Cx<T>>) -> Cx<T> {
        self.offset + self.coeffs.iter().zip(z.iter()).fold(czero(), |acc, (c, v)| acc + *c * *v)
    }

    /// Evaluates at `z = conj(y)`.
    pub fn eval_conj(&self, y: &DVector<Cx<T>>) -> Cx<T> {
        self.offset + self.coeffs.iter().zip(y.iter()).fold(czero(), |acc, (c, v)| acc + *c * v.conj())
    }
}

/// Reduction of the printed form in `x` for fixed `y`:
/// `d_j = ξ_k Tr(T_irs) · [V_k diag(conj y) R_irs]_jj`.
pub fn affine_coefficients_x<T: Real>(params: &AlignmentParams<T>, t: Terminal, y: &DVector<Cx<T>>) -> AffineForm<T> {
    let r = &params.r_irs;
    let v = params.v.get(t);
    let scale = creal(*params.xi_tr_scale.get(t));
    let m = params.m_irs();
    let coeffs = DVector::from_fn(m, |j, _| {
        let mut acc: Cx<T> = czero();
        for i in 0..m {
            acc += v[(j, i)] * y[i].conj() * r[(i, j)];
        }
        acc * scale
    });
    AffineForm { offset: creal(*params.beta_tr.get(t)), coeffs }
}

/// Reduction of the printed form in `conj(y)` for fixed `x`:
/// `e_i = ξ_k Tr(T_irs) · [R_irs diag(x) V_k]_ii`.
pub fn affine_coefficients_y<T: Real>(params: &AlignmentParams<T>, t: Terminal, x: &DVector<Cx<T>>) -> AffineForm<T> {
    let r = &params.r_irs;
    let v = params.v.get(t);
    let scale = creal(*params.xi_tr_scale.get(t));
    let m = params.m_irs();
    let coeffs = DVector::from_fn(m, |i, _| {
        let mut acc: Cx<T> = czero();
        for j in 0..m {
            acc += r[(i, j)] * x[j] * v[(j, i)];
        }
        acc * scale
    });
    AffineForm { offset: creal(*params.beta_tr.get(t)), coeffs }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec<T: Real> {
    /// Leakage regularizer `μ ≥ 0`.
    pub mu: T,
    /// Per-user alignment targets `ζ_k`.
    pub zeta: Vec<Cx<T>>,
    pub attacked: usize,
    pub alpha_e: T,
    /// Scale the leakage term by `√α_e` (off: the factor is absorbed in `μ`).
    pub include_alpha_in_leakage: bool,
}

impl<T: Real> ObjectiveSpec<T> {
    /// Targets set to the expected alignment of plain MRT with the IRS at
    /// `reference`: `ζ_k = E_k(reference, reference)`.
    pub fn with_reference_targets(
        params: &AlignmentParams<T>,
        reference: &DVector<Cx<T>>,
        mu: T,
        attacked: usize,
        alpha_e: T,
    ) -> Self {
        let zeta = (0..params.k_users())
            .map(|k| alignment_e(params, Terminal::User(k), reference, reference))
            .collect();
        Self { mu, zeta, attacked, alpha_e, include_alpha_in_leakage: false }
    }

    /// Weight multiplying `|E_e(x_ℓ, y)|`.
    pub fn leakage_weight(&self) -> T {
        if self.include_alpha_in_leakage {
            self.mu * self.alpha_e.sqrt()
        } else {
            self.mu
        }
    }

    /// Target expressed against the printed (un-conjugated) form, so that
    /// `|E_k − ζ_k| = |printed − target|` under either convention.
    pub fn printed_target(&self, k: usize, convention: ExpectationConvention) -> Cx<T> {
        convention.apply(self.zeta[k])
    }
}

/// `Σ_k |E_k(x_k, y) − ζ_k| + μ·s·|E_e(x_ℓ, y)|`.
pub fn f_mu<T: Real>(spec: &ObjectiveSpec<T>, params: &AlignmentParams<T>, xs: &[DVector<Cx<T>>], y: &DVector<Cx<T>>) -> T {
    let mut total = T::zero();
    for (k, x) in xs.iter().enumerate() {
        total += modulus(alignment_e(params, Terminal::User(k), x, y) - spec.zeta[k]);
    }
    let w = spec.leakage_weight();
    if w > T::zero() {
        total += w * modulus(alignment_e(params, Terminal::Eve, &xs[spec.attacked], y));
    }
    total
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T: Real> {
    pub mean: Cx<T>,
    /// `sqrt(E|z − mean|² / n)`.
    pub std_err: T,
    pub n_samples: usize,
}

/// Estimates `E[g_obs(y)ᵀ conj(ĝ_user(x))]` over fresh realizations, where
/// `ĝ_user` carries the pilot-attack contamination when `user == attacked`.
#[allow(clippy::too_many_arguments)]
pub fn mc_expectation_oracle<T: Real, R: Rng + ?Sized>(
    sampler: &ChannelSampler<T>,
    alpha_e: T,
    attacked: usize,
    observer: Terminal,
    user: usize,
    x: &DVector<Cx<T>>,
    y: &DVector<Cx<T>>,
    n_samples: usize,
    rng: &mut R,
) -> McEstimate<T> {
    assert!(n_samples >= 1, "mc_expectation_oracle needs at least one sample");
    let root = creal(alpha_e.sqrt());
    // Accumulate in f64 regardless of the working precision.
    let mut sum = Cx::new(0.0f64, 0.0);
    let mut sum_sq = 0.0f64;
    for _ in 0..n_samples {
        let real = sampler.sample(rng);
        let mut g_hat = real.end_to_end_raw(Terminal::User(user), x);
        if user == attacked {
            g_hat += real.end_to_end_raw(Terminal::Eve, x) * root;
        }
        let g_obs = real.end_to_end_raw(observer, y);
        let z = g_hat.dotc(&g_obs);
        let z = Cx::new(z.re.as_f64(), z.im.as_f64());
        sum += z;
        sum_sq += z.norm_sqr();
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean.norm_sqr()).max(0.0) * n / (n - 1.0).max(1.0);
    McEstimate { mean: Cx::new(T::lit(mean.re), T::lit(mean.im)), std_err: T::lit((var / n).sqrt()), n_samples }
}

/// Relative errors of both conventions against a sampled expectation, and
/// the convention that matches best.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConventionCheck<T> {
    pub best: ExpectationConvention,
    pub rel_err_as_printed: T,
    pub rel_err_conjugated: T,
}

pub fn compare_conventions<T: Real>(
    params: &AlignmentParams<T>,
    t: Terminal,
    x: &DVector<Cx<T>>,
    y: &DVector<Cx<T>>,
    sampled: Cx<T>,
    scale: T,
) -> ConventionCheck<T> {
    let printed = alignment_printed(params, t, x, y) * scale;
    let denom = modulus(sampled).max(T::tiny());
    let rel_err_as_printed = modulus(printed - sampled) / denom;
    let rel_err_conjugated = modulus(printed.conj() - sampled) / denom;
    let best = if rel_err_conjugated < rel_err_as_printed {
        ExpectationConvention::Conjugated
    } else {
        ExpectationConvention::AsPrinted
    };
    ConventionCheck { best, rel_err_as_printed, rel_err_conjugated }
}

/// All-ones vector, the unconfigured-IRS reference.
pub fn ones<T: Real>(m: usize) -> DVector<Cx<T>> {
    DVector::from_element(m, cone())
}
