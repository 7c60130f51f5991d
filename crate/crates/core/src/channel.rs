//! Correlated Rayleigh channel sampling and cascaded/end-to-end channel assembly.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{cis, creal, czero, modulus, Cx, Real};
use crate::scenario::{CorrelationSet, Gains, PerTerminal, Terminal};

/// One draw of the direct channels `h_k`, the IRS→BS channel `U` and the
/// terminal→IRS channels `a_k`, for every user and the eavesdropper.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Real> {
    pub h: PerTerminal<DVector<Cx<T>>>,
    /// N×M.
    pub u: DMatrix<Cx<T>>,
    pub a: PerTerminal<DVector<Cx<T>>>,
}

impl<T: Real> ChannelRealization<T> {
    pub fn n_bs(&self) -> usize {
        self.u.nrows()
    }

    pub fn m_irs(&self) -> usize {
        self.u.ncols()
    }

    /// `F_t = U diag(a_t)`.
    pub fn cascade(&self, t: Terminal) -> DMatrix<Cx<T>> {
        cascade_matrix(&self.u, self.a.get(t))
    }

    /// `f_{t,m}`: column `m` of the cascaded channel.
    pub fn cascade_column(&self, t: Terminal, m: usize) -> DVector<Cx<T>> {
        self.u.column(m) * self.a.get(t)[m]
    }

    /// `g_t(y) = h_t + F_t y` for an arbitrary (not necessarily unit-modulus) `y`.
    pub fn end_to_end_raw(&self, t: Terminal, y: &DVector<Cx<T>>) -> DVector<Cx<T>> {
        let ay = self.a.get(t).component_mul(y);
        self.h.get(t) + &self.u * ay
    }

    pub fn end_to_end(&self, t: Terminal, theta: &PhaseVector<T>) -> DVector<Cx<T>> {
        self.end_to_end_raw(t, &theta.theta)
    }
}

/// IRS reflection vector `θ_m = ϑ_m exp(jφ_m)` with on/off activity.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector<T: Real> {
    pub theta: DVector<Cx<T>>,
    pub activity: Vec<bool>,
}

impl<T: Real> PhaseVector<T> {
    /// All elements active with the given phases.
    pub fn from_phases(phases: &[T]) -> Self {
        Self {
            theta: DVector::from_iterator(phases.len(), phases.iter().map(|&p| cis(p))),
            activity: vec![true; phases.len()],
        }
    }

    /// All elements active; entries must already be unit-modulus.
    pub fn active(theta: DVector<Cx<T>>) -> Result<Self> {
        let out = Self { activity: vec![true; theta.len()], theta };
        out.validate()?;
        Ok(out)
    }

    pub fn ones(m: usize) -> Self {
        Self::from_phases(&vec![T::zero(); m])
    }

    /// Every element switched off.
    pub fn off(m: usize) -> Self {
        Self { theta: DVector::from_element(m, czero()), activity: vec![false; m] }
    }

    /// Only element `m` on with phase-shift 1, as in training sub-frame `m`.
    pub fn single(m_irs: usize, m: usize) -> Self {
        let mut out = Self::off(m_irs);
        out.theta[m] = creal(T::one());
        out.activity[m] = true;
        out
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.activity.len() != self.theta.len() {
            return Err(Error::Dimension("activity and phase lengths differ".into()));
        }
        let tol = T::lit(1e-12).max(T::eps() * T::lit(16.0));
        for (m, (z, &on)) in self.theta.iter().zip(&self.activity).enumerate() {
            let ok = if on { (modulus(*z) - T::one()).abs() <= tol } else { z.norm_sqr() == T::zero() };
            if !ok {
                return Err(Error::InvalidConfig(format!("IRS element {m} violates the phase constraint")));
            }
        }
        Ok(())
    }
}

/// Hermitian PSD square root via eigendecomposition. Slightly negative
/// eigenvalues (down to −1e−9 relative) and eigenvalues at roundoff level
/// relative to the largest are treated as zero.
pub fn matrix_sqrt_psd<T: Real>(m: &DMatrix<Cx<T>>) -> Result<DMatrix<Cx<T>>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("square root of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    let scale = m.iter().fold(T::zero(), |acc, z| acc.max(modulus(*z))).max(T::one());
    let herm_tol = T::lit(1e-10).max(T::eps() * T::lit(64.0)) * scale;
    let mut asym = T::zero();
    for i in 0..n {
        for j in 0..=i {
            asym = asym.max(modulus(m[(i, j)] - m[(j, i)].conj()));
        }
    }
    if asym > herm_tol {
        return Err(Error::NotHermitian(asym.as_f64()));
    }
    let eig = SymmetricEigen::new(m.clone());
    let psd_tol = T::lit(1e-9).max(T::eps() * T::lit(64.0 * n as f64)) * scale;
    let lambda_max = eig.eigenvalues.iter().fold(T::zero(), |a, l| a.max(*l));
    let floor = T::eps() * T::lit(16.0 * n as f64) * lambda_max;
    let mut roots = Vec::with_capacity(n);
    for &lambda in eig.eigenvalues.iter() {
        if lambda < -psd_tol {
            return Err(Error::NotPsd(lambda.as_f64()));
        }
        roots.push(creal(if lambda <= floor { T::zero() } else { lambda.sqrt() }));
    }
    let q = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(n, n, |i, j| q[(i, j)] * roots[j]);
    Ok(scaled * q.adjoint())
}

/// `F = U diag(a)`: column `m` of `u` scaled by `a_m`.
pub fn cascade_matrix<T: Real>(u: &DMatrix<Cx<T>>, a: &DVector<Cx<T>>) -> DMatrix<Cx<T>> {
    assert_eq!(u.ncols(), a.len(), "cascade_matrix: U has {} columns, a has {} entries", u.ncols(), a.len());
    let mut f = u.clone();
    for (m, mut col) in f.column_iter_mut().enumerate() {
        col *= a[m];
    }
    f
}

/// `g = h + F θ`.
pub fn end_to_end<T: Real>(h: &DVector<Cx<T>>, f: &DMatrix<Cx<T>>, theta: &PhaseVector<T>) -> DVector<Cx<T>> {
    h + f * &theta.theta
}

/// Circularly-symmetric complex Gaussian with unit variance per entry.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Cx<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Cx::new(T::lit(re * s), T::lit(im * s))
}

fn gaussian_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<Cx<T>> {
    DVector::from_fn(n, |_, _| complex_gaussian(rng))
}

fn gaussian_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Cx<T>> {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Precomputed coloring factors; each call to [`ChannelSampler::sample`]
/// draws one independent realization.
#[derive(Debug, Clone)]
pub struct ChannelSampler<T: Real> {
    /// `√β_t T_t^{1/2}`.
    direct: PerTerminal<DMatrix<Cx<T>>>,
    t_irs_sqrt: DMatrix<Cx<T>>,
    r_irs_sqrt: DMatrix<Cx<T>>,
    /// `√ξ_t V_t^{1/2}`.
    reflect: PerTerminal<DMatrix<Cx<T>>>,
}

impl<T: Real> ChannelSampler<T> {
    pub fn new(correlations: &CorrelationSet<T>, gains: &PerTerminal<Gains<T>>) -> Result<Self> {
        if gains.k_users() != correlations.t.k_users() {
            return Err(Error::Dimension("gains and correlations disagree on K".into()));
        }
        let mut direct = correlations.t.try_map(matrix_sqrt_psd)?;
        let mut reflect = correlations.v.try_map(matrix_sqrt_psd)?;
        for t in gains.terminals() {
            let g = gains.get(t);
            if g.beta < T::zero() || g.xi < T::zero() {
                return Err(Error::InvalidConfig(format!("negative large-scale gain for {t:?}")));
            }
            *direct.get_mut(t) *= creal(g.beta.sqrt());
            *reflect.get_mut(t) *= creal(g.xi.sqrt());
        }
        Ok(Self {
            direct,
            t_irs_sqrt: matrix_sqrt_psd(&correlations.t_irs)?,
            r_irs_sqrt: matrix_sqrt_psd(&correlations.r_irs)?,
            reflect,
        })
    }

    pub fn n_bs(&self) -> usize {
        self.t_irs_sqrt.nrows()
    }

    pub fn m_irs(&self) -> usize {
        self.r_irs_sqrt.nrows()
    }

    pub fn k_users(&self) -> usize {
        self.direct.k_users()
    }

    /// Draw order is fixed (direct channels, then `U`, then IRS channels,
    /// users before the eavesdropper) so a seeded generator is bit-reproducible.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization<T> {
        let n = self.n_bs();
        let m = self.m_irs();
        let h = self.direct.map(|factor| factor * gaussian_vector::<T, R>(rng, n));
        let u0 = gaussian_matrix::<T, R>(rng, n, m);
        let u = &self.t_irs_sqrt * u0 * &self.r_irs_sqrt;
        let a = self.reflect.map(|factor| factor * gaussian_vector::<T, R>(rng, m));
        ChannelRealization { h, u, a }
    }
}

/// One-shot sampling; prefer [`ChannelSampler`] when drawing many realizations.
pub fn sample_realization<T: Real, R: Rng + ?Sized>(
    correlations: &CorrelationSet<T>,
    gains: &PerTerminal<Gains<T>>,
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    Ok(ChannelSampler::new(correlations, gains)?.sample(rng))
}
