//! Deterministic system parameters, exponential correlation model and path loss.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{cis, cpowi, modulus, Cx, Real};

/// A legitimate user (0-based index) or the eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    User(usize),
    Eve,
}

/// One value per legitimate user plus one for the eavesdropper.
#[derive(Debug, Clone, PartialEq)]
pub struct PerTerminal<X> {
    pub users: Vec<X>,
    pub eve: X,
}

impl<X> PerTerminal<X> {
    pub fn new(users: Vec<X>, eve: X) -> Self {
        Self { users, eve }
    }

    pub fn get(&self, t: Terminal) -> &X {
        match t {
            Terminal::User(k) => &self.users[k],
            Terminal::Eve => &self.eve,
        }
    }

    pub fn get_mut(&mut self, t: Terminal) -> &mut X {
        match t {
            Terminal::User(k) => &mut self.users[k],
            Terminal::Eve => &mut self.eve,
        }
    }

    pub fn k_users(&self) -> usize {
        self.users.len()
    }

    /// Users first, eavesdropper last.
    pub fn terminals(&self) -> impl Iterator<Item = Terminal> {
        (0..self.users.len()).map(Terminal::User).chain(std::iter::once(Terminal::Eve))
    }

    pub fn map<Y>(&self, mut f: impl FnMut(&X) -> Y) -> PerTerminal<Y> {
        PerTerminal { users: self.users.iter().map(&mut f).collect(), eve: f(&self.eve) }
    }

    pub fn try_map<Y, E>(&self, mut f: impl FnMut(&X) -> std::result::Result<Y, E>) -> std::result::Result<PerTerminal<Y>, E> {
        let users = self.users.iter().map(&mut f).collect::<std::result::Result<Vec<_>, E>>()?;
        let eve = f(&self.eve)?;
        Ok(PerTerminal { users, eve })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    /// BS antennas.
    pub n_bs: usize,
    /// IRS elements.
    pub m_irs: usize,
    /// Legitimate single-antenna users.
    pub k_users: usize,
    /// 0-based index of the user whose pilot the eavesdropper replays.
    pub attacked: usize,
}

impl Dimensions {
    pub fn validate(&self) -> Result<()> {
        if self.n_bs == 0 || self.m_irs == 0 || self.k_users == 0 {
            return Err(Error::InvalidConfig(format!(
                "all dimensions must be >= 1 (N={}, M={}, K={})",
                self.n_bs, self.m_irs, self.k_users
            )));
        }
        if self.attacked >= self.k_users {
            return Err(Error::InvalidConfig(format!(
                "attacked user {} out of range for K={}",
                self.attacked, self.k_users
            )));
        }
        Ok(())
    }
}

/// Mean direction of arrival, in radians. Stored as given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSpec<T> {
    pub azimuth: T,
    pub elevation: T,
}

impl<T: Real> AngleSpec<T> {
    pub fn new(azimuth: T, elevation: T) -> Self {
        Self { azimuth, elevation }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingSpec<T> {
    pub d_bs_over_lambda: T,
    pub d_irs_over_lambda: T,
}

/// Reference gains and exponents of the distance-based path-loss model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeScaleSpec<T> {
    pub beta0_db: T,
    pub xi0_db: T,
    pub alpha_d: T,
    pub alpha_r: T,
    pub d0: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpec<T> {
    /// Per-user downlink power.
    pub p_t: T,
    /// Uplink pilot power per user.
    pub p_uplink: Vec<T>,
    /// Eavesdropper pilot power.
    pub p_eve: T,
    pub sigma2: T,
    pub rho2: T,
}

impl<T: Real> PowerSpec<T> {
    /// Attack-to-victim pilot power ratio.
    pub fn alpha_e(&self, attacked: usize) -> T {
        self.p_eve / self.p_uplink[attacked]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingSpec {
    pub t_coherence: usize,
    pub tau_d: usize,
    pub tau_c: usize,
    pub tau_feedback: usize,
}

impl TimingSpec {
    /// Total uplink training length `τ_d + M·τ_c`.
    pub fn tau(&self, m_irs: usize) -> usize {
        self.tau_d + m_irs * self.tau_c
    }

    pub fn validate(&self, dims: &Dimensions) -> Result<()> {
        if self.tau_d < dims.k_users {
            return Err(Error::PilotTooShort { tau: self.tau_d, users: dims.k_users });
        }
        if self.tau_c < dims.k_users {
            return Err(Error::PilotTooShort { tau: self.tau_c, users: dims.k_users });
        }
        let overhead = self.tau(dims.m_irs) + self.tau_feedback;
        if self.t_coherence <= overhead {
            return Err(Error::InvalidConfig(format!(
                "coherence interval {} does not exceed training+feedback overhead {}",
                self.t_coherence, overhead
            )));
        }
        Ok(())
    }

    /// Fraction of the coherence interval left for data, `(T_C − τ − τ^D)/T_C`.
    pub fn prefactor<T: Real>(&self, m_irs: usize) -> T {
        let used = self.tau(m_irs) + self.tau_feedback;
        T::lit((self.t_coherence - used) as f64 / self.t_coherence as f64)
    }
}

/// Geometry of one terminal as seen from the BS (direct path) and the IRS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalSpec<T> {
    /// Direction at the BS over the direct path (drives `T_k`).
    pub direct: AngleSpec<T>,
    /// Direction at the IRS over the reflecting path (drives `V_k`).
    pub reflect: AngleSpec<T>,
    /// Direct-path distance.
    pub d_direct: T,
    /// Overall BS→IRS→terminal distance.
    pub d_reflect: T,
}

/// Angles of the BS–IRS link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrsGeometry<T> {
    /// Direction at the BS of the IRS-reflected signal (drives `T_irs`).
    pub bs_side: AngleSpec<T>,
    /// Direction at the IRS of the BS link (drives `R_irs`).
    pub irs_side: AngleSpec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig<T> {
    pub dims: Dimensions,
    pub spacing: SpacingSpec<T>,
    pub large_scale: LargeScaleSpec<T>,
    pub powers: PowerSpec<T>,
    /// `None` means the overhead prefactor is 1.
    pub timing: Option<TimingSpec>,
    pub terminals: PerTerminal<TerminalSpec<T>>,
    pub irs: IrsGeometry<T>,
}

impl<T: Real> ScenarioConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        let k = self.dims.k_users;
        if self.terminals.users.len() != k {
            return Err(Error::InvalidConfig(format!(
                "{} user terminals configured for K={k}",
                self.terminals.users.len()
            )));
        }
        if self.powers.p_uplink.len() != k {
            return Err(Error::InvalidConfig(format!(
                "{} uplink powers configured for K={k}",
                self.powers.p_uplink.len()
            )));
        }
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v:?}")))
            }
        };
        positive("d_bs_over_lambda", self.spacing.d_bs_over_lambda)?;
        positive("d_irs_over_lambda", self.spacing.d_irs_over_lambda)?;
        positive("alpha_d", self.large_scale.alpha_d)?;
        positive("alpha_r", self.large_scale.alpha_r)?;
        positive("d0", self.large_scale.d0)?;
        positive("p_t", self.powers.p_t)?;
        positive("p_eve", self.powers.p_eve)?;
        positive("sigma2", self.powers.sigma2)?;
        positive("rho2", self.powers.rho2)?;
        for &p in &self.powers.p_uplink {
            positive("p_uplink", p)?;
        }
        for t in self.terminals.terminals() {
            let spec = self.terminals.get(t);
            positive("d_direct", spec.d_direct)?;
            positive("d_reflect", spec.d_reflect)?;
            for a in [spec.direct, spec.reflect] {
                if !(a.azimuth.is_finite() && a.elevation.is_finite()) {
                    return Err(Error::InvalidConfig(format!("non-finite angle for {t:?}")));
                }
            }
        }
        if let Some(timing) = &self.timing {
            timing.validate(&self.dims)?;
        }
        Ok(())
    }

    pub fn alpha_e(&self) -> T {
        self.powers.alpha_e(self.dims.attacked)
    }

    pub fn prefactor(&self) -> T {
        self.timing.map_or_else(T::one, |t| t.prefactor(self.dims.m_irs))
    }

    /// Same scenario with a different IRS size.
    pub fn with_irs_size(&self, m_irs: usize) -> Self {
        let mut out = self.clone();
        out.dims.m_irs = m_irs;
        out
    }
}

/// `exp(j·2π·spacing·sin(azimuth)·sin(elevation))`.
pub fn correlation_generator<T: Real>(spacing: T, angles: AngleSpec<T>) -> Cx<T> {
    let arg = T::two_pi() * spacing * angles.azimuth.sin() * angles.elevation.sin();
    cis(arg)
}

/// Exponential-model correlation matrix with entries `t^(n − n')`.
pub fn build_exponential_correlation<T: Real>(size: usize, generator: Cx<T>) -> Result<DMatrix<Cx<T>>> {
    if size == 0 {
        return Err(Error::Dimension("correlation matrix size must be >= 1".into()));
    }
    let m = modulus(generator);
    if (m - T::one()).abs() > T::lit(1e-12).max(T::eps() * T::lit(16.0)) {
        return Err(Error::NonUnitGenerator { modulus: m.as_f64() });
    }
    // Entry (n, n') only depends on n − n'; tabulate the 2·size − 1 powers once.
    let powers: Vec<Cx<T>> = (-(size as i64 - 1)..size as i64).map(|d| cpowi(generator, d)).collect();
    let offset = size - 1;
    Ok(DMatrix::from_fn(size, size, |n, np| powers[offset + n - np]))
}

/// Linear gain `10^(reference_db/10) · (distance/d0)^(−exponent)`.
pub fn path_loss<T: Real>(reference_db: T, distance: T, d0: T, exponent: T) -> Result<T> {
    if !(distance > T::zero()) {
        return Err(Error::NonPositiveDistance(distance.as_f64()));
    }
    if !(d0 > T::zero()) {
        return Err(Error::NonPositiveDistance(d0.as_f64()));
    }
    let reference = T::lit(10.0).powf(reference_db / T::lit(10.0));
    Ok(reference * (distance / d0).powf(-exponent))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet<T: Real> {
    /// `T_k`, N×N, direct path at the BS.
    pub t: PerTerminal<DMatrix<Cx<T>>>,
    /// `T_irs`, N×N.
    pub t_irs: DMatrix<Cx<T>>,
    /// `R_irs`, M×M.
    pub r_irs: DMatrix<Cx<T>>,
    /// `V_k`, M×M, terminal side of the IRS.
    pub v: PerTerminal<DMatrix<Cx<T>>>,
}

pub fn build_correlation_set<T: Real>(config: &ScenarioConfig<T>) -> Result<CorrelationSet<T>> {
    config.validate()?;
    let n = config.dims.n_bs;
    let m = config.dims.m_irs;
    let d_bs = config.spacing.d_bs_over_lambda;
    let d_irs = config.spacing.d_irs_over_lambda;
    let t = config
        .terminals
        .try_map(|spec| build_exponential_correlation(n, correlation_generator(d_bs, spec.direct)))?;
    let v = config
        .terminals
        .try_map(|spec| build_exponential_correlation(m, correlation_generator(d_irs, spec.reflect)))?;
    let t_irs = build_exponential_correlation(n, correlation_generator(d_bs, config.irs.bs_side))?;
    let r_irs = build_exponential_correlation(m, correlation_generator(d_irs, config.irs.irs_side))?;
    Ok(CorrelationSet { t, t_irs, r_irs, v })
}

/// Large-scale gains of one terminal: direct `β_k` and reflect `ξ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains<T> {
    pub beta: T,
    pub xi: T,
}

pub fn large_scale_gains<T: Real>(config: &ScenarioConfig<T>) -> Result<PerTerminal<Gains<T>>> {
    let ls = &config.large_scale;
    config.terminals.try_map(|spec| {
        Ok(Gains {
            beta: path_loss(ls.beta0_db, spec.d_direct, ls.d0, ls.alpha_d)?,
            xi: path_loss(ls.xi0_db, spec.d_reflect, ls.d0, ls.alpha_r)?,
        })
    })
}

/// Distance ranges used to place terminals at random.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementRanges<T> {
    pub d_direct: (T, T),
    pub d_reflect: (T, T),
}

/// Draws a terminal: azimuths uniform on `[0, 2π)`, elevations uniform on
/// `[π/4, π/2]`, distances uniform on the configured ranges.
pub fn sample_terminal<T: Real, R: Rng + ?Sized>(rng: &mut R, ranges: &PlacementRanges<T>) -> TerminalSpec<T> {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
    let angle = |rng: &mut R| {
        let az = rng.random::<f64>() * TAU;
        let el = FRAC_PI_4 + rng.random::<f64>() * (FRAC_PI_2 - FRAC_PI_4);
        AngleSpec::new(T::lit(az), T::lit(el))
    };
    let direct = angle(rng);
    let reflect = angle(rng);
    let within = |rng: &mut R, (lo, hi): (T, T)| {
        let u = rng.random::<f64>();
        lo + (hi - lo) * T::lit(u)
    };
    let d_direct = within(rng, ranges.d_direct);
    let d_reflect = within(rng, ranges.d_reflect);
    TerminalSpec { direct, reflect, d_direct, d_reflect }
}
