//! Uplink training under an active pilot attack.
//!
//! Training runs in `M + 1` phases: a direct phase with the IRS switched off
//! (pilots `μ_k`), then one sub-frame per IRS element with only that element on
//! (pilots `ω_{k,m}`). The eavesdropper replays the attacked user's pilots,
//! so the BS's projection onto that user's pilot picks up the eavesdropper's
//! channel scaled by `√(P_e/P_ℓ)`. The protocol is noise-free.

use nalgebra::{DMatrix, DVector};

use crate::channel::{ChannelRealization, PhaseVector};
use crate::error::{Error, Result};
use crate::scalar::{cis, creal, vconj, Cx, Real};
use crate::scenario::{PowerSpec, Terminal};

/// Orthogonal pilot sequences: `mu[k]` of length `τ_d`, `omega[k][m]` of length `τ_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook<T: Real> {
    pub mu: Vec<DVector<Cx<T>>>,
    pub omega: Vec<Vec<DVector<Cx<T>>>>,
}

impl<T: Real> PilotBook<T> {
    pub fn k_users(&self) -> usize {
        self.mu.len()
    }

    pub fn m_irs(&self) -> usize {
        self.omega.first().map_or(0, Vec::len)
    }

    pub fn tau_d(&self) -> usize {
        self.mu.first().map_or(0, |v| v.len())
    }

    pub fn tau_c(&self) -> usize {
        self.omega.first().and_then(|w| w.first()).map_or(0, |v| v.len())
    }
}

/// DFT column `index` of length `len`: unit-modulus entries, squared norm `len`.
fn dft_column<T: Real>(len: usize, index: usize) -> DVector<Cx<T>> {
    DVector::from_fn(len, |n, _| {
        let turns = ((index * n) % len) as f64 / len as f64;
        cis(T::lit(std::f64::consts::TAU * turns))
    })
}

/// Pilots built from DFT columns. Element `m` uses the columns rotated by `m`
/// so that sub-frames do not repeat the same sequence.
pub fn build_pilots<T: Real>(k_users: usize, m_irs: usize, tau_d: usize, tau_c: usize) -> Result<PilotBook<T>> {
    if tau_d < k_users {
        return Err(Error::PilotTooShort { tau: tau_d, users: k_users });
    }
    if tau_c < k_users {
        return Err(Error::PilotTooShort { tau: tau_c, users: k_users });
    }
    let mu = (0..k_users).map(|k| dft_column(tau_d, k)).collect();
    let omega = (0..k_users)
        .map(|k| (0..m_irs).map(|m| dft_column(tau_c, (k + m) % tau_c)).collect())
        .collect();
    Ok(PilotBook { mu, omega })
}

/// Signals received at the BS during training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBlocks<T: Real> {
    /// `Q^d`, N×τ_d.
    pub q_direct: DMatrix<Cx<T>>,
    /// `Q^r_m`, N×τ_c for every IRS element.
    pub q_reflect: Vec<DMatrix<Cx<T>>>,
}

/// Builds `Q^d` and `Q^r_m`. With `attack_on`, the eavesdropper transmits the
/// attacked user's pilots at power `P_e`.
pub fn simulate_uplink_training<T: Real>(
    real: &ChannelRealization<T>,
    pilots: &PilotBook<T>,
    powers: &PowerSpec<T>,
    attacked: usize,
    attack_on: bool,
) -> Result<TrainingBlocks<T>> {
    let k_users = pilots.k_users();
    let m_irs = real.m_irs();
    if real.h.k_users() != k_users || powers.p_uplink.len() != k_users {
        return Err(Error::Dimension("users in realization, pilots and powers differ".into()));
    }
    if pilots.m_irs() != m_irs {
        return Err(Error::Dimension(format!("pilots for {} IRS elements, channel has {m_irs}", pilots.m_irs())));
    }
    if attacked >= k_users {
        return Err(Error::InvalidConfig(format!("attacked user {attacked} out of range")));
    }
    let n = real.n_bs();
    let amp = |p: T| creal(p.sqrt());

    let mut q_direct = DMatrix::zeros(n, pilots.tau_d());
    for k in 0..k_users {
        q_direct += (real.h.get(Terminal::User(k)) * amp(powers.p_uplink[k])) * pilots.mu[k].transpose();
    }
    if attack_on {
        q_direct += (&real.h.eve * amp(powers.p_eve)) * pilots.mu[attacked].transpose();
    }

    let q_reflect = (0..m_irs)
        .map(|m| {
            let state = PhaseVector::single(m_irs, m);
            let mut q = DMatrix::zeros(n, pilots.tau_c());
            for k in 0..k_users {
                let g = real.end_to_end(Terminal::User(k), &state);
                q += (g * amp(powers.p_uplink[k])) * pilots.omega[k][m].transpose();
            }
            if attack_on {
                let g = real.end_to_end(Terminal::Eve, &state);
                q += (g * amp(powers.p_eve)) * pilots.omega[attacked][m].transpose();
            }
            q
        })
        .collect();

    Ok(TrainingBlocks { q_direct, q_reflect })
}

/// BS-side channel estimates. For the attacked user they are contaminated by
/// the eavesdropper's channels.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedCsi<T: Real> {
    pub h_hat: Vec<DVector<Cx<T>>>,
    /// N×M per user; column `m` is `f̂_{k,m}`.
    pub f_hat: Vec<DMatrix<Cx<T>>>,
    pub attacked: usize,
    pub alpha_e: T,
}

impl<T: Real> EstimatedCsi<T> {
    pub fn k_users(&self) -> usize {
        self.h_hat.len()
    }

    /// `ĝ_k(x) = ĥ_k + Σ_m x_m f̂_{k,m}`.
    pub fn g_hat(&self, k: usize, x: &DVector<Cx<T>>) -> DVector<Cx<T>> {
        &self.h_hat[k] + &self.f_hat[k] * x
    }
}

/// Projects the received blocks onto each user's pilots and cancels the
/// direct channel from the reflected sub-frames.
pub fn estimate_channels<T: Real>(
    blocks: &TrainingBlocks<T>,
    pilots: &PilotBook<T>,
    powers: &PowerSpec<T>,
    attacked: usize,
) -> EstimatedCsi<T> {
    let k_users = pilots.k_users();
    let m_irs = blocks.q_reflect.len();
    let n = blocks.q_direct.nrows();
    let tau_d = T::lit(pilots.tau_d() as f64);
    let tau_c = T::lit(pilots.tau_c() as f64);

    let mut h_hat = Vec::with_capacity(k_users);
    let mut f_hat = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let root = powers.p_uplink[k].sqrt();
        let h = &blocks.q_direct * vconj(&pilots.mu[k]) * creal(T::one() / (root * tau_d));
        let mut f = DMatrix::zeros(n, m_irs);
        for (m, q) in blocks.q_reflect.iter().enumerate() {
            let col = q * vconj(&pilots.omega[k][m]) * creal(T::one() / (root * tau_c)) - &h;
            f.set_column(m, &col);
        }
        h_hat.push(h);
        f_hat.push(f);
    }
    EstimatedCsi { h_hat, f_hat, attacked, alpha_e: powers.alpha_e(attacked) }
}

/// Closed-form contaminated estimates: exact for every user except the
/// attacked one, which gets `+√α_e` times the eavesdropper's channels.
pub fn contaminated_estimates_analytic<T: Real>(
    real: &ChannelRealization<T>,
    alpha_e: T,
    attacked: usize,
) -> EstimatedCsi<T> {
    let k_users = real.h.k_users();
    let root = creal(alpha_e.sqrt());
    let mut h_hat = Vec::with_capacity(k_users);
    let mut f_hat = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let t = Terminal::User(k);
        let mut h = real.h.get(t).clone();
        let mut f = real.cascade(t);
        if k == attacked {
            h += &real.h.eve * root;
            f += real.cascade(Terminal::Eve) * root;
        }
        h_hat.push(h);
        f_hat.push(f);
    }
    EstimatedCsi { h_hat, f_hat, attacked, alpha_e }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, ChannelSampler};
    use crate::scalar::{rel_err, vnorm};
    use crate::scenario::{CorrelationSet, Gains, PerTerminal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gram(vs: &[DVector<Cx<f64>>]) -> DMatrix<Cx<f64>> {
        DMatrix::from_fn(vs.len(), vs.len(), |i, j| vs[i].dotc(&vs[j]))
    }

    fn sampler(n: usize, m: usize, k: usize) -> ChannelSampler<f64> {
        let id_n = DMatrix::<Cx<f64>>::identity(n, n);
        let id_m = DMatrix::<Cx<f64>>::identity(m, m);
        let set = CorrelationSet {
            t: PerTerminal::new(vec![id_n.clone(); k], id_n.clone()),
            t_irs: id_n,
            r_irs: id_m.clone(),
            v: PerTerminal::new(vec![id_m.clone(); k], id_m),
        };
        let g = Gains { beta: 1.0, xi: 0.5 };
        ChannelSampler::new(&set, &PerTerminal::new(vec![g; k], Gains { beta: 0.7, xi: 0.3 })).unwrap()
    }

    fn powers(k: usize, p_eve: f64) -> PowerSpec<f64> {
        PowerSpec { p_t: 1.0, p_uplink: vec![1.0; k], p_eve, sigma2: 0.1, rho2: 0.1 }
    }

    #[test]
    fn single_user_pilot_gram() {
        let book = build_pilots::<f64>(1, 2, 3, 1).unwrap();
        let g = gram(&book.mu);
        assert!((g[(0, 0)].re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn four_user_direct_pilots_are_orthogonal() {
        let book = build_pilots::<f64>(4, 1, 4, 4).unwrap();
        let g = gram(&book.mu);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 4.0 } else { 0.0 };
                assert!((g[(i, j)] - creal(expect)).norm() < 1e-12, "({i},{j}) = {}", g[(i, j)]);
            }
        }
    }

    #[test]
    fn reflect_pilot_gram_per_element() {
        let book = build_pilots::<f64>(2, 5, 2, 3).unwrap();
        for m in 0..5 {
            let col: Vec<_> = (0..2).map(|k| book.omega[k][m].clone()).collect();
            let g = gram(&col);
            assert!((g[(0, 0)] - creal(3.0)).norm() < 1e-12);
            assert!((g[(1, 1)] - creal(3.0)).norm() < 1e-12);
            assert!(g[(0, 1)].norm() < 1e-12);
        }
    }

    #[test]
    fn short_pilots_rejected() {
        assert!(matches!(build_pilots::<f64>(3, 2, 2, 3), Err(Error::PilotTooShort { .. })));
        assert!(matches!(build_pilots::<f64>(3, 2, 3, 2), Err(Error::PilotTooShort { .. })));
    }

    #[test]
    fn single_user_direct_block_without_attack() {
        let s = sampler(3, 2, 1);
        let real = s.sample(&mut ChaCha8Rng::seed_from_u64(1));
        let book = build_pilots::<f64>(1, 2, 2, 2).unwrap();
        let mut pw = powers(1, 0.5);
        pw.p_uplink = vec![2.0];
        let blocks = simulate_uplink_training(&real, &book, &pw, 0, false).unwrap();
        let expect = (&real.h.users[0] * creal(2f64.sqrt())) * book.mu[0].transpose();
        assert!((blocks.q_direct - expect).norm() < 1e-14);
    }

    #[test]
    fn zero_power_attack_is_invisible() {
        let s = sampler(4, 3, 2);
        let real = s.sample(&mut ChaCha8Rng::seed_from_u64(2));
        let book = build_pilots::<f64>(2, 3, 2, 2).unwrap();
        let pw = powers(2, 0.0);
        let on = simulate_uplink_training(&real, &book, &pw, 1, true).unwrap();
        let off = simulate_uplink_training(&real, &book, &pw, 1, false).unwrap();
        assert_eq!(on, off);
    }

    #[test]
    fn reflect_block_matches_loop_accumulation() {
        let s = sampler(3, 4, 2);
        let real = s.sample(&mut ChaCha8Rng::seed_from_u64(3));
        let book = build_pilots::<f64>(2, 4, 3, 2).unwrap();
        let pw = PowerSpec { p_t: 1.0, p_uplink: vec![1.5, 0.8], p_eve: 0.6, sigma2: 0.1, rho2: 0.1 };
        let blocks = simulate_uplink_training(&real, &book, &pw, 0, true).unwrap();
        for m in 0..4 {
            for n in 0..3 {
                for t in 0..2 {
                    let mut acc = Cx::new(0.0, 0.0);
                    for k in 0..2 {
                        let path = real.h.users[k][n] + real.u[(n, m)] * real.a.users[k][m];
                        acc += path * pw.p_uplink[k].sqrt() * book.omega[k][m][t];
                    }
                    let path = real.h.eve[n] + real.u[(n, m)] * real.a.eve[m];
                    acc += path * pw.p_eve.sqrt() * book.omega[0][m][t];
                    assert!((blocks.q_reflect[m][(n, t)] - acc).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn estimates_exact_without_attack() {
        let s = sampler(5, 3, 2);
        let book = build_pilots::<f64>(2, 3, 2, 2).unwrap();
        let pw = powers(2, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let real = s.sample(&mut rng);
            let blocks = simulate_uplink_training(&real, &book, &pw, 0, false).unwrap();
            let est = estimate_channels(&blocks, &book, &pw, 0);
            for k in 0..2 {
                assert!(rel_err(&est.h_hat[k], &real.h.users[k]) < 1e-10);
                let f = real.cascade(Terminal::User(k));
                assert!((&est.f_hat[k] - &f).norm() / f.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn quarter_ratio_contaminates_by_half_eve_channel() {
        let s = sampler(4, 3, 2);
        let book = build_pilots::<f64>(2, 3, 2, 2).unwrap();
        let pw = powers(2, 0.25);
        let real = s.sample(&mut ChaCha8Rng::seed_from_u64(5));
        let blocks = simulate_uplink_training(&real, &book, &pw, 0, true).unwrap();
        let est = estimate_channels(&blocks, &book, &pw, 0);
        let diff = &est.h_hat[0] - &real.h.users[0];
        let expect = &real.h.eve * creal(0.5);
        assert!(vnorm(&(diff - expect)) < 1e-12);
        assert!(rel_err(&est.h_hat[1], &real.h.users[1]) < 1e-12);
    }

    #[test]
    fn analytic_zero_ratio_is_exact() {
        let s = sampler(3, 2, 1);
        let real = s.sample(&mut ChaCha8Rng::seed_from_u64(6));
        let est = contaminated_estimates_analytic(&real, 0.0, 0);
        assert_eq!(est.h_hat[0], real.h.users[0]);
        assert_eq!(est.f_hat[0], real.cascade(Terminal::User(0)));
    }

    #[test]
    fn contaminated_end_to_end_assembly() {
        let s = sampler(4, 5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let real = s.sample(&mut rng);
        let alpha = 0.5;
        let est = contaminated_estimates_analytic(&real, alpha, 1);
        let theta = PhaseVector::from_phases(&[0.2, 1.0, -2.0, 0.5, 3.1]);
        let ghat = est.g_hat(1, &theta.theta);
        let expect = real.end_to_end(Terminal::User(1), &theta) + real.end_to_end(Terminal::Eve, &theta) * creal(alpha.sqrt());
        assert!(rel_err(&ghat, &expect) < 1e-12);
        let x = DVector::from_fn(5, |_, _| complex_gaussian::<f64, _>(&mut rng));
        assert!(rel_err(&est.g_hat(0, &x), &real.end_to_end_raw(Terminal::User(0), &x)) < 1e-12);
    }
}
