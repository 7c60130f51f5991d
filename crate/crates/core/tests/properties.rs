use irsguard_core::channel::complex_gaussian;
use irsguard_core::objective::{alignment_e, f_mu, AlignmentParams, ExpectationConvention, ObjectiveSpec};
use irsguard_core::optimizer::project_unit_circle;
use irsguard_core::scalar::{cis, Cx};
use irsguard_core::scenario::{build_exponential_correlation, path_loss};
use irsguard_core::{PerTerminal, Terminal};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian_vec(rng: &mut ChaCha8Rng, m: usize) -> DVector<Cx<f64>> {
    DVector::from_fn(m, |_, _| complex_gaussian::<f64, _>(rng))
}

fn psd(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<Cx<f64>> {
    let a = DMatrix::from_fn(m, m, |_, _| complex_gaussian::<f64, _>(rng));
    &a * a.adjoint()
}

fn instance(seed: u64, m: usize, convention: ExpectationConvention) -> AlignmentParams<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AlignmentParams {
        beta_tr: PerTerminal::new(vec![0.5 + rng.random::<f64>(), 0.5 + rng.random::<f64>()], 0.5 + rng.random::<f64>()),
        xi_tr_scale: PerTerminal::new(vec![0.5 + rng.random::<f64>(), 0.5 + rng.random::<f64>()], 0.5 + rng.random::<f64>()),
        r_irs: psd(&mut rng, m),
        v: PerTerminal::new(vec![psd(&mut rng, m), psd(&mut rng, m)], psd(&mut rng, m)),
        convention,
    }
}

fn convention(flag: bool) -> ExpectationConvention {
    if flag {
        ExpectationConvention::Conjugated
    } else {
        ExpectationConvention::AsPrinted
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alignment_is_linear_in_x(seed in any::<u64>(), m in 1usize..6, conj in any::<bool>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let p = instance(seed, m, convention(conj));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
        let (x1, x2, y) = (gaussian_vec(&mut rng, m), gaussian_vec(&mut rng, m), gaussian_vec(&mut rng, m));
        let (ca, cb) = (Cx::new(a, b), Cx::new(b, -a));
        // The constant term is affine, so compare the increments only.
        let zero = DVector::zeros(m);
        // The conjugated convention swaps which argument enters conjugated.
        let (sa, sb) = if conj { (ca.conj(), cb.conj()) } else { (ca, cb) };
        for t in [Terminal::User(0), Terminal::User(1), Terminal::Eve] {
            let e = |x: &DVector<Cx<f64>>| alignment_e(&p, t, x, &y) - alignment_e(&p, t, &zero, &y);
            let lhs = e(&(&x1 * ca + &x2 * cb));
            let rhs = e(&x1) * sa + e(&x2) * sb;
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn alignment_is_conjugate_linear_in_y(seed in any::<u64>(), m in 1usize..6, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let p = instance(seed, m, ExpectationConvention::AsPrinted);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51);
        let (x, y1, y2) = (gaussian_vec(&mut rng, m), gaussian_vec(&mut rng, m), gaussian_vec(&mut rng, m));
        let (ca, cb) = (Cx::new(a, b), Cx::new(-b, a));
        let zero = DVector::zeros(m);
        let e = |y: &DVector<Cx<f64>>| alignment_e(&p, Terminal::Eve, &x, y) - alignment_e(&p, Terminal::Eve, &x, &zero);
        let lhs = e(&(&y1 * ca + &y2 * cb));
        let rhs = e(&y1) * ca.conj() + e(&y2) * cb.conj();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn objective_is_nonnegative_and_convex_in_x(seed in any::<u64>(), m in 1usize..6, mu in 0.0f64..4.0) {
        let p = instance(seed, m, ExpectationConvention::Conjugated);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
        let spec = ObjectiveSpec {
            mu,
            zeta: vec![Cx::new(1.0 + rng.random::<f64>(), 0.0), Cx::new(2.0, 0.5)],
            attacked: 0,
            alpha_e: 0.5,
            include_alpha_in_leakage: rng.random::<bool>(),
        };
        let y = gaussian_vec(&mut rng, m);
        let xa = vec![gaussian_vec(&mut rng, m), gaussian_vec(&mut rng, m)];
        let xb = vec![gaussian_vec(&mut rng, m), gaussian_vec(&mut rng, m)];
        let mid: Vec<_> = xa.iter().zip(&xb).map(|(a, b)| (a + b) * Cx::new(0.5, 0.0)).collect();
        let (fa, fb, fm) = (f_mu(&spec, &p, &xa, &y), f_mu(&spec, &p, &xb, &y), f_mu(&spec, &p, &mid, &y));
        prop_assert!(fa >= 0.0 && fb >= 0.0 && fm >= 0.0);
        prop_assert!(fm <= 0.5 * (fa + fb) + 1e-9 * (1.0 + fa + fb));
    }

    #[test]
    fn objective_is_convex_in_y(seed in any::<u64>(), m in 1usize..6) {
        let p = instance(seed, m, ExpectationConvention::AsPrinted);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(3));
        let spec = ObjectiveSpec { mu: 1.0, zeta: vec![Cx::new(2.0, 0.0), Cx::new(1.0, 0.0)], attacked: 1, alpha_e: 1.0, include_alpha_in_leakage: false };
        let xs = vec![gaussian_vec(&mut rng, m), gaussian_vec(&mut rng, m)];
        let (ya, yb) = (gaussian_vec(&mut rng, m), gaussian_vec(&mut rng, m));
        let ym = (&ya + &yb) * Cx::new(0.5, 0.0);
        let (fa, fb, fm) = (f_mu(&spec, &p, &xs, &ya), f_mu(&spec, &p, &xs, &yb), f_mu(&spec, &p, &xs, &ym));
        prop_assert!(fm <= 0.5 * (fa + fb) + 1e-9 * (1.0 + fa + fb));
    }

    #[test]
    fn path_loss_decreases_with_distance(d in 0.5f64..200.0, extra in 1e-3f64..50.0, exponent in 0.5f64..5.0, db in -40.0f64..0.0) {
        let near = path_loss(db, d, 1.0, exponent).unwrap();
        let far = path_loss(db, d + extra, 1.0, exponent).unwrap();
        prop_assert!(near > far && far > 0.0);
    }

    #[test]
    fn exponential_correlation_is_hermitian_psd_with_unit_diagonal(size in 1usize..12, phase in 0.0f64..std::f64::consts::TAU) {
        let r = build_exponential_correlation(size, cis(phase)).unwrap();
        prop_assert!((&r - r.adjoint()).norm() < 1e-12);
        for i in 0..size {
            prop_assert!((r[(i, i)] - Cx::new(1.0, 0.0)).norm() < 1e-12);
        }
        let eig = r.symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l > -1e-9 * size as f64));
        prop_assert!((eig.eigenvalues.sum() - size as f64).abs() < 1e-9);
    }

    #[test]
    fn projection_lands_on_unit_circle(seed in any::<u64>(), m in 1usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = gaussian_vec(&mut rng, m);
        y[0] = Cx::new(0.0, 0.0);
        let p = project_unit_circle(&y);
        prop_assert!(p.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        for i in 1..m {
            prop_assert!((p[i] - y[i] / y[i].norm()).norm() < 1e-12);
        }
    }
}
