//! Alternating minimization of the stochastic SRZF objective.
//!
//! For fixed IRS phases the objective is a sum of moduli of affine functions
//! of the expansion coefficients; each user decouples and has a closed-form
//! minimizer. For fixed coefficients it is convex in `conj(y)`; the
//! unit-modulus constraint is relaxed to the unit disk, solved by projected
//! subgradient, and the result is projected back onto the unit circle.

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};

use crate::objective::{affine_coefficients_x, affine_coefficients_y, f_mu, AffineForm, AlignmentParams, ObjectiveSpec};
use crate::scalar::{cis, cone, creal, czero, modulus, phase, vnorm_sqr, Cx, Real};
use crate::scenario::Terminal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaInit {
    AllOnes,
    RandomPhase(u64),
    /// Phases of the principal eigenvector of `Σ_k ξ_k Tr(T_irs) (R_irs ∘ V_kᵀ)`
    /// over the legitimate users: the configuration maximizing their expected
    /// reflected gain.
    StatisticalAlignment,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YSolverConfig<T> {
    /// Step at inner iteration `i` of a block is `step_scale / √i` along the
    /// normalized subgradient.
    pub step_scale: T,
    pub max_inner_iters: usize,
    pub objective_tol: T,
    /// Restart from the best point with a halved step every this many
    /// iterations; 0 disables restarts.
    pub restart_period: usize,
}

impl<T: Real> Default for YSolverConfig<T> {
    fn default() -> Self {
        Self { step_scale: T::one(), max_inner_iters: 500, objective_tol: T::lit(1e-8), restart_period: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig<T> {
    /// Stop once `‖θ^{t+1} − θ^t‖² < eps_theta`.
    pub eps_theta: T,
    /// Stop once `‖C^{t+1} − C^t‖_F² < eps_c`.
    pub eps_c: T,
    pub max_outer_iters: usize,
    pub y_solver: YSolverConfig<T>,
    pub theta_init: ThetaInit,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            eps_theta: T::lit(1e-6),
            eps_c: T::lit(1e-6),
            max_outer_iters: 50,
            y_solver: YSolverConfig::default(),
            theta_init: ThetaInit::StatisticalAlignment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Coefficients at the initial phases.
    Init,
    /// Relaxed phase update (`|y_m| ≤ 1`).
    Relaxed,
    /// After projecting the relaxed phases onto the unit circle.
    Projected,
    /// Coefficient update at the projected phases.
    Coefficients,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep<T> {
    pub iteration: usize,
    pub kind: StepKind,
    pub objective: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult<T: Real> {
    /// Expansion coefficients `c_k`.
    pub c: Vec<DVector<Cx<T>>>,
    /// Unit-modulus IRS phases.
    pub theta: DVector<Cx<T>>,
    /// Objective of the returned design.
    pub objective: T,
    pub objective_trace: Vec<TraceStep<T>>,
    pub converged: bool,
    pub iterations: usize,
    /// The coefficient step alone drove the objective to (numerical) zero at `θ^0`.
    pub zero_at_init: bool,
    /// Users whose alignment target was unreachable at the returned phases.
    pub unreachable: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XSolution<T: Real> {
    pub xs: Vec<DVector<Cx<T>>>,
    pub objective: T,
    pub unreachable: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YSolution<T: Real> {
    pub y: DVector<Cx<T>>,
    pub objective: T,
    pub iterations: usize,
}

fn is_negligible<T: Real>(sq_norm: T, scale: T) -> bool {
    let tiny = T::eps() * scale.max(T::tiny());
    sq_norm <= tiny * tiny
}

/// Minimum-norm solution of `d·x = b`; `None` when `d` vanishes.
fn min_norm_single<T: Real>(d: &DVector<Cx<T>>, b: Cx<T>, scale: T) -> Option<DVector<Cx<T>>> {
    let nd = vnorm_sqr(d);
    if is_negligible(nd, scale) {
        return None;
    }
    Some(d.map(|z| z.conj()) * (b / creal(nd)))
}

/// Minimizes `|d1·x − b1| + w·|d2·x − b2|` over `x`, returning the
/// minimum-norm minimizer. Exact in every case: full rank gives zero
/// residuals, a rank-one stack reduces to a weighted two-point problem on a
/// single complex coordinate.
fn solve_stacked<T: Real>(
    d1: &DVector<Cx<T>>,
    b1: Cx<T>,
    d2: &DVector<Cx<T>>,
    b2: Cx<T>,
    w: T,
    scale: T,
) -> DVector<Cx<T>> {
    let m = d1.len();
    let n1 = vnorm_sqr(d1);
    let n2 = vnorm_sqr(d2);
    let c12 = d1.iter().zip(d2.iter()).fold(czero(), |acc, (a, b)| acc + *a * b.conj());
    let det = n1 * n2 - c12.norm_sqr();
    if det > T::lit(1e-12) * n1 * n2 && !is_negligible(n1, scale) && !is_negligible(n2, scale) {
        let det = creal(det);
        let l1 = (b1 * creal(n2) - c12 * b2) / det;
        let l2 = (b2 * creal(n1) - c12.conj() * b1) / det;
        return d1.map(|z| z.conj()) * l1 + d2.map(|z| z.conj()) * l2;
    }
    // Rank ≤ 1: both rows are multiples of a common unit direction u.
    let (lead, lead_sq) = if n1 >= n2 { (d1, n1) } else { (d2, n2) };
    if is_negligible(lead_sq, scale) {
        return DVector::zeros(m);
    }
    let u = lead / creal(lead_sq.sqrt());
    let proj = |d: &DVector<Cx<T>>| d.iter().zip(u.iter()).fold(czero(), |acc, (a, b)| acc + *a * b.conj());
    let alpha = proj(d1);
    let gamma = proj(d2);
    let a_abs = modulus(alpha);
    let g_abs = modulus(gamma);
    let s = if a_abs == T::zero() && g_abs == T::zero() {
        czero()
    } else if a_abs == T::zero() {
        if w > T::zero() {
            b2 / gamma
        } else {
            czero()
        }
    } else if g_abs == T::zero() || w == T::zero() || a_abs >= w * g_abs {
        b1 / alpha
    } else {
        b2 / gamma
    };
    u.map(|z| z.conj()) * s
}

/// Coefficient step: for fixed phases `y`, every user's coefficients are the
/// minimum-norm minimizer of its alignment term; the attacked user also
/// carries the eavesdropper leakage term.
pub fn solve_x_subproblem<T: Real>(spec: &ObjectiveSpec<T>, params: &AlignmentParams<T>, y: &DVector<Cx<T>>) -> XSolution<T> {
    let k_users = params.k_users();
    let m = params.m_irs();
    let w = spec.leakage_weight();
    let mut xs = Vec::with_capacity(k_users);
    let mut unreachable = Vec::new();
    for k in 0..k_users {
        let form = affine_coefficients_x(params, Terminal::User(k), y);
        let b = spec.printed_target(k, params.convention) - form.offset;
        let scale = modulus(form.offset).max(modulus(b));
        let x = if k == spec.attacked && w > T::zero() {
            let eve = affine_coefficients_x(params, Terminal::Eve, y);
            let b_eve = -eve.offset;
            let scale = scale.max(modulus(eve.offset));
            solve_stacked(&form.coeffs, b, &eve.coeffs, b_eve, w, scale)
        } else {
            min_norm_single(&form.coeffs, b, scale).unwrap_or_else(|| DVector::zeros(m))
        };
        let resid = modulus(form.eval(&x) - spec.printed_target(k, params.convention));
        if vnorm_sqr(&form.coeffs) == T::zero() && resid > T::zero() {
            unreachable.push(k);
        }
        xs.push(x);
    }
    let objective = f_mu(spec, params, &xs, y);
    XSolution { xs, objective, unreachable }
}

/// `Σ_t w_t |c_t + e_t·z|` with `z = conj(y)`.
struct ConjAffineSum<T: Real> {
    terms: Vec<(Cx<T>, DVector<Cx<T>>, T)>,
}

impl<T: Real> ConjAffineSum<T> {
    fn value(&self, z: &DVector<Cx<T>>) -> T {
        self.terms.iter().fold(T::zero(), |acc, (c, e, w)| {
            let u = *c + e.iter().zip(z.iter()).fold(czero(), |s, (a, b)| s + *a * *b);
            acc + *w * modulus(u)
        })
    }

    /// Steepest-ascent direction in `z` (real gradient of the moduli, written complex).
    fn subgradient(&self, z: &DVector<Cx<T>>) -> DVector<Cx<T>> {
        let mut g = DVector::zeros(z.len());
        for (c, e, w) in &self.terms {
            let u = *c + e.iter().zip(z.iter()).fold(czero(), |s, (a, b)| s + *a * *b);
            let mag = modulus(u);
            if mag > T::zero() {
                let unit = u * creal(*w / mag);
                for (gi, ei) in g.iter_mut().zip(e.iter()) {
                    *gi += ei.conj() * unit;
                }
            }
        }
        g
    }
}

fn project_disk<T: Real>(z: &mut DVector<Cx<T>>) {
    for v in z.iter_mut() {
        let r = modulus(*v);
        if r > T::one() {
            *v /= creal(r);
        }
    }
}

/// Phase step on the relaxed set `|y_m| ≤ 1`, warm-started at `y_warm`.
/// Never returns a point worse than the (projected) warm start.
pub fn solve_y_subproblem<T: Real>(
    spec: &ObjectiveSpec<T>,
    params: &AlignmentParams<T>,
    xs: &[DVector<Cx<T>>],
    y_warm: &DVector<Cx<T>>,
    cfg: &YSolverConfig<T>,
) -> YSolution<T> {
    let mut terms = Vec::with_capacity(xs.len() + 1);
    for (k, x) in xs.iter().enumerate() {
        let AffineForm { offset, coeffs } = affine_coefficients_y(params, Terminal::User(k), x);
        terms.push((offset - spec.printed_target(k, params.convention), coeffs, T::one()));
    }
    let w = spec.leakage_weight();
    if w > T::zero() {
        let AffineForm { offset, coeffs } = affine_coefficients_y(params, Terminal::Eve, &xs[spec.attacked]);
        terms.push((offset, coeffs, w));
    }
    let objective = ConjAffineSum { terms };

    let mut z = y_warm.map(|v| v.conj());
    project_disk(&mut z);
    let mut best_z = z.clone();
    let mut best = objective.value(&z);
    let mut iterations = 0;
    if best <= cfg.objective_tol {
        return YSolution { y: y_warm.clone(), objective: f_mu(spec, params, xs, y_warm), iterations };
    }

    let mut step_scale = cfg.step_scale;
    let mut block_iter = 0usize;
    while iterations < cfg.max_inner_iters {
        iterations += 1;
        block_iter += 1;
        let g = objective.subgradient(&z);
        let g_norm = vnorm_sqr(&g).sqrt();
        if g_norm == T::zero() {
            break;
        }
        let step = step_scale / T::lit(block_iter as f64).sqrt();
        z -= g * creal(step / g_norm);
        project_disk(&mut z);
        let value = objective.value(&z);
        if value < best {
            best = value;
            best_z.copy_from(&z);
        }
        if best <= cfg.objective_tol {
            break;
        }
        if cfg.restart_period > 0 && block_iter == cfg.restart_period {
            z.copy_from(&best_z);
            step_scale *= T::lit(0.5);
            block_iter = 0;
        }
    }
    let y = best_z.map(|v| v.conj());
    let objective = f_mu(spec, params, xs, &y);
    YSolution { y, objective, iterations }
}

/// Radial projection onto the unit circle; zero entries map to 1.
pub fn project_unit_circle<T: Real>(y_hat: &DVector<Cx<T>>) -> DVector<Cx<T>> {
    y_hat.map(|z| if z.norm_sqr() == T::zero() { cone() } else { cis(phase(z)) })
}

/// Initial phases for the alternating loop.
pub fn initial_theta<T: Real>(params: &AlignmentParams<T>, init: ThetaInit) -> DVector<Cx<T>> {
    let m = params.m_irs();
    match init {
        ThetaInit::AllOnes => DVector::from_element(m, cone()),
        ThetaInit::RandomPhase(seed) => {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            DVector::from_fn(m, |_, _| cis(T::lit(rng.random::<f64>() * std::f64::consts::TAU)))
        }
        ThetaInit::StatisticalAlignment => {
            let mut gram = nalgebra::DMatrix::zeros(m, m);
            for k in 0..params.k_users() {
                let t = Terminal::User(k);
                gram += params.reflect_gram(t) * creal(*params.xi_tr_scale.get(t));
            }
            let eig = SymmetricEigen::new(gram);
            let lead = eig
                .eigenvalues
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if *v > eig.eigenvalues[best] { i } else { best });
            project_unit_circle(&eig.eigenvectors.column(lead).into_owned())
        }
    }
}

fn coefficient_change<T: Real>(a: &[DVector<Cx<T>>], b: &[DVector<Cx<T>>]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + vnorm_sqr(&(x - y)))
}

/// Alternates coefficient and relaxed-phase steps until either update falls
/// below its tolerance or the iteration cap is hit, returning the best
/// unit-modulus iterate seen.
pub fn run_alternating<T: Real>(spec: &ObjectiveSpec<T>, params: &AlignmentParams<T>, config: &OptimizerConfig<T>) -> DesignResult<T> {
    let mut theta = initial_theta(params, config.theta_init);
    let init = solve_x_subproblem(spec, params, &theta);
    let mut trace = vec![TraceStep { iteration: 0, kind: StepKind::Init, objective: init.objective }];
    let zero_at_init = init.objective <= config.y_solver.objective_tol;

    let mut best_c = init.xs.clone();
    let mut best_theta = theta.clone();
    let mut best = init.objective;
    let mut best_unreachable = init.unreachable;
    let mut xs = init.xs;
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=config.max_outer_iters {
        iterations = t;
        let relaxed = solve_y_subproblem(spec, params, &xs, &theta, &config.y_solver);
        trace.push(TraceStep { iteration: t, kind: StepKind::Relaxed, objective: relaxed.objective });

        let theta_next = project_unit_circle(&relaxed.y);
        let projected = f_mu(spec, params, &xs, &theta_next);
        trace.push(TraceStep { iteration: t, kind: StepKind::Projected, objective: projected });
        if projected < best {
            best = projected;
            best_c = xs.clone();
            best_theta = theta_next.clone();
        }

        let next = solve_x_subproblem(spec, params, &theta_next);
        trace.push(TraceStep { iteration: t, kind: StepKind::Coefficients, objective: next.objective });
        if next.objective < best {
            best = next.objective;
            best_c = next.xs.clone();
            best_theta = theta_next.clone();
            best_unreachable = next.unreachable.clone();
        }

        let d_theta = vnorm_sqr(&(&theta_next - &theta));
        let d_c = coefficient_change(&next.xs, &xs);
        theta = theta_next;
        xs = next.xs;
        if d_theta < config.eps_theta || d_c < config.eps_c {
            converged = true;
            break;
        }
    }

    DesignResult {
        c: best_c,
        theta: best_theta,
        objective: best,
        objective_trace: trace,
        converged,
        iterations,
        zero_at_init,
        unreachable: best_unreachable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{alignment_e, ExpectationConvention};
    use crate::scalar::cx;
    use crate::scenario::PerTerminal;
    use nalgebra::DMatrix;

    fn scalar_params(beta: f64, xi: f64, beta_e: f64, xi_e: f64) -> AlignmentParams<f64> {
        let one = DMatrix::from_element(1, 1, cone());
        AlignmentParams {
            beta_tr: PerTerminal::new(vec![beta], beta_e),
            xi_tr_scale: PerTerminal::new(vec![xi], xi_e),
            r_irs: one.clone(),
            v: PerTerminal::new(vec![one.clone()], one),
            convention: ExpectationConvention::AsPrinted,
        }
    }

    #[test]
    fn target_at_offset_gives_zero_coefficients() {
        let p = scalar_params(2.0, 1.0, 0.0, 1.0);
        let spec = ObjectiveSpec { mu: 0.0, zeta: vec![creal(2.0)], attacked: 0, alpha_e: 0.5, include_alpha_in_leakage: false };
        let sol = solve_x_subproblem(&spec, &p, &DVector::from_element(1, cone()));
        assert_eq!(sol.xs[0][0], czero());
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn scalar_least_norm_solve() {
        // offset 0, d = 2 (ξTr = 2, y = 1), target 6 → x = 6·conj(2)/4 = 3.
        // With d = 2 and b = 6 the min-norm solution is conj(d)·b/|d|² = 3.
        let p = scalar_params(0.0, 2.0, 0.0, 1.0);
        let spec = ObjectiveSpec { mu: 0.0, zeta: vec![creal(6.0)], attacked: 0, alpha_e: 0.5, include_alpha_in_leakage: false };
        let sol = solve_x_subproblem(&spec, &p, &DVector::from_element(1, cone()));
        assert!((sol.xs[0][0] - creal(3.0)).norm() < 1e-14);
        assert!(sol.objective < 1e-14);
        // b = 6 − offset with offset 3 → x = 1.5.
        let p = scalar_params(3.0, 2.0, 0.0, 1.0);
        let sol = solve_x_subproblem(&spec, &p, &DVector::from_element(1, cone()));
        assert!((sol.xs[0][0] - creal(1.5)).norm() < 1e-14);
    }

    #[test]
    fn unreachable_target_reported() {
        let p = scalar_params(1.0, 1.0, 0.0, 1.0);
        let spec = ObjectiveSpec { mu: 0.0, zeta: vec![creal(4.0)], attacked: 0, alpha_e: 0.5, include_alpha_in_leakage: false };
        let sol = solve_x_subproblem(&spec, &p, &DVector::zeros(1));
        assert_eq!(sol.unreachable, vec![0]);
        assert_eq!(sol.xs[0][0], czero());
        assert!((sol.objective - 3.0).abs() < 1e-14);
    }

    #[test]
    fn stacked_full_rank_zero_residuals() {
        let d1 = DVector::from_vec(vec![cx(1.0, 0.5), cx(-0.3, 0.2), cx(0.0, 1.0), cx(2.0, 0.0)]);
        let d2 = DVector::from_vec(vec![cx(0.1, 0.0), cx(1.0, -1.0), cx(0.4, 0.4), cx(-0.5, 0.3)]);
        let b1 = cx(3.0, -1.0);
        let b2 = cx(-0.7, 0.2);
        let x = solve_stacked(&d1, b1, &d2, b2, 1.0, 1.0);
        let r1 = (d1.transpose() * &x)[0] - b1;
        let r2 = (d2.transpose() * &x)[0] - b2;
        assert!(r1.norm() < 1e-12 && r2.norm() < 1e-12);
    }

    #[test]
    fn stacked_rank_deficient_picks_heavier_point() {
        let d = DVector::from_vec(vec![cx(1.0, 0.0), cx(0.0, 1.0)]);
        let d2 = &d * cx(0.5, 0.0);
        // |α| = √2 > w|γ| = √2/2 → alignment equation met exactly.
        let x = solve_stacked(&d, cx(1.0, 0.0), &d2, cx(1.0, 0.0), 1.0, 1.0);
        assert!(((d.transpose() * &x)[0] - cx(1.0, 0.0)).norm() < 1e-14);
        // With weight 4 the leakage point dominates.
        let x = solve_stacked(&d, cx(1.0, 0.0), &d2, cx(1.0, 0.0), 4.0, 1.0);
        assert!(((d2.transpose() * &x)[0] - cx(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn y_step_keeps_optimal_warm_start() {
        let p = scalar_params(2.0, 1.0, 0.0, 1.0);
        let spec = ObjectiveSpec { mu: 0.0, zeta: vec![creal(2.0)], attacked: 0, alpha_e: 0.5, include_alpha_in_leakage: false };
        let warm = DVector::from_element(1, cis(0.3));
        let sol = solve_y_subproblem(&spec, &p, &[DVector::zeros(1)], &warm, &YSolverConfig::default());
        assert_eq!(sol.y, warm);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn y_step_scalar_geometry() {
        // |c + e·conj(y)| with c = 0.3 − 0.2j, e = 0.8j: zero at conj(y) = −c/e, inside the disk.
        let one = DMatrix::from_element(1, 1, cone());
        let p = AlignmentParams {
            beta_tr: PerTerminal::new(vec![0.0], 0.0),
            xi_tr_scale: PerTerminal::new(vec![1.0], 1.0),
            r_irs: one.clone(),
            v: PerTerminal::new(vec![one.clone()], one),
            convention: ExpectationConvention::AsPrinted,
        };
        let c = cx(0.3, -0.2);
        let spec = ObjectiveSpec { mu: 0.0, zeta: vec![-c], attacked: 0, alpha_e: 0.5, include_alpha_in_leakage: false };
        let x = DVector::from_element(1, cx(0.0, 0.8));
        let sol = solve_y_subproblem(&spec, &p, std::slice::from_ref(&x), &DVector::from_element(1, cone()), &YSolverConfig::default());
        let zopt = -c / cx(0.0, 0.8);
        assert!(sol.objective < 1e-3, "objective {}", sol.objective);
        assert!((sol.y[0].conj() - zopt).norm() < 2e-3);
        assert!(modulus(sol.y[0]) <= 1.0 + 1e-12);
        let _ = alignment_e(&p, Terminal::User(0), &x, &sol.y);
    }

    #[test]
    fn projection_cases() {
        let y = DVector::from_vec(vec![cis(std::f64::consts::PI / 3.0) * 0.5, czero(), cis(1.1)]);
        let p = project_unit_circle(&y);
        assert!((p[0] - cis(std::f64::consts::PI / 3.0)).norm() < 1e-15);
        assert_eq!(p[1], cone());
        assert!((p[2] - cis(1.1)).norm() < 1e-12);
    }

    #[test]
    fn fixed_point_terminates_after_one_iteration() {
        let p = scalar_params(2.0, 1.0, 0.0, 1.0);
        let spec = ObjectiveSpec { mu: 0.0, zeta: vec![creal(2.0)], attacked: 0, alpha_e: 0.5, include_alpha_in_leakage: false };
        let cfg = OptimizerConfig { theta_init: ThetaInit::AllOnes, ..OptimizerConfig::default() };
        let res = run_alternating(&spec, &p, &cfg);
        assert!(res.zero_at_init);
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.theta, DVector::from_element(1, cone()));
    }

    #[test]
    fn statistical_alignment_matches_rank_one_steering() {
        use crate::scenario::build_exponential_correlation;
        let r = build_exponential_correlation(6, cis(0.9f64)).unwrap();
        let v = build_exponential_correlation(6, cis(-0.4f64)).unwrap();
        let p = AlignmentParams {
            beta_tr: PerTerminal::new(vec![1.0], 1.0),
            xi_tr_scale: PerTerminal::new(vec![1.0], 1.0),
            r_irs: r.clone(),
            v: PerTerminal::new(vec![v.clone()], v),
            convention: ExpectationConvention::AsPrinted,
        };
        let theta = initial_theta(&p, ThetaInit::StatisticalAlignment);
        // Reflected gain yᴴ G y reaches its unit-modulus maximum M².
        let g = p.reflect_gram(Terminal::User(0));
        let gain = theta.dotc(&(&g * &theta)).re;
        assert!((gain - 36.0).abs() < 1e-9, "gain {gain}");
    }
}
