use irsguard_core::downlink::Scheme;
use irsguard_harness::config::SchemeSelection;
use irsguard_harness::experiment::{run_fig1, run_fig2, run_single, thread_pool};
use irsguard_harness::output::{emit_results, read_csv, rows_for};
use irsguard_harness::ExperimentConfig;

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.system.m_irs = 8;
    cfg.run.n_trials = 30;
    cfg.fig1.m_values = vec![4, 8];
    cfg.fig2.m_irs = 8;
    cfg.fig2.n_points = 7;
    cfg
}

#[test]
fn csv_round_trips_bit_for_bit() {
    let cfg = small();
    let sweep = run_fig1(&cfg, &thread_pool(2).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_results(&cfg, &sweep, dir.path()).unwrap();
    let parsed = read_csv(&files.csv).unwrap();
    let direct = rows_for(&sweep.points, &cfg);
    assert_eq!(parsed.len(), direct.len());
    for (a, b) in parsed.iter().zip(&direct) {
        assert!(a.same_as(b));
        assert_eq!(a.r_sec.to_bits(), b.r_sec.to_bits());
        assert_eq!(a.r_sec_std_err.to_bits(), b.r_sec_std_err.to_bits());
    }
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let cfg = small();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    emit_results(&cfg, &run_fig2(&cfg, &thread_pool(1).unwrap()).unwrap(), a.path()).unwrap();
    emit_results(&cfg, &run_fig2(&cfg, &thread_pool(3).unwrap()).unwrap(), b.path()).unwrap();
    for name in ["results.csv", "meta.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn seed_changes_results() {
    let mut cfg = small();
    let pool = thread_pool(2).unwrap();
    let a = run_single(&cfg, &pool).unwrap();
    cfg.run.master_seed = 2;
    let b = run_single(&cfg, &pool).unwrap();
    assert_ne!(a.points[0].weighted_secrecy(Scheme::Benchmark), b.points[0].weighted_secrecy(Scheme::Benchmark));
}

#[test]
fn standard_error_halves_when_trials_quadruple() {
    let mut cfg = small();
    cfg.run.scheme = SchemeSelection::Benchmark;
    let pool = thread_pool(0).unwrap();
    let se = |n: usize| {
        let mut c = cfg.clone();
        c.run.n_trials = n;
        let out = run_single(&c, &pool).unwrap();
        out.points[0].scheme(Scheme::Benchmark).unwrap().users[0].secrecy_std_err
    };
    let ratio = se(400) / se(1600);
    assert!((ratio - 2.0).abs() <= 0.6, "SE ratio {ratio}");
}

#[test]
fn fig2_grid_contains_alignment_point() {
    let cfg = small();
    let sweep = run_fig2(&cfg, &thread_pool(2).unwrap()).unwrap();
    assert!(sweep.points.iter().any(|p| p.sweep_value == cfg.fig2.theta_star));
    assert!(sweep.points.windows(2).all(|w| w[0].sweep_value < w[1].sweep_value));
    assert!(sweep.points.iter().all(|p| p.m_irs == 8 && p.error.is_none()));
}
