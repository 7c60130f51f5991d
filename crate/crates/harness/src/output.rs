//! Results table: CSV with 17 significant digits plus a JSON run record.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use irsguard_core::downlink::Scheme;
use serde::Serialize;

use crate::config::{ExperimentConfig, ResolvedPlacement};
use crate::error::{HarnessError, Result};
use crate::experiment::{PointResult, SweepOutput};

pub const HEADER: [&str; 15] = [
    "sweep_value",
    "scheme",
    "user",
    "r_sec",
    "r",
    "r_e",
    "r_sec_std_err",
    "weighted_r_sec",
    "f_mu",
    "iterations",
    "converged",
    "zero_at_init",
    "m_irs",
    "n_trials",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub scheme: String,
    pub user: usize,
    pub r_sec: f64,
    pub r: f64,
    pub r_e: f64,
    pub r_sec_std_err: f64,
    pub weighted_r_sec: f64,
    /// Objective at convergence; NaN for the benchmark.
    pub f_mu: f64,
    pub iterations: usize,
    pub converged: bool,
    pub zero_at_init: bool,
    pub m_irs: usize,
    pub n_trials: usize,
    pub status: String,
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

fn parse_float(s: &str) -> Result<f64> {
    s.parse().map_err(|_| HarnessError::Table(format!("bad number `{s}`")))
}

fn parse_int(s: &str) -> Result<usize> {
    s.parse().map_err(|_| HarnessError::Table(format!("bad integer `{s}`")))
}

fn parse_bool(s: &str) -> Result<bool> {
    s.parse().map_err(|_| HarnessError::Table(format!("bad flag `{s}`")))
}

impl ResultRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            format_float(self.sweep_value),
            self.scheme.clone(),
            self.user.to_string(),
            format_float(self.r_sec),
            format_float(self.r),
            format_float(self.r_e),
            format_float(self.r_sec_std_err),
            format_float(self.weighted_r_sec),
            format_float(self.f_mu),
            self.iterations.to_string(),
            self.converged.to_string(),
            self.zero_at_init.to_string(),
            self.m_irs.to_string(),
            self.n_trials.to_string(),
            self.status.clone(),
        ]
    }

    pub fn from_record(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != HEADER.len() {
            return Err(HarnessError::Table(format!("expected {} fields, found {}", HEADER.len(), rec.len())));
        }
        Ok(Self {
            sweep_value: parse_float(&rec[0])?,
            scheme: rec[1].to_string(),
            user: parse_int(&rec[2])?,
            r_sec: parse_float(&rec[3])?,
            r: parse_float(&rec[4])?,
            r_e: parse_float(&rec[5])?,
            r_sec_std_err: parse_float(&rec[6])?,
            weighted_r_sec: parse_float(&rec[7])?,
            f_mu: parse_float(&rec[8])?,
            iterations: parse_int(&rec[9])?,
            converged: parse_bool(&rec[10])?,
            zero_at_init: parse_bool(&rec[11])?,
            m_irs: parse_int(&rec[12])?,
            n_trials: parse_int(&rec[13])?,
            status: rec[14].to_string(),
        })
    }

    /// Bitwise equality, treating NaN fields as equal.
    pub fn same_as(&self, other: &Self) -> bool {
        self.to_record() == other.to_record()
    }
}

/// One row per (point, scheme, user); failed points get one row per
/// requested scheme carrying the error.
pub fn rows_for(points: &[PointResult], cfg: &ExperimentConfig) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    let schemes: Vec<Scheme> = [Scheme::Proposed, Scheme::Benchmark]
        .into_iter()
        .filter(|s| match s {
            Scheme::Proposed => cfg.run.scheme.proposed(),
            Scheme::Benchmark => cfg.run.scheme.benchmark(),
        })
        .collect();
    for p in points {
        for &scheme in &schemes {
            let design = if scheme == Scheme::Proposed { p.design } else { None };
            let base = ResultRow {
                sweep_value: p.sweep_value,
                scheme: scheme.as_str().to_string(),
                user: 0,
                r_sec: f64::NAN,
                r: f64::NAN,
                r_e: f64::NAN,
                r_sec_std_err: f64::NAN,
                weighted_r_sec: f64::NAN,
                f_mu: design.map_or(f64::NAN, |d| d.objective),
                iterations: design.map_or(0, |d| d.iterations),
                converged: design.is_some_and(|d| d.converged),
                zero_at_init: design.is_some_and(|d| d.zero_at_init),
                m_irs: p.m_irs,
                n_trials: p.n_trials,
                status: "ok".to_string(),
            };
            match (p.scheme(scheme), &p.error) {
                (Some(report), _) => {
                    for (k, u) in report.users.iter().enumerate() {
                        rows.push(ResultRow {
                            user: k,
                            r_sec: u.secrecy,
                            r: u.rate,
                            r_e: u.leakage,
                            r_sec_std_err: u.secrecy_std_err,
                            weighted_r_sec: report.weighted_sum,
                            ..base.clone()
                        });
                    }
                }
                (None, err) => rows.push(ResultRow {
                    status: format!("error: {}", err.as_deref().unwrap_or("no result")),
                    ..base
                }),
            }
        }
    }
    rows
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.to_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let csv_err = |source| HarnessError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(HarnessError::Table(format!("unexpected header in {}", path.display())));
    }
    r.records().map(|rec| ResultRow::from_record(&rec.map_err(csv_err)?)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRecord {
    pub master: u64,
    pub placement: u64,
    pub derivation: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub sweep_value: f64,
    pub m_irs: usize,
    pub f_mu: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub zero_at_init: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub software: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    /// Which conjugation of the expectation formula the design used.
    pub expectation_convention: String,
    pub seeds: SeedRecord,
    pub placement: ResolvedPlacement,
    pub points: Vec<PointRecord>,
    pub config: ExperimentConfig,
}

pub fn run_meta(cfg: &ExperimentConfig, sweep: &SweepOutput) -> RunMeta {
    RunMeta {
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: sweep.kind.as_str(),
        expectation_convention: cfg.objective.convention.clone(),
        seeds: SeedRecord {
            master: cfg.run.master_seed,
            placement: sweep.placement.seed,
            derivation: "splitmix64 over (master, stream tag, trial index); trials shared across sweep points and schemes",
        },
        placement: sweep.placement.clone(),
        points: sweep
            .points
            .iter()
            .map(|p| PointRecord {
                sweep_value: p.sweep_value,
                m_irs: p.m_irs,
                f_mu: p.design.map(|d| d.objective),
                iterations: p.design.map(|d| d.iterations),
                converged: p.design.map(|d| d.converged),
                zero_at_init: p.design.map(|d| d.zero_at_init),
                error: p.error.clone(),
            })
            .collect(),
        config: cfg.clone(),
    }
}

pub struct EmittedFiles {
    pub csv: PathBuf,
    pub meta: PathBuf,
}

/// Writes `results.csv` and `meta.json` into `dir`, creating it if needed.
pub fn emit_results(cfg: &ExperimentConfig, sweep: &SweepOutput, dir: &Path) -> Result<EmittedFiles> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let csv_path = dir.join("results.csv");
    let meta_path = dir.join("meta.json");
    let file = fs::File::create(&csv_path).map_err(io(&csv_path))?;
    write_csv(&rows_for(&sweep.points, cfg), file).map_err(|source| HarnessError::Csv { path: csv_path.clone(), source })?;
    let meta = serde_json::to_string_pretty(&run_meta(cfg, sweep))?;
    fs::write(&meta_path, meta + "\n").map_err(io(&meta_path))?;
    Ok(EmittedFiles { csv: csv_path, meta: meta_path })
}
