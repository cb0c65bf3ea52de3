//! Studies driven by an [`ExperimentConfig`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::registry::{file_stem, resolve, Method};
use crate::error::{Error, Result};
use crate::integrate::{integrate, StepStats};
use crate::stability::{DegreeReport, StabilityEvaluator, StiffLimit};
use crate::tableau::{reduce, stage_sets, underlying_first, underlying_second, StageSets, TableauJson, TensorJson};
use crate::verify::{order_of, OrderReport, DEFAULT_TOL};

/// Formats a float with 17 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(dir, name, &text)
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn least_squares_slope(h: &[f64], e: &[f64]) -> Option<f64> {
    if h.len() < 2 || h.len() != e.len() || e.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = h.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|x| x.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(num / den)
}

/// Discrete relative L2 distance, absolute when the reference vanishes.
pub fn relative_l2(y: &[f64], reference: &[f64]) -> f64 {
    let diff: f64 = y
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = reference.iter().map(|b| b * b).sum::<f64>().sqrt();
    if norm > 0.0 {
        diff / norm
    } else {
        diff
    }
}

/// Verification result for one method.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyResult {
    pub method: String,
    pub nominal_order: usize,
    pub report: OrderReport,
}

/// Order-condition residuals for `name`, written to `verify_<name>.csv`
/// when `out` is given.
pub fn cmd_verify(name: &str, out: Option<&Path>) -> Result<VerifyResult> {
    let m = resolve(name)?;
    let report = order_of(&m.tensor, DEFAULT_TOL);
    if let Some(dir) = out {
        write_file(dir, &format!("verify_{}.csv", file_stem(name)), &report.to_csv())?;
    }
    Ok(VerifyResult {
        method: name.to_string(),
        nominal_order: m.order,
        report,
    })
}

/// One run of a study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub nsteps: usize,
    pub h: f64,
    pub error: f64,
    /// Order observed against the previous row.
    pub observed_order: Option<f64>,
    pub stats: StepStats,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyResult {
    pub method: String,
    pub nominal_order: usize,
    /// Whether errors are measured against an exact solution.
    pub exact_reference: bool,
    pub rows: Vec<StudyRow>,
    pub slope: Option<f64>,
}

fn run_study(cfg: &ExperimentConfig, method: &Method) -> Result<StudyResult> {
    let t1 = cfg.t_final();
    let (mut sys, y0) = cfg.problem.build(t1)?;
    let (reference, exact_reference) = match sys.exact(t1 - cfg.t0) {
        Some(y) => (y, true),
        None => {
            let n = cfg.nsteps[cfg.nsteps.len() - 1] * cfg.reference_factor;
            let r = integrate(&method.stepper, sys.as_mut(), &y0, cfg.t0, t1, n, &cfg.solver)?;
            (r.y, false)
        }
    };
    let mut rows: Vec<StudyRow> = Vec::with_capacity(cfg.nsteps.len());
    for &n in &cfg.nsteps {
        let r = integrate(&method.stepper, sys.as_mut(), &y0, cfg.t0, t1, n, &cfg.solver)?;
        let error = relative_l2(&r.y, &reference);
        let observed_order = rows.last().and_then(|p: &StudyRow| {
            let v = (p.error / error).ln() / (n as f64 / p.nsteps as f64).ln();
            v.is_finite().then_some(v)
        });
        rows.push(StudyRow {
            nsteps: n,
            h: (t1 - cfg.t0) / n as f64,
            error,
            observed_order,
            stats: r.totals,
            cost: r.totals.cost(cfg.cost_ratio),
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let es: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(StudyResult {
        method: method.name.clone(),
        nominal_order: method.order,
        exact_reference,
        slope: least_squares_slope(&hs, &es),
        rows,
    })
}

fn run_all(cfg: &ExperimentConfig) -> Result<Vec<StudyResult>> {
    cfg.validate()?;
    let methods = cfg.methods.iter().map(|n| resolve(n)).collect::<Result<Vec<_>>>()?;
    methods.par_iter().map(|m| run_study(cfg, m)).collect()
}

fn convergence_csv(r: &StudyResult) -> String {
    let mut s = String::from("nsteps,h,error,observed_order\n");
    for row in &r.rows {
        let order = row.observed_order.map(sci).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{}", row.nsteps, sci(row.h), sci(row.error), order);
    }
    s
}

fn work_precision_csv(r: &StudyResult) -> String {
    let mut s = String::from("nsteps,h,f_evals,solves,newton_iters,newton_f_evals,cost,error\n");
    for row in &r.rows {
        let st = &row.stats;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            row.nsteps,
            sci(row.h),
            st.f_evals,
            st.solves,
            st.newton_iters,
            st.newton_f_evals,
            sci(row.cost),
            sci(row.error)
        );
    }
    s
}

#[derive(Serialize)]
struct IndexEntry<'a> {
    method: &'a str,
    file: String,
    nominal_order: usize,
    slope: Option<f64>,
}

fn write_study(
    cfg: &ExperimentConfig,
    results: &[StudyResult],
    prefix: &str,
    csv: fn(&StudyResult) -> String,
) -> Result<()> {
    let dir = &cfg.out_dir;
    let files: Vec<String> = results
        .iter()
        .map(|r| format!("{prefix}_{}.csv", file_stem(&r.method)))
        .collect();
    results
        .par_iter()
        .zip(&files)
        .map(|(r, f)| write_file(dir, f, &csv(r)))
        .collect::<Result<Vec<()>>>()?;
    let index: Vec<IndexEntry> = results
        .iter()
        .zip(files)
        .map(|(r, file)| IndexEntry {
            method: &r.method,
            file,
            nominal_order: r.nominal_order,
            slope: r.slope,
        })
        .collect();
    write_json(dir, &format!("{prefix}_index.json"), &index)
}

/// Error against step count for every configured method; writes
/// `converge_<method>.csv` and `converge_index.json`.
pub fn cmd_converge(cfg: &ExperimentConfig) -> Result<Vec<StudyResult>> {
    let results = run_all(cfg)?;
    write_study(cfg, &results, "converge", convergence_csv)?;
    Ok(results)
}

/// Cost against error for every configured method; writes
/// `work_precision_<method>.csv` and `work_precision_index.json`.
pub fn cmd_work_precision(cfg: &ExperimentConfig) -> Result<Vec<StudyResult>> {
    let results = run_all(cfg)?;
    write_study(cfg, &results, "work_precision", work_precision_csv)?;
    Ok(results)
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceSummary {
    pub z1: [f64; 2],
    pub file: String,
    pub count: usize,
    pub area: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilitySummary {
    pub method: String,
    pub stage_sets: StageSets,
    pub degrees: std::result::Result<DegreeReport, String>,
    pub stiff_limits: Vec<std::result::Result<StiffLimit, String>>,
    pub slices: Vec<SliceSummary>,
}

fn stability_one(cfg: &ExperimentConfig, name: &str) -> Result<StabilitySummary> {
    let m = resolve(name)?;
    let ss = stage_sets(&m.tensor)?;
    let ev = StabilityEvaluator::new(&m.tensor);
    let stem = file_stem(name);
    let sc = &cfg.stability;
    let mut slices = Vec::with_capacity(sc.z1.len());
    for (k, z1) in sc.z1.iter().enumerate() {
        let slice = ev.region_slice(Complex64::new(z1[0], z1[1]), &sc.grid);
        let file = format!("stability_{stem}_z1_{k}.csv");
        write_file(&cfg.out_dir, &file, &slice.to_csv())?;
        slices.push(SliceSummary {
            z1: *z1,
            file,
            count: slice.count(),
            area: slice.area(),
        });
    }
    let stiff_limits = sc
        .stiff_z2
        .iter()
        .map(|z| ev.stiff_limit(Complex64::new(z[0], z[1])).map_err(|e| e.to_string()))
        .collect();
    let summary = StabilitySummary {
        method: name.to_string(),
        degrees: ev.degree_report(&ss).map_err(|e| e.to_string()),
        stage_sets: ss,
        stiff_limits,
        slices,
    };
    write_json(&cfg.out_dir, &format!("stability_{stem}.json"), &summary)?;
    Ok(summary)
}

/// Region slices, degree fits and stiff limits for every configured method.
pub fn cmd_stability(cfg: &ExperimentConfig) -> Result<Vec<StabilitySummary>> {
    if cfg.methods.is_empty() {
        return Err(Error::Usage("config lists no methods".into()));
    }
    let g = &cfg.stability.grid;
    if !(g.re_max > g.re_min && g.im_max > g.im_min) {
        return Err(Error::Usage("stability window is empty".into()));
    }
    let out: Vec<StabilitySummary> = cfg
        .methods
        .iter()
        .map(|n| stability_one(cfg, n))
        .collect::<Result<_>>()?;
    let index: Vec<(&str, String)> = out
        .iter()
        .map(|s| (s.method.as_str(), format!("stability_{}.json", file_stem(&s.method))))
        .collect();
    write_json(&cfg.out_dir, "stability_index.json", &index)?;
    Ok(out)
}

/// Everything known about a method's coefficients.
#[derive(Clone, Debug, Serialize)]
pub struct TableauDump {
    pub method: String,
    pub nominal_order: usize,
    pub verified_order: usize,
    pub tensor: TensorJson,
    pub underlying_first: TableauJson,
    pub underlying_second: TableauJson,
    pub reduced_first: TableauJson,
    pub reduced_second: TableauJson,
    pub stage_sets: StageSets,
}

pub fn cmd_dump_tableau(name: &str, out: Option<&Path>) -> Result<TableauDump> {
    let m = resolve(name)?;
    let m1 = underlying_first(&m.tensor);
    let m2 = underlying_second(&m.tensor);
    let dump = TableauDump {
        method: name.to_string(),
        nominal_order: m.order,
        verified_order: order_of(&m.tensor, DEFAULT_TOL).order,
        tensor: m.tensor.to_json(),
        reduced_first: reduce(&m1).0.to_json(),
        reduced_second: reduce(&m2).0.to_json(),
        underlying_first: m1.to_json(),
        underlying_second: m2.to_json(),
        stage_sets: stage_sets(&m.tensor)?,
    };
    if let Some(dir) = out {
        write_json(dir, &format!("tableau_{}.json", file_stem(name)), &dump)?;
    }
    Ok(dump)
}
