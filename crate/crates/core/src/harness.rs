//! Campaign orchestration: single drops, sweeps over config keys, metric
//! aggregation and file outputs.
//!
//! A drop runs the full pipeline for one random network realization. A
//! campaign runs `n_drops` drops per sweep point with per-drop seeds derived
//! deterministically from the campaign seed, so serial and parallel
//! executions produce bit-identical reports.

use crate::config::{set_by_key_path, SimConfig};
use crate::error::{Result, SimError};
use crate::optimizer::{bcd_dl, bcd_ul, AllocationState};
use crate::parallel::{map_indexed, Parallelism};
use crate::rates::{estimate_expectations, CsiMode, DropContext, ExpectationSet};
use crate::rng::derive_drop_seed;
use serde::Serialize;
use std::io::Write;
use std::time::Instant;

/// Scalar record of one drop. Everything except `timing_ms` is
/// deterministic per seed; timing is kept out of the CSV surface.
#[derive(Debug, Clone, Serialize)]
pub struct DropResult {
    pub drop_id: usize,
    pub seed: u64,
    /// Set when the pipeline failed (singular drop, solver error, ...).
    pub failed: Option<String>,
    pub dl_min_rate: f64,
    pub ul_min_rate: f64,
    pub dl_status: String,
    pub ul_status: String,
    pub dl_iterations: usize,
    pub ul_iterations: usize,
    /// Largest per-AP fronthaul consumption bound at the final allocation.
    pub dl_fronthaul_max: f64,
    pub ul_fronthaul_max: f64,
    pub dl_user_rates: Vec<f64>,
    pub ul_user_rates: Vec<f64>,
    pub discarded_realizations: usize,
    /// Pilot indices per MS, '|'-joined.
    pub pilot_assignment: String,
    #[serde(skip)]
    pub timing_ms: f64,
}

impl DropResult {
    fn failed(drop_id: usize, seed: u64, reason: String, timing_ms: f64) -> Self {
        Self {
            drop_id,
            seed,
            failed: Some(reason),
            dl_min_rate: 0.0,
            ul_min_rate: 0.0,
            dl_status: "failed".into(),
            ul_status: "failed".into(),
            dl_iterations: 0,
            ul_iterations: 0,
            dl_fronthaul_max: 0.0,
            ul_fronthaul_max: 0.0,
            dl_user_rates: Vec::new(),
            ul_user_rates: Vec::new(),
            discarded_realizations: 0,
            pilot_assignment: String::new(),
            timing_ms,
        }
    }
}

/// Full artifacts of one drop, for trace/expectation dumps and tests.
pub struct DropDetail {
    pub result: DropResult,
    pub context: Option<DropContext>,
    pub expectations: Option<ExpectationSet>,
    pub dl: Option<AllocationState>,
    pub ul: Option<AllocationState>,
}

fn max_or_zero(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Run one drop, keeping the intermediate artifacts.
pub fn run_drop_detailed(
    config: &SimConfig,
    drop_id: usize,
    seed: u64,
    parallelism: Parallelism,
) -> Result<DropDetail> {
    config.validate()?;
    let start = Instant::now();
    let fail = |reason: String| {
        Ok(DropDetail {
            result: DropResult::failed(drop_id, seed, reason, elapsed_ms(start)),
            context: None,
            expectations: None,
            dl: None,
            ul: None,
        })
    };

    let ctx = match DropContext::build(config, seed) {
        Ok(ctx) => ctx,
        Err(SimError::Config(msg)) => return Err(SimError::Config(msg)),
        Err(e) => return fail(e.to_string()),
    };
    let exp = match estimate_expectations(
        &ctx,
        config.monte_carlo.realizations,
        CsiMode::Estimated,
        parallelism,
    ) {
        Ok(exp) => exp,
        Err(e) => return fail(e.to_string()),
    };
    let dl = match bcd_dl(&ctx, &exp) {
        Ok(a) => a,
        Err(e) => return fail(e.to_string()),
    };
    let ul = match bcd_ul(&ctx, &exp) {
        Ok(a) => a,
        Err(e) => return fail(e.to_string()),
    };

    let result = DropResult {
        drop_id,
        seed,
        failed: None,
        dl_min_rate: dl.min_rate,
        ul_min_rate: ul.min_rate,
        dl_status: dl.status.as_str().into(),
        ul_status: ul.status.as_str().into(),
        dl_iterations: dl.iterations,
        ul_iterations: ul.iterations,
        dl_fronthaul_max: max_or_zero(&dl.fronthaul_bounds),
        ul_fronthaul_max: max_or_zero(&ul.fronthaul_bounds),
        dl_user_rates: dl.per_user_rates.clone(),
        ul_user_rates: ul.per_user_rates.clone(),
        discarded_realizations: exp.discarded,
        pilot_assignment: ctx.pilots.to_compact_string(),
        timing_ms: elapsed_ms(start),
    };
    Ok(DropDetail {
        result,
        context: Some(ctx),
        expectations: Some(exp),
        dl: Some(dl),
        ul: Some(ul),
    })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Run one drop and return its scalar record.
pub fn run_drop(
    config: &SimConfig,
    drop_id: usize,
    seed: u64,
    parallelism: Parallelism,
) -> Result<DropResult> {
    run_drop_detailed(config, drop_id, seed, parallelism).map(|d| d.result)
}

/// One sweep key with its list of values.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub key: String,
    pub values: Vec<toml::Value>,
}

/// Aggregates over the completed drops of one sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregates {
    pub completed: usize,
    pub failed: usize,
    pub dl_mean: f64,
    pub dl_std_err: f64,
    pub dl_median: f64,
    /// 95%-likely rate: 5th percentile of the per-drop min-rates.
    pub dl_likely95: f64,
    pub ul_mean: f64,
    pub ul_std_err: f64,
    pub ul_median: f64,
    pub ul_likely95: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPointReport {
    pub sweep_value: String,
    pub drops: Vec<DropResult>,
    pub aggregates: Aggregates,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignReport {
    pub config: SimConfig,
    pub sweep_key: Option<String>,
    pub points: Vec<SweepPointReport>,
}

/// Linear-interpolated order statistic; `p` in [0, 100].
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 100.0) / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn aggregate(drops: &[DropResult]) -> Aggregates {
    let completed: Vec<&DropResult> = drops.iter().filter(|d| d.failed.is_none()).collect();
    let dl: Vec<f64> = completed.iter().map(|d| d.dl_min_rate).collect();
    let ul: Vec<f64> = completed.iter().map(|d| d.ul_min_rate).collect();
    let stats = |v: &[f64]| -> (f64, f64) {
        if v.is_empty() {
            return (0.0, 0.0);
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        if v.len() < 2 {
            return (mean, 0.0);
        }
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (dl_mean, dl_se) = stats(&dl);
    let (ul_mean, ul_se) = stats(&ul);
    Aggregates {
        completed: completed.len(),
        failed: drops.len() - completed.len(),
        dl_mean,
        dl_std_err: dl_se,
        dl_median: percentile(&dl, 50.0).unwrap_or(0.0),
        dl_likely95: percentile(&dl, 5.0).unwrap_or(0.0),
        ul_mean,
        ul_std_err: ul_se,
        ul_median: percentile(&ul, 50.0).unwrap_or(0.0),
        ul_likely95: percentile(&ul, 5.0).unwrap_or(0.0),
    }
}

fn toml_value_to_string(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Run a campaign: `n_drops` per sweep point (the whole base config as a
/// single point when no sweep is given). Failed drops are recorded and
/// excluded from aggregates; per-drop seeds derive from the campaign seed
/// and indices only.
pub fn run_campaign(
    config: &SimConfig,
    sweep: Option<&SweepSpec>,
    n_drops: usize,
    parallelism: Parallelism,
) -> Result<CampaignReport> {
    config.validate()?;
    let campaign_seed = config.monte_carlo.seed;

    let point_configs: Vec<(String, SimConfig)> = match sweep {
        None => vec![(String::new(), config.clone())],
        Some(spec) => {
            let base = config.to_toml_value()?;
            let mut out = Vec::with_capacity(spec.values.len());
            for v in &spec.values {
                let mut tree = base.clone();
                set_by_key_path(&mut tree, &spec.key, v.clone())?;
                out.push((toml_value_to_string(v), SimConfig::from_toml_value(tree)?));
            }
            out
        }
    };

    let mut points = Vec::with_capacity(point_configs.len());
    for (value, point_config) in point_configs.into_iter() {
        // sweep points share drop seeds, pairing the same geometry across
        // sweep values; comparisons between points are paired-sample
        let drops: Vec<DropResult> = map_indexed(parallelism, n_drops, |drop_id| {
            let seed = derive_drop_seed(campaign_seed, 0, drop_id as u64);
            run_drop(&point_config, drop_id, seed, Parallelism::Serial)
                .unwrap_or_else(|e| DropResult::failed(drop_id, seed, e.to_string(), 0.0))
        });
        let aggregates = aggregate(&drops);
        points.push(SweepPointReport {
            sweep_value: value,
            drops,
            aggregates,
        });
    }

    Ok(CampaignReport {
        config: config.clone(),
        sweep_key: sweep.map(|s| s.key.clone()),
        points,
    })
}

/// 9-significant-digit float formatting used by every CSV surface.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn join_rates(rates: &[f64]) -> String {
    rates
        .iter()
        .map(|r| format_float(*r))
        .collect::<Vec<_>>()
        .join("|")
}

/// Per-drop CSV: one row per drop, schema documented in
/// `docs/output_schema.md`.
pub fn write_drops_csv<W: Write>(report: &CampaignReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sweep_key",
        "sweep_value",
        "drop_id",
        "drop_seed",
        "failed",
        "dl_status",
        "ul_status",
        "dl_min_rate",
        "ul_min_rate",
        "dl_iterations",
        "ul_iterations",
        "dl_fronthaul_max",
        "ul_fronthaul_max",
        "discarded_realizations",
        "pilot_assignment",
        "dl_user_rates",
        "ul_user_rates",
    ])
    .map_err(csv_err)?;
    let key = report.sweep_key.clone().unwrap_or_default();
    for point in &report.points {
        for d in &point.drops {
            w.write_record([
                key.clone(),
                point.sweep_value.clone(),
                d.drop_id.to_string(),
                d.seed.to_string(),
                d.failed.clone().unwrap_or_default(),
                d.dl_status.clone(),
                d.ul_status.clone(),
                format_float(d.dl_min_rate),
                format_float(d.ul_min_rate),
                d.dl_iterations.to_string(),
                d.ul_iterations.to_string(),
                format_float(d.dl_fronthaul_max),
                format_float(d.ul_fronthaul_max),
                d.discarded_realizations.to_string(),
                d.pilot_assignment.clone(),
                join_rates(&d.dl_user_rates),
                join_rates(&d.ul_user_rates),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Empirical CDF of the per-drop min-rates, one row per completed drop and
/// direction, sorted by rate within each (sweep point, direction) group.
pub fn write_cdf_csv<W: Write>(report: &CampaignReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sweep_value", "direction", "min_rate", "cdf"])
        .map_err(csv_err)?;
    for point in &report.points {
        let completed: Vec<&DropResult> =
            point.drops.iter().filter(|d| d.failed.is_none()).collect();
        for direction in ["dl", "ul"] {
            let mut sorted: Vec<f64> = completed
                .iter()
                .map(|d| {
                    if direction == "dl" {
                        d.dl_min_rate
                    } else {
                        d.ul_min_rate
                    }
                })
                .collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = sorted.len();
            for (i, r) in sorted.iter().enumerate() {
                w.write_record([
                    point.sweep_value.clone(),
                    direction.to_string(),
                    format_float(*r),
                    format_float((i + 1) as f64 / n as f64),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// BCD iteration traces of one drop.
pub fn write_trace_csv<W: Write>(dl: &AllocationState, ul: &AllocationState, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["direction", "iteration", "min_rate"])
        .map_err(csv_err)?;
    for (name, state) in [("dl", dl), ("ul", ul)] {
        for (i, r) in state.trace.iter().enumerate() {
            w.write_record([name.to_string(), (i + 1).to_string(), format_float(*r)])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-link large-scale records of one drop (debug surface).
pub fn write_links_csv<W: Write>(ctx: &DropContext, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ap", "ms", "state", "pl_db", "shadow_db", "cov_trace"])
        .map_err(csv_err)?;
    for (mi, row) in ctx.links.iter().enumerate() {
        for (ki, link) in row.iter().enumerate() {
            w.write_record([
                mi.to_string(),
                ki.to_string(),
                link.state.as_str().to_string(),
                format_float(link.pl_db),
                format_float(link.shadow_db),
                format_float(link.covariance.trace().re),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Expectation matrices of one drop, flattened (debug/optimizer-test
/// surface).
pub fn write_expectations_csv<W: Write>(exp: &ExpectationSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "i", "j", "row", "col", "re", "im"])
        .map_err(csv_err)?;
    let k = exp.dl_error_coupling.nrows();
    for i in 0..k {
        for j in 0..k {
            for (kind, mat) in [
                ("dl_error_coupling", &exp.dl_error_coupling),
                ("ul_error_coupling", &exp.ul_error_coupling),
            ] {
                w.write_record([
                    kind.to_string(),
                    i.to_string(),
                    j.to_string(),
                    String::new(),
                    String::new(),
                    format_float(mat[(i, j)]),
                    format_float(0.0),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    let (m, kk) = exp.ul_combiner_rows.shape();
    for mi in 0..m {
        for ki in 0..kk {
            for (kind, mat) in [
                ("ul_combiner_rows", &exp.ul_combiner_rows),
                ("precoded_power_gain", &exp.precoded_power_gain),
            ] {
                w.write_record([
                    kind.to_string(),
                    mi.to_string(),
                    ki.to_string(),
                    String::new(),
                    String::new(),
                    format_float(mat[(mi, ki)]),
                    format_float(0.0),
                ])
                .map_err(csv_err)?;
            }
            let cov = &exp.bb_covariances[mi][ki];
            for r in 0..cov.nrows() {
                for c in 0..cov.ncols() {
                    w.write_record([
                        "bb_covariance".to_string(),
                        mi.to_string(),
                        ki.to_string(),
                        r.to_string(),
                        c.to_string(),
                        format_float(cov[(r, c)].re),
                        format_float(cov[(r, c)].im),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

impl CampaignReport {
    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| SimError::Io(std::io::Error::other(e.to_string())))
    }
}

fn csv_err(e: csv::Error) -> SimError {
    SimError::Io(std::io::Error::other(e.to_string()))
}
