//! Zero-forcing filters, Monte Carlo expectation terms for the achievable
//! rate expressions, per-user SINR/rate evaluation, and fronthaul capacity
//! consumption bounds.
//!
//! The per-user SINR expressions condition on the large-scale state of a
//! drop (covariances, RF plan, pilot assignment) and take expectations over
//! small-scale fading and pilot noise only. Those expectation terms have no
//! closed form under zero forcing, so [`estimate_expectations`] evaluates
//! them by Monte Carlo over joint realizations of {channels + pilot noise}.

use crate::channel::{draw_channel_matrices, LinkLargeScale};
use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::estimation::{estimate_channels, synthesize_pilot_rx, MmseFilter};
use crate::geometry::NetworkScenario;
use crate::linalg::log2_det_hermitian_pd;
use crate::parallel::{map_indexed, Parallelism};
use crate::pilot::PilotAssignment;
use crate::rf::RfPlan;
use crate::rng::{substream, Purpose};
use crate::{CMat, RMat, RVec, C64};

/// Everything that stays fixed for one drop once the large-scale training
/// phase is done. Immutable; shared by the DL and UL optimizers.
#[derive(Debug, Clone)]
pub struct DropContext {
    pub config: SimConfig,
    pub scenario: NetworkScenario,
    pub links: Vec<Vec<LinkLargeScale>>,
    pub rf_plan: RfPlan,
    pub pilots: PilotAssignment,
    /// MMSE filters per AP, per MS.
    pub mmse: Vec<Vec<MmseFilter>>,
    /// Receive-chain noise variance at each AP, watts.
    pub ul_noise_var: f64,
    /// Receiver noise variance at each MS, watts.
    pub dl_noise_var: f64,
    /// tr(R^RF_mk) for every link (M x K).
    pub rrf_traces: RMat,
    pub seed: u64,
}

impl DropContext {
    /// Run the large-scale pipeline: scenario, channel statistics, RF plan,
    /// pilot assignment and MMSE filters.
    pub fn build(config: &SimConfig, seed: u64) -> Result<Self> {
        let config = config.clone();
        config.validate()?;
        let scenario = crate::geometry::generate_scenario(&config, seed)?;
        let links = crate::channel::draw_link_large_scale(&scenario, &config, seed)?;
        let rf_plan = crate::rf::build_rf_plan(&links, config.network.rf_chains)?;
        let pilots = crate::pilot::assign_pilots(
            config.pilot.strategy,
            &rf_plan.link_weights,
            config.network.pilot_samples,
            seed,
        )?;
        let ul_noise_var =
            crate::rf::uplink_noise_variance(config.network.antennas_per_ap, &config.radio)?;
        let dl_noise_var = crate::rf::ms_noise_variance(&config.radio);

        let m = scenario.ap_count();
        let k = scenario.ms_count();
        let mut mmse = Vec::with_capacity(m);
        for mi in 0..m {
            mmse.push(crate::estimation::mmse_matrices(
                &rf_plan.equivalent_covariances[mi],
                &pilots,
                config.radio.pilot_power_watt,
                ul_noise_var,
            )?);
        }
        let rrf_traces = RMat::from_fn(m, k, |mi, ki| {
            rf_plan.equivalent_covariances[mi][ki].trace().re
        });

        Ok(Self {
            config,
            scenario,
            links,
            rf_plan,
            pilots,
            mmse,
            ul_noise_var,
            dl_noise_var,
            rrf_traces,
            seed,
        })
    }

    pub fn ap_count(&self) -> usize {
        self.scenario.ap_count()
    }

    pub fn ms_count(&self) -> usize {
        self.scenario.ms_count()
    }

    pub fn active_chains(&self) -> usize {
        self.rf_plan.active_chains()
    }
}

/// Whether the expectation loop uses estimated CSI (the physical model) or
/// is forced to perfect CSI (an oracle mode for term validation).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    Estimated,
    Perfect,
}

/// Zero-forcing baseband filters for one realization.
///
/// `dl` is W_d^BB = G_hat^* (G_hat^T G_hat^*)^{-1}, stacked M*L_A x K. The
/// uplink combiner is exactly its transpose.
#[derive(Debug, Clone)]
pub struct ZfFilters {
    pub dl: CMat,
}

impl ZfFilters {
    /// Uplink combiner W_u^BB = (W_d^BB)^T, bit-exact transpose.
    pub fn ul(&self) -> CMat {
        self.dl.transpose()
    }
}

/// Build the ZF precoder from the stacked estimated channels.
pub fn build_zf(g_hat: &CMat) -> Result<ZfFilters> {
    let k = g_hat.ncols();
    if g_hat.nrows() < k {
        return Err(SimError::SingularChannel(format!(
            "need at least K={k} stacked chain outputs, got {}",
            g_hat.nrows()
        )));
    }
    let gram = g_hat.transpose() * g_hat.conjugate(); // K x K, Hermitian PSD
    let chol = nalgebra::Cholesky::new(gram)
        .ok_or_else(|| SimError::SingularChannel("estimated channel lost column rank".into()))?;
    let inv = chol.inverse();
    let dl = g_hat.conjugate() * inv;
    // near-singular grams can sneak through the factorization; the defining
    // identity G_hat^T W = I is the authoritative check
    let residual = g_hat.transpose() * &dl - CMat::identity(k, k);
    let worst = residual.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if worst > 1e-8 {
        return Err(SimError::SingularChannel(format!(
            "zero-forcing identity residual {worst:.2e}"
        )));
    }
    Ok(ZfFilters { dl })
}

/// Stack per-AP equivalent channels into the M*L_A x K matrix, zeroing the
/// columns of APs that do not serve a user (the CPU has no estimate there).
fn stack_masked(per_ap: &[CMat], plan: &RfPlan) -> CMat {
    let m = per_ap.len();
    let la = per_ap[0].nrows();
    let k = per_ap[0].ncols();
    let mut stacked = CMat::zeros(m * la, k);
    for (mi, block) in per_ap.iter().enumerate() {
        for ki in 0..k {
            if plan.serves(mi, ki) {
                for r in 0..la {
                    stacked[(mi * la + r, ki)] = block[(r, ki)];
                }
            }
        }
    }
    stacked
}

fn stack_full(per_ap: &[CMat]) -> CMat {
    let m = per_ap.len();
    let la = per_ap[0].nrows();
    let k = per_ap[0].ncols();
    let mut stacked = CMat::zeros(m * la, k);
    for (mi, block) in per_ap.iter().enumerate() {
        for ki in 0..k {
            for r in 0..la {
                stacked[(mi * la + r, ki)] = block[(r, ki)];
            }
        }
    }
    stacked
}

/// Expectation terms entering the SINR formulas and fronthaul bounds,
/// averaged over `samples` successful joint realizations.
#[derive(Debug, Clone)]
pub struct ExpectationSet {
    /// DL residual-interference coupling (K x K): entry (k, k') is the mean
    /// power leaked from the stream of user k' into user k by CSI error.
    pub dl_error_coupling: RMat,
    /// UL counterpart (K x K).
    pub ul_error_coupling: RMat,
    /// Mean squared norms of the per-AP UL combiner rows (M x K).
    pub ul_combiner_rows: RMat,
    /// Mean RF-precoded power gain per unit stream power (M x K).
    pub precoded_power_gain: RMat,
    /// Mean baseband weight covariances E{w w^H} per link (M x K of
    /// L_A x L_A).
    pub bb_covariances: Vec<Vec<CMat>>,
    /// Successful realizations.
    pub samples: usize,
    /// Realizations discarded for rank deficiency.
    pub discarded: usize,
}

struct RealizationTerms {
    dl_coupling: RMat,
    ul_coupling: RMat,
    combiner_rows: RMat,
    power_gain: RMat,
    bb_cov: Vec<Vec<CMat>>,
}

/// One joint realization of {small-scale channels, pilot noise}: realize the
/// equivalent channels, estimate them, build ZF and return that
/// realization's contribution to every expectation term.
fn realize_terms(ctx: &DropContext, realization: u64, mode: CsiMode) -> Option<RealizationTerms> {
    let m = ctx.ap_count();
    let k = ctx.ms_count();
    let la = ctx.active_chains();

    let h = draw_channel_matrices(&ctx.links, ctx.seed, realization);
    let g_per_ap: Vec<CMat> = (0..m)
        .map(|mi| ctx.rf_plan.rf_matrices[mi].transpose() * &h[mi])
        .collect();

    let g_hat_per_ap: Vec<CMat> = match mode {
        CsiMode::Perfect => g_per_ap.clone(),
        CsiMode::Estimated => (0..m)
            .map(|mi| {
                let mut rng = substream(ctx.seed, Purpose::PilotNoise, mi as u64, realization);
                let y = synthesize_pilot_rx(
                    &g_per_ap[mi],
                    &ctx.pilots,
                    ctx.config.radio.pilot_power_watt,
                    ctx.ul_noise_var,
                    &mut rng,
                );
                estimate_channels(&y, &ctx.mmse[mi], &ctx.pilots)
            })
            .collect(),
    };

    let g = stack_full(&g_per_ap);
    let g_hat = stack_masked(&g_hat_per_ap, &ctx.rf_plan);
    let zf = build_zf(&g_hat).ok()?;
    let w = &zf.dl;
    let g_err = &g - &g_hat;

    // cross[k', k] = w_{:,k'}^T g_err_k
    let cross = w.transpose() * &g_err;
    let dl_coupling = RMat::from_fn(k, k, |ki, kj| cross[(kj, ki)].norm_sqr());
    let ul_coupling = RMat::from_fn(k, k, |ki, kj| cross[(ki, kj)].norm_sqr());

    let mut combiner_rows = RMat::zeros(m, k);
    let mut power_gain = RMat::zeros(m, k);
    let mut bb_cov = vec![vec![CMat::zeros(la, la); k]; m];
    for mi in 0..m {
        let block = w.rows(mi * la, la);
        let rf = &ctx.rf_plan.rf_matrices[mi];
        for ki in 0..k {
            let wk = block.column(ki).into_owned();
            combiner_rows[(mi, ki)] = wk.norm_squared();
            power_gain[(mi, ki)] = (rf * &wk).norm_squared();
            bb_cov[mi][ki] = &wk * wk.adjoint();
        }
    }

    Some(RealizationTerms {
        dl_coupling,
        ul_coupling,
        combiner_rows,
        power_gain,
        bb_cov,
    })
}

/// Estimate all expectation terms over `n_mc` joint realizations.
///
/// Realizations are independent and keyed by index, so the loop is
/// data-parallel; contributions are merged in index order, which keeps the
/// result bit-identical between serial and parallel execution.
pub fn estimate_expectations(
    ctx: &DropContext,
    n_mc: usize,
    mode: CsiMode,
    parallelism: Parallelism,
) -> Result<ExpectationSet> {
    let m = ctx.ap_count();
    let k = ctx.ms_count();
    let la = ctx.active_chains();

    let contributions = map_indexed(parallelism, n_mc, |r| realize_terms(ctx, r as u64, mode));

    let mut acc_dl = RMat::zeros(k, k);
    let mut acc_ul = RMat::zeros(k, k);
    let mut acc_rows = RMat::zeros(m, k);
    let mut acc_gain = RMat::zeros(m, k);
    let mut acc_bb = vec![vec![CMat::zeros(la, la); k]; m];
    let mut samples = 0usize;
    let mut discarded = 0usize;
    for c in contributions {
        match c {
            Some(t) => {
                acc_dl += t.dl_coupling;
                acc_ul += t.ul_coupling;
                acc_rows += t.combiner_rows;
                acc_gain += t.power_gain;
                for mi in 0..m {
                    for ki in 0..k {
                        acc_bb[mi][ki] += &t.bb_cov[mi][ki];
                    }
                }
                samples += 1;
            }
            None => discarded += 1,
        }
    }

    let min = ctx.config.monte_carlo.min_realizations.max(1);
    if samples < min {
        return Err(SimError::InsufficientSamples { got: samples, min });
    }

    let inv = 1.0 / samples as f64;
    let cinv = C64::new(inv, 0.0);
    for row in acc_bb.iter_mut() {
        for cov in row.iter_mut() {
            *cov *= cinv;
            crate::linalg::hermitianize(cov);
        }
    }
    Ok(ExpectationSet {
        dl_error_coupling: acc_dl * inv,
        ul_error_coupling: acc_ul * inv,
        ul_combiner_rows: acc_rows * inv,
        precoded_power_gain: acc_gain * inv,
        bb_covariances: acc_bb,
        samples,
        discarded,
    })
}

/// Effective DL noise constant for user k:
/// sum_m sigma_q_dm^2 tr(R^RF_mk) + sigma_d^2.
pub fn dl_noise_constant(k: usize, quant_vars: &[f64], rrf_traces: &RMat, ms_noise: f64) -> f64 {
    let mut acc = ms_noise;
    for (mi, q) in quant_vars.iter().enumerate() {
        acc += q * rrf_traces[(mi, k)];
    }
    acc
}

/// Effective UL noise constant for user k:
/// sum_m (sigma_q_um^2 + sigma_u^2) nu_mk.
pub fn ul_noise_constant(k: usize, quant_vars: &[f64], combiner_rows: &RMat, ap_noise: f64) -> f64 {
    let mut acc = 0.0;
    for (mi, q) in quant_vars.iter().enumerate() {
        acc += (q + ap_noise) * combiner_rows[(mi, k)];
    }
    acc
}

/// DL SINR of user k at powers `dl_powers` and quantization `quant_vars`.
pub fn sinr_dl(
    k: usize,
    dl_powers: &RVec,
    coupling: &RMat,
    quant_vars: &[f64],
    rrf_traces: &RMat,
    ms_noise: f64,
) -> f64 {
    let mut denom = dl_noise_constant(k, quant_vars, rrf_traces, ms_noise);
    for kp in 0..dl_powers.len() {
        denom += dl_powers[kp] * coupling[(k, kp)];
    }
    if denom <= 0.0 {
        return 0.0;
    }
    dl_powers[k] / denom
}

/// UL SINR of user k at coefficients `ul_coeffs` in [0, 1].
pub fn sinr_ul(
    k: usize,
    ul_coeffs: &RVec,
    coupling: &RMat,
    quant_vars: &[f64],
    combiner_rows: &RMat,
    ms_power: f64,
    ap_noise: f64,
) -> f64 {
    let mut denom = ul_noise_constant(k, quant_vars, combiner_rows, ap_noise);
    for kp in 0..ul_coeffs.len() {
        denom += ms_power * ul_coeffs[kp] * coupling[(k, kp)];
    }
    if denom <= 0.0 {
        return 0.0;
    }
    ms_power * ul_coeffs[k] / denom
}

/// Spectral efficiency of a SINR, bit/s/Hz.
pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// DL fronthaul consumption bound at AP m (bit/s/Hz):
/// log2 det((1/sigma_q^2) sum_k upsilon_k R^BB_mk + I).
pub fn fronthaul_dl_bound(dl_powers: &RVec, bb_covs_m: &[CMat], quant_var: f64) -> Result<f64> {
    if quant_var <= 0.0 {
        return Err(SimError::Domain("quantization variance must be > 0".into()));
    }
    let la = bb_covs_m[0].nrows();
    let mut a = CMat::identity(la, la);
    for (ki, cov) in bb_covs_m.iter().enumerate() {
        a += cov * C64::new(dl_powers[ki] / quant_var, 0.0);
    }
    crate::linalg::hermitianize(&mut a);
    log2_det_hermitian_pd(&a)
        .ok_or_else(|| SimError::Domain("fronthaul bound argument not PD".into()))
}

/// UL fronthaul consumption bound at AP m (bit/s/Hz):
/// log2 det((P_u/sigma_q^2) sum_k omega_k R^RF_mk + (sigma_u^2/sigma_q^2 + 1) I).
pub fn fronthaul_ul_bound(
    ul_coeffs: &RVec,
    rf_covs_m: &[CMat],
    ms_power: f64,
    ap_noise: f64,
    quant_var: f64,
) -> Result<f64> {
    if quant_var <= 0.0 {
        return Err(SimError::Domain("quantization variance must be > 0".into()));
    }
    let la = rf_covs_m[0].nrows();
    let mut a = CMat::identity(la, la) * C64::new(ap_noise / quant_var + 1.0, 0.0);
    for (ki, cov) in rf_covs_m.iter().enumerate() {
        a += cov * C64::new(ms_power * ul_coeffs[ki] / quant_var, 0.0);
    }
    crate::linalg::hermitianize(&mut a);
    log2_det_hermitian_pd(&a)
        .ok_or_else(|| SimError::Domain("fronthaul bound argument not PD".into()))
}
