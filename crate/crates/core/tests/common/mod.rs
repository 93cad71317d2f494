#![allow(dead_code)] // shared between test binaries; each uses a subset

//! Shared oracles for the integration and acceptance suites.
//!
//! The symbol-level simulator reproduces the physical transmit/receive
//! equations directly from raw channel matrices, independent of the SINR
//! formula path it is used to check. The grid searches are brute-force
//! oracles for the max-min optimizers.

use cellfree_core::channel::draw_channel_matrices;
use cellfree_core::estimation::{estimate_channels, synthesize_pilot_rx};
use cellfree_core::linalg::{complex_normal_matrix, complex_normal_vector};
use cellfree_core::rates::{build_zf, CsiMode, DropContext};
use cellfree_core::rng::{substream, Purpose};
use cellfree_core::{CMat, RMat, RVec, C64};

/// Offset separating oracle realizations from the realization indices the
/// library's expectation estimator consumes.
pub const ORACLE_REALIZATION_OFFSET: u64 = 1 << 20;

pub struct DlSymbolStats {
    /// Mean |y_k - sqrt(upsilon_k) s_k|^2 per user.
    pub residual_power: Vec<f64>,
    /// Mean ||x_m||^2 per AP.
    pub tx_power: Vec<f64>,
    pub symbols: usize,
}

/// Simulate downlink payload symbols through the physical model:
/// x_m = W_m^RF (W_m^BB Upsilon^(1/2) s + q_m), y_k = sum_m h_mk^T x_m + n_k.
///
/// `offset` selects the realization stream; set it to 0 to pair with the
/// expectation estimator's realizations or to `ORACLE_REALIZATION_OFFSET`
/// for an independent ensemble.
pub fn simulate_dl_symbols(
    ctx: &DropContext,
    dl_powers: &RVec,
    quant_vars: &[f64],
    n_realizations: usize,
    symbols_per_realization: usize,
    mode: CsiMode,
    offset: u64,
) -> DlSymbolStats {
    let m = ctx.ap_count();
    let k = ctx.ms_count();
    let la = ctx.active_chains();
    let sqrt_powers: Vec<f64> = dl_powers.iter().map(|p| p.sqrt()).collect();

    let mut residual = vec![0.0; k];
    let mut tx_power = vec![0.0; m];
    let mut used = 0usize;

    for r in 0..n_realizations {
        let ridx = offset + r as u64;
        let h = draw_channel_matrices(&ctx.links, ctx.seed, ridx);
        let g_per_ap: Vec<CMat> = (0..m)
            .map(|mi| ctx.rf_plan.rf_matrices[mi].transpose() * &h[mi])
            .collect();
        let g_hat_per_ap: Vec<CMat> = match mode {
            CsiMode::Perfect => g_per_ap.clone(),
            CsiMode::Estimated => (0..m)
                .map(|mi| {
                    let mut rng = substream(ctx.seed, Purpose::PilotNoise, mi as u64, ridx);
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
        let mut g_hat = CMat::zeros(m * la, k);
        for (mi, block) in g_hat_per_ap.iter().enumerate() {
            for ki in 0..k {
                if ctx.rf_plan.serves(mi, ki) {
                    for row in 0..la {
                        g_hat[(mi * la + row, ki)] = block[(row, ki)];
                    }
                }
            }
        }
        let Ok(zf) = build_zf(&g_hat) else { continue };
        used += 1;

        let mut sym_rng = substream(ctx.seed, Purpose::Payload, ridx, 0);
        let mut quant_rng = substream(ctx.seed, Purpose::QuantNoise, ridx, 0);
        let mut noise_rng = substream(ctx.seed, Purpose::SymbolNoise, ridx, 0);
        for _ in 0..symbols_per_realization {
            let s = complex_normal_vector(&mut sym_rng, k, 1.0);
            let mut y = complex_normal_vector(&mut noise_rng, k, ctx.dl_noise_var);
            for mi in 0..m {
                let block = zf.dl.rows(mi * la, la);
                let mut fed = CMat::zeros(la, 1);
                for ki in 0..k {
                    let w = block.column(ki);
                    let amp = C64::new(sqrt_powers[ki], 0.0) * s[ki];
                    for row in 0..la {
                        fed[(row, 0)] += w[row] * amp;
                    }
                }
                let q = complex_normal_vector(&mut quant_rng, la, quant_vars[mi]);
                for row in 0..la {
                    fed[(row, 0)] += q[row];
                }
                let x = &ctx.rf_plan.rf_matrices[mi] * &fed;
                tx_power[mi] += x.norm_squared();
                // y += H_m^T x
                let contrib = h[mi].transpose() * &x;
                for ki in 0..k {
                    y[ki] += contrib[(ki, 0)];
                }
            }
            for ki in 0..k {
                let wanted = C64::new(sqrt_powers[ki], 0.0) * s[ki];
                residual[ki] += (y[ki] - wanted).norm_sqr();
            }
        }
    }

    let n = (used * symbols_per_realization) as f64;
    DlSymbolStats {
        residual_power: residual.into_iter().map(|v| v / n).collect(),
        tx_power: tx_power.into_iter().map(|v| v / n).collect(),
        symbols: used * symbols_per_realization,
    }
}

pub struct UlSymbolStats {
    /// Mean |y_k - sqrt(P_u omega_k) s_k|^2 per user.
    pub residual_power: Vec<f64>,
    pub symbols: usize,
}

/// Simulate uplink payload symbols: r_m = sqrt(P_u) G_m Omega^(1/2) s + n_m,
/// z_m = r_m + q_m, y = W_u z.
pub fn simulate_ul_symbols(
    ctx: &DropContext,
    ul_coeffs: &RVec,
    quant_vars: &[f64],
    n_realizations: usize,
    symbols_per_realization: usize,
    mode: CsiMode,
    offset: u64,
) -> UlSymbolStats {
    let m = ctx.ap_count();
    let k = ctx.ms_count();
    let la = ctx.active_chains();
    let p_u = ctx.config.radio.ms_power_watt;
    let amp: Vec<f64> = ul_coeffs.iter().map(|w| (p_u * w).sqrt()).collect();

    let mut residual = vec![0.0; k];
    let mut used = 0usize;

    for r in 0..n_realizations {
        let ridx = offset + r as u64;
        let h = draw_channel_matrices(&ctx.links, ctx.seed, ridx);
        let g_per_ap: Vec<CMat> = (0..m)
            .map(|mi| ctx.rf_plan.rf_matrices[mi].transpose() * &h[mi])
            .collect();
        let g_hat_per_ap: Vec<CMat> = match mode {
            CsiMode::Perfect => g_per_ap.clone(),
            CsiMode::Estimated => (0..m)
                .map(|mi| {
                    let mut rng = substream(ctx.seed, Purpose::PilotNoise, mi as u64, ridx);
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
        let mut g_hat = CMat::zeros(m * la, k);
        for (mi, block) in g_hat_per_ap.iter().enumerate() {
            for ki in 0..k {
                if ctx.rf_plan.serves(mi, ki) {
                    for row in 0..la {
                        g_hat[(mi * la + row, ki)] = block[(row, ki)];
                    }
                }
            }
        }
        let Ok(zf) = build_zf(&g_hat) else { continue };
        let w_u = zf.ul();
        used += 1;

        let mut sym_rng = substream(ctx.seed, Purpose::Payload, ridx, 1);
        let mut quant_rng = substream(ctx.seed, Purpose::QuantNoise, ridx, 1);
        let mut noise_rng = substream(ctx.seed, Purpose::SymbolNoise, ridx, 1);
        for _ in 0..symbols_per_realization {
            let s = complex_normal_vector(&mut sym_rng, k, 1.0);
            // stacked quantized receive vector
            let mut z = CMat::zeros(m * la, 1);
            for mi in 0..m {
                let noise = complex_normal_vector(&mut noise_rng, la, ctx.ul_noise_var);
                let quant = complex_normal_vector(&mut quant_rng, la, quant_vars[mi]);
                for row in 0..la {
                    let mut acc = noise[row] + quant[row];
                    for ki in 0..k {
                        acc += g_per_ap[mi][(row, ki)] * s[ki] * C64::new(amp[ki], 0.0);
                    }
                    z[(mi * la + row, 0)] = acc;
                }
            }
            let y = &w_u * &z;
            for ki in 0..k {
                let wanted = C64::new(amp[ki], 0.0) * s[ki];
                residual[ki] += (y[(ki, 0)] - wanted).norm_sqr();
            }
        }
    }

    let n = (used * symbols_per_realization) as f64;
    UlSymbolStats {
        residual_power: residual.into_iter().map(|v| v / n).collect(),
        symbols: used * symbols_per_realization,
    }
}

/// Brute-force refining grid search for the DL max-min problem.
pub fn grid_maxmin_dl(
    coupling: &RMat,
    power_gain: &RMat,
    budgets: &[f64],
    noise: &RVec,
    levels: usize,
    passes: usize,
) -> f64 {
    let m = power_gain.nrows();
    let k = power_gain.ncols();
    let caps: Vec<f64> = (0..k)
        .map(|ki| {
            let mut cap = f64::INFINITY;
            for mi in 0..m {
                let g = power_gain[(mi, ki)];
                if g > 1e-300 {
                    cap = cap.min(budgets[mi] / g);
                }
            }
            if cap.is_finite() {
                cap
            } else {
                1.0
            }
        })
        .collect();

    let min_sinr = |p: &[f64]| -> f64 {
        let mut worst = f64::INFINITY;
        for ki in 0..k {
            let mut denom = noise[ki];
            for kp in 0..k {
                denom += p[kp] * coupling[(ki, kp)];
            }
            worst = worst.min(p[ki] / denom);
        }
        worst
    };
    let feasible = |p: &[f64]| -> bool {
        (0..m).all(|mi| {
            let used: f64 = (0..k).map(|ki| p[ki] * power_gain[(mi, ki)]).sum();
            used <= budgets[mi] * (1.0 + 1e-12)
        })
    };

    let mut lo = vec![0.0; k];
    let mut hi = caps.clone();
    let mut best_val = 0.0;
    let mut best_point = vec![0.0; k];
    for _ in 0..passes {
        let steps: Vec<f64> = (0..k).map(|ki| (hi[ki] - lo[ki]) / levels as f64).collect();
        let mut idx = vec![0usize; k];
        loop {
            let p: Vec<f64> = (0..k)
                .map(|ki| lo[ki] + idx[ki] as f64 * steps[ki])
                .collect();
            if feasible(&p) {
                let v = min_sinr(&p);
                if v > best_val {
                    best_val = v;
                    best_point = p;
                }
            }
            // odometer increment
            let mut dim = 0;
            loop {
                idx[dim] += 1;
                if idx[dim] <= levels {
                    break;
                }
                idx[dim] = 0;
                dim += 1;
                if dim == k {
                    break;
                }
            }
            if dim == k {
                break;
            }
        }
        for ki in 0..k {
            let margin = 1.5 * steps[ki];
            lo[ki] = (best_point[ki] - margin).max(0.0);
            hi[ki] = (best_point[ki] + margin).min(caps[ki]);
        }
    }
    best_val
}

/// Exhaustive grid over [0,1]^2 for the 2-user UL max-min problem.
pub fn grid_maxmin_ul_2user(coupling: &RMat, noise_over_pu: &RVec, step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    let mut best: f64 = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            let w = [i as f64 * step, j as f64 * step];
            let mut worst = f64::INFINITY;
            for ki in 0..2 {
                let denom = noise_over_pu[ki] + w[0] * coupling[(ki, 0)] + w[1] * coupling[(ki, 1)];
                worst = worst.min(w[ki] / denom);
            }
            best = best.max(worst);
        }
    }
    best
}

/// Desk-scale config helper.
pub fn desk_config(m: usize, k: usize, n: usize, l: usize) -> cellfree_core::SimConfig {
    let mut config = cellfree_core::SimConfig::default();
    config.network.ap_count = m;
    config.network.ms_count = k;
    config.network.antennas_per_ap = n;
    config.network.rf_chains = l;
    config
}

/// Random complex Gaussian matrix from a named test stream.
pub fn test_matrix(seed: u64, rows: usize, cols: usize) -> CMat {
    let mut rng = substream(seed, Purpose::Fading, 99, 0);
    complex_normal_matrix(&mut rng, rows, cols, 1.0)
}
