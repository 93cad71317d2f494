//! Self-contained invariant suite behind the `validate` CLI subcommand.
//!
//! Each check is quick (the whole suite runs in seconds) and independent of
//! the test harness, so a deployed binary can verify its own numerics.

use crate::config::SimConfig;
use crate::harness::percentile;
use crate::optimizer::{maxmin_power_dl, solve_quant_dl};
use crate::parallel::Parallelism;
use crate::rates::{estimate_expectations, CsiMode, DropContext};
use crate::rng::{substream, Purpose};
use crate::{CMat, RMat, RVec, C64};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

/// Run every invariant check against the given configuration.
pub fn run_all(config: &SimConfig) -> Vec<Check> {
    let mut out = Vec::new();

    out.push(pilot_book_unitary(config.network.pilot_samples));
    out.push(link_state_probabilities(config));
    out.push(noise_variances(config));
    out.push(covariance_identity(config));
    out.push(small_scale_consistency(config));
    out.push(zero_forcing_identity());
    out.push(quantization_closed_forms());
    out.push(maxmin_toy());
    out.push(percentile_interpolation());
    out.push(end_to_end_drop(config));

    out
}

fn pilot_book_unitary(tau_p: usize) -> Check {
    let book = crate::pilot::make_pilot_book(tau_p);
    let gram = book.adjoint() * &book;
    let err = (gram - CMat::identity(tau_p, tau_p)).norm();
    check(
        "pilot_book_unitary",
        err < 1e-10,
        format!("Gram deviation {err:.3e} at tau_p={tau_p}"),
    )
}

fn link_state_probabilities(config: &SimConfig) -> Check {
    let mut worst: f64 = 0.0;
    for i in 1..=100 {
        let d = i as f64 * 4.0;
        match crate::channel::link_state_probs(d, &config.channel) {
            Ok((a, b, c)) => worst = worst.max((a + b + c - 1.0).abs()),
            Err(e) => return check("link_state_probabilities", false, e.to_string()),
        }
    }
    check(
        "link_state_probabilities",
        worst < 1e-12,
        format!("max |sum - 1| = {worst:.3e} over d in (0, 400]"),
    )
}

fn noise_variances(config: &SimConfig) -> Check {
    match crate::rf::uplink_noise_variance(1, &config.radio) {
        Ok(v) => {
            let ms = crate::rf::ms_noise_variance(&config.radio);
            check(
                "noise_variances",
                v > 0.0 && ms > 0.0,
                format!("sigma_u^2(1) = {v:.4e} W, sigma_d^2 = {ms:.4e} W"),
            )
        }
        Err(e) => check("noise_variances", false, e.to_string()),
    }
}

fn covariance_identity(config: &SimConfig) -> Check {
    let mut cfg = config.clone();
    cfg.network.ap_count = 2;
    cfg.network.ms_count = 2;
    let scenario = match crate::geometry::generate_scenario(&cfg, 101) {
        Ok(s) => s,
        Err(e) => return check("covariance_trace_identity", false, e.to_string()),
    };
    let links = match crate::channel::draw_link_large_scale(&scenario, &cfg, 101) {
        Ok(l) => l,
        Err(e) => return check("covariance_trace_identity", false, e.to_string()),
    };
    let n = cfg.network.antennas_per_ap as f64;
    let mut worst: f64 = 0.0;
    for row in &links {
        for link in row {
            if link.state == crate::channel::LinkState::Outage {
                continue;
            }
            let expected = n * link.linear_gain();
            let got = link.covariance.trace().re;
            worst = worst.max(((got - expected) / expected).abs());
            worst = worst.max(crate::linalg::hermitian_deviation(&link.covariance));
        }
    }
    check(
        "covariance_trace_identity",
        worst < 1e-9,
        format!("worst relative/Hermitian deviation {worst:.3e}"),
    )
}

fn small_scale_consistency(config: &SimConfig) -> Check {
    let mut cfg = config.clone();
    cfg.network.ap_count = 1;
    cfg.network.ms_count = 1;
    cfg.network.antennas_per_ap = 8;
    let scenario = crate::geometry::generate_scenario(&cfg, 55).unwrap();
    let links = match crate::channel::draw_link_large_scale(&scenario, &cfg, 55) {
        Ok(l) => l,
        Err(e) => return check("small_scale_consistency", false, e.to_string()),
    };
    let link = &links[0][0];
    if link.state == crate::channel::LinkState::Outage {
        return check(
            "small_scale_consistency",
            true,
            "link in outage, skipped".into(),
        );
    }
    let n_draws = 2000;
    let mut acc = CMat::zeros(8, 8);
    for i in 0..n_draws {
        let mut rng = substream(55, Purpose::Fading, 0, i as u64);
        let h = crate::channel::draw_small_scale(link, &mut rng);
        acc += &h * h.adjoint();
    }
    acc /= C64::new(n_draws as f64, 0.0);
    let err = crate::linalg::rel_frobenius(&acc, &link.covariance);
    check(
        "small_scale_consistency",
        err < 0.12,
        format!("empirical covariance error {err:.3} over {n_draws} draws"),
    )
}

fn zero_forcing_identity() -> Check {
    let mut rng = substream(7, Purpose::Fading, 9, 9);
    let g = crate::linalg::complex_normal_matrix(&mut rng, 12, 5, 1.0);
    match crate::rates::build_zf(&g) {
        Ok(zf) => {
            let res = g.transpose() * &zf.dl - CMat::identity(5, 5);
            let worst = res.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            check(
                "zero_forcing_identity",
                worst < 1e-8,
                format!("max residual {worst:.3e}"),
            )
        }
        Err(e) => check("zero_forcing_identity", false, e.to_string()),
    }
}

fn quantization_closed_forms() -> Check {
    let covs = vec![CMat::identity(2, 2)];
    let powers = RVec::from_vec(vec![1.0]);
    let s2 = solve_quant_dl(&powers, &covs, 2.0, 1e-18);
    let s4 = solve_quant_dl(&powers, &covs, 4.0, 1e-18);
    match (s2, s4) {
        (Ok(a), Ok(b)) => {
            let e1 = (a - 1.0).abs();
            let e2 = (b - 1.0 / 3.0).abs() * 3.0;
            check(
                "quantization_closed_forms",
                e1 < 1e-6 && e2 < 1e-6,
                format!("relative errors {e1:.2e}, {e2:.2e}"),
            )
        }
        _ => check("quantization_closed_forms", false, "solver error".into()),
    }
}

fn maxmin_toy() -> Check {
    let coupling = RMat::zeros(2, 2);
    let gain = RMat::from_element(1, 2, 1.0);
    let noise = RVec::from_element(2, 1.0);
    match maxmin_power_dl(&coupling, &gain, &[2.0], &noise, 1e-6) {
        Ok((p, t)) => {
            let ok =
                (t - 1.0).abs() < 1e-3 && (p[0] - 1.0).abs() < 1e-2 && (p[1] - 1.0).abs() < 1e-2;
            check(
                "maxmin_symmetric_toy",
                ok,
                format!("target {t:.6}, powers ({:.6}, {:.6})", p[0], p[1]),
            )
        }
        Err(e) => check("maxmin_symmetric_toy", false, e.to_string()),
    }
}

fn percentile_interpolation() -> Check {
    let p = percentile(&[1.0, 2.0, 3.0, 4.0], 50.0);
    check(
        "percentile_interpolation",
        p == Some(2.5),
        format!("median of 1..4 = {p:?}"),
    )
}

fn end_to_end_drop(config: &SimConfig) -> Check {
    let mut cfg = config.clone();
    cfg.network.ap_count = cfg.network.ap_count.min(4);
    cfg.network.ms_count = cfg.network.ms_count.min(3);
    cfg.network.antennas_per_ap = cfg.network.antennas_per_ap.min(8);
    cfg.network.rf_chains = cfg
        .network
        .rf_chains
        .min(cfg.network.antennas_per_ap)
        .min(2);
    cfg.monte_carlo.realizations = 15;
    cfg.monte_carlo.min_realizations = 5;
    if cfg.validate().is_err() {
        return check("end_to_end_drop", false, "shrunk config invalid".into());
    }
    let ctx = match DropContext::build(&cfg, 7) {
        Ok(c) => c,
        Err(e) => return check("end_to_end_drop", false, e.to_string()),
    };
    let exp = match estimate_expectations(&ctx, 15, CsiMode::Estimated, Parallelism::Serial) {
        Ok(e) => e,
        Err(e) => return check("end_to_end_drop", false, e.to_string()),
    };
    match (
        crate::optimizer::bcd_dl(&ctx, &exp),
        crate::optimizer::bcd_ul(&ctx, &exp),
    ) {
        (Ok(dl), Ok(ul)) => check(
            "end_to_end_drop",
            dl.min_rate >= 0.0 && ul.min_rate >= 0.0,
            format!(
                "dl {:.3} bit/s/Hz ({}), ul {:.3} bit/s/Hz ({})",
                dl.min_rate,
                dl.status.as_str(),
                ul.min_rate,
                ul.status.as_str()
            ),
        ),
        (Err(e), _) | (_, Err(e)) => check("end_to_end_drop", false, e.to_string()),
    }
}
