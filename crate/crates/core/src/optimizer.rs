//! Joint max-min optimization of transmit powers and fronthaul quantization
//! noise, downlink and uplink, via block coordinate descent.
//!
//! Each BCD iteration alternates two exact block solves:
//!
//! 1. quantization noise: for the previous powers, each AP's fronthaul
//!    constraint is active at the optimum, so its quantization variance is
//!    the unique root of a strictly decreasing log-det equation, found by
//!    safeguarded bisection on the eigenvalues of the power-weighted
//!    covariance sum;
//! 2. powers: with the quantization variances fixed, the max-min SINR
//!    problem is quasi-linear and solved by bisection on the target SINR,
//!    where each feasibility test solves the equal-SINR balance equations.
//!    The balance solution is the componentwise-minimal point achieving the
//!    target, so checking it against the power/box constraints is an exact
//!    feasibility oracle.

use crate::error::{Result, SimError};
use crate::linalg::hermitian_eigenvalues;
use crate::rates::{
    dl_noise_constant, fronthaul_dl_bound, fronthaul_ul_bound, rate, sinr_dl, sinr_ul, DropContext,
    ExpectationSet,
};
use crate::{CMat, RMat, RVec, C64};

/// Outcome of one BCD run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationStatus {
    Converged,
    MaxIters,
    Infeasible,
}

impl AllocationStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            AllocationStatus::Converged => "converged",
            AllocationStatus::MaxIters => "max_iters",
            AllocationStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Downlink,
    Uplink,
}

/// Final allocation of one link direction.
#[derive(Debug, Clone)]
pub struct AllocationState {
    pub direction: Direction,
    /// DL: stream powers upsilon_k (watts); UL: coefficients omega_k in [0,1].
    pub powers: RVec,
    /// Per-AP quantization noise variances, watts.
    pub quant_vars: Vec<f64>,
    /// Achieved max-min SINR (linear).
    pub min_sinr: f64,
    /// Achieved max-min rate, bit/s/Hz.
    pub min_rate: f64,
    /// Per-user rates at the returned allocation.
    pub per_user_rates: Vec<f64>,
    /// Per-AP fronthaul consumption bound at the returned allocation.
    pub fronthaul_bounds: Vec<f64>,
    /// Min-rate after each BCD iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub status: AllocationStatus,
}

impl AllocationState {
    fn infeasible(direction: Direction, k: usize, m: usize, reason: &str) -> Self {
        let _ = reason;
        Self {
            direction,
            powers: RVec::zeros(k),
            quant_vars: vec![0.0; m],
            min_sinr: 0.0,
            min_rate: 0.0,
            per_user_rates: vec![0.0; k],
            fronthaul_bounds: vec![0.0; m],
            trace: Vec::new(),
            iterations: 0,
            status: AllocationStatus::Infeasible,
        }
    }
}

/// |log2 det - C| tolerance corresponding to a 1e-3 relative residual on the
/// determinant equation det(..) = 2^C.
fn equality_log_tol() -> f64 {
    (1.0f64 + 1e-3).log2()
}

/// Solve sum_i log2(1 + lambda_i / sigma2) = capacity for sigma2 by
/// bisection in log space. The left side is strictly decreasing in sigma2.
/// `shift` adds a common offset to every eigenvalue (the UL thermal term).
fn solve_logdet_root(
    eigenvalues: &[f64],
    shift: f64,
    capacity: f64,
    sigma_min: f64,
) -> Result<f64> {
    let f = |sigma2: f64| -> f64 {
        eigenvalues
            .iter()
            .map(|&l| (1.0 + (l.max(0.0) + shift) / sigma2).log2())
            .sum()
    };
    if f(sigma_min) <= capacity {
        // even the smallest permitted variance leaves slack; the constraint
        // is inactive and the floor is returned
        return Ok(sigma_min);
    }
    let top = eigenvalues.iter().fold(shift, |a, &l| a + l.max(0.0));
    let mut hi = top.max(sigma_min * 2.0);
    let mut guard = 0;
    while f(hi) > capacity {
        hi *= 4.0;
        guard += 1;
        if guard > 300 {
            return Err(SimError::Solver(
                "quantization root bracketing failed to expand".into(),
            ));
        }
    }
    let (mut llo, mut lhi) = (sigma_min.ln(), hi.ln());
    for _ in 0..200 {
        let mid = 0.5 * (llo + lhi);
        let sigma2 = mid.exp();
        let val = f(sigma2);
        if (val - capacity).abs() <= 1e-12 * capacity.max(1.0) {
            return Ok(sigma2);
        }
        if val > capacity {
            llo = mid;
        } else {
            lhi = mid;
        }
        if (lhi - llo) < 1e-15 {
            break;
        }
    }
    Ok((0.5 * (llo + lhi)).exp())
}

/// DL quantization variance at one AP: the root of
/// det(sum_k upsilon_k R^BB_mk / sigma2 + I) = 2^C_Fd.
/// Zero powers make the log-det identically zero, so the floor is returned.
pub fn solve_quant_dl(
    dl_powers: &RVec,
    bb_covs_m: &[CMat],
    dl_capacity: f64,
    sigma_min: f64,
) -> Result<f64> {
    if dl_capacity <= 0.0 {
        return Err(SimError::Infeasible(
            "DL fronthaul capacity must be > 0".into(),
        ));
    }
    let la = bb_covs_m[0].nrows();
    let mut s = CMat::zeros(la, la);
    for (ki, cov) in bb_covs_m.iter().enumerate() {
        s += cov * C64::new(dl_powers[ki], 0.0);
    }
    crate::linalg::hermitianize(&mut s);
    if s.norm() == 0.0 {
        return Ok(sigma_min);
    }
    let eig = hermitian_eigenvalues(&s);
    solve_logdet_root(&eig, 0.0, dl_capacity, sigma_min)
}

/// UL quantization variance at one AP: the root of
/// det(P_u sum_k omega_k R^RF_mk / sigma2 + (sigma_u^2/sigma2 + 1) I) = 2^C_Fu.
pub fn solve_quant_ul(
    ul_coeffs: &RVec,
    rf_covs_m: &[CMat],
    ms_power: f64,
    ap_noise: f64,
    ul_capacity: f64,
    sigma_min: f64,
) -> Result<f64> {
    if ul_capacity <= 0.0 {
        return Err(SimError::Infeasible(
            "UL fronthaul capacity must be > 0".into(),
        ));
    }
    let la = rf_covs_m[0].nrows();
    let mut s = CMat::zeros(la, la);
    for (ki, cov) in rf_covs_m.iter().enumerate() {
        s += cov * C64::new(ms_power * ul_coeffs[ki], 0.0);
    }
    crate::linalg::hermitianize(&mut s);
    let eig = if s.norm() == 0.0 {
        vec![0.0; la]
    } else {
        hermitian_eigenvalues(&s)
    };
    solve_logdet_root(&eig, ap_noise, ul_capacity, sigma_min)
}

/// Componentwise-minimal power vector achieving SINR target t for every
/// user: solves (I - t * coupling) p = t * noise. Returns None when the
/// balance system is singular, produces negative entries, or the solution
/// violates the linear constraints checked by `feasible`.
fn equal_sinr_point(
    target: f64,
    coupling: &RMat,
    noise: &RVec,
    feasible: impl Fn(&RVec) -> bool,
) -> Option<RVec> {
    let k = noise.len();
    let a = RMat::identity(k, k) - coupling * target;
    let rhs = noise * target;
    let lu = a.clone().lu();
    let p = lu.solve(&rhs)?;
    // reject spurious solutions beyond the spectral-radius pole
    let residual = (&a * &p - &rhs).norm();
    if residual > 1e-8 * (rhs.norm() + p.norm()).max(1e-300) {
        return None;
    }
    let scale = p.amax().max(1e-300);
    if p.iter().any(|&x| x < -1e-9 * scale) {
        return None;
    }
    let p = p.map(|x| x.max(0.0));
    feasible(&p).then_some(p)
}

/// Bisection on the SINR target. `cap` bounds the optimum from above;
/// `rel_tol` is the stopping width relative to the current upper bracket.
fn maxmin_bisect(
    cap: f64,
    rel_tol: f64,
    coupling: &RMat,
    noise: &RVec,
    feasible: impl Fn(&RVec) -> bool + Copy,
) -> (RVec, f64) {
    let k = noise.len();
    let mut t_lo = 0.0;
    let mut best = RVec::zeros(k);
    let mut t_hi = cap.max(1e-300) * 1.0000001;
    let mut guard = 0;
    while equal_sinr_point(t_hi, coupling, noise, feasible).is_some() {
        t_lo = t_hi;
        t_hi *= 2.0;
        guard += 1;
        if guard > 200 {
            break;
        }
    }
    if t_lo > 0.0 {
        if let Some(p) = equal_sinr_point(t_lo, coupling, noise, feasible) {
            best = p;
        }
    }
    while (t_hi - t_lo) > rel_tol * t_hi {
        let mid = 0.5 * (t_lo + t_hi);
        match equal_sinr_point(mid, coupling, noise, feasible) {
            Some(p) => {
                t_lo = mid;
                best = p;
            }
            None => t_hi = mid,
        }
    }
    (best, t_lo)
}

/// Max-min DL power allocation for fixed quantization variances.
///
/// Maximizes min_k SINR_dk subject to per-AP power budgets
/// sum_k upsilon_k theta_mk <= budget_m. Returns the equal-SINR allocation
/// and the achieved target.
pub fn maxmin_power_dl(
    coupling: &RMat,
    power_gain: &RMat,
    budgets: &[f64],
    noise: &RVec,
    rel_tol: f64,
) -> Result<(RVec, f64)> {
    let m = power_gain.nrows();
    let k = power_gain.ncols();
    if budgets.iter().any(|&b| b <= 0.0) {
        return Err(SimError::Infeasible(
            "quantization noise exhausts at least one AP power budget".into(),
        ));
    }
    let feasible = |p: &RVec| -> bool {
        (0..m).all(|mi| {
            let used: f64 = (0..k).map(|ki| p[ki] * power_gain[(mi, ki)]).sum();
            used <= budgets[mi] * (1.0 + 1e-9)
        })
    };
    // single-user caps bound the optimum: min_k over each user's best
    // achievable SINR with the whole network to itself
    let mut cap = f64::INFINITY;
    for ki in 0..k {
        let mut p_max = f64::INFINITY;
        for mi in 0..m {
            let g = power_gain[(mi, ki)];
            if g > 1e-300 {
                p_max = p_max.min(budgets[mi] / g);
            }
        }
        if p_max.is_infinite() {
            p_max = 1e12;
        }
        let s = p_max / (p_max * coupling[(ki, ki)] + noise[ki]);
        cap = cap.min(s);
    }
    if !cap.is_finite() || cap <= 0.0 {
        return Ok((RVec::zeros(k), 0.0));
    }
    Ok(maxmin_bisect(cap, rel_tol, coupling, noise, feasible))
}

/// Max-min UL power-coefficient allocation for fixed quantization variances:
/// maximizes min_k SINR_uk subject to 0 <= omega_k <= 1.
pub fn maxmin_power_ul(coupling: &RMat, noise_over_pu: &RVec, rel_tol: f64) -> (RVec, f64) {
    let k = noise_over_pu.len();
    let feasible = |p: &RVec| -> bool { p.iter().all(|&x| x <= 1.0 + 1e-9) };
    let mut cap = f64::INFINITY;
    for ki in 0..k {
        let s = 1.0 / (coupling[(ki, ki)] + noise_over_pu[ki]);
        cap = cap.min(s);
    }
    let (p, t) = maxmin_bisect(cap, rel_tol, coupling, noise_over_pu, feasible);
    (p.map(|x| x.min(1.0)), t)
}

/// Block coordinate descent for the downlink, starting from the uniform
/// power level set by the most loaded AP budget.
pub fn bcd_dl(ctx: &DropContext, exp: &ExpectationSet) -> Result<AllocationState> {
    let m = ctx.ap_count();
    let k = ctx.ms_count();
    let p_max = ctx.config.radio.ap_max_power_watt;
    let mut level = f64::INFINITY;
    for mi in 0..m {
        let load: f64 = (0..k).map(|ki| exp.precoded_power_gain[(mi, ki)]).sum();
        if load > 0.0 {
            level = level.min(p_max / load);
        }
    }
    if !level.is_finite() {
        level = 0.0;
    }
    bcd_dl_from(ctx, exp, RVec::from_element(k, level))
}

/// Downlink BCD from an explicit initial power block.
pub fn bcd_dl_from(
    ctx: &DropContext,
    exp: &ExpectationSet,
    initial_powers: RVec,
) -> Result<AllocationState> {
    let m = ctx.ap_count();
    let k = ctx.ms_count();
    let la = ctx.active_chains();
    let n_ant = ctx.config.network.antennas_per_ap;
    let p_max = ctx.config.radio.ap_max_power_watt;
    let capacity = ctx.config.fronthaul.dl_capacity_bits;
    let sol = &ctx.config.solver;
    let quant_weight = (la * n_ant) as f64;

    let mut powers = initial_powers;

    let mut best: Option<AllocationState> = None;
    let mut trace = Vec::new();
    let mut prev_rate = f64::NAN;

    for iter in 1..=sol.bcd_max_iters {
        let mut quant = vec![0.0; m];
        for mi in 0..m {
            quant[mi] = solve_quant_dl(
                &powers,
                &exp.bb_covariances[mi],
                capacity,
                sol.sigma_q_min_watt,
            )?;
        }
        let budgets: Vec<f64> = quant.iter().map(|q| p_max - q * quant_weight).collect();
        if budgets.iter().any(|&b| b <= 0.0) {
            return Ok(AllocationState::infeasible(
                Direction::Downlink,
                k,
                m,
                "quantization noise exceeds the power budget",
            ));
        }

        let noise = RVec::from_fn(k, |ki, _| {
            dl_noise_constant(ki, &quant, &ctx.rrf_traces, ctx.dl_noise_var)
        });
        let (new_powers, target) = maxmin_power_dl(
            &exp.dl_error_coupling,
            &exp.precoded_power_gain,
            &budgets,
            &noise,
            sol.power_bisect_rel_tol,
        )?;
        powers = new_powers;
        let min_rate = rate(target);
        trace.push(min_rate);

        // fronthaul equality residuals at the (powers, quant) pair
        let mut equality_ok = true;
        let mut bounds = vec![0.0; m];
        for mi in 0..m {
            let b = fronthaul_dl_bound(&powers, &exp.bb_covariances[mi], quant[mi])?;
            bounds[mi] = b;
            if quant[mi] > sol.sigma_q_min_watt * (1.0 + 1e-9) {
                if (b - capacity).abs() > equality_log_tol() {
                    equality_ok = false;
                }
            } else if b > capacity + equality_log_tol() {
                equality_ok = false;
            }
        }

        let state = finalize_per_user_dl(
            AllocationState {
                direction: Direction::Downlink,
                powers: powers.clone(),
                quant_vars: quant,
                min_sinr: target,
                min_rate,
                per_user_rates: Vec::new(),
                fronthaul_bounds: bounds,
                trace: trace.clone(),
                iterations: iter,
                status: AllocationStatus::MaxIters,
            },
            ctx,
            exp,
        );

        // only iterates whose fronthaul equality holds are candidates for
        // the returned allocation; intermediate power steps can overshoot
        // the capacity until the next quantization update catches up
        let improved = best.as_ref().is_none_or(|b| state.min_rate > b.min_rate);
        if equality_ok && improved {
            best = Some(state.clone());
        }
        let converged = !prev_rate.is_nan()
            && (min_rate - prev_rate).abs() <= sol.bcd_rel_tol * prev_rate.max(1e-12)
            && equality_ok;
        if converged {
            let mut done = best.unwrap_or(state);
            done.status = AllocationStatus::Converged;
            done.trace = trace;
            done.iterations = iter;
            return Ok(done);
        }
        prev_rate = min_rate;
        if iter == sol.bcd_max_iters {
            let mut done = best.unwrap_or(state);
            done.status = AllocationStatus::MaxIters;
            done.trace = trace;
            done.iterations = iter;
            return Ok(done);
        }
    }
    unreachable!("loop returns at the iteration cap")
}

fn finalize_per_user_dl(
    mut state: AllocationState,
    ctx: &DropContext,
    exp: &ExpectationSet,
) -> AllocationState {
    state.per_user_rates = (0..ctx.ms_count())
        .map(|ki| {
            rate(sinr_dl(
                ki,
                &state.powers,
                &exp.dl_error_coupling,
                &state.quant_vars,
                &ctx.rrf_traces,
                ctx.dl_noise_var,
            ))
        })
        .collect();
    state
}

/// Block coordinate descent for the uplink.
pub fn bcd_ul(ctx: &DropContext, exp: &ExpectationSet) -> Result<AllocationState> {
    let m = ctx.ap_count();
    let k = ctx.ms_count();
    let capacity = ctx.config.fronthaul.ul_capacity_bits;
    let p_u = ctx.config.radio.ms_power_watt;
    let sol = &ctx.config.solver;
    if capacity <= 0.0 {
        return Ok(AllocationState::infeasible(
            Direction::Uplink,
            k,
            m,
            "capacity",
        ));
    }

    let mut coeffs = RVec::from_element(k, 1.0);
    let mut best: Option<AllocationState> = None;
    let mut trace = Vec::new();
    let mut prev_rate = f64::NAN;

    for iter in 1..=sol.bcd_max_iters {
        let mut quant = vec![0.0; m];
        for mi in 0..m {
            quant[mi] = solve_quant_ul(
                &coeffs,
                &ctx.rf_plan.equivalent_covariances[mi],
                p_u,
                ctx.ul_noise_var,
                capacity,
                sol.sigma_q_min_watt,
            )?;
        }
        let noise_over_pu = RVec::from_fn(k, |ki, _| {
            crate::rates::ul_noise_constant(ki, &quant, &exp.ul_combiner_rows, ctx.ul_noise_var)
                / p_u
        });
        let (new_coeffs, target) = maxmin_power_ul(
            &exp.ul_error_coupling,
            &noise_over_pu,
            sol.power_bisect_rel_tol,
        );
        coeffs = new_coeffs;
        let min_rate = rate(target);
        trace.push(min_rate);

        let mut equality_ok = true;
        let mut bounds = vec![0.0; m];
        for mi in 0..m {
            let b = fronthaul_ul_bound(
                &coeffs,
                &ctx.rf_plan.equivalent_covariances[mi],
                p_u,
                ctx.ul_noise_var,
                quant[mi],
            )?;
            bounds[mi] = b;
            if quant[mi] > sol.sigma_q_min_watt * (1.0 + 1e-9) {
                if (b - capacity).abs() > equality_log_tol() {
                    equality_ok = false;
                }
            } else if b > capacity + equality_log_tol() {
                equality_ok = false;
            }
        }

        let per_user: Vec<f64> = (0..k)
            .map(|ki| {
                rate(sinr_ul(
                    ki,
                    &coeffs,
                    &exp.ul_error_coupling,
                    &quant,
                    &exp.ul_combiner_rows,
                    p_u,
                    ctx.ul_noise_var,
                ))
            })
            .collect();
        let state = AllocationState {
            direction: Direction::Uplink,
            powers: coeffs.clone(),
            quant_vars: quant,
            min_sinr: target,
            min_rate,
            per_user_rates: per_user,
            fronthaul_bounds: bounds,
            trace: trace.clone(),
            iterations: iter,
            status: AllocationStatus::MaxIters,
        };

        let improved = best.as_ref().is_none_or(|b| state.min_rate > b.min_rate);
        if equality_ok && improved {
            best = Some(state.clone());
        }
        let converged = !prev_rate.is_nan()
            && (min_rate - prev_rate).abs() <= sol.bcd_rel_tol * prev_rate.max(1e-12)
            && equality_ok;
        if converged {
            let mut done = best.unwrap_or(state);
            done.status = AllocationStatus::Converged;
            done.trace = trace;
            done.iterations = iter;
            return Ok(done);
        }
        prev_rate = min_rate;
        if iter == sol.bcd_max_iters {
            let mut done = best.unwrap_or(state);
            done.status = AllocationStatus::MaxIters;
            done.trace = trace;
            done.iterations = iter;
            return Ok(done);
        }
    }
    unreachable!("loop returns at the iteration cap")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quant_dl_closed_forms() {
        // sum upsilon R^BB = I_2: (1 + 1/s)^2 = 2^C
        let covs = vec![CMat::identity(2, 2)];
        let powers = RVec::from_vec(vec![1.0]);
        let s = solve_quant_dl(&powers, &covs, 2.0, 1e-18).unwrap();
        assert_relative_eq!(s, 1.0, max_relative = 1e-6);
        let s = solve_quant_dl(&powers, &covs, 4.0, 1e-18).unwrap();
        assert_relative_eq!(s, 1.0 / 3.0, max_relative = 1e-6);
        // zero powers -> floor
        let s = solve_quant_dl(&RVec::zeros(1), &covs, 2.0, 1e-18).unwrap();
        assert_eq!(s, 1e-18);
        // effectively infinite capacity -> floor
        let s = solve_quant_dl(&powers, &covs, 1e6, 1e-18).unwrap();
        assert_eq!(s, 1e-18);
    }

    #[test]
    fn quant_ul_closed_forms() {
        // omega = 0, L_A = 2, sigma_u^2 = 1, C = 2: (1 + 1/s)^2 = 4 -> s = 1
        let covs = vec![CMat::identity(2, 2)];
        let zero = RVec::zeros(1);
        let s = solve_quant_ul(&zero, &covs, 0.1, 1.0, 2.0, 1e-18).unwrap();
        assert_relative_eq!(s, 1.0, max_relative = 1e-6);
        // doubling the signal part strictly increases the root
        let w = RVec::from_vec(vec![1.0]);
        let s1 = solve_quant_ul(&w, &covs, 0.5, 1.0, 3.0, 1e-18).unwrap();
        let s2 = solve_quant_ul(&w, &covs, 1.0, 1.0, 3.0, 1e-18).unwrap();
        assert!(s2 > s1);
        // infinite capacity clamps at the floor
        let s = solve_quant_ul(&w, &covs, 0.5, 1.0, 1e9, 1e-13).unwrap();
        assert_eq!(s, 1e-13);
        assert!(solve_quant_ul(&w, &covs, 0.5, 1.0, 0.0, 1e-18).is_err());
    }

    #[test]
    fn quant_roots_satisfy_equation() {
        let mut rng = crate::rng::substream(8, crate::rng::Purpose::Fading, 0, 0);
        let la = 3;
        for trial in 0..10u64 {
            let a = crate::linalg::complex_normal_matrix(&mut rng, la, la, 1.0);
            let cov = &a * a.adjoint();
            let covs = vec![cov];
            let powers = RVec::from_vec(vec![0.5 + trial as f64 * 0.1]);
            let c = 5.0;
            let s = solve_quant_dl(&powers, &covs, c, 1e-18).unwrap();
            let b = fronthaul_dl_bound(&powers, &covs, s).unwrap();
            assert!((b - c).abs() < 1e-9, "residual {}", (b - c).abs());
        }
    }

    #[test]
    fn maxmin_dl_symmetric_two_users() {
        // no coupling, unit noise, theta = 1, budget 2 per the single AP:
        // equal split (1, 1), SINR 1, rate 1
        let coupling = RMat::zeros(2, 2);
        let gain = RMat::from_element(1, 2, 1.0);
        let noise = RVec::from_element(2, 1.0);
        let (p, t) = maxmin_power_dl(&coupling, &gain, &[2.0], &noise, 1e-6).unwrap();
        assert_relative_eq!(t, 1.0, max_relative = 1e-4);
        assert_relative_eq!(p[0], 1.0, max_relative = 1e-3);
        assert_relative_eq!(p[1], 1.0, max_relative = 1e-3);
    }

    #[test]
    fn maxmin_dl_single_user_takes_budget() {
        let coupling = RMat::zeros(1, 1);
        let gain = RMat::from_element(1, 1, 1.0);
        let noise = RVec::from_element(1, 0.25);
        let (p, t) = maxmin_power_dl(&coupling, &gain, &[3.0], &noise, 1e-6).unwrap();
        assert_relative_eq!(p[0], 3.0, max_relative = 1e-4);
        assert_relative_eq!(t, 12.0, max_relative = 1e-4);
    }

    #[test]
    fn maxmin_dl_infeasible_budget() {
        let coupling = RMat::zeros(1, 1);
        let gain = RMat::from_element(1, 1, 1.0);
        let noise = RVec::from_element(1, 1.0);
        assert!(matches!(
            maxmin_power_dl(&coupling, &gain, &[-0.1], &noise, 1e-6),
            Err(SimError::Infeasible(_))
        ));
    }

    #[test]
    fn maxmin_dl_equal_sinr_property() {
        // random 3-user instance: all SINRs equal the target at the optimum
        let coupling = RMat::from_row_slice(
            3,
            3,
            &[0.05, 0.02, 0.01, 0.03, 0.06, 0.02, 0.01, 0.04, 0.05],
        );
        let gain = RMat::from_row_slice(2, 3, &[1.0, 0.5, 0.8, 0.6, 1.2, 0.7]);
        let noise = RVec::from_vec(vec![0.4, 0.3, 0.5]);
        let budgets = [1.5, 2.0];
        let (p, t) = maxmin_power_dl(&coupling, &gain, &budgets, &noise, 1e-6).unwrap();
        for ki in 0..3 {
            let s = sinr_dl(
                ki,
                &p,
                &coupling,
                &[0.0, 0.0],
                &RMat::zeros(2, 3),
                noise[ki],
            );
            assert_relative_eq!(s, t, max_relative = 1e-3);
        }
        // budgets hold
        for mi in 0..2 {
            let used: f64 = (0..3).map(|ki| p[ki] * gain[(mi, ki)]).sum();
            assert!(used <= budgets[mi] * (1.0 + 1e-6));
        }
    }

    #[test]
    fn maxmin_ul_single_user_hits_box() {
        let coupling = RMat::zeros(1, 1);
        let noise = RVec::from_element(1, 0.5); // c / P_u
        let (w, t) = maxmin_power_ul(&coupling, &noise, 1e-6);
        assert_relative_eq!(w[0], 1.0, max_relative = 1e-3);
        assert_relative_eq!(t, 2.0, max_relative = 1e-3);
    }

    #[test]
    fn maxmin_ul_symmetric_pair_saturates() {
        let coupling = RMat::from_row_slice(2, 2, &[0.1, 0.3, 0.3, 0.1]);
        let noise = RVec::from_element(2, 0.2);
        let (w, t) = maxmin_power_ul(&coupling, &noise, 1e-6);
        assert_relative_eq!(w[0], 1.0, max_relative = 1e-3);
        assert_relative_eq!(w[1], 1.0, max_relative = 1e-3);
        // at omega = (1,1): SINR = 1 / (0.1 + 0.3 + 0.2)
        assert_relative_eq!(t, 1.0 / 0.6, max_relative = 1e-3);
    }
}
