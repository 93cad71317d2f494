//! Uplink pilot synthesis and MMSE estimation of the post-RF equivalent
//! channels.
//!
//! Estimation operates on the L_A-dimensional equivalent channels
//! g = W^T h, never on the N-dimensional propagation channels, so the
//! filters are small. All solves go through the Hermitian positive-definite
//! normal matrix Q (the noise term keeps it PD), never explicit inverses.

use crate::error::Result;
use crate::linalg::complex_normal_matrix;
use crate::pilot::PilotAssignment;
use crate::{CMat, CVec, C64};
use rand::Rng;

/// MMSE filter and second-order statistics for one (AP, MS) link.
#[derive(Debug, Clone)]
pub struct MmseFilter {
    /// Estimation filter D (L_A x L_A): g_hat = D Y phi*.
    pub filter: CMat,
    /// Normal matrix Q (L_A x L_A, Hermitian PD).
    pub normal: CMat,
    /// Covariance of the estimate, R_hat (L_A x L_A).
    pub estimate_cov: CMat,
    /// Covariance of the estimation error, R^RF - R_hat.
    pub error_cov: CMat,
}

/// Received pilot block at one AP: Y = sqrt(tau_p P_p) sum_k g_k phi_k^T + N,
/// with i.i.d. CN(0, noise_var) entries in N.
pub fn synthesize_pilot_rx<R: Rng + ?Sized>(
    equivalent_channels: &CMat, // L_A x K
    pilots: &PilotAssignment,
    pilot_power: f64,
    noise_var: f64,
    rng: &mut R,
) -> CMat {
    let tau_p = pilots.pilot_len();
    let k = equivalent_channels.ncols();
    let amp = C64::new((tau_p as f64 * pilot_power).sqrt(), 0.0);
    let mut y = complex_normal_matrix(rng, equivalent_channels.nrows(), tau_p, noise_var);
    for ms in 0..k {
        let g = equivalent_channels.column(ms);
        let phi = pilots.book.column(pilots.assignment[ms]);
        // y += amp * g * phi^T
        for t in 0..tau_p {
            let w = amp * phi[t];
            for r in 0..y.nrows() {
                y[(r, t)] += w * g[r];
            }
        }
    }
    y
}

/// Despread the received block onto the pilot of MS k: Y phi_k^*.
pub fn project_onto_pilot(rx: &CMat, pilots: &PilotAssignment, ms: usize) -> CVec {
    let phi = pilots.book.column(pilots.assignment[ms]).conjugate();
    rx * phi
}

/// MMSE matrices for every link of one AP.
///
/// Q_k = tau_p P_p sum_k' R_k'^RF |phi_k'^T phi_k^*|^2 + noise_var I,
/// D_k = sqrt(tau_p P_p) R_k^RF Q_k^{-1},
/// R_hat_k = tau_p P_p R_k^RF Q_k^{-1} R_k^RF^H.
pub fn mmse_matrices(
    equivalent_covs: &[CMat], // per MS, L_A x L_A
    pilots: &PilotAssignment,
    pilot_power: f64,
    noise_var: f64,
) -> Result<Vec<MmseFilter>> {
    let k = equivalent_covs.len();
    let la = equivalent_covs[0].nrows();
    let tau_pp = pilots.pilot_len() as f64 * pilot_power;
    let amp = tau_pp.sqrt();

    let mut filters = Vec::with_capacity(k);
    for ms in 0..k {
        let mut q = CMat::identity(la, la) * C64::new(noise_var, 0.0);
        for other in 0..k {
            let w = pilots.cross_correlation(other, ms) * tau_pp;
            if w > 0.0 {
                q += &equivalent_covs[other] * C64::new(w, 0.0);
            }
        }
        let chol = nalgebra::Cholesky::new(q.clone())
            .expect("normal matrix is PD by construction (noise term)");
        // Q^{-1} R^H, then adjoint: R Q^{-1} (Q Hermitian)
        let qinv_rh = chol.solve(&equivalent_covs[ms].adjoint());
        let r_qinv = qinv_rh.adjoint();
        let filter = &r_qinv * C64::new(amp, 0.0);
        let mut estimate_cov = (&r_qinv * equivalent_covs[ms].adjoint()) * C64::new(tau_pp, 0.0);
        crate::linalg::hermitianize(&mut estimate_cov);
        let error_cov = &equivalent_covs[ms] - &estimate_cov;
        filters.push(MmseFilter {
            filter,
            normal: q,
            estimate_cov,
            error_cov,
        });
    }
    Ok(filters)
}

/// Apply the MMSE filters to one received pilot block, producing the
/// estimated equivalent channels of every MS at this AP (L_A x K).
pub fn estimate_channels(rx: &CMat, filters: &[MmseFilter], pilots: &PilotAssignment) -> CMat {
    let la = rx.nrows();
    let k = filters.len();
    let mut g_hat = CMat::zeros(la, k);
    for ms in 0..k {
        let projected = project_onto_pilot(rx, pilots, ms);
        g_hat.set_column(ms, &(&filters[ms].filter * projected));
    }
    g_hat
}
