//! Analog RF stage: phase-only statistical eigen beamforming, selection of
//! which users each AP beamforms when K > L, equivalent post-RF covariances,
//! and the receive-chain noise model.

use crate::channel::LinkLargeScale;
use crate::config::RadioConfig;
use crate::error::{Result, SimError};
use crate::linalg::dominant_eigenpair;
use crate::{CMat, RMat, C64};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reference noise temperature, K.
pub const T0_KELVIN: f64 = 290.0;

/// Per-AP RF plan: which users each AP beamforms, the phase-only RF matrix,
/// and the equivalent post-RF covariance of every link.
#[derive(Debug, Clone)]
pub struct RfPlan {
    /// Served MS indices per AP, ascending, each of length min(K, L).
    pub served: Vec<Vec<usize>>,
    /// Per-AP RF matrix, N x L_A, unit-modulus entries.
    pub rf_matrices: Vec<CMat>,
    /// Equivalent covariance R^RF = W^T R W* for every (AP, MS) pair,
    /// L_A x L_A, row-major by AP.
    pub equivalent_covariances: Vec<Vec<CMat>>,
    /// Average equivalent-channel energies xi (M x K), the link weights.
    pub link_weights: RMat,
}

impl RfPlan {
    pub fn active_chains(&self) -> usize {
        self.served[0].len()
    }

    pub fn serves(&self, ap: usize, ms: usize) -> bool {
        self.served[ap].binary_search(&ms).is_ok()
    }
}

/// Phase-only RF column from a link covariance: e^{-j angle(u)} elementwise,
/// with u the dominant eigenvector. The eigenvector gauge is fixed inside
/// [`dominant_eigenpair`], so the output is deterministic.
pub fn rf_column(covariance: &CMat) -> Result<nalgebra::DVector<C64>> {
    if covariance.norm() == 0.0 {
        return Err(SimError::Domain(
            "rf_column needs a nonzero covariance; exclude outage links".into(),
        ));
    }
    let (_, u) = dominant_eigenpair(covariance);
    Ok(nalgebra::DVector::from_fn(u.len(), |i, _| {
        let phase = u[i].arg();
        C64::new(phase.cos(), -phase.sin())
    }))
}

/// Average Frobenius energy of the equivalent channel through one RF column:
/// xi = w^T R w* (real and nonnegative for Hermitian PSD R).
pub fn link_weight(rf_col: &nalgebra::DVector<C64>, covariance: &CMat) -> f64 {
    let w_conj = rf_col.conjugate();
    let quad = rf_col.transpose() * covariance * w_conj;
    quad[(0, 0)].re.max(0.0)
}

/// Reverse-delete selection of the user sets.
///
/// Starts fully connected and performs M*(K-L) removals. Each removal picks,
/// among edges leaving APs that still beamform more than L users, one whose
/// removal maximizes the post-removal minimum over users of their summed
/// link weights, breaking ties by minimum edge weight, then lowest AP index,
/// then lowest MS index. When K <= L every AP keeps all users.
pub fn select_users(weights: &RMat, rf_chains: usize) -> Vec<Vec<usize>> {
    let m = weights.nrows();
    let k = weights.ncols();
    if k <= rf_chains {
        return vec![(0..k).collect(); m];
    }

    let mut connected = vec![vec![true; k]; m];
    let mut degree = vec![k; m];
    let mut sum_energy: Vec<f64> = (0..k).map(|j| weights.column(j).sum()).collect();

    let removals = m * (k - rf_chains);
    for _ in 0..removals {
        // two smallest user energies, to evaluate removals in O(1) each
        let (mut min1, mut min1_idx, mut min2) = (f64::INFINITY, usize::MAX, f64::INFINITY);
        for (j, &e) in sum_energy.iter().enumerate() {
            if e < min1 {
                min2 = min1;
                min1 = e;
                min1_idx = j;
            } else if e < min2 {
                min2 = e;
            }
        }

        let mut best: Option<(f64, f64, usize, usize)> = None; // (-score, weight, ap, ms)
        for ap in 0..m {
            if degree[ap] <= rf_chains {
                continue;
            }
            for ms in 0..k {
                if !connected[ap][ms] {
                    continue;
                }
                let w = weights[(ap, ms)];
                let reduced = sum_energy[ms] - w;
                let score = if ms == min1_idx {
                    reduced.min(min2)
                } else {
                    reduced.min(min1)
                };
                let cand = (-score, w, ap, ms);
                if best.is_none_or(|b| cand < b) {
                    best = Some(cand);
                }
            }
        }
        let (_, _, ap, ms) = best.expect("removal budget implies a candidate edge exists");
        connected[ap][ms] = false;
        degree[ap] -= 1;
        sum_energy[ms] -= weights[(ap, ms)];
    }

    (0..m)
        .map(|ap| (0..k).filter(|&ms| connected[ap][ms]).collect())
        .collect()
}

/// Equivalent post-RF covariance R^RF = W^T R W*.
pub fn equivalent_covariance(rf_matrix: &CMat, covariance: &CMat) -> CMat {
    let r = rf_matrix.transpose() * covariance * rf_matrix.conjugate();
    // R Hermitian implies W^T R W* Hermitian; scrub rounding
    (r.clone() + r.adjoint()) * C64::new(0.5, 0.0)
}

/// Thermal noise variance at the output of one receive chain, watts.
///
/// Each chain sees N antenna branches: LNA, phase shifter and an N-input
/// power combiner in front of the RF chain, so the equivalent noise
/// temperature is
/// `T_u = N (T0 + T_LNA + T0 (L_PS L_PC - 1) / G_LNA + T_RF L_PS L_PC / G_LNA)`
/// with component temperatures derived from their noise figures.
pub fn uplink_noise_variance(n_antennas: usize, radio: &RadioConfig) -> Result<f64> {
    let g_lna = 10f64.powf(radio.lna_gain_db / 10.0);
    let l_ps = 10f64.powf(radio.phase_shifter_loss_db / 10.0);
    let l_pc = 10f64.powf(radio.combiner_loss_db / 10.0);
    if g_lna <= 0.0 || l_ps <= 0.0 || l_pc <= 0.0 {
        return Err(SimError::Config(
            "gains and insertion losses must be positive".into(),
        ));
    }
    let t_lna = T0_KELVIN * (10f64.powf(radio.nf_lna_db / 10.0) - 1.0);
    let t_rf = T0_KELVIN * (10f64.powf(radio.nf_rf_chain_db / 10.0) - 1.0);
    let t_u = n_antennas as f64
        * (T0_KELVIN
            + t_lna
            + T0_KELVIN * (l_ps * l_pc - 1.0) / g_lna
            + t_rf * l_ps * l_pc / g_lna);
    Ok(BOLTZMANN * t_u * radio.bandwidth_hz)
}

/// Thermal noise variance at an MS receiver, watts: k_B T0 B 10^(NF/10).
pub fn ms_noise_variance(radio: &RadioConfig) -> f64 {
    BOLTZMANN * T0_KELVIN * radio.bandwidth_hz * 10f64.powf(radio.nf_ms_db / 10.0)
}

/// Build the full RF plan for a drop: per-link RF columns and weights,
/// reverse-delete user selection, per-AP RF matrices and all equivalent
/// covariances.
///
/// APs whose link to a selected user is in outage keep an all-ones column
/// there; the zero covariance makes that column contribute nothing.
pub fn build_rf_plan(links: &[Vec<LinkLargeScale>], rf_chains: usize) -> Result<RfPlan> {
    let m = links.len();
    let k = links[0].len();
    let n = links[0][0].covariance.nrows();

    let mut columns: Vec<Vec<nalgebra::DVector<C64>>> = Vec::with_capacity(m);
    let mut weights = RMat::zeros(m, k);
    for (mi, row) in links.iter().enumerate() {
        let mut per_ap = Vec::with_capacity(k);
        for (ki, link) in row.iter().enumerate() {
            let col = if link.covariance.norm() == 0.0 {
                nalgebra::DVector::from_element(n, C64::new(1.0, 0.0))
            } else {
                rf_column(&link.covariance)?
            };
            weights[(mi, ki)] = link_weight(&col, &link.covariance);
            per_ap.push(col);
        }
        columns.push(per_ap);
    }

    let served = select_users(&weights, rf_chains);

    let rf_matrices: Vec<CMat> = (0..m)
        .map(|mi| {
            let cols = &served[mi];
            let mut w = CMat::zeros(n, cols.len());
            for (j, &ki) in cols.iter().enumerate() {
                w.set_column(j, &columns[mi][ki]);
            }
            w
        })
        .collect();

    let equivalent_covariances: Vec<Vec<CMat>> = (0..m)
        .map(|mi| {
            (0..k)
                .map(|ki| equivalent_covariance(&rf_matrices[mi], &links[mi][ki].covariance))
                .collect()
        })
        .collect();

    Ok(RfPlan {
        served,
        rf_matrices,
        equivalent_covariances,
        link_weights: weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use crate::CVec;
    use approx::assert_relative_eq;

    #[test]
    fn rf_column_real_eigenvector_gives_all_ones() {
        let u = CVec::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0)]);
        let r = &u * u.adjoint();
        let col = rf_column(&r).unwrap();
        for i in 0..2 {
            assert_relative_eq!(col[i].re, 1.0, epsilon = 1e-12);
            assert!(col[i].im.abs() < 1e-12);
        }
    }

    #[test]
    fn rf_column_negates_phases() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = CVec::from_vec(vec![C64::new(s, 0.0), C64::new(0.0, s)]);
        let r = &u * u.adjoint();
        let col = rf_column(&r).unwrap();
        assert_relative_eq!(col[0].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(col[1].im, -1.0, epsilon = 1e-12);
        // unit modulus, bit-exact by construction of cos/sin
        for i in 0..2 {
            assert!((col[i].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rf_column_rejects_zero_matrix() {
        assert!(rf_column(&CMat::zeros(3, 3)).is_err());
    }

    #[test]
    fn link_weight_identity_covariance() {
        let n = 5;
        let col = nalgebra::DVector::from_element(n, C64::new(1.0, 0.0));
        let xi = link_weight(&col, &CMat::identity(n, n));
        assert_relative_eq!(xi, n as f64, epsilon = 1e-12);
        assert_eq!(link_weight(&col, &CMat::zeros(n, n)), 0.0);
    }

    #[test]
    fn link_weight_matches_sampled_energy() {
        // xi = E || w^T h ||^2 over small-scale draws
        let mut config = crate::SimConfig::default();
        config.network.ap_count = 1;
        config.network.ms_count = 1;
        config.network.antennas_per_ap = 8;
        let scenario = crate::geometry::generate_scenario(&config, 3).unwrap();
        let links = crate::channel::draw_link_large_scale(&scenario, &config, 3).unwrap();
        let link = &links[0][0];
        let col = rf_column(&link.covariance).unwrap();
        let xi = link_weight(&col, &link.covariance);

        let n_draws = 10_000;
        let mut acc = 0.0;
        for i in 0..n_draws {
            let mut rng = substream(3, Purpose::Fading, 0, i as u64);
            let h = crate::channel::draw_small_scale(link, &mut rng);
            let y = col.transpose() * h;
            acc += y[(0, 0)].norm_sqr();
        }
        let emp = acc / n_draws as f64;
        assert!((emp - xi).abs() / xi < 0.05, "sampled {emp} vs xi {xi}");
    }

    #[test]
    fn select_users_k_not_above_l_keeps_everyone() {
        let weights = RMat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let sets = select_users(&weights, 2);
        assert_eq!(sets, vec![vec![0, 1], vec![0, 1]]);
    }

    #[test]
    fn select_users_single_ap_drops_weakest() {
        // every removal zeroes one user's sum energy, so min is 0 for all
        // candidates; the min-weight tie-break drops the weakest link
        let weights = RMat::from_row_slice(1, 3, &[3.0, 2.0, 1.0]);
        let sets = select_users(&weights, 2);
        assert_eq!(sets, vec![vec![0, 1]]);
    }

    #[test]
    fn select_users_degree_and_removal_count() {
        let mut rng = substream(5, Purpose::PilotAssign, 0, 0);
        use rand::Rng;
        let m = 6;
        let k = 9;
        let l = 4;
        let weights = RMat::from_fn(m, k, |_, _| rng.random::<f64>());
        let sets = select_users(&weights, l);
        for s in &sets {
            assert_eq!(s.len(), l);
        }
        // scale invariance of the argmax/argmin structure (power-of-two
        // scales commute exactly with rounding)
        let scaled = select_users(&(weights * 32.0), l);
        assert_eq!(sets, scaled);
    }

    #[test]
    fn select_users_prefers_preserving_min_energy() {
        // first removal: dropping (AP0, MS0) leaves energies (5.0, 1.1),
        // min 1.1, the best over all four candidate edges; user 0 is covered
        // strongly by AP 1 anyway
        let weights = RMat::from_row_slice(2, 2, &[1.0, 1.0, 5.0, 0.1]);
        let sets = select_users(&weights, 1);
        assert_eq!(sets[0], vec![1]);
        assert_eq!(sets[1], vec![0]);
    }

    #[test]
    fn equivalent_covariance_shapes_and_hermitian() {
        let n = 4;
        let col = nalgebra::DVector::from_element(n, C64::new(1.0, 0.0));
        let mut w = CMat::zeros(n, 1);
        w.set_column(0, &col);
        let r_eq = equivalent_covariance(&w, &CMat::identity(n, n));
        assert_eq!(r_eq.shape(), (1, 1));
        assert_relative_eq!(r_eq[(0, 0)].re, n as f64, epsilon = 1e-12);
        assert_eq!(equivalent_covariance(&w, &CMat::zeros(n, n)).norm(), 0.0);
    }

    #[test]
    fn uplink_noise_default_parameters() {
        // frozen from independent arithmetic on the default parameter set:
        // T_u/N = 453.8565941594 K, sigma_u^2(1) = 1.2532333057e-13 W
        let radio = RadioConfig::default();
        let v1 = uplink_noise_variance(1, &radio).unwrap();
        assert_relative_eq!(v1, 1.2532333057390447e-13, max_relative = 1e-9);
        let v16 = uplink_noise_variance(16, &radio).unwrap();
        assert_relative_eq!(v16, 16.0 * v1, max_relative = 1e-12);
    }

    #[test]
    fn uplink_noise_limiting_case() {
        // huge LNA gain and lossless passives leave T_u = N (T0 + T_LNA)
        let mut radio = RadioConfig::default();
        radio.lna_gain_db = 300.0;
        radio.phase_shifter_loss_db = 0.0;
        radio.combiner_loss_db = 0.0;
        let v = uplink_noise_variance(4, &radio).unwrap();
        let t_lna = T0_KELVIN * (10f64.powf(radio.nf_lna_db / 10.0) - 1.0);
        let expected = BOLTZMANN * 4.0 * (T0_KELVIN + t_lna) * radio.bandwidth_hz;
        assert_relative_eq!(v, expected, max_relative = 1e-9);
    }

    #[test]
    fn ms_noise_default() {
        // k_B T0 B 10^0.9, frozen
        assert_relative_eq!(
            ms_noise_variance(&RadioConfig::default()),
            6.360793201074298e-13,
            max_relative = 1e-9
        );
    }

    #[test]
    fn rf_plan_phase_only_and_psd() {
        let mut config = crate::SimConfig::default();
        config.network.ap_count = 3;
        config.network.ms_count = 5;
        config.network.antennas_per_ap = 8;
        config.network.rf_chains = 2;
        let scenario = crate::geometry::generate_scenario(&config, 21).unwrap();
        let links = crate::channel::draw_link_large_scale(&scenario, &config, 21).unwrap();
        let plan = build_rf_plan(&links, config.network.rf_chains).unwrap();

        assert_eq!(plan.active_chains(), 2);
        for w in &plan.rf_matrices {
            for e in w.iter() {
                assert!((e.norm() - 1.0).abs() < 1e-12);
            }
        }
        for mi in 0..3 {
            for ki in 0..5 {
                let r = &plan.equivalent_covariances[mi][ki];
                assert!(crate::linalg::hermitian_deviation(r) < 1e-12);
                // each column contributes w^T R w* <= N * lambda_max(R)
                let eig = crate::linalg::hermitian_eigenvalues(&links[mi][ki].covariance);
                let lambda_max = eig.last().copied().unwrap_or(0.0);
                let bound = plan.active_chains() as f64
                    * config.network.antennas_per_ap as f64
                    * lambda_max;
                assert!(r.trace().re <= bound * (1.0 + 1e-9) + 1e-30);
                for lambda in crate::linalg::hermitian_eigenvalues(r) {
                    assert!(lambda >= -1e-10 * (1.0 + r.trace().re));
                }
            }
        }
    }
}
