//! Three-state clustered mmWave channel model.
//!
//! Each AP-MS link is in outage, LOS or NLOS with distance-dependent
//! probabilities. Non-outage links get a floating-intercept path loss with
//! spatially correlated shadowing, a random cluster geometry (cluster count,
//! per-cluster power fractions, central angles, per-path angles), and an
//! N x N spatial covariance matrix. Small-scale channel vectors are drawn
//! per coherence interval on top of the fixed per-drop geometry.

use crate::config::{ChannelConfig, SimConfig};
use crate::error::{Result, SimError};
use crate::geometry::NetworkScenario;
use crate::linalg::complex_normal_vector;
use crate::rng::{substream, Purpose};
use crate::{CMat, CVec, RMat, RVec, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson, Uniform};

/// Propagation condition of one AP-MS link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkState {
    Outage,
    Los,
    Nlos,
}

impl LinkState {
    pub fn as_str(&self) -> &'static str {
        match self {
            LinkState::Outage => "outage",
            LinkState::Los => "los",
            LinkState::Nlos => "nlos",
        }
    }
}

/// Scattering geometry of one non-outage link, fixed for a whole drop.
#[derive(Debug, Clone)]
pub struct ClusterGeometry {
    /// Per-cluster normalized power fractions gamma_c; sum(gamma_c) * P = N.
    pub power_fractions: Vec<f64>,
    /// Per-cluster central azimuth, radians in [-pi, pi].
    pub center_azimuth: Vec<f64>,
    /// Per-cluster central elevation (the LOS elevation angle), radians.
    pub center_elevation: Vec<f64>,
    /// Per-cluster rms azimuth spread, radians.
    pub rms_azimuth: Vec<f64>,
    /// Per-cluster rms elevation spread, radians.
    pub rms_elevation: Vec<f64>,
    /// Path azimuths, `paths_per_cluster` per cluster, cluster-major.
    pub path_azimuth: Vec<f64>,
    /// Path elevations, same layout.
    pub path_elevation: Vec<f64>,
    /// Paths per cluster.
    pub paths_per_cluster: usize,
}

impl ClusterGeometry {
    pub fn cluster_count(&self) -> usize {
        self.power_fractions.len()
    }

    pub fn total_paths(&self) -> usize {
        self.cluster_count() * self.paths_per_cluster
    }
}

/// Large-scale state of one link: everything that stays fixed for a drop.
#[derive(Debug, Clone)]
pub struct LinkLargeScale {
    pub state: LinkState,
    /// Path loss including shadowing, dB; infinite for outage links.
    pub pl_db: f64,
    /// Shadowing component, dB (zero for outage links).
    pub shadow_db: f64,
    pub clusters: Option<ClusterGeometry>,
    /// Spatial covariance matrix R (N x N), zero for outage links.
    pub covariance: CMat,
    /// Steering matrix: one column per path (N x total_paths).
    steering: CMat,
    /// Per-path complex-gain standard deviations.
    path_std: RVec,
}

impl LinkLargeScale {
    /// Linear large-scale gain 10^(-PL/10); zero for outage.
    pub fn linear_gain(&self) -> f64 {
        if self.pl_db.is_infinite() {
            0.0
        } else {
            10f64.powf(-self.pl_db / 10.0)
        }
    }
}

/// Link-state probabilities (p_out, p_los, p_nlos) at distance `d` meters.
pub fn link_state_probs(d: f64, cfg: &ChannelConfig) -> Result<(f64, f64, f64)> {
    if d <= 0.0 || !d.is_finite() {
        return Err(SimError::Domain(format!(
            "link distance must be > 0, got {d}"
        )));
    }
    let p_out = (1.0 - (-d / cfg.outage_decay_m + cfg.outage_offset).exp()).max(0.0);
    let p_los = (1.0 - p_out) * (-d / cfg.los_decay_m).exp();
    let p_nlos = 1.0 - p_out - p_los;
    Ok((p_out, p_los, p_nlos))
}

/// Draw one link state given a uniform sample.
fn draw_state(d: f64, cfg: &ChannelConfig, rng: &mut ChaCha8Rng) -> Result<LinkState> {
    let (p_out, p_los, _) = link_state_probs(d, cfg)?;
    let u: f64 = rng.random();
    Ok(if u < p_out {
        LinkState::Outage
    } else if u < p_out + p_los {
        LinkState::Los
    } else {
        LinkState::Nlos
    })
}

/// Path loss in dB for a non-outage link: alpha + 10 beta log10(d) + shadow.
/// Outage links report infinite loss.
pub fn path_loss_db(d: f64, state: LinkState, shadow_db: f64, cfg: &ChannelConfig) -> Result<f64> {
    if d <= 0.0 || !d.is_finite() {
        return Err(SimError::Domain(format!(
            "link distance must be > 0, got {d}"
        )));
    }
    let (alpha, beta) = match state {
        LinkState::Outage => return Ok(f64::INFINITY),
        LinkState::Los => (cfg.pl_alpha_los_db, cfg.pl_beta_los),
        LinkState::Nlos => (cfg.pl_alpha_nlos_db, cfg.pl_beta_nlos),
    };
    Ok(alpha + 10.0 * beta * d.log10() + shadow_db)
}

/// Shadowing sigma in dB for a given state (zero in outage, where the link
/// carries no power anyway).
pub fn shadow_sigma_db(state: LinkState, cfg: &ChannelConfig) -> f64 {
    match state {
        LinkState::Outage => 0.0,
        LinkState::Los => cfg.shadow_sigma_los_db,
        LinkState::Nlos => cfg.shadow_sigma_nlos_db,
    }
}

/// Draw a correlated unit-variance Gaussian field over a set of points whose
/// pairwise correlation decays as 2^(-distance/decorrelation).
fn correlated_unit_field(pair_distances: &RMat, decorr_m: f64, rng: &mut ChaCha8Rng) -> RVec {
    let n = pair_distances.nrows();
    let mut corr = RMat::from_fn(n, n, |i, j| 2f64.powf(-pair_distances[(i, j)] / decorr_m));
    // jitter keeps Cholesky alive when two points coincide
    for i in 0..n {
        corr[(i, i)] += 1e-10;
    }
    let chol = nalgebra::Cholesky::new(corr).expect("shadowing correlation matrix must be PSD");
    let normal = Normal::new(0.0, 1.0).unwrap();
    let z = RVec::from_fn(n, |_, _| normal.sample(rng));
    chol.l() * z
}

/// Unit-variance combined shadowing field over all M x K links:
/// sqrt(delta) * a_m + sqrt(1-delta) * b_k with spatially correlated
/// AP-side and MS-side components.
pub fn draw_unit_shadow_field(scenario: &NetworkScenario, cfg: &ChannelConfig, seed: u64) -> RMat {
    let mut ap_rng = substream(seed, Purpose::ShadowApField, 0, 0);
    let mut ms_rng = substream(seed, Purpose::ShadowMsField, 0, 0);
    let a = correlated_unit_field(
        &scenario.ap_pair_distances,
        cfg.shadow_decorrelation_m,
        &mut ap_rng,
    );
    let b = correlated_unit_field(
        &scenario.ms_pair_distances,
        cfg.shadow_decorrelation_m,
        &mut ms_rng,
    );
    let wa = cfg.shadow_ap_fraction.sqrt();
    let wb = (1.0 - cfg.shadow_ap_fraction).sqrt();
    RMat::from_fn(scenario.ap_count(), scenario.ms_count(), |m, k| {
        wa * a[m] + wb * b[k]
    })
}

/// Shadowing in dB for every link, given the drawn per-link states.
pub fn draw_shadow_field(
    scenario: &NetworkScenario,
    states: &[Vec<LinkState>],
    cfg: &ChannelConfig,
    seed: u64,
) -> RMat {
    let unit = draw_unit_shadow_field(scenario, cfg, seed);
    RMat::from_fn(scenario.ap_count(), scenario.ms_count(), |m, k| {
        shadow_sigma_db(states[m][k], cfg) * unit[(m, k)]
    })
}

/// Draw the scattering geometry of one non-outage link.
///
/// Cluster count is max(Poisson(sigma_C), 1); per-cluster power fractions
/// come from U^(r_tau - 1) * 10^(Z/10) normalized so that
/// sum_c gamma_c * P = N; central azimuths are uniform on [-pi, pi];
/// central elevations sit at the LOS elevation angle; per-path angles are
/// wrapped Gaussians around the centers with exponentially distributed rms
/// spreads.
pub fn draw_cluster_geometry(
    los_elevation_rad: f64,
    n_antennas: usize,
    cfg: &ChannelConfig,
    rng: &mut ChaCha8Rng,
) -> ClusterGeometry {
    let c = if cfg.cluster_count_mean > 1e-12 {
        let poisson = Poisson::new(cfg.cluster_count_mean).unwrap();
        (poisson.sample(rng) as usize).max(1)
    } else {
        1
    };
    let p = cfg.paths_per_cluster;

    let unit = Uniform::new(0.0f64, 1.0).unwrap();
    let power_db = Normal::new(0.0, cfg.cluster_power_sigma_db).unwrap();
    let azimuth = Uniform::new_inclusive(-std::f64::consts::PI, std::f64::consts::PI).unwrap();

    fn exp_spread(mean_deg: f64, rng: &mut ChaCha8Rng) -> f64 {
        let mean = mean_deg.to_radians();
        if mean > 0.0 {
            Exp::new(1.0 / mean).unwrap().sample(rng)
        } else {
            0.0
        }
    }
    fn wrapped_gaussian(center: f64, rms: f64, rng: &mut ChaCha8Rng) -> f64 {
        if rms > 0.0 {
            wrap_angle(Normal::new(center, rms).unwrap().sample(rng))
        } else {
            wrap_angle(center)
        }
    }

    let center_azimuth: Vec<f64> = (0..c).map(|_| azimuth.sample(rng)).collect();
    let center_elevation = vec![los_elevation_rad; c];
    let rms_azimuth: Vec<f64> = (0..c)
        .map(|_| exp_spread(cfg.mean_rms_azimuth_spread_deg, rng))
        .collect();
    let rms_elevation: Vec<f64> = (0..c)
        .map(|_| exp_spread(cfg.mean_rms_elevation_spread_deg, rng))
        .collect();

    let raw: Vec<f64> = (0..c)
        .map(|_| {
            let u: f64 = unit.sample(rng);
            let z: f64 = power_db.sample(rng);
            u.powf(cfg.cluster_power_decay - 1.0) * 10f64.powf(z / 10.0)
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let power_fractions: Vec<f64> = raw
        .iter()
        .map(|g| n_antennas as f64 * g / (p as f64 * total))
        .collect();

    let mut path_azimuth = Vec::with_capacity(c * p);
    let mut path_elevation = Vec::with_capacity(c * p);
    for cluster in 0..c {
        for _ in 0..p {
            path_azimuth.push(wrapped_gaussian(
                center_azimuth[cluster],
                rms_azimuth[cluster],
                rng,
            ));
            path_elevation.push(wrapped_gaussian(
                center_elevation[cluster],
                rms_elevation[cluster],
                rng,
            ));
        }
    }

    ClusterGeometry {
        power_fractions,
        center_azimuth,
        center_elevation,
        rms_azimuth,
        rms_elevation,
        path_azimuth,
        path_elevation,
        paths_per_cluster: p,
    }
}

/// Wrap an angle into [-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrapped = x - two_pi * (x / two_pi).round();
    // round() maps +/-pi onto itself; clamp residual float spill
    wrapped.clamp(-std::f64::consts::PI, std::f64::consts::PI)
}

/// Half-wavelength uniform linear array response at azimuth `theta`. The
/// elevation argument is part of the model interface but does not affect a
/// ULA-oriented response; a planar-array response could be swapped in here.
pub fn array_response(theta: f64, _phi: f64, n: usize) -> CVec {
    let scale = 1.0 / (n as f64).sqrt();
    let s = theta.sin();
    CVec::from_fn(n, |i, _| {
        let phase = std::f64::consts::PI * i as f64 * s;
        C64::new(phase.cos(), phase.sin()) * scale
    })
}

/// Build the steering matrix (one column per path) and per-path gain
/// standard deviations for a link.
fn build_path_tables(geometry: &ClusterGeometry, pl_db: f64, n: usize) -> (CMat, RVec) {
    let gain = 10f64.powf(-pl_db / 10.0);
    let total = geometry.total_paths();
    let mut steering = CMat::zeros(n, total);
    let mut std = RVec::zeros(total);
    for c in 0..geometry.cluster_count() {
        let sigma2 = geometry.power_fractions[c] * gain;
        for p in 0..geometry.paths_per_cluster {
            let idx = c * geometry.paths_per_cluster + p;
            let a = array_response(geometry.path_azimuth[idx], geometry.path_elevation[idx], n);
            steering.set_column(idx, &a);
            std[idx] = sigma2.sqrt();
        }
    }
    (steering, std)
}

/// Spatial covariance R = 10^(-PL/10) sum_c gamma_c sum_p a a^H.
pub fn build_covariance(geometry: &ClusterGeometry, pl_db: f64, n: usize) -> CMat {
    let (steering, std) = build_path_tables(geometry, pl_db, n);
    covariance_from_tables(&steering, &std)
}

fn covariance_from_tables(steering: &CMat, path_std: &RVec) -> CMat {
    let n = steering.nrows();
    let mut r = CMat::zeros(n, n);
    for p in 0..steering.ncols() {
        let col = steering.column(p).into_owned();
        let w = C64::new(path_std[p] * path_std[p], 0.0);
        r += (&col * col.adjoint()) * w;
    }
    // scrub rounding so downstream factorizations see exact Hermitian input
    (r.clone() + r.adjoint()) * C64::new(0.5, 0.0)
}

/// Realize the full per-drop large-scale state of every link.
pub fn draw_link_large_scale(
    scenario: &NetworkScenario,
    config: &SimConfig,
    seed: u64,
) -> Result<Vec<Vec<LinkLargeScale>>> {
    let m = scenario.ap_count();
    let k = scenario.ms_count();
    let n = config.network.antennas_per_ap;
    let cfg = &config.channel;

    let mut states = vec![vec![LinkState::Outage; k]; m];
    for (mi, row) in states.iter_mut().enumerate() {
        for (ki, slot) in row.iter_mut().enumerate() {
            let mut rng = substream(seed, Purpose::LinkState, mi as u64, ki as u64);
            *slot = draw_state(scenario.distances[(mi, ki)], cfg, &mut rng)?;
        }
    }
    let shadow = draw_shadow_field(scenario, &states, cfg, seed);

    let mut links = Vec::with_capacity(m);
    for mi in 0..m {
        let mut row = Vec::with_capacity(k);
        for ki in 0..k {
            let state = states[mi][ki];
            if state == LinkState::Outage {
                row.push(LinkLargeScale {
                    state,
                    pl_db: f64::INFINITY,
                    shadow_db: 0.0,
                    clusters: None,
                    covariance: CMat::zeros(n, n),
                    steering: CMat::zeros(n, 0),
                    path_std: RVec::zeros(0),
                });
                continue;
            }
            let d = scenario.distances[(mi, ki)];
            let shadow_db = shadow[(mi, ki)];
            let pl_db = path_loss_db(d, state, shadow_db, cfg)?;
            let ap = &scenario.ap_positions[mi];
            let ms = &scenario.ms_positions[ki];
            let horizontal = ((ap.x - ms.x).powi(2) + (ap.y - ms.y).powi(2)).sqrt();
            let los_elevation = (ms.z - ap.z).atan2(horizontal);
            let mut rng = substream(seed, Purpose::Clusters, mi as u64, ki as u64);
            let clusters = draw_cluster_geometry(los_elevation, n, cfg, &mut rng);
            let (steering, path_std) = build_path_tables(&clusters, pl_db, n);
            let covariance = covariance_from_tables(&steering, &path_std);
            row.push(LinkLargeScale {
                state,
                pl_db,
                shadow_db,
                clusters: Some(clusters),
                covariance,
                steering,
                path_std,
            });
        }
        links.push(row);
    }
    Ok(links)
}

/// One small-scale channel vector h for a link: per-path CN(0, sigma_p^2)
/// gains applied to the fixed steering matrix. Outage links return zero.
pub fn draw_small_scale<R: Rng + ?Sized>(link: &LinkLargeScale, rng: &mut R) -> CVec {
    let n = link.covariance.nrows();
    if link.steering.ncols() == 0 {
        return CVec::zeros(n);
    }
    let gains = complex_normal_vector(rng, link.steering.ncols(), 1.0);
    let scaled = CVec::from_fn(link.steering.ncols(), |i, _| gains[i] * link.path_std[i]);
    &link.steering * scaled
}

/// Per-AP channel matrices H_m (N x K) for one coherence interval.
pub fn draw_channel_matrices(
    links: &[Vec<LinkLargeScale>],
    seed: u64,
    realization: u64,
) -> Vec<CMat> {
    links
        .iter()
        .enumerate()
        .map(|(mi, row)| {
            let n = row[0].covariance.nrows();
            let mut h = CMat::zeros(n, row.len());
            for (ki, link) in row.iter().enumerate() {
                let link_idx = (mi * row.len() + ki) as u64;
                let mut rng = substream(seed, Purpose::Fading, link_idx, realization);
                h.set_column(ki, &draw_small_scale(link, &mut rng));
            }
            h
        })
        .collect()
}
