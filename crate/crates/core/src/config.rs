//! Simulation configuration: one immutable snapshot per campaign.
//!
//! Loadable from a TOML file with nested sections; every field has a default
//! so a partial file (or none at all) yields a runnable setup. Radio and
//! frame defaults follow the standard 28 GHz urban parameter set; network
//! sizes default to a desk-scale profile that keeps test suites fast (see
//! `configs/full.toml` for a full-scale profile).

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

/// Pilot assignment strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PilotStrategy {
    /// Pure random: each MS draws a pilot uniformly at random.
    Rpa,
    /// Balanced random: pilots assigned cyclically in MS order.
    Brpa,
    /// Dissimilarity clustering on large-scale fingerprints.
    #[default]
    Dcpa,
}

impl std::fmt::Display for PilotStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PilotStrategy::Rpa => write!(f, "rpa"),
            PilotStrategy::Brpa => write!(f, "brpa"),
            PilotStrategy::Dcpa => write!(f, "dcpa"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Number of access points (M).
    pub ap_count: usize,
    /// Number of single-antenna mobile stations (K).
    pub ms_count: usize,
    /// Antennas per AP (N).
    pub antennas_per_ap: usize,
    /// RF chains per AP (L). The number of active chains is min(K, L).
    pub rf_chains: usize,
    /// Coherence interval length in samples (tau_c).
    pub coherence_samples: usize,
    /// Uplink training phase length in samples (tau_p).
    pub pilot_samples: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            ap_count: 16,
            ms_count: 8,
            antennas_per_ap: 16,
            rf_chains: 4,
            coherence_samples: 200,
            pilot_samples: 15,
        }
    }
}

impl NetworkConfig {
    /// Active RF chains per AP: min(K, L).
    pub fn active_chains(&self) -> usize {
        self.ms_count.min(self.rf_chains)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Side of the square coverage area (D), meters.
    pub area_side_m: f64,
    /// AP antenna height, meters.
    pub ap_height_m: f64,
    /// MS antenna height, meters.
    pub ms_height_m: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            area_side_m: 200.0,
            ap_height_m: 15.0,
            ms_height_m: 1.65,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    /// Carrier frequency, Hz. The path-loss fit constants in
    /// [`ChannelConfig`] are tied to this band.
    pub carrier_frequency_hz: f64,
    /// System bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Maximum average transmit power per AP, watts.
    pub ap_max_power_watt: f64,
    /// Maximum average uplink transmit power per MS, watts.
    pub ms_power_watt: f64,
    /// Pilot symbol transmit power, watts.
    pub pilot_power_watt: f64,
    /// Noise figure of the MS receiver, dB.
    pub nf_ms_db: f64,
    /// Noise figure of each LNA at the AP, dB.
    pub nf_lna_db: f64,
    /// Power gain of each LNA at the AP, dB.
    pub lna_gain_db: f64,
    /// Insertion loss of each analog phase shifter, dB.
    pub phase_shifter_loss_db: f64,
    /// Per-input insertion loss of the power combiner, dB.
    pub combiner_loss_db: f64,
    /// Noise figure of each RF chain at the AP, dB.
    pub nf_rf_chain_db: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 28.0e9,
            bandwidth_hz: 20.0e6,
            ap_max_power_watt: 0.2,
            ms_power_watt: 0.1,
            pilot_power_watt: 0.1,
            nf_ms_db: 9.0,
            nf_lna_db: 1.6,
            lna_gain_db: 22.0,
            phase_shifter_loss_db: 3.0,
            combiner_loss_db: 3.0,
            nf_rf_chain_db: 7.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FronthaulConfig {
    /// Downlink fronthaul capacity per AP, bit/s/Hz.
    pub dl_capacity_bits: f64,
    /// Uplink fronthaul capacity per AP, bit/s/Hz.
    pub ul_capacity_bits: f64,
}

impl Default for FronthaulConfig {
    fn default() -> Self {
        Self {
            dl_capacity_bits: 64.0,
            ul_capacity_bits: 64.0,
        }
    }
}

/// Clustered-channel and shadowing constants, 28 GHz measurement fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Outage probability decay distance 1/a_out, meters.
    pub outage_decay_m: f64,
    /// Outage probability offset b_out (dimensionless).
    pub outage_offset: f64,
    /// LOS probability decay distance 1/a_LOS, meters.
    pub los_decay_m: f64,
    /// LOS floating intercept alpha, dB.
    pub pl_alpha_los_db: f64,
    /// LOS slope beta.
    pub pl_beta_los: f64,
    /// LOS shadowing standard deviation, dB.
    pub shadow_sigma_los_db: f64,
    /// NLOS floating intercept alpha, dB.
    pub pl_alpha_nlos_db: f64,
    /// NLOS slope beta.
    pub pl_beta_nlos: f64,
    /// NLOS shadowing standard deviation, dB.
    pub shadow_sigma_nlos_db: f64,
    /// Mean cluster count sigma_C; the count is max(Poisson(sigma_C), 1).
    pub cluster_count_mean: f64,
    /// Cluster power decay exponent r_tau.
    pub cluster_power_decay: f64,
    /// Per-cluster lognormal power spread zeta, dB.
    pub cluster_power_sigma_db: f64,
    /// Mean of the exponentially distributed per-cluster azimuth rms spread,
    /// degrees (AP-side departure spread).
    pub mean_rms_azimuth_spread_deg: f64,
    /// Mean per-cluster elevation rms spread, degrees.
    pub mean_rms_elevation_spread_deg: f64,
    /// Propagation paths per cluster (P).
    pub paths_per_cluster: usize,
    /// Shadow-fading decorrelation distance, meters.
    pub shadow_decorrelation_m: f64,
    /// Fraction delta of shadowing variance carried by the AP-side field
    /// (the rest comes from the MS-side field).
    pub shadow_ap_fraction: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            outage_decay_m: 30.0,
            outage_offset: 5.2,
            los_decay_m: 67.1,
            pl_alpha_los_db: 61.4,
            pl_beta_los: 2.0,
            shadow_sigma_los_db: 5.8,
            pl_alpha_nlos_db: 72.0,
            pl_beta_nlos: 2.92,
            shadow_sigma_nlos_db: 8.7,
            cluster_count_mean: 1.8,
            cluster_power_decay: 2.8,
            cluster_power_sigma_db: 4.0,
            mean_rms_azimuth_spread_deg: 10.2,
            mean_rms_elevation_spread_deg: 6.0,
            paths_per_cluster: 10,
            shadow_decorrelation_m: 50.0,
            shadow_ap_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PilotConfig {
    pub strategy: PilotStrategy,
}

impl Default for PilotConfig {
    fn default() -> Self {
        Self {
            strategy: PilotStrategy::Dcpa,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    /// Small-scale realizations per drop used to estimate expectation terms.
    pub realizations: usize,
    /// Minimum successful realizations before the drop is declared failed.
    pub min_realizations: usize,
    /// Drops per campaign sweep point.
    pub drops: usize,
    /// Campaign master seed.
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            realizations: 50,
            min_realizations: 10,
            drops: 20,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative bracket width at which the max-min power bisection stops.
    pub power_bisect_rel_tol: f64,
    /// Relative residual target for the quantization-noise root solves.
    pub quant_rel_tol: f64,
    /// Relative min-rate change under which BCD declares convergence.
    pub bcd_rel_tol: f64,
    /// Maximum BCD iterations.
    pub bcd_max_iters: usize,
    /// Floor for quantization noise variances, watts. Reached only in the
    /// effectively-unconstrained fronthaul limit.
    pub sigma_q_min_watt: f64,
    /// Tolerance for the equal-SINR property checks at returned optima.
    pub equal_sinr_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            power_bisect_rel_tol: 1e-4,
            quant_rel_tol: 1e-6,
            bcd_rel_tol: 1e-3,
            bcd_max_iters: 50,
            sigma_q_min_watt: 1e-18,
            equal_sinr_tol: 1e-3,
        }
    }
}

/// Full simulation configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub network: NetworkConfig,
    pub geometry: GeometryConfig,
    pub radio: RadioConfig,
    pub fronthaul: FronthaulConfig,
    pub channel: ChannelConfig,
    pub pilot: PilotConfig,
    pub monte_carlo: MonteCarloConfig,
    pub solver: SolverConfig,
}

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(s).map_err(|e| SimError::Config(format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Serialize to a TOML value, e.g. to apply sweep overrides.
    pub fn to_toml_value(&self) -> Result<toml::Value> {
        toml::Value::try_from(self).map_err(|e| SimError::Config(format!("serialize: {e}")))
    }

    /// Rebuild from a TOML value, validating invariants.
    pub fn from_toml_value(v: toml::Value) -> Result<Self> {
        let cfg: SimConfig = v
            .try_into()
            .map_err(|e| SimError::Config(format!("deserialize: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check the structural invariants. Called by every loader; call it
    /// directly after building a config by hand.
    pub fn validate(&self) -> Result<()> {
        let n = &self.network;
        if n.ap_count == 0 || n.ms_count == 0 || n.antennas_per_ap == 0 || n.rf_chains == 0 {
            return Err(SimError::Config("M, K, N, L must all be >= 1".into()));
        }
        if n.rf_chains > n.antennas_per_ap {
            return Err(SimError::Config(format!(
                "rf_chains ({}) must not exceed antennas_per_ap ({})",
                n.rf_chains, n.antennas_per_ap
            )));
        }
        if n.pilot_samples == 0 || n.pilot_samples > n.coherence_samples {
            return Err(SimError::Config(format!(
                "pilot_samples ({}) must lie in 1..=coherence_samples ({})",
                n.pilot_samples, n.coherence_samples
            )));
        }
        if n.ms_count > n.ap_count * n.active_chains() {
            return Err(SimError::Config(format!(
                "ms_count ({}) exceeds total active chains M*min(K,L) = {}; \
                 zero-forcing needs K <= M*min(K,L)",
                n.ms_count,
                n.ap_count * n.active_chains()
            )));
        }
        if self.geometry.area_side_m <= 0.0 {
            return Err(SimError::Config("area_side_m must be > 0".into()));
        }
        let r = &self.radio;
        for (name, v) in [
            ("bandwidth_hz", r.bandwidth_hz),
            ("ap_max_power_watt", r.ap_max_power_watt),
            ("ms_power_watt", r.ms_power_watt),
            ("pilot_power_watt", r.pilot_power_watt),
            ("carrier_frequency_hz", r.carrier_frequency_hz),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(SimError::Config(format!("{name} must be finite and > 0")));
            }
        }
        let f = &self.fronthaul;
        if f.dl_capacity_bits <= 0.0 || f.ul_capacity_bits <= 0.0 {
            return Err(SimError::Config("fronthaul capacities must be > 0".into()));
        }
        let c = &self.channel;
        if c.paths_per_cluster == 0 {
            return Err(SimError::Config("paths_per_cluster must be >= 1".into()));
        }
        if c.outage_decay_m <= 0.0 || c.los_decay_m <= 0.0 || c.shadow_decorrelation_m <= 0.0 {
            return Err(SimError::Config(
                "channel decay distances must be > 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&c.shadow_ap_fraction) {
            return Err(SimError::Config(
                "shadow_ap_fraction must lie in [0, 1]".into(),
            ));
        }
        let mc = &self.monte_carlo;
        if mc.realizations == 0 {
            return Err(SimError::Config("realizations must be >= 1".into()));
        }
        if mc.min_realizations > mc.realizations {
            return Err(SimError::Config(
                "min_realizations must not exceed realizations".into(),
            ));
        }
        let s = &self.solver;
        if s.sigma_q_min_watt <= 0.0 {
            return Err(SimError::Config("sigma_q_min_watt must be > 0".into()));
        }
        if s.bcd_max_iters == 0 {
            return Err(SimError::Config("bcd_max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Set `key_path` (dotted, e.g. `network.ms_count`) inside a TOML tree.
/// Used by sweep execution and CLI `--set` overrides.
pub fn set_by_key_path(root: &mut toml::Value, key_path: &str, value: toml::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key_path.split('.').collect();
    if parts.is_empty() {
        return Err(SimError::Config("empty key path".into()));
    }
    for part in &parts[..parts.len() - 1] {
        node = node
            .get_mut(*part)
            .ok_or_else(|| SimError::Config(format!("unknown config section `{part}`")))?;
    }
    let leaf = parts[parts.len() - 1];
    let table = node
        .as_table_mut()
        .ok_or_else(|| SimError::Config(format!("`{key_path}` does not address a table")))?;
    if !table.contains_key(leaf) {
        return Err(SimError::Config(format!("unknown config key `{key_path}`")));
    }
    table.insert(leaf.to_string(), value);
    Ok(())
}

/// Parse a sweep/override literal: integer, then float, then bool, else
/// string (pilot strategies sweep as strings).
pub fn parse_toml_literal(s: &str) -> toml::Value {
    if let Ok(i) = s.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = s.parse::<f64>() {
        toml::Value::Float(f)
    } else if let Ok(b) = s.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(s.to_string())
    }
}
