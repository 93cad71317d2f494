//! Pilot book construction and pilot assignment strategies.
//!
//! Three assignment strategies: pure random (RPA), balanced cyclic (BRPA),
//! and dissimilarity clustering (DCPA). DCPA sorts users by cosine
//! similarity between their large-scale fingerprint and the fingerprint of
//! an imaginary centroid user, then deals consecutive users in the sorted
//! order to different pilots, so users with similar propagation patterns end
//! up in different pilot groups.

use crate::config::PilotStrategy;
use crate::error::{Result, SimError};
use crate::rng::{substream, Purpose};
use crate::{CMat, RMat, C64};
use rand::Rng;

/// Orthonormal pilot book plus the MS-to-pilot map.
#[derive(Debug, Clone)]
pub struct PilotAssignment {
    /// tau_p x tau_p unitary matrix; column t is pilot sequence t.
    pub book: CMat,
    /// Pilot index (0-based) per MS.
    pub assignment: Vec<usize>,
    pub strategy: PilotStrategy,
}

impl PilotAssignment {
    pub fn pilot_len(&self) -> usize {
        self.book.nrows()
    }

    /// `|phi_a^T phi_b^*|^2`, the pilot cross-correlation entering the MMSE
    /// normal matrix. Exactly 1 for shared pilots and 0 otherwise with the
    /// DFT book, but computed from the book to honor arbitrary books.
    pub fn cross_correlation(&self, ms_a: usize, ms_b: usize) -> f64 {
        let pa = self.book.column(self.assignment[ms_a]);
        let pb = self.book.column(self.assignment[ms_b]).conjugate();
        let dot = pa.transpose() * pb;
        dot[(0, 0)].norm_sqr()
    }

    /// Users sharing the pilot of `ms` (including itself).
    pub fn copilot_users(&self, ms: usize) -> Vec<usize> {
        let t = self.assignment[ms];
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(k, &p)| (p == t).then_some(k))
            .collect()
    }

    /// Compact serialization for drop reports: pilot indices joined by '|'.
    pub fn to_compact_string(&self) -> String {
        self.assignment
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// DFT pilot book: column t of the unitary tau_p x tau_p DFT matrix.
pub fn make_pilot_book(tau_p: usize) -> CMat {
    let scale = 1.0 / (tau_p as f64).sqrt();
    CMat::from_fn(tau_p, tau_p, |s, t| {
        let phase = -2.0 * std::f64::consts::PI * (s as f64) * (t as f64) / tau_p as f64;
        C64::new(phase.cos(), phase.sin()) * scale
    })
}

/// Pure random assignment: i.i.d. uniform over the tau_p pilots.
pub fn assign_rpa(k: usize, tau_p: usize, seed: u64) -> Vec<usize> {
    let mut rng = substream(seed, Purpose::PilotAssign, 0, 0);
    (0..k).map(|_| rng.random_range(0..tau_p)).collect()
}

/// Balanced cyclic assignment: MS k gets pilot k mod tau_p.
pub fn assign_brpa(k: usize, tau_p: usize) -> Vec<usize> {
    (0..k).map(|i| i % tau_p).collect()
}

/// Cosine similarity of two nonnegative fingerprints, in [0, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(SimError::Domain(
            "cosine similarity of a zero fingerprint".into(),
        ));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

/// Dissimilarity-cluster assignment.
///
/// Fingerprints are the columns of the link-weight matrix (one M-vector per
/// MS). Users are ordered by ascending similarity to the centroid
/// fingerprint (ties by MS index) and cluster t takes every tau_p-th user of
/// that order starting at position t, so consecutive — maximally similar —
/// users land in different clusters.
pub fn assign_dcpa(link_weights: &RMat, tau_p: usize) -> Result<Vec<usize>> {
    let m = link_weights.nrows();
    let k = link_weights.ncols();
    let fingerprints: Vec<Vec<f64>> = (0..k)
        .map(|j| link_weights.column(j).iter().copied().collect())
        .collect();
    let mut centroid = vec![0.0; m];
    for f in &fingerprints {
        for (c, x) in centroid.iter_mut().zip(f) {
            *c += x / k as f64;
        }
    }
    let mut similarity = Vec::with_capacity(k);
    for (j, f) in fingerprints.iter().enumerate() {
        similarity.push((cosine_similarity(f, &centroid)?, j));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        similarity[a]
            .0
            .partial_cmp(&similarity[b].0)
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut assignment = vec![0usize; k];
    for (pos, &ms) in order.iter().enumerate() {
        assignment[ms] = pos % tau_p;
    }
    Ok(assignment)
}

/// Build book and assignment for the configured strategy.
pub fn assign_pilots(
    strategy: PilotStrategy,
    link_weights: &RMat,
    tau_p: usize,
    seed: u64,
) -> Result<PilotAssignment> {
    let k = link_weights.ncols();
    let assignment = match strategy {
        PilotStrategy::Rpa => assign_rpa(k, tau_p, seed),
        PilotStrategy::Brpa => assign_brpa(k, tau_p),
        PilotStrategy::Dcpa => assign_dcpa(link_weights, tau_p)?,
    };
    Ok(PilotAssignment {
        book: make_pilot_book(tau_p),
        assignment,
        strategy,
    })
}
