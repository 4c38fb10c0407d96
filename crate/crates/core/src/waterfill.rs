//! Capacity-maximizing waterfilling over eigenchannels.
//!
//! The active set comes straight from the rank formula: channel `k` is active
//! iff the budget left after lifting every stronger channel to channel `k`'s
//! inverse gain `σ²/λ_k²` is still positive. The water level then follows in
//! closed form, no bisection involved.

use serde::{Deserialize, Serialize};

use crate::channel::{eigen_rate, PowerSplit, SvdDecomposition};

/// Per-eigenchannel transmit powers (watts), in descending-gain order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    /// Channels `0..active_count` carry strictly positive power.
    pub active_count: usize,
    /// Common value of `p_i + σ²/λ_i²` over active channels, when the
    /// allocation is a plain waterfilling one.
    pub water_level: Option<f64>,
}

impl PowerAllocation {
    pub fn from_powers(powers: Vec<f64>) -> Self {
        let active_count = powers.iter().take_while(|p| **p > 0.0).count();
        Self {
            powers,
            active_count,
            water_level: None,
        }
    }

    /// Everything on the strongest eigenchannel.
    pub fn beamforming(rank: usize, p_t: f64) -> Self {
        let mut powers = vec![0.0; rank];
        powers[0] = p_t;
        Self {
            powers,
            active_count: 1,
            water_level: None,
        }
    }

    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn rank(&self) -> usize {
        self.powers.iter().filter(|p| **p > 0.0).count()
    }
}

/// Number of active channels `r_w` under waterfilling.
///
/// `lambda` must be sorted descending; zero singular values are never active.
pub fn wf_rank(lambda: &[f64], p_t: f64, sigma2: f64) -> usize {
    let inverse: Vec<f64> = positive_prefix(lambda).iter().map(|l| sigma2 / (l * l)).collect();
    rank_from_inverse_gains(&inverse, p_t)
}

/// Standard waterfilling of `p_t` over channels with singular values `lambda`.
pub fn waterfill(lambda: &[f64], p_t: f64, sigma2: f64) -> PowerAllocation {
    let gains: Vec<f64> = lambda.iter().map(|l| l * l).collect();
    waterfill_gains(&gains, p_t, sigma2)
}

/// Waterfilling on power gains `λ_i²` directly.
pub(crate) fn waterfill_gains(gains: &[f64], p_t: f64, noise: f64) -> PowerAllocation {
    let usable = gains.iter().take_while(|a| **a > 0.0).count();
    let inverse: Vec<f64> = gains[..usable].iter().map(|a| noise / a).collect();
    let mut powers = vec![0.0; gains.len()];
    if usable == 0 {
        return PowerAllocation {
            powers,
            active_count: 0,
            water_level: None,
        };
    }
    let active = rank_from_inverse_gains(&inverse, p_t);
    let level = (p_t + inverse[..active].iter().sum::<f64>()) / active as f64;
    for (p, inv) in powers.iter_mut().zip(&inverse[..active]) {
        *p = level - inv;
    }
    PowerAllocation {
        powers,
        active_count: active,
        water_level: Some(level),
    }
}

/// `R_max`: the rate of the waterfilling covariance with everything routed to
/// information decoding.
pub fn max_rate(svd: &SvdDecomposition, p_t: f64, sigma2: f64) -> f64 {
    let gains = svd.gains();
    let alloc = waterfill_gains(&gains, p_t, sigma2);
    eigen_rate(&gains, &alloc.powers, PowerSplit::from_rho(0.0), sigma2)
}

/// Max rate reachable with decoding fraction `id_fraction`; equivalent to
/// waterfilling against the inflated noise `σ²/(1−ρ)`.
pub(crate) fn max_rate_at(gains: &[f64], p_t: f64, sigma2: f64, id_fraction: f64) -> f64 {
    if id_fraction <= 0.0 {
        return 0.0;
    }
    let alloc = waterfill_gains(gains, p_t, sigma2 / id_fraction);
    eigen_rate(gains, &alloc.powers, PowerSplit::from_id_fraction(id_fraction), sigma2)
}

fn positive_prefix(lambda: &[f64]) -> &[f64] {
    let n = lambda.iter().take_while(|l| **l > 0.0).count();
    &lambda[..n]
}

fn rank_from_inverse_gains(inverse: &[f64], p_t: f64) -> usize {
    let mut rank = 0;
    let mut cumulative = 0.0;
    for (k, inv_k) in inverse.iter().enumerate() {
        // Budget spent lifting channels 0..k up to channel k's floor.
        let gap = k as f64 * inv_k - cumulative;
        if p_t - gap > 0.0 {
            rank = k + 1;
        }
        cumulative += inv_k;
    }
    rank
}
