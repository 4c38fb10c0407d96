//! Semi-adaptive baselines that optimize only one of the two design
//! variables.
//!
//! * OPS fixes the transmit covariance and picks the largest feasible split.
//! * OTCM fixes the split and optimizes the covariance.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{eigen_rate, Covariance, PowerSplit};
use crate::error::{Result, SwiptError};
use crate::joint_opt::{inner_solve, recover_multipliers, JointSolution, SwiptProblem};
use crate::waterfill::{waterfill_gains, PowerAllocation};

/// Default fixed split for OTCM.
pub const DEFAULT_OTCM_RHO: f64 = 0.5;

const RATE_SLACK: f64 = 1e-12;

/// Which covariance OPS holds fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpsCovariance {
    /// Rate-optimal waterfilling with everything routed to decoding.
    #[default]
    Waterfilling,
    /// `P_T/r` on every eigenchannel.
    Uniform,
    /// Everything on the strongest eigenchannel.
    Beamforming,
}

impl OpsCovariance {
    pub fn build(self, prob: &SwiptProblem) -> Result<Covariance> {
        let r = prob.gains().len();
        let powers = match self {
            OpsCovariance::Waterfilling => waterfill_gains(prob.gains(), prob.p_t(), prob.sigma2()).powers,
            OpsCovariance::Uniform => vec![prob.p_t() / r as f64; r],
            OpsCovariance::Beamforming => PowerAllocation::beamforming(r, prob.p_t()).powers,
        };
        Covariance::in_eigenbasis(prob.svd(), powers)
    }
}

/// OPS: keeps `fixed_cov`'s eigenchannel powers and chooses the largest `ρ`
/// that still meets the rate.
pub fn solve_ops(prob: &SwiptProblem, fixed_cov: &Covariance) -> Result<JointSolution> {
    let gains = prob.gains();
    let powers = fixed_cov.powers();
    if powers.len() != gains.len() {
        return Err(SwiptError::DimensionMismatch {
            expected: gains.len(),
            got: powers.len(),
        });
    }
    let sigma2 = prob.sigma2();
    let rate_req = prob.rate_req();
    let rate_at = |t: f64| eigen_rate(gains, powers, PowerSplit::from_id_fraction(t), sigma2);

    let ceiling = rate_at(1.0);
    if rate_req > ceiling + RATE_SLACK * ceiling.max(1.0) {
        return Err(SwiptError::InfeasibleRate {
            required: rate_req,
            max_rate: ceiling,
        });
    }

    let active: Vec<usize> = (0..powers.len())
        .filter(|&i| powers[i] > 0.0 && gains[i] > 0.0)
        .collect();
    let t = if rate_req <= 0.0 {
        0.0
    } else if active.len() == 1 {
        let i = active[0];
        ((rate_req * LN_2).exp_m1() * sigma2 / (powers[i] * gains[i])).min(1.0)
    } else {
        smallest_id_fraction(rate_at, rate_req)
    };

    let split = PowerSplit::from_id_fraction(t);
    let allocation = PowerAllocation::from_powers(powers.to_vec());
    let (mu, nu) = recover_multipliers(gains, &allocation.powers, split, sigma2);
    Ok(JointSolution::assemble(prob, allocation, split, mu, nu))
}

/// Smallest `t ∈ (0, 1]` with `rate_at(t) ≥ rate_req`, by bisection on
/// `ln t` to relative tolerance 1e-10. The rate is increasing in `t`.
fn smallest_id_fraction<F: Fn(f64) -> f64>(rate_at: F, rate_req: f64) -> f64 {
    if rate_at(1.0) <= rate_req {
        return 1.0;
    }
    let mut hi = 1.0;
    let mut lo = 1e-3;
    while rate_at(lo) >= rate_req {
        hi = lo;
        lo *= 1e-3;
        if lo < 1e-300 {
            return hi;
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-10 * hi {
            break;
        }
        let mid = (lo * hi).sqrt();
        if rate_at(mid) >= rate_req {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// OTCM: keeps `ρ = fixed_rho` and maximizes received power over the
/// covariance.
pub fn solve_otcm(prob: &SwiptProblem, fixed_rho: f64) -> Result<JointSolution> {
    if !(0.0..1.0).contains(&fixed_rho) {
        return Err(SwiptError::invalid("fixed_rho", "must lie in [0, 1)"));
    }
    let split = PowerSplit::from_rho(fixed_rho);
    let inner = inner_solve(prob.gains(), split, prob.p_t(), prob.sigma2(), prob.rate_req())?;
    let (mu, nu) = if inner.kappa.is_finite() {
        (fixed_rho * inner.kappa * LN_2, fixed_rho * inner.nu_prime)
    } else {
        recover_multipliers(prob.gains(), &inner.powers, split, prob.sigma2())
    };
    let allocation = PowerAllocation::from_powers(inner.powers);
    Ok(JointSolution::assemble(prob, allocation, split, mu, nu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{decompose, generate_channel, SvdDecomposition};
    use crate::joint_opt::{solve_eb_branch, solve_joint};
    use approx::assert_relative_eq;

    fn diag_problem(rate: f64) -> SwiptProblem {
        let svd = SvdDecomposition::from_singular_values(&[1.0, 0.5]).unwrap();
        SwiptProblem::new(svd, 10.0, 1.0, rate).unwrap()
    }

    fn random_problem(seed: u64, n: usize, rate_fraction: f64) -> SwiptProblem {
        let svd = decompose(&generate_channel(n, n, 1.0, seed)).unwrap();
        let base = SwiptProblem::new(svd, 10.0, 0.5, 0.0).unwrap();
        let rate = rate_fraction * base.max_rate();
        base.with_rate(rate).unwrap()
    }

    #[test]
    fn ops_rank_one_matches_eb_closed_form() {
        for rate in [0.5, 1.0, 2.0, 3.0] {
            let prob = diag_problem(rate);
            let cov = OpsCovariance::Beamforming.build(&prob).unwrap();
            let ops = solve_ops(&prob, &cov).unwrap();
            let eb = solve_eb_branch(&prob).unwrap();
            assert_relative_eq!(ops.rho(), eb.rho(), epsilon = 1e-14);
            assert_relative_eq!(ops.p_re, eb.p_re, epsilon = 1e-12);
        }
    }

    #[test]
    fn ops_zero_rate_routes_everything_to_harvesting() {
        let prob = diag_problem(0.0);
        let cov = OpsCovariance::Waterfilling.build(&prob).unwrap();
        let ops = solve_ops(&prob, &cov).unwrap();
        assert_eq!(ops.rho(), 1.0);
        assert_eq!(ops.allocation.powers, cov.powers());
    }

    #[test]
    fn ops_at_own_capacity_gives_zero_split() {
        let prob = diag_problem(0.0);
        let cov = OpsCovariance::Uniform.build(&prob).unwrap();
        let cap = eigen_rate(prob.gains(), cov.powers(), PowerSplit::from_rho(0.0), 1.0);
        let ops = solve_ops(&prob.with_rate(cap).unwrap(), &cov).unwrap();
        assert!(ops.rho() <= 1e-9, "rho {}", ops.rho());
        let err = solve_ops(&prob.with_rate(cap + 0.01).unwrap(), &cov).unwrap_err();
        assert!(matches!(err, SwiptError::InfeasibleRate { max_rate, .. } if (max_rate - cap).abs() < 1e-12));
    }

    #[test]
    fn ops_meets_rate_with_largest_split() {
        let prob = random_problem(7, 4, 0.6);
        let cov = OpsCovariance::Waterfilling.build(&prob).unwrap();
        let ops = solve_ops(&prob, &cov).unwrap();
        assert!(ops.rate_achieved >= prob.rate_req());
        assert!(ops.rate_achieved - prob.rate_req() < 1e-7);
        // A slightly larger split would violate the rate.
        let t = ops.split.id_fraction() * (1.0 - 1e-8);
        let rate = eigen_rate(prob.gains(), cov.powers(), PowerSplit::from_id_fraction(t), prob.sigma2());
        assert!(rate < prob.rate_req());
    }

    #[test]
    fn otcm_endpoint_is_waterfilling() {
        let prob = random_problem(3, 3, 0.0);
        let prob = prob.with_rate(prob.max_rate()).unwrap();
        let otcm = solve_otcm(&prob, 0.0).unwrap();
        let wf = waterfill_gains(prob.gains(), prob.p_t(), prob.sigma2());
        assert_eq!(otcm.p_re, 0.0);
        for (p, q) in otcm.allocation.powers.iter().zip(&wf.powers) {
            assert!((p - q).abs() <= 1e-6, "{p} vs {q}");
        }
    }

    #[test]
    fn otcm_rejects_bad_split_and_infeasible_rate() {
        let prob = diag_problem(1.0);
        assert!(solve_otcm(&prob, 1.0).is_err());
        assert!(solve_otcm(&prob, -0.1).is_err());
        let err = solve_otcm(&diag_problem(3.7), 0.5).unwrap_err();
        assert!(matches!(err, SwiptError::InfeasibleRate { .. }));
    }

    #[test]
    fn fixing_the_optimal_variable_recovers_the_joint_solution() {
        for seed in 0..20 {
            for fraction in [0.1, 0.4, 0.7, 0.95] {
                let prob = random_problem(seed, 2 + (seed as usize % 3), fraction);
                let joint = solve_joint(&prob).unwrap();

                let otcm = solve_otcm(&prob, joint.rho().min(1.0 - 1e-15)).unwrap();
                assert_relative_eq!(otcm.p_re, joint.p_re, max_relative = 1e-7, epsilon = 1e-12);

                let cov = Covariance::in_eigenbasis(prob.svd(), joint.allocation.powers.clone()).unwrap();
                let ops = solve_ops(&prob, &cov).unwrap();
                assert_relative_eq!(ops.p_re, joint.p_re, max_relative = 1e-7, epsilon = 1e-12);
                assert_relative_eq!(ops.rho(), joint.rho(), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn joint_dominates_both_baselines() {
        for seed in 0..40 {
            for fraction in [0.05, 0.3, 0.6, 0.9] {
                let prob = random_problem(seed, 2 + (seed as usize % 3), fraction);
                let joint = solve_joint(&prob).unwrap();
                let cov = OpsCovariance::default().build(&prob).unwrap();
                let ops = solve_ops(&prob, &cov).unwrap();
                assert!(joint.p_re >= ops.p_re - 1e-9, "seed {seed} OPS");
                if let Ok(otcm) = solve_otcm(&prob, DEFAULT_OTCM_RHO) {
                    assert!(joint.p_re >= otcm.p_re - 1e-9, "seed {seed} OTCM");
                }
            }
        }
    }
}
