//! Brute-force validators for the joint solver.
//!
//! The grid oracle scans power allocations on a barycentric lattice of the
//! `P_T`-simplex (in the right singular basis) crossed with a uniform `ρ`
//! grid and keeps the best feasible point. It shares the rate evaluator with
//! the solver, so disagreement can only come from the optimization itself.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, eigen_rate, eigen_received_power, log_det_rate, trace_received_power, PowerSplit};
use crate::error::{Result, SwiptError};
use crate::joint_opt::{inner_solve, min_id_fraction, recover_multipliers, JointSolution, SwiptProblem};
use crate::waterfill::PowerAllocation;

/// Largest eigenchannel count the grid oracle accepts.
pub const MAX_GRID_DIM: usize = 3;
/// Relative tolerance for merging plateaus in the unimodality scan.
pub const PLATEAU_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Lattice points per simplex edge.
    pub n_power_points: usize,
    pub n_rho_points: usize,
}

impl GridSpec {
    pub fn new(n_power_points: usize, n_rho_points: usize) -> Result<Self> {
        if n_power_points < 2 {
            return Err(SwiptError::invalid("n_power_points", "must be at least 2"));
        }
        if n_rho_points < 2 {
            return Err(SwiptError::invalid("n_rho_points", "must be at least 2"));
        }
        Ok(Self {
            n_power_points,
            n_rho_points,
        })
    }

    /// Same lattice with every cell halved; contains all points of `self`.
    pub fn refined(&self) -> Self {
        Self {
            n_power_points: 2 * self.n_power_points - 1,
            n_rho_points: 2 * self.n_rho_points - 1,
        }
    }

    /// Worst-case loss in `p_re` from snapping the optimum to the grid:
    /// one `ρ` step plus one lattice step per free simplex coordinate, each
    /// worth at most `P_T λ₁²`.
    pub fn resolution_bound(&self, prob: &SwiptProblem) -> f64 {
        let r = prob.gains().len() as f64;
        prob.reference_power()
            * (1.0 / (self.n_rho_points - 1) as f64 + (r - 1.0) / (self.n_power_points - 1) as f64)
    }
}

/// A grid point with its position in the scan order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub powers: Vec<f64>,
    pub rho: f64,
    pub p_re: f64,
    pub score: f64,
    /// `(simplex index, ρ index)`.
    pub index: (usize, usize),
}

/// Barycentric lattice of `n` points per edge on the `dim`-simplex scaled to
/// `p_t`, in lexicographic order of the integer coordinates.
pub fn simplex_lattice(dim: usize, n: usize, p_t: f64) -> Vec<Vec<f64>> {
    let steps = n - 1;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(dim);
    fn recurse(dim: usize, left: usize, steps: usize, p_t: f64, current: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if current.len() + 1 == dim {
            current.push(left);
            out.push(current.iter().map(|k| p_t * *k as f64 / steps as f64).collect());
            current.pop();
            return;
        }
        for k in (0..=left).rev() {
            current.push(k);
            recurse(dim, left - k, steps, p_t, current, out);
            current.pop();
        }
    }
    recurse(dim, steps, steps, p_t, &mut current, &mut out);
    out
}

/// Best feasible grid point under `score(p_re)`; ties go to the smallest
/// `(simplex, ρ)` index so the result does not depend on scheduling.
pub fn grid_search_by<F>(prob: &SwiptProblem, grid: GridSpec, score: F) -> Result<GridPoint>
where
    F: Fn(f64) -> f64 + Sync,
{
    let r = prob.gains().len();
    if r > MAX_GRID_DIM {
        return Err(SwiptError::GridTooLarge(r));
    }
    let gains = prob.gains();
    let lattice = simplex_lattice(r, grid.n_power_points, prob.p_t());
    let n_rho = grid.n_rho_points;

    let best = lattice
        .par_iter()
        .enumerate()
        .filter_map(|(i, powers)| {
            let received = eigen_received_power(gains, powers);
            let mut best: Option<GridPoint> = None;
            for j in 0..n_rho {
                // Exact endpoints: ρ = 0 and ρ = 1.
                let split = PowerSplit::from_id_fraction((n_rho - 1 - j) as f64 / (n_rho - 1) as f64);
                if eigen_rate(gains, powers, split, prob.sigma2()) < prob.rate_req() {
                    continue;
                }
                let p_re = split.rho() * received;
                let s = score(p_re);
                if best.as_ref().is_none_or(|b| s > b.score) {
                    best = Some(GridPoint {
                        powers: powers.clone(),
                        rho: split.rho(),
                        p_re,
                        score: s,
                        index: (i, j),
                    });
                }
            }
            best
        })
        .reduce_with(|a, b| {
            if b.score > a.score || (b.score == a.score && b.index < a.index) {
                b
            } else {
                a
            }
        });
    best.ok_or(SwiptError::InfeasibleRate {
        required: prob.rate_req(),
        max_rate: prob.max_rate(),
    })
}

/// Exhaustive grid maximization of `p_re`, returned as a solution with
/// least-squares multipliers (the grid point is generally not a KKT point).
pub fn grid_search(prob: &SwiptProblem, grid: GridSpec) -> Result<JointSolution> {
    let point = grid_search_by(prob, grid, |p| p)?;
    let split = PowerSplit::from_rho(point.rho);
    let (mu, nu) = recover_multipliers(prob.gains(), &point.powers, split, prob.sigma2());
    Ok(JointSolution::assemble(
        prob,
        PowerAllocation::from_powers(point.powers),
        split,
        mu,
        nu,
    ))
}

/// Random full-rank covariance `A Aᴴ` scaled to trace `p_t`.
pub fn random_covariance<R: Rng + ?Sized>(rng: &mut R, n_t: usize, p_t: f64) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n_t, n_t, |_, _| complex_gaussian(rng));
    let s = &a * a.adjoint();
    let trace = s.trace().re;
    s * Complex64::new(p_t / trace, 0.0)
}

/// Best `p_re` over `n_samples` random full covariances, each paired with the
/// largest split that meets the rate. Infeasible samples are skipped.
pub fn psd_spot_check<R: Rng + ?Sized>(prob: &SwiptProblem, n_samples: usize, rng: &mut R) -> f64 {
    let h = prob.svd().reconstruct();
    let n_t = h.ncols();
    let mut best: f64 = 0.0;
    for _ in 0..n_samples {
        let s = random_covariance(rng, n_t, prob.p_t());
        let rate_at = |t: f64| log_det_rate(&h, &s, PowerSplit::from_id_fraction(t), prob.sigma2());
        if rate_at(1.0) < prob.rate_req() {
            continue;
        }
        let t = if prob.rate_req() <= 0.0 {
            0.0
        } else {
            // Rate increases with t; bisect for the smallest feasible t.
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if rate_at(mid) >= prob.rate_req() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        best = best.max((1.0 - t) * trace_received_power(&h, &s));
    }
    best
}

/// `g(ρ) = ρ · max Σ p_i λ_i²` on `n_rho` evenly spaced splits over the
/// feasible range `[0, ρ_max]`.
pub fn harvest_profile(prob: &SwiptProblem, n_rho: usize) -> Vec<(f64, f64)> {
    let t_min = min_id_fraction(prob);
    let rho_max = 1.0 - t_min;
    (0..n_rho)
        .filter_map(|k| {
            let split = if k + 1 == n_rho {
                PowerSplit::from_id_fraction(t_min)
            } else {
                PowerSplit::from_rho(rho_max * k as f64 / (n_rho - 1) as f64)
            };
            inner_solve(prob.gains(), split, prob.p_t(), prob.sigma2(), prob.rate_req())
                .ok()
                .map(|inner| (split.rho(), split.rho() * inner.objective))
        })
        .collect()
}

/// True iff the sampled `g(ρ)` rises then falls with exactly one local
/// maximum, after merging steps smaller than `1e-9` of its peak.
pub fn unimodality_scan(prob: &SwiptProblem, n_rho: usize) -> bool {
    assert!(n_rho >= 10, "need at least 10 samples");
    let values: Vec<f64> = harvest_profile(prob, n_rho).into_iter().map(|(_, g)| g).collect();
    is_unimodal(&values)
}

pub(crate) fn is_unimodal(values: &[f64]) -> bool {
    let peak = values.iter().cloned().fold(0.0, f64::max);
    let tol = PLATEAU_TOLERANCE * peak.max(f64::MIN_POSITIVE);
    let mut descending = false;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= tol {
            continue;
        }
        if d < 0.0 {
            descending = true;
        } else if descending {
            return false;
        }
    }
    true
}
