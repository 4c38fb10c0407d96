//! Jointly optimal transmit covariance and power-splitting ratio.
//!
//! The problem maximizes the RF power routed to harvesting, `ρ·Σ p_i λ_i²`,
//! subject to a minimum rate, the transmit budget, `p ⪰ 0` and `ρ ∈ [0, 1]`.
//! The optimum is diagonal in the channel's right singular basis, so every
//! solver here works on per-eigenchannel powers and gains `a_i = λ_i²`.
//!
//! Two regimes exist:
//!
//! * **Energy beamforming (EB)**: all power on the strongest eigenchannel and
//!   `ρ` solved from the rate constraint at equality. This is optimal up to the
//!   rate threshold `R_th`.
//! * **Spatial multiplexing (SM)**: above `R_th`. Solved as a nested problem.
//!   For a fixed split the inner problem (maximize `Σ p_i a_i` under the rate and
//!   power constraints) is convex, and its KKT point has the generalized
//!   waterfilling form
//!   `p_i = [κ/(ν' − a_i) − σ²/((1−ρ) a_i)]⁺`, where the rate multiplier
//!   `κ = μ'/ln 2` and the power multiplier `ν'` are found by root finding.
//!   The harvested power `g(ρ) = ρ·f(ρ)` is unimodal in `ρ`, so the outer
//!   problem is a golden-section search polished by bisection on the sign of
//!   the envelope derivative `∂L/∂ρ`.
//!
//! The outer search runs over `ln(1 − ρ)` rather than `ρ`. At high SNR the
//! optimal decoding fraction `1 − ρ` can be far below 1e-9, and an absolute
//! grid on `ρ` cannot resolve it.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{eigen_rate, eigen_received_power, PowerSplit, SvdDecomposition};
use crate::error::{Result, SwiptError};
use crate::waterfill::{max_rate, max_rate_at, waterfill_gains, PowerAllocation};

/// Relative slack used when comparing a rate requirement against a capacity.
const RATE_SLACK: f64 = 1e-12;
/// Golden-section tolerance on `ln(1 − ρ)`.
const GOLDEN_TOLERANCE: f64 = 1e-9;
/// Bisection tolerance for the rate threshold (bps/Hz).
const THRESHOLD_TOLERANCE: f64 = 1e-6;
/// EB wins a branch comparison unless SM beats it by more than this fraction
/// of `P_T λ₁²`.
const BRANCH_TIE: f64 = 1e-12;
/// Accept a solution when its KKT residual is below this.
pub const KKT_ACCEPT: f64 = 1e-6;

/// One instance of the joint design problem.
#[derive(Debug, Clone)]
pub struct SwiptProblem {
    svd: SvdDecomposition,
    gains: Vec<f64>,
    p_t: f64,
    sigma2: f64,
    rate_req: f64,
}

impl SwiptProblem {
    pub fn new(svd: SvdDecomposition, p_t: f64, sigma2: f64, rate_req: f64) -> Result<Self> {
        if !(p_t > 0.0 && p_t.is_finite()) {
            return Err(SwiptError::invalid("p_t", "transmit budget must be positive"));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(SwiptError::invalid("sigma2", "noise power must be positive"));
        }
        if !(rate_req >= 0.0 && rate_req.is_finite()) {
            return Err(SwiptError::invalid("rate_req", "rate requirement must be non-negative"));
        }
        let gains = svd.gains();
        if gains[0] <= 0.0 {
            return Err(SwiptError::invalid("svd", "channel has no non-zero singular value"));
        }
        Ok(Self {
            svd,
            gains,
            p_t,
            sigma2,
            rate_req,
        })
    }

    /// Same channel and budget with a different rate requirement.
    pub fn with_rate(&self, rate_req: f64) -> Result<Self> {
        Self::new(self.svd.clone(), self.p_t, self.sigma2, rate_req)
    }

    pub fn svd(&self) -> &SvdDecomposition {
        &self.svd
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn p_t(&self) -> f64 {
        self.p_t
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn rate_req(&self) -> f64 {
        self.rate_req
    }

    /// `P_T λ₁²`, the largest received power any design can reach.
    pub fn reference_power(&self) -> f64 {
        self.p_t * self.gains[0]
    }

    /// Rate of energy beamforming with `ρ = 0`.
    pub fn eb_capacity(&self) -> f64 {
        (self.reference_power() / self.sigma2).ln_1p() / LN_2
    }

    pub fn max_rate(&self) -> f64 {
        max_rate(&self.svd, self.p_t, self.sigma2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "EB")]
    EnergyBeamforming,
    #[serde(rename = "SM")]
    SpatialMultiplexing,
}

impl Branch {
    fn of(powers: &[f64]) -> Self {
        if powers.iter().skip(1).all(|p| *p <= 0.0) {
            Branch::EnergyBeamforming
        } else {
            Branch::SpatialMultiplexing
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::EnergyBeamforming => f.write_str("EB"),
            Branch::SpatialMultiplexing => f.write_str("SM"),
        }
    }
}

/// A design point with its Lagrange multipliers and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSolution {
    pub allocation: PowerAllocation,
    pub split: PowerSplit,
    /// Multiplier of the rate constraint.
    pub mu: f64,
    /// Multiplier of the transmit power constraint.
    pub nu: f64,
    pub branch: Branch,
    pub rate_achieved: f64,
    /// RF power available for harvesting, `ρ·Σ p_i λ_i²` (watts).
    pub p_re: f64,
    pub kkt_residual: f64,
}

impl JointSolution {
    pub fn rho(&self) -> f64 {
        self.split.rho()
    }

    /// Assembles a solution, evaluating rate, power and residuals.
    pub(crate) fn assemble(
        prob: &SwiptProblem,
        allocation: PowerAllocation,
        split: PowerSplit,
        mu: f64,
        nu: f64,
    ) -> Self {
        let gains = prob.gains();
        let rate_achieved = eigen_rate(gains, &allocation.powers, split, prob.sigma2);
        let p_re = split.rho() * eigen_received_power(gains, &allocation.powers);
        let branch = Branch::of(&allocation.powers);
        let mut sol = JointSolution {
            allocation,
            split,
            mu,
            nu,
            branch,
            rate_achieved,
            p_re,
            kkt_residual: 0.0,
        };
        sol.kkt_residual = kkt_residuals(prob, &sol).max_residual();
        sol
    }
}

/// KKT diagnostics of the Lagrangian
/// `L = ρ Σ p_i a_i − ν(Σ p_i − P_T) − μ(R − Σ log2(1 + (1−ρ) p_i a_i/σ²))`.
///
/// Derivative terms are scaled to be dimensionless: `∂L/∂ρ` and the two
/// complementary-slackness products by `P_T λ₁²`, `∂L/∂p_i` by `λ₁²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub d_rho: f64,
    /// Largest `|∂L/∂p_i|` over active eigenchannels.
    pub d_s_active: f64,
    /// Largest positive `∂L/∂p_i` over inactive eigenchannels (dual feasibility).
    pub d_s_inactive: f64,
    pub rate_slackness: f64,
    pub power_slackness: f64,
    pub multipliers_nonnegative: bool,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        if !self.multipliers_nonnegative {
            return f64::INFINITY;
        }
        [
            self.d_rho,
            self.d_s_active,
            self.d_s_inactive,
            self.rate_slackness,
            self.power_slackness,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn kkt_residuals(prob: &SwiptProblem, sol: &JointSolution) -> KktReport {
    let gains = prob.gains();
    let powers = &sol.allocation.powers;
    let (rho, t) = (sol.split.rho(), sol.split.id_fraction());
    let (mu, nu, sigma2) = (sol.mu, sol.nu, prob.sigma2);
    let a1 = gains[0];
    let reference = prob.reference_power();

    let mut d_s_active: f64 = 0.0;
    let mut d_s_inactive: f64 = 0.0;
    let mut rate_weighted = 0.0;
    for (a, p) in gains.iter().zip(powers) {
        let q = sigma2 + t * p * a;
        let d_p = rho * a - nu + mu * t * a / (LN_2 * q);
        if *p > 0.0 {
            d_s_active = d_s_active.max(d_p.abs() / a1);
        } else {
            d_s_inactive = d_s_inactive.max(d_p.max(0.0) / a1);
        }
        rate_weighted += p * a / (LN_2 * q);
    }
    let received = eigen_received_power(gains, powers);
    let d_rho = (received - mu * rate_weighted).abs() / reference;
    let rate_gap = prob.rate_req - eigen_rate(gains, powers, sol.split, sigma2);
    let power_gap = prob.p_t - powers.iter().sum::<f64>();

    KktReport {
        d_rho,
        d_s_active,
        d_s_inactive,
        rate_slackness: (mu * rate_gap).abs() / reference,
        power_slackness: (nu * power_gap).abs() / reference,
        multipliers_nonnegative: mu >= 0.0 && nu >= 0.0,
    }
}

/// Multipliers that make `∂L/∂ρ = 0` exactly and fit `∂L/∂p_i = 0` on the
/// active channels in the least-squares sense.
pub fn recover_multipliers(gains: &[f64], powers: &[f64], split: PowerSplit, sigma2: f64) -> (f64, f64) {
    let (rho, t) = (split.rho(), split.id_fraction());
    let received = eigen_received_power(gains, powers);
    let rate_weighted: f64 = gains
        .iter()
        .zip(powers)
        .map(|(a, p)| p * a / (LN_2 * (sigma2 + t * p * a)))
        .sum();
    let mu = if rate_weighted > 0.0 { received / rate_weighted } else { 0.0 };
    let (mut sum, mut count) = (0.0, 0usize);
    for (a, p) in gains.iter().zip(powers) {
        if *p > 0.0 {
            sum += rho * a + mu * t * a / (LN_2 * (sigma2 + t * p * a));
            count += 1;
        }
    }
    let nu = if count > 0 { sum / count as f64 } else { 0.0 };
    (mu, nu)
}

/// EB closed forms: `μ_EB = σ² ln2 (1 + (1−ρ) P_T λ₁²/σ²)` and
/// `ν_EB = μ_EB (1−ρ) λ₁² / (ln2 (σ² + (1−ρ) P_T λ₁²)) + ρ λ₁²`.
fn eb_multipliers(prob: &SwiptProblem, split: PowerSplit) -> (f64, f64) {
    let (rho, t) = (split.rho(), split.id_fraction());
    let a1 = prob.gains[0];
    let q = prob.sigma2 + t * prob.p_t * a1;
    let mu = prob.sigma2 * LN_2 * (1.0 + t * prob.p_t * a1 / prob.sigma2);
    let nu = mu * t * a1 / (LN_2 * q) + a1 * rho;
    (mu, nu)
}

/// Rank-1 design meeting the rate constraint at equality.
pub fn solve_eb_branch(prob: &SwiptProblem) -> Result<JointSolution> {
    let capacity = prob.eb_capacity();
    if prob.rate_req > capacity + RATE_SLACK * capacity.max(1.0) {
        return Err(SwiptError::EbInfeasible {
            required: prob.rate_req,
            eb_capacity: capacity,
        });
    }
    // 1 − ρ_EB = (2^R − 1) σ² / (P_T λ₁²), clamped to ρ ≥ 0.
    let t = ((prob.rate_req * LN_2).exp_m1() * prob.sigma2 / prob.reference_power()).min(1.0);
    let split = PowerSplit::from_id_fraction(t);
    let (mu, nu) = eb_multipliers(prob, split);
    let allocation = PowerAllocation::beamforming(prob.gains.len(), prob.p_t);
    Ok(JointSolution::assemble(prob, allocation, split, mu, nu))
}

/// Inner optimum at a fixed split: the powers with multipliers of the
/// fixed-split problem (`κ = μ'/ln 2`, `ν'`).
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub powers: Vec<f64>,
    pub kappa: f64,
    pub nu_prime: f64,
    /// `Σ p_i a_i`.
    pub objective: f64,
}

/// Maximizes `Σ p_i λ_i²` subject to the rate requirement at split `rho`, the
/// budget and `p ⪰ 0`.
pub fn inner_max_received_power(
    svd: &SvdDecomposition,
    rho: f64,
    p_t: f64,
    sigma2: f64,
    rate_req: f64,
) -> Result<PowerAllocation> {
    let gains = svd.gains();
    let inner = inner_solve(&gains, PowerSplit::from_rho(rho), p_t, sigma2, rate_req)?;
    Ok(PowerAllocation::from_powers(inner.powers))
}

pub fn inner_solve(
    gains: &[f64],
    split: PowerSplit,
    p_t: f64,
    sigma2: f64,
    rate_req: f64,
) -> Result<InnerSolution> {
    let n = gains.len();
    let a1 = gains[0];
    let t = split.id_fraction();

    let eb_rate = (t * p_t * a1 / sigma2).ln_1p() / LN_2;
    if rate_req <= 0.0 || eb_rate >= rate_req {
        let mut powers = vec![0.0; n];
        powers[0] = p_t;
        return Ok(InnerSolution {
            powers,
            kappa: 0.0,
            nu_prime: a1,
            objective: p_t * a1,
        });
    }

    let ceiling = max_rate_at(gains, p_t, sigma2, t);
    if rate_req > ceiling + RATE_SLACK * ceiling.max(1.0) {
        return Err(SwiptError::InfeasibleRate {
            required: rate_req,
            max_rate: ceiling,
        });
    }

    let usable = gains.iter().take_while(|a| **a > 0.0).count();
    let shape = InnerShape {
        gains: &gains[..usable],
        t,
        sigma2,
        rate_ln: rate_req * LN_2,
    };

    // Total power is decreasing in s = ν' − λ₁²: it tends to the EB power
    // needed for the rate (> P_T here) as s → 0 and to the waterfilling
    // minimum (≤ P_T) as s → ∞.
    let total = |s: f64| shape.evaluate(s).total;
    let mut lo = a1;
    let mut hi = a1;
    if total(a1) >= p_t {
        let mut expanded = 0;
        while total(hi) >= p_t {
            hi *= 1e3;
            expanded += 1;
            if expanded > 100 {
                return Ok(waterfill_fallback(gains, p_t, sigma2, split));
            }
        }
        lo = hi / 1e3;
    } else {
        while total(lo) < p_t && lo > f64::MIN_POSITIVE {
            lo /= 1e3;
        }
        hi = lo * 1e3;
    }

    for _ in 0..200 {
        if hi / lo - 1.0 <= 4.0 * f64::EPSILON {
            break;
        }
        let mid = (lo * hi).sqrt();
        if total(mid) >= p_t {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let lo_point = shape.evaluate(lo);
    let hi_point = shape.evaluate(hi);
    let (s, point) = if (lo_point.total - p_t).abs() <= (hi_point.total - p_t).abs() {
        (lo, lo_point)
    } else {
        (hi, hi_point)
    };
    let mut powers = point.powers;
    powers.resize(n, 0.0);
    Ok(InnerSolution {
        objective: eigen_received_power(gains, &powers),
        powers,
        kappa: point.kappa,
        nu_prime: a1 + s,
    })
}

/// At the very edge of feasibility only waterfilling meets the rate.
fn waterfill_fallback(gains: &[f64], p_t: f64, sigma2: f64, split: PowerSplit) -> InnerSolution {
    let t = split.id_fraction();
    let alloc = waterfill_gains(gains, p_t, sigma2 / t);
    InnerSolution {
        objective: eigen_received_power(gains, &alloc.powers),
        powers: alloc.powers,
        kappa: f64::INFINITY,
        nu_prime: f64::INFINITY,
    }
}

struct InnerShape<'a> {
    gains: &'a [f64],
    t: f64,
    sigma2: f64,
    rate_ln: f64,
}

struct InnerPoint {
    powers: Vec<f64>,
    kappa: f64,
    total: f64,
}

impl InnerShape<'_> {
    /// For `ν' = λ₁² + s`, picks `κ` so the rate holds with equality and
    /// returns the induced powers. Levels `ℓ_i = (ν' − a_i)/b_i` with
    /// `b_i = (1−ρ) a_i/σ²` are increasing in `i`; channel `i` is active iff
    /// `κ > ℓ_i`, and then `p_i = (κ/ℓ_i − 1)/b_i`.
    fn evaluate(&self, s: f64) -> InnerPoint {
        let a1 = self.gains[0];
        let n = self.gains.len();
        let mut ln_levels = Vec::with_capacity(n);
        let mut snr_gain = Vec::with_capacity(n);
        for a in self.gains {
            let b = self.t * a / self.sigma2;
            // s + (a1 − a) keeps full precision when s is tiny.
            ln_levels.push(((s + (a1 - a)) / b).ln());
            snr_gain.push(b);
        }

        let mut active = n;
        let mut ln_kappa = 0.0;
        let mut ln_sum = 0.0;
        for k in 0..n {
            ln_sum += ln_levels[k];
            ln_kappa = (self.rate_ln + ln_sum) / (k + 1) as f64;
            if k + 1 == n || ln_kappa <= ln_levels[k + 1] {
                active = k + 1;
                break;
            }
        }

        let mut powers = vec![0.0; n];
        for i in 0..active {
            powers[i] = (ln_kappa - ln_levels[i]).exp_m1().max(0.0) / snr_gain[i];
        }
        InnerPoint {
            total: powers.iter().sum(),
            powers,
            kappa: ln_kappa.exp(),
        }
    }
}

/// Smallest decoding fraction `1 − ρ` at which the rate is still reachable.
pub(crate) fn min_id_fraction(prob: &SwiptProblem) -> f64 {
    let rate = prob.rate_req;
    if rate <= 0.0 {
        return 0.0;
    }
    let feasible = |t: f64| max_rate_at(&prob.gains, prob.p_t, prob.sigma2, t) >= rate;
    if !feasible(1.0) {
        return 1.0;
    }
    let mut lo = 1e-3;
    while feasible(lo) {
        lo *= 1e-3;
        if lo < 1e-300 {
            return lo;
        }
    }
    let mut hi = (lo * 1e3).min(1.0);
    for _ in 0..200 {
        if hi / lo - 1.0 <= 4.0 * f64::EPSILON {
            break;
        }
        let mid = (lo * hi).sqrt();
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

struct OuterPoint {
    split: PowerSplit,
    inner: InnerSolution,
    harvest: f64,
}

fn outer_point(prob: &SwiptProblem, ln_t: f64) -> Result<OuterPoint> {
    let split = PowerSplit::from_id_fraction(ln_t.exp().min(1.0));
    let inner = inner_solve(&prob.gains, split, prob.p_t, prob.sigma2, prob.rate_req)?;
    Ok(OuterPoint {
        harvest: split.rho() * inner.objective,
        split,
        inner,
    })
}

/// Envelope derivative `dg/dρ = f(ρ) − ρ κ Σ p_i a_i / (σ² + (1−ρ) p_i a_i)`.
fn harvest_slope(prob: &SwiptProblem, point: &OuterPoint) -> f64 {
    let t = point.split.id_fraction();
    if point.inner.kappa == 0.0 {
        return point.inner.objective;
    }
    let weighted: f64 = prob
        .gains
        .iter()
        .zip(&point.inner.powers)
        .map(|(a, p)| p * a / (prob.sigma2 + t * p * a))
        .sum();
    point.inner.objective - point.split.rho() * point.inner.kappa * weighted
}

/// Maximizes a unimodal function on `[a, b]`; returns the final bracket.
pub fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok((a, b))
}

/// SM design: outer unimodal search over the split, inner generalized
/// waterfilling. Returns the rank-1 design when that is optimal.
pub fn solve_sm_branch(prob: &SwiptProblem) -> Result<JointSolution> {
    let r_max = prob.max_rate();
    if prob.rate_req > r_max + RATE_SLACK * r_max.max(1.0) {
        return Err(SwiptError::InfeasibleRate {
            required: prob.rate_req,
            max_rate: r_max,
        });
    }

    if prob.rate_req <= 0.0 {
        let split = PowerSplit::from_rho(1.0);
        let (mu, nu) = eb_multipliers(prob, split);
        let allocation = PowerAllocation::beamforming(prob.gains.len(), prob.p_t);
        return Ok(JointSolution::assemble(prob, allocation, split, mu, nu));
    }

    let t_min = min_id_fraction(prob);
    if t_min >= 1.0 {
        // Only full decoding meets the rate: waterfilling at ρ = 0.
        let split = PowerSplit::from_rho(0.0);
        let allocation = waterfill_gains(&prob.gains, prob.p_t, prob.sigma2);
        let (mu, nu) = recover_multipliers(&prob.gains, &allocation.powers, split, prob.sigma2);
        return Ok(JointSolution::assemble(prob, allocation, split, mu, nu));
    }

    let u_min = t_min.ln();
    let (mut lo, mut hi) = golden_section_max(
        |u| outer_point(prob, u).map(|p| p.harvest),
        u_min,
        0.0,
        GOLDEN_TOLERANCE,
    )?;

    // Polish: bisection on the sign of dg/dρ. Larger u means smaller ρ. Near
    // the flat top g is resolved only to ~sqrt(eps) in u, so the golden bracket
    // may miss the root of the slope; widen it until the sign changes.
    let slope_at = |u: f64| -> Result<f64> { Ok(harvest_slope(prob, &outer_point(prob, u)?)) };
    lo = lo.max(u_min);
    hi = hi.min(0.0);
    let mut width = (hi - lo).max(GOLDEN_TOLERANCE);
    while lo > u_min && slope_at(lo)? > 0.0 {
        lo = (lo - width).max(u_min);
        width *= 2.0;
    }
    let mut width = (hi - lo).max(GOLDEN_TOLERANCE);
    while hi < 0.0 && slope_at(hi)? <= 0.0 {
        hi = (hi + width).min(0.0);
        width *= 2.0;
    }
    for _ in 0..100 {
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let point = outer_point(prob, mid)?;
        if harvest_slope(prob, &point) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let mut best = outer_point(prob, lo)?;
    let other = outer_point(prob, hi)?;
    if other.harvest > best.harvest {
        best = other;
    }
    if let Ok(eb) = solve_eb_branch(prob) {
        if eb.split.id_fraction() >= t_min && eb.p_re >= best.harvest {
            return Ok(eb);
        }
    }

    let split = best.split;
    let allocation = PowerAllocation::from_powers(best.inner.powers);
    let (mu, nu) = if Branch::of(&allocation.powers) == Branch::EnergyBeamforming {
        eb_multipliers(prob, split)
    } else if best.inner.kappa.is_finite() {
        let rho = split.rho();
        (rho * best.inner.kappa * LN_2, rho * best.inner.nu_prime)
    } else {
        recover_multipliers(&prob.gains, &allocation.powers, split, prob.sigma2)
    };
    Ok(JointSolution::assemble(prob, allocation, split, mu, nu))
}

/// Globally optimal design: evaluates both branches and keeps the one with
/// more harvestable power, EB winning ties.
pub fn solve_joint(prob: &SwiptProblem) -> Result<JointSolution> {
    let sm = solve_sm_branch(prob)?;
    match solve_eb_branch(prob) {
        Ok(eb) if eb.p_re >= sm.p_re - BRANCH_TIE * prob.reference_power() => Ok(eb),
        _ => Ok(sm),
    }
}

/// `R_th`: the largest rate for which energy beamforming is still optimal,
/// found by bisection on the branch comparison.
pub fn compute_rate_threshold(svd: &SvdDecomposition, p_t: f64, sigma2: f64) -> Result<f64> {
    let prob = SwiptProblem::new(svd.clone(), p_t, sigma2, 0.0)?;
    let gains = prob.gains();
    let usable = gains.iter().filter(|a| **a > 0.0).count();
    if usable < 2 {
        return Ok(prob.eb_capacity());
    }
    if gains[0] - gains[1] <= 1e-12 * gains[0] {
        return Ok(0.0);
    }

    let eb_sufficient = |rate: f64| -> Result<bool> {
        let at = prob.with_rate(rate)?;
        let eb = solve_eb_branch(&at)?;
        let sm = solve_sm_branch(&at)?;
        Ok(eb.p_re >= sm.p_re - BRANCH_TIE * at.reference_power())
    };

    let mut lo = 0.0;
    let mut hi = prob.eb_capacity().min(prob.max_rate());
    if eb_sufficient(hi)? {
        return Ok(hi);
    }
    while hi - lo > THRESHOLD_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if eb_sufficient(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Closed-form threshold from the two strongest eigenchannels with powers
/// `(p1, p2)`:
/// `log2(1 + p2 D12/σ² + sqrt(D12 (a1 p1 + a2 p2)² / (a1 a2 σ² p1)))`,
/// `D12 = a1 − a2`.
pub fn threshold_formula(a1: f64, a2: f64, p1: f64, p2: f64, sigma2: f64) -> f64 {
    let d12 = a1 - a2;
    let received = a1 * p1 + a2 * p2;
    let root = (d12 * received * received / (a1 * a2 * sigma2 * p1)).sqrt();
    (p2 * d12 / sigma2 + root).ln_1p() / LN_2
}

/// The threshold formula at the crossing, where the second eigenchannel is
/// just about to become active (`p1 = P_T`, `p2 = 0`).
pub fn threshold_closed_form(svd: &SvdDecomposition, p_t: f64, sigma2: f64) -> f64 {
    let gains = svd.gains();
    if gains.len() < 2 || gains[1] <= 0.0 {
        return (p_t * gains[0] / sigma2).ln_1p() / LN_2;
    }
    threshold_formula(gains[0], gains[1], p_t, 0.0, sigma2)
}
