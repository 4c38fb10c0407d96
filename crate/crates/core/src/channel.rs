//! MIMO channel realizations, their reduced SVD, and the physical-layer
//! quantities every solver consumes: received RF power and achievable rate.
//!
//! Covariances produced by the solvers are always diagonal in the channel's
//! right singular basis, so both quantities reduce to sums over eigenchannels
//! with gains `λ_i²`. The matrix (trace / log-determinant) forms are kept
//! alongside for full covariances and cross-checks.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SwiptError};

/// Seedable generator used for every random draw in the crate.
pub type SimRng = ChaCha8Rng;

const JACOBI_TOLERANCE: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// A complex `N_R × N_T` channel `H` with its propagation-loss scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: DMatrix<Complex64>,
    theta: f64,
}

impl ChannelRealization {
    pub fn new(h: DMatrix<Complex64>, theta: f64) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(SwiptError::invalid("h", "channel matrix must be non-empty"));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SwiptError::invalid("h", "channel entries must be finite"));
        }
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(SwiptError::invalid("theta", "must be finite and non-negative"));
        }
        Ok(Self { h, theta })
    }

    /// Builds a real diagonal channel, mostly useful for hand-checked cases.
    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let n = entries.len();
        let h = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(entries[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(h, 1.0)
    }

    pub fn h(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn n_r(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.h.ncols()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Reduced SVD `H = U · diag(λ) · Vᴴ` with `λ` sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdDecomposition {
    u: DMatrix<Complex64>,
    lambda: Vec<f64>,
    v: DMatrix<Complex64>,
}

impl SvdDecomposition {
    /// Decomposition of a real diagonal channel with identity bases.
    ///
    /// `lambda` must be non-negative and sorted descending.
    pub fn from_singular_values(lambda: &[f64]) -> Result<Self> {
        if lambda.is_empty() {
            return Err(SwiptError::invalid("lambda", "at least one singular value required"));
        }
        if lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(SwiptError::invalid("lambda", "singular values must be finite and non-negative"));
        }
        if lambda.windows(2).any(|w| w[1] > w[0]) {
            return Err(SwiptError::invalid("lambda", "singular values must be sorted descending"));
        }
        let r = lambda.len();
        Ok(Self {
            u: DMatrix::identity(r, r),
            lambda: lambda.to_vec(),
            v: DMatrix::identity(r, r),
        })
    }

    pub fn u(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<Complex64> {
        &self.v
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.lambda
    }

    /// Eigenchannel power gains `λ_i²`.
    pub fn gains(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| l * l).collect()
    }

    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn n_r(&self) -> usize {
        self.u.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.v.nrows()
    }

    /// `U · diag(λ) · Vᴴ`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let mut scaled = self.u.clone();
        for (j, l) in self.lambda.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*l);
        }
        scaled * self.v.adjoint()
    }
}

/// Transmit covariance `S = V · diag(powers) · Vᴴ`, kept in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    eigenbasis: DMatrix<Complex64>,
    powers: Vec<f64>,
}

impl Covariance {
    pub fn new(eigenbasis: DMatrix<Complex64>, powers: Vec<f64>) -> Result<Self> {
        if eigenbasis.ncols() != powers.len() {
            return Err(SwiptError::DimensionMismatch {
                expected: eigenbasis.ncols(),
                got: powers.len(),
            });
        }
        if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(SwiptError::invalid("powers", "must be finite and non-negative"));
        }
        Ok(Self { eigenbasis, powers })
    }

    /// Covariance diagonal in the channel's right singular basis.
    pub fn in_eigenbasis(svd: &SvdDecomposition, powers: Vec<f64>) -> Result<Self> {
        Self::new(svd.v.clone(), powers)
    }

    pub fn eigenbasis(&self) -> &DMatrix<Complex64> {
        &self.eigenbasis
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn materialize(&self) -> DMatrix<Complex64> {
        let mut scaled = self.eigenbasis.clone();
        for (j, p) in self.powers.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*p);
        }
        scaled * self.eigenbasis.adjoint()
    }
}

/// Uniform power-splitting ratio `ρ` together with its complement `1 − ρ`.
///
/// Near `ρ → 1` the complement cannot be recovered from `ρ` in f64 without
/// losing most of its significant digits, and every rate evaluation depends
/// on it, so both are stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    rho: f64,
    id_fraction: f64,
}

impl PowerSplit {
    /// Panics unless `0 ≤ rho ≤ 1`.
    pub fn from_rho(rho: f64) -> Self {
        assert!((0.0..=1.0).contains(&rho), "rho = {rho} outside [0, 1]");
        Self {
            rho,
            id_fraction: 1.0 - rho,
        }
    }

    /// Panics unless `0 ≤ id_fraction ≤ 1`.
    pub fn from_id_fraction(id_fraction: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&id_fraction),
            "id fraction = {id_fraction} outside [0, 1]"
        );
        Self {
            rho: 1.0 - id_fraction,
            id_fraction,
        }
    }

    /// Fraction routed to energy harvesting.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Fraction routed to information decoding, `1 − ρ`.
    pub fn id_fraction(&self) -> f64 {
        self.id_fraction
    }
}

/// Draws `H = θ·G` with i.i.d. unit-variance circularly symmetric complex
/// Gaussian entries, deterministically from `rng_seed`.
pub fn generate_channel(n_r: usize, n_t: usize, theta: f64, rng_seed: u64) -> ChannelRealization {
    let mut rng = SimRng::seed_from_u64(rng_seed);
    generate_channel_with(&mut rng, n_r, n_t, theta)
}

/// Same as [`generate_channel`] but drawing from a caller-owned generator.
/// Entries are filled row by row.
pub fn generate_channel_with<R: Rng + ?Sized>(
    rng: &mut R,
    n_r: usize,
    n_t: usize,
    theta: f64,
) -> ChannelRealization {
    assert!(n_r >= 1 && n_t >= 1, "channel dimensions must be positive");
    assert!(theta > 0.0 && theta.is_finite(), "theta must be positive");
    let mut h = DMatrix::zeros(n_r, n_t);
    for i in 0..n_r {
        for j in 0..n_t {
            h[(i, j)] = complex_gaussian(rng) * theta;
        }
    }
    ChannelRealization { h, theta }
}

/// Box–Muller draw of a CN(0, 1) sample: real and imaginary parts each have
/// variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    // u1 in (0, 1] keeps the logarithm finite.
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let radius = (-u1.ln()).sqrt();
    Complex64::from_polar(radius, 2.0 * PI * u2)
}

/// Reduced SVD via cyclic Jacobi on the Gram matrix `HᴴH`.
pub fn decompose(ch: &ChannelRealization) -> Result<SvdDecomposition> {
    let h = &ch.h;
    let (n_r, n_t) = (h.nrows(), h.ncols());
    let rank = n_r.min(n_t);

    let gram = h.adjoint() * h;
    let (eigenvalues, eigenvectors) = hermitian_jacobi(&gram)?;

    let mut order: Vec<usize> = (0..n_t).collect();
    // Stable sort: equal eigenvalues keep their original index order.
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));

    let lambda: Vec<f64> = order[..rank]
        .iter()
        .map(|&k| eigenvalues[k].max(0.0).sqrt())
        .collect();
    let mut v = DMatrix::zeros(n_t, rank);
    for (j, &k) in order[..rank].iter().enumerate() {
        v.set_column(j, &eigenvectors.column(k));
    }

    let floor = lambda[0] * 1e-14;
    let mut u = DMatrix::<Complex64>::zeros(n_r, rank);
    for j in 0..rank {
        if lambda[j] > floor && lambda[j] > 0.0 {
            let col = (h * v.column(j)) / Complex64::new(lambda[j], 0.0);
            u.set_column(j, &col);
        } else {
            let col = orthonormal_completion(&u, j);
            u.set_column(j, &col);
        }
    }

    Ok(SvdDecomposition { u, lambda, v })
}

/// Unit vector orthogonal to the first `filled` columns of `basis`, built by
/// Gram–Schmidt against the standard basis.
fn orthonormal_completion(basis: &DMatrix<Complex64>, filled: usize) -> nalgebra::DVector<Complex64> {
    let n = basis.nrows();
    let mut best = nalgebra::DVector::zeros(n);
    let mut best_norm = -1.0;
    for e in 0..n {
        let mut cand = nalgebra::DVector::<Complex64>::zeros(n);
        cand[e] = Complex64::new(1.0, 0.0);
        for j in 0..filled {
            let col = basis.column(j);
            let proj = col.dotc(&cand);
            cand -= col * proj;
        }
        let norm = cand.norm();
        if norm > best_norm {
            best_norm = norm;
            best = cand;
        }
    }
    best / Complex64::new(best_norm, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns unsorted eigenvalues and the matching eigenvectors as
/// columns.
pub fn hermitian_jacobi(matrix: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "Jacobi needs a square matrix");
    let mut a = matrix.clone();
    let mut vecs = DMatrix::<Complex64>::identity(n, n);
    let scale = a.norm();

    let off_norm = |a: &DMatrix<Complex64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut residual = off_norm(&a);
    let mut sweeps = 0;
    while residual > JACOBI_TOLERANCE * scale {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(SwiptError::EigenNotConverged { sweeps, residual });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut vecs, p, q);
            }
        }
        sweeps += 1;
        residual = off_norm(&a);
    }

    let eigenvalues = (0..n).map(|i| a[(i, i)].re).collect();
    Ok((eigenvalues, vecs))
}

/// Applies the unitary rotation that annihilates `a[p, q]`:
/// `A ← Jᴴ A J`, `V ← V J`.
fn rotate(a: &mut DMatrix<Complex64>, vecs: &mut DMatrix<Complex64>, p: usize, q: usize) {
    let g = a[(p, q)];
    let magnitude = g.norm();
    if magnitude == 0.0 {
        return;
    }
    let phase = g / magnitude;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    // Real symmetric rotation after rotating the phase of column q away.
    let theta = (aqq - app) / (2.0 * magnitude);
    let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let conj_phase = phase.conj();
    let j_pp = Complex64::new(c, 0.0);
    let j_pq = Complex64::new(s, 0.0);
    let j_qp = conj_phase * (-s);
    let j_qq = conj_phase * c;

    let n = a.nrows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * j_pp + akq * j_qp;
        a[(k, q)] = akp * j_pq + akq * j_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = j_pp.conj() * apk + j_qp.conj() * aqk;
        a[(q, k)] = j_pq.conj() * apk + j_qq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for k in 0..vecs.nrows() {
        let vkp = vecs[(k, p)];
        let vkq = vecs[(k, q)];
        vecs[(k, p)] = vkp * j_pp + vkq * j_qp;
        vecs[(k, q)] = vkp * j_pq + vkq * j_qq;
    }
}

/// `Σ p_i λ_i²`, the received RF power of a covariance diagonal in `V`.
pub fn eigen_received_power(gains: &[f64], powers: &[f64]) -> f64 {
    gains.iter().zip(powers).map(|(a, p)| a * p).sum()
}

/// `Σ log2(1 + (1−ρ) p_i λ_i² / σ²)`.
pub fn eigen_rate(gains: &[f64], powers: &[f64], split: PowerSplit, sigma2: f64) -> f64 {
    let t = split.id_fraction();
    gains
        .iter()
        .zip(powers)
        .map(|(a, p)| (t * p * a / sigma2).ln_1p())
        .sum::<f64>()
        / LN_2
}

/// Received RF power `tr(H S Hᴴ) = Σ p_i λ_i²`.
pub fn received_rf_power(svd: &SvdDecomposition, cov: &Covariance) -> Result<f64> {
    check_rank(svd, cov)?;
    Ok(eigen_received_power(&svd.gains(), &cov.powers))
}

/// Achievable rate in bps/Hz with fraction `1 − rho` of the received signal
/// routed to decoding.
pub fn achievable_rate(svd: &SvdDecomposition, cov: &Covariance, rho: f64, sigma2: f64) -> Result<f64> {
    achievable_rate_split(svd, cov, PowerSplit::from_rho(rho), sigma2)
}

pub fn achievable_rate_split(
    svd: &SvdDecomposition,
    cov: &Covariance,
    split: PowerSplit,
    sigma2: f64,
) -> Result<f64> {
    check_rank(svd, cov)?;
    Ok(eigen_rate(&svd.gains(), &cov.powers, split, sigma2))
}

fn check_rank(svd: &SvdDecomposition, cov: &Covariance) -> Result<()> {
    if cov.powers.len() != svd.rank() {
        return Err(SwiptError::DimensionMismatch {
            expected: svd.rank(),
            got: cov.powers.len(),
        });
    }
    Ok(())
}

/// `Re tr(H S Hᴴ)` for an arbitrary covariance matrix.
pub fn trace_received_power(h: &DMatrix<Complex64>, s: &DMatrix<Complex64>) -> f64 {
    (h * s * h.adjoint()).trace().re
}

/// `log2 det(I + (1−ρ)σ⁻² H S Hᴴ)` for an arbitrary PSD covariance, via
/// Cholesky of the (Hermitian positive definite) argument.
pub fn log_det_rate(h: &DMatrix<Complex64>, s: &DMatrix<Complex64>, split: PowerSplit, sigma2: f64) -> f64 {
    let n_r = h.nrows();
    let scale = Complex64::new(split.id_fraction() / sigma2, 0.0);
    let mut m = h * s * h.adjoint() * scale;
    for i in 0..n_r {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    // Symmetrize away rounding so Cholesky sees an exactly Hermitian input.
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    match m.clone().cholesky() {
        Some(chol) => {
            let l = chol.l();
            2.0 * (0..n_r).map(|i| l[(i, i)].re.ln()).sum::<f64>() / LN_2
        }
        None => m.determinant().re.ln() / LN_2,
    }
}

/// `P[W] = 10^((dBm − 30)/10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gram_deviation(m: &DMatrix<Complex64>) -> f64 {
        let g = m.adjoint() * m;
        (g - DMatrix::<Complex64>::identity(m.ncols(), m.ncols())).norm()
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_channel(2, 2, 0.1, 7);
        let b = generate_channel(2, 2, 0.1, 7);
        assert_eq!(a, b);
        assert_ne!(a, generate_channel(2, 2, 0.1, 8));
    }

    #[test]
    fn generated_shape() {
        let ch = generate_channel(2, 3, 1.0, 1);
        assert_eq!((ch.n_r(), ch.n_t()), (2, 3));
        assert_eq!(ch.h().shape(), (2, 3));
    }

    #[test]
    fn per_entry_variance_matches_theta_squared() {
        let mut rng = SimRng::seed_from_u64(99);
        let draws = 100_000 / 16 + 1;
        let mut sum = 0.0;
        let mut count = 0usize;
        for _ in 0..draws {
            let ch = generate_channel_with(&mut rng, 4, 4, 0.1);
            sum += ch.h().iter().map(|z| z.norm_sqr()).sum::<f64>();
            count += 16;
        }
        let var = sum / count as f64;
        assert!((var - 0.01).abs() <= 0.05 * 0.01, "variance {var}");
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let ch = ChannelRealization::diagonal(&[1.0, 1.0]).unwrap();
        let svd = decompose(&ch).unwrap();
        assert_relative_eq!(svd.singular_values()[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(svd.singular_values()[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_channel_basis_is_standard() {
        let ch = ChannelRealization::diagonal(&[0.5, 1.0]).unwrap();
        let svd = decompose(&ch).unwrap();
        assert_relative_eq!(svd.singular_values()[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(svd.singular_values()[1], 0.5, epsilon = 1e-14);
        // Largest singular value lives on the second standard basis vector.
        assert_relative_eq!(svd.v()[(1, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(svd.v()[(0, 1)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn random_channels_reconstruct() {
        for seed in 0..200 {
            let (n_r, n_t) = [(4, 4), (2, 3), (3, 2), (1, 4), (4, 1)][seed as usize % 5];
            let ch = generate_channel(n_r, n_t, 0.1, seed);
            let svd = decompose(&ch).unwrap();
            let err = (svd.reconstruct() - ch.h()).norm() / ch.h().norm();
            assert!(err <= 1e-9, "seed {seed}: reconstruction error {err}");
            assert!(gram_deviation(svd.u()) <= 1e-10);
            assert!(gram_deviation(svd.v()) <= 1e-10);
            assert!(svd.singular_values().windows(2).all(|w| w[0] >= w[1]));
            assert_eq!(svd.rank(), n_r.min(n_t));
        }
    }

    #[test]
    fn rank_deficient_channel_completes_u() {
        let h = DMatrix::from_fn(2, 2, |i, _| Complex64::new(if i == 0 { 1.0 } else { 2.0 }, 0.0));
        let ch = ChannelRealization::new(h, 1.0).unwrap();
        let svd = decompose(&ch).unwrap();
        assert!(svd.singular_values()[1] < 1e-7);
        assert!(gram_deviation(svd.u()) <= 1e-10);
        let err = (svd.reconstruct() - ch.h()).norm() / ch.h().norm();
        assert!(err <= 1e-9);
    }

    #[test]
    fn rejects_non_finite_entries() {
        let h = DMatrix::from_element(2, 2, Complex64::new(f64::NAN, 0.0));
        assert!(ChannelRealization::new(h, 1.0).is_err());
    }

    #[test]
    fn received_power_cases() {
        let svd = SvdDecomposition::from_singular_values(&[1.0, 0.5]).unwrap();
        let eb = Covariance::in_eigenbasis(&svd, vec![10.0, 0.0]).unwrap();
        assert_relative_eq!(received_rf_power(&svd, &eb).unwrap(), 10.0);
        let zero = Covariance::in_eigenbasis(&svd, vec![0.0, 0.0]).unwrap();
        assert_eq!(received_rf_power(&svd, &zero).unwrap(), 0.0);
        let wf = Covariance::in_eigenbasis(&svd, vec![6.5, 3.5]).unwrap();
        assert_relative_eq!(received_rf_power(&svd, &wf).unwrap(), 7.375, epsilon = 1e-14);
    }

    #[test]
    fn received_power_dimension_mismatch() {
        let svd = SvdDecomposition::from_singular_values(&[1.0, 0.5]).unwrap();
        let cov = Covariance::new(DMatrix::identity(3, 3), vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            received_rf_power(&svd, &cov),
            Err(SwiptError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn rate_cases() {
        let svd = SvdDecomposition::from_singular_values(&[1.0, 0.5]).unwrap();
        let wf = Covariance::in_eigenbasis(&svd, vec![6.5, 3.5]).unwrap();
        assert_eq!(achievable_rate(&svd, &wf, 1.0, 1.0).unwrap(), 0.0);
        let expected = 7.5f64.log2() + 1.875f64.log2();
        assert_relative_eq!(achievable_rate(&svd, &wf, 0.0, 1.0).unwrap(), expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 3.8138, epsilon = 1e-4);
    }

    #[test]
    fn rate_decreases_in_rho() {
        let svd = SvdDecomposition::from_singular_values(&[1.0, 0.5]).unwrap();
        let cov = Covariance::in_eigenbasis(&svd, vec![2.0, 0.0]).unwrap();
        let rates: Vec<f64> = (0..=10)
            .map(|k| achievable_rate(&svd, &cov, k as f64 / 10.0, 1.0).unwrap())
            .collect();
        assert!(rates.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn materialized_covariance_is_psd() {
        let ch = generate_channel(3, 4, 0.3, 5);
        let svd = decompose(&ch).unwrap();
        let cov = Covariance::in_eigenbasis(&svd, vec![3.0, 1.0, 0.0]).unwrap();
        let s = cov.materialize();
        assert!((&s - s.adjoint()).norm() < 1e-12);
        let (eig, _) = hermitian_jacobi(&s).unwrap();
        assert!(eig.iter().all(|e| *e >= -1e-10));
        assert_relative_eq!(s.trace().re, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn dbm_conversion() {
        assert_relative_eq!(dbm_to_watts(30.0), 1.0);
        assert_relative_eq!(dbm_to_watts(-70.0), 1e-10, max_relative = 1e-12);
        assert_relative_eq!(watts_to_dbm(1e-13), -100.0, epsilon = 1e-9);
    }
}
