//! RF-to-DC rectification models mapping the power routed to harvesting,
//! `P_RE`, to harvested DC power `P_H = η(P_RE)·P_RE`.
//!
//! Any model whose `P_H` is non-decreasing in `P_RE` leaves the optimal
//! design unchanged, so these only post-process solver output.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SwiptError};

/// Default RF sensitivity, 10 μW (−20 dBm).
pub const DEFAULT_SENSITIVITY: f64 = 1e-5;
/// Target peak efficiency when calibrating the saturating model.
pub const DEFAULT_PEAK_EFFICIENCY: f64 = 0.5;

const MONOTONE_GRID: usize = 4096;

pub trait Rectifier {
    /// Harvested DC power (watts) for `p_re` watts of RF input.
    fn rectify(&self, p_re: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EhModel {
    Linear {
        efficiency: f64,
    },
    /// Logistic curve `f(p) = 1/(1 + exp(−steepness·(p − sensitivity)))`,
    /// shifted and scaled so `P_H(0) = 0` and `P_H(∞) = p_saturation`.
    Saturating {
        p_saturation: f64,
        sensitivity: f64,
        steepness: f64,
    },
}

impl Default for EhModel {
    fn default() -> Self {
        EhModel::saturating_default(1.0).expect("default saturating parameters are valid")
    }
}

impl EhModel {
    pub fn linear(efficiency: f64) -> Result<Self> {
        let model = EhModel::Linear { efficiency };
        model.validate()?;
        Ok(model)
    }

    pub fn saturating(p_saturation: f64, sensitivity: f64, steepness: f64) -> Result<Self> {
        let model = EhModel::Saturating {
            p_saturation,
            sensitivity,
            steepness,
        };
        model.validate()?;
        Ok(model)
    }

    /// Saturating model with 10 μW sensitivity and steepness calibrated so the
    /// peak efficiency is 50%.
    pub fn saturating_default(p_saturation: f64) -> Result<Self> {
        if !(p_saturation > 0.0 && p_saturation.is_finite()) {
            return Err(SwiptError::invalid("p_saturation", "must be positive"));
        }
        let steepness = calibrate_steepness(p_saturation, DEFAULT_SENSITIVITY, DEFAULT_PEAK_EFFICIENCY);
        Self::saturating(p_saturation, DEFAULT_SENSITIVITY, steepness)
    }

    /// Parameter ranges plus a dense-grid monotonicity check.
    pub fn validate(&self) -> Result<()> {
        match *self {
            EhModel::Linear { efficiency } => {
                if !(efficiency > 0.0 && efficiency <= 1.0) {
                    return Err(SwiptError::invalid("eh_model.efficiency", "must lie in (0, 1]"));
                }
            }
            EhModel::Saturating {
                p_saturation,
                sensitivity,
                steepness,
            } => {
                for (field, value) in [
                    ("eh_model.p_saturation", p_saturation),
                    ("eh_model.sensitivity", sensitivity),
                    ("eh_model.steepness", steepness),
                ] {
                    if !(value > 0.0 && value.is_finite()) {
                        return Err(SwiptError::invalid(field, "must be positive and finite"));
                    }
                }
                let span = 100.0 * p_saturation.max(sensitivity);
                if !check_monotone(self, span, MONOTONE_GRID) {
                    return Err(SwiptError::invalid("eh_model", "harvested power is not monotone"));
                }
            }
        }
        Ok(())
    }

    /// `η(p) = P_H(p)/p`.
    pub fn efficiency(&self, p_re: f64) -> f64 {
        if p_re <= 0.0 {
            return 0.0;
        }
        self.rectify(p_re) / p_re
    }
}

impl Rectifier for EhModel {
    fn rectify(&self, p_re: f64) -> f64 {
        if p_re <= 0.0 {
            return 0.0;
        }
        let harvested = match *self {
            EhModel::Linear { efficiency } => efficiency * p_re,
            EhModel::Saturating {
                p_saturation,
                sensitivity,
                steepness,
            } => saturating_curve(p_re, p_saturation, sensitivity, steepness),
        };
        // Never more DC out than RF in.
        harvested.clamp(0.0, p_re)
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn saturating_curve(p: f64, p_saturation: f64, sensitivity: f64, steepness: f64) -> f64 {
    let f0 = logistic(-steepness * sensitivity);
    let fp = logistic(steepness * (p - sensitivity));
    p_saturation * (fp - f0) / (1.0 - f0)
}

/// True iff `rectify` is non-decreasing on `n_grid` evenly spaced points of
/// `[0, p_max]`.
pub fn check_monotone<R: Rectifier + ?Sized>(model: &R, p_max: f64, n_grid: usize) -> bool {
    assert!(p_max > 0.0 && n_grid >= 2);
    let mut previous = model.rectify(0.0);
    for k in 1..n_grid {
        let p = p_max * k as f64 / (n_grid - 1) as f64;
        let current = model.rectify(p);
        if current < previous {
            return false;
        }
        previous = current;
    }
    true
}

/// Peak of the unclipped efficiency `P_H(p)/p` over a log grid.
fn peak_efficiency(p_saturation: f64, sensitivity: f64, steepness: f64) -> f64 {
    let lo = (sensitivity * 1e-4).ln();
    let hi = (1e3 * p_saturation.max(sensitivity)).ln();
    let n = 2000;
    (0..=n)
        .map(|k| {
            let p = (lo + (hi - lo) * k as f64 / n as f64).exp();
            saturating_curve(p, p_saturation, sensitivity, steepness) / p
        })
        .fold(0.0, f64::max)
}

/// Steepness whose peak efficiency equals `target`, by bisection in log space
/// (peak efficiency grows with steepness).
pub fn calibrate_steepness(p_saturation: f64, sensitivity: f64, target: f64) -> f64 {
    let mut lo = (1e-6 / p_saturation.max(sensitivity)).ln();
    let mut hi = (1e6 / sensitivity).ln();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if peak_efficiency(p_saturation, sensitivity, mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    (0.5 * (lo + hi)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    struct Dip;

    impl Rectifier for Dip {
        fn rectify(&self, p: f64) -> f64 {
            if (0.4..0.6).contains(&p) {
                0.1 * p
            } else {
                0.5 * p
            }
        }
    }

    #[test]
    fn linear_rectifier() {
        let m = EhModel::linear(0.5).unwrap();
        assert_eq!(m.rectify(2.0), 1.0);
        assert_eq!(m.rectify(0.0), 0.0);
        assert!(check_monotone(&m, 10.0, 100));
    }

    #[test]
    fn zero_input_gives_zero() {
        assert_eq!(EhModel::default().rectify(0.0), 0.0);
        assert_eq!(EhModel::saturating(1e-3, 1e-5, 1e3).unwrap().rectify(0.0), 0.0);
    }

    #[test]
    fn saturating_plateau() {
        let m = EhModel::saturating(1e-3, 1e-5, 5e3).unwrap();
        assert_relative_eq!(m.rectify(1.0), 1e-3, max_relative = 1e-9);
        assert_relative_eq!(m.rectify(10.0), 1e-3, max_relative = 1e-9);
        assert!(check_monotone(&m, 1.0, 10_000));
    }

    #[test]
    fn dip_is_detected() {
        assert!(!check_monotone(&Dip, 1.0, 101));
    }

    #[test]
    fn default_calibration_peaks_at_half() {
        for p_sat in [1e-3, 1e-2, 1.0] {
            let m = EhModel::saturating_default(p_sat).unwrap();
            let EhModel::Saturating {
                p_saturation,
                sensitivity,
                steepness,
            } = m
            else {
                unreachable!()
            };
            assert_eq!(sensitivity, DEFAULT_SENSITIVITY);
            let peak = peak_efficiency(p_saturation, sensitivity, steepness);
            assert!((peak - 0.5).abs() < 1e-3, "p_sat {p_sat}: peak {peak}");
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(EhModel::linear(0.0).is_err());
        assert!(EhModel::linear(1.5).is_err());
        assert!(EhModel::saturating(-1.0, 1e-5, 1.0).is_err());
        assert!(EhModel::saturating(1.0, 1e-5, f64::NAN).is_err());
    }

    #[test]
    fn serde_tagging() {
        let json = serde_json::to_string(&EhModel::linear(0.7).unwrap()).unwrap();
        assert_eq!(json, r#"{"kind":"linear","efficiency":0.7}"#);
    }

    proptest! {
        #[test]
        fn conservation(
            p in 0.0f64..100.0,
            eta in 0.01f64..=1.0,
            p_sat in 1e-4f64..10.0,
            steep_exp in -1.0f64..6.0,
        ) {
            let linear = EhModel::Linear { efficiency: eta };
            let sat = EhModel::Saturating { p_saturation: p_sat, sensitivity: 1e-5, steepness: 10f64.powf(steep_exp) };
            for m in [linear, sat] {
                let h = m.rectify(p);
                prop_assert!(h >= 0.0 && h <= p);
            }
        }
    }
}
