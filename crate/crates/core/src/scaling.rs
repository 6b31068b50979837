//! Power-law scaling of window quantities with window size.
//!
//! A quantity `Q` averaged over windows of `N_V` packets is modelled as
//! `Q ~ c * N_V^alpha`. The exponent is estimated by least squares on
//! `log2 Q` against `log2 N_V`; [`alignment_check`] offers an independent
//! view by rescaling per-level time series and measuring how well they
//! collapse onto each other.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// RMS log2 residual above which a fit is reported as having no simple
/// scaling relation.
pub const DEFAULT_RESIDUAL_THRESHOLD: f64 = 0.15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("need at least 2 window sizes, got {0}")]
    TooFewLevels(usize),
    #[error("mean {mean} at window size {window_size} is not positive")]
    NonPositiveMean { window_size: u64, mean: f64 },
    #[error("window sizes must be strictly increasing powers of two (got {0})")]
    BadWindowSize(u64),
    #[error("curves share no complete time span")]
    NoOverlap,
}

/// Mean (and spread) of a quantity across all windows of one size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSample {
    pub window_size: u64,
    pub mean: f64,
    pub std: f64,
}

impl ScalingSample {
    pub fn new(window_size: u64, mean: f64) -> Self {
        Self {
            window_size,
            mean,
            std: 0.0,
        }
    }

    /// Sample from a series of per-window values (population std).
    pub fn from_values(window_size: u64, values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            window_size,
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The samples follow a power law within the residual threshold.
    Scaling,
    /// No simple scaling relation.
    None,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Scaling => "scaling",
            Verdict::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub samples: Vec<ScalingSample>,
    /// Slope of `log2 mean` against `log2 N_V`.
    pub exponent: f64,
    /// `log2 mean` at `N_V = 1`.
    pub intercept: f64,
    /// Root-mean-square log2 residual.
    pub residual: f64,
    pub verdict: Verdict,
}

impl ScalingFit {
    /// Fitted value at window size `n_v`.
    pub fn predict(&self, n_v: u64) -> f64 {
        (self.intercept + self.exponent * (n_v as f64).log2()).exp2()
    }
}

pub fn fit_scaling(samples: &[ScalingSample]) -> Result<ScalingFit, ScalingError> {
    fit_scaling_with_threshold(samples, DEFAULT_RESIDUAL_THRESHOLD)
}

/// Ordinary least squares in log2-log2 space.
pub fn fit_scaling_with_threshold(samples: &[ScalingSample], threshold: f64) -> Result<ScalingFit, ScalingError> {
    if samples.len() < 2 {
        return Err(ScalingError::TooFewLevels(samples.len()));
    }
    let mut prev = 0u64;
    for s in samples {
        if !s.window_size.is_power_of_two() || s.window_size <= prev {
            return Err(ScalingError::BadWindowSize(s.window_size));
        }
        prev = s.window_size;
        if s.mean.is_nan() || s.mean <= 0.0 || s.mean.is_infinite() {
            return Err(ScalingError::NonPositiveMean {
                window_size: s.window_size,
                mean: s.mean,
            });
        }
    }

    let xs: Vec<f64> = samples.iter().map(|s| s.window_size.trailing_zeros() as f64).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.mean.log2()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - x_mean) * (y - y_mean);
        sxx += (x - x_mean) * (x - x_mean);
    }
    let exponent = sxy / sxx;
    let intercept = y_mean - exponent * x_mean;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + exponent * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    let verdict = if residual > threshold {
        Verdict::None
    } else {
        Verdict::Scaling
    };
    Ok(ScalingFit {
        samples: samples.to_vec(),
        exponent,
        intercept,
        residual,
        verdict,
    })
}

/// Per-window values of one quantity at one window size, in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub window_size: u64,
    pub values: Vec<f64>,
}

/// Mean relative cross-level spread after rescaling each curve by
/// `(N_V / n0)^beta`.
///
/// Curves are put on the time grid of the largest window: each of its windows
/// is matched with the average of the finer windows covering the same span.
/// At every common time point the spread is `(max - min) / mean` over levels;
/// the result averages that over time. Curves of `Q / N_V` that follow
/// `N_V^(-beta)` exactly give 0.
pub fn alignment_check(curves: &[LevelCurve], beta: f64, n0: u64) -> Result<f64, ScalingError> {
    if curves.len() < 2 {
        return Err(ScalingError::TooFewLevels(curves.len()));
    }
    let coarsest = curves.iter().map(|c| c.window_size).max().unwrap_or(0);
    for c in curves {
        if !c.window_size.is_power_of_two() {
            return Err(ScalingError::BadWindowSize(c.window_size));
        }
    }
    let points = curves
        .iter()
        .map(|c| c.values.len() / (coarsest / c.window_size) as usize)
        .min()
        .unwrap_or(0);
    if points == 0 {
        return Err(ScalingError::NoOverlap);
    }

    let mut total_spread = 0.0;
    for t in 0..points {
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for c in curves {
            let ratio = (coarsest / c.window_size) as usize;
            let span = &c.values[t * ratio..(t + 1) * ratio];
            let avg = span.iter().sum::<f64>() / ratio as f64;
            let scaled = avg * (c.window_size as f64 / n0 as f64).powf(beta);
            lo = lo.min(scaled);
            hi = hi.max(scaled);
            sum += scaled;
        }
        let mean = sum / curves.len() as f64;
        if mean != 0.0 {
            total_spread += (hi - lo) / mean.abs();
        }
    }
    Ok(total_spread / points as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(pairs: &[(u64, f64)]) -> Vec<ScalingSample> {
        pairs.iter().map(|&(n, m)| ScalingSample::new(n, m)).collect()
    }

    #[test]
    fn exact_linear_law() {
        let fit = fit_scaling(&samples(&[(1 << 10, 1024.0), (1 << 12, 4096.0), (1 << 14, 16384.0)])).unwrap();
        assert_eq!(fit.exponent, 1.0);
        assert_eq!(fit.intercept, 0.0);
        assert_eq!(fit.residual, 0.0);
        assert_eq!(fit.verdict, Verdict::Scaling);
        assert!((fit.predict(1 << 16) - 65536.0).abs() < 1e-6);
    }

    #[test]
    fn constant_law() {
        let fit = fit_scaling(&samples(&[(1 << 10, 7.0), (1 << 12, 7.0), (1 << 14, 7.0)])).unwrap();
        assert_eq!(fit.exponent, 0.0);
        assert!(fit.residual < 1e-15);
        assert!((fit.intercept - 7f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn noisy_zigzag_gets_no_verdict() {
        let fit = fit_scaling(&samples(&[(1 << 10, 1.0), (1 << 11, 4.0), (1 << 12, 1.0), (1 << 13, 4.0)])).unwrap();
        assert!(fit.residual > DEFAULT_RESIDUAL_THRESHOLD);
        assert_eq!(fit.verdict, Verdict::None);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            fit_scaling(&samples(&[(1024, 1.0)])),
            Err(ScalingError::TooFewLevels(1))
        );
        assert!(matches!(
            fit_scaling(&samples(&[(1024, 1.0), (2048, 0.0)])),
            Err(ScalingError::NonPositiveMean { window_size: 2048, .. })
        ));
        assert_eq!(
            fit_scaling(&samples(&[(1024, 1.0), (1000, 2.0)])),
            Err(ScalingError::BadWindowSize(1000))
        );
        assert_eq!(
            fit_scaling(&samples(&[(2048, 1.0), (1024, 2.0)])),
            Err(ScalingError::BadWindowSize(1024))
        );
    }

    #[test]
    fn from_values_population_std() {
        let s = ScalingSample::from_values(8, &[1.0, 3.0]);
        assert_eq!((s.mean, s.std), (2.0, 1.0));
    }

    fn power_curves(beta: f64, levels: u32, top_windows: usize) -> Vec<LevelCurve> {
        (0..levels)
            .map(|k| {
                let n_v = 1u64 << (10 + k);
                let len = top_windows << (levels - 1 - k);
                let frac = 3.0 * (n_v as f64).powf(-beta);
                LevelCurve {
                    window_size: n_v,
                    values: vec![frac; len],
                }
            })
            .collect()
    }

    #[test]
    fn exact_alignment_has_zero_dispersion() {
        let curves = power_curves(0.4, 4, 3);
        let d = alignment_check(&curves, 0.4, 1 << 10).unwrap();
        assert!(d.abs() < 1e-12, "{d}");
    }

    #[test]
    fn zero_beta_reports_raw_spread() {
        let curves = vec![
            LevelCurve { window_size: 2, values: vec![1.0, 1.0] },
            LevelCurve { window_size: 4, values: vec![3.0] },
        ];
        let d = alignment_check(&curves, 0.0, 2).unwrap();
        assert!((d - 1.0).abs() < 1e-15, "{d}");
    }

    #[test]
    fn alignment_averages_fine_windows() {
        // The fine level averages to 2.0 over the coarse span.
        let curves = vec![
            LevelCurve { window_size: 1, values: vec![1.0, 3.0, 5.0] },
            LevelCurve { window_size: 2, values: vec![2.0] },
        ];
        assert_eq!(alignment_check(&curves, 0.0, 1).unwrap(), 0.0);
        let short = vec![
            LevelCurve { window_size: 1, values: vec![1.0] },
            LevelCurve { window_size: 2, values: vec![2.0] },
        ];
        assert_eq!(alignment_check(&short, 0.0, 1), Err(ScalingError::NoOverlap));
    }
}
