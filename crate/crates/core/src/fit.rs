//! Power-law fits of transfer time against chain length,
//! `t(P, N) = a · N^b · |ln P|`, by least squares in log space.

use alloc::vec::Vec;

use crate::sweep::{mean_std, SweepRecord};
use crate::{Error, Result};

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;

/// Mean time needed to push the joint failure probability down to `failure` on chains of `len` sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub len: usize,
    pub failure: f64,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    /// a
    pub prefactor: f64,
    /// b
    pub exponent: f64,
    /// RMS of `ln t - ln(a N^b |ln P|)` over the fitted points.
    pub log_rms: f64,
    pub points: usize,
}

impl ScalingFit {
    pub fn predict(&self, len: usize, failure: f64) -> f64 {
        self.prefactor * (len as f64).powf(self.exponent) * failure.ln().abs()
    }
}

/// Least-squares fit of `ln t - ln|ln P| = ln a + b ln N`.
pub fn fit_scaling(points: &[ScalingPoint]) -> Result<ScalingFit> {
    let mut lens: Vec<usize> = points.iter().map(|p| p.len).collect();
    lens.sort_unstable();
    lens.dedup();
    if lens.len() < 4 {
        return Err(Error::InsufficientData("need at least 4 distinct chain lengths"));
    }
    if points.iter().any(|p| !(p.failure > 0.0 && p.failure < 1.0) || !(p.time > 0.0) || p.len == 0) {
        return Err(Error::InsufficientData("points need 0 < P < 1, t > 0 and N > 0"));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.len as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.time.ln() - p.failure.ln().abs().ln()).collect();
    let n = points.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    Ok(ScalingFit { prefactor: intercept.exp(), exponent, log_rms: (rss / n).sqrt(), points: points.len() })
}

/// For every chain length and every probability in `failures`, the mean
/// time-to-reach over the achieved records that reached it.
pub fn scaling_points(records: &[SweepRecord], failures: &[f64]) -> Vec<ScalingPoint> {
    let mut lens: Vec<usize> = records.iter().map(|r| r.cell.len).collect();
    lens.sort_unstable();
    lens.dedup();
    let mut out = Vec::new();
    for len in lens {
        for &failure in failures {
            let times: Vec<f64> = records
                .iter()
                .filter(|r| r.cell.len == len && r.achieved)
                .filter_map(|r| r.time_to_reach(failure))
                .collect();
            if !times.is_empty() {
                out.push(ScalingPoint { len, failure, time: mean_std(&times).0 });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_synthetic_law() {
        let mut points = Vec::new();
        for len in [5, 8, 11, 14, 17, 20] {
            for failure in [0.5, 0.1, 0.03, 0.01] {
                let time = 0.33 * (len as f64).powf(1.6) * failure.ln().abs();
                points.push(ScalingPoint { len, failure, time });
            }
        }
        let fit = fit_scaling(&points).unwrap();
        assert!((fit.prefactor - 0.33).abs() < 1e-6);
        assert!((fit.exponent - 1.6).abs() < 1e-6);
        assert!(fit.log_rms < 1e-10);
        assert!((fit.predict(20, 0.01) - 0.33 * 20f64.powf(1.6) * 0.01f64.ln().abs()).abs() < 1e-6);
    }

    #[test]
    fn needs_four_lengths() {
        let points: Vec<ScalingPoint> =
            [5, 8, 11].iter().map(|&len| ScalingPoint { len, failure: 0.1, time: len as f64 }).collect();
        assert!(matches!(fit_scaling(&points), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn rejects_degenerate_probabilities() {
        let points: Vec<ScalingPoint> =
            [5, 8, 11, 14].iter().map(|&len| ScalingPoint { len, failure: 1.0, time: len as f64 }).collect();
        assert!(fit_scaling(&points).is_err());
    }
}
