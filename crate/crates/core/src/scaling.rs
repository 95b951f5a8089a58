//! Classifies how a phase-space volume `W(N)` grows with system size.
//!
//! Two straight-line fits compete: `ln W` against `N` (exponential growth,
//! slope `c0`) and `ln W` against `ln N` (power law). The model whose residual
//! sum of squares is at least 20% below the other's wins; otherwise the
//! verdict is inconclusive. Exponential growth keeps Shannon entropy; power
//! law growth calls for learning `q`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::{Error, Result};

pub const MIN_POINTS: usize = 4;
/// A model wins when its residual is below `(1 − RELATIVE_MARGIN)` times the other's.
pub const RELATIVE_MARGIN: f64 = 0.2;
/// One-sided sign-test level for the super-exponential hint.
pub const CURVATURE_SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSeries<T> {
    points: Vec<(u64, T)>,
}

impl<T: Real> ScalingSeries<T> {
    /// Sorts by `n`. Rejects duplicate sizes, non-positive volumes and fewer
    /// than four points.
    pub fn new(mut points: Vec<(u64, T)>) -> Result<Self> {
        if let Some(&(n, w)) = points.iter().find(|(_, w)| !(*w > T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidSeries(format!("W({n}) = {w} must be positive and finite")));
        }
        points.sort_by_key(|&(n, _)| n);
        if let Some(pair) = points.windows(2).find(|p| p[0].0 == p[1].0) {
            return Err(Error::InvalidSeries(format!("size {} appears twice", pair[0].0)));
        }
        if points.len() < MIN_POINTS {
            return Err(Error::InsufficientPoints(points.len()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(u64, T)] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthModel {
    Exponential,
    PowerLaw,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recommendation {
    Shannon,
    GeneralizedQ,
    Inspect,
}

/// Least-squares line `y = slope·x + intercept` with its residual sum of squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingVerdict<T> {
    pub model: GrowthModel,
    /// `slope` is the growth rate `c0` of `W ~ e^{c0 N}`.
    pub exponential_fit: LineFit<T>,
    /// `slope` is the exponent of `W ~ N^a`.
    pub powerlaw_fit: LineFit<T>,
    pub recommendation: Recommendation,
    /// Exponential residuals curve upwards in `N` more often than chance allows.
    pub super_exponential_hint: bool,
}

fn line_fit<T: Real>(xs: &[T], ys: &[T]) -> (LineFit<T>, Vec<T>) {
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: T = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<T> = xs.iter().zip(ys).map(|(&x, &y)| y - (slope * x + intercept)).collect();
    let residual = residuals.iter().map(|&r| r * r).sum();
    (
        LineFit {
            slope,
            intercept,
            residual,
        },
        residuals,
    )
}

/// `P(X ≥ k)` for `X ~ Binomial(n, 1/2)`.
fn sign_test_upper_tail(k: usize, n: usize) -> f64 {
    let mut coeff = 1.0_f64;
    let mut tail = 0.0;
    for i in 0..=n {
        if i >= k {
            tail += coeff;
        }
        coeff = coeff * (n - i) as f64 / (i + 1) as f64;
    }
    tail / 2f64.powi(n as i32)
}

pub fn fit_scaling<T: Real>(series: &ScalingSeries<T>) -> ScalingVerdict<T> {
    let ns: Vec<T> = series.points.iter().map(|&(n, _)| T::from_u64(n).unwrap_or_else(T::infinity)).collect();
    let log_n: Vec<T> = ns.iter().map(|n| n.ln()).collect();
    let log_w: Vec<T> = series.points.iter().map(|&(_, w)| w.ln()).collect();

    let (exponential_fit, exp_residuals) = line_fit(&ns, &log_w);
    let (powerlaw_fit, _) = line_fit(&log_n, &log_w);

    let mean = log_w.iter().copied().sum::<T>() / T::from_usize_lossy(log_w.len());
    let spread: T = log_w.iter().map(|&y| (y - mean) * (y - mean)).sum();
    let keep = T::one() - T::lit(RELATIVE_MARGIN);
    let model = if spread <= T::rounding_slack() * mean.abs().max(T::one()) {
        // No growth at all: not e^{O(N)}, and a zero exponent fits exactly.
        GrowthModel::PowerLaw
    } else if exponential_fit.residual <= keep * powerlaw_fit.residual {
        GrowthModel::Exponential
    } else if powerlaw_fit.residual <= keep * exponential_fit.residual {
        GrowthModel::PowerLaw
    } else {
        GrowthModel::Inconclusive
    };
    let recommendation = match model {
        GrowthModel::Exponential => Recommendation::Shannon,
        GrowthModel::PowerLaw => Recommendation::GeneralizedQ,
        GrowthModel::Inconclusive => Recommendation::Inspect,
    };

    // Residuals at rounding level carry no curvature information.
    let noise = T::rounding_slack() * log_w.iter().fold(T::one(), |m, y| m.max(y.abs()));
    let second: Vec<T> = exp_residuals
        .windows(3)
        .map(|w| w[2] - w[1] - w[1] + w[0])
        .filter(|v| v.abs() > noise * T::lit(4.0))
        .collect();
    let positive = second.iter().filter(|v| **v > T::zero()).count();
    let super_exponential_hint =
        !second.is_empty() && sign_test_upper_tail(positive, second.len()) < CURVATURE_SIGNIFICANCE;

    ScalingVerdict {
        model,
        exponential_fit,
        powerlaw_fit,
        recommendation,
        super_exponential_hint,
    }
}

/// Plain-text summary with the suggested next step.
pub fn recommend<T: Real>(verdict: &ScalingVerdict<T>) -> String {
    let e = &verdict.exponential_fit;
    let p = &verdict.powerlaw_fit;
    let mut out = String::new();
    let _ = writeln!(out, "exponential fit: ln W = {} * N + {} (rss {:e})", e.slope, e.intercept, e.residual);
    let _ = writeln!(out, "power-law fit:   ln W = {} * ln N + {} (rss {:e})", p.slope, p.intercept, p.residual);
    match verdict.model {
        GrowthModel::Exponential => {
            let _ = writeln!(out, "verdict: exponential growth, W(N) ~ e^({} N)", e.slope);
            let _ = writeln!(
                out,
                "recommendation: stick with Shannon entropy; subsystems stay effectively independent. \
                 Solve the classical MaxEnt problem (`maxent`)."
            );
        }
        GrowthModel::PowerLaw => {
            let _ = writeln!(out, "verdict: power-law growth, W(N) ~ N^{}", p.slope);
            let _ = writeln!(
                out,
                "recommendation: phase space grows sub-exponentially; adopt the generalized entropy and \
                 learn the data-driven value of q by maximum likelihood (`fit`)."
            );
        }
        GrowthModel::Inconclusive => {
            let _ = writeln!(out, "verdict: inconclusive, neither model is clearly better");
            let _ = writeln!(
                out,
                "recommendation: inspect the series manually (more sizes, wider range) before choosing an entropy."
            );
        }
    }
    if verdict.super_exponential_hint {
        let _ = writeln!(
            out,
            "note: exponential residuals curve upwards; growth may be super-exponential."
        );
    }
    out
}
