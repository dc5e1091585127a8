use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares power law `y ≈ e^b x^a` through log-log points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `(ln x_i, ln y_i)`
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of `ln y` from the fitted line.
    pub residual: f64,
    /// Empirical bound constant `max y_i / b_i` for the bound `b_i` of
    /// the sweep (`x_i` itself unless set otherwise).
    #[serde(rename = "K_hat")]
    pub k_hat: f64,
    /// `min y_i / b_i`; `k_hat / k_min` measures how stable the constant is.
    pub k_min: f64,
}

impl RateFit {
    pub fn k_ratio(&self) -> f64 {
        self.k_hat / self.k_min
    }

    /// Recompute the bound constants against `bound[i]` for sample `i`.
    pub fn with_bound(mut self, bound: &[f64]) -> Result<Self> {
        if bound.len() != self.points.len() || bound.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::arg("bound must be positive, one value per sample"));
        }
        let ks: Vec<f64> = self.points.iter().zip(bound).map(|((_, ly), b)| ly.exp() / b).collect();
        self.k_hat = ks.iter().copied().fold(f64::MIN, f64::max);
        self.k_min = ks.iter().copied().fold(f64::MAX, f64::min);
        Ok(self)
    }

    /// Bound constants `y_i / b_i` for each sample, in sample order.
    pub fn constants(&self, bound: &[f64]) -> Vec<f64> {
        self.points.iter().zip(bound).map(|((_, ly), b)| ly.exp() / b).collect()
    }
}

/// Ordinary least squares of `ln y` against `ln x`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::arg(format!("rate fit needs at least 3 samples, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::arg(format!("rate fit needs finite positive samples, got {p:?}")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("rate fit needs at least two distinct abscissae"));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    let ks: Vec<f64> = points.iter().map(|(x, y)| y / x).collect();
    Ok(RateFit {
        points: logs,
        slope,
        intercept,
        residual,
        k_hat: ks.iter().copied().fold(f64::MIN, f64::max),
        k_min: ks.iter().copied().fold(f64::MAX, f64::min),
    })
}
