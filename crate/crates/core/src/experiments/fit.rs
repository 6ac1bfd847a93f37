//! Least-squares rate fits on log-transformed errors.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateModel {
    /// `error ≈ C m^{-ρ}`, fitted on `(ln m, ln error)`.
    Power,
    /// `error ≈ C e^{-σ m}`, fitted on `(m, ln error)`.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub model: RateModel,
    /// Slope of `ln error`: `-ρ` for the power model, `-σ` for the
    /// exponential one.
    pub exponent: f64,
    /// `ln C`.
    pub intercept: f64,
    pub r_squared: f64,
    /// Points dropped because their error is exactly zero.
    pub excluded: usize,
}

impl RateFit {
    /// `ρ` or `σ`.
    pub fn decay(&self) -> f64 {
        -self.exponent
    }
}

/// Ordinary least squares on `(m, error)` pairs. Exact zeros (exact
/// reproduction) are excluded and counted; negative or non-finite errors are
/// rejected. At least three points must remain.
pub fn fit_rate(points: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    let mut excluded = 0;
    for &(m, e) in points {
        if !(e.is_finite() && e >= 0.0) {
            return Err(Error::Model(format!(
                "error {e} at m = {m} is not a nonnegative number"
            )));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::Model(format!("m = {m} must be positive")));
        }
        if e == 0.0 {
            excluded += 1;
            continue;
        }
        xs.push(match model {
            RateModel::Power => m.ln(),
            RateModel::Exponential => m,
        });
        ys.push(e.ln());
    }
    if xs.len() < 3 {
        return Err(Error::Model(format!(
            "need at least 3 positive errors, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Model("all m values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        model,
        exponent: slope,
        intercept,
        r_squared,
        excluded,
    })
}
