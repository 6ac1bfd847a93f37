//! Error budgets `ε_m` and rate laws.
//!
//! Infinite sums are truncated at `|j| ≤ J_max` alias blocks; every report
//! carries a bound on what the truncation left out.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::approximant::{alpha, excess_product, k_prime, node_count, shell_tail, BoxIter};
use crate::error::{invalid, Error, Result};
use crate::sequences::{
    check_nondecreasing_type, check_nondecreasing_type_with, CoefficientSequence, Envelope, Family,
};

/// Radius of the finite hypothesis probes in [`predicted_rate`].
pub const PROBE_RADIUS: i64 = 64;

/// Largest `(2J+1)^d (2m+1)^d` enumerated by [`epsilon_p2_md_enumerated`].
pub const ENUMERATION_GUARD: u128 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EpsilonVariant {
    P2Univariate,
    GeneralP,
    P2Multivariate,
}

impl EpsilonVariant {
    pub fn label(&self) -> &'static str {
        match self {
            EpsilonVariant::P2Univariate => "p2_univariate",
            EpsilonVariant::GeneralP => "general_p",
            EpsilonVariant::P2Multivariate => "p2_multivariate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "p2_univariate" => Some(EpsilonVariant::P2Univariate),
            "general_p" => Some(EpsilonVariant::GeneralP),
            "p2_multivariate" => Some(EpsilonVariant::P2Multivariate),
            _ => None,
        }
    }
}

/// Named parts of `ε_m`; absent parts do not apply to the variant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EpsilonComponents {
    /// `sup_{|k| > m} |λ_k^{-1}|`.
    pub sup_term: Option<f64>,
    /// `sqrt(Σ_{j≠0} Γ_{m,j}²)`.
    pub gamma_term: Option<f64>,
    /// `Σ_{|k|>m} |Δλ_k^{-1}|`.
    pub delta_lambda_term: Option<f64>,
    /// `Σ_{|k|>m} |Δγ_k|`.
    pub delta_gamma_term: Option<f64>,
    /// `Σ_k |γ_{k(2m+1)+m}|`.
    pub alias_term: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonReport {
    pub value: f64,
    pub truncation_radius: i64,
    /// Upper bound minus `value`: how far the untruncated budget can exceed
    /// the reported one.
    pub tail_bound: f64,
    pub variant: EpsilonVariant,
    pub components: EpsilonComponents,
    pub tail_dominated: bool,
}

impl EpsilonReport {
    fn new(
        value: f64,
        upper: f64,
        j_max: i64,
        variant: EpsilonVariant,
        components: EpsilonComponents,
    ) -> Self {
        let tail_bound = if upper.is_finite() {
            (upper - value).max(0.0)
        } else {
            f64::INFINITY
        };
        EpsilonReport {
            value,
            truncation_radius: j_max,
            tail_bound,
            variant,
            components,
            tail_dominated: tail_bound.partial_cmp(&(0.01 * value)) != Some(Ordering::Less)
                && tail_bound > 0.0,
        }
    }
}

/// `γ_k = α_{k'} β_k^{-1}`, coordinatewise `k'` in several variables.
pub fn gamma_k(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    m: i64,
    k: &[i64],
) -> Complex64 {
    let kp: Vec<i64> = k.iter().map(|&x| k_prime(x, m)).collect();
    alpha(lambda, beta, &kp) * beta.inverse(k)
}

/// `10^3` alias blocks for exponential tails, `10^5` otherwise.
pub fn default_j_max(beta: &CoefficientSequence) -> i64 {
    let env = beta.factors().and_then(|f| f[0].inverse_envelope().ok());
    match env {
        Some(Envelope::Exponential { .. }) | Some(Envelope::Zero { .. }) => 1_000,
        _ => 100_000,
    }
}

fn check_pair(lambda: &CoefficientSequence, beta: &CoefficientSequence) -> Result<()> {
    if lambda.dim() != beta.dim() {
        return Err(Error::DimensionMismatch {
            expected: lambda.dim(),
            got: beta.dim(),
        });
    }
    Ok(())
}

fn check_j(j_max: i64) -> Result<()> {
    if j_max < 1 {
        return invalid(format!("J_max must be at least 1, got {j_max}"));
    }
    Ok(())
}

/// Per-axis alias block maxima `G(j) = max_{|t|≤m} |α_t β^{-1}_{t+jN}|`.
struct BlockMaxima {
    /// `G(0) = max_{|t| ≤ m} |λ_t^{-1}|`.
    center: f64,
    /// `Σ_{1 ≤ |j| ≤ J} G(j)²`.
    sum: f64,
    /// Bound on `Σ_{|j| > J} G(j)²`.
    tail: f64,
}

fn block_maxima(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    m: i64,
    j_max: i64,
) -> Result<BlockMaxima> {
    let n = 2 * m + 1;
    let a: Vec<f64> = (-m..=m).map(|t| alpha(lambda, beta, &[t]).norm()).collect();
    if a.iter().any(|x| !x.is_finite()) {
        return invalid("α is not finite on the band");
    }
    let a_max = a.iter().cloned().fold(0.0, f64::max);
    let center = (-m..=m)
        .map(|t| lambda.inverse_1d(t).norm())
        .fold(0.0, f64::max);
    let flat = a.iter().all(|&x| x == a[0]);
    // with constant |α| and a monotone tail the block maximum sits at the
    // frequency nearest the origin
    let monotone = flat && beta.inverse_monotone_from().is_some_and(|k0| k0 <= m + 1);
    let block = |j: i64| -> f64 {
        if monotone {
            let near = if j > 0 { j * n - m } else { j * n + m };
            return a[0] * beta.inverse_1d(near).norm();
        }
        let mut best = 0.0f64;
        for (i, t) in (-m..=m).enumerate() {
            best = best.max(a[i] * beta.inverse_1d(t + j * n).norm());
        }
        best
    };
    let symmetric = lambda.is_symmetric() && beta.is_symmetric();
    let mut sum = 0.0;
    // small terms first
    for j in (1..=j_max).rev() {
        let up = block(j).powi(2);
        sum += if symmetric {
            2.0 * up
        } else {
            up + block(-j).powi(2)
        };
    }
    let env = beta.inverse_envelope()?;
    let x0 = (j_max + 1) * n - m;
    let tail = if a_max == 0.0 || matches!(env, Envelope::Zero { from } if from <= x0) {
        0.0
    } else if x0 < env.from().max(1) {
        f64::INFINITY
    } else {
        2.0 * a_max * a_max * env.progression_sum(x0 as f64, n as f64, 2.0)
    };
    Ok(BlockMaxima { center, sum, tail })
}

/// `max{ sup_{|k|>m} |λ_k^{-1}|, sqrt(Σ_{j≠0} Γ_{m,j}²) }` in one variable.
pub fn epsilon_p2(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    m: i64,
    j_max: i64,
) -> Result<EpsilonReport> {
    check_pair(lambda, beta)?;
    if lambda.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: lambda.dim(),
        });
    }
    check_j(j_max)?;
    node_count(m, 1)?;
    let (sup, _) = lambda.sup_inverse_beyond(m)?;
    let blocks = block_maxima(lambda, beta, m, j_max)?;
    let gamma = blocks.sum.sqrt();
    let gamma_upper = (blocks.sum + blocks.tail).sqrt();
    Ok(EpsilonReport::new(
        sup.max(gamma),
        sup.max(gamma_upper),
        j_max,
        EpsilonVariant::P2Univariate,
        EpsilonComponents {
            sup_term: Some(sup),
            gamma_term: Some(gamma),
            ..Default::default()
        },
    ))
}

/// `max{ Σ_{|k|>m} |Δλ_k^{-1}|, Σ_{|k|>m} |Δγ_k| + Σ_k |γ_{kN+m}| }`, with
/// `Δθ_k = θ_k - θ_{k+1}` forward for `k > m` and reflected for `k < -m`.
pub fn epsilon_general_p(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    m: i64,
    j_max: i64,
) -> Result<EpsilonReport> {
    check_pair(lambda, beta)?;
    if lambda.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: lambda.dim(),
        });
    }
    check_j(j_max)?;
    node_count(m, 1)?;
    let n = 2 * m + 1;
    let delta_lambda =
        lambda.inverse_difference_tail(m, false)? + lambda.inverse_difference_tail(m, true)?;

    let a: Vec<Complex64> = (-m..=m).map(|t| alpha(lambda, beta, &[t])).collect();
    if a.iter().any(|x| !x.norm().is_finite()) {
        return invalid("α is not finite on the band");
    }
    let a_max = a.iter().map(|x| x.norm()).fold(0.0, f64::max);
    // total variation of α over one full cycle, wrap-around included
    let tv: f64 = (0..a.len())
        .map(|i| (a[i] - a[(i + 1) % a.len()]).norm())
        .sum();
    let symmetric = lambda.is_symmetric() && beta.is_symmetric();
    let last = j_max * n + m;

    let side = |sign: i64| -> Result<(f64, f64)> {
        let gamma = |k: i64| a[(k_prime(sign * k, m) + m) as usize] * beta.inverse_1d(sign * k);
        let monotone = beta.inverse_monotone_from().is_some_and(|k0| k0 <= m + 1);
        if tv == 0.0 && monotone {
            // constant α: the differences telescope
            let exact = a[0].norm() * beta.inverse_difference_tail(m, sign < 0)?;
            return Ok((exact, 0.0));
        }
        let mut s = 0.0;
        let mut prev = gamma(m + 1);
        for k in (m + 1)..=last {
            let next = gamma(k + 1);
            s += (prev - next).norm();
            prev = next;
        }
        let mut tail = a_max * beta.inverse_difference_tail(last, sign < 0)?;
        if tv > 0.0 {
            tail += tv * beta.progression_inverse_sum(sign * (last + 1), sign * n, 1.0)?;
        }
        Ok((s, tail))
    };
    let (up, up_tail) = side(1)?;
    let (down, down_tail) = if symmetric { (up, up_tail) } else { side(-1)? };
    let delta_gamma = up + down;

    let am = a[(2 * m) as usize].norm();
    let mut alias_sum = 0.0;
    for j in (1..=j_max).rev() {
        alias_sum += beta.inverse_1d(j * n + m).norm() + beta.inverse_1d(-j * n + m).norm();
    }
    alias_sum = am * (alias_sum + beta.inverse_1d(m).norm());
    let alias_tail = if am == 0.0 {
        0.0
    } else {
        am * (beta.progression_inverse_sum((j_max + 1) * n + m, n, 1.0)?
            + beta.progression_inverse_sum(-(j_max + 1) * n + m, -n, 1.0)?)
    };

    let second = delta_gamma + alias_sum;
    let second_upper = second + up_tail + down_tail + alias_tail;
    Ok(EpsilonReport::new(
        delta_lambda.max(second),
        delta_lambda.max(second_upper),
        j_max,
        EpsilonVariant::GeneralP,
        EpsilonComponents {
            delta_lambda_term: Some(delta_lambda),
            delta_gamma_term: Some(delta_gamma),
            alias_term: Some(alias_sum),
            ..Default::default()
        },
    ))
}

/// `sup_{|k|_∞ > m} |λ_k^{-1}|` for product or radial sequences.
pub fn sup_tail_md(lambda: &CoefficientSequence, m: i64) -> Result<f64> {
    if let Some(factors) = lambda.factors() {
        let mut beyond = Vec::with_capacity(factors.len());
        let mut all = Vec::with_capacity(factors.len());
        for f in &factors {
            let (b, _) = f.sup_inverse_beyond(m)?;
            let inside = (-m..=m).map(|t| f.inverse_1d(t).norm()).fold(0.0, f64::max);
            beyond.push(b);
            all.push(b.max(inside));
        }
        let mut best = 0.0f64;
        for (i, &b) in beyond.iter().enumerate() {
            let mut v = b;
            for (l, a) in all.iter().enumerate() {
                if l != i {
                    v *= a;
                }
            }
            best = best.max(v);
        }
        return Ok(best);
    }
    if let Family::Radial(_) = lambda.family() {
        // nonincreasing in |k|_2, and |k|_∞ > m forces |k|_2 ≥ m + 1
        let mut k = vec![0; lambda.dim()];
        k[0] = m + 1;
        return Ok(lambda.inverse(&k).norm());
    }
    Err(Error::Unsupported(format!(
        "sup tail of a {}-dimensional {} sequence",
        lambda.dim(),
        lambda.family_name()
    )))
}

/// Multivariate `p = 2` budget
/// `max{ sup_{|k|_∞>m} |λ_k^{-1}|, sqrt(Σ_{|j|_∞>0} Γ_{m,j}²) }`,
/// `Γ_{m,j} = max_{|k|_∞ ≤ m} |γ_{k+(2m+1)j}|`.
///
/// Product sequences factor `Γ` into per-axis maxima; others are enumerated
/// by [`epsilon_p2_md_enumerated`].
pub fn epsilon_p2_md(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    m: i64,
    j_max: i64,
) -> Result<EpsilonReport> {
    check_pair(lambda, beta)?;
    if lambda.dim() == 1 {
        return epsilon_p2(lambda, beta, m, j_max);
    }
    check_j(j_max)?;
    node_count(m, lambda.dim())?;
    let (lf, bf) = match (lambda.factors(), beta.factors()) {
        (Some(l), Some(b)) => (l, b),
        _ => return epsilon_p2_md_enumerated(lambda, beta, m, j_max),
    };
    let mut center = Vec::with_capacity(lf.len());
    let mut sum = Vec::with_capacity(lf.len());
    let mut with_tail = Vec::with_capacity(lf.len());
    for (l, b) in lf.iter().zip(&bf) {
        let g = block_maxima(l, b, m, j_max)?;
        center.push(g.center * g.center);
        sum.push(g.sum);
        with_tail.push(g.sum + g.tail);
    }
    let gamma_sq = excess_product(&center, &sum);
    let gamma_sq_upper = excess_product(&center, &with_tail);
    let sup = sup_tail_md(lambda, m)?;
    let gamma = gamma_sq.sqrt();
    Ok(EpsilonReport::new(
        sup.max(gamma),
        sup.max(gamma_sq_upper.sqrt()),
        j_max,
        EpsilonVariant::P2Multivariate,
        EpsilonComponents {
            sup_term: Some(sup),
            gamma_term: Some(gamma),
            ..Default::default()
        },
    ))
}

/// [`epsilon_p2_md`] by direct enumeration of every block `|j|_∞ ≤ J_max`
/// and every inner index. Needs an envelope for `β^{-1}` beyond the blocks.
pub fn epsilon_p2_md_enumerated(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    m: i64,
    j_max: i64,
) -> Result<EpsilonReport> {
    check_pair(lambda, beta)?;
    check_j(j_max)?;
    let dim = lambda.dim();
    node_count(m, dim)?;
    let n = 2 * m + 1;
    let work = ((2 * j_max + 1) as u128).pow(dim as u32) * (n as u128).pow(dim as u32);
    if work > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded {
            what: "alias block enumeration",
            size: work,
            limit: ENUMERATION_GUARD,
        });
    }
    let inner: Vec<(Vec<i64>, f64)> = BoxIter::new(dim, m)
        .map(|k| {
            let a = alpha(lambda, beta, &k).norm();
            (k, a)
        })
        .collect();
    let a_max = inner.iter().map(|(_, a)| *a).fold(0.0, f64::max);
    let mut sum = 0.0;
    let mut k = vec![0i64; dim];
    for j in BoxIter::new(dim, j_max) {
        if j.iter().all(|&x| x == 0) {
            continue;
        }
        let mut best = 0.0f64;
        for (kp, a) in &inner {
            for i in 0..dim {
                k[i] = kp[i] + j[i] * n;
            }
            best = best.max(a * beta.inverse(&k).norm());
        }
        sum += best * best;
    }
    // |k|_∞ ≥ t N - m ≥ t (m + 1) on the shell |j|_∞ = t
    let scaled = match envelope_md(beta)? {
        Envelope::Power {
            scale, exponent, ..
        } => Envelope::Power {
            scale: scale * ((m + 1) as f64).powf(-exponent),
            exponent,
            from: 1,
        },
        Envelope::Exponential { scale, rate, .. } => Envelope::Exponential {
            scale,
            rate: rate * (m + 1) as f64,
            from: 1,
        },
        Envelope::Zero { from } => Envelope::Zero { from },
    };
    let tail = match scaled {
        Envelope::Zero { from } if from <= (j_max + 1) * n - m => 0.0,
        Envelope::Zero { .. } => f64::INFINITY,
        env => a_max * a_max * shell_tail(&env, j_max, dim, 2.0),
    };
    let sup = sup_tail_md(lambda, m)?;
    let gamma = sum.sqrt();
    Ok(EpsilonReport::new(
        sup.max(gamma),
        sup.max((sum + tail).sqrt()),
        j_max,
        if dim == 1 {
            EpsilonVariant::P2Univariate
        } else {
            EpsilonVariant::P2Multivariate
        },
        EpsilonComponents {
            sup_term: Some(sup),
            gamma_term: Some(gamma),
            ..Default::default()
        },
    ))
}

/// Envelope of `|β_k^{-1}|` in `|k|_∞`, valid for every coordinate product
/// term (a product of factors each at most one off-axis is bounded by the
/// largest per-axis envelope times the other factors' suprema).
fn envelope_md(beta: &CoefficientSequence) -> Result<Envelope> {
    if let Family::Radial(g) = beta.family() {
        return Ok(g.inverse_envelope());
    }
    let factors = beta.factors().ok_or_else(|| {
        Error::Unsupported(format!("envelope of a {} sequence", beta.family_name()))
    })?;
    let mut sup_all = Vec::with_capacity(factors.len());
    let mut envs = Vec::with_capacity(factors.len());
    for f in &factors {
        let env = f.inverse_envelope()?;
        let (beyond, _) = f.sup_inverse_beyond(0)?;
        sup_all.push(beyond.max(f.inverse_1d(0).norm()));
        envs.push(env);
    }
    let others: f64 = sup_all.iter().product::<f64>();
    // pick the slowest envelope and scale by the other axes' suprema
    let mut worst = envs[0];
    let mut worst_i = 0;
    for (i, e) in envs.iter().enumerate() {
        if e.at(1e6) > worst.at(1e6) || matches!(worst, Envelope::Zero { .. }) {
            worst = *e;
            worst_i = i;
        }
    }
    let rest = if sup_all[worst_i] > 0.0 {
        others / sup_all[worst_i]
    } else {
        0.0
    };
    let from = envs.iter().map(|e| e.from()).max().unwrap_or(0);
    Ok(match worst {
        Envelope::Power {
            scale, exponent, ..
        } => Envelope::Power {
            scale: scale * rest,
            exponent,
            from,
        },
        Envelope::Exponential { scale, rate, .. } => Envelope::Exponential {
            scale: scale * rest,
            rate,
            from,
        },
        Envelope::Zero { .. } => Envelope::Zero { from },
    })
}

/// Decay law expected from the theory for a `(λ, β, p, d)` configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum RateLaw {
    /// `m^{-r}`.
    Power(f64),
    /// `e^{-s m}`.
    Exponential(f64),
    /// `sqrt(Σ_{k≠0} |λ_{mk}|^{-2})`.
    SeriesSqrt,
    /// `Σ_{k ≥ 1} |λ_{mk}|^{-1}`.
    SeriesSum,
    /// `sup_{|k|_∞ > m} |λ_k^{-1}|`.
    SupTail,
    NoTheoremApplies {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatePrediction {
    pub law: RateLaw,
    /// Hypotheses are checked by finite probes only.
    pub certification: &'static str,
    lambda: CoefficientSequence,
}

impl RatePrediction {
    pub fn applies(&self) -> bool {
        !matches!(self.law, RateLaw::NoTheoremApplies { .. })
    }

    pub fn label(&self) -> String {
        match &self.law {
            RateLaw::Power(r) => format!("power({r})"),
            RateLaw::Exponential(s) => format!("exponential({s})"),
            RateLaw::SeriesSqrt => "series-sqrt".into(),
            RateLaw::SeriesSum => "series-sum".into(),
            RateLaw::SupTail => "sup-tail".into(),
            RateLaw::NoTheoremApplies { .. } => "no-theorem-applies".into(),
        }
    }

    /// The law evaluated at `m`, up to its existential constant.
    pub fn value(&self, m: i64) -> Option<f64> {
        let mf = m as f64;
        match &self.law {
            RateLaw::Power(r) => Some(mf.powf(-r)),
            RateLaw::Exponential(s) => Some((-s * mf).exp()),
            RateLaw::SeriesSqrt => series(&self.lambda, m, 2.0).ok().map(f64::sqrt),
            RateLaw::SeriesSum => series(&self.lambda, m, 1.0).ok(),
            RateLaw::SupTail => sup_tail_md(&self.lambda, m).ok(),
            RateLaw::NoTheoremApplies { .. } => None,
        }
    }
}

/// `Σ_{k≠0} |λ_{mk}^{-1}|^q` (both signs for `q = 2`, positive `k` for `q = 1`).
fn series(lambda: &CoefficientSequence, m: i64, q: f64) -> Result<f64> {
    const TERMS: i64 = 10_000;
    let both = q == 2.0;
    let mut s = 0.0;
    for k in (1..=TERMS).rev() {
        s += lambda.inverse_1d(m * k).norm().powf(q);
        if both {
            s += lambda.inverse_1d(-m * k).norm().powf(q);
        }
    }
    let start = m * (TERMS + 1);
    let mut tail = lambda.progression_inverse_sum(start, m, q)?;
    if both {
        tail += lambda.progression_inverse_sum(-start, -m, q)?;
    }
    Ok(s + tail)
}

fn none(reason: impl Into<String>, lambda: &CoefficientSequence) -> RatePrediction {
    RatePrediction {
        law: RateLaw::NoTheoremApplies {
            reason: reason.into(),
        },
        certification: "probe-certified",
        lambda: lambda.clone(),
    }
}

/// Matches `(λ, β, p, d)` against the rate results and returns the law that
/// applies, or [`RateLaw::NoTheoremApplies`].
pub fn predicted_rate(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    p: f64,
    d: usize,
) -> RatePrediction {
    let found = |law: RateLaw| RatePrediction {
        law,
        certification: "probe-certified",
        lambda: lambda.clone(),
    };
    if lambda.dim() != d || beta.dim() != d {
        return none("dimension mismatch", lambda);
    }
    if !(p.is_finite() && p > 1.0) {
        return none("p outside (1, ∞)", lambda);
    }
    if d == 1 {
        match (lambda.family(), beta.family()) {
            (Family::Korobov { r }, Family::Korobov { r: rb })
                if *r > 0.5 && (rb == r || (p == 2.0 && *rb == 2.0 * r)) =>
            {
                return found(RateLaw::Power(*r));
            }
            (Family::Korobov { r }, _) if *r <= 0.5 && lambda == beta => {
                return none(format!("Korobov r = {r} needs r > 1/2"), lambda);
            }
            (Family::Exponential { s }, _) if lambda == beta => {
                return found(RateLaw::Exponential(*s))
            }
            (Family::MaskPower { r, .. }, _) if *r > 1.0 && lambda == beta => {
                return found(RateLaw::Power(*r))
            }
            (Family::MaskPower { r, .. }, Family::ExponentMask { .. }) if *r > 1.0 => {
                return found(RateLaw::Power(*r))
            }
            _ => {}
        }
        let nondecreasing = check_nondecreasing_type(lambda, PROBE_RADIUS)
            .map(|c| c.holds())
            .unwrap_or(false);
        if p == 2.0 {
            return if nondecreasing {
                found(RateLaw::SeriesSqrt)
            } else {
                none("|λ| fails the nondecreasing-type probe", lambda)
            };
        }
        if !(lambda.is_symmetric() && beta.is_symmetric()) {
            return none("general p needs symmetric sequences", lambda);
        }
        let monotone = (1..PROBE_RADIUS).all(|k| {
            let (a, b) = (lambda.value_1d(k), lambda.value_1d(k + 1));
            a.im == 0.0 && b.im == 0.0 && a.re > 0.0 && b.re >= a.re
        });
        let log_ratio = |k: i64| {
            (beta.value_1d(k).norm() / lambda.value_1d(k).norm()).ln() / 2f64.powi(k as i32)
        };
        let ratio_ok = (1..PROBE_RADIUS).all(|k| {
            let (a, b) = (log_ratio(k), log_ratio(k + 1));
            a.is_finite() && b.is_finite() && a > 0.0 && b >= a
        });
        return if monotone && ratio_ok {
            found(RateLaw::SeriesSum)
        } else {
            none("general-p hypotheses fail the monotonicity probes", lambda)
        };
    }
    if p != 2.0 {
        return none("multivariate rates are for p = 2 only", lambda);
    }
    if let (Family::Korobov { r }, Family::Korobov { r: rb }) = (lambda.family(), beta.family()) {
        return if *r > d as f64 / 2.0 && rb == r {
            found(RateLaw::SupTail)
        } else {
            none(
                format!("product Korobov needs r > d/2 = {}", d as f64 / 2.0),
                lambda,
            )
        };
    }
    // |β^{-1}| ≤ c |λ^{-1}|: the ratio on the outer half of the probe box
    // must not exceed its inner maximum
    let ratio = |k: &[i64]| beta.inverse(k).norm() / lambda.inverse(k).norm();
    let (mut inner, mut outer) = (0.0f64, 0.0f64);
    for k in BoxIter::new(d, PROBE_RADIUS) {
        let r = ratio(&k);
        if !r.is_finite() {
            return none("|β^{-1}| / |λ^{-1}| is not finite on the probe box", lambda);
        }
        if k.iter().all(|x| x.abs() <= PROBE_RADIUS / 2) {
            inner = inner.max(r);
        } else {
            outer = outer.max(r);
        }
    }
    if outer > inner * (1.0 + 1e-9) {
        return none("|β^{-1}| ≤ c|λ^{-1}| fails the probe", lambda);
    }
    let power = d as f64 / 2.0 + 0.01;
    let weighted = check_nondecreasing_type_with(d, PROBE_RADIUS / 4, |k| {
        let norm = k
            .iter()
            .map(|&x| (x * x) as f64)
            .sum::<f64>()
            .sqrt()
            .max(1.0);
        lambda.value(k).norm() / norm.powf(power)
    })
    .map(|c| c.holds())
    .unwrap_or(false);
    if weighted {
        found(RateLaw::SupTail)
    } else {
        none(
            "|λ_k| / |k|^r with r > d/2 fails the nondecreasing-type probe",
            lambda,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::CoefficientSequence as Seq;

    #[test]
    fn gamma_examples() {
        let k2 = Seq::korobov(2.0).unwrap();
        assert_eq!(gamma_k(&k2, &k2, 1, &[4]), Complex64::new(1.0 / 16.0, 0.0));
        for k in -3..=3 {
            assert_eq!(gamma_k(&k2, &k2, 3, &[k]), k2.inverse(&[k]));
        }
        let k1 = Seq::korobov(1.0).unwrap();
        assert!((gamma_k(&k1, &k2, 2, &[7]) - Complex64::new(2.0 / 49.0, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn korobov_p2_budget() {
        let k2 = Seq::korobov(2.0).unwrap();
        let e = epsilon_p2(&k2, &k2, 1, 10_000).unwrap();
        assert_eq!(e.components.sup_term, Some(0.25));
        // sqrt(2 Σ_{j≥1} (3j-1)^{-4}), high-precision value
        let gamma = 0.359_075_949_630_454_5;
        assert!((e.components.gamma_term.unwrap() - gamma).abs() < 1e-12);
        assert!((e.value - gamma).abs() < 1e-12);
        assert!(!e.tail_dominated);
        assert_eq!(e.variant, EpsilonVariant::P2Univariate);
    }

    #[test]
    fn block_maxima_match_enumeration() {
        // constant α takes the nearest-frequency shortcut, mixed α scans
        let k1 = Seq::korobov(1.0).unwrap();
        let k2 = Seq::korobov(2.0).unwrap();
        for lambda in [&k2, &k1] {
            let got = block_maxima(lambda, &k2, 3, 50).unwrap();
            let mut direct = 0.0;
            for j in 1..=50i64 {
                let (mut up, mut down) = (0.0f64, 0.0f64);
                for t in -3..=3 {
                    up = up.max(gamma_k(lambda, &k2, 3, &[t + 7 * j]).norm());
                    down = down.max(gamma_k(lambda, &k2, 3, &[t - 7 * j]).norm());
                }
                direct += up * up + down * down;
            }
            assert!((got.sum - direct).abs() < 1e-15 * direct.max(1.0));
        }
    }

    #[test]
    fn polynomial_generator_leaves_only_the_sup() {
        let k2 = Seq::korobov(2.0).unwrap();
        let beta = k2.clone().truncated(4).unwrap();
        let e = epsilon_p2(&k2, &beta, 4, 1000).unwrap();
        assert_eq!(e.components.gamma_term, Some(0.0));
        assert_eq!(e.value, 1.0 / 25.0);
        assert_eq!(e.tail_bound, 0.0);
    }

    #[test]
    fn exponential_sup_term() {
        let e = Seq::exponential(1.0).unwrap();
        let r = epsilon_p2(&e, &e, 3, 1000).unwrap();
        assert!((r.components.sup_term.unwrap() - (-4.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn general_p_telescoping() {
        let k1 = Seq::korobov(1.0).unwrap();
        let e = epsilon_general_p(&k1, &k1, 4, 1000).unwrap();
        assert!((e.components.delta_lambda_term.unwrap() - 0.4).abs() < 1e-12);
        // the alias series behaves like Σ 1/k and has no finite tail
        assert!(e.tail_dominated);
        let k2 = Seq::korobov(2.0).unwrap();
        for m in [2, 5, 9] {
            let e = epsilon_general_p(&k2, &k2, m, 1000).unwrap();
            let want = 2.0 / ((m + 1) * (m + 1)) as f64;
            assert!((e.components.delta_lambda_term.unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn general_p_delta_gamma_matches_enumeration() {
        let k2 = Seq::korobov(2.0).unwrap();
        let m = 3;
        let e = epsilon_general_p(&k2, &k2, m, 2000).unwrap();
        // λ = β: the differences telescope to β^{-1}_{m+1} per side
        assert!((e.components.delta_gamma_term.unwrap() - 2.0 / 16.0).abs() < 1e-15);
        // non-constant α goes through the enumeration path
        let k1 = Seq::korobov(1.0).unwrap();
        let mixed = epsilon_general_p(&k1, &k2, m, 200).unwrap();
        let mut direct = 0.0;
        for k in (m + 1)..=(200 * 7 + m) {
            direct += (gamma_k(&k1, &k2, m, &[k]) - gamma_k(&k1, &k2, m, &[k + 1])).norm();
        }
        assert!((mixed.components.delta_gamma_term.unwrap() / 2.0 - direct).abs() < 1e-12);
    }

    #[test]
    fn exponential_general_p_ratio() {
        let e = Seq::exponential(0.5).unwrap();
        for m in [10, 16, 24] {
            let a = epsilon_general_p(&e, &e, m, 1000).unwrap().value;
            let b = epsilon_general_p(&e, &e, m + 1, 1000).unwrap().value;
            assert!(
                (b / a / (-0.5f64).exp() - 1.0).abs() < 0.05,
                "m = {m}: {}",
                b / a
            );
        }
    }

    #[test]
    fn multivariate_reduces_and_matches_enumeration() {
        let k2 = Seq::korobov(2.0).unwrap();
        assert_eq!(
            epsilon_p2_md(&k2, &k2, 3, 500).unwrap(),
            epsilon_p2(&k2, &k2, 3, 500).unwrap()
        );
        let k2d = Seq::korobov_d(2.0, 2).unwrap();
        let prod = epsilon_p2_md(&k2d, &k2d, 1, 60).unwrap();
        let enumerated = epsilon_p2_md_enumerated(&k2d, &k2d, 1, 60).unwrap();
        assert!(
            (prod.components.gamma_term.unwrap() - enumerated.components.gamma_term.unwrap()).abs()
                < 1e-12
        );
        assert_eq!(prod.components.sup_term, Some(0.25));
        assert_eq!(prod.variant, EpsilonVariant::P2Multivariate);
        let poly = k2d.clone().truncated(2).unwrap();
        assert_eq!(
            epsilon_p2_md(&k2d, &poly, 2, 100)
                .unwrap()
                .components
                .gamma_term,
            Some(0.0)
        );
    }

    #[test]
    fn budgets_nonincreasing_in_m() {
        let families = [
            Seq::korobov(1.0).unwrap(),
            Seq::korobov(2.0).unwrap(),
            Seq::korobov(3.0).unwrap(),
            Seq::exponential(0.5).unwrap(),
            Seq::exponential(1.0).unwrap(),
        ];
        for f in &families {
            let mut prev = f64::INFINITY;
            for m in 2..=64 {
                let e = epsilon_p2(f, f, m, 2000).unwrap().value;
                assert!(e <= prev, "{} at m = {m}", f.family_name());
                prev = e;
            }
        }
    }

    #[test]
    fn rate_predictions() {
        let k2 = Seq::korobov(2.0).unwrap();
        assert_eq!(predicted_rate(&k2, &k2, 2.0, 1).law, RateLaw::Power(2.0));
        let e = Seq::exponential(0.5).unwrap();
        assert_eq!(
            predicted_rate(&e, &e, 3.0, 1).law,
            RateLaw::Exponential(0.5)
        );
        let k04 = Seq::korobov(0.4).unwrap();
        let p = predicted_rate(&k04, &k04, 2.0, 1);
        assert!(!p.applies() && p.value(4).is_none());
        let k2d = Seq::korobov_d(2.0, 2).unwrap();
        let p = predicted_rate(&k2d, &k2d, 2.0, 2);
        assert_eq!(p.law, RateLaw::SupTail);
        assert_eq!(p.value(4), Some(1.0 / 25.0));
        let k1d = Seq::korobov_d(1.0, 2).unwrap();
        assert!(!predicted_rate(&k1d, &k1d, 2.0, 2).applies());
        assert!(!predicted_rate(&k2d, &k2d, 3.0, 2).applies());
        assert_eq!(predicted_rate(&k2, &k2, 2.0, 1).value(4), Some(1.0 / 16.0));
    }
}
