//! Coefficient sequences `λ` (class) and `β` (generator).
//!
//! A sequence assigns a nonzero number `λ_k` to every frequency `k ∈ Z^d`; the
//! generator `φ_λ` has Fourier coefficients `λ_k^{-1}`. Most of the numerics
//! only ever touch the reciprocals, so [`CoefficientSequence::inverse`] is the
//! primary evaluation path and [`CoefficientSequence::eval`] is its reciprocal.
//!
//! Exponential-type families are parameterised by the decay of the generator
//! coefficients: `Exponential { s }` has `λ_k^{-1} = e^{-s|k|}`.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::lower_bound::GrowthFunction;

/// Ratio below which a witnessed nondecreasing-type constant counts as a
/// violation on a finite probe.
pub const NONDECREASING_FLOOR: f64 = 1e-3;

/// Scan length used for `sup_{|k|>m} |λ_k^{-1}|` when the tail is not known to
/// be monotone.
const SUP_SCAN: i64 = 10_000;

/// Bounded smooth profile `F` used by mask-type sequences.
#[derive(Clone, Debug, PartialEq)]
pub enum MaskProfile {
    /// `F ≡ 1`.
    ConstantOne,
    /// `F(t) = 1 / (1 + c·max(t, 0))`; decreasing, `|F| ≤ 1`, `|F'| ≤ c`.
    LogDamped { c: f64 },
    /// Piecewise-linear through `(t, F)` points, constant outside the table.
    Table { points: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaskSpec {
    pub profile: MaskProfile,
    /// Bound on `|F|` and `|F'|` for `t > 1`.
    pub bound_c: f64,
}

impl MaskSpec {
    pub fn constant_one() -> Self {
        MaskSpec {
            profile: MaskProfile::ConstantOne,
            bound_c: 1.0,
        }
    }

    pub fn log_damped(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return invalid(format!("log-damped mask needs c > 0, got {c}"));
        }
        Ok(MaskSpec {
            profile: MaskProfile::LogDamped { c },
            bound_c: c.max(1.0),
        })
    }

    /// Table profile. Abscissae must be strictly increasing and every value
    /// positive so the induced sequence never vanishes.
    pub fn table(points: Vec<(f64, f64)>, bound_c: f64) -> Result<Self> {
        if points.is_empty() {
            return invalid("mask table is empty");
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return invalid("mask table abscissae must be strictly increasing");
        }
        if points
            .iter()
            .any(|&(t, v)| !t.is_finite() || !(v.is_finite() && v > 0.0))
        {
            return invalid("mask table values must be finite and positive");
        }
        if !(bound_c.is_finite() && bound_c > 0.0) {
            return invalid("mask bound must be positive");
        }
        Ok(MaskSpec {
            profile: MaskProfile::Table { points },
            bound_c,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        match &self.profile {
            MaskProfile::ConstantOne => 1.0,
            MaskProfile::LogDamped { c } => 1.0 / (1.0 + c * t.max(0.0)),
            MaskProfile::Table { points } => {
                let (t0, v0) = points[0];
                if t <= t0 {
                    return v0;
                }
                for w in points.windows(2) {
                    let ((a, fa), (b, fb)) = (w[0], w[1]);
                    if t <= b {
                        return fa + (fb - fa) * (t - a) / (b - a);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match &self.profile {
            MaskProfile::ConstantOne => 0.0,
            MaskProfile::LogDamped { c } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -c / (1.0 + c * t).powi(2)
                }
            }
            MaskProfile::Table { points } => {
                for w in points.windows(2) {
                    let ((a, fa), (b, fb)) = (w[0], w[1]);
                    if t > a && t < b {
                        return (fb - fa) / (b - a);
                    }
                }
                0.0
            }
        }
    }

    /// Limit of `F(t)` as `t → -∞`; used for the `k = 0` entry.
    pub fn left_limit(&self) -> f64 {
        match &self.profile {
            MaskProfile::ConstantOne => 1.0,
            MaskProfile::LogDamped { .. } => 1.0,
            MaskProfile::Table { points } => points[0].1,
        }
    }

    /// Samples `|F|` and `|F'|` on `(1, t_max]` and checks both against
    /// `bound_c`. Only derivative orders 0 and 1 are checked.
    pub fn check_bounds(&self, t_max: f64, samples: usize) -> bool {
        let samples = samples.max(2);
        (1..=samples).all(|i| {
            let t = 1.0 + (t_max - 1.0) * i as f64 / samples as f64;
            self.value(t).abs() <= self.bound_c * (1.0 + 1e-12)
                && self.derivative(t).abs() <= self.bound_c * (1.0 + 1e-12)
        })
    }

    fn is_nonincreasing(&self) -> bool {
        match &self.profile {
            MaskProfile::ConstantOne | MaskProfile::LogDamped { .. } => true,
            MaskProfile::Table { points } => points.windows(2).all(|w| w[1].1 <= w[0].1),
        }
    }

    fn label(&self) -> String {
        match &self.profile {
            MaskProfile::ConstantOne => "one".into(),
            MaskProfile::LogDamped { c } => format!("logdamped{c}"),
            MaskProfile::Table { .. } => "table".into(),
        }
    }
}

/// `(1+|k|)^{-r} F(log|k|)`, with `F(log|0|)` read as the profile's left limit.
pub fn mask_sequence_value(spec: &MaskSpec, r: f64, k: i64) -> f64 {
    let base = (1.0 + k.unsigned_abs() as f64).powf(-r);
    if k == 0 {
        base * spec.left_limit()
    } else {
        base * spec.value((k.unsigned_abs() as f64).ln())
    }
}

/// Growth law for a custom table outside its explicit range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailRule {
    /// `λ_k = scale · |k|^exponent`.
    Power { scale: f64, exponent: f64 },
    /// `λ_k = scale · e^{rate |k|}`.
    Exponential { scale: f64, rate: f64 },
}

impl TailRule {
    fn value(&self, k: i64) -> f64 {
        let a = k.unsigned_abs() as f64;
        match *self {
            TailRule::Power { scale, exponent } => scale * a.powf(exponent),
            TailRule::Exponential { scale, rate } => scale * (rate * a).exp(),
        }
    }
}

/// Explicit table on `[-K, K]` plus an optional tail rule.
#[derive(Clone, Debug, PartialEq)]
pub struct CustomTable {
    values: Vec<Complex64>,
    radius: i64,
    tail: Option<TailRule>,
}

impl CustomTable {
    /// `values[i]` is `λ_{i-K}` with `K = (values.len() - 1) / 2`.
    pub fn new(values: Vec<Complex64>, tail: Option<TailRule>) -> Result<Self> {
        if values.len().is_multiple_of(2) {
            return invalid("custom table must cover a symmetric range [-K, K]");
        }
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()) || v.norm() == 0.0)
        {
            return invalid("custom table entries must be finite and nonzero");
        }
        if let Some(t) = tail {
            let ok = match t {
                TailRule::Power { scale, exponent } => {
                    scale != 0.0 && scale.is_finite() && exponent.is_finite()
                }
                TailRule::Exponential { scale, rate } => {
                    scale != 0.0 && scale.is_finite() && rate.is_finite()
                }
            };
            if !ok {
                return invalid("tail rule parameters must be finite with nonzero scale");
            }
        }
        let radius = (values.len() as i64 - 1) / 2;
        Ok(CustomTable {
            values,
            radius,
            tail,
        })
    }

    /// Symmetric real table from `λ_0, λ_1, ..., λ_K`.
    pub fn symmetric(half: &[f64], tail: Option<TailRule>) -> Result<Self> {
        if half.is_empty() {
            return invalid("custom table is empty");
        }
        let k = half.len() - 1;
        let values = (0..=2 * k)
            .map(|i| Complex64::new(half[(i as i64 - k as i64).unsigned_abs() as usize], 0.0))
            .collect();
        Self::new(values, tail)
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn tail(&self) -> Option<TailRule> {
        self.tail
    }

    fn value(&self, k: i64) -> Complex64 {
        if k.abs() <= self.radius {
            self.values[(k + self.radius) as usize]
        } else {
            match self.tail {
                Some(rule) => Complex64::new(rule.value(k), 0.0),
                // Without a tail rule the boundary value is held constant.
                None => self.values[if k > 0 { self.values.len() - 1 } else { 0 }],
            }
        }
    }

    fn is_symmetric(&self) -> bool {
        (1..=self.radius).all(|k| self.value(k) == self.value(-k))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `λ_k = |k|^r`, `λ_0 = 1`.
    Korobov {
        r: f64,
    },
    /// `λ_k^{-1} = e^{-s|k|}`.
    Exponential {
        s: f64,
    },
    /// `λ_k^{-1} = (1+|k|)^{-r} F(log|k|)`.
    MaskPower {
        r: f64,
        mask: MaskSpec,
    },
    /// `λ_k^{-1} = e^{-s|k|} F(|k|)` with `F` nonincreasing.
    ExponentMask {
        s: f64,
        envelope: MaskSpec,
    },
    /// `λ_k = v`.
    Constant {
        v: f64,
    },
    /// Coordinate product of one-dimensional factors.
    Product(Vec<CoefficientSequence>),
    Custom(CustomTable),
    /// Generator truncated to a trigonometric polynomial: `λ_k^{-1} = 0` for
    /// `|k|_∞ > degree` (and `λ_k = ∞` there).
    Truncated {
        inner: Box<CoefficientSequence>,
        degree: i64,
    },
    /// `λ_k = Ψ(|k|_2)`.
    Radial(GrowthFunction),
}

/// Immutable rule `k ↦ λ_k` on `Z^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSequence {
    family: Family,
    dim: usize,
}

/// Upper envelope for `|λ_k^{-1}|` valid for `|k| ≥ from`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Envelope {
    /// `scale · t^{-exponent}`.
    Power {
        scale: f64,
        exponent: f64,
        from: i64,
    },
    /// `scale · e^{-rate t}`.
    Exponential {
        scale: f64,
        rate: f64,
        from: i64,
    },
    Zero {
        from: i64,
    },
}

impl Envelope {
    pub fn from(&self) -> i64 {
        match *self {
            Envelope::Power { from, .. }
            | Envelope::Exponential { from, .. }
            | Envelope::Zero { from } => from,
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Envelope::Power {
                scale, exponent, ..
            } => scale * t.powf(-exponent),
            Envelope::Exponential { scale, rate, .. } => scale * (-rate * t).exp(),
            Envelope::Zero { .. } => 0.0,
        }
    }

    /// Bound on `Σ_{i ≥ 0} env(x0 + step·i)^q` for `x0 ≥ max(from, 1)`.
    pub fn progression_sum(&self, x0: f64, step: f64, q: f64) -> f64 {
        match *self {
            Envelope::Power {
                scale, exponent, ..
            } => {
                let e = q * exponent;
                if scale == 0.0 {
                    0.0
                } else if e <= 1.0 {
                    f64::INFINITY
                } else {
                    scale.powf(q) * (x0.powf(-e) + x0.powf(1.0 - e) / (step * (e - 1.0)))
                }
            }
            Envelope::Exponential { scale, rate, .. } => {
                if scale == 0.0 {
                    0.0
                } else if rate <= 0.0 {
                    f64::INFINITY
                } else {
                    scale.powf(q) * (-q * rate * x0).exp() / (1.0 - (-q * rate * step).exp())
                }
            }
            Envelope::Zero { .. } => 0.0,
        }
    }

    /// Bound on `Σ_{k > k0} env(k)^q` (one side).
    pub fn tail_sum(&self, k0: i64, q: f64) -> f64 {
        self.progression_sum((k0 + 1).max(1) as f64, 1.0, q)
    }
}

/// Outcome of a finite-range nondecreasing-type probe.
#[derive(Clone, Debug, PartialEq)]
pub enum NondecreasingCheck {
    /// `θ_k ≥ c θ_l` held on every probed pair with this constant.
    Holds { constant: f64 },
    /// First probed pair (in order of increasing `|k|`) with `θ_k / θ_l` below
    /// [`NONDECREASING_FLOOR`].
    Violated {
        k: Vec<i64>,
        l: Vec<i64>,
        ratio: f64,
    },
}

impl NondecreasingCheck {
    pub fn holds(&self) -> bool {
        matches!(self, NondecreasingCheck::Holds { .. })
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {x}"))
    }
}

impl CoefficientSequence {
    pub fn korobov(r: f64) -> Result<Self> {
        positive("r", r)?;
        Ok(Self::one_d(Family::Korobov { r }))
    }

    /// `d`-variate Korobov sequence: product of one-dimensional factors.
    pub fn korobov_d(r: f64, dim: usize) -> Result<Self> {
        positive("r", r)?;
        Self::with_dim(Family::Korobov { r }, dim)
    }

    pub fn exponential(s: f64) -> Result<Self> {
        positive("s", s)?;
        Ok(Self::one_d(Family::Exponential { s }))
    }

    pub fn exponential_d(s: f64, dim: usize) -> Result<Self> {
        positive("s", s)?;
        Self::with_dim(Family::Exponential { s }, dim)
    }

    pub fn constant(v: f64) -> Result<Self> {
        Self::constant_d(v, 1)
    }

    pub fn constant_d(v: f64, dim: usize) -> Result<Self> {
        if !(v.is_finite() && v != 0.0) {
            return invalid(format!("constant sequence needs a nonzero value, got {v}"));
        }
        Self::with_dim(Family::Constant { v }, dim)
    }

    pub fn mask_power(r: f64, mask: MaskSpec) -> Result<Self> {
        positive("r", r)?;
        Ok(Self::one_d(Family::MaskPower { r, mask }))
    }

    pub fn exponent_mask(s: f64, envelope: MaskSpec) -> Result<Self> {
        positive("s", s)?;
        if !envelope.is_nonincreasing() {
            return invalid("exponent-type envelope must be nonincreasing");
        }
        Ok(Self::one_d(Family::ExponentMask { s, envelope }))
    }

    pub fn custom(table: CustomTable) -> Self {
        Self::one_d(Family::Custom(table))
    }

    pub fn product(factors: Vec<CoefficientSequence>) -> Result<Self> {
        if factors.is_empty() {
            return invalid("product sequence needs at least one factor");
        }
        if let Some(f) = factors.iter().find(|f| f.dim != 1) {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: f.dim,
            });
        }
        let dim = factors.len();
        Ok(CoefficientSequence {
            family: Family::Product(factors),
            dim,
        })
    }

    pub fn radial(growth: GrowthFunction, dim: usize) -> Result<Self> {
        Self::with_dim(Family::Radial(growth), dim)
    }

    /// Same sequence with `λ_k^{-1}` zeroed outside the box `|k|_∞ ≤ degree`.
    pub fn truncated(self, degree: i64) -> Result<Self> {
        if degree < 0 {
            return invalid("truncation degree must be nonnegative");
        }
        let dim = self.dim;
        Ok(CoefficientSequence {
            family: Family::Truncated {
                inner: Box::new(self),
                degree,
            },
            dim,
        })
    }

    fn one_d(family: Family) -> Self {
        CoefficientSequence { family, dim: 1 }
    }

    fn with_dim(family: Family, dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        Ok(CoefficientSequence { family, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match &self.family {
            Family::Korobov { .. } => "korobov",
            Family::Exponential { .. } => "exponential",
            Family::MaskPower { .. } => "mask-power",
            Family::ExponentMask { .. } => "exponent-mask",
            Family::Constant { .. } => "constant",
            Family::Product(_) => "product",
            Family::Custom(_) => "custom",
            Family::Truncated { .. } => "truncated",
            Family::Radial(_) => "radial",
        }
    }

    /// Short parameter label for tables.
    pub fn param_label(&self) -> String {
        match &self.family {
            Family::Korobov { r } => format!("{r}"),
            Family::Exponential { s } => format!("{s}"),
            Family::MaskPower { r, mask } => format!("{r}/{}", mask.label()),
            Family::ExponentMask { s, envelope } => format!("{s}/{}", envelope.label()),
            Family::Constant { v } => format!("{v}"),
            Family::Product(f) => f
                .iter()
                .map(|s| format!("{}:{}", s.family_name(), s.param_label()))
                .collect::<Vec<_>>()
                .join(";"),
            Family::Custom(t) => format!("table{}", t.radius),
            Family::Truncated { inner, degree } => format!("{}@{degree}", inner.param_label()),
            Family::Radial(g) => g.label(),
        }
    }

    /// `λ_k`, checking the index dimension.
    pub fn eval(&self, k: &[i64]) -> Result<Complex64> {
        if k.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: k.len(),
            });
        }
        Ok(self.value(k))
    }

    /// `λ_k` without the dimension check. Truncated sequences return `∞`
    /// outside their degree.
    pub fn value(&self, k: &[i64]) -> Complex64 {
        debug_assert_eq!(k.len(), self.dim);
        let one = Complex64::new(1.0, 0.0);
        match &self.family {
            Family::Constant { v } => Complex64::new(*v, 0.0),
            Family::Product(factors) => factors
                .iter()
                .zip(k)
                .fold(one, |acc, (f, &ki)| acc * f.value_1d(ki)),
            Family::Truncated { inner, degree } => {
                if k.iter().any(|x| x.abs() > *degree) {
                    Complex64::new(f64::INFINITY, 0.0)
                } else {
                    inner.value(k)
                }
            }
            Family::Radial(g) => Complex64::new(g.eval(euclidean(k)), 0.0),
            _ if self.dim > 1 => k.iter().fold(one, |acc, &ki| acc * self.value_1d(ki)),
            _ => self.value_1d(k[0]),
        }
    }

    /// `λ_k^{-1}`: the `k`-th Fourier coefficient of the generator `φ_λ`.
    pub fn inverse(&self, k: &[i64]) -> Complex64 {
        debug_assert_eq!(k.len(), self.dim);
        let one = Complex64::new(1.0, 0.0);
        match &self.family {
            Family::Constant { v } => Complex64::new(1.0 / v, 0.0),
            Family::Product(factors) => factors
                .iter()
                .zip(k)
                .fold(one, |acc, (f, &ki)| acc * f.inverse_1d(ki)),
            Family::Truncated { inner, degree } => {
                if k.iter().any(|x| x.abs() > *degree) {
                    Complex64::new(0.0, 0.0)
                } else {
                    inner.inverse(k)
                }
            }
            Family::Radial(g) => Complex64::new(1.0 / g.eval(euclidean(k)), 0.0),
            _ if self.dim > 1 => k.iter().fold(one, |acc, &ki| acc * self.scalar_inverse(ki)),
            _ => self.scalar_inverse(k[0]),
        }
    }

    /// One-dimensional `λ_k^{-1}`; for `d > 1` built-in families this is the
    /// per-axis factor.
    pub fn inverse_1d(&self, k: i64) -> Complex64 {
        match &self.family {
            Family::Truncated { inner, degree } => {
                if k.abs() > *degree {
                    Complex64::new(0.0, 0.0)
                } else {
                    inner.inverse_1d(k)
                }
            }
            Family::Product(f) if f.len() == 1 => f[0].inverse_1d(k),
            Family::Radial(g) => Complex64::new(1.0 / g.eval(k.unsigned_abs() as f64), 0.0),
            _ => self.scalar_inverse(k),
        }
    }

    /// One-dimensional `λ_k`.
    pub fn value_1d(&self, k: i64) -> Complex64 {
        match &self.family {
            Family::Korobov { r } => Complex64::new(korobov_value(*r, k), 0.0),
            Family::Constant { v } => Complex64::new(*v, 0.0),
            Family::Custom(t) => t.value(k),
            Family::Truncated { inner, degree } => {
                if k.abs() > *degree {
                    Complex64::new(f64::INFINITY, 0.0)
                } else {
                    inner.value_1d(k)
                }
            }
            Family::Product(f) if f.len() == 1 => f[0].value_1d(k),
            Family::Radial(g) => Complex64::new(g.eval(k.unsigned_abs() as f64), 0.0),
            _ => {
                let inv = self.inverse_1d(k);
                if inv == Complex64::new(0.0, 0.0) {
                    Complex64::new(f64::INFINITY, 0.0)
                } else {
                    inv.inv()
                }
            }
        }
    }

    fn scalar_inverse(&self, k: i64) -> Complex64 {
        let a = k.unsigned_abs() as f64;
        let re = match &self.family {
            Family::Korobov { r } => {
                if k == 0 {
                    1.0
                } else {
                    a.powf(-r)
                }
            }
            Family::Exponential { s } => (-s * a).exp(),
            Family::MaskPower { r, mask } => mask_sequence_value(mask, *r, k),
            Family::ExponentMask { s, envelope } => (-s * a).exp() * envelope.value(a),
            Family::Constant { v } => 1.0 / v,
            Family::Custom(t) => return t.value(k).inv(),
            Family::Product(f) => return f[0].inverse_1d(k),
            Family::Truncated { .. } | Family::Radial(_) => return self.inverse_1d(k),
        };
        Complex64::new(re, 0.0)
    }

    /// `λ_k = λ_{-k}` for every `k`.
    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            Family::Custom(t) => t.is_symmetric(),
            Family::Product(f) => f.iter().all(|s| s.is_symmetric()),
            Family::Truncated { inner, .. } => inner.is_symmetric(),
            _ => true,
        }
    }

    /// One-dimensional factors when the sequence is a coordinate product.
    /// Every univariate sequence is its own single factor.
    pub fn factors(&self) -> Option<Vec<CoefficientSequence>> {
        if self.dim == 1 {
            return Some(vec![self.clone()]);
        }
        match &self.family {
            Family::Product(f) => Some(f.clone()),
            Family::Korobov { .. } | Family::Exponential { .. } => {
                Some(vec![Self::one_d(self.family.clone()); self.dim])
            }
            Family::Constant { v } => {
                let mut out = vec![Self::one_d(Family::Constant { v: 1.0 }); self.dim];
                out[0] = Self::one_d(Family::Constant { v: *v });
                Some(out)
            }
            Family::Truncated { inner, degree } => inner
                .factors()?
                .into_iter()
                .map(|f| f.truncated(*degree).ok())
                .collect(),
            _ => None,
        }
    }

    /// Envelope for `|λ_k^{-1}|` of a univariate sequence.
    pub fn inverse_envelope(&self) -> Result<Envelope> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dim,
            });
        }
        Ok(match &self.family {
            Family::Korobov { r } => Envelope::Power {
                scale: 1.0,
                exponent: *r,
                from: 1,
            },
            Family::Exponential { s } => Envelope::Exponential {
                scale: 1.0,
                rate: *s,
                from: 0,
            },
            Family::MaskPower { r, mask } => Envelope::Power {
                scale: mask.bound_c.max(mask.left_limit()),
                exponent: *r,
                from: 1,
            },
            Family::ExponentMask { s, envelope } => Envelope::Exponential {
                scale: envelope.value(0.0).max(envelope.left_limit()),
                rate: *s,
                from: 0,
            },
            Family::Constant { v } => Envelope::Power {
                scale: 1.0 / v.abs(),
                exponent: 0.0,
                from: 0,
            },
            Family::Custom(t) => {
                let from = t.radius + 1;
                match t.tail.ok_or(Error::MissingTail("truncation-tail bounds"))? {
                    TailRule::Power { scale, exponent } => Envelope::Power {
                        scale: 1.0 / scale.abs(),
                        exponent,
                        from,
                    },
                    TailRule::Exponential { scale, rate } => Envelope::Exponential {
                        scale: 1.0 / scale.abs(),
                        rate,
                        from,
                    },
                }
            }
            Family::Product(f) => return f[0].inverse_envelope(),
            Family::Truncated { degree, .. } => Envelope::Zero { from: degree + 1 },
            Family::Radial(g) => g.inverse_envelope(),
        })
    }

    /// Smallest `k0 ≥ 0` such that `|λ_k^{-1}|` is nonincreasing in `|k|` for
    /// `|k| ≥ k0`, when known from the family.
    pub fn inverse_monotone_from(&self) -> Option<i64> {
        match &self.family {
            Family::Korobov { .. }
            | Family::Exponential { .. }
            | Family::ExponentMask { .. }
            | Family::Constant { .. }
            | Family::Radial(_) => Some(0),
            Family::MaskPower { mask, .. } => match mask.profile {
                MaskProfile::ConstantOne | MaskProfile::LogDamped { .. } => Some(0),
                MaskProfile::Table { .. } => None,
            },
            Family::Custom(t) => match t.tail? {
                TailRule::Power { exponent, .. } if exponent >= 0.0 => Some(t.radius + 1),
                TailRule::Exponential { rate, .. } if rate >= 0.0 => Some(t.radius + 1),
                _ => None,
            },
            Family::Truncated { inner, .. } => inner.inverse_monotone_from(),
            Family::Product(f) if f.len() == 1 => f[0].inverse_monotone_from(),
            Family::Product(_) => None,
        }
    }

    /// `lim_{|k|→∞} |λ_k^{-1}|` for univariate sequences with a monotone tail.
    fn inverse_limit(&self) -> f64 {
        match &self.family {
            Family::Constant { v } => 1.0 / v.abs(),
            Family::Custom(t) => match t.tail {
                Some(TailRule::Power {
                    scale,
                    exponent: 0.0,
                }) => 1.0 / scale.abs(),
                Some(TailRule::Exponential { scale, rate: 0.0 }) => 1.0 / scale.abs(),
                _ => 0.0,
            },
            Family::Radial(g) => 1.0 / g.limit(),
            Family::Product(f) if f.len() == 1 => f[0].inverse_limit(),
            _ => 0.0,
        }
    }

    /// `sup_{|k| > m} |λ_k^{-1}|` for a univariate sequence. Returns the value
    /// and the envelope bound used beyond the scanned range (zero when the
    /// tail is known monotone and the value is exact).
    pub fn sup_inverse_beyond(&self, m: i64) -> Result<(f64, f64)> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dim,
            });
        }
        if let Some(k0) = self.inverse_monotone_from() {
            if k0 <= m + 1 {
                let v = self
                    .inverse_1d(m + 1)
                    .norm()
                    .max(self.inverse_1d(-m - 1).norm());
                return Ok((v, 0.0));
            }
        }
        let env = self.inverse_envelope()?;
        let end = (m + SUP_SCAN).max(env.from());
        let mut best = 0.0f64;
        for k in (m + 1)..=end {
            best = best
                .max(self.inverse_1d(k).norm())
                .max(self.inverse_1d(-k).norm());
        }
        let beyond = env.at((end + 1) as f64);
        Ok((best.max(beyond), beyond))
    }

    /// Bound on the one-sided difference tail `Σ_{k > k0} |λ_k^{-1} - λ_{k+1}^{-1}|`
    /// (forward differences; the reflected side uses `-k`).
    pub fn inverse_difference_tail(&self, k0: i64, negative_side: bool) -> Result<f64> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dim,
            });
        }
        let sign = if negative_side { -1 } else { 1 };
        let at = |k: i64| self.inverse_1d(sign * k);
        if let Family::Truncated { inner, degree } = &self.family {
            if k0 >= *degree {
                return Ok(0.0);
            }
            let mut s = 0.0;
            for k in (k0 + 1)..=*degree {
                s += (at(k) - at(k + 1)).norm();
            }
            let _ = inner;
            return Ok(s);
        }
        if let Some(from) = self.inverse_monotone_from() {
            let mut s = 0.0;
            let mut k = k0 + 1;
            while k < from {
                s += (at(k) - at(k + 1)).norm();
                k += 1;
            }
            return Ok(s + (at(k).norm() - self.inverse_limit()).max(0.0));
        }
        match &self.family {
            Family::MaskPower { r, mask } => {
                // |b'(t)| ≤ c (r + 2) (1 + t)^{-(r+1)} for t ≥ 1.
                let c = mask.bound_c.max(mask.left_limit()) * (r + 2.0);
                let x0 = (k0 + 2) as f64;
                Ok(c * (x0.powf(-(r + 1.0)) + x0.powf(-r) / r))
            }
            _ => Err(Error::Unsupported(format!(
                "difference tail for {} sequence",
                self.family_name()
            ))),
        }
    }
}

impl CoefficientSequence {
    /// Bound on `Σ_{i ≥ 0} |λ^{-1}_{start + i·step}|^q` for a univariate
    /// sequence, where the progression moves away from the origin. Terms below
    /// the envelope's validity radius are summed exactly.
    pub fn progression_inverse_sum(&self, start: i64, step: i64, q: f64) -> Result<f64> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dim,
            });
        }
        if step == 0 || (start != 0 && start.signum() != step.signum()) {
            return invalid("progression must move away from the origin");
        }
        let env = self.inverse_envelope()?;
        let mut k = start;
        let mut sum = 0.0;
        while k.abs() < env.from().max(1) {
            sum += self.inverse_1d(k).norm().powf(q);
            k += step;
        }
        Ok(sum + env.progression_sum(k.abs() as f64, step.abs() as f64, q))
    }

    /// Bound on `Σ_{|k| > k0} |λ_k^{-1}|^q` (both sides).
    pub fn inverse_tail_sum(&self, k0: i64, q: f64) -> Result<f64> {
        Ok(self.progression_inverse_sum(k0 + 1, 1, q)?
            + self.progression_inverse_sum(-k0 - 1, -1, q)?)
    }
}

fn euclidean(k: &[i64]) -> f64 {
    k.iter()
        .map(|&x| (x as f64) * (x as f64))
        .sum::<f64>()
        .sqrt()
}

fn korobov_value(r: f64, k: i64) -> f64 {
    if k == 0 {
        1.0
    } else {
        (k.unsigned_abs() as f64).powf(r)
    }
}

/// Finite probe of the nondecreasing-type property for `θ = |λ|`.
///
/// Univariate: `θ_k ≥ c θ_l` whenever `|k| > |l|`. Multivariate: whenever
/// `|k_j| ≥ |l_j|` for every coordinate. All pairs inside the box of radius
/// `probe_radius` are covered.
pub fn check_nondecreasing_type(
    seq: &CoefficientSequence,
    probe_radius: i64,
) -> Result<NondecreasingCheck> {
    check_nondecreasing_type_with(seq.dim(), probe_radius, |k| seq.value(k).norm())
}

/// Same probe for an arbitrary positive sequence `θ`.
pub fn check_nondecreasing_type_with<F>(
    dim: usize,
    probe_radius: i64,
    theta: F,
) -> Result<NondecreasingCheck>
where
    F: Fn(&[i64]) -> f64,
{
    if probe_radius < 2 {
        return invalid("probe radius must be at least 2");
    }
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    let side = (probe_radius + 1) as u128;
    if side.pow(dim as u32) > 50_000_000 {
        return Err(Error::GuardExceeded {
            what: "nondecreasing-type probe",
            size: side.pow(dim as u32),
            limit: 50_000_000,
        });
    }
    if dim == 1 {
        return Ok(check_univariate(probe_radius, |k| theta(&[k])));
    }
    Ok(check_multivariate(dim, probe_radius, theta))
}

fn check_univariate<F: Fn(i64) -> f64>(radius: i64, theta: F) -> NondecreasingCheck {
    let mut prev_max = theta(0);
    let mut prev_arg = 0i64;
    let mut c = f64::INFINITY;
    for a in 1..=radius {
        let mut level_max = (f64::NEG_INFINITY, 0);
        for k in [a, -a] {
            let t = theta(k);
            let ratio = t / prev_max;
            if ratio < NONDECREASING_FLOOR {
                return NondecreasingCheck::Violated {
                    k: vec![k],
                    l: vec![prev_arg],
                    ratio,
                };
            }
            c = c.min(ratio);
            if t > level_max.0 {
                level_max = (t, k);
            }
        }
        if level_max.0 > prev_max {
            prev_max = level_max.0;
            prev_arg = level_max.1;
        }
    }
    NondecreasingCheck::Holds { constant: c }
}

fn check_multivariate<F: Fn(&[i64]) -> f64>(
    dim: usize,
    radius: i64,
    theta: F,
) -> NondecreasingCheck {
    let side = (radius + 1) as usize;
    let total = side.pow(dim as u32);
    // Dominance-order prefix max over absolute coordinates.
    let mut best: Vec<(f64, Vec<i64>)> = Vec::with_capacity(total);
    let mut c = f64::INFINITY;
    let mut first_violation: Option<(f64, usize, Vec<i64>, Vec<i64>)> = None;
    let mut abs = vec![0i64; dim];
    for flat in 0..total {
        let mut rem = flat;
        for j in (0..dim).rev() {
            abs[j] = (rem % side) as i64;
            rem /= side;
        }
        let (mut tmin, mut kmin) = (f64::INFINITY, abs.clone());
        let (mut tmax, mut kmax) = (f64::NEG_INFINITY, abs.clone());
        let nz: Vec<usize> = (0..dim).filter(|&j| abs[j] != 0).collect();
        for mask in 0..(1usize << nz.len()) {
            let mut k = abs.clone();
            for (b, &j) in nz.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    k[j] = -k[j];
                }
            }
            let t = theta(&k);
            if t < tmin {
                tmin = t;
                kmin = k.clone();
            }
            if t > tmax {
                tmax = t;
                kmax = k;
            }
        }
        let mut m = (tmax, kmax);
        let mut stride = 1usize;
        for j in (0..dim).rev() {
            if abs[j] > 0 {
                let prev = &best[flat - stride];
                if prev.0 > m.0 {
                    m = prev.clone();
                }
            }
            stride *= side;
        }
        let ratio = tmin / m.0;
        c = c.min(ratio);
        if ratio < NONDECREASING_FLOOR {
            let level: usize = abs.iter().map(|&x| x as usize).max().unwrap_or(0);
            let better = match &first_violation {
                None => true,
                Some((_, lv, _, _)) => level < *lv,
            };
            if better {
                first_violation = Some((ratio, level, kmin.clone(), m.1.clone()));
            }
        }
        best.push(m);
    }
    match first_violation {
        Some((ratio, _, k, l)) => NondecreasingCheck::Violated { k, l, ratio },
        None => NondecreasingCheck::Holds { constant: c },
    }
}
