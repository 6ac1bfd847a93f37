//! The translate operator
//!
//! `Q_m f = Σ_l c_l φ_β(· - δ_m l)`, `δ_m = 2π/(2m+1)`,
//! `c_l = (2m+1)^{-d} V_m(g)(δ_m l)`, `V_m(g) = H_m * g`,
//!
//! where `H_m` has coefficients `α_k = β_k/λ_k` on `|k|_∞ ≤ m`. Its Fourier
//! image is `λ_k^{-1} ĝ(k)` inside the box and `γ_k ĝ(k')` outside, with
//! `γ_k = α_{k'} β_k^{-1}` and `k'` the residue of `k` modulo `2m+1` in
//! `[-m, m]^d`.
//!
//! The functions in this module are univariate; the shared implementation is
//! dimension-generic and also backs [`crate::approximant_md`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{invalid, Error, Result};
use crate::fft::{flat_index, transform_nd};
use crate::sequences::{CoefficientSequence, Envelope};
use crate::spectral::{FrequencyIndex, SpectralFunction, DEFAULT_OVERSAMPLE};

/// Largest node count `(2m+1)^d` accepted by the operator.
pub const MAX_NODES: u128 = 10_000_000;

/// Largest box `(2K+1)^d` materialised for spectral images and kernels.
pub const MAX_BOX: u128 = 10_000_000;

/// Largest default Parseval truncation per axis.
pub const MAX_DEFAULT_K_OUT: i64 = 1 << 22;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `f = φ_λ * g` with class norm `‖g‖_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassElement {
    lambda: CoefficientSequence,
    g: SpectralFunction,
    p: f64,
}

impl ClassElement {
    pub fn new(lambda: CoefficientSequence, g: SpectralFunction, p: f64) -> Result<Self> {
        if lambda.dim() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: lambda.dim(),
                got: g.dim(),
            });
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::Unsupported(format!("p must lie in (1, ∞), got {p}")));
        }
        Ok(ClassElement { lambda, g, p })
    }

    pub fn lambda(&self) -> &CoefficientSequence {
        &self.lambda
    }

    pub fn g(&self) -> &SpectralFunction {
        &self.g
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// `f̂(k) = λ_k^{-1} ĝ(k)`.
    pub fn f_hat(&self, k: &[i64]) -> Complex64 {
        self.lambda.inverse(k) * self.g.coefficient(k)
    }

    /// Coefficients of `f` on the support of `g`.
    pub fn f(&self) -> SpectralFunction {
        let mut f = SpectralFunction::zero(self.dim()).expect("dim ≥ 1");
        for (k, c) in self.g.iter() {
            f.add_at(k.clone(), self.lambda.inverse(k.as_slice()) * c);
        }
        f.prune_zeros();
        f
    }

    /// `‖f‖_{Φ_{λ,p}} = ‖g‖_p`.
    pub fn class_norm(&self, oversample: usize) -> Result<f64> {
        self.g.lp_norm(self.p, oversample)
    }

    /// Same element rescaled to class norm one.
    pub fn normalized(&self, oversample: usize) -> Result<Self> {
        let norm = self.class_norm(oversample)?;
        if norm == 0.0 {
            return invalid("cannot normalise the zero element");
        }
        Ok(ClassElement {
            lambda: self.lambda.clone(),
            g: self.g.scaled(Complex64::new(1.0 / norm, 0.0)),
            p: self.p,
        })
    }
}

/// Weights and nodes of `Q_m f`.
#[derive(Clone, Debug, PartialEq)]
pub struct TranslateApproximant {
    beta: CoefficientSequence,
    m: i64,
    dim: usize,
    delta: f64,
    weights: Vec<Complex64>,
    k_gen: i64,
    generator_tail: f64,
}

impl TranslateApproximant {
    pub fn beta(&self) -> &CoefficientSequence {
        &self.beta
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `c_l` in lexicographic order of `l ∈ {0..2m}^d`.
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn k_gen(&self) -> i64 {
        self.k_gen
    }

    /// Bound on `Σ |β_k^{-1}|` over frequencies dropped from the generator.
    pub fn generator_tail(&self) -> f64 {
        self.generator_tail
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    /// Replaces the weights, keeping nodes and generator.
    pub fn with_weights(&self, weights: Vec<Complex64>) -> Result<Self> {
        if weights.len() != self.weights.len() {
            return invalid(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                weights.len()
            ));
        }
        Ok(TranslateApproximant {
            weights,
            ..self.clone()
        })
    }

    /// Single translate at the origin node with unit weight.
    pub fn unit_at_origin(beta: CoefficientSequence, m: i64, k_gen: i64) -> Result<Self> {
        let n = node_count(m, beta.dim())?;
        let mut weights = vec![ZERO; n];
        weights[0] = Complex64::new(1.0, 0.0);
        let generator_tail = generator_tail_bound(&beta, k_gen)?;
        Ok(TranslateApproximant {
            dim: beta.dim(),
            beta,
            m,
            delta: 2.0 * PI / (2 * m + 1) as f64,
            weights,
            k_gen,
            generator_tail,
        })
    }
}

/// Exact Fourier coefficients of `Q_m f` on `|k|_∞ ≤ k_out`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralImage {
    pub function: SpectralFunction,
    pub k_out: i64,
    /// `ℓ²` bound on the coefficients beyond `k_out`.
    pub tail_bound: f64,
}

/// How `‖f - Q_m f‖` is computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErrorMethod {
    /// Grid quadrature of the coefficient difference on `|k|_∞ ≤ k_out`.
    Quadrature {
        oversample: usize,
        k_out: Option<i64>,
    },
    /// Exact series over aliased coefficients, `p = 2` only.
    ParsevalOracle { k_out: Option<i64> },
}

impl ErrorMethod {
    pub fn quadrature() -> Self {
        ErrorMethod::Quadrature {
            oversample: DEFAULT_OVERSAMPLE,
            k_out: None,
        }
    }

    pub fn parseval() -> Self {
        ErrorMethod::ParsevalOracle { k_out: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub value: f64,
    /// Bound on the contribution of frequencies beyond `k_out`.
    pub tail_bound: f64,
    pub k_out: i64,
}

/// `((k + m) mod (2m+1)) - m`.
pub fn k_prime(k: i64, m: i64) -> i64 {
    (k + m).rem_euclid(2 * m + 1) - m
}

pub(crate) fn node_count(m: i64, dim: usize) -> Result<usize> {
    if m < 1 {
        return invalid(format!("m must be at least 1, got {m}"));
    }
    let n = ((2 * m + 1) as u128).pow(dim as u32);
    if n > MAX_NODES {
        return Err(Error::GuardExceeded {
            what: "translate nodes",
            size: n,
            limit: MAX_NODES,
        });
    }
    Ok(n as usize)
}

fn box_guard(radius: i64, dim: usize) -> Result<()> {
    let n = ((2 * radius + 1) as u128).pow(dim as u32);
    if n > MAX_BOX {
        return Err(Error::GuardExceeded {
            what: "frequency box",
            size: n,
            limit: MAX_BOX,
        });
    }
    Ok(())
}

/// Lexicographic enumeration of `[-r, r]^d`.
pub(crate) struct BoxIter {
    radius: i64,
    next: Option<Vec<i64>>,
}

impl BoxIter {
    pub(crate) fn new(dim: usize, radius: i64) -> Self {
        BoxIter {
            radius,
            next: (radius >= 0).then(|| vec![-radius; dim]),
        }
    }
}

impl Iterator for BoxIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let cur = self.next.take()?;
        let mut k = cur.clone();
        let mut axis = k.len();
        while axis > 0 {
            axis -= 1;
            if k[axis] < self.radius {
                k[axis] += 1;
                self.next = Some(k);
                return Some(cur);
            }
            k[axis] = -self.radius;
        }
        Some(cur)
    }
}

fn check_sequences(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    dim: usize,
) -> Result<()> {
    for s in [lambda, beta] {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.dim(),
            });
        }
    }
    Ok(())
}

fn require_univariate(dim: usize) -> Result<()> {
    if dim != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: dim,
        });
    }
    Ok(())
}

/// `α_k = β_k / λ_k`.
pub(crate) fn alpha(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    k: &[i64],
) -> Complex64 {
    let (b, l) = (beta.value(k), lambda.value(k));
    if b.norm().is_finite() && l.norm().is_finite() {
        b / l
    } else {
        lambda.inverse(k) / beta.inverse(k)
    }
}

/// Residue index of `k` on the `N`-point grid.
fn residue_slot(k: &[i64], n: usize, buf: &mut Vec<usize>) -> usize {
    buf.clear();
    buf.extend(k.iter().map(|&x| x.rem_euclid(n as i64) as usize));
    flat_index(buf, n)
}

pub(crate) fn build_hm_impl(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    m: i64,
    dim: usize,
) -> Result<SpectralFunction> {
    check_sequences(lambda, beta, dim)?;
    node_count(m, dim)?;
    let mut h = SpectralFunction::zero(dim)?;
    for k in BoxIter::new(dim, m) {
        let a = alpha(lambda, beta, &k);
        if !(a.re.is_finite() && a.im.is_finite()) {
            return invalid(format!(
                "α is not finite at {k:?}; the generator must not vanish on the band"
            ));
        }
        h.insert(FrequencyIndex::from(k), a)?;
    }
    Ok(h)
}

pub(crate) fn vm_samples_impl(
    g: &SpectralFunction,
    hm: &SpectralFunction,
    m: i64,
) -> Result<Vec<Complex64>> {
    if g.dim() != hm.dim() {
        return Err(Error::DimensionMismatch {
            expected: hm.dim(),
            got: g.dim(),
        });
    }
    let dim = g.dim();
    let total = node_count(m, dim)?;
    let n = (2 * m + 1) as usize;
    let mut buf = vec![ZERO; total];
    let mut slot = Vec::with_capacity(dim);
    for (k, c) in g.iter() {
        if k.norm_inf() > m {
            continue;
        }
        let a = hm.coefficient(k.as_slice());
        buf[residue_slot(k.as_slice(), n, &mut slot)] += a * c;
    }
    transform_nd(&mut buf, n, dim, FftDirection::Inverse);
    Ok(buf)
}

pub(crate) fn assemble_impl(
    elem: &ClassElement,
    beta: &CoefficientSequence,
    m: i64,
    k_gen: i64,
) -> Result<TranslateApproximant> {
    let dim = elem.dim();
    check_sequences(elem.lambda(), beta, dim)?;
    if k_gen < m {
        return invalid(format!(
            "generator truncation {k_gen} must cover the band m = {m}"
        ));
    }
    let hm = build_hm_impl(elem.lambda(), beta, m, dim)?;
    let samples = vm_samples_impl(elem.g(), &hm, m)?;
    let scale = 1.0 / samples.len() as f64;
    Ok(TranslateApproximant {
        beta: beta.clone(),
        m,
        dim,
        delta: 2.0 * PI / (2 * m + 1) as f64,
        weights: samples.into_iter().map(|v| v * scale).collect(),
        k_gen,
        generator_tail: generator_tail_bound(beta, k_gen)?,
    })
}

/// `Σ_{nonempty A} Π_{i∈A} tail_i Π_{i∉A} head_i`, i.e. `Π(head+tail) - Π head`
/// without cancellation.
pub(crate) fn excess_product(head: &[f64], tail: &[f64]) -> f64 {
    let d = head.len();
    let mut total = 0.0;
    for mask in 1u32..(1 << d) {
        let mut term = 1.0;
        for i in 0..d {
            term *= if mask & (1 << i) != 0 {
                tail[i]
            } else {
                head[i]
            };
        }
        total += term;
    }
    total
}

/// Bound on `Σ_{|k|_∞ > k0} env(|k|_∞)^q` over `Z^d`.
pub(crate) fn shell_tail(env: &Envelope, k0: i64, dim: usize, q: f64) -> f64 {
    if k0 + 1 < env.from() {
        return f64::INFINITY;
    }
    let d = dim as f64;
    // shell |k|_∞ = t holds at most 2d (2t+1)^{d-1} ≤ 2d 3^{d-1} t^{d-1} points
    let count = 2.0 * d * 3f64.powf(d - 1.0);
    match *env {
        Envelope::Zero { .. } => 0.0,
        Envelope::Power {
            scale, exponent, ..
        } => {
            let reduced = Envelope::Power {
                scale: 1.0,
                exponent: q * exponent - (d - 1.0),
                from: 1,
            };
            count * scale.abs().powf(q) * reduced.tail_sum(k0, 1.0)
        }
        Envelope::Exponential { scale, rate, .. } => {
            if rate <= 0.0 {
                return f64::INFINITY;
            }
            let mut sum = 0.0;
            let mut t = (k0 + 1).max(1) as f64;
            let peak = (d - 1.0) / (q * rate);
            for _ in 0..10_000_000 {
                let term = t.powf(d - 1.0) * (-q * rate * t).exp();
                sum += term;
                if t > peak && term <= 1e-20 * sum {
                    break;
                }
                t += 1.0;
            }
            count * scale.abs().powf(q) * sum
        }
    }
}

/// Bound on `Σ |β_k^{-1}|` over `|k|_∞ > k_gen`.
pub fn generator_tail_bound(beta: &CoefficientSequence, k_gen: i64) -> Result<f64> {
    if k_gen < 0 {
        return invalid("generator truncation must be nonnegative");
    }
    match beta.factors() {
        Some(factors) => {
            let mut head = Vec::with_capacity(factors.len());
            let mut tail = Vec::with_capacity(factors.len());
            for f in &factors {
                head.push(
                    (-k_gen..=k_gen)
                        .map(|k| f.inverse_1d(k).norm())
                        .sum::<f64>(),
                );
                tail.push(f.inverse_tail_sum(k_gen, 1.0)?);
            }
            Ok(excess_product(&head, &tail))
        }
        None => Ok(shell_tail(
            &nonproduct_envelope(beta)?,
            k_gen,
            beta.dim(),
            1.0,
        )),
    }
}

/// Envelope of `|β_k^{-1}|` in terms of `|k|_∞` for non-product sequences.
fn nonproduct_envelope(beta: &CoefficientSequence) -> Result<Envelope> {
    match beta.family() {
        crate::sequences::Family::Radial(g) => Ok(g.inverse_envelope()),
        _ => Err(Error::Unsupported(format!(
            "tail bounds for a {}-dimensional {} sequence",
            beta.dim(),
            beta.family_name()
        ))),
    }
}

/// Per-axis alias sums for a product generator at one `(m, K_out)`.
#[derive(Clone, Debug)]
struct AxisAlias {
    /// `|β^{-1}(t)|²` for `t ∈ [-m, m]`.
    own: Vec<f64>,
    /// `Σ_{j≠0, |t+jN| ≤ K} |β^{-1}(t+jN)|²`.
    alias: Vec<f64>,
    /// Bound on `Σ_{|t+jN| > K} |β^{-1}(t+jN)|²`.
    beyond: Vec<f64>,
}

impl AxisAlias {
    fn new(beta: &CoefficientSequence, m: i64, k_out: i64) -> Result<Self> {
        let n = 2 * m + 1;
        let width = n as usize;
        let mut own = Vec::with_capacity(width);
        let mut alias = Vec::with_capacity(width);
        let mut beyond = Vec::with_capacity(width);
        for t in -m..=m {
            own.push(beta.inverse_1d(t).norm_sqr());
            // largest alias first so the small terms are added first
            let j_hi = (k_out - t).div_euclid(n);
            let j_lo = -((k_out + t).div_euclid(n));
            let mut s = 0.0;
            for j in (1..=j_hi).rev() {
                s += beta.inverse_1d(t + j * n).norm_sqr();
            }
            for j in j_lo..=-1 {
                s += beta.inverse_1d(t + j * n).norm_sqr();
            }
            alias.push(s);
            let up = beta.progression_inverse_sum(t + (j_hi + 1) * n, n, 2.0)?;
            let down = beta.progression_inverse_sum(t + (j_lo - 1) * n, -n, 2.0)?;
            beyond.push(up + down);
        }
        Ok(AxisAlias { own, alias, beyond })
    }
}

/// Precomputed alias energies for the exact `L_2` error of `Q_m` at a fixed
/// `(λ, β, m, K_out)`. Reusable across many `g`.
#[derive(Clone, Debug)]
pub struct ParsevalPlan {
    lambda: CoefficientSequence,
    beta: CoefficientSequence,
    m: i64,
    k_out: i64,
    dim: usize,
    /// `α` on the box `|k|_∞ ≤ m`, lexicographic.
    alpha: Vec<Complex64>,
    /// `A(k') = Σ_{j≠0, |k'+jN|_∞ ≤ K} |β^{-1}_{k'+jN}|²` per box point.
    alias: Vec<f64>,
    /// Matching tail bounds beyond `K_out`.
    beyond: Vec<f64>,
}

impl ParsevalPlan {
    pub fn new(
        lambda: &CoefficientSequence,
        beta: &CoefficientSequence,
        m: i64,
        k_out: i64,
    ) -> Result<Self> {
        let dim = lambda.dim();
        check_sequences(lambda, beta, dim)?;
        let total = node_count(m, dim)?;
        if k_out < m {
            return invalid(format!("K_out = {k_out} must be at least m = {m}"));
        }
        let alpha_box: Vec<Complex64> = BoxIter::new(dim, m)
            .map(|k| alpha(lambda, beta, &k))
            .collect();
        let (alias, beyond) = match beta.factors() {
            Some(factors) => {
                let axes: Vec<AxisAlias> = factors
                    .iter()
                    .map(|f| AxisAlias::new(f, m, k_out))
                    .collect::<Result<_>>()?;
                let mut alias = Vec::with_capacity(total);
                let mut beyond = Vec::with_capacity(total);
                let mut own = vec![0.0; dim];
                let mut al = vec![0.0; dim];
                let mut tot = vec![0.0; dim];
                let mut bey = vec![0.0; dim];
                for k in BoxIter::new(dim, m) {
                    for i in 0..dim {
                        let t = (k[i] + m) as usize;
                        own[i] = axes[i].own[t];
                        al[i] = axes[i].alias[t];
                        tot[i] = own[i] + al[i];
                        bey[i] = axes[i].beyond[t];
                    }
                    alias.push(excess_product(&own, &al));
                    beyond.push(excess_product(&tot, &bey));
                }
                (alias, beyond)
            }
            None => {
                box_guard(k_out, dim)?;
                let n = 2 * m + 1;
                let env = nonproduct_envelope(beta)?;
                let shell = shell_tail(&env, k_out, dim, 2.0);
                let mut alias = Vec::with_capacity(total);
                for kp in BoxIter::new(dim, m) {
                    let j_max = (k_out + m) / n + 1;
                    let mut s = 0.0;
                    for j in BoxIter::new(dim, j_max) {
                        if j.iter().all(|&x| x == 0) {
                            continue;
                        }
                        let k: Vec<i64> = kp.iter().zip(&j).map(|(a, b)| a + b * n).collect();
                        if k.iter().all(|x| x.abs() <= k_out) {
                            s += beta.inverse(&k).norm_sqr();
                        }
                    }
                    alias.push(s);
                }
                (alias, vec![shell; total])
            }
        };
        Ok(ParsevalPlan {
            lambda: lambda.clone(),
            beta: beta.clone(),
            m,
            k_out,
            dim,
            alpha: alpha_box,
            alias,
            beyond,
        })
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn k_out(&self) -> i64 {
        self.k_out
    }

    fn box_index(&self, k: &[i64]) -> usize {
        let side = 2 * self.m + 1;
        k.iter().fold(0i64, |acc, &x| acc * side + x + self.m) as usize
    }

    /// `‖f - Q_m f‖_2` truncated at `|k|_∞ ≤ K_out`, with a bound on the rest.
    pub fn error(&self, elem: &ClassElement) -> Result<ErrorEstimate> {
        if elem.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: elem.dim(),
            });
        }
        if elem.lambda() != &self.lambda {
            return invalid("class sequence differs from the plan");
        }
        let m = self.m;
        let g = elem.g();
        // aliased energy of every in-band coefficient
        let mut whole = 0.0;
        let mut tail = 0.0;
        for (k, c) in g.iter() {
            if k.norm_inf() > m {
                continue;
            }
            let idx = self.box_index(k.as_slice());
            let w = (self.alpha[idx] * c).norm_sqr();
            whole += w * self.alias[idx];
            tail += w * self.beyond[idx];
        }
        // band m < |k|_∞ ≤ K_g, where f itself may be nonzero; K_out only
        // truncates the alias image, never f
        let reach = g.bandwidth();
        let mut direct = 0.0;
        let mut partial = 0.0;
        if reach > m {
            box_guard(reach, self.dim)?;
            let mut kp = vec![0i64; self.dim];
            for k in BoxIter::new(self.dim, reach) {
                if k.iter().all(|x| x.abs() <= m) {
                    continue;
                }
                for (dst, &x) in kp.iter_mut().zip(&k) {
                    *dst = k_prime(x, m);
                }
                let gp = g.coefficient(&kp);
                let q = if gp == ZERO {
                    ZERO
                } else {
                    self.alpha[self.box_index(&kp)] * gp * self.beta.inverse(&k)
                };
                let f = elem.f_hat(&k);
                direct += (q - f).norm_sqr();
                if k.iter().all(|x| x.abs() <= self.k_out) {
                    partial += q.norm_sqr();
                }
            }
        }
        let value = (direct + (whole - partial).max(0.0)).sqrt();
        Ok(ErrorEstimate {
            value,
            tail_bound: tail.sqrt(),
            k_out: self.k_out,
        })
    }
}

pub(crate) fn spectral_image_impl(
    elem: &ClassElement,
    beta: &CoefficientSequence,
    m: i64,
    k_out: i64,
) -> Result<SpectralImage> {
    let dim = elem.dim();
    check_sequences(elem.lambda(), beta, dim)?;
    node_count(m, dim)?;
    if k_out < m {
        return invalid(format!("K_out = {k_out} must be at least m = {m}"));
    }
    box_guard(k_out, dim)?;
    let n = 2 * m + 1;
    let lambda = elem.lambda();
    let mut out = SpectralFunction::zero(dim)?;
    let mut weights = Vec::new();
    for (kp, c) in elem.g().iter() {
        if kp.norm_inf() > m {
            continue;
        }
        let kp = kp.as_slice();
        let a = alpha(lambda, beta, kp) * c;
        weights.push((kp.to_vec(), a.norm_sqr()));
        // per-axis alias lists k_i = k'_i + j N with |k_i| ≤ K_out
        let lists: Vec<Vec<i64>> = kp
            .iter()
            .map(|&t| {
                let lo = -((k_out + t).div_euclid(n));
                let hi = (k_out - t).div_euclid(n);
                (lo..=hi).map(|j| t + j * n).collect()
            })
            .collect();
        let mut pos = vec![0usize; dim];
        let mut k = vec![0i64; dim];
        'outer: loop {
            for i in 0..dim {
                k[i] = lists[i][pos[i]];
            }
            let coeff = if k == kp {
                lambda.inverse(kp) * c
            } else {
                beta.inverse(&k) * a
            };
            out.add_at(FrequencyIndex::new(&k), coeff);
            let mut axis = dim;
            loop {
                if axis == 0 {
                    break 'outer;
                }
                axis -= 1;
                pos[axis] += 1;
                if pos[axis] < lists[axis].len() {
                    break;
                }
                pos[axis] = 0;
            }
        }
    }
    out.prune_zeros();
    let tail_bound = match beta.factors() {
        Some(factors) => {
            let axes: Vec<AxisAlias> = factors
                .iter()
                .map(|f| AxisAlias::new(f, m, k_out))
                .collect::<Result<_>>()?;
            let mut tot = vec![0.0; dim];
            let mut bey = vec![0.0; dim];
            let mut sum = 0.0;
            for (kp, w) in &weights {
                for i in 0..dim {
                    let t = (kp[i] + m) as usize;
                    tot[i] = axes[i].own[t] + axes[i].alias[t];
                    bey[i] = axes[i].beyond[t];
                }
                sum += w * excess_product(&tot, &bey);
            }
            sum.sqrt()
        }
        None => {
            let shell = shell_tail(&nonproduct_envelope(beta)?, k_out, dim, 2.0);
            (weights.iter().map(|(_, w)| w).sum::<f64>() * shell).sqrt()
        }
    };
    Ok(SpectralImage {
        function: out,
        k_out,
        tail_bound,
    })
}

pub(crate) fn approximation_error_impl(
    elem: &ClassElement,
    beta: &CoefficientSequence,
    m: i64,
    method: ErrorMethod,
) -> Result<ErrorEstimate> {
    match method {
        ErrorMethod::ParsevalOracle { k_out } => {
            if elem.p() != 2.0 {
                return Err(Error::Unsupported(
                    "the Parseval oracle applies to p = 2 only".into(),
                ));
            }
            let k_out = match k_out {
                Some(k) => k,
                None => default_k_out(beta, m)?,
            };
            ParsevalPlan::new(elem.lambda(), beta, m, k_out)?.error(elem)
        }
        ErrorMethod::Quadrature { oversample, k_out } => {
            let k_out = k_out.unwrap_or_else(|| default_k_out_quadrature(m, elem.dim()));
            let image = spectral_image_impl(elem, beta, m, k_out)?;
            let mut diff = image.function;
            for (k, c) in elem.g().iter() {
                diff.add_at(k.clone(), -(elem.lambda().inverse(k.as_slice()) * c));
            }
            diff.prune_zeros();
            Ok(ErrorEstimate {
                value: diff.lp_norm_quadrature(elem.p(), oversample)?,
                tail_bound: image.tail_bound,
                k_out,
            })
        }
    }
}

/// Default generator truncation: `max(50m, 1000)` for power tails, and the
/// smallest radius with `Σ_{|k| > K} |β_k^{-1}| < 1e-10` for exponential ones.
pub fn default_k_gen(beta: &CoefficientSequence, m: i64) -> Result<i64> {
    let factor = match beta.factors() {
        Some(f) => f[0].clone(),
        None => return Ok((50 * m).max(1000)),
    };
    Ok(match factor.inverse_envelope()? {
        Envelope::Zero { from } => (from - 1).max(m),
        Envelope::Exponential { .. } => {
            let mut k = m;
            while generator_tail_bound(beta, k)? >= 1e-10 && k < MAX_DEFAULT_K_OUT {
                k += (k / 4).max(1);
            }
            k
        }
        Envelope::Power { .. } => (50 * m).max(1000),
    })
}

/// Default Parseval truncation: the smallest power-of-two multiple of `m`
/// whose per-residue `ℓ²` alias tail is below `1e-12` relative to the leading
/// alias coefficient, capped at [`MAX_DEFAULT_K_OUT`].
pub fn default_k_out(beta: &CoefficientSequence, m: i64) -> Result<i64> {
    if m < 1 {
        return invalid("m must be at least 1");
    }
    let n = 2 * m + 1;
    let env = match beta.factors() {
        Some(f) => {
            let mut worst = f[0].inverse_envelope()?;
            for g in &f[1..] {
                let e = g.inverse_envelope()?;
                if e.at(1e6) > worst.at(1e6) {
                    worst = e;
                }
            }
            worst
        }
        None => nonproduct_envelope(beta)?,
    };
    if let Envelope::Zero { from } = env {
        return Ok((from - 1).max(m));
    }
    let lead = env.at((m + 1) as f64).powi(2);
    let mut k = 4 * m;
    while k < MAX_DEFAULT_K_OUT {
        let x0 = ((k + 1 - m).max(env.from())).max(1) as f64;
        if 2.0 * env.progression_sum(x0, n as f64, 2.0) <= 1e-24 * lead {
            break;
        }
        k *= 2;
    }
    Ok(k.min(MAX_DEFAULT_K_OUT).max(env.from()))
}

/// Default quadrature truncation: `32m` in one variable, `4m` per axis above.
pub fn default_k_out_quadrature(m: i64, dim: usize) -> i64 {
    if dim == 1 {
        32 * m
    } else {
        4 * m
    }
}

/// Truncated generator `Σ_{|k|_∞ ≤ k_max} β_k^{-1} e^{i(k,x)}`.
pub fn generator_polynomial(beta: &CoefficientSequence, k_max: i64) -> Result<SpectralFunction> {
    box_guard(k_max, beta.dim())?;
    let mut f = SpectralFunction::zero(beta.dim())?;
    for k in BoxIter::new(beta.dim(), k_max) {
        let c = beta.inverse(&k);
        f.insert(FrequencyIndex::from(k), c)?;
    }
    Ok(f)
}

/// Kernel section `K(·, x) = φ_β(· - x)` truncated to `|k|_∞ ≤ k_max`:
/// coefficients `β_k^{-1} e^{-i(k,x)}`.
pub fn kernel_section(
    beta: &CoefficientSequence,
    x: &[f64],
    k_max: i64,
) -> Result<SpectralFunction> {
    if x.len() != beta.dim() {
        return Err(Error::DimensionMismatch {
            expected: beta.dim(),
            got: x.len(),
        });
    }
    box_guard(k_max, beta.dim())?;
    let mut f = SpectralFunction::zero(beta.dim())?;
    for k in BoxIter::new(beta.dim(), k_max) {
        let phase: f64 = k.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
        let c = beta.inverse(&k) * Complex64::from_polar(1.0, -phase);
        f.insert(FrequencyIndex::from(k), c)?;
    }
    Ok(f)
}

/// `(f₁, f₂)_{Φ_{λ,2}} = Σ |λ_k|² f̂₁(k) conj(f̂₂(k))`.
pub fn class_inner_product(
    lambda: &CoefficientSequence,
    f1: &SpectralFunction,
    f2: &SpectralFunction,
) -> Result<Complex64> {
    for f in [f1, f2] {
        if f.dim() != lambda.dim() {
            return Err(Error::DimensionMismatch {
                expected: lambda.dim(),
                got: f.dim(),
            });
        }
    }
    Ok(f1
        .iter()
        .map(|(k, a)| {
            let b = f2.coefficient(k.as_slice());
            lambda.value(k.as_slice()).norm_sqr() * a * b.conj()
        })
        .sum())
}

/// `Σ_{|k| ≤ K} b_k e^{iky}` with the phase re-anchored every 32 steps.
pub(crate) fn synth_1d(coeffs: &[Complex64], y: f64) -> Complex64 {
    let k_max = (coeffs.len() as i64 - 1) / 2;
    let mut sum = coeffs[k_max as usize];
    let step = Complex64::from_polar(1.0, y);
    let mut up = Complex64::new(1.0, 0.0);
    for k in 1..=k_max {
        up = if k % 32 == 0 {
            Complex64::from_polar(1.0, k as f64 * y)
        } else {
            up * step
        };
        sum += coeffs[(k_max + k) as usize] * up + coeffs[(k_max - k) as usize] * up.conj();
    }
    sum
}

// ---------------------------------------------------------------------------
// univariate API

pub fn build_hm(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    m: i64,
) -> Result<SpectralFunction> {
    require_univariate(lambda.dim())?;
    build_hm_impl(lambda, beta, m, 1)
}

/// `V_m(g)(δ_m l)` for `l = 0..2m`.
pub fn vm_samples(g: &SpectralFunction, hm: &SpectralFunction, m: i64) -> Result<Vec<Complex64>> {
    require_univariate(g.dim())?;
    vm_samples_impl(g, hm, m)
}

pub fn assemble_qm(
    elem: &ClassElement,
    beta: &CoefficientSequence,
    m: i64,
    k_gen: i64,
) -> Result<TranslateApproximant> {
    require_univariate(elem.dim())?;
    assemble_impl(elem, beta, m, k_gen)
}

pub fn spectral_image(
    elem: &ClassElement,
    beta: &CoefficientSequence,
    m: i64,
    k_out: i64,
) -> Result<SpectralImage> {
    require_univariate(elem.dim())?;
    spectral_image_impl(elem, beta, m, k_out)
}

/// `Σ_l c_l φ_β^{(K_gen)}(x - δ_m l)` by direct summation in physical space.
pub fn evaluate_approximant(a: &TranslateApproximant, xs: &[f64]) -> Result<Vec<Complex64>> {
    require_univariate(a.dim)?;
    let gen: Vec<Complex64> = (-a.k_gen..=a.k_gen).map(|k| a.beta.inverse_1d(k)).collect();
    Ok(xs
        .iter()
        .map(|&x| {
            a.weights
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != ZERO)
                .map(|(l, c)| c * synth_1d(&gen, x - a.delta * l as f64))
                .sum()
        })
        .collect())
}

pub fn approximation_error(
    elem: &ClassElement,
    beta: &CoefficientSequence,
    m: i64,
    method: ErrorMethod,
) -> Result<ErrorEstimate> {
    require_univariate(elem.dim())?;
    approximation_error_impl(elem, beta, m, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::CoefficientSequence as Seq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_g(rng: &mut ChaCha8Rng, k: i64) -> SpectralFunction {
        SpectralFunction::univariate((-k..=k).map(|j| {
            (
                j,
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        }))
    }

    #[test]
    fn k_prime_examples() {
        assert_eq!(k_prime(5, 2), 0);
        assert_eq!(k_prime(7, 2), 2);
        assert_eq!(k_prime(-4, 1), -1);
        for m in 1..6 {
            for k in -40..40 {
                let kp = k_prime(k, m);
                assert!(kp.abs() <= m && (k - kp) % (2 * m + 1) == 0);
            }
        }
    }

    #[test]
    fn hm_examples() {
        let k2 = Seq::korobov(2.0).unwrap();
        let h = build_hm(&k2, &k2, 3).unwrap();
        assert_eq!(h.len(), 7);
        assert!(h.iter().all(|(_, a)| *a == c(1.0, 0.0)));
        let k1 = Seq::korobov(1.0).unwrap();
        let h = build_hm(&k1, &k2, 2).unwrap();
        assert_eq!(h.coefficient(&[0]), c(1.0, 0.0));
        assert_eq!(h.coefficient(&[-1]), c(1.0, 0.0));
        assert_eq!(h.coefficient(&[2]), c(2.0, 0.0));
        assert_eq!(h.coefficient(&[-2]), c(2.0, 0.0));
        let e = Seq::exponential(1.0).unwrap();
        let h = build_hm(&e, &e, 5).unwrap();
        assert!(h.iter().all(|(_, a)| *a == c(1.0, 0.0)) && h.len() == 11);
    }

    #[test]
    fn vm_examples() {
        let k2 = Seq::korobov(2.0).unwrap();
        let one = SpectralFunction::univariate([(0, c(1.0, 0.0))]);
        let h = build_hm(&k2, &k2, 3).unwrap();
        for v in vm_samples(&one, &h, 3).unwrap() {
            assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        }
        let e = SpectralFunction::univariate([(1, c(1.0, 0.0))]);
        let delta = 2.0 * PI / 7.0;
        for (l, v) in vm_samples(&e, &h, 3).unwrap().into_iter().enumerate() {
            assert!((v - Complex64::from_polar(1.0, delta * l as f64)).norm() < 1e-14);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_g(&mut rng, 20);
        let k1 = Seq::korobov(1.0).unwrap();
        let h = build_hm(&k1, &k2, 4).unwrap();
        let fast = vm_samples(&g, &h, 4).unwrap();
        let direct = h.convolve(&g).unwrap();
        let delta = 2.0 * PI / 9.0;
        for (l, v) in fast.iter().enumerate() {
            let want = direct.evaluate(&[delta * l as f64]);
            assert!((v - want).norm() <= 1e-11 * want.norm().max(1.0));
        }
    }

    #[test]
    fn assemble_examples() {
        let k2 = Seq::korobov(2.0).unwrap();
        let one = ClassElement::new(
            k2.clone(),
            SpectralFunction::univariate([(0, c(1.0, 0.0))]),
            2.0,
        )
        .unwrap();
        let a = assemble_qm(&one, &k2, 1, 10).unwrap();
        for w in a.weights() {
            assert!((w - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        }
        let e = ClassElement::new(
            k2.clone(),
            SpectralFunction::univariate([(1, c(1.0, 0.0))]),
            2.0,
        )
        .unwrap();
        let a = assemble_qm(&e, &k2, 2, 10).unwrap();
        let delta = 2.0 * PI / 5.0;
        for (l, w) in a.weights().iter().enumerate() {
            assert!((w - Complex64::from_polar(0.2, delta * l as f64)).norm() < 1e-15);
        }
        assert!(assemble_qm(&e, &k2, 4, 3).is_err());
    }

    #[test]
    fn spectral_image_of_single_frequency() {
        let k2 = Seq::korobov(2.0).unwrap();
        let e = ClassElement::new(
            k2.clone(),
            SpectralFunction::univariate([(1, c(1.0, 0.0))]),
            2.0,
        )
        .unwrap();
        let img = spectral_image(&e, &k2, 1, 40).unwrap();
        for k in -40i64..=40 {
            let got = img.function.coefficient(&[k]);
            let want = if k == 1 {
                1.0
            } else if (k - 1).rem_euclid(3) == 0 {
                1.0 / (k * k) as f64
            } else {
                0.0
            };
            assert_eq!(got, c(want, 0.0), "k = {k}");
        }
        let zero = ClassElement::new(k2.clone(), SpectralFunction::zero(1).unwrap(), 2.0).unwrap();
        assert!(spectral_image(&zero, &k2, 3, 30)
            .unwrap()
            .function
            .is_empty());
    }

    #[test]
    fn single_node_generator_value() {
        let k2 = Seq::korobov(2.0).unwrap();
        let a = TranslateApproximant::unit_at_origin(k2.clone(), 3, 200).unwrap();
        let got = evaluate_approximant(&a, &[0.0]).unwrap()[0];
        let want: f64 = (-200i64..=200).map(|k| k2.inverse_1d(k).re).sum();
        assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-12);
        let zeros = a.with_weights(vec![ZERO; 7]).unwrap();
        assert_eq!(
            evaluate_approximant(&zeros, &[0.3, 1.0]).unwrap(),
            vec![ZERO; 2]
        );
    }

    #[test]
    fn cross_path_consistency() {
        let k3 = Seq::korobov(3.0).unwrap();
        let e = ClassElement::new(
            k3.clone(),
            SpectralFunction::univariate([(1, c(1.0, 0.0))]),
            2.0,
        )
        .unwrap();
        let a = assemble_qm(&e, &k3, 4, 200).unwrap();
        let img = spectral_image(&e, &k3, 4, 200).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..32).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        for (x, v) in xs.iter().zip(evaluate_approximant(&a, &xs).unwrap()) {
            assert!((v - img.function.evaluate(&[*x])).norm() < 1e-9);
        }
    }

    #[test]
    fn korobov_error_matches_series() {
        // sqrt(Σ_{k ≡ 1 mod 3, |k| > 1} k^{-4}), high-precision value
        let want = 0.262_604_680_994_335_1;
        let k2 = Seq::korobov(2.0).unwrap();
        let e = ClassElement::new(
            k2.clone(),
            SpectralFunction::univariate([(1, c(1.0, 0.0))]),
            2.0,
        )
        .unwrap();
        let par = approximation_error(
            &e,
            &k2,
            1,
            ErrorMethod::ParsevalOracle {
                k_out: Some(1_000_000),
            },
        )
        .unwrap();
        assert!((par.value - want).abs() < 1e-6, "{}", par.value);
        let same = approximation_error(
            &e,
            &k2,
            1,
            ErrorMethod::ParsevalOracle {
                k_out: Some(60_000),
            },
        )
        .unwrap();
        let quad = approximation_error(
            &e,
            &k2,
            1,
            ErrorMethod::Quadrature {
                oversample: 8,
                k_out: Some(60_000),
            },
        )
        .unwrap();
        assert!((quad.value - want).abs() < 1e-6, "{}", quad.value);
        assert!((quad.value - same.value).abs() < 1e-8 * same.value);
        assert!(par.tail_bound < 1e-8);
    }

    #[test]
    fn exact_reproduction_with_polynomial_generator() {
        let k2 = Seq::korobov(2.0).unwrap();
        let beta = k2.clone().truncated(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = ClassElement::new(k2.clone(), random_g(&mut rng, 3), 2.0).unwrap();
        let img = spectral_image(&e, &beta, 3, 50).unwrap();
        assert_eq!(img.function, e.f());
        assert_eq!(
            approximation_error(&e, &beta, 3, ErrorMethod::parseval())
                .unwrap()
                .value,
            0.0
        );
        assert_eq!(
            approximation_error(&e, &beta, 3, ErrorMethod::quadrature())
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn polynomial_generator_misses_only_the_high_band() {
        // β^{-1} vanishes beyond m, so the error is the part of f above the band
        let k2 = Seq::korobov(2.0).unwrap();
        let beta = k2.clone().truncated(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = ClassElement::new(k2.clone(), random_g(&mut rng, 9), 2.0).unwrap();
        let want = (5..=9i64)
            .flat_map(|k| [k, -k])
            .map(|k| e.f_hat(&[k]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let par = approximation_error(&e, &beta, 4, ErrorMethod::parseval()).unwrap();
        let quad = approximation_error(&e, &beta, 4, ErrorMethod::quadrature()).unwrap();
        assert!(want > 0.0);
        assert!(
            (par.value - want).abs() < 1e-14 * want,
            "{} vs {want}",
            par.value
        );
        assert!(
            (quad.value - want).abs() < 1e-12 * want,
            "{} vs {want}",
            quad.value
        );
    }

    #[test]
    fn real_input_gives_real_output() {
        let k2 = Seq::korobov(2.0).unwrap();
        let g = SpectralFunction::univariate([
            (2, c(0.3, 0.4)),
            (-2, c(0.3, -0.4)),
            (0, c(1.0, 0.0)),
            (5, c(0.1, 0.0)),
            (-5, c(0.1, 0.0)),
        ]);
        let e = ClassElement::new(k2.clone(), g, 2.0).unwrap();
        let a = assemble_qm(&e, &k2, 3, 300).unwrap();
        for v in evaluate_approximant(&a, &[0.1, 1.7, 4.0]).unwrap() {
            assert!(v.im.abs() <= 1e-10);
        }
    }

    #[test]
    fn reproducing_kernel_identity() {
        let k1 = Seq::korobov(1.0).unwrap();
        let beta = Seq::korobov(2.0).unwrap();
        let f =
            SpectralFunction::univariate([(0, c(0.5, 0.0)), (3, c(0.2, -0.1)), (-7, c(1.0, 1.0))]);
        for x in [0.0, 0.4, 2.9] {
            let kx = kernel_section(&beta, &[x], 7).unwrap();
            let ip = class_inner_product(&k1, &f, &kx).unwrap();
            assert!((ip - f.evaluate(&[x])).norm() < 1e-12);
        }
    }

    #[test]
    fn default_truncations() {
        let k2 = Seq::korobov(2.0).unwrap();
        assert_eq!(default_k_gen(&k2, 4).unwrap(), 1000);
        assert_eq!(default_k_gen(&k2, 40).unwrap(), 2000);
        let e = Seq::exponential(1.0).unwrap();
        let kg = default_k_gen(&e, 4).unwrap();
        assert!(generator_tail_bound(&e, kg).unwrap() < 1e-10);
        let ko = default_k_out(&e, 8).unwrap();
        assert!((32..1000).contains(&ko));
        assert_eq!(default_k_out(&k2, 8).unwrap(), MAX_DEFAULT_K_OUT);
    }
}
