//! Lower-bound probe for approximation by `n` translates: the lattice ball
//! count `s*`, the hard family `F_{n,s}` of sign polynomials, and a heuristic
//! best-translate fitter.
//!
//! The statistic produced here is an upper estimate of the distance from
//! sampled members of `F_{n,s}` to the best `n`-translate approximant found by
//! a local search. It is labelled heuristic and never certifies a bound.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::sequences::{CoefficientSequence, Envelope};
use crate::spectral::{FrequencyIndex, SpectralFunction};

/// Largest `s^d` accepted by [`lattice_count`].
pub const LATTICE_GUARD: u128 = 100_000_000;

/// Least-squares grid oversampling factor.
pub const FIT_OVERSAMPLE: usize = 8;

/// Nondecreasing growth function `Ψ: [0, ∞) → (0, ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub enum GrowthFunction {
    /// `Ψ(t) = max(1, t)^a`.
    Power { a: f64 },
    /// `Ψ(t) = max(1, t)^a · (1 + log max(1, t))^b`.
    LogPower { a: f64, b: f64 },
    /// Piecewise linear through `(t, Ψ)` points, constant outside.
    Table { points: Vec<(f64, f64)> },
}

impl GrowthFunction {
    pub fn power(a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return invalid(format!("growth exponent must be nonnegative, got {a}"));
        }
        Ok(GrowthFunction::Power { a })
    }

    pub fn log_power(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0 && b.is_finite() && b >= 0.0) {
            return invalid("log-power growth needs nonnegative exponents");
        }
        Ok(GrowthFunction::LogPower { a, b })
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return invalid("growth table is empty");
        }
        for w in points.windows(2) {
            if w[1].0.partial_cmp(&w[0].0) != Some(Ordering::Greater) || w[1].1 < w[0].1 {
                return invalid(
                    "growth table must have increasing abscissae and nondecreasing values",
                );
            }
        }
        if points
            .iter()
            .any(|&(t, v)| !(t.is_finite() && v.is_finite() && v > 0.0))
        {
            return invalid("growth table values must be finite and positive");
        }
        Ok(GrowthFunction::Table { points })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            GrowthFunction::Power { a } => t.max(1.0).powf(*a),
            GrowthFunction::LogPower { a, b } => {
                let u = t.max(1.0);
                u.powf(*a) * (1.0 + u.ln()).powf(*b)
            }
            GrowthFunction::Table { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let i = points.partition_point(|p| p.0 <= t);
                let (t0, v0) = points[i - 1];
                let (t1, v1) = points[i];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            GrowthFunction::Power { a } => format!("power:{a}"),
            GrowthFunction::LogPower { a, b } => format!("log-power:{a}:{b}"),
            GrowthFunction::Table { points } => format!("table{}", points.len()),
        }
    }

    /// `lim_{t→∞} Ψ(t)`.
    pub fn limit(&self) -> f64 {
        match self {
            GrowthFunction::Power { a } if *a == 0.0 => 1.0,
            GrowthFunction::LogPower { a, b } if *a == 0.0 && *b == 0.0 => 1.0,
            GrowthFunction::Power { .. } | GrowthFunction::LogPower { .. } => f64::INFINITY,
            GrowthFunction::Table { points } => points[points.len() - 1].1,
        }
    }

    /// Envelope for `1/Ψ(|k|)`.
    pub fn inverse_envelope(&self) -> Envelope {
        match self {
            GrowthFunction::Power { a } | GrowthFunction::LogPower { a, .. } => Envelope::Power {
                scale: 1.0,
                exponent: *a,
                from: 1,
            },
            GrowthFunction::Table { points } => {
                let (t, v) = points[points.len() - 1];
                Envelope::Power {
                    scale: 1.0 / v,
                    exponent: 0.0,
                    from: t.max(0.0).ceil() as i64,
                }
            }
        }
    }

    /// Fitted `c` with `Ψ(2t) ≤ c Ψ(t)` on a geometric grid over `[1, 10^4]`.
    pub fn doubling_constant(&self) -> f64 {
        let samples = 4000;
        (0..=samples)
            .map(|i| {
                let t = 10f64.powf(4.0 * i as f64 / samples as f64);
                self.eval(2.0 * t) / self.eval(t)
            })
            .fold(1.0, f64::max)
    }

    /// `Ψ` is nondecreasing on the same probe grid.
    pub fn is_nondecreasing(&self) -> bool {
        let samples = 4000;
        let mut prev = self.eval(0.0);
        (0..=samples).all(|i| {
            let v = self.eval(10f64.powf(4.0 * i as f64 / samples as f64));
            let ok = v >= prev;
            prev = v;
            ok
        })
    }
}

fn isqrt(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

/// Number of points `k ∈ Z^d` with `|k|_2 ≤ s`.
pub fn lattice_count(s: u64, dim: usize) -> Result<u64> {
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    let size = (s.max(1) as u128).pow(dim as u32);
    if size > LATTICE_GUARD {
        return Err(Error::GuardExceeded {
            what: "lattice count",
            size,
            limit: LATTICE_GUARD,
        });
    }
    Ok(count_ball(s * s, dim))
}

// Points of Z^dim with squared norm ≤ r2; the last axis is counted in closed form.
fn count_ball(r2: u64, dim: usize) -> u64 {
    if dim == 1 {
        return 2 * isqrt(r2) + 1;
    }
    let top = isqrt(r2);
    let mut total = count_ball(r2, dim - 1);
    for x in 1..=top {
        total += 2 * count_ball(r2 - x * x, dim - 1);
    }
    total
}

/// Lattice points of the ball `|k|_2 ≤ s` in lexicographic order.
pub fn ball_points(s: u64, dim: usize) -> Result<Vec<Vec<i64>>> {
    lattice_count(s, dim)?;
    let s = s as i64;
    let mut out = Vec::new();
    let mut k = vec![-s; dim];
    loop {
        if k.iter().map(|&x| x * x).sum::<i64>() <= s * s {
            out.push(k.clone());
        }
        let mut axis = dim;
        loop {
            if axis == 0 {
                return Ok(out);
            }
            axis -= 1;
            if k[axis] < s {
                k[axis] += 1;
                break;
            }
            k[axis] = -s;
        }
    }
}

/// Parameters of the hard family for a given budget `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundDesign {
    pub n: u64,
    pub dim: usize,
    pub c3: f64,
    pub m: u64,
    pub s: u64,
    pub s_star: u64,
    pub omega: f64,
}

/// `m = ⌊c3 n ln n⌋ + 1`, `s` the largest radius whose ball holds at most `m`
/// points, and `ω = m^{-1/2} / max_{|k|_2 ≤ s} |λ_k|`.
pub fn design_for_n(
    n: u64,
    dim: usize,
    lambda: &CoefficientSequence,
    c3: f64,
) -> Result<LowerBoundDesign> {
    if n < 10 {
        return invalid(format!("the lower-bound design needs n ≥ 10, got {n}"));
    }
    if !(c3.is_finite() && c3 > 0.0) {
        return invalid("c3 must be positive");
    }
    if lambda.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: lambda.dim(),
        });
    }
    let nf = n as f64;
    let m = (c3 * nf * nf.ln()).floor() as u64 + 1;
    let mut s = 0u64;
    let mut s_star = lattice_count(0, dim)?;
    loop {
        let next = lattice_count(s + 1, dim)?;
        if next > m {
            break;
        }
        s += 1;
        s_star = next;
    }
    let max_lambda = ball_points(s, dim)?
        .iter()
        .map(|k| lambda.value(k).norm())
        .fold(0.0, f64::max);
    let omega = 1.0 / ((m as f64).sqrt() * max_lambda);
    Ok(LowerBoundDesign {
        n,
        dim,
        c3,
        m,
        s,
        s_star,
        omega,
    })
}

/// Member `ω Σ_{|k|_2 ≤ s} ε_k e^{i(k,x)}` for the given sign rule.
pub fn family_member<F: FnMut(&[i64]) -> f64>(
    design: &LowerBoundDesign,
    mut sign: F,
) -> Result<SpectralFunction> {
    let mut f = SpectralFunction::zero(design.dim)?;
    for k in ball_points(design.s, design.dim)? {
        f.insert(
            FrequencyIndex::new(&k),
            Complex64::new(design.omega * sign(&k), 0.0),
        )?;
    }
    Ok(f)
}

/// Draws members of `F_{n,s}` with independent uniform signs. Signs are
/// mirrored (`ε_{-k} = ε_k`) so every member is real-valued. Trial `t` uses
/// stream `t` of the seeded generator.
pub fn sample_f_ns(
    design: &LowerBoundDesign,
    trials: usize,
    seed: u64,
) -> Result<Vec<SpectralFunction>> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let points = ball_points(design.s, design.dim)?;
    (0..trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut f = SpectralFunction::zero(design.dim)?;
            for k in &points {
                let neg: Vec<i64> = k.iter().map(|x| -x).collect();
                if neg < *k {
                    continue;
                }
                let e = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let c = Complex64::new(design.omega * e, 0.0);
                f.insert(FrequencyIndex::new(k), c)?;
                f.insert(FrequencyIndex::from(neg), c)?;
            }
            Ok(f)
        })
        .collect()
}

/// `‖f‖_{Φ_{λ,2}} = (Σ |λ_k f̂(k)|²)^{1/2}`.
pub fn class_norm_l2(f: &SpectralFunction, lambda: &CoefficientSequence) -> Result<f64> {
    if f.dim() != lambda.dim() {
        return Err(Error::DimensionMismatch {
            expected: lambda.dim(),
            got: f.dim(),
        });
    }
    Ok(f.iter()
        .map(|(k, c)| (lambda.value(k.as_slice()) * c).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Result of fitting translates of `ψ` to `f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TranslateFit {
    pub residual: f64,
    /// A ridge term was needed for at least one node set.
    pub regularized: bool,
}

/// Least-squares residual of `f` against `Σ_l b_l ψ(x - a_l)` for fixed nodes.
pub fn fit_with_nodes(
    f: &SpectralFunction,
    psi: &SpectralFunction,
    nodes: &[f64],
) -> Result<TranslateFit> {
    if f.dim() != 1 || psi.dim() != 1 {
        return Err(Error::Unsupported(
            "translate fitting is implemented for d = 1".into(),
        ));
    }
    if nodes.is_empty() {
        return invalid("at least one node is required");
    }
    let band = f.bandwidth().max(psi.bandwidth()) as usize;
    let grid = FIT_OVERSAMPLE * (2 * band + 1);
    let fv = f.to_grid(grid)?.values;
    let mut cols = DMatrix::<Complex64>::zeros(grid, nodes.len());
    for (j, &a) in nodes.iter().enumerate() {
        let shifted = SpectralFunction::from_coefficients(
            1,
            psi.iter().map(|(k, c)| {
                (
                    k.clone(),
                    c * Complex64::from_polar(1.0, -(k.as_slice()[0] as f64) * a),
                )
            }),
        )?;
        for (i, v) in shifted.to_grid(grid)?.values.into_iter().enumerate() {
            cols[(i, j)] = v;
        }
    }
    let rhs = DVector::from_vec(fv.clone());
    let gram = cols.adjoint() * &cols;
    let atb = cols.adjoint() * &rhs;
    let mut regularized = false;
    let chol = match well_conditioned_cholesky(&gram) {
        Some(c) => c,
        None => {
            regularized = true;
            let ridge = 1e-12 * grid as f64;
            let mut g = gram.clone();
            for i in 0..g.nrows() {
                g[(i, i)] += ridge;
            }
            g.cholesky().ok_or_else(|| {
                Error::Model("regularized Gram matrix is not positive definite".into())
            })?
        }
    };
    let b = chol.solve(&atb);
    let resid = rhs - cols * b;
    let residual = (resid.iter().map(|v| v.norm_sqr()).sum::<f64>() / grid as f64).sqrt();
    Ok(TranslateFit {
        residual,
        regularized,
    })
}

fn well_conditioned_cholesky(
    gram: &DMatrix<Complex64>,
) -> Option<nalgebra::Cholesky<Complex64, nalgebra::Dyn>> {
    let max_diag = (0..gram.nrows())
        .map(|i| gram[(i, i)].re)
        .fold(0.0, f64::max);
    if max_diag <= 0.0 {
        return None;
    }
    let chol = gram.clone().cholesky()?;
    let l = chol.l_dirty();
    let min_pivot = (0..l.nrows())
        .map(|i| l[(i, i)].re.powi(2))
        .fold(f64::INFINITY, f64::min);
    (min_pivot > 1e-13 * max_diag).then_some(chol)
}

/// Heuristic `inf` over `n` translates: restart 0 uses equispaced nodes
/// `2πl/n`, restart `r ≥ 1` jitters them with Gaussian noise of standard
/// deviation `δ/4` drawn from stream `r`. Returns the smallest residual.
pub fn best_translate_fit(
    f: &SpectralFunction,
    psi: &SpectralFunction,
    n: usize,
    restarts: usize,
    seed: u64,
) -> Result<TranslateFit> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    let restarts = restarts.max(1);
    let delta = 2.0 * PI / n as f64;
    let jitter =
        Normal::new(0.0, delta / 4.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let fits: Vec<TranslateFit> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut nodes: Vec<f64> = (0..n).map(|l| delta * l as f64).collect();
            if r > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                for a in nodes.iter_mut() {
                    *a += jitter.sample(&mut rng);
                }
            }
            fit_with_nodes(f, psi, &nodes)
        })
        .collect::<Result<_>>()?;
    let best = fits
        .iter()
        .map(|f| f.residual)
        .fold(f64::INFINITY, f64::min);
    Ok(TranslateFit {
        residual: best,
        regularized: fits.iter().any(|f| f.regularized),
    })
}

/// One row of the lower-bound probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResult {
    pub n: u64,
    pub m: u64,
    pub s: u64,
    pub omega: f64,
    pub statistic: f64,
    /// `1/Ψ((n log n)^{1/d})`.
    pub envelope_low: f64,
    /// `1/Ψ(n^{1/d})`.
    pub envelope_high: f64,
    pub flag: String,
}

/// Worst residual over `trials` sampled members of `F_{n,s}`, each fitted
/// with `n` translates of `psi`.
pub fn probe_mn(
    design: &LowerBoundDesign,
    psi: &SpectralFunction,
    growth: &GrowthFunction,
    trials: usize,
    restarts: usize,
    seed: u64,
) -> Result<ProbeResult> {
    let members = sample_f_ns(design, trials, seed)?;
    let fits: Vec<TranslateFit> = members
        .iter()
        .enumerate()
        .map(|(t, f)| {
            best_translate_fit(
                f,
                psi,
                design.n as usize,
                restarts,
                seed.wrapping_add(t as u64),
            )
        })
        .collect::<Result<_>>()?;
    Ok(probe_result(design, growth, &fits))
}

/// Same statistic with `ψ` supplied per member (for example `ψ = f`).
pub fn probe_mn_with<F>(
    design: &LowerBoundDesign,
    growth: &GrowthFunction,
    trials: usize,
    restarts: usize,
    seed: u64,
    mut psi_for: F,
) -> Result<ProbeResult>
where
    F: FnMut(&SpectralFunction) -> SpectralFunction,
{
    let members = sample_f_ns(design, trials, seed)?;
    let mut fits = Vec::with_capacity(members.len());
    for (t, f) in members.iter().enumerate() {
        let psi = psi_for(f);
        fits.push(best_translate_fit(
            f,
            &psi,
            design.n as usize,
            restarts,
            seed.wrapping_add(t as u64),
        )?);
    }
    Ok(probe_result(design, growth, &fits))
}

fn probe_result(
    design: &LowerBoundDesign,
    growth: &GrowthFunction,
    fits: &[TranslateFit],
) -> ProbeResult {
    let n = design.n as f64;
    let d = design.dim as f64;
    let statistic = fits.iter().map(|f| f.residual).fold(0.0, f64::max);
    let mut flag = String::from("heuristic");
    if fits.iter().any(|f| f.regularized) {
        flag.push_str("+regularized");
    }
    ProbeResult {
        n: design.n,
        m: design.m,
        s: design.s,
        omega: design.omega,
        statistic,
        envelope_low: 1.0 / growth.eval((n * n.ln()).powf(1.0 / d)),
        envelope_high: 1.0 / growth.eval(n.powf(1.0 / d)),
        flag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_count(s: i64, d: usize) -> u64 {
        let side = 2 * s + 1;
        (0..side.pow(d as u32))
            .filter(|&flat| {
                let mut rem = flat;
                let mut n2 = 0;
                for _ in 0..d {
                    let x = rem % side - s;
                    rem /= side;
                    n2 += x * x;
                }
                n2 <= s * s
            })
            .count() as u64
    }

    #[test]
    fn lattice_count_examples() {
        assert_eq!(lattice_count(1, 2).unwrap(), 5);
        assert_eq!(lattice_count(0, 3).unwrap(), 1);
        assert_eq!(lattice_count(2, 2).unwrap(), 13);
        for d in 1..=3 {
            for s in 0..=9 {
                assert_eq!(lattice_count(s as u64, d).unwrap(), brute_count(s, d));
            }
        }
        assert!(matches!(
            lattice_count(100_000, 2),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn lattice_growth_constants() {
        for d in 1..=3usize {
            let ratios: Vec<f64> = (4..=64u64)
                .map(|s| lattice_count(s, d).unwrap() as f64 / (s as f64).powi(d as i32))
                .collect();
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            assert!(lo > 0.0 && hi / lo < 3.0, "d = {d}: [{lo}, {hi}]");
        }
    }

    #[test]
    fn design_examples() {
        let kor = CoefficientSequence::korobov(1.0).unwrap();
        let d = design_for_n(10, 1, &kor, 1.0).unwrap();
        assert_eq!(d.m, 24);
        assert_eq!(d.s, 11);
        assert!((d.omega - 1.0 / (24f64.sqrt() * 11.0)).abs() < 1e-15);

        let one = CoefficientSequence::constant(1.0).unwrap();
        let d = design_for_n(37, 1, &one, 1.0).unwrap();
        assert!((d.omega - 1.0 / (d.m as f64).sqrt()).abs() < 1e-15);

        let kor2 = CoefficientSequence::korobov_d(1.0, 2).unwrap();
        let d = design_for_n(100, 2, &kor2, 1.0).unwrap();
        assert_eq!(d.m, 461);
        assert!(lattice_count(d.s, 2).unwrap() <= 461);
        assert!(lattice_count(d.s + 1, 2).unwrap() > 461);

        assert!(design_for_n(9, 1, &kor, 1.0).is_err());
    }

    #[test]
    fn members_lie_in_unit_ball() {
        let kor = CoefficientSequence::korobov(1.0).unwrap();
        let design = design_for_n(10, 1, &kor, 1.0).unwrap();
        let all_plus = family_member(&design, |_| 1.0).unwrap();
        assert!(class_norm_l2(&all_plus, &kor).unwrap() <= 1.0);
        let members = sample_f_ns(&design, 50, 9).unwrap();
        assert_eq!(members, sample_f_ns(&design, 50, 9).unwrap());
        for f in &members {
            assert!(f.is_real_valued());
            assert!(class_norm_l2(f, &kor).unwrap() <= 1.0 + 1e-12);
        }
        let kor2 = CoefficientSequence::korobov_d(2.0, 2).unwrap();
        let design = design_for_n(12, 2, &kor2, 1.0).unwrap();
        for f in sample_f_ns(&design, 10, 1).unwrap() {
            assert!(class_norm_l2(&f, &kor2).unwrap() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn fit_examples() {
        let psi = SpectralFunction::univariate([
            (0, Complex64::new(1.0, 0.0)),
            (2, Complex64::new(0.5, 0.0)),
            (-3, Complex64::new(0.25, 0.1)),
        ]);
        let fit = best_translate_fit(&psi, &psi, 3, 1, 0).unwrap();
        assert!(fit.residual < 1e-8);

        let e = SpectralFunction::univariate([(1, Complex64::new(1.0, 0.0))]);
        let constant = SpectralFunction::univariate([(0, Complex64::new(1.0, 0.0))]);
        let fit = best_translate_fit(&e, &constant, 4, 3, 0).unwrap();
        assert!((fit.residual - 1.0).abs() < 1e-10);
        assert!(fit.regularized);
    }

    #[test]
    fn growth_function_basics() {
        let g = GrowthFunction::power(2.0).unwrap();
        assert_eq!(g.eval(3.0), 9.0);
        assert_eq!(g.eval(0.5), 1.0);
        assert!((g.doubling_constant() - 4.0).abs() < 1e-12);
        assert!(g.is_nondecreasing());
        let t = GrowthFunction::table(vec![(0.0, 1.0), (2.0, 3.0)]).unwrap();
        assert_eq!(t.eval(1.0), 2.0);
        assert_eq!(t.eval(10.0), 3.0);
        assert!(GrowthFunction::table(vec![(0.0, 2.0), (1.0, 1.0)]).is_err());
        let lp = GrowthFunction::log_power(1.0, 1.0).unwrap();
        // the ratio peaks at t = 1, where it equals 2(1 + ln 2)
        assert!((lp.doubling_constant() - 2.0 * (1.0 + 2f64.ln())).abs() < 1e-12);
    }
}
