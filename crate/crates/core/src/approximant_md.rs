//! Tensor-grid versions of `H_m`, `V_m` and `Q_m` on `(2m+1)^d` nodes.
//!
//! All spectral supports are boxes `|k|_∞ ≤ K`. In one variable every
//! function here agrees exactly with [`crate::approximant`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::approximant::{
    approximation_error_impl, assemble_impl, build_hm_impl, k_prime, node_count,
    spectral_image_impl, synth_1d, vm_samples_impl, ClassElement, ErrorEstimate, ErrorMethod,
    SpectralImage, TranslateApproximant,
};
use crate::error::{invalid, Error, Result};
use crate::fft::unflatten;
use crate::sequences::CoefficientSequence;
use crate::spectral::{FrequencyIndex, SpectralFunction};

/// Node layout `δ_m l`, `l ∈ {0..2m}^d` in lexicographic order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultiIndexWindow {
    m: i64,
    dim: usize,
}

impl MultiIndexWindow {
    pub fn new(m: i64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        node_count(m, dim)?;
        Ok(MultiIndexWindow { m, dim })
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        2.0 * PI / (2 * self.m + 1) as f64
    }

    pub fn node_count(&self) -> usize {
        ((2 * self.m + 1) as usize).pow(self.dim as u32)
    }

    /// Multi-index `l` of the node at position `flat`.
    pub fn index(&self, flat: usize) -> Vec<usize> {
        let mut l = vec![0; self.dim];
        unflatten(flat, (2 * self.m + 1) as usize, &mut l);
        l
    }

    /// Node `δ_m l` at position `flat`.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let delta = self.delta();
        self.index(flat)
            .into_iter()
            .map(|l| delta * l as f64)
            .collect()
    }
}

/// Coordinatewise [`k_prime`].
pub fn k_prime_md(k: &FrequencyIndex, m: i64) -> FrequencyIndex {
    FrequencyIndex::from(
        k.as_slice()
            .iter()
            .map(|&x| k_prime(x, m))
            .collect::<Vec<_>>(),
    )
}

pub fn build_hm_md(
    lambda: &CoefficientSequence,
    beta: &CoefficientSequence,
    m: i64,
) -> Result<SpectralFunction> {
    build_hm_impl(lambda, beta, m, lambda.dim())
}

/// `V_m(g)(δ_m l)` for every node, lexicographic in `l`.
pub fn vm_samples_md(
    g: &SpectralFunction,
    hm: &SpectralFunction,
    m: i64,
) -> Result<Vec<Complex64>> {
    vm_samples_impl(g, hm, m)
}

pub fn assemble_qm_md(
    elem: &ClassElement,
    beta: &CoefficientSequence,
    m: i64,
    k_gen: i64,
) -> Result<TranslateApproximant> {
    assemble_impl(elem, beta, m, k_gen)
}

pub fn spectral_image_md(
    elem: &ClassElement,
    beta: &CoefficientSequence,
    m: i64,
    k_out: i64,
) -> Result<SpectralImage> {
    spectral_image_impl(elem, beta, m, k_out)
}

/// Direct physical-space summation of `Σ_l c_l φ_β^{(K_gen)}(x - δ_m l)`.
/// Needs a coordinate-product generator when `d > 1`.
pub fn evaluate_approximant_md(
    a: &TranslateApproximant,
    xs: &[Vec<f64>],
) -> Result<Vec<Complex64>> {
    let dim = a.dim();
    let factors = a.beta().factors().ok_or_else(|| {
        Error::Unsupported(format!(
            "physical evaluation of a non-product {}-dimensional generator",
            dim
        ))
    })?;
    let gens: Vec<Vec<Complex64>> = factors
        .iter()
        .map(|f| (-a.k_gen()..=a.k_gen()).map(|k| f.inverse_1d(k)).collect())
        .collect();
    let side = (2 * a.m() + 1) as usize;
    let delta = a.delta();
    let mut out = Vec::with_capacity(xs.len());
    for x in xs {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        // per-axis generator values at x_i - δ l_i
        let axis: Vec<Vec<Complex64>> = (0..dim)
            .map(|i| {
                (0..side)
                    .map(|l| synth_1d(&gens[i], x[i] - delta * l as f64))
                    .collect()
            })
            .collect();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut l = vec![0usize; dim];
        for (flat, c) in a.weights().iter().enumerate() {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            unflatten(flat, side, &mut l);
            let mut v = *c;
            for i in 0..dim {
                v *= axis[i][l[i]];
            }
            sum += v;
        }
        out.push(sum);
    }
    Ok(out)
}

pub fn approximation_error_md(
    elem: &ClassElement,
    beta: &CoefficientSequence,
    m: i64,
    method: ErrorMethod,
) -> Result<ErrorEstimate> {
    approximation_error_impl(elem, beta, m, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximant::{self as uni, BoxIter};
    use crate::sequences::CoefficientSequence as Seq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fi(k: &[i64]) -> FrequencyIndex {
        FrequencyIndex::new(k)
    }

    fn random_g(rng: &mut ChaCha8Rng, dim: usize, k: i64) -> SpectralFunction {
        let mut g = SpectralFunction::zero(dim).unwrap();
        for idx in BoxIter::new(dim, k) {
            g.insert(
                FrequencyIndex::from(idx),
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
            .unwrap();
        }
        g
    }

    #[test]
    fn k_prime_md_examples() {
        assert_eq!(k_prime_md(&fi(&[5, 7]), 2), fi(&[0, 2]));
        assert_eq!(k_prime_md(&fi(&[0, 0]), 3), fi(&[0, 0]));
        assert_eq!(k_prime_md(&fi(&[-4, 3]), 1), fi(&[-1, 0]));
    }

    #[test]
    fn window_layout() {
        let w = MultiIndexWindow::new(2, 3).unwrap();
        assert_eq!(w.node_count(), 125);
        assert_eq!(w.index(7), vec![0, 1, 2]);
        let d = 2.0 * PI / 5.0;
        assert_eq!(w.node(7), vec![0.0, d, 2.0 * d]);
        assert!(MultiIndexWindow::new(0, 2).is_err());
    }

    #[test]
    fn hm_md_examples() {
        let k2 = Seq::korobov_d(2.0, 2).unwrap();
        let h = build_hm_md(&k2, &k2, 1).unwrap();
        assert_eq!(h.len(), 9);
        assert!(h.iter().all(|(_, a)| *a == c(1.0, 0.0)));
        let k1 = Seq::korobov_d(1.0, 2).unwrap();
        let h = build_hm_md(&k1, &k2, 1).unwrap();
        assert_eq!(h.coefficient(&[1, 1]), c(1.0, 0.0));
        let h = build_hm_md(&k1, &k2, 2).unwrap();
        assert_eq!(h.coefficient(&[2, -2]), c(4.0, 0.0));
        let a = Seq::korobov(1.0).unwrap();
        let b = Seq::korobov(2.0).unwrap();
        assert_eq!(
            build_hm_md(&a, &b, 3).unwrap(),
            uni::build_hm(&a, &b, 3).unwrap()
        );
    }

    #[test]
    fn assemble_md_examples() {
        let k2 = Seq::korobov_d(2.0, 2).unwrap();
        let one = ClassElement::new(
            k2.clone(),
            SpectralFunction::from_coefficients(2, [(vec![0, 0], c(1.0, 0.0))]).unwrap(),
            2.0,
        )
        .unwrap();
        let a = assemble_qm_md(&one, &k2, 1, 10).unwrap();
        assert_eq!(a.weights().len(), 9);
        for w in a.weights() {
            assert!((w - c(1.0 / 9.0, 0.0)).norm() < 1e-15);
        }
        let e = ClassElement::new(
            k2.clone(),
            SpectralFunction::from_coefficients(2, [(vec![1, 1], c(1.0, 0.0))]).unwrap(),
            2.0,
        )
        .unwrap();
        let a = assemble_qm_md(&e, &k2, 2, 10).unwrap();
        let win = MultiIndexWindow::new(2, 2).unwrap();
        for (flat, w) in a.weights().iter().enumerate() {
            let l = win.index(flat);
            let want = Complex64::from_polar(1.0 / 25.0, win.delta() * (l[0] + l[1]) as f64);
            assert!((w - want).norm() < 1e-15);
        }
    }

    #[test]
    fn univariate_reduction_is_exact() {
        let k1 = Seq::korobov(1.0).unwrap();
        let k2 = Seq::korobov(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = ClassElement::new(k1, random_g(&mut rng, 1, 6), 2.0).unwrap();
        assert_eq!(
            assemble_qm_md(&e, &k2, 3, 100).unwrap(),
            uni::assemble_qm(&e, &k2, 3, 100).unwrap()
        );
        assert_eq!(
            spectral_image_md(&e, &k2, 3, 60).unwrap(),
            uni::spectral_image(&e, &k2, 3, 60).unwrap()
        );
        let m = ErrorMethod::ParsevalOracle { k_out: Some(4096) };
        assert_eq!(
            approximation_error_md(&e, &k2, 3, m).unwrap(),
            uni::approximation_error(&e, &k2, 3, m).unwrap()
        );
    }

    #[test]
    fn spectral_image_matches_kernel_sum() {
        // P_m f(x) = Σ_l c_l φ_β(x - δ l), evaluated with the generator
        // truncated far beyond the image, against the image's own synthesis.
        let lambda = Seq::korobov_d(1.0, 2).unwrap();
        let beta = Seq::korobov_d(2.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = ClassElement::new(lambda, random_g(&mut rng, 2, 4), 2.0).unwrap();
        let m = 4;
        let img = spectral_image_md(&e, &beta, m, 27).unwrap();
        for (k, q) in img.function.iter() {
            if k.norm_inf() > m {
                let kp = k_prime_md(k, m);
                let gamma = crate::approximant::alpha(e.lambda(), &beta, kp.as_slice())
                    * beta.inverse(k.as_slice());
                assert!((q - gamma * e.g().coefficient(kp.as_slice())).norm() < 1e-15);
            }
        }
        let a = assemble_qm_md(&e, &beta, m, 27).unwrap();
        let xs: Vec<Vec<f64>> = (0..11)
            .flat_map(|i| {
                (0..11).map(move |j| vec![2.0 * PI * i as f64 / 11.0, 2.0 * PI * j as f64 / 11.0])
            })
            .collect();
        let direct = evaluate_approximant_md(&a, &xs).unwrap();
        for (x, v) in xs.iter().zip(direct) {
            assert!((v - img.function.evaluate(x)).norm() < 1e-9);
        }
    }

    #[test]
    fn tensor_consistency() {
        let k2 = Seq::korobov(2.0).unwrap();
        let k1 = Seq::korobov(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g1 = random_g(&mut rng, 1, 4);
        let g2 = random_g(&mut rng, 1, 3);
        let mut g = SpectralFunction::zero(2).unwrap();
        for (a, x) in g1.iter() {
            for (b, y) in g2.iter() {
                g.insert(fi(&[a.as_slice()[0], b.as_slice()[0]]), x * y)
                    .unwrap();
            }
        }
        let lambda = Seq::product(vec![k1.clone(), k2.clone()]).unwrap();
        let beta = Seq::product(vec![k2.clone(), k2.clone()]).unwrap();
        for m in 1..=4 {
            let multi = spectral_image_md(
                &ClassElement::new(lambda.clone(), g.clone(), 2.0).unwrap(),
                &beta,
                m,
                20,
            )
            .unwrap();
            let u1 = uni::spectral_image(
                &ClassElement::new(k1.clone(), g1.clone(), 2.0).unwrap(),
                &k2,
                m,
                20,
            )
            .unwrap();
            let u2 = uni::spectral_image(
                &ClassElement::new(k2.clone(), g2.clone(), 2.0).unwrap(),
                &k2,
                m,
                20,
            )
            .unwrap();
            for (a, x) in u1.function.iter() {
                for (b, y) in u2.function.iter() {
                    let k = [a.as_slice()[0], b.as_slice()[0]];
                    assert!((multi.function.coefficient(&k) - x * y).norm() < 1e-10);
                }
            }
            assert_eq!(multi.function.len(), u1.function.len() * u2.function.len());
        }
    }

    #[test]
    fn diagonal_mode_error_two_ways() {
        // sqrt(S² - 1), S = Σ_j |1 + 3j|^{-4}
        let want = 0.377_727_529_595_789_6;
        let k2 = Seq::korobov_d(2.0, 2).unwrap();
        let g = SpectralFunction::from_coefficients(2, [(vec![1, 1], c(1.0, 0.0))]).unwrap();
        let e = ClassElement::new(k2.clone(), g, 2.0).unwrap();
        let par = approximation_error_md(
            &e,
            &k2,
            1,
            ErrorMethod::ParsevalOracle {
                k_out: Some(1 << 20),
            },
        )
        .unwrap();
        assert!((par.value - want).abs() < 1e-9, "{}", par.value);
        let quad = approximation_error_md(
            &e,
            &k2,
            1,
            ErrorMethod::Quadrature {
                oversample: 4,
                k_out: Some(300),
            },
        )
        .unwrap();
        let same =
            approximation_error_md(&e, &k2, 1, ErrorMethod::ParsevalOracle { k_out: Some(300) })
                .unwrap();
        assert!((quad.value - same.value).abs() < 1e-10);
        assert!((quad.value - want).abs() < 1e-6, "{}", quad.value);
    }

    #[test]
    fn polynomial_generator_reproduces_box() {
        let k2 = Seq::korobov_d(2.0, 2).unwrap();
        let beta = k2.clone().truncated(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let e = ClassElement::new(k2, random_g(&mut rng, 2, 2), 2.0).unwrap();
        assert_eq!(
            approximation_error_md(&e, &beta, 2, ErrorMethod::parseval())
                .unwrap()
                .value,
            0.0
        );
        assert_eq!(
            approximation_error_md(&e, &beta, 2, ErrorMethod::quadrature())
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn node_guard() {
        let k2 = Seq::korobov_d(2.0, 3).unwrap();
        let e = ClassElement::new(k2.clone(), SpectralFunction::zero(3).unwrap(), 2.0).unwrap();
        assert!(matches!(
            assemble_qm_md(&e, &k2, 200, 400),
            Err(Error::GuardExceeded { .. })
        ));
    }
}
