//! Fast built-in checks against closed-form reference values.

use crate::approximant::{approximation_error, spectral_image, ClassElement, ErrorMethod};
use crate::error::Result;
use crate::error_budget::epsilon_p2;
use crate::lower_bound::{design_for_n, lattice_count};
use crate::sequences::CoefficientSequence;
use crate::spectral::SpectralFunction;
use crate::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct SelfTestResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> SelfTestResult {
    match f() {
        Ok((passed, detail)) => SelfTestResult {
            name,
            passed,
            detail,
        },
        Err(e) => SelfTestResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn single_mode(lambda: &CoefficientSequence) -> Result<ClassElement> {
    ClassElement::new(
        lambda.clone(),
        SpectralFunction::univariate([(1, Complex64::new(1.0, 0.0))]),
        2.0,
    )
}

/// Runs every check; each finishes well under a second.
pub fn run_selftest() -> Vec<SelfTestResult> {
    vec![
        check("korobov_single_mode_error", || {
            // sqrt(Σ_{k ≡ 1 mod 3, |k| > 1} k^{-4})
            let want = 0.262_604_680_994_335_1;
            let k2 = CoefficientSequence::korobov(2.0)?;
            let got =
                approximation_error(&single_mode(&k2)?, &k2, 1, ErrorMethod::parseval())?.value;
            Ok((
                (got - want).abs() < 1e-9,
                format!("got {got:.15}, want {want:.15}"),
            ))
        }),
        check("quadrature_matches_parseval", || {
            let k2 = CoefficientSequence::korobov(2.0)?;
            let e = single_mode(&k2)?;
            let par = approximation_error(
                &e,
                &k2,
                2,
                ErrorMethod::ParsevalOracle { k_out: Some(4096) },
            )?
            .value;
            let quad = approximation_error(
                &e,
                &k2,
                2,
                ErrorMethod::Quadrature {
                    oversample: 4,
                    k_out: Some(4096),
                },
            )?
            .value;
            let rel = (par - quad).abs() / par;
            Ok((rel < 1e-8, format!("relative difference {rel:e}")))
        }),
        check("korobov_budget_gamma_sum", || {
            // sqrt(2 Σ_{j≥1} (3j-1)^{-4})
            let want = 0.359_075_949_630_454_5;
            let k2 = CoefficientSequence::korobov(2.0)?;
            let got = epsilon_p2(&k2, &k2, 1, 10_000)?.value;
            Ok((
                (got - want).abs() < 1e-12,
                format!("got {got:.15}, want {want:.15}"),
            ))
        }),
        check("polynomial_generator_reproduces", || {
            let k2 = CoefficientSequence::korobov(2.0)?;
            let beta = k2.clone().truncated(3)?;
            let g = SpectralFunction::univariate(
                (-3..=3).map(|k| (k, Complex64::new(1.0 / (1 + k * k) as f64, 0.0))),
            );
            let e = ClassElement::new(k2, g, 2.0)?;
            let img = spectral_image(&e, &beta, 3, 64)?;
            let same = img.function == e.f();
            Ok((same, format!("image equals f: {same}")))
        }),
        check("lattice_count_and_design", || {
            let c = lattice_count(2, 2)?;
            let d = design_for_n(10, 1, &CoefficientSequence::korobov(1.0)?, 1.0)?;
            let ok = c == 13
                && d.m == 24
                && d.s == 11
                && (d.omega - 0.018_556_740_475_630_138).abs() < 1e-15;
            Ok((
                ok,
                format!(
                    "count {c}, design m = {} s = {} omega = {:e}",
                    d.m, d.s, d.omega
                ),
            ))
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for r in run_selftest() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
