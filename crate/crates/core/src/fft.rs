//! Thin wrappers over `rustfft` for transforms on `N^d` tensor grids stored
//! row-major (last axis fastest).

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place unnormalised transform along every axis.
/// `Inverse` computes `Σ_j a_j e^{+2πi jl/N}`, `Forward` uses `e^{-2πi jl/N}`.
pub(crate) fn transform_nd(data: &mut [Complex64], n: usize, dim: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    if n <= 1 {
        return;
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(n, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            for chunk in data.chunks_exact_mut(n) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[start + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[start + i * stride] = *v;
                }
            }
        }
    }
}

/// Row-major flat index of `l ∈ {0..n-1}^d`.
pub(crate) fn flat_index(l: &[usize], n: usize) -> usize {
    l.iter().fold(0, |acc, &x| acc * n + x)
}

/// Inverse of [`flat_index`].
pub(crate) fn unflatten(mut flat: usize, n: usize, out: &mut [usize]) {
    for j in (0..out.len()).rev() {
        out[j] = flat % n;
        flat /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dimensional_transform_matches_direct_sum() {
        let n = 5;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new(i as f64, (i * i % 7) as f64))
            .collect();
        let mut fast = data.clone();
        transform_nd(&mut fast, n, 2, FftDirection::Inverse);
        for a in 0..n {
            for b in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    for k in 0..n {
                        let ph = 2.0 * std::f64::consts::PI * ((a * j + b * k) as f64) / n as f64;
                        s += data[j * n + k] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((s - fast[a * n + b]).norm() < 1e-10);
            }
        }
    }
}
