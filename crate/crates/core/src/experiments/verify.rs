//! Post-hoc budget dominance check on a sweep table.

use std::collections::BTreeMap;

use super::sweep::{SeriesKey, SweepRow};

/// Dominance check for one series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesCheck {
    pub family: String,
    pub d: usize,
    pub p: f64,
    pub param: String,
    /// `C = error / ε` at the smallest `m`.
    pub constant: f64,
    /// Largest `error / (C ε)` over the series.
    pub worst_ratio: f64,
    pub worst_m: i64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub series: Vec<SeriesCheck>,
    /// Rows without an error or a positive budget.
    pub skipped: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.series.iter().all(|s| s.passed)
    }
}

/// Fits `C` at the smallest `m` of every series and requires
/// `error ≤ tolerance · C · ε` on every row.
pub fn verify_dominance(rows: &[SweepRow], tolerance: f64) -> VerifyReport {
    let mut order = Vec::new();
    // (m, p, error, ε) per series
    let mut groups: BTreeMap<SeriesKey, Vec<(i64, f64, f64, f64)>> = BTreeMap::new();
    let mut skipped = 0;
    for r in rows {
        match (r.error(), r.epsilon) {
            (Some(e), Some(eps)) if eps > 0.0 && eps.is_finite() => {
                let key = r.series_key();
                if !groups.contains_key(&key) {
                    order.push(key.clone());
                }
                groups.entry(key).or_default().push((r.m, r.p, e, eps));
            }
            _ => skipped += 1,
        }
    }
    let series = order
        .into_iter()
        .map(|key| {
            let mut pts = groups.remove(&key).unwrap_or_default();
            pts.sort_by_key(|p| p.0);
            let (_, p, e0, eps0) = pts[0];
            let constant = e0 / eps0;
            let (mut worst_ratio, mut worst_m) = (0.0f64, pts[0].0);
            for &(m, _, e, eps) in &pts {
                let ratio = if constant > 0.0 {
                    e / (constant * eps)
                } else if e > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                };
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    worst_m = m;
                }
            }
            SeriesCheck {
                family: key.0,
                d: key.1,
                p,
                param: key.3,
                constant,
                worst_ratio,
                worst_m,
                passed: worst_ratio <= tolerance,
            }
        })
        .collect();
    VerifyReport { series, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(param: &str, m: i64, e: f64, eps: f64) -> SweepRow {
        SweepRow {
            family: "korobov".into(),
            d: 1,
            p: 2.0,
            param: param.into(),
            m,
            n_translates: 0,
            error_quadrature: None,
            error_parseval: Some(e),
            epsilon: Some(eps),
            epsilon_tail: None,
            epsilon_variant: None,
            predicted: None,
            seconds: None,
        }
    }

    #[test]
    fn fits_at_smallest_m() {
        let rows = vec![
            row("1", 8, 0.5, 1.0),
            row("1", 4, 1.0, 1.0),
            row("2", 4, 2.0, 1.0),
            row("2", 8, 2.3, 1.0),
        ];
        let rep = verify_dominance(&rows, 1.1);
        assert_eq!(rep.series.len(), 2);
        assert!(rep.series[0].passed);
        assert_eq!(rep.series[0].constant, 1.0);
        assert!(!rep.series[1].passed);
        assert_eq!(rep.series[1].worst_m, 8);
        assert!(!rep.passed());
        assert!(verify_dominance(&rows, 1.2).passed());
    }

    #[test]
    fn skips_rows_without_budget() {
        let mut r = row("1", 4, 1.0, 1.0);
        r.epsilon = None;
        let rep = verify_dominance(&[r], 1.1);
        assert_eq!(rep.skipped, 1);
        assert!(rep.passed());
    }
}
