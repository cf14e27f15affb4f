//! Concordance correlation coefficient and related statistics.
//!
//! Variances are population variances (divide by N).

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Predictions `x` and ground truth `y`, validated to be equal-length,
/// finite, and at least two long.
#[derive(Debug, Clone, Copy)]
pub struct SeriesPair<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

impl<'a> SeriesPair<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Validation(format!(
                "series lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 samples, got {}",
                x.len()
            )));
        }
        if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite sample {v}")));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        self.x
    }

    pub fn y(&self) -> &[f64] {
        self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

struct Moments {
    mean_x: f64,
    mean_y: f64,
    var_x: f64,
    var_y: f64,
    cov: f64,
}

fn moments(pair: &SeriesPair<'_>) -> Moments {
    let n = pair.len() as f64;
    let mean_x = compensated_sum(pair.x.iter().copied()) / n;
    let mean_y = compensated_sum(pair.y.iter().copied()) / n;
    let dx = || pair.x.iter().map(move |v| v - mean_x);
    let dy = || pair.y.iter().map(move |v| v - mean_y);
    Moments {
        mean_x,
        mean_y,
        var_x: compensated_sum(dx().map(|d| d * d)) / n,
        var_y: compensated_sum(dy().map(|d| d * d)) / n,
        cov: compensated_sum(dx().zip(dy()).map(|(a, b)| a * b)) / n,
    }
}

fn pearson_from(m: &Moments) -> f64 {
    if m.var_x == 0.0 || m.var_y == 0.0 {
        return 0.0;
    }
    (m.cov / (m.var_x * m.var_y).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson correlation; 0 when either series is constant.
pub fn pearson(pair: &SeriesPair<'_>) -> f64 {
    pearson_from(&moments(pair))
}

/// `2ρσxσy / (σx² + σy² + (μx − μy)²)`.
///
/// Fails with [`Error::UndefinedMetric`] when both series are constant and
/// equal.
pub fn ccc(pair: &SeriesPair<'_>) -> Result<f64> {
    let m = moments(pair);
    let d = m.mean_x - m.mean_y;
    let denom = m.var_x + m.var_y + d * d;
    if denom == 0.0 {
        return Err(Error::UndefinedMetric(
            "both series are constant and equal".into(),
        ));
    }
    let rho = pearson_from(&m);
    Ok(2.0 * rho * (m.var_x * m.var_y).sqrt() / denom)
}

/// Convenience wrapper validating the slices first.
pub fn ccc_of(x: &[f64], y: &[f64]) -> Result<f64> {
    ccc(&SeriesPair::new(x, y)?)
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson of average ranks).
pub fn spearman(pair: &SeriesPair<'_>) -> f64 {
    let rx = ranks(pair.x);
    let ry = ranks(pair.y);
    pearson(&SeriesPair { x: &rx, y: &ry })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair<'a>(x: &'a [f64], y: &'a [f64]) -> SeriesPair<'a> {
        SeriesPair::new(x, y).unwrap()
    }

    #[test]
    fn worked_examples() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(ccc(&pair(&x, &x)).unwrap(), 1.0);
        let v = ccc(&pair(&x, &[-1.0, -2.0, -3.0])).unwrap();
        assert!((v - (-1.0 / 13.0)).abs() < 1e-15, "{v}");
        let z = [-1.5, 0.0, 0.5, 1.0];
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        assert_eq!(ccc(&pair(&z, &neg)).unwrap(), -1.0);
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pearson(&pair(&x, &x)), 1.0);
        let affine: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson(&pair(&x, &affine)) - 1.0).abs() < 1e-15);
        assert_eq!(pearson(&pair(&x, &[1.0, 3.0, 2.0, 4.0])), 0.8);
    }

    #[test]
    fn constant_series_conventions() {
        let c = [2.0, 2.0, 2.0];
        let x = [1.0, 2.0, 4.0];
        assert_eq!(pearson(&pair(&c, &x)), 0.0);
        assert_eq!(ccc(&pair(&c, &x)).unwrap(), 0.0);
        assert_eq!(ccc(&pair(&c, &[5.0, 5.0, 5.0])).unwrap(), 0.0);
        assert!(matches!(ccc(&pair(&c, &c)), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn validation() {
        assert!(SeriesPair::new(&[1.0], &[1.0]).is_err());
        assert!(SeriesPair::new(&[1.0, 2.0], &[1.0]).is_err());
        assert!(SeriesPair::new(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
        assert!(SeriesPair::new(&[1.0, 2.0], &[f64::INFINITY, 2.0]).is_err());
    }

    #[test]
    fn rank_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
        let s = spearman(&pair(&[1.0, 2.0, 3.0, 4.0], &[1.0, 4.0, 9.0, 16.0]));
        assert!((s - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn ccc_bounded_by_pearson_and_symmetric(
            xs in proptest::collection::vec(-100.0f64..100.0, 2..64),
            noise in proptest::collection::vec(-50.0f64..50.0, 64),
            shift in -10.0f64..10.0,
        ) {
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, n)| 0.5 * x + n + shift).collect();
            let p = pair(&xs, &ys);
            if let Ok(c) = ccc(&p) {
                prop_assert!(c.abs() <= pearson(&p).abs() + 1e-12);
                let back = ccc(&pair(&ys, &xs)).unwrap();
                prop_assert!((c - back).abs() < 1e-12);
            }
        }

        #[test]
        fn offset_breaks_concordance(
            xs in proptest::collection::vec(-10.0f64..10.0, 3..32),
            b in 0.01f64..5.0,
        ) {
            prop_assume!(xs.iter().any(|&v| (v - xs[0]).abs() > 1e-3));
            let shifted: Vec<f64> = xs.iter().map(|v| v + b).collect();
            prop_assert!(ccc(&pair(&xs, &shifted)).unwrap() < 1.0);
            let tiny: Vec<f64> = xs.iter().map(|v| v + 1e-9).collect();
            prop_assert!(ccc(&pair(&xs, &tiny)).unwrap() > 1.0 - 1e-9);
        }
    }
}
