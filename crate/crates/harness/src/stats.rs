//! Summary statistics and the paired significance test used by `compare`.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n − 1` denominator); 0 for fewer than two points.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn std_error(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    std_dev(xs) / (xs.len() as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedTest {
    pub mean_difference: f64,
    pub t: f64,
    pub df: usize,
    /// `P(T ≥ t)` under the null of no difference.
    pub p_value: f64,
}

/// One-sided paired t-test of `mean(a − b) > 0`.
///
/// Zero-variance differences give `p = 0` for a positive mean difference
/// and `p = 1` otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Option<PairedTest> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&diffs);
    let se = std_error(&diffs);
    let df = diffs.len() - 1;
    if se == 0.0 {
        let (t, p_value) = if m > 0.0 {
            (f64::INFINITY, 0.0)
        } else if m < 0.0 {
            (f64::NEG_INFINITY, 1.0)
        } else {
            (0.0, 1.0)
        };
        return Some(PairedTest {
            mean_difference: m,
            t,
            df,
            p_value,
        });
    }
    let t = m / se;
    let dist = StudentsT::new(0.0, 1.0, df as f64).ok()?;
    Some(PairedTest {
        mean_difference: m,
        t,
        df,
        p_value: 1.0 - dist.cdf(t),
    })
}
