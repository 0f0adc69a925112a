//! Pearson correlation with a two-sided p-value.

use anyhow::Result;
use regxplain_core::eval::pearson_r;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sample Pearson `r` and the two-sided p-value of the no-correlation test,
/// from `t = r √(n−2) / √(1−r²)` with `n − 2` degrees of freedom.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let r = pearson_r(xs, ys)?;
    let df = (xs.len() - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return Ok((r, 0.0));
    }
    let t = r * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df)?;
    let p = 2.0 * dist.cdf(-t.abs());
    Ok((r, p.clamp(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points() {
        let (r, p) = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        // one degree of freedom: t = 1/√3, p = 1 − 2·atan(t)/π = 2/3
        assert!((p - 2.0 / 3.0).abs() < 1e-9, "p = {p}");
    }

    #[test]
    fn perfect_fit_has_zero_p() {
        let (r, p) = pearson(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn matches_reference_value() {
        // n = 5, r = 0.8: t = 0.8·√3/0.6 = 2.3094, two-sided p = 0.10408
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [2.0, 1.0, 4.0, 3.0, 5.0];
        let (r, p) = pearson(&xs, &ys).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        assert!((p - 0.104_088).abs() < 1e-5, "p = {p}");
    }
}
