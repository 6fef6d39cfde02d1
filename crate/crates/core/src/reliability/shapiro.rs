use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 3;
pub const MAX_SAMPLES: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p_value: f64,
}

/// `c[0] + c[1] x + c[2] x^2 + ...`
fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Coefficients `a_1..a_{n/2}` of the lower half, in Royston's approximation.
fn coefficients(n: usize, std_normal: &Normal) -> Vec<f64> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an25 = n as f64 + 0.25;
    let m: Vec<f64> = (1..=half)
        .map(|i| std_normal.inverse_cdf((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        (2, fac)
    } else {
        (1, ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt())
    };
    for i in first..half {
        a[i] = -m[i] / fac;
    }
    a
}

/// Shapiro-Wilk normality test using Royston's (1995) approximation of the
/// coefficients and of the null distribution of W.
pub fn shapiro_wilk(samples: &[f64]) -> Result<ShapiroWilk> {
    let n = samples.len();
    if !(MIN_SAMPLES..=MAX_SAMPLES).contains(&n) {
        return Err(Error::TestInapplicable(format!(
            "{n} samples, the test needs {MIN_SAMPLES} to {MAX_SAMPLES}"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::TestInapplicable("non-finite sample".into()));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range < 1e-19 * x[n - 1].abs().max(1.0) {
        return Err(Error::TestInapplicable("samples have no spread".into()));
    }
    let std_normal = Normal::standard();
    let a = coefficients(n, &std_normal);

    // scale by the range for conditioning
    let xs: Vec<f64> = x.iter().map(|v| v / range).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ssx: f64 = xs.iter().map(|v| (v - mean).powi(2)).sum();
    let mut sax = 0.0;
    for (i, &ai) in a.iter().enumerate() {
        sax += ai * (xs[n - 1 - i] - xs[i]);
    }
    let w = (sax * sax / ssx).min(1.0);

    let p_value = if n == 3 {
        const PI6: f64 = 6.0 / std::f64::consts::PI;
        const STQR: f64 = std::f64::consts::FRAC_PI_3;
        (PI6 * (w.sqrt().asin() - STQR)).max(0.0)
    } else {
        null_p_value(n, w, &std_normal)
    };
    Ok(ShapiroWilk { w, p_value })
}

fn null_p_value(n: usize, w: f64, std_normal: &Normal) -> f64 {
    const G: [f64; 2] = [-2.273, 0.459];
    const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    let an = n as f64;
    let mut y = (1.0 - w).ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    std_normal.sf((y - m) / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(shapiro_wilk(&[1.0, 2.0]), Err(Error::TestInapplicable(_))));
        assert!(matches!(shapiro_wilk(&[2.0; 10]), Err(Error::TestInapplicable(_))));
        assert!(shapiro_wilk(&vec![0.5; 5001]).is_err());
    }

    #[test]
    fn three_points() {
        // equally spaced points are as normal as three points get
        let r = shapiro_wilk(&[1.0, 2.0, 3.0]).unwrap();
        assert!((r.w - 1.0).abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coefficients_have_unit_norm() {
        let z = Normal::standard();
        for n in [4, 5, 6, 11, 12, 50, 501] {
            let a = coefficients(n, &z);
            let ss: f64 = 2.0 * a.iter().map(|v| v * v).sum::<f64>();
            assert!((ss - 1.0).abs() < 1e-6, "n={n}: {ss}");
        }
    }
}
