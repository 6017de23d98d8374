//! Power-series arithmetic and discrete Fourier transforms shared by the
//! function evaluators and the Gram assembly.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Coefficients of `exp(a(z))` from the coefficients of `a(z)`, both
/// truncated to the same length. Uses the derivative recurrence
/// `n c_n = sum_{k=1..n} k a_k c_{n-k}`, which only needs the inputs up to
/// the requested order and is numerically benign for the decaying
/// log-series that arise here.
pub fn exp_series(a: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut c = vec![Complex64::ZERO; a.len()];
    c[0] = a[0].exp();
    for n in 1..a.len() {
        let mut acc = Complex64::ZERO;
        for k in 1..=n {
            acc += (k as f64) * a[k] * c[n - k];
        }
        c[n] = acc / (n as f64);
    }
    c
}

/// Cauchy product of two truncated series, cut to `len` coefficients.
pub fn mul_series(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::ZERO; len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            c[i + j] += ai * bj;
        }
    }
    c
}

/// In-place forward DFT, `X_k = sum_l x_l exp(-2 pi i k l / n)`, unnormalized.
pub fn fft_forward(buf: &mut [Complex64]) {
    let fft = FftPlanner::new().plan_fft_forward(buf.len());
    fft.process(buf);
}

/// Midpoint-offset angular grid `t_l = 2 pi (l + 1/2) / n`, which avoids
/// placing nodes on the half-axis where boundary singularities are pinned
/// in the shipped configurations.
pub fn offset_angles(n: usize) -> Vec<f64> {
    (0..n)
        .map(|l| std::f64::consts::TAU * (l as f64 + 0.5) / n as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_linear_term_gives_factorials() {
        let mut a = vec![Complex64::ZERO; 12];
        a[1] = Complex64::new(1.0, 0.0);
        let c = exp_series(&a);
        let mut fact = 1.0;
        for (n, cn) in c.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            assert!((cn - Complex64::new(1.0 / fact, 0.0)).norm() < 1e-14);
        }
    }

    // log(1 - z/2) has coefficients -(1/m) 2^-m; its exponential telescopes
    // back to the polynomial 1 - z/2.
    #[test]
    fn exp_inverts_log_of_linear_polynomial() {
        let m = 40;
        let mut a = vec![Complex64::ZERO; m];
        for k in 1..m {
            a[k] = Complex64::new(-0.5f64.powi(k as i32) / k as f64, 0.0);
        }
        let c = exp_series(&a);
        assert!((c[0].re - 1.0).abs() < 1e-15);
        assert!((c[1].re + 0.5).abs() < 1e-15);
        for cn in &c[2..] {
            assert!(cn.norm() < 1e-15);
        }
    }

    #[test]
    fn mul_series_matches_polynomial_product() {
        let a = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(-1.0, 0.5),
        ];
        let b = [Complex64::new(3.0, -1.0), Complex64::new(0.5, 0.0)];
        let c = mul_series(&a, &b, 4);
        assert!((c[0] - a[0] * b[0]).norm() < 1e-15);
        assert!((c[1] - (a[0] * b[1] + a[1] * b[0])).norm() < 1e-15);
        assert!((c[2] - (a[1] * b[1] + a[2] * b[0])).norm() < 1e-15);
        assert!((c[3] - a[2] * b[1]).norm() < 1e-15);
    }

    #[test]
    fn fft_matches_naive_dft() {
        let n = 8;
        let x: Vec<Complex64> = (0..n)
            .map(|l| Complex64::new((l as f64).sin() + 0.3, 0.1 * l as f64 - 0.2))
            .collect();
        let mut buf = x.clone();
        fft_forward(&mut buf);
        for k in 0..n {
            let mut acc = Complex64::ZERO;
            for (l, &xl) in x.iter().enumerate() {
                let phase = -std::f64::consts::TAU * (k * l) as f64 / n as f64;
                acc += xl * Complex64::from_polar(1.0, phase);
            }
            assert!((buf[k] - acc).norm() < 1e-12);
        }
    }

    #[test]
    fn offset_grid_avoids_axis_and_fills_circle() {
        let n = 16;
        let t = offset_angles(n);
        assert_eq!(t.len(), n);
        assert!(t[0] > 0.0);
        assert!(*t.last().unwrap() < std::f64::consts::TAU);
        for pair in t.windows(2) {
            let step = pair[1] - pair[0];
            assert!((step - std::f64::consts::TAU / n as f64).abs() < 1e-15);
        }
    }
}
