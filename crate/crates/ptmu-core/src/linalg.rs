//! Dense Hermitian linear algebra for the small Gram and normal systems:
//! Cholesky factorization with a diagonal-jitter ladder for systems that sit
//! at the edge of positive definiteness.

use num_complex::Complex64;

use crate::error::Error;
use crate::Result;

/// In-place lower Cholesky factor of a Hermitian positive definite matrix in
/// row-major order; only the lower triangle of the input is read. Fails on
/// the first nonpositive pivot.
pub fn cholesky_in_place(a: &mut [Complex64], n: usize) -> Result<()> {
    assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NonPsd { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        a[j * n + j] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / ljj;
        }
    }
    Ok(())
}

/// Solves `L L^H x = b` given the lower factor from [`cholesky_in_place`].
pub fn cholesky_solve(l: &[Complex64], n: usize, b: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(b.len(), n);
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let lik = l[i * n + k];
            x[i] = x[i] - lik * x[k];
        }
        x[i] /= l[i * n + i].re;
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let lki = l[k * n + i];
            x[i] = x[i] - lki.conj() * x[k];
        }
        x[i] /= l[i * n + i].re;
    }
    x
}

/// Solves a Hermitian positive semidefinite system, escalating a relative
/// diagonal jitter when the bare factorization fails. Returns the solution
/// and the jitter that was actually applied (zero in the clean case). The
/// final rung doubles as the positive-semidefiniteness check: a matrix that
/// rejects a relative shift of `1e-8` is reported as non-PSD.
pub fn solve_hermitian(a: &[Complex64], n: usize, b: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
    assert_eq!(a.len(), n * n);
    let diag_scale = (0..n)
        .map(|i| a[i * n + i].re.abs())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut last = Error::NonPsd { index: 0, pivot: 0.0 };
    for rel in [0.0, 1e-14, 1e-12, 1e-10, 1e-8] {
        let mut l = a.to_vec();
        let jitter = rel * diag_scale;
        for i in 0..n {
            l[i * n + i] += Complex64::new(jitter, 0.0);
        }
        match cholesky_in_place(&mut l, n) {
            Ok(()) => return Ok((cholesky_solve(&l, n, b), jitter)),
            Err(e) => last = e,
        }
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matvec(a: &[Complex64], n: usize, x: &[Complex64]) -> Vec<Complex64> {
        (0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
            .collect()
    }

    #[test]
    fn solves_known_real_system() {
        // [[4, 2], [2, 3]] x = [8, 7] has solution [5/4, 3/2]
        let a: Vec<Complex64> = [4.0, 2.0, 2.0, 3.0]
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let b = vec![Complex64::new(8.0, 0.0), Complex64::new(7.0, 0.0)];
        let (x, jitter) = solve_hermitian(&a, 2, &b).unwrap();
        assert_eq!(jitter, 0.0);
        assert!((x[0].re - 1.25).abs() < 1e-14 && x[0].im.abs() < 1e-14);
        assert!((x[1].re - 1.5).abs() < 1e-14 && x[1].im.abs() < 1e-14);
    }

    #[test]
    fn solves_complex_hermitian_system() {
        // A = M^H M + I for a fixed M is Hermitian positive definite.
        let m = [
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.3, 0.2),
            Complex64::new(0.0, 1.0),
            Complex64::new(2.0, -0.1),
            Complex64::new(0.7, 0.0),
            Complex64::new(-1.0, 0.4),
            Complex64::new(0.2, 0.2),
            Complex64::new(0.5, -0.5),
            Complex64::new(1.5, 0.0),
        ];
        let n = 3;
        let mut a = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::ZERO;
                for k in 0..n {
                    s += m[k * n + i].conj() * m[k * n + j];
                }
                a[i * n + j] = s + if i == j { Complex64::ONE } else { Complex64::ZERO };
            }
        }
        let b = vec![
            Complex64::new(1.0, -1.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(-0.5, 0.3),
        ];
        let (x, jitter) = solve_hermitian(&a, n, &b).unwrap();
        assert_eq!(jitter, 0.0);
        let r = matvec(&a, n, &x);
        for i in 0..n {
            assert!((r[i] - b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a: Vec<Complex64> = [1.0, 2.0, 2.0, 1.0]
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let b = vec![Complex64::ONE, Complex64::ONE];
        match solve_hermitian(&a, 2, &b) {
            Err(Error::NonPsd { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected non-psd rejection, got {other:?}"),
        }
    }

    #[test]
    fn singular_psd_system_uses_jitter() {
        // rank-one v v^H with a consistent right-hand side
        let v = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let n = 2;
        let mut a = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = v[i] * v[j].conj();
            }
        }
        let b: Vec<Complex64> = v.to_vec();
        let (x, jitter) = solve_hermitian(&a, n, &b).unwrap();
        assert!(jitter > 0.0);
        let r = matvec(&a, n, &x);
        for i in 0..n {
            assert!((r[i] - b[i]).norm() < 1e-5);
        }
    }
}
