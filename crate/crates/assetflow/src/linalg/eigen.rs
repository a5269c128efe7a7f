//! Dense real eigenvalue solver: balancing, elimination Hessenberg
//! reduction, and the Francis double-shift QR iteration (eigenvalues only,
//! no Schur vectors). The classical EISPACK balanc/elmhes/hqr pipeline.
//!
//! System sizes here stay in the hundreds, so a straightforward dense
//! implementation is both fast enough and deterministic.

use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix};

const RADIX: f64 = 2.0;
const MAX_ITERS_PER_EIGENVALUE: usize = 30;

/// Balance a matrix in place by exact diagonal similarity transforms
/// (powers of two, so no rounding is introduced).
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let sq = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                let mut c_scaled = c;
                while c_scaled < g {
                    f *= RADIX;
                    c_scaled *= sq;
                }
                g = r * RADIX;
                while c_scaled > g {
                    f /= RADIX;
                    c_scaled /= sq;
                }
                if (c_scaled + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Reduce to upper Hessenberg form by stabilized elementary similarity
/// transformations (pivoting on the largest subdiagonal entry).
fn hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for m in 1..n - 1 {
        let mut x = 0.0f64;
        let mut pivot = m;
        for j in m..n {
            if a[(j, m - 1)].abs() > x.abs() {
                x = a[(j, m - 1)];
                pivot = j;
            }
        }
        if pivot != m {
            for j in m - 1..n {
                a.swap((pivot, j), (m, j));
            }
            for j in 0..n {
                a.swap((j, pivot), (j, m));
            }
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = a[(i, m - 1)];
                if y != 0.0 {
                    y /= x;
                    a[(i, m - 1)] = y;
                    for j in m..n {
                        let t = y * a[(m, j)];
                        a[(i, j)] -= t;
                    }
                    for j in 0..n {
                        let t = y * a[(j, i)];
                        a[(j, m)] += t;
                    }
                }
            }
        }
    }
    // The elimination stores multipliers below the subdiagonal; the QR
    // sweep expects true zeros there.
    for i in 2..n {
        for j in 0..i - 1 {
            a[(i, j)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; destroys `a` and
/// returns the eigenvalues in arbitrary order.
fn hqr(a: &mut DMatrix<f64>, eigs: &mut Vec<Complex<f64>>) -> Result<()> {
    let n = a.nrows();
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let mut t = 0.0;
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            // Look for a single small subdiagonal element.
            let mut l = nn;
            while l >= 1 {
                let s = {
                    let s = a[(l as usize - 1, l as usize - 1)].abs() + a[(l as usize, l as usize)].abs();
                    if s == 0.0 {
                        anorm
                    } else {
                        s
                    }
                };
                if a[(l as usize, l as usize - 1)].abs() + s == s {
                    a[(l as usize, l as usize - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = a[(nn as usize, nn as usize)];
            if l == nn {
                // One real eigenvalue found.
                eigs.push(Complex::new(x + t, 0.0));
                nn -= 1;
                break;
            }
            let y = a[(nn as usize - 1, nn as usize - 1)];
            let w = a[(nn as usize, nn as usize - 1)] * a[(nn as usize - 1, nn as usize)];
            if l == nn - 1 {
                // A 2x2 block: real pair or complex conjugate pair.
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x_sh = x + t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    let first = x_sh + z;
                    let second = if z != 0.0 { x_sh - w / z } else { first };
                    eigs.push(Complex::new(first, 0.0));
                    eigs.push(Complex::new(second, 0.0));
                } else {
                    eigs.push(Complex::new(x_sh + p, z));
                    eigs.push(Complex::new(x_sh + p, -z));
                }
                nn -= 2;
                break;
            }
            if its == MAX_ITERS_PER_EIGENVALUE {
                return Err(Error::NoConvergence {
                    what: "QR eigenvalue iteration",
                    iters: its,
                });
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // Exceptional shift to break symmetry-induced cycling.
                t += x;
                for i in 0..=nn as usize {
                    a[(i, i)] -= x;
                }
                let s = a[(nn as usize, nn as usize - 1)].abs()
                    + a[(nn as usize - 1, nn as usize - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            // Form the first column of (A - x I)(A - y I) and look for two
            // consecutive small subdiagonals to start the sweep from.
            let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
            let mut m = nn - 2;
            while m >= l {
                let mu = m as usize;
                let z = a[(mu, mu)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(mu + 1, mu)] + a[(mu, mu + 1)];
                q = a[(mu + 1, mu + 1)] - z - rr - ss;
                r = a[(mu + 2, mu + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(mu, mu - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (a[(mu - 1, mu - 1)].abs() + z.abs() + a[(mu + 1, mu + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            let m = m.max(l) as usize;
            let nnu = nn as usize;
            for i in m + 2..=nnu {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }
            // Double QR sweep over rows l..nn.
            for k in m..nnu {
                let mut col_scale = 0.0;
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k != nnu - 1 { a[(k + 2, k - 1)] } else { 0.0 };
                    col_scale = p.abs() + q.abs() + r.abs();
                    if col_scale != 0.0 {
                        p /= col_scale;
                        q /= col_scale;
                        r /= col_scale;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l as usize != m {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * col_scale;
                    }
                    p += s;
                    let x_h = p / s;
                    let y_h = q / s;
                    let z_h = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nnu {
                        let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                        if k != nnu - 1 {
                            pp += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= pp * z_h;
                        }
                        a[(k + 1, j)] -= pp * y_h;
                        a[(k, j)] -= pp * x_h;
                    }
                    let mmin = nnu.min(k + 3);
                    for i in l as usize..=mmin {
                        let mut pp = x_h * a[(i, k)] + y_h * a[(i, k + 1)];
                        if k != nnu - 1 {
                            pp += z_h * a[(i, k + 2)];
                            a[(i, k + 2)] -= pp * r;
                        }
                        a[(i, k + 1)] -= pp * q;
                        a[(i, k)] -= pp;
                    }
                }
            }
        }
    }
    Ok(())
}

/// All eigenvalues of a square real matrix, sorted by descending real part
/// (ties by descending imaginary part).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if a.nrows() != a.ncols() {
        return Err(Error::validation("matrix", "must be square"));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("matrix", "entries must be finite"));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut work = a.clone();
    balance(&mut work);
    hessenberg(&mut work);
    let mut eigs = Vec::with_capacity(n);
    hqr(&mut work, &mut eigs)?;
    debug_assert_eq!(eigs.len(), n);
    // Cheap consistency check: the eigenvalue sum must reproduce the trace.
    let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
    let sum: f64 = eigs.iter().map(|e| e.re).sum();
    let scale = trace.abs().max(a.iter().map(|x| x.abs()).sum::<f64>()).max(1.0);
    if (sum - trace).abs() > 1e-7 * scale {
        log::warn!(
            "eigenvalue sum {sum:.6e} deviates from trace {trace:.6e} (n = {n})"
        );
    }
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn sorted(mut v: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    /// Match two eigenvalue multisets within a tolerance.
    fn assert_spectra_match(mine: Vec<Complex<f64>>, other: Vec<Complex<f64>>, tol: f64) {
        let a = sorted(mine);
        let b = sorted(other);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            let d = (x - y).norm();
            let s = x.norm().max(y.norm()).max(1.0);
            assert!(d <= tol * s, "eigenvalue mismatch: {x} vs {y}");
        }
    }

    #[test]
    fn diagonal_matrix() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0, -3.0]));
        let e = eigenvalues(&a).unwrap();
        assert_relative_eq!(e[0].re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(e[1].re, -2.0, epsilon = 1e-12);
        assert_relative_eq!(e[2].re, -3.0, epsilon = 1e-12);
        assert!(e.iter().all(|x| x.im == 0.0));
    }

    #[test]
    fn pure_rotation_gives_plus_minus_i() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e = eigenvalues(&a).unwrap();
        assert_relative_eq!(e[0].re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(e[0].im, 1.0, epsilon = 1e-12);
        assert_relative_eq!(e[1].im, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn companion_matrix_of_cubic_with_triple_root() {
        // lambda^3 + 3 lambda^2 + 3 lambda + 1 = (lambda + 1)^3
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 0.0, -1.0, 1.0, 0.0, -3.0, 0.0, 1.0, -3.0],
        );
        let e = eigenvalues(&a).unwrap();
        // A defective triple eigenvalue is conditioned like eps^(1/3)
        // (~5e-6 in f64), so per-root accuracy below 1e-5 is the best any
        // double-precision QR can promise. The centroid, trace/3, is exact
        // to rounding.
        let mut centroid = Complex::new(0.0, 0.0);
        for x in &e {
            assert!((x - Complex::new(-1.0, 0.0)).norm() < 1e-5, "{x}");
            centroid += x;
        }
        centroid /= 3.0;
        assert!((centroid - Complex::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn matches_nalgebra_schur_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[2usize, 3, 5, 8, 13, 21, 40] {
            for _ in 0..8 {
                let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
                let mine = eigenvalues(&a).unwrap();
                let reference: Vec<Complex<f64>> =
                    a.clone().complex_eigenvalues().iter().cloned().collect();
                assert_spectra_match(mine, reference, 1e-7);
            }
        }
    }

    #[test]
    fn trace_and_determinant_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(2..30);
            let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let e = eigenvalues(&a).unwrap();
            let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
            let sum: f64 = e.iter().map(|x| x.re).sum();
            assert_relative_eq!(sum, trace, epsilon = 1e-8 * trace.abs().max(1.0));
            let det = a.clone().lu().determinant();
            let prod = e.iter().fold(Complex::new(1.0, 0.0), |acc, x| acc * x);
            assert!(prod.im.abs() < 1e-8 * prod.norm().max(1.0));
            assert_relative_eq!(prod.re, det, max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn badly_scaled_matrix_is_balanced() {
        // Entries spanning ten orders of magnitude; balancing keeps the
        // small eigenvalue accurate.
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[1.0, 1.0e8, 1.0e-8, 2.0],
        );
        // char poly: l^2 - 3l + (2 - 1) -> roots (3 +- sqrt(5))/2
        let e = eigenvalues(&a).unwrap();
        let hi = (3.0 + 5.0f64.sqrt()) / 2.0;
        let lo = (3.0 - 5.0f64.sqrt()) / 2.0;
        assert_relative_eq!(e[0].re, hi, max_relative = 1e-10);
        assert_relative_eq!(e[1].re, lo, max_relative = 1e-10);
    }

    #[test]
    fn large_stable_matrix() {
        // Block-structured negative-definite-ish matrix of the size used by
        // the largest bundled scenario.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 410;
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.01..0.01));
        for i in 0..n {
            a[(i, i)] -= 1.0;
        }
        let e = eigenvalues(&a).unwrap();
        assert_eq!(e.len(), n);
        let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
        let sum: f64 = e.iter().map(|x| x.re).sum();
        assert_relative_eq!(sum, trace, epsilon = 1e-8 * trace.abs());
    }
}
