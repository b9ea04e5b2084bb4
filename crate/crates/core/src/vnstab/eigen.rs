//! Dense complex eigensolver: balancing, Householder reduction to Hessenberg
//! form and single-shift QR with Wilkinson shifts.

use num_complex::Complex64;

use crate::error::{FuseError, Result};

type C = Complex64;
type Mat = Vec<Vec<C>>;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

fn abs1(z: C) -> f64 {
    z.re.abs() + z.im.abs()
}

fn check_square(m: &[Vec<C>]) -> Result<usize> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(FuseError::InvalidArgument("eigenvalues need a square matrix".into()));
    }
    if m.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(FuseError::InvalidArgument("matrix has non-finite entries".into()));
    }
    Ok(n)
}

/// Diagonal similarity by powers of two; returns the scaling `d` with
/// `balanced = D⁻¹ A D`.
fn balance(a: &mut Mat) -> Vec<f64> {
    let n = a.len();
    let mut d = vec![1.0; n];
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[j][i]);
                    r += abs1(a[i][j]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c >= g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    a[i][j] /= f;
                    a[j][i] *= f;
                }
            }
        }
    }
    d
}

/// Householder reduction `H = Qᴴ A Q`; `q` accumulates `Q` when given.
fn hessenberg(a: &mut Mat, mut q: Option<&mut Mat>) {
    let n = a.len();
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| a[i][k].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[k + 1][k];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<C> = (k + 1..n).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vn;
        }
        // left: A ← (I − 2vvᴴ) A on rows k+1..n
        for j in 0..n {
            let s: C = v.iter().enumerate().map(|(t, vi)| vi.conj() * a[k + 1 + t][j]).sum();
            for (t, vi) in v.iter().enumerate() {
                a[k + 1 + t][j] -= 2.0 * vi * s;
            }
        }
        // right: A ← A (I − 2vvᴴ) on columns k+1..n
        for row in a.iter_mut() {
            let s: C = v.iter().enumerate().map(|(t, vi)| row[k + 1 + t] * vi).sum();
            for (t, vi) in v.iter().enumerate() {
                row[k + 1 + t] -= 2.0 * s * vi.conj();
            }
        }
        if let Some(q) = q.as_deref_mut() {
            for row in q.iter_mut() {
                let s: C = v.iter().enumerate().map(|(t, vi)| row[k + 1 + t] * vi).sum();
                for (t, vi) in v.iter().enumerate() {
                    row[k + 1 + t] -= 2.0 * s * vi.conj();
                }
            }
        }
        for i in k + 2..n {
            a[i][k] = ZERO;
        }
    }
}

/// Rotation `[c s; −s̄ c]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: C, b: C) -> (f64, C) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, ONE);
    }
    let norm = na.hypot(nb);
    (na / norm, (a / na) * b.conj() / norm)
}

fn rot_rows(h: &mut Mat, k: usize, c: f64, s: C, cols: std::ops::Range<usize>) {
    for j in cols {
        let x = h[k][j];
        let y = h[k + 1][j];
        h[k][j] = c * x + s * y;
        h[k + 1][j] = -s.conj() * x + c * y;
    }
}

fn rot_cols(h: &mut Mat, k: usize, c: f64, s: C, rows: std::ops::Range<usize>) {
    for row in &mut h[rows] {
        let x = row[k];
        let y = row[k + 1];
        row[k] = c * x + s.conj() * y;
        row[k + 1] = -s * x + c * y;
    }
}

/// Reduces Hessenberg `h` to upper triangular Schur form in place.
fn schur(h: &mut Mat, mut z: Option<&mut Mat>) -> Result<()> {
    let n = h.len();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let hnorm = h.iter().flatten().fold(0.0f64, |m, v| m.max(abs1(*v)));
    let small = f64::MIN_POSITIVE * (n as f64) / eps;
    let mut hi = n - 1;
    let mut iters = 0usize;
    let mut since_deflation = 0usize;
    let cap = 100 * n.max(10);
    while hi > 0 {
        // locate the active block [lo, hi]
        let mut lo = hi;
        while lo > 0 {
            let s = abs1(h[lo][lo]) + abs1(h[lo - 1][lo - 1]);
            let s = if s == 0.0 { hnorm } else { s };
            if abs1(h[lo][lo - 1]) <= (eps * s).max(small) {
                h[lo][lo - 1] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        iters += 1;
        since_deflation += 1;
        if iters > cap {
            return Err(FuseError::EigenNoConvergence(iters));
        }
        let mu = if since_deflation % 11 == 10 {
            h[hi][hi] + C::new(0.75 * abs1(h[hi][hi - 1]), 0.0)
        } else {
            let (a, b, c, d) = (h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi]);
            let tr = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b * c).sqrt();
            let (l1, l2) = (tr + disc, tr - disc);
            if (l1 - d).norm() < (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };
        let (c, s) = givens(h[lo][lo] - mu, h[lo + 1][lo]);
        rot_rows(h, lo, c, s, lo..n);
        rot_cols(h, lo, c, s, 0..(lo + 3).min(hi + 1));
        if let Some(z) = z.as_deref_mut() {
            rot_cols(z, lo, c, s, 0..n);
        }
        for k in lo + 1..hi {
            let (c, s) = givens(h[k][k - 1], h[k + 1][k - 1]);
            rot_rows(h, k, c, s, k - 1..n);
            h[k + 1][k - 1] = ZERO;
            rot_cols(h, k, c, s, 0..(k + 3).min(hi + 1));
            if let Some(z) = z.as_deref_mut() {
                rot_cols(z, k, c, s, 0..n);
            }
        }
    }
    Ok(())
}

/// Eigenvalues of a dense complex matrix (unordered).
pub fn eigen_dense(m: &[Vec<C>]) -> Result<Vec<C>> {
    check_square(m)?;
    let mut a: Mat = m.to_vec();
    balance(&mut a);
    hessenberg(&mut a, None);
    schur(&mut a, None)?;
    Ok((0..a.len()).map(|i| a[i][i]).collect())
}

/// Eigenvalues and unit-norm right eigenvectors (`vectors[j]` belongs to `values[j]`).
pub fn eigen_dense_with_vectors(m: &[Vec<C>]) -> Result<(Vec<C>, Vec<Vec<C>>)> {
    let n = check_square(m)?;
    let mut a: Mat = m.to_vec();
    let d = balance(&mut a);
    let mut z: Mat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { ONE } else { ZERO }).collect())
        .collect();
    hessenberg(&mut a, Some(&mut z));
    schur(&mut a, Some(&mut z))?;
    let t = a;
    let tnorm = t.iter().flatten().fold(0.0f64, |s, v| s.max(v.norm())).max(f64::MIN_POSITIVE);
    let values: Vec<C> = (0..n).map(|i| t[i][i]).collect();
    let mut vectors = Vec::with_capacity(n);
    for j in 0..n {
        let lam = values[j];
        let mut y = vec![ZERO; n];
        y[j] = ONE;
        for i in (0..j).rev() {
            let s: C = (i + 1..=j).map(|k| t[i][k] * y[k]).sum();
            let mut den = t[i][i] - lam;
            if den.norm() < f64::EPSILON * tnorm {
                den = C::new(f64::EPSILON * tnorm, 0.0);
            }
            y[i] = -s / den;
        }
        let mut v: Vec<C> = (0..n)
            .map(|r| d[r] * (0..=j).map(|k| z[r][k] * y[k]).sum::<C>())
            .collect();
        let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= nv;
        }
        vectors.push(v);
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn sorted(mut v: Vec<C>) -> Vec<C> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn small_cases() {
        let id: Mat = (0..3).map(|i| (0..3).map(|j| if i == j { ONE } else { ZERO }).collect()).collect();
        for l in eigen_dense(&id).unwrap() {
            assert!((l - ONE).norm() < 1e-15);
        }
        let rot = vec![vec![ZERO, ONE], vec![-ONE, ZERO]];
        let l = sorted(eigen_dense(&rot).unwrap());
        assert!((l[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((l[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert!(eigen_dense(&[]).unwrap().is_empty());
        assert_eq!(eigen_dense(&[vec![c(2.0, 1.0)]]).unwrap(), vec![c(2.0, 1.0)]);
    }

    #[test]
    fn triangular_and_jordan() {
        let m = vec![
            vec![c(1.0, 0.0), c(5.0, 0.0), c(-2.0, 0.0)],
            vec![ZERO, c(3.0, 0.0), c(1.0, 0.0)],
            vec![ZERO, ZERO, c(-4.0, 0.0)],
        ];
        let l = sorted(eigen_dense(&m).unwrap());
        assert!((l[0] - c(-4.0, 0.0)).norm() < 1e-13);
        assert!((l[2] - c(3.0, 0.0)).norm() < 1e-13);
        let j = vec![vec![c(2.0, 0.0), ONE], vec![ZERO, c(2.0, 0.0)]];
        for l in eigen_dense(&j).unwrap() {
            assert!((l - c(2.0, 0.0)).norm() < 1e-7);
        }
    }
}
