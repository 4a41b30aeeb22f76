//! Dense linear algebra for the finite-matrix diagnostics.
//!
//! Self-contained symmetric eigensolver (Householder reduction to
//! tridiagonal form followed by implicit-shift QL, after the classic
//! EISPACK/Jama routines) plus the real-SPD path for resolvent diagonals:
//! for `z = E + i eta`,
//!
//! ```text
//! (H - z)^{-1} = ((H-E) + i eta) M,   M = ((H-E)^2 + eta^2 I)^{-1},
//! ```
//!
//! so one Cholesky factorization of the SPD matrix `M^{-1}` serves every
//! requested diagonal entry through two triangular solves.

use num_complex::Complex64;

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric
/// matrix given in row-major order; column `k` of the returned matrix is the
/// eigenvector for `values[k]`.
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub n: usize,
}

impl SymEigen {
    pub fn vector(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.vectors[i * self.n + k])
    }
}

/// Householder reduction to tridiagonal form with accumulation (tred2).
fn tred2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    for i in (1..n).rev() {
        let l = i;
        let mut h = 0.0;
        let mut scale = 0.0;
        if l > 1 {
            for k in 0..l {
                scale += v[i * n + k].abs();
            }
        }
        if scale == 0.0 {
            e[i] = if l > 0 { v[i * n + l - 1] } else { 0.0 };
            if l == 1 {
                e[i] = v[i * n];
            }
            d[i] = 0.0;
            continue;
        }
        if l == 1 {
            e[i] = v[i * n];
            d[i] = 0.0;
            continue;
        }
        for k in 0..l {
            v[i * n + k] /= scale;
            h += v[i * n + k] * v[i * n + k];
        }
        let mut f = v[i * n + l - 1];
        let mut g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        v[i * n + l - 1] = f - g;
        f = 0.0;
        for j in 0..l {
            v[j * n + i] = v[i * n + j] / h;
            g = 0.0;
            for k in 0..=j {
                g += v[j * n + k] * v[i * n + k];
            }
            for k in j + 1..l {
                g += v[k * n + j] * v[i * n + k];
            }
            e[j] = g / h;
            f += e[j] * v[i * n + j];
        }
        let hh = f / (h + h);
        for j in 0..l {
            e[j] -= hh * v[i * n + j];
        }
        for j in 0..l {
            let fj = v[i * n + j];
            let ej = e[j];
            for k in 0..=j {
                v[j * n + k] -= fj * e[k] + ej * v[i * n + k];
            }
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += v[i * n + k] * v[k * n + j];
                }
                for k in 0..i {
                    v[k * n + j] -= g * v[k * n + i];
                }
            }
        }
        d[i] = v[i * n + i];
        v[i * n + i] = 1.0;
        for j in 0..i {
            v[j * n + i] = 0.0;
            v[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL on the tridiagonal form, updating the vectors (tql2).
fn tql2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) -> Result<(), &'static str> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 50 {
                    return Err("QL iteration limit");
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = (p * p + 1.0).sqrt();
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in l + 2..n {
                    d[i] -= h;
                }
                f += h;
                p = d[m.min(n - 1)];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = (p * p + e[i] * e[i]).sqrt();
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[k * n + i + 1];
                        v[k * n + i + 1] = s * v[k * n + i] + c * h;
                        v[k * n + i] = c * v[k * n + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    // Sort ascending, carrying vectors.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in i + 1..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for j in 0..n {
                v.swap(j * n + i, j * n + k);
            }
        }
    }
    Ok(())
}

/// Full symmetric eigendecomposition of a row-major matrix.
pub fn sym_eigen(matrix: &[f64], n: usize) -> Result<SymEigen, &'static str> {
    assert_eq!(matrix.len(), n * n);
    let mut v = matrix.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        return Ok(SymEigen {
            values: vec![matrix[0]],
            vectors: vec![1.0],
            n,
        });
    }
    tred2(&mut v, &mut d, &mut e, n);
    tql2(&mut v, &mut d, &mut e, n)?;
    Ok(SymEigen {
        values: d,
        vectors: v,
        n,
    })
}

/// In-place Cholesky factorization `A = L L^T` of an SPD row-major matrix;
/// the lower triangle of `a` is overwritten with `L`.
pub fn cholesky(a: &mut [f64], n: usize) -> Result<(), &'static str> {
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if diag <= 0.0 {
            return Err("matrix not positive definite");
        }
        let dsqrt = diag.sqrt();
        a[j * n + j] = dsqrt;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            let row_i = &a[i * n..i * n + j];
            let row_j = &a[j * n..j * n + j];
            for k in 0..j {
                s -= row_i[k] * row_j[k];
            }
            a[i * n + j] = s / dsqrt;
        }
    }
    Ok(())
}

/// Solve `L L^T x = b` given the Cholesky factor in the lower triangle.
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// `C = A B` for square row-major matrices (blocked for cache locality).
pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0f64; n * n];
    const BS: usize = 64;
    for ii in (0..n).step_by(BS) {
        for kk in (0..n).step_by(BS) {
            for i in ii..n.min(ii + BS) {
                for k in kk..n.min(kk + BS) {
                    let aik = a[i * n + k];
                    if aik == 0.0 {
                        continue;
                    }
                    let (crow, brow) = (i * n, k * n);
                    for j in 0..n {
                        c[crow + j] += aik * b[brow + j];
                    }
                }
            }
        }
    }
    c
}

/// Full complex inverse by Gauss-Jordan with partial pivoting.
pub fn invert_complex(m: &mut [Complex64], n: usize) {
    crate::pwit::invert_complex_in_place(m, n);
}
