//! Dense symmetric linear algebra used across the crate.
//!
//! Everything here operates on `f64` and is deterministic. The
//! eigendecomposition is the classic Householder tridiagonalization followed
//! by implicit-shift QL (the EISPACK `tred2`/`tql2` pair), which is accurate
//! to machine precision for the symmetric matrices produced by Gram
//! computations. Solves with `K/n + λI` go through an unpivoted Cholesky
//! factorization; with λ > 0 these matrices are positive definite.

use alloc::vec;
use alloc::vec::Vec;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
// Float math resolves through std's inherent methods whenever std is in the
// crate graph (tests); the trait supplies it in pure no_std builds.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};

/// Eigendecomposition of a symmetric matrix: `a = vectors · diag(values) · vectorsᵀ`.
///
/// Eigenvalues are in ascending order; eigenvectors are the columns of
/// `vectors` in matching order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// Largest absolute difference between `a` and its transpose.
pub fn max_asymmetry(a: ArrayView2<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

/// Rejects matrices that are not square-symmetric up to a scale-aware tolerance.
pub fn check_symmetric(a: ArrayView2<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(CoreError::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let scale = a.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let asymmetry = max_asymmetry(a);
    if asymmetry > 1e-8 * scale {
        return Err(CoreError::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// Symmetric eigendecomposition via `tred2` + `tql2`.
///
/// The input is symmetrized as `(a + aᵀ)/2` before factorization so that
/// round-off level asymmetry cannot perturb the result; callers that must
/// reject asymmetric input do so through [`check_symmetric`].
pub fn sym_eigen(a: ArrayView2<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if n == 0 {
        return Err(CoreError::EmptyInput("sym_eigen"));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::NonFinite("sym_eigen input"));
    }

    // Row-major working copy of (a + aᵀ)/2; columns end up as eigenvectors.
    let mut v: Vec<f64> = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = 0.5 * (a[[i, j]] + a[[j, i]]);
        }
    }
    let mut d = vec![0.0_f64; n];
    let mut e = vec![0.0_f64; n];

    tred2(&mut v, &mut d, &mut e, n);
    tql2(&mut v, &mut d, &mut e, n)?;

    let values = Array1::from(d);
    let vectors = Array2::from_shape_vec((n, n), v).expect("square shape");
    Ok(SymEigen { values, vectors })
}

/// Householder reduction to tridiagonal form, accumulating the transform in `v`.
fn tred2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    if n == 1 {
        d[0] = v[0];
        v[0] = 1.0;
        e[0] = 0.0;
        return;
    }
    for (j, dj) in d.iter_mut().enumerate() {
        *dj = v[(n - 1) * n + j];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the Householder transformations.
    for i in 0..(n - 1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal system, updating eigenvectors in `v`.
/// Eigenvalues come out ascending.
fn tql2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0_f64;
    let mut tst1 = 0.0_f64;
    let eps = 2.0_f64.powi(-52);
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
                if iter > 80 {
                    return Err(CoreError::NonFinite("tql2 failed to converge"));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0_f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0_f64;
                let mut s2 = 0.0_f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
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

    // Sort ascending, carrying eigenvectors along.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().take(n).skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d.swap(k, i);
            for row in 0..n {
                v.swap(row * n + i, row * n + k);
            }
        }
    }
    Ok(())
}

/// Unpivoted Cholesky factorization `a = l·lᵀ` (lower triangular `l`).
pub fn cholesky(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = 0.5 * (a[[i, j]] + a[[j, i]]);
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(CoreError::NotPositiveDefinite {
                        pivot: sum,
                        index: i,
                    });
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `l·lᵀ·x = b` given the Cholesky factor `l`.
pub fn cho_solve(l: &Array2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    let mut x = b.to_owned();
    // Forward substitution l·y = b.
    for i in 0..n {
        let mut sum = x[i];
        for k in 0..i {
            sum -= l[[i, k]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    // Back substitution lᵀ·x = y.
    for i in (0..n).rev() {
        let mut sum = x[i];
        for k in (i + 1)..n {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// `xᵀ·(l·lᵀ)⁻¹·x` via one forward substitution.
pub fn cho_quad_form(l: &Array2<f64>, x: ArrayView1<f64>) -> f64 {
    let n = l.nrows();
    debug_assert_eq!(x.len(), n);
    let mut y = x.to_owned();
    let mut acc = 0.0;
    for i in 0..n {
        let mut sum = y[i];
        for k in 0..i {
            sum -= l[[i, k]] * y[k];
        }
        let yi = sum / l[[i, i]];
        y[i] = yi;
        acc += yi * yi;
    }
    acc
}

/// `Tr[(l·lᵀ)⁻¹]`, the squared Frobenius norm of `l⁻¹`.
pub fn cho_inverse_trace(l: &Array2<f64>) -> f64 {
    let n = l.nrows();
    let mut trace = 0.0;
    let mut col = vec![0.0_f64; n];
    for j in 0..n {
        // Column j of l⁻¹ by forward substitution on e_j.
        for (i, c) in col.iter_mut().enumerate() {
            *c = if i == j { 1.0 } else { 0.0 };
        }
        for i in j..n {
            let mut sum = col[i];
            for k in j..i {
                sum -= l[[i, k]] * col[k];
            }
            let value = sum / l[[i, i]];
            col[i] = value;
            trace += value * value;
        }
    }
    trace
}
