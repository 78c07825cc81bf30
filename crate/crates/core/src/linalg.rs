//! Small dense eigen-solvers.
//!
//! The matrices in this crate are tiny (agent counts and state dimensions in
//! the single or low double digits), so robustness is worth more than
//! asymptotic speed. Symmetric spectra are computed by cyclic Jacobi sweeps
//! (Golub & Van Loan sec. 8.5) driven to an off-diagonal norm of `1e-12`
//! relative to the Frobenius norm. General real spectra go through a
//! Householder reduction to upper Hessenberg form followed by implicit
//! double-shift QR iteration with the usual small-subdiagonal deflation.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative off-diagonal target for the Jacobi sweep.
const JACOBI_TOL: f64 = 1e-12;
/// Jacobi sweep limit; convergence is quadratic, so this is generous.
const JACOBI_MAX_SWEEPS: usize = 60;
/// Per-eigenvalue iteration limit for the QR stage.
const QR_MAX_ITERS: usize = 60;
/// Residual allowed when verifying that an input is symmetric.
const SYMMETRY_TOL: f64 = 1e-9;

/// Eigen-decomposition of a symmetric matrix: `values` ascending, `vectors`
/// holding the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

fn symmetry_residual(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut res = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            res = res.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    res
}

/// Verify a matrix is symmetric to within `1e-9 * (1 + max|a_ij|)` and
/// return the exactly symmetrized copy `(A + A^T) / 2`.
///
/// Callers that build their operand from products (so roundoff can break
/// symmetry) must go through this before asking for a symmetric spectrum.
pub fn symmetrize_checked(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Validation(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = 1.0 + a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let res = symmetry_residual(a);
    if res > SYMMETRY_TOL * scale {
        return Err(Error::Numeric(format!(
            "symmetrization residual {res:.3e} exceeds {:.1e} * scale; \
             refusing to treat the matrix as symmetric",
            SYMMETRY_TOL
        )));
    }
    Ok((a + a.transpose()) * 0.5)
}

/// Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let mut m = symmetrize_checked(a)?;
    let n = m.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    if n <= 1 {
        return Ok(SymmetricEigen {
            values: DVector::from_iterator(n, (0..n).map(|i| m[(i, i)])),
            vectors: v,
        });
    }

    let frob = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)] * m[(p, q)])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * frob {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                // Symmetric Schur 2x2: pick the rotation annihilating a_pq.
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- J^T A J applied to rows/columns p and q.
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    // Sort ascending, carrying the eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let values = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(symmetric_eigen(a)?.values)
}

/// Spectral norm `||A||_2 = sqrt(lambda_max(A^T A))`.
pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    let gram = a.transpose() * a;
    let vals = symmetric_eigenvalues(&gram)?;
    Ok(vals[vals.len() - 1].max(0.0).sqrt())
}

/// Smallest singular value of a square matrix, `sqrt(lambda_min(A^T A))`.
pub fn smallest_singular_value(a: &DMatrix<f64>) -> Result<f64> {
    let gram = a.transpose() * a;
    let vals = symmetric_eigenvalues(&gram)?;
    Ok(vals[0].max(0.0).sqrt())
}

/// Eigenvalues of a general real square matrix, as complex numbers in no
/// particular order. Hessenberg reduction followed by double-shift QR.
pub fn general_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Validation(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    hessenberg_in_place(&mut h);
    hqr_eigenvalues(&mut h)
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg_in_place(h: &mut DMatrix<f64>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    for k in 0..(n - 2) {
        // Build the reflector annihilating column k below the subdiagonal.
        let mut alpha = 0.0f64;
        for i in (k + 1)..n {
            alpha = alpha.max(h[(i, k)].abs());
        }
        if alpha == 0.0 {
            continue;
        }
        let mut v = vec![0.0f64; n];
        let mut norm2 = 0.0;
        for i in (k + 1)..n {
            v[i] = h[(i, k)] / alpha;
            norm2 += v[i] * v[i];
        }
        let mut beta = norm2.sqrt();
        if v[k + 1] < 0.0 {
            beta = -beta;
        }
        v[k + 1] += beta;
        let denom = beta * v[k + 1];
        if denom.abs() <= f64::MIN_POSITIVE {
            continue;
        }

        // H <- P H with P = I - v v^T / denom.
        for j in k..n {
            let mut s = 0.0;
            for i in (k + 1)..n {
                s += v[i] * h[(i, j)];
            }
            s /= denom;
            for i in (k + 1)..n {
                h[(i, j)] -= s * v[i];
            }
        }
        // H <- H P.
        for i in 0..n {
            let mut s = 0.0;
            for j in (k + 1)..n {
                s += v[j] * h[(i, j)];
            }
            s /= denom;
            for j in (k + 1)..n {
                h[(i, j)] -= s * v[j];
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = 0.0;
        }
    }
}

/// Double-shift QR iteration on an upper Hessenberg matrix (EISPACK `hqr`
/// lineage). Consumes `h`; returns all eigenvalues.
fn hqr_eigenvalues(h: &mut DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = h.nrows();
    let mut eig = vec![Complex::new(0.0, 0.0); n];
    let anorm: f64 = {
        let mut s = 0.0;
        for i in 0..n {
            for j in i.saturating_sub(1)..n {
                s += h[(i, j)].abs();
            }
        }
        s.max(f64::MIN_POSITIVE)
    };

    let mut nn = n as i64 - 1;
    let mut t = 0.0f64;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            // Look for a single small subdiagonal element.
            let mut l = nn;
            while l >= 1 {
                let s = (h[(l as usize - 1, l as usize - 1)].abs()
                    + h[(l as usize, l as usize)].abs())
                .max(anorm);
                if h[(l as usize, l as usize - 1)].abs() <= f64::EPSILON * s {
                    h[(l as usize, l as usize - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }

            let x = h[(nn as usize, nn as usize)];
            if l == nn {
                eig[nn as usize] = Complex::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            let y = h[(nn as usize - 1, nn as usize - 1)];
            let w = h[(nn as usize, nn as usize - 1)] * h[(nn as usize - 1, nn as usize)];
            if l == nn - 1 {
                // 2x2 trailing block: solve its quadratic directly.
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x_sh = x + t;
                if q >= 0.0 {
                    let z = p + z.copysign(if p == 0.0 { 1.0 } else { p });
                    eig[nn as usize - 1] = Complex::new(x_sh + z, 0.0);
                    eig[nn as usize] = if z.abs() > 0.0 {
                        Complex::new(x_sh - w / z, 0.0)
                    } else {
                        Complex::new(x_sh + z, 0.0)
                    };
                } else {
                    eig[nn as usize - 1] = Complex::new(x_sh + p, z);
                    eig[nn as usize] = Complex::new(x_sh + p, -z);
                }
                nn -= 2;
                break;
            }

            if its == QR_MAX_ITERS {
                return Err(Error::Numeric(format!(
                    "QR iteration failed to converge after {QR_MAX_ITERS} steps \
                     on a {n}x{n} matrix"
                )));
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // Exceptional shift to break symmetry-induced cycling.
                t += x;
                for i in 0..=(nn as usize) {
                    h[(i, i)] -= x;
                }
                let s = h[(nn as usize, nn as usize - 1)].abs()
                    + h[(nn as usize - 1, nn as usize - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // Form shifted first column and look for two consecutive small
            // subdiagonals so the bulge chase can start late.
            let mut m = nn - 2;
            let (mut p, mut q, mut r) = (0.0f64, 0.0f64, 0.0f64);
            while m >= l {
                let mu = m as usize;
                let z = h[(mu, mu)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h[(mu + 1, mu)] + h[(mu, mu + 1)];
                q = h[(mu + 1, mu + 1)] - z - rr - ss;
                r = h[(mu + 2, mu + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h[(mu, mu - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (h[(mu - 1, mu - 1)].abs() + z.abs() + h[(mu + 1, mu + 1)].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                h[(i as usize, i as usize - 2)] = 0.0;
                if i > m + 2 {
                    h[(i as usize, i as usize - 3)] = 0.0;
                }
            }

            // Double QR step: chase the bulge from row m to nn.
            let mut k = m;
            while k <= nn - 1 {
                let ku = k as usize;
                if k != m {
                    p = h[(ku, ku - 1)];
                    q = h[(ku + 1, ku - 1)];
                    r = if k != nn - 1 { h[(ku + 2, ku - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                let mut s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    k += 1;
                    continue;
                }
                if k == m {
                    if l != m {
                        h[(ku, ku - 1)] = -h[(ku, ku - 1)];
                    }
                } else {
                    h[(ku, ku - 1)] = -s * x;
                }
                p += s;
                let (px, qy, rz) = (p / s, q / s, r / s);
                let (qp, rp) = (q / p, r / p);

                for j in ku..=(nn as usize) {
                    let mut pp = h[(ku, j)] + qp * h[(ku + 1, j)];
                    if k != nn - 1 {
                        pp += rp * h[(ku + 2, j)];
                        h[(ku + 2, j)] -= pp * rz;
                    }
                    h[(ku + 1, j)] -= pp * qy;
                    h[(ku, j)] -= pp * px;
                }
                let mmin = if nn < k + 3 { nn as usize } else { ku + 3 };
                for i in (l as usize)..=mmin {
                    let mut pp = px * h[(i, ku)] + qy * h[(i, ku + 1)];
                    if k != nn - 1 {
                        pp += rz * h[(i, ku + 2)];
                        h[(i, ku + 2)] -= pp * rp;
                    }
                    h[(i, ku + 1)] -= pp * qp;
                    h[(i, ku)] -= pp;
                }
                k += 1;
            }
        }
    }
    Ok(eig)
}
