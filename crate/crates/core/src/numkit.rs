//! Dense linear-algebra kernels: a cyclic Jacobi symmetric eigensolver,
//! 1/n sample covariances, and exact covariance updates for deleting rows
//! from, or adding rows to, a summarised point set.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

pub type Matrix = Array2<f64>;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const SIGN_EPS: f64 = 1e-12;

/// Eigenvalues in descending order with matching unit eigenvectors in the
/// columns of `eigenvectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let scaled = &self.eigenvectors * &self.eigenvalues.view().insert_axis(Axis(0));
        scaled.dot(&self.eigenvectors.t())
    }
}

/// Mean vector and 1/n covariance of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCov {
    pub mean: Array1<f64>,
    pub cov: Matrix,
}

fn check_finite(m: ArrayView2<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// The input is symmetrised as `(s + sᵀ)/2`. Sweeps stop once the
/// off-diagonal Frobenius norm drops below `1e-12 · ‖s‖_F` (or after 100
/// sweeps). Equal eigenvalues keep their diagonal order, and every
/// eigenvector is oriented so its first non-negligible component is positive.
pub fn sym_eigen(s: ArrayView2<f64>) -> Result<EigenDecomposition> {
    let (rows, cols) = s.dim();
    if rows != cols || rows == 0 {
        return Err(Error::InvalidInput(format!(
            "eigendecomposition needs a non-empty square matrix, got {rows}x{cols}"
        )));
    }
    check_finite(s, "matrix")?;
    let n = rows;

    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (s[[i, j]] + s[[j, i]]);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        let threshold = JACOBI_TOL * norm;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off = off_diagonal_norm(&a, n);
            if off < threshold {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, n, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort: ties keep their original diagonal position.
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));

    let eigenvalues = Array1::from_iter(order.iter().map(|&i| a[i * n + i]));
    let mut eigenvectors = Matrix::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        let lead = (0..n)
            .map(|r| v[r * n + src])
            .find(|x| x.abs() > SIGN_EPS)
            .unwrap_or(0.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            eigenvectors[[r, col]] = sign * v[r * n + src];
        }
    }

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j] * a[i * n + j];
            }
        }
    }
    acc.sqrt()
}

fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // A <- A J, then A <- Jᵀ A, with J the (p, q) plane rotation.
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

/// Column mean of `x`.
pub fn column_mean(x: ArrayView2<f64>) -> Array1<f64> {
    x.mean_axis(Axis(0))
        .unwrap_or_else(|| Array1::zeros(x.ncols()))
}

/// Sample mean and 1/n covariance `(1/n) Σ (xᵢ − x̄)(xᵢ − x̄)ᵀ`.
pub fn covariance(x: ArrayView2<f64>) -> Result<MeanCov> {
    if x.nrows() < 2 {
        return Err(Error::DegenerateCluster {
            size: x.nrows(),
            required: 2,
        });
    }
    check_finite(x, "data")?;
    Ok(scatter(x))
}

/// Mean and 1/n covariance for any non-empty point set (one point gives the
/// zero matrix).
pub(crate) fn scatter(x: ArrayView2<f64>) -> MeanCov {
    let n = x.nrows() as f64;
    let mean = column_mean(x);
    let centered = &x - &mean.view().insert_axis(Axis(0));
    let mut cov = centered.t().dot(&centered) / n;
    symmetrize(&mut cov);
    MeanCov { mean, cov }
}

/// 1/n second-moment matrix `(1/n) XᵀX` (no centering).
pub(crate) fn second_moment(x: ArrayView2<f64>) -> Matrix {
    let mut m = x.t().dot(&x) / x.nrows() as f64;
    symmetrize(&mut m);
    m
}

fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = avg;
            m[[j, i]] = avg;
        }
    }
}

fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Matrix {
    let col = a.insert_axis(Axis(1));
    let row = b.insert_axis(Axis(0));
    &col * &row
}

fn check_rows(summary: &MeanCov, rows: ArrayView2<f64>) -> Result<()> {
    let p = summary.mean.len();
    if summary.cov.dim() != (p, p) || rows.ncols() != p {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: mean has {p} entries, covariance is {:?}, rows have {} columns",
            summary.cov.dim(),
            rows.ncols()
        )));
    }
    if rows.nrows() == 0 {
        return Err(Error::InvalidInput("no rows given".into()));
    }
    check_finite(rows, "rows")
}

/// Mean and covariance of the `n − l` points that remain after deleting the
/// `l` rows of `deleted` from a set summarised by `(mean, cov)` over `n`
/// points:
///
/// ```text
/// S⁻ = S + l/(n−l)·[(S − S_I) − d dᵀ] − l²/(n−l)²·d dᵀ,   d = x̄_I − x̄
/// ```
pub fn cov_after_delete(summary: &MeanCov, n: usize, deleted: ArrayView2<f64>) -> Result<MeanCov> {
    check_rows(summary, deleted)?;
    let l = deleted.nrows();
    if l + 2 > n {
        return Err(Error::DegenerateCluster {
            size: n.saturating_sub(l),
            required: 2,
        });
    }
    let (nf, lf) = (n as f64, l as f64);
    let del = scatter(deleted);
    let d = &del.mean - &summary.mean;
    let dd = outer(d.view(), d.view());
    let eps = lf / (nf - lf);

    let mut cov = &summary.cov + &((&summary.cov - &del.cov - &dd) * eps) - &(dd * (eps * eps));
    symmetrize(&mut cov);
    let mean = (&summary.mean * nf - &del.mean * lf) / (nf - lf);
    Ok(MeanCov { mean, cov })
}

/// Mean and covariance after adding the rows of `added` to a set summarised
/// by `(mean, cov)` over `n` points. A single row goes through
/// [`cov_after_add_single`], several rows through [`cov_after_add_batch`].
pub fn cov_after_add(summary: &MeanCov, n: usize, added: ArrayView2<f64>) -> Result<MeanCov> {
    check_rows(summary, added)?;
    if added.nrows() == 1 {
        cov_after_add_single(summary, n, added.row(0))
    } else {
        cov_after_add_batch(summary, n, added)
    }
}

/// Batch addition of `l` rows with mean `x̄_I` and covariance `S_I`:
///
/// ```text
/// S⁺ = S + l/(n+l)·[(S_I − S) + d dᵀ] − l²/(n+l)²·d dᵀ,   d = x̄_I − x̄
/// ```
pub fn cov_after_add_batch(summary: &MeanCov, n: usize, added: ArrayView2<f64>) -> Result<MeanCov> {
    check_rows(summary, added)?;
    if n == 0 {
        return Err(Error::InvalidInput("cannot update an empty summary".into()));
    }
    let l = added.nrows();
    let (nf, lf) = (n as f64, l as f64);
    let add = scatter(added);
    let d = &add.mean - &summary.mean;
    let dd = outer(d.view(), d.view());
    let eps = lf / (nf + lf);

    let mut cov = &summary.cov + &((&add.cov - &summary.cov + &dd) * eps) - &(dd * (eps * eps));
    symmetrize(&mut cov);
    let mean = (&summary.mean * nf + &add.mean * lf) / (nf + lf);
    Ok(MeanCov { mean, cov })
}

/// Single-point addition:
///
/// ```text
/// S⁺ = S + 1/(n+1)·[(x̄ − x)(x̄ − x)ᵀ − S] − 1/(n+1)²·(x̄ − x)(x̄ − x)ᵀ
/// ```
pub fn cov_after_add_single(summary: &MeanCov, n: usize, x: ArrayView1<f64>) -> Result<MeanCov> {
    check_rows(summary, x.insert_axis(Axis(0)))?;
    if n == 0 {
        return Err(Error::InvalidInput("cannot update an empty summary".into()));
    }
    let nf = n as f64;
    let d = &summary.mean - &x;
    let dd = outer(d.view(), d.view());
    let eps = 1.0 / (nf + 1.0);

    let mut cov = &summary.cov + &((&dd - &summary.cov) * eps) - &(dd * (eps * eps));
    symmetrize(&mut cov);
    let mean = (&summary.mean * nf + &x) / (nf + 1.0);
    Ok(MeanCov { mean, cov })
}

/// Orthonormalise the columns of `m` in place by modified Gram–Schmidt.
/// Returns an error if a column is (numerically) dependent on the previous ones.
pub fn orthonormalize_columns(m: &mut Matrix) -> Result<()> {
    for j in 0..m.ncols() {
        for k in 0..j {
            let proj = m.column(j).dot(&m.column(k));
            let basis = m.column(k).to_owned();
            m.column_mut(j).scaled_add(-proj, &basis);
        }
        let norm = m.column(j).dot(&m.column(j)).sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidInput(format!(
                "column {j} is linearly dependent on the previous columns"
            )));
        }
        m.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Ok(())
}
