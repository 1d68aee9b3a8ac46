//! First-order influence of moving a point between clusters.
//!
//! Deleting `l` points from a cluster with `n` members perturbs each
//! covariance eigenvalue to first order as
//!
//! ```text
//! λₖ(ε) ≈ n/(n−l)·λₖ − 1/(n−l)·Σᵢ αₖᵢ²,        αₖᵢ = vₖᵀ(xᵢ − x̄)
//! ```
//!
//! and adding a single point as `λₖ(ε) ≈ n/(n+1)·λₖ + αₖ²/(n+1)`. The
//! influence scores are the resulting changes in the sum of the trailing
//! eigenvalues λ_{q+1} … λ_P:
//!
//! ```text
//! U1 = Σ_{k>q} ( Σᵢ αₖᵢ² − l·λₖ ) / (n − l)      (deletion, decrease)
//! U2 = Σ_{k>q} ( αₖ² − λₖ ) / (n + 1)            (addition, increase)
//! ```
//!
//! Since the eigenvectors are orthonormal, `Σ_{k>q} αₖ²` is the point's
//! reconstruction loss, so neither score needs the trailing eigenvectors.
//! All eigenvalues are those of the 1/n covariance; the scores live on that
//! scale rather than on the scale of summed losses (which is `n` times
//! larger). [`exact_deletion_oracle`] and [`exact_addition_oracle`] refit
//! the cluster and report the exact change on both scales.

use ndarray::{ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::ksc::argmin;
use crate::model::{loss_matrix, Centering, Clustering, Dataset, LabelStore, SubspaceModel};
use crate::numkit::{cov_after_add, cov_after_delete, covariance, second_moment, sym_eigen, Matrix};

/// Scores of one unlabelled point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointScore {
    pub id: usize,
    pub assigned: usize,
    /// Cluster with the second-smallest loss.
    pub runner_up: usize,
    /// Deletion influence on the assigned cluster; `-inf` when that cluster
    /// is too small for the formula.
    pub u1: f64,
    /// Addition influence on the runner-up cluster; `+inf` when that cluster
    /// is too small for the formula.
    pub u2: f64,
    /// Loss under the assigned cluster.
    pub loss: f64,
    /// Runner-up loss minus assigned loss.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InfluenceScores {
    /// One entry per unlabelled point, in increasing id order.
    pub points: Vec<PointScore>,
}

/// Decrease in the trailing eigenvalue sum when the rows of `removed` are
/// deleted from the cluster described by `model`.
pub fn deletion_influence_batch(removed: ArrayView2<f64>, model: &SubspaceModel) -> Result<f64> {
    let n = model.size;
    let l = removed.nrows();
    let q = model.rank();
    if l == 0 {
        return Err(Error::InvalidInput("no points to delete".into()));
    }
    if n < q + 2 + l {
        return Err(Error::DegenerateCluster {
            size: n,
            required: q + 2 + l,
        });
    }
    if removed.ncols() != model.dim() {
        return Err(Error::InvalidInput(format!(
            "points have {} coordinates, model expects {}",
            removed.ncols(),
            model.dim()
        )));
    }
    let alpha_sq: f64 = model.losses(removed).sum();
    let trailing: f64 = model.trailing_spectrum().sum();
    Ok((alpha_sq - l as f64 * trailing) / (n - l) as f64)
}

/// Single-point deletion influence, `Σ_{k>q} (αₖ² − λₖ)/(n − 1)`.
pub fn deletion_influence(x: ArrayView1<f64>, model: &SubspaceModel) -> Result<f64> {
    deletion_influence_batch(x.insert_axis(Axis(0)), model)
}

/// Increase in the trailing eigenvalue sum when `x` joins the cluster,
/// `Σ_{k>q} (αₖ² − λₖ)/(n + 1)`.
pub fn addition_influence(x: ArrayView1<f64>, model: &SubspaceModel) -> Result<f64> {
    let n = model.size;
    let q = model.rank();
    if n < q + 2 {
        return Err(Error::DegenerateCluster {
            size: n,
            required: q + 2,
        });
    }
    let alpha_sq = crate::model::reconstruction_loss(x, model)?;
    let trailing: f64 = model.trailing_spectrum().sum();
    Ok((alpha_sq - trailing) / (n + 1) as f64)
}

/// Exact change caused by refitting a cluster after a deletion or addition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactChange {
    /// Change in the sum of the trailing 1/n-covariance eigenvalues; the
    /// quantity the first-order scores approximate.
    pub spectral: f64,
    /// Change in the cluster's summed reconstruction loss.
    pub loss: f64,
}

fn trailing_sum(cov: &Matrix, q: usize) -> Result<f64> {
    let eig = sym_eigen(cov.view())?;
    Ok(eig.eigenvalues.iter().skip(q).sum())
}

fn check_oracle_input(x: ArrayView1<f64>, points: ArrayView2<f64>, q: usize, min_size: usize) -> Result<()> {
    if x.len() != points.ncols() || q >= points.ncols() {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates, cluster has {}, q={q}",
            x.len(),
            points.ncols()
        )));
    }
    if points.nrows() < min_size {
        return Err(Error::DegenerateCluster {
            size: points.nrows(),
            required: min_size,
        });
    }
    Ok(())
}

/// Delete `x` (one of the rows of `points`) and refit.
/// `spectral` is `Σ_{k>q} λₖ − Σ_{k>q} λ'ₖ`, `loss` is `n·Σλₖ − (n−1)·Σλ'ₖ`.
pub fn exact_deletion_oracle(x: ArrayView1<f64>, points: ArrayView2<f64>, q: usize, centering: Centering) -> Result<ExactChange> {
    check_oracle_input(x, points, q, q + 3)?;
    let n = points.nrows();
    let (before, after) = match centering {
        Centering::On => {
            let mc = covariance(points)?;
            let after = cov_after_delete(&mc, n, x.insert_axis(Axis(0)))?;
            (mc.cov, after.cov)
        }
        Centering::Off => {
            let m = second_moment(points);
            let xx = x.insert_axis(Axis(1)).dot(&x.insert_axis(Axis(0)));
            let after = (&m * n as f64 - &xx) / (n - 1) as f64;
            (m, after)
        }
    };
    let (t0, t1) = (trailing_sum(&before, q)?, trailing_sum(&after, q)?);
    Ok(ExactChange {
        spectral: t0 - t1,
        loss: n as f64 * t0 - (n - 1) as f64 * t1,
    })
}

/// Add `x` to the cluster formed by `points` and refit.
/// `spectral` is `Σ_{k>q} λ'ₖ − Σ_{k>q} λₖ`, `loss` is `(n+1)·Σλ'ₖ − n·Σλₖ`.
pub fn exact_addition_oracle(x: ArrayView1<f64>, points: ArrayView2<f64>, q: usize, centering: Centering) -> Result<ExactChange> {
    check_oracle_input(x, points, q, q + 2)?;
    let n = points.nrows();
    let (before, after) = match centering {
        Centering::On => {
            let mc = covariance(points)?;
            let after = cov_after_add(&mc, n, x.insert_axis(Axis(0)))?;
            (mc.cov, after.cov)
        }
        Centering::Off => {
            let m = second_moment(points);
            let xx = x.insert_axis(Axis(1)).dot(&x.insert_axis(Axis(0)));
            let after = (&m * n as f64 + &xx) / (n + 1) as f64;
            (m, after)
        }
    };
    let (t0, t1) = (trailing_sum(&before, q)?, trailing_sum(&after, q)?);
    Ok(ExactChange {
        spectral: t1 - t0,
        loss: (n + 1) as f64 * t1 - n as f64 * t0,
    })
}

/// Score every unlabelled point against its assigned and runner-up clusters.
pub fn score_all(
    data: &Dataset,
    models: &[SubspaceModel],
    clustering: &Clustering,
    labels: &LabelStore,
) -> Result<InfluenceScores> {
    if models.len() < 2 {
        return Err(Error::InvalidInput("scoring needs at least two clusters".into()));
    }
    if clustering.len() != data.len() {
        return Err(Error::InvalidInput("clustering does not cover the dataset".into()));
    }
    let losses = loss_matrix(data.points.view(), models);
    let mut points = Vec::new();
    for (id, row) in losses.outer_iter().enumerate() {
        if labels.contains(id) {
            continue;
        }
        let assigned = clustering.assignment[id];
        let (runner_up, runner_loss) = argmin(
            row.iter()
                .enumerate()
                .map(|(k, &l)| if k == assigned { f64::INFINITY } else { l }),
        );
        let x = data.points.row(id);
        let u1 = deletion_influence(x, &models[assigned]).unwrap_or(f64::NEG_INFINITY);
        let u2 = addition_influence(x, &models[runner_up]).unwrap_or(f64::INFINITY);
        let loss = row[assigned];
        points.push(PointScore {
            id,
            assigned,
            runner_up,
            u1,
            u2,
            loss,
            margin: runner_loss - loss,
        });
    }
    if points.is_empty() {
        return Err(Error::NoUnlabelled);
    }
    Ok(InfluenceScores { points })
}
