//! Spectral variant of the update step: queried labels are written into a
//! pairwise affinity, the edited graph is clustered spectrally, and a final
//! constrained pass enforces the labels exactly.

use std::path::Path;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datagen::read_matrix;
use crate::error::{Error, Result};
use crate::ksc::{repair_empty, KscOptions, KscRun};
use crate::kscc::run_kscc;
use crate::model::{Clustering, Dataset, LabelStore};
use crate::numkit::{sym_eigen, Matrix};

const DEGREE_FLOOR: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;
const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITER: usize = 100;

fn check_affinity(w: ArrayView2<f64>) -> Result<()> {
    let n = w.nrows();
    if n == 0 || w.ncols() != n {
        return Err(Error::InvalidInput(format!("affinity must be square, got {}x{}", n, w.ncols())));
    }
    for i in 0..n {
        for j in 0..n {
            let v = w[[i, j]];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!("affinity entry ({i}, {j}) = {v} is not a finite non-negative number")));
            }
            if j > i && (v - w[[j, i]]).abs() > SYMMETRY_TOL * (1.0 + v.abs()) {
                return Err(Error::InvalidInput(format!("affinity is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Set `w[i][j]` to 1 for labelled pairs of the same class and 0 for labelled
/// pairs of different classes. Other entries are left alone.
pub fn edit_affinity(w: ArrayView2<f64>, labels: &LabelStore) -> Result<Matrix> {
    check_affinity(w)?;
    let mut out = w.to_owned();
    let pairs: Vec<(usize, usize)> = labels.iter().collect();
    for &(i, _) in &pairs {
        if i >= out.nrows() {
            return Err(Error::InvalidInput(format!("labelled point {i} is outside the affinity")));
        }
    }
    for (a, &(i, ci)) in pairs.iter().enumerate() {
        for &(j, cj) in &pairs[a + 1..] {
            let v = if ci == cj { 1.0 } else { 0.0 };
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    Ok(out)
}

/// `I − D^{-1/2} W D^{-1/2}`, with zero degrees floored.
pub fn normalized_laplacian(w: ArrayView2<f64>) -> Result<Matrix> {
    check_affinity(w)?;
    let inv_sqrt: Vec<f64> = w
        .sum_axis(Axis(1))
        .iter()
        .map(|&d| 1.0 / d.max(DEGREE_FLOOR).sqrt())
        .collect();
    let n = w.nrows();
    let mut l = Array2::from_shape_fn((n, n), |(i, j)| -w[[i, j]] * inv_sqrt[i] * inv_sqrt[j]);
    for i in 0..n {
        l[[i, i]] += 1.0;
    }
    Ok(l)
}

/// Rows of the `k` smallest-eigenvalue eigenvectors of the normalised
/// Laplacian, each scaled to unit length.
pub fn spectral_embedding(w: ArrayView2<f64>, k: usize) -> Result<Matrix> {
    let n = w.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("cannot embed {n} points in {k} dimensions")));
    }
    let eig = sym_eigen(normalized_laplacian(w)?.view())?;
    let mut emb = eig.eigenvectors.slice(s![.., n - k..]).to_owned();
    for mut row in emb.outer_iter_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(emb)
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_seed(x: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = x.nrows();
    let mut centers = Array2::zeros((k, x.ncols()));
    centers.row_mut(0).assign(&x.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = x.outer_iter().map(|r| sq_dist(r, centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if t < d {
                    idx = i;
                    break;
                }
                t -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&x.row(pick));
        for (i, r) in x.outer_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, centers.row(c)));
        }
    }
    centers
}

/// Lloyd iterations from k-means++ seeds; returns (assignment, inertia).
fn lloyd(x: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let n = x.nrows();
    let mut centers = plus_plus_seed(x, k, rng);
    let mut assignment = vec![usize::MAX; n];
    let mut inertia = f64::INFINITY;
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        inertia = 0.0;
        for (i, r) in x.outer_iter().enumerate() {
            let (best, d) = crate::ksc::argmin(centers.outer_iter().map(|c| sq_dist(r, c)));
            inertia += d;
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Array2::<f64>::zeros(centers.raw_dim());
        let mut counts = vec![0usize; k];
        for (i, r) in x.outer_iter().enumerate() {
            let mut row = sums.row_mut(assignment[i]);
            row += &r;
            counts[assignment[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers.row_mut(c).assign(&(&sums.row(c) / counts[c] as f64));
            }
        }
    }
    (assignment, inertia)
}

/// K-means on the rows of `x` with `restarts` k-means++ initialisations.
/// The lowest-inertia result wins, the earliest restart on ties. Empty
/// clusters are refilled with the points farthest from their centre.
pub fn kmeans(x: ArrayView2<f64>, k: usize, restarts: usize, seed: u64) -> Result<Clustering> {
    let n = x.nrows();
    if k == 0 || n < k {
        return Err(Error::ClusteringCollapsed { clusters: k, points: n });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64 + 1);
        let run = lloyd(x, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    let (mut assignment, _) = best.expect("at least one restart");

    let mut sums = Array2::<f64>::zeros((k, x.ncols()));
    let mut counts = vec![0usize; k];
    for (i, r) in x.outer_iter().enumerate() {
        let mut row = sums.row_mut(assignment[i]);
        row += &r;
        counts[assignment[i]] += 1;
    }
    let dist: Vec<f64> = x
        .outer_iter()
        .enumerate()
        .map(|(i, r)| {
            let c = assignment[i];
            sq_dist(r, (&sums.row(c) / counts[c].max(1) as f64).view())
        })
        .collect();
    repair_empty(&mut assignment, k, &dist, |_| true)?;
    Clustering::new(assignment, k)
}

/// Spectral clustering of the graph `w` into `k` groups.
pub fn spectral_cluster(w: ArrayView2<f64>, k: usize, seed: u64) -> Result<Clustering> {
    if k < 2 {
        return Err(Error::InvalidInput("spectral clustering needs k >= 2".into()));
    }
    let emb = spectral_embedding(w, k)?;
    kmeans(emb.view(), k, KMEANS_RESTARTS, seed)
}

/// Edit `w` with the labels, cluster it spectrally, and refine the result with
/// a constrained K-subspaces pass so every label is honoured.
pub fn spectral_active_step(
    data: &Dataset,
    w: ArrayView2<f64>,
    labels: &LabelStore,
    k: usize,
    opts: &KscOptions,
    seed: u64,
) -> Result<KscRun> {
    if w.nrows() != data.len() {
        return Err(Error::InvalidInput(format!(
            "affinity covers {} points, dataset has {}",
            w.nrows(),
            data.len()
        )));
    }
    let edited = edit_affinity(w, labels)?;
    let init = spectral_cluster(edited.view(), k, seed)?;
    run_kscc(data, &init, labels, opts)
}

/// Read a square, symmetric, non-negative affinity matrix from CSV.
pub fn load_affinity(path: &Path) -> Result<Matrix> {
    let w = read_matrix(path)?;
    check_affinity(w.view()).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok(w)
}
