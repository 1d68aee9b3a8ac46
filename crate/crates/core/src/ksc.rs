//! K-subspaces clustering: alternate between fitting a q-dimensional affine
//! subspace to every cluster and moving each point to the subspace that
//! reconstructs it best.

use ndarray::{s, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{loss_matrix, Centering, Clustering, Dataset, LabelStore, SubspaceModel};
use crate::numkit::{scatter, second_moment, sym_eigen};

pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KscOptions {
    /// Subspace dimension.
    pub q: usize,
    pub centering: Centering,
    pub max_iter: usize,
    /// Stop once the objective decreases by less than `tol` relative.
    pub tol: f64,
}

impl KscOptions {
    pub fn new(q: usize) -> Self {
        Self {
            q,
            centering: Centering::On,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }

    pub fn centering(mut self, centering: Centering) -> Self {
        self.centering = centering;
        self
    }
}

/// Result of an alternating run.
#[derive(Debug, Clone)]
pub struct KscRun {
    pub clustering: Clustering,
    /// Models refitted on the returned assignment.
    pub models: Vec<SubspaceModel>,
    /// Objective after each assignment pass.
    pub trace: Vec<f64>,
}

/// Fit a subspace to the rows of `points`: the mean, the spectrum of the 1/n
/// covariance and its leading `q` eigenvectors.
pub fn fit_cluster(points: ArrayView2<f64>, q: usize, centering: Centering) -> Result<SubspaceModel> {
    if points.nrows() < 2 {
        return Err(Error::DegenerateCluster {
            size: points.nrows(),
            required: 2,
        });
    }
    if q >= points.ncols() {
        return Err(Error::InvalidInput(format!(
            "subspace dimension {q} must be below the ambient dimension {}",
            points.ncols()
        )));
    }
    fit_members(points, q, centering)
}

/// Like [`fit_cluster`] but accepts a single point. Small clusters get a
/// basis of at most `n − 1` columns (`n` without centering).
pub(crate) fn fit_members(points: ArrayView2<f64>, q: usize, centering: Centering) -> Result<SubspaceModel> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::DegenerateCluster { size: 0, required: 1 });
    }
    let (mean, cov) = match centering {
        Centering::On => {
            let mc = scatter(points);
            (mc.mean, mc.cov)
        }
        Centering::Off => (ndarray::Array1::zeros(points.ncols()), second_moment(points)),
    };
    let eig = sym_eigen(cov.view())?;
    let rank_bound = match centering {
        Centering::On => n - 1,
        Centering::Off => n,
    };
    let r = q.min(rank_bound);
    Ok(SubspaceModel {
        mean,
        basis: eig.eigenvectors.slice(s![.., ..r]).to_owned(),
        spectrum: eig.eigenvalues,
        size: n,
    })
}

/// Fit one model per cluster of `clustering`.
pub fn fit_models(data: &Dataset, clustering: &Clustering, q: usize, centering: Centering) -> Result<Vec<SubspaceModel>> {
    if q >= data.dim() {
        return Err(Error::InvalidInput(format!(
            "subspace dimension {q} must be below the ambient dimension {}",
            data.dim()
        )));
    }
    (0..clustering.k)
        .map(|k| {
            let rows = clustering.members(k);
            if rows.is_empty() {
                return Err(Error::ClusteringCollapsed {
                    clusters: clustering.k,
                    points: data.len(),
                });
            }
            fit_members(data.points.select(Axis(0), &rows).view(), q, centering)
        })
        .collect()
}

/// Assign each point to its lowest-loss model (ties go to the lower index).
pub fn assign(data: &Dataset, models: &[SubspaceModel]) -> Result<Clustering> {
    if models.len() < 2 {
        return Err(Error::InvalidInput("need at least two models".into()));
    }
    if let Some(m) = models.iter().find(|m| m.dim() != data.dim()) {
        return Err(Error::InvalidInput(format!(
            "model dimension {} does not match data dimension {}",
            m.dim(),
            data.dim()
        )));
    }
    let losses = loss_matrix(data.points.view(), models);
    let mut objective = 0.0;
    let assignment = losses
        .outer_iter()
        .map(|row| {
            let (k, l) = argmin(row.iter().copied());
            objective += l;
            k
        })
        .collect();
    Ok(Clustering {
        assignment,
        k: models.len(),
        objective,
    })
}

/// Index and value of the smallest element; the first one wins ties.
pub(crate) fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// Move points into empty clusters. Each empty cluster receives the movable
/// point with the largest loss under its current cluster, taken from a
/// cluster that keeps at least one member.
pub(crate) fn repair_empty(
    assignment: &mut [usize],
    k: usize,
    point_losses: &[f64],
    movable: impl Fn(usize) -> bool,
) -> Result<bool> {
    let mut sizes = vec![0usize; k];
    for &a in assignment.iter() {
        sizes[a] += 1;
    }
    let mut repaired = false;
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let donor = (0..assignment.len())
            .filter(|&i| movable(i) && sizes[assignment[i]] >= 2)
            .fold(None::<(usize, f64)>, |best, i| match best {
                Some((_, l)) if point_losses[i] <= l => best,
                _ => Some((i, point_losses[i])),
            });
        let Some((i, _)) = donor else {
            return Err(Error::ClusteringCollapsed {
                clusters: k,
                points: assignment.len(),
            });
        };
        sizes[assignment[i]] -= 1;
        assignment[i] = empty;
        sizes[empty] += 1;
        repaired = true;
    }
    Ok(repaired)
}

/// Unconstrained alternating minimisation from `init`.
pub fn run_ksc(data: &Dataset, init: &Clustering, opts: &KscOptions) -> Result<KscRun> {
    crate::kscc::run_kscc(data, init, &LabelStore::new(), opts)
}

/// Uniform random labels, redrawn until every cluster is used.
pub fn random_assignment(n: usize, k: usize, rng: &mut impl Rng) -> Result<Clustering> {
    if k == 0 || n < k {
        return Err(Error::ClusteringCollapsed { clusters: k, points: n });
    }
    loop {
        let assignment: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let c = Clustering::new(assignment, k)?;
        if c.sizes().iter().all(|&s| s > 0) {
            return Ok(c);
        }
    }
}

/// Random generator for restart `index` of a run seeded with `seed`.
/// Restart streams do not depend on how many restarts are requested.
pub fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Run KSC from `restarts` random assignments and keep the lowest objective
/// (earliest restart on ties). Restarts run in parallel.
pub fn best_of_restarts(data: &Dataset, k: usize, opts: &KscOptions, restarts: usize, seed: u64) -> Result<KscRun> {
    if restarts == 0 {
        return Err(Error::InvalidInput("restarts must be at least 1".into()));
    }
    let runs: Vec<Result<KscRun>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(seed, r);
            let init = random_assignment(data.len(), k, &mut rng)?;
            run_ksc(data, &init, opts)
        })
        .collect();

    let mut best: Option<KscRun> = None;
    let mut last_err = None;
    for run in runs {
        match run {
            Ok(run) => {
                if best
                    .as_ref()
                    .is_none_or(|b| run.clustering.objective < b.clustering.objective)
                {
                    best = Some(run);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("at least one restart ran"))
}
