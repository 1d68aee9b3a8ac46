//! K-subspaces clustering under label constraints.
//!
//! Every iteration runs three stages: refit the subspaces on the current
//! assignment, move each unlabelled point to its best subspace, and match the
//! queried classes to clusters with the Hungarian algorithm so that every
//! labelled point of class `l` lands in cluster `perm(l)`. Each stage can only
//! lower the combined objective, so the objective trace is non-increasing and
//! every returned clustering honours all must-link and cannot-link pairs.

use std::collections::BTreeSet;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::ksc::{argmin, fit_models, repair_empty, KscOptions, KscRun};
use crate::model::{loss_matrix, Clustering, Dataset, LabelStore, SubspaceModel};

/// Optimal row-to-column assignment of a square cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    pub total_cost: f64,
}

/// Minimum-cost perfect matching by the O(n³) Hungarian method with
/// row/column potentials.
pub fn hungarian(cost: ArrayView2<f64>) -> Result<Assignment> {
    let (n, m) = cost.dim();
    if n != m || n == 0 {
        return Err(Error::InvalidInput(format!(
            "assignment needs a non-empty square cost matrix, got {n}x{m}"
        )));
    }
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("cost matrix has non-finite entries".into()));
    }

    // 1-based indexing; column 0 is a virtual column used to seed each row.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[col_owner[j] - 1] = j - 1;
    }
    let total_cost = row_to_col
        .iter()
        .enumerate()
        .map(|(r, &c)| cost[[r, c]])
        .sum();
    Ok(Assignment { row_to_col, total_cost })
}

/// Matching of queried classes to cluster labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassClusterMatching {
    /// `cost[[cluster, class]]`: summed loss of the labelled points of `class`
    /// under the model of `cluster`.
    pub cost: Array2<f64>,
    pub class_to_cluster: Vec<usize>,
    pub total_cost: f64,
}

/// Build the cluster×class cost matrix from per-point losses and solve the
/// matching. Classes with no queried points cost nothing anywhere; they keep
/// their own index when that cluster is free, otherwise the lowest free one.
pub fn match_classes(losses: ArrayView2<f64>, labels: &LabelStore) -> Result<ClassClusterMatching> {
    let k = losses.ncols();
    let mut cost = Array2::zeros((k, k));
    let mut seen = vec![false; k];
    for (id, class) in labels.iter() {
        if class >= k || id >= losses.nrows() {
            return Err(Error::InvalidInput(format!(
                "label ({id}, class {}) out of range",
                class + 1
            )));
        }
        seen[class] = true;
        for cluster in 0..k {
            cost[[cluster, class]] += losses[[id, cluster]];
        }
    }

    // Hungarian over classes (rows) and clusters (columns).
    let solved = hungarian(cost.t())?;
    let mut class_to_cluster = solved.row_to_col;

    let unseen: Vec<usize> = (0..k).filter(|&l| !seen[l]).collect();
    let mut free: BTreeSet<usize> = unseen.iter().map(|&l| class_to_cluster[l]).collect();
    let mut pending = Vec::new();
    for &l in &unseen {
        if free.remove(&l) {
            class_to_cluster[l] = l;
        } else {
            pending.push(l);
        }
    }
    for l in pending {
        if let Some(c) = free.pop_first() {
            class_to_cluster[l] = c;
        }
    }

    let total_cost = (0..k).map(|l| cost[[class_to_cluster[l], l]]).sum();
    Ok(ClassClusterMatching {
        cost,
        class_to_cluster,
        total_cost,
    })
}

/// Constrained objective: each unlabelled point at its best subspace, plus
/// the minimum over class→cluster matchings of the labelled points' loss.
pub fn constrained_objective(data: &Dataset, models: &[SubspaceModel], labels: &LabelStore) -> Result<f64> {
    let losses = loss_matrix(data.points.view(), models);
    let unlabelled: f64 = losses
        .outer_iter()
        .enumerate()
        .filter(|(i, _)| !labels.contains(*i))
        .map(|(_, row)| argmin(row.iter().copied()).1)
        .sum();
    let labelled = if labels.is_empty() {
        0.0
    } else {
        match_classes(losses.view(), labels)?.total_cost
    };
    Ok(unlabelled + labelled)
}

/// True when labelled points share a cluster exactly when they share a class.
pub fn satisfies_constraints(clustering: &Clustering, labels: &LabelStore) -> bool {
    let pairs: Vec<(usize, usize)> = labels.iter().collect();
    pairs.iter().enumerate().all(|(a, &(i, ci))| {
        pairs[a + 1..].iter().all(|&(j, cj)| {
            (ci == cj) == (clustering.assignment[i] == clustering.assignment[j])
        })
    })
}

/// Run the three-stage constrained alternation from `init`.
///
/// `trace[t]` is the constrained objective after the assignment and matching
/// stages of iteration `t`. The loop stops when the objective decreases by
/// less than `opts.tol` (relative), when the assignment stops changing, or
/// after `opts.max_iter` iterations. The returned models are refitted on the
/// final assignment.
pub fn run_kscc(data: &Dataset, init: &Clustering, labels: &LabelStore, opts: &KscOptions) -> Result<KscRun> {
    run_kscc_observed(data, init, labels, opts, |_, _| {})
}

/// [`run_kscc`] with a callback that sees the assignment and objective of
/// every iteration, right after the matching stage.
pub fn run_kscc_observed(
    data: &Dataset,
    init: &Clustering,
    labels: &LabelStore,
    opts: &KscOptions,
    mut observe: impl FnMut(&[usize], f64),
) -> Result<KscRun> {
    let k = init.k;
    if init.len() != data.len() {
        return Err(Error::InvalidInput(format!(
            "initial clustering covers {} points, dataset has {}",
            init.len(),
            data.len()
        )));
    }
    if k < 1 || data.len() < k {
        return Err(Error::ClusteringCollapsed {
            clusters: k,
            points: data.len(),
        });
    }
    if init.sizes().contains(&0) {
        return Err(Error::InvalidInput("initial clustering has an empty cluster".into()));
    }
    for (id, class) in labels.iter() {
        if id >= data.len() || class >= k {
            return Err(Error::InvalidInput(format!(
                "label ({id}, class {}) out of range",
                class + 1
            )));
        }
    }
    let labelled = labels.dense(data.len());

    let mut clustering = init.clone();
    let mut models = fit_models(data, &clustering, opts.q, opts.centering)?;
    let mut trace = Vec::new();

    for _ in 0..opts.max_iter {
        let losses = loss_matrix(data.points.view(), &models);
        let previous = clustering.assignment.clone();

        for (i, row) in losses.outer_iter().enumerate() {
            if labelled[i].is_none() {
                clustering.assignment[i] = argmin(row.iter().copied()).0;
            }
        }
        if !labels.is_empty() {
            let matching = match_classes(losses.view(), labels)?;
            for (id, class) in labels.iter() {
                clustering.assignment[id] = matching.class_to_cluster[class];
            }
        }

        let point_losses: Vec<f64> = clustering
            .assignment
            .iter()
            .enumerate()
            .map(|(i, &c)| losses[[i, c]])
            .collect();
        let objective: f64 = point_losses.iter().sum();
        observe(&clustering.assignment, objective);
        let stalled = trace
            .last()
            .is_some_and(|&prev: &f64| prev - objective <= opts.tol * prev.abs());
        trace.push(objective);

        let repaired = repair_empty(&mut clustering.assignment, k, &point_losses, |i| labelled[i].is_none())?;
        if stalled || (!repaired && clustering.assignment == previous) {
            break;
        }
        models = fit_models(data, &clustering, opts.q, opts.centering)?;
    }

    models = fit_models(data, &clustering, opts.q, opts.centering)?;
    clustering.objective = crate::model::total_loss(data, &models, &clustering);
    Ok(KscRun {
        clustering,
        models,
        trace,
    })
}
