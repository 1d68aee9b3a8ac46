//! Shared domain types: datasets, fitted subspaces, clusterings and the
//! store of queried labels.
//!
//! Cluster and class indices are 0-based inside the crate. Files, the CLI and
//! the HTTP service use 1-based values and convert at the boundary.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// How a point should be rendered for a human annotator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PayloadKind {
    #[default]
    Features,
    GrayscaleImage {
        height: usize,
        width: usize,
    },
    Trajectory {
        frames: usize,
    },
}

impl PayloadKind {
    pub fn name(&self) -> &'static str {
        match self {
            PayloadKind::Features => "features",
            PayloadKind::GrayscaleImage { .. } => "grayscale_image",
            PayloadKind::Trajectory { .. } => "trajectory",
        }
    }
}

/// Whether subspaces are affine (fitted around the cluster mean) or linear
/// through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Centering {
    #[default]
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// One point per row.
    pub points: Matrix,
    /// Ground-truth classes, 0-based. Absent when labels come from a human.
    pub true_classes: Option<Vec<usize>>,
    pub payload: PayloadKind,
}

impl Dataset {
    pub fn new(name: impl Into<String>, points: Matrix, true_classes: Option<Vec<usize>>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::InvalidInput("dataset must have at least one row and column".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset has non-finite entries".into()));
        }
        if let Some(classes) = &true_classes {
            if classes.len() != points.nrows() {
                return Err(Error::InvalidInput(format!(
                    "{} labels for {} points",
                    classes.len(),
                    points.nrows()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            points,
            true_classes,
            payload: PayloadKind::Features,
        })
    }

    pub fn with_payload(mut self, payload: PayloadKind) -> Self {
        self.payload = payload;
        self
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Number of distinct ground-truth classes, if known.
    pub fn n_classes(&self) -> Option<usize> {
        self.true_classes
            .as_ref()
            .map(|c| c.iter().copied().max().map_or(0, |m| m + 1))
    }

    /// Check the dataset is usable for `k` clusters: at least two points per
    /// cluster, and every class present when ground truth is attached.
    pub fn validate_for(&self, k: usize) -> Result<()> {
        if k < 1 || self.len() < 2 * k {
            return Err(Error::InvalidInput(format!(
                "{} points cannot support {k} clusters",
                self.len()
            )));
        }
        if let Some(classes) = &self.true_classes {
            let mut seen = vec![false; k];
            for &c in classes {
                if c >= k {
                    return Err(Error::InvalidInput(format!("class {} exceeds K={k}", c + 1)));
                }
                seen[c] = true;
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(Error::InvalidInput(format!("class {} has no points", missing + 1)));
            }
        }
        Ok(())
    }
}

/// A fitted cluster: mean, leading-eigenvector basis and the full
/// descending spectrum of the 1/n covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceModel {
    pub mean: Array1<f64>,
    /// P×q' with orthonormal columns; q' ≤ q when the cluster is small.
    pub basis: Matrix,
    pub spectrum: Array1<f64>,
    pub size: usize,
}

impl SubspaceModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Eigenvalues not captured by the basis (λ_{q+1} … λ_P).
    pub fn trailing_spectrum(&self) -> ArrayView1<'_, f64> {
        self.spectrum.slice(ndarray::s![self.rank()..])
    }

    /// Squared residual `‖r − V Vᵀ r‖²` with `r = x − μ`.
    pub fn loss(&self, x: ArrayView1<f64>) -> f64 {
        let r = &x - &self.mean;
        let coords = self.basis.t().dot(&r);
        (r.dot(&r) - coords.dot(&coords)).max(0.0)
    }

    /// Losses for every row of `points`.
    pub fn losses(&self, points: ArrayView2<f64>) -> Array1<f64> {
        let r = &points - &self.mean.view().insert_axis(Axis(0));
        let coords = r.dot(&self.basis);
        let total = r.map_axis(Axis(1), |row| row.dot(&row));
        let kept = coords.map_axis(Axis(1), |row| row.dot(&row));
        (total - kept).mapv(|v| v.max(0.0))
    }
}

/// Reconstruction loss of a single point under `model`.
pub fn reconstruction_loss(x: ArrayView1<f64>, model: &SubspaceModel) -> Result<f64> {
    if x.len() != model.dim() || model.basis.nrows() != model.dim() {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates, model expects {}",
            x.len(),
            model.dim()
        )));
    }
    Ok(model.loss(x))
}

/// N×K matrix of per-point, per-cluster losses.
pub fn loss_matrix(points: ArrayView2<f64>, models: &[SubspaceModel]) -> Array2<f64> {
    let mut out = Array2::zeros((points.nrows(), models.len()));
    for (k, model) in models.iter().enumerate() {
        out.column_mut(k).assign(&model.losses(points));
    }
    out
}

/// An assignment of every point to one of `k` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignment: Vec<usize>,
    pub k: usize,
    /// Total reconstruction error under the models the clustering came with.
    pub objective: f64,
}

impl Clustering {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = assignment.iter().find(|&&a| a >= k) {
            return Err(Error::InvalidInput(format!("cluster {} exceeds K={k}", bad + 1)));
        }
        Ok(Self {
            assignment,
            k,
            objective: f64::NAN,
        })
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| (a == cluster).then_some(i))
            .collect()
    }
}

/// Σᵢ loss(xᵢ, model of the cluster xᵢ is assigned to).
pub fn total_loss(data: &Dataset, models: &[SubspaceModel], clustering: &Clustering) -> f64 {
    data.points
        .outer_iter()
        .zip(&clustering.assignment)
        .map(|(x, &k)| models[k].loss(x))
        .sum()
}

/// Labels obtained from the oracle so far, in query order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelStore {
    labels: BTreeMap<usize, usize>,
    query_order: Vec<usize>,
}

impl LabelStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record `class` (0-based) for point `id`.
    pub fn insert(&mut self, id: usize, class: usize) -> Result<()> {
        if self.labels.contains_key(&id) {
            return Err(Error::InvalidInput(format!("point {id} is already labelled")));
        }
        self.labels.insert(id, class);
        self.query_order.push(id);
        Ok(())
    }

    pub fn class_of(&self, id: usize) -> Option<usize> {
        self.labels.get(&id).copied()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.labels.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.query_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.query_order.is_empty()
    }

    pub fn query_order(&self) -> &[usize] {
        &self.query_order
    }

    /// `(id, class)` pairs in query order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.query_order.iter().map(|&id| (id, self.labels[&id]))
    }

    /// Dense per-point view: `Some(class)` for labelled points.
    pub fn dense(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (&id, &class) in &self.labels {
            if id < n {
                out[id] = Some(class);
            }
        }
        out
    }
}
