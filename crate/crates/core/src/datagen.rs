//! Synthetic union-of-subspaces generators, CSV dataset files and PCA
//! preprocessing.
//!
//! A dataset on disk is a CSV matrix (one point per row, no header) with two
//! optional siblings sharing its stem: `<stem>.labels` holds one 1-based class
//! per line, and `<stem>.meta` holds `key=value` lines (`kind`, `height`,
//! `width`, `frames`, `K_true`).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{Dataset, PayloadKind};
use crate::numkit::{covariance, orthonormalize_columns, sym_eigen, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Random q-dimensional subspaces of R^P with isotropic noise.
    NoiseSweep,
    /// Planes in R³ sharing the first axis, rotated by a fixed angle.
    AngleSweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    /// Standard deviation of the additive noise.
    pub sigma: f64,
    /// Rotation between successive planes, in degrees (angle sweep only).
    pub theta: f64,
    pub k: usize,
    pub q: usize,
    pub p: usize,
    pub points_per_cluster: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Five 10-dimensional subspaces of R^20, 200 points each.
    pub fn noise_sweep(sigma: f64, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::NoiseSweep,
            sigma,
            theta: 0.0,
            k: 5,
            q: 10,
            p: 20,
            points_per_cluster: 200,
            seed,
        }
    }

    /// Three planes in R³ at `theta` degrees apart, 200 points each, σ = 0.1.
    pub fn angle_sweep(theta: f64, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::AngleSweep,
            sigma: 0.1,
            theta,
            k: 3,
            q: 2,
            p: 3,
            points_per_cluster: 200,
            seed,
        }
    }

    pub fn n_points(&self) -> usize {
        self.k * self.points_per_cluster
    }

    /// Short name used for result files, e.g. `noise_s0.2` or `angle_t30`.
    pub fn label(&self) -> String {
        match self.kind {
            SyntheticKind::NoiseSweep => format!("noise_s{}", self.sigma),
            SyntheticKind::AngleSweep => format!("angle_t{}", self.theta),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 || self.points_per_cluster < 2 {
            return Err(Error::InvalidSpec("need at least one cluster of two points".into()));
        }
        if self.q == 0 || self.q >= self.p {
            return Err(Error::InvalidSpec(format!("q={} must lie in 1..P={}", self.q, self.p)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidSpec(format!("sigma={} must be a finite non-negative number", self.sigma)));
        }
        Ok(())
    }
}

/// Generate the dataset described by `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    match spec.kind {
        SyntheticKind::NoiseSweep => gen_noise_sweep(spec),
        SyntheticKind::AngleSweep => gen_angle_sweep(spec),
    }
}

/// Orthonormal bases of the noise-sweep subspaces (Gram–Schmidt of Gaussian
/// matrices). These are the first draws from the spec's random stream.
pub fn noise_sweep_bases(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Matrix>> {
    (0..spec.k)
        .map(|_| {
            let mut b = Matrix::from_shape_fn((spec.p, spec.q), |_| StandardNormal.sample(rng));
            orthonormalize_columns(&mut b)?;
            Ok(b)
        })
        .collect()
}

/// Union of `k` random `q`-dimensional subspaces of R^P: coordinates along
/// each basis are standard normal, and every entry gets N(0, σ²) noise.
/// Points are stored cluster by cluster.
pub fn gen_noise_sweep(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.kind != SyntheticKind::NoiseSweep {
        return Err(Error::InvalidSpec("expected a noise-sweep spec".into()));
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bases = noise_sweep_bases(spec, &mut rng)?;
    sample_union(spec, &bases, &mut rng)
}

/// Plane bases for the angle sweep: plane `j` is spanned by `e₁` and
/// `(0, cos jθ, sin jθ)`.
pub fn angle_sweep_bases(spec: &SyntheticSpec) -> Vec<Matrix> {
    (0..spec.k)
        .map(|j| {
            let phi = (j as f64 * spec.theta).to_radians();
            ndarray::array![[1.0, 0.0], [0.0, phi.cos()], [0.0, phi.sin()]]
        })
        .collect()
}

/// Planes through the origin in R³ sharing the `e₁` axis, plane `j` rotated
/// by `j·θ` about it.
pub fn gen_angle_sweep(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.kind != SyntheticKind::AngleSweep {
        return Err(Error::InvalidSpec("expected an angle-sweep spec".into()));
    }
    spec.validate()?;
    if spec.p != 3 || spec.q != 2 {
        return Err(Error::InvalidSpec("the angle sweep builds planes in R³ (P=3, q=2)".into()));
    }
    if !(spec.theta > 0.0) || spec.theta * (spec.k as f64 - 1.0) >= 180.0 {
        return Err(Error::InvalidSpec(format!(
            "theta={} with K={} does not give distinct planes",
            spec.theta, spec.k
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    sample_union(spec, &angle_sweep_bases(spec), &mut rng)
}

fn sample_union(spec: &SyntheticSpec, bases: &[Matrix], rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let n = spec.n_points();
    let mut points = Array2::zeros((n, spec.p));
    let mut classes = Vec::with_capacity(n);
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    for (k, basis) in bases.iter().enumerate() {
        let coords = Matrix::from_shape_fn((spec.points_per_cluster, spec.q), |_| StandardNormal.sample(rng));
        let mut block = coords.dot(&basis.t());
        if spec.sigma > 0.0 {
            block.mapv_inplace(|v| v + noise.sample(rng));
        }
        let start = k * spec.points_per_cluster;
        points
            .slice_mut(ndarray::s![start..start + spec.points_per_cluster, ..])
            .assign(&block);
        classes.extend(std::iter::repeat_n(k, spec.points_per_cluster));
    }
    Dataset::new(spec.label(), points, Some(classes))
}

/// Principal angles (degrees, ascending) between the column spans of two
/// orthonormal bases.
pub fn principal_angles_deg(a: &Matrix, b: &Matrix) -> Result<Vec<f64>> {
    let m = a.t().dot(b);
    let gram = m.dot(&m.t());
    let eig = sym_eigen(gram.view())?;
    Ok(eig
        .eigenvalues
        .iter()
        .map(|&s2| s2.clamp(0.0, 1.0).sqrt().acos().to_degrees())
        .collect())
}

/// Default PCA dimension for face data: five components per class.
pub fn default_face_dims(k: usize) -> usize {
    5 * k
}

/// Centre the data globally and project onto its top `dims` principal
/// components. Labels and name carry over; the payload becomes plain features.
pub fn pca_preprocess(data: &Dataset, dims: usize) -> Result<Dataset> {
    if dims == 0 || dims > data.dim() {
        return Err(Error::InvalidInput(format!(
            "cannot project {}-dimensional data onto {dims} components",
            data.dim()
        )));
    }
    let mc = covariance(data.points.view())?;
    let eig = sym_eigen(mc.cov.view())?;
    let top = eig.eigenvalues[0].max(0.0);
    let rank = eig.eigenvalues.iter().filter(|&&l| l > 1e-10 * top.max(f64::MIN_POSITIVE)).count();
    if dims > rank {
        return Err(Error::RankDeficient { requested: dims, rank });
    }
    let centered = &data.points - &mc.mean.view().insert_axis(Axis(0));
    let projected = centered.dot(&eig.eigenvectors.slice(ndarray::s![.., ..dims]));
    Dataset::new(data.name.clone(), projected, data.true_classes.clone())
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

/// Parse a numeric CSV matrix (comma or whitespace separated, no header).
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        message: format!("not a finite number: {t:?}"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "empty matrix".into(),
        });
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Matrix::from_shape_vec((flat.len() / ncols, ncols), flat).expect("rows have equal length"))
}

/// Read one 1-based label per line and return them 0-based.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(lineno, l)| match l.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected a positive integer label, found {:?}", l.trim()),
            }),
        })
        .collect()
}

/// Sidecar metadata of a dataset file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetMeta {
    pub payload: PayloadKind,
    pub k_true: Option<usize>,
}

pub fn read_meta(path: &Path) -> Result<DatasetMeta> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut kind = "features".to_string();
    let (mut height, mut width, mut frames, mut k_true) = (None, None, None, None);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, found {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let number = || value.parse::<usize>().map_err(|_| err(format!("{key} must be a non-negative integer")));
        match key {
            "kind" => kind = value.to_string(),
            "height" => height = Some(number()?),
            "width" => width = Some(number()?),
            "frames" => frames = Some(number()?),
            "K_true" => k_true = Some(number()?),
            other => return Err(err(format!("unknown key {other:?}"))),
        }
    }
    let missing = |what: &str| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("kind={kind} needs {what}"),
    };
    let payload = match kind.as_str() {
        "features" => PayloadKind::Features,
        "grayscale_image" => PayloadKind::GrayscaleImage {
            height: height.ok_or_else(|| missing("height"))?,
            width: width.ok_or_else(|| missing("width"))?,
        },
        "trajectory" => PayloadKind::Trajectory {
            frames: frames.ok_or_else(|| missing("frames"))?,
        },
        other => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("unknown payload kind {other:?}"),
            })
        }
    };
    Ok(DatasetMeta { payload, k_true })
}

/// Load `path` plus its optional `.labels` and `.meta` siblings.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let points = read_matrix(path)?;
    let labels_path = sibling(path, "labels");
    let labels = if labels_path.exists() {
        Some(read_labels(&labels_path)?)
    } else {
        None
    };
    let meta_path = sibling(path, "meta");
    let meta = if meta_path.exists() {
        read_meta(&meta_path)?
    } else {
        DatasetMeta::default()
    };
    if let PayloadKind::GrayscaleImage { height, width } = meta.payload {
        if height * width != points.ncols() {
            return Err(Error::Parse {
                path: meta_path,
                line: 0,
                message: format!("{height}x{width} image does not match {} columns", points.ncols()),
            });
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok(Dataset::new(name, points, labels)?.with_payload(meta.payload))
}

/// Write `data` as `<path>` plus `.labels` (when known) and `.meta`.
pub fn write_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let mut csv = String::new();
    for row in data.points.outer_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    fs::write(path, csv).map_err(|e| Error::io(path, e))?;

    if let Some(classes) = &data.true_classes {
        let labels_path = sibling(path, "labels");
        let text: String = classes.iter().map(|c| format!("{}\n", c + 1)).collect();
        fs::write(&labels_path, text).map_err(|e| Error::io(&labels_path, e))?;
    }

    let mut meta = format!("kind={}\n", data.payload.name());
    match data.payload {
        PayloadKind::GrayscaleImage { height, width } => {
            let _ = writeln!(meta, "height={height}\nwidth={width}");
        }
        PayloadKind::Trajectory { frames } => {
            let _ = writeln!(meta, "frames={frames}");
        }
        PayloadKind::Features => {}
    }
    if let Some(k) = data.n_classes() {
        let _ = writeln!(meta, "K_true={k}");
    }
    let meta_path = sibling(path, "meta");
    fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))
}
