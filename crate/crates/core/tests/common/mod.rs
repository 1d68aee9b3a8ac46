//! Independent reference computations for the integration tests.

#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView2};

/// `(1/n) Σ (xᵢ − x̄)(xᵢ − x̄)ᵀ` by explicit loops.
pub fn brute_covariance(x: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let (n, p) = x.dim();
    let mut mean = Array1::<f64>::zeros(p);
    for row in x.outer_iter() {
        for j in 0..p {
            mean[j] += row[j];
        }
    }
    mean /= n as f64;
    let mut cov = Array2::<f64>::zeros((p, p));
    for row in x.outer_iter() {
        for a in 0..p {
            for b in 0..p {
                cov[[a, b]] += (row[a] - mean[a]) * (row[b] - mean[b]);
            }
        }
    }
    cov /= n as f64;
    (mean, cov)
}

/// Running first and second moments; covariance as `M/n − x̄x̄ᵀ`.
#[derive(Clone)]
pub struct Moments {
    pub n: usize,
    pub sum: Array1<f64>,
    pub outer: Array2<f64>,
}

impl Moments {
    pub fn of(x: ArrayView2<f64>) -> Self {
        let p = x.ncols();
        let mut m = Moments {
            n: 0,
            sum: Array1::zeros(p),
            outer: Array2::zeros((p, p)),
        };
        for row in x.outer_iter() {
            m.push(row.to_owned(), 1.0);
        }
        m
    }

    /// Add (`sign = 1`) or remove (`sign = −1`) one point.
    pub fn push(&mut self, x: Array1<f64>, sign: f64) {
        let p = x.len();
        for a in 0..p {
            self.sum[a] += sign * x[a];
            for b in 0..p {
                self.outer[[a, b]] += sign * x[a] * x[b];
            }
        }
        if sign > 0.0 {
            self.n += 1;
        } else {
            self.n -= 1;
        }
    }

    pub fn covariance(&self) -> Array2<f64> {
        let n = self.n as f64;
        let mean = &self.sum / n;
        let p = mean.len();
        Array2::from_shape_fn((p, p), |(a, b)| self.outer[[a, b]] / n - mean[a] * mean[b])
    }
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Smallest `Σᵣ cost[r, perm[r]]` over all permutations.
pub fn brute_min_assignment(cost: ArrayView2<f64>) -> f64 {
    permutations(cost.nrows())
        .iter()
        .map(|p| p.iter().enumerate().map(|(r, &c)| cost[[r, c]]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

pub fn max_abs_diff(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Same-class ⇔ same-cluster over every labelled pair.
pub fn constraints_hold(assignment: &[usize], labels: &[(usize, usize)]) -> bool {
    labels.iter().enumerate().all(|(a, &(i, ci))| {
        labels[a + 1..]
            .iter()
            .all(|&(j, cj)| (ci == cj) == (assignment[i] == assignment[j]))
    })
}
