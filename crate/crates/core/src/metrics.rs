//! Clustering quality: normalised mutual information and the two summaries
//! of an NMI-versus-queries curve.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Tolerance for calling a clustering perfect.
pub const PERFECT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmiNormalization {
    /// `2·I / (H(a) + H(b))`.
    #[default]
    Arithmetic,
    /// `I / sqrt(H(a)·H(b))`.
    Geometric,
}

/// NMI with arithmetic-mean normalisation and natural logarithms.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    nmi_with(a, b, NmiNormalization::Arithmetic)
}

pub fn nmi_with(a: &[usize], b: &[usize], norm: NmiNormalization) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidInput(format!(
            "partitions have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut ca: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cb: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    let entropy = |counts: &BTreeMap<usize, usize>| -> f64 {
        counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    if joint.len() == ca.len() && joint.len() == cb.len() {
        // The contingency table is a permutation: identical partitions.
        return Ok(1.0);
    }
    let (ha, hb) = (entropy(&ca), entropy(&cb));
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / n;
            let px = ca[&x] as f64 / n;
            let py = cb[&y] as f64 / n;
            pxy * (pxy / (px * py)).ln()
        })
        .sum();

    let denom = match norm {
        NmiNormalization::Arithmetic => 0.5 * (ha + hb),
        NmiNormalization::Geometric => (ha * hb).sqrt(),
    };
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Percentage of points queried when NMI first reaches 1, or 100 if never.
/// `curve` holds `(fraction queried, nmi)` pairs in query order.
pub fn queries_to_perfect(curve: &[(f64, f64)]) -> f64 {
    curve
        .iter()
        .find(|(_, nmi)| *nmi >= 1.0 - PERFECT_TOL)
        .map_or(100.0, |(f, _)| 100.0 * f)
}

/// Trapezoidal area under NMI over fraction queried ∈ [0, 1], as a
/// percentage. The curve is held flat after its last record.
pub fn auc(curve: &[(f64, f64)]) -> f64 {
    let Some(&(last_f, last_nmi)) = curve.last() else {
        return 0.0;
    };
    let mut area = 0.0;
    for w in curve.windows(2) {
        let (f0, y0) = w[0];
        let (f1, y1) = w[1];
        area += (f1 - f0) * 0.5 * (y0 + y1);
    }
    if last_f < 1.0 {
        area += (1.0 - last_f) * last_nmi;
    }
    100.0 * area
}
