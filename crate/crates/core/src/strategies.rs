//! Query selection rules over [`InfluenceScores`].

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::influence::{InfluenceScores, PointScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Largest `u1 − u2`.
    Scal,
    /// Smallest addition influence `u2`.
    ScalA,
    /// Largest deletion influence `u1`.
    ScalD,
    /// Largest loss under the assigned cluster.
    MaxResid,
    /// Smallest gap between the two best clusters.
    MinMargin,
    /// Uniform over unlabelled points.
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Scal,
        Strategy::ScalA,
        Strategy::ScalD,
        Strategy::MaxResid,
        Strategy::MinMargin,
        Strategy::Random,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Scal => "scal",
            Strategy::ScalA => "scal-a",
            Strategy::ScalD => "scal-d",
            Strategy::MaxResid => "maxresid",
            Strategy::MinMargin => "minmargin",
            Strategy::Random => "random",
        }
    }

    /// Ranking key; higher is queried first. `None` for [`Strategy::Random`].
    fn key(&self, p: &PointScore, losses: &[f64]) -> Option<f64> {
        match self {
            Strategy::Scal => Some(p.u1 - p.u2),
            Strategy::ScalA => Some(-p.u2),
            Strategy::ScalD => Some(p.u1),
            Strategy::MaxResid => Some(losses.get(p.id).copied().unwrap_or(p.loss)),
            Strategy::MinMargin => Some(-p.margin),
            Strategy::Random => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

/// Pick one point to query. Ties go to the lowest point id.
pub fn select(strategy: Strategy, scores: &InfluenceScores, losses: &[f64], rng: &mut impl Rng) -> Result<usize> {
    Ok(select_batch(strategy, scores, losses, 1, rng)?[0])
}

/// Pick the `batch` best points under `strategy` (fewer if fewer are
/// unlabelled), best first.
pub fn select_batch(
    strategy: Strategy,
    scores: &InfluenceScores,
    losses: &[f64],
    batch: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    if scores.points.is_empty() {
        return Err(Error::NoUnlabelled);
    }
    if batch == 0 {
        return Err(Error::InvalidInput("batch size must be at least 1".into()));
    }
    let b = batch.min(scores.points.len());

    if strategy == Strategy::Random {
        let picks = sample(rng, scores.points.len(), b);
        return Ok(picks.into_iter().map(|i| scores.points[i].id).collect());
    }

    let mut keyed: Vec<(f64, usize)> = scores
        .points
        .iter()
        .map(|p| (strategy.key(p, losses).unwrap_or(f64::NEG_INFINITY), p.id))
        .collect();
    // Descending key, ascending id; NaN keys sort last.
    keyed.sort_by(|a, b| {
        let ka = if a.0.is_nan() { f64::NEG_INFINITY } else { a.0 };
        let kb = if b.0.is_nan() { f64::NEG_INFINITY } else { b.0 };
        kb.total_cmp(&ka).then(a.1.cmp(&b.1))
    });
    Ok(keyed.into_iter().take(b).map(|(_, id)| id).collect())
}
