//! Norms, normalisation, distances and the composed reward pseudometrics.
//!
//! A metric spec `CANON-NORM-DIST` computes `m(s(R₁), s(R₂))` where
//! `s(R) = c(R) / n(c(R))`. Weighted norms and distances are weighted by the
//! transition function `τ`; Pearson-type distances are weighted by the
//! product distribution `D_S ⊗ D_A ⊗ D_S`. The two weight sources are never
//! mixed.

mod spec;

pub use spec::{all_metric_specs, parse_metric_spec, DistId, MetricSpec, NormId};

use crate::canon::{canon_dard, canon_epic, canonicalise, CanonId, CanonOptions};
use crate::error::{Error, Result};
use crate::mdp::{expected_reward, optimal_from_expected, return_from_expected, worst_from_expected, Mdp};
use crate::policy::Policy;
use crate::reward::RewardTable;

/// Normalisation is skipped when `n(c(R))` does not exceed this.
pub const NORMALISATION_FLOOR: f64 = 1e-12;

/// Distributions `D_S` and `D_A` used by EPIC, DARD and Pearson distances.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionPair {
    dist_s: Vec<f64>,
    dist_a: Vec<f64>,
}

impl DistributionPair {
    pub fn new(dist_s: Vec<f64>, dist_a: Vec<f64>) -> Result<Self> {
        for dist in [&dist_s, &dist_a] {
            if let Some(i) = dist.iter().position(|&p| !(p > 0.0)) {
                return Err(Error::ZeroSupport(i));
            }
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("distribution sums to {total}, not 1")));
            }
        }
        Ok(Self { dist_s, dist_a })
    }

    #[cfg(test)]
    pub(crate) fn new_unchecked(dist_s: Vec<f64>, dist_a: Vec<f64>) -> Self {
        Self { dist_s, dist_a }
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            dist_s: vec![1.0 / n_states as f64; n_states],
            dist_a: vec![1.0 / n_actions as f64; n_actions],
        }
    }

    pub fn dist_s(&self) -> &[f64] {
        &self.dist_s
    }

    pub fn dist_a(&self) -> &[f64] {
        &self.dist_a
    }

    /// `D_S(s) D_A(a) D_S(s')` flattened like a reward table.
    pub fn product_weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dist_s.len().pow(2) * self.dist_a.len());
        for &ps in &self.dist_s {
            for &pa in &self.dist_a {
                for &px in &self.dist_s {
                    out.push(ps * pa * px);
                }
            }
        }
        out
    }
}

fn lp_norm(values: &[f64], weights: Option<&[f64]>, norm: NormId) -> f64 {
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    match norm {
        NormId::L1 | NormId::WeightedL1 => values.iter().enumerate().map(|(i, v)| w(i) * v.abs()).sum(),
        NormId::L2 | NormId::WeightedL2 => values.iter().enumerate().map(|(i, v)| w(i) * v * v).sum::<f64>().sqrt(),
        // The weighted sup-norm is the p → ∞ limit of the weighted p-norms:
        // the largest magnitude on the support of τ.
        NormId::Linf | NormId::WeightedLinf => values
            .iter()
            .enumerate()
            .filter(|&(i, _)| w(i) > 0.0)
            .fold(0.0, |m, (_, v)| m.max(v.abs())),
        NormId::Jrange | NormId::Skip => unreachable!("not an entrywise norm"),
    }
}

/// `max_π J(π) − min_π J(π)` for `reward`.
pub fn j_range(mdp: &Mdp, reward: &RewardTable) -> Result<f64> {
    mdp.check_reward(reward)?;
    let expected = expected_reward(mdp, reward);
    j_range_expected(mdp, &expected)
}

pub(crate) fn j_range_expected(mdp: &Mdp, expected: &[f64]) -> Result<f64> {
    let best = optimal_from_expected(mdp, expected)?;
    let worst = worst_from_expected(mdp, expected)?;
    let hi = return_from_expected(mdp, expected, &best)?;
    let lo = return_from_expected(mdp, expected, &worst)?;
    Ok((hi - lo).max(0.0))
}

/// Evaluates `norm` on `reward`; weighted variants are weighted by `τ`.
pub fn norm_eval(norm: NormId, reward: &RewardTable, mdp: &Mdp) -> Result<f64> {
    mdp.check_reward(reward)?;
    match norm {
        NormId::Skip => Err(Error::SkipNotANorm),
        NormId::Jrange => j_range(mdp, reward),
        NormId::L1 | NormId::L2 | NormId::Linf => Ok(lp_norm(reward.values(), None, norm)),
        NormId::WeightedL1 | NormId::WeightedL2 | NormId::WeightedLinf => {
            Ok(lp_norm(reward.values(), Some(mdp.transitions()), norm))
        }
    }
}

/// Canonicalisation parameters implied by a spec's normalisation slot.
pub fn canon_options_for(spec: &MetricSpec, mdp: &Mdp, dists: &DistributionPair) -> CanonOptions {
    let minimal_norm = match spec.norm {
        NormId::L1 | NormId::L2 | NormId::WeightedL1 | NormId::WeightedL2 => spec.norm,
        _ => NormId::L2,
    };
    let l2_weights = (spec.norm == NormId::WeightedL2).then(|| mdp.transition_table());
    CanonOptions {
        dists: dists.clone(),
        val_policy: Policy::uniform(mdp.n_states(), mdp.n_actions()),
        minimal_norm,
        l2_weights,
    }
}

/// Divides by the norm unless it is (numerically) zero or skipped.
pub fn normalise(norm: NormId, canonical: RewardTable, mdp: &Mdp) -> Result<RewardTable> {
    if norm == NormId::Skip {
        return Ok(canonical);
    }
    let n = norm_eval(norm, &canonical, mdp)?;
    if n > NORMALISATION_FLOOR {
        Ok(canonical.scale(1.0 / n))
    } else {
        Ok(canonical)
    }
}

/// `s(R) = c(R) / n(c(R))`, or `c(R)` when the norm vanishes or is skipped.
pub fn standardise(
    spec: &MetricSpec,
    reward: &RewardTable,
    mdp: &Mdp,
    dists: &DistributionPair,
) -> Result<RewardTable> {
    let opts = canon_options_for(spec, mdp, dists);
    let canonical = canonicalise(spec.canon, reward, mdp, &opts)?;
    normalise(spec.norm, canonical, mdp)
}

/// `1 − ρ` for the `weights`-weighted Pearson correlation, computed from
/// standardised scores as `½ E[(z_a − z_b)²]`.
fn pearson_gap(a: &[f64], b: &[f64], weights: &[f64]) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    let standardised = |v: &[f64]| -> Result<Vec<f64>> {
        let mean = v.iter().zip(weights).map(|(x, w)| w * x).sum::<f64>() / total;
        let var = v.iter().zip(weights).map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / total;
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        let sd = var.sqrt();
        if !(sd > NORMALISATION_FLOOR * scale) {
            return Err(Error::ZeroCanon);
        }
        Ok(v.iter().map(|x| (x - mean) / sd).collect())
    };
    let za = standardised(a)?;
    let zb = standardised(b)?;
    let sq = za
        .iter()
        .zip(&zb)
        .zip(weights)
        .map(|((x, y), w)| w * (x - y).powi(2))
        .sum::<f64>()
        / total;
    Ok(0.5 * sq)
}

/// Pearson distance `√((1 − ρ)/2)` under the given weights.
pub fn pearson_distance(a: &RewardTable, b: &RewardTable, weights: &[f64]) -> Result<f64> {
    a.check_same_shape(b)?;
    if weights.len() != a.values().len() {
        return Err(Error::ShapeMismatch("weight tensor does not match reward".into()));
    }
    let gap = pearson_gap(a.values(), b.values(), weights)?;
    Ok((gap / 2.0).clamp(0.0, 1.0).sqrt())
}

/// Weighted Pearson correlation coefficient.
pub fn weighted_pearson(a: &RewardTable, b: &RewardTable, weights: &[f64]) -> Result<f64> {
    a.check_same_shape(b)?;
    Ok(1.0 - pearson_gap(a.values(), b.values(), weights)?)
}

/// Angle between flattened tensors; `π/2` against zero, 0 between zeros.
fn angle(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let a_zero = na <= NORMALISATION_FLOOR;
    let b_zero = nb <= NORMALISATION_FLOOR;
    match (a_zero, b_zero) {
        (true, true) => 0.0,
        (true, false) | (false, true) => std::f64::consts::FRAC_PI_2,
        (false, false) => {
            // 2·atan2(|u − v|, |u + v|) for unit u, v is exact at 0 and π.
            let (mut diff, mut sum) = (0.0, 0.0);
            for (x, y) in a.iter().zip(b) {
                let (u, v) = (x / na, y / nb);
                diff += (u - v).powi(2);
                sum += (u + v).powi(2);
            }
            2.0 * diff.sqrt().atan2(sum.sqrt())
        }
    }
}

/// `m(a, b)` for the chosen distance.
pub fn distance_eval(
    dist: DistId,
    a: &RewardTable,
    b: &RewardTable,
    mdp: &Mdp,
    dists: &DistributionPair,
) -> Result<f64> {
    mdp.check_reward(a)?;
    mdp.check_reward(b)?;
    match dist {
        DistId::Angle => Ok(angle(a.values(), b.values())),
        DistId::Pearson => pearson_distance(a, b, &dists.product_weights()),
        other => {
            let norm = other.as_norm().expect("norm-induced distance");
            norm_eval(norm, &(a - b), mdp)
        }
    }
}

/// `d(R₁, R₂) = m(s(R₁), s(R₂))`.
pub fn starc_distance(
    spec: &MetricSpec,
    r1: &RewardTable,
    r2: &RewardTable,
    mdp: &Mdp,
    dists: &DistributionPair,
) -> Result<f64> {
    let s1 = standardise(spec, r1, mdp, dists)?;
    let s2 = standardise(spec, r2, mdp, dists)?;
    distance_eval(spec.dist, &s1, &s2, mdp, dists)
}

/// EPIC distance: Pearson distance between EPIC-canonicalised rewards.
pub fn epic_distance(r1: &RewardTable, r2: &RewardTable, gamma: f64, dists: &DistributionPair) -> Result<f64> {
    r1.check_same_shape(r2)?;
    let c1 = canon_epic(r1, gamma, dists)?;
    let c2 = canon_epic(r2, gamma, dists)?;
    pearson_distance(&c1, &c2, &dists.product_weights())
}

/// EPIC distance in the form `½ L_{2,D}(C₁/L_{2,D}(C₁) − C₂/L_{2,D}(C₂))`,
/// which relies on `C` having zero mean under `D` rather than centring.
pub fn epic_distance_norm_form(
    r1: &RewardTable,
    r2: &RewardTable,
    gamma: f64,
    dists: &DistributionPair,
) -> Result<f64> {
    r1.check_same_shape(r2)?;
    let weights = dists.product_weights();
    let c1 = canon_epic(r1, gamma, dists)?;
    let c2 = canon_epic(r2, gamma, dists)?;
    let l2d = |c: &RewardTable| {
        c.values()
            .iter()
            .zip(&weights)
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt()
    };
    let (n1, n2) = (l2d(&c1), l2d(&c2));
    if n1 <= NORMALISATION_FLOOR * c1.sup_norm().max(1.0) || n2 <= NORMALISATION_FLOOR * c2.sup_norm().max(1.0) {
        return Err(Error::ZeroCanon);
    }
    let diff = c1
        .values()
        .iter()
        .zip(c2.values())
        .zip(&weights)
        .map(|((x, y), w)| w * (x / n1 - y / n2).powi(2))
        .sum::<f64>();
    Ok(0.5 * diff.sqrt())
}

/// DARD distance: Pearson distance between DARD-canonicalised rewards,
/// taken under `D_S ⊗ D_A ⊗ D_S`.
pub fn dard_distance(r1: &RewardTable, r2: &RewardTable, mdp: &Mdp, dists: &DistributionPair) -> Result<f64> {
    let c1 = canon_dard(r1, mdp, dists.dist_a())?;
    let c2 = canon_dard(r2, mdp, dists.dist_a())?;
    pearson_distance(&c1, &c2, &dists.product_weights())
}

/// True when `spec` only uses canonicalisations that remove both shaping
/// and S'-redistribution.
pub fn is_starc(spec: &MetricSpec) -> bool {
    spec.canon.removes_redistribution()
}

/// Identifier for the canonicalisation a spec needs, so a pipeline can share
/// one canonicalised tensor across specs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonKey {
    pub canon: CanonId,
    pub variant: Option<NormId>,
}

impl CanonKey {
    pub fn for_spec(spec: &MetricSpec) -> Self {
        let variant = match spec.canon {
            CanonId::MinimalPotential => Some(match spec.norm {
                NormId::L1 | NormId::WeightedL1 | NormId::WeightedL2 => spec.norm,
                _ => NormId::L2,
            }),
            CanonId::MinimalL2 => Some(if spec.norm == NormId::WeightedL2 {
                NormId::WeightedL2
            } else {
                NormId::L2
            }),
            _ => None,
        };
        Self {
            canon: spec.canon,
            variant,
        }
    }
}
