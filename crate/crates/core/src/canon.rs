//! Canonicalisation and pseudo-canonicalisation of reward tables.
//!
//! Each function maps a reward to a fixed representative of some equivalence
//! class. `VAL` and `MinimalL2` collapse both potential shaping and
//! S'-redistribution; `EPIC`, `DARD`, `VALPotential` and `MinimalPotential`
//! only remove potential shaping. All expectations are exact sums.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mdp::{expected_reward, policy_eval_v, Mdp};
use crate::metrics::{DistributionPair, NormId};
use crate::policy::Policy;
use crate::reward::RewardTable;

/// Largest `|S|·|A|·|S|` accepted by [`canon_minimal_l2`].
pub const MINIMAL_L2_MAX_ENTRIES: usize = 10_000;

const IRLS_MAX_ITERS: usize = 500;
const IRLS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CanonId {
    None,
    Epic,
    Dard,
    MinimalPotential,
    ValPotential,
    Val,
    MinimalL2,
}

impl CanonId {
    pub const ALL: [CanonId; 7] = [
        CanonId::None,
        CanonId::Epic,
        CanonId::Dard,
        CanonId::MinimalPotential,
        CanonId::ValPotential,
        CanonId::Val,
        CanonId::MinimalL2,
    ];

    pub fn token(self) -> &'static str {
        match self {
            CanonId::None => "None",
            CanonId::Epic => "EPIC",
            CanonId::Dard => "DARD",
            CanonId::MinimalPotential => "MinimalPotential",
            CanonId::ValPotential => "VALPotential",
            CanonId::Val => "VAL",
            CanonId::MinimalL2 => "MinimalL2",
        }
    }

    pub fn from_token(token: &str) -> Result<Self> {
        CanonId::ALL
            .into_iter()
            .find(|c| c.token() == token)
            .ok_or_else(|| Error::UnknownCanon(token.to_string()))
    }

    /// Whether the map also removes S'-redistribution.
    pub fn removes_redistribution(self) -> bool {
        matches!(self, CanonId::Val | CanonId::MinimalL2)
    }
}

impl fmt::Display for CanonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A potential `Φ : S → ℝ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialVector(pub Vec<f64>);

/// `R'(s,a,s') = R(s,a,s') + γ Φ(s') − Φ(s)`.
pub fn apply_shaping(reward: &RewardTable, phi: &PotentialVector, mdp: &Mdp) -> Result<RewardTable> {
    mdp.check_reward(reward)?;
    if phi.0.len() != mdp.n_states() {
        return Err(Error::ShapeMismatch(format!(
            "potential has {} entries, expected {}",
            phi.0.len(),
            mdp.n_states()
        )));
    }
    Ok(shape_with(reward, &phi.0, mdp.gamma()))
}

fn shape_with(reward: &RewardTable, phi: &[f64], gamma: f64) -> RewardTable {
    let mut out = reward.clone();
    let (n, k) = (reward.n_states(), reward.n_actions());
    let values = out.values_mut();
    for s in 0..n {
        for a in 0..k {
            for x in 0..n {
                values[(s * k + a) * n + x] += gamma * phi[x] - phi[s];
            }
        }
    }
    out
}

pub fn canon_none(reward: &RewardTable) -> RewardTable {
    reward.clone()
}

/// Value-Adjusted Levelling:
/// `c(R)(s,a,·) = E_{x~τ(s,a)}[R(s,a,x) + γ V^π(x)] − V^π(s)`.
pub fn canon_val(reward: &RewardTable, mdp: &Mdp, pi: &Policy) -> Result<RewardTable> {
    let v = policy_eval_v(mdp, reward, pi)?.0;
    let (n, k, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    let mut out = RewardTable::zeros(n, k);
    let values = out.values_mut();
    for s in 0..n {
        for a in 0..k {
            let level: f64 = mdp
                .row(s, a)
                .iter()
                .zip(reward.row(s, a))
                .zip(&v)
                .map(|((p, r), vx)| p * (r + gamma * vx))
                .sum::<f64>()
                - v[s];
            values[(s * k + a) * n..(s * k + a + 1) * n].fill(level);
        }
    }
    Ok(out)
}

/// `R(s,a,s') − V^π(s) + γ V^π(s')`, without the expectation over `s'`.
pub fn canon_val_potential(reward: &RewardTable, mdp: &Mdp, pi: &Policy) -> Result<RewardTable> {
    let v = policy_eval_v(mdp, reward, pi)?.0;
    Ok(shape_with(reward, &v, mdp.gamma()))
}

fn check_support(dist: &[f64], expected: usize) -> Result<()> {
    if dist.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "distribution has {} entries, expected {expected}",
            dist.len()
        )));
    }
    match dist.iter().position(|&p| !(p > 0.0)) {
        Some(i) => Err(Error::ZeroSupport(i)),
        None => Ok(()),
    }
}

/// EPIC's pseudo-canonicalisation under `S, S' ~ D_S`, `A ~ D_A`:
/// `C(R)(s,a,s') = R(s,a,s') + γ m(s') − m(s) − γ M` with
/// `m(s) = E_{A,X}[R(s,A,X)]` and `M = E_S[m(S)]`.
pub fn canon_epic(reward: &RewardTable, gamma: f64, dists: &DistributionPair) -> Result<RewardTable> {
    let (n, k) = (reward.n_states(), reward.n_actions());
    check_support(dists.dist_s(), n)?;
    check_support(dists.dist_a(), k)?;
    let (ds, da) = (dists.dist_s(), dists.dist_a());
    let m: Vec<f64> = (0..n)
        .map(|s| {
            (0..k)
                .map(|a| da[a] * reward.row(s, a).iter().zip(ds).map(|(r, p)| r * p).sum::<f64>())
                .sum()
        })
        .collect();
    let grand: f64 = m.iter().zip(ds).map(|(x, p)| x * p).sum();
    let mut out = reward.clone();
    let values = out.values_mut();
    for s in 0..n {
        for a in 0..k {
            for x in 0..n {
                values[(s * k + a) * n + x] += gamma * m[x] - m[s] - gamma * grand;
            }
        }
    }
    Ok(out)
}

/// DARD's pseudo-canonicalisation with `A ~ D_A`, `S' ~ τ(s,A)` and
/// `S'' ~ τ(s',A)` drawn independently given `A`.
pub fn canon_dard(reward: &RewardTable, mdp: &Mdp, dist_a: &[f64]) -> Result<RewardTable> {
    mdp.check_reward(reward)?;
    let (n, k, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    check_support(dist_a, k)?;
    let expected = expected_reward(mdp, reward);
    // e_bar(s) = Σ_b D(b) E_{x~τ(s,b)} R(s,b,x)
    let e_bar: Vec<f64> = (0..n)
        .map(|s| (0..k).map(|b| dist_a[b] * expected[s * k + b]).sum())
        .collect();
    // lookahead[s][b][y] = Σ_x τ(s,b,x) R(x,b,y)
    let mut lookahead = vec![0.0; n * k * n];
    for s in 0..n {
        for b in 0..k {
            let dst = &mut lookahead[(s * k + b) * n..(s * k + b + 1) * n];
            for (x, &p) in mdp.row(s, b).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (d, r) in dst.iter_mut().zip(reward.row(x, b)) {
                    *d += p * r;
                }
            }
        }
    }
    // cross[s][s'] = Σ_b D(b) Σ_y lookahead[s][b][y] τ(s',b,y)
    let mut cross = vec![0.0; n * n];
    for s in 0..n {
        for x in 0..n {
            cross[s * n + x] = (0..k)
                .map(|b| {
                    dist_a[b]
                        * lookahead[(s * k + b) * n..(s * k + b + 1) * n]
                            .iter()
                            .zip(mdp.row(x, b))
                            .map(|(l, p)| l * p)
                            .sum::<f64>()
                })
                .sum();
        }
    }
    let mut out = reward.clone();
    let values = out.values_mut();
    for s in 0..n {
        for a in 0..k {
            for x in 0..n {
                values[(s * k + a) * n + x] += gamma * e_bar[x] - e_bar[s] - gamma * cross[s * n + x];
            }
        }
    }
    Ok(out)
}

/// Weighted least-squares potential: minimises
/// `Σ w (R(s,a,s') + γΦ(s') − Φ(s))²` over `Φ`.
fn fit_potential(reward: &RewardTable, gamma: f64, weights: &[f64]) -> Result<Vec<f64>> {
    let (n, k) = (reward.n_states(), reward.n_actions());
    let mut normal = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let values = reward.values();
    for s in 0..n {
        for x in 0..n {
            let (mut w_sum, mut wr_sum) = (0.0, 0.0);
            for a in 0..k {
                let i = (s * k + a) * n + x;
                w_sum += weights[i];
                wr_sum += weights[i] * values[i];
            }
            if w_sum == 0.0 {
                continue;
            }
            if s == x {
                let c = gamma - 1.0;
                normal[s * n + s] += c * c * w_sum;
                rhs[s] -= c * wr_sum;
            } else {
                normal[s * n + s] += w_sum;
                normal[x * n + x] += gamma * gamma * w_sum;
                normal[s * n + x] -= gamma * w_sum;
                normal[x * n + s] -= gamma * w_sum;
                rhs[s] += wr_sum;
                rhs[x] -= gamma * wr_sum;
            }
        }
    }
    linalg::solve_spd(n, normal, rhs)
}

fn weighted_l1(values: &[f64], base: &[f64]) -> f64 {
    values.iter().zip(base).map(|(v, w)| w * v.abs()).sum()
}

/// Shaping that minimises the chosen norm of the shaped reward. L2 variants
/// are solved by normal equations; L1 variants by iteratively reweighted
/// least squares started from `Φ = 0`. Weighted variants use `τ` as weights;
/// `Skip` minimises L2.
pub fn canon_minimal_potential(reward: &RewardTable, mdp: &Mdp, norm: NormId) -> Result<RewardTable> {
    mdp.check_reward(reward)?;
    let gamma = mdp.gamma();
    let base: Vec<f64> = match norm {
        NormId::L1 | NormId::L2 | NormId::Skip => vec![1.0; reward.values().len()],
        NormId::WeightedL1 | NormId::WeightedL2 => mdp.transitions().to_vec(),
        other => return Err(Error::UnsupportedNorm(other.to_string())),
    };
    match norm {
        NormId::L2 | NormId::WeightedL2 | NormId::Skip => {
            let phi = fit_potential(reward, gamma, &base)?;
            Ok(shape_with(reward, &phi, gamma))
        }
        _ => minimal_l1_potential(reward, gamma, &base),
    }
}

fn minimal_l1_potential(reward: &RewardTable, gamma: f64, base: &[f64]) -> Result<RewardTable> {
    let scale = reward.sup_norm();
    if scale == 0.0 {
        return Ok(reward.clone());
    }
    let floor = 1e-10 * scale;
    let mut best = reward.clone();
    let mut best_obj = weighted_l1(reward.values(), base);
    let mut current = reward.clone();
    let mut prev_obj = best_obj;
    let mut change = f64::INFINITY;
    for _ in 0..IRLS_MAX_ITERS {
        let weights: Vec<f64> = current
            .values()
            .iter()
            .zip(base)
            .map(|(r, w)| w / r.abs().max(floor))
            .collect();
        let phi = fit_potential(reward, gamma, &weights)?;
        current = shape_with(reward, &phi, gamma);
        let obj = weighted_l1(current.values(), base);
        if obj < best_obj {
            best_obj = obj;
            best = current.clone();
        }
        change = (prev_obj - obj).abs();
        if change < IRLS_TOL * prev_obj.max(1.0) {
            return Ok(best);
        }
        prev_obj = obj;
    }
    Err(Error::NonConvergence {
        what: "L1 potential fit",
        iterations: IRLS_MAX_ITERS,
        residual: change,
    })
}

/// Orthogonal projection, in the inner product weighted by `weights`, of `R`
/// onto the complement of the shaping + S'-redistribution subspace: the
/// unique minimum weighted-L2 member of the reward's equivalence class.
///
/// Members of the class are exactly the rewards whose expected value
/// `g(s,a) = E_τ[R'(s,a,·)]` equals `r(s,a) + γ(PΦ)(s,a) − Φ(s)` for some
/// `Φ`. For fixed `g` the minimum-norm reward is `g(s,a) τ/W / κ(s,a)` with
/// `κ(s,a) = Σ τ²/W`, of squared norm `Σ g²/κ`, so the projection reduces to
/// a weighted least-squares problem over `Φ`.
pub fn canon_minimal_l2(reward: &RewardTable, mdp: &Mdp, weights: &RewardTable) -> Result<RewardTable> {
    mdp.check_reward(reward)?;
    mdp.check_reward(weights)?;
    let (n, k, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    if n * k * n > MINIMAL_L2_MAX_ENTRIES {
        return Err(Error::InstanceTooLarge(format!(
            "{} entries exceeds the {MINIMAL_L2_MAX_ENTRIES}-entry limit",
            n * k * n
        )));
    }
    let mut kappa = vec![0.0; n * k];
    for s in 0..n {
        for a in 0..k {
            let mut total = 0.0;
            for (x, &p) in mdp.row(s, a).iter().enumerate() {
                let w = weights.get(s, a, x);
                if !(w >= 0.0) || (p > 0.0 && w == 0.0) {
                    return Err(Error::DegenerateWeights);
                }
                if p > 0.0 {
                    total += p * p / w;
                }
            }
            kappa[s * k + a] = total;
        }
    }
    let expected = expected_reward(mdp, reward);
    // Least squares over Φ with rows g_sa(u) = γ τ(s,a,u) − [u = s].
    let mut normal = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let mut coeffs = vec![0.0; n];
    for s in 0..n {
        for a in 0..k {
            let q = 1.0 / kappa[s * k + a];
            for (u, c) in coeffs.iter_mut().enumerate() {
                *c = gamma * mdp.tau(s, a, u);
            }
            coeffs[s] -= 1.0;
            let r = expected[s * k + a];
            for i in 0..n {
                if coeffs[i] == 0.0 {
                    continue;
                }
                rhs[i] -= q * r * coeffs[i];
                for j in 0..n {
                    normal[i * n + j] += q * coeffs[i] * coeffs[j];
                }
            }
        }
    }
    let phi = linalg::solve_spd(n, normal, rhs)?;
    let mut out = RewardTable::zeros(n, k);
    for s in 0..n {
        for a in 0..k {
            let future: f64 = mdp.row(s, a).iter().zip(&phi).map(|(p, f)| p * f).sum();
            let level = expected[s * k + a] + gamma * future - phi[s];
            for (x, &p) in mdp.row(s, a).iter().enumerate() {
                if p > 0.0 {
                    out.set(s, a, x, level * p / weights.get(s, a, x) / kappa[s * k + a]);
                }
            }
        }
    }
    Ok(out)
}

/// Parameters shared by every canonicalisation in a pipeline.
#[derive(Clone, Debug)]
pub struct CanonOptions {
    pub dists: DistributionPair,
    /// Policy whose value function levels `VAL` and `VALPotential`.
    pub val_policy: Policy,
    /// Norm minimised by `MinimalPotential`.
    pub minimal_norm: NormId,
    /// Weights for `MinimalL2`; `None` means unweighted.
    pub l2_weights: Option<RewardTable>,
}

impl CanonOptions {
    /// Uniform `D_S`, `D_A`, uniform `VAL` policy, unweighted L2 minimisation.
    pub fn uniform(mdp: &Mdp) -> Self {
        Self {
            dists: DistributionPair::uniform(mdp.n_states(), mdp.n_actions()),
            val_policy: Policy::uniform(mdp.n_states(), mdp.n_actions()),
            minimal_norm: NormId::L2,
            l2_weights: None,
        }
    }
}

/// Dispatches on `id`.
pub fn canonicalise(id: CanonId, reward: &RewardTable, mdp: &Mdp, opts: &CanonOptions) -> Result<RewardTable> {
    mdp.check_reward(reward)?;
    match id {
        CanonId::None => Ok(canon_none(reward)),
        CanonId::Epic => canon_epic(reward, mdp.gamma(), &opts.dists),
        CanonId::Dard => canon_dard(reward, mdp, opts.dists.dist_a()),
        CanonId::MinimalPotential => canon_minimal_potential(reward, mdp, opts.minimal_norm),
        CanonId::ValPotential => canon_val_potential(reward, mdp, &opts.val_policy),
        CanonId::Val => canon_val(reward, mdp, &opts.val_policy),
        CanonId::MinimalL2 => match &opts.l2_weights {
            Some(w) => canon_minimal_l2(reward, mdp, w),
            None => canon_minimal_l2(
                reward,
                mdp,
                &RewardTable::constant(mdp.n_states(), mdp.n_actions(), 1.0),
            ),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::policy_return_j;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mdp(n: usize, k: usize, seed: u64, sparse: bool) -> Mdp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for _ in 0..n * k {
            let mut raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
            if sparse {
                let keep = rng.random_range(0..n);
                for (i, v) in raw.iter_mut().enumerate() {
                    if i != keep && rng.random::<f64>() < 0.5 {
                        *v = 0.0;
                    }
                }
            }
            let total: f64 = raw.iter().sum();
            t.extend(raw.iter().map(|v| v / total));
        }
        Mdp::new(n, k, t, vec![1.0 / n as f64; n], 0.9).unwrap()
    }

    fn random_reward(n: usize, k: usize, rng: &mut ChaCha8Rng) -> RewardTable {
        RewardTable::from_fn(n, k, |_, _, _| rng.random::<f64>() * 4.0 - 2.0)
    }

    fn random_phi(n: usize, rng: &mut ChaCha8Rng) -> PotentialVector {
        PotentialVector((0..n).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect())
    }

    /// Adds `w` with `E_τ[w(s,a,·)] = 0` on every row.
    fn redistribute(reward: &RewardTable, mdp: &Mdp, rng: &mut ChaCha8Rng) -> RewardTable {
        let mut out = reward.clone();
        let n = mdp.n_states();
        for s in 0..n {
            for a in 0..mdp.n_actions() {
                let noise: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let mean: f64 = noise.iter().zip(mdp.row(s, a)).map(|(z, p)| z * p).sum();
                for (x, z) in noise.iter().enumerate() {
                    let v = out.get(s, a, x) + z - mean;
                    out.set(s, a, x, v);
                }
            }
        }
        out
    }

    const ALL_SHAPING_INVARIANT: [CanonId; 6] = [
        CanonId::Val,
        CanonId::ValPotential,
        CanonId::Epic,
        CanonId::Dard,
        CanonId::MinimalPotential,
        CanonId::MinimalL2,
    ];

    #[test]
    fn zero_potential_is_identity_and_constant_shifts() {
        let mdp = random_mdp(3, 2, 0, false);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_reward(3, 2, &mut rng);
        assert_eq!(apply_shaping(&r, &PotentialVector(vec![0.0; 3]), &mdp).unwrap(), r);
        let shifted = apply_shaping(&r, &PotentialVector(vec![2.0; 3]), &mdp).unwrap();
        for (a, b) in shifted.values().iter().zip(r.values()) {
            assert!((a - b - (0.9 - 1.0) * 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn shaping_shifts_return_by_initial_potential() {
        let mdp = random_mdp(4, 2, 2, false);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_reward(4, 2, &mut rng);
        let phi = random_phi(4, &mut rng);
        let shaped = apply_shaping(&r, &phi, &mdp).unwrap();
        let start: f64 = phi.0.iter().zip(mdp.mu0()).map(|(f, p)| f * p).sum();
        for _ in 0..10 {
            let pi = Policy::random_stochastic(4, 2, &mut rng);
            let j = policy_return_j(&mdp, &r, &pi).unwrap();
            let js = policy_return_j(&mdp, &shaped, &pi).unwrap();
            assert!((js - (j - start)).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_reward_canonicalises_to_zero() {
        let mdp = random_mdp(3, 2, 4, false);
        let opts = CanonOptions::uniform(&mdp);
        let k = RewardTable::constant(3, 2, 3.7);
        for id in [CanonId::Val, CanonId::ValPotential, CanonId::Epic, CanonId::Dard] {
            let c = canonicalise(id, &k, &mdp, &opts).unwrap();
            assert!(c.sup_norm() < 1e-12, "{id}: {}", c.sup_norm());
        }
    }

    #[test]
    fn every_canonicalisation_removes_shaping() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..6 {
            let mdp = random_mdp(4, 3, seed, seed % 2 == 0);
            let mut opts = CanonOptions::uniform(&mdp);
            let r = random_reward(4, 3, &mut rng);
            let shaped = apply_shaping(&r, &random_phi(4, &mut rng), &mdp).unwrap();
            for norm in [NormId::L2, NormId::WeightedL2] {
                opts.minimal_norm = norm;
                for id in ALL_SHAPING_INVARIANT {
                    let c = canonicalise(id, &r, &mdp, &opts).unwrap();
                    let cs = canonicalise(id, &shaped, &mdp, &opts).unwrap();
                    assert!(
                        c.max_abs_diff(&cs) <= 1e-8 * (1.0 + c.sup_norm()),
                        "{id}/{norm}: {}",
                        c.max_abs_diff(&cs)
                    );
                }
            }
        }
    }

    #[test]
    fn val_and_minimal_l2_remove_redistribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for seed in 0..6 {
            let mdp = random_mdp(4, 2, seed, true);
            let opts = CanonOptions::uniform(&mdp);
            let r = random_reward(4, 2, &mut rng);
            let moved = redistribute(&r, &mdp, &mut rng);
            for id in [CanonId::Val, CanonId::MinimalL2] {
                let c = canonicalise(id, &r, &mdp, &opts).unwrap();
                let cm = canonicalise(id, &moved, &mdp, &opts).unwrap();
                assert!(c.max_abs_diff(&cm) <= 1e-8 * (1.0 + c.sup_norm()));
            }
        }
    }

    #[test]
    fn linear_canonicalisations_are_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mdp = random_mdp(3, 2, 8, true);
        let opts = CanonOptions::uniform(&mdp);
        let r1 = random_reward(3, 2, &mut rng);
        let r2 = random_reward(3, 2, &mut rng);
        let (alpha, beta) = (1.7, -0.3);
        let combo = &(&r1 * alpha) + &(&r2 * beta);
        for id in ALL_SHAPING_INVARIANT {
            let lhs = canonicalise(id, &combo, &mdp, &opts).unwrap();
            let c1 = canonicalise(id, &r1, &mdp, &opts).unwrap();
            let c2 = canonicalise(id, &r2, &mdp, &opts).unwrap();
            let rhs = &(&c1 * alpha) + &(&c2 * beta);
            assert!(lhs.max_abs_diff(&rhs) < 1e-9, "{id}");
        }
    }

    #[test]
    fn val_is_idempotent_and_flat_in_next_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mdp = random_mdp(5, 2, 10, true);
        let pi = Policy::uniform(5, 2);
        let r = random_reward(5, 2, &mut rng);
        let c = canon_val(&r, &mdp, &pi).unwrap();
        let cc = canon_val(&c, &mdp, &pi).unwrap();
        assert!(c.max_abs_diff(&cc) < 1e-10);
        for s in 0..5 {
            for a in 0..2 {
                let row = c.row(s, a);
                let spread =
                    row.iter().cloned().fold(f64::MIN, f64::max) - row.iter().cloned().fold(f64::MAX, f64::min);
                assert!(spread <= 1e-12);
            }
        }
    }

    #[test]
    fn val_potential_averages_to_val() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mdp = random_mdp(4, 3, 12, false);
        let pi = Policy::uniform(4, 3);
        let r = random_reward(4, 3, &mut rng);
        let vp = canon_val_potential(&r, &mdp, &pi).unwrap();
        let v = canon_val(&r, &mdp, &pi).unwrap();
        let avg = expected_reward(&mdp, &vp);
        for s in 0..4 {
            for a in 0..3 {
                assert!((avg[s * 3 + a] - v.get(s, a, 0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn epic_has_zero_weighted_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let dists = DistributionPair::new(vec![0.2, 0.5, 0.3], vec![0.6, 0.4]).unwrap();
        let r = random_reward(3, 2, &mut rng);
        let c = canon_epic(&r, 0.9, &dists).unwrap();
        let mut mean = 0.0;
        for s in 0..3 {
            for a in 0..2 {
                for x in 0..3 {
                    mean += dists.dist_s()[s] * dists.dist_a()[a] * dists.dist_s()[x] * c.get(s, a, x);
                }
            }
        }
        assert!(mean.abs() < 1e-10);
    }

    #[test]
    fn epic_rejects_zero_support() {
        let r = RewardTable::zeros(2, 2);
        let dists = DistributionPair::new_unchecked(vec![1.0, 0.0], vec![0.5, 0.5]);
        assert!(matches!(canon_epic(&r, 0.9, &dists), Err(Error::ZeroSupport(1))));
    }

    #[test]
    fn dard_is_not_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mdp = random_mdp(3, 2, 15, false);
        let r = random_reward(3, 2, &mut rng);
        let da = [0.5, 0.5];
        let c = canon_dard(&r, &mdp, &da).unwrap();
        let cc = canon_dard(&c, &mdp, &da).unwrap();
        assert!(c.max_abs_diff(&cc) > 1e-6);
    }

    #[test]
    fn minimal_potential_returns_minimal_input_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mdp = random_mdp(3, 2, 17, false);
        let r = random_reward(3, 2, &mut rng);
        let once = canon_minimal_potential(&r, &mdp, NormId::L2).unwrap();
        let twice = canon_minimal_potential(&once, &mdp, NormId::L2).unwrap();
        assert!(once.max_abs_diff(&twice) < 1e-9);
    }

    #[test]
    fn minimal_potential_kills_pure_shaping() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let mdp = random_mdp(4, 2, 19, false);
        let shaping = apply_shaping(&RewardTable::zeros(4, 2), &random_phi(4, &mut rng), &mdp).unwrap();
        for norm in [NormId::L1, NormId::L2, NormId::WeightedL1, NormId::WeightedL2] {
            let c = canon_minimal_potential(&shaping, &mdp, norm).unwrap();
            assert!(c.sup_norm() < 1e-8, "{norm}: {}", c.sup_norm());
        }
    }

    #[test]
    fn minimal_potential_beats_random_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mdp = random_mdp(4, 2, 21, false);
        let r = random_reward(4, 2, &mut rng);
        let l2 = |t: &RewardTable| t.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        let l1 = |t: &RewardTable| t.values().iter().map(|v| v.abs()).sum::<f64>();
        let c2 = canon_minimal_potential(&r, &mdp, NormId::L2).unwrap();
        let c1 = canon_minimal_potential(&r, &mdp, NormId::L1).unwrap();
        assert!(l1(&c1) <= l1(&r) + 1e-9);
        for _ in 0..100 {
            let probe = apply_shaping(&r, &random_phi(4, &mut rng), &mdp).unwrap();
            assert!(l2(&c2) <= l2(&probe) + 1e-9);
            assert!(l1(&c1) <= l1(&probe) + 1e-6);
        }
    }

    #[test]
    fn minimal_potential_rejects_linf() {
        let mdp = random_mdp(2, 2, 0, false);
        assert!(matches!(
            canon_minimal_potential(&RewardTable::zeros(2, 2), &mdp, NormId::Linf),
            Err(Error::UnsupportedNorm(_))
        ));
    }

    #[test]
    fn minimal_l2_projection_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mdp = random_mdp(4, 2, 23, true);
        let w = RewardTable::from_fn(4, 2, |_, _, _| 0.5 + rng.random::<f64>());
        let r = random_reward(4, 2, &mut rng);
        let c = canon_minimal_l2(&r, &mdp, &w).unwrap();
        let cc = canon_minimal_l2(&c, &mdp, &w).unwrap();
        assert!(c.max_abs_diff(&cc) < 1e-9);
        let wnorm = |t: &RewardTable| {
            t.values()
                .iter()
                .zip(w.values())
                .map(|(v, q)| q * v * v)
                .sum::<f64>()
                .sqrt()
        };
        for _ in 0..100 {
            let probe = apply_shaping(&r, &random_phi(4, &mut rng), &mdp).unwrap();
            let probe = redistribute(&probe, &mdp, &mut rng);
            assert!(wnorm(&c) <= wnorm(&probe) + 1e-9);
        }
        let null = redistribute(
            &apply_shaping(&RewardTable::zeros(4, 2), &random_phi(4, &mut rng), &mdp).unwrap(),
            &mdp,
            &mut rng,
        );
        assert!(canon_minimal_l2(&null, &mdp, &w).unwrap().sup_norm() < 1e-8);
    }

    #[test]
    fn minimal_l2_weight_and_size_checks() {
        let mdp = random_mdp(2, 2, 24, false);
        let bad = RewardTable::zeros(2, 2);
        assert!(matches!(
            canon_minimal_l2(&RewardTable::zeros(2, 2), &mdp, &bad),
            Err(Error::DegenerateWeights)
        ));
        let big = Mdp::deterministic(22, 21, |s, _| s, vec![1.0 / 22.0; 22], 0.9).unwrap();
        let ones = RewardTable::constant(22, 21, 1.0);
        assert!(matches!(
            canon_minimal_l2(&RewardTable::zeros(22, 21), &big, &ones),
            Err(Error::InstanceTooLarge(_))
        ));
    }

    #[test]
    fn canon_ids_round_trip() {
        for id in CanonId::ALL {
            assert_eq!(CanonId::from_token(id.token()).unwrap(), id);
        }
    }
}
