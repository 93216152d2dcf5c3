//! Seeded property suites shared by the command line and the acceptance
//! tests. Each check reports a pass flag and a one-line detail.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canon::{apply_shaping, PotentialVector};
use crate::error::{Error, Result};
use crate::gen::{gen_mdp, gen_reward, sub_seed, GenConfig, SeedRole};
use crate::mdp::{policy_return_j, Mdp};
use crate::metrics::{
    epic_distance, epic_distance_norm_form, parse_metric_spec, starc_distance, DistributionPair, MetricSpec,
};
use crate::policy::Policy;
use crate::regret::{
    cycle_mdp, make_dard_cycle_pair, make_offsupport_inflation_pair, make_equal_order_pair, optimal_pair_regret,
    policy_order_equal, worst_case_regret, RegretMode,
};
use crate::reward::RewardTable;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Pseudometric,
    Invariance,
    Counterexamples,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Pseudometric,
        Suite::Invariance,
        Suite::Counterexamples,
        Suite::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Pseudometric => "pseudometric",
            Suite::Invariance => "invariance",
            Suite::Counterexamples => "counterexamples",
            Suite::Oracle => "oracle",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown suite `{name}`")))
    }

    pub fn run(self) -> Result<Vec<CheckResult>> {
        match self {
            Suite::Pseudometric => Ok(vec![pseudometric_axioms()?]),
            Suite::Invariance => Ok(vec![invariance()?, zero_distance_iff_same_order()?]),
            Suite::Counterexamples => Ok(vec![
                equal_order_reproduction()?,
                dard_cycle_reproduction()?,
                offsupport_ladder()?,
            ]),
            Suite::Oracle => Ok(vec![
                epic_forms_agree()?,
                lp_matches_brute_force()?,
                rollout_matches_exact()?,
            ]),
        }
    }
}

fn specs(texts: &[&str]) -> Vec<MetricSpec> {
    texts
        .iter()
        .map(|t| parse_metric_spec(t).expect("valid spec"))
        .collect()
}

fn dense_mdp(n: usize, k: usize, gamma: f64, seed: u64) -> Result<Mdp> {
    let config = GenConfig {
        n_states: n,
        n_actions: k,
        gamma,
        transition_sparsity_threshold: 0.0,
        ..GenConfig::default()
    };
    gen_mdp(&config, seed)
}

fn uniform_reward(n: usize, k: usize, rng: &mut ChaCha8Rng) -> RewardTable {
    RewardTable::from_fn(n, k, |_, _, _| rng.random::<f64>() * 2.0 - 1.0)
}

/// Symmetry, identity and the triangle inequality on seeded triples.
pub fn pseudometric_axioms() -> Result<CheckResult> {
    let specs = specs(&["VAL-1-1", "VAL-2-2", "VAL-inf-inf", "MinimalL2-2-2"]);
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let (mut sym, mut ident, mut tri) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for t in 0..200 {
        let mdp = dense_mdp(8, 2, 0.9, sub_seed(0xA1, t, 0, SeedRole::Env))?;
        let dists = DistributionPair::uniform(8, 2);
        let (a, b, c) = (
            uniform_reward(8, 2, &mut rng),
            uniform_reward(8, 2, &mut rng),
            uniform_reward(8, 2, &mut rng),
        );
        for spec in &specs {
            let ab = starc_distance(spec, &a, &b, &mdp, &dists)?;
            let ba = starc_distance(spec, &b, &a, &mdp, &dists)?;
            let bc = starc_distance(spec, &b, &c, &mdp, &dists)?;
            let ac = starc_distance(spec, &a, &c, &mdp, &dists)?;
            let aa = starc_distance(spec, &a, &a, &mdp, &dists)?;
            sym = sym.max((ab - ba).abs());
            ident = ident.max(aa.abs());
            tri = tri.max(ac - ab - bc);
        }
    }
    let passed = sym <= 1e-12 && ident == 0.0 && tri <= 1e-9;
    Ok(check(
        "pseudometric axioms",
        passed,
        format!("max asymmetry {sym:.2e}, max d(R,R) {ident:.2e}, max triangle excess {tri:.2e}"),
    ))
}

/// Adds zero-τ-mean noise on the support of `τ`.
fn on_support_redistribution(mdp: &Mdp, rng: &mut ChaCha8Rng) -> RewardTable {
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    let mut out = RewardTable::zeros(n, k);
    for s in 0..n {
        for a in 0..k {
            let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let mean: f64 = mdp.row(s, a).iter().zip(&v).map(|(p, x)| p * x).sum();
            for (x, vx) in v.iter().enumerate() {
                if mdp.tau(s, a, x) > 0.0 {
                    out.set(s, a, x, vx - mean);
                }
            }
        }
    }
    out
}

/// `d(R, α(R + shaping + redistribution)) ≈ 0`.
pub fn invariance() -> Result<CheckResult> {
    let specs = specs(&[
        "VAL-2-2",
        "VAL-1-inf",
        "VAL-Jrange-angle",
        "VAL-weighted_2-weighted_1",
        "MinimalL2-2-2",
        "MinimalL2-weighted_2-weighted_2",
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(0xB2);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let config = GenConfig {
            n_states: 5,
            n_actions: 3,
            gamma: 0.9,
            ..GenConfig::default()
        };
        let mdp = gen_mdp(&config, sub_seed(0xB2, case, 0, SeedRole::Env))?;
        let dists = DistributionPair::uniform(5, 3);
        let r = uniform_reward(5, 3, &mut rng);
        let phi = PotentialVector((0..5).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect());
        let moved = &apply_shaping(&r, &phi, &mdp)? + &on_support_redistribution(&mdp, &mut rng);
        for alpha in [0.1, 1.0, 7.0] {
            let transformed = moved.scale(alpha);
            for spec in &specs {
                worst = worst.max(starc_distance(spec, &r, &transformed, &mdp, &dists)?);
            }
        }
    }
    Ok(check(
        "shaping, redistribution and scaling invariance",
        worst <= 1e-8,
        format!(
            "max distance {worst:.2e} over 100 cases x 3 scales x {} specs",
            specs.len()
        ),
    ))
}

/// VAL-2-2 vanishes exactly when the policy orderings agree.
pub fn zero_distance_iff_same_order() -> Result<CheckResult> {
    let spec = parse_metric_spec("VAL-2-2")?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut mismatches = 0;
    let mut equal_cases = 0;
    for case in 0..50u64 {
        let mdp = dense_mdp(3, 2, 0.9, sub_seed(0xC3, case, 0, SeedRole::Env))?;
        let dists = DistributionPair::uniform(3, 2);
        let r1 = uniform_reward(3, 2, &mut rng);
        let r2 = match case % 5 {
            0 | 1 => {
                let phi = PotentialVector((0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect());
                let alpha = 0.1 + rng.random::<f64>() * 5.0;
                (&apply_shaping(&r1, &phi, &mdp)? + &on_support_redistribution(&mdp, &mut rng)).scale(alpha)
            }
            2 => -&r1,
            _ => uniform_reward(3, 2, &mut rng),
        };
        let d = starc_distance(&spec, &r1, &r2, &mdp, &dists)?;
        let same = policy_order_equal(&mdp, &r1, &r2)?;
        equal_cases += same as usize;
        if (d <= 1e-8) != same {
            mismatches += 1;
        }
    }
    Ok(check(
        "zero distance iff same policy order",
        mismatches == 0,
        format!("{mismatches} mismatches over 50 instances ({equal_cases} with equal order)"),
    ))
}

/// Pearson form against the `½ L_{2,D}` norm form of EPIC.
pub fn epic_forms_agree() -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 2 + rng.random_range(0..5);
        let k = 1 + rng.random_range(0..3);
        let raw = |m: usize, rng: &mut ChaCha8Rng| {
            let v: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.05).collect();
            let t: f64 = v.iter().sum();
            v.into_iter().map(|x| x / t).collect::<Vec<_>>()
        };
        let ds = raw(n, &mut rng);
        let da = raw(k, &mut rng);
        let dists = DistributionPair::new(ds, da)?;
        let gamma = 0.5 + 0.49 * rng.random::<f64>();
        let a = uniform_reward(n, k, &mut rng);
        let b = uniform_reward(n, k, &mut rng);
        let p = epic_distance(&a, &b, gamma, &dists)?;
        let q = epic_distance_norm_form(&a, &b, gamma, &dists)?;
        worst = worst.max((p - q).abs());
    }
    Ok(check(
        "EPIC Pearson form equals norm form",
        worst <= 1e-9,
        format!("max difference {worst:.2e} over 100 pairs"),
    ))
}

/// Counterexample to EPIC soundness: same order, positive EPIC distance.
pub fn equal_order_reproduction() -> Result<CheckResult> {
    let spec = parse_metric_spec("VAL-2-2")?;
    let (mut min_epic, mut max_val, mut all_equal) = (f64::INFINITY, 0.0f64, true);
    for seed in 0..20 {
        let pair = make_equal_order_pair(3, 2, 0.1, seed)?;
        let dists = DistributionPair::uniform(3, 2);
        min_epic = min_epic.min(epic_distance(&pair.r1, &pair.r2, pair.mdp.gamma(), &dists)?);
        max_val = max_val.max(starc_distance(&spec, &pair.r1, &pair.r2, &pair.mdp, &dists)?);
        all_equal &= policy_order_equal(&pair.mdp, &pair.r1, &pair.r2)?;
    }
    Ok(check(
        "equal-order pair separated by EPIC",
        min_epic > 0.01 && max_val <= 1e-8 && all_equal,
        format!("min EPIC {min_epic:.4}, max VAL-2-2 {max_val:.2e}, orders equal on all 20: {all_equal}"),
    ))
}

/// Counterexample to DARD completeness on the three-state cycle.
pub fn dard_cycle_reproduction() -> Result<CheckResult> {
    let pair = make_dard_cycle_pair()?;
    let dists = DistributionPair::uniform(3, 2);
    let dard = crate::metrics::dard_distance(&pair.r1, &pair.r2, &pair.mdp, &dists)?;
    let regret = worst_case_regret(&pair.mdp, &pair.r1, &pair.r2)?;
    let val = starc_distance(&parse_metric_spec("VAL-2-2")?, &pair.r1, &pair.r2, &pair.mdp, &dists)?;
    Ok(check(
        "zero-regret pair separated by DARD",
        dard > 0.0 && regret == 0.0 && val <= 1e-10,
        format!("DARD {dard:.4}, worst-case regret {regret}, VAL-2-2 {val:.2e}"),
    ))
}

/// Inflating shared off-support mass hides a maximal-regret pair from EPIC.
pub fn offsupport_ladder() -> Result<CheckResult> {
    let mdp = cycle_mdp(3, 2, 0.9)?;
    let dists = DistributionPair::uniform(3, 2);
    let spec = parse_metric_spec("VAL-2-2")?;
    let base = make_offsupport_inflation_pair(&mdp, 0.1, 0.0)?;
    let val0 = starc_distance(&spec, &base.r1, &base.r2, &mdp, &dists)?;
    let mut epics = Vec::new();
    let (mut regret_err, mut val_err) = (0.0f64, 0.0f64);
    for m in [1.0, 10.0, 100.0, 1000.0] {
        let pair = make_offsupport_inflation_pair(&mdp, 0.1, m)?;
        epics.push(epic_distance(&pair.r1, &pair.r2, mdp.gamma(), &dists)?);
        regret_err = regret_err.max((worst_case_regret(&mdp, &pair.r1, &pair.r2)? - 1.0).abs());
        val_err = val_err.max((starc_distance(&spec, &pair.r1, &pair.r2, &mdp, &dists)? - val0).abs());
    }
    let decreasing = epics.windows(2).all(|w| w[1] < w[0]);
    Ok(check(
        "off-support inflation ladder",
        decreasing && regret_err <= 1e-6 && val_err <= 1e-8,
        format!(
            "EPIC {} ; max |regret - 1| {regret_err:.2e}; max VAL-2-2 drift {val_err:.2e}",
            epics.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>().join(" > ")
        ),
    ))
}

/// Lower bound on worst-case regret from explicit policy pairs: every
/// deterministic pair, every deterministic policy against the mixture of
/// two deterministic occupancies that meets the constraint with equality
/// (both roles), and `n_random` random stochastic pairs.
pub fn brute_force_worst_case_regret(
    mdp: &Mdp,
    r1: &RewardTable,
    r2: &RewardTable,
    n_random: usize,
    seed: u64,
) -> Result<f64> {
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    let det = Policy::enumerate_deterministic(n, k);
    let j = |r: &RewardTable, p: &Policy| policy_return_j(mdp, r, p);
    let j1: Vec<f64> = det.iter().map(|p| j(r1, p)).collect::<Result<_>>()?;
    let j2: Vec<f64> = det.iter().map(|p| j(r2, p)).collect::<Result<_>>()?;
    let hi = j1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = j1.iter().cloned().fold(f64::INFINITY, f64::min);
    let range = hi - lo;
    if range <= 1e-12 * hi.abs().max(lo.abs()).max(1.0) {
        return Ok(0.0);
    }
    let mut best = 0.0f64;
    let m = det.len();
    for p in 0..m {
        for q in 0..m {
            if j2[q] >= j2[p] {
                best = best.max(j1[p] - j1[q]);
            }
        }
    }
    // Occupancy mixtures λ d_a + (1 − λ) d_b with J₂ equal to a target.
    let mix = |a: usize, b: usize, target: f64| -> Option<f64> {
        let den = j2[a] - j2[b];
        if den.abs() < 1e-300 {
            return None;
        }
        let lambda = (target - j2[b]) / den;
        (0.0..=1.0)
            .contains(&lambda)
            .then(|| lambda * j1[a] + (1.0 - lambda) * j1[b])
    };
    for p in 0..m {
        for a in 0..m {
            for b in a + 1..m {
                if let Some(j1_mix) = mix(a, b, j2[p]) {
                    best = best.max(j1[p] - j1_mix);
                    best = best.max(j1_mix - j1[p]);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let p1 = Policy::random_stochastic(n, k, &mut rng);
        let p2 = Policy::random_stochastic(n, k, &mut rng);
        let (a1, a2) = (j(r1, &p1)?, j(r2, &p1)?);
        let (b1, b2) = (j(r1, &p2)?, j(r2, &p2)?);
        if b2 >= a2 {
            best = best.max(a1 - b1);
        }
        if a2 >= b2 {
            best = best.max(b1 - a1);
        }
    }
    Ok((best / range).clamp(0.0, 1.0))
}

/// The LP dominates the explicit search and agrees with it.
pub fn lp_matches_brute_force() -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE5);
    let (mut worst_gap, mut worst_deficit) = (0.0f64, 0.0f64);
    for case in 0..30u64 {
        let mdp = dense_mdp(3, 2, 0.9, sub_seed(0xE5, case, 0, SeedRole::Env))?;
        let r1 = uniform_reward(3, 2, &mut rng);
        let r2 = if case % 3 == 0 {
            r1.zip_with(&uniform_reward(3, 2, &mut rng), |a, b| a + 0.3 * b)
        } else {
            uniform_reward(3, 2, &mut rng)
        };
        let lp = worst_case_regret(&mdp, &r1, &r2)?;
        let brute = brute_force_worst_case_regret(&mdp, &r1, &r2, 10_000, case)?;
        worst_gap = worst_gap.max((lp - brute).abs());
        worst_deficit = worst_deficit.max(brute - lp);
    }
    Ok(check(
        "worst-case regret LP against policy-pair search",
        worst_gap <= 1e-6 && worst_deficit <= 1e-9,
        format!("max |LP - search| {worst_gap:.2e}, max search excess {worst_deficit:.2e} over 30 instances"),
    ))
}

/// Sampled regret within 0.02 of the exact value on default-size
/// environments.
pub fn rollout_matches_exact() -> Result<CheckResult> {
    let config = GenConfig::default();
    let mut worst = 0.0f64;
    for case in 0..10u64 {
        let mdp = gen_mdp(&config, sub_seed(0xF6, case, 0, SeedRole::Env))?;
        let (n, k) = (config.n_states, config.n_actions);
        let r1 = gen_reward(&config, sub_seed(0xF6, case, 0, SeedRole::Reward1), n, k)?;
        let r2 = gen_reward(&config, sub_seed(0xF6, case, 0, SeedRole::Reward2), n, k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(0xF6, case, 0, SeedRole::Rollout));
        let exact = optimal_pair_regret(&mdp, &r1, &r2, RegretMode::Exact, &mut rng)?;
        let sampled = optimal_pair_regret(&mdp, &r1, &r2, RegretMode::Rollout, &mut rng)?;
        worst = worst.max((exact.regret - sampled.regret).abs());
    }
    Ok(check(
        "rollout regret against exact regret",
        worst <= 0.02,
        format!("max |exact - rollout| {worst:.4} over 10 instances, horizon 225"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for suite in Suite::ALL {
            assert_eq!(Suite::from_name(suite.name()).unwrap(), suite);
        }
        assert!(Suite::from_name("smoke").is_err());
    }

    #[test]
    fn brute_force_is_exact_on_reversal() {
        let mdp = dense_mdp(3, 2, 0.9, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = uniform_reward(3, 2, &mut rng);
        assert!((brute_force_worst_case_regret(&mdp, &r, &-&r, 0, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!(brute_force_worst_case_regret(&mdp, &r, &r, 0, 0).unwrap() < 1e-12);
    }
}
