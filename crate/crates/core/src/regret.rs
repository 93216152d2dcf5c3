//! Regret between reward functions, the policy-order oracle and the
//! constructive counterexample families.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::{gen_mdp, sub_seed, GenConfig, SeedRole};
use crate::lp::{maximize, LinearProgram};
use crate::mdp::{
    expected_reward, optimal_from_expected, return_from_expected, simulate_trajectory, worst_from_expected, Mdp,
};
use crate::metrics::{dard_distance, epic_distance, j_range_expected, DistributionPair};
use crate::policy::Policy;
use crate::reward::RewardTable;

/// Largest `|S|·|A|` accepted by [`worst_case_regret`].
pub const LP_MAX_STATE_ACTIONS: usize = 64;
/// Seed of the stochastic policies used by [`policy_order_equal`].
pub const ORDER_POLICY_SEED: u64 = 0x5EED_0DE5;
pub const ORDER_STOCHASTIC_POLICIES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RegretMode {
    #[default]
    Exact,
    Rollout,
}

impl fmt::Display for RegretMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegretMode::Exact => "exact",
            RegretMode::Rollout => "rollout",
        })
    }
}

impl FromStr for RegretMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(RegretMode::Exact),
            "rollout" => Ok(RegretMode::Rollout),
            other => Err(Error::Config(format!("unknown regret mode `{other}`"))),
        }
    }
}

/// Averaged normalised regret of optimising one reward when the other is
/// the true one, in both directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub regret: f64,
    pub reg_forward: f64,
    pub reg_backward: f64,
    /// Optimal for `r1`.
    pub pi_1: Policy,
    /// Optimal for `r2`.
    pub pi_2: Policy,
    /// Worst for `r1`.
    pub pi_x: Policy,
    /// Worst for `r2`.
    pub pi_y: Policy,
}

/// Smallest `t` with `γ^t < 1e-5`.
pub fn rollout_horizon(gamma: f64) -> usize {
    let mut t = ((1e-5f64).ln() / gamma.ln()).floor().max(1.0) as usize;
    while t > 1 && gamma.powi(t as i32 - 1) < 1e-5 {
        t -= 1;
    }
    while gamma.powi(t as i32) >= 1e-5 {
        t += 1;
    }
    t
}

fn ratio(num: f64, den: f64, scale: f64) -> f64 {
    let den = if den.abs() <= 1e-12 * scale.max(1.0) { 1.0 } else { den };
    (num / den).clamp(0.0, 1.0)
}

/// Monte-Carlo estimate of `J` for both rewards from one episode per start
/// state, weighted by `μ₀`. Episodes from start state `s` reuse the same
/// random stream for every policy.
fn rollout_returns(
    mdp: &Mdp,
    r1: &RewardTable,
    r2: &RewardTable,
    pi: &Policy,
    base_seed: u64,
    horizon: usize,
) -> Result<(f64, f64)> {
    let (mut j1, mut j2) = (0.0, 0.0);
    for s in 0..mdp.n_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(base_seed, s as u64, 0, SeedRole::Rollout));
        let traj = simulate_trajectory(mdp, pi, s, horizon, &mut rng)?;
        let w = mdp.mu0()[s];
        j1 += w * traj.discounted_return(r1, mdp.gamma());
        j2 += w * traj.discounted_return(r2, mdp.gamma());
    }
    Ok((j1, j2))
}

/// Regret between optimal policies of `r1` and `r2`, normalised by each
/// reward's optimal-minus-worst gap and averaged over both directions.
pub fn optimal_pair_regret<R: Rng + ?Sized>(
    mdp: &Mdp,
    r1: &RewardTable,
    r2: &RewardTable,
    mode: RegretMode,
    rng: &mut R,
) -> Result<RegretReport> {
    mdp.check_reward(r1)?;
    mdp.check_reward(r2)?;
    let e1 = expected_reward(mdp, r1);
    let e2 = expected_reward(mdp, r2);
    let pi_1 = optimal_from_expected(mdp, &e1)?;
    let pi_2 = optimal_from_expected(mdp, &e2)?;
    let pi_x = worst_from_expected(mdp, &e1)?;
    let pi_y = worst_from_expected(mdp, &e2)?;

    // J_a(π) for a ∈ {1, 2} and π ∈ {π₁, π₂, π_x, π_y}.
    let policies = [&pi_1, &pi_2, &pi_x, &pi_y];
    let mut j1 = [0.0; 4];
    let mut j2 = [0.0; 4];
    match mode {
        RegretMode::Exact => {
            for (i, pi) in policies.iter().enumerate() {
                j1[i] = return_from_expected(mdp, &e1, pi)?;
                j2[i] = return_from_expected(mdp, &e2, pi)?;
            }
        }
        RegretMode::Rollout => {
            let base = rng.random::<u64>();
            let horizon = rollout_horizon(mdp.gamma());
            for (i, pi) in policies.iter().enumerate() {
                (j1[i], j2[i]) = rollout_returns(mdp, r1, r2, pi, base, horizon)?;
            }
        }
    }
    let scale1 = j1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale2 = j2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let reg_forward = ratio(j1[0] - j1[1], j1[0] - j1[2], scale1);
    let reg_backward = ratio(j2[1] - j2[0], j2[1] - j2[3], scale2);
    Ok(RegretReport {
        regret: (reg_forward + reg_backward) / 2.0,
        reg_forward,
        reg_backward,
        pi_1,
        pi_2,
        pi_x,
        pi_y,
    })
}

/// [`optimal_pair_regret`] with a generator seeded from `seed`.
pub fn optimal_pair_regret_seeded(
    mdp: &Mdp,
    r1: &RewardTable,
    r2: &RewardTable,
    mode: RegretMode,
    seed: u64,
) -> Result<RegretReport> {
    optimal_pair_regret(mdp, r1, r2, mode, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `max J₁(π₁) − J₁(π₂)` over policy pairs with `J₂(π₂) ≥ J₂(π₁)`, divided
/// by the range of `J₁`, solved as a linear program over paired
/// state-action occupancies.
pub fn worst_case_regret(mdp: &Mdp, r1: &RewardTable, r2: &RewardTable) -> Result<f64> {
    mdp.check_reward(r1)?;
    mdp.check_reward(r2)?;
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    let sa = n * k;
    if sa > LP_MAX_STATE_ACTIONS {
        return Err(Error::InstanceTooLarge(format!(
            "|S|·|A| = {sa} exceeds {LP_MAX_STATE_ACTIONS}"
        )));
    }
    let e1 = expected_reward(mdp, r1);
    let e2 = expected_reward(mdp, r2);
    let range = j_range_expected(mdp, &e1)?;
    let scale = e1.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (1.0 - mdp.gamma());
    if range <= 1e-12 * scale.max(1.0) {
        return Ok(0.0);
    }

    let gamma = mdp.gamma();
    let mut equalities = Vec::with_capacity(2 * n);
    for block in 0..2 {
        for target in 0..n {
            let mut row = vec![0.0; 2 * sa];
            for s in 0..n {
                for a in 0..k {
                    let idx = block * sa + s * k + a;
                    row[idx] -= gamma * mdp.tau(s, a, target);
                    if s == target {
                        row[idx] += 1.0;
                    }
                }
            }
            equalities.push((row, mdp.mu0()[target]));
        }
    }
    let e1_max = e1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let e2_max = e2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut inequalities = Vec::new();
    if e2_max > 0.0 {
        // J₂(π₁) − J₂(π₂) ≤ 0, scaled to unit coefficients.
        let row: Vec<f64> = e2
            .iter()
            .map(|v| v / e2_max)
            .chain(e2.iter().map(|v| -v / e2_max))
            .collect();
        inequalities.push((row, 0.0));
    }
    let objective: Vec<f64> = e1
        .iter()
        .map(|v| v / e1_max)
        .chain(e1.iter().map(|v| -v / e1_max))
        .collect();
    let lp = LinearProgram {
        objective,
        equalities,
        inequalities,
    };
    let sol = maximize(&lp)?;
    Ok((sol.objective * e1_max / range).clamp(0.0, 1.0))
}

fn order_policies(n_states: usize, n_actions: usize) -> Vec<Policy> {
    let mut policies = Policy::enumerate_deterministic(n_states, n_actions);
    let mut rng = ChaCha8Rng::seed_from_u64(ORDER_POLICY_SEED);
    for _ in 0..ORDER_STOCHASTIC_POLICIES {
        policies.push(Policy::random_stochastic(n_states, n_actions, &mut rng));
    }
    policies
}

/// Whether `r1` and `r2` order all deterministic policies and a fixed
/// sample of stochastic policies identically, ties included.
pub fn policy_order_equal(mdp: &Mdp, r1: &RewardTable, r2: &RewardTable) -> Result<bool> {
    mdp.check_reward(r1)?;
    mdp.check_reward(r2)?;
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    if n > 4 || k > 3 {
        return Err(Error::InstanceTooLarge(format!(
            "policy enumeration needs |S| ≤ 4 and |A| ≤ 3, got {n} and {k}"
        )));
    }
    let policies = order_policies(n, k);
    let e1 = expected_reward(mdp, r1);
    let e2 = expected_reward(mdp, r2);
    let j1 = policies
        .iter()
        .map(|p| return_from_expected(mdp, &e1, p))
        .collect::<Result<Vec<_>>>()?;
    let j2 = policies
        .iter()
        .map(|p| return_from_expected(mdp, &e2, p))
        .collect::<Result<Vec<_>>>()?;
    let tol = |j: &[f64]| 1e-9 * (1.0 + j.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let (t1, t2) = (tol(&j1), tol(&j2));
    let sign = |d: f64, t: f64| {
        if d > t {
            1
        } else if d < -t {
            -1
        } else {
            0
        }
    };
    for i in 0..policies.len() {
        for j in i + 1..policies.len() {
            if sign(j1[i] - j1[j], t1) != sign(j2[i] - j2[j], t2) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CounterexampleFamily {
    EqualOrder,
    OffSupportInflation,
    DardCycle,
}

#[derive(Clone, Debug)]
pub struct CounterexamplePair {
    pub r1: RewardTable,
    pub r2: RewardTable,
    pub mdp: Mdp,
    pub family: CounterexampleFamily,
    /// `ε` for `EqualOrder`, `M` for `OffSupportInflation`, unused otherwise.
    pub parameter: f64,
}

/// Deterministic cycle `s → s+1 mod n` for every action, starting in state 0.
pub fn cycle_mdp(n_states: usize, n_actions: usize, gamma: f64) -> Result<Mdp> {
    let mut mu0 = vec![0.0; n_states];
    mu0[0] = 1.0;
    Mdp::deterministic(n_states, n_actions, |s, _| (s + 1) % n_states, mu0, gamma)
}

/// Two rewards that differ only on `(s₀, a₀)`, where `R₁` puts `(1, ε)` and
/// `R₂` puts `(ε, 1)` on next states `(s₀, s₁)`. Both are positive
/// multiples of one occupancy, so they order policies identically under
/// any dynamics, yet EPIC separates them. Dynamics are drawn from `seed`.
pub fn make_equal_order_pair(n_states: usize, n_actions: usize, epsilon: f64, seed: u64) -> Result<CounterexamplePair> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::BadEpsilon(epsilon));
    }
    if n_states < 2 || n_actions < 2 {
        return Err(Error::Config("need at least two states and two actions".into()));
    }
    let config = GenConfig {
        n_states,
        n_actions,
        gamma: 0.9,
        ..GenConfig::default()
    };
    let mdp = gen_mdp(&config, seed)?;
    let mut r1 = RewardTable::zeros(n_states, n_actions);
    let mut r2 = RewardTable::zeros(n_states, n_actions);
    r1.set(0, 0, 0, 1.0);
    r1.set(0, 0, 1, epsilon);
    r2.set(0, 0, 0, epsilon);
    r2.set(0, 0, 1, 1.0);
    let dists = DistributionPair::uniform(n_states, n_actions);
    if !(epic_distance(&r1, &r2, mdp.gamma(), &dists)? > 0.0) {
        return Err(Error::ConstructionFailed("EPIC distance vanished".into()));
    }
    if n_states <= 4 && n_actions <= 3 && !policy_order_equal(&mdp, &r1, &r2)? {
        return Err(Error::ConstructionFailed("policy orderings differ".into()));
    }
    Ok(CounterexamplePair {
        r1,
        r2,
        mdp,
        family: CounterexampleFamily::EqualOrder,
        parameter: epsilon,
    })
}

/// `R₁ = ε·r + M·u` and `R₂ = −ε·r + M·u`, where `r` rewards action 0 on its
/// (deterministic) successor and `u` is the indicator of impossible
/// transitions. The pair has maximal regret for every `M`, while the shared
/// off-support mass drags EPIC's distance towards zero.
pub fn make_offsupport_inflation_pair(mdp: &Mdp, epsilon: f64, inflation: f64) -> Result<CounterexamplePair> {
    if !mdp.is_deterministic() {
        return Err(Error::NotDeterministicTau);
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::BadEpsilon(epsilon));
    }
    if !(inflation >= 0.0 && inflation.is_finite()) {
        return Err(Error::Config(format!("inflation {inflation} must be nonnegative")));
    }
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    let direction = RewardTable::from_fn(n, k, |s, a, x| if a == 0 && mdp.tau(s, a, x) > 0.0 { 1.0 } else { 0.0 });
    let off = RewardTable::from_fn(n, k, |s, a, x| if mdp.tau(s, a, x) == 0.0 { 1.0 } else { 0.0 });
    let e = expected_reward(mdp, &direction);
    if !(j_range_expected(mdp, &e)? > 0.0) {
        return Err(Error::ConstructionFailed(
            "direction does not separate policies; need at least two actions".into(),
        ));
    }
    let r1 = &direction.scale(epsilon) + &off.scale(inflation);
    let r2 = &direction.scale(-epsilon) + &off.scale(inflation);
    if n * k <= LP_MAX_STATE_ACTIONS {
        let regret = worst_case_regret(mdp, &r1, &r2)?;
        if (regret - 1.0).abs() > 1e-6 {
            return Err(Error::ConstructionFailed(format!(
                "worst-case regret {regret} is not 1"
            )));
        }
    }
    Ok(CounterexamplePair {
        r1,
        r2,
        mdp: mdp.clone(),
        family: CounterexampleFamily::OffSupportInflation,
        parameter: inflation,
    })
}

/// Three-state, two-action cycle with `μ₀ = s₀` and `γ = 0.9`. Both rewards
/// vanish on possible transitions; on impossible ones `R₁` rewards action 0
/// and `R₂` rewards action 1.
pub fn make_dard_cycle_pair() -> Result<CounterexamplePair> {
    let mdp = cycle_mdp(3, 2, 0.9)?;
    let r1 = RewardTable::from_fn(
        3,
        2,
        |s, a, x| if a == 0 && mdp.tau(s, a, x) == 0.0 { 1.0 } else { 0.0 },
    );
    let r2 = RewardTable::from_fn(
        3,
        2,
        |s, a, x| if a == 1 && mdp.tau(s, a, x) == 0.0 { 1.0 } else { 0.0 },
    );
    let dists = DistributionPair::uniform(3, 2);
    if !(dard_distance(&r1, &r2, &mdp, &dists)? > 0.0) {
        return Err(Error::ConstructionFailed("DARD distance vanished".into()));
    }
    if !policy_order_equal(&mdp, &r1, &r2)? {
        return Err(Error::ConstructionFailed("policy orderings differ".into()));
    }
    Ok(CounterexamplePair {
        r1,
        r2,
        mdp,
        family: CounterexampleFamily::DardCycle,
        parameter: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{apply_shaping, PotentialVector};
    use crate::mdp::policy_return_j;

    fn random_mdp(n: usize, k: usize, seed: u64) -> Mdp {
        let config = GenConfig {
            n_states: n,
            n_actions: k,
            gamma: 0.9,
            transition_sparsity_threshold: 0.0,
            ..GenConfig::default()
        };
        gen_mdp(&config, seed).unwrap()
    }

    fn random_reward(n: usize, k: usize, rng: &mut ChaCha8Rng) -> RewardTable {
        RewardTable::from_fn(n, k, |_, _, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn horizon_for_default_discount() {
        assert_eq!(rollout_horizon(0.95), 225);
        assert!(0.95f64.powi(224) >= 1e-5 && 0.95f64.powi(225) < 1e-5);
        assert_eq!(rollout_horizon(0.5), 17);
    }

    #[test]
    fn identical_rewards_have_zero_regret() {
        let mdp = random_mdp(4, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = random_reward(4, 2, &mut rng);
        for mode in [RegretMode::Exact, RegretMode::Rollout] {
            let report = optimal_pair_regret(&mdp, &r, &r, mode, &mut rng).unwrap();
            assert_eq!(report.regret, 0.0);
        }
    }

    #[test]
    fn constant_reward_uses_unit_denominator() {
        let mdp = random_mdp(4, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r2 = random_reward(4, 2, &mut rng);
        let report = optimal_pair_regret(
            &mdp,
            &RewardTable::constant(4, 2, 2.0),
            &r2,
            RegretMode::Exact,
            &mut rng,
        )
        .unwrap();
        assert!(report.reg_forward.abs() < 1e-12);
    }

    #[test]
    fn negated_reward_has_unit_regret() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..10 {
            let mdp = random_mdp(3, 2, seed);
            let r = random_reward(3, 2, &mut rng);
            let neg = -&r;
            let report = optimal_pair_regret(&mdp, &r, &neg, RegretMode::Exact, &mut rng).unwrap();
            assert!((report.regret - 1.0).abs() < 1e-8);
            // π₂ must be a worst policy for r by enumeration.
            let js: Vec<f64> = Policy::enumerate_deterministic(3, 2)
                .iter()
                .map(|p| policy_return_j(&mdp, &r, p).unwrap())
                .collect();
            let min = js.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!((policy_return_j(&mdp, &r, &report.pi_2).unwrap() - min).abs() < 1e-8);
        }
    }

    #[test]
    fn regret_ignores_positive_scaling() {
        let mdp = random_mdp(4, 3, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let r1 = random_reward(4, 3, &mut rng);
            let r2 = random_reward(4, 3, &mut rng);
            let base = optimal_pair_regret(&mdp, &r1, &r2, RegretMode::Exact, &mut rng).unwrap();
            let scaled =
                optimal_pair_regret(&mdp, &r1.scale(3.0), &r2.scale(0.25), RegretMode::Exact, &mut rng).unwrap();
            assert!((base.regret - scaled.regret).abs() < 1e-9);
        }
    }

    #[test]
    fn worst_case_regret_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..5 {
            let mdp = random_mdp(3, 2, seed);
            let r = random_reward(3, 2, &mut rng);
            assert!(worst_case_regret(&mdp, &r, &r).unwrap() < 1e-9);
            assert!((worst_case_regret(&mdp, &r, &-&r).unwrap() - 1.0).abs() < 1e-9);
        }
        let mdp = random_mdp(3, 2, 0);
        assert_eq!(
            worst_case_regret(&mdp, &RewardTable::zeros(3, 2), &RewardTable::zeros(3, 2)).unwrap(),
            0.0
        );
        let big = random_mdp(17, 4, 0);
        assert!(matches!(
            worst_case_regret(&big, &RewardTable::zeros(17, 4), &RewardTable::zeros(17, 4)),
            Err(Error::InstanceTooLarge(_))
        ));
    }

    #[test]
    fn order_oracle_basic_cases() {
        let mdp = random_mdp(3, 2, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let r = random_reward(3, 2, &mut rng);
        let phi = PotentialVector(vec![0.3, -1.0, 2.0]);
        let transformed = apply_shaping(&r, &phi, &mdp).unwrap().scale(3.0);
        assert!(policy_order_equal(&mdp, &r, &transformed).unwrap());
        assert!(!policy_order_equal(&mdp, &r, &-&r).unwrap());
        let big = random_mdp(5, 2, 0);
        assert!(policy_order_equal(&big, &RewardTable::zeros(5, 2), &RewardTable::zeros(5, 2)).is_err());
    }

    #[test]
    fn equal_order_pairs() {
        assert!(matches!(make_equal_order_pair(3, 2, 1.0, 0), Err(Error::BadEpsilon(_))));
        for seed in 0..20 {
            let pair = make_equal_order_pair(3, 2, 0.5, seed).unwrap();
            assert!(policy_order_equal(&pair.mdp, &pair.r1, &pair.r2).unwrap());
        }
    }

    #[test]
    fn offsupport_requires_deterministic_dynamics() {
        let mdp = random_mdp(3, 2, 0);
        assert!(matches!(
            make_offsupport_inflation_pair(&mdp, 0.1, 10.0),
            Err(Error::NotDeterministicTau)
        ));
    }

    #[test]
    fn offsupport_without_inflation_is_a_reversal() {
        let mdp = cycle_mdp(3, 2, 0.9).unwrap();
        let pair = make_offsupport_inflation_pair(&mdp, 0.1, 0.0).unwrap();
        let dists = DistributionPair::uniform(3, 2);
        assert!((epic_distance(&pair.r1, &pair.r2, 0.9, &dists).unwrap() - 1.0).abs() < 1e-12);
        assert!((worst_case_regret(&mdp, &pair.r1, &pair.r2).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dard_cycle_has_no_regret() {
        let pair = make_dard_cycle_pair().unwrap();
        assert_eq!(worst_case_regret(&pair.mdp, &pair.r1, &pair.r2).unwrap(), 0.0);
    }

    #[test]
    fn modes_parse() {
        assert_eq!("rollout".parse::<RegretMode>().unwrap(), RegretMode::Rollout);
        assert!("sampled".parse::<RegretMode>().is_err());
        assert_eq!(RegretMode::Exact.to_string(), "exact");
    }
}
