//! Finite MDPs: exact policy evaluation, value iteration, occupancy
//! measures and trajectory simulation.
//!
//! Policy evaluation always goes through a dense linear solve of
//! `(I - γ P_π) V = r_π`; the instances this crate targets have at most a few
//! hundred states, and exact values keep downstream metric tolerances tight.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::policy::{sample_index, Policy};
use crate::reward::RewardTable;

const STOCHASTIC_TOL: f64 = 1e-12;
const REACHABLE_MASS: f64 = 1e-12;
const Q_TOL: f64 = 1e-10;
const Q_MAX_ITERS: usize = 100_000;

/// A finite discounted MDP without its reward.
#[derive(Clone, Debug, PartialEq)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    /// `τ[s][a][s']`, row-major.
    transition: Vec<f64>,
    mu0: Vec<f64>,
    gamma: f64,
}

impl Mdp {
    /// Checks shapes only; see [`validate_mdp`] for the semantic checks.
    pub fn new(n_states: usize, n_actions: usize, transition: Vec<f64>, mu0: Vec<f64>, gamma: f64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::ShapeMismatch(
                "an MDP needs at least one state and one action".into(),
            ));
        }
        if transition.len() != n_states * n_actions * n_states {
            return Err(Error::ShapeMismatch(format!(
                "transition has {} entries, expected {}",
                transition.len(),
                n_states * n_actions * n_states
            )));
        }
        if mu0.len() != n_states {
            return Err(Error::ShapeMismatch(format!(
                "mu0 has {} entries, expected {n_states}",
                mu0.len()
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            mu0,
            gamma,
        })
    }

    /// Builds an MDP from `[s][a][s']` nesting.
    pub fn from_nested(transition: &[Vec<Vec<f64>>], mu0: Vec<f64>, gamma: f64) -> Result<Self> {
        let table = RewardTable::from_nested(transition)?;
        Self::new(table.n_states(), table.n_actions(), table.values().to_vec(), mu0, gamma)
    }

    /// An MDP where every `(s, a)` moves deterministically to `next(s, a)`.
    pub fn deterministic(
        n_states: usize,
        n_actions: usize,
        next: impl Fn(usize, usize) -> usize,
        mu0: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let mut transition = vec![0.0; n_states * n_actions * n_states];
        for s in 0..n_states {
            for a in 0..n_actions {
                let x = next(s, a);
                if x >= n_states {
                    return Err(Error::ShapeMismatch(format!(
                        "successor {x} of ({s}, {a}) is out of range"
                    )));
                }
                transition[(s * n_actions + a) * n_states + x] = 1.0;
            }
        }
        Self::new(n_states, n_actions, transition, mu0, gamma)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu0(&self) -> &[f64] {
        &self.mu0
    }

    #[inline]
    pub fn tau(&self, s: usize, a: usize, x: usize) -> f64 {
        self.transition[(s * self.n_actions + a) * self.n_states + x]
    }

    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    /// Flat `[s][a][s']` transition tensor.
    pub fn transitions(&self) -> &[f64] {
        &self.transition
    }

    /// The transition tensor viewed as a table (useful as a weight tensor).
    pub fn transition_table(&self) -> RewardTable {
        RewardTable::from_vec(self.n_states, self.n_actions, self.transition.clone())
            .expect("transition shape is checked at construction")
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        self.transition_table().to_nested()
    }

    /// True when every row puts all its mass on a single successor.
    pub fn is_deterministic(&self) -> bool {
        self.transition.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    pub fn with_mu0(&self, mu0: Vec<f64>) -> Result<Self> {
        Self::new(self.n_states, self.n_actions, self.transition.clone(), mu0, self.gamma)
    }

    pub fn check_reward(&self, reward: &RewardTable) -> Result<()> {
        reward.check_shape(self.n_states, self.n_actions)
    }
}

/// Checks stochasticity, the discount, and reachability of every state.
pub fn validate_mdp(mdp: &Mdp) -> Result<()> {
    if !(mdp.gamma > 0.0 && mdp.gamma < 1.0) {
        return Err(Error::BadGamma(mdp.gamma));
    }
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let row = mdp.row(s, a);
            let total: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NonStochasticRow { state: s, action: a });
            }
        }
    }
    let total: f64 = mdp.mu0.iter().sum();
    if mdp.mu0.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::BadInitialDistribution);
    }
    let rho = state_occupancy(mdp, &Policy::uniform(mdp.n_states, mdp.n_actions))?;
    if let Some(s) = rho.iter().position(|&m| !(m > REACHABLE_MASS)) {
        return Err(Error::UnreachableState(s));
    }
    Ok(())
}

/// State-value function of a policy.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueVector(pub Vec<f64>);

impl ValueVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Discounted visitation mass `m[s][a][s'] = d[s][a] τ[s][a][s']`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyMeasure {
    n_states: usize,
    n_actions: usize,
    state_action: Vec<f64>,
    mass: Vec<f64>,
}

impl OccupancyMeasure {
    /// `d[s][a]`, the discounted state-action visitation.
    pub fn state_action(&self, s: usize, a: usize) -> f64 {
        self.state_action[s * self.n_actions + a]
    }

    pub fn get(&self, s: usize, a: usize, x: usize) -> f64 {
        self.mass[(s * self.n_actions + a) * self.n_states + x]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `Σ m · R`, the policy's return under `reward`.
    pub fn dot(&self, reward: &RewardTable) -> f64 {
        self.mass.iter().zip(reward.values()).map(|(m, r)| m * r).sum()
    }
}

/// `E_{s'~τ(s,a)}[R(s,a,s')]`, indexed `[s * n_actions + a]`.
pub fn expected_reward(mdp: &Mdp, reward: &RewardTable) -> Vec<f64> {
    let mut out = Vec::with_capacity(mdp.n_states * mdp.n_actions);
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            out.push(mdp.row(s, a).iter().zip(reward.row(s, a)).map(|(p, r)| p * r).sum());
        }
    }
    out
}

fn policy_matrices(mdp: &Mdp, expected: &[f64], pi: &Policy) -> (Vec<f64>, Vec<f64>) {
    let n = mdp.n_states;
    let mut p_pi = vec![0.0; n * n];
    let mut r_pi = vec![0.0; n];
    for s in 0..n {
        for a in 0..mdp.n_actions {
            let w = pi.prob(s, a);
            if w == 0.0 {
                continue;
            }
            r_pi[s] += w * expected[s * mdp.n_actions + a];
            for (x, &p) in mdp.row(s, a).iter().enumerate() {
                p_pi[s * n + x] += w * p;
            }
        }
    }
    (p_pi, r_pi)
}

fn check_policy(mdp: &Mdp, pi: &Policy) -> Result<()> {
    pi.validate(mdp.n_states, mdp.n_actions)
}

/// Solves `V = r_π + γ P_π V` exactly.
pub fn policy_eval_v(mdp: &Mdp, reward: &RewardTable, pi: &Policy) -> Result<ValueVector> {
    mdp.check_reward(reward)?;
    check_policy(mdp, pi)?;
    let expected = expected_reward(mdp, reward);
    eval_from_expected(mdp, &expected, pi)
}

pub(crate) fn eval_from_expected(mdp: &Mdp, expected: &[f64], pi: &Policy) -> Result<ValueVector> {
    let n = mdp.n_states;
    let (p_pi, r_pi) = policy_matrices(mdp, expected, pi);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = if i == j { 1.0 } else { 0.0 } - mdp.gamma * p_pi[i * n + j];
        }
    }
    let v = linalg::solve(n, a, r_pi.clone())?;
    let residual: Vec<f64> = (0..n)
        .map(|i| {
            let pv: f64 = (0..n).map(|j| p_pi[i * n + j] * v[j]).sum();
            r_pi[i] + mdp.gamma * pv - v[i]
        })
        .collect();
    let scale = 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let worst = residual.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if worst > 1e-10 * scale {
        return Err(Error::SolveFailure);
    }
    Ok(ValueVector(v))
}

/// `J(π) = μ₀ · V^π`.
pub fn policy_return_j(mdp: &Mdp, reward: &RewardTable, pi: &Policy) -> Result<f64> {
    let v = policy_eval_v(mdp, reward, pi)?;
    Ok(dot(&mdp.mu0, &v.0))
}

pub(crate) fn return_from_expected(mdp: &Mdp, expected: &[f64], pi: &Policy) -> Result<f64> {
    let v = eval_from_expected(mdp, expected, pi)?;
    Ok(dot(&mdp.mu0, &v.0))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discounted state visitation `ρ = μ₀ + γ P_πᵀ ρ`.
fn state_occupancy(mdp: &Mdp, pi: &Policy) -> Result<Vec<f64>> {
    let n = mdp.n_states;
    let zeros = vec![0.0; n * mdp.n_actions];
    let (p_pi, _) = policy_matrices(mdp, &zeros, pi);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            // Row i of (I - γ P_πᵀ).
            a[i * n + j] = if i == j { 1.0 } else { 0.0 } - mdp.gamma * p_pi[j * n + i];
        }
    }
    linalg::solve(n, a, mdp.mu0.clone())
}

/// Occupancy measure of `pi` obtained from the flow equations.
pub fn occupancy(mdp: &Mdp, pi: &Policy) -> Result<OccupancyMeasure> {
    check_policy(mdp, pi)?;
    let rho = state_occupancy(mdp, pi)?;
    let (n, k) = (mdp.n_states, mdp.n_actions);
    let mut state_action = vec![0.0; n * k];
    let mut mass = vec![0.0; n * k * n];
    for s in 0..n {
        for a in 0..k {
            let d = rho[s].max(0.0) * pi.prob(s, a);
            state_action[s * k + a] = d;
            for (x, &p) in mdp.row(s, a).iter().enumerate() {
                mass[(s * k + a) * n + x] = d * p;
            }
        }
    }
    Ok(OccupancyMeasure {
        n_states: n,
        n_actions: k,
        state_action,
        mass,
    })
}

/// Result of Q-value iteration.
#[derive(Clone, Debug)]
pub struct QSolution {
    pub policy: Policy,
    /// `q[s * n_actions + a]`.
    pub q: Vec<f64>,
    pub iterations: usize,
}

/// Q-value iteration to a sup-norm change below `1e-10` (relative to the
/// Q scale once it exceeds 1); greedy ties go to the lowest action index.
pub fn q_iteration(mdp: &Mdp, reward: &RewardTable) -> Result<QSolution> {
    mdp.check_reward(reward)?;
    let expected = expected_reward(mdp, reward);
    q_iteration_expected(mdp, &expected)
}

pub(crate) fn q_iteration_expected(mdp: &Mdp, expected: &[f64]) -> Result<QSolution> {
    let (n, k) = (mdp.n_states, mdp.n_actions);
    let mut q = expected.to_vec();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n * k];
    let mut residual = f64::INFINITY;
    for iter in 1..=Q_MAX_ITERS {
        for s in 0..n {
            v[s] = q[s * k..(s + 1) * k].iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        }
        residual = 0.0;
        let mut scale = 1.0f64;
        for s in 0..n {
            for a in 0..k {
                let future: f64 = mdp.row(s, a).iter().zip(&v).map(|(p, x)| p * x).sum();
                let value = expected[s * k + a] + mdp.gamma * future;
                residual = residual.max((value - q[s * k + a]).abs());
                scale = scale.max(value.abs());
                next[s * k + a] = value;
            }
        }
        std::mem::swap(&mut q, &mut next);
        if residual < Q_TOL * scale {
            let acts = (0..n)
                .map(|s| {
                    let row = &q[s * k..(s + 1) * k];
                    let mut best = 0;
                    for a in 1..k {
                        if row[a] > row[best] {
                            best = a;
                        }
                    }
                    best
                })
                .collect();
            return Ok(QSolution {
                policy: Policy::Deterministic(acts),
                q,
                iterations: iter,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "Q-value iteration",
        iterations: Q_MAX_ITERS,
        residual,
    })
}

/// Greedy deterministic policy maximising `J` under `reward`.
pub fn optimal_policy(mdp: &Mdp, reward: &RewardTable) -> Result<Policy> {
    Ok(q_iteration(mdp, reward)?.policy)
}

/// Policy minimising `J` under `reward`, i.e. optimal for `-reward`.
pub fn worst_policy(mdp: &Mdp, reward: &RewardTable) -> Result<Policy> {
    optimal_policy(mdp, &-reward)
}

pub(crate) fn optimal_from_expected(mdp: &Mdp, expected: &[f64]) -> Result<Policy> {
    Ok(q_iteration_expected(mdp, expected)?.policy)
}

pub(crate) fn worst_from_expected(mdp: &Mdp, expected: &[f64]) -> Result<Policy> {
    let negated: Vec<f64> = expected.iter().map(|v| -v).collect();
    optimal_from_expected(mdp, &negated)
}

/// A sampled path of fixed length.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// `(state, action, next_state)` per step.
    pub steps: Vec<(usize, usize, usize)>,
}

impl Trajectory {
    /// Discounted return `Σ γ^t R(s_t, a_t, s_{t+1})`.
    pub fn discounted_return(&self, reward: &RewardTable, gamma: f64) -> f64 {
        let mut total = 0.0;
        let mut discount = 1.0;
        for &(s, a, x) in &self.steps {
            total += discount * reward.get(s, a, x);
            discount *= gamma;
        }
        total
    }
}

pub fn simulate_trajectory<R: Rng + ?Sized>(
    mdp: &Mdp,
    pi: &Policy,
    start_state: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    check_policy(mdp, pi)?;
    if start_state >= mdp.n_states {
        return Err(Error::ShapeMismatch(format!("start state {start_state} out of range")));
    }
    let mut steps = Vec::with_capacity(horizon);
    let mut s = start_state;
    for _ in 0..horizon {
        let a = pi.sample_action(s, rng);
        let x = sample_index(mdp.row(s, a), rng);
        steps.push((s, a, x));
        s = x;
    }
    Ok(Trajectory { steps })
}

/// Return of one sampled episode of exactly `horizon` steps.
pub fn simulate_return<R: Rng + ?Sized>(
    mdp: &Mdp,
    reward: &RewardTable,
    pi: &Policy,
    start_state: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<f64> {
    mdp.check_reward(reward)?;
    if horizon == 0 {
        return Err(Error::ShapeMismatch("horizon must be at least 1".into()));
    }
    let traj = simulate_trajectory(mdp, pi, start_state, horizon, rng)?;
    Ok(traj.discounted_return(reward, mdp.gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_cycle(gamma: f64) -> Mdp {
        Mdp::deterministic(2, 1, |s, _| 1 - s, vec![1.0, 0.0], gamma).unwrap()
    }

    fn random_mdp(n: usize, k: usize, seed: u64) -> Mdp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for _ in 0..n * k {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
            let total: f64 = raw.iter().sum();
            t.extend(raw.iter().map(|v| v / total));
        }
        Mdp::new(n, k, t, vec![1.0 / n as f64; n], 0.9).unwrap()
    }

    fn random_reward(n: usize, k: usize, seed: u64) -> RewardTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RewardTable::from_fn(n, k, |_, _, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn validate_accepts_well_formed() {
        validate_mdp(&two_cycle(0.9)).unwrap();
    }

    #[test]
    fn validate_rejects_short_row() {
        let mdp = Mdp::new(2, 1, vec![0.5, 0.4, 0.0, 1.0], vec![0.5, 0.5], 0.9).unwrap();
        assert!(matches!(
            validate_mdp(&mdp),
            Err(Error::NonStochasticRow { state: 0, action: 0 })
        ));
    }

    #[test]
    fn validate_rejects_gamma_one() {
        assert!(matches!(validate_mdp(&two_cycle(1.0)), Err(Error::BadGamma(_))));
    }

    #[test]
    fn validate_rejects_bad_mu0_and_unreachable() {
        let mdp = two_cycle(0.9).with_mu0(vec![0.7, 0.7]).unwrap();
        assert!(matches!(validate_mdp(&mdp), Err(Error::BadInitialDistribution)));
        let absorbing = Mdp::deterministic(2, 1, |_, _| 0, vec![1.0, 0.0], 0.9).unwrap();
        assert!(matches!(validate_mdp(&absorbing), Err(Error::UnreachableState(1))));
    }

    #[test]
    fn constant_reward_gives_geometric_value() {
        let mdp = random_mdp(3, 2, 1);
        let v = policy_eval_v(&mdp, &RewardTable::constant(3, 2, 2.5), &Policy::uniform(3, 2)).unwrap();
        for x in v.0 {
            assert!((x - 25.0).abs() < 1e-10);
        }
        let zero = policy_eval_v(&mdp, &RewardTable::zeros(3, 2), &Policy::uniform(3, 2)).unwrap();
        assert!(zero.0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_cycle_matches_hand_solve() {
        // V0 = r0 + γ V1, V1 = r1 + γ V0  =>  V0 = (r0 + γ r1) / (1 - γ²).
        let gamma = 0.8;
        let mdp = two_cycle(gamma);
        let mut r = RewardTable::zeros(2, 1);
        r.set(0, 0, 1, 3.0);
        r.set(1, 0, 0, -1.0);
        let v = policy_eval_v(&mdp, &r, &Policy::Deterministic(vec![0, 0])).unwrap();
        let v0 = (3.0 - gamma) / (1.0 - gamma * gamma);
        let v1 = (-1.0 + gamma * 3.0) / (1.0 - gamma * gamma);
        assert!((v.0[0] - v0).abs() < 1e-12);
        assert!((v.0[1] - v1).abs() < 1e-12);
    }

    #[test]
    fn return_matches_occupancy_dot() {
        for seed in 0..20 {
            let mdp = random_mdp(3, 2, seed);
            let r = random_reward(3, 2, seed + 100);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pi = Policy::random_stochastic(3, 2, &mut rng);
            let j = policy_return_j(&mdp, &r, &pi).unwrap();
            let m = occupancy(&mdp, &pi).unwrap();
            assert!((m.dot(&r) - j).abs() <= 1e-8 * (1.0 + j.abs()));
            assert!((m.total() - 10.0).abs() < 1e-8);
        }
    }

    #[test]
    fn occupancy_of_single_state() {
        let mdp = Mdp::deterministic(1, 3, |_, _| 0, vec![1.0], 0.75).unwrap();
        let m = occupancy(&mdp, &Policy::uniform(1, 3)).unwrap();
        assert!((m.total() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn occupancy_matches_power_series_on_cycle() {
        let gamma = 0.9;
        let mdp = two_cycle(gamma);
        let m = occupancy(&mdp, &Policy::Deterministic(vec![0, 0])).unwrap();
        // Truncated power series: state 0 at even t, state 1 at odd t.
        let (mut even, mut odd) = (0.0, 0.0);
        for t in 0..500 {
            let w = gamma.powi(t);
            if t % 2 == 0 {
                even += w;
            } else {
                odd += w;
            }
        }
        assert!((m.get(0, 0, 1) - even).abs() < 1e-10);
        assert!((m.get(1, 0, 0) - odd).abs() < 1e-10);
        assert_eq!(m.get(0, 0, 0), 0.0);
    }

    #[test]
    fn zero_reward_breaks_ties_low() {
        let mdp = random_mdp(3, 3, 4);
        let pi = optimal_policy(&mdp, &RewardTable::zeros(3, 3)).unwrap();
        assert_eq!(pi, Policy::Deterministic(vec![0, 0, 0]));
        let worst = worst_policy(&mdp, &RewardTable::zeros(3, 3)).unwrap();
        assert_eq!(worst, Policy::Deterministic(vec![0, 0, 0]));
    }

    #[test]
    fn dominant_action_is_selected() {
        let mdp = random_mdp(4, 2, 5);
        let r = RewardTable::from_fn(4, 2, |_, a, _| if a == 1 { 1.0 } else { 0.0 });
        assert_eq!(optimal_policy(&mdp, &r).unwrap(), Policy::Deterministic(vec![1; 4]));
    }

    #[test]
    fn optimal_and_worst_match_enumeration() {
        for seed in 0..10 {
            let mdp = random_mdp(3, 2, seed);
            let r = random_reward(3, 2, seed + 50);
            let all = Policy::enumerate_deterministic(3, 2);
            let js: Vec<f64> = all.iter().map(|p| policy_return_j(&mdp, &r, p).unwrap()).collect();
            let best = js.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let low = js.iter().cloned().fold(f64::INFINITY, f64::min);
            let jo = policy_return_j(&mdp, &r, &optimal_policy(&mdp, &r).unwrap()).unwrap();
            let jw = policy_return_j(&mdp, &r, &worst_policy(&mdp, &r).unwrap()).unwrap();
            assert!(jo >= best - 1e-6);
            assert!(jw <= low + 1e-6);
            assert_eq!(worst_policy(&mdp, &r).unwrap(), optimal_policy(&mdp, &-&r).unwrap());
        }
    }

    #[test]
    fn constant_reward_rollout_is_geometric_sum() {
        let mdp = random_mdp(3, 2, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = simulate_return(
            &mdp,
            &RewardTable::constant(3, 2, 1.0),
            &Policy::uniform(3, 2),
            0,
            50,
            &mut rng,
        )
        .unwrap();
        let expected = (1.0 - 0.9f64.powi(50)) / (1.0 - 0.9);
        assert!((g - expected).abs() < 1e-12);
    }

    #[test]
    fn deterministic_rollout_is_closed_form() {
        let gamma = 0.5;
        let mdp = two_cycle(gamma);
        let mut r = RewardTable::zeros(2, 1);
        r.set(0, 0, 1, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = simulate_return(&mdp, &r, &Policy::Deterministic(vec![0, 0]), 0, 4, &mut rng).unwrap();
        assert_eq!(g, 1.0 + 0.25);
    }

    #[test]
    fn rollout_mean_matches_value() {
        let mdp = random_mdp(3, 2, 11);
        let r = random_reward(3, 2, 12);
        let pi = Policy::uniform(3, 2);
        let v = policy_eval_v(&mdp, &r, &pi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let samples: Vec<f64> = (0..10_000)
            .map(|_| simulate_return(&mdp, &r, &pi, 1, 200, &mut rng).unwrap())
            .collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        let se = (var / samples.len() as f64).sqrt();
        assert!((mean - v.0[1]).abs() < 3.0 * se, "{mean} vs {}", v.0[1]);
    }
}
