//! Seeded generation of random environments, reward pairs and
//! interpolation sweeps.
//!
//! Every generator owns a `ChaCha8Rng` seeded from a 64-bit value.
//! Gaussians come from `rand_distr::StandardNormal` (ziggurat method) and
//! uniforms from the generator's `[0, 1)` doubles, so output is reproducible
//! bit-for-bit within this implementation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::reward::RewardTable;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub transition_sparsity_threshold: f64,
    pub transition_sparsity_fill: f64,
    pub reward_sparsify_prob: f64,
    pub reward_sparsify_threshold: f64,
    pub scale_prob: f64,
    pub scale_range: (f64, f64),
    pub translate_prob: f64,
    pub translate_range: (f64, f64),
    pub shaping_prob: f64,
    pub shaping_scale_range: (f64, f64),
    pub shaping_shift_range: (f64, f64),
    pub interp_steps: usize,
    pub pairs_per_env: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_states: 32,
            n_actions: 4,
            gamma: 0.95,
            transition_sparsity_threshold: 1.0,
            transition_sparsity_fill: -20.0,
            reward_sparsify_prob: 0.2,
            reward_sparsify_threshold: 3.0,
            scale_prob: 0.7,
            scale_range: (0.0, 10.0),
            translate_prob: 0.3,
            translate_range: (0.0, 10.0),
            shaping_prob: 0.5,
            shaping_scale_range: (0.0, 10.0),
            shaping_shift_range: (0.0, 1.0),
            interp_steps: 16,
            pairs_per_env: 16,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 || self.interp_steps == 0 || self.pairs_per_env == 0 {
            return Err(Error::Config("counts must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::BadGamma(self.gamma));
        }
        let probs = [
            ("reward_sparsify_prob", self.reward_sparsify_prob),
            ("scale_prob", self.scale_prob),
            ("translate_prob", self.translate_prob),
            ("shaping_prob", self.shaping_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        let ranges = [
            ("scale_range", self.scale_range),
            ("translate_range", self.translate_range),
            ("shaping_scale_range", self.shaping_scale_range),
            ("shaping_shift_range", self.shaping_shift_range),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("{name} = ({lo}, {hi}) is not an ordered range")));
            }
        }
        for (name, v) in [
            ("transition_sparsity_threshold", self.transition_sparsity_threshold),
            ("transition_sparsity_fill", self.transition_sparsity_fill),
            ("reward_sparsify_threshold", self.reward_sparsify_threshold),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Sets one field from its textual `key = value` form. Returns `false`
    /// for keys that are not generator settings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse `{value}` for {key}")))
        }
        fn range(key: &str, value: &str) -> Result<(f64, f64)> {
            let (lo, hi) = value
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("{key} expects `lo, hi`")))?;
            Ok((num(key, lo)?, num(key, hi)?))
        }
        match key {
            "n_states" => self.n_states = num(key, value)?,
            "n_actions" => self.n_actions = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "transition_sparsity_threshold" => self.transition_sparsity_threshold = num(key, value)?,
            "transition_sparsity_fill" => self.transition_sparsity_fill = num(key, value)?,
            "reward_sparsify_prob" => self.reward_sparsify_prob = num(key, value)?,
            "reward_sparsify_threshold" => self.reward_sparsify_threshold = num(key, value)?,
            "scale_prob" => self.scale_prob = num(key, value)?,
            "scale_range" => self.scale_range = range(key, value)?,
            "translate_prob" => self.translate_prob = num(key, value)?,
            "translate_range" => self.translate_range = range(key, value)?,
            "shaping_prob" => self.shaping_prob = num(key, value)?,
            "shaping_scale_range" => self.shaping_scale_range = range(key, value)?,
            "shaping_shift_range" => self.shaping_shift_range = range(key, value)?,
            "interp_steps" => self.interp_steps = num(key, value)?,
            "pairs_per_env" => self.pairs_per_env = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Stream roles mixed into [`sub_seed`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum SeedRole {
    Env = 0,
    Reward1 = 1,
    Reward2 = 2,
    Rollout = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(splitmix64(master) ^ env) ^ pair) ^ role)`.
pub fn sub_seed(master: u64, env_index: u64, pair_index: u64, role: SeedRole) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ env_index);
    let h = splitmix64(h ^ pair_index);
    splitmix64(h ^ role as u64)
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Whether a step with probability `p` fires: draw `u ~ U[0,1)`, fire iff `u > 1 − p`.
fn fires(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.random::<f64>() > 1.0 - p
}

/// Pre-softmax transition logits: Gaussians, with entries below the
/// threshold replaced by the fill value.
pub fn transition_logits(config: &GenConfig, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.n_states * config.n_actions * config.n_states;
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            if z < config.transition_sparsity_threshold {
                config.transition_sparsity_fill
            } else {
                z
            }
        })
        .collect()
}

/// Random environment: thresholded Gaussian logits, softmax over the next
/// state, uniform initial distribution.
pub fn gen_mdp(config: &GenConfig, seed: u64) -> Result<Mdp> {
    config.validate()?;
    let n = config.n_states;
    let mut t = transition_logits(config, seed);
    for row in t.chunks_mut(n) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Mdp::new(n, config.n_actions, t, vec![1.0 / n as f64; n], config.gamma)
}

/// Which random transforms fired while generating a reward.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RewardTrace {
    pub sparsified: bool,
    pub scale: Option<f64>,
    pub translation: Option<f64>,
    pub potential: Option<Vec<f64>>,
}

pub fn gen_reward(config: &GenConfig, seed: u64, n_states: usize, n_actions: usize) -> Result<RewardTable> {
    Ok(gen_reward_traced(config, seed, n_states, n_actions)?.0)
}

/// Gaussian reward followed by sparsification, scaling, translation and
/// potential shaping, each applied with its configured probability in that
/// order.
pub fn gen_reward_traced(
    config: &GenConfig,
    seed: u64,
    n_states: usize,
    n_actions: usize,
) -> Result<(RewardTable, RewardTrace)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = RewardTrace::default();
    let mut r = RewardTable::from_fn(n_states, n_actions, |_, _, _| rng.sample(StandardNormal));

    if fires(&mut rng, config.reward_sparsify_prob) {
        trace.sparsified = true;
        let threshold = config.reward_sparsify_threshold;
        r = r.map(|v| if v < threshold { 0.0 } else { v });
    }
    if fires(&mut rng, config.scale_prob) {
        let alpha = uniform(&mut rng, config.scale_range);
        trace.scale = Some(alpha);
        r = r.scale(alpha);
    }
    if fires(&mut rng, config.translate_prob) {
        let beta = uniform(&mut rng, config.translate_range);
        trace.translation = Some(beta);
        r = r.map(|v| v + beta);
    }
    if fires(&mut rng, config.shaping_prob) {
        let raw: Vec<f64> = (0..n_states).map(|_| rng.sample(StandardNormal)).collect();
        let scale = uniform(&mut rng, config.shaping_scale_range);
        let shift = uniform(&mut rng, config.shaping_shift_range);
        let phi: Vec<f64> = raw.iter().map(|z| z * scale + shift).collect();
        r = shape_by_gamma(&r, &phi, config.gamma);
        trace.potential = Some(phi);
    }
    Ok((r, trace))
}

fn shape_by_gamma(r: &RewardTable, phi: &[f64], gamma: f64) -> RewardTable {
    RewardTable::from_fn(r.n_states(), r.n_actions(), |s, a, x| {
        r.get(s, a, x) + gamma * phi[x] - phi[s]
    })
}

/// `[R₁ + i·(R₂ − R₁)/steps for i = 1..=steps]`.
pub fn interpolate(r1: &RewardTable, r2: &RewardTable, steps: usize) -> Result<Vec<RewardTable>> {
    r1.check_same_shape(r2)?;
    if steps == 0 {
        return Err(Error::Config("interpolation needs at least one step".into()));
    }
    Ok((1..=steps)
        .map(|i| {
            if i == steps {
                return r2.clone();
            }
            let t = i as f64 / steps as f64;
            r1.zip_with(r2, |a, b| a + t * (b - a))
        })
        .collect())
}

/// Seeds used for one reward pair of a batch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSeeds {
    pub pair_index: usize,
    pub r1: u64,
    pub r2: u64,
    pub rollout: u64,
}

/// One environment with its reward pairs and interpolation sweeps.
#[derive(Clone, Debug)]
pub struct RewardPairBatch {
    pub env_index: usize,
    pub master_seed: u64,
    pub env_seed: u64,
    pub env: Mdp,
    pub seeds: Vec<PairSeeds>,
    pub base_pairs: Vec<(RewardTable, RewardTable)>,
    pub interpolants: Vec<Vec<RewardTable>>,
}

impl RewardPairBatch {
    pub fn n_comparisons(&self) -> usize {
        self.interpolants.iter().map(Vec::len).sum()
    }
}

pub fn gen_batch(config: &GenConfig, master_seed: u64, env_index: usize) -> Result<RewardPairBatch> {
    config.validate()?;
    let env_seed = sub_seed(master_seed, env_index as u64, 0, SeedRole::Env);
    let env = gen_mdp(config, env_seed)?;
    let (n, k) = (config.n_states, config.n_actions);
    let mut seeds = Vec::with_capacity(config.pairs_per_env);
    let mut base_pairs = Vec::with_capacity(config.pairs_per_env);
    let mut interpolants = Vec::with_capacity(config.pairs_per_env);
    for p in 0..config.pairs_per_env {
        let pair_seeds = PairSeeds {
            pair_index: p,
            r1: sub_seed(master_seed, env_index as u64, p as u64, SeedRole::Reward1),
            r2: sub_seed(master_seed, env_index as u64, p as u64, SeedRole::Reward2),
            rollout: sub_seed(master_seed, env_index as u64, p as u64, SeedRole::Rollout),
        };
        let r1 = gen_reward(config, pair_seeds.r1, n, k)?;
        let r2 = gen_reward(config, pair_seeds.r2, n, k)?;
        interpolants.push(interpolate(&r1, &r2, config.interp_steps)?);
        base_pairs.push((r1, r2));
        seeds.push(pair_seeds);
    }
    Ok(RewardPairBatch {
        env_index,
        master_seed,
        env_seed,
        env,
        seeds,
        base_pairs,
        interpolants,
    })
}
