//! JSON documents for environments, rewards and generated batches.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::{PairSeeds, RewardPairBatch};
use crate::mdp::{validate_mdp, Mdp};
use crate::reward::RewardTable;

type Nested = Vec<Vec<Vec<f64>>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub master_seed: u64,
    pub env_index: usize,
    pub env_seed: u64,
    pub pairs: Vec<PairSeeds>,
    pub interp_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchPair {
    pub r1: Nested,
    pub r2: Nested,
}

/// An environment, optionally with one reward or a generated batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvDocument {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub mu0: Vec<f64>,
    pub transition: Nested,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<Nested>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_manifest: Option<BatchManifest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_pairs: Option<Vec<BatchPair>>,
}

impl EnvDocument {
    pub fn from_mdp(mdp: &Mdp) -> Self {
        Self {
            n_states: mdp.n_states(),
            n_actions: mdp.n_actions(),
            gamma: mdp.gamma(),
            mu0: mdp.mu0().to_vec(),
            transition: mdp.to_nested(),
            reward: None,
            batch_manifest: None,
            reward_pairs: None,
        }
    }

    pub fn from_batch(batch: &RewardPairBatch) -> Self {
        let mut doc = Self::from_mdp(&batch.env);
        doc.batch_manifest = Some(BatchManifest {
            master_seed: batch.master_seed,
            env_index: batch.env_index,
            env_seed: batch.env_seed,
            pairs: batch.seeds.clone(),
            interp_steps: batch.interpolants.first().map_or(0, Vec::len),
        });
        doc.reward_pairs = Some(
            batch
                .base_pairs
                .iter()
                .map(|(r1, r2)| BatchPair {
                    r1: r1.to_nested(),
                    r2: r2.to_nested(),
                })
                .collect(),
        );
        doc
    }

    /// Builds and validates the environment.
    pub fn to_mdp(&self) -> Result<Mdp> {
        let mdp = Mdp::from_nested(&self.transition, self.mu0.clone(), self.gamma)?;
        if mdp.n_states() != self.n_states || mdp.n_actions() != self.n_actions {
            return Err(Error::ShapeMismatch(format!(
                "declared {}x{} but transition is {}x{}",
                self.n_states,
                self.n_actions,
                mdp.n_states(),
                mdp.n_actions()
            )));
        }
        validate_mdp(&mdp)?;
        Ok(mdp)
    }
}

/// A single reward table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardDocument {
    pub n_states: usize,
    pub n_actions: usize,
    pub reward: Nested,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RewardDocument {
    pub fn new(reward: &RewardTable, seed: Option<u64>) -> Self {
        Self {
            n_states: reward.n_states(),
            n_actions: reward.n_actions(),
            reward: reward.to_nested(),
            seed,
        }
    }

    pub fn to_reward(&self) -> Result<RewardTable> {
        let r = RewardTable::from_nested(&self.reward)?;
        r.check_shape(self.n_states, self.n_actions)?;
        Ok(r)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_mdp(path: &Path) -> Result<Mdp> {
    read_json::<EnvDocument>(path)?.to_mdp()
}

/// Reads the `reward` entry of a reward or environment document.
pub fn load_reward(path: &Path) -> Result<RewardTable> {
    read_json::<RewardDocument>(path)?.to_reward()
}

pub fn save_mdp(mdp: &Mdp, path: &Path) -> Result<()> {
    write_json(&EnvDocument::from_mdp(mdp), path)
}

pub fn save_reward(reward: &RewardTable, seed: Option<u64>, path: &Path) -> Result<()> {
    write_json(&RewardDocument::new(reward, seed), path)
}
