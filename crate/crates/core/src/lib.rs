//! Tabular MDPs, reward canonicalisation, reward pseudometrics and the
//! regret-correlation experiment built on them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canon;
pub mod config;
pub mod error;
pub mod gen;
pub mod harness;
pub mod io;
pub mod lp;
pub mod mdp;
pub mod metrics;
pub mod policy;
pub mod regret;
pub mod reward;
pub mod validation;

mod linalg;

pub use canon::{canonicalise, CanonId, CanonOptions, PotentialVector};
pub use error::{Error, Result};
pub use mdp::{Mdp, OccupancyMeasure, ValueVector};
pub use metrics::{DistId, DistributionPair, MetricSpec, NormId};
pub use policy::Policy;
pub use reward::RewardTable;
