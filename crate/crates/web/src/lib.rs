//! Browser demo: three small experiments exposed to JavaScript as
//! functions returning JSON strings. The plain Rust functions are tested
//! natively; the `wasm_bindgen` wrappers only serialise.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use reward_lab::gen::{gen_mdp, gen_reward, interpolate, sub_seed, GenConfig, SeedRole};
use reward_lab::metrics::{epic_distance, parse_metric_spec, starc_distance, DistributionPair, MetricSpec};
use reward_lab::regret::{
    cycle_mdp, make_offsupport_inflation_pair, make_equal_order_pair, optimal_pair_regret_seeded, policy_order_equal,
    worst_case_regret, RegretMode,
};
use reward_lab::Result;

pub const MAX_STATES: usize = 16;
pub const MAX_ACTIONS: usize = 4;
pub const MAX_STEPS: usize = 64;

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub step: usize,
    pub regret: f64,
    pub distances: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Sweep {
    pub metrics: Vec<String>,
    pub points: Vec<SweepPoint>,
    /// Pearson correlation of each metric with regret over the sweep.
    pub correlations: Vec<Option<f64>>,
}

fn parse_specs(metrics: &str) -> Result<Vec<MetricSpec>> {
    metrics
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_metric_spec)
        .collect()
}

fn correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Interpolates between two random rewards on a random MDP and records
/// regret and each metric's distance from the first reward at every step.
pub fn interpolation_sweep(seed: u64, n_states: usize, n_actions: usize, steps: usize, metrics: &str) -> Result<Sweep> {
    let bad = |what: &str| reward_lab::Error::Config(what.to_string());
    if !(1..=MAX_STATES).contains(&n_states) || !(1..=MAX_ACTIONS).contains(&n_actions) {
        return Err(bad(&format!(
            "demo supports 1..={MAX_STATES} states and 1..={MAX_ACTIONS} actions"
        )));
    }
    if !(1..=MAX_STEPS).contains(&steps) {
        return Err(bad(&format!("steps must be in 1..={MAX_STEPS}")));
    }
    let specs = parse_specs(metrics)?;
    if specs.is_empty() {
        return Err(bad("no metrics given"));
    }
    let config = GenConfig {
        n_states,
        n_actions,
        ..GenConfig::default()
    };
    let mdp = gen_mdp(&config, sub_seed(seed, 0, 0, SeedRole::Env))?;
    let r1 = gen_reward(&config, sub_seed(seed, 0, 0, SeedRole::Reward1), n_states, n_actions)?;
    let r2 = gen_reward(&config, sub_seed(seed, 0, 0, SeedRole::Reward2), n_states, n_actions)?;
    let dists = DistributionPair::uniform(n_states, n_actions);

    let mut points = Vec::with_capacity(steps);
    for (i, r) in interpolate(&r1, &r2, steps)?.iter().enumerate() {
        let regret = optimal_pair_regret_seeded(&mdp, &r1, r, RegretMode::Exact, 0)?.regret;
        let distances = specs
            .iter()
            .map(|spec| starc_distance(spec, &r1, r, &mdp, &dists))
            .collect::<Result<_>>()?;
        points.push(SweepPoint {
            step: i + 1,
            regret,
            distances,
        });
    }
    let regrets: Vec<f64> = points.iter().map(|p| p.regret).collect();
    let correlations = (0..specs.len())
        .map(|m| correlation(&points.iter().map(|p| p.distances[m]).collect::<Vec<_>>(), &regrets))
        .collect();
    Ok(Sweep {
        metrics: specs.iter().map(ToString::to_string).collect(),
        points,
        correlations,
    })
}

#[derive(Debug, Serialize)]
pub struct EqualOrderReport {
    pub epsilon: f64,
    pub epic: f64,
    pub val_2_2: f64,
    pub same_policy_order: bool,
    pub worst_case_regret: f64,
}

/// A pair with identical policy orders that EPIC nonetheless separates.
pub fn equal_order_explorer(epsilon: f64, seed: u64) -> Result<EqualOrderReport> {
    let pair = make_equal_order_pair(3, 2, epsilon, seed)?;
    let dists = DistributionPair::uniform(3, 2);
    let spec = parse_metric_spec("VAL-2-2")?;
    Ok(EqualOrderReport {
        epsilon,
        epic: epic_distance(&pair.r1, &pair.r2, pair.mdp.gamma(), &dists)?,
        val_2_2: starc_distance(&spec, &pair.r1, &pair.r2, &pair.mdp, &dists)?,
        same_policy_order: policy_order_equal(&pair.mdp, &pair.r1, &pair.r2)?,
        worst_case_regret: worst_case_regret(&pair.mdp, &pair.r1, &pair.r2)?,
    })
}

#[derive(Debug, Serialize)]
pub struct LadderRung {
    pub inflation: f64,
    pub epic: f64,
    pub val_2_2: f64,
    pub worst_case_regret: f64,
}

/// Opposite rewards with a growing shared term on impossible transitions:
/// EPIC shrinks towards 0, regret stays maximal.
pub fn offsupport_ladder(epsilon: f64, rungs: usize) -> Result<Vec<LadderRung>> {
    if rungs == 0 || rungs > 8 {
        return Err(reward_lab::Error::Config("rungs must be in 1..=8".into()));
    }
    let mdp = cycle_mdp(3, 2, 0.9)?;
    let dists = DistributionPair::uniform(3, 2);
    let spec = parse_metric_spec("VAL-2-2")?;
    (0..rungs)
        .map(|k| {
            let inflation = if k == 0 { 0.0 } else { 10f64.powi(k as i32 - 1) };
            let pair = make_offsupport_inflation_pair(&mdp, epsilon, inflation)?;
            Ok(LadderRung {
                inflation,
                epic: epic_distance(&pair.r1, &pair.r2, mdp.gamma(), &dists)?,
                val_2_2: starc_distance(&spec, &pair.r1, &pair.r2, &mdp, &dists)?,
                worst_case_regret: worst_case_regret(&mdp, &pair.r1, &pair.r2)?,
            })
        })
        .collect()
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsValue> {
    value
        .map_err(|e| JsValue::from_str(&e.to_string()))
        .and_then(|v| serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string())))
}

#[wasm_bindgen(js_name = interpolationSweep)]
pub fn interpolation_sweep_js(
    seed: u32,
    n_states: usize,
    n_actions: usize,
    steps: usize,
    metrics: &str,
) -> std::result::Result<String, JsValue> {
    to_js(interpolation_sweep(seed as u64, n_states, n_actions, steps, metrics))
}

#[wasm_bindgen(js_name = equalOrderExplorer)]
pub fn equal_order_explorer_js(epsilon: f64, seed: u32) -> std::result::Result<String, JsValue> {
    to_js(equal_order_explorer(epsilon, seed as u64))
}

#[wasm_bindgen(js_name = offsupportLadder)]
pub fn offsupport_ladder_js(epsilon: f64, rungs: usize) -> std::result::Result<String, JsValue> {
    to_js(offsupport_ladder(epsilon, rungs))
}
