use proptest::prelude::*;

use reward_lab::canon::{apply_shaping, PotentialVector};
use reward_lab::gen::{gen_mdp, GenConfig};
use reward_lab::io::{load_mdp, load_reward, save_mdp, save_reward};
use reward_lab::mdp::{occupancy, policy_return_j};
use reward_lab::metrics::{
    epic_distance, epic_distance_norm_form, parse_metric_spec, starc_distance, DistributionPair,
};
use reward_lab::regret::{optimal_pair_regret_seeded, worst_case_regret, RegretMode};
use reward_lab::{Mdp, Policy, RewardTable};

const MAX_ENTRIES: usize = 2 * 6 * 4 * 6;

fn entries() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, MAX_ENTRIES)
}

/// Random MDP plus two rewards cut from `values`.
fn instance(seed: u64, n_states: usize, n_actions: usize, values: &[f64]) -> (Mdp, RewardTable, RewardTable) {
    let config = GenConfig {
        n_states,
        n_actions,
        gamma: 0.9,
        ..GenConfig::default()
    };
    let mdp = gen_mdp(&config, seed).unwrap();
    let len = n_states * n_actions * n_states;
    let r1 = RewardTable::from_vec(n_states, n_actions, values[..len].to_vec()).unwrap();
    let r2 = RewardTable::from_vec(n_states, n_actions, values[len..2 * len].to_vec()).unwrap();
    (mdp, r1, r2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn starc_distance_ignores_shaping_and_scale(
        seed in any::<u64>(),
        v in entries(),
        n in 2usize..6,
        alpha in 0.05f64..20.0,
        phi in prop::collection::vec(-5.0f64..5.0, 6),
    ) {
        let (mdp, r, _) = instance(seed, n, 2, &v);
        let shaped = apply_shaping(&r, &PotentialVector(phi[..n].to_vec()), &mdp).unwrap().scale(alpha);
        let dists = DistributionPair::uniform(n, 2);
        for text in ["VAL-2-2", "VAL-1-1", "MinimalL2-2-2"] {
            let spec = parse_metric_spec(text).unwrap();
            let d = starc_distance(&spec, &r, &shaped, &mdp, &dists).unwrap();
            prop_assert!(d <= 1e-8, "{text}: {d}");
        }
    }

    #[test]
    fn starc_distance_is_symmetric(seed in any::<u64>(), v in entries(), n in 2usize..6) {
        let (mdp, r1, r2) = instance(seed, n, 3, &v);
        let dists = DistributionPair::uniform(n, 3);
        for text in ["VAL-2-2", "EPIC-2-2", "DARD-1-1", "VALPotential-1-weighted_1"] {
            let spec = parse_metric_spec(text).unwrap();
            let ab = starc_distance(&spec, &r1, &r2, &mdp, &dists).unwrap();
            let ba = starc_distance(&spec, &r2, &r1, &mdp, &dists).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12, "{text}: {ab} vs {ba}");
            prop_assert!(ab.is_finite() && ab >= 0.0);
        }
    }

    #[test]
    fn epic_forms_agree(seed in any::<u64>(), v in entries(), n in 2usize..6) {
        let (mdp, r1, r2) = instance(seed, n, 2, &v);
        let dists = DistributionPair::uniform(n, 2);
        let pearson = epic_distance(&r1, &r2, mdp.gamma(), &dists).unwrap();
        let norm = epic_distance_norm_form(&r1, &r2, mdp.gamma(), &dists).unwrap();
        prop_assert!((pearson - norm).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&pearson));
    }

    #[test]
    fn worst_case_regret_dominates_forward_regret(seed in any::<u64>(), v in entries(), n in 2usize..5) {
        let (mdp, r1, r2) = instance(seed, n, 2, &v);
        let report = optimal_pair_regret_seeded(&mdp, &r1, &r2, RegretMode::Exact, 0).unwrap();
        let worst = worst_case_regret(&mdp, &r1, &r2).unwrap();
        prop_assert!((0.0..=1.0).contains(&report.regret));
        prop_assert!((report.regret - (report.reg_forward + report.reg_backward) / 2.0).abs() <= 1e-12);
        prop_assert!(worst + 1e-7 >= report.reg_forward, "{worst} < {}", report.reg_forward);
        prop_assert_eq!(optimal_pair_regret_seeded(&mdp, &r1, &r1, RegretMode::Exact, 0).unwrap().regret, 0.0);
    }

    #[test]
    fn occupancy_reproduces_policy_return(seed in any::<u64>(), v in entries(), n in 1usize..6, a in 1usize..4) {
        let (mdp, r, _) = instance(seed, n, a, &v);
        let pi = Policy::uniform(n, a);
        let j = policy_return_j(&mdp, &r, &pi).unwrap();
        let m = occupancy(&mdp, &pi).unwrap();
        prop_assert!((m.dot(&r) - j).abs() <= 1e-8 * (1.0 + j.abs()));
        prop_assert!((m.total() - 1.0 / (1.0 - mdp.gamma())).abs() <= 1e-9);
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>(), v in entries(), n in 1usize..5, a in 1usize..4) {
        let (mdp, r, _) = instance(seed, n, a, &v);
        let dir = tempfile::tempdir().unwrap();
        let (env, rew) = (dir.path().join("env.json"), dir.path().join("r.json"));
        save_mdp(&mdp, &env).unwrap();
        save_reward(&r, Some(seed), &rew).unwrap();
        let (mdp_back, r_back) = (load_mdp(&env).unwrap(), load_reward(&rew).unwrap());
        prop_assert_eq!(mdp_back.transitions(), mdp.transitions());
        prop_assert_eq!(r_back.values(), r.values());
    }
}
