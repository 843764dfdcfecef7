//! Cross-validation of the deviation enumerators against brute-force
//! reachability oracles, and of the formation engine against brute-force
//! stability on random games.

use std::collections::{BTreeSet, HashMap};

use coform_core::deviation::{
    enumerate_individual, enumerate_merge, enumerate_split, reachable, DeviationModel,
    HistoryLedger, ModelKind,
};
use coform_core::engine::{
    brute_force_stable_set, deviation_preferred, is_stable, run_formation, FnOracle,
    FormationOptions,
};
use coform_core::partition::enumerate_all_structures;
use coform_core::{CoalitionStructure, Deviation, PlayerSet, UtilityOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type BlockSet = BTreeSet<BTreeSet<usize>>;

fn block_set(cs: &CoalitionStructure) -> BlockSet {
    cs.blocks()
        .iter()
        .map(|b| b.members().iter().copied().collect())
        .collect()
}

/// Is `dst` obtained from `src` by merging at least two and at most q
/// existing coalitions into one, leaving the rest unchanged?
fn is_q_merge(src: &CoalitionStructure, dst: &CoalitionStructure, q: usize) -> bool {
    if src == dst {
        return false;
    }
    let src_blocks = block_set(src);
    let dst_blocks = block_set(dst);
    let vanished: Vec<&BTreeSet<usize>> = src_blocks.difference(&dst_blocks).collect();
    let appeared: Vec<&BTreeSet<usize>> = dst_blocks.difference(&src_blocks).collect();
    if appeared.len() != 1 || vanished.len() < 2 || vanished.len() > q {
        return false;
    }
    let union: BTreeSet<usize> = vanished.iter().flat_map(|b| b.iter().copied()).collect();
    union == *appeared[0]
}

/// Is `dst` obtained from `src` by splitting one existing coalition into at
/// least two and at most q parts, leaving the rest unchanged?
fn is_q_split(src: &CoalitionStructure, dst: &CoalitionStructure, q: usize) -> bool {
    if src == dst {
        return false;
    }
    let src_blocks = block_set(src);
    let dst_blocks = block_set(dst);
    let vanished: Vec<&BTreeSet<usize>> = src_blocks.difference(&dst_blocks).collect();
    let appeared: Vec<&BTreeSet<usize>> = dst_blocks.difference(&src_blocks).collect();
    if vanished.len() != 1 || appeared.len() < 2 || appeared.len() > q {
        return false;
    }
    let union: BTreeSet<usize> = appeared.iter().flat_map(|b| b.iter().copied()).collect();
    union == *vanished[0]
}

/// Is `dst` obtained from `src` by one player leaving its coalition and
/// joining another existing coalition or becoming a singleton?
fn is_individual_move(src: &CoalitionStructure, dst: &CoalitionStructure) -> bool {
    if src == dst {
        return false;
    }
    let dst_blocks = block_set(dst);
    for player in 0..src.n_players() {
        let own: BTreeSet<usize> = src
            .coalition_of(player)
            .unwrap()
            .members()
            .iter()
            .copied()
            .collect();
        // destination: every other block of src, or the empty set
        let mut choices: Vec<Option<BTreeSet<usize>>> = src
            .blocks()
            .iter()
            .map(|b| b.members().iter().copied().collect::<BTreeSet<usize>>())
            .filter(|b| *b != own)
            .map(Some)
            .collect();
        choices.push(None);
        for choice in choices {
            let mut expected: BlockSet = block_set(src);
            expected.remove(&own);
            if let Some(s) = &choice {
                expected.remove(s);
            }
            let mut rest = own.clone();
            rest.remove(&player);
            if !rest.is_empty() {
                expected.insert(rest);
            }
            let mut joined = choice.unwrap_or_default();
            joined.insert(player);
            expected.insert(joined);
            if expected == dst_blocks {
                return true;
            }
        }
    }
    false
}

#[test]
fn enumerators_match_textual_definitions() {
    for n in 2..=5 {
        let all = enumerate_all_structures(n, 5).unwrap();
        let empty_ledger = HistoryLedger::empty(PlayerSet::new(n).unwrap());
        for q in 2..=4usize {
            let merge_model = DeviationModel::merge(q).unwrap();
            let split_model = DeviationModel::split(q).unwrap();
            let individual = DeviationModel::individual();
            for src in &all {
                let merge_targets: BTreeSet<CoalitionStructure> =
                    enumerate_merge(src, &merge_model, None)
                        .into_iter()
                        .map(|d| d.target)
                        .collect();
                let merge_expected: BTreeSet<CoalitionStructure> = all
                    .iter()
                    .filter(|dst| is_q_merge(src, dst, q))
                    .cloned()
                    .collect();
                assert_eq!(merge_targets, merge_expected, "merge n={n} q={q} src={src}");

                let split_targets: BTreeSet<CoalitionStructure> =
                    enumerate_split(src, &split_model)
                        .into_iter()
                        .map(|d| d.target)
                        .collect();
                let split_expected: BTreeSet<CoalitionStructure> = all
                    .iter()
                    .filter(|dst| is_q_split(src, dst, q))
                    .cloned()
                    .collect();
                assert_eq!(split_targets, split_expected, "split n={n} q={q} src={src}");

                let individual_targets: BTreeSet<CoalitionStructure> =
                    enumerate_individual(src, &individual, &empty_ledger)
                        .into_iter()
                        .map(|d| d.target)
                        .collect();
                let individual_expected: BTreeSet<CoalitionStructure> = all
                    .iter()
                    .filter(|dst| is_individual_move(src, dst))
                    .cloned()
                    .collect();
                assert_eq!(
                    individual_targets, individual_expected,
                    "individual n={n} src={src}"
                );
            }
        }
    }
}

/// Random partition-function game: every structure gets an independent
/// uniform utility vector.
fn random_table_oracle(
    n: usize,
    seed: u64,
) -> FnOracle<impl FnMut(&CoalitionStructure) -> Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table: HashMap<CoalitionStructure, Vec<f64>> = HashMap::new();
    for cs in enumerate_all_structures(n, 8).unwrap() {
        let utilities: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        table.insert(cs, utilities);
    }
    FnOracle::new(move |cs: &CoalitionStructure| table[cs].clone())
}

#[test]
fn formation_lands_in_the_brute_force_stable_set() {
    let mut checked = 0usize;
    for game in 0..50u64 {
        let n = 2 + (game as usize) % 5; // n in 2..=6
        let players = PlayerSet::new(n).unwrap();
        let singletons = CoalitionStructure::singletons(players);
        let grand = CoalitionStructure::grand(players);
        for kind in [
            ModelKind::Merge,
            ModelKind::Split,
            ModelKind::MergeSplit,
            ModelKind::Individual,
        ] {
            let model = match kind {
                ModelKind::Individual => DeviationModel::individual(),
                other => DeviationModel::new(other, 2).unwrap(),
            };
            let init = if kind == ModelKind::Split { &grand } else { &singletons };
            let mut oracle = random_table_oracle(n, 1000 + game);
            let outcome =
                run_formation(&mut oracle, &model, init, &FormationOptions::default()).unwrap();
            let ledger = match kind {
                // history restricts reachability for these kinds
                ModelKind::MergeSplit | ModelKind::Individual => outcome.state.ledger.clone(),
                _ => HistoryLedger::empty(players),
            };
            let stable_set = brute_force_stable_set(&mut oracle, &model, n, &ledger).unwrap();
            assert!(
                stable_set.contains(&outcome.state.current),
                "game {game} kind {kind}: {} not in stable set",
                outcome.state.current
            );
            assert!(is_stable(&outcome.state.current, &mut oracle, &model, &ledger).unwrap());
            checked += 1;
        }
    }
    assert_eq!(checked, 200);
}

#[test]
fn accepted_steps_satisfy_their_preference_relation_on_reevaluation() {
    for game in 0..40u64 {
        let n = 2 + (game as usize) % 6; // n in 2..=7
        let players = PlayerSet::new(n).unwrap();
        let init = CoalitionStructure::singletons(players);
        for model in [
            DeviationModel::merge(3).unwrap(),
            DeviationModel::merge_split(2).unwrap(),
            DeviationModel::individual(),
        ] {
            let mut oracle = random_table_oracle(n, 7000 + game);
            let outcome =
                run_formation(&mut oracle, &model, &init, &FormationOptions::default()).unwrap();
            let mut fresh = random_table_oracle(n, 7000 + game);
            for step in &outcome.trace {
                let u_old = fresh.utilities(&step.source).unwrap();
                let u_new = fresh.utilities(&step.target).unwrap();
                let deviation = Deviation {
                    target: step.target.clone(),
                    deviators: step.deviators.clone(),
                    formed: step.formed.clone(),
                    kind: step.kind.clone(),
                };
                assert!(
                    deviation_preferred(&deviation, &u_new, &u_old).unwrap(),
                    "game {game} step {} fails re-evaluation",
                    step.step
                );
                assert!(u_new.sum() == step.sum_after && u_old.sum() == step.sum_before);
            }
        }
    }
}

#[test]
fn all_models_terminate_within_bounds_on_random_games() {
    for game in 0..100u64 {
        let n = 2 + (game as usize) % 7; // n in 2..=8
        let players = PlayerSet::new(n).unwrap();
        let singletons = CoalitionStructure::singletons(players);
        let grand = CoalitionStructure::grand(players);

        let mut oracle = random_table_oracle(n, 3000 + game);
        let merge = DeviationModel::merge(3).unwrap();
        let outcome =
            run_formation(&mut oracle, &merge, &singletons, &FormationOptions::default()).unwrap();
        assert!(outcome.state.step_count <= n - 1, "merge steps");

        let split = DeviationModel::split(3).unwrap();
        let outcome =
            run_formation(&mut oracle, &split, &grand, &FormationOptions::default()).unwrap();
        assert!(outcome.state.step_count <= n - 1, "split steps");

        for model in [DeviationModel::merge_split(2).unwrap(), DeviationModel::individual()] {
            let outcome =
                run_formation(&mut oracle, &model, &singletons, &FormationOptions::default())
                    .unwrap();
            assert!((outcome.state.step_count as u64) < 10 * (1 << n));
        }
    }
}

#[test]
fn formation_is_bitwise_deterministic() {
    for game in 0..10u64 {
        let n = 5;
        let players = PlayerSet::new(n).unwrap();
        let init = CoalitionStructure::singletons(players);
        for model in [
            DeviationModel::merge(3).unwrap(),
            DeviationModel::split(3).unwrap(),
            DeviationModel::merge_split(2).unwrap(),
            DeviationModel::individual(),
        ] {
            let start = if model.kind() == ModelKind::Split {
                CoalitionStructure::grand(players)
            } else {
                init.clone()
            };
            let mut a_oracle = random_table_oracle(n, 500 + game);
            let a = run_formation(&mut a_oracle, &model, &start, &FormationOptions::default())
                .unwrap();
            let mut b_oracle = random_table_oracle(n, 500 + game);
            let b = run_formation(&mut b_oracle, &model, &start, &FormationOptions::default())
                .unwrap();
            assert_eq!(a.state.current, b.state.current);
            assert_eq!(a.state.step_count, b.state.step_count);
            assert_eq!(a.state.candidate_evals, b.state.candidate_evals);
            assert_eq!(a.state.utilities.values(), b.state.utilities.values());
            assert_eq!(a.render_trace(), b.render_trace());
            let a_targets: Vec<&CoalitionStructure> =
                a.trace.iter().map(|s| &s.target).collect();
            let b_targets: Vec<&CoalitionStructure> =
                b.trace.iter().map(|s| &s.target).collect();
            assert_eq!(a_targets, b_targets);
        }
    }
}

#[test]
fn merge_split_history_blocks_reforming_coalitions() {
    // utilities engineered to drive: merge {0,1}, then split it, and verify
    // {0,1} can never merge again while {0,2} still can
    let n = 3;
    let players = PlayerSet::new(n).unwrap();
    let model = DeviationModel::merge_split(2).unwrap();
    let singletons = CoalitionStructure::singletons(players);
    let mut ledger = HistoryLedger::seeded(&singletons);
    let pair01: CoalitionStructure = "0,1|2".parse().unwrap();
    ledger.record_visit(&pair01);
    ledger.record_visit(&singletons);
    let merges = reachable(&singletons, &model, &ledger);
    let targets: Vec<String> = merges
        .iter()
        .map(|d| d.target.to_string())
        .collect();
    assert_eq!(targets, vec!["0,2|1", "0|1,2"]);
}
