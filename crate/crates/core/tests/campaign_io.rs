//! End-to-end campaign behavior: file artifacts, reproducibility, the
//! interference-free degenerate case, and the cooperation-gain sanity check.

use std::fs;
use std::path::PathBuf;

use coform_core::campaign::{load_config, run_campaign, run_campaign_in_memory, CampaignConfig};
use coform_core::deviation::DeviationModel;
use coform_core::miso::{
    evaluate_rates, generate_realization_given_tx, place_transmitters, realization_rng,
    substream_rng, NetworkConfig, DEPLOYMENT_STREAM,
};
use coform_core::partition::{CoalitionStructure, PlayerSet};

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coform_{}_{}", std::process::id(), name));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn small_network(n: usize, t: usize, seed: u64) -> NetworkConfig {
    NetworkConfig {
        n_links: n,
        antennas: t,
        seed,
        ..NetworkConfig::default()
    }
}

#[test]
fn campaign_writes_byte_identical_outputs_for_equal_seeds() {
    let mut config = CampaignConfig::new(small_network(5, 2, 11));
    config.realizations = 10;
    config.models = vec![DeviationModel::merge(2).unwrap(), DeviationModel::individual()];

    let dir_a = scratch_dir("det_a");
    let dir_b = scratch_dir("det_b");
    config.out_dir = dir_a.clone();
    run_campaign(&config).unwrap();
    config.out_dir = dir_b.clone();
    run_campaign(&config).unwrap();

    for name in [
        "results.csv",
        "aggregate.csv",
        "coop_matrix_merge_2.csv",
        "coop_matrix_individual_0.csv",
    ] {
        let a = fs::read(dir_a.join(name)).unwrap();
        let b = fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(!a.is_empty());
    }
    let results = fs::read_to_string(dir_a.join("results.csv")).unwrap();
    assert!(results.starts_with(
        "model,q,realization,sum_rate_bps_hz,n_cooperating,n_coalitions,steps,evals\n"
    ));
    // one row per (model, realization) plus the header
    assert_eq!(results.lines().count(), 1 + 2 * 10);

    let _ = fs::remove_dir_all(dir_a);
    let _ = fs::remove_dir_all(dir_b);
}

#[test]
fn zero_cross_gain_leaves_everyone_alone() {
    let mut config = CampaignConfig::new(NetworkConfig {
        cross_gain_scale: 0.0,
        ..small_network(4, 4, 3)
    });
    config.realizations = 5;
    config.models = vec![
        DeviationModel::merge(4).unwrap(),
        DeviationModel::merge_split(2).unwrap(),
        DeviationModel::individual(),
    ];
    let output = run_campaign_in_memory(&config).unwrap();
    for row in &output.rows {
        assert_eq!(row.n_cooperating, 0, "no deviation is ever preferred");
        assert_eq!(row.n_coalitions, 4);
        assert_eq!(row.steps, 0);
    }
    for stats in &output.stats.per_model {
        for (i, line) in stats.cooperation_frequency.iter().enumerate() {
            for (j, &value) in line.iter().enumerate() {
                assert_eq!(value, if i == j { 1.0 } else { 0.0 });
            }
        }
    }
}

#[test]
fn cooperation_never_hurts_on_average() {
    let mut config = CampaignConfig::new(small_network(4, 4, 21));
    config.realizations = 200;
    config.models = vec![DeviationModel::merge(4).unwrap()];
    let output = run_campaign_in_memory(&config).unwrap();

    // paired noncooperation baseline from the same substreams
    let tx = place_transmitters(
        &config.network,
        &mut substream_rng(config.seed, DEPLOYMENT_STREAM),
    )
    .unwrap();
    let players = PlayerSet::new(4).unwrap();
    let singletons = CoalitionStructure::singletons(players);
    let mut baseline_mean = 0.0;
    for r in 0..config.realizations {
        let mut rng = realization_rng(config.seed, r as u64);
        let chan = generate_realization_given_tx(&config.network, &tx, &mut rng).unwrap();
        baseline_mean += evaluate_rates(&singletons, &chan, &config.network)
            .unwrap()
            .sum();
    }
    baseline_mean /= config.realizations as f64;
    let formed_mean = output.stats.per_model[0].mean_sum_rate;
    assert!(
        formed_mean >= baseline_mean - 1e-9,
        "formed {formed_mean} vs baseline {baseline_mean}"
    );
    // with 4 antennas for 4 links, some cooperation should emerge
    assert!(output.stats.per_model[0].mean_cooperating > 0.0);
}

#[test]
fn config_file_end_to_end_with_fixed_coordinates() {
    let dir = scratch_dir("conf");
    fs::create_dir_all(&dir).unwrap();
    let coords_path = dir.join("tx.txt");
    fs::write(&coords_path, "0,0\n50,0\n0,50\n900,900\n").unwrap();
    let out_dir = dir.join("out");
    let config_path = dir.join("campaign.conf");
    fs::write(
        &config_path,
        format!(
            "\
n_links = 4
antennas = 2
realizations = 6
seed = 5
tx_coordinates_file = {}
out_dir = {}
model = merge,2
model = individual
",
            coords_path.display(),
            out_dir.display()
        ),
    )
    .unwrap();

    let config = load_config(&config_path).unwrap();
    assert_eq!(config.seed, 5);
    assert_eq!(config.coalition_size_cap(), 2);
    let output = run_campaign(&config).unwrap();
    assert_eq!(output.tx_positions, vec![[0.0, 0.0], [50.0, 0.0], [0.0, 50.0], [900.0, 900.0]]);
    assert!(out_dir.join("results.csv").exists());
    assert!(out_dir.join("aggregate.csv").exists());

    let aggregate = fs::read_to_string(out_dir.join("aggregate.csv")).unwrap();
    assert!(aggregate
        .starts_with("model,q,mean_sum_rate,se_sum_rate,mean_cooperating,mean_coalitions\n"));
    assert_eq!(aggregate.lines().count(), 1 + 2);

    let _ = fs::remove_dir_all(dir);
}

#[test]
fn channel_dump_artifacts_when_requested() {
    let mut config = CampaignConfig::new(small_network(3, 2, 9));
    config.realizations = 2;
    config.models = vec![DeviationModel::merge(2).unwrap()];
    config.dump_channels = true;
    let dir = scratch_dir("dump");
    config.out_dir = dir.clone();
    run_campaign(&config).unwrap();
    for r in 0..2 {
        let dump = fs::read_to_string(dir.join(format!("channels_r{r}.csv"))).unwrap();
        assert_eq!(dump.lines().count(), 1 + 9); // header + n^2 pairs
        assert!(dump.starts_with("tx,rx,gain_db,h0_re,h0_im,h1_re,h1_im"));
    }
    let _ = fs::remove_dir_all(dir);
}
