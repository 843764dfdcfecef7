//! Monte Carlo campaign driver: configuration ingestion, paired-channel
//! realization sweeps over deviation models, statistics aggregation, and CSV
//! artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::deviation::{DeviationModel, ModelKind};
use crate::engine::{run_formation, CachedOracle, FormationOptions};
use crate::error::{Error, Result};
use crate::miso::{
    generate_realization_given_tx, parse_coordinates, place_transmitters, realization_rng,
    substream_rng, Deployment, NetworkConfig, RateOracle, DEPLOYMENT_STREAM,
};
use crate::partition::{CoalitionStructure, PlayerSet};

/// A full Monte Carlo campaign: network, realization count, and the deviation
/// models to compare on paired channels.
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub network: NetworkConfig,
    pub realizations: usize,
    pub models: Vec<DeviationModel>,
    pub out_dir: PathBuf,
    /// Master seed; drives transmitter placement and every realization
    /// substream.
    pub seed: u64,
    /// Cap on formed coalition sizes; defaults to the antenna count.
    pub max_coalition_size: Option<usize>,
    /// Write a per-realization channel dump CSV (debug).
    pub dump_channels: bool,
}

impl CampaignConfig {
    pub fn new(network: NetworkConfig) -> Self {
        let seed = network.seed;
        Self {
            network,
            realizations: 1000,
            models: Vec::new(),
            out_dir: PathBuf::from("results"),
            seed,
            max_coalition_size: None,
            dump_channels: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.realizations < 1 {
            return Err(Error::InvalidParameter(
                "realizations must be at least 1".into(),
            ));
        }
        if self.models.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one deviation model is required".into(),
            ));
        }
        Ok(())
    }

    /// The size cap in force: explicit override or the antenna count.
    pub fn coalition_size_cap(&self) -> usize {
        self.max_coalition_size.unwrap_or(self.network.antennas)
    }

    fn capped_models(&self) -> Result<Vec<DeviationModel>> {
        let cap = Some(self.coalition_size_cap());
        self.models
            .iter()
            .map(|m| m.clone().with_max_coalition_size(cap))
            .collect()
    }
}

/// Parse the flat `key = value` campaign configuration format. Repeated
/// `model = kind,q` lines accumulate; `#` starts a comment.
pub fn parse_config_str(text: &str, path_label: &str) -> Result<CampaignConfig> {
    let mut config = CampaignConfig::new(NetworkConfig::default());
    let mut seed_set = false;
    let err = |line: usize, message: String| Error::Config {
        path: path_label.to_string(),
        line,
        message,
    };
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(lineno, format!("expected 'key = value', got '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(err(lineno, format!("key '{key}' has no value")));
        }
        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| err(lineno, format!("key '{key}': '{v}' is not a number")))
        };
        let parse_usize = |v: &str| -> Result<usize> {
            v.parse()
                .map_err(|_| err(lineno, format!("key '{key}': '{v}' is not a count")))
        };
        match key {
            "n_links" => config.network.n_links = parse_usize(value)?,
            "antennas" => config.network.antennas = parse_usize(value)?,
            "power_dbm" => config.network.power_dbm = parse_f64(value)?,
            "pathloss_intercept_db" => config.network.pathloss_intercept_db = parse_f64(value)?,
            "pathloss_slope_db_per_decade" => {
                config.network.pathloss_slope_db_per_decade = parse_f64(value)?
            }
            "shadow_sigma_db" => config.network.shadow_sigma_db = parse_f64(value)?,
            "noise_psd_dbm_hz" => config.network.noise_psd_dbm_hz = parse_f64(value)?,
            "noise_figure_db" => config.network.noise_figure_db = parse_f64(value)?,
            "bandwidth_hz" => config.network.bandwidth_hz = parse_f64(value)?,
            "max_rx_distance_m" => config.network.max_rx_distance_m = parse_f64(value)?,
            "min_rx_distance_m" => config.network.min_rx_distance_m = parse_f64(value)?,
            "area_width_m" | "area_height_m" => {
                let parsed = parse_f64(value)?;
                let (mut w, mut h) = match config.network.deployment {
                    Deployment::UniformArea { width_m, height_m } => (width_m, height_m),
                    Deployment::Fixed(_) => {
                        return Err(err(
                            lineno,
                            "area size conflicts with a fixed transmitter deployment".into(),
                        ))
                    }
                };
                if key == "area_width_m" {
                    w = parsed;
                } else {
                    h = parsed;
                }
                config.network.deployment = Deployment::UniformArea {
                    width_m: w,
                    height_m: h,
                };
            }
            "tx_coordinates_file" => {
                let text = fs::read_to_string(value).map_err(|e| {
                    err(lineno, format!("cannot read coordinates file '{value}': {e}"))
                })?;
                let coords = parse_coordinates(&text)
                    .map_err(|e| err(lineno, format!("coordinates file '{value}': {e}")))?;
                config.network.deployment = Deployment::Fixed(coords);
            }
            "cross_gain_scale" => config.network.cross_gain_scale = parse_f64(value)?,
            "seed" => {
                let seed: u64 = value
                    .parse()
                    .map_err(|_| err(lineno, format!("seed '{value}' is not an integer")))?;
                config.seed = seed;
                config.network.seed = seed;
                seed_set = true;
            }
            "realizations" => config.realizations = parse_usize(value)?,
            "out_dir" => config.out_dir = PathBuf::from(value),
            "max_coalition_size" => config.max_coalition_size = Some(parse_usize(value)?),
            "dump_channels" => {
                config.dump_channels = value.parse().map_err(|_| {
                    err(lineno, format!("key 'dump_channels': '{value}' is not a bool"))
                })?
            }
            "model" => {
                let model = parse_model_spec(value)
                    .map_err(|e| err(lineno, format!("model '{value}': {e}")))?;
                config.models.push(model);
            }
            other => return Err(err(lineno, format!("unknown key '{other}'"))),
        }
    }
    if !seed_set {
        config.seed = config.network.seed;
    }
    config.validate().map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::Config {
            path: path_label.to_string(),
            line: 0,
            message: other.to_string(),
        },
    })?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<CampaignConfig> {
    let text = fs::read_to_string(path)?;
    parse_config_str(&text, &path.display().to_string())
}

/// Parse `kind,q` (or bare `individual`) into a deviation model.
pub fn parse_model_spec(spec: &str) -> Result<DeviationModel> {
    let (kind_text, q_text) = match spec.split_once(',') {
        Some((k, q)) => (k.trim(), Some(q.trim())),
        None => (spec.trim(), None),
    };
    let kind: ModelKind = kind_text.parse()?;
    match (kind.uses_q(), q_text) {
        (true, Some(q)) => {
            let q: usize = q.parse().map_err(|_| {
                Error::InvalidParameter(format!("'{q}' is not a valid deviation bound"))
            })?;
            DeviationModel::new(kind, q)
        }
        (true, None) => Err(Error::InvalidParameter(format!(
            "model '{kind}' requires a deviation bound, e.g. '{kind},2'"
        ))),
        (false, None) => Ok(DeviationModel::individual()),
        (false, Some(q)) if q.is_empty() || q == "0" => Ok(DeviationModel::individual()),
        (false, Some(_)) => Err(Error::InvalidParameter(
            "the individual model takes no deviation bound".into(),
        )),
    }
}

/// Outcome of one (model, realization) formation run.
#[derive(Debug, Clone)]
pub struct RealizationRow {
    pub model_idx: usize,
    pub realization: usize,
    pub sum_rate_bps_hz: f64,
    /// Links in coalitions of size >= 2.
    pub n_cooperating: usize,
    pub n_coalitions: usize,
    pub steps: usize,
    pub evals: usize,
    pub final_structure: CoalitionStructure,
}

/// Aggregate statistics for one deviation model over all realizations.
#[derive(Debug, Clone)]
pub struct ModelStats {
    pub model: String,
    pub q: usize,
    pub mean_sum_rate: f64,
    pub se_sum_rate: f64,
    pub mean_link_rate: f64,
    pub mean_cooperating: f64,
    pub mean_coalitions: f64,
    pub mean_steps: f64,
    pub mean_evals: f64,
    /// Fraction of realizations in which links i and j share a coalition;
    /// symmetric with unit diagonal.
    pub cooperation_frequency: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RunStatistics {
    pub n_links: usize,
    pub realizations: usize,
    pub per_model: Vec<ModelStats>,
}

#[derive(Debug)]
pub struct CampaignOutput {
    pub stats: RunStatistics,
    pub rows: Vec<RealizationRow>,
    pub tx_positions: Vec<[f64; 2]>,
}

/// Run the campaign: for each realization, generate one channel draw from its
/// own substream and run every model on it (paired comparison); aggregate and
/// write `results.csv`, `aggregate.csv`, and one cooperation matrix per model
/// into the output directory. Outputs are written atomically at the end.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignOutput> {
    let output = run_campaign_in_memory(config)?;
    write_artifacts(config, &output)?;
    Ok(output)
}

/// The computational part of [`run_campaign`], without touching the
/// filesystem.
pub fn run_campaign_in_memory(config: &CampaignConfig) -> Result<CampaignOutput> {
    config.validate()?;
    let models = config.capped_models()?;
    let tx_positions = place_transmitters(
        &config.network,
        &mut substream_rng(config.seed, DEPLOYMENT_STREAM),
    )?;
    let players = PlayerSet::new(config.network.n_links)?;
    let init = CoalitionStructure::singletons(players);

    let per_realization: Vec<Vec<RealizationRow>> = (0..config.realizations)
        .into_par_iter()
        .map(|r| -> Result<Vec<RealizationRow>> {
            let mut rng = realization_rng(config.seed, r as u64);
            let chan = generate_realization_given_tx(&config.network, &tx_positions, &mut rng)?;
            // one utility cache per realization, shared across models
            let mut oracle = CachedOracle::new(RateOracle::new(&chan, &config.network));
            models
                .iter()
                .enumerate()
                .map(|(model_idx, model)| {
                    let outcome =
                        run_formation(&mut oracle, model, &init, &FormationOptions::default())?;
                    let final_structure = outcome.state.current;
                    let n_cooperating = final_structure
                        .blocks()
                        .iter()
                        .filter(|b| b.len() >= 2)
                        .map(|b| b.len())
                        .sum();
                    Ok(RealizationRow {
                        model_idx,
                        realization: r,
                        sum_rate_bps_hz: outcome.state.utilities.sum(),
                        n_cooperating,
                        n_coalitions: final_structure.num_blocks(),
                        steps: outcome.state.step_count,
                        evals: outcome.state.candidate_evals,
                        final_structure,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    // model-major, realization-minor: deterministic regardless of scheduling
    let mut rows = Vec::with_capacity(config.realizations * models.len());
    for model_idx in 0..models.len() {
        for realization in &per_realization {
            rows.push(realization[model_idx].clone());
        }
    }
    let stats = summarize(
        &config.models,
        config.network.n_links,
        config.realizations,
        &rows,
    )?;
    Ok(CampaignOutput {
        stats,
        rows,
        tx_positions,
    })
}

/// Fold per-realization records into means, standard errors, and the
/// cooperation-frequency matrix, per model.
pub fn summarize(
    models: &[DeviationModel],
    n_links: usize,
    realizations: usize,
    rows: &[RealizationRow],
) -> Result<RunStatistics> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("no realization records to summarize"));
    }
    let mut per_model = Vec::with_capacity(models.len());
    for (model_idx, model) in models.iter().enumerate() {
        let group: Vec<&RealizationRow> =
            rows.iter().filter(|row| row.model_idx == model_idx).collect();
        if group.len() != realizations {
            return Err(Error::InvalidParameter(format!(
                "model {model_idx} has {} records for {realizations} realizations",
                group.len()
            )));
        }
        let r = group.len() as f64;
        let mean = |f: &dyn Fn(&RealizationRow) -> f64| -> f64 {
            group.iter().map(|row| f(row)).sum::<f64>() / r
        };
        let mean_sum_rate = mean(&|row| row.sum_rate_bps_hz);
        let variance = group
            .iter()
            .map(|row| (row.sum_rate_bps_hz - mean_sum_rate).powi(2))
            .sum::<f64>()
            / if group.len() > 1 { r - 1.0 } else { 1.0 };
        let se_sum_rate = if group.len() > 1 {
            (variance / r).sqrt()
        } else {
            0.0
        };
        let mut cooperation = vec![vec![0.0f64; n_links]; n_links];
        for row in &group {
            for block in row.final_structure.blocks() {
                for &a in block.members() {
                    for &b in block.members() {
                        cooperation[a][b] += 1.0;
                    }
                }
            }
        }
        for line in &mut cooperation {
            for value in line.iter_mut() {
                *value /= r;
            }
        }
        per_model.push(ModelStats {
            model: model.kind().to_string(),
            q: model.q(),
            mean_sum_rate,
            se_sum_rate,
            mean_link_rate: mean_sum_rate / n_links as f64,
            mean_cooperating: mean(&|row| row.n_cooperating as f64),
            mean_coalitions: mean(&|row| row.n_coalitions as f64),
            mean_steps: mean(&|row| row.steps as f64),
            mean_evals: mean(&|row| row.evals as f64),
            cooperation_frequency: cooperation,
        });
    }
    Ok(RunStatistics {
        n_links,
        realizations,
        per_model,
    })
}

pub fn results_csv(models: &[DeviationModel], rows: &[RealizationRow]) -> String {
    let mut out =
        String::from("model,q,realization,sum_rate_bps_hz,n_cooperating,n_coalitions,steps,evals\n");
    for row in rows {
        let model = &models[row.model_idx];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            model.kind(),
            model.q(),
            row.realization,
            row.sum_rate_bps_hz,
            row.n_cooperating,
            row.n_coalitions,
            row.steps,
            row.evals
        ));
    }
    out
}

pub fn aggregate_csv(stats: &RunStatistics) -> String {
    let mut out =
        String::from("model,q,mean_sum_rate,se_sum_rate,mean_cooperating,mean_coalitions\n");
    for m in &stats.per_model {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.model, m.q, m.mean_sum_rate, m.se_sum_rate, m.mean_cooperating, m.mean_coalitions
        ));
    }
    out
}

pub fn coop_matrix_csv(matrix: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for line in matrix {
        let rendered: Vec<String> = line.iter().map(|v| v.to_string()).collect();
        out.push_str(&rendered.join(","));
        out.push('\n');
    }
    out
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("bad output path {}", path.display())))?;
    let tmp = path.with_file_name(format!(".tmp.{}", file_name.to_string_lossy()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_artifacts(config: &CampaignConfig, output: &CampaignOutput) -> Result<()> {
    fs::create_dir_all(&config.out_dir)?;
    write_atomic(
        &config.out_dir.join("results.csv"),
        &results_csv(&config.models, &output.rows),
    )?;
    write_atomic(
        &config.out_dir.join("aggregate.csv"),
        &aggregate_csv(&output.stats),
    )?;
    for m in &output.stats.per_model {
        let name = format!("coop_matrix_{}_{}.csv", m.model, m.q);
        write_atomic(
            &config.out_dir.join(name),
            &coop_matrix_csv(&m.cooperation_frequency),
        )?;
    }
    if config.dump_channels {
        // realizations are regenerated deterministically from their substreams
        for r in 0..config.realizations {
            let mut rng = realization_rng(config.seed, r as u64);
            let chan =
                generate_realization_given_tx(&config.network, &output.tx_positions, &mut rng)?;
            write_atomic(
                &config.out_dir.join(format!("channels_r{r}.csv")),
                &chan.dump_csv(),
            )?;
        }
    }
    Ok(())
}
