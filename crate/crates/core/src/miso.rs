//! MISO interference channel backend: geometry, fading generation,
//! zero-forcing/MRT beamforming, and per-link rate utilities implementing the
//! partition function.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::engine::UtilityOracle;
use crate::error::{Error, Result};
use crate::partition::{Coalition, CoalitionStructure};
use crate::preference::UtilityVector;

/// A projected own channel below this relative magnitude is treated as
/// degenerate and yields the zero beamformer.
pub const NULL_EPSILON: f64 = 1e-12;

/// Transmitter placement policy.
#[derive(Debug, Clone, PartialEq)]
pub enum Deployment {
    /// Uniform placement in a width x height rectangle (meters).
    UniformArea { width_m: f64, height_m: f64 },
    /// Explicit coordinates, e.g. from a coordinates file.
    Fixed(Vec<[f64; 2]>),
}

impl Default for Deployment {
    fn default() -> Self {
        Deployment::UniformArea {
            width_m: 1000.0,
            height_m: 1000.0,
        }
    }
}

/// Geometry and radio parameters of the simulated network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub n_links: usize,
    /// Transmit antennas per transmitter.
    pub antennas: usize,
    pub power_dbm: f64,
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db_per_decade: f64,
    pub shadow_sigma_db: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    /// Receivers are placed uniformly over the annulus between the minimum
    /// distance and this radius around their transmitter.
    pub max_rx_distance_m: f64,
    /// Lower bound on every transmitter-receiver distance, bounding the
    /// path-loss singularity at zero range.
    pub min_rx_distance_m: f64,
    pub deployment: Deployment,
    /// Linear scale applied to all cross-pair gains; 1 is physical, 0 removes
    /// interference coupling entirely.
    pub cross_gain_scale: f64,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_links: 17,
            antennas: 8,
            power_dbm: 46.0,
            pathloss_intercept_db: 15.3,
            pathloss_slope_db_per_decade: 37.6,
            shadow_sigma_db: 8.0,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            bandwidth_hz: 1e7,
            max_rx_distance_m: 200.0,
            min_rx_distance_m: 10.0,
            deployment: Deployment::default(),
            cross_gain_scale: 1.0,
            seed: 1,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(msg.to_string()))
            }
        };
        check(self.n_links >= 1, "n_links must be at least 1")?;
        check(self.antennas >= 1, "antennas must be at least 1")?;
        check(self.power_dbm.is_finite(), "power_dbm must be finite")?;
        check(
            self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0,
            "bandwidth_hz must be positive",
        )?;
        check(
            self.shadow_sigma_db >= 0.0,
            "shadow_sigma_db must be non-negative",
        )?;
        check(
            self.min_rx_distance_m > 0.0,
            "min_rx_distance_m must be positive",
        )?;
        check(
            self.max_rx_distance_m >= self.min_rx_distance_m,
            "max_rx_distance_m must be at least min_rx_distance_m",
        )?;
        check(
            self.cross_gain_scale >= 0.0 && self.cross_gain_scale.is_finite(),
            "cross_gain_scale must be non-negative",
        )?;
        match &self.deployment {
            Deployment::Fixed(coords) => check(
                coords.len() == self.n_links,
                &format!(
                    "deployment lists {} transmitters but n_links is {}",
                    coords.len(),
                    self.n_links
                ),
            )?,
            Deployment::UniformArea { width_m, height_m } => check(
                *width_m > 0.0 && *height_m > 0.0,
                "deployment area must have positive width and height",
            )?,
        }
        Ok(())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Thermal noise power sigma^2 in watts:
/// PSD (dBm/Hz) + 10 log10(bandwidth) + noise figure, converted to linear.
pub fn noise_power(config: &NetworkConfig) -> f64 {
    let dbm = config.noise_psd_dbm_hz + 10.0 * config.bandwidth_hz.log10() + config.noise_figure_db;
    dbm_to_watts(dbm)
}

/// Independent, deterministically derived RNG substream for (seed, stream).
pub fn substream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream index reserved for transmitter placement; realizations use
/// [`realization_rng`].
pub const DEPLOYMENT_STREAM: u64 = 0;

pub fn realization_rng(seed: u64, realization: u64) -> ChaCha8Rng {
    substream_rng(seed, realization + 1)
}

/// Complex channel vectors and geometry for one fading draw. `h[j][i]` is the
/// channel from transmitter j to receiver i (linear scale, length `antennas`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub antennas: usize,
    pub tx_positions: Vec<[f64; 2]>,
    pub rx_positions: Vec<[f64; 2]>,
    /// Large-scale gain in dB per (tx, rx) pair, cross-gain scaling included.
    pub gain_db: Vec<Vec<f64>>,
    pub h: Vec<Vec<Vec<Complex64>>>,
}

impl ChannelRealization {
    pub fn n_links(&self) -> usize {
        self.h.len()
    }

    pub fn channel(&self, tx: usize, rx: usize) -> &[Complex64] {
        &self.h[tx][rx]
    }

    /// Debug channel dump: one CSV row per (tx, rx) pair with the gain in dB
    /// and the 2t real components of the channel vector.
    pub fn dump_csv(&self) -> String {
        let mut out = String::from("tx,rx,gain_db");
        for k in 0..self.antennas {
            out.push_str(&format!(",h{k}_re,h{k}_im"));
        }
        out.push('\n');
        for j in 0..self.n_links() {
            for i in 0..self.n_links() {
                out.push_str(&format!("{j},{i},{}", self.gain_db[j][i]));
                for z in &self.h[j][i] {
                    out.push_str(&format!(",{},{}", z.re, z.im));
                }
                out.push('\n');
            }
        }
        out
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Place transmitters according to the deployment policy. Fixed deployments
/// do not consume randomness.
pub fn place_transmitters(config: &NetworkConfig, rng: &mut impl Rng) -> Result<Vec<[f64; 2]>> {
    config.validate()?;
    match &config.deployment {
        Deployment::Fixed(coords) => Ok(coords.clone()),
        Deployment::UniformArea { width_m, height_m } => Ok((0..config.n_links)
            .map(|_| {
                let x = rng.random_range(0.0..*width_m);
                let y = rng.random_range(0.0..*height_m);
                [x, y]
            })
            .collect()),
    }
}

/// Draw receiver placement, log-normal shadowing, and Rayleigh small-scale
/// fading for fixed transmitter positions.
pub fn generate_realization_given_tx(
    config: &NetworkConfig,
    tx_positions: &[[f64; 2]],
    rng: &mut impl Rng,
) -> Result<ChannelRealization> {
    config.validate()?;
    if tx_positions.len() != config.n_links {
        return Err(Error::InvalidParameter(format!(
            "{} transmitter positions for {} links",
            tx_positions.len(),
            config.n_links
        )));
    }
    let n = config.n_links;
    let t = config.antennas;
    let shadow = Normal::new(0.0, config.shadow_sigma_db)
        .map_err(|e| Error::InvalidParameter(format!("shadow fading: {e}")))?;
    let standard = Normal::new(0.0, 1.0).expect("unit normal");

    // receivers uniform over the annulus area around their transmitter
    let min_sq = config.min_rx_distance_m.powi(2);
    let max_sq = config.max_rx_distance_m.powi(2);
    let rx_positions: Vec<[f64; 2]> = tx_positions
        .iter()
        .map(|&txp| {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let radius = if max_sq > min_sq {
                rng.random_range(min_sq..max_sq).sqrt()
            } else {
                config.min_rx_distance_m
            };
            [txp[0] + radius * angle.cos(), txp[1] + radius * angle.sin()]
        })
        .collect();

    let mut gain_db = vec![vec![0.0; n]; n];
    let mut h = vec![vec![Vec::new(); n]; n];
    for j in 0..n {
        for i in 0..n {
            let d = distance(tx_positions[j], rx_positions[i]).max(config.min_rx_distance_m);
            let pathloss_db = config.pathloss_intercept_db
                + config.pathloss_slope_db_per_decade * d.log10();
            let mut g_db = -pathloss_db + shadow.sample(rng);
            let mut g_linear = 10f64.powf(g_db / 10.0);
            if j != i {
                g_linear *= config.cross_gain_scale;
                g_db = 10.0 * g_linear.log10();
            }
            let amplitude = g_linear.sqrt();
            let vector: Vec<Complex64> = (0..t)
                .map(|_| {
                    let re: f64 = standard.sample(rng);
                    let im: f64 = standard.sample(rng);
                    Complex64::new(re, im) * FRAC_1_SQRT_2 * amplitude
                })
                .collect();
            gain_db[j][i] = g_db;
            h[j][i] = vector;
        }
    }
    Ok(ChannelRealization {
        antennas: t,
        tx_positions: tx_positions.to_vec(),
        rx_positions,
        gain_db,
        h,
    })
}

/// Place transmitters and draw one realization from a single RNG stream.
pub fn generate_realization(config: &NetworkConfig, rng: &mut impl Rng) -> Result<ChannelRealization> {
    let tx = place_transmitters(config, rng)?;
    generate_realization_given_tx(config, &tx, rng)
}

/// Parse a transmitter coordinates file: one `x,y` pair per line, meters.
pub fn parse_coordinates(text: &str) -> Result<Vec<[f64; 2]>> {
    let mut coords = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || {
            Error::InvalidParameter(format!(
                "coordinates line {}: expected 'x,y', got '{line}'",
                lineno + 1
            ))
        };
        let (x, y) = line.split_once(',').ok_or_else(bad)?;
        let x: f64 = x.trim().parse().map_err(|_| bad())?;
        let y: f64 = y.trim().parse().map_err(|_| bad())?;
        coords.push([x, y]);
    }
    Ok(coords)
}

// -- complex vector helpers ------------------------------------------------

/// Hermitian inner product a^dag b.
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    norm_sq(a).sqrt()
}

/// Subtract from `v` its projection onto each (orthonormal) basis vector.
fn project_out(basis: &[Vec<Complex64>], v: &mut [Complex64]) {
    for q in basis {
        let coeff = dot(q, v);
        for (vk, qk) in v.iter_mut().zip(q) {
            *vk -= coeff * qk;
        }
    }
}

/// Orthonormal basis of the span of `vectors` by modified Gram-Schmidt with
/// re-orthogonalization; near-dependent vectors are dropped.
fn orthonormal_basis(vectors: &[&[Complex64]]) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let original = norm(v);
        if original == 0.0 {
            continue;
        }
        let mut u = v.to_vec();
        project_out(&basis, &mut u);
        project_out(&basis, &mut u);
        let remaining = norm(&u);
        if remaining <= NULL_EPSILON * original {
            continue;
        }
        for uk in &mut u {
            *uk /= remaining;
        }
        basis.push(u);
    }
    basis
}

/// Transmit vector of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    w: Vec<Complex64>,
}

impl Beamformer {
    pub fn weights(&self) -> &[Complex64] {
        &self.w
    }

    pub fn power(&self) -> f64 {
        norm_sq(&self.w)
    }

    pub fn is_zero(&self) -> bool {
        self.w.iter().all(|z| *z == Complex64::ZERO)
    }
}

/// Zero-forcing beamformer: maximize |h_own^dag w| subject to ||w||^2 <= p and
/// h_c^dag w = 0 for every cross channel. With no cross channels this is
/// maximum ratio transmission. If the own channel lies (numerically) in the
/// span of the cross channels, the problem is degenerate and the zero
/// beamformer is returned.
pub fn zf_beamformer(
    h_own: &[Complex64],
    h_cross: &[&[Complex64]],
    power_watts: f64,
) -> Result<Beamformer> {
    if power_watts <= 0.0 || !power_watts.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "transmit power must be positive, got {power_watts}"
        )));
    }
    let own_norm = norm(h_own);
    if own_norm == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let basis = orthonormal_basis(h_cross);
    let mut w = h_own.to_vec();
    project_out(&basis, &mut w);
    project_out(&basis, &mut w);
    let projected_norm = norm(&w);
    if projected_norm < NULL_EPSILON * own_norm {
        return Ok(Beamformer {
            w: vec![Complex64::ZERO; h_own.len()],
        });
    }
    let scale = power_watts.sqrt() / projected_norm;
    for wk in &mut w {
        *wk *= scale;
    }
    Ok(Beamformer { w })
}

/// Signal and interference footprint of one transmitter given its coalition:
/// the squared inner products of every receiver's channel with the
/// transmitter's beamformer.
#[derive(Debug, Clone)]
struct LinkEffect {
    /// |h_jj^dag w_j|^2
    signal_power: f64,
    /// |h_ji^dag w_j|^2 for every receiver i
    received_power: Vec<f64>,
}

fn link_effect(
    chan: &ChannelRealization,
    tx: usize,
    coalition: &Coalition,
    power_watts: f64,
) -> Result<LinkEffect> {
    let cross: Vec<&[Complex64]> = coalition
        .members()
        .iter()
        .filter(|&&k| k != tx)
        .map(|&k| chan.channel(tx, k))
        .collect();
    let beam = zf_beamformer(chan.channel(tx, tx), &cross, power_watts)?;
    let received_power: Vec<f64> = (0..chan.n_links())
        .map(|i| dot(chan.channel(tx, i), beam.weights()).norm_sqr())
        .collect();
    // interference inside the coalition is nulled by construction
    #[cfg(debug_assertions)]
    for &k in coalition.members().iter().filter(|&&k| k != tx) {
        let bound = 1e-9 * norm(chan.channel(tx, k)) * beam.power().sqrt();
        debug_assert!(
            received_power[k].sqrt() <= bound.max(1e-300),
            "zero-forcing residual at receiver {k} exceeds tolerance"
        );
    }
    Ok(LinkEffect {
        signal_power: received_power[tx],
        received_power,
    })
}

fn rates_from_effects(
    cs: &CoalitionStructure,
    effects: &[&LinkEffect],
    noise_watts: f64,
) -> Result<UtilityVector> {
    let n = cs.n_players();
    let mut rates = Vec::with_capacity(n);
    for i in 0..n {
        let own = cs.coalition_of(i)?;
        let mut interference = 0.0;
        for (j, effect) in effects.iter().enumerate() {
            if !own.contains(j) {
                interference += effect.received_power[i];
            }
        }
        let sinr = effects[i].signal_power / (interference + noise_watts);
        rates.push((1.0 + sinr).log2());
    }
    UtilityVector::new(rates)
}

/// Per-link achievable rates (bits/s/Hz) of a coalition structure: each
/// transmitter zero-forces toward its coalition partners, and each link sees
/// interference only from outside its coalition.
pub fn evaluate_rates(
    cs: &CoalitionStructure,
    chan: &ChannelRealization,
    config: &NetworkConfig,
) -> Result<UtilityVector> {
    if cs.n_players() != chan.n_links() {
        return Err(Error::PlayerSetMismatch {
            left: cs.n_players(),
            right: chan.n_links(),
        });
    }
    for block in cs.blocks() {
        if block.len() > config.antennas {
            return Err(Error::CoalitionTooLarge {
                size: block.len(),
                antennas: config.antennas,
            });
        }
    }
    let power = dbm_to_watts(config.power_dbm);
    let noise = noise_power(config);
    let effects = (0..chan.n_links())
        .map(|j| link_effect(chan, j, cs.coalition_of(j)?, power))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&LinkEffect> = effects.iter().collect();
    rates_from_effects(cs, &refs, noise)
}

/// Rate oracle over one channel realization. Beamformers and interference
/// footprints depend only on a transmitter's own coalition, so they are
/// cached per (transmitter, coalition) and shared across all structures
/// evaluated within the realization.
pub struct RateOracle<'a> {
    chan: &'a ChannelRealization,
    antennas: usize,
    power_watts: f64,
    noise_watts: f64,
    /// effects[tx] maps the transmitter's coalition to its footprint
    effects: Vec<HashMap<Coalition, LinkEffect>>,
}

impl<'a> RateOracle<'a> {
    pub fn new(chan: &'a ChannelRealization, config: &NetworkConfig) -> Self {
        Self {
            chan,
            antennas: config.antennas,
            power_watts: dbm_to_watts(config.power_dbm),
            noise_watts: noise_power(config),
            effects: vec![HashMap::new(); chan.n_links()],
        }
    }
}

impl UtilityOracle for RateOracle<'_> {
    fn utilities(&mut self, cs: &CoalitionStructure) -> Result<UtilityVector> {
        if cs.n_players() != self.chan.n_links() {
            return Err(Error::PlayerSetMismatch {
                left: cs.n_players(),
                right: self.chan.n_links(),
            });
        }
        for block in cs.blocks() {
            if block.len() > self.antennas {
                return Err(Error::CoalitionTooLarge {
                    size: block.len(),
                    antennas: self.antennas,
                });
            }
        }
        for j in 0..cs.n_players() {
            let coalition = cs.coalition_of(j)?;
            if !self.effects[j].contains_key(coalition) {
                let effect = link_effect(self.chan, j, coalition, self.power_watts)?;
                self.effects[j].insert(coalition.clone(), effect);
            }
        }
        let effects = (0..cs.n_players())
            .map(|j| &self.effects[j][cs.coalition_of(j).expect("validated")])
            .collect::<Vec<_>>();
        rates_from_effects(cs, &effects, self.noise_watts)
    }
}
