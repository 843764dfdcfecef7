//! Shared fixtures for the benchmark targets.

use coform_core::miso::{
    generate_realization_given_tx, place_transmitters, realization_rng, substream_rng,
    ChannelRealization, NetworkConfig, DEPLOYMENT_STREAM,
};

/// A deterministic full-scale network draw (17 links, 8 antennas).
pub fn full_scale_realization() -> (ChannelRealization, NetworkConfig) {
    sized_realization(17, 8)
}

/// A deterministic draw of the given size with the default radio parameters.
pub fn sized_realization(n_links: usize, antennas: usize) -> (ChannelRealization, NetworkConfig) {
    let config = NetworkConfig {
        n_links,
        antennas,
        seed: 1,
        ..NetworkConfig::default()
    };
    let tx = place_transmitters(&config, &mut substream_rng(config.seed, DEPLOYMENT_STREAM))
        .expect("valid config");
    let chan = generate_realization_given_tx(&config, &tx, &mut realization_rng(config.seed, 0))
        .expect("valid config");
    (chan, config)
}
