//! Reproducible sampling of links and channel plans into labeled records.
//!
//! Every record draws from its own ChaCha stream keyed by `(base_seed, index)`,
//! so a dataset is a pure function of its [`GenConfig`] no matter how many
//! threads produce it.

use std::io::Write;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linkmodel::{
    Channel, ChannelPlan, LabeledRecord, Link, LinkError, Payload, Scenario, Span,
    C_BAND_START_THZ, C_BAND_WIDTH_GHZ, GRID_GRANULARITY_GHZ,
};
use crate::physics::{self, PhysicsError, DEFAULT_NF_DB};

const GRID_UNITS: usize = (C_BAND_WIDTH_GHZ / GRID_GRANULARITY_GHZ) as usize;
const WRITE_CHUNK: usize = 4096;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("index {index} out of range for {n_records} records")]
    IndexOutOfRange { index: usize, n_records: usize },
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Parameter space sampled by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub n_records: usize,
    pub base_seed: u64,
    /// Target fraction of the C-band covered by slots, drawn uniformly.
    pub occupancy_range: [f64; 2],
    pub span_count_values: Vec<usize>,
    /// Inclusive, km, integer steps.
    pub span_length_range: [u32; 2],
    /// dB/km, drawn uniformly per span.
    pub alpha_range: [f64; 2],
    /// Probability that a link repeats one drawn (length, alpha) for all of
    /// its spans instead of drawing each span independently.
    pub uniform_link_fraction: f64,
    /// dBm
    pub power_values: Vec<f64>,
    pub payload_mix: Vec<Payload>,
    /// Amplifier noise figure used for labeling, dB.
    pub nf_db: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_records: 1000,
            base_seed: 0,
            occupancy_range: [0.75, 0.95],
            span_count_values: (1..60).step_by(2).collect(),
            span_length_range: [10, 120],
            alpha_range: [0.19, 0.275],
            uniform_link_fraction: 0.2,
            power_values: (0..=17).map(|k| -6.0 + 0.5 * k as f64).collect(),
            payload_mix: Payload::ALL.to_vec(),
            nf_db: DEFAULT_NF_DB,
        }
    }
}

impl GenConfig {
    /// Loads a TOML file, or JSON when the extension is `.json`.
    pub fn from_path(path: &Path) -> Result<Self, DatagenError> {
        let text = std::fs::read_to_string(path)?;
        let config: GenConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| DatagenError::Config(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| DatagenError::Config(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |msg: String| Err(DatagenError::Config(msg));
        if self.n_records == 0 {
            return bad("n_records must be at least 1".into());
        }
        let [occ_lo, occ_hi] = self.occupancy_range;
        // The last drawn channel may overshoot the target by one wide slot.
        let occ_max = 1.0 - 75.0 / C_BAND_WIDTH_GHZ;
        if !(occ_lo > 0.0 && occ_lo <= occ_hi && occ_hi <= occ_max) {
            return bad(format!(
                "occupancy_range must satisfy 0 < lo <= hi <= {occ_max}, got {:?}",
                self.occupancy_range
            ));
        }
        if self.span_count_values.is_empty() || self.span_count_values.contains(&0) {
            return bad("span_count_values must be non-empty and positive".into());
        }
        let [len_lo, len_hi] = self.span_length_range;
        if len_lo == 0 || len_lo > len_hi {
            return bad(format!(
                "span_length_range must satisfy 0 < lo <= hi, got {:?}",
                self.span_length_range
            ));
        }
        let [a_lo, a_hi] = self.alpha_range;
        if !(a_lo > 0.0 && a_lo <= a_hi && a_hi.is_finite()) {
            return bad(format!(
                "alpha_range must satisfy 0 < lo <= hi, got {:?}",
                self.alpha_range
            ));
        }
        if !(0.0..=1.0).contains(&self.uniform_link_fraction) {
            return bad(format!(
                "uniform_link_fraction must lie in [0, 1], got {}",
                self.uniform_link_fraction
            ));
        }
        if self.power_values.is_empty() || self.power_values.iter().any(|p| !p.is_finite()) {
            return bad("power_values must be non-empty and finite".into());
        }
        if self.payload_mix.is_empty() {
            return bad("payload_mix must be non-empty".into());
        }
        if !self.nf_db.is_finite() {
            return bad("nf_db must be finite".into());
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the record stream for `index`.
pub fn record_seed(base_seed: u64, index: usize) -> u64 {
    splitmix64(splitmix64(base_seed) ^ index as u64)
}

fn slot_units(payload: Payload) -> usize {
    (payload.slot_width() / GRID_GRANULARITY_GHZ) as usize
}

/// Scenario number `index` of the dataset described by `config`.
pub fn generate_scenario(config: &GenConfig, index: usize) -> Result<Scenario, DatagenError> {
    if index >= config.n_records {
        return Err(DatagenError::IndexOutOfRange {
            index,
            n_records: config.n_records,
        });
    }
    scenario_from_seed(config, record_seed(config.base_seed, index))
}

/// Draws a scenario from the stream identified by `seed`.
pub fn scenario_from_seed(config: &GenConfig, seed: u64) -> Result<Scenario, DatagenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_spans = *config
        .span_count_values
        .choose(&mut rng)
        .ok_or_else(|| DatagenError::Config("empty span_count_values".into()))?;
    let [len_lo, len_hi] = config.span_length_range;
    let [a_lo, a_hi] = config.alpha_range;
    let uniform =
        config.uniform_link_fraction > 0.0 && rng.random_bool(config.uniform_link_fraction);
    let mut draw_span = || {
        let length = rng.random_range(len_lo..=len_hi) as f64;
        let alpha = rng.random_range(a_lo..=a_hi);
        Span::ssmf(length, alpha)
    };
    let spans: Vec<Span> = if uniform {
        vec![draw_span(); n_spans]
    } else {
        (0..n_spans).map(|_| draw_span()).collect()
    };
    let link = Link::new(spans)?;

    let plan = draw_plan(config, &mut rng)?;
    Ok(Scenario { link, plan, seed })
}

fn draw_plan(config: &GenConfig, rng: &mut ChaCha8Rng) -> Result<ChannelPlan, DatagenError> {
    let [occ_lo, occ_hi] = config.occupancy_range;
    let target = rng.random_range(occ_lo..=occ_hi);

    let mut payloads = Vec::new();
    let mut used = 0usize;
    while (used as f64) < target * GRID_UNITS as f64 {
        let p = *config
            .payload_mix
            .choose(rng)
            .ok_or_else(|| DatagenError::Config("empty payload_mix".into()))?;
        used += slot_units(p);
        payloads.push(p);
    }
    if used > GRID_UNITS {
        return Err(DatagenError::Config(format!(
            "occupancy target {target} overflows the band"
        )));
    }

    // Spread the free grid units over the n + 1 gaps around the channels.
    let mut gaps = vec![0usize; payloads.len() + 1];
    let n_gaps = gaps.len();
    for _ in 0..(GRID_UNITS - used) {
        gaps[rng.random_range(0..n_gaps)] += 1;
    }

    let mut channels = Vec::with_capacity(payloads.len());
    let mut pos = gaps[0];
    for (i, &payload) in payloads.iter().enumerate() {
        let center_ghz = C_BAND_START_THZ * 1e3
            + pos as f64 * GRID_GRANULARITY_GHZ
            + payload.slot_width() / 2.0;
        let power = *config
            .power_values
            .choose(rng)
            .ok_or_else(|| DatagenError::Config("empty power_values".into()))?;
        channels.push(Channel::new(payload, center_ghz / 1e3, power));
        pos += slot_units(payload) + gaps[i + 1];
    }
    let cut = rng.random_range(0..channels.len());
    channels[cut].is_cut = true;
    Ok(ChannelPlan::new(channels))
}

/// Attaches oracle labels (closed-form eta, ASE noise, penalized SNR).
pub fn label_scenario(scenario: Scenario, nf_db: f64) -> Result<LabeledRecord, PhysicsError> {
    let budget = physics::NoiseBudget::oracle(&scenario.link, &scenario.plan, nf_db)?;
    let snr_db = budget.snr_db(scenario.plan.cut().launch_power)?;
    Ok(LabeledRecord {
        scenario,
        eta: budget.eta,
        sigma2: budget.sigma2,
        snr_db,
    })
}

fn labeled_line(config: &GenConfig, index: usize) -> Result<String, DatagenError> {
    let scenario = generate_scenario(config, index)?;
    let record = label_scenario(scenario, config.nf_db)?;
    Ok(serde_json::to_string(&record)?)
}

/// Writes the whole dataset as JSONL in index order. `threads = None` uses the
/// global rayon pool. Returns the number of records written.
pub fn generate_dataset(
    config: &GenConfig,
    mut out: impl Write,
    threads: Option<usize>,
) -> Result<usize, DatagenError> {
    config.validate()?;
    let pool = threads
        .map(|n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| DatagenError::Pool(e.to_string()))
        })
        .transpose()?;
    let chunk = |start: usize, end: usize| -> Result<Vec<String>, DatagenError> {
        (start..end)
            .into_par_iter()
            .map(|i| labeled_line(config, i))
            .collect()
    };
    for start in (0..config.n_records).step_by(WRITE_CHUNK) {
        let end = (start + WRITE_CHUNK).min(config.n_records);
        let lines = match &pool {
            Some(pool) => pool.install(|| chunk(start, end))?,
            None => chunk(start, end)?,
        };
        for line in lines {
            out.write_all(line.as_bytes())?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(config.n_records)
}

/// In-memory variant of [`generate_dataset`].
pub fn generate_records(config: &GenConfig) -> Result<Vec<LabeledRecord>, DatagenError> {
    config.validate()?;
    (0..config.n_records)
        .into_par_iter()
        .map(|i| {
            let scenario = generate_scenario(config, i)?;
            Ok(label_scenario(scenario, config.nf_db)?)
        })
        .collect()
}
