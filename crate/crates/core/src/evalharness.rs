//! ΔSNR evaluation of eta predictors against the oracle or against measured
//! SNRs, plus channel-plan sweeps driven by a TOML description.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::linkmodel::{
    Channel, ChannelPlan, LabeledRecord, Link, LinkError, Payload, Scenario, Span, Violation,
    C_BAND_CENTER_THZ, C_BAND_END_THZ, C_BAND_START_THZ,
};
use crate::neural::{MlpModel, NeuralError};
use crate::physics::{
    combine_snr, eta_closed_form, linear_noise, penalties_for, PhysicsError, DEFAULT_NF_DB,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("nothing to evaluate")]
    Empty,
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error("case {case_id}: plan is invalid: {}", join_violations(.violations))]
    InvalidPlan {
        case_id: String,
        violations: Vec<Violation>,
    },
    #[error("predictor returned {got} values for {expected} scenarios")]
    PredictionCount { expected: usize, got: usize },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("duplicate case_id {case_id:?} on lines {first_line} and {second_line}")]
    DuplicateCase {
        case_id: String,
        first_line: u64,
        second_line: u64,
    },
    #[error("no measurement for {} case(s): {}", .0.len(), .0.join(", "))]
    MissingMeasurements(Vec<String>),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Anything that maps scenarios to eta values.
pub trait EtaPredictor: Sync {
    fn model_id(&self) -> String;
    fn predict_etas(&self, scenarios: &[&Scenario]) -> Result<Vec<f64>, EvalError>;
}

impl EtaPredictor for MlpModel {
    fn model_id(&self) -> String {
        self.metadata.model_id.clone()
    }

    fn predict_etas(&self, scenarios: &[&Scenario]) -> Result<Vec<f64>, EvalError> {
        Ok(MlpModel::predict_etas(self, scenarios.iter().copied())?)
    }
}

/// The closed-form GN model used as a predictor.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleModel;

impl EtaPredictor for OracleModel {
    fn model_id(&self) -> String {
        "gn-closed-form".to_string()
    }

    fn predict_etas(&self, scenarios: &[&Scenario]) -> Result<Vec<f64>, EvalError> {
        scenarios
            .par_iter()
            .map(|s| Ok(eta_closed_form(&s.link, &s.plan)?))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Oracle,
    Measurement,
}

impl fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReferenceKind::Oracle => "oracle",
            ReferenceKind::Measurement => "measurement",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub case_id: String,
    pub snr_model_db: f64,
    pub snr_ref_db: f64,
    pub delta_snr_db: f64,
}

impl EvalRow {
    pub fn new(case_id: String, snr_model_db: f64, snr_ref_db: f64) -> Self {
        Self {
            case_id,
            snr_model_db,
            snr_ref_db,
            delta_snr_db: (snr_model_db - snr_ref_db).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Sorted by case id.
    pub rows: Vec<EvalRow>,
    pub mean_delta_db: f64,
    pub max_delta_db: f64,
    pub n_cases: usize,
    pub model_id: String,
    pub reference: ReferenceKind,
}

impl EvalReport {
    pub fn from_rows(
        mut rows: Vec<EvalRow>,
        model_id: String,
        reference: ReferenceKind,
    ) -> Result<Self, EvalError> {
        if rows.is_empty() {
            return Err(EvalError::Empty);
        }
        rows.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        let n = rows.len();
        let mean = rows.iter().map(|r| r.delta_snr_db).sum::<f64>() / n as f64;
        let max = rows.iter().map(|r| r.delta_snr_db).fold(0.0, f64::max);
        Ok(Self {
            rows,
            mean_delta_db: mean,
            max_delta_db: max,
            n_cases: n,
            model_id,
            reference,
        })
    }

    pub fn summary(&self) -> Summary {
        Summary {
            mean_delta_db: self.mean_delta_db,
            max_delta_db: self.max_delta_db,
            n_cases: self.n_cases,
            model_id: self.model_id.clone(),
            reference: self.reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean_delta_db: f64,
    pub max_delta_db: f64,
    pub n_cases: usize,
    pub model_id: String,
    pub reference: ReferenceKind,
}

/// SNR of a scenario's CUT at its launch power for a given eta.
fn scenario_snr(scenario: &Scenario, sigma2: f64, eta: f64) -> Result<f64, PhysicsError> {
    combine_snr(
        scenario.plan.cut().launch_power,
        sigma2,
        eta,
        penalties_for(&scenario.plan),
    )
}

/// Compares predicted against labeled SNR for `(case_id, record)` pairs.
/// The caller is responsible for keeping these out of the training split.
pub fn evaluate<'a>(
    model: &dyn EtaPredictor,
    cases: impl IntoIterator<Item = (String, &'a LabeledRecord)>,
) -> Result<EvalReport, EvalError> {
    let (ids, records): (Vec<String>, Vec<&LabeledRecord>) = cases.into_iter().unzip();
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let scenarios: Vec<&Scenario> = records.iter().map(|r| &r.scenario).collect();
    let etas = model.predict_etas(&scenarios)?;
    if etas.len() != records.len() {
        return Err(EvalError::PredictionCount {
            expected: records.len(),
            got: etas.len(),
        });
    }
    let rows = ids
        .into_iter()
        .zip(records)
        .zip(etas)
        .map(|((id, r), eta)| {
            let model_snr = scenario_snr(&r.scenario, r.sigma2, eta)?;
            let ref_snr = scenario_snr(&r.scenario, r.sigma2, r.eta)?;
            Ok(EvalRow::new(id, model_snr, ref_snr))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    EvalReport::from_rows(rows, model.model_id(), ReferenceKind::Oracle)
}

/// Case id for the `index`-th record of a dataset.
pub fn record_case_id(index: usize) -> String {
    format!("r{index:07}")
}

/// One named homogeneous link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepLink {
    pub name: String,
    pub span_count: usize,
    /// km
    pub span_length: f64,
    /// dB/km
    pub alpha: f64,
}

impl SweepLink {
    pub fn build(&self) -> Result<Link, LinkError> {
        Link::homogeneous(self.span_count, Span::ssmf(self.span_length, self.alpha))
    }
}

/// A channel under test and the modes it is swept over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCut {
    pub name: String,
    pub link: String,
    pub payload: Payload,
    /// dBm
    #[serde(default)]
    pub launch_power: f64,
    /// THz
    #[serde(default = "default_center")]
    pub center_frequency: f64,
    /// On/off patterns over the neighbor slots, outermost-left first.
    pub modes: Vec<String>,
    /// One case per entry for each mode; empty means the template payload.
    #[serde(default)]
    pub neighbor_payloads: Vec<Payload>,
}

fn default_center() -> f64 {
    C_BAND_CENTER_THZ
}

/// Four neighbor slots packed edge to edge around the CUT, two per side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborTemplate {
    pub payload: Payload,
    /// dBm
    #[serde(default)]
    pub launch_power: f64,
}

/// Static channels on a fixed 50 GHz grid outside a window around the CUT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundFill {
    pub payload: Payload,
    /// dBm
    #[serde(default)]
    pub launch_power: f64,
    /// Width of the window kept clear, centered on the CUT, GHz.
    pub clear_window_ghz: f64,
}

pub const NEIGHBOR_SLOTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_sweep_name")]
    pub name: String,
    #[serde(default = "default_nf")]
    pub nf_db: f64,
    pub links: Vec<SweepLink>,
    pub neighbors: NeighborTemplate,
    #[serde(default)]
    pub background: Option<BackgroundFill>,
    pub cuts: Vec<SweepCut>,
}

fn default_sweep_name() -> String {
    "sweep".to_string()
}

fn default_nf() -> f64 {
    DEFAULT_NF_DB
}

/// Parses a 4-character `0`/`1` pattern.
pub fn parse_mode(mode: &str) -> Result<[bool; NEIGHBOR_SLOTS], EvalError> {
    let bits: Vec<bool> = mode
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(()),
        })
        .collect::<Result<_, _>>()
        .map_err(|_| EvalError::Config(format!("mode {mode:?} must contain only 0 and 1")))?;
    bits.try_into()
        .map_err(|_| EvalError::Config(format!("mode {mode:?} must have {NEIGHBOR_SLOTS} bits")))
}

/// One concrete channel plan of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCase {
    pub case_id: String,
    pub cut_name: String,
    pub link_name: String,
    pub mode: String,
    pub neighbor_payload: Payload,
    pub scenario: Scenario,
}

/// Stable id from what defines a case, independent of its position.
pub fn sweep_case_id(cut_name: &str, mode: &str, neighbor_payload: Payload) -> String {
    let mut h = Sha256::new();
    h.update(cut_name.as_bytes());
    h.update([0]);
    h.update(mode.as_bytes());
    h.update([0]);
    h.update(neighbor_payload.name().as_bytes());
    let digest = h.finalize();
    let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
    format!("c{hex}")
}

impl SweepConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, EvalError> {
        let config: Self = toml::from_str(s).map_err(|e| EvalError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvalError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Config(m));
        if self.cuts.is_empty() {
            return bad("at least one cut is required".into());
        }
        for link in &self.links {
            link.build()
                .map_err(|e| EvalError::Config(format!("link {}: {e}", link.name)))?;
        }
        let mut names = std::collections::BTreeSet::new();
        for cut in &self.cuts {
            if !names.insert(&cut.name) {
                return bad(format!("duplicate cut name {:?}", cut.name));
            }
            if !self.links.iter().any(|l| l.name == cut.link) {
                return bad(format!("cut {} refers to unknown link {:?}", cut.name, cut.link));
            }
            if cut.modes.is_empty() {
                return bad(format!("cut {} has no modes", cut.name));
            }
            for m in &cut.modes {
                parse_mode(m)?;
            }
            if !cut.launch_power.is_finite() || !cut.center_frequency.is_finite() {
                return bad(format!("cut {} has a non-finite power or frequency", cut.name));
            }
        }
        if let Some(bg) = &self.background {
            if bg.clear_window_ghz.is_nan() || bg.clear_window_ghz <= 0.0 {
                return bad("background clear_window_ghz must be positive".into());
            }
        }
        Ok(())
    }

    /// Every (cut, mode, neighbor payload) combination, in config order.
    pub fn cases(&self) -> Result<Vec<SweepCase>, EvalError> {
        let mut out = Vec::new();
        for cut in &self.cuts {
            let link = self
                .links
                .iter()
                .find(|l| l.name == cut.link)
                .ok_or_else(|| EvalError::Config(format!("unknown link {:?}", cut.link)))?
                .build()?;
            let payloads = if cut.neighbor_payloads.is_empty() {
                vec![self.neighbors.payload]
            } else {
                cut.neighbor_payloads.clone()
            };
            for mode in &cut.modes {
                let bits = parse_mode(mode)?;
                for &nb in &payloads {
                    let case_id = sweep_case_id(&cut.name, mode, nb);
                    let plan = self.plan_for(cut, bits, nb);
                    let violations = plan.validate();
                    if !violations.is_empty() {
                        return Err(EvalError::InvalidPlan {
                            case_id,
                            violations,
                        });
                    }
                    out.push(SweepCase {
                        case_id,
                        cut_name: cut.name.clone(),
                        link_name: cut.link.clone(),
                        mode: mode.clone(),
                        neighbor_payload: nb,
                        scenario: Scenario {
                            link: link.clone(),
                            plan,
                            seed: 0,
                        },
                    });
                }
            }
        }
        Ok(out)
    }

    fn plan_for(&self, cut: &SweepCut, bits: [bool; NEIGHBOR_SLOTS], nb: Payload) -> ChannelPlan {
        let f0 = cut.center_frequency;
        let half_cut = cut.payload.slot_width() / 2.0;
        let w = nb.slot_width();
        let p = self.neighbors.launch_power;
        // outermost-left, inner-left, inner-right, outermost-right
        let offsets_ghz = [
            -(half_cut + 1.5 * w),
            -(half_cut + 0.5 * w),
            half_cut + 0.5 * w,
            half_cut + 1.5 * w,
        ];
        let mut channels = vec![Channel::new(cut.payload, f0, cut.launch_power).as_cut()];
        channels.extend(
            offsets_ghz
                .iter()
                .zip(bits)
                .filter(|(_, on)| *on)
                .map(|(off, _)| Channel::new(nb, f0 + off / 1e3, p)),
        );
        if let Some(bg) = &self.background {
            let lo = f0 - bg.clear_window_ghz / 2e3;
            let hi = f0 + bg.clear_window_ghz / 2e3;
            let slot = bg.payload.slot_width() / 1e3;
            let n_slots = ((C_BAND_END_THZ - C_BAND_START_THZ) / slot + 1e-9).floor() as usize;
            for k in 0..n_slots {
                let s_lo = C_BAND_START_THZ + k as f64 * slot;
                let s_hi = s_lo + slot;
                if s_hi <= lo + 1e-9 || s_lo >= hi - 1e-9 {
                    channels.push(Channel::new(bg.payload, s_lo + slot / 2.0, bg.launch_power));
                }
            }
        }
        ChannelPlan::new(channels)
    }
}

/// Writes the case listing: id, cut, link, mode, neighbor payload and
/// channel count.
pub fn write_case_listing(cases: &[SweepCase], out: impl Write) -> Result<(), EvalError> {
    let mut sorted: Vec<&SweepCase> = cases.iter().collect();
    sorted.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["case_id", "cut", "link", "mode", "neighbor_payload", "n_channels"])
        .map_err(csv_io)?;
    for c in sorted {
        w.write_record([
            c.case_id.as_str(),
            &c.cut_name,
            &c.link_name,
            &c.mode,
            c.neighbor_payload.name(),
            &c.scenario.plan.len().to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> EvalError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => EvalError::Io(io),
        other => EvalError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Where sweep reference SNRs come from.
#[derive(Debug, Clone, Copy)]
pub enum SweepReference<'a> {
    Oracle,
    Measurements(&'a MeasurementTable),
}

/// Runs every case of `config` through `model` and compares against the
/// chosen reference.
pub fn sweep(
    config: &SweepConfig,
    model: &dyn EtaPredictor,
    reference: SweepReference<'_>,
) -> Result<EvalReport, EvalError> {
    config.validate()?;
    let cases = config.cases()?;
    sweep_cases(&cases, config.nf_db, model, reference)
}

pub fn sweep_cases(
    cases: &[SweepCase],
    nf_db: f64,
    model: &dyn EtaPredictor,
    reference: SweepReference<'_>,
) -> Result<EvalReport, EvalError> {
    if cases.is_empty() {
        return Err(EvalError::Empty);
    }
    if let SweepReference::Measurements(table) = reference {
        let missing: Vec<String> = cases
            .iter()
            .filter(|c| !table.rows.contains_key(&c.case_id))
            .map(|c| c.case_id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(EvalError::MissingMeasurements(missing));
        }
    }
    let scenarios: Vec<&Scenario> = cases.iter().map(|c| &c.scenario).collect();
    let etas = model.predict_etas(&scenarios)?;
    if etas.len() != cases.len() {
        return Err(EvalError::PredictionCount {
            expected: cases.len(),
            got: etas.len(),
        });
    }
    let rows = cases
        .par_iter()
        .zip(etas)
        .map(|(c, eta)| {
            let s = &c.scenario;
            let sigma2 = linear_noise(&s.link, s.plan.cut(), nf_db);
            let model_snr = scenario_snr(s, sigma2, eta)?;
            let ref_snr = match reference {
                SweepReference::Oracle => {
                    scenario_snr(s, sigma2, eta_closed_form(&s.link, &s.plan)?)?
                }
                SweepReference::Measurements(t) => t.rows[&c.case_id].measured_snr_db,
            };
            Ok(EvalRow::new(c.case_id.clone(), model_snr, ref_snr))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let kind = match reference {
        SweepReference::Oracle => ReferenceKind::Oracle,
        SweepReference::Measurements(_) => ReferenceKind::Measurement,
    };
    EvalReport::from_rows(rows, model.model_id(), kind)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub measured_snr_db: f64,
    /// Values of the extra columns, in header order.
    pub extra: Vec<String>,
    /// 1-based line in the source file.
    pub line: u64,
}

/// Measured SNRs keyed by case id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementTable {
    pub extra_columns: Vec<String>,
    pub rows: BTreeMap<String, Measurement>,
}

impl MeasurementTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn ingest_measurements(input: impl Read) -> Result<MeasurementTable, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| EvalError::Malformed {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(id_col), Some(snr_col)) = (col("case_id"), col("measured_snr_db")) else {
        return Err(EvalError::Malformed {
            line: 1,
            message: "header must contain case_id and measured_snr_db".into(),
        });
    };
    let extra_idx: Vec<usize> = (0..header.len())
        .filter(|&i| i != id_col && i != snr_col)
        .collect();
    let mut table = MeasurementTable {
        extra_columns: extra_idx.iter().map(|&i| header[i].to_string()).collect(),
        rows: BTreeMap::new(),
    };
    for record in reader.records() {
        let record = record.map_err(|e| EvalError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let case_id = record.get(id_col).unwrap_or_default().to_string();
        if case_id.is_empty() {
            return Err(EvalError::Malformed {
                line,
                message: "empty case_id".into(),
            });
        }
        let raw = record.get(snr_col).unwrap_or_default();
        let snr: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| EvalError::Malformed {
                line,
                message: format!("measured_snr_db {raw:?} is not a finite number"),
            })?;
        if let Some(prev) = table.rows.get(&case_id) {
            return Err(EvalError::DuplicateCase {
                case_id,
                first_line: prev.line,
                second_line: line,
            });
        }
        let extra = extra_idx
            .iter()
            .map(|&i| record.get(i).unwrap_or_default().to_string())
            .collect();
        table.rows.insert(
            case_id,
            Measurement {
                measured_snr_db: snr,
                extra,
                line,
            },
        );
    }
    Ok(table)
}

/// Writes a table in the format read by [`ingest_measurements`].
pub fn write_measurements(table: &MeasurementTable, out: impl Write) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["case_id".to_string(), "measured_snr_db".to_string()];
    header.extend(table.extra_columns.iter().cloned());
    w.write_record(&header).map_err(csv_io)?;
    for (id, m) in &table.rows {
        let mut row = vec![id.clone(), m.measured_snr_db.to_string()];
        row.extend(m.extra.iter().cloned());
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub const REPORT_CSV: &str = "report.csv";
pub const SUMMARY_JSON: &str = "summary.json";

pub fn write_report_csv(report: &EvalReport, out: impl Write) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["case_id", "snr_model_db", "snr_ref_db", "delta_snr_db"])
        .map_err(csv_io)?;
    for r in &report.rows {
        w.write_record([
            r.case_id.clone(),
            r.snr_model_db.to_string(),
            r.snr_ref_db.to_string(),
            r.delta_snr_db.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.csv` and `summary.json` into `dir`, creating it if needed.
pub fn emit_report(report: &EvalReport, dir: &Path) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir)?;
    let csv_file = std::io::BufWriter::new(std::fs::File::create(dir.join(REPORT_CSV))?);
    write_report_csv(report, csv_file)?;
    let mut json = serde_json::to_string_pretty(&report.summary())?;
    json.push('\n');
    std::fs::write(dir.join(SUMMARY_JSON), json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_records, GenConfig};
    use approx::assert_relative_eq;

    struct Fixed(Vec<f64>);

    impl EtaPredictor for Fixed {
        fn model_id(&self) -> String {
            "fixed".into()
        }
        fn predict_etas(&self, s: &[&Scenario]) -> Result<Vec<f64>, EvalError> {
            Ok(self.0[..s.len()].to_vec())
        }
    }

    fn small_sweep() -> SweepConfig {
        SweepConfig::from_toml_str(
            r#"
            [[links]]
            name = "l"
            span_count = 3
            span_length = 80.0
            alpha = 0.2

            [neighbors]
            payload = "QPSK_100G"

            [[cuts]]
            name = "cut-a"
            link = "l"
            payload = "QPSK_200G"
            modes = ["0000", "1111", "0110"]
            "#,
        )
        .unwrap()
    }

    #[test]
    fn oracle_against_itself_has_zero_delta() {
        let config = GenConfig {
            n_records: 30,
            span_count_values: vec![1, 3],
            ..GenConfig::default()
        };
        let records = generate_records(&config).unwrap();
        let report = evaluate(
            &OracleModel,
            records.iter().enumerate().map(|(i, r)| (record_case_id(i), r)),
        )
        .unwrap();
        assert_eq!(report.n_cases, 30);
        assert_eq!(report.mean_delta_db, 0.0);
        assert_eq!(report.max_delta_db, 0.0);
        for (row, r) in report.rows.iter().zip(&records) {
            assert_relative_eq!(row.snr_ref_db, r.snr_db, max_relative = 1e-12);
        }
    }

    #[test]
    fn toy_report_aggregates() {
        let rows = vec![
            EvalRow::new("b".into(), 12.0, 11.0),
            EvalRow::new("a".into(), 10.0, 10.5),
        ];
        let r = EvalReport::from_rows(rows, "toy".into(), ReferenceKind::Measurement).unwrap();
        assert_eq!(r.rows[0].case_id, "a");
        assert_relative_eq!(r.mean_delta_db, 0.75);
        assert_eq!(r.max_delta_db, 1.0);
        assert!(matches!(
            EvalReport::from_rows(vec![], "x".into(), ReferenceKind::Oracle),
            Err(EvalError::Empty)
        ));
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let none: Vec<(String, &LabeledRecord)> = vec![];
        assert!(matches!(evaluate(&OracleModel, none), Err(EvalError::Empty)));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(parse_mode("1010").unwrap(), [true, false, true, false]);
        assert!(parse_mode("101").is_err());
        assert!(parse_mode("10a0").is_err());
    }

    #[test]
    fn sweep_modes_shape_the_plan() {
        let config = small_sweep();
        let cases = config.cases().unwrap();
        assert_eq!(cases.len(), 3);
        let by_mode = |m: &str| cases.iter().find(|c| c.mode == m).unwrap();
        let empty = by_mode("0000");
        assert_eq!(empty.scenario.plan.len(), 1);
        let parts = crate::physics::eta_closed_form_parts(&empty.scenario.link, &empty.scenario.plan)
            .unwrap();
        assert_eq!(parts.xci, 0.0);
        let full = by_mode("1111");
        assert_eq!(full.scenario.plan.len(), 5);
        assert!(full.scenario.plan.validate().is_empty());
        let eta = |c: &SweepCase| eta_closed_form(&c.scenario.link, &c.scenario.plan).unwrap();
        assert!(eta(full) >= eta(empty));
        assert!(eta(by_mode("0110")) <= eta(full));
        // inner neighbors sit edge to edge with the 75 GHz CUT slot
        let inner = &by_mode("0110").scenario.plan;
        let cut = inner.cut();
        let right = &inner.channels[inner.cut_index + 1];
        assert_relative_eq!(right.slot_ghz().0, cut.slot_ghz().1, epsilon = 1e-6);
    }

    #[test]
    fn case_ids_are_stable_and_distinct() {
        let a = sweep_case_id("cut", "1010", Payload::Qpsk100G);
        assert_eq!(a, sweep_case_id("cut", "1010", Payload::Qpsk100G));
        assert_ne!(a, sweep_case_id("cut", "1010", Payload::Qam16_200G));
        assert_ne!(a, sweep_case_id("cut", "0101", Payload::Qpsk100G));
        assert_eq!(a.len(), 13);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = small_sweep();
        c.cuts[0].modes.push("11".into());
        assert!(c.validate().is_err());
        let mut c = small_sweep();
        c.cuts[0].link = "nope".into();
        assert!(c.validate().is_err());
        let mut c = small_sweep();
        c.cuts[0].modes.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn background_fill_keeps_the_window_clear() {
        let mut c = small_sweep();
        c.background = Some(BackgroundFill {
            payload: Payload::Qpsk100G,
            launch_power: 0.0,
            clear_window_ghz: 400.0,
        });
        for case in c.cases().unwrap() {
            let plan = &case.scenario.plan;
            assert!(plan.validate().is_empty());
            let bg = plan.len() - case.mode.matches('1').count() - 1;
            assert_eq!(bg, 96 - 8);
            assert!(plan.occupancy() > 0.85);
        }
    }

    #[test]
    fn missing_measurements_are_listed() {
        let config = small_sweep();
        let cases = config.cases().unwrap();
        let mut table = MeasurementTable::default();
        table.rows.insert(
            cases[0].case_id.clone(),
            Measurement {
                measured_snr_db: 15.0,
                extra: vec![],
                line: 2,
            },
        );
        match sweep(&config, &OracleModel, SweepReference::Measurements(&table)) {
            Err(EvalError::MissingMeasurements(ids)) => {
                assert_eq!(ids, vec![cases[1].case_id.clone(), cases[2].case_id.clone()])
            }
            other => panic!("expected missing measurements, got {other:?}"),
        }
    }

    #[test]
    fn sweep_against_measurements_uses_measured_values() {
        let config = small_sweep();
        let cases = config.cases().unwrap();
        let mut table = MeasurementTable::default();
        for (i, c) in cases.iter().enumerate() {
            table.rows.insert(
                c.case_id.clone(),
                Measurement {
                    measured_snr_db: 10.0 + i as f64,
                    extra: vec![],
                    line: i as u64 + 2,
                },
            );
        }
        let r = sweep(&config, &Fixed(vec![1e3; 3]), SweepReference::Measurements(&table)).unwrap();
        assert_eq!(r.reference, ReferenceKind::Measurement);
        for row in &r.rows {
            assert_eq!(row.snr_ref_db, table.rows[&row.case_id].measured_snr_db);
        }
        let o = sweep(&config, &OracleModel, SweepReference::Oracle).unwrap();
        assert_eq!(o.max_delta_db, 0.0);
    }

    #[test]
    fn measurement_ingestion() {
        let empty = ingest_measurements("case_id,measured_snr_db\n".as_bytes()).unwrap();
        assert!(empty.is_empty());

        let dup = "case_id,measured_snr_db\na,1.0\nb,2.0\na,3.0\n";
        match ingest_measurements(dup.as_bytes()) {
            Err(EvalError::DuplicateCase {
                case_id,
                first_line,
                second_line,
            }) => {
                assert_eq!(case_id, "a");
                assert_eq!((first_line, second_line), (2, 4));
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }

        let bad = "case_id,measured_snr_db\na,1.0\nb,twelve\n";
        match ingest_measurements(bad.as_bytes()) {
            Err(EvalError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed row, got {other:?}"),
        }
        assert!(ingest_measurements("id,snr\n".as_bytes()).is_err());

        let with_extra = "site,case_id,measured_snr_db\nnorth,a,14.25\n";
        let t = ingest_measurements(with_extra.as_bytes()).unwrap();
        assert_eq!(t.extra_columns, vec!["site"]);
        assert_eq!(t.rows["a"].extra, vec!["north"]);
    }

    #[test]
    fn measurement_round_trip_is_bit_exact() {
        let mut table = MeasurementTable {
            extra_columns: vec!["note".into()],
            rows: BTreeMap::new(),
        };
        for (i, v) in [0.1 + 0.2, 1.0 / 3.0, 15.123456789012345, -2.5e-7, 1e10]
            .into_iter()
            .enumerate()
        {
            table.rows.insert(
                format!("c{i}"),
                Measurement {
                    measured_snr_db: v,
                    extra: vec![format!("n, {i}")],
                    line: 0,
                },
            );
        }
        let mut buf = Vec::new();
        write_measurements(&table, &mut buf).unwrap();
        let back = ingest_measurements(buf.as_slice()).unwrap();
        assert_eq!(back.extra_columns, table.extra_columns);
        for (id, m) in &table.rows {
            assert_eq!(back.rows[id].measured_snr_db.to_bits(), m.measured_snr_db.to_bits());
            assert_eq!(back.rows[id].extra, m.extra);
        }
    }

    #[test]
    fn emitted_reports_are_reproducible_and_consistent() {
        let config = small_sweep();
        let report = sweep(&config, &Fixed(vec![2e3, 1e3, 5e2]), SweepReference::Oracle).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        emit_report(&report, d1.path()).unwrap();
        emit_report(&report, d2.path()).unwrap();
        for f in [REPORT_CSV, SUMMARY_JSON] {
            assert_eq!(
                std::fs::read(d1.path().join(f)).unwrap(),
                std::fs::read(d2.path().join(f)).unwrap()
            );
        }
        let text = std::fs::read_to_string(d1.path().join(REPORT_CSV)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("case_id,snr_model_db,snr_ref_db,delta_snr_db"));
        let deltas: Vec<f64> = lines
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(deltas.len(), 3);
        let summary: Summary =
            serde_json::from_str(&std::fs::read_to_string(d1.path().join(SUMMARY_JSON)).unwrap())
                .unwrap();
        assert_relative_eq!(summary.mean_delta_db, deltas.iter().sum::<f64>() / 3.0);
        assert_eq!(summary.max_delta_db, deltas.iter().cloned().fold(0.0, f64::max));
        assert_eq!(summary.n_cases, 3);
        assert_eq!(summary.reference, ReferenceKind::Oracle);
    }
}
