//! Fiber links and WDM channel plans.
//!
//! Units follow the on-disk formats: span lengths in km, attenuation in dB/km,
//! center frequencies in THz, slot widths in GHz, symbol rates in GBd and
//! launch powers in dBm. The physics module converts to SI internally.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower edge of the modeled C-band, THz.
pub const C_BAND_START_THZ: f64 = 191.3;
/// Upper edge of the modeled C-band, THz.
pub const C_BAND_END_THZ: f64 = 196.1;
/// C-band width in GHz.
pub const C_BAND_WIDTH_GHZ: f64 = 4800.0;
/// Center of the modeled C-band, THz.
pub const C_BAND_CENTER_THZ: f64 = 193.7;
/// Slot anchoring granularity of the flexible grid, GHz.
pub const GRID_GRANULARITY_GHZ: f64 = 6.25;

/// Standard single-mode fiber nonlinearity, 1/(W km).
pub const SSMF_GAMMA: f64 = 1.3;
/// Standard single-mode fiber chromatic dispersion, ps/(nm km).
pub const SSMF_DISPERSION: f64 = 16.7;

// Frequency comparisons are done in GHz with this slack (1 kHz).
const FREQ_TOL_GHZ: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("link has no spans")]
    Empty,
    #[error("span {index}: {reason}")]
    InvalidSpan { index: usize, reason: String },
}

/// One amplified fiber span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    /// km
    pub length: f64,
    /// dB/km
    pub alpha: f64,
    /// 1/(W km)
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// ps/(nm km)
    #[serde(default = "default_dispersion")]
    pub dispersion: f64,
}

fn default_gamma() -> f64 {
    SSMF_GAMMA
}

fn default_dispersion() -> f64 {
    SSMF_DISPERSION
}

impl Span {
    /// A standard single-mode fiber span.
    pub fn ssmf(length: f64, alpha: f64) -> Self {
        Self {
            length,
            alpha,
            gamma: SSMF_GAMMA,
            dispersion: SSMF_DISPERSION,
        }
    }

    fn check(&self) -> Result<(), String> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(format!("length must be positive, got {}", self.length));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(format!("gamma must be positive, got {}", self.gamma));
        }
        if !self.dispersion.is_finite() || self.dispersion == 0.0 {
            return Err("dispersion must be non-zero".to_string());
        }
        Ok(())
    }

    /// Notes for values outside the generated-data ranges. These are not errors.
    pub fn range_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(10.0..=120.0).contains(&self.length) {
            out.push(format!("length {} km outside [10, 120]", self.length));
        }
        if !(0.19..=0.275).contains(&self.alpha) {
            out.push(format!("alpha {} dB/km outside [0.19, 0.275]", self.alpha));
        }
        out
    }
}

/// An ordered sequence of spans between transceivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinkRepr", into = "LinkRepr")]
pub struct Link {
    spans: Vec<Span>,
}

#[derive(Serialize, Deserialize)]
struct LinkRepr {
    spans: Vec<Span>,
}

impl TryFrom<LinkRepr> for Link {
    type Error = LinkError;

    fn try_from(repr: LinkRepr) -> Result<Self, Self::Error> {
        Link::new(repr.spans)
    }
}

impl From<Link> for LinkRepr {
    fn from(link: Link) -> Self {
        LinkRepr { spans: link.spans }
    }
}

impl Link {
    pub fn new(spans: Vec<Span>) -> Result<Self, LinkError> {
        if spans.is_empty() {
            return Err(LinkError::Empty);
        }
        for (index, span) in spans.iter().enumerate() {
            span.check()
                .map_err(|reason| LinkError::InvalidSpan { index, reason })?;
        }
        Ok(Self { spans })
    }

    /// `count` identical spans.
    pub fn homogeneous(count: usize, span: Span) -> Result<Self, LinkError> {
        Self::new(vec![span; count])
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn span_count(&self) -> usize {
        self.spans.len()
    }

    /// km
    pub fn total_length(&self) -> f64 {
        self.spans.iter().map(|s| s.length).sum()
    }

    pub fn range_warnings(&self) -> Vec<String> {
        self.spans
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                s.range_warnings()
                    .into_iter()
                    .map(move |w| format!("span {i}: {w}"))
            })
            .collect()
    }
}

/// Transponder configurations a channel can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Payload {
    #[serde(rename = "QPSK_100G")]
    Qpsk100G,
    #[serde(rename = "QPSK_200G")]
    Qpsk200G,
    #[serde(rename = "QAM16_200G")]
    Qam16_200G,
}

impl Payload {
    pub const ALL: [Payload; 3] = [Payload::Qpsk100G, Payload::Qpsk200G, Payload::Qam16_200G];

    /// GBd
    pub fn symbol_rate(self) -> f64 {
        match self {
            Payload::Qpsk100G | Payload::Qam16_200G => 35.0,
            Payload::Qpsk200G => 69.0,
        }
    }

    /// GHz
    pub fn slot_width(self) -> f64 {
        slot_width_for_rate(self.symbol_rate()).expect("payload rates have slots")
    }

    pub fn name(self) -> &'static str {
        match self {
            Payload::Qpsk100G => "QPSK_100G",
            Payload::Qpsk200G => "QPSK_200G",
            Payload::Qam16_200G => "QAM16_200G",
        }
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Payload {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Payload::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown payload class {s:?}"))
    }
}

/// Slot width in GHz for a supported symbol rate.
pub fn slot_width_for_rate(symbol_rate: f64) -> Option<f64> {
    if symbol_rate == 35.0 {
        Some(50.0)
    } else if symbol_rate == 69.0 {
        Some(75.0)
    } else {
        None
    }
}

/// One WDM channel on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    /// THz
    pub center_frequency: f64,
    /// GBd
    pub symbol_rate: f64,
    /// GHz
    pub slot_width: f64,
    /// dBm
    pub launch_power: f64,
    pub payload: Payload,
    #[serde(default)]
    pub is_cut: bool,
}

impl Channel {
    /// A channel with symbol rate and slot width implied by `payload`.
    pub fn new(payload: Payload, center_frequency: f64, launch_power: f64) -> Self {
        Self {
            center_frequency,
            symbol_rate: payload.symbol_rate(),
            slot_width: payload.slot_width(),
            launch_power,
            payload,
            is_cut: false,
        }
    }

    pub fn as_cut(mut self) -> Self {
        self.is_cut = true;
        self
    }

    /// Slot interval `[low, high]` in GHz.
    pub fn slot_ghz(&self) -> (f64, f64) {
        let center = self.center_frequency * 1e3;
        (center - self.slot_width / 2.0, center + self.slot_width / 2.0)
    }

    /// Launch power in watts.
    pub fn power_w(&self) -> f64 {
        dbm_to_w(self.launch_power)
    }
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

/// Signed frequency offset `to - from` in GHz, snapped to 1 kHz so grid
/// positions compare exactly.
pub fn offset_ghz(from_thz: f64, to_thz: f64) -> f64 {
    ((to_thz - from_thz) * 1e6).round() / 1e3
}

/// Channels on the grid, sorted by center frequency, with one channel under test.
/// Without an explicit `cut_index`, deserialization points it at the first
/// flagged channel. Channel order is kept as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PlanRepr")]
pub struct ChannelPlan {
    pub channels: Vec<Channel>,
    pub cut_index: usize,
}

#[derive(Deserialize)]
struct PlanRepr {
    channels: Vec<Channel>,
    cut_index: Option<usize>,
}

impl From<PlanRepr> for ChannelPlan {
    fn from(r: PlanRepr) -> Self {
        let cut_index = r
            .cut_index
            .unwrap_or_else(|| r.channels.iter().position(|c| c.is_cut).unwrap_or(0));
        Self {
            channels: r.channels,
            cut_index,
        }
    }
}

/// Invariant a plan can break.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanRule {
    CutCount,
    CutIndex,
    Unsorted,
    SlotOverlap,
    OutsideBand,
    RateSlotMismatch,
    PayloadRateMismatch,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Offending channel, when the rule is about one channel.
    pub channel: Option<usize>,
    pub rule: PlanRule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.channel {
            Some(i) => write!(f, "channel {i}: {:?}: {}", self.rule, self.message),
            None => write!(f, "plan: {:?}: {}", self.rule, self.message),
        }
    }
}

fn cmp_freq(a: &Channel, b: &Channel) -> Ordering {
    a.center_frequency.total_cmp(&b.center_frequency)
}

impl ChannelPlan {
    /// Sorts `channels` by frequency and points `cut_index` at the first
    /// flagged channel (0 when none is flagged). Does not validate.
    pub fn new(channels: Vec<Channel>) -> Self {
        let mut plan = Self {
            channels,
            cut_index: 0,
        };
        plan.canonicalize();
        plan
    }

    /// Stable sort by frequency, then re-derive `cut_index` from the flags.
    pub fn canonicalize(&mut self) {
        self.channels.sort_by(cmp_freq);
        self.cut_index = self.channels.iter().position(|c| c.is_cut).unwrap_or(0);
    }

    pub fn canonical(&self) -> Self {
        let mut p = self.clone();
        p.canonicalize();
        p
    }

    pub fn cut(&self) -> &Channel {
        &self.channels[self.cut_index]
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Occupied spectrum over the C-band width.
    pub fn occupancy(&self) -> f64 {
        self.channels.iter().map(|c| c.slot_width).sum::<f64>() / C_BAND_WIDTH_GHZ
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_plan(self)
    }
}

/// Every invariant violation of `plan`; empty means the plan is valid.
pub fn validate_plan(plan: &ChannelPlan) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |channel: Option<usize>, rule: PlanRule, message: String| {
        out.push(Violation {
            channel,
            rule,
            message,
        })
    };

    let cut_count = plan.channels.iter().filter(|c| c.is_cut).count();
    if cut_count != 1 {
        push(
            None,
            PlanRule::CutCount,
            format!("expected exactly one CUT, found {cut_count}"),
        );
    }
    match plan.channels.get(plan.cut_index) {
        Some(c) if c.is_cut => {}
        Some(_) => push(
            Some(plan.cut_index),
            PlanRule::CutIndex,
            "cut_index does not point at the flagged channel".into(),
        ),
        None => push(
            None,
            PlanRule::CutIndex,
            format!(
                "cut_index {} out of range for {} channels",
                plan.cut_index,
                plan.channels.len()
            ),
        ),
    }

    for (i, c) in plan.channels.iter().enumerate() {
        let finite = [c.center_frequency, c.symbol_rate, c.slot_width, c.launch_power]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            push(Some(i), PlanRule::NonFinite, "non-finite field".into());
            continue;
        }
        match slot_width_for_rate(c.symbol_rate) {
            Some(w) if w == c.slot_width => {}
            Some(w) => push(
                Some(i),
                PlanRule::RateSlotMismatch,
                format!(
                    "{} GBd requires a {w} GHz slot, got {}",
                    c.symbol_rate, c.slot_width
                ),
            ),
            None => push(
                Some(i),
                PlanRule::RateSlotMismatch,
                format!("unsupported symbol rate {} GBd", c.symbol_rate),
            ),
        }
        if c.payload.symbol_rate() != c.symbol_rate {
            push(
                Some(i),
                PlanRule::PayloadRateMismatch,
                format!(
                    "{} runs at {} GBd, channel says {}",
                    c.payload,
                    c.payload.symbol_rate(),
                    c.symbol_rate
                ),
            );
        }
        let (lo, hi) = c.slot_ghz();
        if lo < C_BAND_START_THZ * 1e3 - FREQ_TOL_GHZ || hi > C_BAND_END_THZ * 1e3 + FREQ_TOL_GHZ
        {
            push(
                Some(i),
                PlanRule::OutsideBand,
                format!(
                    "slot [{lo}, {hi}] GHz leaves the C-band [{C_BAND_START_THZ}, {C_BAND_END_THZ}] THz"
                ),
            );
        }
    }

    for (i, pair) in plan.channels.windows(2).enumerate() {
        if cmp_freq(&pair[0], &pair[1]) == Ordering::Greater {
            push(
                Some(i + 1),
                PlanRule::Unsorted,
                "channels not sorted by center frequency".into(),
            );
        }
    }

    // Pairwise so unsorted input still reports every overlap.
    for i in 0..plan.channels.len() {
        for j in (i + 1)..plan.channels.len() {
            let (a_lo, a_hi) = plan.channels[i].slot_ghz();
            let (b_lo, b_hi) = plan.channels[j].slot_ghz();
            let overlap = a_hi.min(b_hi) - a_lo.max(b_lo);
            if overlap > FREQ_TOL_GHZ {
                push(
                    Some(j),
                    PlanRule::SlotOverlap,
                    format!("slot overlaps channel {i} by {overlap:.3} GHz"),
                );
            }
        }
    }
    out
}

/// Closest channels on each side of the CUT, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbors<'a> {
    pub left: Vec<&'a Channel>,
    pub right: Vec<&'a Channel>,
}

impl<'a> Neighbors<'a> {
    /// Slot layout `[k-th left, .., 1st left, 1st right, .., k-th right]`,
    /// `None` where a side runs out of channels.
    pub fn layout(&self, k: usize) -> Vec<Option<&'a Channel>> {
        let mut out: Vec<Option<&'a Channel>> =
            (0..k).rev().map(|i| self.left.get(i).copied()).collect();
        out.extend((0..k).map(|i| self.right.get(i).copied()));
        out
    }
}

/// Up to `k` neighbors per side of the plan's CUT, ordered by distance with
/// ties going to the lower frequency.
pub fn neighbor_channels(plan: &ChannelPlan, k: usize) -> Neighbors<'_> {
    let cut = plan.cut();
    let f_cut = cut.center_frequency;
    let mut others: Vec<(f64, &Channel)> = plan
        .channels
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != plan.cut_index)
        .map(|(_, c)| (offset_ghz(f_cut, c.center_frequency), c))
        .collect();
    others.sort_by(|a, b| {
        a.0.abs()
            .total_cmp(&b.0.abs())
            .then_with(|| a.1.center_frequency.total_cmp(&b.1.center_frequency))
    });
    let mut left = Vec::with_capacity(k);
    let mut right = Vec::with_capacity(k);
    for (d, c) in others {
        let side = if d < 0.0 { &mut left } else { &mut right };
        if side.len() < k {
            side.push(c);
        }
    }
    Neighbors { left, right }
}

/// One link together with one channel plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub link: Link,
    pub plan: ChannelPlan,
    pub seed: u64,
}

/// A scenario with its oracle labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub scenario: Scenario,
    /// 1/W^2
    pub eta: f64,
    /// W
    pub sigma2: f64,
    /// dB
    pub snr_db: f64,
}

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Reads one JSON value per non-blank line. Line numbers in errors are 1-based.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(
    reader: impl std::io::BufRead,
) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value =
            serde_json::from_str(&line).map_err(|source| JsonlError::Parse { line: i + 1, source })?;
        out.push(value);
    }
    Ok(out)
}

/// Writes one compact JSON object per line.
pub fn write_jsonl<'a, T: Serialize + 'a>(
    mut writer: impl std::io::Write,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<(), JsonlError> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(chs: Vec<Channel>) -> ChannelPlan {
        ChannelPlan::new(chs)
    }

    fn rules(p: &ChannelPlan) -> Vec<PlanRule> {
        validate_plan(p).into_iter().map(|v| v.rule).collect()
    }

    #[test]
    fn touching_50ghz_slots_do_not_overlap() {
        let p = plan(vec![
            Channel::new(Payload::Qpsk100G, 193.95, 0.0).as_cut(),
            Channel::new(Payload::Qpsk100G, 194.00, 0.0),
        ]);
        assert!(validate_plan(&p).is_empty(), "{:?}", validate_plan(&p));
    }

    #[test]
    fn wide_channels_50ghz_apart_overlap() {
        let p = plan(vec![
            Channel::new(Payload::Qpsk200G, 193.95, 0.0).as_cut(),
            Channel::new(Payload::Qpsk200G, 194.00, 0.0),
        ]);
        let v = validate_plan(&p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, PlanRule::SlotOverlap);
        assert_eq!(v[0].channel, Some(1));
    }

    #[test]
    fn cut_count_is_checked() {
        let none = plan(vec![
            Channel::new(Payload::Qpsk100G, 193.0, 0.0),
            Channel::new(Payload::Qpsk100G, 193.1, 0.0),
        ]);
        assert!(rules(&none).contains(&PlanRule::CutCount));
        let two = plan(vec![
            Channel::new(Payload::Qpsk100G, 193.0, 0.0).as_cut(),
            Channel::new(Payload::Qpsk100G, 193.1, 0.0).as_cut(),
        ]);
        assert!(rules(&two).contains(&PlanRule::CutCount));
    }

    #[test]
    fn band_edges_and_unsupported_rates() {
        let mut c = Channel::new(Payload::Qpsk100G, 191.31, 0.0).as_cut();
        assert_eq!(rules(&plan(vec![c])), vec![PlanRule::OutsideBand]);
        c.center_frequency = 191.325;
        assert!(rules(&plan(vec![c])).is_empty());
        c.symbol_rate = 40.0;
        let r = rules(&plan(vec![c]));
        assert!(r.contains(&PlanRule::RateSlotMismatch));
        assert!(r.contains(&PlanRule::PayloadRateMismatch));
    }

    #[test]
    fn unsorted_input_is_flagged_until_canonicalized() {
        let mut p = ChannelPlan {
            channels: vec![
                Channel::new(Payload::Qpsk100G, 194.0, 0.0),
                Channel::new(Payload::Qpsk100G, 193.0, 0.0).as_cut(),
            ],
            cut_index: 1,
        };
        assert_eq!(rules(&p), vec![PlanRule::Unsorted]);
        p.canonicalize();
        assert_eq!(p.cut_index, 0);
        assert!(rules(&p).is_empty());
    }

    #[test]
    fn lone_cut_has_no_neighbors() {
        let p = plan(vec![Channel::new(Payload::Qpsk100G, 193.7, 0.0).as_cut()]);
        let n = neighbor_channels(&p, 2);
        assert_eq!(n.layout(2), vec![None, None, None, None]);
    }

    #[test]
    fn neighbor_layout_order() {
        let f = 193.7;
        let chs: Vec<Channel> = [-0.1, 0.05, 0.0, 0.1, -0.05]
            .iter()
            .map(|d| {
                let c = Channel::new(Payload::Qpsk100G, f + d, 0.0);
                if *d == 0.0 {
                    c.as_cut()
                } else {
                    c
                }
            })
            .collect();
        let p = plan(chs);
        let got: Vec<f64> = neighbor_channels(&p, 2)
            .layout(2)
            .into_iter()
            .map(|c| offset_ghz(f, c.unwrap().center_frequency))
            .collect();
        assert_eq!(got, vec![-100.0, -50.0, 50.0, 100.0]);
    }

    #[test]
    fn missing_right_side() {
        let p = plan(vec![
            Channel::new(Payload::Qpsk100G, 193.6, 0.0),
            Channel::new(Payload::Qpsk100G, 193.65, 0.0),
            Channel::new(Payload::Qpsk100G, 193.7, 0.0).as_cut(),
        ]);
        let layout = neighbor_channels(&p, 2).layout(2);
        assert!(layout[0].is_some() && layout[1].is_some());
        assert!(layout[2].is_none() && layout[3].is_none());
    }

    #[test]
    fn link_rejects_empty_and_bad_spans() {
        assert_eq!(Link::new(vec![]), Err(LinkError::Empty));
        assert!(matches!(
            Link::new(vec![Span::ssmf(80.0, 0.2), Span::ssmf(-1.0, 0.2)]),
            Err(LinkError::InvalidSpan { index: 1, .. })
        ));
        let mut s = Span::ssmf(80.0, 0.2);
        s.dispersion = 0.0;
        assert!(Link::new(vec![s]).is_err());
    }

    #[test]
    fn out_of_range_spans_warn_but_load() {
        let link = Link::new(vec![Span::ssmf(150.0, 0.3)]).unwrap();
        assert_eq!(link.range_warnings().len(), 2);
        assert_eq!(link.total_length(), 150.0);
    }

    #[test]
    fn plan_json_without_cut_index_uses_flag() {
        let plan: ChannelPlan = serde_json::from_str(
            r#"{"channels":[
                {"center_frequency":193.4,"symbol_rate":35.0,"slot_width":50.0,"launch_power":0.0,"payload":"QPSK_100G"},
                {"center_frequency":193.45,"symbol_rate":35.0,"slot_width":50.0,"launch_power":0.0,"payload":"QPSK_100G","is_cut":true}
            ]}"#,
        )
        .unwrap();
        assert_eq!(plan.cut_index, 1);
        assert!(plan.validate().is_empty());
        let back: ChannelPlan = serde_json::from_str(&serde_json::to_string(&plan).unwrap()).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn link_json_validates_on_load() {
        let ok: Link =
            serde_json::from_str(r#"{"spans":[{"length":80,"alpha":0.2}]}"#).unwrap();
        assert_eq!(ok.spans()[0].gamma, SSMF_GAMMA);
        assert!(serde_json::from_str::<Link>(r#"{"spans":[]}"#).is_err());
    }

    #[test]
    fn payload_names_round_trip() {
        for p in Payload::ALL {
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.name()));
            assert_eq!(p.name().parse::<Payload>().unwrap(), p);
        }
    }
}
