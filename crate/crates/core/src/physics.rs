//! Gaussian-noise (GN) model physics: nonlinear interference coefficient,
//! amplifier noise, SNR combination and fixed implementation penalties.
//!
//! Everything in here is a pure function of its inputs. Internally all
//! quantities are SI (W, Hz, m, s); the public surface uses the link model
//! units.

use std::f64::consts::PI;

use thiserror::Error;

use crate::linkmodel::{dbm_to_w, offset_ghz, w_to_dbm, Channel, ChannelPlan, Link, Span};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reference wavelength for converting D to beta2, nm.
pub const LAMBDA_REF_NM: f64 = 1550.0;
/// EDFA noise figure used when none is configured, dB.
pub const DEFAULT_NF_DB: f64 = 5.0;
/// In-line ROADM filtering penalty for 69 GBd channels, dB.
pub const ROADM_FILTER_PENALTY_DB: f64 = 2.0;
/// Penalty for 69 GBd channels packed on a 75 GHz grid, dB.
pub const WIDE_OVERLAP_PENALTY_DB: f64 = 0.2;
/// Smallest accepted quadrature order per axis.
pub const MIN_QUADRATURE_POINTS: usize = 64;

const WIDE_RATE_GBD: f64 = 69.0;
const WIDE_OVERLAP_WINDOW_GHZ: f64 = 75.0;

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    #[error("no noise: sigma2 and eta are both zero, SNR is unbounded")]
    NoNoise,
    #[error("{name} must be {requirement}, got {value}")]
    BadInput {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("quadrature needs at least {MIN_QUADRATURE_POINTS} points per axis, got {0}")]
    TooFewPoints(usize),
    #[error("channel plan has no channel under test")]
    NoCut,
}

fn positive(name: &'static str, value: f64) -> Result<f64, PhysicsError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(PhysicsError::BadInput {
            name,
            requirement: "positive and finite",
            value,
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, PhysicsError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(PhysicsError::BadInput {
            name,
            requirement: "non-negative and finite",
            value,
        })
    }
}

/// Per-span quantities derived from the fiber parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanDerived {
    /// Power attenuation, 1/km.
    pub a: f64,
    /// Effective length, km.
    pub l_eff: f64,
    /// Asymptotic effective length 1/a, km.
    pub l_eff_a: f64,
    /// |beta2|, ps^2/km.
    pub beta2_abs: f64,
}

impl SpanDerived {
    fn a_si(&self) -> f64 {
        self.a * 1e-3
    }

    fn l_eff_si(&self) -> f64 {
        self.l_eff * 1e3
    }

    fn l_eff_a_si(&self) -> f64 {
        self.l_eff_a * 1e3
    }

    /// |beta2| in s^2/m.
    fn beta2_si(&self) -> f64 {
        self.beta2_abs * 1e-27
    }
}

pub fn span_derived(span: &Span, lambda_ref_nm: f64) -> SpanDerived {
    let a = span.alpha * std::f64::consts::LN_10 / 10.0;
    let l_eff = -(-a * span.length).exp_m1() / a;
    // c in nm/ps
    let c = SPEED_OF_LIGHT * 1e-3;
    let beta2_abs = span.dispersion.abs() * lambda_ref_nm * lambda_ref_nm / (2.0 * PI * c);
    SpanDerived {
        a,
        l_eff,
        l_eff_a: 1.0 / a,
        beta2_abs,
    }
}

/// Self- and cross-channel parts of a closed-form eta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaParts {
    pub sci: f64,
    pub xci: f64,
}

impl EtaParts {
    pub fn total(&self) -> f64 {
        self.sci + self.xci
    }
}

/// Separation used in the XCI log term, Hz. Overlapping spectra fall back to
/// the edge-to-edge touching distance.
fn xci_separation(df: f64, b_cut: f64, b_j: f64) -> f64 {
    if df - b_j / 2.0 <= 0.0 {
        (b_cut + b_j) / 2.0
    } else {
        df
    }
}

/// Closed-form incoherent GN nonlinear coefficient of the CUT, 1/W^2.
pub fn eta_closed_form(link: &Link, plan: &ChannelPlan) -> Result<f64, PhysicsError> {
    eta_closed_form_parts(link, plan).map(|p| p.total())
}

pub fn eta_closed_form_parts(link: &Link, plan: &ChannelPlan) -> Result<EtaParts, PhysicsError> {
    let cut = plan.channels.get(plan.cut_index).ok_or(PhysicsError::NoCut)?;
    let b_cut = cut.symbol_rate * 1e9;
    let p_cut = cut.power_w();

    // Span-independent sum over interferers: (P_j/P_cut)^2 ln(..) / B_j^2.
    let mut xci_weight = 0.0;
    for (j, ch) in plan.channels.iter().enumerate() {
        if j == plan.cut_index {
            continue;
        }
        let b_j = ch.symbol_rate * 1e9;
        let df = offset_ghz(cut.center_frequency, ch.center_frequency).abs() * 1e9;
        let df = xci_separation(df, b_cut, b_j);
        let ratio = ch.power_w() / p_cut;
        xci_weight += ratio * ratio * ((df + b_j / 2.0) / (df - b_j / 2.0)).ln() / (b_j * b_j);
    }

    let mut parts = EtaParts { sci: 0.0, xci: 0.0 };
    for span in link.spans() {
        let d = span_derived(span, LAMBDA_REF_NM);
        let gamma = span.gamma * 1e-3;
        let l_eff = d.l_eff_si();
        let l_a = d.l_eff_a_si();
        let beta2 = d.beta2_si();
        let pref = gamma * gamma * l_eff * l_eff;
        let sci_arg = PI * PI / 2.0 * beta2 * l_a * b_cut * b_cut;
        parts.sci += 8.0 / 27.0 * pref * sci_arg.asinh() / (PI * beta2 * l_a * b_cut * b_cut);
        parts.xci += 16.0 / 27.0 * pref * xci_weight / (2.0 * PI * beta2 * l_a);
    }
    Ok(parts)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Like [`integrate`](Self::integrate) but splits the interval at each of
    /// `breaks` lying strictly inside it.
    pub fn integrate_pieces(
        &self,
        lo: f64,
        hi: f64,
        breaks: &[f64],
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let mut cuts: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|b| *b > lo && *b < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut acc = 0.0;
        let mut start = lo;
        for end in cuts.into_iter().chain(std::iter::once(hi)) {
            acc += self.integrate(start, end, &mut f);
            start = end;
        }
        acc
    }
}

/// P_n(x) and P_n'(x).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Rectangular PSD band relative to the CUT center, Hz and W/Hz.
#[derive(Debug, Clone, Copy)]
struct Band {
    lo: f64,
    hi: f64,
    psd: f64,
}

fn bands_around_cut(plan: &ChannelPlan) -> Vec<Band> {
    let cut = plan.cut();
    plan.channels
        .iter()
        .map(|c: &Channel| {
            let center = offset_ghz(cut.center_frequency, c.center_frequency) * 1e9;
            let b = c.symbol_rate * 1e9;
            Band {
                lo: center - b / 2.0,
                hi: center + b / 2.0,
                psd: c.power_w() / b,
            }
        })
        .filter(|b| b.psd > 0.0)
        .collect()
}

/// Numerical GN-model eta from the double integral with Gauss-Legendre
/// quadrature of `quadrature_points` nodes per sub-interval and axis.
pub fn eta_numerical(
    link: &Link,
    plan: &ChannelPlan,
    quadrature_points: usize,
) -> Result<f64, PhysicsError> {
    if quadrature_points < MIN_QUADRATURE_POINTS {
        return Err(PhysicsError::TooFewPoints(quadrature_points));
    }
    let cut = plan.channels.get(plan.cut_index).ok_or(PhysicsError::NoCut)?;
    let p_cut = positive("CUT launch power", cut.power_w())?;
    let b_cut = cut.symbol_rate * 1e9;
    let bands = bands_around_cut(plan);
    let rule = GaussLegendre::new(quadrature_points);

    // Identical spans share one integral; accumulation across spans stays a
    // plain sum in span order.
    let mut cache: Vec<(Span, f64)> = Vec::new();
    let mut eta = 0.0;
    for span in link.spans() {
        let per_span = match cache.iter().find(|(s, _)| s == span) {
            Some((_, v)) => *v,
            None => {
                let d = span_derived(span, LAMBDA_REF_NM);
                let gamma = span.gamma * 1e-3;
                let g_nli = 16.0 / 27.0
                    * gamma
                    * gamma
                    * gn_integral(&bands, &d, span.length * 1e3, &rule);
                let v = g_nli * b_cut / (p_cut * p_cut * p_cut);
                cache.push((*span, v));
                v
            }
        };
        eta += per_span;
    }
    Ok(eta)
}

/// Double integral of G(f1) G(f2) G(f1+f2-f_cut) |mu|^2 for one span, in
/// offset coordinates x = f1 - f_cut, y = f2 - f_cut.
fn gn_integral(bands: &[Band], d: &SpanDerived, length_m: f64, rule: &GaussLegendre) -> f64 {
    let a = d.a_si();
    let beta2 = d.beta2_si();
    let loss = (-a * length_m).exp();
    let mu2 = |x: f64, y: f64| {
        let theta = 4.0 * PI * PI * beta2 * x * y;
        (1.0 - 2.0 * loss * (theta * length_m).cos() + loss * loss) / (a * a + theta * theta)
    };

    // Kinks of the inner integral as a function of x, plus the x = 0 ridge.
    let mut x_breaks = vec![0.0];
    for j in bands {
        for k in bands {
            x_breaks.extend([k.lo - j.lo, k.hi - j.hi, k.lo - j.hi, k.hi - j.lo]);
        }
    }

    let mut total = 0.0;
    for bi in bands {
        total += bi.psd
            * rule.integrate_pieces(bi.lo, bi.hi, &x_breaks, |x| {
                let mut inner = 0.0;
                for bj in bands {
                    for bk in bands {
                        let lo = bj.lo.max(bk.lo - x);
                        let hi = bj.hi.min(bk.hi - x);
                        if hi <= lo {
                            continue;
                        }
                        inner += bj.psd
                            * bk.psd
                            * rule.integrate_pieces(lo, hi, &[0.0], |y| mu2(x, y));
                    }
                }
                inner
            });
    }
    total
}

/// Dual-polarization ASE power in the CUT bandwidth, W, for amplifiers that
/// exactly compensate each span's loss.
pub fn linear_noise(link: &Link, cut: &Channel, nf_db: f64) -> f64 {
    let nu = cut.center_frequency * 1e12;
    let f = 10f64.powf(nf_db / 10.0);
    let b = cut.symbol_rate * 1e9;
    link.spans()
        .iter()
        .map(|s| {
            let gain = 10f64.powf(s.alpha * s.length / 10.0);
            PLANCK * nu * f * (gain - 1.0) * b
        })
        .sum()
}

/// SNR in dB of a channel launched at `p_tx_dbm`, after subtracting
/// `penalties_db`.
pub fn combine_snr(
    p_tx_dbm: f64,
    sigma2: f64,
    eta: f64,
    penalties_db: f64,
) -> Result<f64, PhysicsError> {
    non_negative("sigma2", sigma2)?;
    non_negative("eta", eta)?;
    if !p_tx_dbm.is_finite() {
        return Err(PhysicsError::BadInput {
            name: "launch power",
            requirement: "finite",
            value: p_tx_dbm,
        });
    }
    if sigma2 == 0.0 && eta == 0.0 {
        return Err(PhysicsError::NoNoise);
    }
    let p = dbm_to_w(p_tx_dbm);
    Ok(10.0 * (p / (sigma2 + eta * p * p * p)).log10() - penalties_db)
}

/// Fixed penalties for the plan's CUT, dB.
pub fn penalties_for(plan: &ChannelPlan) -> f64 {
    let cut = plan.cut();
    if cut.symbol_rate != WIDE_RATE_GBD {
        return 0.0;
    }
    let packed = plan.channels.iter().enumerate().any(|(i, c)| {
        i != plan.cut_index
            && c.symbol_rate == WIDE_RATE_GBD
            && offset_ghz(cut.center_frequency, c.center_frequency).abs()
                <= WIDE_OVERLAP_WINDOW_GHZ
    });
    if packed {
        ROADM_FILTER_PENALTY_DB + WIDE_OVERLAP_PENALTY_DB
    } else {
        ROADM_FILTER_PENALTY_DB
    }
}

/// Launch power maximizing `P / (sigma2 + eta P^3)`, dBm.
pub fn optimal_power(sigma2: f64, eta: f64) -> Result<f64, PhysicsError> {
    positive("sigma2", sigma2)?;
    positive("eta", eta)?;
    Ok(w_to_dbm((sigma2 / (2.0 * eta)).cbrt()))
}

/// Linear noise, eta, penalty and resulting SNR for one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    pub sigma2: f64,
    pub eta: f64,
    pub penalties_db: f64,
}

impl NoiseBudget {
    pub fn oracle(link: &Link, plan: &ChannelPlan, nf_db: f64) -> Result<Self, PhysicsError> {
        Ok(Self {
            sigma2: linear_noise(link, plan.cut(), nf_db),
            eta: eta_closed_form(link, plan)?,
            penalties_db: penalties_for(plan),
        })
    }

    pub fn snr_db(&self, p_tx_dbm: f64) -> Result<f64, PhysicsError> {
        combine_snr(p_tx_dbm, self.sigma2, self.eta, self.penalties_db)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkmodel::Payload;
    use approx::assert_relative_eq;

    fn span80() -> Span {
        Span::ssmf(80.0, 0.2)
    }

    fn lone(payload: Payload) -> ChannelPlan {
        ChannelPlan::new(vec![Channel::new(payload, 193.5, 0.0).as_cut()])
    }

    fn comb_with(cut_dbm: f64, neighbor_dbm: f64) -> ChannelPlan {
        ChannelPlan::new(
            (-2..=2)
                .map(|k| {
                    let f = 193.5 + 0.05 * k as f64;
                    if k == 0 {
                        Channel::new(Payload::Qpsk100G, f, cut_dbm).as_cut()
                    } else {
                        Channel::new(Payload::Qpsk100G, f, neighbor_dbm)
                    }
                })
                .collect(),
        )
    }

    fn comb(power_dbm: f64) -> ChannelPlan {
        comb_with(power_dbm, power_dbm)
    }

    fn db(x: f64) -> f64 {
        10.0 * x.log10()
    }

    #[test]
    fn span_derived_80km() {
        // a = 0.2 ln(10)/10; L_eff = (1 - exp(-80a))/a; 1/a
        let d = span_derived(&span80(), LAMBDA_REF_NM);
        assert_relative_eq!(d.a, 0.046_051_701_859_880_91, max_relative = 1e-12);
        assert_relative_eq!(d.l_eff, 21.169_274_886_976_46, max_relative = 1e-12);
        assert_relative_eq!(d.l_eff_a, 21.714_724_095_162_59, max_relative = 1e-12);
        // 16.7 * 1550^2 / (2 pi * 299792.458)
        assert_relative_eq!(d.beta2_abs, 21.299_984_931_566_4, max_relative = 1e-12);
        assert!(d.l_eff <= 80.0 && d.l_eff <= d.l_eff_a);
    }

    #[test]
    fn effective_length_tends_to_length_without_loss() {
        let d = span_derived(&Span::ssmf(80.0, 1e-9), LAMBDA_REF_NM);
        assert_relative_eq!(d.l_eff, 80.0, max_relative = 1e-6);
    }

    #[test]
    fn eta_is_additive_over_identical_spans() {
        let plan = comb(0.0);
        let one = eta_closed_form(&Link::homogeneous(1, span80()).unwrap(), &plan).unwrap();
        for n in [2, 7, 30] {
            let many = eta_closed_form(&Link::homogeneous(n, span80()).unwrap(), &plan).unwrap();
            assert_relative_eq!(many, n as f64 * one, max_relative = 1e-13);
        }
    }

    #[test]
    fn eta_ignores_common_power_scaling() {
        let link = Link::homogeneous(3, span80()).unwrap();
        let base = eta_closed_form(&link, &comb(0.0)).unwrap();
        let scaled = eta_closed_form(&link, &comb(-3.7)).unwrap();
        assert_relative_eq!(base, scaled, max_relative = 1e-12);
    }

    #[test]
    fn single_channel_is_sci_only() {
        let link = Link::homogeneous(1, span80()).unwrap();
        let parts = eta_closed_form_parts(&link, &lone(Payload::Qpsk100G)).unwrap();
        assert_eq!(parts.xci, 0.0);
        assert!(parts.sci > 0.0);
    }

    #[test]
    fn xci_grows_with_power_and_shrinks_with_distance() {
        let link = Link::homogeneous(1, span80()).unwrap();
        let pair = |offset: f64, p: f64| {
            let plan = ChannelPlan::new(vec![
                Channel::new(Payload::Qpsk100G, 193.5, 0.0).as_cut(),
                Channel::new(Payload::Qpsk100G, 193.5 + offset, p),
            ]);
            eta_closed_form(&link, &plan).unwrap()
        };
        assert!(pair(0.05, 1.0) > pair(0.05, 0.0));
        assert!(pair(0.05, 0.0) > pair(0.1, 0.0));
        assert!(pair(0.1, 0.0) > pair(1.0, 0.0));
    }

    #[test]
    fn overlapping_interferer_stays_finite() {
        let link = Link::homogeneous(1, span80()).unwrap();
        let plan = ChannelPlan::new(vec![
            Channel::new(Payload::Qpsk200G, 193.5, 0.0).as_cut(),
            Channel::new(Payload::Qpsk200G, 193.51, 0.0),
        ]);
        let eta = eta_closed_form(&link, &plan).unwrap();
        assert!(eta.is_finite() && eta > 0.0);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        // degree 15 is the exactness limit for 8 nodes
        let got = rule.integrate(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4) + 1.0);
        let exact = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert_relative_eq!(got, exact, max_relative = 1e-13);
        let w: f64 = GaussLegendre::new(64).weights.iter().sum();
        assert_relative_eq!(w, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn numerical_rejects_coarse_grids() {
        let link = Link::homogeneous(1, span80()).unwrap();
        assert_eq!(
            eta_numerical(&link, &lone(Payload::Qpsk100G), 32),
            Err(PhysicsError::TooFewPoints(32))
        );
    }

    #[test]
    fn numerical_converges_on_canonical_case() {
        let link = Link::homogeneous(1, span80()).unwrap();
        let plan = lone(Payload::Qpsk100G);
        let coarse = eta_numerical(&link, &plan, 64).unwrap();
        let fine = eta_numerical(&link, &plan, 128).unwrap();
        assert!((db(coarse) - db(fine)).abs() < 0.05);
    }

    #[test]
    fn numerical_matches_closed_form_single_channel() {
        let link = Link::homogeneous(1, span80()).unwrap();
        let plan = lone(Payload::Qpsk100G);
        let closed = eta_closed_form(&link, &plan).unwrap();
        let numeric = eta_numerical(&link, &plan, 64).unwrap();
        assert!((db(closed) - db(numeric)).abs() < 1.0, "{closed} vs {numeric}");
    }

    #[test]
    fn numerical_with_dark_neighbors_is_sci_only() {
        let link = Link::homogeneous(1, span80()).unwrap();
        let sci = eta_numerical(&link, &lone(Payload::Qpsk100G), 64).unwrap();
        let dark = eta_numerical(&link, &comb_with(0.0, f64::NEG_INFINITY), 64).unwrap();
        assert_relative_eq!(sci, dark, max_relative = 1e-12);
    }

    #[test]
    fn numerical_is_additive_over_spans() {
        let plan = lone(Payload::Qpsk100G);
        let one = eta_numerical(&Link::homogeneous(1, span80()).unwrap(), &plan, 64).unwrap();
        let three = eta_numerical(&Link::homogeneous(3, span80()).unwrap(), &plan, 64).unwrap();
        assert_relative_eq!(three / one, 3.0, max_relative = 1e-14);
    }

    #[test]
    fn linear_noise_hand_value() {
        // h * 193.5e12 * 10^0.5 * (10^1.6 - 1) * 35e9
        let link = Link::homogeneous(1, span80()).unwrap();
        let cut = Channel::new(Payload::Qpsk100G, 193.5, 0.0);
        let s2 = linear_noise(&link, &cut, 5.0);
        assert_relative_eq!(s2, 5.507_527_950_395_193e-7, max_relative = 1e-12);
        assert_relative_eq!(w_to_dbm(s2), -32.59, epsilon = 0.01);
        let ten = linear_noise(&Link::homogeneous(10, span80()).unwrap(), &cut, 5.0);
        assert_relative_eq!(ten, 10.0 * s2, max_relative = 1e-13);
        let tiny = linear_noise(&Link::new(vec![Span::ssmf(1e-9, 0.2)]).unwrap(), &cut, 5.0);
        assert!(tiny < 1e-16);
    }

    #[test]
    fn combine_snr_examples() {
        assert_relative_eq!(combine_snr(0.0, 1e-5, 0.0, 0.0).unwrap(), 20.0, epsilon = 1e-12);
        assert_relative_eq!(combine_snr(0.0, 5e-5, 5e4, 0.0).unwrap(), 10.0, epsilon = 1e-12);
        let base = combine_snr(1.5, 3e-5, 1e3, 0.0).unwrap();
        let pen = combine_snr(1.5, 3e-5, 1e3, 2.2).unwrap();
        assert_relative_eq!(base - pen, 2.2, epsilon = 1e-12);
        assert_eq!(combine_snr(0.0, 0.0, 0.0, 0.0), Err(PhysicsError::NoNoise));
        assert!(combine_snr(0.0, -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn combine_snr_decreases_in_noise() {
        let a = combine_snr(0.0, 1e-5, 1e3, 0.0).unwrap();
        assert!(combine_snr(0.0, 2e-5, 1e3, 0.0).unwrap() < a);
        assert!(combine_snr(0.0, 1e-5, 2e3, 0.0).unwrap() < a);
    }

    #[test]
    fn penalty_rules() {
        assert_eq!(penalties_for(&lone(Payload::Qpsk100G)), 0.0);
        assert_eq!(penalties_for(&lone(Payload::Qam16_200G)), 0.0);
        assert_eq!(penalties_for(&lone(Payload::Qpsk200G)), 2.0);
        let packed = ChannelPlan::new(vec![
            Channel::new(Payload::Qpsk200G, 193.5, 0.0).as_cut(),
            Channel::new(Payload::Qpsk200G, 193.575, 0.0),
        ]);
        assert_relative_eq!(penalties_for(&packed), 2.2, epsilon = 1e-12);
        let spaced = ChannelPlan::new(vec![
            Channel::new(Payload::Qpsk200G, 193.5, 0.0).as_cut(),
            Channel::new(Payload::Qpsk200G, 193.6, 0.0),
            Channel::new(Payload::Qpsk100G, 193.4375, 0.0),
        ]);
        assert_eq!(penalties_for(&spaced), 2.0);
    }

    #[test]
    fn optimal_power_examples() {
        assert_relative_eq!(optimal_power(5e-5, 2.5e4).unwrap(), 0.0, epsilon = 1e-12);
        let shifted = optimal_power(8.0 * 5e-5, 2.5e4).unwrap();
        assert_relative_eq!(shifted, 10.0 * 2f64.log10(), epsilon = 1e-12);
        assert!(optimal_power(0.0, 1.0).is_err());
        assert!(optimal_power(1.0, -1.0).is_err());
    }

    #[test]
    fn optimal_power_beats_grid_scan() {
        let (s2, eta) = (3.3e-5, 1.7e3);
        let p_opt = optimal_power(s2, eta).unwrap();
        let best = combine_snr(p_opt, s2, eta, 0.0).unwrap();
        for k in -300..=300 {
            let p = p_opt + k as f64 * 0.01;
            assert!(combine_snr(p, s2, eta, 0.0).unwrap() <= best + 1e-12);
        }
    }
}
