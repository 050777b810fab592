//! Symmetric dispersive-optics QKD post-processing.
//!
//! Every user owns a normal and an anomalous dispersion path. Coincidences
//! across opposite paths keep their sharp timing (the two dispersion shifts
//! cancel nonlocally) and feed the key; same-path coincidences are smeared
//! over the full dispersion envelope and serve as the security monitor.
//!
//! Time is cut into frames of `d` bins. Users announce which frames hold a
//! detection and on which path, never the timestamp; a frame announced once
//! by each side on opposite paths yields one `log2(d)`-bit symbol per side
//! after guard-band sifting.
//! The secret fraction uses the d-dimensional bound
//! `β·I(A;B) − h₂(Q) − Q·log₂(d−1)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{link_offset, match_coincidences, AnalysisError};
use crate::photonics::{nm_per_ghz, DispersionPath, Picos, PS_PER_S};
use crate::plan::{ItuChannel, LinkKind, NetworkPlan, ResourceId, UserId};
use crate::sim::{Scenario, ScenarioOutput};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QkdError {
    #[error("invalid frame geometry: {0}")]
    Frame(String),
    #[error("no sifted symbols")]
    Empty,
    #[error("reconciliation efficiency must be in (0, 1], got {0}")]
    Beta(f64),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrameConfig {
    pub frame_length_ps: Picos,
    /// Bins per frame, `d`; a power of two.
    pub bins: u32,
    /// Dead zone on each side of every bin boundary, ps.
    pub guard_ps: Picos,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { frame_length_ps: 1024, bins: 8, guard_ps: 24 }
    }
}

impl FrameConfig {
    pub fn bin_width_ps(&self) -> Picos {
        self.frame_length_ps / self.bins as Picos
    }

    pub fn validate(&self) -> Result<(), QkdError> {
        if self.bins < 2 || !self.bins.is_power_of_two() {
            return Err(QkdError::Frame(format!("bins = {} must be a power of two >= 2", self.bins)));
        }
        if self.frame_length_ps <= 0 || self.frame_length_ps % self.bins as Picos != 0 {
            return Err(QkdError::Frame(format!(
                "frame length {} ps is not a positive multiple of {} bins",
                self.frame_length_ps, self.bins
            )));
        }
        if self.guard_ps < 0 || 2 * self.guard_ps >= self.bin_width_ps() {
            return Err(QkdError::Frame(format!(
                "guard band {} ps must be in [0, bin width / 2 = {} ps)",
                self.guard_ps,
                self.bin_width_ps() as f64 / 2.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BinCode {
    pub frame: i64,
    pub symbol: u32,
    /// Within `guard_ps` of a bin boundary (frame edges included).
    pub guarded: bool,
}

pub fn bin_encode(tag_ps: Picos, frames: &FrameConfig) -> BinCode {
    let frame = tag_ps.div_euclid(frames.frame_length_ps);
    let within = tag_ps.rem_euclid(frames.frame_length_ps);
    let width = frames.bin_width_ps();
    let symbol = (within / width) as u32;
    let pos = within % width;
    let guarded = pos < frames.guard_ps || width - pos < frames.guard_ps;
    BinCode { frame, symbol, guarded }
}

/// One coincidence with the dispersion path each photon took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LabeledCoincidence {
    pub t_a: Picos,
    pub t_b: Picos,
    pub path_a: DispersionPath,
    pub path_b: DispersionPath,
}

/// Splits coincidences into the key set (opposite paths) and the monitor
/// set (same path).
pub fn basis_sift(coincidences: &[LabeledCoincidence]) -> (Vec<LabeledCoincidence>, Vec<LabeledCoincidence>) {
    coincidences.iter().partition(|c| c.path_a != c.path_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiscardTally {
    pub basis_mismatch: u64,
    pub guard_band: u64,
    pub multi_event: u64,
    /// The two sides fell in different frames.
    pub frame_mismatch: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SiftedSymbol {
    pub frame: i64,
    pub a: u32,
    pub b: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiftedKeyMaterial {
    pub bins: u32,
    /// Strictly increasing frame index.
    pub symbols: Vec<SiftedSymbol>,
    pub discarded: DiscardTally,
}

impl SiftedKeyMaterial {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn from_pairs(bins: u32, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let symbols = pairs.into_iter().enumerate().map(|(i, (a, b))| SiftedSymbol { frame: i as i64, a, b }).collect();
        Self { bins, symbols, discarded: DiscardTally::default() }
    }
}

/// Bin sifting of key-set coincidences. `b`'s tags are shifted back by
/// `offset_ps` onto `a`'s timebase. Pairs with either side in a guard band
/// are dropped, then every frame holding more than one remaining event on
/// either side is dropped entirely.
pub fn sift_frames(key: &[LabeledCoincidence], offset_ps: Picos, frames: &FrameConfig) -> Result<SiftedKeyMaterial, QkdError> {
    frames.validate()?;
    let mut discarded = DiscardTally::default();
    let mut kept = Vec::with_capacity(key.len());
    for c in key {
        let a = bin_encode(c.t_a, frames);
        let b = bin_encode(c.t_b - offset_ps, frames);
        if a.guarded || b.guarded {
            discarded.guard_band += 1;
        } else {
            kept.push((a, b));
        }
    }
    let mut per_frame_a: HashMap<i64, u32> = HashMap::new();
    let mut per_frame_b: HashMap<i64, u32> = HashMap::new();
    for (a, b) in &kept {
        *per_frame_a.entry(a.frame).or_default() += 1;
        *per_frame_b.entry(b.frame).or_default() += 1;
    }
    let mut symbols: Vec<SiftedSymbol> = Vec::with_capacity(kept.len());
    for (a, b) in kept {
        if per_frame_a[&a.frame] > 1 || per_frame_b[&b.frame] > 1 {
            discarded.multi_event += 1;
        } else if a.frame != b.frame {
            discarded.frame_mismatch += 1;
        } else {
            symbols.push(SiftedSymbol { frame: a.frame, a: a.symbol, b: b.symbol });
        }
    }
    symbols.sort_by_key(|s| s.frame);
    Ok(SiftedKeyMaterial { bins: frames.bins, symbols, discarded })
}

pub fn estimate_qber(material: &SiftedKeyMaterial) -> Result<f64, QkdError> {
    if material.is_empty() {
        return Err(QkdError::Empty);
    }
    let errors = material.symbols.iter().filter(|s| s.a != s.b).count();
    Ok(errors as f64 / material.len() as f64)
}

/// Plug-in estimate of `I(A;B)` in bits from the empirical `d×d` joint
/// histogram.
pub fn mutual_information(material: &SiftedKeyMaterial) -> Result<f64, QkdError> {
    if material.is_empty() {
        return Err(QkdError::Empty);
    }
    let d = material.bins as usize;
    let mut joint = vec![0u64; d * d];
    for s in &material.symbols {
        joint[s.a as usize * d + s.b as usize] += 1;
    }
    let n = material.len() as f64;
    let row: Vec<f64> = (0..d).map(|i| joint[i * d..(i + 1) * d].iter().sum::<u64>() as f64).collect();
    let col: Vec<f64> = (0..d).map(|j| (0..d).map(|i| joint[i * d + j]).sum::<u64>() as f64).collect();
    let mut info = 0.0;
    for i in 0..d {
        for j in 0..d {
            let c = joint[i * d + j] as f64;
            if c > 0.0 {
                info += c / n * (c * n / (row[i] * col[j])).log2();
            }
        }
    }
    Ok(info.max(0.0))
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Information leaked to an eavesdropper per symbol at error rate `q`:
/// `h₂(q) + q·log₂(d−1)`.
pub fn leakage_bound(qber: f64, bins: u32) -> f64 {
    binary_entropy(qber) + qber * ((bins - 1) as f64).log2()
}

/// `I(A;B)` of the d-ary symmetric channel with error rate `q`.
pub fn symmetric_channel_information(qber: f64, bins: u32) -> f64 {
    (bins as f64).log2() - leakage_bound(qber, bins)
}

/// `max(0, β·I − h₂(Q) − Q·log₂(d−1))`, never above `log₂ d`.
pub fn secret_fraction(mutual_info: f64, qber: f64, beta: f64, bins: u32) -> f64 {
    (beta * mutual_info - leakage_bound(qber, bins)).clamp(0.0, (bins as f64).log2())
}

/// Smallest QBER at which the symmetric-channel secret fraction is zero.
pub fn zero_crossing_qber(beta: f64, bins: u32) -> f64 {
    let f = |q: f64| beta * symmetric_channel_information(q, bins) - leakage_bound(q, bins);
    let (mut lo, mut hi) = (0.0, (bins - 1) as f64 / bins as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Timing-spread check on the same-path (monitor) coincidences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorSpread {
    pub pairs: usize,
    /// Interquartile range over 1.349 (σ for a Gaussian), ps. `None` when
    /// fewer than two pairs were seen.
    pub spread_ps: Option<f64>,
    pub expected_ps: f64,
    /// Spread exceeds 1.25× expectation.
    pub anomalous: bool,
}

impl MonitorSpread {
    pub fn inconclusive(&self) -> bool {
        self.spread_ps.is_none()
    }
}

/// Interquartile range divided by 1.349, with linearly interpolated
/// quartiles. `None` for fewer than two values.
pub fn robust_spread(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let x = p * (v.len() - 1) as f64;
        let (i, frac) = (x.floor() as usize, x.fract());
        if i + 1 < v.len() {
            v[i] + frac * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    Some((q(0.75) - q(0.25)) / 1.349)
}

/// Full width of the same-path delay envelope for uniform detuning over the
/// channel: `2·D·(λ²/c)·B`.
pub fn monitor_envelope_ps(dispersion_ps_per_nm: f64, channel: ItuChannel, bandwidth_ghz: f64) -> f64 {
    2.0 * dispersion_ps_per_nm * nm_per_ghz(channel) * bandwidth_ghz
}

/// Expected monitor spread: a uniform envelope (IQR = half its width)
/// combined in quadrature with the timing-jitter floor.
pub fn expected_monitor_spread(envelope_ps: f64, jitter_floor_ps: f64) -> f64 {
    let uniform = envelope_ps / 2.0 / 1.349;
    (uniform * uniform + jitter_floor_ps * jitter_floor_ps).sqrt()
}

pub fn monitor_broadening(monitor: &[LabeledCoincidence], offset_ps: Picos, expected_ps: f64) -> MonitorSpread {
    let deltas: Vec<f64> = monitor.iter().map(|c| (c.t_b - c.t_a - offset_ps) as f64).collect();
    let spread_ps = robust_spread(&deltas);
    MonitorSpread {
        pairs: monitor.len(),
        spread_ps,
        expected_ps,
        anomalous: spread_ps.is_some_and(|s| s > 1.25 * expected_ps),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyRateReport {
    pub sifted_rate: f64,
    pub qber: f64,
    pub mutual_information: f64,
    pub secret_fraction: f64,
    pub secure_rate: f64,
    pub monitor_spread_ps: Option<f64>,
}

pub fn secure_key_rate(
    material: &SiftedKeyMaterial,
    sifted_rate: f64,
    beta: f64,
    monitor: Option<&MonitorSpread>,
) -> Result<KeyRateReport, QkdError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(QkdError::Beta(beta));
    }
    let qber = estimate_qber(material)?;
    let mutual_information = mutual_information(material)?;
    let secret_fraction = secret_fraction(mutual_information, qber, beta, material.bins);
    Ok(KeyRateReport {
        sifted_rate,
        qber,
        mutual_information,
        secret_fraction,
        secure_rate: sifted_rate * secret_fraction,
        monitor_spread_ps: monitor.and_then(|m| m.spread_ps),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QkdParams {
    pub frames: FrameConfig,
    pub beta: f64,
    /// Full-width window for monitor coincidences; must cover the
    /// dispersion envelope.
    pub monitor_window_ps: Picos,
}

impl Default for QkdParams {
    fn default() -> Self {
        Self { frames: FrameConfig::default(), beta: 0.9, monitor_window_ps: 4096 }
    }
}

/// Everything computed for one link.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkKeyReport {
    pub user_a: UserId,
    pub user_b: UserId,
    pub kind: LinkKind,
    pub resource: ResourceId,
    pub offset_ps: Picos,
    pub sifted_symbols: usize,
    /// `None` when nothing survived sifting.
    pub report: Option<KeyRateReport>,
    pub discarded: DiscardTally,
    pub monitor: MonitorSpread,
    /// Robust spread of key-basis delays, ps.
    pub matched_spread_ps: Option<f64>,
}

impl LinkKeyReport {
    pub fn secure_rate(&self) -> f64 {
        self.report.map_or(0.0, |r| r.secure_rate)
    }

    pub fn qber(&self) -> Option<f64> {
        self.report.map(|r| r.qber)
    }
}

/// Timing floor of a matched-basis coincidence: two detector jitters and
/// the source correlation width, in quadrature.
pub fn jitter_floor_ps(scenario: &Scenario) -> f64 {
    let det = scenario.detector.jitter_ps;
    let src = scenario.source.correlation_jitter_ps;
    (2.0 * det * det + src * src).sqrt()
}

/// Frame announcement across a link. Each side publishes the frame index
/// and dispersion path of every detection (timestamps stay private); `b`'s
/// frames are taken on `a`'s timebase by removing `offset_ps`. Every frame
/// announced by both sides becomes one coincidence, unless either side
/// announced several detections in it. Returns the coincidences in frame
/// order and the number of shared frames dropped as multi-event.
pub fn frame_coincidences(
    a: [&[Picos]; 2],
    b: [&[Picos]; 2],
    offset_ps: Picos,
    frames: &FrameConfig,
) -> Result<(Vec<LabeledCoincidence>, u64), QkdError> {
    frames.validate()?;
    let announce = |streams: [&[Picos]; 2], shift: Picos| {
        let mut events: Vec<(i64, Picos, DispersionPath)> = DispersionPath::BOTH
            .into_iter()
            .zip(streams)
            .flat_map(|(path, tags)| tags.iter().map(move |&t| ((t - shift).div_euclid(frames.frame_length_ps), t, path)))
            .collect();
        events.sort_unstable();
        events
    };
    let (ea, eb) = (announce(a, 0), announce(b, offset_ps));
    let group = |events: &[(i64, Picos, DispersionPath)], i: usize| {
        events[i..].iter().take_while(|e| e.0 == events[i].0).count()
    };
    let (mut out, mut multi) = (Vec::new(), 0u64);
    let (mut i, mut j) = (0, 0);
    while i < ea.len() && j < eb.len() {
        let (fa, fb) = (ea[i].0, eb[j].0);
        if fa < fb {
            i += group(&ea, i);
        } else if fb < fa {
            j += group(&eb, j);
        } else {
            let (na, nb) = (group(&ea, i), group(&eb, j));
            if na == 1 && nb == 1 {
                out.push(LabeledCoincidence { t_a: ea[i].1, t_b: eb[j].1, path_a: ea[i].2, path_b: eb[j].2 });
            } else {
                multi += 1;
            }
            i += na;
            j += nb;
        }
    }
    Ok((out, multi))
}

/// Same-path coincidences of a link within the monitor window, in `t_a`
/// order. Only monitor events are compared on fine timestamps; they never
/// contribute key.
pub fn monitor_coincidences(
    output: &ScenarioOutput,
    scenario: &Scenario,
    a: UserId,
    b: UserId,
    params: &QkdParams,
) -> Result<Vec<LabeledCoincidence>, QkdError> {
    let offset = link_offset(scenario, a, b);
    let mut all = Vec::new();
    for path in DispersionPath::BOTH {
        let set = match_coincidences(&output.stream(a, path).tags, &output.stream(b, path).tags, params.monitor_window_ps, offset)?;
        all.extend(set.matches.iter().map(|m| LabeledCoincidence { t_a: m.t_a, t_b: m.t_b, path_a: path, path_b: path }));
    }
    all.sort_by_key(|c| (c.t_a, c.t_b));
    Ok(all)
}

/// Full key pipeline for one link: frame announcement, basis sifting, bin
/// sifting, estimation, plus the same-path monitor.
pub fn analyze_link_key(
    output: &ScenarioOutput,
    plan: &NetworkPlan,
    scenario: &Scenario,
    a: UserId,
    b: UserId,
    params: &QkdParams,
) -> Result<LinkKeyReport, QkdError> {
    let link = plan.resource_for_link(a, b).map_err(AnalysisError::from)?;
    let offset = link_offset(scenario, a, b);
    let streams = |u: UserId| DispersionPath::BOTH.map(|p| output.stream(u, p).tags.as_slice());
    let (announced, multi) = frame_coincidences(streams(a), streams(b), offset, &params.frames)?;
    let (key, same_path) = basis_sift(&announced);

    let mut material = sift_frames(&key, offset, &params.frames)?;
    material.discarded.basis_mismatch = same_path.len() as u64;
    material.discarded.multi_event += multi;

    let monitor_set = monitor_coincidences(output, scenario, a, b, params)?;

    let envelope = monitor_envelope_ps(scenario.dispersion_ps_per_nm, link.pair.signal, scenario.source.bandwidth_ghz);
    let monitor = monitor_broadening(&monitor_set, offset, expected_monitor_spread(envelope, jitter_floor_ps(scenario)));
    let key_deltas: Vec<f64> = key.iter().map(|c| (c.t_b - c.t_a - offset) as f64).collect();

    let duration_s = output.duration_ps as f64 / PS_PER_S;
    let sifted_rate = if duration_s > 0.0 { material.len() as f64 / duration_s } else { 0.0 };
    let report = if material.is_empty() {
        None
    } else {
        Some(secure_key_rate(&material, sifted_rate, params.beta, Some(&monitor))?)
    };
    Ok(LinkKeyReport {
        user_a: a,
        user_b: b,
        kind: link.kind,
        resource: link.resource,
        offset_ps: offset,
        sifted_symbols: material.len(),
        report,
        discarded: material.discarded,
        monitor,
        matched_spread_ps: robust_spread(&key_deltas),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_encoding_examples() {
        let f = FrameConfig { guard_ps: 16, ..FrameConfig::default() };
        assert_eq!(bin_encode(0, &f), BinCode { frame: 0, symbol: 0, guarded: true });
        let c = bin_encode(1000, &f);
        assert_eq!((c.frame, c.symbol), (0, 7));
        assert_eq!(bin_encode(1030, &f), BinCode { frame: 1, symbol: 0, guarded: true });
        assert!(!bin_encode(64, &f).guarded);
        assert!(bin_encode(127, &f).guarded);
        assert!(bin_encode(113, &f).guarded);
        assert!(!bin_encode(112, &f).guarded);
        assert!(!bin_encode(16, &f).guarded);
    }

    #[test]
    fn frame_validation() {
        assert!(FrameConfig::default().validate().is_ok());
        assert!(FrameConfig { bins: 6, frame_length_ps: 1020, guard_ps: 0 }.validate().is_err());
        assert!(FrameConfig { bins: 8, frame_length_ps: 1020, guard_ps: 0 }.validate().is_err());
        assert!(FrameConfig { guard_ps: 64, ..FrameConfig::default() }.validate().is_err());
    }

    fn lc(t_a: Picos, t_b: Picos, pa: DispersionPath, pb: DispersionPath) -> LabeledCoincidence {
        LabeledCoincidence { t_a, t_b, path_a: pa, path_b: pb }
    }

    #[test]
    fn frame_announcement_pairs_single_frames() {
        use DispersionPath::*;
        let f = FrameConfig::default();
        let a_normal = [100, 2100, 3100, 5000];
        let a_anomalous = [2200, 9000];
        let b_normal = [10_000 + 3300];
        let b_anomalous = [10_000 + 150, 10_000 + 2050, 10_000 + 5100, 10_000 + 7000];
        let (cs, multi) = frame_coincidences([&a_normal, &a_anomalous], [&b_normal, &b_anomalous], 10_000, &f).unwrap();
        // Frame 2 has two events at a; frame 6 only at b; frame 8 only at a.
        assert_eq!(multi, 1);
        assert_eq!(cs, vec![lc(100, 10_150, Normal, Anomalous), lc(3100, 13_300, Normal, Normal), lc(5000, 15_100, Normal, Anomalous)]);
        let (empty, _) = frame_coincidences([&[], &[]], [&b_normal, &b_anomalous], 0, &f).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn basis_partition() {
        use DispersionPath::*;
        let cs = [lc(0, 0, Normal, Anomalous), lc(1, 1, Normal, Normal), lc(2, 2, Anomalous, Normal), lc(3, 3, Anomalous, Anomalous)];
        let (key, monitor) = basis_sift(&cs);
        assert_eq!(key.len(), 2);
        assert_eq!(monitor.len(), 2);
        assert!(key.iter().all(|c| c.path_a != c.path_b));
    }

    #[test]
    fn sifting_rules() {
        use DispersionPath::*;
        let f = FrameConfig::default();
        // Bin centres of frames 0..3, no jitter.
        let centred: Vec<_> = (0..4).map(|k| lc(k * 1024 + 64 + 128 * k, k * 1024 + 64 + 128 * k, Normal, Anomalous)).collect();
        let m = sift_frames(&centred, 0, &f).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(estimate_qber(&m).unwrap(), 0.0);
        assert_eq!(m.discarded, DiscardTally::default());

        // Straddles the 128 ps boundary.
        let straddle = [lc(120, 135, Normal, Anomalous)];
        let m = sift_frames(&straddle, 0, &f).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.discarded.guard_band, 1);

        // Two events in one frame.
        let double = [lc(64, 64, Normal, Anomalous), lc(320, 320, Anomalous, Normal)];
        let m = sift_frames(&double, 0, &f).unwrap();
        assert_eq!(m.discarded.multi_event, 2);

        // Offset is removed from b.
        let shifted = [lc(64, 5_000_064, Normal, Anomalous)];
        assert_eq!(sift_frames(&shifted, 5_000_000, &f).unwrap().symbols[0], SiftedSymbol { frame: 0, a: 0, b: 0 });
    }

    #[test]
    fn qber_and_information_basics() {
        let same = SiftedKeyMaterial::from_pairs(8, (0..800).map(|i| (i % 8, i % 8)));
        assert_eq!(estimate_qber(&same).unwrap(), 0.0);
        assert!((mutual_information(&same).unwrap() - 3.0).abs() < 1e-12);

        let one_bad = SiftedKeyMaterial::from_pairs(8, (0..100).map(|i| (i % 8, if i == 0 { 1 } else { i % 8 })));
        assert!((estimate_qber(&one_bad).unwrap() - 0.01).abs() < 1e-12);

        let independent = SiftedKeyMaterial::from_pairs(8, (0..64).map(|i| (i / 8, i % 8)));
        assert!(mutual_information(&independent).unwrap().abs() < 1e-12);

        let empty = SiftedKeyMaterial::from_pairs(8, std::iter::empty());
        assert_eq!(estimate_qber(&empty), Err(QkdError::Empty));
        assert_eq!(mutual_information(&empty), Err(QkdError::Empty));
    }

    #[test]
    fn secret_fraction_limits() {
        assert!((secret_fraction(3.0, 0.0, 1.0, 8) - 3.0).abs() < 1e-12);
        assert_eq!(secret_fraction(0.5, 0.4, 0.9, 8), 0.0);
        let q0 = zero_crossing_qber(0.9, 8);
        assert!(q0 > 0.05 && q0 < 0.5, "{q0}");
        assert_eq!(secret_fraction(symmetric_channel_information(q0, 8), q0, 0.9, 8), 0.0);
        assert!(secret_fraction(symmetric_channel_information(q0 * 0.99, 8), q0 * 0.99, 0.9, 8) > 0.0);
    }

    #[test]
    fn key_rate_validates_beta() {
        let m = SiftedKeyMaterial::from_pairs(8, (0..80).map(|i| (i % 8, i % 8)));
        assert!(matches!(secure_key_rate(&m, 10.0, 0.0, None), Err(QkdError::Beta(_))));
        let r = secure_key_rate(&m, 10.0, 1.0, None).unwrap();
        assert!((r.secure_rate - 30.0).abs() < 1e-9);
    }

    #[test]
    fn spread_statistic() {
        assert_eq!(robust_spread(&[1.0]), None);
        let uniform: Vec<f64> = (0..=1000).map(|i| i as f64).collect();
        assert!((robust_spread(&uniform).unwrap() - 500.0 / 1.349).abs() < 1e-9);
        let m = monitor_broadening(&[], 0, 100.0);
        assert!(m.inconclusive() && !m.anomalous);
    }
}
