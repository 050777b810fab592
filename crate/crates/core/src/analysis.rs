//! Coincidence analysis between pairs of tag streams.
//!
//! Both the correlation histogram and the one-to-one matcher are linear
//! sweeps over two sorted streams.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::photonics::Picos;
use crate::plan::{LinkKind, NetworkPlan, PlanError, ResourceId, UserId};
use crate::sim::{Scenario, ScenarioOutput};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("stream {stream} is not sorted at index {index}")]
    Unsorted { stream: &'static str, index: usize },
    #[error("histogram range {range} ps is not a positive multiple of bin width {bin} ps")]
    BadBinning { range: Picos, bin: Picos },
    #[error("coincidence window must be positive, got {0} ps")]
    BadWindow(Picos),
    #[error("peak window {window} ps is narrower than a {bin} ps bin")]
    PeakWindowTooNarrow { window: Picos, bin: Picos },
    #[error("no off-peak bins left outside the peak and its guard region")]
    NoOffPeak,
    #[error(transparent)]
    Plan(#[from] PlanError),
}

fn ensure_sorted(stream: &'static str, tags: &[Picos]) -> Result<(), AnalysisError> {
    match tags.windows(2).position(|w| w[1] < w[0]) {
        Some(i) => Err(AnalysisError::Unsorted { stream, index: i + 1 }),
        None => Ok(()),
    }
}

/// Delay window `[center − range/2, center + range/2)` cut into bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HistogramSpec {
    pub bin_width_ps: Picos,
    pub range_ps: Picos,
    pub center_ps: Picos,
}

impl HistogramSpec {
    pub fn new(bin_width_ps: Picos, range_ps: Picos) -> Self {
        Self { bin_width_ps, range_ps, center_ps: 0 }
    }

    pub fn centered(self, center_ps: Picos) -> Self {
        Self { center_ps, ..self }
    }
}

/// Counts of `t_b − t_a` over all tag pairs falling in the delay window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationHistogram {
    pub bin_width_ps: Picos,
    /// Lower edge of bin 0.
    pub start_ps: Picos,
    pub counts: Vec<u64>,
    pub singles_a: u64,
    pub singles_b: u64,
    pub duration_ps: Picos,
}

impl CorrelationHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Lower edge of bin `i`.
    pub fn bin_start(&self, i: usize) -> Picos {
        self.start_ps + i as Picos * self.bin_width_ps
    }

    /// CSV: `# key=value` metadata lines, then `delay_ps,counts` rows keyed
    /// by the lower bin edge. `delay_offset` is subtracted from every delay.
    pub fn write_csv<W: Write>(&self, meta: &[(&str, String)], delay_offset: Picos, mut out: W) -> std::io::Result<()> {
        for (k, v) in meta {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "# bin_width_ps={}", self.bin_width_ps)?;
        writeln!(out, "# singles_a={}", self.singles_a)?;
        writeln!(out, "# singles_b={}", self.singles_b)?;
        writeln!(out, "# duration_ps={}", self.duration_ps)?;
        writeln!(out, "delay_ps,counts")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{}", self.bin_start(i) - delay_offset, c)?;
        }
        Ok(())
    }
}

/// All-pairs delay histogram by a two-pointer sweep: the first candidate in
/// `b` only ever moves forward as `a` advances.
pub fn cross_correlate(
    a: &[Picos],
    b: &[Picos],
    spec: HistogramSpec,
    duration_ps: Picos,
) -> Result<CorrelationHistogram, AnalysisError> {
    ensure_sorted("a", a)?;
    ensure_sorted("b", b)?;
    let w = spec.bin_width_ps;
    if w <= 0 || spec.range_ps <= 0 || spec.range_ps % w != 0 {
        return Err(AnalysisError::BadBinning { range: spec.range_ps, bin: w });
    }
    let nbins = (spec.range_ps / w) as usize;
    let start = spec.center_ps - spec.range_ps / 2;
    let end = start + spec.range_ps;
    let mut counts = vec![0u64; nbins];
    let mut first = 0usize;
    for &ta in a {
        let lo = ta + start;
        let hi = ta + end;
        while first < b.len() && b[first] < lo {
            first += 1;
        }
        for &tb in &b[first..] {
            if tb >= hi {
                break;
            }
            counts[((tb - lo) / w) as usize] += 1;
        }
    }
    Ok(CorrelationHistogram {
        bin_width_ps: w,
        start_ps: start,
        counts,
        singles_a: a.len() as u64,
        singles_b: b.len() as u64,
        duration_ps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Match {
    pub index_a: usize,
    pub index_b: usize,
    pub t_a: Picos,
    pub t_b: Picos,
}

impl Match {
    pub fn delay(&self, offset_ps: Picos) -> Picos {
        self.t_b - self.t_a - offset_ps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceSet {
    pub offset_ps: Picos,
    pub window_ps: Picos,
    /// Sorted by `t_a`; every tag index appears at most once per side.
    pub matches: Vec<Match>,
}

impl CoincidenceSet {
    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }
}

/// Greedy earliest-first one-to-one matching of `a` and `b` with
/// `|t_b − t_a − offset| ≤ window/2` (window is the full width).
pub fn match_coincidences(a: &[Picos], b: &[Picos], window_ps: Picos, offset_ps: Picos) -> Result<CoincidenceSet, AnalysisError> {
    if window_ps <= 0 {
        return Err(AnalysisError::BadWindow(window_ps));
    }
    ensure_sorted("a", a)?;
    ensure_sorted("b", b)?;
    let mut matches = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        // Compare 2·delay against the full width to stay in integers.
        let twice = 2 * (b[j] - offset_ps - a[i]);
        if twice < -window_ps {
            j += 1;
        } else if twice > window_ps {
            i += 1;
        } else {
            matches.push(Match { index_a: i, index_b: j, t_a: a[i], t_b: b[j] });
            i += 1;
            j += 1;
        }
    }
    Ok(CoincidenceSet { offset_ps, window_ps, matches })
}

/// Coincidence-to-accidental ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Car {
    pub ratio: f64,
    /// No off-peak counts at all: `ratio` is a lower bound computed as if
    /// the whole off-peak region held a single count.
    pub capped: bool,
    pub peak_counts: u64,
    pub accidentals_per_window: f64,
    /// Delay at the centre of the peak window.
    pub peak_delay_ps: f64,
}

/// Peak counts inside `peak_window_ps` over the mean off-peak level scaled
/// to the same width. The peak window is placed where the window-summed
/// counts are largest; bins within three window widths on either side are
/// excluded from the off-peak estimate.
pub fn compute_car(hist: &CorrelationHistogram, peak_window_ps: Picos) -> Result<Car, AnalysisError> {
    let w = hist.bin_width_ps;
    if peak_window_ps < w {
        return Err(AnalysisError::PeakWindowTooNarrow { window: peak_window_ps, bin: w });
    }
    let width = ((peak_window_ps as f64 / w as f64).round() as usize).max(1);
    let n = hist.counts.len();
    if width > n {
        return Err(AnalysisError::NoOffPeak);
    }
    let mut sum: u64 = hist.counts[..width].iter().sum();
    let (mut best, mut best_start) = (sum, 0usize);
    for s in 1..=(n - width) {
        sum = sum + hist.counts[s + width - 1] - hist.counts[s - 1];
        if sum > best {
            best = sum;
            best_start = s;
        }
    }
    let guard = 3 * width;
    let excl_lo = best_start.saturating_sub(guard);
    let excl_hi = (best_start + width + guard).min(n);
    let off_bins = excl_lo + (n - excl_hi);
    if off_bins == 0 {
        return Err(AnalysisError::NoOffPeak);
    }
    let off_counts: u64 = hist.counts[..excl_lo].iter().chain(&hist.counts[excl_hi..]).sum();
    let acc = off_counts as f64 / off_bins as f64 * width as f64;
    let peak_delay_ps = hist.bin_start(best_start) as f64 + (width as Picos * w) as f64 / 2.0;
    let (ratio, capped) = if off_counts > 0 {
        (best as f64 / acc, false)
    } else {
        (best as f64 * off_bins as f64 / width as f64, true)
    };
    Ok(Car { ratio, capped, peak_counts: best, accidentals_per_window: acc, peak_delay_ps })
}

/// Settings shared by every link analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoincidenceParams {
    /// Full-width coincidence window, ps.
    pub window_ps: Picos,
    pub bin_width_ps: Picos,
    pub histogram_range_ps: Picos,
}

impl Default for CoincidenceParams {
    fn default() -> Self {
        Self { window_ps: 128, bin_width_ps: 16, histogram_range_ps: 50_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkCoincidences {
    pub user_a: UserId,
    pub user_b: UserId,
    pub kind: LinkKind,
    pub resource: ResourceId,
    /// Expected `t_b − t_a` from the configured fibre delays.
    pub offset_ps: Picos,
    pub coincidences: u64,
    pub duration_s: f64,
    pub car: Car,
    pub histogram: CorrelationHistogram,
}

impl LinkCoincidences {
    pub fn rate_hz(&self) -> f64 {
        if self.duration_s > 0.0 {
            self.coincidences as f64 / self.duration_s
        } else {
            0.0
        }
    }
}

/// Per-kind means of a link metric.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KindMeans {
    pub intra: Option<f64>,
    pub inter: Option<f64>,
    /// `intra / inter`, when both exist and `inter > 0`.
    pub ratio: Option<f64>,
}

pub fn kind_means(values: impl IntoIterator<Item = (LinkKind, f64)>) -> KindMeans {
    let mut acc = [(0.0, 0usize); 2];
    for (kind, v) in values {
        let slot = &mut acc[(kind == LinkKind::Inter) as usize];
        slot.0 += v;
        slot.1 += 1;
    }
    let mean = |(sum, n): (f64, usize)| (n > 0).then(|| sum / n as f64);
    let (intra, inter) = (mean(acc[0]), mean(acc[1]));
    let ratio = match (intra, inter) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    KindMeans { intra, inter, ratio }
}

/// Relative fibre delay of `b` with respect to `a`.
pub fn link_offset(scenario: &Scenario, a: UserId, b: UserId) -> Picos {
    scenario.fiber_delay_ps(b) - scenario.fiber_delay_ps(a)
}

/// Coincidences, CAR and histogram for each requested user pair, on the
/// users' merged (both-path) streams.
pub fn link_matrix(
    output: &ScenarioOutput,
    plan: &NetworkPlan,
    scenario: &Scenario,
    links: &[(UserId, UserId)],
    params: &CoincidenceParams,
    mode: Execution,
) -> Result<Vec<LinkCoincidences>, AnalysisError> {
    let mut merged: BTreeMap<UserId, Vec<Picos>> = BTreeMap::new();
    for &(a, b) in links {
        plan.resource_for_link(a, b)?;
        for u in [a, b] {
            merged.entry(u).or_insert_with(|| output.merged(u));
        }
    }
    let duration_s = output.duration_ps as f64 / crate::photonics::PS_PER_S;
    let results = exec::map_slice(mode, links, |&(a, b)| {
        let link = plan.resource_for_link(a, b)?;
        let offset = link_offset(scenario, a, b);
        let (ta, tb) = (&merged[&a], &merged[&b]);
        let spec = HistogramSpec::new(params.bin_width_ps, params.histogram_range_ps).centered(offset);
        let histogram = cross_correlate(ta, tb, spec, output.duration_ps)?;
        let car = compute_car(&histogram, params.window_ps)?;
        let coincidences = match_coincidences(ta, tb, params.window_ps, offset)?.len() as u64;
        Ok(LinkCoincidences {
            user_a: a,
            user_b: b,
            kind: link.kind,
            resource: link.resource,
            offset_ps: offset,
            coincidences,
            duration_s,
            car,
            histogram,
        })
    });
    results.into_iter().collect()
}

/// Link-matrix CSV: `user_a,user_b,kind,resource_id,coincidences,car,duration_s`.
pub fn write_link_matrix_csv<W: Write>(plan: &NetworkPlan, links: &[LinkCoincidences], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_a", "user_b", "kind", "resource_id", "coincidences", "car", "duration_s"])?;
    for l in links {
        w.write_record([
            plan.user_label(l.user_a),
            plan.user_label(l.user_b),
            l.kind.to_string(),
            l.resource.to_string(),
            l.coincidences.to_string(),
            format!("{:.3}", l.car.ratio),
            format!("{}", l.duration_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}
