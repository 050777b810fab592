//! Phenomenological models of the optical chain: pair source, loss elements,
//! dispersion modules and single-photon detectors.
//!
//! Every sampler takes an explicit RNG, so outputs are pure functions of
//! configuration and seed.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{ChannelPair, ItuChannel, ResourceId, SPEED_OF_LIGHT_NM_THZ};

/// Timestamps and delays, integer picoseconds.
pub type Picos = i64;

pub const PS_PER_S: f64 = 1e12;

pub fn seconds_to_ps(seconds: f64) -> Picos {
    (seconds * PS_PER_S).round() as Picos
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhotonicsError {
    #[error("{field} = {value} is out of range ({expected})")]
    OutOfRange { field: &'static str, value: f64, expected: &'static str },
    #[error("arrival times must be sorted (index {index} goes backwards)")]
    Unsorted { index: usize },
}

fn check(field: &'static str, value: f64, ok: bool, expected: &'static str) -> Result<(), PhotonicsError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(PhotonicsError::OutOfRange { field, value, expected })
    }
}

/// Pair source, one independent emitter per correlated channel pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    /// Pairs per second per channel pair, at the source output.
    pub pair_rate: f64,
    /// Filter bandwidth of one channel, GHz.
    pub bandwidth_ghz: f64,
    /// Spread of the idler emission time around the signal's, ps.
    pub correlation_jitter_ps: f64,
    /// Extra independent Gaussian timing noise per photon, ps. Zero in
    /// normal operation; used to exercise the dispersion monitor.
    #[serde(default)]
    pub excess_jitter_ps: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self { pair_rate: 8.0e5, bandwidth_ghz: 100.0, correlation_jitter_ps: 5.0, excess_jitter_ps: 0.0 }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<(), PhotonicsError> {
        check("pair_rate", self.pair_rate, self.pair_rate > 0.0, "> 0")?;
        check("bandwidth", self.bandwidth_ghz, self.bandwidth_ghz > 0.0, "> 0")?;
        check("correlation_jitter", self.correlation_jitter_ps, self.correlation_jitter_ps >= 0.0, ">= 0")?;
        check("excess_jitter", self.excess_jitter_ps, self.excess_jitter_ps >= 0.0, ">= 0")
    }
}

/// One emitted pair. The idler detuning is always the negative of the
/// signal detuning, so only one value is stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEvent {
    pub resource: ResourceId,
    /// Position within its resource's stream, from 0.
    pub seq: u64,
    pub emission_ps: f64,
    /// Signal offset from its channel centre, GHz.
    pub detuning_ghz: f64,
}

impl PairEvent {
    pub fn signal_detuning_ghz(&self) -> f64 {
        self.detuning_ghz
    }

    pub fn idler_detuning_ghz(&self) -> f64 {
        -self.detuning_ghz
    }
}

/// Lazy homogeneous Poisson stream of pairs for one resource.
pub struct PairStream<R> {
    rng: R,
    resource: ResourceId,
    gaps: Option<Exp<f64>>,
    half_bandwidth: f64,
    end_ps: f64,
    now_ps: f64,
    seq: u64,
}

impl<R: Rng> Iterator for PairStream<R> {
    type Item = PairEvent;

    fn next(&mut self) -> Option<PairEvent> {
        let gaps = self.gaps.as_ref()?;
        let mut t = self.now_ps + gaps.sample(&mut self.rng);
        if t <= self.now_ps {
            // Gap below one ulp at this magnitude; keep times strictly increasing.
            t = f64::from_bits(self.now_ps.to_bits() + 1);
        }
        if t >= self.end_ps {
            self.gaps = None;
            return None;
        }
        self.now_ps = t;
        let detuning_ghz = self.rng.random_range(-self.half_bandwidth..=self.half_bandwidth);
        let event = PairEvent { resource: self.resource, seq: self.seq, emission_ps: t, detuning_ghz };
        self.seq += 1;
        Some(event)
    }
}

/// Samples emission times as a Poisson process at `cfg.pair_rate` over
/// `[0, duration_s)` with detunings uniform over the channel bandwidth.
pub fn sample_pair_stream<R: Rng>(cfg: &SourceConfig, resource: &ChannelPair, duration_s: f64, rng: R) -> PairStream<R> {
    let end_ps = duration_s.max(0.0) * PS_PER_S;
    let gaps = (cfg.pair_rate > 0.0 && end_ps > 0.0).then(|| Exp::new(cfg.pair_rate / PS_PER_S).expect("positive rate"));
    PairStream {
        rng,
        resource: resource.resource,
        gaps,
        half_bandwidth: cfg.bandwidth_ghz / 2.0,
        end_ps,
        // The first gap is measured from t = 0, which is itself excluded.
        now_ps: 0.0,
        seq: 0,
    }
}

pub fn db_to_transmittance(loss_db: f64) -> Result<f64, PhotonicsError> {
    check("loss", loss_db, loss_db >= 0.0, ">= 0 dB")?;
    Ok(10f64.powf(-loss_db / 10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DispersionPath {
    Normal,
    Anomalous,
}

impl DispersionPath {
    pub const BOTH: [DispersionPath; 2] = [DispersionPath::Normal, DispersionPath::Anomalous];

    pub fn sign(self) -> f64 {
        match self {
            DispersionPath::Normal => 1.0,
            DispersionPath::Anomalous => -1.0,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> Self {
        match self {
            DispersionPath::Normal => DispersionPath::Anomalous,
            DispersionPath::Anomalous => DispersionPath::Normal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DispersionPath::Normal => "normal",
            DispersionPath::Anomalous => "anomalous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionConfig {
    pub magnitude_ps_per_nm: f64,
    pub path: DispersionPath,
    pub insertion_loss_db: f64,
}

impl DispersionConfig {
    pub fn new(magnitude_ps_per_nm: f64, path: DispersionPath) -> Self {
        Self { magnitude_ps_per_nm, path, insertion_loss_db: 3.0 }
    }
}

/// Wavelength offset per unit frequency offset at `channel`, nm/GHz
/// (positive number; the sign of `Δλ = −(λ²/c)·δν` is applied by callers).
pub fn nm_per_ghz(channel: ItuChannel) -> f64 {
    let lambda = channel.wavelength_nm();
    lambda * lambda / SPEED_OF_LIGHT_NM_THZ * 1e-3
}

/// Group-delay change of a photon detuned by `detuning_ghz` from `channel`'s
/// centre: `sign · D · Δλ`, with `Δλ = −(λ_c²/c)·δν`.
pub fn dispersion_time_shift(detuning_ghz: f64, channel: ItuChannel, disp: &DispersionConfig) -> f64 {
    let delta_lambda_nm = -nm_per_ghz(channel) * detuning_ghz;
    disp.path.sign() * disp.magnitude_ps_per_nm * delta_lambda_nm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub efficiency: f64,
    /// Dark counts per second.
    pub dark_rate: f64,
    /// Gaussian timing jitter σ, ps.
    pub jitter_ps: f64,
    /// Non-paralysable dead time, ps.
    pub dead_time_ps: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { efficiency: 0.70, dark_rate: 100.0, jitter_ps: 20.0, dead_time_ps: 50_000.0 }
    }
}

impl DetectorConfig {
    pub fn ideal() -> Self {
        Self { efficiency: 1.0, dark_rate: 0.0, jitter_ps: 0.0, dead_time_ps: 0.0 }
    }

    pub fn validate(&self) -> Result<(), PhotonicsError> {
        check("efficiency", self.efficiency, (0.0..=1.0).contains(&self.efficiency), "0..=1")?;
        check("dark_rate", self.dark_rate, self.dark_rate >= 0.0, ">= 0")?;
        check("jitter", self.jitter_ps, self.jitter_ps >= 0.0, ">= 0")?;
        check("dead_time", self.dead_time_ps, self.dead_time_ps >= 0.0, ">= 0")
    }
}

/// Detector model over labelled arrivals. `dark` labels injected dark counts.
///
/// Steps: Bernoulli thinning by efficiency, Gaussian jitter on kept photons,
/// Poisson dark counts over `[0, duration)`, merge and sort, drop anything
/// outside `[0, duration)`, then non-paralysable dead-time pruning. Tags are
/// integer picoseconds and two tags never share a timestamp.
pub fn detector_response_labeled<T: Copy, R: Rng>(
    arrivals: &[(Picos, T)],
    dark: T,
    cfg: &DetectorConfig,
    duration_ps: Picos,
    rng: &mut R,
) -> Result<Vec<(Picos, T)>, PhotonicsError> {
    if let Some(index) = arrivals.windows(2).position(|w| w[1].0 < w[0].0) {
        return Err(PhotonicsError::Unsorted { index: index + 1 });
    }
    cfg.validate()?;

    let jitter = (cfg.jitter_ps > 0.0).then(|| Normal::new(0.0, cfg.jitter_ps).expect("finite sigma"));
    let mut tags: Vec<(Picos, T)> = Vec::with_capacity((arrivals.len() as f64 * cfg.efficiency) as usize + 16);
    for &(t, label) in arrivals {
        if cfg.efficiency < 1.0 && rng.random::<f64>() >= cfg.efficiency {
            continue;
        }
        let t = match &jitter {
            Some(n) => t + n.sample(rng).round() as Picos,
            None => t,
        };
        tags.push((t, label));
    }

    if cfg.dark_rate > 0.0 && duration_ps > 0 {
        let gaps = Exp::new(cfg.dark_rate / PS_PER_S).expect("positive rate");
        let mut t = 0.0;
        loop {
            t += gaps.sample(rng);
            if t >= duration_ps as f64 {
                break;
            }
            tags.push((t.floor() as Picos, dark));
        }
    }

    tags.retain(|&(t, _)| (0..duration_ps).contains(&t));
    tags.sort_by_key(|&(t, _)| t);

    let dead = (cfg.dead_time_ps.round() as Picos).max(1);
    let mut last: Option<Picos> = None;
    tags.retain(|&(t, _)| match last {
        Some(prev) if t - prev < dead => false,
        _ => {
            last = Some(t);
            true
        }
    });
    Ok(tags)
}

/// Unlabelled form of [`detector_response_labeled`].
pub fn detector_response<R: Rng>(
    arrivals: &[Picos],
    cfg: &DetectorConfig,
    duration_s: f64,
    rng: &mut R,
) -> Result<Vec<Picos>, PhotonicsError> {
    let labeled: Vec<(Picos, ())> = arrivals.iter().map(|&t| (t, ())).collect();
    let out = detector_response_labeled(&labeled, (), cfg, seconds_to_ps(duration_s), rng)?;
    Ok(out.into_iter().map(|(t, _)| t).collect())
}
