//! Discrete-event engine: pairs are emitted per resource, routed through
//! demux → WDM mux → subnet splitter → user fiber → dispersion path, and then
//! detected per (user, path).
//!
//! Every random decision draws from a ChaCha8 stream selected by
//! [`derive_stream_seed`], so any resource or detector can be regenerated on
//! its own and the full run does not depend on scheduling order.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::photonics::{
    self, db_to_transmittance, detector_response_labeled, dispersion_time_shift, sample_pair_stream, DetectorConfig,
    DispersionConfig, DispersionPath, PairEvent, Picos, SourceConfig,
};
use crate::plan::{LinkKind, NetworkPlan, Resource, ResourceId, ResourceRole, UserId};

/// Propagation delay of standard single-mode fibre, ps per km.
pub const FIBER_DELAY_PS_PER_KM: f64 = 5.0e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("resource {0} is not part of the plan")]
    UnknownResource(ResourceId),
    #[error(transparent)]
    Photonics(#[from] photonics::PhotonicsError),
}

/// Insertion losses of the distribution chain, dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub awg_db: f64,
    pub wdm_db: f64,
    /// WDM passes charged to inter-resource photons on top of the one every
    /// photon takes.
    pub inter_extra_wdm_passes: u32,
    /// Measured per-port loss of one 1×M splitter, including the ideal
    /// `10·log10(M)` split.
    pub splitter_db: f64,
    pub dispersion_db: f64,
    pub fiber_db_per_km: f64,
}

impl Default for LossBudget {
    fn default() -> Self {
        Self {
            awg_db: 5.5,
            wdm_db: 0.5,
            inter_extra_wdm_passes: 0,
            splitter_db: 10.4,
            dispersion_db: 3.0,
            fiber_db_per_km: 0.2,
        }
    }
}

impl LossBudget {
    pub fn lossless() -> Self {
        Self { awg_db: 0.0, wdm_db: 0.0, inter_extra_wdm_passes: 0, splitter_db: 0.0, dispersion_db: 0.0, fiber_db_per_km: 0.0 }
    }

    /// Splitter loss beyond the 1-of-M routing, which the simulation
    /// realises explicitly by picking one port.
    pub fn splitter_excess_db(&self, subnet_size: u32) -> f64 {
        (self.splitter_db - 10.0 * (subnet_size as f64).log10()).max(0.0)
    }

    /// Loss from the source to the detector input for one photon.
    pub fn photon_loss_db(&self, kind: LinkKind, subnet_size: u32, fiber_km: f64) -> f64 {
        let wdm_passes = 1 + if kind == LinkKind::Inter { self.inter_extra_wdm_passes } else { 0 };
        self.awg_db
            + self.wdm_db * wdm_passes as f64
            + self.splitter_excess_db(subnet_size)
            + self.dispersion_db
            + self.fiber_db_per_km * fiber_km
    }

    fn errors(&self) -> Vec<String> {
        [
            ("losses.awg", self.awg_db),
            ("losses.wdm", self.wdm_db),
            ("losses.splitter", self.splitter_db),
            ("losses.dispersion", self.dispersion_db),
            ("losses.fiber_per_km", self.fiber_db_per_km),
        ]
        .into_iter()
        .filter(|(_, v)| !(v.is_finite() && *v >= 0.0))
        .map(|(k, v)| format!("{k} = {v} must be >= 0"))
        .collect()
    }
}

/// How much ground truth to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthLevel {
    /// No truth log and no per-tag origins; the only mode that scales to
    /// long acquisitions.
    #[default]
    Off,
    /// Pairs with at least one photon reaching a detector.
    Surviving,
    /// Every emitted pair.
    All,
}

/// All physical parameters of one run, apart from the plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub source: SourceConfig,
    pub losses: LossBudget,
    pub detector: DetectorConfig,
    /// Magnitude of both dispersion modules, ps/nm.
    pub dispersion_ps_per_nm: f64,
    /// Fibre between the provider and a user, km. Absent users use patch
    /// cords (0 km).
    pub fiber_km: BTreeMap<UserId, f64>,
    pub truth: TruthLevel,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            source: SourceConfig::default(),
            losses: LossBudget::default(),
            detector: DetectorConfig::default(),
            dispersion_ps_per_nm: 1980.0,
            fiber_km: BTreeMap::new(),
            truth: TruthLevel::Off,
            execution: Execution::default(),
        }
    }
}

impl Scenario {
    /// Lossless, noiseless, dispersion-free chain with an ideal detector.
    pub fn ideal() -> Self {
        Self {
            source: SourceConfig { correlation_jitter_ps: 0.0, ..SourceConfig::default() },
            losses: LossBudget::lossless(),
            detector: DetectorConfig::ideal(),
            dispersion_ps_per_nm: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self, plan: &NetworkPlan) -> Result<(), SimError> {
        let mut errors = Vec::new();
        if let Err(e) = self.source.validate() {
            errors.push(format!("source.{e}"));
        }
        if let Err(e) = self.detector.validate() {
            errors.push(format!("detector.{e}"));
        }
        errors.extend(self.losses.errors());
        if !(self.dispersion_ps_per_nm.is_finite() && self.dispersion_ps_per_nm >= 0.0) {
            errors.push(format!("dispersion magnitude = {} must be >= 0", self.dispersion_ps_per_nm));
        }
        for (&user, &km) in &self.fiber_km {
            if !plan.contains_user(user) {
                errors.push(format!("network.fiber_km: user {user} is not in the plan"));
            } else if !(km.is_finite() && km >= 0.0) {
                errors.push(format!("network.fiber_km.{} = {km} must be >= 0", plan.user_label(user)));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(SimError::Validation(errors))
        }
    }

    pub fn fiber_of(&self, user: UserId) -> f64 {
        self.fiber_km.get(&user).copied().unwrap_or(0.0)
    }

    /// Fixed propagation delay from the provider to `user`, ps.
    pub fn fiber_delay_ps(&self, user: UserId) -> Picos {
        (self.fiber_of(user) * FIBER_DELAY_PS_PER_KM).round() as Picos
    }

    /// Probability that a photon of a `kind` resource routed to `user`
    /// reaches the detector input.
    pub fn transmittance(&self, plan: &NetworkPlan, kind: LinkKind, user: UserId) -> f64 {
        let db = self.losses.photon_loss_db(kind, plan.subnet_size(), self.fiber_of(user));
        db_to_transmittance(db).expect("validated losses")
    }

    fn dispersion(&self, path: DispersionPath) -> DispersionConfig {
        DispersionConfig {
            magnitude_ps_per_nm: self.dispersion_ps_per_nm,
            path,
            insertion_loss_db: self.losses.dispersion_db,
        }
    }
}

/// Which independent random stream a draw belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamKey {
    Emission(ResourceId),
    Routing(ResourceId),
    Detector(UserId, DispersionPath),
}

/// A ChaCha8 key (`master`) plus stream id. The stream id is
/// `kind << 62 | payload`, where kind is 1 for emission, 2 for routing and 3
/// for detectors, and the detector payload is `user << 1 | path`. Distinct
/// keys therefore never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed {
    pub master: u64,
    pub stream: u64,
}

impl StreamSeed {
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

pub fn derive_stream_seed(master: u64, key: StreamKey) -> StreamSeed {
    const PAYLOAD: u64 = (1 << 62) - 1;
    let stream = match key {
        StreamKey::Emission(r) => (1 << 62) | (r.0 as u64 & PAYLOAD),
        StreamKey::Routing(r) => (2 << 62) | (r.0 as u64 & PAYLOAD),
        StreamKey::Detector(u, p) => (3 << 62) | (((u.0 as u64) << 1 | p.index() as u64) & PAYLOAD),
    };
    StreamSeed { master, stream }
}

/// Where one photon went.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhotonFate {
    pub user: UserId,
    pub path: DispersionPath,
    /// Reached the detector input.
    pub survived: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutedPair {
    pub signal: PhotonFate,
    pub idler: PhotonFate,
}

/// Per-resource routing constants, resolved once per stream.
struct Router<'a> {
    plan: &'a NetworkPlan,
    signal_subnet: u32,
    idler_subnet: u32,
    /// Survival probability per port, for the signal and idler subnets.
    signal_t: Vec<f64>,
    idler_t: Vec<f64>,
}

impl<'a> Router<'a> {
    fn new(plan: &'a NetworkPlan, scenario: &Scenario, resource: &Resource) -> Self {
        let (signal_subnet, idler_subnet, kind) = match resource.role {
            ResourceRole::Intra { subnet } => (subnet.0, subnet.0, LinkKind::Intra),
            ResourceRole::Inter { signal_subnet, idler_subnet } => (signal_subnet.0, idler_subnet.0, LinkKind::Inter),
        };
        let m = plan.subnet_size();
        let t = |subnet: u32| -> Vec<f64> {
            (0..m).map(|p| scenario.transmittance(plan, kind, UserId(subnet * m + p))).collect()
        };
        Self { plan, signal_subnet, idler_subnet, signal_t: t(signal_subnet), idler_t: t(idler_subnet) }
    }

    fn photon<R: Rng>(&self, subnet: u32, survival: &[f64], rng: &mut R) -> PhotonFate {
        let m = self.plan.subnet_size();
        let port = rng.random_range(0..m);
        let path = if rng.random::<bool>() { DispersionPath::Normal } else { DispersionPath::Anomalous };
        let survived = rng.random::<f64>() < survival[port as usize];
        PhotonFate { user: UserId(subnet * m + port), path, survived }
    }

    fn route<R: Rng>(&self, rng: &mut R) -> RoutedPair {
        let signal = self.photon(self.signal_subnet, &self.signal_t, rng);
        let idler = self.photon(self.idler_subnet, &self.idler_t, rng);
        RoutedPair { signal, idler }
    }
}

/// Routes one pair: a uniformly random splitter port per photon (both in one
/// subnet for intra resources, the fixed signal/idler subnets for inter
/// resources), a fair choice of dispersion path, and survival sampled from
/// the composed loss of that photon's path.
pub fn route_pair<R: Rng>(
    pair: &PairEvent,
    plan: &NetworkPlan,
    scenario: &Scenario,
    rng: &mut R,
) -> Result<RoutedPair, SimError> {
    let resource = plan.resource(pair.resource).ok_or(SimError::UnknownResource(pair.resource))?;
    Ok(Router::new(plan, scenario, resource).route(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhotonRole {
    Signal,
    Idler,
}

/// Source of one tag: a dark count or a specific photon. Packed as
/// `(resource << 40 | seq) << 1 | role`, with `u64::MAX` for dark counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Origin(u64);

impl Origin {
    pub const DARK: Origin = Origin(u64::MAX);

    pub fn photon(pair_id: u64, role: PhotonRole) -> Self {
        Origin(pair_id << 1 | role as u64)
    }

    pub fn is_dark(self) -> bool {
        self == Self::DARK
    }

    pub fn pair_id(self) -> Option<u64> {
        (!self.is_dark()).then_some(self.0 >> 1)
    }

    pub fn role(self) -> Option<PhotonRole> {
        (!self.is_dark()).then_some(if self.0 & 1 == 0 { PhotonRole::Signal } else { PhotonRole::Idler })
    }
}

/// Globally unique pair id.
pub fn pair_id(resource: ResourceId, seq: u64) -> u64 {
    (resource.0 as u64) << 40 | seq
}

trait Label: Copy + Send + Sync {
    const DARK: Self;
    fn photon(pair_id: u64, role: PhotonRole) -> Self;
}

impl Label for () {
    const DARK: Self = ();
    fn photon(_: u64, _: PhotonRole) -> Self {}
}

impl Label for Origin {
    const DARK: Self = Origin::DARK;
    fn photon(pair_id: u64, role: PhotonRole) -> Self {
        Origin::photon(pair_id, role)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruthRecord {
    pub pair_id: u64,
    pub resource: ResourceId,
    pub emission_ps: Picos,
    /// Destination user if the photon reached a detector input.
    pub signal_user: Option<UserId>,
    pub idler_user: Option<UserId>,
    pub signal_path: DispersionPath,
    pub idler_path: DispersionPath,
    pub signal_detected: bool,
    pub idler_detected: bool,
}

/// Ground truth sorted by pair id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TruthLog {
    pub records: Vec<TruthRecord>,
}

impl TruthLog {
    pub fn get(&self, pair_id: u64) -> Option<&TruthRecord> {
        self.records.binary_search_by_key(&pair_id, |r| r.pair_id).ok().map(|i| &self.records[i])
    }

    fn get_mut(&mut self, pair_id: u64) -> Option<&mut TruthRecord> {
        self.records.binary_search_by_key(&pair_id, |r| r.pair_id).ok().map(move |i| &mut self.records[i])
    }

    /// CSV with columns
    /// `pair_id,resource_id,t_emit_ps,signal_user,idler_user,signal_detected,idler_detected`;
    /// users are labels, empty when the photon was lost.
    pub fn write_csv<W: Write>(&self, plan: &NetworkPlan, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "pair_id",
            "resource_id",
            "t_emit_ps",
            "signal_user",
            "idler_user",
            "signal_detected",
            "idler_detected",
        ])?;
        let label = |u: Option<UserId>| u.map(|u| plan.user_label(u)).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.pair_id.to_string(),
                r.resource.to_string(),
                r.emission_ps.to_string(),
                label(r.signal_user),
                label(r.idler_user),
                (r.signal_detected as u8).to_string(),
                (r.idler_detected as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Detections of one (user, path) detector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagStream {
    pub user: UserId,
    pub path: DispersionPath,
    pub tags: Vec<Picos>,
    /// Parallel to `tags`; present only when truth was recorded.
    pub origins: Option<Vec<Origin>>,
}

impl TagStream {
    /// Dump format: a header line `user,path,duration_ps,seed` (values),
    /// then one timestamp per line.
    pub fn write_dump<W: Write>(&self, plan: &NetworkPlan, duration_ps: Picos, seed: u64, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{},{},{},{}", plan.user_label(self.user), self.path.as_str(), duration_ps, seed)?;
        for t in &self.tags {
            writeln!(out, "{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinglesSummary {
    pub user: UserId,
    pub path: DispersionPath,
    pub counts: u64,
    pub rate_hz: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub duration_ps: Picos,
    pub seed: u64,
    /// Indexed by `user · 2 + path`.
    pub streams: Vec<TagStream>,
    pub truth: Option<TruthLog>,
    pub singles: Vec<SinglesSummary>,
    /// Pairs emitted per resource, in resource order.
    pub emitted: Vec<u64>,
}

impl ScenarioOutput {
    pub fn stream(&self, user: UserId, path: DispersionPath) -> &TagStream {
        &self.streams[slot(user, path)]
    }

    /// Both paths of one user, merged and sorted.
    pub fn merged(&self, user: UserId) -> Vec<Picos> {
        let a = &self.stream(user, DispersionPath::Normal).tags;
        let b = &self.stream(user, DispersionPath::Anomalous).tags;
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                out.push(a[i]);
                i += 1;
            } else {
                out.push(b[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out
    }
}

fn slot(user: UserId, path: DispersionPath) -> usize {
    user.0 as usize * 2 + path.index()
}

/// Detector-input arrivals produced by one resource.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceArrivals<L> {
    pub resource: ResourceId,
    pub emitted: u64,
    /// Indexed by `user · 2 + path`; sorted by time.
    pub slots: Vec<Vec<(Picos, L)>>,
    pub records: Vec<TruthRecord>,
}

fn resource_arrivals_impl<L: Label>(
    plan: &NetworkPlan,
    scenario: &Scenario,
    resource: &Resource,
    duration_s: f64,
    seed: u64,
    truth: TruthLevel,
) -> ResourceArrivals<L> {
    let router = Router::new(plan, scenario, resource);
    let mut routing = derive_stream_seed(seed, StreamKey::Routing(resource.id())).rng();
    let emission = derive_stream_seed(seed, StreamKey::Emission(resource.id())).rng();
    let corr = (scenario.source.correlation_jitter_ps > 0.0)
        .then(|| Normal::new(0.0, scenario.source.correlation_jitter_ps).expect("finite sigma"));
    let excess = (scenario.source.excess_jitter_ps > 0.0)
        .then(|| Normal::new(0.0, scenario.source.excess_jitter_ps).expect("finite sigma"));
    let disp = [scenario.dispersion(DispersionPath::Normal), scenario.dispersion(DispersionPath::Anomalous)];
    let delays: Vec<f64> = plan.users().map(|u| scenario.fiber_delay_ps(u) as f64).collect();

    let mut slots: Vec<Vec<(Picos, L)>> = vec![Vec::new(); plan.user_count() as usize * 2];
    let mut records = Vec::new();
    let mut emitted = 0;

    for pair in sample_pair_stream(&scenario.source, &resource.pair, duration_s, emission) {
        emitted += 1;
        let routed = router.route(&mut routing);
        let idler_offset = corr.as_ref().map_or(0.0, |n| n.sample(&mut routing));
        let id = pair_id(resource.id(), pair.seq);
        let photons = [
            (routed.signal, resource.pair.signal, pair.signal_detuning_ghz(), 0.0, PhotonRole::Signal),
            (routed.idler, resource.pair.idler, pair.idler_detuning_ghz(), idler_offset, PhotonRole::Idler),
        ];
        for (fate, channel, detuning, offset, role) in photons {
            if !fate.survived {
                continue;
            }
            let mut t = pair.emission_ps
                + offset
                + delays[fate.user.0 as usize]
                + dispersion_time_shift(detuning, channel, &disp[fate.path.index()]);
            if let Some(n) = &excess {
                t += n.sample(&mut routing);
            }
            slots[slot(fate.user, fate.path)].push((t.round() as Picos, L::photon(id, role)));
        }
        let keep = match truth {
            TruthLevel::Off => false,
            TruthLevel::Surviving => routed.signal.survived || routed.idler.survived,
            TruthLevel::All => true,
        };
        if keep {
            records.push(TruthRecord {
                pair_id: id,
                resource: resource.id(),
                emission_ps: pair.emission_ps.round() as Picos,
                signal_user: routed.signal.survived.then_some(routed.signal.user),
                idler_user: routed.idler.survived.then_some(routed.idler.user),
                signal_path: routed.signal.path,
                idler_path: routed.idler.path,
                signal_detected: false,
                idler_detected: false,
            });
        }
    }
    for s in &mut slots {
        s.sort_by_key(|&(t, _)| t);
    }
    ResourceArrivals { resource: resource.id(), emitted, slots, records }
}

/// Regenerates the detector-input arrivals of a single resource exactly as
/// [`run_scenario`] produces them.
pub fn resource_arrivals(
    plan: &NetworkPlan,
    scenario: &Scenario,
    resource: ResourceId,
    duration_s: f64,
    seed: u64,
) -> Result<ResourceArrivals<Origin>, SimError> {
    let r = plan.resource(resource).ok_or(SimError::UnknownResource(resource))?;
    Ok(resource_arrivals_impl(plan, scenario, r, duration_s, seed, TruthLevel::All))
}

/// Runs the full chain for `duration_s` seconds.
pub fn run_scenario(plan: &NetworkPlan, scenario: &Scenario, duration_s: f64, seed: u64) -> Result<ScenarioOutput, SimError> {
    scenario.validate(plan)?;
    if !(duration_s.is_finite() && duration_s >= 0.0) {
        return Err(SimError::Validation(vec![format!("run.duration_s = {duration_s} must be >= 0")]));
    }
    match scenario.truth {
        TruthLevel::Off => Ok(run_labeled::<()>(plan, scenario, duration_s, seed)),
        _ => Ok(run_labeled::<Origin>(plan, scenario, duration_s, seed)),
    }
}

trait IntoOrigins: Label {
    fn origins(labels: Vec<Self>) -> Option<Vec<Origin>>;
}

impl IntoOrigins for () {
    fn origins(_: Vec<Self>) -> Option<Vec<Origin>> {
        None
    }
}

impl IntoOrigins for Origin {
    fn origins(labels: Vec<Self>) -> Option<Vec<Origin>> {
        Some(labels)
    }
}

fn run_labeled<L: IntoOrigins>(plan: &NetworkPlan, scenario: &Scenario, duration_s: f64, seed: u64) -> ScenarioOutput {
    let duration_ps = photonics::seconds_to_ps(duration_s);
    let mode = scenario.execution;
    let per_resource: Vec<ResourceArrivals<L>> = exec::map_slice(mode, plan.resources(), |r| {
        resource_arrivals_impl(plan, scenario, r, duration_s, seed, scenario.truth)
    });

    let emitted: Vec<u64> = per_resource.iter().map(|r| r.emitted).collect();
    let mut truth = (scenario.truth != TruthLevel::Off).then(TruthLog::default);
    let mut per_resource = per_resource;
    if let Some(log) = truth.as_mut() {
        for r in &mut per_resource {
            log.records.append(&mut r.records);
        }
    }

    let slots: Vec<(usize, Vec<(Picos, L)>)> = (0..plan.user_count() as usize * 2)
        .map(|s| {
            let mut merged = Vec::new();
            for r in per_resource.iter_mut() {
                let part = std::mem::take(&mut r.slots[s]);
                merged.extend(part);
            }
            merged.sort_by_key(|&(t, _)| t);
            (s, merged)
        })
        .collect();
    drop(per_resource);

    let detected: Vec<(usize, Vec<(Picos, L)>)> = exec::map_vec(mode, slots, |(s, arrivals)| {
        let user = UserId((s / 2) as u32);
        let path = DispersionPath::BOTH[s % 2];
        let mut rng = derive_stream_seed(seed, StreamKey::Detector(user, path)).rng();
        let tags = detector_response_labeled(&arrivals, L::DARK, &scenario.detector, duration_ps, &mut rng)
            .expect("arrivals are sorted and the detector was validated");
        (s, tags)
    });

    let mut streams = Vec::with_capacity(detected.len());
    let mut singles = Vec::with_capacity(detected.len());
    for (s, tags) in detected {
        let user = UserId((s / 2) as u32);
        let path = DispersionPath::BOTH[s % 2];
        let (times, labels): (Vec<Picos>, Vec<L>) = tags.into_iter().unzip();
        let origins = L::origins(labels);
        if let (Some(log), Some(origins)) = (truth.as_mut(), origins.as_ref()) {
            for o in origins {
                if let (Some(id), Some(role)) = (o.pair_id(), o.role()) {
                    if let Some(rec) = log.get_mut(id) {
                        match role {
                            PhotonRole::Signal => rec.signal_detected = true,
                            PhotonRole::Idler => rec.idler_detected = true,
                        }
                    }
                }
            }
        }
        singles.push(SinglesSummary {
            user,
            path,
            counts: times.len() as u64,
            rate_hz: if duration_s > 0.0 { times.len() as f64 / duration_s } else { 0.0 },
        });
        streams.push(TagStream { user, path, tags: times, origins });
    }

    ScenarioOutput { duration_ps, seed, streams, truth, singles, emitted }
}

/// Expected singles rate of one detector, ignoring dead time: dark counts
/// plus, for every resource feeding the user's subnet, the photon flux per
/// port times the path probability, transmittance and efficiency.
pub fn expected_singles_rate(plan: &NetworkPlan, scenario: &Scenario, user: UserId, _path: DispersionPath) -> f64 {
    let subnet = plan.subnet_of(user);
    let m = plan.subnet_size() as f64;
    let rate = scenario.source.pair_rate;
    let photons: f64 = plan
        .resources()
        .iter()
        .map(|r| match r.role {
            ResourceRole::Intra { subnet: s } if s == subnet => {
                2.0 * rate / m * scenario.transmittance(plan, LinkKind::Intra, user)
            }
            ResourceRole::Inter { signal_subnet, idler_subnet } if signal_subnet == subnet || idler_subnet == subnet => {
                rate / m * scenario.transmittance(plan, LinkKind::Inter, user)
            }
            _ => 0.0,
        })
        .sum();
    scenario.detector.dark_rate + 0.5 * photons * scenario.detector.efficiency
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{build_plan, PlanSpec};
    use std::collections::HashSet;

    fn small_plan() -> NetworkPlan {
        build_plan(&PlanSpec::new(2, 4)).unwrap()
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let plan = build_plan(&PlanSpec::default()).unwrap();
        let mut seen = HashSet::new();
        for r in plan.resources() {
            assert!(seen.insert(derive_stream_seed(7, StreamKey::Emission(r.id()))));
            assert!(seen.insert(derive_stream_seed(7, StreamKey::Routing(r.id()))));
        }
        for u in plan.users() {
            for p in DispersionPath::BOTH {
                assert!(seen.insert(derive_stream_seed(7, StreamKey::Detector(u, p))));
            }
        }
        let a = derive_stream_seed(7, StreamKey::Routing(ResourceId(3)));
        assert_eq!(a, derive_stream_seed(7, StreamKey::Routing(ResourceId(3))));
        let mut r1 = a.rng();
        let mut r2 = a.rng();
        assert_eq!(r1.random::<u64>(), r2.random::<u64>());
    }

    #[test]
    fn zero_duration_is_empty() {
        let plan = small_plan();
        let sc = Scenario { truth: TruthLevel::All, ..Scenario::default() };
        let out = run_scenario(&plan, &sc, 0.0, 1).unwrap();
        assert!(out.streams.iter().all(|s| s.tags.is_empty()));
        assert!(out.truth.unwrap().records.is_empty());
        assert!(out.emitted.iter().all(|&n| n == 0));
    }

    #[test]
    fn validation_lists_every_bad_field() {
        let plan = small_plan();
        let mut sc = Scenario::default();
        sc.detector.dark_rate = -1.0;
        sc.losses.awg_db = -2.0;
        sc.fiber_km.insert(UserId(99), 1.0);
        match run_scenario(&plan, &sc, 1.0, 0) {
            Err(SimError::Validation(errors)) => {
                assert_eq!(errors.len(), 3, "{errors:?}");
                assert!(errors[0].contains("dark_rate"));
                assert!(errors.iter().any(|e| e.contains("losses.awg")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_resource_in_routing() {
        let plan = small_plan();
        let pair = PairEvent { resource: ResourceId(99), seq: 0, emission_ps: 0.0, detuning_ghz: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(route_pair(&pair, &plan, &Scenario::default(), &mut rng), Err(SimError::UnknownResource(_))));
    }

    #[test]
    fn inter_photons_stay_in_their_subnets() {
        let plan = build_plan(&PlanSpec::new(3, 4)).unwrap();
        let sc = Scenario::ideal();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (a, b, pair) in plan.inter_resources() {
            let ev = PairEvent { resource: pair.resource, seq: 0, emission_ps: 0.0, detuning_ghz: 0.0 };
            for _ in 0..2000 {
                let routed = route_pair(&ev, &plan, &sc, &mut rng).unwrap();
                assert_eq!(plan.subnet_of(routed.signal.user), a);
                assert_eq!(plan.subnet_of(routed.idler.user), b);
            }
        }
    }

    #[test]
    fn splitter_excess_loss() {
        let l = LossBudget::default();
        assert!((l.splitter_excess_db(8) - (10.4 - 10.0 * 8f64.log10())).abs() < 1e-12);
        assert_eq!(l.splitter_excess_db(16), 0.0);
    }

    #[test]
    fn origin_packing() {
        let id = pair_id(ResourceId(15), 123_456);
        let o = Origin::photon(id, PhotonRole::Idler);
        assert_eq!(o.pair_id(), Some(id));
        assert_eq!(o.role(), Some(PhotonRole::Idler));
        assert!(Origin::DARK.pair_id().is_none());
    }
}
