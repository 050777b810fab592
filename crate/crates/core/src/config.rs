//! Scenario configuration: a sectioned TOML file resolved against a fixed
//! schema. Every parameter ends up with a concrete value and a provenance tag,
//! and every problem is reported with its dotted field path.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::{Table, Value};

use crate::analysis::CoincidenceParams;
use crate::doqkd::{FrameConfig, QkdParams};
use crate::photonics::{DetectorConfig, SourceConfig};
use crate::plan::{build_plan, ChannelGrid, NetworkPlan, PlanSpec};
use crate::sim::{LossBudget, Scenario, TruthLevel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", .path.display())]
    Syntax { path: PathBuf, message: String },
    #[error("invalid configuration:\n  {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<FieldError>),
    #[error("metadata: {0}")]
    Metadata(String),
}

impl ConfigError {
    pub fn fields(&self) -> &[FieldError] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Published experimental value.
    Paper,
    /// Chosen to reproduce the published figures of merit.
    Calibration,
    /// Conventional engineering value.
    Default,
    Config,
    Cli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub subnets: u32,
    pub subnet_size: u32,
    pub pump_channel: i32,
    pub first_offset: i32,
    pub grid_min: i32,
    pub grid_max: i32,
    /// User label → fibre length, km.
    pub fiber_km: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSection {
    pub pair_rate: f64,
    pub bandwidth_ghz: f64,
    pub correlation_jitter_ps: f64,
    pub excess_jitter_ps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSection {
    pub awg_db: f64,
    pub wdm_db: f64,
    pub inter_extra_wdm_passes: u32,
    pub splitter_db: f64,
    pub dispersion_db: f64,
    pub fiber_db_per_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionSection {
    pub magnitude_ps_per_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSection {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub jitter_ps: f64,
    pub dead_time_ps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QkdSection {
    pub frame_length_ps: i64,
    pub bins: u32,
    pub guard_band_ps: i64,
    pub beta: f64,
    pub monitor_window_ps: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSection {
    pub window_ps: i64,
    pub bin_width_ps: i64,
    pub histogram_range_ps: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub duration_s: f64,
    pub seed: u64,
    /// `default`, `all`, or a comma-separated list such as `A1-A2,B3-C4`.
    pub links: String,
    pub truth: TruthLevel,
}

/// Fully resolved configuration. Serialising it yields the canonical form
/// that the config hash is computed over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub network: NetworkConfig,
    pub source: SourceSection,
    pub losses: LossSection,
    pub dispersion: DispersionSection,
    pub detector: DetectorSection,
    pub qkd: QkdSection,
    pub analysis: AnalysisSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub config: ScenarioConfig,
    pub provenance: BTreeMap<String, Provenance>,
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        resolve(&Table::new()).expect("defaults are valid")
    }
}

impl ScenarioConfig {
    pub fn plan_spec(&self) -> PlanSpec {
        let n = &self.network;
        PlanSpec {
            subnets: n.subnets,
            subnet_size: n.subnet_size,
            pump: n.pump_channel,
            first_offset: n.first_offset,
            grid: ChannelGrid { min: n.grid_min, max: n.grid_max },
        }
    }

    pub fn scenario(&self, plan: &NetworkPlan) -> Result<Scenario, ConfigError> {
        let mut fiber_km = BTreeMap::new();
        let mut errors = Vec::new();
        for (label, &km) in &self.network.fiber_km {
            match plan.user_by_label(label) {
                Ok(u) => {
                    fiber_km.insert(u, km);
                }
                Err(e) => errors.push(FieldError { path: format!("network.fiber_km.{label}"), message: e.to_string() }),
            }
        }
        if !errors.is_empty() {
            return Err(ConfigError::Invalid(errors));
        }
        Ok(Scenario {
            source: SourceConfig {
                pair_rate: self.source.pair_rate,
                bandwidth_ghz: self.source.bandwidth_ghz,
                correlation_jitter_ps: self.source.correlation_jitter_ps,
                excess_jitter_ps: self.source.excess_jitter_ps,
            },
            losses: LossBudget {
                awg_db: self.losses.awg_db,
                wdm_db: self.losses.wdm_db,
                inter_extra_wdm_passes: self.losses.inter_extra_wdm_passes,
                splitter_db: self.losses.splitter_db,
                dispersion_db: self.losses.dispersion_db,
                fiber_db_per_km: self.losses.fiber_db_per_km,
            },
            detector: DetectorConfig {
                efficiency: self.detector.efficiency,
                dark_rate: self.detector.dark_rate_hz,
                jitter_ps: self.detector.jitter_ps,
                dead_time_ps: self.detector.dead_time_ps,
            },
            dispersion_ps_per_nm: self.dispersion.magnitude_ps_per_nm,
            fiber_km,
            truth: self.run.truth,
            ..Scenario::default()
        })
    }

    pub fn qkd_params(&self) -> QkdParams {
        QkdParams {
            frames: FrameConfig {
                frame_length_ps: self.qkd.frame_length_ps,
                bins: self.qkd.bins,
                guard_ps: self.qkd.guard_band_ps,
            },
            beta: self.qkd.beta,
            monitor_window_ps: self.qkd.monitor_window_ps,
        }
    }

    pub fn coincidence_params(&self) -> CoincidenceParams {
        CoincidenceParams {
            window_ps: self.analysis.window_ps,
            bin_width_ps: self.analysis.bin_width_ps,
            histogram_range_ps: self.analysis.histogram_range_ps,
        }
    }

    /// Canonical JSON rendering; stable across runs and platforms.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Cross-field checks that need the built plan.
    pub fn check(&self) -> Result<NetworkPlan, ConfigError> {
        let mut errors = Vec::new();
        let plan = match build_plan(&self.plan_spec()) {
            Ok(p) => Some(p),
            Err(e) => {
                errors.push(FieldError { path: "network".into(), message: e.to_string() });
                None
            }
        };
        if let Err(e) = self.qkd_params().frames.validate() {
            errors.push(FieldError { path: "qkd".into(), message: e.to_string() });
        }
        if let Some(plan) = &plan {
            match self.scenario(plan) {
                Ok(sc) => {
                    if let Err(e) = sc.validate(plan) {
                        errors.push(FieldError { path: "scenario".into(), message: e.to_string() });
                    }
                }
                Err(e) => errors.extend(e.fields().iter().cloned()),
            }
            if let Err(msg) = crate::report::LinkSelection::parse(&self.run.links).and_then(|s| s.resolve(plan).map(|_| ())) {
                errors.push(FieldError { path: "run.links".into(), message: msg });
            }
        }
        match (plan, errors.is_empty()) {
            (Some(p), true) => Ok(p),
            _ => Err(ConfigError::Invalid(errors)),
        }
    }
}

impl ResolvedConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_str_at(&text, path)
    }

    pub fn from_str_at(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax { path: path.to_owned(), message: e.message().to_owned() })?;
        resolve(&table)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.config.run.seed = seed;
        self.provenance.insert("run.seed".into(), Provenance::Cli);
    }

    pub fn set_duration(&mut self, duration_s: f64) -> Result<(), ConfigError> {
        if !(duration_s.is_finite() && duration_s > 0.0 && duration_s <= MAX_DURATION_S) {
            return Err(ConfigError::Invalid(vec![FieldError {
                path: "run.duration_s".into(),
                message: format!("{duration_s} is outside (0, {MAX_DURATION_S}]"),
            }]));
        }
        self.config.run.duration_s = duration_s;
        self.provenance.insert("run.duration_s".into(), Provenance::Cli);
        Ok(())
    }

    pub fn set_links(&mut self, links: &str) {
        self.config.run.links = links.to_owned();
        self.provenance.insert("run.links".into(), Provenance::Cli);
    }

    pub fn set_truth(&mut self, truth: TruthLevel) {
        self.config.run.truth = truth;
        self.provenance.insert("run.truth".into(), Provenance::Cli);
    }

    /// Rebuilds the configuration recorded in a `run-metadata.json`, checking
    /// it against the recorded hash.
    pub fn from_metadata(json: &str) -> Result<ScenarioConfig, ConfigError> {
        #[derive(Deserialize)]
        struct Recorded {
            config_hash: String,
            config: ScenarioConfig,
        }
        let rec: Recorded = serde_json::from_str(json).map_err(|e| ConfigError::Metadata(e.to_string()))?;
        let hash = rec.config.hash();
        if hash != rec.config_hash {
            return Err(ConfigError::Metadata(format!("config hash mismatch: recorded {}, computed {hash}", rec.config_hash)));
        }
        Ok(rec.config)
    }
}

pub const MAX_DURATION_S: f64 = 3600.0;

struct Resolver<'a> {
    root: &'a Table,
    provenance: BTreeMap<String, Provenance>,
    errors: Vec<FieldError>,
}

enum Bound {
    Closed(f64),
    Open(f64),
}

impl<'a> Resolver<'a> {
    fn section(&mut self, name: &str) -> Option<&'a Table> {
        match self.root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.fail(name, "expected a section".into());
                None
            }
        }
    }

    fn fail(&mut self, path: &str, message: String) {
        self.errors.push(FieldError { path: path.into(), message });
    }

    fn raw(&mut self, section: &str, key: &str, fallback: Provenance) -> (String, Option<&'a Value>) {
        let path = format!("{section}.{key}");
        let value = self.section(section).and_then(|t| t.get(key));
        self.provenance.insert(path.clone(), if value.is_some() { Provenance::Config } else { fallback });
        (path, value)
    }

    fn float(&mut self, section: &str, key: &str, default: f64, prov: Provenance, lo: Bound, hi: Bound) -> f64 {
        let (path, value) = self.raw(section, key, prov);
        let v = match value {
            None => return default,
            Some(Value::Float(f)) => *f,
            Some(Value::Integer(i)) => *i as f64,
            Some(other) => {
                self.fail(&path, format!("expected a number, found {}", other.type_str()));
                return default;
            }
        };
        let ok_lo = match lo {
            Bound::Closed(l) => v >= l,
            Bound::Open(l) => v > l,
        };
        let ok_hi = match hi {
            Bound::Closed(h) => v <= h,
            Bound::Open(h) => v < h,
        };
        if !(v.is_finite() && ok_lo && ok_hi) {
            let l = match lo {
                Bound::Closed(l) => format!("[{l}"),
                Bound::Open(l) => format!("({l}"),
            };
            let h = match hi {
                Bound::Closed(h) => format!("{h}]"),
                Bound::Open(h) => format!("{h})"),
            };
            self.fail(&path, format!("{v} is outside {l}, {h}"));
        }
        v
    }

    fn int(&mut self, section: &str, key: &str, default: i64, prov: Provenance, lo: i64, hi: i64) -> i64 {
        let (path, value) = self.raw(section, key, prov);
        let v = match value {
            None => return default,
            Some(Value::Integer(i)) => *i,
            Some(other) => {
                self.fail(&path, format!("expected an integer, found {}", other.type_str()));
                return default;
            }
        };
        if !(lo..=hi).contains(&v) {
            self.fail(&path, format!("{v} is outside [{lo}, {hi}]"));
        }
        v
    }

    fn string(&mut self, section: &str, key: &str, default: &str, prov: Provenance) -> String {
        let (path, value) = self.raw(section, key, prov);
        match value {
            None => default.to_owned(),
            Some(Value::String(s)) => s.clone(),
            Some(other) => {
                self.fail(&path, format!("expected a string, found {}", other.type_str()));
                default.to_owned()
            }
        }
    }

    fn fibers(&mut self, default: &[(&str, f64)]) -> BTreeMap<String, f64> {
        let path = "network.fiber_km";
        let value = self.section("network").and_then(|t| t.get("fiber_km"));
        self.provenance.insert(path.into(), if value.is_some() { Provenance::Config } else { Provenance::Paper });
        let table = match value {
            None => return default.iter().map(|&(k, v)| (k.to_owned(), v)).collect(),
            Some(Value::Table(t)) => t,
            Some(other) => {
                self.fail(path, format!("expected a table of user = km, found {}", other.type_str()));
                return BTreeMap::new();
            }
        };
        let mut out = BTreeMap::new();
        for (user, v) in table {
            let p = format!("{path}.{user}");
            match v {
                Value::Float(_) | Value::Integer(_) => {
                    let km = v.as_float().unwrap_or_else(|| v.as_integer().unwrap_or(0) as f64);
                    if !(km.is_finite() && (0.0..=1000.0).contains(&km)) {
                        self.fail(&p, format!("{km} is outside [0, 1000]"));
                    }
                    out.insert(user.clone(), km);
                }
                other => self.fail(&p, format!("expected a number, found {}", other.type_str())),
            }
        }
        out
    }

    fn unknown_keys(&mut self) {
        for (name, value) in self.root {
            let Some(keys) = SCHEMA.iter().find(|(s, _)| s == name).map(|(_, k)| *k) else {
                self.fail(name, "unknown section".into());
                continue;
            };
            if let Value::Table(t) = value {
                for key in t.keys() {
                    if !keys.contains(&key.as_str()) {
                        self.fail(&format!("{name}.{key}"), "unknown key".into());
                    }
                }
            }
        }
    }
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("network", &["subnets", "subnet_size", "pump_channel", "first_offset", "grid_min", "grid_max", "fiber_km"]),
    ("source", &["pair_rate", "bandwidth_ghz", "correlation_jitter_ps", "excess_jitter_ps"]),
    ("losses", &["awg_db", "wdm_db", "inter_extra_wdm_passes", "splitter_db", "dispersion_db", "fiber_db_per_km"]),
    ("dispersion", &["magnitude_ps_per_nm"]),
    ("detector", &["efficiency", "dark_rate_hz", "jitter_ps", "dead_time_ps"]),
    ("qkd", &["frame_length_ps", "bins", "guard_band_ps", "beta", "monitor_window_ps"]),
    ("analysis", &["window_ps", "bin_width_ps", "histogram_range_ps"]),
    ("run", &["duration_s", "seed", "links", "truth"]),
];

fn resolve(root: &Table) -> Result<ResolvedConfig, ConfigError> {
    use Bound::{Closed, Open};
    use Provenance::{Calibration, Default as Conv, Paper};

    let mut r = Resolver { root, provenance: BTreeMap::new(), errors: Vec::new() };
    r.unknown_keys();
    let src = SourceConfig::default();
    let det = DetectorConfig::default();
    let loss = LossBudget::default();
    let qkd = QkdParams::default();
    let co = CoincidenceParams::default();
    let grid = ChannelGrid::default();
    let plan = PlanSpec::default();

    let network = NetworkConfig {
        subnets: r.int("network", "subnets", plan.subnets.into(), Paper, 1, 64) as u32,
        subnet_size: r.int("network", "subnet_size", plan.subnet_size.into(), Paper, 2, 1024) as u32,
        pump_channel: r.int("network", "pump_channel", plan.pump.into(), Paper, -1000, 1000) as i32,
        first_offset: r.int("network", "first_offset", plan.first_offset.into(), Paper, 1, 1000) as i32,
        grid_min: r.int("network", "grid_min", grid.min.into(), Paper, -1000, 1000) as i32,
        grid_max: r.int("network", "grid_max", grid.max.into(), Paper, -1000, 1000) as i32,
        fiber_km: r.fibers(&[("A1", 1.0), ("A2", 2.0)]),
    };
    let source = SourceSection {
        pair_rate: r.float("source", "pair_rate", src.pair_rate, Calibration, Open(0.0), Closed(1e10)),
        bandwidth_ghz: r.float("source", "bandwidth_ghz", src.bandwidth_ghz, Paper, Open(0.0), Closed(1000.0)),
        correlation_jitter_ps: r.float("source", "correlation_jitter_ps", src.correlation_jitter_ps, Calibration, Closed(0.0), Closed(1e5)),
        excess_jitter_ps: r.float("source", "excess_jitter_ps", src.excess_jitter_ps, Conv, Closed(0.0), Closed(1e5)),
    };
    let losses = LossSection {
        awg_db: r.float("losses", "awg_db", loss.awg_db, Paper, Closed(0.0), Closed(100.0)),
        wdm_db: r.float("losses", "wdm_db", loss.wdm_db, Paper, Closed(0.0), Closed(100.0)),
        inter_extra_wdm_passes: r.int("losses", "inter_extra_wdm_passes", loss.inter_extra_wdm_passes.into(), Calibration, 0, 8) as u32,
        splitter_db: r.float("losses", "splitter_db", loss.splitter_db, Paper, Closed(0.0), Closed(100.0)),
        dispersion_db: r.float("losses", "dispersion_db", loss.dispersion_db, Paper, Closed(0.0), Closed(100.0)),
        fiber_db_per_km: r.float("losses", "fiber_db_per_km", loss.fiber_db_per_km, Conv, Closed(0.0), Closed(10.0)),
    };
    let dispersion = DispersionSection {
        magnitude_ps_per_nm: r.float("dispersion", "magnitude_ps_per_nm", 1980.0, Paper, Closed(0.0), Closed(1e6)),
    };
    let detector = DetectorSection {
        efficiency: r.float("detector", "efficiency", det.efficiency, Paper, Open(0.0), Closed(1.0)),
        dark_rate_hz: r.float("detector", "dark_rate_hz", det.dark_rate, Paper, Closed(0.0), Closed(1e8)),
        jitter_ps: r.float("detector", "jitter_ps", det.jitter_ps, Calibration, Closed(0.0), Closed(1e5)),
        dead_time_ps: r.float("detector", "dead_time_ps", det.dead_time_ps, Calibration, Closed(0.0), Closed(1e9)),
    };
    let qkd = QkdSection {
        frame_length_ps: r.int("qkd", "frame_length_ps", qkd.frames.frame_length_ps, Calibration, 2, 1 << 40),
        bins: r.int("qkd", "bins", qkd.frames.bins.into(), Calibration, 2, 1 << 16) as u32,
        guard_band_ps: r.int("qkd", "guard_band_ps", qkd.frames.guard_ps, Calibration, 0, 1 << 40),
        beta: r.float("qkd", "beta", qkd.beta, Calibration, Open(0.0), Closed(1.0)),
        monitor_window_ps: r.int("qkd", "monitor_window_ps", qkd.monitor_window_ps, Calibration, 1, 1 << 40),
    };
    let analysis = AnalysisSection {
        window_ps: r.int("analysis", "window_ps", co.window_ps, Paper, 1, 1 << 40),
        bin_width_ps: r.int("analysis", "bin_width_ps", co.bin_width_ps, Conv, 1, 1 << 40),
        histogram_range_ps: r.int("analysis", "histogram_range_ps", co.histogram_range_ps, Calibration, 1, 1 << 40),
    };
    let run = RunSection {
        duration_s: r.float("run", "duration_s", 60.0, Conv, Open(0.0), Closed(MAX_DURATION_S)),
        seed: r.int("run", "seed", 1, Conv, 0, i64::MAX) as u64,
        links: r.string("run", "links", "default", Conv),
        truth: match r.string("run", "truth", "off", Conv).as_str() {
            "off" => TruthLevel::Off,
            "surviving" => TruthLevel::Surviving,
            "all" => TruthLevel::All,
            other => {
                r.fail("run.truth", format!("'{other}' is not one of off, surviving, all"));
                TruthLevel::Off
            }
        },
    };
    if r.errors.is_empty() {
        let config = ScenarioConfig { network, source, losses, dispersion, detector, qkd, analysis, run };
        Ok(ResolvedConfig { config, provenance: r.provenance })
    } else {
        Err(ConfigError::Invalid(r.errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ResolvedConfig, ConfigError> {
        ResolvedConfig::from_str_at(text, Path::new("test.toml"))
    }

    #[test]
    fn empty_file_gives_defaults() {
        let r = parse("").unwrap();
        assert_eq!(r.config.network.subnets, 5);
        assert_eq!(r.config.network.subnet_size, 8);
        assert_eq!(r.config.network.fiber_km.get("A2"), Some(&2.0));
        assert_eq!(r.provenance["losses.awg_db"], Provenance::Paper);
        assert_eq!(r.provenance["detector.jitter_ps"], Provenance::Calibration);
        assert!(r.config.check().is_ok());
    }

    #[test]
    fn explicit_values_are_tagged() {
        let r = parse("[network]\nsubnets = 5\nsubnet_size = 8\n").unwrap();
        assert_eq!(r.config, ResolvedConfig::default().config);
        assert_eq!(r.provenance["network.subnets"], Provenance::Config);
        assert_ne!(r.provenance, ResolvedConfig::default().provenance);
    }

    #[test]
    fn errors_name_fields() {
        let err = parse("[detector]\ndark_rate_hz = -1\n[source]\npair_rat = 3\n[bogus]\n").unwrap_err();
        let paths: Vec<_> = err.fields().iter().map(|f| f.path.as_str()).collect();
        assert!(paths.contains(&"detector.dark_rate_hz"), "{paths:?}");
        assert!(paths.contains(&"source.pair_rat"), "{paths:?}");
        assert!(paths.contains(&"bogus"), "{paths:?}");
        let err = parse("[qkd]\nbins = \"eight\"\n").unwrap_err();
        assert_eq!(err.fields()[0].path, "qkd.bins");
        assert!(matches!(parse("[run\n"), Err(ConfigError::Syntax { .. })));
    }

    #[test]
    fn cross_field_checks() {
        let r = parse("[network]\nsubnets = 6\n").unwrap();
        let e = r.config.check().unwrap_err();
        assert_eq!(e.fields()[0].path, "network");
        let r = parse("[network.fiber_km]\nZ9 = 1.0\n").unwrap();
        assert_eq!(r.config.check().unwrap_err().fields()[0].path, "network.fiber_km.Z9");
        let r = parse("[run]\nlinks = \"A1-A1\"\n").unwrap();
        assert_eq!(r.config.check().unwrap_err().fields()[0].path, "run.links");
    }

    #[test]
    fn hash_round_trips_through_metadata() {
        let cfg = ResolvedConfig::default().config;
        let json = serde_json::json!({ "config_hash": cfg.hash(), "config": cfg }).to_string();
        assert_eq!(ResolvedConfig::from_metadata(&json).unwrap(), cfg);
        let tampered = json.replace("\"seed\":1", "\"seed\":2");
        assert!(ResolvedConfig::from_metadata(&tampered).is_err());
    }
}
