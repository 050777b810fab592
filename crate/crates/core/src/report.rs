//! Scenario runner: plan → simulation → coincidence analysis → key
//! post-processing, written out as a bundle of CSV/JSON files.
//!
//! Bundle layout (all paths relative to the output directory):
//!
//! | file | content |
//! |---|---|
//! | `plan.csv` | channel plan, see [`NetworkPlan::write_csv`] |
//! | `links.csv` | link matrix with secure rates |
//! | `keyrates.json` | per-link [`LinkRecord`]s and per-kind means |
//! | `histograms/<A1-A2>.csv` | correlation histogram of each analysed or probe link |
//! | `run-metadata.json` | [`RunMetadata`] |
//! | `tags/<user>-<path>.csv` | raw tags, only when requested |
//! | `truth.csv` | truth log, only when the truth level is not `off` |
//! | `figures/<fig>.csv` | figure tables, only when requested |
//!
//! Wall-clock timing goes to `timing.json`, which is not part of the
//! reproducible bundle.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, kind_means, link_matrix, AnalysisError, CorrelationHistogram, KindMeans};
use crate::config::{ConfigError, Provenance, ResolvedConfig, ScenarioConfig};
use crate::doqkd::{analyze_link_key, DiscardTally, LinkKeyReport, QkdError};
use crate::exec::{self, Execution};
use crate::photonics::{DispersionPath, Picos};
use crate::plan::{LinkKind, NetworkPlan, SubnetId, UserId};
use crate::sim::{run_scenario, SimError, SinglesSummary};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Qkd(#[from] QkdError),
    #[error("bundle lacks links needed for {figure}: {}", .missing.join(", "))]
    MissingLinks { figure: Figure, missing: Vec<String> },
    #[error("{}: {message}", .path.display())]
    Format { path: PathBuf, message: String },
}

impl RunError {
    /// Process exit code: 2 for invalid input, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }

    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
        move |source| RunError::Io { path: path.to_owned(), source }
    }
}

/// Which user pairs to analyse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkSelection {
    /// Every intra link of the first subnet plus the first user of each
    /// subnet linked to the first user of every later subnet.
    Default,
    All,
    List(Vec<String>),
}

impl LinkSelection {
    pub fn parse(text: &str) -> Result<Self, String> {
        match text.trim() {
            "default" => Ok(LinkSelection::Default),
            "all" => Ok(LinkSelection::All),
            "" => Err("empty link list".into()),
            list => Ok(LinkSelection::List(list.split(',').map(|s| s.trim().to_owned()).collect())),
        }
    }

    pub fn resolve(&self, plan: &NetworkPlan) -> Result<Vec<(UserId, UserId)>, String> {
        match self {
            LinkSelection::Default => Ok(default_links(plan)),
            LinkSelection::All => {
                let users: Vec<_> = plan.users().collect();
                Ok(users.iter().enumerate().flat_map(|(i, &a)| users[i + 1..].iter().map(move |&b| (a, b))).collect())
            }
            LinkSelection::List(items) => {
                let mut out = Vec::new();
                let mut errors = Vec::new();
                for item in items {
                    match parse_link(plan, item) {
                        Some((a, b)) if a == b => errors.push(format!("'{item}' joins a user to itself")),
                        Some(pair) => {
                            let key = (pair.0.min(pair.1), pair.0.max(pair.1));
                            if out.iter().any(|&(x, y): &(UserId, UserId)| (x.min(y), x.max(y)) == key) {
                                errors.push(format!("'{item}' is listed twice"));
                            } else {
                                out.push(pair);
                            }
                        }
                        None => errors.push(format!("'{item}' is not a link between two known users")),
                    }
                }
                if errors.is_empty() {
                    Ok(out)
                } else {
                    Err(errors.join("; "))
                }
            }
        }
    }
}

/// Splits `A1-B2` at the first dash that leaves two valid user labels.
fn parse_link(plan: &NetworkPlan, text: &str) -> Option<(UserId, UserId)> {
    text.match_indices('-').find_map(|(i, _)| {
        let a = plan.user_by_label(&text[..i]).ok()?;
        let b = plan.user_by_label(&text[i + 1..]).ok()?;
        Some((a, b))
    })
}

fn intra_links(plan: &NetworkPlan, subnet: SubnetId) -> Vec<(UserId, UserId)> {
    let m = plan.subnet_size();
    (0..m).flat_map(|i| (i + 1..m).map(move |j| (plan.user_at(subnet, i), plan.user_at(subnet, j)))).collect()
}

/// First user of subnet `x` to first user of subnet `y`, for all `x < y`.
fn representative_inter_links(plan: &NetworkPlan) -> Vec<(UserId, UserId)> {
    let k = plan.subnets();
    (0..k)
        .flat_map(|x| (x + 1..k).map(move |y| (plan.user_at(SubnetId(x), 0), plan.user_at(SubnetId(y), 0))))
        .collect()
}

/// First two users of every subnet, one per intra resource.
fn intra_probe_links(plan: &NetworkPlan) -> Vec<(UserId, UserId)> {
    if plan.subnet_size() < 2 {
        return Vec::new();
    }
    (0..plan.subnets()).map(|s| (plan.user_at(SubnetId(s), 0), plan.user_at(SubnetId(s), 1))).collect()
}

pub fn default_links(plan: &NetworkPlan) -> Vec<(UserId, UserId)> {
    let mut links = intra_links(plan, SubnetId(0));
    links.extend(representative_inter_links(plan));
    links
}

pub fn link_label(plan: &NetworkPlan, a: UserId, b: UserId) -> String {
    format!("{}-{}", plan.user_label(a), plan.user_label(b))
}

/// One analysed link, as stored in `keyrates.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub link: String,
    pub user_a: String,
    pub user_b: String,
    pub kind: LinkKind,
    pub resource_id: u32,
    pub signal: String,
    pub idler: String,
    pub offset_ps: Picos,
    pub coincidences: u64,
    pub coincidence_rate_hz: f64,
    pub car: f64,
    pub car_capped: bool,
    pub sifted_symbols: usize,
    pub sifted_rate_bps: f64,
    pub qber: Option<f64>,
    pub mutual_information: Option<f64>,
    pub secret_fraction: Option<f64>,
    pub secure_rate_bps: f64,
    pub discarded: DiscardTally,
    pub monitor_pairs: usize,
    pub monitor_spread_ps: Option<f64>,
    pub monitor_expected_ps: f64,
    pub monitor_anomalous: bool,
    pub matched_spread_ps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateSummary {
    pub coincidence_rate_hz: KindMeans,
    pub secure_rate_bps: KindMeans,
    pub max_qber: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRatesFile {
    pub summary: KeyRateSummary,
    pub links: Vec<LinkRecord>,
}

/// Histogram of one link, kept for figure output.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRecord {
    pub link: String,
    pub kind: LinkKind,
    pub resource_id: u32,
    pub histogram: CorrelationHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub subnets: u32,
    pub subnet_size: u32,
    pub users: u32,
    pub resources: usize,
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinglesRecord {
    pub user: String,
    pub path: DispersionPath,
    pub counts: u64,
    pub rate_hz: f64,
}

/// Contents of `run-metadata.json`. `config` and `seed` reproduce the
/// bundle exactly; `config_hash` is the SHA-256 of the canonical config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub duration_s: f64,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub provenance: BTreeMap<String, Provenance>,
    pub plan: PlanSummary,
    pub link_count: usize,
    pub emitted_pairs: Vec<u64>,
    pub singles: Vec<SinglesRecord>,
    pub files: Vec<String>,
}

/// Contents of `timing.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_s: f64,
    pub simulate_s: f64,
    pub analyse_s: f64,
    pub execution: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub execution: Execution,
    /// Users whose raw tags are dumped.
    pub dump_tags: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub metadata: RunMetadata,
    pub keyrates: KeyRatesFile,
    pub histograms: Vec<HistogramRecord>,
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(RunError::io(parent))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(RunError::io(&tmp))?;
    std::fs::rename(&tmp, path).map_err(RunError::io(path))
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serialisable");
    v.push(b'\n');
    v
}

fn link_record(plan: &NetworkPlan, l: &analysis::LinkCoincidences, k: &LinkKeyReport) -> LinkRecord {
    let pair = plan.resource(l.resource).expect("resource from plan").pair;
    let r = k.report;
    LinkRecord {
        link: link_label(plan, l.user_a, l.user_b),
        user_a: plan.user_label(l.user_a),
        user_b: plan.user_label(l.user_b),
        kind: l.kind,
        resource_id: l.resource.0,
        signal: pair.signal.to_string(),
        idler: pair.idler.to_string(),
        offset_ps: l.offset_ps,
        coincidences: l.coincidences,
        coincidence_rate_hz: l.rate_hz(),
        car: l.car.ratio,
        car_capped: l.car.capped,
        sifted_symbols: k.sifted_symbols,
        sifted_rate_bps: r.map_or(0.0, |r| r.sifted_rate),
        qber: r.map(|r| r.qber),
        mutual_information: r.map(|r| r.mutual_information),
        secret_fraction: r.map(|r| r.secret_fraction),
        secure_rate_bps: k.secure_rate(),
        discarded: k.discarded,
        monitor_pairs: k.monitor.pairs,
        monitor_spread_ps: k.monitor.spread_ps,
        monitor_expected_ps: k.monitor.expected_ps,
        monitor_anomalous: k.monitor.anomalous,
        matched_spread_ps: k.matched_spread_ps,
    }
}

pub fn summarize(links: &[LinkRecord]) -> KeyRateSummary {
    KeyRateSummary {
        coincidence_rate_hz: kind_means(links.iter().map(|l| (l.kind, l.coincidence_rate_hz))),
        secure_rate_bps: kind_means(links.iter().map(|l| (l.kind, l.secure_rate_bps))),
        max_qber: links.iter().filter_map(|l| l.qber).reduce(f64::max),
    }
}

fn histogram_meta(plan: &NetworkPlan, h: &HistogramRecord) -> Vec<(&'static str, String)> {
    let pair = plan.resource(crate::plan::ResourceId(h.resource_id)).expect("resource from plan").pair;
    vec![
        ("link", h.link.clone()),
        ("kind", h.kind.to_string()),
        ("resource_id", h.resource_id.to_string()),
        ("channels", format!("{}/{}", pair.signal, pair.idler)),
    ]
}

/// Runs the whole pipeline and writes the bundle into `out_dir`.
pub fn run(resolved: &ResolvedConfig, out_dir: &Path, options: &RunOptions) -> Result<ReportBundle, RunError> {
    let started = Instant::now();
    let config = &resolved.config;
    let plan = config.check()?;
    let scenario = crate::sim::Scenario { execution: options.execution, ..config.scenario(&plan)? };
    let selection = LinkSelection::parse(&config.run.links)
        .and_then(|s| s.resolve(&plan))
        .map_err(|message| ConfigError::Invalid(vec![crate::config::FieldError { path: "run.links".into(), message }]))?;
    let dump_users = options
        .dump_tags
        .iter()
        .map(|label| {
            plan.user_by_label(label).map_err(|e| {
                ConfigError::Invalid(vec![crate::config::FieldError { path: "--dump-tags".into(), message: e.to_string() }])
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let output = run_scenario(&plan, &scenario, config.run.duration_s, config.run.seed)?;
    let simulated = started.elapsed();

    let coincidence = config.coincidence_params();
    let qkd = config.qkd_params();
    let matrix = link_matrix(&output, &plan, &scenario, &selection, &coincidence, options.execution)?;
    let keys = exec::map_slice(options.execution, &selection, |&(a, b)| analyze_link_key(&output, &plan, &scenario, a, b, &qkd))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let records: Vec<LinkRecord> = matrix.iter().zip(&keys).map(|(l, k)| link_record(&plan, l, k)).collect();

    let mut probes: Vec<(UserId, UserId)> = intra_probe_links(&plan);
    probes.extend(representative_inter_links(&plan));
    let analysed: BTreeMap<(UserId, UserId), usize> = selection.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    probes.retain(|p| !analysed.contains_key(p));
    let probe_matrix = link_matrix(&output, &plan, &scenario, &probes, &coincidence, options.execution)?;
    let histograms: Vec<HistogramRecord> = matrix
        .iter()
        .chain(&probe_matrix)
        .map(|l| HistogramRecord {
            link: link_label(&plan, l.user_a, l.user_b),
            kind: l.kind,
            resource_id: l.resource.0,
            histogram: l.histogram.clone(),
        })
        .collect();
    drop(matrix);
    drop(probe_matrix);
    let analysed_at = started.elapsed();

    let mut files = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<(), RunError> {
        write_atomic(&out_dir.join(&name), &bytes)?;
        files.push(name);
        Ok(())
    };

    let mut buf = Vec::new();
    plan.write_csv(&mut buf).map_err(|e| RunError::Format { path: out_dir.join("plan.csv"), message: e.to_string() })?;
    put("plan.csv".into(), buf)?;

    let mut buf = Vec::new();
    write_links_csv(&records, &mut buf).map_err(|e| RunError::Format { path: out_dir.join("links.csv"), message: e.to_string() })?;
    put("links.csv".into(), buf)?;

    let keyrates = KeyRatesFile { summary: summarize(&records), links: records };
    put("keyrates.json".into(), json_bytes(&keyrates))?;

    for h in &histograms {
        let mut buf = Vec::new();
        h.histogram.write_csv(&histogram_meta(&plan, h), 0, &mut buf).expect("in-memory write");
        put(format!("histograms/{}.csv", h.link), buf)?;
    }

    for &user in &dump_users {
        for path in DispersionPath::BOTH {
            let mut buf = Vec::new();
            output.stream(user, path).write_dump(&plan, output.duration_ps, output.seed, &mut buf).expect("in-memory write");
            put(format!("tags/{}-{}.csv", plan.user_label(user), path.as_str()), buf)?;
        }
    }

    if let Some(truth) = &output.truth {
        let mut buf = Vec::new();
        truth.write_csv(&plan, &mut buf).map_err(|e| RunError::Format { path: out_dir.join("truth.csv"), message: e.to_string() })?;
        put("truth.csv".into(), buf)?;
    }

    let metadata = RunMetadata {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.run.seed,
        duration_s: config.run.duration_s,
        config_hash: config.hash(),
        config: config.clone(),
        provenance: resolved.provenance.clone(),
        plan: PlanSummary {
            subnets: plan.subnets(),
            subnet_size: plan.subnet_size(),
            users: plan.user_count(),
            resources: plan.resources().len(),
            channels: plan.distinct_channels(),
        },
        link_count: keyrates.links.len(),
        emitted_pairs: output.emitted.clone(),
        singles: output.singles.iter().map(|s| singles_record(&plan, s)).collect(),
        files: files.iter().cloned().chain(["run-metadata.json".to_owned()]).collect(),
    };
    write_atomic(&out_dir.join("run-metadata.json"), &json_bytes(&metadata))?;

    let timing = Timing {
        wall_time_s: started.elapsed().as_secs_f64(),
        simulate_s: simulated.as_secs_f64(),
        analyse_s: (analysed_at - simulated).as_secs_f64(),
        execution: format!("{:?}", options.execution).to_lowercase(),
    };
    write_atomic(&out_dir.join("timing.json"), &json_bytes(&timing))?;

    Ok(ReportBundle { dir: out_dir.to_owned(), metadata, keyrates, histograms })
}

fn singles_record(plan: &NetworkPlan, s: &SinglesSummary) -> SinglesRecord {
    SinglesRecord { user: plan.user_label(s.user), path: s.path, counts: s.counts, rate_hz: s.rate_hz }
}

/// `links.csv`: the columns of [`analysis::write_link_matrix_csv`] plus
/// rates.
fn write_links_csv<W: std::io::Write>(records: &[LinkRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_a", "user_b", "kind", "resource_id", "coincidences", "car", "coincidence_rate_hz", "secure_rate_bps"])?;
    for r in records {
        w.write_record([
            r.user_a.clone(),
            r.user_b.clone(),
            r.kind.to_string(),
            r.resource_id.to_string(),
            r.coincidences.to_string(),
            format!("{:.3}", r.car),
            format!("{:.4}", r.coincidence_rate_hz),
            format!("{:.4}", r.secure_rate_bps),
        ])?;
    }
    w.flush()?;
    Ok(())
}

impl ReportBundle {
    /// Reads a bundle back from disk.
    pub fn load(dir: &Path) -> Result<Self, RunError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| RunError::Io { path, source })
        };
        fn parse<T: serde::de::DeserializeOwned>(dir: &Path, name: &str, text: &str) -> Result<T, RunError> {
            serde_json::from_str(text).map_err(|e| RunError::Format { path: dir.join(name), message: e.to_string() })
        }
        let metadata: RunMetadata = parse(dir, "run-metadata.json", &read("run-metadata.json")?)?;
        let keyrates: KeyRatesFile = parse(dir, "keyrates.json", &read("keyrates.json")?)?;
        let mut histograms = Vec::new();
        for name in metadata.files.iter().filter(|f| f.starts_with("histograms/")) {
            histograms.push(parse_histogram(&dir.join(name), &read(name)?)?);
        }
        Ok(Self { dir: dir.to_owned(), metadata, keyrates, histograms })
    }
}

fn parse_histogram(path: &Path, text: &str) -> Result<HistogramRecord, RunError> {
    let bad = |message: String| RunError::Format { path: path.to_owned(), message };
    let mut meta = BTreeMap::new();
    let mut delays = Vec::new();
    let mut counts = Vec::new();
    for line in text.lines() {
        if let Some(kv) = line.strip_prefix("# ") {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("bad metadata line '{line}'")))?;
            meta.insert(k.to_owned(), v.to_owned());
        } else if line != "delay_ps,counts" {
            let (d, c) = line.split_once(',').ok_or_else(|| bad(format!("bad row '{line}'")))?;
            delays.push(d.parse::<Picos>().map_err(|e| bad(e.to_string()))?);
            counts.push(c.parse::<u64>().map_err(|e| bad(e.to_string()))?);
        }
    }
    let get = |k: &str| meta.get(k).cloned().ok_or_else(|| bad(format!("missing '{k}'")));
    let num = |k: &str| get(k)?.parse::<i64>().map_err(|e| bad(e.to_string()));
    let kind = match get("kind")?.as_str() {
        "intra" => LinkKind::Intra,
        "inter" => LinkKind::Inter,
        other => return Err(bad(format!("unknown kind '{other}'"))),
    };
    Ok(HistogramRecord {
        link: get("link")?,
        kind,
        resource_id: num("resource_id")? as u32,
        histogram: CorrelationHistogram {
            bin_width_ps: num("bin_width_ps")?,
            start_ps: delays.first().copied().unwrap_or(0),
            counts,
            singles_a: num("singles_a")? as u64,
            singles_b: num("singles_b")? as u64,
            duration_ps: num("duration_ps")?,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Histograms of one link per intra resource.
    Fig3a,
    /// Histograms of the representative inter links.
    Fig3b,
    /// Secure rates of the intra links of the first subnet, numbered.
    Fig4a,
    /// Secure rates of the representative inter links, labelled by subnet pair.
    Fig4b,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig3a, Figure::Fig3b, Figure::Fig4a, Figure::Fig4b];

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig3a => "fig3a",
            Figure::Fig3b => "fig3b",
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Figure::ALL.into_iter().find(|f| f.as_str() == s).ok_or_else(|| format!("unknown figure '{s}' (fig3a, fig3b, fig4a, fig4b)"))
    }
}

/// Label and link name of every row a figure needs, in plotting order.
fn figure_rows(plan: &NetworkPlan, figure: Figure) -> Vec<(String, String)> {
    let subnet_pair = |a: UserId, b: UserId| format!("{}{}", plan.subnet_label(plan.subnet_of(a)), plan.subnet_label(plan.subnet_of(b)));
    match figure {
        Figure::Fig3a => intra_probe_links(plan)
            .into_iter()
            .map(|(a, b)| (plan.subnet_label(plan.subnet_of(a)), link_label(plan, a, b)))
            .collect(),
        Figure::Fig3b | Figure::Fig4b => representative_inter_links(plan)
            .into_iter()
            .map(|(a, b)| (subnet_pair(a, b), link_label(plan, a, b)))
            .collect(),
        Figure::Fig4a => intra_links(plan, SubnetId(0))
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| ((i + 1).to_string(), link_label(plan, a, b)))
            .collect(),
    }
}

/// CSV table for one figure, built from the bundle's records.
pub fn emit_figure_data(bundle: &ReportBundle, figure: Figure) -> Result<String, RunError> {
    let plan = bundle.metadata.config.check()?;
    let rows = figure_rows(&plan, figure);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| RunError::Format { path: bundle.dir.join(format!("figures/{figure}.csv")), message: e.to_string() };
    match figure {
        Figure::Fig3a | Figure::Fig3b => {
            let by_link: BTreeMap<&str, &HistogramRecord> = bundle.histograms.iter().map(|h| (h.link.as_str(), h)).collect();
            let missing: Vec<String> = rows.iter().filter(|(_, l)| !by_link.contains_key(l.as_str())).map(|(_, l)| l.clone()).collect();
            if !missing.is_empty() {
                return Err(RunError::MissingLinks { figure, missing });
            }
            w.write_record(["label", "link", "resource_id", "delay_ps", "counts"]).map_err(csv_err)?;
            for (label, link) in &rows {
                let h = by_link[link.as_str()];
                for (i, c) in h.histogram.counts.iter().enumerate() {
                    w.write_record([label.clone(), link.clone(), h.resource_id.to_string(), h.histogram.bin_start(i).to_string(), c.to_string()])
                        .map_err(csv_err)?;
                }
            }
        }
        Figure::Fig4a | Figure::Fig4b => {
            let by_link: BTreeMap<&str, &LinkRecord> = bundle.keyrates.links.iter().map(|r| (r.link.as_str(), r)).collect();
            let missing: Vec<String> = rows.iter().filter(|(_, l)| !by_link.contains_key(l.as_str())).map(|(_, l)| l.clone()).collect();
            if !missing.is_empty() {
                return Err(RunError::MissingLinks { figure, missing });
            }
            w.write_record(["label", "link", "secure_rate_bps", "qber", "sifted_rate_bps", "coincidence_rate_hz", "car"])
                .map_err(csv_err)?;
            for (label, link) in &rows {
                let r = by_link[link.as_str()];
                w.write_record([
                    label.clone(),
                    link.clone(),
                    format!("{:.4}", r.secure_rate_bps),
                    r.qber.map_or(String::new(), |q| format!("{q:.5}")),
                    format!("{:.4}", r.sifted_rate_bps),
                    format!("{:.4}", r.coincidence_rate_hz),
                    format!("{:.3}", r.car),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `figures/<figure>.csv` into the bundle directory.
pub fn write_figure(bundle: &ReportBundle, figure: Figure) -> Result<PathBuf, RunError> {
    let text = emit_figure_data(bundle, figure)?;
    let path = bundle.dir.join("figures").join(format!("{figure}.csv"));
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
