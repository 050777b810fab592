//! Two-layer wavelength/space allocation.
//!
//! Layer one: every subnet of `M` users hangs off one passive 1×M splitter fed
//! by an *intra* channel pair, so both photons of a pair land on random users
//! of the same subnet. Layer two: every unordered pair of subnets `(a, b)` gets
//! one *inter* channel pair whose signal channel is muxed into subnet `a` and
//! whose idler channel is muxed into subnet `b`.
//!
//! Channel pairs are mirror images around the pump on the 100 GHz ITU grid.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Frequency of channel `C0` on the 100 GHz grid, THz.
const GRID_ORIGIN_THZ: f64 = 190.0;
/// Grid spacing, THz.
const GRID_SPACING_THZ: f64 = 0.1;
/// Speed of light in nm·THz.
pub const SPEED_OF_LIGHT_NM_THZ: f64 = 299_792.458;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("ITU channel C{index} is outside the configured grid C{min}..=C{max}")]
    ChannelOutOfRange { index: i32, min: i32, max: i32 },
    #[error("grid too narrow: {needed} channel pairs needed around the pump, only {available} fit")]
    Capacity { needed: usize, available: usize },
    #[error("invalid network shape: {0}")]
    Shape(String),
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("a link needs two distinct users, got {0} twice")]
    SameUser(UserId),
}

/// Usable slice of the ITU C-band grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChannelGrid {
    pub min: i32,
    pub max: i32,
}

impl Default for ChannelGrid {
    fn default() -> Self {
        Self { min: 21, max: 59 }
    }
}

impl ChannelGrid {
    pub fn new(min: i32, max: i32) -> Result<Self, PlanError> {
        if min > max {
            return Err(PlanError::Shape(format!("empty grid C{min}..=C{max}")));
        }
        // Keep frequencies positive.
        if (GRID_ORIGIN_THZ + GRID_SPACING_THZ * min as f64) <= 0.0 {
            return Err(PlanError::Shape(format!("grid minimum C{min} has no physical frequency")));
        }
        Ok(Self { min, max })
    }

    pub fn channel(&self, index: i32) -> Result<ItuChannel, PlanError> {
        if index < self.min || index > self.max {
            return Err(PlanError::ChannelOutOfRange { index, min: self.min, max: self.max });
        }
        Ok(ItuChannel(index))
    }

    pub fn contains(&self, channel: ItuChannel) -> bool {
        (self.min..=self.max).contains(&channel.0)
    }

    /// Grid frequency of a channel, checked against this grid.
    pub fn frequency_thz(&self, channel: ItuChannel) -> Result<f64, PlanError> {
        self.channel(channel.0).map(|c| c.frequency_thz())
    }

    /// The channel mirrored around `pump`: `2·pump − channel`.
    pub fn correlated_channel(&self, channel: ItuChannel, pump: ItuChannel) -> Result<ItuChannel, PlanError> {
        self.channel(2 * pump.0 - channel.0)
    }
}

/// An ITU C-band channel number (`C40` is 194.0 THz). Only the index is
/// stored; frequency and wavelength are always derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ItuChannel(i32);

impl ItuChannel {
    pub fn index(self) -> i32 {
        self.0
    }

    pub fn frequency_thz(self) -> f64 {
        GRID_ORIGIN_THZ + GRID_SPACING_THZ * self.0 as f64
    }

    pub fn wavelength_nm(self) -> f64 {
        SPEED_OF_LIGHT_NM_THZ / self.frequency_thz()
    }
}

impl fmt::Display for ItuChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

/// Frequency of `channel` on the default C21..C59 grid.
pub fn itu_channel_frequency(channel: ItuChannel) -> Result<f64, PlanError> {
    ChannelGrid::default().frequency_thz(channel)
}

/// Mirror of `channel` around `pump` on the default grid.
pub fn correlated_channel(channel: ItuChannel, pump: ItuChannel) -> Result<ItuChannel, PlanError> {
    ChannelGrid::default().correlated_channel(channel, pump)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ResourceId(pub u32);

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SubnetId(pub u32);

/// Global user index: `subnet · M + port`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Signal and idler channels of one entanglement resource. The signal is
/// always the higher channel index (higher frequency).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChannelPair {
    pub signal: ItuChannel,
    pub idler: ItuChannel,
    pub resource: ResourceId,
}

impl ChannelPair {
    pub fn offset(&self, pump: ItuChannel) -> i32 {
        self.signal.0 - pump.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "role", rename_all = "lowercase")]
pub enum ResourceRole {
    /// Both photons go to one subnet's splitter.
    Intra { subnet: SubnetId },
    /// Signal goes to `signal_subnet`, idler to `idler_subnet`.
    Inter { signal_subnet: SubnetId, idler_subnet: SubnetId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Resource {
    pub pair: ChannelPair,
    pub role: ResourceRole,
}

impl Resource {
    pub fn id(&self) -> ResourceId {
        self.pair.resource
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Intra,
    Inter,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::Intra => "intra",
            LinkKind::Inter => "inter",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LinkResource {
    pub resource: ResourceId,
    pub pair: ChannelPair,
    pub kind: LinkKind,
}

/// Inputs to [`build_plan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanSpec {
    pub subnets: u32,
    pub subnet_size: u32,
    pub pump: i32,
    /// Offset (in channels) of the innermost pair used. Channels closer to
    /// the pump than this are left dark.
    pub first_offset: i32,
    pub grid: ChannelGrid,
}

impl Default for PlanSpec {
    fn default() -> Self {
        Self { subnets: 5, subnet_size: 8, pump: 40, first_offset: 5, grid: ChannelGrid::default() }
    }
}

impl PlanSpec {
    pub fn new(subnets: u32, subnet_size: u32) -> Self {
        Self { subnets, subnet_size, ..Self::default() }
    }
}

/// A verified two-layer allocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkPlan {
    pump: ItuChannel,
    grid: ChannelGrid,
    subnets: u32,
    subnet_size: u32,
    /// Ordered by resource id: intra resources first, then inter resources
    /// in lexicographic subnet-pair order.
    resources: Vec<Resource>,
    /// `manifests[user]` lists the channels muxed into that user's splitter.
    manifests: Vec<Vec<ItuChannel>>,
    /// `inter_index[a * K + b]` is the resource index joining subnets a < b.
    #[serde(skip)]
    inter_index: Vec<Option<usize>>,
}

pub fn build_plan(spec: &PlanSpec) -> Result<NetworkPlan, PlanError> {
    let k = spec.subnets;
    let m = spec.subnet_size;
    if k < 1 {
        return Err(PlanError::Shape("at least one subnet is required".into()));
    }
    if m < 2 {
        return Err(PlanError::Shape("a subnet needs at least two users".into()));
    }
    if spec.first_offset < 1 {
        return Err(PlanError::Shape("first channel offset must be at least 1".into()));
    }
    let grid = spec.grid;
    let pump = grid.channel(spec.pump)?;

    let needed = (k as usize) * (k as usize + 1) / 2;
    let reach = (grid.max - pump.0).min(pump.0 - grid.min);
    let available = (reach - spec.first_offset + 1).max(0) as usize;
    if needed > available {
        return Err(PlanError::Capacity { needed, available });
    }

    let pair_at = |n: usize| -> Result<ChannelPair, PlanError> {
        let offset = spec.first_offset + n as i32;
        Ok(ChannelPair {
            signal: grid.channel(pump.0 + offset)?,
            idler: grid.channel(pump.0 - offset)?,
            resource: ResourceId(n as u32 + 1),
        })
    };

    let mut resources = Vec::with_capacity(needed);
    for s in 0..k {
        resources.push(Resource { pair: pair_at(resources.len())?, role: ResourceRole::Intra { subnet: SubnetId(s) } });
    }
    let mut inter_index = vec![None; (k * k) as usize];
    for a in 0..k {
        for b in (a + 1)..k {
            inter_index[(a * k + b) as usize] = Some(resources.len());
            resources.push(Resource {
                pair: pair_at(resources.len())?,
                role: ResourceRole::Inter { signal_subnet: SubnetId(a), idler_subnet: SubnetId(b) },
            });
        }
    }

    let mut subnet_channels: Vec<Vec<ItuChannel>> = vec![Vec::with_capacity(k as usize + 1); k as usize];
    for r in &resources {
        match r.role {
            ResourceRole::Intra { subnet } => {
                subnet_channels[subnet.0 as usize].push(r.pair.signal);
                subnet_channels[subnet.0 as usize].push(r.pair.idler);
            }
            ResourceRole::Inter { signal_subnet, idler_subnet } => {
                subnet_channels[signal_subnet.0 as usize].push(r.pair.signal);
                subnet_channels[idler_subnet.0 as usize].push(r.pair.idler);
            }
        }
    }
    let manifests = (0..k * m).map(|u| subnet_channels[(u / m) as usize].clone()).collect();

    Ok(NetworkPlan { pump, grid, subnets: k, subnet_size: m, resources, manifests, inter_index })
}

impl NetworkPlan {
    pub fn pump(&self) -> ItuChannel {
        self.pump
    }

    pub fn grid(&self) -> ChannelGrid {
        self.grid
    }

    pub fn subnets(&self) -> u32 {
        self.subnets
    }

    pub fn subnet_size(&self) -> u32 {
        self.subnet_size
    }

    pub fn user_count(&self) -> u32 {
        self.subnets * self.subnet_size
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> {
        (0..self.user_count()).map(UserId)
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    pub fn resource(&self, id: ResourceId) -> Option<&Resource> {
        let idx = (id.0 as usize).checked_sub(1)?;
        self.resources.get(idx)
    }

    /// `(subnet, pair)` for every intra resource.
    pub fn intra_resources(&self) -> impl Iterator<Item = (SubnetId, ChannelPair)> + '_ {
        self.resources.iter().filter_map(|r| match r.role {
            ResourceRole::Intra { subnet } => Some((subnet, r.pair)),
            _ => None,
        })
    }

    /// `(signal subnet, idler subnet, pair)` for every inter resource.
    pub fn inter_resources(&self) -> impl Iterator<Item = (SubnetId, SubnetId, ChannelPair)> + '_ {
        self.resources.iter().filter_map(|r| match r.role {
            ResourceRole::Inter { signal_subnet, idler_subnet } => Some((signal_subnet, idler_subnet, r.pair)),
            _ => None,
        })
    }

    pub fn manifest(&self, user: UserId) -> Option<&[ItuChannel]> {
        self.manifests.get(user.0 as usize).map(Vec::as_slice)
    }

    pub fn distinct_channels(&self) -> usize {
        self.manifests.iter().flatten().collect::<BTreeSet<_>>().len()
    }

    pub fn subnet_of(&self, user: UserId) -> SubnetId {
        SubnetId(user.0 / self.subnet_size)
    }

    pub fn port_of(&self, user: UserId) -> u32 {
        user.0 % self.subnet_size
    }

    pub fn user_at(&self, subnet: SubnetId, port: u32) -> UserId {
        UserId(subnet.0 * self.subnet_size + port)
    }

    pub fn contains_user(&self, user: UserId) -> bool {
        user.0 < self.user_count()
    }

    pub fn subnet_label(&self, subnet: SubnetId) -> String {
        if self.subnets <= 26 {
            char::from(b'A' + subnet.0 as u8).to_string()
        } else {
            format!("S{}", subnet.0 + 1)
        }
    }

    /// Human label such as `A1` (subnet letter, 1-based port).
    pub fn user_label(&self, user: UserId) -> String {
        let subnet = self.subnet_label(self.subnet_of(user));
        if self.subnets <= 26 {
            format!("{}{}", subnet, self.port_of(user) + 1)
        } else {
            format!("{}-{}", subnet, self.port_of(user) + 1)
        }
    }

    pub fn user_by_label(&self, label: &str) -> Result<UserId, PlanError> {
        self.users()
            .find(|&u| self.user_label(u) == label)
            .ok_or_else(|| PlanError::UnknownUser(label.to_string()))
    }

    /// Index into [`Self::resources`] of the inter resource joining two
    /// distinct subnets, in either order.
    fn inter_between(&self, a: SubnetId, b: SubnetId) -> Option<usize> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.inter_index.get((lo.0 * self.subnets + hi.0) as usize).copied().flatten()
    }

    /// The unique resource shared by two users.
    pub fn resource_for_link(&self, a: UserId, b: UserId) -> Result<LinkResource, PlanError> {
        for u in [a, b] {
            if !self.contains_user(u) {
                return Err(PlanError::UnknownUser(u.to_string()));
            }
        }
        if a == b {
            return Err(PlanError::SameUser(a));
        }
        let (sa, sb) = (self.subnet_of(a), self.subnet_of(b));
        if sa == sb {
            let r = &self.resources[sa.0 as usize];
            Ok(LinkResource { resource: r.id(), pair: r.pair, kind: LinkKind::Intra })
        } else {
            let idx = self.inter_between(sa, sb).expect("every subnet pair has an inter resource");
            let r = &self.resources[idx];
            Ok(LinkResource { resource: r.id(), pair: r.pair, kind: LinkKind::Inter })
        }
    }

    /// Writes the `plan.csv` export. Columns, in order:
    /// `record,id,subnet,channels,signal,idler,role,endpoints`.
    /// User rows fill `id,subnet,channels` (channels comma-joined, quoted);
    /// resource rows fill `id,signal,idler,role,endpoints` (endpoints are
    /// subnet labels, `signal-idler` for inter resources).
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["record", "id", "subnet", "channels", "signal", "idler", "role", "endpoints"])?;
        for user in self.users() {
            let channels = self.manifests[user.0 as usize].iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
            w.write_record([
                "user",
                &self.user_label(user),
                &self.subnet_label(self.subnet_of(user)),
                &channels,
                "",
                "",
                "",
                "",
            ])?;
        }
        for r in &self.resources {
            let (role, endpoints) = match r.role {
                ResourceRole::Intra { subnet } => ("intra", self.subnet_label(subnet)),
                ResourceRole::Inter { signal_subnet, idler_subnet } => (
                    "inter",
                    format!("{}-{}", self.subnet_label(signal_subnet), self.subnet_label(idler_subnet)),
                ),
            };
            w.write_record([
                "resource",
                &r.id().to_string(),
                "",
                "",
                &r.pair.signal.to_string(),
                &r.pair.idler.to_string(),
                role,
                &endpoints,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Outcome of checking every user pair against the plan's manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectivityReport {
    pub users: u32,
    pub links: usize,
    /// `(a, b, resource)` for every link with exactly one shared resource.
    pub link_resources: Vec<(UserId, UserId, ResourceId)>,
    /// `(a, b, number of usable resources)` for links that are not covered
    /// exactly once.
    pub failures: Vec<(UserId, UserId, usize)>,
}

impl ConnectivityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.link_resources.len() == self.links
    }
}

/// Enumerates every unordered user pair and counts the resources that can
/// deliver the signal photon to one user and the idler to the other, working
/// only from the per-user channel manifests.
pub fn verify_full_connectivity(plan: &NetworkPlan) -> ConnectivityReport {
    let n = plan.user_count();
    let sets: Vec<BTreeSet<ItuChannel>> = plan.manifests.iter().map(|m| m.iter().copied().collect()).collect();
    let mut link_resources = Vec::new();
    let mut failures = Vec::new();
    let mut links = 0;
    for a in 0..n {
        for b in (a + 1)..n {
            links += 1;
            let (ma, mb) = (&sets[a as usize], &sets[b as usize]);
            let shared: Vec<ResourceId> = plan
                .resources
                .iter()
                .filter(|r| {
                    let (s, i) = (r.pair.signal, r.pair.idler);
                    (ma.contains(&s) && mb.contains(&i)) || (ma.contains(&i) && mb.contains(&s))
                })
                .map(Resource::id)
                .collect();
            if let [only] = shared[..] {
                link_resources.push((UserId(a), UserId(b), only));
            } else {
                failures.push((UserId(a), UserId(b), shared.len()));
            }
        }
    }
    ConnectivityReport { users: n, links, link_resources, failures }
}

/// Channels a point-to-point mesh needs to connect `users` users: `N(N−1)`.
pub fn naive_channel_count(users: u64) -> u64 {
    users * users.saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(i: i32) -> ItuChannel {
        ChannelGrid::default().channel(i).unwrap()
    }

    #[test]
    fn grid_frequencies() {
        assert!((itu_channel_frequency(ch(40)).unwrap() - 194.0).abs() < 1e-12);
        assert!((ch(40).wavelength_nm() - 1545.32).abs() < 0.005);
        let (f35, f45) = (ch(35).frequency_thz(), ch(45).frequency_thz());
        assert!((f35 - 193.5).abs() < 1e-12 && (f45 - 194.5).abs() < 1e-12);
        assert!((f35 + f45 - 2.0 * 194.0).abs() < 1e-12);
        assert!((ch(21).frequency_thz() - 192.1).abs() < 1e-12);
        // Published ITU table: 192.10 THz ↔ 1560.61 nm.
        assert!((ch(21).wavelength_nm() - 1560.61).abs() < 0.005);
    }

    #[test]
    fn out_of_range_channels_rejected() {
        let grid = ChannelGrid::default();
        assert!(matches!(grid.channel(20), Err(PlanError::ChannelOutOfRange { index: 20, .. })));
        assert!(grid.channel(60).is_err());
        let wide = ChannelGrid::new(1, 79).unwrap();
        assert!(grid.frequency_thz(wide.channel(70).unwrap()).is_err());
    }

    #[test]
    fn mirror_channels() {
        assert_eq!(correlated_channel(ch(35), ch(40)).unwrap(), ch(45));
        assert_eq!(correlated_channel(ch(21), ch(40)).unwrap(), ch(59));
        assert_eq!(correlated_channel(ch(40), ch(40)).unwrap(), ch(40));
        assert!(correlated_channel(ch(21), ch(41)).is_err());
    }

    #[test]
    fn default_plan_shape() {
        let plan = build_plan(&PlanSpec::default()).unwrap();
        assert_eq!(plan.resources().len(), 15);
        assert_eq!(plan.user_count(), 40);
        assert_eq!(plan.distinct_channels(), 30);
        assert!(plan.users().all(|u| plan.manifest(u).unwrap().len() == 6));
        let intra: Vec<_> = plan.intra_resources().map(|(_, p)| (p.signal.index(), p.idler.index())).collect();
        assert_eq!(intra, vec![(45, 35), (46, 34), (47, 33), (48, 32), (49, 31)]);
        let last = plan.resources().last().unwrap().pair;
        assert_eq!((last.signal.index(), last.idler.index()), (59, 21));
        for r in plan.resources() {
            assert_eq!(r.pair.signal.index() + r.pair.idler.index(), 2 * plan.pump().index());
            assert!(r.pair.signal > r.pair.idler);
        }
    }

    #[test]
    fn degenerate_and_small_plans() {
        let one = build_plan(&PlanSpec::new(1, 8)).unwrap();
        assert_eq!(one.resources().len(), 1);
        assert!(one.users().all(|u| one.manifest(u).unwrap().len() == 2));
        let two = build_plan(&PlanSpec::new(2, 8)).unwrap();
        assert_eq!(two.resources().len(), 3);
        assert!(build_plan(&PlanSpec::new(1, 1)).is_err());
        assert!(build_plan(&PlanSpec::new(0, 4)).is_err());
    }

    #[test]
    fn capacity_error_when_grid_is_too_narrow() {
        let err = build_plan(&PlanSpec::new(6, 4)).unwrap_err();
        assert_eq!(err, PlanError::Capacity { needed: 21, available: 15 });
        let wide = PlanSpec { grid: ChannelGrid::new(1, 79).unwrap(), ..PlanSpec::new(6, 4) };
        assert_eq!(build_plan(&wide).unwrap().distinct_channels(), 42);
    }

    #[test]
    fn connectivity_small_cases() {
        let tiny = build_plan(&PlanSpec::new(1, 2)).unwrap();
        let report = verify_full_connectivity(&tiny);
        assert!(report.passed());
        assert_eq!(report.links, 1);
        assert_eq!(report.link_resources[0].2, ResourceId(1));

        let plan = build_plan(&PlanSpec::new(3, 4)).unwrap();
        let report = verify_full_connectivity(&plan);
        assert!(report.passed());
        assert_eq!(report.links, 66);
    }

    #[test]
    fn link_lookup_matches_figure_labels() {
        let plan = build_plan(&PlanSpec::default()).unwrap();
        let a1 = plan.user_by_label("A1").unwrap();
        let a5 = plan.user_by_label("A5").unwrap();
        let b3 = plan.user_by_label("B3").unwrap();
        let intra = plan.resource_for_link(a1, a5).unwrap();
        assert_eq!(intra.kind, LinkKind::Intra);
        assert_eq!((intra.pair.idler.index(), intra.pair.signal.index()), (35, 45));
        let inter = plan.resource_for_link(b3, a1).unwrap();
        assert_eq!(inter.kind, LinkKind::Inter);
        assert_eq!(inter.resource, ResourceId(6));
        assert_eq!(inter.pair.offset(plan.pump()), 10);
        assert!(matches!(plan.resource_for_link(a1, a1), Err(PlanError::SameUser(_))));
        assert!(matches!(plan.resource_for_link(a1, UserId(40)), Err(PlanError::UnknownUser(_))));
        assert!(plan.user_by_label("F1").is_err());
    }

    #[test]
    fn inter_orientation_sends_signal_to_lower_subnet() {
        let plan = build_plan(&PlanSpec::default()).unwrap();
        for (a, b, pair) in plan.inter_resources() {
            assert!(a < b);
            assert!(plan.manifest(plan.user_at(a, 0)).unwrap().contains(&pair.signal));
            assert!(plan.manifest(plan.user_at(b, 0)).unwrap().contains(&pair.idler));
            assert!(!plan.manifest(plan.user_at(b, 0)).unwrap().contains(&pair.signal));
        }
    }

    #[test]
    fn naive_counts() {
        assert_eq!(naive_channel_count(4), 12);
        assert_eq!(naive_channel_count(2), 2);
        assert_eq!(naive_channel_count(40), 1560);
    }

    #[test]
    fn csv_export_layout() {
        let plan = build_plan(&PlanSpec::new(2, 2)).unwrap();
        let mut buf = Vec::new();
        plan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "record,id,subnet,channels,signal,idler,role,endpoints");
        assert_eq!(lines[1], "user,A1,A,\"C45,C35,C47\",,,,");
        assert_eq!(lines[3], "user,B1,B,\"C46,C34,C33\",,,,");
        assert_eq!(lines[7], "resource,3,,,C47,C33,inter,A-B");
        assert_eq!(lines.len(), 8);
    }
}
