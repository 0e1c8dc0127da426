//! Core network topology and the static power model of every device on the
//! delivery chain: IP-over-WDM core, metro Ethernet, OLT access and the data
//! centres at either end.
//!
//! All formulas here are pure functions of a [`PowerConfig`]; the MILP builder
//! turns them into objective coefficients.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = u32;

/// Canonical NSFNET instance shipped with the crate.
pub const NSFNET_TOPO: &str = include_str!("../data/nsfnet.topo");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub km: f64,
}

impl Link {
    pub fn other(&self, node: NodeId) -> Option<NodeId> {
        if node == self.a {
            Some(self.b)
        } else if node == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    nodes: Vec<NodeId>,
    cdc_nodes: Vec<NodeId>,
    links: Vec<Link>,
}

impl Topology {
    /// Validates node/link structure. Connectivity is checked separately by
    /// [`Topology::check_connected`] so that disconnected graphs can still be
    /// represented and diagnosed.
    pub fn new(nodes: Vec<NodeId>, links: Vec<Link>, mut cdc_nodes: Vec<NodeId>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Topology("no nodes".into()));
        }
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Topology("duplicate node id".into()));
        }
        for (i, l) in links.iter().enumerate() {
            if !(l.km > 0.0 && l.km.is_finite()) {
                return Err(Error::Topology(format!("link {i} ({}-{}) has non-positive length {}", l.a, l.b, l.km)));
            }
            if l.a == l.b {
                return Err(Error::Topology(format!("link {i} is a self loop on node {}", l.a)));
            }
            for end in [l.a, l.b] {
                if sorted.binary_search(&end).is_err() {
                    return Err(Error::Topology(format!("link {i} references unknown node {end}")));
                }
            }
        }
        if cdc_nodes.is_empty() {
            return Err(Error::Topology("cdc_nodes is empty".into()));
        }
        cdc_nodes.sort_unstable();
        cdc_nodes.dedup();
        if let Some(c) = cdc_nodes.iter().find(|c| sorted.binary_search(c).is_err()) {
            return Err(Error::Topology(format!("cdc node {c} is not a topology node")));
        }
        Ok(Self { nodes, cdc_nodes, links })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: Topology = toml::from_str(text)?;
        let topo = Topology::new(raw.nodes, raw.links, raw.cdc_nodes)?;
        topo.check_connected()?;
        Ok(topo)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("topology serialises")
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn cdc_nodes(&self) -> &[NodeId] {
        &self.cdc_nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn index_of(&self, node: NodeId) -> Option<usize> {
        self.nodes.iter().position(|&n| n == node)
    }

    pub fn is_cdc(&self, node: NodeId) -> bool {
        self.cdc_nodes.binary_search(&node).is_ok()
    }

    /// (link index, neighbour) pairs for `node`.
    pub fn neighbours(&self, node: NodeId) -> impl Iterator<Item = (usize, NodeId)> + '_ {
        self.links.iter().enumerate().filter_map(move |(i, l)| l.other(node).map(|o| (i, o)))
    }

    pub fn unreachable_from(&self, start: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        if let Some(i) = self.index_of(start) {
            seen[i] = true;
        }
        while let Some(u) = stack.pop() {
            for (_, v) in self.neighbours(u) {
                let vi = self.index_of(v).expect("validated link end");
                if !seen[vi] {
                    seen[vi] = true;
                    stack.push(v);
                }
            }
        }
        let mut out: Vec<NodeId> = self.nodes.iter().zip(&seen).filter(|(_, s)| !**s).map(|(n, _)| *n).collect();
        out.sort_unstable();
        out
    }

    pub fn check_connected(&self) -> Result<()> {
        let unreachable = self.unreachable_from(self.nodes[0]);
        if unreachable.is_empty() {
            Ok(())
        } else {
            Err(Error::Disconnected { unreachable })
        }
    }
}

/// The 14-node NSFNET core with CDCs at nodes 2, 3, 7, 8 and 9.
pub fn build_nsfnet() -> Topology {
    Topology::from_toml_str(NSFNET_TOPO).expect("bundled NSFNET topology is valid")
}

/// Device power coefficients, capacities and facility overheads.
///
/// The router port, transponder, EDFA and regenerator powers have no agreed
/// published values at this scale and must be supplied; see
/// [`PowerConfig::desk_default`] for the values used by the examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub p_router_port_w: f64,
    pub p_transponder_w: f64,
    pub p_edfa_w: f64,
    pub p_regen_w: f64,
    pub line_rate_gbps: f64,
    pub span_km: f64,
    pub reach_km: f64,
    pub wavelengths_per_fiber: f64,
    pub p_metro_port_w: f64,
    pub metro_port_gbps: f64,
    pub metro_redundancy: f64,
    pub p_olt_w: f64,
    pub olt_capacity_gbps: f64,
    pub p_server_w_per_gbps: f64,
    pub server_capacity_gbps: f64,
    pub net_overhead_ratio: f64,
    pub pue_cloud: f64,
    pub pue_fog: f64,
    pub fdc_capacity_gbps: f64,
}

impl PowerConfig {
    /// Desk-scale defaults. Core device powers (300/100/8/150 W) are
    /// placeholders, not measured equipment values.
    pub fn desk_default() -> Self {
        Self {
            p_router_port_w: 300.0,
            p_transponder_w: 100.0,
            p_edfa_w: 8.0,
            p_regen_w: 150.0,
            line_rate_gbps: 40.0,
            span_km: 80.0,
            reach_km: 2500.0,
            wavelengths_per_fiber: 40.0,
            p_metro_port_w: 50.0,
            metro_port_gbps: 40.0,
            metro_redundancy: 2.0,
            p_olt_w: 904.0,
            olt_capacity_gbps: 160.0,
            p_server_w_per_gbps: 221.1,
            server_capacity_gbps: 1.8,
            net_overhead_ratio: 1.3,
            pue_cloud: 1.1,
            pue_fog: 1.1,
            fdc_capacity_gbps: 160.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("p_router_port_w", self.p_router_port_w),
            ("p_transponder_w", self.p_transponder_w),
            ("p_edfa_w", self.p_edfa_w),
            ("p_regen_w", self.p_regen_w),
            ("p_metro_port_w", self.p_metro_port_w),
            ("p_olt_w", self.p_olt_w),
            ("p_server_w_per_gbps", self.p_server_w_per_gbps),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        let positive = [
            ("line_rate_gbps", self.line_rate_gbps),
            ("span_km", self.span_km),
            ("reach_km", self.reach_km),
            ("wavelengths_per_fiber", self.wavelengths_per_fiber),
            ("metro_port_gbps", self.metro_port_gbps),
            ("metro_redundancy", self.metro_redundancy),
            ("olt_capacity_gbps", self.olt_capacity_gbps),
            ("server_capacity_gbps", self.server_capacity_gbps),
            ("fdc_capacity_gbps", self.fdc_capacity_gbps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        let at_least_one = [
            ("net_overhead_ratio", self.net_overhead_ratio),
            ("pue_cloud", self.pue_cloud),
            ("pue_fog", self.pue_fog),
        ];
        for (name, v) in at_least_one {
            if !(v >= 1.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 1, got {v}")));
            }
        }
        Ok(())
    }
}

/// How EDFA power enters the cost of a lightpath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdfaMode {
    /// Per-link amplifier power shared evenly by the wavelengths of a fibre.
    #[default]
    Amortized,
    /// Amplifiers are charged per lit fibre by the MILP; nothing per wavelength.
    PerFiber,
}

/// A routed path from a cloud node to a destination node.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Node sequence, source first. A single entry for self-delivery.
    pub nodes: Vec<NodeId>,
    /// Indices into [`Topology::links`], in traversal order.
    pub links: Vec<usize>,
    pub link_km: Vec<f64>,
    pub km: f64,
}

impl Path {
    pub fn hops(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

/// Shortest paths from every CDC node to every node, keyed by (cloud, dest).
#[derive(Debug, Clone, PartialEq)]
pub struct PathTable {
    paths: BTreeMap<(NodeId, NodeId), Path>,
}

impl PathTable {
    pub fn get(&self, cloud: NodeId, dest: NodeId) -> Option<&Path> {
        self.paths.get(&(cloud, dest))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(NodeId, NodeId), &Path)> {
        self.paths.iter()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

#[derive(Debug, Clone)]
struct Label {
    km: f64,
    nodes: Vec<NodeId>,
    links: Vec<usize>,
}

impl Label {
    fn key_cmp(&self, other: &Self) -> Ordering {
        let tol = 1e-9 * self.km.abs().max(other.km.abs()).max(1.0);
        if (self.km - other.km).abs() > tol {
            return self.km.total_cmp(&other.km);
        }
        self.links.len().cmp(&other.links.len()).then_with(|| self.nodes.cmp(&other.nodes))
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}
impl Eq for Label {}
impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Label {
    // reversed: BinaryHeap pops the smallest label first
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Minimum-km paths from each CDC to every node. Ties go to fewer hops, then
/// to the lexicographically smallest node sequence.
pub fn shortest_paths(topo: &Topology) -> Result<PathTable> {
    topo.check_connected()?;
    let mut paths = BTreeMap::new();
    for &src in topo.cdc_nodes() {
        let mut best: Vec<Option<Label>> = vec![None; topo.node_count()];
        let mut done = vec![false; topo.node_count()];
        let mut heap = BinaryHeap::new();
        heap.push(Label { km: 0.0, nodes: vec![src], links: Vec::new() });
        while let Some(label) = heap.pop() {
            let u = *label.nodes.last().expect("non-empty label");
            let ui = topo.index_of(u).expect("known node");
            if done[ui] {
                continue;
            }
            done[ui] = true;
            for (li, v) in topo.neighbours(u) {
                let vi = topo.index_of(v).expect("known node");
                if done[vi] || label.nodes.contains(&v) {
                    continue;
                }
                let mut next = label.clone();
                next.km += topo.links()[li].km;
                next.nodes.push(v);
                next.links.push(li);
                let improves = match &best[vi] {
                    None => true,
                    Some(cur) => next.key_cmp(cur) == Ordering::Less,
                };
                if improves {
                    best[vi] = Some(next.clone());
                    heap.push(next);
                }
            }
            best[ui] = Some(label);
        }
        for (i, &dst) in topo.nodes().iter().enumerate() {
            let label = best[i].take().expect("connected graph reaches every node");
            let link_km = label.links.iter().map(|&l| topo.links()[l].km).collect();
            paths.insert((src, dst), Path { nodes: label.nodes, links: label.links, link_km, km: label.km });
        }
    }
    Ok(PathTable { paths })
}

fn require_positive(quantity: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { quantity, value })
    }
}

fn require_non_negative(quantity: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { quantity, value })
    }
}

/// Inline amplifiers plus one booster and one pre-amplifier.
pub fn edfas_on_link(length_km: f64, span_km: f64) -> Result<u32> {
    require_positive("length_km", length_km)?;
    require_positive("span_km", span_km)?;
    let inline = (length_km / span_km - 1.0).ceil().max(0.0);
    Ok(inline as u32 + 2)
}

pub fn regens_per_wavelength(length_km: f64, reach_km: f64) -> Result<u32> {
    require_positive("length_km", length_km)?;
    require_positive("reach_km", reach_km)?;
    Ok((length_km / reach_km).floor() as u32)
}

/// Power (W) of one wavelength on a bypass lightpath: router and transponder
/// ports at both ends, regenerators along the way and, in amortised mode, a
/// per-wavelength share of the EDFAs on every traversed link.
pub fn core_pair_power_per_wavelength(cfg: &PowerConfig, path: &Path, mode: EdfaMode) -> Result<f64> {
    if path.is_empty() {
        return Ok(0.0);
    }
    let ends = 2.0 * cfg.p_router_port_w + 2.0 * cfg.p_transponder_w;
    let regen = cfg.p_regen_w * f64::from(regens_per_wavelength(path.km, cfg.reach_km)?);
    let edfa = match mode {
        EdfaMode::Amortized => {
            let mut total = 0.0;
            for &km in &path.link_km {
                total += cfg.p_edfa_w * f64::from(edfas_on_link(km, cfg.span_km)?);
            }
            total / cfg.wavelengths_per_fiber
        }
        EdfaMode::PerFiber => 0.0,
    };
    Ok(ends + regen + edfa)
}

/// EDFA power (W) of one lit fibre on a link.
pub fn edfa_power_per_fiber(cfg: &PowerConfig, length_km: f64) -> Result<f64> {
    Ok(cfg.p_edfa_w * f64::from(edfas_on_link(length_km, cfg.span_km)?))
}

pub fn metro_power(cfg: &PowerConfig, traffic_gbps: f64) -> Result<f64> {
    require_non_negative("traffic_gbps", traffic_gbps)?;
    Ok((traffic_gbps / cfg.metro_port_gbps).ceil() * cfg.p_metro_port_w * cfg.metro_redundancy)
}

pub fn olt_power(cfg: &PowerConfig, served_gbps: f64) -> Result<f64> {
    require_non_negative("served_gbps", served_gbps)?;
    Ok((served_gbps / cfg.olt_capacity_gbps).ceil() * cfg.p_olt_w)
}

/// Facility power (W) of a data centre serving `served_gbps`: load-proportional
/// server power, networking overhead and PUE.
pub fn dc_it_power(cfg: &PowerConfig, served_gbps: f64, pue: f64) -> Result<f64> {
    require_non_negative("served_gbps", served_gbps)?;
    if !(pue >= 1.0 && pue.is_finite()) {
        return Err(Error::Domain { quantity: "pue", value: pue });
    }
    Ok(pue * cfg.net_overhead_ratio * cfg.p_server_w_per_gbps * served_gbps)
}

pub fn fdc_server_count(cfg: &PowerConfig, served_gbps: f64) -> Result<u32> {
    require_non_negative("served_gbps", served_gbps)?;
    if served_gbps > cfg.fdc_capacity_gbps {
        return Err(Error::Capacity { requested: served_gbps, capacity: cfg.fdc_capacity_gbps });
    }
    Ok((served_gbps / cfg.server_capacity_gbps).ceil() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy_path(km: f64) -> Path {
        Path { nodes: vec![1, 2], links: vec![0], link_km: vec![km], km }
    }

    #[test]
    fn nsfnet_shape() {
        let t = build_nsfnet();
        assert_eq!(t.node_count(), 14);
        assert_eq!(t.links().len(), 21);
        assert_eq!(t.cdc_nodes(), &[2, 3, 7, 8, 9]);
        assert!(t.unreachable_from(1).is_empty());
    }

    #[test]
    fn topology_rejects_bad_input() {
        let l = |a, b, km| Link { a, b, km };
        assert!(Topology::new(vec![1, 2], vec![l(1, 2, 0.0)], vec![1]).is_err());
        assert!(Topology::new(vec![1, 2], vec![l(1, 3, 5.0)], vec![1]).is_err());
        assert!(Topology::new(vec![1, 2], vec![l(1, 2, 5.0)], vec![]).is_err());
        assert!(Topology::new(vec![1, 2], vec![l(1, 2, 5.0)], vec![9]).is_err());
        assert!(Topology::new(vec![1, 1], vec![], vec![1]).is_err());
    }

    #[test]
    fn unknown_topology_key_is_rejected() {
        let text = "nodes = [1]\ncdc_nodes = [1]\nlinks = []\ncdcs = [1]\n";
        assert!(matches!(Topology::from_toml_str(text), Err(Error::Toml(_))));
    }

    #[test]
    fn disconnected_graph_names_component() {
        let l = |a, b, km| Link { a, b, km };
        let t = Topology::new(vec![1, 2, 3, 4], vec![l(1, 2, 10.0), l(3, 4, 10.0)], vec![1]).unwrap();
        match shortest_paths(&t) {
            Err(Error::Disconnected { unreachable }) => assert_eq!(unreachable, vec![3, 4]),
            other => panic!("expected disconnection error, got {other:?}"),
        }
    }

    #[test]
    fn self_and_single_link_paths() {
        let t = Topology::new(vec![1, 2], vec![Link { a: 1, b: 2, km: 500.0 }], vec![1]).unwrap();
        let table = shortest_paths(&t).unwrap();
        let own = table.get(1, 1).unwrap();
        assert!(own.is_empty());
        assert_eq!(own.km, 0.0);
        let p = table.get(1, 2).unwrap();
        assert_eq!(p.links, vec![0]);
        assert_eq!(p.nodes, vec![1, 2]);
        assert_eq!(p.km, 500.0);
    }

    #[test]
    fn ties_prefer_fewer_hops_then_smaller_sequence() {
        let l = |a, b, km| Link { a, b, km };
        // 1-4 direct (300) vs 1-2-4 (300, two hops) vs 1-3-4 (300, two hops)
        let t = Topology::new(
            vec![1, 2, 3, 4],
            vec![l(1, 2, 100.0), l(2, 4, 200.0), l(1, 3, 150.0), l(3, 4, 150.0), l(1, 4, 300.0)],
            vec![1],
        )
        .unwrap();
        assert_eq!(shortest_paths(&t).unwrap().get(1, 4).unwrap().nodes, vec![1, 4]);

        let t = Topology::new(
            vec![1, 2, 3, 4],
            vec![l(1, 3, 150.0), l(3, 4, 150.0), l(1, 2, 100.0), l(2, 4, 200.0)],
            vec![1],
        )
        .unwrap();
        assert_eq!(shortest_paths(&t).unwrap().get(1, 4).unwrap().nodes, vec![1, 2, 4]);
    }

    #[test]
    fn nsfnet_node6_tie_resolves_to_direct_link() {
        // 6-3, 6-5-7 and 6-10-9 are all 3600 km; the single hop wins
        let t = build_nsfnet();
        let table = shortest_paths(&t).unwrap();
        let p = table.get(3, 6).unwrap();
        assert_eq!(p.km, 3600.0);
        assert_eq!(p.nodes, vec![3, 6]);
    }

    #[test]
    fn edfa_counts() {
        assert_eq!(edfas_on_link(80.0, 80.0).unwrap(), 2);
        assert_eq!(edfas_on_link(1000.0, 80.0).unwrap(), 14);
        assert_eq!(edfas_on_link(79.0, 80.0).unwrap(), 2);
        assert!(edfas_on_link(0.0, 80.0).is_err());
        assert!(edfas_on_link(10.0, -1.0).is_err());
    }

    #[test]
    fn regen_counts() {
        assert_eq!(regens_per_wavelength(2000.0, 2500.0).unwrap(), 0);
        assert_eq!(regens_per_wavelength(2500.0, 2500.0).unwrap(), 1);
        assert_eq!(regens_per_wavelength(6000.0, 2500.0).unwrap(), 2);
        assert!(regens_per_wavelength(-5.0, 2500.0).is_err());
    }

    #[test]
    fn lightpath_power() {
        let cfg = PowerConfig::desk_default();
        let own = Path { nodes: vec![3], links: vec![], link_km: vec![], km: 0.0 };
        assert_eq!(core_pair_power_per_wavelength(&cfg, &own, EdfaMode::Amortized).unwrap(), 0.0);
        assert_eq!(core_pair_power_per_wavelength(&cfg, &toy_path(1000.0), EdfaMode::PerFiber).unwrap(), 800.0);
        assert_eq!(core_pair_power_per_wavelength(&cfg, &toy_path(3000.0), EdfaMode::PerFiber).unwrap(), 950.0);
        // 14 EDFAs at 8 W over 40 wavelengths
        let amortized = core_pair_power_per_wavelength(&cfg, &toy_path(1000.0), EdfaMode::Amortized).unwrap();
        assert!((amortized - (800.0 + 14.0 * 8.0 / 40.0)).abs() < 1e-12);
    }

    #[test]
    fn access_and_dc_power() {
        let cfg = PowerConfig::desk_default();
        assert_eq!(metro_power(&cfg, 0.0).unwrap(), 0.0);
        assert_eq!(metro_power(&cfg, 40.0).unwrap(), 100.0);
        assert_eq!(metro_power(&cfg, 41.0).unwrap(), 200.0);
        assert!(metro_power(&cfg, -1.0).is_err());

        assert_eq!(olt_power(&cfg, 0.0).unwrap(), 0.0);
        assert_eq!(olt_power(&cfg, 160.0).unwrap(), 904.0);
        assert_eq!(olt_power(&cfg, 161.0).unwrap(), 1808.0);
        assert!(olt_power(&cfg, -0.5).is_err());

        assert_eq!(dc_it_power(&cfg, 0.0, 1.1).unwrap(), 0.0);
        assert!((dc_it_power(&cfg, 1.8, 1.1).unwrap() - 569.11).abs() < 0.01);
        assert!((dc_it_power(&cfg, 160.0, 1.1).unwrap() - 50_587.7).abs() < 0.1);
        assert!(dc_it_power(&cfg, -1.0, 1.1).is_err());
        assert!(dc_it_power(&cfg, 1.0, 0.9).is_err());

        assert_eq!(fdc_server_count(&cfg, 160.0).unwrap(), 89);
        assert_eq!(fdc_server_count(&cfg, 1.8).unwrap(), 1);
        assert_eq!(fdc_server_count(&cfg, 0.0).unwrap(), 0);
        assert!(matches!(fdc_server_count(&cfg, 160.5), Err(Error::Capacity { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(PowerConfig::desk_default().validate().is_ok());
        let mut bad = PowerConfig::desk_default();
        bad.pue_fog = 0.95;
        assert!(bad.validate().is_err());
        let mut bad = PowerConfig::desk_default();
        bad.olt_capacity_gbps = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = PowerConfig::desk_default();
        bad.p_edfa_w = -1.0;
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn counts_monotone_in_length(a in 0.1f64..20_000.0, b in 0.1f64..20_000.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(edfas_on_link(lo, 80.0).unwrap() <= edfas_on_link(hi, 80.0).unwrap());
            prop_assert!(regens_per_wavelength(lo, 2500.0).unwrap() <= regens_per_wavelength(hi, 2500.0).unwrap());
        }

        #[test]
        fn traffic_powers_monotone(a in 0.0f64..500.0, b in 0.0f64..500.0) {
            let cfg = PowerConfig::desk_default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(metro_power(&cfg, lo).unwrap() <= metro_power(&cfg, hi).unwrap());
            prop_assert!(olt_power(&cfg, lo).unwrap() <= olt_power(&cfg, hi).unwrap());
            prop_assert!(dc_it_power(&cfg, lo, 1.2).unwrap() <= dc_it_power(&cfg, hi, 1.2).unwrap());
        }

        #[test]
        fn dc_power_is_additive(a in 0.0f64..200.0, b in 0.0f64..200.0, pue in 1.0f64..2.0) {
            let cfg = PowerConfig::desk_default();
            let sum = dc_it_power(&cfg, a, pue).unwrap() + dc_it_power(&cfg, b, pue).unwrap();
            let joint = dc_it_power(&cfg, a + b, pue).unwrap();
            prop_assert!((sum - joint).abs() <= 1e-9 * joint.max(1.0));
        }
    }
}
