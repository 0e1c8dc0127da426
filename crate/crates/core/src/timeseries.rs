//! Per-node hourly demand and solar irradiance traces.
//!
//! Both traces use the same CSV layout: a `node,hour,value` header followed by
//! one row per (node, hour) cell in any order. The canonical writer sorts rows
//! by (node, hour) and prints values with the shortest representation that
//! parses back to the same `f64`.

use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::netmodel::{NodeId, Topology};

pub const DEFAULT_HORIZON: usize = 24;

/// Validated demand (Gbps) and irradiance (W/m²) matrices, indexed
/// `[node index][hour]` in topology node order.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyTraces {
    nodes: Vec<NodeId>,
    horizon: usize,
    demand_gbps: Vec<Vec<f64>>,
    irradiance_w_m2: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TraceLimits {
    /// Hours per trace; `None` means exactly [`DEFAULT_HORIZON`].
    pub horizon: Option<usize>,
    /// Upper bound on any demand cell, normally one OLT's capacity.
    pub max_demand_gbps: Option<f64>,
}

impl HourlyTraces {
    pub fn new(topo: &Topology, demand_gbps: Vec<Vec<f64>>, irradiance_w_m2: Vec<Vec<f64>>, limits: TraceLimits) -> Result<Self> {
        let horizon = limits.horizon.unwrap_or(DEFAULT_HORIZON);
        if horizon == 0 {
            return Err(Error::Trace { file: "traces".into(), msg: "horizon must be at least one hour".into() });
        }
        for (label, m) in [("demand", &demand_gbps), ("irradiance", &irradiance_w_m2)] {
            if m.len() != topo.node_count() {
                return Err(Error::Trace {
                    file: label.into(),
                    msg: format!("{} node rows, topology has {}", m.len(), topo.node_count()),
                });
            }
            for (i, row) in m.iter().enumerate() {
                if row.len() != horizon {
                    return Err(Error::Trace {
                        file: label.into(),
                        msg: format!("node {} has {} hours, expected {horizon}", topo.nodes()[i], row.len()),
                    });
                }
                if let Some((h, v)) = row.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
                    return Err(Error::Trace {
                        file: label.into(),
                        msg: format!("node {} hour {h}: value {v} must be finite and >= 0", topo.nodes()[i]),
                    });
                }
            }
        }
        if let Some(cap) = limits.max_demand_gbps {
            for (i, row) in demand_gbps.iter().enumerate() {
                if let Some((h, v)) = row.iter().enumerate().find(|(_, v)| **v > cap) {
                    return Err(Error::Trace {
                        file: "demand".into(),
                        msg: format!("node {} hour {h}: {v} Gbps exceeds limit {cap} Gbps", topo.nodes()[i]),
                    });
                }
            }
        }
        Ok(Self { nodes: topo.nodes().to_vec(), horizon, demand_gbps, irradiance_w_m2 })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn demand(&self, node_idx: usize, hour: usize) -> f64 {
        self.demand_gbps[node_idx][hour]
    }

    pub fn irradiance(&self, node_idx: usize, hour: usize) -> f64 {
        self.irradiance_w_m2[node_idx][hour]
    }

    pub fn demand_matrix(&self) -> &[Vec<f64>] {
        &self.demand_gbps
    }

    pub fn irradiance_matrix(&self) -> &[Vec<f64>] {
        &self.irradiance_w_m2
    }

    pub fn total_demand(&self) -> f64 {
        self.demand_gbps.iter().flatten().sum()
    }

    /// Copy with every demand cell multiplied by `k`.
    pub fn scaled_demand(&self, k: f64) -> Self {
        let mut out = self.clone();
        for v in out.demand_gbps.iter_mut().flatten() {
            *v *= k;
        }
        out
    }

    pub fn save(&self, demand_path: impl AsRef<Path>, irradiance_path: impl AsRef<Path>) -> Result<()> {
        for (path, m) in [(demand_path.as_ref(), &self.demand_gbps), (irradiance_path.as_ref(), &self.irradiance_w_m2)] {
            std::fs::write(path, matrix_to_csv(&self.nodes, m)).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

/// Canonical CSV rendering of a `[node][hour]` matrix.
pub fn matrix_to_csv(nodes: &[NodeId], matrix: &[Vec<f64>]) -> String {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by_key(|&i| nodes[i]);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node", "hour", "value"]).expect("in-memory write");
    for i in order {
        for (h, v) in matrix[i].iter().enumerate() {
            w.write_record([nodes[i].to_string(), h.to_string(), format!("{v}")]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Parses one trace file body. `label` names the source in error messages.
pub fn parse_matrix_csv(text: &str, label: &str, topo: &Topology, horizon: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let hours = horizon.unwrap_or(DEFAULT_HORIZON);
    let row_err = |row: usize, msg: String| Error::TraceRow { file: label.to_string(), row, msg };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| row_err(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["node", "hour", "value"] {
        return Err(row_err(1, format!("expected header `node,hour,value`, found `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut cells: Vec<Vec<Option<f64>>> = vec![vec![None; hours]; topo.node_count()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| row_err(row, e.to_string()))?;
        if record.len() != 3 {
            return Err(row_err(row, format!("expected 3 fields, found {}", record.len())));
        }
        let node: NodeId = record[0].parse().map_err(|_| row_err(row, format!("invalid node id `{}`", &record[0])))?;
        let hour: usize = record[1].parse().map_err(|_| row_err(row, format!("invalid hour `{}`", &record[1])))?;
        let value: f64 = record[2].parse().map_err(|_| row_err(row, format!("invalid value `{}`", &record[2])))?;
        let idx = topo.index_of(node).ok_or_else(|| row_err(row, format!("node {node} is not in the topology")))?;
        if hour >= hours {
            let hint = if horizon.is_none() { " (set an explicit horizon for non-24-hour traces)" } else { "" };
            return Err(row_err(row, format!("hour {hour} outside horizon of {hours} hours{hint}")));
        }
        if !(value >= 0.0 && value.is_finite()) {
            return Err(row_err(row, format!("negative or non-finite value {value}")));
        }
        if cells[idx][hour].replace(value).is_some() {
            return Err(row_err(row, format!("duplicate cell for node {node} hour {hour}")));
        }
    }
    let mut out = Vec::with_capacity(cells.len());
    for (idx, row) in cells.into_iter().enumerate() {
        let node = topo.nodes()[idx];
        if row.iter().all(Option::is_none) {
            return Err(Error::Trace { file: label.into(), msg: format!("node {node} has no rows") });
        }
        let mut values = Vec::with_capacity(hours);
        for (h, v) in row.into_iter().enumerate() {
            values.push(v.ok_or_else(|| Error::Trace { file: label.into(), msg: format!("missing cell for node {node} hour {h}") })?);
        }
        out.push(values);
    }
    Ok(out)
}

pub fn load_traces(demand_path: impl AsRef<Path>, irradiance_path: impl AsRef<Path>, topo: &Topology, limits: TraceLimits) -> Result<HourlyTraces> {
    let read = |p: &Path| -> Result<Vec<Vec<f64>>> {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        parse_matrix_csv(&text, &p.display().to_string(), topo, limits.horizon)
    };
    let demand = read(demand_path.as_ref())?;
    let irradiance = read(irradiance_path.as_ref())?;
    HourlyTraces::new(topo, demand, irradiance, limits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandProfile {
    Flat,
    Diurnal,
}

impl FromStr for DemandProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flat" => Ok(DemandProfile::Flat),
            "diurnal" => Ok(DemandProfile::Diurnal),
            other => Err(Error::Config(format!("unknown demand profile `{other}` (expected flat or diurnal)"))),
        }
    }
}

/// Evening-peaked daily shape: 0.2 at 04:00 rising linearly to 1.0 at 21:00,
/// then falling linearly back to 0.2 at 04:00 the next day.
pub fn diurnal_shape(hour: usize) -> f64 {
    let h = (hour % 24) as f64;
    if (4.0..=21.0).contains(&h) {
        0.2 + 0.8 * (h - 4.0) / 17.0
    } else {
        let since_peak = if h > 21.0 { h - 21.0 } else { h + 3.0 };
        1.0 - 0.8 * since_peak / 7.0
    }
}

pub fn synth_demand(topo: &Topology, peak_gbps: f64, profile: DemandProfile, horizon: usize) -> Result<Vec<Vec<f64>>> {
    if !(peak_gbps > 0.0 && peak_gbps.is_finite()) {
        return Err(Error::Domain { quantity: "peak_gbps", value: peak_gbps });
    }
    let row: Vec<f64> = (0..horizon)
        .map(|h| match profile {
            DemandProfile::Flat => peak_gbps,
            DemandProfile::Diurnal => peak_gbps * diurnal_shape(h),
        })
        .collect();
    Ok(vec![row; topo.node_count()])
}

/// Clipped half-sine between 06:00 and 18:00. `node_scale`, when given, holds
/// one multiplier per topology node.
pub fn synth_irradiance(topo: &Topology, peak_w_m2: f64, horizon: usize, node_scale: Option<&[f64]>) -> Vec<Vec<f64>> {
    let row: Vec<f64> = (0..horizon).map(|h| peak_w_m2 * half_sine(h)).collect();
    (0..topo.node_count())
        .map(|i| {
            let s = node_scale.map_or(1.0, |sc| sc[i]);
            row.iter().map(|v| v * s).collect()
        })
        .collect()
}

fn half_sine(hour: usize) -> f64 {
    let h = (hour % 24) as f64;
    if (6.0..=18.0).contains(&h) {
        (PI * (h - 6.0) / 12.0).sin().max(0.0)
    } else {
        0.0
    }
}

/// Trapezoidal integral over consecutive hours (Wh/m² for an irradiance row).
pub fn trapezoid_daily(row: &[f64]) -> f64 {
    row.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::build_nsfnet;
    use proptest::prelude::*;

    fn flat_traces(topo: &Topology) -> HourlyTraces {
        let d = synth_demand(topo, 10.0, DemandProfile::Flat, 24).unwrap();
        let i = synth_irradiance(topo, 1000.0, 24, None);
        HourlyTraces::new(topo, d, i, TraceLimits::default()).unwrap()
    }

    #[test]
    fn synthetic_demand_values() {
        let t = build_nsfnet();
        let flat = synth_demand(&t, 10.0, DemandProfile::Flat, 24).unwrap();
        assert!(flat.iter().flatten().all(|&v| v == 10.0));
        let d = synth_demand(&t, 100.0, DemandProfile::Diurnal, 24).unwrap();
        assert!((d[0][21] - 100.0).abs() < 1e-12);
        assert!((d[0][4] - 20.0).abs() < 1e-12);
        let max = d[0].iter().cloned().fold(f64::MIN, f64::max);
        let min = d[0].iter().cloned().fold(f64::MAX, f64::min);
        assert_eq!((min, max), (d[0][4], d[0][21]));
        assert!("weekly".parse::<DemandProfile>().is_err());
        assert_eq!("Diurnal".parse::<DemandProfile>().unwrap(), DemandProfile::Diurnal);
    }

    #[test]
    fn synthetic_irradiance_values() {
        let t = build_nsfnet();
        let m = synth_irradiance(&t, 800.0, 24, None);
        assert!((m[3][12] - 800.0).abs() < 1e-9);
        assert_eq!(m[3][0], 0.0);
        assert!((m[3][9] - 800.0 * 0.5f64.sqrt()).abs() < 1e-9);
        assert!(trapezoid_daily(&m[0]) > 0.0);
        let dark = synth_irradiance(&t, 0.0, 24, None);
        assert_eq!(trapezoid_daily(&dark[0]), 0.0);
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let t = build_nsfnet();
        let traces = flat_traces(&t);
        let dir = tempfile::tempdir().unwrap();
        let (d, i) = (dir.path().join("d.csv"), dir.path().join("i.csv"));
        traces.save(&d, &i).unwrap();
        let loaded = load_traces(&d, &i, &t, TraceLimits::default()).unwrap();
        assert_eq!(loaded, traces);
        assert_eq!(loaded.demand_matrix().iter().flatten().count(), 336);
        let (d2, i2) = (dir.path().join("d2.csv"), dir.path().join("i2.csv"));
        loaded.save(&d2, &i2).unwrap();
        assert_eq!(std::fs::read(&d).unwrap(), std::fs::read(&d2).unwrap());
        assert_eq!(std::fs::read(&i).unwrap(), std::fs::read(&i2).unwrap());
    }

    fn csv_without(topo: &Topology, skip: impl Fn(NodeId, usize) -> bool, patch: Option<(NodeId, usize, &str)>) -> String {
        let mut s = String::from("node,hour,value\n");
        for &n in topo.nodes() {
            for h in 0..24 {
                if skip(n, h) {
                    continue;
                }
                let v = match patch {
                    Some((pn, ph, pv)) if pn == n && ph == h => pv.to_string(),
                    _ => "1.5".to_string(),
                };
                s.push_str(&format!("{n},{h},{v}\n"));
            }
        }
        s
    }

    #[test]
    fn negative_cell_names_row() {
        let t = build_nsfnet();
        let text = csv_without(&t, |_, _| false, Some((1, 2, "-3")));
        let err = parse_matrix_csv(&text, "irr.csv", &t, None).unwrap_err();
        match err {
            Error::TraceRow { row, .. } => assert_eq!(row, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_node_is_named() {
        let t = build_nsfnet();
        let text = csv_without(&t, |n, _| n == 7, None);
        let err = parse_matrix_csv(&text, "demand.csv", &t, None).unwrap_err();
        assert!(err.to_string().contains("node 7"), "{err}");
    }

    #[test]
    fn structural_errors() {
        let t = build_nsfnet();
        let dup = format!("{}1,0,2\n", csv_without(&t, |_, _| false, None));
        assert!(parse_matrix_csv(&dup, "d", &t, None).unwrap_err().to_string().contains("duplicate"));
        let hole = csv_without(&t, |n, h| n == 3 && h == 5, None);
        assert!(parse_matrix_csv(&hole, "d", &t, None).unwrap_err().to_string().contains("node 3 hour 5"));
        let foreign = format!("{}99,0,2\n", csv_without(&t, |_, _| false, None));
        assert!(parse_matrix_csv(&foreign, "d", &t, None).unwrap_err().to_string().contains("node 99"));
        let long = format!("{}1,24,2\n", csv_without(&t, |_, _| false, None));
        assert!(parse_matrix_csv(&long, "d", &t, None).is_err());
        let bad_header = "n,h,v\n1,0,1\n";
        assert!(parse_matrix_csv(bad_header, "d", &t, None).is_err());
    }

    #[test]
    fn demand_limit_enforced() {
        let t = build_nsfnet();
        let d = synth_demand(&t, 200.0, DemandProfile::Flat, 24).unwrap();
        let i = synth_irradiance(&t, 1000.0, 24, None);
        let limits = TraceLimits { horizon: None, max_demand_gbps: Some(160.0) };
        assert!(HourlyTraces::new(&t, d, i, limits).is_err());
    }

    #[test]
    fn explicit_horizon_override() {
        let t = build_nsfnet();
        let d = synth_demand(&t, 20.0, DemandProfile::Diurnal, 48).unwrap();
        let i = synth_irradiance(&t, 900.0, 48, None);
        let tr = HourlyTraces::new(&t, d, i, TraceLimits { horizon: Some(48), max_demand_gbps: None }).unwrap();
        assert_eq!(tr.horizon(), 48);
        assert_eq!(tr.demand(0, 21), tr.demand(0, 45));
        let text = matrix_to_csv(tr.nodes(), tr.demand_matrix());
        assert!(parse_matrix_csv(&text, "d", &t, None).is_err());
        assert_eq!(parse_matrix_csv(&text, "d", &t, Some(48)).unwrap(), tr.demand_matrix());
    }

    proptest! {
        #[test]
        fn synthesized_traces_are_valid(peak in 0.1f64..160.0, sun in 0.0f64..1200.0, diurnal: bool) {
            let t = build_nsfnet();
            let profile = if diurnal { DemandProfile::Diurnal } else { DemandProfile::Flat };
            let d = synth_demand(&t, peak, profile, 24).unwrap();
            let i = synth_irradiance(&t, sun, 24, None);
            let limits = TraceLimits { horizon: None, max_demand_gbps: Some(160.0) };
            prop_assert!(HourlyTraces::new(&t, d, i.clone(), limits).is_ok());
            prop_assert_eq!(trapezoid_daily(&i[0]) > 0.0, sun > 0.0);
        }

        #[test]
        fn arbitrary_matrix_round_trips(values in proptest::collection::vec(0.0f64..1e6, 24)) {
            let t = build_nsfnet();
            let m = vec![values; 14];
            let text = matrix_to_csv(t.nodes(), &m);
            let back = parse_matrix_csv(&text, "x", &t, None).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(matrix_to_csv(t.nodes(), &back), text);
        }
    }
}
