//! Parameter sweeps over fog PUE (A), solar area (B) and battery capacity
//! (C), their baselines, and CSV/SVG reports.
//!
//! Baselines: A compares against forced cloud-only delivery; B against the
//! transport energy of forced cloud-only delivery (clouds are renewable, so
//! transport is all that remains brown); C against the B optimum at 250 m².

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::milp::{build_problem, Breakdown, DeliveryMode, Evaluation, FogcacheModel, ModelInputs, ScenarioFlags};
use crate::netmodel::{shortest_paths, PathTable, Topology};
use crate::solver::{solve_mip, Solution, SolverOptions, Status};
use crate::timeseries::HourlyTraces;

pub const SCENARIO_PUE_FOG: f64 = 1.1;
pub const SCENARIO_C_SSC_M2: f64 = 250.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    A,
    B,
    C,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::A => "A",
            ScenarioKind::B => "B",
            ScenarioKind::C => "C",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(ScenarioKind::A),
            "B" => Ok(ScenarioKind::B),
            "C" => Ok(ScenarioKind::C),
            other => Err(Error::Config(format!("unknown scenario {other:?} (expected A, B or C)"))),
        }
    }
}

impl ScenarioKind {
    pub fn sweep_label(self) -> &'static str {
        match self {
            ScenarioKind::A => "pue_fog",
            ScenarioKind::B => "ssc_m2",
            ScenarioKind::C => "e_max_kwh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub sweep: Vec<f64>,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, sweep: Vec<f64>) -> Result<Self> {
        let spec = Self { kind, sweep };
        spec.validate()?;
        Ok(spec)
    }

    pub fn standard(kind: ScenarioKind) -> Self {
        let sweep = match kind {
            ScenarioKind::A => vec![1.25, 1.20, 1.15, 1.10],
            ScenarioKind::B => vec![50.0, 100.0, 150.0, 200.0, 250.0],
            ScenarioKind::C => vec![20.0, 30.0, 40.0, 50.0],
        };
        Self { kind, sweep }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(Error::Config(format!("scenario {} has an empty sweep", self.kind)));
        }
        let min = if self.kind == ScenarioKind::A { 1.0 } else { 0.0 };
        if let Some(bad) = self.sweep.iter().find(|v| !(v.is_finite() && **v >= min)) {
            return Err(Error::Domain { quantity: self.kind.sweep_label(), value: *bad });
        }
        Ok(())
    }

    /// Config and flags for one sweep value.
    pub fn point_config(&self, base: &Config, value: f64) -> (Config, ScenarioFlags) {
        let mut cfg = base.clone();
        let mut flags = ScenarioFlags::default();
        match self.kind {
            ScenarioKind::A => {
                cfg.power.pue_fog = value;
                cfg.pv.area_m2 = 0.0;
            }
            ScenarioKind::B => {
                cfg.power.pue_fog = SCENARIO_PUE_FOG;
                cfg.pv.area_m2 = value;
                flags.cdc_renewable = true;
            }
            ScenarioKind::C => {
                cfg.power.pue_fog = SCENARIO_PUE_FOG;
                cfg.pv.area_m2 = SCENARIO_C_SSC_M2;
                cfg.esd.e_max_kwh = value;
                cfg.esd.initial_soc_kwh = cfg.esd.initial_soc_kwh.min(value);
                flags.cdc_renewable = true;
                flags.esd_enabled = value > 0.0;
            }
        }
        (cfg, flags)
    }
}

/// A solved instance together with the model it was built from.
#[derive(Debug, Clone)]
pub struct InstanceResult {
    pub model: FogcacheModel,
    pub solution: Solution,
    /// Present when the solution carries an assignment.
    pub evaluation: Option<Evaluation>,
}

impl InstanceResult {
    pub fn brown_kwh(&self) -> f64 {
        self.evaluation.as_ref().map_or(f64::NAN, |e| e.breakdown.total_brown())
    }
}

/// Builds, solves and evaluates one instance. Simultaneous charge and
/// discharge is removed from the returned values without changing the
/// objective.
pub fn solve_instance(
    topo: &Topology,
    paths: &PathTable,
    cfg: &Config,
    traces: &HourlyTraces,
    flags: ScenarioFlags,
    opts: &SolverOptions,
) -> Result<InstanceResult> {
    let inputs = ModelInputs { topo, paths, power: &cfg.power, traces, pv: &cfg.pv, esd: &cfg.esd };
    let model = build_problem(inputs, flags)?;
    let mut solution = solve_mip(&model.problem, opts);
    let evaluation = if solution.has_values() {
        model.canonicalize_esd(&mut solution.values);
        Some(model.evaluate(&solution.values))
    } else {
        None
    };
    Ok(InstanceResult { model, solution, evaluation })
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub status: Status,
    pub brown_kwh: f64,
    pub evaluation: Option<Evaluation>,
    /// Fractional saving against the scenario baseline.
    pub savings: Option<f64>,
    pub solution: Vec<(String, f64)>,
}

impl SweepPoint {
    pub fn fog_fraction(&self) -> Option<f64> {
        self.evaluation.as_ref().map(Evaluation::fog_fraction)
    }

    pub fn breakdown(&self) -> Option<&Breakdown> {
        self.evaluation.as_ref().map(|e| &e.breakdown)
    }
}

#[derive(Debug, Clone)]
pub struct Baseline {
    pub label: String,
    pub status: Status,
    pub brown_kwh: f64,
    pub evaluation: Option<Evaluation>,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub kind: ScenarioKind,
    pub baseline: Baseline,
    pub points: Vec<SweepPoint>,
}

fn savings(baseline: f64, value: f64) -> Option<f64> {
    (baseline.is_finite() && value.is_finite() && baseline != 0.0).then(|| (baseline - value) / baseline)
}

fn baseline(spec: &ScenarioSpec, topo: &Topology, paths: &PathTable, cfg: &Config, traces: &HourlyTraces, opts: &SolverOptions) -> Result<Baseline> {
    let forced_cloud = |renewable: bool| ScenarioFlags { cdc_renewable: renewable, delivery: DeliveryMode::ForceCloud, ..Default::default() };
    let (label, run, transport_only) = match spec.kind {
        ScenarioKind::A => ("cloud-only delivery", solve_instance(topo, paths, cfg, traces, forced_cloud(false), opts)?, false),
        ScenarioKind::B => {
            let mut c = cfg.clone();
            c.pv.area_m2 = 0.0;
            ("cloud-only transport", solve_instance(topo, paths, &c, traces, forced_cloud(true), opts)?, true)
        }
        ScenarioKind::C => {
            let b = ScenarioSpec { kind: ScenarioKind::B, sweep: vec![SCENARIO_C_SSC_M2] };
            let (c, flags) = b.point_config(cfg, SCENARIO_C_SSC_M2);
            ("solar without storage at 250 m2", solve_instance(topo, paths, &c, traces, flags, opts)?, false)
        }
    };
    let brown_kwh = match &run.evaluation {
        Some(e) if transport_only => e.breakdown.transport(),
        Some(e) => e.breakdown.total_brown(),
        None => f64::NAN,
    };
    Ok(Baseline { label: label.into(), status: run.solution.status, brown_kwh, evaluation: run.evaluation })
}

/// One solve per sweep point plus the baseline solve. Non-optimal points
/// are reported with their status rather than aborting the sweep.
pub fn run_scenario(spec: &ScenarioSpec, topo: &Topology, cfg: &Config, traces: &HourlyTraces, opts: &SolverOptions) -> Result<ScenarioReport> {
    spec.validate()?;
    cfg.validate()?;
    let paths = shortest_paths(topo)?;
    let base = baseline(spec, topo, &paths, cfg, traces, opts)?;
    let runs: Vec<Result<(f64, InstanceResult)>> = spec
        .sweep
        .par_iter()
        .map(|&v| {
            let (c, flags) = spec.point_config(cfg, v);
            solve_instance(topo, &paths, &c, traces, flags, opts).map(|r| (v, r))
        })
        .collect();
    let mut points = Vec::with_capacity(runs.len());
    for run in runs {
        let (value, r) = run?;
        let brown_kwh = r.brown_kwh();
        let solution = if r.solution.has_values() {
            r.model.problem.variables().iter().zip(&r.solution.values).map(|(v, x)| (v.name.clone(), *x)).collect()
        } else {
            Vec::new()
        };
        points.push(SweepPoint {
            value,
            status: r.solution.status,
            brown_kwh,
            savings: savings(base.brown_kwh, brown_kwh),
            evaluation: r.evaluation,
            solution,
        });
    }
    Ok(ScenarioReport { kind: spec.kind, baseline: base, points })
}

/// `1 − T_fog / T_cloud` with `T = core + metro + OLT`; `None` when the
/// cloud-side transport is zero.
pub fn transport_saving_fraction(full_fog: &Breakdown, full_cdc: &Breakdown) -> Option<f64> {
    let cdc = full_cdc.transport();
    (cdc > 0.0).then(|| 1.0 - full_fog.transport() / cdc)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Trace { file: path.display().to_string(), msg: format!("{other:?}") },
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Writes `summary.csv`, `breakdown.csv`, `solution.csv` and
/// `scenario_<kind>.svg` into `out_dir`. Output is byte-identical for
/// identical reports.
pub fn emit_report(report: &ScenarioReport, out_dir: impl AsRef<Path>) -> Result<()> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record([
        "point",
        report.kind.sweep_label(),
        "status",
        "brown_kwh",
        "core_kwh",
        "metro_kwh",
        "olt_kwh",
        "fdc_kwh",
        "cdc_kwh",
        "cdc_billed",
        "fog_fraction",
        "solar_direct_kwh",
        "solar_charged_kwh",
        "esd_delivered_kwh",
        "baseline_kwh",
        "savings",
    ])
    .map_err(csv_err(&path))?;
    for (i, p) in report.points.iter().enumerate() {
        let e = p.evaluation.as_ref();
        let b = e.map(|e| e.breakdown);
        w.write_record([
            i.to_string(),
            p.value.to_string(),
            p.status.to_string(),
            p.brown_kwh.to_string(),
            opt(b.map(|b| b.core)),
            opt(b.map(|b| b.metro)),
            opt(b.map(|b| b.olt)),
            opt(b.map(|b| b.fdc)),
            opt(b.map(|b| b.cdc)),
            b.map_or(String::new(), |b| b.cdc_billed.to_string()),
            opt(p.fog_fraction()),
            opt(e.map(|e| e.solar_direct_kwh)),
            opt(e.map(|e| e.solar_charged_kwh)),
            opt(e.map(|e| e.esd_delivered_kwh)),
            report.baseline.brown_kwh.to_string(),
            opt(p.savings),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("breakdown.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["point", "location", "hour", "subsystem", "kwh"]).map_err(csv_err(&path))?;
    for (i, p) in report.points.iter().enumerate() {
        let Some(e) = &p.evaluation else { continue };
        for c in &e.cells {
            let b = &c.energy;
            for (name, kwh) in [("core", b.core), ("metro", b.metro), ("olt", b.olt), ("fdc", b.fdc), ("cdc", b.cdc)] {
                w.write_record([i.to_string(), c.node.to_string(), c.hour.to_string(), name.to_string(), kwh.to_string()])
                    .map_err(csv_err(&path))?;
            }
        }
        for &(link, hour, kwh) in &e.fiber_edfa {
            w.write_record([i.to_string(), format!("link{link}"), hour.to_string(), "core".to_string(), kwh.to_string()])
                .map_err(csv_err(&path))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("solution.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["point", "variable", "value"]).map_err(csv_err(&path))?;
    for (i, p) in report.points.iter().enumerate() {
        for (name, v) in &p.solution {
            w.write_record([i.to_string(), name.clone(), v.to_string()]).map_err(csv_err(&path))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(format!("scenario_{}.svg", report.kind));
    fs::write(&path, render_svg(report)).map_err(|e| Error::io(&path, e))
}

fn render_svg(report: &ScenarioReport) -> String {
    let (w, h, left, bottom, top) = (640.0, 400.0, 70.0, 50.0, 30.0);
    let plot_h = h - bottom - top;
    let values: Vec<f64> = report.points.iter().map(|p| if p.brown_kwh.is_finite() { p.brown_kwh } else { 0.0 }).collect();
    let base = if report.baseline.brown_kwh.is_finite() { report.baseline.brown_kwh } else { 0.0 };
    let max = values.iter().copied().fold(base, f64::max).max(1e-9);
    let y = |v: f64| top + plot_h * (1.0 - v / max);
    let slot = (w - left - 20.0) / values.len().max(1) as f64;

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\">Scenario {}: brown energy per day</text>\n\
         <line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">brown kWh/day</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        w / 2.0,
        report.kind,
        h - bottom,
        h - bottom,
        w - 20.0,
        h - bottom,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        left + (w - left - 20.0) / 2.0,
        h - 12.0,
        report.kind.sweep_label(),
    );
    for k in 0..=4 {
        let v = max * k as f64 / 4.0;
        s.push_str(&format!("<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{:.1}</text>\n", left - 5.0, y(v) + 4.0, v));
    }
    for (i, (p, v)) in report.points.iter().zip(&values).enumerate() {
        let x = left + slot * i as f64 + slot * 0.2;
        s.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4a7ab5\"/>\n\
             <text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y(*v),
            slot * 0.6,
            top + plot_h - y(*v),
            x + slot * 0.3,
            h - bottom + 16.0,
            p.value,
        ));
    }
    if base > 0.0 {
        s.push_str(&format!(
            "<line x1=\"{left}\" y1=\"{:.2}\" x2=\"{}\" y2=\"{:.2}\" stroke=\"#c0392b\" stroke-dasharray=\"6 4\"/>\n\
             <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#c0392b\">baseline</text>\n",
            y(base),
            w - 20.0,
            y(base),
            w - 22.0,
            y(base) - 4.0,
        ));
    }
    s.push_str("</svg>\n");
    s
}
