//! Daily brown-energy MILP for VoD delivery.
//!
//! Indices: `n` destination node, `c` cloud node, `t` hour, `l` link. Powers
//! are in kW and, with one-hour steps, every objective term is in kWh.
//!
//! | variable        | meaning                                          |
//! |-----------------|--------------------------------------------------|
//! | `ffog_n_t`      | Gbps served by the node's fog data centre        |
//! | `fcld_n_c_t`    | Gbps served to `n` from cloud `c`                |
//! | `lam_n_c_t`     | wavelengths on the `c → n` lightpath (integer)   |
//! | `metro_n_t`     | metro port pairs at `n` (integer)                |
//! | `olt_n_t`       | active OLT units at `n` (integer)                |
//! | `gdir_n_t`      | kW of PV used directly by the FDC                |
//! | `gchg_n_t`      | kW of PV sent to the battery                     |
//! | `dis_n_t`       | kW withdrawn from the battery                    |
//! | `soc_n_t`       | kWh stored at the start of hour `t` (t ≤ H)      |
//! | `bfog_n_t`      | kW of grid power drawn by the FDC                |
//! | `fib_a_b_t`     | lit fibres on link a–b (exact EDFA mode only)    |
//!
//! Rows, per node-hour unless noted:
//!
//! ```text
//! demand   ffog + Σc fcld                      = D
//! fdccap   ffog                                <= fdc capacity
//! wave     line_rate·lam − fcld                >= 0           (per cloud)
//! metro    metro_port·metro − Σc fcld           >= 0
//! olt      olt_capacity·olt                    >= D
//! solar    gdir + gchg                         <= PV(n, t)
//! esd      soc[t+1] − decay·soc[t] − ηc·gchg + dis = 0
//! brown    bfog − L·ffog + gdir + ηd·dis        >= 0
//! green    gdir + ηd·dis − L·ffog               <= 0
//! fiber    wpf·fib − Σ lam over pairs using l  >= 0           (per link-hour)
//! soccycle soc[0] − soc[H]                     = 0            (per node, cyclic)
//! ```
//!
//! where `L = pue_fog · overhead · server kW/Gbps`. With the battery disabled
//! the `gchg`, `dis` and `soc` variables are fixed to zero through their
//! bounds.
//!
//! Outside exact EDFA mode the clouds share nothing but the demand and metro
//! rows, and a split `Σc κc·⌈fc/r⌉` never beats `κmin·⌈Σc fc/r⌉`. Every cloud
//! but the cheapest one (lowest index on ties) therefore gets zero upper
//! bounds on `fcld` and `lam`. The columns stay in the model.

use crate::energy::{pv_output_w, EsdConfig, PvConfig};
use crate::error::{Error, Result};
use crate::netmodel::{core_pair_power_per_wavelength, edfa_power_per_fiber, EdfaMode, NodeId, PathTable, PowerConfig, Topology};
use crate::timeseries::HourlyTraces;

use super::{MilpProblem, Relation, VarKind};

/// Which delivery routes the optimiser may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeliveryMode {
    #[default]
    Optimize,
    /// Fog capacity pinned to zero: every Gbps comes from a cloud.
    ForceCloud,
    /// Cloud flows pinned to zero: every Gbps comes from the local FDC.
    ForceFog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScenarioFlags {
    /// Cloud data centres run on renewables, so their power is not billed.
    pub cdc_renewable: bool,
    pub esd_enabled: bool,
    pub exact_edfa_fibers: bool,
    pub cyclic_soc: bool,
    pub delivery: DeliveryMode,
}

#[derive(Debug, Clone, Copy)]
pub struct ModelInputs<'a> {
    pub topo: &'a Topology,
    pub paths: &'a PathTable,
    pub power: &'a PowerConfig,
    pub traces: &'a HourlyTraces,
    pub pv: &'a PvConfig,
    pub esd: &'a EsdConfig,
}

/// Variable indices by role.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub nodes: Vec<NodeId>,
    pub clouds: Vec<NodeId>,
    pub horizon: usize,
    f_fog: Vec<usize>,
    f_cld: Vec<usize>,
    lambda: Vec<usize>,
    metro: Vec<usize>,
    olt: Vec<usize>,
    g_dir: Vec<usize>,
    g_chg: Vec<usize>,
    dis: Vec<usize>,
    b_fog: Vec<usize>,
    soc: Vec<usize>,
    fib: Vec<usize>,
}

impl Layout {
    fn nt(&self, n: usize, t: usize) -> usize {
        n * self.horizon + t
    }
    fn nct(&self, n: usize, c: usize, t: usize) -> usize {
        (n * self.clouds.len() + c) * self.horizon + t
    }
    pub fn f_fog(&self, n: usize, t: usize) -> usize {
        self.f_fog[self.nt(n, t)]
    }
    pub fn f_cld(&self, n: usize, c: usize, t: usize) -> usize {
        self.f_cld[self.nct(n, c, t)]
    }
    pub fn lambda(&self, n: usize, c: usize, t: usize) -> usize {
        self.lambda[self.nct(n, c, t)]
    }
    pub fn metro(&self, n: usize, t: usize) -> usize {
        self.metro[self.nt(n, t)]
    }
    pub fn olt(&self, n: usize, t: usize) -> usize {
        self.olt[self.nt(n, t)]
    }
    pub fn g_dir(&self, n: usize, t: usize) -> usize {
        self.g_dir[self.nt(n, t)]
    }
    pub fn g_chg(&self, n: usize, t: usize) -> usize {
        self.g_chg[self.nt(n, t)]
    }
    pub fn dis(&self, n: usize, t: usize) -> usize {
        self.dis[self.nt(n, t)]
    }
    pub fn b_fog(&self, n: usize, t: usize) -> usize {
        self.b_fog[self.nt(n, t)]
    }
    /// State of charge at the start of hour `t`, `t` in `0..=horizon`.
    pub fn soc(&self, n: usize, t: usize) -> usize {
        self.soc[n * (self.horizon + 1) + t]
    }
    pub fn fib(&self, link: usize, t: usize) -> Option<usize> {
        self.fib.get(link * self.horizon + t).copied()
    }
}

/// Per-unit costs and data the formulation was assembled from.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    /// kW per wavelength, indexed `n * clouds + c`.
    pub kappa_kw: Vec<f64>,
    pub fog_kw_per_gbps: f64,
    pub cdc_kw_per_gbps: f64,
    pub cdc_billed: bool,
    pub metro_kw_per_unit: f64,
    pub olt_kw_per_unit: f64,
    pub edfa_fiber_kw: Vec<f64>,
    pub demand_gbps: Vec<f64>,
    pub pv_kw: Vec<f64>,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub decay: f64,
}

#[derive(Debug, Clone)]
pub struct FogcacheModel {
    pub problem: MilpProblem,
    pub layout: Layout,
    pub coeffs: Coefficients,
    pub flags: ScenarioFlags,
}

fn ceil_units(demand: f64, unit: f64) -> f64 {
    (demand / unit - 1e-9).ceil().max(0.0)
}

fn link_label(topo: &Topology, l: usize) -> String {
    let link = topo.links()[l];
    format!("{}_{}", link.a, link.b)
}

pub fn build_problem(inputs: ModelInputs<'_>, flags: ScenarioFlags) -> Result<FogcacheModel> {
    let ModelInputs { topo, paths, power, traces, pv, esd } = inputs;
    power.validate()?;
    pv.validate()?;
    esd.validate()?;
    if traces.nodes() != topo.nodes() {
        return Err(Error::Model(format!(
            "traces cover nodes {:?}, topology has {:?}",
            traces.nodes(),
            topo.nodes()
        )));
    }
    if flags.esd_enabled && esd.e_max_kwh <= 0.0 {
        return Err(Error::Config("battery enabled with zero capacity".into()));
    }
    let nodes = topo.nodes().to_vec();
    let clouds = topo.cdc_nodes().to_vec();
    let horizon = traces.horizon();
    let (nn, nc) = (nodes.len(), clouds.len());

    let edfa_mode = if flags.exact_edfa_fibers { EdfaMode::PerFiber } else { EdfaMode::Amortized };
    let mut kappa_kw = Vec::with_capacity(nn * nc);
    for &n in &nodes {
        for &c in &clouds {
            let path = paths.get(c, n).ok_or_else(|| Error::Model(format!("no path from cloud {c} to node {n}")))?;
            kappa_kw.push(core_pair_power_per_wavelength(power, path, edfa_mode)? / 1000.0);
        }
    }
    let edfa_fiber_kw = topo.links().iter().map(|l| edfa_power_per_fiber(power, l.km).map(|w| w / 1000.0)).collect::<Result<Vec<_>>>()?;

    let server_kw = power.net_overhead_ratio * power.p_server_w_per_gbps / 1000.0;
    let fog_kw_per_gbps = power.pue_fog * server_kw;
    let cdc_kw_per_gbps = power.pue_cloud * server_kw;
    let metro_kw_per_unit = power.p_metro_port_w * power.metro_redundancy / 1000.0;
    let olt_kw_per_unit = power.p_olt_w / 1000.0;

    let serving_cloud: Vec<Option<usize>> = (0..nn)
        .map(|n| {
            if flags.exact_edfa_fibers {
                return None;
            }
            let k = &kappa_kw[n * nc..(n + 1) * nc];
            (0..nc).reduce(|best, c| if k[c] < k[best] { c } else { best })
        })
        .collect();

    let mut demand_gbps = Vec::with_capacity(nn * horizon);
    let mut pv_kw = Vec::with_capacity(nn * horizon);
    for n in 0..nn {
        for t in 0..horizon {
            demand_gbps.push(traces.demand(n, t));
            pv_kw.push(pv_output_w(pv, traces.irradiance(n, t))? / 1000.0);
        }
    }

    let decay = esd.decay();
    let mut p = MilpProblem::new("fogcache");
    let mut layout = Layout {
        nodes: nodes.clone(),
        clouds: clouds.clone(),
        horizon,
        f_fog: Vec::new(),
        f_cld: vec![0; nn * nc * horizon],
        lambda: vec![0; nn * nc * horizon],
        metro: Vec::new(),
        olt: Vec::new(),
        g_dir: Vec::new(),
        g_chg: Vec::new(),
        dis: Vec::new(),
        b_fog: Vec::new(),
        soc: Vec::new(),
        fib: Vec::new(),
    };
    let inf = f64::INFINITY;
    let cont = VarKind::Continuous;
    let int = VarKind::Integer;
    let fog_ub = if flags.delivery == DeliveryMode::ForceCloud { 0.0 } else { inf };
    let chg_ub = if flags.esd_enabled { esd.max_charge_in().unwrap_or(inf) } else { 0.0 };
    let dis_ub = if flags.esd_enabled { esd.max_discharge_out().unwrap_or(inf) } else { 0.0 };
    let soc_ub = if flags.esd_enabled { esd.e_max_kwh } else { 0.0 };

    for (n, &node) in nodes.iter().enumerate() {
        for t in 0..horizon {
            let d = demand_gbps[n * horizon + t];
            layout.f_fog.push(p.add_variable(format!("ffog_n{node}_t{t}"), cont, 0.0, fog_ub)?);
            for (c, &cloud) in clouds.iter().enumerate() {
                let dominated = serving_cloud[n].is_some_and(|s| s != c);
                let (f_ub, l_ub) = if flags.delivery == DeliveryMode::ForceFog || dominated {
                    (0.0, 0.0)
                } else {
                    (inf, ceil_units(d, power.line_rate_gbps))
                };
                let i = layout.nct(n, c, t);
                layout.f_cld[i] = p.add_variable(format!("fcld_n{node}_c{cloud}_t{t}"), cont, 0.0, f_ub)?;
                layout.lambda[i] = p.add_variable(format!("lam_n{node}_c{cloud}_t{t}"), int, 0.0, l_ub)?;
            }
            let metro_ub = if flags.delivery == DeliveryMode::ForceFog { 0.0 } else { ceil_units(d, power.metro_port_gbps) };
            layout.metro.push(p.add_variable(format!("metro_n{node}_t{t}"), int, 0.0, metro_ub)?);
            layout.olt.push(p.add_variable(format!("olt_n{node}_t{t}"), int, 0.0, ceil_units(d, power.olt_capacity_gbps))?);
            layout.g_dir.push(p.add_variable(format!("gdir_n{node}_t{t}"), cont, 0.0, inf)?);
            layout.g_chg.push(p.add_variable(format!("gchg_n{node}_t{t}"), cont, 0.0, chg_ub)?);
            layout.dis.push(p.add_variable(format!("dis_n{node}_t{t}"), cont, 0.0, dis_ub)?);
            layout.b_fog.push(p.add_variable(format!("bfog_n{node}_t{t}"), cont, 0.0, inf)?);
        }
        for t in 0..=horizon {
            let (lo, hi) = if t == 0 && !flags.cyclic_soc {
                let init = if flags.esd_enabled { esd.initial_soc_kwh } else { 0.0 };
                (init, init)
            } else {
                (0.0, soc_ub)
            };
            layout.soc.push(p.add_variable(format!("soc_n{node}_t{t}"), cont, lo, hi)?);
        }
    }

    // lightpaths through each link, for the fibre rows
    let mut pairs_on_link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); topo.links().len()];
    if flags.exact_edfa_fibers {
        for (n, &node) in nodes.iter().enumerate() {
            for (c, &cloud) in clouds.iter().enumerate() {
                for &l in &paths.get(cloud, node).expect("checked above").links {
                    pairs_on_link[l].push((n, c));
                }
            }
        }
        for (l, pairs) in pairs_on_link.iter().enumerate() {
            for t in 0..horizon {
                let lam_ub: f64 = pairs.iter().map(|&(n, c)| p.variables()[layout.lambda(n, c, t)].upper).sum();
                let ub = (lam_ub / power.wavelengths_per_fiber).ceil();
                layout.fib.push(p.add_variable(format!("fib_l{}_t{t}", link_label(topo, l)), int, 0.0, ub)?);
            }
        }
    }

    for (n, &node) in nodes.iter().enumerate() {
        for t in 0..horizon {
            let d = demand_gbps[n * horizon + t];
            let tag = format!("n{node}_t{t}");
            let ffog = layout.f_fog(n, t);
            let mut demand_terms = vec![(ffog, 1.0)];
            demand_terms.extend((0..nc).map(|c| (layout.f_cld(n, c, t), 1.0)));
            p.add_constraint(format!("demand_{tag}"), demand_terms, Relation::Eq, d)?;
            p.add_constraint(format!("fdccap_{tag}"), vec![(ffog, 1.0)], Relation::Le, power.fdc_capacity_gbps)?;
            for (c, &cloud) in clouds.iter().enumerate() {
                p.add_constraint(
                    format!("wave_n{node}_c{cloud}_t{t}"),
                    vec![(layout.lambda(n, c, t), power.line_rate_gbps), (layout.f_cld(n, c, t), -1.0)],
                    Relation::Ge,
                    0.0,
                )?;
            }
            let mut metro_terms = vec![(layout.metro(n, t), power.metro_port_gbps)];
            metro_terms.extend((0..nc).map(|c| (layout.f_cld(n, c, t), -1.0)));
            p.add_constraint(format!("metro_{tag}"), metro_terms, Relation::Ge, 0.0)?;
            p.add_constraint(format!("olt_{tag}"), vec![(layout.olt(n, t), power.olt_capacity_gbps)], Relation::Ge, d)?;
            let (gdir, gchg, dis) = (layout.g_dir(n, t), layout.g_chg(n, t), layout.dis(n, t));
            p.add_constraint(format!("solar_{tag}"), vec![(gdir, 1.0), (gchg, 1.0)], Relation::Le, pv_kw[n * horizon + t])?;
            p.add_constraint(
                format!("esd_{tag}"),
                vec![(layout.soc(n, t + 1), 1.0), (layout.soc(n, t), -decay), (gchg, -esd.eta_charge), (dis, 1.0)],
                Relation::Eq,
                0.0,
            )?;
            p.add_constraint(
                format!("brown_{tag}"),
                vec![(layout.b_fog(n, t), 1.0), (ffog, -fog_kw_per_gbps), (gdir, 1.0), (dis, esd.eta_discharge)],
                Relation::Ge,
                0.0,
            )?;
            p.add_constraint(
                format!("green_{tag}"),
                vec![(gdir, 1.0), (dis, esd.eta_discharge), (ffog, -fog_kw_per_gbps)],
                Relation::Le,
                0.0,
            )?;
        }
        if flags.cyclic_soc {
            p.add_constraint(
                format!("soccycle_n{node}"),
                vec![(layout.soc(n, 0), 1.0), (layout.soc(n, horizon), -1.0)],
                Relation::Eq,
                0.0,
            )?;
        }
    }
    if flags.exact_edfa_fibers {
        for (l, pairs) in pairs_on_link.iter().enumerate() {
            for t in 0..horizon {
                let mut terms = vec![(layout.fib(l, t).expect("fibre var"), power.wavelengths_per_fiber)];
                terms.extend(pairs.iter().map(|&(n, c)| (layout.lambda(n, c, t), -1.0)));
                p.add_constraint(format!("fiber_l{}_t{t}", link_label(topo, l)), terms, Relation::Ge, 0.0)?;
            }
        }
    }

    let cdc_obj = if flags.cdc_renewable { 0.0 } else { cdc_kw_per_gbps };
    let mut obj = Vec::new();
    for n in 0..nn {
        for t in 0..horizon {
            obj.push((layout.b_fog(n, t), 1.0));
            for c in 0..nc {
                if cdc_obj != 0.0 {
                    obj.push((layout.f_cld(n, c, t), cdc_obj));
                }
                if kappa_kw[n * nc + c] != 0.0 {
                    obj.push((layout.lambda(n, c, t), kappa_kw[n * nc + c]));
                }
            }
            obj.push((layout.metro(n, t), metro_kw_per_unit));
            obj.push((layout.olt(n, t), olt_kw_per_unit));
        }
    }
    if flags.exact_edfa_fibers {
        for (l, kw) in edfa_fiber_kw.iter().enumerate() {
            for t in 0..horizon {
                obj.push((layout.fib(l, t).expect("fibre var"), *kw));
            }
        }
    }
    p.set_objective(obj)?;
    p.lint()?;

    let coeffs = Coefficients {
        kappa_kw,
        fog_kw_per_gbps,
        cdc_kw_per_gbps,
        cdc_billed: !flags.cdc_renewable,
        metro_kw_per_unit,
        olt_kw_per_unit,
        edfa_fiber_kw,
        demand_gbps,
        pv_kw,
        eta_charge: esd.eta_charge,
        eta_discharge: esd.eta_discharge,
        decay,
    };
    Ok(FogcacheModel { problem: p, layout, coeffs, flags })
}

/// Energy by subsystem over the horizon (kWh).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Breakdown {
    pub core: f64,
    pub metro: f64,
    pub olt: f64,
    pub fdc: f64,
    pub cdc: f64,
    /// Whether CDC energy counts as brown.
    pub cdc_billed: bool,
}

impl Breakdown {
    pub fn transport(&self) -> f64 {
        self.core + self.metro + self.olt
    }

    pub fn total_brown(&self) -> f64 {
        self.transport() + self.fdc + if self.cdc_billed { self.cdc } else { 0.0 }
    }

    /// Brown energy plus renewable CDC energy.
    pub fn total_all(&self) -> f64 {
        self.transport() + self.fdc + self.cdc
    }

    fn add(&mut self, other: &Breakdown) {
        self.core += other.core;
        self.metro += other.metro;
        self.olt += other.olt;
        self.fdc += other.fdc;
        self.cdc += other.cdc;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellBreakdown {
    pub node: NodeId,
    pub hour: usize,
    pub energy: Breakdown,
    pub demand_gbps: f64,
    pub fog_gbps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub breakdown: Breakdown,
    pub cells: Vec<CellBreakdown>,
    /// (link index, hour, kWh) for lit-fibre EDFA energy; part of `core`.
    pub fiber_edfa: Vec<(usize, usize, f64)>,
    pub demand_gbps: f64,
    pub fog_gbps: f64,
    pub solar_direct_kwh: f64,
    pub solar_charged_kwh: f64,
    pub esd_delivered_kwh: f64,
}

impl Evaluation {
    pub fn fog_fraction(&self) -> f64 {
        if self.demand_gbps > 0.0 {
            self.fog_gbps / self.demand_gbps
        } else {
            0.0
        }
    }

    /// `location,hour,subsystem,kwh` rows: five per node-hour, then one per
    /// lit-fibre link-hour (`link<i>`, counted under core).
    pub fn cells_csv(&self) -> String {
        let mut s = String::from("location,hour,subsystem,kwh\n");
        for c in &self.cells {
            let b = &c.energy;
            for (name, kwh) in [("core", b.core), ("metro", b.metro), ("olt", b.olt), ("fdc", b.fdc), ("cdc", b.cdc)] {
                s.push_str(&format!("{},{},{name},{kwh}\n", c.node, c.hour));
            }
        }
        for &(link, hour, kwh) in &self.fiber_edfa {
            s.push_str(&format!("link{link},{hour},core,{kwh}\n"));
        }
        s
    }
}

/// Per-Gbps objective cost of each route at one node-hour, read back from the
/// generated rows and objective (ignoring solar offsets and integer rounding).
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryCosts {
    pub fog_kw_per_gbps: f64,
    pub cloud_kw_per_gbps: Vec<(NodeId, f64)>,
}

impl FogcacheModel {
    pub fn evaluate(&self, values: &[f64]) -> Evaluation {
        let l = &self.layout;
        let k = &self.coeffs;
        let h = l.horizon;
        let nc = l.clouds.len();
        let mut total = Breakdown { cdc_billed: k.cdc_billed, ..Default::default() };
        let mut cells = Vec::with_capacity(l.nodes.len() * h);
        let (mut demand, mut fog, mut direct, mut charged, mut delivered) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (n, &node) in l.nodes.iter().enumerate() {
            for t in 0..h {
                let cloud_gbps: f64 = (0..nc).map(|c| values[l.f_cld(n, c, t)]).sum();
                let core: f64 = (0..nc).map(|c| k.kappa_kw[n * nc + c] * values[l.lambda(n, c, t)]).sum();
                let energy = Breakdown {
                    core,
                    metro: k.metro_kw_per_unit * values[l.metro(n, t)],
                    olt: k.olt_kw_per_unit * values[l.olt(n, t)],
                    fdc: values[l.b_fog(n, t)],
                    cdc: k.cdc_kw_per_gbps * cloud_gbps,
                    cdc_billed: k.cdc_billed,
                };
                total.add(&energy);
                let d = k.demand_gbps[n * h + t];
                let f = values[l.f_fog(n, t)];
                demand += d;
                fog += f;
                direct += values[l.g_dir(n, t)];
                charged += values[l.g_chg(n, t)];
                delivered += k.eta_discharge * values[l.dis(n, t)];
                cells.push(CellBreakdown { node, hour: t, energy, demand_gbps: d, fog_gbps: f });
            }
        }
        let mut fiber_edfa = Vec::new();
        if !l.fib.is_empty() {
            for (li, kw) in k.edfa_fiber_kw.iter().enumerate() {
                for t in 0..h {
                    let e = kw * values[l.fib(li, t).expect("fibre var")];
                    total.core += e;
                    fiber_edfa.push((li, t, e));
                }
            }
        }
        Evaluation {
            breakdown: total,
            cells,
            fiber_edfa,
            demand_gbps: demand,
            fog_gbps: fog,
            solar_direct_kwh: direct,
            solar_charged_kwh: charged,
            esd_delivered_kwh: delivered,
        }
    }

    /// Removes simultaneous charging and discharging in any hour without
    /// changing the objective or feasibility: each kWh not withdrawn is
    /// replaced by direct PV use, and the matching charge is dropped.
    pub fn canonicalize_esd(&self, values: &mut [f64]) {
        let l = &self.layout;
        let (ec, ed) = (self.coeffs.eta_charge, self.coeffs.eta_discharge);
        for n in 0..l.nodes.len() {
            for t in 0..l.horizon {
                let (gd, gc, ds) = (l.g_dir(n, t), l.g_chg(n, t), l.dis(n, t));
                let shift = values[ds].min(values[gc] * ec);
                if shift > 0.0 {
                    values[ds] -= shift;
                    values[gc] = (values[gc] - shift / ec).max(0.0);
                    values[gd] += ed * shift;
                }
            }
        }
    }

    pub fn delivery_costs(&self, n: usize, t: usize) -> DeliveryCosts {
        let p = &self.problem;
        let l = &self.layout;
        let obj = p.objective_dense();
        let coef = |row: &str, var: usize| -> f64 {
            let r = p.row(row).expect("generated row");
            p.constraints()[r].terms.iter().filter(|(j, _)| *j == var).map(|(_, a)| *a).sum()
        };
        let node = l.nodes[n];
        let tag = format!("n{node}_t{t}");
        let fog = obj[l.b_fog(n, t)] * -coef(&format!("brown_{tag}"), l.f_fog(n, t));
        let metro = obj[l.metro(n, t)] / coef(&format!("metro_{tag}"), l.metro(n, t));
        let cloud = l
            .clouds
            .iter()
            .enumerate()
            .map(|(c, &cloud)| {
                let lam = l.lambda(n, c, t);
                let wave = obj[lam] / coef(&format!("wave_n{node}_c{cloud}_t{t}"), lam);
                (cloud, obj[l.f_cld(n, c, t)] + wave + metro)
            })
            .collect();
        DeliveryCosts { fog_kw_per_gbps: fog, cloud_kw_per_gbps: cloud }
    }
}

/// Fog PUE above which every node prefers cloud delivery when demand is a
/// whole number of wavelengths and metro ports: the fog premium per Gbps
/// then exceeds the cheapest cloud's per-Gbps transport cost at every node.
pub fn fog_exclusion_pue_threshold(power: &PowerConfig, topo: &Topology, paths: &PathTable) -> Result<f64> {
    let server_w = power.net_overhead_ratio * power.p_server_w_per_gbps;
    let metro_w = power.p_metro_port_w * power.metro_redundancy / power.metro_port_gbps;
    let mut worst = f64::NEG_INFINITY;
    for &n in topo.nodes() {
        let mut cheapest = f64::INFINITY;
        for &c in topo.cdc_nodes() {
            let path = paths.get(c, n).ok_or_else(|| Error::Model(format!("no path from {c} to {n}")))?;
            let kappa = core_pair_power_per_wavelength(power, path, EdfaMode::Amortized)?;
            cheapest = cheapest.min(kappa / power.line_rate_gbps);
        }
        worst = worst.max(power.pue_cloud + (cheapest + metro_w) / server_w);
    }
    Ok(worst)
}
