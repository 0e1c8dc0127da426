mod common;

use common::{nsfnet, verify};
use fogcache::energy::{EsdConfig, PvConfig};
use fogcache::milp::{build_problem, parse_lp_str, write_lp_string, FogcacheModel, ModelInputs, ScenarioFlags};
use fogcache::netmodel::{PathTable, PowerConfig, Topology};
use fogcache::solver::{solve_lp, solve_mip, SolverOptions, Status};
use fogcache::timeseries::{synth_demand, synth_irradiance, DemandProfile, HourlyTraces, TraceLimits};

struct Setup {
    topo: Topology,
    paths: PathTable,
    traces: HourlyTraces,
    power: PowerConfig,
    pv: PvConfig,
    esd: EsdConfig,
}

impl Setup {
    fn new(peak: f64, hours: usize, ssc: f64, e_max: f64) -> Self {
        let (topo, paths) = nsfnet();
        let d = synth_demand(&topo, peak, DemandProfile::Diurnal, hours).unwrap();
        let i = synth_irradiance(&topo, 1000.0, hours, None);
        let traces = HourlyTraces::new(&topo, d, i, TraceLimits { horizon: Some(hours), max_demand_gbps: None }).unwrap();
        let esd = if e_max > 0.0 { EsdConfig::with_capacity(e_max) } else { EsdConfig::default() };
        Self { topo, paths, traces, power: PowerConfig::desk_default(), pv: PvConfig::with_area(ssc), esd }
    }

    fn model(&self, flags: ScenarioFlags) -> FogcacheModel {
        let inputs = ModelInputs { topo: &self.topo, paths: &self.paths, power: &self.power, traces: &self.traces, pv: &self.pv, esd: &self.esd };
        build_problem(inputs, flags).unwrap()
    }
}

fn renewable_esd() -> ScenarioFlags {
    ScenarioFlags { cdc_renewable: true, esd_enabled: true, ..Default::default() }
}

#[test]
fn breakdown_reproduces_the_objective() {
    for flags in [ScenarioFlags::default(), ScenarioFlags { cdc_renewable: true, ..Default::default() }, renewable_esd()] {
        let s = Setup::new(90.0, 24, 150.0, 20.0);
        let m = s.model(flags);
        let sol = solve_mip(&m.problem, &SolverOptions::default());
        assert_eq!(sol.status, Status::Optimal);
        let e = m.evaluate(&sol.values);
        let b = e.breakdown;
        let unbilled = if b.cdc_billed { 0.0 } else { b.cdc };
        assert!((b.core + b.metro + b.olt + b.fdc + b.cdc - (sol.objective + unbilled)).abs() <= 1e-6 * sol.objective.max(1.0));
        let cells: f64 = e.cells.iter().map(|c| c.energy.core + c.energy.metro + c.energy.olt + c.energy.fdc + c.energy.cdc).sum::<f64>()
            + e.fiber_edfa.iter().map(|f| f.2).sum::<f64>();
        assert!((cells - b.total_all()).abs() <= 1e-6 * cells.max(1.0));
    }
}

#[test]
fn canonical_solutions_never_charge_and_discharge_together() {
    let s = Setup::new(70.0, 24, 250.0, 50.0);
    let m = s.model(renewable_esd());
    let mut sol = solve_mip(&m.problem, &SolverOptions::default());
    assert_eq!(sol.status, Status::Optimal);
    let before = m.problem.objective_value(&sol.values);
    m.canonicalize_esd(&mut sol.values);
    assert!((m.problem.objective_value(&sol.values) - before).abs() <= 1e-9 * before.max(1.0));
    verify(&m.problem, &sol.values, 1e-6, 1e-6).unwrap();
    let l = &m.layout;
    for n in 0..14 {
        for t in 0..24 {
            assert!(sol.values[l.g_chg(n, t)] * sol.values[l.dis(n, t)] <= 1e-6, "node {n} hour {t}");
        }
    }
}

#[test]
fn disabled_battery_pins_storage_to_zero() {
    let s = Setup::new(70.0, 24, 250.0, 50.0);
    let m = s.model(ScenarioFlags { cdc_renewable: true, ..Default::default() });
    let l = &m.layout;
    for n in 0..14 {
        for t in 0..24 {
            for j in [l.g_chg(n, t), l.dis(n, t), l.soc(n, t)] {
                let v = &m.problem.variables()[j];
                assert_eq!((v.lower, v.upper), (0.0, 0.0), "{}", v.name);
            }
        }
    }
}

#[test]
fn cyclic_battery_ends_where_it_started() {
    let s = Setup::new(70.0, 24, 250.0, 30.0);
    let m = s.model(ScenarioFlags { cyclic_soc: true, ..renewable_esd() });
    let sol = solve_mip(&m.problem, &SolverOptions::default());
    assert_eq!(sol.status, Status::Optimal);
    for n in 0..14 {
        let (start, end) = (sol.values[m.layout.soc(n, 0)], sol.values[m.layout.soc(n, 24)]);
        assert!((start - end).abs() <= 1e-6, "node {n}: {start} vs {end}");
    }
}

#[test]
fn brown_energy_is_monotone_in_resources() {
    let solve = |ssc: f64, e_max: f64| {
        let s = Setup::new(80.0, 24, ssc, e_max);
        let flags = ScenarioFlags { esd_enabled: e_max > 0.0, ..renewable_esd() };
        let sol = solve_mip(&s.model(flags).problem, &SolverOptions::default());
        assert_eq!(sol.status, Status::Optimal);
        sol.objective
    };
    let by_area: Vec<f64> = [0.0, 100.0, 200.0].iter().map(|&a| solve(a, 0.0)).collect();
    assert!(by_area.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{by_area:?}");
    let by_battery: Vec<f64> = [0.0, 15.0, 40.0].iter().map(|&e| solve(200.0, e)).collect();
    assert!(by_battery.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{by_battery:?}");
}

#[test]
fn exported_problem_solves_to_the_same_optimum() {
    let s = Setup::new(95.0, 1, 80.0, 10.0);
    let m = s.model(ScenarioFlags { exact_edfa_fibers: true, ..renewable_esd() });
    let parsed = parse_lp_str(&write_lp_string(&m.problem)).unwrap();
    assert!(parsed.structurally_eq(&m.problem));
    let opts = SolverOptions::default();
    let (a, b) = (solve_mip(&m.problem, &opts), solve_mip(&parsed, &opts));
    assert_eq!((a.status, b.status), (Status::Optimal, Status::Optimal));
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
}

#[test]
fn exact_fibre_relaxation_bounds_its_integer_optimum() {
    let s = Setup::new(60.0, 1, 0.0, 0.0);
    let exact = solve_lp(&s.model(ScenarioFlags { exact_edfa_fibers: true, ..Default::default() }).problem, &SolverOptions::default());
    let mip = solve_mip(&s.model(ScenarioFlags { exact_edfa_fibers: true, ..Default::default() }).problem, &SolverOptions::default());
    assert_eq!((exact.status, mip.status), (Status::Optimal, Status::Optimal));
    assert!(exact.objective <= mip.objective + 1e-9);
}
