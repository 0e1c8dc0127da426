//! Fixed instances shared by the benchmarks.

use fogcache::milp::{build_problem, FogcacheModel, ModelInputs, ScenarioFlags};
use fogcache::timeseries::{synth_demand, synth_irradiance, DemandProfile, TraceLimits};
use fogcache::{build_nsfnet, shortest_paths, Config, HourlyTraces};

/// Full NSFNET day with evening-peaked demand and a clear-sky sun.
pub fn nsfnet_day(peak_gbps: f64, hours: usize) -> (fogcache::Topology, HourlyTraces) {
    let topo = build_nsfnet();
    let d = synth_demand(&topo, peak_gbps, DemandProfile::Diurnal, hours).expect("positive peak");
    let i = synth_irradiance(&topo, 1000.0, hours, None);
    let traces = HourlyTraces::new(&topo, d, i, TraceLimits { horizon: Some(hours), max_demand_gbps: None }).expect("valid traces");
    (topo, traces)
}

/// Solar-and-battery instance: renewable clouds, `ssc_m2` of PV and
/// `e_max_kwh` of storage per fog site.
pub fn battery_model(ssc_m2: f64, e_max_kwh: f64, exact_fibers: bool) -> FogcacheModel {
    let (topo, traces) = nsfnet_day(100.0, 24);
    let paths = shortest_paths(&topo).expect("connected");
    let mut cfg = Config::desk_default();
    cfg.pv.area_m2 = ssc_m2;
    cfg.esd.e_max_kwh = e_max_kwh;
    let flags = ScenarioFlags { cdc_renewable: true, esd_enabled: e_max_kwh > 0.0, exact_edfa_fibers: exact_fibers, ..Default::default() };
    let inputs = ModelInputs { topo: &topo, paths: &paths, power: &cfg.power, traces: &traces, pv: &cfg.pv, esd: &cfg.esd };
    build_problem(inputs, flags).expect("builds")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let m = battery_model(250.0, 50.0, false);
        assert!(m.problem.num_integer() > 0);
        assert_eq!(nsfnet_day(50.0, 6).1.horizon(), 6);
    }
}
