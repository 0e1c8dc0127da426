//! Solar PV output and battery (ESD) state-of-charge dynamics.
//!
//! The battery recurrence used everywhere, per one-hour step, is
//!
//! ```text
//! soc' = decay · soc + eta_charge · charge_in − discharge_out
//! delivered = eta_discharge · discharge_out
//! ```
//!
//! with `decay = (1 − self_discharge_per_day)^(1/24)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::HourlyTraces;

/// Slack (kWh, scaled by capacity) within which a state of charge is snapped
/// onto its bound instead of being rejected.
pub const SOC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvConfig {
    pub area_m2: f64,
    #[serde(default = "PvConfig::default_efficiency")]
    pub efficiency: f64,
}

impl PvConfig {
    fn default_efficiency() -> f64 {
        0.263
    }

    pub fn with_area(area_m2: f64) -> Self {
        Self { area_m2, efficiency: Self::default_efficiency() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area_m2 >= 0.0 && self.area_m2.is_finite()) {
            return Err(Error::Config(format!("pv area_m2 must be >= 0, got {}", self.area_m2)));
        }
        if !(self.efficiency > 0.0 && self.efficiency < 1.0) {
            return Err(Error::Config(format!("pv efficiency must be in (0, 1), got {}", self.efficiency)));
        }
        Ok(())
    }
}

impl Default for PvConfig {
    fn default() -> Self {
        Self::with_area(0.0)
    }
}

/// Optional cap on hourly charge/discharge energy as a fraction of capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateLimit {
    /// Max energy added to storage per hour, as a fraction of `e_max_kwh`.
    pub charge_fraction: f64,
    /// Max energy withdrawn from storage per hour, as a fraction of `e_max_kwh`.
    pub discharge_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsdConfig {
    pub e_max_kwh: f64,
    #[serde(default = "EsdConfig::default_eta_charge")]
    pub eta_charge: f64,
    #[serde(default = "EsdConfig::default_eta_discharge")]
    pub eta_discharge: f64,
    #[serde(default = "EsdConfig::default_self_discharge")]
    pub self_discharge_per_day: f64,
    #[serde(default)]
    pub initial_soc_kwh: f64,
    #[serde(default)]
    pub rate_limit: Option<RateLimit>,
}

impl EsdConfig {
    fn default_eta_charge() -> f64 {
        0.7225
    }
    fn default_eta_discharge() -> f64 {
        0.9025
    }
    fn default_self_discharge() -> f64 {
        0.03
    }

    pub fn with_capacity(e_max_kwh: f64) -> Self {
        Self {
            e_max_kwh,
            eta_charge: Self::default_eta_charge(),
            eta_discharge: Self::default_eta_discharge(),
            self_discharge_per_day: Self::default_self_discharge(),
            initial_soc_kwh: 0.0,
            rate_limit: None,
        }
    }

    /// Lossless, non-decaying battery; useful for conservation checks.
    pub fn ideal(e_max_kwh: f64) -> Self {
        Self { eta_charge: 1.0, eta_discharge: 1.0, self_discharge_per_day: 0.0, ..Self::with_capacity(e_max_kwh) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_max_kwh >= 0.0 && self.e_max_kwh.is_finite()) {
            return Err(Error::Config(format!("e_max_kwh must be >= 0, got {}", self.e_max_kwh)));
        }
        for (name, v) in [("eta_charge", self.eta_charge), ("eta_discharge", self.eta_discharge)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.self_discharge_per_day) {
            return Err(Error::Config(format!("self_discharge_per_day must be in [0, 1), got {}", self.self_discharge_per_day)));
        }
        if !(self.initial_soc_kwh >= 0.0 && self.initial_soc_kwh <= self.e_max_kwh) {
            return Err(Error::Config(format!("initial_soc_kwh {} outside [0, {}]", self.initial_soc_kwh, self.e_max_kwh)));
        }
        if let Some(r) = self.rate_limit {
            for (name, v) in [("charge_fraction", r.charge_fraction), ("discharge_fraction", r.discharge_fraction)] {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(Error::Config(format!("rate limit {name} must be in (0, 1], got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn decay(&self) -> f64 {
        hourly_decay(self.self_discharge_per_day).expect("validated self-discharge")
    }

    /// Upper bound on `charge_in` (energy drawn from PV) per hour, if limited.
    pub fn max_charge_in(&self) -> Option<f64> {
        self.rate_limit.map(|r| r.charge_fraction * self.e_max_kwh / self.eta_charge)
    }

    pub fn max_discharge_out(&self) -> Option<f64> {
        self.rate_limit.map(|r| r.discharge_fraction * self.e_max_kwh)
    }
}

impl Default for EsdConfig {
    fn default() -> Self {
        Self::with_capacity(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EsdState {
    pub soc_kwh: f64,
}

pub fn pv_output_w(pv: &PvConfig, irradiance_w_m2: f64) -> Result<f64> {
    if !(irradiance_w_m2 >= 0.0 && irradiance_w_m2.is_finite()) {
        return Err(Error::Domain { quantity: "irradiance_w_m2", value: irradiance_w_m2 });
    }
    Ok(irradiance_w_m2 * pv.area_m2 * pv.efficiency)
}

pub fn hourly_decay(self_discharge_per_day: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&self_discharge_per_day) {
        return Err(Error::Domain { quantity: "self_discharge_per_day", value: self_discharge_per_day });
    }
    Ok((1.0 - self_discharge_per_day).powf(1.0 / 24.0))
}

/// Advances the battery by one hour. Returns the new state and the energy
/// delivered to the load. A step that would leave `[0, e_max]` is an error.
pub fn esd_step(state: EsdState, cfg: &EsdConfig, charge_in_kwh: f64, discharge_out_kwh: f64) -> Result<(EsdState, f64)> {
    if !(charge_in_kwh >= 0.0 && charge_in_kwh.is_finite()) {
        return Err(Error::Domain { quantity: "charge_in_kwh", value: charge_in_kwh });
    }
    if !(discharge_out_kwh >= 0.0 && discharge_out_kwh.is_finite()) {
        return Err(Error::Domain { quantity: "discharge_out_kwh", value: discharge_out_kwh });
    }
    let decay = hourly_decay(cfg.self_discharge_per_day)?;
    let mut soc = decay * state.soc_kwh + cfg.eta_charge * charge_in_kwh - discharge_out_kwh;
    let tol = SOC_TOLERANCE * cfg.e_max_kwh.max(1.0);
    if soc < -tol || soc > cfg.e_max_kwh + tol {
        return Err(Error::InfeasibleStep { soc, e_max: cfg.e_max_kwh });
    }
    soc = soc.clamp(0.0, cfg.e_max_kwh);
    Ok((EsdState { soc_kwh: soc }, cfg.eta_discharge * discharge_out_kwh))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispatchHour {
    pub generation_kwh: f64,
    pub load_kwh: f64,
    /// Solar energy consumed immediately by the load.
    pub direct_kwh: f64,
    /// Solar energy drawn into the battery.
    pub charged_kwh: f64,
    /// Battery energy reaching the load (after discharge losses).
    pub delivered_kwh: f64,
    /// State of charge at the end of the hour.
    pub soc_kwh: f64,
    pub unmet_kwh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchTrace {
    pub initial_soc_kwh: f64,
    pub hours: Vec<DispatchHour>,
}

impl DispatchTrace {
    pub fn total_delivered(&self) -> f64 {
        self.hours.iter().map(|h| h.delivered_kwh).sum()
    }

    pub fn total_charged(&self) -> f64 {
        self.hours.iter().map(|h| h.charged_kwh).sum()
    }

    pub fn total_unmet(&self) -> f64 {
        self.hours.iter().map(|h| h.unmet_kwh).sum()
    }

    pub fn final_soc(&self) -> f64 {
        self.hours.last().map_or(self.initial_soc_kwh, |h| h.soc_kwh)
    }

    /// `hour,direct,charged,delivered,soc` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("hour,direct,charged,delivered,soc\n");
        for (h, r) in self.hours.iter().enumerate() {
            s.push_str(&format!("{h},{},{},{},{}\n", r.direct_kwh, r.charged_kwh, r.delivered_kwh, r.soc_kwh));
        }
        s
    }
}

/// Greedy dispatch: serve the load from PV first, store any surplus up to the
/// battery's headroom, then discharge to cover what remains.
pub fn dispatch_greedy(generation_kwh: &[f64], load_kwh: &[f64], esd: &EsdConfig) -> Result<DispatchTrace> {
    if generation_kwh.len() != load_kwh.len() {
        return Err(Error::Model(format!("generation has {} hours but load has {}", generation_kwh.len(), load_kwh.len())));
    }
    esd.validate()?;
    let decay = esd.decay();
    let mut state = EsdState { soc_kwh: esd.initial_soc_kwh };
    let mut hours = Vec::with_capacity(load_kwh.len());
    for (&gen, &load) in generation_kwh.iter().zip(load_kwh) {
        if !(gen >= 0.0 && load >= 0.0) {
            return Err(Error::Domain { quantity: "generation/load kWh", value: gen.min(load) });
        }
        let decayed = decay * state.soc_kwh;
        let direct = gen.min(load);
        let surplus = gen - direct;
        let deficit = load - direct;

        let headroom = (esd.e_max_kwh - decayed).max(0.0);
        let mut charge_in = surplus.min(headroom / esd.eta_charge);
        if let Some(cap) = esd.max_charge_in() {
            charge_in = charge_in.min(cap);
        }
        let mut discharge_out = (deficit / esd.eta_discharge).min(decayed);
        if let Some(cap) = esd.max_discharge_out() {
            discharge_out = discharge_out.min(cap);
        }

        let (next, delivered) = esd_step(state, esd, charge_in, discharge_out)?;
        state = next;
        hours.push(DispatchHour {
            generation_kwh: gen,
            load_kwh: load,
            direct_kwh: direct,
            charged_kwh: charge_in,
            delivered_kwh: delivered,
            soc_kwh: state.soc_kwh,
            unmet_kwh: (deficit - delivered).max(0.0),
        });
    }
    Ok(DispatchTrace { initial_soc_kwh: esd.initial_soc_kwh, hours })
}

/// Greedy dispatch at one node, with PV generation derived from the node's
/// irradiance trace.
pub fn simulate_dispatch(traces: &HourlyTraces, node_idx: usize, pv: &PvConfig, esd: &EsdConfig, load_kwh: &[f64]) -> Result<DispatchTrace> {
    if load_kwh.len() != traces.horizon() {
        return Err(Error::Model(format!("load profile has {} hours, traces have {}", load_kwh.len(), traces.horizon())));
    }
    let generation = (0..traces.horizon())
        .map(|h| pv_output_w(pv, traces.irradiance(node_idx, h)).map(|w| w / 1000.0))
        .collect::<Result<Vec<_>>>()?;
    dispatch_greedy(&generation, load_kwh, esd)
}
