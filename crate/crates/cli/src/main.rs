use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fogcache::energy::simulate_dispatch;
use fogcache::milp::lp_format::export_lp;
use fogcache::scenarios::{emit_report, run_scenario, solve_instance, ScenarioKind, ScenarioSpec};
use fogcache::timeseries::{parse_matrix_csv, synth_demand, synth_irradiance, DemandProfile, TraceLimits};
use fogcache::{build_nsfnet, shortest_paths, Config, DeliveryMode, HourlyTraces, ScenarioFlags, SolverOptions, Status, Topology};

#[derive(Parser)]
#[command(name = "fogcache", version, about = "Brown-energy optimisation for cloud and fog video delivery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print its energy breakdown.
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t = Delivery::Optimize)]
        delivery: Delivery,
        /// Directory for solution.csv and breakdown.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the standard sweeps and write its report.
    Scenario {
        #[arg(value_parser = parse_kind)]
        kind: ScenarioKind,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated sweep values replacing the standard ones.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the instance as an LP file.
    ExportLp {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy battery dispatch at one node, with the fog load implied by
    /// serving all of that node's demand locally.
    SimulateEsd {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Node id; defaults to the first topology node.
        #[arg(long)]
        node: Option<u32>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// TOML run configuration; the built-in desk configuration otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// TOML topology; NSFNET otherwise.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Demand trace CSV (`node,hour,value` in Gbps).
    #[arg(long, conflicts_with = "synthetic_demand", required_unless_present = "synthetic_demand")]
    demand: Option<PathBuf>,
    /// Synthetic demand as `peak:profile`, e.g. `100:diurnal`.
    #[arg(long, value_parser = parse_synthetic)]
    synthetic_demand: Option<(f64, DemandProfile)>,
    /// Irradiance trace CSV (`node,hour,value` in W/m2).
    #[arg(long)]
    irradiance: Option<PathBuf>,
    /// Peak of the synthetic half-sine irradiance used without --irradiance.
    #[arg(long, default_value_t = 1000.0)]
    sun_peak: f64,
    /// Trace length in hours.
    #[arg(long)]
    hours: Option<usize>,
    #[arg(long)]
    pue_fog: Option<f64>,
    /// Solar cell area per fog site in m2.
    #[arg(long)]
    ssc: Option<f64>,
    /// Battery capacity per fog site in kWh; a positive value enables the battery.
    #[arg(long)]
    emax: Option<f64>,
    /// Model lit fibres per link instead of amortising EDFA power per wavelength.
    #[arg(long)]
    exact_fibers: bool,
    /// Treat cloud data centre power as renewable.
    #[arg(long)]
    cdc_renewable: bool,
    /// Require the battery to end the day where it started.
    #[arg(long)]
    cyclic_soc: bool,
    /// Draw random per-node scale factors for synthetic traces.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SolverArgs {
    /// Wall-clock limit for the branch-and-bound search, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Delivery {
    Optimize,
    Cloud,
    Fog,
}

fn parse_kind(s: &str) -> Result<ScenarioKind, String> {
    s.parse().map_err(|e: fogcache::Error| e.to_string())
}

fn parse_synthetic(s: &str) -> Result<(f64, DemandProfile), String> {
    let (peak, profile) = s.split_once(':').ok_or("expected peak:profile")?;
    let peak: f64 = peak.trim().parse().map_err(|_| format!("invalid peak `{peak}`"))?;
    let profile = profile.parse::<DemandProfile>().map_err(|e| e.to_string())?;
    Ok((peak, profile))
}

struct Instance {
    topo: Topology,
    cfg: Config,
    traces: HourlyTraces,
    flags: ScenarioFlags,
}

impl InstanceArgs {
    fn load(&self) -> Result<Instance> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::desk_default(),
        };
        let topo = match &self.topology {
            Some(p) => Topology::load(p)?,
            None => build_nsfnet(),
        };
        let mut flags = ScenarioFlags {
            cdc_renewable: self.cdc_renewable,
            exact_edfa_fibers: self.exact_fibers,
            cyclic_soc: self.cyclic_soc,
            ..Default::default()
        };
        if let Some(v) = self.pue_fog {
            cfg.power.pue_fog = v;
        }
        if let Some(v) = self.ssc {
            cfg.pv.area_m2 = v;
        }
        if let Some(v) = self.emax {
            cfg.esd.e_max_kwh = v;
            cfg.esd.initial_soc_kwh = cfg.esd.initial_soc_kwh.min(v);
        }
        flags.esd_enabled = cfg.esd.e_max_kwh > 0.0;
        cfg.validate()?;

        let hours = self.hours.unwrap_or(24);
        let limits = TraceLimits { horizon: self.hours, max_demand_gbps: None };
        let mut rng = self.seed.map(ChaCha8Rng::seed_from_u64);
        let demand = match (&self.demand, self.synthetic_demand) {
            (Some(p), _) => read_matrix(p, &topo, limits.horizon)?,
            (None, Some((peak, profile))) => {
                let mut d = synth_demand(&topo, peak, profile, hours)?;
                if let Some(rng) = rng.as_mut() {
                    for row in &mut d {
                        let s = rng.gen_range(0.5..=1.0);
                        row.iter_mut().for_each(|v| *v *= s);
                    }
                }
                d
            }
            (None, None) => bail!("one of --demand or --synthetic-demand is required"),
        };
        let irradiance = match &self.irradiance {
            Some(p) => read_matrix(p, &topo, limits.horizon)?,
            None => {
                let scale: Option<Vec<f64>> = rng.as_mut().map(|r| (0..topo.node_count()).map(|_| r.gen_range(0.6..=1.0)).collect());
                synth_irradiance(&topo, self.sun_peak, hours, scale.as_deref())
            }
        };
        let traces = HourlyTraces::new(&topo, demand, irradiance, limits)?;
        Ok(Instance { topo, cfg, traces, flags })
    }
}

fn read_matrix(path: &Path, topo: &Topology, horizon: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_matrix_csv(&text, &path.display().to_string(), topo, horizon)?)
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions> {
        let opts = SolverOptions {
            gap_limit: self.gap,
            node_limit: self.node_limit,
            time_limit: self.time_limit.map(Duration::try_from_secs_f64).transpose().context("invalid --time-limit")?,
            ..Default::default()
        };
        opts.validate()?;
        Ok(opts)
    }
}

fn exit_for(status: Status) -> ExitCode {
    match status {
        Status::Optimal => ExitCode::SUCCESS,
        Status::Infeasible => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { instance, solver, delivery, out } => {
            let mut inst = instance.load()?;
            inst.flags.delivery = match delivery {
                Delivery::Optimize => DeliveryMode::Optimize,
                Delivery::Cloud => DeliveryMode::ForceCloud,
                Delivery::Fog => DeliveryMode::ForceFog,
            };
            let opts = solver.options()?;
            let paths = shortest_paths(&inst.topo)?;
            let r = solve_instance(&inst.topo, &paths, &inst.cfg, &inst.traces, inst.flags, &opts)?;
            println!("{}", r.solution.summary_line());
            if let Some(e) = &r.evaluation {
                let b = &e.breakdown;
                println!("brown_kwh={} core={} metro={} olt={} fdc={} cdc={}", b.total_brown(), b.core, b.metro, b.olt, b.fdc, b.cdc);
                println!(
                    "fog_fraction={} solar_direct_kwh={} solar_charged_kwh={} esd_delivered_kwh={}",
                    e.fog_fraction(),
                    e.solar_direct_kwh,
                    e.solar_charged_kwh,
                    e.esd_delivered_kwh
                );
            }
            if let Some(dir) = out {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                if r.solution.has_values() {
                    r.solution.write_csv(&r.model.problem, dir.join("solution.csv"))?;
                }
                if let Some(e) = &r.evaluation {
                    fs::write(dir.join("breakdown.csv"), e.cells_csv()).with_context(|| format!("writing {}", dir.display()))?;
                }
            }
            if r.solution.status != Status::Optimal && r.solution.status != Status::Infeasible {
                eprintln!("error: solver stopped with status {}", r.solution.status);
            }
            Ok(exit_for(r.solution.status))
        }
        Command::Scenario { kind, instance, solver, sweep, out } => {
            let inst = instance.load()?;
            let spec = match sweep {
                Some(values) => ScenarioSpec::new(kind, values)?,
                None => ScenarioSpec::standard(kind),
            };
            let report = run_scenario(&spec, &inst.topo, &inst.cfg, &inst.traces, &solver.options()?)?;
            emit_report(&report, &out)?;
            println!("baseline ({}): {} brown kWh/day [{}]", report.baseline.label, report.baseline.brown_kwh, report.baseline.status);
            for p in &report.points {
                let savings = p.savings.map_or("n/a".to_string(), |s| format!("{:.2}%", 100.0 * s));
                println!("{}={} status={} brown_kwh={} savings={savings}", kind.sweep_label(), p.value, p.status, p.brown_kwh);
            }
            let worst = [Status::Infeasible, Status::Unbounded, Status::IterationLimit]
                .into_iter()
                .find(|s| report.points.iter().any(|p| p.status == *s) || report.baseline.status == *s);
            Ok(exit_for(worst.unwrap_or(Status::Optimal)))
        }
        Command::ExportLp { instance, out } => {
            let inst = instance.load()?;
            let paths = shortest_paths(&inst.topo)?;
            let inputs = fogcache::ModelInputs {
                topo: &inst.topo,
                paths: &paths,
                power: &inst.cfg.power,
                traces: &inst.traces,
                pv: &inst.cfg.pv,
                esd: &inst.cfg.esd,
            };
            let model = fogcache::build_problem(inputs, inst.flags)?;
            export_lp(&model.problem, &out)?;
            println!("{} variables, {} constraints -> {}", model.problem.num_vars(), model.problem.num_constraints(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::SimulateEsd { instance, node, out } => {
            let inst = instance.load()?;
            let idx = match node {
                Some(id) => inst.topo.index_of(id).with_context(|| format!("node {id} is not in the topology"))?,
                None => 0,
            };
            let p = &inst.cfg.power;
            let kw_per_gbps = p.pue_fog * p.net_overhead_ratio * p.p_server_w_per_gbps / 1000.0;
            let load: Vec<f64> = inst.traces.demand_matrix()[idx].iter().map(|d| kw_per_gbps * d).collect();
            let trace = simulate_dispatch(&inst.traces, idx, &inst.cfg.pv, &inst.cfg.esd, &load)?;
            match out {
                Some(path) => fs::write(&path, trace.to_csv()).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{}", trace.to_csv()),
            }
            eprintln!(
                "charged {:.3} kWh, delivered {:.3} kWh, unmet {:.3} kWh, final soc {:.3} kWh",
                trace.total_charged(),
                trace.total_delivered(),
                trace.total_unmet(),
                trace.final_soc()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // exit code 2 is reserved for infeasible instances
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
