//! `assetflow` command-line interface.
//!
//! Exit codes: 0 success, 1 usage, 2 validation/parse, 3 numerical
//! failure. Diagnostics go to stderr; data goes to files or stdout.

use assetflow::analysis::{oscillation_stats, wealth_stats};
use assetflow::bifurcation::{
    hopf_threshold_amplitude, hopf_threshold_eigen, scan, ParamPath, ScanOpts,
};
use assetflow::equilibrium::{
    calibrate_shares, fundamental_equilibrium, solve_equilibrium, solve_equilibrium_multistart,
    EquilibriumKind, NewtonOptions,
};
use assetflow::error::Error as AfError;
use assetflow::output::{
    bifurcation_svg, diagram_csv, trajectory_csv, trajectory_svg, write_text, TrajectoryPlot,
};
use assetflow::scenario::{load_scenario, Scenario};
use assetflow::simulate::integrate;
use assetflow::stability::assemble_jacobian;
use assetflow::{FlowMode, State};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "assetflow",
    about = "Multi-asset, multi-group asset-flow market model: simulation, equilibrium, stability and bifurcation analysis",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file path or bundled name (oil_nigeria_libya, gas_market).
    #[arg(long)]
    scenario: String,
    /// Seed for generated scenarios (gas_market).
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Override the scenario's flow mode.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<FlowMode>,
}

fn parse_mode(s: &str) -> Result<FlowMode, String> {
    match s {
        "fixed" | "fixed-endowment" => Ok(FlowMode::FixedEndowment),
        "flow" | "closed-flow" => Ok(FlowMode::ClosedFlow),
        other => Err(format!("unknown mode `{other}` (use fixed|flow)")),
    }
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario, AfError> {
        let mut sc = load_scenario(&self.scenario, self.seed)?;
        if let Some(mode) = self.mode {
            sc.spec = sc.spec.with_flow_mode(mode);
        }
        Ok(sc)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scenario over time and write the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Integration horizon in days (default: scenario's run.t_end).
        #[arg(long)]
        t_end: Option<f64>,
        /// Trajectory CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Price-trajectory SVG output path.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Wealth-fraction SVG output path.
        #[arg(long)]
        svg_wealth: Option<PathBuf>,
    },
    /// Solve for a price equilibrium with sentiments eliminated.
    Equilibrium {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Starting prices, comma separated (default: fundamentals).
        #[arg(long)]
        from_prices: Option<String>,
        /// Multistart over a per-asset grid of this many points spanning
        /// [0.2, 3] times the fundamental price.
        #[arg(long)]
        multistart: Option<usize>,
    },
    /// Rescale shares so the fundamental point is an exact equilibrium;
    /// print or write the calibrated scenario.
    Calibrate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output path for the calibrated scenario TOML (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalue table and stability classification at the fundamental
    /// equilibrium.
    Stability {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Eigenvalue CSV output path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan a parameter, write the bifurcation diagram, and locate the
    /// Hopf threshold.
    Bifurcate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Parameter path, e.g. groups.china.q1 (default: scenario [scan]).
        #[arg(long)]
        param: Option<String>,
        /// Scan range LO:HI (default: scenario [scan]).
        #[arg(long)]
        range: Option<String>,
        /// Number of scan points.
        #[arg(long)]
        points: Option<usize>,
        /// Integration horizon per scan point in days.
        #[arg(long)]
        t_end: Option<f64>,
        /// Also locate the onset by the amplitude route (second, slower
        /// code path) and report both thresholds.
        #[arg(long)]
        amplitude_threshold: bool,
        /// Diagram CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Diagram SVG output path.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Post-transient wealth-fraction statistics per group.
    WealthStats {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        t_end: Option<f64>,
        /// Restrict to one group by name.
        #[arg(long)]
        group: Option<String>,
        /// Fraction of the trajectory discarded as transient.
        #[arg(long)]
        transient: Option<f64>,
    },
    /// Scenario-file utilities.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Print the fully resolved scenario (defaults applied) as TOML.
    PrintEffective {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Run the numerical self-check (calibrated scenarios must have a
        /// fundamental residual below 1e-10).
        #[arg(long)]
        self_check: bool,
    },
}

fn exit_code_for(err: &AfError) -> u8 {
    match err {
        AfError::Parse { .. } | AfError::Validation { .. } | AfError::InvalidParamPath { .. } => 2,
        AfError::Io { .. } => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ASSETFLOW_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout with success; everything
            // else is a usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn parse_prices(s: &str) -> Result<Vec<f64>, AfError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| AfError::validation("prices", format!("{e}: `{x}`")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), AfError> {
    match cli.command {
        Command::Simulate {
            scenario,
            t_end,
            out,
            svg,
            svg_wealth,
        } => {
            let sc = scenario.load()?;
            let t_end = t_end.unwrap_or(sc.run.t_end);
            let initial = sc.initial_state();
            log::info!("integrating `{}` for {t_end} days", sc.name);
            let traj = integrate(&sc.spec, &initial, t_end, sc.run.sim)?;
            if let Some(path) = &out {
                write_text(path, &trajectory_csv(&traj, &sc.spec)?)?;
                eprintln!("wrote {}", path.display());
            }
            if let Some(path) = &svg {
                write_text(path, &trajectory_svg(&traj, &sc.spec, TrajectoryPlot::Prices)?)?;
                eprintln!("wrote {}", path.display());
            }
            if let Some(path) = &svg_wealth {
                write_text(path, &trajectory_svg(&traj, &sc.spec, TrajectoryPlot::Wealth)?)?;
                eprintln!("wrote {}", path.display());
            }
            if out.is_none() && svg.is_none() && svg_wealth.is_none() {
                print!("{}", trajectory_csv(&traj, &sc.spec)?);
            }
            let last = traj.states.last().unwrap();
            eprintln!(
                "final prices: {}",
                last.prices()
                    .iter()
                    .map(|p| format!("{p:.4}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            Ok(())
        }
        Command::Equilibrium {
            scenario,
            from_prices,
            multistart,
        } => {
            let sc = scenario.load()?;
            let fundamentals: Vec<f64> = sc
                .spec
                .assets
                .iter()
                .map(|a| a.fundamental_price)
                .collect();
            let opts = NewtonOptions::default();
            if let Some(n) = multistart {
                let mut starts = Vec::new();
                for k in 0..n.max(2) {
                    let f = 0.2 + 2.8 * k as f64 / (n.max(2) - 1) as f64;
                    starts.push(fundamentals.iter().map(|p| p * f).collect());
                }
                let results = solve_equilibrium_multistart(&sc.spec, &starts, opts);
                println!("found {} distinct equilibria", results.len());
                for eq in results {
                    print_equilibrium(&sc, &eq);
                }
            } else {
                let start = match from_prices {
                    Some(s) => parse_prices(&s)?,
                    None => fundamentals,
                };
                let eq = solve_equilibrium(&sc.spec, &start, opts)?;
                print_equilibrium(&sc, &eq);
            }
            Ok(())
        }
        Command::Calibrate { scenario, out } => {
            let mut sc = scenario.load()?;
            sc.spec = calibrate_shares(&sc.spec)?;
            let eq = fundamental_equilibrium(&sc.spec);
            eprintln!(
                "calibrated; fundamental residual = {:.3e}",
                eq.residual_norm
            );
            let text = sc.to_toml();
            match out {
                Some(path) => {
                    write_text(&path, &text)?;
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Stability { scenario, out } => {
            let sc = scenario.load()?;
            let spec = sc.spec.clone().with_flow_mode(FlowMode::FixedEndowment);
            let report = assemble_jacobian(&spec, &State::fundamental(&spec))?;
            let mut csv = String::from("re,im\n");
            for e in &report.eigenvalues {
                csv.push_str(&format!("{:.16e},{:.16e}\n", e.re, e.im));
            }
            match out {
                Some(path) => {
                    write_text(&path, &csv)?;
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{csv}"),
            }
            eprintln!(
                "N = {}, max Re lambda = {:.6e}, classification: {}",
                report.matrix.nrows(),
                report.max_real_part,
                report.classification
            );
            Ok(())
        }
        Command::Bifurcate {
            scenario,
            param,
            range,
            points,
            t_end,
            amplitude_threshold,
            out,
            svg,
        } => {
            let sc = scenario.load()?;
            let request = sc.scan.clone();
            let param = param
                .or_else(|| request.as_ref().map(|r| r.parameter.clone()))
                .ok_or_else(|| {
                    AfError::validation("--param", "no parameter given and none in the scenario")
                })?;
            let path = ParamPath::parse(&param)?;
            let (lo, hi) = match range {
                Some(r) => {
                    let parts: Vec<&str> = r.split(':').collect();
                    if parts.len() != 2 {
                        return Err(AfError::validation("--range", "expected LO:HI"));
                    }
                    (
                        parts[0].parse().map_err(|e| {
                            AfError::validation("--range", format!("{e}: `{}`", parts[0]))
                        })?,
                        parts[1].parse().map_err(|e| {
                            AfError::validation("--range", format!("{e}: `{}`", parts[1]))
                        })?,
                    )
                }
                None => match &request {
                    Some(r) => (r.lo, r.hi),
                    None => return Err(AfError::validation("--range", "no range given")),
                },
            };
            let points = points
                .or_else(|| request.as_ref().map(|r| r.points))
                .unwrap_or(33);
            let opts = ScanOpts {
                initial_prices: Some(sc.initial_prices.clone()),
                t_end: t_end
                    .or_else(|| request.as_ref().map(|r| r.t_end))
                    .unwrap_or(2000.0),
                transient_fraction: sc.run.transient_fraction,
                sim: sc.run.sim,
            };
            log::info!("scanning {path} over [{lo}, {hi}] with {points} points");
            let mut diagram = scan(&sc.spec, &path, lo, hi, points, &opts)?;
            match hopf_threshold_eigen(&sc.spec, &path, lo, hi, 1e-4) {
                Ok(th) => {
                    diagram.threshold_eigen = Some(th.param);
                    eprintln!(
                        "eigenvalue threshold: {:.6} (crossing |Im| = {:.6}, implied period {:.1} days)",
                        th.param,
                        th.crossing_im,
                        2.0 * std::f64::consts::PI / th.crossing_im
                    );
                }
                Err(e) => eprintln!("eigenvalue threshold: none ({e})"),
            }
            if amplitude_threshold {
                match hopf_threshold_amplitude(&sc.spec, &path, lo, hi, 1e-3, &opts) {
                    Ok(th) => {
                        diagram.threshold_amplitude = Some(th);
                        eprintln!("amplitude threshold: {th:.6}");
                    }
                    Err(e) => eprintln!("amplitude threshold: none ({e})"),
                }
            }
            if let Some(path) = &out {
                write_text(path, &diagram_csv(&diagram, &sc.spec)?)?;
                eprintln!("wrote {}", path.display());
            }
            if let Some(path) = &svg {
                write_text(path, &bifurcation_svg(&diagram, &sc.spec)?)?;
                eprintln!("wrote {}", path.display());
            }
            if out.is_none() && svg.is_none() {
                print!("{}", diagram_csv(&diagram, &sc.spec)?);
            }
            Ok(())
        }
        Command::WealthStats {
            scenario,
            t_end,
            group,
            transient,
        } => {
            let sc = scenario.load()?;
            let t_end = t_end.unwrap_or(sc.run.t_end);
            let transient = transient.unwrap_or(sc.run.transient_fraction);
            let traj = integrate(&sc.spec, &sc.initial_state(), t_end, sc.run.sim)?;
            println!("group,mean,std,min,max");
            for (j, g) in sc.spec.groups.iter().enumerate() {
                if let Some(name) = &group {
                    if &g.name != name {
                        continue;
                    }
                }
                let stats = wealth_stats(&traj, j, transient)?;
                println!(
                    "{},{:.6},{:.3e},{:.6},{:.6}",
                    g.name, stats.mean, stats.std, stats.min, stats.max
                );
            }
            // Oscillation summary to stderr for orientation.
            for (i, a) in sc.spec.assets.iter().enumerate() {
                if let Ok(osc) = oscillation_stats(&traj, i, transient) {
                    eprintln!(
                        "{}: amplitude {:.4}, period {}, converged: {}",
                        a.name,
                        osc.amplitude,
                        osc.period
                            .map(|p| format!("{p:.2} days"))
                            .unwrap_or_else(|| "n/a".into()),
                        osc.converged
                    );
                }
            }
            Ok(())
        }
        Command::Scenario { command } => match command {
            ScenarioCommand::PrintEffective {
                scenario,
                self_check,
            } => {
                let sc = scenario.load()?;
                if self_check {
                    sc.self_check()?;
                    eprintln!("self-check passed");
                }
                print!("{}", sc.to_toml());
                Ok(())
            }
        },
    }
}

fn print_equilibrium(sc: &Scenario, eq: &assetflow::equilibrium::EquilibriumResult) {
    let kind = match eq.kind {
        EquilibriumKind::Fundamental => "fundamental",
        EquilibriumKind::NonFundamental => "non-fundamental",
    };
    println!(
        "kind: {kind}; residual_norm: {:.3e}; iterations: {}",
        eq.residual_norm, eq.iterations
    );
    for (a, p) in sc.spec.assets.iter().zip(eq.state.prices()) {
        println!("  P.{} = {:.10}", a.name, p);
    }
    for (i, r) in eq.per_asset_residuals.iter().enumerate() {
        println!("  residual.{} = {:.6e}", sc.spec.assets[i].name, r);
    }
}
