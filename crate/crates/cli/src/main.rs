mod settings;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;
use sps_core::benders::{self, BendersConfig};
use sps_core::error::SpsError;
use sps_core::fault::{partition, IslandPartition};
use sps_core::fixtures::{self, RandomMode};
use sps_core::model::{validate_scenario, ShipScenario};
use sps_core::oracle;
use sps_core::par;
use sps_core::problem::{build, ProblemInstance};
use sps_core::schedule::{Algorithm, Schedule, SolveReport};
use sps_core::verify::verify;

use output::{csv_line, fmt6, round_json, series_csv};
use settings::{parse_algorithm, Settings, SolverArgs};

/// Invalid input or a schedule that fails verification (exit code 1).
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

/// The solver stopped without a converged answer (exit code 2).
#[derive(Debug)]
struct NotConverged(String);

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NotConverged {}

#[derive(Parser)]
#[command(name = "sps", version, about = "Failure-mode power management for shipboard microgrids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write the report and schedule.
    Solve {
        #[arg(short, long)]
        scenario: PathBuf,
        /// Override the scenario's travel distance, nm.
        #[arg(short, long)]
        distance: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for report.json, schedule.json, timing.json and series.csv;
        /// without it the report goes to stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also write the per-interval series as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Check a schedule against every constraint family.
    Verify {
        #[arg(short, long)]
        scenario: PathBuf,
        #[arg(short = 'x', long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Classify the faults and print the island partition.
    Faults {
        #[arg(short, long)]
        scenario: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Solve over a list of distances and print one CSV row per distance.
    Sweep {
        #[arg(short, long)]
        scenario: PathBuf,
        /// Comma-separated distances, nm.
        #[arg(long, value_delimiter = ',', required_unless_present = "from")]
        distances: Vec<f64>,
        #[arg(long, requires_all = ["to", "step"])]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Repeat to get paired columns plus a gap column.
        #[arg(short = 'A', long = "compare")]
        compare: Vec<String>,
        #[command(flatten)]
        solver: SolverArgs,
        /// CSV destination; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Largest distance the scenario can sail without a shortfall.
    MaxDistance {
        #[arg(short, long)]
        scenario: PathBuf,
        /// Bisection tolerance, nm.
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Write a built-in scenario as JSON.
    GenFixture {
        /// case1, case2, minimal or random.
        name: String,
        #[arg(short, long)]
        distance: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fault layout for random: normal, non-island, generator-fault, island, semi-island.
        #[arg(long, default_value = "semi-island")]
        mode: String,
        /// Travel target relative to what the generators can afford (random only).
        #[arg(long, default_value_t = 0.6)]
        reach: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn load_scenario(path: &Path) -> Result<ShipScenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    let s = ShipScenario::from_json(&text)?;
    let broken = validate_scenario(&s);
    if !broken.is_empty() {
        let lines: Vec<String> = broken.iter().map(ToString::to_string).collect();
        bail!(Invalid(format!("{}:\n  {}", path.display(), lines.join("\n  "))));
    }
    Ok(s)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

struct Solved {
    schedule: Schedule,
    report: SolveReport,
}

fn solve_instance(inst: &ProblemInstance, st: &Settings) -> Result<Solved> {
    let started = Instant::now();
    let (schedule, report) = match st.algorithm {
        Algorithm::Benders => benders::run(
            inst,
            &BendersConfig {
                epsilon: st.epsilon,
                max_iter: st.max_iter,
                exec: st.exec(),
                ..BendersConfig::default()
            },
        )?,
        Algorithm::Lnbd => sps_core::lnbd::run(inst, &st.lnbd(inst.scenario.horizon()))?,
        Algorithm::Oracle => {
            let sol = oracle::enumerate_solve(inst, st.oracle_limit, st.exec())?;
            let mut rep = benders::report(inst, Algorithm::Oracle, &sol.schedule, started);
            rep.iterations = sol.evaluated;
            rep.kkt_max = sol.kkt_max;
            (sol.schedule, rep)
        }
    };
    Ok(Solved { schedule, report })
}

/// Report JSON without wall-clock fields, rounded for reproducibility.
fn report_json(rep: &SolveReport, part: &IslandPartition, verified: bool) -> Result<String> {
    let mut v = serde_json::to_value(rep)?;
    if let Some(o) = v.as_object_mut() {
        o.remove("wall_time_s");
        o.insert("fault_mode".into(), json!(format!("{:?}", part.mode)));
        o.insert("verified".into(), json!(verified));
    }
    round_json(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn cmd_solve(path: &Path, distance: Option<f64>, solver: &SolverArgs, out: Option<&Path>, csv: bool) -> Result<()> {
    let st = solver.resolve()?;
    let mut s = load_scenario(path)?;
    if let Some(d) = distance {
        s = s.with_distance(d);
    }
    let part = partition(&s)?;
    let inst = build(&s, &part)?;
    let solved = solve_instance(&inst, &st)?;
    let check = verify(&s, &part, &solved.schedule, 1e-6)?;
    let report = report_json(&solved.report, &part, check.passed())?;
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write(&dir.join("report.json"), &report)?;
            // Full precision: rounded values would no longer satisfy the
            // equality rows when the file is verified again.
            write(&dir.join("schedule.json"), &(serde_json::to_string_pretty(&solved.schedule)? + "\n"))?;
            let timing = json!({ "wall_time_s": solved.report.wall_time_s });
            write(&dir.join("timing.json"), &(serde_json::to_string_pretty(&timing)? + "\n"))?;
            if csv {
                write(&dir.join("series.csv"), &series_csv(&s, &part, &solved.schedule))?;
            }
        }
        None => {
            print!("{report}");
            if csv {
                print!("{}", series_csv(&s, &part, &solved.schedule));
            }
        }
    }
    let r = &solved.report;
    eprintln!(
        "{}: cost {} P_LS {} D_d {} N_rs {} iterations {} ({} s)",
        r.algorithm,
        fmt6(r.cost.total),
        fmt6(r.p_ls_total),
        fmt6(r.d_d),
        r.n_rs,
        r.iterations,
        fmt6(r.wall_time_s)
    );
    if !check.passed() {
        bail!(Invalid(format!("schedule fails verification:\n{}", check.table())));
    }
    if !r.converged {
        bail!(NotConverged(format!("{} did not converge within {} iterations", r.algorithm, r.iterations)));
    }
    Ok(())
}

fn cmd_verify(path: &Path, schedule: &Path, tol: f64, as_json: bool) -> Result<()> {
    let s = load_scenario(path)?;
    let part = partition(&s)?;
    let text = std::fs::read_to_string(schedule).with_context(|| format!("reading schedule {}", schedule.display()))?;
    let x: Schedule = serde_json::from_str(&text).map_err(|e| Invalid(format!("{}: {e}", schedule.display())))?;
    let rep = verify(&s, &part, &x, tol)?;
    if as_json {
        println!("{}", serde_json::to_string_pretty(&rep)?);
    } else {
        print!("{}", rep.table());
    }
    if !rep.passed() {
        bail!(Invalid(format!("{} constraint families violated", rep.violations().len())));
    }
    Ok(())
}

fn cmd_faults(path: &Path, as_json: bool) -> Result<()> {
    let s = load_scenario(path)?;
    let part = partition(&s)?;
    if as_json {
        println!("{}", serde_json::to_string_pretty(&part)?);
    } else {
        print!("{}", part.describe());
    }
    Ok(())
}

fn sweep_points(distances: &[f64], from: Option<f64>, to: Option<f64>, step: Option<f64>) -> Result<Vec<f64>> {
    let mut out = distances.to_vec();
    if let (Some(a), Some(b), Some(h)) = (from, to, step) {
        if !(h > 0.0) || b < a {
            bail!(Invalid(format!("bad range {a}..{b} step {h}")));
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        out.extend((0..=n).map(|i| a + i as f64 * h));
    }
    if out.is_empty() {
        bail!(Invalid("no distances given".into()));
    }
    Ok(out)
}

const SWEEP_FIELDS: [&str; 7] = ["cost", "p_ls", "n_rs", "d_d", "iterations", "converged", "error"];

fn sweep_cells(res: &Result<Solved>) -> Vec<String> {
    match res {
        Ok(x) => {
            let r = &x.report;
            vec![
                fmt6(r.cost.total),
                fmt6(r.p_ls_total),
                r.n_rs.to_string(),
                fmt6(r.d_d),
                r.iterations.to_string(),
                r.converged.to_string(),
                String::new(),
            ]
        }
        Err(e) => {
            let mut v = vec![String::new(); SWEEP_FIELDS.len() - 1];
            v.push(format!("{e:#}").replace('\n', " "));
            v
        }
    }
}

fn cmd_sweep(path: &Path, points: Vec<f64>, compare: &[String], solver: &SolverArgs, out: Option<&Path>) -> Result<()> {
    let st = solver.resolve()?;
    let s = load_scenario(path)?;
    let part = partition(&s)?;
    let algorithms: Vec<Algorithm> = if compare.is_empty() {
        vec![st.algorithm]
    } else {
        compare.iter().map(|a| parse_algorithm(a)).collect::<Result<_>>()?
    };
    let rows = par::map(st.exec(), &points, |&d| {
        algorithms
            .iter()
            .map(|&alg| {
                let inst = build(&s.with_distance(d), &part)?;
                solve_instance(&inst, &Settings { algorithm: alg, ..st.clone() })
            })
            .collect::<Vec<_>>()
    });
    let mut header = vec!["distance".to_string()];
    for alg in &algorithms {
        header.extend(SWEEP_FIELDS.iter().map(|f| format!("{alg}_{f}")));
    }
    let paired = algorithms.len() == 2;
    if paired {
        header.push(format!("gap_{}_vs_{}", algorithms[1], algorithms[0]));
    }
    let mut text = csv_line(header);
    let mut failed = 0;
    for (d, results) in points.iter().zip(&rows) {
        let mut row = vec![fmt6(*d)];
        for r in results {
            failed += usize::from(r.is_err());
            row.extend(sweep_cells(r));
        }
        if paired {
            row.push(match (&results[0], &results[1]) {
                (Ok(a), Ok(b)) => fmt6((b.report.cost.total - a.report.cost.total) / a.report.cost.total),
                _ => String::new(),
            });
        }
        text += &csv_line(row);
    }
    match out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    if failed > 0 {
        eprintln!("{failed} sweep entries failed; see the error column");
    }
    Ok(())
}

fn cmd_max_distance(path: &Path, tol: f64, solver: &SolverArgs) -> Result<()> {
    let st = solver.resolve()?;
    let s = load_scenario(path)?;
    let part = partition(&s)?;
    match oracle::max_distance_bisection(&s, &part, tol, st.oracle_limit, st.exec()) {
        Ok(d) => {
            println!("{}", fmt6(d));
            Ok(())
        }
        // Too many binaries to enumerate: ask for the kinematic limit and read
        // back how far the penalized problem gets.
        Err(SpsError::TooLarge { .. }) => {
            let top = s.horizon() as f64 * s.dt() * s.propulsion.v_max;
            let inst = build(&s.with_distance(top), &part)?;
            let solved = solve_instance(&inst, &st)?;
            eprintln!("enumeration too large; estimated with {}", solved.report.algorithm);
            println!("{}", fmt6(top - solved.report.d_d));
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}

fn parse_mode(name: &str) -> Result<RandomMode> {
    Ok(match name {
        "normal" => RandomMode::Normal,
        "non-island" => RandomMode::NonIsland,
        "generator-fault" => RandomMode::GeneratorFault,
        "island" => RandomMode::Island,
        "semi-island" => RandomMode::SemiIsland,
        other => bail!(Invalid(format!("unknown mode {other:?}"))),
    })
}

fn cmd_gen_fixture(name: &str, distance: Option<f64>, seed: u64, mode: &str, reach: f64, out: Option<&Path>) -> Result<()> {
    let s = match name {
        "case1" => fixtures::case1(distance.unwrap_or(120.0)),
        "case2" => fixtures::case2(distance.unwrap_or(140.0)),
        "minimal" => fixtures::minimal(&[3.0, 4.0, 5.0, 4.0]).with_distance(distance.unwrap_or(0.0)),
        "random" => {
            let s = fixtures::random_small(seed, parse_mode(mode)?, reach);
            match distance {
                Some(d) => s.with_distance(d),
                None => s,
            }
        }
        other => bail!(Invalid(format!("unknown fixture {other:?}"))),
    };
    let text = s.to_json()? + "\n";
    match out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Invalid>().is_some() {
        return 1;
    }
    if e.downcast_ref::<NotConverged>().is_some() {
        return 2;
    }
    if let Some(e) = e.downcast_ref::<SpsError>() {
        return match e {
            SpsError::MasterInfeasible(_) | SpsError::Numerical(_) => 2,
            SpsError::Io(_) => 3,
            _ => 1,
        };
    }
    if e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) {
        return 3;
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { scenario, distance, solver, out, csv } => cmd_solve(&scenario, distance, &solver, out.as_deref(), csv),
        Command::Verify { scenario, schedule, tol, json } => cmd_verify(&scenario, &schedule, tol, json),
        Command::Faults { scenario, json } => cmd_faults(&scenario, json),
        Command::Sweep { scenario, distances, from, to, step, compare, solver, out } => {
            let points = sweep_points(&distances, from, to, step)?;
            cmd_sweep(&scenario, points, &compare, &solver, out.as_deref())
        }
        Command::MaxDistance { scenario, tol, solver } => cmd_max_distance(&scenario, tol, &solver),
        Command::GenFixture { name, distance, seed, mode, reach, out } => {
            cmd_gen_fixture(&name, distance, seed, &mode, reach, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
