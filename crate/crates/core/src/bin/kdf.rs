use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kdf::pipeline::bench::{
    default_algorithms, run_bench, summarize, summary_text, write_rows, write_summary_csv,
};
use kdf::pipeline::scenario::PolicyName;
use kdf::pipeline::{
    breach_windows, check_trace, endow, exit_code, plan, read_trace, run_kdf, write_trace,
    Scenario, EXIT_OK, EXIT_SIMULATION, EXIT_USAGE,
};
use kdf::{KdfError, Result};

#[derive(Parser)]
#[command(
    name = "kdf",
    version,
    about = "Plan in the extended free space, smooth, and track with funnel control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a path only.
    Plan(Common),
    /// Plan and time-endow the path.
    Traj(Common),
    /// Plan, endow, and simulate the closed loop.
    Run(Common),
    /// Compare planners over seeded repeats.
    Bench(Common),
    /// Verify the invariants of a recorded trace.
    CheckTrace {
        trace: PathBuf,
        /// Scenario whose disturbance windows excuse funnel breaches.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_parser = ["analytic", "sampled", "swept"])]
    policy: Option<String>,
    /// Samples per check for the sampled policy.
    #[arg(long)]
    ns: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<Scenario> {
        let mut s = Scenario::load(&self.scenario)?;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(p) = &self.policy {
            s.planner.policy = p.parse::<PolicyName>()?;
        }
        if let Some(ns) = self.ns {
            s.planner.samples = ns;
            s.bench.ns = vec![ns];
        }
        fs::create_dir_all(&self.out)?;
        Ok(s)
    }
}

fn create(dir: &FsPath, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_path(dir: &FsPath, path: &kdf::planners::Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, "path.csv")?);
    let dim = path.start().dim();
    let mut header = vec!["index".to_string()];
    header.extend((0..dim).map(|i| format!("q{i}")));
    w.write_record(&header)?;
    for (i, q) in path.waypoints.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(q.to_flat().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_plan(c: &Common) -> Result<i32> {
    let s = c.load()?;
    let setup = s.setup()?;
    let path = plan(&s, &setup)?;
    write_path(&c.out, &path)?;
    println!(
        "{}: {} waypoints, d_T length {:.4}, {} nodes, {} iterations, {:.1} ms",
        path.stats.algorithm,
        path.waypoints.len(),
        path.length,
        path.stats.nodes,
        path.stats.iterations,
        path.stats.wall_ms
    );
    Ok(EXIT_OK)
}

fn cmd_traj(c: &Common) -> Result<i32> {
    let s = c.load()?;
    let setup = s.setup()?;
    let path = plan(&s, &setup)?;
    write_path(&c.out, &path)?;
    let (traj, report) = endow(&s, &setup, &path)?;
    traj.write_csv(create(&c.out, "trajectory.csv")?, s.sim.dt_check())?;
    println!(
        "trajectory: {} waypoints over {:.3} s, {} samples checked, {} repair rounds",
        path.waypoints.len(),
        traj.duration(),
        report.samples,
        report.repair_rounds
    );
    Ok(EXIT_OK)
}

fn cmd_run(c: &Common) -> Result<i32> {
    let s = c.load()?;
    let out = run_kdf(&s)?;
    write_path(&c.out, &out.path)?;
    write_trace(create(&c.out, "trace.csv")?, &out.layout, &out.trace)?;
    println!("{}", out.verdict);
    Ok(out.exit_code())
}

fn cmd_bench(c: &Common) -> Result<i32> {
    let s = c.load()?;
    let algs = default_algorithms(&s);
    let rows = run_bench(&s, &algs, s.bench.repeats)?;
    let summary = summarize(&rows);
    write_rows(create(&c.out, "bench.csv")?, &rows)?;
    write_summary_csv(create(&c.out, "bench_summary.csv")?, &summary)?;
    let text = summary_text(&summary);
    fs::write(c.out.join("bench_summary.txt"), &text)?;
    print!("{text}");
    Ok(EXIT_OK)
}

fn cmd_check(trace: &FsPath, scenario: Option<&FsPath>) -> Result<i32> {
    let (layout, records) = read_trace(File::open(trace)?)?;
    let windows = match scenario {
        Some(p) => breach_windows(&Scenario::load(p)?),
        None => Vec::new(),
    };
    let c = check_trace(&layout, &records);
    println!(
        "{} records, monotone {}, containment violations {} ({} outside windows), xi residual {:.3e}, max |xi| {:.6}, collisions {}, min dist {:.4}, rot singular {}, u finite {}",
        c.ticks,
        c.monotone,
        c.containment_violations.len(),
        c.violations_outside(&windows),
        c.xi_residual,
        c.max_abs_xi,
        c.collisions,
        c.min_dist,
        c.rot_singular,
        c.u_finite
    );
    Ok(if c.is_clean(&windows) {
        EXIT_OK
    } else {
        EXIT_SIMULATION
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(c) => cmd_plan(c),
        Command::Traj(c) => cmd_traj(c),
        Command::Run(c) => cmd_run(c),
        Command::Bench(c) => cmd_bench(c),
        Command::CheckTrace { trace, scenario } => cmd_check(trace, scenario.as_deref()),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                KdfError::Io(_) | KdfError::Toml(_) | KdfError::Csv(_) => EXIT_USAGE,
                ref other => exit_code(other),
            }
        }
    };
    ExitCode::from(code as u8)
}
