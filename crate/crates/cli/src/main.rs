//! `excavate`: batch runner for scenario, sweep and ablation experiments.
//!
//! Runs fan out over the harness; every file is written afterwards from this
//! thread. P-stopped runs are results, so the exit code is nonzero only for
//! config and I/O failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use excavation::config::{load_config, render_config, ExperimentConfig};
use excavation::controllers::ControllerKind;
use excavation::export::{self, PoseFormat};
use excavation::harness::{self, ObstacleDemo, RunLog, ScenarioConfig, ScenarioResult};
use excavation::parallel::{self, Execution};
use excavation::terrain::Heightmap;

#[derive(Parser, Debug)]
#[command(
    name = "excavate",
    version,
    about = "Simulated scooping experiments with adaptive impedance control"
)]
struct Cli {
    /// Run repetitions one after another instead of in parallel.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and export per-repetition logs.
    Run {
        #[command(flatten)]
        io: ConfigIo,
        /// Base seed; repetition r uses seed + r.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of repetitions.
        #[arg(long)]
        reps: Option<usize>,
        #[command(flatten)]
        logs: LogOptions,
    },
    /// Sweep one primitive parameter at a time over its levels.
    Sweep {
        #[command(flatten)]
        io: ConfigIo,
    },
    /// Run the controller by trajectory ablation.
    Ablate {
        #[command(flatten)]
        io: ConfigIo,
    },
    /// Dig into a hidden rigid obstacle.
    ObstacleDemo {
        /// Obstacle: slope or rock.
        #[arg(long, value_parser = parse_demo)]
        kind: ObstacleDemo,
        /// Controller: impedance or raic.
        #[arg(long, value_parser = parse_controller)]
        controller: ControllerKind,
        /// Output directory; created if missing.
        #[arg(short, long)]
        output: PathBuf,
        /// Replace existing output files.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        logs: LogOptions,
    },
    /// Write the canonical config, reference plans and initial heightmap
    /// without running anything.
    Export {
        #[command(flatten)]
        io: ConfigIo,
    },
}

#[derive(Args, Debug)]
struct ConfigIo {
    /// Experiment file (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(short, long)]
    output: PathBuf,
    /// Replace existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct LogOptions {
    /// Poses written to each strobe file.
    #[arg(long, default_value_t = 10)]
    strobe: usize,
    /// Pose columns in step logs: euler or matrix.
    #[arg(long, default_value = "euler", value_parser = parse_pose_format)]
    pose_format: PoseFormat,
}

fn parse_demo(s: &str) -> std::result::Result<ObstacleDemo, String> {
    s.parse().map_err(|e: excavation::Error| e.to_string())
}

fn parse_controller(s: &str) -> std::result::Result<ControllerKind, String> {
    s.parse().map_err(|e: excavation::Error| e.to_string())
}

fn parse_pose_format(s: &str) -> std::result::Result<PoseFormat, String> {
    s.parse().map_err(|e: excavation::Error| e.to_string())
}

/// What one invocation did, written next to its outputs.
#[derive(Debug, serde::Serialize)]
struct RunManifest {
    command: &'static str,
    config: Option<PathBuf>,
    output: PathBuf,
    seed_override: Option<u64>,
    repetition_override: Option<usize>,
    files: Vec<PathBuf>,
}

struct Writer {
    dir: PathBuf,
    force: bool,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path, force: bool) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            force,
            files: Vec::new(),
        })
    }

    fn file(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
    ) -> Result<()> {
        let path = export::write_file(&self.dir.join(name), self.force, body)?;
        log::info!("wrote {}", path.display());
        self.files.push(path);
        Ok(())
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = export::to_json(value)?;
        self.file(name, |w| std::io::Write::write_all(w, text.as_bytes()))
    }

    fn heightmap(&mut self, name: &str, map: &Heightmap) -> Result<()> {
        self.file(name, |w| export::write_heightmap_csv(w, map))
    }

    fn run_log(&mut self, stem: &str, log: &RunLog, options: &LogOptions) -> Result<()> {
        self.file(&format!("{stem}.csv"), |w| {
            export::write_run_csv(w, log, options.pose_format)
        })?;
        self.file(&format!("{stem}_strobe.csv"), |w| {
            export::write_strobe_csv(w, log, options.strobe)
        })?;
        self.file(&format!("{stem}_plan.csv"), |w| {
            export::write_plan_csv(w, &log.plan)
        })?;
        if let Some(map) = &log.heightmap {
            self.heightmap(&format!("{stem}_heightmap.csv"), map)?;
        }
        Ok(())
    }

    fn finish(self, manifest: RunManifest) -> Result<()> {
        self.finish_as("manifest.json", manifest)
    }

    fn finish_as(mut self, name: &str, mut manifest: RunManifest) -> Result<()> {
        manifest.files = std::mem::take(&mut self.files);
        self.json(name, &manifest)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Run {
            io,
            seed,
            reps,
            logs,
        } => run(&io, seed, reps, &logs, execution),
        Command::Sweep { io } => sweep(&io, execution),
        Command::Ablate { io } => ablate(&io, execution),
        Command::ObstacleDemo {
            kind,
            controller,
            output,
            force,
            logs,
        } => obstacle_demo(kind, controller, &output, force, &logs),
        Command::Export { io } => export_config(&io),
    }
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    load_config(path).with_context(|| format!("in {}", path.display()))
}

fn manifest(command: &'static str, io: &ConfigIo) -> RunManifest {
    RunManifest {
        command,
        config: Some(io.config.clone()),
        output: io.output.clone(),
        seed_override: None,
        repetition_override: None,
        files: Vec::new(),
    }
}

fn scenario_of(config: ExperimentConfig, path: &Path) -> Result<ScenarioConfig> {
    match config {
        ExperimentConfig::Scenario(c) => Ok(c),
        ExperimentConfig::Sweep(s) => Ok(s.scenario),
        ExperimentConfig::Ablation(_) => bail!("{} is an ablation; use `ablate`", path.display()),
    }
}

fn run(
    io: &ConfigIo,
    seed: Option<u64>,
    reps: Option<usize>,
    logs: &LogOptions,
    execution: Execution,
) -> Result<()> {
    let mut config = scenario_of(load(&io.config)?, &io.config)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(reps) = reps {
        config.repetitions = reps;
    }
    config.validate()?;
    let mut out = Writer::new(&io.output, io.force)?;

    let indices: Vec<usize> = (0..config.repetitions).collect();
    let runs = parallel::map(execution, &indices, |&r| {
        harness::run_repetition(&config, r, true)
    })
    .into_iter()
    .collect::<excavation::Result<Vec<_>>>()?;
    let mut outcomes = Vec::with_capacity(runs.len());
    for (outcome, log) in runs {
        let log = log.expect("logging was requested");
        out.run_log(&format!("rep_{:03}", outcome.repetition), &log, logs)?;
        outcomes.push(outcome);
    }
    let result = ScenarioResult::from_outcomes(&config, outcomes);
    report_scenario(&result);
    out.json("summary.json", &result)?;
    out.finish(RunManifest {
        seed_override: seed,
        repetition_override: reps,
        ..manifest("run", io)
    })
}

fn report_scenario(r: &ScenarioResult) {
    println!(
        "{} {}: volume {:.1} ± {:.1} cm³, P-stop {:.1}%, completion {:.1}%",
        r.terrain, r.controller, r.volume_mean, r.volume_std, r.pstop_rate, r.completion_mean
    );
}

fn sweep(io: &ConfigIo, execution: Execution) -> Result<()> {
    let ExperimentConfig::Sweep(spec) = load(&io.config)? else {
        bail!(
            "{} is not a sweep (set kind = \"sweep\")",
            io.config.display()
        );
    };
    let rows = harness::run_sweep(&spec.scenario, &spec.parameters, execution)?;
    let mut out = Writer::new(&io.output, io.force)?;
    for r in &rows {
        println!(
            "{} {} ({:.4}): volume {:.1} ± {:.1} cm³, P-stop {:.1}%",
            r.parameter, r.level, r.value, r.volume_mean, r.volume_std, r.pstop_rate
        );
    }
    out.file("sweep.csv", |w| export::write_sweep_csv(w, &rows))?;
    out.json("sweep.json", &rows)?;
    out.finish(manifest("sweep", io))
}

fn ablate(io: &ConfigIo, execution: Execution) -> Result<()> {
    let ExperimentConfig::Ablation(spec) = load(&io.config)? else {
        bail!(
            "{} is not an ablation (set kind = \"ablation\")",
            io.config.display()
        );
    };
    let table = harness::run_ablation(&spec, execution)?;
    let mut out = Writer::new(&io.output, io.force)?;
    for r in &table.rows {
        println!(
            "{} {} {}: volume {:.1} ± {:.1} cm³, P-stop {:.1}%, completion {:.1}%",
            r.terrain,
            r.controller,
            r.trajectory,
            r.volume_mean,
            r.volume_std,
            r.pstop_rate,
            r.completion_mean
        );
    }
    out.file("ablation.csv", |w| export::write_ablation_csv(w, &table))?;
    out.json("ablation.json", &table)?;
    out.finish(manifest("ablate", io))
}

fn obstacle_demo(
    kind: ObstacleDemo,
    controller: ControllerKind,
    output: &Path,
    force: bool,
    logs: &LogOptions,
) -> Result<()> {
    let (result, log) = harness::run_obstacle_demo(kind, controller)?;
    report_scenario(&result);
    let stem = format!("{kind}_{controller}");
    let mut out = Writer::new(output, force)?;
    out.run_log(&stem, &log, logs)?;
    out.json(&format!("{stem}_summary.json"), &result)?;
    out.finish_as(
        &format!("{stem}_manifest.json"),
        RunManifest {
            command: "obstacle-demo",
            config: None,
            output: output.to_path_buf(),
            seed_override: None,
            repetition_override: None,
            files: Vec::new(),
        },
    )
}

fn export_config(io: &ConfigIo) -> Result<()> {
    let config = load(&io.config)?;
    let mut out = Writer::new(&io.output, io.force)?;
    let text = render_config(&config)?;
    out.file("config.toml", |w| {
        std::io::Write::write_all(w, text.as_bytes())
    })?;
    let scenarios: Vec<(String, ScenarioConfig)> = match &config {
        ExperimentConfig::Scenario(c) => vec![(String::new(), c.clone())],
        ExperimentConfig::Sweep(s) => vec![(String::new(), s.scenario.clone())],
        ExperimentConfig::Ablation(a) => a
            .terrains
            .iter()
            .flat_map(|&t| harness::Condition::ALL.into_iter().map(move |c| (t, c)))
            .map(|(t, c)| {
                (
                    format!("{t}_{}_{}_", c.controller, c.trajectory),
                    a.scenario(t, c),
                )
            })
            .collect(),
    };
    for (label, scenario) in &scenarios {
        let model = scenario.terrain.model();
        for (j, site) in scenario.sites.iter().enumerate() {
            let plan = scenario.plan_at(*site, &model)?;
            out.file(&format!("plan_{label}site{j}.csv"), |w| {
                export::write_plan_csv(w, &plan)
            })?;
        }
    }
    let first = &scenarios[0].1;
    let initial = excavation::terrain::TerrainState::new(
        &first.terrain.model(),
        &first.obstacles,
        first.seed,
        1,
    );
    out.heightmap("heightmap_initial.csv", &initial.heightmap)?;
    out.finish(manifest("export", io))
}
