use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hapfix::score::METRIC_NAMES;
use hapfix::sim::PerturbationSpec;
use hapfix_cli::commands::{self, RunReport, SCENE_NAMES};
use hapfix_cli::config::{parse_seeds, BatchConfig, BatchDoc, InputSource, RunConfig, DEFAULT_OUT, OUT_ENV};
use hapfix_cli::exit::{classify, usage, Exit};

/// Haptic virtual fixtures: scene validation, scripted input, simulated
/// teleoperation episodes and skill scoring.
#[derive(Debug, Parser)]
#[command(name = "hapfix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scene document, and optionally an input stream and baselines.
    Validate {
        scene: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Write built-in scenes as editable TOML (meshes go to OBJ files).
    Scene {
        /// Scene names, or `all`.
        #[arg(required = true)]
        names: Vec<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Generate a scripted input stream as CSV.
    Gen {
        /// `task:amplitude_mm`, e.g. `path:5`.
        #[arg(long = "gen")]
        spec: PerturbationSpec,
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one episode and write its frame log and summary.
    Run(RunArgs),
    /// Run conditions × seeds × repetitions and write comparison tables.
    Batch {
        /// Batch file (TOML) listing the conditions.
        config: PathBuf,
        /// `a..b`, `a..=b` or `1,2,3`; overrides the batch file.
        #[arg(long)]
        seeds: Option<String>,
        /// Overrides the batch file.
        #[arg(long)]
        repetitions: Option<u32>,
        /// Overrides the batch file.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, env = OUT_ENV, default_value = DEFAULT_OUT)]
        out: PathBuf,
    },
    /// Expert baselines from unperturbed scripted runs.
    Baseline {
        /// Scenes to run; the built-in archetypes when none are given.
        #[arg(long = "scene")]
        scenes: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Switch::On)]
        assist: Switch,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scene document; defaults to the built-in scene of the `--gen` task.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Recorded input stream (CSV).
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    input: Option<PathBuf>,
    /// Scripted input, `task:amplitude_mm`.
    #[arg(long)]
    gen: Option<PerturbationSpec>,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    assist: Switch,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Run directory.
    #[arg(long, env = OUT_ENV, default_value = DEFAULT_OUT)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::from(Exit::Success.code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err).code())
        }
    }
}

fn write_or_print(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Validate { scene, input, baseline } => {
            let r = commands::cmd_validate(&scene, input.as_deref(), baseline.as_deref())?;
            println!("ok: scene {} (task {}, {} fixtures, weights {:?})", r.scene, r.task, r.fixtures, r.weights);
            if let Some(n) = r.input_frames {
                println!("ok: input stream, {n} frames");
            }
            if let Some(n) = r.baselines {
                println!("ok: baselines, {n} tasks");
            }
        }
        Command::Scene { names, out } => {
            let names: Vec<String> = if names.iter().any(|n| n == "all") {
                SCENE_NAMES.iter().map(|s| s.to_string()).collect()
            } else {
                names
            };
            for name in names {
                for path in commands::cmd_scene(&name, &out)? {
                    println!("{}", path.display());
                }
            }
        }
        Command::Gen { spec, scene, seed, out } => {
            let stream = commands::cmd_gen(scene.as_deref(), &InputSource::Generated(spec), seed)?;
            write_or_print(out.as_deref(), &stream.to_csv())?;
        }
        Command::Run(args) => {
            let input = match (args.input, args.gen) {
                (Some(p), None) => InputSource::File(p),
                (None, Some(g)) => InputSource::Generated(g),
                _ => bail!(usage("exactly one of --input and --gen is required")),
            };
            let config = RunConfig {
                scene: args.scene,
                input,
                assist: args.assist == Switch::On,
                seed: args.seed,
                out: args.out,
                baseline: args.baseline,
            };
            let outcome = commands::cmd_run(&config)?;
            print_run(&outcome.report);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Batch { config, seeds, repetitions, baseline, jobs, out } => {
            let doc = BatchDoc::load(&config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let seeds = match seeds {
                Some(s) => parse_seeds(&s)?,
                None => doc.seeds.clone().ok_or_else(|| usage("no seeds: set `seeds` in the batch file or pass --seeds"))?,
            };
            let batch = BatchConfig {
                conditions: doc.conditions(base)?,
                seeds,
                repetitions: repetitions.or(doc.repetitions).unwrap_or(1),
                baseline: baseline.or_else(|| doc.baseline.as_ref().map(|p| base.join(p))),
                out,
                jobs,
            };
            let outcome = commands::cmd_batch(&batch)?;
            let incomplete = outcome.rows.iter().filter(|r| r.incomplete).count();
            println!("{} runs, {incomplete} incomplete", outcome.rows.len());
            println!("wrote {}", outcome.runs_csv.display());
            println!("wrote {}", outcome.comparison_csv.display());
        }
        Command::Baseline { scenes, assist, out } => {
            let set = commands::cmd_baseline(&scenes, assist == Switch::On)?;
            write_or_print(out.as_deref(), &set.save()?)?;
        }
    }
    Ok(())
}

fn print_run(r: &RunReport) {
    let s = &r.summary;
    println!(
        "scene {}  task {}  seed {}  assist {}",
        s.scene,
        s.task,
        s.seed,
        if s.assist { "on" } else { "off" }
    );
    println!("frames {}  started {}  incomplete={}", s.frames, s.started, s.incomplete);
    if let Some(m) = s.metrics {
        let parts: Vec<String> = METRIC_NAMES.iter().zip(m.as_array()).map(|(n, v)| format!("{n} {v:.6}")).collect();
        println!("metrics  {}", parts.join("  "));
    }
    if let Some(score) = &r.score {
        let parts: Vec<String> = score.ratios.iter().map(|(n, v)| format!("{n} {v:.4}")).collect();
        println!("P {:.6}  score {:.6}  ratios  {}", score.p, score.score, parts.join("  "));
    }
    println!("digest {}", s.digest);
}
