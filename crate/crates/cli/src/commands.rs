//! Subcommand implementations. Each returns data for `main` to print.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use anyhow::{bail, Context, Result};
use hapfix::geom::obj;
use hapfix::score::{performance_index, Baseline, BaselineSet, EpsilonPolicy, MetricVector, PerformanceScore, METRIC_NAMES};
use hapfix::sim::{
    archetype_document, gen_input_for_scene, pillar_approach_document, run_episode, AdmittanceParams, EpisodeLog,
    EpisodeSummary, InputStream, Scene, SceneDocument, TaskKind,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_baselines, load_input, load_scene, BatchConfig, Condition, InputSource, RunConfig};
use crate::exit::{episode_error, usage};
use crate::stats::Stats;

/// Names accepted by [`cmd_scene`].
pub const SCENE_NAMES: [&str; 5] = ["path", "rings", "pillars", "pillars-approach", "exchange"];

pub struct ValidateReport {
    pub scene: String,
    pub task: TaskKind,
    pub fixtures: usize,
    pub weights: [u32; 6],
    pub input_frames: Option<usize>,
    pub baselines: Option<usize>,
}

/// Loads and checks a scene, and optionally an input stream against it and
/// a baseline document.
pub fn cmd_validate(scene_path: &Path, input: Option<&Path>, baseline: Option<&Path>) -> Result<ValidateReport> {
    let scene = Scene::load(scene_path).with_context(|| format!("scene {}", scene_path.display()))?;
    let input_frames = match input {
        Some(p) => {
            let stream = load_input(&scene, &InputSource::File(p.to_path_buf()), 0)?;
            stream.validate().with_context(|| format!("input stream {}", p.display()))?;
            if stream.units != scene.units {
                bail!(usage(format!("input stream units {} differ from scene units {}", stream.units, scene.units)));
            }
            Some(stream.len())
        }
        None => None,
    };
    let baselines = match baseline {
        Some(p) => Some(load_baselines(p)?.len()),
        None => None,
    };
    Ok(ValidateReport {
        scene: scene.name.clone(),
        task: scene.task,
        fixtures: scene.fixtures.len(),
        weights: scene.weights.row(),
        input_frames,
        baselines,
    })
}

/// Built-in scene document by name.
pub fn builtin_document(name: &str) -> Result<SceneDocument> {
    match name {
        "pillars-approach" => Ok(pillar_approach_document()),
        other => Ok(archetype_document(other.parse().map_err(|_| {
            usage(format!("unknown scene {other:?}; expected one of {}", SCENE_NAMES.join(", ")))
        })?)),
    }
}

/// Writes a built-in scene as TOML into `dir`, moving inline meshes into OBJ
/// files next to it. Returns the written paths, scene first.
pub fn cmd_scene(name: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut doc = builtin_document(name)?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for g in &mut doc.geometry {
        if let (Some(vertices), Some(faces)) = (g.vertices.take(), g.faces.take()) {
            let mesh = hapfix::geom::TriMesh::new(
                vertices.into_iter().map(Into::into).collect(),
                faces.into_iter().map(|f| f.map(|i| i as usize)).collect(),
            )?;
            let file = format!("{}-{}.obj", doc.name, g.id);
            let path = dir.join(&file);
            fs::write(&path, obj::write(&mesh)).with_context(|| format!("writing {}", path.display()))?;
            g.file = Some(file);
            written.push(path);
        }
    }
    let path = dir.join(format!("{}.toml", doc.name));
    fs::write(&path, doc.to_toml()?).with_context(|| format!("writing {}", path.display()))?;
    written.insert(0, path);
    Ok(written)
}

/// Scripted input stream for a scene (or the built-in scene of the task).
pub fn cmd_gen(scene: Option<&Path>, input: &InputSource, seed: u64) -> Result<InputStream> {
    let scene = load_scene(scene, input)?;
    load_input(&scene, input, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub task: String,
    /// Weighted mean of subject/expert ratios; 1 is expert parity.
    pub p: f64,
    /// `1/P`.
    pub score: f64,
    pub ratios: BTreeMap<&'static str, f64>,
    pub weights: [u32; 6],
    pub baseline_provenance: String,
}

impl ScoreReport {
    fn new(task: &str, s: &PerformanceScore, baseline: &Baseline) -> Self {
        let ratios = METRIC_NAMES.iter().zip(s.ratios).filter_map(|(n, r)| r.map(|r| (*n, r))).collect();
        ScoreReport {
            task: task.to_string(),
            p: s.p,
            score: s.score,
            ratios,
            weights: s.weights.row(),
            baseline_provenance: baseline.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub summary: EpisodeSummary,
    pub score: Option<ScoreReport>,
}

pub struct RunOutcome {
    pub log: EpisodeLog,
    pub report: RunReport,
    /// Files written, frame log first.
    pub files: Vec<PathBuf>,
}

fn score(log: &EpisodeLog, scene: &Scene, baselines: Option<&BaselineSet>) -> Result<Option<ScoreReport>> {
    let (Some(set), Some(metrics)) = (baselines, log.metrics()) else {
        return Ok(None);
    };
    let baseline = set.get(scene.task.id())?;
    let s = performance_index(&metrics, baseline, &scene.weights, &EpsilonPolicy::default())?;
    Ok(Some(ScoreReport::new(scene.task.id(), &s, baseline)))
}

fn execute(scene: &Scene, stream: &InputStream, assist: bool, seed: u64, baselines: Option<&BaselineSet>) -> Result<(EpisodeLog, RunReport)> {
    let params = AdmittanceParams::default().with_assist(assist);
    let log = run_episode(scene, stream, &params, seed).map_err(episode_error)?;
    let score = score(&log, scene, baselines)?;
    let report = RunReport { summary: log.summary(), score };
    Ok((log, report))
}

fn write_run(dir: &Path, log: &EpisodeLog, report: &RunReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        files.push(path);
        Ok(())
    };
    put("frames.csv", log.to_csv())?;
    put("summary.json", serde_json::to_string_pretty(report)? + "\n")?;
    if let Some(score) = &report.score {
        put("score.json", serde_json::to_string_pretty(score)? + "\n")?;
    }
    Ok(files)
}

/// Runs one episode and writes `frames.csv`, `summary.json` and, with a
/// baseline, `score.json` into `config.out`. An incomplete episode is not an
/// error; the summary records it.
pub fn cmd_run(config: &RunConfig) -> Result<RunOutcome> {
    let scene = load_scene(config.scene.as_deref(), &config.input)?;
    let stream = load_input(&scene, &config.input, config.seed)?;
    let baselines = config.baseline.as_deref().map(load_baselines).transpose()?;
    let (log, report) = execute(&scene, &stream, config.assist, config.seed, baselines.as_ref())?;
    let files = write_run(&config.out, &log, &report)?;
    Ok(RunOutcome { log, report, files })
}

/// One finished batch run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub condition: usize,
    pub seed: u64,
    pub repetition: u32,
    pub frames: usize,
    pub started: bool,
    pub incomplete: bool,
    pub metrics: Option<MetricVector>,
    pub p: Option<f64>,
    pub score: Option<f64>,
    pub digest: String,
}

pub struct BatchOutcome {
    pub rows: Vec<RunRow>,
    pub runs_csv: PathBuf,
    pub comparison_csv: PathBuf,
}

/// Generator seed for repetition `rep` of `seed`. Repetition 0 uses the seed
/// itself; later ones move to disjoint seed ranges.
pub fn repetition_seed(seed: u64, rep: u32) -> u64 {
    seed.wrapping_add(u64::from(rep) << 32)
}

fn condition_dir(k: usize, c: &Condition) -> String {
    let name: String = c.name.chars().map(|ch| if ch.is_ascii_alphanumeric() || ch == '-' || ch == '_' { ch } else { '_' }).collect();
    format!("{k:02}-{name}")
}

struct Prepared {
    scene: Scene,
    stream: Option<InputStream>,
}

/// Runs every condition × seed × repetition, in parallel up to
/// `config.jobs`, then writes `runs.csv` and `comparison.csv` under
/// `config.out`. A failing run stops new runs from starting; finished runs
/// keep their files and are listed in `runs.csv`.
pub fn cmd_batch(config: &BatchConfig) -> Result<BatchOutcome> {
    if config.conditions.is_empty() {
        bail!(usage("no conditions"));
    }
    if config.seeds.is_empty() {
        bail!(usage("seed list is empty"));
    }
    if config.repetitions == 0 {
        bail!(usage("repetitions must be at least 1"));
    }
    let baselines = config.baseline.as_deref().map(load_baselines).transpose()?;
    let prepared = config
        .conditions
        .iter()
        .map(|c| {
            let scene = load_scene(c.scene.as_deref(), &c.input).with_context(|| format!("condition {:?}", c.name))?;
            let stream = match &c.input {
                InputSource::File(_) => Some(load_input(&scene, &c.input, 0).with_context(|| format!("condition {:?}", c.name))?),
                InputSource::Generated(spec) => {
                    if spec.task != scene.task {
                        bail!(usage(format!("condition {:?}: generator task {} does not match scene task {}", c.name, spec.task, scene.task)));
                    }
                    None
                }
            };
            Ok(Prepared { scene, stream })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut jobs_list = Vec::new();
    for k in 0..config.conditions.len() {
        for &seed in &config.seeds {
            for rep in 0..config.repetitions {
                jobs_list.push((k, seed, rep));
            }
        }
    }
    fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))?;

    let abort = AtomicBool::new(false);
    let run_one = |&(k, seed, rep): &(usize, u64, u32)| -> Option<Result<RunRow>> {
        if abort.load(Ordering::SeqCst) {
            return None;
        }
        let result = (|| -> Result<RunRow> {
            let c = &config.conditions[k];
            let p = &prepared[k];
            let run_seed = repetition_seed(seed, rep);
            let stream = match (&p.stream, &c.input) {
                (Some(s), _) => s.clone(),
                (None, InputSource::Generated(spec)) => gen_input_for_scene(&p.scene, spec.amplitude, run_seed)?,
                (None, InputSource::File(_)) => unreachable!("file inputs are preloaded"),
            };
            let (log, report) = execute(&p.scene, &stream, c.assist, run_seed, baselines.as_ref())?;
            let mut dir = config.out.join(condition_dir(k, c)).join(format!("seed-{seed}"));
            if config.repetitions > 1 {
                dir = dir.join(format!("rep-{rep}"));
            }
            write_run(&dir, &log, &report)?;
            Ok(RunRow {
                condition: k,
                seed,
                repetition: rep,
                frames: log.frames.len(),
                started: log.started(),
                incomplete: log.incomplete,
                metrics: report.summary.metrics,
                p: report.score.as_ref().map(|s| s.p),
                score: report.score.as_ref().map(|s| s.score),
                digest: report.summary.digest.clone(),
            })
        })()
        .with_context(|| format!("condition {:?}, seed {seed}, repetition {rep}", config.conditions[k].name));
        if result.is_err() {
            abort.store(true, Ordering::SeqCst);
        }
        Some(result)
    };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.jobs.max(1)).build()?;
    let results: Vec<Option<Result<RunRow>>> = pool.install(|| jobs_list.par_iter().map(run_one).collect());

    let mut rows = Vec::new();
    let mut first_error = None;
    for r in results.into_iter().flatten() {
        match r {
            Ok(row) => rows.push(row),
            Err(e) if first_error.is_none() => first_error = Some(e),
            Err(_) => {}
        }
    }
    let runs_csv = config.out.join("runs.csv");
    write_runs_csv(&runs_csv, config, &rows)?;
    if let Some(e) = first_error {
        return Err(e.context(format!(
            "batch aborted after {} of {} runs; partial results in {}",
            rows.len(),
            jobs_list.len(),
            runs_csv.display()
        )));
    }
    let comparison_csv = config.out.join("comparison.csv");
    write_comparison_csv(&comparison_csv, config, &rows)?;
    Ok(BatchOutcome { rows, runs_csv, comparison_csv })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_runs_csv(path: &Path, config: &BatchConfig, rows: &[RunRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["condition", "assist", "seed", "repetition", "frames", "started", "incomplete"];
    header.extend(METRIC_NAMES);
    header.extend(["P", "score", "digest"]);
    w.write_record(&header)?;
    for r in rows {
        let c = &config.conditions[r.condition];
        let mut rec = vec![
            c.name.clone(),
            c.assist.to_string(),
            r.seed.to_string(),
            r.repetition.to_string(),
            r.frames.to_string(),
            r.started.to_string(),
            r.incomplete.to_string(),
        ];
        match r.metrics {
            Some(m) => rec.extend(m.as_array().iter().map(f64::to_string)),
            None => rec.extend(std::iter::repeat_n(String::new(), 6)),
        }
        rec.extend([opt(r.p), opt(r.score), r.digest.clone()]);
        w.write_record(&rec)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_comparison_csv(path: &Path, config: &BatchConfig, rows: &[RunRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let columns: Vec<&str> = METRIC_NAMES.iter().copied().chain(["P"]).collect();
    let mut header = vec!["condition".to_string(), "assist".into(), "runs".into(), "started".into(), "incomplete".into()];
    for c in &columns {
        header.extend([format!("{c}_mean"), format!("{c}_median"), format!("{c}_sd")]);
    }
    w.write_record(&header)?;
    for (k, c) in config.conditions.iter().enumerate() {
        let mine: Vec<&RunRow> = rows.iter().filter(|r| r.condition == k).collect();
        let mut rec = vec![
            c.name.clone(),
            c.assist.to_string(),
            mine.len().to_string(),
            mine.iter().filter(|r| r.started).count().to_string(),
            mine.iter().filter(|r| r.incomplete).count().to_string(),
        ];
        for col in 0..columns.len() {
            let values: Vec<f64> = mine
                .iter()
                .filter_map(|r| if col < 6 { r.metrics.map(|m| m.as_array()[col]) } else { r.p })
                .collect();
            match Stats::of(&values) {
                Some(s) => rec.extend([s.mean.to_string(), s.median.to_string(), s.sd.to_string()]),
                None => rec.extend(std::iter::repeat_n(String::new(), 3)),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Expert baselines from unperturbed scripted runs of each scene (the
/// built-in archetypes when `scenes` is empty).
pub fn cmd_baseline(scenes: &[PathBuf], assist: bool) -> Result<BaselineSet> {
    let loaded: Vec<Scene> = if scenes.is_empty() {
        TaskKind::ALL.iter().map(|t| hapfix::sim::archetype(*t)).collect()
    } else {
        scenes.iter().map(|p| Scene::load(p).with_context(|| format!("scene {}", p.display()))).collect::<Result<_>>()?
    };
    let mut set = BaselineSet::default();
    for scene in &loaded {
        if set.get(scene.task.id()).is_ok() {
            bail!(usage(format!("two scenes for task {}", scene.task)));
        }
        let stream = gen_input_for_scene(scene, 0.0, 0)?;
        let (log, _) = execute(scene, &stream, assist, 0, None)?;
        let expert = log.metrics().with_context(|| format!("nominal script for scene {} never started", scene.name))?;
        if log.incomplete {
            bail!("nominal script for scene {} did not reach the goal", scene.name);
        }
        set.insert(Baseline {
            task_id: scene.task.id().to_string(),
            expert,
            provenance: format!("synthetic: unperturbed script on scene {}, assist {}", scene.name, if assist { "on" } else { "off" }),
        })?;
    }
    Ok(set)
}
