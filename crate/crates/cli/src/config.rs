//! Run and batch configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hapfix::score::BaselineSet;
use hapfix::sim::{archetype, gen_input_for_scene, InputStream, PerturbationSpec, Scene};
use serde::Deserialize;

use crate::exit::usage;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "HAPFIX_OUT";
/// Output root when neither `--out` nor the environment names one.
pub const DEFAULT_OUT: &str = "hapfix-out";

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// Recorded input-stream CSV.
    File(PathBuf),
    /// Scripted stream for the scene, perturbed with the given amplitude.
    Generated(PerturbationSpec),
}

/// Everything one episode needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Scene document; defaults to the built-in scene of the generator task.
    pub scene: Option<PathBuf>,
    pub input: InputSource,
    pub assist: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub baseline: Option<PathBuf>,
}

/// Loads the scene named by `path`, or the built-in archetype of the
/// generator task when no path is given.
pub fn load_scene(path: Option<&Path>, input: &InputSource) -> Result<Scene> {
    match (path, input) {
        (Some(p), _) => Ok(Scene::load(p)?),
        (None, InputSource::Generated(spec)) => Ok(archetype(spec.task)),
        (None, InputSource::File(_)) => Err(usage("--scene is required with --input")),
    }
}

/// Reads or generates the input stream for `scene`.
pub fn load_input(scene: &Scene, input: &InputSource, seed: u64) -> Result<InputStream> {
    match input {
        InputSource::File(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading input stream {}", path.display()))?;
            Ok(InputStream::from_csv(&text).with_context(|| format!("input stream {}", path.display()))?)
        }
        InputSource::Generated(spec) => {
            if spec.task != scene.task {
                bail!(usage(format!("generator task {} does not match scene task {}", spec.task, scene.task)));
            }
            Ok(gen_input_for_scene(scene, spec.amplitude, seed)?)
        }
    }
}

pub fn load_baselines(path: &Path) -> Result<BaselineSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading baselines {}", path.display()))?;
    BaselineSet::load(&text).with_context(|| format!("baselines {}", path.display()))
}

/// Parses `a..b` (half-open), `a..=b` or a comma-separated list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let text = text.trim();
    let num = |s: &str| -> Result<u64> {
        s.trim().parse::<u64>().map_err(|_| usage(format!("invalid seed {s:?}")))
    };
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = text.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else if text.is_empty() {
        Vec::new()
    } else {
        text.split(',').map(num).collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        bail!(usage("seed list is empty"));
    }
    Ok(seeds)
}

/// One experimental condition of a batch.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionDoc {
    pub name: String,
    #[serde(default)]
    pub scene: Option<PathBuf>,
    #[serde(default)]
    pub gen: Option<String>,
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub assist: bool,
}

fn default_true() -> bool {
    true
}

/// Batch file: conditions crossed with seeds and repetitions.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchDoc {
    pub schema_version: u32,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub repetitions: Option<u32>,
    #[serde(default)]
    pub baseline: Option<PathBuf>,
    #[serde(default)]
    pub condition: Vec<ConditionDoc>,
}

pub const BATCH_SCHEMA_VERSION: u32 = 1;

/// A resolved condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: String,
    pub scene: Option<PathBuf>,
    pub input: InputSource,
    pub assist: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub conditions: Vec<Condition>,
    pub seeds: Vec<u64>,
    pub repetitions: u32,
    pub baseline: Option<PathBuf>,
    pub out: PathBuf,
    pub jobs: usize,
}

impl BatchDoc {
    pub fn load(path: &Path) -> Result<BatchDoc> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading batch file {}", path.display()))?;
        let doc: BatchDoc = toml::from_str(&text).with_context(|| format!("batch file {}", path.display()))?;
        if doc.schema_version != BATCH_SCHEMA_VERSION {
            bail!(usage(format!("batch file: unsupported schema_version {}", doc.schema_version)));
        }
        Ok(doc)
    }

    /// Resolves relative paths against `base_dir`.
    pub fn conditions(&self, base_dir: &Path) -> Result<Vec<Condition>> {
        if self.condition.is_empty() {
            bail!(usage("batch file lists no conditions"));
        }
        self.condition
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let input = match (&c.gen, &c.input) {
                    (Some(g), None) => InputSource::Generated(g.parse().with_context(|| format!("condition[{k}].gen"))?),
                    (None, Some(p)) => InputSource::File(base_dir.join(p)),
                    _ => bail!(usage(format!("condition[{k}]: exactly one of gen and input is required"))),
                };
                Ok(Condition { name: c.name.clone(), scene: c.scene.as_ref().map(|p| base_dir.join(p)), input, assist: c.assist })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("1..=2").unwrap(), vec![1, 2]);
        assert_eq!(parse_seeds("5, 7").unwrap(), vec![5, 7]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn batch_conditions_resolve() {
        let doc: BatchDoc = toml::from_str(
            r#"
            schema_version = 1
            seeds = [1, 2]
            [[condition]]
            name = "on"
            gen = "path:5"
            [[condition]]
            name = "replay"
            scene = "s.toml"
            input = "in.csv"
            assist = false
            "#,
        )
        .unwrap();
        let c = doc.conditions(Path::new("/b")).unwrap();
        assert!(c[0].assist);
        assert_eq!(c[1].input, InputSource::File(PathBuf::from("/b/in.csv")));
        assert_eq!(c[1].scene, Some(PathBuf::from("/b/s.toml")));
    }
}
