use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MetricVector, ScoreError, METRIC_NAMES};

pub const BASELINE_SCHEMA_VERSION: u32 = 1;

/// Expert reference metrics for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub task_id: String,
    pub expert: MetricVector,
    pub provenance: String,
}

impl Baseline {
    pub fn validate(&self) -> Result<(), ScoreError> {
        if self.task_id.trim().is_empty() {
            return Err(ScoreError::MissingTaskId);
        }
        for (k, value) in self.expert.as_array().into_iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ScoreError::BadMetric { task: self.task_id.clone(), metric: METRIC_NAMES[k], value });
            }
        }
        if self.expert.c > 1.0 {
            return Err(ScoreError::BadFraction { task: self.task_id.clone(), value: self.expert.c });
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    schema_version: u32,
    #[serde(default)]
    baseline: BTreeMap<String, Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    #[serde(default)]
    provenance: String,
    d: f64,
    a: f64,
    f: f64,
    t: f64,
    m: i64,
    c: f64,
}

/// Baselines keyed by task id, stored as a TOML document:
///
/// ```toml
/// schema_version = 1
/// [baseline.path]
/// provenance = "synthetic: nominal script"
/// d = 0.0
/// a = 0.0
/// f = 0.0
/// t = 0.0
/// m = 0
/// c = 0.0
/// ```
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BaselineSet {
    entries: BTreeMap<String, Baseline>,
}

impl BaselineSet {
    pub fn insert(&mut self, b: Baseline) -> Result<(), ScoreError> {
        b.validate()?;
        self.entries.insert(b.task_id.clone(), b);
        Ok(())
    }

    pub fn get(&self, task_id: &str) -> Result<&Baseline, ScoreError> {
        self.entries.get(task_id).ok_or_else(|| ScoreError::UnknownTask(task_id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Baseline> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load(text: &str) -> Result<Self, ScoreError> {
        let doc: Document = toml::from_str(text)?;
        if doc.schema_version != BASELINE_SCHEMA_VERSION {
            return Err(ScoreError::Schema(doc.schema_version));
        }
        let mut set = BaselineSet::default();
        for (task_id, e) in doc.baseline {
            if e.m < 0 {
                return Err(ScoreError::BadMetric { task: task_id, metric: "M", value: e.m as f64 });
            }
            set.insert(Baseline {
                task_id,
                expert: MetricVector { d: e.d, a: e.a, f: e.f, t: e.t, m: e.m as u32, c: e.c },
                provenance: e.provenance,
            })?;
        }
        Ok(set)
    }

    pub fn save(&self) -> Result<String, ScoreError> {
        let doc = Document {
            schema_version: BASELINE_SCHEMA_VERSION,
            baseline: self
                .entries
                .iter()
                .map(|(k, b)| {
                    let x = &b.expert;
                    let e = Entry { provenance: b.provenance.clone(), d: x.d, a: x.a, f: x.f, t: x.t, m: i64::from(x.m), c: x.c };
                    (k.clone(), e)
                })
                .collect(),
        };
        Ok(toml::to_string(&doc)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Baseline {
        Baseline {
            task_id: "exchange".into(),
            expert: MetricVector { d: 0.7, a: 0.05, f: 0.3, t: 0.004, m: 0, c: 0.0 },
            provenance: "synthetic".into(),
        }
    }

    #[test]
    fn save_then_load() {
        let mut set = BaselineSet::default();
        set.insert(sample()).unwrap();
        let text = set.save().unwrap();
        let back = BaselineSet::load(&text).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.get("exchange").unwrap(), &sample());
    }

    #[test]
    fn rejects_negative_metric() {
        let text = "schema_version = 1\n[baseline.path]\nd = -1.0\na = 0.0\nf = 0.0\nt = 0.0\nm = 0\nc = 0.0\n";
        assert!(matches!(BaselineSet::load(text), Err(ScoreError::BadMetric { metric: "D", .. })));
    }

    #[test]
    fn rejects_missing_task_id() {
        let mut b = sample();
        b.task_id = " ".into();
        assert!(matches!(BaselineSet::default().insert(b), Err(ScoreError::MissingTaskId)));
    }

    #[test]
    fn rejects_unknown_schema() {
        assert!(matches!(BaselineSet::load("schema_version = 9\n"), Err(ScoreError::Schema(9))));
    }
}
