use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::fixtures::FixtureKind;
use crate::score::ScoreWeights;

const BUILTIN: &str = include_str!("tasks.toml");

/// The four simulated training archetypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Follow a reference trajectory.
    Path,
    /// Reach a target through an insertion cone.
    Rings,
    /// Reach a target between obstacles.
    Pillars,
    /// Carry an object and hand it off.
    Exchange,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::Path, TaskKind::Rings, TaskKind::Pillars, TaskKind::Exchange];

    pub fn id(self) -> &'static str {
        match self {
            TaskKind::Path => "path",
            TaskKind::Rings => "rings",
            TaskKind::Pillars => "pillars",
            TaskKind::Exchange => "exchange",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TaskKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| SimError::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskRole {
    Training,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub id: String,
    pub name: String,
    pub role: TaskRole,
    pub assistance: FixtureKind,
    pub weights: ScoreWeights,
}

#[derive(Debug, Deserialize)]
struct LibraryDocument {
    schema_version: u32,
    task: Vec<TaskEntry>,
}

/// Weight rows and assistance for every known task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskLibrary {
    tasks: Vec<TaskEntry>,
}

impl TaskLibrary {
    /// The library shipped with the crate. Weight rows are validated on load.
    pub fn builtin() -> TaskLibrary {
        TaskLibrary::parse(BUILTIN).expect("built-in task library is valid")
    }

    pub fn parse(text: &str) -> Result<TaskLibrary, SimError> {
        let doc: LibraryDocument = toml::from_str(text).map_err(|e| SimError::Scene {
            field: "task library".into(),
            message: e.to_string(),
        })?;
        if doc.schema_version != 1 {
            return Err(SimError::Schema(doc.schema_version));
        }
        Ok(TaskLibrary { tasks: doc.task })
    }

    pub fn tasks(&self) -> &[TaskEntry] {
        &self.tasks
    }

    pub fn get(&self, id: &str) -> Option<&TaskEntry> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn weights(&self, id: &str) -> Option<ScoreWeights> {
        self.get(id).map(|t| t.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_eight_rows_summing_to_ten() {
        let lib = TaskLibrary::builtin();
        assert_eq!(lib.tasks().len(), 8);
        for t in lib.tasks() {
            assert_eq!(t.weights.row().iter().sum::<u32>(), 10, "{}", t.id);
        }
        assert_eq!(lib.weights("path").unwrap().row(), [3, 2, 3, 1, 0, 1]);
        assert_eq!(lib.weights("suturing").unwrap().row(), [2, 3, 1, 2, 1, 1]);
    }

    #[test]
    fn bad_row_fails_to_load() {
        let text = "schema_version = 1\n[[task]]\nid = \"x\"\nname = \"X\"\nrole = \"training\"\nassistance = \"trajectory\"\nweights = [3, 2, 3, 1, 0, 0]\n";
        let err = TaskLibrary::parse(text).unwrap_err().to_string();
        assert!(err.contains("sums to 9"), "{err}");
    }

    #[test]
    fn task_kind_parses() {
        assert_eq!("pillars".parse::<TaskKind>().unwrap(), TaskKind::Pillars);
        assert!("juggling".parse::<TaskKind>().is_err());
    }
}
