//! Suite naming: `{Task}_{Robot}_{ConstraintCount}{ConstraintKind}`.

use saferl_core::env::{ConstraintKind, RobotKind, TaskKind, WorldConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("suite '{0}' must have the form Task_Robot_<count><Kind>")]
    Malformed(String),
    #[error("unknown task '{0}'")]
    UnknownTask(String),
    #[error("unknown robot '{0}'")]
    UnknownRobot(String),
    #[error("bad constraint segment '{0}' (missing count or unknown kind)")]
    BadConstraint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SuiteId {
    pub task: TaskKind,
    pub robot: RobotKind,
    pub constraint_count: u32,
    pub constraint_kind: ConstraintKind,
}

impl SuiteId {
    pub fn parse(name: &str) -> Result<Self, SuiteError> {
        let parts: Vec<&str> = name.split('_').collect();
        if parts.len() != 3 {
            return Err(SuiteError::Malformed(name.to_string()));
        }
        let task = TaskKind::parse(parts[0])
            .map_err(|_| SuiteError::UnknownTask(parts[0].to_string()))?;
        let robot = RobotKind::parse(parts[1])
            .map_err(|_| SuiteError::UnknownRobot(parts[1].to_string()))?;

        let segment = parts[2];
        let mut parsed = None;
        for kind in ConstraintKind::ALL {
            if let Some(prefix) = segment.strip_suffix(kind.name()) {
                if let Ok(count) = prefix.parse::<u32>() {
                    parsed = Some((count, kind));
                    break;
                }
            }
        }
        let (constraint_count, constraint_kind) =
            parsed.ok_or_else(|| SuiteError::BadConstraint(segment.to_string()))?;
        Ok(SuiteId {
            task,
            robot,
            constraint_count,
            constraint_kind,
        })
    }

    pub fn format(&self) -> String {
        format!(
            "{}_{}_{}{}",
            self.task.name(),
            self.robot.name(),
            self.constraint_count,
            self.constraint_kind.name()
        )
    }

    /// Environment configuration implied by the suite name (defaults for
    /// everything the name does not pin down).
    pub fn world_config(&self) -> WorldConfig {
        let defaults = WorldConfig::default();
        WorldConfig {
            task: self.task,
            robot: self.robot,
            constraint: saferl_core::env::ConstraintSpec {
                kind: self.constraint_kind,
                count: self.constraint_count as usize,
                ..defaults.constraint
            },
            ..defaults
        }
    }

    /// Every task x robot x constraint-kind combination at the given count.
    pub fn registry(count: u32) -> Vec<SuiteId> {
        let mut out = Vec::new();
        for task in TaskKind::ALL {
            for robot in RobotKind::ALL {
                for kind in ConstraintKind::ALL {
                    out.push(SuiteId {
                        task,
                        robot,
                        constraint_count: count,
                        constraint_kind: kind,
                    });
                }
            }
        }
        out
    }
}

impl std::fmt::Display for SuiteId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.format())
    }
}
