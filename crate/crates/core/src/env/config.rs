//! World configuration and its flat `key=value` text form.

use std::fmt;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RobotKind {
    /// 2D unicycle: turn-rate + thrust actions.
    Point,
    /// 3D damped double integrator: acceleration actions.
    Drone,
}

impl RobotKind {
    pub const ALL: [RobotKind; 2] = [RobotKind::Point, RobotKind::Drone];

    pub fn name(self) -> &'static str {
        match self {
            RobotKind::Point => "Point",
            RobotKind::Drone => "Drone",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "Point" => Ok(RobotKind::Point),
            "Drone" => Ok(RobotKind::Drone),
            other => Err(Error::InvalidConfig(format!("unknown robot '{other}'"))),
        }
    }

    pub fn action_dim(self) -> usize {
        match self {
            RobotKind::Point => 2,
            RobotKind::Drone => 3,
        }
    }

    pub fn is_3d(self) -> bool {
        matches!(self, RobotKind::Drone)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Goal,
    Push,
    Chase,
    Defense,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::Goal,
        TaskKind::Push,
        TaskKind::Chase,
        TaskKind::Defense,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Goal => "Goal",
            TaskKind::Push => "Push",
            TaskKind::Chase => "Chase",
            TaskKind::Defense => "Defense",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "Goal" => Ok(TaskKind::Goal),
            "Push" => Ok(TaskKind::Push),
            "Chase" => Ok(TaskKind::Chase),
            "Defense" => Ok(TaskKind::Defense),
            other => Err(Error::InvalidConfig(format!("unknown task '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Hazards,
    Hazards3d,
    Ghosts,
    Ghosts3d,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 4] = [
        ConstraintKind::Hazards,
        ConstraintKind::Hazards3d,
        ConstraintKind::Ghosts,
        ConstraintKind::Ghosts3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::Hazards => "Hazards",
            ConstraintKind::Hazards3d => "3DHazards",
            ConstraintKind::Ghosts => "Ghosts",
            ConstraintKind::Ghosts3d => "3DGhosts",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "Hazards" => Ok(ConstraintKind::Hazards),
            "3DHazards" => Ok(ConstraintKind::Hazards3d),
            "Ghosts" => Ok(ConstraintKind::Ghosts),
            "3DGhosts" => Ok(ConstraintKind::Ghosts3d),
            other => Err(Error::InvalidConfig(format!(
                "unknown constraint kind '{other}'"
            ))),
        }
    }

    pub fn is_3d(self) -> bool {
        matches!(self, ConstraintKind::Hazards3d | ConstraintKind::Ghosts3d)
    }

    pub fn is_ghost(self) -> bool {
        matches!(self, ConstraintKind::Ghosts | ConstraintKind::Ghosts3d)
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Constraint family plus the shared movable-object parameters: `r0` bounds
/// the disc the dynamic objects are confined to, `r1` is the robot-distance
/// threshold in their piecewise rules, and `v0`/`v1`/`v2` are the speed
/// constants of the three branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub count: usize,
    pub radius: f64,
    pub trespassable: bool,
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
    pub r0: f64,
    pub r1: f64,
}

impl Default for ConstraintSpec {
    fn default() -> Self {
        Self {
            kind: ConstraintKind::Hazards,
            count: 8,
            radius: 0.3,
            trespassable: true,
            v0: 1.0,
            v1: 0.3,
            v2: 0.3,
            r0: 2.5,
            r1: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointParams {
    pub omega_max: f64,
    pub acc_max: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneParams {
    pub drag: f64,
    pub acc_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub arena_half_extent: f64,
    pub robot: RobotKind,
    pub task: TaskKind,
    pub constraint: ConstraintSpec,
    pub lidar_bins: usize,
    pub lidar_range: f64,
    pub dt: f64,
    pub max_episode_steps: u32,
    pub k_distance: f64,
    pub k_goal: f64,
    pub goal_radius: f64,
    pub protected_radius: f64,
    pub target_count: usize,
    pub target_radius: f64,
    pub ball_radius: f64,
    pub ball_drag: f64,
    pub point: PointParams,
    pub drone: DroneParams,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            arena_half_extent: 3.0,
            robot: RobotKind::Point,
            task: TaskKind::Goal,
            constraint: ConstraintSpec::default(),
            lidar_bins: 16,
            lidar_range: 3.0,
            dt: 0.1,
            max_episode_steps: 1000,
            k_distance: 1.0,
            k_goal: 1.0,
            goal_radius: 0.3,
            protected_radius: 1.0,
            target_count: 2,
            target_radius: 0.3,
            ball_radius: 0.3,
            ball_drag: 2.0,
            point: PointParams {
                omega_max: 2.0,
                acc_max: 1.0,
                v_max: 1.5,
            },
            drone: DroneParams {
                drag: 0.5,
                acc_max: 1.0,
            },
        }
    }
}

impl WorldConfig {
    pub fn action_dim(&self) -> usize {
        self.robot.action_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.constraint;
        let positive = [
            ("arena_half_extent", self.arena_half_extent),
            ("constraint_radius", c.radius),
            ("dt", self.dt),
            ("lidar_range", self.lidar_range),
            ("goal_radius", self.goal_radius),
            ("protected_radius", self.protected_radius),
            ("target_radius", self.target_radius),
            ("ball_radius", self.ball_radius),
            ("r0", c.r0),
            ("r1", c.r1),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if c.r1 >= c.r0 {
            return Err(Error::InvalidConfig("r1 must be below r0".into()));
        }
        if c.v0 < 0.0 || c.v1 < 0.0 || c.v2 < 0.0 {
            return Err(Error::InvalidConfig("object speeds must be non-negative".into()));
        }
        if self.lidar_bins < 1 {
            return Err(Error::InvalidConfig("lidar_bins must be at least 1".into()));
        }
        if self.max_episode_steps < 1 {
            return Err(Error::InvalidConfig(
                "max_episode_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Apply a single `key=value` override.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(key: &str, value: &str) -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad number for {key}: '{value}'")))
        }
        fn int(key: &str, value: &str) -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad integer for {key}: '{value}'")))
        }
        match key {
            "task" => self.task = TaskKind::parse(value)?,
            "robot" => self.robot = RobotKind::parse(value)?,
            "constraint_kind" => self.constraint.kind = ConstraintKind::parse(value)?,
            "constraint_count" => self.constraint.count = int(key, value)?,
            "constraint_radius" => self.constraint.radius = num(key, value)?,
            "trespassable" => {
                self.constraint.trespassable = match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "bad flag for trespassable: '{value}'"
                        )))
                    }
                }
            }
            "v0" => self.constraint.v0 = num(key, value)?,
            "v1" => self.constraint.v1 = num(key, value)?,
            "v2" => self.constraint.v2 = num(key, value)?,
            "r0" => self.constraint.r0 = num(key, value)?,
            "r1" => self.constraint.r1 = num(key, value)?,
            "arena_half_extent" => self.arena_half_extent = num(key, value)?,
            "lidar_bins" => self.lidar_bins = int(key, value)?,
            "lidar_range" => self.lidar_range = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "max_episode_steps" => self.max_episode_steps = int(key, value)? as u32,
            "k_distance" => self.k_distance = num(key, value)?,
            "k_goal" => self.k_goal = num(key, value)?,
            "goal_radius" => self.goal_radius = num(key, value)?,
            "protected_radius" => self.protected_radius = num(key, value)?,
            "target_count" => self.target_count = int(key, value)?,
            "target_radius" => self.target_radius = num(key, value)?,
            "ball_radius" => self.ball_radius = num(key, value)?,
            "ball_drag" => self.ball_drag = num(key, value)?,
            "point_omega_max" => self.point.omega_max = num(key, value)?,
            "point_acc_max" => self.point.acc_max = num(key, value)?,
            "point_v_max" => self.point.v_max = num(key, value)?,
            "drone_drag" => self.drone.drag = num(key, value)?,
            "drone_acc_max" => self.drone.acc_max = num(key, value)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown config key '{other}'"
                )))
            }
        }
        Ok(())
    }

    /// Parse a flat `key=value` text (one pair per line, `#` comments).
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut cfg = WorldConfig::default();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key=value", line_no + 1))
            })?;
            cfg.apply_override(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serialize to the flat `key=value` text form.
    pub fn to_key_values(&self) -> String {
        let c = &self.constraint;
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        push("task", self.task.name().into());
        push("robot", self.robot.name().into());
        push("constraint_kind", c.kind.name().into());
        push("constraint_count", c.count.to_string());
        push("constraint_radius", c.radius.to_string());
        push("trespassable", c.trespassable.to_string());
        push("v0", c.v0.to_string());
        push("v1", c.v1.to_string());
        push("v2", c.v2.to_string());
        push("r0", c.r0.to_string());
        push("r1", c.r1.to_string());
        push("arena_half_extent", self.arena_half_extent.to_string());
        push("lidar_bins", self.lidar_bins.to_string());
        push("lidar_range", self.lidar_range.to_string());
        push("dt", self.dt.to_string());
        push("max_episode_steps", self.max_episode_steps.to_string());
        push("k_distance", self.k_distance.to_string());
        push("k_goal", self.k_goal.to_string());
        push("goal_radius", self.goal_radius.to_string());
        push("protected_radius", self.protected_radius.to_string());
        push("target_count", self.target_count.to_string());
        push("target_radius", self.target_radius.to_string());
        push("ball_radius", self.ball_radius.to_string());
        push("ball_drag", self.ball_drag.to_string());
        push("point_omega_max", self.point.omega_max.to_string());
        push("point_acc_max", self.point.acc_max.to_string());
        push("point_v_max", self.point.v_max.to_string());
        push("drone_drag", self.drone.drag.to_string());
        push("drone_acc_max", self.drone.acc_max.to_string());
        out
    }
}
