//! World objects: placement by rejection sampling and the piecewise
//! dynamics of the movable ones (chase/defense targets and ghosts).

use super::config::{TaskKind, WorldConfig};
use crate::numerics::RngStream;
use crate::{Error, Result};

/// Effective robot radius used only for placement keep-out around the spawn.
pub const ROBOT_KEEPOUT: f64 = 0.3;
/// Defense targets must spawn at least this far beyond the protected radius.
pub const DEFENSE_SPAWN_MARGIN: f64 = 0.5;
/// Height band for objects placed in 3D.
pub const Z_RANGE: (f64, f64) = (0.5, 2.5);

const MAX_PLACEMENT_ATTEMPTS: u32 = 10_000;

pub fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSet {
    /// Hazard or ghost centers, depending on the configured constraint kind.
    pub constraints: Vec<[f64; 3]>,
    /// Chase/defense targets.
    pub targets: Vec<[f64; 3]>,
    pub ball_pos: [f64; 3],
    pub ball_vel: [f64; 3],
    pub goal: [f64; 3],
    pub protected_center: [f64; 3],
}

impl ObjectSet {
    fn empty() -> Self {
        Self {
            constraints: Vec::new(),
            targets: Vec::new(),
            ball_pos: [0.0; 3],
            ball_vel: [0.0; 3],
            goal: [0.0; 3],
            protected_center: [0.0; 3],
        }
    }
}

/// Rejection-sampling state: everything already placed, with its radius.
struct Placement<'a> {
    cfg: &'a WorldConfig,
    placed: Vec<([f64; 3], f64)>,
}

impl<'a> Placement<'a> {
    fn new(cfg: &'a WorldConfig) -> Self {
        Self {
            cfg,
            placed: vec![([0.0; 3], ROBOT_KEEPOUT)],
        }
    }

    fn sample(
        &mut self,
        rng: &mut RngStream,
        radius: f64,
        elevated: bool,
        extra: impl Fn([f64; 3]) -> bool,
    ) -> Result<[f64; 3]> {
        let half = self.cfg.arena_half_extent;
        let lo = -(half - radius);
        let hi = half - radius;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let x = rng.uniform_range(lo, hi);
            let y = rng.uniform_range(lo, hi);
            let z = if elevated {
                rng.uniform_range(Z_RANGE.0, Z_RANGE.1)
            } else {
                0.0
            };
            let candidate = [x, y, z];
            let clear = self
                .placed
                .iter()
                .all(|(p, r)| dist3(candidate, *p) >= r + radius);
            if clear && extra(candidate) {
                self.placed.push((candidate, radius));
                return Ok(candidate);
            }
        }
        Err(Error::PlacementFailed {
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })
    }
}

/// Lay out a fresh episode. Placement order is fixed (constraints, then
/// task objects) so a seed pins the whole layout.
pub fn place_objects(cfg: &WorldConfig, rng: &mut RngStream) -> Result<ObjectSet> {
    let mut objects = ObjectSet::empty();
    let mut placement = Placement::new(cfg);

    let constraints_3d = cfg.constraint.kind.is_3d();
    for _ in 0..cfg.constraint.count {
        objects.constraints.push(placement.sample(
            rng,
            cfg.constraint.radius,
            constraints_3d,
            |_| true,
        )?);
    }

    let tasks_3d = cfg.robot.is_3d();
    match cfg.task {
        TaskKind::Goal => {
            objects.goal = placement.sample(rng, cfg.goal_radius, tasks_3d, |_| true)?;
        }
        TaskKind::Push => {
            objects.ball_pos = placement.sample(rng, cfg.ball_radius, false, |_| true)?;
            objects.goal = placement.sample(rng, cfg.goal_radius, false, |_| true)?;
        }
        TaskKind::Chase => {
            for _ in 0..cfg.target_count {
                objects
                    .targets
                    .push(placement.sample(rng, cfg.target_radius, tasks_3d, |_| true)?);
            }
        }
        TaskKind::Defense => {
            let min_spawn = cfg.protected_radius + DEFENSE_SPAWN_MARGIN;
            for _ in 0..cfg.target_count {
                objects.targets.push(placement.sample(
                    rng,
                    cfg.target_radius,
                    tasks_3d,
                    |p| dist3(p, [0.0; 3]) >= min_spawn,
                )?);
            }
        }
    }
    Ok(objects)
}

/// Resample the goal after it is reached, keeping clear of everything else.
pub fn resample_goal(
    cfg: &WorldConfig,
    objects: &mut ObjectSet,
    robot_pos: [f64; 3],
    rng: &mut RngStream,
) -> Result<()> {
    let mut placement = Placement::new(cfg);
    placement.placed[0] = (robot_pos, ROBOT_KEEPOUT);
    for c in &objects.constraints {
        placement.placed.push((*c, cfg.constraint.radius));
    }
    if cfg.task == TaskKind::Push {
        placement.placed.push((objects.ball_pos, cfg.ball_radius));
    }
    let elevated = cfg.robot.is_3d() && cfg.task == TaskKind::Goal;
    objects.goal = placement.sample(rng, cfg.goal_radius, elevated, |_| true)?;
    Ok(())
}

/// Which piecewise rule a movable object follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovableRule {
    ChaseTarget,
    DefenseTarget,
    Ghost,
}

/// The exact piecewise velocity of a movable object. With
/// `d_origin = origin - x` and `d_robot = robot - x`:
///
/// * chase target:   `v0*d_origin` outside `r0`; `-v1*d_robot` inside `r0`
///   with the robot within `r1`; else `0`.
/// * defense target: same first two branches; else `v2*d_origin`.
/// * ghost:          `v0*d_origin` outside `r0`; `v1*d_robot` inside `r0`
///   with the robot beyond `r1`; else `0`.
#[allow(clippy::too_many_arguments)]
pub fn movable_velocity(
    rule: MovableRule,
    object: [f64; 3],
    robot: [f64; 3],
    v0: f64,
    v1: f64,
    v2: f64,
    r0: f64,
    r1: f64,
) -> [f64; 3] {
    let d_origin = [-object[0], -object[1], -object[2]];
    let d_robot = [
        robot[0] - object[0],
        robot[1] - object[1],
        robot[2] - object[2],
    ];
    let n_origin = dist3(object, [0.0; 3]);
    let n_robot = dist3(object, robot);
    let scale = |v: [f64; 3], k: f64| [k * v[0], k * v[1], k * v[2]];

    match rule {
        MovableRule::ChaseTarget => {
            if n_origin > r0 {
                scale(d_origin, v0)
            } else if n_robot <= r1 {
                scale(d_robot, -v1)
            } else {
                [0.0; 3]
            }
        }
        MovableRule::DefenseTarget => {
            if n_origin > r0 {
                scale(d_origin, v0)
            } else if n_robot <= r1 {
                scale(d_robot, -v1)
            } else {
                scale(d_origin, v2)
            }
        }
        MovableRule::Ghost => {
            if n_origin > r0 {
                scale(d_origin, v0)
            } else if n_robot > r1 {
                scale(d_robot, v1)
            } else {
                [0.0; 3]
            }
        }
    }
}

/// One Euler step of every movable object (ghost constraints and
/// chase/defense targets). Hazards are static.
pub fn update_movable_objects(
    objects: &ObjectSet,
    robot: [f64; 3],
    cfg: &WorldConfig,
) -> ObjectSet {
    let mut next = objects.clone();
    let c = &cfg.constraint;
    let dt = cfg.dt;
    let half = cfg.arena_half_extent;

    let integrate = |pos: [f64; 3], vel: [f64; 3], keep_z: bool| {
        let z = if keep_z {
            (pos[2] + vel[2] * dt).clamp(0.0, half)
        } else {
            0.0
        };
        [
            (pos[0] + vel[0] * dt).clamp(-half, half),
            (pos[1] + vel[1] * dt).clamp(-half, half),
            z,
        ]
    };

    if c.kind.is_ghost() {
        let ghost_3d = c.kind.is_3d();
        for ghost in &mut next.constraints {
            let mut vel =
                movable_velocity(MovableRule::Ghost, *ghost, robot, c.v0, c.v1, c.v2, c.r0, c.r1);
            if !ghost_3d {
                vel[2] = 0.0;
            }
            *ghost = integrate(*ghost, vel, ghost_3d);
        }
    }

    let rule = match cfg.task {
        TaskKind::Chase => Some(MovableRule::ChaseTarget),
        TaskKind::Defense => Some(MovableRule::DefenseTarget),
        _ => None,
    };
    if let Some(rule) = rule {
        let targets_3d = cfg.robot.is_3d();
        for target in &mut next.targets {
            let mut vel =
                movable_velocity(rule, *target, robot, c.v0, c.v1, c.v2, c.r0, c.r1);
            if !targets_3d {
                vel[2] = 0.0;
            }
            *target = integrate(*target, vel, targets_3d);
        }
    }
    next
}

/// Robot-ball contact and ball integration for the push task: on overlap
/// the ball gains `overlap_depth / dt` of speed along the contact normal,
/// then its velocity decays with drag.
pub fn update_ball(objects: &mut ObjectSet, robot: [f64; 3], cfg: &WorldConfig) {
    let dt = cfg.dt;
    let half = cfg.arena_half_extent;
    let dx = objects.ball_pos[0] - robot[0];
    let dy = objects.ball_pos[1] - robot[1];
    let dist = (dx * dx + dy * dy).sqrt();
    if dist < cfg.ball_radius {
        let depth = cfg.ball_radius - dist;
        let normal = if dist > 1e-9 {
            [dx / dist, dy / dist]
        } else {
            [1.0, 0.0]
        };
        objects.ball_vel[0] += depth / dt * normal[0];
        objects.ball_vel[1] += depth / dt * normal[1];
    }
    let keep = 1.0 - cfg.ball_drag * dt;
    objects.ball_vel[0] *= keep;
    objects.ball_vel[1] *= keep;
    objects.ball_vel[2] = 0.0;
    objects.ball_pos[0] = (objects.ball_pos[0] + objects.ball_vel[0] * dt).clamp(-half, half);
    objects.ball_pos[1] = (objects.ball_pos[1] + objects.ball_vel[1] * dt).clamp(-half, half);
    objects.ball_pos[2] = 0.0;
}
