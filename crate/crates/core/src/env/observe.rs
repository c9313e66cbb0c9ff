//! Observation builder: proprioception, compasses to the task targets, and
//! one pseudo-lidar block per object category.
//!
//! Layout, in order:
//!
//! * proprio — Point: `[speed, cos(heading), sin(heading)]`;
//!   Drone: `[vx, vy, vz]`.
//! * compasses — unit vectors from the robot to each task target
//!   (2 components for Point, 3 for Drone): Goal: goal; Push: ball, goal;
//!   Chase: each target; Defense: each target, then the protected center.
//! * lidar blocks — constraint objects first, then the task categories in
//!   the same order as the compasses (Chase/Defense targets share one
//!   block). Each block has `lidar_bins` azimuth sectors starting at angle
//!   zero; the drone adds 3 elevation bands per sector. A bin holds the
//!   maximum of `max(0, 1 - dist/lidar_range)` over the objects it covers.
//!
//! Compass directions and lidar azimuths are egocentric: for the Point
//! robot they are rotated into the body frame (azimuth zero is dead
//! ahead). The drone carries no heading, so its body frame coincides with
//! the world frame.

use super::config::{RobotKind, TaskKind, WorldConfig};
use super::objects::{dist3, ObjectSet};
use super::robot::RobotState;

const ELEVATION_BANDS: usize = 3;

fn compass_len(cfg: &WorldConfig) -> usize {
    match cfg.robot {
        RobotKind::Point => 2,
        RobotKind::Drone => 3,
    }
}

fn lidar_block_len(cfg: &WorldConfig) -> usize {
    match cfg.robot {
        RobotKind::Point => cfg.lidar_bins,
        RobotKind::Drone => cfg.lidar_bins * ELEVATION_BANDS,
    }
}

fn compass_count(cfg: &WorldConfig) -> usize {
    match cfg.task {
        TaskKind::Goal => 1,
        TaskKind::Push => 2,
        TaskKind::Chase => cfg.target_count,
        TaskKind::Defense => cfg.target_count + 1,
    }
}

fn lidar_block_count(cfg: &WorldConfig) -> usize {
    match cfg.task {
        TaskKind::Goal => 2,  // constraints, goal
        TaskKind::Push => 3,  // constraints, ball, goal
        TaskKind::Chase => 2, // constraints, targets
        TaskKind::Defense => 2,
    }
}

/// Observation length for a fixed config; constant across an episode and
/// across resets.
pub fn observation_dim(cfg: &WorldConfig) -> usize {
    3 + compass_count(cfg) * compass_len(cfg) + lidar_block_count(cfg) * lidar_block_len(cfg)
}

/// Body frame of the robot: rotates world-frame planar offsets so that
/// azimuth zero points along the robot's heading.
#[derive(Clone, Copy)]
struct BodyFrame {
    cos_h: f64,
    sin_h: f64,
}

impl BodyFrame {
    fn of(robot: &RobotState) -> Self {
        let h = robot.heading();
        Self {
            cos_h: h.cos(),
            sin_h: h.sin(),
        }
    }

    fn rotate(&self, dx: f64, dy: f64) -> (f64, f64) {
        (
            self.cos_h * dx + self.sin_h * dy,
            -self.sin_h * dx + self.cos_h * dy,
        )
    }
}

fn push_compass(
    out: &mut Vec<f64>,
    cfg: &WorldConfig,
    frame: BodyFrame,
    from: [f64; 3],
    to: [f64; 3],
) {
    let (dx, dy) = frame.rotate(to[0] - from[0], to[1] - from[1]);
    let dz = to[2] - from[2];
    match cfg.robot {
        RobotKind::Point => {
            let norm = (dx * dx + dy * dy).sqrt();
            if norm > 1e-9 {
                out.push(dx / norm);
                out.push(dy / norm);
            } else {
                out.push(0.0);
                out.push(0.0);
            }
        }
        RobotKind::Drone => {
            let norm = (dx * dx + dy * dy + dz * dz).sqrt();
            if norm > 1e-9 {
                out.push(dx / norm);
                out.push(dy / norm);
                out.push(dz / norm);
            } else {
                out.extend_from_slice(&[0.0, 0.0, 0.0]);
            }
        }
    }
}

fn push_lidar(
    out: &mut Vec<f64>,
    cfg: &WorldConfig,
    frame: BodyFrame,
    from: [f64; 3],
    objects: &[[f64; 3]],
) {
    let bins = cfg.lidar_bins;
    let block_len = lidar_block_len(cfg);
    let start = out.len();
    out.resize(start + block_len, 0.0);
    let block = &mut out[start..];

    for obj in objects {
        let dist = dist3(from, *obj);
        let intensity = (1.0 - dist / cfg.lidar_range).max(0.0);
        if intensity <= 0.0 {
            continue;
        }
        let (dx, dy) = frame.rotate(obj[0] - from[0], obj[1] - from[1]);
        let mut angle = dy.atan2(dx);
        if angle < 0.0 {
            angle += std::f64::consts::TAU;
        }
        let bin = ((angle / std::f64::consts::TAU) * bins as f64) as usize;
        let bin = bin.min(bins - 1);
        let slot = match cfg.robot {
            RobotKind::Point => bin,
            RobotKind::Drone => {
                let dz = obj[2] - from[2];
                let horiz = (dx * dx + dy * dy).sqrt();
                let elevation = dz.atan2(horiz);
                let band = if elevation < -std::f64::consts::FRAC_PI_6 {
                    0
                } else if elevation < std::f64::consts::FRAC_PI_6 {
                    1
                } else {
                    2
                };
                bin * ELEVATION_BANDS + band
            }
        };
        if intensity > block[slot] {
            block[slot] = intensity;
        }
    }
}

pub fn build_observation(
    robot: &RobotState,
    objects: &ObjectSet,
    cfg: &WorldConfig,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(observation_dim(cfg));
    match robot {
        RobotState::Point { heading, speed, .. } => {
            out.push(*speed);
            out.push(heading.cos());
            out.push(heading.sin());
        }
        RobotState::Drone { vel, .. } => {
            out.extend_from_slice(vel);
        }
    }

    let pos = robot.position();
    let frame = BodyFrame::of(robot);
    match cfg.task {
        TaskKind::Goal => push_compass(&mut out, cfg, frame, pos, objects.goal),
        TaskKind::Push => {
            push_compass(&mut out, cfg, frame, pos, objects.ball_pos);
            push_compass(&mut out, cfg, frame, pos, objects.goal);
        }
        TaskKind::Chase => {
            for t in &objects.targets {
                push_compass(&mut out, cfg, frame, pos, *t);
            }
        }
        TaskKind::Defense => {
            for t in &objects.targets {
                push_compass(&mut out, cfg, frame, pos, *t);
            }
            push_compass(&mut out, cfg, frame, pos, objects.protected_center);
        }
    }

    push_lidar(&mut out, cfg, frame, pos, &objects.constraints);
    match cfg.task {
        TaskKind::Goal => push_lidar(&mut out, cfg, frame, pos, &[objects.goal]),
        TaskKind::Push => {
            push_lidar(&mut out, cfg, frame, pos, &[objects.ball_pos]);
            push_lidar(&mut out, cfg, frame, pos, &[objects.goal]);
        }
        TaskKind::Chase | TaskKind::Defense => {
            push_lidar(&mut out, cfg, frame, pos, &objects.targets);
        }
    }
    debug_assert_eq!(out.len(), observation_dim(cfg));
    out
}
