//! Reduced robot kinematics: a 2D unicycle and a 3D damped double
//! integrator. Action components are clipped to `[-1, 1]` before use.

use super::config::{RobotKind, WorldConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum RobotState {
    Point {
        pos: [f64; 2],
        heading: f64,
        speed: f64,
    },
    Drone {
        pos: [f64; 3],
        vel: [f64; 3],
    },
}

impl RobotState {
    pub fn initial(kind: RobotKind) -> Self {
        match kind {
            RobotKind::Point => RobotState::Point {
                pos: [0.0, 0.0],
                heading: 0.0,
                speed: 0.0,
            },
            RobotKind::Drone => RobotState::Drone {
                pos: [0.0, 0.0, 0.0],
                vel: [0.0, 0.0, 0.0],
            },
        }
    }

    pub fn position(&self) -> [f64; 3] {
        match self {
            RobotState::Point { pos, .. } => [pos[0], pos[1], 0.0],
            RobotState::Drone { pos, .. } => *pos,
        }
    }

    pub fn set_position(&mut self, p: [f64; 3]) {
        match self {
            RobotState::Point { pos, .. } => {
                pos[0] = p[0];
                pos[1] = p[1];
            }
            RobotState::Drone { pos, .. } => *pos = p,
        }
    }

    pub fn heading(&self) -> f64 {
        match self {
            RobotState::Point { heading, .. } => *heading,
            RobotState::Drone { .. } => 0.0,
        }
    }
}

pub fn clip_action(action: &[f64]) -> Vec<f64> {
    action.iter().map(|a| a.clamp(-1.0, 1.0)).collect()
}

/// One Euler step of the robot kinematics. The returned position is clamped
/// to the arena (with `z` kept in `[0, half_extent]` for the drone).
pub fn robot_step(state: &RobotState, action: &[f64], cfg: &WorldConfig) -> RobotState {
    let a = clip_action(action);
    let dt = cfg.dt;
    let half = cfg.arena_half_extent;
    match state {
        RobotState::Point { pos, heading, speed } => {
            let p = &cfg.point;
            let mut heading = heading + a[0] * p.omega_max * dt;
            if heading.abs() > std::f64::consts::PI {
                heading = heading.rem_euclid(std::f64::consts::TAU);
                if heading > std::f64::consts::PI {
                    heading -= std::f64::consts::TAU;
                }
            }
            let speed = (speed + a[1] * p.acc_max * dt).clamp(0.0, p.v_max);
            let pos = [
                (pos[0] + speed * heading.cos() * dt).clamp(-half, half),
                (pos[1] + speed * heading.sin() * dt).clamp(-half, half),
            ];
            RobotState::Point { pos, heading, speed }
        }
        RobotState::Drone { pos, vel } => {
            let d = &cfg.drone;
            let keep = 1.0 - d.drag * dt;
            let vel = [
                keep * vel[0] + a[0] * d.acc_max * dt,
                keep * vel[1] + a[1] * d.acc_max * dt,
                keep * vel[2] + a[2] * d.acc_max * dt,
            ];
            let pos = [
                (pos[0] + vel[0] * dt).clamp(-half, half),
                (pos[1] + vel[1] * dt).clamp(-half, half),
                (pos[2] + vel[2] * dt).clamp(0.0, half),
            ];
            RobotState::Drone { pos, vel }
        }
    }
}
