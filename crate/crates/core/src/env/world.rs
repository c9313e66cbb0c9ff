//! The environment proper: reset, step ordering, rewards, and costs.
//!
//! Step order: clip action -> robot kinematics -> movable objects -> ball
//! contact (push) -> reward -> cost (with untrespassable contact
//! resolution) -> goal resampling -> observation -> done check.

use super::config::{TaskKind, WorldConfig};
use super::objects::{
    dist3, place_objects, resample_goal, update_ball, update_movable_objects, ObjectSet,
};
use super::observe::{build_observation, observation_dim};
use super::robot::{robot_step, RobotState};
use crate::numerics::RngStream;
use crate::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepInfo {
    pub goals_reached: u32,
    pub violations: u32,
    pub breaches: u32,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub cost: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Positions that the dense rewards compare across a step.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub robot: [f64; 3],
    pub targets: Vec<[f64; 3]>,
    pub ball: [f64; 3],
    pub goal: [f64; 3],
    pub protected_center: [f64; 3],
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TaskEvents {
    pub goal_reached: bool,
    pub breaches: u32,
}

/// Dense task reward between two snapshots, plus the task events the
/// environment reacts to (goal resampling, defense termination).
pub fn compute_reward(
    before: &Snapshot,
    after: &Snapshot,
    cfg: &WorldConfig,
) -> (f64, TaskEvents) {
    let k_d = cfg.k_distance;
    let k_g = cfg.k_goal;
    let mut events = TaskEvents::default();
    let mut reward = 0.0;
    match cfg.task {
        TaskKind::Goal => {
            let before_dist = dist3(before.robot, before.goal);
            let after_dist = dist3(after.robot, after.goal);
            reward += k_d * (before_dist - after_dist);
            if after_dist <= cfg.goal_radius {
                reward += k_g;
                events.goal_reached = true;
            }
        }
        TaskKind::Push => {
            reward += k_d * (dist3(before.robot, before.ball) - dist3(after.robot, after.ball));
            reward += k_d * (dist3(before.ball, before.goal) - dist3(after.ball, after.goal));
            if dist3(after.ball, after.goal) <= cfg.goal_radius {
                reward += k_g;
                events.goal_reached = true;
            }
        }
        TaskKind::Chase => {
            for (b, a) in before.targets.iter().zip(&after.targets) {
                reward += k_d * (dist3(before.robot, *b) - dist3(after.robot, *a));
            }
        }
        TaskKind::Defense => {
            for (b, a) in before.targets.iter().zip(&after.targets) {
                reward += k_d
                    * (dist3(*a, after.protected_center) - dist3(*b, before.protected_center));
                if dist3(*a, after.protected_center) <= cfg.protected_radius {
                    events.breaches += 1;
                }
            }
            reward -= k_g * events.breaches as f64;
        }
    }
    (reward, events)
}

/// Count constraint violations at the robot's position. The predicate is
/// center distance at or below the object radius; untrespassable objects
/// additionally push the robot back to their surface along the contact
/// normal (blocking, without momentum transfer).
pub fn compute_cost(robot: &mut RobotState, objects: &ObjectSet, cfg: &WorldConfig) -> u32 {
    let radius = cfg.constraint.radius;
    let mut violations = 0;
    for center in &objects.constraints {
        let pos = robot.position();
        let dist = dist3(pos, *center);
        if dist <= radius {
            violations += 1;
            if !cfg.constraint.trespassable {
                let normal = if dist > 1e-9 {
                    [
                        (pos[0] - center[0]) / dist,
                        (pos[1] - center[1]) / dist,
                        (pos[2] - center[2]) / dist,
                    ]
                } else {
                    [1.0, 0.0, 0.0]
                };
                let half = cfg.arena_half_extent;
                robot.set_position([
                    (center[0] + radius * normal[0]).clamp(-half, half),
                    (center[1] + radius * normal[1]).clamp(-half, half),
                    (center[2] + radius * normal[2]).clamp(0.0, half),
                ]);
            }
        }
    }
    violations
}

/// One environment instance: single-owner mutable state. Parallel data
/// collection uses independent instances with distinct seeds.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: WorldConfig,
    pub robot: RobotState,
    pub objects: ObjectSet,
    steps: u32,
    rng: RngStream,
}

impl Env {
    /// Fresh episode: robot at the arena center with zero velocity, objects
    /// placed by rejection sampling, counters zeroed. Deterministic in the
    /// seed.
    pub fn reset(cfg: &WorldConfig, seed: u64) -> Result<(Self, Vec<f64>)> {
        cfg.validate()?;
        let mut rng = RngStream::new(seed);
        let objects = place_objects(cfg, &mut rng)?;
        let robot = RobotState::initial(cfg.robot);
        let env = Env {
            cfg: cfg.clone(),
            robot,
            objects,
            steps: 0,
            rng,
        };
        let obs = env.observation();
        Ok((env, obs))
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn observation(&self) -> Vec<f64> {
        build_observation(&self.robot, &self.objects, &self.cfg)
    }

    pub fn observation_dim(&self) -> usize {
        observation_dim(&self.cfg)
    }

    fn snapshot(&self, robot: [f64; 3], objects: &ObjectSet) -> Snapshot {
        Snapshot {
            robot,
            targets: objects.targets.clone(),
            ball: objects.ball_pos,
            goal: objects.goal,
            protected_center: objects.protected_center,
        }
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        let before = self.snapshot(self.robot.position(), &self.objects);

        let mut robot = robot_step(&self.robot, action, &self.cfg);
        let mut objects = update_movable_objects(&self.objects, robot.position(), &self.cfg);
        if self.cfg.task == TaskKind::Push {
            update_ball(&mut objects, robot.position(), &self.cfg);
        }

        let after = self.snapshot(robot.position(), &objects);
        let (reward, events) = compute_reward(&before, &after, &self.cfg);
        let violations = compute_cost(&mut robot, &objects, &self.cfg);

        if events.goal_reached {
            resample_goal(&self.cfg, &mut objects, robot.position(), &mut self.rng)?;
        }

        self.robot = robot;
        self.objects = objects;
        self.steps += 1;

        let done = self.steps >= self.cfg.max_episode_steps || events.breaches > 0;
        let observation = self.observation();
        Ok(StepOutcome {
            observation,
            reward,
            cost: violations as f64,
            done,
            info: StepInfo {
                goals_reached: events.goal_reached as u32,
                violations,
                breaches: events.breaches,
            },
        })
    }
}

/// One row of a debugging episode trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub step: u32,
    pub position: [f64; 3],
    pub heading: f64,
    pub reward: f64,
    pub cost: f64,
}

/// Render an episode trace as CSV (`step,x,y,z,heading,reward,cost`).
pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("step,x,y,z,heading,reward,cost\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.step, r.position[0], r.position[1], r.position[2], r.heading, r.reward, r.cost
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::config::{ConstraintKind, RobotKind};

    #[test]
    fn first_step_of_fresh_goal_env_is_safe() {
        // The spawn keep-out guarantees zero cost on the first step, and with
        // zero action the dense reward is bounded by the event bonus.
        for seed in 0..20 {
            let cfg = WorldConfig::default();
            let (mut env, _) = Env::reset(&cfg, seed).unwrap();
            let out = env.step(&[0.0, 0.0]).unwrap();
            assert_eq!(out.cost, 0.0, "seed {seed}");
            assert!(out.reward.abs() <= cfg.k_goal, "seed {seed}");
        }
    }

    #[test]
    fn episode_ends_at_step_limit() {
        let cfg = WorldConfig {
            max_episode_steps: 1000,
            ..WorldConfig::default()
        };
        let (mut env, _) = Env::reset(&cfg, 3).unwrap();
        for step in 1..=1000 {
            let out = env.step(&[0.1, 0.2]).unwrap();
            assert_eq!(out.done, step == 1000, "step {step}");
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let cfg = WorldConfig {
            task: TaskKind::Chase,
            ..WorldConfig::default()
        };
        let mut actions = Vec::new();
        let mut rng = RngStream::new(11);
        for _ in 0..200 {
            actions.push([rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)]);
        }
        let run = |seed: u64| -> Vec<(u64, u64)> {
            let (mut env, _) = Env::reset(&cfg, seed).unwrap();
            actions
                .iter()
                .map(|a| {
                    let out = env.step(a).unwrap();
                    (out.reward.to_bits(), out.cost.to_bits())
                })
                .collect()
        };
        assert_eq!(run(42), run(42));
    }

    #[test]
    fn no_motion_means_no_dense_reward() {
        let cfg = WorldConfig::default();
        let (mut env, _) = Env::reset(&cfg, 7).unwrap();
        // Zero action on a Point robot at rest: nothing moves in Goal.
        let out = env.step(&[0.0, 0.0]).unwrap();
        assert_eq!(out.reward, 0.0);
    }

    #[test]
    fn goal_progress_is_rewarded_by_distance_delta() {
        let cfg = WorldConfig::default();
        let before = Snapshot {
            robot: [0.0; 3],
            targets: vec![],
            ball: [0.0; 3],
            goal: [2.0, 0.0, 0.0],
            protected_center: [0.0; 3],
        };
        let mut after = before.clone();
        after.robot = [0.1, 0.0, 0.0];
        let (reward, events) = compute_reward(&before, &after, &cfg);
        assert!((reward - 0.1).abs() < 1e-12);
        assert!(!events.goal_reached);
    }

    #[test]
    fn reaching_the_goal_pays_bonus_and_resamples() {
        let cfg = WorldConfig::default();
        let (mut env, _) = Env::reset(&cfg, 19).unwrap();
        let old_goal = env.objects.goal;
        // Teleport the robot next to the goal and step toward it.
        env.robot
            .set_position([old_goal[0] - 0.25, old_goal[1], 0.0]);
        match &mut env.robot {
            RobotState::Point { heading, speed, .. } => {
                *heading = (old_goal[1] - (old_goal[1])).atan2(0.25);
                *speed = 1.5;
            }
            _ => unreachable!(),
        }
        let out = env.step(&[0.0, 1.0]).unwrap();
        assert!(out.info.goals_reached == 1);
        assert!(out.reward > cfg.k_goal * 0.5);
        let new_goal = env.objects.goal;
        assert!(dist3(new_goal, old_goal) > 0.0, "goal must move");
        // New goal respects the separation rule against the robot.
        assert!(dist3(new_goal, env.robot.position()) >= 0.6 - 1e-9);
    }

    #[test]
    fn boundary_contact_counts_as_violation() {
        // Dyadic coordinates so dist == radius holds exactly in binary.
        let mut cfg = WorldConfig::default();
        cfg.constraint.radius = 0.25;
        let objects = ObjectSet {
            constraints: vec![[1.0, 0.0, 0.0]],
            targets: vec![],
            ball_pos: [0.0; 3],
            ball_vel: [0.0; 3],
            goal: [2.0, 2.0, 0.0],
            protected_center: [0.0; 3],
        };
        let mut robot = RobotState::Point {
            pos: [0.75, 0.0],
            heading: 0.0,
            speed: 0.0,
        };
        assert_eq!(compute_cost(&mut robot, &objects, &cfg), 1);
    }

    #[test]
    fn overlapping_two_hazards_costs_two() {
        let cfg = WorldConfig::default();
        let objects = ObjectSet {
            constraints: vec![[0.1, 0.0, 0.0], [-0.1, 0.0, 0.0]],
            targets: vec![],
            ball_pos: [0.0; 3],
            ball_vel: [0.0; 3],
            goal: [2.0, 2.0, 0.0],
            protected_center: [0.0; 3],
        };
        let mut robot = RobotState::initial(RobotKind::Point);
        assert_eq!(compute_cost(&mut robot, &objects, &cfg), 2);
    }

    #[test]
    fn far_robot_costs_nothing() {
        let cfg = WorldConfig::default();
        let objects = ObjectSet {
            constraints: vec![[2.0, 2.0, 0.0]],
            targets: vec![],
            ball_pos: [0.0; 3],
            ball_vel: [0.0; 3],
            goal: [0.0; 3],
            protected_center: [0.0; 3],
        };
        let mut robot = RobotState::initial(RobotKind::Point);
        assert_eq!(compute_cost(&mut robot, &objects, &cfg), 0);
    }

    #[test]
    fn untrespassable_contact_blocks_the_robot() {
        let mut cfg = WorldConfig::default();
        cfg.constraint.kind = ConstraintKind::Ghosts;
        cfg.constraint.trespassable = false;
        let objects = ObjectSet {
            constraints: vec![[1.0, 0.0, 0.0]],
            targets: vec![],
            ball_pos: [0.0; 3],
            ball_vel: [0.0; 3],
            goal: [2.0, 2.0, 0.0],
            protected_center: [0.0; 3],
        };
        let mut robot = RobotState::Point {
            pos: [0.9, 0.0],
            heading: 0.0,
            speed: 1.0,
        };
        let violations = compute_cost(&mut robot, &objects, &cfg);
        assert_eq!(violations, 1);
        let pos = robot.position();
        let dist = dist3(pos, [1.0, 0.0, 0.0]);
        assert!((dist - cfg.constraint.radius).abs() < 1e-9, "pushed to surface");
    }

    #[test]
    fn cost_matches_brute_force_rescan() {
        // Re-scan every object each step and compare with the step outcome.
        let cfg = WorldConfig {
            task: TaskKind::Goal,
            ..WorldConfig::default()
        };
        let (mut env, _) = Env::reset(&cfg, 31).unwrap();
        let mut rng = RngStream::new(32);
        for _ in 0..300 {
            let action = [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)];
            let out = env.step(&action).unwrap();
            let rescan = env
                .objects
                .constraints
                .iter()
                .filter(|c| dist3(env.robot.position(), **c) <= cfg.constraint.radius)
                .count() as f64;
            assert_eq!(out.cost, rescan);
        }
    }

    #[test]
    fn defense_breach_terminates_with_penalty() {
        let cfg = WorldConfig {
            task: TaskKind::Defense,
            ..WorldConfig::default()
        };
        let (mut env, _) = Env::reset(&cfg, 13).unwrap();
        // Drop a target just outside the protected area, headed inward; the
        // defense rule (robot far, inside r0) moves it toward the origin.
        env.objects.targets[0] = [cfg.protected_radius + 0.01, 0.0, 0.0];
        let mut done = false;
        let mut last_reward = 0.0;
        for _ in 0..20 {
            let out = env.step(&[0.0, 0.0]).unwrap();
            if out.done {
                done = true;
                last_reward = out.reward;
                assert!(out.info.breaches >= 1);
                break;
            }
        }
        assert!(done, "target should breach the protected area");
        assert!(last_reward < 0.0, "breach reward {last_reward}");
    }

    #[test]
    fn push_contact_kicks_the_ball() {
        let cfg = WorldConfig {
            task: TaskKind::Push,
            ..WorldConfig::default()
        };
        let (mut env, _) = Env::reset(&cfg, 17).unwrap();
        let ball = env.objects.ball_pos;
        // Teleport the robot onto the ball boundary and drive into it.
        env.robot.set_position([ball[0] - 0.25, ball[1], 0.0]);
        match &mut env.robot {
            RobotState::Point { heading, speed, .. } => {
                *heading = 0.0;
                *speed = 1.5;
            }
            _ => unreachable!(),
        }
        env.step(&[0.0, 1.0]).unwrap();
        let vel = env.objects.ball_vel;
        assert!(vel[0] > 0.0, "ball should roll away: {vel:?}");
    }

    #[test]
    fn trace_csv_header_and_rows() {
        let rows = vec![TraceRow {
            step: 0,
            position: [0.5, -0.25, 0.0],
            heading: 0.1,
            reward: 1.5,
            cost: 0.0,
        }];
        let csv = trace_to_csv(&rows);
        assert!(csv.starts_with("step,x,y,z,heading,reward,cost\n"));
        assert!(csv.contains("0,0.5,-0.25,0,0.1,1.5,0"));
    }
}
