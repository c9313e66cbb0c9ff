//! The CMDP environment family: arena, two robots (2D Point, 3D Drone),
//! four tasks (Goal, Push, Chase, Defense), four constraint kinds with
//! movable-object dynamics, and the compass/pseudo-lidar observation
//! builder.

mod config;
mod objects;
mod observe;
mod robot;
mod world;

pub use config::{
    ConstraintKind, ConstraintSpec, DroneParams, PointParams, RobotKind, TaskKind, WorldConfig,
};
pub use objects::{
    dist3, movable_velocity, place_objects, update_ball, update_movable_objects, MovableRule,
    ObjectSet,
};
pub use observe::{build_observation, observation_dim};
pub use robot::{clip_action, robot_step, RobotState};
pub use world::{
    compute_cost, compute_reward, trace_to_csv, Env, Snapshot, StepInfo, StepOutcome, TaskEvents,
    TraceRow,
};
