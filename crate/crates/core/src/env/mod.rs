//! Deterministic 2D crowd-navigation world.
//!
//! A robot follows a densified waypoint route through an axis-aligned corridor
//! populated by straight-walking pedestrians that reflect off the walls. The
//! robot senses the world through a fan of range rays and receives an
//! ego-frame offset to its imminent waypoint.

mod expert;
pub mod geometry;
pub mod route;
mod sensing;
mod world;

pub use expert::{expert_action, is_path_blocked};
pub use geometry::{wrap_angle, Arena, Vec2};
pub use route::{geodesic_distance, polyline_distance};
pub use sensing::sense;
pub use world::{new_episode, route_progress, step};

use crate::{Error, Result};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Maximum speed of the robot, m/s.
pub const MAX_SPEED: f64 = 1.5;

/// Distance measure behind `d_geo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeodesicMode {
    /// Distance to the nearest route waypoint.
    #[default]
    Waypoint,
    /// Distance to the nearest point of the route polyline.
    Polyline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Collisions terminate the episode.
    Train,
    /// Collisions are counted and the episode continues.
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    pub route: Vec<Vec2>,
    pub route_length_max: f64,
    pub pedestrian_count: usize,
    /// Pedestrian walking speed range `[min, max]`, m/s.
    pub pedestrian_speed: [f64; 2],
    pub arena: Arena,
    pub dt: f64,
    pub max_steps: usize,
    pub robot_radius: f64,
    pub pedestrian_radius: f64,
    pub goal_radius: f64,
    pub deviation_truncate: f64,
    pub sensing_range: f64,
    pub ray_count: usize,
    /// Maximum heading change per tick, rad.
    pub d_m: f64,
    /// Maximum speed, m/s.
    pub m_v: f64,
    /// Half-width of the strip along the route where pedestrians spawn.
    pub spawn_half_width: f64,
    /// Radius around the robot kept free of pedestrians at spawn, m.
    pub spawn_clearance: f64,
    /// Eval-mode despawn time after a collision, s.
    pub collision_grace: f64,
    pub geodesic: GeodesicMode,
}

/// Margin between the route bounding box and the arena walls.
pub const ARENA_MARGIN: f64 = 4.0;

impl WorldConfig {
    /// Default world around `route`, with the arena fitted to the route.
    pub fn for_route(route: Vec<Vec2>) -> Self {
        let arena = Arena::around(&route, ARENA_MARGIN);
        WorldConfig {
            route,
            route_length_max: 40.0,
            pedestrian_count: 0,
            pedestrian_speed: [0.5, 1.2],
            arena,
            dt: 0.1,
            max_steps: 1500,
            robot_radius: 0.4,
            pedestrian_radius: 0.3,
            goal_radius: 1.0,
            deviation_truncate: 3.0,
            sensing_range: 8.0,
            ray_count: 16,
            d_m: 0.3,
            m_v: MAX_SPEED,
            spawn_half_width: 3.0,
            spawn_clearance: 2.0,
            collision_grace: 2.0,
            geodesic: GeodesicMode::Waypoint,
        }
    }

    /// Default world on fixture route `index`.
    pub fn fixture(index: usize) -> Self {
        Self::for_route(route::fixture(index))
    }

    pub fn with_pedestrians(mut self, count: usize) -> Self {
        self.pedestrian_count = count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.route.len() < 2 {
            return fail("route needs at least 2 waypoints");
        }
        if route::total_length(&self.route) > self.route_length_max + 1e-9 {
            return fail("route longer than route_length_max");
        }
        if !(self.dt > 0.0) {
            return fail("dt must be positive");
        }
        if self.max_steps < 1 {
            return fail("max_steps must be at least 1");
        }
        if !(self.deviation_truncate > self.goal_radius) {
            return fail("deviation_truncate must exceed goal_radius");
        }
        if self.ray_count < 2 {
            return fail("ray_count must be at least 2");
        }
        let [lo, hi] = self.pedestrian_speed;
        if !(lo >= 0.0 && lo <= hi) {
            return fail("pedestrian_speed must be an ordered non-negative range");
        }
        if !(self.d_m > 0.0 && self.m_v > 0.0 && self.sensing_range > 0.0) {
            return fail("d_m, m_v and sensing_range must be positive");
        }
        if !(self.robot_radius > 0.0 && self.pedestrian_radius > 0.0 && self.goal_radius > 0.0) {
            return fail("radii must be positive");
        }
        if !(self.arena.min.x < self.arena.max.x && self.arena.min.y < self.arena.max.y) {
            return fail("arena bounds are empty");
        }
        if !(self.collision_grace >= 0.0 && self.spawn_half_width >= 0.0) {
            return fail("collision_grace and spawn_half_width must be non-negative");
        }
        Ok(())
    }

    /// Width of the flattened observation vector.
    pub fn observation_width(&self) -> usize {
        self.ray_count + 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vec2,
    /// Radians in (-pi, pi].
    pub heading: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedestrianState {
    pub position: Vec2,
    pub velocity: Vec2,
    /// Ticks left before a despawned pedestrian re-enters; 0 when active.
    pub respawn_ticks: u32,
}

impl PedestrianState {
    pub fn is_active(&self) -> bool {
        self.respawn_ticks == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub robot: RobotState,
    pub pedestrians: Vec<PedestrianState>,
    pub step_index: usize,
    pub next_waypoint: usize,
    pub meters_traveled: f64,
    pub collision_count: u32,
    /// Farthest arc length reached along the route, m.
    pub progress_arc: f64,
    pub max_deviation: f64,
    pub done: bool,
    pub mode: Mode,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Normalized clear distance per ray, 1 = nothing within sensing range.
    pub rays: Vec<f64>,
    /// Ego-frame offset to the imminent waypoint over sensing range, clamped to [-1, 1].
    pub goal: [f64; 2],
    pub speed_norm: f64,
}

impl Observation {
    /// Flat feature vector: rays, goal, normalized speed.
    pub fn features(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.rays.len() + 3);
        v.extend_from_slice(&self.rays);
        v.extend_from_slice(&self.goal);
        v.push(self.speed_norm);
        v
    }

    pub fn from_features(features: &[f64], ray_count: usize) -> Result<Self> {
        if features.len() != ray_count + 3 {
            return Err(Error::shape(ray_count + 3, features.len()));
        }
        Ok(Observation {
            rays: features[..ray_count].to_vec(),
            goal: [features[ray_count], features[ray_count + 1]],
            speed_norm: features[ray_count + 2],
        })
    }
}

/// Heading change `d` (rad per tick) and commanded speed `v` (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub d: f64,
    pub v: f64,
}

impl Action {
    pub const STOP: Action = Action { d: 0.0, v: 0.0 };

    pub fn new(d: f64, v: f64) -> Self {
        Self { d, v }
    }

    pub fn clamped(self, d_m: f64, m_v: f64) -> Action {
        Action {
            d: self.d.clamp(-d_m, d_m),
            v: self.v.clamp(0.0, m_v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepEvents {
    pub collision: bool,
    pub reached_goal: bool,
    pub deviated: bool,
    pub out_of_steps: bool,
}

impl StepEvents {
    /// True for events that end the episode without a bootstrap value.
    pub fn is_terminal(&self, mode: Mode) -> bool {
        self.reached_goal || self.deviated || (self.collision && mode == Mode::Train)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub d_geo: f64,
    /// Route progress gained this tick, m.
    pub advanced: f64,
    /// Pedestrians hit this tick.
    pub collisions: u32,
    pub events: StepEvents,
    pub done: bool,
}
