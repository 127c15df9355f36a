use super::geometry::{ray_disc, Vec2};
use super::{EnvState, Observation, WorldConfig};
use std::f64::consts::PI;

/// Bearing of ray `i` relative to the robot heading.
pub(crate) fn ray_offset(i: usize, ray_count: usize) -> f64 {
    (i as f64 / (ray_count - 1) as f64 - 0.5) * PI
}

/// Casts the forward ray fan and builds the observation for `state`.
pub fn sense(state: &EnvState, config: &WorldConfig) -> Observation {
    let origin = state.robot.position;
    let range = config.sensing_range;
    let rays = (0..config.ray_count)
        .map(|i| {
            let dir = Vec2::from_angle(state.robot.heading + ray_offset(i, config.ray_count));
            let wall = config.arena.ray_hit(origin, dir).unwrap_or(f64::INFINITY);
            let hit = state
                .pedestrians
                .iter()
                .filter(|p| p.is_active())
                .filter_map(|p| ray_disc(origin, dir, p.position, config.pedestrian_radius))
                .fold(wall, f64::min);
            (hit / range).clamp(0.0, 1.0)
        })
        .collect();

    let target = config.route[state.next_waypoint.min(config.route.len() - 1)];
    let local = (target - origin).to_frame(state.robot.heading);
    let goal = [
        (local.x / range).clamp(-1.0, 1.0),
        (local.y / range).clamp(-1.0, 1.0),
    ];
    Observation {
        rays,
        goal,
        speed_norm: (state.robot.speed / config.m_v).clamp(0.0, 1.0),
    }
}
