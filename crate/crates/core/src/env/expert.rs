use super::geometry::wrap_angle;
use super::{Action, EnvState, WorldConfig};

/// Range of the halting cone, m.
pub const BLOCK_RANGE: f64 = 2.0;
/// Half-angle of the halting cone, rad.
pub const BLOCK_HALF_ANGLE: f64 = std::f64::consts::PI / 6.0;

/// True when an active pedestrian is within the halting cone ahead of the robot.
pub fn is_path_blocked(state: &EnvState) -> bool {
    let robot = &state.robot;
    state.pedestrians.iter().filter(|p| p.is_active()).any(|p| {
        let rel = p.position - robot.position;
        let dist = rel.norm();
        if dist > BLOCK_RANGE {
            return false;
        }
        let bearing = wrap_angle(rel.y.atan2(rel.x) - robot.heading);
        dist == 0.0 || bearing.abs() <= BLOCK_HALF_ANGLE
    })
}

/// Demonstration policy: pure pursuit of the imminent waypoint at full speed,
/// stopping while a pedestrian blocks the path.
pub fn expert_action(state: &EnvState, config: &WorldConfig) -> Action {
    let target = config.route[state.next_waypoint.min(config.route.len() - 1)];
    let rel = target - state.robot.position;
    let d = if rel.norm() == 0.0 {
        0.0
    } else {
        wrap_angle(rel.y.atan2(rel.x) - state.robot.heading).clamp(-config.d_m, config.d_m)
    };
    let v = if is_path_blocked(state) { 0.0 } else { config.m_v };
    Action { d, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{new_episode, Mode, PedestrianState, Vec2};

    fn setup(ped: Option<Vec2>) -> (EnvState, WorldConfig) {
        let cfg = WorldConfig::fixture(0).with_pedestrians(usize::from(ped.is_some()));
        let (mut s, _) = new_episode(&cfg, 0, Mode::Eval).unwrap();
        if let Some(offset) = ped {
            s.pedestrians[0] = PedestrianState {
                position: s.robot.position + offset,
                velocity: Vec2::ZERO,
                respawn_ticks: 0,
            };
        }
        (s, cfg)
    }

    #[test]
    fn halts_for_pedestrian_ahead() {
        let (s, cfg) = setup(Some(Vec2::new(1.5, 0.0)));
        assert_eq!(expert_action(&s, &cfg).v, 0.0);
    }

    #[test]
    fn ignores_pedestrian_outside_cone() {
        let (s, cfg) = setup(Some(Vec2::new(1.0, 1.0)));
        assert_eq!(expert_action(&s, &cfg).v, 1.5);
        let (s, cfg) = setup(Some(Vec2::new(2.5, 0.0)));
        assert_eq!(expert_action(&s, &cfg).v, 1.5);
    }

    #[test]
    fn straight_clear_path() {
        let (s, cfg) = setup(None);
        let a = expert_action(&s, &cfg);
        assert_eq!(a, Action { d: 0.0, v: 1.5 });
    }

    #[test]
    fn sharp_turn_is_clamped() {
        let (mut s, cfg) = setup(None);
        s.robot.heading = -std::f64::consts::FRAC_PI_2;
        let a = expert_action(&s, &cfg);
        assert_eq!(a.d, 0.3);
    }
}
