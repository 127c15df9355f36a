use super::geometry::{wrap_angle, Vec2};
use super::route::{self, geodesic_distance, polyline_distance};
use super::sensing::sense;
use super::{
    Action, EnvState, GeodesicMode, Mode, Observation, PedestrianState, RobotState, StepEvents,
    StepOutcome, WorldConfig,
};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Search window around the current progress when projecting onto the route, m.
const PROJECTION_WINDOW: f64 = 3.0;
const SPAWN_ATTEMPTS: usize = 100;

/// Starts an episode: robot on the first waypoint facing the first segment,
/// pedestrians scattered along the route strip.
pub fn new_episode(config: &WorldConfig, seed: u64, mode: Mode) -> Result<(EnvState, Observation)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = config.route[0];
    let first = config.route[1] - start;
    let robot = RobotState {
        position: start,
        heading: wrap_angle(first.y.atan2(first.x)),
        speed: 0.0,
    };
    let pedestrians = (0..config.pedestrian_count)
        .map(|_| {
            let position = spawn_point(config, robot.position, &mut rng);
            PedestrianState {
                position,
                velocity: random_velocity(config, &mut rng),
                respawn_ticks: 0,
            }
        })
        .collect();
    let mut state = EnvState {
        robot,
        pedestrians,
        step_index: 0,
        next_waypoint: 0,
        meters_traveled: 0.0,
        collision_count: 0,
        progress_arc: 0.0,
        max_deviation: 0.0,
        done: false,
        mode,
        rng,
    };
    advance_waypoint(&mut state, config);
    let obs = sense(&state, config);
    Ok((state, obs))
}

fn spawn_point(config: &WorldConfig, robot: Vec2, rng: &mut ChaCha8Rng) -> Vec2 {
    let total = route::total_length(&config.route);
    let mut candidate = config.route[0];
    for _ in 0..SPAWN_ATTEMPTS {
        let s = rng.random_range(0.0..=total);
        let offset = if config.spawn_half_width > 0.0 {
            rng.random_range(-config.spawn_half_width..=config.spawn_half_width)
        } else {
            0.0
        };
        let (p, tangent) = point_at_arc(&config.route, s);
        let normal = Vec2::new(-tangent.y, tangent.x);
        candidate = config.arena.clamp(p + normal * offset);
        if candidate.distance(robot) > config.spawn_clearance {
            break;
        }
    }
    candidate
}

fn random_velocity(config: &WorldConfig, rng: &mut ChaCha8Rng) -> Vec2 {
    let angle = rng.random_range(-PI..PI);
    let [lo, hi] = config.pedestrian_speed;
    let speed = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    Vec2::from_angle(angle) * speed
}

/// Point and unit tangent at arc length `s` along the polyline.
fn point_at_arc(route: &[Vec2], s: f64) -> (Vec2, Vec2) {
    let mut acc = 0.0;
    for w in route.windows(2) {
        let seg = w[1] - w[0];
        let len = seg.norm();
        if len > 0.0 && acc + len >= s {
            let u = (s - acc) / len;
            return (w[0] + seg * u, seg * (1.0 / len));
        }
        acc += len;
    }
    let n = route.len();
    let seg = route[n - 1] - route[n - 2];
    let len = seg.norm().max(f64::MIN_POSITIVE);
    (route[n - 1], seg * (1.0 / len))
}

fn advance_waypoint(state: &mut EnvState, config: &WorldConfig) {
    let last = config.route.len() - 1;
    while state.next_waypoint < last
        && state.robot.position.distance(config.route[state.next_waypoint]) < config.goal_radius
    {
        state.next_waypoint += 1;
    }
}

fn route_deviation(position: Vec2, config: &WorldConfig) -> f64 {
    match config.geodesic {
        GeodesicMode::Waypoint => geodesic_distance(position, &config.route),
        GeodesicMode::Polyline => polyline_distance(position, &config.route),
    }
}

/// Advances the world by one control tick.
pub fn step(state: &mut EnvState, action: Action, config: &WorldConfig) -> Result<StepOutcome> {
    if state.done {
        return Err(Error::Usage("step called on a finished episode".into()));
    }
    let action = action.clamped(config.d_m, config.m_v);

    // robot kinematics
    let before = state.robot.position;
    state.robot.heading = wrap_angle(state.robot.heading + action.d);
    state.robot.speed = action.v;
    state.robot.position =
        before + Vec2::from_angle(state.robot.heading) * (action.v * config.dt);
    state.meters_traveled += state.robot.position.distance(before);

    move_pedestrians(state, config);

    let reach = config.robot_radius + config.pedestrian_radius;
    let grace = (config.collision_grace / config.dt).ceil() as u32;
    let mut collisions = 0u32;
    for ped in state.pedestrians.iter_mut().filter(|p| p.is_active()) {
        if ped.position.distance(state.robot.position) < reach {
            collisions += 1;
            if state.mode == Mode::Eval {
                ped.respawn_ticks = grace.max(1);
            }
        }
    }
    state.collision_count += collisions;

    // route bookkeeping
    let total = route::total_length(&config.route);
    let old_progress = state.progress_arc;
    let projected = route::project_arc_length(
        state.robot.position,
        &config.route,
        state.progress_arc,
        PROJECTION_WINDOW,
    );
    state.progress_arc = state.progress_arc.max(projected).min(total);
    advance_waypoint(state, config);

    let d_geo = route_deviation(state.robot.position, config);
    state.max_deviation = state.max_deviation.max(d_geo);
    state.step_index += 1;

    let goal = *config.route.last().expect("validated route");
    let reached_goal = state.robot.position.distance(goal) < config.goal_radius;
    if reached_goal {
        state.progress_arc = total;
    }
    let events = StepEvents {
        collision: collisions > 0,
        reached_goal,
        deviated: d_geo > config.deviation_truncate,
        out_of_steps: state.step_index >= config.max_steps,
    };
    state.done = events.is_terminal(state.mode) || events.out_of_steps;

    Ok(StepOutcome {
        observation: sense(state, config),
        d_geo,
        advanced: state.progress_arc - old_progress,
        collisions,
        events,
        done: state.done,
    })
}

fn move_pedestrians(state: &mut EnvState, config: &WorldConfig) {
    let arena = config.arena;
    let robot = state.robot.position;
    for i in 0..state.pedestrians.len() {
        let ped = &mut state.pedestrians[i];
        if ped.respawn_ticks > 0 {
            ped.respawn_ticks -= 1;
            if ped.respawn_ticks == 0 {
                let position = spawn_point(config, robot, &mut state.rng);
                let velocity = random_velocity(config, &mut state.rng);
                let ped = &mut state.pedestrians[i];
                ped.position = position;
                ped.velocity = velocity;
            }
            continue;
        }
        let mut p = ped.position + ped.velocity * config.dt;
        let mut v = ped.velocity;
        if p.x < arena.min.x {
            p.x = 2.0 * arena.min.x - p.x;
            v.x = -v.x;
        } else if p.x > arena.max.x {
            p.x = 2.0 * arena.max.x - p.x;
            v.x = -v.x;
        }
        if p.y < arena.min.y {
            p.y = 2.0 * arena.min.y - p.y;
            v.y = -v.y;
        } else if p.y > arena.max.y {
            p.y = 2.0 * arena.max.y - p.y;
            v.y = -v.y;
        }
        ped.position = arena.clamp(p);
        ped.velocity = v;
    }
}

/// Fraction of the route reached so far, in [0, 1].
pub fn route_progress(state: &EnvState, route: &[Vec2]) -> f64 {
    let total = route::total_length(route);
    if total <= 0.0 {
        return 1.0;
    }
    (state.progress_arc / total).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::expert_action;

    fn straight() -> WorldConfig {
        WorldConfig::fixture(0)
    }

    #[test]
    fn same_seed_same_state() {
        let cfg = straight().with_pedestrians(30);
        let a = new_episode(&cfg, 7, Mode::Train).unwrap();
        let b = new_episode(&cfg, 7, Mode::Train).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seeds_differ() {
        let cfg = straight().with_pedestrians(5);
        let (a, _) = new_episode(&cfg, 1, Mode::Train).unwrap();
        let (b, _) = new_episode(&cfg, 2, Mode::Train).unwrap();
        assert_ne!(a.pedestrians[0].position, b.pedestrians[0].position);
    }

    #[test]
    fn no_pedestrians() {
        let (s, _) = new_episode(&straight(), 1, Mode::Eval).unwrap();
        assert!(s.pedestrians.is_empty());
    }

    #[test]
    fn spawn_respects_clearance() {
        let cfg = straight().with_pedestrians(70);
        let (s, _) = new_episode(&cfg, 11, Mode::Train).unwrap();
        for p in &s.pedestrians {
            assert!(p.position.distance(s.robot.position) > cfg.spawn_clearance);
            assert!(cfg.arena.contains(p.position));
        }
    }

    #[test]
    fn empty_route_is_config_error() {
        let mut cfg = straight();
        cfg.route.clear();
        assert!(matches!(new_episode(&cfg, 0, Mode::Train), Err(Error::Config(_))));
    }

    #[test]
    fn standing_still() {
        let (mut s, _) = new_episode(&straight(), 0, Mode::Train).unwrap();
        let before = s.robot.position;
        let out = step(&mut s, Action::STOP, &straight()).unwrap();
        assert_eq!(s.robot.position, before);
        assert_eq!(out.advanced, 0.0);
    }

    #[test]
    fn full_speed_advance() {
        let cfg = straight();
        let (mut s, _) = new_episode(&cfg, 0, Mode::Train).unwrap();
        let out = step(&mut s, Action::new(0.0, 1.5), &cfg).unwrap();
        assert!((out.advanced - 0.15).abs() < 1e-12);
        assert!((s.meters_traveled - 0.15).abs() < 1e-12);
    }

    #[test]
    fn deviation_terminates() {
        let cfg = straight();
        let (mut s, _) = new_episode(&cfg, 0, Mode::Eval).unwrap();
        s.robot.position = Vec2::new(10.0, 3.01);
        let out = step(&mut s, Action::STOP, &cfg).unwrap();
        assert!(out.events.deviated);
        assert!(out.done);
        assert!(matches!(step(&mut s, Action::STOP, &cfg), Err(Error::Usage(_))));
    }

    #[test]
    fn small_offset_does_not_terminate() {
        let cfg = straight();
        let (mut s, _) = new_episode(&cfg, 0, Mode::Eval).unwrap();
        s.robot.position = Vec2::new(10.0, 2.9);
        let out = step(&mut s, Action::STOP, &cfg).unwrap();
        assert!(!out.events.deviated && !out.done);
    }

    fn collision_setup(mode: Mode) -> (EnvState, WorldConfig) {
        let cfg = straight().with_pedestrians(1);
        let (mut s, _) = new_episode(&cfg, 0, mode).unwrap();
        s.pedestrians[0].position = s.robot.position + Vec2::new(0.5, 0.0);
        s.pedestrians[0].velocity = Vec2::ZERO;
        (s, cfg)
    }

    #[test]
    fn train_collision_terminates_same_tick() {
        let (mut s, cfg) = collision_setup(Mode::Train);
        let out = step(&mut s, Action::STOP, &cfg).unwrap();
        assert!(out.events.collision && out.done);
        assert_eq!(s.collision_count, 1);
        assert!(step(&mut s, Action::STOP, &cfg).is_err());
    }

    #[test]
    fn eval_collision_despawns_and_continues() {
        let (mut s, cfg) = collision_setup(Mode::Eval);
        let out = step(&mut s, Action::STOP, &cfg).unwrap();
        assert!(out.events.collision && !out.done);
        assert_eq!(s.pedestrians[0].respawn_ticks, 20);
        for _ in 0..19 {
            let o = step(&mut s, Action::STOP, &cfg).unwrap();
            assert!(!o.events.collision);
            assert!(!s.pedestrians[0].is_active());
        }
        step(&mut s, Action::STOP, &cfg).unwrap();
        assert!(s.pedestrians[0].is_active());
        assert!(s.pedestrians[0].position.distance(s.robot.position) > cfg.spawn_clearance);
        assert_eq!(s.collision_count, 1);
    }

    #[test]
    fn out_of_steps() {
        let mut cfg = straight();
        cfg.max_steps = 3;
        let (mut s, _) = new_episode(&cfg, 0, Mode::Train).unwrap();
        for i in 0..3 {
            let out = step(&mut s, Action::STOP, &cfg).unwrap();
            assert_eq!(out.events.out_of_steps, i == 2);
        }
        assert!(s.done);
    }

    #[test]
    fn progress_examples() {
        let corners = [Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)];
        let cfg = WorldConfig::for_route(route::densify(&corners, route::WAYPOINT_SPACING));
        let (mut s, _) = new_episode(&cfg, 0, Mode::Eval).unwrap();
        assert_eq!(route_progress(&s, &cfg.route), 0.0);
        for _ in 0..40 {
            step(&mut s, Action::new(0.0, 1.25), &cfg).unwrap();
        }
        assert!((route_progress(&s, &cfg.route) - 0.5).abs() < 1e-12);
        s.robot.position = Vec2::new(10.0, 0.0);
        s.progress_arc = 9.0;
        step(&mut s, Action::STOP, &cfg).unwrap();
        assert_eq!(route_progress(&s, &cfg.route), 1.0);
    }

    #[test]
    fn expert_completes_empty_routes() {
        for r in 0..crate::env::route::FIXTURE_COUNT {
            let cfg = WorldConfig::fixture(r);
            let (mut s, _) = new_episode(&cfg, r as u64, Mode::Train).unwrap();
            while !s.done {
                let a = expert_action(&s, &cfg);
                step(&mut s, a, &cfg).unwrap();
            }
            assert_eq!(route_progress(&s, &cfg.route), 1.0, "route {r}");
            assert!(s.step_index < cfg.max_steps);
        }
    }
}
