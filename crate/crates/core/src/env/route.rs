//! Route geometry: waypoint distance, polyline projection and the shipped route fixtures.

use super::geometry::Vec2;

/// Number of shipped route fixtures.
pub const FIXTURE_COUNT: usize = 10;

/// Spacing between consecutive waypoints of the densified fixtures, meters.
pub const WAYPOINT_SPACING: f64 = 0.5;

/// Distance from `position` to the nearest waypoint of `route`.
pub fn geodesic_distance(position: Vec2, route: &[Vec2]) -> f64 {
    route
        .iter()
        .map(|w| position.distance(*w))
        .fold(f64::INFINITY, f64::min)
}

/// Distance from `position` to the nearest point of the route polyline.
pub fn polyline_distance(position: Vec2, route: &[Vec2]) -> f64 {
    if route.len() == 1 {
        return position.distance(route[0]);
    }
    route
        .windows(2)
        .map(|w| position.distance(closest_on_segment(position, w[0], w[1]).0))
        .fold(f64::INFINITY, f64::min)
}

fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> (Vec2, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let u = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * u, u)
}

/// Cumulative arc length at each waypoint; first entry 0.
pub fn cumulative_lengths(route: &[Vec2]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(route.len());
    let mut total = 0.0;
    acc.push(0.0);
    for w in route.windows(2) {
        total += w[0].distance(w[1]);
        acc.push(total);
    }
    acc
}

pub fn total_length(route: &[Vec2]) -> f64 {
    route.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Arc length of the projection of `position` onto the polyline, searching only
/// segments that overlap `[near - window, near + window]` of arc length.
pub fn project_arc_length(position: Vec2, route: &[Vec2], near: f64, window: f64) -> f64 {
    let cum = cumulative_lengths(route);
    let mut best = (f64::INFINITY, near);
    for (i, w) in route.windows(2).enumerate() {
        let (s0, s1) = (cum[i], cum[i + 1]);
        if s1 < near - window || s0 > near + window {
            continue;
        }
        let (q, u) = closest_on_segment(position, w[0], w[1]);
        let d = position.distance(q);
        if d < best.0 {
            best = (d, s0 + u * (s1 - s0));
        }
    }
    best.1
}

/// Resamples a corner list so consecutive waypoints are at most `spacing` apart.
pub fn densify(corners: &[Vec2], spacing: f64) -> Vec<Vec2> {
    let mut out = vec![corners[0]];
    for w in corners.windows(2) {
        let len = w[0].distance(w[1]);
        let n = (len / spacing).ceil().max(1.0) as usize;
        for j in 1..=n {
            let u = j as f64 / n as f64;
            out.push(w[0] + (w[1] - w[0]) * u);
        }
    }
    out
}

fn fixture_corners(index: usize) -> Vec<Vec2> {
    let pts: &[[f64; 2]] = match index {
        0 => &[[0.0, 0.0], [36.0, 0.0]],
        1 => &[[0.0, 0.0], [16.0, 0.0], [22.0, 6.0], [34.0, 6.0]],
        2 => &[[0.0, 0.0], [16.0, 0.0], [22.0, -6.0], [34.0, -6.0]],
        3 => &[[0.0, 0.0], [10.0, 4.0], [20.0, -4.0], [30.0, 0.0]],
        4 => &[[0.0, 0.0], [12.0, 0.0], [12.0, 6.0], [30.0, 6.0]],
        5 => &[[0.0, 0.0], [12.0, 0.0], [12.0, -6.0], [30.0, -6.0]],
        6 => &[[0.0, 0.0], [8.0, 3.0], [16.0, -3.0], [24.0, 3.0], [32.0, 0.0]],
        7 => &[[0.0, 0.0], [20.0, 5.0], [36.0, 5.0]],
        8 => &[[0.0, 0.0], [14.0, -6.0], [28.0, -6.0], [34.0, 0.0]],
        _ => &[[0.0, 0.0], [18.0, 0.0], [18.0, -4.0], [34.0, -4.0]],
    };
    pts.iter().map(|&p| Vec2::from(p)).collect()
}

/// Densified waypoint list of fixture route `index` (0..FIXTURE_COUNT).
pub fn fixture(index: usize) -> Vec<Vec2> {
    densify(&fixture_corners(index % FIXTURE_COUNT), WAYPOINT_SPACING)
}
