//! Per-decision reward arithmetic.
//!
//! The routing reward is the product of four normalized components raised to
//! `alpha`, minus a collision penalty:
//!
//! ```text
//! r = (r_geo * r_speed * r_energy * r_action)^alpha - r_collision
//! r_geo    = 1 - tanh(d_geo)
//! r_speed  = v / m_v
//! r_energy = 1 - e / m_e
//! r_action = 1(|r_speed| < eps) * 1(|d / d_m| < eps)
//! ```
//!
//! The additive baseline drops `r_action` and sums weighted components.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which scalar drives router training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    #[default]
    Multiplicative,
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdditiveWeights {
    pub geo: f64,
    pub speed: f64,
    pub energy: f64,
    pub collision: f64,
}

impl Default for AdditiveWeights {
    fn default() -> Self {
        AdditiveWeights {
            geo: 0.25,
            speed: 0.25,
            energy: 0.25,
            collision: 1.0,
        }
    }
}

/// Component switches for ablations; a disabled multiplicative term counts as 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComponentSwitches {
    pub geo: bool,
    pub speed: bool,
    pub energy: bool,
    pub action: bool,
    pub collision: bool,
}

impl Default for ComponentSwitches {
    fn default() -> Self {
        ComponentSwitches {
            geo: true,
            speed: true,
            energy: true,
            action: true,
            collision: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub m_v: f64,
    pub d_m: f64,
    /// Maximum energy of one step, J. `None` derives it from the energy model.
    pub m_e: Option<f64>,
    pub collision_penalty: f64,
    pub additive_weights: AdditiveWeights,
    pub components: ComponentSwitches,
    pub kind: RewardKind,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            alpha: 0.25,
            epsilon: 0.97,
            m_v: 1.5,
            d_m: 0.3,
            m_e: None,
            collision_penalty: 10.0,
            additive_weights: AdditiveWeights::default(),
            components: ComponentSwitches::default(),
            kind: RewardKind::Multiplicative,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail("alpha must be in (0, 1]");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail("epsilon must be in (0, 1)");
        }
        if !(self.collision_penalty > 1.0) {
            return fail("collision_penalty must exceed 1");
        }
        if !(self.m_v > 0.0 && self.d_m > 0.0) {
            return fail("m_v and d_m must be positive");
        }
        if matches!(self.m_e, Some(m) if !(m > 0.0)) {
            return fail("m_e must be positive");
        }
        Ok(())
    }
}

/// Raw quantities a decision's reward is computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInputs {
    pub d_geo: f64,
    /// Executed speed, m/s.
    pub v: f64,
    /// Executed heading change, rad.
    pub d: f64,
    /// Energy charged for the decision, J.
    pub energy: f64,
    /// Maximum per-step energy the energy term normalizes by, J.
    pub m_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_geo: f64,
    pub r_speed: f64,
    pub r_energy: f64,
    pub r_action: f64,
    pub r_collision_flag: f64,
    /// Multiplicative total.
    pub total: f64,
    /// Additive-baseline total.
    pub additive: f64,
}

impl RewardBreakdown {
    pub fn scalar(&self, kind: RewardKind) -> f64 {
        match kind {
            RewardKind::Multiplicative => self.total,
            RewardKind::Additive => self.additive,
        }
    }
}

/// Tolerance for inputs that are nominally at a bound.
const BOUND_SLACK: f64 = 1e-9;

pub fn geo_component(d_geo: f64) -> Result<f64> {
    if !(d_geo >= 0.0) {
        return Err(Error::InvalidInput(format!("d_geo must be >= 0, got {d_geo}")));
    }
    Ok(1.0 - d_geo.tanh())
}

pub fn speed_component(v: f64, m_v: f64) -> Result<f64> {
    if !(v >= -BOUND_SLACK && v <= m_v + BOUND_SLACK) {
        return Err(Error::InvalidInput(format!("speed {v} outside [0, {m_v}]")));
    }
    Ok((v / m_v).clamp(0.0, 1.0))
}

pub fn energy_component(e_step: f64, m_e: f64) -> Result<f64> {
    if !(e_step >= 0.0) || e_step > m_e * (1.0 + BOUND_SLACK) {
        return Err(Error::InvalidInput(format!("step energy {e_step} outside [0, {m_e}]")));
    }
    Ok((1.0 - e_step / m_e).clamp(0.0, 1.0))
}

/// 1 when both the normalized speed and heading change stay strictly below `epsilon`.
pub fn action_clip(r_speed: f64, d: f64, d_m: f64, epsilon: f64) -> f64 {
    if r_speed.abs() < epsilon && (d / d_m).abs() < epsilon {
        1.0
    } else {
        0.0
    }
}

/// Multiplicative reward plus the additive baseline for the same inputs.
pub fn compose(inputs: &RewardInputs, collision: bool, config: &RewardConfig) -> Result<RewardBreakdown> {
    let r_geo = geo_component(inputs.d_geo)?;
    let r_speed = speed_component(inputs.v, config.m_v)?;
    let r_energy = energy_component(inputs.energy, inputs.m_e)?;
    let r_action = action_clip(r_speed, inputs.d, config.d_m, config.epsilon);
    let sw = &config.components;
    let pick = |on: bool, v: f64| if on { v } else { 1.0 };
    let product = pick(sw.geo, r_geo) * pick(sw.speed, r_speed) * pick(sw.energy, r_energy)
        * pick(sw.action, r_action);
    let flag = if collision && sw.collision { 1.0 } else { 0.0 };
    let mut breakdown = RewardBreakdown {
        r_geo,
        r_speed,
        r_energy,
        r_action,
        r_collision_flag: flag,
        total: product.powf(config.alpha) - flag * config.collision_penalty,
        additive: 0.0,
    };
    breakdown.additive = compose_additive(&breakdown, collision, config);
    Ok(breakdown)
}

/// Weighted sum of geodesic, speed and energy terms minus the weighted collision penalty.
pub fn compose_additive(components: &RewardBreakdown, collision: bool, config: &RewardConfig) -> f64 {
    let w = &config.additive_weights;
    let sw = &config.components;
    let on = |b: bool| if b { 1.0 } else { 0.0 };
    let hit = if collision && sw.collision { 1.0 } else { 0.0 };
    on(sw.geo) * w.geo * components.r_geo
        + on(sw.speed) * w.speed * components.r_speed
        + on(sw.energy) * w.energy * components.r_energy
        - w.collision * config.collision_penalty * hit
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(d_geo: f64, v: f64, d: f64, energy: f64) -> RewardInputs {
        RewardInputs { d_geo, v, d, energy, m_e: 1.5 }
    }

    #[test]
    fn geo_values() {
        assert_eq!(geo_component(0.0).unwrap(), 1.0);
        assert!((geo_component(1.0).unwrap() - 0.23840584).abs() < 1e-8);
        assert!(geo_component(-0.1).is_err());
    }

    #[test]
    fn speed_values() {
        assert_eq!(speed_component(0.0, 1.5).unwrap(), 0.0);
        assert_eq!(speed_component(1.5, 1.5).unwrap(), 1.0);
        assert_eq!(speed_component(0.75, 1.5).unwrap(), 0.5);
        assert!(speed_component(1.6, 1.5).is_err());
    }

    #[test]
    fn energy_values() {
        assert_eq!(energy_component(0.0, 1.5).unwrap(), 1.0);
        assert_eq!(energy_component(1.5, 1.5).unwrap(), 0.0);
        assert!((energy_component(0.15, 1.5).unwrap() - 0.9).abs() < 1e-15);
        assert!(energy_component(1.6, 1.5).is_err());
    }

    #[test]
    fn action_clip_values() {
        assert_eq!(action_clip(1.0, 0.0, 0.3, 0.97), 0.0);
        assert_eq!(action_clip(0.8, 0.15, 0.3, 0.97), 1.0);
        assert_eq!(action_clip(0.5, 0.3, 0.3, 0.97), 0.0);
    }

    #[test]
    fn compose_examples() {
        let cfg = RewardConfig::default();
        let b = compose(&inputs(0.0, 1.2, 0.0, 0.0), false, &cfg).unwrap();
        assert!((b.total - 0.8f64.powf(0.25)).abs() < 1e-15);
        // (1, 0.8, 0.9, 1) -> 0.72^0.25
        let b = compose(&inputs(0.0, 1.2, 0.0, 0.15), false, &cfg).unwrap();
        assert!((b.total - 0.92116).abs() < 1e-5);
        let b = compose(&inputs(0.0, 0.0, 0.0, 0.0), false, &cfg).unwrap();
        assert_eq!(b.total, 0.0);
        let b = compose(&inputs(0.0, 1.2, 0.0, 0.15), true, &cfg).unwrap();
        assert!((b.total - (0.72f64.powf(0.25) - 10.0)).abs() < 1e-12);
    }

    #[test]
    fn all_ones_compose_to_one() {
        let mut cfg = RewardConfig::default();
        cfg.components.speed = false;
        cfg.components.action = false;
        let b = compose(&inputs(0.0, 0.0, 0.0, 0.0), false, &cfg).unwrap();
        assert_eq!(b.total, 1.0);
    }

    #[test]
    fn additive_examples() {
        let cfg = RewardConfig::default();
        let zero = RewardBreakdown::default();
        assert_eq!(compose_additive(&zero, false, &cfg), 0.0);
        let ones = RewardBreakdown { r_geo: 1.0, r_speed: 1.0, r_energy: 1.0, ..Default::default() };
        assert_eq!(compose_additive(&ones, false, &cfg), 0.75);
        assert_eq!(compose_additive(&ones, true, &cfg), 0.75 - 10.0);
    }

    proptest! {
        #[test]
        fn additive_matches_hand_sum(g in 0.0f64..1.0, s in 0.0f64..1.0, e in 0.0f64..1.0,
                                     wg in 0.0f64..1.0, ws in 0.0f64..1.0, we in 0.0f64..1.0,
                                     wc in 0.0f64..2.0, hit: bool) {
            let cfg = RewardConfig {
                additive_weights: AdditiveWeights { geo: wg, speed: ws, energy: we, collision: wc },
                ..Default::default()
            };
            let b = RewardBreakdown { r_geo: g, r_speed: s, r_energy: e, ..Default::default() };
            let mut expected = wg * g + ws * s + we * e;
            if hit { expected -= wc * 10.0; }
            prop_assert!((compose_additive(&b, hit, &cfg) - expected).abs() < 1e-12);
        }

        #[test]
        fn geo_is_decreasing(a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(geo_component(lo).unwrap() >= geo_component(hi).unwrap());
        }

        #[test]
        fn total_monotone_in_components(d_geo in 0.0f64..3.0, v in 0.0f64..1.5, d in -0.3f64..0.3,
                                        e in 0.0f64..1.5, dv in 0.0f64..0.5) {
            let cfg = RewardConfig::default();
            let base = compose(&inputs(d_geo, v, d, e), false, &cfg).unwrap().total;
            let closer = compose(&inputs((d_geo - dv).max(0.0), v, d, e), false, &cfg).unwrap().total;
            let cheaper = compose(&inputs(d_geo, v, d, (e - dv).max(0.0)), false, &cfg).unwrap().total;
            prop_assert!(closer >= base && cheaper >= base);
            let v2 = (v + dv).min(1.5);
            // speed raises the product until it crosses the clip threshold
            if v2 / 1.5 < cfg.epsilon {
                let faster = compose(&inputs(d_geo, v2, d, e), false, &cfg).unwrap().total;
                prop_assert!(faster >= base);
            }
        }
    }
}
