//! Direction estimation, sojourn time and arrival-server prediction.

use crate::config::{ArrivalMode, DirectionSign, MobilityConfig, MobilityPrior};
use crate::scenario::WorldState;

/// Kinematic snapshot of one vehicle relative to its current server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Motion {
    pub x: f64,
    pub speed: f64,
    pub heading: i8,
    pub zeta: f64,
}

/// +1 when travelling along `heading` brings the vehicle closer to `server_x`.
fn approach_sign(x: f64, server_x: f64, heading: i8) -> f64 {
    let ahead = server_x - x;
    if ahead * f64::from(heading) > 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn prior_magnitude(cfg: &MobilityConfig) -> f64 {
    match cfg.prior {
        MobilityPrior::Heading => cfg.prior_confidence,
        MobilityPrior::Markov => cfg.markov_persistence,
    }
}

/// Direction indicator of a vehicle with respect to a server.
///
/// With a known previous-epoch position and a nonzero change in horizontal
/// distance the result is ±1; otherwise it falls back to the configured
/// prior, signed by where the heading points.
pub fn direction_indicator(
    x_now: f64,
    prev_x: Option<f64>,
    server_x: f64,
    heading: i8,
    cfg: &MobilityConfig,
) -> f64 {
    let flip = match cfg.direction_sign {
        DirectionSign::Approach => 1.0,
        DirectionSign::DistanceChange => -1.0,
    };
    if let Some(prev) = prev_x {
        let dd = (x_now - server_x).abs() - (prev - server_x).abs();
        if dd != 0.0 {
            let toward = if dd < 0.0 { 1.0 } else { -1.0 };
            return flip * toward;
        }
    }
    flip * approach_sign(x_now, server_x, heading) * prior_magnitude(cfg)
}

/// Remaining time inside a coverage of radius `radius` centred at `server_x`.
/// A parked vehicle never leaves.
pub fn sojourn_time(radius: f64, zeta: f64, x: f64, server_x: f64, speed: f64) -> f64 {
    if speed <= 0.0 {
        return f64::INFINITY;
    }
    ((radius + zeta * (x - server_x).abs()) / speed).max(0.0)
}

/// Index of the edge server the vehicle is attached to after `t_move`
/// seconds, starting from server `j` (0-based, clamped to `[0, n_edges)`).
pub fn arrival_server(
    j: usize,
    n_edges: usize,
    server_x: f64,
    radius: f64,
    m: &Motion,
    t_move: f64,
    mode: ArrivalMode,
) -> usize {
    if m.speed <= 0.0 || t_move <= 0.0 || n_edges == 0 {
        return j;
    }
    let to_exit = (radius + m.zeta * (m.x - server_x).abs()).max(0.0);
    let travel = m.speed * t_move;
    if travel <= to_exit {
        return j;
    }
    let shift = match mode {
        ArrivalMode::Literal => {
            let steps = ((travel - to_exit) / m.speed).ceil().max(0.0);
            (m.zeta * steps).round()
        }
        ArrivalMode::Corrected => {
            let steps = ((travel - to_exit) / (2.0 * radius)).ceil().max(0.0);
            f64::from(m.heading) * steps
        }
    };
    (j as f64 + shift).clamp(0.0, (n_edges - 1) as f64) as usize
}

/// Move every vehicle by one epoch of travel, wrapping at the road ends.
pub fn advance_epoch(world: &mut WorldState) {
    let s = &world.config.scenario;
    let dt = s.epoch_length as f64 * s.slot_duration;
    let len = s.road_length;
    for v in &mut world.vehicles {
        let disp = f64::from(v.heading) * v.speed * dt;
        let x = (v.x + disp).rem_euclid(len);
        v.prev_x = Some(x - disp);
        v.x = x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::scenario::build_scenario;

    fn mcfg() -> MobilityConfig {
        MobilityConfig::default()
    }

    #[test]
    fn indicator_sign_cases() {
        let c = mcfg();
        // moving away from a server at 0
        assert_eq!(direction_indicator(150.0, Some(100.0), 0.0, 1, &c), -1.0);
        assert_eq!(direction_indicator(100.0, Some(150.0), 0.0, -1, &c), 1.0);
        let lit = MobilityConfig {
            direction_sign: DirectionSign::DistanceChange,
            ..c
        };
        // distance grew: Δd > 0 -> +1 under the distance-change sign
        assert_eq!(direction_indicator(150.0, Some(100.0), 0.0, 1, &lit), 1.0);
        assert_eq!(direction_indicator(100.0, Some(150.0), 0.0, -1, &lit), -1.0);
    }

    #[test]
    fn indicator_prior_at_start() {
        let c = MobilityConfig {
            prior_confidence: 0.5,
            ..mcfg()
        };
        // heading +1, server ahead
        assert_eq!(direction_indicator(100.0, None, 300.0, 1, &c), 0.5);
        assert_eq!(direction_indicator(400.0, None, 300.0, -1, &c), 0.5);
        assert_eq!(direction_indicator(400.0, None, 300.0, 1, &c), -0.5);
        // equidistant pass: Δd = 0 also uses the prior
        assert_eq!(direction_indicator(310.0, Some(290.0), 300.0, 1, &c), -0.5);
        let mk = MobilityConfig {
            prior: MobilityPrior::Markov,
            markov_persistence: 0.7,
            ..mcfg()
        };
        assert_eq!(direction_indicator(100.0, None, 300.0, 1, &mk), 0.7);
    }

    #[test]
    fn sojourn_examples() {
        assert_eq!(sojourn_time(500.0, 1.0, 1000.0, 1000.0, 10.0), 50.0);
        assert_eq!(sojourn_time(500.0, -1.0, 1500.0, 1000.0, 10.0), 0.0);
        assert_eq!(sojourn_time(500.0, 1.0, 800.0, 1000.0, 20.0), 35.0);
        assert_eq!(sojourn_time(500.0, 1.0, 800.0, 1000.0, 0.0), f64::INFINITY);
        // fractional prior can push the raw value negative; clamped
        assert_eq!(sojourn_time(100.0, -0.5, 400.0, 0.0, 10.0), 0.0);
    }

    #[test]
    fn arrival_stays_when_short() {
        let m = Motion {
            x: 1000.0,
            speed: 10.0,
            heading: 1,
            zeta: 1.0,
        };
        for mode in [ArrivalMode::Literal, ArrivalMode::Corrected] {
            assert_eq!(arrival_server(3, 10, 1000.0, 166.0, &m, 1.0, mode), 3);
        }
    }

    #[test]
    fn arrival_modes_hand_evaluated() {
        // at the centre, heading +1, leaving after 166 m
        let m = Motion {
            x: 1000.0,
            speed: 20.0,
            heading: 1,
            zeta: 1.0,
        };
        // travel 400 m: corrected ceil(234/332) = 1; literal ceil(234/20) = 12
        assert_eq!(arrival_server(3, 30, 1000.0, 166.0, &m, 20.0, ArrivalMode::Corrected), 4);
        assert_eq!(arrival_server(3, 30, 1000.0, 166.0, &m, 20.0, ArrivalMode::Literal), 15);
        // backward exit one cell
        let b = Motion {
            x: 950.0,
            speed: 10.0,
            heading: -1,
            zeta: -1.0,
        };
        // distance to exit 166 - 50 = 116 m; travel 200 m
        assert_eq!(arrival_server(3, 30, 1000.0, 166.0, &b, 20.0, ArrivalMode::Corrected), 2);
        assert_eq!(arrival_server(0, 30, 1000.0, 166.0, &b, 20.0, ArrivalMode::Corrected), 0);
    }

    #[test]
    fn epoch_advance_and_wrap() {
        let mut c = ScenarioConfig::default();
        c.scenario.vehicle_count = 1;
        let mut w = build_scenario(&c).unwrap();
        w.vehicles[0].x = 100.0;
        w.vehicles[0].speed = 10.0;
        w.vehicles[0].heading = 1;
        advance_epoch(&mut w);
        assert!((w.vehicles[0].x - 110.0).abs() < 1e-9);
        assert_eq!(w.vehicles[0].prev_x, Some(100.0));

        w.vehicles[0].x = 9995.0;
        advance_epoch(&mut w);
        assert!((w.vehicles[0].x - 5.0).abs() < 1e-9);
        assert!((w.vehicles[0].prev_x.unwrap() + 5.0).abs() < 1e-9);

        // two epochs equal one double-length epoch
        let mut a = w.clone();
        let mut b = w.clone();
        advance_epoch(&mut a);
        advance_epoch(&mut a);
        b.config.scenario.epoch_length *= 2;
        advance_epoch(&mut b);
        assert!((a.vehicles[0].x - b.vehicles[0].x).abs() < 1e-9);
    }
}
