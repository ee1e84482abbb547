//! Service delays and execution energy for local, edge and cloud execution.

use crate::config::BackhaulParams;
use crate::scenario::TaskSpec;

/// `C_req / f`; a zero-capacity core never finishes.
pub fn local_delay(task: &TaskSpec, f: f64) -> f64 {
    compute_delay(task.c_req, f)
}

pub fn compute_delay(c_req: f64, f: f64) -> f64 {
    if f <= 0.0 {
        f64::INFINITY
    } else {
        c_req / f
    }
}

pub fn upload_delay(d_in: f64, rate: f64) -> f64 {
    if rate <= 0.0 {
        f64::INFINITY
    } else {
        d_in / rate
    }
}

/// Task forwarded from the attached server to another edge server.
pub fn task_handover_delay(d_in: f64, b: &BackhaulParams) -> f64 {
    2.0 * d_in / b.fiber_rate
}

/// Result forwarded to the server the vehicle will be attached to.
pub fn result_handover_delay(d_out: f64, b: &BackhaulParams) -> f64 {
    2.0 * d_out / b.fiber_rate
}

pub fn cloud_backhaul_delay(d_in: f64, d_out: f64, b: &BackhaulParams) -> f64 {
    (d_in + d_out) / b.cloud_rate
}

/// Which handover legs an edge placement incurs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRoute {
    pub migrated: bool,
    pub result_moved: bool,
}

pub fn edge_delay(task: &TaskSpec, rate: f64, f: f64, route: EdgeRoute, b: &BackhaulParams) -> f64 {
    let mut t = upload_delay(task.d_in, rate) + compute_delay(task.c_req, f);
    if route.migrated {
        t += task_handover_delay(task.d_in, b);
    }
    if route.result_moved {
        t += result_handover_delay(task.d_out, b);
    }
    t
}

pub fn cloud_delay(task: &TaskSpec, rate: f64, f: f64, b: &BackhaulParams) -> f64 {
    upload_delay(task.d_in, rate)
        + compute_delay(task.c_req, f)
        + cloud_backhaul_delay(task.d_in, task.d_out, b)
}

/// `α · f^(τ-1) · C_req`
pub fn exec_energy(f: f64, c_req: f64, alpha: f64, tau: f64) -> f64 {
    alpha * f.powf(tau - 1.0) * c_req
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(d_in: f64, intensity: f64, d_out: f64) -> TaskSpec {
        TaskSpec::new(0, 0, 0, d_in, d_out, intensity, 5.0).unwrap()
    }

    #[test]
    fn local_examples() {
        let t = task(1e6, 1e3, 1.0);
        assert_eq!(local_delay(&t, 1e9), 1.0);
        assert_eq!(local_delay(&t, 2e9), 0.5);
        assert_eq!(local_delay(&t, 0.0), f64::INFINITY);
        let kb400 = task(400.0 * 8000.0, 500.0, 1.0);
        assert!((local_delay(&kb400, 1e9) - 1.6).abs() < 1e-12);
    }

    #[test]
    fn edge_terms() {
        let b = BackhaulParams::default();
        let t = task(8e6, 1000.0, 8000.0);
        let (r, f) = (2e7, 3e9);
        let base = edge_delay(&t, r, f, EdgeRoute { migrated: false, result_moved: false }, &b);
        assert!((base - (8e6 / r + 8e9 / f)).abs() < 1e-12);
        let mig = edge_delay(&t, r, f, EdgeRoute { migrated: true, result_moved: false }, &b);
        assert!((mig - base - 2.0 * 8e6 / 4e9).abs() < 1e-12);
        let full = edge_delay(&t, r, f, EdgeRoute { migrated: true, result_moved: true }, &b);
        let hand = 8e6 / r + 2.0 * 8e6 / 4e9 + 8e9 / f + 2.0 * 8000.0 / 4e9;
        assert!((full - hand).abs() < 1e-12);
    }

    #[test]
    fn cloud_terms() {
        let b = BackhaulParams::default();
        let t = task(400.0 * 8000.0, 1000.0, 8000.0);
        let back = cloud_backhaul_delay(t.d_in, t.d_out, &b);
        assert!((back - (0.032 + 8e-5)).abs() < 1e-12);
        let inf = BackhaulParams {
            cloud_rate: f64::INFINITY,
            ..b.clone()
        };
        let plain = EdgeRoute { migrated: false, result_moved: false };
        assert_eq!(cloud_delay(&t, 1e7, 2e9, &inf), edge_delay(&t, 1e7, 2e9, plain, &b));
        assert!((cloud_backhaul_delay(t.d_in, 0.0, &b) - t.d_in / 1e8).abs() < 1e-15);
    }

    #[test]
    fn energy_examples() {
        assert_eq!(exec_energy(1e9, 1e9, 0.0, 3.0), 0.0);
        let e1 = exec_energy(1e9, 1e9, 7.8e-21, 3.0);
        assert!((e1 - 7.8e6).abs() / 7.8e6 < 1e-12);
        let e2 = exec_energy(2e9, 1e9, 7.8e-21, 3.0);
        assert!((e2 / e1 - 4.0).abs() < 1e-12);
    }
}
