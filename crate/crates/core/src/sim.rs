//! Fixed-step closed-loop integration with terminal-time guards.
//!
//! The engine is a classical 4th-order Runge-Kutta stepper on a fixed grid.
//! Gains in this crate grow without bound near the prescribed time, so the
//! step size is tied to the horizon rather than error-controlled: fixed
//! steps give deterministic, reproducible grids, which the bound-checking
//! tests rely on. When a [`TimeHorizon`] guard is attached, sub-step times
//! are clamped to `T - eps` so dynamics are never evaluated at or past `T`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scaling::TimeHorizon;

/// Integration grid: step `dt` from `0` to `t_end` (inclusive, up to
/// floating-point slack on the last step).
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub t_end: f64,
    pub dt: f64,
}

/// Things worth remembering about a run besides the samples themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// The gain cap became active (raw `mu` exceeded `mu_cap`).
    CapEngaged,
    /// A nonnegative quantity went negative and was clamped back to zero.
    Clamp,
    /// The settling detector latched (recorded by scenario runners).
    Settled,
    /// A theorem hypothesis was found violated along the run.
    HypothesisWarning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub detail: String,
}

/// Sampled closed-loop run: a shared time grid with per-sample state,
/// control, and (optionally) adaptive-estimate vectors.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    /// Adaptive estimates per sample; empty inner vectors when a run has none.
    pub estimates: Vec<Vec<f64>>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push_event(&mut self, time: f64, kind: EventKind, detail: impl Into<String>) {
        self.events.push(Event { time, kind, detail: detail.into() });
    }

    /// Euclidean norm of the state at sample `i`.
    pub fn state_norm(&self, i: usize) -> f64 {
        self.states[i].iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Euclidean norm of the control at sample `i`.
    pub fn control_norm(&self, i: usize) -> f64 {
        self.controls[i].iter().map(|u| u * u).sum::<f64>().sqrt()
    }

    /// Largest control norm over the whole run.
    pub fn max_control(&self) -> f64 {
        (0..self.len()).map(|i| self.control_norm(i)).fold(0.0, f64::max)
    }

    /// CSV serialization: header `t,x1..xn,u1..um[,labels...]`, one row per
    /// grid point, full double precision.
    pub fn to_csv(&self, estimate_labels: &[&str]) -> String {
        let nx = self.states.first().map_or(0, Vec::len);
        let nu = self.controls.first().map_or(0, Vec::len);
        let ne = self.estimates.first().map_or(0, Vec::len);
        assert_eq!(ne, estimate_labels.len(), "one label per estimate column");

        let mut out = String::new();
        out.push('t');
        for i in 1..=nx {
            let _ = write!(out, ",x{i}");
        }
        for i in 1..=nu {
            let _ = write!(out, ",u{i}");
        }
        for label in estimate_labels {
            let _ = write!(out, ",{label}");
        }
        out.push('\n');
        for k in 0..self.len() {
            let _ = write!(out, "{:.16e}", self.times[k]);
            for v in &self.states[k] {
                let _ = write!(out, ",{v:.16e}");
            }
            for v in &self.controls[k] {
                let _ = write!(out, ",{v:.16e}");
            }
            for v in &self.estimates[k] {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

/// Settling statistics extracted from a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettlingReport {
    pub threshold: f64,
    /// First grid time after which the state norm stays below `threshold`
    /// through the end of the horizon, if any.
    pub settle_time: Option<f64>,
    pub max_control: f64,
    pub terminal_norm: f64,
}

/// Integrate `dx/dt = f(t, x)` with RK4 on a fixed grid.
///
/// `record` is evaluated at every accepted grid point and stored as the
/// control row (pass a closure returning an empty vector for open-loop
/// runs). With a guard attached, `t_end` must not exceed `T - eps` and all
/// stage times are clamped below it.
pub fn integrate<F, R>(
    mut f: F,
    record: R,
    x0: &[f64],
    grid: Grid,
    guard: Option<&TimeHorizon>,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    R: Fn(f64, &[f64]) -> Vec<f64>,
{
    if !(grid.dt > 0.0) || !grid.dt.is_finite() {
        return Err(Error::Validation(format!("dt must be positive, got {}", grid.dt)));
    }
    if !(grid.t_end >= 0.0) || !grid.t_end.is_finite() {
        return Err(Error::Validation(format!("t_end must be >= 0, got {}", grid.t_end)));
    }
    if let Some(h) = guard {
        if grid.t_end > h.t_stop() + 1e-12 * h.t_final() {
            return Err(Error::Validation(format!(
                "t_end = {} exceeds the guarded stop time T - eps = {}",
                grid.t_end,
                h.t_stop()
            )));
        }
    }
    let clamp_t = |t: f64| guard.map_or(t, |h| t.min(h.t_stop()));

    let steps = (grid.t_end / grid.dt).round() as usize;
    let mut traj = Trajectory::default();
    let mut x = x0.to_vec();
    let mut cap_noted = false;

    let mut check = |t: f64, dx: &[f64]| -> Result<()> {
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite derivative at t = {t:.9e}; aborting integration"
            )));
        }
        Ok(())
    };

    for k in 0..=steps {
        let t = clamp_t(k as f64 * grid.dt);
        traj.times.push(t);
        traj.states.push(x.clone());
        traj.controls.push(record(t, &x));
        traj.estimates.push(Vec::new());
        if let Some(h) = guard {
            if !cap_noted && h.cap_engaged(t) {
                traj.push_event(t, EventKind::CapEngaged, "gain cap active");
                cap_noted = true;
            }
        }
        if k == steps {
            break;
        }

        let dt = grid.dt;
        let th = clamp_t(t + 0.5 * dt);
        let tf = clamp_t(t + dt);

        let k1 = f(t, &x)?;
        check(t, &k1)?;
        let x1: Vec<f64> = x.iter().zip(&k1).map(|(xi, ki)| xi + 0.5 * dt * ki).collect();
        let k2 = f(th, &x1)?;
        check(th, &k2)?;
        let x2: Vec<f64> = x.iter().zip(&k2).map(|(xi, ki)| xi + 0.5 * dt * ki).collect();
        let k3 = f(th, &x2)?;
        check(th, &k3)?;
        let x3: Vec<f64> = x.iter().zip(&k3).map(|(xi, ki)| xi + dt * ki).collect();
        let k4 = f(tf, &x3)?;
        check(tf, &k4)?;

        for i in 0..x.len() {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite state after step to t = {tf:.9e}; aborting integration"
            )));
        }
    }
    Ok(traj)
}

/// Settling detector: the first grid time after which the state norm stays
/// below `threshold` through the end of the horizon.
///
/// The stay-below rule avoids crediting transient zero crossings of
/// oscillatory trajectories.
pub fn settling(traj: &Trajectory, threshold: f64) -> Result<SettlingReport> {
    if traj.is_empty() {
        return Err(Error::Validation("settling needs a non-empty trajectory".into()));
    }
    let n = traj.len();
    let mut settle_time = None;
    for k in (0..n).rev() {
        if traj.state_norm(k) <= threshold {
            settle_time = Some(traj.times[k]);
        } else {
            break;
        }
    }
    Ok(SettlingReport {
        threshold,
        settle_time,
        max_control: traj.max_control(),
        terminal_norm: traj.state_norm(n - 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn no_record(_: f64, _: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    #[test]
    fn constant_dynamics_stay_put() {
        let traj = integrate(
            |_, _| Ok(vec![0.0]),
            no_record,
            &[1.0],
            Grid { t_end: 1.0, dt: 0.01 },
            None,
        )
        .unwrap();
        assert!(traj.states.iter().all(|s| s[0] == 1.0));
        assert_eq!(traj.len(), 101);
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let traj = integrate(
            |_, x| Ok(vec![-x[0]]),
            no_record,
            &[1.0],
            Grid { t_end: 1.0, dt: 1e-3 },
            None,
        )
        .unwrap();
        let end = traj.states.last().unwrap()[0];
        assert!((end - (-1.0f64).exp()).abs() <= 1e-9);
    }

    #[test]
    fn linear_time_varying_gain_matches_closed_form() {
        // dx/dt = -k x / (T - t) with k = 2, T = 1 has solution (1 - t)^2.
        let h = TimeHorizon::new(1.0, 1e-4, f64::INFINITY).unwrap();
        let traj = integrate(
            |t, x| Ok(vec![-2.0 * x[0] / (1.0 - t)]),
            no_record,
            &[1.0],
            Grid { t_end: h.t_stop(), dt: 1e-4 },
            Some(&h),
        )
        .unwrap();
        for (k, &t) in traj.times.iter().enumerate() {
            let want = (1.0 - t) * (1.0 - t);
            assert!(
                (traj.states[k][0] - want).abs() <= 1e-6,
                "t = {t}: got {}, want {want}",
                traj.states[k][0]
            );
        }
    }

    #[test]
    fn guard_rejects_t_end_past_stop() {
        let h = TimeHorizon::with_defaults(1.0).unwrap();
        let r = integrate(
            |_, x| Ok(vec![-x[0]]),
            no_record,
            &[1.0],
            Grid { t_end: 1.0, dt: 1e-3 },
            Some(&h),
        );
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn guarded_run_never_evaluates_past_stop() {
        let h = TimeHorizon::with_defaults(1.0).unwrap();
        let stop = h.t_stop();
        integrate(
            |t, x| {
                assert!(t <= stop + 1e-15);
                Ok(vec![-x[0] / (1.0 - t)])
            },
            no_record,
            &[1.0],
            Grid { t_end: stop, dt: stop / 1000.0 },
            Some(&h),
        )
        .unwrap();
    }

    #[test]
    fn non_finite_derivative_aborts_with_time() {
        let r = integrate(
            |t, _| Ok(vec![if t > 0.5 { f64::NAN } else { 1.0 }]),
            no_record,
            &[0.0],
            Grid { t_end: 1.0, dt: 0.01 },
            None,
        );
        match r {
            Err(Error::Numeric(msg)) => assert!(msg.contains("t =")),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn settling_examples() {
        // All-zero trajectory settles at the first grid point.
        let traj = integrate(
            |_, _| Ok(vec![0.0]),
            no_record,
            &[0.0],
            Grid { t_end: 1.0, dt: 0.1 },
            None,
        )
        .unwrap();
        let rep = settling(&traj, 1e-3).unwrap();
        assert_eq!(rep.settle_time, Some(0.0));

        // x = e^-t crosses e^-5 at t = 5.
        let traj = integrate(
            |_, x| Ok(vec![-x[0]]),
            no_record,
            &[1.0],
            Grid { t_end: 10.0, dt: 1e-3 },
            None,
        )
        .unwrap();
        let rep = settling(&traj, (-5.0f64).exp()).unwrap();
        let t = rep.settle_time.unwrap();
        assert!((t - 5.0).abs() <= 1e-3 + 1e-9, "settle at {t}");

        // Diverging trajectory never settles.
        let traj = integrate(
            |_, x| Ok(vec![x[0]]),
            no_record,
            &[1.0],
            Grid { t_end: 3.0, dt: 1e-2 },
            None,
        )
        .unwrap();
        assert_eq!(settling(&traj, 1e-3).unwrap().settle_time, None);
    }

    #[test]
    fn rk4_order_check() {
        // Terminal error on dx/dt = -x contracts at least 8x per halving.
        let run = |dt: f64| {
            let traj = integrate(
                |_, x| Ok(vec![-x[0]]),
                no_record,
                &[1.0],
                Grid { t_end: 1.0, dt },
                None,
            )
            .unwrap();
            (traj.states.last().unwrap()[0] - (-1.0f64).exp()).abs()
        };
        let mut prev = run(0.04);
        for k in 1..=3 {
            let err = run(0.04 / 2.0f64.powi(k));
            assert!(err * 8.0 <= prev, "halving {k}: {prev:.3e} -> {err:.3e}");
            prev = err;
        }
    }

    #[test]
    fn csv_shape_and_header() {
        let traj = integrate(
            |_, x| Ok(vec![-x[0], -2.0 * x[1]]),
            |_, x| vec![x[0] + x[1]],
            &[1.0, 2.0],
            Grid { t_end: 0.1, dt: 0.05 },
            None,
        )
        .unwrap();
        let csv = traj.to_csv(&[]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x1,x2,u1"));
        assert_eq!(csv.lines().count(), 1 + traj.len());
    }

    #[test]
    fn events_are_monotone_in_time() {
        let mut traj = Trajectory::default();
        traj.push_event(0.1, EventKind::Clamp, "a");
        traj.push_event(0.5, EventKind::Settled, "b");
        assert!(traj.events.windows(2).all(|w| w[0].time <= w[1].time));
    }
}
