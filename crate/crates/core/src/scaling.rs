//! Time-varying gain kernels shared by every deadline-constrained controller.
//!
//! Two equivalent devices convert asymptotic convergence into convergence at
//! a user-chosen terminal time `T`:
//!
//! * **State scaling** multiplies the state by the blow-up function
//!   `mu(t) = T / (T - t)`; any design that keeps `mu * x` bounded forces
//!   `x -> 0` as `t -> T`.
//! * **Time scaling** remaps the clock through `tau = ln(T / (T - t))`,
//!   sending `[0, T)` onto `[0, inf)`; exponential decay in `tau` becomes
//!   terminal-time convergence in `t`. Its rate `a'(t) = 1 / (T - t)` is the
//!   gain every controller in this crate multiplies into its feedback term.
//!
//! Both kernels diverge as `t -> T`, so practical runs stop at `T - eps` and
//! cap the gains. The cap applies identically to `mu` and `a'` so the two
//! scaling styles saturate consistently. All evaluations are pure functions
//! of `(t, TimeHorizon)` and can be called out of order during integration
//! sub-steps.

use crate::error::{Error, Result};

/// Prescribed terminal time plus the singularity-handling policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeHorizon {
    /// Terminal time `T > 0` (seconds).
    t_final: f64,
    /// Stop margin `eps`: simulations halt at `T - eps`, `0 < eps < T`.
    stop_margin: f64,
    /// Upper bound applied to `mu` and `a'`, `>= 1` (may be infinite).
    mu_cap: f64,
}

/// Default stop margin as a fraction of `T`.
pub const DEFAULT_MARGIN_FRACTION: f64 = 1e-4;
/// Default gain cap.
pub const DEFAULT_MU_CAP: f64 = 1e6;

impl TimeHorizon {
    pub fn new(t_final: f64, stop_margin: f64, mu_cap: f64) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::Validation(format!(
                "horizon.T must be positive and finite, got {t_final}"
            )));
        }
        if !(stop_margin > 0.0 && stop_margin < t_final) {
            return Err(Error::Validation(format!(
                "horizon.epsilon must satisfy 0 < epsilon < T, got {stop_margin} (T = {t_final})"
            )));
        }
        if !(mu_cap >= 1.0) {
            return Err(Error::Validation(format!(
                "horizon.mu_cap must be >= 1, got {mu_cap}"
            )));
        }
        Ok(Self { t_final, stop_margin, mu_cap })
    }

    /// Horizon with the default margin `1e-4 * T` and cap `1e6`.
    pub fn with_defaults(t_final: f64) -> Result<Self> {
        Self::new(t_final, DEFAULT_MARGIN_FRACTION * t_final, DEFAULT_MU_CAP)
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn stop_margin(&self) -> f64 {
        self.stop_margin
    }

    pub fn mu_cap(&self) -> f64 {
        self.mu_cap
    }

    /// Last admissible simulation time, `T - eps`.
    pub fn t_stop(&self) -> f64 {
        self.t_final - self.stop_margin
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if !t.is_finite() || t < 0.0 || t >= self.t_final {
            return Err(Error::Domain(format!(
                "time {t} outside [0, T) with T = {}",
                self.t_final
            )));
        }
        Ok(())
    }

    /// State-scaling gain `mu(t) = min(T / (T - t), mu_cap)`.
    ///
    /// Monotonically nondecreasing with `mu(0) = 1`.
    pub fn mu(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok((self.t_final / (self.t_final - t)).min(self.mu_cap))
    }

    /// The combination `mu_dot * mu^-2`, which is identically `1 / T`.
    pub fn mu_dot_over_mu_sq(&self) -> f64 {
        1.0 / self.t_final
    }

    /// Time-scaling map: returns `(tau, a')` with `tau = ln(T / (T - t))`
    /// and `a'(t) = 1 / (T - t)` capped at `mu_cap`.
    ///
    /// `tau` is strictly increasing, `tau(0) = 0`, and `tau -> inf` as
    /// `t -> T`; the inverse is `t = T (1 - e^-tau)`.
    pub fn time_scale(&self, t: f64) -> Result<(f64, f64)> {
        self.check_domain(t)?;
        let tau = (self.t_final / (self.t_final - t)).ln();
        let a_prime = (1.0 / (self.t_final - t)).min(self.mu_cap);
        Ok((tau, a_prime))
    }

    /// Convenience accessor for the capped time-scaling rate `a'(t)`.
    pub fn a_prime(&self, t: f64) -> Result<f64> {
        Ok(self.time_scale(t)?.1)
    }

    /// True when the raw (uncapped) gain at `t` exceeds the cap.
    pub fn cap_engaged(&self, t: f64) -> bool {
        t >= 0.0 && t < self.t_final && self.t_final / (self.t_final - t) >= self.mu_cap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn horizon(t: f64, cap: f64) -> TimeHorizon {
        TimeHorizon::new(t, 1e-4 * t, cap).unwrap()
    }

    #[test]
    fn mu_examples() {
        let h = horizon(1.0, 1e6);
        assert_eq!(h.mu(0.0).unwrap(), 1.0);
        assert_eq!(h.mu(0.5).unwrap(), 2.0);
        // Close enough to T that the raw gain exceeds the cap.
        assert_eq!(h.mu(1.0 - 1e-9).unwrap(), 1e6);
        assert!(h.cap_engaged(1.0 - 1e-9));
    }

    #[test]
    fn mu_domain_errors() {
        let h = horizon(1.0, 1e6);
        assert!(matches!(h.mu(1.0), Err(Error::Domain(_))));
        assert!(matches!(h.mu(-0.1), Err(Error::Domain(_))));
        assert!(matches!(h.mu(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn mu_dot_over_mu_sq_is_one_over_t() {
        assert_eq!(horizon(1.0, 1e6).mu_dot_over_mu_sq(), 1.0);
        assert_eq!(horizon(2.0, 1e6).mu_dot_over_mu_sq(), 0.5);
        assert_eq!(horizon(10.0, 1e6).mu_dot_over_mu_sq(), 0.1);
    }

    #[test]
    fn time_scale_examples() {
        let h = horizon(1.0, 1e6);
        let (tau, ap) = h.time_scale(0.0).unwrap();
        assert_eq!(tau, 0.0);
        assert_eq!(ap, 1.0);

        // Invert t = T (1 - e^-tau) at tau = 1.
        let (tau, ap) = h.time_scale(1.0 - (-1.0f64).exp()).unwrap();
        assert_relative_eq!(tau, 1.0, max_relative = 1e-12);
        assert_relative_eq!(ap, 1.0f64.exp(), max_relative = 1e-12);

        let h2 = horizon(2.0, 1e6);
        let (tau, ap) = h2.time_scale(0.5).unwrap();
        assert_relative_eq!(tau, (4.0f64 / 3.0).ln(), max_relative = 1e-12);
        assert_relative_eq!(ap, 2.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn horizon_validation() {
        assert!(TimeHorizon::new(0.0, 0.1, 1e6).is_err());
        assert!(TimeHorizon::new(1.0, 0.0, 1e6).is_err());
        assert!(TimeHorizon::new(1.0, 1.5, 1e6).is_err());
        assert!(TimeHorizon::new(1.0, 0.1, 0.5).is_err());
        assert!(TimeHorizon::new(1.0, 0.1, f64::INFINITY).is_ok());
    }

    #[test]
    fn gains_finite_and_capped_up_to_stop() {
        let h = TimeHorizon::new(1.0, 1e-8, 1e6).unwrap();
        for i in 0..=1000 {
            let t = h.t_stop() * i as f64 / 1000.0;
            let m = h.mu(t).unwrap();
            let (_, ap) = h.time_scale(t).unwrap();
            assert!(m.is_finite() && m <= h.mu_cap());
            assert!(ap.is_finite() && ap <= h.mu_cap());
        }
    }

    #[test]
    fn literal_identities_below_cap() {
        // a'(t) = 1/(T-t) and mu(t) = T * a'(t) wherever the cap is inactive.
        let h = horizon(2.5, 1e6);
        for i in 0..100 {
            let t = h.t_stop() * i as f64 / 100.0;
            if !h.cap_engaged(t) {
                let (_, ap) = h.time_scale(t).unwrap();
                assert_relative_eq!(ap, 1.0 / (2.5 - t), max_relative = 1e-14);
                assert_relative_eq!(h.mu(t).unwrap(), 2.5 * ap, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn cap_neutrality_with_cap_disabled() {
        let h = TimeHorizon::new(1.0, 1e-4, f64::INFINITY).unwrap();
        for i in 0..=100 {
            let t = h.t_stop() * i as f64 / 100.0;
            assert_relative_eq!(h.mu(t).unwrap(), 1.0 / (1.0 - t), max_relative = 1e-15);
            assert_relative_eq!(h.a_prime(t).unwrap(), 1.0 / (1.0 - t), max_relative = 1e-15);
        }
    }

    proptest! {
        #[test]
        fn mu_and_tau_are_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let h = horizon(1.0, 1e6);
            let (t1, t2) = if a <= b { (a, b) } else { (b, a) };
            let (t1, t2) = (t1 * h.t_stop(), t2 * h.t_stop());
            prop_assert!(h.mu(t1).unwrap() <= h.mu(t2).unwrap());
            if t1 < t2 {
                prop_assert!(h.time_scale(t1).unwrap().0 < h.time_scale(t2).unwrap().0);
            }
        }
    }
}
