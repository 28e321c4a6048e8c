//! Closed-form and ODE limit objects: the square-root fitness curve, its
//! epistatic power-law generalization, the logistic middle stage of a
//! sweep, and a small adaptive Runge-Kutta integrator to cross-check the
//! closed forms against their defining differential equations.

use crate::error::{Error, Result};
use crate::sweep::c_of_gamma;

/// Parameters shared by the limit curves; `q` is the epistasis exponent
/// (`q = 0` recovers the base model) and the fitness clock runs on the
/// `rho^{-2} mu^{-1}`-days scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCurveParams {
    pub gamma: f64,
    pub r0: f64,
    pub q: f64,
}

impl LimitCurveParams {
    pub fn new(gamma: f64, r0: f64, q: f64) -> Result<Self> {
        c_of_gamma(gamma)?;
        if !(r0 > 0.0) {
            return Err(Error::invalid(format!("r0 must be positive, got {r0}")));
        }
        if !(q > -1.0) {
            return Err(Error::invalid(format!("epistasis exponent must exceed -1, got {q}")));
        }
        Ok(Self { gamma, r0, q })
    }

    pub fn c_gamma(&self) -> f64 {
        c_of_gamma(self.gamma).expect("validated")
    }

    /// Rate constant `C(gamma) / r0` of the successful-mutation Poisson
    /// limit on the `(rho mu)^{-1}`-days scale; the single source of this
    /// constant for simulation checks.
    pub fn poisson_rate(&self) -> f64 {
        self.c_gamma() / self.r0
    }
}

/// The square-root fitness limit `f(t) = sqrt(1 + 2 C(gamma) t / r0^2)`.
pub fn fitness_limit(t: f64, params: &LimitCurveParams) -> f64 {
    (1.0 + 2.0 * params.c_gamma() * t / (params.r0 * params.r0)).sqrt()
}

/// The epistatic power law
/// `h(t) = (1 + 2 (1+q) C(gamma) t / r0^2)^{1 / (2 (1+q))}`, the limit when
/// a fixation at fitness `x` adds `x^{-q} rho` to the rate. Reduces to
/// [`fitness_limit`] at `q = 0`.
pub fn epistatic_limit(t: f64, params: &LimitCurveParams) -> f64 {
    let g = 1.0 + params.q;
    let base = 1.0 + 2.0 * g * params.c_gamma() * t / (params.r0 * params.r0);
    base.powf(1.0 / (2.0 * g))
}

/// Logistic solution of the middle sweep stage,
/// `g(t) = x0 e^{lambda t} / (1 - x0 + x0 e^{lambda t})` with
/// `lambda = ln(gamma) / r`.
pub fn stage2_logistic(t: f64, x0: f64, r: f64, gamma: f64) -> Result<f64> {
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(Error::invalid(format!("x0 must lie in (0,1), got {x0}")));
    }
    if !(r > 0.0) || !(gamma > 1.0) {
        return Err(Error::invalid("need r > 0 and gamma > 1"));
    }
    let lambda = gamma.ln() / r;
    let e = (lambda * t).exp();
    Ok(x0 * e / (1.0 - x0 + x0 * e))
}

const RK_TOL: f64 = 1e-10;

/// Dormand-Prince 5(4) step: returns (5th order solution, error estimate).
fn dopri5_step<F: Fn(f64) -> f64>(field: &F, x: f64, h: f64) -> (f64, f64) {
    let k1 = field(x);
    let k2 = field(x + h * (1.0 / 5.0) * k1);
    let k3 = field(x + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    let k4 = field(x + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
    let k5 = field(
        x + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3
            - 212.0 / 729.0 * k4),
    );
    let k6 = field(
        x + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3
            + 49.0 / 176.0 * k4
            - 5103.0 / 18656.0 * k5),
    );
    let x5 = x + h
        * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 - 2187.0 / 6784.0 * k5
            + 11.0 / 84.0 * k6);
    let k7 = field(x5);
    let x4 = x + h
        * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 + 393.0 / 640.0 * k4
            - 92097.0 / 339200.0 * k5
            + 187.0 / 2100.0 * k6
            + 1.0 / 40.0 * k7);
    (x5, (x5 - x4).abs())
}

/// Integrates the autonomous scalar ODE `x' = field(x)` from `x0` across
/// the increasing grid `t_grid`, returning the solution at every grid
/// point (the first grid point carries `x0`). Adaptive Dormand-Prince with
/// local tolerance `1e-10`; a step collapsing below machine resolution
/// reports a stiff or invalid field.
pub fn ode_solve<F: Fn(f64) -> f64>(field: F, x0: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    if t_grid.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(x0);
    let mut x = x0;
    let mut t = t_grid[0];
    let span = t_grid[t_grid.len() - 1] - t_grid[0];
    let mut h = (span / 100.0).max(1e-8);
    for &target in &t_grid[1..] {
        while t < target {
            let step = h.min(target - t);
            let (x_new, err) = dopri5_step(&field, x, step);
            let scale = RK_TOL * (1.0 + x.abs());
            if err <= scale {
                t += step;
                x = x_new;
                if err > 0.0 {
                    h = (step * 0.9 * (scale / err).powf(0.2)).min(span).min(step * 5.0);
                } else {
                    h = (step * 5.0).min(span);
                }
            } else {
                h = step * (0.9 * (scale / err).powf(0.2)).max(0.2);
            }
            if h < 1e-14 * span.max(1.0) {
                return Err(Error::StepSizeUnderflow { t });
            }
        }
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }

    #[test]
    fn fitness_limit_at_zero_is_one() {
        let p = LimitCurveParams::new(2.0, 1.0, 0.0).unwrap();
        assert_eq!(fitness_limit(0.0, &p), 1.0);
        assert_eq!(epistatic_limit(0.0, &p), 1.0);
    }

    #[test]
    fn fitness_limit_reference_value() {
        // gamma = e, r0 = 1, t = 1: f = sqrt(1 + 2 C(e)).
        let p = LimitCurveParams::new(std::f64::consts::E, 1.0, 0.0).unwrap();
        let expected = (1.0 + 2.0 * c_of_gamma(std::f64::consts::E).unwrap()).sqrt();
        assert!((fitness_limit(1.0, &p) - expected).abs() < 1e-14);
        assert!((expected - 2.0406).abs() < 1e-4);
    }

    #[test]
    fn epistatic_limit_reduces_to_fitness_limit_at_q_zero() {
        let p = LimitCurveParams::new(2.0, 1.5, 0.0).unwrap();
        for &t in &grid(0.0, 10.0, 100) {
            assert!((epistatic_limit(t, &p) - fitness_limit(t, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn epistatic_limit_is_continuous_in_q_at_zero() {
        let base = LimitCurveParams::new(2.0, 1.0, 0.0).unwrap();
        let mut prev_gap = f64::INFINITY;
        for q in [1e-3, 1e-4] {
            let p = LimitCurveParams::new(2.0, 1.0, q).unwrap();
            let gap = grid(0.0, 10.0, 50)
                .iter()
                .map(|&t| (epistatic_limit(t, &p) - fitness_limit(t, &base)).abs())
                .fold(0.0f64, f64::max);
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-3);
    }

    #[test]
    fn late_time_log_log_slope_is_quarter_for_q_one() {
        let p = LimitCurveParams::new(2.0, 1.0, 1.0).unwrap();
        let t = 1e6;
        let dt = 1e2;
        let slope = (epistatic_limit(t + dt, &p).ln() - epistatic_limit(t - dt, &p).ln())
            / ((t + dt).ln() - (t - dt).ln());
        assert!((slope - 0.25).abs() < 1e-3, "slope {slope}");
    }

    #[test]
    fn fitness_squared_minus_one_is_linear() {
        let p = LimitCurveParams::new(3.0, 2.0, 0.0).unwrap();
        let c = 2.0 * p.c_gamma() / (p.r0 * p.r0);
        for &t in &grid(0.0, 25.0, 100) {
            let f = fitness_limit(t, &p);
            assert!((f * f - 1.0 - c * t).abs() < 1e-12 * (1.0 + c * t));
        }
    }

    #[test]
    fn curves_increase_and_are_concave() {
        let p = LimitCurveParams::new(2.0, 1.0, 0.5).unwrap();
        let ts = grid(0.0, 20.0, 200);
        for f in [fitness_limit as fn(f64, &LimitCurveParams) -> f64, epistatic_limit] {
            let vals: Vec<f64> = ts.iter().map(|&t| f(t, &p)).collect();
            for w in vals.windows(3) {
                assert!(w[1] > w[0]);
                assert!(w[2] - w[1] < w[1] - w[0]); // decreasing increments
            }
        }
    }

    #[test]
    fn logistic_boundary_behaviour() {
        assert_eq!(stage2_logistic(0.0, 0.05, 1.0, 2.0).unwrap(), 0.05);
        let lambda = 2.0f64.ln();
        let late = stage2_logistic(20.0 / lambda, 0.05, 1.0, 2.0).unwrap();
        assert!(late > 1.0 - 1e-6, "g(20/lambda) = {late}");
    }

    #[test]
    fn logistic_satisfies_its_ode() {
        let (x0, r, gamma) = (0.05, 1.0, 2.0f64);
        let lambda = gamma.ln() / r;
        let h = 1e-5;
        for &t in &grid(0.0, 12.0, 120) {
            let g = stage2_logistic(t, x0, r, gamma).unwrap();
            let dg = (stage2_logistic(t + h, x0, r, gamma).unwrap()
                - stage2_logistic(t - h, x0, r, gamma).unwrap())
                / (2.0 * h);
            assert!((dg - g * (1.0 - g) * lambda).abs() < 1e-8, "residual at t={t}");
        }
    }

    #[test]
    fn ode_with_zero_field_is_constant() {
        let ts = grid(0.0, 5.0, 10);
        let xs = ode_solve(|_| 0.0, 3.5, &ts).unwrap();
        assert!(xs.iter().all(|&x| x == 3.5));
    }

    #[test]
    fn ode_reproduces_fitness_limit() {
        // x' = C(gamma) / (r0^2 x), x(0) = 1 integrates to f.
        let p = LimitCurveParams::new(2.0, 1.0, 0.0).unwrap();
        let c = p.c_gamma();
        let ts = grid(0.0, 10.0, 100);
        let xs = ode_solve(|x| c / x, 1.0, &ts).unwrap();
        for (t, x) in ts.iter().zip(&xs) {
            assert!(
                (x - fitness_limit(*t, &p)).abs() < 1e-8,
                "t={t}: {x} vs {}",
                fitness_limit(*t, &p)
            );
        }
    }

    #[test]
    fn ode_reproduces_epistatic_limit() {
        // x' = psi(x)^2 C / (r0^2 x) with psi(x) = x^{-q}.
        let q = 1.0;
        let p = LimitCurveParams::new(2.0, 1.0, q).unwrap();
        let c = p.c_gamma();
        let ts = grid(0.0, 10.0, 100);
        let xs = ode_solve(|x: f64| x.powf(-2.0 * q) * c / x, 1.0, &ts).unwrap();
        for (t, x) in ts.iter().zip(&xs) {
            assert!(
                (x - epistatic_limit(*t, &p)).abs() < 1e-8,
                "t={t}: {x} vs {}",
                epistatic_limit(*t, &p)
            );
        }
    }

    #[test]
    fn ode_reproduces_logistic() {
        let lambda = 2.0f64.ln();
        let ts = grid(0.0, 15.0, 100);
        let xs = ode_solve(|x| lambda * x * (1.0 - x), 0.05, &ts).unwrap();
        for (t, x) in ts.iter().zip(&xs) {
            let g = stage2_logistic(*t, 0.05, 1.0, 2.0).unwrap();
            assert!((x - g).abs() < 1e-8, "t={t}: {x} vs {g}");
        }
    }

    #[test]
    fn ode_rejects_bad_grid() {
        assert!(ode_solve(|_| 0.0, 0.0, &[]).is_err());
        assert!(ode_solve(|_| 0.0, 0.0, &[0.0, 0.0]).is_err());
        assert!(ode_solve(|_| 0.0, 0.0, &[1.0, 0.5]).is_err());
    }
}
