//! Four-compartment epidemic model with reported (R) and unreported (U)
//! infectious cases and a decaying transmission rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{InputSampler, ModelFn};
use crate::marginal::MarginalDist;
use crate::value::OutputValue;

pub const DIM: usize = 6;
pub const INPUT_NAMES: [&str; DIM] = ["tau0", "mu", "N", "eta_period", "nu_period", "chi2"];

/// Model parameters; `eta` and `nu` are rates (per day).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub tau0: f64,
    pub mu: f64,
    pub n_days: f64,
    pub eta: f64,
    pub nu: f64,
    pub chi2: f64,
    pub f: f64,
    pub s0: f64,
}

impl SirParams {
    /// From the input vector `(tau0, mu, N, 1/eta, 1/nu, chi2)`.
    pub fn from_inputs(x: &[f64], f: f64) -> Result<Self> {
        if x.len() != DIM {
            return Err(Error::invalid(format!("SIR model takes 6 inputs, got {}", x.len())));
        }
        let p = SirParams {
            tau0: x[0],
            mu: x[1],
            n_days: x[2],
            eta: 1.0 / x[3],
            nu: 1.0 / x[4],
            chi2: x[5],
            f,
            s0: 66.99e6,
        };
        p.validate()?;
        Ok(p)
    }

    /// Centre of the default input ranges.
    pub fn midrange() -> Self {
        SirParams::from_inputs(&[6.0e-9, 0.032, 11.5, 7.0, 7.0, 0.36], 0.1).expect("valid defaults")
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.tau0, self.mu, self.n_days, self.eta, self.nu, self.chi2, self.f, self.s0];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("SIR parameters must be finite"));
        }
        if self.tau0 < 0.0 || self.mu < 0.0 || self.n_days < 0.0 {
            return Err(Error::invalid("tau0, mu and N must be non-negative"));
        }
        if !(self.eta > 0.0 && self.nu > 0.0 && self.chi2 > 0.0 && self.s0 > 0.0) {
            return Err(Error::invalid("eta, nu, chi2 and S0 must be positive"));
        }
        if !(self.f > 0.0 && self.f <= 1.0) {
            return Err(Error::invalid(format!("reported fraction f = {} outside (0, 1]", self.f)));
        }
        Ok(())
    }

    pub fn tau(&self, t: f64) -> f64 {
        self.tau0 * (-self.mu * (t - self.n_days).max(0.0)).exp()
    }

    /// `(S, I, R, U, recovered)` at time 0.
    pub fn initial_state(&self) -> [f64; 5] {
        let i0 = self.chi2 / (self.f * self.nu);
        let u0 = (1.0 - self.f) * self.nu / (self.eta + self.chi2) * i0;
        [self.s0, i0, 1.0, u0, 0.0]
    }

    fn rhs(&self, t: f64, y: &[f64; 5]) -> [f64; 5] {
        let [s, i, r, u, _] = *y;
        let infection = self.tau(t) * s * (i + u);
        [
            -infection,
            infection - self.nu * i,
            self.f * self.nu * i - self.eta * r,
            (1.0 - self.f) * self.nu * i - self.eta * u,
            self.eta * (r + u),
        ]
    }
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Spacing of the output curves, a multiple of `dt`.
    pub output_step: f64,
    pub f: f64,
}

impl Default for SirConfig {
    fn default() -> Self {
        SirConfig {
            dt: 0.1,
            horizon: 120.0,
            output_step: 2.0,
            f: 0.1,
        }
    }
}

/// States at every step, normalized by `S0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SirTrajectory {
    pub times: Vec<f64>,
    /// `[S, I, R, U, recovered]` per time.
    pub states: Vec<[f64; 5]>,
}

impl SirTrajectory {
    pub fn compartment(&self, c: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[c]).collect()
    }

    /// Curve of compartment `c` keeping every `stride`-th time.
    pub fn curve(&self, c: usize, stride: usize) -> Result<OutputValue> {
        let stride = stride.max(1);
        let times = self.times.iter().step_by(stride).copied().collect();
        let values = self.states.iter().step_by(stride).map(|s| s[c]).collect();
        OutputValue::curve(times, values)
    }
}

pub const S: usize = 0;
pub const I: usize = 1;
pub const R: usize = 2;
pub const U: usize = 3;
pub const RECOVERED: usize = 4;

fn steps(span: f64, dt: f64, what: &str) -> Result<usize> {
    let k = (span / dt).round();
    if k < 1.0 || ((k * dt - span).abs() > 1e-9 * span.max(1.0)) {
        return Err(Error::invalid(format!("{what} {span} is not a multiple of dt = {dt}")));
    }
    Ok(k as usize)
}

/// Fixed-step RK4 integration.
pub fn sir_simulate(p: &SirParams, dt: f64, horizon: f64) -> Result<SirTrajectory> {
    p.validate()?;
    if !(dt > 0.0 && dt <= 0.5) {
        return Err(Error::invalid(format!("dt = {dt} must lie in (0, 0.5] days")));
    }
    if !(horizon >= p.n_days) {
        return Err(Error::invalid(format!("horizon {horizon} is shorter than N = {}", p.n_days)));
    }
    let k = steps(horizon, dt, "horizon")?;
    let mut y = p.initial_state();
    let mut times = Vec::with_capacity(k + 1);
    let mut states = Vec::with_capacity(k + 1);
    let scale = 1.0 / p.s0;
    let push = |t: f64, y: &[f64; 5], times: &mut Vec<f64>, states: &mut Vec<[f64; 5]>| {
        times.push(t);
        states.push(y.map(|v| v * scale));
    };
    push(0.0, &y, &mut times, &mut states);
    for step in 0..k {
        let t = step as f64 * dt;
        let k1 = p.rhs(t, &y);
        let y2 = std::array::from_fn(|c| y[c] + 0.5 * dt * k1[c]);
        let k2 = p.rhs(t + 0.5 * dt, &y2);
        let y3 = std::array::from_fn(|c| y[c] + 0.5 * dt * k2[c]);
        let k3 = p.rhs(t + 0.5 * dt, &y3);
        let y4 = std::array::from_fn(|c| y[c] + dt * k3[c]);
        let k4 = p.rhs(t + dt, &y4);
        for c in 0..5 {
            y[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if let Some(c) = (0..5).find(|c| y[*c] * scale < -1e-9) {
            return Err(Error::Instability(format!(
                "compartment {c} reached {:e} at t = {:.2}; use a smaller dt",
                y[c] * scale,
                t + dt
            )));
        }
        push((step + 1) as f64 * dt, &y, &mut times, &mut states);
    }
    Ok(SirTrajectory { times, states })
}

/// `I(t)/S0` and `R(t)/S0` on the output grid.
pub fn sir_curves(x: &[f64], cfg: &SirConfig) -> Result<(OutputValue, OutputValue)> {
    let p = SirParams::from_inputs(x, cfg.f)?;
    let traj = sir_simulate(&p, cfg.dt, cfg.horizon)?;
    let stride = steps(cfg.output_step, cfg.dt, "output step")?;
    Ok((traj.curve(I, stride)?, traj.curve(R, stride)?))
}

/// Model returning one compartment (`I` or `R`) as a curve.
pub fn model(compartment: usize, cfg: SirConfig) -> Result<ModelFn> {
    if compartment != I && compartment != R {
        return Err(Error::invalid("the SIR model outputs compartment I or R"));
    }
    Ok(ModelFn::new(DIM, move |x, _| {
        let (i, r) = sir_curves(x, &cfg)?;
        Ok(if compartment == I { i } else { r })
    }))
}

/// Uniform input ranges.
pub fn sampler() -> InputSampler {
    let r = |a: f64, b: f64| MarginalDist::Uniform { a, b };
    InputSampler::independent(vec![
        r(5.9e-9, 6.1e-9),
        r(0.028, 0.036),
        r(8.0, 15.0),
        r(5.0, 9.0),
        r(5.0, 9.0),
        r(0.32, 0.4),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_transmission_gives_exponential_decay() {
        let mut p = SirParams::midrange();
        p.tau0 = 0.0;
        let traj = sir_simulate(&p, 0.1, 30.0).unwrap();
        let i0 = p.initial_state()[1] / p.s0;
        let last = traj.states.last().unwrap();
        let exact = i0 * (-p.nu * 30.0).exp();
        assert!((last[I] - exact).abs() / exact < 1e-6);
        assert!(traj.states.iter().all(|s| s[S] == 1.0));
    }

    #[test]
    fn rk4_order_on_the_closed_form_case() {
        let mut p = SirParams::midrange();
        p.tau0 = 0.0;
        let exact = p.initial_state()[1] / p.s0 * (-p.nu * 30.0).exp();
        let err = |dt: f64| (sir_simulate(&p, dt, 30.0).unwrap().states.last().unwrap()[I] - exact).abs();
        let ratio = err(0.5) / err(0.25);
        assert!(ratio >= 12.0, "{ratio}");
    }

    #[test]
    fn full_reporting_has_no_unreported_cases() {
        let p = SirParams::from_inputs(&[6.0e-9, 0.032, 11.5, 7.0, 7.0, 0.36], 1.0).unwrap();
        assert_eq!(p.initial_state()[U], 0.0);
    }

    #[test]
    fn conservation_and_monotone_susceptibles() {
        let p = SirParams::midrange();
        let traj = sir_simulate(&p, 0.1, 120.0).unwrap();
        let total0: f64 = traj.states[0].iter().sum();
        for w in traj.states.windows(2) {
            assert!(w[1][S] <= w[0][S]);
            let t: f64 = w[1].iter().sum();
            assert!((t - total0).abs() / total0 < 1e-6);
        }
        assert!(traj.states.iter().all(|s| s.iter().all(|v| *v >= 0.0)));
    }

    #[test]
    fn infected_curve_is_unimodal() {
        let p = SirParams::midrange();
        let i = sir_simulate(&p, 0.1, 120.0).unwrap().compartment(I);
        let peak = i
            .iter()
            .enumerate()
            .fold(0, |b, (k, v)| if *v > i[b] { k } else { b });
        assert!(peak > 0 && peak < i.len() - 1);
        assert!(i[..=peak].windows(2).all(|w| w[1] >= w[0]));
        assert!(i[peak..].windows(2).all(|w| w[1] <= w[0]));
        // grid refinement
        let fine = sir_simulate(&p, 0.05, 120.0).unwrap().compartment(I);
        for (k, v) in i.iter().enumerate() {
            assert!((fine[2 * k] - v).abs() <= 1e-4 * v.abs().max(1e-12));
        }
    }

    #[test]
    fn curves_on_the_output_grid() {
        let (i, r) = sir_curves(&[6.0e-9, 0.03, 10.0, 6.0, 8.0, 0.35], &SirConfig::default()).unwrap();
        match (i, r) {
            (OutputValue::Curve { times, values }, OutputValue::Curve { values: rv, .. }) => {
                assert_eq!(times.len(), 61);
                assert_eq!(values.len(), 61);
                assert_eq!(rv.len(), 61);
                assert!((times[1] - 2.0).abs() < 1e-12);
            }
            _ => panic!("expected curves"),
        }
    }

    #[test]
    fn invalid_settings() {
        let p = SirParams::midrange();
        assert!(sir_simulate(&p, 1.0, 120.0).is_err());
        assert!(sir_simulate(&p, 0.1, 5.0).is_err());
    }
}
