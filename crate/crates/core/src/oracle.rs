//! Brute-force time-domain reference for the Floquet/resolvent path.
//!
//! The Bloch equations are integrated with their explicit `cos(ω_f t)`
//! modulation by classic fixed-step RK4. Once the trajectory has settled,
//! two-time correlations are propagated in `τ` from `n_phase` start times
//! spread over one drive period (quantum regression: same equations, no
//! inhomogeneity), averaged, and Fourier transformed with the trapezoidal
//! rule. Nothing here touches the harmonic expansion.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Rates, ValidatedModel};
use crate::spectrum::{check_grid, integrate_incoherent, SpectralPoint, SpectrumTable, SumRule};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Minimum number of RK4 steps per drive period accepted by [`integrate_bloch`].
pub const MIN_STEPS_PER_PERIOD: f64 = 20.0;
/// Correlations must fall below this fraction of their initial size by `tau_max`.
pub const TAIL_RATIO: f64 = 1e-4;

type State = [C64; 3];

fn derivative(r: &Rates, t: f64, x: &State, inhomogeneous: bool) -> State {
    let modulation = r.delta_a * (r.omega_f * t).cos();
    let coh = 0.5 + r.n;
    let rabi = C64::from(r.rabi);
    let d1 = -(coh - I * r.detuning + I * modulation) * x[0] + r.m * x[1] + rabi * x[2];
    let d2 = -(coh + I * r.detuning - I * modulation) * x[1] + r.m.conj() * x[0] + rabi * x[2];
    let mut d3 = -0.5 * rabi * (x[0] + x[1]) - (2.0 * r.n + 1.0) * x[2];
    if inhomogeneous {
        d3 -= 0.5;
    }
    [d1, d2, d3]
}

fn axpy(x: &State, h: f64, k: &State) -> State {
    [x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2]]
}

fn rk4_step(r: &Rates, t: f64, x: &State, h: f64, inhomogeneous: bool) -> State {
    let k1 = derivative(r, t, x, inhomogeneous);
    let k2 = derivative(r, t + 0.5 * h, &axpy(x, 0.5 * h, &k1), inhomogeneous);
    let k3 = derivative(r, t + 0.5 * h, &axpy(x, 0.5 * h, &k2), inhomogeneous);
    let k4 = derivative(r, t + h, &axpy(x, h, &k3), inhomogeneous);
    let w = h / 6.0;
    [
        x[0] + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        x[2] + w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Runs `steps` RK4 steps from `(t0, x0)` in Γ units, calling `visit` on every state including the first.
fn propagate(r: &Rates, t0: f64, x0: State, h: f64, steps: usize, inhomogeneous: bool, mut visit: impl FnMut(usize, &State)) -> State {
    let mut x = x0;
    visit(0, &x);
    for n in 0..steps {
        x = rk4_step(r, t0 + n as f64 * h, &x, h, inhomogeneous);
        visit(n + 1, &x);
    }
    x
}

/// Sampled solution of the Bloch equations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlochTrajectory {
    pub times: Vec<f64>,
    pub s_minus: Vec<C64>,
    pub s_plus: Vec<C64>,
    pub s_z: Vec<f64>,
}

impl BlochTrajectory {
    fn push(&mut self, t: f64, x: &State) {
        self.times.push(t);
        self.s_minus.push(x[0]);
        self.s_plus.push(x[1]);
        self.s_z.push(x[2].re);
    }
}

/// Integrates the Bloch equations from `t = 0` to at least `t_end` with step `dt`
/// (physical time units). `initial` is `(⟨S̃⁻⟩, ⟨S̃⁺⟩, ⟨S^z⟩)`.
pub fn integrate_bloch(model: &ValidatedModel, t_end: f64, dt: f64, initial: (C64, C64, f64)) -> Result<BlochTrajectory> {
    if !(dt > 0.0 && t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and finite t_end >= 0, got dt = {dt}, t_end = {t_end}")));
    }
    let wf = model.params().omega_f;
    if wf > 0.0 {
        let limit = TAU / wf / MIN_STEPS_PER_PERIOD;
        if dt > limit {
            return Err(Error::StepTooLarge { dt, limit });
        }
    }
    let g = model.gamma();
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let x0 = [initial.0, initial.1, C64::from(initial.2)];
    let mut out = BlochTrajectory::default();
    propagate(model.rates(), 0.0, x0, dt * g, steps, true, |n, x| out.push(n as f64 * dt, x));
    Ok(out)
}

/// Knobs of the time-domain reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Lower bound on RK4 steps per drive period and per Rabi cycle.
    pub steps_per_period: usize,
    /// Number of correlation start times per drive period.
    pub n_phase: usize,
    /// Largest accepted period-to-period change of the Bloch vector, per unit Γt.
    pub settle_tolerance: f64,
    /// Give up settling after this many `1/Γ`.
    pub max_settle_time: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings { steps_per_period: 40, n_phase: 8, settle_tolerance: 1e-8, max_settle_time: 5000.0 }
    }
}

/// Bloch vector at a settled time, aligned with a drive period boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settled {
    /// Physical time.
    pub time: f64,
    pub s_minus: C64,
    pub s_plus: C64,
    pub s_z: f64,
    /// Period-to-period change per unit Γt at the moment of acceptance.
    pub drift: f64,
}

/// Period-averaged fluctuation correlations `Y_i(t, t+τ)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationGrid {
    /// Physical delays.
    pub tau: Vec<f64>,
    pub y1: Vec<C64>,
    pub y2: Vec<C64>,
    pub y3: Vec<C64>,
}

impl CorrelationGrid {
    fn norm_at(&self, k: usize) -> f64 {
        self.y1[k].norm().max(self.y2[k].norm()).max(self.y3[k].norm())
    }

    /// `max_i |y_i(τ_max)| / max_i |y_i(0)|`, zero when the correlations vanish.
    pub fn tail_ratio(&self) -> f64 {
        let start = self.norm_at(0);
        if start == 0.0 {
            0.0
        } else {
            self.norm_at(self.tau.len() - 1) / start
        }
    }
}

/// Equal-time fluctuations seeded from the Bloch vector.
fn regression_seed(x: &State) -> State {
    let (sm, sp, sz) = (x[0], x[1], x[2]);
    [0.5 + sz - sp * sm, -sp * sp, -0.5 * sp - sp * sz]
}

/// Time-domain reference bound to one model.
#[derive(Debug, Clone)]
pub struct TimeOracle {
    model: ValidatedModel,
    settings: OracleSettings,
    /// Drive period, Γ units.
    period: f64,
    /// RK4 steps between consecutive start phases.
    per_phase: usize,
}

impl TimeOracle {
    pub fn new(model: &ValidatedModel) -> Result<Self> {
        Self::with_settings(model, OracleSettings::default())
    }

    pub fn with_settings(model: &ValidatedModel, settings: OracleSettings) -> Result<Self> {
        let r = model.rates();
        if !(r.omega_f > 0.0) {
            return Err(Error::InvalidArgument("the time-domain reference needs omega_f > 0".into()));
        }
        if settings.n_phase < 8 {
            return Err(Error::InvalidArgument(format!("n_phase must be at least 8, got {}", settings.n_phase)));
        }
        if (settings.steps_per_period as f64) < MIN_STEPS_PER_PERIOD {
            return Err(Error::InvalidArgument(format!(
                "steps_per_period must be at least {MIN_STEPS_PER_PERIOD}, got {}",
                settings.steps_per_period
            )));
        }
        let period = TAU / r.omega_f;
        let fastest = r.omega_f.max(r.rabi).max(r.delta_a).max(r.detuning.abs()).max(2.0 * r.n + 1.0);
        let dt_target = TAU / fastest / settings.steps_per_period as f64;
        let per_phase = ((period / settings.n_phase as f64) / dt_target).ceil().max(1.0) as usize;
        Ok(TimeOracle { model: *model, settings, period, per_phase })
    }

    pub fn settings(&self) -> &OracleSettings {
        &self.settings
    }

    /// RK4 step in physical time units.
    pub fn dt(&self) -> f64 {
        self.step() / self.model.gamma()
    }

    fn step(&self) -> f64 {
        self.period / (self.settings.n_phase * self.per_phase) as f64
    }

    fn steps_per_period(&self) -> usize {
        self.settings.n_phase * self.per_phase
    }

    fn settle_scaled(&self) -> Result<(f64, State, f64)> {
        let r = self.model.rates();
        let h = self.step();
        let m = self.steps_per_period();
        let mut x: State = [ZERO, ZERO, C64::from(-0.5)];
        let mut periods = 0usize;
        loop {
            let t0 = periods as f64 * self.period;
            let next = propagate(r, t0, x, h, m, true, |_, _| {});
            periods += 1;
            let change = (0..3).map(|k| (next[k] - x[k]).norm()).fold(0.0, f64::max);
            let drift = change / self.period;
            x = next;
            let t = periods as f64 * self.period;
            if drift < self.settings.settle_tolerance {
                return Ok((t, x, drift));
            }
            if t > self.settings.max_settle_time {
                return Err(Error::NotSettled { drift, time: t / self.model.gamma() });
            }
        }
    }

    /// Integrates from the ground state until the Bloch vector repeats from one period to the next.
    pub fn settle(&self) -> Result<Settled> {
        let (t, x, drift) = self.settle_scaled()?;
        Ok(Settled { time: t / self.model.gamma(), s_minus: x[0], s_plus: x[1], s_z: x[2].re, drift })
    }

    /// States at the `n_phase` start times of one settled period, plus the settled time.
    fn phase_states(&self) -> Result<(f64, Vec<State>, State)> {
        let (t_s, x, _) = self.settle_scaled()?;
        let mut states = Vec::with_capacity(self.settings.n_phase);
        let mut sum = [ZERO; 3];
        let m = self.steps_per_period();
        propagate(self.model.rates(), t_s, x, self.step(), m, true, |n, x| {
            if n < m {
                if n % self.per_phase == 0 {
                    states.push(*x);
                }
                for k in 0..3 {
                    sum[k] += x[k];
                }
            }
        });
        let avg = sum.map(|s| s / m as f64);
        Ok((t_s, states, avg))
    }

    /// Mean of the settled Bloch vector over one drive period.
    pub fn period_average(&self) -> Result<(C64, C64, f64)> {
        let (_, _, avg) = self.phase_states()?;
        Ok((avg[0], avg[1], avg[2].re))
    }

    /// Period-averaged correlations on `τ ∈ [0, tau_max]` (physical units).
    pub fn correlate(&self, tau_max: f64) -> Result<CorrelationGrid> {
        if !(tau_max > 0.0 && tau_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau_max must be positive, got {tau_max}")));
        }
        let g = self.model.gamma();
        let h = self.step();
        let steps = (tau_max * g / h).ceil() as usize;
        let (t_s, starts, _) = self.phase_states()?;
        let r = *self.model.rates();
        let per_phase = self.per_phase;

        let runs: Vec<Vec<State>> = starts
            .par_iter()
            .enumerate()
            .map(|(k, x)| {
                let t0 = t_s + (k * per_phase) as f64 * h;
                let mut ys = Vec::with_capacity(steps + 1);
                propagate(&r, t0, regression_seed(x), h, steps, false, |_, y| ys.push(*y));
                ys
            })
            .collect();

        let inv = 1.0 / runs.len() as f64;
        let mut out = CorrelationGrid {
            tau: (0..=steps).map(|n| n as f64 * h / g).collect(),
            y1: vec![ZERO; steps + 1],
            y2: vec![ZERO; steps + 1],
            y3: vec![ZERO; steps + 1],
        };
        for run in &runs {
            for (n, y) in run.iter().enumerate() {
                out.y1[n] += y[0] * inv;
                out.y2[n] += y[1] * inv;
                out.y3[n] += y[2] * inv;
            }
        }
        Ok(out)
    }

    /// Spectral components by direct quadrature of the cos/sin transforms.
    pub fn spectrum_numeric(&self, grid: &[f64], tau_max: f64) -> Result<SpectrumTable> {
        self.transform(tau_max)?.spectrum(grid)
    }

    /// Correlations prepared for repeated Fourier evaluation.
    pub fn transform(&self, tau_max: f64) -> Result<CorrelationTransform> {
        let c = self.correlate(tau_max)?;
        let ratio = c.tail_ratio();
        if ratio > TAIL_RATIO {
            return Err(Error::TailTooShort { ratio });
        }
        Ok(CorrelationTransform::new(&self.model, &c, self.step()))
    }

    /// `∫ F_inc dω` of the reference spectrum against `Γ·Re y₁(0)`.
    pub fn sum_rule(&self, tau_max: f64, rel_tol: f64) -> Result<SumRule> {
        Ok(self.transform(tau_max)?.sum_rule(rel_tol))
    }
}

/// Trapezoid-weighted correlation samples.
#[derive(Debug, Clone)]
pub struct CorrelationTransform {
    model: ValidatedModel,
    omega_f: f64,
    gamma: f64,
    step: f64,
    re_y1: Vec<f64>,
    re_y2: Vec<f64>,
    im_y1: Vec<f64>,
    y1_at_zero: f64,
}

impl CorrelationTransform {
    fn new(model: &ValidatedModel, c: &CorrelationGrid, step: f64) -> Self {
        let n = c.tau.len();
        let weight = |k: usize| if k == 0 || k + 1 == n { 0.5 * step } else { step };
        CorrelationTransform {
            model: *model,
            omega_f: model.params().omega_f,
            gamma: model.gamma(),
            step,
            re_y1: (0..n).map(|k| weight(k) * c.y1[k].re).collect(),
            re_y2: (0..n).map(|k| weight(k) * c.y2[k].re).collect(),
            im_y1: (0..n).map(|k| weight(k) * c.y1[k].im).collect(),
            y1_at_zero: c.y1[0].re,
        }
    }

    pub fn spectrum(&self, grid: &[f64]) -> Result<SpectrumTable> {
        check_grid(grid)?;
        let points: Vec<SpectralPoint> = grid.par_iter().map(|&w| self.point(w)).collect();
        Ok(SpectrumTable::from_points(grid.to_vec(), &points))
    }

    /// `∫ F_inc dω` against `Γ·Re y₁(0)`.
    pub fn sum_rule(&self, rel_tol: f64) -> SumRule {
        let integral = integrate_incoherent(&self.model, 1, |w| self.point(w).finc, rel_tol);
        SumRule { integral, expected: self.gamma * self.y1_at_zero }
    }

    pub fn point(&self, omega: f64) -> SpectralPoint {
        let delta = (omega - self.omega_f) / self.gamma;
        let (s, c) = (delta * self.step).sin_cos();
        let rot = C64::new(c, s);
        let mut phase = C64::new(1.0, 0.0);
        let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
        for k in 0..self.re_y1.len() {
            if k % 256 == 0 {
                let (s, c) = (delta * self.step * k as f64).sin_cos();
                phase = C64::new(c, s);
            }
            a += self.re_y1[k] * phase.re;
            b += self.re_y2[k] * phase.re;
            d += self.im_y1[k] * phase.im;
            phase *= rot;
        }
        let fx = (a + b) / (2.0 * PI);
        let fy = (a - b) / (2.0 * PI);
        let fas = -d / PI;
        SpectralPoint { fx, fy, fas, finc: fx + fy + fas, imag_residue: 0.0 }
    }
}

pub fn correlate(model: &ValidatedModel, tau_max: f64, n_phase: usize) -> Result<CorrelationGrid> {
    TimeOracle::with_settings(model, OracleSettings { n_phase, ..OracleSettings::default() })?.correlate(tau_max)
}

pub fn spectrum_numeric(model: &ValidatedModel, grid: &[f64], tau_max: f64) -> Result<SpectrumTable> {
    TimeOracle::new(model)?.spectrum_numeric(grid, tau_max)
}

/// A `tau_max` long enough for the slowest squeezed quadrature, `Γe^{-2r}/2`, to decay.
pub fn default_tau_max(model: &ValidatedModel) -> f64 {
    let slowest = 0.5 * (-2.0 * model.params().r).exp();
    (14.0 / slowest).max(30.0) / model.gamma()
}
