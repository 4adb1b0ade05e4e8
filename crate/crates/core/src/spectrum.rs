//! Incoherent fluorescence spectrum from the Laplace-domain regression system.
//!
//! The fluctuation correlations `Y_1 = ⟨S̃⁺(t) S̃⁻(t+τ)⟩ − ⟨S̃⁺⟩⟨S̃⁻⟩`,
//! `Y_2 = ⟨S̃⁺(t) S̃⁺(t+τ)⟩ − …` and `Y_3 = ⟨S̃⁺(t) S^z(t+τ)⟩ − …` obey the
//! homogeneous Bloch equations in `τ`. After the same harmonic expansion
//! used for the steady state, their Laplace transforms solve
//!
//! ```text
//! (z − A) · Ȳ(z) = b
//! ```
//!
//! where `A` is the steady-state generator and `b` collects the equal-time
//! fluctuations built from the Floquet amplitudes. Only the `l = 0` block of
//! `Ȳ` survives the period average, and the three spectral components are
//! read off at `z = ∓i(ω − ω_f)`:
//!
//! ```text
//! F_X  = Γ/4π · Re[(Ȳ₁+Ȳ₂)(−iΔ) + (Ȳ₁+Ȳ₂)(+iΔ)]
//! F_Y  = Γ/4π · Re[(Ȳ₁−Ȳ₂)(−iΔ) + (Ȳ₁−Ȳ₂)(+iΔ)]
//! F_as = Γ/2π · Re[Ȳ₁(−iΔ) − Ȳ₁(+iΔ)]
//! ```
//!
//! with `Δ = ω − ω_f`. The incoherent spectrum is their sum.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::{assemble, HarmonicState};
use crate::linalg::Vec3;
use crate::model::ValidatedModel;
use crate::quad;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Relative residual accepted from a resolvent solve.
pub const RESOLVENT_RESIDUAL: f64 = 1e-10;

/// Equal-time fluctuation vector `b` on the right side of the resolvent system.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRhs {
    truncation: usize,
    pub b1: Vec<C64>,
    pub b2: Vec<C64>,
    pub b3: Vec<C64>,
}

impl CorrelationRhs {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn get(&self, component: usize, l: i64) -> C64 {
        let ll = self.truncation as i64;
        if l.abs() > ll {
            return ZERO;
        }
        let k = (l + ll) as usize;
        match component {
            1 => self.b1[k],
            2 => self.b2[k],
            3 => self.b3[k],
            _ => panic!("correlation component must be 1, 2 or 3, got {component}"),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.b1.iter().chain(&self.b2).chain(&self.b3).map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn harmonics(&self) -> Vec<Vec3> {
        (0..self.b1.len()).map(|k| [self.b1[k], self.b2[k], self.b3[k]]).collect()
    }
}

/// `Σ_r a^(l−r) b^(r)` with both indices inside the truncation window.
fn convolve(state: &HarmonicState, a: impl Fn(i64) -> C64, b: impl Fn(i64) -> C64, l: i64) -> C64 {
    let ll = state.truncation() as i64;
    let lo = (l - ll).max(-ll);
    let hi = (l + ll).min(ll);
    (lo..=hi).map(|r| a(l - r) * b(r)).sum()
}

/// Builds `b` from the steady-state amplitudes.
pub fn correlation_rhs(state: &HarmonicState) -> CorrelationRhs {
    let x1 = |l| state.get(1, l);
    let x2 = |l| state.get(2, l);
    let x3 = |l| state.get(3, l);
    let half_plus_x3 = |l: i64| if l == 0 { 0.5 + x3(0) } else { x3(l) };

    let mut out = CorrelationRhs { truncation: state.truncation(), b1: vec![], b2: vec![], b3: vec![] };
    for l in state.indices() {
        out.b1.push(half_plus_x3(l) - convolve(state, x1, x2, l));
        out.b2.push(-convolve(state, x2, x2, l));
        out.b3.push(-convolve(state, x2, half_plus_x3, l));
    }
    out
}

/// Laplace-domain correlations `Ȳ_i^(l)(z)` at a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSolution {
    pub z: C64,
    truncation: usize,
    pub y1: Vec<C64>,
    pub y2: Vec<C64>,
    pub y3: Vec<C64>,
}

impl ResolventSolution {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn get(&self, component: usize, l: i64) -> C64 {
        let ll = self.truncation as i64;
        if l.abs() > ll {
            return ZERO;
        }
        let k = (l + ll) as usize;
        match component {
            1 => self.y1[k],
            2 => self.y2[k],
            3 => self.y3[k],
            _ => panic!("correlation component must be 1, 2 or 3, got {component}"),
        }
    }
}

/// Solves `(z − A) Ȳ = b` in Γ = 1 units.
fn resolvent_scaled(model: &ValidatedModel, rhs: &CorrelationRhs, z: C64) -> Result<Vec<Vec3>> {
    let op = assemble(model.rates(), rhs.truncation(), -z, -1.0);
    let b = rhs.harmonics();
    let y = op.solve(&b).map_err(|_| Error::SingularResolvent { z })?;
    let residual = op.relative_residual(&y, &b);
    if residual > RESOLVENT_RESIDUAL {
        return Err(Error::Residual { residual, tolerance: RESOLVENT_RESIDUAL });
    }
    Ok(y)
}

/// Resolvent at a physical Laplace variable `z`; the returned `Ȳ` carry time units.
pub fn solve_resolvent(model: &ValidatedModel, rhs: &CorrelationRhs, z: C64) -> Result<ResolventSolution> {
    let g = model.gamma();
    let y = resolvent_scaled(model, rhs, z / g).map_err(|e| match e {
        Error::SingularResolvent { .. } => Error::SingularResolvent { z },
        other => other,
    })?;
    Ok(ResolventSolution {
        z,
        truncation: rhs.truncation(),
        y1: y.iter().map(|v| v[0] / g).collect(),
        y2: y.iter().map(|v| v[1] / g).collect(),
        y3: y.iter().map(|v| v[2] / g).collect(),
    })
}

/// Spectral components at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub fx: f64,
    pub fy: f64,
    pub fas: f64,
    pub finc: f64,
    /// Largest departure from conjugate-pair symmetry `Ȳ(+iΔ) = Ȳ(−iΔ)*`
    /// among the combinations projected by `Re[·]`.
    pub imag_residue: f64,
}

/// Spectrum sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumTable {
    pub omega: Vec<f64>,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    pub fas: Vec<f64>,
    pub finc: Vec<f64>,
}

/// Selects one spectral column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Fx,
    Fy,
    Fas,
    Finc,
}

impl Column {
    pub const ALL: [Column; 4] = [Column::Fx, Column::Fy, Column::Fas, Column::Finc];

    pub fn name(self) -> &'static str {
        match self {
            Column::Fx => "F_X",
            Column::Fy => "F_Y",
            Column::Fas => "F_as",
            Column::Finc => "F_inc",
        }
    }
}

impl SpectrumTable {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn column(&self, column: Column) -> &[f64] {
        match column {
            Column::Fx => &self.fx,
            Column::Fy => &self.fy,
            Column::Fas => &self.fas,
            Column::Finc => &self.finc,
        }
    }

    pub(crate) fn from_points(omega: Vec<f64>, points: &[SpectralPoint]) -> Self {
        SpectrumTable {
            omega,
            fx: points.iter().map(|p| p.fx).collect(),
            fy: points.iter().map(|p| p.fy).collect(),
            fas: points.iter().map(|p| p.fas).collect(),
            finc: points.iter().map(|p| p.finc).collect(),
        }
    }

    /// Largest `|value|` in a column.
    pub fn peak_height(&self, column: Column) -> f64 {
        self.column(column).iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(bad) = grid.iter().find(|w| !w.is_finite()) {
        return Err(Error::InvalidGrid(format!("non-finite frequency {bad}")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("frequencies must be strictly increasing".into()));
    }
    Ok(())
}

/// Integrated incoherent spectrum against the equal-time value it must reproduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRule {
    /// `∫ F_inc dω` over the real line, physical frequency units.
    pub integral: f64,
    /// `Γ · Re b₁^(0)`.
    pub expected: f64,
}

impl SumRule {
    pub fn relative_error(&self) -> f64 {
        if self.expected == 0.0 {
            self.integral.abs()
        } else {
            ((self.integral - self.expected) / self.expected).abs()
        }
    }
}

/// `∫ F_inc(ω) dω` for any evaluator of the incoherent spectrum.
///
/// The window is `ω_f ± (ω_f + 10Ω_R)`; the partition is seeded with the
/// harmonic images `(l+1)ω_f + {0, ±Ω_R}` of the Mollow features and
/// geometric sub-points around each. Beyond the window each tail is taken as
/// `c/(ω − ω_f)²`, which integrates to `F(edge)·|edge − ω_f|`.
pub fn integrate_incoherent(
    model: &ValidatedModel,
    truncation: usize,
    mut finc: impl FnMut(f64) -> f64,
    rel_tol: f64,
) -> f64 {
    let p = model.params();
    let width = model.gamma() * model.damping_factor();
    let reach = (p.omega_f.abs() + 10.0 * p.rabi).max(100.0 * width);
    let (lo, hi) = (p.omega_f - reach, p.omega_f + reach);

    let mut breaks = vec![lo, hi];
    let images = truncation as i64 + 1;
    for l in -images..=images {
        for off in [-p.rabi, 0.0, p.rabi] {
            let c = p.omega_f + l as f64 * p.omega_f + off;
            breaks.push(c);
            for k in [0.5, 2.0, 8.0, 32.0] {
                breaks.push(c - k * width);
                breaks.push(c + k * width);
            }
        }
    }
    breaks.retain(|x| *x >= lo && *x <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let f_lo = finc(lo);
    let f_hi = finc(hi);
    let body = quad::integrate(&mut finc, &breaks, 0.0, rel_tol, 20_000);
    body.value + (f_lo + f_hi) * reach
}

/// Spectrum evaluator bound to one model and steady state.
#[derive(Debug, Clone)]
pub struct SpectrumEngine {
    model: ValidatedModel,
    rhs: CorrelationRhs,
}

impl SpectrumEngine {
    pub fn new(model: &ValidatedModel, state: &HarmonicState) -> Self {
        SpectrumEngine { model: *model, rhs: correlation_rhs(state) }
    }

    pub fn model(&self) -> &ValidatedModel {
        &self.model
    }

    pub fn correlation_rhs(&self) -> &CorrelationRhs {
        &self.rhs
    }

    pub fn resolvent(&self, z: C64) -> Result<ResolventSolution> {
        solve_resolvent(&self.model, &self.rhs, z)
    }

    /// All four components at a physical frequency, from one pair of resolvent solves.
    pub fn point(&self, omega: f64) -> Result<SpectralPoint> {
        let l = self.rhs.truncation();
        let delta = (omega - self.model.params().omega_f) / self.model.gamma();
        let solve = |z: C64| resolvent_scaled(&self.model, &self.rhs, z).map(|y| y[l]);
        let lower = solve(-I * delta).map_err(|e| e.at_frequency(omega))?;
        let upper = solve(I * delta).map_err(|e| e.at_frequency(omega))?;

        let sum = (lower[0] + lower[1]) + (upper[0] + upper[1]);
        let diff = (lower[0] - lower[1]) + (upper[0] - upper[1]);
        let asym = lower[0] - upper[0];
        let fx = sum.re / (4.0 * PI);
        let fy = diff.re / (4.0 * PI);
        let fas = asym.re / (2.0 * PI);
        // zero whenever Ȳ(+iΔ) = Ȳ(−iΔ)*
        let pair = lower[0] + upper[0];
        let imag_residue = (sum.im.abs() / (4.0 * PI)).max(diff.im.abs() / (4.0 * PI)).max(pair.im.abs() / (2.0 * PI));
        Ok(SpectralPoint { fx, fy, fas, finc: fx + fy + fas, imag_residue })
    }

    /// `F_X` at one frequency; identical to the matching [`SpectrumEngine::spectrum`] entry.
    pub fn quadrature_at(&self, omega: f64) -> Result<f64> {
        self.point(omega).map(|p| p.fx)
    }

    pub fn points(&self, grid: &[f64]) -> Result<Vec<SpectralPoint>> {
        check_grid(grid)?;
        grid.par_iter().map(|&w| self.point(w)).collect()
    }

    /// Evaluates the grid in parallel; output order follows the grid.
    pub fn spectrum(&self, grid: &[f64]) -> Result<SpectrumTable> {
        let points = self.points(grid)?;
        Ok(SpectrumTable::from_points(grid.to_vec(), &points))
    }

    /// Integrates `F_inc` over the whole frequency axis.
    pub fn sum_rule(&self, rel_tol: f64) -> Result<SumRule> {
        let mut failure = None;
        let integral = integrate_incoherent(
            &self.model,
            self.rhs.truncation(),
            |w| match self.point(w) {
                Ok(p) => p.finc,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            rel_tol,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(SumRule { integral, expected: self.model.gamma() * self.rhs.get(1, 0).re })
    }
}

pub fn spectrum(model: &ValidatedModel, state: &HarmonicState, grid: &[f64]) -> Result<SpectrumTable> {
    SpectrumEngine::new(model, state).spectrum(grid)
}

pub fn quadrature_at(model: &ValidatedModel, state: &HarmonicState, omega: f64) -> Result<f64> {
    SpectrumEngine::new(model, state).quadrature_at(omega)
}
