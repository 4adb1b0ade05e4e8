//! Steady-state Floquet harmonics of the Bloch vector.
//!
//! In the frame rotating at the drive frequency the Bloch vector
//! `(⟨S̃⁻⟩, ⟨S̃⁺⟩, ⟨S^z⟩)` is still modulated at `ω_f` by the permanent-dipole
//! coupling `δ_a`. Expanding each component as `Σ_l X^(l) e^{ilω_f t}` turns
//! the periodic Bloch equations into an infinite block-tridiagonal system in
//! the harmonic index `l`; the coupling between neighbouring harmonics is
//! `∓iδ_a/2` on the two coherences and zero on the inversion. Truncating at
//! `|l| ≤ L` and setting the slow time derivatives to zero gives the steady
//! state solved here.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{diag_block, BlockTridiagonal, Block3, Vec3};
use crate::model::{Rates, ValidatedModel};

/// Cap on the truncation order searched by [`auto_truncation`].
pub const DEFAULT_TRUNCATION_CAP: usize = 32;
/// Default convergence tolerance of [`auto_truncation`].
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;
/// Relative residual every steady solve must reach.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Truncated Floquet amplitudes `X_i^(l)`, `|l| ≤ L`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicState {
    truncation: usize,
    /// Amplitudes of ⟨S̃⁻⟩, stored at `l + L`.
    pub x1: Vec<C64>,
    /// Amplitudes of ⟨S̃⁺⟩.
    pub x2: Vec<C64>,
    /// Amplitudes of ⟨S^z⟩.
    pub x3: Vec<C64>,
}

impl HarmonicState {
    pub(crate) fn from_harmonics(truncation: usize, h: &[Vec3]) -> Self {
        debug_assert_eq!(h.len(), 2 * truncation + 1);
        HarmonicState {
            truncation,
            x1: h.iter().map(|v| v[0]).collect(),
            x2: h.iter().map(|v| v[1]).collect(),
            x3: h.iter().map(|v| v[2]).collect(),
        }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Harmonic indices `-L..=L` in storage order.
    pub fn indices(&self) -> impl Iterator<Item = i64> + Clone {
        let l = self.truncation as i64;
        -l..=l
    }

    /// `X_i^(l)` for component `i ∈ {1, 2, 3}`; zero outside the truncation window.
    pub fn get(&self, component: usize, l: i64) -> C64 {
        let ll = self.truncation as i64;
        if l.abs() > ll {
            return ZERO;
        }
        let k = (l + ll) as usize;
        match component {
            1 => self.x1[k],
            2 => self.x2[k],
            3 => self.x3[k],
            _ => panic!("Bloch component must be 1, 2 or 3, got {component}"),
        }
    }

    pub fn harmonic(&self, l: i64) -> Vec3 {
        [self.get(1, l), self.get(2, l), self.get(3, l)]
    }

    pub fn max_amplitude(&self) -> f64 {
        self.x1.iter().chain(&self.x2).chain(&self.x3).map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest violation of `X_2^(l) = conj(X_1^(-l))` and `X_3^(l) = conj(X_3^(-l))`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.indices()
            .map(|l| {
                let a = (self.get(2, l) - self.get(1, -l).conj()).norm();
                let b = (self.get(3, l) - self.get(3, -l).conj()).norm();
                a.max(b)
            })
            .fold(0.0, f64::max)
    }

    fn harmonics(&self) -> Vec<Vec3> {
        self.indices().map(|l| self.harmonic(l)).collect()
    }
}

/// Truncated harmonic-balance system `dX/dt = A·X + f`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonalSystem {
    pub truncation: usize,
    /// The generator `A`, in physical rate units.
    pub operator: BlockTridiagonal,
    /// The inhomogeneity `f`; only the `l = 0` entry is nonzero.
    pub rhs: Vec<Vec3>,
}

impl BlockTridiagonalSystem {
    pub fn block_size(&self) -> usize {
        3
    }

    /// Solves `A·X = -f` for the fixed point.
    pub fn solve(&self) -> Result<HarmonicState> {
        let neg: Vec<Vec3> = self.rhs.iter().map(|v| [-v[0], -v[1], -v[2]]).collect();
        let x = self
            .operator
            .solve(&neg)
            .map_err(|s| Error::SingularSystem { block: s.block })?;
        let residual = self.operator.relative_residual(&x, &neg);
        if residual > RESIDUAL_TOLERANCE {
            return Err(Error::Residual { residual, tolerance: RESIDUAL_TOLERANCE });
        }
        Ok(HarmonicState::from_harmonics(self.truncation, &x))
    }
}

/// Diagonal block of the generator at harmonic `l`, shifted by `shift`.
pub(crate) fn generator_block(rates: &Rates, l: i64, shift: C64) -> Block3 {
    let Rates { omega_f, rabi, detuning, n, m, .. } = *rates;
    let lw = I * (l as f64 * omega_f);
    let coh = C64::from(-(0.5 + n));
    let rabi = C64::from(rabi);
    [
        [coh + I * detuning - lw + shift, m, rabi],
        [m.conj(), coh - I * detuning - lw + shift, rabi],
        [-0.5 * rabi, -0.5 * rabi, C64::from(-(2.0 * n + 1.0)) - lw + shift],
    ]
}

/// Coupling block between neighbouring harmonics.
pub(crate) fn coupling_block(rates: &Rates) -> Block3 {
    let h = 0.5 * rates.delta_a;
    diag_block([-I * h, I * h, ZERO])
}

/// Generator `A` (times `scale`) in Γ = 1 units, optionally shifted: `scale·(A + shift)`.
pub(crate) fn assemble(rates: &Rates, truncation: usize, shift: C64, scale: f64) -> BlockTridiagonal {
    let l = truncation as i64;
    let s = |b: Block3| b.map(|row| row.map(|c| c * scale));
    let diag = (-l..=l).map(|k| s(generator_block(rates, k, shift))).collect();
    let c = s(coupling_block(rates));
    BlockTridiagonal::new(diag, vec![c; 2 * truncation], vec![c; 2 * truncation])
}

fn inhomogeneity(truncation: usize, scale: f64) -> Vec<Vec3> {
    let mut f = vec![[ZERO; 3]; 2 * truncation + 1];
    f[truncation][2] = C64::from(-0.5 * scale);
    f
}

/// Harmonic-balance system for `|l| ≤ truncation` in physical units.
pub fn build_system(model: &ValidatedModel, truncation: usize) -> BlockTridiagonalSystem {
    let g = model.gamma();
    BlockTridiagonalSystem {
        truncation,
        operator: assemble(model.rates(), truncation, ZERO, g),
        rhs: inhomogeneity(truncation, g),
    }
}

/// Closed-form steady state for an undriven transition.
fn undriven(model: &ValidatedModel, truncation: usize) -> HarmonicState {
    let mut h = vec![[ZERO; 3]; 2 * truncation + 1];
    h[truncation][2] = C64::from(-0.5 / model.damping_factor());
    HarmonicState::from_harmonics(truncation, &h)
}

/// Steady-state amplitudes for a fixed truncation order.
pub fn solve_steady(model: &ValidatedModel, truncation: usize) -> Result<HarmonicState> {
    if model.rates().rabi == 0.0 {
        return Ok(undriven(model, truncation));
    }
    let system = BlockTridiagonalSystem {
        truncation,
        operator: assemble(model.rates(), truncation, ZERO, 1.0),
        rhs: inhomogeneity(truncation, 1.0),
    };
    system.solve()
}

/// Smallest truncation order whose solution is converged to `tol`.
///
/// Order `L` is accepted when the outermost retained harmonics are below
/// `tol` relative to the largest amplitude and the `l = 0` amplitudes move
/// by less than `tol` when one more harmonic is added. The edge test can
/// only pass at `L = 0` when there is no inter-harmonic coupling, which is
/// answered directly.
pub fn auto_truncation(model: &ValidatedModel, tol: f64, cap: usize) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("truncation tolerance must be positive, got {tol}")));
    }
    if model.rates().rabi == 0.0 || model.rates().delta_a == 0.0 {
        return Ok(0);
    }
    let mut current = solve_steady(model, 0)?;
    for l in 0..=cap {
        let next = solve_steady(model, l + 1)?;
        let li = l as i64;
        let edge_ok = {
            let scale = current.max_amplitude();
            let edge = [li, -li]
                .iter()
                .flat_map(|&k| current.harmonic(k))
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            edge < tol * scale
        };
        let shift = (1..=3)
            .map(|i| (next.get(i, 0) - current.get(i, 0)).norm())
            .fold(0.0, f64::max);
        if edge_ok && shift < tol {
            return Ok(l);
        }
        current = next;
    }
    Err(Error::NoConvergence { cap })
}

/// `Σ_l X_i^(l) e^{ilω_f t}` for the three components at physical time `t`.
pub fn reconstruct_bloch(state: &HarmonicState, model: &ValidatedModel, t: f64) -> (C64, C64, f64) {
    let wf = model.params().omega_f;
    let mut acc = [ZERO; 3];
    for l in state.indices() {
        let phase = C64::from_polar(1.0, l as f64 * wf * t);
        let h = state.harmonic(l);
        for k in 0..3 {
            acc[k] += h[k] * phase;
        }
    }
    debug_assert!(acc[2].im.abs() <= 1e-10 * (1.0 + acc[2].re.abs()));
    (acc[0], acc[1], acc[2].re)
}

/// Applies the physical generator of `model` to `state` and returns the relative residual.
pub fn steady_residual(model: &ValidatedModel, state: &HarmonicState) -> f64 {
    let system = build_system(model, state.truncation());
    let neg: Vec<Vec3> = system.rhs.iter().map(|v| [-v[0], -v[1], -v[2]]).collect();
    system.operator.relative_residual(&state.harmonics(), &neg)
}
