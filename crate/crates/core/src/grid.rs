//! Frequency grids for spectrum evaluation.

use crate::error::{Error, Result};
use crate::model::ValidatedModel;

/// Density multiplier inside refinement bands.
pub const REFINEMENT: usize = 5;

fn check_window(min: f64, max: f64, points: usize) -> Result<()> {
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::InvalidGrid(format!("window [{min}, {max}] is not finite")));
    }
    if min >= max {
        return Err(Error::InvalidGrid(format!("window [{min}, {max}] is empty")));
    }
    if points < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 points, got {points}")));
    }
    Ok(())
}

/// `points` equally spaced values from `min` to `max` inclusive.
pub fn uniform(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    check_window(min, max, points)?;
    let span = max - min;
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| if i + 1 == points { max } else { min + span * i as f64 / last }).collect())
}

/// Frequencies around which the spectrum has structure: `±Ω_R`, `ω_f` and `ω_f ± Ω_R`.
pub fn feature_centers(model: &ValidatedModel) -> Vec<f64> {
    let p = model.params();
    vec![-p.rabi, p.rabi, p.omega_f - p.rabi, p.omega_f, p.omega_f + p.rabi]
}

/// Uniform base grid plus `REFINEMENT`× denser sampling in bands of width
/// `20Γ(2N+1)` centred on [`feature_centers`].
///
/// All points lie on the fine lattice of the window, so the base points
/// are reproduced exactly.
pub fn refined(model: &ValidatedModel, min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    check_window(min, max, points)?;
    let fine = (points - 1) * REFINEMENT;
    let span = max - min;
    let at = |j: usize| if j == fine { max } else { min + span * j as f64 / fine as f64 };
    let half_band = 10.0 * model.gamma() * model.damping_factor();

    let mut keep = vec![false; fine + 1];
    for j in (0..=fine).step_by(REFINEMENT) {
        keep[j] = true;
    }
    for c in feature_centers(model) {
        let (lo, hi) = (c - half_band, c + half_band);
        if hi < min || lo > max {
            continue;
        }
        let first = ((lo - min) * fine as f64 / span - 1e-9).ceil().max(0.0) as usize;
        let last = (((hi - min) * fine as f64 / span + 1e-9).floor().max(0.0) as usize).min(fine);
        for flag in keep.iter_mut().take(last + 1).skip(first) {
            *flag = true;
        }
    }
    Ok(keep.iter().enumerate().filter(|(_, k)| **k).map(|(j, _)| at(j)).collect())
}
