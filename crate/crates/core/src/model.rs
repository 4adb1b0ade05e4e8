//! Physical parameters of the emitter, the drive and the squeezed bath.
//!
//! Everything downstream consumes a [`ValidatedModel`]. Validation rescales
//! all rates by the radiative damping rate, so the solvers always work with
//! `gamma == 1`; public entry points accept and return physical units.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Below this ratio `omega_f / gamma` the rotating-wave picture is suspect.
pub const RWA_RATIO: f64 = 10.0;

/// Raw model parameters, all rates in the same (arbitrary) unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Radiative damping rate Γ.
    pub gamma: f64,
    /// Atomic transition frequency.
    pub omega0: f64,
    /// Drive frequency.
    pub omega_f: f64,
    /// Carrier frequency of the squeezed bath. Must equal `omega_f`.
    pub omega_s: f64,
    /// Rabi frequency of the transition dipole coupling.
    pub rabi: f64,
    /// Drive coupling to the permanent dipole difference (symmetry violation).
    pub delta_a: f64,
    /// Squeezing degree.
    pub r: f64,
    /// Squeezing phase in radians.
    pub theta: f64,
}

impl ModelParams {
    /// Resonant parameters: `omega0 == omega_f == omega_s`.
    pub fn resonant(gamma: f64, omega: f64, rabi: f64, delta_a: f64, r: f64, theta: f64) -> Self {
        ModelParams { gamma, omega0: omega, omega_f: omega, omega_s: omega, rabi, delta_a, r, theta }
    }

    pub fn validate(&self) -> Result<ValidatedModel> {
        validate(*self)
    }
}

/// Bath moments `N(r) = sinh²r` and `M(r, θ) = cosh r · sinh r · e^{iθ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingMoments {
    pub n: f64,
    pub m: C64,
}

pub fn squeezing_moments(r: f64, theta: f64) -> Result<SqueezingMoments> {
    if !r.is_finite() {
        return Err(Error::NonFinite("r"));
    }
    if !theta.is_finite() {
        return Err(Error::NonFinite("theta"));
    }
    if r < 0.0 {
        return Err(Error::NegativeSqueezing(r));
    }
    let (s, c) = (r.sinh(), r.cosh());
    Ok(SqueezingMoments { n: s * s, m: C64::from_polar(c * s, normalize_phase(theta)) })
}

/// `(omega_f - omega0) / gamma`.
pub fn detuning(params: &ModelParams) -> f64 {
    (params.omega_f - params.omega0) / params.gamma
}

/// Maps an angle into `[0, 2π)`.
pub fn normalize_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Rates in units of Γ, as used by every solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Rates {
    pub omega_f: f64,
    pub rabi: f64,
    pub delta_a: f64,
    pub detuning: f64,
    pub n: f64,
    pub m: C64,
}

/// Parameters that passed every check, plus the derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedModel {
    params: ModelParams,
    detuning: f64,
    moments: SqueezingMoments,
    rwa_warning: bool,
    rates: Rates,
}

pub fn validate(params: ModelParams) -> Result<ValidatedModel> {
    let fields = [
        ("gamma", params.gamma),
        ("omega0", params.omega0),
        ("omega_f", params.omega_f),
        ("omega_s", params.omega_s),
        ("rabi", params.rabi),
        ("delta_a", params.delta_a),
        ("r", params.r),
        ("theta", params.theta),
    ];
    if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(name));
    }
    if params.gamma <= 0.0 {
        return Err(Error::NonPositiveGamma(params.gamma));
    }
    if params.rabi < 0.0 {
        return Err(Error::NegativeRabi(params.rabi));
    }
    if params.r < 0.0 {
        return Err(Error::NegativeSqueezing(params.r));
    }
    if params.omega_s != params.omega_f {
        return Err(Error::CarrierMismatch { omega_s: params.omega_s, omega_f: params.omega_f });
    }

    let params = ModelParams { theta: normalize_phase(params.theta), ..params };
    let moments = squeezing_moments(params.r, params.theta)?;
    let detuning = detuning(&params);
    let g = params.gamma;
    Ok(ValidatedModel {
        params,
        detuning,
        moments,
        rwa_warning: params.omega_f < RWA_RATIO * g,
        rates: Rates {
            omega_f: params.omega_f / g,
            rabi: params.rabi / g,
            delta_a: params.delta_a / g,
            detuning,
            n: moments.n,
            m: moments.m,
        },
    })
}

impl ValidatedModel {
    /// The parameters as given, with θ normalized into `[0, 2π)`.
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    /// Dimensionless detuning δ.
    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn moments(&self) -> SqueezingMoments {
        self.moments
    }

    /// Set when `omega_f < 10 gamma`, where the rotating-wave model is doubtful.
    pub fn rwa_warning(&self) -> bool {
        self.rwa_warning
    }

    /// Effective incoherent damping factor `2N + 1`.
    pub fn damping_factor(&self) -> f64 {
        2.0 * self.moments.n + 1.0
    }

    /// Same physics with a different squeezing degree.
    pub fn with_r(&self, r: f64) -> Result<ValidatedModel> {
        validate(ModelParams { r, ..self.params })
    }

    /// Same physics with a different squeezing phase.
    pub fn with_theta(&self, theta: f64) -> Result<ValidatedModel> {
        validate(ModelParams { theta, ..self.params })
    }

    pub(crate) fn rates(&self) -> &Rates {
        &self.rates
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fig1() -> ModelParams {
        ModelParams::resonant(1.0, 5000.0, 100.0, 10.0, 0.0, 0.0)
    }

    #[test]
    fn fig1_parameters_validate() {
        let m = validate(fig1()).unwrap();
        assert_eq!(m.detuning(), 0.0);
        assert_eq!(m.moments().n, 0.0);
        assert_eq!(m.moments().m, C64::new(0.0, 0.0));
        assert!(!m.rwa_warning());
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = ModelParams { omega_s: 4000.0, ..fig1() };
        assert!(matches!(validate(p), Err(Error::CarrierMismatch { .. })));
        let p = ModelParams { gamma: -1.0, ..fig1() };
        assert_eq!(validate(p), Err(Error::NonPositiveGamma(-1.0)));
        let p = ModelParams { gamma: 0.0, ..fig1() };
        assert_eq!(validate(p), Err(Error::NonPositiveGamma(0.0)));
        let p = ModelParams { rabi: -2.0, ..fig1() };
        assert_eq!(validate(p), Err(Error::NegativeRabi(-2.0)));
        let p = ModelParams { r: -0.1, ..fig1() };
        assert_eq!(validate(p), Err(Error::NegativeSqueezing(-0.1)));
        let p = ModelParams { delta_a: f64::NAN, ..fig1() };
        assert_eq!(validate(p), Err(Error::NonFinite("delta_a")));
    }

    #[test]
    fn rwa_flag() {
        let p = ModelParams::resonant(1.0, 5.0, 1.0, 0.0, 0.0, 0.0);
        assert!(validate(p).unwrap().rwa_warning());
    }

    #[test]
    fn detuning_examples() {
        let p = |wf: f64, g: f64| ModelParams { omega_f: wf, omega_s: wf, gamma: g, ..fig1() };
        assert_eq!(detuning(&p(5000.0, 1.0)), 0.0);
        assert_eq!(detuning(&p(5001.0, 1.0)), 1.0);
        assert_eq!(detuning(&p(4999.0, 2.0)), -0.5);
    }

    #[test]
    fn moments_examples() {
        let z = squeezing_moments(0.0, 1.3).unwrap();
        assert_eq!(z.n, 0.0);
        assert_eq!(z.m, C64::new(0.0, 0.0));

        // mpmath, 30 digits
        let one = squeezing_moments(1.0, 0.0).unwrap();
        assert_relative_eq!(one.n, 1.381_097_845_541_815_7, max_relative = 1e-14);
        assert_relative_eq!(one.m.re, 1.813_430_203_923_509_4, max_relative = 1e-14);
        assert_eq!(one.m.im, 0.0);

        let half = squeezing_moments(0.5, std::f64::consts::FRAC_PI_2).unwrap();
        assert_relative_eq!(half.n, 0.271_540_317_407_621_9, max_relative = 1e-14);
        assert!(half.m.re.abs() < 1e-15);
        assert_relative_eq!(half.m.im, 0.587_600_596_821_900_7, max_relative = 1e-14);

        assert_eq!(squeezing_moments(-1.0, 0.0), Err(Error::NegativeSqueezing(-1.0)));
    }

    #[test]
    fn theta_is_normalized() {
        let m = validate(ModelParams { theta: -std::f64::consts::FRAC_PI_2, ..fig1() }).unwrap();
        assert_relative_eq!(m.params().theta, 1.5 * std::f64::consts::PI, max_relative = 1e-15);
        assert_eq!(normalize_phase(-1e-300), 0.0);
        assert_eq!(normalize_phase(TAU), 0.0);
    }

    #[test]
    fn rates_are_in_gamma_units() {
        let p = ModelParams::resonant(2.0, 400.0, 40.0, 8.0, 0.3, 1.0);
        let m = validate(p).unwrap();
        let r = m.rates();
        assert_eq!(r.omega_f, 200.0);
        assert_eq!(r.rabi, 20.0);
        assert_eq!(r.delta_a, 4.0);
    }

    proptest! {
        #[test]
        fn hyperbolic_identity(r in 0.0f64..3.0, theta in 0.0f64..TAU) {
            let s = squeezing_moments(r, theta).unwrap();
            let lhs = s.m.norm_sqr();
            let rhs = s.n * (s.n + 1.0);
            prop_assert!(s.n >= 0.0);
            if rhs > 0.0 {
                prop_assert!(((lhs - rhs) / rhs).abs() <= 1e-12);
            } else {
                prop_assert_eq!(lhs, 0.0);
            }
        }

        #[test]
        fn moments_are_2pi_periodic(r in 0.0f64..3.0, theta in -10.0f64..10.0) {
            let a = squeezing_moments(r, theta).unwrap();
            let b = squeezing_moments(r, theta + TAU).unwrap();
            prop_assert_eq!(a.n, b.n);
            prop_assert!((a.m - b.m).norm() <= 1e-14 * (1.0 + a.m.norm()));
        }

        #[test]
        fn detuning_is_antisymmetric(w0 in -1e4f64..1e4, wf in -1e4f64..1e4, g in 0.01f64..10.0) {
            let p = ModelParams { gamma: g, omega0: w0, omega_f: wf, ..fig1() };
            let q = ModelParams { gamma: g, omega0: wf, omega_f: w0, ..fig1() };
            prop_assert_eq!(detuning(&p), -detuning(&q));
        }
    }
}
