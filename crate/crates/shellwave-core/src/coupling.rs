//! Nonlinear rescaling of shell strengths, its inverse, and regime
//! classification.
//!
//! Squeezing a regular layer potential of strengths (eta, tau) onto the
//! surface produces the shell operator with the *rescaled* strengths
//! (eta_hat, tau_hat) = factor(d) * (eta, tau), where the factor is the
//! tanh-ratio of sqrt(-d)/2 evaluated through the same cosh/sinh kernels as
//! the shell exponential, so the exponential identity holds by construction.

use crate::clifford::{cosh_sqrt_neg, sinhc_sqrt_neg, CouplingPair};
use crate::error::{Error, Result};

/// Absolute tolerance on d for excluded-set and degenerate-limit detection.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Largest k probed when testing d against the excluded set (2k+1)^2 pi^2.
pub const EXCLUDED_K_MAX: u32 = 64;

/// Rescaled shell strengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Renormalized {
    pub eta_hat: f64,
    pub tau_hat: f64,
    /// Set when the image lands on a degenerate limit value of d_hat,
    /// where statements about the limit operator are restricted.
    pub degenerate: Option<DegenerateLimit>,
}

impl Renormalized {
    pub fn new(eta_hat: f64, tau_hat: f64) -> Self {
        Self {
            eta_hat,
            tau_hat,
            degenerate: None,
        }
    }

    pub fn d_hat(&self) -> f64 {
        self.eta_hat * self.eta_hat - self.tau_hat * self.tau_hat
    }

    pub fn as_pair(&self) -> CouplingPair {
        CouplingPair::new(self.eta_hat, self.tau_hat)
    }
}

/// Degenerate values of d_hat flagged on renormalization output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateLimit {
    /// d_hat = 0 (reached from d = 4 k^2 pi^2, k >= 1).
    ZeroHat,
    /// d_hat = 4, the critical value.
    CriticalHat,
    /// d_hat = -4, the confinement value (only approached, never attained).
    ConfinementHat,
}

/// Coupling regime reached by the rescaling map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Negative,
    Zero,
    PositiveRegular,
    /// d on the pole set (2k+1)^2 pi^2 of the tan branch.
    ExcludedInput,
    /// Image d_hat lands on {0, 4} within tolerance.
    LimitCritical,
    /// Image d_hat lands on -4 within tolerance.
    LimitConfinement,
}

/// Classification result: one regime tag plus an informational flag for
/// inputs sitting exactly on d = -4 (a valid input to the rescaling map;
/// the flag matters only to the *bare* jump construction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingClass {
    pub regime: Regime,
    pub confinement_input: bool,
}

/// Smallest distance from d to the excluded set, with the attaining k.
fn excluded_distance(d: f64) -> (f64, u32) {
    let mut best = (f64::INFINITY, 0u32);
    for k in 0..=EXCLUDED_K_MAX {
        let pole = ((2 * k + 1) as f64 * std::f64::consts::PI).powi(2);
        let dist = (d - pole).abs();
        if dist < best.0 {
            best = (dist, k);
        }
    }
    best
}

/// The scalar rescaling factor tanh(sqrt(-d)/2) / (sqrt(-d)/2), continued
/// analytically through d = 0 and equal to tan(sqrt(d)/2) / (sqrt(d)/2) for
/// d > 0. Poles at d = (2k+1)^2 pi^2 are the caller's concern.
pub fn scaling_factor(d: f64) -> f64 {
    if d.abs() < 1e-6 {
        // Taylor of tanh(x)/x at x^2 = -d/4
        return 1.0 + d / 12.0 + d * d / 120.0 + 17.0 * d * d * d / 20160.0;
    }
    // tanh(t/2)/(t/2) = sinh(t)/t * 2/(1 + cosh t) with t = sqrt(-d)
    2.0 * sinhc_sqrt_neg(d) / (1.0 + cosh_sqrt_neg(d))
}

pub fn classify(c: CouplingPair) -> CouplingClass {
    classify_with_tol(c, CLASSIFY_TOL)
}

pub fn classify_with_tol(c: CouplingPair, tol: f64) -> CouplingClass {
    let d = c.d();
    let confinement_input = (d + 4.0).abs() < tol;
    let (excl_dist, _) = excluded_distance(d);
    let regime = if excl_dist < tol {
        Regime::ExcludedInput
    } else if d.abs() < tol {
        Regime::Zero
    } else {
        let factor = scaling_factor(d);
        let d_hat = d * factor * factor;
        if d_hat.abs() < tol || (d_hat - 4.0).abs() < tol {
            Regime::LimitCritical
        } else if (d_hat + 4.0).abs() < tol {
            Regime::LimitConfinement
        } else if d < 0.0 {
            Regime::Negative
        } else {
            Regime::PositiveRegular
        }
    };
    CouplingClass {
        regime,
        confinement_input,
    }
}

/// Apply the rescaling map. Fails on the excluded set; flags degenerate
/// image values of d_hat without failing.
pub fn renormalize(c: CouplingPair) -> Result<Renormalized> {
    renormalize_with_tol(c, CLASSIFY_TOL)
}

pub fn renormalize_with_tol(c: CouplingPair, tol: f64) -> Result<Renormalized> {
    let d = c.d();
    let (excl_dist, k) = excluded_distance(d);
    if excl_dist < tol {
        return Err(Error::ExcludedInput { d, k, tol });
    }
    let factor = scaling_factor(d);
    let mut out = Renormalized::new(factor * c.eta, factor * c.tau);
    let d_hat = out.d_hat();
    if d != 0.0 && d_hat.abs() < tol {
        out.degenerate = Some(DegenerateLimit::ZeroHat);
    } else if (d_hat - 4.0).abs() < tol {
        out.degenerate = Some(DegenerateLimit::CriticalHat);
    } else if (d_hat + 4.0).abs() < tol {
        out.degenerate = Some(DegenerateLimit::ConfinementHat);
    }
    Ok(out)
}

/// Invert the rescaling map on its principal branch.
///
/// The image of d under the map satisfies d_hat > -4, so inputs with
/// d_hat <= -4 have no preimage. For d_hat > 0 the preimage is multivalued;
/// only the branch continuous through 0 (d in (0, pi^2)) is returned.
pub fn inverse_renormalize(r: &Renormalized) -> Result<CouplingPair> {
    let d_hat = r.d_hat();
    if d_hat <= -4.0 {
        return Err(Error::NoPreimage { d_hat });
    }
    if d_hat == 0.0 {
        return Ok(CouplingPair::new(r.eta_hat, r.tau_hat));
    }
    // d_hat = -4 tanh^2(x) with x = sqrt(-d)/2  (d < 0), or
    // d_hat = +4 tan^2(theta) with theta = sqrt(d)/2  (d > 0, principal).
    let factor = if d_hat < 0.0 {
        let y = (-d_hat).sqrt() / 2.0; // tanh(x)
        let x = y.atanh();
        y / x
    } else {
        let y = d_hat.sqrt() / 2.0; // tan(theta)
        let theta = y.atan();
        y / theta
    };
    Ok(CouplingPair::new(r.eta_hat / factor, r.tau_hat / factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use num_complex::Complex64;

    #[test]
    fn zero_discriminant_is_identity() {
        let r = renormalize(CouplingPair::new(1.0, 1.0)).unwrap();
        assert_eq!((r.eta_hat, r.tau_hat), (1.0, 1.0));
        assert_eq!(classify(CouplingPair::new(1.0, 1.0)).regime, Regime::Zero);
    }

    #[test]
    fn tanh_branch_value() {
        // (0,2): tau_hat = 2 tanh(1)
        let r = renormalize(CouplingPair::new(0.0, 2.0)).unwrap();
        assert!((r.eta_hat).abs() < 1e-15);
        assert!((r.tau_hat - 2.0 * 1.0f64.tanh()).abs() < 1e-14);
        assert!((r.tau_hat - 1.5231883119115297).abs() < 1e-12);
        assert!((r.d_hat() + 2.3201026335438955).abs() < 1e-10);
    }

    #[test]
    fn tan_branch_value() {
        // (1.5, 0): eta_hat = 1.5 tan(0.75)/0.75
        let r = renormalize(CouplingPair::new(1.5, 0.0)).unwrap();
        let expect = 1.5 * 0.75f64.tan() / 0.75;
        assert!((r.eta_hat - expect).abs() < 1e-14);
        assert!((r.eta_hat - 1.8631929198881449).abs() < 1e-12);
        assert!((r.d_hat() - 3.4714878567213114).abs() < 1e-10);
        assert!(r.tau_hat.abs() < 1e-15);
    }

    #[test]
    fn excluded_input_detection() {
        let pi = std::f64::consts::PI;
        let err = renormalize(CouplingPair::new(pi, 0.0)).unwrap_err();
        assert!(matches!(err, Error::ExcludedInput { k: 0, .. }));
        assert_eq!(
            classify(CouplingPair::new(pi, 0.0)).regime,
            Regime::ExcludedInput
        );
        // d = 9 pi^2 (k = 1): eta = 3 pi
        let err = renormalize(CouplingPair::new(3.0 * pi, 0.0)).unwrap_err();
        assert!(matches!(err, Error::ExcludedInput { k: 1, .. }));
    }

    #[test]
    fn confinement_input_is_a_valid_negative_coupling() {
        let class = classify(CouplingPair::new(0.0, 2.0));
        assert_eq!(class.regime, Regime::Negative);
        assert!(class.confinement_input);
        assert!(renormalize(CouplingPair::new(0.0, 2.0)).is_ok());
    }

    #[test]
    fn degenerate_image_flags() {
        // d = 4 k^2 pi^2 maps to d_hat = 0 (factor vanishes)
        let c = CouplingPair::new(2.0 * std::f64::consts::PI, 0.0);
        let r = renormalize(c).unwrap();
        assert_eq!(r.degenerate, Some(DegenerateLimit::ZeroHat));
        assert_eq!(classify(c).regime, Regime::LimitCritical);

        // d = pi^2/4 maps to d_hat = 4 tan^2(pi/4) = 4
        let c = CouplingPair::new(std::f64::consts::PI / 2.0, 0.0);
        let r = renormalize(c).unwrap();
        assert_eq!(r.degenerate, Some(DegenerateLimit::CriticalHat));
        assert_eq!(classify(c).regime, Regime::LimitCritical);
    }

    #[test]
    fn scalar_multiple_property() {
        let mut rng = sampling::rng(31);
        for _ in 0..500 {
            let c = sampling::random_coupling(&mut rng);
            let r = renormalize(c).unwrap();
            assert!(
                (r.eta_hat * c.tau - r.tau_hat * c.eta).abs() < 1e-13,
                "rescaling must be a scalar multiple"
            );
        }
    }

    #[test]
    fn factor_sign_follows_tan() {
        // sqrt(d)/2 in (pi/2, 3pi/2) has negative tan on part of the range
        for &d in &[12.0, 20.0, 30.0, 38.0] {
            let factor = scaling_factor(d);
            let tan = (d.sqrt() / 2.0).tan();
            assert_eq!(factor.signum(), tan.signum(), "d = {d}");
        }
    }

    #[test]
    fn continuity_series_window() {
        for &d in &[1e-3, -1e-3, 5e-4, -2e-4, 1e-5] {
            let f = scaling_factor(d);
            assert!(
                (f - 1.0 - d / 12.0).abs() <= 0.02 * d * d + 1e-15,
                "factor Taylor mismatch at d = {d}"
            );
        }
    }

    #[test]
    fn complex_branch_identity() {
        // tanh(sqrt(-d)/2)/(sqrt(-d)/2) computed in complex arithmetic equals
        // the tan form for d > 0.
        let mut rng = sampling::rng(37);
        for _ in 0..200 {
            let d = sampling::uniform(&mut rng, 0.05, 8.5);
            let half = Complex64::new(-d, 0.0).sqrt() / 2.0;
            let complex_route = (half.tanh() / half).re;
            let tan_route = (d.sqrt() / 2.0).tan() / (d.sqrt() / 2.0);
            assert!(
                (complex_route - tan_route).abs() < 1e-12,
                "branch identity failed at d = {d}"
            );
        }
    }

    #[test]
    fn image_bound_d_hat() {
        let mut rng = sampling::rng(41);
        for _ in 0..10_000 {
            let c = sampling::random_coupling(&mut rng);
            let r = renormalize(c).unwrap();
            assert!(r.d_hat() > -4.0, "image bound violated at ({}, {})", c.eta, c.tau);
        }
    }

    #[test]
    fn inverse_round_trip() {
        // fixed point at d_hat = 0
        let c = inverse_renormalize(&Renormalized::new(1.0, 1.0)).unwrap();
        assert_eq!((c.eta, c.tau), (1.0, 1.0));

        // tanh-branch target
        let c = inverse_renormalize(&Renormalized::new(0.0, 1.523188)).unwrap();
        assert!((c.tau - 2.0).abs() < 1e-5);
        assert!(c.eta.abs() < 1e-15);

        let mut rng = sampling::rng(43);
        for _ in 0..1000 {
            let eta_hat = sampling::uniform(&mut rng, -1.9, 1.9);
            let tau_hat = sampling::uniform(&mut rng, -1.9, 1.9);
            let target = Renormalized::new(eta_hat, tau_hat);
            if target.d_hat() <= -3.9 || target.d_hat().abs() < 1e-10 {
                continue;
            }
            let c = inverse_renormalize(&target).unwrap();
            let r = renormalize(c).unwrap();
            assert!((r.eta_hat - eta_hat).abs() < 1e-10);
            assert!((r.tau_hat - tau_hat).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_no_preimage() {
        let err = inverse_renormalize(&Renormalized::new(0.0, 2.0)).unwrap_err();
        assert!(matches!(err, Error::NoPreimage { .. }));
        let err = inverse_renormalize(&Renormalized::new(0.0, 3.0)).unwrap_err();
        assert!(matches!(err, Error::NoPreimage { .. }));
    }
}
