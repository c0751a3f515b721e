//! Mollifier profiles, the scaled family, and the one-sided primitive that
//! drives the twist field.
//!
//! A profile is a bounded function supported in (-1, 1) with unit mass. At
//! the support endpoints the evaluators return the one-sided interior
//! values, so layer integrators sampling exactly at the boundary see the
//! interior limit (the endpoint set has measure zero for every integral).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

/// Quadrature tolerance for profile integrals.
pub const MASS_TOL: f64 = 1e-12;

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A mollifier profile h on (-1, 1).
#[derive(Clone)]
pub struct Profile {
    name: String,
    h: ProfileFn,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile").field("name", &self.name).finish()
    }
}

impl Profile {
    pub fn new(name: impl Into<String>, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            h: Arc::new(h),
        }
    }

    /// Constant 1/2 on (-1, 1).
    pub fn box_profile() -> Self {
        Self::new("box", |t| if t.abs() <= 1.0 { 0.5 } else { 0.0 })
    }

    /// Hat function 1 - |t|.
    pub fn triangle() -> Self {
        Self::new("triangle", |t: f64| (1.0 - t.abs()).max(0.0))
    }

    /// Raised cosine (1 + cos(pi t)) / 2.
    pub fn raised_cosine() -> Self {
        Self::new("cosine", |t: f64| {
            if t.abs() <= 1.0 {
                0.5 * (1.0 + (std::f64::consts::PI * t).cos())
            } else {
                0.0
            }
        })
    }

    /// Linear ramp (1 + t) / 2: unit mass but uneven half-line masses
    /// (1/4 left of the origin, 3/4 right).
    pub fn asymmetric_linear() -> Self {
        Self::new("asymmetric", |t| {
            if t.abs() <= 1.0 {
                0.5 * (1.0 + t)
            } else {
                0.0
            }
        })
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "box" => Some(Self::box_profile()),
            "triangle" => Some(Self::triangle()),
            "cosine" => Some(Self::raised_cosine()),
            "asymmetric" => Some(Self::asymmetric_linear()),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["box", "triangle", "cosine", "asymmetric"]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The unscaled profile value h(t).
    pub fn h(&self, t: f64) -> f64 {
        (self.h)(t)
    }

    /// The scaled family value h_eps(p) = h(p/eps)/eps.
    pub fn h_eps(&self, eps: f64, p: f64) -> f64 {
        self.h(p / eps) / eps
    }

    /// Integral of h over (lo, hi) within (-1, 1).
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(-1.0);
        let hi = hi.min(1.0);
        if lo >= hi {
            return 0.0;
        }
        adaptive_simpson(&|t| self.h(t), lo, hi, MASS_TOL)
    }

    /// Total mass over (-1, 1).
    pub fn mass(&self) -> f64 {
        self.integral(-1.0, 0.0) + self.integral(0.0, 1.0)
    }

    /// Half-line mass over (0, 1).
    pub fn mass_plus(&self) -> f64 {
        self.integral(0.0, 1.0)
    }

    /// Half-line mass over (-1, 0).
    pub fn mass_minus(&self) -> f64 {
        self.integral(-1.0, 0.0)
    }

    /// Check boundedness (sampled), support and unit mass; report-based.
    pub fn validate(&self) -> ProfileReport {
        let n = 4001;
        let mut sup: f64 = 0.0;
        for i in 0..n {
            let t = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            let v = self.h(t);
            if !v.is_finite() {
                sup = f64::INFINITY;
                break;
            }
            sup = sup.max(v.abs());
        }
        let mut outside: f64 = 0.0;
        for &t in &[-4.0, -2.5, -1.5, -1.0001, 1.0001, 1.5, 2.5, 4.0] {
            outside = outside.max(self.h(t).abs());
        }
        let mass = self.mass();
        let bounded = sup.is_finite();
        let support_ok = outside == 0.0;
        let mass_ok = (mass - 1.0).abs() < 1e-9;
        ProfileReport {
            name: self.name.clone(),
            sup_norm: sup,
            max_outside_support: outside,
            mass,
            pass: bounded && support_ok && mass_ok,
        }
    }
}

/// Measured profile properties.
#[derive(Debug, Clone)]
pub struct ProfileReport {
    pub name: String,
    pub sup_norm: f64,
    pub max_outside_support: f64,
    pub mass: f64,
    pub pass: bool,
}

/// The one-sided primitive of the scaled profile:
/// the tail integral of h_eps from p up to eps for p > 0, minus the head
/// integral from -eps up to p for p < 0, and zero outside the layer.
/// Undefined at p = 0; the one-sided limits are cached.
#[derive(Debug, Clone)]
pub struct Primitive {
    profile: Profile,
    eps: f64,
    mass_plus: f64,
    mass_minus: f64,
}

impl Primitive {
    pub fn new(profile: Profile, eps: f64) -> Result<Self> {
        if eps <= 0.0 || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mollifier width must be positive, got {eps}"
            )));
        }
        let mass_plus = profile.mass_plus();
        let mass_minus = profile.mass_minus();
        Ok(Self {
            profile,
            eps,
            mass_plus,
            mass_minus,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// H_eps(p); fails exactly at p = 0 where only one-sided limits exist.
    pub fn eval(&self, p: f64) -> Result<f64> {
        if p == 0.0 {
            return Err(Error::EvaluationAtZero);
        }
        Ok(self.eval_scaled(p / self.eps))
    }

    /// H_eps at p = t * eps for t != 0 (scale-free form).
    pub fn eval_scaled(&self, t: f64) -> f64 {
        if t >= 1.0 || t <= -1.0 {
            0.0
        } else if t > 0.0 {
            self.mass_plus - self.profile.integral(0.0, t)
        } else {
            -(self.mass_minus - self.profile.integral(t, 0.0))
        }
    }

    /// Limit from the positive-offset side, H_eps(0+).
    pub fn limit_plus(&self) -> f64 {
        self.mass_plus
    }

    /// Limit from the negative-offset side, H_eps(0-).
    pub fn limit_minus(&self) -> f64 {
        -self.mass_minus
    }
}
