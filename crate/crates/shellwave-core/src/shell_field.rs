//! The squeezed layer potential and the twist field that transports
//! one-sided traces across the shrinking layer: values, one-sided traces,
//! and gradients with the singular normal term split from the bounded
//! tangential remainder.

use std::sync::Arc;

use num_complex::Complex64;

use crate::clifford::{alpha_dot, exp_shell_scaled, shell_matrix, CouplingPair, SpinorMatrix};
use crate::error::{Error, Result};
use crate::geometry::{vec3, Surface, Vec3};
use crate::mollifier::{Primitive, Profile};
use crate::quad::gauss_legendre_16;

const IM: Complex64 = Complex64::new(0.0, 1.0);

/// Layer potential: the shell matrix times the scaled profile of the
/// normal offset, vanishing outside the layer.
#[derive(Debug, Clone)]
pub struct PotentialField {
    surface: Arc<Surface>,
    coupling: CouplingPair,
    eps: f64,
    profile: Profile,
}

impl PotentialField {
    pub fn new(
        surface: Arc<Surface>,
        coupling: CouplingPair,
        eps: f64,
        profile: Profile,
    ) -> Result<Self> {
        check_layer_width(&surface, eps)?;
        Ok(Self {
            surface,
            coupling,
            eps,
            profile,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Potential value at a spatial point; zero outside the layer.
    /// Projection non-convergence propagates.
    pub fn value_at(&self, x: Vec3) -> Result<SpinorMatrix> {
        match self.surface.project(x) {
            Ok(tp) => {
                if tp.p.abs() >= self.eps {
                    return Ok(SpinorMatrix::zero());
                }
                let h = self.profile.h_eps(self.eps, tp.p);
                Ok(shell_matrix(self.coupling).scale_re(h))
            }
            Err(Error::OutsideTube { .. }) => Ok(SpinorMatrix::zero()),
            Err(e) => Err(e),
        }
    }
}

/// One-sided limits of the twist field on the surface.
#[derive(Debug, Clone, Copy)]
pub struct TwistTraces {
    /// Limit from the bounded interior side (negative normal offsets).
    pub from_inside: SpinorMatrix,
    /// Limit from the exterior side (positive normal offsets).
    pub from_outside: SpinorMatrix,
}

/// One directional derivative of the twist field, split into the singular
/// normal term and the bounded tangential remainder.
#[derive(Debug, Clone, Copy)]
pub struct TwistGradient {
    pub total: SpinorMatrix,
    pub normal_part: SpinorMatrix,
    pub remainder: SpinorMatrix,
}

/// The matrix field exp(i alpha.nu B * H_eps(p)) interpolating the trace
/// jump across the layer; identity outside it, undefined on the surface.
#[derive(Debug, Clone)]
pub struct TwistField {
    surface: Arc<Surface>,
    coupling: CouplingPair,
    primitive: Primitive,
}

impl TwistField {
    pub fn new(
        surface: Arc<Surface>,
        coupling: CouplingPair,
        eps: f64,
        profile: Profile,
    ) -> Result<Self> {
        check_layer_width(&surface, eps)?;
        Ok(Self {
            surface,
            coupling,
            primitive: Primitive::new(profile, eps)?,
        })
    }

    pub fn eps(&self) -> f64 {
        self.primitive.eps()
    }

    pub fn coupling(&self) -> CouplingPair {
        self.coupling
    }

    /// Twist value at a point off the surface; identity outside the layer.
    pub fn value_at(&self, x: Vec3) -> Result<SpinorMatrix> {
        let eps = self.eps();
        match self.surface.project(x) {
            Ok(tp) => {
                if tp.p.abs() < 1e-14 {
                    return Err(Error::OnSurface { p_abs: tp.p.abs() });
                }
                if tp.p.abs() >= eps {
                    return Ok(SpinorMatrix::identity());
                }
                let nu = self.surface.chart(tp.cap).normal(tp.s)?;
                let h_val = self.primitive.eval(tp.p)?;
                Ok(exp_shell_scaled(nu, self.coupling, h_val))
            }
            Err(Error::OutsideTube { .. }) => Ok(SpinorMatrix::identity()),
            Err(e) => Err(e),
        }
    }

    /// One-sided surface traces, computed from the half-line masses of the
    /// profile rather than by taking limits of `value_at`.
    pub fn traces_at(&self, x_on_surface: Vec3) -> Result<TwistTraces> {
        let tp = self.surface.project(x_on_surface)?;
        let nu = self.surface.chart(tp.cap).normal(tp.s)?;
        Ok(self.traces_for_normal(nu))
    }

    /// Traces for a given outward normal direction.
    pub fn traces_for_normal(&self, nu: Vec3) -> TwistTraces {
        TwistTraces {
            from_inside: exp_shell_scaled(nu, self.coupling, self.primitive.limit_minus()),
            from_outside: exp_shell_scaled(nu, self.coupling, self.primitive.limit_plus()),
        }
    }

    /// Directional derivative along axis `j` (0..3), decomposed into the
    /// profile-singular normal term and the quadrature remainder carrying
    /// the chart derivative of the exponent through the tube factor.
    pub fn gradient_at(&self, x: Vec3, j: usize) -> Result<TwistGradient> {
        Ok(self.gradient_all(x)?[j])
    }

    /// All three directional derivatives, sharing one projection.
    pub fn gradient_all(&self, x: Vec3) -> Result<[TwistGradient; 3]> {
        let eps = self.eps();
        let zero = TwistGradient {
            total: SpinorMatrix::zero(),
            normal_part: SpinorMatrix::zero(),
            remainder: SpinorMatrix::zero(),
        };
        let tp = match self.surface.project(x) {
            Ok(tp) => tp,
            Err(Error::OutsideTube { .. }) => return Ok([zero; 3]),
            Err(e) => return Err(e),
        };
        if tp.p.abs() < 1e-14 {
            return Err(Error::OnSurface { p_abs: tp.p.abs() });
        }
        if tp.p.abs() >= eps {
            return Ok([zero; 3]);
        }
        let chart = self.surface.chart(tp.cap);
        let nu = chart.normal(tp.s)?;
        let dnu = chart.normal_derivs(tp.s)?;
        let (_, grad_s) = self.surface.projection_gradients(&tp)?;

        let b = shell_matrix(self.coupling);
        let h_val = self.primitive.eval(tp.p)?;
        let h_eps = self.primitive.profile().h_eps(eps, tp.p);
        let twist = exp_shell_scaled(nu, self.coupling, h_val);
        let exponent = alpha_dot(nu).scale(IM).mul(&b);
        let d_exponent = [
            alpha_dot(dnu[0]).scale(IM).mul(&b),
            alpha_dot(dnu[1]).scale(IM).mul(&b),
        ];

        let mut out = [zero; 3];
        for (j, slot) in out.iter_mut().enumerate() {
            let normal_part = exponent.mul(&twist).scale_re(-h_eps * nu[j]);
            // chart-coordinate derivative of the exponent carried through
            // the projection Jacobian, scaled by the primitive
            let middle = d_exponent[0]
                .scale_re(grad_s[0][j])
                .add(&d_exponent[1].scale_re(grad_s[1][j]))
                .scale_re(h_val);
            let mut remainder = SpinorMatrix::zero();
            for &(z, w) in gauss_legendre_16(0.0, 1.0).iter() {
                let left = exp_shell_scaled(nu, self.coupling, z * h_val);
                let right = exp_shell_scaled(nu, self.coupling, (1.0 - z) * h_val);
                remainder = remainder.add(&left.mul(&middle).mul(&right).scale_re(w));
            }
            *slot = TwistGradient {
                total: normal_part.add(&remainder),
                normal_part,
                remainder,
            };
        }
        Ok(out)
    }

    /// The contracted remainder -i sum_j alpha_j E_j.
    pub fn remainder_at(&self, x: Vec3) -> Result<SpinorMatrix> {
        let grads = self.gradient_all(x)?;
        let mut acc = SpinorMatrix::zero();
        for (j, g) in grads.iter().enumerate() {
            acc = acc.add(&SpinorMatrix::alpha(j + 1).mul(&g.remainder));
        }
        Ok(acc.scale(-IM))
    }
}

fn check_layer_width(surface: &Surface, eps: f64) -> Result<()> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "layer half-width must be positive, got {eps}"
        )));
    }
    let gamma = surface.max_tube_width();
    if eps >= gamma {
        return Err(Error::InvalidParameter(format!(
            "layer half-width {eps} must stay below the tube width {gamma}"
        )));
    }
    Ok(())
}
