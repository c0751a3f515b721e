//! Dense 4x4 Dirac-matrix algebra over the spinor space.
//!
//! Provides the alpha/beta matrices, the shell matrix `eta*I + tau*beta`,
//! the half-jump matrix `M`, the jump matrix relating one-sided traces, and
//! shell exponentials both in closed eigenprojection form and by a generic
//! scaling-and-squaring matrix exponential used as an independent oracle.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance below which `d` is treated as sitting on the confinement value -4.
pub const CONFINEMENT_TOL: f64 = 1e-9;

/// Documented range for the generic matrix exponential (Frobenius norm).
pub const EXPM_MAX_NORM: f64 = 500.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Electrostatic / Lorentz-scalar shell strengths.
///
/// The discriminant `d = eta^2 - tau^2` is always recomputed from the pair,
/// never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingPair {
    pub eta: f64,
    pub tau: f64,
}

impl CouplingPair {
    pub fn new(eta: f64, tau: f64) -> Self {
        Self { eta, tau }
    }

    /// Discriminant `d = eta^2 - tau^2`.
    pub fn d(&self) -> f64 {
        self.eta * self.eta - self.tau * self.tau
    }

    /// The scalar `D = sqrt(-d)` in complex arithmetic; purely imaginary
    /// for d > 0.
    pub fn big_d(&self) -> Complex64 {
        Complex64::new(-self.d(), 0.0).sqrt()
    }
}

/// Dense 4x4 complex matrix over the Dirac spinor space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorMatrix {
    pub e: [[Complex64; 4]; 4],
}

impl SpinorMatrix {
    pub fn zero() -> Self {
        Self { e: [[ZERO; 4]; 4] }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for k in 0..4 {
            m.e[k][k] = ONE;
        }
        m
    }

    pub fn from_rows(rows: [[Complex64; 4]; 4]) -> Self {
        Self { e: rows }
    }

    /// Diagonal matrix from four complex entries.
    pub fn diag(d: [Complex64; 4]) -> Self {
        let mut m = Self::zero();
        for k in 0..4 {
            m.e[k][k] = d[k];
        }
        m
    }

    /// Dirac matrix alpha_k (k in 1..=3), off-diagonal Pauli blocks.
    pub fn alpha(k: usize) -> Self {
        assert!((1..=3).contains(&k), "alpha index must be 1, 2 or 3");
        let s = pauli(k);
        let mut m = Self::zero();
        for r in 0..2 {
            for c in 0..2 {
                m.e[r][c + 2] = s[r][c];
                m.e[r + 2][c] = s[r][c];
            }
        }
        m
    }

    /// Dirac matrix beta = diag(1, 1, -1, -1).
    pub fn beta() -> Self {
        Self::diag([ONE, ONE, -ONE, -ONE])
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut m = *self;
        for r in 0..4 {
            for k in 0..4 {
                m.e[r][k] *= c;
            }
        }
        m
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = *self;
        for r in 0..4 {
            for c in 0..4 {
                m.e[r][c] += other.e[r][c];
            }
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut m = *self;
        for r in 0..4 {
            for c in 0..4 {
                m.e[r][c] -= other.e[r][c];
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = Self::zero();
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += self.e[r][k] * other.e[k][c];
                }
                m.e[r][c] = acc;
            }
        }
        m
    }

    pub fn apply(&self, v: &[Complex64; 4]) -> [Complex64; 4] {
        let mut out = [ZERO; 4];
        for r in 0..4 {
            for k in 0..4 {
                out[r] += self.e[r][k] * v[k];
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero();
        for r in 0..4 {
            for c in 0..4 {
                m.e[r][c] = self.e[c][r].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        self.e[0][0] + self.e[1][1] + self.e[2][2] + self.e[3][3]
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                acc += self.e[r][c].norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.sub(&self.adjoint()).frobenius_norm() < tol
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> Complex64 {
        let mut a = self.e;
        let mut det = ONE;
        for col in 0..4 {
            let mut piv = col;
            for r in col + 1..4 {
                if a[r][col].norm() > a[piv][col].norm() {
                    piv = r;
                }
            }
            if a[piv][col].norm() == 0.0 {
                return ZERO;
            }
            if piv != col {
                a.swap(piv, col);
                det = -det;
            }
            det *= a[col][col];
            for r in col + 1..4 {
                let factor = a[r][col] / a[col][col];
                for c in col..4 {
                    a[r][c] = a[r][c] - factor * a[col][c];
                }
            }
        }
        det
    }
}

/// Pauli matrix sigma_k as a 2x2 block.
fn pauli(k: usize) -> [[Complex64; 2]; 2] {
    match k {
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => unreachable!(),
    }
}

/// alpha . v = sum_j v_j alpha_j. The argument need not be a unit vector.
pub fn alpha_dot(v: [f64; 3]) -> SpinorMatrix {
    let mut m = SpinorMatrix::zero();
    for (j, &vj) in v.iter().enumerate() {
        m = m.add(&SpinorMatrix::alpha(j + 1).scale_re(vj));
    }
    m
}

/// Shell matrix B = eta*I + tau*beta; Hermitian and diagonal.
pub fn shell_matrix(c: CouplingPair) -> SpinorMatrix {
    SpinorMatrix::identity()
        .scale_re(c.eta)
        .add(&SpinorMatrix::beta().scale_re(c.tau))
}

/// Half-jump matrix M = (i alpha.nu / 2) B; satisfies M^2 = -(d/4) I.
pub fn half_jump(nu: [f64; 3], c: CouplingPair) -> SpinorMatrix {
    alpha_dot(nu).scale(I * 0.5).mul(&shell_matrix(c))
}

/// Jump matrix relating one-sided traces across the shell,
/// `(4/(4+d)) (((4-d)/4) I + i alpha.nu B)`.
///
/// Fails with [`Error::ConfinementCase`] when `d` is within `tol` of -4,
/// where `I - M` is singular.
pub fn jump_matrix_with_tol(nu: [f64; 3], c: CouplingPair, tol: f64) -> Result<SpinorMatrix> {
    let d = c.d();
    if (d + 4.0).abs() < tol {
        return Err(Error::ConfinementCase { tol });
    }
    let front = 4.0 / (4.0 + d);
    let m = SpinorMatrix::identity()
        .scale_re((4.0 - d) / 4.0)
        .add(&alpha_dot(nu).scale(I).mul(&shell_matrix(c)));
    Ok(m.scale_re(front))
}

pub fn jump_matrix(nu: [f64; 3], c: CouplingPair) -> Result<SpinorMatrix> {
    jump_matrix_with_tol(nu, c, CONFINEMENT_TOL)
}

/// cosh(sqrt(-x)), real-analytic in x: equals cos(sqrt(x)) for x > 0.
pub fn cosh_sqrt_neg(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        // sum (-x)^n / (2n)!
        1.0 - x / 2.0 + x * x / 24.0 - x * x * x / 720.0
    } else if x < 0.0 {
        (-x).sqrt().cosh()
    } else {
        x.sqrt().cos()
    }
}

/// sinh(sqrt(-x))/sqrt(-x), real-analytic in x: equals sin(sqrt(x))/sqrt(x)
/// for x > 0 and 1 at x = 0.
pub fn sinhc_sqrt_neg(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        // sum (-x)^n / (2n+1)!
        1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0
    } else if x < 0.0 {
        let t = (-x).sqrt();
        t.sinh() / t
    } else {
        let t = x.sqrt();
        t.sin() / t
    }
}

/// exp(t * i alpha.nu B) in closed form:
/// cosh(tD) I + (sinh(tD)/(tD)) * t * (i alpha.nu B), with D = sqrt(-d).
///
/// Both scalar coefficients are real for real couplings, so the result is
/// computed without complex branches.
pub fn exp_shell_scaled(nu: [f64; 3], c: CouplingPair, t: f64) -> SpinorMatrix {
    let x = t * t * c.d(); // (tD)^2 = -x
    let cosh = cosh_sqrt_neg(x);
    let sinhc = sinhc_sqrt_neg(x);
    SpinorMatrix::identity()
        .scale_re(cosh)
        .add(&alpha_dot(nu).scale(I).mul(&shell_matrix(c)).scale_re(t * sinhc))
}

/// Shell exponential exp(i alpha.nu B).
pub fn exp_shell(nu: [f64; 3], c: CouplingPair) -> SpinorMatrix {
    exp_shell_scaled(nu, c, 1.0)
}

/// Spectral projections onto the +-D eigenspaces of i alpha.nu B,
/// `P_pm = (I +- i alpha.nu B / D) / 2`. None when d is too close to 0
/// (the two eigenvalues collide).
pub fn eigenprojections(nu: [f64; 3], c: CouplingPair) -> Option<(SpinorMatrix, SpinorMatrix)> {
    let d = c.d();
    if d.abs() < 1e-12 {
        return None;
    }
    let big_d = c.big_d();
    let core = alpha_dot(nu)
        .scale(I)
        .mul(&shell_matrix(c))
        .scale(ONE / big_d);
    let plus = SpinorMatrix::identity().add(&core).scale_re(0.5);
    let minus = SpinorMatrix::identity().sub(&core).scale_re(0.5);
    Some((plus, minus))
}

/// Generic matrix exponential by scaling and squaring with a Taylor kernel.
///
/// Relative error below 1e-12 for Frobenius norms up to ~20; refuses norms
/// beyond [`EXPM_MAX_NORM`] where entries overflow doubles.
pub fn expm(a: &SpinorMatrix) -> Result<SpinorMatrix> {
    let norm = a.frobenius_norm();
    if !norm.is_finite() || norm > EXPM_MAX_NORM {
        return Err(Error::Overflow {
            norm,
            max: EXPM_MAX_NORM,
        });
    }
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale_re(0.5f64.powi(squarings as i32));
    // Taylor with Horner evaluation; norm <= 0.25 makes 18 terms ample.
    let mut result = SpinorMatrix::identity();
    for n in (1..=18u32).rev() {
        result = SpinorMatrix::identity().add(&scaled.mul(&result).scale_re(1.0 / n as f64));
    }
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    Ok(result)
}
