//! Sphere-restricted spectral solver: partial-wave channels, modified
//! spherical Bessel machinery, shell eigenvalues in the gap via a 2x2 jump
//! matrix, and regularized-layer eigenvalues via transfer-matrix
//! integration.
//!
//! Radial reductions act on the reduced two-component spinor u = (f, g)
//! with measure dr. The 2x2 image of the shell matrix is
//! `Bt = diag(eta + tau, eta - tau)`; the working matrix `X2 = [[0,-1],[1,0]]`
//! squares to -I and anticommutes with the Bt-diagonal part exactly like
//! the 4x4 algebra, so the same scalar kernels drive both. The jump matrix
//! maps the trace on the interior side (r < R0) to the exterior side; that
//! orientation is pinned by the layer-transfer limit, not assumed.
//!
//! Second-kind Bessel convention: k_l(x) = sqrt(pi/(2x)) K_{l+1/2}(x), so
//! k_0(x) = (pi/2) e^{-x} / x. All closed forms route through it.

use serde::{Deserialize, Serialize};

use crate::clifford::{cosh_sqrt_neg, sinhc_sqrt_neg, CouplingPair};
use crate::error::{Error, Result};
use crate::mollifier::Profile;

/// Largest Bessel order served.
pub const MAX_BESSEL_ORDER: usize = 40;

/// Argument bound before first-kind values overflow doubles.
pub const BESSEL_MAX_ARG: f64 = 700.0;

/// Largest |kappa| exposed by the solvers.
pub const MAX_KAPPA: i32 = 10;

/// Margin keeping scan windows away from the gap edges.
pub const GAP_MARGIN: f64 = 1e-6;

pub type Mat2 = [[f64; 2]; 2];

pub mod mat2 {
    use super::Mat2;

    pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

    /// Radial image of i alpha.nu used by the interior-to-exterior maps.
    pub const X2: Mat2 = [[0.0, -1.0], [1.0, 0.0]];

    pub fn mul(a: Mat2, b: Mat2) -> Mat2 {
        [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ]
    }

    pub fn matvec(a: Mat2, v: [f64; 2]) -> [f64; 2] {
        [
            a[0][0] * v[0] + a[0][1] * v[1],
            a[1][0] * v[0] + a[1][1] * v[1],
        ]
    }

    pub fn add(a: Mat2, b: Mat2) -> Mat2 {
        [
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ]
    }

    pub fn scale(a: Mat2, c: f64) -> Mat2 {
        [[a[0][0] * c, a[0][1] * c], [a[1][0] * c, a[1][1] * c]]
    }

    pub fn det(a: Mat2) -> f64 {
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    pub fn sub(a: Mat2, b: Mat2) -> Mat2 {
        add(a, scale(b, -1.0))
    }

    pub fn norm(a: Mat2) -> f64 {
        (a[0][0] * a[0][0] + a[0][1] * a[0][1] + a[1][0] * a[1][0] + a[1][1] * a[1][1]).sqrt()
    }
}

/// 2x2 image of the shell matrix: diag(eta + tau, eta - tau).
pub fn shell_matrix_2(c: CouplingPair) -> Mat2 {
    [[c.eta + c.tau, 0.0], [0.0, c.eta - c.tau]]
}

/// exp(t X2 Bt) in closed form through the shared scalar kernels.
pub fn exp_shell_2(c: CouplingPair, t: f64) -> Mat2 {
    let x = t * t * c.d();
    let xb = mat2::mul(mat2::X2, shell_matrix_2(c));
    mat2::add(
        mat2::scale(mat2::IDENTITY, cosh_sqrt_neg(x)),
        mat2::scale(xb, t * sinhc_sqrt_neg(x)),
    )
}

/// Partial-wave channel: spin-orbit number, mass and shell radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub kappa: i32,
    pub mass: f64,
    pub shell_radius: f64,
}

impl Channel {
    pub fn new(kappa: i32, mass: f64, shell_radius: f64) -> Result<Self> {
        if kappa == 0 || kappa.abs() > MAX_KAPPA {
            return Err(Error::InvalidParameter(format!(
                "kappa must be a nonzero integer with |kappa| <= {MAX_KAPPA}, got {kappa}"
            )));
        }
        if mass <= 0.0 || !mass.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if shell_radius <= 0.0 || !shell_radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "shell radius must be positive, got {shell_radius}"
            )));
        }
        Ok(Self {
            kappa,
            mass,
            shell_radius,
        })
    }

    /// Orbital indices of the upper and lower reduced components.
    pub fn orbital_pair(&self) -> (usize, usize) {
        if self.kappa > 0 {
            (self.kappa as usize, self.kappa as usize - 1)
        } else {
            ((-self.kappa - 1) as usize, (-self.kappa) as usize)
        }
    }
}

/// Modified spherical Bessel values of both kinds with derivatives.
#[derive(Debug, Clone, Copy)]
pub struct BesselPair {
    pub i: f64,
    pub k: f64,
    pub i_prime: f64,
    pub k_prime: f64,
}

/// Start order of the downward recurrence: the minimal solution separates
/// from the dominant one like exp((L^2 - l^2)/x), so the headroom must
/// grow with sqrt(x) to reach full precision at large arguments.
fn miller_start(top: usize, x: f64) -> usize {
    top + 32 + (40.0 * x).sqrt().ceil() as usize
}

/// First-kind ladder i_0..i_top by downward recurrence with sinh
/// normalization; stable because i_l is the minimal solution.
fn bessel_i_ladder(top: usize, x: f64) -> Result<Vec<f64>> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Bessel argument must be positive, got {x}"
        )));
    }
    if x > BESSEL_MAX_ARG {
        return Err(Error::Overflow {
            norm: x,
            max: BESSEL_MAX_ARG,
        });
    }
    let start = miller_start(top, x);
    let mut fp1 = 0.0f64; // trial value at order start+1
    let mut f = 1.0f64; // trial value at order start
    let mut ladder = vec![0.0f64; top + 1];
    for l in (0..=start).rev() {
        // i_{l} = i_{l+2} + (2l+3)/x * i_{l+1}
        let fm1 = fp1 + ((2 * l + 3) as f64 / x) * f;
        fp1 = f;
        f = fm1;
        if l <= top {
            ladder[l] = f;
        }
        if f > 1e260 {
            let s = 1e-260;
            f *= s;
            fp1 *= s;
            for v in ladder.iter_mut() {
                *v *= s;
            }
        }
    }
    // normalize through ratios (ladder entries decrease with order, so the
    // ratios stay in [0, 1] and never overflow even when i_0 is huge)
    let i0 = x.sinh() / x;
    let l0 = ladder[0];
    for v in ladder.iter_mut() {
        *v = (*v / l0) * i0;
    }
    Ok(ladder)
}

/// Second-kind ladder k_0..k_top by upward recurrence (dominant solution).
fn bessel_k_ladder(top: usize, x: f64) -> Result<Vec<f64>> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Bessel argument must be positive, got {x}"
        )));
    }
    let front = std::f64::consts::FRAC_PI_2 * (-x).exp() / x;
    let mut ladder = vec![0.0f64; top + 1];
    ladder[0] = front;
    if top >= 1 {
        ladder[1] = front * (1.0 + 1.0 / x);
    }
    for l in 1..top {
        ladder[l + 1] = ladder[l - 1] + ((2 * l + 1) as f64 / x) * ladder[l];
    }
    Ok(ladder)
}

/// Values and derivatives of i_l and k_l at x.
pub fn bessel_pair(l: usize, x: f64) -> Result<BesselPair> {
    if l > MAX_BESSEL_ORDER {
        return Err(Error::InvalidParameter(format!(
            "Bessel order must be at most {MAX_BESSEL_ORDER}, got {l}"
        )));
    }
    let iv = bessel_i_ladder(l + 1, x)?;
    let kv = bessel_k_ladder(l + 1, x)?;
    let lf = l as f64;
    Ok(BesselPair {
        i: iv[l],
        k: kv[l],
        i_prime: iv[l + 1] + lf / x * iv[l],
        k_prime: -kv[l + 1] + lf / x * kv[l],
    })
}

/// Scaled first-kind value i_l(x) e^{-x}, safe for large arguments.
pub fn bessel_i_scaled(l: usize, x: f64) -> Result<f64> {
    if x <= BESSEL_MAX_ARG {
        return Ok(bessel_i_ladder(l, x)?[l] * (-x).exp());
    }
    // for x this large the ladder ratios are benign; normalize downward
    // recurrence against i_0(x) e^{-x} = (1 - e^{-2x}) / (2x)
    let start = miller_start(l, x);
    let mut fp1 = 0.0f64;
    let mut f = 1e-280f64;
    let mut at_l = 0.0;
    let mut at_0 = 0.0;
    for j in (0..=start).rev() {
        let fm1 = fp1 + ((2 * j + 3) as f64 / x) * f;
        fp1 = f;
        f = fm1;
        if j == l {
            at_l = f;
        }
        if j == 0 {
            at_0 = f;
        }
    }
    let i0s = (1.0 - (-2.0 * x).exp()) / (2.0 * x);
    Ok(at_l / at_0 * i0s)
}

/// Which side of the shell a free solution lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Interior,
    Exterior,
}

/// Free gap solution of the radial system at energy |E| < m: regular at the
/// origin in the interior, exponentially decaying in the exterior.
pub fn free_solution(energy: f64, ch: &Channel, region: Region, r: f64) -> Result<[f64; 2]> {
    let m = ch.mass;
    if energy.abs() >= m {
        return Err(Error::InvalidParameter(format!(
            "gap solutions need |E| < m, got E = {energy}, m = {m}"
        )));
    }
    let k = (m * m - energy * energy).sqrt();
    let x = k * r;
    let (l, lt) = ch.orbital_pair();
    match region {
        Region::Interior => {
            let il = bessel_i_ladder(l.max(lt), x)?;
            Ok([(energy + m) * r * il[l], k * r * il[lt]])
        }
        Region::Exterior => {
            let kl = bessel_k_ladder(l.max(lt), x)?;
            Ok([(energy + m) * r * kl[l], -k * r * kl[lt]])
        }
    }
}

/// Coefficient matrix of the radial first-order system
/// u' = A(r) u with the layer potential folded in through `v_scale`.
fn system_matrix(ch: &Channel, energy: f64, r: f64, h_eps: f64, c: CouplingPair) -> Mat2 {
    let kr = ch.kappa as f64 / r;
    [
        [-kr, energy + ch.mass - (c.eta - c.tau) * h_eps],
        [ch.mass - energy + (c.eta + c.tau) * h_eps, kr],
    ]
}

/// Jump matrix mapping the interior trace to the exterior trace.
///
/// Bare form: `(I - X2 Bt / 2)^{-1} (I + X2 Bt / 2)` in the closed
/// expression `(4/(4+d)) (((4-d)/4) I + X2 Bt)`; fails at the confinement
/// value d = -4. Renormalized form: exp(X2 Bt), defined for every coupling;
/// the bare form at the rescaled coupling equals the renormalized form at
/// the bare coupling.
pub fn radial_jump(c: CouplingPair, renormalized: bool) -> Result<Mat2> {
    if renormalized {
        return Ok(exp_shell_2(c, 1.0));
    }
    let d = c.d();
    if (d + 4.0).abs() < crate::clifford::CONFINEMENT_TOL {
        return Err(Error::ConfinementCase {
            tol: crate::clifford::CONFINEMENT_TOL,
        });
    }
    let xb = mat2::mul(mat2::X2, shell_matrix_2(c));
    Ok(mat2::scale(
        mat2::add(mat2::scale(mat2::IDENTITY, (4.0 - d) / 4.0), xb),
        4.0 / (4.0 + d),
    ))
}

/// Solver knobs; the defaults match the shipped experiments.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverParams {
    /// Sign-scan nodes across the energy window.
    pub scan_nodes: usize,
    /// Absolute bisection tolerance on the energy.
    pub bisect_tol: f64,
    /// Matching-residual bound for accepted eigenvalues.
    pub residual_tol: f64,
    /// Minimum transfer-matrix integration steps across the layer.
    pub min_layer_steps: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            scan_nodes: 2000,
            bisect_tol: 1e-12,
            residual_tol: 1e-8,
            min_layer_steps: 512,
        }
    }
}

/// Energy window inside the spectral gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn gap(ch: &Channel) -> Self {
        Self {
            lo: -ch.mass + GAP_MARGIN,
            hi: ch.mass - GAP_MARGIN,
        }
    }

    pub fn validated(&self, ch: &Channel) -> Result<Self> {
        if !(self.lo < self.hi) {
            return Err(Error::InvalidParameter(format!(
                "empty window [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.lo < -ch.mass + GAP_MARGIN / 2.0 || self.hi > ch.mass - GAP_MARGIN / 2.0 {
            return Err(Error::InvalidParameter(format!(
                "window [{}, {}] must stay inside the gap (-{m}, {m}) by margin {GAP_MARGIN:e}",
                self.lo,
                self.hi,
                m = ch.mass
            )));
        }
        Ok(*self)
    }
}

/// An eigenvalue in the gap with its matching residual.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GapEigenvalue {
    pub energy: f64,
    pub residual: f64,
}

fn normalize2(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

/// Matching determinant for the shell problem: sine of the angle between
/// the jump image of the interior solution and the exterior solution.
fn delta_matching(ch: &Channel, jump: Mat2, energy: f64) -> Result<f64> {
    let r0 = ch.shell_radius;
    let a = normalize2(mat2::matvec(
        jump,
        free_solution(energy, ch, Region::Interior, r0)?,
    ));
    let b = normalize2(free_solution(energy, ch, Region::Exterior, r0)?);
    Ok(a[0] * b[1] - a[1] * b[0])
}

fn scan_roots<F: Fn(f64) -> Result<f64>>(
    f: &F,
    window: Window,
    params: &SolverParams,
) -> Result<Vec<GapEigenvalue>> {
    let n = params.scan_nodes.max(8);
    let mut prev_e = window.lo;
    let mut prev_v = f(prev_e)?;
    let mut out = Vec::new();
    for i in 1..n {
        let e = window.lo + (window.hi - window.lo) * i as f64 / (n - 1) as f64;
        let v = f(e)?;
        if prev_v == 0.0 {
            out.push(GapEigenvalue {
                energy: prev_e,
                residual: 0.0,
            });
        } else if prev_v.signum() != v.signum() {
            let (mut lo, mut hi, mut flo) = (prev_e, e, prev_v);
            while hi - lo > params.bisect_tol {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm == 0.0 || flo.signum() == fm.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if fm == 0.0 {
                    break;
                }
            }
            let root = 0.5 * (lo + hi);
            out.push(GapEigenvalue {
                energy: root,
                residual: f(root)?.abs(),
            });
        }
        prev_e = e;
        prev_v = v;
    }
    Ok(out)
}

/// Shell eigenvalues in the window for the given (already renormalized or
/// intrinsically singular) coupling.
pub fn delta_eigenvalues(
    ch: &Channel,
    c_hat: CouplingPair,
    window: Window,
    params: &SolverParams,
) -> Result<Vec<GapEigenvalue>> {
    let window = window.validated(ch)?;
    let jump = radial_jump(c_hat, false)?;
    scan_roots(&|e| delta_matching(ch, jump, e), window, params)
}

/// Transfer matrix propagating (f, g) across the layer [R0-eps, R0+eps].
///
/// Classic fourth-order Runge-Kutta on the scaled layer coordinate with
/// dyadic nodes, so profile kinks at the endpoints and center always land
/// on step boundaries. The step count is
/// max(min_layer_steps, 64 * ceil(sup |h|)).
pub fn layer_transfer(
    ch: &Channel,
    c: CouplingPair,
    eps: f64,
    profile: &Profile,
    energy: f64,
    params: &SolverParams,
) -> Result<Mat2> {
    if eps <= 0.0 || eps >= ch.shell_radius / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "layer half-width must lie in (0, R0/2), got {eps}"
        )));
    }
    let sup = profile.validate().sup_norm;
    let steps = params.min_layer_steps.max(64 * sup.ceil() as usize);
    let dt = 2.0 / steps as f64;
    if eps * dt < 1e-15 * ch.shell_radius {
        return Err(Error::StepUnderflow { step: eps * dt });
    }
    // cache h at nodes and midpoints
    let mut h_cache = Vec::with_capacity(2 * steps + 1);
    for i in 0..=(2 * steps) {
        h_cache.push(profile.h(-1.0 + i as f64 * dt / 2.0) / eps);
    }
    let rhs = |t: f64, h: f64, m: Mat2| -> Mat2 {
        let r = ch.shell_radius + eps * t;
        mat2::scale(mat2::mul(system_matrix(ch, energy, r, h, c), m), eps)
    };
    let mut transfer = mat2::IDENTITY;
    for i in 0..steps {
        let t = -1.0 + i as f64 * dt;
        let (h0, h1, h2) = (h_cache[2 * i], h_cache[2 * i + 1], h_cache[2 * i + 2]);
        let k1 = rhs(t, h0, transfer);
        let k2 = rhs(t + dt / 2.0, h1, mat2::add(transfer, mat2::scale(k1, dt / 2.0)));
        let k3 = rhs(t + dt / 2.0, h1, mat2::add(transfer, mat2::scale(k2, dt / 2.0)));
        let k4 = rhs(t + dt, h2, mat2::add(transfer, mat2::scale(k3, dt)));
        let incr = mat2::add(mat2::add(k1, k4), mat2::scale(mat2::add(k2, k3), 2.0));
        transfer = mat2::add(transfer, mat2::scale(incr, dt / 6.0));
    }
    Ok(transfer)
}

fn regularized_matching(
    ch: &Channel,
    c: CouplingPair,
    eps: f64,
    profile: &Profile,
    energy: f64,
    params: &SolverParams,
) -> Result<f64> {
    let r0 = ch.shell_radius;
    let transfer = layer_transfer(ch, c, eps, profile, energy, params)?;
    let a = normalize2(mat2::matvec(
        transfer,
        free_solution(energy, ch, Region::Interior, r0 - eps)?,
    ));
    let b = normalize2(free_solution(energy, ch, Region::Exterior, r0 + eps)?);
    Ok(a[0] * b[1] - a[1] * b[0])
}

/// Eigenvalues of the layer-regularized operator in the window.
pub fn regularized_eigenvalues(
    ch: &Channel,
    c: CouplingPair,
    eps: f64,
    profile: &Profile,
    window: Window,
    params: &SolverParams,
) -> Result<Vec<GapEigenvalue>> {
    let window = window.validated(ch)?;
    scan_roots(
        &|e| regularized_matching(ch, c, eps, profile, e, params),
        window,
        params,
    )
}

/// Which eigenvalue problem an eigenfunction belongs to.
#[derive(Debug, Clone)]
pub enum EigenProblem {
    Delta { coupling_hat: CouplingPair },
    Regularized {
        coupling: CouplingPair,
        eps: f64,
        profile: Profile,
    },
}

/// A normalized shell eigenfunction in closed form: side coefficients on
/// the free solutions, evaluable at any radius.
#[derive(Debug, Clone)]
pub struct DeltaMode {
    pub channel: Channel,
    pub coupling_hat: CouplingPair,
    pub energy: f64,
    coeff_in: f64,
    coeff_out: f64,
    pub trace_residual: f64,
}

impl DeltaMode {
    /// Build the mode at an eigenvalue produced by [`delta_eigenvalues`].
    pub fn new(
        ch: &Channel,
        c_hat: CouplingPair,
        energy: f64,
        params: &SolverParams,
    ) -> Result<Self> {
        let jump = radial_jump(c_hat, false)?;
        let residual = delta_matching(ch, jump, energy)?.abs();
        if residual > params.residual_tol {
            return Err(Error::NotAnEigenvalue {
                residual,
                tol: params.residual_tol,
            });
        }
        let r0 = ch.shell_radius;
        let target = mat2::matvec(jump, free_solution(energy, ch, Region::Interior, r0)?);
        let ext = free_solution(energy, ch, Region::Exterior, r0)?;
        let coeff_out = (target[0] * ext[0] + target[1] * ext[1]) / (ext[0] * ext[0] + ext[1] * ext[1]);
        let trace_residual = {
            let rx = target[0] - coeff_out * ext[0];
            let ry = target[1] - coeff_out * ext[1];
            (rx * rx + ry * ry).sqrt() / (target[0] * target[0] + target[1] * target[1]).sqrt()
        };
        let mut mode = Self {
            channel: *ch,
            coupling_hat: c_hat,
            energy,
            coeff_in: 1.0,
            coeff_out,
            trace_residual,
        };
        let norm = mode.norm_sq_quadrature().sqrt();
        mode.coeff_in /= norm;
        mode.coeff_out /= norm;
        Ok(mode)
    }

    /// Decay rate in the exterior, sqrt(m^2 - E^2).
    pub fn decay_rate(&self) -> f64 {
        (self.channel.mass * self.channel.mass - self.energy * self.energy).sqrt()
    }

    /// End of the numerically relevant exterior tail.
    pub fn tail_radius(&self) -> f64 {
        self.channel.shell_radius + 40.0 / self.decay_rate()
    }

    pub fn value_interior(&self, r: f64) -> Result<[f64; 2]> {
        let v = free_solution(self.energy, &self.channel, Region::Interior, r)?;
        Ok([self.coeff_in * v[0], self.coeff_in * v[1]])
    }

    pub fn value_exterior(&self, r: f64) -> Result<[f64; 2]> {
        let v = free_solution(self.energy, &self.channel, Region::Exterior, r)?;
        Ok([self.coeff_out * v[0], self.coeff_out * v[1]])
    }

    /// Value by side of the shell (interior branch at r = R0).
    pub fn value(&self, r: f64) -> Result<[f64; 2]> {
        if r <= self.channel.shell_radius {
            self.value_interior(r)
        } else {
            self.value_exterior(r)
        }
    }

    /// Radial derivative via the free system matrix.
    pub fn derivative(&self, r: f64) -> Result<[f64; 2]> {
        let u = self.value(r)?;
        let a = system_matrix(&self.channel, self.energy, r, 0.0, CouplingPair::new(0.0, 0.0));
        Ok(mat2::matvec(a, u))
    }

    fn norm_sq_quadrature(&self) -> f64 {
        let r0 = self.channel.shell_radius;
        let inner = simpson_norm(|r| self.value_interior(r).unwrap(), r0 * 1e-6, r0, 8000);
        let outer = simpson_norm(
            |r| self.value_exterior(r).unwrap(),
            r0,
            self.tail_radius(),
            16000,
        );
        inner + outer
    }
}

/// Composite-Simpson integral of |u|^2 over [a, b] with n intervals.
fn simpson_norm<F: Fn(f64) -> [f64; 2]>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let sq = |r: f64| {
        let u = f(r);
        u[0] * u[0] + u[1] * u[1]
    };
    let mut acc = sq(a) + sq(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * sq(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Two-component values sampled on a strictly increasing radial grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSpinor {
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl RadialSpinor {
    fn from_samples<F: Fn(f64) -> [f64; 2]>(eval: F, a: f64, b: f64, n: usize) -> Self {
        let n = if n % 2 == 0 { n } else { n + 1 };
        let mut r = Vec::with_capacity(n + 1);
        let mut fv = Vec::with_capacity(n + 1);
        let mut gv = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let ri = a + (b - a) * i as f64 / n as f64;
            let u = eval(ri);
            r.push(ri);
            fv.push(u[0]);
            gv.push(u[1]);
        }
        Self { r, f: fv, g: gv }
    }

    /// Squared L2 norm over the stored grid. The grid is split into
    /// maximal uniform runs (concatenated one-sided grids change spacing at
    /// the junctions) and each run is integrated by composite Simpson,
    /// falling back to the 3/8 rule for an odd tail.
    pub fn norm_sq(&self) -> f64 {
        let n = self.r.len();
        let sq = |i: usize| self.f[i] * self.f[i] + self.g[i] * self.g[i];
        if n < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        let mut start = 0;
        while start + 1 < n {
            let h = self.r[start + 1] - self.r[start];
            let mut end = start + 1;
            while end + 1 < n && (self.r[end + 1] - self.r[end] - h).abs() < 1e-9 * h.abs() {
                end += 1;
            }
            let mut m = end - start; // intervals in this uniform run
            let mut hi = end;
            let mut tail = 0.0;
            if m >= 3 && m % 2 == 1 {
                // 3/8 rule on the last three intervals
                tail = 3.0 * h / 8.0 * (sq(hi - 3) + 3.0 * sq(hi - 2) + 3.0 * sq(hi - 1) + sq(hi));
                hi -= 3;
                m -= 3;
            }
            if m == 1 {
                total += 0.5 * h * (sq(start) + sq(hi));
            } else if m >= 2 {
                let mut acc = sq(start) + sq(hi);
                for i in start + 1..hi {
                    let w = if (i - start) % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * sq(i);
                }
                total += acc * h / 3.0;
            }
            total += tail;
            start = end;
        }
        total
    }
}

/// A glued, normalized bound state sampled on one-sided grids; the shell
/// eigenfunctions jump at R0, so each side carries its own boundary value.
#[derive(Debug, Clone)]
pub struct BoundState {
    pub energy: f64,
    pub inside: RadialSpinor,
    pub outside: RadialSpinor,
    pub trace_residual: f64,
}

/// Glued normalized eigenfunction for either solver.
pub fn eigenfunction(
    ch: &Channel,
    problem: &EigenProblem,
    energy: f64,
    params: &SolverParams,
) -> Result<BoundState> {
    match problem {
        EigenProblem::Delta { coupling_hat } => {
            let mode = DeltaMode::new(ch, *coupling_hat, energy, params)?;
            let r0 = ch.shell_radius;
            let inside = RadialSpinor::from_samples(
                |r| mode.value_interior(r).unwrap(),
                r0 * 1e-6,
                r0,
                8000,
            );
            let outside = RadialSpinor::from_samples(
                |r| mode.value_exterior(r).unwrap(),
                r0,
                mode.tail_radius(),
                16000,
            );
            Ok(BoundState {
                energy,
                inside,
                outside,
                trace_residual: mode.trace_residual,
            })
        }
        EigenProblem::Regularized {
            coupling,
            eps,
            profile,
        } => {
            let residual = regularized_matching(ch, *coupling, *eps, profile, energy, params)?.abs();
            if residual > params.residual_tol {
                return Err(Error::NotAnEigenvalue {
                    residual,
                    tol: params.residual_tol,
                });
            }
            let r0 = ch.shell_radius;
            let k = (ch.mass * ch.mass - energy * energy).sqrt();
            // dense layer propagation from the interior boundary value
            let sup = profile.validate().sup_norm;
            let steps = params.min_layer_steps.max(64 * sup.ceil() as usize);
            let steps = if steps % 2 == 0 { steps } else { steps + 1 };
            let dt = 2.0 / steps as f64;
            let mut u = free_solution(energy, ch, Region::Interior, r0 - eps)?;
            let mut layer_r = vec![r0 - eps];
            let mut layer_u = vec![u];
            for i in 0..steps {
                let t = -1.0 + i as f64 * dt;
                let rhs = |tt: f64, v: [f64; 2]| -> [f64; 2] {
                    let h = profile.h(tt) / eps;
                    let r = r0 + eps * tt;
                    let a = system_matrix(ch, energy, r, h, *coupling);
                    [
                        eps * (a[0][0] * v[0] + a[0][1] * v[1]),
                        eps * (a[1][0] * v[0] + a[1][1] * v[1]),
                    ]
                };
                let k1 = rhs(t, u);
                let k2 = rhs(
                    t + dt / 2.0,
                    [u[0] + dt / 2.0 * k1[0], u[1] + dt / 2.0 * k1[1]],
                );
                let k3 = rhs(
                    t + dt / 2.0,
                    [u[0] + dt / 2.0 * k2[0], u[1] + dt / 2.0 * k2[1]],
                );
                let k4 = rhs(t + dt, [u[0] + dt * k3[0], u[1] + dt * k3[1]]);
                u = [
                    u[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    u[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                ];
                layer_r.push(r0 + eps * (t + dt));
                layer_u.push(u);
            }
            let ext = free_solution(energy, ch, Region::Exterior, r0 + eps)?;
            let coeff_out = (u[0] * ext[0] + u[1] * ext[1]) / (ext[0] * ext[0] + ext[1] * ext[1]);
            let trace_residual = {
                let rx = u[0] - coeff_out * ext[0];
                let ry = u[1] - coeff_out * ext[1];
                (rx * rx + ry * ry).sqrt() / (u[0] * u[0] + u[1] * u[1]).sqrt()
            };

            let inner = RadialSpinor::from_samples(
                |r| free_solution(energy, ch, Region::Interior, r).unwrap(),
                r0 * 1e-6,
                r0 - eps,
                8000,
            );
            let tail = r0 + 40.0 / k;
            let outer = RadialSpinor::from_samples(
                |r| {
                    let v = free_solution(energy, ch, Region::Exterior, r).unwrap();
                    [coeff_out * v[0], coeff_out * v[1]]
                },
                r0 + eps,
                tail,
                16000,
            );
            let mid = steps / 2;
            let layer_inside = RadialSpinor {
                r: layer_r[..=mid].to_vec(),
                f: layer_u[..=mid].iter().map(|v| v[0]).collect(),
                g: layer_u[..=mid].iter().map(|v| v[1]).collect(),
            };
            let layer_outside = RadialSpinor {
                r: layer_r[mid..].to_vec(),
                f: layer_u[mid..].iter().map(|v| v[0]).collect(),
                g: layer_u[mid..].iter().map(|v| v[1]).collect(),
            };
            let norm_sq = inner.norm_sq()
                + layer_inside.norm_sq()
                + layer_outside.norm_sq()
                + outer.norm_sq();
            let scale = 1.0 / norm_sq.sqrt();

            let rescale = |s: &RadialSpinor| RadialSpinor {
                r: s.r.clone(),
                f: s.f.iter().map(|v| v * scale).collect(),
                g: s.g.iter().map(|v| v * scale).collect(),
            };
            let mut inside = rescale(&inner);
            let li = rescale(&layer_inside);
            inside.r.extend_from_slice(&li.r[1..]);
            inside.f.extend_from_slice(&li.f[1..]);
            inside.g.extend_from_slice(&li.g[1..]);
            let lo = rescale(&layer_outside);
            let outer = rescale(&outer);
            let mut outside = lo.clone();
            outside.r.extend_from_slice(&outer.r[1..]);
            outside.f.extend_from_slice(&outer.f[1..]);
            outside.g.extend_from_slice(&outer.g[1..]);
            Ok(BoundState {
                energy,
                inside,
                outside,
                trace_residual,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::renormalize;
    use crate::sampling;

    const ETA_HAT: f64 = 1.8631929198881449;

    fn channel() -> Channel {
        Channel::new(-1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn bessel_small_orders_closed_forms() {
        // i_0(1) = sinh(1)/1
        let b = bessel_pair(0, 1.0).unwrap();
        assert!((b.i - 1.0f64.sinh()).abs() < 1e-14);
        assert!((b.i - 1.1752011936438014).abs() < 1e-12);
        // k_0(x) = (pi/2) e^{-x}/x in the fixed convention
        for &x in &[0.5, 1.0, 5.0] {
            let b = bessel_pair(0, x).unwrap();
            let expect = std::f64::consts::FRAC_PI_2 * (-x).exp() / x;
            assert!((b.k - expect).abs() < 1e-14 * expect.abs().max(1.0));
        }
        // i_1 = cosh/x - sinh/x^2
        let x = 2.3;
        let b = bessel_pair(1, x).unwrap();
        let expect = x.cosh() / x - x.sinh() / (x * x);
        assert!((b.i - expect).abs() < 1e-13);
    }

    #[test]
    fn bessel_series_oracle_high_order() {
        // series: i_l(x) = sum_m (x^2/2)^m / (m! (2l+2m+1)!!) * x^l / (2l+1)!!-style
        // computed directly in f64 for moderate x
        fn series_i(l: usize, x: f64) -> f64 {
            let mut dfact = 1.0; // (2l+1)!!
            for j in 1..=l {
                dfact *= (2 * j + 1) as f64;
            }
            let mut term = x.powi(l as i32) / dfact;
            let mut acc = term;
            let half_x2 = x * x / 2.0;
            for m in 1..60 {
                term *= half_x2 / (m as f64 * (2 * l + 2 * m + 1) as f64);
                acc += term;
                if term < 1e-18 * acc {
                    break;
                }
            }
            acc
        }
        for &(l, x) in &[(0usize, 0.3), (2, 1.0), (5, 0.7), (10, 3.0), (20, 8.0), (40, 15.0)] {
            let b = bessel_pair(l, x).unwrap();
            let s = series_i(l, x);
            assert!(
                ((b.i - s) / s).abs() < 1e-10,
                "l={l}, x={x}: {} vs {}",
                b.i,
                s
            );
        }
    }

    #[test]
    fn bessel_wronskian() {
        // i_l k_l' - i_l' k_l = -pi/(2 x^2)
        for &x in &[0.5, 1.0, 5.0] {
            for l in [0usize, 1, 3, 7] {
                let b = bessel_pair(l, x).unwrap();
                let w = b.i * b.k_prime - b.i_prime * b.k;
                let expect = -std::f64::consts::FRAC_PI_2 / (x * x);
                assert!(
                    ((w - expect) / expect).abs() < 1e-10,
                    "l={l}, x={x}: {w} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn bessel_guards() {
        assert!(matches!(
            bessel_pair(0, 800.0),
            Err(Error::Overflow { .. })
        ));
        assert!(bessel_pair(41, 1.0).is_err());
        // scaled variant survives large arguments
        let v = bessel_i_scaled(3, 1200.0).unwrap();
        assert!(v.is_finite() && v > 0.0);
        // against the x <= 700 path at the boundary
        let a = bessel_i_scaled(3, 650.0).unwrap();
        let b = bessel_pair(3, 650.0).unwrap().i * (-650.0f64).exp();
        assert!(((a - b) / b).abs() < 1e-10);
    }

    #[test]
    fn free_solution_regularity_and_decay() {
        let ch = channel();
        let e = 0.5;
        // interior: f/r^{l+1} bounded as r -> 0 (l = 0 for kappa = -1)
        let mut prev = None;
        for &r in &[1e-2, 1e-3, 1e-4] {
            let u = free_solution(e, &ch, Region::Interior, r).unwrap();
            let ratio = u[0] / r;
            if let Some(p) = prev {
                assert!((ratio - p as f64).abs() < 1e-3);
            }
            prev = Some(ratio);
        }
        // exterior decay like e^{-k r}
        let k = (1.0f64 - e * e).sqrt();
        let r1 = 20.0 / k;
        let u1 = free_solution(e, &ch, Region::Exterior, r1).unwrap();
        let u2 = free_solution(e, &ch, Region::Exterior, r1 + 1.0).unwrap();
        let measured = (u1[0] / u2[0]).ln();
        assert!((measured - k).abs() < 0.05 * k, "decay {measured} vs {k}");
    }

    #[test]
    fn free_solution_residual_oracle() {
        // fourth-order finite-difference application of the radial
        // operator; the wide stencil keeps truncation below the target
        // even where the exterior solution carries 1/r factors
        let ch = channel();
        let e = 0.5;
        let h = 1e-4;
        for region in [Region::Interior, Region::Exterior] {
            for i in 0..30 {
                let r = 0.2 + 4.8 * i as f64 / 29.0;
                let u = free_solution(e, &ch, region, r).unwrap();
                let up = free_solution(e, &ch, region, r + h).unwrap();
                let um = free_solution(e, &ch, region, r - h).unwrap();
                let up2 = free_solution(e, &ch, region, r + 2.0 * h).unwrap();
                let um2 = free_solution(e, &ch, region, r - 2.0 * h).unwrap();
                let du = [
                    (-up2[0] + 8.0 * up[0] - 8.0 * um[0] + um2[0]) / (12.0 * h),
                    (-up2[1] + 8.0 * up[1] - 8.0 * um[1] + um2[1]) / (12.0 * h),
                ];
                let kr = ch.kappa as f64 / r;
                // (h u)_1 = m f - g' + (kappa/r) g; (h u)_2 = f' + (kappa/r) f - m g
                let scale = (u[0] * u[0] + u[1] * u[1]).sqrt().max(1.0);
                let r1 = (ch.mass * u[0] - du[1] + kr * u[1] - e * u[0]) / scale;
                let r2 = (du[0] + kr * u[0] - ch.mass * u[1] - e * u[1]) / scale;
                assert!(r1.abs() < 1e-8 && r2.abs() < 1e-8, "residual {r1}, {r2}");
            }
        }
    }

    #[test]
    fn radial_jump_values() {
        let id = radial_jump(CouplingPair::new(0.0, 0.0), false).unwrap();
        assert!(mat2::norm(mat2::sub(id, mat2::IDENTITY)) < 1e-15);
        assert!(matches!(
            radial_jump(CouplingPair::new(0.0, 2.0), false),
            Err(Error::ConfinementCase { .. })
        ));
        assert!(radial_jump(CouplingPair::new(0.0, 2.0), true).is_ok());
    }

    #[test]
    fn two_by_two_exponential_identity() {
        // exp(X2 Bt(c)) equals the bare jump at the rescaled coupling
        let mut rng = sampling::rng(53);
        for _ in 0..300 {
            let c = sampling::random_coupling(&mut rng);
            let rn = renormalize(c).unwrap();
            let lhs = radial_jump(c, true).unwrap();
            let rhs = radial_jump(rn.as_pair(), false).unwrap();
            assert!(
                mat2::norm(mat2::sub(lhs, rhs)) < 1e-12,
                "coupling ({}, {})",
                c.eta,
                c.tau
            );
        }
    }

    #[test]
    fn delta_spectrum_free_operator_empty() {
        let ch = channel();
        let eigs = delta_eigenvalues(
            &ch,
            CouplingPair::new(0.0, 0.0),
            Window::gap(&ch),
            &SolverParams::default(),
        )
        .unwrap();
        assert!(eigs.is_empty());
    }

    #[test]
    fn delta_spectrum_reference_case() {
        // frozen from the cross-validated solver pair: the electrostatic
        // shell at the rescaled strength binds one state in this channel
        let ch = channel();
        let eigs = delta_eigenvalues(
            &ch,
            CouplingPair::new(ETA_HAT, 0.0),
            Window::gap(&ch),
            &SolverParams::default(),
        )
        .unwrap();
        assert_eq!(eigs.len(), 1);
        assert!(
            (eigs[0].energy - (-0.33856291077816)).abs() < 1e-9,
            "E = {}",
            eigs[0].energy
        );
        assert!(eigs[0].residual < 1e-9);
    }

    #[test]
    fn delta_spectrum_finite_count() {
        let ch = channel();
        let mut rng = sampling::rng(59);
        for _ in 0..5 {
            let c = sampling::random_coupling(&mut rng);
            let eigs =
                delta_eigenvalues(&ch, c, Window::gap(&ch), &SolverParams::default()).unwrap();
            assert!(eigs.len() < 20);
        }
    }

    #[test]
    fn transfer_identity_limit_without_potential() {
        let ch = channel();
        let params = SolverParams::default();
        let mut prev = f64::INFINITY;
        for &eps in &[0.05, 0.025, 0.0125] {
            let t = layer_transfer(
                &ch,
                CouplingPair::new(0.0, 0.0),
                eps,
                &Profile::box_profile(),
                0.3,
                &params,
            )
            .unwrap();
            let dev = mat2::norm(mat2::sub(t, mat2::IDENTITY));
            // the leading term is the layer integral of the free system
            // matrix, so the deviation is O(eps) with constant ~2 |A|
            assert!(dev < 6.0 * eps, "eps {eps}: deviation {dev}");
            assert!(dev < prev);
            prev = dev;
        }
    }

    #[test]
    fn transfer_determinant_is_one() {
        // the system is traceless, so Liouville gives det = 1
        let ch = channel();
        let params = SolverParams::default();
        for name in Profile::builtin_names() {
            let t = layer_transfer(
                &ch,
                CouplingPair::new(1.5, 0.4),
                0.05,
                &Profile::by_name(name).unwrap(),
                -0.2,
                &params,
            )
            .unwrap();
            assert!((mat2::det(t) - 1.0).abs() < 1e-10, "profile {name}");
        }
    }

    #[test]
    fn transfer_converges_to_renormalized_jump() {
        let ch = channel();
        let params = SolverParams::default();
        let c = CouplingPair::new(1.5, 0.0);
        let target = radial_jump(renormalize(c).unwrap().as_pair(), false).unwrap();
        let mut prev = f64::INFINITY;
        for j in 0..5 {
            let eps = 0.1 * 0.5f64.powi(j);
            let t = layer_transfer(&ch, c, eps, &Profile::box_profile(), 0.3, &params).unwrap();
            let dev = mat2::norm(mat2::sub(t, target));
            assert!(dev < prev, "eps {eps}");
            prev = dev;
        }
        assert!(prev < 0.02);
        // couplings without gap eigenvalues still satisfy the transfer
        // limit; this is where the rescaling shows up for them
        for c in [CouplingPair::new(0.0, 2.0), CouplingPair::new(1.0, 1.0)] {
            let target = radial_jump(renormalize(c).unwrap().as_pair(), false).unwrap();
            let dev_big = mat2::norm(mat2::sub(
                layer_transfer(&ch, c, 0.04, &Profile::box_profile(), 0.1, &params).unwrap(),
                target,
            ));
            let dev_small = mat2::norm(mat2::sub(
                layer_transfer(&ch, c, 0.01, &Profile::box_profile(), 0.1, &params).unwrap(),
                target,
            ));
            assert!(dev_small < 0.3 * dev_big);
            assert!(dev_small < 0.25, "({}, {}): {dev_small}", c.eta, c.tau);
        }
    }

    #[test]
    fn regularized_spectrum_empty_without_coupling() {
        let ch = channel();
        let eigs = regularized_eigenvalues(
            &ch,
            CouplingPair::new(0.0, 0.0),
            0.05,
            &Profile::box_profile(),
            Window::gap(&ch),
            &SolverParams::default(),
        )
        .unwrap();
        assert!(eigs.is_empty());
    }

    #[test]
    fn delta_mode_normalized_with_trace_relation() {
        let ch = channel();
        let params = SolverParams::default();
        let eigs = delta_eigenvalues(
            &ch,
            CouplingPair::new(ETA_HAT, 0.0),
            Window::gap(&ch),
            &params,
        )
        .unwrap();
        let mode = DeltaMode::new(&ch, CouplingPair::new(ETA_HAT, 0.0), eigs[0].energy, &params)
            .unwrap();
        assert!(mode.trace_residual < 1e-9);
        assert!((mode.norm_sq_quadrature() - 1.0).abs() < 1e-8);

        let state = eigenfunction(
            &ch,
            &EigenProblem::Delta {
                coupling_hat: CouplingPair::new(ETA_HAT, 0.0),
            },
            eigs[0].energy,
            &params,
        )
        .unwrap();
        let total = state.inside.norm_sq() + state.outside.norm_sq();
        assert!((total - 1.0).abs() < 1e-8, "norm^2 = {total}");
        assert!(state.trace_residual < 1e-9);

        // exterior tail decap: exponential decay
        let nr = state.outside.r.len();
        let tail_val = state.outside.f[nr - 1].abs() + state.outside.g[nr - 1].abs();
        assert!(tail_val < 1e-12);

        assert!(matches!(
            DeltaMode::new(&ch, CouplingPair::new(ETA_HAT, 0.0), 0.1, &params),
            Err(Error::NotAnEigenvalue { .. })
        ));
    }

    #[test]
    fn regularized_eigenfunction_glues_continuously() {
        let ch = channel();
        let params = SolverParams::default();
        let c = CouplingPair::new(1.5, 0.0);
        let eps = 0.05;
        let profile = Profile::box_profile();
        let eigs =
            regularized_eigenvalues(&ch, c, eps, &profile, Window::gap(&ch), &params).unwrap();
        assert_eq!(eigs.len(), 1);
        let state = eigenfunction(
            &ch,
            &EigenProblem::Regularized {
                coupling: c,
                eps,
                profile,
            },
            eigs[0].energy,
            &params,
        )
        .unwrap();
        assert!(state.trace_residual < 1e-8);
        let total = state.inside.norm_sq() + state.outside.norm_sq();
        assert!((total - 1.0).abs() < 1e-6, "norm^2 = {total}");
        // the regularized state is continuous at the shell: the two sides
        // share the same boundary value
        let li = state.inside.r.len() - 1;
        assert!((state.inside.r[li] - ch.shell_radius).abs() < 1e-12);
        assert!((state.outside.r[0] - ch.shell_radius).abs() < 1e-12);
        assert!((state.inside.f[li] - state.outside.f[0]).abs() < 1e-12);
        assert!((state.inside.g[li] - state.outside.g[0]).abs() < 1e-12);
    }
}
