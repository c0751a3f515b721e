//! Built-in identity suites with seeded sampling. The CLI `check` command
//! and the acceptance harness both run these.

use std::sync::Arc;

use num_complex::Complex64;

use crate::clifford::{
    alpha_dot, exp_shell, half_jump, jump_matrix, shell_matrix, CouplingPair, SpinorMatrix,
};
use crate::coupling::{inverse_renormalize, renormalize, Renormalized};
use crate::geometry::{vec3, Cap, Surface};
use crate::mollifier::Profile;
use crate::sampling;
use crate::shell_field::{PotentialField, TwistField};

/// Outcome of one suite: pass flag plus measured extrema for the report.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub details: Vec<String>,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            details: Vec::new(),
        }
    }

    fn gate(&mut self, label: &str, measured: f64, bound: f64) {
        let ok = measured < bound;
        self.passed &= ok;
        self.details.push(format!(
            "{} {label}: {measured:.3e} (bound {bound:.0e})",
            if ok { "ok  " } else { "FAIL" }
        ));
    }

    fn require(&mut self, label: &str, ok: bool) {
        self.passed &= ok;
        self.details
            .push(format!("{} {label}", if ok { "ok  " } else { "FAIL" }));
    }
}

/// Spinor-algebra suite: exact anticommutators, the half-jump product
/// identity, and the shell exponential against the jump matrix at the
/// rescaled coupling.
pub fn algebra_suite(samples: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new("algebra");
    let mut rng = sampling::rng(seed);

    let mut anti_exact = true;
    for j in 1..=3 {
        for k in 1..=3 {
            let aj = SpinorMatrix::alpha(j);
            let ak = SpinorMatrix::alpha(k);
            let anti = aj.mul(&ak).add(&ak.mul(&aj));
            let expect = if j == k {
                SpinorMatrix::identity().scale_re(2.0)
            } else {
                SpinorMatrix::zero()
            };
            anti_exact &= anti == expect;
        }
        let b = SpinorMatrix::beta();
        let aj = SpinorMatrix::alpha(j);
        anti_exact &= aj.mul(&b).add(&b.mul(&aj)) == SpinorMatrix::zero();
    }
    anti_exact &= SpinorMatrix::beta().mul(&SpinorMatrix::beta()) == SpinorMatrix::identity();
    report.require("anticommutation relations exact", anti_exact);

    let mut max_product = 0.0f64;
    let mut max_exp = 0.0f64;
    for _ in 0..samples {
        let nu = sampling::random_unit(&mut rng);
        let c = sampling::random_coupling(&mut rng);
        let m = half_jump(nu, c);
        let prod = SpinorMatrix::identity()
            .sub(&m)
            .mul(&SpinorMatrix::identity().add(&m));
        let expect = SpinorMatrix::identity().scale_re((4.0 + c.d()) / 4.0);
        max_product = max_product.max(prod.sub(&expect).frobenius_norm());

        let rn = renormalize(c).expect("sampled couplings avoid the excluded set");
        let jump = jump_matrix(nu, rn.as_pair()).expect("sampled couplings avoid confinement");
        max_exp = max_exp.max(exp_shell(nu, c).sub(&jump).frobenius_norm());
    }
    report.gate("(I-M)(I+M) - ((4+d)/4) I", max_product, 1e-12);
    report.gate("exp shell vs jump at rescaled coupling", max_exp, 1e-10);
    report
}

/// Trace-compatibility suite: the one-sided twists transport the jump for
/// every profile.
pub fn trace_suite(samples: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new("trace-compatibility");
    let mut rng = sampling::rng(seed);
    let surface = Arc::new(Surface::sphere(1.0).expect("unit sphere"));
    let profiles = ["box", "triangle", "asymmetric"];
    let mut max_err = 0.0f64;
    for i in 0..samples {
        let nu = sampling::random_unit(&mut rng);
        let c = sampling::random_coupling(&mut rng);
        let eps = sampling::uniform(&mut rng, 0.01, 0.4) * surface.max_tube_width();
        let profile = Profile::by_name(profiles[i % profiles.len()]).unwrap();
        let field = TwistField::new(surface.clone(), c, eps, profile).expect("valid layer");
        let traces = field.traces_for_normal(nu);
        let rn = renormalize(c).unwrap();
        let jump = jump_matrix(nu, rn.as_pair()).unwrap();
        let err = traces
            .from_inside
            .mul(&jump)
            .sub(&traces.from_outside)
            .frobenius_norm();
        max_err = max_err.max(err);
    }
    report.gate("U(inside) R - U(outside)", max_err, 1e-10);
    report
}

/// Gradient suite on the unit sphere with the smooth cosine profile:
/// the contraction identity and the finite-difference oracle.
pub fn gradient_suite(samples: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new("twist-gradient");
    let mut rng = sampling::rng(seed);
    let surface = Arc::new(Surface::sphere(1.0).expect("unit sphere"));
    let eps = 0.08;
    let mut max_cancel = 0.0f64;
    let mut max_fd = 0.0f64;
    for _ in 0..samples {
        let c = sampling::random_coupling(&mut rng);
        let profile = Profile::raised_cosine();
        let twist = TwistField::new(surface.clone(), c, eps, profile.clone()).unwrap();
        let potential = PotentialField::new(surface.clone(), c, eps, profile).unwrap();
        // random point inside the layer, away from the surface and edges
        let cap = if sampling::uniform(&mut rng, 0.0, 1.0) < 0.5 {
            Cap::North
        } else {
            Cap::South
        };
        let s = [
            sampling::uniform(&mut rng, -0.9, 0.9),
            sampling::uniform(&mut rng, -0.9, 0.9),
        ];
        let sign = if sampling::uniform(&mut rng, 0.0, 1.0) < 0.5 {
            -1.0
        } else {
            1.0
        };
        let p = sign * sampling::uniform(&mut rng, 0.1 * eps, 0.85 * eps);
        let x = surface.tubular_map(cap, s, p).unwrap();

        let grads = twist.gradient_all(x).unwrap();
        let u: [Complex64; 4] = std::array::from_fn(|_| {
            Complex64::new(
                sampling::uniform(&mut rng, -1.0, 1.0),
                sampling::uniform(&mut rng, -1.0, 1.0),
            )
        });
        let mut lhs = [Complex64::new(0.0, 0.0); 4];
        for (j, g) in grads.iter().enumerate() {
            let term = SpinorMatrix::alpha(j + 1)
                .mul(&g.total)
                .scale(Complex64::new(0.0, -1.0))
                .apply(&u);
            for r in 0..4 {
                lhs[r] += term[r];
            }
        }
        let rhs = twist
            .remainder_at(x)
            .unwrap()
            .sub(&potential.value_at(x).unwrap().mul(&twist.value_at(x).unwrap()))
            .apply(&u);
        for r in 0..4 {
            max_cancel = max_cancel.max((lhs[r] - rhs[r]).norm());
        }

        let h = 1e-5;
        for (j, g) in grads.iter().enumerate() {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = twist
                .value_at(xp)
                .unwrap()
                .sub(&twist.value_at(xm).unwrap())
                .scale_re(0.5 / h);
            let rel = g.total.sub(&fd).frobenius_norm() / fd.frobenius_norm().max(1e-9);
            max_fd = max_fd.max(rel);
        }
    }
    report.gate("contraction identity residual", max_cancel, 1e-7);
    report.gate("gradient vs finite differences (rel)", max_fd, 1e-5);
    report
}

/// Rescaling round-trip suite over targets with d_hat in (-3.9, 3.9),
/// plus the image bound of the forward map.
pub fn coupling_suite(samples: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new("coupling-round-trip");
    let mut rng = sampling::rng(seed);
    let mut max_rt = 0.0f64;
    let mut produced = 0usize;
    while produced < samples {
        let eta_hat = sampling::uniform(&mut rng, -2.5, 2.5);
        let tau_hat = sampling::uniform(&mut rng, -2.5, 2.5);
        let target = Renormalized::new(eta_hat, tau_hat);
        let d_hat = target.d_hat();
        if !(-3.9..=3.9).contains(&d_hat) || d_hat.abs() < 1e-8 {
            continue;
        }
        produced += 1;
        let c = inverse_renormalize(&target).expect("targets above -4 have preimages");
        let rn = renormalize(c).expect("principal-branch preimages stay off the excluded set");
        max_rt = max_rt
            .max((rn.eta_hat - eta_hat).abs())
            .max((rn.tau_hat - tau_hat).abs());
    }
    report.gate("round-trip error (componentwise)", max_rt, 1e-10);

    let mut min_d_hat = f64::INFINITY;
    for _ in 0..samples {
        let c = sampling::random_coupling(&mut rng);
        min_d_hat = min_d_hat.min(renormalize(c).unwrap().d_hat());
    }
    report.require(
        &format!("image bound d_hat > -4 (min {min_d_hat:.6})"),
        min_d_hat > -4.0,
    );
    report
}

/// Geometry suite: exact sphere curvature, projection round-trips and the
/// projection gradients against finite differences on both surfaces.
pub fn geometry_suite(seed: u64) -> CheckReport {
    let mut report = CheckReport::new("geometry");
    let mut rng = sampling::rng(seed);

    let sphere = Surface::sphere(2.0).expect("sphere");
    let mut max_w = 0.0f64;
    for _ in 0..50 {
        let s = [
            sampling::uniform(&mut rng, -1.2, 1.2),
            sampling::uniform(&mut rng, -1.2, 1.2),
        ];
        let w = sphere.chart(Cap::North).weingarten(s).unwrap();
        max_w = max_w
            .max((w.k1 - 0.5).abs())
            .max((w.k2 - 0.5).abs())
            .max((w.matrix[0][1]).abs())
            .max((w.matrix[1][0]).abs());
    }
    report.gate("sphere Weingarten deviation", max_w, 1e-12);

    for surface in [
        Surface::sphere(1.0).expect("sphere"),
        Surface::ellipsoid([1.0, 1.0, 2.0]).expect("ellipsoid"),
    ] {
        let gamma = surface.max_tube_width();
        let mut max_rt = 0.0f64;
        let mut max_grad = 0.0f64;
        for i in 0..40 {
            let cap = if i % 2 == 0 { Cap::North } else { Cap::South };
            let s = [
                sampling::uniform(&mut rng, -0.9, 0.9),
                sampling::uniform(&mut rng, -0.9, 0.9),
            ];
            let p = sampling::uniform(&mut rng, -0.8 * gamma, 0.8 * gamma);
            let x = surface.tubular_map(cap, s, p).unwrap();
            let tp = surface.project(x).unwrap();
            let back = surface.tubular_map(tp.cap, tp.s, tp.p).unwrap();
            max_rt = max_rt.max(vec3::dist(x, back)).max((tp.p - p).abs());

            let (grad_p, grad_s) = surface.projection_gradients(&tp).unwrap();
            let h = 1e-6;
            for axis in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[axis] += h;
                xm[axis] -= h;
                let tpp = surface.project(xp).unwrap();
                let tpm = surface.project(xm).unwrap();
                max_grad = max_grad.max((grad_p[axis] - (tpp.p - tpm.p) / (2.0 * h)).abs());
                for row in 0..2 {
                    max_grad = max_grad
                        .max((grad_s[row][axis] - (tpp.s[row] - tpm.s[row]) / (2.0 * h)).abs());
                }
            }
        }
        let label = match surface.shape {
            crate::geometry::Shape::Sphere { .. } => "sphere",
            crate::geometry::Shape::Ellipsoid { .. } => "ellipsoid",
        };
        report.gate(&format!("{label} projection round-trip"), max_rt, 1e-10);
        report.gate(
            &format!("{label} projection gradients vs finite differences"),
            max_grad,
            1e-6,
        );
    }
    report
}

/// Mollifier suite: built-in profiles validate, a non-normalized one is
/// rejected, the primitive jumps by the unit mass, and the scaled family
/// concentrates like a point mass.
pub fn mollifier_suite() -> CheckReport {
    let mut report = CheckReport::new("mollifier");
    for name in Profile::builtin_names() {
        let r = Profile::by_name(name).unwrap().validate();
        report.require(
            &format!("profile {name} valid (mass {:.12})", r.mass),
            r.pass,
        );
    }
    let bad = Profile::new("flat-two", |t| if t.abs() <= 1.0 { 1.0 } else { 0.0 }).validate();
    report.require(
        &format!("non-normalized profile rejected (mass {:.3})", bad.mass),
        !bad.pass,
    );

    let mut max_jump = 0.0f64;
    for name in Profile::builtin_names() {
        let pr = crate::mollifier::Primitive::new(Profile::by_name(name).unwrap(), 0.05).unwrap();
        max_jump = max_jump.max((pr.limit_plus() - pr.limit_minus() - 1.0).abs());
    }
    report.gate("primitive jump minus unit mass", max_jump, 1e-12);

    // point-mass proxy: |integral h_eps g - g(0)| <= C eps
    let g = |x: f64| (0.7 * x).cos() - 0.3 * x;
    let p = Profile::raised_cosine();
    let mut ok = true;
    for j in 0..4 {
        let eps = 0.1 * 0.5f64.powi(j);
        let integral = crate::quad::adaptive_simpson(&|t| p.h(t) * g(t * eps), -1.0, 1.0, 1e-13);
        ok &= (integral - g(0.0)).abs() <= 2.0 * eps;
    }
    report.require("point-mass concentration proxy", ok);
    report
}
