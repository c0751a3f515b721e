//! Small quadrature kernels: adaptive Simpson for profile integrals and a
//! fixed 16-node Gauss-Legendre rule for the twist-gradient remainder.

/// Adaptive Simpson with absolute tolerance; depth-limited recursion.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() < 15.0 * tol {
        left + right + err / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// 16-node Gauss-Legendre nodes on (-1, 1) and matching weights.
pub const GL16_NODES: [f64; 8] = [
    0.095012509837637440185,
    0.281603550779258913230,
    0.458016777657227386342,
    0.617876244402643748447,
    0.755404408355003033895,
    0.865631202387831743880,
    0.944575023073232576078,
    0.989400934991649932596,
];
pub const GL16_WEIGHTS: [f64; 8] = [
    0.189450610455068496285,
    0.182603415044923588867,
    0.169156519395002538189,
    0.149595988816576732081,
    0.124628971255533872052,
    0.095158511682492784810,
    0.062253523938647892863,
    0.027152459411754094852,
];

/// Nodes and weights of the 16-point Gauss-Legendre rule on [a, b].
pub fn gauss_legendre_16(a: f64, b: f64) -> [(f64, f64); 16] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 16];
    for i in 0..8 {
        out[2 * i] = (mid - half * GL16_NODES[i], half * GL16_WEIGHTS[i]);
        out[2 * i + 1] = (mid + half * GL16_NODES[i], half * GL16_WEIGHTS[i]);
    }
    out
}
