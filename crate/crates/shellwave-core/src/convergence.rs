//! Sweep harness: eigenvalue convergence of the layer-regularized operator
//! toward the shell operator at the rescaled coupling, the two graph-limit
//! norms built from the twisted eigenfunction, Richardson extrapolation and
//! descriptive rate fits.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::CouplingPair;
use crate::coupling::renormalize;
use crate::error::{Error, Result};
use crate::mollifier::{Primitive, Profile};
use crate::radial::{
    self, delta_eigenvalues, mat2, regularized_eigenvalues, Channel, DeltaMode, GapEigenvalue,
    SolverParams, Window,
};

/// One row of a convergence experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    /// Lowest-|E| gap eigenvalue of the regularized operator, when the
    /// record comes from an eigenvalue sweep.
    pub eigenvalue: Option<f64>,
    /// Graph-limit norms, when the record comes from a graph-limit run.
    pub norm_a: Option<f64>,
    pub norm_b: Option<f64>,
    /// Shell reference at the rescaled coupling.
    pub reference_renormalized: Option<f64>,
    /// Shell reference at the bare coupling; absent when the bare jump is
    /// singular (confinement) or binds nothing.
    pub reference_naive: Option<f64>,
    pub diff_renormalized: Option<f64>,
    pub diff_naive: Option<f64>,
    pub profile: String,
    pub kappa: i32,
    pub wall_time_s: f64,
}

/// Pick the gap eigenvalue closest to zero.
pub fn lowest_eigenvalue(list: &[GapEigenvalue]) -> Option<GapEigenvalue> {
    list.iter()
        .copied()
        .min_by(|a, b| a.energy.abs().partial_cmp(&b.energy.abs()).unwrap())
}

/// Eigenvalue sweep over a decreasing list of layer widths.
///
/// References come from the shell solver at the rescaled and at the bare
/// coupling; each layer width is solved independently (in parallel) and
/// records are returned in input order.
pub fn eigenvalue_sweep(
    ch: &Channel,
    c: CouplingPair,
    eps_list: &[f64],
    profile: &Profile,
    window: Window,
    params: &SolverParams,
) -> Result<Vec<SweepRecord>> {
    let rn = renormalize(c)?;
    if let Some(degenerate) = rn.degenerate {
        return Err(Error::InvalidParameter(format!(
            "rescaled coupling lands on a degenerate limit value ({degenerate:?})"
        )));
    }
    let reference_renormalized = lowest_eigenvalue(&delta_eigenvalues(
        ch,
        rn.as_pair(),
        window,
        params,
    )?)
    .ok_or(Error::NoEigenpair)?
    .energy;
    let reference_naive = match delta_eigenvalues(ch, c, window, params) {
        Ok(list) => lowest_eigenvalue(&list).map(|e| e.energy),
        Err(Error::ConfinementCase { .. }) => None,
        Err(e) => return Err(e),
    };

    eps_list
        .par_iter()
        .map(|&eps| {
            let start = Instant::now();
            let eigs = regularized_eigenvalues(ch, c, eps, profile, window, params)?;
            let e_eps = lowest_eigenvalue(&eigs).ok_or(Error::NoEigenpair)?.energy;
            Ok(SweepRecord {
                eps,
                eigenvalue: Some(e_eps),
                norm_a: None,
                norm_b: None,
                reference_renormalized: Some(reference_renormalized),
                reference_naive,
                diff_renormalized: Some((e_eps - reference_renormalized).abs()),
                diff_naive: reference_naive.map(|r| (e_eps - r).abs()),
                profile: profile.name().to_string(),
                kappa: ch.kappa,
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Radial grid controls for the graph-limit norms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points on the base interval [max(1e-3, R0 - 1.5), R0 + 8/decay].
    pub base_points: usize,
    /// Refinement factor inside the layer.
    pub layer_refine: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            base_points: 20_000,
            layer_refine: 8,
        }
    }
}

/// The two graph-limit norms for one layer width:
/// a = |psi_eps - psi| and b = |E_op psi_eps - E psi| in L2, with
/// psi_eps the twisted eigenfunction. The twist uses the *bare* coupling;
/// psi belongs to the shell operator at the rescaled one. Both integrands
/// vanish identically outside the layer.
pub fn graph_limit_norms(
    mode: &DeltaMode,
    bare: CouplingPair,
    profile: &Profile,
    eps: f64,
    grid: &GridSpec,
) -> Result<(f64, f64)> {
    let ch = mode.channel;
    let r0 = ch.shell_radius;
    if eps >= r0 / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "layer half-width {eps} too large for shell radius {r0}"
        )));
    }
    let primitive = Primitive::new(profile.clone(), eps)?;
    let energy = mode.energy;

    // continuity of the twisted state across the shell: the one-sided
    // twists absorb the trace jump exactly
    let u_in = radial::exp_shell_2(bare, -primitive.limit_minus());
    let u_out = radial::exp_shell_2(bare, -primitive.limit_plus());
    let psi_in = mode.value_interior(r0)?;
    let psi_out = mode.value_exterior(r0)?;
    let lhs = mat2::matvec(u_in, psi_in);
    let rhs = mat2::matvec(u_out, psi_out);
    let jump_scale = (lhs[0] * lhs[0] + lhs[1] * lhs[1]).sqrt();
    let mismatch =
        ((lhs[0] - rhs[0]).powi(2) + (lhs[1] - rhs[1]).powi(2)).sqrt() / jump_scale.max(1e-300);
    assert!(
        mismatch < 1e-9,
        "twisted state must be continuous across the shell (mismatch {mismatch:e})"
    );

    // layer node spacing from the base grid refined inside the layer
    let lo = (r0 - 1.5).max(1e-3);
    let hi = r0 + 8.0 / mode.decay_rate();
    let layer_h = (hi - lo) / (grid.base_points.max(100) as f64 * grid.layer_refine.max(1) as f64);
    let mut n_side = (eps / layer_h).ceil() as usize;
    if n_side % 2 == 1 {
        n_side += 1;
    }
    let n_side = n_side.max(64);

    let q_matrix = |r: f64| -> radial::Mat2 {
        [
            [ch.mass, ch.kappa as f64 / r],
            [ch.kappa as f64 / r, -ch.mass],
        ]
    };
    let xb = mat2::mul(mat2::X2, radial::shell_matrix_2(bare));

    // integrand of (a^2, b^2) at signed offset p from the shell
    let integrand = |p: f64, interior: bool| -> (f64, f64) {
        let r = r0 + p;
        let h_val = if p == 0.0 {
            if interior {
                primitive.limit_minus()
            } else {
                primitive.limit_plus()
            }
        } else {
            primitive.eval(p).expect("p != 0 inside the layer")
        };
        let h_eps = profile.h_eps(eps, p);
        let twist = radial::exp_shell_2(bare, -h_val);
        let (psi, dpsi) = if interior {
            let v = mode.value_interior(r).unwrap();
            let a0 = [
                [-(ch.kappa as f64) / r, energy + ch.mass],
                [ch.mass - energy, ch.kappa as f64 / r],
            ];
            (v, mat2::matvec(a0, v))
        } else {
            let v = mode.value_exterior(r).unwrap();
            let a0 = [
                [-(ch.kappa as f64) / r, energy + ch.mass],
                [ch.mass - energy, ch.kappa as f64 / r],
            ];
            (v, mat2::matvec(a0, v))
        };
        let psi_eps = mat2::matvec(twist, psi);
        // d/dr of the twist factor is + X2 Bt h_eps twist
        let dtwist_psi = mat2::matvec(mat2::scale(xb, h_eps), psi_eps);
        let dpsi_eps = [
            dtwist_psi[0] + mat2::matvec(twist, dpsi)[0],
            dtwist_psi[1] + mat2::matvec(twist, dpsi)[1],
        ];
        // regularized operator applied analytically
        let gamma_d = mat2::matvec(mat2::X2, dpsi_eps);
        let qv = mat2::matvec(q_matrix(r), psi_eps);
        let pot = mat2::matvec(radial::shell_matrix_2(bare), psi_eps);
        let op = [
            gamma_d[0] + qv[0] + h_eps * pot[0],
            gamma_d[1] + qv[1] + h_eps * pot[1],
        ];
        let da = [psi_eps[0] - psi[0], psi_eps[1] - psi[1]];
        let db = [op[0] - energy * psi[0], op[1] - energy * psi[1]];
        (
            da[0] * da[0] + da[1] * da[1],
            db[0] * db[0] + db[1] * db[1],
        )
    };

    // composite Simpson per side in the offset variable
    let simpson_side = |interior: bool| -> (f64, f64) {
        let (p_lo, p_hi) = if interior { (-eps, 0.0) } else { (0.0, eps) };
        let h = (p_hi - p_lo) / n_side as f64;
        let mut acc_a = 0.0;
        let mut acc_b = 0.0;
        for i in 0..=n_side {
            let p = if i == 0 {
                p_lo
            } else if i == n_side {
                p_hi
            } else {
                p_lo + i as f64 * h
            };
            let w = if i == 0 || i == n_side {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let (va, vb) = integrand(p, interior);
            acc_a += w * va;
            acc_b += w * vb;
        }
        (acc_a * h / 3.0, acc_b * h / 3.0)
    };

    let (a_in, b_in) = simpson_side(true);
    let (a_out, b_out) = simpson_side(false);
    Ok(((a_in + a_out).sqrt(), (b_in + b_out).sqrt()))
}

/// Graph-limit run: both norms per layer width against the shell eigenpair
/// of the rescaled coupling.
pub fn graph_limit_run(
    ch: &Channel,
    c: CouplingPair,
    eps_list: &[f64],
    profile: &Profile,
    grid: &GridSpec,
    params: &SolverParams,
) -> Result<Vec<SweepRecord>> {
    let rn = renormalize(c)?;
    let window = Window::gap(ch);
    let eig = lowest_eigenvalue(&delta_eigenvalues(ch, rn.as_pair(), window, params)?)
        .ok_or(Error::NoEigenpair)?;
    let mode = DeltaMode::new(ch, rn.as_pair(), eig.energy, params)?;

    eps_list
        .par_iter()
        .map(|&eps| {
            let start = Instant::now();
            let (a, b) = graph_limit_norms(&mode, c, profile, eps, grid)?;
            Ok(SweepRecord {
                eps,
                eigenvalue: None,
                norm_a: Some(a),
                norm_b: Some(b),
                reference_renormalized: Some(mode.energy),
                reference_naive: None,
                diff_renormalized: None,
                diff_naive: None,
                profile: profile.name().to_string(),
                kappa: ch.kappa,
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Richardson extrapolation to zero layer width: polynomial extrapolation
/// through the (eps, value) pairs, exact for expansions in integer powers
/// starting at first order.
pub fn richardson_limit(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit {
            reason: format!("need at least 2 points, got {}", points.len()),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut col: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n = col.len();
    for k in 1..n {
        for i in 0..n - k {
            let denom = xs[i] - xs[i + k];
            col[i] = (xs[i] * col[i + 1] - xs[i + k] * col[i]) / denom;
        }
    }
    Ok(col[0])
}

/// Least-squares fit of log|diff| against log eps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(eps, diff)| eps > 0.0 && diff.abs() > 1e-13)
        .collect();
    if usable.len() < 4 {
        return Err(Error::DegenerateFit {
            reason: format!(
                "need at least 4 records with differences above 1e-13, got {}",
                usable.len()
            ),
        });
    }
    let n = usable.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(eps, diff) in &usable {
        let x = eps.ln();
        let y = diff.abs().ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let ss_res: f64 = usable
        .iter()
        .map(|&(eps, diff)| {
            let pred = intercept + slope * eps.ln();
            (diff.abs().ln() - pred).powi(2)
        })
        .sum();
    let ss_tot = syy - sy * sy / n;
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ETA_HAT: f64 = 1.8631929198881449;

    fn channel() -> Channel {
        Channel::new(-1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn richardson_synthetic() {
        // value = 3 - 2 eps: exact after one column
        let pts: Vec<(f64, f64)> = (0..4)
            .map(|j| {
                let e = 0.1 * 0.5f64.powi(j);
                (e, 3.0 - 2.0 * e)
            })
            .collect();
        let lim = richardson_limit(&pts).unwrap();
        assert!((lim - 3.0).abs() < 1e-12);

        // quadratic error term
        let pts: Vec<(f64, f64)> = (0..5)
            .map(|j| {
                let e = 0.1 * 0.5f64.powi(j);
                (e, -1.0 + 0.7 * e + 5.0 * e * e)
            })
            .collect();
        let lim = richardson_limit(&pts).unwrap();
        assert!((lim + 1.0).abs() < 1e-12);

        assert!(richardson_limit(&[(0.1, 1.0)]).is_err());
    }

    #[test]
    fn rate_fit_synthetic() {
        let pts: Vec<(f64, f64)> = (0..6)
            .map(|j| {
                let e = 0.1 * 0.5f64.powi(j);
                (e, e)
            })
            .collect();
        let fit = rate_fit(&pts).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-6);
        assert!(fit.r_squared > 0.999999);

        let pts: Vec<(f64, f64)> = (0..6)
            .map(|j| {
                let e = 0.1 * 0.5f64.powi(j);
                (e, 3.0 * e * e)
            })
            .collect();
        let fit = rate_fit(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-6);

        let degenerate: Vec<(f64, f64)> = (0..6).map(|j| (0.1 * 0.5f64.powi(j), 1e-15)).collect();
        assert!(matches!(
            rate_fit(&degenerate),
            Err(Error::DegenerateFit { .. })
        ));
    }

    #[test]
    fn sweep_converges_toward_rescaled_reference() {
        let ch = channel();
        let params = SolverParams::default();
        let records = eigenvalue_sweep(
            &ch,
            CouplingPair::new(1.5, 0.0),
            &[0.1, 0.05, 0.025],
            &Profile::box_profile(),
            Window::gap(&ch),
            &params,
        )
        .unwrap();
        assert_eq!(records.len(), 3);
        let diffs: Vec<f64> = records
            .iter()
            .map(|r| r.diff_renormalized.unwrap())
            .collect();
        assert!(diffs[0] > diffs[1] && diffs[1] > diffs[2]);
        // frozen reference from the cross-validated pair of solvers
        assert!(
            (records[0].reference_renormalized.unwrap() - (-0.33856291077816)).abs() < 1e-9
        );
        assert!((records[0].reference_naive.unwrap() - (-0.64022709709949)).abs() < 1e-8);
        // the sweep marches toward the rescaled reference, away from the
        // naive one
        assert!(diffs[2] < records[2].diff_naive.unwrap());
    }

    #[test]
    fn sweep_confinement_input_has_no_naive_reference() {
        // the bare jump at (0, 2) is singular; the sweep must still run
        // and simply leave the naive reference empty. No gap eigenpair
        // exists for the rescaled coupling here, which surfaces as
        // NoEigenpair rather than a confinement error.
        let ch = channel();
        let err = eigenvalue_sweep(
            &ch,
            CouplingPair::new(0.0, 2.0),
            &[0.05],
            &Profile::box_profile(),
            Window::gap(&ch),
            &SolverParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoEigenpair));
    }

    #[test]
    fn graph_limit_zero_coupling_twist_is_identity() {
        // with a vanishing bare coupling the twist is the identity, so both
        // norms vanish identically for any reference eigenpair
        let ch = channel();
        let params = SolverParams::default();
        let eigs = delta_eigenvalues(
            &ch,
            CouplingPair::new(ETA_HAT, 0.0),
            Window::gap(&ch),
            &params,
        )
        .unwrap();
        let mode =
            DeltaMode::new(&ch, CouplingPair::new(ETA_HAT, 0.0), eigs[0].energy, &params).unwrap();
        let (a, b) = graph_limit_norms(
            &mode,
            CouplingPair::new(0.0, 0.0),
            &Profile::box_profile(),
            0.05,
            &GridSpec::default(),
        )
        .unwrap();
        assert_eq!(a, 0.0);
        assert!(b < 1e-12, "b = {b}");
    }

    #[test]
    fn graph_limit_norms_decrease() {
        let ch = channel();
        let params = SolverParams::default();
        let records = graph_limit_run(
            &ch,
            CouplingPair::new(1.5, 0.0),
            &[0.05, 0.025, 0.0125],
            &Profile::box_profile(),
            &GridSpec::default(),
            &params,
        )
        .unwrap();
        let a: Vec<f64> = records.iter().map(|r| r.norm_a.unwrap()).collect();
        let b: Vec<f64> = records.iter().map(|r| r.norm_b.unwrap()).collect();
        assert!(a[0] > a[1] && a[1] > a[2]);
        assert!(b[0] > b[1] && b[1] > b[2]);
        // a^2 = O(eps): slope of log a vs log eps near 1/2
        let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.eps, r.norm_a.unwrap())).collect();
        let ratio = (pts[0].1 / pts[2].1).ln() / (pts[0].0 / pts[2].0).ln();
        assert!(ratio > 0.4 && ratio < 0.6, "slope {ratio}");
    }
}
