//! Closed-surface geometry: charts, outward normals, the Weingarten map,
//! the tubular-neighborhood parametrization and its inverse projection.
//!
//! Shipped surfaces are the sphere (analytic throughout) and the
//! axis-aligned ellipsoid (analytic normal, finite-difference Weingarten).
//! Both are covered by two stereographic charts selected by the sign of the
//! normal's z-component, so neither chart is ever used near its degenerate
//! antipode.
//!
//! Sign conventions: `p` is the offset along the *outward* unit normal, and
//! the Weingarten matrix stores the differential of the outward normal in
//! the chart tangent basis, so a sphere of radius R has matrix I/R and
//! positive principal curvatures. The tubular differential then carries the
//! factor (I + p W), which expands area for outward offsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub mod vec3 {
    use super::Vec3;

    pub fn dot(a: Vec3, b: Vec3) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    pub fn norm(a: Vec3) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn add(a: Vec3, b: Vec3) -> Vec3 {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    pub fn scale(a: Vec3, c: f64) -> Vec3 {
        [a[0] * c, a[1] * c, a[2] * c]
    }

    pub fn normalize(a: Vec3) -> Vec3 {
        scale(a, 1.0 / norm(a))
    }

    pub fn dist(a: Vec3, b: Vec3) -> f64 {
        norm(sub(a, b))
    }
}

/// Finite-difference step for chart-space derivatives of the normal.
pub const FD_STEP: f64 = 1e-5;

/// Safety factor applied to the curvature bound when fixing the tube width.
pub const TUBE_SAFETY: f64 = 0.5;

const NEWTON_MAX_ITER: usize = 50;
const SEED_GRID: usize = 32;
const CHART_DOMAIN_RADIUS: f64 = 1.6;
const SEED_RADIUS: f64 = 1.1;

/// Shape of a shipped surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Sphere { radius: f64 },
    Ellipsoid { radii: [f64; 3] },
}

/// Which polar cap a stereographic chart is centered on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cap {
    North,
    South,
}

/// A single stereographic chart of the surface.
///
/// The planar coordinate `s` maps to the unit sphere by stereographic
/// projection from the opposite pole (s = 0 is the cap center), then to the
/// surface by the shape's axis scaling.
#[derive(Debug, Clone, Copy)]
pub struct Chart {
    pub shape: Shape,
    pub cap: Cap,
    pub domain_radius: f64,
}

/// Chart coordinates plus signed normal offset locating a point in the tube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubularPoint {
    pub cap: Cap,
    pub s: [f64; 2],
    pub p: f64,
}

/// Weingarten data at a chart point: the matrix of the outward-normal
/// differential in the `(t1, t2)` basis and its eigenvalues, the principal
/// curvatures (sorted ascending; positive for convex surfaces).
#[derive(Debug, Clone, Copy)]
pub struct WeingartenData {
    pub matrix: [[f64; 2]; 2],
    pub k1: f64,
    pub k2: f64,
}

impl Chart {
    fn axes(&self) -> Vec3 {
        match self.shape {
            Shape::Sphere { radius } => [radius; 3],
            Shape::Ellipsoid { radii } => radii,
        }
    }

    fn z_sign(&self) -> f64 {
        match self.cap {
            Cap::North => 1.0,
            Cap::South => -1.0,
        }
    }

    pub fn in_domain(&self, s: [f64; 2]) -> bool {
        s[0] * s[0] + s[1] * s[1] < self.domain_radius * self.domain_radius
    }

    /// Unit-sphere image of the chart coordinate.
    fn unit_point(&self, s: [f64; 2]) -> Vec3 {
        let q = s[0] * s[0] + s[1] * s[1];
        let denom = 1.0 + q;
        [
            2.0 * s[0] / denom,
            2.0 * s[1] / denom,
            self.z_sign() * (1.0 - q) / denom,
        ]
    }

    fn unit_tangents(&self, s: [f64; 2]) -> [Vec3; 2] {
        let q = s[0] * s[0] + s[1] * s[1];
        let denom = 1.0 + q;
        let d2 = denom * denom;
        let du1 = [
            2.0 / denom - 4.0 * s[0] * s[0] / d2,
            -4.0 * s[0] * s[1] / d2,
            -self.z_sign() * 4.0 * s[0] / d2,
        ];
        let du2 = [
            -4.0 * s[0] * s[1] / d2,
            2.0 / denom - 4.0 * s[1] * s[1] / d2,
            -self.z_sign() * 4.0 * s[1] / d2,
        ];
        [du1, du2]
    }

    /// Surface point phi(s).
    pub fn point(&self, s: [f64; 2]) -> Vec3 {
        let u = self.unit_point(s);
        let ax = self.axes();
        [ax[0] * u[0], ax[1] * u[1], ax[2] * u[2]]
    }

    /// Tangent basis (d1 phi, d2 phi).
    pub fn tangents(&self, s: [f64; 2]) -> [Vec3; 2] {
        let du = self.unit_tangents(s);
        let ax = self.axes();
        [
            [ax[0] * du[0][0], ax[1] * du[0][1], ax[2] * du[0][2]],
            [ax[0] * du[1][0], ax[1] * du[1][1], ax[2] * du[1][2]],
        ]
    }

    /// Outward unit normal at phi(s).
    ///
    /// The sphere normal is radial; the ellipsoid normal is the normalized
    /// gradient of the implicit equation. Fails with `DegenerateChart` when
    /// the tangent cross product collapses (far outside the usable domain).
    pub fn normal(&self, s: [f64; 2]) -> Result<Vec3> {
        let t = self.tangents(s);
        let cross = vec3::cross(t[0], t[1]);
        let ax = self.axes();
        let scale = ax[0].max(ax[1]).max(ax[2]);
        if vec3::norm(cross) < 1e-12 * scale * scale {
            return Err(Error::DegenerateChart {
                cross_norm: vec3::norm(cross),
            });
        }
        let x = self.point(s);
        let n = match self.shape {
            Shape::Sphere { radius } => vec3::scale(x, 1.0 / radius),
            Shape::Ellipsoid { radii } => vec3::normalize([
                x[0] / (radii[0] * radii[0]),
                x[1] / (radii[1] * radii[1]),
                x[2] / (radii[2] * radii[2]),
            ]),
        };
        Ok(n)
    }

    /// Chart-space derivatives of the outward normal, (d1 nu, d2 nu).
    /// Analytic on the sphere, central finite differences elsewhere.
    pub fn normal_derivs(&self, s: [f64; 2]) -> Result<[Vec3; 2]> {
        match self.shape {
            Shape::Sphere { .. } => Ok(self.unit_tangents(s)),
            Shape::Ellipsoid { .. } => {
                let h = FD_STEP;
                let mut out = [[0.0; 3]; 2];
                for i in 0..2 {
                    let mut sp = s;
                    let mut sm = s;
                    sp[i] += h;
                    sm[i] -= h;
                    let np = self.normal(sp)?;
                    let nm = self.normal(sm)?;
                    out[i] = vec3::scale(vec3::sub(np, nm), 0.5 / h);
                }
                Ok(out)
            }
        }
    }

    /// Weingarten data: the normal differential expressed in the tangent
    /// basis via the first fundamental form, plus principal curvatures.
    pub fn weingarten(&self, s: [f64; 2]) -> Result<WeingartenData> {
        if let Shape::Sphere { radius } = self.shape {
            let k = 1.0 / radius;
            return Ok(WeingartenData {
                matrix: [[k, 0.0], [0.0, k]],
                k1: k,
                k2: k,
            });
        }
        let t = self.tangents(s);
        let dn = self.normal_derivs(s)?;
        // first fundamental form
        let g = [
            [vec3::dot(t[0], t[0]), vec3::dot(t[0], t[1])],
            [vec3::dot(t[1], t[0]), vec3::dot(t[1], t[1])],
        ];
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if det.abs() < 1e-14 {
            return Err(Error::DegenerateChart { cross_norm: det });
        }
        let ginv = [
            [g[1][1] / det, -g[0][1] / det],
            [-g[1][0] / det, g[0][0] / det],
        ];
        // columns: d_i nu = sum_k W[k][i] t_k  =>  W_col_i = ginv . (T^t d_i nu)
        let mut w = [[0.0; 2]; 2];
        for i in 0..2 {
            let rhs = [vec3::dot(t[0], dn[i]), vec3::dot(t[1], dn[i])];
            w[0][i] = ginv[0][0] * rhs[0] + ginv[0][1] * rhs[1];
            w[1][i] = ginv[1][0] * rhs[0] + ginv[1][1] * rhs[1];
        }
        let tr = w[0][0] + w[1][1];
        let dt = w[0][0] * w[1][1] - w[0][1] * w[1][0];
        let disc = (tr * tr / 4.0 - dt).max(0.0).sqrt();
        Ok(WeingartenData {
            matrix: w,
            k1: tr / 2.0 - disc,
            k2: tr / 2.0 + disc,
        })
    }
}

/// A closed surface with its chart atlas, seed grids for projection, and
/// the validated tube half-width.
#[derive(Debug, Clone)]
pub struct Surface {
    pub shape: Shape,
    charts: [Chart; 2],
    gamma: f64,
    seeds: Vec<(Cap, [f64; 2], Vec3)>,
    seed_slack: f64,
}

impl Surface {
    pub fn sphere(radius: f64) -> Result<Self> {
        if radius <= 0.0 || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Self::build(Shape::Sphere { radius })
    }

    pub fn ellipsoid(radii: [f64; 3]) -> Result<Self> {
        if radii.iter().any(|&r| r <= 0.0 || !r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ellipsoid radii must be positive, got {radii:?}"
            )));
        }
        Self::build(Shape::Ellipsoid { radii })
    }

    pub fn from_shape(shape: Shape) -> Result<Self> {
        match shape {
            Shape::Sphere { radius } => Self::sphere(radius),
            Shape::Ellipsoid { radii } => Self::ellipsoid(radii),
        }
    }

    fn build(shape: Shape) -> Result<Self> {
        let charts = [
            Chart {
                shape,
                cap: Cap::North,
                domain_radius: CHART_DOMAIN_RADIUS,
            },
            Chart {
                shape,
                cap: Cap::South,
                domain_radius: CHART_DOMAIN_RADIUS,
            },
        ];
        // sampled curvature bound fixes the tube width
        let mut max_curv: f64 = 0.0;
        let n = 48;
        for chart in &charts {
            for i in 0..n {
                for j in 0..n {
                    let s = [
                        -1.0 + 2.0 * (i as f64 + 0.5) / n as f64,
                        -1.0 + 2.0 * (j as f64 + 0.5) / n as f64,
                    ];
                    if s[0] * s[0] + s[1] * s[1] > 1.0 {
                        continue;
                    }
                    let w = chart.weingarten(s)?;
                    max_curv = max_curv.max(w.k1.abs()).max(w.k2.abs());
                }
            }
        }
        let gamma = TUBE_SAFETY / max_curv;

        let mut seeds = Vec::with_capacity(2 * SEED_GRID * SEED_GRID);
        let mut max_spacing: f64 = 0.0;
        for chart in &charts {
            let mut prev_row: Vec<Vec3> = Vec::new();
            for i in 0..SEED_GRID {
                let mut row = Vec::with_capacity(SEED_GRID);
                for j in 0..SEED_GRID {
                    let s = [
                        -SEED_RADIUS + 2.0 * SEED_RADIUS * i as f64 / (SEED_GRID - 1) as f64,
                        -SEED_RADIUS + 2.0 * SEED_RADIUS * j as f64 / (SEED_GRID - 1) as f64,
                    ];
                    let x = chart.point(s);
                    if s[0] * s[0] + s[1] * s[1] <= SEED_RADIUS * SEED_RADIUS {
                        seeds.push((chart.cap, s, x));
                    }
                    if j > 0 {
                        max_spacing = max_spacing.max(vec3::dist(x, row[j - 1]));
                    }
                    if i > 0 {
                        max_spacing = max_spacing.max(vec3::dist(x, prev_row[j]));
                    }
                    row.push(x);
                }
                prev_row = row;
            }
        }
        Ok(Self {
            shape,
            charts,
            gamma,
            seeds,
            seed_slack: max_spacing,
        })
    }

    pub fn charts(&self) -> &[Chart; 2] {
        &self.charts
    }

    pub fn chart(&self, cap: Cap) -> &Chart {
        match cap {
            Cap::North => &self.charts[0],
            Cap::South => &self.charts[1],
        }
    }

    /// Chart covering the cap around the given outward direction.
    pub fn chart_for_direction(&self, direction: Vec3) -> &Chart {
        if direction[2] >= 0.0 {
            self.chart(Cap::North)
        } else {
            self.chart(Cap::South)
        }
    }

    /// Validated tube half-width: TUBE_SAFETY / max sampled |curvature|.
    pub fn max_tube_width(&self) -> f64 {
        self.gamma
    }

    /// Displace phi(s) by p along the outward normal.
    pub fn tubular_map(&self, cap: Cap, s: [f64; 2], p: f64) -> Result<Vec3> {
        if p.abs() >= self.gamma {
            return Err(Error::TubeExceeded {
                p_abs: p.abs(),
                gamma: self.gamma,
            });
        }
        let chart = self.chart(cap);
        let nu = chart.normal(s)?;
        Ok(vec3::add(chart.point(s), vec3::scale(nu, p)))
    }

    /// Differential of the tubular map in the canonical basis: columns
    /// (t_i + p d_i nu) and nu.
    pub fn tubular_jacobian(&self, cap: Cap, s: [f64; 2], p: f64) -> Result<[[f64; 3]; 3]> {
        let chart = self.chart(cap);
        let t = chart.tangents(s);
        let dn = chart.normal_derivs(s)?;
        let nu = chart.normal(s)?;
        let c0 = vec3::add(t[0], vec3::scale(dn[0], p));
        let c1 = vec3::add(t[1], vec3::scale(dn[1], p));
        Ok([
            [c0[0], c1[0], nu[0]],
            [c0[1], c1[1], nu[1]],
            [c0[2], c1[2], nu[2]],
        ])
    }

    /// Nearest-point decomposition x = phi(s) + p nu(s) with |p| < gamma.
    ///
    /// Newton iteration on the stationarity of |x - phi(s)|^2, seeded from a
    /// precomputed coarse grid over both charts.
    pub fn project(&self, x: Vec3) -> Result<TubularPoint> {
        let mut best = (f64::INFINITY, Cap::North, [0.0f64; 2]);
        for &(cap, s, point) in &self.seeds {
            let d = vec3::dist(x, point);
            if d < best.0 {
                best = (d, cap, s);
            }
        }
        if best.0 > self.gamma + self.seed_slack {
            return Err(Error::OutsideTube { gamma: self.gamma });
        }
        let chart = *self.chart(best.1);
        let mut s = best.2;
        let scale = vec3::norm(x).max(1.0);
        let g = |s: [f64; 2]| -> [f64; 2] {
            let t = chart.tangents(s);
            let r = vec3::sub(x, chart.point(s));
            [vec3::dot(r, t[0]), vec3::dot(r, t[1])]
        };
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITER {
            let gval = g(s);
            residual = (gval[0] * gval[0] + gval[1] * gval[1]).sqrt();
            if residual < 1e-13 * scale * scale {
                converged = true;
                break;
            }
            // finite-difference Jacobian of g
            let h = 1e-6;
            let mut jac = [[0.0; 2]; 2];
            for col in 0..2 {
                let mut sp = s;
                let mut sm = s;
                sp[col] += h;
                sm[col] -= h;
                let gp = g(sp);
                let gm = g(sm);
                jac[0][col] = (gp[0] - gm[0]) / (2.0 * h);
                jac[1][col] = (gp[1] - gm[1]) / (2.0 * h);
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            let ds = [
                (jac[1][1] * gval[0] - jac[0][1] * gval[1]) / det,
                (-jac[1][0] * gval[0] + jac[0][0] * gval[1]) / det,
            ];
            s = [s[0] - ds[0], s[1] - ds[1]];
            if ds[0].abs() + ds[1].abs() < 1e-15 {
                let gval = g(s);
                residual = (gval[0] * gval[0] + gval[1] * gval[1]).sqrt();
                converged = residual < 1e-10 * scale * scale;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                max_iter: NEWTON_MAX_ITER,
                residual,
            });
        }
        let nu = chart.normal(s)?;
        let foot = chart.point(s);
        let p = vec3::dot(vec3::sub(x, foot), nu);
        // the residual orthogonal to both nu and the tangents must vanish
        let recon = vec3::add(foot, vec3::scale(nu, p));
        if vec3::dist(recon, x) > 1e-8 * scale {
            return Err(Error::NonConvergence {
                max_iter: NEWTON_MAX_ITER,
                residual: vec3::dist(recon, x),
            });
        }
        if p.abs() >= self.gamma {
            return Err(Error::OutsideTube { gamma: self.gamma });
        }
        Ok(TubularPoint {
            cap: chart.cap,
            s,
            p,
        })
    }

    /// Gradients of the projection maps at a tube point: the normal-offset
    /// gradient equals nu(s); the chart-coordinate Jacobian carries the
    /// inverse tube factor applied to the dual tangent basis.
    pub fn projection_gradients(&self, tp: &TubularPoint) -> Result<(Vec3, [[f64; 3]; 2])> {
        let chart = self.chart(tp.cap);
        let nu = chart.normal(tp.s)?;
        let t = chart.tangents(tp.s);
        let w = chart.weingarten(tp.s)?;
        // dual basis rows: (T^t T)^{-1} T^t
        let g = [
            [vec3::dot(t[0], t[0]), vec3::dot(t[0], t[1])],
            [vec3::dot(t[1], t[0]), vec3::dot(t[1], t[1])],
        ];
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let ginv = [
            [g[1][1] / det, -g[0][1] / det],
            [-g[1][0] / det, g[0][0] / det],
        ];
        let mut dual = [[0.0; 3]; 2];
        for i in 0..2 {
            for c in 0..3 {
                dual[i][c] = ginv[i][0] * t[0][c] + ginv[i][1] * t[1][c];
            }
        }
        // tube factor (I + p W)^{-1}
        let a = [
            [1.0 + tp.p * w.matrix[0][0], tp.p * w.matrix[0][1]],
            [tp.p * w.matrix[1][0], 1.0 + tp.p * w.matrix[1][1]],
        ];
        let adet = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let ainv = [
            [a[1][1] / adet, -a[0][1] / adet],
            [-a[1][0] / adet, a[0][0] / adet],
        ];
        let mut grad_s = [[0.0; 3]; 2];
        for i in 0..2 {
            for c in 0..3 {
                grad_s[i][c] = ainv[i][0] * dual[0][c] + ainv[i][1] * dual[1][c];
            }
        }
        Ok((nu, grad_s))
    }
}
