//! Grids, complex fields, the multi-vortex ansatz, vortex tracking and the
//! helical 3D lift.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GlError, Result};
use crate::profile::VortexProfile;
use crate::util::par_rows;

/// Uniform square-cell grid covering [-l1, l1] x [-l2, l2] with the axes on
/// nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid2D {
    pub l1: f64,
    pub l2: f64,
    pub n1: usize,
    pub n2: usize,
    pub h: f64,
}

impl Grid2D {
    pub fn new(l1: f64, l2: f64, n1: usize, n2: usize) -> Result<Self> {
        if n1 < 3 || n2 < 3 || n1 % 2 == 0 || n2 % 2 == 0 {
            return Err(GlError::Grid(format!(
                "node counts must be odd and >= 3 so the axes are on nodes, got {n1} x {n2}"
            )));
        }
        let hx = 2.0 * l1 / (n1 - 1) as f64;
        let hy = 2.0 * l2 / (n2 - 1) as f64;
        if (hx - hy).abs() > 1e-12 * hx.max(hy) {
            return Err(GlError::Grid(format!("cells must be square: hx = {hx}, hy = {hy}")));
        }
        Ok(Grid2D { l1, l2, n1, n2, h: hx })
    }

    /// Standard solve geometry for a two-vortex configuration: half-width
    /// 4·d̃, spacing ≤ h_max chosen so the vortex centers sit mid-cell
    /// (keeps every reflection used by the parity machinery node-closed and
    /// every node away from the zeros of the ansatz).
    pub fn square_for(d_tilde: f64, h_max: f64) -> Self {
        let k = ((d_tilde / h_max - 0.5).ceil() as usize).max(1);
        let h = d_tilde / (k as f64 + 0.5);
        let m = 4 * k + 2; // covers 4·d̃ exactly
        let l = m as f64 * h;
        Grid2D { l1: l, l2: l, n1: 2 * m + 1, n2: 2 * m + 1, h }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.n1 - 1) as f64 / 2.0) * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - (self.n2 - 1) as f64 / 2.0) * self.h
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n1 + i
    }

    #[inline]
    pub fn z(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x(i), self.y(j))
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of the node mirrored across the x2-axis (x1 -> -x1).
    #[inline]
    pub fn mirror_i(&self, i: usize) -> usize {
        self.n1 - 1 - i
    }

    /// Index of the node mirrored across the x1-axis (x2 -> -x2).
    #[inline]
    pub fn mirror_j(&self, j: usize) -> usize {
        self.n2 - 1 - j
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Vortex {
    pub center: Complex64,
    pub degree: i32,
}

/// Ansatz parameters: ε, the scaled half-distance d̂ and the vortex set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VortexConfiguration {
    pub eps: f64,
    pub d_hat: f64,
    pub vortices: Vec<Vortex>,
}

impl VortexConfiguration {
    /// |log ε|
    #[inline]
    pub fn log_abs(&self) -> f64 {
        self.eps.ln().abs()
    }

    /// d̃ = d̂ / (ε √|log ε|)
    #[inline]
    pub fn d_tilde(&self) -> f64 {
        self.d_hat / (self.eps * self.log_abs().sqrt())
    }

    pub fn total_degree(&self) -> i32 {
        self.vortices.iter().map(|v| v.degree).sum()
    }

    /// Two degree +1 vortices at ±d̃ on the real axis.
    pub fn pair(eps: f64, d_hat: f64) -> Self {
        let mut cfg = VortexConfiguration { eps, d_hat, vortices: Vec::new() };
        let dt = cfg.d_tilde();
        cfg.vortices = vec![
            Vortex { center: Complex64::new(dt, 0.0), degree: 1 },
            Vortex { center: Complex64::new(-dt, 0.0), degree: 1 },
        ];
        cfg
    }

    /// A degree −1 vortex at the origin plus n−1 degree +1 vortices on a ring
    /// of scaled radius √(n−4).
    pub fn ring_with_center(eps: f64, n: usize) -> Result<Self> {
        if n < 5 {
            return Err(GlError::Config(format!("ring-with-center needs n >= 5, got {n}")));
        }
        let d_hat = ((n - 4) as f64).sqrt();
        let mut cfg = VortexConfiguration { eps, d_hat, vortices: Vec::new() };
        let rho = cfg.d_tilde();
        cfg.vortices.push(Vortex { center: Complex64::new(0.0, 0.0), degree: -1 });
        for k in 1..n {
            let ang = 2.0 * std::f64::consts::PI * (k - 1) as f64 / (n - 1) as f64;
            cfg.vortices.push(Vortex {
                center: Complex64::from_polar(rho, ang),
                degree: 1,
            });
        }
        Ok(cfg)
    }

    /// Distances ρ_j = |z - c_j| to each vortex center.
    pub fn rho(&self, z: Complex64) -> Vec<f64> {
        self.vortices.iter().map(|v| (z - v.center).norm()).collect()
    }

    pub fn min_rho(&self, z: Complex64) -> f64 {
        self.vortices
            .iter()
            .map(|v| (z - v.center).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// What a field on the grid represents; fixes the symmetry class the values
/// are expected to satisfy on symmetric configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    /// conjugate-even: V(-x1,x2) = conj V(x1,x2), V(x1,-x2) = conj V(x1,x2)
    Ansatz,
    /// conjugate-odd: ψ(x1,-x2) = -conj ψ(x1,x2), ψ(-x1,x2) = -conj ψ(x1,x2)
    Perturbation,
    /// conjugate-odd, same class as the perturbation
    Residual,
    /// conjugate-even
    Solution,
}

impl FieldKind {
    /// Sign s in f(reflected z) = s · conj f(z).
    pub fn reflection_sign(self) -> f64 {
        match self {
            FieldKind::Ansatz | FieldKind::Solution => 1.0,
            FieldKind::Perturbation | FieldKind::Residual => -1.0,
        }
    }
}

/// Complex-valued function on a 2D grid with its owning configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexField {
    pub grid: Grid2D,
    pub values: Vec<Complex64>,
    pub cfg: VortexConfiguration,
    pub kind: FieldKind,
    /// Number of boundary layers whose values are not trusted (stencil ops
    /// leave the outermost rows invalid).
    pub valid_margin: usize,
}

impl ComplexField {
    pub fn from_fn(
        grid: Grid2D,
        cfg: VortexConfiguration,
        kind: FieldKind,
        f: impl Fn(Complex64) -> Complex64 + Sync,
    ) -> Self {
        let n1 = grid.n1;
        let rows = par_rows(grid.n2, |j| {
            let mut row = Vec::with_capacity(n1);
            for i in 0..n1 {
                row.push(f(grid.z(i, j)));
            }
            row
        });
        let values = rows.into_iter().flatten().collect();
        ComplexField { grid, values, cfg, kind, valid_margin: 0 }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let idx = self.grid.idx(i, j);
        self.values[idx] = v;
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        let m = self.valid_margin.max(1);
        i >= m && j >= m && i + m < self.grid.n1 && j + m < self.grid.n2
    }

    /// Bilinear interpolation at an arbitrary point inside the grid.
    pub fn interp(&self, z: Complex64) -> Result<Complex64> {
        let g = &self.grid;
        if z.re.abs() > g.l1 || z.im.abs() > g.l2 {
            return Err(GlError::Domain(format!("point {z} outside grid")));
        }
        let fx = (z.re + g.l1) / g.h;
        let fy = (z.im + g.l2) / g.h;
        let i = (fx.floor() as usize).min(g.n1 - 2);
        let j = (fy.floor() as usize).min(g.n2 - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        Ok(v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty)
    }

    /// Max deviation from the declared conjugation symmetry across both axes.
    pub fn symmetry_deviation(&self) -> f64 {
        let s = self.kind.reflection_sign();
        let g = &self.grid;
        let mut dev = 0.0f64;
        for j in 0..g.n2 {
            for i in 0..g.n1 {
                let v = self.at(i, j);
                let vx = self.at(g.mirror_i(i), j);
                let vy = self.at(i, g.mirror_j(j));
                dev = dev.max((vx - s * v.conj()).norm());
                dev = dev.max((vy - s * v.conj()).norm());
            }
        }
        dev
    }
}

/// Value of the product ansatz at an arbitrary point: Π_j w(ρ_j) e^{i d_j θ_j}
/// with degree −1 realized as the conjugate factor.
pub fn ansatz_value(cfg: &VortexConfiguration, profile: &VortexProfile, z: Complex64) -> Complex64 {
    let mut v = Complex64::new(1.0, 0.0);
    for vx in &cfg.vortices {
        let dz = z - vx.center;
        let rho = dz.norm();
        let w = profile.w_at(rho);
        let phase = if rho == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            dz / rho
        };
        let factor = w * phase;
        v *= if vx.degree >= 0 { factor } else { factor.conj() };
    }
    v
}

/// Build the multi-vortex ansatz field V_d on the grid.
pub fn build_ansatz(
    cfg: &VortexConfiguration,
    profile: &VortexProfile,
    grid: &Grid2D,
) -> Result<ComplexField> {
    for v in &cfg.vortices {
        if v.center.re.abs() > grid.l1 - 3.0 || v.center.im.abs() > grid.l2 - 3.0 {
            return Err(GlError::Geometry(format!(
                "vortex at {} within margin 3 of the grid edge (half-widths {} x {})",
                v.center, grid.l1, grid.l2
            )));
        }
        if v.degree.abs() != 1 {
            return Err(GlError::Config(format!("only degrees ±1 supported, got {}", v.degree)));
        }
    }
    Ok(ComplexField::from_fn(grid.clone(), cfg.clone(), FieldKind::Ansatz, |z| {
        ansatz_value(cfg, profile, z)
    }))
}

/// A detected zero of the field with its winding number.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrackedVortex {
    pub position: Complex64,
    pub winding: i32,
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a;
    while a > std::f64::consts::PI {
        a -= 2.0 * std::f64::consts::PI;
    }
    while a <= -std::f64::consts::PI {
        a += 2.0 * std::f64::consts::PI;
    }
    a
}

/// Locate vortices by the winding of arg f around each cell of a sampling
/// lattice; nonzero cells are merged into clusters whose raw windings are
/// summed before rounding; positions refined by Newton on the bilinear
/// interpolant.
pub fn track_vortices(f: &ComplexField) -> Result<Vec<TrackedVortex>> {
    let g = &f.grid;
    // boundary must stay away from zero for the winding count to make sense
    for i in 0..g.n1 {
        for j in [0usize, g.n2 - 1] {
            if f.values[g.idx(i, j)].norm() == 0.0 {
                return Err(GlError::Domain("zero modulus on the grid boundary".into()));
            }
        }
    }
    // A zero exactly on a lattice point or on a cell edge makes the per-cell
    // winding ambiguous (±π edge jumps); retry once on a shifted lattice.
    if let Some(cells) = winding_cells(f, 0.0, 0.0) {
        return clusters(f, cells, 0.0, 0.0);
    }
    if let Some(cells) = winding_cells(f, 0.25, 0.5) {
        return clusters(f, cells, 0.25, 0.5);
    }
    Err(GlError::Domain(
        "zero modulus on sampling points after half-cell perturbation".into(),
    ))
}

/// Raw winding per lattice cell, sampling at nodes offset by (ox, oy)·h.
/// Returns None when a sample is zero or an edge jump is within roundoff of
/// ±π (ambiguous tie).
fn winding_cells(f: &ComplexField, ox: f64, oy: f64) -> Option<Vec<(usize, usize, f64)>> {
    let g = &f.grid;
    let sample = |i: usize, j: usize| -> Option<Complex64> {
        if ox == 0.0 && oy == 0.0 {
            return Some(f.values[g.idx(i, j)]);
        }
        let z = g.z(i, j) + Complex64::new(ox * g.h, oy * g.h);
        let z = Complex64::new(z.re.clamp(-g.l1, g.l1), z.im.clamp(-g.l2, g.l2));
        f.interp(z).ok()
    };
    let mut cells = Vec::new();
    for j in 0..g.n2 - 1 {
        for i in 0..g.n1 - 1 {
            let corners = [
                sample(i, j)?,
                sample(i + 1, j)?,
                sample(i + 1, j + 1)?,
                sample(i, j + 1)?,
            ];
            if corners.iter().any(|c| c.norm() == 0.0) {
                return None;
            }
            let mut total = 0.0;
            for k in 0..4 {
                let a = corners[k];
                let b = corners[(k + 1) % 4];
                let jump = wrap_angle(b.arg() - a.arg());
                if (jump.abs() - std::f64::consts::PI).abs() < 1e-9 {
                    return None;
                }
                total += jump;
            }
            let winding = total / (2.0 * std::f64::consts::PI);
            if winding.abs() > 0.25 {
                cells.push((i, j, winding));
            }
        }
    }
    Some(cells)
}

fn clusters(
    f: &ComplexField,
    cells: Vec<(usize, usize, f64)>,
    ox: f64,
    oy: f64,
) -> Result<Vec<TrackedVortex>> {
    let g = &f.grid;
    let mut used = vec![false; cells.len()];
    let mut out = Vec::new();
    for s in 0..cells.len() {
        if used[s] {
            continue;
        }
        let mut stack = vec![s];
        used[s] = true;
        let mut members = Vec::new();
        while let Some(k) = stack.pop() {
            members.push(cells[k]);
            for (t, c) in cells.iter().enumerate() {
                if !used[t]
                    && (c.0 as i64 - cells[k].0 as i64).abs() <= 1
                    && (c.1 as i64 - cells[k].1 as i64).abs() <= 1
                {
                    used[t] = true;
                    stack.push(t);
                }
            }
        }
        let raw: f64 = members.iter().map(|m| m.2).sum();
        let winding = raw.round() as i32;
        if winding == 0 {
            continue;
        }
        let (ci, cj, _) = members
            .iter()
            .copied()
            .max_by(|a, b| a.2.abs().partial_cmp(&b.2.abs()).unwrap())
            .unwrap();
        let start = g.z(ci, cj) + Complex64::new((0.5 + ox) * g.h, (0.5 + oy) * g.h);
        let pos = interp_zero(f, start);
        out.push(TrackedVortex { position: pos, winding });
    }
    out.sort_by(|a, b| {
        (a.position.re, a.position.im)
            .partial_cmp(&(b.position.re, b.position.im))
            .unwrap()
    });
    Ok(out)
}

/// Newton on the bilinear interpolant from `start`, confined to a 2h box.
fn interp_zero(f: &ComplexField, start: Complex64) -> Complex64 {
    let g = &f.grid;
    let h = g.h;
    let mut z = start;
    let fd = 1e-3 * h;
    for _ in 0..30 {
        let v = match f.interp(z) {
            Ok(v) => v,
            Err(_) => return start,
        };
        let vx = f.interp(z + Complex64::new(fd, 0.0)).unwrap_or(v);
        let vmx = f.interp(z - Complex64::new(fd, 0.0)).unwrap_or(v);
        let vy = f.interp(z + Complex64::new(0.0, fd)).unwrap_or(v);
        let vmy = f.interp(z - Complex64::new(0.0, fd)).unwrap_or(v);
        let dvx = (vx - vmx) / (2.0 * fd);
        let dvy = (vy - vmy) / (2.0 * fd);
        let det = dvx.re * dvy.im - dvy.re * dvx.im;
        if det.abs() < 1e-300 {
            break;
        }
        let dx = (v.re * dvy.im - dvy.re * v.im) / det;
        let dy = (dvx.re * v.im - v.re * dvx.im) / det;
        let step = Complex64::new(dx, dy);
        z -= step;
        if (z - start).norm() > 2.0 * h {
            return start;
        }
        if step.norm() < 1e-13 * h {
            break;
        }
    }
    z
}

/// Helical lift: u(r, θ, t) = e^{iDt} · U((r/ε) e^{i(θ - t)}) where U is the
/// 2D field in rescaled coordinates and D the total degree.
pub fn helical_lift(
    u2d: &ComplexField,
    cfg: &VortexConfiguration,
    r: f64,
    theta: f64,
    t: f64,
) -> Result<Complex64> {
    let rho = r / cfg.eps;
    let z = Complex64::from_polar(rho, theta - t);
    let base = u2d.interp(z)?;
    let d = cfg.total_degree() as f64;
    Ok(Complex64::from_polar(1.0, d * t) * base)
}
