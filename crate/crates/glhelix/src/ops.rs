//! Discrete differential and nonlinear operators of the reduced planar
//! problem: S, S₀, S₁, the linearization L^ε (and its regularized
//! product-variable form), the single-vortex linearization L⁰, the ansatz
//! error E = S(V_d) with its semi-analytic closed form, and the nonlinearity
//! N(ψ).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GlError, Result};
use crate::field::{build_ansatz, ComplexField, FieldKind, Grid2D, VortexConfiguration};
use crate::profile::VortexProfile;
use crate::util::{eta1, eta1_shift, par_rows};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Parameters shared by all operator evaluations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorParams {
    pub eps: f64,
    /// Total transversal degree D; the t-derivative block carries
    /// ε²(∂²_ss − 2iD ∂_s − D²).
    pub degree: i32,
    /// Radius below which divisions by V_d are refused; fields that require
    /// them are left undefined (NaN) inside.
    pub core_cutoff: f64,
    /// Include the η̃·(S(V_d)/V_d)·ψ zeroth-order term of L^ε.
    pub include_eta_term: bool,
}

impl OperatorParams {
    pub fn for_cfg(cfg: &VortexConfiguration) -> Self {
        OperatorParams {
            eps: cfg.eps,
            degree: cfg.total_degree(),
            core_cutoff: 0.5,
            include_eta_term: true,
        }
    }
}

/// Cutoff η(z) = Σ_j η₁(ρ_j): 1 inside the unit cores, 0 beyond radius 2.
pub fn eta_cut(cfg: &VortexConfiguration, z: Complex64) -> f64 {
    let s: f64 = cfg.vortices.iter().map(|v| eta1((z - v.center).norm())).sum();
    s.min(1.0)
}

/// Blending cutoff η̃(z) = Σ_j η₁(ρ_j − 1): 1 inside radius 2, 0 beyond 3.
pub fn eta_tilde(cfg: &VortexConfiguration, z: Complex64) -> f64 {
    let s: f64 = cfg
        .vortices
        .iter()
        .map(|v| eta1_shift((z - v.center).norm()))
        .sum();
    s.min(1.0)
}

/// χ(z) = η₁(|z|/2): 1 on |z| ≤ 2, 0 beyond 4.
pub fn chi(z: Complex64) -> f64 {
    eta1(z.norm() / 2.0)
}

/// χ_j(z) = η₁(ρ_j/2) around vortex j.
pub fn chi_j(cfg: &VortexConfiguration, j: usize, z: Complex64) -> f64 {
    eta1((z - cfg.vortices[j].center).norm() / 2.0)
}

/// η_{j,R}(z) = η₁(ρ_j/R).
pub fn eta_j_r(cfg: &VortexConfiguration, j: usize, r: f64, z: Complex64) -> f64 {
    eta1((z - cfg.vortices[j].center).norm() / r)
}

/// Closed-form local data of the standard vortex W = w(ρ)e^{iθ} at z − c.
#[derive(Debug, Clone, Copy)]
pub struct WLocal {
    pub rho: f64,
    pub w: f64,
    pub wp: f64,
    pub wpp: f64,
    pub cos_t: f64,
    pub sin_t: f64,
    /// e^{iθ}
    pub phase: Complex64,
}

impl WLocal {
    pub fn new(profile: &VortexProfile, dz: Complex64) -> Self {
        let rho = dz.norm();
        if rho < 1e-300 {
            return WLocal {
                rho: 0.0,
                w: 0.0,
                wp: profile.alpha_slope,
                wpp: 0.0,
                cos_t: 1.0,
                sin_t: 0.0,
                phase: Complex64::new(1.0, 0.0),
            };
        }
        let (w, wp, wpp) = profile.eval(rho).expect("nonnegative radius");
        WLocal {
            rho,
            w,
            wp,
            wpp,
            cos_t: dz.re / rho,
            sin_t: dz.im / rho,
            phase: dz / rho,
        }
    }

    /// W(z−c)
    pub fn value(&self) -> Complex64 {
        self.w * self.phase
    }

    /// W_{x1}
    pub fn dx1(&self) -> Complex64 {
        if self.rho == 0.0 {
            return Complex64::new(self.wp, 0.0);
        }
        self.phase * Complex64::new(self.wp * self.cos_t, -self.w / self.rho * self.sin_t)
    }

    /// W_{x2}
    pub fn dx2(&self) -> Complex64 {
        if self.rho == 0.0 {
            return Complex64::new(0.0, self.wp);
        }
        self.phase * Complex64::new(self.wp * self.sin_t, self.w / self.rho * self.cos_t)
    }

    /// W_{x2x2}
    pub fn dx2x2(&self) -> Complex64 {
        if self.rho == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let q = self.wp / self.rho - self.w / (self.rho * self.rho);
        self.phase
            * Complex64::new(
                self.wpp * self.sin_t * self.sin_t + q * self.cos_t * self.cos_t,
                2.0 * self.sin_t * self.cos_t * q,
            )
    }

    /// ∇W/W = (∂₁W/W, ∂₂W/W); requires ρ > 0.
    pub fn dlog(&self) -> (Complex64, Complex64) {
        let a = self.wp / self.w;
        (
            Complex64::new(a * self.cos_t, 0.0) - I * self.sin_t / self.rho,
            Complex64::new(a * self.sin_t, 0.0) + I * self.cos_t / self.rho,
        )
    }
}

/// ∇V_d/V_d as a pair of complex components (sum of per-vortex log
/// derivatives, conjugated for degree −1 factors).
pub fn vd_dlog(
    cfg: &VortexConfiguration,
    profile: &VortexProfile,
    z: Complex64,
) -> (Complex64, Complex64) {
    let mut d1 = Complex64::new(0.0, 0.0);
    let mut d2 = Complex64::new(0.0, 0.0);
    for v in &cfg.vortices {
        let loc = WLocal::new(profile, z - v.center);
        let (a, b) = loc.dlog();
        if v.degree >= 0 {
            d1 += a;
            d2 += b;
        } else {
            d1 += a.conj();
            d2 += b.conj();
        }
    }
    (d1, d2)
}

fn check_grid(grid: &Grid2D) -> Result<()> {
    if grid.h > 0.5 {
        return Err(GlError::Grid(format!(
            "grid too coarse for the vortex core: h = {} > 0.5",
            grid.h
        )));
    }
    Ok(())
}

/// Second-order stencil data of a complex field at (i, j): returns
/// (Δv, ∂₁v, ∂₂v, ∂²_ss v, ∂_s v). Caller guarantees 1 ≤ i,j ≤ n−2.
#[inline]
fn stencil_at(
    v: &ComplexField,
    i: usize,
    j: usize,
) -> (Complex64, Complex64, Complex64, Complex64, Complex64) {
    let g = &v.grid;
    let h = g.h;
    let c = v.at(i, j);
    let xm = v.at(i - 1, j);
    let xp = v.at(i + 1, j);
    let ym = v.at(i, j - 1);
    let yp = v.at(i, j + 1);
    let h2 = h * h;
    // summation groupings are chosen mirror-invariant so reflections commute
    // with the stencils bit-exactly
    let lap = ((xm + xp) + (ym + yp) - 4.0 * c) / h2;
    let d1 = (xp - xm) / (2.0 * h);
    let d2 = (yp - ym) / (2.0 * h);
    let d11 = ((xp + xm) - 2.0 * c) / h2;
    let d22 = ((yp + ym) - 2.0 * c) / h2;
    let d12 = ((v.at(i + 1, j + 1) + v.at(i - 1, j - 1))
        - (v.at(i + 1, j - 1) + v.at(i - 1, j + 1)))
        / (4.0 * h2);
    let x1 = g.x(i);
    let x2 = g.y(j);
    // ∂²_ss = x₂²∂₁₁ + x₁²∂₂₂ − 2x₁x₂∂₁₂ − x₁∂₁ − x₂∂₂
    let dss = ((x2 * x2) * d11 + (x1 * x1) * d22)
        - (2.0 * (x1 * x2)) * d12
        - (x1 * d1 + x2 * d2);
    // ∂_s = x₁∂₂ − x₂∂₁
    let ds = x1 * d2 - x2 * d1;
    (lap, d1, d2, dss, ds)
}

/// Full operator S(v) = Δv + ε²(∂²_ss v − 2iD ∂_s v − D² v) + (1−|v|²)v.
pub fn apply_s(v: &ComplexField, op: &OperatorParams) -> Result<ComplexField> {
    check_grid(&v.grid)?;
    let g = v.grid.clone();
    let e2 = op.eps * op.eps;
    let d = op.degree as f64;
    let rows = par_rows(g.n2, |j| {
        let mut row = vec![Complex64::new(f64::NAN, f64::NAN); g.n1];
        if j == 0 || j == g.n2 - 1 {
            return row;
        }
        for i in 1..g.n1 - 1 {
            let (lap, _, _, dss, ds) = stencil_at(v, i, j);
            let c = v.at(i, j);
            let s1 = e2 * (dss - 2.0 * I * d * ds - d * d * c);
            row[i] = lap + s1 + (1.0 - c.norm_sqr()) * c;
        }
        row
    });
    Ok(ComplexField {
        grid: g,
        values: rows.into_iter().flatten().collect(),
        cfg: v.cfg.clone(),
        kind: FieldKind::Residual,
        valid_margin: v.valid_margin + 1,
    })
}

/// S₀ only: Δv + (1−|v|²)v (the ε² block disabled).
pub fn apply_s0(v: &ComplexField) -> Result<ComplexField> {
    let op = OperatorParams {
        eps: 0.0,
        degree: 0,
        core_cutoff: 0.5,
        include_eta_term: true,
    };
    apply_s(v, &op)
}

/// Single-vortex linearization L⁰(φ) = Δφ + (1−|W|²)φ − 2Re(conj(W)φ)W.
pub fn apply_l0(phi: &ComplexField, w_field: &ComplexField) -> Result<ComplexField> {
    check_grid(&phi.grid)?;
    let g = phi.grid.clone();
    let rows = par_rows(g.n2, |j| {
        let mut row = vec![Complex64::new(f64::NAN, f64::NAN); g.n1];
        if j == 0 || j == g.n2 - 1 {
            return row;
        }
        for i in 1..g.n1 - 1 {
            let (lap, ..) = stencil_at(phi, i, j);
            let p = phi.at(i, j);
            let w = w_field.at(i, j);
            row[i] = lap + (1.0 - w.norm_sqr()) * p - 2.0 * (w.conj() * p).re * w;
        }
        row
    });
    Ok(ComplexField {
        grid: g,
        values: rows.into_iter().flatten().collect(),
        cfg: phi.cfg.clone(),
        kind: phi.kind,
        valid_margin: phi.valid_margin + 1,
    })
}

/// The ansatz error E = S(V_d) together with R = −i E / V_d and its parity
/// refinements.
#[derive(Debug, Clone)]
pub struct ErrorPair {
    /// Semi-analytic E = S(V_d) (exact up to profile interpolation).
    pub e: ComplexField,
    /// Finite-difference E for cross-checking.
    pub e_fd: ComplexField,
    /// R = −i E/V_d, undefined (NaN) inside the core cutoff.
    pub r: ComplexField,
    /// Odd part R^o (reflection identity, cutoff at R_ε).
    pub r_odd: ComplexField,
    /// Even part R^e = R − R^o.
    pub r_even: ComplexField,
    /// Closed-form slowly-decaying odd piece R^o_α.
    pub r_o_alpha: ComplexField,
    /// R^o_β = R^o − R^o_α.
    pub r_o_beta: ComplexField,
    /// max |E_semi − E_fd| over interior nodes with min ρ_j ≥ 1.
    pub fd_agreement: f64,
}

/// Local polar frames of both vortices of the pair ansatz.
struct PairFrame {
    a: WLocal,
    b: WLocal,
}

impl PairFrame {
    fn new(cfg: &VortexConfiguration, profile: &VortexProfile, z: Complex64) -> Self {
        let dt = cfg.d_tilde();
        PairFrame {
            a: WLocal::new(profile, z - Complex64::new(dt, 0.0)),
            b: WLocal::new(profile, z + Complex64::new(dt, 0.0)),
        }
    }
}

/// Closed-form S₀(V_d) = 2(W^a_{x1}W^b_{x1} + W^a_{x2}W^b_{x2})
/// + (1 − |W^aW^b|² + |W^a|² − 1 + |W^b|² − 1) W^aW^b.
pub fn s0_vd_analytic(
    cfg: &VortexConfiguration,
    profile: &VortexProfile,
    z: Complex64,
) -> Complex64 {
    let f = PairFrame::new(cfg, profile, z);
    let cross = 2.0 * (f.a.dx1() * f.b.dx1() + f.a.dx2() * f.b.dx2());
    let (w1, w2) = (f.a.w, f.b.w);
    let pot = 1.0 - (w1 * w2).powi(2) + w1 * w1 + w2 * w2 - 2.0;
    cross + pot * f.a.value() * f.b.value()
}

/// Closed-form S₁(V_d) = ε²(∂²_ss − 4i∂_s − 4)V_d for the two-vortex ansatz.
pub fn s1_vd_analytic(
    cfg: &VortexConfiguration,
    profile: &VortexProfile,
    z: Complex64,
) -> Complex64 {
    let f = PairFrame::new(cfg, profile, z);
    let dt = cfg.d_tilde();
    let e2 = cfg.eps * cfg.eps;
    let (w1, w1p, w1pp) = (f.a.w, f.a.wp, f.a.wpp);
    let (w2, w2p, w2pp) = (f.b.w, f.b.wp, f.b.wpp);
    let (c1, s1) = (f.a.cos_t, f.a.sin_t);
    let (c2, s2) = (f.b.cos_t, f.b.sin_t);
    let (r1, r2) = (f.a.rho, f.b.rho);
    // ∂_s ρ_j, ∂²_ss ρ_j, ∂_s θ_j, ∂²_ss θ_j in closed form
    let dsr1 = dt * s1;
    let dsr2 = -dt * s2;
    let d2sr1 = dt * c1 + dt * dt * c1 * c1 / r1;
    let d2sr2 = -dt * c2 + dt * dt * c2 * c2 / r2;
    let sum_dst_m2 = dt * (c1 / r1 - c2 / r2); // ∂_s(θ₁+θ₂) − 2
    let d2st =
        dt * (s2 / r2 - s1 / r1) - 2.0 * dt * dt * (s1 * c1 / (r1 * r1) + s2 * c2 / (r2 * r2));
    let phase = f.a.phase * f.b.phase;

    let re_part = (dsr1 * dsr1) * w1pp * w2
        + (dsr2 * dsr2) * w2pp * w1
        + 2.0 * dsr1 * dsr2 * w1p * w2p
        + d2sr1 * w1p * w2
        + d2sr2 * w2p * w1
        - sum_dst_m2 * sum_dst_m2 * w1 * w2;
    let im_part = d2st * w1 * w2 + 2.0 * sum_dst_m2 * (dsr1 * w1p * w2 + dsr2 * w2p * w1);
    e2 * phase * Complex64::new(re_part, im_part)
}

/// The remainder G of the near-vortex decomposition
/// S₁(V_d) = ε²d̃² W^a_{x2x2}W^b + ε²d̃ W^a_{x1}W^b + G.
pub fn s1_g_remainder(
    cfg: &VortexConfiguration,
    profile: &VortexProfile,
    z: Complex64,
) -> Complex64 {
    let f = PairFrame::new(cfg, profile, z);
    let e2 = cfg.eps * cfg.eps;
    let dt = cfg.d_tilde();
    s1_vd_analytic(cfg, profile, z)
        - e2 * dt * dt * f.a.dx2x2() * f.b.value()
        - e2 * dt * f.a.dx1() * f.b.value()
}

/// Semi-analytic E(z) = S₀(V_d) + S₁(V_d).
pub fn error_analytic(
    cfg: &VortexConfiguration,
    profile: &VortexProfile,
    z: Complex64,
) -> Complex64 {
    s0_vd_analytic(cfg, profile, z) + s1_vd_analytic(cfg, profile, z)
}

/// Closed-form slowly-decaying odd error component R^o_α built from the
/// leading odd-mode terms of S₁(V_d)/(iV_d):
/// R^{j,o}_α = ½[r^{o,1}(z) + conj r^{o,2}(ℛ_j z)],
/// R^o_α = Σ_j η_{j,R_ε} R^{j,o}_α.
pub fn r_o_alpha_analytic(cfg: &VortexConfiguration, r_eps: f64, z: Complex64) -> Complex64 {
    let dt = cfg.d_tilde();
    let d1 = Complex64::new(dt, 0.0);
    let d2 = Complex64::new(-dt, 0.0);
    let refl = |c: Complex64, z: Complex64| 2.0 * c - z.conj();
    let r1a = 0.5 * (r_small_o1(cfg, z) + r_small_o2(cfg, refl(d1, z)).conj());
    let r2a = 0.5 * (r_small_o1(cfg, z) + r_small_o2(cfg, refl(d2, z)).conj());
    eta1((z - d1).norm() / r_eps) * r1a + eta1((z - d2).norm() / r_eps) * r2a
}

/// r^{o,1}: leading odd terms in the frame of vortex 1.
fn r_small_o1(cfg: &VortexConfiguration, z: Complex64) -> Complex64 {
    let dt = cfg.d_tilde();
    let la = cfg.log_abs();
    let dh2 = cfg.d_hat * cfg.d_hat / la;
    let deps = cfg.d_hat * cfg.eps / la.sqrt();
    let za = z - Complex64::new(dt, 0.0);
    let zb = z + Complex64::new(dt, 0.0);
    let (r1, r2) = (za.norm(), zb.norm());
    let (c1, s1) = (za.re / r1, za.im / r1);
    let (c2, s2) = (zb.re / r2, zb.im / r2);
    -I * dh2 * (2.0 * c1 * c2 / (r1 * r2) + c2 * c2 / (r2 * r2))
        + Complex64::new(deps * (-s1 / r1) - 2.0 * dh2 * s2 * c2 / (r2 * r2), 0.0)
}

/// r^{o,2}: leading odd terms in the frame of vortex 2.
fn r_small_o2(cfg: &VortexConfiguration, z: Complex64) -> Complex64 {
    let dt = cfg.d_tilde();
    let la = cfg.log_abs();
    let dh2 = cfg.d_hat * cfg.d_hat / la;
    let deps = cfg.d_hat * cfg.eps / la.sqrt();
    let za = z - Complex64::new(dt, 0.0);
    let zb = z + Complex64::new(dt, 0.0);
    let (r1, r2) = (za.norm(), zb.norm());
    let (c1, s1) = (za.re / r1, za.im / r1);
    let (c2, s2) = (zb.re / r2, zb.im / r2);
    -I * dh2 * (2.0 * c1 * c2 / (r1 * r2) + c1 * c1 / (r1 * r1))
        + Complex64::new(deps * (s2 / r2) - 2.0 * dh2 * s1 * c1 / (r1 * r1), 0.0)
}

/// Compute the ansatz error by both evaluation paths and populate the parity
/// split caches. `r_eps` is the localization radius of the odd part.
pub fn compute_error(
    cfg: &VortexConfiguration,
    profile: &VortexProfile,
    grid: &Grid2D,
    op: &OperatorParams,
    r_eps: f64,
) -> Result<ErrorPair> {
    if cfg.vortices.len() != 2 || cfg.vortices.iter().any(|v| v.degree != 1) {
        return Err(GlError::Config(
            "closed-form error path requires the two-vortex degree +1 ansatz".into(),
        ));
    }
    let vd = build_ansatz(cfg, profile, grid)?;
    let e_fd = apply_s(&vd, op)?;
    let e = ComplexField {
        grid: grid.clone(),
        values: par_rows(grid.n2, |j| {
            (0..grid.n1)
                .map(|i| error_analytic(cfg, profile, grid.z(i, j)))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect(),
        cfg: cfg.clone(),
        kind: FieldKind::Residual,
        valid_margin: 0,
    };

    let mut fd_agreement = 0.0f64;
    let mut worst = (0usize, 0usize);
    for j in 1..grid.n2 - 1 {
        for i in 1..grid.n1 - 1 {
            let z = grid.z(i, j);
            if cfg.min_rho(z) >= 1.0 {
                let d = (e.at(i, j) - e_fd.at(i, j)).norm();
                if d > fd_agreement {
                    fd_agreement = d;
                    worst = (i, j);
                }
            }
        }
    }
    // O(h²) consistency between the two paths; a gross disagreement means a
    // stencil bug, not discretization error
    if fd_agreement > 100.0 * grid.h * grid.h {
        return Err(GlError::Grid(format!(
            "semi-analytic and FD error paths disagree by {fd_agreement:e} at node {worst:?} (z = {})",
            grid.z(worst.0, worst.1)
        )));
    }

    let cutoff = op.core_cutoff;
    let r = ComplexField {
        grid: grid.clone(),
        values: par_rows(grid.n2, |j| {
            (0..grid.n1)
                .map(|i| {
                    let z = grid.z(i, j);
                    if cfg.min_rho(z) >= cutoff {
                        -I * e.at(i, j) / vd.at(i, j)
                    } else {
                        Complex64::new(f64::NAN, f64::NAN)
                    }
                })
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect(),
        cfg: cfg.clone(),
        kind: FieldKind::Residual,
        valid_margin: 0,
    };

    let (r_odd, r_even) = crate::modes::parity_split(&r, r_eps)?;
    let r_o_alpha = ComplexField {
        grid: grid.clone(),
        values: par_rows(grid.n2, |j| {
            (0..grid.n1)
                .map(|i| r_o_alpha_analytic(cfg, r_eps, grid.z(i, j)))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect(),
        cfg: cfg.clone(),
        kind: FieldKind::Residual,
        valid_margin: 0,
    };
    let mut r_o_beta = r_odd.clone();
    for k in 0..r_o_beta.values.len() {
        r_o_beta.values[k] -= r_o_alpha.values[k];
    }

    Ok(ErrorPair {
        e,
        e_fd,
        r,
        r_odd,
        r_even,
        r_o_alpha,
        r_o_beta,
        fd_agreement,
    })
}

/// Regularized application iV_d·L^ε(ψ) = L^ε_d(iV_dψ) + i(η̃−1)Eψ.
///
/// The identity removes every division by V_d, so the result is defined on
/// all interior nodes including the vortex cores.
pub fn apply_l_eps_reg(
    psi: &ComplexField,
    vd: &ComplexField,
    e: &ComplexField,
    op: &OperatorParams,
) -> Result<ComplexField> {
    check_grid(&psi.grid)?;
    let g = psi.grid.clone();
    let cfg = psi.cfg.clone();
    let phi = ComplexField {
        grid: g.clone(),
        values: psi
            .values
            .iter()
            .zip(&vd.values)
            .map(|(p, v)| I * v * p)
            .collect(),
        cfg: cfg.clone(),
        kind: FieldKind::Perturbation,
        valid_margin: psi.valid_margin,
    };
    let e2 = op.eps * op.eps;
    let d = op.degree as f64;
    let rows = par_rows(g.n2, |j| {
        let mut row = vec![Complex64::new(f64::NAN, f64::NAN); g.n1];
        if j == 0 || j == g.n2 - 1 {
            return row;
        }
        for i in 1..g.n1 - 1 {
            let (lap, _, _, dss, ds) = stencil_at(&phi, i, j);
            let p = phi.at(i, j);
            let v = vd.at(i, j);
            let z = g.z(i, j);
            // L^ε_d(φ) = Δφ + ε²(∂²_ss − 2iD∂_s − D²)φ + (1−|V_d|²)φ − 2Re(conj(V_d)φ)V_d
            let mut out = lap + e2 * (dss - 2.0 * I * d * ds - d * d * p)
                + (1.0 - v.norm_sqr()) * p
                - 2.0 * (v.conj() * p).re * v;
            if op.include_eta_term {
                out += I * (eta_tilde(&cfg, z) - 1.0) * e.at(i, j) * psi.at(i, j);
            } else {
                // without the η̃(S(V_d)/V_d)ψ zeroth-order term
                out -= I * e.at(i, j) * psi.at(i, j);
            }
            row[i] = out;
        }
        row
    });
    Ok(ComplexField {
        grid: g,
        values: rows.into_iter().flatten().collect(),
        cfg,
        kind: FieldKind::Residual,
        valid_margin: psi.valid_margin + 1,
    })
}

/// L^ε(ψ) in the ψ variable. Away from the vortices the direct form
///
///   Δψ + 2(∇V_d/V_d)·∇ψ − 2i|V_d|²Im ψ
///   + ε²(∂²_ss ψ + 2(∂_sV_d/V_d)∂_s ψ − 2iD ∂_s ψ) + η̃(E/V_d)ψ
///
/// with semi-analytic coefficients is used; inside ρ_j < 3 it is blended by
/// η̃ with the conjugated product-variable form, which avoids the division
/// by small |V_d|. Undefined (NaN) inside the core cutoff.
pub fn apply_l_eps(
    psi: &ComplexField,
    profile: &VortexProfile,
    vd: &ComplexField,
    e: &ComplexField,
    op: &OperatorParams,
) -> Result<ComplexField> {
    let reg = apply_l_eps_reg(psi, vd, e, op)?;
    let g = reg.grid.clone();
    let cfg = psi.cfg.clone();
    let cutoff = op.core_cutoff;
    let e2 = op.eps * op.eps;
    let d = op.degree as f64;
    let rows = par_rows(g.n2, |j| {
        let mut row = vec![Complex64::new(f64::NAN, f64::NAN); g.n1];
        if j == 0 || j == g.n2 - 1 {
            return row;
        }
        for i in 1..g.n1 - 1 {
            let z = g.z(i, j);
            if cfg.min_rho(z) < cutoff {
                continue;
            }
            let et = eta_tilde(&cfg, z);
            let conj_form = reg.at(i, j) / (I * vd.at(i, j));
            let direct = if et < 1.0 {
                let (lap, d1, d2, dss, ds) = stencil_at(psi, i, j);
                let (v1, v2) = vd_dlog(&cfg, profile, z);
                let dslog = g.x(i) * v2 - g.y(j) * v1;
                let p = psi.at(i, j);
                let mut out = lap + 2.0 * (v1 * d1 + v2 * d2)
                    - 2.0 * I * vd.at(i, j).norm_sqr() * p.im
                    + e2 * (dss + 2.0 * dslog * ds - 2.0 * I * d * ds);
                if op.include_eta_term {
                    out += et * e.at(i, j) / vd.at(i, j) * p;
                }
                out
            } else {
                Complex64::new(0.0, 0.0)
            };
            row[i] = et * conj_form + (1.0 - et) * direct;
        }
        row
    });
    Ok(ComplexField {
        grid: g,
        values: rows.into_iter().flatten().collect(),
        cfg,
        kind: FieldKind::Residual,
        valid_margin: reg.valid_margin,
    })
}

/// Overflow guard for e^{iψ}-type terms.
const IM_CLAMP: f64 = 50.0;

/// Regularized nonlinearity iV_d·N(ψ). Returns the field and a flag set when
/// any exponent had to be clamped.
pub fn apply_n_reg(
    psi: &ComplexField,
    vd: &ComplexField,
    e: &ComplexField,
    op: &OperatorParams,
) -> Result<(ComplexField, bool)> {
    check_grid(&psi.grid)?;
    let g = psi.grid.clone();
    let cfg = psi.cfg.clone();
    let e2 = op.eps * op.eps;

    let clamp_exp = |p: Complex64| -> (Complex64, bool) {
        if p.im.abs() > IM_CLAMP {
            (Complex64::new(p.re, p.im.clamp(-IM_CLAMP, IM_CLAMP)), true)
        } else {
            (p, false)
        }
    };

    // γ(ψ) = (1−η) V_d (e^{iψ} − 1 − iψ)
    let mut clamped = false;
    let mut gamma_vals = Vec::with_capacity(g.len());
    for j in 0..g.n2 {
        for i in 0..g.n1 {
            let z = g.z(i, j);
            let (p, cl) = clamp_exp(psi.at(i, j));
            clamped |= cl;
            let ex = (I * p).exp();
            gamma_vals.push((1.0 - eta_cut(&cfg, z)) * vd.at(i, j) * (ex - 1.0 - I * p));
        }
    }
    let gamma = ComplexField {
        grid: g.clone(),
        values: gamma_vals,
        cfg: cfg.clone(),
        kind: FieldKind::Perturbation,
        valid_margin: psi.valid_margin,
    };

    let d = op.degree as f64;
    let rows = par_rows(g.n2, |j| {
        let mut row = vec![Complex64::new(f64::NAN, f64::NAN); g.n1];
        if j == 0 || j == g.n2 - 1 {
            return row;
        }
        for i in 1..g.n1 - 1 {
            let z = g.z(i, j);
            let v = vd.at(i, j);
            let (p, _) = clamp_exp(psi.at(i, j));
            let et = eta_tilde(&cfg, z);
            let ex = (I * p).exp();
            let dtil = et + (1.0 - et) * ex;

            // near-field block: L₀(γ) + S₁(γ) + N₀(iV_dψ + γ)
            let near = if et > 0.0 {
                let (lapg, _, _, dssg, dsg) = stencil_at(&gamma, i, j);
                let gm = gamma.at(i, j);
                let l0g = lapg + (1.0 - v.norm_sqr()) * gm - 2.0 * (v.conj() * gm).re * v;
                let s1g = e2 * (dssg - 2.0 * I * d * dsg - d * d * gm);
                let phi = I * v * p + gm;
                let n0 = -2.0 * (v.conj() * phi).re * phi - phi.norm_sqr() * (v + phi);
                l0g + s1g + n0
            } else {
                Complex64::new(0.0, 0.0)
            };

            // far-field block: Ñ₀(ψ) + ε² i (∂_s ψ)²
            let far = if et < 1.0 {
                let (_, d1, d2, _, dsp) = stencil_at(psi, i, j);
                let grad_sq = d1 * d1 + d2 * d2;
                let im = p.im;
                let n_tilde = I * grad_sq + I * v.norm_sqr() * ((-2.0 * im).exp() - 1.0 + 2.0 * im);
                n_tilde + e2 * I * dsp * dsp
            } else {
                Complex64::new(0.0, 0.0)
            };

            // division-free grouping of iV_d·N(ψ)
            row[i] = et * (1.0 - dtil) / dtil * I * e.at(i, j) * p + (et / dtil) * near
                + I * v * (1.0 - et) * ex / dtil * far;
        }
        row
    });

    Ok((
        ComplexField {
            grid: g,
            values: rows.into_iter().flatten().collect(),
            cfg,
            kind: FieldKind::Residual,
            valid_margin: psi.valid_margin + 1,
        },
        clamped,
    ))
}

/// N(ψ) in the ψ variable, undefined inside the core cutoff.
pub fn apply_n(
    psi: &ComplexField,
    vd: &ComplexField,
    e: &ComplexField,
    op: &OperatorParams,
) -> Result<(ComplexField, bool)> {
    let (reg, clamped) = apply_n_reg(psi, vd, e, op)?;
    let g = reg.grid.clone();
    let cfg = psi.cfg.clone();
    let cutoff = op.core_cutoff;
    let values = par_rows(g.n2, |j| {
        (0..g.n1)
            .map(|i| {
                let z = g.z(i, j);
                if cfg.min_rho(z) >= cutoff {
                    reg.at(i, j) / (I * vd.at(i, j))
                } else {
                    Complex64::new(f64::NAN, f64::NAN)
                }
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    Ok((
        ComplexField {
            grid: g,
            values,
            cfg,
            kind: FieldKind::Residual,
            valid_margin: reg.valid_margin,
        },
        clamped,
    ))
}

/// Assemble the composite unknown v = ηV_d(1+iψ) + (1−η)V_d e^{iψ}.
pub fn assemble_v(psi: &ComplexField, vd: &ComplexField) -> ComplexField {
    let g = psi.grid.clone();
    let cfg = psi.cfg.clone();
    let values = (0..g.len())
        .map(|k| {
            let (i, j) = (k % g.n1, k / g.n1);
            let z = g.z(i, j);
            let et = eta_cut(&cfg, z);
            let p = psi.values[k];
            let v = vd.values[k];
            et * v * (1.0 + I * p) + (1.0 - et) * v * (I * p).exp()
        })
        .collect();
    ComplexField {
        grid: g,
        values,
        cfg,
        kind: FieldKind::Solution,
        valid_margin: psi.valid_margin,
    }
}

/// D̃ = η̃ + (1−η̃)e^{iψ}, the per-region phase factor of the master
/// identity S(v) = iV_d·D̃·[L^ε(ψ) + R + N(ψ)].
pub fn blend_factor(cfg: &VortexConfiguration, psi: Complex64, z: Complex64) -> Complex64 {
    let et = eta_tilde(cfg, z);
    et + (1.0 - et) * (I * psi).exp()
}
