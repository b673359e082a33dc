//! Weighted norms and seminorms on grid fields: the error norm ‖·‖**, the
//! solution norm ‖·‖*, and the annulus seminorms |·|♯ and |·|♯♯ with their
//! vortex-distance and ε-dependent weights.
//!
//! Sup pieces are exact over nodes; Hölder seminorms are sampled lower
//! bounds over seeded random node pairs, with the sampling budget recorded
//! in the report.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GlError, Result};
use crate::field::{ComplexField, VortexConfiguration};
use crate::profile::VortexProfile;

/// Parameters of the weighted norms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormParams {
    /// Hölder exponent α ∈ (0,1).
    pub alpha: f64,
    /// Decay exponent σ ∈ (0,1).
    pub sigma: f64,
    /// Constant α₀ in R_ε = α₀/(ε√|log ε|), clamped so R_ε ≤ d̃/2.
    pub alpha0: f64,
    /// Sampled pairs per Hölder ball.
    pub holder_pairs: usize,
    /// Cap on the number of ball centers sampled per Hölder piece.
    pub holder_centers: usize,
    pub seed: u64,
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams {
            alpha: 0.5,
            sigma: 0.5,
            alpha0: 0.25,
            holder_pairs: 4096,
            holder_centers: 2048,
            seed: 0x5eed,
        }
    }
}

impl NormParams {
    /// Reduced-budget variant for inner iteration stopping tests.
    pub fn fast(&self) -> Self {
        NormParams {
            holder_pairs: 256,
            holder_centers: 256,
            ..self.clone()
        }
    }

    /// R_ε = α₀/(ε √|log ε|), clamped to d̃/2.
    pub fn r_eps(&self, cfg: &VortexConfiguration) -> f64 {
        let raw = self.alpha0 / (cfg.eps * cfg.log_abs().sqrt());
        raw.min(cfg.d_tilde() / 2.0)
    }
}

/// Named norm components; `total` composes them exactly as the definition
/// displays (sum of per-vortex pieces and of the region sups).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub name: String,
    pub components: Vec<(String, f64)>,
    pub total: f64,
    /// Pieces that could not be evaluated on this grid (e.g. r > 1/ε beyond
    /// the domain), recorded rather than silently dropped.
    pub truncated: Vec<String>,
    pub alpha0: f64,
    pub r_eps: f64,
    pub holder_pairs: usize,
    pub holder_centers: usize,
}

impl NormReport {
    fn new(name: &str, p: &NormParams, r_eps: f64) -> Self {
        NormReport {
            name: name.into(),
            components: Vec::new(),
            total: 0.0,
            truncated: Vec::new(),
            alpha0: p.alpha0,
            r_eps,
            holder_pairs: p.holder_pairs,
            holder_centers: p.holder_centers,
        }
    }

    fn push(&mut self, name: &str, value: f64) {
        self.components.push((name.into(), value));
        self.total += value;
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

/// Scalar derivative data of a complex field, one-layer-in from the margin.
struct DerivFields {
    d1: Vec<Complex64>,
    d2: Vec<Complex64>,
    d11: Vec<Complex64>,
    d12: Vec<Complex64>,
    d22: Vec<Complex64>,
    margin: usize,
}

fn derivatives(f: &ComplexField) -> DerivFields {
    let g = &f.grid;
    let n = g.len();
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let mut d = DerivFields {
        d1: vec![nan; n],
        d2: vec![nan; n],
        d11: vec![nan; n],
        d12: vec![nan; n],
        d22: vec![nan; n],
        margin: f.valid_margin + 1,
    };
    let h = g.h;
    for j in 1..g.n2 - 1 {
        for i in 1..g.n1 - 1 {
            let k = g.idx(i, j);
            let c = f.at(i, j);
            let xp = f.at(i + 1, j);
            let xm = f.at(i - 1, j);
            let yp = f.at(i, j + 1);
            let ym = f.at(i, j - 1);
            d.d1[k] = (xp - xm) / (2.0 * h);
            d.d2[k] = (yp - ym) / (2.0 * h);
            d.d11[k] = ((xp + xm) - 2.0 * c) / (h * h);
            d.d22[k] = ((yp + ym) - 2.0 * c) / (h * h);
            d.d12[k] = ((f.at(i + 1, j + 1) + f.at(i - 1, j - 1))
                - (f.at(i + 1, j - 1) + f.at(i - 1, j + 1)))
                / (4.0 * h * h);
        }
    }
    d
}

/// |D²f| as the Frobenius norm over (d11, d12, d21, d22).
fn d2_mag(d: &DerivFields, k: usize) -> f64 {
    (d.d11[k].norm_sqr() + 2.0 * d.d12[k].norm_sqr() + d.d22[k].norm_sqr()).sqrt()
}

fn rho_pair(cfg: &VortexConfiguration, z: Complex64) -> (f64, f64) {
    let dt = cfg.d_tilde();
    (
        (z - Complex64::new(dt, 0.0)).norm(),
        (z + Complex64::new(dt, 0.0)).norm(),
    )
}

/// V_d·h product field; uses the supplied product when available (exact for
/// fields like R where V_d·R = −iE is known in closed form).
fn vd_product(
    h: &ComplexField,
    profile: &VortexProfile,
    vd_h: Option<&ComplexField>,
) -> ComplexField {
    match vd_h {
        Some(f) => f.clone(),
        None => {
            let g = h.grid.clone();
            let cfg = h.cfg.clone();
            let values = (0..g.len())
                .map(|k| {
                    let (i, j) = (k % g.n1, k / g.n1);
                    crate::field::ansatz_value(&cfg, profile, g.z(i, j)) * h.values[k]
                })
                .collect();
            ComplexField {
                grid: g,
                values,
                cfg,
                kind: h.kind,
                valid_margin: h.valid_margin,
            }
        }
    }
}

/// Sampled Hölder seminorm of `take(field value)` over pairs of nodes inside
/// a disc; deterministic under the seed.
#[allow(clippy::too_many_arguments)]
fn sampled_holder_disc(
    f: &ComplexField,
    take: &dyn Fn(Complex64) -> f64,
    center: Complex64,
    radius: f64,
    alpha: f64,
    pairs: usize,
    seed: u64,
    margin: usize,
) -> f64 {
    let g = &f.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let node_of = |z: Complex64| -> Option<(usize, usize)> {
        let fi = ((z.re + g.l1) / g.h).round();
        let fj = ((z.im + g.l2) / g.h).round();
        let m = margin as f64;
        if fi < m || fj < m || fi > (g.n1 - 1) as f64 - m || fj > (g.n2 - 1) as f64 - m {
            return None;
        }
        Some((fi as usize, fj as usize))
    };
    for _ in 0..pairs {
        let draw = |rng: &mut ChaCha8Rng| {
            let r = radius * rng.gen::<f64>().sqrt();
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            center + Complex64::from_polar(r, t)
        };
        let za = draw(&mut rng);
        let zb = draw(&mut rng);
        let (Some(a), Some(b)) = (node_of(za), node_of(zb)) else {
            continue;
        };
        if a == b {
            continue;
        }
        let va = f.at(a.0, a.1);
        let vb = f.at(b.0, b.1);
        if !va.is_finite() || !vb.is_finite() {
            continue;
        }
        let dist = (g.z(a.0, a.1) - g.z(b.0, b.1)).norm();
        let q = (take(va) - take(vb)).abs() / dist.powf(alpha);
        if q > best {
            best = q;
        }
    }
    best
}

/// Like `sampled_holder_disc` but for the magnitude-difference of the full
/// second-derivative block.
#[allow(clippy::too_many_arguments)]
fn sampled_holder_d2(
    g: &crate::field::Grid2D,
    d: &DerivFields,
    part: Option<bool>, // None: complex; Some(true): Re; Some(false): Im
    center: Complex64,
    radius: f64,
    alpha: f64,
    pairs: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let m = d.margin as f64;
    let node_of = |z: Complex64| -> Option<usize> {
        let fi = ((z.re + g.l1) / g.h).round();
        let fj = ((z.im + g.l2) / g.h).round();
        if fi < m || fj < m || fi > (g.n1 - 1) as f64 - m || fj > (g.n2 - 1) as f64 - m {
            return None;
        }
        Some(g.idx(fi as usize, fj as usize))
    };
    let proj = |v: Complex64| -> Complex64 {
        match part {
            None => v,
            Some(true) => Complex64::new(v.re, 0.0),
            Some(false) => Complex64::new(v.im, 0.0),
        }
    };
    for _ in 0..pairs {
        let mut draw = |rng: &mut ChaCha8Rng| {
            let r = radius * rng.gen::<f64>().sqrt();
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            center + Complex64::from_polar(r, t)
        };
        let (Some(ka), Some(kb)) = (node_of(draw(&mut rng)), node_of(draw(&mut rng))) else {
            continue;
        };
        if ka == kb {
            continue;
        }
        let diff = (proj(d.d11[ka]) - proj(d.d11[kb])).norm_sqr()
            + 2.0 * (proj(d.d12[ka]) - proj(d.d12[kb])).norm_sqr()
            + (proj(d.d22[ka]) - proj(d.d22[kb])).norm_sqr();
        if !diff.is_finite() {
            continue;
        }
        let ia = ka % g.n1;
        let ja = ka / g.n1;
        let ib = kb % g.n1;
        let jb = kb / g.n1;
        let dist = (g.z(ia, ja) - g.z(ib, jb)).norm();
        let q = diff.sqrt() / dist.powf(alpha);
        if q > best {
            best = q;
        }
    }
    best
}

/// Deterministically subsampled ball centers in a region.
fn region_centers(
    f: &ComplexField,
    pred: &dyn Fn(Complex64) -> bool,
    cap: usize,
    margin: usize,
) -> Vec<Complex64> {
    let g = &f.grid;
    let mut all = Vec::new();
    for j in margin..g.n2 - margin {
        for i in margin..g.n1 - margin {
            let z = g.z(i, j);
            if pred(z) {
                all.push(z);
            }
        }
    }
    if all.len() <= cap {
        return all;
    }
    let stride = all.len() as f64 / cap as f64;
    (0..cap)
        .map(|k| all[(k as f64 * stride) as usize])
        .collect()
}

/// ‖h‖**: per-vortex core pieces ‖V_d h‖_{C^α(ρ_j<3)}, the weighted outer
/// sup of |Re h| and |Im h|, and the two sampled outer Hölder pieces.
pub fn norm_star_star(
    h: &ComplexField,
    profile: &VortexProfile,
    p: &NormParams,
    vd_h: Option<&ComplexField>,
) -> Result<NormReport> {
    let cfg = &h.cfg;
    if cfg.vortices.len() != 2 {
        return Err(GlError::Config("weighted norms require the two-vortex ansatz".into()));
    }
    let r_eps = p.r_eps(cfg);
    let mut rep = NormReport::new("norm_star_star", p, r_eps);
    let g = &h.grid;
    let prod = vd_product(h, profile, vd_h);
    let margin = h.valid_margin.max(1);

    // core pieces
    for (vj, v) in cfg.vortices.iter().enumerate() {
        let mut sup = 0.0f64;
        for j in margin..g.n2 - margin {
            for i in margin..g.n1 - margin {
                let z = g.z(i, j);
                if (z - v.center).norm() < 3.0 {
                    let val = prod.at(i, j).norm();
                    if val.is_finite() && val > sup {
                        sup = val;
                    }
                }
            }
        }
        let hold = sampled_holder_disc(
            &prod,
            &|v| v.norm(),
            v.center,
            3.0,
            p.alpha,
            p.holder_pairs,
            p.seed ^ (vj as u64 + 1),
            margin,
        );
        rep.push(&format!("core{}_sup", vj + 1), sup);
        rep.push(&format!("core{}_holder", vj + 1), hold);
    }

    // outer weighted sup (single sup of the displayed sum)
    let eps = cfg.eps;
    let sig = p.sigma;
    let mut outer = 0.0f64;
    for j in margin..g.n2 - margin {
        for i in margin..g.n1 - margin {
            let z = g.z(i, j);
            let (r1, r2) = rho_pair(cfg, z);
            if r1 > 2.0 && r2 > 2.0 {
                let v = h.at(i, j);
                if !v.is_finite() {
                    continue;
                }
                let wre = r1.powi(-2) + r2.powi(-2) + eps * eps;
                let wim = r1.powf(sig - 2.0) + r2.powf(sig - 2.0) + eps.powf(sig - 2.0);
                let q = v.re.abs() / wre + v.im.abs() / wim;
                if q > outer {
                    outer = q;
                }
            }
        }
    }
    rep.push("outer_weighted_sup", outer);

    // outer Hölder pieces over 2 < min ρ_j < 2R_ε
    let dt = cfg.d_tilde();
    let in_annulus = |z: Complex64| {
        let (r1, r2) = rho_pair(cfg, z);
        r1 > 2.0 && r2 > 2.0 && r1.min(r2) < 2.0 * r_eps
    };
    let centers = region_centers(h, &in_annulus, p.holder_centers, margin);
    let mut re_h = 0.0f64;
    let mut im_h = 0.0f64;
    for (ci, &zc) in centers.iter().enumerate() {
        let (r1, r2) = rho_pair(cfg, zc);
        let wre = r1.powf(-2.0 - p.alpha) + r2.powf(-2.0 - p.alpha);
        let wim = r1.powf(sig - 2.0) + r2.powf(sig - 2.0);
        let hr = sampled_holder_disc(
            h,
            &|v| v.re,
            zc,
            zc.norm() / 2.0,
            p.alpha,
            p.holder_pairs,
            p.seed ^ (0x1000 + ci as u64),
            margin,
        );
        let hi = sampled_holder_disc(
            h,
            &|v| v.im,
            zc,
            1.0,
            p.alpha,
            p.holder_pairs,
            p.seed ^ (0x2000 + ci as u64),
            margin,
        );
        re_h = re_h.max(hr / wre);
        im_h = im_h.max(hi / wim);
    }
    let _ = dt;
    rep.push("outer_re_holder", re_h);
    rep.push("outer_im_holder", im_h);
    Ok(rep)
}

/// ‖ψ‖* = Σ_j ‖V_dψ‖_{C^{2,α}(ρ_j<3)} + ‖Re ψ‖_{1,*} + ‖Im ψ‖_{2,*}.
pub fn norm_star(
    psi: &ComplexField,
    profile: &VortexProfile,
    p: &NormParams,
    vd_psi: Option<&ComplexField>,
) -> Result<NormReport> {
    let cfg = &psi.cfg;
    if cfg.vortices.len() != 2 {
        return Err(GlError::Config("weighted norms require the two-vortex ansatz".into()));
    }
    let r_eps = p.r_eps(cfg);
    let mut rep = NormReport::new("norm_star", p, r_eps);
    let g = &psi.grid;
    let eps = cfg.eps;
    let sig = p.sigma;
    let margin = psi.valid_margin.max(1);

    // per-vortex C^{2,α} of V_d ψ
    let prod = vd_product(psi, profile, vd_psi);
    let dprod = derivatives(&prod);
    for (vj, v) in cfg.vortices.iter().enumerate() {
        let mut sup0 = 0.0f64;
        let mut sup1 = 0.0f64;
        let mut sup2 = 0.0f64;
        for j in dprod.margin..g.n2 - dprod.margin {
            for i in dprod.margin..g.n1 - dprod.margin {
                let z = g.z(i, j);
                if (z - v.center).norm() < 3.0 {
                    let k = g.idx(i, j);
                    let f0 = prod.at(i, j).norm();
                    let f1 = (dprod.d1[k].norm_sqr() + dprod.d2[k].norm_sqr()).sqrt();
                    let f2 = d2_mag(&dprod, k);
                    if f0.is_finite() {
                        sup0 = sup0.max(f0);
                    }
                    if f1.is_finite() {
                        sup1 = sup1.max(f1);
                    }
                    if f2.is_finite() {
                        sup2 = sup2.max(f2);
                    }
                }
            }
        }
        let hold = sampled_holder_d2(
            g,
            &dprod,
            None,
            v.center,
            3.0,
            p.alpha,
            p.holder_pairs,
            p.seed ^ (0x3000 + vj as u64),
        );
        rep.push(&format!("core{}_c2a", vj + 1), sup0 + sup1 + sup2 + hold);
    }

    let dpsi = derivatives(psi);
    let m = dpsi.margin;

    // ‖ψ1‖_{1,*} and ‖ψ2‖_{2,*} sup pieces
    let mut p1_zero = 0.0f64;
    let mut p1_grad = 0.0f64;
    let mut p1_far = 0.0f64;
    let mut p1_d2 = 0.0f64;
    let mut p2_zero = 0.0f64;
    let mut p2_grad = 0.0f64;
    let mut p2_far = 0.0f64;
    let mut p2_d2 = 0.0f64;
    let mut far_nodes = 0usize;
    for j in m..g.n2 - m {
        for i in m..g.n1 - m {
            let z = g.z(i, j);
            let (r1, r2) = rho_pair(cfg, z);
            let k = g.idx(i, j);
            let v = psi.at(i, j);
            if !v.is_finite() {
                continue;
            }
            if r1 > 2.0 && r2 > 2.0 {
                p1_zero = p1_zero.max(v.re.abs());
                let wim = r1.powf(sig - 2.0) + r2.powf(sig - 2.0) + eps.powf(sig - 2.0);
                p2_zero = p2_zero.max(v.im.abs() / wim);

                let g1 = Complex64::new(dpsi.d1[k].re, dpsi.d2[k].re).norm();
                let g2 = Complex64::new(dpsi.d1[k].im, dpsi.d2[k].im).norm();
                if r1.min(r2) < 2.0 / eps && g1.is_finite() && g2.is_finite() {
                    p1_grad = p1_grad.max(g1 / (1.0 / r1 + 1.0 / r2));
                    p2_grad = p2_grad.max(g2 / (r1.powf(sig - 2.0) + r2.powf(sig - 2.0)));
                }
                if r1.min(r2) < r_eps {
                    let d2r = (dpsi.d11[k].re.powi(2)
                        + 2.0 * dpsi.d12[k].re.powi(2)
                        + dpsi.d22[k].re.powi(2))
                    .sqrt();
                    let d2i = (dpsi.d11[k].im.powi(2)
                        + 2.0 * dpsi.d12[k].im.powi(2)
                        + dpsi.d22[k].im.powi(2))
                    .sqrt();
                    if d2r.is_finite() {
                        p1_d2 = p1_d2.max(d2r / (r1.powi(-2) + r2.powi(-2)));
                        p2_d2 = p2_d2.max(d2i / (r1.powf(sig - 2.0) + r2.powf(sig - 2.0)));
                    }
                }
            }
            let r = z.norm();
            if r > 1.0 / eps {
                far_nodes += 1;
                let dr1 = (z.re * dpsi.d1[k].re + z.im * dpsi.d2[k].re) / r;
                let ds1 = z.re * dpsi.d2[k].re - z.im * dpsi.d1[k].re;
                let dr2 = (z.re * dpsi.d1[k].im + z.im * dpsi.d2[k].im) / r;
                let ds2 = z.re * dpsi.d2[k].im - z.im * dpsi.d1[k].im;
                if dr1.is_finite() && ds1.is_finite() {
                    p1_far = p1_far.max(dr1.abs() / eps + ds1.abs());
                    p2_far = p2_far
                        .max(eps.powf(sig - 2.0) * dr2.abs() + eps.powf(sig - 1.0) * ds2.abs());
                }
            }
        }
    }
    if far_nodes == 0 {
        rep.truncated.push("r>1/eps pieces: grid does not reach r = 1/eps".into());
    }

    // sampled Hölder pieces of D²ψ over 2 < min ρ < R_ε
    let in_annulus = |z: Complex64| {
        let (r1, r2) = rho_pair(cfg, z);
        r1 > 2.0 && r2 > 2.0 && r1.min(r2) < r_eps
    };
    let centers = region_centers(psi, &in_annulus, p.holder_centers, m);
    let mut h1 = 0.0f64;
    let mut h2 = 0.0f64;
    for (ci, &zc) in centers.iter().enumerate() {
        let (r1, r2) = rho_pair(cfg, zc);
        let wre = r1.powf(-2.0 - p.alpha) + r2.powf(-2.0 - p.alpha);
        let wim = r1.powf(sig - 2.0) + r2.powf(sig - 2.0);
        let hr = sampled_holder_d2(
            g,
            &dpsi,
            Some(true),
            zc,
            zc.norm() / 2.0,
            p.alpha,
            p.holder_pairs,
            p.seed ^ (0x4000 + ci as u64),
        );
        let hi = sampled_holder_d2(
            g,
            &dpsi,
            Some(false),
            zc,
            1.0,
            p.alpha,
            p.holder_pairs,
            p.seed ^ (0x5000 + ci as u64),
        );
        h1 = h1.max(hr / wre);
        h2 = h2.max(hi / wim);
    }

    rep.push("re_zeroth_sup", p1_zero);
    rep.push("re_grad_sup", p1_grad);
    rep.push("re_far_aniso", p1_far);
    rep.push("re_d2_sup", p1_d2);
    rep.push("re_d2_holder", h1);
    rep.push("im_zeroth_sup", p2_zero);
    rep.push("im_grad_sup", p2_grad);
    rep.push("im_far_aniso", p2_far);
    rep.push("im_d2_sup", p2_d2);
    rep.push("im_d2_holder", h2);
    Ok(rep)
}

/// |ψ|♯: |log ε|⁻¹-scaled core C^{2,α} pieces plus the logarithmic-growth
/// annulus sups of Re ψ and Im ψ.
pub fn seminorm_sharp(
    psi: &ComplexField,
    profile: &VortexProfile,
    p: &NormParams,
    vd_psi: Option<&ComplexField>,
) -> Result<NormReport> {
    let cfg = &psi.cfg;
    let r_eps = p.r_eps(cfg);
    let mut rep = NormReport::new("seminorm_sharp", p, r_eps);
    let g = &psi.grid;
    let la = cfg.log_abs();
    let sig = p.sigma;

    // core pieces, |log ε|^{-1} ‖V_d ψ‖_{C^{2,α}(ρ_j<3)}
    let prod = vd_product(psi, profile, vd_psi);
    let dprod = derivatives(&prod);
    for (vj, v) in cfg.vortices.iter().enumerate() {
        let mut sup = 0.0f64;
        for j in dprod.margin..g.n2 - dprod.margin {
            for i in dprod.margin..g.n1 - dprod.margin {
                let z = g.z(i, j);
                if (z - v.center).norm() < 3.0 {
                    let k = g.idx(i, j);
                    let s = prod.at(i, j).norm()
                        + (dprod.d1[k].norm_sqr() + dprod.d2[k].norm_sqr()).sqrt()
                        + d2_mag(&dprod, k);
                    if s.is_finite() {
                        sup = sup.max(s);
                    }
                }
            }
        }
        let hold = sampled_holder_d2(
            g,
            &dprod,
            None,
            v.center,
            3.0,
            p.alpha,
            p.holder_pairs,
            p.seed ^ (0x6000 + vj as u64),
        );
        rep.push(&format!("core{}_c2a_scaled", vj + 1), (sup + hold) / la);
    }

    // annulus sups; log weights from the far vortex are clamped at zero
    // since the displayed intersection region is empty for R_ε ≤ d̃/2
    let dpsi = derivatives(psi);
    let m = dpsi.margin;
    let logw = |r: f64| (2.0 * r_eps / r).ln().max(0.0);
    let mut s1 = 0.0f64;
    let mut s2 = 0.0f64;
    for j in m..g.n2 - m {
        for i in m..g.n1 - m {
            let z = g.z(i, j);
            let (r1, r2) = rho_pair(cfg, z);
            if r1 <= 2.0 || r2 <= 2.0 || r1.min(r2) >= r_eps {
                continue;
            }
            let k = g.idx(i, j);
            let v = psi.at(i, j);
            if !v.is_finite() {
                continue;
            }
            let g1 = Complex64::new(dpsi.d1[k].re, dpsi.d2[k].re).norm();
            let g2 = Complex64::new(dpsi.d1[k].im, dpsi.d2[k].im).norm();
            let w_zero = r1 * logw(r1) + r2 * logw(r2);
            let w_grad = logw(r1) + logw(r2);
            if w_zero > 0.0 {
                s1 = s1.max(v.re.abs() / w_zero);
            }
            if w_grad > 0.0 && g1.is_finite() {
                s1 = s1.max(g1 / w_grad);
            }
            let w2 = r1.powf(sig - 1.0)
                + r2.powf(sig - 1.0)
                + logw(r1) / r1
                + logw(r2) / r2;
            if g2.is_finite() {
                s2 = s2.max((v.im.abs() + g2) / w2);
            }
        }
    }
    rep.push("re_sharp1", s1);
    rep.push("im_sharp2", s2);
    Ok(rep)
}

/// |h|♯♯ = Σ_j ‖V_d h‖_{C^{0,α}(ρ_j<4)} + annulus sups of |h₁|/(ρ₁⁻¹+ρ₂⁻¹)
/// and |h₂|/(ρ₁^{σ−1}+ρ₂^{σ−1}).
pub fn seminorm_sharpsharp(
    h: &ComplexField,
    profile: &VortexProfile,
    p: &NormParams,
    vd_h: Option<&ComplexField>,
) -> Result<NormReport> {
    let cfg = &h.cfg;
    let r_eps = p.r_eps(cfg);
    let mut rep = NormReport::new("seminorm_sharpsharp", p, r_eps);
    let g = &h.grid;
    let sig = p.sigma;
    let margin = h.valid_margin.max(1);

    let prod = vd_product(h, profile, vd_h);
    for (vj, v) in cfg.vortices.iter().enumerate() {
        let mut sup = 0.0f64;
        for j in margin..g.n2 - margin {
            for i in margin..g.n1 - margin {
                let z = g.z(i, j);
                if (z - v.center).norm() < 4.0 {
                    let val = prod.at(i, j).norm();
                    if val.is_finite() {
                        sup = sup.max(val);
                    }
                }
            }
        }
        let hold = sampled_holder_disc(
            &prod,
            &|v| v.norm(),
            v.center,
            4.0,
            p.alpha,
            p.holder_pairs,
            p.seed ^ (0x7000 + vj as u64),
            margin,
        );
        rep.push(&format!("core{}_c0a", vj + 1), sup + hold);
    }

    let mut s = 0.0f64;
    for j in margin..g.n2 - margin {
        for i in margin..g.n1 - margin {
            let z = g.z(i, j);
            let (r1, r2) = rho_pair(cfg, z);
            if r1 <= 2.0 || r2 <= 2.0 || r1.min(r2) >= r_eps {
                continue;
            }
            let v = h.at(i, j);
            if !v.is_finite() {
                continue;
            }
            let q = v.re.abs() / (1.0 / r1 + 1.0 / r2)
                + v.im.abs() / (r1.powf(sig - 1.0) + r2.powf(sig - 1.0));
            s = s.max(q);
        }
    }
    rep.push("annulus_sup", s);
    Ok(rep)
}
