//! The reduced scalar equation: projection integrals around a vortex, the
//! coefficients a₀, a₁ and c*, the reduced coefficient c(d̂) = −(B₀+B₁+…)/c*,
//! and the bisection for its root d̂₀.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GlError, Result};
use crate::field::{ComplexField, VortexConfiguration};
use crate::norms::NormParams;
use crate::ops::{self, OperatorParams, WLocal};
use crate::profile::VortexProfile;
use crate::util::{adaptive_simpson, trapezoid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Everything the reduced solve produced, with quadrature provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionReport {
    pub eps: f64,
    pub samples: Vec<(f64, f64)>,
    pub c_star: f64,
    pub a0: f64,
    pub a1: f64,
    pub d_hat_root: f64,
    pub sqrt_a0_over_a1: f64,
    pub r_eps: f64,
    pub r_tilde_eps: f64,
    pub bracket: (f64, f64),
    pub tol: f64,
}

/// R̃_ε = (1/2)·ε⁻¹|log ε|^{−1/2}; independent of d̂.
pub fn r_tilde_eps(eps: f64) -> f64 {
    0.5 / (eps * eps.ln().abs().sqrt())
}

/// c* = Re ∫ χ |W_{x1}|² = π ∫ χ(ρ)(w'² + w²/ρ²) ρ dρ; χ supported in
/// B(0,4), so the value is independent of any larger truncation radius.
pub fn projection_cstar(profile: &VortexProfile) -> f64 {
    let f = |rho: f64| -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        let (w, wp, _) = profile.eval(rho).unwrap();
        ops::chi(Complex64::new(rho, 0.0)) * (wp * wp + (w / rho).powi(2)) * rho
    };
    std::f64::consts::PI * adaptive_simpson(&f, 0.0, 4.0, 1e-12)
}

/// Cartesian cross-check of c* on a fine tensor grid over B(0,4).
pub fn projection_cstar_cartesian(profile: &VortexProfile, h: f64) -> f64 {
    let n = (8.0 / h).ceil() as usize + 1;
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            let z = Complex64::new(-4.0 + i as f64 * h, -4.0 + j as f64 * h);
            if z.norm() >= 4.0 {
                continue;
            }
            let loc = WLocal::new(profile, z);
            acc += ops::chi(z) * loc.dx1().norm_sqr();
        }
    }
    acc * h * h
}

/// Re ∫ χ conj(φ_j) W_{x1} with φ_j(z) = iW(z)ψ(z + d̃_j), by node
/// quadrature over the ball ρ_j ≤ 4.
pub fn orthogonality_defect(
    psi: &ComplexField,
    profile: &VortexProfile,
    j: usize,
) -> Result<f64> {
    let cfg = &psi.cfg;
    if j >= cfg.vortices.len() {
        return Err(GlError::Config(format!("vortex index {j} out of range")));
    }
    let center = cfg.vortices[j].center;
    let g = &psi.grid;
    let mut acc = 0.0;
    for jj in 0..g.n2 {
        for ii in 0..g.n1 {
            let z = g.z(ii, jj);
            let zt = z - center;
            if zt.norm() >= 4.0 {
                continue;
            }
            let loc = WLocal::new(profile, zt);
            let phi = I * loc.value() * psi.at(ii, jj);
            acc += ops::chi(zt) * (phi.conj() * loc.dx1()).re;
        }
    }
    Ok(acc * g.h * g.h)
}

/// a₁ = (1/|log ε|) ∫₀^{2π}∫₀^{R̃_ε} w² sin²θ / ρ dρ dθ
/// = (π/|log ε|) ∫₀^{R̃_ε} w²/ρ dρ (adaptive radial quadrature).
pub fn a1_radial(profile: &VortexProfile, eps: f64) -> f64 {
    let rt = r_tilde_eps(eps);
    let f = |rho: f64| -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        let w = profile.w_at(rho);
        w * w / rho
    };
    std::f64::consts::PI / eps.ln().abs() * adaptive_simpson(&f, 0.0, rt, 1e-12)
}

/// Independent tensor-product quadrature of the same double integral.
pub fn a1_tensor(profile: &VortexProfile, eps: f64) -> f64 {
    let rt = r_tilde_eps(eps);
    let n_rho = 4000;
    let n_th = 256;
    let dth = 2.0 * std::f64::consts::PI / n_th as f64;
    let mut angular = 0.0;
    for a in 0..n_th {
        let th = a as f64 * dth;
        angular += th.sin().powi(2) * dth;
    }
    let radial = trapezoid(
        &|rho: f64| {
            if rho == 0.0 {
                0.0
            } else {
                let w = profile.w_at(rho);
                w * w / rho
            }
        },
        0.0,
        rt,
        n_rho,
    );
    angular * radial / eps.ln().abs()
}

/// The cross-term integral I(d̂) = 2·Re ∫_{ρ₁<R_ε} (W^a_{x2}W^b_{x2}/W^b)
/// conj(W^a_{x1}); a₀ is its prefactor: a₀ = −I·d̂/(ε√|log ε|).
pub fn a0_extracted(profile: &VortexProfile, eps: f64, d_hat: f64, p: &NormParams) -> f64 {
    let cfg = VortexConfiguration::pair(eps, d_hat);
    let r_eps = p.r_eps(&cfg);
    let dt = cfg.d_tilde();
    let integrand = |rho: f64, th: f64| -> f64 {
        // frames: vortex a at the origin of the (ρ,θ) chart, vortex b at −2d̃
        let za = Complex64::from_polar(rho, th);
        let zb = za + Complex64::new(2.0 * dt, 0.0);
        let la = WLocal::new(profile, za);
        let lb = WLocal::new(profile, zb);
        // W^a_{x2} conj(W^a_{x1}) = (w'²−w²/ρ²)sinθcosθ + i w w'/ρ
        let q = Complex64::new(
            (la.wp * la.wp - (la.w / la.rho).powi(2)) * la.sin_t * la.cos_t,
            la.w * la.wp / la.rho,
        );
        // W^b_{x2}/W^b = (w'/w) sinθ₂ + i cosθ₂/ρ₂
        let blog = Complex64::new(lb.wp / lb.w * lb.sin_t, lb.cos_t / lb.rho);
        2.0 * (q * blog).re * rho
    };
    let i_val = polar_quad(&integrand, r_eps, 2000, 256);
    -i_val * d_hat / (eps * eps.ln().abs().sqrt())
}

/// Tensor quadrature ∫₀^{2π}∫₀^{R} f(ρ,θ) dρ dθ (the ρ-Jacobian lives in f).
fn polar_quad(f: &dyn Fn(f64, f64) -> f64, r_max: f64, n_rho: usize, n_th: usize) -> f64 {
    let dth = 2.0 * std::f64::consts::PI / n_th as f64;
    let dr = r_max / n_rho as f64;
    let mut acc = 0.0;
    for a in 0..n_th {
        let th = (a as f64 + 0.5) * dth;
        let mut radial = 0.0;
        for r in 0..n_rho {
            let rho = (r as f64 + 0.5) * dr;
            radial += f(rho, th);
        }
        acc += radial * dr;
    }
    acc * dth
}

/// Both coefficients of the reduced equation.
pub fn compute_a0_a1(
    profile: &VortexProfile,
    eps: f64,
    d_hat: f64,
    p: &NormParams,
) -> Result<(f64, f64)> {
    let a0 = a0_extracted(profile, eps, d_hat, p);
    let a1 = a1_radial(profile, eps);
    if a0 <= 0.0 || a1 <= 0.0 {
        return Err(GlError::Config(format!(
            "nonpositive reduced coefficients a0 = {a0}, a1 = {a1}: quadrature or sign bug"
        )));
    }
    Ok((a0, a1))
}

/// The two error-driven pieces of the projection: B_j = Re ∫_{ρ₁<R_ε}
/// iW(z) R^j(z+d̃) conj(W_{x1}(z)) for the S₀ (j=0) and S₁ (j=1) parts of
/// the error, by semi-analytic polar quadrature.
pub fn b0_b1(profile: &VortexProfile, cfg: &VortexConfiguration, p: &NormParams) -> (f64, f64) {
    let dt = cfg.d_tilde();
    let r_eps = p.r_eps(cfg);
    let b0 = polar_quad(
        &|rho, th| {
            let z = Complex64::new(dt, 0.0) + Complex64::from_polar(rho, th);
            let la = WLocal::new(profile, z - Complex64::new(dt, 0.0));
            let lb = WLocal::new(profile, z + Complex64::new(dt, 0.0));
            // iW R⁰(z+d̃) = S₀(V_d)/(W^b) evaluated in the a-frame
            let val = ops::s0_vd_analytic(cfg, profile, z) / lb.value();
            (val * la.dx1().conj()).re * rho
        },
        r_eps,
        2000,
        256,
    );
    let b1 = polar_quad(
        &|rho, th| {
            let z = Complex64::new(dt, 0.0) + Complex64::from_polar(rho, th);
            let la = WLocal::new(profile, z - Complex64::new(dt, 0.0));
            let lb = WLocal::new(profile, z + Complex64::new(dt, 0.0));
            let val = ops::s1_vd_analytic(cfg, profile, z) / lb.value();
            (val * la.dx1().conj()).re * rho
        },
        r_eps,
        2000,
        256,
    );
    (b0, b1)
}

/// Grid-quadrature version of B₀+B₁ from a finite-difference error field,
/// used as the independent route for the c consistency check.
pub fn b_total_from_grid(
    profile: &VortexProfile,
    e_field: &ComplexField,
    p: &NormParams,
) -> f64 {
    let cfg = &e_field.cfg;
    let dt = cfg.d_tilde();
    let r_eps = p.r_eps(cfg);
    let g = &e_field.grid;
    let center = Complex64::new(dt, 0.0);
    let mut acc = 0.0;
    let m = e_field.valid_margin.max(1);
    for jj in m..g.n2 - m {
        for ii in m..g.n1 - m {
            let z = g.z(ii, jj);
            let zt = z - center;
            if zt.norm() >= r_eps {
                continue;
            }
            let la = WLocal::new(profile, zt);
            let lb = WLocal::new(profile, z + center);
            let val = e_field.at(ii, jj) / lb.value();
            acc += (val * la.dx1().conj()).re;
        }
    }
    acc * g.h * g.h
}

/// Corrections to c·c* from the solved perturbation:
/// Re∫ iW L^ε(ψ)(z+d̃) conj W_{x1} + Re∫ iW N(ψ)(z+d̃) conj W_{x1},
/// computed from the regularized operator fields by grid quadrature.
pub fn psi_corrections(
    profile: &VortexProfile,
    l_reg: &ComplexField,
    n_reg: &ComplexField,
    p: &NormParams,
) -> f64 {
    let cfg = &l_reg.cfg;
    let dt = cfg.d_tilde();
    let r_eps = p.r_eps(cfg);
    let g = &l_reg.grid;
    let center = Complex64::new(dt, 0.0);
    let mut acc = 0.0;
    let m = l_reg.valid_margin.max(1);
    for jj in m..g.n2 - m {
        for ii in m..g.n1 - m {
            let z = g.z(ii, jj);
            let zt = z - center;
            if zt.norm() >= r_eps {
                continue;
            }
            // iW·L^ε(ψ)(z) = [iV_d L^ε(ψ)](z)/α₁(z), α₁ = W^b here
            let lb = WLocal::new(profile, z + center);
            let la = WLocal::new(profile, zt);
            let val = (l_reg.at(ii, jj) + n_reg.at(ii, jj)) / lb.value();
            acc += (val * la.dx1().conj()).re;
        }
    }
    acc * g.h * g.h
}

/// Leading-order reduced coefficient c(d̂) = −(B₀ + B₁)/c*.
pub fn reduced_coefficient(
    profile: &VortexProfile,
    eps: f64,
    d_hat: f64,
    p: &NormParams,
    c_star: f64,
) -> f64 {
    let cfg = VortexConfiguration::pair(eps, d_hat);
    let (b0, b1) = b0_b1(profile, &cfg, p);
    -(b0 + b1) / c_star
}

/// Bisection for c(d̂₀) = 0. The bracket is widened geometrically inside
/// [0.1, 10] until the sign changes.
pub fn solve_reduced(
    profile: &VortexProfile,
    eps: f64,
    bracket: (f64, f64),
    tol: f64,
    p: &NormParams,
) -> Result<ReductionReport> {
    let c_star = projection_cstar(profile);
    let cfg_probe = VortexConfiguration::pair(eps, 1.0);
    let (mut lo, mut hi) = bracket;
    let mut c_lo = reduced_coefficient(profile, eps, lo, p, c_star);
    let mut c_hi = reduced_coefficient(profile, eps, hi, p, c_star);
    let mut samples = vec![(lo, c_lo), (hi, c_hi)];
    let mut guard = 0;
    while c_lo * c_hi > 0.0 {
        guard += 1;
        lo = (lo / 1.5).max(0.1);
        hi = (hi * 1.5).min(10.0);
        c_lo = reduced_coefficient(profile, eps, lo, p, c_star);
        c_hi = reduced_coefficient(profile, eps, hi, p, c_star);
        samples.push((lo, c_lo));
        samples.push((hi, c_hi));
        if guard > 12 || (lo == 0.1 && hi == 10.0 && c_lo * c_hi > 0.0) {
            return Err(GlError::NonConvergence {
                context: format!(
                    "no sign change of c(d̂) in [0.1, 10] at eps = {eps}; samples {samples:?}"
                ),
                residual: c_lo.abs().min(c_hi.abs()),
            });
        }
    }
    let bracket_used = (lo, hi);
    let mut c_mid = f64::INFINITY;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        c_mid = reduced_coefficient(profile, eps, mid, p, c_star);
        samples.push((mid, c_mid));
        if c_mid.abs() <= tol || (hi - lo) <= 1e-12 * mid {
            break;
        }
        if c_mid * c_lo > 0.0 {
            lo = mid;
            c_lo = c_mid;
        } else {
            hi = mid;
        }
    }
    let (a0, a1) = compute_a0_a1(profile, eps, mid, p)?;
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    samples.dedup_by(|a, b| a.0 == b.0);
    Ok(ReductionReport {
        eps,
        samples,
        c_star,
        a0,
        a1,
        d_hat_root: mid,
        sqrt_a0_over_a1: (a0 / a1).sqrt(),
        r_eps: p.r_eps(&cfg_probe),
        r_tilde_eps: r_tilde_eps(eps),
        bracket: bracket_used,
        tol,
    })
    .map(|rep| {
        debug_assert!(c_mid.is_finite());
        rep
    })
}

/// Re ∫_{ρ₁<d̃} W^a_{x2x2} conj(W^a_{x1}): vanishes by angular parity.
pub fn ortho2_x2x2(profile: &VortexProfile, cfg: &VortexConfiguration) -> f64 {
    let dt = cfg.d_tilde();
    polar_quad(
        &|rho, th| {
            let za = Complex64::from_polar(rho, th);
            let la = WLocal::new(profile, za);
            (la.dx2x2() * la.dx1().conj()).re * rho
        },
        dt,
        1500,
        256,
    )
}

/// Re ∫_{ρ₁<d̃} (G/W^b) conj(W^a_{x1}) for the S₁ remainder G.
pub fn ortho2_g(profile: &VortexProfile, cfg: &VortexConfiguration) -> f64 {
    let dt = cfg.d_tilde();
    polar_quad(
        &|rho, th| {
            let z = Complex64::new(dt, 0.0) + Complex64::from_polar(rho, th);
            let la = WLocal::new(profile, z - Complex64::new(dt, 0.0));
            let lb = WLocal::new(profile, z + Complex64::new(dt, 0.0));
            let gval = ops::s1_g_remainder(cfg, profile, z);
            ((gval / lb.value()) * la.dx1().conj()).re * rho
        },
        dt,
        1500,
        256,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldKind, Grid2D};
    use crate::profile::solve_profile;

    fn profile() -> VortexProfile {
        solve_profile(40.0, 8000, 1e-10).unwrap()
    }

    #[test]
    fn cstar_positive_and_order_one() {
        let p = profile();
        let c = projection_cstar(&p);
        assert!(c > 0.1 && c < 10.0, "c* = {c}");
    }

    #[test]
    fn cstar_truncation_invariant() {
        // χ is supported in B(0,4): integrating further changes nothing
        let p = profile();
        let f = |rho: f64, cut: f64| -> f64 {
            if rho == 0.0 {
                return 0.0;
            }
            let (w, wp, _) = p.eval(rho).unwrap();
            let _ = cut;
            ops::chi(Complex64::new(rho, 0.0)) * (wp * wp + (w / rho).powi(2)) * rho
        };
        let base = std::f64::consts::PI * adaptive_simpson(&|r| f(r, 4.0), 0.0, 4.0, 1e-13);
        let wide = std::f64::consts::PI * adaptive_simpson(&|r| f(r, 8.0), 0.0, 8.0, 1e-13);
        assert!((base - wide).abs() <= 1e-12, "{base} vs {wide}");
    }

    #[test]
    fn cstar_polar_and_cartesian_agree() {
        let p = profile();
        let polar = projection_cstar(&p);
        let cart = projection_cstar_cartesian(&p, 0.004);
        assert!(
            (polar - cart).abs() <= 1e-6 * polar.max(1.0),
            "polar {polar} vs cartesian {cart}"
        );
    }

    #[test]
    fn defect_of_wx2_vanishes_and_wx1_gives_cstar() {
        let p = profile();
        let cfg = VortexConfiguration::pair(0.1, 1.0);
        let g = Grid2D::square_for(cfg.d_tilde(), 0.1);
        let center = cfg.vortices[0].center;
        // ψ with φ₁ = W_{x2}: ψ(z) = W_{x2}(z−d̃)/(iW(z−d̃))
        let pc = p.clone();
        let psi_x2 = ComplexField::from_fn(g.clone(), cfg.clone(), FieldKind::Perturbation, |z| {
            let loc = WLocal::new(&pc, z - center);
            if loc.rho < 1e-9 {
                return Complex64::new(0.0, 0.0);
            }
            loc.dx2() / (Complex64::new(0.0, 1.0) * loc.value())
        });
        let d = orthogonality_defect(&psi_x2, &p, 0).unwrap();
        assert!(d.abs() <= 1e-8, "W_x2 defect {d}");

        let pc2 = p.clone();
        let psi_x1 = ComplexField::from_fn(g, cfg, FieldKind::Perturbation, |z| {
            let loc = WLocal::new(&pc2, z - center);
            if loc.rho < 1e-9 {
                return Complex64::new(0.0, 0.0);
            }
            loc.dx1() / (Complex64::new(0.0, 1.0) * loc.value())
        });
        let d1 = orthogonality_defect(&psi_x1, &p, 0).unwrap();
        let cs = projection_cstar(&p);
        assert!(
            (d1 - cs).abs() <= 2e-3 * cs,
            "W_x1 defect {d1} vs c* = {cs}"
        );
    }

    #[test]
    fn a1_quadratures_agree() {
        let p = profile();
        for eps in [0.1, 0.05] {
            let r = a1_radial(&p, eps);
            let t = a1_tensor(&p, eps);
            assert!((r - t).abs() <= 1e-6, "eps {eps}: radial {r} vs tensor {t}");
        }
    }

    #[test]
    fn a1_increases_toward_pi() {
        let p = profile();
        let mut prev = 0.0;
        for eps in [0.1, 0.03, 0.01, 0.003] {
            let a1 = a1_radial(&p, eps);
            assert!(a1 > prev, "a1 not increasing at eps = {eps}");
            assert!(a1 < std::f64::consts::PI, "a1 = {a1} exceeds π");
            prev = a1;
        }
    }

    #[test]
    fn a0_positive_and_d_hat_stable() {
        let p = profile();
        let np = NormParams::default();
        let eps = 0.05;
        let base = a0_extracted(&p, eps, 1.0, &np);
        assert!(base > 0.0);
        for d_hat in [0.5, 2.0] {
            let v = a0_extracted(&p, eps, d_hat, &np);
            assert!(
                (v - base).abs() <= 0.1 * base,
                "a0({d_hat}) = {v} vs a0(1) = {base}"
            );
        }
    }

    #[test]
    fn a0_a1_bounded_across_sweep() {
        let p = profile();
        let np = NormParams::default();
        let mut a0s = Vec::new();
        for eps in [0.1, 0.05, 0.025] {
            let (a0, a1) = compute_a0_a1(&p, eps, 1.0, &np).unwrap();
            assert!(a0 > 0.0 && a1 > 0.0 && a0.is_finite() && a1.is_finite());
            a0s.push(a0);
        }
        let max = a0s.iter().fold(0.0f64, |m, &v| m.max(v));
        let min = a0s.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        assert!(max / min < 3.0, "a0 drift across sweep: {a0s:?}");
    }

    #[test]
    fn b1_matches_a1_prediction() {
        // B₁ ≈ d̂ ε √|log ε| a₁
        let p = profile();
        let np = NormParams::default();
        let eps = 0.05;
        let d_hat = 1.0;
        let cfg = VortexConfiguration::pair(eps, d_hat);
        let (_, b1) = b0_b1(&p, &cfg, &np);
        let a1 = a1_radial(&p, eps);
        let predicted = d_hat * eps * eps.ln().abs().sqrt() * a1;
        let ratio = b1 / predicted;
        assert!(
            (0.8..=1.2).contains(&ratio),
            "B1 = {b1}, d̂ε√|logε|a1 = {predicted}, ratio {ratio}"
        );
    }

    #[test]
    fn b0_potential_piece_is_higher_order() {
        // the |V_d|²-coupling part of B₀ is O(ε²|log ε|): its ratio to
        // ε√|log ε| vanishes along the sweep
        let p = profile();
        let np = NormParams::default();
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.05, 0.025] {
            let cfg = VortexConfiguration::pair(eps, 1.0);
            let dt = cfg.d_tilde();
            let r_eps = np.r_eps(&cfg);
            let pot = polar_quad(
                &|rho, th| {
                    let z = Complex64::new(dt, 0.0) + Complex64::from_polar(rho, th);
                    let la = WLocal::new(&p, z - Complex64::new(dt, 0.0));
                    let lb = WLocal::new(&p, z + Complex64::new(dt, 0.0));
                    let (w1, w2) = (la.w, lb.w);
                    let pot = 1.0 - (w1 * w2).powi(2) + w1 * w1 + w2 * w2 - 2.0;
                    ((pot * la.value()) * la.dx1().conj()).re * rho
                },
                r_eps,
                1500,
                256,
            );
            let ratio = pot.abs() / (eps * eps.ln().abs().sqrt());
            assert!(ratio < prev, "potential piece ratio not decreasing at eps {eps}");
            prev = ratio;
        }
    }

    #[test]
    fn c_changes_sign_on_bracket() {
        let p = profile();
        let np = NormParams::default();
        let eps = 0.05;
        let cs = projection_cstar(&p);
        let c_small = reduced_coefficient(&p, eps, 0.2, &np, cs);
        let c_large = reduced_coefficient(&p, eps, 5.0, &np, cs);
        assert!(
            c_small > 0.0 && c_large < 0.0,
            "c(0.2) = {c_small}, c(5) = {c_large}"
        );
    }

    #[test]
    fn reduced_root_exists_and_bisection_contracts() {
        let p = profile();
        let np = NormParams::default();
        let rep = solve_reduced(&p, 0.05, (0.2, 5.0), 1e-10, &np).unwrap();
        assert!(rep.d_hat_root > 0.2 && rep.d_hat_root < 5.0);
        // bisection contract: |c| at the root below tol
        let cs = rep.c_star;
        let c_root = reduced_coefficient(&p, 0.05, rep.d_hat_root, &np, cs);
        assert!(c_root.abs() <= 1e-10, "c at root {c_root}");
    }

    #[test]
    fn root_tracks_sqrt_a0_over_a1() {
        let p = profile();
        let np = NormParams::default();
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.05, 0.025] {
            let rep = solve_reduced(&p, eps, (0.2, 5.0), 1e-10, &np).unwrap();
            let rel = (rep.d_hat_root - rep.sqrt_a0_over_a1).abs() / rep.sqrt_a0_over_a1;
            assert!(
                rel <= prev + 1e-12,
                "relative gap not non-increasing at eps {eps}: {rel} after {prev}"
            );
            prev = rel;
        }
    }

    #[test]
    fn ortho2_structure_holds() {
        let p = profile();
        for eps in [0.1, 0.05] {
            let cfg = VortexConfiguration::pair(eps, 1.0);
            let x2x2 = ortho2_x2x2(&p, &cfg);
            assert!(x2x2.abs() <= 1e-8, "x2x2 orthogonality {x2x2} at eps {eps}");
        }
        // G-remainder projection bounded by C·ε/√|log ε| with stable C
        let mut cs = Vec::new();
        for eps in [0.1, 0.05, 0.025] {
            let cfg = VortexConfiguration::pair(eps, 1.0);
            let gproj = ortho2_g(&p, &cfg).abs();
            cs.push(gproj * eps.ln().abs().sqrt() / eps);
        }
        let max = cs.iter().fold(0.0f64, |m, &v| m.max(v));
        let min = cs.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        assert!(max / min <= 3.0, "C_G unstable across sweep: {cs:?}");
    }

    #[test]
    fn c_from_grid_error_matches_semi_analytic() {
        let p = profile();
        let np = NormParams::default();
        let eps = 0.1;
        let cfg = VortexConfiguration::pair(eps, 1.0);
        let op = OperatorParams::for_cfg(&cfg);
        let (b0, b1) = b0_b1(&p, &cfg, &np);
        let mut errs = Vec::new();
        for h in [0.2, 0.1] {
            let g = Grid2D::square_for(cfg.d_tilde(), h);
            let pair = ops::compute_error(&cfg, &p, &g, &op, np.r_eps(&cfg)).unwrap();
            let grid_b = b_total_from_grid(&p, &pair.e_fd, &np);
            errs.push((grid_b - (b0 + b1)).abs());
        }
        // O(h²) agreement between the FD-error route and the closed forms
        assert!(
            errs[1] <= errs[0] * 0.45,
            "no second-order agreement: {errs:?}"
        );
    }
}
