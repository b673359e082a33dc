//! Fourier decomposition in the polar angle around each vortex and the
//! odd/even parity split realized exactly through the reflection identity
//! h^{o,j}(z) = ½[h(z) + conj h(ℛ_j z)], ℛ_j z = 2d̃_j − Re z + i Im z.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GlError, Result};
use crate::field::{ComplexField, VortexConfiguration};
use crate::util::eta1;

/// Angular Fourier data of a field around one vortex: real radial
/// coefficient pairs (h₁^k sin kθ, i h₂^k cos kθ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeExpansion {
    pub vortex: usize,
    pub radii: Vec<f64>,
    pub k_max: usize,
    /// c1[k][r]: coefficient of sin(kθ) in Re h
    pub c1: Vec<Vec<f64>>,
    /// c2[k][r]: coefficient of cos(kθ) in Im h
    pub c2: Vec<Vec<f64>>,
}

pub const ANGULAR_SAMPLES: usize = 256;

/// Decompose h around vortex j into angular modes at the given radii.
///
/// Standing assumption: h(z̄) = −conj h(z), i.e. Re h odd and Im h even in
/// the angle, so the sine/cosine pairs are complete.
pub fn decompose(
    h: &ComplexField,
    j: usize,
    k_max: usize,
    radii: &[f64],
) -> Result<ModeExpansion> {
    let g = &h.grid;
    // verify the standing symmetry on nodes
    let mut worst = 0.0f64;
    let mut worst_node = (0usize, 0usize);
    for jj in 0..g.n2 {
        for ii in 0..g.n1 {
            let v = h.at(ii, jj);
            let m = h.at(ii, g.mirror_j(jj));
            if !v.is_finite() || !m.is_finite() {
                continue;
            }
            let dev = (m + v.conj()).norm();
            if dev > worst {
                worst = dev;
                worst_node = (ii, jj);
            }
        }
    }
    if worst > 1e-8 {
        return Err(GlError::Symmetry(format!(
            "h(conj z) = -conj h(z) violated by {worst:e} at node {worst_node:?} (z = {})",
            g.z(worst_node.0, worst_node.1)
        )));
    }

    let center = h.cfg.vortices[j].center;
    let n_ang = ANGULAR_SAMPLES;
    let mut c1 = vec![vec![0.0; radii.len()]; k_max + 1];
    let mut c2 = vec![vec![0.0; radii.len()]; k_max + 1];
    for (ri, &rho) in radii.iter().enumerate() {
        let mut samples = Vec::with_capacity(n_ang);
        for a in 0..n_ang {
            let th = 2.0 * std::f64::consts::PI * a as f64 / n_ang as f64;
            let z = center + Complex64::from_polar(rho, th);
            samples.push(h.interp(z)?);
        }
        for k in 0..=k_max {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for (a, v) in samples.iter().enumerate() {
                let th = 2.0 * std::f64::consts::PI * a as f64 / n_ang as f64;
                s1 += v.re * (k as f64 * th).sin();
                s2 += v.im * (k as f64 * th).cos();
            }
            let norm = if k == 0 { n_ang as f64 } else { n_ang as f64 / 2.0 };
            c1[k][ri] = s1 / norm;
            c2[k][ri] = s2 / norm;
        }
    }
    Ok(ModeExpansion {
        vortex: j,
        radii: radii.to_vec(),
        k_max,
        c1,
        c2,
    })
}

impl ModeExpansion {
    /// Resynthesize the field value at (ρ index, θ).
    pub fn synth(&self, ri: usize, theta: f64) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..=self.k_max {
            re += self.c1[k][ri] * (k as f64 * theta).sin();
            im += self.c2[k][ri] * (k as f64 * theta).cos();
        }
        Complex64::new(re, im)
    }

    /// Mode energy Σ_r (c1² + c2²) restricted to odd or even k.
    pub fn parity_energy(&self, odd: bool) -> f64 {
        let mut e = 0.0;
        for k in 0..=self.k_max {
            if (k % 2 == 1) == odd {
                for ri in 0..self.radii.len() {
                    e += self.c1[k][ri].powi(2) + self.c2[k][ri].powi(2);
                }
            }
        }
        e
    }

    pub fn total_energy(&self) -> f64 {
        self.parity_energy(true) + self.parity_energy(false)
    }

    /// CSV rows `k,radius,c1,c2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,radius,c1,c2\n");
        for k in 0..=self.k_max {
            for (ri, &r) in self.radii.iter().enumerate() {
                out.push_str(&format!("{k},{r},{},{}\n", self.c1[k][ri], self.c2[k][ri]));
            }
        }
        out
    }
}

/// Reflection ℛ_j across the vertical line through vortex j.
pub fn reflect(cfg: &VortexConfiguration, j: usize, z: Complex64) -> Complex64 {
    let c = cfg.vortices[j].center;
    Complex64::new(2.0 * c.re - z.re, z.im)
}

/// Exact odd/even split: h^o = Σ_j η_{j,R} h^{o,j} with
/// h^{o,j}(z) = ½[h(z) + conj h(ℛ_j z)], and h^e = h − h^o.
///
/// Requires every vortex line 2·Re(c_j) to be node-closed (grids built by
/// `Grid2D::square_for` are).
pub fn parity_split(h: &ComplexField, radius: f64) -> Result<(ComplexField, ComplexField)> {
    let g = h.grid.clone();
    let cfg = h.cfg.clone();

    // node index of the reflected point per vortex, or error
    let mut shift = Vec::new();
    for v in &cfg.vortices {
        let two_c = 2.0 * v.center.re;
        let steps = two_c / g.h;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(GlError::Grid(format!(
                "grid not reflection-closed for vortex at {}: 2 Re c / h = {steps}",
                v.center
            )));
        }
        if v.center.im.abs() > 1e-12 {
            return Err(GlError::Grid(
                "parity split requires vortices on the real axis".into(),
            ));
        }
        shift.push(steps.round() as i64);
    }

    let mut odd_vals = vec![Complex64::new(0.0, 0.0); g.len()];
    for jj in 0..g.n2 {
        for ii in 0..g.n1 {
            let z = g.z(ii, jj);
            let mut acc = Complex64::new(0.0, 0.0);
            for (vj, v) in cfg.vortices.iter().enumerate() {
                let cut = eta1((z - v.center).norm() / radius);
                if cut == 0.0 {
                    continue;
                }
                // reflected node: x' = 2c − x  =>  i' = shift + (n1−1) − i ... in index form
                let i_refl = shift[vj] + ((g.n1 - 1) as i64 - ii as i64) - (g.n1 - 1) as i64
                    + (g.n1 - 1) as i64;
                // the line above reduces to shift[vj] - i + (n1-1) only when
                // the axis offset cancels; compute directly from coordinates
                let x_refl = 2.0 * v.center.re - z.re;
                let fi = (x_refl + g.l1) / g.h;
                let ir = fi.round();
                if (fi - ir).abs() > 1e-6 || ir < 0.0 || ir as usize >= g.n1 {
                    return Err(GlError::Grid(format!(
                        "reflection of node ({ii},{jj}) about vortex {vj} leaves the grid"
                    )));
                }
                let _ = i_refl;
                let hv = h.at(ii, jj);
                let hr = h.at(ir as usize, jj);
                acc += cut * 0.5 * (hv + hr.conj());
            }
            odd_vals[g.idx(ii, jj)] = acc;
        }
    }
    let odd = ComplexField {
        grid: g.clone(),
        values: odd_vals,
        cfg: cfg.clone(),
        kind: h.kind,
        valid_margin: h.valid_margin,
    };
    let mut even = h.clone();
    for k in 0..even.values.len() {
        even.values[k] -= odd.values[k];
    }
    Ok((odd, even))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldKind, Grid2D};

    fn setup() -> (VortexConfiguration, Grid2D) {
        let cfg = VortexConfiguration::pair(0.1, 1.0);
        let g = Grid2D::square_for(cfg.d_tilde(), 0.25);
        (cfg, g)
    }

    fn theta1(cfg: &VortexConfiguration, z: Complex64) -> (f64, f64) {
        let dz = z - cfg.vortices[0].center;
        (dz.norm(), dz.arg())
    }

    #[test]
    fn pure_sine_mode_lands_in_c1_k1() {
        let (cfg, g) = setup();
        let h = ComplexField::from_fn(g, cfg.clone(), FieldKind::Residual, |z| {
            let (rho, th) = theta1(&cfg, z);
            if rho < 1e-9 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(th.sin() / rho, 0.0)
            }
        });
        let radii = [2.0, 3.0, 4.0];
        let me = decompose(&h, 0, 6, &radii).unwrap();
        for (ri, &r) in radii.iter().enumerate() {
            assert!((me.c1[1][ri] - 1.0 / r).abs() < 1e-3, "c1[1] at r={r}: {}", me.c1[1][ri]);
            for k in 0..=6 {
                if k != 1 {
                    assert!(me.c1[k][ri].abs() < 1e-3);
                }
                assert!(me.c2[k][ri].abs() < 1e-3);
            }
        }
    }

    #[test]
    fn pure_cos2_mode_lands_in_c2_k2() {
        let (cfg, g) = setup();
        let h = ComplexField::from_fn(g, cfg.clone(), FieldKind::Residual, |z| {
            let (_, th) = theta1(&cfg, z);
            Complex64::new(0.0, (2.0 * th).cos())
        });
        let me = decompose(&h, 0, 6, &[2.5]).unwrap();
        // bilinear sampling smooths the mode slightly: tolerance ~ h²|D²h|
        assert!((me.c2[2][0] - 1.0).abs() < 5e-3, "c2[2] = {}", me.c2[2][0]);
        for k in 0..=6 {
            assert!(me.c1[k][0].abs() < 5e-3);
            if k != 2 {
                assert!(me.c2[k][0].abs() < 5e-3);
            }
        }
    }

    #[test]
    fn symmetry_violation_is_rejected() {
        let (cfg, g) = setup();
        let h = ComplexField::from_fn(g, cfg, FieldKind::Residual, |z| {
            Complex64::new(1.0 + z.im, 0.0) // Re not odd in x2
        });
        assert!(matches!(decompose(&h, 0, 4, &[2.0]), Err(GlError::Symmetry(_))));
    }

    #[test]
    fn odd_field_passes_through_parity_split() {
        let (cfg, g) = setup();
        let r_loc = cfg.d_tilde() / 4.0;
        // odd-mode field localized strictly inside the cutoff cores
        let cfg2 = cfg.clone();
        let h = ComplexField::from_fn(g, cfg.clone(), FieldKind::Residual, |z| {
            let mut acc = Complex64::new(0.0, 0.0);
            for v in &cfg2.vortices {
                let dz = z - v.center;
                let rho = dz.norm();
                if rho < 1e-12 {
                    continue;
                }
                let th = dz.arg();
                let bump = (-3.0 * (rho / r_loc).powi(2)).exp()
                    * if rho < r_loc { 1.0 } else { 0.0 };
                acc += bump * Complex64::new(th.sin(), (3.0 * th).cos());
            }
            acc
        });
        let (odd, even) = parity_split(&h, r_loc * 2.0).unwrap();
        let mut dev = 0.0f64;
        for k in 0..h.values.len() {
            dev = dev.max((odd.values[k] - h.values[k]).norm());
            dev = dev.max(even.values[k].norm());
        }
        assert!(dev <= 1e-12, "odd field altered by {dev}");
    }

    #[test]
    fn even_field_has_no_odd_part() {
        let (cfg, g) = setup();
        let r_loc = cfg.d_tilde() / 4.0;
        let cfg2 = cfg.clone();
        let h = ComplexField::from_fn(g, cfg.clone(), FieldKind::Residual, |z| {
            let mut acc = Complex64::new(0.0, 0.0);
            for v in &cfg2.vortices {
                let dz = z - v.center;
                let rho = dz.norm();
                if rho < 1e-12 {
                    continue;
                }
                let th = dz.arg();
                let bump = (-3.0 * (rho / r_loc).powi(2)).exp();
                acc += bump * Complex64::new((2.0 * th).sin(), (4.0 * th).cos());
            }
            acc
        });
        let (odd, _) = parity_split(&h, r_loc * 2.0).unwrap();
        let dev = odd.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        assert!(dev <= 1e-12, "even field produced odd part {dev}");
    }

    #[test]
    fn split_is_linear_and_idempotent_inside_cutoff() {
        let (cfg, g) = setup();
        let radius = cfg.d_tilde() / 2.0;
        let h1 = ComplexField::from_fn(g.clone(), cfg.clone(), FieldKind::Residual, |z| {
            Complex64::new((0.3 * z.re).sin() * z.im, (0.2 * z.im).cos() * z.re)
                * (-0.01 * z.norm_sqr()).exp()
        });
        let h2 = ComplexField::from_fn(g.clone(), cfg.clone(), FieldKind::Residual, |z| {
            Complex64::new(z.im, z.re * z.im) * (-0.02 * z.norm_sqr()).exp()
        });
        let combo = ComplexField {
            grid: g.clone(),
            values: h1
                .values
                .iter()
                .zip(&h2.values)
                .map(|(a, b)| 2.0 * a - 0.5 * b)
                .collect(),
            cfg: cfg.clone(),
            kind: FieldKind::Residual,
            valid_margin: 0,
        };
        let (o1, _) = parity_split(&h1, radius).unwrap();
        let (o2, _) = parity_split(&h2, radius).unwrap();
        let (oc, _) = parity_split(&combo, radius).unwrap();
        let mut dev = 0.0f64;
        for k in 0..oc.values.len() {
            dev = dev.max((oc.values[k] - 2.0 * o1.values[k] + 0.5 * o2.values[k]).norm());
        }
        assert!(dev <= 1e-12, "linearity deviation {dev}");

        // idempotence where the cutoff is identically one
        let (oo, _) = parity_split(&o1, radius).unwrap();
        let mut dev2 = 0.0f64;
        for jj in 0..g.n2 {
            for ii in 0..g.n1 {
                let z = g.z(ii, jj);
                let inner = cfg
                    .vortices
                    .iter()
                    .any(|v| (z - v.center).norm() <= radius * 0.99);
                if inner {
                    dev2 = dev2.max((oo.at(ii, jj) - o1.at(ii, jj)).norm());
                }
            }
        }
        assert!(dev2 <= 1e-12, "idempotence deviation {dev2}");
    }

    #[test]
    fn split_agrees_with_fourier_resummation() {
        let (cfg, g) = setup();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let radius = cfg.d_tilde() / 2.0;
        for trial in 0..10 {
            // random smooth field with the standing symmetry, localized at vortex 1
            let coeffs: Vec<(f64, f64, f64)> = (0..4)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.1..0.4)))
                .collect();
            let c0 = cfg.vortices[0].center;
            let h = ComplexField::from_fn(g.clone(), cfg.clone(), FieldKind::Residual, |z| {
                let dz = z - c0;
                let rho = dz.norm();
                if rho < 1e-12 {
                    return Complex64::new(0.0, 0.0);
                }
                let th = dz.arg();
                let mut v = Complex64::new(0.0, 0.0);
                for (k, &(a, b, s)) in coeffs.iter().enumerate() {
                    let damp = (-s * rho).exp();
                    v += damp * Complex64::new(a * ((k + 1) as f64 * th).sin(), b * (k as f64 * th).cos());
                }
                v
            });
            let (odd, _) = parity_split(&h, radius).unwrap();
            // Fourier route: decompose, resum odd k
            let radii = [1.7, 2.9];
            let me = decompose(&h, 0, 12, &radii).unwrap();
            for (ri, &r) in radii.iter().enumerate() {
                for &th in &[0.4, 1.9, 3.6] {
                    let z = c0 + Complex64::from_polar(r, th);
                    let mut resum = Complex64::new(0.0, 0.0);
                    for k in (1..=12).step_by(2) {
                        resum += Complex64::new(
                            me.c1[k][ri] * (k as f64 * th).sin(),
                            me.c2[k][ri] * (k as f64 * th).cos(),
                        );
                    }
                    let direct = odd.interp(z).unwrap();
                    // two bilinear interpolations plus angular quadrature
                    assert!(
                        (resum - direct).norm() < 2e-2,
                        "trial {trial}: odd resummation mismatch {} at r={r}, θ={th}",
                        (resum - direct).norm()
                    );
                }
            }
        }
    }

    #[test]
    fn product_parity_calculus_bound() {
        // |(fg)^o| ≤ |f^o||g^e| + |f^e||g^o| + |f^o||g^o| on mode-pure products
        let (cfg, g) = setup();
        let c0 = cfg.vortices[0].center;
        let radius = cfg.d_tilde() / 2.0;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..6 {
            let (ko, ke) = (2 * rng.gen_range(0..3usize) + 1, 2 * rng.gen_range(0..3usize));
            let mk = |k: usize, amp: f64| {
                let cfgc = cfg.clone();
                ComplexField::from_fn(g.clone(), cfgc, FieldKind::Residual, move |z| {
                    let dz = z - c0;
                    let rho = dz.norm();
                    if rho < 1e-12 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let th = dz.arg();
                    let damp = (-(rho / 3.0).powi(2)).exp();
                    amp * damp * Complex64::new((k as f64 * th).sin(), 0.0)
                })
            };
            let f = mk(ko, 1.0);
            let gg = mk(ke.max(2), 0.8);
            let prod = ComplexField {
                grid: g.clone(),
                values: f
                    .values
                    .iter()
                    .zip(&gg.values)
                    .map(|(a, b)| a * b)
                    .collect(),
                cfg: cfg.clone(),
                kind: FieldKind::Residual,
                valid_margin: 0,
            };
            let (fo, fe) = parity_split(&f, radius).unwrap();
            let (go, ge) = parity_split(&gg, radius).unwrap();
            let (po, _) = parity_split(&prod, radius).unwrap();
            for jj in 0..g.n2 {
                for ii in 0..g.n1 {
                    let z = g.z(ii, jj);
                    if (z - c0).norm() <= radius * 0.9 {
                        let lhs = po.at(ii, jj).norm();
                        let rhs = fo.at(ii, jj).norm() * ge.at(ii, jj).norm()
                            + fe.at(ii, jj).norm() * go.at(ii, jj).norm()
                            + fo.at(ii, jj).norm() * go.at(ii, jj).norm();
                        assert!(lhs <= rhs + 1e-10, "parity calculus violated: {lhs} > {rhs}");
                    }
                }
            }
        }
    }
}
