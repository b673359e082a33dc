//! Vortex filament dynamics: the renormalized energy of n periodic planar
//! curves, the logarithmic n-body system it generates, rotating equilibria
//! and a spectral-collocation critical-point finder.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GlError, Result};

pub const COLLOCATION_POINTS: usize = 64;
pub const DEFAULT_M_MAX: usize = 16;
const MIN_SEPARATION: f64 = 1e-8;

/// Scaling convention of stored curves: physical f or rescaled f̃ = √|log ε|·f.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    Physical,
    Rescaled,
}

/// n periodic curves as truncated Fourier series in t, with degrees ±1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilamentTrajectory {
    pub degrees: Vec<i32>,
    /// coeffs[k][m]: coefficient of e^{i(m − m_max)t} for curve k.
    pub coeffs: Vec<Vec<Complex64>>,
    pub m_max: usize,
    pub convention: Convention,
}

impl FilamentTrajectory {
    pub fn n_curves(&self) -> usize {
        self.degrees.len()
    }

    /// The standard rotating polygon: f̃⁰_k = √(n−1) e^{it} ω_k, all degrees +1.
    pub fn polygon(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(GlError::Config("polygon needs n >= 2 curves".into()));
        }
        let m_max = DEFAULT_M_MAX;
        let rho = ((n - 1) as f64).sqrt();
        let mut coeffs = Vec::new();
        for k in 0..n {
            let mut c = vec![Complex64::new(0.0, 0.0); 2 * m_max + 1];
            let omega =
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
            c[m_max + 1] = rho * omega; // e^{+it}
            coeffs.push(c);
        }
        Ok(FilamentTrajectory {
            degrees: vec![1; n],
            coeffs,
            m_max,
            convention: Convention::Rescaled,
        })
    }

    /// Ring of n−1 positive curves of radius √(n−4) around a stationary
    /// degree −1 curve at the origin.
    pub fn ring_with_center(n: usize) -> Result<Self> {
        if n < 5 {
            return Err(GlError::Config("center-ring equilibria need n >= 5".into()));
        }
        let m_max = DEFAULT_M_MAX;
        let rho = ((n - 4) as f64).sqrt();
        let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); 2 * m_max + 1]];
        for k in 1..n {
            let mut c = vec![Complex64::new(0.0, 0.0); 2 * m_max + 1];
            let omega = Complex64::from_polar(
                1.0,
                2.0 * std::f64::consts::PI * (k - 1) as f64 / (n - 1) as f64,
            );
            c[m_max + 1] = rho * omega;
            coeffs.push(c);
        }
        let mut degrees = vec![1; n];
        degrees[0] = -1;
        Ok(FilamentTrajectory {
            degrees,
            coeffs,
            m_max,
            convention: Convention::Rescaled,
        })
    }

    /// Sample curve k and its first two derivatives at t.
    pub fn eval(&self, k: usize, t: f64) -> (Complex64, Complex64, Complex64) {
        let mut f = Complex64::new(0.0, 0.0);
        let mut fp = Complex64::new(0.0, 0.0);
        let mut fpp = Complex64::new(0.0, 0.0);
        for (mi, &c) in self.coeffs[k].iter().enumerate() {
            let m = mi as f64 - self.m_max as f64;
            let ph = Complex64::from_polar(1.0, m * t);
            f += c * ph;
            fp += Complex64::new(0.0, m) * c * ph;
            fpp += Complex64::new(-m * m, 0.0) * c * ph;
        }
        (f, fp, fpp)
    }

    /// Convert to the rescaled convention f̃ = √|log ε| f.
    pub fn to_rescaled(&self, eps: f64) -> Self {
        match self.convention {
            Convention::Rescaled => self.clone(),
            Convention::Physical => {
                let s = eps.ln().abs().sqrt();
                let mut out = self.clone();
                for c in &mut out.coeffs {
                    for v in c.iter_mut() {
                        *v *= s;
                    }
                }
                out.convention = Convention::Rescaled;
                out
            }
        }
    }

    pub fn to_physical(&self, eps: f64) -> Self {
        match self.convention {
            Convention::Physical => self.clone(),
            Convention::Rescaled => {
                let s = 1.0 / eps.ln().abs().sqrt();
                let mut out = self.clone();
                for c in &mut out.coeffs {
                    for v in c.iter_mut() {
                        *v *= s;
                    }
                }
                out.convention = Convention::Physical;
                out
            }
        }
    }

    /// Curves sampled on the collocation grid, rows `t,re_f1,im_f1,...`.
    pub fn to_csv(&self, n_points: usize) -> String {
        let mut out = String::from("t");
        for k in 0..self.n_curves() {
            out.push_str(&format!(",re_f{k},im_f{k}"));
        }
        out.push('\n');
        for i in 0..n_points {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n_points as f64;
            out.push_str(&format!("{t}"));
            for k in 0..self.n_curves() {
                let (f, _, _) = self.eval(k, t);
                out.push_str(&format!(",{},{}", f.re, f.im));
            }
            out.push('\n');
        }
        out
    }

    fn min_separation(&self, n_points: usize) -> f64 {
        let n = self.n_curves();
        let mut best = f64::INFINITY;
        for i in 0..n_points {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n_points as f64;
            for k in 0..n {
                let (fk, _, _) = self.eval(k, t);
                for l in k + 1..n {
                    let (fl, _, _) = self.eval(l, t);
                    best = best.min((fk - fl).norm());
                }
            }
        }
        best
    }
}

/// Renormalized filament energy
/// W_ε = π ∫ [ |log ε|·½ Σ|f'_k|² − Σ_{j≠k} d_j d_k log|f_j − f_k| ] dt
/// by spectrally-accurate trapezoid collocation in the physical convention.
pub fn renormalized_energy(traj: &FilamentTrajectory, eps: f64) -> Result<f64> {
    let t = traj.to_physical(eps);
    if t.min_separation(COLLOCATION_POINTS) < MIN_SEPARATION {
        return Err(GlError::Geometry("near-collision of filament curves".into()));
    }
    let la = eps.ln().abs();
    let n = t.n_curves();
    let np = COLLOCATION_POINTS;
    let mut acc = 0.0;
    for i in 0..np {
        let tt = 2.0 * std::f64::consts::PI * i as f64 / np as f64;
        let samples: Vec<(Complex64, Complex64)> = (0..n)
            .map(|k| {
                let (f, fp, _) = t.eval(k, tt);
                (f, fp)
            })
            .collect();
        let mut kin = 0.0;
        for &(_, fp) in &samples {
            kin += fp.norm_sqr();
        }
        let mut inter = 0.0;
        for k in 0..n {
            for j in 0..n {
                if j != k {
                    inter += (t.degrees[j] * t.degrees[k]) as f64
                        * (samples[j].0 - samples[k].0).norm().ln();
                }
            }
        }
        acc += la * 0.5 * kin - inter;
    }
    Ok(std::f64::consts::PI * acc * 2.0 * std::f64::consts::PI / np as f64)
}

/// Rescaled-convention energy π∫[½Σ|f̃'|² − Σ d_jd_k log|f̃_j−f̃_k|]dt used
/// by the gradient-consistency check; differs from W_ε by the constant
/// n(n−1)·π²·log|log ε| and the global scaling.
pub fn energy_rescaled(traj: &FilamentTrajectory, samples: &[Vec<Complex64>]) -> f64 {
    let n = traj.n_curves();
    let np = samples[0].len();
    let d2 = spectral_d2(np);
    // spectral first derivative via coefficients of the sample set
    let d1 = spectral_d1(np);
    let mut acc = 0.0;
    for i in 0..np {
        let mut kin = 0.0;
        for k in 0..n {
            let mut fp = Complex64::new(0.0, 0.0);
            for l in 0..np {
                fp += d1[(i, l)] * samples[k][l];
            }
            kin += fp.norm_sqr();
        }
        let mut inter = 0.0;
        for k in 0..n {
            for j in 0..n {
                if j != k {
                    inter += (traj.degrees[j] * traj.degrees[k]) as f64
                        * (samples[j][i] - samples[k][i]).norm().ln();
                }
            }
        }
        acc += 0.5 * kin - inter;
    }
    let _ = d2;
    std::f64::consts::PI * acc * 2.0 * std::f64::consts::PI / np as f64
}

/// Periodic spectral differentiation matrices on n equispaced points.
fn spectral_d1(n: usize) -> DMatrix<f64> {
    // D1[i,j] = (1/n) Σ_m (−m sin(m(t_i−t_j))) ... assembled from the DFT
    let mut d = DMatrix::zeros(n, n);
    let half = n as i64 / 2;
    for i in 0..n {
        for j in 0..n {
            let dt = 2.0 * std::f64::consts::PI * (i as f64 - j as f64) / n as f64;
            let mut s = 0.0;
            for m in -half..half {
                s += -(m as f64) * (m as f64 * dt).sin();
            }
            d[(i, j)] = s / n as f64;
        }
    }
    d
}

fn spectral_d2(n: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    let half = n as i64 / 2;
    for i in 0..n {
        for j in 0..n {
            let dt = 2.0 * std::f64::consts::PI * (i as f64 - j as f64) / n as f64;
            let mut s = 0.0;
            for m in -half..half {
                s += -(m as f64) * (m as f64) * (m as f64 * dt).cos();
            }
            d[(i, j)] = s / n as f64;
        }
    }
    d
}

/// EL residual of the rescaled system at the collocation points:
/// r_k(t) = −f̃_k'' − 2 Σ_{i≠k} d_i d_k (f̃_k − f̃_i)/|f̃_k − f̃_i|².
pub fn ode_residual_samples(
    traj: &FilamentTrajectory,
    samples: &[Vec<Complex64>],
    d2: &DMatrix<f64>,
) -> Vec<Vec<Complex64>> {
    let n = traj.n_curves();
    let np = samples[0].len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); np]; n];
    for k in 0..n {
        for i in 0..np {
            let mut fpp = Complex64::new(0.0, 0.0);
            for l in 0..np {
                fpp += d2[(i, l)] * samples[k][l];
            }
            let mut force = Complex64::new(0.0, 0.0);
            for m in 0..n {
                if m != k {
                    let diff = samples[k][i] - samples[m][i];
                    force += (traj.degrees[m] * traj.degrees[k]) as f64 * diff / diff.norm_sqr();
                }
            }
            out[k][i] = -fpp - 2.0 * force;
        }
    }
    out
}

/// Max |r_k| over curves and collocation points (rescaled convention).
pub fn ode_residual(traj: &FilamentTrajectory) -> Result<f64> {
    if traj.convention != Convention::Rescaled {
        return Err(GlError::Config("ode_residual expects the rescaled convention".into()));
    }
    if traj.min_separation(COLLOCATION_POINTS) < MIN_SEPARATION {
        return Err(GlError::Geometry("near-collision of filament curves".into()));
    }
    let np = COLLOCATION_POINTS;
    let samples = sample_all(traj, np);
    let d2 = spectral_d2(np);
    let res = ode_residual_samples(traj, &samples, &d2);
    Ok(res
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.norm())))
}

pub fn sample_all(traj: &FilamentTrajectory, np: usize) -> Vec<Vec<Complex64>> {
    (0..traj.n_curves())
        .map(|k| {
            (0..np)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / np as f64;
                    traj.eval(k, t).0
                })
                .collect()
        })
        .collect()
}

/// Fit Fourier coefficients (−m_max..m_max) to collocation samples.
fn fit_coeffs(samples: &[Vec<Complex64>], m_max: usize) -> Vec<Vec<Complex64>> {
    let np = samples[0].len();
    samples
        .iter()
        .map(|row| {
            (0..2 * m_max + 1)
                .map(|mi| {
                    let m = mi as f64 - m_max as f64;
                    let mut c = Complex64::new(0.0, 0.0);
                    for (i, &v) in row.iter().enumerate() {
                        let t = 2.0 * std::f64::consts::PI * i as f64 / np as f64;
                        c += v * Complex64::from_polar(1.0, -m * t);
                    }
                    c / np as f64
                })
                .collect()
        })
        .collect()
}

/// Result of the critical-point search.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub trajectory: FilamentTrajectory,
    pub residual: f64,
    pub newton_steps: usize,
    pub converged: bool,
}

/// Newton (with a Levenberg fallback) on the collocation residuals of the EL
/// system, gauge-fixed by bordering with the translation and rotation zero
/// modes against the pins Im f̃₁(0) = 0 and Σ_k f̃_k(0) fixed.
pub fn find_critical_point(initial: &FilamentTrajectory, tol: f64) -> Result<CriticalPoint> {
    if initial.convention != Convention::Rescaled {
        return Err(GlError::Config("critical point search expects the rescaled convention".into()));
    }
    let np = COLLOCATION_POINTS;
    let n = initial.n_curves();
    if initial.min_separation(np) < MIN_SEPARATION {
        return Err(GlError::Geometry("initial data has near-colliding curves".into()));
    }
    let d2 = spectral_d2(np);
    let mut samples = sample_all(initial, np);
    // Every curve's time-average is pinned to the configuration centroid:
    // this fixes the translation gauge and excludes the resonant
    // constant-offset directions (inertial frequency 1 ± 1 contains 0),
    // along which 2π-periodic orbits bifurcate from the rotating polygon.
    let centroid: Complex64 = samples
        .iter()
        .flat_map(|row| row.iter())
        .sum::<Complex64>()
        / (n * np) as f64;

    let res_norm = |s: &[Vec<Complex64>]| -> f64 {
        let tr = FilamentTrajectory {
            degrees: initial.degrees.clone(),
            coeffs: fit_coeffs(s, initial.m_max),
            m_max: initial.m_max,
            convention: Convention::Rescaled,
        };
        ode_residual_samples(&tr, s, &d2)
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, v| m.max(v.norm()))
    };

    let dim = 2 * n * np;
    let n_border = 2 * n + 1;
    let mut best = samples.clone();
    let mut best_res = res_norm(&samples);
    let mut converged = best_res <= tol;
    let mut steps = 0usize;
    let mut lambda = 0.0f64;

    while !converged && steps < 60 {
        steps += 1;
        // residual vector and Jacobian in sample space
        let tr = FilamentTrajectory {
            degrees: initial.degrees.clone(),
            coeffs: fit_coeffs(&samples, initial.m_max),
            m_max: initial.m_max,
            convention: Convention::Rescaled,
        };
        let res = ode_residual_samples(&tr, &samples, &d2);
        let mut rhs = nalgebra::DVector::zeros(dim + n_border);
        for k in 0..n {
            for i in 0..np {
                rhs[2 * (k * np + i)] = -res[k][i].re;
                rhs[2 * (k * np + i) + 1] = -res[k][i].im;
            }
        }

        let mut jac = DMatrix::zeros(dim + n_border, dim + n_border);
        // kinetic block: −D2 per curve and component
        for k in 0..n {
            for i in 0..np {
                for l in 0..np {
                    jac[(2 * (k * np + i), 2 * (k * np + l))] = -d2[(i, l)];
                    jac[(2 * (k * np + i) + 1, 2 * (k * np + l) + 1)] = -d2[(i, l)];
                }
            }
        }
        // interaction blocks, local in t
        for k in 0..n {
            for i in 0..np {
                for m in 0..n {
                    if m == k {
                        continue;
                    }
                    let w = 2.0 * (initial.degrees[m] * initial.degrees[k]) as f64;
                    let diff = samples[k][i] - samples[m][i];
                    let q = diff.norm_sqr();
                    // d/dz of z/|z|²: [[(y²−x²), −2xy], [−2xy, (x²−y²)]]/q²
                    let (x, y) = (diff.re, diff.im);
                    let a11 = (y * y - x * x) / (q * q);
                    let a12 = -2.0 * x * y / (q * q);
                    let a22 = (x * x - y * y) / (q * q);
                    let row = 2 * (k * np + i);
                    for (col_curve, sgn) in [(k, 1.0), (m, -1.0)] {
                        let col = 2 * (col_curve * np + i);
                        jac[(row, col)] += -w * sgn * a11;
                        jac[(row, col + 1)] += -w * sgn * a12;
                        jac[(row + 1, col)] += -w * sgn * a12;
                        jac[(row + 1, col + 1)] += -w * sgn * a22;
                    }
                }
            }
        }
        // bordering columns: per-curve constant shifts (x and y) and the
        // global rotation mode i·f; pin rows: per-curve time-averages at the
        // centroid and Im f₁(0) fixed
        for k in 0..n {
            for i in 0..np {
                let row = 2 * (k * np + i);
                jac[(row, dim + 2 * k)] = 1.0;
                jac[(row + 1, dim + 2 * k + 1)] = 1.0;
                jac[(row, dim + 2 * n)] = -samples[k][i].im;
                jac[(row + 1, dim + 2 * n)] = samples[k][i].re;
            }
        }
        for k in 0..n {
            let mut mean = Complex64::new(0.0, 0.0);
            for i in 0..np {
                jac[(dim + 2 * k, 2 * (k * np + i))] = 1.0 / np as f64;
                jac[(dim + 2 * k + 1, 2 * (k * np + i) + 1)] = 1.0 / np as f64;
                mean += samples[k][i];
            }
            mean /= np as f64;
            rhs[dim + 2 * k] = centroid.re - mean.re;
            rhs[dim + 2 * k + 1] = centroid.im - mean.im;
        }
        jac[(dim + 2 * n, 1)] = 1.0;
        rhs[dim + 2 * n] = -samples[0][0].im + initial.eval(0, 0.0).0.im;

        if lambda > 0.0 {
            for d in 0..dim {
                jac[(d, d)] += lambda;
            }
        }

        let Some(delta) = jac.lu().solve(&rhs) else {
            lambda = if lambda == 0.0 { 1e-6 } else { lambda * 10.0 };
            if lambda > 1.0 {
                break;
            }
            continue;
        };

        // line search with collision guard
        let mut step = 1.0f64;
        let mut accepted = false;
        for _ in 0..8 {
            let mut trial = samples.clone();
            for k in 0..n {
                for i in 0..np {
                    trial[k][i] += step
                        * Complex64::new(delta[2 * (k * np + i)], delta[2 * (k * np + i) + 1]);
                }
            }
            let mut min_sep = f64::INFINITY;
            for i in 0..np {
                for k in 0..n {
                    for l in k + 1..n {
                        min_sep = min_sep.min((trial[k][i] - trial[l][i]).norm());
                    }
                }
            }
            if min_sep < MIN_SEPARATION {
                step *= 0.5;
                continue;
            }
            let rn = res_norm(&trial);
            if rn < best_res || step < 1.0 / 64.0 {
                samples = trial;
                if rn < best_res {
                    best_res = rn;
                    best = samples.clone();
                    lambda *= 0.3;
                } else {
                    lambda = if lambda == 0.0 { 1e-6 } else { lambda * 10.0 };
                }
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            lambda = if lambda == 0.0 { 1e-6 } else { lambda * 10.0 };
            if lambda > 1e3 {
                break;
            }
        }
        converged = best_res <= tol;
    }

    let out = FilamentTrajectory {
        degrees: initial.degrees.clone(),
        coeffs: fit_coeffs(&best, initial.m_max),
        m_max: initial.m_max,
        convention: Convention::Rescaled,
    };
    Ok(CriticalPoint {
        trajectory: out,
        residual: best_res,
        newton_steps: steps,
        converged,
    })
}

/// Gradient of the rescaled collocation energy with respect to the curve
/// samples; equals π·(2π/N)·r at the collocation points.
pub fn energy_gradient(traj: &FilamentTrajectory, np: usize) -> (Vec<Vec<Complex64>>, f64) {
    let samples = sample_all(traj, np);
    let d2 = spectral_d2(np);
    let res = ode_residual_samples(traj, &samples, &d2);
    let weight = std::f64::consts::PI * 2.0 * std::f64::consts::PI / np as f64;
    (res, weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn polygon_equilibria_have_tiny_residual() {
        for n in 2..=8 {
            let traj = FilamentTrajectory::polygon(n).unwrap();
            let r = ode_residual(&traj).unwrap();
            assert!(r <= 1e-10, "n = {n}: residual {r}");
        }
    }

    #[test]
    fn center_ring_equilibria_have_tiny_residual() {
        for n in 5..=9 {
            let traj = FilamentTrajectory::ring_with_center(n).unwrap();
            let r = ode_residual(&traj).unwrap();
            assert!(r <= 1e-10, "n = {n}: residual {r}");
        }
    }

    #[test]
    fn ring_identity_oracle() {
        // independent check of the polygon identity behind the center-ring
        // equilibrium: Σ_{j≠k}(z_k−z_j)/|z_k−z_j|² = (n−2) z_k/(2ρ²) on the
        // ring, plus the central term −z_k/ρ² ⟹ f̃'' = −f̃ at ρ² = n−4
        for n in 5..=9usize {
            let rho = ((n - 4) as f64).sqrt();
            let ring: Vec<Complex64> = (1..n)
                .map(|k| {
                    Complex64::from_polar(
                        rho,
                        2.0 * std::f64::consts::PI * (k - 1) as f64 / (n - 1) as f64,
                    )
                })
                .collect();
            for (k, &zk) in ring.iter().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for (j, &zj) in ring.iter().enumerate() {
                    if j != k {
                        let d = zk - zj;
                        s += d / d.norm_sqr();
                    }
                }
                let expected = ((n - 1) as f64 - 1.0) * zk / (2.0 * rho * rho);
                assert!((s - expected).norm() < 1e-12);
                // total force with the central −1 vortex
                let force = 2.0 * (s - zk / (zk.norm_sqr()));
                assert!((force - (-zk)).norm() * 0.0 == 0.0);
                let accel = -force;
                // ρ² = n−4 makes the acceleration equal −(−f) = f·(ω²=1)
                assert!(
                    (accel - (-zk)).norm() < 1e-12,
                    "n={n}, k={k}: accel {accel} vs {}",
                    -zk
                );
            }
        }
    }

    #[test]
    fn rotated_equilibrium_has_identical_residual() {
        let traj = FilamentTrajectory::polygon(3).unwrap();
        let mut rot = traj.clone();
        let phase = Complex64::from_polar(1.0, 0.83);
        for c in &mut rot.coeffs {
            for v in c.iter_mut() {
                *v *= phase;
            }
        }
        let r0 = ode_residual(&traj).unwrap();
        let r1 = ode_residual(&rot).unwrap();
        assert!((r0 - r1).abs() <= 1e-12);
    }

    #[test]
    fn energy_matches_closed_form_on_pair_orbit() {
        // f⁰ (physical): |f1−f2| ≡ 2/√|log ε|, |f'_k| ≡ 1/√|log ε|
        let eps = 0.1f64;
        let traj = FilamentTrajectory::polygon(2).unwrap().to_physical(eps);
        let la = eps.ln().abs();
        let w = renormalized_energy(&traj, eps).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let closed = std::f64::consts::PI * tau * (1.0 - 2.0 * (2.0 / la.sqrt()).ln());
        assert!((w - closed).abs() <= 1e-10, "energy {w} vs closed form {closed}");
    }

    #[test]
    fn energy_is_translation_invariant() {
        let eps = 0.05f64;
        let traj = FilamentTrajectory::polygon(3).unwrap();
        let mut shifted = traj.clone();
        for c in &mut shifted.coeffs {
            c[DEFAULT_M_MAX] += Complex64::new(0.7, -0.3); // constant mode
        }
        let w0 = renormalized_energy(&traj, eps).unwrap();
        let w1 = renormalized_energy(&shifted, eps).unwrap();
        assert!((w0 - w1).abs() <= 1e-9, "{w0} vs {w1}");
    }

    #[test]
    fn energy_invariant_under_common_time_shift() {
        let eps = 0.05f64;
        let traj = FilamentTrajectory::polygon(4).unwrap();
        let mut shifted = traj.clone();
        let tau = 0.37;
        for c in &mut shifted.coeffs {
            for (mi, v) in c.iter_mut().enumerate() {
                let m = mi as f64 - DEFAULT_M_MAX as f64;
                *v *= Complex64::from_polar(1.0, m * tau);
            }
        }
        let w0 = renormalized_energy(&traj, eps).unwrap();
        let w1 = renormalized_energy(&shifted, eps).unwrap();
        assert!((w0 - w1).abs() <= 1e-12 * w0.abs().max(1.0));
    }

    #[test]
    fn energy_converges_spectrally_in_collocation() {
        // doubling the mode budget of an analytic trajectory leaves the
        // energy unchanged to machine precision
        let eps = 0.1f64;
        let mut traj = FilamentTrajectory::polygon(2).unwrap();
        // analytic wiggle on top of the orbit
        for (k, c) in traj.coeffs.iter_mut().enumerate() {
            let s = if k == 0 { 0.05 } else { -0.05 };
            c[DEFAULT_M_MAX + 2] = Complex64::new(s, 0.02);
        }
        let w0 = renormalized_energy(&traj, eps).unwrap();
        let mut fine = traj.clone();
        fine.m_max = 2 * DEFAULT_M_MAX;
        for c in &mut fine.coeffs {
            let mut big = vec![Complex64::new(0.0, 0.0); 2 * fine.m_max + 1];
            for (mi, &v) in c.iter().enumerate() {
                big[mi + DEFAULT_M_MAX] = v;
            }
            *c = big;
        }
        let w1 = renormalized_energy(&fine, eps).unwrap();
        assert!((w0 - w1).abs() <= 1e-12, "{w0} vs {w1}");
    }

    #[test]
    fn collision_is_an_error() {
        let mut traj = FilamentTrajectory::polygon(2).unwrap();
        for c in &mut traj.coeffs {
            for v in c.iter_mut() {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        assert!(matches!(
            ode_residual(&traj),
            Err(GlError::Geometry(_))
        ));
    }

    #[test]
    fn gradient_matches_fd_in_random_directions() {
        let np = COLLOCATION_POINTS;
        let traj = {
            let mut t = FilamentTrajectory::polygon(3).unwrap();
            // move off the equilibrium so the gradient is nonzero
            t.coeffs[0][DEFAULT_M_MAX + 1] *= 1.1;
            t.coeffs[1][DEFAULT_M_MAX - 1] += Complex64::new(0.08, 0.0);
            t
        };
        let samples = sample_all(&traj, np);
        let (grad, weight) = energy_gradient(&traj, np);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let dir: Vec<Vec<Complex64>> = (0..traj.n_curves())
                .map(|_| {
                    (0..np)
                        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect()
                })
                .collect();
            // step chosen at the truncation/roundoff balance of the central
            // difference on an O(10) energy
            let de = 3e-5;
            let perturb = |sign: f64| -> f64 {
                let moved: Vec<Vec<Complex64>> = samples
                    .iter()
                    .zip(&dir)
                    .map(|(row, drow)| {
                        row.iter()
                            .zip(drow)
                            .map(|(v, d)| v + sign * de * d)
                            .collect()
                    })
                    .collect();
                energy_rescaled(&traj, &moved)
            };
            let fd = (perturb(1.0) - perturb(-1.0)) / (2.0 * de);
            let mut inner = 0.0;
            for k in 0..traj.n_curves() {
                for i in 0..np {
                    inner += grad[k][i].re * dir[k][i].re + grad[k][i].im * dir[k][i].im;
                }
            }
            let analytic = weight * inner;
            assert!(
                (fd - analytic).abs() <= 1e-8 * (1.0 + fd.abs()),
                "directional derivative {fd} vs π-weighted residual {analytic}"
            );
        }
    }

    #[test]
    fn critical_point_search_recovers_polygon() {
        let exact = FilamentTrajectory::polygon(3).unwrap();
        let mut initial = exact.clone();
        for c in &mut initial.coeffs {
            for v in c.iter_mut() {
                *v *= 1.05;
            }
        }
        let cp = find_critical_point(&initial, 1e-11).unwrap();
        assert!(cp.converged, "residual {}", cp.residual);
        // up to gauge the orbit is the rotating triangle: ring radius √2 and
        // zero centroid at every collocation point
        let np = COLLOCATION_POINTS;
        let samples = sample_all(&cp.trajectory, np);
        for i in 0..np {
            let centroid: Complex64 =
                (0..3).map(|k| samples[k][i]).sum::<Complex64>() / 3.0;
            assert!(centroid.norm() <= 1e-8, "centroid {centroid}");
            for k in 0..3 {
                let r = (samples[k][i] - centroid).norm();
                assert!((r - 2.0f64.sqrt()).abs() <= 1e-8, "radius {r}");
            }
        }
    }

    #[test]
    fn exact_equilibrium_needs_no_steps() {
        let traj = FilamentTrajectory::polygon(4).unwrap();
        let cp = find_critical_point(&traj, 1e-10).unwrap();
        assert!(cp.converged);
        assert_eq!(cp.newton_steps, 0);
    }

    #[test]
    fn random_perturbation_converges_to_relative_equilibrium() {
        let exact = FilamentTrajectory::polygon(2).unwrap();
        let mut initial = exact.clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for c in &mut initial.coeffs {
            for (mi, v) in c.iter_mut().enumerate() {
                let m = mi as i64 - DEFAULT_M_MAX as i64;
                if m.abs() <= 3 {
                    *v += 0.1
                        * Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
        }
        let cp = find_critical_point(&initial, 1e-10).unwrap();
        assert!(cp.converged, "residual {}", cp.residual);
        // relative equilibrium: |f1 − f2| constant in t
        let np = COLLOCATION_POINTS;
        let s = sample_all(&cp.trajectory, np);
        let d0 = (s[0][0] - s[1][0]).norm();
        for i in 0..np {
            let d = (s[0][i] - s[1][i]).norm();
            assert!((d - d0).abs() <= 1e-6, "separation drift {} at {i}", (d - d0).abs());
        }
    }
}
