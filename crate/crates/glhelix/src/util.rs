//! Small shared numerics: cutoff profiles, quadrature, deterministic
//! parallelism helpers.

use once_cell::sync::Lazy;

/// Quintic smoothstep on [0,1]: s(0)=0, s(1)=1, with s' = s'' = 0 at both ends.
fn smooth5(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

/// C² monotone cutoff: 1 for t ≤ 1, 0 for t ≥ 2.
pub fn eta1(t: f64) -> f64 {
    1.0 - smooth5(t - 1.0)
}

/// Shifted variant used for the operator blending: 1 for t ≤ 2, 0 for t ≥ 3.
pub fn eta1_shift(t: f64) -> f64 {
    eta1(t - 1.0)
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec(
        f: &dyn Fn(f64) -> f64,
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
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 40)
}

/// Composite trapezoid on n+1 equispaced nodes of [a,b].
pub fn trapezoid(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + i as f64 * h);
    }
    s * h
}

/// Least-squares slope of y ≈ m·x through the origin.
pub fn ls_slope_through_origin(xs: &[f64], ys: &[f64]) -> f64 {
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let den: f64 = xs.iter().map(|x| x * x).sum();
    num / den
}

/// Convergence order from errors at h and h/2.
pub fn measured_order(err_h: f64, err_h2: f64) -> f64 {
    (err_h / err_h2).ln() / std::f64::consts::LN_2
}

static POOL: Lazy<rayon::ThreadPool> = Lazy::new(|| {
    let threads = std::env::var("GLHELIX_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
});

/// Run `op` on the process-wide pool (size capped by GLHELIX_THREADS).
pub fn with_pool<R: Send>(op: impl FnOnce() -> R + Send) -> R {
    POOL.install(op)
}

/// Deterministic parallel map over row indices: results are collected in row
/// order regardless of scheduling.
pub fn par_rows<T: Send>(n_rows: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    with_pool(|| (0..n_rows).into_par_iter().map(|j| f(j)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta1_support_and_monotonicity() {
        assert_eq!(eta1(0.5), 1.0);
        assert_eq!(eta1(1.0), 1.0);
        assert_eq!(eta1(2.0), 0.0);
        assert_eq!(eta1(3.0), 0.0);
        let mut prev = eta1(1.0);
        for i in and_steps() {
            let v = eta1(i);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    fn and_steps() -> Vec<f64> {
        (0..=100).map(|i| 1.0 + i as f64 * 0.01).collect()
    }

    #[test]
    fn eta1_is_c2_at_junctions() {
        // second differences stay bounded through t = 1 and t = 2
        let h = 1e-4;
        for t0 in [1.0, 2.0] {
            let d2 = (eta1(t0 + h) - 2.0 * eta1(t0) + eta1(t0 - h)) / (h * h);
            assert!(d2.abs() < 1.0, "d2 = {d2}");
        }
    }

    #[test]
    fn simpson_integrates_smooth_function() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
    }
}
