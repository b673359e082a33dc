#[test]
fn sweep_experiment() {
    use glhelix::*;
    use glhelix::norms::NormParams;
    use glhelix::reduction::*;
    let p = profile::solve_profile(40.0, 8000, 1e-10).unwrap();
    for alpha0 in [0.25, 0.5] {
        let np = NormParams { alpha0, ..NormParams::default() };
        println!("=== alpha0 = {alpha0} ===");
        for eps in [0.1, 0.05, 0.025, 0.0125] {
            let rep = solve_reduced(&p, eps, (0.2, 5.0), 1e-10, &np).unwrap();
            let rel = (rep.d_hat_root - rep.sqrt_a0_over_a1).abs() / rep.sqrt_a0_over_a1;
            let cfg = VortexConfiguration::pair(eps, 1.0);
            let (_, b1) = b0_b1(&p, &cfg, &np);
            let a1 = a1_radial(&p, eps);
            let ratio = b1 / (eps * eps.ln().abs().sqrt() * a1);
            println!("eps={eps}: root={:.4} sqrt(a0/a1)={:.4} relgap={:.4} a0={:.4} a1={:.4} B1ratio={:.3}",
                rep.d_hat_root, rep.sqrt_a0_over_a1, rel, rep.a0, rep.a1, ratio);
        }
    }
}
