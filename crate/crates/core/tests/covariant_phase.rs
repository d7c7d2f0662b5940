use approx::assert_abs_diff_eq;
use qcomb::covariant::*;
use qcomb::sdp::{solve, SolveOptions};

#[test]
fn phase_channel_matches_tridiagonal_optimum() {
    let opts = SolveOptions::default();
    for d in 2..=5 {
        let grid = minimal_d_grid(d);
        let p = phase_problem::<f64>(d, grid).unwrap();
        let sol = solve(&p, &opts).unwrap();
        let o = phase_estimation_optimum(d).unwrap();
        let c = 2.0 * (1.0 - sol.gamma());
        assert!((c - o.c_min).abs() <= 1e-6, "d = {d}: {c} vs {}", o.c_min);
        let act = phase_action::<f64>(d, grid, PHASE_OUT).unwrap();
        let cov = covariant_gamma(&p, &act, &opts).unwrap();
        assert!((cov.gamma() - sol.gamma()).abs() <= 1e-6 * sol.gamma().abs().max(1.0));
        assert_abs_diff_eq!(cov.gamma_max * cov.q_max, cov.gamma_0, epsilon = 1e-9);
    }
}

#[test]
fn two_phase_optimum_and_input() {
    let opts = SolveOptions::default();
    for &pp in &[0.0, 0.3, 0.5, 0.8, 1.0] {
        let p = two_phase_problem::<f64>(pp, 8).unwrap();
        let t0 = std::time::Instant::now();
        let sol = solve(&p, &opts).unwrap();
        let cf = two_phase_correlated(pp).unwrap();
        eprintln!("p={pp} gamma={} cf={} iters={} {:?}", sol.gamma(), cf.gamma, sol.iterations, t0.elapsed());
        assert!((sol.gamma() - cf.gamma).abs() <= 1e-6);
        let ov = input_population_overlap(&sol.tester, &cf.state).unwrap();
        eprintln!("  overlap {ov}");
        if !cf.degenerate {
            assert!(ov >= 1.0 - 1e-4);
        }
    }
}
