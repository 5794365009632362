use nsk_core::{mechanical_energy_pair, FluidParams, TestFunction, WeakEntropy};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn doubling_nodes_changes_smooth_entropies_by_1e8(g in 1.2f64..4.0, rho in 0.05f64..3.0, u in -1.5f64..1.5) {
        let p = FluidParams::kinetic(g, 0.0).unwrap();
        for psi in [TestFunction::HalfSquare, TestFunction::Identity, TestFunction::CompactBump { a: -0.7, b: 0.9 }] {
            let coarse = WeakEntropy::with_nodes(psi.clone(), &p, 64).unwrap().eval(rho, u);
            let fine = WeakEntropy::with_nodes(psi, &p, 128).unwrap().eval(rho, u);
            let scale = fine.eta.abs().max(fine.flux.abs()).max(1e-12);
            prop_assert!((coarse.eta - fine.eta).abs() <= 1e-8 * scale);
            prop_assert!((coarse.flux - fine.flux).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn mechanical_energy_hessian_is_psd(g in 1.1f64..5.0, rho in 0.1f64..4.0, m in -4.0f64..4.0) {
        let p = FluidParams::kinetic(g, 0.0).unwrap();
        let eta = |r: f64, q: f64| mechanical_energy_pair(r, q, &p).unwrap().eta;
        let (hr, hm) = (1e-4 * rho, 1e-4 * (1.0 + m.abs()));
        let e0 = eta(rho, m);
        let err = (eta(rho + hr, m) - 2.0 * e0 + eta(rho - hr, m)) / (hr * hr);
        let emm = (eta(rho, m + hm) - 2.0 * e0 + eta(rho, m - hm)) / (hm * hm);
        let erm = (eta(rho + hr, m + hm) - eta(rho + hr, m - hm) - eta(rho - hr, m + hm) + eta(rho - hr, m - hm))
            / (4.0 * hr * hm);
        let scale = err.abs() + emm.abs() + erm.abs();
        let tr = err + emm;
        let det = err * emm - erm * erm;
        let lo = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
        prop_assert!(lo >= -1e-8 * scale, "min eigenvalue {lo}, scale {scale}");
    }
}
