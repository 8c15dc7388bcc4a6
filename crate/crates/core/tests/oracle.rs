mod common;

use std::f64::consts::PI;

use common::*;
use fiberwave_core::helmholtz::{self, junction_matrix, Incident, NetworkOracle};
use fiberwave_core::solver;
use fiberwave_core::*;

/// `sum kappa |t|^2 - kappa_in` over all columns, largest in magnitude.
fn flux_residual(jm: &JunctionMatrix) -> f64 {
    let d: Vec<f64> = jm.thresholds.iter().map(|t| (jm.lambda - t).sqrt()).collect();
    let m = jm.matrix.nrows();
    (0..m)
        .map(|c| {
            let out: f64 = (0..m).map(|r| d[r] * jm.matrix[(r, c)].norm_sqr()).sum();
            (out - d[c]).abs()
        })
        .fold(0.0, f64::max)
}

fn ratios(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| w[0] / w[1]).collect()
}

#[test]
fn duct_transmission_converges_at_second_order() {
    let lambda = 2.0;
    let kappa = (lambda - 1.0f64).sqrt();
    let exact = C64::from_polar(1.0, kappa * PI);
    let errors: Vec<f64> = [32.0, 64.0, 128.0]
        .iter()
        .map(|n| {
            let jm = junction_matrix(&PlanarGeometry::straight_duct(PI, PI, PI / n), lambda).unwrap();
            assert!(jm.matrix[(0, 0)].norm() < 1e-2);
            (jm.matrix[(1, 0)] - exact).norm()
        })
        .collect();
    assert!(errors[1] <= 1e-2);
    for r in ratios(&errors) {
        assert!((3.0..=5.0).contains(&r), "{errors:?}");
    }
}

#[test]
fn cross_is_four_fold_symmetric() {
    let jm = junction_matrix(&PlanarGeometry::cross(PI, PI / 16.0), 2.0).unwrap();
    let t = &jm.matrix;
    assert_eq!(t.nrows(), 4);
    // stubs -x, +x, -y, +y
    let reflect = t[(0, 0)];
    let straight = t[(1, 0)];
    let turn = t[(2, 0)];
    for i in 0..4 {
        assert!((t[(i, i)] - reflect).norm() < 1e-10);
    }
    assert!((t[(3, 2)] - straight).norm() < 1e-10);
    for (r, c) in [(3, 0), (2, 1), (3, 1), (0, 2), (1, 3)] {
        assert!((t[(r, c)] - turn).norm() < 1e-10);
    }
    let (u, s) = unitarity_defects(&jm.symmetrized());
    assert!(u < 1e-2 && s < 1e-10, "{u:e} {s:e}");
}

#[test]
fn flux_and_reciprocity_converge_at_second_order() {
    // two propagating modes per stub, so the continuum weights differ from the discrete ones
    let lambda = 5.0;
    let base = PlanarGeometry::cross(PI, PI / 16.0);
    let mut flux = Vec::new();
    let mut recip = Vec::new();
    for n in [16.0, 32.0, 64.0] {
        let jm = junction_matrix(&base.with_h(PI / n), lambda).unwrap();
        assert_eq!(jm.matrix.nrows(), 8);
        flux.push(flux_residual(&jm));
        let (_, s) = unitarity_defects(&jm.symmetrized());
        recip.push(s);
    }
    for r in ratios(&flux) {
        assert!((3.0..=5.0).contains(&r), "flux {flux:?}");
    }
    for (s, f) in recip.iter().zip(&flux) {
        assert!(*s <= 10.0 * f.max(1e-12), "reciprocity {recip:?} vs flux {flux:?}");
    }
}

#[test]
fn richardson_error_is_second_order() {
    let lambda = 2.0;
    let base = PlanarGeometry::bend(PI, PI / 16.0);
    let t: Vec<CMatrix> = [16.0, 32.0, 64.0]
        .iter()
        .map(|n| junction_matrix(&base.with_h(PI / n), lambda).unwrap().matrix)
        .collect();
    let richardson = (&t[2].scale(C64::new(4.0 / 3.0, 0.0))) - &t[1].scale(C64::new(1.0 / 3.0, 0.0));
    let e0 = (&t[0] - &richardson).norm_max();
    let e1 = (&t[1] - &richardson).norm_max();
    // with an exact h^2 law, e(h) / e(h/2) = (1 - 1/16) / (1/4 - 1/16) = 5
    let r = e0 / e1;
    assert!((4.0..=6.0).contains(&r), "{e0:e} {e1:e}");
}

#[test]
fn stub_margin_is_insensitive() {
    let g = PlanarGeometry::cross(PI, PI / 16.0);
    let a = junction_matrix(&g, 2.0).unwrap();
    let b = junction_matrix(&g.with_stub_lengths_scaled(2.0), 2.0).unwrap();
    assert!((&a.matrix - &b.matrix).norm_max() <= 1e-6);
}

#[test]
fn evanescent_count_is_insensitive() {
    let g = PlanarGeometry::cross(PI, PI / 16.0);
    let a = junction_matrix(&g, 2.0).unwrap();
    let b = junction_matrix(&g.with_evanescent_modes(16), 2.0).unwrap();
    assert!((&a.matrix - &b.matrix).norm_max() <= 1e-8);
}

#[test]
fn junction_matrix_is_deterministic() {
    let g = PlanarGeometry::bend(PI, PI / 16.0);
    let a = junction_matrix(&g, 3.0).unwrap();
    let b = junction_matrix(&g, 3.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_incident_matches_matrix_column() {
    let g = PlanarGeometry::cross(PI, PI / 16.0);
    let jm = junction_matrix(&g, 2.0).unwrap();
    let (field, amps) = helmholtz::solve_junction_scattering(&g, 2.0, Incident::unit(2, 0)).unwrap();
    let col = amps.flatten();
    for (r, v) in col.iter().enumerate() {
        assert!((v - jm.matrix[(r, 2)]).norm() < 1e-12);
    }
    assert!(field.max_abs() > 0.1);
    // the first evanescent mode has decayed by e^{-sqrt(4 - 2) w} at the extraction line
    let decay = (-(2.0f64).sqrt() * PI).exp();
    for s in &amps.stubs {
        assert!(s.evanescent_tail <= decay);
    }
}

#[test]
fn bad_incident_is_rejected() {
    let g = PlanarGeometry::cross(PI, PI / 16.0);
    assert!(helmholtz::solve_junction_scattering(&g, 2.0, Incident::unit(4, 0)).is_err());
    assert!(helmholtz::solve_junction_scattering(&g, 2.0, Incident::unit(0, 1)).is_err());
}

#[test]
fn duct_network_matches_graph() {
    let h = PI / 32.0;
    let duct = PlanarGeometry::straight_duct(PI, 0.0, h);
    let g = planar_pair(&duct, 1, &duct, 0, PI);
    let (lambda, eps) = (2.0, 0.5);
    let o = NetworkOracle::new(&g, lambda, eps).unwrap();
    let to = o.scattering_matrix().unwrap();
    let (_, ns) = solver::solve_scattering(&g, &SolveRequest::all(lambda, eps)).unwrap();
    assert!((&to - &ns.t).norm_max() < 2e-2);
}

#[test]
fn bend_pair_error_shrinks_with_eps() {
    let h = PI / 32.0;
    let a = PlanarGeometry::bend(PI, h);
    let mut b = a.clone();
    // mirror image of the first bend, so its +x stub faces the first bend's -x stub
    b.stubs[0].direction = Direction::PlusX;
    b.stubs[0].origin = [PI, 0.0];
    let g = planar_pair(&a, 0, &b, 0, PI / 4.0);
    let lambda = 2.0;
    let mut errors = Vec::new();
    for eps in [1.0, 0.5, 0.25] {
        let o = NetworkOracle::new(&g, lambda, eps).unwrap();
        let to = o.scattering_matrix().unwrap();
        let (_, ns) = solver::solve_scattering(&g, &SolveRequest::all(lambda, eps)).unwrap();
        errors.push((&to - &ns.t).norm_max());
    }
    assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
}
