mod common;

use omegasym::cubes::build_lattice;
use omegasym::symmetry::{
    self, B121Convention, CubeFrame, DefectConfig, Functional, SymmetryReport,
};
use omegasym::{synth, Execution, OmegaMap, Point2};

use common::kernel_suite;

#[test]
fn t_pairings_stay_positive_on_graphs() {
    let mu = synth::lipschitz_graph(0.01, 1.0, 10.0, 1e-3).unwrap();
    let lat = build_lattice(&mu, 4, 4).unwrap();
    for om in kernel_suite() {
        for q in lat.level_cubes(4).filter(|q| q.center.norm() < 2.5) {
            let f = CubeFrame::from_cube(&mu, &om, q, 16.0).unwrap();
            let t = symmetry::t_pairings(&mu, &om, &f).unwrap();
            assert!(t.scaled_normal() >= 1.0, "cube {}: {}", q.id, t.scaled_normal());
            assert!(t.scaled_omega() >= 1.0, "cube {}: {}", q.id, t.scaled_omega());
            assert!(t.spherical_normal.abs() <= 1e-10);
        }
    }
}

#[test]
fn display_convention_halves_the_cutoff_term() {
    let mu = synth::perturbed_line(10.0, 1e-3, 0.002, 9).unwrap();
    let lat = build_lattice(&mu, 4, 4).unwrap();
    let om = OmegaMap::sine(0.01).unwrap();
    let q = lat.level_cubes(4).find(|q| q.center.norm() < 0.5).unwrap();
    let f = CubeFrame::from_cube(&mu, &om, q, 16.0).unwrap();
    let half = f.with_convention(B121Convention::Display);
    let x = Point2::new(0.3, -0.7);
    let full = symmetry::b121_term(&mu, &om, &f, x).unwrap();
    let disp = symmetry::b121_term(&mu, &om, &half, x).unwrap();
    assert!(full.dist(disp * 2.0) <= 1e-12 * (1.0 + full.norm()));
}

#[test]
fn error_bound_fit_on_a_graph() {
    let mu = synth::lipschitz_graph(0.05, 1.0, 10.0, 1e-3).unwrap();
    let lat = build_lattice(&mu, 4, 4).unwrap();
    let mut worst = 0.0f64;
    for om in kernel_suite() {
        for q in lat.level_cubes(4).filter(|q| q.center.norm() < 2.5) {
            let f = CubeFrame::from_cube(&mu, &om, q, 16.0).unwrap();
            worst = worst.max(symmetry::e_bound(&mu, &om, &f).unwrap().ratio());
        }
    }
    assert!(worst > 0.0 && worst <= 100.0, "fitted constant {worst}");
}

#[test]
fn middle_of_equidistant_lines_is_symmetric() {
    let h = 1e-3;
    let mu = synth::equidistant_lines(5, 1.0, 10.0, h).unwrap();
    let mut cfg = DefectConfig::new(20, 0.1, 1.0, 5);
    cfg.center_region = Some((Point2::ORIGIN, 0.5));
    cfg.riesz_outer = Some(2.0);
    let om = OmegaMap::sine(0.01).unwrap();
    for f in [Functional::COmega, Functional::COmegaSmooth, Functional::Riesz] {
        let rep = symmetry::defect_report(&mu, &om, &cfg, f, Execution::Parallel).unwrap();
        assert!(rep.sup_norm <= 5.0 * h / 0.1, "{}: {}", f.name(), rep.sup_norm);
        assert!(rep.centers.iter().all(|c| c.y.abs() < 1e-12));
    }
}

#[test]
fn principal_values_settle_on_a_line() {
    let mu = synth::line(Point2::ORIGIN, 0.4, 10.0, 1e-3).unwrap();
    let om = OmegaMap::sine(0.01).unwrap();
    let eps: Vec<f64> = (1..=8).map(|k| 0.5f64.powi(k)).collect();
    let pv = symmetry::pv_profile(&mu, &om, mu.point(mu.len() / 2), &eps, 2.0).unwrap();
    assert!(pv.values.iter().all(|v| v.norm() <= 1e-9));
    assert!(pv.max_step <= 1e-9);
}

#[test]
fn reports_round_trip() {
    let mu = synth::circle(Point2::ORIGIN, 1.0, 1e-3).unwrap();
    let cfg = DefectConfig::new(5, 0.1, 0.5, 3);
    let rep = symmetry::defect_report(&mu, &OmegaMap::identity(), &cfg, Functional::COmega, Execution::Sequential).unwrap();
    let back: SymmetryReport = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(back, rep);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("defect.csv");
    rep.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["center_x", "center_y", "r", "value_x", "value_y", "norm"]
    );
    let norms: Vec<f64> = reader.records().map(|r| r.unwrap()[5].parse().unwrap()).collect();
    assert_eq!(norms.len(), 15);
    let sup = norms.iter().copied().fold(0.0, f64::max);
    assert!((sup - rep.sup_norm).abs() <= 1e-12);
}
