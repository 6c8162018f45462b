//! End-to-end runs through several modules at once.

use newton_rays::angle::Angle;
use newton_rays::bottcher::chart_at_root;
use newton_rays::classify::{classify_per2, label_components, PixelTarget, Region, TypeLabel};
use newton_rays::curves::separable_check;
use newton_rays::degeneration::{
    convergence_experiment, family_limit, make_family, ComponentPath, FamilyKind, FamilySpec, GammaSpec, Tolerances,
};
use newton_rays::graph::{graph_iso, newton_graph, superattracting_roots};
use newton_rays::newton::{newton_from_poly, MapJson, MapRep};
use newton_rays::poly::Poly;
use newton_rays::rays::{trace_ray, RayOptions};
use newton_rays::render::{render_dynamical, OVERLAY};
use newton_rays::sphere::sphere_dist;
use num_complex::Complex64;

fn per2(re: f64, im: f64) -> MapRep {
    make_family(&FamilySpec::new(FamilyKind::Per2Slice, Complex64::new(re, im))).unwrap()
}

#[test]
fn json_round_trip_keeps_ray_landings() {
    let m = newton_from_poly(&Poly::from_real(&[1.0, 0.0, -0.5, 1.0 / 3.0])).unwrap();
    let text = serde_json::to_string(&m.to_json(&[])).unwrap();
    let back = MapRep::from_json(&serde_json::from_str::<MapJson>(&text).unwrap()).unwrap();
    let a = Angle::new(1, 3).unwrap();
    for (r, s) in superattracting_roots(&m).unwrap().into_iter().zip(superattracting_roots(&back).unwrap()) {
        let p = trace_ray(&chart_at_root(&m, r).unwrap(), a, &RayOptions::default()).unwrap();
        let q = trace_ray(&chart_at_root(&back, s).unwrap(), a, &RayOptions::default()).unwrap();
        let d = sphere_dist(p.certificate().unwrap().point, q.certificate().unwrap().point);
        assert!(d < 1e-12, "{d}");
    }
}

#[test]
fn perturbed_cubic_fixed_rays_converge_at_rate_one_over_n() {
    let kind = FamilyKind::CubicPerturb;
    let sweep: Vec<FamilySpec> = [10.0, 100.0, 1000.0].iter().map(|&n| FamilySpec::new(kind.clone(), n)).collect();
    let gamma = GammaSpec {
        components: (0..3).map(|root| ComponentPath { root, pullbacks: vec![] }).collect(),
        angles: vec![Angle::ZERO],
    };
    let rep = convergence_experiment(&sweep, &family_limit(&kind).unwrap(), &gamma, Tolerances::default()).unwrap();
    assert!(rep.strictly_decreasing);
    assert!(rep.rows.iter().all(|r| r.iso == Some(true)));
    for w in rep.rows.windows(2) {
        let ratio = w[0].d_h / w[1].d_h;
        assert!((5.0..20.0).contains(&ratio), "{ratio}");
    }
}

#[test]
fn newton_graph_is_rotation_invariant_as_a_graph() {
    let m = newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 0.0, 1.0])).unwrap();
    let g = newton_graph(&m, 1).unwrap();
    let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let rotated = g.map_points(|p| p.finite().map(|z| (z * w).into()).unwrap_or(p), |s| s.to_string());
    assert!(graph_iso(&g, &rotated).unwrap());
}

#[test]
fn second_attracting_cycle_shows_in_the_dynamical_plane() {
    // a parameter of type D: the free critical point has its own cycle
    assert_eq!(classify_per2(Complex64::new(0.08, 0.38), 500), TypeLabel::D);
    let m = per2(0.08, 0.38);
    let region = Region::square(Complex64::new(0.5, 0.0), 3.0).unwrap();
    let grid = label_components(&m, region, (96, 96), 300).unwrap();
    assert_eq!(grid.cycles.len(), 2);
    for (id, c) in grid.cycles.iter().enumerate() {
        let hits = grid.labels.iter().filter(|l| matches!(l.target, PixelTarget::Cycle { id: i, .. } if i == id)).count();
        assert!(hits > 0, "cycle {id} of period {} has no pixels", c.period);
    }
}

#[test]
fn basin_render_with_level_one_overlay() {
    let m = newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 0.0, 1.0])).unwrap();
    let g = newton_graph(&m, 1).unwrap();
    let region = Region::square(Complex64::new(0.0, 0.0), 2.0).unwrap();
    let (img, grid) = render_dynamical(&m, region, (81, 81), &[g], 100).unwrap();
    // the pole sits at the centre pixel and is drawn over
    assert_eq!(img.get(40, 40), OVERLAY);
    assert_eq!(grid.root_points.len(), 3);
}

#[test]
fn pole_separation_depends_on_the_parameter() {
    assert!(separable_check(&per2(2.0, 0.0)).unwrap());
    assert!(separable_check(&per2(1.5, 0.5)).unwrap());
    assert!(!separable_check(&per2(-1.5, 1.0)).unwrap());
    assert!(!separable_check(&per2(-2.0, 0.0)).unwrap());
}
