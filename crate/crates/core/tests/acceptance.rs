//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines come out in order; exits non-zero on any FAIL.

use newton_rays::angle::Angle;
use newton_rays::bottcher::chart_at_root;
use newton_rays::classify::{classify_grid, Region, TypeLabel};
use newton_rays::curves::{coland_residual, densified_curve, self_crossings, CubicSetting};
use newton_rays::degeneration::{
    convergence_experiment, critical_escape_check, family_limit, limit_graph, make_family, measure_parameter,
    ComponentPath, FamilyKind, FamilySpec, GammaSpec, Tolerances,
};
use newton_rays::graph::{directed_hausdorff, level_angles, newton_graph, superattracting_roots, DELTA_S};
use newton_rays::newton::{newton_from_poly, newton_from_source, MapRep, NewtonSource};
use newton_rays::poly::Poly;
use newton_rays::rays::{trace_ray, RayOptions};
use newton_rays::render::render_parameter;
use newton_rays::sphere::{sphere_dist, Finite, Infinity, SpherePoint};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

type Outcome = (bool, String);

fn poly(c: &[f64]) -> MapRep {
    newton_from_poly(&Poly::from_real(c)).unwrap()
}

fn z3m1() -> MapRep {
    poly(&[-1.0, 0.0, 0.0, 1.0])
}

fn figure_cubic() -> MapRep {
    poly(&[1.0, 0.0, -0.5, 1.0 / 3.0])
}

fn random_per2(rng: &mut ChaCha8Rng, n: usize) -> Vec<(Complex64, MapRep)> {
    let mut out = Vec::new();
    while out.len() < n {
        let c = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if let Ok(m) = make_family(&FamilySpec::new(FamilyKind::Per2Slice, c)) {
            out.push((c, m));
        }
    }
    out
}

fn oracle_z2m1() -> Outcome {
    let t = Instant::now();
    let m = poly(&[-1.0, 0.0, 1.0]);
    let ch = chart_at_root(&m, SpherePoint::new(1.0, 0.0)).unwrap();
    let mut sup: f64 = 0.0;
    for i in 0..=9 {
        let r = 0.1 * i as f64;
        for k in 0..24 {
            let w = Complex64::from_polar(r, 2.0 * PI * (k as f64 + 0.25) / 24.0);
            let err = match ch.psi(w) {
                Ok(Finite(z)) => ((z - 1.0) / (z + 1.0) - w).norm(),
                _ => f64::INFINITY,
            };
            sup = sup.max(err);
        }
    }
    let ray = trace_ray(&ch, Angle::HALF, &RayOptions::default()).unwrap();
    let land = ray.certificate().map(|c| sphere_dist(c.point, SpherePoint::new(0.0, 0.0))).unwrap_or(f64::INFINITY);
    let secs = t.elapsed().as_secs_f64();
    (
        sup < 1e-9 && land < 1e-8 && secs < 1.0,
        format!("sup|M(ψ(w)) - w| = {sup:.2e} on |w| ≤ 0.9, 1/2-ray lands {land:.2e} from 0, {secs:.2}s"),
    )
}

fn conjugacy() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut maps: Vec<(String, MapRep)> = vec![("z^3-1".into(), z3m1()), ("figure cubic".into(), figure_cubic())];
    for (c, m) in random_per2(&mut rng, 5) {
        maps.push((format!("per2 c={c:.3}"), m));
    }
    let mut worst: (f64, String) = (0.0, String::new());
    let mut charts = 0;
    for (name, m) in &maps {
        for r in superattracting_roots(m).unwrap() {
            let ch = chart_at_root(m, r).unwrap();
            charts += 1;
            let d = ch.local_degree as i32;
            // annulus 0.3ρ ≤ |w| ≤ 0.9ρ in the trusted disk
            for i in 0..4 {
                let rad = ch.rho_loc * (0.3 + 0.2 * i as f64);
                for k in 0..32 {
                    let w = Complex64::from_polar(rad, 2.0 * PI * (k as f64 + 0.5) / 32.0);
                    let z = ch.psi_loc(w).0;
                    let err = match (ch.phi_loc(z), m.eval(Finite(z))) {
                        (Some(pz), Finite(fz)) => match ch.phi_loc(fz) {
                            Some(pfz) => (pfz - pz.powi(d)).norm(),
                            None => f64::INFINITY,
                        },
                        _ => f64::INFINITY,
                    };
                    if err > worst.0 {
                        worst = (err, name.clone());
                    }
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    (
        worst.0 < 1e-9 && secs < 10.0,
        format!("{charts} charts, worst |φ(f z) - φ(z)^d| = {:.2e} ({}), {secs:.2}s", worst.0, worst.1),
    )
}

fn multipliers() -> Outcome {
    let m = newton_from_source(&NewtonSource::new(vec![(Complex64::new(0.0, 0.0), 3), (Complex64::new(1.0, 0.0), 1)]).unwrap())
        .unwrap();
    let at0 = m
        .fixed_points()
        .unwrap()
        .into_iter()
        .find(|f| sphere_dist(f.point, SpherePoint::new(0.0, 0.0)) < 1e-9)
        .map(|f| (f.multiplier - 2.0 / 3.0).norm())
        .unwrap_or(f64::INFINITY);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut simple = vec![z3m1(), figure_cubic(), poly(&[-1.0, 0.0, 1.0])];
    simple.extend(random_per2(&mut rng, 5).into_iter().map(|p| p.1));
    let mut worst: f64 = 0.0;
    for m in &simple {
        for (r, _) in &m.source.as_ref().unwrap().roots {
            worst = worst.max(m.deriv(*r).norm());
        }
    }
    (
        at0 < 1e-10 && worst < 1e-10,
        format!("|λ(0) - 2/3| = {at0:.2e}; max |λ| at simple roots over {} maps = {worst:.2e}", simple.len()),
    )
}

fn fixed_rays() -> Outcome {
    let mut worst_est: f64 = 0.0;
    let mut exact = true;
    let mut n = 0;
    for m in [z3m1(), figure_cubic()] {
        for r in superattracting_roots(&m).unwrap() {
            let ch = chart_at_root(&m, r).unwrap();
            for a in level_angles(ch.local_degree, 0) {
                n += 1;
                let rough = trace_ray(&ch, a, &RayOptions { refine: false, ..RayOptions::default() }).unwrap();
                worst_est = worst_est.max(rough.landing_point().map(|p| sphere_dist(p, Infinity)).unwrap_or(f64::INFINITY));
                let fine = trace_ray(&ch, a, &RayOptions::default()).unwrap();
                exact &= fine.certificate().is_some_and(|c| c.point == Infinity);
            }
        }
    }
    (worst_est < 1e-4 && exact, format!("{n} fixed rays, estimate within {worst_est:.2e} of ∞, refined exactly ∞: {exact}"))
}

fn graph_growth() -> Outcome {
    let m = z3m1();
    let g0 = newton_graph(&m, 0).unwrap();
    let g1 = newton_graph(&m, 1).unwrap();
    let pole = g1.vertices.iter().any(|v| sphere_dist(v.point, SpherePoint::new(0.0, 0.0)) < 1e-9);
    let h = directed_hausdorff(&g0.cloud(DELTA_S), &g1.cloud(DELTA_S));
    (pole && h < DELTA_S, format!("pole 0 is a vertex of Δ₁: {pole}; one-sided Hausdorff Δ₀→Δ₁ = {h:.2e}"))
}

fn theorem_desk_scale() -> Outcome {
    let t = Instant::now();
    let kind = FamilyKind::cube_roots_of_unity();
    let sweep: Vec<FamilySpec> = [1e2, 1e3, 1e4].iter().map(|&r| FamilySpec::new(kind.clone(), r)).collect();
    let limit = family_limit(&kind).unwrap();
    let gamma = GammaSpec {
        components: (0..3).map(|root| ComponentPath { root, pullbacks: vec![] }).collect(),
        angles: vec![Angle::ZERO, Angle::HALF],
    };
    let verdict = match convergence_experiment(&sweep, &limit, &gamma, Tolerances::default()) {
        Ok(rep) => {
            let iso = rep.rows.iter().all(|r| r.iso == Some(true));
            let last = rep.rows.last().map(|r| r.d_h).unwrap_or(f64::INFINITY);
            let ok = iso && rep.strictly_decreasing && last < 0.05;
            let d: Vec<String> = rep.rows.iter().map(|r| format!("{:.3e}", r.d_h)).collect();
            (ok, format!("iso all: {iso}, d_H = [{}]", d.join(", ")))
        }
        Err(e) => (false, format!("experiment aborted: {e}")),
    };
    // raw measurements without the limit checks, for the record
    let mut raw = Vec::new();
    if let Ok((ws, g)) = limit_graph(&limit, &gamma) {
        for s in &sweep {
            let m = make_family(s).unwrap();
            raw.push(match measure_parameter(&limit, &ws, &g, &gamma, &m, s.param) {
                Ok((row, _)) => format!("R={}: d_H={:.3e} iso={:?}", s.param.re, row.d_h, row.iso),
                Err(e) => format!("R={}: {e}", s.param.re),
            });
        }
    }
    let secs = t.elapsed().as_secs_f64();
    (verdict.0 && secs < 120.0, format!("{}; raw: {}; {secs:.1}s", verdict.1, raw.join("; ")))
}

fn critical_escape() -> Outcome {
    let s = [FamilySpec::new(FamilyKind::cube_roots_of_unity(), 1e4)];
    match critical_escape_check(&s, 2, 0.1) {
        Ok(v) => (v.iter().all(|r| r.1), "R = 1e4, k = 2, ε = 0.1".into()),
        Err(e) => (false, e.to_string()),
    }
}

fn cut_angle_scan() -> Outcome {
    let s = CubicSetting::new(&figure_cubic()).unwrap();
    let set = s.cut_angles(256).unwrap();
    let ends = set.contains(Angle::ZERO) && set.contains(Angle::HALF);
    let alpha = set.alpha_estimate;
    let alpha_ok = alpha > Angle::ZERO && alpha < Angle::HALF;
    let theta_n = (2..=8u32).find(|&n| {
        let q = (1u64 << n) - 1;
        set.contains(Angle::new(q - 1, q).unwrap())
    });
    let mut checked = vec![Angle::ZERO, Angle::HALF, alpha];
    if let Some(n) = theta_n {
        let q = (1u64 << n) - 1;
        checked.push(Angle::new(q - 1, q).unwrap());
    }
    let worst = checked
        .iter()
        .map(|&a| coland_residual(&s.ws, "O1", "O2", a).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    (
        ends && alpha_ok && theta_n.is_some() && worst < 1e-6,
        format!(
            "{} members, α ≈ {alpha}, first θ_n at n = {theta_n:?}, co-landing residual ≤ {worst:.2e}",
            set.members.len()
        ),
    )
}

fn curve_c() -> Outcome {
    let mut s = CubicSetting::new(&figure_cubic()).unwrap();
    let set = s.cut_angles(256).unwrap();
    let Some((t, k)) = s.choose_theta(&set) else {
        return (false, "no admissible θ".into());
    };
    let g = match s.c_curve(t, k) {
        Ok(g) => g,
        Err(e) => return (false, format!("θ = {t}: {e}")),
    };
    let cycle = g.is_single_cycle();
    let crossings = densified_curve(&g, DELTA_S).map(|c| self_crossings(&c)).unwrap_or(usize::MAX);
    let inside: Vec<bool> =
        [s.xi1, s.xi2, s.c].iter().map(|&p| CubicSetting::encloses(&g, p).unwrap_or(false)).collect();
    (
        cycle && crossings == 0 && inside.iter().all(|&b| b),
        format!("θ = {t}, k = {k}: single cycle {cycle}, {crossings} self-crossings, ξ1/ξ2/c enclosed {inside:?}"),
    )
}

fn per2_slice() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for (_, m) in random_per2(&mut rng, 100) {
        worst = worst.max(sphere_dist(m.eval(SpherePoint::new(0.0, 0.0)), SpherePoint::new(1.0, 0.0)));
        worst = worst.max(sphere_dist(m.eval(SpherePoint::new(1.0, 0.0)), SpherePoint::new(0.0, 0.0)));
    }
    let region = Region::square(Complex64::new(0.0, 0.0), 4.0).unwrap();
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let t = Instant::now();
    let (img1, grid1) = pool(1).install(|| render_parameter(region, (512, 512), 500).unwrap());
    let secs = t.elapsed().as_secs_f64();
    let (img2, grid2) = pool(2).install(|| render_parameter(region, (512, 512), 500).unwrap());
    let same = img1.to_ppm() == img2.to_ppm() && grid1.to_bytes() == grid2.to_bytes();
    let wanted = [TypeLabel::A, TypeLabel::B, TypeLabel::C, TypeLabel::D, TypeLabel::IE];
    let present: Vec<String> = wanted.iter().map(|&l| format!("{l}:{}", grid1.count(l))).collect();
    let all_present = wanted.iter().all(|&l| grid1.count(l) > 0);
    // budget doubling on the 64² probe grid
    let lo = classify_grid(region, (64, 64), 500);
    let hi = classify_grid(region, (64, 64), 1000);
    let agree = lo.iter().zip(&hi).filter(|(a, b)| a == b).count() as f64 / lo.len() as f64;
    let mut per_label = Vec::new();
    let mut stable = agree >= 0.99;
    for &l in &wanted {
        let n = lo.iter().filter(|&&x| x == l).count();
        let kept = lo.iter().zip(&hi).filter(|(a, b)| **a == l && **b == l).count();
        let frac = if n == 0 { 0.0 } else { kept as f64 / n as f64 };
        stable &= n > 0 && frac >= 0.99;
        per_label.push(format!("{l} {kept}/{n}"));
    }
    (
        worst < 1e-12 && secs < 300.0 && same && all_present && stable,
        format!(
            "identity error {worst:.1e}; 512² in {secs:.1}s; thread-count identical {same}; counts [{}]; probe agreement {:.2}% [{}]",
            present.join(" "),
            100.0 * agree,
            per_label.join(", ")
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence, Newton(z^2-1)", oracle_z2m1),
        ("conjugacy residuals", conjugacy),
        ("multiplier law", multipliers),
        ("fixed-ray landing at infinity", fixed_rays),
        ("Newton graph growth", graph_growth),
        ("graph convergence, quartic root escape", theorem_desk_scale),
        ("critical escape", critical_escape),
        ("cut angles of the figure cubic", cut_angle_scan),
        ("curve C", curve_c),
        ("period-two slice", per2_slice),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = match std::panic::catch_unwind(f) {
            Ok(r) => r,
            Err(_) => (false, "panicked".into()),
        };
        if !ok {
            failed += 1;
        }
        println!("{} criterion {:>2} ({name}): {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
