//! Degenerating families of Newton maps and the graph convergence
//! experiment.

use crate::angle::Angle;
use crate::bottcher::{chart_at_preimage, chart_at_root, track_deformation, BottcherChart};
use crate::error::{Error, Result};
use crate::graph::{graph_hausdorff, graph_iso, superattracting_roots, RayGraph, RayTag, Role, Workspace};
use crate::newton::{newton_from_poly, newton_from_source, reduce_pair, DegeneratePair, Jet, MapRep, NewtonSource};
use crate::poly::{roots_of, Poly, CLUSTER_TOL};
use crate::sphere::{sphere_dist, AffineMap, Infinity, SpherePoint};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FamilyKind {
    /// `(z-a)(z-b)(z-c)(z-R)` with `R` the parameter.
    QuarticRootEscape { base: [Complex64; 3] },
    /// `z³ + z/n - 1`.
    CubicPerturb,
    /// `z⁴/12 - c z³/6 + (4c-3)z/12 + (3-4c)/12`.
    Per2Slice,
}

impl FamilyKind {
    pub fn cube_roots_of_unity() -> FamilyKind {
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        FamilyKind::QuarticRootEscape { base: [Complex64::new(1.0, 0.0), w, w * w] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub param: Complex64,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind, param: impl Into<Complex64>) -> Self {
        FamilySpec { kind, param: param.into() }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// The polynomial `P_c` of the period-two slice.
pub fn per2_poly(cp: Complex64) -> Poly {
    let k = 1.0 / 12.0;
    Poly::new(vec![(c(3.0) - 4.0 * cp) * k, (4.0 * cp - c(3.0)) * k, c(0.0), -cp / 6.0, c(k)])
}

pub fn make_family(spec: &FamilySpec) -> Result<MapRep> {
    match &spec.kind {
        FamilyKind::QuarticRootEscape { base } => {
            let mut all = base.to_vec();
            all.push(spec.param);
            for i in 0..4 {
                for j in i + 1..4 {
                    if (all[i] - all[j]).norm() <= CLUSTER_TOL * (1.0 + all[i].norm()) {
                        return Err(Error::invalid("family roots must be pairwise distinct"));
                    }
                }
            }
            newton_from_source(&NewtonSource::simple(&all)?)
        }
        FamilyKind::CubicPerturb => {
            if spec.param.norm() == 0.0 {
                return Err(Error::invalid("cubic_perturb needs a nonzero parameter"));
            }
            newton_from_poly(&Poly::new(vec![c(-1.0), spec.param.inv(), c(0.0), c(1.0)]))
        }
        FamilyKind::Per2Slice => {
            let p = per2_poly(spec.param);
            let roots = roots_of(&p, CLUSTER_TOL)?;
            if roots.len() != 4 || roots.iter().any(|r| r.1 != 1) {
                return Err(Error::hypothesis(format!("P_c has a multiple root at c = {}", spec.param)));
            }
            newton_from_poly(&p)
        }
    }
}

/// The reduced limit of the family as the parameter degenerates.
pub fn family_limit(kind: &FamilyKind) -> Result<DegeneratePair> {
    match kind {
        FamilyKind::QuarticRootEscape { base } => {
            // coefficients of the top power of R in (zP' - P, P')
            let q = Poly::from_roots(&base.iter().map(|&r| (r, 1)).collect::<Vec<_>>());
            let dq = q.derivative();
            let numer = dq.shift_up().sub(&q);
            let mut pair = reduce_pair(&numer, &dq, 4, 1e-14)?;
            if pair.hole_degree() == 1 && pair.order_at_infinity == 1 {
                pair.reduction = pair.reduction.clone().with_source(NewtonSource::simple(base)?);
            }
            Ok(pair)
        }
        FamilyKind::CubicPerturb => {
            let m = newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 0.0, 1.0]))?;
            let mut pair = reduce_pair(&m.numer, &m.denom, 3, 1e-14)?;
            pair.reduction = m;
            Ok(pair)
        }
        FamilyKind::Per2Slice => Err(Error::invalid("per2_slice has no degenerate limit")),
    }
}

/// The trivial degeneration of a fixed map.
pub fn constant_limit(m: &MapRep) -> Result<DegeneratePair> {
    let mut pair = reduce_pair(&m.numer, &m.denom, m.degree, 1e-14)?;
    pair.reduction = m.clone();
    Ok(pair)
}

/// Roots that are far from all others relative to the spread of the rest.
pub fn escaping_roots(roots: &[Complex64]) -> Vec<bool> {
    let mut esc = vec![false; roots.len()];
    loop {
        let rest: Vec<usize> = (0..roots.len()).filter(|&i| !esc[i]).collect();
        if rest.len() <= 2 {
            return esc;
        }
        let diam_without = |skip: usize| {
            let mut d: f64 = 0.0;
            for &i in &rest {
                for &j in &rest {
                    if i != skip && j != skip {
                        d = d.max((roots[i] - roots[j]).norm());
                    }
                }
            }
            d
        };
        let far = rest.iter().copied().max_by(|&i, &j| {
            let ri = rest.iter().filter(|&&k| k != i).map(|&k| (roots[i] - roots[k]).norm()).fold(f64::INFINITY, f64::min);
            let rj = rest.iter().filter(|&&k| k != j).map(|&k| (roots[j] - roots[k]).norm()).fold(f64::INFINITY, f64::min);
            ri.partial_cmp(&rj).unwrap()
        });
        let Some(i) = far else { return esc };
        let gap = rest.iter().filter(|&&k| k != i).map(|&k| (roots[i] - roots[k]).norm()).fold(f64::INFINITY, f64::min);
        if gap > 10.0 * diam_without(i).max(f64::MIN_POSITIVE) {
            esc[i] = true;
        } else {
            return esc;
        }
    }
}

/// Conjugate by the affine map sending the farthest pair of non-escaping
/// roots to `(0, 1)`.
pub fn normalize_roots(m: &MapRep) -> Result<(MapRep, AffineMap)> {
    let src = m.source.as_ref().ok_or_else(|| Error::invalid("map carries no root data"))?;
    let roots: Vec<Complex64> = src.roots.iter().map(|r| r.0).collect();
    if roots.len() < 2 {
        return Err(Error::invalid("need at least two finite roots"));
    }
    let esc = escaping_roots(&roots);
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if esc[i] || esc[j] {
                continue;
            }
            let d = (roots[i] - roots[j]).norm();
            if best.is_none_or(|b| d > b.2) {
                best = Some((i, j, d));
            }
        }
    }
    let (i, j, d) = best.unwrap();
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    if d <= CLUSTER_TOL * scale {
        return Err(Error::invalid("all roots coincide within the clustering tolerance"));
    }
    let a = AffineMap::normalizing(roots[i], roots[j]);
    let moved: Vec<(Complex64, usize)> = src.roots.iter().map(|&(r, k)| (a.apply(r), k)).collect();
    let m2 = newton_from_source(&NewtonSource::new(moved)?)?;
    Ok((m2, a))
}

/// A component reached from a root basin by choosing preimages in
/// canonical order (1-based), as in the Newton graph labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentPath {
    pub root: usize,
    #[serde(default)]
    pub pullbacks: Vec<usize>,
}

impl ComponentPath {
    pub fn label(&self) -> String {
        let mut s = format!("r{}", self.root + 1);
        for p in &self.pullbacks {
            let _ = write!(s, ".{p}");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSpec {
    pub components: Vec<ComponentPath>,
    pub angles: Vec<Angle>,
}

impl GammaSpec {
    pub fn tags(&self) -> Vec<RayTag> {
        self.components
            .iter()
            .flat_map(|c| self.angles.iter().map(move |a| RayTag::new(c.label(), *a)))
            .collect()
    }
}

fn canonical_preimages(m: &MapRep, v: SpherePoint) -> Result<Vec<SpherePoint>> {
    let mut pre = m.preimages(v)?;
    pre.retain(|(p, _)| sphere_dist(*p, v) > 1e-8);
    pre.sort_by(|a, b| {
        let (ea, eb) = (a.0.embed(), b.0.embed());
        (ea[2], ea[0], ea[1]).partial_cmp(&(eb[2], eb[0], eb[1])).unwrap()
    });
    Ok(pre.into_iter().map(|p| p.0).collect())
}

/// Charts of the limit map along each component path.
fn limit_charts(limit: &MapRep, gamma: &GammaSpec) -> Result<Vec<(String, BottcherChart)>> {
    let roots = superattracting_roots(limit)?;
    let mut out = Vec::new();
    for cp in &gamma.components {
        let r = *roots
            .get(cp.root)
            .ok_or_else(|| Error::invalid(format!("root index {} out of range", cp.root)))?;
        let mut ch = chart_at_root(limit, r)?;
        for &k in &cp.pullbacks {
            let pre = canonical_preimages(limit, ch.center)?;
            let v = *pre
                .get(k.wrapping_sub(1))
                .ok_or_else(|| Error::invalid(format!("pullback index {k} out of range")))?;
            ch = chart_at_preimage(limit, &ch, v)?;
        }
        out.push((cp.label(), ch));
    }
    Ok(out)
}

/// The limit graph Γ with its charts.
pub fn limit_graph(limit: &DegeneratePair, gamma: &GammaSpec) -> Result<(Workspace, RayGraph)> {
    let mut ws = Workspace::new(limit.reduction.clone());
    for (l, ch) in limit_charts(&limit.reduction, gamma)? {
        ws.add_chart(l, ch);
    }
    let g = ws.graph(Role::Custom("gamma".into()), &gamma.tags())?;
    Ok((ws, g))
}

/// Multiplier of the cycle through `p` of period `per`, in sphere charts.
fn cycle_multiplier(m: &MapRep, p: SpherePoint, per: usize) -> f64 {
    let mut j = Jet::seed(p);
    for _ in 0..per {
        j = m.step(j);
    }
    j.dx.norm()
}

/// Checks on the limit: Γ connected; each landing orbit eventually
/// repelling periodic and away from critical points.
pub fn check_limit_hypotheses(limit: &DegeneratePair, g: &RayGraph, budget: usize, crit_floor: f64) -> Result<()> {
    if !g.is_connected() {
        return Err(Error::hypothesis("Γ is not a connected graph"));
    }
    let f = &limit.reduction;
    let crit: Vec<SpherePoint> = f.critical_points()?.into_iter().map(|c| c.point).collect();
    for (tag, ray) in g.tags.iter().zip(&g.rays) {
        let cert = ray
            .certificate()
            .ok_or_else(|| Error::hypothesis(format!("landing of {tag} is not eventually periodic within budget")))?;
        if cert.preperiod + cert.period > budget {
            return Err(Error::hypothesis(format!("landing orbit of {tag} exceeds the orbit budget")));
        }
        let mut p = cert.point;
        for _ in 0..(cert.preperiod + cert.period) {
            if let Some(c) = crit.iter().find(|&&c| sphere_dist(c, p) < crit_floor) {
                return Err(Error::hypothesis(format!("landing orbit of {tag} meets the critical point {c}")));
            }
            p = f.eval(p);
        }
        let q = f.iterate(cert.point, cert.preperiod);
        let mu = cycle_multiplier(f, q, cert.period);
        if mu <= 1.0 + 1e-9 {
            return Err(Error::hypothesis(format!("landing cycle of {tag} is not repelling (|λ| = {mu:.6})")));
        }
    }
    Ok(())
}

/// One row of the convergence report.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub parameter: Complex64,
    pub d_h: f64,
    /// `None` when co-landing could not be decided.
    pub iso: Option<bool>,
    pub max_residual: f64,
    pub degree_match: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub strictly_decreasing: bool,
    pub warnings: Vec<String>,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("parameter,d_H,iso,max_residual\n");
        for r in &self.rows {
            let p = if r.parameter.im == 0.0 {
                format!("{}", r.parameter.re)
            } else {
                format!("{}{:+}i", r.parameter.re, r.parameter.im)
            };
            let iso = match r.iso {
                Some(b) => b.to_string(),
                None => "indeterminate".into(),
            };
            let _ = writeln!(s, "{p},{:.6e},{iso},{:.3e}", r.d_h, r.max_residual);
        }
        s
    }
}

/// Follow the limit charts to `m` and compare its graph with Γ. No
/// hypotheses are checked here.
pub fn measure_parameter(
    limit: &DegeneratePair,
    lim_ws: &Workspace,
    gamma_graph: &RayGraph,
    gamma: &GammaSpec,
    m: &MapRep,
    parameter: Complex64,
) -> Result<(ConvergenceRow, RayGraph)> {
    let mut ws = Workspace::new(m.clone());
    let mut residual: f64 = 0.0;
    let mut degree_match = true;
    for cp in &gamma.components {
        // walk the path, tracking each centre along the way
        let mut path = ComponentPath { root: cp.root, pullbacks: Vec::new() };
        let mut chart: Option<BottcherChart> = None;
        for step in std::iter::once(None).chain(cp.pullbacks.iter().map(Some)) {
            if let Some(&k) = step {
                path.pullbacks.push(k);
            }
            let base = lim_ws.chart(&path.label()).map(|c| c.center).or_else(|_| {
                limit_charts(&limit.reduction, &GammaSpec { components: vec![path.clone()], angles: vec![] })
                    .map(|v| v[0].1.center)
            })?;
            let rec = track_deformation(limit, m, base)?;
            degree_match &= rec.local_degree_match;
            let (pre, per) = rec.preperiod_period;
            let u = rec.perturbed_center;
            residual = residual.max(sphere_dist(m.iterate(u, pre + per), m.iterate(u, pre)));
            chart = Some(match chart {
                None => chart_at_root(m, u)?,
                Some(parent) => chart_at_preimage(m, &parent, u)?,
            });
        }
        ws.add_chart(cp.label(), chart.unwrap());
    }
    let g = ws.graph(Role::Custom("gamma".into()), &gamma.tags())?;
    let d_h = graph_hausdorff(&g, gamma_graph).distance;
    let iso = graph_iso(&g, gamma_graph).ok();
    Ok((ConvergenceRow { parameter, d_h, iso, max_residual: residual, degree_match }, g))
}

/// Orbit budget and critical-distance floor for the limit checks.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    pub orbit_budget: usize,
    pub critical_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { orbit_budget: 200, critical_floor: 1e-4 }
    }
}

/// Compare the graphs of a parameter sweep with the limit graph.
pub fn convergence_experiment(
    sweep: &[FamilySpec],
    limit: &DegeneratePair,
    gamma: &GammaSpec,
    tol: Tolerances,
) -> Result<ConvergenceReport> {
    let (lim_ws, g) = limit_graph(limit, gamma)?;
    check_limit_hypotheses(limit, &g, tol.orbit_budget, tol.critical_floor)?;
    let rows: Vec<Result<ConvergenceRow>> = sweep
        .par_iter()
        .map(|s| {
            let m = make_family(s)?;
            let (row, _) = measure_parameter(limit, &lim_ws, &g, gamma, &m, s.param)?;
            if !row.degree_match {
                return Err(Error::hypothesis(format!("local degrees change under deformation at {}", s.param)));
            }
            Ok(row)
        })
        .collect();
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        out.push(r?);
    }
    out.sort_by(|a, b| a.parameter.norm().partial_cmp(&b.parameter.norm()).unwrap());
    let strictly_decreasing = out.windows(2).all(|w| w[1].d_h < w[0].d_h);
    let mut warnings = Vec::new();
    if out.iter().any(|r| r.iso.is_none()) {
        warnings.push("some isomorphism verdicts are indeterminate".into());
    }
    Ok(ConvergenceReport { rows: out, strictly_decreasing, warnings })
}

/// For each parameter: the free critical point nearest ∞ stays within
/// `eps` of ∞ for `k` steps.
pub fn critical_escape_check(sweep: &[FamilySpec], k: usize, eps: f64) -> Result<Vec<(Complex64, bool)>> {
    sweep
        .iter()
        .map(|s| {
            if !matches!(s.kind, FamilyKind::QuarticRootEscape { .. }) {
                return Err(Error::invalid("critical escape needs a family with an escaping root"));
            }
            let m = make_family(s)?;
            let cn = m
                .free_critical_points()?
                .into_iter()
                .map(|c| c.point)
                .min_by(|a, b| sphere_dist(*a, Infinity).partial_cmp(&sphere_dist(*b, Infinity)).unwrap())
                .ok_or_else(|| Error::numerical("no free critical point"))?;
            let mut p = cn;
            let mut ok = true;
            for _ in 0..=k {
                ok &= sphere_dist(p, Infinity) < eps;
                p = m.eval(p);
            }
            Ok((s.param, ok))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::Finite;
    use proptest::prelude::*;

    fn quartic(r: f64) -> FamilySpec {
        FamilySpec::new(FamilyKind::cube_roots_of_unity(), c(r))
    }

    #[test]
    fn per2_cycle_identities() {
        for cp in [c(0.3), Complex64::new(-0.7, 1.1), Complex64::new(2.0, -0.4)] {
            let m = make_family(&FamilySpec::new(FamilyKind::Per2Slice, cp)).unwrap();
            assert!(sphere_dist(m.eval(SpherePoint::new(0.0, 0.0)), SpherePoint::new(1.0, 0.0)) < 1e-12);
            assert!(sphere_dist(m.eval(SpherePoint::new(1.0, 0.0)), SpherePoint::new(0.0, 0.0)) < 1e-12);
        }
    }

    #[test]
    fn per2_degenerate_rejected() {
        // c = 1/2 gives P_c(1) = P_c'(1) = 0
        assert!(make_family(&FamilySpec::new(FamilyKind::Per2Slice, c(0.5))).is_err());
    }

    #[test]
    fn cubic_perturb_tends_to_z3() {
        let lim = newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 0.0, 1.0])).unwrap();
        let mut prev = f64::INFINITY;
        for n in [10.0, 100.0, 1000.0] {
            let m = make_family(&FamilySpec::new(FamilyKind::CubicPerturb, c(n))).unwrap();
            let s = m.numer.leading() / lim.numer.leading();
            let err = m.numer.sub(&lim.numer.scale(s)).max_abs_coeff() + m.denom.sub(&lim.denom.scale(s)).max_abs_coeff();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn quartic_roots_exact() {
        let m = make_family(&quartic(50.0)).unwrap();
        let src = m.source.unwrap();
        assert_eq!(src.roots.len(), 4);
        assert_eq!(src.roots[3].0, c(50.0));
    }

    #[test]
    fn quartic_limit_is_cubic_newton_with_hole_at_infinity() {
        let pair = family_limit(&FamilyKind::cube_roots_of_unity()).unwrap();
        assert_eq!(pair.reduction.degree, 3);
        assert_eq!(pair.order_at_infinity, 1);
        assert!(pair.holes.iter().any(|h| *h == Infinity));
    }

    #[test]
    fn normalize_two_roots() {
        let m = newton_from_source(&NewtonSource::simple(&[c(2.0), c(5.0)]).unwrap()).unwrap();
        let (m2, a) = normalize_roots(&m).unwrap();
        assert!((a.a - c(1.0 / 3.0)).norm() < 1e-15 && (a.b - c(-2.0 / 3.0)).norm() < 1e-15);
        let r: Vec<Complex64> = m2.source.unwrap().roots.iter().map(|r| r.0).collect();
        assert!((r[0]).norm() < 1e-15 && (r[1] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn normalize_is_idempotent() {
        let m = newton_from_source(&NewtonSource::simple(&[c(0.0), c(1.0), Complex64::new(0.0, 1.0), c(2.0)]).unwrap())
            .unwrap();
        let (m1, _) = normalize_roots(&m).unwrap();
        let (_, a2) = normalize_roots(&m1).unwrap();
        assert!((a2.a - c(1.0)).norm() < 1e-12 && a2.b.norm() < 1e-12);
    }

    #[test]
    fn escaping_root_excluded() {
        let mut prev_max = 0.0;
        for r in [1e2, 1e3, 1e4] {
            let m = make_family(&quartic(r)).unwrap();
            let (m2, _) = normalize_roots(&m).unwrap();
            let rs = m2.source.unwrap().roots;
            let esc = escaping_roots(&rs.iter().map(|x| x.0).collect::<Vec<_>>());
            assert!(esc[3] && !esc[0] && !esc[1] && !esc[2]);
            let bound = rs[..3].iter().map(|x| x.0.norm()).fold(0.0, f64::max);
            assert!(bound < 2.0);
            if prev_max > 0.0 {
                assert!((bound - prev_max).abs() < 1e-9);
            }
            prev_max = bound;
        }
    }

    #[test]
    fn coincident_roots_rejected() {
        let m = newton_from_source(&NewtonSource::new(vec![(c(1.0), 2)]).unwrap()).unwrap();
        assert!(normalize_roots(&m).is_err());
    }

    #[test]
    fn critical_escape() {
        let r = critical_escape_check(&[quartic(1e3)], 2, 0.1).unwrap();
        assert!(r[0].1);
        assert!(critical_escape_check(&[quartic(10.0), quartic(1e3)], 0, 2.0 + 1e-12).unwrap().iter().all(|x| x.1));
        assert!(!critical_escape_check(&[quartic(10.0)], 2, 0.01).unwrap()[0].1);
        let per2 = FamilySpec::new(FamilyKind::Per2Slice, c(0.3));
        assert!(critical_escape_check(&[per2], 1, 0.1).is_err());
    }

    #[test]
    fn constant_family_has_zero_distance() {
        let spec = FamilySpec::new(FamilyKind::CubicPerturb, c(5.0));
        let m = make_family(&spec).unwrap();
        let limit = constant_limit(&m).unwrap();
        let gamma = GammaSpec {
            components: (0..3).map(|root| ComponentPath { root, pullbacks: vec![] }).collect(),
            angles: vec![Angle::ZERO],
        };
        let rep = convergence_experiment(&[spec.clone(), spec], &limit, &gamma, Tolerances::default()).unwrap();
        for r in &rep.rows {
            // centres are re-solved by Newton, so zero up to rounding
            assert!(r.d_h < 1e-12, "{}", r.d_h);
            assert_eq!(r.iso, Some(true));
        }
        assert!(rep.to_csv().starts_with("parameter,d_H,iso,max_residual\n5,"));
    }

    #[test]
    fn disconnected_gamma_rejected() {
        // the 1/3-rays of two basins of z³-1 land at distinct points
        let spec = FamilySpec::new(FamilyKind::CubicPerturb, c(1e6));
        let limit = family_limit(&FamilyKind::CubicPerturb).unwrap();
        let gamma = GammaSpec {
            components: (0..2).map(|root| ComponentPath { root, pullbacks: vec![] }).collect(),
            angles: vec![Angle::new(1, 3).unwrap()],
        };
        let e = convergence_experiment(&[spec], &limit, &gamma, Tolerances::default()).unwrap_err();
        assert!(matches!(e, Error::Hypothesis(_)), "{e}");
    }

    proptest! {
        #[test]
        fn normalized_pair_is_zero_one(x in -5.0f64..5.0, y in -5.0f64..5.0, u in -5.0f64..5.0, v in -5.0f64..5.0) {
            prop_assume!((x - u).abs() + (y - v).abs() > 1e-3);
            let roots = [Complex64::new(x, y), Complex64::new(u, v), c(0.25)];
            prop_assume!(roots.iter().enumerate().all(|(i, a)| roots[i + 1..].iter().all(|b| (a - b).norm() > 1e-3)));
            let m = newton_from_source(&NewtonSource::simple(&roots).unwrap()).unwrap();
            let (m2, a) = normalize_roots(&m).unwrap();
            let r: Vec<SpherePoint> = m2.source.unwrap().roots.iter().map(|r| Finite(r.0)).collect();
            prop_assert!(r.iter().any(|p| sphere_dist(*p, SpherePoint::new(0.0, 0.0)) < 1e-9));
            prop_assert!(r.iter().any(|p| sphere_dist(*p, SpherePoint::new(1.0, 0.0)) < 1e-9));
            prop_assert!(a.a.norm() > 0.0);
        }
    }
}
