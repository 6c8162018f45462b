//! Cut angles between two immediate basins, the invariant curves of cubic
//! Newton maps built from them, and the pole-separation test for quartics.

use crate::angle::Angle;
use crate::bottcher::{chart_at_preimage, chart_at_root};
use crate::error::{Error, Result};
use crate::graph::{densify, root_workspace, superattracting_roots, RayGraph, RayTag, Role, Workspace, DELTA_S, VERTEX_TOL};
use crate::newton::MapRep;
use crate::rays::{trace_ray, RayOptions};
use crate::sphere::{sphere_dist, Finite, Infinity, SpherePoint};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeSet;
use std::f64::consts::PI;

/// Approximate landing points closer than this co-land.
pub const COLAND_IN: f64 = 1e-5;
/// Approximate landing points farther than this do not.
pub const COLAND_OUT: f64 = 1e-3;

/// Cut angles found by a scan up to a denominator bound.
#[derive(Clone, Debug, Serialize)]
pub struct CutAngleSet {
    pub q_max: u64,
    pub members: Vec<Angle>,
    /// Smallest member in `(0, 1]`; `0` stands for `1`.
    pub alpha_estimate: Angle,
    pub indeterminate: Vec<Angle>,
    pub tested: usize,
}

impl CutAngleSet {
    pub fn contains(&self, a: Angle) -> bool {
        self.members.binary_search(&a).is_ok()
    }

    pub fn is_indeterminate(&self, a: Angle) -> bool {
        self.indeterminate.binary_search(&a).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Verdict {
    In,
    Out,
    Unsure,
}

fn approx_landing(ws: &Workspace, label: &str, a: Angle) -> Option<SpherePoint> {
    let ch = ws.chart(label).ok()?;
    let opts = RayOptions { refine: false, ..ws.opts };
    trace_ray(ch, a, &opts).ok()?.landing_point()
}

fn verdict(p: Option<SpherePoint>, q: Option<SpherePoint>) -> Verdict {
    match (p, q) {
        (Some(p), Some(q)) => {
            let d = sphere_dist(p, q);
            if d < COLAND_IN {
                Verdict::In
            } else if d > COLAND_OUT {
                Verdict::Out
            } else {
                Verdict::Unsure
            }
        }
        _ => Verdict::Unsure,
    }
}

/// Scan every reduced angle `θ` with denominator at most `q_max` for
/// co-landing of the `θ`-ray of `a` with the `1-θ`-ray of `b`.
pub fn scan_cut_angles(ws: &Workspace, a: &str, b: &str, q_max: u64) -> Result<CutAngleSet> {
    let half = verdict(approx_landing(ws, a, Angle::HALF), approx_landing(ws, b, Angle::HALF));
    if half != Verdict::In {
        return Err(Error::hypothesis(format!("the 1/2-rays of {a} and {b} do not share a landing point")));
    }
    let angles = Angle::farey(q_max);
    let v: Vec<Verdict> = angles
        .par_iter()
        .map(|&t| verdict(approx_landing(ws, a, t), approx_landing(ws, b, t.neg())))
        .collect();
    let mut v = v;
    // the set is forward invariant under doubling; a member whose double
    // is not a member was misjudged
    loop {
        let mut changed = false;
        for i in 0..angles.len() {
            if v[i] != Verdict::In {
                continue;
            }
            let j = angles.binary_search(&angles[i].times(2)).unwrap();
            if v[j] != Verdict::In {
                v[i] = Verdict::Unsure;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let members: Vec<Angle> = angles.iter().zip(&v).filter(|(_, v)| **v == Verdict::In).map(|(a, _)| *a).collect();
    let indeterminate = angles.iter().zip(&v).filter(|(_, v)| **v == Verdict::Unsure).map(|(a, _)| *a).collect();
    let alpha_estimate = members.iter().copied().find(|m| *m != Angle::ZERO).unwrap_or(Angle::ZERO);
    Ok(CutAngleSet { q_max, members, alpha_estimate, indeterminate, tested: angles.len() })
}

/// Cut angles of the basin pair `(i, j)` (0-based, in root order).
pub fn cut_angles(m: &MapRep, pair: (usize, usize), q_max: u64) -> Result<CutAngleSet> {
    let ws = root_workspace(m)?;
    let n = ws.labels().count();
    if pair.0 >= n || pair.1 >= n || pair.0 == pair.1 {
        return Err(Error::invalid(format!("basin pair {pair:?} out of range for {n} roots")));
    }
    scan_cut_angles(&ws, &format!("r{}", pair.0 + 1), &format!("r{}", pair.1 + 1), q_max)
}

/// Certified co-landing residual of the `θ`-ray of `a` and the `1-θ`-ray
/// of `b`.
pub fn coland_residual(ws: &Workspace, a: &str, b: &str, t: Angle) -> Result<f64> {
    let ra = ws.ray(&RayTag::new(a, t))?;
    let rb = ws.ray(&RayTag::new(b, t.neg()))?;
    match (ra.certificate(), rb.certificate()) {
        (Some(p), Some(q)) => Ok(sphere_dist(p.point, q.point)),
        _ => Err(Error::indeterminate(format!("landing of {a}({t}) or {b}({}) not certified", t.neg()))),
    }
}

fn to_plane(z: SpherePoint, pivot: SpherePoint) -> Option<Complex64> {
    match pivot {
        Infinity => z.finite(),
        Finite(b) => match z {
            Infinity => Some(Complex64::new(0.0, 0.0)),
            Finite(z) => {
                let w = z - b;
                (w.norm() > 0.0).then(|| w.inv())
            }
        },
    }
}

/// Closed curve densified on the sphere.
pub fn densified_curve(g: &RayGraph, delta: f64) -> Result<Vec<SpherePoint>> {
    let mut pl = g.cycle_polyline()?;
    pl.push(pl[0]);
    let mut out = Vec::new();
    densify(&pl, delta, &mut out);
    // drop the repeated start point
    out.pop();
    Ok(out.into_iter().map(SpherePoint::from_embedded).collect())
}

/// Winding number of a closed curve around `p` after sending `pivot` to
/// infinity. Points within `DELTA_S` of the curve are indeterminate.
pub fn winding(curve: &[SpherePoint], p: SpherePoint, pivot: SpherePoint) -> Result<i64> {
    if curve.iter().any(|&z| sphere_dist(z, p) < DELTA_S) {
        return Err(Error::indeterminate(format!("{p} lies within the exclusion band of the curve")));
    }
    if curve.iter().any(|&z| sphere_dist(z, pivot) < DELTA_S) {
        return Err(Error::invalid("winding pivot lies on the curve"));
    }
    let w = to_plane(p, pivot).ok_or_else(|| Error::invalid("point coincides with the pivot"))?;
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for &z in curve.iter().chain(std::iter::once(&curve[0])) {
        let u = to_plane(z, pivot).ok_or_else(|| Error::numerical("curve passes the pivot"))?;
        let a = (u - w).arg();
        if let Some(pa) = prev {
            let mut d = a - pa;
            if d > PI {
                d -= 2.0 * PI;
            } else if d < -PI {
                d += 2.0 * PI;
            }
            total += d;
        }
        prev = Some(a);
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Whether `p` and `q` lie in the same complementary component.
pub fn same_side(curve: &[SpherePoint], p: SpherePoint, q: SpherePoint) -> Result<bool> {
    Ok(winding(curve, p, q)? == 0)
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a - o).re * (b - o).im - (a - o).im * (b - o).re
}

fn segments_cross(p: Complex64, q: Complex64, r: Complex64, s: Complex64) -> bool {
    let d1 = cross(p, q, r);
    let d2 = cross(p, q, s);
    let d3 = cross(r, s, p);
    let d4 = cross(r, s, q);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Number of crossings between non-adjacent edges of a closed polygon on
/// the sphere, counted in a plane chart centred away from the curve.
pub fn self_crossings(curve: &[SpherePoint]) -> usize {
    // repeated vertices where two rays meet would give zero-length edges
    let mut curve: Vec<SpherePoint> = curve.to_vec();
    curve.dedup_by(|a, b| sphere_dist(*a, *b) < 1e-12);
    while curve.len() > 1 && sphere_dist(curve[0], curve[curve.len() - 1]) < 1e-12 {
        curve.pop();
    }
    let n = curve.len();
    if n < 4 {
        return 0;
    }
    let candidates = [Infinity, SpherePoint::new(0.0, 0.0), SpherePoint::new(0.0, 7.3), SpherePoint::new(-5.1, -2.9)];
    let pivot = *candidates
        .iter()
        .max_by(|a, b| {
            let da = curve.iter().map(|z| sphere_dist(*z, **a)).fold(f64::INFINITY, f64::min);
            let db = curve.iter().map(|z| sphere_dist(*z, **b)).fold(f64::INFINITY, f64::min);
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    let pts: Vec<Complex64> = curve.iter().map(|&z| to_plane(z, pivot).unwrap_or_default()).collect();
    // edges sorted by left end, swept left to right
    let mut edges: Vec<(f64, f64, usize)> = (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            (a.re.min(b.re), a.re.max(b.re), i)
        })
        .collect();
    edges.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut count = 0;
    for (k, &(_, hi, i)) in edges.iter().enumerate() {
        for &(lo2, _, j) in &edges[k + 1..] {
            if lo2 > hi {
                break;
            }
            let gap = (i as isize - j as isize).unsigned_abs();
            if gap <= 1 || gap == n - 1 {
                continue;
            }
            if segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                count += 1;
            }
        }
    }
    count
}

/// A cubic Newton map with its basins labelled so that `O1`, `O2` share
/// the pole `xi1` through their 1/2-rays and `O3` is the third basin.
/// `O{i}^1` is the preimage component of `O{i}` away from it, and
/// `O{i}^2` are second preimages picked by landing-point adjacency.
pub struct CubicSetting {
    pub ws: Workspace,
    pub roots: [SpherePoint; 3],
    pub xi1: SpherePoint,
    pub xi2: SpherePoint,
    pub c: SpherePoint,
}

/// Conditions a cut-angle candidate must meet before the curve `C` exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaCondition {
    NotCutDoubleCut,
    DoublingWindow,
    OrbitAvoidance,
}

impl CubicSetting {
    pub fn new(m: &MapRep) -> Result<CubicSetting> {
        if m.degree != 3 {
            return Err(Error::invalid(format!("expected a cubic Newton map, got degree {}", m.degree)));
        }
        let roots = superattracting_roots(m)?;
        if roots.len() != 3 {
            return Err(Error::hypothesis("expected three simple roots"));
        }
        let free: Vec<SpherePoint> = m
            .free_critical_points()?
            .into_iter()
            .map(|c| c.point)
            .filter(|p| roots.iter().all(|r| sphere_dist(*r, *p) > 1e-8))
            .collect();
        let c = match free.as_slice() {
            [c] => *c,
            _ => return Err(Error::hypothesis("expected one free critical point")),
        };
        if sphere_dist(m.eval(c), Infinity) < 1e-9 {
            return Err(Error::hypothesis("the free critical point is a pole"));
        }
        let poles = m.poles()?;
        if poles.len() != 2 {
            return Err(Error::hypothesis("expected two distinct poles"));
        }
        let charts = roots.iter().map(|&r| chart_at_root(m, r)).collect::<Result<Vec<_>>>()?;
        if charts.iter().any(|c| c.root_degree != 2) {
            return Err(Error::hypothesis("a root is not simple"));
        }
        let mut tmp = Workspace::new(m.clone());
        for (i, ch) in charts.iter().enumerate() {
            tmp.add_chart(format!("r{i}"), ch.clone());
        }
        let halves: Vec<Option<SpherePoint>> =
            (0..3).map(|i| approx_landing(&tmp, &format!("r{i}"), Angle::HALF)).collect();
        let mut shared = Vec::new();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            if verdict(halves[i], halves[j]) == Verdict::In {
                shared.push((i, j));
            }
        }
        let (mut a, mut b) = match shared.as_slice() {
            [p] => *p,
            _ => return Err(Error::hypothesis("no unique basin pair shares a pole through its 1/2-rays")),
        };
        let k = 3 - a - b;
        let xi = halves[a].unwrap();
        let (xi1, xi2) = if sphere_dist(xi, poles[0].0) < sphere_dist(xi, poles[1].0) {
            (poles[0].0, poles[1].0)
        } else {
            (poles[1].0, poles[0].0)
        };
        // orient so that the 3/4-ray of O1 lies on the side of γ(0,1/2)
        // away from the third root
        let (la, lb) = (format!("r{a}"), format!("r{b}"));
        let gamma = tmp.graph(
            Role::GammaCurve,
            &[
                RayTag::new(&la, Angle::ZERO),
                RayTag::new(&la, Angle::HALF),
                RayTag::new(&lb, Angle::ZERO),
                RayTag::new(&lb, Angle::HALF),
            ],
        )?;
        let curve = densified_curve(&gamma, DELTA_S)?;
        let probe = tmp.ray(&RayTag::new(&la, Angle::new(3, 4)?))?;
        let mid = probe.samples[probe.samples.len() / 2];
        if same_side(&curve, mid, roots[k])? {
            std::mem::swap(&mut a, &mut b);
        }
        let order = [a, b, k];
        let mut ws = Workspace::new(m.clone());
        for (n, &i) in order.iter().enumerate() {
            let label = format!("O{}", n + 1);
            ws.add_chart(&label, charts[i].clone());
            let mut pre = m.preimages(roots[i])?;
            pre.retain(|(p, _)| sphere_dist(*p, roots[i]) > 1e-8);
            match pre.as_slice() {
                [(p, 1)] => ws.add_chart(format!("{label}^1"), chart_at_preimage(m, &charts[i], *p)?),
                _ => return Err(Error::hypothesis(format!("{label} has no simple extra preimage component"))),
            }
        }
        Ok(CubicSetting { ws, roots: [roots[a], roots[b], roots[k]], xi1, xi2, c })
    }

    fn tags(spec: &[(&str, Angle)]) -> Vec<RayTag> {
        spec.iter().map(|(l, a)| RayTag::new(*l, *a)).collect()
    }

    pub fn gamma_curve(&self) -> Result<RayGraph> {
        let (z, h) = (Angle::ZERO, Angle::HALF);
        self.ws.graph(Role::GammaCurve, &Self::tags(&[("O1", z), ("O1", h), ("O2", z), ("O2", h)]))
    }

    pub fn cut_angles(&self, q_max: u64) -> Result<CutAngleSet> {
        scan_cut_angles(&self.ws, "O1", "O2", q_max)
    }

    fn is_cut(&self, t: Angle) -> Verdict {
        verdict(approx_landing(&self.ws, "O1", t), approx_landing(&self.ws, "O2", t.neg()))
    }

    /// Check a candidate `θ` with doubling exponent `k`.
    pub fn check_theta(&self, t: Angle, k: u32) -> Result<()> {
        let fail = |c: ThetaCondition, msg: String| Err(Error::hypothesis(format!("{c:?}: {msg}")));
        if t == Angle::ZERO || t >= Angle::HALF {
            return fail(ThetaCondition::NotCutDoubleCut, format!("{t} is not in (0, 1/2)"));
        }
        match (self.is_cut(t), self.is_cut(t.times(2))) {
            (Verdict::Out, Verdict::In) => {}
            (Verdict::In, _) => return fail(ThetaCondition::NotCutDoubleCut, format!("{t} is a cut angle")),
            (_, Verdict::Out) => {
                return fail(ThetaCondition::NotCutDoubleCut, format!("{} is not a cut angle", t.times(2)))
            }
            _ => return Err(Error::indeterminate(format!("co-landing for {t} or its double is unresolved"))),
        }
        let eta = t.times_pow(2, k);
        if k < 1 || eta <= Angle::HALF {
            return fail(ThetaCondition::DoublingWindow, format!("2^{k}·{t} = {eta} is not in (1/2, 1)"));
        }
        if t.is_dyadic() {
            return fail(ThetaCondition::OrbitAvoidance, format!("{t} is dyadic; its ray lands on a preimage of ∞"));
        }
        let ray = self.ws.ray(&RayTag::new("O1", t))?;
        let cert = ray
            .certificate()
            .ok_or_else(|| Error::indeterminate(format!("landing of O1({t}) not certified")))?;
        let mut p = cert.point;
        for _ in 0..(cert.preperiod + cert.period) {
            if sphere_dist(p, self.c) < 1e-6 || sphere_dist(p, Infinity) < 1e-6 {
                return fail(ThetaCondition::OrbitAvoidance, format!("orbit of the landing point meets {p}"));
            }
            p = self.ws.map.eval(p);
        }
        Ok(())
    }

    /// First `θ` in `(0, 1/2)` by increasing denominator meeting all
    /// conditions, with its least valid `k`.
    pub fn choose_theta(&self, set: &CutAngleSet) -> Option<(Angle, u32)> {
        let mut cands: Vec<Angle> = Angle::farey(set.q_max)
            .into_iter()
            .filter(|t| *t > Angle::ZERO && *t < Angle::HALF && !t.is_dyadic())
            .filter(|t| !set.contains(*t) && !set.is_indeterminate(*t) && set.contains(t.times(2)))
            .collect();
        cands.sort_by_key(|t| (t.den(), t.num()));
        cands.into_iter().find_map(|t| {
            let k = (1..64).find(|&k| t.times_pow(2, k) > Angle::HALF)?;
            self.check_theta(t, k).ok().map(|_| (t, k))
        })
    }

    pub fn l_curve(&self, t: Angle) -> Result<RayGraph> {
        let (z, h) = (Angle::ZERO, Angle::HALF);
        let t2 = t.times(2);
        self.ws.graph(
            Role::LCurve,
            &Self::tags(&[
                ("O3", z),
                ("O3", h),
                ("O1", z),
                ("O1", t),
                ("O2", z),
                ("O2", t.neg()),
                ("O2^1", t2.neg()),
                ("O2^1", z),
                ("O1^1", z),
                ("O1^1", t2),
            ]),
        )
    }

    /// Add the second preimage component of `O{i}` whose 0-ray co-lands
    /// with the `partner` ray.
    fn second_preimage(&mut self, i: usize, partner: &RayTag) -> Result<()> {
        let label = format!("O{i}^2");
        if self.ws.chart(&label).is_ok() {
            return Ok(());
        }
        let target = self
            .ws
            .ray(partner)?
            .landing_point()
            .ok_or_else(|| Error::numerical(format!("{partner} did not land")))?;
        let parent = self.ws.chart(&format!("O{i}^1"))?.clone();
        let m = self.ws.map.clone();
        let mut found = Vec::new();
        for (p, mult) in m.preimages(parent.center)? {
            if mult != 1 {
                continue;
            }
            let Ok(ch) = chart_at_preimage(&m, &parent, p) else { continue };
            let Ok(r) = trace_ray(&ch, Angle::ZERO, &RayOptions { refine: false, ..self.ws.opts }) else {
                continue;
            };
            if r.landing_point().is_some_and(|q| sphere_dist(q, target) < COLAND_IN) {
                found.push(ch);
            }
        }
        match found.len() {
            1 => {
                self.ws.add_chart(label, found.pop().unwrap());
                Ok(())
            }
            0 => Err(Error::numerical(format!("no preimage component of O{i}^1 meets the landing point of {partner}"))),
            _ => Err(Error::indeterminate(format!("several preimage components of O{i}^1 meet {partner}"))),
        }
    }

    /// The Jordan curve through the second preimage components.
    pub fn c_curve(&mut self, t: Angle, k: u32) -> Result<RayGraph> {
        self.check_theta(t, k)?;
        let q1 = Angle::new(1, 4)?;
        let q3 = Angle::new(3, 4)?;
        self.second_preimage(2, &RayTag::new("O3", q3))?;
        self.second_preimage(1, &RayTag::new("O3", q1))?;
        let (z, t2, th, eta) = (Angle::ZERO, t.times(2), t.halve(), t.times_pow(2, k));
        let g = self.ws.graph(
            Role::CCurve,
            &Self::tags(&[
                ("O3", q1),
                ("O3", q3),
                ("O2^2", z),
                ("O2^2", t2.neg()),
                ("O1", th),
                ("O1", eta),
                ("O2", eta.neg()),
                ("O2", th.neg()),
                ("O1^2", t2),
                ("O1^2", z),
            ]),
        )?;
        if !g.is_single_cycle() {
            return Err(Error::numerical("the rays of C do not close up into a single cycle"));
        }
        Ok(g)
    }

    /// The image of a ray tag under the map.
    pub fn image_tag(tag: &RayTag) -> RayTag {
        match tag.component.split_once('^') {
            Some((base, j)) => {
                let j: usize = j.parse().unwrap_or(1);
                let comp = if j <= 1 { base.to_string() } else { format!("{base}^{}", j - 1) };
                RayTag::new(comp, tag.angle)
            }
            None => RayTag::new(tag.component.clone(), tag.angle.times(2)),
        }
    }

    /// Union of forward images of `C` until no new rays appear; returns
    /// the graph and the number of images taken.
    pub fn g_graph(&self, c: &RayGraph) -> Result<(RayGraph, usize)> {
        let mut all: BTreeSet<RayTag> = c.tags.iter().cloned().collect();
        let mut cur: Vec<RayTag> = c.tags.clone();
        let mut k = 0;
        loop {
            let next: Vec<RayTag> = cur.iter().map(Self::image_tag).collect();
            if next.iter().all(|t| all.contains(t)) {
                break;
            }
            all.extend(next.iter().cloned());
            cur = next;
            k += 1;
        }
        let tags: Vec<RayTag> = all.into_iter().collect();
        Ok((self.ws.graph(Role::GGraph, &tags)?, k))
    }

    /// Winding of the densified cycle `g` around `p`, relative to ∞.
    pub fn encloses(g: &RayGraph, p: SpherePoint) -> Result<bool> {
        let curve = densified_curve(g, DELTA_S)?;
        Ok(winding(&curve, p, Infinity)? != 0)
    }
}

/// Some basin pair with co-landing 1/2-rays has a pole strictly inside
/// each complementary component of its curve γ(0,1/2).
pub fn separable_check(m: &MapRep) -> Result<bool> {
    if m.degree != 4 {
        return Err(Error::invalid(format!("expected a quartic Newton map, got degree {}", m.degree)));
    }
    let ws = root_workspace(m)?;
    let labels: Vec<String> = ws.labels().cloned().collect();
    if labels.len() != 4 {
        return Err(Error::hypothesis("expected four simple roots"));
    }
    for l in &labels {
        if ws.chart(l)?.root_degree != 2 {
            return Err(Error::hypothesis(format!("{l} is not a simple root")));
        }
    }
    let poles = m.poles()?;
    let mut unresolved = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            let (a, b) = (&labels[i], &labels[j]);
            if verdict(approx_landing(&ws, a, Angle::HALF), approx_landing(&ws, b, Angle::HALF)) != Verdict::In {
                continue;
            }
            let tags = [
                RayTag::new(a, Angle::ZERO),
                RayTag::new(a, Angle::HALF),
                RayTag::new(b, Angle::ZERO),
                RayTag::new(b, Angle::HALF),
            ];
            let res = (|| -> Result<bool> {
                let g = ws.graph(Role::GammaCurve, &tags)?;
                let xi = g.rays[g.ray_index(&tags[1]).unwrap()].landing_point().unwrap();
                let curve = densified_curve(&g, DELTA_S)?;
                let mut off = Vec::new();
                for &(p, mult) in &poles {
                    if sphere_dist(p, xi) < VERTEX_TOL {
                        if mult > 1 {
                            return Err(Error::indeterminate(format!("multiple pole {p} on the curve")));
                        }
                        continue;
                    }
                    if curve.iter().any(|&z| sphere_dist(z, p) < DELTA_S) {
                        return Err(Error::indeterminate(format!("pole {p} within the exclusion band")));
                    }
                    off.push(p);
                }
                let Some((&pivot, rest)) = off.split_first() else { return Ok(false) };
                for &p in rest {
                    if !same_side(&curve, p, pivot)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            })();
            match res {
                Ok(true) => return Ok(true),
                Ok(false) => {}
                Err(e @ Error::Indeterminate(_)) => unresolved.push(e.to_string()),
                Err(e) => return Err(e),
            }
        }
    }
    if unresolved.is_empty() {
        Ok(false)
    } else {
        Err(Error::indeterminate(unresolved.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::newton_from_poly;
    use crate::poly::Poly;

    fn figure_cubic() -> MapRep {
        newton_from_poly(&Poly::from_real(&[1.0, 0.0, -0.5, 1.0 / 3.0])).unwrap()
    }

    #[test]
    fn winding_of_unit_circle() {
        let c: Vec<SpherePoint> =
            (0..400).map(|k| Finite(Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 400.0))).collect();
        assert_eq!(winding(&c, Finite(Complex64::new(0.1, 0.2)), Infinity).unwrap(), 1);
        assert_eq!(winding(&c, Finite(Complex64::new(3.0, 0.0)), Infinity).unwrap(), 0);
        assert!(same_side(&c, Finite(Complex64::new(3.0, 0.0)), Infinity).unwrap());
        assert!(!same_side(&c, Finite(Complex64::new(0.0, 0.0)), Finite(Complex64::new(-5.0, 1.0))).unwrap());
        assert!(matches!(winding(&c, Finite(Complex64::new(1.0, 0.0)), Infinity), Err(Error::Indeterminate(_))));
    }

    #[test]
    fn figure_eight_crosses_once() {
        let circle = |k: usize| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 200.0);
        let simple: Vec<SpherePoint> = (0..200).map(|k| Finite(circle(k))).collect();
        assert_eq!(self_crossings(&simple), 0);
        let eight: Vec<SpherePoint> = (0..200)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 200.0;
                SpherePoint::new(t.sin(), (2.0 * t).sin() / 2.0)
            })
            .collect();
        assert_eq!(self_crossings(&eight), 1);
    }

    #[test]
    fn cubic_setting_labels() {
        let s = CubicSetting::new(&figure_cubic()).unwrap();
        assert!(sphere_dist(s.xi1, Finite(Complex64::new(1.0, 0.0))) < 1e-9);
        assert!(sphere_dist(s.xi2, Finite(Complex64::new(0.0, 0.0))) < 1e-9);
        assert!(sphere_dist(s.c, Finite(Complex64::new(0.5, 0.0))) < 1e-9);
        assert!(s.roots[2].finite().unwrap().im.abs() < 1e-12);
        let g = s.gamma_curve().unwrap();
        assert!(g.is_single_cycle());
        // the third basin and its preimage lie on opposite sides
        let curve = densified_curve(&g, DELTA_S).unwrap();
        let u = s.ws.chart("O3^1").unwrap().center;
        assert!(!same_side(&curve, u, s.roots[2]).unwrap());
    }

    #[test]
    fn image_tags() {
        let t = Angle::new(1, 3).unwrap();
        assert_eq!(CubicSetting::image_tag(&RayTag::new("O1", t)), RayTag::new("O1", t.times(2)));
        assert_eq!(CubicSetting::image_tag(&RayTag::new("O2^1", t)), RayTag::new("O2", t));
        assert_eq!(CubicSetting::image_tag(&RayTag::new("O2^2", t)), RayTag::new("O2^1", t));
    }

    #[test]
    fn small_scan() {
        let s = CubicSetting::new(&figure_cubic()).unwrap();
        let set = s.cut_angles(12).unwrap();
        assert!(set.contains(Angle::ZERO) && set.contains(Angle::HALF));
        for m in &set.members {
            assert!(set.contains(m.times(2)));
        }
    }

    #[test]
    fn non_quartic_rejected() {
        assert!(matches!(separable_check(&figure_cubic()), Err(Error::InvalidInput(_))));
    }
}
