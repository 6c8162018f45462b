//! Graphs of internal rays: assembly from traced rays, Newton graphs,
//! Hausdorff distance of sample clouds and combinatorial comparison.

use crate::angle::Angle;
use crate::bottcher::{chart_at_preimage, chart_at_root, BottcherChart};
use crate::error::{Error, Result};
use crate::newton::{FixedKind, MapRep};
use crate::rays::{trace_ray_cached, InternalRay, LandingCache, RayOptions, RayStatus};
use crate::sphere::{sphere_dist, Infinity, SpherePoint};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Mutex;

/// Default sampling density of graph clouds in the sphere metric.
pub const DELTA_S: f64 = 1e-3;

/// Landing points closer than this are one vertex.
pub const VERTEX_TOL: f64 = 1e-7;

/// A ray identified by its component label and angle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RayTag {
    pub component: String,
    pub angle: Angle,
}

impl RayTag {
    pub fn new(component: impl Into<String>, angle: Angle) -> Self {
        RayTag { component: component.into(), angle }
    }
}

impl std::fmt::Display for RayTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({})", self.component, self.angle)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    DeltaM(usize),
    GammaCurve,
    LCurve,
    CCurve,
    GGraph,
    Custom(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Center,
    Landing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Vertex {
    pub point: SpherePoint,
    pub kind: VertexKind,
}

/// A finite graph of landed internal rays.
#[derive(Clone, Debug)]
pub struct RayGraph {
    pub role: Role,
    pub tags: Vec<RayTag>,
    pub rays: Vec<InternalRay>,
    pub vertices: Vec<Vertex>,
    /// `[centre vertex, landing vertex]` for each ray.
    pub incidence: Vec<[usize; 2]>,
    pub warnings: Vec<String>,
}

fn canonical_key(p: SpherePoint) -> (i64, i64, i64) {
    let e = p.embed();
    let q = |x: f64| (x * 1e6).round() as i64;
    (q(e[2]), q(e[0]), q(e[1]))
}

impl RayGraph {
    /// Bind ray ends to vertices. Every ray must have landed.
    pub fn assemble(role: Role, mut items: Vec<(RayTag, InternalRay)>) -> Result<RayGraph> {
        items.sort_by(|a, b| a.0.cmp(&b.0));
        items.dedup_by(|a, b| a.0 == b.0);
        let mut vertices: Vec<Vertex> = Vec::new();
        let mut find_or_add = |p: SpherePoint, kind: VertexKind, tol: f64| -> usize {
            if let Some(i) = vertices.iter().position(|v| v.kind == kind && sphere_dist(v.point, p) < tol) {
                return i;
            }
            vertices.push(Vertex { point: p, kind });
            vertices.len() - 1
        };
        // landing ends in canonical order so vertex ids do not depend on input order
        let mut ends: Vec<(usize, SpherePoint)> = Vec::new();
        for (i, (tag, ray)) in items.iter().enumerate() {
            match &ray.status {
                RayStatus::Landed { .. } => ends.push((i, ray.landing_point().unwrap())),
                other => {
                    return Err(Error::indeterminate(format!("ray {tag} has not landed: {other:?}")));
                }
            }
        }
        let mut centers = vec![0usize; items.len()];
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.sort_by_key(|&i| canonical_key(items[i].1.component));
        for &i in &order {
            centers[i] = find_or_add(items[i].1.component, VertexKind::Center, 1e-9);
        }
        ends.sort_by_key(|&(i, p)| (canonical_key(p), i));
        let mut landing = vec![0usize; items.len()];
        for &(i, p) in &ends {
            landing[i] = find_or_add(p, VertexKind::Landing, VERTEX_TOL);
        }
        let incidence = (0..items.len()).map(|i| [centers[i], landing[i]]).collect();
        let (tags, rays) = items.into_iter().unzip();
        Ok(RayGraph { role, tags, rays, vertices, incidence, warnings: Vec::new() })
    }

    pub fn ray_index(&self, tag: &RayTag) -> Option<usize> {
        self.tags.iter().position(|t| t == tag)
    }

    /// Vertex degrees (number of ray ends at each vertex).
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertices.len()];
        for e in &self.incidence {
            d[e[0]] += 1;
            d[e[1]] += 1;
        }
        d
    }

    /// Connected components as lists of vertex ids.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for e in &self.incidence {
            let (a, b) = (find(&mut parent, e[0]), find(&mut parent, e[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        groups.into_values().collect()
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Connected, and every vertex meets exactly two ray ends.
    pub fn is_single_cycle(&self) -> bool {
        self.is_connected() && self.degrees().iter().all(|&d| d == 2)
    }

    /// Keep only the connected component containing `p`.
    pub fn component_containing(&self, p: SpherePoint) -> Option<RayGraph> {
        let v = self.vertices.iter().position(|v| sphere_dist(v.point, p) < VERTEX_TOL)?;
        let comp = self.components().into_iter().find(|c| c.contains(&v))?;
        let keep: Vec<usize> = (0..self.rays.len()).filter(|&i| comp.contains(&self.incidence[i][0])).collect();
        let items = keep.iter().map(|&i| (self.tags[i].clone(), self.rays[i].clone())).collect();
        let mut g = RayGraph::assemble(self.role.clone(), items).ok()?;
        g.warnings = self.warnings.clone();
        Some(g)
    }

    /// Closed polyline of a cycle graph, walking rays end to end and
    /// starting from the smallest vertex id.
    pub fn cycle_polyline(&self) -> Result<Vec<SpherePoint>> {
        if !self.is_single_cycle() {
            return Err(Error::invalid("graph is not a single cycle"));
        }
        let mut used = vec![false; self.rays.len()];
        let mut v = 0usize;
        let mut out = Vec::new();
        for _ in 0..self.rays.len() {
            let (i, forward) = (0..self.rays.len())
                .filter(|&i| !used[i])
                .find_map(|i| {
                    if self.incidence[i][0] == v {
                        Some((i, true))
                    } else if self.incidence[i][1] == v {
                        Some((i, false))
                    } else {
                        None
                    }
                })
                .ok_or_else(|| Error::numerical("cycle walk broke"))?;
            used[i] = true;
            let mut pl = self.rays[i].polyline();
            if !forward {
                pl.reverse();
            }
            out.extend(pl);
            v = if forward { self.incidence[i][1] } else { self.incidence[i][0] };
        }
        Ok(out)
    }

    /// Apply a map to every sample point (for symmetry checks).
    pub fn map_points(&self, f: impl Fn(SpherePoint) -> SpherePoint, relabel: impl Fn(&str) -> String) -> RayGraph {
        let mut g = self.clone();
        for r in &mut g.rays {
            r.component = f(r.component);
            r.samples = r.samples.iter().map(|&p| f(p)).collect();
            r.status = match &r.status {
                RayStatus::Landed { approx, certificate } => RayStatus::Landed {
                    approx: f(*approx),
                    certificate: certificate.map(|mut c| {
                        c.point = f(c.point);
                        c
                    }),
                },
                RayStatus::TerminatedPrecritical { point } => RayStatus::TerminatedPrecritical { point: f(*point) },
                RayStatus::BudgetExhausted { last } => RayStatus::BudgetExhausted { last: f(*last) },
            };
        }
        for v in &mut g.vertices {
            v.point = f(v.point);
        }
        for t in &mut g.tags {
            t.component = relabel(&t.component);
        }
        g
    }

    /// Densified sample cloud on the unit sphere.
    pub fn cloud(&self, delta: f64) -> Vec<[f64; 3]> {
        let mut out = Vec::new();
        for r in &self.rays {
            densify(&r.polyline(), delta, &mut out);
        }
        out
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            role: self.role.clone(),
            rays: self.tags.iter().map(|t| t.to_string()).collect(),
            vertices: self.vertices.clone(),
            incidence: self
                .incidence
                .iter()
                .enumerate()
                .flat_map(|(i, e)| [[2 * i, e[0]], [2 * i + 1, e[1]]])
                .collect(),
            warnings: self.warnings.clone(),
        }
    }

    /// DOT rendering of the combinatorial graph.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph rays {\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let shape = match v.kind {
                VertexKind::Center => "box",
                VertexKind::Landing => "circle",
            };
            let _ = writeln!(s, "  v{i} [shape={shape}, label=\"{}\"];", v.point);
        }
        for (t, e) in self.tags.iter().zip(&self.incidence) {
            let _ = writeln!(s, "  v{} -- v{} [label=\"{}\"];", e[0], e[1], t);
        }
        s.push_str("}\n");
        s
    }
}

/// `{role, rays, vertices, incidence: [[ray_end, vertex]...]}`; ray end
/// `2i` is the centre end of ray `i` and `2i+1` its landing end.
#[derive(Clone, Debug, Serialize)]
pub struct GraphJson {
    pub role: Role,
    pub rays: Vec<String>,
    pub vertices: Vec<Vertex>,
    pub incidence: Vec<[usize; 2]>,
    pub warnings: Vec<String>,
}

pub(crate) fn densify(pl: &[SpherePoint], delta: f64, out: &mut Vec<[f64; 3]>) {
    let pts: Vec<[f64; 3]> = pl.iter().map(|p| p.embed()).collect();
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        let k = (d / delta).ceil().max(1.0) as usize;
        for i in 0..k {
            let s = i as f64 / k as f64;
            let mut p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])];
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if n > 0.0 {
                p = [p[0] / n, p[1] / n, p[2] / n];
            }
            out.push(p);
        }
    }
    if let Some(&l) = pts.last() {
        out.push(l);
    }
}

/// Uniform grid over the sphere's bounding cube for nearest-point queries.
struct Grid {
    cell: f64,
    map: HashMap<(i32, i32, i32), Vec<[f64; 3]>>,
}

impl Grid {
    fn new(pts: &[[f64; 3]], cell: f64) -> Grid {
        let mut map: HashMap<(i32, i32, i32), Vec<[f64; 3]>> = HashMap::new();
        for &p in pts {
            map.entry(Self::key(p, cell)).or_default().push(p);
        }
        Grid { cell, map }
    }

    fn key(p: [f64; 3], cell: f64) -> (i32, i32, i32) {
        ((p[0] / cell).floor() as i32, (p[1] / cell).floor() as i32, (p[2] / cell).floor() as i32)
    }

    fn nearest(&self, p: [f64; 3]) -> f64 {
        let k = Self::key(p, self.cell);
        let max_ring = (2.0 / self.cell).ceil() as i32 + 2;
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(v) = self.map.get(&(k.0 + dx, k.1 + dy, k.2 + dz)) {
                            for q in v {
                                let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
                                best = best.min(d);
                            }
                        }
                    }
                }
            }
            if best <= ring as f64 * self.cell {
                break;
            }
        }
        best
    }
}

/// `max_{a in A} min_{b in B} ρ(a, b)`.
pub fn directed_hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if b.is_empty() {
        return f64::INFINITY;
    }
    let grid = Grid::new(b, 0.02);
    a.par_iter().map(|&p| grid.nearest(p)).reduce(|| 0.0, f64::max)
}

/// Hausdorff distance of two graphs and the sampling bound used.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HausdorffReport {
    pub distance: f64,
    pub delta_s: f64,
}

pub fn graph_hausdorff(g1: &RayGraph, g2: &RayGraph) -> HausdorffReport {
    let (a, b) = (g1.cloud(DELTA_S), g2.cloud(DELTA_S));
    let d = directed_hausdorff(&a, &b).max(directed_hausdorff(&b, &a));
    HausdorffReport { distance: d, delta_s: DELTA_S }
}

/// Same tagged rays with the same co-landing partition of ray ends.
pub fn graph_iso(g1: &RayGraph, g2: &RayGraph) -> Result<bool> {
    let mut t1 = g1.tags.clone();
    let mut t2 = g2.tags.clone();
    t1.sort();
    t2.sort();
    if t1 != t2 {
        return Ok(false);
    }
    for g in [g1, g2] {
        if let Some(i) = g.rays.iter().position(|r| r.certificate().is_none()) {
            return Err(Error::indeterminate(format!("ray {} has no certified landing point", g.tags[i])));
        }
    }
    let partition = |g: &RayGraph| -> Vec<Vec<RayTag>> {
        let mut by_vertex: BTreeMap<usize, Vec<RayTag>> = BTreeMap::new();
        for (t, e) in g.tags.iter().zip(&g.incidence) {
            by_vertex.entry(e[1]).or_default().push(t.clone());
        }
        let mut parts: Vec<Vec<RayTag>> = by_vertex
            .into_values()
            .map(|mut v| {
                v.sort();
                v
            })
            .collect();
        parts.sort();
        parts
    };
    Ok(partition(g1) == partition(g2))
}

/// Charts by label, memoized rays and a shared landing cache.
pub struct Workspace {
    pub map: MapRep,
    pub opts: RayOptions,
    charts: BTreeMap<String, BottcherChart>,
    rays: Mutex<HashMap<RayTag, InternalRay>>,
    cache: LandingCache,
}

impl Workspace {
    pub fn new(map: MapRep) -> Self {
        Workspace {
            map,
            opts: RayOptions::default(),
            charts: BTreeMap::new(),
            rays: Mutex::new(HashMap::new()),
            cache: LandingCache::new(),
        }
    }

    pub fn add_chart(&mut self, label: impl Into<String>, chart: BottcherChart) {
        self.charts.insert(label.into(), chart);
    }

    pub fn chart(&self, label: &str) -> Result<&BottcherChart> {
        self.charts
            .get(label)
            .ok_or_else(|| Error::invalid(format!("no component labelled {label}")))
    }

    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.charts.keys()
    }

    pub fn ray(&self, tag: &RayTag) -> Result<InternalRay> {
        if let Some(r) = self.rays.lock().unwrap().get(tag) {
            return Ok(r.clone());
        }
        let ch = self.chart(&tag.component)?;
        let mut r = trace_ray_cached(ch, tag.angle, &self.opts, &self.cache)?;
        r.label = Some(tag.component.clone());
        self.rays.lock().unwrap().insert(tag.clone(), r.clone());
        Ok(r)
    }

    /// Trace several rays in parallel; results follow the input order.
    pub fn rays(&self, tags: &[RayTag]) -> Vec<Result<InternalRay>> {
        tags.par_iter().map(|t| self.ray(t)).collect()
    }

    /// Assemble a graph from tags, failing on any ray that did not land.
    pub fn graph(&self, role: Role, tags: &[RayTag]) -> Result<RayGraph> {
        let rays = self.rays(tags);
        let mut items = Vec::with_capacity(tags.len());
        for (t, r) in tags.iter().zip(rays) {
            items.push((t.clone(), r?));
        }
        RayGraph::assemble(role, items)
    }
}

/// Superattracting fixed points in the order of the source roots when
/// available, else by real then imaginary part.
pub fn superattracting_roots(m: &MapRep) -> Result<Vec<SpherePoint>> {
    if let Some(src) = &m.source {
        let fps = m.fixed_points()?;
        return Ok(src
            .roots
            .iter()
            .filter(|(r, _)| {
                fps.iter()
                    .any(|f| f.kind == FixedKind::Superattracting && sphere_dist(f.point, SpherePoint::from(*r)) < 1e-8)
            })
            .map(|&(r, _)| SpherePoint::from(r))
            .collect());
    }
    let mut v: Vec<SpherePoint> = m
        .fixed_points()?
        .into_iter()
        .filter(|f| f.kind == FixedKind::Superattracting)
        .map(|f| f.point)
        .collect();
    v.sort_by_key(|&p| canonical_key(p));
    Ok(v)
}

/// Angles `θ` with `d^k θ` fixed under multiplication by `d`.
pub fn level_angles(d: usize, k: usize) -> Vec<Angle> {
    let mut s: Vec<Angle> = (0..d - 1).map(|i| Angle::new(i as u64, d as u64 - 1).unwrap()).collect();
    for _ in 0..k {
        s = s.iter().flat_map(|a| a.preimages(d as u64)).collect();
    }
    s.sort();
    s.dedup();
    s
}

/// Immediate-basin charts labelled `r1, r2, ...`.
pub fn root_workspace(m: &MapRep) -> Result<Workspace> {
    let mut ws = Workspace::new(m.clone());
    for (i, r) in superattracting_roots(m)?.into_iter().enumerate() {
        ws.add_chart(format!("r{}", i + 1), chart_at_root(m, r)?);
    }
    Ok(ws)
}

/// The Newton graph at `level`: the component containing ∞ of the
/// preimage of the fixed rays.
pub fn newton_graph(m: &MapRep, level: usize) -> Result<RayGraph> {
    let mut ws = root_workspace(m)?;
    let mut warnings = Vec::new();
    // components by depth, labelled by their parent and preimage index
    let mut frontier: Vec<(String, usize)> = ws.labels().map(|l| (l.clone(), 0)).collect();
    let mut all = frontier.clone();
    for depth in 1..=level {
        let mut next = Vec::new();
        for (label, _) in &frontier {
            let parent = ws.chart(label)?.clone();
            let mut pre = m.preimages(parent.center)?;
            pre.retain(|(p, _)| sphere_dist(*p, parent.center) > 1e-8);
            pre.sort_by_key(|(p, _)| canonical_key(*p));
            for (k, (p, mult)) in pre.into_iter().enumerate() {
                let child = format!("{label}.{}", k + 1);
                if mult > 1 {
                    warnings.push(format!("{child}: critical point in component, skipped"));
                    continue;
                }
                match chart_at_preimage(m, &parent, p) {
                    Ok(ch) => {
                        ws.add_chart(child.clone(), ch);
                        next.push((child, depth));
                    }
                    Err(e) => warnings.push(format!("{child}: {e}")),
                }
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    let mut tags = Vec::new();
    for (label, depth) in &all {
        let d = ws.chart(label)?.root_degree;
        for a in level_angles(d, level - depth) {
            tags.push(RayTag::new(label.clone(), a));
        }
    }
    let rays = ws.rays(&tags);
    let mut items = Vec::new();
    for (t, r) in tags.into_iter().zip(rays) {
        match r {
            Ok(r) if r.landed() => items.push((t, r)),
            Ok(r) => warnings.push(format!("{t}: {:?}", r.status)),
            Err(e) => warnings.push(format!("{t}: {e}")),
        }
    }
    let g = RayGraph::assemble(Role::DeltaM(level), items)?;
    let mut g = g
        .component_containing(Infinity)
        .ok_or_else(|| Error::numerical("no ray of the Newton graph lands at infinity"))?;
    g.warnings = warnings;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::newton_from_poly;
    use crate::poly::Poly;
    use crate::sphere::Finite;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn z3m1() -> MapRep {
        newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 0.0, 1.0])).unwrap()
    }

    #[test]
    fn level_zero_graphs() {
        let g = newton_graph(&z3m1(), 0).unwrap();
        assert_eq!(g.rays.len(), 3);
        let inf = g.vertices.iter().position(|v| sphere_dist(v.point, Infinity) < 1e-9).unwrap();
        assert_eq!(g.degrees()[inf], 3);
        assert_eq!(g.vertices.iter().filter(|v| v.kind == VertexKind::Center).count(), 3);
        let g2 = newton_graph(&newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 1.0])).unwrap(), 0).unwrap();
        assert_eq!(g2.rays.len(), 2);
        assert!(!graph_iso(&g, &g2).unwrap());
        assert!(graph_iso(&g, &g).unwrap());
        assert_eq!(graph_hausdorff(&g, &g).distance, 0.0);
    }

    #[test]
    fn level_one_contains_the_pole() {
        let g = newton_graph(&z3m1(), 1).unwrap();
        assert!(g.vertices.iter().any(|v| v.point.finite().is_some_and(|z| z.norm() < 1e-9)));
        assert!(g.is_connected());
        // every landing vertex is an iterated preimage of infinity
        let m = z3m1();
        for v in g.vertices.iter().filter(|v| v.kind == VertexKind::Landing) {
            assert!(m.iterate(v.point, 2) == Infinity || sphere_dist(m.iterate(v.point, 2), Infinity) < 1e-6);
        }
    }

    #[test]
    fn levels_are_nested() {
        let m = z3m1();
        let g1 = newton_graph(&m, 1).unwrap();
        let g2 = newton_graph(&m, 2).unwrap();
        let d = directed_hausdorff(&g1.cloud(DELTA_S), &g2.cloud(DELTA_S));
        assert!(d < DELTA_S, "{d}");
        assert!(g2.rays.len() > g1.rays.len());
    }

    #[test]
    fn rotation_symmetry_of_delta_zero() {
        let g = newton_graph(&z3m1(), 0).unwrap();
        let om = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let rot = g.map_points(
            |p| match p {
                Finite(z) => Finite(z * om),
                _ => p,
            },
            |l| match l {
                "r1" => "r2".into(),
                "r2" => "r3".into(),
                _ => "r1".into(),
            },
        );
        let h = graph_hausdorff(&g, &rot);
        assert!(h.distance <= h.delta_s, "{}", h.distance);
    }

    #[test]
    fn json_and_dot() {
        let g = newton_graph(&z3m1(), 0).unwrap();
        let v = serde_json::to_value(g.to_json()).unwrap();
        assert_eq!(v["incidence"].as_array().unwrap().len(), 6);
        assert!(g.to_dot().contains("--"));
    }
}
