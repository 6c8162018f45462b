//! Attracting cycles, basin labelling and the hyperbolic type of quartic
//! Newton maps.
//!
//! Whether a critical point lies in the immediate basin of a point `T` of
//! an attracting cycle of `g = f^p` is decided by following the gradient
//! flow of the basin's potential downhill from the critical point. Near `T`
//! that flow is the lift under `g^n` of the straight segment from `g^n(c)`
//! to `T`; a critical point is a saddle of the potential and has one
//! downhill path per preimage sheet. The lowest saddle of the immediate
//! component sits on the boundary of the sublevel disk around `T`, so one
//! of its paths ends at `T`. A saddle in any other component only reaches
//! preimages of `T` lying in that component.

use crate::error::{Error, Result};
use crate::newton::MapRep;
use crate::poly::{roots_of, CLUSTER_TOL};
use crate::sphere::{sphere_dist, Finite, Infinity, SpherePoint};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Longest period searched for by [`detect_cycle`].
pub const MAX_PERIOD: usize = 64;
const RECUR_TOL: f64 = 1e-9;
const CAPTURE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    Superattracting,
    Attracting,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleRecord {
    pub points: Vec<SpherePoint>,
    pub period: usize,
    pub multiplier: Complex64,
    pub kind: CycleKind,
}

impl CycleRecord {
    /// Index of the cycle point within `tol` (sphere metric) of `z`.
    pub fn index_near(&self, z: SpherePoint, tol: f64) -> Option<usize> {
        self.points.iter().position(|&q| sphere_dist(q, z) < tol)
    }

    /// Two records describe the same cycle.
    pub fn same_cycle(&self, other: &CycleRecord) -> bool {
        self.period == other.period && other.points.iter().all(|&q| self.index_near(q, 1e-7).is_some())
    }

    /// Largest one-step mismatch `dist(f(q_i), q_{i+1})`.
    pub fn residual(&self, m: &MapRep) -> f64 {
        (0..self.period)
            .map(|i| sphere_dist(m.eval(self.points[i]), self.points[(i + 1) % self.period]))
            .fold(0.0, f64::max)
    }
}

/// Where an orbit ends up.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "fate", rename_all = "snake_case")]
pub enum OrbitFate {
    /// Converges to the root with this index in the source order.
    Root { index: usize },
    /// Converges to a free cycle. `phase` is the index of the cycle point
    /// approached along iterates whose count is a multiple of the period.
    Cycle { cycle: CycleRecord, phase: usize },
}

fn roots(m: &MapRep) -> Result<Vec<Complex64>> {
    let src = m.source.as_ref().ok_or_else(|| Error::invalid("classification needs a Newton map with known roots"))?;
    Ok(src.roots.iter().map(|r| r.0).collect())
}

fn near(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

/// `f^n(z)` and its derivative, `None` if the orbit leaves the plane.
fn iterate_d(m: &MapRep, z: Complex64, n: usize) -> Option<(Complex64, Complex64)> {
    let mut w = z;
    let mut d = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        let (v, dv) = m.eval_d(w);
        d *= dv;
        w = v;
        if !(w.re.is_finite() && w.im.is_finite() && d.re.is_finite() && d.im.is_finite()) {
            return None;
        }
    }
    Some((w, d))
}

/// Newton solve of `f^p(z) = z` from `z0`.
fn refine_cycle(m: &MapRep, z0: Complex64, p: usize) -> Option<Complex64> {
    let mut z = z0;
    for _ in 0..60 {
        let (w, d) = iterate_d(m, z, p)?;
        let den = d - 1.0;
        if den.norm() < 1e-300 {
            return None;
        }
        let step = (w - z) / den;
        z -= step;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    // Superattracting cycles converge fast; a stalled solve is still usable
    // if the recurrence itself is tight.
    let (w, _) = iterate_d(m, z, p)?;
    near(w, z, 1e-12).then_some(z)
}

/// Follow the orbit of `seed` for at most `budget` steps.
///
/// Convergence to a root is reported when an iterate comes within a relative
/// distance of `1e-9` of it; otherwise a near-recurrence of period at most
/// [`MAX_PERIOD`] is refined into a cycle.
pub fn detect_cycle(m: &MapRep, seed: SpherePoint, budget: usize) -> Result<OrbitFate> {
    let rts = roots(m)?;
    let mut hist: Vec<Complex64> = Vec::with_capacity(budget + 1);
    let mut p = seed;
    for k in 0..=budget {
        let z = match p {
            Finite(z) => z,
            Infinity => {
                // ∞ is a repelling fixed point; an orbit through a pole
                // lands on it and stays.
                return Err(Error::indeterminate("orbit reached infinity"));
            }
        };
        if let Some(i) = rts.iter().position(|&r| near(z, r, CAPTURE_TOL)) {
            return Ok(OrbitFate::Root { index: i });
        }
        hist.push(z);
        for per in 1..=MAX_PERIOD.min(k) {
            if near(z, hist[k - per], RECUR_TOL) {
                if let Some(cycle) = build_cycle(m, z, per) {
                    // f^k(seed) ≈ q_0
                    let phase = (cycle.period - k % cycle.period) % cycle.period;
                    if cycle.period == 1 {
                        if let Some(i) = rts.iter().position(|&r| near(cycle.points[0].finite().unwrap_or(r), r, 1e-7)) {
                            return Ok(OrbitFate::Root { index: i });
                        }
                    }
                    return Ok(OrbitFate::Cycle { cycle, phase });
                }
                break;
            }
        }
        p = m.eval(p);
    }
    Err(Error::indeterminate(format!("orbit unresolved after {budget} steps")))
}

fn build_cycle(m: &MapRep, z: Complex64, per: usize) -> Option<CycleRecord> {
    let q0 = refine_cycle(m, z, per)?;
    let mut pts = vec![q0];
    let mut mult = Complex64::new(1.0, 0.0);
    let mut w = q0;
    for i in 0..per {
        let (v, dv) = m.eval_d(w);
        mult *= dv;
        if i + 1 < per {
            pts.push(v);
        }
        w = v;
    }
    // The recurrence may have found a multiple of the true period.
    for sub in 1..per {
        if per % sub == 0 && near(pts[sub], q0, 1e-9) {
            return build_cycle(m, q0, sub);
        }
    }
    let kind = if mult.norm() < 1e-8 {
        CycleKind::Superattracting
    } else if mult.norm() < 1.0 - 1e-9 {
        CycleKind::Attracting
    } else {
        CycleKind::Indeterminate
    };
    let points: Vec<SpherePoint> = pts.into_iter().map(Finite).collect();
    Some(CycleRecord { points, period: per, multiplier: mult, kind })
}

/// A target of the dynamics: a root or a point of a free cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Target {
    point: Complex64,
    period: usize,
}

/// End points of the downhill paths from `c` for the potential of `t`.
///
/// A path that enters the trapping disk `B` about `T` lies in the
/// immediate component and is reported as ending at `T`.
fn descent_ends(m: &MapRep, c: Complex64, t: Target, scale: f64) -> Option<Vec<Complex64>> {
    let eps = trap_radius(m, t, scale)?;
    if near(c, t.point, 1e-12) {
        return Some(vec![t.point]);
    }
    let depth = depth_into(m, c, t, eps)?;
    if depth == 0 {
        return Some(vec![t.point]);
    }
    let f = |z: Complex64| iterate_d(m, z, depth * t.period).map(|(w, d)| (w - t.point, d));
    let f0 = f(c)?.0;
    if f0.norm() == 0.0 {
        return Some(vec![t.point]);
    }

    // Circle on which F deviates from F(c) by about 1e-3 of its value; the
    // local minima of |F| on it are the downhill directions.
    let samples = 48;
    let circle = |rho: f64| -> Option<Vec<(Complex64, Complex64)>> {
        (0..samples)
            .map(|k| {
                let z = c + Complex64::from_polar(rho, std::f64::consts::TAU * k as f64 / samples as f64);
                f(z).map(|(w, _)| (z, w))
            })
            .collect()
    };
    let mut rho = 1e-4 * (1.0 + c.norm());
    let mut ring = circle(rho)?;
    for _ in 0..8 {
        let dev = ring.iter().map(|(_, w)| (w / f0 - 1.0).norm()).fold(0.0, f64::max);
        if !(dev.is_finite() && dev > 0.0) {
            return None;
        }
        if (3e-4..3e-3).contains(&dev) {
            break;
        }
        // F - F(c) is at least quadratic in z - c.
        rho *= (1e-3 / dev).sqrt().clamp(1e-3, 1e3);
        ring = circle(rho)?;
    }

    let mut ends = Vec::new();
    for k in 0..samples {
        let a = ring[(k + samples - 1) % samples].1.norm();
        let b = ring[k].1.norm();
        let d = ring[(k + 1) % samples].1.norm();
        if b < a && b <= d && b < f0.norm() {
            ends.push(descend(m, ring[k].0, depth, t, eps)?);
        }
    }
    (!ends.is_empty()).then_some(ends)
}

/// Radius of a disk `B` about `T` that `g` maps into a strictly smaller
/// concentric disk, so that `B` lies in the immediate basin. Checked by the
/// maximum principle on 16 boundary samples, halving from `scale / 2`.
fn trap_radius(m: &MapRep, t: Target, scale: f64) -> Option<f64> {
    let lambda = iterate_d(m, t.point, t.period)?.1.norm();
    let k = if lambda < 0.25 { 0.5 } else { (1.0 + lambda) / 2.0 };
    let mut rho = 0.5 * scale;
    'outer: for _ in 0..40 {
        for j in 0..16 {
            let z = t.point + Complex64::from_polar(rho, std::f64::consts::TAU * j as f64 / 16.0);
            match iterate_d(m, z, t.period) {
                Some((w, _)) if (w - t.point).norm() <= k * rho => {}
                _ => {
                    rho *= 0.5;
                    continue 'outer;
                }
            }
        }
        return Some(rho);
    }
    None
}

/// Least `n` with `g^n(z)` in the disk of radius `eps` about `T`.
fn depth_into(m: &MapRep, z: Complex64, t: Target, eps: f64) -> Option<usize> {
    let mut v = z;
    for n in 0..=400 {
        if (v - t.point).norm() < eps {
            return Some(n);
        }
        v = iterate_d(m, v, t.period)?.0;
    }
    None
}

/// Follow the lift of the segment from `g^n(z0)` to `T`, lowering `n` each
/// time the path gets one step closer to `B`. A path ending outside `B` is
/// polished to its end point, a simple zero of `g^n - T`.
fn descend(m: &MapRep, z0: Complex64, mut depth: usize, t: Target, eps: f64) -> Option<Complex64> {
    let mut z = z0;
    loop {
        let f = |z: Complex64| iterate_d(m, z, depth * t.period).map(|(w, d)| (w - t.point, d));
        let w0 = f(z)?.0;
        let mut s = 1.0f64;
        let mut q = 0.7f64;
        let mut iters = 0;
        let mut lowered = false;
        while s * w0.norm() > 1e-9 * eps {
            iters += 1;
            if iters > 4000 {
                return None;
            }
            let target = w0 * (s * q);
            // Path-following accuracy: a small fraction of the step in F.
            let tol = 1e-4 * w0.norm() * s * (1.0 - q);
            match correct(&f, z, target, tol) {
                Some(y) => {
                    z = y;
                    s *= q;
                    q = (q * q).max(0.25);
                    if depth_into(m, z, t, eps).is_some_and(|k| k < depth) {
                        lowered = true;
                        break;
                    }
                }
                None => {
                    q = q.sqrt();
                    if q > 0.9999 {
                        // Deep below B's level the noise floor of F is
                        // reached near a multiple zero; stop there.
                        if s * w0.norm() < 1e-6 * eps {
                            break;
                        }
                        return None;
                    }
                }
            }
        }
        if lowered {
            depth = depth_into(m, z, t, eps)?;
            if depth == 0 {
                return Some(t.point);
            }
            continue;
        }
        // The end is not T (the path never came within one step of B). Polish
        // it when the zero is simple; near-multiple zeros keep the estimate.
        let mut y = z;
        for _ in 0..50 {
            let (w, d) = f(y)?;
            let step = w / d;
            y -= step;
            if !step.norm().is_finite() || (y - z).norm() > 1e-3 * eps {
                return Some(z);
            }
            if step.norm() <= 1e-14 * (1.0 + y.norm()) {
                break;
            }
        }
        return Some(y);
    }
}

/// Newton correction onto `F = target` to within `tol`. Rejects
/// non-contracting iterations and steps across which `F'` changes by more
/// than half, which guards against jumping to another sheet.
fn correct(f: &dyn Fn(Complex64) -> Option<(Complex64, Complex64)>, z: Complex64, target: Complex64, tol: f64) -> Option<Complex64> {
    let mut y = z;
    let mut first = 0.0;
    let mut d0 = None;
    for j in 0..8 {
        let (w, d) = f(y)?;
        let d0 = *d0.get_or_insert(d);
        if (w - target).norm() <= tol {
            return ((d / d0 - 1.0).norm() < 0.5).then_some(y);
        }
        if d.norm() == 0.0 {
            return None;
        }
        let step = (w - target) / d;
        y -= step;
        let len = step.norm();
        if j == 0 {
            first = len;
        } else if len > 0.3 * first {
            return None;
        }
        if len <= 1e-14 * (1.0 + y.norm()) {
            let d = f(y)?.1;
            return ((d / d0 - 1.0).norm() < 0.5).then_some(y);
        }
    }
    None
}

fn reaches(ends: &[Complex64], goals: &[Complex64]) -> bool {
    ends.iter().any(|&e| goals.iter().any(|&g| near(e, g, 1e-6)))
}

/// Hyperbolic type of a quartic Newton map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeLabel {
    A,
    B,
    C,
    D,
    IE,
    FE1,
    FE2,
    Unresolved,
}

impl TypeLabel {
    pub const ALL: [TypeLabel; 8] = [
        TypeLabel::A,
        TypeLabel::B,
        TypeLabel::C,
        TypeLabel::D,
        TypeLabel::IE,
        TypeLabel::FE1,
        TypeLabel::FE2,
        TypeLabel::Unresolved,
    ];

    /// Byte code used in label grids.
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(b: u8) -> Option<TypeLabel> {
        TypeLabel::ALL.get(b as usize).copied()
    }
}

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TypeLabel::A => "A",
            TypeLabel::B => "B",
            TypeLabel::C => "C",
            TypeLabel::D => "D",
            TypeLabel::IE => "IE",
            TypeLabel::FE1 => "FE1",
            TypeLabel::FE2 => "FE2",
            TypeLabel::Unresolved => "unresolved",
        };
        f.write_str(s)
    }
}

/// Fate of one additional critical point, with its immediate-basin verdict.
#[derive(Debug)]
struct CritFate {
    point: Complex64,
    fate: OrbitFate,
    target: Target,
}

fn crit_fate(m: &MapRep, c: Complex64, budget: usize) -> Option<CritFate> {
    let fate = detect_cycle(m, Finite(c), budget).ok()?;
    let target = match &fate {
        OrbitFate::Root { index } => Target { point: m.source.as_ref()?.roots[*index].0, period: 1 },
        OrbitFate::Cycle { cycle, phase } => {
            if cycle.kind == CycleKind::Indeterminate {
                return None;
            }
            Target { point: cycle.points[*phase].finite()?, period: cycle.period }
        }
    };
    Some(CritFate { point: c, fate, target })
}

/// The additional critical points: zeros of `P''`, with multiplicity.
pub fn additional_critical_points(m: &MapRep) -> Result<Vec<Complex64>> {
    let src = m.source.as_ref().ok_or_else(|| Error::invalid("classification needs a Newton map with known roots"))?;
    if src.total_degree() != 4 {
        return Err(Error::invalid("classification is defined for quartic polynomials"));
    }
    let p2 = src.poly().derivative().derivative();
    let mut out = Vec::new();
    for (z, k) in roots_of(&p2, CLUSTER_TOL)? {
        out.extend(std::iter::repeat_n(z, k));
    }
    Ok(out)
}

/// Type of a quartic Newton map from the fates of its two additional
/// critical points. Unresolved orbits, non-attracting cycles and failed
/// descents give [`TypeLabel::Unresolved`].
pub fn classify_type(m: &MapRep, budget: usize) -> Result<TypeLabel> {
    let crit = additional_critical_points(m)?;
    let rts = roots(m)?;
    let scale = {
        let mut d = f64::INFINITY;
        for i in 0..rts.len() {
            for j in i + 1..rts.len() {
                d = d.min((rts[i] - rts[j]).norm());
            }
        }
        d.min(1.0)
    };
    let mut fates = Vec::new();
    for &c in &crit {
        match crit_fate(m, c, budget) {
            Some(f) => fates.push(f),
            None => return Ok(TypeLabel::Unresolved),
        }
    }
    let root = |f: &CritFate| matches!(f.fate, OrbitFate::Root { .. });
    let (ra, rb) = (root(&fates[0]), root(&fates[1]));
    if !ra && !rb {
        let (OrbitFate::Cycle { cycle: ca, .. }, OrbitFate::Cycle { cycle: cb, .. }) = (&fates[0].fate, &fates[1].fate)
        else {
            unreachable!()
        };
        // Each free cycle holds a critical point in its immediate basin.
        if !ca.same_cycle(cb) {
            return Ok(TypeLabel::D);
        }
    }
    // A free critical point alone in its cycle's basin is immediate, so
    // only root-attracted points and shared cycles need a descent.
    let need = [ra || !rb, rb || !ra];
    let Some(imm) = immediacy(m, &fates, need, scale) else {
        return Ok(TypeLabel::Unresolved);
    };
    Ok(match (ra, rb) {
        _ if (ra && imm[0]) || (rb && imm[1]) => TypeLabel::IE,
        (true, true) => TypeLabel::FE2,
        (true, false) | (false, true) => TypeLabel::FE1,
        (false, false) => {
            let same = same_target(&fates[0].target, &fates[1].target);
            match (imm[0], imm[1]) {
                (true, true) if same => TypeLabel::A,
                (true, true) => TypeLabel::B,
                (true, false) | (false, true) => TypeLabel::C,
                (false, false) => TypeLabel::Unresolved,
            }
        }
    })
}

fn same_target(a: &Target, b: &Target) -> bool {
    a.period == b.period && near(a.point, b.point, 1e-9)
}

/// Immediate-basin verdicts for the critical points flagged in `need`.
///
/// When both share a target the lower saddle is resolved first: a higher
/// saddle whose descent ends where the lower one's did is in the same
/// component.
fn immediacy(m: &MapRep, fates: &[CritFate], need: [bool; 2], scale: f64) -> Option<[bool; 2]> {
    let shared = need[0] && need[1] && same_target(&fates[0].target, &fates[1].target);
    let mut order = [0usize, 1];
    if shared {
        let t = fates[0].target;
        let eps = trap_radius(m, t, scale)?;
        let (mut la, mut lb) = (fates[0].point, fates[1].point);
        for _ in 0..400 {
            if (la - t.point).norm() < eps || (lb - t.point).norm() < eps {
                break;
            }
            la = iterate_d(m, la, t.period)?.0;
            lb = iterate_d(m, lb, t.period)?.0;
        }
        if (lb - t.point).norm() < (la - t.point).norm() {
            order = [1, 0];
        }
    }
    let mut imm = [false; 2];
    let mut low_ends: Option<Vec<Complex64>> = None;
    for i in order.into_iter().filter(|&i| need[i]) {
        let f = &fates[i];
        let ends = descent_ends(m, f.point, f.target, scale)?;
        let mut goals = vec![f.target.point];
        if shared {
            if let Some(le) = &low_ends {
                goals.extend(le.iter().copied());
            }
        }
        imm[i] = reaches(&ends, &goals);
        if imm[i] && low_ends.is_none() {
            low_ends = Some(ends);
        }
    }
    Some(imm)
}

/// Axis-aligned rectangle in the plane, rows running top to bottom.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub center: Complex64,
    pub width: f64,
    pub height: f64,
}

impl Region {
    pub fn new(center: Complex64, width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::invalid("region must have positive finite size"));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::invalid("region must be bounded"));
        }
        Ok(Region { center, width, height })
    }

    pub fn square(center: Complex64, width: f64) -> Result<Self> {
        Region::new(center, width, width)
    }

    /// Centre of pixel `(col, row)` at resolution `(w, h)`.
    pub fn pixel(&self, col: usize, row: usize, res: (usize, usize)) -> Complex64 {
        let x = self.center.re - self.width / 2.0 + (col as f64 + 0.5) * self.width / res.0 as f64;
        let y = self.center.im + self.height / 2.0 - (row as f64 + 0.5) * self.height / res.1 as f64;
        Complex64::new(x, y)
    }

    /// Pixel containing `z`, if inside.
    pub fn locate(&self, z: Complex64, res: (usize, usize)) -> Option<(usize, usize)> {
        let fx = (z.re - (self.center.re - self.width / 2.0)) / self.width * res.0 as f64;
        let fy = ((self.center.im + self.height / 2.0) - z.im) / self.height * res.1 as f64;
        if fx < 0.0 || fy < 0.0 || fx >= res.0 as f64 || fy >= res.1 as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }
}

/// Target of one pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PixelTarget {
    Root { index: usize },
    Cycle { id: usize, phase: usize },
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PixelLabel {
    pub target: PixelTarget,
    /// Flood-fill component, `u32::MAX` for unresolved pixels.
    pub component: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct LabelGrid {
    pub region: Region,
    pub resolution: (usize, usize),
    pub root_points: Vec<Complex64>,
    pub cycles: Vec<CycleRecord>,
    pub labels: Vec<PixelLabel>,
    pub components: usize,
}

impl LabelGrid {
    pub fn at(&self, col: usize, row: usize) -> PixelLabel {
        self.labels[row * self.resolution.0 + col]
    }

    pub fn at_point(&self, z: Complex64) -> Option<PixelLabel> {
        self.region.locate(z, self.resolution).map(|(c, r)| self.at(c, r))
    }

    /// Component containing the target point itself.
    pub fn immediate_component(&self, target: PixelTarget) -> Option<u32> {
        self.labels.iter().find(|l| l.target == target)?;
        let z = match target {
            PixelTarget::Root { index } => self.root_points.get(index).copied()?,
            PixelTarget::Cycle { id, phase } => self.cycles.get(id)?.points.get(phase)?.finite()?,
            PixelTarget::Unresolved => return None,
        };
        let l = self.at_point(z)?;
        (l.target == target).then_some(l.component)
    }
}

/// Per-pixel basin targets followed by a sequential 4-adjacency flood fill.
///
/// Free cycles are found from the orbits of the free critical points (every
/// attracting cycle attracts one). A pixel is assigned once its orbit comes
/// within `1e-9` of a root or a cycle point; pixels that exhaust the budget
/// stay unresolved.
pub fn label_components(m: &MapRep, region: Region, res: (usize, usize), budget: usize) -> Result<LabelGrid> {
    if res.0 == 0 || res.1 == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let rts = roots(m)?;
    let mut cycles: Vec<CycleRecord> = Vec::new();
    for c in m.free_critical_points()? {
        if let Ok(OrbitFate::Cycle { cycle, .. }) = detect_cycle(m, c.point, budget) {
            if cycle.kind != CycleKind::Indeterminate && !cycles.iter().any(|k| k.same_cycle(&cycle)) {
                cycles.push(cycle);
            }
        }
    }
    let cyc_pts: Vec<(usize, usize, Complex64)> = cycles
        .iter()
        .enumerate()
        .flat_map(|(id, cy)| cy.points.iter().enumerate().filter_map(move |(j, q)| q.finite().map(|z| (id, j, z))))
        .collect();

    let targets: Vec<PixelTarget> = (0..res.0 * res.1)
        .into_par_iter()
        .map(|idx| {
            let mut z = region.pixel(idx % res.0, idx / res.0, res);
            for k in 0..=budget {
                if let Some(i) = rts.iter().position(|&r| near(z, r, CAPTURE_TOL)) {
                    return PixelTarget::Root { index: i };
                }
                if let Some(&(id, j, _)) = cyc_pts.iter().find(|q| near(z, q.2, CAPTURE_TOL)) {
                    let p = cycles[id].period;
                    return PixelTarget::Cycle { id, phase: (j + p - k % p) % p };
                }
                z = m.eval_d(z).0;
                if !(z.re.is_finite() && z.im.is_finite()) {
                    break;
                }
            }
            PixelTarget::Unresolved
        })
        .collect();

    let mut labels: Vec<PixelLabel> =
        targets.iter().map(|&target| PixelLabel { target, component: u32::MAX }).collect();
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if labels[start].component != u32::MAX || labels[start].target == PixelTarget::Unresolved {
            continue;
        }
        let t = labels[start].target;
        labels[start].component = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % res.0, i / res.0);
            let mut nb = [usize::MAX; 4];
            if x > 0 {
                nb[0] = i - 1;
            }
            if x + 1 < res.0 {
                nb[1] = i + 1;
            }
            if y > 0 {
                nb[2] = i - res.0;
            }
            if y + 1 < res.1 {
                nb[3] = i + res.0;
            }
            for j in nb.into_iter().filter(|&j| j != usize::MAX) {
                if labels[j].component == u32::MAX && labels[j].target == t {
                    labels[j].component = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    Ok(LabelGrid { region, resolution: res, root_points: rts, cycles, labels, components: next as usize })
}

/// Type of `f_{P_c}` in the period-two slice; degenerate `c` (multiple roots
/// of `P_c`) is reported as unresolved.
pub fn classify_per2(c: Complex64, budget: usize) -> TypeLabel {
    use crate::degeneration::{make_family, FamilyKind, FamilySpec};
    match make_family(&FamilySpec::new(FamilyKind::Per2Slice, c)) {
        Ok(m) => classify_type(&m, budget).unwrap_or(TypeLabel::Unresolved),
        Err(_) => TypeLabel::Unresolved,
    }
}

/// Type labels over a parameter region, row-major from the top-left pixel.
pub fn classify_grid(region: Region, res: (usize, usize), budget: usize) -> Vec<TypeLabel> {
    (0..res.0 * res.1)
        .into_par_iter()
        .map(|idx| classify_per2(region.pixel(idx % res.0, idx / res.0, res), budget))
        .collect()
}
