//! Internal rays: tracing, landing refinement and co-landing tests.

use crate::angle::Angle;
use crate::bottcher::{BottcherChart, ContinuationOpts, Stop};
use crate::error::{Error, Result};
use crate::newton::{Chart, Jet, MapRep};
use crate::sphere::{sphere_dist, Finite, Infinity, SpherePoint};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Landing certificate: the refined point is (pre)periodic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub point: SpherePoint,
    pub preperiod: usize,
    pub period: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RayStatus {
    /// Tail settled. `certificate` is `None` when refinement failed.
    Landed { approx: SpherePoint, certificate: Option<Certificate> },
    TerminatedPrecritical { point: SpherePoint },
    BudgetExhausted { last: SpherePoint },
}

#[derive(Clone, Debug)]
pub struct InternalRay {
    pub component: SpherePoint,
    pub label: Option<String>,
    pub angle: Angle,
    /// Potential `t = -ln|φ|` of each sample; the centre has `t = ∞`.
    pub potentials: Vec<f64>,
    pub samples: Vec<SpherePoint>,
    pub status: RayStatus,
}

#[derive(Clone, Copy, Debug)]
pub struct RayOptions {
    /// Number of levels `1 - 2^{-k}` tried before giving up.
    pub max_levels: usize,
    /// Spherical tail diameter counted as landed.
    pub landing_tol: f64,
    /// Number of consecutive level samples in the tail window.
    pub window: usize,
    pub refine: bool,
    pub continuation: ContinuationOpts,
}

impl Default for RayOptions {
    fn default() -> Self {
        RayOptions {
            max_levels: 80,
            landing_tol: 1e-6,
            window: 4,
            refine: true,
            continuation: ContinuationOpts::default(),
        }
    }
}

impl InternalRay {
    pub fn landed(&self) -> bool {
        matches!(self.status, RayStatus::Landed { .. })
    }

    /// Refined landing point, else the tail approximation.
    pub fn landing_point(&self) -> Option<SpherePoint> {
        match &self.status {
            RayStatus::Landed { certificate: Some(c), .. } => Some(c.point),
            RayStatus::Landed { approx, .. } => Some(*approx),
            _ => None,
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match &self.status {
            RayStatus::Landed { certificate: Some(c), .. } => Some(c),
            _ => None,
        }
    }

    /// The samples followed by the refined landing point.
    pub fn polyline(&self) -> Vec<SpherePoint> {
        let mut v = self.samples.clone();
        if let Some(c) = self.certificate() {
            v.push(c.point);
        }
        v
    }

    pub fn to_json(&self) -> RayJson {
        let (status, landing) = match &self.status {
            RayStatus::Landed { certificate: Some(c), .. } => ("landed", Some(LandingJson {
                point: c.point,
                preperiod: c.preperiod,
                period: c.period,
                residual: c.residual,
            })),
            RayStatus::Landed { approx, .. } => ("landed_unrefined", Some(LandingJson {
                point: *approx,
                preperiod: 0,
                period: 0,
                residual: f64::NAN,
            })),
            RayStatus::TerminatedPrecritical { point } => ("terminated_precritical", Some(LandingJson {
                point: *point,
                preperiod: 0,
                period: 0,
                residual: f64::NAN,
            })),
            RayStatus::BudgetExhausted { .. } => ("budget_exhausted", None),
        };
        RayJson {
            component: self.label.clone().unwrap_or_else(|| self.component.to_string()),
            angle: [self.angle.num(), self.angle.den()],
            status: status.to_string(),
            landing,
            samples: self
                .samples
                .iter()
                .map(|p| match p {
                    Finite(z) => [z.re, z.im],
                    _ => [f64::INFINITY, f64::INFINITY],
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LandingJson {
    pub point: SpherePoint,
    pub preperiod: usize,
    pub period: usize,
    pub residual: f64,
}

/// `{component, angle: [p,q], status, landing, samples}`. Infinite samples
/// are written as `[inf, inf]`, which serde_json emits as `null`.
#[derive(Clone, Debug, Serialize)]
pub struct RayJson {
    pub component: String,
    pub angle: [u64; 2],
    pub status: String,
    pub landing: Option<LandingJson>,
    pub samples: Vec<[f64; 2]>,
}

/// Unrefined landing approximations keyed by root and angle, shared across
/// traces so long orbits are not re-traced.
#[derive(Default)]
pub struct LandingCache {
    inner: Mutex<HashMap<([u64; 2], Angle), Option<SpherePoint>>>,
}

impl LandingCache {
    pub fn new() -> Self {
        Self::default()
    }
}

fn root_key(ch: &BottcherChart) -> [u64; 2] {
    [ch.root.re.to_bits(), ch.root.im.to_bits()]
}

/// Potential of level `k`: `t_k = -ln(1 - 2^{-k})`.
pub fn level_potential(k: usize) -> f64 {
    -(-(0.5f64).powi(k as i32)).ln_1p()
}

/// Trace the internal ray of `angle` in the chart's component.
pub fn trace_ray(chart: &BottcherChart, angle: Angle, opts: &RayOptions) -> Result<InternalRay> {
    trace_ray_cached(chart, angle, opts, &LandingCache::new())
}

pub fn trace_ray_cached(chart: &BottcherChart, angle: Angle, opts: &RayOptions, cache: &LandingCache) -> Result<InternalRay> {
    let mut ray = trace_unrefined(chart, angle, opts)?;
    if opts.refine {
        if let RayStatus::Landed { approx, .. } = ray.status {
            let cert = refine_ray_landing(chart, angle, approx, opts, cache).ok();
            ray.status = RayStatus::Landed { approx, certificate: cert };
        }
    }
    Ok(ray)
}

fn angle_table(angle: Angle, d: usize, len: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(len);
    let mut a = angle;
    for _ in 0..len {
        v.push(a.to_f64());
        a = a.times(d as u64);
    }
    v
}

fn trace_unrefined(chart: &BottcherChart, angle: Angle, opts: &RayOptions) -> Result<InternalRay> {
    let d = chart.root_degree;
    let table = angle_table(angle, d, 200);
    let angle_at = |n: u32| table[(n as usize).min(table.len() - 1)];
    let mut potentials = vec![f64::INFINITY];
    let mut samples = vec![chart.center];
    let copts = &opts.continuation;

    let (t0, z0) = chart.radial_start(&angle_at, copts)?;
    if chart.depth() == 0 {
        let e = Complex64::from_polar(1.0, 2.0 * PI * angle.to_f64());
        for k in 1..16 {
            let r = chart.rho_loc * k as f64 / 16.0;
            potentials.push(-r.ln());
            samples.push(Finite(chart.psi_loc(e * r).0));
        }
    } else {
        // connect the centre to the start through the local chain inverse
        for k in 1..8 {
            let t = t0 + (8 - k) as f64 * 1.5;
            let s = chart.solve_level(t, &angle_at, *samples.last().unwrap(), copts);
            if s.converged {
                potentials.push(t);
                samples.push(s.point);
            }
        }
    }
    potentials.push(t0);
    samples.push(z0);

    let mut t = t0;
    let mut z = z0;
    let mut level_pts: Vec<SpherePoint> = Vec::new();
    let make = |potentials, samples, status| InternalRay {
        component: chart.center,
        label: None,
        angle,
        potentials,
        samples,
        status,
    };
    for k in 1..=opts.max_levels {
        let tk = level_potential(k);
        if tk >= t {
            continue;
        }
        let (pts, stop) = chart.continue_radial(&angle_at, t, z, tk, copts);
        for (tt, p) in pts {
            potentials.push(tt);
            samples.push(p);
        }
        match stop {
            Some(Stop::Precritical(p)) => {
                return Ok(make(potentials, samples, RayStatus::TerminatedPrecritical { point: p }));
            }
            Some(Stop::Stalled(p)) => {
                return Err(Error::numerical(format!(
                    "ray {angle} stalled near {p} at potential {:.3e}",
                    potentials.last().unwrap()
                )));
            }
            None => {}
        }
        t = tk;
        z = *samples.last().unwrap();
        level_pts.push(z);
        if level_pts.len() >= opts.window {
            let tail = &level_pts[level_pts.len() - opts.window..];
            let mut diam: f64 = 0.0;
            for i in 0..tail.len() {
                for j in i + 1..tail.len() {
                    diam = diam.max(sphere_dist(tail[i], tail[j]));
                }
            }
            if diam < opts.landing_tol {
                return Ok(make(potentials, samples, RayStatus::Landed { approx: z, certificate: None }));
            }
        }
    }
    Ok(make(potentials, samples, RayStatus::BudgetExhausted { last: z }))
}

/// Refine the landing point of a ray from its tail approximation, using
/// landing approximations of the forward rays as shooting guesses.
fn refine_ray_landing(
    chart: &BottcherChart,
    angle: Angle,
    approx: SpherePoint,
    opts: &RayOptions,
    cache: &LandingCache,
) -> Result<Certificate> {
    let d = chart.root_degree as u64;
    let j = chart.depth();
    let (l, p) = angle.preperiod_period(d);
    let mut guesses = Vec::with_capacity(j + l + p);
    let mut q = approx;
    for _ in 0..j {
        guesses.push(q);
        q = chart.map.eval(q);
    }
    let root_chart = BottcherChart {
        center: Finite(chart.root),
        local_degree: chart.root_degree,
        chain: vec![Finite(chart.root)],
        ..chart.clone()
    };
    let mut a = angle;
    for i in 0..(l + p) {
        if i == 0 {
            // the preimage chain's image, or the ray itself
            guesses.push(q);
        } else {
            guesses.push(cached_landing(&root_chart, a, opts, cache)?);
        }
        a = a.times(d);
    }
    landing_refine_orbit(&chart.map, &guesses, j + l, p)
}

fn cached_landing(root_chart: &BottcherChart, a: Angle, opts: &RayOptions, cache: &LandingCache) -> Result<SpherePoint> {
    let key = (root_key(root_chart), a);
    if let Some(v) = cache.inner.lock().unwrap().get(&key) {
        return v.ok_or_else(|| Error::numerical(format!("forward ray {a} did not land")));
    }
    let ray = trace_unrefined(root_chart, a, opts)?;
    let v = ray.landing_point();
    cache.inner.lock().unwrap().insert(key, v);
    v.ok_or_else(|| Error::numerical(format!("forward ray {a} did not land")))
}

fn chart_of(p: SpherePoint) -> (Chart, Complex64) {
    match p {
        Finite(z) if z.norm() <= 1.0 => (Chart::Z, z),
        _ => (Chart::W, p.inverted().finite().unwrap()),
    }
}

fn from_chart(c: Chart, x: Complex64) -> SpherePoint {
    match c {
        Chart::Z => SpherePoint::from_complex(x),
        // below this the point is ∞ to double precision on the sphere
        Chart::W if x.norm() < 1e-20 => Infinity,
        Chart::W => Finite(x).inverted(),
    }
}

/// One map step from chart coordinate `x` in `from` to the chart `to`.
fn step_into(m: &MapRep, from: Chart, x: Complex64, to: Chart) -> (Complex64, Complex64) {
    let j = m.step(Jet { chart: from, x, dx: ONE });
    if j.chart == to {
        (j.x, j.dx)
    } else {
        let v = j.x.inv();
        (v, -j.dx * v * v)
    }
}

fn chart_scale(c: Chart, x: Complex64) -> f64 {
    // spherical length of a unit chart displacement at x
    let _ = c;
    2.0 / (1.0 + x.norm_sqr())
}

/// Solve `f^{pre+per}(z) = f^{pre}(z)` from an approximation by forward
/// iteration guesses.
pub fn landing_refine(m: &MapRep, approx: SpherePoint, preperiod: usize, period: usize) -> Result<SpherePoint> {
    if period == 0 {
        return Err(Error::invalid("period must be at least one"));
    }
    let mut guesses = vec![approx];
    for _ in 1..(preperiod + period) {
        guesses.push(m.eval(*guesses.last().unwrap()));
    }
    Ok(landing_refine_orbit(m, &guesses, preperiod, period)?.point)
}

/// Multiple shooting on the orbit `y_0 -> ... -> y_{pre+per-1} -> y_pre`.
pub fn landing_refine_orbit(m: &MapRep, guesses: &[SpherePoint], preperiod: usize, period: usize) -> Result<Certificate> {
    assert_eq!(guesses.len(), preperiod + period);
    let cyc: Vec<(Chart, Complex64)> = guesses[preperiod..].iter().map(|&g| chart_of(g)).collect();
    let charts: Vec<Chart> = cyc.iter().map(|c| c.0).collect();
    let mut x: Vec<Complex64> = cyc.iter().map(|c| c.1).collect();
    let p = period;
    let mut converged = false;
    let mut last_step = f64::INFINITY;
    for _ in 0..60 {
        let mut g = Vec::with_capacity(p);
        let mut r = Vec::with_capacity(p);
        for i in 0..p {
            let (v, dv) = step_into(m, charts[i], x[i], charts[(i + 1) % p]);
            g.push(dv);
            r.push(v - x[(i + 1) % p]);
        }
        let log_gain: f64 = g.iter().map(|v| v.norm().ln()).sum();
        let delta: Vec<Complex64> = if log_gain > 0.0 && g.iter().all(|v| v.norm() > 0.0) {
            // backward substitution contracts on a repelling cycle
            let mut alpha = vec![ONE; p + 1];
            let mut beta = vec![Complex64::new(0.0, 0.0); p + 1];
            for i in (0..p).rev() {
                alpha[i] = alpha[i + 1] / g[i];
                beta[i] = (beta[i + 1] - r[i]) / g[i];
            }
            let d0 = beta[0] / (ONE - alpha[0]);
            (0..p).map(|i| alpha[i] * d0 + beta[i]).collect()
        } else {
            // forward substitution for attracting cycles
            let mut alpha = vec![ONE; p + 1];
            let mut beta = vec![Complex64::new(0.0, 0.0); p + 1];
            for i in 0..p {
                alpha[i + 1] = g[i] * alpha[i];
                beta[i + 1] = g[i] * beta[i] + r[i];
            }
            let d0 = beta[p] / (ONE - alpha[p]);
            (0..p).map(|i| alpha[i] * d0 + beta[i]).collect()
        };
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::numerical("landing refinement produced a non-finite step"));
        }
        last_step = 0.0;
        for i in 0..p {
            x[i] += delta[i];
            last_step = last_step.max(delta[i].norm() * chart_scale(charts[i], x[i]));
        }
        if last_step < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged && last_step > 1e-12 {
        return Err(Error::numerical(format!("landing refinement diverged (last step {last_step:.2e})")));
    }
    // sanity: the refined cycle must stay near the guesses
    for i in 0..p {
        let dist = sphere_dist(from_chart(charts[i], x[i]), guesses[preperiod + i]);
        if dist > 1e-2 {
            return Err(Error::numerical(format!("refinement moved {dist:.2e} away: period mismatch")));
        }
    }
    let mut pts: Vec<(Chart, Complex64)> = charts.iter().copied().zip(x.iter().copied()).collect();
    // preperiodic tail, solved backwards
    for i in (0..preperiod).rev() {
        let (c, mut y) = chart_of(guesses[i]);
        let (tc, target) = pts[0];
        let mut ok = false;
        for _ in 0..100 {
            let (v, dv) = step_into(m, c, y, tc);
            let res = v - target;
            if res == Complex64::new(0.0, 0.0) {
                ok = true;
                break;
            }
            let s = res / dv;
            if !s.is_finite() {
                break;
            }
            y -= s;
            last_step = s.norm() * chart_scale(c, y);
            if s.norm() <= 1e-16 * (1.0 + y.norm()) {
                ok = true;
                break;
            }
        }
        if !ok && last_step > 1e-12 {
            return Err(Error::numerical("preperiodic refinement diverged"));
        }
        let dist = sphere_dist(from_chart(c, y), guesses[i]);
        if dist > 1e-2 {
            return Err(Error::numerical(format!("preperiodic refinement moved {dist:.2e} away")));
        }
        pts.insert(0, (c, y));
    }
    // residual: largest spherical mismatch of one step along the orbit
    let n = pts.len();
    let mut residual: f64 = last_step.min(1.0);
    for i in 0..n {
        let next = if i + 1 < n { pts[i + 1] } else { pts[preperiod] };
        let img = m.eval(from_chart(pts[i].0, pts[i].1));
        residual = residual.max(sphere_dist(img, from_chart(next.0, next.1)));
    }
    let point = from_chart(pts[0].0, pts[0].1);
    Ok(Certificate { point, preperiod, period, residual })
}

/// Whether two landed rays share their landing point.
///
/// `Ok(Some(p))` when they do, `Ok(None)` when the points are clearly
/// apart, and an indeterminate error otherwise.
pub fn coland(a: &InternalRay, b: &InternalRay, tol: f64) -> Result<Option<SpherePoint>> {
    let (pa, pb) = match (a.landing_point(), b.landing_point()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::indeterminate(format!("ray {} or {} did not land", a.angle, b.angle))),
    };
    match (a.certificate(), b.certificate()) {
        (Some(ca), Some(cb)) => {
            let dist = sphere_dist(ca.point, cb.point);
            if dist < tol {
                Ok(Some(ca.point))
            } else if dist < 1e3 * tol.max(1e-9) {
                Err(Error::indeterminate(format!(
                    "landing points of {} and {} are {dist:.2e} apart",
                    a.angle, b.angle
                )))
            } else {
                Ok(None)
            }
        }
        _ => {
            let dist = sphere_dist(pa, pb);
            if dist > 1e-3 {
                Ok(None)
            } else {
                Err(Error::indeterminate(format!(
                    "unrefined landing points of {} and {} are {dist:.2e} apart",
                    a.angle, b.angle
                )))
            }
        }
    }
}

/// Largest functional-equation residual over the samples: each sample at
/// potential `t` must satisfy `f^{j+n}(z) = ψ_loc(e^{-t d^n} e^{2πi d^n θ})`.
pub fn sample_residual(chart: &BottcherChart, ray: &InternalRay) -> f64 {
    let d = chart.root_degree;
    let table = angle_table(ray.angle, d, 200);
    let mut worst: f64 = 0.0;
    for (&t, &z) in ray.potentials.iter().zip(&ray.samples) {
        if !t.is_finite() {
            continue;
        }
        let mut n = 0usize;
        while -t * (d as f64).powi(n as i32) > chart.rho_loc.ln() {
            n += 1;
        }
        let w = Complex64::from_polar((-t * (d as f64).powi(n as i32)).exp(), 2.0 * PI * table[n.min(199)]);
        let q = chart.psi_loc(w).0;
        let img = chart.map.iterate(z, chart.depth() + n);
        worst = worst.max(sphere_dist(img, Finite(q)));
    }
    worst
}
