//! Böttcher coordinates on basin components of superattracting roots and
//! the radial continuation used to extend their inverses.
//!
//! The local inverse `ψ(w) = r + Σ b_k w^k` at a root `r` of local degree
//! `d` is obtained from `f(ψ(w)) = ψ(w^d)` order by order. Beyond the disk
//! where that series is trusted, `ψ` is continued along radii by solving
//! `f^{j+n}(z) = ψ_loc(s^{d^n} e^{2πi d^n θ})` with Newton's method from the
//! previous point on the radius.

use crate::error::{Error, Result};
use crate::newton::{Chart, DegeneratePair, Jet, MapRep};
use crate::sphere::{sphere_dist, Finite, Infinity, SpherePoint};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Target for the residual of the local series on its trusted circle.
const SERIES_TARGET: f64 = 1e-12;

/// A Böttcher chart on a basin component `U` with centre `u`.
///
/// For an immediate basin the chain is just the root; for an iterated
/// preimage it lists `u, f(u), ..., r`.
#[derive(Clone, Debug)]
pub struct BottcherChart {
    pub map: MapRep,
    pub center: SpherePoint,
    pub local_degree: usize,
    /// The superattracting root the chain ends at, and its local degree.
    pub root: Complex64,
    pub root_degree: usize,
    /// `b_1, b_2, ...` of the local inverse at the root.
    pub series: Vec<Complex64>,
    pub chain: Vec<SpherePoint>,
    /// Radius where the series is trusted.
    pub rho_loc: f64,
    /// Smallest potential of a critical point attracted to the root (1 if none).
    pub certified_radius: f64,
    /// `(t, c)` for each critical point `c` attracted to the root, with
    /// `t = -ln |φ(c)|`.
    pub critical_levels: Vec<(f64, SpherePoint)>,
    /// Conjugacy residual of the series on `|w| = rho_loc`.
    pub residual: f64,
}

/// Serializable chart summary.
#[derive(Clone, Debug, Serialize)]
pub struct ChartInfo {
    pub center: SpherePoint,
    pub local_degree: usize,
    pub depth: usize,
    pub residual: f64,
    pub certified_radius: f64,
}

/// Outcome of one continuation solve.
#[derive(Clone, Copy, Debug)]
pub struct LevelSolve {
    pub point: SpherePoint,
    /// Derivative of the solved point with respect to the potential `t`.
    pub velocity: f64,
    /// Smallest spherical derivative of `f` along the orbit before it
    /// enters the local disk.
    pub min_deriv: f64,
    pub converged: bool,
}

/// Why a radial continuation stopped early.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    /// Step size collapsed next to an iterated preimage of a critical point.
    Precritical(SpherePoint),
    /// Step size collapsed for no identifiable reason.
    Stalled(SpherePoint),
}

/// Tunables for radial continuation.
#[derive(Clone, Copy, Debug)]
pub struct ContinuationOpts {
    /// Largest spherical distance between consecutive stored points.
    pub max_sphere_step: f64,
    /// Newton iterations per solve.
    pub newton_iters: usize,
    /// Jacobian threshold for precritical termination.
    pub precritical_jacobian: f64,
}

impl Default for ContinuationOpts {
    fn default() -> Self {
        ContinuationOpts { max_sphere_step: 0.02, newton_iters: 16, precritical_jacobian: 1e-10 }
    }
}

/// Local expansion `f(r + h) - r = Σ_k a_k h^k` up to `h^len`.
fn local_expansion(m: &MapRep, r: Complex64, len: usize) -> Vec<Complex64> {
    let n = m.numer.taylor_shift(r);
    let d = m.denom.taylor_shift(r);
    let mut q = vec![ZERO; len + 1];
    let d0 = d.coeff(0);
    for k in 0..=len {
        let mut s = n.coeff(k);
        for i in 1..=k {
            s -= d.coeff(i) * q[k - i];
        }
        q[k] = s / d0;
    }
    q[0] -= r;
    q
}

/// `Σ_{k>=d} a_k h(w)^k` truncated at `w^m`, where `h` has no constant term.
fn compose_coeff(a: &[Complex64], h: &[Complex64], m: usize) -> Complex64 {
    // h[i] is the coefficient of w^{i+1}.
    let mut pow = vec![ZERO; m + 1];
    // pow = h
    for i in 0..h.len().min(m) {
        pow[i + 1] = h[i];
    }
    let mut out = a.get(1).copied().unwrap_or(ZERO) * pow[m];
    for k in 2..=m {
        let mut next = vec![ZERO; m + 1];
        for (i, &p) in pow.iter().enumerate().take(m + 1).skip(k - 1) {
            if p == ZERO {
                continue;
            }
            for (j, &hj) in h.iter().enumerate() {
                let e = i + j + 1;
                if e > m {
                    break;
                }
                next[e] += p * hj;
            }
        }
        pow = next;
        if let Some(&ak) = a.get(k) {
            out += ak * pow[m];
        }
    }
    out
}

/// Coefficients `b_1..b_len` of the local inverse Böttcher map.
fn solve_series(a: &[Complex64], d: usize, len: usize) -> Vec<Complex64> {
    // principal branch of b_1^{d-1} = 1/a_d
    let b1 = (ONE / a[d]).powf(1.0 / (d as f64 - 1.0));
    let mut b = vec![b1];
    for j in 1..len {
        b.push(ZERO);
        let c = compose_coeff(a, &b, d + j);
        let rhs = if j % d == 0 { b[j / d] } else { ZERO };
        b[j] = (rhs - c) / (d as f64 * a[d] * b1.powi(d as i32 - 1));
    }
    b
}

fn eval_series(r: Complex64, b: &[Complex64], w: Complex64) -> (Complex64, Complex64) {
    let mut v = ZERO;
    let mut dv = ZERO;
    for (k, &bk) in b.iter().enumerate().rev() {
        dv = dv * w + bk * (k + 1) as f64;
        v = v * w + bk;
    }
    (r + v * w, dv)
}

/// Local degree of `m` at a finite point.
pub fn local_degree_at(m: &MapRep, z: SpherePoint) -> Result<usize> {
    let crit = m.critical_points()?;
    Ok(1 + crit
        .iter()
        .filter(|c| sphere_dist(c.point, z) < 1e-7)
        .map(|c| c.order)
        .sum::<usize>())
}

/// Convert a jet to the `Z` chart.
fn to_z(j: Jet) -> (Complex64, Complex64) {
    match j.chart {
        Chart::Z => (j.x, j.dx),
        Chart::W => {
            let z = j.x.inv();
            (z, -j.dx * z * z)
        }
    }
}

/// Chart coordinate of a point, `Z` inside the unit disk and `W` outside.
fn chart_of(p: SpherePoint) -> (Chart, Complex64) {
    match p {
        Finite(z) if z.norm() <= 1.0 => (Chart::Z, z),
        _ => (Chart::W, p.inverted().finite().unwrap()),
    }
}

fn from_chart(c: Chart, x: Complex64) -> SpherePoint {
    match c {
        Chart::Z => SpherePoint::from_complex(x),
        Chart::W => Finite(x).inverted(),
    }
}

/// Build the chart at a superattracting fixed root.
pub fn chart_at_root(m: &MapRep, root: SpherePoint) -> Result<BottcherChart> {
    let r = root
        .finite()
        .ok_or_else(|| Error::invalid("charts at infinity are not supported"))?;
    if m.denom.eval(r).norm() < 1e-14 {
        return Err(Error::invalid("chart centre is a pole"));
    }
    let fr = m.eval(root);
    if sphere_dist(fr, root) > 1e-9 {
        return Err(Error::invalid(format!("{root} is not a fixed point")));
    }
    let a = local_expansion(m, r, 8);
    let scale = 1.0 + r.norm();
    if a[1].norm() > 1e-9 {
        return Err(Error::invalid(format!(
            "fixed point {root} has multiplier {:.3e}, not superattracting",
            a[1].norm()
        )));
    }
    let d = (2..a.len())
        .find(|&k| a[k].norm() > 1e-10 * scale)
        .ok_or_else(|| Error::numerical("local degree too high"))?;

    let mut chart = BottcherChart {
        map: m.clone(),
        center: root,
        local_degree: d,
        root: r,
        root_degree: d,
        series: Vec::new(),
        chain: vec![root],
        rho_loc: 0.25,
        certified_radius: 1.0,
        critical_levels: Vec::new(),
        residual: f64::INFINITY,
    };
    // Provisional series, good near the root, to measure critical potentials.
    chart.fit_series(24)?;
    chart.critical_levels = chart.critical_levels()?;
    chart.certified_radius = chart.critical_levels.iter().map(|l| (-l.0).exp()).fold(1.0, f64::min);
    chart.rho_loc = (0.7 * chart.certified_radius).min(0.5);
    let mut last_err = None;
    for _ in 0..6 {
        match chart.adapt_series() {
            Ok(()) => return Ok(chart),
            Err(e) => {
                last_err = Some(e);
                chart.rho_loc *= 0.7;
            }
        }
    }
    Err(last_err.unwrap())
}

impl BottcherChart {
    pub fn depth(&self) -> usize {
        self.chain.len() - 1
    }

    pub fn info(&self) -> ChartInfo {
        ChartInfo {
            center: self.center,
            local_degree: self.local_degree,
            depth: self.depth(),
            residual: self.residual,
            certified_radius: self.certified_radius,
        }
    }

    fn fit_series(&mut self, len: usize) -> Result<()> {
        let d = self.root_degree;
        let a = local_expansion(&self.map, self.root, d + len + 1);
        let b = solve_series(&a, d, len);
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::numerical("Böttcher series diverged"));
        }
        self.series = b;
        Ok(())
    }

    fn adapt_series(&mut self) -> Result<()> {
        let mut len = 16;
        loop {
            self.fit_series(len)?;
            self.residual = self.series_residual(self.rho_loc);
            if self.residual < SERIES_TARGET {
                return Ok(());
            }
            if len >= 160 {
                return Err(Error::numerical(format!(
                    "Böttcher series residual {:.2e} above target",
                    self.residual
                )));
            }
            len = len * 3 / 2;
        }
    }

    /// `max |f(ψ(w)) - ψ(w^d)|` over `|w| = rho`, relative to `1 + |r|`.
    pub fn series_residual(&self, rho: f64) -> f64 {
        let d = self.root_degree as i32;
        (0..48)
            .map(|k| {
                let w = Complex64::from_polar(rho, 2.0 * PI * (k as f64 + 0.5) / 48.0);
                let z = self.psi_loc(w).0;
                let lhs = self.map.eval(Finite(z));
                let rhs = self.psi_loc(w.powi(d)).0;
                match lhs {
                    Finite(v) => (v - rhs).norm() / (1.0 + self.root.norm()),
                    Infinity => f64::INFINITY,
                }
            })
            .fold(0.0, f64::max)
    }

    /// Local inverse at the root and its derivative.
    pub fn psi_loc(&self, w: Complex64) -> (Complex64, Complex64) {
        eval_series(self.root, &self.series, w)
    }

    /// Local coordinate at the root; `None` outside the trusted disk.
    pub fn phi_loc(&self, z: Complex64) -> Option<Complex64> {
        let b1 = self.series[0];
        let mut w = (z - self.root) / b1;
        if w.norm() > 2.0 * self.rho_loc {
            return None;
        }
        for _ in 0..40 {
            let (v, dv) = self.psi_loc(w);
            let step = (v - z) / dv;
            if !step.is_finite() {
                return None;
            }
            // damp large steps
            let s = if step.norm() > 0.25 * self.rho_loc { step * (0.25 * self.rho_loc / step.norm()) } else { step };
            w -= s;
            if w.norm() > 1.5 * self.rho_loc {
                return None;
            }
            if step.norm() <= 1e-15 * (1.0 + w.norm()) {
                break;
            }
        }
        let (v, _) = self.psi_loc(w);
        ((v - z).norm() <= 1e-12 * (1.0 + z.norm()) && w.norm() <= 1.0001 * self.rho_loc).then_some(w)
    }

    /// Potential `|φ(z)|` in the root's basin, via `|φ_loc(f^n z)|^{1/d^n}`.
    /// Points of a preimage component use the potential of their image.
    pub fn potential(&self, z: SpherePoint, max_iter: usize) -> Option<f64> {
        let mut p = self.map.iterate(z, self.depth());
        let d = self.root_degree as f64;
        for n in 0..max_iter {
            if let Finite(x) = p {
                if (x - self.root).norm() <= 2.0 * self.series[0].norm() * self.rho_loc {
                    if let Some(w) = self.phi_loc(x) {
                        let a = w.norm();
                        return Some(if a == 0.0 { 0.0 } else { (a.ln() / d.powi(n as i32)).exp() });
                    }
                }
            }
            p = self.map.eval(p);
        }
        None
    }

    /// Smallest potential of the free critical points attracted to the root.
    fn critical_levels(&self) -> Result<Vec<(f64, SpherePoint)>> {
        let mut out = Vec::new();
        for c in self.map.critical_points()? {
            if sphere_dist(c.point, Finite(self.root)) < 1e-9 {
                continue;
            }
            // exact preimages of the root lie outside the immediate basin
            if let Some(p) = self.potential(c.point, 4000).filter(|&p| p > 1e-12) {
                out.push((-p.ln(), c.point));
            }
        }
        Ok(out)
    }

    /// Potentials in `(lo, hi)` where a radius can meet an iterated
    /// preimage of an attracted critical point, with the number of extra
    /// iterates and the critical point.
    fn precritical_breaks(&self, lo: f64, hi: f64) -> Vec<(f64, usize, SpherePoint)> {
        let d = self.root_degree as f64;
        let mut out = Vec::new();
        for &(tc, c) in &self.critical_levels {
            let mut k = 0;
            let mut t = tc;
            while t > lo && k < 200 {
                if t < hi {
                    out.push((t, k, c));
                }
                k += 1;
                t /= d;
            }
        }
        out.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        out
    }

    /// Whether the radius point `z` at a break potential sits on the
    /// iterated preimage of `c`.
    fn hits_critical(&self, z: SpherePoint, k: usize, c: SpherePoint) -> bool {
        sphere_dist(self.map.iterate(z, self.depth() + k), c) < 1e-5
    }

    /// `φ_U(z)` for points whose image under the chain lies in the trusted
    /// disk (defined only up to the branch of the `d`-th root elsewhere).
    pub fn phi_near(&self, z: SpherePoint) -> Option<Complex64> {
        let p = self.map.iterate(z, self.depth());
        self.phi_loc(p.finite()?)
    }

    /// The Böttcher target `ψ_loc(e^{-t d^n} e^{2πi a_n})` for the smallest
    /// `n` placing it in the trusted disk, with its `t`-derivative.
    fn target(&self, t: f64, angle_at: &dyn Fn(u32) -> f64) -> (u32, Complex64, Complex64) {
        let d = self.root_degree as f64;
        let mut n = 0u32;
        let lr = self.rho_loc.ln();
        while -t * d.powi(n as i32) > lr {
            n += 1;
        }
        let dn = d.powi(n as i32);
        let w = Complex64::from_polar((-t * dn).exp(), 2.0 * PI * angle_at(n));
        let (q, dq) = self.psi_loc(w);
        (n, q, dq * w * (-dn))
    }

    /// Solve `f^{depth+n}(z) = target(t)` by Newton's method from `start`.
    pub fn solve_level(
        &self,
        t: f64,
        angle_at: &dyn Fn(u32) -> f64,
        start: SpherePoint,
        opts: &ContinuationOpts,
    ) -> LevelSolve {
        let (n, q, dq) = self.target(t, angle_at);
        let steps = self.depth() + n as usize;
        let (chart, mut x) = chart_of(start);
        let mut converged = false;
        let mut deriv = ZERO;
        let mut min_deriv = f64::INFINITY;
        for it in 0..opts.newton_iters {
            let (fz, dfz, md) = self.orbit_jet(chart, x, steps);
            min_deriv = md;
            deriv = dfz;
            if dfz == ZERO || !dfz.is_finite() || !fz.is_finite() {
                break;
            }
            let step = (fz - q) / dfz;
            if !step.is_finite() {
                break;
            }
            x -= step;
            let tol = 1e-15 * (1.0 + x.norm()) + 1e-300;
            if step.norm() <= 1e3 * tol || (it > 2 && step.norm() <= 1e5 * tol && (fz - q).norm() < 1e-14) {
                converged = true;
                let (_, dfz, md) = self.orbit_jet(chart, x, steps);
                deriv = dfz;
                min_deriv = md;
                break;
            }
        }
        let point = from_chart(chart, x);
        // velocity in the chart, converted to a spherical speed
        let vel = (dq / deriv).norm();
        let sph = match chart {
            Chart::Z => 2.0 * vel / (1.0 + x.norm_sqr()),
            Chart::W => 2.0 * vel / (1.0 + x.norm_sqr()),
        };
        LevelSolve { point, velocity: sph, min_deriv, converged }
    }

    /// `f^steps` applied to a chart coordinate, the derivative and the
    /// smallest spherical derivative along the way.
    fn orbit_jet(&self, chart: Chart, x: Complex64, steps: usize) -> (Complex64, Complex64, f64) {
        let mut j = Jet { chart, x, dx: ONE };
        let mut min_d = f64::INFINITY;
        for _ in 0..steps {
            let nj = self.map.step(j);
            let sd = nj.dx.norm() / j.dx.norm() * (1.0 + j.x.norm_sqr()) / (1.0 + nj.x.norm_sqr());
            min_d = min_d.min(sd);
            j = nj;
        }
        let (z, dz) = to_z(j);
        (z, dz, min_d)
    }

    /// Continue the radius of angle `angle_at(0)` from potential `t0` (at
    /// `z0`) down to `t1 < t0`. Returns the stored points `(t, z)` after
    /// `z0`, ending at `t1` unless stopped.
    pub fn continue_radial(
        &self,
        angle_at: &dyn Fn(u32) -> f64,
        t0: f64,
        z0: SpherePoint,
        t1: f64,
        opts: &ContinuationOpts,
    ) -> (Vec<(f64, SpherePoint)>, Option<Stop>) {
        let mut out = Vec::new();
        let mut t = t0;
        let mut z = z0;
        let mut dt = t1 - t0; // negative
        let min_dt = 1e-13 * t1.abs().max(1e-300);
        let mut last_vel = self.solve_level(t, angle_at, z, opts).velocity;
        let breaks = self.precritical_breaks(t1, t0);
        let mut next_break = 0;
        while t > t1 {
            if t + dt < t1 {
                dt = t1 - t;
            }
            // A radius through a critical point branches there. Near a break
            // potential, solve at it directly: the ray either passes the
            // critical preimage exactly or stays away from it.
            while next_break < breaks.len() && breaks[next_break].0 >= t {
                next_break += 1;
            }
            if let Some(&(b, k, c)) = breaks.get(next_break) {
                if t + dt <= b {
                    let near = sphere_dist(self.map.iterate(z, self.depth() + k), c) < 0.1;
                    if near {
                        let mut o = *opts;
                        o.newton_iters = 60;
                        let s = self.solve_level(b, angle_at, z, &o);
                        if self.hits_critical(s.point, k, c) {
                            return (out, Some(Stop::Precritical(s.point)));
                        }
                    }
                    dt = b - t;
                    if dt == 0.0 {
                        next_break += 1;
                        continue;
                    }
                }
            }
            // cap the step by the expected spherical displacement
            if last_vel.is_finite() && last_vel > 0.0 {
                let cap = opts.max_sphere_step / last_vel;
                if -dt > cap {
                    dt = -cap;
                }
            }
            let s = self.solve_level(t + dt, angle_at, z, opts);
            let moved = sphere_dist(s.point, z);
            let expected = (dt.abs() * last_vel.max(s.velocity)).max(1e-14);
            let precritical = s.min_deriv < opts.precritical_jacobian;
            if s.converged && !precritical && moved <= 10.0 * expected + 1e-13 && moved <= 2.0 * opts.max_sphere_step {
                t += dt;
                z = s.point;
                last_vel = s.velocity;
                out.push((t, z));
                dt *= 2.0;
                continue;
            }
            if precritical && s.converged {
                return (out, Some(Stop::Precritical(s.point)));
            }
            dt *= 0.5;
            if dt.abs() < min_dt {
                let probe = self.solve_level(t, angle_at, z, opts);
                let near_crit = probe.min_deriv < 1e-4;
                return (out, Some(if near_crit { Stop::Precritical(z) } else { Stop::Stalled(z) }));
            }
        }
        (out, None)
    }

    /// Starting point of a radius: the series point for immediate charts,
    /// or the solution near the centre for preimage charts.
    pub fn radial_start(&self, angle_at: &dyn Fn(u32) -> f64, opts: &ContinuationOpts) -> Result<(f64, SpherePoint)> {
        if self.depth() == 0 {
            let t = -self.rho_loc.ln();
            let w = Complex64::from_polar(self.rho_loc, 2.0 * PI * angle_at(0));
            return Ok((t, Finite(self.psi_loc(w).0)));
        }
        let t = -(1e-4 * self.rho_loc).ln();
        let (_, q, _) = self.target(t, angle_at);
        // linear guess from the chain derivative at the centre
        let (chart, x) = chart_of(self.center);
        let (fz, dfz, _) = self.orbit_jet(chart, x, self.depth());
        let guess = from_chart(chart, x + (q - fz) / dfz);
        let s = self.solve_level(t, angle_at, guess, opts);
        if !s.converged {
            return Err(Error::numerical("could not start a radius at the component centre"));
        }
        Ok((t, s.point))
    }

    /// `ψ_U(w)` for `|w| < 1`, continued radially when outside the trusted disk.
    pub fn psi(&self, w: Complex64) -> Result<SpherePoint> {
        let r = w.norm();
        if r >= 1.0 {
            return Err(Error::invalid("ψ is defined on the unit disk"));
        }
        if self.depth() == 0 && r <= self.rho_loc {
            return Ok(Finite(self.psi_loc(w).0));
        }
        let ang = w.arg() / (2.0 * PI);
        let d = self.root_degree as f64;
        let angle_at = move |n: u32| (ang * d.powi(n as i32)).rem_euclid(1.0);
        let opts = ContinuationOpts::default();
        let (t0, z0) = self.radial_start(&angle_at, &opts)?;
        let t1 = if r == 0.0 { f64::INFINITY } else { -r.ln() };
        if t1 >= t0 {
            let s = self.solve_level(t1, &angle_at, z0, &opts);
            return if s.converged { Ok(s.point) } else { Err(Error::numerical("ψ solve failed")) };
        }
        let (pts, stop) = self.continue_radial(&angle_at, t0, z0, t1, &opts);
        match stop {
            None => Ok(pts.last().map(|p| p.1).unwrap_or(z0)),
            Some(Stop::Precritical(p)) => Err(Error::indeterminate(format!("radius meets a precritical point near {p}"))),
            Some(Stop::Stalled(p)) => Err(Error::numerical(format!("continuation stalled near {p}"))),
        }
    }
}

/// Pull a chart back to a component whose centre eventually maps to the
/// chart's centre with local degree one along the way.
pub fn chart_at_preimage(m: &MapRep, chart: &BottcherChart, component_center: SpherePoint) -> Result<BottcherChart> {
    let mut orbit = vec![component_center];
    let mut p = component_center;
    let mut k = 0;
    while sphere_dist(p, chart.center) > 1e-7 {
        p = m.eval(p);
        orbit.push(p);
        k += 1;
        if k > 64 {
            return Err(Error::invalid("component centre does not reach the chart centre"));
        }
    }
    if k == 0 {
        return Ok(chart.clone());
    }
    orbit.pop();
    // Refine the centre so that it maps exactly onto the chart centre.
    let target = chart.center.finite().ok_or_else(|| Error::invalid("chart centre at infinity"))?;
    let (c, mut x) = chart_of(component_center);
    for _ in 0..60 {
        let (fz, dfz, _) = chart_orbit(m, c, x, k);
        let step = (fz - target) / dfz;
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.norm() < 1e-16 * (1.0 + x.norm()) {
            break;
        }
    }
    let center = from_chart(c, x);
    let mut chain = vec![center];
    let mut q = center;
    for _ in 0..k {
        if local_degree_at(m, q)? > 1 {
            return Err(Error::hypothesis(format!(
                "critical point {q} on the pullback chain: local degree is not one"
            )));
        }
        q = m.eval(q);
        chain.push(q);
    }
    let last = chain.pop().unwrap();
    debug_assert!(sphere_dist(last, chart.center) < 1e-6);
    chain.extend(chart.chain.iter().copied());
    Ok(BottcherChart {
        map: m.clone(),
        center,
        local_degree: 1,
        chain,
        ..chart.clone()
    })
}

fn chart_orbit(m: &MapRep, chart: Chart, x: Complex64, steps: usize) -> (Complex64, Complex64, f64) {
    let mut j = Jet { chart, x, dx: ONE };
    for _ in 0..steps {
        j = m.step(j);
    }
    let (z, dz) = to_z(j);
    (z, dz, 0.0)
}

/// A marked component of the limit map followed to a perturbed map.
#[derive(Clone, Debug, Serialize)]
pub struct DeformationRecord {
    pub base_center: SpherePoint,
    pub perturbed_center: SpherePoint,
    pub preperiod_period: (usize, usize),
    pub base_local_degree: usize,
    pub perturbed_local_degree: usize,
    pub local_degree_match: bool,
}

/// Preperiod and period of `z` under `m`, up to `max` steps.
pub fn orbit_type(m: &MapRep, z: SpherePoint, max: usize, tol: f64) -> Option<(usize, usize)> {
    let mut orbit = vec![z];
    for _ in 0..max {
        let nz = m.eval(*orbit.last().unwrap());
        if let Some(i) = orbit.iter().position(|&p| sphere_dist(p, nz) < tol) {
            return Some((i, orbit.len() - i));
        }
        orbit.push(nz);
    }
    None
}

/// Follow a (pre)periodic centre of the reduced limit to the perturbed map.
pub fn track_deformation(limit: &DegeneratePair, perturbed: &MapRep, base_center: SpherePoint) -> Result<DeformationRecord> {
    let f = &limit.reduction;
    for (p, _) in f.poles()? {
        if sphere_dist(p, base_center) < 1e-8 {
            return Err(Error::invalid("base centre is a pole"));
        }
    }
    let (pre, per) = orbit_type(f, base_center, 64, 1e-9)
        .ok_or_else(|| Error::invalid("base centre is not (pre)periodic within 64 steps"))?;
    let orbit: Vec<SpherePoint> = (0..pre + per).scan(base_center, |s, _| {
        let c = *s;
        *s = f.eval(c);
        Some(c)
    }).collect();
    for h in &limit.holes {
        if orbit.iter().any(|&p| sphere_dist(p, *h) < 1e-6) {
            return Err(Error::invalid(format!("orbit of the base centre meets the hole {h}")));
        }
    }
    let base_deg = local_degree_at(f, base_center)?;
    // Newton on g^{pre+per}(z) - g^{pre}(z) from the base centre.
    let (c, mut x) = chart_of(base_center);
    let mut ok = false;
    for _ in 0..100 {
        let (a, da, _) = chart_orbit(perturbed, c, x, pre + per);
        let (b, db, _) = chart_orbit(perturbed, c, x, pre);
        let (b, db) = if pre == 0 { let (z, _) = to_z(Jet { chart: c, x, dx: ONE }); (z, to_z(Jet { chart: c, x, dx: ONE }).1) } else { (b, db) };
        let g = a - b;
        let dg = da - db;
        let step = g / dg;
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.norm() < 1e-15 * (1.0 + x.norm()) {
            ok = true;
            break;
        }
    }
    let u_n = from_chart(c, x);
    let radius = 0.1;
    if !ok || sphere_dist(u_n, base_center) > radius {
        return Err(Error::numerical(format!(
            "no matching point of period ({pre},{per}) near {base_center}: perturbation too large"
        )));
    }
    // Superattracting roots need f^p derivative zero, so compare local
    // degrees along the cycle only at the centre itself.
    let pert_deg = local_degree_at(perturbed, u_n)?;
    Ok(DeformationRecord {
        base_center,
        perturbed_center: u_n,
        preperiod_period: (pre, per),
        base_local_degree: base_deg,
        perturbed_local_degree: pert_deg,
        local_degree_match: base_deg == pert_deg,
    })
}
