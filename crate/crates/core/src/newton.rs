//! Newton maps as rational functions, their fixed and critical points, and
//! the splitting of a degenerate coefficient pair into a hole factor and a
//! reduced map.

use crate::error::{Error, Result};
use crate::poly::{roots_of, Poly, CLUSTER_TOL};
use crate::sphere::{Finite, Infinity, SpherePoint};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Beyond this modulus, evaluation moves to the chart `w = 1/z`.
pub const CHART_SWITCH: f64 = 1e8;

/// Roots with multiplicities of the polynomial whose Newton map is taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonSource {
    pub roots: Vec<(Complex64, usize)>,
    pub normalization: Option<Complex64>,
}

impl NewtonSource {
    pub fn new(roots: Vec<(Complex64, usize)>) -> Result<Self> {
        let total: usize = roots.iter().map(|r| r.1).sum();
        if total < 2 {
            return Err(Error::invalid(format!("total degree {total} < 2")));
        }
        if roots.iter().any(|r| r.1 == 0 || !r.0.is_finite()) {
            return Err(Error::invalid("roots must be finite with positive multiplicity"));
        }
        for (i, a) in roots.iter().enumerate() {
            for b in &roots[i + 1..] {
                if (a.0 - b.0).norm() <= CLUSTER_TOL * (1.0 + a.0.norm()) {
                    return Err(Error::invalid("roots must be pairwise distinct"));
                }
            }
        }
        Ok(NewtonSource { roots, normalization: None })
    }

    /// Simple roots.
    pub fn simple(roots: &[Complex64]) -> Result<Self> {
        NewtonSource::new(roots.iter().map(|&r| (r, 1)).collect())
    }

    pub fn from_poly(p: &Poly) -> Result<Self> {
        if p.degree() < 2 {
            return Err(Error::invalid("Newton map needs a polynomial of degree >= 2"));
        }
        let mut s = NewtonSource::new(roots_of(p, CLUSTER_TOL)?)?;
        s.normalization = Some(p.leading());
        Ok(s)
    }

    pub fn total_degree(&self) -> usize {
        self.roots.iter().map(|r| r.1).sum()
    }

    /// The polynomial itself, monic unless a leading coefficient was given.
    pub fn poly(&self) -> Poly {
        Poly::from_roots(&self.roots).scale(self.normalization.unwrap_or(ONE))
    }

    pub fn multiplicity_at(&self, z: Complex64, tol: f64) -> Option<usize> {
        self.roots
            .iter()
            .find(|r| (r.0 - z).norm() <= tol * (1.0 + z.norm()))
            .map(|r| r.1)
    }
}

/// A rational map `numer / denom`.
#[derive(Clone, Debug, PartialEq)]
pub struct MapRep {
    pub numer: Poly,
    pub denom: Poly,
    pub degree: usize,
    pub source: Option<NewtonSource>,
}

/// Which coordinate a [`Jet`] is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    Z,
    /// `w = 1/z`
    W,
}

/// A point in one of the two standard charts with a derivative with
/// respect to some external parameter.
#[derive(Clone, Copy, Debug)]
pub struct Jet {
    pub chart: Chart,
    pub x: Complex64,
    pub dx: Complex64,
}

impl Jet {
    pub fn point(&self) -> SpherePoint {
        match self.chart {
            Chart::Z => SpherePoint::from_complex(self.x),
            Chart::W => Finite(self.x).inverted(),
        }
    }

    /// Seed at a sphere point with unit derivative in the chosen chart.
    pub fn seed(p: SpherePoint) -> Jet {
        match p {
            Finite(z) if z.norm() <= 1.0 => Jet { chart: Chart::Z, x: z, dx: ONE },
            _ => Jet { chart: Chart::W, x: p.inverted().finite().unwrap(), dx: ONE },
        }
    }
}

/// Classification of a fixed point by its multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedKind {
    Superattracting,
    Attracting,
    Indifferent,
    Repelling,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPoint {
    pub point: SpherePoint,
    pub multiplier: Complex64,
    pub kind: FixedKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub point: SpherePoint,
    pub order: usize,
}

fn kind_of(m: Complex64) -> FixedKind {
    let a = m.norm();
    if a < 1e-9 {
        FixedKind::Superattracting
    } else if a < 1.0 - 1e-9 {
        FixedKind::Attracting
    } else if a <= 1.0 + 1e-9 {
        FixedKind::Indifferent
    } else {
        FixedKind::Repelling
    }
}

/// `z - P/P'` in reduced form.
///
/// With `S = Π(z - r_i)` and `T = Σ n_i Π_{j≠i}(z - r_j)` one has
/// `P'/P = T/S`, so the map is `(zT - S)/T` and its degree is the number of
/// distinct roots.
pub fn newton_from_source(src: &NewtonSource) -> Result<MapRep> {
    if src.total_degree() < 2 {
        return Err(Error::invalid("Newton map needs total degree >= 2"));
    }
    let s = Poly::from_roots(&src.roots.iter().map(|r| (r.0, 1)).collect::<Vec<_>>());
    let mut t = Poly::zero();
    for (i, &(_, n)) in src.roots.iter().enumerate() {
        let mut term = Poly::constant(Complex64::new(n as f64, 0.0));
        for (j, &(rj, _)) in src.roots.iter().enumerate() {
            if j != i {
                term = term.mul(&Poly::linear_root(rj));
            }
        }
        t = t.add(&term);
    }
    let numer = t.shift_up().sub(&s);
    let degree = numer.degree().max(t.degree());
    Ok(MapRep { numer, denom: t, degree, source: Some(src.clone()) })
}

/// Newton map of a polynomial given by coefficients.
pub fn newton_from_poly(p: &Poly) -> Result<MapRep> {
    newton_from_source(&NewtonSource::from_poly(p)?)
}

impl MapRep {
    pub fn new(numer: Poly, denom: Poly) -> Result<Self> {
        if denom.is_zero() {
            return Err(Error::invalid("zero denominator"));
        }
        let degree = numer.degree().max(denom.degree());
        Ok(MapRep { numer, denom, degree, source: None })
    }

    pub fn with_source(mut self, src: NewtonSource) -> Self {
        self.source = Some(src);
        self
    }

    fn n(&self) -> usize {
        self.numer.degree().max(self.denom.degree())
    }

    /// Image of a sphere point.
    pub fn eval(&self, p: SpherePoint) -> SpherePoint {
        let (a, b) = match p {
            Finite(z) if z.norm() <= CHART_SWITCH => (self.numer.eval(z), self.denom.eval(z)),
            _ => {
                let w = p.inverted().finite().unwrap();
                (self.numer.eval_reversed(self.n(), w), self.denom.eval_reversed(self.n(), w))
            }
        };
        quotient(a, b)
    }

    /// Value and derivative at a finite point (may overflow near poles).
    pub fn eval_d(&self, z: Complex64) -> (Complex64, Complex64) {
        let (n, dn) = self.numer.eval_d(z);
        let (d, dd) = self.denom.eval_d(z);
        (n / d, (dn * d - n * dd) / (d * d))
    }

    /// Derivative at a finite point.
    pub fn deriv(&self, z: Complex64) -> Complex64 {
        self.eval_d(z).1
    }

    /// Spherical derivative `|f'(z)| (1+|z|^2) / (1+|f(z)|^2)`, valid everywhere.
    pub fn spherical_deriv(&self, p: SpherePoint) -> f64 {
        let seed = Jet::seed(p);
        let j = self.step(seed);
        j.dx.norm() * (1.0 + seed.x.norm_sqr()) / (1.0 + j.x.norm_sqr())
    }

    /// Push a jet forward by the map, choosing the output chart so that
    /// the coordinate stays bounded by one in modulus where possible.
    pub fn step(&self, j: Jet) -> Jet {
        // (a, da) / (b, db) is the map as a quotient in the input chart.
        let (a, da, b, db) = match j.chart {
            Chart::Z => {
                let (a, da) = self.numer.eval_d(j.x);
                let (b, db) = self.denom.eval_d(j.x);
                (a, da, b, db)
            }
            Chart::W => {
                let n = self.n();
                let (a, da) = self.numer.eval_reversed_d(n, j.x);
                let (b, db) = self.denom.eval_reversed_d(n, j.x);
                (a, da, b, db)
            }
        };
        if a.norm() <= b.norm() {
            let v = a / b;
            let dv = (da * b - a * db) / (b * b);
            Jet { chart: Chart::Z, x: v, dx: dv * j.dx }
        } else {
            let v = b / a;
            let dv = (db * a - b * da) / (a * a);
            Jet { chart: Chart::W, x: v, dx: dv * j.dx }
        }
    }

    /// `f^n(p)`.
    pub fn iterate(&self, p: SpherePoint, n: usize) -> SpherePoint {
        (0..n).fold(p, |q, _| self.eval(q))
    }

    /// All preimages of `q` with multiplicity.
    pub fn preimages(&self, q: SpherePoint) -> Result<Vec<(SpherePoint, usize)>> {
        let (eq, at_inf) = match q {
            Finite(c) if c.norm() <= CHART_SWITCH => {
                let e = self.numer.sub(&self.denom.scale(c));
                let k = self.degree - e.degree().min(self.degree);
                (e, k)
            }
            _ => {
                // numer - q denom = 0 becomes denom - w numer = 0.
                let w = q.inverted().finite().unwrap();
                let e = self.denom.sub(&self.numer.scale(w));
                let k = self.degree - e.degree().min(self.degree);
                (e, k)
            }
        };
        let mut out: Vec<(SpherePoint, usize)> = if eq.degree() >= 1 {
            roots_of(&eq, CLUSTER_TOL)?.into_iter().map(|(z, m)| (Finite(z), m)).collect()
        } else {
            Vec::new()
        };
        if at_inf > 0 {
            out.push((Infinity, at_inf));
        }
        Ok(out)
    }

    /// Fixed points with multipliers. Infinity is reported when fixed.
    pub fn fixed_points(&self) -> Result<Vec<FixedPoint>> {
        let eq = self.numer.sub(&self.denom.shift_up());
        let mut out = Vec::new();
        if eq.degree() >= 1 {
            for (z, _) in roots_of(&eq, CLUSTER_TOL)? {
                let m = self.deriv(z);
                out.push(FixedPoint { point: Finite(z), multiplier: m, kind: kind_of(m) });
            }
        }
        if self.numer.degree() > self.denom.degree() {
            // In w = 1/z the map is w -> B(w)/A(w) with A(0) = 0 exactly when
            // the degree gap exceeds one.
            let m = if self.numer.degree() == self.denom.degree() + 1 {
                self.denom.leading() / self.numer.leading()
            } else {
                ZERO
            };
            out.push(FixedPoint { point: Infinity, multiplier: m, kind: kind_of(m) });
        }
        Ok(out)
    }

    /// Critical points with order, from the zeros of `N'D - ND'` and the
    /// deficit of its degree at infinity.
    pub fn critical_points(&self) -> Result<Vec<CriticalPoint>> {
        let w = self.numer.derivative().mul(&self.denom).sub(&self.numer.mul(&self.denom.derivative()));
        let total = 2 * self.degree - 2;
        let mut out = Vec::new();
        if w.degree() >= 1 {
            for (z, k) in roots_of(&w, CLUSTER_TOL)? {
                out.push(CriticalPoint { point: Finite(z), order: k });
            }
        }
        let at_inf = total.saturating_sub(if w.is_zero() { 0 } else { w.degree() });
        if at_inf > 0 {
            out.push(CriticalPoint { point: Infinity, order: at_inf });
        }
        Ok(out)
    }

    /// Critical points that are not roots of the source polynomial.
    pub fn free_critical_points(&self) -> Result<Vec<CriticalPoint>> {
        let crit = self.critical_points()?;
        let Some(src) = &self.source else { return Ok(crit) };
        Ok(crit
            .into_iter()
            .filter(|c| match c.point {
                Finite(z) => src.multiplicity_at(z, 1e-7).is_none(),
                Infinity => true,
            })
            .collect())
    }

    /// Finite poles, clustered by multiplicity.
    pub fn poles(&self) -> Result<Vec<(SpherePoint, usize)>> {
        if self.denom.degree() == 0 {
            return Ok(Vec::new());
        }
        Ok(roots_of(&self.denom, CLUSTER_TOL)?
            .into_iter()
            .map(|(z, m)| (Finite(z), m))
            .collect())
    }

    /// Serializable form including holes.
    pub fn to_json(&self, holes: &[SpherePoint]) -> MapJson {
        MapJson {
            roots: self
                .source
                .as_ref()
                .map(|s| s.roots.iter().map(|&(r, m)| [r.re, r.im, m as f64]).collect())
                .unwrap_or_default(),
            numer: self.numer.clone(),
            denom: self.denom.clone(),
            holes: holes.to_vec(),
        }
    }

    pub fn from_json(j: &MapJson) -> Result<MapRep> {
        let mut m = MapRep::new(j.numer.clone(), j.denom.clone())?;
        if !j.roots.is_empty() {
            let roots = j
                .roots
                .iter()
                .map(|r| {
                    if r[2] < 1.0 || r[2].fract() != 0.0 {
                        Err(Error::invalid("multiplicity must be a positive integer"))
                    } else {
                        Ok((Complex64::new(r[0], r[1]), r[2] as usize))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            m.source = Some(NewtonSource::new(roots)?);
        }
        Ok(m)
    }
}

fn quotient(a: Complex64, b: Complex64) -> SpherePoint {
    if b == ZERO {
        return if a == ZERO { Finite(ZERO) } else { Infinity };
    }
    if a.norm() > CHART_SWITCH * b.norm() {
        Finite(b / a).inverted()
    } else {
        Finite(a / b)
    }
}

/// JSON form `{roots: [[re,im,mult]...], numer, denom, holes}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapJson {
    pub roots: Vec<[f64; 3]>,
    pub numer: Poly,
    pub denom: Poly,
    #[serde(default)]
    pub holes: Vec<SpherePoint>,
}

/// A degenerate coefficient pair written as `hpart · reduction`.
#[derive(Clone, Debug)]
pub struct DegeneratePair {
    /// Monic finite part of the hole factor.
    pub hpart: Poly,
    /// Order of the hole factor at infinity.
    pub order_at_infinity: usize,
    pub reduction: MapRep,
    pub holes: Vec<SpherePoint>,
    pub ambient_degree: usize,
    /// Root pairs whose distance is close to the clustering tolerance.
    pub warnings: Vec<String>,
}

impl DegeneratePair {
    pub fn hole_degree(&self) -> usize {
        self.hpart.degree() + self.order_at_infinity
    }

    /// Rebuild the homogeneous pair at the ambient degree (up to scale).
    pub fn remultiply(&self) -> (Poly, Poly) {
        (self.reduction.numer.mul(&self.hpart), self.reduction.denom.mul(&self.hpart))
    }
}

/// Split a coefficient pair of ambient degree `d` into common factor and
/// reduced map. The pair is first scaled to unit max coefficient and
/// coefficients below `tol` are dropped.
pub fn reduce_pair(numer: &Poly, denom: &Poly, ambient_degree: usize, tol: f64) -> Result<DegeneratePair> {
    if numer.degree() > ambient_degree || denom.degree() > ambient_degree {
        return Err(Error::invalid("pair exceeds the ambient degree"));
    }
    if denom.is_zero() {
        return Err(Error::invalid("zero denominator"));
    }
    let scale = numer.max_abs_coeff().max(denom.max_abs_coeff());
    let s = Complex64::new(1.0 / scale, 0.0);
    let clean = |p: &Poly| {
        let c: Vec<Complex64> = p.scale(s).coeffs().iter().map(|&x| if x.norm() <= tol { ZERO } else { x }).collect();
        Poly::new(c)
    };
    let (mut n, mut d) = (clean(numer), clean(denom));
    if d.is_zero() {
        return Err(Error::invalid("denominator vanishes after normalization"));
    }
    let order_at_infinity = ambient_degree - n.degree().max(d.degree());

    let nr = if n.degree() >= 1 { roots_of(&n, CLUSTER_TOL)? } else { Vec::new() };
    let dr = if d.degree() >= 1 { roots_of(&d, CLUSTER_TOL)? } else { Vec::new() };
    let mut common: Vec<(Complex64, usize)> = Vec::new();
    let mut warnings = Vec::new();
    let mut used = vec![0usize; dr.len()];
    for &(a, ma) in &nr {
        let best = dr
            .iter()
            .enumerate()
            .filter(|(i, r)| used[*i] < r.1)
            .map(|(i, r)| (i, (r.0 - a).norm() / (1.0 + a.norm())))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap());
        if let Some((i, dist)) = best {
            if dist <= tol {
                let k = ma.min(dr[i].1 - used[i]);
                used[i] += k;
                common.push(((a + dr[i].0) * 0.5, k));
            } else if dist <= 10.0 * tol {
                warnings.push(format!(
                    "ambiguous common root near {a}: relative distance {dist:.3e} against tolerance {tol:.1e}"
                ));
            }
        }
    }
    let hpart = Poly::from_roots(&common);
    if hpart.degree() > 0 {
        n = n.div_rem(&hpart).0;
        d = d.div_rem(&hpart).0;
    }
    let reduction = MapRep::new(n, d)?;
    let mut holes: Vec<SpherePoint> = common.iter().map(|&(z, _)| Finite(z)).collect();
    if order_at_infinity > 0 {
        holes.push(Infinity);
    }
    Ok(DegeneratePair { hpart, order_at_infinity, reduction, holes, ambient_degree, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn same_map(m: &MapRep, num: &[f64], den: &[f64]) -> bool {
        // Compare as fractions via cross multiplication.
        let a = m.numer.mul(&Poly::from_real(den));
        let b = m.denom.mul(&Poly::from_real(num));
        a.sub(&b).max_abs_coeff() <= 1e-12 * a.max_abs_coeff().max(1.0)
    }

    #[test]
    fn z2_minus_1() {
        let m = newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 1.0])).unwrap();
        assert!(same_map(&m, &[1.0, 0.0, 1.0], &[0.0, 2.0]));
        let fp = m.fixed_points().unwrap();
        assert_eq!(fp.len(), 3);
        assert!(fp.iter().any(|f| f.point == Infinity && f.kind == FixedKind::Repelling));
        for f in fp.iter().filter(|f| !f.point.is_infinite()) {
            assert!(f.multiplier.norm() < 1e-12);
        }
    }

    #[test]
    fn z3_minus_1() {
        let m = newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 0.0, 1.0])).unwrap();
        assert!(same_map(&m, &[1.0, 0.0, 0.0, 2.0], &[0.0, 0.0, 3.0]));
        assert_eq!(m.degree, 3);
        let sa = m.fixed_points().unwrap().iter().filter(|f| f.kind == FixedKind::Superattracting).count();
        assert_eq!(sa, 3);
        let free = m.free_critical_points().unwrap();
        assert_eq!(free.len(), 1);
        assert!(free[0].point.finite().unwrap().norm() < 1e-12);
        assert_eq!(free[0].order, 1);
    }

    #[test]
    fn reduced_map_of_multiple_root() {
        // z^3 (z - 1)
        let src = NewtonSource::new(vec![(c(0.0, 0.0), 3), (c(1.0, 0.0), 1)]).unwrap();
        let m = newton_from_source(&src).unwrap();
        assert_eq!(m.degree, 2);
        assert!(same_map(&m, &[0.0, -2.0, 3.0], &[-3.0, 4.0]));
        let fp = m.fixed_points().unwrap();
        let at0 = fp.iter().find(|f| f.point.finite().is_some_and(|z| z.norm() < 1e-9)).unwrap();
        assert!((at0.multiplier - c(2.0 / 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn figure_cubic_poles() {
        let m = newton_from_poly(&Poly::from_real(&[1.0, 0.0, -0.5, 1.0 / 3.0])).unwrap();
        let mut p: Vec<f64> = m.poles().unwrap().iter().map(|x| x.0.finite().unwrap().re).collect();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((p[0]).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12);
        let free = m.free_critical_points().unwrap();
        assert_eq!(free.len(), 1);
        assert!((free[0].point.finite().unwrap() - 0.5).norm() < 1e-12);
    }

    #[test]
    fn per2_family_free_critical_points() {
        let cc = c(0.3, 0.4);
        let p = Poly::new(vec![
            (3.0 - 4.0 * cc) / 12.0,
            (4.0 * cc - 3.0) / 12.0,
            ZERO,
            -cc / 6.0,
            c(1.0 / 12.0, 0.0),
        ]);
        let m = newton_from_poly(&p).unwrap();
        let free = m.free_critical_points().unwrap();
        assert_eq!(free.len(), 2);
        assert!(free.iter().any(|f| f.point.finite().unwrap().norm() < 1e-9));
        assert!(free.iter().any(|f| (f.point.finite().unwrap() - cc).norm() < 1e-9));
        // 0 -> 1 -> 0
        let one = m.eval(Finite(ZERO)).finite().unwrap();
        assert!((one - 1.0).norm() < 1e-12);
        assert!(m.eval(Finite(one)).finite().unwrap().norm() < 1e-12);
    }

    #[test]
    fn chart_evaluation_near_infinity() {
        let m = newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(m.eval(Infinity), Infinity);
        let big = m.eval(SpherePoint::new(1e12, 0.0)).finite().unwrap();
        assert!((big.re - 2e12 / 3.0).abs() < 1.0);
        // jet through w-chart agrees with derivative of f(1/w)
        let w = c(1e-3, 2e-3);
        let j = m.step(Jet { chart: Chart::W, x: w, dx: ONE });
        let h = c(1e-9, 0.0);
        let f = |w: Complex64| m.eval(Finite(w.inv())).inverted().finite().unwrap();
        let fd = (f(w + h) - f(w - h)) / (2.0 * h);
        assert_eq!(j.chart, Chart::W);
        assert!((j.dx - fd).norm() < 1e-5 * fd.norm());
    }

    #[test]
    fn preimages_of_root_include_root() {
        let m = newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 0.0, 1.0])).unwrap();
        let pre = m.preimages(SpherePoint::new(1.0, 0.0)).unwrap();
        assert_eq!(pre.iter().map(|p| p.1).sum::<usize>(), 3);
        let pinf = m.preimages(Infinity).unwrap();
        assert!(pinf.iter().any(|p| p.0 == Infinity));
        assert!(pinf.iter().any(|p| p.0.finite().is_some_and(|z| z.norm() < 1e-12) && p.1 == 2));
    }

    #[test]
    fn reduce_nondegenerate() {
        let m = newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 0.0, 1.0])).unwrap();
        let dp = reduce_pair(&m.numer, &m.denom, 3, 1e-8).unwrap();
        assert_eq!(dp.hpart.degree(), 0);
        assert!(dp.holes.is_empty());
    }

    #[test]
    fn reduce_escaping_root_limit() {
        // Limit of Newton((z^3-1)(z-R)) scaled by 1/R: (-2z^3 - 1)/(-3z^2).
        let dp = reduce_pair(
            &Poly::from_real(&[-1.0, 0.0, 0.0, -2.0, 0.0]),
            &Poly::from_real(&[0.0, 0.0, -3.0, 0.0]),
            4,
            1e-8,
        )
        .unwrap();
        assert_eq!(dp.holes, vec![Infinity]);
        assert_eq!(dp.order_at_infinity, 1);
        assert!(same_map(&dp.reduction, &[1.0, 0.0, 0.0, 2.0], &[0.0, 0.0, 3.0]));
        // The same holds at finite large R up to the trimming tolerance.
        let r = 1e9;
        let src = NewtonSource::simple(&[c(1.0, 0.0), c(-0.5, 0.75f64.sqrt()), c(-0.5, -(0.75f64.sqrt())), c(r, 0.0)]).unwrap();
        let m = newton_from_source(&src).unwrap();
        let dp = reduce_pair(&m.numer, &m.denom, 4, 1e-8).unwrap();
        assert_eq!(dp.holes, vec![Infinity]);
        assert_eq!(dp.reduction.degree, 3);
    }

    #[test]
    fn reduce_multiple_root_pair() {
        // z - Q/Q' for Q = z^4 - z^3 without cancelling.
        let dp = reduce_pair(
            &Poly::from_real(&[0.0, 0.0, 0.0, -2.0, 3.0]),
            &Poly::from_real(&[0.0, 0.0, -3.0, 4.0]),
            4,
            1e-8,
        )
        .unwrap();
        assert_eq!(dp.hpart.degree(), 2);
        assert_eq!(dp.hole_degree() + dp.reduction.degree, 4);
        assert!(same_map(&dp.reduction, &[0.0, -2.0, 3.0], &[-3.0, 4.0]));
        assert!(dp.holes.iter().all(|h| h.finite().unwrap().norm() < 1e-12));
    }

    #[test]
    fn json_round_trip() {
        let m = newton_from_poly(&Poly::from_real(&[-1.0, 0.0, 1.0])).unwrap();
        let s = serde_json::to_string(&m.to_json(&[Infinity])).unwrap();
        let back: MapJson = serde_json::from_str(&s).unwrap();
        assert_eq!(back.holes, vec![Infinity]);
        let m2 = MapRep::from_json(&back).unwrap();
        assert_eq!(m2.numer, m.numer);
        assert_eq!(m2.source.unwrap().roots.len(), 2);
    }

    #[test]
    fn escaping_family_converges_off_holes() {
        let w = 0.75f64.sqrt();
        let base = [c(1.0, 0.0), c(-0.5, w), c(-0.5, -w)];
        let limit = newton_from_source(&NewtonSource::simple(&base).unwrap()).unwrap();
        let grid: Vec<Complex64> = (0..21)
            .flat_map(|i| (0..21).map(move |j| c(-2.0 + 0.2 * i as f64, -2.0 + 0.2 * j as f64)))
            .filter(|z| z.norm() > 0.3)
            .collect();
        let mut prev = f64::INFINITY;
        for r in [1e1, 1e2, 1e3, 1e4] {
            let mut roots = base.to_vec();
            roots.push(c(r, 0.0));
            let m = newton_from_source(&NewtonSource::simple(&roots).unwrap()).unwrap();
            let dev = grid
                .iter()
                .map(|&z| (m.eval_d(z).0 - limit.eval_d(z).0).norm())
                .fold(0.0, f64::max);
            assert!(dev < prev);
            prev = dev;
        }
        assert!(prev < 1e-2);
    }

    fn roots_strategy() -> impl Strategy<Value = Vec<(Complex64, usize)>> {
        proptest::collection::vec(((-3.0f64..3.0, -3.0f64..3.0), 1usize..4), 2..6).prop_map(|v| {
            v.into_iter().map(|((a, b), m)| (c(a, b), m)).collect()
        })
    }

    fn separated(r: &[(Complex64, usize)]) -> bool {
        r.iter().enumerate().all(|(i, a)| r[i + 1..].iter().all(|b| (a.0 - b.0).norm() > 0.1))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn roots_fixed_with_multiplier_law(roots in roots_strategy()) {
            prop_assume!(separated(&roots));
            let src = NewtonSource::new(roots.clone()).unwrap();
            let m = newton_from_source(&src).unwrap();
            prop_assert_eq!(m.degree, roots.len());
            for &(r, n) in &roots {
                let (v, d) = m.eval_d(r);
                prop_assert!((v - r).norm() < 1e-9);
                prop_assert!((d - c(1.0 - 1.0 / n as f64, 0.0)).norm() < 1e-9);
            }
        }

        #[test]
        fn simple_roots_give_2d_minus_2_critical_points(roots in roots_strategy()) {
            prop_assume!(separated(&roots));
            let simple: Vec<Complex64> = roots.iter().map(|r| r.0).collect();
            let m = newton_from_source(&NewtonSource::simple(&simple).unwrap()).unwrap();
            let total: usize = m.critical_points().unwrap().iter().map(|c| c.order).sum();
            prop_assert_eq!(total, 2 * simple.len() - 2);
        }

        #[test]
        fn reduce_then_remultiply(roots in roots_strategy(), extra in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 0..3)) {
            prop_assume!(separated(&roots));
            let m = newton_from_source(&NewtonSource::new(roots).unwrap()).unwrap();
            let h: Vec<(Complex64, usize)> = extra.iter().map(|&(a, b)| (c(a, b), 1)).collect();
            prop_assume!(h.iter().enumerate().all(|(i, a)| h[i + 1..].iter().all(|b| (a.0 - b.0).norm() > 0.1)));
            let hp = Poly::from_roots(&h);
            let (n, d) = (m.numer.mul(&hp), m.denom.mul(&hp));
            let dp = reduce_pair(&n, &d, m.degree + h.len(), 1e-7).unwrap();
            let (n2, d2) = dp.remultiply();
            // equal up to a common scalar
            let k = n.max_abs_coeff().max(d.max_abs_coeff());
            let lhs = n.mul(&d2);
            let rhs = d.mul(&n2);
            prop_assert!(lhs.sub(&rhs).max_abs_coeff() <= 1e-7 * lhs.max_abs_coeff().max(rhs.max_abs_coeff()).max(1e-300),
                "k={}", k);
            prop_assert!(dp.hole_degree() >= h.len());
        }
    }
}
