//! Dense complex polynomials and a simultaneous-iteration root finder.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default relative clustering tolerance for multiple roots.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Polynomial with coefficients in ascending degree. The zero polynomial has
/// no coefficients; otherwise the leading coefficient is nonzero.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl From<Vec<[f64; 2]>> for Poly {
    fn from(v: Vec<[f64; 2]>) -> Self {
        Poly::new(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<Poly> for Vec<[f64; 2]> {
    fn from(p: Poly) -> Self {
        p.coeffs.iter().map(|c| [c.re, c.im]).collect()
    }
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == ZERO) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    /// `z - r`
    pub fn linear_root(r: Complex64) -> Self {
        Poly::new(vec![-r, ONE])
    }

    /// Monic polynomial with the given roots, repeated by multiplicity.
    pub fn from_roots(roots: &[(Complex64, usize)]) -> Self {
        let mut p = Poly::constant(ONE);
        for &(r, m) in roots {
            for _ in 0..m {
                p = p.mul(&Poly::linear_root(r));
            }
        }
        p
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn coeff(&self, i: usize) -> Complex64 {
        self.coeffs.get(i).copied().unwrap_or(ZERO)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop trailing coefficients below `rel * max|coeff|`.
    pub fn trim_relative(&self, rel: f64) -> Poly {
        let m = self.max_abs_coeff();
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|x| x.norm() <= rel * m) {
            c.pop();
        }
        Poly::new(c)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_d(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Value, first and second derivative.
    pub fn eval_d2(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        let mut ddp = ZERO;
        for &c in self.coeffs.iter().rev() {
            ddp = ddp * z + dp * 2.0;
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp, ddp)
    }

    /// `w^n p(1/w)` for `n >= degree`, evaluated at `w`.
    pub fn eval_reversed(&self, n: usize, w: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for i in 0..=n {
            acc = acc * w + self.coeff(i);
        }
        acc
    }

    /// Value and derivative of `w^n p(1/w)`.
    pub fn eval_reversed_d(&self, n: usize, w: Complex64) -> (Complex64, Complex64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for i in 0..=n {
            dp = dp * w + p;
            p = p * w + self.coeff(i);
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Multiply by `z`.
    pub fn shift_up(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![ZERO];
        c.extend_from_slice(&self.coeffs);
        Poly::new(c)
    }

    /// Coefficients of `p(a + t)` in powers of `t`.
    pub fn taylor_shift(&self, a: Complex64) -> Poly {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let v = c[j + 1] * a;
                c[j] += v;
            }
        }
        Poly::new(c)
    }

    /// Quotient and remainder of division by a nonzero polynomial.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        if self.degree() < d.degree() || self.is_zero() {
            return (Poly::zero(), self.clone());
        }
        let mut r = self.coeffs.clone();
        let dl = d.leading();
        let dd = d.degree();
        let mut q = vec![ZERO; self.degree() - dd + 1];
        for k in (0..q.len()).rev() {
            let t = r[k + dd] / dl;
            q[k] = t;
            for (j, &dc) in d.coeffs.iter().enumerate() {
                r[k + j] -= t * dc;
            }
        }
        r.truncate(dd);
        (Poly::new(q), Poly::new(r))
    }

    /// Roots with multiplicities; see [`roots_of`].
    pub fn roots(&self, tol: f64) -> Result<Vec<(Complex64, usize)>> {
        roots_of(self, tol)
    }
}

/// Roots of `p` with multiplicities.
///
/// Exact zero roots are split off first. The remaining roots come from an
/// Aberth–Ehrlich iteration (with a Newton-and-deflation fallback); nearby
/// approximations are merged into one root of summed multiplicity when the
/// derivatives below that multiplicity vanish at the refined centroid.
pub fn roots_of(p: &Poly, tol: f64) -> Result<Vec<(Complex64, usize)>> {
    if p.is_zero() || p.degree() == 0 {
        return Err(Error::invalid("roots_of needs degree >= 1"));
    }
    let lead_zeros = p.coeffs.iter().take_while(|c| **c == ZERO).count();
    let reduced = Poly::new(p.coeffs[lead_zeros..].to_vec());
    let mut out = Vec::new();
    if lead_zeros > 0 {
        out.push((ZERO, lead_zeros));
    }
    if reduced.degree() == 0 {
        return Ok(out);
    }
    let approx = match aberth(&reduced, 800) {
        Some(a) => a,
        None => deflation_roots(&reduced)?,
    };
    out.extend(cluster_roots(&reduced, approx, tol));
    // Exact zero may coincide with a cluster found numerically.
    out.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap()
            .then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });
    Ok(out)
}

fn initial_guesses(p: &Poly) -> Vec<Complex64> {
    let n = p.degree();
    let lead = p.leading().norm();
    // Fujiwara-style bound on root moduli.
    let mut bound: f64 = 0.0;
    for k in 1..=n {
        let c = p.coeff(n - k).norm() / lead;
        let b = if k == n { (c / 2.0).powf(1.0 / k as f64) } else { c.powf(1.0 / k as f64) };
        bound = bound.max(b);
    }
    let r = (2.0 * bound).max(1e-3);
    (0..n)
        .map(|k| Complex64::from_polar(r * 0.5, 2.0 * PI * k as f64 / n as f64 + 0.4))
        .collect()
}

fn aberth(p: &Poly, max_iter: usize) -> Option<Vec<Complex64>> {
    let n = p.degree();
    let mut z = initial_guesses(p);
    let dp = p.derivative();
    let mut done = vec![false; n];
    for _ in 0..max_iter {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let pv = p.eval(z[i]);
            if pv == ZERO {
                done[i] = true;
                continue;
            }
            let ratio = pv / dp.eval(z[i]);
            let mut s = ZERO;
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d != ZERO {
                        s += d.inv();
                    }
                }
            }
            let denom = ONE - ratio * s;
            let step = if denom.norm() > 0.0 && denom.is_finite() { ratio / denom } else { ratio };
            if !step.is_finite() {
                continue;
            }
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * (1.0 + z[i].norm()) {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            return Some(z);
        }
    }
    // Multiple roots converge only linearly; accept if residuals are small.
    let scale: f64 = p.coeffs.iter().map(|c| c.norm()).sum();
    let ok = z.iter().all(|&zi| {
        let r = zi.norm().max(1.0).powi(p.degree() as i32);
        p.eval(zi).norm() <= 1e-6 * scale * r
    });
    ok.then_some(z)
}

fn deflation_roots(p: &Poly) -> Result<Vec<Complex64>> {
    let mut q = p.clone();
    let mut roots = Vec::new();
    while q.degree() > 0 {
        let dq = q.derivative();
        let mut found = None;
        'starts: for k in 0..64 {
            let mut z = Complex64::from_polar(0.5 + 0.1 * k as f64, 0.7 * k as f64 + 0.3);
            for _ in 0..400 {
                let d = dq.eval(z);
                if d == ZERO {
                    continue 'starts;
                }
                let step = q.eval(z) / d;
                z -= step;
                if step.norm() <= 1e-15 * (1.0 + z.norm()) {
                    found = Some(z);
                    break 'starts;
                }
            }
        }
        let r = found.ok_or_else(|| Error::numerical("root finder did not converge (ill-conditioned input)"))?;
        roots.push(r);
        q = q.div_rem(&Poly::linear_root(r)).0;
    }
    Ok(roots)
}

/// Group approximations into roots with multiplicity and polish them.
fn cluster_roots(p: &Poly, approx: Vec<Complex64>, tol: f64) -> Vec<(Complex64, usize)> {
    let n = approx.len();
    // Candidate groups: single linkage at a generous radius.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let loose = 1e-3;
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = 1.0 + approx[i].norm().max(approx[j].norm());
            if (approx[i] - approx[j]).norm() < loose * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut idx = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if idx[r] == usize::MAX {
            idx[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[idx[r]].push(i);
    }
    let mut out = Vec::new();
    for g in groups {
        let k = g.len();
        let centroid = g.iter().map(|&i| approx[i]).sum::<Complex64>() / k as f64;
        if k > 1 {
            if let Some(mu) = validate_cluster(p, centroid, k, tol) {
                out.push((mu, k));
                continue;
            }
        }
        for &i in &g {
            out.push((polish(p, approx[i]), 1));
        }
    }
    // Merge anything that still sits within the strict tolerance.
    let mut merged: Vec<(Complex64, usize)> = Vec::new();
    for (r, m) in out {
        if let Some(e) = merged
            .iter_mut()
            .find(|(s, _)| (*s - r).norm() <= tol * (1.0 + s.norm()))
        {
            let tot = e.1 + m;
            e.0 = (e.0 * e.1 as f64 + r * m as f64) / tot as f64;
            e.1 = tot;
        } else {
            merged.push((r, m));
        }
    }
    merged
}

fn polish(p: &Poly, mut z: Complex64) -> Complex64 {
    for _ in 0..8 {
        let (v, d) = p.eval_d(z);
        if d == ZERO || v == ZERO {
            break;
        }
        let step = v / d;
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= f64::EPSILON * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Refine a candidate `k`-fold root at `centroid`; `None` if the lower
/// derivatives do not vanish there.
fn validate_cluster(p: &Poly, centroid: Complex64, k: usize, tol: f64) -> Option<Complex64> {
    let mut d = p.clone();
    for _ in 0..(k - 1) {
        d = d.derivative();
    }
    let mu = polish(&d, centroid);
    let shifted = p.taylor_shift(mu);
    // Rounding bound on each shifted coefficient: anything below it is zero.
    let abs = Poly::new(p.coeffs.iter().map(|c| Complex64::new(c.norm(), 0.0)).collect());
    let bound = abs.taylor_shift(Complex64::new(mu.norm(), 0.0));
    let ck = shifted.coeff(k).norm();
    if ck <= 16.0 * f64::EPSILON * bound.coeff(k).re {
        return None;
    }
    // Radius of the root cluster implied by the low-order coefficients.
    let radius = (0..k)
        .map(|j| {
            let cj = (shifted.coeff(j).norm() - 64.0 * f64::EPSILON * bound.coeff(j).re).max(0.0);
            (cj / ck).powf(1.0 / (k - j) as f64)
        })
        .fold(0.0, f64::max);
    let ok = radius <= tol * (1.0 + mu.norm());
    ok.then_some(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn has_root(rs: &[(Complex64, usize)], r: Complex64, m: usize) -> bool {
        rs.iter().any(|&(x, k)| (x - r).norm() < 1e-9 && k == m)
    }

    #[test]
    fn z_squared_minus_one() {
        let rs = Poly::from_real(&[-1.0, 0.0, 1.0]).roots(CLUSTER_TOL).unwrap();
        assert_eq!(rs.len(), 2);
        assert!(has_root(&rs, c(1.0, 0.0), 1));
        assert!(has_root(&rs, c(-1.0, 0.0), 1));
    }

    #[test]
    fn triple_root_at_zero_is_clustered() {
        // z^4 - z^3
        let rs = Poly::from_real(&[0.0, 0.0, 0.0, -1.0, 1.0]).roots(CLUSTER_TOL).unwrap();
        assert_eq!(rs.len(), 2);
        assert!(has_root(&rs, c(0.0, 0.0), 3));
        assert!(has_root(&rs, c(1.0, 0.0), 1));
    }

    #[test]
    fn shifted_triple_root_is_clustered() {
        let p = Poly::from_roots(&[(c(0.5, -0.25), 3), (c(2.0, 1.0), 1)]);
        let rs = p.roots(CLUSTER_TOL).unwrap();
        assert_eq!(rs.len(), 2, "{rs:?}");
        assert!(rs.iter().any(|&(x, k)| (x - c(0.5, -0.25)).norm() < 1e-8 && k == 3));
    }

    #[test]
    fn poles_of_figure_cubic() {
        // derivative of z^3/3 - z^2/2 + 1
        let rs = Poly::from_real(&[0.0, -1.0, 1.0]).roots(CLUSTER_TOL).unwrap();
        assert!(has_root(&rs, c(0.0, 0.0), 1));
        assert!(has_root(&rs, c(1.0, 0.0), 1));
    }

    #[test]
    fn close_distinct_roots_not_merged() {
        let p = Poly::from_roots(&[(c(1.0, 0.0), 1), (c(1.0 + 1e-5, 0.0), 1), (c(-3.0, 2.0), 1)]);
        let rs = p.roots(CLUSTER_TOL).unwrap();
        assert_eq!(rs.len(), 3, "{rs:?}");
    }

    #[test]
    fn degree_zero_rejected() {
        assert!(Poly::from_real(&[3.0]).roots(CLUSTER_TOL).is_err());
    }

    #[test]
    fn taylor_shift_and_division() {
        let p = Poly::from_real(&[1.0, -2.0, 0.0, 3.0]);
        let a = c(0.3, -0.7);
        let s = p.taylor_shift(a);
        let t = c(0.2, 0.1);
        assert!((s.eval(t) - p.eval(a + t)).norm() < 1e-13);
        let d = Poly::from_real(&[2.0, 1.0]);
        let (q, r) = p.div_rem(&d);
        assert!((q.mul(&d).add(&r).sub(&p)).max_abs_coeff() < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn roots_reexpand_to_coefficients(
            deg in 1usize..=8,
            seed in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 9),
        ) {
            let p = Poly::new(seed[..=deg].iter().map(|&(a, b)| c(a, b)).collect());
            prop_assume!(p.degree() == deg && p.leading().norm() > 0.1);
            let rs = p.roots(CLUSTER_TOL).unwrap();
            prop_assert_eq!(rs.iter().map(|r| r.1).sum::<usize>(), deg);
            let q = Poly::from_roots(&rs).scale(p.leading());
            let scale = p.max_abs_coeff();
            for i in 0..=deg {
                prop_assert!((q.coeff(i) - p.coeff(i)).norm() <= 1e-8 * scale.max(1.0),
                    "coeff {} : {} vs {}", i, q.coeff(i), p.coeff(i));
            }
        }
    }
}
