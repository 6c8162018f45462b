//! Exact rational angles in `[0, 1)`.

use crate::error::{Error, Result};
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// A reduced fraction `p/q` with `0 <= p < q`, read modulo one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u64; 2]", into = "[u64; 2]")]
pub struct Angle {
    p: u64,
    q: u64,
}

impl TryFrom<[u64; 2]> for Angle {
    type Error = Error;
    fn try_from(v: [u64; 2]) -> Result<Self> {
        Angle::new(v[0], v[1])
    }
}

impl From<Angle> for [u64; 2] {
    fn from(a: Angle) -> Self {
        [a.p, a.q]
    }
}

impl Angle {
    pub const ZERO: Angle = Angle { p: 0, q: 1 };
    pub const HALF: Angle = Angle { p: 1, q: 2 };

    pub fn new(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::invalid("angle denominator must be positive"));
        }
        let p = p % q;
        let g = p.gcd(&q);
        Ok(Angle { p: p / g, q: q / g })
    }

    /// Signed numerator, reduced modulo one.
    pub fn from_i64(p: i64, q: u64) -> Result<Self> {
        let r = p.rem_euclid(q as i64) as u64;
        Angle::new(r, q)
    }

    pub fn num(&self) -> u64 {
        self.p
    }

    pub fn den(&self) -> u64 {
        self.q
    }

    pub fn to_f64(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// `d·θ mod 1`.
    pub fn times(&self, d: u64) -> Angle {
        let p = ((self.p as u128 * d as u128) % self.q as u128) as u64;
        Angle::new(p, self.q).unwrap()
    }

    /// `d^n·θ mod 1`.
    pub fn times_pow(&self, d: u64, n: u32) -> Angle {
        let mut a = *self;
        for _ in 0..n {
            a = a.times(d);
        }
        a
    }

    /// `1 - θ mod 1`.
    pub fn neg(&self) -> Angle {
        Angle::new(self.q - self.p, self.q).unwrap()
    }

    pub fn add(&self, o: &Angle) -> Angle {
        let l = self.q.lcm(&o.q);
        let p = (self.p as u128 * (l / self.q) as u128 + o.p as u128 * (l / o.q) as u128) % l as u128;
        Angle::new(p as u64, l).unwrap()
    }

    /// The `d` solutions of `d·x = θ`, namely `(θ + k)/d`.
    pub fn preimages(&self, d: u64) -> Vec<Angle> {
        (0..d).map(|k| Angle::new(self.p + k * self.q, self.q * d).unwrap()).collect()
    }

    pub fn halve(&self) -> Angle {
        Angle::new(self.p, self.q * 2).unwrap()
    }

    /// Preperiod and period under multiplication by `d`.
    pub fn preperiod_period(&self, d: u64) -> (usize, usize) {
        let mut seen: Vec<Angle> = Vec::new();
        let mut a = *self;
        loop {
            if let Some(i) = seen.iter().position(|x| *x == a) {
                return (i, seen.len() - i);
            }
            seen.push(a);
            a = a.times(d);
        }
    }

    /// Denominator is a power of two.
    pub fn is_dyadic(&self) -> bool {
        self.q.is_power_of_two()
    }

    /// All reduced angles in `[0,1)` with denominator at most `q_max`.
    pub fn farey(q_max: u64) -> Vec<Angle> {
        let mut v = vec![Angle::ZERO];
        for q in 2..=q_max {
            for p in 1..q {
                if p.gcd(&q) == 1 {
                    v.push(Angle { p, q });
                }
            }
        }
        v.sort();
        v
    }
}

impl PartialOrd for Angle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Angle {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.p as u128 * other.q as u128).cmp(&(other.p as u128 * self.q as u128))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl std::str::FromStr for Angle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("cannot parse angle {s:?}"));
        match s.split_once('/') {
            Some((a, b)) => {
                let p: i64 = a.trim().parse().map_err(|_| bad())?;
                let q: u64 = b.trim().parse().map_err(|_| bad())?;
                if q == 0 {
                    return Err(bad());
                }
                Angle::from_i64(p, q)
            }
            None => {
                let p: i64 = s.trim().parse().map_err(|_| bad())?;
                Angle::from_i64(p, 1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduction_and_doubling() {
        let a = Angle::new(6, 8).unwrap();
        assert_eq!(a, Angle::new(3, 4).unwrap());
        assert_eq!(a.times(2), Angle::HALF);
        assert_eq!(Angle::HALF.times(2), Angle::ZERO);
        assert_eq!(Angle::new(5, 4).unwrap(), Angle::new(1, 4).unwrap());
    }

    #[test]
    fn periods() {
        assert_eq!(Angle::ZERO.preperiod_period(2), (0, 1));
        assert_eq!(Angle::HALF.preperiod_period(2), (1, 1));
        assert_eq!(Angle::new(1, 3).unwrap().preperiod_period(2), (0, 2));
        assert_eq!(Angle::new(1, 6).unwrap().preperiod_period(2), (1, 2));
        assert_eq!(Angle::new(1, 7).unwrap().preperiod_period(2), (0, 3));
    }

    #[test]
    fn parse() {
        assert_eq!("3/4".parse::<Angle>().unwrap(), Angle::new(3, 4).unwrap());
        assert_eq!("-1/4".parse::<Angle>().unwrap(), Angle::new(3, 4).unwrap());
        assert!("1/0".parse::<Angle>().is_err());
    }

    #[test]
    fn farey_count() {
        // 1 + φ(2) + ... + φ(6) = 1 + 1 + 2 + 2 + 4 + 2
        assert_eq!(Angle::farey(6).len(), 12);
    }

    proptest! {
        #[test]
        fn preimages_map_back(p in 0u64..1000, q in 1u64..1000, d in 2u64..5) {
            let a = Angle::new(p, q).unwrap();
            for b in a.preimages(d) {
                prop_assert_eq!(b.times(d), a);
            }
            prop_assert_eq!(a.neg().add(&a), Angle::ZERO);
        }
    }
}
