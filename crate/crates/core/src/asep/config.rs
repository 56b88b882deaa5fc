use crate::error::{domain, Error, Result};
use std::fmt;
use std::str::FromStr;

/// Occupation vector `(tau_1, ..., tau_n)`; index 0 is site 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration(pub Vec<bool>);

impl Configuration {
    pub fn empty(n: usize) -> Self {
        Configuration(vec![false; n])
    }

    pub fn full(n: usize) -> Self {
        Configuration(vec![true; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Occupation of site `j` (1-based).
    pub fn site(&self, j: usize) -> bool {
        self.0[j - 1]
    }

    /// State index with bit `j-1` for site `j`.
    pub fn index(&self) -> usize {
        assert!(self.len() < usize::BITS as usize);
        self.0.iter().enumerate().fold(0, |acc, (j, &b)| acc | (usize::from(b) << j))
    }

    pub fn from_index(idx: usize, n: usize) -> Self {
        Configuration((0..n).map(|j| idx >> j & 1 == 1).collect())
    }

    pub fn particles(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Domain(format!("invalid configuration character {ch:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Configuration)
    }
}

/// An exact position `num/den` in `[0,1]`, so that `floor(n x)` and the
/// complement `1 - x` carry no rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    num: u128,
    den: u128,
}

impl Position {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return domain(format!("position {num}/{den} is not in [0,1]"));
        }
        Ok(Position { num: num as u128, den: den as u128 })
    }

    /// The exact dyadic value of a float. Values below `2^-120` other than
    /// zero are rounded to that grid.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return domain(format!("position {x} is not in [0,1]"));
        }
        if x == 1.0 {
            return Ok(Position { num: 1, den: 1 });
        }
        const K: i32 = 120;
        let scaled = x * 2f64.powi(K);
        // scaled < 2^120 is an exact integer when x >= 2^-68; otherwise the
        // rounding below is the documented approximation.
        let num = scaled.round() as u128;
        let mut p = Position { num, den: 1u128 << K };
        while p.num % 2 == 0 && p.den > 1 {
            p.num /= 2;
            p.den /= 2;
        }
        Ok(p)
    }

    pub fn complement(&self) -> Self {
        Position { num: self.den - self.num, den: self.den }
    }

    pub fn floor_times(&self, n: usize) -> usize {
        (n as u128 * self.num / self.den) as usize
    }

    pub fn ceil_times(&self, n: usize) -> usize {
        (n as u128 * self.num).div_ceil(self.den) as usize
    }

    /// Whether `n x` is an integer.
    pub fn is_lattice(&self, n: usize) -> bool {
        (n as u128 * self.num) % self.den == 0
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// `h_n(j/n)` for `j = 0..=n`; the height is constant on `[j/n, (j+1)/n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeightPath(pub Vec<i64>);

impl HeightPath {
    pub fn of(c: &Configuration) -> Self {
        let mut v = Vec::with_capacity(c.len() + 1);
        let mut h = 0i64;
        v.push(0);
        for &b in &c.0 {
            h += if b { 1 } else { -1 };
            v.push(h);
        }
        HeightPath(v)
    }

    pub fn at(&self, x: Position) -> i64 {
        self.0[x.floor_times(self.0.len() - 1)]
    }
}

/// `h_n(x) = sum_{j <= floor(n x)} (2 tau_j - 1)`.
pub fn height(c: &Configuration, x: f64) -> Result<i64> {
    Ok(height_at(c, Position::from_f64(x)?))
}

pub fn height_at(c: &Configuration, x: Position) -> i64 {
    let k = x.floor_times(c.len());
    c.0[..k].iter().map(|&b| if b { 1 } else { -1 }).sum()
}

/// Particle–hole map `eps_j = 1 - tau_{n-j+1}`.
pub fn hole_transform(c: &Configuration) -> Configuration {
    Configuration(c.0.iter().rev().map(|&b| !b).collect())
}
