use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An angular-momentum quantum number or projection: an integer multiple of 1/2.
///
/// Stored as twice its value so that arithmetic and comparisons stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Spin(i32);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a half-integer: {0:?}")]
pub struct SpinParseError(pub String);

impl Spin {
    pub const ZERO: Spin = Spin(0);
    pub const HALF: Spin = Spin(1);
    pub const ONE: Spin = Spin(2);

    pub const fn from_twice(twice: i32) -> Self {
        Spin(twice)
    }

    pub const fn integer(value: i32) -> Self {
        Spin(2 * value)
    }

    /// Converts a float that must be an exact multiple of 1/2.
    pub fn from_f64(value: f64) -> Option<Self> {
        let twice = 2.0 * value;
        if twice.is_finite() && twice.fract() == 0.0 && twice.abs() < i32::MAX as f64 {
            Some(Spin(twice as i32))
        } else {
            None
        }
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn abs(self) -> Self {
        Spin(self.0.abs())
    }

    /// Multiplicity 2j + 1.
    pub const fn multiplicity(self) -> i32 {
        self.0 + 1
    }

    /// j(j + 1).
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }

    /// Projections -j, -j+1, ..., j.
    pub fn projections(self) -> impl Iterator<Item = Spin> {
        let j = self.0;
        (-j..=j).step_by(2).map(Spin)
    }

    /// Values allowed by the triangle rule with `a` and `b`: |a-b|, ..., a+b.
    pub fn coupled(a: Spin, b: Spin) -> impl Iterator<Item = Spin> {
        ((a.0 - b.0).abs()..=a.0 + b.0).step_by(2).map(Spin)
    }

    pub fn triangle(a: Spin, b: Spin, c: Spin) -> bool {
        c.0 >= (a.0 - b.0).abs() && c.0 <= a.0 + b.0 && (a.0 + b.0 + c.0) % 2 == 0
    }
}

impl std::ops::Add for Spin {
    type Output = Spin;
    fn add(self, rhs: Spin) -> Spin {
        Spin(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Spin {
    type Output = Spin;
    fn sub(self, rhs: Spin) -> Spin {
        Spin(self.0 - rhs.0)
    }
}

impl std::ops::Neg for Spin {
    type Output = Spin;
    fn neg(self) -> Spin {
        Spin(-self.0)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for Spin {
    type Err = SpinParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || SpinParseError(s.to_string());
        match t.split_once('/') {
            Some((num, "2")) => num.trim().parse::<i32>().map(Spin).map_err(|_| err()),
            Some(_) => Err(err()),
            None => t
                .parse::<i32>()
                .ok()
                .and_then(|v| v.checked_mul(2))
                .map(Spin)
                .ok_or_else(err),
        }
    }
}

impl Serialize for Spin {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
