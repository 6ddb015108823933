//! Extended nonnegative reals: a finite value or the `+∞` sentinel.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

/// A value in `[0, +∞]` (or any extended real) with an explicit infinity tag.
///
/// Infinity never enters floating-point arithmetic: it compares above every
/// finite value and absorbs sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub const ZERO: Extended = Extended::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }

    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// Lossy conversion for plotting and tolerance arithmetic at the edges.
    pub fn to_f64(self) -> f64 {
        match self {
            Extended::Finite(v) => v,
            Extended::Infinite => f64::INFINITY,
        }
    }

    pub fn min(self, other: Extended) -> Extended {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Extended) -> Extended {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Multiplication by a finite nonnegative scalar; `0 · ∞` is taken as `∞`
    /// since every scale factor used here is strictly positive in the limit.
    pub fn scale(self, factor: f64) -> Extended {
        match self {
            Extended::Finite(v) => Extended::Finite(v * factor),
            Extended::Infinite => Extended::Infinite,
        }
    }

    /// `self > threshold`, with infinity exceeding every finite threshold.
    pub fn exceeds(self, threshold: f64) -> bool {
        match self {
            Extended::Finite(v) => v > threshold,
            Extended::Infinite => true,
        }
    }

    /// Relative/absolute closeness; two infinities are close.
    pub fn close_to(self, other: Extended, rel: f64, abs: f64) -> bool {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => (a - b).abs() <= abs.max(rel * a.abs().max(b.abs())),
            (Extended::Infinite, Extended::Infinite) => true,
            _ => false,
        }
    }
}

impl std::ops::Add for Extended {
    type Output = Extended;

    fn add(self, other: Extended) -> Extended {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::Infinite,
        }
    }
}

impl From<f64> for Extended {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            Extended::Infinite
        } else {
            Extended::Finite(v)
        }
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a.partial_cmp(b),
            (Extended::Finite(_), Extended::Infinite) => Some(Ordering::Less),
            (Extended::Infinite, Extended::Finite(_)) => Some(Ordering::Greater),
            (Extended::Infinite, Extended::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => serializer.serialize_f64(*v),
            Extended::Infinite => serializer.serialize_str("inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_dominates() {
        assert!(Extended::Infinite > Extended::Finite(1e300));
        assert_eq!(Extended::Finite(2.0) + Extended::Infinite, Extended::Infinite);
        assert_eq!(Extended::Finite(2.0).min(Extended::Infinite), Extended::Finite(2.0));
        assert!(Extended::Infinite.exceeds(1e308));
        assert!(Extended::Infinite.close_to(Extended::Infinite, 0.0, 0.0));
    }

    #[test]
    fn serializes_infinity_as_string() {
        let s = serde_json::to_string(&vec![Extended::Finite(0.5), Extended::Infinite]).unwrap();
        assert_eq!(s, "[0.5,\"inf\"]");
    }
}
