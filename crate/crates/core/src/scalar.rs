// SPDX-License-Identifier: Apache-2.0

//! Numeric abstraction shared by the timing, energy and report code.
//!
//! Times are picoseconds, energies femtojoules, leakage nanowatts. Every
//! quantity is carried in a [`Scalar`], so the same code runs on `f32`,
//! `f64` or an exact rational such as [`num_rational::Ratio<i64>`].

use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// A real-valued quantity usable for times, energies and powers.
pub trait Scalar:
    Num + Signed + FromPrimitive + ToPrimitive + PartialOrd + Copy + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`. Panics only on non-finite input, which
    /// the parsers reject before conversion.
    fn of(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(|| panic!("{value} is not representable"))
    }

    fn of_int(value: u64) -> Self {
        Self::from_u64(value).unwrap_or_else(|| panic!("{value} is not representable"))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative spacing of representable values near 1, floored at 1e-15.
    /// Rationals report the floor.
    fn resolution() -> f64 {
        let one = Self::one();
        let mut e = 1.0f64;
        while e > 1e-15 && one + Self::of(e * 0.5) != one {
            e *= 0.5;
        }
        e.max(1e-15)
    }

    fn half(self) -> Self {
        self / (Self::one() + Self::one())
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl<T> Scalar for T where
    T: Num + Signed + FromPrimitive + ToPrimitive + PartialOrd + Copy + Debug + Display + Send + Sync + 'static
{
}

/// Relative comparison with an absolute floor of `tol` near zero.
pub fn approx_eq<T: Scalar>(a: T, b: T, tol: f64) -> bool {
    let (a, b) = (a.as_f64(), b.as_f64());
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= tol * scale
}

/// Fixed-point rendering with an explicit sign for negatives.
pub fn fixed<T: Scalar>(value: T, decimals: usize) -> String {
    let v = value.as_f64();
    let s = format!("{v:.decimals$}");
    // "-0.000" reads as a negative quantity; print it unsigned.
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn conversions_work_for_floats_and_rationals() {
        assert_eq!(f64::of(2.5), 2.5);
        assert_eq!(f32::of_int(7), 7.0);
        let r = Ratio::<i64>::of(0.5);
        assert_eq!(r, Ratio::new(1, 2));
        assert_eq!(Ratio::<i64>::of_int(3).half(), Ratio::new(3, 2));
    }

    #[test]
    fn fixed_keeps_negative_sign() {
        assert_eq!(fixed(-0.16f64, 3), "-0.160");
        assert_eq!(fixed(-0.0001f64, 3), "0.000");
        assert_eq!(fixed(1.507f64, 3), "1.507");
    }

    #[test]
    fn resolution_tracks_precision() {
        assert_eq!(f32::resolution(), f32::EPSILON as f64);
        assert_eq!(f64::resolution(), 1e-15_f64.max(f64::EPSILON));
        assert_eq!(Ratio::<i64>::resolution(), 1e-15);
    }

    #[test]
    fn min_max() {
        assert_eq!(3.0f64.max_of(4.0), 4.0);
        assert_eq!(3.0f64.min_of(4.0), 3.0);
    }
}
