//! Arithmetic shared by the float and exact-integer walk accumulators.

use std::fmt::Debug;

use crate::error::{Error, Result};

pub trait Scalar: Copy + PartialEq + Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn from_count(n: u64) -> Self;
    fn add(self, other: Self) -> Result<Self>;
    fn mul(self, other: Self) -> Result<Self>;
    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn from_count(n: u64) -> Self {
        n as f64
    }
    #[inline]
    fn add(self, other: Self) -> Result<Self> {
        Ok(self + other)
    }
    #[inline]
    fn mul(self, other: Self) -> Result<Self> {
        Ok(self * other)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for i128 {
    #[inline]
    fn zero() -> Self {
        0
    }
    #[inline]
    fn from_count(n: u64) -> Self {
        n as i128
    }
    #[inline]
    fn add(self, other: Self) -> Result<Self> {
        self.checked_add(other).ok_or(Error::Overflow)
    }
    #[inline]
    fn mul(self, other: Self) -> Result<Self> {
        self.checked_mul(other).ok_or(Error::Overflow)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Converts a float slice whose entries are all integers.
pub fn to_integers(values: &ndarray::Array2<f64>) -> Result<ndarray::Array2<i128>> {
    for ((row, col), &value) in values.indexed_iter() {
        if value.fract() != 0.0 || !value.is_finite() || value.abs() > 2f64.powi(60) {
            return Err(Error::NonInteger { row, col, value });
        }
    }
    Ok(values.mapv(|v| v as i128))
}
