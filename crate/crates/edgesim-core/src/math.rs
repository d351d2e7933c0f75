//! Thin wrappers over `libm` for the float operations the core needs.
//!
//! The crate is `no_std`, so the inherent `f64` methods that live in `std`
//! (`ln`, `sqrt`, `abs`, ...) are not available; everything funnels through
//! here instead so call sites stay readable.

/// Natural logarithm.
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// Square root.
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Absolute value.
#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}
