//! Physical constants and unit conversions. Everything in the core API is SI:
//! metres, seconds, rad/s, rad/m.

use crate::real::Real;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[inline]
pub fn c<T: Real>() -> T {
    T::lit(SPEED_OF_LIGHT)
}

#[inline]
pub fn nm<T: Real>(x: T) -> T {
    x * T::lit(1e-9)
}

#[inline]
pub fn um<T: Real>(x: T) -> T {
    x * T::lit(1e-6)
}

#[inline]
pub fn mm<T: Real>(x: T) -> T {
    x * T::lit(1e-3)
}

/// Arc minutes to radians.
#[inline]
pub fn arcmin<T: Real>(x: T) -> T {
    x * T::PI() / T::lit(180.0 * 60.0)
}

#[inline]
pub fn to_arcmin<T: Real>(rad: T) -> T {
    rad * T::lit(180.0 * 60.0) / T::PI()
}

/// Vacuum wavelength (m) to angular frequency (rad/s).
#[inline]
pub fn omega_from_wavelength<T: Real>(lambda: T) -> T {
    T::TAU() * c::<T>() / lambda
}

/// Angular frequency (rad/s) to vacuum wavelength (m).
#[inline]
pub fn wavelength_from_omega<T: Real>(omega: T) -> T {
    T::TAU() * c::<T>() / omega
}
