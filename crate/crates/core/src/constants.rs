//! Physical constants (CODATA 2018, SI exact where defined).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// Elementary charge, C.
pub const Q_E: f64 = 1.602_176_634e-19;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
