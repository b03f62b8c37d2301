//! Poincaré disk helpers on complex coordinates.

use num_complex::Complex64;

/// Hyperbolic distance, via `acosh(1 + δ)` evaluated with `ln_1p` so both
/// tiny and large separations keep full precision.
pub fn distance(z: Complex64, w: Complex64) -> f64 {
    let num = 2.0 * (z - w).norm_sqr();
    let den = one_minus_norm_sqr(z) * one_minus_norm_sqr(w);
    if den <= 0.0 {
        // Rounded onto the boundary: about 37 units out, f64 coordinates run out.
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let delta = num / den;
    (delta + (delta * (delta + 2.0)).sqrt()).ln_1p()
}

fn one_minus_norm_sqr(z: Complex64) -> f64 {
    let r = z.norm();
    (1.0 - r) * (1.0 + r)
}

/// The disk automorphism sending `p` to the origin.
pub fn to_origin(p: Complex64, z: Complex64) -> Complex64 {
    (z - p) / (Complex64::new(1.0, 0.0) - p.conj() * z)
}

/// Inverse of [`to_origin`].
pub fn from_origin(p: Complex64, w: Complex64) -> Complex64 {
    (w + p) / (Complex64::new(1.0, 0.0) + p.conj() * w)
}

/// Point at hyperbolic distance `t` from `p` along the geodesic towards `q`.
pub fn along(p: Complex64, q: Complex64, t: f64) -> Complex64 {
    let q0 = to_origin(p, q);
    let r = q0.norm();
    if r == 0.0 {
        return p;
    }
    let w = q0 * ((t / 2.0).tanh() / r);
    from_origin(p, w)
}

/// Point at hyperbolic distance `s` from `center` in direction `angle`
/// (measured at the origin before transport).
pub fn polar(center: Complex64, s: f64, angle: f64) -> Complex64 {
    let w = Complex64::from_polar((s / 2.0).tanh(), angle);
    from_origin(center, w)
}

/// Euclidean radius of the disk image of a hyperbolic ball of radius `s` at the origin.
pub fn euclidean_radius(s: f64) -> f64 {
    (s / 2.0).tanh()
}
