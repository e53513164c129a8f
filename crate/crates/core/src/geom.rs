//! Fixed-size vector helpers.

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Unit vector, or `None` for a zero vector.
pub fn normalize(a: Vec3) -> Option<Vec3> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| scale(a, 1.0 / n))
}

/// Twice-area normal of triangle `abc` (not normalized).
#[inline]
pub fn triangle_normal(a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    cross(sub(b, a), sub(c, a))
}

#[inline]
pub fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * norm(triangle_normal(a, b, c))
}

/// Angle between `u` and `v`, robust near 0 and π.
#[inline]
pub fn angle_between(u: Vec3, v: Vec3) -> f64 {
    norm(cross(u, v)).atan2(dot(u, v))
}

/// Signed area of a 2D triangle (positive when counter-clockwise).
#[inline]
pub fn signed_area_2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn right_angle() {
        let a = angle_between([1.0, 0.0, 0.0], [0.0, 2.0, 0.0]);
        assert!((a - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(
            triangle_area([0.0; 3], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]),
            2.0
        );
        assert_eq!(signed_area_2d([0.0, 0.0], [0.0, 1.0], [1.0, 0.0]), -0.5);
    }
}
