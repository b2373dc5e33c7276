//! Minimal 3-vector helpers for ray resolution.

use crate::model::FloorPlane;

pub type Vec3 = [f64; 3];

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

/// Angle between two unit vectors, in degrees.
pub fn angle_deg(a: Vec3, b: Vec3) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Nearest positive ray parameter at which `origin + t·dir` meets the sphere,
/// for unit `dir`.
pub fn ray_sphere(origin: Vec3, dir: Vec3, center: Vec3, radius: f64) -> Option<f64> {
    let oc = sub(origin, center);
    let b = dot(oc, dir);
    let c = dot(oc, oc) - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sqrt_d = disc.sqrt();
    let t_near = -b - sqrt_d;
    if t_near > 0.0 {
        return Some(t_near);
    }
    let t_far = -b + sqrt_d;
    (t_far > 0.0).then_some(t_far)
}

/// Deterministic orthonormal in-plane axes for a plane normal. The same
/// basis is used by ray resolution and heatmap rasterization, so plane-local
/// (u, v) coordinates are consistent everywhere.
pub fn plane_basis(normal: Vec3) -> (Vec3, Vec3) {
    let n = normalize(normal);
    let helper = if n[1].abs() > 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = normalize(cross(helper, n));
    let v = cross(n, u);
    (u, v)
}

/// Intersection of a forward ray with the plane, as plane-local (u, v)
/// meters from the plane origin. Bounds against the plane extent are the
/// caller's concern.
pub fn ray_plane(origin: Vec3, dir: Vec3, plane: &FloorPlane) -> Option<(f64, f64, f64)> {
    let n = normalize(plane.normal);
    let denom = dot(dir, n);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = dot(sub(plane.origin, origin), n) / denom;
    if t <= 0.0 {
        return None;
    }
    let hit = add(origin, scale(dir, t));
    let rel = sub(hit, plane.origin);
    let (u_axis, v_axis) = plane_basis(plane.normal);
    Some((t, dot(rel, u_axis), dot(rel, v_axis)))
}
