//! Planar geometry primitives: 2D vectors, SE(2) poses and rigid transforms,
//! angle wrapping, and oriented bounding-box overlap.
//!
//! Conventions used throughout the crate: x forward, y left, headings
//! counter-clockwise from +x, angles in radians, lengths in meters.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

/// 2D position or displacement in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the 3D cross product (self x other).
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_l1(self) -> f64 {
        self.x.abs() + self.y.abs()
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        self.scale(rhs)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Wraps an angle into [0, 2*pi), the heading range of [`Pose2`].
pub fn wrap_heading(a: f64) -> f64 {
    a.rem_euclid(TAU)
}

/// Position plus heading of an agent or object, heading in [0, 2*pi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose2 {
    /// Builds a pose, wrapping the heading into [0, 2*pi).
    pub fn new(position: Vec2, heading: f64) -> Self {
        Pose2 {
            position,
            heading: wrap_heading(heading),
        }
    }

    pub fn xyh(x: f64, y: f64, heading: f64) -> Self {
        Pose2::new(Vec2::new(x, y), heading)
    }

    /// The body-to-world transform of this pose.
    pub fn to_world_transform(&self) -> RigidTransform2 {
        RigidTransform2::new(self.heading, self.position)
    }
}

/// Rigid SE(2) transform. The rotation is stored as an angle so the
/// materialized matrix is orthonormal with determinant +1 by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform2 {
    rotation: f64,
    translation: Vec2,
}

impl RigidTransform2 {
    pub fn new(rotation: f64, translation: Vec2) -> Self {
        RigidTransform2 {
            rotation: wrap_angle(rotation),
            translation,
        }
    }

    pub fn identity() -> Self {
        RigidTransform2::new(0.0, Vec2::ZERO)
    }

    /// Rotation angle in (-pi, pi].
    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn translation(&self) -> Vec2 {
        self.translation
    }

    /// Row-major 2x2 rotation matrix.
    pub fn rotation_matrix(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.rotation.sin_cos();
        [[c, -s], [s, c]]
    }

    /// Applies the transform: returns R * p + t.
    pub fn apply(&self, p: Vec2) -> Vec2 {
        let (s, c) = self.rotation.sin_cos();
        Vec2::new(
            c * p.x - s * p.y + self.translation.x,
            s * p.x + c * p.y + self.translation.y,
        )
    }

    /// Composition: (a.compose(b))(p) == a(b(p)).
    pub fn compose(&self, other: &RigidTransform2) -> RigidTransform2 {
        RigidTransform2::new(
            self.rotation + other.rotation,
            self.apply(other.translation),
        )
    }

    /// Closed-form inverse (R^T, -R^T t).
    pub fn invert(&self) -> RigidTransform2 {
        let inv = RigidTransform2::new(-self.rotation, Vec2::ZERO);
        RigidTransform2::new(-self.rotation, -inv.apply(self.translation))
    }

    /// Applies the transform to a pose: position is mapped, heading is
    /// composed with the rotation and re-wrapped into [0, 2*pi).
    pub fn apply_pose(&self, pose: &Pose2) -> Pose2 {
        Pose2::new(self.apply(pose.position), pose.heading + self.rotation)
    }
}

/// Transform mapping points from the cooperative agent's body frame into the
/// ego body frame, given both agents' poses in a common world frame.
pub fn relative_transform_from_poses(ego_pose: &Pose2, coop_pose: &Pose2) -> RigidTransform2 {
    ego_pose
        .to_world_transform()
        .invert()
        .compose(&coop_pose.to_world_transform())
}

/// 3D box dimensions in meters. Height is carried through I/O but ignored by
/// the planar matching and fusion algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDims {
    pub height: f64,
    pub width: f64,
    pub length: f64,
}

impl BoxDims {
    pub fn new(height: f64, width: f64, length: f64) -> Self {
        BoxDims {
            height,
            width,
            length,
        }
    }
}

/// One detected object: BEV pose, 3D dimensions, identifier and confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectBox {
    pub id: u64,
    pub pose: Pose2,
    pub dims: BoxDims,
    pub score: f64,
}

impl ObjectBox {
    pub fn new(id: u64, pose: Pose2, dims: BoxDims, score: f64) -> Self {
        ObjectBox {
            id,
            pose,
            dims,
            score,
        }
    }

    pub fn position(&self) -> Vec2 {
        self.pose.position
    }

    /// BEV footprint corners in counter-clockwise order. Length extends along
    /// the heading, width across it.
    pub fn corners(&self) -> [Vec2; 4] {
        let (s, c) = self.pose.heading.sin_cos();
        let fwd = Vec2::new(c, s).scale(self.dims.length * 0.5);
        let left = Vec2::new(-s, c).scale(self.dims.width * 0.5);
        let p = self.pose.position;
        [
            p + fwd + left,
            p - fwd + left,
            p - fwd - left,
            p + fwd - left,
        ]
    }
}

/// Area cutoff below which a clipped overlap polygon counts as empty.
const SLIVER_AREA: f64 = 1e-12;

/// Exact intersection-over-union of two oriented BEV rectangles, via convex
/// polygon clipping (Sutherland-Hodgman).
pub fn rotated_box_iou(a: &ObjectBox, b: &ObjectBox) -> f64 {
    let pa = a.corners();
    let pb = b.corners();
    let inter = convex_clip_area(&pa, &pb);
    if inter < SLIVER_AREA {
        return 0.0;
    }
    let area_a = polygon_area(&pa);
    let area_b = polygon_area(&pb);
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

fn polygon_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        acc += p.cross(q);
    }
    acc.abs() * 0.5
}

/// Area of the intersection of a convex subject polygon with a convex
/// counter-clockwise clip polygon.
fn convex_clip_area(subject: &[Vec2], clip: &[Vec2]) -> f64 {
    let mut out: Vec<Vec2> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            return 0.0;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let edge = b - a;
        let input = std::mem::take(&mut out);
        let m = input.len();
        for k in 0..m {
            let cur = input[k];
            let next = input[(k + 1) % m];
            let cur_in = edge.cross(cur - a) >= 0.0;
            let next_in = edge.cross(next - a) >= 0.0;
            if cur_in {
                out.push(cur);
                if !next_in {
                    out.push(edge_intersection(a, b, cur, next));
                }
            } else if next_in {
                out.push(edge_intersection(a, b, cur, next));
            }
        }
    }
    polygon_area(&out)
}

/// Intersection of segment (p, q) with the infinite line through (a, b).
fn edge_intersection(a: Vec2, b: Vec2, p: Vec2, q: Vec2) -> Vec2 {
    let d1 = (b - a).cross(p - a);
    let d2 = (b - a).cross(q - a);
    let t = d1 / (d1 - d2);
    p + (q - p).scale(t)
}
