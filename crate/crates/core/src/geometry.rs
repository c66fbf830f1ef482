//! Analytic halfspaces and axis-aligned boxes.
//!
//! Every shape here exposes an exact signed distance function. The sampling
//! code relies on that: exact distances are 1-Lipschitz, so a value at a
//! cell center bounds the sign over the whole cell.

use nalgebra::{Matrix3, Vector3};

use crate::error::{CsgError, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance for unit-axis and orthonormality checks.
const SHAPE_TOL: f64 = 1e-9;

/// Axis-aligned bounding box. `min > max` on any axis denotes the empty box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    /// True when the box has positive extent along every axis.
    pub fn is_solid(&self) -> bool {
        (0..3).all(|i| self.min[i] < self.max[i])
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        Aabb::new(self.min.inf(&other.min), self.max.sup(&other.max))
    }

    pub fn intersection(&self, other: &Aabb) -> Aabb {
        let b = Aabb::new(self.min.sup(&other.min), self.max.inf(&other.max));
        if b.is_empty() {
            Aabb::empty()
        } else {
            b
        }
    }

    pub fn extent(&self) -> Vec3 {
        if self.is_empty() {
            Vec3::zeros()
        } else {
            self.max - self.min
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        !other.is_empty() && self.contains(&other.min) && self.contains(&other.max)
    }

    pub fn padded(&self, margin: f64) -> Aabb {
        if self.is_empty() {
            return *self;
        }
        Aabb::new(self.min.add_scalar(-margin), self.max.add_scalar(margin))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    /// Oriented box. `rotation` maps box-local coordinates to world coordinates.
    Box {
        center: Vec3,
        half_extents: Vec3,
        rotation: Matrix3<f64>,
    },
    /// Capped cylinder centered at `center`, extending `half_height` along `axis`.
    Cylinder {
        center: Vec3,
        axis: Vec3,
        radius: f64,
        half_height: f64,
    },
}

impl Shape {
    pub fn sphere(center: [f64; 3], radius: f64) -> Shape {
        Shape::Sphere {
            center: Vec3::from(center),
            radius,
        }
    }

    pub fn aligned_box(center: [f64; 3], half_extents: [f64; 3]) -> Shape {
        Shape::Box {
            center: Vec3::from(center),
            half_extents: Vec3::from(half_extents),
            rotation: Matrix3::identity(),
        }
    }

    /// Box rotated by `angle` radians about the world axis `about`.
    pub fn rotated_box(center: [f64; 3], half_extents: [f64; 3], about: [f64; 3], angle: f64) -> Shape {
        let axis = nalgebra::Unit::new_normalize(Vec3::from(about));
        let rotation = *nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix();
        Shape::Box {
            center: Vec3::from(center),
            half_extents: Vec3::from(half_extents),
            rotation,
        }
    }

    pub fn cylinder(center: [f64; 3], axis: [f64; 3], radius: f64, half_height: f64) -> Shape {
        Shape::Cylinder {
            center: Vec3::from(center),
            axis: Vec3::from(axis).normalize(),
            radius,
            half_height,
        }
    }

    pub fn sdf(&self, p: &Vec3) -> f64 {
        match self {
            Shape::Sphere { center, radius } => (p - center).norm() - radius,
            Shape::Box {
                center,
                half_extents,
                rotation,
            } => {
                let local = rotation.transpose() * (p - center);
                let q = local.abs() - half_extents;
                let outside = q.sup(&Vec3::zeros()).norm();
                let inside = q.x.max(q.y).max(q.z).min(0.0);
                outside + inside
            }
            Shape::Cylinder {
                center,
                axis,
                radius,
                half_height,
            } => {
                let d = p - center;
                let along = d.dot(axis);
                let radial = (d - axis * along).norm();
                let dx = radial - radius;
                let dy = along.abs() - half_height;
                let outside = (dx.max(0.0).powi(2) + dy.max(0.0).powi(2)).sqrt();
                dx.max(dy).min(0.0) + outside
            }
        }
    }

    pub fn aabb(&self) -> Aabb {
        match self {
            Shape::Sphere { center, radius } => Aabb::new(center.add_scalar(-radius), center.add_scalar(*radius)),
            Shape::Box {
                center,
                half_extents,
                rotation,
            } => {
                let ext = rotation.abs() * half_extents;
                Aabb::new(center - ext, center + ext)
            }
            Shape::Cylinder {
                center,
                axis,
                radius,
                half_height,
            } => {
                let ext = Vec3::from_fn(|i, _| {
                    let a = axis[i];
                    half_height * a.abs() + radius * (1.0 - a * a).max(0.0).sqrt()
                });
                Aabb::new(center - ext, center + ext)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(CsgError::InvalidShape(msg.to_string()));
        match self {
            Shape::Sphere { radius, .. } => {
                if !(*radius > 0.0) {
                    return bad("sphere radius must be positive");
                }
            }
            Shape::Box {
                half_extents,
                rotation,
                ..
            } => {
                if half_extents.iter().any(|h| !(*h > 0.0)) {
                    return bad("box half extents must be positive");
                }
                let err = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
                if err > SHAPE_TOL {
                    return bad("box rotation is not orthonormal");
                }
            }
            Shape::Cylinder {
                axis,
                radius,
                half_height,
                ..
            } => {
                if !(*radius > 0.0) || !(*half_height > 0.0) {
                    return bad("cylinder radius and half height must be positive");
                }
                if (axis.norm() - 1.0).abs() > SHAPE_TOL {
                    return bad("cylinder axis must be a unit vector");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub id: u32,
    pub shape: Shape,
}

impl Halfspace {
    pub fn new(id: u32, shape: Shape) -> Self {
        Self { id, shape }
    }

    #[inline]
    pub fn sdf(&self, p: &Vec3) -> f64 {
        self.shape.sdf(p)
    }

    pub fn aabb(&self) -> Aabb {
        self.shape.aabb()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn sphere_sign_convention() {
        let s = Shape::sphere([0.0, 0.0, 0.0], 1.0);
        assert_eq!(s.sdf(&Vec3::zeros()), -1.0);
        assert!(s.sdf(&Vec3::new(2.0, 0.0, 0.0)) > 0.0);
        assert!(s.sdf(&Vec3::new(1.0, 0.0, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn box_surface_probes() {
        let b = Shape::rotated_box([1.0, 2.0, 3.0], [1.0, 2.0, 0.5], [0.0, 0.0, 1.0], FRAC_PI_4);
        b.validate().unwrap();
        let Shape::Box { rotation, center, half_extents } = &b else { unreachable!() };
        for axis in 0..3 {
            let mut local = Vec3::zeros();
            local[axis] = half_extents[axis];
            let p = center + rotation * local;
            assert!(b.sdf(&p).abs() < 1e-6);
            assert!(b.sdf(&(center + rotation * (local * 0.9))) < 0.0);
            assert!(b.sdf(&(center + rotation * (local * 1.1))) > 0.0);
        }
        // Outside a corner the distance is Euclidean.
        let a = Shape::aligned_box([0.0; 3], [1.0; 3]);
        let d = a.sdf(&Vec3::new(2.0, 2.0, 2.0));
        assert!((d - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cylinder_surface_probes() {
        let c = Shape::cylinder([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], 2.0, 3.0);
        assert!(c.sdf(&Vec3::new(2.0, 0.0, 0.0)).abs() < 1e-12);
        assert!(c.sdf(&Vec3::new(0.0, 0.0, 3.0)).abs() < 1e-12);
        assert_eq!(c.sdf(&Vec3::zeros()), -2.0);
        assert!((c.sdf(&Vec3::new(3.0, 0.0, 4.0)) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn aabb_contains_interior_samples() {
        let shapes = [
            Shape::sphere([0.3, -1.0, 2.0], 1.5),
            Shape::rotated_box([0.0; 3], [1.0, 0.2, 3.0], [1.0, 1.0, 0.0], 0.7),
            Shape::cylinder([1.0, 1.0, 1.0], [1.0, 2.0, 3.0], 0.5, 2.0),
        ];
        for s in &shapes {
            let bb = s.aabb().padded(1e-9);
            let ext = bb.extent() * 0.75 + Vec3::repeat(1.0);
            let c = bb.center();
            let n = 24;
            for i in 0..=n {
                for j in 0..=n {
                    for k in 0..=n {
                        let t = Vec3::new(i as f64, j as f64, k as f64) / n as f64 * 2.0 - Vec3::repeat(1.0);
                        let p = c + ext.component_mul(&t);
                        if s.sdf(&p) <= 0.0 {
                            assert!(bb.contains(&p), "{s:?} {p:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(Shape::sphere([0.0; 3], 0.0).validate().is_err());
        let c = Shape::Cylinder {
            center: Vec3::zeros(),
            axis: Vec3::new(1.0, 1.0, 0.0),
            radius: 1.0,
            half_height: 1.0,
        };
        assert!(c.validate().is_err());
        let b = Shape::Box {
            center: Vec3::zeros(),
            half_extents: Vec3::repeat(1.0),
            rotation: Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
        };
        assert!(b.validate().is_err());
    }
}
