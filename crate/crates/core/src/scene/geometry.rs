//! Poses and axis-aligned boxes.

use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

const QUAT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    /// Unit quaternion in (w, x, y, z) order.
    pub orientation: [f64; 4],
}

impl Pose {
    pub fn at(position: Vec3) -> Self {
        Self {
            position,
            orientation: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn is_unit(&self) -> bool {
        let n = self.orientation.iter().map(|c| c * c).sum::<f64>().sqrt();
        (n - 1.0).abs() <= QUAT_NORM_TOLERANCE
    }

    /// Rescales the quaternion to unit length; a zero quaternion becomes identity.
    pub fn normalized(&self) -> Self {
        let n = self.orientation.iter().map(|c| c * c).sum::<f64>().sqrt();
        let orientation = if n > 0.0 && n.is_finite() {
            self.orientation.map(|c| c / n)
        } else {
            [1.0, 0.0, 0.0, 0.0]
        };
        Self {
            position: self.position,
            orientation,
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::at([0.0; 3])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    /// Box of the given extents whose bottom face is centered on `base`.
    pub fn from_base(base: Vec3, size: Vec3) -> Self {
        Self {
            min: [base[0] - size[0] / 2.0, base[1] - size[1] / 2.0, base[2]],
            max: [
                base[0] + size[0] / 2.0,
                base[1] + size[1] / 2.0,
                base[2] + size[2],
            ],
        }
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|i| self.min[i] <= self.max[i])
    }

    pub fn size(&self) -> Vec3 {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn center(&self) -> Vec3 {
        [
            (self.min[0] + self.max[0]) / 2.0,
            (self.min[1] + self.max[1]) / 2.0,
            (self.min[2] + self.max[2]) / 2.0,
        ]
    }

    pub fn volume(&self) -> f64 {
        let s = self.size();
        s[0] * s[1] * s[2]
    }

    pub fn footprint_area(&self) -> f64 {
        let s = self.size();
        s[0] * s[1]
    }

    /// Length of the overlap of the two intervals on `axis` (zero when disjoint or touching).
    pub fn axis_overlap(&self, other: &Aabb, axis: usize) -> f64 {
        (self.max[axis].min(other.max[axis]) - self.min[axis].max(other.min[axis])).max(0.0)
    }

    pub fn intersection_volume(&self, other: &Aabb) -> f64 {
        (0..3).map(|a| self.axis_overlap(other, a)).product()
    }

    pub fn footprint_overlap(&self, other: &Aabb) -> f64 {
        self.axis_overlap(other, 0) * self.axis_overlap(other, 1)
    }

    /// True when the boxes share a region of positive volume.
    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.max[a] > other.min[a] && other.max[a] > self.min[a])
    }

    pub fn translated(&self, by: Vec3) -> Self {
        Self {
            min: [self.min[0] + by[0], self.min[1] + by[1], self.min[2] + by[2]],
            max: [self.max[0] + by[0], self.max[1] + by[1], self.max[2] + by[2]],
        }
    }

    /// Grows the box by `xy` horizontally and `z` vertically on every side.
    pub fn inflated(&self, xy: f64, z: f64) -> Self {
        Self {
            min: [self.min[0] - xy, self.min[1] - xy, self.min[2] - z],
            max: [self.max[0] + xy, self.max[1] + xy, self.max[2] + z],
        }
    }

    /// Componentwise repair of swapped bounds.
    pub fn repaired(&self) -> Self {
        let mut out = self.clone();
        for a in 0..3 {
            if out.min[a] > out.max[a] {
                std::mem::swap(&mut out.min[a], &mut out.max[a]);
            }
        }
        out
    }
}

pub fn horizontal_distance(a: &Aabb, b: &Aabb) -> f64 {
    let ca = a.center();
    let cb = b.center();
    ((ca[0] - cb[0]).powi(2) + (ca[1] - cb[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn touching_boxes_do_not_intersect() {
        let a = Aabb::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
        let b = Aabb::new([0.0, 0.0, 1.0], [1.0, 1.0, 2.0]);
        assert!(!a.intersects(&b));
        assert_eq!(a.intersection_volume(&b), 0.0);
        assert_eq!(a.footprint_overlap(&b), 1.0);
    }

    #[test]
    fn from_base_centers_footprint() {
        let b = Aabb::from_base([1.0, 2.0, 0.5], [0.2, 0.4, 0.1]);
        assert_eq!(b.center(), [1.0, 2.0, 0.55]);
        assert!((b.volume() - 0.008).abs() < 1e-12);
    }

    #[test]
    fn quaternion_normalization() {
        let p = Pose {
            position: [0.0; 3],
            orientation: [2.0, 0.0, 0.0, 0.0],
        };
        assert!(!p.is_unit());
        assert!(p.normalized().is_unit());
        let z = Pose {
            position: [0.0; 3],
            orientation: [0.0; 4],
        };
        assert_eq!(z.normalized().orientation, [1.0, 0.0, 0.0, 0.0]);
    }
}
