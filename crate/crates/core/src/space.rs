use nalgebra::{Matrix3, Vector2, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;
pub type Mat3 = Matrix3<f64>;

/// Index of the vertical coordinate.
pub const VERT: usize = 2;

pub fn point2(x: f64, y: f64) -> Vec3 {
    Vec3::new(x, 0.0, y)
}

pub fn point3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Tangential coordinates `x'` of a point.
pub fn tangential(p: &Vec3) -> Vec2 {
    Vec2::new(p.x, p.y)
}

pub fn lift(t: &Vec2, h: f64) -> Vec3 {
    Vec3::new(t.x, t.y, h)
}

/// Zeroes the unused middle row/column of a planar matrix and puts 1 on its diagonal.
pub fn pad_planar(m: &mut Mat3, dim: usize) {
    if dim == 2 {
        for k in 0..3 {
            m[(1, k)] = 0.0;
            m[(k, 1)] = 0.0;
        }
        m[(1, 1)] = 1.0;
    }
}

/// Zeroes the unused middle component in the planar case.
pub fn flatten(v: Vec3, dim: usize) -> Vec3 {
    if dim == 2 {
        Vec3::new(v.x, 0.0, v.z)
    } else {
        v
    }
}

/// A set `{level > 0}`, used to clip balls and spheres.
pub trait Region: Sync {
    fn dim(&self) -> usize;
    fn level(&self, p: &Vec3) -> f64;
    fn level_grad(&self, p: &Vec3) -> Vec3;

    /// Preferred polar axis for spherical coordinates about `p`.
    fn polar_axis(&self, p: &Vec3) -> Vec3 {
        let g = flatten(self.level_grad(p), self.dim());
        let n = g.norm();
        if n > 0.0 {
            g / n
        } else {
            Vec3::z()
        }
    }

    fn contains(&self, p: &Vec3) -> bool {
        self.level(p) > 0.0
    }
}

#[derive(Clone, Copy, Debug)]
pub struct WholeSpace {
    pub dim: usize,
}

impl Region for WholeSpace {
    fn dim(&self) -> usize {
        self.dim
    }
    fn level(&self, _p: &Vec3) -> f64 {
        1.0
    }
    fn level_grad(&self, _p: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
    fn polar_axis(&self, _p: &Vec3) -> Vec3 {
        Vec3::z()
    }
}

/// `{sign * x_vert > 0}`.
#[derive(Clone, Copy, Debug)]
pub struct HalfSpace {
    pub dim: usize,
    pub sign: f64,
}

impl HalfSpace {
    pub fn upper(dim: usize) -> Self {
        Self { dim, sign: 1.0 }
    }
    pub fn lower(dim: usize) -> Self {
        Self { dim, sign: -1.0 }
    }
}

impl Region for HalfSpace {
    fn dim(&self) -> usize {
        self.dim
    }
    fn level(&self, p: &Vec3) -> f64 {
        self.sign * p[VERT]
    }
    fn level_grad(&self, _p: &Vec3) -> Vec3 {
        Vec3::new(0.0, 0.0, self.sign)
    }
}

/// The blown-up region `(R - center) / scale`.
pub struct Rescaled<'a> {
    pub inner: &'a dyn Region,
    pub center: Vec3,
    pub scale: f64,
}

impl Region for Rescaled<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn level(&self, p: &Vec3) -> f64 {
        self.inner.level(&(self.center + self.scale * p)) / self.scale
    }
    fn level_grad(&self, p: &Vec3) -> Vec3 {
        self.inner.level_grad(&(self.center + self.scale * p))
    }
    fn polar_axis(&self, p: &Vec3) -> Vec3 {
        self.inner.polar_axis(&(self.center + self.scale * p))
    }
}

/// Orthonormal completion of a unit vector: returns `(e1, e2)` with `e1 x e2 = a`.
pub fn frame(a: &Vec3) -> (Vec3, Vec3) {
    let t = if a.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (t - a * a.dot(&t)).normalize();
    let e2 = a.cross(&e1);
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal() {
        for a in [Vec3::z(), Vec3::x(), Vec3::new(1.0, 2.0, -0.5).normalize()] {
            let (e1, e2) = frame(&a);
            assert!(e1.dot(&a).abs() < 1e-15);
            assert!(e2.dot(&a).abs() < 1e-15);
            assert!(e1.dot(&e2).abs() < 1e-15);
            assert!((e1.cross(&e2) - a).norm() < 1e-15);
        }
    }

    #[test]
    fn planar_padding() {
        let mut m = Mat3::from_element(2.0);
        pad_planar(&mut m, 2);
        assert_eq!(m[(1, 1)], 1.0);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(2, 2)], 2.0);
    }

    #[test]
    fn rescaled_half_space() {
        let h = HalfSpace::upper(2);
        let r = Rescaled { inner: &h, center: point2(0.0, 0.5), scale: 0.25 };
        assert!((r.level(&point2(0.0, -2.0)) - 0.0).abs() < 1e-15);
        assert!(r.contains(&point2(3.0, -1.0)));
    }
}
