//! Rectangular sampling grids with anisotropic spacing.
//!
//! Voxel `(i_0, …, i_{D-1})` sits at the physical point `origin + i ⊙ spacing`.
//! Storage is linear with axis 0 varying fastest.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<const D: usize> {
    dims: [usize; D],
    spacing: [f64; D],
    origin: [f64; D],
}

impl<const D: usize> Grid<D> {
    pub fn new(dims: [usize; D], spacing: [f64; D]) -> Result<Self> {
        Self::with_origin(dims, spacing, [0.0; D])
    }

    pub fn with_origin(dims: [usize; D], spacing: [f64; D], origin: [f64; D]) -> Result<Self> {
        if D == 0 {
            return Err(Error::InvalidParameter("grid needs at least one axis".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidParameter(format!("grid dims must be positive, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be finite and positive, got {spacing:?}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid origin must be finite, got {origin:?}")));
        }
        Ok(Self { dims, spacing, origin })
    }

    /// Unit-spaced grid at the origin.
    pub fn unit(dims: [usize; D]) -> Result<Self> {
        Self::new(dims, [1.0; D])
    }

    pub fn dims(&self) -> [usize; D] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; D] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; D] {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> [usize; D] {
        let mut s = [1usize; D];
        for k in 1..D {
            s[k] = s[k - 1] * self.dims[k - 1];
        }
        s
    }

    #[inline]
    pub fn index(&self, coords: &[usize; D]) -> usize {
        let mut idx = 0;
        for k in (0..D).rev() {
            idx = idx * self.dims[k] + coords[k];
        }
        idx
    }

    #[inline]
    pub fn coords(&self, mut idx: usize) -> [usize; D] {
        let mut c = [0usize; D];
        for k in 0..D {
            c[k] = idx % self.dims[k];
            idx /= self.dims[k];
        }
        c
    }

    #[inline]
    pub fn point_of(&self, coords: &[usize; D]) -> [f64; D] {
        let mut p = [0.0; D];
        for k in 0..D {
            p[k] = self.origin[k] + coords[k] as f64 * self.spacing[k];
        }
        p
    }

    #[inline]
    pub fn point(&self, idx: usize) -> [f64; D] {
        self.point_of(&self.coords(idx))
    }

    /// Physical positions of every voxel, in storage order.
    pub fn points(&self) -> Vec<[f64; D]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Fractional voxel coordinates of a physical point.
    #[inline]
    pub fn continuous_index(&self, p: &[f64; D]) -> [f64; D] {
        let mut u = [0.0; D];
        for k in 0..D {
            u[k] = (p[k] - self.origin[k]) / self.spacing[k];
        }
        u
    }

    /// True when the fractional index lies in the closed box spanned by the voxel centres.
    #[inline]
    pub fn contains_index(&self, u: &[f64; D]) -> bool {
        (0..D).all(|k| u[k] >= 0.0 && u[k] <= (self.dims[k] - 1) as f64)
    }

    pub fn contains_point(&self, p: &[f64; D]) -> bool {
        self.contains_index(&self.continuous_index(p))
    }

    /// Linear index of the voxel nearest to a physical point inside the grid box.
    pub fn nearest_index(&self, p: &[f64; D]) -> Option<usize> {
        let u = self.continuous_index(p);
        if !self.contains_index(&u) {
            return None;
        }
        Some(self.nearest_of_index(&u))
    }

    #[inline]
    pub(crate) fn nearest_of_index(&self, u: &[f64; D]) -> usize {
        let mut idx = 0;
        for k in (0..D).rev() {
            let c = (u[k] + 0.5).floor() as usize;
            idx = idx * self.dims[k] + c.min(self.dims[k] - 1);
        }
        idx
    }

    /// Physical extent covered by voxel centres, per axis.
    pub fn extent(&self) -> [f64; D] {
        let mut e = [0.0; D];
        for k in 0..D {
            e[k] = (self.dims[k] - 1) as f64 * self.spacing[k];
        }
        e
    }

    /// Physical size of the image field of view (`dims · spacing`).
    pub fn size(&self) -> [f64; D] {
        let mut e = [0.0; D];
        for k in 0..D {
            e[k] = self.dims[k] as f64 * self.spacing[k];
        }
        e
    }

    pub fn diagonal(&self) -> f64 {
        self.size().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Physical centre of the voxel-centre box.
    pub fn center(&self) -> [f64; D] {
        let e = self.extent();
        let mut c = [0.0; D];
        for k in 0..D {
            c[k] = self.origin[k] + 0.5 * e[k];
        }
        c
    }

    /// Physical positions of the `2^D` corner voxels.
    pub fn corners(&self) -> Vec<[f64; D]> {
        (0..1usize << D)
            .map(|mask| {
                let mut c = [0usize; D];
                for k in 0..D {
                    if mask & (1 << k) != 0 {
                        c[k] = self.dims[k] - 1;
                    }
                }
                self.point_of(&c)
            })
            .collect()
    }

    /// Start offsets of all 1-D lines running along `axis`.
    pub(crate) fn line_starts(&self, axis: usize) -> Vec<usize> {
        let stride = self.strides()[axis];
        let n = self.dims[axis];
        (0..self.len())
            .filter(|&i| (i / stride).is_multiple_of(n))
            .collect()
    }

    pub(crate) fn same_shape(&self, other: &Grid<D>) -> bool {
        self.dims == other.dims
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = Grid::new([3, 4, 5], [1.0, 2.0, 0.5]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.index(&g.coords(i)), i);
        }
        assert_eq!(g.strides(), [1, 3, 12]);
    }

    #[test]
    fn physical_points_respect_spacing_and_origin() {
        let g = Grid::with_origin([4, 4], [0.5, 2.0], [1.0, -1.0]).unwrap();
        assert_eq!(g.point_of(&[2, 3]), [2.0, 5.0]);
        assert_eq!(g.center(), [1.75, 2.0]);
        assert_eq!(g.nearest_index(&[1.2, -0.9]), Some(0));
        assert_eq!(g.nearest_index(&[-0.1, 0.0]), None);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Grid::new([0, 3], [1.0, 1.0]).is_err());
        assert!(Grid::new([2, 3], [1.0, 0.0]).is_err());
        assert!(Grid::new([2, 3], [f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn line_starts_cover_each_line_once() {
        let g = Grid::unit([3, 4, 2]).unwrap();
        assert_eq!(g.line_starts(0).len(), 8);
        assert_eq!(g.line_starts(1).len(), 6);
        assert_eq!(g.line_starts(2).len(), 12);
    }
}
