//! Uniform grids, scalar fields and the discrete calculus on them.
//!
//! Nodes are indexed by `(i, j)` with `i` along x₁ (columns) and `j` along x₂
//! (rows). Storage is row-major with `i` fastest. Node `(i, j)` sits at the
//! physical position `(i·ε, j·ε)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform ε-grid with `width × height` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    width: usize,
    height: usize,
    spacing: f64,
}

impl GridGeometry {
    pub fn new(width: usize, height: usize, spacing: f64) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::Geometry(format!(
                "grid must be at least 3x3, got {width}x{height}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Geometry(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        Ok(GridGeometry {
            width,
            height,
            spacing,
        })
    }

    /// Grid with unit spacing, the convention for images.
    pub fn unit(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, 1.0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.width && j < self.height);
        j * self.width + i
    }

    /// Inverse of [`GridGeometry::index`].
    #[inline]
    pub fn node(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    /// Physical coordinates of node `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.spacing, j as f64 * self.spacing)
    }

    /// Index of `(i + dx, j + dy)` if it lies on the grid.
    #[inline]
    pub fn offset(&self, i: usize, j: usize, dx: i64, dy: i64) -> Option<usize> {
        let ni = i as i64 + dx;
        let nj = j as i64 + dy;
        if ni < 0 || nj < 0 || ni >= self.width as i64 || nj >= self.height as i64 {
            None
        } else {
            Some(nj as usize * self.width + ni as usize)
        }
    }

    /// Distance in nodes from `(i, j)` to the nearest grid edge.
    pub fn boundary_distance(&self, i: usize, j: usize) -> usize {
        i.min(j).min(self.width - 1 - i).min(self.height - 1 - j)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        self.boundary_distance(i, j) == 0
    }

    /// Same node counts with a different spacing.
    pub fn with_spacing(&self, spacing: f64) -> Result<Self> {
        Self::new(self.width, self.height, spacing)
    }

    pub(crate) fn ensure_same(&self, other: &GridGeometry, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "geometry mismatch for {what}: {}x{} (ε={}) vs {}x{} (ε={})",
                self.width, self.height, self.spacing, other.width, other.height, other.spacing
            )))
        }
    }
}

/// Real-valued function sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl ScalarField {
    /// Field with every node equal to `fill`.
    pub fn new(geometry: GridGeometry, fill: f64) -> Self {
        ScalarField {
            geometry,
            values: vec![fill; geometry.len()],
        }
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        Self::new(geometry, 0.0)
    }

    pub fn from_values(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::Argument(format!(
                "expected {} values for a {}x{} grid, got {}",
                geometry.len(),
                geometry.width(),
                geometry.height(),
                values.len()
            )));
        }
        Ok(ScalarField { geometry, values })
    }

    /// Samples `f(x₁, x₂)` at every node position.
    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(geometry.len());
        for j in 0..geometry.height() {
            for i in 0..geometry.width() {
                let (x, y) = geometry.position(i, j);
                values.push(f(x, y));
            }
        }
        ScalarField { geometry, values }
    }

    /// Builds a field from node indices.
    pub fn from_index_fn(geometry: GridGeometry, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(geometry.len());
        for j in 0..geometry.height() {
            for i in 0..geometry.width() {
                values.push(f(i, j));
            }
        }
        ScalarField { geometry, values }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.geometry.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.geometry.index(i, j);
        self.values[k] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            geometry: self.geometry,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.geometry
            .ensure_same(&other.geometry, "pointwise combination")?;
        Ok(ScalarField {
            geometry: self.geometry,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Adds `c` to every node.
    pub fn shift(&mut self, c: f64) {
        for v in &mut self.values {
            *v += c;
        }
    }

    /// Plain (unweighted) sum of pointwise products.
    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        self.geometry.ensure_same(&other.geometry, "dot product")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Largest pointwise absolute difference.
    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.geometry.ensure_same(&other.geometry, "comparison")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Integer lattice offset `z ∈ Λ ⊂ ℤ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StencilVector {
    pub dx: i32,
    pub dy: i32,
}

impl StencilVector {
    pub const ZERO: StencilVector = StencilVector { dx: 0, dy: 0 };
    pub const E1: StencilVector = StencilVector { dx: 1, dy: 0 };
    pub const E2: StencilVector = StencilVector { dx: 0, dy: 1 };

    pub const fn new(dx: i32, dy: i32) -> Self {
        StencilVector { dx, dy }
    }

    pub fn is_zero(self) -> bool {
        self.dx == 0 && self.dy == 0
    }

    /// `{±e₁, ±e₂}`.
    pub fn axes() -> Vec<StencilVector> {
        vec![Self::E1, -Self::E1, Self::E2, -Self::E2]
    }
}

/// Forward difference `(u(x + εz) − u(x)) / ε`; zero where `x + εz` is off the grid.
pub fn difference_op(u: &ScalarField, z: StencilVector) -> ScalarField {
    let g = *u.geometry();
    let inv = 1.0 / g.spacing();
    ScalarField::from_index_fn(g, |i, j| match g.offset(i, j, z.dx as i64, z.dy as i64) {
        Some(k) => (u.values[k] - u.get(i, j)) * inv,
        None => 0.0,
    })
}

/// Discrete L² norm `sqrt(ε² Σ u²)`.
pub fn l2_norm(u: &ScalarField) -> f64 {
    let h = u.geometry().spacing();
    (h * h * u.values().iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Discrete W^{1,2} seminorm `sqrt(ε² Σ_x Σ_z |X_z u(x)|²)`.
pub fn sobolev_seminorm(u: &ScalarField, lambda: &[StencilVector]) -> Result<f64> {
    if lambda.is_empty() {
        return Err(Error::Argument("stencil set must not be empty".into()));
    }
    let h = u.geometry().spacing();
    let total: f64 = lambda
        .iter()
        .map(|&z| {
            difference_op(u, z)
                .values()
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
        })
        .sum();
    Ok((h * h * total).sqrt())
}

/// Piecewise-constant extension: the value of the node `y` with
/// `y_k − ε/2 ≤ x_k < y_k + ε/2` in both coordinates.
pub fn mesh_completion(u: &ScalarField, x: (f64, f64)) -> Result<f64> {
    let g = u.geometry();
    let locate = |coord: f64, n: usize| -> Option<usize> {
        let k = (coord / g.spacing() + 0.5).floor();
        (k >= 0.0 && k < n as f64).then_some(k as usize)
    };
    match (locate(x.0, g.width()), locate(x.1, g.height())) {
        (Some(i), Some(j)) if x.0.is_finite() && x.1.is_finite() => Ok(u.get(i, j)),
        _ => Err(Error::OutOfDomain { x: x.0, y: x.1 }),
    }
}

impl std::ops::Neg for StencilVector {
    type Output = StencilVector;

    fn neg(self) -> StencilVector {
        StencilVector {
            dx: -self.dx,
            dy: -self.dy,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_rejects_small_grids() {
        assert!(GridGeometry::unit(2, 2).is_err());
        assert!(GridGeometry::new(4, 4, 0.0).is_err());
        assert!(GridGeometry::new(4, 4, f64::NAN).is_err());
    }

    #[test]
    fn fill_values() {
        let g = GridGeometry::unit(4, 4).unwrap();
        assert!(ScalarField::new(g, 0.0).values().iter().all(|&v| v == 0.0));
        assert!(ScalarField::new(g, 1.0).values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn delta_difference() {
        let g = GridGeometry::unit(5, 5).unwrap();
        let mut u = ScalarField::zeros(g);
        u.set(2, 2, 1.0);
        let d = difference_op(&u, StencilVector::E1);
        for j in 0..5 {
            for i in 0..5 {
                let expected = match (i, j) {
                    (2, 2) => -1.0,
                    (1, 2) => 1.0,
                    _ => 0.0,
                };
                assert_eq!(d.get(i, j), expected, "node ({i},{j})");
            }
        }
    }

    #[test]
    fn affine_difference_is_exact() {
        let g = GridGeometry::unit(6, 5).unwrap();
        let u = ScalarField::from_fn(g, |x, _| x);
        let d = difference_op(&u, StencilVector::E1);
        for j in 0..5 {
            for i in 0..5 {
                assert_eq!(d.get(i, j), 1.0);
            }
            assert_eq!(d.get(5, j), 0.0);
        }
    }

    #[test]
    fn l2_norm_examples() {
        let g = GridGeometry::unit(4, 4).unwrap();
        assert_eq!(l2_norm(&ScalarField::new(g, 1.0)), 4.0);
        assert_eq!(l2_norm(&ScalarField::zeros(g)), 0.0);
        let g = GridGeometry::new(4, 4, 0.5).unwrap();
        assert_eq!(l2_norm(&ScalarField::new(g, 1.0)), 2.0);
    }

    #[test]
    fn seminorm_of_linear_ramp() {
        let g = GridGeometry::unit(5, 4).unwrap();
        let u = ScalarField::from_fn(g, |x, _| x);
        let s = sobolev_seminorm(&u, &[StencilVector::E1]).unwrap();
        assert!((s - (4.0f64 * 4.0).sqrt()).abs() < 1e-12);
        assert!(sobolev_seminorm(&u, &[]).is_err());
        assert_eq!(
            sobolev_seminorm(&ScalarField::new(g, 3.0), &StencilVector::axes()).unwrap(),
            0.0
        );
    }

    #[test]
    fn mesh_completion_half_open() {
        let g = GridGeometry::unit(4, 4).unwrap();
        let u = ScalarField::from_index_fn(g, |i, j| (10 * j + i) as f64);
        assert_eq!(mesh_completion(&u, (1.0, 2.0)).unwrap(), 21.0);
        assert_eq!(mesh_completion(&u, (1.49, 2.0)).unwrap(), 21.0);
        assert_eq!(mesh_completion(&u, (1.5, 2.0)).unwrap(), 22.0);
        assert_eq!(mesh_completion(&u, (-0.5, -0.5)).unwrap(), 0.0);
        assert!(mesh_completion(&u, (3.5, 0.0)).is_err());
        assert!(mesh_completion(&u, (-0.51, 0.0)).is_err());
    }
}
