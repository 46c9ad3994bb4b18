//! Pointwise heterogeneous operators `L = a₁Δ + a₂X²_θ − a₃X⁴_θ`.
//!
//! Boundaries are Neumann through half-sample mirror ghosts (`u(−1) = u(0)`),
//! which turns the 5-point Laplacian into the graph Laplacian of the grid.
//! The mixed derivative is the 4-corner stencil at every node off the
//! boundary ring; on the ring it is the symmetric average of the four
//! one-sided products, so that `X²_θ` is the negative Hessian of the
//! discrete energy for any θ and stays symmetric negative semidefinite.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, ScalarField};
use crate::orientation::OrientationMap;
use crate::rng;
use crate::sparse::{BandedOperator, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    X1,
    X2,
}

#[derive(Clone, Copy)]
struct Lines {
    n: usize,
    stride: usize,
}

fn lines(g: &GridGeometry, axis: Axis) -> Lines {
    match axis {
        Axis::X1 => Lines {
            n: g.width(),
            stride: 1,
        },
        Axis::X2 => Lines {
            n: g.height(),
            stride: g.width(),
        },
    }
}

fn position(g: &GridGeometry, k: usize, axis: Axis) -> usize {
    match axis {
        Axis::X1 => k % g.width(),
        Axis::X2 => k / g.width(),
    }
}

/// Forward difference along an axis, zero at the last node (unscaled).
fn forward(u: &[f64], g: &GridGeometry, axis: Axis) -> Vec<f64> {
    let Lines { n, stride } = lines(g, axis);
    (0..u.len())
        .map(|k| {
            if position(g, k, axis) + 1 < n {
                u[k + stride] - u[k]
            } else {
                0.0
            }
        })
        .collect()
}

/// Backward difference along an axis, zero at the first node (unscaled).
fn backward(u: &[f64], g: &GridGeometry, axis: Axis) -> Vec<f64> {
    let Lines { stride, .. } = lines(g, axis);
    (0..u.len())
        .map(|k| {
            if position(g, k, axis) > 0 {
                u[k] - u[k - stride]
            } else {
                0.0
            }
        })
        .collect()
}

/// Second difference with mirrored ghosts (unscaled).
fn second(u: &[f64], g: &GridGeometry, axis: Axis) -> Vec<f64> {
    let Lines { n, stride } = lines(g, axis);
    (0..u.len())
        .map(|k| {
            let p = position(g, k, axis);
            let prev = if p > 0 { u[k - stride] } else { u[k] };
            let next = if p + 1 < n { u[k + stride] } else { u[k] };
            prev - 2.0 * u[k] + next
        })
        .collect()
}

/// `S = forward + backward`: `u(p+1) − u(p−1)` inside, one-sided at the ends.
fn sum_difference(u: &[f64], g: &GridGeometry, axis: Axis) -> Vec<f64> {
    let Lines { n, stride } = lines(g, axis);
    (0..u.len())
        .map(|k| {
            let p = position(g, k, axis);
            let prev = if p > 0 { u[k - stride] } else { u[k] };
            let next = if p + 1 < n { u[k + stride] } else { u[k] };
            next - prev
        })
        .collect()
}

/// Transpose of [`sum_difference`].
fn sum_difference_t(v: &[f64], g: &GridGeometry, axis: Axis) -> Vec<f64> {
    let Lines { n, stride } = lines(g, axis);
    (0..v.len())
        .map(|k| {
            let p = position(g, k, axis);
            if p == 0 {
                -v[k] - v[k + stride]
            } else if p + 1 == n {
                v[k - stride] + v[k]
            } else {
                v[k - stride] - v[k + stride]
            }
        })
        .collect()
}

/// Mixed second derivative, unscaled: `−(S₁ᵀS₂ + S₂ᵀS₁)/8`.
fn mixed(u: &[f64], g: &GridGeometry) -> Vec<f64> {
    let a = sum_difference_t(&sum_difference(u, g, Axis::X2), g, Axis::X1);
    let b = sum_difference_t(&sum_difference(u, g, Axis::X1), g, Axis::X2);
    a.iter().zip(&b).map(|(x, y)| -(x + y) / 8.0).collect()
}

/// `(cos²θ, 2 cosθ sinθ, sin²θ)` with round-off residue at axis-aligned
/// angles flushed to zero.
pub fn direction_weights(theta: f64) -> (f64, f64, f64) {
    let (s, c) = theta.sin_cos();
    let flush = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    (flush(c * c), flush(2.0 * c * s), flush(s * s))
}

/// 5-point Laplacian with Neumann mirror ghosts.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let g = *u.geometry();
    let inv = 1.0 / (g.spacing() * g.spacing());
    let d1 = second(u.values(), &g, Axis::X1);
    let d2 = second(u.values(), &g, Axis::X2);
    let values = d1.iter().zip(&d2).map(|(a, b)| (a + b) * inv).collect();
    ScalarField::from_values(g, values).expect("same geometry")
}

/// `X²_θ u = cos²θ ∂₁₁u + 2cosθ sinθ ∂₁₂u + sin²θ ∂₂₂u` with θ read per node.
pub fn directional_second(u: &ScalarField, theta: &OrientationMap) -> Result<ScalarField> {
    let g = *u.geometry();
    g.ensure_same(theta.geometry(), "directional derivative")?;
    let inv = 1.0 / (g.spacing() * g.spacing());
    let d11 = second(u.values(), &g, Axis::X1);
    let d22 = second(u.values(), &g, Axis::X2);
    let d12 = mixed(u.values(), &g);
    let values = theta
        .values()
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let (cc, sc2, ss) = direction_weights(t);
            (cc * d11[k] + sc2 * d12[k] + ss * d22[k]) * inv
        })
        .collect();
    ScalarField::from_values(g, values)
}

/// `X⁴_θ = X²_θ ∘ X²_θ` with the same θ field in both applications.
pub fn directional_fourth(u: &ScalarField, theta: &OrientationMap) -> Result<ScalarField> {
    directional_second(&directional_second(u, theta)?, theta)
}

/// Operator branch selected by a pure coefficient field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Laplacian,
    Directional,
    Fourth,
}

/// The three coefficient fields `a₁, a₂, a₃` on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    a1: ScalarField,
    a2: ScalarField,
    a3: ScalarField,
}

impl CoefficientField {
    /// General nonnegative coefficients.
    pub fn new(a1: ScalarField, a2: ScalarField, a3: ScalarField) -> Result<Self> {
        a1.geometry().ensure_same(a2.geometry(), "coefficients")?;
        a1.geometry().ensure_same(a3.geometry(), "coefficients")?;
        for a in [&a1, &a2, &a3] {
            if a.values().iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Argument(
                    "coefficients must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(CoefficientField { a1, a2, a3 })
    }

    /// One branch everywhere.
    pub fn pure(geometry: &GridGeometry, branch: Branch) -> Self {
        let one = ScalarField::new(*geometry, 1.0);
        let zero = ScalarField::zeros(*geometry);
        let (a1, a2, a3) = match branch {
            Branch::Laplacian => (one, zero.clone(), zero),
            Branch::Directional => (zero.clone(), one, zero),
            Branch::Fourth => (zero.clone(), zero, one),
        };
        CoefficientField { a1, a2, a3 }
    }

    /// Random {0,1} partition of unity: each node picks branch `i` with
    /// probability `probabilities[i]`.
    pub fn sample_partition(
        geometry: &GridGeometry,
        probabilities: [f64; 3],
        seed: u64,
    ) -> Result<Self> {
        let total: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > 1e-9
        {
            return Err(Error::Argument(format!(
                "partition probabilities must be nonnegative and sum to 1, got {probabilities:?}"
            )));
        }
        let mut rng = rng::stream(seed, rng::STREAM_PARTITION);
        let mut a = [
            ScalarField::zeros(*geometry),
            ScalarField::zeros(*geometry),
            ScalarField::zeros(*geometry),
        ];
        let last = (0..3).rev().find(|&b| probabilities[b] > 0.0).unwrap_or(0);
        for k in 0..geometry.len() {
            let r: f64 = rng.random::<f64>() * total;
            let mut upper = 0.0;
            let branch = (0..3)
                .find(|&b| {
                    upper += probabilities[b];
                    probabilities[b] > 0.0 && r < upper
                })
                .unwrap_or(last);
            a[branch].values_mut()[k] = 1.0;
        }
        let [a1, a2, a3] = a;
        Ok(CoefficientField { a1, a2, a3 })
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.a1.geometry()
    }

    pub fn a1(&self) -> &ScalarField {
        &self.a1
    }

    pub fn a2(&self) -> &ScalarField {
        &self.a2
    }

    pub fn a3(&self) -> &ScalarField {
        &self.a3
    }

    pub fn has_fourth_order(&self) -> bool {
        self.a3.values().iter().any(|&v| v != 0.0)
    }

    /// Pointwise `a₁ + a₂ + a₃ = 1` with each value in {0, 1}.
    pub fn is_partition_of_unity(&self) -> bool {
        (0..self.a1.values().len()).all(|k| {
            let v = [
                self.a1.values()[k],
                self.a2.values()[k],
                self.a3.values()[k],
            ];
            v.iter().all(|&x| x == 0.0 || x == 1.0) && v.iter().sum::<f64>() == 1.0
        })
    }

    /// Fraction of the grid carried by each coefficient.
    pub fn fractions(&self) -> [f64; 3] {
        let n = self.a1.values().len() as f64;
        [self.a1.sum() / n, self.a2.sum() / n, self.a3.sum() / n]
    }
}

/// Gaussian pre-smoothing parameters, in grid units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub sigma: f64,
    /// Kernel half-width as a multiple of `sigma`.
    pub truncation_radius: f64,
}

impl GaussianParams {
    pub fn new(sigma: f64, truncation_radius: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Argument(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !(truncation_radius.is_finite() && truncation_radius >= 3.0) {
            return Err(Error::Argument(format!(
                "truncation radius must be at least 3 sigma, got {truncation_radius}"
            )));
        }
        Ok(GaussianParams {
            sigma,
            truncation_radius,
        })
    }

    /// Normalized 1-D taps `w[-R..=R]` with `R = ⌊truncation·σ⌋`.
    pub fn kernel(&self) -> Vec<f64> {
        let radius = (self.truncation_radius * self.sigma).floor() as i64;
        let taps: Vec<f64> = (-radius..=radius)
            .map(|k| (-(k * k) as f64 / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let total: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / total).collect()
    }
}

impl Default for GaussianParams {
    fn default() -> Self {
        GaussianParams {
            sigma: 1.0,
            truncation_radius: 3.0,
        }
    }
}

/// Half-sample mirror of an index into `0..n`.
fn mirror(mut p: i64, n: usize) -> usize {
    let n = n as i64;
    loop {
        if p < 0 {
            p = -p - 1;
        } else if p >= n {
            p = 2 * n - p - 1;
        } else {
            return p as usize;
        }
    }
}

fn convolve_axis(u: &[f64], g: &GridGeometry, axis: Axis, taps: &[f64]) -> Vec<f64> {
    let Lines { n, stride } = lines(g, axis);
    let radius = (taps.len() / 2) as i64;
    (0..u.len())
        .map(|k| {
            let p = position(g, k, axis);
            let base = k - p * stride;
            taps.iter()
                .enumerate()
                .map(|(t, w)| w * u[base + mirror(p as i64 + t as i64 - radius, n) * stride])
                .sum()
        })
        .collect()
}

/// Separable Gaussian blur with mirrored boundaries.
pub fn gaussian_smooth(u: &ScalarField, params: &GaussianParams) -> ScalarField {
    let g = *u.geometry();
    let taps = params.kernel();
    let rows = convolve_axis(u.values(), &g, Axis::X1, &taps);
    let values = convolve_axis(&rows, &g, Axis::X2, &taps);
    ScalarField::from_values(g, values).expect("same geometry")
}

/// `L = a₁Δ + a₂X²_θ − (−1)^β a₃X^{2β}_θ`, coefficients applied to the output
/// at each node.
#[derive(Debug)]
pub struct HeterogeneousOperator {
    theta: OrientationMap,
    coeffs: CoefficientField,
    beta: u8,
    matrix: OnceLock<SparseMatrix>,
    banded: OnceLock<BandedOperator>,
}

impl Clone for HeterogeneousOperator {
    fn clone(&self) -> Self {
        HeterogeneousOperator {
            theta: self.theta.clone(),
            coeffs: self.coeffs.clone(),
            beta: self.beta,
            matrix: self.matrix.clone(),
            banded: self.banded.clone(),
        }
    }
}

impl PartialEq for HeterogeneousOperator {
    fn eq(&self, other: &Self) -> bool {
        self.theta == other.theta && self.coeffs == other.coeffs && self.beta == other.beta
    }
}

impl HeterogeneousOperator {
    pub fn new(theta: OrientationMap, coeffs: CoefficientField, beta: u8) -> Result<Self> {
        theta
            .geometry()
            .ensure_same(coeffs.geometry(), "operator")?;
        if !(beta == 1 || beta == 2) {
            return Err(Error::Argument(format!("beta must be 1 or 2, got {beta}")));
        }
        Ok(HeterogeneousOperator {
            theta,
            coeffs,
            beta,
            matrix: OnceLock::new(),
            banded: OnceLock::new(),
        })
    }

    /// `a₁ ≡ 1`.
    pub fn homogeneous_laplacian(geometry: &GridGeometry) -> Self {
        let theta = crate::orientation::constant_map(geometry, 0.0);
        Self::new(
            theta,
            CoefficientField::pure(geometry, Branch::Laplacian),
            2,
        )
        .expect("consistent geometry")
    }

    /// `a₂ ≡ 1` on the given orientation field.
    pub fn directional(theta: OrientationMap) -> Self {
        let coeffs = CoefficientField::pure(theta.geometry(), Branch::Directional);
        Self::new(theta, coeffs, 2).expect("consistent geometry")
    }

    /// `a₃ ≡ 1` on the given orientation field.
    pub fn fourth_order(theta: OrientationMap) -> Self {
        let coeffs = CoefficientField::pure(theta.geometry(), Branch::Fourth);
        Self::new(theta, coeffs, 2).expect("consistent geometry")
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.theta.geometry()
    }

    pub fn theta(&self) -> &OrientationMap {
        &self.theta
    }

    pub fn coefficients(&self) -> &CoefficientField {
        &self.coeffs
    }

    pub fn beta(&self) -> u8 {
        self.beta
    }

    /// Whether any node carries a fourth-order term.
    pub fn has_fourth_order(&self) -> bool {
        self.beta == 2 && self.coeffs.has_fourth_order()
    }

    /// Largest distance from a node that its row of the operator reaches.
    pub fn stencil_radius(&self) -> usize {
        if self.has_fourth_order() {
            2
        } else {
            1
        }
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        let g = self.geometry();
        let [f1, f2, f3] = self.coeffs.fractions();
        let theta = if self.theta.is_constant() {
            format!("constant θ={:.6}", self.theta.values()[0])
        } else {
            "varying θ".to_string()
        };
        format!(
            "{}x{} ε={} β={} a1={f1:.4} a2={f2:.4} a3={f3:.4} {theta}",
            g.width(),
            g.height(),
            g.spacing(),
            self.beta
        )
    }

    fn top_order(&self, u: &ScalarField) -> ScalarField {
        let x2 = directional_second(u, &self.theta).expect("operator geometry");
        if self.beta == 2 {
            directional_fourth(u, &self.theta)
                .expect("operator geometry")
                .map(|v| -v)
        } else {
            x2
        }
    }

    fn apply_unchecked(&self, u: &ScalarField) -> ScalarField {
        let lap = laplacian(u);
        let x2 = directional_second(u, &self.theta).expect("operator geometry");
        let top = if self.coeffs.has_fourth_order() {
            self.top_order(u)
        } else {
            ScalarField::zeros(*u.geometry())
        };
        let (a1, a2, a3) = (
            self.coeffs.a1.values(),
            self.coeffs.a2.values(),
            self.coeffs.a3.values(),
        );
        let values = (0..u.values().len())
            .map(|k| a1[k] * lap.values()[k] + a2[k] * x2.values()[k] + a3[k] * top.values()[k])
            .collect();
        ScalarField::from_values(*u.geometry(), values).expect("same geometry")
    }

    /// Assembled matrix of the operator, built on first use.
    ///
    /// Columns are recovered by applying the stencil operator to 25 comb
    /// fields with period 5, which separates every entry of a row of radius
    /// at most two.
    pub fn matrix(&self) -> &SparseMatrix {
        self.matrix.get_or_init(|| {
            let g = *self.geometry();
            let (w, h) = (g.width(), g.height());
            let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); g.len()];
            for cj in 0..5 {
                for ci in 0..5 {
                    let probe = ScalarField::from_index_fn(g, |i, j| {
                        if i % 5 == ci && j % 5 == cj {
                            1.0
                        } else {
                            0.0
                        }
                    });
                    let out = self.apply_unchecked(&probe);
                    for j in 0..h {
                        for i in 0..w {
                            let v = out.get(i, j);
                            if v == 0.0 {
                                continue;
                            }
                            let near = |p: usize, c: usize| -> i64 {
                                let d = (c as i64 - p as i64).rem_euclid(5);
                                p as i64 + if d > 2 { d - 5 } else { d }
                            };
                            let (si, sj) = (near(i, ci), near(j, cj));
                            debug_assert!(
                                si >= 0 && sj >= 0 && (si as usize) < w && (sj as usize) < h
                            );
                            rows[g.index(i, j)].push((g.index(si as usize, sj as usize), v));
                        }
                    }
                }
            }
            SparseMatrix::from_rows(rows)
        })
    }

    /// The assembled matrix in banded layout with a halo of two nodes.
    pub fn banded(&self) -> &BandedOperator {
        self.banded.get_or_init(|| {
            let g = self.geometry();
            BandedOperator::from_matrix(self.matrix(), g.width(), g.height(), 2)
        })
    }
}

/// `L u` for a heterogeneous operator.
pub fn apply(op: &HeterogeneousOperator, u: &ScalarField) -> Result<ScalarField> {
    op.geometry()
        .ensure_same(u.geometry(), "operator application")?;
    Ok(op.apply_unchecked(u))
}

/// `L(G_σ ⋆ I)`: the right-hand side produced by a stimulus.
pub fn forward_output(
    op: &HeterogeneousOperator,
    stimulus: &ScalarField,
    g: &GaussianParams,
) -> Result<ScalarField> {
    op.geometry()
        .ensure_same(stimulus.geometry(), "forward output")?;
    apply(op, &gaussian_smooth(stimulus, g))
}

/// Discrete energy `J(u) = ε² Σ_x [½a₁²|∇u|² + ½a₂²|X_θu|² + ½a₃²(X²_θu)² + f·u]`
/// (the `a₃` term uses `|X_θu|²` when β = 1).
///
/// Squared first derivatives average the four forward/backward combinations,
/// which makes `−(Lu − f)` the exact ε²-weighted gradient when the
/// coefficients and θ are constant.
pub fn energy(op: &HeterogeneousOperator, u: &ScalarField, f: &ScalarField) -> Result<f64> {
    let g = *op.geometry();
    g.ensure_same(u.geometry(), "energy")?;
    g.ensure_same(f.geometry(), "energy")?;
    let h = g.spacing();
    let inv_h2 = 1.0 / (h * h);
    let uv = u.values();
    let f1 = forward(uv, &g, Axis::X1);
    let b1 = backward(uv, &g, Axis::X1);
    let f2 = forward(uv, &g, Axis::X2);
    let b2 = backward(uv, &g, Axis::X2);
    let x2 = if op.beta == 2 && op.coeffs.has_fourth_order() {
        Some(directional_second(u, &op.theta)?)
    } else {
        None
    };
    let (a1, a2, a3) = (
        op.coeffs.a1.values(),
        op.coeffs.a2.values(),
        op.coeffs.a3.values(),
    );
    let mut total = 0.0;
    for k in 0..uv.len() {
        let grad = 0.5 * (f1[k] * f1[k] + b1[k] * b1[k] + f2[k] * f2[k] + b2[k] * b2[k]) * inv_h2;
        let (cc, sc2, ss) = direction_weights(op.theta.values()[k]);
        let dir = (0.5 * cc * (f1[k] * f1[k] + b1[k] * b1[k])
            + 0.5 * ss * (f2[k] * f2[k] + b2[k] * b2[k])
            + 0.25 * sc2 * (f1[k] + b1[k]) * (f2[k] + b2[k]))
            * inv_h2;
        let top = match &x2 {
            Some(x2) => x2.values()[k] * x2.values()[k],
            None => dir,
        };
        total += 0.5 * a1[k] * a1[k] * grad
            + 0.5 * a2[k] * a2[k] * dir
            + 0.5 * a3[k] * a3[k] * top
            + f.values()[k] * uv[k];
    }
    Ok(h * h * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orientation::constant_map;
    use std::f64::consts::PI;

    fn grid(n: usize) -> GridGeometry {
        GridGeometry::unit(n, n).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        let g = grid(5);
        assert!(laplacian(&ScalarField::new(g, 2.5))
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let mut d = ScalarField::zeros(g);
        d.set(2, 2, 1.0);
        let l = laplacian(&d);
        assert_eq!(l.get(2, 2), -4.0);
        for (i, j) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert_eq!(l.get(i, j), 1.0);
        }
        assert_eq!(l.get(1, 1), 0.0);

        let q = ScalarField::from_fn(grid(7), |x, y| x * x + y * y);
        let l = laplacian(&q);
        for j in 1..6 {
            for i in 1..6 {
                assert!((l.get(i, j) - 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn directional_second_examples() {
        let g = grid(7);
        let x1sq = ScalarField::from_fn(g, |x, _| x * x);
        let r = directional_second(&x1sq, &constant_map(&g, 0.0)).unwrap();
        let s = directional_second(&x1sq, &constant_map(&g, PI / 2.0)).unwrap();
        let bilinear = ScalarField::from_fn(g, |x, y| x * y);
        let t = directional_second(&bilinear, &constant_map(&g, PI / 4.0)).unwrap();
        for j in 1..6 {
            for i in 1..6 {
                assert!((r.get(i, j) - 2.0).abs() < 1e-12);
                assert_eq!(s.get(i, j), 0.0);
                assert!((t.get(i, j) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fourth_difference_along_x1() {
        let g = grid(9);
        let u = ScalarField::from_fn(g, |x, _| x.powi(4));
        let r = directional_fourth(&u, &constant_map(&g, 0.0)).unwrap();
        let z = directional_fourth(&u, &constant_map(&g, PI / 2.0)).unwrap();
        for j in 2..7 {
            for i in 2..7 {
                let x = |d: i64| ((i as i64 + d) as f64).powi(4);
                let expected = x(-2) - 4.0 * x(-1) + 6.0 * x(0) - 4.0 * x(1) + x(2);
                assert!((r.get(i, j) - expected).abs() < 1e-9);
                assert_eq!(z.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn mixed_stencil_matches_four_corner_rule_off_the_ring() {
        let g = GridGeometry::new(6, 5, 0.5).unwrap();
        let u = ScalarField::from_fn(g, |x, y| {
            (1.3 * x).sin() * (0.7 * y + 0.2).cos() + x * y * y
        });
        let d = mixed(u.values(), &g);
        for j in 1..4 {
            for i in 1..5 {
                let c = u.get(i + 1, j + 1) + u.get(i - 1, j - 1)
                    - u.get(i + 1, j - 1)
                    - u.get(i - 1, j + 1);
                assert!((d[g.index(i, j)] - c / 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_examples() {
        let g = grid(9);
        let c = gaussian_smooth(&ScalarField::new(g, 0.7), &GaussianParams::default());
        assert!(c.values().iter().all(|&v| (v - 0.7).abs() < 1e-14));

        let u = ScalarField::from_fn(g, |x, y| x.sin() + y);
        let tiny = GaussianParams {
            sigma: 0.3,
            truncation_radius: 3.0,
        };
        assert!(gaussian_smooth(&u, &tiny).max_abs_diff(&u).unwrap() < 1e-6);

        let mut d = ScalarField::zeros(g);
        d.set(4, 4, 1.0);
        let k = GaussianParams::default().kernel();
        assert_eq!(k.len(), 7);
        let s = gaussian_smooth(&d, &GaussianParams::default());
        assert!((s.get(4, 4) - k[3] * k[3]).abs() < 1e-15);
        assert!((s.sum() - 1.0).abs() < 1e-12);
        assert!(GaussianParams::new(1.0, 2.0).is_err());
        assert!(GaussianParams::new(0.0, 3.0).is_err());
    }

    #[test]
    fn mirror_indices() {
        assert_eq!(mirror(-1, 5), 0);
        assert_eq!(mirror(-2, 5), 1);
        assert_eq!(mirror(5, 5), 4);
        assert_eq!(mirror(6, 5), 3);
        assert_eq!(mirror(-7, 3), 0);
    }

    #[test]
    fn partition_sampler() {
        let g = grid(40);
        let c = CoefficientField::sample_partition(&g, [0.2, 0.3, 0.5], 9).unwrap();
        assert!(c.is_partition_of_unity());
        let f = c.fractions();
        assert!((f[0] - 0.2).abs() < 0.05 && (f[1] - 0.3).abs() < 0.05);
        let only = CoefficientField::sample_partition(&g, [0.0, 1.0, 0.0], 9).unwrap();
        assert_eq!(only, CoefficientField::pure(&g, Branch::Directional));
        assert!(CoefficientField::sample_partition(&g, [0.5, 0.6, 0.0], 1).is_err());
    }

    #[test]
    fn beta_range() {
        let g = grid(4);
        let theta = constant_map(&g, 0.0);
        assert!(HeterogeneousOperator::new(
            theta.clone(),
            CoefficientField::pure(&g, Branch::Laplacian),
            3
        )
        .is_err());
        let other = CoefficientField::pure(&grid(5), Branch::Laplacian);
        assert!(HeterogeneousOperator::new(theta, other, 2).is_err());
    }

    #[test]
    fn beta_one_fourth_branch_is_second_order() {
        let g = grid(7);
        let theta = constant_map(&g, 0.4);
        let op = HeterogeneousOperator::new(
            theta.clone(),
            CoefficientField::pure(&g, Branch::Fourth),
            1,
        )
        .unwrap();
        let u = ScalarField::from_fn(g, |x, y| (x * 0.3).sin() * y);
        assert_eq!(
            apply(&op, &u).unwrap(),
            directional_second(&u, &theta).unwrap()
        );
        assert!(!op.has_fourth_order());
    }

    #[test]
    fn assembled_matrix_matches_stencils() {
        let g = GridGeometry::new(11, 9, 0.7).unwrap();
        let theta = crate::orientation::salt_pepper_map(&g, 5);
        let coeffs = CoefficientField::sample_partition(&g, [0.3, 0.3, 0.4], 5).unwrap();
        let op = HeterogeneousOperator::new(theta, coeffs, 2).unwrap();
        let u = ScalarField::from_fn(g, |x, y| (x * 1.7).cos() + y * y * 0.1 + x * y);
        let direct = apply(&op, &u).unwrap();
        let mut via = vec![0.0; g.len()];
        op.matrix().mul_vec(u.values(), &mut via);
        for (a, b) in direct.values().iter().zip(&via) {
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn constant_theta_operators_are_symmetric() {
        let g = grid(8);
        for t in [0.0, 0.3, PI / 4.0, 2.0] {
            let theta = constant_map(&g, t);
            assert!(
                HeterogeneousOperator::directional(theta.clone())
                    .matrix()
                    .asymmetry()
                    < 1e-12
            );
            assert!(
                HeterogeneousOperator::fourth_order(theta)
                    .matrix()
                    .asymmetry()
                    < 1e-12
            );
        }
        assert!(
            HeterogeneousOperator::homogeneous_laplacian(&g)
                .matrix()
                .asymmetry()
                == 0.0
        );
    }

    #[test]
    fn energy_vanishes_at_zero() {
        let g = grid(6);
        let op = HeterogeneousOperator::homogeneous_laplacian(&g);
        let z = ScalarField::zeros(g);
        assert_eq!(energy(&op, &z, &z).unwrap(), 0.0);
        let f = ScalarField::from_fn(g, |x, y| x - y);
        assert_eq!(energy(&op, &z, &f).unwrap(), 0.0);
    }
}
