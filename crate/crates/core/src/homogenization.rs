//! Random lattice operators in mean-value form and empirical H-convergence.
//!
//! A conductivity κ is drawn i.i.d. on the integer lattice. The ε-scaled
//! operator reads κ at `x/ε`, so each node of the ε-grid on the unit square
//! carries its own lattice sample and the medium oscillates on scale ε.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{l2_norm, mesh_completion, GridGeometry, ScalarField, StencilVector};
use crate::rng;
use crate::sparse::SparseMatrix;

/// Two-valued random conductivity on a lattice window.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaField {
    values: ScalarField,
    pub r: f64,
    pub delta: f64,
    pub seed: u64,
}

impl KappaField {
    pub fn values(&self) -> &ScalarField {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }
}

/// κ = δ with probability `r`, 1 otherwise, independently per lattice point.
pub fn sample_kappa(
    width: usize,
    height: usize,
    r: f64,
    delta: f64,
    seed: u64,
) -> Result<KappaField> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Argument(format!("r must lie in (0, 1), got {r}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Argument(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    let geometry = GridGeometry::unit(width, height)?;
    let mut rng = rng::stream(seed, rng::STREAM_KAPPA);
    let values =
        ScalarField::from_index_fn(
            geometry,
            |_, _| {
                if rng.random::<f64>() < r {
                    delta
                } else {
                    1.0
                }
            },
        );
    Ok(KappaField {
        values,
        r,
        delta,
        seed,
    })
}

/// Transition functions `p_z(x)` over a stencil set Λ.
///
/// The zero vector is always present and carries `p_0 = 1 − Σ_{z≠0} p_z`.
/// Entries whose neighbour `x + z` leaves the window are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOperator {
    lambda: Vec<StencilVector>,
    p: Vec<ScalarField>,
    epsilon: f64,
}

/// `p_z(x) = 2κ(x)κ(x+z) / (4(κ(x) + κ(x+z)))` for `z ≠ 0`.
pub fn transition_functions(
    kappa: &KappaField,
    lambda: &[StencilVector],
) -> Result<TransitionOperator> {
    for z in StencilVector::axes() {
        if !lambda.contains(&z) {
            return Err(Error::Argument(format!(
                "stencil set must contain ({}, {})",
                z.dx, z.dy
            )));
        }
    }
    for &z in lambda {
        if !lambda.contains(&-z) {
            return Err(Error::Argument(format!(
                "stencil set is not symmetric: ({}, {}) has no opposite",
                z.dx, z.dy
            )));
        }
    }
    let mut vectors: Vec<StencilVector> = Vec::new();
    for &z in lambda {
        if !z.is_zero() && !vectors.contains(&z) {
            vectors.push(z);
        }
    }
    let g = *kappa.values.geometry();
    let mut p: Vec<ScalarField> = vectors
        .iter()
        .map(|&z| {
            ScalarField::from_index_fn(g, |i, j| match g.offset(i, j, z.dx as i64, z.dy as i64) {
                Some(k) => {
                    let (a, b) = (kappa.get(i, j), kappa.values.values()[k]);
                    2.0 * a * b / (4.0 * (a + b))
                }
                None => 0.0,
            })
        })
        .collect();
    let p0 = ScalarField::from_index_fn(g, |i, j| 1.0 - p.iter().map(|f| f.get(i, j)).sum::<f64>());
    p.push(p0);
    vectors.push(StencilVector::ZERO);
    Ok(TransitionOperator {
        lambda: vectors,
        p,
        epsilon: 1.0,
    })
}

/// Outcome of checking the three mean-value properties.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanValueValidation {
    /// Largest `|Σ_z p_z − 1|`.
    pub sum_violation: f64,
    /// Largest `−p_z`, zero when every entry is nonnegative.
    pub negativity_violation: f64,
    /// Smallest `p_{±e_i}` over the checked nodes.
    pub delta_min: f64,
    /// Largest `|p_z(x) − p_{−z}(x + z)|`.
    pub reversibility_violation: f64,
    /// `(property, node)` pairs that failed, property numbered 1–3.
    pub failures: Vec<(u8, (usize, usize))>,
}

impl MeanValueValidation {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

const SUM_TOLERANCE: f64 = 1e-12;

impl TransitionOperator {
    pub fn lambda(&self) -> &[StencilVector] {
        &self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Window geometry with spacing ε.
    pub fn geometry(&self) -> GridGeometry {
        self.p[0]
            .geometry()
            .with_spacing(self.epsilon)
            .expect("valid spacing")
    }

    /// `p_z` as a field, if `z ∈ Λ`.
    pub fn p(&self, z: StencilVector) -> Option<&ScalarField> {
        self.lambda.iter().position(|&v| v == z).map(|k| &self.p[k])
    }

    pub fn p_mut(&mut self, z: StencilVector) -> Option<&mut ScalarField> {
        self.lambda
            .iter()
            .position(|&v| v == z)
            .map(move |k| &mut self.p[k])
    }

    /// The same transitions on the grid of spacing ε, `p^ε(x) = p(x/ε)`.
    pub fn at_scale(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Argument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let g = self.p[0].geometry().with_spacing(epsilon)?;
        for f in &mut self.p {
            *f = ScalarField::from_values(g, f.values().to_vec())?;
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    fn reach(&self) -> usize {
        self.lambda
            .iter()
            .map(|z| z.dx.unsigned_abs().max(z.dy.unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    /// Nodes whose whole stencil lies inside the window.
    fn is_inner(&self, i: usize, j: usize) -> bool {
        self.geometry().boundary_distance(i, j) >= self.reach()
    }

    /// Checks nonnegativity and unit sums, the ellipticity bound on the axis
    /// transitions, and reversibility `p_z(x) = p_{−z}(x + z)`.
    pub fn validate(&self) -> MeanValueValidation {
        let g = self.geometry();
        let mut report = MeanValueValidation {
            sum_violation: 0.0,
            negativity_violation: 0.0,
            delta_min: f64::INFINITY,
            reversibility_violation: 0.0,
            failures: Vec::new(),
        };
        let axes = StencilVector::axes();
        for j in 0..g.height() {
            for i in 0..g.width() {
                if self.is_inner(i, j) {
                    let sum: f64 = self.p.iter().map(|f| f.get(i, j)).sum();
                    let worst_negative = self.p.iter().map(|f| -f.get(i, j)).fold(0.0, f64::max);
                    report.sum_violation = report.sum_violation.max((sum - 1.0).abs());
                    report.negativity_violation = report.negativity_violation.max(worst_negative);
                    if (sum - 1.0).abs() > SUM_TOLERANCE || worst_negative > 0.0 {
                        report.failures.push((1, (i, j)));
                    }
                    let axis_min = axes
                        .iter()
                        .map(|&z| self.p(z).expect("axes present").get(i, j))
                        .fold(f64::INFINITY, f64::min);
                    report.delta_min = report.delta_min.min(axis_min);
                    if axis_min <= 0.0 {
                        report.failures.push((2, (i, j)));
                    }
                }
                for (k, &z) in self.lambda.iter().enumerate() {
                    if z.is_zero() {
                        continue;
                    }
                    if let Some(n) = g.offset(i, j, z.dx as i64, z.dy as i64) {
                        let (ni, nj) = g.node(n);
                        let back = self.p(-z).expect("symmetric set").get(ni, nj);
                        let d = (self.p[k].get(i, j) - back).abs();
                        report.reversibility_violation = report.reversibility_violation.max(d);
                        if d > SUM_TOLERANCE {
                            report.failures.push((3, (i, j)));
                        }
                    }
                }
            }
        }
        report.failures.sort();
        report.failures.dedup();
        report
    }

    /// `I − P` with the boundary ring eliminated: boundary rows are identity
    /// rows and interior rows drop couplings to the ring.
    pub fn system_matrix(&self) -> SparseMatrix {
        let g = self.geometry();
        let ring = self.reach();
        let rows = (0..g.len())
            .map(|k| {
                let (i, j) = g.node(k);
                if g.boundary_distance(i, j) < ring {
                    return vec![(k, 1.0)];
                }
                let mut row = Vec::new();
                for (z, f) in self.lambda.iter().zip(&self.p) {
                    let n = g
                        .offset(i, j, z.dx as i64, z.dy as i64)
                        .expect("inner node");
                    let (ni, nj) = g.node(n);
                    if g.boundary_distance(ni, nj) < ring {
                        continue;
                    }
                    let identity = if z.is_zero() { 1.0 } else { 0.0 };
                    row.push((n, identity - f.get(i, j)));
                }
                row
            })
            .collect();
        SparseMatrix::from_rows(rows)
    }
}

/// Checks the three mean-value properties of `op`.
pub fn validate_mean_value(op: &TransitionOperator) -> MeanValueValidation {
    op.validate()
}

/// Iteration controls for [`solve_mean_value_dirichlet_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanValueOptions {
    /// Relaxation weight of the Jacobi update.
    pub omega: f64,
    /// Target `l2_norm` of `(u − Σ p_z u(·+εz))/ε² − f` on the interior.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MeanValueOptions {
    fn default() -> Self {
        MeanValueOptions {
            omega: 1.0,
            tolerance: 1e-8,
            max_iterations: 2_000_000,
        }
    }
}

/// Solves `u(x) − Σ_z p_z(x) u(x + εz) = ε² f(x)` with `u = 0` on the ring.
pub fn solve_mean_value_dirichlet(
    op: &TransitionOperator,
    f: &ScalarField,
    domain: &GridGeometry,
) -> Result<ScalarField> {
    solve_mean_value_dirichlet_with(op, f, domain, &MeanValueOptions::default())
}

pub fn solve_mean_value_dirichlet_with(
    op: &TransitionOperator,
    f: &ScalarField,
    domain: &GridGeometry,
    options: &MeanValueOptions,
) -> Result<ScalarField> {
    let g = op.geometry();
    g.ensure_same(domain, "mean-value domain")?;
    g.ensure_same(f.geometry(), "mean-value right-hand side")?;
    if !(options.omega > 0.0 && options.omega <= 1.0) {
        return Err(Error::Argument(format!(
            "omega must lie in (0, 1], got {}",
            options.omega
        )));
    }
    let ring = op.reach();
    let h2 = op.epsilon * op.epsilon;

    struct Row {
        node: usize,
        diag: f64,
        rhs: f64,
        links: Vec<(usize, f64)>,
    }
    let mut rows = Vec::new();
    for k in 0..g.len() {
        let (i, j) = g.node(k);
        if g.boundary_distance(i, j) < ring {
            continue;
        }
        let mut diag = 1.0;
        let mut links = Vec::new();
        for (z, p) in op.lambda.iter().zip(&op.p) {
            let v = p.get(i, j);
            if z.is_zero() {
                diag -= v;
            } else if v != 0.0 {
                links.push((
                    g.offset(i, j, z.dx as i64, z.dy as i64)
                        .expect("inner node"),
                    v,
                ));
            }
        }
        if diag <= 0.0 {
            return Err(Error::Argument(format!(
                "no transition leaves node ({i}, {j}); the operator is not elliptic"
            )));
        }
        rows.push(Row {
            node: k,
            diag,
            rhs: h2 * f.values()[k],
            links,
        });
    }

    let mut u = vec![0.0; g.len()];
    let mut next = u.clone();
    let residual = |u: &[f64]| -> f64 {
        let mut r = ScalarField::zeros(g);
        for row in &rows {
            let mean: f64 = row.links.iter().map(|&(n, p)| p * u[n]).sum();
            r.values_mut()[row.node] = (row.diag * u[row.node] - mean - row.rhs) / h2;
        }
        l2_norm(&r)
    };
    const CHECK_EVERY: usize = 16;
    let mut last = residual(&u);
    for it in 0..options.max_iterations {
        if last < options.tolerance {
            return ScalarField::from_values(g, u);
        }
        for row in &rows {
            let mean: f64 = row.links.iter().map(|&(n, p)| p * u[n]).sum();
            let target = (mean + row.rhs) / row.diag;
            next[row.node] = (1.0 - options.omega) * u[row.node] + options.omega * target;
        }
        std::mem::swap(&mut u, &mut next);
        if (it + 1) % CHECK_EVERY == 0 {
            last = residual(&u);
            if !last.is_finite() {
                break;
            }
        }
    }
    last = residual(&u);
    if last < options.tolerance {
        return ScalarField::from_values(g, u);
    }
    Err(Error::NoConvergence {
        iterations: options.max_iterations,
        residual: last,
    })
}

/// `a·sin(mπx)sin(nπy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineMode {
    pub m: u32,
    pub n: u32,
    pub amplitude: f64,
}

/// Right-hand side on the unit square given as a finite sine series, whose
/// Dirichlet problem `−div(A∇w) = f` has a closed form for diagonal `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub modes: Vec<SineMode>,
}

impl Default for TestFunction {
    /// `sin(πx)sin(2πy) + sin(2πx)sin(πy)`.
    fn default() -> Self {
        TestFunction {
            modes: vec![
                SineMode {
                    m: 1,
                    n: 2,
                    amplitude: 1.0,
                },
                SineMode {
                    m: 2,
                    n: 1,
                    amplitude: 1.0,
                },
            ],
        }
    }
}

impl TestFunction {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.modes
            .iter()
            .map(|s| s.amplitude * (s.m as f64 * PI * x).sin() * (s.n as f64 * PI * y).sin())
            .sum()
    }

    /// Solution of `−(a₁₁∂₁₁ + a₂₂∂₂₂)w = f` with zero boundary values.
    pub fn reference_solution(&self, a11: f64, a22: f64, x: f64, y: f64) -> f64 {
        self.modes
            .iter()
            .map(|s| {
                let (m, n) = (s.m as f64, s.n as f64);
                s.amplitude / (PI * PI * (a11 * m * m + a22 * n * n))
                    * (m * PI * x).sin()
                    * (n * PI * y).sin()
            })
            .sum()
    }
}

/// Resolution of the cell-centred reference grid used for fitting.
pub const REFERENCE_RESOLUTION: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizationReport {
    pub r: f64,
    pub delta: f64,
    pub epsilon_sequence: Vec<f64>,
    pub seeds: Vec<u64>,
    /// RMS distance between the mesh-completed `u^ε` and the fitted
    /// homogenized solution on the reference grid.
    pub l2_errors: Vec<f64>,
    /// Best scalar `a⁰` per ε.
    pub fitted_coefficients: Vec<f64>,
    /// Best `a₁₁/a₂₂` per ε.
    pub anisotropy_estimates: Vec<f64>,
    /// `a⁰` at the finest ε.
    pub fitted_coefficient: f64,
    /// `a₁₁/a₂₂` at the finest ε.
    pub anisotropy_estimate: f64,
}

impl HomogenizationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,seed,l2_error,fitted_coefficient,anisotropy\n");
        for k in 0..self.epsilon_sequence.len() {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                self.epsilon_sequence[k],
                self.seeds[k],
                self.l2_errors[k],
                self.fitted_coefficients[k],
                self.anisotropy_estimates[k]
            ));
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!("r = {}\ndelta = {}\n", self.r, self.delta);
        for k in 0..self.epsilon_sequence.len() {
            s.push_str(&format!(
                "epsilon = 1/{:.0}  seed = {}  a0 = {:.6}  anisotropy = {:.4}  l2 error = {:.3e}\n",
                1.0 / self.epsilon_sequence[k],
                self.seeds[k],
                self.fitted_coefficients[k],
                self.anisotropy_estimates[k],
                self.l2_errors[k]
            ));
        }
        s.push_str(&format!(
            "fitted a0 = {:.6}\nanisotropy = {:.4}\n",
            self.fitted_coefficient, self.anisotropy_estimate
        ));
        s
    }

    /// Whether errors are non-increasing as ε shrinks, allowing each step to
    /// grow by the relative `slack`.
    pub fn errors_decrease(&self, slack: f64) -> bool {
        self.l2_errors
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + slack))
    }
}

struct Fit {
    coefficient: f64,
    anisotropy: f64,
    error: f64,
}

fn fit(u: &ScalarField, f: &TestFunction) -> Result<Fit> {
    let n = REFERENCE_RESOLUTION;
    let centre = |a: usize| (a as f64 + 0.5) / n as f64;
    let mut samples = Vec::with_capacity(n * n);
    for b in 0..n {
        for a in 0..n {
            samples.push((centre(a), centre(b)));
        }
    }
    let u_ref: Vec<f64> = samples
        .iter()
        .map(|&p| mesh_completion(u, p))
        .collect::<Result<_>>()?;
    let modes: Vec<Vec<f64>> = f
        .modes
        .iter()
        .map(|s| {
            samples
                .iter()
                .map(|&(x, y)| (s.m as f64 * PI * x).sin() * (s.n as f64 * PI * y).sin())
                .collect()
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram: Vec<Vec<f64>> = modes
        .iter()
        .map(|a| modes.iter().map(|b| dot(a, b)).collect())
        .collect();
    let proj: Vec<f64> = modes.iter().map(|a| dot(a, &u_ref)).collect();
    let uu = dot(&u_ref, &u_ref);

    // Reference solution for a₁₁ = 1, a₂₂ = ρ as weights on the modes.
    let weights = |rho: f64| -> Vec<f64> {
        f.modes
            .iter()
            .map(|s| {
                let (m, n) = (s.m as f64, s.n as f64);
                s.amplitude / (PI * PI * (m * m + rho * n * n))
            })
            .collect()
    };
    // Best scale s for u ≈ s·w and the remaining squared error.
    let scale_and_residual = |w: &[f64]| -> (f64, f64) {
        let uw: f64 = w.iter().zip(&proj).map(|(a, b)| a * b).sum();
        let ww: f64 = (0..w.len())
            .map(|a| (0..w.len()).map(|b| w[a] * w[b] * gram[a][b]).sum::<f64>())
            .sum();
        (uw / ww, (uu - uw * uw / ww).max(0.0))
    };

    let (s_iso, res_iso) = scale_and_residual(&weights(1.0));
    let coefficient = 1.0 / s_iso;
    let error = (res_iso / samples.len() as f64).sqrt();

    // Golden-section search over log ρ.
    let objective = |t: f64| scale_and_residual(&weights(t.exp())).1;
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = objective(d);
        }
    }
    let rho = ((lo + hi) / 2.0).exp();
    Ok(Fit {
        coefficient,
        anisotropy: 1.0 / rho,
        error,
    })
}

/// `{±e₁, ±e₂, 0}`.
pub fn axis_stencil() -> Vec<StencilVector> {
    let mut lambda = StencilVector::axes();
    lambda.push(StencilVector::ZERO);
    lambda
}

fn steps_per_unit(epsilon: f64) -> Result<usize> {
    let n = (1.0 / epsilon).round();
    if !(n >= 2.0 && (n * epsilon - 1.0).abs() < 1e-9) {
        return Err(Error::Argument(format!(
            "epsilon must be the reciprocal of an integer ≥ 2, got {epsilon}"
        )));
    }
    Ok(n as usize)
}

/// Transition operator of one `(ε, seed)` sample on the unit square.
pub fn sample_operator(
    r: f64,
    delta: f64,
    epsilon: f64,
    seed: u64,
    lambda: &[StencilVector],
) -> Result<TransitionOperator> {
    let n = steps_per_unit(epsilon)?;
    let kappa = sample_kappa(n + 1, n + 1, r, delta, seed)?;
    transition_functions(&kappa, lambda)?.at_scale(epsilon)
}

/// Solves the mean-value problem for one ε and seed and returns `u^ε`.
pub fn homogenization_sample(
    r: f64,
    delta: f64,
    f: &TestFunction,
    epsilon: f64,
    seed: u64,
) -> Result<ScalarField> {
    homogenization_sample_with(r, delta, f, epsilon, seed, &axis_stencil())
}

pub fn homogenization_sample_with(
    r: f64,
    delta: f64,
    f: &TestFunction,
    epsilon: f64,
    seed: u64,
    lambda: &[StencilVector],
) -> Result<ScalarField> {
    let op = sample_operator(r, delta, epsilon, seed, lambda)?;
    let domain = op.geometry();
    let rhs = ScalarField::from_fn(domain, |x, y| f.eval(x, y));
    solve_mean_value_dirichlet(&op, &rhs, &domain)
}

/// Runs one mean-value solve per `(ε, seed)` pair in parallel and fits the
/// homogenized coefficient and anisotropy for each.
pub fn h_convergence_experiment(
    r: f64,
    delta: f64,
    f: &TestFunction,
    epsilons: &[f64],
    seeds: &[u64],
) -> Result<HomogenizationReport> {
    h_convergence_experiment_with(r, delta, f, epsilons, seeds, &axis_stencil())
}

pub fn h_convergence_experiment_with(
    r: f64,
    delta: f64,
    f: &TestFunction,
    epsilons: &[f64],
    seeds: &[u64],
    lambda: &[StencilVector],
) -> Result<HomogenizationReport> {
    if epsilons.is_empty() || epsilons.len() != seeds.len() {
        return Err(Error::Argument(format!(
            "need one seed per epsilon, got {} epsilons and {} seeds",
            epsilons.len(),
            seeds.len()
        )));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Argument(
            "epsilons must be strictly decreasing".into(),
        ));
    }
    let fits: Vec<Fit> = epsilons
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(&eps, &seed)| {
            fit(
                &homogenization_sample_with(r, delta, f, eps, seed, lambda)?,
                f,
            )
        })
        .collect::<Result<_>>()?;
    let last = fits.last().expect("nonempty");
    Ok(HomogenizationReport {
        r,
        delta,
        epsilon_sequence: epsilons.to_vec(),
        seeds: seeds.to_vec(),
        l2_errors: fits.iter().map(|f| f.error).collect(),
        fitted_coefficients: fits.iter().map(|f| f.coefficient).collect(),
        anisotropy_estimates: fits.iter().map(|f| f.anisotropy).collect(),
        fitted_coefficient: last.coefficient,
        anisotropy_estimate: last.anisotropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_parameters() {
        assert!(sample_kappa(5, 5, 0.0, 0.5, 1).is_err());
        assert!(sample_kappa(5, 5, 1.0, 0.5, 1).is_err());
        assert!(sample_kappa(5, 5, 0.5, 0.0, 1).is_err());
        assert!(sample_kappa(5, 5, 0.5, 1.5, 1).is_err());
        let k = sample_kappa(100, 100, 0.5, 0.3, 8).unwrap();
        let frac = k.values().values().iter().filter(|&&v| v == 0.3).count() as f64 / 1e4;
        assert!((0.4..=0.6).contains(&frac));
        assert_eq!(k, sample_kappa(100, 100, 0.5, 0.3, 8).unwrap());
        let one = sample_kappa(10, 10, 0.5, 1.0, 8).unwrap();
        assert!(one.values().values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn unit_kappa_transitions() {
        let k = sample_kappa(6, 6, 0.5, 1.0, 0).unwrap();
        let t = transition_functions(&k, &axis_stencil()).unwrap();
        for z in StencilVector::axes() {
            assert_eq!(t.p(z).unwrap().get(2, 3), 0.25);
        }
        assert_eq!(t.p(StencilVector::ZERO).unwrap().get(2, 3), 0.0);
        let v = validate_mean_value(&t);
        assert!(v.passed());
        assert_eq!(v.delta_min, 0.25);
    }

    #[test]
    fn stencil_set_checks() {
        let k = sample_kappa(6, 6, 0.5, 1.0, 0).unwrap();
        assert!(transition_functions(&k, &[StencilVector::E1, StencilVector::E2]).is_err());
        let mut l = StencilVector::axes();
        l.push(StencilVector::new(1, 1));
        assert!(transition_functions(&k, &l).is_err());
    }

    #[test]
    fn tampered_entry_is_reported() {
        let k = sample_kappa(7, 7, 0.5, 0.2, 4).unwrap();
        let mut t = transition_functions(&k, &axis_stencil()).unwrap();
        let f = t.p_mut(StencilVector::E1).unwrap();
        let v = f.get(3, 2);
        f.set(3, 2, -v);
        let report = validate_mean_value(&t);
        assert!(report.failures.contains(&(1, (3, 2))));
        assert!(report.failures.contains(&(2, (3, 2))));
        assert!(report.negativity_violation > 0.0);
    }

    #[test]
    fn zero_source_gives_zero() {
        let k = sample_kappa(9, 9, 0.5, 0.1, 2).unwrap();
        let t = transition_functions(&k, &axis_stencil())
            .unwrap()
            .at_scale(0.125)
            .unwrap();
        let g = t.geometry();
        let u = solve_mean_value_dirichlet(&t, &ScalarField::zeros(g), &g).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn epsilon_must_divide_unit_interval() {
        let f = TestFunction::default();
        assert!(homogenization_sample(0.5, 0.5, &f, 0.3, 1).is_err());
        assert!(h_convergence_experiment(0.5, 0.5, &f, &[0.25, 0.5], &[1, 2]).is_err());
        assert!(h_convergence_experiment(0.5, 0.5, &f, &[0.25], &[1, 2]).is_err());
    }
}
