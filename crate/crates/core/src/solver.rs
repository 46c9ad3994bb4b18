//! Forward-Euler gradient flow `u_{k+1} = u_k + dt·(L u_k − f)`.
//!
//! Iteration stops once the plain sum `Σ_x |u_{k+1}(x) − u_k(x)|` falls below
//! the tolerance. The sum carries no ε² weight, so a fixed tolerance is
//! stricter on larger grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::operators::{energy, forward_output, GaussianParams, HeterogeneousOperator};

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000_000;
/// Update sums above this are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Mirror ghosts built into the stencils.
    Neumann,
    /// Boundary ring held at zero.
    DirichletZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub boundary: Boundary,
    pub record_energy: bool,
}

/// 0.1 for purely second-order operators, 0.001 once a fourth-order term is present.
pub fn default_dt(op: &HeterogeneousOperator) -> f64 {
    if op.has_fourth_order() {
        0.001
    } else {
        0.1
    }
}

impl SolverConfig {
    pub fn new(
        dt: f64,
        tolerance: f64,
        max_iterations: usize,
        boundary: Boundary,
        record_energy: bool,
    ) -> Result<Self> {
        let config = SolverConfig {
            dt,
            tolerance,
            max_iterations,
            boundary,
            record_energy,
        };
        config.validate()?;
        Ok(config)
    }

    /// Default step for the operator, tolerance 1e−4, Neumann boundaries.
    pub fn for_operator(op: &HeterogeneousOperator) -> Self {
        SolverConfig {
            dt: default_dt(op),
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            boundary: Boundary::Neumann,
            record_energy: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Argument(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Argument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Argument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_energy(mut self, record: bool) -> Self {
        self.record_energy = record;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: ScalarField,
    pub iterations: usize,
    pub final_update_sum: f64,
    /// `J(u_0), J(u_1), …` when energy recording is on.
    pub energy_trace: Option<Vec<f64>>,
    /// Update sum of every step.
    pub update_trace: Vec<f64>,
    pub converged: bool,
}

/// Partition of the nodes into the connected components of the operator's
/// coupling graph. Constants on each component lie in the kernel of `L`
/// under Neumann boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Gauge {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl Gauge {
    pub fn for_operator(op: &HeterogeneousOperator) -> Self {
        let m = op.matrix();
        let scale = (0..m.dim())
            .flat_map(|r| m.row(r).map(|(_, v)| v.abs()))
            .fold(0.0, f64::max);
        let (labels, count) = m.components(1e-12 * scale);
        let mut sizes = vec![0; count];
        for &l in &labels {
            sizes[l] += 1;
        }
        Gauge { labels, sizes }
    }

    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn component_size(&self, label: usize) -> usize {
        self.sizes[label]
    }

    /// Subtracts the mean of each component.
    pub fn project(&self, u: &mut [f64]) {
        let mut sums = vec![0.0; self.sizes.len()];
        for (v, &l) in u.iter().zip(&self.labels) {
            sums[l] += v;
        }
        for (s, &n) in sums.iter_mut().zip(&self.sizes) {
            *s /= n as f64;
        }
        for (v, &l) in u.iter_mut().zip(&self.labels) {
            *v -= sums[l];
        }
    }
}

fn check_inputs(
    op: &HeterogeneousOperator,
    f: &ScalarField,
    u0: &ScalarField,
    config: &SolverConfig,
) -> Result<()> {
    config.validate()?;
    op.geometry().ensure_same(f.geometry(), "right-hand side")?;
    op.geometry().ensure_same(u0.geometry(), "initial value")
}

fn run(
    op: &HeterogeneousOperator,
    f: &ScalarField,
    u0: &ScalarField,
    config: &SolverConfig,
    gauge: Option<&Gauge>,
) -> Result<SolveReport> {
    let g = *op.geometry();
    let b = op.banded();
    let (w, h) = (g.width(), g.height());
    let dirichlet = config.boundary == Boundary::DirichletZero;

    let mut u = b.pad(u0.values());
    if dirichlet {
        for j in 0..h {
            for i in 0..w {
                if g.is_boundary(i, j) {
                    u[b.position(i, j)] = 0.0;
                }
            }
        }
    }
    // Halo cells form one extra component whose values stay zero.
    let padded_gauge = gauge.map(|gauge| {
        let mut labels = vec![gauge.sizes.len(); b.padded_len()];
        let mut sizes = gauge.sizes.clone();
        sizes.push(b.padded_len() - g.len());
        for j in 0..h {
            for i in 0..w {
                labels[b.position(i, j)] = gauge.labels[g.index(i, j)];
            }
        }
        Gauge { labels, sizes }
    });
    if let Some(pg) = &padded_gauge {
        pg.project(&mut u);
    }

    let as_field = |v: &[f64]| ScalarField::from_values(g, b.unpad(v)).expect("grid size");
    let mut energy_trace = if config.record_energy {
        Some(vec![energy(op, &as_field(&u), f)?])
    } else {
        None
    };

    let fv = b.pad(f.values());
    let dt = config.dt;
    let mut lu = vec![0.0; b.padded_len()];
    let mut next = vec![0.0; b.padded_len()];
    let mut update_trace = Vec::new();
    let mut sum = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for k in 1..=config.max_iterations {
        b.apply_padded(&u, &mut lu);
        sum = 0.0;
        for j in 0..h {
            let s = b.row_start(j);
            let (nx, ux, lx, fx) = (
                &mut next[s..s + w],
                &u[s..s + w],
                &lu[s..s + w],
                &fv[s..s + w],
            );
            if dirichlet && (j == 0 || j + 1 == h) {
                nx.fill(0.0);
                sum += ux.iter().map(|v| v.abs()).sum::<f64>();
                continue;
            }
            let mut row_sum = 0.0;
            for i in 0..w {
                let v = ux[i] + dt * (lx[i] - fx[i]);
                nx[i] = v;
                row_sum += (v - ux[i]).abs();
            }
            if dirichlet {
                row_sum += ux[0].abs() + ux[w - 1].abs()
                    - (nx[0] - ux[0]).abs()
                    - (nx[w - 1] - ux[w - 1]).abs();
                nx[0] = 0.0;
                nx[w - 1] = 0.0;
            }
            sum += row_sum;
        }
        if let Some(pg) = &padded_gauge {
            pg.project(&mut next);
            sum = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).sum::<f64>();
        }
        if !sum.is_finite() {
            return Err(Error::Instability {
                iteration: k,
                reason: "non-finite value in the iterate".into(),
            });
        }
        if sum > DIVERGENCE_LIMIT {
            return Err(Error::Instability {
                iteration: k,
                reason: format!("update sum {sum:e} exceeds {DIVERGENCE_LIMIT:e}"),
            });
        }
        std::mem::swap(&mut u, &mut next);
        update_trace.push(sum);
        if let Some(trace) = energy_trace.as_mut() {
            trace.push(energy(op, &as_field(&u), f)?);
        }
        iterations = k;
        if sum < config.tolerance {
            converged = true;
            break;
        }
    }

    Ok(SolveReport {
        solution: as_field(&u),
        iterations,
        final_update_sum: sum,
        energy_trace,
        update_trace,
        converged,
    })
}

/// Runs the gradient flow for `L u = f` from `u0`.
pub fn solve(
    op: &HeterogeneousOperator,
    f: &ScalarField,
    u0: &ScalarField,
    config: &SolverConfig,
) -> Result<SolveReport> {
    check_inputs(op, f, u0, config)?;
    run(op, f, u0, config, None)
}

/// Gradient flow with every iterate projected to zero mean on each coupling
/// component; the stopping sum is taken on the projected iterates.
///
/// This converges for right-hand sides that are incompatible with the
/// Neumann kernel, returning the solution of `L u = f − c` for the constant
/// `c` per component that makes the problem solvable.
pub fn solve_in_gauge(
    op: &HeterogeneousOperator,
    f: &ScalarField,
    u0: &ScalarField,
    config: &SolverConfig,
    gauge: &Gauge,
) -> Result<SolveReport> {
    check_inputs(op, f, u0, config)?;
    if config.boundary != Boundary::Neumann {
        return Err(Error::Argument(
            "gauge projection only applies to Neumann boundaries".into(),
        ));
    }
    if gauge.labels.len() != op.geometry().len() {
        return Err(Error::Argument(
            "gauge does not match the operator grid".into(),
        ));
    }
    run(op, f, u0, config, Some(gauge))
}

/// Recovers a stimulus from its forward output: solves `L u = L(G_σ ⋆ I)`
/// from `u = 0` and shifts the result so its mean equals the stimulus mean.
pub fn reconstruct(
    op: &HeterogeneousOperator,
    stimulus: &ScalarField,
    g: &GaussianParams,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let f = forward_output(op, stimulus, g)?;
    let u0 = ScalarField::zeros(*stimulus.geometry());
    let mut report = solve(op, &f, &u0, config)?;
    let shift = stimulus.mean() - report.solution.mean();
    report.solution.shift(shift);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;
    use crate::operators::{laplacian, Branch, CoefficientField};
    use crate::orientation::constant_map;

    #[test]
    fn default_steps() {
        let g = GridGeometry::unit(8, 8).unwrap();
        assert_eq!(
            default_dt(&HeterogeneousOperator::homogeneous_laplacian(&g)),
            0.1
        );
        assert_eq!(
            default_dt(&HeterogeneousOperator::directional(constant_map(&g, 0.2))),
            0.1
        );
        let mixed = HeterogeneousOperator::new(
            constant_map(&g, 0.0),
            CoefficientField::sample_partition(&g, [0.0, 0.5, 0.5], 1).unwrap(),
            2,
        )
        .unwrap();
        assert_eq!(default_dt(&mixed), 0.001);
    }

    #[test]
    fn zero_problem_converges_immediately() {
        let g = GridGeometry::unit(6, 6).unwrap();
        let op = HeterogeneousOperator::homogeneous_laplacian(&g);
        let z = ScalarField::zeros(g);
        let r = solve(&op, &z, &z, &SolverConfig::for_operator(&op)).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert_eq!(r.solution, z);
    }

    #[test]
    fn too_large_step_is_reported() {
        let g = GridGeometry::unit(16, 16).unwrap();
        let op = HeterogeneousOperator::homogeneous_laplacian(&g);
        let target = ScalarField::from_fn(g, |x, y| (x / 5.0).sin() + (y / 7.0).cos());
        let f = laplacian(&target);
        let config = SolverConfig::for_operator(&op).with_dt(2.0);
        match solve(&op, &f, &ScalarField::zeros(g), &config) {
            Err(Error::Instability { iteration, .. }) => assert!(iteration > 1),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(SolverConfig::new(0.0, 1e-4, 10, Boundary::Neumann, false).is_err());
        assert!(SolverConfig::new(0.1, -1.0, 10, Boundary::Neumann, false).is_err());
        assert!(SolverConfig::new(0.1, 1e-4, 0, Boundary::Neumann, false).is_err());
    }

    #[test]
    fn dirichlet_ring_stays_zero() {
        let g = GridGeometry::unit(10, 9).unwrap();
        let op = HeterogeneousOperator::homogeneous_laplacian(&g);
        let f = ScalarField::new(g, -1.0);
        let u0 = ScalarField::new(g, 3.0);
        let config = SolverConfig::for_operator(&op)
            .with_boundary(Boundary::DirichletZero)
            .with_max_iterations(50);
        let r = solve(&op, &f, &u0, &config).unwrap();
        for j in 0..9 {
            for i in 0..10 {
                if g.is_boundary(i, j) {
                    assert_eq!(r.solution.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn gauge_of_row_operator() {
        let g = GridGeometry::unit(7, 5).unwrap();
        let gauge = Gauge::for_operator(&HeterogeneousOperator::directional(constant_map(&g, 0.0)));
        assert_eq!(gauge.component_count(), 5);
        assert_eq!(gauge.label(g.index(3, 2)), gauge.label(g.index(0, 2)));
        let lap = Gauge::for_operator(&HeterogeneousOperator::homogeneous_laplacian(&g));
        assert_eq!(lap.component_count(), 1);
        let fourth = CoefficientField::pure(&g, Branch::Fourth);
        let op =
            HeterogeneousOperator::new(constant_map(&g, std::f64::consts::FRAC_PI_2), fourth, 2)
                .unwrap();
        assert_eq!(Gauge::for_operator(&op).component_count(), 7);
    }
}
