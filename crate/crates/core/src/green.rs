//! Discrete Green functions under Neumann boundaries and their shape.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::operators::HeterogeneousOperator;
use crate::solver::{solve_in_gauge, Boundary, Gauge, SolverConfig};

/// Γ(·, y) for one source node `y`, normalized to zero mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenFunction {
    pub source: (usize, usize),
    pub field: ScalarField,
    pub operator_digest: String,
    pub iterations: usize,
    pub converged: bool,
}

impl GreenFunction {
    /// Wraps an arbitrary field, shifted to zero mean.
    pub fn from_field(
        source: (usize, usize),
        mut field: ScalarField,
        digest: impl Into<String>,
    ) -> Result<Self> {
        let g = field.geometry();
        if source.0 >= g.width() || source.1 >= g.height() {
            return Err(Error::Argument(format!(
                "source {source:?} is off the grid"
            )));
        }
        let mean = field.mean();
        field.shift(-mean);
        Ok(GreenFunction {
            source,
            field,
            operator_digest: digest.into(),
            iterations: 0,
            converged: true,
        })
    }
}

fn green_with_gauge(
    op: &HeterogeneousOperator,
    source: (usize, usize),
    config: &SolverConfig,
    gauge: &Gauge,
) -> Result<GreenFunction> {
    let g = *op.geometry();
    let (si, sj) = source;
    if si >= g.width() || sj >= g.height() {
        return Err(Error::Argument(format!(
            "source {source:?} is off the grid"
        )));
    }
    let margin = op.stencil_radius();
    if g.boundary_distance(si, sj) < margin {
        return Err(Error::Argument(format!(
            "source {source:?} must be at least {margin} nodes from the boundary"
        )));
    }
    if config.boundary != Boundary::Neumann {
        return Err(Error::Argument(
            "Green functions use Neumann boundaries".into(),
        ));
    }
    let h = g.spacing();
    let src = g.index(si, sj);
    let component = gauge.label(src);
    let share = 1.0 / (h * h * gauge.component_size(component) as f64);
    let mut rhs = ScalarField::zeros(g);
    for (k, v) in rhs.values_mut().iter_mut().enumerate() {
        if gauge.label(k) == component {
            *v = -share;
        }
    }
    rhs.values_mut()[src] += 1.0 / (h * h);

    let report = solve_in_gauge(op, &rhs, &ScalarField::zeros(g), config, gauge)?;
    let mut field = report.solution;
    let mean = field.mean();
    field.shift(-mean);
    Ok(GreenFunction {
        source,
        field,
        operator_digest: op.describe(),
        iterations: report.iterations,
        converged: report.converged,
    })
}

/// Solves `L Γ = δ_y/ε² − c` from zero, where `c` is the mean of the delta
/// over the coupling component containing `y`.
pub fn green(
    op: &HeterogeneousOperator,
    source: (usize, usize),
    config: &SolverConfig,
) -> Result<GreenFunction> {
    green_with_gauge(op, source, config, &Gauge::for_operator(op))
}

/// Green functions for several sources, solved in parallel.
pub fn green_set(
    op: &HeterogeneousOperator,
    sources: &[(usize, usize)],
    config: &SolverConfig,
) -> Result<Vec<GreenFunction>> {
    let gauge = Gauge::for_operator(op);
    sources
        .par_iter()
        .map(|&s| green_with_gauge(op, s, config, &gauge))
        .collect()
}

/// `u(x) = ε² Σ_y Γ(x, y) f(y)` over the sources of `greens`.
///
/// `f` must vanish at every node that is not a source.
pub fn superpose(greens: &[GreenFunction], f: &ScalarField) -> Result<ScalarField> {
    let g = *f.geometry();
    let mut covered = vec![false; g.len()];
    let mut out = ScalarField::zeros(g);
    let h2 = g.spacing() * g.spacing();
    for gf in greens {
        g.ensure_same(gf.field.geometry(), "superposition")?;
        let k = g.index(gf.source.0, gf.source.1);
        covered[k] = true;
        let weight = h2 * f.values()[k];
        for (o, v) in out.values_mut().iter_mut().zip(gf.field.values()) {
            *o += weight * v;
        }
    }
    if let Some(k) = (0..g.len()).find(|&k| !covered[k] && f.values()[k] != 0.0) {
        return Err(Error::Argument(format!(
            "right-hand side is nonzero at node {:?} which has no Green function",
            g.node(k)
        )));
    }
    Ok(out)
}

fn bilinear(field: &ScalarField, x: f64, y: f64) -> f64 {
    let g = field.geometry();
    let i = (x.floor() as usize).min(g.width() - 2);
    let j = (y.floor() as usize).min(g.height() - 2);
    let (tx, ty) = (x - i as f64, y - j as f64);
    let v00 = field.get(i, j);
    let v10 = field.get(i + 1, j);
    let v01 = field.get(i, j + 1);
    let v11 = field.get(i + 1, j + 1);
    (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
}

/// Ratio of the longest to the shortest chord of the superlevel set of −Γ
/// at `min + level_fraction·range`, over the 8 lines through the source at
/// angles kπ/8. Chords are traced in 0.02-node steps on the bilinear
/// interpolant and end at the level crossing or the grid edge.
pub fn anisotropy_ratio(gf: &GreenFunction, level_fraction: f64) -> Result<f64> {
    if !(level_fraction > 0.0 && level_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "level fraction must lie in (0, 1), got {level_fraction}"
        )));
    }
    let neg = gf.field.map(|v| -v);
    let g = *neg.geometry();
    let (lo, hi) = (neg.min(), neg.max());
    let level = lo + level_fraction * (hi - lo);
    let (si, sj) = gf.source;
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) || neg.get(si, sj) < level {
        return Err(Error::DegenerateLevel(format!(
            "the superlevel set at {level_fraction} does not contain the source"
        )));
    }
    let neighbours = (-1i64..=1)
        .flat_map(|dy| (-1i64..=1).map(move |dx| (dx, dy)))
        .filter(|&d| d != (0, 0))
        .filter_map(|(dx, dy)| g.offset(si, sj, dx, dy))
        .filter(|&k| neg.values()[k] >= level)
        .count();
    if neighbours == 0 {
        return Err(Error::DegenerateLevel(format!(
            "the superlevel set at {level_fraction} is the source node alone"
        )));
    }

    const STEP: f64 = 0.02;
    let (xmax, ymax) = ((g.width() - 1) as f64, (g.height() - 1) as f64);
    let ray = |angle: f64| -> f64 {
        let (dy, dx) = angle.sin_cos();
        let (x0, y0) = (si as f64, sj as f64);
        let mut r = 0.0;
        let mut prev = neg.get(si, sj);
        loop {
            let next = r + STEP;
            let (x, y) = (x0 + next * dx, y0 + next * dy);
            if x < 0.0 || y < 0.0 || x > xmax || y > ymax {
                return r;
            }
            let v = bilinear(&neg, x, y);
            if v < level {
                return r + STEP * (prev - level) / (prev - v);
            }
            r = next;
            prev = v;
        }
    };
    let chords: Vec<f64> = (0..8)
        .map(|k| {
            let a = k as f64 * PI / 8.0;
            ray(a) + ray(a + PI)
        })
        .collect();
    let longest = chords.iter().copied().fold(0.0, f64::max);
    let shortest = chords.iter().copied().fold(f64::INFINITY, f64::min);
    if shortest <= 0.0 {
        return Err(Error::DegenerateLevel(
            "a chord through the source has zero length".into(),
        ));
    }
    Ok(longest / shortest)
}

/// Least-squares fit `Γ ≈ slope·log r + intercept` over nodes at distance
/// `r ∈ [r_min, r_max]` (physical units) from the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

pub fn radial_log_fit(gf: &GreenFunction, r_min: f64, r_max: f64) -> Result<RadialFit> {
    let g = gf.field.geometry();
    let (sx, sy) = g.position(gf.source.0, gf.source.1);
    let mut pts = Vec::new();
    for j in 0..g.height() {
        for i in 0..g.width() {
            let (x, y) = g.position(i, j);
            let r = (x - sx).hypot(y - sy);
            if r >= r_min && r <= r_max && r > 0.0 {
                pts.push((r.ln(), gf.field.get(i, j)));
            }
        }
    }
    if pts.len() < 3 {
        return Err(Error::Argument(format!(
            "only {} nodes lie in the radial band [{r_min}, {r_max}]",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(RadialFit {
        slope,
        intercept: my - slope * mx,
        r_squared: if syy > 0.0 {
            sxy * sxy / (sxx * syy)
        } else {
            1.0
        },
        samples: pts.len(),
    })
}

/// One connected piece of a level line, in physical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelLine {
    pub level: f64,
    pub points: Vec<(f64, f64)>,
}

/// `count` levels evenly spaced strictly between the field's min and max.
pub fn default_levels(field: &ScalarField, count: usize) -> Vec<f64> {
    let (lo, hi) = (field.min(), field.max());
    (1..=count)
        .map(|k| lo + (hi - lo) * k as f64 / (count + 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// `(i, j)`–`(i+1, j)`.
    H(usize, usize),
    /// `(i, j)`–`(i, j+1)`.
    V(usize, usize),
}

/// Marching squares; saddle cells are resolved by the cell-centre average.
pub fn level_lines(field: &ScalarField, levels: &[f64]) -> Vec<LevelLine> {
    let g = *field.geometry();
    let h = g.spacing();
    let mut out = Vec::new();
    for &level in levels {
        let crossing = |e: Edge| -> (f64, f64) {
            let ((i0, j0), (i1, j1)) = match e {
                Edge::H(i, j) => ((i, j), (i + 1, j)),
                Edge::V(i, j) => ((i, j), (i, j + 1)),
            };
            let (a, b) = (field.get(i0, j0), field.get(i1, j1));
            let t = if a == b { 0.5 } else { (level - a) / (b - a) };
            (
                h * (i0 as f64 + t * (i1 as f64 - i0 as f64)),
                h * (j0 as f64 + t * (j1 as f64 - j0 as f64)),
            )
        };
        let mut segments: Vec<(Edge, Edge)> = Vec::new();
        for j in 0..g.height() - 1 {
            for i in 0..g.width() - 1 {
                let v = [
                    field.get(i, j),
                    field.get(i + 1, j),
                    field.get(i + 1, j + 1),
                    field.get(i, j + 1),
                ];
                let case = v
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (b, &x)| acc | (((x >= level) as u8) << b));
                let (bottom, right, top, left) = (
                    Edge::H(i, j),
                    Edge::V(i + 1, j),
                    Edge::H(i, j + 1),
                    Edge::V(i, j),
                );
                let centre_high = v.iter().sum::<f64>() / 4.0 >= level;
                match case {
                    0 | 15 => {}
                    1 | 14 => segments.push((left, bottom)),
                    2 | 13 => segments.push((bottom, right)),
                    3 | 12 => segments.push((left, right)),
                    4 | 11 => segments.push((right, top)),
                    6 | 9 => segments.push((bottom, top)),
                    7 | 8 => segments.push((left, top)),
                    5 => {
                        if centre_high {
                            segments.push((left, top));
                            segments.push((bottom, right));
                        } else {
                            segments.push((left, bottom));
                            segments.push((right, top));
                        }
                    }
                    10 => {
                        if centre_high {
                            segments.push((left, bottom));
                            segments.push((right, top));
                        } else {
                            segments.push((left, top));
                            segments.push((bottom, right));
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
        for chain in chain_segments(&segments) {
            out.push(LevelLine {
                level,
                points: chain.into_iter().map(crossing).collect(),
            });
        }
    }
    out
}

fn chain_segments(segments: &[(Edge, Edge)]) -> Vec<Vec<Edge>> {
    let mut incident: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(s);
        incident.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();
    let walk = |start: usize, from: Edge, used: &mut Vec<bool>| -> Vec<Edge> {
        let mut path = vec![from];
        let mut seg = start;
        let mut at = from;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            path.push(next);
            at = next;
            match incident[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => return path,
            }
        }
    };
    // Open chains start at an edge touched by a single segment.
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        let (a, b) = segments[s];
        let start = if incident[&a].len() == 1 {
            Some(a)
        } else if incident[&b].len() == 1 {
            Some(b)
        } else {
            None
        };
        if let Some(e) = start {
            chains.push(walk(s, e, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            chains.push(walk(s, segments[s].0, &mut used));
        }
    }
    chains
}
