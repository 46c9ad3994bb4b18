//! Orientation fields θ(x) with values in [0, π).

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, ScalarField};
use crate::rng;

/// Reduces an angle into [0, π).
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Preferred direction at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationMap {
    field: ScalarField,
}

impl OrientationMap {
    /// Wraps raw angles (radians), reducing each modulo π.
    pub fn from_field(field: ScalarField) -> Result<Self> {
        if !field.is_finite() {
            return Err(Error::Argument("orientation angles must be finite".into()));
        }
        Ok(OrientationMap {
            field: field.map(reduce_angle),
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.field.geometry()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn theta(&self, i: usize, j: usize) -> f64 {
        self.field.get(i, j)
    }

    pub fn as_field(&self) -> &ScalarField {
        &self.field
    }

    /// True when every node carries the same angle.
    pub fn is_constant(&self) -> bool {
        let v = self.values();
        v.iter().all(|&t| t == v[0])
    }

    /// Plaquettes `(i, j)`–`(i+1, j+1)` around which θ winds by ±π.
    ///
    /// Differences between neighbouring corners are taken modulo π into
    /// [−π/2, π/2), so a loop either returns to zero or to ±π.
    pub fn singularities(&self) -> Vec<(usize, usize)> {
        let g = self.geometry();
        let wrap = |d: f64| (d + PI / 2.0).rem_euclid(PI) - PI / 2.0;
        let mut found = Vec::new();
        for j in 0..g.height() - 1 {
            for i in 0..g.width() - 1 {
                let loop_ = [
                    self.theta(i, j),
                    self.theta(i + 1, j),
                    self.theta(i + 1, j + 1),
                    self.theta(i, j + 1),
                ];
                let winding: f64 = (0..4).map(|k| wrap(loop_[(k + 1) % 4] - loop_[k])).sum();
                if winding.abs() > PI / 2.0 {
                    found.push((i, j));
                }
            }
        }
        found
    }
}

/// Parameters of a random pinwheel map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinwheelParams {
    pub n_samples: usize,
    pub seed: u64,
    /// Multiplies the physical coordinates inside the sinusoid phase.
    pub frequency_scale: f64,
}

impl PinwheelParams {
    /// Eight sinusoids with `frequency_scale = 4 / width`.
    pub fn for_geometry(geometry: &GridGeometry, seed: u64) -> Self {
        PinwheelParams {
            n_samples: 8,
            seed,
            frequency_scale: 4.0 / geometry.width() as f64,
        }
    }
}

/// θ = arg Σ_k c_k exp(i2π(x₁cos(2πk/N) + x₂sin(2πk/N))) reduced modulo π,
/// with c_k uniform on [0, 1].
pub fn pinwheel_map(geometry: &GridGeometry, params: &PinwheelParams) -> Result<OrientationMap> {
    if params.n_samples == 0 {
        return Err(Error::Argument(
            "pinwheel map needs at least one sinusoid".into(),
        ));
    }
    if !(params.frequency_scale.is_finite() && params.frequency_scale > 0.0) {
        return Err(Error::Argument(format!(
            "frequency scale must be positive, got {}",
            params.frequency_scale
        )));
    }
    let mut rng = rng::stream(params.seed, rng::STREAM_PINWHEEL);
    let n = params.n_samples;
    let waves: Vec<(f64, f64, f64)> = (1..=n)
        .map(|k| {
            let c: f64 = rng.random();
            let phi = 2.0 * PI * k as f64 / n as f64;
            (c, phi.cos(), phi.sin())
        })
        .collect();

    let scale = geometry.spacing() * params.frequency_scale;
    let mut values = Vec::with_capacity(geometry.len());
    for j in 0..geometry.height() {
        for i in 0..geometry.width() {
            let x1 = i as f64 * scale;
            let x2 = j as f64 * scale;
            let (mut re, mut im) = (0.0, 0.0);
            for &(c, cos_k, sin_k) in &waves {
                let phase = 2.0 * PI * (x1 * cos_k + x2 * sin_k);
                re += c * phase.cos();
                im += c * phase.sin();
            }
            if re == 0.0 && im == 0.0 {
                return Err(Error::DegenerateCoefficients { i, j });
            }
            values.push(im.atan2(re));
        }
    }
    OrientationMap::from_field(ScalarField::from_values(*geometry, values)?)
}

/// I.i.d. uniform orientations.
pub fn salt_pepper_map(geometry: &GridGeometry, seed: u64) -> OrientationMap {
    let mut rng = rng::stream(seed, rng::STREAM_SALT_PEPPER);
    let field =
        ScalarField::from_index_fn(*geometry, |_, _| reduce_angle(rng.random::<f64>() * PI));
    OrientationMap { field }
}

pub fn constant_map(geometry: &GridGeometry, theta: f64) -> OrientationMap {
    OrientationMap {
        field: ScalarField::new(*geometry, reduce_angle(theta)),
    }
}

/// θ = 0 with probability `prob_horizontal`, otherwise π/2, independently per node.
pub fn binary_hv_map(
    geometry: &GridGeometry,
    prob_horizontal: f64,
    seed: u64,
) -> Result<OrientationMap> {
    if !(0.0..=1.0).contains(&prob_horizontal) {
        return Err(Error::Argument(format!(
            "probability must lie in [0, 1], got {prob_horizontal}"
        )));
    }
    let mut rng = rng::stream(seed, rng::STREAM_BINARY_HV);
    let field = ScalarField::from_index_fn(*geometry, |_, _| {
        if rng.random::<f64>() < prob_horizontal {
            0.0
        } else {
            PI / 2.0
        }
    });
    Ok(OrientationMap { field })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridGeometry {
        GridGeometry::unit(n, n).unwrap()
    }

    #[test]
    fn constant_maps_reduce() {
        let g = grid(5);
        assert!(constant_map(&g, 0.0).values().iter().all(|&t| t == 0.0));
        assert!(constant_map(&g, PI).values().iter().all(|&t| t == 0.0));
        assert!(constant_map(&g, PI / 2.0)
            .values()
            .iter()
            .all(|&t| t == PI / 2.0));
        assert!(constant_map(&g, -1e-18).values().iter().all(|&t| t < PI));
    }

    #[test]
    fn single_sinusoid_gives_stripes() {
        let g = grid(16);
        let params = PinwheelParams {
            n_samples: 1,
            seed: 3,
            frequency_scale: 0.05,
        };
        let map = pinwheel_map(&g, &params).unwrap();
        for j in 0..16 {
            for i in 0..16 {
                let expected = reduce_angle(2.0 * PI * 0.05 * i as f64);
                let d = (map.theta(i, j) - expected).abs();
                assert!(d < 1e-9 || (PI - d) < 1e-9, "({i},{j})");
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let g = grid(32);
        let p = PinwheelParams::for_geometry(&g, 11);
        assert_eq!(pinwheel_map(&g, &p).unwrap(), pinwheel_map(&g, &p).unwrap());
        assert_eq!(salt_pepper_map(&g, 4), salt_pepper_map(&g, 4));
        assert_eq!(
            binary_hv_map(&g, 0.3, 4).unwrap(),
            binary_hv_map(&g, 0.3, 4).unwrap()
        );
    }

    #[test]
    fn salt_pepper_seeds_differ() {
        let g = grid(64);
        let a = salt_pepper_map(&g, 1);
        let b = salt_pepper_map(&g, 2);
        let equal = a
            .values()
            .iter()
            .zip(b.values())
            .filter(|(x, y)| x == y)
            .count();
        assert!(equal * 100 <= g.len());
    }

    #[test]
    fn binary_maps() {
        let g = grid(8);
        assert!(binary_hv_map(&g, 1.0, 0)
            .unwrap()
            .values()
            .iter()
            .all(|&t| t == 0.0));
        assert!(binary_hv_map(&g, 0.0, 0)
            .unwrap()
            .values()
            .iter()
            .all(|&t| t == PI / 2.0));
        assert!(binary_hv_map(&g, 1.5, 0).is_err());
        assert!(binary_hv_map(&g, -0.1, 0).is_err());

        let g = grid(128);
        let m = binary_hv_map(&g, 0.5, 17).unwrap();
        let zeros = m.values().iter().filter(|&&t| t == 0.0).count() as f64 / g.len() as f64;
        assert!((0.45..=0.55).contains(&zeros), "fraction {zeros}");
    }

    #[test]
    fn pinwheels_have_singularities() {
        let g = grid(64);
        let hits = (0..10)
            .filter(|&seed| {
                let p = PinwheelParams::for_geometry(&g, seed);
                !pinwheel_map(&g, &p).unwrap().singularities().is_empty()
            })
            .count();
        assert!(hits >= 8, "only {hits} of 10 maps contain a singularity");
    }

    #[test]
    fn smooth_rotation_has_no_singularity() {
        let g = grid(16);
        let m = OrientationMap::from_field(ScalarField::from_fn(g, |x, y| 0.05 * x + 0.02 * y))
            .unwrap();
        assert!(m.singularities().is_empty());
    }

    #[test]
    fn vortex_has_singularity() {
        let g = grid(9);
        let m = OrientationMap::from_field(ScalarField::from_fn(g, |x, y| {
            ((y - 4.5).atan2(x - 4.5)) / 2.0
        }))
        .unwrap();
        assert_eq!(m.singularities(), vec![(4, 4)]);
    }
}
