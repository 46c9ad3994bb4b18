//! Plain-text operator descriptions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridGeometry;
use crate::operators::{CoefficientField, HeterogeneousOperator};
use crate::orientation::{
    binary_hv_map, constant_map, pinwheel_map, salt_pepper_map, OrientationMap, PinwheelParams,
};

/// Orientation field recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaSpec {
    Constant {
        angle: f64,
    },
    Pinwheel {
        #[serde(default = "default_samples")]
        n_samples: usize,
        /// Defaults to `4 / width`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frequency_scale: Option<f64>,
    },
    SaltPepper,
    BinaryHv {
        prob_horizontal: f64,
    },
}

fn default_samples() -> usize {
    8
}

impl ThetaSpec {
    pub fn build(&self, geometry: &GridGeometry, seed: u64) -> Result<OrientationMap> {
        match *self {
            ThetaSpec::Constant { angle } => Ok(constant_map(geometry, angle)),
            ThetaSpec::Pinwheel {
                n_samples,
                frequency_scale,
            } => {
                let mut params = PinwheelParams::for_geometry(geometry, seed);
                params.n_samples = n_samples;
                if let Some(fs) = frequency_scale {
                    params.frequency_scale = fs;
                }
                pinwheel_map(geometry, &params)
            }
            ThetaSpec::SaltPepper => Ok(salt_pepper_map(geometry, seed)),
            ThetaSpec::BinaryHv { prob_horizontal } => {
                binary_hv_map(geometry, prob_horizontal, seed)
            }
        }
    }

    /// Fills defaults that depend on the grid so the spec reproduces exactly.
    pub fn resolved(&self, geometry: &GridGeometry) -> ThetaSpec {
        match *self {
            ThetaSpec::Pinwheel {
                n_samples,
                frequency_scale: None,
            } => ThetaSpec::Pinwheel {
                n_samples,
                frequency_scale: Some(4.0 / geometry.width() as f64),
            },
            ref other => other.clone(),
        }
    }
}

/// Operator recipe: orientation field, partition probabilities for
/// `(a₁, a₂, a₃)`, order parameter and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    #[serde(default = "default_beta")]
    pub beta: u8,
    #[serde(default)]
    pub seed: u64,
    pub partition: [f64; 3],
    pub theta: ThetaSpec,
}

fn default_beta() -> u8 {
    2
}

impl Default for OperatorSpec {
    /// Homogeneous Laplacian.
    fn default() -> Self {
        OperatorSpec {
            beta: 2,
            seed: 0,
            partition: [1.0, 0.0, 0.0],
            theta: ThetaSpec::Constant { angle: 0.0 },
        }
    }
}

impl OperatorSpec {
    /// Builds the operator; θ and the partition draw from separate streams
    /// of the same seed.
    pub fn build(&self, geometry: &GridGeometry) -> Result<HeterogeneousOperator> {
        let theta = self.theta.build(geometry, self.seed)?;
        let coeffs = CoefficientField::sample_partition(geometry, self.partition, self.seed)?;
        HeterogeneousOperator::new(theta, coeffs, self.beta)
    }
}

/// Operator recipe together with its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDescription {
    pub width: usize,
    pub height: usize,
    #[serde(default = "unit")]
    pub spacing: f64,
    pub operator: OperatorSpec,
}

fn unit() -> f64 {
    1.0
}

impl OperatorDescription {
    pub fn geometry(&self) -> Result<GridGeometry> {
        GridGeometry::new(self.width, self.height, self.spacing)
    }

    pub fn build(&self) -> Result<HeterogeneousOperator> {
        self.operator.build(&self.geometry()?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn description_round_trip() {
        let d = OperatorDescription {
            width: 12,
            height: 10,
            spacing: 1.0,
            operator: OperatorSpec {
                beta: 2,
                seed: 42,
                partition: [0.25, 0.25, 0.5],
                theta: ThetaSpec::Pinwheel {
                    n_samples: 6,
                    frequency_scale: Some(0.2),
                },
            },
        };
        let text = d.to_toml().unwrap();
        let back = OperatorDescription::from_toml(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.build().unwrap(), d.build().unwrap());
    }

    #[test]
    fn parse_minimal() {
        let d = OperatorDescription::from_toml(
            "width = 8\nheight = 8\n[operator]\npartition = [0.0, 1.0, 0.0]\ntheta = { kind = \"salt_pepper\" }\n",
        )
        .unwrap();
        assert_eq!(d.operator.beta, 2);
        assert!(d.build().is_ok());
        assert!(OperatorDescription::from_toml("width = 8\nheight = 8\nbogus = 1\n").is_err());
    }
}
