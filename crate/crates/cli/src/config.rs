//! Experiment configuration files.

use std::path::PathBuf;

use cortical::homogenization::TestFunction;
use cortical::{Boundary, GaussianParams, ThetaSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Forward output L(G⋆I) of an image.
    Differentiate,
    /// Recover an image from its forward output.
    Reconstruct,
    /// Green functions of an operator.
    Green,
    /// Empirical H-convergence of random lattice operators.
    Homogenize,
    /// Orientation map only.
    MakeMap,
    /// Synthetic stimulus only.
    MakeTestImage,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Differentiate => "differentiate",
            Command::Reconstruct => "reconstruct",
            Command::Green => "green",
            Command::Homogenize => "homogenize",
            Command::MakeMap => "make-map",
            Command::MakeTestImage => "make-test-image",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default)]
    pub operator: OperatorSection,
    #[serde(default)]
    pub gaussian: GaussianSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSpec>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green: Option<GreenSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogenize: Option<HomogenizeSection>,
    /// Run record of a manifest; ignored on input.
    #[serde(default, skip_serializing)]
    pub run: Option<toml::Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    #[serde(default = "default_beta")]
    pub beta: u8,
    /// Probabilities of the Laplacian, second-order and fourth-order branches.
    #[serde(default = "laplacian_only")]
    pub partition: [f64; 3],
    #[serde(default = "horizontal")]
    pub theta: ThetaSpec,
}

fn default_beta() -> u8 {
    2
}

fn laplacian_only() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn horizontal() -> ThetaSpec {
    ThetaSpec::Constant { angle: 0.0 }
}

impl Default for OperatorSection {
    fn default() -> Self {
        OperatorSection {
            beta: default_beta(),
            partition: laplacian_only(),
            theta: horizontal(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSection {
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "three")]
    pub truncation_radius: f64,
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

impl Default for GaussianSection {
    fn default() -> Self {
        let g = GaussianParams::default();
        GaussianSection {
            sigma: g.sigma,
            truncation_radius: g.truncation_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Defaults to 0.1, or 0.001 when a fourth-order term is present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    #[serde(default)]
    pub record_energy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    File {
        path: PathBuf,
    },
    SimultaneousContrast {
        #[serde(default = "third")]
        strip_height_fraction: f64,
        #[serde(default = "half")]
        strip_gray: f64,
    },
    SmoothPattern,
}

fn third() -> f64 {
    1.0 / 3.0
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Clamp to [0, 1] instead of rescaling the image range.
    #[serde(default = "yes")]
    pub clip: bool,
    #[serde(default = "eight")]
    pub bit_depth: u8,
}

fn yes() -> bool {
    true
}

fn eight() -> u8 {
    8
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            clip: true,
            bit_depth: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenSection {
    /// Source nodes `[i, j]`; defaults to the centre node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<[usize; 2]>>,
    #[serde(default = "half")]
    pub level_fraction: f64,
    /// Number of exported level lines.
    #[serde(default = "eight_levels")]
    pub levels: usize,
    /// Radius range `[r_min, r_max]` of a logarithmic profile fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_fit: Option<[f64; 2]>,
}

fn eight_levels() -> usize {
    8
}

impl Default for GreenSection {
    fn default() -> Self {
        GreenSection {
            sources: None,
            level_fraction: 0.5,
            levels: 8,
            radial_fit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogenizeSection {
    #[serde(default = "half")]
    pub r: f64,
    pub delta: f64,
    pub epsilons: Vec<f64>,
    /// One per epsilon; defaults to `seed, seed + 1, …`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// Stencil vectors `[dx, dy]`; defaults to `±e₁, ±e₂, 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stencil: Option<Vec<[i32; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunction>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> Result<String, String> {
        toml::to_string(self).map_err(|e| e.to_string())
    }
}
