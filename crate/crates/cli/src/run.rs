//! Command execution, outputs and manifests.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cortical::green::default_levels;
use cortical::homogenization::{
    axis_stencil, h_convergence_experiment_with, sample_operator, TestFunction,
};
use cortical::imaging::{make_smooth_pattern, save_image_with_depth, BitDepth};
use cortical::io::{
    atomic_write, field_to_csv, level_lines_csv, trace_csv, write_field_csv, write_field_png16,
    write_orientation_png,
};
use cortical::solver::{DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use cortical::{
    anisotropy_ratio, default_dt, forward_output, green_set, level_lines, load_image,
    make_simultaneous_contrast, radial_log_fit, reconstruct_rgb, Boundary, GaussianParams,
    GridGeometry, HeterogeneousOperator, OperatorSpec, RgbImage, SolverConfig, StencilVector,
};

use crate::config::{Command, ExperimentConfig, GreenSection, InputSpec};

const BANDS: [&str; 3] = ["r", "g", "b"];
const DEFAULT_SIZE: usize = 64;
const MANIFEST: &str = "manifest.toml";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Library(cortical::Error),
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use cortical::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 5,
            CliError::Library(e) => match e {
                E::Parse(_) | E::Argument(_) | E::Geometry(_) => 2,
                E::Io { .. } | E::Image { .. } => 3,
                E::Instability { .. } | E::NoConvergence { .. } => 4,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Library(e) => write!(f, "{e}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl From<cortical::Error> for CliError {
    fn from(e: cortical::Error) -> Self {
        CliError::Library(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

/// What a command did, for the manifest.
#[derive(Debug, Default)]
struct Record {
    iterations: Vec<usize>,
    converged: Vec<bool>,
    outputs: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        Ok(atomic_write(&p, text.as_bytes())?)
    }
}

fn read_config(overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut config = match &overrides.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| cortical::Error::Io {
                path: path.clone(),
                source: e,
            })?;
            ExperimentConfig::from_toml(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    match (overrides.command, config.command) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Config(format!(
                "command `{}` conflicts with `{}` in the config",
                a.name(),
                b.name()
            )))
        }
        (Some(a), _) => config.command = Some(a),
        (None, Some(_)) => {}
        (None, None) => {
            return Err(CliError::Config(
                "no command given on the command line or in the config".into(),
            ))
        }
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(dir) = &overrides.out_dir {
        config.output.dir = Some(dir.clone());
    }
    if let Some(path) = &overrides.input {
        config.input = Some(InputSpec::File { path: path.clone() });
    }
    if config.output.dir.is_none() {
        config.output.dir = Some(PathBuf::from("out"));
    }
    if !matches!(config.output.bit_depth, 8 | 16) {
        return Err(CliError::Config(format!(
            "bit_depth must be 8 or 16, got {}",
            config.output.bit_depth
        )));
    }
    Ok(config)
}

/// Runs one experiment and writes its outputs and manifest.
pub fn execute(overrides: &Overrides) -> Result<PathBuf> {
    let mut config = read_config(overrides)?;
    let dir = config.output.dir.clone().expect("resolved");
    fs::create_dir_all(&dir).map_err(|e| cortical::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mut out = Outputs {
        dir: dir.clone(),
        written: Vec::new(),
    };
    let start = Instant::now();
    let command = config.command.expect("resolved");
    let mut record = match command {
        Command::Differentiate => differentiate(&mut config, &mut out)?,
        Command::Reconstruct => reconstruct(&mut config, &mut out)?,
        Command::Green => green(&mut config, &mut out)?,
        Command::Homogenize => homogenize(&mut config, &mut out)?,
        Command::MakeMap => make_map(&mut config, &mut out)?,
        Command::MakeTestImage => make_test_image(&mut config, &mut out)?,
    };
    record.outputs = out.written.clone();
    write_manifest(&config, &record, start.elapsed().as_secs_f64(), &mut out)?;
    Ok(dir)
}

fn write_manifest(
    config: &ExperimentConfig,
    record: &Record,
    seconds: f64,
    out: &mut Outputs,
) -> Result<()> {
    let mut text = config.to_toml().map_err(CliError::Config)?;
    let mut run = toml::Table::new();
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("wall_clock_seconds".into(), seconds.into());
    run.insert(
        "iterations".into(),
        toml::Value::Array(
            record
                .iterations
                .iter()
                .map(|&n| (n as i64).into())
                .collect(),
        ),
    );
    run.insert(
        "converged".into(),
        toml::Value::Array(record.converged.iter().map(|&c| c.into()).collect()),
    );
    run.insert(
        "outputs".into(),
        toml::Value::Array(record.outputs.iter().map(|s| s.as_str().into()).collect()),
    );
    let mut wrapper = toml::Table::new();
    wrapper.insert("run".into(), toml::Value::Table(run));
    text.push('\n');
    text.push_str(&toml::to_string(&wrapper).map_err(|e| CliError::Config(e.to_string()))?);
    out.text(MANIFEST, &text)
}

fn synthetic_geometry(config: &mut ExperimentConfig) -> Result<GridGeometry> {
    let w = *config.width.get_or_insert(DEFAULT_SIZE);
    let h = *config.height.get_or_insert(w);
    Ok(GridGeometry::unit(w, h)?)
}

/// The stimulus and whether it was synthesized.
fn load_input(config: &mut ExperimentConfig) -> Result<(RgbImage, bool)> {
    let input = config.input.clone().ok_or_else(|| {
        CliError::Config("this command needs an [input] section or --input".into())
    })?;
    match input {
        InputSpec::File { path } => {
            let img = load_image(&path)?;
            config.width = Some(img.geometry().width());
            config.height = Some(img.geometry().height());
            Ok((img, false))
        }
        InputSpec::SimultaneousContrast {
            strip_height_fraction,
            strip_gray,
        } => {
            let g = synthetic_geometry(config)?;
            Ok((
                make_simultaneous_contrast(&g, strip_height_fraction, strip_gray)?,
                true,
            ))
        }
        InputSpec::SmoothPattern => {
            let g = synthetic_geometry(config)?;
            Ok((make_smooth_pattern(&g), true))
        }
    }
}

fn build_operator(
    config: &mut ExperimentConfig,
    g: &GridGeometry,
) -> Result<HeterogeneousOperator> {
    config.operator.theta = config.operator.theta.resolved(g);
    let spec = OperatorSpec {
        beta: config.operator.beta,
        seed: config.seed,
        partition: config.operator.partition,
        theta: config.operator.theta.clone(),
    };
    Ok(spec.build(g)?)
}

fn gaussian(config: &ExperimentConfig) -> Result<GaussianParams> {
    Ok(GaussianParams::new(
        config.gaussian.sigma,
        config.gaussian.truncation_radius,
    )?)
}

fn solver_config(
    config: &mut ExperimentConfig,
    op: &HeterogeneousOperator,
) -> Result<SolverConfig> {
    let s = &mut config.solver;
    let dt = *s.dt.get_or_insert(default_dt(op));
    let tolerance = *s.tolerance.get_or_insert(DEFAULT_TOLERANCE);
    let max_iterations = *s.max_iterations.get_or_insert(DEFAULT_MAX_ITERATIONS);
    let boundary = *s.boundary.get_or_insert(Boundary::Neumann);
    Ok(SolverConfig::new(
        dt,
        tolerance,
        max_iterations,
        boundary,
        s.record_energy,
    )?)
}

fn depth(config: &ExperimentConfig) -> BitDepth {
    if config.output.bit_depth == 16 {
        BitDepth::Sixteen
    } else {
        BitDepth::Eight
    }
}

fn save_rgb(
    config: &ExperimentConfig,
    out: &mut Outputs,
    name: &str,
    img: &RgbImage,
) -> Result<()> {
    let p = out.path(name);
    save_image_with_depth(img, &p, config.output.clip, depth(config))?;
    out.written.push(format!("{name}.norm"));
    for (k, band) in BANDS.iter().enumerate() {
        let stem = name.trim_end_matches(".png");
        out.text(&format!("{stem}_{band}.csv"), &field_to_csv(img.band(k)))?;
    }
    Ok(())
}

fn differentiate(config: &mut ExperimentConfig, out: &mut Outputs) -> Result<Record> {
    let (img, synthetic) = load_input(config)?;
    let g = *img.geometry();
    let op = build_operator(config, &g)?;
    let gauss = gaussian(config)?;
    if synthetic {
        save_rgb(config, out, "stimulus.png", &img)?;
    }
    let bands: Vec<_> = img
        .bands()
        .iter()
        .map(|b| forward_output(&op, b, &gauss))
        .collect::<cortical::Result<_>>()?;
    let [r, gr, b]: [_; 3] = bands.try_into().expect("three bands");
    let forward = RgbImage::new(r, gr, b)?;
    for (k, band) in BANDS.iter().enumerate() {
        out.text(
            &format!("forward_{band}.csv"),
            &field_to_csv(forward.band(k)),
        )?;
    }
    let p = out.path("forward.png");
    save_image_with_depth(&forward, &p, false, depth(config))?;
    out.written.push("forward.png.norm".into());
    Ok(Record::default())
}

fn reconstruct(config: &mut ExperimentConfig, out: &mut Outputs) -> Result<Record> {
    let (img, synthetic) = load_input(config)?;
    let g = *img.geometry();
    let op = build_operator(config, &g)?;
    let gauss = gaussian(config)?;
    let solver = solver_config(config, &op)?;
    if synthetic {
        save_rgb(config, out, "stimulus.png", &img)?;
    }
    let p = out.path("theta.png");
    write_orientation_png(op.theta(), &p)?;
    eprintln!(
        "reconstructing {}x{} with {}",
        g.width(),
        g.height(),
        op.describe()
    );
    let result = reconstruct_rgb(&op, &img, &gauss, &solver)?;
    save_rgb(config, out, "reconstruction.png", &result.image)?;
    let mut record = Record::default();
    for (band, report) in BANDS.iter().zip(&result.reports) {
        out.text(
            &format!("update_trace_{band}.csv"),
            &trace_csv(&report.update_trace, 1),
        )?;
        if let Some(trace) = &report.energy_trace {
            out.text(&format!("energy_trace_{band}.csv"), &trace_csv(trace, 0))?;
        }
        if !report.converged {
            eprintln!(
                "warning: band {band} stopped after {} iterations with update sum {:e}",
                report.iterations, report.final_update_sum
            );
        }
        record.iterations.push(report.iterations);
        record.converged.push(report.converged);
    }
    Ok(record)
}

fn green(config: &mut ExperimentConfig, out: &mut Outputs) -> Result<Record> {
    let g = synthetic_geometry(config)?;
    let op = build_operator(config, &g)?;
    let solver = solver_config(config, &op)?;
    let section = config.green.get_or_insert_with(GreenSection::default);
    let sources: Vec<(usize, usize)> = section
        .sources
        .get_or_insert_with(|| vec![[g.width() / 2, g.height() / 2]])
        .iter()
        .map(|&[i, j]| (i, j))
        .collect();
    let section = section.clone();
    eprintln!(
        "solving {} Green function(s) of {}",
        sources.len(),
        op.describe()
    );
    let greens = green_set(&op, &sources, &solver)?;
    let p = out.path("theta.png");
    write_orientation_png(op.theta(), &p)?;

    let mut summary =
        String::from("i,j,iterations,converged,anisotropy,slope,intercept,r_squared\n");
    let mut record = Record::default();
    for gf in &greens {
        let (i, j) = gf.source;
        let stem = format!("green_{i}_{j}");
        write_field_csv(&gf.field, &out.path(&format!("{stem}.csv")))?;
        write_field_png16(&gf.field, &out.path(&format!("{stem}.png")))?;
        out.written.push(format!("{stem}.png.norm"));
        let lines = level_lines(&gf.field, &default_levels(&gf.field, section.levels));
        out.text(&format!("levels_{i}_{j}.csv"), &level_lines_csv(&lines))?;
        let ratio = match anisotropy_ratio(gf, section.level_fraction) {
            Ok(r) => format!("{r:?}"),
            Err(cortical::Error::DegenerateLevel(m)) => {
                eprintln!("note: source ({i}, {j}): {m}");
                String::new()
            }
            Err(e) => return Err(e.into()),
        };
        let fit = match section.radial_fit {
            Some([lo, hi]) => {
                let f = radial_log_fit(gf, lo, hi)?;
                format!("{:?},{:?},{:?}", f.slope, f.intercept, f.r_squared)
            }
            None => ",,".into(),
        };
        summary.push_str(&format!(
            "{i},{j},{},{},{ratio},{fit}\n",
            gf.iterations, gf.converged
        ));
        record.iterations.push(gf.iterations);
        record.converged.push(gf.converged);
    }
    out.text("green_summary.csv", &summary)?;
    Ok(record)
}

fn homogenize(config: &mut ExperimentConfig, out: &mut Outputs) -> Result<Record> {
    let seed = config.seed;
    let section = config
        .homogenize
        .as_mut()
        .ok_or_else(|| CliError::Config("homogenize needs a [homogenize] section".into()))?;
    let count = section.epsilons.len();
    let seeds = section
        .seeds
        .get_or_insert_with(|| (0..count as u64).map(|k| seed.wrapping_add(k)).collect())
        .clone();
    let lambda: Vec<StencilVector> = section
        .stencil
        .get_or_insert_with(|| axis_stencil().iter().map(|z| [z.dx, z.dy]).collect())
        .iter()
        .map(|&[dx, dy]| StencilVector::new(dx, dy))
        .collect();
    let f = section
        .test_function
        .get_or_insert_with(TestFunction::default)
        .clone();
    let section = section.clone();
    if seeds.len() != count {
        return Err(CliError::Config(format!(
            "{count} epsilons but {} seeds",
            seeds.len()
        )));
    }

    let mut failures = String::new();
    for (&eps, &s) in section.epsilons.iter().zip(&seeds) {
        let v = sample_operator(section.r, section.delta, eps, s, &lambda)?.validate();
        if !v.passed() {
            failures.push_str(&format!(
                "epsilon {eps} seed {s}: sum violation {:e}, negativity {:e}, delta_min {:e}, reversibility {:e}, {} failing nodes\n",
                v.sum_violation,
                v.negativity_violation,
                v.delta_min,
                v.reversibility_violation,
                v.failures.len()
            ));
            for (property, (i, j)) in v.failures.iter().take(20) {
                failures.push_str(&format!("  property {property} fails at node ({i}, {j})\n"));
            }
        }
    }
    if !failures.is_empty() {
        out.text("validation.txt", &failures)?;
        return Err(CliError::Validation(format!(
            "transition functions violate the mean-value properties; see {}",
            out.dir.join("validation.txt").display()
        )));
    }

    let report = h_convergence_experiment_with(
        section.r,
        section.delta,
        &f,
        &section.epsilons,
        &seeds,
        &lambda,
    )?;
    out.text("homogenization.csv", &report.to_csv())?;
    let summary = report.summary();
    out.text("summary.txt", &summary)?;
    print!("{summary}");
    Ok(Record::default())
}

fn make_map(config: &mut ExperimentConfig, out: &mut Outputs) -> Result<Record> {
    let g = synthetic_geometry(config)?;
    config.operator.theta = config.operator.theta.resolved(&g);
    let map = config.operator.theta.build(&g, config.seed)?;
    write_field_csv(map.as_field(), &out.path("theta.csv"))?;
    write_orientation_png(&map, &out.path("theta.png"))?;
    let mut s = String::from("i,j\n");
    for (i, j) in map.singularities() {
        s.push_str(&format!("{i},{j}\n"));
    }
    out.text("singularities.csv", &s)?;
    Ok(Record::default())
}

fn make_test_image(config: &mut ExperimentConfig, out: &mut Outputs) -> Result<Record> {
    if matches!(config.input, Some(InputSpec::File { .. })) {
        return Err(CliError::Config(
            "make-test-image needs a synthetic [input] kind".into(),
        ));
    }
    let (img, _) = load_input(config)?;
    save_rgb(config, out, "stimulus.png", &img)?;
    Ok(Record::default())
}

/// Path of the manifest a run writes into `dir`.
pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST)
}
