//! Command line front end for the flicker visibility model.
//!
//! Every data-producing subcommand writes plot-ready CSV (`x,y,series`) to
//! stdout behind a short `#` provenance header: the command line, a content
//! hash of the parameter set, and the quadrature configuration. Reruns of
//! the same command are byte-identical, so outputs can be diffed or cached.
//!
//! Exit codes: 0 success, 2 usage error, 3 domain error (invalid stimulus,
//! degenerate configuration, fit failure), 4 file I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use elatcsf::applications::{
    headset_cff_curve, lighting_sensitivity_curve, load_headsets, LightingCondition,
};
use elatcsf::cff::predict_cff;
use elatcsf::data::{filter_for_training, load_manifest};
use elatcsf::fitting::{self, metrics};
use elatcsf::summation;
use elatcsf::vrr::{flicker_free_range, DisplaySpec, VrrContrastModel};
use elatcsf::{
    ApplicationError, CffPrediction, DataError, Dataset, DatasetRole, Field, FitConfig, FitError,
    Geometry, ModelError, ModelParams, OptimizerKind, ParamId, ParamMask, QuadratureSpec,
    ScaleConvention, Stimulus, VrrError,
};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

#[derive(Parser)]
#[command(name = "elatcsf", version, about = "Flicker visibility model tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep pooled sensitivity across temporal frequency.
    Eval(EvalArgs),
    /// Critical flicker fusion frequency across luminance.
    Cff(CffArgs),
    /// Fit model coefficients and per-dataset scales to measurements.
    Fit(FitArgs),
    /// Check dataset files and report filtering and error metrics.
    Validate(ValidateArgs),
    /// Flicker-free refresh range of a display from a contrast table.
    VrrRange(VrrRangeArgs),
    /// CFF curves for head-mounted displays.
    Headset(HeadsetArgs),
    /// Relative visibility curves for lighting conditions.
    Lighting(LightingArgs),
}

// ---------------------------------------------------------------------------
// shared argument groups

#[derive(Args)]
struct ModelArgs {
    /// Parameter TOML file; defaults to the built-in fitted set.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Temporal kernel variant of the built-in set.
    #[arg(long, value_enum, default_value_t = KernelChoice::Refitted, conflicts_with = "params")]
    tcsf: KernelChoice,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum KernelChoice {
    /// Kernel refitted jointly with the extensions (default).
    Refitted,
    /// Standard-document kernel coefficients.
    Original,
}

impl ModelArgs {
    /// Returns the parameters plus a provenance label for the header.
    fn load(&self) -> Result<(ModelParams, String), CliError> {
        match &self.params {
            Some(path) => {
                let p = ModelParams::load_toml(path)?;
                p.validate()?;
                Ok((p, path.display().to_string()))
            }
            None => match self.tcsf {
                KernelChoice::Refitted => Ok((ModelParams::fitted(), "builtin:fitted".into())),
                KernelChoice::Original => Ok((
                    ModelParams::fitted().with_original_tcsf(),
                    "builtin:fitted+original-tcsf".into(),
                )),
            },
        }
    }
}

#[derive(Args)]
struct QuadArgs {
    /// Nodes per quadrature axis.
    #[arg(long, default_value_t = 64)]
    nodes: usize,
    /// Use a single fixed-order rule instead of adaptive refinement.
    #[arg(long)]
    no_adaptive: bool,
}

impl QuadArgs {
    fn spec(&self) -> Result<QuadratureSpec, CliError> {
        let spec = QuadratureSpec {
            nodes_radial: self.nodes,
            nodes_angular: self.nodes,
            adaptive: !self.no_adaptive,
            ..QuadratureSpec::default()
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct GeometryArgs {
    /// Disc radius, degrees.
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["rect_width", "rect_height", "area"])]
    disc_radius: Option<f64>,
    /// Rectangle width, degrees (pairs with --rect-height).
    #[arg(long, allow_negative_numbers = true, requires = "rect_height", conflicts_with = "area")]
    rect_width: Option<f64>,
    /// Rectangle height, degrees (pairs with --rect-width).
    #[arg(long, allow_negative_numbers = true, requires = "rect_width")]
    rect_height: Option<f64>,
    /// Disc area, square degrees.
    #[arg(long, allow_negative_numbers = true)]
    area: Option<f64>,
    /// Eccentricity of the patch center, degrees.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    ecc: f64,
}

impl GeometryArgs {
    fn geometry(&self) -> Result<Geometry, CliError> {
        let geometry = match (self.disc_radius, self.rect_width, self.rect_height, self.area) {
            (Some(r), None, None, None) => Geometry::disc(r, self.ecc),
            (None, Some(w), Some(h), None) => Geometry::rect(w, h, self.ecc),
            (None, None, None, Some(a)) => {
                let radius = (a / std::f64::consts::PI).sqrt();
                Geometry::disc(radius, self.ecc)
            }
            _ => {
                return Err(CliError::Usage(
                    "choose one geometry: --disc-radius, --rect-width/--rect-height, or --area"
                        .into(),
                ))
            }
        };
        geometry.validate()?;
        Ok(geometry)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.5)]
    freq_min: f64,
    #[arg(long, default_value_t = 60.0)]
    freq_max: f64,
    #[arg(long, default_value_t = 0.5)]
    freq_step: f64,
}

impl SweepArgs {
    fn grid(&self) -> Result<Vec<f64>, CliError> {
        if !(self.freq_step > 0.0 && self.freq_min >= 0.0 && self.freq_max >= self.freq_min) {
            return Err(CliError::Usage(format!(
                "bad frequency grid: min {} max {} step {}",
                self.freq_min, self.freq_max, self.freq_step
            )));
        }
        let count = ((self.freq_max - self.freq_min) / self.freq_step).round() as usize;
        if count > 100_000 {
            return Err(CliError::Usage(format!("{count} grid points is too many")));
        }
        Ok((0..=count)
            .map(|i| self.freq_min + i as f64 * self.freq_step)
            .filter(|f| *f <= self.freq_max + 1e-12)
            .collect())
    }
}

// ---------------------------------------------------------------------------
// subcommands

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Mean luminance, cd/m^2.
    #[arg(long, allow_negative_numbers = true)]
    luminance: f64,
    #[command(flatten)]
    sweep: SweepArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args)]
struct CffArgs {
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Luminances to evaluate, cd/m^2.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "1,10,100,1000")]
    luminances: Vec<f64>,
    /// Modulation contrast of the flicker.
    #[arg(long, default_value_t = 1.0)]
    contrast: f64,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset manifest TOML.
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated names of coefficients to free, e.g. xi,tau,beta.
    #[arg(long, value_delimiter = ',')]
    free: Vec<String>,
    /// Keep every per-dataset scale pinned at 1.
    #[arg(long)]
    no_scales: bool,
    #[arg(long, value_enum, default_value_t = OptimChoice::Bfgs)]
    optimizer: OptimChoice,
    /// How the per-dataset scale enters the predicted log sensitivity.
    #[arg(long, value_enum, default_value_t = ConventionChoice::ScaleLog)]
    convention: ConventionChoice,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Scale regularizer weight.
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
    /// Seed for fold shuffling in downstream cross-validation.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write the fitted parameters to this TOML file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OptimChoice {
    Bfgs,
    NelderMead,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ConventionChoice {
    /// Scale multiplies the log prediction.
    ScaleLog,
    /// Scale multiplies the prediction itself.
    LogScale,
}

#[derive(Args)]
struct ValidateArgs {
    /// Dataset manifest TOML.
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args)]
struct VrrRangeArgs {
    /// Display description TOML.
    #[arg(long)]
    display: PathBuf,
    /// Flicker contrast table CSV (mean_luminance_cdm2,f_rrs_hz,contrast).
    #[arg(long)]
    table: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args)]
struct HeadsetArgs {
    /// Headset catalog TOML.
    #[arg(long)]
    headsets: PathBuf,
    /// Only evaluate the named headset.
    #[arg(long)]
    name: Option<String>,
    /// Luminances to evaluate, cd/m^2.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "1,10,100,1000")]
    luminances: Vec<f64>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args)]
struct LightingArgs {
    /// Lit area, square degrees.
    #[arg(long, allow_negative_numbers = true)]
    area: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    ecc: f64,
    /// Mean luminance, cd/m^2.
    #[arg(long, allow_negative_numbers = true)]
    luminance: f64,
    /// Reference area; defaults to the condition's own.
    #[arg(long, allow_negative_numbers = true)]
    ref_area: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    ref_ecc: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    ref_luminance: Option<f64>,
    #[command(flatten)]
    sweep: SweepArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    quad: QuadArgs,
}

// ---------------------------------------------------------------------------
// error mapping

enum CliError {
    Usage(String),
    Domain(String),
    Io(String),
}

impl CliError {
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) | CliError::Io(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<elatcsf::QuadratureError> for CliError {
    fn from(e: elatcsf::QuadratureError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<VrrError> for CliError {
    fn from(e: VrrError) -> Self {
        match e {
            VrrError::Data(inner) => inner.into(),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<ApplicationError> for CliError {
    fn from(e: ApplicationError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// provenance header and formatting

/// Reconstructed invocation for the header, with argv[0] normalized.
fn command_line() -> String {
    let args: Vec<String> = std::env::args().skip(1).collect();
    format!("elatcsf {}", args.join(" "))
}

/// Content hash of the parameter set, so outputs are traceable to exact
/// coefficients even when they came from an edited file.
fn params_digest(p: &ModelParams) -> String {
    let text = toml::to_string(p).expect("params always serialize");
    let hash = Sha256::digest(text.as_bytes());
    format!("{hash:x}")[..12].to_string()
}

fn quad_label(spec: &QuadratureSpec) -> String {
    let base = format!("gauss-legendre {}x{}", spec.nodes_radial, spec.nodes_angular);
    if spec.adaptive {
        format!(
            "{base} adaptive rel_tol={} max_refinements={}",
            spec.rel_tol, spec.max_refinements
        )
    } else {
        format!("{base} fixed")
    }
}

fn header(out: &mut impl Write, source: &str, p: &ModelParams, quad: &QuadratureSpec) -> std::io::Result<()> {
    writeln!(out, "# {}", command_line())?;
    writeln!(out, "# params: {source} sha256:{}", params_digest(p))?;
    writeln!(out, "# quadrature: {}", quad_label(quad))
}

/// Fixed six-significant-digit scientific notation for measured values.
fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

fn cff_series(base: &str, prediction: CffPrediction) -> String {
    match prediction {
        CffPrediction::Cff(_) => base.to_string(),
        CffPrediction::BelowBracket => format!("{base}:below-bracket"),
        CffPrediction::AboveBracket => format!("{base}:above-bracket"),
    }
}

// ---------------------------------------------------------------------------
// drivers

fn run(cli: &Cli) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Eval(args) => eval(args, &mut out),
        Command::Cff(args) => cff(args, &mut out),
        Command::Fit(args) => fit(args, &mut out),
        Command::Validate(args) => validate(args, &mut out),
        Command::VrrRange(args) => vrr_range(args, &mut out),
        Command::Headset(args) => headset(args, &mut out),
        Command::Lighting(args) => lighting(args, &mut out),
    }
}

fn eval(args: &EvalArgs, out: &mut impl Write) -> Result<(), CliError> {
    let (params, source) = args.model.load()?;
    let quad = args.quad.spec()?;
    let field = Field {
        geometry: args.geometry.geometry()?,
        luminance: args.luminance,
    };
    header(out, &source, &params, &quad)?;
    writeln!(out, "x,y,series")?;
    for hz in args.sweep.grid()? {
        let s = summation::sensitivity(
            &params,
            &Stimulus {
                field,
                frequency: hz,
            },
            &quad,
        )?;
        writeln!(out, "{hz},{},sensitivity", sci(s))?;
    }
    Ok(())
}

fn cff(args: &CffArgs, out: &mut impl Write) -> Result<(), CliError> {
    let (params, source) = args.model.load()?;
    let quad = args.quad.spec()?;
    let geometry = args.geometry.geometry()?;
    header(out, &source, &params, &quad)?;
    writeln!(out, "x,y,series")?;
    for &luminance in &args.luminances {
        let field = Field {
            geometry,
            luminance,
        };
        let prediction = predict_cff(&params, &field, args.contrast, &quad)?;
        writeln!(
            out,
            "{luminance},{},{}",
            sci(prediction.clamped_hz()),
            cff_series("cff", prediction)
        )?;
    }
    Ok(())
}

fn parse_free(names: &[String]) -> Result<ParamMask, CliError> {
    let mut mask = ParamMask::none();
    for name in names {
        let id: ParamId = name
            .parse()
            .map_err(|e: String| CliError::Usage(e))?;
        mask = mask.with(id);
    }
    Ok(mask)
}

fn fit(args: &FitArgs, out: &mut impl Write) -> Result<(), CliError> {
    let (start, source) = args.model.load()?;
    let quad = args.quad.spec()?;
    let datasets = load_filtered(&args.manifest)?;
    let cfg = FitConfig {
        free: parse_free(&args.free)?,
        fit_scales: !args.no_scales,
        lambda: args.lambda,
        convention: match args.convention {
            ConventionChoice::ScaleLog => ScaleConvention::ScaleLogPrediction,
            ConventionChoice::LogScale => ScaleConvention::ScalePrediction,
        },
        optimizer: match args.optimizer {
            OptimChoice::Bfgs => OptimizerKind::Bfgs,
            OptimChoice::NelderMead => OptimizerKind::NelderMead,
        },
        max_iters: args.max_iters,
        quadrature: quad,
        seed: args.seed,
        ..FitConfig::default()
    };
    let result = fitting::fit(&start, &datasets, &cfg)?;

    header(out, &source, &start, &quad)?;
    writeln!(out, "# seed: {}", cfg.seed)?;
    writeln!(out, "metric,value")?;
    writeln!(out, "initial_loss,{}", sci(result.initial_loss))?;
    writeln!(out, "final_loss,{}", sci(result.loss))?;
    writeln!(out, "iterations,{}", result.iterations)?;
    writeln!(out, "converged,{}", result.converged)?;
    match metrics::s_rmse(
        &result.params,
        &datasets,
        &result.scales,
        cfg.convention,
        &cfg.quadrature,
    ) {
        Ok(rmse) => writeln!(out, "s_rmse_db,{}", sci(rmse))?,
        Err(FitError::EmptySelection { .. }) => {}
        Err(e) => return Err(e.into()),
    }
    match metrics::cff_rmse(&result.params, &datasets, &cfg.quadrature) {
        Ok(report) => {
            writeln!(out, "cff_rmse_hz,{}", sci(report.hz))?;
            writeln!(out, "cff_points,{}", report.points)?;
            if report.below_bracket + report.above_bracket > 0 {
                writeln!(
                    out,
                    "# {} below-bracket, {} above-bracket predictions clamped",
                    report.below_bracket, report.above_bracket
                )?;
            }
        }
        Err(FitError::EmptySelection { .. }) => {}
        Err(e) => return Err(e.into()),
    }
    for (name, scale) in &result.scales {
        writeln!(out, "scale:{name},{}", sci(*scale))?;
    }
    if let Some(path) = &args.out {
        result.params.save_toml(path)?;
        writeln!(out, "# fitted parameters written to {}", path.display())?;
    }
    Ok(())
}

fn load_filtered(manifest: &Path) -> Result<Vec<Dataset>, CliError> {
    let datasets = load_manifest(manifest)?;
    let mut filtered = Vec::with_capacity(datasets.len());
    for ds in &datasets {
        filtered.push(filter_for_training(ds)?.dataset);
    }
    Ok(filtered)
}

fn validate(args: &ValidateArgs, out: &mut impl Write) -> Result<(), CliError> {
    let (params, source) = args.model.load()?;
    let quad = args.quad.spec()?;
    let datasets = load_manifest(&args.manifest)?;
    header(out, &source, &params, &quad)?;
    writeln!(
        out,
        "dataset,role,points,kept,dropped_dim,dropped_spatial,fixed_scale"
    )?;
    let mut filtered = Vec::with_capacity(datasets.len());
    for ds in &datasets {
        let outcome = filter_for_training(ds)?;
        let role = match ds.role {
            DatasetRole::TrainAndTest => "train+test",
            DatasetRole::TrainOnly => "train-only",
        };
        writeln!(
            out,
            "{},{role},{},{},{},{},{}",
            ds.name,
            ds.points.len(),
            outcome.dataset.points.len(),
            outcome.dropped_dim,
            outcome.dropped_spatial,
            ds.fixed_scale
        )?;
        filtered.push(outcome.dataset);
    }
    let unit_scales = filtered
        .iter()
        .map(|d| (d.name.clone(), 1.0))
        .collect::<std::collections::BTreeMap<_, _>>();
    match metrics::s_rmse(
        &params,
        &filtered,
        &unit_scales,
        ScaleConvention::default(),
        &quad,
    ) {
        Ok(rmse) => writeln!(out, "# s_rmse_db (unit scales): {}", sci(rmse))?,
        Err(FitError::EmptySelection { .. }) => {}
        Err(e) => return Err(e.into()),
    }
    match metrics::cff_rmse(&params, &filtered, &quad) {
        Ok(report) => writeln!(
            out,
            "# cff_rmse_hz: {} over {} points ({} below, {} above bracket)",
            sci(report.hz),
            report.points,
            report.below_bracket,
            report.above_bracket
        )?,
        Err(FitError::EmptySelection { .. }) => {}
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn vrr_range(args: &VrrRangeArgs, out: &mut impl Write) -> Result<(), CliError> {
    let (params, source) = args.model.load()?;
    let quad = args.quad.spec()?;
    let text = std::fs::read_to_string(&args.display).map_err(|source| DataError::Io {
        path: args.display.clone(),
        source,
    })?;
    let display: DisplaySpec = toml::from_str(&text).map_err(|e| {
        CliError::Domain(format!("cannot parse {}: {e}", args.display.display()))
    })?;
    let model = VrrContrastModel::from_csv(&args.table)?;
    let report = flicker_free_range(&params, &display, &model, &quad)?;

    header(out, &source, &params, &quad)?;
    writeln!(out, "x,y,series")?;
    for (i, &luminance) in report.luminances.iter().enumerate() {
        writeln!(
            out,
            "{luminance},{},threshold-contrast",
            sci(report.thresholds[i])
        )?;
    }
    for (i, &luminance) in report.luminances.iter().enumerate() {
        match report.lowest_safe_hz[i] {
            Some(bound) => writeln!(out, "{luminance},{},lowest-safe-hz", sci(bound))?,
            None => writeln!(
                out,
                "# no safe refresh range at {luminance} cd/m^2 (top rate still flickers)"
            )?,
        }
    }
    writeln!(
        out,
        "# monotone-non-increasing: {}",
        report.monotone_non_increasing
    )?;
    Ok(())
}

fn headset(args: &HeadsetArgs, out: &mut impl Write) -> Result<(), CliError> {
    let (params, source) = args.model.load()?;
    let quad = args.quad.spec()?;
    let mut catalog = load_headsets(&args.headsets)?;
    if let Some(name) = &args.name {
        catalog.retain(|h| &h.name == name);
        if catalog.is_empty() {
            return Err(CliError::Usage(format!(
                "no headset named `{name}` in {}",
                args.headsets.display()
            )));
        }
    }
    header(out, &source, &params, &quad)?;
    writeln!(out, "x,y,series")?;
    for spec in &catalog {
        let curve = headset_cff_curve(&params, spec, &args.luminances, &quad)?;
        for (luminance, prediction) in curve {
            writeln!(
                out,
                "{luminance},{},{}",
                sci(prediction.clamped_hz()),
                cff_series(&spec.name, prediction)
            )?;
        }
    }
    Ok(())
}

fn lighting(args: &LightingArgs, out: &mut impl Write) -> Result<(), CliError> {
    let (params, source) = args.model.load()?;
    let quad = args.quad.spec()?;
    let condition = LightingCondition {
        area_deg2: args.area,
        eccentricity_deg: args.ecc,
        luminance_cdm2: args.luminance,
    };
    let reference = LightingCondition {
        area_deg2: args.ref_area.unwrap_or(condition.area_deg2),
        eccentricity_deg: args.ref_ecc.unwrap_or(condition.eccentricity_deg),
        luminance_cdm2: args.ref_luminance.unwrap_or(condition.luminance_cdm2),
    };
    let freqs = args.sweep.grid()?;
    let curve = lighting_sensitivity_curve(&params, &condition, &reference, &freqs, &quad)?;
    header(out, &source, &params, &quad)?;
    writeln!(out, "x,y,series")?;
    let series = format!(
        "a{}_e{}_L{}",
        condition.area_deg2, condition.eccentricity_deg, condition.luminance_cdm2
    );
    for (hz, value) in freqs.iter().zip(curve) {
        writeln!(out, "{hz},{},{series}", sci(value))?;
    }
    Ok(())
}
