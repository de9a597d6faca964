//! Command-line front end for the `mghmi` binary.
//!
//! Every subcommand accepts `--config FILE`, a plain `key=value` file whose
//! keys are the subcommand's long option names. Flags given on the command
//! line override the file; unknown keys are an error. Human-readable output
//! goes to stdout, or JSON lines with `--json`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::{
    add_gaussian_noise, add_salt_pepper, load_field, save_field, FieldFormat, MultiChannelField, NoiseClamp, RaRanges,
};
use crate::harness::{
    mre, nn_classify, ra_version, random_vortex_street, rank_matches, save_heatmap, sliding_window_scan,
    synth_texture, vortex_template, write_detection_csv, StreetConfig,
};
use crate::inveval::{load_feature_csv, preprocess, save_feature_csv, CompiledSet, FeatureOptions};
use crate::invgen::{
    build_set_with, load_invariant_set, save_invariant_set, single_pair_set, Model, DEFAULT_SEED,
    DEFAULT_TOLERANCE, DEFAULT_TRIALS,
};
use crate::moments::{compute_moments, orthogonality_check, orthogonality_reference, sigma_guidance};

#[derive(Debug, Parser)]
#[command(name = "mghmi", version, about = "Gaussian-Hermite moment invariants of multi-channel data")]
pub struct Cli {
    /// Worker threads (falls back to MGHMI_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Emit JSON lines instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an independent invariant set (or expand a single pair).
    Gen(GenArgs),
    /// Compute the moment tensor of a field.
    Moments(MomentsArgs),
    /// Feature vectors of one or more fields under an invariant set.
    Features(FeaturesArgs),
    /// Nearest-neighbour classification of a test directory against a training directory.
    Classify(ClassifyArgs),
    /// Rank the points of a frame by feature distance to a template.
    Detect(DetectArgs),
    /// Write synthetic data.
    Synth(SynthArgs),
    /// Mean relative error between reference and transformed feature CSVs.
    Mre(MreArgs),
    /// Check the orthogonality of the Gaussian-Hermite functions.
    OrthoCheck(OrthoArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub coord_dim: usize,
    #[arg(long, default_value_t = 2)]
    pub channel_dim: usize,
    #[arg(long, default_value = "TR")]
    pub model: Model,
    /// Largest number of points K.
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    /// Largest per-point differential order O.
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Expand only this operator product, e.g. `psi12` (needs --primitive).
    #[arg(long, requires = "primitive")]
    pub operator: Option<String>,
    /// Primitive product for --operator, e.g. `Lambda12`.
    #[arg(long, requires = "operator")]
    pub primitive: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long)]
    pub sigma: f64,
    /// Zero samples outside the inscribed disc first (2-D only).
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub mask: bool,
    /// Subtract the per-channel mean first.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub subtract_mean: bool,
    /// CSV output `n,p1..pM,value`; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Field files.
    #[arg(long = "field", required = true, num_args = 1..)]
    pub fields: Vec<PathBuf>,
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub mask: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub mask: bool,
    /// `none`, `gaussian:SIGMA` or `salt:DENSITY`, applied to test fields.
    #[arg(long, default_value = "none")]
    pub noise: NoiseSpec,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub frame: PathBuf,
    /// Template field; a synthetic vortex is used when omitted.
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[arg(long, default_value_t = 4.0)]
    pub template_radius: f64,
    #[arg(long, default_value_t = 1.6)]
    pub template_aspect: f64,
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long, default_value_t = 9.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 33)]
    pub window: usize,
    #[arg(long, default_value_t = 240)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub mask: bool,
    /// Ranking CSV `rank,row,col,distance`; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Grayscale PNG of the distance map.
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Vortex street vector field (M = N = 2).
    VortexStreet,
    /// Single centered vortex.
    VortexTemplate,
    /// RGB texture.
    Texture,
    /// Directory with `train/` textures and `test/` RA versions.
    RgbSuite,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Output file, or directory for `rgb-suite`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 80)]
    pub rows: usize,
    #[arg(long, default_value_t = 320)]
    pub cols: usize,
    /// Vortices in a street.
    #[arg(long, default_value_t = 6)]
    pub count: usize,
    #[arg(long, default_value_t = 4.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1.6)]
    pub aspect: f64,
    #[arg(long, default_value_t = 0.15)]
    pub affine_jitter: f64,
    /// Side of textures and templates.
    #[arg(long, default_value_t = 129)]
    pub side: usize,
    /// Textures in a suite.
    #[arg(long, default_value_t = 10)]
    pub textures: usize,
    /// RA versions per suite texture.
    #[arg(long, default_value_t = 12)]
    pub versions: usize,
}

#[derive(Debug, Args)]
pub struct MreArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Feature CSV of the originals.
    #[arg(long)]
    pub reference: PathBuf,
    /// Feature CSV of transformed versions; ids are `REFID__anything`.
    #[arg(long)]
    pub transformed: PathBuf,
}

#[derive(Debug, Args)]
pub struct OrthoArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    pub max_order: usize,
    #[arg(long, default_value_t = 12.0)]
    pub halfwidth: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

/// Noise applied to test data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    Gaussian(f64),
    SaltPepper(f64),
}

impl std::str::FromStr for NoiseSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(NoiseSpec::None);
        }
        let (kind, level) = s.split_once(':').ok_or_else(|| format!("expected none, gaussian:S or salt:R, got {s:?}"))?;
        let level: f64 = level.parse().map_err(|e| format!("bad noise level {level:?}: {e}"))?;
        match kind {
            "gaussian" => Ok(NoiseSpec::Gaussian(level)),
            "salt" => Ok(NoiseSpec::SaltPepper(level)),
            _ => Err(format!("unknown noise kind {kind:?}")),
        }
    }
}

impl NoiseSpec {
    pub fn apply(&self, field: &MultiChannelField, seed: u64) -> Result<MultiChannelField> {
        match *self {
            NoiseSpec::None => Ok(field.clone()),
            NoiseSpec::Gaussian(s) => add_gaussian_noise(field, s, seed, NoiseClamp::Unbounded),
            NoiseSpec::SaltPepper(r) => add_salt_pepper(field, r, seed),
        }
    }
}

struct Out {
    json: bool,
}

impl Out {
    fn emit(&self, text: impl AsRef<str>, record: Value) {
        if self.json {
            println!("{record}");
        } else {
            println!("{}", text.as_ref());
        }
    }

    fn warn(&self, msg: impl AsRef<str>) {
        eprintln!("warning: {}", msg.as_ref());
    }
}

/// Runs the front end on `args` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let args = match inject_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cmd = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let cli = match cmd.try_get_matches_from(&args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    let out = Out { json: cli.json };
    match dispatch(cli.command, &out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("MGHMI_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| Error::param(format!("MGHMI_THREADS must be a number, got {v:?}")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::param("thread count must be at least 1"));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses a `key=value` config file. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::ParseLine {
            line: i + 1,
            msg: format!("expected key=value, got {line:?}"),
        })?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Error::ParseLine {
                line: i + 1,
                msg: "empty key".into(),
            });
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

// Splices the config file's entries in front of the subcommand's own
// arguments so later command-line flags override them.
fn inject_config(args: Vec<String>) -> Result<Vec<String>> {
    let root = Cli::command();
    let Some(sub_pos) = args.iter().skip(1).position(|a| root.find_subcommand(a).is_some()).map(|p| p + 1) else {
        return Ok(args);
    };
    let mut path = None;
    for (i, a) in args.iter().enumerate().skip(sub_pos + 1) {
        if a == "--config" {
            path = Some(args.get(i + 1).cloned().ok_or_else(|| Error::param("--config needs a path"))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let entries = parse_config(&text)?;
    let sub = root.find_subcommand(&args[sub_pos]).expect("found above");
    let mut injected = Vec::new();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
            .ok_or_else(|| Error::param(format!("unknown config key {key:?} for {}", sub.get_name())))?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}={value}"));
        } else {
            match value.as_str() {
                "true" => injected.push(format!("--{key}")),
                "false" => {}
                _ => return Err(Error::param(format!("config key {key:?} takes true or false"))),
            }
        }
    }
    let mut out = args[..=sub_pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[sub_pos + 1..]);
    Ok(out)
}

fn dispatch(cmd: Command, out: &Out) -> Result<()> {
    match cmd {
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Moments(a) => cmd_moments(&a, out),
        Command::Features(a) => cmd_features(&a, out),
        Command::Classify(a) => cmd_classify(&a, out),
        Command::Detect(a) => cmd_detect(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
        Command::Mre(a) => cmd_mre(&a, out),
        Command::OrthoCheck(a) => cmd_ortho(&a, out),
    }
}

fn read_field(path: &Path) -> Result<MultiChannelField> {
    let format = FieldFormat::from_path(path)
        .ok_or_else(|| Error::param(format!("cannot tell the format of {} from its extension", path.display())))?;
    load_field(path, format)
}

fn write_field(field: &MultiChannelField, path: &Path) -> Result<()> {
    let format = FieldFormat::from_path(path)
        .ok_or_else(|| Error::param(format!("cannot tell the format of {} from its extension", path.display())))?;
    save_field(field, path, format)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Class label of a file: its stem up to the first `__`.
pub fn label_of(path: &Path) -> String {
    let s = stem(path);
    match s.split_once("__") {
        Some((head, _)) => head.to_string(),
        None => s,
    }
}

fn check_sigma_band(field: &MultiChannelField, sigma: f64, out: &Out) {
    if let Some(w) = sigma_guidance(field.extent(), sigma) {
        out.warn(w);
    }
}

fn options(mask: bool, sigma: f64, field: &MultiChannelField) -> FeatureOptions {
    FeatureOptions {
        circular_mask: mask && field.coord_dim() == 2,
        ..FeatureOptions::new(sigma)
    }
}

fn cmd_gen(a: &GenArgs, out: &Out) -> Result<()> {
    if a.coord_dim == 0 || a.channel_dim == 0 {
        return Err(Error::param("coord-dim and channel-dim must be at least 1"));
    }
    if let (Some(d), Some(p)) = (&a.operator, &a.primitive) {
        let set = single_pair_set(d, p, a.coord_dim, a.channel_dim)?;
        let poly = &set.members[0];
        out.emit(
            format!("{d} | {p} = {poly}"),
            json!({"command": "gen", "operator": d, "primitive": p, "polynomial": poly.to_string(), "terms": poly.num_terms()}),
        );
        if let Some(path) = &a.out {
            save_invariant_set(&set, path)?;
        }
        return Ok(());
    }
    if !(1..=4).contains(&a.degree) || !(1..=6).contains(&a.order) || a.coord_dim > 3 || a.channel_dim > 4 {
        return Err(Error::param(
            "supported ranges: degree 1..=4, order 1..=6, coord-dim 1..=3, channel-dim 1..=4",
        ));
    }
    if a.trials == 0 || !(a.tolerance > 0.0 && a.tolerance < 1.0) {
        return Err(Error::param("trials must be positive and tolerance in (0, 1)"));
    }
    let (report, set) = build_set_with(a.coord_dim, a.channel_dim, a.model, a.degree, a.order, a.trials, a.tolerance, a.seed);
    if set.is_empty() {
        out.warn(format!(
            "no invariants for M={} N={} model={} K={} O={}",
            a.coord_dim, a.channel_dim, a.model, a.degree, a.order
        ));
    }
    out.emit(
        format!(
            "set {}: {} pairs, {} zero, {} duplicate, {} RA overlap, {} candidates, {} independent (seed {:#x})",
            set.id(),
            report.pairs,
            report.zero,
            report.duplicate,
            report.ra_overlap,
            report.candidates.len(),
            set.len(),
            a.seed
        ),
        json!({
            "command": "gen", "set": set.id(), "pairs": report.pairs, "zero": report.zero,
            "duplicate": report.duplicate, "ra_overlap": report.ra_overlap,
            "candidates": report.candidates.len(), "independent": set.len(), "seed": a.seed,
        }),
    );
    if let Some(path) = &a.out {
        save_invariant_set(&set, path)?;
    }
    Ok(())
}

fn cmd_moments(a: &MomentsArgs, out: &Out) -> Result<()> {
    let field = read_field(&a.field)?;
    check_sigma_band(&field, a.sigma, out);
    let mut f = field;
    if a.mask || a.subtract_mean {
        if a.mask && f.coord_dim() != 2 {
            return Err(Error::DimMismatch("the circular mask needs a 2-D field".into()));
        }
        let opts = FeatureOptions {
            circular_mask: a.mask,
            ..FeatureOptions::new(a.sigma)
        };
        f = if a.subtract_mean {
            preprocess(&f, &opts)?
        } else {
            crate::field::circular_mask(&f)
        };
    }
    let t = compute_moments(&f, a.order, a.sigma)?;
    match &a.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            t.write_csv(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))?;
            out.emit(
                format!("{} moments written to {}", t.len(), path.display()),
                json!({"command": "moments", "count": t.len(), "out": path}),
            );
        }
        None => t.write_csv(std::io::stdout().lock()).map_err(|e| Error::io("<stdout>", e))?,
    }
    Ok(())
}

fn cmd_features(a: &FeaturesArgs, out: &Out) -> Result<()> {
    let set = load_invariant_set(&a.set)?;
    let compiled = CompiledSet::new(&set)?;
    let mut rows = Vec::with_capacity(a.fields.len());
    for path in &a.fields {
        let field = read_field(path)?;
        check_sigma_band(&field, a.sigma, out);
        let fv = compiled.features(&field, &options(a.mask, a.sigma, &field))?;
        rows.push((stem(path), fv));
    }
    save_feature_csv(&rows, &a.out)?;
    out.emit(
        format!("{} feature rows of length {} written to {}", rows.len(), rows[0].1.len(), a.out.display()),
        json!({"command": "features", "rows": rows.len(), "length": rows[0].1.len(), "set": set.id()}),
    );
    Ok(())
}

fn list_fields(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && FieldFormat::from_path(p).is_some())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "no field files")));
    }
    Ok(files)
}

fn cmd_classify(a: &ClassifyArgs, out: &Out) -> Result<()> {
    let set = load_invariant_set(&a.set)?;
    let compiled = CompiledSet::new(&set)?;
    let describe = |field: &MultiChannelField| compiled.features(field, &options(a.mask, a.sigma, field)).map(|f| f.values);
    let mut train = Vec::new();
    for path in list_fields(&a.train)? {
        let field = read_field(&path)?;
        check_sigma_band(&field, a.sigma, out);
        train.push((label_of(&path), describe(&field)?));
    }
    let test_paths = list_fields(&a.test)?;
    let mut test = Vec::with_capacity(test_paths.len());
    for (i, path) in test_paths.iter().enumerate() {
        let field = a.noise.apply(&read_field(path)?, a.seed.wrapping_add(i as u64))?;
        test.push(describe(&field)?);
    }
    let truth: Vec<String> = test_paths.iter().map(|p| label_of(p)).collect();
    let result = nn_classify(&train, &test, Some(&truth))?;
    if out.json {
        for ((p, l), t) in test_paths.iter().zip(&result.labels).zip(&truth) {
            out.emit("", json!({"file": p, "predicted": l, "truth": t}));
        }
    }
    let acc = result.accuracy.unwrap_or(0.0);
    out.emit(
        format!("accuracy {acc:.2} ({} train, {} test, noise {:?}, seed {})", train.len(), test.len(), a.noise, a.seed),
        json!({"command": "classify", "accuracy": acc, "train": train.len(), "test": test.len(), "seed": a.seed}),
    );
    Ok(())
}

fn cmd_detect(a: &DetectArgs, out: &Out) -> Result<()> {
    let frame = read_field(&a.frame)?;
    let set = load_invariant_set(&a.set)?;
    let compiled = CompiledSet::new(&set)?;
    let template = match &a.template {
        Some(p) => read_field(p)?,
        None => vortex_template(a.window, a.template_radius, a.template_aspect)?,
    };
    if template.extent().iter().any(|&e| e != a.window) {
        return Err(Error::DimMismatch(format!(
            "template extent {:?} differs from the window {}",
            template.extent(),
            a.window
        )));
    }
    check_sigma_band(&template, a.sigma, out);
    let opts = options(a.mask, a.sigma, &frame);
    let tf = compiled.features(&template, &opts)?.values;
    let raster = sliding_window_scan(&frame, &compiled, a.window, &opts, a.stride)?;
    let result = rank_matches(&raster, &tf, a.k)?;
    match &a.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            write_detection_csv(&result, std::io::BufWriter::new(file))?;
        }
        None => write_detection_csv(&result, std::io::stdout().lock())?,
    }
    if let Some(path) = &a.heatmap {
        save_heatmap(&raster, &tf, path)?;
    }
    if a.out.is_some() {
        let best = &result.ranked[0];
        out.emit(
            format!("{} centers scanned, best {:?} at distance {:e}", raster.len(), best.0, best.1),
            json!({"command": "detect", "scanned": raster.len(), "ranked": result.ranked.len(), "best": best.0, "distance": best.1}),
        );
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs, out: &Out) -> Result<()> {
    match a.kind {
        SynthKind::VortexStreet => {
            let cfg = StreetConfig {
                extent: [a.rows, a.cols],
                count: a.count,
                radius: a.radius,
                aspect: a.aspect,
                affine_jitter: a.affine_jitter,
                ..StreetConfig::default()
            };
            let (field, vortices) = random_vortex_street(&cfg, a.seed)?;
            write_field(&field, &a.out)?;
            let centers: Vec<[f64; 2]> = vortices.iter().map(|v| v.center).collect();
            out.emit(
                format!("vortex street {}x{} with centers {centers:?} (seed {})", a.rows, a.cols, a.seed),
                json!({"command": "synth", "kind": "vortex-street", "centers": centers, "seed": a.seed}),
            );
        }
        SynthKind::VortexTemplate => {
            write_field(&vortex_template(a.side, a.radius, a.aspect)?, &a.out)?;
            out.emit(
                format!("vortex template {0}x{0}", a.side),
                json!({"command": "synth", "kind": "vortex-template", "side": a.side}),
            );
        }
        SynthKind::Texture => {
            write_field(&synth_texture(a.side, a.seed)?, &a.out)?;
            out.emit(
                format!("texture {0}x{0} (seed {1})", a.side, a.seed),
                json!({"command": "synth", "kind": "texture", "side": a.side, "seed": a.seed}),
            );
        }
        SynthKind::RgbSuite => {
            let (train, test) = (a.out.join("train"), a.out.join("test"));
            for d in [&train, &test] {
                fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
            }
            let ranges = RaRanges::default();
            for i in 0..a.textures {
                let tex = synth_texture(a.side, a.seed.wrapping_add(i as u64))?;
                write_field(&tex, &train.join(format!("tex{i:02}.mcf")))?;
                for j in 0..a.versions {
                    let theta = j as f64 * std::f64::consts::TAU / a.versions as f64;
                    let seed = a.seed ^ ((i * a.versions + j) as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
                    write_field(&ra_version(&tex, theta, &ranges, seed)?, &test.join(format!("tex{i:02}__v{j:02}.mcf")))?;
                }
            }
            out.emit(
                format!("suite of {} textures x {} versions in {} (seed {})", a.textures, a.versions, a.out.display(), a.seed),
                json!({"command": "synth", "kind": "rgb-suite", "textures": a.textures, "versions": a.versions, "seed": a.seed}),
            );
        }
    }
    Ok(())
}

fn cmd_mre(a: &MreArgs, out: &Out) -> Result<()> {
    let reference = load_feature_csv(&a.reference)?;
    let transformed = load_feature_csv(&a.transformed)?;
    let mut grouped = vec![Vec::new(); reference.len()];
    for (id, v) in transformed {
        let head = id.split_once("__").map_or(id.as_str(), |(h, _)| h);
        let i = reference
            .iter()
            .position(|(r, _)| r == head)
            .ok_or_else(|| Error::param(format!("transformed row {id:?} has no reference {head:?}")))?;
        grouped[i].push(v);
    }
    let refs: Vec<Vec<f64>> = reference.into_iter().map(|(_, v)| v).collect();
    let report = mre(&refs, &grouped)?;
    for (k, (m, x)) in report.per_invariant.iter().zip(&report.excluded).enumerate() {
        if *x > 0 {
            out.warn(format!("invariant {}: {x} pairs skipped for a near-zero reference", k + 1));
        }
        out.emit(
            format!("invariant {}: MRE {m:.4}%", k + 1),
            json!({"invariant": k + 1, "mre_percent": m, "excluded": x}),
        );
    }
    out.emit(format!("max MRE {:.4}%", report.max()), json!({"command": "mre", "max_percent": report.max()}));
    Ok(())
}

fn cmd_ortho(a: &OrthoArgs, out: &Out) -> Result<()> {
    let mut worst: f64 = 0.0;
    for p1 in 0..=a.max_order {
        for p2 in 0..=a.max_order {
            let value = orthogonality_check(p1, p2, a.halfwidth, a.step)?;
            let err = (value - orthogonality_reference(p1, p2)).abs();
            worst = worst.max(err);
            if out.json {
                out.emit("", json!({"p1": p1, "p2": p2, "value": value, "abs_error": err}));
            }
        }
    }
    out.emit(
        format!("orthogonality up to order {}: max abs error {worst:.3e}", a.max_order),
        json!({"command": "ortho-check", "max_order": a.max_order, "max_abs_error": worst}),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let c = parse_config("# c\norder = 4\n\nmodel=RA\n").unwrap();
        assert_eq!(c, vec![("order".into(), "4".into()), ("model".into(), "RA".into())]);
        assert!(matches!(parse_config("oops"), Err(Error::ParseLine { line: 1, .. })));
    }

    #[test]
    fn noise_spec_parsing() {
        assert_eq!("none".parse::<NoiseSpec>().unwrap(), NoiseSpec::None);
        assert_eq!("gaussian:0.01".parse::<NoiseSpec>().unwrap(), NoiseSpec::Gaussian(0.01));
        assert_eq!("salt:0.1".parse::<NoiseSpec>().unwrap(), NoiseSpec::SaltPepper(0.1));
        assert!("pink:1".parse::<NoiseSpec>().is_err());
    }

    #[test]
    fn labels_from_file_names() {
        assert_eq!(label_of(Path::new("a/tex03__v07.mcf")), "tex03");
        assert_eq!(label_of(Path::new("tex03.png")), "tex03");
    }

    #[test]
    fn unknown_config_key_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.cfg");
        fs::write(&cfg, "bogus=1\n").unwrap();
        let code = run(["mghmi", "ortho-check", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code, 2);
    }
}
