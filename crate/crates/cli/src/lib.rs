//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Errors go to the
//! error stream, results to the output stream.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use voldiff::datagen::{default_suite, gen_stereogram, SceneSpec, SuiteConfig};
use voldiff::io::{
    read_disparity_pfm, read_intensity, write_disparity_pfm, write_disparity_png, write_pgm, write_png_gray,
    EmitFlags, InputSource, PairInput, RunConfig,
};
use voldiff::pipeline::{
    comparison_table, entropy_at, evaluate_suite, mean_entropy_maps, run_pair, SceneRun, SuiteSummary,
};
use voldiff::volume::filter_distribution;
use voldiff::{
    ClassicalMatcher, DisparityMap, EmbeddingMode, ImagePair, MatcherConfig, MetricReport, SamplerConfig,
    SamplerOutput,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<voldiff::Error> for Failure {
    fn from(e: voldiff::Error) -> Self {
        match e {
            voldiff::Error::Config(msg) => Failure::Usage(msg),
            other => Failure::Data(other.into()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(name = "voldiff", version, about = "Stereo cost-volume filtering by iterative denoising")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run baseline and filtered matching on the synthetic suite and print a comparison table.
    Demo {
        #[command(flatten)]
        suite: SuiteArgs,
        #[command(flatten)]
        knobs: Knobs,
        /// Print the per-scene reports as JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Run from a JSON config and/or an image pair and write artifacts.
    Run {
        /// JSON run configuration; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, requires = "right")]
        left: Option<PathBuf>,
        #[arg(long, requires = "left")]
        right: Option<PathBuf>,
        /// Ground-truth disparity (PFM) for the pair.
        #[arg(long, requires = "left")]
        gt: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every step prediction.
        #[arg(long)]
        snapshots: bool,
        #[command(flatten)]
        suite: SuiteArgs,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Metrics between a predicted and a ground-truth disparity map (PFM).
    Eval {
        pred: PathBuf,
        gt: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Per-step filter entropy at chosen pixels.
    ProbeEntropy {
        /// Pixel as `x,y` (working resolution); repeatable.
        #[arg(long = "pixel", value_parser = parse_pixel, required = true)]
        pixels: Vec<(usize, usize)>,
        #[arg(long, requires = "right")]
        left: Option<PathBuf>,
        #[arg(long, requires = "left")]
        right: Option<PathBuf>,
        /// Suite scene to probe when no pair is given.
        #[arg(long, default_value_t = 0)]
        scene: usize,
        /// Average the entropy over every suite scene instead.
        #[arg(long, conflicts_with_all = ["left", "scene"])]
        suite_mean: bool,
        /// Also print the filter distribution over levels at every step.
        #[arg(long, conflicts_with = "suite_mean")]
        histogram: bool,
        #[command(flatten)]
        suite: SuiteArgs,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Write the synthetic suite to disk.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ImageFormat::Pgm)]
        format: ImageFormat,
        #[command(flatten)]
        suite: SuiteArgs,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ImageFormat {
    Pgm,
    Png,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Args, Debug, Clone, Default)]
struct SuiteArgs {
    #[arg(long)]
    scenes: Option<usize>,
    /// Scene width and height.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    suite_seed: Option<u64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Largest ground-truth disparity range of the suite.
    #[arg(long)]
    suite_max_disp: Option<usize>,
}

impl SuiteArgs {
    fn apply(&self, mut s: SuiteConfig) -> SuiteConfig {
        if let Some(v) = self.scenes {
            s.scenes = v;
        }
        if let Some(v) = self.size {
            s.width = v;
            s.height = v;
        }
        if let Some(v) = self.suite_seed {
            s.seed = v;
        }
        if let Some(v) = self.noise_sigma {
            s.noise_sigma = v;
        }
        if let Some(v) = self.suite_max_disp {
            s.max_disparity = v;
        }
        s
    }

    fn any(&self) -> bool {
        self.scenes.is_some()
            || self.size.is_some()
            || self.suite_seed.is_some()
            || self.noise_sigma.is_some()
            || self.suite_max_disp.is_some()
    }
}

/// Every sampler and matcher knob.
#[derive(Args, Debug, Clone, Default)]
struct Knobs {
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated step weights followed by the baseline weight.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    renewal: Option<Switch>,
    #[arg(long)]
    disp_threshold: Option<f64>,
    /// Column entropy threshold in nats (default ln(D)/2).
    #[arg(long)]
    entropy_threshold: Option<f64>,
    #[arg(long)]
    timesteps: Option<usize>,
    #[arg(long)]
    embedding: Option<EmbeddingMode>,
    #[arg(long)]
    max_disp: Option<usize>,
    #[arg(long)]
    downsample: Option<usize>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    temp: Option<f64>,
    #[arg(long)]
    census_radius: Option<usize>,
    #[arg(long)]
    agg_radius: Option<usize>,
    #[arg(long)]
    offset: Option<f64>,
    #[arg(long)]
    concat_weight: Option<f64>,
    #[arg(long, value_enum)]
    standardize: Option<Switch>,
    #[arg(long, value_enum)]
    rectify: Option<Switch>,
}

impl Knobs {
    fn sampler(&self, mut s: SamplerConfig) -> CliResult<SamplerConfig> {
        if let Some(v) = self.steps {
            s.steps = v;
            // Weights follow the step count unless given explicitly.
            s.weights.clear();
        }
        if let Some(v) = self.eta {
            s.eta = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = &self.weights {
            s.weights = v.clone();
        }
        if let Some(v) = self.renewal {
            s.renewal.enabled = v.on();
        }
        if let Some(v) = self.disp_threshold {
            s.renewal.disparity_threshold = v;
        }
        if let Some(v) = self.entropy_threshold {
            s.renewal.entropy_threshold = Some(v);
        }
        if let Some(v) = self.timesteps {
            s.timesteps = v;
        }
        if let Some(v) = self.embedding {
            s.embedding = v;
        }
        s.validate()?;
        Ok(s)
    }

    fn matcher(&self, mut m: MatcherConfig) -> CliResult<MatcherConfig> {
        if let Some(v) = self.max_disp {
            m.max_disparity = v;
        }
        if let Some(v) = self.downsample {
            m.downsample = v;
        }
        if let Some(v) = self.census_radius {
            m.census_radius = v;
            if self.groups.is_none() {
                m.groups = 2 * v + 1;
            }
        }
        if let Some(v) = self.groups {
            m.groups = v;
        }
        if let Some(v) = self.temp {
            m.temperature = v;
        }
        if let Some(v) = self.agg_radius {
            m.aggregation_radius = v;
        }
        if let Some(v) = self.offset {
            m.similarity_offset = v;
        }
        if let Some(v) = self.concat_weight {
            m.concat_weight = v;
        }
        if let Some(v) = self.standardize {
            m.standardize = v.on();
        }
        if let Some(v) = self.rectify {
            m.rectify = v.on();
        }
        m.validate()?;
        Ok(m)
    }

    /// Matcher for a synthetic suite: searches exactly the suite's range
    /// unless told otherwise.
    fn suite_matcher(&self, suite: &SuiteConfig) -> CliResult<MatcherConfig> {
        self.matcher(MatcherConfig { max_disparity: suite.max_disparity, ..MatcherConfig::default() })
    }
}

fn parse_pixel(s: &str) -> std::result::Result<(usize, usize), String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(x)?, p(y)?))
}

/// Parses `argv` (program name first) and runs the command.
pub fn cli_run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    cli_run_with(argv, &mut out, &mut err)
}

/// [`cli_run`] with explicit output and error streams.
pub fn cli_run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_DATA
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Demo { suite, knobs, json } => demo(&suite, &knobs, json, out),
        Command::Run { config, left, right, gt, out: dir, snapshots, suite, knobs } => {
            let cfg = build_run_config(config, left, right, gt, dir, snapshots, &suite, &knobs)?;
            execute(&cfg, out)
        }
        Command::Eval { pred, gt, json } => eval(&pred, &gt, json, out),
        Command::ProbeEntropy { pixels, left, right, scene, suite_mean, histogram, suite, knobs } => {
            probe_entropy(&pixels, left.zip(right), scene, suite_mean, histogram, &suite, &knobs, out)
        }
        Command::Gen { out: dir, format, suite } => gen(&dir, format, &suite, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).context("writing output")?;
    Ok(())
}

fn suite_runs(suite: &SuiteConfig, matcher: &MatcherConfig, sampler: &SamplerConfig) -> CliResult<Vec<SceneRun>> {
    let specs = default_suite(suite)?;
    let m = ClassicalMatcher::new(matcher.clone())?;
    Ok(evaluate_suite(&specs, &m, sampler)?)
}

fn demo(suite: &SuiteArgs, knobs: &Knobs, json: bool, out: &mut dyn Write) -> CliResult<()> {
    let suite = suite.apply(SuiteConfig::default());
    let matcher = knobs.suite_matcher(&suite)?;
    let sampler = knobs.sampler(SamplerConfig::default())?;
    let runs = suite_runs(&suite, &matcher, &sampler)?;
    let reports: Vec<_> = runs.into_iter().map(|r| r.report).collect();
    if json {
        let text = serde_json::to_string_pretty(&reports).context("serializing reports")?;
        emit(out, &format!("{text}\n"))
    } else {
        emit(out, &comparison_table(&reports)?)
    }
}

#[allow(clippy::too_many_arguments)]
fn build_run_config(
    config: Option<PathBuf>,
    left: Option<PathBuf>,
    right: Option<PathBuf>,
    gt: Option<PathBuf>,
    dir: Option<PathBuf>,
    snapshots: bool,
    suite: &SuiteArgs,
    knobs: &Knobs,
) -> CliResult<RunConfig> {
    let mut cfg = match &config {
        Some(path) => RunConfig::load(path).map_err(|e| match e {
            voldiff::Error::Io(io) => Failure::Data(anyhow!(io).context(format!("reading {}", path.display()))),
            other => Failure::Usage(format!("{}: {other}", path.display())),
        })?,
        None => {
            let suite_cfg = suite.apply(SuiteConfig::default());
            RunConfig {
                matcher: MatcherConfig { max_disparity: suite_cfg.max_disparity, ..MatcherConfig::default() },
                sampler: SamplerConfig::default(),
                input: InputSource::Suite(suite_cfg),
                output_dir: PathBuf::from("voldiff-run"),
                emit: EmitFlags::default(),
            }
        }
    };
    if let (Some(left), Some(right)) = (left, right) {
        if config.is_none() {
            cfg.matcher.max_disparity = MatcherConfig::default().max_disparity;
        }
        cfg.input = InputSource::Pair(PairInput { left, right, ground_truth: gt });
    } else if suite.any() {
        if let InputSource::Suite(s) = &cfg.input {
            cfg.input = InputSource::Suite(suite.apply(s.clone()));
        } else {
            return Err(Failure::Usage("suite flags given but the config reads an image pair".into()));
        }
    }
    if let Some(d) = dir {
        cfg.output_dir = d;
    }
    if snapshots {
        cfg.emit.snapshots = true;
    }
    cfg.matcher = knobs.matcher(cfg.matcher)?;
    cfg.sampler = knobs.sampler(cfg.sampler)?;
    Ok(cfg)
}

fn trace_table(sampler: &SamplerOutput) -> String {
    let mut s = String::from("step\tt\tmean_entropy\trenewed\n");
    for (k, t) in sampler.timesteps.iter().enumerate() {
        let _ = writeln!(s, "{}\t{t}\t{:.6}\t{}", k + 1, sampler.entropy_trace[k], sampler.outlier_counts[k]);
    }
    s
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_maps(dir: &Path, cfg: &RunConfig, baseline: &DisparityMap, disparity: &DisparityMap) -> CliResult<()> {
    if cfg.emit.disparity_image {
        let range = cfg.matcher.max_disparity as f64;
        write_disparity_pfm(dir.join("disparity.pfm"), disparity)?;
        write_disparity_pfm(dir.join("baseline.pfm"), baseline)?;
        write_disparity_png(dir.join("disparity.png"), disparity, range)?;
        write_disparity_png(dir.join("baseline.png"), baseline, range)?;
    }
    Ok(())
}

fn write_snapshots(dir: &Path, cfg: &RunConfig, sampler: &SamplerOutput) -> CliResult<()> {
    if cfg.emit.snapshots {
        for (k, p) in sampler.predictions.iter().enumerate() {
            write_disparity_pfm(dir.join(format!("step_{}.pfm", k + 1)), p)?;
        }
    }
    Ok(())
}

/// Executes a run configuration and writes its artifacts.
fn execute(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    cfg.prepare_output()?;
    let dir = &cfg.output_dir;
    write_text(&dir.join("config.json"), &cfg.to_json())?;
    let weights: Vec<String> = cfg.sampler.resolved_weights().iter().map(|w| w.to_string()).collect();
    emit(
        out,
        &format!(
            "steps={} eta={} seed={} weights={} renewal={}\n",
            cfg.sampler.steps,
            cfg.sampler.eta,
            cfg.sampler.seed,
            weights.join(","),
            if cfg.sampler.renewal.enabled { "on" } else { "off" }
        ),
    )?;
    match &cfg.input {
        InputSource::Suite(suite) => {
            let runs = suite_runs(suite, &cfg.matcher, &cfg.sampler)?;
            let reports: Vec<_> = runs.iter().map(|r| r.report.clone()).collect();
            let table = comparison_table(&reports)?;
            let mut traces = String::from("scene\tstep\tt\tmean_entropy\trenewed\n");
            for r in &runs {
                let sub = dir.join(format!("scene_{:02}", r.report.index));
                fs::create_dir_all(&sub).with_context(|| format!("creating {}", sub.display()))?;
                write_maps(&sub, cfg, &r.run.baseline, &r.run.disparity)?;
                write_snapshots(&sub, cfg, &r.run.sampler)?;
                for line in trace_table(&r.run.sampler).lines().skip(1) {
                    let _ = writeln!(traces, "{}\t{line}", r.report.index);
                }
            }
            if cfg.emit.entropy_trace {
                write_text(&dir.join("entropy_trace.tsv"), &traces)?;
            }
            if cfg.emit.metric_report {
                write_text(&dir.join("comparison.txt"), &table)?;
                let summary = SuiteSummary::from_reports(&reports)?;
                let json = serde_json::json!({ "summary": summary, "scenes": reports });
                write_text(&dir.join("metrics.json"), &serde_json::to_string_pretty(&json).context("serializing")?)?;
                write_text(&dir.join("metrics.txt"), &summary.diffusion.to_kv())?;
            }
            emit(out, &table)
        }
        InputSource::Pair(pair) => {
            let load = |p: &Path| read_intensity(p).with_context(|| format!("reading {}", p.display()));
            let images = ImagePair::new(load(&pair.left)?, load(&pair.right)?)?;
            let matcher = ClassicalMatcher::new(cfg.matcher.clone())?;
            let run = run_pair(&images, &matcher, &cfg.sampler)?;
            write_maps(dir, cfg, &run.baseline, &run.disparity)?;
            write_snapshots(dir, cfg, &run.sampler)?;
            let trace = trace_table(&run.sampler);
            if cfg.emit.entropy_trace {
                write_text(&dir.join("entropy_trace.tsv"), &trace)?;
            }
            emit(out, &trace)?;
            if let Some(gt_path) = &pair.ground_truth {
                let gt = read_disparity_pfm(gt_path).with_context(|| format!("reading {}", gt_path.display()))?;
                let base = MetricReport::against(&run.baseline, &gt)?;
                let diff = MetricReport::against(&run.disparity, &gt)?;
                if cfg.emit.metric_report {
                    write_text(&dir.join("metrics.txt"), &diff.to_kv())?;
                    let json = serde_json::json!({ "baseline": base, "diffusion": diff });
                    write_text(&dir.join("metrics.json"), &serde_json::to_string_pretty(&json).context("serializing")?)?;
                }
                emit(out, &format!("epe_baseline={:.6}\nepe_diffusion={:.6}\n", base.epe, diff.epe))?;
            }
            Ok(())
        }
    }
}

fn eval(pred: &Path, gt: &Path, json: bool, out: &mut dyn Write) -> CliResult<()> {
    let p = read_disparity_pfm(pred).with_context(|| format!("reading {}", pred.display()))?;
    let g = read_disparity_pfm(gt).with_context(|| format!("reading {}", gt.display()))?;
    let mask = ndarray::Zip::from(g.mask()).and(p.mask()).map_collect(|&a, &b| a && b);
    let report = MetricReport::compute(&p, &g, &mask).map_err(|e| Failure::Data(e.into()))?;
    emit(out, &if json { format!("{}\n", report.to_json()) } else { report.to_kv() })
}

#[allow(clippy::too_many_arguments)]
fn probe_entropy(
    pixels: &[(usize, usize)],
    pair: Option<(PathBuf, PathBuf)>,
    scene: usize,
    suite_mean: bool,
    histogram: bool,
    suite: &SuiteArgs,
    knobs: &Knobs,
    out: &mut dyn Write,
) -> CliResult<()> {
    let mut sampler = knobs.sampler(SamplerConfig::default())?;
    sampler.keep_snapshots = histogram;
    let suite_cfg = suite.apply(SuiteConfig::default());
    let (output, rows) = if suite_mean {
        let runs = suite_runs(&suite_cfg, &knobs.suite_matcher(&suite_cfg)?, &sampler)?;
        let maps = mean_entropy_maps(&runs)?;
        let mut output = runs[0].run.sampler.clone();
        output.entropy_maps = maps;
        let rows = entropy_at(&output, pixels)?;
        (output, rows)
    } else {
        let (images, matcher) = match pair {
            Some((l, r)) => {
                let load = |p: &Path| read_intensity(p).with_context(|| format!("reading {}", p.display()));
                (ImagePair::new(load(&l)?, load(&r)?)?, knobs.matcher(MatcherConfig::default())?)
            }
            None => {
                let specs = default_suite(&suite_cfg)?;
                let spec: &SceneSpec = specs
                    .get(scene)
                    .ok_or_else(|| Failure::Usage(format!("scene {scene} outside a suite of {}", specs.len())))?;
                (gen_stereogram(spec)?.0, knobs.suite_matcher(&suite_cfg)?)
            }
        };
        let run = run_pair(&images, &ClassicalMatcher::new(matcher)?, &sampler)?;
        let rows = entropy_at(&run.sampler, pixels).map_err(|e| Failure::Usage(e.to_string()))?;
        (run.sampler, rows)
    };
    let mut s = String::from("x\ty");
    for t in &output.timesteps {
        let _ = write!(s, "\tt{t}");
    }
    s.push_str("\tdecreasing\n");
    for (&(x, y), row) in pixels.iter().zip(&rows) {
        let _ = write!(s, "{x}\t{y}");
        for v in row {
            let _ = write!(s, "\t{v:.6}");
        }
        let dec = row.windows(2).all(|p| p[1] < p[0]);
        let _ = writeln!(s, "\t{dec}");
    }
    if histogram {
        // Snapshot k + 1 is the denoised filter of step k.
        let dists: Vec<_> = output.snapshots[1..].iter().map(filter_distribution).collect();
        for &(x, y) in pixels {
            for (k, d) in dists.iter().enumerate() {
                let col: Vec<String> = d.column(y, x).iter().map(|v| format!("{v:.4}")).collect();
                let _ = writeln!(s, "hist\t{x}\t{y}\tt{}\t{}", output.timesteps[k], col.join(" "));
            }
        }
    }
    emit(out, &s)
}

fn gen(dir: &Path, format: ImageFormat, suite: &SuiteArgs, out: &mut dyn Write) -> CliResult<()> {
    let suite = suite.apply(SuiteConfig::default());
    let specs = default_suite(&suite)?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (i, spec) in specs.iter().enumerate() {
        let (pair, gt) = gen_stereogram(spec)?;
        let ext = match format {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Png => "png",
        };
        for (name, img) in [("left", pair.left()), ("right", pair.right())] {
            let path = dir.join(format!("scene_{i:02}_{name}.{ext}"));
            match format {
                ImageFormat::Pgm => write_pgm(&path, img, 16)?,
                ImageFormat::Png => write_png_gray(&path, img, 16)?,
            }
        }
        write_disparity_pfm(dir.join(format!("scene_{i:02}_gt.pfm")), &gt)?;
    }
    let json = serde_json::json!({ "suite": suite, "scenes": specs });
    write_text(&dir.join("suite.json"), &serde_json::to_string_pretty(&json).context("serializing")?)?;
    emit(out, &format!("wrote {} scenes to {}\n", specs.len(), dir.display()))
}
