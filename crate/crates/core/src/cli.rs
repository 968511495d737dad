//! The `macpolar` command line tool.
//!
//! Every option may be given as a flag or in a TOML file passed with
//! `--config`; flags override the file. The resolved configuration is written
//! next to the outputs as `config.toml`.

use crate::codec::scheme::{CodeArtifact, SchemeParams};
use crate::codec::ConstructParams;
use crate::error::{Error, Result};
use crate::metrics::{info_triple, region_vertices, Extremal, InfoTriple};
use crate::polarizer::polarization_stats;
use crate::registry::{ChannelParams, EstimatorParams, Registry};
use crate::transform::DEFAULT_OUTPUT_CAP;
use crate::Mac;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "macpolar",
    version,
    about = "Polar codes for the two-user multiple-access channel"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep all synthesized channels at a given depth.
    Polarize(Options),
    /// Construct a code and write it as JSON.
    Construct(Options),
    /// Simulate a code (from --code, or constructed on the fly).
    Simulate(Options),
    /// Export rate-region vertices of the channel and the extremal regions.
    Region(Options),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Options shared by all subcommands. Every field is optional so that the
/// same struct can be read from a config file and merged.
#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// TOML file with any of the options below.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Builtin channel: adder, perfect, useless, contention, user1-perfect, user2-perfect, file.
    #[arg(long)]
    pub channel: Option<String>,
    /// Channel-spec JSON file (implies --channel file).
    #[arg(long)]
    pub channel_file: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<usize>,
    /// Off-target output probability of the adder channel.
    #[arg(long)]
    pub flip: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Reliability estimator: exact, mc or auto.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Coding scheme: joint or corner.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Code file written by `construct`.
    #[arg(long)]
    pub code: Option<PathBuf>,
    /// Error-probability threshold for Monte Carlo construction.
    #[arg(long)]
    pub pe_threshold: Option<f64>,
    /// Bhattacharyya threshold for the corner scheme.
    #[arg(long)]
    pub z_threshold: Option<f64>,
    /// Output alphabet cap for exact synthesis.
    #[arg(long)]
    pub max_outputs: Option<usize>,
    /// Simulation trials (defaults to --trials).
    #[arg(long)]
    pub sim_trials: Option<u64>,
}

/// Options with defaults applied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub channel: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_file: Option<PathBuf>,
    pub q: usize,
    pub flip: f64,
    pub depth: usize,
    pub mode: String,
    pub trials: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub lambda: f64,
    #[serde(skip)]
    pub out: PathBuf,
    pub format: Format,
    pub scheme: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<PathBuf>,
    pub pe_threshold: f64,
    pub z_threshold: f64,
    pub max_outputs: usize,
    pub sim_trials: u64,
    /// Worker threads; not recorded since outputs do not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        Options { config: None, $($f: $a.$f.clone().or_else(|| $b.$f.clone())),* }
    };
}

impl Options {
    /// Merge with the config file, if any; flags win.
    pub fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                toml::from_str::<Options>(&text)
                    .map_err(|e| Error::validation(format!("config {}: {e}", path.display())))?
            }
            None => Options::default(),
        };
        let m = merge_fields!(self, file; channel, channel_file, q, flip, depth, mode, trials, seed, epsilon,
            delta, lambda, out, format, threads, scheme, code, pe_threshold, z_threshold, max_outputs, sim_trials);
        let channel = match (&m.channel, &m.channel_file) {
            (Some(c), _) => c.clone(),
            (None, Some(_)) => "file".into(),
            (None, None) => "adder".into(),
        };
        let trials = m.trials.unwrap_or(1000);
        let cfg = RunConfig {
            channel,
            channel_file: m.channel_file,
            q: m.q.unwrap_or(2),
            flip: m.flip.unwrap_or(0.0),
            depth: m.depth.unwrap_or(4),
            mode: m.mode.unwrap_or_else(|| "exact".into()),
            trials,
            seed: m.seed.unwrap_or(0),
            epsilon: m.epsilon.unwrap_or(0.1),
            delta: m.delta.unwrap_or(0.1),
            lambda: m.lambda.unwrap_or(0.5),
            out: m.out.unwrap_or_else(|| PathBuf::from(".")),
            format: m.format.unwrap_or(Format::Csv),
            scheme: m.scheme.unwrap_or_else(|| "joint".into()),
            code: m.code,
            pe_threshold: m
                .pe_threshold
                .unwrap_or(crate::codec::construct::DEFAULT_PE_THRESHOLD),
            z_threshold: m
                .z_threshold
                .unwrap_or(crate::codec::corner::DEFAULT_Z_THRESHOLD),
            max_outputs: m.max_outputs.unwrap_or(DEFAULT_OUTPUT_CAP),
            sim_trials: m.sim_trials.unwrap_or(trials),
            threads: m.threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.sim_trials == 0 {
            return Err(Error::validation("trials must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::validation(format!(
                "epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::validation(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::validation(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::validation("threads must be at least 1"));
        }
        if self.max_outputs == 0 {
            return Err(Error::validation("max-outputs must be at least 1"));
        }
        if self.depth > 24 {
            return Err(Error::validation(format!(
                "depth {} is too large",
                self.depth
            )));
        }
        Ok(())
    }

    fn mac(&self, registry: &Registry) -> Result<Mac> {
        let params = ChannelParams {
            q: self.q,
            flip: self.flip,
            file: self.channel_file.clone(),
        };
        registry.channel(&self.channel, &params)
    }

    fn estimator_params(&self) -> EstimatorParams {
        EstimatorParams {
            trials: self.trials,
            seed: self.seed,
            max_outputs: self.max_outputs,
        }
    }

    fn scheme_params(&self) -> SchemeParams {
        SchemeParams {
            construct: ConstructParams {
                epsilon: self.epsilon,
                lambda: self.lambda,
                seed: self.seed,
                pe_threshold: self.pe_threshold,
            },
            z_threshold: self.z_threshold,
        }
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CapacityExceeded { .. } => 3,
        Error::Io(_) => 4,
        _ => 2,
    }
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn prepare(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    let text = toml::to_string(cfg).map_err(|e| Error::validation(e.to_string()))?;
    write(&cfg.out, "config.toml", text.as_bytes())
}

#[derive(Serialize)]
struct PolarizeSummary<'a> {
    q: usize,
    depth: usize,
    mode: crate::polarizer::Mode,
    channel_triple: InfoTriple,
    #[serde(flatten)]
    stats: &'a crate::polarizer::PolarizationSummary,
}

fn polarize(cfg: &RunConfig, registry: &Registry) -> Result<()> {
    let mac = cfg.mac(registry)?;
    let est = registry.estimator(&cfg.mode, &cfg.estimator_params())?;
    let report = est.mac_report(&mac, cfg.depth)?;
    prepare(cfg)?;
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(cfg.epsilon, &mut buf)?;
            write(&cfg.out, "polarization.csv", &buf)?;
        }
        Format::Json => write(&cfg.out, "polarization.json", &json(&report)?)?,
    }
    let stats = polarization_stats(&report, cfg.delta);
    let summary = PolarizeSummary {
        q: report.q,
        depth: report.depth,
        mode: report.mode,
        channel_triple: report.channel_triple,
        stats: &stats,
    };
    write(&cfg.out, "summary.json", &json(&summary)?)?;
    println!(
        "n={} mode={:?} unpolarized_fraction(delta={})={} mean_i12={}",
        report.n(),
        report.mode,
        cfg.delta,
        stats.unpolarized_fraction,
        stats.mean_i12
    );
    Ok(())
}

fn build_code(cfg: &RunConfig, registry: &Registry, mac: &Mac) -> Result<CodeArtifact> {
    let scheme = registry.scheme(&cfg.scheme)?;
    let est = registry.estimator(&cfg.mode, &cfg.estimator_params())?;
    scheme.construct(mac, cfg.depth, est.as_ref(), &cfg.scheme_params())
}

fn construct(cfg: &RunConfig, registry: &Registry) -> Result<()> {
    let mac = cfg.mac(registry)?;
    let code = build_code(cfg, registry, &mac)?;
    prepare(cfg)?;
    let mut text = code.to_json()?;
    text.push('\n');
    write(&cfg.out, "code.json", text.as_bytes())?;
    let (r1, r2) = code.rates();
    println!(
        "scheme={} rate_u={} rate_v={} sum_rate={}",
        code.scheme(),
        r1,
        r2,
        r1 + r2
    );
    Ok(())
}

fn simulate(cfg: &RunConfig, registry: &Registry) -> Result<()> {
    let mac = cfg.mac(registry)?;
    let code = match &cfg.code {
        Some(path) => CodeArtifact::from_json(&fs::read_to_string(path)?)?,
        None => build_code(cfg, registry, &mac)?,
    };
    if code.q() != mac.q() {
        return Err(Error::validation(format!(
            "code is over GF({}) but channel over GF({})",
            code.q(),
            mac.q()
        )));
    }
    let report = registry
        .scheme(code.scheme())?
        .simulate(&code, &mac, cfg.sim_trials, cfg.seed)?;
    prepare(cfg)?;
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            write(&cfg.out, "simulation.csv", &buf)?;
        }
        Format::Json => write(&cfg.out, "simulation.json", &json(&report)?)?,
    }
    println!(
        "scheme={} trials={} block_errors={} bler={} wilson=[{}, {}] union_bound={}",
        report.scheme,
        report.trials,
        report.block_errors,
        report.bler.estimate,
        report.bler.lower,
        report.bler.upper,
        report.union_bound
    );
    Ok(())
}

#[derive(Serialize)]
struct RegionRecord {
    region: String,
    triple: InfoTriple,
    vertices: Vec<(f64, f64)>,
}

fn region(cfg: &RunConfig, registry: &Registry) -> Result<()> {
    let mac = cfg.mac(registry)?;
    let mut records = Vec::new();
    let t = info_triple(&mac);
    records.push(RegionRecord {
        region: "channel".into(),
        triple: t,
        vertices: region_vertices(&t)?,
    });
    for e in Extremal::ALL {
        let t = e.point();
        records.push(RegionRecord {
            region: e.name().into(),
            triple: t,
            vertices: region_vertices(&t)?,
        });
    }
    prepare(cfg)?;
    match cfg.format {
        Format::Csv => {
            let mut s = String::from("region,vertex,r1,r2\n");
            for r in &records {
                for (k, (a, b)) in r.vertices.iter().enumerate() {
                    s.push_str(&format!("{},{},{},{}\n", r.region, k, a, b));
                }
            }
            write(&cfg.out, "region.csv", s.as_bytes())?;
        }
        Format::Json => write(&cfg.out, "region.json", &json(&records)?)?,
    }
    println!(
        "i1={} i2={} i12={} vertices={:?}",
        t.i1, t.i2, t.i12, records[0].vertices
    );
    Ok(())
}

pub fn execute(command: &Command) -> Result<()> {
    let (opts, run): (&Options, fn(&RunConfig, &Registry) -> Result<()>) = match command {
        Command::Polarize(o) => (o, polarize),
        Command::Construct(o) => (o, construct),
        Command::Simulate(o) => (o, simulate),
        Command::Region(o) => (o, region),
    };
    let cfg = opts.resolve()?;
    let registry = Registry::builtin();
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::validation(e.to_string()))?
            .install(|| run(&cfg, &registry)),
        None => run(&cfg, &registry),
    }
}

/// Parse arguments, run, and return the process exit status.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
