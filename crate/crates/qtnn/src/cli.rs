//! Command-line front end.
//!
//! Every data-producing subcommand resolves its options from defaults, an
//! optional `key=value` config file, and command-line flags (flags win),
//! then writes a manifest recording the fully resolved configuration and
//! the entropy provenance next to its outputs. `qtnn rerun --manifest <m>`
//! replays a manifest and reproduces the original outputs byte for byte;
//! runs that consumed a remote entropy service replay from the cache file
//! without touching the network.
//!
//! Exit codes: 0 success, 1 I/O, 2 usage, 3 entropy exhaustion,
//! 4 training divergence, 5 remote-entropy failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::experiment::{
    compare_activations, run_perception_experiment, ExperimentConfig, StimulusSource,
    COMPARISON_LABELS, DEFAULT_RUNS, DEFAULT_THRESHOLD,
};
use crate::network::{
    TrainConfig, DEFAULT_EPOCHS, DEFAULT_HIDDEN_LAYERS, DEFAULT_HIDDEN_NODES, DEFAULT_LEARNING_RATE,
};
use crate::rng::{
    fetch_remote_entropy, read_entropy_file, remote_source, QrngClient, RandomSource, QRNG_URL_ENV,
};
use crate::stimuli::{necker_set, rubin_set, save_stimulus, StimulusSet};
use crate::tunnelling::{barrier_curve, write_curve_csv, BarrierParams};

/// Map an error to the documented process exit code.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io(_) => 1,
        Error::Usage(_) | Error::Domain(_) | Error::Validation(_) | Error::Parse { .. } => 2,
        Error::EntropyExhausted(_) => 3,
        Error::Divergence(_) => 4,
        Error::EntropyUnavailable(_) | Error::Protocol(_) => 5,
    }
}

/// Parse arguments, run the selected command, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::BarrierCurve(args) => {
            let config = load_config(args.config.as_deref())?;
            let resolved = ResolvedCurve::resolve(&args.to_overrides(), &config)?;
            let out = args
                .out
                .unwrap_or_else(|| PathBuf::from(&resolved.out_name));
            cmd_barrier_curve(&resolved, &out)
        }
        Command::Perceive(args) => {
            let config = load_config(args.common.config.as_deref())?;
            let resolved = ResolvedExperiment::resolve(&args.common.to_overrides(), &config)?;
            cmd_perceive(&resolved, &args.common.out_dir)
        }
        Command::Compare(args) => {
            let config = load_config(args.common.config.as_deref())?;
            let resolved = ResolvedExperiment::resolve(&args.common.to_overrides(), &config)?;
            cmd_compare(&resolved, &args.common.out_dir)
        }
        Command::Stimuli(args) => {
            let resolved = ResolvedStimuli {
                set: args.set,
                format: args.format,
            };
            cmd_stimuli(&resolved, &args.out_dir)
        }
        Command::QrngFetch(args) => cmd_qrng_fetch(&args),
        Command::Rerun(args) => cmd_rerun(&args),
    }
}

#[derive(Parser)]
#[command(
    name = "qtnn",
    version,
    about = "Tunnelling-activation neural networks and bistable-perception experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the barrier transmission curve T(E/V0) as CSV.
    BarrierCurve(BarrierCurveArgs),
    /// Train-and-probe perception runs; writes the switching series.
    Perceive(PerceiveArgs),
    /// Run qt, relu and sigmoid off shared weights and compare via DTW.
    Compare(CompareArgs),
    /// Write the canonical stimulus rasters.
    Stimuli(StimuliArgs),
    /// Fetch words from a remote entropy service into a cache file.
    QrngFetch(QrngFetchArgs),
    /// Replay a command from its manifest, reproducing outputs exactly.
    Rerun(RerunArgs),
}

#[derive(Args)]
struct BarrierCurveArgs {
    /// Barrier height in natural units.
    #[arg(long)]
    v0: Option<f64>,
    /// Dimensionless barrier thickness.
    #[arg(long)]
    s: Option<f64>,
    /// Grid start, in units of E/V0.
    #[arg(long)]
    emin: Option<f64>,
    /// Grid end, in units of E/V0.
    #[arg(long)]
    emax: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    points: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl BarrierCurveArgs {
    fn to_overrides(&self) -> KeyValues {
        let mut kvs = KeyValues::default();
        kvs.set_opt("v0", self.v0);
        kvs.set_opt("s", self.s);
        kvs.set_opt("emin", self.emin);
        kvs.set_opt("emax", self.emax);
        kvs.set_opt("points", self.points);
        if let Some(out) = &self.out {
            if let Some(name) = out.file_name() {
                kvs.set("out", name.to_string_lossy());
            }
        }
        kvs
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// Stimulus set: necker or rubin (or give --class0/--class1/--ambiguous).
    #[arg(long)]
    illusion: Option<String>,
    /// Custom class-0 training stimulus (.pgm or .csv).
    #[arg(long)]
    class0: Option<PathBuf>,
    /// Custom class-1 training stimulus.
    #[arg(long)]
    class1: Option<PathBuf>,
    /// Custom ambiguous stimulus.
    #[arg(long)]
    ambiguous: Option<PathBuf>,
    /// Swap the class labels of the two training stimuli.
    #[arg(long)]
    swap_labels: bool,
    /// Hidden activation, e.g. qt:v0=1,s=0.5, relu, sigmoid.
    #[arg(long)]
    activation: Option<String>,
    /// Number of consecutive runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Training epochs per run.
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate of the per-sample update rule.
    #[arg(long)]
    rate: Option<f64>,
    /// Shuffle the training pair order each epoch.
    #[arg(long)]
    shuffle: bool,
    /// Classical-percept threshold on P(state 1).
    #[arg(long)]
    threshold: Option<f64>,
    /// Comma-separated hidden layer widths.
    #[arg(long)]
    hidden: Option<String>,
    /// Seed for the deterministic entropy source.
    #[arg(long)]
    seed: Option<u64>,
    /// Raw little-endian 16-bit entropy file.
    #[arg(long)]
    entropy_file: Option<PathBuf>,
    /// Remote entropy service endpoint (default from QTNN_QRNG_URL).
    #[arg(long)]
    qrng_url: Option<String>,
    /// Cache file for remote entropy words.
    #[arg(long)]
    qrng_cache: Option<PathBuf>,
    /// Entropy words reserved per run (defaults to the weight count,
    /// plus shuffle draws when enabled).
    #[arg(long)]
    block_size: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out_dir: PathBuf,
    /// key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ExperimentArgs {
    fn to_overrides(&self) -> KeyValues {
        let mut kvs = KeyValues::default();
        kvs.set_opt("illusion", self.illusion.clone());
        kvs.set_opt(
            "class0",
            self.class0.as_ref().map(|p| p.display().to_string()),
        );
        kvs.set_opt(
            "class1",
            self.class1.as_ref().map(|p| p.display().to_string()),
        );
        kvs.set_opt(
            "ambiguous",
            self.ambiguous.as_ref().map(|p| p.display().to_string()),
        );
        if self.swap_labels {
            kvs.set("swap-labels", "true");
        }
        kvs.set_opt("activation", self.activation.clone());
        kvs.set_opt("runs", self.runs);
        kvs.set_opt("epochs", self.epochs);
        kvs.set_opt("rate", self.rate);
        if self.shuffle {
            kvs.set("shuffle", "true");
        }
        kvs.set_opt("threshold", self.threshold);
        kvs.set_opt("hidden", self.hidden.clone());
        kvs.set_opt("seed", self.seed);
        kvs.set_opt(
            "entropy-file",
            self.entropy_file.as_ref().map(|p| p.display().to_string()),
        );
        kvs.set_opt("qrng-url", self.qrng_url.clone());
        kvs.set_opt(
            "qrng-cache",
            self.qrng_cache.as_ref().map(|p| p.display().to_string()),
        );
        kvs.set_opt("block-size", self.block_size);
        kvs
    }
}

#[derive(Args)]
struct PerceiveArgs {
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args)]
struct StimuliArgs {
    /// Stimulus set: necker or rubin.
    #[arg(long)]
    set: String,
    /// Output format: pgm or csv.
    #[arg(long, default_value = "pgm")]
    format: String,
    /// Output directory.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct QrngFetchArgs {
    /// Entropy service endpoint (default from QTNN_QRNG_URL).
    #[arg(long)]
    url: Option<String>,
    /// Number of 16-bit words to fetch.
    #[arg(long)]
    count: usize,
    /// Cache file the words are appended to.
    #[arg(long)]
    cache: PathBuf,
}

#[derive(Args)]
struct RerunArgs {
    /// Manifest written by a previous command.
    #[arg(long)]
    manifest: PathBuf,
    /// Where to write the reproduced outputs (defaults to the manifest's
    /// directory, overwriting the originals with identical bytes).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Ordered key=value map shared by config files and manifests.
#[derive(Debug, Default, Clone)]
struct KeyValues {
    map: BTreeMap<String, String>,
}

impl KeyValues {
    fn parse(text: &str) -> Result<Self> {
        let mut kvs = KeyValues::default();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                Error::parse(idx + 1, 1, format!("expected key=value, found '{trimmed}'"))
            })?;
            kvs.set(key.trim(), value.trim());
        }
        Ok(kvs)
    }

    fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.map.insert(key.into(), value.into());
    }

    fn set_opt<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.map.insert(key.to_string(), v.to_string());
        }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn parse_key<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
    {
        match self.get(key) {
            None => Ok(None),
            Some(text) => text
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Usage(format!("invalid value '{text}' for '{key}'"))),
        }
    }

    /// Flags first, then the config file.
    fn merged_under(&self, overrides: &KeyValues) -> KeyValues {
        let mut merged = self.clone();
        for (key, value) in &overrides.map {
            merged.map.insert(key.clone(), value.clone());
        }
        merged
    }
}

fn load_config(path: Option<&Path>) -> Result<KeyValues> {
    match path {
        Some(path) => KeyValues::from_file(path),
        None => Ok(KeyValues::default()),
    }
}

#[derive(Debug, Clone)]
struct ResolvedCurve {
    v0: f64,
    s: f64,
    emin: f64,
    emax: f64,
    points: usize,
    out_name: String,
}

impl ResolvedCurve {
    fn resolve(overrides: &KeyValues, config: &KeyValues) -> Result<Self> {
        let kvs = config.merged_under(overrides);
        Ok(Self {
            v0: kvs.parse_key("v0")?.unwrap_or(1.0),
            s: kvs.parse_key("s")?.unwrap_or(0.5),
            emin: kvs.parse_key("emin")?.unwrap_or(0.0),
            emax: kvs.parse_key("emax")?.unwrap_or(5.0),
            points: kvs.parse_key("points")?.unwrap_or(200),
            out_name: kvs.get("out").unwrap_or("curve.csv").to_string(),
        })
    }

    fn manifest(&self) -> String {
        let mut out = String::from("command=barrier-curve\n");
        out.push_str(&format!("v0={}\n", self.v0));
        out.push_str(&format!("s={}\n", self.s));
        out.push_str(&format!("emin={}\n", self.emin));
        out.push_str(&format!("emax={}\n", self.emax));
        out.push_str(&format!("points={}\n", self.points));
        out.push_str(&format!("out={}\n", self.out_name));
        out
    }
}

fn cmd_barrier_curve(resolved: &ResolvedCurve, out: &Path) -> Result<()> {
    let barrier = BarrierParams::new(resolved.v0, resolved.s)?;
    if resolved.points == 0 {
        return Err(Error::Usage("--points must be at least 1".into()));
    }
    if !(resolved.emin >= 0.0 && resolved.emax >= resolved.emin) {
        return Err(Error::Usage(format!(
            "energy range [{}, {}] is invalid",
            resolved.emin, resolved.emax
        )));
    }
    let grid: Vec<f64> = if resolved.points == 1 {
        vec![resolved.emin * resolved.v0]
    } else {
        let step = (resolved.emax - resolved.emin) / (resolved.points - 1) as f64;
        if step <= 0.0 {
            return Err(Error::Usage(
                "emax must exceed emin for multi-point grids".into(),
            ));
        }
        (0..resolved.points)
            .map(|k| (resolved.emin + step * k as f64) * resolved.v0)
            .collect()
    };
    let curve = barrier_curve(&barrier, &grid)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let file = std::fs::File::create(out)?;
    write_curve_csv(std::io::BufWriter::new(file), &curve)?;
    let manifest_path = manifest_sibling(out);
    std::fs::write(&manifest_path, resolved.manifest())?;
    println!(
        "wrote {} ({} points) and {}",
        out.display(),
        curve.len(),
        manifest_path.display()
    );
    Ok(())
}

fn manifest_sibling(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    out.with_file_name(name)
}

#[derive(Debug, Clone)]
enum ResolvedEntropy {
    Seed(u64),
    File {
        path: PathBuf,
        /// Endpoint the words originally came from, when the file is a
        /// remote-entropy cache. Provenance only; replay never fetches.
        fetched_from: Option<String>,
    },
    Qrng {
        url: String,
        cache: PathBuf,
    },
}

#[derive(Debug, Clone)]
struct ResolvedExperiment {
    illusion: String,
    class0: Option<PathBuf>,
    class1: Option<PathBuf>,
    ambiguous: Option<PathBuf>,
    swap_labels: bool,
    activation: ActivationKind,
    runs: usize,
    epochs: usize,
    rate: f64,
    shuffle: bool,
    threshold: f64,
    hidden: Vec<usize>,
    block_size: Option<usize>,
    entropy: ResolvedEntropy,
}

impl ResolvedExperiment {
    fn resolve(overrides: &KeyValues, config: &KeyValues) -> Result<Self> {
        let kvs = config.merged_under(overrides);

        let class0: Option<PathBuf> = kvs.get("class0").map(PathBuf::from);
        let class1: Option<PathBuf> = kvs.get("class1").map(PathBuf::from);
        let ambiguous: Option<PathBuf> = kvs.get("ambiguous").map(PathBuf::from);
        let custom_given = class0.is_some() || class1.is_some() || ambiguous.is_some();
        let illusion = match kvs.get("illusion") {
            Some(name) => name.to_ascii_lowercase(),
            None if custom_given => "custom".to_string(),
            None => {
                return Err(Error::Usage(
                    "choose a stimulus set with --illusion necker|rubin or custom paths".into(),
                ))
            }
        };
        match illusion.as_str() {
            "necker" | "rubin" => {}
            "custom" => {
                if class0.is_none() || class1.is_none() || ambiguous.is_none() {
                    return Err(Error::Usage(
                        "custom stimuli need --class0, --class1 and --ambiguous".into(),
                    ));
                }
            }
            other => {
                return Err(Error::Usage(format!(
                    "unknown illusion '{other}' (expected necker, rubin or custom)"
                )))
            }
        }

        let activation = match kvs.get("activation") {
            Some(text) => text.parse::<ActivationKind>()?,
            None => ActivationKind::qt_default(),
        };
        let hidden = match kvs.get("hidden") {
            Some(text) => text
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Usage(format!("invalid hidden layer width '{part}'")))
                })
                .collect::<Result<Vec<usize>>>()?,
            None => vec![DEFAULT_HIDDEN_NODES; DEFAULT_HIDDEN_LAYERS],
        };

        let seed: Option<u64> = kvs.parse_key("seed")?;
        let entropy_file: Option<PathBuf> = kvs.get("entropy-file").map(PathBuf::from);
        let qrng_url: Option<String> = kvs.get("qrng-url").map(str::to_string);
        let entropy = match (seed, entropy_file, qrng_url) {
            (Some(seed), None, None) => ResolvedEntropy::Seed(seed),
            // A cached remote run replays from its file; the recorded URL
            // is provenance only.
            (None, Some(path), fetched_from) => ResolvedEntropy::File { path, fetched_from },
            (None, None, Some(url)) => ResolvedEntropy::Qrng {
                url,
                cache: kvs
                    .get("qrng-cache")
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("qrng-cache.bin")),
            },
            (None, None, None) => match std::env::var(QRNG_URL_ENV) {
                Ok(url) if !url.trim().is_empty() => ResolvedEntropy::Qrng {
                    url: url.trim().to_string(),
                    cache: kvs
                        .get("qrng-cache")
                        .map(PathBuf::from)
                        .unwrap_or_else(|| PathBuf::from("qrng-cache.bin")),
                },
                _ => {
                    return Err(Error::Usage(format!(
                        "choose an entropy source: --seed, --entropy-file, or --qrng-url (or set {QRNG_URL_ENV})"
                    )))
                }
            },
            _ => {
                return Err(Error::Usage(
                    "entropy sources --seed, --entropy-file and --qrng-url are mutually exclusive"
                        .into(),
                ))
            }
        };

        let resolved = Self {
            illusion,
            class0,
            class1,
            ambiguous,
            swap_labels: kvs.parse_key("swap-labels")?.unwrap_or(false),
            activation,
            runs: kvs.parse_key("runs")?.unwrap_or(DEFAULT_RUNS),
            epochs: kvs.parse_key("epochs")?.unwrap_or(DEFAULT_EPOCHS),
            rate: kvs.parse_key("rate")?.unwrap_or(DEFAULT_LEARNING_RATE),
            shuffle: kvs.parse_key("shuffle")?.unwrap_or(false),
            threshold: kvs.parse_key("threshold")?.unwrap_or(DEFAULT_THRESHOLD),
            hidden,
            block_size: kvs.parse_key("block-size")?,
            entropy,
        };
        resolved.experiment_config()?.validate()?;
        Ok(resolved)
    }

    fn stimulus_source(&self) -> StimulusSource {
        match self.illusion.as_str() {
            "necker" => StimulusSource::Necker,
            "rubin" => StimulusSource::Rubin,
            _ => StimulusSource::Custom {
                class0: self.class0.clone().expect("validated"),
                class1: self.class1.clone().expect("validated"),
                ambiguous: self.ambiguous.clone().expect("validated"),
            },
        }
    }

    fn experiment_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(self.stimulus_source(), self.activation);
        cfg.swap_labels = self.swap_labels;
        cfg.runs = self.runs;
        cfg.train = TrainConfig {
            learning_rate: self.rate,
            epochs: self.epochs,
            shuffle: self.shuffle,
        };
        cfg.threshold = self.threshold;
        cfg.hidden_sizes = self.hidden.clone();
        Ok(cfg)
    }

    /// Words one run consumes: the weight draws, plus one shuffle draw per
    /// epoch when shuffling a two-sample set.
    fn resolved_block_size(&self, input_len: usize, cfg: &ExperimentConfig) -> usize {
        self.block_size.unwrap_or_else(|| {
            cfg.words_per_run(input_len) + if self.shuffle { self.epochs } else { 0 }
        })
    }

    /// Build the entropy source, fetching remote words into the cache when
    /// needed. Returns the source and the manifest lines describing it.
    fn build_entropy(&self, words_needed: usize, block: usize) -> Result<(RandomSource, String)> {
        match &self.entropy {
            ResolvedEntropy::Seed(seed) => {
                Ok((RandomSource::seeded(*seed), format!("seed={seed}\n")))
            }
            ResolvedEntropy::File { path, fetched_from } => {
                let source = RandomSource::from_entropy_file(path)?.with_block_size(block);
                let mut lines = format!("entropy-file={}\n", path.display());
                lines.push_str(&format!(
                    "entropy-sha256={}\n",
                    consumed_words_digest(path, words_needed)?
                ));
                if let Some(url) = fetched_from {
                    lines.push_str(&format!("qrng-url={url}\n"));
                }
                Ok((source, lines))
            }
            ResolvedEntropy::Qrng { url, cache } => {
                let client = QrngClient::new(url.clone());
                let source = remote_source(&client, cache, words_needed)?.with_block_size(block);
                let mut lines = format!("entropy-file={}\n", cache.display());
                lines.push_str(&format!(
                    "entropy-sha256={}\n",
                    consumed_words_digest(cache, words_needed)?
                ));
                lines.push_str(&format!("qrng-url={url}\n"));
                Ok((source, lines))
            }
        }
    }

    fn manifest(&self, command: &str, entropy_lines: &str, block: usize) -> String {
        let mut out = format!("command={command}\n");
        out.push_str(&format!("illusion={}\n", self.illusion));
        if let Some(path) = &self.class0 {
            out.push_str(&format!("class0={}\n", path.display()));
        }
        if let Some(path) = &self.class1 {
            out.push_str(&format!("class1={}\n", path.display()));
        }
        if let Some(path) = &self.ambiguous {
            out.push_str(&format!("ambiguous={}\n", path.display()));
        }
        out.push_str(&format!("swap-labels={}\n", self.swap_labels));
        out.push_str(&format!("activation={}\n", self.activation.config_name()));
        out.push_str(&format!("runs={}\n", self.runs));
        out.push_str(&format!("epochs={}\n", self.epochs));
        out.push_str(&format!("rate={}\n", self.rate));
        out.push_str(&format!("shuffle={}\n", self.shuffle));
        out.push_str(&format!("threshold={}\n", self.threshold));
        let hidden: Vec<String> = self.hidden.iter().map(|n| n.to_string()).collect();
        out.push_str(&format!("hidden={}\n", hidden.join(",")));
        out.push_str(&format!("block-size={block}\n"));
        out.push_str(entropy_lines);
        out
    }
}

/// Digest of the entropy words a run will consume (the file prefix), so a
/// manifest stays valid when later fetches append to the same cache.
fn consumed_words_digest(path: &Path, words: usize) -> Result<String> {
    use sha2::{Digest, Sha256};
    let all = read_entropy_file(path)?;
    let used = &all[..words.min(all.len())];
    let mut hasher = Sha256::new();
    for word in used {
        hasher.update(word.to_le_bytes());
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|byte| format!("{byte:02x}"))
        .collect())
}

fn verify_entropy_digest(kvs: &KeyValues, entropy: &ResolvedEntropy, words: usize) {
    let (Some(expected), ResolvedEntropy::File { path, .. }) = (kvs.get("entropy-sha256"), entropy)
    else {
        return;
    };
    match consumed_words_digest(path, words) {
        Ok(actual) if actual == expected => {}
        Ok(actual) => eprintln!(
            "warning: entropy file {} changed since the manifest was written \
             (digest {actual}, manifest says {expected})",
            path.display()
        ),
        Err(err) => eprintln!("warning: could not digest {}: {err}", path.display()),
    }
}

fn cmd_perceive(resolved: &ResolvedExperiment, out_dir: &Path) -> Result<()> {
    let cfg = resolved.experiment_config()?;
    let set = cfg.stimuli.load()?;
    let input_len = set.class0.pixels().len();
    let block = resolved.resolved_block_size(input_len, &cfg);
    let (entropy, entropy_lines) = resolved.build_entropy(resolved.runs * block, block)?;

    let series = run_perception_experiment(&cfg, &entropy)?;

    std::fs::create_dir_all(out_dir)?;
    let series_path = out_dir.join("series.csv");
    let file = std::fs::File::create(&series_path)?;
    series.write_csv(std::io::BufWriter::new(file))?;
    std::fs::write(
        out_dir.join("manifest.txt"),
        resolved.manifest("perceive", &entropy_lines, block),
    )?;
    println!(
        "wrote {} ({} runs, {} switches in the classical percept)",
        series_path.display(),
        series.records.len(),
        series
            .classical_percepts()
            .windows(2)
            .filter(|pair| pair[0] != pair[1])
            .count()
    );
    Ok(())
}

fn cmd_compare(resolved: &ResolvedExperiment, out_dir: &Path) -> Result<()> {
    let cfg = resolved.experiment_config()?;
    let set = cfg.stimuli.load()?;
    let input_len = set.class0.pixels().len();
    let block = resolved.resolved_block_size(input_len, &cfg);
    let (entropy, entropy_lines) = resolved.build_entropy(resolved.runs * block, block)?;

    let comparison = compare_activations(&cfg, &entropy)?;

    std::fs::create_dir_all(out_dir)?;
    for (label, series) in COMPARISON_LABELS.iter().zip(&comparison.series) {
        let path = out_dir.join(format!("{label}.csv"));
        let file = std::fs::File::create(&path)?;
        series.write_csv(std::io::BufWriter::new(file))?;
    }
    let matrix_path = out_dir.join("dtw_matrix.csv");
    let file = std::fs::File::create(&matrix_path)?;
    comparison.write_dtw_csv(std::io::BufWriter::new(file))?;
    std::fs::write(
        out_dir.join("manifest.txt"),
        resolved.manifest("compare", &entropy_lines, block),
    )?;
    println!(
        "wrote {} and per-activation series ({} runs each)",
        matrix_path.display(),
        resolved.runs
    );
    Ok(())
}

#[derive(Debug, Clone)]
struct ResolvedStimuli {
    set: String,
    format: String,
}

impl ResolvedStimuli {
    fn manifest(&self) -> String {
        format!(
            "command=stimuli\nset={}\nformat={}\n",
            self.set, self.format
        )
    }
}

fn cmd_stimuli(resolved: &ResolvedStimuli, out_dir: &Path) -> Result<()> {
    let (set, names): (StimulusSet, [&str; 3]) = match resolved.set.as_str() {
        "necker" => (
            necker_set(),
            [
                "necker_front_shaded",
                "necker_rear_shaded",
                "necker_ambiguous",
            ],
        ),
        "rubin" => (
            rubin_set(),
            ["rubin_faces_shaded", "rubin_vase_shaded", "rubin_contour"],
        ),
        other => {
            return Err(Error::Usage(format!(
                "unknown stimulus set '{other}' (expected necker or rubin)"
            )))
        }
    };
    let extension = match resolved.format.as_str() {
        "pgm" => "pgm",
        "csv" => "csv",
        other => {
            return Err(Error::Usage(format!(
                "unknown stimulus format '{other}' (expected pgm or csv)"
            )))
        }
    };
    std::fs::create_dir_all(out_dir)?;
    for (stimulus, name) in [&set.class0, &set.class1, &set.ambiguous]
        .into_iter()
        .zip(names)
    {
        save_stimulus(stimulus, &out_dir.join(format!("{name}.{extension}")))?;
    }
    std::fs::write(out_dir.join("manifest.txt"), resolved.manifest())?;
    println!("wrote 3 {} stimuli to {}", resolved.set, out_dir.display());
    Ok(())
}

fn cmd_qrng_fetch(args: &QrngFetchArgs) -> Result<()> {
    let url = match &args.url {
        Some(url) => url.clone(),
        None => std::env::var(QRNG_URL_ENV)
            .ok()
            .filter(|u| !u.trim().is_empty())
            .ok_or_else(|| Error::Usage(format!("give --url or set {QRNG_URL_ENV}")))?,
    };
    if args.count == 0 {
        return Err(Error::Usage("--count must be at least 1".into()));
    }
    let client = QrngClient::new(url.clone());
    let outcome = fetch_remote_entropy(&client, args.count, &args.cache)?;
    let manifest = format!(
        "command=qrng-fetch\nurl={url}\ncount={}\ncache={}\nfetched={}\ncached-total={}\n",
        args.count,
        args.cache.display(),
        outcome.fetched,
        outcome.cached_total,
    );
    std::fs::write(manifest_sibling(&args.cache), manifest)?;
    if outcome.used_cache_fallback {
        println!(
            "service unavailable; using cache {} ({} words)",
            args.cache.display(),
            outcome.cached_total
        );
    } else {
        println!(
            "fetched {} words (cache {} now holds {})",
            outcome.fetched,
            args.cache.display(),
            outcome.cached_total
        );
    }
    Ok(())
}

fn cmd_rerun(args: &RerunArgs) -> Result<()> {
    let kvs = KeyValues::from_file(&args.manifest)?;
    let command = kvs
        .get("command")
        .ok_or_else(|| Error::Validation("manifest is missing the command key".into()))?
        .to_string();
    let base_dir = args
        .out_dir
        .clone()
        .or_else(|| args.manifest.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let empty = KeyValues::default();
    match command.as_str() {
        "barrier-curve" => {
            let resolved = ResolvedCurve::resolve(&empty, &kvs)?;
            let out = base_dir.join(&resolved.out_name);
            cmd_barrier_curve(&resolved, &out)
        }
        "perceive" | "compare" => {
            let resolved = ResolvedExperiment::resolve(&empty, &kvs)?;
            let cfg = resolved.experiment_config()?;
            let set = cfg.stimuli.load()?;
            let block = resolved.resolved_block_size(set.class0.pixels().len(), &cfg);
            verify_entropy_digest(&kvs, &resolved.entropy, resolved.runs * block);
            if command == "perceive" {
                cmd_perceive(&resolved, &base_dir)
            } else {
                cmd_compare(&resolved, &base_dir)
            }
        }
        "stimuli" => {
            let resolved = ResolvedStimuli {
                set: kvs
                    .get("set")
                    .ok_or_else(|| Error::Validation("manifest is missing 'set'".into()))?
                    .to_string(),
                format: kvs.get("format").unwrap_or("pgm").to_string(),
            };
            cmd_stimuli(&resolved, &base_dir)
        }
        "qrng-fetch" => Err(Error::Usage(
            "a qrng-fetch draws fresh entropy and cannot be reproduced; \
             replay the consuming run instead (its manifest points at the cache)"
                .into(),
        )),
        other => Err(Error::Validation(format!(
            "manifest names unknown command '{other}'"
        ))),
    }
}
