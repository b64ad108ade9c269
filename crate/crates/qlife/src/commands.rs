//! CLI command implementations: argument parsing, config resolution,
//! orchestration of runs and sweeps, and all file output. Every command is
//! deterministic given its config and seed; reruns produce byte-identical
//! data files, and each command writes a `manifest.json` listing every
//! output with its SHA-256 checksum.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::FlatConfig;
use crate::engine::{self, detect_cycle, CycleReport, RuleParams, RuleReading, RunConfig};
use crate::lattice::{
    random_state, seeded_rng, BinaryState, LatticeSpec, NeighborhoodTable,
};
use crate::propagator::{HamiltonianEig, SingleParticleHamiltonian};
use crate::{blob, fock, formats, spectral, study};
use crate::{Error, Result};

/// Simulator and analysis toolkit for Hamiltonian-transient Game of Life
/// dynamics.
#[derive(Parser)]
#[command(
    name = "qlife",
    version,
    about = "Hamiltonian-transient Game of Life: runs, parameter sweeps, spectra, blob statistics, and the exhaustive 5x5 census",
    after_help = "Config files are flat `key = value` lines; `#` starts a comment.\n\
        Each subcommand's --help lists its supported keys. Cell values are\n\
        written as PBM (P1) frames and hex-encoded CSV columns; all floats\n\
        print with 17 significant digits."
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parallel sections (default: available cores).
    /// Results never depend on the worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides the config's `rule_reading`: which density decides a
    /// cell's own alive/dead branch of the rule.
    #[arg(long = "rule-reading", global = true, value_parser = RuleReading::parse)]
    rule_reading: Option<RuleReading>,
}

#[derive(Subcommand)]
enum Command {
    /// One generation-loop run: trace CSV, optional PBM frames, manifest.
    ///
    /// Config keys: L (required), tau (0), sigma (0), generations (4096),
    /// seed (0), rule_reading (evolved), frames (false), initial_hex
    /// (random from seed when absent).
    Run,

    /// Quantum-vs-classical difference surface over a (tau, sigma) grid.
    ///
    /// Config keys: L (required), tau_grid and sigma_grid (required,
    /// comma-separated), ensemble (100), seed (0), rule_reading (evolved).
    Sweep,

    /// Fourier power spectrum of the alive-cell series plus a power-law fit.
    ///
    /// Config keys: L (required), tau (0), sigma (0), generations (4096),
    /// seed (0), rule_reading (evolved), fit_lo (1), fit_hi (min(2000, T/2)).
    Spectrum,

    /// Connected-component statistics per frame, centroid histogram.
    ///
    /// Config keys: either input (path of one PBM frame) or the `run` keys
    /// L, tau, sigma, generations, seed, rule_reading.
    Blobs,

    /// Exhaustive 5x5 classical census (wraparound neighborhoods): census
    /// and transient CSVs, binary catalog; optionally the sampled
    /// quantum-vs-classical comparison surfaces.
    ///
    /// Config keys (all optional): samples (100000), seed (0), budget
    /// (1024), rule_reading (evolved), catalog (false; true also writes
    /// the full 256 MiB per-state catalog), tau_grid, sigma_grid (both
    /// required for the comparison surfaces).
    Enumerate5,

    /// Cross-checks the lattice-propagator pipeline against exact
    /// full-state-space evolution on small systems and prints the largest
    /// density residual.
    VerifyOracle,
}

/// Runs an already-parsed invocation. `main` owns argument parsing so that
/// clap's help and usage output keep their own exit conventions.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(workers) = cli.common.workers {
        if workers == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool setup failed: {e}")))?;
    }
    match cli.command {
        Command::Run => cmd_run(&cli.common),
        Command::Sweep => cmd_sweep(&cli.common),
        Command::Spectrum => cmd_spectrum(&cli.common),
        Command::Blobs => cmd_blobs(&cli.common),
        Command::Enumerate5 => cmd_enumerate5(&cli.common),
        Command::VerifyOracle => cmd_verify_oracle(&cli.common),
    }
}

fn load_config(common: &CommonArgs) -> Result<FlatConfig> {
    match &common.config {
        Some(path) => FlatConfig::from_file(path),
        None => Ok(FlatConfig::default()),
    }
}

fn require_config(common: &CommonArgs) -> Result<FlatConfig> {
    match &common.config {
        Some(path) => FlatConfig::from_file(path),
        None => Err(Error::Config(
            "this command needs --config pointing at a key=value file".into(),
        )),
    }
}

/// Run parameters shared by `run`, `spectrum`, and trace-driven `blobs`.
struct ResolvedRun {
    spec: LatticeSpec,
    tau: f64,
    rule: RuleParams,
    generations: usize,
    seed: u64,
    initial: BinaryState,
}

/// Keys consumed by [`ResolvedRun::from_config`].
const RUN_BASE_KEYS: [&str; 7] = [
    "L",
    "tau",
    "sigma",
    "generations",
    "seed",
    "rule_reading",
    "initial_hex",
];

impl ResolvedRun {
    fn from_config(config: &FlatConfig, common: &CommonArgs) -> Result<Self> {
        let side: usize = config.require_parsed("L")?;
        let spec = LatticeSpec::new(side)?;
        let tau: f64 = config.parsed_or("tau", 0.0)?;
        let sigma: f64 = config.parsed_or("sigma", 0.0)?;
        let generations: usize = config.parsed_or("generations", 4096)?;
        let seed = resolve_seed(config, common)?;
        let reading = resolve_reading(config, common)?;
        let rule = RuleParams::new(sigma)?.with_reading(reading);
        let initial = match config.get("initial_hex") {
            Some(hex) => formats::hex_to_state(hex, spec.cell_count())?,
            None => random_state(&spec, seed),
        };
        Ok(ResolvedRun {
            spec,
            tau,
            rule,
            generations,
            seed,
            initial,
        })
    }

    fn trace(&self) -> Result<engine::GenerationTrace> {
        let table = NeighborhoodTable::moore(&self.spec);
        let eig = HamiltonianEig::new(&SingleParticleHamiltonian::from_table(&table))?;
        let transfer = eig.transfer_matrix(self.tau);
        let config = RunConfig {
            spec: self.spec.clone(),
            tau: self.tau,
            rule: self.rule,
            generations: self.generations,
            seed: self.seed,
        };
        engine::run(&config, &transfer, &self.initial)
    }

    fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "L": self.spec.side(),
            "tau": self.tau,
            "sigma": self.rule.sigma,
            "rule_reading": self.rule.reading.name(),
            "generations": self.generations,
            "seed": self.seed,
            "initial_hex": formats::state_to_hex(&self.initial),
        })
    }
}

fn resolve_seed(config: &FlatConfig, common: &CommonArgs) -> Result<u64> {
    match common.seed {
        Some(seed) => Ok(seed),
        None => config.parsed_or("seed", 0),
    }
}

fn resolve_reading(config: &FlatConfig, common: &CommonArgs) -> Result<RuleReading> {
    if let Some(reading) = common.rule_reading {
        return Ok(reading);
    }
    match config.get("rule_reading") {
        Some(name) => RuleReading::parse(name),
        None => Ok(RuleReading::Evolved),
    }
}

/// Collects output files and writes the closing manifest.
struct ManifestBuilder {
    command: &'static str,
    out_dir: PathBuf,
    config: serde_json::Value,
    outputs: Vec<(String, String)>,
    notes: Vec<String>,
    cycle: Option<CycleReport>,
    started: Instant,
}

impl ManifestBuilder {
    fn new(command: &'static str, out_dir: &Path, config: serde_json::Value) -> Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(ManifestBuilder {
            command,
            out_dir: out_dir.to_path_buf(),
            config,
            outputs: Vec::new(),
            notes: Vec::new(),
            cycle: None,
            started: Instant::now(),
        })
    }

    /// Writes one output file through `fill` and records its checksum.
    fn emit(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
    ) -> Result<()> {
        let path = self.out_dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut writer = BufWriter::new(File::create(&path)?);
        fill(&mut writer)?;
        writer.flush()?;
        drop(writer);
        let checksum = formats::sha256_file(&path)?;
        self.outputs.push((name.to_string(), checksum));
        Ok(())
    }

    fn note(&mut self, text: String) {
        self.notes.push(text);
    }

    fn cycle(&mut self, report: CycleReport) {
        self.cycle = Some(report);
    }

    fn finish(self) -> Result<()> {
        let cycle = self.cycle.map(|c| {
            serde_json::json!({
                "detected": c.detected,
                "transient": c.transient,
                "period": c.period,
            })
        });
        let manifest = serde_json::json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "wall_clock_seconds": self.started.elapsed().as_secs_f64(),
            "cycle": cycle,
            "notes": self.notes,
            "outputs": self
                .outputs
                .iter()
                .map(|(name, sha256)| serde_json::json!({ "path": name, "sha256": sha256 }))
                .collect::<Vec<_>>(),
        });
        let path = self.out_dir.join("manifest.json");
        let mut writer = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut writer, &manifest)
            .map_err(|e| Error::Format(format!("manifest serialization failed: {e}")))?;
        writeln!(writer)?;
        writer.flush()?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn cmd_run(common: &CommonArgs) -> Result<()> {
    let config = require_config(common)?;
    let mut keys = RUN_BASE_KEYS.to_vec();
    keys.push("frames");
    config.check_known(&keys)?;
    let resolved = ResolvedRun::from_config(&config, common)?;
    let write_frames: bool = config.parsed_or("frames", false)?;
    let mut manifest = ManifestBuilder::new("run", &common.out, resolved.echo())?;

    let trace = resolved.trace()?;
    let report = detect_cycle(trace.states().iter().cloned(), trace.generations());
    manifest.cycle(report);
    manifest.emit("trace.csv", |w| formats::write_trace_csv(&trace, w))?;
    if write_frames {
        let side = resolved.spec.side();
        for (k, state) in trace.states().iter().enumerate() {
            manifest.emit(&format!("frames/gen_{k:05}.pbm"), |w| {
                formats::write_pbm(state, side, w)
            })?;
        }
    }
    manifest.finish()
}

fn cmd_sweep(common: &CommonArgs) -> Result<()> {
    let config = require_config(common)?;
    config.check_known(&[
        "L",
        "tau_grid",
        "sigma_grid",
        "ensemble",
        "seed",
        "rule_reading",
    ])?;
    let side: usize = config.require_parsed("L")?;
    let spec = LatticeSpec::new(side)?;
    let tau_grid = config.require_float_list("tau_grid")?;
    let sigma_grid = config.require_float_list("sigma_grid")?;
    let ensemble: usize = config.parsed_or("ensemble", 100)?;
    let seed = resolve_seed(&config, common)?;
    let reading = resolve_reading(&config, common)?;

    let echo = serde_json::json!({
        "L": side,
        "tau_grid": tau_grid,
        "sigma_grid": sigma_grid,
        "ensemble": ensemble,
        "seed": seed,
        "rule_reading": reading.name(),
    });
    let mut manifest = ManifestBuilder::new("sweep", &common.out, echo)?;
    println!(
        "sweeping {} x {} grid points, {} initial conditions each",
        tau_grid.len(),
        sigma_grid.len(),
        ensemble
    );

    let surface = spectral::delta_surface(&spec, &tau_grid, &sigma_grid, ensemble, seed, reading)?;
    let curve = spectral::sigma_min_curve(&surface);
    manifest.emit("delta_surface.csv", |w| {
        formats::write_delta_surface_csv(&surface, w)
    })?;
    manifest.emit("sigma_min.csv", |w| formats::write_sigma_min_csv(&curve, w))?;
    if curve.len() >= 4 {
        let (a, b, c) = spectral::piecewise_slopes(&curve, (0.1, 0.4));
        manifest.note(format!(
            "sigma_min(tau) piecewise slopes with breaks at tau=0.1 and tau=0.4: \
             {a:.4} / {b:.4} / {c:.4}"
        ));
    }
    manifest.finish()
}

fn cmd_spectrum(common: &CommonArgs) -> Result<()> {
    let config = require_config(common)?;
    let mut keys = RUN_BASE_KEYS.to_vec();
    keys.extend(["fit_lo", "fit_hi"]);
    config.check_known(&keys)?;
    let resolved = ResolvedRun::from_config(&config, common)?;
    let fit_lo: usize = config.parsed_or("fit_lo", 1)?;
    let default_hi = (resolved.generations / 2).min(2000).max(fit_lo + 1);
    let fit_hi: usize = config.parsed_or("fit_hi", default_hi)?;

    let mut manifest = ManifestBuilder::new("spectrum", &common.out, resolved.echo())?;
    let trace = resolved.trace()?;
    let report = detect_cycle(trace.states().iter().cloned(), trace.generations());
    manifest.cycle(report);

    let spectrum = spectral::power_spectrum(&trace)?;
    manifest.emit("spectrum.csv", |w| formats::write_spectrum_csv(&spectrum, w))?;
    if let Some(peak) = spectrum.dominant_nonzero_bin() {
        manifest.note(format!("dominant nonzero-frequency bin: f={peak}"));
    }
    match spectral::fit_power_law(&spectrum, fit_lo, fit_hi) {
        Ok(fit) => {
            manifest.emit("fit.json", |w| formats::write_fit_json(&fit, w))?;
        }
        Err(e) => manifest.note(format!("power-law fit failed: {e}")),
    }
    manifest.finish()
}

fn cmd_blobs(common: &CommonArgs) -> Result<()> {
    let config = require_config(common)?;
    if let Some(input) = config.get("input") {
        config.check_known(&["input"])?;
        let text = std::fs::read_to_string(input)
            .map_err(|e| Error::Config(format!("cannot read PBM '{input}': {e}")))?;
        let (width, height, state) = formats::read_pbm(&text)?;
        if width != height {
            return Err(Error::Config(format!(
                "blob analysis needs a square frame, got {width}x{height}"
            )));
        }
        let spec = LatticeSpec::new(width)?;
        let echo = serde_json::json!({ "input": input, "L": width });
        let mut manifest = ManifestBuilder::new("blobs", &common.out, echo)?;
        let stats = vec![blob::frame_stats(&spec, &state)?];
        let histogram = blob::accumulate_centroids(width, &stats);
        emit_blob_outputs(&mut manifest, &stats, &histogram)?;
        return manifest.finish();
    }

    config.check_known(&RUN_BASE_KEYS)?;
    let resolved = ResolvedRun::from_config(&config, common)?;
    let mut manifest = ManifestBuilder::new("blobs", &common.out, resolved.echo())?;
    let trace = resolved.trace()?;
    let report = detect_cycle(trace.states().iter().cloned(), trace.generations());
    manifest.cycle(report);

    let stats: Result<Vec<_>> = trace
        .states()
        .iter()
        .map(|state| blob::frame_stats(&resolved.spec, state))
        .collect();
    let stats = stats?;
    let histogram = blob::accumulate_centroids(resolved.spec.side(), &stats);
    let normalized = blob::normalized_series(&resolved.spec, &trace)?;
    emit_blob_outputs(&mut manifest, &stats, &histogram)?;
    manifest.emit("normalized.csv", |w| {
        writeln!(w, "generation,alive_fraction,blob_fraction")?;
        for (k, (alive, blobs)) in normalized.iter().enumerate() {
            writeln!(
                w,
                "{k},{},{}",
                formats::fmt_float(*alive),
                formats::fmt_float(*blobs)
            )?;
        }
        Ok(())
    })?;
    manifest.finish()
}

fn emit_blob_outputs(
    manifest: &mut ManifestBuilder,
    stats: &[blob::FrameBlobStats],
    histogram: &blob::CentroidHistogram,
) -> Result<()> {
    manifest.emit("blobs.csv", |w| formats::write_blob_stats_csv(stats, w))?;
    manifest.emit("centroid_histogram.csv", |w| {
        formats::write_histogram_csv(histogram, w)
    })?;
    manifest.emit("centroid_histogram.pgm", |w| {
        formats::write_pgm(histogram, w)
    })?;
    Ok(())
}

fn cmd_enumerate5(common: &CommonArgs) -> Result<()> {
    let config = load_config(common)?;
    config.check_known(&[
        "samples",
        "seed",
        "budget",
        "rule_reading",
        "catalog",
        "tau_grid",
        "sigma_grid",
    ])?;
    let samples: usize = config.parsed_or("samples", 100_000)?;
    let seed = resolve_seed(&config, common)?;
    let reading = resolve_reading(&config, common)?;
    let budget: usize = config.parsed_or("budget", 1024)?;
    let dump_catalog: bool = config.parsed_or("catalog", false)?;
    let with_surfaces = config.get("tau_grid").is_some() || config.get("sigma_grid").is_some();

    let echo = serde_json::json!({
        "samples": samples,
        "seed": seed,
        "budget": budget,
        "rule_reading": reading.name(),
    });
    let mut manifest = ManifestBuilder::new("enumerate5", &common.out, echo)?;

    println!("classifying all 2^25 initial conditions of the 5x5 lattice");
    let catalog = study::enumerate_classical_5x5();
    let summaries = study::transient_statistics(&catalog);
    manifest.emit("census.csv", |w| formats::write_census_csv(&catalog, w))?;
    manifest.emit("transients.csv", |w| {
        formats::write_transient_histogram_csv(&summaries, w)
    })?;
    if dump_catalog {
        manifest.emit("catalog.bin", |w| {
            formats::write_catalog_entries(catalog.entries(), w)
        })?;
    }
    manifest.note(format!(
        "distinct attractors: {}; observed periods: {:?}",
        catalog.attractors().len(),
        catalog.distinct_periods()
    ));

    if with_surfaces {
        let tau_grid = config.require_float_list("tau_grid")?;
        let sigma_grid = config.require_float_list("sigma_grid")?;
        println!(
            "sampling comparison surfaces on a {} x {} grid, {samples} initial conditions",
            tau_grid.len(),
            sigma_grid.len()
        );
        let mut params = study::SurfaceParams::new(tau_grid, sigma_grid, samples, seed);
        params.reading = reading;
        params.max_generations = budget;
        let surface = study::comparison_surfaces(&catalog, &params)?;
        manifest.emit("comparison.csv", |w| {
            formats::write_comparison_csv(&surface, w)
        })?;
        let quotas: Vec<String> = surface
            .quotas()
            .iter()
            .map(|(p, n)| format!("P={p}: {n}"))
            .collect();
        manifest.note(format!("stratum quotas: {}", quotas.join(", ")));
    }
    manifest.finish()
}

/// Mode counts exercised by the oracle comparison; chains and square
/// lattices both appear.
const ORACLE_TIMES: [f64; 3] = [0.1, 0.5, 1.0];
const ORACLE_TOLERANCE: f64 = 1e-10;
const ORACLE_STATES_PER_SYSTEM: usize = 20;

fn cmd_verify_oracle(common: &CommonArgs) -> Result<()> {
    let seed = common.seed.unwrap_or(0);
    let systems: Vec<(String, NeighborhoodTable)> = vec![
        ("chain of 2".into(), NeighborhoodTable::chain(2)),
        (
            "2x2 lattice".into(),
            NeighborhoodTable::moore(&LatticeSpec::new(2)?),
        ),
        ("chain of 6".into(), NeighborhoodTable::chain(6)),
        (
            "3x3 lattice".into(),
            NeighborhoodTable::moore(&LatticeSpec::new(3)?),
        ),
    ];
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    for (name, table) in &systems {
        let states: Vec<BinaryState> = (0..ORACLE_STATES_PER_SYSTEM)
            .map(|_| crate::lattice::random_state_from(table.cell_count(), &mut rng))
            .collect();
        let deviation = fock::oracle_deviation(table, &ORACLE_TIMES, &states)?;
        println!("{name}: max density residual {deviation:.3e}");
        worst = worst.max(deviation);
    }
    println!("overall max residual {worst:.3e} (tolerance {ORACLE_TOLERANCE:.1e})");
    if worst < ORACLE_TOLERANCE {
        Ok(())
    } else {
        Err(Error::CheckFailed(format!(
            "oracle residual {worst:.3e} exceeds {ORACLE_TOLERANCE:.1e}"
        )))
    }
}
