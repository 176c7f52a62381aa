//! `spinorbit`: run the polarization-to-transverse-mode transfer, render port
//! images, check bench files and run the self-check suite.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 bad configuration
//! or input, 3 I/O failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use spinorbit::algebra::{c, Pair};
use spinorbit::bench::{parse_bench_bytes, serialize_bench};
use spinorbit::elements::{compile, Compiled};
use spinorbit::image_io::{GrayImage, ImageFormat};
use spinorbit::par::Execution;
use spinorbit::render::{BeamParams, GridSpec};
use spinorbit::report::{
    port_json, render_field, render_ports, render_sweep, sweep_entry, InputJson, SweepReport, TeleportReport,
    SCHEMA_VERSION,
};
use spinorbit::teleport::{
    from_waveplates, run_compiled, run_protocol, sweep, waveplate_settings_for, PolarizationState, ProtocolRun,
    WaveplateSettings,
};
use spinorbit::verify::{format_table, run_all, Gates, VerifyConfig};

#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
    Failed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

fn config(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn io_err(context: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", context.display()))
}

#[derive(Parser)]
#[command(name = "spinorbit", version, about = "Polarization to transverse-mode transfer through a path qubit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol for one input and write the four port images.
    Teleport(TeleportArgs),
    /// Run a closed sweep of inputs and write the port-0H images and a montage.
    Sweep(SweepArgs),
    /// Run the self-check suite and print a pass/fail table.
    Verify(VerifyArgs),
    /// Check a bench file and print its canonical form.
    Parse(ParseArgs),
    /// Render α ψ+ + β ψ− to an image.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Pgm,
    Png,
}

impl From<Format> for ImageFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Pgm => ImageFormat::Pgm,
            Format::Png => ImageFormat::Png,
        }
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("polarization").required(true).args(["pol", "alpha", "waveplates"])))]
struct PolArgs {
    /// Preset polarization.
    #[arg(long, value_parser = ["h", "v", "d", "a", "l", "r"], ignore_case = true)]
    pol: Option<String>,
    /// Amplitude on ê_H as `re,im`.
    #[arg(long, requires = "beta", allow_hyphen_values = true, value_parser = parse_complex)]
    alpha: Option<(f64, f64)>,
    /// Amplitude on ê_V as `re,im`.
    #[arg(long, requires = "alpha", allow_hyphen_values = true, value_parser = parse_complex)]
    beta: Option<(f64, f64)>,
    /// Quarter- and half-wave plate angles in degrees, `qwp,hwp`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex, value_name = "QWP,HWP")]
    waveplates: Option<(f64, f64)>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 512)]
    nx: usize,
    #[arg(long, default_value_t = 512)]
    ny: usize,
    /// Grid half-width in beam widths.
    #[arg(long, default_value_t = 4.0)]
    extent: f64,
    /// Observation plane distance from the waist, in metres.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    z: f64,
    /// Beam waist in metres.
    #[arg(long, default_value_t = 1e-3)]
    w0: f64,
    /// Wavelength in metres.
    #[arg(long, default_value_t = 632.8e-9)]
    wavelength: f64,
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec, CliError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(config(format!("grid must be at least 1x1 (got {}x{})", self.nx, self.ny)));
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(config(format!("extent must be positive (got {})", self.extent)));
        }
        Ok(GridSpec::new(self.nx, self.ny, self.extent))
    }

    fn beam(&self) -> Result<BeamParams, CliError> {
        let d = BeamParams::default().d;
        BeamParams::from_wavelength(self.w0, self.wavelength, self.z, d).map_err(config)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Pgm)]
    format: Format,
}

#[derive(Args)]
struct TeleportArgs {
    #[command(flatten)]
    pol: PolArgs,
    /// Bench file to run instead of the built-in circuit.
    #[arg(long)]
    bench: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Number of sweep points, a multiple of 3.
    #[arg(long, default_value_t = 12)]
    points: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random inputs for the closed-form and fidelity checks.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Random circuits for the parser and oracle checks.
    #[arg(long, default_value_t = 100)]
    circuits: usize,
    #[arg(long, default_value_t = 512)]
    nx: usize,
    #[arg(long, default_value_t = 512)]
    ny: usize,
    #[arg(long, default_value_t = 4.0)]
    extent: f64,
    /// Print the results as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ParseArgs {
    /// Bench file to check.
    bench: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    pol: PolArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Base name of the written files.
    #[arg(long, default_value = "field")]
    name: String,
}

fn parse_complex(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated numbers, got {s:?}"))?;
    let num = |t: &str| {
        t.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("not a finite number: {t:?}"))
    };
    Ok((num(a)?, num(b)?))
}

/// The input state, the plate settings reaching it, and notes for the report.
fn resolve_polarization(args: &PolArgs) -> Result<(PolarizationState, Option<WaveplateSettings>, Vec<String>), CliError> {
    let mut notes = Vec::new();
    let pol = if let Some(name) = &args.pol {
        PolarizationState::preset(name).ok_or_else(|| config(format!("unknown preset {name:?}")))?
    } else if let (Some(a), Some(b)) = (args.alpha, args.beta) {
        let (alpha, beta) = (c(a.0, a.1), c(b.0, b.1));
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        let pol = PolarizationState::normalize(alpha, beta).map_err(config)?;
        if (norm - 1.0).abs() > 1e-12 {
            notes.push(format!("input normalized from |α|² + |β|² = {norm}"));
        }
        pol
    } else if let Some((q, h)) = args.waveplates {
        let pol = from_waveplates(q, h);
        return Ok((pol, Some(WaveplateSettings { qwp: q.to_radians(), hwp: h.to_radians() }), notes));
    } else {
        return Err(config("one of --pol, --alpha/--beta or --waveplates is required"));
    };
    Ok((pol, waveplate_settings_for(&pol).ok(), notes))
}

/// Files written into a private directory inside `out`, moved into place
/// only once every file has been written.
struct Staging {
    out: PathBuf,
    dir: tempfile::TempDir,
    names: Vec<String>,
}

impl Staging {
    fn new(out: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
        let dir = tempfile::Builder::new().prefix(".spinorbit-").tempdir_in(out).map_err(|e| io_err(out, e))?;
        Ok(Staging { out: out.to_path_buf(), dir, names: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.path().join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn image(&mut self, name: &str, image: &GrayImage, format: ImageFormat) -> Result<(), CliError> {
        let bytes = image.encode(format).map_err(|e| io_err(&self.dir.path().join(name), e))?;
        self.write(name, &bytes)
    }

    fn json(&mut self, name: &str, value: &impl serde::Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let mut done = Vec::new();
        for name in &self.names {
            let (from, to) = (self.dir.path().join(name), self.out.join(name));
            fs::rename(&from, &to).map_err(|e| io_err(&to, e))?;
            done.push(to);
        }
        Ok(done)
    }
}

fn load_bench(path: &Path) -> Result<Compiled, CliError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let circuit = parse_bench_bytes(&bytes).map_err(|e| config(format!("{}: {e}", path.display())))?;
    compile(&circuit).map_err(|e| config(format!("{}: {e}", path.display())))
}

fn teleport(args: &TeleportArgs) -> Result<(), CliError> {
    let (pol, plates, mut warnings) = resolve_polarization(&args.pol)?;
    let spec = args.grid.spec()?;
    let beam = args.grid.beam()?;
    let format: ImageFormat = args.out.format.into();

    let (run, circuit): (ProtocolRun, String) = match &args.bench {
        Some(path) => {
            let compiled = load_bench(path)?;
            if !compiled.terminal_pbs {
                warnings.push("bench has no terminal pbs; ports are read as path/polarization projections".into());
            }
            (run_compiled(&pol, &compiled).map_err(config)?, path.display().to_string())
        }
        None => (run_protocol(&pol).map_err(config)?, "built-in".to_string()),
    };
    warnings.extend(run.warnings.iter().map(|w| w.to_string()));

    let rendered = render_ports(&run, &beam, &spec, Execution::default()).map_err(config)?;
    let mut stage = Staging::new(&args.out.out)?;
    let mut ports = Vec::new();
    for (k, r) in rendered.iter().enumerate() {
        let stem = format!("port_{}", run.ports[k].port);
        let image = format!("{stem}.{}", format.extension());
        stage.image(&image, &r.image, format)?;
        stage.json(&format!("{stem}.json"), &r.sidecar(&image, &spec, &beam))?;
        ports.push(port_json(&run, k, Some(r), Some(image)));
    }
    let report = TeleportReport {
        schema: SCHEMA_VERSION,
        command: "teleport".into(),
        circuit,
        input: InputJson::new(&run, plates),
        grid: spec,
        beam,
        ports,
        warnings: warnings.clone(),
    };
    stage.json("teleport.json", &report)?;
    stage.commit()?;

    for w in &warnings {
        eprintln!("warning: {w}");
    }
    for p in &report.ports {
        let orientation = p.orientation_deg.map_or("none".to_string(), |d| format!("{d:+.2}°"));
        println!(
            "port {}: weight {:.4}, correction {}, corrected fidelity {:.12}, orientation {orientation}",
            p.port, p.weight, p.correction, p.corrected_fidelity
        );
    }
    println!("wrote {}", args.out.out.join("teleport.json").display());
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let spec = args.grid.spec()?;
    let beam = args.grid.beam()?;
    let format: ImageFormat = args.out.format.into();
    let points = sweep(args.points).map_err(config)?;
    let runs: Vec<ProtocolRun> =
        points.iter().map(|p| run_protocol(&p.state)).collect::<Result<_, _>>().map_err(config)?;
    let rendered = render_sweep(&runs, &beam, &spec, Execution::default()).map_err(config)?;

    let mut stage = Staging::new(&args.out.out)?;
    let width = points.len().to_string().len().max(2);
    let mut entries = Vec::new();
    for ((point, run), r) in points.iter().zip(&runs).zip(&rendered) {
        let stem = format!("sweep_{:0width$}", point.index);
        let image = format!("{stem}.{}", format.extension());
        stage.image(&image, &r.image, format)?;
        stage.json(&format!("{stem}.json"), &r.sidecar(&image, &spec, &beam))?;
        entries.push(sweep_entry(point, run, waveplate_settings_for(&point.state).ok(), Some(r), Some(image)));
    }
    let tiles: Vec<GrayImage> = rendered.iter().map(|r| r.image.clone()).collect();
    let montage = format!("montage.{}", format.extension());
    stage.image(&montage, &GrayImage::montage(&tiles, 4, 4), format)?;
    let report = SweepReport {
        schema: SCHEMA_VERSION,
        command: "sweep".into(),
        reconstructed_sweep: true,
        grid: spec,
        beam,
        points: entries,
        montage: Some(montage),
    };
    stage.json("sweep.json", &report)?;
    stage.commit()?;

    for e in &report.points {
        let orientation = e.port_0h.orientation_deg.map_or("none".to_string(), |d| format!("{d:+.2}°"));
        let s = e.input.bloch;
        println!("point {:>2}: S = ({:+.3}, {:+.3}, {:+.3}), 0H orientation {orientation}", e.index, s[0], s[1], s[2]);
    }
    println!("wrote {}", args.out.out.join("sweep.json").display());
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    if args.nx == 0 || args.ny == 0 || !(args.extent > 0.0 && args.extent.is_finite()) {
        return Err(config("grid must be at least 1x1 with a positive extent"));
    }
    let cfg = VerifyConfig {
        seed: args.seed,
        samples: args.samples,
        circuits: args.circuits,
        grid: GridSpec::new(args.nx, args.ny, args.extent),
    };
    let results = run_all(&cfg, &Gates::default());
    if args.json {
        println!("{}", serde_json::to_string_pretty(&results).map_err(|e| CliError::Io(e.to_string()))?);
    } else {
        print!("{}", format_table(&results));
    }
    if results.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}

fn parse(args: &ParseArgs) -> Result<(), CliError> {
    let bytes = fs::read(&args.bench).map_err(|e| io_err(&args.bench, e))?;
    let circuit = parse_bench_bytes(&bytes).map_err(|e| config(format!("{}: {e}", args.bench.display())))?;
    let compiled = compile(&circuit).map_err(|e| config(format!("{}: {e}", args.bench.display())))?;
    print!("{}", serialize_bench(&circuit));
    eprintln!(
        "{}: {} elements, {:?} operator{}",
        args.bench.display(),
        circuit.len(),
        compiled.operator.kind(),
        if compiled.terminal_pbs { ", terminal pbs" } else { "" }
    );
    Ok(())
}

fn render(args: &RenderArgs) -> Result<(), CliError> {
    if args.name.is_empty() || args.name.contains(['/', '\\']) || args.name.starts_with('.') {
        return Err(config(format!("invalid file name {:?}", args.name)));
    }
    let (pol, _, notes) = resolve_polarization(&args.pol)?;
    let spec = args.grid.spec()?;
    let beam = args.grid.beam()?;
    let format: ImageFormat = args.out.format.into();
    let r = render_field(&Pair::new(pol.alpha, pol.beta), &beam, &spec, Execution::default()).map_err(config)?;
    let image = format!("{}.{}", args.name, format.extension());
    let mut stage = Staging::new(&args.out.out)?;
    stage.image(&image, &r.image, format)?;
    stage.json(&format!("{}.json", args.name), &r.sidecar(&image, &spec, &beam))?;
    stage.commit()?;
    for n in notes {
        eprintln!("note: {n}");
    }
    let orientation = r.orientation.degrees().map_or("none".to_string(), |d| format!("{d:+.2}°"));
    println!("wrote {} (orientation {orientation})", args.out.out.join(image).display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Teleport(a) => teleport(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Verify(a) => verify(a),
        Command::Parse(a) => parse(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Config(m) => eprintln!("error: {m}"),
                CliError::Io(m) => eprintln!("I/O error: {m}"),
                CliError::Failed => eprintln!("verification failed"),
            }
            ExitCode::from(e.code())
        }
    }
}
