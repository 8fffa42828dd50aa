use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use scanscope_core::scene::Scene;
use scanscope_core::{
    add_shot_noise, detectability_report_with, fit_lorentzian, parse_scene_file, scan, sweep,
    Error, NoiseSpec, ScanImage, SceneError, Spectrum, Vec3,
};

#[derive(Parser)]
#[command(
    name = "odmr-scanscope",
    version,
    about = "Virtual ODMR scanning spin microscope"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scene description (JSON).
    #[arg(long, global = true)]
    scene: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Overrides the scene's noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Skip shot noise.
    #[arg(long, global = true)]
    no_noise: bool,

    /// Worker threads for scans.
    #[arg(long, global = true, env = "ODMR_SCANSCOPE_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a spectrum with the tip at the scan center.
    Sweep,
    /// Raster-scan the sample and write noiseless and noisy image layers.
    Scan,
    /// Fit a Lorentzian to a spectrum CSV, or to a freshly synthesized sweep.
    Fit {
        /// Spectrum CSV as written by `sweep`.
        #[arg(long)]
        spectrum: Option<PathBuf>,
    },
    /// Single-spin detectability report.
    Report,
}

enum Failure {
    Usage(String),
    Scene(SceneError),
    Core(Error),
    Io(PathBuf, std::io::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Scene(e) => match e {
                SceneError::Syntax { .. } => 3,
                SceneError::UnknownKey { .. } => 4,
                SceneError::Type { .. } => 5,
                SceneError::Invariant(_) => 6,
                SceneError::Io(_) => 7,
            },
            Failure::Io(..) => 7,
            Failure::Core(e) => match e {
                Error::Io(_) => 7,
                Error::Format(_) => 8,
                Error::FitFailed { .. } | Error::ReferenceFit(_) | Error::ScanFailed { .. } => 9,
                Error::InvalidParameter { .. } => 10,
                _ => 11,
            },
        }
    }

    fn to_json(&self) -> Value {
        let (class, message, paths) = match self {
            Failure::Usage(m) => ("usage", m.clone(), Vec::new()),
            Failure::Scene(e) => (e.class(), e.to_string(), e.paths()),
            Failure::Io(p, e) => ("io", format!("{}: {e}", p.display()), Vec::new()),
            Failure::Core(e) => (core_class(e), e.to_string(), Vec::new()),
        };
        json!({
            "error": { "class": class, "message": message, "paths": paths },
            "exit_code": self.exit_code(),
        })
    }
}

fn core_class(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::CoincidentPoint { .. } => "coincident_point",
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::SingularSystem => "singular_system",
        Error::FitFailed { .. } => "fit_failed",
        Error::ReferenceFit(_) => "reference_fit",
        Error::ScanFailed { .. } => "scan_failed",
        Error::NoContrast(_) => "no_contrast",
        Error::NoPeak(_) => "no_peak",
        Error::Format(_) => "format",
        Error::Io(_) => "io",
    }
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        Failure::Scene(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return fail(Failure::Usage(e.render().to_string())),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("{}", f.to_json());
    ExitCode::from(f.exit_code())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }

    let scene = match &cli.scene {
        Some(path) => Some(parse_scene_file(path)?.build()?),
        None => None,
    };
    let require_scene = || {
        scene
            .clone()
            .ok_or_else(|| Failure::Usage("--scene <file> is required".into()))
    };
    fs::create_dir_all(&cli.out).map_err(|e| Failure::Io(cli.out.clone(), e))?;
    let noise = |scene: &Scene| {
        let mut noise = scene.scan.noise;
        if let Some(seed) = cli.seed {
            noise.rng_seed = seed;
        }
        if cli.no_noise {
            noise.enabled = false;
        }
        noise
    };

    let mut written = Vec::new();
    match &cli.command {
        Command::Sweep => {
            let scene = require_scene()?;
            let clean = center_sweep(&scene)?;
            written.push(write(&cli.out, "spectrum.csv", clean.to_csv().as_bytes())?);
            let noise = noise(&scene);
            if noise.enabled {
                let noisy = add_shot_noise(&clean, &noise)?;
                written.push(write(
                    &cli.out,
                    "spectrum_noisy.csv",
                    noisy.to_csv().as_bytes(),
                )?);
            }
        }
        Command::Scan => {
            let scene = require_scene()?;
            let mut spec = scene.scan;
            spec.noise = NoiseSpec {
                enabled: false,
                ..noise(&scene)
            };
            let clean = scan(&scene.sample, &scene.probe, &spec, &scene.modality)?;
            written.extend(write_image(&cli.out, "scan_noiseless", &clean)?);
            let noise = noise(&scene);
            if noise.enabled {
                spec.noise = noise;
                let noisy = scan(&scene.sample, &scene.probe, &spec, &scene.modality)?;
                written.extend(write_image(&cli.out, "scan_noisy", &noisy)?);
            }
        }
        Command::Fit { spectrum } => {
            let input = match spectrum {
                Some(path) => {
                    let text =
                        fs::read_to_string(path).map_err(|e| Failure::Io(path.clone(), e))?;
                    Spectrum::from_csv(&text)?
                }
                None => {
                    let scene = require_scene()?;
                    add_shot_noise(&center_sweep(&scene)?, &noise(&scene))?
                }
            };
            let fit = fit_lorentzian(&input, None)?;
            written.push(write(&cli.out, "fit.json", fit.to_json().as_bytes())?);
        }
        Command::Report => {
            let scene = require_scene()?;
            let report = detectability_report_with(
                &scene.probe.geometry,
                &scene.probe.line,
                &scene.probe.scheme,
                scene.photon_budget,
                &scene.detectability,
            )?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{text}");
            written.push(write(&cli.out, "report.json", text.as_bytes())?);
            return Ok(());
        }
    }
    println!("{}", json!({ "written": written }));
    Ok(())
}

fn center_sweep(scene: &Scene) -> Result<Spectrum, Failure> {
    let [x, y] = scene.scan.center;
    Ok(sweep(
        &scene.sample,
        &scene.probe,
        &scene.sweep,
        Vec3::new(x, y, 0.0),
    )?)
}

fn write_image(dir: &Path, stem: &str, image: &ScanImage) -> Result<Vec<String>, Failure> {
    let meta = serde_json::to_string_pretty(&image.metadata_json()).expect("metadata serializes");
    Ok(vec![
        write(
            dir,
            &format!("{stem}.csv"),
            image.to_matrix_csv().as_bytes(),
        )?,
        write(dir, &format!("{stem}.pgm"), &image.to_pgm())?,
        write(dir, &format!("{stem}.json"), meta.as_bytes())?,
    ])
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<String, Failure> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Failure::Io(path.clone(), e))?;
    Ok(path.display().to_string())
}
