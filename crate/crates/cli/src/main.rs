//! `emseg` command line: segment, synth, verify, metrics.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emseg::levelset::front_pixels;
use emseg::metrics::score;
use emseg::raster::{gaussian_convolve, load_image, load_mask, save_image, save_mask, save_overlay};
use emseg::synth::{make_scene, NoiseSpec, RNG_ALGORITHM};
use emseg::verify::{self, Suite};
use emseg::*;
use serde::Serialize;

use config::{parse_scene_name, parse_size, SegmentConfig, TruthSource};

/// Exit code for usage and input errors.
const EXIT_USAGE: u8 = 1;
/// Exit code when the run completed but the outcome is negative: the front
/// vanished, or a verification check failed.
const EXIT_NEGATIVE: u8 = 2;

#[derive(Parser)]
#[command(name = "emseg", version, about = "Level-set segmentation of grayscale images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a contour on an image or generated scene.
    Segment(SegmentArgs),
    /// Write a synthetic scene and its ground-truth masks.
    Synth(SynthArgs),
    /// Run the numerical oracle suites.
    Verify(VerifyArgs),
    /// Compare two mask files.
    Metrics(MetricsArgs),
}

#[derive(Args, Default)]
pub struct SegmentArgs {
    /// TOML config, or a summary.json from an earlier run to replay it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input image (PGM or PNG).
    #[arg(long, conflicts_with = "scene")]
    pub image: Option<PathBuf>,
    /// Generated scene: bimodal, triple_junction or four_region.
    #[arg(long)]
    pub scene: Option<String>,
    /// Scene size as WxH.
    #[arg(long, requires = "scene")]
    pub size: Option<String>,
    /// Noise added to the input, TYPE:PARAM:SEED.
    #[arg(long)]
    pub noise: Option<String>,
    /// Gaussian pre-smoothing of the input, applied after noise.
    #[arg(long)]
    pub presmooth: Option<f64>,
    /// Initial contour, e.g. "circle:64,64,50" or "rect:10,10,50,40;circle:90,90,12".
    #[arg(long)]
    pub init: Option<String>,
    /// Ground-truth mask path, or "auto" for the scene's primary object.
    #[arg(long)]
    pub truth: Option<String>,
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub edge_gain: Option<f64>,
    #[arg(long)]
    pub dt_safety: Option<f64>,
    #[arg(long)]
    pub band_beta: Option<f64>,
    #[arg(long)]
    pub reinit_every: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub stop_flip_fraction: Option<f64>,
    #[arg(long)]
    pub stop_window: Option<usize>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// bimodal, triple_junction or four_region.
    #[arg(long, required_unless_present = "spec")]
    kind: Option<String>,
    /// Full scene description (TOML or JSON), instead of --kind/--size.
    #[arg(long, conflicts_with_all = ["kind", "size"])]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "128x128")]
    size: String,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    /// Where to write the JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    a: PathBuf,
    b: PathBuf,
}

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Negative,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Segment(a) => segment(a),
        Command::Synth(a) => synth(a),
        Command::Verify(a) => run_verify(a),
        Command::Metrics(a) => metrics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Negative) => ExitCode::from(EXIT_NEGATIVE),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'a str,
    rng: &'a str,
    config: &'a SegmentConfig,
    termination: Termination,
    iterations: usize,
    final_energy: Option<f64>,
    area_in: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    dice: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<metrics::MaskScore>,
}

fn segment(args: SegmentArgs) -> Outcome {
    let cfg = SegmentConfig::resolve(&args)?;
    let (mut img, truth) = match (&cfg.image, &cfg.scene) {
        (Some(path), None) => (load_image(path)?, None),
        (None, Some(spec)) => {
            let (img, t) = make_scene(spec)?;
            (img, Some(t))
        }
        _ => return Err(Failure::Usage("exactly one of --image or --scene is required".into())),
    };
    if let Some(noise) = &cfg.noise {
        img = noise.parse::<NoiseSpec>()?.apply(&img)?;
    }
    if let Some(sigma) = cfg.presmooth {
        img = gaussian_convolve(&img, sigma)?;
    }
    let init: InitSpec = cfg.init.parse()?;
    let truth_mask = match cfg.truth()? {
        None => None,
        Some(TruthSource::Auto) => match truth {
            Some(t) => Some(t.primary().1.clone()),
            None => return Err(Failure::Usage("--truth auto needs --scene".into())),
        },
        Some(TruthSource::File(p)) => Some(load_mask(p)?),
    };

    let result = evolve(&img, &init, &cfg.params)?;

    fs::create_dir_all(&cfg.out)?;
    save_mask(&result.final_mask, cfg.out.join("mask.pgm"))?;
    let mut front = Mask::empty(img.width(), img.height());
    for i in front_pixels(&result.final_phi) {
        front.set(i % img.width(), i / img.width(), true);
    }
    save_overlay(&img, &front, cfg.out.join("overlay.pgm"))?;
    fs::write(cfg.out.join("energy.csv"), result.trace_csv())?;
    if !result.snapshots.is_empty() {
        let dir = cfg.out.join("snapshots");
        fs::create_dir_all(&dir)?;
        for (it, mask) in &result.snapshots {
            save_mask(mask, dir.join(format!("iter_{it:05}.pgm")))?;
        }
    }
    let scored = match &truth_mask {
        Some(t) => Some(score(&result.final_mask, t)?),
        None => None,
    };
    let last = result.energy_trace.last();
    let summary = Summary {
        version: VERSION,
        rng: RNG_ALGORITHM,
        config: &cfg,
        termination: result.termination,
        iterations: result.iterations,
        final_energy: last.map(|e| e.energy),
        area_in: result.final_mask.count(),
        dice: scored.map(|s| s.dice),
        score: scored,
    };
    write_json(&cfg.out.join("summary.json"), &summary)?;
    match scored {
        Some(s) => println!("{} after {} iterations, dice {:.4}", result.termination, result.iterations, s.dice),
        None => println!("{} after {} iterations", result.termination, result.iterations),
    }
    if result.termination == Termination::FrontVanished {
        eprintln!("front vanished");
        return Err(Failure::Negative);
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Outcome {
    let spec = match (&args.spec, &args.kind) {
        (Some(path), _) => config::load_structured::<SceneSpec>(path)?,
        (None, Some(kind)) => {
            let (w, h) = parse_size(&args.size)?;
            parse_scene_name(kind, w, h)?
        }
        (None, None) => return Err(Failure::Usage("--kind or --spec is required".into())),
    };
    let (mut img, truth) = make_scene(&spec)?;
    if let Some(noise) = &args.noise {
        img = noise.parse::<NoiseSpec>()?.apply(&img)?;
    }
    fs::create_dir_all(&args.out)?;
    save_image(&img, args.out.join("scene.pgm"))?;
    for (name, mask) in &truth.objects {
        save_mask(mask, args.out.join(format!("truth_{name}.pgm")))?;
    }
    write_json(&args.out.join("scene.json"), &spec)?;
    println!("wrote scene and {} truth masks to {}", truth.objects.len(), args.out.display());
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Outcome {
    let report = verify::run(args.suite)?;
    for c in &report.checks {
        println!(
            "{} {}/{}: lhs {:.6e} rhs {:.6e} error {:.3e} (tol {:.1e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.lhs,
            c.rhs,
            c.error,
            c.tolerance
        );
    }
    if let Some(path) = &args.report {
        write_json(path, &report)?;
    }
    if report.all_pass {
        Ok(())
    } else {
        Err(Failure::Negative)
    }
}

fn metrics(args: MetricsArgs) -> Outcome {
    let s = score(&load_mask(&args.a)?, &load_mask(&args.b)?)?;
    println!("{}", serde_json::to_string(&s).map_err(|e| Failure::Usage(e.to_string()))?);
    Ok(())
}
