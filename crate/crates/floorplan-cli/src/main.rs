//! Command-line front end for the floorplan reconstruction pipeline.
//!
//! Subcommands cover the whole workflow:
//!
//! * `generate` — synthesize a stereo frame stream from a scene file
//! * `run` — reconstruct a floorplan from a frame stream
//! * `merge` — fold several session maps into one floorplan
//! * `eval` — score a floorplan against the scene it was generated from
//! * `render` — draw a floorplan as an SVG image
//!
//! Every input and output location is an explicit flag; nothing is read
//! from environment variables. Exit codes: 0 on success, 2 for
//! configuration problems, 3 for input problems, and 4 when segment
//! selection exhausts its time budget, in which case the best floorplan
//! found before the deadline is still written out.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::Point2;

use floorplan_core::config::{parse_config, MalformedPolicy, PipelineConfig};
use floorplan_core::eval::hausdorff_eval_segments;
use floorplan_core::floorplan::{FloorplanError, FloorplanModel};
use floorplan_core::io::{
    self, floorplan_to_json, map_to_json, parse_floorplan, parse_map, parse_scene,
    parse_transforms,
};
use floorplan_core::landmarks::PlaneMap;
use floorplan_core::pipeline::{run_merge, run_session, PipelineError};
use floorplan_core::scenegen::generate_frames;
use floorplan_core::svg::render_svg;

#[derive(Parser)]
#[command(
    name = "floorplan",
    version,
    about = "Reconstructs 2D floorplans from stereo support-point streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a stereo frame stream from a scene description.
    Generate {
        /// Scene description JSON.
        #[arg(long)]
        scene: PathBuf,
        /// Output frame stream, one JSON object per line.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a session: frames in, map + floorplan + timings out.
    Run {
        /// Pipeline configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Input frame stream, one JSON object per line.
        #[arg(long)]
        frames: PathBuf,
        /// Directory for map.json, floorplan.json, floorplans.jsonl and
        /// timings.txt; created if missing.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Merge session maps and reconstruct one floorplan from the result.
    Merge {
        /// Pipeline configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Session map files, in merge order.
        #[arg(long, num_args = 2.., required = true)]
        maps: Vec<PathBuf>,
        /// Transforms JSON: one entry per map after the first, carrying
        /// that map into the frame of the first.
        #[arg(long)]
        transforms: PathBuf,
        /// Directory for map.json and floorplan.json; created if missing.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Compare a floorplan against the scene it was reconstructed from.
    Eval {
        /// Pipeline configuration; sample count and seed come from its
        /// eval section.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Floorplan JSON produced by `run` or `merge`.
        #[arg(long)]
        floorplan: PathBuf,
        /// Ground-truth scene description JSON.
        #[arg(long)]
        scene: PathBuf,
        /// Output report JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a floorplan as an SVG image.
    Render {
        /// Floorplan JSON produced by `run` or `merge`.
        #[arg(long)]
        floorplan: PathBuf,
        /// Output SVG.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure classes, one per documented exit code.
#[derive(Debug)]
enum CliError {
    /// Unreadable or invalid configuration: exit 2.
    Config(String),
    /// Unreadable, malformed, or inconsistent input data: exit 3.
    Input(String),
    /// Segment selection ran out of budget: exit 4. The message records
    /// whether an incumbent floorplan was written.
    Budget(String),
    /// Anything that is not the caller's fault: exit 1.
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
            CliError::Budget(m) => write!(f, "segment selection exhausted its budget; {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Budget(_) => 4,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Generate { scene, out } => cmd_generate(scene, out),
        Command::Run {
            config,
            frames,
            out_dir,
        } => cmd_run(config.as_deref(), frames, out_dir),
        Command::Merge {
            config,
            maps,
            transforms,
            out_dir,
        } => cmd_merge(config.as_deref(), maps, transforms, out_dir),
        Command::Eval {
            config,
            floorplan,
            scene,
            out,
        } => cmd_eval(config.as_deref(), floorplan, scene, out),
        Command::Render { floorplan, out } => cmd_render(floorplan, out),
    }
}

// ---------------------------------------------------------------------
// Subcommands

fn cmd_generate(scene: &Path, out: &Path) -> Result<(), CliError> {
    let spec = parse_scene(&read_text(scene)?).map_err(|e| input(scene, &e))?;
    let frames = generate_frames(&spec).map_err(|e| input(scene, &e))?;
    let file = fs::File::create(out).map_err(|e| input(out, &e))?;
    io::write_frames(BufWriter::new(file), &frames).map_err(|e| input(out, &e))?;
    println!("wrote {} frames to {}", frames.len(), out.display());
    Ok(())
}

fn cmd_run(config: Option<&Path>, frames_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let file = fs::File::open(frames_path).map_err(|e| input(frames_path, &e))?;
    let reader = BufReader::new(file);
    let frames = match cfg.on_malformed {
        MalformedPolicy::Abort => io::read_frames(reader).map_err(|e| input(frames_path, &e))?,
        MalformedPolicy::Skip => {
            let (frames, bad) =
                io::read_frames_lenient(reader).map_err(|e| input(frames_path, &e))?;
            if !bad.is_empty() {
                eprintln!(
                    "skipped {} malformed frame line(s), first at line {}",
                    bad.len(),
                    bad[0]
                );
            }
            frames
        }
    };
    fs::create_dir_all(out_dir).map_err(|e| input(out_dir, &e))?;

    let output = run_session(&cfg, &frames).map_err(|e| pipeline_failure(e, out_dir))?;

    write_text(&out_dir.join("map.json"), &map_to_json(&output.map))?;
    write_text(&out_dir.join("floorplans.jsonl"), &series_lines(&output.floorplans))?;
    if let Some(final_model) = output.floorplans.last() {
        let polyline = keyframe_polyline(&output.map);
        write_text(
            &out_dir.join("floorplan.json"),
            &floorplan_to_json(final_model, &polyline),
        )?;
    }
    let report = output.timings.report();
    write_text(&out_dir.join("timings.txt"), &report)?;
    print!("{report}");
    Ok(())
}

fn cmd_merge(
    config: Option<&Path>,
    map_paths: &[PathBuf],
    transforms_path: &Path,
    out_dir: &Path,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let mut maps = Vec::with_capacity(map_paths.len());
    for path in map_paths {
        maps.push(parse_map(&read_text(path)?).map_err(|e| input(path, &e))?);
    }
    let transforms =
        parse_transforms(&read_text(transforms_path)?).map_err(|e| input(transforms_path, &e))?;
    if transforms.len() != maps.len() - 1 {
        return Err(CliError::Input(format!(
            "{} maps need {} transforms, found {}",
            maps.len(),
            maps.len() - 1,
            transforms.len()
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| input(out_dir, &e))?;

    let (merged, model) =
        run_merge(&cfg, maps, &transforms).map_err(|e| pipeline_failure(e, out_dir))?;

    write_text(&out_dir.join("map.json"), &map_to_json(&merged))?;
    let polyline = keyframe_polyline(&merged);
    write_text(
        &out_dir.join("floorplan.json"),
        &floorplan_to_json(&model, &polyline),
    )?;
    println!(
        "merged {} maps into {} landmarks, {} walls selected",
        map_paths.len(),
        merged.landmarks().len(),
        model.walls.len()
    );
    Ok(())
}

fn cmd_eval(
    config: Option<&Path>,
    floorplan: &Path,
    scene: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let plan = parse_floorplan(&read_text(floorplan)?).map_err(|e| input(floorplan, &e))?;
    let truth = parse_scene(&read_text(scene)?).map_err(|e| input(scene, &e))?;
    let report =
        hausdorff_eval_segments(&plan.wall_segments(), &truth, cfg.eval_samples, cfg.eval_seed)
            .map_err(|e| CliError::Input(e.to_string()))?;
    let json =
        serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    write_text(out, &json)?;
    println!(
        "floorplan-to-truth mean {:.4} m, truth-to-floorplan mean {:.4} m ({} samples)",
        report.model_to_truth_mean, report.truth_to_model_mean, report.sample_count
    );
    Ok(())
}

fn cmd_render(floorplan: &Path, out: &Path) -> Result<(), CliError> {
    let plan = parse_floorplan(&read_text(floorplan)?).map_err(|e| input(floorplan, &e))?;
    write_text(out, &render_svg(&plan))?;
    println!("rendered {} walls to {}", plan.walls.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------------
// Shared plumbing

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Classifies a session failure and, when the selection solver timed out
/// with an incumbent in hand, writes that incumbent before reporting.
/// The incumbent file carries no trajectory overlay: the map it came
/// from is gone by the time the error surfaces.
fn pipeline_failure(e: PipelineError, out_dir: &Path) -> CliError {
    match e {
        PipelineError::BadMeasurement { .. } => CliError::Input(e.to_string()),
        PipelineError::Floorplan(FloorplanError::BudgetExceeded { incumbent }) => {
            let Some(model) = incumbent else {
                return CliError::Budget("no feasible incumbent was found".into());
            };
            let path = out_dir.join("floorplan.json");
            match fs::write(&path, floorplan_to_json(&model, &[])) {
                Ok(()) => {
                    CliError::Budget(format!("incumbent floorplan written to {}", path.display()))
                }
                Err(e) => CliError::Budget(format!("incumbent floorplan was lost: {e}")),
            }
        }
        PipelineError::Floorplan(other) => CliError::Internal(other.to_string()),
    }
}

/// Keyframe ground positions in trajectory order, for the floorplan
/// document's overlay.
fn keyframe_polyline(map: &PlaneMap) -> Vec<Point2<f64>> {
    map.trajectory
        .iter()
        .filter(|t| t.keyframe)
        .map(|t| Point2::new(t.pose.translation.x, t.pose.translation.y))
        .collect()
}

/// One compact JSON document per reconstruction tick. Series entries skip
/// the trajectory overlay; the final floorplan.json carries it.
fn series_lines(floorplans: &[FloorplanModel]) -> String {
    let mut out = String::new();
    for model in floorplans {
        let file = io::floorplan_to_file(model, &[]);
        let line = serde_json::to_string(&file).expect("floorplan serialization cannot fail");
        let _ = writeln!(out, "{line}");
    }
    out
}

fn input(path: &Path, e: &dyn std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input(path, &e))
}

fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| input(path, &e))
}
