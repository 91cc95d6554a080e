mod args;

use std::fs;
use std::io::IsTerminal;
use std::path::Path;
use std::process::ExitCode;

use blinkscope_core::blinks::{Detection, DetectionParams};
use blinkscope_core::ear::EarVariant;
use blinkscope_core::io::{
    apply_param, export_blinks, export_scores, export_stats_csv, export_stats_json, load_blinks_csv,
    load_landmark_csv, parse_params_file, write_atomic,
};
use blinkscope_core::series::{auto_select_columns, read_headers, ColumnSelection};
use blinkscope_core::{ear_series_from_landmarks, render_summary_svg, Recording, SummaryBundle};
use clap::error::ErrorKind;
use clap::Parser;
use tracing::info;

use crate::args::{Cli, Command, InputArgs, InputKind, ParamArgs, Variant};

#[derive(Debug)]
enum Failure {
    /// Bad data, parameters or paths supplied by the user: exit 1.
    Input(String),
    /// Anything else: exit 2.
    Internal(String),
}

impl From<blinkscope_core::Error> for Failure {
    fn from(err: blinkscope_core::Error) -> Self {
        if err.is_input_error() {
            Failure::Input(err.to_string())
        } else {
            Failure::Internal(err.to_string())
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let filter = tracing_subscriber::EnvFilter::try_new(&cli.log).unwrap_or_else(|_| "info".into());
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_target(false)
        .init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Ear(a) => {
            let (frames, file_variant) = load_landmark_csv(read_input(&a.input.input)?.as_slice())?;
            let variant = a.input.variant.map(to_variant).unwrap_or(file_variant);
            let (left, right) = ear_series_from_landmarks(&frames, a.input.fps, variant)?;
            write(&a.output, &export_scores(&left, &right, variant)?)
        }
        Command::Detect(a) => {
            let rec = load_recording(&a.input)?;
            let params = detection_params(&a.params)?;
            let det = rec.detect(&params)?;
            write(&a.output, &export_blinks(&det.events, &det.matches, rec.fps())?)
        }
        Command::Stats(a) => {
            let rec = load_recording(&a.input)?;
            let params = detection_params(&a.params)?;
            let det = detection(&rec, &params, a.blinks.as_deref())?;
            write_stats(&rec, &det, &a.out)
        }
        Command::Summary(a) => {
            let rec = load_recording(&a.input)?;
            let params = detection_params(&a.params)?;
            let det = detection(&rec, &params, a.blinks.as_deref())?;
            let bundle = rec.summary(&det, &params)?;
            write(&a.out.join("summary.svg"), &render_summary_svg(&bundle))?;
            write(&a.out.join("summary.json"), &summary_json(&bundle)?)
        }
        Command::All(a) => {
            let rec = load_recording(&a.input)?;
            let params = detection_params(&a.params)?;
            let det = rec.detect(&params)?;
            if !a.no_blinks {
                write(&a.out.join("blinks.csv"), &export_blinks(&det.events, &det.matches, rec.fps())?)?;
            }
            if !a.no_stats {
                write_stats(&rec, &det, &a.out)?;
            }
            if !(a.no_summary_svg && a.no_summary_json) {
                let bundle = rec.summary(&det, &params)?;
                if !a.no_summary_svg {
                    write(&a.out.join("summary.svg"), &render_summary_svg(&bundle))?;
                }
                if !a.no_summary_json {
                    write(&a.out.join("summary.json"), &summary_json(&bundle)?)?;
                }
            }
            Ok(())
        }
        Command::Serve(a) => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Internal(e.to_string()))?;
            let config = blinkscope_service::ServiceConfig {
                snapshot_dir: a.snapshot_dir,
            };
            runtime
                .block_on(blinkscope_service::serve(a.bind, config))
                .map_err(|e| Failure::Input(format!("cannot serve on {}: {e}", a.bind)))
        }
    }
}

fn to_variant(v: Variant) -> EarVariant {
    match v {
        Variant::TwoD => EarVariant::TwoD,
        Variant::ThreeD => EarVariant::ThreeD,
    }
}

fn read_input(path: &Path) -> Outcome<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Outcome {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))?;
    }
    write_atomic(path, bytes).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn detection_params(args: &ParamArgs) -> Outcome<DetectionParams> {
    let mut params = DetectionParams::default();
    if let Some(path) = &args.params {
        let text = String::from_utf8(read_input(path)?)
            .map_err(|_| Failure::Input(format!("{} is not UTF-8 text", path.display())))?;
        parse_params_file(&text, &mut params)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    for (key, value) in args.assignments() {
        apply_param(&mut params, key, &value)?;
    }
    params.validate()?;
    Ok(params)
}

fn load_recording(args: &InputArgs) -> Outcome<Recording> {
    if !(args.fps > 0.0 && args.fps.is_finite()) {
        return Err(Failure::Input(format!("--fps must be positive, got {}", args.fps)));
    }
    let bytes = read_input(&args.input)?;
    let selection = match (&args.left_column, &args.right_column) {
        (Some(l), Some(r)) => Some(ColumnSelection {
            left_column: l.clone(),
            right_column: r.clone(),
        }),
        _ => None,
    };
    let kind = match args.input_kind {
        InputKind::Auto => {
            let headers = read_headers(bytes.as_slice())?;
            let landmark_shaped = headers.len() == 25 || headers.len() == 37;
            if selection.is_none() && auto_select_columns(&headers).is_none() && landmark_shaped {
                InputKind::Landmarks
            } else {
                InputKind::Scores
            }
        }
        kind => kind,
    };
    if kind == InputKind::Landmarks {
        let (frames, file_variant) = load_landmark_csv(bytes.as_slice())?;
        let variant = args.variant.map(to_variant).unwrap_or(file_variant);
        let (left, right) = ear_series_from_landmarks(&frames, args.fps, variant)?;
        info!(frames = left.len(), "computed EAR from landmarks");
        return Ok(Recording::new(left, right)?);
    }
    let (rec, selection) = Recording::from_score_csv(&bytes, selection, args.fps)?;
    info!(
        frames = rec.left.len(),
        left = %selection.left_column,
        right = %selection.right_column,
        "loaded scores"
    );
    Ok(rec)
}

/// Fresh detection, or the events of a corrected blink table. Thresholds
/// always come from detection on the same input.
fn detection(rec: &Recording, params: &DetectionParams, blinks: Option<&Path>) -> Outcome<Detection> {
    let mut det = rec.detect(params)?;
    if let Some(path) = blinks {
        let (events, matches) = load_blinks_csv(read_input(path)?.as_slice())?;
        let frames = rec.left.len();
        if let Some(e) = events.iter().find(|e| e.apex_frame >= frames) {
            return Err(Failure::Input(format!(
                "{}: blink {} lies beyond the recording ({frames} frames)",
                path.display(),
                e.id
            )));
        }
        info!(events = events.len(), "using corrected blink table");
        det.events = events;
        det.matches = matches;
    }
    Ok(det)
}

fn write_stats(rec: &Recording, det: &Detection, out: &Path) -> Outcome {
    let report = rec.statistics(det)?;
    write(&out.join("stats.csv"), &export_stats_csv(&report)?)?;
    write(&out.join("stats.json"), &export_stats_json(&report)?)
}

fn summary_json(bundle: &SummaryBundle) -> Outcome<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(bundle).map_err(|e| Failure::Internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

