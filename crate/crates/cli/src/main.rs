//! `aegis` — run scripted/randomized action streams through the safety
//! filter, compare protected and unprotected rollouts, and exercise the
//! encoding/metrics utilities from the shell.
//!
//! Exit codes: 0 success, 1 validation error, 2 runtime/solver error,
//! 3 safety violation detected in a with-filter run.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use aegis_core::encoding::{depth_from_le_bytes, depth_to_turbo};
use aegis_core::saliency::{attention_mass, normalized_entropy, pearson_alignment};
use aegis_core::sim::{compare_runs, fixtures, EpisodeLog, ResolvedScenario};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "aegis", version, about = "Geometric safety filter rollout harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and emit its episode log.
    Run {
        /// Scenario file (TOML); chain/scene paths resolve relative to it.
        #[arg(long)]
        scenario: PathBuf,
        /// Disable the safety filter (raw damped-least-squares baseline).
        #[arg(long)]
        no_filter: bool,
        /// Override the scenario's random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the log file; without it the log goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: LogFormat,
    },
    /// Tabulate two episode logs of the same scenario side by side.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Emit the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Write the bundled chain/scene/scenario fixture files.
    Fixtures {
        #[arg(long)]
        emit: PathBuf,
    },
    /// Load a scenario file and check every invariant without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Map a raw depth buffer (f32 little-endian, row-major) to a Turbo
    /// pseudo-color RGB buffer.
    Encode {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        w: usize,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        max_range: f64,
    },
    /// Score a spatial map: normalized entropy, plus Pearson alignment and
    /// attention mass when reference/mask grids are given.
    Metrics {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        mask: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn validation<E: std::fmt::Display>(err: E) -> Failure {
    Failure {
        code: EXIT_VALIDATION,
        message: err.to_string(),
    }
}

fn runtime<E: std::fmt::Display>(err: E) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: err.to_string(),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Run {
            scenario,
            no_filter,
            seed,
            out,
            format,
        } => cmd_run(&scenario, no_filter, seed, out.as_deref(), format),
        Command::Compare { a, b, json } => cmd_compare(&a, &b, json),
        Command::Fixtures { emit } => cmd_fixtures(&emit),
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Encode {
            depth,
            w,
            h,
            out,
            max_range,
        } => cmd_encode(&depth, w, h, &out, max_range),
        Command::Metrics {
            map,
            reference,
            mask,
        } => cmd_metrics(&map, reference.as_deref(), mask.as_deref()),
    }
}

fn cmd_run(
    scenario_path: &Path,
    no_filter: bool,
    seed: Option<u64>,
    out: Option<&Path>,
    format: LogFormat,
) -> Result<u8, Failure> {
    let mut resolved = ResolvedScenario::load(scenario_path).map_err(validation)?;
    if no_filter {
        resolved.config.filter_enabled = false;
    }
    if let Some(seed) = seed {
        resolved.config.seed = seed;
    }
    let log = resolved.run().map_err(runtime)?;

    let rendered = match format {
        LogFormat::Json => log.to_json(),
        LogFormat::Csv => log.to_csv(),
    };
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(runtime)?;
            let suffix = if log.scenario.filter_enabled {
                ""
            } else {
                "_nofilter"
            };
            let ext = match format {
                LogFormat::Json => "json",
                LogFormat::Csv => "csv",
            };
            let file = dir.join(format!(
                "{}_seed{}{}.{}",
                log.scenario.name.replace('-', "_"),
                log.scenario.seed,
                suffix,
                ext
            ));
            std::fs::write(&file, rendered).map_err(runtime)?;
            eprintln!("wrote {}", file.display());
        }
        None => println!("{rendered}"),
    }

    let s = &log.summary;
    eprintln!(
        "{}: min barrier {:.6} m, violations {}, intervention rate {:.3}, mean tracking error {:.6}",
        log.scenario.name, s.min_barrier, s.violation_count, s.intervention_rate, s.mean_tracking_error
    );
    if log.scenario.filter_enabled && s.violation_count > 0 {
        eprintln!("safety violation detected in a with-filter run");
        return Ok(EXIT_VIOLATION);
    }
    Ok(0)
}

fn cmd_compare(a: &Path, b: &Path, json: bool) -> Result<u8, Failure> {
    let load = |p: &Path| -> Result<EpisodeLog, Failure> {
        EpisodeLog::from_json(&std::fs::read_to_string(p).map_err(validation)?)
            .map_err(validation)
    };
    let log_a = load(a)?;
    let log_b = load(b)?;
    let report = compare_runs(&log_a, &log_b).map_err(validation)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(runtime)?
        );
    } else {
        println!("{report}");
    }
    Ok(0)
}

fn cmd_fixtures(dir: &Path) -> Result<u8, Failure> {
    let paths = fixtures::emit_fixtures(dir).map_err(runtime)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(0)
}

fn cmd_validate(scenario: &Path) -> Result<u8, Failure> {
    let resolved = ResolvedScenario::load(scenario).map_err(validation)?;
    println!(
        "ok: scenario \"{}\" (chain {}, scene {}, {} spheres x {} obstacles, {} steps x {} substeps)",
        resolved.config.name,
        resolved.chain.name,
        resolved.scene.name,
        resolved.scene.spheres.len(),
        resolved.scene.obstacles.len(),
        resolved.config.steps,
        resolved.config.substeps_per_action,
    );
    Ok(0)
}

fn cmd_encode(
    depth_path: &Path,
    w: usize,
    h: usize,
    out: &Path,
    max_range: f64,
) -> Result<u8, Failure> {
    let bytes = std::fs::read(depth_path).map_err(validation)?;
    let depth = depth_from_le_bytes(w, h, &bytes).map_err(validation)?;
    let image = depth_to_turbo(&depth, max_range).map_err(validation)?;
    std::fs::write(out, &image.pixels).map_err(runtime)?;
    eprintln!(
        "encoded {}x{} depth -> {} ({} bytes)",
        w,
        h,
        out.display(),
        image.pixels.len()
    );
    Ok(0)
}

fn cmd_metrics(
    map_path: &Path,
    reference: Option<&Path>,
    mask: Option<&Path>,
) -> Result<u8, Failure> {
    let map = aegis_core::saliency::read_map(map_path).map_err(validation)?;

    #[derive(serde::Serialize)]
    struct Record {
        entropy: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        pearson: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        mass: Option<f64>,
    }

    let mut record = Record {
        entropy: normalized_entropy(&map),
        pearson: None,
        mass: None,
    };
    if let Some(path) = reference {
        let reference = aegis_core::saliency::read_map(path).map_err(validation)?;
        record.pearson = Some(pearson_alignment(&map, &reference).map_err(validation)?);
    }
    if let Some(path) = mask {
        let mask = aegis_core::saliency::read_mask(path).map_err(validation)?;
        record.mass = Some(attention_mass(&map, &mask).map_err(validation)?);
    }
    println!("{}", serde_json::to_string(&record).map_err(runtime)?);
    Ok(0)
}
