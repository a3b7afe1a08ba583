//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 1 for configuration errors, 2 for I/O errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::channels::DampingParam;
use crate::circuits::{cry_angle, waveplate_angle, WaveplateOp};
use crate::error::{Error, Result};
use crate::experiment::{crossover_records, gamma_grid, run_sweep, shot_experiment, SweepRecord, SweepSpec};
use crate::noise::{NoiseModel, Weighting, PRESET_NAMES};
use crate::recovery::SchemeKind;
use crate::verify::{run_suite, Fault};

pub const CSV_HEADER: &str = "gamma,scheme,fidelity,stderr,shots,noise_preset";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "dampcode", version, about = "Detected amplitude damping code simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Average fidelity over a γ grid, exact or shot-sampled.
    Sweep(SweepArgs),
    /// Shot-sampled tomography at one γ with per-input detail.
    Shots(ShotsArgs),
    /// γ where each corrected scheme starts beating no correction.
    Crossover(CrossoverArgs),
    /// Half-wave-plate and controlled-rotation angles for a damping strength.
    Angles(AnglesArgs),
    /// Run the built-in invariant checks.
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Common {
    /// Noise preset name, path to a preset JSON file, or "none".
    #[arg(long, default_value = "none")]
    noise: String,
    /// Seed for shot sampling.
    #[arg(long, env = "DAMPCODE_SEED", default_value_t = 0)]
    seed: u64,
    /// Weight branches by their ideal probabilities instead of measured counts.
    #[arg(long)]
    ideal_weights: bool,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Grid as start:stop:points, or a single value.
    #[arg(long, default_value = "0:1:21")]
    gammas: String,
    /// Comma-separated schemes.
    #[arg(long, default_value = "standard_a,standard_b,optimal,generic_polar,none")]
    schemes: String,
    /// Accepted shots per input state; 0 evaluates exactly.
    #[arg(long, default_value_t = 0)]
    shots: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ShotsArgs {
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value = "optimal,none")]
    schemes: String,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CrossoverArgs {
    #[arg(long, default_value = "0:1:41")]
    gammas: String,
    /// Corrected schemes to compare against no correction.
    #[arg(long, default_value = "standard_a,standard_b,optimal,generic_polar")]
    schemes: String,
    /// Read curves from a sweep CSV or JSON file instead of computing them.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct AnglesArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FaultArg {
    U1Sign,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Sweep(a) => sweep_cmd(a),
        Command::Shots(a) => shots_cmd(a),
        Command::Crossover(a) => crossover_cmd(a),
        Command::Angles(a) => angles_cmd(a),
        Command::Verify(a) => Ok(verify_cmd(a)),
    }
}

/// `start:stop:points` or a single γ.
pub fn parse_gammas(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> Result<f64> {
        s.trim().parse().map_err(|_| Error::Config(format!("bad number '{s}' in --gammas")))
    };
    match parts.as_slice() {
        [one] => {
            let g = num(one)?;
            DampingParam::new(g).map_err(|e| Error::Config(e.to_string()))?;
            Ok(vec![g])
        }
        [a, b, n] => {
            let n: usize = n.trim().parse().map_err(|_| Error::Config(format!("bad point count '{n}'")))?;
            gamma_grid(num(a)?, num(b)?, n).map_err(|e| Error::Config(e.to_string()))
        }
        _ => Err(Error::Config(format!("--gammas expects start:stop:points, got '{spec}'"))),
    }
}

pub fn parse_schemes(list: &str) -> Result<Vec<SchemeKind>> {
    let mut out = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        let k: SchemeKind = item.parse()?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no schemes given".into()));
    }
    Ok(out)
}

/// Preset name, JSON file path, or `none` for ideal gates.
pub fn resolve_noise(arg: &str) -> Result<Option<NoiseModel>> {
    if arg.eq_ignore_ascii_case("none") || arg.eq_ignore_ascii_case("ideal") {
        return Ok(None);
    }
    if PRESET_NAMES.contains(&arg) {
        return NoiseModel::preset(arg).map(Some);
    }
    let path = Path::new(arg);
    if path.exists() {
        return match NoiseModel::from_path(path) {
            Err(Error::Json(e)) => Err(Error::Config(format!("{}: {e}", path.display()))),
            other => other.map(Some),
        };
    }
    Err(Error::Config(format!(
        "unknown noise preset '{arg}' (expected one of {}, none, or a file path)",
        PRESET_NAMES.join(", ")
    )))
}

fn preset_label(model: Option<&NoiseModel>) -> String {
    model.map_or_else(|| "none".to_string(), |m| m.name.clone())
}

fn weighting(ideal: bool) -> Weighting {
    if ideal {
        Weighting::Ideal
    } else {
        Weighting::Measured
    }
}

pub fn records_to_csv(records: &[SweepRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER.split(',')).map_err(io)?;
    for r in records {
        w.write_record([
            r.gamma.to_string(),
            r.scheme.to_string(),
            r.fidelity.to_string(),
            r.stderr.to_string(),
            r.shots.to_string(),
            r.noise_preset.clone(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

pub fn records_from_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| Error::Config(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Config(format!("expected CSV header '{CSV_HEADER}'")));
    }
    rd.deserialize()
        .map(|r| r.map_err(|e| Error::Config(format!("bad CSV row: {e}"))))
        .collect()
}

fn records_from_file(path: &Path) -> Result<Vec<SweepRecord>> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    } else {
        records_from_csv(&text)
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))?,
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            so.flush()?;
        }
    }
    Ok(())
}

fn render(records: &[SweepRecord], format: Format) -> Result<String> {
    match format {
        Format::Csv => records_to_csv(records),
        Format::Json => to_json(records),
    }
}

fn sweep_cmd(a: SweepArgs) -> Result<i32> {
    let gammas = parse_gammas(&a.gammas)?;
    let schemes = parse_schemes(&a.schemes)?;
    let model = resolve_noise(&a.common.noise)?;
    let spec = SweepSpec {
        gammas,
        schemes,
        model: model.as_ref(),
        shots: a.shots,
        seed: a.common.seed,
        weighting: weighting(a.common.ideal_weights),
    };
    let recs = run_sweep(&spec)?;
    emit(a.common.out.as_deref(), &render(&recs, a.common.format)?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ShotsReport<'a> {
    gamma: f64,
    scheme: SchemeKind,
    noise_preset: String,
    seed: u64,
    #[serde(flatten)]
    result: &'a crate::experiment::ShotResult,
}

fn shots_cmd(a: ShotsArgs) -> Result<i32> {
    if a.shots == 0 {
        return Err(Error::Config("--shots must be positive".into()));
    }
    let gamma = DampingParam::new(a.gamma).map_err(|e| Error::Config(e.to_string()))?;
    let schemes = parse_schemes(&a.schemes)?;
    let model = resolve_noise(&a.common.noise)?;
    let label = preset_label(model.as_ref());
    let w = weighting(a.common.ideal_weights);
    let results = schemes
        .iter()
        .map(|&k| shot_experiment(k, gamma, model.as_ref(), a.shots, a.common.seed, w).map(|r| (k, r)))
        .collect::<Result<Vec<_>>>()?;
    let text = match a.common.format {
        Format::Csv => {
            let recs: Vec<SweepRecord> = results
                .iter()
                .map(|(k, r)| SweepRecord {
                    gamma: a.gamma,
                    scheme: *k,
                    fidelity: r.fidelity,
                    stderr: r.stderr,
                    shots: a.shots,
                    noise_preset: label.clone(),
                })
                .collect();
            records_to_csv(&recs)?
        }
        Format::Json => {
            let reports: Vec<ShotsReport> = results
                .iter()
                .map(|(k, r)| ShotsReport {
                    gamma: a.gamma,
                    scheme: *k,
                    noise_preset: label.clone(),
                    seed: a.common.seed,
                    result: r,
                })
                .collect();
            to_json(&reports)?
        }
    };
    emit(a.common.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CrossoverRow {
    scheme: SchemeKind,
    gamma_c: Option<f64>,
    noise_preset: String,
}

fn crossover_cmd(a: CrossoverArgs) -> Result<i32> {
    let (records, label) = match &a.input {
        Some(path) => {
            let recs = records_from_file(path)?;
            let label = recs.first().map_or_else(|| "none".into(), |r| r.noise_preset.clone());
            (recs, label)
        }
        None => {
            let gammas = parse_gammas(&a.gammas)?;
            if gammas.len() < 2 {
                return Err(Error::Config("crossover needs at least two grid points".into()));
            }
            let mut schemes = parse_schemes(&a.schemes)?;
            if !schemes.contains(&SchemeKind::NoCorrection) {
                schemes.push(SchemeKind::NoCorrection);
            }
            let model = resolve_noise(&a.common.noise)?;
            let spec = SweepSpec::exact(gammas, schemes, model.as_ref());
            (run_sweep(&spec)?, preset_label(model.as_ref()))
        }
    };
    let curve = |k: SchemeKind| -> Vec<SweepRecord> {
        let mut v: Vec<SweepRecord> = records.iter().filter(|r| r.scheme == k).cloned().collect();
        v.sort_by(|x, y| x.gamma.total_cmp(&y.gamma));
        v
    };
    let baseline = curve(SchemeKind::NoCorrection);
    if baseline.len() < 2 {
        return Err(Error::Config("need an uncorrected curve with at least two points".into()));
    }
    let wanted = parse_schemes(&a.schemes)?;
    let mut rows = Vec::new();
    for k in wanted.into_iter().filter(|k| k.is_corrected()) {
        let c = curve(k);
        if c.is_empty() {
            continue;
        }
        rows.push(CrossoverRow {
            scheme: k,
            gamma_c: crossover_records(&c, &baseline).map_err(|e| Error::Config(e.to_string()))?,
            noise_preset: label.clone(),
        });
    }
    let text = match a.common.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut s = String::from("scheme,gamma_c,noise_preset\n");
            for r in &rows {
                let g = r.gamma_c.map_or_else(|| "none".to_string(), |g| g.to_string());
                s.push_str(&format!("{},{},{}\n", r.scheme, g, r.noise_preset));
            }
            s
        }
    };
    emit(a.common.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Angles {
    gamma: f64,
    hwp_a0_deg: f64,
    hwp_a1_deg: f64,
    cry_theta_rad: f64,
    cry_theta_deg: f64,
}

fn angles_cmd(a: AnglesArgs) -> Result<i32> {
    let g = DampingParam::new(a.gamma).map_err(|e| Error::Config(e.to_string()))?;
    let theta = cry_angle(g);
    let v = Angles {
        gamma: a.gamma,
        hwp_a0_deg: waveplate_angle(g, WaveplateOp::A0),
        hwp_a1_deg: waveplate_angle(g, WaveplateOp::A1),
        cry_theta_rad: theta,
        cry_theta_deg: theta.to_degrees(),
    };
    let text = match a.format {
        Format::Json => to_json(&v)?,
        Format::Csv => format!(
            "gamma,hwp_a0_deg,hwp_a1_deg,cry_theta_rad,cry_theta_deg\n{},{},{},{},{}\n",
            v.gamma, v.hwp_a0_deg, v.hwp_a1_deg, v.cry_theta_rad, v.cry_theta_deg
        ),
    };
    emit(None, &text)?;
    Ok(EXIT_OK)
}

fn verify_cmd(a: VerifyArgs) -> i32 {
    let fault = a.inject_fault.map(|f| match f {
        FaultArg::U1Sign => Fault::U1Sign,
    });
    let checks = run_suite(fault);
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    println!("{}/{} checks passed", checks.len() - failed, checks.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CONFIG
    }
}
