//! Job-level front end: build states, run EC pipelines, extract Bloch
//! vectors, evaluate 1-D combs, and write deterministic artifacts
//! (CSV / 16-bit PGM / JSON) describing them.
//!
//! This module is the single place where user-facing jobs are validated and
//! executed; the thin CLI binary only parses flags into a [`RenderJob`] and
//! maps error classes to exit codes. All outputs are byte-stable across runs:
//! fixed truncation tolerances, deterministic reductions, `{:.16e}` number
//! formatting, and no randomness anywhere.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector2;
use num_complex::Complex64;
use num_rational::Rational64;
use serde_json::json;

use crate::ec::{decode_syndrome, ec_map, teleport_ec, AncillaSpec, RakeOrder};
use crate::plane::{Field2D, Gaussian2D};
use crate::states::{approx_state_wigner, bloch_from_wigner, Bloch4, GKPWigner, NoiseSpec};
use crate::theta::Theta1DSpec;
use crate::{Error, Rect, Result, SQRT_PI, TRACE_FACTOR};

/// Named state presets with the Bloch vectors used throughout the crate's
/// figures. `PlusT` is the T-type magic direction `(1,1,1)/sqrt(3)`; `PlusH`
/// the H-type `(1,0,1)/sqrt(2)`; `Vacuum` is the bare oscillator ground state
/// (not a GKP state).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Zero,
    One,
    Plus,
    Minus,
    PlusT,
    PlusH,
    Vacuum,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "zero" => Preset::Zero,
            "one" => Preset::One,
            "plus" => Preset::Plus,
            "minus" => Preset::Minus,
            "plusT" | "plust" => Preset::PlusT,
            "plusH" | "plush" => Preset::PlusH,
            "vacuum" => Preset::Vacuum,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown preset '{other}' (expected zero|one|plus|minus|plusT|plusH|vacuum)"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Zero => "zero",
            Preset::One => "one",
            Preset::Plus => "plus",
            Preset::Minus => "minus",
            Preset::PlusT => "plusT",
            Preset::PlusH => "plusH",
            Preset::Vacuum => "vacuum",
        }
    }

    /// Logical Bloch vector; `None` for the (non-encoded) vacuum.
    pub fn bloch(&self) -> Option<Bloch4> {
        let s3 = 1.0 / 3.0f64.sqrt();
        let s2 = 1.0 / 2.0f64.sqrt();
        Some(match self {
            Preset::Zero => Bloch4::logical(0.0, 0.0, 1.0),
            Preset::One => Bloch4::logical(0.0, 0.0, -1.0),
            Preset::Plus => Bloch4::logical(1.0, 0.0, 0.0),
            Preset::Minus => Bloch4::logical(-1.0, 0.0, 0.0),
            Preset::PlusT => Bloch4::logical(s3, s3, s3),
            Preset::PlusH => Bloch4::logical(s2, 0.0, s2),
            Preset::Vacuum => return None,
        })
    }
}

/// What state a job operates on: a named preset or an explicit Bloch vector,
/// with noise parameters for the encoded cases.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Preset { preset: Preset, beta: f64 },
    Explicit { r: [f64; 3], delta2: f64, kappa2: f64, phi: f64 },
}

/// A built state: either an encoded GKP object or the vacuum Gaussian.
#[derive(Debug, Clone)]
pub enum BuiltState {
    Gkp(GKPWigner),
    Vacuum(Gaussian2D),
}

impl StateSpec {
    pub fn build(&self) -> Result<BuiltState> {
        match self {
            StateSpec::Preset { preset, beta } => match preset.bloch() {
                None => Ok(BuiltState::Vacuum(Gaussian2D::vacuum())),
                Some(bloch) => Ok(BuiltState::Gkp(approx_state_wigner(
                    bloch,
                    &NoiseSpec::symmetric(*beta)?,
                )?)),
            },
            StateSpec::Explicit { r, delta2, kappa2, phi } => {
                Ok(BuiltState::Gkp(approx_state_wigner(
                    Bloch4::logical(r[0], r[1], r[2]),
                    &NoiseSpec::new(*delta2, *kappa2, *phi)?,
                )?))
            }
        }
    }

    fn describe(&self) -> serde_json::Value {
        match self {
            StateSpec::Preset { preset, beta } => json!({
                "preset": preset.name(),
                "beta": beta,
            }),
            StateSpec::Explicit { r, delta2, kappa2, phi } => json!({
                "bloch": r,
                "delta2": delta2,
                "kappa2": kappa2,
                "phi": phi,
            }),
        }
    }
}

impl BuiltState {
    pub fn sample(&self, window: Rect, res: usize, rel_tol: f64) -> Result<Field2D> {
        match self {
            BuiltState::Gkp(state) => state.sample(window, res, res, rel_tol),
            BuiltState::Vacuum(g) => Field2D::tabulate(g, window, res, res),
        }
    }

    pub fn bloch(&self) -> Result<Bloch4> {
        match self {
            BuiltState::Gkp(state) => bloch_from_wigner(state),
            BuiltState::Vacuum(g) => bloch_from_wigner(g),
        }
    }
}

/// Output format of a job.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Pgm,
    Json,
}

impl OutputFormat {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "csv" => OutputFormat::Csv,
            "pgm" => OutputFormat::Pgm,
            "json" => OutputFormat::Json,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown format '{other}' (expected csv|pgm|json)"
                )))
            }
        })
    }

    fn name(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Pgm => "pgm",
            OutputFormat::Json => "json",
        }
    }
}

/// Parameters of the 1-D comb evaluation command.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaParams {
    pub period: f64,
    pub v1: Rational64,
    pub v2: Rational64,
    /// Spike variance; the comb is evaluated at `tau = 2 pi i sigma2`.
    pub sigma2: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub samples: usize,
}

/// Which pipeline a job runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// Sample a state's Wigner function on the grid.
    Wigner,
    /// Run the two-quadrature EC map with approximate ancillae.
    Ec { syndrome: (f64, f64), ancilla_beta: f64, order: RakeOrder },
    /// Teleportation-based EC / magic-state preparation.
    Magic { m: (f64, f64), ancilla: AncillaChoice },
    /// Extract the Bloch vector of a state.
    Bloch,
    /// Tabulate a 1-D theta comb.
    Theta(ThetaParams),
}

/// Ancilla selection for the magic command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AncillaChoice {
    Ideal,
    Beta(f64),
}

impl AncillaChoice {
    fn to_spec(self) -> Result<AncillaSpec> {
        match self {
            AncillaChoice::Ideal => Ok(AncillaSpec::Ideal),
            AncillaChoice::Beta(beta) => AncillaSpec::approximate(NoiseSpec::symmetric(beta)?),
        }
    }

    fn describe(&self) -> serde_json::Value {
        match self {
            AncillaChoice::Ideal => json!("ideal"),
            AncillaChoice::Beta(beta) => json!({ "beta": beta }),
        }
    }
}

/// A fully specified, validated-on-run job.
#[derive(Debug, Clone)]
pub struct RenderJob {
    pub command: Command,
    pub state: StateSpec,
    /// Window half-width in units of `sqrt(pi)` (the grid covers
    /// `[-w sqrt(pi), w sqrt(pi)]^2`).
    pub window_sqrt_pi: f64,
    pub resolution: usize,
    pub format: OutputFormat,
    /// Output stem; artifacts append extensions. Required for csv/pgm;
    /// `None` sends JSON to stdout.
    pub output: Option<PathBuf>,
    pub rel_tol: f64,
}

impl RenderJob {
    pub fn window(&self) -> Rect {
        Rect::centered(self.window_sqrt_pi * SQRT_PI)
    }

    fn validate(&self) -> Result<()> {
        if !(self.window_sqrt_pi > 0.0) || !self.window_sqrt_pi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "window half-width {} must be positive",
                self.window_sqrt_pi
            )));
        }
        if !(16..=4096).contains(&self.resolution) {
            return Err(Error::InvalidInput(format!(
                "resolution {} outside supported range 16..=4096",
                self.resolution
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidInput(format!(
                "truncation tolerance {} outside (0, 1)",
                self.rel_tol
            )));
        }
        if self.output.is_none() && self.format != OutputFormat::Json {
            return Err(Error::InvalidInput(
                "csv/pgm formats need an --output stem".into(),
            ));
        }
        Ok(())
    }

    fn base_metadata(&self) -> serde_json::Value {
        json!({
            "command": match &self.command {
                Command::Wigner => "wigner",
                Command::Ec { .. } => "ec",
                Command::Magic { .. } => "magic",
                Command::Bloch => "bloch",
                Command::Theta(_) => "theta",
            },
            "state": self.state.describe(),
            "window_half_width": self.window_sqrt_pi * SQRT_PI,
            "window_units_sqrt_pi": self.window_sqrt_pi,
            "resolution": self.resolution,
            "rel_tol": self.rel_tol,
            "trace_constant": TRACE_FACTOR,
            "format": self.format.name(),
        })
    }
}

/// What a completed job produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub artifacts: Vec<PathBuf>,
    /// JSON payload (also written to the .json artifact when an output stem
    /// is given, or stdout otherwise).
    pub report: serde_json::Value,
}

/// Execute a job, writing its artifacts. JSON-only jobs with no output stem
/// print the report to stdout.
pub fn run(job: &RenderJob) -> Result<RunSummary> {
    job.validate()?;
    let mut meta = job.base_metadata();
    let mut artifacts = Vec::new();

    match &job.command {
        Command::Wigner => {
            let state = job.state.build()?;
            let field = state.sample(job.window(), job.resolution, job.rel_tol)?;
            attach_field_stats(&mut meta, &field);
            write_field_artifacts(job, &field, &mut meta, &mut artifacts)?;
        }
        Command::Ec { syndrome, ancilla_beta, order } => {
            let state = job.state.build()?;
            let input = state.sample(job.window(), job.resolution, job.rel_tol)?;
            let ancilla = AncillaSpec::approximate(NoiseSpec::symmetric(*ancilla_beta)?)?;
            let syn = decode_syndrome(syndrome.0, syndrome.1)?;
            let (out, probability) = ec_map(&input, &ancilla, &syn, *order)?;
            let bloch = bloch_from_wigner(&out)?;
            meta["syndrome"] = json!({
                "m_q": syn.m_q(), "m_p": syn.m_p(),
                "nearest_q": syn.nearest_q(), "nearest_p": syn.nearest_p(),
                "rem_q": syn.rem_q(), "rem_p": syn.rem_p(),
            });
            meta["ancilla"] = json!({ "beta": ancilla_beta });
            meta["order"] = json!(match order {
                RakeOrder::QThenP => "q-then-p",
                RakeOrder::PThenQ => "p-then-q",
            });
            meta["probability"] = json!(probability);
            meta["output_bloch"] = bloch_json(&bloch);
            attach_field_stats(&mut meta, &out);
            write_field_artifacts(job, &out, &mut meta, &mut artifacts)?;
        }
        Command::Magic { m, ancilla } => {
            let state = job.state.build()?;
            let input = state.sample(job.window(), job.resolution, job.rel_tol)?;
            let spec = ancilla.to_spec()?;
            let m_vec = Vector2::new(m.0, m.1);
            let (bloch, out) = teleport_ec(&input, m_vec, &spec)?;
            meta["ancilla"] = ancilla.describe();
            meta["m_raw"] = json!([m.0, m.1]);
            meta["shift_applied"] = json!([
                std::f64::consts::SQRT_2 * m.0,
                std::f64::consts::SQRT_2 * m.1
            ]);
            meta["output_bloch"] = bloch_json(&bloch);
            attach_field_stats(&mut meta, &out);
            if job.format == OutputFormat::Json {
                emit_report(job, meta.clone(), &mut artifacts)?;
            } else {
                write_field_artifacts(job, &out, &mut meta, &mut artifacts)?;
            }
        }
        Command::Bloch => {
            let state = job.state.build()?;
            let bloch = state.bloch()?;
            meta["output_bloch"] = bloch_json(&bloch);
            emit_report(job, meta.clone(), &mut artifacts)?;
        }
        Command::Theta(params) => {
            let table = theta_table(params, job.rel_tol)?;
            meta["theta"] = json!({
                "period": params.period,
                "v1": [*params.v1.numer(), *params.v1.denom()],
                "v2": [*params.v2.numer(), *params.v2.denom()],
                "sigma2": params.sigma2,
                "x_min": params.x_min,
                "x_max": params.x_max,
                "samples": params.samples,
            });
            match job.format {
                OutputFormat::Csv => {
                    let stem = job.output.as_ref().expect("validated");
                    let csv_path = with_ext(stem, "csv");
                    std::fs::write(&csv_path, theta_csv(&table))
                        .map_err(|e| io_error(&csv_path, e))?;
                    artifacts.push(csv_path);
                    write_metadata(job, &meta, &mut artifacts)?;
                }
                OutputFormat::Json | OutputFormat::Pgm => {
                    if job.format == OutputFormat::Pgm {
                        return Err(Error::InvalidInput(
                            "theta tables are 1-D; use csv or json".into(),
                        ));
                    }
                    meta["table"] = json!(table
                        .iter()
                        .map(|(x, v)| json!([x, v.re, v.im]))
                        .collect::<Vec<_>>());
                    emit_report(job, meta.clone(), &mut artifacts)?;
                }
            }
        }
    }

    Ok(RunSummary { artifacts, report: meta })
}

fn bloch_json(b: &Bloch4) -> serde_json::Value {
    json!({
        "r0": b.r[0],
        "r1": b.r[1],
        "r2": b.r[2],
        "r3": b.r[3],
        "normalized": [b.r[1] / b.r[0], b.r[2] / b.r[0], b.r[3] / b.r[0]],
    })
}

fn attach_field_stats(meta: &mut serde_json::Value, field: &Field2D) {
    meta["field_stats"] = json!({
        "integral": field.integrate(),
        "max_abs": field.max_abs(),
        "n_q": field.n_q(),
        "n_p": field.n_p(),
    });
}

fn theta_table(params: &ThetaParams, rel_tol: f64) -> Result<Vec<(f64, Complex64)>> {
    if params.samples < 2 || params.samples > 1 << 20 {
        return Err(Error::InvalidInput(format!(
            "theta sample count {} outside 2..=1048576",
            params.samples
        )));
    }
    if !(params.x_max > params.x_min) {
        return Err(Error::InvalidInput(format!(
            "empty theta range [{}, {}]",
            params.x_min, params.x_max
        )));
    }
    if !(params.sigma2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "theta spike variance {} must be positive",
            params.sigma2
        )));
    }
    let tau = Complex64::new(0.0, std::f64::consts::TAU * params.sigma2);
    let spec = Theta1DSpec::new(params.period, params.v1, params.v2, tau)?;
    let step = (params.x_max - params.x_min) / (params.samples - 1) as f64;
    let mut table = Vec::with_capacity(params.samples);
    for i in 0..params.samples {
        let x = params.x_min + i as f64 * step;
        let v = spec.eval(Complex64::new(x, 0.0), rel_tol)?;
        table.push((x, v));
    }
    Ok(table)
}

fn theta_csv(table: &[(f64, Complex64)]) -> String {
    let mut s = String::with_capacity(table.len() * 64 + 16);
    s.push_str("s,re,im\n");
    for (x, v) in table {
        writeln!(s, "{:.16e},{:.16e},{:.16e}", x, v.re, v.im).expect("string write");
    }
    s
}

/// Write the grid artifacts for a field job according to the format, plus the
/// metadata sidecar.
fn write_field_artifacts(
    job: &RenderJob,
    field: &Field2D,
    meta: &mut serde_json::Value,
    artifacts: &mut Vec<PathBuf>,
) -> Result<()> {
    match job.format {
        OutputFormat::Csv => {
            let stem = job.output.as_ref().expect("validated");
            let csv_path = with_ext(stem, "csv");
            std::fs::write(&csv_path, field_csv(field)).map_err(|e| io_error(&csv_path, e))?;
            artifacts.push(csv_path);
            write_metadata(job, meta, artifacts)?;
        }
        OutputFormat::Pgm => {
            let stem = job.output.as_ref().expect("validated");
            let pgm_path = with_ext(stem, "pgm");
            let scale = field.max_abs();
            std::fs::write(&pgm_path, field_pgm(field, scale))
                .map_err(|e| io_error(&pgm_path, e))?;
            artifacts.push(pgm_path);
            meta["pgm_scale"] = json!({
                "max_abs": scale,
                "mapping": "level = clamp(32768 + round(w / max_abs * 32767), 0, 65535)",
                "row_order": "top row = highest p",
            });
            write_metadata(job, meta, artifacts)?;
        }
        OutputFormat::Json => {
            emit_report(job, meta.clone(), artifacts)?;
        }
    }
    Ok(())
}

/// CSV with header `q,p,w`, row-major over p rows (ascending), q fastest.
pub fn field_csv(field: &Field2D) -> String {
    let mut s = String::with_capacity(field.n_q() * field.n_p() * 72 + 8);
    s.push_str("q,p,w\n");
    for j in 0..field.n_p() {
        let p = field.p_at(j);
        for i in 0..field.n_q() {
            writeln!(s, "{:.16e},{:.16e},{:.16e}", field.q_at(i), p, field.get(i, j))
                .expect("string write");
        }
    }
    s
}

/// 16-bit binary PGM, diverging scale symmetric about zero: mid-gray is 0,
/// white is `+max_abs`, black is `-max_abs`. Top image row is the highest p.
pub fn field_pgm(field: &Field2D, max_abs: f64) -> Vec<u8> {
    let (w, h) = (field.n_q(), field.n_p());
    let mut out = Vec::with_capacity(w * h * 2 + 32);
    out.extend_from_slice(format!("P5\n{w} {h}\n65535\n").as_bytes());
    let scale = if max_abs > 0.0 { 32767.0 / max_abs } else { 0.0 };
    for j in (0..h).rev() {
        for i in 0..w {
            let level = 32768.0 + (field.get(i, j) * scale).round();
            let level = level.clamp(0.0, 65535.0) as u16;
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    out
}

fn emit_report(
    job: &RenderJob,
    meta: serde_json::Value,
    artifacts: &mut Vec<PathBuf>,
) -> Result<()> {
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    match &job.output {
        Some(stem) => {
            let path = with_ext(stem, "json");
            std::fs::write(&path, text.as_bytes()).map_err(|e| io_error(&path, e))?;
            artifacts.push(path);
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes()).and_then(|_| lock.write_all(b"\n")).map_err(|e| {
                Error::InvalidInput(format!("failed writing report to stdout: {e}"))
            })?;
        }
    }
    Ok(())
}

fn write_metadata(
    job: &RenderJob,
    meta: &serde_json::Value,
    artifacts: &mut Vec<PathBuf>,
) -> Result<()> {
    let stem = job.output.as_ref().expect("validated");
    let path = meta_path(stem);
    let text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    std::fs::write(&path, text.as_bytes()).map_err(|e| io_error(&path, e))?;
    artifacts.push(path);
    Ok(())
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut p = stem.to_path_buf();
    let new_ext = match p.extension().and_then(|e| e.to_str()) {
        Some(existing) if existing == ext => return p,
        _ => ext.to_string(),
    };
    p.set_extension(new_ext);
    p
}

fn meta_path(stem: &Path) -> PathBuf {
    let mut name = stem
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("out")
        .to_string();
    name.push_str(".meta.json");
    stem.with_file_name(name)
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidInput(format!("cannot write {}: {e}", path.display()))
}
