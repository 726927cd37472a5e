//! `gkp` — command-line front end for the `gkp-phase` library.
//!
//! Every subcommand parses into a [`RenderJob`] and delegates to
//! [`gkp_phase::render::run`]; this binary owns nothing but flag parsing,
//! the thread-pool environment variable, and the error-class → exit-code
//! mapping (0 ok, 2 invalid job, 3 physics error, 4 numeric guard).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gkp_phase::ec::RakeOrder;
use gkp_phase::render::{
    run, AncillaChoice, Command as JobCommand, OutputFormat, Preset, RenderJob, StateSpec,
    ThetaParams,
};
use gkp_phase::{Error, ErrorClass};
use num_rational::Rational64;

#[derive(Parser)]
#[command(
    name = "gkp",
    version,
    about = "Phase-space renderer and error-correction runner for GKP bosonic qubits",
    after_help = "Set GKP_THREADS to cap the grid worker pool; all other behavior is flag-driven."
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Sample a state's Wigner function on a square grid
    Wigner {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the two-quadrature error-correction map with approximate ancillae
    Ec {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        out: OutputArgs,
        /// Raw syndrome pair (m_q, m_p)
        #[arg(long, num_args = 2, value_names = ["MQ", "MP"], allow_negative_numbers = true,
              default_values_t = [0.0, 0.0])]
        syndrome: Vec<f64>,
        /// Symmetric noise parameter of both ancillae
        #[arg(long, default_value_t = 0.01)]
        ancilla_beta: f64,
        /// Which quadrature is raked first
        #[arg(long, value_parser = parse_order, default_value = "q-then-p")]
        order: RakeOrder,
    },
    /// Teleportation-based correction / magic-state preparation
    Magic {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        out: OutputArgs,
        /// Homodyne outcome pair fed to the feed-forward shift
        #[arg(long, num_args = 2, value_names = ["MQ", "MP"], allow_negative_numbers = true,
              default_values_t = [0.0, 0.0])]
        m: Vec<f64>,
        /// Ancilla resource: `ideal` or a symmetric noise parameter
        #[arg(long, value_parser = parse_ancilla, default_value = "ideal")]
        ancilla: AncillaChoice,
    },
    /// Extract the Bloch vector of a state
    Bloch {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Tabulate a 1-D Gaussian pulse train (theta comb)
    Theta {
        #[command(flatten)]
        out: OutputArgs,
        /// Comb period
        #[arg(long, default_value_t = 1.0)]
        period: f64,
        /// First characteristic (phase), as a fraction like 1/2
        #[arg(long, value_parser = parse_rational, default_value = "0")]
        v1: Rational64,
        /// Second characteristic (offset), as a fraction like 1/2
        #[arg(long, value_parser = parse_rational, default_value = "0")]
        v2: Rational64,
        /// Spike variance of each pulse
        #[arg(long, default_value_t = 0.01)]
        sigma2: f64,
        /// Evaluation range x_min x_max
        #[arg(long, num_args = 2, value_names = ["XMIN", "XMAX"], allow_negative_numbers = true,
              default_values_t = [-2.0, 2.0])]
        range: Vec<f64>,
        /// Number of evaluation points
        #[arg(long, default_value_t = 401)]
        samples: usize,
    },
}

/// State selection shared by the state-consuming subcommands: a named preset
/// with symmetric noise, or an explicit Bloch vector with full noise
/// parameters.
#[derive(Args)]
struct StateArgs {
    /// Named preset: zero|one|plus|minus|plusT|plusH|vacuum
    #[arg(long, visible_alias = "input", conflicts_with = "bloch", default_value = "zero")]
    preset: String,
    /// Explicit logical Bloch vector r1 r2 r3 (overrides --preset)
    #[arg(long, num_args = 3, value_names = ["R1", "R2", "R3"], allow_negative_numbers = true)]
    bloch: Option<Vec<f64>>,
    /// Symmetric noise parameter (spike variance is beta/2)
    #[arg(long, default_value_t = 0.04)]
    beta: f64,
    /// Position-quadrature noise (defaults to --beta)
    #[arg(long)]
    delta2: Option<f64>,
    /// Momentum-quadrature noise (defaults to --beta)
    #[arg(long)]
    kappa2: Option<f64>,
    /// Rotation angle of the noise ellipse
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phi: f64,
}

impl StateArgs {
    fn to_spec(&self) -> Result<StateSpec, Error> {
        match &self.bloch {
            Some(r) => Ok(StateSpec::Explicit {
                r: [r[0], r[1], r[2]],
                delta2: self.delta2.unwrap_or(self.beta),
                kappa2: self.kappa2.unwrap_or(self.beta),
                phi: self.phi,
            }),
            None => {
                if self.delta2.is_some() || self.kappa2.is_some() || self.phi != 0.0 {
                    return Err(Error::InvalidInput(
                        "asymmetric noise (--delta2/--kappa2/--phi) needs an explicit --bloch state"
                            .into(),
                    ));
                }
                Ok(StateSpec::Preset {
                    preset: Preset::parse(&self.preset)?,
                    beta: self.beta,
                })
            }
        }
    }
}

/// Grid and artifact options shared by every subcommand.
#[derive(Args)]
struct OutputArgs {
    /// Window half-width in units of sqrt(pi)
    #[arg(long, default_value_t = 3.0)]
    window: f64,
    /// Grid resolution per axis
    #[arg(long, default_value_t = 256)]
    res: usize,
    /// Artifact format: csv|pgm|json
    #[arg(long, value_parser = parse_format, default_value = "json")]
    format: OutputFormat,
    /// Output stem; artifacts append extensions (required for csv/pgm)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Relative truncation tolerance of the lattice sums
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    OutputFormat::parse(s).map_err(|e| e.to_string())
}

fn parse_order(s: &str) -> Result<RakeOrder, String> {
    match s {
        "q-then-p" | "qp" => Ok(RakeOrder::QThenP),
        "p-then-q" | "pq" => Ok(RakeOrder::PThenQ),
        other => Err(format!("unknown rake order '{other}' (expected q-then-p|p-then-q)")),
    }
}

fn parse_ancilla(s: &str) -> Result<AncillaChoice, String> {
    if s == "ideal" {
        return Ok(AncillaChoice::Ideal);
    }
    s.parse::<f64>()
        .map(AncillaChoice::Beta)
        .map_err(|_| format!("ancilla '{s}' is neither 'ideal' nor a noise parameter"))
}

fn parse_rational(s: &str) -> Result<Rational64, String> {
    let parse_int = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|_| format!("'{t}' is not an integer"))
    };
    match s.split_once('/') {
        None => Ok(Rational64::new(parse_int(s)?, 1)),
        Some((n, d)) => {
            let denom = parse_int(d)?;
            if denom == 0 {
                return Err("rational with zero denominator".into());
            }
            Ok(Rational64::new(parse_int(n)?, denom))
        }
    }
}

fn build_job(cli: CliCommand) -> Result<RenderJob, Error> {
    let (command, state, out) = match cli {
        CliCommand::Wigner { state, out } => (JobCommand::Wigner, state.to_spec()?, out),
        CliCommand::Ec { state, out, syndrome, ancilla_beta, order } => (
            JobCommand::Ec {
                syndrome: (syndrome[0], syndrome[1]),
                ancilla_beta,
                order,
            },
            state.to_spec()?,
            out,
        ),
        CliCommand::Magic { state, out, m, ancilla } => (
            JobCommand::Magic { m: (m[0], m[1]), ancilla },
            state.to_spec()?,
            out,
        ),
        CliCommand::Bloch { state, out } => (JobCommand::Bloch, state.to_spec()?, out),
        CliCommand::Theta { out, period, v1, v2, sigma2, range, samples } => (
            JobCommand::Theta(ThetaParams {
                period,
                v1,
                v2,
                sigma2,
                x_min: range[0],
                x_max: range[1],
                samples,
            }),
            // The theta command has no state; any valid placeholder works and
            // is echoed in the metadata as the (unused) default.
            StateSpec::Preset { preset: Preset::Vacuum, beta: 0.04 },
            out,
        ),
    };
    Ok(RenderJob {
        command,
        state,
        window_sqrt_pi: out.window,
        resolution: out.res,
        format: out.format,
        output: out.output,
        rel_tol: out.rel_tol,
    })
}

fn init_thread_pool() {
    if let Ok(raw) = std::env::var("GKP_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => {
                // Ignore the error if a pool already exists (e.g. under test).
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("gkp: ignoring GKP_THREADS='{raw}' (want a positive integer)"),
        }
    }
}

fn exit_code_for(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::InvalidSpec => 2,
        ErrorClass::Physics => 3,
        ErrorClass::NumericGuard => 4,
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let job = match build_job(cli.command) {
        Ok(job) => job,
        Err(e) => {
            eprintln!("gkp: {e}");
            return ExitCode::from(exit_code_for(e.class()));
        }
    };
    match run(&job) {
        Ok(summary) => {
            for path in &summary.artifacts {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gkp: {e}");
            ExitCode::from(exit_code_for(e.class()))
        }
    }
}
