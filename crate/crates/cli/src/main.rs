//! Command-line front end for the non-Hermitian tridiagonal spectral
//! solvers: model construction, spectra, singular values, Green's
//! functions, exceptional-point scans and parameter sweeps, with
//! machine-readable JSON/CSV output.

mod commands;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use commands::{CliErr, ModelSource, SvMethod, SvOptions, SweepKind};

#[derive(Parser)]
#[command(
    name = "nhspectra",
    version,
    about = "Spectra, singular values and continued-fraction Green's functions of non-Hermitian tridiagonal models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    /// Write the report to this path instead of standard output
    #[arg(long, value_name = "PATH", global = true)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    /// Non-Hermitian Bose-Hubbard model with this many particles
    /// (imbalance i*gamma, hopping --v, interaction --c)
    #[arg(long, value_name = "PARTICLES", group = "model")]
    ubh: Option<usize>,
    /// Bose-Hubbard model with this many particles and complex couplings
    #[arg(long, value_name = "PARTICLES", group = "model")]
    bh: Option<usize>,
    /// The fixed five-level model that is not of Bose-Hubbard type
    #[arg(long, group = "model")]
    nonbh5: bool,
    /// Read the model from a document file
    #[arg(long, value_name = "PATH", group = "model")]
    file: Option<PathBuf>,
    /// Imbalance parameter
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// On-site imbalance for --bh: re [im]
    #[arg(long, num_args = 1..=2, value_name = "RE [IM]", allow_negative_numbers = true)]
    epsilon: Option<Vec<f64>>,
    /// Hopping strength: re [im] (imaginary part only with --bh)
    #[arg(long, num_args = 1..=2, value_name = "RE [IM]", allow_negative_numbers = true)]
    v: Option<Vec<f64>>,
    /// Interaction strength: re [im] (imaginary part only with --bh)
    #[arg(long, num_args = 1..=2, value_name = "RE [IM]", allow_negative_numbers = true)]
    c: Option<Vec<f64>>,
}

impl ModelArgs {
    fn resolve(&self) -> Result<ModelSource, CliErr> {
        let complex = |xs: &Option<Vec<f64>>, default: Complex64| -> Complex64 {
            match xs {
                None => default,
                Some(v) if v.len() == 1 => Complex64::new(v[0], 0.0),
                Some(v) => Complex64::new(v[0], v[1]),
            }
        };
        let real_only = |xs: &Option<Vec<f64>>,
                         name: &str,
                         default: f64|
         -> Result<f64, CliErr> {
            let z = complex(xs, Complex64::new(default, 0.0));
            if z.im != 0.0 {
                return Err(CliErr::input(
                    "BAD_PARAMETER",
                    format!("--{name} must be real for this model"),
                ));
            }
            Ok(z.re)
        };
        if let Some(particles) = self.ubh {
            Ok(ModelSource::Ubh {
                particles,
                gamma: self.gamma,
                v: real_only(&self.v, "v", 1.0)?,
                c: real_only(&self.c, "c", 0.0)?,
            })
        } else if let Some(particles) = self.bh {
            let epsilon = match (&self.epsilon, self.gamma) {
                (Some(e), None) => complex(&Some(e.clone()), Complex64::new(0.0, 0.0)),
                (None, Some(g)) => Complex64::new(0.0, g),
                (None, None) => Complex64::new(0.0, 0.0),
                (Some(_), Some(_)) => {
                    return Err(CliErr::input(
                        "BAD_PARAMETER",
                        "--epsilon and --gamma are mutually exclusive for --bh",
                    ))
                }
            };
            Ok(ModelSource::Bh {
                particles,
                epsilon,
                v: complex(&self.v, Complex64::new(1.0, 0.0)),
                c: complex(&self.c, Complex64::new(0.0, 0.0)),
            })
        } else if self.nonbh5 {
            Ok(ModelSource::NonBh5 { gamma: self.gamma })
        } else if let Some(path) = &self.file {
            Ok(ModelSource::File {
                path: path.display().to_string(),
            })
        } else {
            Err(CliErr::input(
                "MISSING_MODEL",
                "select a model with --ubh, --bh, --nonbh5 or --file",
            ))
        }
    }
}

#[derive(Args)]
struct SvArgs {
    /// Root-finding method: matrix continued fractions or the dense
    /// product oracle
    #[arg(long, value_enum, default_value = "mcf")]
    method: MethodArg,
    /// Upper end of the search interval (default: twice the Gershgorin
    /// bound of the Hermitization)
    #[arg(long, value_name = "SIGMA")]
    sigma_max: Option<f64>,
    /// Number of grid cells for sign-change bracketing
    #[arg(long, default_value_t = 256)]
    grid: usize,
    /// Bisection tolerance on the root location
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mcf,
    Direct,
}

impl SvArgs {
    fn options(&self) -> SvOptions {
        SvOptions {
            method: match self.method {
                MethodArg::Mcf => SvMethod::Mcf,
                MethodArg::Direct => SvMethod::Direct,
            },
            sigma_max: self.sigma_max,
            grid: self.grid,
            tol: self.tol,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model and print a summary, or emit its document
    Model {
        #[command(flatten)]
        model: ModelArgs,
        /// Emit the model document instead of the summary
        #[arg(long)]
        emit: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Dense eigenvalues with determinant residuals
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Singular values via the Hermitized secular equation or the dense
    /// product
    SingularValues {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sv: SvArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Continued-fraction Green's function at one complex shift
    Green {
        #[command(flatten)]
        model: ModelArgs,
        /// Complex shift: re im
        #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true)]
        z: Vec<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Scan a gamma range for exceptional points
    EpScan {
        #[command(flatten)]
        model: ModelArgs,
        /// Scan interval: lo hi
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        range: Vec<f64>,
        /// Number of grid intervals
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Fixed points and tail iteration of the constant-coefficient map
    FixedPoint {
        /// Off-diagonal coefficient: re [im]
        #[arg(long, num_args = 1..=2, value_name = "RE [IM]", allow_negative_numbers = true, required = true)]
        alpha: Vec<f64>,
        /// Diagonal coefficient: re [im]
        #[arg(long, num_args = 1..=2, value_name = "RE [IM]", allow_negative_numbers = true, required = true)]
        beta: Vec<f64>,
        /// Energy shift: re [im]
        #[arg(long, num_args = 1..=2, value_name = "RE [IM]", allow_negative_numbers = true)]
        energy: Option<Vec<f64>>,
        /// Iteration start: re [im]
        #[arg(long, num_args = 1..=2, value_name = "RE [IM]", allow_negative_numbers = true)]
        f0: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evaluate a quantity over a parameter grid
    Sweep {
        #[command(subcommand)]
        quantity: SweepQuantity,
    },
}

#[derive(Subcommand)]
enum SweepQuantity {
    /// Eigenvalues over a gamma grid
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        /// Parameter interval: lo hi
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        range: Vec<f64>,
        /// Number of grid points (rows)
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Singular values over a gamma grid
    SingularValues {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        range: Vec<f64>,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[command(flatten)]
        sv: SvArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Green's function along a horizontal line in the complex plane
    Green {
        #[command(flatten)]
        model: ModelArgs,
        /// Real part interval of the shift: lo hi
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        z_real: Vec<f64>,
        /// Fixed imaginary part of the shift
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        z_imag: f64,
        /// Number of grid points (rows)
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn pair(xs: &[f64]) -> (f64, f64) {
    (xs[0], xs[1])
}

fn complex_arg(xs: &Option<Vec<f64>>, default: Complex64) -> Complex64 {
    match xs {
        None => default,
        Some(v) if v.len() == 1 => Complex64::new(v[0], 0.0),
        Some(v) => Complex64::new(v[0], v[1]),
    }
}

fn run(cli: Cli) -> Result<(), CliErr> {
    let (report, out) = match &cli.command {
        Command::Model { model, emit, out } => {
            (commands::run_model(&model.resolve()?, *emit)?, out)
        }
        Command::Spectrum { model, out } => (commands::run_spectrum(&model.resolve()?)?, out),
        Command::SingularValues { model, sv, out } => (
            commands::run_singular_values(&model.resolve()?, &sv.options())?,
            out,
        ),
        Command::Green { model, z, out } => {
            let z = Complex64::new(z[0], z[1]);
            (commands::run_green(&model.resolve()?, z)?, out)
        }
        Command::EpScan {
            model,
            range,
            steps,
            out,
        } => (
            commands::run_ep_scan(&model.resolve()?, pair(range), *steps)?,
            out,
        ),
        Command::FixedPoint {
            alpha,
            beta,
            energy,
            f0,
            max_iter,
            tol,
            out,
        } => {
            let zero = Complex64::new(0.0, 0.0);
            (
                commands::run_fixed_point(
                    complex_arg(&Some(alpha.clone()), zero),
                    complex_arg(&Some(beta.clone()), zero),
                    complex_arg(energy, zero),
                    complex_arg(f0, zero),
                    *max_iter,
                    *tol,
                )?,
                out,
            )
        }
        Command::Sweep { quantity } => match quantity {
            SweepQuantity::Spectrum {
                model,
                range,
                steps,
                out,
            } => (
                commands::run_sweep(
                    &model.resolve()?,
                    &SweepKind::Spectrum,
                    Some(pair(range)),
                    *steps,
                )?,
                out,
            ),
            SweepQuantity::SingularValues {
                model,
                range,
                steps,
                sv,
                out,
            } => (
                commands::run_sweep(
                    &model.resolve()?,
                    &SweepKind::SingularValues(sv.options()),
                    Some(pair(range)),
                    *steps,
                )?,
                out,
            ),
            SweepQuantity::Green {
                model,
                z_real,
                z_imag,
                steps,
                out,
            } => (
                commands::run_sweep(
                    &model.resolve()?,
                    &SweepKind::Green {
                        z_real: pair(z_real),
                        z_imag: *z_imag,
                    },
                    None,
                    *steps,
                )?,
                out,
            ),
        },
    };

    let text = report.render(matches!(out.format, Format::Csv));
    match &out.output {
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliErr {
                    code: "IO_ERROR",
                    message: e.to_string(),
                    exit: 1,
                })?;
        }
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliErr {
                code: "IO_ERROR",
                message: format!("cannot write {}: {e}", path.display()),
                exit: 1,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({
                "error": { "code": e.code, "message": e.message }
            });
            eprintln!("{}", output::to_json_string(&payload));
            ExitCode::from(e.exit)
        }
    }
}
