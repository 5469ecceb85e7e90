use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, ValueEnum};
use qconic::io::{read_cbf, read_sdpa, write_solution_json, Format};
use qconic::ipm::{solve, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Auto,
    Sdpa,
    Cbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InvHess {
    Auto,
    True,
    False,
}

/// Solve a conic program stored in an SDPA (.dat-s, .dat-c) or CBF (.cbf) file.
#[derive(Debug, Parser)]
#[command(name = "qconic", version)]
struct Cli {
    /// Problem file.
    input: PathBuf,
    /// Input format; `auto` picks it from the file suffix.
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    format: FormatArg,
    /// Write the JSON solution report here.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Time limit in seconds.
    #[arg(long)]
    max_time: Option<f64>,
    #[arg(long)]
    tol_gap: Option<f64>,
    #[arg(long)]
    tol_feas: Option<f64>,
    #[arg(long)]
    tol_infeas: Option<f64>,
    #[arg(long)]
    tol_ip: Option<f64>,
    #[arg(long)]
    tol_near: Option<f64>,
    /// 0 silent, 1 summaries, 2 iteration table, 3 stepper internals.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
    verbose: Option<u8>,
    /// Disable iterative refinement.
    #[arg(long)]
    no_ir: bool,
    /// Disable the third-order correction.
    #[arg(long)]
    no_toa: bool,
    #[arg(long, value_enum, default_value_t = InvHess::Auto)]
    use_invhess: InvHess,
}

impl Cli {
    fn settings(&self) -> SolverSettings {
        let d = SolverSettings::default();
        SolverSettings {
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            max_time: self.max_time.unwrap_or(d.max_time),
            tol_gap: self.tol_gap.unwrap_or(d.tol_gap),
            tol_feas: self.tol_feas.unwrap_or(d.tol_feas),
            tol_infeas: self.tol_infeas.unwrap_or(d.tol_infeas),
            tol_ip: self.tol_ip.unwrap_or(d.tol_ip),
            tol_near: self.tol_near.unwrap_or(d.tol_near),
            verbose: self.verbose.unwrap_or(d.verbose),
            ir: !self.no_ir,
            toa: !self.no_toa,
            use_invhess: match self.use_invhess {
                InvHess::Auto => None,
                InvHess::True => Some(true),
                InvHess::False => Some(false),
            },
            ..d
        }
    }
}

fn usage_error(msg: String) -> ExitCode {
    eprintln!("error: {msg}\n\n{}", Cli::command().render_usage());
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = cli.input.display().to_string();
    let format = match cli.format {
        FormatArg::Cbf => Format::Cbf,
        FormatArg::Sdpa => Format::Sdpa { complex: path.to_ascii_lowercase().ends_with(".dat-c") },
        FormatArg::Auto => match Format::from_path(&path) {
            Some(f) => f,
            None => return usage_error(format!("cannot infer the format of `{path}`; pass --format")),
        },
    };
    let text = match std::fs::read_to_string(&cli.input) {
        Ok(t) => t,
        Err(e) => return usage_error(format!("cannot read `{path}`: {e}")),
    };
    let model = match format {
        Format::Cbf => read_cbf(&text),
        Format::Sdpa { complex } => read_sdpa(&text, complex),
    };
    let model = match model {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {path}: {e}");
            return ExitCode::from(2);
        }
    };
    let report = solve(&model, &cli.settings());
    if let Some(out) = &cli.output {
        if let Err(e) = std::fs::write(out, write_solution_json(&report, &model.cones)) {
            eprintln!("error: cannot write `{}`: {e}", out.display());
            return ExitCode::from(1);
        }
    }
    if report.sol_status.is_certified() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
