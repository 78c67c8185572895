use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use critrel::commands::{
    cmd_analyze, cmd_certify, cmd_deficit_check, cmd_lattes_demo, cmd_pushforward, cmd_relations,
    outcome_for_error, parse_relation, parse_sigma, Options, Outcome,
};
use critrel::error::Result;
use critrel::fixtures::parse_complex;
use critrel::report::Report;

/// Numerical transversality certification for critical relations of
/// rational maps.
#[derive(Parser)]
#[command(name = "critrel", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Orbit horizon for relation detection.
    #[arg(long)]
    horizon: Option<usize>,
    /// Orbit coincidence tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for deterministic sample jitter and generic conjugations.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of sample points for push-forward residuals.
    #[arg(long, default_value_t = 24)]
    samples: usize,
    /// Emit a human-readable summary instead of JSON.
    #[arg(long)]
    pretty: bool,
    /// Emit JSON (the default; kept for explicitness).
    #[arg(long)]
    json: bool,
}

impl Common {
    fn options(&self) -> Options {
        let mut o = Options::default();
        if let Some(h) = self.horizon {
            o.horizon = h;
        }
        if let Some(t) = self.tol {
            o.tol = t;
        }
        o.seed = self.seed;
        o.samples = self.samples;
        o
    }
}

#[derive(Subcommand)]
enum Command {
    /// Degree, critical set, multiplicity signature and orbit table.
    Analyze {
        /// Fixture name, inline JSON, or path to a JSON map description.
        spec: String,
        #[command(flatten)]
        common: Common,
    },
    /// Detected relations, the constructed proper collection, and flags.
    Relations {
        spec: String,
        #[command(flatten)]
        common: Common,
    },
    /// Rank certification of the critical-relation Jacobian.
    Certify {
        spec: String,
        /// Chart: auto | rat | poly | family:const.
        #[arg(long, default_value = "auto")]
        chart: String,
        /// Moebius post-composition "a;b;c;d" (complex literals).
        #[arg(long)]
        sigma: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Relation differential and its push-forward invariance residual.
    Pushforward {
        spec: String,
        /// Relation as "i,j,m,n".
        #[arg(long)]
        relation: String,
        #[command(flatten)]
        common: Common,
    },
    /// Build the flexible degree-4 family member and demonstrate the rank
    /// defect and its invariant differential.
    LattesDemo {
        /// Family parameter as a complex literal, e.g. "2+0.5i".
        #[arg(long, default_value = "2")]
        a: String,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the push-forward deficit of a relation differential with the
    /// critical-value chart derivative sum.
    DeficitCheck {
        spec: String,
        /// Relation as "i,j,m,n"; defaults to the first constructed one.
        #[arg(long)]
        relation: Option<String>,
        /// Mismatch threshold for the pass verdict.
        #[arg(long, default_value_t = 1e-5)]
        threshold: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(Report, Outcome, Common)> {
    match cli.command {
        Command::Analyze { spec, common } => {
            let (r, o) = cmd_analyze(&spec, common.options())?;
            Ok((r, o, common))
        }
        Command::Relations { spec, common } => {
            let (r, o) = cmd_relations(&spec, common.options())?;
            Ok((r, o, common))
        }
        Command::Certify {
            spec,
            chart,
            sigma,
            common,
        } => {
            let sigma = sigma.as_deref().map(parse_sigma).transpose()?;
            let (r, o) = cmd_certify(&spec, &chart, sigma.as_ref(), common.options())?;
            Ok((r, o, common))
        }
        Command::Pushforward {
            spec,
            relation,
            common,
        } => {
            let rel = parse_relation(&relation)?;
            let (r, o) = cmd_pushforward(&spec, &rel, common.options())?;
            Ok((r, o, common))
        }
        Command::LattesDemo { a, common } => {
            let a = parse_complex(&a)?;
            let (r, o) = cmd_lattes_demo(a, common.options())?;
            Ok((r, o, common))
        }
        Command::DeficitCheck {
            spec,
            relation,
            threshold,
            common,
        } => {
            let rel = relation.as_deref().map(parse_relation).transpose()?;
            let (r, o) = cmd_deficit_check(&spec, rel, threshold, common.options())?;
            Ok((r, o, common))
        }
    }
}

fn render_pretty(report: &Report, elapsed_ms: u128) -> String {
    let mut out = String::new();
    out.push_str(&format!("command:   {}\n", report.command));
    out.push_str(&format!("input:     {}\n", report.input));
    for (name, value) in &report.tolerances {
        out.push_str(&format!("{name:<10} {value}\n"));
    }
    out.push_str(&format!(
        "results:\n{}\n",
        serde_json::to_string_pretty(&report.results).unwrap_or_default()
    ));
    out.push_str(&format!("wall_time_ms: {elapsed_ms}\n"));
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(cli) {
        Ok((report, outcome, common)) => {
            if common.pretty {
                print!("{}", render_pretty(&report, start.elapsed().as_millis()));
            } else {
                println!("{}", report.to_json());
            }
            match outcome {
                Outcome::Success => ExitCode::from(0),
                Outcome::CertifiedNegative => ExitCode::from(1),
                Outcome::InputError => ExitCode::from(2),
                Outcome::Uncertifiable => ExitCode::from(3),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match outcome_for_error(&e) {
                Outcome::InputError => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
