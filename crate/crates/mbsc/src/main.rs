//! Command-line front end: envelope sweeps, the gate phase-split verifier,
//! the two-mode cluster experiment, and single-state logical diagnostics.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 resource
//! guard.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use mbsc::cluster::{self, GraphAdjacency, MeasurementPolicy};
use mbsc::error::Error;
use mbsc::gkp::{self, ApproxGkpParams, SweepGridPolicy};
use mbsc::grid::PositionGrid;
use mbsc::modular::BinSpec;
use mbsc::states::ModeWavefunction;
use mbsc::{analysis, approx_gkp_state};

const EXIT_VERIFY: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_RESOURCE: i32 = 3;

#[derive(Parser)]
#[command(name = "mbsc", version, about = "modular-position subsystem diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the envelope parameter of an equal-superposition grid-code
    /// state and record logical diagnostics.
    GkpSweep(GkpSweepArgs),
    /// Check the subsystem phase split of the position-controlled phase
    /// gate at alpha = sqrt(pi) on random samples.
    VerifyCz(VerifyCzArgs),
    /// Run the two-mode cluster distillation experiment.
    Cluster2(Cluster2Args),
    /// Print logical diagnostics of a single-mode state.
    Logical(LogicalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args)]
struct GkpSweepArgs {
    /// Spike width.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.05)]
    kappa_min: f64,
    #[arg(long, default_value_t = 2.0)]
    kappa_max: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Log)]
    spacing: Spacing,
    /// Bin size: a number or the token "sqrt-pi".
    #[arg(long, default_value = "sqrt-pi")]
    alpha: String,
    #[arg(long)]
    points_per_bin: Option<usize>,
    #[arg(long)]
    n_bins: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyCzArgs {
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "sqrt-pi")]
    alpha: String,
    #[arg(long, default_value_t = 16)]
    points_per_bin: usize,
    #[arg(long, default_value_t = 8)]
    n_bins: usize,
}

#[derive(Args)]
struct Cluster2Args {
    /// Position standard deviation of the input Gaussians, in bin units.
    #[arg(long, default_value_t = 3.0)]
    sigma_bins: f64,
    #[arg(long, default_value_t = 16)]
    points_per_bin: usize,
    #[arg(long, default_value_t = 8)]
    n_bins: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Post-select this offset class on both modes instead of sampling.
    #[arg(long)]
    outcome_class: Option<usize>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LogicalArgs {
    /// One of gkp(a,b,delta,kappa), gaussian(center,variance),
    /// psqueezed(p_variance), file(path).
    #[arg(long)]
    state: String,
    #[arg(long, default_value = "sqrt-pi")]
    alpha: String,
    #[arg(long, default_value_t = 16)]
    points_per_bin: usize,
    #[arg(long, default_value_t = 16)]
    n_bins: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_alpha(token: &str) -> Result<f64, Error> {
    if token == "sqrt-pi" {
        return Ok(std::f64::consts::PI.sqrt());
    }
    token
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("alpha must be a number or \"sqrt-pi\", got {token:?}")))
}

fn write_output(path: &Option<PathBuf>, data: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, data)?,
        None => std::io::stdout().write_all(data)?,
    }
    Ok(())
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::ResourceGuard(_) => EXIT_RESOURCE,
        _ => EXIT_USAGE,
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::GkpSweep(a) => run_gkp_sweep(&a),
        Command::VerifyCz(a) => run_verify_cz(&a),
        Command::Cluster2(a) => run_cluster2(&a),
        Command::Logical(a) => run_logical(&a),
    };
    std::process::exit(code.unwrap_or_else(|e| {
        eprintln!("mbsc: {e}");
        exit_code_for(&e)
    }));
}

fn kappa_values(args: &GkpSweepArgs) -> Result<Vec<f64>, Error> {
    if args.steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    if !(args.kappa_min > 0.0 && args.kappa_max >= args.kappa_min) {
        return Err(Error::Config(format!(
            "need 0 < kappa_min <= kappa_max, got [{}, {}]",
            args.kappa_min, args.kappa_max
        )));
    }
    if args.steps == 1 {
        return Ok(vec![args.kappa_min]);
    }
    let n = args.steps;
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            match args.spacing {
                Spacing::Linear => args.kappa_min + t * (args.kappa_max - args.kappa_min),
                Spacing::Log => {
                    (args.kappa_min.ln() + t * (args.kappa_max.ln() - args.kappa_min.ln())).exp()
                }
            }
        })
        .collect())
}

fn run_gkp_sweep(args: &GkpSweepArgs) -> Result<i32, Error> {
    let spec = BinSpec::new(parse_alpha(&args.alpha)?)?;
    let kappas = kappa_values(args)?;
    let policy = SweepGridPolicy {
        points_per_bin_override: args.points_per_bin,
        n_bins_override: args.n_bins,
    };
    let records = gkp::kappa_sweep(args.delta, &kappas, spec, policy);
    let mut buf = Vec::new();
    match args.format {
        Format::Csv => gkp::write_sweep_csv(&records, &mut buf)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &records)
                .map_err(|e| Error::Parse(e.to_string()))?;
            buf.push(b'\n');
        }
        Format::Svg => {
            let fidelity: Vec<(f64, f64)> =
                records.iter().map(|r| (r.kappa, r.fidelity_plus)).collect();
            let purity: Vec<(f64, f64)> = records.iter().map(|r| (r.kappa, r.purity)).collect();
            buf = render_svg(&[("fidelity_plus", &fidelity), ("purity", &purity)]).into_bytes();
        }
    }
    write_output(&args.output, &buf)?;
    Ok(0)
}

fn run_verify_cz(args: &VerifyCzArgs) -> Result<i32, Error> {
    let alpha = parse_alpha(&args.alpha)?;
    if (alpha - std::f64::consts::PI.sqrt()).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "the phase split holds only at alpha = sqrt(pi); got {alpha}"
        )));
    }
    let grid = PositionGrid::new(alpha, args.points_per_bin, args.n_bins)?;
    let pair_err = cluster::pair_phase_error(&grid, args.samples, args.seed)?;
    let chain_err =
        cluster::graph_phase_error(&grid, &GraphAdjacency::line(5), args.samples / 100 + 1, args.seed)?;
    println!("pair samples: {}  max |phase mismatch|: {pair_err:.3e}", args.samples);
    println!(
        "5-mode chain samples: {}  max |phase mismatch|: {chain_err:.3e}",
        args.samples / 100 + 1
    );
    Ok(if pair_err.max(chain_err) <= 1e-10 { 0 } else { EXIT_VERIFY })
}

fn run_cluster2(args: &Cluster2Args) -> Result<i32, Error> {
    let policy = match args.outcome_class {
        Some(class) => MeasurementPolicy::Fixed { class },
        None => MeasurementPolicy::Sampled { seed: args.seed },
    };
    let sigma = args.sigma_bins * std::f64::consts::PI.sqrt();
    let report =
        cluster::hidden_cluster_experiment(sigma, args.points_per_bin, args.n_bins, policy)?;
    let mut buf =
        serde_json::to_vec_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
    buf.push(b'\n');
    write_output(&args.output, &buf)?;
    Ok(0)
}

fn build_state(args: &LogicalArgs) -> Result<ModeWavefunction, Error> {
    let (name, inner) = args
        .state
        .trim()
        .strip_suffix(')')
        .and_then(|s| s.split_once('('))
        .ok_or_else(|| {
            Error::Parse(format!("malformed state spec {:?}; expected name(args)", args.state))
        })?;
    let nums = |expect: usize| -> Result<Vec<f64>, Error> {
        let vals = inner
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("bad number in state spec: {e}")))?;
        if vals.len() != expect {
            return Err(Error::Parse(format!(
                "{name} takes {expect} arguments, got {}",
                vals.len()
            )));
        }
        Ok(vals)
    };
    let spec = BinSpec::new(parse_alpha(&args.alpha)?)?;
    let grid = || PositionGrid::new(spec.alpha(), args.points_per_bin, args.n_bins);
    match name {
        "gkp" => {
            let v = nums(4)?;
            let params = ApproxGkpParams::new(
                Complex64::new(v[0], 0.0),
                Complex64::new(v[1], 0.0),
                v[2],
                v[3],
                spec,
            )?;
            let auto = SweepGridPolicy::default().grid_for(v[2], v[3], spec)?;
            approx_gkp_state(auto, &params)
        }
        "gaussian" => {
            let v = nums(2)?;
            ModeWavefunction::gaussian(grid()?, v[0], v[1])
        }
        "psqueezed" => {
            let v = nums(1)?;
            ModeWavefunction::momentum_squeezed(grid()?, v[0])
        }
        "file" => {
            let f = std::fs::File::open(inner.trim())?;
            ModeWavefunction::read_text(std::io::BufReader::new(f))
        }
        other => Err(Error::Parse(format!("unknown state kind {other:?}"))),
    }
}

fn run_logical(args: &LogicalArgs) -> Result<i32, Error> {
    let wf = build_state(args)?;
    let rho = analysis::gauge_trace(&wf)?;
    let (x, y, z) = rho.bloch_vector();
    let schmidt = analysis::schmidt_data(&wf)?;
    let out = serde_json::json!({
        "rho_logical": rho.to_json(),
        "bloch": [x, y, z],
        "purity": rho.purity(),
        "schmidt_entropy_bits": schmidt.entropy_bits,
    });
    let mut buf =
        serde_json::to_vec_pretty(&out).map_err(|e| Error::Parse(e.to_string()))?;
    buf.push(b'\n');
    write_output(&args.output, &buf)?;
    Ok(0)
}

/// Minimal SVG line plot: fixed viewport, log-x axis, one polyline per
/// series. Convenience output only; CSV is the contractual format.
fn render_svg(series: &[(&str, &[(f64, f64)])]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 440.0;
    const M: f64 = 50.0;
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.0))
        .filter(|v| v.is_finite() && *v > 0.0)
        .collect();
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let lx = |x: f64| {
        let t = if xmax > xmin { (x.ln() - xmin.ln()) / (xmax.ln() - xmin.ln()) } else { 0.5 };
        M + t * (W - 2.0 * M)
    };
    let ly = |y: f64| H - M - y.clamp(0.0, 1.0) * (H - 2.0 * M);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <line x1=\"{M}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{0}\" stroke=\"black\"/>\n",
        H - M,
        W - M
    );
    let colors = ["#1f77b4", "#d62728", "#2ca02c"];
    for (i, (label, pts)) in series.iter().enumerate() {
        let path: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", lx(x), ly(y)))
            .collect();
        let color = colors[i % colors.len()];
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" points=\"{}\"/>\n\
             <text x=\"{}\" y=\"{}\" fill=\"{color}\" font-size=\"14\">{label}</text>\n",
            path.join(" "),
            W - M - 120.0,
            M + 20.0 * (i + 1) as f64
        ));
    }
    s.push_str("</svg>\n");
    s
}
