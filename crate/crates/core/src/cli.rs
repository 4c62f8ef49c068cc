//! Command-line front end.
//!
//! Subcommands:
//! - `fidelity-sweep` / `echo-sweep`: evaluate the configured quantity over
//!   a (γ, λ) grid and write CSV (plus optional gnuplot script). Options
//!   come from flags, from a flat `key = value` config file, or both; flags
//!   override file values.
//! - `mode-dump`: print per-mode ε, Δ, Λ, θ for one XY point.
//! - `oracle-check`: run the seeded analytic-vs-dense verification suites;
//!   exits 1 on any tolerance breach.
//!
//! Exit codes: 0 success, 1 runtime failure or tolerance breach, 2 bad
//! arguments or config.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::fidelity::{log_mode_partition, mode_fidelity, thermal_fidelity};
use crate::loschmidt::mode_echo;
use crate::model::{
    Beta, GridConvention, MomentumMode, QuasiFreeModel, ThermalStateSpec, XYParams,
};
use crate::oracle;
use crate::sweep::{emit_plot_script, run_sweep, write_csv, AxisRange, Quantity, SweepConfig};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "thermofid",
    version,
    about = "Finite-temperature fidelity and Loschmidt echo for quasi-free fermionic chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the mixed-state fidelity over a (gamma, lambda) grid
    FidelitySweep(SweepArgs),
    /// Sweep the thermal Loschmidt echo over a (gamma, lambda) grid at a fixed time
    EchoSweep(SweepArgs),
    /// Print per-mode epsilon, delta, Lambda, theta for one XY point
    ModeDump(ModeDumpArgs),
    /// Cross-check the analytic formulas against the dense-matrix oracle
    OracleCheck(OracleCheckArgs),
}

#[derive(Args, Default)]
struct SweepArgs {
    /// Flat key=value config file mirroring these flags; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Even chain length N [default: 200]
    #[arg(long)]
    n_sites: Option<usize>,
    /// Momentum grid convention [default: integer]
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridConvention>,
    /// Fix the anisotropy (degenerate gamma axis) [default: 1]
    #[arg(long, conflicts_with = "gamma_range")]
    gamma: Option<f64>,
    /// Sweep the anisotropy: MIN:MAX:STEPS
    #[arg(long, value_parser = parse_axis)]
    gamma_range: Option<AxisRange>,
    /// Fix the transverse field (degenerate lambda axis)
    #[arg(long, conflicts_with = "lambda_range")]
    lambda: Option<f64>,
    /// Sweep the transverse field: MIN:MAX:STEPS [default: 0:2:201]
    #[arg(long, value_parser = parse_axis)]
    lambda_range: Option<AxisRange>,
    /// Anisotropy perturbation delta-gamma [default: 0.01]
    #[arg(long)]
    delta_gamma: Option<f64>,
    /// Field perturbation delta-lambda [default: 0.01]
    #[arg(long)]
    delta_lambda: Option<f64>,
    /// Inverse temperature; repeat for several curves [default: 1 10 20 100]
    #[arg(long = "beta")]
    beta: Vec<f64>,
    /// Echo evaluation time (echo sweeps only) [default: 10]
    #[arg(long)]
    time: Option<f64>,
    /// Output CSV path [default: <quantity>_sweep.csv]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct ModeDumpArgs {
    #[arg(long)]
    n_sites: usize,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, value_parser = parse_grid, default_value = "integer")]
    grid: GridConvention,
}

#[derive(Args)]
struct OracleCheckArgs {
    /// Seed for all random draws
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of fidelity draws (echo uses half as many)
    #[arg(long, default_value_t = 1000)]
    draws: usize,
}

fn parse_grid(s: &str) -> std::result::Result<GridConvention, String> {
    GridConvention::parse(s).map_err(|e| e.to_string())
}

fn parse_axis(s: &str) -> std::result::Result<AxisRange, String> {
    AxisRange::parse(s).map_err(|e| e.to_string())
}

/// Entry point behind `main`. Returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(err @ Error::Config { .. }) => {
            eprintln!("error: {err}");
            2
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn run_command(command: Command) -> Result<i32> {
    match command {
        Command::FidelitySweep(args) => run_sweep_command(args, Quantity::Fidelity),
        Command::EchoSweep(args) => run_sweep_command(args, Quantity::Echo),
        Command::ModeDump(args) => run_mode_dump(args),
        Command::OracleCheck(args) => Ok(run_oracle_check(args)),
    }
}

/// Option set shared by the config file and the flags, merged in
/// flags-over-file order before defaults fill the rest.
#[derive(Default)]
struct PartialSweep {
    n_sites: Option<usize>,
    grid: Option<GridConvention>,
    gamma_axis: Option<AxisRange>,
    lambda_axis: Option<AxisRange>,
    delta_gamma: Option<f64>,
    delta_lambda: Option<f64>,
    beta: Option<Vec<f64>>,
    time: Option<f64>,
    out: Option<PathBuf>,
    plot: Option<bool>,
}

impl PartialSweep {
    fn merged_over(self, fallback: PartialSweep) -> PartialSweep {
        PartialSweep {
            n_sites: self.n_sites.or(fallback.n_sites),
            grid: self.grid.or(fallback.grid),
            gamma_axis: self.gamma_axis.or(fallback.gamma_axis),
            lambda_axis: self.lambda_axis.or(fallback.lambda_axis),
            delta_gamma: self.delta_gamma.or(fallback.delta_gamma),
            delta_lambda: self.delta_lambda.or(fallback.delta_lambda),
            beta: self.beta.or(fallback.beta),
            time: self.time.or(fallback.time),
            out: self.out.or(fallback.out),
            plot: self.plot.or(fallback.plot),
        }
    }
}

fn config_err(field: &'static str, message: impl Into<String>) -> Error {
    Error::Config {
        field,
        message: message.into(),
    }
}

fn parse_config_file(path: &PathBuf) -> Result<PartialSweep> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let mut p = PartialSweep::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            config_err(
                "config",
                format!("line {}: expected key = value", lineno + 1),
            )
        })?;
        let (key, value) = (key.trim(), value.trim());
        let bad =
            |what: &str| config_err("config", format!("line {}: {what} `{value}`", lineno + 1));
        match key {
            "n-sites" => p.n_sites = Some(value.parse().map_err(|_| bad("bad integer"))?),
            "grid" => p.grid = Some(GridConvention::parse(value)?),
            "gamma" => {
                p.gamma_axis = Some(AxisRange::degenerate(
                    value.parse().map_err(|_| bad("bad number"))?,
                ))
            }
            "gamma-range" => p.gamma_axis = Some(AxisRange::parse(value)?),
            "lambda" => {
                p.lambda_axis = Some(AxisRange::degenerate(
                    value.parse().map_err(|_| bad("bad number"))?,
                ))
            }
            "lambda-range" => p.lambda_axis = Some(AxisRange::parse(value)?),
            "delta-gamma" => p.delta_gamma = Some(value.parse().map_err(|_| bad("bad number"))?),
            "delta-lambda" => p.delta_lambda = Some(value.parse().map_err(|_| bad("bad number"))?),
            "beta" => {
                let betas: std::result::Result<Vec<f64>, _> =
                    value.split(',').map(|v| v.trim().parse()).collect();
                p.beta = Some(betas.map_err(|_| bad("bad beta list"))?);
            }
            "time" => p.time = Some(value.parse().map_err(|_| bad("bad number"))?),
            "out" => p.out = Some(PathBuf::from(value)),
            "plot" => p.plot = Some(value.parse().map_err(|_| bad("bad boolean"))?),
            other => {
                return Err(config_err(
                    "config",
                    format!("line {}: unknown key `{other}`", lineno + 1),
                ))
            }
        }
    }
    Ok(p)
}

fn resolve_sweep_config(args: SweepArgs, quantity: Quantity) -> Result<SweepConfig> {
    let from_file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => PartialSweep::default(),
    };
    let from_flags = PartialSweep {
        n_sites: args.n_sites,
        grid: args.grid,
        gamma_axis: args.gamma.map(AxisRange::degenerate).or(args.gamma_range),
        lambda_axis: args.lambda.map(AxisRange::degenerate).or(args.lambda_range),
        delta_gamma: args.delta_gamma,
        delta_lambda: args.delta_lambda,
        beta: if args.beta.is_empty() {
            None
        } else {
            Some(args.beta)
        },
        time: args.time,
        out: args.out,
        plot: if args.plot { Some(true) } else { None },
    };
    let merged = from_flags.merged_over(from_file);

    let default_out = match quantity {
        Quantity::Fidelity => "fidelity_sweep.csv",
        Quantity::Echo => "echo_sweep.csv",
    };
    let config = SweepConfig {
        n_sites: merged.n_sites.unwrap_or(200),
        grid: merged.grid.unwrap_or(GridConvention::Integer),
        gamma_range: merged.gamma_axis.unwrap_or(AxisRange::degenerate(1.0)),
        lambda_range: merged.lambda_axis.unwrap_or(AxisRange::new(0.0, 2.0, 201)),
        delta_gamma: merged.delta_gamma.unwrap_or(0.01),
        delta_lambda: merged.delta_lambda.unwrap_or(0.01),
        beta_list: merged.beta.unwrap_or_else(|| vec![1.0, 10.0, 20.0, 100.0]),
        quantity,
        echo_time: match quantity {
            Quantity::Echo => Some(merged.time.unwrap_or(10.0)),
            Quantity::Fidelity => {
                if merged.time.is_some() {
                    return Err(config_err("time", "only meaningful for echo sweeps"));
                }
                None
            }
        },
        output_path: merged.out.unwrap_or_else(|| PathBuf::from(default_out)),
        emit_plot_script: merged.plot.unwrap_or(false),
    };
    config.validate()?;
    Ok(config)
}

fn run_sweep_command(args: SweepArgs, quantity: Quantity) -> Result<i32> {
    let config = resolve_sweep_config(args, quantity)?;
    let result = run_sweep(&config)?;
    write_csv(&result, &config.output_path)?;
    println!(
        "wrote {} rows to {} ({} of {} grid points failed)",
        result.rows.len(),
        config.output_path.display(),
        result.errors.len(),
        config.row_count()
    );
    for e in &result.errors {
        eprintln!(
            "warning: beta={} gamma={} lambda={}: {}",
            e.beta, e.gamma, e.lambda, e.message
        );
    }
    if config.emit_plot_script {
        let script_path = config.output_path.with_extension("gp");
        emit_plot_script(&result, &script_path)?;
        println!("wrote plot script to {}", script_path.display());
    }
    Ok(0)
}

fn run_mode_dump(args: ModeDumpArgs) -> Result<i32> {
    let params = XYParams::new(args.gamma, args.lambda, args.n_sites, args.grid)?;
    let model = params.to_quasifree();
    println!("# j epsilon delta lambda theta");
    for (j, m) in model.modes().iter().enumerate() {
        println!(
            "{} {:.16e} {:.16e} {:.16e} {:.16e}",
            j + 1,
            m.epsilon(),
            m.delta(),
            m.lambda(),
            m.theta()
        );
    }
    Ok(0)
}

struct Suite {
    name: &'static str,
    tolerance: f64,
    max_deviation: f64,
    draws: usize,
}

impl Suite {
    fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

fn random_mode(rng: &mut StdRng) -> MomentumMode {
    let lambda = rng.gen_range(0.0..5.0);
    let theta = rng.gen_range(-PI..PI);
    MomentumMode::new(lambda * theta.cos(), lambda * theta.sin()).expect("finite draw")
}

fn run_oracle_check(args: OracleCheckArgs) -> i32 {
    let mut rng = StdRng::seed_from_u64(args.seed);
    let draws = args.draws.max(1);
    println!("oracle-check: seed {}, {} draws", args.seed, draws);

    // per-mode fidelity against the dense 4x4 Uhlmann route
    let mut fid = Suite {
        name: "fidelity vs dense oracle",
        tolerance: 1e-10,
        max_deviation: 0.0,
        draws,
    };
    for _ in 0..draws {
        let m0 = random_mode(&mut rng);
        let m1 = random_mode(&mut rng);
        let b0 = rng.gen_range(0.01..50.0);
        let b1 = rng.gen_range(0.01..50.0);
        let analytic = mode_fidelity(&m0, &m1, b0, b1);
        let dense = oracle::dense_thermal_fidelity(&m0, &m1, b0, b1).expect("in oracle regime");
        fid.max_deviation = fid.max_deviation.max((analytic - dense).abs());
    }

    // per-mode echo against the unsimplified dense conjugation route
    let echo_draws = (draws / 2).max(1);
    let mut echo = Suite {
        name: "echo vs dense oracle",
        tolerance: 1e-10,
        max_deviation: 0.0,
        draws: echo_draws,
    };
    for _ in 0..echo_draws {
        let m0 = random_mode(&mut rng);
        let m1 = random_mode(&mut rng);
        let beta = rng.gen_range(0.01..50.0);
        let t = rng.gen_range(0.0..20.0);
        let analytic = mode_echo(&m0, &m1, beta, t);
        let dense = oracle::dense_echo(&m0, &m1, beta, t).expect("in oracle regime");
        echo.max_deviation = echo.max_deviation.max((analytic - dense).abs());
    }

    // identical models at two temperatures: partition-function identity
    let mut zid = Suite {
        name: "partition-function identity",
        tolerance: 1e-12,
        max_deviation: 0.0,
        draws: 100,
    };
    for _ in 0..zid.draws {
        let m = random_mode(&mut rng);
        let b0 = rng.gen_range(0.01..50.0);
        let b1 = rng.gen_range(0.01..50.0);
        let model = QuasiFreeModel::new(vec![m]).expect("non-empty");
        let s0 = ThermalStateSpec::new(model.clone(), Beta::Finite(b0)).expect("valid beta");
        let s1 = ThermalStateSpec::new(model, Beta::Finite(b1)).expect("valid beta");
        let total = thermal_fidelity(&s0, &s1).expect("comparable").total;
        let reference = (log_mode_partition(m.lambda(), 0.5 * (b0 + b1))
            - 0.5 * (log_mode_partition(m.lambda(), b0) + log_mode_partition(m.lambda(), b1)))
        .exp();
        zid.max_deviation = zid
            .max_deviation
            .max(((total - reference) / reference).abs());
    }

    // Two-mode tensor products: dense 16x16 fidelity vs product of 4x4s.
    // Draws stay at moderate βΛ where the generic eigendecomposition route
    // resolves every eigenvalue of the normalized matrices.
    let mut mult = Suite {
        name: "tensor multiplicativity",
        tolerance: 1e-12,
        max_deviation: 0.0,
        draws: 100,
    };
    let moderate_mode = |rng: &mut StdRng| {
        let lambda = rng.gen_range(0.0..2.0);
        let theta = rng.gen_range(-PI..PI);
        MomentumMode::new(lambda * theta.cos(), lambda * theta.sin()).expect("finite draw")
    };
    for _ in 0..mult.draws {
        let (ma0, mb0) = (moderate_mode(&mut rng), moderate_mode(&mut rng));
        let (ma1, mb1) = (moderate_mode(&mut rng), moderate_mode(&mut rng));
        let b0 = rng.gen_range(0.05..2.0);
        let b1 = rng.gen_range(0.05..2.0);
        let ra = oracle::mode_density_dense(&ma0, b0).expect("valid");
        let rb = oracle::mode_density_dense(&mb0, b0).expect("valid");
        let sa = oracle::mode_density_dense(&ma1, b1).expect("valid");
        let sb = oracle::mode_density_dense(&mb1, b1).expect("valid");
        let joint_r = oracle::DenseHermitian::new(ra.mat().kron(rb.mat())).expect("hermitian");
        let joint_s = oracle::DenseHermitian::new(sa.mat().kron(sb.mat())).expect("hermitian");
        let joint = oracle::uhlmann_fidelity(&joint_r, &joint_s).expect("valid states");
        let product = oracle::uhlmann_fidelity(&ra, &sa).expect("valid states")
            * oracle::uhlmann_fidelity(&rb, &sb).expect("valid states");
        mult.max_deviation = mult.max_deviation.max((joint - product).abs());
    }

    let mut ok = true;
    for suite in [&fid, &echo, &zid, &mult] {
        let verdict = if suite.passed() { "PASS" } else { "FAIL" };
        println!(
            "  {:<30} max deviation = {:.3e} over {} draws (tol {:.0e})  {}",
            suite.name, suite.max_deviation, suite.draws, suite.tolerance, verdict
        );
        ok &= suite.passed();
    }
    if ok {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_arguments_exit_2() {
        assert_eq!(cli_main(["thermofid", "no-such-command"]), 2);
        assert_eq!(
            cli_main(["thermofid", "fidelity-sweep", "--n-sites", "abc"]),
            2
        );
        // conflicting axis flags
        assert_eq!(
            cli_main([
                "thermofid",
                "fidelity-sweep",
                "--gamma",
                "1",
                "--gamma-range",
                "0:1:5"
            ]),
            2
        );
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(cli_main(["thermofid", "--help"]), 0);
        assert_eq!(cli_main(["thermofid", "fidelity-sweep", "--help"]), 0);
    }

    #[test]
    fn resolve_defaults_reproduce_cross_section() {
        let config = resolve_sweep_config(SweepArgs::default(), Quantity::Fidelity).unwrap();
        assert_eq!(config.n_sites, 200);
        assert_eq!(config.gamma_range, AxisRange::degenerate(1.0));
        assert_eq!(config.lambda_range, AxisRange::new(0.0, 2.0, 201));
        assert_eq!(config.beta_list, vec![1.0, 10.0, 20.0, 100.0]);
        assert_eq!(config.delta_gamma, 0.01);
        assert_eq!(config.echo_time, None);

        let echo = resolve_sweep_config(SweepArgs::default(), Quantity::Echo).unwrap();
        assert_eq!(echo.echo_time, Some(10.0));
    }

    #[test]
    fn config_file_overlay_and_flag_precedence() {
        let dir = std::env::temp_dir().join(format!("thermofid_cli_test_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sweep.conf");
        std::fs::write(
            &path,
            "# comment\nn-sites = 40\nbeta = 1, 5\nlambda-range = 0:1:11\ngamma = 0.5\ngrid = half-integer\nplot = true\n",
        )
        .unwrap();

        let args = SweepArgs {
            config: Some(path.clone()),
            n_sites: Some(20),
            ..SweepArgs::default()
        };
        let config = resolve_sweep_config(args, Quantity::Fidelity).unwrap();
        assert_eq!(config.n_sites, 20); // flag wins
        assert_eq!(config.beta_list, vec![1.0, 5.0]); // file fills
        assert_eq!(config.lambda_range, AxisRange::new(0.0, 1.0, 11));
        assert_eq!(config.gamma_range, AxisRange::degenerate(0.5));
        assert_eq!(config.grid, GridConvention::HalfInteger);
        assert!(config.emit_plot_script);

        std::fs::write(&path, "unknown-key = 3\n").unwrap();
        let args = SweepArgs {
            config: Some(path),
            ..SweepArgs::default()
        };
        assert!(resolve_sweep_config(args, Quantity::Fidelity).is_err());
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn oracle_check_small_run_passes() {
        let code = run_oracle_check(OracleCheckArgs { seed: 7, draws: 20 });
        assert_eq!(code, 0);
    }
}
