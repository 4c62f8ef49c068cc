//! Parameter-sweep engine: fidelity or echo over a (γ, λ) grid for a list
//! of inverse temperatures, with CSV output and an optional gnuplot script.
//!
//! At every grid point the two states compared are H(γ, λ) and
//! H(γ + δγ, λ + δλ) at the same β. Rows are produced in a fixed order
//! (β outer, γ middle, λ inner) and rendered with 17 significant digits, so
//! identical configs give byte-identical files. A row whose value comes out
//! non-finite is recorded as an error and skipped; the sweep continues.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::fidelity::{thermal_fidelity, ClampStats};
use crate::loschmidt::{thermal_echo, EchoQuery};
use crate::model::{Beta, GridConvention, ThermalStateSpec, XYParams};
use crate::{Error, Result};

/// One swept axis: `steps` values from `min` to `max` inclusive. A
/// degenerate axis (min == max, steps == 1) produces a 1-D cross-section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        Self { min, max, steps }
    }

    pub fn degenerate(value: f64) -> Self {
        Self {
            min: value,
            max: value,
            steps: 1,
        }
    }

    fn validate(&self, field: &'static str) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Config {
                field,
                message: "bounds must be finite".into(),
            });
        }
        match self.steps {
            0 => Err(Error::Config {
                field,
                message: "steps must be >= 1".into(),
            }),
            1 if self.min != self.max => Err(Error::Config {
                field,
                message: "a single-step axis must be degenerate (min == max)".into(),
            }),
            1 => Ok(()),
            _ if self.min >= self.max => Err(Error::Config {
                field,
                message: "a swept axis needs min < max and steps >= 2".into(),
            }),
            _ => Ok(()),
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.steps == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(|i| self.value(i))
    }

    /// MIN:MAX:STEPS, the same syntax the CLI accepts.
    pub fn label(&self) -> String {
        format!("{}:{}:{}", self.min, self.max, self.steps)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let err = |m: &str| Error::Config {
            field: "range",
            message: format!("`{s}`: {m}"),
        };
        if parts.len() != 3 {
            return Err(err("expected MIN:MAX:STEPS"));
        }
        let min: f64 = parts[0].parse().map_err(|_| err("bad MIN"))?;
        let max: f64 = parts[1].parse().map_err(|_| err("bad MAX"))?;
        let steps: usize = parts[2].parse().map_err(|_| err("bad STEPS"))?;
        Ok(Self { min, max, steps })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Fidelity,
    Echo,
}

impl Quantity {
    pub fn label(&self) -> &'static str {
        match self {
            Quantity::Fidelity => "fidelity",
            Quantity::Echo => "echo",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub n_sites: usize,
    pub grid: GridConvention,
    pub gamma_range: AxisRange,
    pub lambda_range: AxisRange,
    pub delta_gamma: f64,
    pub delta_lambda: f64,
    pub beta_list: Vec<f64>,
    pub quantity: Quantity,
    /// Required iff `quantity` is `Echo`.
    pub echo_time: Option<f64>,
    pub output_path: PathBuf,
    pub emit_plot_script: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 || !self.n_sites.is_multiple_of(2) {
            return Err(Error::Config {
                field: "n-sites",
                message: format!("must be even and >= 2, got {}", self.n_sites),
            });
        }
        self.gamma_range.validate("gamma-range")?;
        self.lambda_range.validate("lambda-range")?;
        for (field, d) in [
            ("delta-gamma", self.delta_gamma),
            ("delta-lambda", self.delta_lambda),
        ] {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::Config {
                    field,
                    message: format!("must be finite and >= 0, got {d}"),
                });
            }
        }
        if self.delta_gamma == 0.0 && self.delta_lambda == 0.0 {
            return Err(Error::Config {
                field: "delta-gamma",
                message: "perturbations delta-gamma and delta-lambda must not both be zero".into(),
            });
        }
        if self.beta_list.is_empty() {
            return Err(Error::Config {
                field: "beta",
                message: "at least one value required".into(),
            });
        }
        for &b in &self.beta_list {
            if !b.is_finite() || b <= 0.0 {
                return Err(Error::Config {
                    field: "beta",
                    message: format!("must be finite and > 0, got {b}"),
                });
            }
        }
        match (self.quantity, self.echo_time) {
            (Quantity::Echo, None) => {
                return Err(Error::Config {
                    field: "time",
                    message: "required for echo sweeps".into(),
                })
            }
            (Quantity::Echo, Some(t)) if !t.is_finite() || t < 0.0 => {
                return Err(Error::Config {
                    field: "time",
                    message: format!("must be finite and >= 0, got {t}"),
                })
            }
            (Quantity::Fidelity, Some(_)) => {
                return Err(Error::Config {
                    field: "time",
                    message: "only meaningful for echo sweeps".into(),
                })
            }
            _ => {}
        }
        Ok(())
    }

    pub fn row_count(&self) -> usize {
        self.beta_list.len() * self.gamma_range.steps * self.lambda_range.steps
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub value: f64,
    pub log_value: f64,
}

#[derive(Clone, Debug)]
pub struct RowError {
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub tool_version: String,
    /// Capture time (seconds since the epoch). Not rendered into the CSV:
    /// output bytes depend only on the config.
    pub created_unix: u64,
    pub rows: Vec<SweepRow>,
    pub errors: Vec<RowError>,
    pub clamp: ClampStats,
}

/// Evaluate the configured quantity over the full grid, in deterministic
/// row order (β outer, γ middle, λ inner).
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.row_count());
    let mut errors = Vec::new();
    let mut clamp = ClampStats::default();

    for &beta in &config.beta_list {
        for gi in 0..config.gamma_range.steps {
            let gamma = config.gamma_range.value(gi);
            for li in 0..config.lambda_range.steps {
                let lambda = config.lambda_range.value(li);
                match evaluate_point(config, beta, gamma, lambda) {
                    Ok((value, log_value, point_clamp)) => {
                        clamp.merge(&point_clamp);
                        if value.is_finite() && log_value.is_finite() {
                            rows.push(SweepRow {
                                beta,
                                gamma,
                                lambda,
                                value,
                                log_value,
                            });
                        } else {
                            errors.push(RowError {
                                beta,
                                gamma,
                                lambda,
                                message: format!("non-finite value ({value}, log {log_value})"),
                            });
                        }
                    }
                    Err(e) => errors.push(RowError {
                        beta,
                        gamma,
                        lambda,
                        message: e.to_string(),
                    }),
                }
            }
        }
    }

    Ok(SweepResult {
        config: config.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        rows,
        errors,
        clamp,
    })
}

fn evaluate_point(
    config: &SweepConfig,
    beta: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(f64, f64, ClampStats)> {
    let model0 = XYParams::new(gamma, lambda, config.n_sites, config.grid)?.to_quasifree();
    let model1 = XYParams::new(
        gamma + config.delta_gamma,
        lambda + config.delta_lambda,
        config.n_sites,
        config.grid,
    )?
    .to_quasifree();
    let breakdown = match config.quantity {
        Quantity::Fidelity => {
            let s0 = ThermalStateSpec::new(model0, Beta::Finite(beta))?;
            let s1 = ThermalStateSpec::new(model1, Beta::Finite(beta))?;
            thermal_fidelity(&s0, &s1)?
        }
        Quantity::Echo => {
            let t = config.echo_time.expect("validated");
            thermal_echo(&EchoQuery::new(model0, model1, Beta::Finite(beta), t)?)?
        }
    };
    Ok((breakdown.total, breakdown.log_total, breakdown.clamp))
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render the CSV: `#`-prefixed metadata (config echo in config-file
/// syntax, plus the tool version), the header line, then one row per grid
/// point with every column at 17 significant digits.
pub fn render_csv(result: &SweepResult) -> String {
    let c = &result.config;
    let mut out = String::new();
    let _ = writeln!(out, "# thermofid {} sweep", c.quantity.label());
    let _ = writeln!(out, "# version = {}", result.tool_version);
    let _ = writeln!(out, "# n-sites = {}", c.n_sites);
    let _ = writeln!(out, "# grid = {}", c.grid.label());
    let _ = writeln!(out, "# gamma-range = {}", c.gamma_range.label());
    let _ = writeln!(out, "# lambda-range = {}", c.lambda_range.label());
    let _ = writeln!(out, "# delta-gamma = {}", c.delta_gamma);
    let _ = writeln!(out, "# delta-lambda = {}", c.delta_lambda);
    let betas: Vec<String> = c.beta_list.iter().map(|b| b.to_string()).collect();
    let _ = writeln!(out, "# beta = {}", betas.join(","));
    if let Some(t) = c.echo_time {
        let _ = writeln!(out, "# time = {t}");
    }
    out.push_str("beta,gamma,lambda,value,log_value\n");
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(r.beta),
            fmt17(r.gamma),
            fmt17(r.lambda),
            fmt17(r.value),
            fmt17(r.log_value)
        );
    }
    out
}

pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(result)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parse the data rows of a CSV produced by [`render_csv`]; metadata
/// comments and the header line are skipped.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("beta,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Domain(format!(
                "csv line {}: expected 5 fields",
                lineno + 1
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Domain(format!("csv line {}: bad number `{s}`", lineno + 1)))
        };
        rows.push(SweepRow {
            beta: parse(fields[0])?,
            gamma: parse(fields[1])?,
            lambda: parse(fields[2])?,
            value: parse(fields[3])?,
            log_value: parse(fields[4])?,
        });
    }
    Ok(rows)
}

/// Render a gnuplot script for the result: one curve per β when one axis is
/// degenerate, one heatmap block per β for a full 2-D grid. The script
/// refers to the CSV by its file name, so it belongs next to the CSV.
pub fn render_plot_script(result: &SweepResult) -> String {
    let c = &result.config;
    let csv = c
        .output_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| c.output_path.to_string_lossy().into_owned());
    let stem = c
        .output_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    let quantity = c.quantity.label();

    let mut out = String::new();
    let _ = writeln!(out, "# gnuplot script generated by thermofid; data: {csv}");
    let _ = writeln!(out, "set datafile separator ','");

    let beta_filter = |b: f64| {
        let tol = 1e-9 * b.abs().max(1.0);
        format!("(abs($1 - {b}) < {tol} ? $4 : 1/0)")
    };

    if c.gamma_range.steps > 1 && c.lambda_range.steps > 1 {
        let _ = writeln!(out, "set xlabel 'lambda'");
        let _ = writeln!(out, "set ylabel 'gamma'");
        let _ = writeln!(out, "set view map");
        let _ = writeln!(out, "set term pngcairo size 900,700");
        for &b in &c.beta_list {
            let tag = b.to_string().replace('.', "p").replace('-', "m");
            let _ = writeln!(out, "set output '{stem}_beta_{tag}.png'");
            let _ = writeln!(out, "set title '{quantity}, beta = {b}'");
            let _ = writeln!(
                out,
                "splot '{csv}' using 3:2:{} with points pt 5 ps 1 palette notitle",
                beta_filter(b)
            );
        }
    } else {
        let (axis, col) = if c.lambda_range.steps > 1 {
            ("lambda", 3)
        } else {
            ("gamma", 2)
        };
        let _ = writeln!(out, "set xlabel '{axis}'");
        let _ = writeln!(out, "set ylabel '{quantity}'");
        let _ = writeln!(out, "set key bottom right");
        out.push_str("plot \\\n");
        for (i, &b) in c.beta_list.iter().enumerate() {
            let sep = if i + 1 < c.beta_list.len() {
                ", \\\n"
            } else {
                "\n"
            };
            let _ = write!(
                out,
                "  '{csv}' using {col}:{} with lines title 'beta = {b}'{sep}",
                beta_filter(b)
            );
        }
    }
    out
}

pub fn emit_plot_script(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, render_plot_script(result)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::mode_fidelity;

    fn fig2_like_config(steps: usize) -> SweepConfig {
        SweepConfig {
            n_sites: 20,
            grid: GridConvention::Integer,
            gamma_range: AxisRange::degenerate(1.0),
            lambda_range: AxisRange::new(0.0, 2.0, steps),
            delta_gamma: 0.01,
            delta_lambda: 0.01,
            beta_list: vec![1.0, 10.0],
            quantity: Quantity::Fidelity,
            echo_time: None,
            output_path: PathBuf::from("sweep.csv"),
            emit_plot_script: false,
        }
    }

    #[test]
    fn axis_range_values_and_parse() {
        let r = AxisRange::parse("0:2:201").unwrap();
        assert_eq!(r.steps, 201);
        assert_eq!(r.value(0), 0.0);
        assert!((r.value(150) - 1.5).abs() < 1e-15);
        assert_eq!(r.value(200), 2.0);
        assert_eq!(AxisRange::degenerate(0.7).value(0), 0.7);
        assert!(AxisRange::parse("1:2").is_err());
        assert!(AxisRange::parse("a:2:3").is_err());
        assert_eq!(AxisRange::parse(&r.label()).unwrap(), r);
    }

    #[test]
    fn config_validation_names_fields() {
        let mut c = fig2_like_config(11);
        c.delta_gamma = 0.0;
        c.delta_lambda = 0.0;
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "delta-gamma"),
            other => panic!("expected config error, got {other:?}"),
        }

        let mut c = fig2_like_config(11);
        c.n_sites = 7;
        assert!(matches!(
            c.validate(),
            Err(Error::Config {
                field: "n-sites",
                ..
            })
        ));

        let mut c = fig2_like_config(11);
        c.lambda_range = AxisRange::new(2.0, 0.0, 11);
        assert!(matches!(
            c.validate(),
            Err(Error::Config {
                field: "lambda-range",
                ..
            })
        ));

        let mut c = fig2_like_config(11);
        c.beta_list = vec![1.0, -3.0];
        assert!(matches!(
            c.validate(),
            Err(Error::Config { field: "beta", .. })
        ));

        let mut c = fig2_like_config(11);
        c.quantity = Quantity::Echo;
        assert!(matches!(
            c.validate(),
            Err(Error::Config { field: "time", .. })
        ));

        let mut c = fig2_like_config(11);
        c.echo_time = Some(10.0);
        assert!(matches!(
            c.validate(),
            Err(Error::Config { field: "time", .. })
        ));
    }

    #[test]
    fn single_point_sweep_matches_direct_call() {
        let mut c = fig2_like_config(11);
        c.gamma_range = AxisRange::degenerate(0.0);
        c.lambda_range = AxisRange::degenerate(0.0);
        c.n_sites = 4;
        c.delta_gamma = 0.0;
        c.delta_lambda = 1e-2;
        c.beta_list = vec![1.0];
        let result = run_sweep(&c).unwrap();
        assert_eq!(result.rows.len(), 1);

        let m0 = XYParams::new(0.0, 0.0, 4, GridConvention::Integer)
            .unwrap()
            .to_quasifree();
        let m1 = XYParams::new(0.0, 1e-2, 4, GridConvention::Integer)
            .unwrap()
            .to_quasifree();
        let direct: f64 = m0
            .modes()
            .iter()
            .zip(m1.modes())
            .map(|(a, b)| mode_fidelity(a, b, 1.0, 1.0))
            .product();
        assert!((result.rows[0].value - direct).abs() < 1e-14);
    }

    #[test]
    fn row_order_and_count() {
        let c = fig2_like_config(5);
        let result = run_sweep(&c).unwrap();
        assert_eq!(result.rows.len(), c.row_count());
        assert_eq!(result.rows.len(), 10); // 2 betas, 1 gamma, 5 lambdas
        assert!(result.errors.is_empty());
        // β outer, λ inner
        assert_eq!(result.rows[0].beta, 1.0);
        assert_eq!(result.rows[4].lambda, 2.0);
        assert_eq!(result.rows[5].beta, 10.0);
        for r in &result.rows {
            assert!((0.0..=1.0).contains(&r.value));
        }
    }

    #[test]
    fn csv_shape_and_round_trip() {
        let mut c = fig2_like_config(3);
        c.beta_list = vec![1.0];
        let result = run_sweep(&c).unwrap();
        let text = render_csv(&result);
        let lines: Vec<&str> = text.lines().collect();
        let comments = lines.iter().filter(|l| l.starts_with('#')).count();
        assert_eq!(lines.len(), comments + 1 + result.rows.len());
        assert!(lines[comments].starts_with("beta,gamma,lambda,value,log_value"));

        // single-row guard: exactly one data line plus header and comments
        let mut single = fig2_like_config(3);
        single.gamma_range = AxisRange::degenerate(1.0);
        single.lambda_range = AxisRange::degenerate(0.5);
        single.beta_list = vec![2.0];
        let single_text = render_csv(&run_sweep(&single).unwrap());
        let data_lines = single_text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("beta,"))
            .count();
        assert_eq!(data_lines, 1);

        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.len(), result.rows.len());
        // re-rendering parsed rows reproduces the exact text
        let rendered_again: Vec<String> = parsed
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{}",
                    fmt17(r.beta),
                    fmt17(r.gamma),
                    fmt17(r.lambda),
                    fmt17(r.value),
                    fmt17(r.log_value)
                )
            })
            .collect();
        for (orig, again) in lines[comments + 1..].iter().zip(&rendered_again) {
            assert_eq!(orig, again);
        }
    }

    #[test]
    fn csv_is_deterministic() {
        let c = fig2_like_config(4);
        let a = render_csv(&run_sweep(&c).unwrap());
        let b = render_csv(&run_sweep(&c).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn plot_script_shapes() {
        // degenerate gamma: one curve per beta
        let c = fig2_like_config(5);
        let r = run_sweep(&c).unwrap();
        let script = render_plot_script(&r);
        assert!(script.contains("plot \\"));
        assert_eq!(script.matches("with lines").count(), 2);
        assert!(script.contains("using 3:"));
        assert_eq!(render_plot_script(&r), script);

        // 2-D grid: one heatmap block per beta
        let mut c2 = fig2_like_config(5);
        c2.gamma_range = AxisRange::new(0.0, 1.5, 4);
        let r2 = run_sweep(&c2).unwrap();
        let script2 = render_plot_script(&r2);
        assert_eq!(script2.matches("splot").count(), 2);
        assert_eq!(script2.matches("set output").count(), 2);
    }

    #[test]
    fn cold_sweep_tracks_ground_state_pattern() {
        // at β = 100 the thermal values follow the ground-state fidelity
        // pointwise away from the gapless λ = 1 line
        use crate::fidelity::ground_state_fidelity;
        let mut c = fig2_like_config(81);
        c.n_sites = 200;
        c.beta_list = vec![100.0];
        let result = run_sweep(&c).unwrap();
        for row in &result.rows {
            if (row.lambda - 1.0).abs() <= 0.1 {
                continue;
            }
            let m0 = XYParams::new(1.0, row.lambda, 200, GridConvention::Integer)
                .unwrap()
                .to_quasifree();
            let m1 = XYParams::new(1.01, row.lambda + 0.01, 200, GridConvention::Integer)
                .unwrap()
                .to_quasifree();
            let ground = ground_state_fidelity(&m0, &m1).unwrap().total;
            assert!(
                (row.value - ground).abs() <= 5e-3,
                "lambda = {}: thermal {} vs ground {}",
                row.lambda,
                row.value,
                ground
            );
        }
    }

    #[test]
    fn echo_sweep_runs() {
        let mut c = fig2_like_config(5);
        c.quantity = Quantity::Echo;
        c.echo_time = Some(10.0);
        let r = run_sweep(&c).unwrap();
        assert_eq!(r.rows.len(), c.row_count());
        assert!(r.errors.is_empty());
    }
}
