//! Command-line front end: `solve`, `sweep`, `oracle` and `converge`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{metadata_text, parse_m_list, AutoOr, RunConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::PairIndex;
use crate::oracle::{grid_solve, GridSpec, OracleOptions, STENCIL};
use crate::sweep::{
    argmax_abs, auto_basis, derivative_table, evaluate_point, fmt_num, format_row, header, parse_grid, run_sweep,
    sweep_table, Sweep, SweepParam, SweepRow,
};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "QDENT_OUT";
const DEFAULT_OUT: &str = "qdent-out";

#[derive(Debug, Parser)]
#[command(name = "qdent", version, about = "Two-electron entanglement in a two-center quantum dot")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one geometry and print its observables.
    Solve(RunArgs),
    /// Sweep R (or another parameter) and write tables plus metadata.
    Sweep(RunArgs),
    /// Solve on a real-space grid for cross-validation.
    Oracle(RunArgs),
    /// Tabulate E_0 and L against the basis size.
    Converge(RunArgs),
}

/// Flags mirror config keys; flags win over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "V0", allow_hyphen_values = true)]
    pub v0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<String>,
    #[arg(long = "R")]
    pub r: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Number of oscillator orbitals.
    #[arg(short = 'M', long = "M")]
    pub m: Option<String>,
    /// Oscillator frequency or `auto`.
    #[arg(long)]
    pub omega: Option<String>,
    #[arg(long = "coverage-factor")]
    pub coverage_factor: Option<String>,
    #[arg(long = "panel-order")]
    pub panel_order: Option<String>,
    #[arg(long = "panels-per-interval")]
    pub panels_per_interval: Option<String>,
    #[arg(long = "tail-tolerance")]
    pub tail_tolerance: Option<String>,
    /// Comma-separated `start:step:end` segments or values.
    #[arg(long = "R-grid")]
    pub r_grid: Option<String>,
    /// Parameter varied by `sweep` (R, V0, d, p, lambda).
    #[arg(long = "sweep-param")]
    pub sweep_param: Option<String>,
    /// `global_min` or `paper_V0`.
    #[arg(long = "shift-mode")]
    pub shift_mode: Option<String>,
    /// Density normalized to `one` or `two`.
    #[arg(long)]
    pub normalization: Option<String>,
    #[arg(long = "denom-floor")]
    pub denom_floor: Option<String>,
    #[arg(long = "converge-tol")]
    pub converge_tol: Option<String>,
    /// Basis sizes for `converge`.
    #[arg(long = "M-list")]
    pub m_list: Option<String>,
    #[arg(long = "oracle-N")]
    pub oracle_n: Option<String>,
    #[arg(long = "oracle-X")]
    pub oracle_x: Option<String>,
    /// Worker threads for sweeps; 0 uses every CPU.
    #[arg(long)]
    pub workers: Option<String>,
    /// Output directory (default: $QDENT_OUT, then ./qdent-out).
    #[arg(long)]
    pub out: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, &'static str, &Option<String>)> {
        vec![
            ("V0", "V0", &self.v0),
            ("d", "d", &self.d),
            ("R", "R", &self.r),
            ("p", "p", &self.p),
            ("lambda", "lambda", &self.lambda),
            ("M", "M", &self.m),
            ("omega", "omega", &self.omega),
            ("coverage_factor", "coverage-factor", &self.coverage_factor),
            ("panel_order", "panel-order", &self.panel_order),
            ("panels_per_interval", "panels-per-interval", &self.panels_per_interval),
            ("tail_tolerance", "tail-tolerance", &self.tail_tolerance),
            ("R_grid", "R-grid", &self.r_grid),
            ("sweep_param", "sweep-param", &self.sweep_param),
            ("shift_mode", "shift-mode", &self.shift_mode),
            ("normalization", "normalization", &self.normalization),
            ("denom_floor", "denom-floor", &self.denom_floor),
            ("converge_tol", "converge-tol", &self.converge_tol),
            ("M_list", "M-list", &self.m_list),
            ("oracle_N", "oracle-N", &self.oracle_n),
            ("oracle_X", "oracle-X", &self.oracle_x),
            ("workers", "workers", &self.workers),
            ("out", "out", &self.out),
        ]
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for (key, flag, value) in self.overrides() {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|msg| Error::Flag {
                    key: flag.to_string(),
                    msg,
                })?;
            }
        }
        Ok(cfg)
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg
        .out
        .clone()
        .or_else(|| std::env::var(OUT_ENV).ok().filter(|s| !s.is_empty()))
        .unwrap_or_else(|| DEFAULT_OUT.to_string());
    let dir = PathBuf::from(dir);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a.resolve()?),
        Command::Sweep(a) => cmd_sweep(&a.resolve()?),
        Command::Oracle(a) => cmd_oracle(&a.resolve()?),
        Command::Converge(a) => cmd_converge(&a.resolve()?),
    }
}

/// Prints the header and one table row for the configured geometry.
pub fn cmd_solve(cfg: &RunConfig) -> Result<()> {
    let params = cfg.potential();
    params.validate()?;
    let basis = cfg.point_basis()?;
    let rec = evaluate_point(params, basis, &cfg.point_settings())?;
    let row = SweepRow {
        value: params.r,
        record: Some(rec),
        dl: None,
        dsn: None,
        error: None,
    };
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{}", header(SweepParam::R).join(","))?;
    writeln!(stdout, "{}", format_row(&row))?;
    Ok(())
}

/// Builds the sweep a config describes.
pub fn sweep_from_config(cfg: &RunConfig) -> Result<Sweep> {
    let base = cfg.potential();
    let values = parse_grid(&cfg.r_grid)?;
    for &v in &values {
        cfg.sweep_param.apply(base, v).validate()?;
    }
    let basis = match cfg.omega {
        AutoOr::Auto => auto_basis(cfg.m, &base, cfg.sweep_param, &values, cfg.coverage_factor)?,
        AutoOr::Value(_) => cfg.point_basis()?,
    };
    Ok(Sweep {
        base,
        param: cfg.sweep_param,
        values,
        basis,
        settings: cfg.point_settings(),
    })
}

/// Writes `sweep.csv`, `sweep.meta` and the two derivative tables into `dir`.
pub fn write_sweep_outputs(cfg: &RunConfig, sweep: &Sweep, rows: &[SweepRow], dir: &Path) -> Result<()> {
    let param = sweep.param;
    let p = param.as_str();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("sweep.csv"), sweep_table(param, rows))?;
    fs::write(dir.join(format!("dL_d{p}.csv")), derivative_table(param, rows, "L"))?;
    fs::write(dir.join(format!("dSn_d{p}.csv")), derivative_table(param, rows, "Sn"))?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let info = [
        ("code_version", code_version()),
        ("omega_resolved", fmt_num(sweep.basis.omega)),
        ("turning_point", fmt_num(sweep.basis.turning_point())),
        ("pair_dimension", PairIndex::new(sweep.basis.m).len().to_string()),
        ("points", rows.len().to_string()),
        ("failed_points", failed.to_string()),
        ("derivative_stencil", "3-point non-uniform central".to_string()),
    ];
    fs::write(dir.join("sweep.meta"), metadata_text(cfg, &info))?;
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let sweep = sweep_from_config(cfg)?;
    let rows = run_sweep(&sweep, cfg.worker_count())?;
    let dir = out_dir(cfg)?;
    write_sweep_outputs(cfg, &sweep, &rows, &dir)?;

    let p = sweep.param.as_str();
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let dl: Vec<Option<f64>> = rows.iter().map(|r| r.dl).collect();
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "wrote {} rows to {}", rows.len(), dir.join("sweep.csv").display())?;
    if let Some(i) = argmax_abs(&dl) {
        writeln!(stdout, "max |dL/d{p}| at {p} = {}", fmt_num(rows[i].value))?;
    }
    if failed > 0 {
        writeln!(stdout, "{failed} point(s) failed; see the error column")?;
    }
    Ok(())
}

/// Grid half-width: configured, or `d + R + 4`.
pub fn oracle_grid(cfg: &RunConfig) -> GridSpec {
    let x = match cfg.oracle_x {
        AutoOr::Auto => cfg.potential().extent() + 4.0,
        AutoOr::Value(x) => x,
    };
    GridSpec { n: cfg.oracle_n, x }
}

/// Writes `oracle.csv`, `oracle.meta` and `oracle_density.csv`.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<()> {
    let params = cfg.potential();
    let grid = oracle_grid(cfg);
    let res = grid_solve(&params, &grid, &OracleOptions::default())?;
    let dir = out_dir(cfg)?;
    let table = format!(
        "R,E_0,L,U_exp\n{},{},{},{}\n",
        fmt_num(params.r),
        fmt_num(res.energy),
        fmt_num(res.linear_entropy),
        fmt_num(res.coulomb)
    );
    fs::write(dir.join("oracle.csv"), &table)?;
    let mut density = String::from("x,n\n");
    for (x, n) in res.xs.iter().zip(&res.density) {
        density.push_str(&format!("{},{}\n", fmt_num(*x), fmt_num(*n)));
    }
    fs::write(dir.join("oracle_density.csv"), density)?;
    let info = [
        ("code_version", code_version()),
        ("stencil", STENCIL.to_string()),
        ("contact", "lambda/dx on x_i = x_j".to_string()),
        ("grid_N", grid.n.to_string()),
        ("grid_X", fmt_num(grid.x)),
        ("grid_dx", fmt_num(res.dx)),
        ("matvecs", res.matvecs.to_string()),
        ("ritz_residual", fmt_num(res.residual)),
        ("symmetry_error", fmt_num(res.symmetry_error)),
    ];
    fs::write(dir.join("oracle.meta"), metadata_text(cfg, &info))?;
    std::io::stdout().lock().write_all(table.as_bytes())?;
    Ok(())
}

/// One line of the basis-size study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeRow {
    pub m: usize,
    pub energy: f64,
    pub linear_entropy: f64,
    pub converged: bool,
}

/// Solves at every M of `M_list` with one shared frequency, so the bases
/// are nested and E_0 can only go down.
pub fn converge_rows(cfg: &RunConfig) -> Result<(f64, Vec<ConvergeRow>)> {
    let params = cfg.potential();
    params.validate()?;
    let ms = parse_m_list(&cfg.m_list)?;
    let omega = cfg.basis_for_extent(ms[0], params.extent())?.omega;
    let settings = cfg.point_settings();
    let mut rows = Vec::with_capacity(ms.len());
    for m in ms {
        let basis = crate::basis::BasisSpec::new(m, omega)?;
        let rec = evaluate_point(params, basis, &settings)?;
        rows.push(ConvergeRow {
            m,
            energy: rec.energy,
            linear_entropy: rec.linear_entropy,
            converged: rec.converged,
        });
    }
    Ok((omega, rows))
}

/// Writes `converge.csv` and `converge.meta` and prints the table.
pub fn cmd_converge(cfg: &RunConfig) -> Result<()> {
    let (omega, rows) = converge_rows(cfg)?;
    let mut table = String::from("M,omega,E_0,L,converged\n");
    for r in &rows {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            r.m,
            fmt_num(omega),
            fmt_num(r.energy),
            fmt_num(r.linear_entropy),
            r.converged
        ));
    }
    let dir = out_dir(cfg)?;
    fs::write(dir.join("converge.csv"), &table)?;
    let info = [("code_version", code_version()), ("omega_resolved", fmt_num(omega))];
    fs::write(dir.join("converge.meta"), metadata_text(cfg, &info))?;
    std::io::stdout().lock().write_all(table.as_bytes())?;
    Ok(())
}
