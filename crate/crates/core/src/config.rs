//! Flat `key = value` run configuration.
//!
//! Keys match the command-line flag names. Lines starting with `#` and blank
//! lines are ignored. Serialization is canonical: parsing the text written by
//! [`RunConfig::to_text`] and writing it again gives the same bytes.

use std::path::Path;

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::hamiltonian::{DEFAULT_CONVERGE_TOL, DEFAULT_COVERAGE};
use crate::observables::{Normalization, ShiftMode, DEFAULT_DENOM_FLOOR};
use crate::potential::PotentialParams;
use crate::quadrature::QuadSpec;
use crate::sweep::{fmt_num, parse_grid, PointSettings, SweepParam, DEFAULT_R_GRID};

/// Either a number or `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

impl AutoOr {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            Ok(AutoOr::Auto)
        } else {
            parse_f64(s).map(AutoOr::Value)
        }
    }

    fn render(self) -> String {
        match self {
            AutoOr::Auto => "auto".to_string(),
            AutoOr::Value(v) => fmt_num(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub v0: f64,
    pub d: f64,
    pub r: f64,
    pub p: f64,
    pub lambda: f64,
    pub m: usize,
    pub omega: AutoOr,
    pub coverage_factor: f64,
    pub panel_order: usize,
    pub panels_per_interval: usize,
    pub tail_tolerance: f64,
    pub r_grid: String,
    pub sweep_param: SweepParam,
    pub shift_mode: ShiftMode,
    pub normalization: Normalization,
    pub denom_floor: f64,
    pub converge_tol: f64,
    pub m_list: String,
    pub oracle_n: usize,
    pub oracle_x: AutoOr,
    /// 0 means one per available CPU.
    pub workers: usize,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pot = PotentialParams::default();
        let quad = QuadSpec::default();
        RunConfig {
            v0: pot.v0,
            d: pot.d,
            r: pot.r,
            p: pot.p,
            lambda: pot.lambda,
            m: 50,
            omega: AutoOr::Auto,
            coverage_factor: DEFAULT_COVERAGE,
            panel_order: quad.panel_order,
            panels_per_interval: quad.panels_per_interval,
            tail_tolerance: quad.tail_tolerance,
            r_grid: DEFAULT_R_GRID.to_string(),
            sweep_param: SweepParam::R,
            shift_mode: ShiftMode::default(),
            normalization: Normalization::One,
            denom_floor: DEFAULT_DENOM_FLOOR,
            converge_tol: DEFAULT_CONVERGE_TOL,
            m_list: "20:10:60".to_string(),
            oracle_n: 400,
            oracle_x: AutoOr::Auto,
            workers: 0,
            out: None,
        }
    }
}

/// Every key, in serialization order.
pub const KEYS: [&str; 22] = [
    "V0",
    "d",
    "R",
    "p",
    "lambda",
    "M",
    "omega",
    "coverage_factor",
    "panel_order",
    "panels_per_interval",
    "tail_tolerance",
    "R_grid",
    "sweep_param",
    "shift_mode",
    "normalization",
    "denom_floor",
    "converge_tol",
    "M_list",
    "oracle_N",
    "oracle_X",
    "workers",
    "out",
];

/// Keys that do not affect results and stay out of metadata.
const RUNTIME_KEYS: [&str; 2] = ["workers", "out"];

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("`{s}` is not finite")),
        Err(_) => Err(format!("`{s}` is not a number")),
    }
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("`{s}` is not a non-negative integer"))
}

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "V0" => self.v0 = parse_f64(v)?,
            "d" => self.d = parse_f64(v)?,
            "R" => self.r = parse_f64(v)?,
            "p" => self.p = parse_f64(v)?,
            "lambda" => self.lambda = parse_f64(v)?,
            "M" => self.m = parse_usize(v)?,
            "omega" => self.omega = AutoOr::parse(v)?,
            "coverage_factor" => self.coverage_factor = parse_f64(v)?,
            "panel_order" => self.panel_order = parse_usize(v)?,
            "panels_per_interval" => self.panels_per_interval = parse_usize(v)?,
            "tail_tolerance" => self.tail_tolerance = parse_f64(v)?,
            "R_grid" => {
                parse_grid(v).map_err(|e| e.to_string())?;
                self.r_grid = v.to_string();
            }
            "sweep_param" => {
                self.sweep_param = SweepParam::parse(v).ok_or_else(|| format!("unknown parameter `{v}`"))?
            }
            "shift_mode" => {
                self.shift_mode = ShiftMode::parse(v).ok_or_else(|| format!("expected paper_V0 or global_min, got `{v}`"))?
            }
            "normalization" => {
                self.normalization = Normalization::parse(v).ok_or_else(|| format!("expected one or two, got `{v}`"))?
            }
            "denom_floor" => self.denom_floor = parse_f64(v)?,
            "converge_tol" => self.converge_tol = parse_f64(v)?,
            "M_list" => {
                parse_m_list(v).map_err(|e| e.to_string())?;
                self.m_list = v.to_string();
            }
            "oracle_N" => self.oracle_n = parse_usize(v)?,
            "oracle_X" => self.oracle_x = AutoOr::parse(v)?,
            "workers" => self.workers = parse_usize(v)?,
            "out" => self.out = Some(v.to_string()).filter(|s| !s.is_empty()),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "V0" => fmt_num(self.v0),
            "d" => fmt_num(self.d),
            "R" => fmt_num(self.r),
            "p" => fmt_num(self.p),
            "lambda" => fmt_num(self.lambda),
            "M" => self.m.to_string(),
            "omega" => self.omega.render(),
            "coverage_factor" => fmt_num(self.coverage_factor),
            "panel_order" => self.panel_order.to_string(),
            "panels_per_interval" => self.panels_per_interval.to_string(),
            "tail_tolerance" => fmt_num(self.tail_tolerance),
            "R_grid" => self.r_grid.clone(),
            "sweep_param" => self.sweep_param.as_str().to_string(),
            "shift_mode" => self.shift_mode.as_str().to_string(),
            "normalization" => self.normalization.as_str().to_string(),
            "denom_floor" => fmt_num(self.denom_floor),
            "converge_tol" => fmt_num(self.converge_tol),
            "M_list" => self.m_list.clone(),
            "oracle_N" => self.oracle_n.to_string(),
            "oracle_X" => self.oracle_x.render(),
            "workers" => self.workers.to_string(),
            "out" => self.out.clone()?,
            _ => return None,
        })
    }

    /// Parses a config file body on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |key: &str, msg: String| Error::Config {
                key: key.to_string(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line, "expected `key = value`".to_string()))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(err(key, "duplicate key".to_string()));
            }
            seen.push(key);
            cfg.set(key, value).map_err(|m| err(key, m))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Canonical text. Without `runtime`, keys that cannot change results
    /// (`workers`, `out`) are left out.
    pub fn to_text(&self, runtime: bool) -> String {
        let mut out = String::new();
        for key in KEYS {
            if !runtime && RUNTIME_KEYS.contains(&key) {
                continue;
            }
            if let Some(v) = self.get(key) {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        out
    }

    pub fn potential(&self) -> PotentialParams {
        PotentialParams {
            v0: self.v0,
            d: self.d,
            r: self.r,
            p: self.p,
            lambda: self.lambda,
        }
    }

    pub fn quad(&self) -> QuadSpec {
        QuadSpec {
            panel_order: self.panel_order,
            panels_per_interval: self.panels_per_interval,
            tail_tolerance: self.tail_tolerance,
        }
    }

    pub fn point_settings(&self) -> PointSettings {
        PointSettings {
            quad: self.quad(),
            coverage_factor: self.coverage_factor,
            converge_tol: self.converge_tol,
            shift_mode: self.shift_mode,
            normalization: self.normalization,
            denom_floor: self.denom_floor,
        }
    }

    /// Basis for a single solve at the configured geometry.
    pub fn point_basis(&self) -> Result<BasisSpec> {
        self.basis_for_extent(self.m, self.potential().extent())
    }

    pub fn basis_for_extent(&self, m: usize, extent: f64) -> Result<BasisSpec> {
        match self.omega {
            AutoOr::Auto => BasisSpec::new(m, BasisSpec::auto_omega(m, extent, self.coverage_factor)),
            AutoOr::Value(w) => BasisSpec::new(m, w),
        }
    }

    pub fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }
}

/// Sidecar text: the result-relevant config followed by informational
/// `# key = value` comment lines, which the parser skips.
pub fn metadata_text(cfg: &RunConfig, info: &[(&str, String)]) -> String {
    let mut out = cfg.to_text(false);
    for (k, v) in info {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out
}

/// Basis sizes for the convergence study, e.g. `20:10:60`.
pub fn parse_m_list(text: &str) -> Result<Vec<usize>> {
    let vals = parse_grid(text).map_err(|_| Error::invalid("M_list", format!("malformed list `{text}`")))?;
    vals.iter()
        .map(|&v| {
            if v >= 2.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::invalid("M_list", format!("`{v}` is not an integer >= 2")))
            }
        })
        .collect()
}
