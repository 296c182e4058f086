//! Parameter sweeps, finite-difference derivatives and tabular output.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::hamiltonian::{solve, Problem};
use crate::observables::{
    coeff_matrix, coulomb_expectation, expectation, info_entropy, linear_entropy, occupation_spectrum,
    potential_expectation, shifted_ratio, von_neumann, Normalization, RatioFlag, ShiftMode,
};
use crate::potential::PotentialParams;
use crate::quadrature::QuadSpec;

/// Default R grid: fine steps around the transition at `R = d = 8`.
pub const DEFAULT_R_GRID: &str = "2:0.5:6,6:0.25:10,10:0.5:30";

/// Which potential parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepParam {
    #[default]
    R,
    V0,
    D,
    P,
    Lambda,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::R => "R",
            SweepParam::V0 => "V0",
            SweepParam::D => "d",
            SweepParam::P => "p",
            SweepParam::Lambda => "lambda",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [SweepParam::R, SweepParam::V0, SweepParam::D, SweepParam::P, SweepParam::Lambda]
            .into_iter()
            .find(|p| p.as_str() == s)
    }

    pub fn apply(self, mut params: PotentialParams, value: f64) -> PotentialParams {
        match self {
            SweepParam::R => params.r = value,
            SweepParam::V0 => params.v0 = value,
            SweepParam::D => params.d = value,
            SweepParam::P => params.p = value,
            SweepParam::Lambda => params.lambda = value,
        }
        params
    }
}

/// Everything except the potential geometry that a point evaluation needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSettings {
    pub quad: QuadSpec,
    pub coverage_factor: f64,
    pub converge_tol: f64,
    pub shift_mode: ShiftMode,
    pub normalization: Normalization,
    pub denom_floor: f64,
}

/// Observables of one solved point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub energy: f64,
    pub linear_entropy: f64,
    pub von_neumann: f64,
    pub info_entropy: f64,
    pub u_exp: f64,
    pub v_exp: f64,
    pub t_exp: f64,
    pub ratio: f64,
    pub ratio_flag: RatioFlag,
    pub converged: bool,
    pub occupations: Vec<f64>,
}

/// Full solve plus every observable at one geometry.
pub fn evaluate_point(params: PotentialParams, basis: BasisSpec, settings: &PointSettings) -> Result<PointRecord> {
    let mut problem = Problem::new(basis, params, settings.quad);
    problem.coverage_factor = settings.coverage_factor;
    problem.validate()?;
    let sol = solve(&problem, settings.converge_tol)?;
    let gs = &sol.ground;
    let c = coeff_matrix(gs, &sol.idx);
    let spec = occupation_spectrum(&c)?;
    let u_exp = coulomb_expectation(gs, sol.two_body.interaction.as_ref());
    let v_exp = potential_expectation(gs, sol.two_body.potential.as_ref());
    let t_exp = expectation(sol.two_body.kinetic.as_ref(), &gs.pair_coeffs);
    let ratio = shifted_ratio(u_exp, v_exp, &params, settings.shift_mode, settings.denom_floor);
    Ok(PointRecord {
        energy: gs.energy,
        linear_entropy: linear_entropy(&spec),
        von_neumann: von_neumann(&spec),
        info_entropy: info_entropy(&c, gs, settings.normalization)?,
        u_exp,
        v_exp,
        t_exp,
        ratio: ratio.value,
        ratio_flag: ratio.flag,
        converged: gs.converged(),
        occupations: spec.lambdas,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Value of the swept parameter.
    pub value: f64,
    /// `None` when the point failed; see `error`.
    pub record: Option<PointRecord>,
    pub dl: Option<f64>,
    pub dsn: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn column(&self, f: impl Fn(&PointRecord) -> f64) -> f64 {
        self.record.as_ref().map(f).unwrap_or(f64::NAN)
    }

    pub fn l(&self) -> f64 {
        self.column(|r| r.linear_entropy)
    }

    pub fn sn(&self) -> f64 {
        self.column(|r| r.info_entropy)
    }

    pub fn u(&self) -> f64 {
        self.column(|r| r.u_exp)
    }

    pub fn ratio(&self) -> f64 {
        self.column(|r| r.ratio)
    }
}

/// Sweep definition: base geometry, the swept parameter and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub base: PotentialParams,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub basis: BasisSpec,
    pub settings: PointSettings,
}

impl Sweep {
    /// Largest `d + R` reached by the sweep.
    pub fn max_extent(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| self.param.apply(self.base, v).extent())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("R_grid", "empty grid"));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("R_grid", "grid must be strictly increasing"));
        }
        self.basis.validate()?;
        self.basis
            .check_coverage(self.max_extent(), self.settings.coverage_factor)
    }
}

/// Oscillator frequency from the default rule at the sweep's largest extent.
pub fn auto_basis(m: usize, base: &PotentialParams, param: SweepParam, values: &[f64], coverage_factor: f64) -> Result<BasisSpec> {
    let extent = values
        .iter()
        .map(|&v| param.apply(*base, v).extent())
        .fold(f64::NEG_INFINITY, f64::max);
    let extent = if extent.is_finite() { extent } else { base.extent() };
    BasisSpec::new(m, BasisSpec::auto_omega(m, extent, coverage_factor))
}

/// Solves every grid point on a pool of `workers` threads. Point failures
/// are kept in their rows; output does not depend on `workers`.
pub fn run_sweep(sweep: &Sweep, workers: usize) -> Result<Vec<SweepRow>> {
    sweep.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        sweep
            .values
            .par_iter()
            .map(|&v| {
                let params = sweep.param.apply(sweep.base, v);
                match evaluate_point(params, sweep.basis, &sweep.settings) {
                    Ok(rec) => SweepRow {
                        value: v,
                        record: Some(rec),
                        dl: None,
                        dsn: None,
                        error: None,
                    },
                    Err(e) => SweepRow {
                        value: v,
                        record: None,
                        dl: None,
                        dsn: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    if rows.len() >= 3 {
        let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
        let dl = central_derivative(&xs, &rows.iter().map(SweepRow::l).collect::<Vec<_>>())?;
        let dsn = central_derivative(&xs, &rows.iter().map(SweepRow::sn).collect::<Vec<_>>())?;
        for (row, (a, b)) in rows.iter_mut().zip(dl.into_iter().zip(dsn)) {
            row.dl = a;
            row.dsn = b;
        }
    }
    Ok(rows)
}

/// Three-point derivative on a possibly non-uniform grid; endpoints absent.
pub fn central_derivative(xs: &[f64], ys: &[f64]) -> Result<Vec<Option<f64>>> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::invalid("grid", format!("need at least 3 points, got {}", xs.len())));
    }
    let n = xs.len();
    let mut out = vec![None; n];
    for i in 1..n - 1 {
        let h1 = xs[i] - xs[i - 1];
        let h2 = xs[i + 1] - xs[i];
        let d = -h2 / (h1 * (h1 + h2)) * ys[i - 1] + (h2 - h1) / (h1 * h2) * ys[i] + h1 / (h2 * (h1 + h2)) * ys[i + 1];
        out[i] = Some(d);
    }
    Ok(out)
}

/// Index of the largest `|derivative|` among present finite entries.
pub fn argmax_abs(ds: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in ds.iter().enumerate() {
        if let Some(v) = d.filter(|v| v.is_finite()) {
            if best.is_none_or(|(_, b)| v.abs() > b) {
                best = Some((i, v.abs()));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Parses `a:step:b` segments and plain values, comma separated. The result
/// is sorted with duplicates (shared segment ends) removed.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::invalid("R_grid", msg);
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| bad(format!("not a number: `{}`", s.trim())))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad(format!("not finite: `{}`", s.trim())))
        }
    };
    let mut vals = Vec::new();
    for seg in text.split(',') {
        let parts: Vec<&str> = seg.split(':').collect();
        match parts.len() {
            1 => vals.push(num(parts[0])?),
            3 => {
                let (a, s, b) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
                if !(s > 0.0) || b < a {
                    return Err(bad(format!("segment `{}` needs step > 0 and end >= start", seg.trim())));
                }
                let count = ((b - a) / s).round();
                if (a + count * s - b).abs() > 1e-9 * s.max(1.0) {
                    return Err(bad(format!("step does not divide segment `{}`", seg.trim())));
                }
                for k in 0..=count as usize {
                    vals.push(if k == count as usize { b } else { a + k as f64 * s });
                }
            }
            _ => return Err(bad(format!("malformed segment `{}`", seg.trim()))),
        }
    }
    vals.sort_by(|a, b| a.total_cmp(b));
    vals.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * a.abs().max(1.0));
    Ok(vals)
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

/// Column names; the first and the derivative suffixes follow the swept
/// parameter.
pub fn header(param: SweepParam) -> Vec<String> {
    let p = param.as_str();
    [
        p, "E_0", "L", "S", "S_n", "U_exp", "V_exp", "T_exp", "ratio", "ratio_flag", "converged",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([format!("dL_d{p}"), format!("dSn_d{p}"), "error".to_string()])
    .collect()
}

/// One table line, no trailing newline.
pub fn format_row(row: &SweepRow) -> String {
    let mut cells = vec![fmt_num(row.value)];
    match &row.record {
        Some(r) => {
            for v in [r.energy, r.linear_entropy, r.von_neumann, r.info_entropy, r.u_exp, r.v_exp, r.t_exp, r.ratio] {
                cells.push(fmt_num(v));
            }
            cells.push(r.ratio_flag.as_str().to_string());
            cells.push(r.converged.to_string());
        }
        None => {
            cells.extend(std::iter::repeat_n(fmt_num(f64::NAN), 8));
            cells.extend([String::new(), String::new()]);
        }
    }
    cells.push(fmt_opt(row.dl));
    cells.push(fmt_opt(row.dsn));
    cells.push(row.error.as_deref().map(csv_text).unwrap_or_default());
    cells.join(",")
}

pub fn sweep_table(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = header(param).join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&format_row(row));
        out.push('\n');
    }
    out
}

/// Two-column derivative table for `dL` (`which = "L"`) or `dS_n`.
pub fn derivative_table(param: SweepParam, rows: &[SweepRow], which: &str) -> String {
    let p = param.as_str();
    let mut out = String::new();
    let _ = writeln!(out, "{p},d{which}_d{p}");
    for row in rows {
        let d = if which == "L" { row.dl } else { row.dsn };
        let _ = writeln!(out, "{},{}", fmt_num(row.value), fmt_opt(d));
    }
    out
}
