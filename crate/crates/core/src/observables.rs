//! Quantities derived from a solved ground state.
//!
//! The wavefunction is `Psi(x1, x2) = sum_nm C_nm phi_n(x1) phi_m(x2)` with a
//! symmetric coefficient matrix `C`. The one-particle reduced density matrix
//! is `C C^T` in the orbital basis, so its spectrum is the squared
//! eigenvalues of `C`.

use faer::{Mat, MatRef, Side};

use crate::basis::ho_eval_rows;
use crate::error::{Error, Result};
use crate::hamiltonian::{GroundState, PairIndex};
use crate::potential::{quadrature_breaks, v_min, PotentialParams};
use crate::quadrature::piecewise_rule;

/// Symmetric product-basis coefficient matrix of the two-electron state.
#[derive(Debug, Clone)]
pub struct CoeffMatrix(pub Mat<f64>);

impl CoeffMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn frobenius_sq(&self) -> f64 {
        let c = &self.0;
        let mut s = 0.0;
        for j in 0..c.ncols() {
            for i in 0..c.nrows() {
                s += c[(i, j)] * c[(i, j)];
            }
        }
        s
    }
}

/// Undo the pair normalization: `C_aa = c_aa`, `C_ab = C_ba = c_ab / sqrt(2)`.
pub fn coeff_matrix(gs: &GroundState, idx: &PairIndex) -> CoeffMatrix {
    coeff_matrix_from_pairs(&gs.pair_coeffs, idx)
}

pub fn coeff_matrix_from_pairs(coeffs: &[f64], idx: &PairIndex) -> CoeffMatrix {
    let m = idx.orbitals();
    let mut c = Mat::<f64>::zeros(m, m);
    for (p, &v) in coeffs.iter().enumerate() {
        let (a, b) = idx.pair(p);
        if a == b {
            c[(a, a)] = v;
        } else {
            let s = v * std::f64::consts::FRAC_1_SQRT_2;
            c[(a, b)] = s;
            c[(b, a)] = s;
        }
    }
    CoeffMatrix(c)
}

/// Eigenvalues of the reduced density matrix, descending, clamped at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationSpectrum {
    pub lambdas: Vec<f64>,
}

impl OccupationSpectrum {
    pub fn from_values(mut lambdas: Vec<f64>) -> Self {
        for l in lambdas.iter_mut() {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        OccupationSpectrum { lambdas }
    }

    /// `Tr rho_red`, which should be one.
    pub fn trace(&self) -> f64 {
        self.lambdas.iter().sum()
    }
}

/// Spectrum of `C C^T`, computed as squared eigenvalues of the symmetric `C`.
pub fn occupation_spectrum(c: &CoeffMatrix) -> Result<OccupationSpectrum> {
    symmetric_spectrum_squared(c.0.as_ref())
}

pub(crate) fn symmetric_spectrum_squared(a: MatRef<'_, f64>) -> Result<OccupationSpectrum> {
    let mu = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::eigen(a, format!("{e:?}")))?;
    Ok(OccupationSpectrum::from_values(
        mu.into_iter().map(|m| m * m).collect(),
    ))
}

/// `L = 1 - Tr rho_red^2 = 1 - sum lambda_i^2`.
pub fn linear_entropy(spec: &OccupationSpectrum) -> f64 {
    1.0 - spec.lambdas.iter().map(|l| l * l).sum::<f64>()
}

/// `S = -sum lambda_i ln lambda_i`.
pub fn von_neumann(spec: &OccupationSpectrum) -> f64 {
    -spec
        .lambdas
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum::<f64>()
}

/// Normalization of the one-particle density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `int n = 1`
    #[default]
    One,
    /// `int n = 2` (particle count)
    Two,
}

impl Normalization {
    pub fn factor(self) -> f64 {
        match self {
            Normalization::One => 1.0,
            Normalization::Two => 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::One => "one",
            Normalization::Two => "two",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "one" | "1" => Some(Normalization::One),
            "two" | "2" => Some(Normalization::Two),
            _ => None,
        }
    }
}

/// `n(x) = nu * phi(x)^T C C^T phi(x) = nu * |C phi(x)|^2` at each point.
pub fn density(c: &CoeffMatrix, gs: &GroundState, xs: &[f64], norm: Normalization) -> Vec<f64> {
    let basis = &gs.problem.basis;
    let m = basis.m;
    let table = ho_eval_rows(basis, xs);
    let nu = norm.factor();
    let mut out = Vec::with_capacity(xs.len());
    let mut v = vec![0.0; m];
    for q in 0..xs.len() {
        let phi = &table[q * m..(q + 1) * m];
        for (a, va) in v.iter_mut().enumerate() {
            let mut s = 0.0;
            for (b, &pb) in phi.iter().enumerate() {
                s += c.0[(a, b)] * pb;
            }
            *va = s;
        }
        let n = nu * v.iter().map(|x| x * x).sum::<f64>();
        out.push(if n < 0.0 { 0.0 } else { n });
    }
    out
}

/// Densities below this are treated as exactly zero in `-n ln n`.
const DENSITY_FLOOR: f64 = 1e-300;

/// Integrand `-n ln n` (zero below the floor).
pub fn entropy_density(n: f64) -> f64 {
    if n < DENSITY_FLOOR {
        0.0
    } else {
        -n * n.ln()
    }
}

/// Position-space information entropy `S_n = -int n ln n dx`.
pub fn info_entropy(c: &CoeffMatrix, gs: &GroundState, norm: Normalization) -> Result<f64> {
    let problem = &gs.problem;
    let rule = piecewise_rule(
        &quadrature_breaks(&problem.potential),
        problem.halfwidth(),
        &problem.quad,
    );
    let n = density(c, gs, &rule.nodes, norm);
    let mut acc = 0.0;
    for ((&x, &w), &nx) in rule.nodes.iter().zip(&rule.weights).zip(&n) {
        let v = entropy_density(nx);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { x, value: v });
        }
        acc += w * v;
    }
    Ok(acc)
}

/// `c^T B c` for a pair-basis block.
pub fn expectation(block: MatRef<'_, f64>, c: &[f64]) -> f64 {
    let dim = c.len();
    let mut acc = 0.0;
    for j in 0..dim {
        let mut col = 0.0;
        for i in 0..dim {
            col += block[(i, j)] * c[i];
        }
        acc += c[j] * col;
    }
    acc
}

/// `<U>` from the interaction block (which already carries `lambda`).
pub fn coulomb_expectation(gs: &GroundState, interaction: MatRef<'_, f64>) -> f64 {
    expectation(interaction, &gs.pair_coeffs)
}

/// `<V(x1) + V(x2)>` from the pair-basis potential block.
pub fn potential_expectation(gs: &GroundState, potential: MatRef<'_, f64>) -> f64 {
    expectation(potential, &gs.pair_coeffs)
}

/// Which "lowest value" the potential is shifted by before forming the ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftMode {
    /// Shift by `-V0`.
    PaperV0,
    /// Shift by the true minimum of `V`.
    #[default]
    GlobalMin,
}

impl ShiftMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ShiftMode::PaperV0 => "paper_V0",
            ShiftMode::GlobalMin => "global_min",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper_V0" | "paper_v0" => Some(ShiftMode::PaperV0),
            "global_min" => Some(ShiftMode::GlobalMin),
            _ => None,
        }
    }

    pub fn shift(self, params: &PotentialParams) -> f64 {
        match self {
            ShiftMode::PaperV0 => -params.v0,
            ShiftMode::GlobalMin => v_min(params).v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioFlag {
    Ok,
    PrecisionLimited,
}

impl RatioFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RatioFlag::Ok => "ok",
            RatioFlag::PrecisionLimited => "precision-limited",
        }
    }
}

pub const DEFAULT_DENOM_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio {
    /// NaN when the flag is `PrecisionLimited`.
    pub value: f64,
    pub flag: RatioFlag,
}

/// `<U> / (<V> - 2 V_shift)`, flagged instead of computed when the
/// denominator is below `denom_floor` in magnitude.
pub fn shifted_ratio(
    u_exp: f64,
    v_exp: f64,
    params: &PotentialParams,
    mode: ShiftMode,
    denom_floor: f64,
) -> Ratio {
    let denom = v_exp - 2.0 * mode.shift(params);
    if !(denom.abs() >= denom_floor) {
        return Ratio {
            value: f64::NAN,
            flag: RatioFlag::PrecisionLimited,
        };
    }
    Ratio {
        value: u_exp / denom,
        flag: RatioFlag::Ok,
    }
}
