//! Two-electron Hamiltonian in the symmetric (spatial-singlet) pair basis.
//!
//! Pair functions are `Phi_ab = (phi_a phi_b + phi_b phi_a) / sqrt(2 (1 + delta_ab))`
//! for `a <= b`, so the space has dimension `M (M + 1) / 2`.

use faer::{Mat, MatRef, Side};

use crate::basis::{ho_eval_rows, kinetic_matrix, BasisSpec};
use crate::error::{Error, Result};
use crate::potential::{quadrature_breaks, v_eval, PotentialParams};
use crate::quadrature::{gauss_hermite, hermite_order, piecewise_rule, truncation_halfwidth, QuadSpec};

/// Default reach of the highest orbital relative to `d + R`.
pub const DEFAULT_COVERAGE: f64 = 1.2;
/// Default tolerance of the basis-size convergence gate, effective Hartree.
pub const DEFAULT_CONVERGE_TOL: f64 = 1e-5;
/// Orbitals dropped for the coarse solve of the convergence gate.
pub const GATE_STEP: usize = 10;

/// Everything that defines one ground-state solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem {
    pub basis: BasisSpec,
    pub potential: PotentialParams,
    pub quad: QuadSpec,
    pub coverage_factor: f64,
}

impl Problem {
    pub fn new(basis: BasisSpec, potential: PotentialParams, quad: QuadSpec) -> Self {
        Problem {
            basis,
            potential,
            quad,
            coverage_factor: DEFAULT_COVERAGE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.basis.validate()?;
        self.potential.validate()?;
        self.quad.validate()?;
        if !(self.coverage_factor > 0.0) {
            return Err(Error::invalid("coverage_factor", "need coverage_factor > 0"));
        }
        self.basis
            .check_coverage(self.potential.extent(), self.coverage_factor)
    }

    /// Integration half-width for potential and density integrals.
    pub fn halfwidth(&self) -> f64 {
        truncation_halfwidth(&self.basis, &self.potential, &self.quad)
    }
}

/// Bijection between unordered orbital pairs `a <= b` and `0..M(M+1)/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairIndex {
    m: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndex {
    pub fn new(m: usize) -> Self {
        let mut pairs = Vec::with_capacity(m * (m + 1) / 2);
        for a in 0..m {
            for b in a..m {
                pairs.push((a, b));
            }
        }
        PairIndex { m, pairs }
    }

    pub fn orbitals(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Linear index of the pair `{a, b}` in either order.
    pub fn index(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        debug_assert!(b < self.m);
        a * (2 * self.m - a + 1) / 2 + (b - a)
    }

    /// The pair `(a, b)` with `a <= b` at a linear index.
    pub fn pair(&self, i: usize) -> (usize, usize) {
        self.pairs[i]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// One-body matrix split into its kinetic and potential parts.
#[derive(Debug, Clone)]
pub struct OneBody {
    pub kinetic: Mat<f64>,
    pub potential: Mat<f64>,
}

impl OneBody {
    pub fn total(&self) -> Mat<f64> {
        &self.kinetic + &self.potential
    }
}

/// `h = T + V` in the oscillator basis; `V` by breakpoint-split quadrature.
pub fn one_body_matrix(problem: &Problem) -> Result<OneBody> {
    problem.validate()?;
    let basis = &problem.basis;
    let params = &problem.potential;
    let m = basis.m;
    let rule = piecewise_rule(
        &quadrature_breaks(params),
        problem.halfwidth(),
        &problem.quad,
    );
    let table = ho_eval_rows(basis, &rule.nodes);
    let mut wv = Vec::with_capacity(rule.nodes.len());
    for (q, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let v = v_eval(params, x);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { x, value: v });
        }
        if let Some(bad) = table[q * m..(q + 1) * m].iter().find(|t| !t.is_finite()) {
            return Err(Error::NonFiniteIntegrand { x, value: *bad });
        }
        wv.push(w * v);
    }

    let mut pot = Mat::<f64>::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let mut acc = 0.0;
            for (q, &f) in wv.iter().enumerate() {
                let row = &table[q * m..(q + 1) * m];
                acc += f * row[a] * row[b];
            }
            pot[(a, b)] = acc;
            pot[(b, a)] = acc;
        }
    }
    Ok(OneBody {
        kinetic: kinetic_matrix(basis),
        potential: pot,
    })
}

/// Four-orbital overlaps `I_abcd = int phi_a phi_b phi_c phi_d dx`, stored
/// once per sorted index quadruple.
#[derive(Debug, Clone)]
pub struct InteractionTensor {
    m: usize,
    values: Vec<f64>,
}

fn binom(n: usize, k: usize) -> usize {
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn packed(a: usize, b: usize, c: usize, d: usize) -> usize {
    binom(d + 3, 4) + binom(c + 2, 3) + binom(b + 1, 2) + a
}

impl InteractionTensor {
    pub fn orbitals(&self) -> usize {
        self.m
    }

    /// Number of stored (symmetry-distinct) entries.
    pub fn stored(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let mut k = [a, b, c, d];
        k.sort_unstable();
        self.values[packed(k[0], k[1], k[2], k[3])]
    }
}

/// Contact-interaction tensor by Gauss-Hermite quadrature at rate `2 omega`,
/// exact for every entry (total polynomial degree at most `4 (M - 1)`).
pub fn interaction_tensor(basis: &BasisSpec) -> InteractionTensor {
    let m = basis.m;
    let rule = gauss_hermite(hermite_order(4 * (m - 1)));
    let scale = 1.0 / (2.0 * basis.omega).sqrt();
    let xs: Vec<f64> = rule.nodes.iter().map(|t| scale * t).collect();
    let table = ho_eval_rows(basis, &xs);
    let nq = xs.len();
    // column-major copy: phi_n at all nodes contiguous
    let mut cols = vec![0.0; m * nq];
    for q in 0..nq {
        for n in 0..m {
            cols[n * nq + q] = table[q * m + n];
        }
    }
    let w: Vec<f64> = rule.weights.iter().map(|w| w * scale).collect();

    let mut values = Vec::with_capacity(binom(m + 3, 4));
    let mut ab = vec![0.0; nq];
    for d in 0..m {
        for c in 0..=d {
            for b in 0..=c {
                for a in 0..=b {
                    if (a + b + c + d) % 2 == 1 {
                        values.push(0.0);
                        continue;
                    }
                    let (pa, pb) = (&cols[a * nq..(a + 1) * nq], &cols[b * nq..(b + 1) * nq]);
                    let (pc, pd) = (&cols[c * nq..(c + 1) * nq], &cols[d * nq..(d + 1) * nq]);
                    for q in 0..nq {
                        ab[q] = w[q] * pa[q] * pb[q];
                    }
                    let mut acc = 0.0;
                    for q in 0..nq {
                        acc += ab[q] * pc[q] * pd[q];
                    }
                    values.push(acc);
                }
            }
        }
    }
    debug_assert_eq!(values.len(), binom(m + 3, 4));
    InteractionTensor { m, values }
}

fn norm_factor(a: usize, b: usize, c: usize, d: usize) -> f64 {
    match (a == b, c == d) {
        (true, true) => 0.5,
        (false, false) => 1.0,
        _ => std::f64::consts::FRAC_1_SQRT_2,
    }
}

/// `h (x) 1 + 1 (x) h` in the pair basis.
pub fn pair_one_body(h: MatRef<'_, f64>, idx: &PairIndex) -> Result<Mat<f64>> {
    let m = idx.orbitals();
    if h.nrows() != m || h.ncols() != m {
        return Err(Error::Dimension {
            expected: m,
            got: h.nrows(),
        });
    }
    let dim = idx.len();
    let mut out = Mat::<f64>::zeros(dim, dim);
    for p in 0..dim {
        let (a, b) = idx.pair(p);
        for q in p..dim {
            let (c, d) = idx.pair(q);
            let mut s = 0.0;
            if b == d {
                s += h[(a, c)];
            }
            if a == c {
                s += h[(b, d)];
            }
            if b == c {
                s += h[(a, d)];
            }
            if a == d {
                s += h[(b, c)];
            }
            if s != 0.0 {
                let v = norm_factor(a, b, c, d) * s;
                out[(p, q)] = v;
                out[(q, p)] = v;
            }
        }
    }
    Ok(out)
}

/// `lambda * delta(x1 - x2)` in the pair basis.
pub fn pair_interaction(tensor: &InteractionTensor, lambda: f64, idx: &PairIndex) -> Result<Mat<f64>> {
    if tensor.orbitals() != idx.orbitals() {
        return Err(Error::Dimension {
            expected: idx.orbitals(),
            got: tensor.orbitals(),
        });
    }
    let dim = idx.len();
    let mut out = Mat::<f64>::zeros(dim, dim);
    if lambda == 0.0 {
        return Ok(out);
    }
    for p in 0..dim {
        let (a, b) = idx.pair(p);
        for q in p..dim {
            let (c, d) = idx.pair(q);
            let v = lambda * 2.0 * norm_factor(a, b, c, d) * tensor.get(a, b, c, d);
            out[(p, q)] = v;
            out[(q, p)] = v;
        }
    }
    Ok(out)
}

/// Pair-basis Hamiltonian kept as its three physical parts.
#[derive(Debug, Clone)]
pub struct TwoBody {
    pub kinetic: Mat<f64>,
    pub potential: Mat<f64>,
    pub interaction: Mat<f64>,
}

impl TwoBody {
    pub fn build(one: &OneBody, tensor: &InteractionTensor, params: &PotentialParams, idx: &PairIndex) -> Result<Self> {
        Ok(TwoBody {
            kinetic: pair_one_body(one.kinetic.as_ref(), idx)?,
            potential: pair_one_body(one.potential.as_ref(), idx)?,
            interaction: pair_interaction(tensor, params.lambda, idx)?,
        })
    }

    pub fn total(&self) -> Mat<f64> {
        let dim = self.kinetic.nrows();
        Mat::from_fn(dim, dim, |i, j| {
            self.kinetic[(i, j)] + self.potential[(i, j)] + self.interaction[(i, j)]
        })
    }
}

/// Full pair-basis Hamiltonian from `h`, the contact tensor and `lambda`.
pub fn assemble_two_body(
    h: MatRef<'_, f64>,
    tensor: &InteractionTensor,
    params: &PotentialParams,
    idx: &PairIndex,
) -> Result<Mat<f64>> {
    let one = pair_one_body(h, idx)?;
    let int = pair_interaction(tensor, params.lambda, idx)?;
    Ok(&one + &int)
}

/// Outcome of comparing `E_0(M)` with `E_0(M - 10)` on the nested basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceGate {
    pub coarse_m: usize,
    pub coarse_energy: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    /// Unit-norm coefficients over the pair basis.
    pub pair_coeffs: Vec<f64>,
    pub problem: Problem,
    pub gate: Option<ConvergenceGate>,
}

impl GroundState {
    pub fn converged(&self) -> bool {
        self.gate.map(|g| g.converged).unwrap_or(false)
    }
}

fn check_finite(h: MatRef<'_, f64>) -> Result<()> {
    for j in 0..h.ncols() {
        for i in 0..h.nrows() {
            if !h[(i, j)].is_finite() {
                return Err(Error::eigen(h, "non-finite matrix entry"));
            }
        }
    }
    Ok(())
}

/// Lowest eigenpair of a dense symmetric matrix; the eigenvector's
/// largest-magnitude entry is made positive.
pub fn lowest_eigenpair(h: MatRef<'_, f64>) -> Result<(f64, Vec<f64>)> {
    check_finite(h)?;
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::eigen(h, format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut k = 0;
    for i in 1..s.nrows() {
        if s[i] < s[k] {
            k = i;
        }
    }
    let mut v: Vec<f64> = (0..u.nrows()).map(|i| u[(i, k)]).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut big = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[big].abs() {
            big = i;
        }
    }
    let sign = if v[big] < 0.0 { -1.0 } else { 1.0 };
    for x in v.iter_mut() {
        *x *= sign / norm;
    }
    Ok((s[k], v))
}

/// Dense symmetric diagonalization of the pair-basis Hamiltonian.
pub fn ground_state(h: MatRef<'_, f64>, idx: &PairIndex, problem: &Problem) -> Result<GroundState> {
    if h.nrows() != idx.len() || h.ncols() != idx.len() {
        return Err(Error::Dimension {
            expected: idx.len(),
            got: h.nrows(),
        });
    }
    let (energy, pair_coeffs) = lowest_eigenpair(h)?;
    Ok(GroundState {
        energy,
        pair_coeffs,
        problem: *problem,
        gate: None,
    })
}

/// Lowest eigenvalue restricted to orbitals `< coarse_m`, i.e. the same
/// problem in the nested smaller basis.
pub fn coarse_energy(h: MatRef<'_, f64>, idx: &PairIndex, coarse_m: usize) -> Result<f64> {
    let keep: Vec<usize> = (0..idx.len())
        .filter(|&p| {
            let (_, b) = idx.pair(p);
            b < coarse_m
        })
        .collect();
    let sub = Mat::<f64>::from_fn(keep.len(), keep.len(), |i, j| h[(keep[i], keep[j])]);
    check_finite(sub.as_ref())?;
    let vals = sub
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::eigen(sub.as_ref(), format!("{e:?}")))?;
    Ok(vals.into_iter().fold(f64::INFINITY, f64::min))
}

/// Attaches the `M` vs `M - 10` gate to a ground state. Bases with
/// `M <= 11` have no coarse level and stay ungated.
pub fn apply_gate(gs: &mut GroundState, h: MatRef<'_, f64>, idx: &PairIndex, tol: f64) -> Result<()> {
    let m = idx.orbitals();
    if m < GATE_STEP + 2 {
        gs.gate = None;
        return Ok(());
    }
    let coarse_m = m - GATE_STEP;
    let coarse = coarse_energy(h, idx, coarse_m)?;
    gs.gate = Some(ConvergenceGate {
        coarse_m,
        coarse_energy: coarse,
        converged: (gs.energy - coarse).abs() < tol,
    });
    Ok(())
}

/// All intermediate products of one solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub idx: PairIndex,
    pub one_body: OneBody,
    pub tensor: InteractionTensor,
    pub two_body: TwoBody,
    pub ground: GroundState,
}

/// Full pipeline: matrices, eigensolve and convergence gate.
pub fn solve(problem: &Problem, converge_tol: f64) -> Result<Solution> {
    let one_body = one_body_matrix(problem)?;
    let tensor = interaction_tensor(&problem.basis);
    let idx = PairIndex::new(problem.basis.m);
    let two_body = TwoBody::build(&one_body, &tensor, &problem.potential, &idx)?;
    let h = two_body.total();
    let mut ground = ground_state(h.as_ref(), &idx, problem)?;
    apply_gate(&mut ground, h.as_ref(), &idx, converge_tol)?;
    Ok(Solution {
        idx,
        one_body,
        tensor,
        two_body,
        ground,
    })
}
