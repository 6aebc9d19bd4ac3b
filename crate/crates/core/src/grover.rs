//! Search circuits and the query-complexity bounds.
//!
//! A query circuit interleaves `k` oracle calls `O_a = I - 2|a><a|` with
//! arbitrary unitaries: `F_{a,k} = U_k O_a ... U_1 O_a`, against the
//! oracle-free product `V_k = U_k ... U_1`. On the doubled space `H (x) H`
//! the controlled operators
//!
//! ```text
//! F'(|a>|b>) = |a> F_{a,k}|b>     V' = I (x) V_k     P'(|a>|b>) = e^{i l_a} |a> G_a|b>
//! ```
//!
//! with `Phi = psi (x) psi` give an upper bound `D_Phi(F', V')^2 <= 4k^2/N`
//! and, when every `|<a|F_{a,k}|psi>|^2 >= 1/2 + c`, a lower bound that
//! forces `k >= (c/4) sqrt(N)` for large `N`.
//!
//! Marked items are 0-based here.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c64, cis, vector_norm, ComplexMatrix, StateVector, C64, DEFAULT_TOL};
use crate::umetric::d_psi_unchecked;

/// Largest `N` for which `N^2`-dimensional operators are built.
pub const MAX_DOUBLED_N: usize = 32;

/// Slack allowed on every bound comparison.
pub const BOUND_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GroverInstance {
    pub n: usize,
    pub marked: usize,
    pub iterations: usize,
}

impl GroverInstance {
    pub fn new(n: usize, marked: usize, iterations: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("search space size {n} < 2")));
        }
        if marked >= n {
            return Err(Error::InvalidArgument(format!(
                "marked item {marked} out of range for N = {n}"
            )));
        }
        Ok(Self {
            n,
            marked,
            iterations,
        })
    }
}

fn check_item(a: usize, n: usize) -> Result<()> {
    if a >= n {
        return Err(Error::InvalidArgument(format!(
            "item {a} out of range for N = {n}"
        )));
    }
    Ok(())
}

/// `O_a = I - 2|a><a|`.
pub fn oracle(a: usize, n: usize) -> Result<ComplexMatrix> {
    check_item(a, n)?;
    let mut m = ComplexMatrix::identity(n);
    m[(a, a)] = c64(-1.0, 0.0);
    Ok(m)
}

pub fn uniform_state(n: usize) -> Result<StateVector> {
    StateVector::uniform(n)
}

/// `2|psi><psi| - I` for the uniform state.
pub fn diffusion(n: usize) -> ComplexMatrix {
    let w = 2.0 / n as f64;
    ComplexMatrix::from_fn(n, n, |i, j| c64(if i == j { w - 1.0 } else { w }, 0.0))
}

/// Unitary exchanging `psi` and `|a>` and fixing their orthogonal
/// complement.
pub fn target_swap(a: usize, n: usize) -> Result<ComplexMatrix> {
    check_item(a, n)?;
    if n < 2 {
        return Err(Error::InvalidArgument("target swap needs N >= 2".into()));
    }
    // Gram-Schmidt frame: e1 = psi, e2 = (|a> - s psi)/t with |a> = s e1 + t e2
    let s = 1.0 / (n as f64).sqrt();
    let t = (1.0 - 1.0 / n as f64).sqrt();
    let e1 = vec![s; n];
    let e2: Vec<f64> = (0..n)
        .map(|i| ((if i == a { 1.0 } else { 0.0 }) - s * s) / t)
        .collect();
    // The 2x2 block [[s, t], [t, -s]] sends (1,0) to (s,t) and back.
    let block = [[s, t], [t, -s]];
    let frame = [&e1, &e2];
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        let mut x = if i == j { 1.0 } else { 0.0 };
        for p in 0..2 {
            x -= frame[p][i] * frame[p][j];
            for q in 0..2 {
                x += block[p][q] * frame[p][i] * frame[q][j];
            }
        }
        c64(x, 0.0)
    }))
}

/// The unitaries `U_1, ..., U_k` interleaved with oracle calls.
#[derive(Clone, Debug)]
pub struct QuerySchedule {
    n: usize,
    steps: Vec<ComplexMatrix>,
}

impl QuerySchedule {
    pub fn new(n: usize, steps: Vec<ComplexMatrix>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("search space size {n} < 2")));
        }
        for (j, u) in steps.iter().enumerate() {
            if u.dim()? != n {
                return Err(Error::DimensionMismatch(format!(
                    "step {j} has dimension {}, expected {n}",
                    u.rows()
                )));
            }
            u.ensure_unitary(DEFAULT_TOL)?;
        }
        Ok(Self { n, steps })
    }

    /// Every step is the diffusion operator.
    pub fn standard(n: usize, k: usize) -> Result<Self> {
        Self::new(n, vec![diffusion(n); k])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn queries(&self) -> usize {
        self.steps.len()
    }

    /// `F_{a,k} = U_k O_a ... U_1 O_a`.
    pub fn circuit(&self, a: usize) -> Result<ComplexMatrix> {
        check_item(a, self.n)?;
        let mut m = ComplexMatrix::identity(self.n);
        for u in &self.steps {
            // O_a m negates row a
            for j in 0..self.n {
                m[(a, j)] = -m[(a, j)];
            }
            m = u.matmul(&m)?;
        }
        Ok(m)
    }

    /// `V_k = U_k ... U_1`.
    pub fn oracle_free(&self) -> Result<ComplexMatrix> {
        let mut m = ComplexMatrix::identity(self.n);
        for u in &self.steps {
            m = u.matmul(&m)?;
        }
        Ok(m)
    }

    /// `|<a|F_{a,k}|psi>|^2` for every `a`.
    pub fn success_probabilities(&self) -> Result<Vec<f64>> {
        let psi = uniform_state(self.n)?;
        (0..self.n)
            .map(|a| Ok(self.circuit(a)?.matvec(psi.amplitudes())?[a].norm_sqr()))
            .collect()
    }
}

pub fn grover_circuit(inst: &GroverInstance) -> Result<ComplexMatrix> {
    QuerySchedule::standard(inst.n, inst.iterations)?.circuit(inst.marked)
}

/// `|<a|F_{a,k}|psi>|^2` for the standard schedule.
pub fn success_probability(inst: &GroverInstance) -> Result<f64> {
    let f = grover_circuit(inst)?;
    let psi = uniform_state(inst.n)?;
    Ok(f.matvec(psi.amplitudes())?[inst.marked].norm_sqr())
}

/// `sin^2((2k+1) arcsin(1/sqrt N))`.
pub fn success_probability_closed_form(n: usize, k: usize) -> f64 {
    let theta = (1.0 / (n as f64).sqrt()).asin();
    ((2 * k + 1) as f64 * theta).sin().powi(2)
}

/// `round(pi / (4 arcsin(1/sqrt N)) - 1/2)`.
pub fn optimal_iterations(n: usize) -> usize {
    let theta = (1.0 / (n as f64).sqrt()).asin();
    (PI / (4.0 * theta) - 0.5).round().max(0.0) as usize
}

/// Which state fixes the phases `l_a` of `P'`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseReference {
    /// `e^{i l_a} = <a|V_k psi> / |<a|V_k psi>|` (1 when zero).
    #[default]
    OracleFree,
    /// Same with `F_{a,k} psi` in place of `V_k psi`.
    Oracle,
}

/// Block-diagonal operators on the doubled space, dense.
#[derive(Clone, Debug)]
pub struct DoubledOperators {
    pub fp: ComplexMatrix,
    pub vp: ComplexMatrix,
    pub pp: ComplexMatrix,
    /// `l_a` for each item.
    pub phases: Vec<f64>,
}

fn block_diagonal(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let n = blocks[0].rows();
    let dim = n * blocks.len();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for (a, b) in blocks.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                out[(a * n + i, a * n + j)] = b[(i, j)];
            }
        }
    }
    out
}

fn check_budget(n: usize) -> Result<()> {
    if n > MAX_DOUBLED_N {
        return Err(Error::Budget(format!(
            "doubled space for N = {n} exceeds N <= {MAX_DOUBLED_N}"
        )));
    }
    Ok(())
}

/// Standard-schedule doubled operators.
pub fn doubled_operators(n: usize, k: usize) -> Result<DoubledOperators> {
    check_budget(n)?;
    doubled_operators_for(&QuerySchedule::standard(n, k)?, PhaseReference::OracleFree)
}

pub fn doubled_operators_for(
    schedule: &QuerySchedule,
    reference: PhaseReference,
) -> Result<DoubledOperators> {
    let n = schedule.n();
    check_budget(n)?;
    let psi = uniform_state(n)?;
    let v = schedule.oracle_free()?;
    let vpsi = v.matvec(psi.amplitudes())?;
    let f_blocks: Vec<ComplexMatrix> =
        (0..n).map(|a| schedule.circuit(a)).collect::<Result<_>>()?;
    let mut phases = Vec::with_capacity(n);
    let mut p_blocks = Vec::with_capacity(n);
    for (a, fa) in f_blocks.iter().enumerate() {
        let amp = match reference {
            PhaseReference::OracleFree => vpsi[a],
            PhaseReference::Oracle => fa.matvec(psi.amplitudes())?[a],
        };
        let lambda = if amp.norm() > 0.0 { amp.arg() } else { 0.0 };
        phases.push(lambda);
        p_blocks.push(target_swap(a, n)?.scale(cis(lambda)));
    }
    // Block unitarity certifies the dense operators.
    for b in f_blocks.iter().chain(&p_blocks) {
        b.ensure_unitary(DEFAULT_TOL)?;
    }
    Ok(DoubledOperators {
        fp: block_diagonal(&f_blocks),
        vp: block_diagonal(&vec![v; n]),
        pp: block_diagonal(&p_blocks),
        phases,
    })
}

/// `Phi = psi (x) psi`.
pub fn doubled_uniform_state(n: usize) -> Result<StateVector> {
    let psi = uniform_state(n)?;
    Ok(psi.tensor(&psi))
}

/// Every quantity of the upper- and lower-bound chains for one schedule.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub k: usize,
    /// `D_Phi(F', V')^2`.
    pub d_phi_sq: f64,
    /// `4k^2 / N`.
    pub upper: f64,
    pub upper_holds: bool,
    /// `||F' Phi - V' Phi||^2`, the middle of the chain.
    pub doubled_gap_sq: f64,
    /// `sum_a ||(F_{a,k} - V_k) psi||^2`, which equals `N` times the above.
    pub hybrid_sum: f64,
    /// `||sum_a (F_{a,k} - V_k) psi||^2`.
    pub summed_gap_sq: f64,
    /// `d_phi_sq <= doubled_gap_sq <= 4k^2/N` and `hybrid_sum <= 4k^2`.
    pub chain_holds: bool,
    pub summed_gap_holds: bool,
    /// `(D_Phi(P', V'), D_Phi(P', F'))`.
    pub lower_terms: (f64, f64),
    /// `sqrt(1 - 1/N)`.
    pub lower_v_floor: f64,
    pub lower_v_holds: bool,
    pub success_probs: Vec<f64>,
    pub success_min: f64,
    pub phase_reference: PhaseReference,
    pub margin: Option<MarginReport>,
}

/// The lower-bound argument at a requested success margin `c`.
#[derive(Clone, Debug, Serialize)]
pub struct MarginReport {
    pub c: f64,
    /// `min_a success >= 1/2 + c`.
    pub achieved: bool,
    /// `sqrt(1/2 - c)`.
    pub lower_f_ceiling: f64,
    /// `D_Phi(P', F') <= sqrt(1/2 - c)`; only meaningful when achieved.
    pub lower_f_holds: bool,
    /// `D_Phi(P', V') / sqrt 2 - D_Phi(P', F')`.
    pub combined_lower: f64,
    /// `D_Phi(F', V') >= combined_lower`.
    pub combined_holds: bool,
    /// `sqrt(1 - 1/N) - 1 + c >= c / sqrt 2` at this `N`.
    pub asymptotic_step_holds: bool,
    /// `(c/4) sqrt N`.
    pub implied_k_min: f64,
    /// `k >= implied_k_min`, checked only when the margin is achieved.
    pub implied_holds: bool,
}

pub fn bound_report(
    schedule: &QuerySchedule,
    reference: PhaseReference,
    c: Option<f64>,
) -> Result<BoundReport> {
    let n = schedule.n();
    let k = schedule.queries();
    if let Some(c) = c {
        if !(c > 0.0 && c <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "margin c = {c} not in (0, 1/2]"
            )));
        }
    }
    let ops = doubled_operators_for(schedule, reference)?;
    let phi = doubled_uniform_state(n)?;
    let d_fv = d_psi_unchecked(&ops.fp, &ops.vp, &phi)?;
    let d_pv = d_psi_unchecked(&ops.pp, &ops.vp, &phi)?;
    let d_pf = d_psi_unchecked(&ops.pp, &ops.fp, &phi)?;

    let fphi = ops.fp.matvec(phi.amplitudes())?;
    let vphi = ops.vp.matvec(phi.amplitudes())?;
    let diff: Vec<C64> = fphi.iter().zip(&vphi).map(|(a, b)| a - b).collect();
    let doubled_gap_sq = vector_norm(&diff).powi(2);

    let psi = uniform_state(n)?;
    let vpsi = schedule.oracle_free()?.matvec(psi.amplitudes())?;
    let mut hybrid_sum = 0.0;
    let mut summed = vec![C64::new(0.0, 0.0); n];
    let mut success_probs = Vec::with_capacity(n);
    for a in 0..n {
        let fpsi = schedule.circuit(a)?.matvec(psi.amplitudes())?;
        success_probs.push(fpsi[a].norm_sqr());
        let d: Vec<C64> = fpsi.iter().zip(&vpsi).map(|(x, y)| x - y).collect();
        hybrid_sum += vector_norm(&d).powi(2);
        for (s, x) in summed.iter_mut().zip(&d) {
            *s += x;
        }
    }
    let summed_gap_sq = vector_norm(&summed).powi(2);
    let k2 = (k * k) as f64;
    let upper = 4.0 * k2 / n as f64;
    let d_phi_sq = d_fv * d_fv;
    let chain_holds = d_phi_sq <= doubled_gap_sq + BOUND_TOL
        && doubled_gap_sq <= upper + BOUND_TOL
        && hybrid_sum <= 4.0 * k2 + BOUND_TOL;
    let lower_v_floor = (1.0 - 1.0 / n as f64).sqrt();
    let success_min = success_probs.iter().copied().fold(f64::INFINITY, f64::min);

    let margin = c.map(|c| {
        let achieved = success_min >= 0.5 + c;
        let lower_f_ceiling = (0.5 - c).max(0.0).sqrt();
        let combined_lower = FRAC_1_SQRT_2 * d_pv - d_pf;
        let implied_k_min = c / 4.0 * (n as f64).sqrt();
        MarginReport {
            c,
            achieved,
            lower_f_ceiling,
            lower_f_holds: d_pf <= lower_f_ceiling + BOUND_TOL,
            combined_lower,
            combined_holds: d_fv >= combined_lower - BOUND_TOL,
            asymptotic_step_holds: lower_v_floor - 1.0 + c >= c * FRAC_1_SQRT_2,
            implied_k_min,
            implied_holds: !achieved || k as f64 >= implied_k_min,
        }
    });

    Ok(BoundReport {
        n,
        k,
        d_phi_sq,
        upper,
        upper_holds: d_phi_sq <= upper + BOUND_TOL,
        doubled_gap_sq,
        hybrid_sum,
        summed_gap_sq,
        chain_holds,
        summed_gap_holds: summed_gap_sq <= 4.0 * k2 + BOUND_TOL,
        lower_terms: (d_pv, d_pf),
        lower_v_floor,
        lower_v_holds: d_pv >= lower_v_floor - BOUND_TOL,
        success_probs,
        success_min,
        phase_reference: reference,
        margin,
    })
}

/// Upper-bound chain for the standard schedule.
pub fn upper_bound_check(n: usize, k: usize) -> Result<BoundReport> {
    check_budget(n)?;
    bound_report(
        &QuerySchedule::standard(n, k)?,
        PhaseReference::OracleFree,
        None,
    )
}

/// Upper- and lower-bound chains for the standard schedule at margin `c`.
pub fn lower_bound_check(n: usize, k: usize, c: f64) -> Result<BoundReport> {
    check_budget(n)?;
    bound_report(
        &QuerySchedule::standard(n, k)?,
        PhaseReference::OracleFree,
        Some(c),
    )
}
