//! Checking that one circuit approximates another from basis-state
//! measurements.
//!
//! For every vector `alpha` of `n + 1` independent orthonormal bases the
//! protocol prepares `alpha`, runs `V`, runs `U^dagger`, and measures the
//! projector onto `alpha`. The success probability is
//! `p = |<alpha|U^dagger V|alpha>|^2`, so `sqrt(1 - p)` is `D_alpha(U, V)`.
//! The largest of these is a lower bound on `D(U, V)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, cis, derive_seed, inner, seeded_rng, ComplexMatrix, StateVector, C64, DEFAULT_TOL,
};
use crate::umetric::sqrt_complement;

use rand::Rng;
use rayon::prelude::*;

/// Singular values below this count as zero in the independence rank test.
pub const RANK_TOL: f64 = 1e-8;

/// Overall confidence level of a finite-shot verification.
pub const CONFIDENCE: f64 = 0.99;

/// One gate applied to a subset of wires.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateOp {
    pub matrix: ComplexMatrix,
    pub wires: Vec<usize>,
}

/// A sequence of gates on `wires` subsystems of equal local dimension.
///
/// Wire 0 is the most significant subsystem, so a gate on wire 0 of a
/// two-wire circuit embeds as `G (x) I`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CircuitJson")]
pub struct Circuit {
    pub dim: usize,
    pub wires: usize,
    pub gates: Vec<GateOp>,
}

#[derive(Deserialize)]
struct CircuitJson {
    dim: usize,
    wires: usize,
    gates: Vec<GateOp>,
}

impl TryFrom<CircuitJson> for Circuit {
    type Error = Error;

    fn try_from(c: CircuitJson) -> Result<Self> {
        Circuit::new(c.dim, c.wires, c.gates)
    }
}

/// Integer `b` with `b^wires == dim`.
fn local_dimension(dim: usize, wires: usize) -> Result<usize> {
    if wires == 0 {
        return Err(Error::InvalidArgument(
            "circuit needs at least one wire".into(),
        ));
    }
    let guess = (dim as f64).powf(1.0 / wires as f64).round() as usize;
    for b in guess.saturating_sub(1).max(1)..=guess + 1 {
        if b.checked_pow(wires as u32) == Some(dim) {
            return Ok(b);
        }
    }
    Err(Error::InvalidArgument(format!(
        "dimension {dim} is not a perfect power with {wires} wires"
    )))
}

impl Circuit {
    pub fn new(dim: usize, wires: usize, gates: Vec<GateOp>) -> Result<Self> {
        let base = local_dimension(dim, wires)?;
        for (g, op) in gates.iter().enumerate() {
            let mut seen = op.wires.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != op.wires.len() || op.wires.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "gate {g}: wire list must be non-empty and distinct"
                )));
            }
            if let Some(&w) = op.wires.iter().find(|&&w| w >= wires) {
                return Err(Error::InvalidArgument(format!(
                    "gate {g}: wire {w} out of range for {wires} wires"
                )));
            }
            let expected = base.pow(op.wires.len() as u32);
            if op.matrix.rows() != expected || op.matrix.cols() != expected {
                return Err(Error::DimensionMismatch(format!(
                    "gate {g}: {}x{} matrix on {} wires of dimension {base}",
                    op.matrix.rows(),
                    op.matrix.cols(),
                    op.wires.len()
                )));
            }
            op.matrix.ensure_unitary(DEFAULT_TOL)?;
        }
        Ok(Self { dim, wires, gates })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            wires: 1,
            gates: Vec::new(),
        }
    }

    /// Single-gate circuit acting on the whole space.
    pub fn from_unitary(u: ComplexMatrix) -> Result<Self> {
        let dim = u.dim()?;
        Self::new(
            dim,
            1,
            vec![GateOp {
                matrix: u,
                wires: vec![0],
            }],
        )
    }

    pub fn push(&mut self, matrix: ComplexMatrix, wires: Vec<usize>) -> Result<()> {
        let mut gates = std::mem::take(&mut self.gates);
        gates.push(GateOp { matrix, wires });
        *self = Circuit::new(self.dim, self.wires, gates)?;
        Ok(())
    }

    fn base(&self) -> usize {
        local_dimension(self.dim, self.wires).expect("validated at construction")
    }

    /// Full-space matrix of one gate, identity on the other wires.
    pub fn embed(&self, op: &GateOp) -> ComplexMatrix {
        let base = self.base();
        let k = op.wires.len();
        let sub = op.matrix.rows();
        // stride of each wire's digit in the full index, wire 0 most significant
        let strides: Vec<usize> = op
            .wires
            .iter()
            .map(|&w| base.pow((self.wires - 1 - w) as u32))
            .collect();
        let digits_of = |index: usize| -> usize {
            strides
                .iter()
                .fold(0, |acc, &s| acc * base + (index / s) % base)
        };
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for col in 0..self.dim {
            let c_sub = digits_of(col);
            let mut rest = col;
            for &s in &strides {
                rest -= ((col / s) % base) * s;
            }
            for r_sub in 0..sub {
                let amp = op.matrix[(r_sub, c_sub)];
                if amp == c64(0.0, 0.0) {
                    continue;
                }
                let mut row = rest;
                let mut rem = r_sub;
                for j in (0..k).rev() {
                    row += (rem % base) * strides[j];
                    rem /= base;
                }
                out[(row, col)] = amp;
            }
        }
        out
    }

    /// Product of gate embeddings, first gate applied first.
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        let mut total = ComplexMatrix::identity(self.dim);
        for op in &self.gates {
            total = self.embed(op).matmul(&total)?;
        }
        Ok(total)
    }
}

pub fn circuit_unitary(c: &Circuit) -> Result<ComplexMatrix> {
    c.unitary()
}

/// `n + 1` orthonormal bases of `C^n`, each stored as a matrix of column
/// vectors, with an independence certificate.
#[derive(Clone, Debug, Serialize)]
pub struct BasisSet {
    pub dim: usize,
    pub bases: Vec<ComplexMatrix>,
    pub independent: bool,
}

#[derive(Deserialize)]
struct BasisSetJson {
    dim: usize,
    bases: Vec<ComplexMatrix>,
}

impl<'de> Deserialize<'de> for BasisSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = BasisSetJson::deserialize(d)?;
        let set = BasisSet::new(raw.bases).map_err(serde::de::Error::custom)?;
        if set.dim != raw.dim {
            return Err(serde::de::Error::custom(format!(
                "declared dim {} but bases have dimension {}",
                raw.dim, set.dim
            )));
        }
        Ok(set)
    }
}

impl BasisSet {
    /// Validates shape and orthonormality, then computes the independence
    /// certificate.
    pub fn new(bases: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = bases
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty basis set".into()))?
            .dim()?;
        if bases.len() != dim + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} bases for dimension {dim}, got {}",
                dim + 1,
                bases.len()
            )));
        }
        for b in &bases {
            if b.dim()? != dim {
                return Err(Error::DimensionMismatch(
                    "bases of different dimension".into(),
                ));
            }
            b.ensure_unitary(DEFAULT_TOL)?;
        }
        let mut set = Self {
            dim,
            bases,
            independent: false,
        };
        set.independent = independence_rank(&set) == dim * dim - 1;
        Ok(set)
    }

    /// Vector `i` of basis `k`.
    pub fn vector(&self, k: usize, i: usize) -> Result<StateVector> {
        StateVector::new(self.bases[k].column(i))
    }
}

/// Rank of the stacked traceless operators `P^k_i - I/n`, `i < n - 1`.
pub fn independence_rank(b: &BasisSet) -> usize {
    let n = b.dim;
    if n == 1 {
        return 0;
    }
    let rows: Vec<Vec<f64>> = b
        .bases
        .iter()
        .flat_map(|basis| (0..n - 1).map(move |i| basis.column(i)))
        .map(|v| {
            let mut flat = Vec::with_capacity(2 * n * n);
            for r in 0..n {
                for c in 0..n {
                    let mut z = v[r] * v[c].conj();
                    if r == c {
                        z -= 1.0 / n as f64;
                    }
                    flat.push(z.re);
                    flat.push(z.im);
                }
            }
            flat
        })
        .collect();
    let m = nalgebra::DMatrix::from_fn(rows.len(), 2 * n * n, |i, j| rows[i][j]);
    m.singular_values()
        .iter()
        .filter(|&&s| s > RANK_TOL)
        .count()
}

/// True iff the traceless projector shifts span all `n^2 - 1` directions.
pub fn independence_check(b: &BasisSet) -> bool {
    b.dim > 1 && independence_rank(b) == b.dim * b.dim - 1
}

fn is_prime(d: usize) -> bool {
    d >= 2
        && (2..)
            .take_while(|k| k * k <= d)
            .all(|k| !d.is_multiple_of(k))
}

/// Mutually unbiased bases for prime `d`: the computational basis plus `d`
/// quadratic-phase Fourier bases.
pub fn mub_bases(d: usize) -> Result<BasisSet> {
    if !is_prime(d) {
        return Err(Error::InvalidArgument(format!("{d} is not prime")));
    }
    let norm = 1.0 / (d as f64).sqrt();
    let mut bases = vec![ComplexMatrix::identity(d)];
    for k in 0..d {
        let basis = ComplexMatrix::from_fn(d, d, |m, j| {
            let phase = if d == 2 {
                // i^{k m^2} (-1)^{j m}
                std::f64::consts::FRAC_PI_2 * (k * m * m) as f64
                    + std::f64::consts::PI * (j * m) as f64
            } else {
                std::f64::consts::TAU * ((k * m * m + j * m) % d) as f64 / d as f64
            };
            cis(phase) * norm
        });
        bases.push(basis);
    }
    BasisSet::new(bases)
}

/// Independent Haar-random bases; `n + 1` of them are independent with
/// probability one.
pub fn random_bases(dim: usize, rng_seed: u64) -> Result<BasisSet> {
    let mut rng = seeded_rng(rng_seed);
    BasisSet::new(
        (0..=dim)
            .map(|_| crate::linalg::haar_random_unitary_with(dim, &mut rng))
            .collect(),
    )
}

/// Number of successes in `shots` Bernoulli trials with success probability
/// `|<projector_state|state>|^2`.
pub fn simulate_measurement(
    state: &StateVector,
    projector_state: &StateVector,
    shots: u64,
    rng_seed: u64,
) -> Result<u64> {
    let p = projector_state.inner(state)?.norm_sqr().clamp(0.0, 1.0);
    Ok(bernoulli_count(p, shots, rng_seed))
}

fn bernoulli_count(p: f64, shots: u64, rng_seed: u64) -> u64 {
    let mut rng = seeded_rng(rng_seed);
    (0..shots).filter(|_| rng.random_bool(p)).count() as u64
}

/// Exact probabilities, or a finite number of measurement shots per state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shots {
    Exact,
    Finite(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateEstimate {
    pub basis: usize,
    pub vector: usize,
    pub probability: f64,
    pub estimate: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub epsilon: f64,
    pub shots: Shots,
    pub per_state: Vec<StateEstimate>,
    pub max_estimate: f64,
    /// Largest per-state radius; applied uniformly in the verdict.
    pub confidence_radius: f64,
    pub verdict: Verdict,
}

/// Two-sided Hoeffding half-width for a Bernoulli mean at failure
/// probability `delta`.
pub fn hoeffding_radius(shots: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * shots as f64)).sqrt()
}

/// Radius of `sqrt(1 - p)` given `p_hat` and a probability half-width.
fn distance_radius(p_hat: f64, p_radius: f64) -> f64 {
    let d_hat = sqrt_complement(p_hat);
    let upper = sqrt_complement(p_hat - p_radius);
    let lower = sqrt_complement(p_hat + p_radius);
    (upper - d_hat).max(d_hat - lower)
}

/// Run the basis-state protocol for `v` approximating `u`.
pub fn verify_approximation(
    u: &Circuit,
    v: &Circuit,
    bases: &BasisSet,
    epsilon: f64,
    shots: Shots,
    rng_seed: u64,
) -> Result<VerificationReport> {
    let um = u.unitary()?;
    let vm = v.unitary()?;
    verify_unitaries(&um, &vm, bases, epsilon, shots, rng_seed)
}

/// [`verify_approximation`] on already-assembled unitaries.
pub fn verify_unitaries(
    um: &ComplexMatrix,
    vm: &ComplexMatrix,
    bases: &BasisSet,
    epsilon: f64,
    shots: Shots,
    rng_seed: u64,
) -> Result<VerificationReport> {
    let n = bases.dim;
    if um.dim()? != n || vm.dim()? != n {
        return Err(Error::DimensionMismatch(format!(
            "circuits of dimension {} and {} with bases of dimension {n}",
            um.rows(),
            vm.rows()
        )));
    }
    if !independence_check(bases) {
        return Err(Error::DependentBases {
            rank: independence_rank(bases),
            needed: n * n - 1,
        });
    }
    if let Shots::Finite(0) = shots {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    um.ensure_unitary(DEFAULT_TOL)?;
    vm.ensure_unitary(DEFAULT_TOL)?;
    let uh = um.adjoint();

    let states = bases.bases.len() * n;
    let delta = (1.0 - CONFIDENCE) / states as f64;
    let jobs: Vec<(usize, usize)> = (0..bases.bases.len())
        .flat_map(|k| (0..n).map(move |i| (k, i)))
        .collect();

    let per_state: Vec<StateEstimate> = jobs
        .par_iter()
        .map(|&(k, i)| -> Result<StateEstimate> {
            let alpha: Vec<C64> = bases.bases[k].column(i);
            // prepare alpha, apply V, then U^dagger
            let out = uh.matvec(&vm.matvec(&alpha)?)?;
            let p = inner(&alpha, &out)?.norm_sqr().clamp(0.0, 1.0);
            let (p_hat, radius) = match shots {
                Shots::Exact => (p, 0.0),
                Shots::Finite(s) => {
                    let seed = derive_seed(rng_seed, (k * n + i) as u64);
                    let hits = bernoulli_count(p, s, seed);
                    let p_hat = hits as f64 / s as f64;
                    (p_hat, distance_radius(p_hat, hoeffding_radius(s, delta)))
                }
            };
            Ok(StateEstimate {
                basis: k,
                vector: i,
                probability: p_hat,
                estimate: sqrt_complement(p_hat),
                radius,
            })
        })
        .collect::<Result<_>>()?;

    let max_estimate = per_state.iter().map(|s| s.estimate).fold(0.0, f64::max);
    let confidence_radius = per_state.iter().map(|s| s.radius).fold(0.0, f64::max);
    let verdict = if max_estimate + confidence_radius <= epsilon {
        Verdict::Pass
    } else if max_estimate - confidence_radius > epsilon {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    Ok(VerificationReport {
        epsilon,
        shots,
        per_state,
        max_estimate,
        confidence_radius,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::linalg::haar_random_unitary;
    use crate::umetric::u_distance;
    use std::f64::consts::PI;

    #[test]
    fn circuit_unitary_examples() {
        let c = Circuit::empty(4);
        assert_eq!(c.unitary().unwrap(), ComplexMatrix::identity(4));

        let mut c = Circuit::new(4, 2, vec![]).unwrap();
        c.push(gates::cnot(), vec![0, 1]).unwrap();
        assert_eq!(c.unitary().unwrap(), gates::cnot());

        let mut c = Circuit::new(4, 2, vec![]).unwrap();
        c.push(gates::pauli_x(), vec![0]).unwrap();
        let expected = gates::pauli_x().tensor(&ComplexMatrix::identity(2));
        assert_eq!(c.unitary().unwrap(), expected);
    }

    #[test]
    fn reversed_wires_give_swapped_cnot() {
        let mut c = Circuit::new(4, 2, vec![]).unwrap();
        c.push(gates::cnot(), vec![1, 0]).unwrap();
        let sw = gates::swap();
        let expected = sw.matmul(&gates::cnot()).unwrap().matmul(&sw).unwrap();
        assert_eq!(c.unitary().unwrap(), expected);
    }

    #[test]
    fn gates_apply_in_time_order() {
        let mut c = Circuit::new(2, 1, vec![]).unwrap();
        c.push(gates::hadamard(), vec![0]).unwrap();
        c.push(gates::pauli_z(), vec![0]).unwrap();
        let expected = gates::pauli_z().matmul(&gates::hadamard()).unwrap();
        assert!(c.unitary().unwrap().max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn malformed_circuits_rejected() {
        assert!(Circuit::new(6, 2, vec![]).is_err());
        let op = |w: Vec<usize>| GateOp {
            matrix: gates::cnot(),
            wires: w,
        };
        assert!(Circuit::new(4, 2, vec![op(vec![0, 0])]).is_err());
        assert!(Circuit::new(4, 2, vec![op(vec![0, 2])]).is_err());
        let bad = GateOp {
            matrix: ComplexMatrix::from_diagonal(&[c64(2., 0.), c64(1., 0.)]),
            wires: vec![0],
        };
        assert!(Circuit::new(4, 2, vec![bad]).is_err());
    }

    #[test]
    fn circuit_json_round_trip() {
        let mut c = Circuit::new(4, 2, vec![]).unwrap();
        c.push(gates::hadamard(), vec![1]).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        let back: Circuit = serde_json::from_str(&s).unwrap();
        assert_eq!(back.unitary().unwrap(), c.unitary().unwrap());
        let bad = r#"{"dim": 4, "wires": 2, "gates": [{"matrix": {"rows":2,"cols":2,"data":[[1,0],[0,0],[0,0],[1,0]]}, "wires": [5]}]}"#;
        assert!(serde_json::from_str::<Circuit>(bad).is_err());
    }

    fn overlaps_unbiased(b: &BasisSet) -> bool {
        let d = b.dim;
        for k in 0..b.bases.len() {
            for l in 0..b.bases.len() {
                for i in 0..d {
                    for j in 0..d {
                        let x = inner(&b.bases[k].column(i), &b.bases[l].column(j))
                            .unwrap()
                            .norm_sqr();
                        let expected = match (k == l, i == j) {
                            (true, true) => 1.0,
                            (true, false) => 0.0,
                            _ => 1.0 / d as f64,
                        };
                        if (x - expected).abs() > 1e-12 {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    #[test]
    fn qubit_mubs() {
        let b = mub_bases(2).unwrap();
        assert_eq!(b.bases.len(), 3);
        assert!(overlaps_unbiased(&b));
        assert!(b.independent && independence_check(&b));
        // second basis: (|0> +- |1>)/sqrt2, third: (|0> +- i|1>)/sqrt2
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.bases[1][(1, 1)] - c64(-h, 0.)).norm() < 1e-15);
        assert!((b.bases[2][(1, 0)] - c64(0., h)).norm() < 1e-15);
    }

    #[test]
    fn odd_prime_mubs() {
        for d in [3, 5, 7] {
            let b = mub_bases(d).unwrap();
            assert_eq!(b.bases.len(), d + 1);
            assert!(overlaps_unbiased(&b), "d = {d}");
            assert!(independence_check(&b));
        }
        assert!(mub_bases(4).is_err());
        assert!(mub_bases(1).is_err());
    }

    #[test]
    fn repeated_basis_is_dependent() {
        let i = ComplexMatrix::identity(2);
        let b = BasisSet::new(vec![i.clone(), i, gates::hadamard()]).unwrap();
        assert!(!b.independent);
        assert!(!independence_check(&b));
    }

    #[test]
    fn random_bases_are_independent() {
        for seed in 0..20 {
            let b = random_bases(3, seed).unwrap();
            assert!(independence_check(&b), "seed {seed}");
        }
    }

    #[test]
    fn measurement_examples() {
        let s = StateVector::basis(2, 0).unwrap();
        assert_eq!(simulate_measurement(&s, &s, 1000, 1).unwrap(), 1000);
        let t = StateVector::basis(2, 1).unwrap();
        assert_eq!(simulate_measurement(&s, &t, 1000, 1).unwrap(), 0);
        let plus = StateVector::uniform(2).unwrap();
        let hits = simulate_measurement(&plus, &s, 10_000, 3).unwrap();
        assert!((4800..=5200).contains(&hits), "{hits}");
        assert_eq!(hits, simulate_measurement(&plus, &s, 10_000, 3).unwrap());
    }

    #[test]
    fn hoeffding_coverage() {
        // |p_hat - p| <= radius should hold for at least 1 - delta of seeds
        let (p, shots, delta) = (0.3, 2000, 0.05);
        let r = hoeffding_radius(shots, delta);
        let covered = (0..400)
            .filter(|&seed| {
                let p_hat = bernoulli_count(p, shots, seed) as f64 / shots as f64;
                (p_hat - p).abs() <= r
            })
            .count();
        assert!(covered as f64 >= 400.0 * (1.0 - delta), "{covered}");
    }

    #[test]
    fn exact_identity_and_phase_pass() {
        let u = Circuit::from_unitary(haar_random_unitary(2, 5)).unwrap();
        let b = mub_bases(2).unwrap();
        let r = verify_approximation(&u, &u, &b, 1e-6, Shots::Exact, 0).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.max_estimate < 1e-7);
        let phased = Circuit::from_unitary(u.unitary().unwrap().scale(cis(0.7))).unwrap();
        let r2 = verify_approximation(&u, &phased, &b, 1e-6, Shots::Exact, 0).unwrap();
        assert_eq!(r2.verdict, Verdict::Pass);
        for (a, b) in r.per_state.iter().zip(&r2.per_state) {
            assert!((a.estimate - b.estimate).abs() < 1e-7);
        }
    }

    #[test]
    fn exact_phase_gate_fails_at_small_epsilon() {
        let u = Circuit::empty(2);
        let v = Circuit::from_unitary(gates::phase(PI / 3.0)).unwrap();
        let b = mub_bases(2).unwrap();
        let r = verify_approximation(&u, &v, &b, 0.1, Shots::Exact, 0).unwrap();
        assert!((r.max_estimate - 0.5).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Fail);
        // |+> = (|0> + |1>)/sqrt2 is basis 1, vector 0
        let plus = r
            .per_state
            .iter()
            .find(|s| (s.basis, s.vector) == (1, 0))
            .unwrap();
        assert!((plus.estimate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn basis_max_is_a_lower_bound() {
        let b = mub_bases(3).unwrap();
        for seed in 0..30 {
            let u = haar_random_unitary(3, 2 * seed);
            let v = haar_random_unitary(3, 2 * seed + 1);
            let r = verify_unitaries(&u, &v, &b, 0.5, Shots::Exact, 0).unwrap();
            assert!(r.max_estimate <= u_distance(&u, &v).unwrap() + 1e-9);
        }
    }

    #[test]
    fn diagonal_qubit_case_is_exact() {
        let b = mub_bases(2).unwrap();
        let u = ComplexMatrix::identity(2);
        for k in 0..=20 {
            let theta = PI * k as f64 / 20.0;
            let v = gates::phase(theta);
            let r = verify_unitaries(&u, &v, &b, 0.5, Shots::Exact, 0).unwrap();
            let expected = (theta / 2.0).sin();
            // sqrt(1 - p) amplifies rounding in p near theta = 0
            assert!((r.max_estimate.powi(2) - expected.powi(2)).abs() < 1e-14);
            if k > 0 {
                assert!((r.max_estimate - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dependent_bases_refused() {
        let i = ComplexMatrix::identity(2);
        let b = BasisSet::new(vec![i.clone(), i.clone(), i.clone()]).unwrap();
        let c = Circuit::empty(2);
        assert!(matches!(
            verify_approximation(&c, &c, &b, 0.1, Shots::Exact, 0),
            Err(Error::DependentBases { .. })
        ));
        let c3 = Circuit::empty(3);
        let b2 = mub_bases(2).unwrap();
        assert!(matches!(
            verify_approximation(&c3, &c3, &b2, 0.1, Shots::Exact, 0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn verdict_semantics() {
        let b = mub_bases(2).unwrap();
        let u = Circuit::empty(2);
        let v = Circuit::from_unitary(gates::phase(PI / 3.0)).unwrap();
        let r = verify_approximation(&u, &v, &b, 0.1, Shots::Finite(10_000), 9).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.confidence_radius > 0.0);
        let r = verify_approximation(&u, &v, &b, 0.5, Shots::Finite(10_000), 9).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }
}
