//! Distance from a multi-qubit gate to the local gates.
//!
//! The local set is taken to be qubit permutations composed with tensor
//! products of single-qubit SU(2) factors. Whether this exhausts the
//! subgroup generated by single-qubit gates and swaps is open; the search
//! runs over exactly this set.
//!
//! Each factor is parameterized by Z-Y-Z Euler angles. The u-distance is
//! projective, so fixing the determinant of every factor loses nothing and
//! every angle is 2pi-periodic in the objective.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{cnot, su2_euler};
use crate::linalg::{
    derive_seed, haar_random_unitary_with, seeded_rng, wrap_phase, ComplexMatrix, C64, DEFAULT_TOL,
};
use crate::umetric::{arc_value_unchecked, Metric};

/// Largest qubit count accepted by [`local_distance`].
pub const MAX_QUBITS: usize = 3;

/// Stop a descent stage once a full sweep improves by less than this.
pub const SWEEP_TOL: f64 = 1e-10;

/// A restart counts as an improvement above this.
pub const RESTART_TOL: f64 = 1e-8;

const GRID_POINTS: usize = 16;
const GOLDEN_WIDTH: f64 = 1e-10;

/// `Perm * (F_0 (x) ... (x) F_{n-1})` with `F_j = Rz(a) Ry(b) Rz(c)`.
///
/// `permutation[j]` is the wire that qubit `j` is moved to; wire 0 is the
/// most significant bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalElement {
    pub n_qubits: usize,
    pub permutation: Vec<usize>,
    pub factors: Vec<[f64; 3]>,
}

impl LocalElement {
    pub fn new(permutation: Vec<usize>, factors: Vec<[f64; 3]>) -> Result<Self> {
        let n = permutation.len();
        if n == 0 {
            return Err(Error::InvalidArgument("local element needs a qubit".into()));
        }
        if factors.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} factors for {n} qubits",
                factors.len()
            )));
        }
        check_permutation(&permutation)?;
        if factors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Euler angle".into()));
        }
        Ok(Self {
            n_qubits: n,
            permutation,
            factors,
        })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            permutation: (0..n_qubits).collect(),
            factors: vec![[0.0; 3]; n_qubits],
        }
    }

    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let mut permutation: Vec<usize> = (0..n_qubits).collect();
        permutation.shuffle(rng);
        let factors = (0..n_qubits)
            .map(|_| {
                [
                    rng.random_range(0.0..TAU),
                    rng.random_range(0.0..TAU),
                    rng.random_range(0.0..TAU),
                ]
            })
            .collect();
        Self {
            n_qubits,
            permutation,
            factors,
        }
    }

    pub fn materialize(&self) -> ComplexMatrix {
        permute_rows(&self.permutation, &factor_product(&self.factors))
    }
}

pub fn materialize(e: &LocalElement) -> ComplexMatrix {
    e.materialize()
}

fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation"
            )));
        }
    }
    Ok(())
}

fn factor_product(factors: &[[f64; 3]]) -> ComplexMatrix {
    factors
        .iter()
        .map(|&[a, b, c]| su2_euler(a, b, c))
        .reduce(|acc, f| acc.tensor(&f))
        .unwrap_or_else(|| ComplexMatrix::identity(1))
}

/// Basis index after moving the bit of qubit `j` to wire `perm[j]`.
fn permuted_index(perm: &[usize], idx: usize) -> usize {
    let n = perm.len();
    let mut out = 0;
    for (j, &p) in perm.iter().enumerate() {
        let bit = (idx >> (n - 1 - j)) & 1;
        out |= bit << (n - 1 - p);
    }
    out
}

fn permute_rows(perm: &[usize], m: &ComplexMatrix) -> ComplexMatrix {
    let dim = m.rows();
    let mut out = ComplexMatrix::zeros(dim, m.cols());
    for i in 0..dim {
        let r = permuted_index(perm, i);
        for j in 0..m.cols() {
            out[(r, j)] = m[(i, j)];
        }
    }
    out
}

pub fn permutation_matrix(perm: &[usize]) -> Result<ComplexMatrix> {
    check_permutation(perm)?;
    Ok(permute_rows(
        perm,
        &ComplexMatrix::identity(1 << perm.len()),
    ))
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n)
            .rev()
            .find(|&j| cur[j] > cur[i - 1])
            .expect("pivot exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EntangleResult {
    pub best_distance: f64,
    pub best_element: LocalElement,
    pub restarts_used: usize,
    /// The last restart improved the best value by less than [`RESTART_TOL`].
    /// Always false with a single restart.
    pub converged: bool,
}

/// Objective for one fixed permutation, as a function of the flat
/// angle vector `[a_0, b_0, c_0, a_1, ...]`.
struct Landscape<'a> {
    target: &'a ComplexMatrix,
    target_adj: ComplexMatrix,
    /// `T^dagger Perm`, so that `tr(T^dagger V) = tr(kernel * product)`.
    overlap_kernel: ComplexMatrix,
    perm: &'a [usize],
}

impl Landscape<'_> {
    fn element(&self, angles: &[f64]) -> ComplexMatrix {
        let factors: Vec<[f64; 3]> = angles.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        permute_rows(self.perm, &factor_product(&factors))
    }

    /// `|tr(T^dagger V)|^2 / dim^2`, maximized in the warm-start stage.
    fn overlap(&self, angles: &[f64]) -> f64 {
        let v = self.element(angles);
        let tr: C64 = self
            .target
            .data()
            .iter()
            .zip(v.data())
            .map(|(t, x)| t.conj() * x)
            .sum();
        tr.norm_sqr() / (v.rows() * v.rows()) as f64
    }

    fn distance(&self, angles: &[f64]) -> f64 {
        let w = self
            .target_adj
            .matmul(&self.element(angles))
            .expect("matching dimensions");
        arc_value_unchecked(&w).unwrap_or(1.0)
    }
}

/// Euler angles `(a, b, c)` of an SU(2) matrix, inverse of [`su2_euler`].
pub fn euler_angles(f: &ComplexMatrix) -> [f64; 3] {
    let (x, y) = (f[(0, 0)], f[(1, 0)]);
    let b = 2.0 * y.norm().atan2(x.norm());
    let p = -x.arg();
    let q = y.arg();
    [wrap_phase(p + q), b, wrap_phase(p - q)]
}

/// With all other factors fixed the overlap is `|tr(M F_j)|^2`, maximized
/// over U(2) by the polar factor of `M^dagger`; the determinant is then
/// divided out.
fn block_step(land: &Landscape, angles: &mut [f64], j: usize) {
    let n = angles.len() / 3;
    let factors: Vec<ComplexMatrix> = angles
        .chunks(3)
        .map(|c| su2_euler(c[0], c[1], c[2]))
        .collect();
    let dim = 1usize << n;
    let bit = |idx: usize, k: usize| (idx >> (n - 1 - k)) & 1;
    let mut env = nalgebra::Matrix2::<C64>::zeros();
    for r in 0..dim {
        for c in 0..dim {
            let a = land.overlap_kernel[(r, c)];
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let mut w = a;
            for (k, f) in factors.iter().enumerate() {
                if k != j {
                    w *= f[(bit(c, k), bit(r, k))];
                }
            }
            env[(bit(r, j), bit(c, j))] += w;
        }
    }
    let svd = env.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return;
    };
    let opt = (u * v_t).adjoint();
    let root = opt.determinant().sqrt();
    let f = ComplexMatrix::from_fn(2, 2, |r, c| opt[(r, c)] / root);
    angles[3 * j..3 * j + 3].copy_from_slice(&euler_angles(&f));
}

/// Grid scan over the full period, then golden-section search around the
/// best grid point.
fn line_search(land: &Landscape, angles: &mut [f64], c: usize, current: f64) -> f64 {
    let x0 = angles[c];
    let h = TAU / GRID_POINTS as f64;
    let eval = |x: f64, angles: &mut [f64]| {
        angles[c] = x;
        land.distance(angles)
    };
    let (mut best_x, mut best) = (x0, current);
    for i in 1..GRID_POINTS {
        let x = x0 + h * i as f64;
        let f = eval(x, angles);
        if f < best {
            (best_x, best) = (x, f);
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_x - h, best_x + h);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1, angles);
    let mut f2 = eval(x2, angles);
    while hi - lo > GOLDEN_WIDTH {
        if f1 <= f2 {
            hi = x2;
            (x2, f2) = (x1, f1);
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1, angles);
        } else {
            lo = x1;
            (x1, f1) = (x2, f2);
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2, angles);
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f < best {
            (best_x, best) = (x, f);
        }
    }
    angles[c] = wrap_phase(best_x);
    best
}

/// Warm start on the smooth overlap, then coordinate descent on the
/// distance itself.
fn descend(land: &Landscape, mut angles: Vec<f64>, sweeps: usize) -> (f64, Vec<f64>) {
    let mut g = land.overlap(&angles);
    for _ in 0..sweeps {
        let before = g;
        let saved = angles.clone();
        for j in 0..angles.len() / 3 {
            block_step(land, &mut angles, j);
        }
        g = land.overlap(&angles);
        if g < before {
            angles = saved;
            g = before;
        }
        if g - before < SWEEP_TOL * SWEEP_TOL {
            break;
        }
    }
    let mut d = land.distance(&angles);
    for _ in 0..sweeps {
        let before = d;
        for c in 0..angles.len() {
            d = line_search(land, &mut angles, c, d);
        }
        if before - d < SWEEP_TOL {
            break;
        }
    }
    (d, angles)
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::DimensionMismatch(format!(
            "{n} qubits exceeds the limit of {MAX_QUBITS}"
        )));
    }
    Ok(n)
}

/// Minimize `D(target, h)` over local elements `h`.
///
/// Every restart tries every qubit permutation from its own random angles;
/// `iters` caps the sweeps of each descent stage.
pub fn local_distance(
    target: &ComplexMatrix,
    restarts: usize,
    iters: usize,
    rng_seed: u64,
) -> Result<EntangleResult> {
    let n = qubit_count(target.dim()?)?;
    target.ensure_unitary(DEFAULT_TOL)?;
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let perms = permutations(n);
    let target_adj = target.adjoint();
    let jobs: Vec<(usize, usize)> = (0..restarts)
        .flat_map(|r| (0..perms.len()).map(move |p| (r, p)))
        .collect();
    let runs: Vec<(f64, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(r, p)| {
            let mut rng = seeded_rng(derive_seed(rng_seed, (r * perms.len() + p) as u64));
            let start: Vec<f64> = (0..3 * n).map(|_| rng.random_range(0.0..TAU)).collect();
            let land = Landscape {
                target,
                target_adj: target_adj.clone(),
                overlap_kernel: target_adj
                    .matmul(&permute_rows(&perms[p], &ComplexMatrix::identity(1 << n)))
                    .expect("matching dimensions"),
                perm: &perms[p],
            };
            descend(&land, start, iters.max(1))
        })
        .collect();

    // Best per restart, then the running minimum; ties keep the lower index.
    let mut best: Option<(f64, usize)> = None;
    let mut before_last = f64::INFINITY;
    for r in 0..restarts {
        if r + 1 == restarts {
            before_last = best.map_or(f64::INFINITY, |b| b.0);
        }
        for p in 0..perms.len() {
            let idx = r * perms.len() + p;
            if best.is_none_or(|(v, _)| runs[idx].0 < v) {
                best = Some((runs[idx].0, idx));
            }
        }
    }
    let (value, idx) = best.expect("at least one run");
    let (_, angles) = &runs[idx];
    let element = LocalElement::new(
        perms[idx % perms.len()].clone(),
        angles.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(),
    )?;
    let verified = Metric::default()
        .u_distance_arc(target, &element.materialize())?
        .value;
    if (verified - value).abs() > 1e-9 {
        return Err(Error::CrossCheck(format!(
            "optimizer value {value} re-evaluates to {verified}"
        )));
    }
    Ok(EntangleResult {
        best_distance: verified,
        best_element: element,
        restarts_used: restarts,
        converged: restarts > 1 && before_last - value < RESTART_TOL,
    })
}

/// Minimum of `D(target, h)` over `samples` local elements with Haar-random
/// single-qubit factors, optionally composed with a random permutation.
pub fn local_probe(
    target: &ComplexMatrix,
    samples: usize,
    rng_seed: u64,
    with_permutations: bool,
) -> Result<f64> {
    let n = qubit_count(target.dim()?)?;
    target.ensure_unitary(DEFAULT_TOL)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let metric = Metric::default();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_rng(derive_seed(rng_seed, i as u64));
            let product = (0..n)
                .map(|_| haar_random_unitary_with(2, &mut rng))
                .reduce(|a, b| a.tensor(&b))
                .expect("n >= 1");
            let h = if with_permutations {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                permute_rows(&perm, &product)
            } else {
                product
            };
            metric.u_distance_arc(target, &h).map(|r| r.value)
        })
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

/// Observed minimum of `D(CNOT, U (x) V)` over Haar-random pairs.
pub fn cnot_bound_sweep(samples: usize, rng_seed: u64) -> Result<f64> {
    local_probe(&cnot(), samples, rng_seed, false)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::gates::{pauli_x, swap};
    use crate::linalg::{cis, haar_random_unitary};
    use crate::umetric::u_distance;

    #[test]
    fn materialize_examples() {
        assert_eq!(
            LocalElement::identity(2)
                .materialize()
                .max_abs_diff(&ComplexMatrix::identity(4))
                .unwrap(),
            0.0
        );
        let x = LocalElement::new(vec![0, 1], vec![[PI / 2.0, PI, -PI / 2.0]; 2]).unwrap();
        let xx = pauli_x().tensor(&pauli_x());
        assert!(u_distance(&x.materialize(), &xx).unwrap() < 1e-12);
        let s = LocalElement::new(vec![1, 0], vec![[0.0; 3]; 2]).unwrap();
        assert_eq!(s.materialize(), swap());
        assert!(LocalElement::new(vec![0, 0], vec![[0.0; 3]; 2]).is_err());
    }

    #[test]
    fn euler_angles_invert_the_parameterization() {
        for &(a, b, c) in &[(0.3, 1.1, 5.0), (2.0, 0.2, 1.0), (4.5, 3.0, 0.1)] {
            let f = su2_euler(a, b, c);
            let [x, y, z] = euler_angles(&f);
            assert!(su2_euler(x, y, z).max_abs_diff(&f).unwrap() < 1e-12);
        }
    }

    #[test]
    fn permutation_enumeration() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![0, 1, 2]);
        assert_eq!(p[5], vec![2, 1, 0]);
        for q in &p {
            assert!(permutation_matrix(q).unwrap().is_unitary(1e-15).unwrap());
        }
    }

    #[test]
    fn random_elements_are_unitary() {
        let mut rng = seeded_rng(3);
        for n in 1..=3 {
            for _ in 0..20 {
                let e = LocalElement::random(n, &mut rng);
                assert!(e.materialize().is_unitary(1e-9).unwrap());
            }
        }
    }

    #[test]
    fn local_targets_reach_zero() {
        let w = haar_random_unitary(2, 1).tensor(&haar_random_unitary(2, 2));
        for target in [w, swap(), ComplexMatrix::identity(4)] {
            let r = local_distance(&target, 4, 200, 7).unwrap();
            assert!(r.best_distance <= 1e-6, "{}", r.best_distance);
        }
    }

    #[test]
    fn random_three_qubit_element_is_found() {
        let mut rng = seeded_rng(21);
        let e = LocalElement::random(3, &mut rng);
        let r = local_distance(&e.materialize(), 2, 200, 5).unwrap();
        assert!(r.best_distance <= 1e-6, "{}", r.best_distance);
    }

    #[test]
    fn cnot_stays_away_from_local_gates() {
        let r = local_distance(&cnot(), 8, 200, 42).unwrap();
        assert!(r.best_distance >= 0.5 - 1e-3, "{}", r.best_distance);
        let metric = Metric::default();
        let again = metric
            .u_distance_arc(&cnot(), &r.best_element.materialize())
            .unwrap()
            .value;
        assert!((again - r.best_distance).abs() < 1e-9);
        assert!(cnot_bound_sweep(2000, 1).unwrap() >= 0.5 - 1e-9);
        assert_eq!(
            u_distance(&cnot(), &ComplexMatrix::identity(4)).unwrap(),
            1.0
        );
    }

    #[test]
    fn global_phase_of_target_is_irrelevant() {
        let target = haar_random_unitary(2, 4).tensor(&haar_random_unitary(2, 5));
        let a = local_distance(&target, 2, 200, 9).unwrap();
        let b = local_distance(&target.scale(cis(1.3)), 2, 200, 9).unwrap();
        assert!((a.best_distance - b.best_distance).abs() < 1e-10);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = local_distance(&cnot(), 3, 50, 11).unwrap();
        let b = local_distance(&cnot(), 3, 50, 11).unwrap();
        assert_eq!(a.best_distance, b.best_distance);
        assert_eq!(a.best_element, b.best_element);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            local_distance(&ComplexMatrix::identity(3), 1, 10, 0),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(local_distance(&ComplexMatrix::identity(16), 1, 10, 0).is_err());
        assert!(local_distance(&ComplexMatrix::identity(4), 0, 10, 0).is_err());
    }
}
