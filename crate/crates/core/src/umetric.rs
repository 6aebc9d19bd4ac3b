//! The projective-invariant u-distance on the unitary group.
//!
//! `D(U, V) = max_psi (1 - |<psi|U^dagger V|psi>|^2)^{1/2}` is computed three
//! ways:
//!
//! * [`u_distance_arc`]: from the shortest circular arc covering the
//!   eigenphases of `W = U^dagger V`; `sin(d/2)` when the arc fits in a
//!   semicircle, otherwise 1.
//! * [`u_distance_hull`]: from the Euclidean distance between the origin and
//!   the numerical range of `W`, which for a unitary is the convex polygon
//!   spanned by its eigenvalues.
//! * [`u_distance_bruteforce`]: direct maximization over the unit sphere by
//!   random sampling plus projected descent. It never touches the spectrum
//!   and is only a lower bound.
//!
//! The arc length is the circular width of the spectrum (2pi minus the largest
//! gap between circularly consecutive phases), so the result does not depend
//! on where phase zero sits.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cis, inner, seeded_rng, vector_norm, wrap_phase, ComplexMatrix, StateVector, UnitarySpectrum,
    C64, DEFAULT_TOL,
};

/// Arcs longer than `PI - ARC_BOUNDARY_EPS` are treated as covering a
/// semicircle.
pub const ARC_BOUNDARY_EPS: f64 = 1e-10;

/// Tolerance for merging hull points and for the point-in-polygon test.
pub const HULL_TOL: f64 = 1e-12;

/// Witnesses must satisfy `|<psi|W|psi>| <= WITNESS_TOL`.
pub const WITNESS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Arc,
    Hull,
    BruteForce,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Arc => "arc",
            Method::Hull => "hull",
            Method::BruteForce => "brute_force",
        })
    }
}

/// A computed u-distance together with how it was obtained.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    pub method: Method,
    /// Width of the covering arc of the spectrum, when known.
    pub arc_length: Option<f64>,
    /// A state `psi` with `U psi` orthogonal to `V psi`, attached when the
    /// distance is 1.
    pub witness: Option<StateVector>,
}

/// `(1 - t)^{1/2}` with `t` clamped into `[0, 1]`.
#[inline]
pub(crate) fn sqrt_complement(t: f64) -> f64 {
    (1.0 - t.clamp(0.0, 1.0)).sqrt()
}

#[inline]
fn sqrt_clamped(t: f64) -> f64 {
    t.clamp(0.0, 1.0).sqrt()
}

fn ensure_same_dim(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<usize> {
    let n = u.dim()?;
    let m = v.dim()?;
    if n != m {
        return Err(Error::DimensionMismatch(format!(
            "operators of dimension {n} and {m}"
        )));
    }
    Ok(n)
}

/// Tolerance-carrying entry point; the free functions use [`DEFAULT_TOL`].
#[derive(Clone, Copy, Debug)]
pub struct Metric {
    pub tol: f64,
}

impl Default for Metric {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL }
    }
}

impl Metric {
    pub fn new(tol: f64) -> Self {
        Self { tol }
    }

    /// `W = U^dagger V` after checking both inputs.
    pub fn relative_operator(&self, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ComplexMatrix> {
        ensure_same_dim(u, v)?;
        u.ensure_unitary(self.tol)?;
        v.ensure_unitary(self.tol)?;
        u.adjoint_matmul(v)
    }

    pub fn d_psi(&self, u: &ComplexMatrix, v: &ComplexMatrix, psi: &StateVector) -> Result<f64> {
        ensure_same_dim(u, v)?;
        u.ensure_unitary(self.tol)?;
        v.ensure_unitary(self.tol)?;
        d_psi_unchecked(u, v, psi)
    }

    pub fn spectrum_of_relative(
        &self,
        u: &ComplexMatrix,
        v: &ComplexMatrix,
    ) -> Result<UnitarySpectrum> {
        let w = self.relative_operator(u, v)?;
        w.eigenphases(self.tol)
    }

    pub fn u_distance_arc(&self, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<DistanceResult> {
        let spectrum = self.spectrum_of_relative(u, v)?;
        let w = u.adjoint_matmul(v)?;
        Ok(arc_distance_from_spectrum(&w, &spectrum))
    }

    pub fn u_distance_hull(&self, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<DistanceResult> {
        let w = self.relative_operator(u, v)?;
        let polygon = self.numerical_range_polygon(&w)?;
        let value = sqrt_clamped(hull_defect(&polygon));
        let witness = if value >= 1.0 {
            orthogonal_witness(&w, &w.eigenphases(self.tol)?)
        } else {
            None
        };
        Ok(DistanceResult {
            value,
            method: Method::Hull,
            arc_length: None,
            witness,
        })
    }

    pub fn numerical_range_polygon(&self, w: &ComplexMatrix) -> Result<NumericalRangePolygon> {
        let spectrum = w.eigenphases(self.tol)?;
        Ok(NumericalRangePolygon::from_eigenvalues(
            spectrum.eigenvalues(),
        ))
    }

    pub fn r_value(&self, u: &ComplexMatrix) -> Result<f64> {
        let polygon = self.numerical_range_polygon(u)?;
        let rho = hull_distance_to_origin(&polygon);
        Ok(rho * rho)
    }

    pub fn supnorm_distance(&self, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
        let spectrum = self.spectrum_of_relative(u, v)?;
        let closest = spectrum
            .phases
            .iter()
            .copied()
            .min_by(|a, b| (a - PI).abs().total_cmp(&(b - PI).abs()))
            .expect("spectrum is non-empty");
        let value = 2.0 * (closest / 2.0).sin();
        let direct = u.sub(v)?.operator_norm();
        let limit = (RESIDUAL_CROSS_CHECK * self.tol).max(1e-9);
        if (value - direct).abs() > limit {
            return Err(Error::CrossCheck(format!(
                "sup-norm from eigenphases {value} vs operator norm {direct}"
            )));
        }
        Ok(value)
    }

    pub fn align_phase(&self, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<PhaseAlignment> {
        let spectrum = self.spectrum_of_relative(u, v)?;
        let arc = CoveringArc::of(&spectrum.phases);
        let x = if arc.covers_semicircle() {
            // rotate any eigenvalue onto -1
            wrap_phase(PI - spectrum.phases[0])
        } else {
            // rotate the start of the covering arc onto phase 0
            wrap_phase(-arc.start_phase)
        };
        let half_norm = 0.5 * u.sub(&v.scale(cis(x)))?.operator_norm();
        Ok(PhaseAlignment { x, half_norm })
    }

    pub fn orthogonalizing_state(
        &self,
        u: &ComplexMatrix,
        v: &ComplexMatrix,
    ) -> Result<Option<StateVector>> {
        Ok(self.u_distance_arc(u, v)?.witness)
    }

    pub fn semicircle_matching(
        &self,
        a: &ComplexMatrix,
        b: &ComplexMatrix,
    ) -> Result<SpectralMatching> {
        ensure_same_dim(a, b)?;
        let sa = a.eigenphases(self.tol)?;
        let sb = b.eigenphases(self.tol)?;
        let mut union: Vec<f64> = sa.phases.iter().chain(&sb.phases).copied().collect();
        union.sort_by(f64::total_cmp);
        let arc = CoveringArc::of(&union);
        if arc.length > PI + HULL_TOL {
            return Err(Error::Precondition(format!(
                "eigenvalues of both operators must lie on a common semicircle (arc {:.6})",
                arc.length
            )));
        }
        let label = |phases: &[f64]| {
            let mut rel: Vec<f64> = phases
                .iter()
                .map(|&p| wrap_phase(p - arc.start_phase))
                .map(|r| {
                    if r > arc.length + HULL_TOL {
                        r - TAU
                    } else {
                        r
                    }
                })
                .collect();
            rel.sort_by(f64::total_cmp);
            rel
        };
        let la = label(&sa.phases);
        let lb = label(&sb.phases);
        let max_eigen_gap = la
            .iter()
            .zip(&lb)
            .map(|(x, y)| (cis(*x) - cis(*y)).norm())
            .fold(0.0, f64::max);
        let norm_gap = a.sub(b)?.operator_norm();
        Ok(SpectralMatching {
            max_eigen_gap,
            norm_gap,
        })
    }
}

const RESIDUAL_CROSS_CHECK: f64 = 100.0;

/// `<U psi | V psi> = <psi|U^dagger V|psi>`.
pub fn transition_amplitude(
    u: &ComplexMatrix,
    v: &ComplexMatrix,
    psi: &StateVector,
) -> Result<C64> {
    let n = ensure_same_dim(u, v)?;
    if psi.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for operators of dimension {n}",
            psi.dim()
        )));
    }
    let up = u.matvec(psi.amplitudes())?;
    let vp = v.matvec(psi.amplitudes())?;
    inner(&up, &vp)
}

/// `D_psi` without the unitarity check, for callers that have certified
/// their operators by construction.
pub fn d_psi_unchecked(u: &ComplexMatrix, v: &ComplexMatrix, psi: &StateVector) -> Result<f64> {
    let n = ensure_same_dim(u, v)?;
    if psi.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for operators of dimension {n}",
            psi.dim()
        )));
    }
    let up = u.matvec(psi.amplitudes())?;
    let vp = v.matvec(psi.amplitudes())?;
    let amp = inner(&up, &vp)?;
    // 1 - |z|^2 is the squared norm of the part of V psi orthogonal to
    // U psi, which stays accurate when psi is nearly an eigenvector.
    let perp: Vec<C64> = vp.iter().zip(&up).map(|(b, a)| b - amp * a).collect();
    Ok(vector_norm(&perp).min(1.0))
}

/// `D_psi(U, V) = (1 - |<psi|U^dagger V|psi>|^2)^{1/2}`.
pub fn d_psi(u: &ComplexMatrix, v: &ComplexMatrix, psi: &StateVector) -> Result<f64> {
    Metric::default().d_psi(u, v, psi)
}

/// Shortest arc of the unit circle containing a set of phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoveringArc {
    pub length: f64,
    /// Phase at which the arc starts, read counterclockwise.
    pub start_phase: f64,
    /// Index (into the sorted input) of the phase that starts the arc.
    pub start_index: usize,
}

impl CoveringArc {
    /// `phases` must be sorted ascending in `[0, 2pi)` and non-empty.
    pub fn of(phases: &[f64]) -> Self {
        assert!(!phases.is_empty(), "covering arc of an empty set");
        let n = phases.len();
        let mut best_gap = f64::NEG_INFINITY;
        let mut best = 0;
        for i in 0..n {
            let next = if i + 1 < n {
                phases[i + 1]
            } else {
                phases[0] + TAU
            };
            let gap = next - phases[i];
            if gap > best_gap {
                best_gap = gap;
                best = i;
            }
        }
        let start_index = (best + 1) % n;
        let length = (TAU - best_gap).max(0.0);
        Self {
            length: if length >= TAU { 0.0 } else { length },
            start_phase: phases[start_index],
            start_index,
        }
    }

    pub fn covers_semicircle(&self) -> bool {
        self.length >= PI - ARC_BOUNDARY_EPS
    }
}

/// Length of the shortest circular arc containing every phase.
pub fn minimal_covering_arc(phases: &[f64]) -> f64 {
    CoveringArc::of(phases).length
}

fn arc_distance_from_spectrum(w: &ComplexMatrix, spectrum: &UnitarySpectrum) -> DistanceResult {
    let arc = CoveringArc::of(&spectrum.phases);
    if arc.covers_semicircle() {
        DistanceResult {
            value: 1.0,
            method: Method::Arc,
            arc_length: Some(arc.length),
            witness: orthogonal_witness(w, spectrum),
        }
    } else {
        DistanceResult {
            value: (arc.length / 2.0).sin(),
            method: Method::Arc,
            arc_length: Some(arc.length),
            witness: None,
        }
    }
}

/// Arc-method value from the eigenvalues of `W` alone, without unitarity
/// or residual checks and without a witness. For inner optimization loops.
pub(crate) fn arc_value_unchecked(w: &ComplexMatrix) -> Option<f64> {
    let t = crate::linalg::schur_unpacked(w.to_nalgebra())?.1;
    let mut phases: Vec<f64> = (0..w.rows()).map(|j| wrap_phase(t[(j, j)].arg())).collect();
    phases.sort_by(f64::total_cmp);
    let arc = CoveringArc::of(&phases);
    Some(if arc.covers_semicircle() {
        1.0
    } else {
        (arc.length / 2.0).sin()
    })
}

pub fn u_distance_arc(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<DistanceResult> {
    Metric::default().u_distance_arc(u, v)
}

pub fn u_distance_hull(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<DistanceResult> {
    Metric::default().u_distance_hull(u, v)
}

/// Value of the u-distance by the arc method.
pub fn u_distance(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    Ok(u_distance_arc(u, v)?.value)
}

/// Cross product `Im(conj(a) b)` of two plane vectors.
#[inline]
fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Convex weights `p` over eigenvalues with `sum p_k z_k = 0`, then
/// `psi = sum sqrt(p_k) v_k`. Returns `None` unless the origin lies in the
/// polygon and the resulting state passes the orthogonality check.
fn orthogonal_witness(w: &ComplexMatrix, spectrum: &UnitarySpectrum) -> Option<StateVector> {
    let z = spectrum.eigenvalues();
    let weights = origin_weights(&spectrum.phases, &z)?;
    let n = z.len();
    let mut amps = vec![C64::new(0.0, 0.0); n];
    for (k, p) in weights {
        let vk = spectrum.eigenvector(k);
        let s = p.sqrt();
        for (a, b) in amps.iter_mut().zip(vk) {
            *a += b * s;
        }
    }
    let psi = StateVector::new(amps).ok()?;
    let wpsi = w.matvec(psi.amplitudes()).ok()?;
    let overlap = inner(psi.amplitudes(), &wpsi).ok()?;
    (overlap.norm() <= WITNESS_TOL).then_some(psi)
}

fn triangle_weights(za: C64, zb: C64, zc: C64) -> Option<[f64; 3]> {
    let area = cross(zb - za, zc - za);
    if area.abs() < HULL_TOL {
        return None;
    }
    let pa = cross(zb, zc) / area;
    let pb = cross(zc, za) / area;
    let pc = cross(za, zb) / area;
    let min = pa.min(pb).min(pc);
    (min >= -HULL_TOL).then(|| [pa.max(0.0), pb.max(0.0), pc.max(0.0)])
}

fn origin_weights(phases: &[f64], z: &[C64]) -> Option<Vec<(usize, f64)>> {
    let n = z.len();
    if n < 2 {
        return None;
    }
    // Anchor at z_0 and find the circularly consecutive pair that brackets
    // the antipode of z_0; the triangle they form contains the origin
    // whenever the largest gap is below pi.
    let target = phases[0] + PI;
    let unwrapped = |i: usize| if i < n { phases[i] } else { phases[0] + TAU };
    for i in 0..n {
        let (lo, hi) = (unwrapped(i), unwrapped(i + 1));
        if lo <= target && target <= hi {
            let j = (i + 1) % n;
            if (z[i] + z[0]).norm() < HULL_TOL.sqrt() && i != 0 {
                return Some(vec![(0, 0.5), (i, 0.5)]);
            }
            if (z[j] + z[0]).norm() < HULL_TOL.sqrt() && j != 0 {
                return Some(vec![(0, 0.5), (j, 0.5)]);
            }
            if i != 0 && j != 0 && i != j {
                if let Some([p0, pi, pj]) = triangle_weights(z[0], z[i], z[j]) {
                    return Some(vec![(0, p0), (i, pi), (j, pj)]);
                }
            }
            break;
        }
    }
    // Fallback: closest-to-antipodal pair, then exhaustive triangles.
    let mut best_pair: Option<(usize, usize, f64)> = None;
    for a in 0..n {
        for b in (a + 1)..n {
            let r = (z[a] + z[b]).norm();
            if best_pair.is_none_or(|(_, _, br)| r < br) {
                best_pair = Some((a, b, r));
            }
        }
    }
    if let Some((a, b, r)) = best_pair {
        if r < 2.0 * WITNESS_TOL {
            return Some(vec![(a, 0.5), (b, 0.5)]);
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                if let Some([pa, pb, pc]) = triangle_weights(z[a], z[b], z[c]) {
                    return Some(vec![(a, pa), (b, pb), (c, pc)]);
                }
            }
        }
    }
    None
}

/// Numerical range of a unitary: the eigenvalues on the unit circle and
/// their convex hull, counterclockwise.
#[derive(Clone, Debug)]
pub struct NumericalRangePolygon {
    pub vertices: Vec<C64>,
    pub hull: Vec<C64>,
}

impl NumericalRangePolygon {
    pub fn from_eigenvalues(vertices: Vec<C64>) -> Self {
        let hull = convex_hull(&vertices, HULL_TOL);
        Self { vertices, hull }
    }
}

pub fn numerical_range_polygon(w: &ComplexMatrix) -> Result<NumericalRangePolygon> {
    Metric::default().numerical_range_polygon(w)
}

/// Convex hull (Andrew's monotone chain), counterclockwise, with
/// near-duplicate and collinear points dropped. Collinear input collapses to
/// its two extreme points.
pub fn convex_hull(points: &[C64], tol: f64) -> Vec<C64> {
    let mut pts: Vec<C64> = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut uniq: Vec<C64> = Vec::with_capacity(pts.len());
    for p in pts {
        if !uniq.iter().any(|q| (q - p).norm() <= tol) {
            uniq.push(p);
        }
    }
    if uniq.len() <= 2 {
        return uniq;
    }
    let mut lower: Vec<C64> = Vec::new();
    for &p in &uniq {
        while lower.len() >= 2
            && cross(
                lower[lower.len() - 1] - lower[lower.len() - 2],
                p - lower[lower.len() - 2],
            ) <= tol
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<C64> = Vec::new();
    for &p in uniq.iter().rev() {
        while upper.len() >= 2
            && cross(
                upper[upper.len() - 1] - upper[upper.len() - 2],
                p - upper[upper.len() - 2],
            ) <= tol
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

enum Nearest {
    Inside,
    Vertex(C64),
    Edge { a: C64, b: C64, t: f64 },
}

fn nearest_to_origin(hull: &[C64]) -> Nearest {
    match hull.len() {
        0 => Nearest::Inside,
        1 => Nearest::Vertex(hull[0]),
        2 => nearest_on_segment(hull[0], hull[1]),
        n => {
            let inside = (0..n).all(|i| {
                let a = hull[i];
                let b = hull[(i + 1) % n];
                cross(b - a, -a) >= -HULL_TOL
            });
            if inside {
                return Nearest::Inside;
            }
            (0..n)
                .map(|i| nearest_on_segment(hull[i], hull[(i + 1) % n]))
                .min_by(|x, y| feature_distance(x).total_cmp(&feature_distance(y)))
                .expect("non-empty hull")
        }
    }
}

fn nearest_on_segment(a: C64, b: C64) -> Nearest {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return Nearest::Vertex(a);
    }
    let t = ((ab.conj() * (-a)).re / len2).clamp(0.0, 1.0);
    if t == 0.0 {
        Nearest::Vertex(a)
    } else if t == 1.0 {
        Nearest::Vertex(b)
    } else {
        Nearest::Edge { a, b, t }
    }
}

fn feature_distance(f: &Nearest) -> f64 {
    match *f {
        Nearest::Inside => 0.0,
        Nearest::Vertex(z) => z.norm(),
        Nearest::Edge { a, b, t } => (a + (b - a) * t).norm(),
    }
}

/// Euclidean distance from the origin to the polygon (0 when the origin is
/// inside or on the boundary).
pub fn hull_distance_to_origin(p: &NumericalRangePolygon) -> f64 {
    feature_distance(&nearest_to_origin(&p.hull))
}

/// `1 - rho^2`, evaluated so that no cancellation occurs when the polygon
/// sits close to the unit circle.
fn hull_defect(p: &NumericalRangePolygon) -> f64 {
    match nearest_to_origin(&p.hull) {
        Nearest::Inside => 1.0,
        Nearest::Vertex(z) => {
            let r = z.norm();
            (1.0 - r) * (1.0 + r)
        }
        Nearest::Edge { a, b, t } => {
            // |a + t(b-a)|^2 = (1-t)|a|^2 + t|b|^2 - t(1-t)|b-a|^2
            let ra = a.norm();
            let rb = b.norm();
            (1.0 - t) * (1.0 - ra) * (1.0 + ra)
                + t * (1.0 - rb) * (1.0 + rb)
                + t * (1.0 - t) * (b - a).norm_sqr()
        }
    }
}

/// `R(U) = min_psi |<psi|U|psi>|^2`, the squared distance from the origin to
/// the numerical range.
pub fn r_value(u: &ComplexMatrix) -> Result<f64> {
    Metric::default().r_value(u)
}

/// `||U - V||` from the eigenphase of `U^dagger V` closest to pi, checked
/// against the singular-value norm.
pub fn supnorm_distance(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    Metric::default().supnorm_distance(u, v)
}

/// Phase `x` with `D(U, V) = ||U - e^{ix} V|| / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseAlignment {
    /// In `[0, 2pi)`.
    pub x: f64,
    pub half_norm: f64,
}

pub fn align_phase(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<PhaseAlignment> {
    Metric::default().align_phase(u, v)
}

/// Distance between tensor products predicted from the factor distances:
/// `min(1, d1 sqrt(1-d2^2) + d2 sqrt(1-d1^2))`.
///
/// This equals `sin((a1 + a2)/2)` for factor arc widths `a1, a2`, which is
/// the true distance only while `a1 + a2 <= pi`, i.e. `d1^2 + d2^2 <= 1`.
/// Beyond that the combined spectrum covers a semicircle, the true distance
/// is 1, and this expression undershoots. See [`tensor_distance_exact`].
pub fn tensor_distance_formula(d1: f64, d2: f64) -> f64 {
    let d1 = d1.clamp(0.0, 1.0);
    let d2 = d2.clamp(0.0, 1.0);
    (d1 * sqrt_complement(d2 * d2) + d2 * sqrt_complement(d1 * d1)).min(1.0)
}

/// Tensor-product distance including the semicircle case.
pub fn tensor_distance_exact(d1: f64, d2: f64) -> f64 {
    let d1 = d1.clamp(0.0, 1.0);
    let d2 = d2.clamp(0.0, 1.0);
    if d1 * d1 + d2 * d2 >= 1.0 {
        1.0
    } else {
        tensor_distance_formula(d1, d2)
    }
}

pub fn orthogonalizing_state(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<Option<StateVector>> {
    Metric::default().orthogonalizing_state(u, v)
}

/// Both sides of `max_i |a_i - b_i| <= ||A - B||` for unitaries whose
/// spectra share a semicircle, eigenvalues labeled counterclockwise from the
/// start of the common covering arc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralMatching {
    pub max_eigen_gap: f64,
    pub norm_gap: f64,
}

impl SpectralMatching {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_eigen_gap <= self.norm_gap + tol
    }

    pub fn slack(&self) -> f64 {
        self.norm_gap - self.max_eigen_gap
    }
}

pub fn semicircle_matching(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<SpectralMatching> {
    Metric::default().semicircle_matching(a, b)
}

/// Boolean form of [`semicircle_matching`] at tolerance 1e-9.
pub fn semicircle_matching_holds(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<bool> {
    Ok(semicircle_matching(a, b)?.holds(DEFAULT_TOL))
}

/// Lower bound on `D(U, V)` by direct search over the unit sphere.
///
/// Draws `samples` uniform states, keeps the few with the smallest
/// `|<psi|W|psi>|^2`, and refines each by `refine_iters` steps of projected
/// gradient descent with backtracking. Deterministic in `rng_seed`.
pub fn u_distance_bruteforce(
    u: &ComplexMatrix,
    v: &ComplexMatrix,
    samples: usize,
    refine_iters: usize,
    rng_seed: u64,
) -> Result<DistanceResult> {
    let n = ensure_same_dim(u, v)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let w = u.adjoint_matmul(v)?;
    let wh = w.adjoint();
    let mut rng = seeded_rng(rng_seed);

    let objective = |psi: &[C64]| -> Result<(f64, C64)> {
        let z = inner(psi, &w.matvec(psi)?)?;
        Ok((z.norm_sqr(), z))
    };

    const KEEP: usize = 3;
    let mut pool: Vec<(f64, Vec<C64>)> = Vec::with_capacity(KEEP + 1);
    for _ in 0..samples {
        let psi = StateVector::random(n, &mut rng).into_amplitudes();
        let (f, _) = objective(&psi)?;
        pool.push((f, psi));
        pool.sort_by(|a, b| a.0.total_cmp(&b.0));
        pool.truncate(KEEP);
    }

    let mut best: Option<(f64, Vec<C64>)> = None;
    for (f0, psi0) in pool {
        let (f, psi) = refine(&w, &wh, psi0, f0, refine_iters)?;
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, psi));
        }
    }
    let (f, psi) = best.expect("samples >= 1");
    let value = sqrt_complement(f);
    let witness = if f.sqrt() <= WITNESS_TOL {
        StateVector::new(psi).ok()
    } else {
        None
    };
    Ok(DistanceResult {
        value,
        method: Method::BruteForce,
        arc_length: None,
        witness,
    })
}

fn normalize(mut v: Vec<C64>) -> Vec<C64> {
    let n = vector_norm(&v);
    if n > 0.0 {
        for z in &mut v {
            *z /= n;
        }
    }
    v
}

/// Projected descent on `f(psi) = |<psi|W|psi>|^2` over the unit sphere.
fn refine(
    w: &ComplexMatrix,
    wh: &ComplexMatrix,
    mut psi: Vec<C64>,
    mut f: f64,
    iters: usize,
) -> Result<(f64, Vec<C64>)> {
    let mut step = 0.5;
    for _ in 0..iters {
        if f == 0.0 || step < 1e-16 {
            break;
        }
        let wpsi = w.matvec(&psi)?;
        let z = inner(&psi, &wpsi)?;
        let whpsi = wh.matvec(&psi)?;
        // df = 2 Re<dpsi, g>, g = conj(z) W psi + z W^dagger psi
        let mut g: Vec<C64> = wpsi
            .iter()
            .zip(&whpsi)
            .map(|(a, b)| z.conj() * a + z * b)
            .collect();
        let radial = inner(&psi, &g)?.re;
        for (gi, pi) in g.iter_mut().zip(&psi) {
            *gi -= pi * radial;
        }
        if vector_norm(&g) < 1e-300 {
            break;
        }
        loop {
            let cand = normalize(psi.iter().zip(&g).map(|(p, d)| p - d * step).collect());
            let zc = inner(&cand, &w.matvec(&cand)?)?;
            let fc = zc.norm_sqr();
            if fc < f {
                psi = cand;
                f = fc;
                step *= 1.5;
                break;
            }
            step *= 0.5;
            if step < 1e-16 {
                break;
            }
        }
    }
    Ok((f, psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::linalg::{c64, haar_random_unitary};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn i2() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    #[test]
    fn d_psi_examples() {
        let u = haar_random_unitary(3, 5);
        let psi = StateVector::random(3, &mut seeded_rng(1));
        assert!(d_psi(&u, &u, &psi).unwrap() < 1e-7);
        let zero = StateVector::basis(2, 0).unwrap();
        assert!((d_psi(&i2(), &gates::pauli_x(), &zero).unwrap() - 1.0).abs() < 1e-15);
        let h = d_psi(&i2(), &gates::hadamard(), &zero).unwrap();
        assert!((h - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn d_psi_errors() {
        let zero = StateVector::basis(2, 0).unwrap();
        let i3 = ComplexMatrix::identity(3);
        assert!(matches!(
            d_psi(&i2(), &i3, &zero),
            Err(Error::DimensionMismatch(_))
        ));
        let bad = ComplexMatrix::from_diagonal(&[c64(2., 0.), c64(1., 0.)]);
        assert!(matches!(
            d_psi(&i2(), &bad, &zero),
            Err(Error::NotUnitary { .. })
        ));
        let zero3 = StateVector::basis(3, 0).unwrap();
        assert!(matches!(
            d_psi(&i2(), &i2(), &zero3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn covering_arc_examples() {
        assert_eq!(minimal_covering_arc(&[0.0]), 0.0);
        assert!((minimal_covering_arc(&[0.0, PI / 3.0]) - PI / 3.0).abs() < 1e-15);
        let three = [0.0, TAU / 3.0, 2.0 * TAU / 3.0];
        assert!((minimal_covering_arc(&three) - 4.0 * PI / 3.0).abs() < 1e-14);
        // wrap-around cluster near zero
        let wrap = [0.1, TAU - 0.2];
        assert!((minimal_covering_arc(&wrap) - 0.3).abs() < 1e-14);
        let arc = CoveringArc::of(&wrap);
        assert_eq!(arc.start_index, 1);
    }

    #[test]
    fn arc_examples() {
        let u = haar_random_unitary(4, 3);
        assert!(u_distance(&u, &u).unwrap() < 1e-7);

        let r = u_distance_arc(&i2(), &gates::phase(PI / 3.0)).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert!(r.witness.is_none());

        let r = u_distance_arc(&i2(), &gates::pauli_z()).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(r.witness.is_some());

        let r = u_distance_arc(&ComplexMatrix::identity(4), &gates::cnot()).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn polygon_examples() {
        let p = numerical_range_polygon(&i2()).unwrap();
        assert_eq!(p.hull.len(), 1);
        let p = numerical_range_polygon(&gates::pauli_z()).unwrap();
        assert_eq!(p.hull.len(), 2);
        let w = ComplexMatrix::from_phases(&[0.0, PI / 2.0, PI, 3.0 * PI / 2.0]);
        let p = numerical_range_polygon(&w).unwrap();
        assert_eq!(p.hull.len(), 4);
        assert!(p.vertices.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
        assert_eq!(hull_distance_to_origin(&p), 0.0);
        // counterclockwise and convex
        let h = &p.hull;
        for i in 0..h.len() {
            let (a, b, c) = (h[i], h[(i + 1) % h.len()], h[(i + 2) % h.len()]);
            assert!(cross(b - a, c - b) > 0.0);
        }
    }

    #[test]
    fn hull_distance_examples() {
        let one = NumericalRangePolygon::from_eigenvalues(vec![c64(1., 0.)]);
        assert!((hull_distance_to_origin(&one) - 1.0).abs() < 1e-15);
        let chord = NumericalRangePolygon::from_eigenvalues(vec![c64(1., 0.), cis(PI / 3.0)]);
        assert!((hull_distance_to_origin(&chord) - 3f64.sqrt() / 2.0).abs() < 1e-14);
        let collinear =
            NumericalRangePolygon::from_eigenvalues(vec![c64(1., 0.), c64(0.5, 0.5), c64(0., 1.)]);
        assert_eq!(collinear.hull.len(), 2);
    }

    #[test]
    fn hull_examples() {
        let u = haar_random_unitary(3, 8);
        assert!(u_distance_hull(&u, &u).unwrap().value < 1e-7);
        let r = u_distance_hull(&i2(), &gates::phase(PI / 3.0)).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert_eq!(r.method, Method::Hull);
    }

    #[test]
    fn hull_agrees_with_arc_on_haar_pairs() {
        for seed in 0..500u64 {
            let n = 2 + (seed % 5) as usize;
            let u = haar_random_unitary(n, 2 * seed);
            let v = haar_random_unitary(n, 2 * seed + 1);
            let a = u_distance_arc(&u, &v).unwrap().value;
            let h = u_distance_hull(&u, &v).unwrap().value;
            assert!((a - h).abs() <= 1e-9, "seed {seed}: arc {a} hull {h}");
        }
    }

    #[test]
    fn bruteforce_examples() {
        let u = haar_random_unitary(3, 4);
        assert!(u_distance_bruteforce(&u, &u, 50, 50, 0).unwrap().value < 1e-7);
        let r = u_distance_bruteforce(&i2(), &gates::pauli_z(), 100, 200, 1).unwrap();
        assert!(r.value >= 1.0 - 1e-6, "{}", r.value);
        let r = u_distance_bruteforce(&i2(), &gates::phase(PI / 3.0), 100, 500, 2).unwrap();
        assert!((r.value - 0.5).abs() < 1e-4, "{}", r.value);
        assert!(u_distance_bruteforce(&i2(), &i2(), 0, 1, 0).is_err());
    }

    #[test]
    fn r_value_examples() {
        assert!((r_value(&i2()).unwrap() - 1.0).abs() < 1e-15);
        assert!(r_value(&gates::pauli_z()).unwrap() < 1e-30);
        assert!((r_value(&gates::phase(PI / 3.0)).unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn supnorm_examples() {
        assert!((supnorm_distance(&i2(), &gates::pauli_z()).unwrap() - 2.0).abs() < 1e-14);
        let ph = i2().scale(cis(PI / 2.0));
        assert!((supnorm_distance(&i2(), &ph).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        let u = haar_random_unitary(3, 1);
        assert!(supnorm_distance(&u, &u).unwrap() < 1e-7);
    }

    #[test]
    fn align_phase_examples() {
        let a = align_phase(&i2(), &i2()).unwrap();
        assert_eq!(a.x, 0.0);
        assert!(a.half_norm < 1e-15);

        let a = align_phase(&i2(), &i2().scale(cis(PI / 4.0))).unwrap();
        assert!((a.x - (TAU - PI / 4.0)).abs() < 1e-12);
        assert!(a.half_norm < 1e-12);

        let a = align_phase(&i2(), &gates::phase(PI / 3.0)).unwrap();
        assert_eq!(a.x, 0.0);
        assert!((a.half_norm - 0.5).abs() < 1e-12);

        let a = align_phase(&i2(), &gates::pauli_z()).unwrap();
        assert!((a.half_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_formula_examples() {
        assert!((tensor_distance_formula(0.0, 0.3) - 0.3).abs() < 1e-15);
        assert!((tensor_distance_formula(FRAC_1_SQRT_2, FRAC_1_SQRT_2) - 1.0).abs() < 1e-15);
        assert_eq!(tensor_distance_formula(0.5, 0.0), 0.5);
    }

    #[test]
    fn tensor_formula_undershoots_past_the_semicircle() {
        // Factor arcs 0.9 pi each: combined width 1.8 pi, so the distance is 1,
        // while the closed-form expression gives sin(0.9 pi).
        let w = gates::phase(0.9 * PI);
        let d1 = u_distance(&i2(), &w).unwrap();
        let d12 = u_distance(&i2().tensor(&i2()), &w.tensor(&w)).unwrap();
        assert_eq!(d12, 1.0);
        assert!((tensor_distance_formula(d1, d1) - (0.9 * PI).sin()).abs() < 1e-12);
        assert_eq!(tensor_distance_exact(d1, d1), 1.0);
    }

    #[test]
    fn tensor_formula_on_the_semicircle_branch() {
        let mut checked = 0;
        for seed in 0..400u64 {
            let [u1, u2, v1, v2] =
                [0, 1, 2, 3].map(|k| haar_random_unitary(2, 4 * seed + k + 9000));
            let d1 = u_distance(&u1, &v1).unwrap();
            let d2 = u_distance(&u2, &v2).unwrap();
            let d = u_distance(&u1.tensor(&u2), &v1.tensor(&v2)).unwrap();
            assert!(
                (d - tensor_distance_exact(d1, d2)).abs() <= 1e-9,
                "seed {seed}"
            );
            if d1 * d1 + d2 * d2 <= 1.0 {
                assert!((d - tensor_distance_formula(d1, d2)).abs() <= 1e-9);
                checked += 1;
            }
        }
        assert!(
            checked > 20,
            "only {checked} pairs on the semicircle branch"
        );
    }

    #[test]
    fn orthogonalizing_state_examples() {
        let psi = orthogonalizing_state(&i2(), &gates::pauli_z())
            .unwrap()
            .unwrap();
        for a in psi.amplitudes() {
            assert!((a.norm() - FRAC_1_SQRT_2).abs() < 1e-12);
        }
        assert!(
            transition_amplitude(&i2(), &gates::pauli_z(), &psi)
                .unwrap()
                .norm()
                < 1e-12
        );

        assert!(orthogonalizing_state(&i2(), &gates::phase(PI / 3.0))
            .unwrap()
            .is_none());

        let i4 = ComplexMatrix::identity(4);
        let psi = orthogonalizing_state(&i4, &gates::cnot()).unwrap().unwrap();
        assert!(
            transition_amplitude(&i4, &gates::cnot(), &psi)
                .unwrap()
                .norm()
                < 1e-12
        );
        // half the weight sits on the -1 eigenvector (|10> - |11>)/sqrt 2
        let minus =
            StateVector::new(vec![c64(0., 0.), c64(0., 0.), c64(1., 0.), c64(-1., 0.)]).unwrap();
        let w = minus.inner(&psi).unwrap().norm_sqr();
        assert!((w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn witness_for_three_point_spectrum() {
        let w = ComplexMatrix::from_phases(&[0.0, TAU / 3.0, 2.0 * TAU / 3.0]);
        let u = haar_random_unitary(3, 12);
        let v = u.matmul(&w).unwrap();
        let psi = orthogonalizing_state(&u, &v).unwrap().unwrap();
        assert!(transition_amplitude(&u, &v, &psi).unwrap().norm() <= WITNESS_TOL);
    }

    #[test]
    fn semicircle_matching_examples() {
        let u = haar_random_unitary(3, 0);
        // Haar spectra rarely fit a semicircle, so build one that does.
        let w = u
            .matmul(&ComplexMatrix::from_phases(&[0.1, 0.8, 1.2]))
            .unwrap()
            .matmul(&u.adjoint())
            .unwrap();
        let m = semicircle_matching(&w, &w).unwrap();
        assert!(m.max_eigen_gap < 1e-12 && m.norm_gap == 0.0);

        let b = ComplexMatrix::from_phases(&[0.1, 0.2]);
        let m = semicircle_matching(&i2(), &b).unwrap();
        let expected = (c64(1., 0.) - cis(0.2)).norm();
        assert!((m.max_eigen_gap - expected).abs() < 1e-12);
        assert!((m.norm_gap - expected).abs() < 1e-12);
        assert!(m.holds(1e-9));

        let wide = ComplexMatrix::from_phases(&[0.0, 2.0, 4.0]);
        assert!(matches!(
            semicircle_matching(&wide, &wide),
            Err(Error::Precondition(_))
        ));
    }
}
