//! Standard gate matrices.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::linalg::{c64, cis, ComplexMatrix};

fn m2(a: [[f64; 2]; 2]) -> ComplexMatrix {
    ComplexMatrix::from_fn(2, 2, |i, j| c64(a[i][j], 0.0))
}

pub fn pauli_x() -> ComplexMatrix {
    m2([[0., 1.], [1., 0.]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::new(
        2,
        2,
        vec![c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)],
    )
    .expect("static shape")
}

pub fn pauli_z() -> ComplexMatrix {
    m2([[1., 0.], [0., -1.]])
}

pub fn hadamard() -> ComplexMatrix {
    let h = FRAC_1_SQRT_2;
    m2([[h, h], [h, -h]])
}

/// `diag(1, e^{i theta})`.
pub fn phase(theta: f64) -> ComplexMatrix {
    ComplexMatrix::from_phases(&[0.0, theta])
}

/// Controlled-NOT with the first (most significant) qubit as control.
pub fn cnot() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, c)] = c64(1., 0.);
    }
    m
}

pub fn swap() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        m[(r, c)] = c64(1., 0.);
    }
    m
}

/// `Rz(t) = diag(e^{-it/2}, e^{it/2})`.
pub fn rz(theta: f64) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&[cis(-theta / 2.0), cis(theta / 2.0)])
}

/// `Ry(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]`.
pub fn ry(theta: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    m2([[c, -s], [s, c]])
}

/// Z-Y-Z Euler form `Rz(a) Ry(b) Rz(c)`, always in SU(2).
pub fn su2_euler(a: f64, b: f64, c: f64) -> ComplexMatrix {
    // Closed form of the product, avoiding two 2x2 multiplications per call.
    let (s, co) = (b / 2.0).sin_cos();
    let p = (a + c) / 2.0;
    let q = (a - c) / 2.0;
    ComplexMatrix::new(
        2,
        2,
        vec![cis(-p) * co, -cis(-q) * s, cis(q) * s, cis(p) * co],
    )
    .expect("static shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_form_matches_product() {
        for &(a, b, c) in &[(0.3, 1.1, -0.7), (2.0, 0.0, 1.0), (-1.5, 3.0, 4.0)] {
            let direct = rz(a).matmul(&ry(b)).unwrap().matmul(&rz(c)).unwrap();
            let closed = su2_euler(a, b, c);
            assert!(direct.max_abs_diff(&closed).unwrap() < 1e-14);
        }
    }

    #[test]
    fn all_gates_unitary() {
        for g in [
            pauli_x(),
            pauli_y(),
            pauli_z(),
            hadamard(),
            cnot(),
            swap(),
            phase(0.4),
        ] {
            assert!(g.is_unitary(1e-14).unwrap());
        }
    }
}
