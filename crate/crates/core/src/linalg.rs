//! Small dense helpers for 2×2 complex matrices.

use crate::C64;

pub type Mat2 = [[C64; 2]; 2];

pub fn trace(m: &Mat2) -> C64 {
    m[0][0] + m[1][1]
}

pub fn det(m: &Mat2) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Roots of the characteristic polynomial `λ² − tr λ + det`, larger real part
/// first. Uses the cancellation-free quadratic formula.
pub fn eigenvalues(m: &Mat2) -> [C64; 2] {
    let b = -trace(m);
    let c = det(m);
    let disc = (b * b - 4.0 * c).sqrt();
    // pick the sign that avoids cancellation in −b ∓ disc
    let q = if (b.conj() * disc).re >= 0.0 {
        -0.5 * (b + disc)
    } else {
        -0.5 * (b - disc)
    };
    let (l1, l2) = if q.norm() == 0.0 {
        (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    } else {
        (q, c / q)
    };
    if l1.re >= l2.re {
        [l1, l2]
    } else {
        [l2, l1]
    }
}
