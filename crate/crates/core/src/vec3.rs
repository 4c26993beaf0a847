//! Small helpers for RGB 3-vectors.

use nalgebra::DMatrix;

#[inline]
pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalized(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    a.map(|v| v / n)
}

pub fn max(a: [f64; 3]) -> f64 {
    a[0].max(a[1]).max(a[2])
}

pub fn cosine(a: [f64; 3], b: [f64; 3]) -> f64 {
    (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0)
}

/// Angle between two directions in degrees.
pub fn angle_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
    cosine(a, b).acos().to_degrees()
}

pub fn mean(rows: &[[f64; 3]]) -> [f64; 3] {
    let n = rows.len() as f64;
    let mut acc = [0.0; 3];
    for r in rows {
        for c in 0..3 {
            acc[c] += r[c];
        }
    }
    acc.map(|s| s / n)
}

/// Singular values of an `n x 3` matrix, descending.
pub fn singular_values(rows: &[[f64; 3]]) -> [f64; 3] {
    let m = DMatrix::from_row_iterator(rows.len(), 3, rows.iter().flatten().copied());
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.resize(3, 0.0);
    [sv[0], sv[1], sv[2]]
}
