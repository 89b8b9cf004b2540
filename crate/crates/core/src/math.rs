//! Small numeric helpers shared by the modules.

pub(crate) use libm::{cos, exp, fabs as abs, log as ln, pow, sin, sqrt};

pub type Mat2 = [[f64; 2]; 2];

/// Rotation by `theta`, counter-clockwise.
pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = (sin(theta), cos(theta));
    [[c, -s], [s, c]]
}

pub fn mat_vec(m: Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub fn mat_mul(a: Mat2, b: Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn det2(m: Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn norm2(v: [f64; 2]) -> f64 {
    libm::hypot(v[0], v[1])
}

pub fn powi(x: f64, n: usize) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// `value * exp(log_factor)`, still representable when the factor alone
/// over- or underflows but the product does not.
pub fn scale_log(value: f64, log_factor: f64) -> f64 {
    if value == 0.0 {
        return 0.0;
    }
    let factor = exp(log_factor);
    if factor.is_finite() && factor > f64::MIN_POSITIVE {
        return value * factor;
    }
    let half = exp(0.5 * log_factor);
    if half.is_finite() && half > 0.0 {
        let scaled = value * half * half;
        if scaled.is_finite() && scaled != 0.0 {
            return scaled;
        }
    }
    let magnitude = exp(ln(abs(value)) + log_factor);
    if value < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Real root of degree `degree` of `x`; odd degrees accept negative `x`.
/// Returns `None` for an even root of a negative number.
pub fn real_root(x: f64, degree: usize) -> Option<f64> {
    if x < 0.0 && degree.is_multiple_of(2) {
        return None;
    }
    let r = pow(abs(x), 1.0 / degree as f64);
    Some(if x < 0.0 { -r } else { r })
}
