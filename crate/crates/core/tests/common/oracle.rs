//! Brute-force sparse polynomials keyed by exponent pairs `(a, b)` of
//! `Y1^a Y2^b`. Deliberately naive: every product is expanded term by term.

#![allow(dead_code)]

use std::collections::BTreeMap;

use bifocus_core::jets::{monomials, Jet2};
use rand::Rng;

pub type Poly = BTreeMap<(u32, u32), f64>;

pub fn from_jet(jet: &Jet2) -> Poly {
    let mut p = Poly::new();
    for (j, i) in monomials(jet.cap()) {
        let c = jet.coeff(j, i);
        if c != 0.0 {
            p.insert(((j - i) as u32, i as u32), c);
        }
    }
    p
}

pub fn constant(c: f64) -> Poly {
    let mut p = Poly::new();
    p.insert((0, 0), c);
    p
}

pub fn add(p: &Poly, q: &Poly) -> Poly {
    let mut out = p.clone();
    for (k, v) in q {
        *out.entry(*k).or_insert(0.0) += v;
    }
    out
}

pub fn scale(p: &Poly, s: f64) -> Poly {
    p.iter().map(|(k, v)| (*k, v * s)).collect()
}

/// Product, dropping terms above total degree `cap` when given.
pub fn mul(p: &Poly, q: &Poly, cap: Option<u32>) -> Poly {
    let mut out = Poly::new();
    for (&(a1, b1), &c1) in p {
        for (&(a2, b2), &c2) in q {
            let key = (a1 + a2, b1 + b2);
            if cap.is_some_and(|d| key.0 + key.1 > d) {
                continue;
            }
            *out.entry(key).or_insert(0.0) += c1 * c2;
        }
    }
    out
}

pub fn pow(p: &Poly, e: u32, cap: Option<u32>) -> Poly {
    (0..e).fold(constant(1.0), |acc, _| mul(&acc, p, cap))
}

/// `outer(inner1, inner2)`, expanded monomial by monomial.
pub fn compose(outer: &Poly, inner1: &Poly, inner2: &Poly, cap: Option<u32>) -> Poly {
    let mut out = Poly::new();
    for (&(a, b), &c) in outer {
        let term = mul(&pow(inner1, a, cap), &pow(inner2, b, cap), cap);
        out = add(&out, &scale(&term, c));
    }
    out
}

/// Coefficient of total degree `j`, `Y2` exponent `i`.
pub fn coeff(p: &Poly, j: usize, i: usize) -> f64 {
    p.get(&((j - i) as u32, i as u32)).copied().unwrap_or(0.0)
}

pub fn eval(p: &Poly, y1: f64, y2: f64) -> f64 {
    p.iter().map(|(&(a, b), c)| c * y1.powi(a as i32) * y2.powi(b as i32)).sum()
}

pub fn max_abs(p: &Poly) -> f64 {
    p.values().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Largest coefficient gap between `jet` and `p` over degrees `0..=jet.cap()`,
/// relative to `max(1, max |p|)`.
pub fn relative_gap(jet: &Jet2, p: &Poly) -> f64 {
    let scale = max_abs(p).max(1.0);
    monomials(jet.cap())
        .map(|(j, i)| (jet.coeff(j, i) - coeff(p, j, i)).abs())
        .fold(0.0f64, f64::max)
        / scale
}

/// Random jet of cap `cap` whose coefficients vanish above `degree`;
/// the constant term is zero when `zero_constant`.
pub fn random_jet(rng: &mut impl Rng, cap: usize, degree: usize, zero_constant: bool) -> Jet2 {
    Jet2::from_fn(cap, |j, _| {
        if j > degree || (j == 0 && zero_constant) {
            0.0
        } else {
            rng.gen_range(-1.0..1.0)
        }
    })
}

/// Degree-`n` least squares through the normal equations, solved by
/// Gauss-Jordan elimination. Returns `[y1, y2]` coefficients in monomial order.
pub fn normal_equations_fit(target: &dyn Fn(f64, f64) -> (f64, f64), points: &[(f64, f64)], n: usize) -> Vec<[f64; 2]> {
    let basis: Vec<(usize, usize)> = monomials(n).collect();
    let dim = basis.len();
    let mut a = vec![vec![0.0; dim + 2]; dim];
    for &(y1, y2) in points {
        let phi: Vec<f64> = basis.iter().map(|&(j, i)| y1.powi((j - i) as i32) * y2.powi(i as i32)).collect();
        let t = target(y1, y2);
        for r in 0..dim {
            for c in 0..dim {
                a[r][c] += phi[r] * phi[c];
            }
            a[r][dim] += phi[r] * t.0;
            a[r][dim + 1] += phi[r] * t.1;
        }
    }
    for col in 0..dim {
        let piv = (col..dim).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..dim {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..dim + 2 {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..dim).map(|r| [a[r][dim] / a[r][r], a[r][dim + 1] / a[r][r]]).collect()
}

/// Points of a `size x size` lattice on `[-1, 1]^2` inside the closed unit disk.
pub fn disk_grid(size: usize) -> Vec<(f64, f64)> {
    let h = 2.0 / (size - 1) as f64;
    (0..size)
        .flat_map(|a| (0..size).map(move |b| (-1.0 + a as f64 * h, -1.0 + b as f64 * h)))
        .filter(|(x, y)| x * x + y * y <= 1.0 + 1e-12)
        .collect()
}
