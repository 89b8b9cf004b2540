//! Desk-scale models of the local map near a bi-focus orbit and of the
//! global maps along its homoclinic tangencies.
//!
//! Remainder terms of the local normal form and the higher cross terms of
//! the global map are identically zero here, so every written term is exact.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jets::{Jet2, JetPair};
use crate::math::{self, Mat2};

/// Multipliers and angles of a bi-focus periodic orbit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct BiFocusSpectrum {
    pub lambda: f64,
    pub gamma: f64,
    pub phi: f64,
    pub psi: f64,
    pub lambda_hat: f64,
    pub gamma_hat: f64,
    pub stable_nonleading: Vec<f64>,
    pub unstable_nonleading: Vec<f64>,
}

impl Default for BiFocusSpectrum {
    fn default() -> Self {
        Self {
            lambda: 0.3,
            gamma: 2.0,
            phi: 1.0,
            psi: core::f64::consts::SQRT_2,
            lambda_hat: 0.2,
            gamma_hat: 3.0,
            stable_nonleading: vec![0.1],
            unstable_nonleading: vec![5.0],
        }
    }
}

impl BiFocusSpectrum {
    /// Checks every standing assumption, including the angle screen.
    pub fn validate(&self) -> Result<()> {
        const OP: &str = "spectrum";
        let s = self;
        let fields = [s.lambda, s.gamma, s.phi, s.psi, s.lambda_hat, s.gamma_hat];
        if fields
            .iter()
            .chain(&s.stable_nonleading)
            .chain(&s.unstable_nonleading)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite(OP));
        }
        if !(s.lambda > 0.0 && s.lambda < 1.0) {
            return Err(Error::domain(OP, format!("lambda {} not in (0,1)", s.lambda)));
        }
        if s.gamma <= 1.0 {
            return Err(Error::domain(OP, format!("gamma {} not > 1", s.gamma)));
        }
        if s.lambda * s.gamma >= 1.0 {
            return Err(Error::domain(OP, "lambda * gamma must be < 1"));
        }
        if !(s.lambda_hat > 0.0 && s.lambda_hat < s.lambda) {
            return Err(Error::domain(OP, "need 0 < lambda_hat < lambda"));
        }
        if !(s.gamma_hat > s.gamma && s.gamma * s.gamma > s.gamma_hat) {
            return Err(Error::domain(OP, "need gamma < gamma_hat < gamma^2"));
        }
        if let Some(bad) = s.stable_nonleading.iter().find(|l| math::abs(**l) >= s.lambda) {
            return Err(Error::domain(OP, format!("stable non-leading modulus {bad} >= lambda")));
        }
        if let Some(bad) = s.unstable_nonleading.iter().find(|g| math::abs(**g) <= s.gamma) {
            return Err(Error::domain(OP, format!("unstable non-leading modulus {bad} <= gamma")));
        }
        crate::raiser::rational_independence_screen(s.phi, s.psi)
    }

    pub fn du(&self) -> usize {
        self.stable_nonleading.len()
    }

    pub fn dv(&self) -> usize {
        self.unstable_nonleading.len()
    }

    /// `R(k phi)`.
    pub fn stable_rotation(&self, k: u32) -> Mat2 {
        math::rotation(k as f64 * self.phi)
    }

    /// `R(k psi)`.
    pub fn unstable_rotation(&self, k: u32) -> Mat2 {
        math::rotation(k as f64 * self.psi)
    }
}

/// A point in the chart `(x, y, u, v)` around the periodic point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhasePoint {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Output of [`local_cross_apply`].
#[derive(Debug, Clone, PartialEq)]
pub struct CrossImage {
    pub xk: [f64; 2],
    pub y0: [f64; 2],
    pub uk: Vec<f64>,
    pub v0: Vec<f64>,
}

/// `T0^k` in cross form: `(x0, yk, u0, vk) -> (xk, y0, uk, v0)`.
pub fn local_cross_apply(
    spec: &BiFocusSpectrum,
    k: u32,
    x0: [f64; 2],
    yk: [f64; 2],
    u0: &[f64],
    vk: &[f64],
) -> Result<CrossImage> {
    const OP: &str = "local_cross_apply";
    if k < 1 {
        return Err(Error::domain(OP, "k must be >= 1"));
    }
    if u0.len() != spec.du() || vk.len() != spec.dv() {
        return Err(Error::contract(OP, "u/v dimensions do not match the spectrum"));
    }
    let lk = math::pow(spec.lambda, k as f64);
    let gk = math::pow(spec.gamma, -(k as f64));
    let xr = math::mat_vec(spec.stable_rotation(k), x0);
    let yr = math::mat_vec(math::rotation(-(k as f64) * spec.psi), yk);
    Ok(CrossImage {
        xk: [lk * xr[0], lk * xr[1]],
        y0: [gk * yr[0], gk * yr[1]],
        uk: vec![0.0; u0.len()],
        v0: vec![0.0; vk.len()],
    })
}

/// Taylor data of one global map `T1` near a tangency of order `order_cap`.
///
/// Linear blocks are stored by output row. `a` has rows
/// `x1, x2, y1, y2, u.., v..`; `b` has rows `x1, x2, u.., v..` because the
/// `y` rows of the `b` block are the degree-one entries of `mu` and `nu`.
/// `c` and `d` share the row layout of `a`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct GlobalMapModel {
    pub order_cap: usize,
    pub x_plus: [f64; 2],
    pub u_plus: Vec<f64>,
    pub y_minus: [f64; 2],
    pub v_minus: Vec<f64>,
    pub a: Vec<[f64; 2]>,
    pub b: Vec<[f64; 2]>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    /// Coefficients of degree `0..=order_cap` in the `y1` row.
    pub mu: Jet2,
    /// Coefficients of degree `0..=order_cap` in the `y2` row.
    pub nu: Jet2,
    /// Degree `order_cap + 1` block of the `y1` row, by `Y2` exponent.
    pub lead_a: Vec<f64>,
    /// Degree `order_cap + 1` block of the `y2` row.
    pub lead_b: Vec<f64>,
}

pub const ROW_X1: usize = 0;
pub const ROW_X2: usize = 1;
pub const ROW_Y1: usize = 2;
pub const ROW_Y2: usize = 3;

impl GlobalMapModel {
    /// Identity-like linear blocks, zero couplings, zero jets and leads.
    /// The caller must set a non-zero lead before the model is valid.
    pub fn blank(order_cap: usize, du: usize, dv: usize) -> Self {
        let rows = 4 + du + dv;
        let mut a = vec![[0.0; 2]; rows];
        a[ROW_Y1] = [1.0, 0.0];
        a[ROW_Y2] = [0.0, 1.0];
        let mut b = vec![[0.0; 2]; 2 + du + dv];
        b[0] = [1.0, 0.0];
        b[1] = [0.0, 1.0];
        let mut d = vec![vec![0.0; dv]; rows];
        for i in 0..dv {
            d[4 + du + i][i] = 1.0;
        }
        Self {
            order_cap,
            x_plus: [0.0; 2],
            u_plus: vec![0.0; du],
            y_minus: [0.0; 2],
            v_minus: vec![0.0; dv],
            a,
            b,
            c: vec![vec![0.0; du]; rows],
            d,
            mu: Jet2::zero(order_cap),
            nu: Jet2::zero(order_cap),
            lead_a: vec![0.0; order_cap + 2],
            lead_b: vec![0.0; order_cap + 2],
        }
    }

    /// The fixed index-(1,0) model used throughout tests and examples.
    pub fn reference() -> Self {
        let mut gm = Self::blank(1, 1, 1);
        gm.x_plus = [0.5, -0.3];
        gm.u_plus = vec![0.1];
        gm.y_minus = [0.4, 0.2];
        gm.v_minus = vec![-0.2];
        gm.a = vec![[0.5, 0.1], [-0.1, 0.4], [1.0, 0.0], [0.0, 1.0], [0.1, 0.0], [0.0, 0.1]];
        gm.b = vec![[1.0, 0.0], [0.0, 1.0], [0.1, 0.1], [0.2, 0.0]];
        gm.lead_a = vec![1.0, 0.5, 0.2];
        gm.lead_b = vec![0.3, 1.0, -0.4];
        gm
    }

    pub fn du(&self) -> usize {
        self.u_plus.len()
    }

    pub fn dv(&self) -> usize {
        self.v_minus.len()
    }

    pub fn row_u(&self, i: usize) -> usize {
        4 + i
    }

    pub fn row_v(&self, i: usize) -> usize {
        4 + self.du() + i
    }

    /// Rows `y1, y2` of `a`.
    pub fn a34(&self) -> Mat2 {
        [self.a[ROW_Y1], self.a[ROW_Y2]]
    }

    /// Rows `x1, x2` of `a`.
    pub fn a12(&self) -> Mat2 {
        [self.a[ROW_X1], self.a[ROW_X2]]
    }

    /// Rows `x1, x2` of `b`.
    pub fn b12(&self) -> Mat2 {
        [self.b[0], self.b[1]]
    }

    /// The `v` rows of `d`, a `dv x dv` matrix.
    pub fn d6(&self) -> DMatrix<f64> {
        let dv = self.dv();
        let base = 4 + self.du();
        DMatrix::from_fn(dv, dv, |r, col| self.d[base + r][col])
    }

    /// Shape, finiteness and lead checks.
    pub fn check(&self) -> Result<()> {
        const OP: &str = "global_map_model";
        let (n, du, dv) = (self.order_cap, self.du(), self.dv());
        let rows = 4 + du + dv;
        let shape_ok = self.a.len() == rows
            && self.b.len() == 2 + du + dv
            && self.c.len() == rows
            && self.c.iter().all(|r| r.len() == du)
            && self.d.len() == rows
            && self.d.iter().all(|r| r.len() == dv)
            && self.mu.cap() == n
            && self.nu.cap() == n
            && self.lead_a.len() == n + 2
            && self.lead_b.len() == n + 2;
        if !shape_ok {
            return Err(Error::contract(OP, "block shapes inconsistent with order_cap and u/v dimensions"));
        }
        if n < 1 {
            return Err(Error::contract(OP, "order_cap must be >= 1"));
        }
        let finite = self
            .x_plus
            .iter()
            .chain(&self.y_minus)
            .chain(&self.u_plus)
            .chain(&self.v_minus)
            .chain(self.a.iter().flatten())
            .chain(self.b.iter().flatten())
            .chain(self.c.iter().flatten())
            .chain(self.d.iter().flatten())
            .chain(self.mu.coeffs())
            .chain(self.nu.coeffs())
            .chain(&self.lead_a)
            .chain(&self.lead_b)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite(OP));
        }
        let lead_mass: f64 = self.lead_a.iter().chain(&self.lead_b).map(|v| math::abs(*v)).sum();
        if lead_mass == 0.0 {
            return Err(Error::contract(OP, "lead arrays are identically zero"));
        }
        Ok(())
    }

    /// Replaces `mu`, `nu` and the lead arrays from a jet pair of cap `order_cap + 1`.
    pub fn with_tangent_jet(&self, jp: &JetPair) -> Result<Self> {
        let n = jp
            .cap()
            .checked_sub(1)
            .filter(|n| *n >= 1)
            .ok_or_else(|| Error::contract("with_tangent_jet", "jet cap must be >= 2"))?;
        let mut gm = self.clone();
        gm.order_cap = n;
        gm.mu = jp.y1.with_cap(n);
        gm.nu = jp.y2.with_cap(n);
        gm.lead_a = jp.y1.degree_block(n + 1).to_vec();
        gm.lead_b = jp.y2.degree_block(n + 1).to_vec();
        Ok(gm)
    }
}

/// The `(ybar1, ybar2)` rows restricted to `x = 0, u = 0, vbar = 0`, in `Y = y - y_minus`.
pub fn global_tangent_jet(gm: &GlobalMapModel) -> JetPair {
    let n = gm.order_cap;
    let build = |low: &Jet2, lead: &[f64]| {
        Jet2::from_fn(n + 1, |j, i| if j <= n { low.coeff(j, i) } else { lead[i] })
    };
    JetPair {
        y1: build(&gm.mu, &gm.lead_a),
        y2: build(&gm.nu, &gm.lead_b),
    }
}

/// Applies `T1` to `p = (x, y, u, v)` and returns `(xbar, ybar, ubar, vbar)`.
///
/// The `v` row defines `v` implicitly in terms of `vbar`; it is solved by
/// LU followed by iterative refinement.
pub fn global_apply(gm: &GlobalMapModel, p: &PhasePoint) -> Result<PhasePoint> {
    const OP: &str = "global_apply";
    gm.check()?;
    let (du, dv) = (gm.du(), gm.dv());
    if p.u.len() != du || p.v.len() != dv {
        return Err(Error::contract(OP, "point dimensions do not match the model"));
    }
    let y = [p.y[0] - gm.y_minus[0], p.y[1] - gm.y_minus[1]];
    let linear = |arow: [f64; 2], brow: [f64; 2], crow: &[f64]| {
        arow[0] * p.x[0]
            + arow[1] * p.x[1]
            + brow[0] * y[0]
            + brow[1] * y[1]
            + crow.iter().zip(&p.u).map(|(c, u)| c * u).sum::<f64>()
    };
    let vbar = if dv == 0 {
        Vec::new()
    } else {
        let rhs = DVector::from_fn(dv, |i, _| {
            let row = gm.row_v(i);
            p.v[i] - gm.v_minus[i] - linear(gm.a[row], gm.b[2 + du + i], &gm.c[row])
        });
        solve_refined(&gm.d6(), &rhs)?.iter().copied().collect()
    };
    let dot_v = |row: usize| gm.d[row].iter().zip(&vbar).map(|(d, v)| d * v).sum::<f64>();
    let x = [
        gm.x_plus[0] + linear(gm.a[ROW_X1], gm.b[0], &gm.c[ROW_X1]) + dot_v(ROW_X1),
        gm.x_plus[1] + linear(gm.a[ROW_X2], gm.b[1], &gm.c[ROW_X2]) + dot_v(ROW_X2),
    ];
    let jp = global_tangent_jet(gm);
    let ybar = [
        linear(gm.a[ROW_Y1], [0.0; 2], &gm.c[ROW_Y1]) + jp.y1.eval(y[0], y[1]) + dot_v(ROW_Y1),
        linear(gm.a[ROW_Y2], [0.0; 2], &gm.c[ROW_Y2]) + jp.y2.eval(y[0], y[1]) + dot_v(ROW_Y2),
    ];
    let u = (0..du)
        .map(|i| {
            let row = gm.row_u(i);
            gm.u_plus[i] + linear(gm.a[row], gm.b[2 + i], &gm.c[row]) + dot_v(row)
        })
        .collect();
    Ok(PhasePoint { x, y: ybar, u, v: vbar })
}

/// Solves `m z = rhs` by LU plus refinement sweeps, at most 100, to 1e-12.
fn solve_refined(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    const OP: &str = "global_apply";
    let lu = m.clone().lu();
    let mut z = DVector::zeros(rhs.len());
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        let residual = rhs - m * &z;
        let step = lu.solve(&residual).ok_or(Error::Convergence {
            op: OP,
            iterations: 0,
            residual: f64::INFINITY,
        })?;
        z += &step;
        last = step.norm();
        if last <= 1e-12 * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    Err(Error::Convergence {
        op: OP,
        iterations: 100,
        residual: last,
    })
}

/// Determinants behind the two transversality conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenericityReport {
    pub det_a34: f64,
    pub det_b12: f64,
    pub det_d6: f64,
    pub pass_a34: bool,
    pub pass_b12: bool,
    pub pass_d6: bool,
}

impl GenericityReport {
    pub fn pass(&self) -> bool {
        self.pass_a34 && self.pass_b12 && self.pass_d6
    }
}

const GENERICITY_THRESHOLD: f64 = 1e-9;

fn det_passes(det: f64, row_norm_product: f64) -> bool {
    math::abs(det) > GENERICITY_THRESHOLD * row_norm_product
}

pub fn validate_genericity(gm: &GlobalMapModel) -> GenericityReport {
    let a = gm.a34();
    let b = gm.b12();
    let det_a34 = math::det2(a);
    let det_b12 = math::det2(b);
    let norms2 = |m: Mat2| math::norm2(m[0]) * math::norm2(m[1]);
    let (det_d6, d_norms) = if gm.dv() == 0 {
        (1.0, 1.0)
    } else {
        let d6 = gm.d6();
        let product = d6.row_iter().map(|r| r.norm()).product::<f64>();
        (d6.determinant(), product)
    };
    GenericityReport {
        det_a34,
        det_b12,
        det_d6,
        pass_a34: det_passes(det_a34, norms2(a)),
        pass_b12: det_passes(det_b12, norms2(b)),
        pass_d6: det_passes(det_d6, d_norms),
    }
}
