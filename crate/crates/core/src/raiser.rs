//! The index-raising engine.
//!
//! Two global maps `T1` (here `gm1`) and `T1hat` (`gm2`) of equal index
//! `(n, m)` are glued through `k` turns of the local map into
//! `T1new = T1hat o T0^k o T1`. The free coefficients of both maps are chosen
//! so that every coefficient of the composite up to suborder `(n, m)`
//! vanishes, which raises the index. Pairs are then organised in rounds to
//! raise the order.
//!
//! All solving happens in rescaled parameters `(M, N, P, Q)`, which stay of
//! order one as `k` grows. The physical parameters are
//!
//! * `mubar = sigma_mu * M` with `sigma_mu = lambda^(k/(n+2)) gamma^(-k(n+1)/(n+2))`,
//! * `p1i = sigma_p * P1i` with `sigma_p = lambda^(k(n+1)/(n+2)) gamma^(-k/(n+2))`,
//! * `p00 = lambda^k * P00`,
//!
//! and likewise for `nubar` and `q`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jets::{Jet2, JetPair};
use crate::math::{self, Mat2};
use crate::model::{global_tangent_jet, validate_genericity, BiFocusSpectrum, GlobalMapModel};
use crate::tangency::{tangency_index, TangencyIndex, DEFAULT_TOL};

/// Default search window for `k`.
pub const DEFAULT_K_RANGE: (u32, u32) = (5, 400);
/// Relative floor on the denominators of the closed-form solve.
pub const ETA: f64 = 1e-6;
/// Newton stops once the normalized residual is at or below this.
pub const NEWTON_TOL: f64 = 1e-11;
pub const NEWTON_MAX_ITER: usize = 50;
/// Size of the pinning split relative to the natural lead scale.
pub const PIN_FACTOR: f64 = 1e-2;

const SCREEN_BOUND: i32 = 50;
const SCREEN_GAP: f64 = 1e-9;
const UNDERFLOW: f64 = 1e-300;

/// Rejects angles for which `k1 phi + k2 psi` is a whole number of turns
/// for some small `(k1, k2) != (0, 0)`.
pub fn rational_independence_screen(phi: f64, psi: f64) -> Result<()> {
    let (a, b) = (phi / TAU, psi / TAU);
    for k1 in -SCREEN_BOUND..=SCREEN_BOUND {
        for k2 in -SCREEN_BOUND..=SCREEN_BOUND {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let t = k1 as f64 * a + k2 as f64 * b;
            if math::abs(t - libm::round(t)) < SCREEN_GAP {
                return Err(Error::domain(
                    "rational_independence_screen",
                    format!("{k1}*phi + {k2}*psi is a whole number of turns"),
                ));
            }
        }
    }
    Ok(())
}

/// Lead arrays of `gm1` rotated by `k psi`, and the constants `S1..S4`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotatedLead {
    pub k: u32,
    pub a_tilde: Vec<f64>,
    pub b_tilde: Vec<f64>,
    pub s: [f64; 4],
}

impl RotatedLead {
    /// Same lead, with `S` negated.
    ///
    /// The composite's linear terms cancel when `gamma^k p mubar = -lambda^k S`;
    /// solving the printed system with `-S` yields that cancelling root.
    pub fn cancellation(&self) -> Self {
        let mut out = self.clone();
        out.s = self.s.map(|v| -v);
        out
    }
}

fn s_matrix(gm1: &GlobalMapModel, gm2: &GlobalMapModel, spec: &BiFocusSpectrum, k: u32) -> Mat2 {
    math::mat_mul(gm2.a34(), math::mat_mul(spec.stable_rotation(k), gm1.b12()))
}

pub fn rotated_lead(
    gm1: &GlobalMapModel,
    gm2: &GlobalMapModel,
    spec: &BiFocusSpectrum,
    k: u32,
) -> Result<RotatedLead> {
    if k < 1 {
        return Err(Error::domain("rotated_lead", "k must be >= 1"));
    }
    let r = spec.unstable_rotation(k);
    let (a_tilde, b_tilde) = gm1
        .lead_a
        .iter()
        .zip(&gm1.lead_b)
        .map(|(&a, &b)| {
            let v = math::mat_vec(r, [a, b]);
            (v[0], v[1])
        })
        .unzip();
    let s = s_matrix(gm1, gm2, spec, k);
    Ok(RotatedLead {
        k,
        a_tilde,
        b_tilde,
        s: [s[0][0], s[0][1], s[1][0], s[1][1]],
    })
}

/// `(S1 S4 - S2 S3, det(a34 of gm2) * det(b12 of gm1))`.
pub fn s_determinant_identity(
    rl: &RotatedLead,
    gm1: &GlobalMapModel,
    gm2: &GlobalMapModel,
) -> (f64, f64) {
    let [s1, s2, s3, s4] = rl.s;
    (s1 * s4 - s2 * s3, math::det2(gm2.a34()) * math::det2(gm1.b12()))
}

/// Sign branch of the rotated lead pair `(A~_m, B~_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Both positive.
    Even,
    /// Both negative.
    Odd,
}

/// Admissible `k`, split by branch, each list increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KSequence {
    pub even: Vec<u32>,
    pub odd: Vec<u32>,
    pub k_min: u32,
    pub k_max: u32,
}

impl KSequence {
    pub fn branch(&self, branch: Branch) -> Result<&[u32]> {
        let (list, name) = match branch {
            Branch::Even => (&self.even, "even branch"),
            Branch::Odd => (&self.odd, "odd branch"),
        };
        if list.is_empty() {
            Err(Error::SearchExhausted {
                k_min: self.k_min,
                k_max: self.k_max,
                branch: name,
                near_miss: None,
            })
        } else {
            Ok(list)
        }
    }

    /// Both branches merged in increasing order.
    pub fn merged(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self.even.iter().chain(&self.odd).copied().collect();
        all.sort_unstable();
        all
    }
}

/// Finds `k` where the rotated lead at suborder `m` has a definite sign and
/// both elimination denominators clear the floor `ETA`.
pub fn select_k_sequence(
    gm1: &GlobalMapModel,
    gm2: &GlobalMapModel,
    spec: &BiFocusSpectrum,
    m: usize,
    count: usize,
    k_min: u32,
    k_max: u32,
) -> Result<KSequence> {
    const OP: &str = "select_k_sequence";
    if !(k_min >= 1 && k_max > k_min) {
        return Err(Error::precondition(OP, "need k_max > k_min >= 1"));
    }
    if m >= gm1.lead_a.len() || m >= gm2.lead_a.len() {
        return Err(Error::precondition(OP, format!("suborder {m} outside the lead arrays")));
    }
    let (d, e) = (gm2.lead_a[m], gm2.lead_b[m]);
    if d == 0.0 && e == 0.0 {
        return Err(Error::precondition(OP, "D_m and E_m both vanish"));
    }
    let lead_scale = math::sqrt(gm1.lead_a[m] * gm1.lead_a[m] + gm1.lead_b[m] * gm1.lead_b[m]);
    let eta_lead = ETA * lead_scale;
    let mut seq = KSequence {
        even: Vec::new(),
        odd: Vec::new(),
        k_min,
        k_max,
    };
    let mut near_miss: Option<(u32, f64)> = None;
    for k in k_min..=k_max {
        if seq.even.len() >= count && seq.odd.len() >= count {
            break;
        }
        let rl = rotated_lead(gm1, gm2, spec, k)?;
        let [s1, s2, s3, s4] = rl.s;
        let s_scale = rl.s.iter().fold(0.0f64, |a, v| a.max(math::abs(*v)));
        let eta = ETA * s_scale * math::abs(d).max(math::abs(e));
        let sigma1 = s1 * e - s3 * d;
        let sigma2 = s2 * e - s4 * d;
        let (at, bt) = (rl.a_tilde[m], rl.b_tilde[m]);
        let denominators_ok = math::abs(sigma1) > eta && math::abs(sigma2) > eta;
        let branch = if at > eta_lead && bt > eta_lead {
            Some(Branch::Even)
        } else if at < -eta_lead && bt < -eta_lead {
            Some(Branch::Odd)
        } else {
            None
        };
        match (branch, denominators_ok) {
            (Some(Branch::Even), true) if seq.even.len() < count => seq.even.push(k),
            (Some(Branch::Odd), true) if seq.odd.len() < count => seq.odd.push(k),
            (Some(_), true) => {}
            _ => {
                let margin = math::abs(at).min(math::abs(bt));
                if near_miss.is_none_or(|(_, best)| margin > best) {
                    near_miss = Some((k, margin));
                }
            }
        }
    }
    if seq.even.is_empty() && seq.odd.is_empty() {
        return Err(Error::SearchExhausted {
            k_min,
            k_max,
            branch: "both branches",
            near_miss,
        });
    }
    Ok(seq)
}

/// Leading-order solution of the rescaled two-line system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub m10: f64,
    pub n11: f64,
    /// `(P00, P10, P11)`.
    pub p: [f64; 3],
    /// `(Q00, Q10, Q11)`.
    pub q: [f64; 3],
}

/// Solves `M^(n+2-m) N^(m+1) D + S1 N A~ + S2 M B~ = 0` and its `E` line
/// by elimination: the ratio `c = N / M` comes from the linear combination
/// of the two lines, then `M` is a real root of degree `n + 2`.
///
/// When `D_m = 0` the two lines trade places.
pub fn solve_raise_closed_form(
    rl: &RotatedLead,
    d_m: f64,
    e_m: f64,
    n: usize,
    m: usize,
) -> Result<ClosedForm> {
    const OP: &str = "solve_raise_closed_form";
    if m > n + 1 || m >= rl.a_tilde.len() {
        return Err(Error::precondition(OP, format!("suborder {m} out of range for order {n}")));
    }
    let [s1, s2, s3, s4] = rl.s;
    if d_m == 0.0 {
        if e_m == 0.0 {
            return Err(Error::precondition(OP, "D_m and E_m both vanish"));
        }
        let swapped = RotatedLead {
            s: [s3, s4, s1, s2],
            ..rl.clone()
        };
        let sol = solve_raise_closed_form(&swapped, e_m, d_m, n, m)?;
        return Ok(ClosedForm {
            p: sol.q,
            q: sol.p,
            ..sol
        });
    }
    let s_scale = rl.s.iter().fold(0.0f64, |a, v| a.max(math::abs(*v)));
    let tiny = 64.0 * f64::EPSILON;
    let det = s1 * s4 - s2 * s3;
    if math::abs(det) <= tiny * s_scale * s_scale {
        return Err(Error::precondition(OP, "S1 S4 - S2 S3 vanishes"));
    }
    let de_scale = s_scale * math::abs(d_m).max(math::abs(e_m));
    let sigma1 = s1 * e_m - s3 * d_m;
    let sigma2 = s2 * e_m - s4 * d_m;
    if math::abs(sigma1) <= tiny * de_scale {
        return Err(Error::precondition(OP, "S1 E_m - S3 D_m vanishes"));
    }
    if math::abs(sigma2) <= tiny * de_scale {
        return Err(Error::precondition(OP, "S2 E_m - S4 D_m vanishes"));
    }
    let (at, bt) = (rl.a_tilde[m], rl.b_tilde[m]);
    if at == 0.0 || bt == 0.0 {
        return Err(Error::precondition(OP, "rotated lead vanishes at the suborder"));
    }
    let c = -bt * sigma2 / (at * sigma1);
    let radicand = -(s1 * c * at + s2 * bt) / (math::powi(c, m + 1) * d_m);
    if !radicand.is_finite() || radicand == 0.0 {
        return Err(Error::precondition(OP, "degenerate radicand"));
    }
    let m10 = math::real_root(radicand, n + 2).ok_or(Error::BranchFlip {
        radicand,
        degree: n + 2,
    })?;
    let n11 = c * m10;
    Ok(ClosedForm {
        m10,
        n11,
        p: [0.0, s1 / m10, s2 / n11],
        q: [0.0, s3 / m10, s4 / n11],
    })
}

/// `|M10|` from the published closed form, usable as a cross-check.
///
/// Its radicand differs from the elimination radicand by `(-1)^(m+1)`, so
/// only the modulus is comparable.
pub fn published_m10_modulus(rl: &RotatedLead, d_m: f64, e_m: f64, n: usize, m: usize) -> f64 {
    let [s1, s2, s3, s4] = rl.s;
    let sigma1 = s1 * e_m - s3 * d_m;
    let sigma2 = s2 * e_m - s4 * d_m;
    let s_tilde1 = (s2 * s3 - s1 * s4) * math::powi(sigma1, m) / math::powi(sigma2, m + 1);
    let (at, bt) = (rl.a_tilde[m], rl.b_tilde[m]);
    let value = math::powi(at, m + 1) / math::powi(bt, m) * s_tilde1;
    math::pow(math::abs(value), 1.0 / (n + 2) as f64)
}

/// Physical (unscaled) parameters of a [`RaiseSolution`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UnscaledParams {
    /// Rotated `mubar_{j,i}`, cap `n + 1`; degree `n + 1` holds `i < m` only.
    pub mu_bar: Jet2,
    pub nu_bar: Jet2,
    pub p: [f64; 3],
    pub q: [f64; 3],
}

/// Rescaled parameters solving the index-raising system at one `k`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RaiseSolution {
    pub k: u32,
    pub n: usize,
    pub m: usize,
    /// `M_{j,i}`, cap `n + 1`. `M_{1,1}` is pinned to zero; `M_{0,0}` is the
    /// pinned constant in rescaled units.
    pub big_m: Jet2,
    pub big_n: Jet2,
    pub p: [f64; 3],
    pub q: [f64; 3],
    /// Normalized residual of the targeted composite coefficients.
    pub residual: f64,
    pub iterations: usize,
    pub unscaled: UnscaledParams,
}

/// Everything about one `(gm1, gm2, k)` that does not depend on the parameters.
struct RaiseSystem<'a> {
    gm2: &'a GlobalMapModel,
    k: u32,
    n: usize,
    m: usize,
    lambda_k: f64,
    log_lambda_k: f64,
    log_gamma_k: f64,
    log_sigma_mu: f64,
    log_sigma_p: f64,
    tau: f64,
    rho: f64,
    x_const: [f64; 2],
    x_lin: Mat2,
    /// `gamma^k R(k psi) (A_i, B_i)` of `gm1`.
    lead1: (Vec<f64>, Vec<f64>),
}

impl<'a> RaiseSystem<'a> {
    fn new(
        gm1: &'a GlobalMapModel,
        gm2: &'a GlobalMapModel,
        spec: &BiFocusSpectrum,
        k: u32,
        m: usize,
    ) -> Result<Self> {
        const OP: &str = "raise_system";
        if k < 1 {
            return Err(Error::domain(OP, "k must be >= 1"));
        }
        let n = gm1.order_cap;
        if gm2.order_cap != n {
            return Err(Error::precondition(OP, "models of different order"));
        }
        if m > n + 1 {
            return Err(Error::precondition(OP, "suborder out of range"));
        }
        let kf = k as f64;
        let nf = n as f64;
        let ll = math::ln(spec.lambda);
        let lg = math::ln(spec.gamma);
        let log_lambda_k = kf * ll;
        let log_gamma_k = kf * lg;
        let log_sigma_mu = (kf * ll - kf * (nf + 1.0) * lg) / (nf + 2.0);
        let log_sigma_p = (kf * (nf + 1.0) * ll - kf * lg) / (nf + 2.0);
        let lambda_k = math::exp(log_lambda_k);
        if lambda_k < UNDERFLOW {
            return Err(Error::DegenerateK {
                k,
                detail: "lambda^k underflows".into(),
            });
        }
        let tau = math::exp(log_gamma_k + log_sigma_mu);
        let rho = math::exp((nf + 1.0) * (log_gamma_k + log_sigma_mu));
        let rot = spec.stable_rotation(k);
        let a34r = math::mat_mul(gm2.a34(), rot);
        let x0 = math::mat_vec(a34r, gm1.x_plus);
        let x_lin_raw = math::mat_mul(a34r, gm1.b12());
        let x_lin = x_lin_raw.map(|row| row.map(|v| lambda_k * v));
        let r = spec.unstable_rotation(k);
        let mut lead1 = (vec![0.0; n + 2], vec![0.0; n + 2]);
        for i in 0..n + 2 {
            let v = math::mat_vec(r, [gm1.lead_a[i], gm1.lead_b[i]]);
            lead1.0[i] = math::scale_log(v[0], log_gamma_k);
            lead1.1[i] = math::scale_log(v[1], log_gamma_k);
            if !lead1.0[i].is_finite() || !lead1.1[i].is_finite() {
                return Err(Error::DegenerateK {
                    k,
                    detail: "gamma^k times the lead overflows".into(),
                });
            }
        }
        Ok(Self {
            gm2,
            k,
            n,
            m,
            lambda_k,
            log_lambda_k,
            log_gamma_k,
            log_sigma_mu,
            log_sigma_p,
            tau,
            rho,
            x_const: [lambda_k * x0[0], lambda_k * x0[1]],
            x_lin,
            lead1,
        })
    }

    /// Composite jet of cap `n + 2` for rescaled parameters.
    fn composite(&self, big_m: &Jet2, big_n: &Jet2, p: [f64; 3], q: [f64; 3]) -> JetPair {
        let (n, m) = (self.n, self.m);
        let cap = n + 2;
        let inner = |params: &Jet2, lead: &[f64]| {
            Jet2::from_fn(cap, |j, i| match j {
                0 => 0.0,
                j if j <= n => self.tau * params.coeff(j, i),
                j if j == n + 1 && i < m => self.tau * params.coeff(j, i),
                j if j == n + 1 => lead[i],
                _ => 0.0,
            })
        };
        let mut w1 = inner(big_m, &self.lead1.0);
        let mut w2 = inner(big_n, &self.lead1.1);
        // Pinned entries: mubar_{1,1} = nubar_{1,0} = 0.
        w1.set_coeff(1, 1, 0.0);
        w2.set_coeff(1, 0, 0.0);
        let mut pow1 = vec![Jet2::one(cap)];
        let mut pow2 = vec![Jet2::one(cap)];
        for e in 1..=n + 1 {
            let next1 = pow1[e - 1].mul(&w1).expect("equal caps");
            let next2 = pow2[e - 1].mul(&w2).expect("equal caps");
            pow1.push(next1);
            pow2.push(next2);
        }
        let sigma_p = math::exp(self.log_sigma_p);
        let component = |c: usize, coeffs: [f64; 3], lead2: &[f64]| {
            let mut out = Jet2::zero(cap);
            out.set_coeff(0, 0, self.x_const[c] + self.lambda_k * coeffs[0]);
            out.set_coeff(1, 0, self.x_lin[c][0]);
            out.set_coeff(1, 1, self.x_lin[c][1]);
            out.axpy(sigma_p * coeffs[1], &w1).expect("equal caps");
            out.axpy(sigma_p * coeffs[2], &w2).expect("equal caps");
            for (i, &lead) in lead2.iter().enumerate().skip(m) {
                if lead != 0.0 {
                    let term = pow1[n + 1 - i].mul(&pow2[i]).expect("equal caps");
                    out.axpy(lead, &term).expect("equal caps");
                }
            }
            out
        };
        JetPair {
            y1: component(0, p, &self.gm2.lead_a),
            y2: component(1, q, &self.gm2.lead_b),
        }
    }

    /// Targeted monomials in row order: degrees `0..=n`, then `(n+1, i)` for `i <= m`.
    fn target_monomials(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = crate::jets::monomials(self.n).collect();
        out.extend((0..=self.m).map(|i| (self.n + 1, i)));
        out
    }

    fn unknown_count(&self) -> usize {
        let (n, m) = (self.n, self.m);
        (n + 1) * (n + 2) + 2 + 2 * m
    }

    /// Unknown vector layout: `M10, N11`, then `(M, N)_{j,i}` for degrees
    /// `2..=n`, then `(M, N)_{n+1,i}` for `i < m`, then
    /// `P00, Q00, P10, P11, Q10, Q11`.
    fn free_monomials(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 2..=self.n {
            for i in 0..=j {
                out.push((j, i));
            }
        }
        out.extend((0..self.m).map(|i| (self.n + 1, i)));
        out
    }

    fn pack(&self, sol: &RaiseSolution) -> Vec<f64> {
        let mut z = vec![sol.big_m.coeff(1, 0), sol.big_n.coeff(1, 1)];
        for (j, i) in self.free_monomials() {
            z.push(sol.big_m.coeff(j, i));
            z.push(sol.big_n.coeff(j, i));
        }
        z.extend([sol.p[0], sol.q[0], sol.p[1], sol.p[2], sol.q[1], sol.q[2]]);
        z
    }

    fn unpack(&self, z: &[f64]) -> (Jet2, Jet2, [f64; 3], [f64; 3]) {
        let cap = self.n + 1;
        let mut big_m = Jet2::zero(cap);
        let mut big_n = Jet2::zero(cap);
        big_m.set_coeff(0, 0, self.pinned_constant(0));
        big_n.set_coeff(0, 0, self.pinned_constant(1));
        big_m.set_coeff(1, 0, z[0]);
        big_n.set_coeff(1, 1, z[1]);
        let free = self.free_monomials();
        for (idx, (j, i)) in free.iter().enumerate() {
            big_m.set_coeff(*j, *i, z[2 + 2 * idx]);
            big_n.set_coeff(*j, *i, z[3 + 2 * idx]);
        }
        let t = 2 + 2 * free.len();
        let p = [z[t], z[t + 2], z[t + 3]];
        let q = [z[t + 1], z[t + 4], z[t + 5]];
        (big_m, big_n, p, q)
    }

    /// `mubar_{0,0} = gamma^-k yhat_minus_1`, expressed in rescaled units.
    fn pinned_constant(&self, c: usize) -> f64 {
        math::scale_log(self.gm2.y_minus[c], -self.log_gamma_k - self.log_sigma_mu)
    }

    /// Per-row scales turning composite coefficients into order-one residuals.
    fn row_scales(&self, closed: &ClosedForm) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let s_lin = self
            .x_lin
            .iter()
            .flatten()
            .chain(&self.x_const)
            .fold(0.0f64, |a, v| a.max(math::abs(*v)))
            / self.lambda_k;
        let s_lin = s_lin.max(UNDERFLOW);
        let lead_scale = self.natural_lead_scale(closed).max(UNDERFLOW);
        self.target_monomials()
            .iter()
            .flat_map(|&(j, i)| {
                let s = if j == n + 1 && i == m {
                    self.rho * lead_scale
                } else {
                    self.lambda_k * s_lin
                };
                [s, s]
            })
            .collect()
    }

    /// Magnitude of the terms that must cancel at the suborder, rescaled.
    fn natural_lead_scale(&self, closed: &ClosedForm) -> f64 {
        let (n, m) = (self.n, self.m);
        let mono = math::abs(math::powi(closed.m10, n + 1 - m) * math::powi(closed.n11, m));
        let at = self.lead1.0[m] * math::exp(-self.log_gamma_k);
        let bt = self.lead1.1[m] * math::exp(-self.log_gamma_k);
        let d = math::abs(self.gm2.lead_a[m]).max(math::abs(self.gm2.lead_b[m]));
        let p_term = math::abs(closed.p[1] * at) + math::abs(closed.p[2] * bt);
        let q_term = math::abs(closed.q[1] * at) + math::abs(closed.q[2] * bt);
        (d * mono).max(p_term).max(q_term)
    }

    fn residual_vector(&self, z: &[f64], scales: &[f64]) -> Vec<f64> {
        let (big_m, big_n, p, q) = self.unpack(z);
        let jp = self.composite(&big_m, &big_n, p, q);
        self.target_monomials()
            .iter()
            .flat_map(|&(j, i)| [jp.y1.coeff(j, i), jp.y2.coeff(j, i)])
            .zip(scales)
            .map(|(v, s)| v / s)
            .collect()
    }

    fn solution(&self, z: &[f64], residual: f64, iterations: usize) -> Result<RaiseSolution> {
        let (big_m, big_n, p, q) = self.unpack(z);
        let unscaled = self.unscale(&big_m, &big_n, p, q)?;
        Ok(RaiseSolution {
            k: self.k,
            n: self.n,
            m: self.m,
            big_m,
            big_n,
            p,
            q,
            residual,
            iterations,
            unscaled,
        })
    }

    fn unscale(&self, big_m: &Jet2, big_n: &Jet2, p: [f64; 3], q: [f64; 3]) -> Result<UnscaledParams> {
        let k = self.k;
        let check = |v: f64| -> Result<f64> {
            if v.is_finite() && (v == 0.0 || math::abs(v) >= UNDERFLOW) {
                Ok(v)
            } else {
                Err(Error::DegenerateK {
                    k,
                    detail: "unscaled parameter leaves the double range".into(),
                })
            }
        };
        let jet = |params: &Jet2, c: usize| -> Result<Jet2> {
            let mut out = Jet2::zero(params.cap());
            for (j, i) in crate::jets::monomials(params.cap()) {
                let v = if j == 0 {
                    math::scale_log(self.gm2.y_minus[c], -self.log_gamma_k)
                } else {
                    math::scale_log(params.coeff(j, i), self.log_sigma_mu)
                };
                out.set_coeff(j, i, check(v)?);
            }
            Ok(out)
        };
        let lin = |vals: [f64; 3]| -> Result<[f64; 3]> {
            Ok([
                check(math::scale_log(vals[0], self.log_lambda_k))?,
                check(math::scale_log(vals[1], self.log_sigma_p))?,
                check(math::scale_log(vals[2], self.log_sigma_p))?,
            ])
        };
        Ok(UnscaledParams {
            mu_bar: jet(big_m, 0)?,
            nu_bar: jet(big_n, 1)?,
            p: lin(p)?,
            q: lin(q)?,
        })
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(math::abs(*x)))
}

/// Closed-form starting point at suborder `m`, extra parameters at zero.
///
/// Uses the cancellation constants (see [`RotatedLead::cancellation`]) and the
/// `D` or `E` line of `gm2`, whichever is non-zero.
pub fn initial_solution(
    gm1: &GlobalMapModel,
    gm2: &GlobalMapModel,
    spec: &BiFocusSpectrum,
    k: u32,
    m: usize,
) -> Result<RaiseSolution> {
    let sys = RaiseSystem::new(gm1, gm2, spec, k, m)?;
    let rl = rotated_lead(gm1, gm2, spec, k)?.cancellation();
    let closed = solve_raise_closed_form(&rl, gm2.lead_a[m], gm2.lead_b[m], sys.n, m)?;
    let mut z = vec![0.0; sys.unknown_count()];
    z[0] = closed.m10;
    z[1] = closed.n11;
    let t = z.len() - 6;
    z[t..].copy_from_slice(&[closed.p[0], closed.q[0], closed.p[1], closed.p[2], closed.q[1], closed.q[2]]);
    let scales = sys.row_scales(&closed);
    let residual = max_abs(&sys.residual_vector(&z, &scales));
    sys.solution(&z, residual, 0)
}

/// The composite `T1hat o T0^k o T1` restricted to `(Y1, Y2)`, cap `n + 2`.
pub fn compose_new_global(
    gm1: &GlobalMapModel,
    spec: &BiFocusSpectrum,
    k: u32,
    gm2: &GlobalMapModel,
    sol: &RaiseSolution,
) -> Result<JetPair> {
    check_solution_shape(gm1, k, sol)?;
    let sys = RaiseSystem::new(gm1, gm2, spec, k, sol.m)?;
    Ok(sys.composite(&sol.big_m, &sol.big_n, sol.p, sol.q))
}

fn check_solution_shape(gm1: &GlobalMapModel, k: u32, sol: &RaiseSolution) -> Result<()> {
    let n = gm1.order_cap;
    if sol.n != n || sol.big_m.cap() != n + 1 || sol.big_n.cap() != n + 1 || sol.k != k {
        return Err(Error::contract(
            "compose_new_global",
            "solution shape does not match the models and k",
        ));
    }
    Ok(())
}

/// Newton iteration on the square system, forward-difference Jacobian.
pub fn newton_polish(
    gm1: &GlobalMapModel,
    spec: &BiFocusSpectrum,
    k: u32,
    gm2: &GlobalMapModel,
    sol: &RaiseSolution,
) -> Result<RaiseSolution> {
    const OP: &str = "newton_polish";
    check_solution_shape(gm1, k, sol)?;
    let sys = RaiseSystem::new(gm1, gm2, spec, k, sol.m)?;
    let rl = rotated_lead(gm1, gm2, spec, k)?.cancellation();
    let closed = solve_raise_closed_form(&rl, gm2.lead_a[sol.m], gm2.lead_b[sol.m], sys.n, sol.m)
        .unwrap_or(ClosedForm {
            m10: sol.big_m.coeff(1, 0),
            n11: sol.big_n.coeff(1, 1),
            p: sol.p,
            q: sol.q,
        });
    let scales = sys.row_scales(&closed);
    let mut z = sys.pack(sol);
    let mut f = sys.residual_vector(&z, &scales);
    let mut res = max_abs(&f);
    if !res.is_finite() {
        return Err(Error::NonFinite(OP));
    }
    let mut best = (z.clone(), res);
    let mut rises = 0;
    let mut iterations = 0;
    let dim = z.len();
    while res > NEWTON_TOL && iterations < NEWTON_MAX_ITER {
        let mut jac = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let h = 1e-7 * math::abs(z[col]).max(1.0);
            let mut zp = z.clone();
            zp[col] += h;
            let fp = sys.residual_vector(&zp, &scales);
            for row in 0..dim {
                jac[(row, col)] = (fp[row] - f[row]) / h;
            }
        }
        let rhs = DVector::from_iterator(dim, f.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs).ok_or(Error::Convergence {
            op: OP,
            iterations,
            residual: res,
        })?;
        for (zi, si) in z.iter_mut().zip(step.iter()) {
            *zi += si;
        }
        iterations += 1;
        f = sys.residual_vector(&z, &scales);
        let next = max_abs(&f);
        if !next.is_finite() {
            return Err(divergence(&sys, &best, iterations));
        }
        if next > res {
            rises += 1;
            if rises >= 5 {
                return Err(divergence(&sys, &best, iterations));
            }
        } else {
            rises = 0;
        }
        res = next;
        if res < best.1 {
            best = (z.clone(), res);
        }
    }
    if best.1 > NEWTON_TOL {
        return Err(Error::Convergence {
            op: OP,
            iterations,
            residual: best.1,
        });
    }
    // One extra sweep when it helps: the pinning split later compares
    // against these residues.
    if iterations > 0 {
        if let Some(better) = extra_sweep(&sys, &best.0, &scales) {
            if better.1 < best.1 {
                best = better;
            }
        }
    }
    sys.solution(&best.0, best.1, iterations)
}

fn extra_sweep(sys: &RaiseSystem<'_>, z: &[f64], scales: &[f64]) -> Option<(Vec<f64>, f64)> {
    let dim = z.len();
    let f = sys.residual_vector(z, scales);
    let mut jac = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let h = 1e-7 * math::abs(z[col]).max(1.0);
        let mut zp = z.to_vec();
        zp[col] += h;
        let fp = sys.residual_vector(&zp, scales);
        for row in 0..dim {
            jac[(row, col)] = (fp[row] - f[row]) / h;
        }
    }
    let rhs = DVector::from_iterator(dim, f.iter().map(|v| -v));
    let step = jac.lu().solve(&rhs)?;
    let next: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
    let res = max_abs(&sys.residual_vector(&next, scales));
    res.is_finite().then_some((next, res))
}

fn divergence(sys: &RaiseSystem<'_>, best: &(Vec<f64>, f64), iterations: usize) -> Error {
    match sys.solution(&best.0, best.1, iterations) {
        Ok(sol) => Error::Divergence {
            iterations,
            best_residual: best.1,
            best: Box::new(sol),
        },
        Err(e) => e,
    }
}

/// Diagnostics of one successful [`raise_suborder`].
#[derive(Debug, Clone, PartialEq)]
pub struct RaiseOutcome {
    pub model: GlobalMapModel,
    pub index: TangencyIndex,
    pub k: u32,
    pub residual_pre: f64,
    pub residual_post: f64,
    /// Whether the lead had to be pinned because the composite overshot.
    pub pinned: bool,
    pub solution: RaiseSolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RaiseConfig {
    pub k_min: u32,
    pub k_max: u32,
}

impl Default for RaiseConfig {
    fn default() -> Self {
        Self {
            k_min: DEFAULT_K_RANGE.0,
            k_max: DEFAULT_K_RANGE.1,
        }
    }
}

/// Tangency index of a model's tangent jet at the default tolerance.
pub fn model_index(gm: &GlobalMapModel) -> Result<TangencyIndex> {
    tangency_index(&global_tangent_jet(gm), DEFAULT_TOL)
}

fn require_generic(gm: &GlobalMapModel, op: &'static str) -> Result<()> {
    gm.check()?;
    let report = validate_genericity(gm);
    if !report.pass() {
        return Err(Error::precondition(op, format!("model fails genericity: {report:?}")));
    }
    Ok(())
}

/// Raises the index of a pair of equal-index tangencies by one step.
///
/// Uses the smallest admissible `k` whose closed form has a real root.
pub fn raise_suborder(
    gm1: &GlobalMapModel,
    gm2: &GlobalMapModel,
    spec: &BiFocusSpectrum,
    cfg: RaiseConfig,
) -> Result<RaiseOutcome> {
    const OP: &str = "raise_suborder";
    require_generic(gm1, OP)?;
    require_generic(gm2, OP)?;
    let i1 = model_index(gm1)?;
    let i2 = model_index(gm2)?;
    if i1 != i2 {
        return Err(Error::precondition(OP, format!("indices differ: {i1} vs {i2}")));
    }
    let (n, m) = match i1 {
        TangencyIndex::Index { n, m } if n == gm1.order_cap => (n, m),
        other => {
            return Err(Error::precondition(
                OP,
                format!("model index {other} does not match its order_cap {}", gm1.order_cap),
            ))
        }
    };
    let target = i1.successor().expect("index is not flat");
    let seq = select_k_sequence(gm1, gm2, spec, m, usize::MAX, cfg.k_min, cfg.k_max)?;
    let mut last_flip = None;
    for k in seq.merged() {
        match raise_at(gm1, gm2, spec, k, n, m, target) {
            Err(e @ Error::BranchFlip { .. }) => last_flip = Some(e),
            other => return other,
        }
    }
    Err(last_flip.unwrap_or(Error::SearchExhausted {
        k_min: cfg.k_min,
        k_max: cfg.k_max,
        branch: "both branches",
        near_miss: None,
    }))
}

/// One raise at a fixed `k`: closed form, polish, composite, pin.
pub fn raise_at(
    gm1: &GlobalMapModel,
    gm2: &GlobalMapModel,
    spec: &BiFocusSpectrum,
    k: u32,
    n: usize,
    m: usize,
    target: TangencyIndex,
) -> Result<RaiseOutcome> {
    const OP: &str = "raise_suborder";
    let start = initial_solution(gm1, gm2, spec, k, m)?;
    let polished = newton_polish(gm1, spec, k, gm2, &start)?;
    let composite = snap_targets(&compose_new_global(gm1, spec, k, gm2, &polished)?, n, m);
    let target_n = target.order().expect("target is an index");
    let mut model = new_model(gm1, gm2, &composite, target_n)?;
    let mut index = model_index(&model)?;
    let mut pinned = false;
    if index < target {
        return Err(Error::Convergence {
            op: OP,
            iterations: polished.iterations,
            residual: polished.residual,
        });
    }
    if index > target {
        let sys = RaiseSystem::new(gm1, gm2, spec, k, m)?;
        let natural = math::abs(gm2.lead_a[m]).max(math::abs(gm2.lead_b[m]))
            * math::abs(math::powi(polished.big_m.coeff(1, 0), n + 1 - m))
            * math::abs(math::powi(polished.big_n.coeff(1, 1), m))
            * math::powi(sys.tau, n + 1);
        let block = max_abs(&model.lead_a).max(max_abs(&model.lead_b));
        let delta = PIN_FACTOR * block.max(natural);
        model = pin_lead(&model, target, delta)?;
        index = model_index(&model)?;
        pinned = true;
        if index != target {
            return Err(Error::Convergence {
                op: OP,
                iterations: polished.iterations,
                residual: polished.residual,
            });
        }
    }
    Ok(RaiseOutcome {
        model,
        index,
        k,
        residual_pre: start.residual,
        residual_post: polished.residual,
        pinned,
        solution: polished,
    })
}

/// Zeroes the coefficients the solve cancelled.
///
/// Newton leaves them at rounding level. When everything up to the jet cap
/// cancels, those residues would otherwise be read as the leading terms.
pub fn snap_targets(composite: &JetPair, n: usize, m: usize) -> JetPair {
    let mut out = composite.clone();
    let targeted = |j: usize, i: usize| j <= n || (j == n + 1 && i <= m);
    for (j, i) in crate::jets::monomials(out.cap()).filter(|&(j, i)| targeted(j, i)) {
        out.y1.set_coeff(j, i, 0.0);
        out.y2.set_coeff(j, i, 0.0);
    }
    out
}

/// Model of order `order` whose tangent jet is the composite truncated at
/// `order + 1`. Position and linear blocks follow the source of each row:
/// `x_plus`, `u_plus`, `a`, `c` and `d` come from `gm2`; `y_minus`,
/// `v_minus` and `b` come from `gm1`.
fn new_model(gm1: &GlobalMapModel, gm2: &GlobalMapModel, composite: &JetPair, order: usize) -> Result<GlobalMapModel> {
    if gm1.du() != gm2.du() || gm1.dv() != gm2.dv() {
        return Err(Error::precondition("raise_suborder", "u/v dimensions differ between models"));
    }
    let mut gm = gm2.clone();
    gm.y_minus = gm1.y_minus;
    gm.v_minus = gm1.v_minus.clone();
    gm.b = gm1.b.clone();
    let jet = composite.with_cap(order + 1);
    gm.order_cap = order;
    gm.mu = jet.y1.with_cap(order);
    gm.nu = jet.y2.with_cap(order);
    gm.lead_a = jet.y1.degree_block(order + 1).to_vec();
    gm.lead_b = jet.y2.degree_block(order + 1).to_vec();
    Ok(gm)
}

/// Sets the `y1` lead coefficient at the target monomial to `delta`.
///
/// This is the minimal split that stops an overshooting composite at the
/// index the raising step promises.
pub fn pin_lead(gm: &GlobalMapModel, target: TangencyIndex, delta: f64) -> Result<GlobalMapModel> {
    match target {
        TangencyIndex::Index { n, m } if n == gm.order_cap && m <= n + 1 => {
            let mut out = gm.clone();
            out.lead_a[m] = delta;
            Ok(out)
        }
        _ => Err(Error::contract("pin_lead", format!("target {target} does not fit the model"))),
    }
}

/// Models sharing one bi-focus orbit, each with its index.
#[derive(Debug, Clone, PartialEq)]
pub struct TangencyBag {
    pub spectrum: BiFocusSpectrum,
    pub items: Vec<(GlobalMapModel, TangencyIndex)>,
}

impl TangencyBag {
    /// Validates every model and attaches its detected index.
    pub fn new(spectrum: BiFocusSpectrum, models: Vec<GlobalMapModel>) -> Result<Self> {
        let items = models
            .into_iter()
            .map(|gm| {
                require_generic(&gm, "tangency_bag")?;
                let index = model_index(&gm)?;
                Ok((gm, index))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spectrum, items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Runs the independent pair raises of one round.
///
/// Implementations may run pairs concurrently but must return results in
/// pair order.
pub trait PairExecutor {
    fn run_pairs(
        &self,
        pairs: &[(GlobalMapModel, GlobalMapModel)],
        spec: &BiFocusSpectrum,
        cfg: RaiseConfig,
    ) -> Vec<Result<RaiseOutcome>>;
}

/// Runs pairs one after another.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl PairExecutor for Sequential {
    fn run_pairs(
        &self,
        pairs: &[(GlobalMapModel, GlobalMapModel)],
        spec: &BiFocusSpectrum,
        cfg: RaiseConfig,
    ) -> Vec<Result<RaiseOutcome>> {
        pairs
            .iter()
            .map(|(a, b)| raise_suborder(a, b, spec, cfg))
            .collect()
    }
}

/// One row of diagnostics per pair raise.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub round: usize,
    pub pair: usize,
    pub k: u32,
    pub residual_pre: f64,
    pub residual_post: f64,
    pub index: TangencyIndex,
    pub pinned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub model: GlobalMapModel,
    pub index: TangencyIndex,
    pub steps: Vec<StepRecord>,
}

fn run_rounds(
    mut models: Vec<GlobalMapModel>,
    spec: &BiFocusSpectrum,
    cfg: RaiseConfig,
    rounds: usize,
    exec: &dyn PairExecutor,
    steps: &mut Vec<StepRecord>,
) -> Result<GlobalMapModel> {
    for _ in 0..rounds {
        let round = steps.last().map_or(0, |s| s.round + 1);
        let pairs: Vec<_> = models
            .chunks_exact(2)
            .map(|pair| (pair[0].clone(), pair[1].clone()))
            .collect();
        let outcomes = exec.run_pairs(&pairs, spec, cfg);
        models = Vec::with_capacity(outcomes.len());
        for (pair, outcome) in outcomes.into_iter().enumerate() {
            let outcome = outcome?;
            steps.push(StepRecord {
                round,
                pair,
                k: outcome.k,
                residual_pre: outcome.residual_pre,
                residual_post: outcome.residual_post,
                index: outcome.index,
                pinned: outcome.pinned,
            });
            models.push(outcome.model);
        }
    }
    Ok(models.pop().expect("rounds leave one model"))
}

/// `2^(n+2)` tangencies of index `(n, 0)` to one of index `(n+1, 0)`.
pub fn raise_order(bag: &TangencyBag, cfg: RaiseConfig) -> Result<OrderReport> {
    raise_order_with(bag, cfg, &Sequential)
}

pub fn raise_order_with(bag: &TangencyBag, cfg: RaiseConfig, exec: &dyn PairExecutor) -> Result<OrderReport> {
    const OP: &str = "raise_order";
    let Some((_, first)) = bag.items.first() else {
        return Err(Error::contract(OP, "empty bag"));
    };
    let n = match first {
        TangencyIndex::Index { n, m: 0 } => *n,
        other => return Err(Error::contract(OP, format!("items must have index (n,0), found {other}"))),
    };
    if bag.items.iter().any(|(_, i)| *i != TangencyIndex::new(n, 0)) {
        return Err(Error::contract(OP, "items have unequal indices"));
    }
    let need = 1usize << (n + 2);
    if bag.len() != need {
        return Err(Error::contract(
            OP,
            format!("need 2^(n+2)={need} items of index ({n},0), got {}", bag.len()),
        ));
    }
    let models = bag.items.iter().map(|(gm, _)| gm.clone()).collect();
    let mut steps = Vec::new();
    let model = run_rounds(models, &bag.spectrum, cfg, n + 2, exec, &mut steps)?;
    let index = model_index(&model)?;
    Ok(OrderReport { model, index, steps })
}

/// `2^((N-1)(N+4)/2)`, the number of index-(1,0) tangencies needed for order `N`.
pub fn required_count(big_n: u32) -> Result<u128> {
    if big_n < 1 {
        return Err(Error::domain("required_count", "N must be >= 1"));
    }
    let n = big_n as u128;
    let exponent = (n - 1) * (n + 4) / 2;
    if exponent >= 128 {
        return Err(Error::OutOfRange {
            op: "required_count",
            detail: format!("2^{exponent} exceeds 128 bits"),
        });
    }
    Ok(1u128 << exponent)
}

/// Index-(1,0) tangencies to one of index `(N, 0)` through `N - 1` order raises.
#[allow(non_snake_case)]
pub fn build_order_N(bag: &TangencyBag, big_n: u32, cfg: RaiseConfig) -> Result<OrderReport> {
    build_order_n_with(bag, big_n, cfg, &Sequential)
}

pub fn build_order_n_with(
    bag: &TangencyBag,
    big_n: u32,
    cfg: RaiseConfig,
    exec: &dyn PairExecutor,
) -> Result<OrderReport> {
    const OP: &str = "build_order_N";
    let need = required_count(big_n)?;
    if bag.len() as u128 != need {
        return Err(Error::contract(
            OP,
            format!("required_count({big_n})={need}, bag has {}", bag.len()),
        ));
    }
    if bag.items.iter().any(|(_, i)| *i != TangencyIndex::new(1, 0)) {
        return Err(Error::contract(OP, "all items must have index (1,0)"));
    }
    let mut models: Vec<GlobalMapModel> = bag.items.iter().map(|(gm, _)| gm.clone()).collect();
    let mut steps = Vec::new();
    for n in 1..big_n as usize {
        let group = 1usize << (n + 2);
        let mut next = Vec::with_capacity(models.len() / group);
        for chunk in models.chunks_exact(group) {
            next.push(run_rounds(chunk.to_vec(), &bag.spectrum, cfg, n + 2, exec, &mut steps)?);
        }
        models = next;
    }
    let model = models.pop().expect("one model remains");
    let index = model_index(&model)?;
    Ok(OrderReport { model, index, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_lead(s: [f64; 4]) -> RotatedLead {
        RotatedLead {
            k: 1,
            a_tilde: vec![1.0, 0.0, 0.0],
            b_tilde: vec![1.0, 0.0, 0.0],
            s,
        }
    }

    #[test]
    fn screen_accepts_defaults_and_rejects_commensurate_angles() {
        rational_independence_screen(1.0, core::f64::consts::SQRT_2).unwrap();
        assert!(rational_independence_screen(core::f64::consts::PI, 1.0).is_err());
        assert!(rational_independence_screen(1.0, 2.0).is_err());
    }

    #[test]
    fn reference_closed_form() {
        let sol = solve_raise_closed_form(&reference_lead([1.0, 0.0, 0.0, 1.0]), 1.0, 1.0, 1, 0).unwrap();
        assert_eq!((sol.m10, sol.n11), (-1.0, -1.0));
        assert_eq!(sol.p, [0.0, -1.0, 0.0]);
        assert_eq!(sol.q, [0.0, 0.0, -1.0]);
    }

    #[test]
    fn opposite_e_line_gives_other_root() {
        let sol = solve_raise_closed_form(&reference_lead([1.0, 0.0, 0.0, 1.0]), 1.0, -1.0, 1, 0).unwrap();
        assert_eq!((sol.m10, sol.n11), (-1.0, 1.0));
    }

    #[test]
    fn vanishing_denominator_is_a_precondition_error() {
        // S2 E - S4 D = 0 with S = (1, 1, 0, 1), D = E = 1.
        let err = solve_raise_closed_form(&reference_lead([1.0, 1.0, 0.0, 1.0]), 1.0, 1.0, 1, 0).unwrap_err();
        assert!(matches!(err, Error::Precondition { .. }));
    }

    #[test]
    fn zero_d_swaps_roles() {
        let rl = reference_lead([1.0, 0.3, -0.2, 1.0]);
        let sol = solve_raise_closed_form(&rl, 0.0, 1.0, 1, 0).unwrap();
        let [s1, s2, s3, s4] = rl.s;
        let (mm, nn) = (sol.m10, sol.n11);
        let e_line = mm * mm * mm * nn + s3 * nn + s4 * mm;
        let d_line = s1 * nn + s2 * mm;
        assert!(e_line.abs() < 1e-12 && d_line.abs() < 1e-12);
    }

    #[test]
    fn even_root_of_negative_radicand_flips_branch() {
        // n = 2 gives a fourth root; the reference data has radicand -1.
        let rl = RotatedLead {
            a_tilde: vec![1.0; 4],
            b_tilde: vec![1.0; 4],
            ..reference_lead([1.0, 0.0, 0.0, 1.0])
        };
        let err = solve_raise_closed_form(&rl, 1.0, 1.0, 2, 0).unwrap_err();
        assert!(matches!(err, Error::BranchFlip { degree: 4, .. }));
    }

    #[test]
    fn required_counts() {
        assert_eq!(required_count(1).unwrap(), 1);
        assert_eq!(required_count(2).unwrap(), 8);
        assert_eq!(required_count(3).unwrap(), 128);
        assert_eq!(required_count(4).unwrap(), 4096);
        assert!(required_count(0).is_err());
        assert!(required_count(20).is_err());
    }
}
