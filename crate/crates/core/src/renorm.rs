//! First-return maps `T_k = T1 o T0^k`, their rescaling to a `k`-independent
//! limit, and the approximation of polynomial disk maps by rescaled returns.
//!
//! With `Y = y_k - y_minus`, the zero-remainder model gives
//!
//! ```text
//! Ybar = gamma^k J(Y),   J = R(k psi) [G(Y) + lambda^k a34 R(k phi) x_plus] - gamma^-k y_minus,
//! ```
//!
//! where `G` is the tangent jet of the global map. The rescaling multiplies
//! the degree-`j` coefficient of `gamma^k J` by `gamma^(-k s (j - 1) / n)`
//! with `s = 1` or `s = 2`; the `(X, U, V)` chart carries an extra
//! `delta_k = k^(-1/2)`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jets::{monomials, tri_len, Jet2, JetPair};
use crate::math;
use crate::model::{global_tangent_jet, BiFocusSpectrum, GlobalMapModel, ROW_X1, ROW_X2};

/// Grid used by [`convergence_report`].
pub const REPORT_GRID: usize = 41;
/// Grid used by [`universal_approx`].
pub const FIT_GRID: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SchemeVariant {
    /// `Y ~ gamma^(-k/n)`: the lead block survives in the limit.
    OrderForm,
    /// `Y ~ gamma^(-2k/n)`: the limit is a free polynomial of degree `n`.
    FullPolynomialForm,
}

impl SchemeVariant {
    fn spread(self) -> f64 {
        match self {
            SchemeVariant::OrderForm => 1.0,
            SchemeVariant::FullPolynomialForm => 2.0,
        }
    }
}

/// A rescaling chart for order `n`, with `delta_k = k^(-1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RescalingScheme {
    pub variant: SchemeVariant,
    pub n: usize,
}

impl RescalingScheme {
    pub fn new(variant: SchemeVariant, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain("rescaling_scheme", "n must be >= 1"));
        }
        Ok(Self { variant, n })
    }

    pub fn delta(k: u32) -> f64 {
        1.0 / math::sqrt(k as f64)
    }

    /// `ln` of the factor taking the degree-`j` coefficient of `J` to the
    /// rescaled map, `k ln(gamma) (1 - s (j - 1) / n)`.
    pub fn log_factor(&self, spec: &BiFocusSpectrum, k: u32, j: usize) -> f64 {
        let s = self.variant.spread();
        k as f64 * math::ln(spec.gamma) * (1.0 - s * (j as f64 - 1.0) / self.n as f64)
    }
}

/// Linear part of the `(X, U, V)` rows of the first return.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxBlock {
    /// Rows `x1, x2, u.., v..`; columns `lambda^k a R(k phi)`, then
    /// `lambda_hat^k c`, then `gamma_hat^-k d`, then `b`.
    pub matrix: DMatrix<f64>,
    /// Columns holding `b`; these pick up `delta_k` under rescaling.
    pub y_columns: core::ops::Range<usize>,
    /// `(lambda gamma)^k |a34| + (lambda_hat gamma)^k |c34| + (gamma / gamma_hat)^k |d34|`:
    /// the coupling of `(X, U, V)` into `Ybar`, before the `1 / delta_k` factor.
    pub y_coupling: f64,
}

/// The `(Y1, Y2)` part of the first return map and its auxiliary rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstReturn {
    pub k: u32,
    pub n: usize,
    /// `J`, cap `n + 1`.
    pub j: JetPair,
    pub aux: AuxBlock,
}

impl FirstReturn {
    /// `Ybar = gamma^k J`.
    pub fn ybar(&self, spec: &BiFocusSpectrum) -> Result<JetPair> {
        let lg = self.k as f64 * math::ln(spec.gamma);
        let scale = |jet: &Jet2| -> Result<Jet2> {
            let out = Jet2::from_fn(jet.cap(), |j, i| math::scale_log(jet.coeff(j, i), lg));
            if out.coeffs().iter().all(|v| v.is_finite()) {
                Ok(out)
            } else {
                Err(Error::DegenerateK {
                    k: self.k,
                    detail: "gamma^k overflows".into(),
                })
            }
        };
        Ok(JetPair {
            y1: scale(&self.j.y1)?,
            y2: scale(&self.j.y2)?,
        })
    }
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |a, s| a.max(*s))
}

fn check_k(k: u32, spec: &BiFocusSpectrum) -> Result<()> {
    if k < 1 {
        return Err(Error::domain("first_return_jet", "k must be >= 1"));
    }
    let log_inv = -(k as f64) * math::ln(spec.gamma);
    if log_inv < math::ln(1e-300) {
        return Err(Error::DegenerateK {
            k,
            detail: "gamma^-k underflows".into(),
        });
    }
    Ok(())
}

/// `J` and the auxiliary rows of `T_k` in the shifted variables.
pub fn first_return_jet(gm: &GlobalMapModel, spec: &BiFocusSpectrum, k: u32) -> Result<FirstReturn> {
    gm.check()?;
    check_k(k, spec)?;
    let n = gm.order_cap;
    let kf = k as f64;
    let lambda_k = math::pow(spec.lambda, kf);
    let gamma_inv_k = math::pow(spec.gamma, -kf);
    let rot_s = spec.stable_rotation(k);
    let rot_u = spec.unstable_rotation(k);

    let drift = math::mat_vec(math::mat_mul(gm.a34(), rot_s), gm.x_plus);
    let mut g = global_tangent_jet(gm);
    g.y1.set_coeff(0, 0, g.y1.coeff(0, 0) + lambda_k * drift[0]);
    g.y2.set_coeff(0, 0, g.y2.coeff(0, 0) + lambda_k * drift[1]);
    let mut j = g.transform(rot_u);
    j.y1.set_coeff(0, 0, j.y1.coeff(0, 0) - gamma_inv_k * gm.y_minus[0]);
    j.y2.set_coeff(0, 0, j.y2.coeff(0, 0) - gamma_inv_k * gm.y_minus[1]);

    let (du, dv) = (gm.du(), gm.dv());
    let rows: Vec<usize> = [ROW_X1, ROW_X2]
        .into_iter()
        .chain((0..du).map(|i| gm.row_u(i)))
        .chain((0..dv).map(|i| gm.row_v(i)))
        .collect();
    let lambda_hat_k = math::pow(spec.lambda_hat, kf);
    let gamma_hat_inv_k = math::pow(spec.gamma_hat, -kf);
    let cols = 2 + du + dv + 2;
    let mut matrix = DMatrix::zeros(rows.len(), cols);
    for (r, &row) in rows.iter().enumerate() {
        let ar = math::mat_vec([[rot_s[0][0], rot_s[1][0]], [rot_s[0][1], rot_s[1][1]]], gm.a[row]);
        matrix[(r, 0)] = lambda_k * ar[0];
        matrix[(r, 1)] = lambda_k * ar[1];
        for c in 0..du {
            matrix[(r, 2 + c)] = lambda_hat_k * gm.c[row][c];
        }
        for c in 0..dv {
            matrix[(r, 2 + du + c)] = gamma_hat_inv_k * gm.d[row][c];
        }
        // `b` is stored without the y rows.
        let b_row = if row < 2 { row } else { row - 2 };
        matrix[(r, 2 + du + dv)] = gm.b[b_row][0];
        matrix[(r, 3 + du + dv)] = gm.b[b_row][1];
    }
    let y_rows = |block: &Vec<Vec<f64>>| {
        DMatrix::from_fn(2, block[0].len(), |r, c| block[2 + r][c])
    };
    let a34 = DMatrix::from_fn(2, 2, |r, c| gm.a34()[r][c]);
    let y_coupling = math::pow(spec.lambda * spec.gamma, kf) * spectral_norm(&a34)
        + math::pow(spec.lambda_hat * spec.gamma, kf) * spectral_norm(&y_rows(&gm.c))
        + math::pow(spec.gamma / spec.gamma_hat, kf) * spectral_norm(&y_rows(&gm.d));
    Ok(FirstReturn {
        k,
        n,
        j,
        aux: AuxBlock {
            matrix,
            y_columns: 2 + du + dv..cols,
            y_coupling,
        },
    })
}

/// A first return expressed in a rescaling chart.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormalizedMap {
    pub k: u32,
    pub scheme: RescalingScheme,
    /// Rescaled `(Ybar1, Ybar2)`, cap `n + 1`.
    pub jet: JetPair,
    /// Spectral norm of the rescaled `(Xbar, Ubar, V)` rows over the unit ball.
    pub aux_norm: f64,
    /// Largest change of the rescaled `Ybar` as `(X, U, V)` ranges over the unit ball.
    pub y_coupling: f64,
}

/// Coefficientwise rescaling of `fr` into `scheme`.
pub fn rescale(fr: &FirstReturn, spec: &BiFocusSpectrum, scheme: RescalingScheme) -> Result<RenormalizedMap> {
    if scheme.n != fr.n {
        return Err(Error::precondition(
            "rescale",
            alloc::format!("scheme order {} differs from the tangency order {}", scheme.n, fr.n),
        ));
    }
    let k = fr.k;
    let cap = fr.j.cap();
    let mut bad = false;
    let mut scale = |jet: &Jet2| {
        let out = Jet2::from_fn(cap, |j, i| {
            math::scale_log(jet.coeff(j, i), scheme.log_factor(spec, k, j))
        });
        bad |= out.coeffs().iter().any(|v| !v.is_finite());
        out
    };
    let jet = JetPair {
        y1: scale(&fr.j.y1),
        y2: scale(&fr.j.y2),
    };
    if bad {
        return Err(Error::DegenerateK {
            k,
            detail: "rescaling factor overflows".into(),
        });
    }
    let delta = RescalingScheme::delta(k);
    let mut aux = fr.aux.matrix.clone();
    for c in fr.aux.y_columns.clone() {
        aux.column_mut(c).scale_mut(delta);
    }
    Ok(RenormalizedMap {
        k,
        scheme,
        jet,
        aux_norm: spectral_norm(&aux),
        y_coupling: fr.aux.y_coupling / delta,
    })
}

/// The `k -> infinity` limit of the rescaled first return.
///
/// `m` and `n` hold the coefficients of degree `0..=scheme.n`; the lead
/// block is used by [`SchemeVariant::OrderForm`] only.
pub fn limit_form(
    scheme: RescalingScheme,
    m: &Jet2,
    n: &Jet2,
    a_tilde: &[f64],
    b_tilde: &[f64],
) -> Result<JetPair> {
    let order = scheme.n;
    if m.cap() != order || n.cap() != order || a_tilde.len() != order + 2 || b_tilde.len() != order + 2 {
        return Err(Error::contract("limit_form", "arrays are not shaped for the scheme order"));
    }
    let keep_lead = scheme.variant == SchemeVariant::OrderForm;
    let build = |low: &Jet2, lead: &[f64]| {
        Jet2::from_fn(order + 1, |j, i| match j {
            j if j <= order => low.coeff(j, i),
            _ if keep_lead => lead[i],
            _ => 0.0,
        })
    };
    Ok(JetPair {
        y1: build(m, a_tilde),
        y2: build(n, b_tilde),
    })
}

/// `R(k psi) (A_i, B_i)`.
pub fn rotated_lead_block(gm: &GlobalMapModel, spec: &BiFocusSpectrum, k: u32) -> (Vec<f64>, Vec<f64>) {
    let r = spec.unstable_rotation(k);
    gm.lead_a
        .iter()
        .zip(&gm.lead_b)
        .map(|(&a, &b)| {
            let v = math::mat_vec(r, [a, b]);
            (v[0], v[1])
        })
        .unzip()
}

/// Points of a `size x size` grid on `[-1, 1]^2` that lie in the closed unit disk.
pub fn unit_disk_grid(size: usize) -> Vec<(f64, f64)> {
    let step = if size > 1 { 2.0 / (size - 1) as f64 } else { 0.0 };
    let mut out = Vec::new();
    for a in 0..size {
        for b in 0..size {
            let (y1, y2) = (-1.0 + a as f64 * step, -1.0 + b as f64 * step);
            if y1 * y1 + y2 * y2 <= 1.0 + 1e-12 {
                out.push((y1, y2));
            }
        }
    }
    out
}

fn sup_difference(grid: &[(f64, f64)], f: impl Fn(f64, f64) -> (f64, f64)) -> f64 {
    grid.iter().fold(0.0f64, |acc, &(y1, y2)| {
        let (d1, d2) = f(y1, y2);
        acc.max(math::norm2([d1, d2]))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub k: u32,
    pub sup_error: f64,
    pub aux_norm: f64,
}

/// Distance between the rescaled first return and its limit for each `k`.
///
/// The limit's free coefficients are the rescaled coefficients themselves
/// (they are the new parameters), so the error is the vanishing remainder:
/// the rescaled lead block under the full polynomial chart, plus the
/// coupling of `(X, U, V)` into `Ybar` over the unit ball.
pub fn convergence_report(
    gm: &GlobalMapModel,
    spec: &BiFocusSpectrum,
    scheme: RescalingScheme,
    k_list: &[u32],
) -> Result<Vec<ConvergenceRow>> {
    const OP: &str = "convergence_report";
    if k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::contract(OP, "k_list must be strictly increasing"));
    }
    if scheme.n != gm.order_cap {
        return Err(Error::contract(OP, "scheme order differs from the model order"));
    }
    let grid = unit_disk_grid(REPORT_GRID);
    k_list
        .iter()
        .map(|&k| {
            let fr = first_return_jet(gm, spec, k)?;
            let rm = rescale(&fr, spec, scheme)?;
            let (at, bt) = rotated_lead_block(gm, spec, k);
            let limit = limit_form(
                scheme,
                &rm.jet.y1.with_cap(scheme.n),
                &rm.jet.y2.with_cap(scheme.n),
                &at,
                &bt,
            )?;
            // Subtract coefficients first: the low-degree terms are large and equal.
            let gap = JetPair {
                y1: rm.jet.y1.sub(&limit.y1)?,
                y2: rm.jet.y2.sub(&limit.y2)?,
            };
            let deviation = sup_difference(&grid, |y1, y2| gap.eval(y1, y2));
            Ok(ConvergenceRow {
                k,
                sup_error: deviation + rm.y_coupling,
                aux_norm: rm.aux_norm,
            })
        })
        .collect()
}

/// A least-squares polynomial pair of degree `n` on a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    pub y1: Jet2,
    pub y2: Jet2,
    /// Largest residual norm over the points.
    pub sup_residual: f64,
}

/// Fits `target` on `points` by a degree-`n` pair, via SVD.
pub fn fit_polynomial(
    target: &dyn Fn(f64, f64) -> (f64, f64),
    points: &[(f64, f64)],
    n: usize,
) -> Result<PolyFit> {
    const OP: &str = "universal_approx";
    let cols = tri_len(n);
    let basis: Vec<(usize, usize)> = monomials(n).collect();
    let design = DMatrix::from_fn(points.len(), cols, |r, c| {
        let (j, i) = basis[c];
        let (y1, y2) = points[r];
        math::powi(y1, j - i) * math::powi(y2, i)
    });
    let mut values = DMatrix::zeros(points.len(), 2);
    for (r, &(y1, y2)) in points.iter().enumerate() {
        let (t1, t2) = target(y1, y2);
        if !(t1.is_finite() && t2.is_finite()) {
            return Err(Error::NonFinite(OP));
        }
        values[(r, 0)] = t1;
        values[(r, 1)] = t2;
    }
    let svd = design.svd(true, true);
    let s = &svd.singular_values;
    let s_max = s.iter().fold(0.0f64, |a, v| a.max(*v));
    let s_min = s.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if points.len() < cols || !(s_min > 1e-10 * s_max) {
        return Err(Error::IllPosed {
            op: OP,
            detail: alloc::format!("fit matrix is rank-deficient ({} points, {cols} monomials)", points.len()),
        });
    }
    let coef = svd
        .solve(&values, 0.0)
        .map_err(|e| Error::IllPosed { op: OP, detail: e.into() })?;
    let y1 = Jet2::from_coeffs(n, coef.column(0).iter().copied().collect())?;
    let y2 = Jet2::from_coeffs(n, coef.column(1).iter().copied().collect())?;
    let sup_residual = sup_difference(points, |a, b| {
        let (t1, t2) = target(a, b);
        (y1.eval(a, b) - t1, y2.eval(a, b) - t2)
    });
    Ok(PolyFit { y1, y2, sup_residual })
}

/// Outcome of [`universal_approx`].
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalFit {
    pub k: u32,
    /// Rescaled parameters in the full polynomial chart.
    pub m: Jet2,
    pub n: Jet2,
    pub fit_error: f64,
    pub total_error: f64,
    /// `gm` with `mu`, `nu` set so that its rescaled return realizes `(m, n)`.
    pub model: GlobalMapModel,
}

/// Realizes a degree-`n` fit of `target` as a rescaled first return of `gm`.
///
/// The fit gives `(M, N)`; inverting the full polynomial chart at `k` gives
/// the rotated `(mu~, nu~)`, and undoing the rotation and the constant drift
/// gives the model's `(mu, nu)`. The rebuilt return is then compared with the
/// target on the fitting grid.
pub fn universal_approx(
    target: &dyn Fn(f64, f64) -> (f64, f64),
    n: usize,
    gm: &GlobalMapModel,
    spec: &BiFocusSpectrum,
    k: u32,
) -> Result<UniversalFit> {
    const OP: &str = "universal_approx";
    if gm.order_cap != n {
        return Err(Error::contract(OP, "model order differs from n"));
    }
    gm.check()?;
    check_k(k, spec)?;
    let scheme = RescalingScheme::new(SchemeVariant::FullPolynomialForm, n)?;
    let grid = unit_disk_grid(FIT_GRID);
    let fit = fit_polynomial(target, &grid, n)?;

    let mut tilde = (Jet2::zero(n), Jet2::zero(n));
    for (j, i) in monomials(n) {
        let lf = -scheme.log_factor(spec, k, j);
        for (src, dst) in [(&fit.y1, &mut tilde.0), (&fit.y2, &mut tilde.1)] {
            let v = src.coeff(j, i);
            let scaled = math::scale_log(v, lf);
            if !scaled.is_finite() || (v != 0.0 && scaled == 0.0) {
                return Err(Error::DegenerateK {
                    k,
                    detail: "parameter recovery leaves the double range".into(),
                });
            }
            dst.set_coeff(j, i, scaled);
        }
    }
    let kf = k as f64;
    let lambda_k = math::pow(spec.lambda, kf);
    let gamma_inv_k = math::pow(spec.gamma, -kf);
    let drift = math::mat_vec(
        spec.unstable_rotation(k),
        math::mat_vec(math::mat_mul(gm.a34(), spec.stable_rotation(k)), gm.x_plus),
    );
    tilde.0.set_coeff(0, 0, tilde.0.coeff(0, 0) + gamma_inv_k * gm.y_minus[0] - lambda_k * drift[0]);
    tilde.1.set_coeff(0, 0, tilde.1.coeff(0, 0) + gamma_inv_k * gm.y_minus[1] - lambda_k * drift[1]);
    let unrotated = JetPair {
        y1: tilde.0,
        y2: tilde.1,
    }
    .transform(math::rotation(-(k as f64) * spec.psi));
    let mut model = gm.clone();
    model.mu = unrotated.y1;
    model.nu = unrotated.y2;

    let rm = rescale(&first_return_jet(&model, spec, k)?, spec, scheme)?;
    let total_error = sup_difference(&grid, |y1, y2| {
        let (r1, r2) = rm.jet.eval(y1, y2);
        let (t1, t2) = target(y1, y2);
        (r1 - t1, r2 - t2)
    });
    Ok(UniversalFit {
        k,
        m: fit.y1,
        n: fit.y2,
        fit_error: fit.sup_residual,
        total_error,
        model,
    })
}
