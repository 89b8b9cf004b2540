//! Order, suborder and index of a corank-2 tangency, and coefficient-level splitting.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jets::{monomials, tri_len, Jet2, JetPair};
use crate::math;
use crate::model::GlobalMapModel;

/// Default relative threshold separating zero from non-zero coefficients.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `Index { n, m }` orders lexicographically; `Flat` sits above every index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TangencyIndex {
    Index { n: usize, m: usize },
    /// Every coefficient up to the jet cap is below tolerance.
    Flat,
}

impl TangencyIndex {
    pub fn new(n: usize, m: usize) -> Self {
        TangencyIndex::Index { n, m }
    }

    pub fn order(&self) -> Option<usize> {
        match self {
            TangencyIndex::Index { n, .. } => Some(*n),
            TangencyIndex::Flat => None,
        }
    }

    pub fn suborder(&self) -> Option<usize> {
        match self {
            TangencyIndex::Index { m, .. } => Some(*m),
            TangencyIndex::Flat => None,
        }
    }

    /// `(n, m+1)` when `m <= n`, else `(n+1, 0)`.
    pub fn successor(&self) -> Option<Self> {
        match *self {
            TangencyIndex::Index { n, m } if m <= n => Some(Self::new(n, m + 1)),
            TangencyIndex::Index { n, .. } => Some(Self::new(n + 1, 0)),
            TangencyIndex::Flat => None,
        }
    }
}

impl core::fmt::Display for TangencyIndex {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TangencyIndex::Index { n, m } => write!(f, "({n},{m})"),
            TangencyIndex::Flat => write!(f, "flat"),
        }
    }
}

/// Reads off the index of the tangency encoded by `jp`.
///
/// Coefficients are divided by the largest one in the pair before being
/// compared with `tol`. A surviving constant term means the base point is
/// not a tangency; a surviving linear term means the order is zero, which
/// is not a corank-2 tangency either.
pub fn tangency_index(jp: &JetPair, tol: f64) -> Result<TangencyIndex> {
    const OP: &str = "tangency_index";
    if !(tol > 0.0) {
        return Err(Error::domain(OP, "tol must be positive"));
    }
    let scale = jp.max_abs();
    if scale == 0.0 {
        return Ok(TangencyIndex::Flat);
    }
    let survives = |j: usize, i: usize| {
        math::abs(jp.y1.coeff(j, i)) / scale > tol || math::abs(jp.y2.coeff(j, i)) / scale > tol
    };
    if survives(0, 0) {
        let constant = math::abs(jp.y1.coeff(0, 0)).max(math::abs(jp.y2.coeff(0, 0))) / scale;
        return Err(Error::NotATangency { constant });
    }
    for j in 1..=jp.cap() {
        if let Some(i) = (0..=j).find(|&i| survives(j, i)) {
            if j == 1 {
                return Err(Error::domain(
                    OP,
                    "linear terms survive: the tangent planes are not shared",
                ));
            }
            return Ok(TangencyIndex::new(j - 1, i));
        }
    }
    Ok(TangencyIndex::Flat)
}

/// Number of splitting functionals for order `n`, that is `n^2 + 3n + 2`.
pub fn splitting_count(n: usize) -> Result<usize> {
    if n < 1 {
        return Err(Error::domain("splitting_count", "n must be >= 1"));
    }
    Ok(n * n + 3 * n + 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplittingChart {
    pub n: usize,
    pub count: usize,
}

impl SplittingChart {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self {
            n,
            count: splitting_count(n)?,
        })
    }
}

/// Shifts `mu` by `dmu` and `nu` by `dnu`; everything else is copied.
pub fn apply_split(gm: &GlobalMapModel, dmu: &Jet2, dnu: &Jet2) -> Result<GlobalMapModel> {
    const OP: &str = "apply_split";
    let n = gm.order_cap;
    if dmu.cap() != n || dnu.cap() != n {
        return Err(Error::contract(
            OP,
            format!(
                "deltas must cover degrees 0..={n}, got caps {} and {}",
                dmu.cap(),
                dnu.cap()
            ),
        ));
    }
    let mut out = gm.clone();
    out.mu = gm.mu.add(dmu)?;
    out.nu = gm.nu.add(dnu)?;
    Ok(out)
}

/// Parameter families fed to [`split_family_rank`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitFamily {
    /// One parameter per functional: the deltas themselves.
    Canonical,
    /// Both components driven by the same parameters, `dmu = dnu`.
    Degenerate,
}

/// Numerical rank of `d(mu, nu) / d(eps)` at `eps = 0` for a family.
pub fn split_family_rank(n: usize, family: SplitFamily) -> Result<usize> {
    let chi = splitting_count(n)?;
    let half = tri_len(n);
    let mut base = GlobalMapModel::blank(n, 0, 0);
    base.lead_a[0] = 1.0;
    let coefficients = |eps: &[f64]| -> Result<Vec<f64>> {
        let (dmu, dnu) = match family {
            SplitFamily::Canonical => (
                Jet2::from_coeffs(n, eps[..half].to_vec())?,
                Jet2::from_coeffs(n, eps[half..].to_vec())?,
            ),
            SplitFamily::Degenerate => {
                let shared = Jet2::from_coeffs(n, eps[..half].to_vec())?;
                (shared.clone(), shared)
            }
        };
        let split = apply_split(&base, &dmu, &dnu)?;
        Ok(split.mu.coeffs().iter().chain(split.nu.coeffs()).copied().collect())
    };
    let zero = alloc::vec![0.0; chi];
    let f0 = coefficients(&zero)?;
    let h = 1e-7;
    let mut jac = DMatrix::zeros(chi, chi);
    for col in 0..chi {
        let mut eps = zero.clone();
        eps[col] = h;
        let f = coefficients(&eps)?;
        for row in 0..chi {
            jac[(row, col)] = (f[row] - f0[row]) / h;
        }
    }
    let singular = jac.svd(false, false).singular_values;
    Ok(singular.iter().filter(|s| **s > 1e-8).count())
}

/// Whether the canonical family of order `n` splits the tangency generically.
pub fn split_rank_check(n: usize) -> Result<bool> {
    Ok(split_family_rank(n, SplitFamily::Canonical)? == splitting_count(n)?)
}

/// Monomials `(j, i)` of degree at most `n`, the index set of the functionals.
pub fn splitting_monomials(n: usize) -> impl Iterator<Item = (usize, usize)> {
    monomials(n)
}
