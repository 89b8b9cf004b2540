//! Seeded generation of index-`(n, 0)` tangency models.

use bifocus_core::math::rotation;
use bifocus_core::model::validate_genericity;
use bifocus_core::raiser::model_index;
use bifocus_core::{GlobalMapModel, TangencyIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `count` models of order `n`, one `u` and one `v` direction each.
///
/// Linear blocks are rotations times diagonals in `[0.5, 1.5]`, so every
/// genericity determinant is far from zero; `mu = nu = 0` and the lead has
/// `|A_0| >= 0.3`, which fixes the index at `(n, 0)`.
pub fn gen_reference(seed: u64, count: usize, n: usize) -> Vec<GlobalMapModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let gm = random_model(&mut rng, n);
        if validate_genericity(&gm).pass() && model_index(&gm).ok() == Some(TangencyIndex::new(n, 0)) {
            out.push(gm);
        }
    }
    out
}

fn conditioned_block(rng: &mut ChaCha8Rng) -> [[f64; 2]; 2] {
    let r = rotation(rng.gen_range(0.0..std::f64::consts::TAU));
    let (s1, s2) = (rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5));
    [[r[0][0] * s1, r[0][1] * s2], [r[1][0] * s1, r[1][1] * s2]]
}

fn random_model(rng: &mut ChaCha8Rng, n: usize) -> GlobalMapModel {
    let mut gm = GlobalMapModel::blank(n, 1, 1);
    let small = |rng: &mut ChaCha8Rng, scale: f64| rng.gen_range(-scale..scale);
    gm.x_plus = [small(rng, 0.5), small(rng, 0.5)];
    gm.y_minus = [small(rng, 0.5), small(rng, 0.5)];
    gm.u_plus = vec![small(rng, 0.5)];
    gm.v_minus = vec![small(rng, 0.5)];
    let a34 = conditioned_block(rng);
    let b12 = conditioned_block(rng);
    gm.a = vec![
        [small(rng, 0.5), small(rng, 0.5)],
        [small(rng, 0.5), small(rng, 0.5)],
        a34[0],
        a34[1],
        [small(rng, 0.2), small(rng, 0.2)],
        [small(rng, 0.2), small(rng, 0.2)],
    ];
    gm.b = vec![
        b12[0],
        b12[1],
        [small(rng, 0.2), small(rng, 0.2)],
        [small(rng, 0.2), small(rng, 0.2)],
    ];
    gm.c = (0..6).map(|_| vec![small(rng, 0.1)]).collect();
    gm.d = (0..6).map(|_| vec![small(rng, 0.1)]).collect();
    gm.d[5][0] = 1.0 + small(rng, 0.2);
    for i in 0..n + 2 {
        gm.lead_a[i] = small(rng, 1.0);
        gm.lead_b[i] = small(rng, 1.0);
    }
    let a0 = rng.gen_range(0.3..1.0);
    gm.lead_a[0] = if rng.gen_bool(0.5) { a0 } else { -a0 };
    gm
}
