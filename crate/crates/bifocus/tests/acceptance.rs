//! Acceptance suite: criteria 1 to 9, each with its pinned tolerance and
//! runtime budget. Run with `--nocapture` to see one line per criterion.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::time::{Duration, Instant};

use bifocus::gen_reference;
use bifocus::runner::{random_polynomial, reference_of_order};
use bifocus_core::jets::{monomials, ConstantTerm, JetPair};
use bifocus_core::raiser::{
    build_order_N, compose_new_global, initial_solution, newton_polish, raise_at, raise_order, required_count,
    rotated_lead, s_determinant_identity, select_k_sequence, snap_targets, solve_raise_closed_form, RaiseConfig,
};
use bifocus_core::renorm::{convergence_report, first_return_jet, rescale, universal_approx};
use bifocus_core::tangency::{tangency_index, DEFAULT_TOL};
use bifocus_core::{
    BiFocusSpectrum, GlobalMapModel, RescalingScheme, RotatedLead, SchemeVariant, TangencyBag, TangencyIndex,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const JET_REL_TOL: f64 = 1e-12;
const DET_REL_TOL: f64 = 1e-10;
const CLOSED_FORM_TOL: f64 = 1e-12;
const LEAD_TOL: f64 = 1e-10;
const HENON_TOL: f64 = 1e-3;
const LSQ_MARGIN: f64 = 0.05;
const CONVERGENCE_RATIO: f64 = 10.0;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    check(elapsed <= budget, || format!("took {elapsed:.2?}, budget {budget:?}"))
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cases: Vec<_> = (0..1000)
        .map(|_| {
            (
                oracle::random_jet(&mut rng, 10, 5, false),
                oracle::random_jet(&mut rng, 10, 5, true),
                oracle::random_jet(&mut rng, 10, 5, true),
            )
        })
        .collect();
    let start = Instant::now();
    let results: Vec<_> = cases
        .iter()
        .enumerate()
        .map(|(idx, (a, b, c))| {
            if idx % 2 == 0 {
                a.mul(b).map_err(|e| e.to_string())
            } else {
                let inner = JetPair { y1: b.clone(), y2: c.clone() };
                a.compose(&inner, ConstantTerm::Reject).map_err(|e| e.to_string())
            }
        })
        .collect::<Result<_, _>>()?;
    let elapsed = start.elapsed();
    let mut worst = 0.0f64;
    for (idx, ((a, b, c), got)) in cases.iter().zip(&results).enumerate() {
        let (pa, pb, pc) = (oracle::from_jet(a), oracle::from_jet(b), oracle::from_jet(c));
        let expect = if idx % 2 == 0 {
            oracle::mul(&pa, &pb, Some(10))
        } else {
            oracle::compose(&pa, &pb, &pc, Some(10))
        };
        worst = worst.max(oracle::relative_gap(got, &expect));
    }
    check(worst <= JET_REL_TOL, || format!("worst relative gap {worst:e}"))?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("500 products + 500 compositions, worst gap {worst:.1e}, {elapsed:.2?}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut block = || [[0.0f64; 2]; 2].map(|r| r.map(|_| rng.gen_range(-2.0..2.0)));
    let samples: Vec<_> = (0..1000).map(|_| (block(), block())).collect();
    let ks: Vec<u32> = (0..1000).map(|_| rng.gen_range(1..=400)).collect();
    let spec = BiFocusSpectrum::default();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for ((a34, b12), &k) in samples.iter().zip(&ks) {
        let mut gm1 = GlobalMapModel::reference();
        let mut gm2 = GlobalMapModel::reference();
        gm1.b[0] = b12[0];
        gm1.b[1] = b12[1];
        gm2.a[2] = a34[0];
        gm2.a[3] = a34[1];
        let rl = rotated_lead(&gm1, &gm2, &spec, k).map_err(|e| e.to_string())?;
        let (lhs, rhs) = s_determinant_identity(&rl, &gm1, &gm2);
        // Right side recomputed here from the raw blocks.
        let direct = (a34[0][0] * a34[1][1] - a34[0][1] * a34[1][0]) * (b12[0][0] * b12[1][1] - b12[0][1] * b12[1][0]);
        let scale = direct.abs().max(f64::MIN_POSITIVE);
        worst = worst.max((lhs - direct).abs() / scale).max((rhs - direct).abs() / scale);
    }
    let elapsed = start.elapsed();
    check(worst <= DET_REL_TOL, || format!("worst relative gap {worst:e}"))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("1000 samples, worst gap {worst:.1e}, {elapsed:.2?}"))
}

/// Residual of the two-line system, each line relative to its largest term.
fn two_line_residual(rl: &RotatedLead, d: f64, e: f64, n: usize, m: usize, mm: f64, nn: f64) -> f64 {
    let [s1, s2, s3, s4] = rl.s;
    let (at, bt) = (rl.a_tilde[m], rl.b_tilde[m]);
    let mono = mm.powi((n + 2 - m) as i32) * nn.powi((m + 1) as i32);
    let line = |c: f64, sa: f64, sb: f64| {
        let terms = [mono * c, sa * nn * at, sb * mm * bt];
        let scale = terms.iter().fold(0.0f64, |a, t| a.max(t.abs())).max(f64::MIN_POSITIVE);
        terms.iter().sum::<f64>().abs() / scale
    };
    line(d, s1, s2).max(line(e, s3, s4))
}

fn criterion_3() -> Outcome {
    let reference = RotatedLead {
        k: 1,
        a_tilde: vec![1.0, 0.0, 0.0],
        b_tilde: vec![1.0, 0.0, 0.0],
        s: [1.0, 0.0, 0.0, 1.0],
    };
    let sol = solve_raise_closed_form(&reference, 1.0, 1.0, 1, 0).map_err(|e| e.to_string())?;
    check((sol.m10, sol.n11) == (-1.0, -1.0), || format!("reference solution ({}, {})", sol.m10, sol.n11))?;
    let r0 = two_line_residual(&reference, 1.0, 1.0, 1, 0, sol.m10, sol.n11);
    check(r0 == 0.0, || format!("reference residual {r0:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (mut solved, mut worst) = (0, 0.0f64);
    while solved < 1000 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(0..=n);
        let mut rl = RotatedLead {
            k: 1,
            a_tilde: vec![0.0; n + 2],
            b_tilde: vec![0.0; n + 2],
            s: [0.0; 4].map(|_| rng.gen_range(-1.0..1.0)),
        };
        rl.a_tilde[m] = rng.gen_range(0.1..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        rl.b_tilde[m] = rng.gen_range(0.1..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let (d, e) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if let Ok(s) = solve_raise_closed_form(&rl, d, e, n, m) {
            solved += 1;
            worst = worst.max(two_line_residual(&rl, d, e, n, m, s.m10, s.n11));
        }
    }
    check(worst <= CLOSED_FORM_TOL, || format!("worst random residual {worst:e}"))?;
    Ok(format!("(M,N) = (-1,-1) with residual 0; 1000 random configs, worst {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let gm = GlobalMapModel::reference();
    let spec = BiFocusSpectrum::default();
    let start = Instant::now();
    let seq = select_k_sequence(&gm, &gm, &spec, 0, usize::MAX, 5, 200).map_err(|e| e.to_string())?;
    let base = TangencyIndex::new(1, 0);
    let mut exact = [0usize; 2];
    for (b, branch) in [&seq.even, &seq.odd].into_iter().enumerate() {
        for &k in branch {
            let run = || -> Result<(TangencyIndex, TangencyIndex), bifocus_core::Error> {
                let polished = newton_polish(&gm, &spec, k, &gm, &initial_solution(&gm, &gm, &spec, k, 0)?)?;
                let composite = snap_targets(&compose_new_global(&gm, &spec, k, &gm, &polished)?, 1, 0);
                let raw = tangency_index(&composite, DEFAULT_TOL)?;
                let split = raise_at(&gm, &gm, &spec, k, 1, 0, TangencyIndex::new(1, 1))?.index;
                Ok((raw, split))
            };
            let (raw, split) = run().map_err(|e| format!("k={k}: {e}"))?;
            check(raw > base, || format!("k={k}: composite index {raw}"))?;
            if split == TangencyIndex::new(1, 1) || split == TangencyIndex::new(2, 0) {
                exact[b] += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(exact[0] >= 1 && exact[1] >= 1, || format!("exact hits per branch {exact:?}"))?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "{} even + {} odd k in [5,200], all raised; exact per branch {exact:?}, {elapsed:.2?}",
        seq.even.len(),
        seq.odd.len()
    ))
}

fn criterion_5() -> Outcome {
    let spec = BiFocusSpectrum::default();
    let cfg = RaiseConfig::default();
    let bag = TangencyBag::new(spec.clone(), gen_reference(5, 8, 1)).map_err(|e| e.to_string())?;
    let two = build_order_N(&bag, 2, cfg).map_err(|e| e.to_string())?;
    let detected = bifocus_core::raiser::model_index(&two.model).map_err(|e| e.to_string())?;
    check(two.index == TangencyIndex::new(2, 0) && detected == two.index, || {
        format!("8 models gave {}", two.index)
    })?;
    let bag = TangencyBag::new(spec, gen_reference(6, 16, 2)).map_err(|e| e.to_string())?;
    let three = raise_order(&bag, cfg).map_err(|e| e.to_string())?;
    check(three.index == TangencyIndex::new(3, 0), || format!("16 models gave {}", three.index))?;
    for big_n in 1..=6u32 {
        let product: u128 = (1..big_n).map(|n| 1u128 << (n + 2)).product();
        let got = required_count(big_n).map_err(|e| e.to_string())?;
        check(got == product && product == 1u128 << ((big_n - 1) * (big_n + 4) / 2), || {
            format!("required_count({big_n}) = {got}, product {product}")
        })?;
    }
    Ok("8 x (1,0) -> (2,0); 16 x (2,0) -> (3,0); required_count(1..6) exact".into())
}

fn criterion_6() -> Outcome {
    let spec = BiFocusSpectrum::default();
    let start = Instant::now();
    let bag = TangencyBag::new(spec, gen_reference(7, 128, 1)).map_err(|e| e.to_string())?;
    let report = build_order_N(&bag, 3, RaiseConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(report.index == TangencyIndex::new(3, 0), || format!("final index {}", report.index))?;
    within(elapsed, Duration::from_secs(300))?;
    let worst = report.steps.iter().fold(0.0f64, |a, s| a.max(s.residual_post));
    Ok(format!("{} raises, worst residual {worst:.1e}, {elapsed:.2?}", report.steps.len()))
}

fn criterion_7() -> Outcome {
    let gm = GlobalMapModel::reference();
    let spec = BiFocusSpectrum::default();
    let ks: Vec<u32> = (1..=6).map(|i| 10 * i).collect();
    let start = Instant::now();
    let scheme = RescalingScheme::new(SchemeVariant::OrderForm, 1).map_err(|e| e.to_string())?;
    let rows = convergence_report(&gm, &spec, scheme, &ks).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    let ratio = first.sup_error / last.sup_error;
    check(ratio >= CONVERGENCE_RATIO, || format!("sup_error ratio {ratio:e}"))?;
    check(rows.windows(2).all(|w| w[1].aux_norm < w[0].aux_norm), || "aux_norm not strictly decreasing".into())?;
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "sup_error {:.2e} -> {:.2e}, aux_norm {:.3} -> {:.3}, {elapsed:.2?}",
        first.sup_error, last.sup_error, first.aux_norm, last.aux_norm
    ))
}

fn criterion_8() -> Outcome {
    let spec = BiFocusSpectrum::default();
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut worst = 0.0f64;
    for t in 0..100 {
        let n = rng.gen_range(1..=4);
        let gm = gen_reference(1000 + t, 1, n).remove(0);
        let k = rng.gen_range(5..=200);
        let scheme = RescalingScheme::new(SchemeVariant::OrderForm, n).map_err(|e| e.to_string())?;
        let fr = first_return_jet(&gm, &spec, k).map_err(|e| e.to_string())?;
        let rm = rescale(&fr, &spec, scheme).map_err(|e| e.to_string())?;
        let (s, c) = (k as f64 * spec.psi).sin_cos();
        for i in 0..=n + 1 {
            let (a, b) = (gm.lead_a[i], gm.lead_b[i]);
            worst = worst
                .max((rm.jet.y1.coeff(n + 1, i) - (c * a - s * b)).abs())
                .max((rm.jet.y2.coeff(n + 1, i) - (s * a + c * b)).abs());
        }
    }
    check(worst <= LEAD_TOL, || format!("worst lead gap {worst:e}"))?;
    Ok(format!("100 models, worst lead gap {worst:.1e}"))
}

fn criterion_9() -> Outcome {
    let spec = BiFocusSpectrum::default();
    let gm = reference_of_order(2);
    let start = Instant::now();
    let henon = |y1: f64, y2: f64| (1.0 - 1.4 * y1 * y1 + y2, 0.3 * y1);
    let mut best: Option<(u32, f64)> = None;
    for k in (10..=60).step_by(10) {
        let fit = universal_approx(&henon, 2, &gm, &spec, k).map_err(|e| e.to_string())?;
        if best.is_none_or(|(_, e)| fit.total_error < e) {
            best = Some((k, fit.total_error));
        }
    }
    let (best_k, best_err) = best.expect("k list is non-empty");
    check(best_err <= HENON_TOL, || format!("best Henon total_error {best_err:e} at k={best_k}"))?;

    let (p1, p2) = random_polynomial(4, 7);
    let target = move |a: f64, b: f64| (p1.eval(a, b), p2.eval(a, b));
    let k = 20;
    let fit = universal_approx(&target, 2, &gm, &spec, k).map_err(|e| e.to_string())?;
    let grid = oracle::disk_grid(21);
    let coef = oracle::normal_equations_fit(&target, &grid, 2);
    let lsq = grid
        .iter()
        .map(|&(a, b)| {
            let (t1, t2) = target(a, b);
            let (f1, f2) = monomials(2).zip(&coef).fold((0.0, 0.0), |acc, ((j, i), w)| {
                let m = a.powi((j - i) as i32) * b.powi(i as i32);
                (acc.0 + w[0] * m, acc.1 + w[1] * m)
            });
            (f1 - t1).hypot(f2 - t2)
        })
        .fold(0.0f64, f64::max);
    let rel = (fit.total_error - lsq).abs() / lsq;
    check(rel <= LSQ_MARGIN, || format!("degree-4 total_error {} vs lsq {lsq}", fit.total_error))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "Henon best total_error {best_err:.1e} at k={best_k}; degree-4 total {:.4} vs lsq {lsq:.4}; {elapsed:.2?}",
        fit.total_error
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("jet oracle equivalence", criterion_1),
        ("determinant identity", criterion_2),
        ("closed-form solver", criterion_3),
        ("index raising", criterion_4),
        ("order raising", criterion_5),
        ("order 3 from 128 models", criterion_6),
        ("renormalization convergence", criterion_7),
        ("lead-block conservation", criterion_8),
        ("universal dynamics", criterion_9),
    ];
    let mut failed = Vec::new();
    for (idx, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", idx + 1),
            Err(why) => {
                println!("criterion {}: FAIL {name}: {why}", idx + 1);
                failed.push(idx + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
