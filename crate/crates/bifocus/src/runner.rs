//! Executes one scenario and writes its run directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bifocus_core::jets::{monomials, Jet2};
use bifocus_core::model::validate_genericity;
use bifocus_core::raiser::{build_order_n_with, raise_suborder, OrderReport, RaiseConfig};
use bifocus_core::renorm::{convergence_report, universal_approx, UniversalFit};
use bifocus_core::{BiFocusSpectrum, GlobalMapModel, RescalingScheme, SchemeVariant, TangencyBag, TangencyIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, Kind, LoadedScenario, Scenario, SchemeName, Target};
use crate::io::{csv_bytes, json_files, load_model, save_model, write_atomic};
use crate::parallel::{pool, RayonPairs};
use crate::Failure;

pub const VALIDATE_HEADER: [&str; 5] = ["model", "det_a34", "det_b12", "det_d6", "pass"];
pub const RAISE_HEADER: [&str; 5] = ["k", "residual_pre", "residual_post", "index_n", "index_m"];
pub const RENORM_HEADER: [&str; 3] = ["k", "sup_error", "aux_norm"];
pub const UNIVERSAL_HEADER: [&str; 3] = ["k", "fit_error", "total_error"];

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub kind: Kind,
    pub run_dir: PathBuf,
    pub summary: String,
}

/// Loads `path`, checks its kind against `expected` and runs it.
pub fn run_scenario(path: &Path, expected: Option<Kind>) -> Result<RunReport, Failure> {
    let loaded = config::load(path)?;
    let kind = loaded.scenario.kind();
    if let Some(want) = expected.filter(|w| *w != kind) {
        return Err(Failure::Contract(format!(
            "config kind is {}, subcommand expects {}",
            kind.name(),
            want.name()
        )));
    }
    let run_dir = loaded.run_dir();
    let spec = loaded.scenario.spectrum();
    spec.validate()?;
    let summary = match &loaded.scenario {
        Scenario::Validate { models, .. } => run_validate(&loaded, models, &run_dir)?,
        Scenario::Raise {
            models, k_min, k_max, ..
        } => run_raise(&loaded, models, &spec, RaiseConfig { k_min: *k_min, k_max: *k_max }, &run_dir)?,
        Scenario::OrderN {
            models,
            model_dir,
            order,
            k_min,
            k_max,
            ..
        } => {
            let paths = match model_dir {
                Some(dir) if models.is_empty() => json_files(&loaded.resolve(dir))?,
                Some(_) => return Err(Failure::Contract("give either models or model_dir, not both".into())),
                None => models.iter().map(|p| loaded.resolve(p)).collect(),
            };
            run_order_n(&paths, *order, &spec, RaiseConfig { k_min: *k_min, k_max: *k_max }, &run_dir)?
        }
        Scenario::Renorm {
            model, scheme, k_list, ..
        } => {
            let gm = optional_model(&loaded, model.as_deref(), None)?;
            run_renorm(&gm, &spec, *scheme, k_list, &run_dir)?
        }
        Scenario::Universal {
            model,
            target,
            n,
            k_list,
            ..
        } => {
            let gm = optional_model(&loaded, model.as_deref(), Some(*n))?;
            run_universal(&gm, &spec, target, *n, k_list, &run_dir)?
        }
    };
    write_atomic(&run_dir.join("summary.txt"), summary.as_bytes())?;
    Ok(RunReport { kind, run_dir, summary })
}

fn optional_model(loaded: &LoadedScenario, path: Option<&Path>, order: Option<usize>) -> Result<GlobalMapModel, Failure> {
    match path {
        Some(p) => load_model(&loaded.resolve(p)),
        None => Ok(reference_of_order(order.unwrap_or(1))),
    }
}

/// The reference model's blocks with a lead of order `n`.
pub fn reference_of_order(n: usize) -> GlobalMapModel {
    let mut gm = GlobalMapModel::reference();
    if n != gm.order_cap {
        gm.order_cap = n;
        gm.mu = Jet2::zero(n);
        gm.nu = Jet2::zero(n);
        gm.lead_a = vec![0.0; n + 2];
        gm.lead_b = vec![0.0; n + 2];
        gm.lead_a[0] = 1.0;
        gm.lead_a[1] = 0.5;
        gm.lead_b[0] = 0.3;
        gm.lead_b[1] = 1.0;
    }
    gm
}

#[derive(Serialize)]
struct ValidateRow {
    model: String,
    det_a34: f64,
    det_b12: f64,
    det_d6: f64,
    pass: bool,
}

fn run_validate(loaded: &LoadedScenario, models: &[PathBuf], run_dir: &Path) -> Result<String, Failure> {
    let named: Vec<(String, GlobalMapModel)> = if models.is_empty() {
        vec![("reference".into(), GlobalMapModel::reference())]
    } else {
        models
            .iter()
            .map(|p| Ok((p.display().to_string(), load_model(&loaded.resolve(p))?)))
            .collect::<Result<_, Failure>>()?
    };
    let mut rows = Vec::new();
    let mut summary = String::from("validate\n");
    for (name, gm) in &named {
        gm.check()?;
        let r = validate_genericity(gm);
        writeln!(
            summary,
            "{name}: det(a34) = {:e}, det(b12) = {:e}, det(d6) = {:e}, pass = {}",
            r.det_a34,
            r.det_b12,
            r.det_d6,
            r.pass()
        )
        .unwrap();
        rows.push(ValidateRow {
            model: name.clone(),
            det_a34: r.det_a34,
            det_b12: r.det_b12,
            det_d6: r.det_d6,
            pass: r.pass(),
        });
    }
    write_atomic(&run_dir.join("results.csv"), &csv_bytes(&VALIDATE_HEADER, &rows))?;
    if let Some(bad) = rows.iter().find(|r| !r.pass) {
        write_atomic(&run_dir.join("summary.txt"), summary.as_bytes())?;
        return Err(Failure::Contract(format!("validate_genericity: {} fails a determinant test", bad.model)));
    }
    Ok(summary)
}

#[derive(Serialize)]
struct RaiseRow {
    k: u32,
    residual_pre: f64,
    residual_post: f64,
    index_n: usize,
    index_m: usize,
}

fn index_parts(index: TangencyIndex) -> (usize, usize) {
    match index {
        TangencyIndex::Index { n, m } => (n, m),
        TangencyIndex::Flat => (usize::MAX, usize::MAX),
    }
}

fn run_raise(
    loaded: &LoadedScenario,
    models: &[PathBuf],
    spec: &BiFocusSpectrum,
    cfg: RaiseConfig,
    run_dir: &Path,
) -> Result<String, Failure> {
    let [p1, p2] = models else {
        return Err(Failure::Contract(format!("raise needs exactly 2 models, got {}", models.len())));
    };
    let gm1 = load_model(&loaded.resolve(p1))?;
    let gm2 = load_model(&loaded.resolve(p2))?;
    let out = raise_suborder(&gm1, &gm2, spec, cfg)?;
    let (index_n, index_m) = index_parts(out.index);
    let row = RaiseRow {
        k: out.k,
        residual_pre: out.residual_pre,
        residual_post: out.residual_post,
        index_n,
        index_m,
    };
    write_atomic(&run_dir.join("results.csv"), &csv_bytes(&RAISE_HEADER, &[row]))?;
    save_model(&run_dir.join("output_model.json"), &out.model)?;
    Ok(format!(
        "raise\nk = {}\nresidual_pre = {:e}\nresidual_post = {:e}\nnew index = {}\npinned = {}\n",
        out.k, out.residual_pre, out.residual_post, out.index, out.pinned
    ))
}

fn run_order_n(
    paths: &[PathBuf],
    order: u32,
    spec: &BiFocusSpectrum,
    cfg: RaiseConfig,
    run_dir: &Path,
) -> Result<String, Failure> {
    let need = bifocus_core::raiser::required_count(order)?;
    if paths.len() as u128 != need {
        return Err(Failure::Contract(format!(
            "build_order_N: required_count({order})={need}, got {} models",
            paths.len()
        )));
    }
    let models = paths.iter().map(|p| load_model(p)).collect::<Result<Vec<_>, _>>()?;
    let bag = TangencyBag::new(spec.clone(), models)?;
    let pool = pool();
    let report: OrderReport = build_order_n_with(&bag, order, cfg, &RayonPairs { pool: &pool })?;
    let rows: Vec<RaiseRow> = report
        .steps
        .iter()
        .map(|s| {
            let (index_n, index_m) = index_parts(s.index);
            RaiseRow {
                k: s.k,
                residual_pre: s.residual_pre,
                residual_post: s.residual_post,
                index_n,
                index_m,
            }
        })
        .collect();
    write_atomic(&run_dir.join("results.csv"), &csv_bytes(&RAISE_HEADER, &rows))?;
    save_model(&run_dir.join("output_model.json"), &report.model)?;
    let worst = report.steps.iter().fold(0.0f64, |a, s| a.max(s.residual_post));
    Ok(format!(
        "order_n\ninputs = {}\nraises = {}\nfinal index = {}\nworst residual_post = {worst:e}\n",
        paths.len(),
        report.steps.len(),
        report.index
    ))
}

#[derive(Serialize)]
struct RenormRow {
    k: u32,
    sup_error: f64,
    aux_norm: f64,
}

fn run_renorm(
    gm: &GlobalMapModel,
    spec: &BiFocusSpectrum,
    scheme: SchemeName,
    k_list: &[u32],
    run_dir: &Path,
) -> Result<String, Failure> {
    if k_list.is_empty() || k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Contract("convergence_report: k_list must be non-empty and increasing".into()));
    }
    let variant = match scheme {
        SchemeName::OrderForm => SchemeVariant::OrderForm,
        SchemeName::FullPolynomialForm => SchemeVariant::FullPolynomialForm,
    };
    let scheme = RescalingScheme::new(variant, gm.order_cap)?;
    let pool = pool();
    let rows = pool.install(|| {
        k_list
            .par_iter()
            .map(|&k| convergence_report(gm, spec, scheme, &[k]).map(|r| r[0]))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let csv_rows: Vec<RenormRow> = rows
        .iter()
        .map(|r| RenormRow {
            k: r.k,
            sup_error: r.sup_error,
            aux_norm: r.aux_norm,
        })
        .collect();
    write_atomic(&run_dir.join("results.csv"), &csv_bytes(&RENORM_HEADER, &csv_rows))?;
    let first = rows.first().expect("non-empty");
    let last = rows.last().expect("non-empty");
    Ok(format!(
        "renorm ({variant:?})\nk = {}..{}\nsup_error {:e} -> {:e}\naux_norm {:e} -> {:e}\n",
        first.k, last.k, first.sup_error, last.sup_error, first.aux_norm, last.aux_norm
    ))
}

/// A disk map built from a [`Target`].
pub fn target_fn(target: &Target) -> Box<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync> {
    match target.clone() {
        Target::Henon { a, b } => Box::new(move |y1, y2| (1.0 - a * y1 * y1 + y2, b * y1)),
        Target::Polynomial { y1, y2 } => {
            let degree = y1.iter().chain(&y2).map(|t| t.0).max().unwrap_or(0);
            let build = |terms: &[(usize, usize, f64)]| {
                let mut jet = Jet2::zero(degree);
                for &(j, i, c) in terms {
                    jet.set_coeff(j, i, jet.coeff(j, i) + c);
                }
                jet
            };
            let (p1, p2) = (build(&y1), build(&y2));
            Box::new(move |a, b| (p1.eval(a, b), p2.eval(a, b)))
        }
        Target::RandomPolynomial { degree, seed } => {
            let (p1, p2) = random_polynomial(degree, seed);
            Box::new(move |a, b| (p1.eval(a, b), p2.eval(a, b)))
        }
    }
}

/// Dense polynomial pair, coefficients uniform in `[-1, 1]`.
pub fn random_polynomial(degree: usize, seed: u64) -> (Jet2, Jet2) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || Jet2::from_fn(degree, |_, _| rng.gen_range(-1.0..1.0));
    let p1 = draw();
    let p2 = draw();
    (p1, p2)
}

#[derive(Serialize)]
struct UniversalRow {
    k: u32,
    fit_error: f64,
    total_error: f64,
}

fn run_universal(
    gm: &GlobalMapModel,
    spec: &BiFocusSpectrum,
    target: &Target,
    n: usize,
    k_list: &[u32],
    run_dir: &Path,
) -> Result<String, Failure> {
    if k_list.is_empty() {
        return Err(Failure::Contract("universal_approx: k_list is empty".into()));
    }
    let f = target_fn(target);
    let pool = pool();
    let fits: Vec<UniversalFit> = pool.install(|| {
        k_list
            .par_iter()
            .map(|&k| universal_approx(&*f, n, gm, spec, k))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let rows: Vec<UniversalRow> = fits
        .iter()
        .map(|u| UniversalRow {
            k: u.k,
            fit_error: u.fit_error,
            total_error: u.total_error,
        })
        .collect();
    write_atomic(&run_dir.join("results.csv"), &csv_bytes(&UNIVERSAL_HEADER, &rows))?;
    let best = fits
        .iter()
        .min_by(|a, b| a.total_error.total_cmp(&b.total_error))
        .expect("non-empty");
    let mut summary = format!(
        "universal (n = {n})\nfit_error = {:e}\nbest k = {}, total_error = {:e}\nM:",
        best.fit_error, best.k, best.total_error
    );
    for (j, i) in monomials(n) {
        write!(summary, " {:.6}", best.m.coeff(j, i)).unwrap();
    }
    summary.push_str("\nN:");
    for (j, i) in monomials(n) {
        write!(summary, " {:.6}", best.n.coeff(j, i)).unwrap();
    }
    summary.push('\n');
    Ok(summary)
}
