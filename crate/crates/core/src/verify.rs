//! Self-verification: every identity this crate relies on, checked on
//! concrete images.
//!
//! Random images draw integers uniformly from an inclusive range with a
//! `ChaCha8Rng` seeded by `seed_from_u64`, so a seed reproduces the same
//! images on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::complex::FilteredComplex;
use crate::cubical::Construction;
use crate::duality::{sphere_pair, torus_pair};
use crate::engine::InternalEngine;
use crate::image::GrayscaleImage;
use crate::persistence::rank::{oracle_limit_from_env, RankTable};
use crate::persistence::{
    compute_diagram, rank_pairing_oracle_with_limit, reduce, sort_cells, BoundaryMatrix, Interval, PersistenceDiagram,
    Reducer, StandardReduction, TwistReduction,
};
use crate::transform::{
    choose_n, intermediate_diagram, skip_form, t_from_v, transform_diagram_theorem_form, transform_with_n, v_from_t,
};

/// Names of all checks, in the order they are run and reported.
pub const CHECKS: &[&str] = &[
    "oracle-equivalence",
    "anti-transpose",
    "dual-torus",
    "dual-sphere",
    "padding",
    "top-cell",
    "quotient",
    "t-from-v",
    "v-from-t",
    "theorem-form",
    "n-independence",
    "reducers-agree",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail(String),
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: CheckStatus,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Matrices above this size skip the rank oracle.
    pub oracle_limit: usize,
    /// Corrupt the matrix handed to the reduction in the oracle check.
    pub inject_fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            oracle_limit: oracle_limit_from_env(),
            inject_fault: false,
        }
    }
}

type Outcome = Result<(), String>;

fn ensure(ok: bool, detail: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(detail())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn direct(img: &GrayscaleImage, c: Construction) -> Result<PersistenceDiagram, String> {
    let cx = c.build(img, false).map_err(err)?;
    compute_diagram(&cx, &StandardReduction).map_err(err)
}

fn dgm(cx: &FilteredComplex) -> Result<PersistenceDiagram, String> {
    compute_diagram(cx, &StandardReduction).map_err(err)
}

fn matrix(cx: &FilteredComplex) -> Result<BoundaryMatrix, String> {
    Ok(BoundaryMatrix::from_complex(cx, &sort_cells(cx).map_err(err)?))
}

fn all_sides_at_least_two(img: &GrayscaleImage) -> bool {
    img.dims().iter().all(|&n| n >= 2)
}

/// Runs every check in [`CHECKS`] on one image.
pub fn check_image(img: &GrayscaleImage, options: &VerifyOptions) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&name| CheckResult {
            name,
            status: run_check(name, img, options),
        })
        .collect()
}

pub fn run_check(name: &str, img: &GrayscaleImage, options: &VerifyOptions) -> CheckStatus {
    let result = match name {
        "oracle-equivalence" => return oracle_equivalence(img, options),
        "anti-transpose" => return anti_transpose(img, options),
        "dual-torus" => {
            if !all_sides_at_least_two(img) {
                return CheckStatus::Skipped("periodic complexes need sides >= 2".into());
            }
            dual_torus(img)
        }
        "dual-sphere" => dual_sphere(img),
        "padding" => padding(img),
        "top-cell" => top_cell(img),
        "quotient" => quotient(img),
        "t-from-v" => end_to_end(img, Construction::V),
        "v-from-t" => end_to_end(img, Construction::T),
        "theorem-form" => theorem_form(img),
        "n-independence" => n_independence(img),
        "reducers-agree" => reducers_agree(img),
        other => Err(format!("unknown check '{other}'")),
    };
    match result {
        Ok(()) => CheckStatus::Pass,
        Err(detail) => CheckStatus::Fail(detail),
    }
}

fn oracle_equivalence(img: &GrayscaleImage, options: &VerifyOptions) -> CheckStatus {
    let run = || -> Result<Option<String>, String> {
        for c in [Construction::V, Construction::T] {
            let d = matrix(&c.build(img, false).map_err(err)?)?;
            if d.size() > options.oracle_limit {
                return Ok(Some(format!(
                    "{c} matrix of size {} exceeds the oracle limit {}",
                    d.size(),
                    options.oracle_limit
                )));
            }
            let oracle = rank_pairing_oracle_with_limit(&d, options.oracle_limit).map_err(err)?;
            let mut input = d.clone();
            if options.inject_fault {
                input.inject_fault();
            }
            let reduced = reduce(&input);
            ensure(reduced == oracle, || {
                format!("{c}: reduction {reduced:?} != oracle {oracle:?}")
            })?;
        }
        Ok(None)
    };
    match run() {
        Ok(None) => CheckStatus::Pass,
        Ok(Some(reason)) => CheckStatus::Skipped(reason),
        Err(detail) => CheckStatus::Fail(detail),
    }
}

/// The rank function of `D` and of its anti-transpose agree under
/// `(i, j) -> (n - j, n - i)`; on the torus, the dual boundary matrix under
/// the reversed order is that anti-transpose.
fn anti_transpose(img: &GrayscaleImage, options: &VerifyOptions) -> CheckStatus {
    let run = || -> Result<Option<String>, String> {
        let d = matrix(&Construction::V.build(img, false).map_err(err)?)?;
        if d.size() > options.oracle_limit {
            return Ok(Some(format!("matrix of size {} exceeds the oracle limit", d.size())));
        }
        check_anti_transpose_ranks(&d)?;
        if all_sides_at_least_two(img) {
            for c in [Construction::V, Construction::T] {
                let report = torus_pair(img, c)
                    .map_err(err)?
                    .check(&StandardReduction)
                    .map_err(err)?;
                ensure(report.anti_transpose, || {
                    format!("torus {c}: dual matrix is not the anti-transpose")
                })?;
            }
        }
        Ok(None)
    };
    match run() {
        Ok(None) => CheckStatus::Pass,
        Ok(Some(reason)) => CheckStatus::Skipped(reason),
        Err(detail) => CheckStatus::Fail(detail),
    }
}

/// `r_D(i, j) = r_A(n - j, n - i)` for all `i, j`, where `A` is the anti-transpose.
pub fn check_anti_transpose_ranks(d: &BoundaryMatrix) -> Result<(), String> {
    let a = d.anti_transpose();
    let (td, ta) = (RankTable::new(d), RankTable::new(&a));
    let last = d.size().saturating_sub(1);
    for i in 0..d.size() {
        for j in 0..d.size() {
            let (x, y) = (td.r(i, j), ta.r(last - j, last - i));
            ensure(x == y, || format!("r({i},{j}) = {x} but the anti-transpose gives {y}"))?;
        }
    }
    Ok(())
}

fn dual_torus(img: &GrayscaleImage) -> Outcome {
    for c in [Construction::V, Construction::T] {
        let report = torus_pair(img, c)
            .map_err(err)?
            .check(&StandardReduction)
            .map_err(err)?;
        ensure(report.pass, || format!("{report:?}"))?;
    }
    Ok(())
}

fn dual_sphere(img: &GrayscaleImage) -> Outcome {
    let n = choose_n(img);
    for c in [Construction::T, Construction::V] {
        let report = sphere_pair(img, c, n)
            .map_err(err)?
            .check(&StandardReduction)
            .map_err(err)?;
        ensure(report.pass, || format!("{report:?}"))?;
    }
    Ok(())
}

fn padding(img: &GrayscaleImage) -> Outcome {
    let padded = img.pad(choose_n(img)).map_err(err)?;
    for c in [Construction::V, Construction::T] {
        let (a, b) = (direct(img, c)?, direct(&padded, c)?);
        ensure(a == b, || format!("{c}: padded {b:?} != original {a:?}"))?;
    }
    Ok(())
}

/// Capping the box at `N` adds exactly one essential top class born at `N`.
fn top_cell(img: &GrayscaleImage) -> Outcome {
    let n = choose_n(img);
    let d = img.ndim();
    let padded = img.pad(n).map_err(err)?;
    let boxes = [
        ("V(padded)", Construction::V.build(&padded, false).map_err(err)?),
        ("T", Construction::T.build(img, false).map_err(err)?),
    ];
    for (name, cx) in boxes {
        let mut want = dgm(&cx)?;
        want.insert(Interval::essential(d, n));
        let got = dgm(&cx.attach_top_cell(n).map_err(err)?)?;
        ensure(got == want, || format!("{name}: capped {got:?} != {want:?}"))?;
    }
    Ok(())
}

/// Collapsing the boundary of the negated padded complex trades
/// `(d - 1, -N, -min)` for `(d, -min, inf)`.
fn quotient(img: &GrayscaleImage) -> Outcome {
    let n = choose_n(img);
    let d = img.ndim();
    let min = img.min_value();
    let input = img.pad(n).map_err(err)?.negate();
    for c in [Construction::V, Construction::T] {
        let cx = c.build(&input, false).map_err(err)?;
        let mut want = dgm(&cx)?;
        ensure(want.remove_one(&Interval::finite(d - 1, -n, -min)), || {
            format!("{c}: diagram lacks ({}, {}, {})", d - 1, -n, -min)
        })?;
        want.insert(Interval::essential(d, -min));
        let got = dgm(&cx.quotient_boundary(-n).map_err(err)?)?;
        ensure(got == want, || format!("{c}: quotient {got:?} != {want:?}"))?;
    }
    Ok(())
}

fn end_to_end(img: &GrayscaleImage, have: Construction) -> Outcome {
    let engine = InternalEngine::new(have);
    let got = match have {
        Construction::V => t_from_v(img, &engine),
        Construction::T => v_from_t(img, &engine),
    }
    .map_err(err)?;
    let want = direct(img, have.other())?;
    ensure(got == want, || format!("transformed {got:?} != direct {want:?}"))
}

fn theorem_form(img: &GrayscaleImage) -> Outcome {
    let n = choose_n(img);
    for c in [Construction::V, Construction::T] {
        let inter = intermediate_diagram(img, &InternalEngine::new(c), n).map_err(err)?;
        let skip = skip_form(&inter, img.ndim(), img.min_value(), n).map_err(err)?;
        let theorem = transform_diagram_theorem_form(&inter, img.ndim(), img.min_value(), n).map_err(err)?;
        ensure(skip == theorem, || {
            format!("{c}: skip form {skip:?} != theorem form {theorem:?}")
        })?;
    }
    Ok(())
}

fn n_independence(img: &GrayscaleImage) -> Outcome {
    let max = img.max_value();
    for c in [Construction::V, Construction::T] {
        let engine = InternalEngine::new(c);
        let a = transform_with_n(img, &engine, max + 1.0).map_err(err)?;
        let b = transform_with_n(img, &engine, max + 1.0e6).map_err(err)?;
        ensure(a == b, || {
            format!("{c}: N = max+1 gives {a:?}, N = max+1e6 gives {b:?}")
        })?;
    }
    Ok(())
}

fn reducers_agree(img: &GrayscaleImage) -> Outcome {
    for c in [Construction::V, Construction::T] {
        let d = matrix(&c.build(img, false).map_err(err)?)?;
        let (a, b) = (reduce(&d), TwistReduction.reduce(&d).map_err(err)?);
        ensure(a == b, || format!("{c}: standard {a:?} != twist {b:?}"))?;
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckTally {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub trial: usize,
    pub check: &'static str,
    pub detail: String,
    pub image: GrayscaleImage,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifySummary {
    pub trials: usize,
    pub tallies: Vec<CheckTally>,
    /// The failure with the lowest trial index, then the earliest check.
    pub first_failure: Option<Counterexample>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Checks every image in parallel and tallies the results in input order.
pub fn verify_images(images: &[GrayscaleImage], options: &VerifyOptions) -> VerifySummary {
    let results: Vec<Vec<CheckResult>> = images.par_iter().map(|img| check_image(img, options)).collect();
    let mut tallies: Vec<CheckTally> = CHECKS
        .iter()
        .map(|&name| CheckTally {
            name,
            ..CheckTally::default()
        })
        .collect();
    let mut first_failure = None;
    for (trial, checks) in results.into_iter().enumerate() {
        for (tally, result) in tallies.iter_mut().zip(checks) {
            match result.status {
                CheckStatus::Pass => tally.passed += 1,
                CheckStatus::Skipped(_) => tally.skipped += 1,
                CheckStatus::Fail(detail) => {
                    tally.failed += 1;
                    first_failure.get_or_insert_with(|| Counterexample {
                        trial,
                        check: result.name,
                        detail,
                        image: images[trial].clone(),
                    });
                }
            }
        }
    }
    VerifySummary {
        trials: images.len(),
        tallies,
        first_failure,
    }
}

/// Integer voxel values drawn uniformly from `lo..=hi`.
pub fn random_image(rng: &mut impl Rng, dims: &[usize], lo: i64, hi: i64) -> GrayscaleImage {
    let len: usize = dims.iter().product();
    let values = (0..len).map(|_| rng.gen_range(lo..=hi) as f64).collect();
    GrayscaleImage::new(dims.to_vec(), values).expect("nonempty dims give a valid image")
}

/// `trials` images of shape `dims`, drawn in sequence from one seeded stream.
pub fn random_images(seed: u64, dims: &[usize], trials: usize, lo: i64, hi: i64) -> Vec<GrayscaleImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| random_image(&mut rng, dims, lo, hi)).collect()
}
