//! Command-line front end: model loading, command dispatch and reproducible
//! CSV output. The binary is a thin wrapper around [`main_with`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod modelfile;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use bowendim::bowen::root_sequence;
use bowendim::dimension::{
    box_counting, dimension_bracket_experiment, product_bracket, slice_roots_check, young_formula_check, BoxSet,
    DyadicGrid, KatokOptions, RadiusGrid,
};
use bowendim::gibbs::{equilibrium_measure, gibbs_certificate, pesin_check, u_gibbs_certificate, MarkovMeasure};
use bowendim::potentials::{as_locally_constant, FamilyKind, LocallyConstantPotential, SingularValueFamily};
use bowendim::pressure::{pressure_cylinder_sum, pressure_exact, superadditive_pressure};
use bowendim::{bowen, HorseshoeModel, Limits};
use clap::{Args, Parser, Subcommand, ValueEnum};

use modelfile::{load_model, LoadError, ModelFile};
use output::{emit, sig12, OutputError, RunManifest, Table};

/// Exit code for schema, usage and parameter errors.
pub const EXIT_SCHEMA: i32 = 2;
/// Exit code when an enumeration or level cap is exceeded.
pub const EXIT_CAP: i32 = 3;
/// Exit code for failed certificates and other runtime failures.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "bowendim",
    version,
    about = "Pressure, Bowen roots and dimension brackets for linear horseshoes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model file (JSON).
    pub model: PathBuf,
    /// Append rows to this CSV file and write `<out>.manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PotentialArg {
    Psi,
    Psihat,
    Phi,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Psi,
    Psihat,
    Phi,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Psi => FamilyKind::Psi,
            FamilyArg::Psihat => FamilyKind::PsiHat,
            FamilyArg::Phi => FamilyKind::Phi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Cylinder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentArg {
    Bracket,
    Box,
    Young,
    #[value(name = "mcm")]
    SliceRoots,
    #[value(name = "theoremB")]
    DimensionBrackets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SetArg {
    Unstable,
    Stable,
    Lambda,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pressure per base step of a family member or a per-symbol table.
    Pressure {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        potential: PotentialArg,
        /// Family parameter.
        #[arg(long, default_value_t = 0.0)]
        param: f64,
        /// Highest level (block length 2^level) of the super-additive trace.
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
        method: MethodArg,
        /// Table potential: identically zero.
        #[arg(long)]
        zero: bool,
        /// Table potential: one value per symbol, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        /// Cylinder length for the cylinder method.
        #[arg(long, default_value_t = 12)]
        length: usize,
    },
    /// Bowen roots at levels 0..=K.
    Root {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = FamilyArg::Psi)]
        family: FamilyArg,
        #[arg(long, default_value_t = 0)]
        levels: usize,
        /// Bisection tolerance; defaults to the model file's.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Dimension experiments.
    Dimension {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        experiment: ExperimentArg,
        /// Bracket: highest level.
        #[arg(long, default_value_t = 0)]
        level: usize,
        /// Slack values, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.05")]
        epsilon: Vec<f64>,
        /// Katok block lengths, comma separated.
        #[arg(long = "n", value_delimiter = ',', default_value = "8,10,12")]
        block_lengths: Vec<usize>,
        /// Sampled points for ball-mass regressions.
        #[arg(long, default_value_t = 8)]
        samples: usize,
        /// Smallest grid exponent (radius or dyadic box grid).
        #[arg(long)]
        k_min: Option<u32>,
        /// Largest grid exponent.
        #[arg(long)]
        k_max: Option<u32>,
        /// Radius ratio of the regression grid.
        #[arg(long, default_value_t = 2.0)]
        ratio: f64,
        #[arg(long, value_enum, default_value_t = SetArg::Lambda)]
        set: SetArg,
        /// Bernoulli weights per symbol for the target measure.
        #[arg(long, value_delimiter = ',')]
        weights: Vec<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Runs every certificate on a model.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Longest word length scanned by the Gibbs certificates.
        #[arg(long, default_value_t = 12)]
        n_max: usize,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Load(#[from] LoadError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] bowendim::Error),
    #[error("{0}")]
    Output(#[from] OutputError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Load(LoadError::Schema(..)) | CliError::Usage(_) => EXIT_SCHEMA,
            CliError::Core(e) if e.is_resource() => EXIT_CAP,
            CliError::Core(
                bowendim::Error::Invalid(_) | bowendim::Error::OutOfRange { .. } | bowendim::Error::Unsupported(_),
            ) => EXIT_SCHEMA,
            CliError::Output(OutputError::HeaderMismatch { .. }) => EXIT_SCHEMA,
            _ => EXIT_FAILURE,
        }
    }
}

/// What a command produced: the table and a one-line summary for stderr.
pub struct Outcome {
    pub table: Table,
    pub summary: String,
    /// Set when a certificate failed; the table is still written.
    pub failed: Option<String>,
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

fn status(pass: bool) -> String {
    if pass { "PASS" } else { "FAIL" }.to_string()
}

fn family_name(kind: FamilyKind) -> &'static str {
    kind.name()
}

#[allow(clippy::too_many_arguments)]
fn pressure_cmd(
    mf: &ModelFile,
    potential: PotentialArg,
    param: f64,
    level: usize,
    method: MethodArg,
    zero: bool,
    values: &[f64],
    length: usize,
) -> Result<Outcome, CliError> {
    let model = &mf.model;
    let s = model.subshift();
    let limits = &mf.limits;
    let mut table = Table::new(&["potential", "param", "method", "level", "horizon", "pressure"]);
    let method_name = match method {
        MethodArg::Exact => "exact",
        MethodArg::Cylinder => "cylinder",
    };
    let kind = match potential {
        PotentialArg::Table => {
            let pot = match (zero, values.is_empty()) {
                (true, true) => LocallyConstantPotential::zero(s),
                (false, false) => LocallyConstantPotential::per_symbol(s, values)?,
                _ => {
                    return Err(CliError::Usage(
                        "table potential needs exactly one of --zero and --values".into(),
                    ))
                }
            };
            let (p, horizon) = match method {
                MethodArg::Exact => (pressure_exact(s, &pot)?, 1),
                MethodArg::Cylinder => (pressure_cylinder_sum(s, &pot, length, limits)?, length),
            };
            table.push(vec![
                "table".into(),
                String::new(),
                method_name.into(),
                "0".into(),
                horizon.to_string(),
                sig12(p),
            ]);
            return Ok(Outcome {
                table,
                summary: format!("pressure {}", sig12(p)),
                failed: None,
            });
        }
        PotentialArg::Psi => FamilyKind::Psi,
        PotentialArg::Psihat => FamilyKind::PsiHat,
        PotentialArg::Phi => FamilyKind::Phi,
    };
    let name = family_name(kind);
    let last = match method {
        MethodArg::Exact => {
            let trace = superadditive_pressure(model, kind, param, level, limits)?;
            for lp in &trace.levels {
                table.push(vec![
                    name.into(),
                    sig12(param),
                    method_name.into(),
                    lp.level.to_string(),
                    lp.horizon.to_string(),
                    sig12(lp.pressure),
                ]);
            }
            trace.estimate
        }
        MethodArg::Cylinder => {
            if level != 0 {
                return Err(CliError::Usage(
                    "the cylinder method uses the one-step family (--level 0)".into(),
                ));
            }
            let fam = SingularValueFamily::new(model, kind, param, 1)?;
            let sign = kind.bowen_sign();
            let pot = as_locally_constant(model, &fam, limits)?.map(|v| sign * v);
            let p = pressure_cylinder_sum(s, &pot, length, limits)?;
            table.push(vec![
                name.into(),
                sig12(param),
                method_name.into(),
                "0".into(),
                length.to_string(),
                sig12(p),
            ]);
            p
        }
    };
    Ok(Outcome {
        table,
        summary: format!("pressure {}", sig12(last)),
        failed: None,
    })
}

fn root_cmd(mf: &ModelFile, family: FamilyArg, levels: usize, tol: f64) -> Result<Outcome, CliError> {
    let kind: FamilyKind = family.into();
    let seq = root_sequence(&mf.model, kind, levels, tol, &mf.limits)?;
    let mut table = Table::new(&[
        "family",
        "level",
        "horizon",
        "root",
        "bracket_lo",
        "bracket_hi",
        "residual",
        "iterations",
        "status",
    ]);
    for r in &seq.roots {
        table.push(vec![
            family_name(kind).into(),
            r.level.to_string(),
            r.horizon.to_string(),
            sig12(r.root),
            sig12(r.bracket.0),
            sig12(r.bracket.1),
            sig12(r.residual),
            r.iterations.to_string(),
            format!("{:?}", r.status),
        ]);
    }
    Ok(Outcome {
        table,
        summary: format!(
            "root {} (nondecreasing: {})",
            sig12(seq.estimate),
            yes_no(seq.nondecreasing)
        ),
        failed: None,
    })
}

/// Target measure for dimension experiments: Bernoulli weights when given,
/// otherwise the equilibrium of `−ψ^u`.
fn target_measure(model: &HorseshoeModel, weights: &[f64], limits: &Limits) -> Result<MarkovMeasure, CliError> {
    let s = model.subshift();
    let pot = if weights.is_empty() {
        let fam = SingularValueFamily::new(model, FamilyKind::Psi, model.unstable_dim() as f64, 1)?;
        as_locally_constant(model, &fam, limits)?.map(|v| -v)
    } else {
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(CliError::Usage("weights must be positive".into()));
        }
        let logs: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        LocallyConstantPotential::per_symbol(s, &logs)?
    };
    Ok(equilibrium_measure(s, &pot)?)
}

#[allow(clippy::too_many_arguments)]
fn dimension_cmd(
    mf: &ModelFile,
    experiment: ExperimentArg,
    level: usize,
    epsilons: &[f64],
    block_lengths: &[usize],
    samples: usize,
    k_min: Option<u32>,
    k_max: Option<u32>,
    ratio: f64,
    set: SetArg,
    weights: &[f64],
    tol: f64,
) -> Result<Outcome, CliError> {
    let model = &mf.model;
    let limits = &mf.limits;
    let radius = RadiusGrid {
        r0: 1.0,
        ratio,
        k_min: k_min.unwrap_or(4) as usize,
        k_max: k_max.unwrap_or(12) as usize,
    };
    let dyadic = DyadicGrid {
        k_min: k_min.unwrap_or(4),
        k_max: k_max.unwrap_or(14),
    };
    match experiment {
        ExperimentArg::Bracket => {
            let mut table = Table::new(&[
                "level",
                "epsilon",
                "unstable_root",
                "stable_root",
                "lower",
                "upper",
                "slope_min",
                "slope_max",
                "slopes_inside",
            ]);
            let mut last = None;
            for lv in 0..=level {
                for &e in epsilons {
                    let b = product_bracket(model, lv, e, tol, samples, &radius, limits)?;
                    let (lo, hi) = b
                        .slopes
                        .as_ref()
                        .map_or((String::new(), String::new()), |s| (sig12(s.lower), sig12(s.upper)));
                    table.push(vec![
                        lv.to_string(),
                        sig12(e),
                        sig12(b.unstable_root),
                        sig12(b.stable_root),
                        sig12(b.lower),
                        sig12(b.upper),
                        lo,
                        hi,
                        yes_no(b.slopes_inside),
                    ]);
                    last = Some(b);
                }
            }
            let b = last.ok_or_else(|| CliError::Usage("no epsilon given".into()))?;
            Ok(Outcome {
                table,
                summary: format!("bracket [{}, {}]", sig12(b.lower), sig12(b.upper)),
                failed: None,
            })
        }
        ExperimentArg::Box => {
            let which = match set {
                SetArg::Unstable => BoxSet::UnstableSlice,
                SetArg::Stable => BoxSet::StableSlice,
                SetArg::Lambda => BoxSet::Lambda,
            };
            let c = box_counting(model, which, &dyadic, limits)?;
            let mut table = Table::new(&["set", "k", "count", "slope", "r_squared"]);
            for (k, n) in c.levels.iter().zip(&c.counts) {
                table.push(vec![
                    format!("{which:?}"),
                    k.to_string(),
                    n.to_string(),
                    sig12(c.fit.slope),
                    sig12(c.fit.r_squared),
                ]);
            }
            Ok(Outcome {
                table,
                summary: format!(
                    "box-counting slope {} (R² {})",
                    sig12(c.fit.slope),
                    sig12(c.fit.r_squared)
                ),
                failed: None,
            })
        }
        ExperimentArg::Young => {
            let s = model.subshift();
            let mu = if weights.is_empty() {
                equilibrium_measure(s, &LocallyConstantPotential::zero(s))?
            } else {
                target_measure(model, weights, limits)?
            };
            let r = young_formula_check(model, &mu, samples, &radius, limits)?;
            let mut table = Table::new(&[
                "entropy",
                "unstable_exponent",
                "stable_exponent",
                "target",
                "slope_min",
                "slope_mean",
                "slope_max",
                "residual",
            ]);
            table.push(vec![
                sig12(r.entropy),
                sig12(r.unstable_exponent),
                sig12(r.stable_exponent),
                sig12(r.target),
                sig12(r.slopes.lower),
                sig12(r.slopes.mean),
                sig12(r.slopes.upper),
                sig12(r.residual),
            ]);
            Ok(Outcome {
                table,
                summary: format!("target {}, residual {}", sig12(r.target), sig12(r.residual)),
                failed: None,
            })
        }
        ExperimentArg::SliceRoots => {
            let r = slice_roots_check(model, tol, &dyadic, limits)?;
            let mut table = Table::new(&["slice", "root", "box_slope", "r_squared", "residual"]);
            table.push(vec![
                "unstable".into(),
                sig12(r.unstable_root),
                sig12(r.unstable_box.fit.slope),
                sig12(r.unstable_box.fit.r_squared),
                sig12(r.unstable_residual),
            ]);
            table.push(vec![
                "stable".into(),
                sig12(r.stable_root),
                sig12(r.stable_box.fit.slope),
                sig12(r.stable_box.fit.r_squared),
                sig12(r.stable_residual),
            ]);
            Ok(Outcome {
                table,
                summary: format!(
                    "residuals {} (unstable), {} (stable)",
                    sig12(r.unstable_residual),
                    sig12(r.stable_residual)
                ),
                failed: None,
            })
        }
        ExperimentArg::DimensionBrackets => {
            let mu = target_measure(model, weights, limits)?;
            let rep = dimension_bracket_experiment(
                model,
                &mu,
                block_lengths,
                epsilons,
                tol,
                &KatokOptions::default(),
                None,
                limits,
            )?;
            let mut table = Table::new(&[
                "n",
                "epsilon",
                "retained_fraction",
                "entropy",
                "unstable_root",
                "stable_root",
                "lower",
                "upper",
                "width",
                "target",
                "contains_target",
                "exponents_certified",
            ]);
            for r in &rep.rows {
                table.push(vec![
                    r.block_length.to_string(),
                    sig12(r.epsilon),
                    sig12(r.retained_fraction),
                    sig12(r.entropy),
                    sig12(r.unstable_root),
                    sig12(r.stable_root),
                    sig12(r.lower),
                    sig12(r.upper),
                    sig12(r.width()),
                    sig12(rep.target.total),
                    yes_no(r.contains_target),
                    yes_no(r.exponents_certified),
                ]);
            }
            let last = rep.rows.last().expect("nonempty grid");
            Ok(Outcome {
                table,
                summary: format!(
                    "target {:.4}, final bracket [{:.4}, {:.4}], gap {}",
                    rep.target.total,
                    last.lower,
                    last.upper,
                    sig12(rep.final_gap)
                ),
                failed: None,
            })
        }
    }
}

/// Tolerance for identities that hold exactly up to rounding.
const IDENTITY_TOL: f64 = 1e-9;

fn verify_cmd(mf: &ModelFile, n_max: usize) -> Result<Outcome, CliError> {
    let model = &mf.model;
    let limits = &mf.limits;
    let s = model.subshift();
    let mut table = Table::new(&["certificate", "value", "threshold", "status"]);
    let mut failures = Vec::new();
    let mut row = |name: &str, value: f64, threshold: &str, st: String| {
        if st == "FAIL" {
            failures.push(name.to_string());
        }
        table.push(vec![name.into(), sig12(value), threshold.into(), st]);
    };
    row("model invariants", 0.0, "load", status(true));
    let fam = SingularValueFamily::new(model, FamilyKind::Psi, model.unstable_dim() as f64, 1)?;
    let pot = as_locally_constant(model, &fam, limits)?.map(|v| -v);
    let mu = equilibrium_measure(s, &pot)?;
    let p = mu.pressure().expect("equilibrium carries its pressure");
    let gap = (mu.free_energy(&pot) - p).abs();
    row("variational attainment", gap, "1e-9", status(gap <= IDENTITY_TOL));
    let mut margin = f64::INFINITY;
    for seed in 0..5 {
        let nu = mu.perturbed(seed, 0.3)?;
        margin = margin.min(p - nu.free_energy(&pot));
    }
    row("variational strict margin", margin, ">0", status(margin > 0.0));
    let g = gibbs_certificate(&mu, &pot, p, n_max, limits)?;
    row("gibbs ratio drift", g.ratio_drift, "0.01", status(g.passes()));
    let ug = u_gibbs_certificate(&mu, &pot, p, n_max, limits)?;
    row("u-gibbs ratio drift", ug.ratio_drift, "0.01", status(ug.passes()));
    if model.is_diagonal() {
        let pesin = pesin_check(model, limits)?;
        if pesin.pressure.abs() <= IDENTITY_TOL {
            row(
                "pesin residual",
                pesin.residual,
                "1e-9",
                status(pesin.residual <= IDENTITY_TOL),
            );
        } else {
            // No SRB-analogue: the equilibrium of −ψ^u has nonzero pressure.
            row("pesin residual", pesin.residual, "1e-9", "SKIP".into());
        }
    }
    let stable = bowen::stable_root_identity_check(model, 0, mf.tolerances.root, limits)?;
    row(
        "stable root identity",
        stable.residual,
        "1e-9",
        status(stable.residual <= IDENTITY_TOL),
    );
    // Highest level whose blocks fit the enumeration cap.
    let levels = (0..=limits.max_level.min(3) as usize)
        .take_while(|&k| s.count_words(1 << k).is_ok_and(|c| c <= limits.word_cap as u64))
        .last()
        .unwrap_or(0);
    let seq = root_sequence(model, FamilyKind::Psi, levels, mf.tolerances.root, limits)?;
    let spread = seq.roots.last().expect("nonempty").root - seq.roots[0].root;
    row("root monotonicity", spread, ">=-1e-10", status(seq.nondecreasing));
    let summary = if failures.is_empty() {
        "all certificates PASS".to_string()
    } else {
        format!("FAIL: {}", failures.join(", "))
    };
    let failed = (!failures.is_empty()).then(|| failures.join(", "));
    Ok(Outcome { table, summary, failed })
}

/// Runs a parsed command; returns what was written and the summary line.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let (common, name) = match &cli.command {
        Command::Pressure { common, .. } => (common, "pressure"),
        Command::Root { common, .. } => (common, "root"),
        Command::Dimension { common, .. } => (common, "dimension"),
        Command::Verify { common, .. } => (common, "verify"),
    };
    let mf = load_model(&common.model)?;
    let (outcome, parameters, tol) = match &cli.command {
        Command::Pressure {
            potential,
            param,
            level,
            method,
            zero,
            values,
            length,
            ..
        } => (
            pressure_cmd(&mf, *potential, *param, *level, *method, *zero, values, *length)?,
            serde_json::json!({
                "potential": format!("{potential:?}"), "param": param, "level": level,
                "method": format!("{method:?}"), "zero": zero, "values": values, "length": length,
            }),
            mf.tolerances.root,
        ),
        Command::Root {
            family, levels, tol, ..
        } => {
            let tol = tol.unwrap_or(mf.tolerances.root);
            (
                root_cmd(&mf, *family, *levels, tol)?,
                serde_json::json!({ "family": format!("{family:?}"), "levels": levels, "tol": tol }),
                tol,
            )
        }
        Command::Dimension {
            experiment,
            level,
            epsilon,
            block_lengths,
            samples,
            k_min,
            k_max,
            ratio,
            set,
            weights,
            tol,
            ..
        } => {
            let tol = tol.unwrap_or(mf.tolerances.root);
            (
                dimension_cmd(
                    &mf,
                    *experiment,
                    *level,
                    epsilon,
                    block_lengths,
                    *samples,
                    *k_min,
                    *k_max,
                    *ratio,
                    *set,
                    weights,
                    tol,
                )?,
                serde_json::json!({
                    "experiment": format!("{experiment:?}"), "level": level, "epsilon": epsilon,
                    "n": block_lengths, "samples": samples, "k_min": k_min, "k_max": k_max,
                    "ratio": ratio, "set": format!("{set:?}"), "weights": weights, "tol": tol,
                }),
                tol,
            )
        }
        Command::Verify { n_max, .. } => (
            verify_cmd(&mf, *n_max)?,
            serde_json::json!({ "n_max": n_max }),
            mf.tolerances.root,
        ),
    };
    let manifest = RunManifest {
        command: name.into(),
        parameters,
        library_version: env!("CARGO_PKG_VERSION").into(),
        model_name: mf.name.clone(),
        model_digest: mf.digest.clone(),
        limits: mf.limits,
        root_tolerance: tol,
        rows: 0,
        output_digest: String::new(),
        started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    emit(&outcome.table, manifest, common.out.as_deref())?;
    Ok(outcome)
}

/// Reads `BOWENDIM_THREADS` and sizes the global thread pool.
fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("BOWENDIM_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("BOWENDIM_THREADS must be a positive integer, got {v:?}")))?;
        // A second call in the same process (tests) finds the pool built.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = configure_threads().and_then(|_| run(&cli));
    match result {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            match outcome.failed {
                Some(_) => EXIT_FAILURE,
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
