//! Command-line front end. [`run`] takes the argument list and a writer for
//! standard output and returns the process exit code: 0 on success, 1 when
//! a result fails certification, 2 on usage or input errors.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use macroreal::exclusion::{
    exclude_emmr_with, exclude_esmr_with, max_overlap, EmmrOptions, EsmrOptions, Exclusion, WitnessCase,
};
use macroreal::lgi::{lgi_scan, LgiModel, K_CONVENTION};
use macroreal::properties::{check_properties, Tolerances};
use macroreal::random::random_case;
use macroreal::witness::{
    build_witness, check_antidistinguishable_with, contradiction_gap, sweep_with, AntidistSearch, WitnessParams,
};
use macroreal::zoo::{
    beltrametti_bugajski_model, born_grid_fragment, deterministic_extension_model, emmr_toy_model,
    kochen_specker_model, lgi_fragment, qubit_fragment, SphereGrid,
};
use macroreal::{classify, validate, Bindings, FiniteOntModel, LpStatus, QuantumFragment};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNCERTIFIED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "macroreal", version, about = "Macro-realism witnesses, exclusion certificates and reference models")]
pub struct Cli {
    /// Seed for the anti-distinguishing search and the random property suite.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build and certify the witness triple for one alpha.
    Witness(WitnessArgs),
    /// Witness coefficients and certificates over a range of alpha, as CSV.
    Sweep(SweepArgs),
    /// Decide the exclusion LP for the witness fragment.
    Exclude(ExcludeArgs),
    /// Build a reference model and write it as JSON.
    Zoo(ZooArgs),
    /// Classify a model read from JSON against a fragment read from JSON.
    Classify(ClassifyArgs),
    /// Leggett-Garg correlators over a grid of per-step angles, as CSV.
    Lgi(LgiArgs),
    /// Run the property suite on seeded random models and the zoo.
    Props(PropsArgs),
}

#[derive(Args, Debug)]
pub struct WitnessArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    /// Output path, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub json: String,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 0.70)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 64)]
    pub steps: usize,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value = "-")]
    pub csv: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Esmr,
    Emmr,
    MaxOverlap,
}

#[derive(Args, Debug)]
pub struct ExcludeArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, value_enum, default_value_t = Mode::Esmr)]
    pub mode: Mode,
    /// Drop the eigenstate-support constraint (esmr only).
    #[arg(long)]
    pub no_support: bool,
    /// Drop the transformation constraint (esmr and emmr).
    #[arg(long)]
    pub no_transformation: bool,
    /// Reproduce only the macro observable (emmr only).
    #[arg(long)]
    pub macro_only: bool,
    /// Also print a plain-text account of the verdict to stdout.
    #[arg(long)]
    pub explain: bool,
    #[arg(long, default_value = "-")]
    pub json: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ZooKind {
    /// Kochen-Specker sphere model.
    Ks,
    /// Beltrametti-Bugajski model.
    Bb,
    /// Deterministic extension on the macro observable.
    Det,
}

#[derive(Args, Debug)]
pub struct ZooArgs {
    #[arg(value_enum)]
    pub kind: ZooKind,
    #[arg(long, default_value_t = 20_000)]
    pub nodes: usize,
    /// Fragment JSON to build on; defaults to the built-in qubit catalogue.
    #[arg(long, conflicts_with = "grid")]
    pub fragment: Option<String>,
    /// Build on a 10 × 5 grid of qubit states and measurements instead.
    #[arg(long)]
    pub grid: bool,
    /// Validate Born statistics and fail if any deviation exceeds `--tol`.
    #[arg(long)]
    pub check_born: bool,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Where to write the model JSON.
    #[arg(long)]
    pub out: Option<String>,
    /// Where to write the fragment the model was built on.
    #[arg(long)]
    pub fragment_out: Option<String>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub fragment: String,
    #[arg(long, default_value = "-")]
    pub json: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LgiKind {
    Quantum,
    Ks,
    EmmrToy,
}

#[derive(Args, Debug)]
pub struct LgiArgs {
    /// Number of angles, evenly spaced on [0, theta-max].
    #[arg(long, default_value_t = 32)]
    pub theta_grid: usize,
    #[arg(long, default_value_t = PI)]
    pub theta_max: f64,
    #[arg(long, value_enum, default_value_t = LgiKind::Quantum)]
    pub model: LgiKind,
    #[arg(long, default_value_t = 20_000)]
    pub nodes: usize,
    #[arg(long, default_value = "-")]
    pub csv: String,
}

#[derive(Args, Debug)]
pub struct PropsArgs {
    /// Number of random models; seeds run from `--seed` upwards.
    #[arg(long, default_value_t = 200)]
    pub count: u64,
    #[arg(long, default_value_t = 20_000)]
    pub nodes: usize,
    #[arg(long, default_value = "-")]
    pub json: String,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = e.print();
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_UNCERTIFIED,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

/// `Ok(false)` means the command ran but its result did not certify.
fn dispatch<W: Write>(cli: &Cli, out: &mut W) -> anyhow::Result<bool> {
    let search = AntidistSearch { seed: cli.seed, ..AntidistSearch::default() };
    match &cli.command {
        Command::Witness(a) => witness(a, search, out),
        Command::Sweep(a) => sweep_cmd(a, search, out),
        Command::Exclude(a) => exclude(a, search, out),
        Command::Zoo(a) => zoo(a, out),
        Command::Classify(a) => classify_cmd(a, out),
        Command::Lgi(a) => lgi(a, out),
        Command::Props(a) => props(a, cli.seed, out),
    }
}

fn emit<W: Write>(path: &str, bytes: &[u8], out: &mut W) -> anyhow::Result<()> {
    if path == "-" {
        out.write_all(bytes)?;
    } else {
        fs::write(path, bytes).with_context(|| format!("writing {path}"))?;
    }
    Ok(())
}

fn emit_json<W: Write>(path: &str, value: &serde_json::Value, out: &mut W) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(path, s.as_bytes(), out)
}

fn read_json<T: DeserializeOwned>(path: &str) -> anyhow::Result<T> {
    let text = fs::read_to_string(Path::new(path)).with_context(|| format!("reading {path}"))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {path}"))
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn witness<W: Write>(a: &WitnessArgs, search: AntidistSearch, out: &mut W) -> anyhow::Result<bool> {
    let bundle = build_witness(WitnessParams::new(a.alpha, a.dim)?)?;
    let residuals = bundle.residuals()?;
    let antidist = check_antidistinguishable_with(&bundle.psi, &bundle.phi, &bundle.zero, search)?;
    let contradiction = contradiction_gap(a.alpha)?;
    let ok = residuals.within_tolerance() && antidist.certified();
    let value = json!({
        "bundle": bundle,
        "residuals": residuals,
        "antidist": antidist,
        "contradiction": contradiction,
        "certified": ok,
    });
    emit_json(&a.json, &value, out)?;
    Ok(ok)
}

fn sweep_cmd<W: Write>(a: &SweepArgs, search: AntidistSearch, out: &mut W) -> anyhow::Result<bool> {
    if a.steps < 2 || a.alpha_max.partial_cmp(&a.alpha_min) != Some(std::cmp::Ordering::Greater) {
        bail!("need --steps >= 2 and --alpha-min < --alpha-max");
    }
    let alphas: Vec<f64> = (0..a.steps)
        .map(|k| a.alpha_min + (a.alpha_max - a.alpha_min) * k as f64 / (a.steps - 1) as f64)
        .collect();
    let rows = sweep_with(&alphas, a.dim, search)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "alpha", "beta", "tau", "delta", "eta", "kappa", "a", "b", "c", "antidist_ok", "esmr_lower", "quantum_upper",
        "deficit",
    ])?;
    let mut ok = true;
    for r in &rows {
        let k = &r.coefficients;
        let certified = r.antidist.certified() && r.residuals.within_tolerance();
        ok &= certified;
        let mut rec: Vec<String> = [r.alpha, k.beta, k.tau, k.delta, k.eta, k.kappa, r.antidist.a, r.antidist.b, r.antidist.c]
            .into_iter()
            .map(float)
            .collect();
        rec.push(certified.to_string());
        rec.extend(
            [r.contradiction.esmr_lower_bound, r.contradiction.quantum_upper_bound, r.contradiction.deficit].map(float),
        );
        w.write_record(&rec)?;
    }
    emit(&a.csv, &w.into_inner()?, out)?;
    Ok(ok)
}

fn exclude<W: Write>(a: &ExcludeArgs, search: AntidistSearch, out: &mut W) -> anyhow::Result<bool> {
    let case = WitnessCase::build_with(a.alpha, a.dim, search)?;
    let relaxed = a.no_support || a.no_transformation || a.macro_only;
    let ex: Exclusion = match a.mode {
        Mode::Esmr => {
            if a.macro_only {
                bail!("--macro-only applies to --mode emmr");
            }
            exclude_esmr_with(&case, EsmrOptions { support: !a.no_support, transformation: !a.no_transformation })?
        }
        Mode::Emmr => {
            if a.no_support {
                bail!("--no-support applies to --mode esmr");
            }
            exclude_emmr_with(&case, EmmrOptions { macro_only: a.macro_only, transformation: !a.no_transformation })?
        }
        Mode::MaxOverlap => {
            if relaxed {
                bail!("relaxation flags do not apply to --mode max-overlap");
            }
            max_overlap(&case)?
        }
    };
    let r = &ex.report;
    let ok = r.certified()
        && match a.mode {
            _ if relaxed => true,
            Mode::Esmr | Mode::Emmr => r.status == LpStatus::Infeasible,
            Mode::MaxOverlap => r.status == LpStatus::Optimal,
        };
    emit_json(&a.json, &serde_json::to_value(r)?, out)?;
    if a.explain {
        writeln!(out, "{}", r.explain())?;
    }
    Ok(ok)
}

fn zoo<W: Write>(a: &ZooArgs, out: &mut W) -> anyhow::Result<bool> {
    let mut fragment = match (&a.fragment, a.grid) {
        (Some(p), _) => read_json::<QuantumFragment>(p)?,
        (None, true) => born_grid_fragment(10, 5)?,
        (None, false) => qubit_fragment(),
    };
    let model = match a.kind {
        ZooKind::Ks => kochen_specker_model(&SphereGrid::fibonacci(a.nodes)?, &fragment)?,
        ZooKind::Bb => beltrametti_bugajski_model(&fragment)?,
        ZooKind::Det => {
            fragment = fragment.macro_only();
            deterministic_extension_model(&fragment)?
        }
    };
    let bindings = Bindings::by_name(&model, &fragment);
    let class = classify(&model, &fragment, &bindings)?;
    let mut summary = json!({
        "model": format!("{:?}", a.kind).to_lowercase(),
        "atoms": model.atoms,
        "classification": class,
    });
    let mut ok = true;
    if a.check_born {
        let v = validate(&model, &fragment, &bindings, a.tol)?;
        ok = v.pass;
        summary["validation"] = json!({
            "max_deviation": v.max_deviation,
            "tolerance": v.tolerance,
            "pass": v.pass,
            "rows": v.rows.len(),
            "worst": v.worst_row(),
        });
    }
    if let Some(p) = &a.out {
        emit(p, serde_json::to_string(&model)?.as_bytes(), out)?;
    }
    if let Some(p) = &a.fragment_out {
        emit(p, serde_json::to_string(&fragment)?.as_bytes(), out)?;
    }
    if a.out.as_deref() != Some("-") && a.fragment_out.as_deref() != Some("-") {
        emit_json("-", &summary, out)?;
    }
    Ok(ok)
}

fn classify_cmd<W: Write>(a: &ClassifyArgs, out: &mut W) -> anyhow::Result<bool> {
    let model: FiniteOntModel = read_json(&a.model)?;
    let fragment: QuantumFragment = read_json(&a.fragment)?;
    let c = classify(&model, &fragment, &Bindings::by_name(&model, &fragment))?;
    emit_json(&a.json, &serde_json::to_value(&c)?, out)?;
    Ok(true)
}

fn lgi<W: Write>(a: &LgiArgs, out: &mut W) -> anyhow::Result<bool> {
    if a.theta_grid < 2 {
        bail!("--theta-grid needs at least 2 points");
    }
    let model = match a.model {
        LgiKind::Quantum => LgiModel::Quantum,
        LgiKind::Ks => LgiModel::Ks { nodes: a.nodes },
        LgiKind::EmmrToy => LgiModel::EmmrToy,
    };
    let thetas: Vec<f64> = (0..a.theta_grid).map(|k| a.theta_max * k as f64 / (a.theta_grid - 1) as f64).collect();
    let rows = lgi_scan(&thetas, model)?;
    let mut buf = format!("# {K_CONVENTION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["theta", "c12", "c23", "c13", "k", "model"])?;
        for r in &rows {
            let mut rec: Vec<String> = [r.theta, r.c12, r.c23, r.c13, r.k].map(float).to_vec();
            rec.push(r.model.clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    emit(&a.csv, &buf, out)?;
    Ok(true)
}

fn props<W: Write>(a: &PropsArgs, seed: u64, out: &mut W) -> anyhow::Result<bool> {
    let reports = (seed..seed + a.count)
        .into_par_iter()
        .map(|s| {
            let c = random_case(s)?;
            check_properties(&c.model, &c.fragment, &c.bindings, Tolerances::EXACT)
        })
        .collect::<macroreal::Result<Vec<_>>>()?;
    let failing: Vec<u64> = (seed..seed + a.count).zip(&reports).filter(|(_, r)| !r.passed()).map(|(s, _)| s).collect();
    let checks: usize = reports.iter().flat_map(|r| r.stats.values()).map(|s| s.checked).sum();
    let violations: usize = reports.iter().map(|r| r.violations()).sum();

    let fragment = qubit_fragment();
    let macro_only = fragment.macro_only();
    let toy_fragment = lgi_fragment(PI / 3.0);
    let ks = kochen_specker_model(&SphereGrid::fibonacci(a.nodes)?, &fragment)?;
    let bb = beltrametti_bugajski_model(&fragment)?;
    let det = deterministic_extension_model(&macro_only)?;
    let toy = emmr_toy_model(PI / 3.0);
    let zoo = [
        ("ks", &ks, &fragment, Tolerances::quadrature(2e-3, 1e-3)),
        ("bb", &bb, &fragment, Tolerances::EXACT),
        ("det", &det, &macro_only, Tolerances::EXACT),
        ("emmr-toy", &toy, &toy_fragment, Tolerances::EXACT),
    ];
    let mut ok = failing.is_empty();
    let mut zoo_json = serde_json::Map::new();
    for (name, model, frag, tol) in zoo {
        let r = check_properties(model, frag, &Bindings::by_name(model, frag), tol)?;
        ok &= r.passed();
        zoo_json.insert(name.into(), serde_json::to_value(&r)?);
    }
    let value = json!({
        "seed": seed,
        "random": {
            "models": a.count,
            "checks": checks,
            "violations": violations,
            "failing_seeds": failing,
        },
        "zoo": zoo_json,
        "passed": ok,
    });
    emit_json(&a.json, &value, out)?;
    Ok(ok)
}
