//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line
//! with its measurements and wall time; the test fails if any criterion does.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::{Duration, Instant};

use macroreal::exclusion::{exclude_emmr, exclude_emmr_with, exclude_esmr, max_overlap, EmmrOptions, WitnessCase};
use macroreal::lgi::{lgi_point, LgiModel};
use macroreal::properties::{check_properties, PropertyReport, Tolerances};
use macroreal::random::random_case;
use macroreal::witness::{contradiction_gap, sweep};
use macroreal::zoo::{
    beltrametti_bugajski_model, born_grid_fragment, deterministic_extension_model, emmr_toy_model,
    kochen_specker_model, lgi_fragment, qubit_fragment, SphereGrid,
};
use macroreal::{classify, validate, Bindings, LpStatus, MacroRealism};
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed < budget;
    let pass = out.pass && in_time;
    println!(
        "{} criterion {id} {name}: {} [{:.2} s of {:.0} s]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    pass
}

fn alphas() -> Vec<f64> {
    (0..64).map(|k| 0.05 + 0.65 * k as f64 / 63.0).filter(|a| *a < FRAC_1_SQRT_2).collect()
}

fn witness_sweep() -> Outcome {
    let rows = sweep(&alphas(), 4).expect("sweep");
    let mut worst = [0.0f64; 4];
    let mut pass = rows.len() == 64;
    for r in &rows {
        let res = r.residuals;
        worst[0] = worst[0].max(res.normalization).max(res.inner_products);
        worst[1] = worst[1].max(res.u_zero_to_phi).max(res.u_fixes_psi);
        let ad = r.antidist.residuals.map_or(f64::INFINITY, |x| x.into_iter().fold(0.0, f64::max));
        worst[2] = worst[2].max(ad);
        worst[3] = worst[3].max(r.antidist.slack2.abs());
        pass &= res.within_tolerance() && r.antidist.certified();
    }
    pass &= worst[0] <= 1e-12 && worst[1] <= 1e-10 && worst[2] <= 1e-8 && worst[3] <= 1e-12;
    Outcome {
        pass,
        detail: format!(
            "{} alphas, state residual {:.1e}, unitary residual {:.1e}, anti-distinguishing residual {:.1e}, |slack2| {:.1e}",
            rows.len(),
            worst[0],
            worst[1],
            worst[2],
            worst[3]
        ),
    }
}

fn contradiction() -> Outcome {
    let mut worst = 0.0f64;
    let mut peak = (0.0, f64::NEG_INFINITY);
    for a in alphas().into_iter().chain([0.5]) {
        let g = contradiction_gap(a).expect("gap");
        worst = worst.max((g.deficit - a * a * (1.0 - 2.0 * a * a)).abs());
        if g.deficit > peak.1 {
            peak = (a, g.deficit);
        }
    }
    let at_half = contradiction_gap(0.5).expect("gap").deficit;
    Outcome {
        pass: worst <= 1e-14 && (at_half - 0.125).abs() <= 1e-14 && peak.1 <= 0.125 + 1e-14,
        detail: format!("closed-form error {worst:.1e}, deficit(0.5) = {at_half}, sweep maximum {:.6} at {:.4}", peak.1, peak.0),
    }
}

fn exclusion() -> Outcome {
    let mut lps = 0;
    let mut pass = true;
    let mut worst_cert = 0.0f64;
    let mut overlap_err = 0.0f64;
    let mut at_half = f64::NAN;
    let mut atoms = 0;
    for alpha in [0.3, 0.5, 0.6] {
        let case = WitnessCase::build(alpha, 4).expect("witness case");
        for ex in [exclude_esmr(&case).expect("esmr"), exclude_emmr(&case).expect("emmr")] {
            lps += 1;
            pass &= ex.report.status == LpStatus::Infeasible && ex.report.certified();
            worst_cert = worst_cert.max(ex.report.certificate.verification_residual);
            atoms = ex.report.atom_counts.total;
        }
        let m = max_overlap(&case).expect("max overlap");
        lps += 1;
        let value = m.report.optimum.unwrap_or(f64::NAN);
        let target = alpha * alpha * (1.0 + 2.0 * alpha * alpha);
        overlap_err = overlap_err.max((value - target).abs());
        if alpha == 0.5 {
            at_half = value;
        }
        let control = exclude_emmr_with(&case, EmmrOptions { macro_only: true, ..Default::default() }).expect("control");
        lps += 1;
        pass &= control.report.status == LpStatus::Feasible;
    }
    pass &= overlap_err <= 1e-7 && lps <= 200;
    Outcome {
        pass,
        detail: format!(
            "{lps} LPs over {atoms} atoms, ESMR/EMMR infeasible with certificate residual {worst_cert:.1e}, \
             max overlap error {overlap_err:.1e} ({at_half:.9} at 0.5), macro-only control feasible"
        ),
    }
}

fn summarize(label: &str, r: &PropertyReport) -> String {
    let checked: usize = r.stats.values().map(|s| s.checked).sum();
    format!("{label}: {checked} checks, {} violations", r.violations())
}

fn property_suite() -> Outcome {
    let reports: Vec<PropertyReport> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let c = random_case(seed).expect("random case");
            check_properties(&c.model, &c.fragment, &c.bindings, Tolerances::EXACT).expect("properties")
        })
        .collect();
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let checks: usize = reports.iter().flat_map(|r| r.stats.values()).map(|s| s.checked).sum();
    let additivity: usize = reports.iter().map(|r| r.stats[&macroreal::properties::Property::Additivity].checked).sum();

    let fragment = qubit_fragment();
    let grid = SphereGrid::fibonacci(20_000).expect("grid");
    let ks = kochen_specker_model(&grid, &fragment).expect("ks");
    let bb = beltrametti_bugajski_model(&fragment).expect("bb");
    let macro_only = fragment.macro_only();
    let det = deterministic_extension_model(&macro_only).expect("det");
    let toy_fragment = lgi_fragment(PI / 3.0);
    let toy = emmr_toy_model(PI / 3.0);
    let zoo = [
        ("ks", check_properties(&ks, &fragment, &Bindings::by_name(&ks, &fragment), Tolerances::quadrature(2e-3, 1e-3))),
        ("bb", check_properties(&bb, &fragment, &Bindings::by_name(&bb, &fragment), Tolerances::EXACT)),
        ("det", check_properties(&det, &macro_only, &Bindings::by_name(&det, &macro_only), Tolerances::EXACT)),
        ("emmr-toy", check_properties(&toy, &toy_fragment, &Bindings::by_name(&toy, &toy_fragment), Tolerances::EXACT)),
    ];
    let mut pass = failed == 0 && additivity > 0;
    let mut parts = vec![format!("200 random models: {checks} checks ({additivity} additivity), {failed} failing")];
    for (name, r) in zoo {
        let r = r.expect("zoo properties");
        pass &= r.passed();
        parts.push(summarize(name, &r));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn zoo_fidelity() -> Outcome {
    let grid = SphereGrid::fibonacci(20_000).expect("grid");
    let born_grid = born_grid_fragment(10, 5).expect("born grid");
    let pairs = born_grid.states().len() * born_grid.measurements().len();
    let ks_grid = kochen_specker_model(&grid, &born_grid).expect("ks");
    let v = validate(&ks_grid, &born_grid, &Bindings::by_name(&ks_grid, &born_grid), 1e-3).expect("validate");

    let fragment = qubit_fragment();
    let ks = kochen_specker_model(&grid, &fragment).expect("ks");
    let ks_bind = Bindings::by_name(&ks, &fragment);
    let v2 = validate(&ks, &fragment, &ks_bind, 1e-3).expect("validate");
    let ks_class = classify(&ks, &fragment, &ks_bind).expect("classify");
    let bb = beltrametti_bugajski_model(&fragment).expect("bb");
    let bb_class = classify(&bb, &fragment, &Bindings::by_name(&bb, &fragment)).expect("classify").class;
    let macro_only = fragment.macro_only();
    let det = deterministic_extension_model(&macro_only).expect("det");
    let det_class = classify(&det, &macro_only, &Bindings::by_name(&det, &macro_only)).expect("classify").class;

    let pass = pairs == 50
        && v.pass
        && v2.pass
        && ks_class.class == MacroRealism::Esmr
        && ks_class.max_mixture_residual > 0.01
        && bb_class == MacroRealism::None
        && det_class == MacroRealism::Ssmr;
    Outcome {
        pass,
        detail: format!(
            "KS Born deviation {:.2e} over {pairs} pairs ({:.2e} on the default catalogue incl. maps), \
             KS {} (mixture residual {:.3}), BB {bb_class}, deterministic extension {det_class}",
            v.max_deviation, v2.max_deviation, ks_class.class, ks_class.max_mixture_residual
        ),
    }
}

fn lgi_landscape() -> Outcome {
    let grid = SphereGrid::fibonacci(20_000).expect("grid");
    let q = lgi_point(PI / 3.0, LgiModel::Quantum, None).expect("quantum").k;
    let ks = lgi_point(PI / 3.0, LgiModel::Ks { nodes: 20_000 }, Some(&grid)).expect("ks").k;
    let toy_max = (0..32)
        .map(|k| lgi_point(PI * k as f64 / 31.0, LgiModel::EmmrToy, None).expect("toy").k)
        .fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: (q - 1.5).abs() <= 5e-3 && (ks - 1.5).abs() <= 5e-3 && toy_max <= 1.0 + 1e-9,
        detail: format!("K(pi/3) quantum {q:.6}, KS {ks:.6}; EMMR toy max K over 32 angles {toy_max:.12}"),
    }
}

#[test]
fn acceptance() {
    let results = [
        run(1, "witness certification sweep", Duration::from_secs(5), witness_sweep),
        run(2, "contradiction gap", Duration::from_secs(1), contradiction),
        run(3, "LP exclusion", Duration::from_secs(10), exclusion),
        run(4, "property suite", Duration::from_secs(30), property_suite),
        run(5, "zoo fidelity", Duration::from_secs(60), zoo_fidelity),
        run(6, "LGI landscape", Duration::from_secs(60), lgi_landscape),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, p)| !**p).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
