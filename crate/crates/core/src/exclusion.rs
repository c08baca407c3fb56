//! Linear-programming exclusion of eigenstate-supported and
//! eigenstate-mixture models for the witness fragment, over ontic states
//! that fix one outcome for every fragment measurement.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{primal_residual, solve_lp, verify_farkas, verify_optimal, LinearProgram, LpOutcome, LpStatus, Multipliers};
use crate::ontomodel::QuantumFragment;
use crate::qcore::born;
use crate::witness::{
    build_witness, check_antidistinguishable_with, contradiction_gap, AntidistReport, AntidistSearch, WitnessBundle,
    WitnessParams,
};

pub const MAX_ATOMS: u128 = 1_000_000;
/// Threshold for "strictly positive" mass and for impossible outcomes.
pub const ACCESS_TOL: f64 = 1e-9;
/// Certificates must re-verify to this.
pub const CERT_TOL: f64 = 1e-7;

pub const VERDICT_SCOPE: &str = "within deterministic-response model class";

/// Names used in the witness fragment.
pub const PSI: &str = "psi";
pub const PHI: &str = "phi";
pub const ZERO: &str = "zero";
pub const UNITARY: &str = "u";
pub const ANTIDIST: &str = "antidist";
pub const B_PRIME: &str = "b_prime";
pub const MACRO: &str = "m_q";

/// A certified witness together with the fragment it generates.
#[derive(Clone, Debug)]
pub struct WitnessCase {
    pub bundle: WitnessBundle,
    pub antidist: AntidistReport,
    pub fragment: QuantumFragment,
}

impl WitnessCase {
    pub fn build(alpha: f64, dim: usize) -> Result<Self> {
        Self::build_with(alpha, dim, AntidistSearch::default())
    }

    pub fn build_with(alpha: f64, dim: usize, search: AntidistSearch) -> Result<Self> {
        let bundle = build_witness(WitnessParams::new(alpha, dim)?)?;
        let antidist = check_antidistinguishable_with(&bundle.psi, &bundle.phi, &bundle.zero, search)?;
        Self::from_parts(bundle, antidist)
    }

    pub fn from_parts(bundle: WitnessBundle, antidist: AntidistReport) -> Result<Self> {
        let m = antidist
            .measurement
            .clone()
            .ok_or_else(|| Error::Certification("witness triple is not certified anti-distinguishable".into()))?;
        let d = bundle.params.dim();
        let mut f = QuantumFragment::new(d, MACRO, bundle.basis_bq.clone())?;
        f.add_state(PSI, bundle.psi.clone())?;
        f.add_state(PHI, bundle.phi.clone())?;
        f.add_state(ZERO, bundle.zero.clone())?;
        for k in 0..d {
            let v = bundle.basis_bq.rank_one_vector(k).ok_or_else(|| Error::Construction("macro basis is not rank one".into()))?;
            f.add_state(format!("q{k}"), v)?;
        }
        f.add_unitary(UNITARY, bundle.u.clone())?;
        f.add_measurement(ANTIDIST, m)?;
        f.add_measurement(B_PRIME, bundle.basis_b_prime.clone())?;
        Ok(Self { bundle, antidist, fragment: f })
    }

    pub fn alpha(&self) -> f64 {
        self.bundle.params.alpha()
    }
}

/// One chosen outcome index per fragment measurement, in catalogue order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResponseAtom(pub Vec<usize>);

impl ResponseAtom {
    pub fn labels(&self, fragment: &QuantumFragment) -> Vec<String> {
        fragment.measurements().values().zip(&self.0).map(|(m, &k)| m.outcomes()[k].clone()).collect()
    }
}

/// Cartesian product of outcomes, last measurement varying fastest.
pub fn enumerate_atoms(fragment: &QuantumFragment) -> Result<Vec<ResponseAtom>> {
    let radices: Vec<usize> = fragment.measurements().values().map(|m| m.len()).collect();
    let total = radices.iter().try_fold(1u128, |acc, &r| acc.checked_mul(r as u128)).unwrap_or(u128::MAX);
    if total > MAX_ATOMS {
        return Err(Error::TooManyAtoms(total));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut cur = vec![0usize; radices.len()];
    for _ in 0..total {
        out.push(ResponseAtom(cur.clone()));
        for i in (0..cur.len()).rev() {
            cur[i] += 1;
            if cur[i] < radices[i] {
                break;
            }
            cur[i] = 0;
        }
    }
    Ok(out)
}

/// Born distributions of `state` on every fragment measurement, with
/// probabilities at or below [`ACCESS_TOL`] set to zero and the rest
/// renormalized.
fn marginals(fragment: &QuantumFragment, state: &str) -> Result<Vec<Vec<f64>>> {
    let s = fragment.state(state)?;
    fragment
        .measurements()
        .values()
        .map(|m| {
            let mut p = born(s, m)?;
            p.iter_mut().filter(|x| **x <= ACCESS_TOL).for_each(|x| *x = 0.0);
            let t: f64 = p.iter().sum();
            Ok(p.into_iter().map(|x| x / t).collect())
        })
        .collect()
}

/// Adds rows `Σ_{λ : λ_m = E} x[offset + λ] = scale·p_m(E)` for every
/// measurement `m` and outcome `E`. With `mass = Some(j)` the right-hand side
/// becomes `p_m(E)·Σ_λ x[j + λ]`, moved to the left.
fn marginal_rows(
    lp: &mut LinearProgram,
    offset: usize,
    atoms: &[ResponseAtom],
    marg: &[Vec<f64>],
    mass: Option<usize>,
) {
    let nv = lp.num_vars();
    for (m, probs) in marg.iter().enumerate() {
        for (e, &p) in probs.iter().enumerate() {
            let mut row = vec![0.0; nv];
            for (j, a) in atoms.iter().enumerate() {
                if a.0[m] == e {
                    row[offset + j] += 1.0;
                }
            }
            match mass {
                None => lp.add_eq(row, p),
                Some(base) => {
                    for j in 0..atoms.len() {
                        row[base + j] -= p;
                    }
                    lp.add_eq(row, 0.0);
                }
            }
        }
    }
}

/// Atoms some statistics-reproducing measure for `target` can put positive
/// weight on. Atoms choosing an impossible outcome are dropped up front; each
/// LP solution then marks every atom it loads above [`ACCESS_TOL`], so atoms
/// already seen are not re-solved.
pub fn accessible_atoms(fragment: &QuantumFragment, target: &str, atoms: &[ResponseAtom]) -> Result<Vec<usize>> {
    let marg = marginals(fragment, target)?;
    let candidates: Vec<usize> =
        (0..atoms.len()).filter(|&j| atoms[j].0.iter().enumerate().all(|(m, &e)| marg[m][e] > 0.0)).collect();
    let sub: Vec<ResponseAtom> = candidates.iter().map(|&j| atoms[j].clone()).collect();
    let mut marked = vec![false; sub.len()];
    let mut tried = vec![false; sub.len()];
    for j in 0..sub.len() {
        if marked[j] || tried[j] {
            continue;
        }
        tried[j] = true;
        let mut obj = vec![0.0; sub.len()];
        obj[j] = 1.0;
        let mut lp = LinearProgram::maximize(obj);
        marginal_rows(&mut lp, 0, &sub, &marg, None);
        let out = solve_lp(&lp)?;
        if out.status != LpStatus::Optimal {
            return Err(Error::Certification(format!("accessibility program for `{target}` is {:?}", out.status)));
        }
        for (k, &x) in out.primal.as_deref().unwrap_or_default().iter().enumerate() {
            if x > ACCESS_TOL {
                marked[k] = true;
            }
        }
    }
    Ok(candidates.into_iter().zip(marked).filter(|(_, m)| *m).map(|(j, _)| j).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionMode {
    Esmr,
    Emmr,
    MaxOverlap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EsmrOptions {
    /// Both measures vanish outside the union of the eigenstate sets.
    pub support: bool,
    /// `μ(A_φ) ≥ μ′(A_0)`.
    pub transformation: bool,
}

impl Default for EsmrOptions {
    fn default() -> Self {
        Self { support: true, transformation: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmmrOptions {
    /// Restrict the fragment to the macro observable.
    pub macro_only: bool,
    pub transformation: bool,
}

impl Default for EmmrOptions {
    fn default() -> Self {
        Self { macro_only: false, transformation: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `farkas`, `dual` or `primal`.
    pub kind: String,
    pub multipliers: Option<Multipliers>,
    pub primal: Option<Vec<f64>>,
    pub verification_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomCounts {
    pub total: usize,
    pub eigenstate_union: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub alpha: f64,
    pub mode: ExclusionMode,
    pub status: LpStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimum: Option<f64>,
    pub certificate: Certificate,
    pub atom_counts: AtomCounts,
    pub accessible_set_sizes: BTreeMap<String, usize>,
    /// `2α²`
    pub esmr_requirement: f64,
    /// `α²(1 + 2α²)`
    pub quantum_ceiling: f64,
    pub constraints: Vec<String>,
    pub note: String,
}

impl ExclusionReport {
    pub fn certified(&self) -> bool {
        self.certificate.verification_residual <= CERT_TOL
    }

    /// Plain-text account of the verdict.
    pub fn explain(&self) -> String {
        let a = self.alpha;
        let mut s = format!(
            "alpha = {a}: {:?} program is {:?} ({}).\n",
            self.mode, self.status, VERDICT_SCOPE
        );
        s += &format!(
            "Eigenstate support forces mu(A_0) = mu(A_phi) >= alpha^2, so the union needs {:.6} ; \
             anti-distinguishing responses make A_0 and A_phi disjoint on the support of psi, and B' caps \
             their union at alpha^2 + beta^2 = {:.6}.\n",
            self.esmr_requirement, self.quantum_ceiling
        );
        if let Some(v) = self.optimum {
            s += &format!("LP optimum {v:.12}\n");
        }
        s += &format!(
            "certificate: {} (re-verification residual {:.3e})",
            self.certificate.kind, self.certificate.verification_residual
        );
        s
    }
}

#[derive(Clone, Debug)]
pub struct Exclusion {
    pub program: LinearProgram,
    pub outcome: LpOutcome,
    pub report: ExclusionReport,
}

struct Setup {
    atoms: Vec<ResponseAtom>,
    sets: BTreeMap<String, Vec<usize>>,
    union: BTreeSet<usize>,
    psi: Vec<Vec<f64>>,
}

fn setup(fragment: &QuantumFragment, extra: &[&str]) -> Result<Setup> {
    let atoms = enumerate_atoms(fragment)?;
    let mut sets = BTreeMap::new();
    let q_labels: Vec<String> = (0..fragment.dim()).map(|k| format!("q{k}")).collect();
    for name in q_labels.iter().map(String::as_str).chain(extra.iter().copied()) {
        sets.insert(name.to_string(), accessible_atoms(fragment, name, &atoms)?);
    }
    let union = q_labels.iter().flat_map(|q| sets[q].iter().copied()).collect();
    Ok(Setup { atoms, psi: marginals(fragment, PSI)?, sets, union })
}

fn indicator(n: usize, offset: usize, total: usize, set: &[usize], sign: f64, row: &mut [f64]) {
    debug_assert!(offset + n <= total);
    for &j in set {
        row[offset + j] += sign;
    }
}

fn certify(p: &LinearProgram, out: &LpOutcome) -> Certificate {
    match out.status {
        LpStatus::Infeasible => {
            let y = out.farkas.clone();
            let r = y.as_ref().map_or(f64::INFINITY, |y| verify_farkas(p, y));
            Certificate { kind: "farkas".into(), multipliers: y, primal: None, verification_residual: r }
        }
        LpStatus::Optimal => {
            let x = out.primal.clone().unwrap_or_default();
            let r = out.dual.as_ref().map_or(f64::INFINITY, |y| {
                let c = verify_optimal(p, &x, y);
                c.primal_residual.max(c.dual_residual).max(c.gap)
            });
            Certificate { kind: "dual".into(), multipliers: out.dual.clone(), primal: Some(x), verification_residual: r }
        }
        LpStatus::Feasible => {
            let x = out.primal.clone().unwrap_or_default();
            let r = primal_residual(p, &x);
            Certificate { kind: "primal".into(), multipliers: None, primal: Some(x), verification_residual: r }
        }
        LpStatus::Unbounded => {
            Certificate { kind: "none".into(), multipliers: None, primal: None, verification_residual: f64::INFINITY }
        }
    }
}

fn finish(
    case: &WitnessCase,
    mode: ExclusionMode,
    s: &Setup,
    program: LinearProgram,
    constraints: Vec<String>,
) -> Result<Exclusion> {
    let outcome = solve_lp(&program)?;
    let gap = contradiction_gap(case.alpha())?;
    let report = ExclusionReport {
        alpha: case.alpha(),
        mode,
        status: outcome.status,
        optimum: if outcome.status == LpStatus::Optimal { outcome.value } else { None },
        certificate: certify(&program, &outcome),
        atom_counts: AtomCounts { total: s.atoms.len(), eigenstate_union: s.union.len() },
        accessible_set_sizes: s.sets.iter().map(|(k, v)| (k.clone(), v.len())).collect(),
        esmr_requirement: gap.esmr_lower_bound,
        quantum_ceiling: gap.quantum_upper_bound,
        constraints,
        note: format!("verdict holds {VERDICT_SCOPE}"),
    };
    Ok(Exclusion { program, outcome, report })
}

pub fn exclude_esmr(case: &WitnessCase) -> Result<Exclusion> {
    exclude_esmr_with(case, EsmrOptions::default())
}

/// Two measures over atoms, `μ′` (before `U`) and `μ` (after), both
/// reproducing `ψ`, optionally supported on eigenstate-accessible atoms and
/// tied by `μ(A_φ) ≥ μ′(A_0)`.
pub fn exclude_esmr_with(case: &WitnessCase, opts: EsmrOptions) -> Result<Exclusion> {
    let s = setup(&case.fragment, &[ZERO, PHI])?;
    let n = s.atoms.len();
    let mut lp = LinearProgram::feasibility(2 * n);
    let mut constraints = vec!["reproduce psi (mu', mu)".to_string()];
    marginal_rows(&mut lp, 0, &s.atoms, &s.psi, None);
    marginal_rows(&mut lp, n, &s.atoms, &s.psi, None);
    if opts.support {
        let outside: Vec<usize> = (0..n).filter(|j| !s.union.contains(j)).collect();
        for offset in [0, n] {
            let mut row = vec![0.0; 2 * n];
            indicator(n, offset, 2 * n, &outside, 1.0, &mut row);
            lp.add_eq(row, 0.0);
        }
        constraints.push("eigenstate support".into());
    }
    if opts.transformation {
        let mut row = vec![0.0; 2 * n];
        indicator(n, n, 2 * n, &s.sets[PHI], 1.0, &mut row);
        indicator(n, 0, 2 * n, &s.sets[ZERO], -1.0, &mut row);
        lp.add_ge(row, 0.0);
        constraints.push("mu(A_phi) >= mu'(A_0)".into());
    }
    finish(case, ExclusionMode::Esmr, &s, lp, constraints)
}

pub fn exclude_emmr(case: &WitnessCase) -> Result<Exclusion> {
    exclude_emmr_with(case, EmmrOptions::default())
}

/// Unnormalized eigenstate components `ρ_q` (before `U`) and `σ_q` (after),
/// each proportional to a measure reproducing `|q⟩`, summing to measures
/// that reproduce `ψ`.
pub fn exclude_emmr_with(case: &WitnessCase, opts: EmmrOptions) -> Result<Exclusion> {
    let fragment = if opts.macro_only { case.fragment.macro_only() } else { case.fragment.clone() };
    let s = setup(&fragment, &[ZERO, PHI])?;
    let n = s.atoms.len();
    let d = fragment.dim();
    let total = 2 * d * n;
    let mut lp = LinearProgram::feasibility(total);
    for family in 0..2 {
        for q in 0..d {
            let base = (family * d + q) * n;
            marginal_rows(&mut lp, base, &s.atoms, &marginals(&fragment, &format!("q{q}"))?, Some(base));
        }
        // Σ_q components reproduce ψ.
        let nv = lp.num_vars();
        for (m, probs) in s.psi.iter().enumerate() {
            for (e, &p) in probs.iter().enumerate() {
                let mut row = vec![0.0; nv];
                for q in 0..d {
                    let base = (family * d + q) * n;
                    for (j, a) in s.atoms.iter().enumerate() {
                        if a.0[m] == e {
                            row[base + j] = 1.0;
                        }
                    }
                }
                lp.add_eq(row, p);
            }
        }
    }
    let mut constraints = vec!["eigenstate components".to_string(), "reproduce psi (mu', mu)".into()];
    if opts.transformation {
        let mut row = vec![0.0; total];
        for q in 0..d {
            indicator(n, (d + q) * n, total, &s.sets[PHI], 1.0, &mut row);
            indicator(n, q * n, total, &s.sets[ZERO], -1.0, &mut row);
        }
        lp.add_ge(row, 0.0);
        constraints.push("mu(A_phi) >= mu'(A_0)".into());
    }
    if opts.macro_only {
        constraints.push("macro observable only".into());
    }
    finish(case, ExclusionMode::Emmr, &s, lp, constraints)
}

/// Largest `μ(A_0 ∪ A_φ)` over measures reproducing `ψ`.
pub fn max_overlap(case: &WitnessCase) -> Result<Exclusion> {
    let s = setup(&case.fragment, &[ZERO, PHI])?;
    let n = s.atoms.len();
    let joint: BTreeSet<usize> = s.sets[ZERO].iter().chain(&s.sets[PHI]).copied().collect();
    let obj = (0..n).map(|j| if joint.contains(&j) { 1.0 } else { 0.0 }).collect();
    let mut lp = LinearProgram::maximize(obj);
    marginal_rows(&mut lp, 0, &s.atoms, &s.psi, None);
    finish(case, ExclusionMode::MaxOverlap, &s, lp, vec!["reproduce psi".into()])
}
