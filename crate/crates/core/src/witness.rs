//! The four-level witness: two states `|ψ⟩, |φ⟩` with equal overlap `α`
//! against a macro-eigenstate `|0⟩`, the unitary that fixes `|ψ⟩` while
//! carrying `|0⟩` to `|φ⟩`, an anti-distinguishing measurement for the triple,
//! and the arithmetic gap that makes any eigenstate-supported model
//! inconsistent with it.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{born, complete_basis, CMatrix, CVector, ProjMeasurement, StateVector, UnitaryMap};

/// Residual tolerance for an accepted anti-distinguishing measurement.
pub const ANTIDIST_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessParams {
    alpha: f64,
    dim: usize,
}

impl WitnessParams {
    /// Requires `0 < alpha < 1/√2` strictly and `4 ≤ dim ≤ 16`.
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < FRAC_1_SQRT_2) {
            return Err(Error::Parameter(format!("alpha = {alpha} is outside the open interval (0, 1/sqrt 2)")));
        }
        if !(4..=crate::qcore::MAX_DIM).contains(&dim) {
            return Err(Error::Parameter(format!("witness needs 4 <= dim <= 16, got {dim}")));
        }
        Ok(Self { alpha, dim })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Real amplitudes of the witness in the primed basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub delta: f64,
    pub eta: f64,
    pub kappa: f64,
}

impl Coefficients {
    pub fn for_alpha(alpha: f64) -> Self {
        let a2 = alpha * alpha;
        let beta = SQRT_2 * a2;
        let delta = 1.0 - 2.0 * a2;
        let eta = SQRT_2 * alpha;
        Self {
            alpha,
            beta,
            tau: (1.0 - a2 - beta * beta).max(0.0).sqrt(),
            delta,
            eta,
            kappa: (1.0 - delta * delta - eta * eta).max(0.0).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessBundle {
    pub params: WitnessParams,
    pub psi: StateVector,
    pub phi: StateVector,
    pub zero: StateVector,
    /// Outcomes `0, 1', 2', 3', …`; realized as the computational basis.
    pub basis_b_prime: ProjMeasurement,
    /// Macro observable; outcome `q0` is `|0⟩`.
    pub basis_bq: ProjMeasurement,
    pub u: UnitaryMap,
    pub coefficients: Coefficients,
}

/// Largest deviations of the bundle from its defining identities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessResiduals {
    pub normalization: f64,
    pub formulas: f64,
    pub inner_products: f64,
    pub u_zero_to_phi: f64,
    pub u_fixes_psi: f64,
}

impl WitnessResiduals {
    pub fn within_tolerance(&self) -> bool {
        self.normalization <= 1e-12
            && self.formulas <= 1e-14
            && self.inner_products <= 1e-12
            && self.u_zero_to_phi <= 1e-10
            && self.u_fixes_psi <= 1e-10
    }
}

impl WitnessBundle {
    pub fn residuals(&self) -> Result<WitnessResiduals> {
        let k = &self.coefficients;
        let a = k.alpha;
        let norm = |s: &StateVector| (s.as_vector().norm_squared() - 1.0).abs();
        let formulas = [
            (k.beta - SQRT_2 * a * a).abs(),
            (k.delta - (1.0 - 2.0 * a * a)).abs(),
            (k.eta - SQRT_2 * a).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let zero_psi = self.zero.inner(&self.psi)?;
        let phi_psi = self.phi.inner(&self.psi)?;
        let inner_products = (zero_psi - a).norm().max((phi_psi - a).norm());
        Ok(WitnessResiduals {
            normalization: norm(&self.psi).max(norm(&self.phi)).max(norm(&self.zero)),
            formulas,
            inner_products,
            u_zero_to_phi: distance_after(&self.u, &self.zero, &self.phi),
            u_fixes_psi: distance_after(&self.u, &self.psi, &self.psi),
        })
    }

    pub fn states(&self) -> [&StateVector; 3] {
        [&self.psi, &self.phi, &self.zero]
    }
}

/// `‖U|from⟩ − |to⟩‖` without renormalizing the image.
fn distance_after(u: &UnitaryMap, from: &StateVector, to: &StateVector) -> f64 {
    (u.matrix() * from.as_vector() - to.as_vector()).norm()
}

fn real_state(dim: usize, entries: &[(usize, f64)]) -> Result<StateVector> {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    for &(k, x) in entries {
        v[k] = Complex64::new(x, 0.0);
    }
    StateVector::new(v)
}

/// Macro basis: `|0⟩` completed by Gram–Schmidt over the Fourier vectors.
fn macro_basis(zero: &StateVector) -> Result<Vec<StateVector>> {
    let d = zero.dim();
    let fourier: Vec<CVector> = (1..d)
        .map(|k| {
            CVector::from_fn(d, |j, _| {
                Complex64::from_polar(1.0 / (d as f64).sqrt(), 2.0 * std::f64::consts::PI * (k * j) as f64 / d as f64)
            })
        })
        .collect();
    complete_basis(std::slice::from_ref(zero), &fourier)
}

pub fn build_witness(p: WitnessParams) -> Result<WitnessBundle> {
    let k = Coefficients::for_alpha(p.alpha);
    let d = p.dim;
    let psi = real_state(d, &[(0, k.alpha), (1, k.beta), (2, k.tau)])?;
    let phi = real_state(d, &[(0, k.delta), (1, k.eta), (3, k.kappa)])?;
    let zero = StateVector::basis(d, 0)?;
    let mut primed = vec!["0".to_string()];
    primed.extend((1..d).map(|i| format!("{i}'")));
    let computational = (0..d).map(|i| StateVector::basis(d, i)).collect::<Result<Vec<_>>>()?;
    let basis_b_prime = ProjMeasurement::from_basis(primed, &computational)?;
    let bq = macro_basis(&zero)?;
    let basis_bq = ProjMeasurement::from_basis((0..d).map(|i| format!("q{i}")).collect(), &bq)?;
    let u = build_fixing_unitary(&psi, &zero, &phi)?;
    let bundle = WitnessBundle { params: p, psi, phi, zero, basis_b_prime, basis_bq, u, coefficients: k };
    let r = bundle.residuals()?;
    if !r.within_tolerance() {
        return Err(Error::Construction(format!("witness invariants violated: {r:?}")));
    }
    Ok(bundle)
}

/// A unitary with `U|ψ⟩ = |ψ⟩` and `U|0⟩ = |φ⟩`, acting as a rotation in the
/// plane spanned by the components of `|0⟩` and `|φ⟩` orthogonal to `|ψ⟩`
/// and as the identity elsewhere.
pub fn build_fixing_unitary(psi: &StateVector, zero: &StateVector, phi: &StateVector) -> Result<UnitaryMap> {
    let d = psi.dim();
    if zero.dim() != d || phi.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: if zero.dim() != d { zero.dim() } else { phi.dim() } });
    }
    let a0 = zero.inner(psi)?;
    let af = phi.inner(psi)?;
    if (a0 - af).norm() > 1e-12 || a0.im.abs() > 1e-12 || a0.re <= 0.0 {
        return Err(Error::Construction(format!(
            "need <0|psi> = <phi|psi> real positive, got {a0} and {af}"
        )));
    }
    let p = psi.as_vector();
    let mut m = CMatrix::identity(d, d);
    let complement = |s: &StateVector| -> Option<CVector> {
        let v = s.as_vector() - p * p.dotc(s.as_vector());
        let n = v.norm();
        (n > 1e-12).then(|| v / Complex64::new(n, 0.0))
    };
    if let (Some(u), Some(v)) = (complement(zero), complement(phi)) {
        let c = u.dotc(&v);
        let raw = &v - &u * c;
        let t = raw.norm();
        if t < 1e-14 {
            m += &u * u.adjoint() * (c - Complex64::new(1.0, 0.0));
        } else {
            let w = raw / Complex64::new(t, 0.0);
            let w_img = &u * Complex64::new(-t, 0.0) + &w * c.conj();
            m = m - &u * u.adjoint() - &w * w.adjoint() + &v * u.adjoint() + &w_img * w.adjoint();
        }
    }
    let u = UnitaryMap::new(m)?;
    let r0 = distance_after(&u, zero, phi);
    let r1 = distance_after(&u, psi, psi);
    if r0 > 1e-10 || r1 > 1e-10 {
        return Err(Error::Construction(format!("fixing unitary residuals {r0:.3e}, {r1:.3e}")));
    }
    Ok(u)
}

/// Outcome labels of the anti-distinguishing measurement.
pub const ANTIDIST_OUTCOMES: [&str; 4] = ["not_psi", "not_phi", "not_zero", "rest"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntidistReport {
    /// `|⟨ψ|φ⟩|²`
    pub a: f64,
    /// `|⟨ψ|0⟩|²`
    pub b: f64,
    /// `|⟨φ|0⟩|²`
    pub c: f64,
    pub inequality1_ok: bool,
    pub inequality2_ok: bool,
    /// `1 − a − b − c`
    pub slack1: f64,
    /// `(1 − a − b − c)² − 4abc`
    pub slack2: f64,
    pub measurement: Option<ProjMeasurement>,
    /// `⟨ψ|E_¬ψ|ψ⟩, ⟨φ|E_¬φ|φ⟩, ⟨0|E_¬0|0⟩`
    pub residuals: Option<[f64; 3]>,
}

impl AntidistReport {
    pub fn certified(&self) -> bool {
        self.measurement.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AntidistSearch {
    pub seed: u64,
    pub restarts: usize,
}

impl Default for AntidistSearch {
    fn default() -> Self {
        Self { seed: 0, restarts: 24 }
    }
}

pub fn check_antidistinguishable(psi: &StateVector, phi: &StateVector, zero: &StateVector) -> Result<AntidistReport> {
    check_antidistinguishable_with(psi, phi, zero, AntidistSearch::default())
}

pub fn check_antidistinguishable_with(
    psi: &StateVector,
    phi: &StateVector,
    zero: &StateVector,
    search: AntidistSearch,
) -> Result<AntidistReport> {
    let a = psi.overlap(phi)?;
    let b = psi.overlap(zero)?;
    let c = phi.overlap(zero)?;
    let slack1 = 1.0 - a - b - c;
    let slack2 = slack1 * slack1 - 4.0 * a * b * c;
    let inequality1_ok = slack1 > 0.0;
    let inequality2_ok = slack2 >= -1e-12;
    let mut report = AntidistReport {
        a,
        b,
        c,
        inequality1_ok,
        inequality2_ok,
        slack1,
        slack2,
        measurement: None,
        residuals: None,
    };
    if !(inequality1_ok && inequality2_ok) {
        return Ok(report);
    }
    let d = psi.dim();
    if d < 3 {
        return Err(Error::Certification(format!(
            "a projective anti-distinguishing measurement needs dim >= 3, got {d}"
        )));
    }
    let frame = if a.max(b).max(c) <= 1e-12 {
        // Mutually orthogonal triple: each state excludes the next one.
        [phi.as_vector().clone(), zero.as_vector().clone(), psi.as_vector().clone()]
    } else {
        search_frame(psi, phi, zero, search)?
    };
    let mut projectors: Vec<CMatrix> = frame.iter().map(|e| e * e.adjoint()).collect();
    let used = projectors.iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p);
    projectors.push(CMatrix::identity(d, d) - used);
    let meas = ProjMeasurement::new(ANTIDIST_OUTCOMES.iter().map(|s| s.to_string()).collect(), projectors)?;
    let residuals = [born(psi, &meas)?[0], born(phi, &meas)?[1], born(zero, &meas)?[2]];
    if residuals.iter().any(|&r| r > ANTIDIST_TOL) {
        return Err(Error::Certification(format!(
            "anti-distinguishing search reached residuals {residuals:?}"
        )));
    }
    report.measurement = Some(meas);
    report.residuals = Some(residuals);
    Ok(report)
}

/// Orthonormal basis (as columns of a `d×3` isometry) of a three-dimensional
/// subspace containing the triple.
fn span_isometry(states: [&StateVector; 3]) -> Vec<CVector> {
    let d = states[0].dim();
    let mut out: Vec<CVector> = Vec::with_capacity(3);
    let extra = (0..d).map(|k| {
        let mut v = CVector::zeros(d);
        v[k] = Complex64::new(1.0, 0.0);
        v
    });
    for mut v in states.iter().map(|s| s.as_vector().clone()).chain(extra) {
        if out.len() == 3 {
            break;
        }
        for _ in 0..2 {
            for e in &out {
                let c = e.dotc(&v);
                v -= e * c;
            }
        }
        let n = v.norm();
        if n > 1e-9 {
            out.push(v / Complex64::new(n, 0.0));
        }
    }
    out
}

/// Gram–Schmidt frame of three complex 3-vectors packed into 18 reals.
fn frame_from_params(x: &[f64]) -> Option<[nalgebra::Vector3<Complex64>; 3]> {
    let mut out = [nalgebra::Vector3::zeros(); 3];
    for k in 0..3 {
        let mut v = nalgebra::Vector3::from_fn(|i, _| Complex64::new(x[6 * k + 2 * i], x[6 * k + 2 * i + 1]));
        for e in out.iter().take(k) {
            let c = e.dotc(&v);
            v -= e * c;
        }
        let n = v.norm();
        if n < 1e-12 {
            return None;
        }
        out[k] = v / Complex64::new(n, 0.0);
    }
    Some(out)
}

/// Local search for an orthonormal frame `e_ψ ⊥ ψ`, `e_φ ⊥ φ`, `e_0 ⊥ 0`
/// inside the span of the triple. Damped Gauss–Newton from seeded starts;
/// the best frame over all restarts is returned.
fn search_frame(
    psi: &StateVector,
    phi: &StateVector,
    zero: &StateVector,
    search: AntidistSearch,
) -> Result<[CVector; 3]> {
    let iso = span_isometry([psi, phi, zero]);
    let coords = |s: &StateVector| nalgebra::Vector3::from_fn(|i, _| iso[i].dotc(s.as_vector()));
    let targets = [coords(psi), coords(phi), coords(zero)];
    let residual = |x: &[f64]| -> Option<Vec<f64>> {
        let f = frame_from_params(x)?;
        Some(
            (0..3)
                .flat_map(|k| {
                    let z = f[k].dotc(&targets[k]);
                    [z.re, z.im]
                })
                .collect(),
        )
    };
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..search.restarts.max(1) {
        let x0: Vec<f64> = (0..18).map(|_| rng.random_range(-1.0..1.0)).collect();
        if let Some((cost, x)) = gauss_newton(&residual, x0) {
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, x));
            }
            if cost <= 1e-24 {
                break;
            }
        }
    }
    let (_, x) = best.ok_or_else(|| Error::Certification("anti-distinguishing search diverged".into()))?;
    let f = frame_from_params(&x).ok_or_else(|| Error::Certification("degenerate frame".into()))?;
    let lift = |e: &nalgebra::Vector3<Complex64>| -> CVector {
        iso.iter().enumerate().fold(CVector::zeros(psi.dim()), |acc, (i, col)| acc + col * e[i])
    };
    Ok([lift(&f[0]), lift(&f[1]), lift(&f[2])])
}

/// Levenberg–Marquardt on `½‖r(x)‖²` with a central-difference Jacobian.
fn gauss_newton(r: &dyn Fn(&[f64]) -> Option<Vec<f64>>, mut x: Vec<f64>) -> Option<(f64, Vec<f64>)> {
    let n = x.len();
    let cost_of = |v: &[f64]| v.iter().map(|z| z * z).sum::<f64>();
    let mut res = r(&x)?;
    let mut cost = cost_of(&res);
    let mut lambda = 1e-3;
    for _ in 0..400 {
        if cost <= 1e-28 {
            break;
        }
        let m = res.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (rp, rm) = (r(&xp)?, r(&xm)?);
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = DVector::from_vec(res.clone());
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &rv;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Some(tr) = r(&trial) {
                let tc = cost_of(&tr);
                if tc < cost {
                    x = trial;
                    res = tr;
                    cost = tc;
                    lambda = (lambda * 0.3).max(1e-15);
                    improved = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Some((cost, x))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContradictionReport {
    pub alpha: f64,
    /// `2α²`: what eigenstate-supported models force for the joint overlap.
    pub esmr_lower_bound: f64,
    /// `α² + β² = α²(1 + 2α²)`: the quantum ceiling on the same quantity.
    pub quantum_upper_bound: f64,
    /// `lower − upper = α²(1 − 2α²)`.
    pub deficit: f64,
}

/// Gap between the two bounds; `alpha` may sit on the closed interval
/// `[0, 1/√2]` here so the zero-gap endpoints can be checked.
pub fn contradiction_gap(alpha: f64) -> Result<ContradictionReport> {
    if !(0.0..=FRAC_1_SQRT_2).contains(&alpha) {
        return Err(Error::Parameter(format!("alpha = {alpha} is outside [0, 1/sqrt 2]")));
    }
    let a2 = alpha * alpha;
    let beta = SQRT_2 * a2;
    let lower = 2.0 * a2;
    let upper = a2 + beta * beta;
    Ok(ContradictionReport { alpha, esmr_lower_bound: lower, quantum_upper_bound: upper, deficit: lower - upper })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub coefficients: Coefficients,
    pub residuals: WitnessResiduals,
    pub antidist: AntidistReport,
    pub contradiction: ContradictionReport,
}

/// One row per alpha, in input order. Rows are computed in parallel.
pub fn sweep(alphas: &[f64], dim: usize) -> Result<Vec<SweepRow>> {
    sweep_with(alphas, dim, AntidistSearch::default())
}

pub fn sweep_with(alphas: &[f64], dim: usize, search: AntidistSearch) -> Result<Vec<SweepRow>> {
    alphas
        .par_iter()
        .enumerate()
        .map(|(index, &alpha)| {
            sweep_row(alpha, dim, search).map_err(|e| Error::Row { index, source: Box::new(e) })
        })
        .collect()
}

fn sweep_row(alpha: f64, dim: usize, search: AntidistSearch) -> Result<SweepRow> {
    let bundle = build_witness(WitnessParams::new(alpha, dim)?)?;
    Ok(SweepRow {
        alpha,
        coefficients: bundle.coefficients,
        residuals: bundle.residuals()?,
        antidist: check_antidistinguishable_with(&bundle.psi, &bundle.phi, &bundle.zero, search)?,
        contradiction: contradiction_gap(alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{apply, gram};

    #[test]
    #[allow(clippy::approx_constant)]
    fn coefficients_at_one_half() {
        let b = build_witness(WitnessParams::new(0.5, 4).unwrap()).unwrap();
        let k = b.coefficients;
        // β = √2/4, τ = √(5/8), δ = 1/2, η = √2/2, κ = 1/2.
        let expected = [0.5, 0.353_553_39, 0.790_569_42, 0.5, 0.707_106_78, 0.5];
        let got = [k.alpha, k.beta, k.tau, k.delta, k.eta, k.kappa];
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 5e-9, "{got:?}");
        }
        // Independent normalization check.
        assert!((k.alpha.powi(2) + k.beta.powi(2) + k.tau.powi(2) - 1.0).abs() < 1e-15);
        assert!((k.delta.powi(2) + k.eta.powi(2) + k.kappa.powi(2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi_psi_overlap_equals_alpha() {
        let b = build_witness(WitnessParams::new(0.1, 4).unwrap()).unwrap();
        // δα + ηβ = α(1 − 2α²) + 2α³ = α.
        assert!((b.phi.inner(&b.psi).unwrap().re - 0.1).abs() < 1e-12);
    }

    #[test]
    fn boundary_alpha_is_rejected() {
        assert!(matches!(WitnessParams::new(FRAC_1_SQRT_2, 4), Err(Error::Parameter(_))));
        assert!(matches!(WitnessParams::new(0.0, 4), Err(Error::Parameter(_))));
        assert!(matches!(WitnessParams::new(0.3, 3), Err(Error::Parameter(_))));
    }

    #[test]
    fn born_in_primed_basis() {
        let b = build_witness(WitnessParams::new(0.5, 4).unwrap()).unwrap();
        let p = born(&b.psi, &b.basis_b_prime).unwrap();
        for (x, e) in p.iter().zip([0.25, 0.125, 0.625, 0.0]) {
            assert!((x - e).abs() < 1e-12);
        }
        // Direct matrix-vector oracle.
        for (i, x) in p.iter().enumerate() {
            assert!((x - b.psi.amplitudes()[i].norm_sqr()).abs() < 1e-15);
        }
    }

    #[test]
    fn gram_matches_formulas() {
        let b = build_witness(WitnessParams::new(0.5, 4).unwrap()).unwrap();
        let g = gram(&[b.psi.clone(), b.phi.clone(), b.zero.clone()]).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((g[(i, j)].norm_sqr() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn fixing_unitary_maps_zero_to_phi() {
        for alpha in [0.3, 0.5] {
            let b = build_witness(WitnessParams::new(alpha, 4).unwrap()).unwrap();
            let u = &b.u;
            assert!(distance_after(u, &b.zero, &b.phi) <= 1e-10);
            assert!(distance_after(u, &b.psi, &b.psi) <= 1e-10);
            let dev = (u.matrix().adjoint() * u.matrix() - CMatrix::identity(4, 4)).norm();
            assert!(dev <= 1e-10);
            assert!(apply(u, &b.zero).unwrap().distance(&b.phi).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn fixing_unitary_identity_case() {
        let b = build_witness(WitnessParams::new(0.4, 5).unwrap()).unwrap();
        let u = build_fixing_unitary(&b.psi, &b.zero, &b.zero).unwrap();
        assert!((u.matrix() - CMatrix::identity(5, 5)).norm() < 1e-12);
    }

    #[test]
    fn fixing_unitary_rejects_unequal_overlaps() {
        let b = build_witness(WitnessParams::new(0.4, 4).unwrap()).unwrap();
        let other = StateVector::basis(4, 3).unwrap();
        assert!(matches!(build_fixing_unitary(&b.psi, &b.zero, &other), Err(Error::Construction(_))));
    }

    #[test]
    fn orthonormal_triple_is_antidistinguishable() {
        let s: Vec<_> = (0..3).map(|k| StateVector::basis(4, k).unwrap()).collect();
        let r = check_antidistinguishable(&s[0], &s[1], &s[2]).unwrap();
        assert!(r.certified());
        assert_eq!(r.residuals.unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn witness_triple_saturates_second_inequality() {
        let b = build_witness(WitnessParams::new(0.5, 4).unwrap()).unwrap();
        let r = check_antidistinguishable(&b.psi, &b.phi, &b.zero).unwrap();
        assert!((r.a - 0.25).abs() < 1e-12 && (r.b - 0.25).abs() < 1e-12 && (r.c - 0.25).abs() < 1e-12);
        assert!((r.slack1 - 0.25).abs() < 1e-12);
        assert!(r.slack2.abs() < 1e-12);
        assert!(r.residuals.unwrap().iter().all(|&x| x <= ANTIDIST_TOL));
    }

    #[test]
    fn heavy_overlap_triple_fails_first_inequality() {
        // Three real unit vectors with pairwise squared overlap 0.4.
        let g = 0.4f64.sqrt();
        let x = StateVector::from_real(&[1.0, 0.0, 0.0]).unwrap();
        let y = StateVector::from_real(&[g, (1.0 - g * g).sqrt(), 0.0]).unwrap();
        let y2 = (g - g * g) / (1.0 - g * g).sqrt();
        let z = StateVector::from_real(&[g, y2, (1.0 - g * g - y2 * y2).sqrt()]).unwrap();
        let r = check_antidistinguishable(&x, &y, &z).unwrap();
        assert!((r.a + r.b + r.c - 1.2).abs() < 1e-12);
        assert!(!r.inequality1_ok && r.measurement.is_none());
    }

    #[test]
    fn qubit_trine_cannot_be_certified_projectively() {
        let trine = |t: f64| StateVector::from_real(&[t.cos(), t.sin()]).unwrap();
        let third = std::f64::consts::PI / 3.0;
        let r = check_antidistinguishable(&trine(0.0), &trine(third), &trine(2.0 * third));
        assert!(matches!(r, Err(Error::Certification(_))));
    }

    #[test]
    fn deficit_peaks_at_one_half() {
        assert!((contradiction_gap(0.5).unwrap().deficit - 0.125).abs() < 1e-15);
        assert!(contradiction_gap(FRAC_1_SQRT_2).unwrap().deficit.abs() < 1e-15);
        assert!(contradiction_gap(1e-6).unwrap().deficit < 1e-11);
        assert!(contradiction_gap(0.8).is_err());
    }

    #[test]
    fn sweep_preserves_order_and_reports_row() {
        assert!(sweep(&[], 4).unwrap().is_empty());
        let rows = sweep(&[0.2, 0.4, 0.6], 4).unwrap();
        assert_eq!(rows.iter().map(|r| r.alpha).collect::<Vec<_>>(), vec![0.2, 0.4, 0.6]);
        let err = sweep(&[0.2, 0.9], 4).unwrap_err();
        assert!(matches!(err, Error::Row { index: 1, .. }));
    }
}
