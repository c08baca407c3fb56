//! Dense complex linear algebra for small Hilbert spaces (2 ≤ d ≤ 16) with
//! Born-rule evaluation.
//!
//! All three types validate their invariants on construction and are
//! immutable afterwards. Serialized forms use `[re, im]` pairs so that the
//! fragment JSON files stay language neutral.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on state normalization.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on structural identities (unitarity, projector algebra).
pub const STRUCT_TOL: f64 = 1e-10;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 16;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

fn check_dim(dim: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

fn check_same(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// A normalized pure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct StateVector {
    amps: CVector,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized to within [`NORM_TOL`].
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        check_dim(amps.len())?;
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL || !norm_sq.is_finite() {
            return Err(Error::InvalidState(format!(
                "squared norm {norm_sq} deviates from 1"
            )));
        }
        Ok(Self { amps: CVector::from_vec(amps) })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        check_dim(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Ok(Self { amps: CVector::from_vec(amps.into_iter().map(|a| a / norm).collect()) })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis vector `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        check_dim(dim)?;
        if k >= dim {
            return Err(Error::Parameter(format!("basis index {k} >= dim {dim}")));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[k] = Complex64::new(1.0, 0.0);
        Self::new(v)
    }

    /// Haar-random state.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        let v = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(v)
    }

    pub(crate) fn from_cvector(v: CVector) -> Result<Self> {
        Self::normalized(v.iter().copied().collect())
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.amps.as_slice()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_same(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Equality of rays: `|⟨x|y⟩| = 1` within `tol`.
    pub fn same_ray(&self, other: &StateVector, tol: f64) -> bool {
        self.dim() == other.dim() && (1.0 - self.amps.dotc(&other.amps).norm()).abs() <= tol
    }

    /// Euclidean distance between amplitude vectors (phase sensitive).
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        check_same(self.dim(), other.dim())?;
        Ok((&self.amps - &other.amps).norm())
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> CMatrix {
        &self.amps * self.amps.adjoint()
    }
}

impl TryFrom<Vec<[f64; 2]>> for StateVector {
    type Error = Error;
    fn try_from(raw: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<StateVector> for Vec<[f64; 2]> {
    fn from(s: StateVector) -> Self {
        s.amps.iter().map(|a| [a.re, a.im]).collect()
    }
}

fn matrix_to_raw(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_raw(raw: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let n = raw.len();
    check_dim(n)?;
    for row in raw {
        check_same(n, row.len())?;
    }
    Ok(CMatrix::from_fn(n, n, |i, j| Complex64::new(raw[i][j][0], raw[i][j][1])))
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A unitary operator on a `dim`-dimensional space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 2]>>", into = "Vec<Vec<[f64; 2]>>")]
pub struct UnitaryMap {
    entries: CMatrix,
}

impl UnitaryMap {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), found: entries.ncols() });
        }
        check_dim(entries.nrows())?;
        let dev = frobenius(&(entries.adjoint() * &entries - CMatrix::identity(entries.nrows(), entries.nrows())));
        if dev > STRUCT_TOL || !dev.is_finite() {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { entries })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Self::new(CMatrix::identity(dim, dim))
    }

    /// Haar-random unitary from the QR decomposition of a Ginibre matrix,
    /// with the phases of `R`'s diagonal folded back into `Q`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        check_dim(dim)?;
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let qr = g.qr();
        let (mut q, r) = qr.unpack();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
        Self::new(q)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn adjoint(&self) -> UnitaryMap {
        UnitaryMap { entries: self.entries.adjoint() }
    }

    pub fn compose(&self, after: &UnitaryMap) -> Result<UnitaryMap> {
        check_same(self.dim(), after.dim())?;
        Ok(UnitaryMap { entries: &after.entries * &self.entries })
    }

    /// `U`, applied `power` times.
    pub fn pow(&self, power: u32) -> UnitaryMap {
        let mut out = CMatrix::identity(self.dim(), self.dim());
        for _ in 0..power {
            out = &self.entries * out;
        }
        UnitaryMap { entries: out }
    }
}

impl TryFrom<Vec<Vec<[f64; 2]>>> for UnitaryMap {
    type Error = Error;
    fn try_from(raw: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        Self::new(matrix_from_raw(&raw)?)
    }
}

impl From<UnitaryMap> for Vec<Vec<[f64; 2]>> {
    fn from(u: UnitaryMap) -> Self {
        matrix_to_raw(&u.entries)
    }
}

#[derive(Serialize, Deserialize)]
struct RawMeasurement {
    outcomes: Vec<String>,
    projectors: Vec<Vec<Vec<[f64; 2]>>>,
}

/// A projective measurement: labelled, mutually orthogonal projectors that
/// sum to the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasurement", into = "RawMeasurement")]
pub struct ProjMeasurement {
    outcomes: Vec<String>,
    projectors: Vec<CMatrix>,
}

impl ProjMeasurement {
    pub fn new(outcomes: Vec<String>, projectors: Vec<CMatrix>) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() != projectors.len() {
            return Err(Error::InvalidMeasurement(format!(
                "{} labels for {} projectors",
                outcomes.len(),
                projectors.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for label in &outcomes {
            if !seen.insert(label) {
                return Err(Error::InvalidMeasurement(format!("duplicate outcome label `{label}`")));
            }
        }
        let dim = projectors[0].nrows();
        check_dim(dim)?;
        let mut sum = CMatrix::zeros(dim, dim);
        for (k, p) in projectors.iter().enumerate() {
            if p.nrows() != dim || p.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.nrows() });
            }
            let herm = frobenius(&(p - p.adjoint()));
            let idem = frobenius(&(p * p - p));
            if herm > STRUCT_TOL || idem > STRUCT_TOL {
                return Err(Error::InvalidMeasurement(format!(
                    "projector `{}` is not a Hermitian idempotent (dev {:.3e}, {:.3e})",
                    outcomes[k], herm, idem
                )));
            }
            for (l, q) in projectors.iter().enumerate().skip(k + 1) {
                let cross = frobenius(&(p * q));
                if cross > STRUCT_TOL {
                    return Err(Error::InvalidMeasurement(format!(
                        "projectors `{}` and `{}` are not orthogonal ({cross:.3e})",
                        outcomes[k], outcomes[l]
                    )));
                }
            }
            sum += p;
        }
        let completeness = frobenius(&(sum - CMatrix::identity(dim, dim)));
        if completeness > STRUCT_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "projectors do not sum to identity ({completeness:.3e})"
            )));
        }
        Ok(Self { outcomes, projectors })
    }

    /// Rank-one measurement in an orthonormal basis.
    pub fn from_basis(outcomes: Vec<String>, basis: &[StateVector]) -> Result<Self> {
        Self::new(outcomes, basis.iter().map(StateVector::projector).collect())
    }

    /// Measurement in the computational basis with labels `prefix0, prefix1, …`.
    pub fn computational(dim: usize, prefix: &str) -> Result<Self> {
        let basis = (0..dim).map(|k| StateVector::basis(dim, k)).collect::<Result<Vec<_>>>()?;
        Self::from_basis((0..dim).map(|k| format!("{prefix}{k}")).collect(), &basis)
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == label)
    }

    /// The measurement `{U P U†}` with the same labels.
    pub fn conjugate(&self, u: &UnitaryMap) -> Result<ProjMeasurement> {
        check_same(self.dim(), u.dim())?;
        let m = u.matrix();
        Ok(ProjMeasurement {
            outcomes: self.outcomes.clone(),
            projectors: self.projectors.iter().map(|p| m * p * m.adjoint()).collect(),
        })
    }

    /// If outcome `k` is a rank-one projector, its (phase-fixed) eigenvector.
    pub fn rank_one_vector(&self, k: usize) -> Option<StateVector> {
        let p = self.projectors.get(k)?;
        let trace: f64 = (0..p.nrows()).map(|i| p[(i, i)].re).sum();
        if (trace - 1.0).abs() > 1e-8 {
            return None;
        }
        let col = (0..p.ncols())
            .max_by(|&a, &b| p[(a, a)].re.total_cmp(&p[(b, b)].re))
            .unwrap();
        StateVector::from_cvector(p.column(col).into_owned()).ok()
    }
}

impl TryFrom<RawMeasurement> for ProjMeasurement {
    type Error = Error;
    fn try_from(raw: RawMeasurement) -> Result<Self> {
        let projectors = raw.projectors.iter().map(|p| matrix_from_raw(p)).collect::<Result<Vec<_>>>()?;
        Self::new(raw.outcomes, projectors)
    }
}

impl From<ProjMeasurement> for RawMeasurement {
    fn from(m: ProjMeasurement) -> Self {
        RawMeasurement {
            outcomes: m.outcomes,
            projectors: m.projectors.iter().map(matrix_to_raw).collect(),
        }
    }
}

/// Born-rule outcome distribution `⟨ψ|P_k|ψ⟩`.
pub fn born(state: &StateVector, meas: &ProjMeasurement) -> Result<Vec<f64>> {
    check_same(meas.dim(), state.dim())?;
    let v = state.as_vector();
    Ok(meas
        .projectors
        .iter()
        .map(|p| v.dotc(&(p * v)).re.clamp(0.0, 1.0))
        .collect())
}

/// `U|ψ⟩`, renormalized to absorb the unitarity tolerance.
pub fn apply(u: &UnitaryMap, state: &StateVector) -> Result<StateVector> {
    check_same(u.dim(), state.dim())?;
    StateVector::from_cvector(u.matrix() * state.as_vector())
}

/// Gram matrix `G_ij = ⟨s_i|s_j⟩`.
pub fn gram(states: &[StateVector]) -> Result<CMatrix> {
    let first = states.first().ok_or(Error::Empty("gram needs at least one state"))?;
    for s in states {
        check_same(first.dim(), s.dim())?;
    }
    let n = states.len();
    Ok(CMatrix::from_fn(n, n, |i, j| states[i].as_vector().dotc(states[j].as_vector())))
}

/// Completes `seed` to an orthonormal basis by Gram–Schmidt over `candidates`
/// followed by the computational basis; vectors that become dependent are
/// skipped.
pub fn complete_basis(seed: &[StateVector], candidates: &[CVector]) -> Result<Vec<StateVector>> {
    let dim = seed.first().map(StateVector::dim).ok_or(Error::Empty("basis seed"))?;
    let mut basis: Vec<CVector> = Vec::with_capacity(dim);
    let computational = (0..dim).map(|k| {
        let mut v = CVector::zeros(dim);
        v[k] = Complex64::new(1.0, 0.0);
        v
    });
    let pool: Vec<CVector> = seed
        .iter()
        .map(|s| s.as_vector().clone())
        .chain(candidates.iter().cloned())
        .chain(computational)
        .collect();
    for (idx, mut v) in pool.into_iter().enumerate() {
        if basis.len() == dim {
            break;
        }
        check_same(dim, v.len())?;
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let n = v.norm();
        if idx < seed.len() {
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidState("basis seed is not orthonormal".into()));
            }
        } else if n < 1e-6 {
            continue;
        }
        basis.push(v / Complex64::new(n, 0.0));
    }
    basis.into_iter().map(StateVector::from_cvector).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eigenstate_is_deterministic() {
        let m = ProjMeasurement::computational(4, "e").unwrap();
        let p = born(&StateVector::basis(4, 0).unwrap(), &m).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn plus_state_is_balanced() {
        let h = 0.5f64.sqrt();
        let plus = StateVector::from_real(&[h, h]).unwrap();
        let p = born(&plus, &ProjMeasurement::computational(2, "z").unwrap()).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pauli_x_flips() {
        let x = UnitaryMap::new(CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])).unwrap();
        let out = apply(&x, &StateVector::basis(2, 0).unwrap()).unwrap();
        assert!(out.distance(&StateVector::basis(2, 1).unwrap()).unwrap() < 1e-15);
        let s = StateVector::random(2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let id = UnitaryMap::identity(2).unwrap();
        assert!(apply(&id, &s).unwrap().distance(&s).unwrap() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(StateVector::from_real(&[1.0, 1.0]), Err(Error::InvalidState(_))));
        assert!(matches!(StateVector::from_real(&[1.0]), Err(Error::UnsupportedDimension(1))));
        let not_unitary = CMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(matches!(UnitaryMap::new(not_unitary), Err(Error::NotUnitary(_))));
        let half = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert!(ProjMeasurement::new(vec!["a".into()], vec![half]).is_err());
        let m = ProjMeasurement::computational(3, "e").unwrap();
        assert!(matches!(
            born(&StateVector::basis(2, 0).unwrap(), &m),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(gram(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn gram_of_basis_is_identity() {
        let basis: Vec<_> = (0..5).map(|k| StateVector::basis(5, k).unwrap()).collect();
        let g = gram(&basis).unwrap();
        assert!(frobenius(&(g - CMatrix::identity(5, 5))) < 1e-15);
        let one = gram(&basis[..1]).unwrap();
        assert_eq!(one.shape(), (1, 1));
        assert!((one[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn completed_basis_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = StateVector::random(6, &mut rng).unwrap();
        let basis = complete_basis(std::slice::from_ref(&s), &[]).unwrap();
        assert_eq!(basis.len(), 6);
        assert!(basis[0].same_ray(&s, 1e-12));
        let g = gram(&basis).unwrap();
        assert!(frobenius(&(g - CMatrix::identity(6, 6))) < 1e-12);
    }

    #[test]
    fn random_unitary_roundtrips_through_json() {
        let u = UnitaryMap::random(3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let text = serde_json::to_string(&u).unwrap();
        let back: UnitaryMap = serde_json::from_str(&text).unwrap();
        assert_eq!(u, back);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn born_is_unitarily_covariant(seed in any::<u64>(), dim in 2usize..=6) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = StateVector::random(dim, &mut rng).unwrap();
                let u = UnitaryMap::random(dim, &mut rng).unwrap();
                let basis = complete_basis(&[StateVector::random(dim, &mut rng).unwrap()], &[]).unwrap();
                let labels = (0..dim).map(|k| k.to_string()).collect();
                let m = ProjMeasurement::from_basis(labels, &basis).unwrap();
                let before = born(&psi, &m).unwrap();
                let after = born(&apply(&u, &psi).unwrap(), &m.conjugate(&u).unwrap()).unwrap();
                for (a, b) in before.iter().zip(&after) {
                    prop_assert!((a - b).abs() <= 1e-10);
                }
            }

            #[test]
            fn born_is_a_distribution(seed in any::<u64>(), dim in 2usize..=16) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = StateVector::random(dim, &mut rng).unwrap();
                let u = UnitaryMap::random(dim, &mut rng).unwrap();
                let m = ProjMeasurement::computational(dim, "e").unwrap().conjugate(&u).unwrap();
                let p = born(&psi, &m).unwrap();
                prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }
}
