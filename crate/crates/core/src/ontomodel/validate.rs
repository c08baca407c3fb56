use serde::{Deserialize, Serialize};

use super::fragment::QuantumFragment;
use super::model::{predict_with, Bindings, FiniteOntModel};
use crate::error::{Error, Result};
use crate::qcore::{apply, born};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub preparation: String,
    /// Map applied before measuring, if any.
    pub map: Option<String>,
    pub measurement: String,
    pub predicted: Vec<f64>,
    pub born: Vec<f64>,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Row attaining the maximum deviation.
    pub worst: Option<usize>,
    pub rows: Vec<ValidationRow>,
}

impl ValidationReport {
    pub fn worst_row(&self) -> Option<&ValidationRow> {
        self.worst.map(|i| &self.rows[i])
    }
}

/// Compares `predict` with the Born rule for every bound preparation and
/// every fragment measurement, both directly and after each bound map.
/// Every fragment state and measurement must be bound.
pub fn validate(
    model: &FiniteOntModel,
    fragment: &QuantumFragment,
    bindings: &Bindings,
    tol: f64,
) -> Result<ValidationReport> {
    model.check()?;
    let mut responses = Vec::new();
    for (mname, meas) in fragment.measurements() {
        let r = bindings
            .response_for(mname)
            .ok_or_else(|| Error::Unbound(format!("measurement `{mname}` has no response function")))?;
        let rows = model.response(r)?;
        if rows.len() != meas.len() {
            return Err(Error::InvalidModel(format!(
                "response `{r}` has {} outcomes, measurement `{mname}` has {}",
                rows.len(),
                meas.len()
            )));
        }
        responses.push((mname, meas, rows));
    }
    for s in fragment.states().keys() {
        if bindings.preparations_of(s).is_empty() {
            return Err(Error::Unbound(format!("state `{s}` has no preparation")));
        }
    }
    let mut rows = Vec::new();
    for (prep, state_name) in &bindings.preparations {
        let state = fragment.state(state_name)?;
        let mu = model.preparation(prep)?;
        let mut images = vec![(None, mu.to_vec(), state.clone())];
        for (map, unitary) in &bindings.maps {
            let u = fragment.unitary(unitary)?;
            images.push((Some(map.clone()), model.map(map)?.apply(mu), apply(u, state)?));
        }
        for (map, nu, psi) in images {
            for (mname, meas, resp) in &responses {
                let predicted = predict_with(&nu, resp);
                let quantum = born(&psi, meas)?;
                let deviation = predicted.iter().zip(&quantum).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                rows.push(ValidationRow {
                    preparation: prep.clone(),
                    map: map.clone(),
                    measurement: (*mname).clone(),
                    predicted,
                    born: quantum,
                    deviation,
                });
            }
        }
    }
    let worst = (0..rows.len()).max_by(|&a, &b| rows[a].deviation.total_cmp(&rows[b].deviation));
    let max_deviation = worst.map_or(0.0, |i| rows[i].deviation);
    Ok(ValidationReport { max_deviation, tolerance: tol, pass: max_deviation <= tol, worst, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{ProjMeasurement, StateVector};

    fn eigen_fragment() -> QuantumFragment {
        let mut f = QuantumFragment::new(2, "z", ProjMeasurement::computational(2, "q").unwrap()).unwrap();
        f.add_state("q0", StateVector::basis(2, 0).unwrap()).unwrap();
        f
    }

    fn one_atom() -> FiniteOntModel {
        let mut m = FiniteOntModel::new(1);
        m.preparations.insert("q0".into(), vec![1.0]);
        m.responses.insert("z".into(), vec![vec![1.0], vec![0.0]]);
        m.eigenstate_preps.insert("q0".into(), vec!["q0".into()]);
        m
    }

    #[test]
    fn deterministic_single_atom_matches_exactly() {
        let (m, f) = (one_atom(), eigen_fragment());
        let r = validate(&m, &f, &Bindings::by_name(&m, &f), 1e-12).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_deviation, 0.0);
        assert_eq!(r.rows.len(), 1);
    }

    #[test]
    fn corrupted_response_names_the_pair() {
        let mut m = one_atom();
        m.responses.insert("z".into(), vec![vec![0.75], vec![0.25]]);
        let f = eigen_fragment();
        let r = validate(&m, &f, &Bindings::by_name(&m, &f), 1e-6).unwrap();
        assert!(!r.pass);
        let w = r.worst_row().unwrap();
        assert_eq!((w.preparation.as_str(), w.measurement.as_str()), ("q0", "z"));
        assert!((r.max_deviation - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unbound_measurement_is_an_error() {
        let m = one_atom();
        let mut f = eigen_fragment();
        f.add_measurement("x", ProjMeasurement::computational(2, "x").unwrap()).unwrap();
        let e = validate(&m, &f, &Bindings::by_name(&m, &f), 1e-6);
        assert!(matches!(e, Err(Error::Unbound(_))));
    }
}
