use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{ProjMeasurement, StateVector, UnitaryMap};

/// Catalogue of states, unitaries and measurements a model must reproduce,
/// with one measurement designated as the macro observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFragment", into = "RawFragment")]
pub struct QuantumFragment {
    dim: usize,
    states: BTreeMap<String, StateVector>,
    unitaries: BTreeMap<String, UnitaryMap>,
    measurements: BTreeMap<String, ProjMeasurement>,
    macro_observable: String,
}

#[derive(Serialize, Deserialize)]
struct RawFragment {
    dim: usize,
    states: BTreeMap<String, StateVector>,
    #[serde(default)]
    unitaries: BTreeMap<String, UnitaryMap>,
    measurements: BTreeMap<String, ProjMeasurement>,
    macro_observable: String,
}

impl TryFrom<RawFragment> for QuantumFragment {
    type Error = Error;
    fn try_from(raw: RawFragment) -> Result<Self> {
        let macro_meas = raw
            .measurements
            .get(&raw.macro_observable)
            .cloned()
            .ok_or_else(|| Error::UnknownName { kind: "measurement", name: raw.macro_observable.clone() })?;
        let mut f = QuantumFragment::new(raw.dim, raw.macro_observable, macro_meas)?;
        for (k, v) in raw.states {
            f.add_state(k, v)?;
        }
        for (k, v) in raw.unitaries {
            f.add_unitary(k, v)?;
        }
        for (k, v) in raw.measurements {
            f.add_measurement(k, v)?;
        }
        Ok(f)
    }
}

impl From<QuantumFragment> for RawFragment {
    fn from(f: QuantumFragment) -> Self {
        RawFragment {
            dim: f.dim,
            states: f.states,
            unitaries: f.unitaries,
            measurements: f.measurements,
            macro_observable: f.macro_observable,
        }
    }
}

impl QuantumFragment {
    pub fn new(dim: usize, macro_name: impl Into<String>, macro_observable: ProjMeasurement) -> Result<Self> {
        let macro_name = macro_name.into();
        let mut f = Self {
            dim,
            states: BTreeMap::new(),
            unitaries: BTreeMap::new(),
            measurements: BTreeMap::new(),
            macro_observable: macro_name.clone(),
        };
        f.add_measurement(macro_name, macro_observable)?;
        Ok(f)
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found });
        }
        Ok(())
    }

    pub fn add_state(&mut self, name: impl Into<String>, s: StateVector) -> Result<()> {
        self.check_dim(s.dim())?;
        self.states.insert(name.into(), s);
        Ok(())
    }

    pub fn add_unitary(&mut self, name: impl Into<String>, u: UnitaryMap) -> Result<()> {
        self.check_dim(u.dim())?;
        self.unitaries.insert(name.into(), u);
        Ok(())
    }

    pub fn add_measurement(&mut self, name: impl Into<String>, m: ProjMeasurement) -> Result<()> {
        self.check_dim(m.dim())?;
        let name = name.into();
        if name == self.macro_observable && self.measurements.get(&name).is_some_and(|old| old != &m) {
            return Err(Error::InvalidMeasurement(format!("cannot replace the macro observable `{name}`")));
        }
        self.measurements.insert(name, m);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &BTreeMap<String, StateVector> {
        &self.states
    }

    pub fn unitaries(&self) -> &BTreeMap<String, UnitaryMap> {
        &self.unitaries
    }

    pub fn measurements(&self) -> &BTreeMap<String, ProjMeasurement> {
        &self.measurements
    }

    pub fn macro_name(&self) -> &str {
        &self.macro_observable
    }

    pub fn macro_measurement(&self) -> &ProjMeasurement {
        &self.measurements[&self.macro_observable]
    }

    pub fn state(&self, name: &str) -> Result<&StateVector> {
        self.states.get(name).ok_or_else(|| Error::UnknownName { kind: "state", name: name.into() })
    }

    pub fn unitary(&self, name: &str) -> Result<&UnitaryMap> {
        self.unitaries.get(name).ok_or_else(|| Error::UnknownName { kind: "unitary", name: name.into() })
    }

    pub fn measurement(&self, name: &str) -> Result<&ProjMeasurement> {
        self.measurements.get(name).ok_or_else(|| Error::UnknownName { kind: "measurement", name: name.into() })
    }

    /// Name of a catalogued state on the same ray as `s`.
    pub fn find_state(&self, s: &StateVector, tol: f64) -> Option<&str> {
        self.states.iter().find(|(_, v)| v.same_ray(s, tol)).map(|(k, _)| k.as_str())
    }

    /// Copy keeping only the macro observable among the measurements.
    pub fn macro_only(&self) -> Self {
        let mut f = self.clone();
        f.measurements.retain(|k, _| *k == f.macro_observable);
        f
    }
}
