//! JSON form of [`FiniteOntModel`]. Maps are written row-major and dense up
//! to [`DENSE_MAP_LIMIT`] atoms and as `{"sparse": [[[row, p], …] per column]}`
//! above it; both forms are accepted on input.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::model::{FiniteOntModel, StochasticMap};
use crate::error::Result;

pub const DENSE_MAP_LIMIT: usize = 512;

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawMap {
    Dense(Vec<Vec<f64>>),
    Sparse { sparse: Vec<Vec<(usize, f64)>> },
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    atoms: usize,
    preparations: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    eigenstate_preps: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    maps: BTreeMap<String, RawMap>,
    #[serde(default)]
    responses: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default)]
    updates: BTreeMap<String, BTreeMap<String, String>>,
}

impl Serialize for FiniteOntModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let dense = self.atoms <= DENSE_MAP_LIMIT;
        let maps = self
            .maps
            .iter()
            .map(|(k, m)| {
                let raw = if dense {
                    RawMap::Dense(m.to_dense())
                } else {
                    RawMap::Sparse { sparse: m.columns().to_vec() }
                };
                (k.clone(), raw)
            })
            .collect();
        RawModel {
            atoms: self.atoms,
            preparations: self.preparations.clone(),
            eigenstate_preps: self.eigenstate_preps.clone(),
            maps,
            responses: self.responses.clone(),
            updates: self.updates.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteOntModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawModel::deserialize(d)?;
        from_raw(raw).map_err(serde::de::Error::custom)
    }
}

fn from_raw(raw: RawModel) -> Result<FiniteOntModel> {
    let mut maps = BTreeMap::new();
    for (k, m) in raw.maps {
        let map = match m {
            RawMap::Dense(rows) => StochasticMap::from_dense(&rows)?,
            RawMap::Sparse { sparse } => StochasticMap::from_columns(sparse),
        };
        maps.insert(k, map);
    }
    let model = FiniteOntModel {
        atoms: raw.atoms,
        preparations: raw.preparations,
        eigenstate_preps: raw.eigenstate_preps,
        maps,
        responses: raw.responses,
        updates: raw.updates,
    };
    model.check()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> FiniteOntModel {
        let mut m = FiniteOntModel::new(n);
        let mut w = vec![0.0; n];
        w[0] = 0.25;
        w[n - 1] = 0.75;
        m.preparations.insert("p".into(), w);
        m.eigenstate_preps.insert("q0".into(), vec!["p".into()]);
        m.responses.insert("r".into(), vec![vec![1.0; n]]);
        m.maps.insert("shift".into(), StochasticMap::deterministic(&(0..n).map(|j| (j + 1) % n).collect::<Vec<_>>()));
        m.updates.insert("r".into(), BTreeMap::from([("q0".to_string(), "p".to_string())]));
        m
    }

    #[test]
    fn dense_form_roundtrips() {
        let m = sample(3);
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains(r#""shift":[[0.0,0.0,1.0],[1.0,0.0,0.0],[0.0,1.0,0.0]]"#), "{text}");
        let back: FiniteOntModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn large_models_use_sparse_maps() {
        let m = sample(DENSE_MAP_LIMIT + 1);
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains(r#""sparse""#));
        let back: FiniteOntModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn invalid_model_is_rejected_on_read() {
        let text = r#"{"atoms":2,"preparations":{"p":[0.5,0.6]}}"#;
        let err = serde_json::from_str::<FiniteOntModel>(text).unwrap_err();
        assert!(err.to_string().contains("sums to"));
    }
}
