//! JSON file formats: problem instances, labeled and unlabeled samples,
//! and predictors.
//!
//! Instance layout:
//! `{"space": {"size": n, "names": [...]}, "perturbation": {"0": [0, 3], ...},
//! "hypotheses": [[0, 1, ...], ...], "distribution": [[x, y, p], ...]}`.
//! Perturbation keys are decimal instance indices; hypothesis rows are 0/1.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::instance::{
    Atom, Distribution, Example, HypothesisTable, InstanceSpace, LabeledSample, Perturbation, Predictor,
    ProblemInstance, UnlabeledSample,
};

#[derive(Deserialize)]
struct InstanceIn {
    space: InstanceSpace,
    perturbation: BTreeMap<String, Vec<usize>>,
    hypotheses: Vec<Vec<u8>>,
    distribution: Vec<(usize, u8, f64)>,
}

#[derive(Serialize)]
struct InstanceOut<'a> {
    space: &'a InstanceSpace,
    perturbation: Sets<'a>,
    hypotheses: Vec<Vec<u8>>,
    distribution: Vec<(usize, u8, f64)>,
}

struct Sets<'a>(&'a Perturbation);

impl Serialize for Sets<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (x, set) in self.0.sets().iter().enumerate() {
            map.serialize_entry(&x.to_string(), set)?;
        }
        map.end()
    }
}

fn bit(v: u8, what: &str) -> Result<bool> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        other => invalid(format!("{what}: expected 0 or 1, got {other}")),
    }
}

pub fn instance_from_json(text: &str) -> Result<ProblemInstance> {
    let raw: InstanceIn = serde_json::from_str(text)?;
    let n = raw.space.size();
    let space = InstanceSpace::new(n, raw.space.names().map(|s| s.to_vec()))?;
    let mut sets: Vec<Option<Vec<usize>>> = vec![None; n];
    for (key, set) in raw.perturbation {
        let x: usize = key
            .trim()
            .parse()
            .map_err(|_| crate::Error::InvalidInput(format!("perturbation key {key:?} is not an index")))?;
        if x >= n {
            return invalid(format!("perturbation key {x} out of range"));
        }
        if sets[x].replace(set).is_some() {
            return invalid(format!("perturbation key {x} given twice"));
        }
    }
    let sets = sets
        .into_iter()
        .enumerate()
        .map(|(x, s)| s.ok_or_else(|| crate::Error::InvalidInput(format!("perturbation misses instance {x}"))))
        .collect::<Result<Vec<_>>>()?;
    let u = Perturbation::new(n, sets)?;
    let rows = raw
        .hypotheses
        .iter()
        .map(|r| r.iter().map(|&v| bit(v, "hypothesis entry")).collect::<Result<Vec<bool>>>())
        .collect::<Result<Vec<_>>>()?;
    let h = HypothesisTable::new(n, rows)?;
    let atoms = raw
        .distribution
        .iter()
        .map(|&(x, y, p)| Ok(Atom { x, y: bit(y, "distribution label")?, p }))
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(space, u, h, Distribution::new(atoms)?)
}

pub fn instance_to_json(inst: &ProblemInstance) -> Result<String> {
    let out = InstanceOut {
        space: &inst.space,
        perturbation: Sets(&inst.perturbation),
        hypotheses: inst
            .hypotheses
            .rows()
            .iter()
            .map(|r| r.iter().map(|&b| b as u8).collect())
            .collect(),
        distribution: inst.distribution.atoms().iter().map(|a| (a.x, a.y as u8, a.p)).collect(),
    };
    Ok(serde_json::to_string_pretty(&out)?)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn write_instance(path: impl AsRef<Path>, inst: &ProblemInstance) -> Result<()> {
    fs::write(path, instance_to_json(inst)? + "\n")?;
    Ok(())
}

/// Labeled sample: `[[x, y], ...]`.
pub fn read_sample(path: impl AsRef<Path>) -> Result<LabeledSample> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_sample(path: impl AsRef<Path>, s: &[Example]) -> Result<()> {
    fs::write(path, serde_json::to_string(s)? + "\n")?;
    Ok(())
}

/// Unlabeled sample: `[x, ...]`.
pub fn read_unlabeled(path: impl AsRef<Path>) -> Result<UnlabeledSample> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Predictor: `{"outputs": [...], "provenance": {...}}`.
pub fn predictor_to_json(p: &Predictor) -> Result<String> {
    Ok(serde_json::to_string_pretty(p)?)
}

pub fn predictor_from_json(text: &str) -> Result<Predictor> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_predictor(path: impl AsRef<Path>, p: &Predictor) -> Result<()> {
    fs::write(path, predictor_to_json(p)? + "\n")?;
    Ok(())
}

pub fn read_predictor(path: impl AsRef<Path>) -> Result<Predictor> {
    predictor_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::gen_gap;
    use crate::instance::Provenance;

    #[test]
    fn instance_round_trip() {
        let g = gen_gap(4).unwrap();
        let text = instance_to_json(&g.instance).unwrap();
        assert_eq!(instance_from_json(&text).unwrap(), g.instance);
    }

    #[test]
    fn literal_instance_parses() {
        let text = r#"{"space": {"size": 2}, "perturbation": {"0": [0, 1], "1": [1]},
            "hypotheses": [[0, 1], [1, 1]], "distribution": [[0, 1, 0.5], [1, 1, 0.5]]}"#;
        let inst = instance_from_json(text).unwrap();
        assert_eq!(inst.perturbation.set(0), &[0, 1]);
        assert_eq!(inst.hypotheses.n_rows(), 2);
    }

    #[test]
    fn malformed_instances_are_rejected() {
        let missing = r#"{"space": {"size": 2}, "perturbation": {"0": [0]},
            "hypotheses": [[0, 1]], "distribution": [[0, 1, 1.0]]}"#;
        assert!(instance_from_json(missing).is_err());
        let bad_label = r#"{"space": {"size": 1}, "perturbation": {"0": [0]},
            "hypotheses": [[2]], "distribution": [[0, 1, 1.0]]}"#;
        assert!(instance_from_json(bad_label).is_err());
    }

    #[test]
    fn sample_and_predictor_formats() {
        let s: LabeledSample = serde_json::from_str("[[0, 1], [2, 0]]").unwrap();
        assert_eq!(s, vec![Example::new(0, true), Example::new(2, false)]);
        assert!(serde_json::from_str::<LabeledSample>("[[0, 3]]").is_err());
        let p = Predictor::new(vec![true, false], Provenance::new("test"));
        let text = predictor_to_json(&p).unwrap();
        assert!(text.contains("\"outputs\": [\n    1,\n    0\n  ]"));
        assert_eq!(predictor_from_json(&text).unwrap(), p);
    }
}
