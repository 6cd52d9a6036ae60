//! JSON-compatible model descriptions for the built-in systems.
//!
//! Custom dynamics are registered in code; a description can only name one
//! of the built-ins.

use serde::{Deserialize, Serialize};

use super::boxset::BoxSet;
use super::builtin::{genetic_circuit, integrator_1d};
use super::model::SpSystem;
use super::mrn::{mrn, MrnEdge, MrnModel, MrnNetwork};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    2
}

impl BoxSpec {
    pub fn build(&self) -> Result<BoxSet> {
        BoxSet::new(self.lower.clone(), self.upper.clone(), self.samples)
    }
}

impl From<&BoxSet> for BoxSpec {
    fn from(b: &BoxSet) -> Self {
        Self {
            lower: b.lower().to_vec(),
            upper: b.upper().to_vec(),
            samples: b.samples_per_dim(),
        }
    }
}

fn default_alpha() -> f64 {
    1.0
}

fn default_metabolites() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDescription {
    GeneticCircuit {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u_set: Option<BoxSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d_set: Option<BoxSpec>,
    },
    Mrn {
        #[serde(default = "default_metabolites")]
        n_metabolites: usize,
        /// Seed for random weights; ignored when `edges` is given.
        #[serde(default)]
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<MrnEdge>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u_set: Option<BoxSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d_set: Option<BoxSpec>,
    },
    #[serde(rename = "custom_builtin", alias = "custom-builtin")]
    CustomBuiltin {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u_set: Option<BoxSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d_set: Option<BoxSpec>,
    },
}

/// A built system, with the MRN matrices when applicable.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub system: SpSystem,
    pub mrn: Option<MrnModel>,
}

fn override_sets(
    sys: SpSystem,
    u_set: &Option<BoxSpec>,
    d_set: &Option<BoxSpec>,
) -> Result<SpSystem> {
    let u = match u_set {
        Some(b) => b.build()?,
        None => sys.u_set().clone(),
    };
    let d = match d_set {
        Some(b) => b.build()?,
        None => sys.d_set().clone(),
    };
    sys.with_sets(u, d)
}

impl ModelDescription {
    pub fn build(&self) -> Result<BuiltModel> {
        match self {
            ModelDescription::GeneticCircuit {
                alpha,
                u_set,
                d_set,
            } => Ok(BuiltModel {
                system: override_sets(genetic_circuit(*alpha)?, u_set, d_set)?,
                mrn: None,
            }),
            ModelDescription::Mrn {
                n_metabolites,
                seed,
                edges,
                u_set,
                d_set,
            } => {
                let network = match edges {
                    Some(edges) => MrnNetwork::new(*n_metabolites, edges.clone())?,
                    None => MrnNetwork::random(*n_metabolites, *seed)?,
                };
                let mut model = mrn(network)?;
                model.system = override_sets(model.system, u_set, d_set)?;
                Ok(BuiltModel {
                    system: model.system.clone(),
                    mrn: Some(model),
                })
            }
            ModelDescription::CustomBuiltin { name, u_set, d_set } => {
                let sys = match name.as_str() {
                    "integrator_1d" => integrator_1d()?,
                    other => {
                        return Err(Error::Config(format!(
                            "unknown custom builtin `{other}` (known: integrator_1d)"
                        )))
                    }
                };
                Ok(BuiltModel {
                    system: override_sets(sys, u_set, d_set)?,
                    mrn: None,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds_each_kind() {
        let gc: ModelDescription =
            serde_json::from_str(r#"{"kind":"genetic_circuit","alpha":2.0}"#).unwrap();
        assert_eq!(gc.build().unwrap().system.name(), "genetic_circuit");

        let m: ModelDescription =
            serde_json::from_str(r#"{"kind":"mrn","n_metabolites":2,"edges":[{"from":0,"to":1,"weight":1.0},{"from":1,"to":2,"weight":1.0}]}"#)
                .unwrap();
        let built = m.build().unwrap();
        assert_eq!(built.system.n_y(), 2);
        assert!(built.mrn.is_some());

        let c: ModelDescription = serde_json::from_str(
            r#"{"kind":"custom-builtin","name":"integrator_1d","u_set":{"lower":[-2],"upper":[2]}}"#,
        )
        .unwrap();
        assert_eq!(c.build().unwrap().system.u_set().upper(), &[2.0]);
    }

    #[test]
    fn rejects_unknown_keys() {
        let r: std::result::Result<ModelDescription, _> =
            serde_json::from_str(r#"{"kind":"genetic_circuit","alpha":1.0,"beta":3}"#);
        assert!(r.is_err());
        let r: std::result::Result<ModelDescription, _> = serde_json::from_str(
            r#"{"kind":"genetic_circuit","u_set":{"lower":[0],"upper":[1],"extra":1}}"#,
        );
        assert!(r.is_err());
    }
}
