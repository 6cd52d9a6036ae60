use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::feedback::FeedbackPolicy;
use crate::error::{Error, Result};
use crate::systems::BoxSet;

/// Declarative description of a zero-order-hold signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    Constant {
        value: Vec<f64>,
    },
    /// One value per sample period; the last one is held afterwards.
    Sequence {
        values: Vec<Vec<f64>>,
    },
    UniformRandom {
        seed: u64,
    },
}

impl SignalSpec {
    /// Validates the held values against `set` and builds the signal.
    pub fn build<'a>(&self, set: &BoxSet) -> Result<Signal<'a>> {
        let check = |v: &Vec<f64>| -> Result<()> {
            if v.len() != set.dim() {
                return Err(Error::dims("signal value", set.dim(), v.len()));
            }
            if !set.contains(v, 0.0) {
                return Err(Error::Domain(format!(
                    "signal value {v:?} lies outside its box"
                )));
            }
            Ok(())
        };
        Ok(match self {
            Self::Constant { value } => {
                check(value)?;
                Signal::Constant(value.clone())
            }
            Self::Sequence { values } => {
                if values.is_empty() {
                    return Err(Error::Domain("a sequence signal needs values".into()));
                }
                values.iter().try_for_each(check)?;
                Signal::Sequence(values.clone())
            }
            Self::UniformRandom { seed } => Signal::random(*seed, 0),
        })
    }
}

/// A signal ready for simulation. `Feedback` and `Adversarial` consult a
/// value-gradient policy: the first picks the minimising control, the
/// second the disturbance maximising against the applied control.
#[derive(Debug, Clone)]
pub enum Signal<'a> {
    Constant(Vec<f64>),
    Sequence(Vec<Vec<f64>>),
    Random(Box<ChaCha8Rng>),
    Feedback(&'a FeedbackPolicy),
    Adversarial(&'a FeedbackPolicy),
}

impl Signal<'_> {
    pub fn random(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Signal::Random(Box::new(rng))
    }

    /// Value held on sample period `k` starting at time `t`.
    pub(crate) fn sample(
        &mut self,
        k: usize,
        t: f64,
        z: &[f64],
        set: &BoxSet,
        applied_u: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        match self {
            Signal::Constant(v) => Ok(v.clone()),
            Signal::Sequence(vs) => Ok(vs[k.min(vs.len() - 1)].clone()),
            Signal::Random(rng) => Ok(set.sample_uniform(rng)),
            Signal::Feedback(p) => p.control(t, z),
            Signal::Adversarial(p) => match applied_u {
                Some(u) => p.disturbance(t, z, u),
                None => Err(Error::Config(
                    "adversarial signals are for disturbances".into(),
                )),
            },
        }
    }
}
