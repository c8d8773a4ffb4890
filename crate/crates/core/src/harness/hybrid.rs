//! Hybrid reservoir: onion quantum layers and a classical ESN driven by the
//! same input, read out together.

use crate::creservoir::{ClassicalReservoir, EsnState};
use crate::qreservoir::{qrc_step, QrcLayerConfig, QrcLayerState};
use crate::reservoir::{Reservoir, ReservoirError, Result};

/// Features are `[layer features..., esn state..., 1]`. With no ESN this is
/// exactly the onion QRC row; with no quantum layers it is `[state, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridReservoir {
    pub layers: Vec<QrcLayerConfig>,
    pub esn: Option<ClassicalReservoir>,
}

impl HybridReservoir {
    pub fn new(layers: Vec<QrcLayerConfig>, esn: Option<ClassicalReservoir>) -> Result<Self> {
        if layers.is_empty() && esn.is_none() {
            return Err(ReservoirError::InvalidConfig(
                "hybrid reservoir needs quantum layers or an ESN".into(),
            ));
        }
        for l in &layers {
            l.validate()?;
        }
        Ok(Self { layers, esn })
    }
}

impl Reservoir for HybridReservoir {
    type State = (Vec<QrcLayerState>, Option<EsnState>);

    fn initial_state(&self) -> Self::State {
        (
            self.layers.iter().map(|l| QrcLayerState::zeros(l.n_qubits)).collect(),
            self.esn.as_ref().map(Reservoir::initial_state),
        )
    }

    fn feature_len(&self) -> usize {
        self.layers.iter().map(QrcLayerConfig::feature_len).sum::<usize>()
            + self.esn.as_ref().map_or(0, ClassicalReservoir::size)
            + 1
    }

    fn step(&self, state: &Self::State, x: f64, h: f64, t: f64) -> Result<(Vec<f64>, Self::State)> {
        let (qstates, estate) = state;
        if qstates.len() != self.layers.len() {
            return Err(ReservoirError::StateCount {
                expected: self.layers.len(),
                got: qstates.len(),
            });
        }
        let mut features = Vec::with_capacity(self.feature_len());
        let mut next_q = Vec::with_capacity(qstates.len());
        for (layer, s) in self.layers.iter().zip(qstates) {
            let (f, n) = qrc_step(layer, s, x, h, t)?;
            features.extend(f);
            next_q.push(n);
        }
        let next_e = match (&self.esn, estate) {
            (Some(esn), Some(s)) => {
                let n = esn.step_state(s, x, h, t)?;
                features.extend(&n.0);
                Some(n)
            }
            (None, None) => None,
            _ => return Err(ReservoirError::Shape("ESN state does not match the reservoir".into())),
        };
        features.push(1.0);
        Ok((features, (next_q, next_e)))
    }
}
