use std::str::FromStr;

use rand::Rng;

use crate::autofuse::{AutoModel, FusionMode, FusionParams, DEFAULT_TEMPERATURE};
use crate::error::{Error, Result};
use crate::nn::SgdMomentum;
use crate::splitnet::{parse_way, ClientModel, NetworkSplit, ParamVector, PrivatizationWay, Role};
use crate::tensor::Tensor;

/// What each client trains: a fixed privatization way or learned fusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Architecture {
    Way(PrivatizationWay),
    Auto { mode: FusionMode, temperature: f64 },
}

impl Architecture {
    pub fn auto(mode: FusionMode) -> Self {
        Architecture::Auto {
            mode,
            temperature: DEFAULT_TEMPERATURE,
        }
    }

    /// Parses a way name such as `"AaB"` or one of `AutoCS`, `AutoSA`, `AutoHS`.
    pub fn parse(name: &str, blocks: usize) -> Result<Self> {
        if name.len() > 4 && name[..4].eq_ignore_ascii_case("auto") {
            return Ok(Architecture::auto(FusionMode::from_str(name)?));
        }
        parse_way(name, blocks).map(Architecture::Way)
    }

    pub fn name(&self, blocks: usize) -> String {
        match self {
            Architecture::Way(w) => w.format(blocks),
            Architecture::Auto { mode, .. } => mode.model_name().to_string(),
        }
    }

    pub fn has_global_model(&self) -> bool {
        match self {
            Architecture::Way(w) => w.has_global_model(),
            Architecture::Auto { .. } => true,
        }
    }
}

/// A client or server network of either architecture family.
#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Way(ClientModel),
    Auto(AutoModel),
}

impl Network {
    pub fn build<R: Rng + ?Sized>(split: &NetworkSplit, arch: Architecture, rng: &mut R) -> Result<Self> {
        match arch {
            Architecture::Way(w) => Ok(Network::Way(ClientModel::build(split, w, rng)?)),
            Architecture::Auto { mode, temperature } => Ok(Network::Auto(AutoModel::build(
                split,
                FusionParams::new(mode, temperature)?,
                rng,
            )?)),
        }
    }

    pub fn shared_params(&self) -> ParamVector {
        match self {
            Network::Way(m) => m.shared_params(),
            Network::Auto(m) => m.shared_params(),
        }
    }

    pub fn private_params(&self) -> Vec<f64> {
        match self {
            Network::Way(m) => m.private_params(),
            Network::Auto(m) => m.private_params(),
        }
    }

    pub fn load_shared(&mut self, params: &ParamVector) -> Result<()> {
        match self {
            Network::Way(m) => m.load_shared(params),
            Network::Auto(m) => m.load_shared(params),
        }
    }

    pub fn psi(&self) -> Option<&FusionParams> {
        match self {
            Network::Way(_) => None,
            Network::Auto(m) => Some(m.psi()),
        }
    }

    pub fn load_psi(&mut self, psi: Option<&FusionParams>) -> Result<()> {
        match (self, psi) {
            (Network::Way(_), None) => Ok(()),
            (Network::Auto(m), Some(p)) => m.load_psi(p),
            _ => Err(Error::Protocol("fusion parameters do not match the architecture".into())),
        }
    }

    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Network::Way(m) => m.predict(x),
            Network::Auto(m) => m.predict(x),
        }
    }

    pub fn global_logits(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Network::Way(m) => m.global_logits(x),
            Network::Auto(m) => m.global_logits(x),
        }
    }

    /// One minibatch: gradients, then a step of `shared_opt` over aggregated
    /// parameters (fusion scalars included) and of `private_opt` over the rest.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        x: &Tensor,
        labels: &[usize],
        rng: &mut R,
        shared_opt: &mut SgdMomentum,
        private_opt: &mut SgdMomentum,
    ) -> Result<f64> {
        let loss = match self {
            Network::Way(m) => {
                m.zero_grads();
                let loss = m.local_loss(x, labels)?.total;
                shared_opt.step(m.param_grad_pairs(Role::Shared))?;
                private_opt.step(m.param_grad_pairs(Role::Private))?;
                loss
            }
            Network::Auto(m) => {
                m.zero_grads();
                let loss = m.train_batch(x, labels, rng)?;
                shared_opt.step(m.shared_param_grad_pairs())?;
                private_opt.step(m.private_param_grad_pairs())?;
                loss
            }
        };
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("training loss became {loss}")));
        }
        Ok(loss)
    }

    pub fn as_way(&self) -> Option<&ClientModel> {
        match self {
            Network::Way(m) => Some(m),
            Network::Auto(_) => None,
        }
    }

    pub fn as_auto(&self) -> Option<&AutoModel> {
        match self {
            Network::Auto(m) => Some(m),
            Network::Way(_) => None,
        }
    }

    pub fn as_auto_mut(&mut self) -> Option<&mut AutoModel> {
        match self {
            Network::Auto(m) => Some(m),
            Network::Way(_) => None,
        }
    }
}
