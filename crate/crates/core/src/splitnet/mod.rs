//! Blocks, network splits, privatization ways, and client models.

mod model;
mod way;

use std::ops::Deref;

use rand::Rng;

pub use model::{BranchOutputs, ClientModel, LossReport, Role};
pub use way::{enumerate_ways, format_way, parse_way, PrivatizationWay, WayKind, MAX_BLOCKS};

use crate::error::{Error, Result};
use crate::nn::{LayerKind, Sequential};

/// Flat parameter vector exchanged between clients and the server.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector(pub Vec<f64>);

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A network cut into `L` sequentially adjacent, non-empty blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSplit {
    blocks: Vec<Vec<LayerKind>>,
}

impl NetworkSplit {
    pub fn new(blocks: Vec<Vec<LayerKind>>) -> Result<Self> {
        if blocks.is_empty() || blocks.len() > MAX_BLOCKS {
            return Err(Error::config(format!(
                "a split needs 1..={MAX_BLOCKS} blocks, got {}",
                blocks.len()
            )));
        }
        if let Some(i) = blocks.iter().position(Vec::is_empty) {
            return Err(Error::config(format!("block {i} has no layers")));
        }
        for kind in blocks.iter().flatten() {
            kind.validate()?;
        }
        Ok(Self { blocks })
    }

    /// Groups consecutive `units` into blocks of the given sizes.
    pub fn grouped(units: Vec<Vec<LayerKind>>, sizes: &[usize]) -> Result<Self> {
        if sizes.iter().sum::<usize>() != units.len() || sizes.contains(&0) {
            return Err(Error::config(format!(
                "block sizes {sizes:?} do not cover {} units",
                units.len()
            )));
        }
        let mut it = units.into_iter();
        let blocks = sizes
            .iter()
            .map(|&n| it.by_ref().take(n).flatten().collect())
            .collect();
        Self::new(blocks)
    }

    /// `Linear + ReLU` per hidden width, then a `Linear` classifier.
    pub fn mlp_units(input: usize, hidden: &[usize], classes: usize) -> Vec<Vec<LayerKind>> {
        let mut units = Vec::with_capacity(hidden.len() + 1);
        let mut width = input;
        for &h in hidden {
            units.push(vec![
                LayerKind::Linear {
                    input: width,
                    output: h,
                },
                LayerKind::Relu,
            ]);
            width = h;
        }
        units.push(vec![LayerKind::Linear {
            input: width,
            output: classes,
        }]);
        units
    }

    /// One block per MLP unit.
    pub fn mlp(input: usize, hidden: &[usize], classes: usize) -> Result<Self> {
        Self::new(Self::mlp_units(input, hidden, classes))
    }

    /// `Conv(3x3) + ReLU + MaxPool2` per channel count, then `Flatten + Linear`.
    pub fn cnn_units(
        in_channels: usize,
        height: usize,
        width: usize,
        channels: &[usize],
        classes: usize,
    ) -> Result<Vec<Vec<LayerKind>>> {
        let mut units = Vec::with_capacity(channels.len() + 1);
        let (mut c, mut h, mut w) = (in_channels, height, width);
        for &out in channels {
            if h < 4 || w < 4 {
                return Err(Error::config(format!(
                    "image {height}x{width} too small for {} conv units",
                    channels.len()
                )));
            }
            units.push(vec![
                LayerKind::Conv2d {
                    in_channels: c,
                    out_channels: out,
                    kernel: 3,
                },
                LayerKind::Relu,
                LayerKind::MaxPool2,
            ]);
            c = out;
            h = (h - 2) / 2;
            w = (w - 2) / 2;
        }
        units.push(vec![
            LayerKind::Flatten,
            LayerKind::Linear {
                input: c * h * w,
                output: classes,
            },
        ]);
        Ok(units)
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_kinds(&self, i: usize) -> &[LayerKind] {
        &self.blocks[i]
    }

    pub fn init_block<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<Sequential> {
        Sequential::new(&self.blocks[i], rng)
    }
}
