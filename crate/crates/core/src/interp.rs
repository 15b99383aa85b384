//! Post-hoc interpolation over a trained full double-branch model.
//!
//! Features are mixed as `a h_s + (1 - a) h_p` and fed to both classifiers;
//! their softmax outputs are mixed as `b p_s + (1 - b) p_p`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fedsim::{accuracy, Client, Scene};
use crate::nn::{softmax_rows, Sequential};
use crate::splitnet::{ClientModel, PrivatizationWay, Role, WayKind};
use crate::tensor::Tensor;

/// Mean local accuracy for every `(alpha, beta)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `acc[i][j]` belongs to `(alphas[i], betas[j])`.
    pub acc: Vec<Vec<f64>>,
    pub clients: usize,
}

/// `0.0, 0.1, ..., 1.0`.
pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn check_coef(v: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Usage(format!("{what} must lie in [0, 1], got {v}")))
    }
}

/// Validates a sweep axis: sorted, inside [0, 1], containing both ends.
pub fn check_grid(values: &[f64], what: &str) -> Result<()> {
    for &v in values {
        check_coef(v, what)?;
    }
    if !values.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Usage(format!("{what} grid must be strictly increasing")));
    }
    if values.first() != Some(&0.0) || values.last() != Some(&1.0) {
        return Err(Error::Usage(format!("{what} grid must contain 0 and 1")));
    }
    Ok(())
}

struct Chains<'a> {
    enc_s: Vec<&'a Sequential>,
    enc_p: Vec<&'a Sequential>,
    cls_s: &'a Sequential,
    cls_p: &'a Sequential,
}

fn chains(model: &ClientModel) -> Result<Chains<'_>> {
    if model.way() != PrivatizationWay::full_double() {
        return Err(Error::Usage(format!(
            "interpolation needs the full double-branch model, got {}",
            model.name()
        )));
    }
    let l = model.num_blocks();
    let get = |role, i| {
        model
            .block(role, i)
            .ok_or_else(|| Error::Internal(format!("block {i} missing from {}", model.name())))
    };
    Ok(Chains {
        enc_s: (0..l - 1).map(|i| get(Role::Shared, i)).collect::<Result<_>>()?,
        enc_p: (0..l - 1).map(|i| get(Role::Private, i)).collect::<Result<_>>()?,
        cls_s: get(Role::Shared, l - 1)?,
        cls_p: get(Role::Private, l - 1)?,
    })
}

fn encode(blocks: &[&Sequential], x: &Tensor) -> Result<Tensor> {
    let mut cur = x.clone();
    for b in blocks {
        cur = b.infer(&cur)?;
    }
    Ok(cur)
}

struct Heads {
    p_s: Tensor,
    p_p: Tensor,
}

impl Chains<'_> {
    fn features(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        Ok((encode(&self.enc_s, x)?, encode(&self.enc_p, x)?))
    }

    fn heads(&self, h_s: &Tensor, h_p: &Tensor, alpha: f64) -> Result<Heads> {
        let h = Tensor::lincomb(alpha, h_s, 1.0 - alpha, h_p)?;
        Ok(Heads {
            p_s: softmax_rows(&self.cls_s.infer(&h)?)?,
            p_p: softmax_rows(&self.cls_p.infer(&h)?)?,
        })
    }
}

impl Heads {
    fn mix(&self, beta: f64) -> Result<Tensor> {
        Tensor::lincomb(beta, &self.p_s, 1.0 - beta, &self.p_p)
    }
}

/// Interpolated class probabilities for one batch.
pub fn interp_predict(model: &ClientModel, x: &Tensor, alpha: f64, beta: f64) -> Result<Tensor> {
    check_coef(alpha, "alpha")?;
    check_coef(beta, "beta")?;
    let c = chains(model)?;
    let (h_s, h_p) = c.features(x)?;
    c.heads(&h_s, &h_p, alpha)?.mix(beta)
}

fn client_grid(model: &ClientModel, x: &Tensor, y: &[usize], alphas: &[f64], betas: &[f64]) -> Result<Vec<Vec<f64>>> {
    let c = chains(model)?;
    let (h_s, h_p) = c.features(x)?;
    alphas
        .iter()
        .map(|&a| {
            let heads = c.heads(&h_s, &h_p, a)?;
            betas.iter().map(|&b| accuracy(&heads.mix(b)?, y)).collect()
        })
        .collect()
}

/// Sweeps every client that has trained at least once and holds local test
/// data; entries are unweighted means over those clients.
pub fn interp_sweep(scene: &Scene, clients: &[Client], alphas: &[f64], betas: &[f64]) -> Result<InterpGrid> {
    check_grid(alphas, "alpha")?;
    check_grid(betas, "beta")?;
    let chosen: Vec<&Client> = clients
        .iter()
        .filter(|c| c.participations() > 0 && !c.data().test.is_empty())
        .collect();
    if chosen.is_empty() {
        return Err(Error::Usage("no trained client with local test data to sweep".into()));
    }
    let grids: Vec<Result<Vec<Vec<f64>>>> = chosen
        .par_iter()
        .map(|c| {
            let model = c
                .network()
                .as_way()
                .ok_or_else(|| Error::Usage("interpolation needs a privatization-way model".into()))?;
            let (x, y) = scene.data.batch(&c.data().test);
            client_grid(model, &x, &y, alphas, betas)
        })
        .collect();
    let mut acc = vec![vec![0.0; betas.len()]; alphas.len()];
    for g in grids {
        for (row, grow) in acc.iter_mut().zip(g?) {
            for (a, v) in row.iter_mut().zip(grow) {
                *a += v;
            }
        }
    }
    let n = chosen.len() as f64;
    for row in &mut acc {
        for a in row.iter_mut() {
            *a /= n;
        }
    }
    Ok(InterpGrid {
        alphas: alphas.to_vec(),
        betas: betas.to_vec(),
        acc,
        clients: chosen.len(),
    })
}

/// Best grid point and the architecture it points to.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub alpha: f64,
    pub beta: f64,
    pub accuracy: f64,
    /// One of `AB`, `AaB`, `ABb`, `AaBb`.
    pub way: &'static str,
}

impl Recommendation {
    /// The recommended family instantiated for a split with `blocks` blocks.
    pub fn privatization_way(&self, blocks: usize) -> Result<PrivatizationWay> {
        match self.way {
            "AB" => Ok(PrivatizationWay::fully_shared()),
            "AaB" => PrivatizationWay::new(WayKind::SharedPrivateShared, blocks, blocks),
            "ABb" => PrivatizationWay::new(WayKind::SharedSharedPrivate, blocks, blocks),
            _ => Ok(PrivatizationWay::full_double()),
        }
    }
}

/// Argmax of the grid; ties prefer larger alpha, then larger beta.
pub fn recommend_way(grid: &InterpGrid) -> Result<Recommendation> {
    let mut best: Option<(f64, f64, f64)> = None;
    for (i, &a) in grid.alphas.iter().enumerate() {
        for (j, &b) in grid.betas.iter().enumerate() {
            let v = grid.acc[i][j];
            let better = match best {
                None => true,
                Some((bv, ba, bb)) => v > bv || (v == bv && (a > ba || (a == ba && b > bb))),
            };
            if better {
                best = Some((v, a, b));
            }
        }
    }
    let (accuracy, alpha, beta) = best.ok_or_else(|| Error::Usage("empty interpolation grid".into()))?;
    let way = match (alpha == 1.0, beta == 1.0) {
        (true, true) => "AB",
        (false, true) => "AaB",
        (true, false) => "ABb",
        (false, false) => "AaBb",
    };
    Ok(Recommendation {
        alpha,
        beta,
        accuracy,
        way,
    })
}
