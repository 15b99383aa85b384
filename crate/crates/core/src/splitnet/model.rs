//! Client models assembled from a network split and a privatization way.

use rand::Rng;

use super::{NetworkSplit, ParamVector, PrivatizationWay, WayKind};
use crate::error::{Error, Result};
use crate::nn::{softmax_cross_entropy, softmax_rows, Sequential, SequentialCache};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Shared,
    Private,
}

type Slot = (Role, usize);

/// How blocks are wired for a given way.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Topology {
    /// One chain mixing shared and private blocks (PS, SP).
    Single(Vec<Slot>),
    /// Two trunks whose features are averaged, then a shared head (SPS).
    Fused {
        trunk_shared: Vec<Slot>,
        trunk_private: Vec<Slot>,
        head: Vec<Slot>,
    },
    /// One shared trunk feeding a shared head and a private head (SSP).
    Forked {
        trunk: Vec<Slot>,
        head_shared: Vec<Slot>,
        head_private: Vec<Slot>,
    },
}

impl Topology {
    fn of(way: PrivatizationWay, blocks: usize) -> Self {
        let cut = way.boundary() - 1;
        let run = |role, r: std::ops::Range<usize>| r.map(|i| (role, i)).collect::<Vec<_>>();
        match way.kind() {
            WayKind::PrivateShared | WayKind::SharedPrivate => Topology::Single(
                (0..blocks)
                    .map(|i| {
                        if way.is_shared(i) {
                            (Role::Shared, i)
                        } else {
                            (Role::Private, i)
                        }
                    })
                    .collect(),
            ),
            WayKind::SharedPrivateShared => Topology::Fused {
                trunk_shared: run(Role::Shared, 0..cut),
                trunk_private: run(Role::Private, 0..cut),
                head: run(Role::Shared, cut..blocks),
            },
            WayKind::SharedSharedPrivate => Topology::Forked {
                trunk: run(Role::Shared, 0..cut),
                head_shared: run(Role::Shared, cut..blocks),
                head_private: run(Role::Private, cut..blocks),
            },
        }
    }
}

/// Outputs of [`ClientModel::forward_way`]: one logits tensor, or one per head.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchOutputs {
    Single(Tensor),
    Double { shared: Tensor, private: Tensor },
}

impl BranchOutputs {
    pub fn branches(&self) -> Vec<&Tensor> {
        match self {
            BranchOutputs::Single(t) => vec![t],
            BranchOutputs::Double { shared, private } => vec![shared, private],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub per_branch: Vec<f64>,
}

/// A client's network: shared blocks that take part in aggregation and
/// private blocks that never leave the client.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientModel {
    way: PrivatizationWay,
    shared: Vec<Option<Sequential>>,
    private: Vec<Option<Sequential>>,
    topology: Topology,
}

impl ClientModel {
    /// Initializes every shared and private block from `rng`, block by block,
    /// shared copy first. Private copies get their own fresh parameters.
    pub fn build<R: Rng + ?Sized>(
        split: &NetworkSplit,
        way: PrivatizationWay,
        rng: &mut R,
    ) -> Result<Self> {
        let l = split.num_blocks();
        if way.boundary() > l {
            return Err(Error::config(format!(
                "way {way} does not fit a split with {l} blocks"
            )));
        }
        let mut shared = Vec::with_capacity(l);
        let mut private = Vec::with_capacity(l);
        for i in 0..l {
            shared.push(if way.is_shared(i) {
                Some(split.init_block(i, rng)?)
            } else {
                None
            });
            private.push(if way.is_private(i) {
                Some(split.init_block(i, rng)?)
            } else {
                None
            });
        }
        Ok(Self {
            way,
            shared,
            private,
            topology: Topology::of(way, l),
        })
    }

    pub fn way(&self) -> PrivatizationWay {
        self.way
    }

    pub fn num_blocks(&self) -> usize {
        self.shared.len()
    }

    pub fn name(&self) -> String {
        self.way.format(self.num_blocks())
    }

    pub fn block(&self, role: Role, i: usize) -> Option<&Sequential> {
        self.blocks(role).get(i).and_then(Option::as_ref)
    }

    pub fn block_mut(&mut self, role: Role, i: usize) -> Option<&mut Sequential> {
        self.blocks_mut(role).get_mut(i).and_then(Option::as_mut)
    }

    fn blocks(&self, role: Role) -> &[Option<Sequential>] {
        match role {
            Role::Shared => &self.shared,
            Role::Private => &self.private,
        }
    }

    fn blocks_mut(&mut self, role: Role) -> &mut [Option<Sequential>] {
        match role {
            Role::Shared => &mut self.shared,
            Role::Private => &mut self.private,
        }
    }

    fn slot(&self, (role, i): Slot) -> Result<&Sequential> {
        self.block(role, i)
            .ok_or_else(|| Error::Internal(format!("missing {role:?} block {i}")))
    }

    fn slot_mut(&mut self, (role, i): Slot) -> Result<&mut Sequential> {
        self.block_mut(role, i)
            .ok_or_else(|| Error::Internal(format!("missing {role:?} block {i}")))
    }

    fn run(&self, route: &[Slot], x: &Tensor) -> Result<Tensor> {
        let mut cur = x.clone();
        for &s in route {
            cur = self.slot(s)?.infer(&cur)?;
        }
        Ok(cur)
    }

    fn run_cached(&self, route: &[Slot], x: &Tensor) -> Result<(Tensor, Vec<SequentialCache>)> {
        let mut cur = x.clone();
        let mut caches = Vec::with_capacity(route.len());
        for &s in route {
            let mut c = SequentialCache::default();
            cur = self.slot(s)?.forward(&cur, &mut c)?;
            caches.push(c);
        }
        Ok((cur, caches))
    }

    fn run_backward(&mut self, route: &[Slot], g: &Tensor, caches: &[SequentialCache]) -> Result<Tensor> {
        let mut g = g.clone();
        for (&s, c) in route.iter().zip(caches).rev() {
            g = self.slot_mut(s)?.backward(&g, c)?;
        }
        Ok(g)
    }

    fn average_features(a: &Tensor, b: &Tensor) -> Result<Tensor> {
        if !a.same_shape(b) {
            return Err(Error::Internal(format!(
                "branch features disagree: {:?} vs {:?}",
                a.shape(),
                b.shape()
            )));
        }
        Tensor::lincomb(0.5, a, 0.5, b)
    }

    pub fn forward_way(&self, x: &Tensor) -> Result<BranchOutputs> {
        match &self.topology {
            Topology::Single(route) => Ok(BranchOutputs::Single(self.run(route, x)?)),
            Topology::Fused {
                trunk_shared,
                trunk_private,
                head,
            } => {
                let fs = self.run(trunk_shared, x)?;
                let fp = self.run(trunk_private, x)?;
                let h = Self::average_features(&fs, &fp)?;
                Ok(BranchOutputs::Single(self.run(head, &h)?))
            }
            Topology::Forked {
                trunk,
                head_shared,
                head_private,
            } => {
                let h = self.run(trunk, x)?;
                Ok(BranchOutputs::Double {
                    shared: self.run(head_shared, &h)?,
                    private: self.run(head_private, &h)?,
                })
            }
        }
    }

    /// Forward, cross-entropy and backward for one batch. Parameter gradients
    /// are accumulated; callers zero them between steps. Two-head ways sum
    /// the losses of both heads.
    pub fn local_loss(&mut self, x: &Tensor, labels: &[usize]) -> Result<LossReport> {
        match self.topology.clone() {
            Topology::Single(route) => {
                let (o, caches) = self.run_cached(&route, x)?;
                let (loss, g) = softmax_cross_entropy(&o, labels)?;
                self.run_backward(&route, &g, &caches)?;
                Ok(LossReport {
                    total: loss,
                    per_branch: vec![loss],
                })
            }
            Topology::Fused {
                trunk_shared,
                trunk_private,
                head,
            } => {
                let (fs, cs) = self.run_cached(&trunk_shared, x)?;
                let (fp, cp) = self.run_cached(&trunk_private, x)?;
                let h = Self::average_features(&fs, &fp)?;
                let (o, ch) = self.run_cached(&head, &h)?;
                let (loss, g) = softmax_cross_entropy(&o, labels)?;
                let mut gh = self.run_backward(&head, &g, &ch)?;
                gh.scale(0.5);
                self.run_backward(&trunk_shared, &gh, &cs)?;
                self.run_backward(&trunk_private, &gh, &cp)?;
                Ok(LossReport {
                    total: loss,
                    per_branch: vec![loss],
                })
            }
            Topology::Forked {
                trunk,
                head_shared,
                head_private,
            } => {
                let (h, ct) = self.run_cached(&trunk, x)?;
                let (os, cs) = self.run_cached(&head_shared, &h)?;
                let (op, cp) = self.run_cached(&head_private, &h)?;
                let (ls, gs) = softmax_cross_entropy(&os, labels)?;
                let (lp, gp) = softmax_cross_entropy(&op, labels)?;
                let mut gh = self.run_backward(&head_shared, &gs, &cs)?;
                gh.add_assign(&self.run_backward(&head_private, &gp, &cp)?)?;
                self.run_backward(&trunk, &gh, &ct)?;
                Ok(LossReport {
                    total: ls + lp,
                    per_branch: vec![ls, lp],
                })
            }
        }
    }

    /// Class probabilities; two-head ways average the heads' softmax outputs.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        match self.forward_way(x)? {
            BranchOutputs::Single(o) => softmax_rows(&o),
            BranchOutputs::Double { shared, private } => {
                Tensor::lincomb(0.5, &softmax_rows(&shared)?, 0.5, &softmax_rows(&private)?)
            }
        }
    }

    /// Logits of the complete model formed by the shared blocks alone.
    pub fn global_logits(&self, x: &Tensor) -> Result<Tensor> {
        if !self.way.has_global_model() {
            return Err(Error::UnsupportedMetric(format!(
                "way {} has no complete shared model",
                self.name()
            )));
        }
        let route: Vec<Slot> = (0..self.num_blocks()).map(|i| (Role::Shared, i)).collect();
        self.run(&route, x)
    }

    pub fn num_params(&self, role: Role) -> usize {
        self.blocks(role).iter().flatten().map(Sequential::num_params).sum()
    }

    fn collect(&self, role: Role) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params(role));
        for b in self.blocks(role).iter().flatten() {
            b.write_params(&mut out);
        }
        out
    }

    /// Shared-block parameters in ascending block order.
    pub fn shared_params(&self) -> ParamVector {
        ParamVector(self.collect(Role::Shared))
    }

    pub fn private_params(&self) -> Vec<f64> {
        self.collect(Role::Private)
    }

    pub fn load_shared(&mut self, params: &ParamVector) -> Result<()> {
        let need = self.num_params(Role::Shared);
        if params.len() != need {
            return Err(Error::Protocol(format!(
                "shared vector has {} values, model {} expects {need}",
                params.len(),
                self.name()
            )));
        }
        let mut off = 0;
        for b in self.shared.iter_mut().flatten() {
            off += b.read_params(&params.0[off..])?;
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for b in self.shared.iter_mut().chain(self.private.iter_mut()).flatten() {
            b.zero_grads();
        }
    }

    pub fn param_grad_pairs(&mut self, role: Role) -> impl Iterator<Item = (&mut Tensor, &Tensor)> {
        self.blocks_mut(role)
            .iter_mut()
            .flatten()
            .flat_map(Sequential::param_grad_pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerKind;
    use crate::rng::stream;
    use crate::splitnet::parse_way;

    fn split() -> NetworkSplit {
        NetworkSplit::mlp(4, &[5], 3).unwrap()
    }

    fn batch() -> (Tensor, Vec<usize>) {
        let x = Tensor::new(
            vec![3, 4],
            vec![0.3, -0.2, 0.5, 1.0, -0.7, 0.1, 0.9, -0.4, 0.2, 0.8, -0.6, 0.05],
        )
        .unwrap();
        (x, vec![0, 2, 1])
    }

    fn model(name: &str) -> ClientModel {
        let s = split();
        ClientModel::build(&s, parse_way(name, 2).unwrap(), &mut stream(9, &[])).unwrap()
    }

    #[test]
    fn partitions_follow_the_name() {
        let m = model("AaB");
        assert!(m.block(Role::Shared, 0).is_some() && m.block(Role::Shared, 1).is_some());
        assert!(m.block(Role::Private, 0).is_some() && m.block(Role::Private, 1).is_none());

        let m = model("ab");
        assert_eq!(m.num_params(Role::Shared), 0);
        assert!(m.shared_params().is_empty());

        let m = model("Ab");
        assert!(m.block(Role::Shared, 0).is_some() && m.block(Role::Shared, 1).is_none());
        assert!(m.block(Role::Private, 1).is_some() && m.block(Role::Private, 0).is_none());
    }

    #[test]
    fn private_copies_are_reinitialized() {
        let m = model("AaBb");
        assert_ne!(m.block(Role::Shared, 0), m.block(Role::Private, 0));
        assert_eq!(
            m.block(Role::Shared, 0).unwrap().kinds(),
            m.block(Role::Private, 0).unwrap().kinds()
        );
    }

    #[test]
    fn fully_shared_matches_unsplit_network() {
        let m = model("AB");
        let mut layers = Vec::new();
        for i in 0..2 {
            layers.extend(m.block(Role::Shared, i).unwrap().layers().iter().cloned());
        }
        let plain = Sequential::from_layers(layers);
        let (x, _) = batch();
        match m.forward_way(&x).unwrap() {
            BranchOutputs::Single(o) => assert_eq!(o, plain.infer(&x).unwrap()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fused_trunks_with_equal_params_reduce_to_either_branch() {
        let mut m = model("AaB");
        let enc = m.block(Role::Shared, 0).unwrap().clone();
        *m.block_mut(Role::Private, 0).unwrap() = enc;
        let (x, _) = batch();
        let plain = model_as_shared_only(&m, &x);
        match m.forward_way(&x).unwrap() {
            BranchOutputs::Single(o) => assert_eq!(o, plain),
            other => panic!("{other:?}"),
        }
    }

    fn model_as_shared_only(m: &ClientModel, x: &Tensor) -> Tensor {
        let h = m.block(Role::Shared, 0).unwrap().infer(x).unwrap();
        m.block(Role::Shared, 1).unwrap().infer(&h).unwrap()
    }

    #[test]
    fn forked_heads_identical_give_equal_logits() {
        let mut m = model("ABb");
        let head = m.block(Role::Shared, 1).unwrap().clone();
        *m.block_mut(Role::Private, 1).unwrap() = head;
        let (x, _) = batch();
        match m.forward_way(&x).unwrap() {
            BranchOutputs::Double { shared, private } => assert_eq!(shared, private),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn loss_branch_counts() {
        let (x, y) = batch();
        assert_eq!(model("AB").local_loss(&x, &y).unwrap().per_branch.len(), 1);
        assert_eq!(model("AaB").local_loss(&x, &y).unwrap().per_branch.len(), 1);
        assert_eq!(model("ABb").local_loss(&x, &y).unwrap().per_branch.len(), 2);
    }

    #[test]
    fn duplicated_chains_double_the_loss() {
        let mut m = model("AaBb");
        for i in 0..2 {
            let b = m.block(Role::Shared, i).unwrap().clone();
            *m.block_mut(Role::Private, i).unwrap() = b;
        }
        let (x, y) = batch();
        let r = m.local_loss(&x, &y).unwrap();
        assert_eq!(r.per_branch[0], r.per_branch[1]);
        assert_eq!(r.total, 2.0 * r.per_branch[0]);
    }

    #[test]
    fn ensemble_prediction_rows_sum_to_one() {
        let (x, _) = batch();
        for name in ["AB", "AaBb", "ABb", "aB"] {
            let p = model(name).predict(&x).unwrap();
            for i in 0..p.rows() {
                assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shared_round_trip_and_private_blindness() {
        let mut m = model("AaB");
        let before = m.clone();
        let v = m.shared_params();
        m.load_shared(&v).unwrap();
        assert_eq!(m, before);
        let n_a = before.block(Role::Shared, 0).unwrap().num_params();
        let n_b = before.block(Role::Shared, 1).unwrap().num_params();
        assert_eq!(v.len(), n_a + n_b);

        for (p, _) in m.param_grad_pairs(Role::Private) {
            p.data_mut().iter_mut().for_each(|w| *w += 1.0);
        }
        assert_eq!(m.shared_params(), v);
    }

    #[test]
    fn load_shared_length_mismatch() {
        let mut m = model("AB");
        let err = m.load_shared(&ParamVector(vec![0.0; 3]));
        assert!(matches!(err, Err(Error::Protocol(_))));
    }

    #[test]
    fn global_model_only_for_complete_shared_ways() {
        let (x, _) = batch();
        for name in ["AB", "AaB", "ABb", "AaBb"] {
            assert!(model(name).global_logits(&x).is_ok(), "{name}");
        }
        for name in ["aB", "Ab", "ab"] {
            assert!(matches!(
                model(name).global_logits(&x),
                Err(Error::UnsupportedMetric(_))
            ));
        }
    }

    #[test]
    fn partition_totality() {
        let s = NetworkSplit::new(vec![
            vec![LayerKind::Linear { input: 4, output: 6 }, LayerKind::Relu],
            vec![LayerKind::Linear { input: 6, output: 5 }, LayerKind::Relu],
            vec![LayerKind::Linear { input: 5, output: 3 }],
        ])
        .unwrap();
        let sizes: Vec<usize> = (0..3)
            .map(|i| s.init_block(i, &mut stream(0, &[])).unwrap().num_params())
            .collect();
        let full: usize = sizes.iter().sum();
        for w in crate::splitnet::enumerate_ways(3).unwrap() {
            let m = ClientModel::build(&s, w, &mut stream(1, &[])).unwrap();
            let total = m.num_params(Role::Shared) + m.num_params(Role::Private);
            let copied: usize = (0..3)
                .filter(|&i| w.is_shared(i) && w.is_private(i))
                .map(|i| sizes[i])
                .sum();
            assert_eq!(total, full + copied, "{}", w.format(3));
        }
    }
}
