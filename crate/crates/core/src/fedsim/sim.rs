use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{accuracy, aggregate, sample_clients, Architecture, CoefficientRecord, FedConfig, MetricsLog, MetricsRecord, Network};
use crate::autofuse::{psi_aggregate, FusionParams, WeightWatch};
use crate::error::{Error, Result};
use crate::nn::SgdMomentum;
use crate::rng::{stream, tag};
use crate::scenes::{ClientData, Dataset, ScenePartition};
use crate::splitnet::{NetworkSplit, ParamVector};

const EVAL_CHUNK: usize = 512;

/// A dataset with its client partition and global test indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub data: Dataset,
    pub partition: ScenePartition,
    pub global_test: Vec<usize>,
}

impl Scene {
    pub fn num_clients(&self) -> usize {
        self.partition.num_clients()
    }

    /// Accuracy of `score` (logits or probabilities) over `idx`, in chunks.
    pub fn evaluate(
        &self,
        idx: &[usize],
        score: impl Fn(&crate::Tensor) -> Result<crate::Tensor>,
    ) -> Result<f64> {
        if idx.is_empty() {
            return Err(Error::config("cannot evaluate on an empty index set"));
        }
        let mut hits = 0.0;
        for chunk in idx.chunks(EVAL_CHUNK) {
            let (x, y) = self.data.batch(chunk);
            hits += accuracy(&score(&x)?, &y)? * chunk.len() as f64;
        }
        Ok(hits / idx.len() as f64)
    }
}

/// A participant: its network, persistent private optimizer, and local data.
#[derive(Debug, Clone, PartialEq)]
pub struct Client {
    id: usize,
    net: Network,
    private_opt: SgdMomentum,
    data: ClientData,
    participations: usize,
}

/// What a client sends back after local training.
#[derive(Debug, Clone, PartialEq)]
pub struct Upload {
    pub client: usize,
    pub shared: ParamVector,
    pub psi: Option<FusionParams>,
    pub steps: usize,
    pub mean_loss: f64,
    /// Set when the client had no training data and did nothing.
    pub skipped: bool,
    pub weights: Option<WeightWatch>,
}

impl Client {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn data(&self) -> &ClientData {
        &self.data
    }

    pub fn private_optimizer(&self) -> &SgdMomentum {
        &self.private_opt
    }

    /// Rounds in which this client trained on at least one batch.
    pub fn participations(&self) -> usize {
        self.participations
    }

    /// Downloads `theta`/`psi`, runs local epochs of minibatch SGD, and
    /// returns the updated shared parameters. Momentum for downloaded
    /// parameters starts from zero every round; private parameters and their
    /// momentum carry over between rounds.
    pub fn local_procedure<R: Rng + ?Sized>(
        &mut self,
        data: &Dataset,
        theta: &ParamVector,
        psi: Option<&FusionParams>,
        cfg: &FedConfig,
        lr: f64,
        rng: &mut R,
    ) -> Result<Upload> {
        self.net.load_shared(theta)?;
        self.net.load_psi(psi)?;
        let mut shared_opt = SgdMomentum::new(lr, cfg.momentum)?;
        let mut steps = 0;
        let mut loss_sum = 0.0;
        let cap = cfg.max_local_steps.unwrap_or(usize::MAX);
        let skipped = self.data.train.is_empty();
        if !skipped {
            let mut order = self.data.train.clone();
            'epochs: for _ in 0..cfg.local_epochs {
                order.shuffle(rng);
                for batch in order.chunks(cfg.batch_size) {
                    if steps >= cap {
                        break 'epochs;
                    }
                    let (x, y) = data.batch(batch);
                    loss_sum += self.net.train_step(&x, &y, rng, &mut shared_opt, &mut self.private_opt)?;
                    steps += 1;
                }
            }
        }
        if steps > 0 {
            self.participations += 1;
        }
        let shared = self.net.shared_params();
        if let Some(v) = shared.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("client {} produced parameter {v}", self.id)));
        }
        Ok(Upload {
            client: self.id,
            shared,
            psi: self.net.psi().cloned(),
            steps,
            mean_loss: if steps > 0 { loss_sum / steps as f64 } else { 0.0 },
            skipped,
            weights: self.net.as_auto_mut().map(|m| m.take_watch()),
        })
    }

    /// Local test accuracy of the personalized model; `None` without test data.
    pub fn local_accuracy(&self, scene: &Scene) -> Result<Option<f64>> {
        if self.data.test.is_empty() {
            return Ok(None);
        }
        scene.evaluate(&self.data.test, |x| self.net.predict(x)).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub theta: ParamVector,
    pub psi: Option<FusionParams>,
    pub round: usize,
}

/// Hooks into the exchange between server and clients.
pub trait RoundObserver {
    /// Before local training, with the vectors about to be loaded.
    fn on_download(&mut self, _round: usize, _client: &Client, _theta: &ParamVector, _psi: Option<&FusionParams>) {}

    /// After local training, with what is about to be transmitted.
    fn on_upload(&mut self, _round: usize, _client: &Client, _upload: &Upload) {}
}

pub struct NoObserver;

impl RoundObserver for NoObserver {}

pub struct Simulation<'a> {
    scene: &'a Scene,
    cfg: FedConfig,
    lr: f64,
    arch: Architecture,
    reference: Network,
    server: ServerState,
    clients: Vec<Client>,
    pool: Option<rayon::ThreadPool>,
    log: MetricsLog,
    started: Option<Instant>,
}

impl<'a> Simulation<'a> {
    /// Builds the server's initial model and every client. Clients start
    /// from the server's shared parameters.
    pub fn new(scene: &'a Scene, split: &NetworkSplit, arch: Architecture, cfg: &FedConfig, lr: f64) -> Result<Self> {
        cfg.validate()?;
        let k = scene.num_clients();
        if k == 0 {
            return Err(Error::config("scene has no clients"));
        }
        scene.partition.validate(scene.data.len())?;
        if arch.has_global_model() && scene.global_test.is_empty() {
            return Err(Error::config("global test set is empty"));
        }
        let reference = Network::build(split, arch, &mut stream(cfg.seed, &[tag::SERVER_INIT]))?;
        let server = ServerState {
            theta: reference.shared_params(),
            psi: reference.psi().cloned(),
            round: 0,
        };
        let mut clients = Vec::with_capacity(k);
        for (id, data) in scene.partition.clients.iter().enumerate() {
            let mut net = Network::build(split, arch, &mut stream(cfg.seed, &[tag::CLIENT_INIT, id as u64]))?;
            net.load_shared(&server.theta)?;
            net.load_psi(server.psi.as_ref())?;
            clients.push(Client {
                id,
                net,
                private_opt: SgdMomentum::new(lr, cfg.momentum)?,
                data: data.clone(),
                participations: 0,
            });
        }
        let pool = match cfg.threads {
            Some(n) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::config(format!("cannot start {n} threads: {e}")))?,
            ),
            None => None,
        };
        let blocks = split.num_blocks();
        Ok(Self {
            scene,
            cfg: cfg.clone(),
            lr,
            arch,
            reference,
            server,
            clients,
            pool,
            log: MetricsLog {
                architecture: arch.name(blocks),
                learning_rate: lr,
                records: Vec::new(),
                coefficients: Vec::new(),
                weights: matches!(arch, Architecture::Auto { .. }).then(WeightWatch::default),
                skipped_clients: 0,
            },
            started: None,
        })
    }

    pub fn server(&self) -> &ServerState {
        &self.server
    }

    pub fn clients(&self) -> &[Client] {
        &self.clients
    }

    pub fn into_clients(self) -> Vec<Client> {
        self.clients
    }

    pub fn log(&self) -> &MetricsLog {
        &self.log
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        match &self.pool {
            Some(p) => p.install(f),
            None => f(),
        }
    }

    /// Global accuracy of the server's current model, if it has one.
    pub fn eval_global(&mut self) -> Result<Option<f64>> {
        if !self.arch.has_global_model() {
            return Ok(None);
        }
        self.reference.load_shared(&self.server.theta)?;
        self.reference.load_psi(self.server.psi.as_ref())?;
        let net = &self.reference;
        self.scene
            .evaluate(&self.scene.global_test, |x| net.global_logits(x))
            .map(Some)
    }

    /// Mean local accuracy over `ids`; clients without test data are left out.
    pub fn eval_personalized(&self, ids: &[usize]) -> Result<(Option<f64>, Vec<(usize, f64)>)> {
        let scene = self.scene;
        let clients = &self.clients;
        let accs: Vec<Result<Option<f64>>> =
            self.install(|| ids.par_iter().map(|&k| clients[k].local_accuracy(scene)).collect());
        let mut per = Vec::with_capacity(ids.len());
        for (&k, a) in ids.iter().zip(accs) {
            if let Some(a) = a? {
                per.push((k, a));
            }
        }
        let mean = if per.is_empty() {
            None
        } else {
            Some(per.iter().map(|&(_, a)| a).sum::<f64>() / per.len() as f64)
        };
        Ok((mean, per))
    }

    fn record(&mut self, evaluated: &[usize]) -> Result<()> {
        let global_acc = self.eval_global()?;
        let (local_acc, per_client) = self.eval_personalized(evaluated)?;
        let round = self.server.round;
        self.log.records.push(MetricsRecord {
            round,
            global_acc,
            local_acc,
            per_client,
            elapsed_s: self.started.map_or(0.0, |s| s.elapsed().as_secs_f64()),
        });
        if let Some(psi) = &self.server.psi {
            self.log.coefficients.push(CoefficientRecord {
                round,
                coefficients: psi.coefficients(),
            });
        }
        Ok(())
    }

    /// Records the round-0 baseline over all clients (once).
    pub fn start(&mut self) -> Result<()> {
        if self.started.is_none() {
            self.started = Some(Instant::now());
            let all: Vec<usize> = (0..self.clients.len()).collect();
            self.record(&all)?;
        }
        Ok(())
    }

    pub fn run_round(&mut self, observer: &mut dyn RoundObserver) -> Result<()> {
        self.start()?;
        let t = self.server.round + 1;
        let k = self.clients.len();
        let selected = sample_clients(k, self.cfg.sample_ratio, &mut stream(self.cfg.seed, &[tag::SAMPLING, t as u64]));
        let mut mask = vec![false; k];
        for &id in &selected {
            mask[id] = true;
            observer.on_download(t, &self.clients[id], &self.server.theta, self.server.psi.as_ref());
        }

        let data = &self.scene.data;
        let theta = &self.server.theta;
        let psi = self.server.psi.as_ref();
        let cfg = &self.cfg;
        let lr = self.lr;
        let clients = &mut self.clients;
        let mut run = move || -> Vec<Result<Upload>> {
            clients
                .par_iter_mut()
                .filter(|c| mask[c.id])
                .map(|c| {
                    let mut rng = stream(cfg.seed, &[tag::CLIENT_ROUND, t as u64, c.id as u64]);
                    c.local_procedure(data, theta, psi, cfg, lr, &mut rng)
                })
                .collect()
        };
        let results = match &self.pool {
            Some(p) => p.install(run),
            None => run(),
        };
        let mut uploads = Vec::with_capacity(results.len());
        for r in results {
            uploads.push(r?);
        }

        for up in &uploads {
            observer.on_upload(t, &self.clients[up.client], up);
            if let (Some(total), Some(w)) = (&mut self.log.weights, &up.weights) {
                total.merge(w);
            }
        }
        let active: Vec<&Upload> = uploads.iter().filter(|u| !u.skipped).collect();
        self.log.skipped_clients += uploads.len() - active.len();
        if !active.is_empty() {
            let shared: Vec<ParamVector> = active.iter().map(|u| u.shared.clone()).collect();
            self.server.theta = aggregate(&shared)?;
            if self.server.psi.is_some() {
                let psis: Vec<FusionParams> = active
                    .iter()
                    .map(|u| u.psi.clone().ok_or_else(|| Error::Protocol("missing fusion upload".into())))
                    .collect::<Result<_>>()?;
                self.server.psi = Some(psi_aggregate(&psis)?);
            }
        }
        self.server.round = t;
        if t.is_multiple_of(self.cfg.record_every) {
            self.record(&selected)?;
        }
        Ok(())
    }

    /// Runs every remaining round and returns the metrics log.
    pub fn run(&mut self, observer: &mut dyn RoundObserver) -> Result<MetricsLog> {
        self.start()?;
        while self.server.round < self.cfg.rounds {
            self.run_round(observer)?;
        }
        Ok(self.log.clone())
    }
}

pub fn run_experiment(
    scene: &Scene,
    split: &NetworkSplit,
    arch: Architecture,
    cfg: &FedConfig,
    lr: f64,
) -> Result<MetricsLog> {
    Simulation::new(scene, split, arch, cfg, lr)?.run(&mut NoObserver)
}
