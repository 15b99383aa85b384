//! Subcommand implementations. Every file goes through `write_atomic`.

use std::path::{Path, PathBuf};

use fedsplit::bregman::{check_lemma_minimizer, check_ps_upper_bound, GeneratorF, Simplex};
use fedsplit::fedsim::{select_best, Architecture, FedConfig, Metric, MetricsLog, NoObserver, Scene, Simulation};
use fedsplit::gradcheck;
use fedsplit::interp::{interp_sweep, recommend_way};
use fedsplit::report::{self, CheckRow, SummaryRow};
use fedsplit::rng::stream;
use fedsplit::scenes::{label_shift_partition, partition_stats, synth_label_dataset};
use fedsplit::splitnet::{NetworkSplit, PrivatizationWay};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Runtime {
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub wall_time: bool,
}

impl Runtime {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.out.join(name);
        report::write_atomic(&path, contents.as_bytes())?;
        Ok(path)
    }
}

fn file_stem(name: &str, lr: f64) -> String {
    format!("{name}_lr{lr}")
}

fn prepare(cfg: &ExperimentConfig, rt: &Runtime) -> Result<(Scene, NetworkSplit, FedConfig), CliError> {
    rt.write("config.toml", &cfg.to_toml()?)?;
    let scene = cfg.scene.to_spec()?.build(cfg.seed)?;
    let split = cfg.model.split(scene.data.sample_shape(), scene.data.classes())?;
    let fed = cfg.fed.to_fed_config(cfg.seed, rt.threads);
    rt.write("partition_stats.csv", &report::stats_csv(&partition_stats(&scene.partition, &scene.data)))?;
    Ok((scene, split, fed))
}

fn write_log(rt: &Runtime, arch: Architecture, log: &MetricsLog) -> Result<(), CliError> {
    let stem = file_stem(&log.architecture, log.learning_rate);
    rt.write(&format!("metrics_{stem}.csv"), &report::metrics_csv(log, rt.wall_time))?;
    rt.write(&format!("clients_{stem}.csv"), &report::per_client_csv(log))?;
    if let Architecture::Auto { mode, .. } = arch {
        rt.write(&format!("coefficients_{stem}.csv"), &report::coefficient_csv(log, mode.tag()))?;
    }
    Ok(())
}

fn describe(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

fn weight_note(log: &MetricsLog) -> String {
    match &log.weights {
        Some(w) => format!(
            " fusion weights in [{:.4}, {:.4}], max sum error {:.1e}",
            w.min_weight, w.max_weight, w.max_sum_error
        ),
        None => String::new(),
    }
}

/// Trains the configured way at every learning rate of the grid.
pub fn run(cfg: &ExperimentConfig, rt: &Runtime) -> Result<(), CliError> {
    let arch = cfg.model.architecture(&cfg.model.way, "model.way")?;
    let (scene, split, fed) = prepare(cfg, rt)?;
    let mut logs = Vec::new();
    for &lr in &fed.learning_rates {
        let log = Simulation::new(&scene, &split, arch, &fed, lr)?.run(&mut NoObserver)?;
        write_log(rt, arch, &log)?;
        let (g, l) = if log.records.len() >= 5 {
            (log.last5(Metric::Global).ok(), log.last5(Metric::Local).ok())
        } else {
            (None, None)
        };
        println!(
            "{} lr={lr}: last-5 global {} local {}{}",
            log.architecture,
            describe(g),
            describe(l),
            weight_note(&log)
        );
        logs.push(log);
    }
    if logs.iter().all(|l| l.records.len() >= 5) {
        let (lr, score) = select_best(&logs, Metric::Local)?;
        println!("best lr={lr} local {score:.4}");
    } else {
        println!("fewer than 5 records per run; last-5 scores not available");
    }
    Ok(())
}

/// Runs each way over the rate grid and writes `summary.csv`.
pub fn compare(cfg: &ExperimentConfig, rt: &Runtime) -> Result<(), CliError> {
    cfg.require_scorable()?;
    let archs = cfg.model.compare_architectures()?;
    let (scene, split, fed) = prepare(cfg, rt)?;
    let mut rows = Vec::with_capacity(archs.len());
    for arch in archs {
        let result = fedsplit::experiment::evaluate_architecture(&scene, &split, arch, &fed)?;
        for log in &result.logs {
            write_log(rt, arch, log)?;
        }
        println!(
            "{:<10} best_lr={:<6} global {} local {:.4}",
            result.name,
            result.best_lr,
            describe(result.global_acc),
            result.local_acc
        );
        rows.push(SummaryRow {
            way: result.name,
            best_lr: result.best_lr,
            global_acc: result.global_acc,
            local_acc: result.local_acc,
        });
    }
    let path = rt.write("summary.csv", &report::summary_csv(&rows))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Trains the full double-branch way, sweeps the interpolation grid and
/// recommends a way.
pub fn interp(cfg: &ExperimentConfig, rt: &Runtime) -> Result<(), CliError> {
    if cfg.fed.learning_rates.len() > 1 {
        cfg.require_scorable()?;
    }
    let (scene, split, fed) = prepare(cfg, rt)?;
    let arch = Architecture::Way(PrivatizationWay::full_double());
    let mut best: Option<(f64, Simulation)> = None;
    for &lr in &fed.learning_rates {
        let mut sim = Simulation::new(&scene, &split, arch, &fed, lr)?;
        let log = sim.run(&mut NoObserver)?;
        write_log(rt, arch, &log)?;
        let score = if fed.learning_rates.len() > 1 {
            log.last5(Metric::Local)?
        } else {
            0.0
        };
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, sim));
        }
    }
    let (_, sim) = best.ok_or_else(|| CliError::config("fed.learning_rates", "grid is empty"))?;
    let grid = interp_sweep(&scene, sim.clients(), &cfg.interp.alphas, &cfg.interp.betas)?;
    rt.write("heatmap.csv", &report::heatmap_csv(&grid))?;
    let rec = recommend_way(&grid)?;
    let verdict = format!(
        "way={} alpha={} beta={} local_acc={} lr={}\n",
        rec.way,
        rec.alpha,
        rec.beta,
        rec.accuracy,
        sim.log().learning_rate
    );
    rt.write("verdict.txt", &verdict)?;
    print!("{verdict}");
    Ok(())
}

/// Builds the scene and writes its label histogram.
pub fn stats(cfg: &ExperimentConfig, rt: &Runtime) -> Result<(), CliError> {
    rt.write("config.toml", &cfg.to_toml()?)?;
    let scene = cfg.scene.to_spec()?.build(cfg.seed)?;
    let st = partition_stats(&scene.partition, &scene.data);
    let path = rt.write("partition_stats.csv", &report::stats_csv(&st))?;
    for (k, c) in scene.partition.clients.iter().enumerate() {
        println!(
            "client {k}: {} train / {} test, {} classes",
            c.train.len(),
            c.test.len(),
            st.nonzero_classes(k)
        );
    }
    println!("global test samples: {}", scene.global_test.len());
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gradcheck,
    Bregman,
    Partition,
}

impl Suite {
    fn file(self) -> &'static str {
        match self {
            Suite::Gradcheck => "gradcheck.csv",
            Suite::Bregman => "bregman.csv",
            Suite::Partition => "partition_check.csv",
        }
    }
}

fn gradcheck_rows(trials: usize, seed: u64) -> Result<Vec<CheckRow>, CliError> {
    Ok(gradcheck::run_all(trials, seed)?
        .into_iter()
        .map(|r| CheckRow {
            pass: r.passed(),
            check: r.name,
            generator: String::new(),
            max_violation: r.max_rel_error,
        })
        .collect())
}

fn bregman_rows(trials: usize, seed: u64) -> Result<Vec<CheckRow>, CliError> {
    const CLASSES: usize = 3;
    const CLIENTS: usize = 5;
    let mut rows = Vec::new();
    for (gi, f) in GeneratorF::ALL.into_iter().enumerate() {
        let mut rng = stream(seed, &[gi as u64]);
        let dists: Vec<Simplex> = (0..CLIENTS).map(|_| Simplex::random(CLASSES, &mut rng)).collect();
        let weights = Simplex::random(CLIENTS, &mut rng).probs().to_vec();
        let lemma = check_lemma_minimizer(f, &dists, &weights, 0.01)?;
        rows.push(CheckRow {
            check: "lemma_minimizer".into(),
            generator: f.name().into(),
            max_violation: lemma.violation(),
            pass: lemma.passed(),
        });
        let h_s = Simplex::random(CLASSES, &mut rng);
        let h_p: Vec<Simplex> = (0..CLIENTS).map(|_| Simplex::random(CLASSES, &mut rng)).collect();
        let bound = check_ps_upper_bound(f, &dists, &weights, &h_s, &h_p, 0.5, trials, &mut rng)?;
        rows.push(CheckRow {
            check: "ps_upper_bound".into(),
            generator: f.name().into(),
            max_violation: bound.max_excess.max(0.0),
            pass: bound.passed(),
        });
    }
    Ok(rows)
}

/// Label-shift partition at the FeCifar10 shape: 100 clients, 5 classes and
/// 500 samples each, split 400/100.
fn partition_rows(seed: u64) -> Result<Vec<CheckRow>, CliError> {
    let mut rng = stream(seed, &[0]);
    let ds = synth_label_dataset(50_000, 10, 2, 1.0, &mut rng)?;
    let part = label_shift_partition(&ds, 100, 50, 5, &mut rng)?.split_local(0.8, &mut rng)?;
    let st = partition_stats(&part, &ds);
    let worst = |f: &dyn Fn(usize) -> usize, want: usize| {
        (0..part.num_clients())
            .map(|k| f(k).abs_diff(want))
            .max()
            .unwrap_or(want) as f64
    };
    let cases = [
        ("clients", part.num_clients().abs_diff(100) as f64),
        ("classes_per_client", worst(&|k| st.nonzero_classes(k), 5)),
        ("samples_per_client", worst(&|k| st.client_totals[k], 500)),
        ("train_per_client", worst(&|k| part.clients[k].train.len(), 400)),
        ("test_per_client", worst(&|k| part.clients[k].test.len(), 100)),
        (
            "coverage",
            part.validate(ds.len()).map_or(1.0, |_| 0.0),
        ),
    ];
    Ok(cases
        .into_iter()
        .map(|(check, v)| CheckRow {
            check: check.into(),
            generator: String::new(),
            max_violation: v,
            pass: v == 0.0,
        })
        .collect())
}

pub fn check(suite: Suite, trials: usize, seed: u64, rt: &Runtime) -> Result<(), CliError> {
    let rows = match suite {
        Suite::Gradcheck => gradcheck_rows(trials, seed)?,
        Suite::Bregman => bregman_rows(trials, seed)?,
        Suite::Partition => partition_rows(seed)?,
    };
    rt.write(suite.file(), &report::check_csv(&rows))?;
    let mut failed = 0;
    for r in &rows {
        let status = if r.pass { "ok" } else { "FAIL" };
        let name = if r.generator.is_empty() {
            r.check.clone()
        } else {
            format!("{}[{}]", r.check, r.generator)
        };
        println!("{status:<4} {name:<36} max deviation {:.3e}", r.max_violation);
        failed += usize::from(!r.pass);
    }
    if failed > 0 {
        return Err(CliError::CheckFailed {
            failed,
            total: rows.len(),
        });
    }
    Ok(())
}

pub fn out_dir(cli: Option<&Path>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| cfg.map(|c| c.out.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}
