use fedsplit::experiment::{DataSource, PartitionSpec, SceneSpec};
use fedsplit::fedsim::{Architecture, FedConfig, NoObserver, Simulation};
use fedsplit::rng::stream;
use fedsplit::scenes::{covariate_shift_partition, partition_stats, synth_image_dataset, synth_label_dataset};
use fedsplit::splitnet::NetworkSplit;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// With zero-separation blobs every client's features are `R x + t` with
/// `x ~ N(0, I)`, so per-client sample means estimate the shifts `t`, whose
/// coordinates are `N(0, strength^2)`.
#[test]
fn covariate_shift_offsets_follow_the_strength() {
    let (clients, dim, per_client, strength) = (60, 4, 500, 1.5);
    let ds = synth_label_dataset(clients * per_client, 1, dim, 0.0, &mut stream(21, &[0])).unwrap();
    let (out, part) = covariate_shift_partition(&ds, clients, strength, &mut stream(21, &[1])).unwrap();
    let mut stat = 0.0;
    for c in &part.clients {
        let (x, _) = out.batch(&c.train);
        for j in 0..dim {
            let mean = (0..x.rows()).map(|r| x.data()[r * dim + j]).sum::<f64>() / x.rows() as f64;
            stat += mean * mean / (strength * strength + 1.0 / per_client as f64);
        }
    }
    let chi = ChiSquared::new((clients * dim) as f64).unwrap();
    let p = chi.cdf(stat);
    assert!(p > 0.001 && p < 0.999, "chi-square {stat:.1} has cdf {p:.4}");
}

#[test]
fn zero_strength_leaves_features_untouched() {
    let ds = synth_label_dataset(200, 4, 6, 2.0, &mut stream(3, &[0])).unwrap();
    let (out, _) = covariate_shift_partition(&ds, 7, 0.0, &mut stream(3, &[1])).unwrap();
    assert_eq!(out, ds);
}

#[test]
fn well_separated_blobs_are_linearly_separable() {
    let scene = SceneSpec {
        source: DataSource::Vectors {
            dim: 32,
            class_sep: 10.0,
            modes: 1,
        },
        samples: 2000,
        test_samples: 1000,
        classes: 10,
        clients: 1,
        partition: PartitionSpec::CovariateShift { strength: 0.0 },
        train_fraction: 0.8,
    }
    .build(8)
    .unwrap();
    let split = NetworkSplit::mlp(32, &[], 10).unwrap();
    let cfg = FedConfig {
        rounds: 5,
        batch_size: 32,
        learning_rates: vec![0.05],
        record_every: 5,
        seed: 8,
        ..FedConfig::default()
    };
    let arch = Architecture::parse("A", 1).unwrap();
    let log = Simulation::new(&scene, &split, arch, &cfg, 0.05)
        .unwrap()
        .run(&mut NoObserver)
        .unwrap();
    let acc = log.records.last().unwrap().global_acc.unwrap();
    assert!(acc >= 0.99, "linear probe accuracy {acc}");
}

#[test]
fn label_shift_scene_has_held_out_test_of_every_class() {
    let spec = SceneSpec {
        source: DataSource::Vectors {
            dim: 8,
            class_sep: 3.0,
            modes: 2,
        },
        samples: 1000,
        test_samples: 500,
        classes: 10,
        clients: 20,
        partition: PartitionSpec::LabelShift {
            shards_per_class: 4,
            shards_per_client: 2,
        },
        train_fraction: 0.75,
    };
    let scene = spec.build(2).unwrap();
    assert_eq!(scene, spec.build(2).unwrap());
    assert_eq!(scene.global_test, (1000..1500).collect::<Vec<_>>());
    let mut seen = [false; 10];
    for &i in &scene.global_test {
        seen[scene.data.labels()[i]] = true;
    }
    assert!(seen.iter().all(|&s| s));
    let st = partition_stats(&scene.partition, &scene.data);
    assert!((0..20).all(|k| st.nonzero_classes(k) == 2));
    assert_eq!(st.client_totals.iter().sum::<usize>(), 1000);
    for c in &scene.partition.clients {
        assert_eq!(c.train.len(), (0.75 * c.len() as f64).round() as usize);
    }
}

#[test]
fn image_datasets_have_one_channel() {
    let ds = synth_image_dataset(30, 3, 6, 5, &mut stream(1, &[0])).unwrap();
    assert_eq!(ds.sample_shape(), &[1, 6, 5]);
    assert_eq!(ds.class_counts(), vec![10, 10, 10]);
    assert!(ds.features().data().iter().all(|v| v.is_finite()));
}
