//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test -p mbgnn-core --test acceptance`.

use std::time::Instant;

use mbgnn_core::eval::{
    argmax, binary_metrics, multiclass_macro_metrics, pipeline_metrics, render_metrics,
    sensitivity_run, ResiduePrediction, ResidueTruth,
};
use mbgnn_core::gnn::{init_model, sage_forward, train_loss, ModelConfig, SageModel};
use mbgnn_core::io::{render_checkpoint, render_report};
use mbgnn_core::netbuild::{
    assemble_networks, attach_embeddings, build_stage2_networks, ChainSeq, ContactRecord,
    CoevNetwork, ResidueRef,
};
use mbgnn_core::numcore::{gradcheck, softmax_rows, DenseMatrix};
use mbgnn_core::pipeline::full_predict;
use mbgnn_core::rng::Rng;
use mbgnn_core::synth::{generate, SynthConfig};
use mbgnn_core::trainer::{
    ensemble_predict, train_ensemble, EnsembleCheckpoint, FoldStats, Task, TrainConfig,
};

fn random_matrix(rng: &mut Rng, rows: usize, cols: usize, half_width: f64) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.uniform(-half_width, half_width))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

fn random_neighbors(rng: &mut Rng, n: usize, p: f64) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.next_f64() < p {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    adj
}

/// Criterion 1: full 5-layer binding architecture (scaled to d_in=12,
/// hidden=8, 2 classes) passes a finite-difference gradient check on a
/// random 10-node network with max relative error < 1e-4, within 60 s.
#[test]
fn criterion_1_gradient_correctness_full_architecture() {
    let start = Instant::now();
    let cfg = ModelConfig {
        n_layers: 5,
        d_in: 12,
        d_hidden: 8,
        n_classes: 2,
        bias_enabled: true,
        seed: 1001,
    };
    let mut rng = Rng::new(1001);
    let x = random_matrix(&mut rng, 10, 12, 1.5);
    let neighbors = random_neighbors(&mut rng, 10, 0.3);
    let labels: Vec<usize> = (0..10).map(|_| rng.below(2)).collect();

    let mut model = init_model(&cfg).unwrap();
    let (_, cache) = model.train_forward(&x, &neighbors).unwrap();
    model.zero_grads();
    model.backward(&cache, &labels).unwrap();
    let analytic = model.flatten_grads();
    let x0 = model.flatten_params();
    let segments = model.param_segments();
    let mut f = |flat: &[f64]| {
        model.set_params_from_flat(flat).unwrap();
        train_loss(&mut model, &x, &neighbors, &labels).unwrap()
    };
    let report = gradcheck(&mut f, &x0, &analytic, &segments, 1e-5, 200, 1001);
    let elapsed = start.elapsed();
    assert!(
        report.max_rel_err < 1e-4,
        "max rel err {} over {} coords",
        report.max_rel_err,
        report.coords_checked
    );
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 1 PASS: gradcheck max rel err {:.3e} over {} coordinates in {:.2?}",
        report.max_rel_err, report.coords_checked, elapsed
    );
}

/// Criterion 2: sage_forward matches a naive per-node loop oracle within
/// 1e-12 on 100 random graphs (<= 20 nodes, <= 16 dims).
#[test]
fn criterion_2_layer_oracle_equivalence() {
    let mut rng = Rng::new(1002);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 1 + rng.below(20);
        let d_in = 1 + rng.below(16);
        let d_out = 1 + rng.below(16);
        let x = random_matrix(&mut rng, n, d_in, 2.0);
        let neighbors = random_neighbors(&mut rng, n, 0.25);
        let layer = mbgnn_core::gnn::SageLayer {
            w_self: mbgnn_core::numcore::Parameter::new(random_matrix(&mut rng, d_out, d_in, 1.0)),
            w_neigh: mbgnn_core::numcore::Parameter::new(random_matrix(&mut rng, d_out, d_in, 1.0)),
            bias: (rng.next_f64() < 0.5).then(|| {
                mbgnn_core::numcore::Parameter::new(random_matrix(&mut rng, 1, d_out, 1.0))
            }),
        };
        let fast = sage_forward(&layer, &x, &neighbors).unwrap();
        // naive per-node oracle
        for i in 0..n {
            let mut mean = vec![0.0; d_in];
            if !neighbors[i].is_empty() {
                for &j in &neighbors[i] {
                    for (m, &v) in mean.iter_mut().zip(x.row(j)) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= neighbors[i].len() as f64);
            }
            for o in 0..d_out {
                let mut acc = 0.0;
                for k in 0..d_in {
                    acc += layer.w_self.value.get(o, k) * x.get(i, k)
                        + layer.w_neigh.value.get(o, k) * mean[k];
                }
                if let Some(b) = &layer.bias {
                    acc += b.value.get(0, o);
                }
                worst = worst.max((fast.get(i, o) - acc).abs());
            }
        }
    }
    assert!(worst < 1e-12, "worst deviation {worst}");
    println!("ACCEPTANCE 2 PASS: sage_forward within {worst:.3e} of the per-node oracle on 100 graphs");
}

/// Breadth-first components over residue indices, the stage-independent
/// reference for criterion 3.
fn bfs_components(nodes: &[usize], edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    use std::collections::BTreeMap;
    let mut adjacency: BTreeMap<usize, Vec<usize>> =
        nodes.iter().map(|&n| (n, Vec::new())).collect();
    for &(a, b) in edges {
        adjacency.get_mut(&a).unwrap().push(b);
        adjacency.get_mut(&b).unwrap().push(a);
    }
    let mut seen: BTreeMap<usize, bool> = nodes.iter().map(|&n| (n, false)).collect();
    let mut comps = Vec::new();
    for &start in nodes {
        if seen[&start] {
            continue;
        }
        let mut queue = vec![start];
        seen.insert(start, true);
        let mut comp = Vec::new();
        while let Some(u) = queue.pop() {
            comp.push(u);
            for &v in &adjacency[&u] {
                if !seen[&v] {
                    seen.insert(v, true);
                    queue.push(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Criterion 3: assemble_networks and build_stage2_networks match a BFS
/// component oracle exactly on 1,000 random instances each, including
/// empty and singleton cases.
#[test]
fn criterion_3_component_oracle_equivalence() {
    let mut rng = Rng::new(1003);
    let chain = ChainSeq::new("A", &"C".repeat(60)).unwrap();
    for round in 0..1000 {
        // stage 1: random deduplicated pairs (possibly none)
        let n_pairs = rng.below(40);
        let mut used = std::collections::BTreeSet::new();
        let mut pairs = Vec::new();
        for _ in 0..n_pairs {
            let a = rng.below(60);
            let b = rng.below(60);
            if a != b && used.insert((a.min(b), a.max(b))) {
                pairs.push(ContactRecord::new(a, b, 0.5).unwrap());
            }
        }
        let nets = assemble_networks(&pairs, &chain).unwrap();
        let mut nodes: Vec<usize> = pairs.iter().flat_map(|p| [p.a, p.b]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let edges: Vec<(usize, usize)> = pairs.iter().map(|p| (p.a, p.b)).collect();
        let expect = bfs_components(&nodes, &edges);
        assert_eq!(nets.len(), expect.len(), "round {round}");
        for (net, comp) in nets.networks.iter().zip(&expect) {
            let got: Vec<usize> = net.nodes.iter().map(|n| n.index).collect();
            assert_eq!(&got, comp, "round {round}");
        }

        // stage 2: random positives over random contacts (singletons kept)
        let n_pos = rng.below(12);
        let mut all: Vec<usize> = (0..30).collect();
        rng.shuffle(&mut all);
        let positives: Vec<ResidueRef> = all[..n_pos]
            .iter()
            .map(|&i| ResidueRef {
                chain_id: "A".into(),
                index: i,
                amino_acid: 'C',
            })
            .collect();
        let contacts: Vec<ContactRecord> = (0..25)
            .filter_map(|_| {
                let a = rng.below(30);
                let b = rng.below(30);
                (a != b).then(|| ContactRecord::new(a, b, rng.next_f64()).unwrap())
            })
            .collect();
        let s2 = build_stage2_networks(&positives, &contacts, 0.1).unwrap();
        let pos_set: std::collections::BTreeSet<usize> =
            positives.iter().map(|p| p.index).collect();
        let mut pos_nodes: Vec<usize> = pos_set.iter().copied().collect();
        pos_nodes.sort_unstable();
        let s2_edges: Vec<(usize, usize)> = contacts
            .iter()
            .filter(|c| c.score > 0.1 && pos_set.contains(&c.a) && pos_set.contains(&c.b))
            .map(|c| (c.a, c.b))
            .collect();
        let expect = bfs_components(&pos_nodes, &s2_edges);
        assert_eq!(s2.len(), expect.len(), "round {round}");
        for (net, comp) in s2.networks.iter().zip(&expect) {
            let got: Vec<usize> = net.nodes.iter().map(|n| n.index).collect();
            assert_eq!(&got, comp, "round {round}");
        }
    }
    println!("ACCEPTANCE 3 PASS: component partitions match the BFS oracle on 1000 random instances");
}

/// Criterion 4: infer-mode outputs of 50 random (network, model) pairs are
/// permuted copies under random node permutations, within 1e-9.
#[test]
fn criterion_4_permutation_equivariance() {
    let mut rng = Rng::new(1004);
    let mut worst = 0.0f64;
    for round in 0..50 {
        let n = 2 + rng.below(10);
        let cfg = ModelConfig {
            n_layers: 2 + rng.below(3),
            d_in: 4 + rng.below(5),
            d_hidden: 4 + rng.below(5),
            n_classes: 2 + rng.below(4),
            bias_enabled: round % 2 == 0,
            seed: 2000 + round as u64,
        };
        let model = init_model(&cfg).unwrap();
        let x = random_matrix(&mut rng, n, cfg.d_in, 1.5);
        let neighbors = random_neighbors(&mut rng, n, 0.35);
        let mut perm: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut perm);
        let mut px = DenseMatrix::zeros(n, cfg.d_in);
        let mut pn = vec![Vec::new(); n];
        for i in 0..n {
            px.row_mut(perm[i]).copy_from_slice(x.row(i));
            let mut lst: Vec<usize> = neighbors[i].iter().map(|&j| perm[j]).collect();
            lst.sort_unstable();
            pn[perm[i]] = lst;
        }
        let out = model.infer(&x, &neighbors).unwrap();
        let pout = model.infer(&px, &pn).unwrap();
        for i in 0..n {
            for (a, b) in out.row(i).iter().zip(pout.row(perm[i])) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    assert!(worst < 1e-9, "worst deviation {worst}");
    println!("ACCEPTANCE 4 PASS: permutation equivariance within {worst:.3e} on 50 pairs");
}

/// Criterion 5: every softmax and ensemble-averaged row sums to 1 within
/// 1e-9 across a randomized sweep.
#[test]
fn criterion_5_simplex_conservation() {
    let mut rng = Rng::new(1005);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let rows = 1 + rng.below(8);
        let cols = 1 + rng.below(12);
        let x = random_matrix(&mut rng, rows, cols, 500.0);
        let p = softmax_rows(&x);
        for r in 0..p.rows() {
            worst = worst.max((p.row(r).iter().sum::<f64>() - 1.0).abs());
        }
    }
    for round in 0..20 {
        let cfg = ModelConfig {
            n_layers: 2,
            d_in: 5,
            d_hidden: 6,
            n_classes: 2 + rng.below(9),
            bias_enabled: true,
            seed: 3000 + round,
        };
        let models: Vec<SageModel> = (0..3)
            .map(|i| {
                let mut c = cfg.clone();
                c.seed = 3100 + round * 10 + i;
                init_model(&c).unwrap()
            })
            .collect();
        let ck = EnsembleCheckpoint {
            task: Task::Binding,
            model_config: cfg.clone(),
            models,
            fold_stats: vec![
                FoldStats {
                    best_val_f1: 0.0,
                    best_epoch: 1,
                    epochs_run: 1
                };
                3
            ],
        };
        let n = 1 + rng.below(8);
        let x = random_matrix(&mut rng, n, cfg.d_in, 2.0);
        let neighbors = random_neighbors(&mut rng, n, 0.4);
        let avg = mbgnn_core::trainer::ensemble_predict_batch(&ck, &x, &neighbors).unwrap();
        for r in 0..avg.rows() {
            worst = worst.max((avg.row(r).iter().sum::<f64>() - 1.0).abs());
        }
    }
    assert!(worst < 1e-9, "worst row-sum deviation {worst}");
    println!("ACCEPTANCE 5 PASS: all probability rows sum to 1 within {worst:.3e}");
}

/// Criterion 6: an ensemble of M copies of one snapshot equals the single
/// model's output within 1e-12.
#[test]
fn criterion_6_ensemble_identity() {
    let mut rng = Rng::new(1006);
    let cfg = ModelConfig {
        n_layers: 3,
        d_in: 6,
        d_hidden: 5,
        n_classes: 2,
        bias_enabled: true,
        seed: 1006,
    };
    let model = init_model(&cfg).unwrap();
    let mut worst = 0.0f64;
    for m in [2, 4, 6] {
        let ck = EnsembleCheckpoint {
            task: Task::Binding,
            model_config: cfg.clone(),
            models: vec![model.clone(); m],
            fold_stats: vec![
                FoldStats {
                    best_val_f1: 0.0,
                    best_epoch: 1,
                    epochs_run: 1
                };
                m
            ],
        };
        let n = 2 + rng.below(6);
        let x = random_matrix(&mut rng, n, 6, 1.5);
        let neighbors = random_neighbors(&mut rng, n, 0.4);
        let single = model.infer(&x, &neighbors).unwrap();
        let avg = mbgnn_core::trainer::ensemble_predict_batch(&ck, &x, &neighbors).unwrap();
        for (a, b) in avg.data().iter().zip(single.data()) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-12, "worst deviation {worst}");
    println!("ACCEPTANCE 6 PASS: M-copy ensembles reproduce the single model within {worst:.3e}");
}

// ---- shared helpers for the end-to-end criteria ----

fn corpus_graphs(chains: usize, seed: u64, dim: usize) -> Vec<CoevNetwork> {
    let corpus = generate(&SynthConfig {
        chains,
        seed,
        feat_dim: dim,
    })
    .unwrap();
    let by_residue = corpus.labels.by_residue();
    let mut graphs = Vec::new();
    for sc in &corpus.chains {
        let pairs =
            mbgnn_core::netbuild::extract_ched_pairs(&sc.contacts, &sc.chain, 0.1).unwrap();
        let nets = assemble_networks(&pairs, &sc.chain).unwrap();
        let mut nets = attach_embeddings(&nets, &sc.embedding).unwrap();
        for net in &mut nets.networks {
            let mut binding = Vec::new();
            let mut metal = Vec::new();
            for node in &net.nodes {
                let rec = by_residue
                    .get(&(net.chain_id.as_str(), node.index))
                    .expect("synthetic corpus labels every co-evolved residue");
                binding.push(rec.binding);
                metal.push(rec.metal);
            }
            net.binding_labels = Some(binding);
            net.metal_labels = Some(metal);
        }
        graphs.extend(nets.networks);
    }
    graphs
}

fn strip_edges(graphs: &[CoevNetwork]) -> Vec<CoevNetwork> {
    graphs
        .iter()
        .map(|g| {
            let mut g = g.clone();
            g.edges.clear();
            g
        })
        .collect()
}

fn binding_f1_on(ck: &EnsembleCheckpoint, graphs: &[CoevNetwork]) -> f64 {
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for g in graphs {
        let probs = ensemble_predict(ck, g).unwrap();
        for (i, &b) in g.binding_labels.as_ref().unwrap().iter().enumerate() {
            truth.push(b);
            pred.push(probs.get(i, 1) >= 0.5);
        }
    }
    binary_metrics(&truth, &pred).unwrap().positive().f1
}

fn type_macro_f1_on(ck: &EnsembleCheckpoint, graphs: &[CoevNetwork]) -> f64 {
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for g in graphs {
        let probs = ensemble_predict(ck, g).unwrap();
        for (i, m) in g.metal_labels.as_ref().unwrap().iter().enumerate() {
            truth.push(m.unwrap() as usize);
            pred.push(argmax(probs.row(i)));
        }
    }
    multiclass_macro_metrics(&truth, &pred, 11).unwrap().macro_f1
}

/// Criterion 7: on a synthetic corpus of >= 2,000 stage-1 graphs (dim 32),
/// a 6-fold binding ensemble reaches held-out positive-class F1 >= 0.90, the
/// 11-class type ensemble reaches held-out macro F1 >= 0.80, the whole run
/// stays under 15 minutes, and a feature-only ablation (edges stripped, so
/// the neighbor term vanishes) trails the GNN by >= 0.05 F1.
#[test]
fn criterion_7_end_to_end_synthetic_learning() {
    let start = Instant::now();
    let dim = 32;
    let train_graphs = corpus_graphs(520, 71, dim);
    assert!(
        train_graphs.len() >= 2000,
        "corpus yields {} stage-1 graphs, need >= 2000",
        train_graphs.len()
    );
    let held_out = corpus_graphs(120, 72, dim);

    let model_cfg = ModelConfig {
        n_layers: 5,
        d_in: dim,
        d_hidden: 64,
        n_classes: 2,
        bias_enabled: true,
        seed: 710,
    };
    let train_cfg = TrainConfig {
        m_folds: 6,
        lr: 0.001,
        weight_decay: 0.0001,
        max_epochs: 200,
        patience: 20,
        batch_graphs: 64,
        seed: 710,
    };
    let run = train_ensemble(&train_graphs, Task::Binding, &model_cfg, &train_cfg, 0).unwrap();
    let binding_f1 = binding_f1_on(&run.checkpoint, &held_out);

    // metal-type ensemble over binder-induced truth networks
    let type_train = mbgnn_core::netbuild::binder_induced_networks(
        &mbgnn_core::netbuild::NetworkSet {
            networks: train_graphs.clone(),
        },
    )
    .unwrap()
    .networks;
    let type_held_out = mbgnn_core::netbuild::binder_induced_networks(
        &mbgnn_core::netbuild::NetworkSet {
            networks: held_out.clone(),
        },
    )
    .unwrap()
    .networks;
    let type_cfg = ModelConfig {
        n_layers: 5,
        d_in: dim,
        d_hidden: 64,
        n_classes: 11,
        bias_enabled: true,
        seed: 711,
    };
    let type_train_cfg = TrainConfig {
        m_folds: 6,
        lr: 0.001,
        weight_decay: 0.0005,
        max_epochs: 200,
        patience: 20,
        batch_graphs: 64,
        seed: 711,
    };
    let type_run =
        train_ensemble(&type_train, Task::MetalType, &type_cfg, &type_train_cfg, 0).unwrap();
    let macro_f1 = type_macro_f1_on(&type_run.checkpoint, &type_held_out);

    // the report path must agree: full two-stage prediction on held-out
    // chains, scored with the composite evaluate conventions
    let held_out_corpus = generate(&SynthConfig {
        chains: 30,
        seed: 73,
        feat_dim: dim,
    })
    .unwrap();
    let mut truth = Vec::new();
    let mut preds = Vec::new();
    for r in &held_out_corpus.labels.records {
        truth.push(ResidueTruth {
            chain_id: r.chain_id.clone(),
            index: r.index,
            binding: r.binding,
            metal: r.metal,
        });
    }
    for sc in &held_out_corpus.chains {
        let report = full_predict(
            &sc.chain,
            &sc.contacts,
            &sc.embedding,
            &run.checkpoint,
            &type_run.checkpoint,
            0.1,
        )
        .unwrap();
        let text = render_report(&report);
        preds.extend(mbgnn_core::io::parse_report(&text, "mem").unwrap().predictions);
    }
    let composite = pipeline_metrics(&truth, &preds).unwrap();
    let report_f1 = composite.binding.positive().f1;
    assert!(
        report_f1 >= 0.90,
        "report-path binding F1 {report_f1:.4} below 0.90"
    );

    // feature-only ablation: identical architecture trained and evaluated
    // with all edges removed
    let ablation_train = strip_edges(&train_graphs);
    let ablation_held_out = strip_edges(&held_out);
    let mut ablation_cfg = model_cfg.clone();
    ablation_cfg.seed = 712;
    let mut ablation_train_cfg = train_cfg;
    ablation_train_cfg.seed = 712;
    let ablation_run = train_ensemble(
        &ablation_train,
        Task::Binding,
        &ablation_cfg,
        &ablation_train_cfg,
        0,
    )
    .unwrap();
    let ablation_f1 = binding_f1_on(&ablation_run.checkpoint, &ablation_held_out);

    let elapsed = start.elapsed();
    assert!(
        binding_f1 >= 0.90,
        "held-out binding F1 {binding_f1:.4} below 0.90"
    );
    assert!(macro_f1 >= 0.80, "held-out macro F1 {macro_f1:.4} below 0.80");
    assert!(
        binding_f1 - ablation_f1 >= 0.05,
        "aggregation gap {:.4} below 0.05 (gnn {binding_f1:.4}, ablation {ablation_f1:.4})",
        binding_f1 - ablation_f1
    );
    assert!(elapsed.as_secs() < 15 * 60, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 7 PASS: binding F1 {binding_f1:.4} (report path {report_f1:.4}), \
         type macro F1 {macro_f1:.4}, ablation F1 {ablation_f1:.4} (gap {:.4}), \
         {} graphs in {:.1?}",
        binding_f1 - ablation_f1,
        train_graphs.len(),
        elapsed
    );
}

/// Criterion 8: identical seeds give byte-identical checkpoints and reports
/// across two full train+predict+evaluate runs (one sequential, one with
/// parallel folds), and a 5-seed sensitivity run keeps the binding-F1
/// standard deviation below 0.05.
#[test]
fn criterion_8_determinism_and_sensitivity() {
    let dim = 16;
    let graphs = corpus_graphs(80, 81, dim);
    let held_out_corpus = generate(&SynthConfig {
        chains: 1,
        seed: 82,
        feat_dim: dim,
    })
    .unwrap();

    let model_cfg = ModelConfig {
        n_layers: 3,
        d_in: dim,
        d_hidden: 16,
        n_classes: 2,
        bias_enabled: true,
        seed: 810,
    };
    let train_cfg = TrainConfig {
        m_folds: 6,
        lr: 0.001,
        weight_decay: 0.0001,
        max_epochs: 40,
        patience: 10,
        batch_graphs: 32,
        seed: 810,
    };
    let type_cfg = ModelConfig {
        n_classes: 11,
        seed: 811,
        ..model_cfg.clone()
    };
    let type_train_cfg = TrainConfig {
        weight_decay: 0.0005,
        seed: 811,
        ..train_cfg
    };
    let type_graphs = mbgnn_core::netbuild::binder_induced_networks(
        &mbgnn_core::netbuild::NetworkSet {
            networks: graphs.clone(),
        },
    )
    .unwrap()
    .networks;

    let full_run = |threads: usize| {
        let run = train_ensemble(&graphs, Task::Binding, &model_cfg, &train_cfg, threads).unwrap();
        let type_run =
            train_ensemble(&type_graphs, Task::MetalType, &type_cfg, &type_train_cfg, threads)
                .unwrap();
        let ck_bytes = render_checkpoint(&run.checkpoint).unwrap();
        let type_bytes = render_checkpoint(&type_run.checkpoint).unwrap();
        // predict + evaluate one held-out chain
        let sc = &held_out_corpus.chains[0];
        let report = full_predict(
            &sc.chain,
            &sc.contacts,
            &sc.embedding,
            &run.checkpoint,
            &type_run.checkpoint,
            0.1,
        )
        .unwrap();
        let report_text = render_report(&report);
        let truth: Vec<ResidueTruth> = held_out_corpus
            .labels
            .records
            .iter()
            .map(|r| ResidueTruth {
                chain_id: r.chain_id.clone(),
                index: r.index,
                binding: r.binding,
                metal: r.metal,
            })
            .collect();
        let preds: Vec<ResiduePrediction> =
            mbgnn_core::io::parse_report(&report_text, "mem")
                .unwrap()
                .predictions;
        let metrics_text = render_metrics(&pipeline_metrics(&truth, &preds).unwrap());
        (ck_bytes, type_bytes, report_text, metrics_text)
    };

    let sequential = full_run(1);
    let parallel = full_run(4);
    assert_eq!(sequential.0, parallel.0, "binding checkpoints differ");
    assert_eq!(sequential.1, parallel.1, "type checkpoints differ");
    assert_eq!(sequential.2, parallel.2, "reports differ");
    assert_eq!(sequential.3, parallel.3, "metrics differ");

    // sensitivity across 5 training seeds on a fixed dataset
    let held_out = corpus_graphs(25, 83, dim);
    let rows = sensitivity_run(&[1, 2, 3, 4, 5], |seed| {
        let mut cfg = model_cfg.clone();
        cfg.seed = seed;
        let mut tcfg = train_cfg;
        tcfg.seed = seed;
        let run = train_ensemble(&graphs, Task::Binding, &cfg, &tcfg, 0)?;
        Ok(vec![(
            "binding_f1".to_string(),
            binding_f1_on(&run.checkpoint, &held_out),
        )])
    })
    .unwrap();
    let row = &rows[0];
    assert!(
        row.std_dev < 0.05,
        "binding F1 std {:.4} (per-seed {:?})",
        row.std_dev,
        row.per_seed
    );
    println!(
        "ACCEPTANCE 8 PASS: byte-identical artifacts across runs; 5-seed binding F1 {:.4} +/- {:.4}",
        row.mean, row.std_dev
    );
}

/// Criterion 9: evaluate reproduces hand-computed confusion metrics exactly
/// and macro averaging matches a per-class counting oracle on 300 random
/// items over 11 classes.
#[test]
fn criterion_9_metric_fidelity() {
    // tp=2, fp=1, fn=1 -> P = R = F1 = 2/3 exactly
    let truth: Vec<ResidueTruth> = vec![
        ("A", 0, true, Some(0)),
        ("A", 1, true, Some(0)),
        ("A", 2, true, Some(0)),
        ("A", 3, false, None),
        ("A", 4, false, None),
    ]
    .into_iter()
    .map(|(c, i, b, m)| ResidueTruth {
        chain_id: c.into(),
        index: i,
        binding: b,
        metal: m,
    })
    .collect();
    let preds: Vec<ResiduePrediction> = vec![
        ("A", 0, true, Some(0)),
        ("A", 1, true, Some(0)),
        ("A", 3, true, Some(1)),
    ]
    .into_iter()
    .map(|(c, i, call, m)| ResiduePrediction {
        chain_id: c.into(),
        index: i,
        call,
        metal: m,
    })
    .collect();
    let metrics = pipeline_metrics(&truth, &preds).unwrap();
    let b = metrics.binding.positive();
    assert_eq!(b.counts.true_pos, 2);
    assert_eq!(b.counts.false_pos, 1);
    assert_eq!(b.counts.false_neg, 1);
    assert_eq!(b.precision, 2.0 / 3.0);
    assert_eq!(b.recall, 2.0 / 3.0);
    assert_eq!(b.f1, 2.0 / 3.0);

    let mut rng = Rng::new(1009);
    let truth: Vec<usize> = (0..300).map(|_| rng.below(11)).collect();
    let pred: Vec<usize> = (0..300).map(|_| rng.below(11)).collect();
    let m = multiclass_macro_metrics(&truth, &pred, 11).unwrap();
    let mut macro_f = 0.0;
    for class in 0..11 {
        let tp = truth.iter().zip(&pred).filter(|(&t, &p)| t == class && p == class).count() as f64;
        let fp = truth.iter().zip(&pred).filter(|(&t, &p)| t != class && p == class).count() as f64;
        let fneg = truth.iter().zip(&pred).filter(|(&t, &p)| t == class && p != class).count() as f64;
        let prec = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
        let rec = if tp + fneg == 0.0 { 0.0 } else { tp / (tp + fneg) };
        let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
        assert_eq!(m.classes[class].precision, prec);
        assert_eq!(m.classes[class].recall, rec);
        assert_eq!(m.classes[class].f1, f1);
        macro_f += f1;
    }
    assert!((m.macro_f1 - macro_f / 11.0).abs() < 1e-15);
    println!("ACCEPTANCE 9 PASS: confusion metrics exact; macro average matches the counting oracle");
}

/// Criterion 10: the published full-scale reference numbers are documented
/// (not reproduced at desk scale), and `evaluate` recomputes reference-style
/// metrics from any prediction/label pair unmodified.
#[test]
fn criterion_10_reference_targets_documented_and_recomputable() {
    let readme = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../README.md"
    ))
    .expect("workspace README present");
    for needle in [
        "0.8822", "0.7032", "0.7826", // binding P/R/F1 reference targets
        "0.7194", "0.4924", "0.5543", // metal-type macro P/R/F1 reference targets
    ] {
        assert!(
            readme.contains(needle),
            "README must document the reference target {needle}"
        );
    }

    // the evaluate path emits reference-style metrics from any report/label
    // pair: binding plus per-metal plus macro rows
    let truth = vec![
        ResidueTruth {
            chain_id: "A".into(),
            index: 0,
            binding: true,
            metal: Some(0),
        },
        ResidueTruth {
            chain_id: "A".into(),
            index: 1,
            binding: false,
            metal: None,
        },
    ];
    let preds = vec![ResiduePrediction {
        chain_id: "A".into(),
        index: 0,
        call: true,
        metal: Some(0),
    }];
    let text = render_metrics(&pipeline_metrics(&truth, &preds).unwrap());
    for key in [
        "binding_precision\t",
        "binding_recall\t",
        "binding_f1\t",
        "metal_Zn_f1\t",
        "metal_Fe3S_f1\t",
        "macro_precision\t",
        "macro_recall\t",
        "macro_f1\t",
    ] {
        assert!(text.contains(key), "metrics output missing {key:?}");
    }
    println!(
        "ACCEPTANCE 10 PASS: full-scale reference targets documented; evaluate recomputes \
         reference-style metrics from arbitrary report/label pairs"
    );
}
