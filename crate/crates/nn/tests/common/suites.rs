//! Layer-oracle and gradient-check runners reporting worst-case errors.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use seamgnn_core::linalg::Matrix;
use seamgnn_nn::{
    gat_layer, gcn_layer, gin_layer, sage_layer, Aggregator, Arch, GnnModel, GraphInput,
    ModelConfig, SageParams,
};

use super::*;

pub const FD_STEP: f64 = 1e-5;

/// Graph families the oracle suites draw from.
#[derive(Debug, Clone, Copy)]
pub enum Graphs {
    /// Standard and augmented mesh duals plus Erdős–Rényi graphs.
    Mixed,
    /// Standard and augmented mesh duals only.
    Dual,
}

fn case(rng: &mut ChaCha8Rng, graphs: Graphs, i: usize, max_nodes: usize, width: usize) -> Case {
    match graphs {
        Graphs::Mixed => mixed_case(rng, i, max_nodes, width),
        Graphs::Dual => dual_case(rng, max_nodes, i % 2 == 1, width),
    }
}

fn sage_params(w: Matrix, b: Matrix) -> SageParams {
    SageParams {
        w,
        b: Some(b),
        pool_w: None,
        pool_b: None,
        lstm_wi: None,
        lstm_wh: None,
        lstm_b: None,
    }
}

pub fn gcn_error(seed: u64, cases: usize, graphs: Graphs) -> f64 {
    let mut r = rng(seed);
    (0..cases)
        .map(|i| {
            let case = case(&mut r, graphs, i, 30, 5);
            let w = random_matrix(&mut r, 5, 4);
            let b = random_matrix(&mut r, 1, 4);
            let got = gcn_layer(&case.graph, &case.graph.features, &w, Some(&b)).unwrap();
            max_diff(
                &oracle_gcn(
                    &case,
                    &to_dense(&case.graph.features),
                    &to_dense(&w),
                    b.row(0),
                ),
                &got,
            )
        })
        .fold(0.0, f64::max)
}

/// Worst error over concatenated and averaged heads.
pub fn gat_error(seed: u64, cases: usize, graphs: Graphs) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for i in 0..cases {
        let case = case(&mut r, graphs, i, 30, 5);
        let (heads, width) = (1 + i % 3, 3);
        let w = random_matrix(&mut r, 5, heads * width);
        let att = random_matrix(&mut r, heads, 2 * width);
        let h = to_dense(&case.graph.features);
        for concat in [true, false] {
            let b = random_matrix(&mut r, 1, if concat { heads * width } else { width });
            let got = gat_layer(
                &case.graph,
                &case.graph.features,
                &w,
                &att,
                Some(&b),
                concat,
            )
            .unwrap();
            let want = oracle_gat(&case, &h, &to_dense(&w), &to_dense(&att), b.row(0), concat);
            worst = worst.max(max_diff(&want, &got));
        }
    }
    worst
}

/// Worst error over the mean and gcn aggregators.
pub fn sage_mean_error(seed: u64, cases: usize, graphs: Graphs) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for i in 0..cases {
        let case = case(&mut r, graphs, i, 30, 4);
        let h = to_dense(&case.graph.features);
        let b = random_matrix(&mut r, 1, 3);

        let w = random_matrix(&mut r, 8, 3);
        let got = sage_layer(
            &case.graph,
            &case.graph.features,
            &sage_params(w.clone(), b.clone()),
            Aggregator::Mean,
        )
        .unwrap();
        worst = worst.max(max_diff(
            &oracle_sage_mean(&case, &h, &to_dense(&w), b.row(0)),
            &got,
        ));

        let w = random_matrix(&mut r, 4, 3);
        let got = sage_layer(
            &case.graph,
            &case.graph.features,
            &sage_params(w.clone(), b.clone()),
            Aggregator::Gcn,
        )
        .unwrap();
        worst = worst.max(max_diff(
            &oracle_sage_gcn(&case, &h, &to_dense(&w), b.row(0)),
            &got,
        ));
    }
    worst
}

pub fn sage_pool_error(seed: u64, cases: usize, graphs: Graphs) -> f64 {
    let mut r = rng(seed);
    (0..cases)
        .map(|i| {
            let case = case(&mut r, graphs, i, 30, 4);
            let h = to_dense(&case.graph.features);
            let w = random_matrix(&mut r, 8, 3);
            let b = random_matrix(&mut r, 1, 3);
            let pw = random_matrix(&mut r, 4, 4);
            let pb = random_matrix(&mut r, 1, 4);
            let p = SageParams {
                pool_w: Some(pw.clone()),
                pool_b: Some(pb.clone()),
                ..sage_params(w.clone(), b.clone())
            };
            let got = sage_layer(&case.graph, &case.graph.features, &p, Aggregator::Pool).unwrap();
            max_diff(
                &oracle_sage_pool(
                    &case,
                    &h,
                    &to_dense(&w),
                    b.row(0),
                    &to_dense(&pw),
                    pb.row(0),
                ),
                &got,
            )
        })
        .fold(0.0, f64::max)
}

pub fn sage_lstm_error(seed: u64, cases: usize, graphs: Graphs) -> f64 {
    let mut r = rng(seed);
    (0..cases)
        .map(|i| {
            let case = case(&mut r, graphs, i, 30, 3);
            let h = to_dense(&case.graph.features);
            let w = random_matrix(&mut r, 6, 2);
            let wb = random_matrix(&mut r, 1, 2);
            let wi = random_matrix(&mut r, 3, 12);
            let wh = random_matrix(&mut r, 3, 12);
            let b = random_matrix(&mut r, 1, 12);
            let p = SageParams {
                lstm_wi: Some(wi.clone()),
                lstm_wh: Some(wh.clone()),
                lstm_b: Some(b.clone()),
                ..sage_params(w.clone(), wb.clone())
            };
            let got = sage_layer(&case.graph, &case.graph.features, &p, Aggregator::Lstm).unwrap();
            let want = oracle_sage_lstm(
                &case,
                &h,
                &to_dense(&w),
                wb.row(0),
                &to_dense(&wi),
                &to_dense(&wh),
                b.row(0),
            );
            max_diff(&want, &got)
        })
        .fold(0.0, f64::max)
}

pub fn gin_error(seed: u64, cases: usize, graphs: Graphs) -> f64 {
    let mut r = rng(seed);
    (0..cases)
        .map(|i| {
            let case = case(&mut r, graphs, i, 30, 4);
            let h = to_dense(&case.graph.features);
            let eps = r.random_range(-0.5..0.5);
            let (w1, b1) = (random_matrix(&mut r, 4, 5), random_matrix(&mut r, 1, 5));
            let (w2, b2) = (random_matrix(&mut r, 5, 3), random_matrix(&mut r, 1, 3));
            let got =
                gin_layer(&case.graph, &case.graph.features, eps, &w1, &b1, &w2, &b2).unwrap();
            max_diff(
                &oracle_gin(
                    &case,
                    &h,
                    eps,
                    &to_dense(&w1),
                    b1.row(0),
                    &to_dense(&w2),
                    b2.row(0),
                ),
                &got,
            )
        })
        .fold(0.0, f64::max)
}

/// Small models of every architecture and SAGE aggregator.
pub fn gradient_configs() -> Vec<ModelConfig> {
    let base = |arch| ModelConfig {
        input_dim: 5,
        hidden: 4,
        hidden_heads: 2,
        output_heads: 3,
        ..ModelConfig::new(arch)
    };
    let mut out = vec![base(Arch::Gcn), base(Arch::Gat), base(Arch::Gin)];
    for aggregator in [
        Aggregator::Mean,
        Aggregator::Pool,
        Aggregator::Lstm,
        Aggregator::Gcn,
    ] {
        out.push(ModelConfig {
            aggregator,
            ..base(Arch::Sage)
        });
    }
    out
}

/// Randomizes every parameter, including biases and ε that start at zero.
fn randomized(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> GnnModel {
    let mut m = GnnModel::new(cfg.clone(), rng.random()).unwrap();
    for p in m.params.values_mut() {
        for x in p.data_mut() {
            *x = rng.random_range(-0.8..0.8);
        }
    }
    m
}

fn labels_and_weights(rng: &mut ChaCha8Rng, n: usize) -> (Vec<usize>, Vec<f64>) {
    let labels: Vec<usize> = (0..n).map(|_| usize::from(rng.random_bool(0.3))).collect();
    let weights = labels
        .iter()
        .map(|&l| if l == 1 { 100.0 } else { 1.0 })
        .collect();
    (labels, weights)
}

/// Per-tensor relative error `max|fd − an| / max|an|` of one model.
pub fn tensor_errors(
    m: &GnnModel,
    g: &GraphInput,
    labels: &[usize],
    weights: &[f64],
) -> Vec<(String, f64)> {
    let (_, grads) = m.gradients(g, labels, weights).unwrap();
    let mut report = Vec::new();
    for (name, an) in &grads {
        let mut worst_abs: f64 = 0.0;
        let scale = an.data().iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        for i in 0..an.data().len() {
            let eval = |delta: f64| {
                let mut mm = m.clone();
                mm.params.get_mut(name).unwrap().data_mut()[i] += delta;
                mm.loss(g, labels, weights).unwrap()
            };
            let fd = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
            worst_abs = worst_abs.max((fd - an.data()[i]).abs());
        }
        report.push((
            name.clone(),
            if scale > 0.0 {
                worst_abs / scale
            } else {
                worst_abs
            },
        ));
    }
    report
}

/// Worst tensor error per configuration over `instances` random graphs.
pub fn gradient_errors(seed: u64, instances: usize) -> Vec<(String, f64)> {
    let mut r = rng(seed);
    gradient_configs()
        .into_iter()
        .map(|cfg| {
            let mut worst: (String, f64) = (String::new(), 0.0);
            for inst in 0..instances {
                let case = mixed_case(&mut r, inst, 14, 5);
                let m = randomized(&cfg, &mut r);
                let (labels, weights) = labels_and_weights(&mut r, case.n());
                for (name, rel) in tensor_errors(&m, &case.graph, &labels, &weights) {
                    if rel >= worst.1 {
                        worst = (format!("{name} (instance {inst})"), rel);
                    }
                }
            }
            let label = if cfg.arch == Arch::Sage {
                format!("sage-{}: {}", cfg.aggregator, worst.0)
            } else {
                format!("{}: {}", cfg.arch, worst.0)
            };
            (label, worst.1)
        })
        .collect()
}
