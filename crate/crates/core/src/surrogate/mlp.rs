//! Rectifier networks with a linear output, trained by full-batch Adam.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `normalized = (x - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub offset: f64,
    pub scale: f64,
}

impl Affine {
    pub fn forward(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }

    pub fn inverse(&self, u: f64) -> f64 {
        self.offset + self.scale * u
    }

    /// Zero mean, unit variance; a constant column keeps unit scale.
    pub fn standardize(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        Affine {
            offset: mean,
            scale: if sd > 0.0 { sd } else { 1.0 },
        }
    }

    /// Maps `[lo, hi]` onto `[0, 1]`.
    pub fn unit_range(lo: f64, hi: f64) -> Self {
        Affine {
            offset: lo,
            scale: if hi > lo { hi - lo } else { 1.0 },
        }
    }
}

pub const INPUT_NAMES: [&str; 2] = ["nu", "phi"];

/// Allowed excursion outside the input normalization range, as a fraction of it.
pub const EXTRAPOLATION_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub name: String,
    /// Hidden layer widths.
    pub widths: Vec<usize>,
    /// Row-major `out x in` matrices, input layer first.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub input_norm: [Affine; 2],
    pub target_norm: Affine,
    /// The network fits `ln y`; predictions are exponentiated.
    #[serde(default)]
    pub log_target: bool,
}

impl Mlp {
    /// `[2, widths.., 1]`.
    pub fn dims(&self) -> Vec<usize> {
        layer_dims(&self.widths)
    }

    pub fn zeros(
        name: &str,
        widths: &[usize],
        input_norm: [Affine; 2],
        target_norm: Affine,
    ) -> Self {
        let dims = layer_dims(widths);
        Mlp {
            name: name.to_string(),
            widths: widths.to_vec(),
            weights: dims.windows(2).map(|d| vec![0.0; d[0] * d[1]]).collect(),
            biases: dims.windows(2).map(|d| vec![0.0; d[1]]).collect(),
            input_norm,
            target_norm,
            log_target: false,
        }
    }

    pub fn check_dims(&self) -> Result<()> {
        let dims = self.dims();
        let bad = |what: String| Err(Error::Format(format!("network {}: {what}", self.name)));
        if self.weights.len() != dims.len() - 1 || self.biases.len() != dims.len() - 1 {
            return bad(format!(
                "{} weight layers for widths {:?}",
                self.weights.len(),
                self.widths
            ));
        }
        for (i, d) in dims.windows(2).enumerate() {
            if self.weights[i].len() != d[0] * d[1] || self.biases[i].len() != d[1] {
                return bad(format!("layer {i} is not {}x{}", d[1], d[0]));
            }
        }
        if self.widths.iter().any(|&w| w == 0) {
            return bad("zero-width layer".into());
        }
        Ok(())
    }

    /// Normalized inputs, rejecting points beyond the extrapolation margin.
    pub fn normalize_input(&self, nu: f64, phi: f64) -> Result<[f64; 2]> {
        let mut u = [0.0; 2];
        for (k, x) in [nu, phi].into_iter().enumerate() {
            let v = self.input_norm[k].forward(x);
            if !(-EXTRAPOLATION_MARGIN..=1.0 + EXTRAPOLATION_MARGIN).contains(&v) {
                let n = self.input_norm[k];
                return Err(Error::Extrapolation {
                    name: INPUT_NAMES[k],
                    value: x,
                    lo: n.offset,
                    hi: n.offset + n.scale,
                });
            }
            u[k] = v;
        }
        Ok(u)
    }

    pub fn feed_forward(&self, nu: f64, phi: f64) -> Result<f64> {
        let u = self.normalize_input(nu, phi)?;
        Ok(self.denormalize(self.forward_normalized(&u)))
    }

    /// Physical value of a normalized network output.
    pub fn denormalize(&self, u: f64) -> f64 {
        let v = self.target_norm.inverse(u);
        if self.log_target {
            v.exp()
        } else {
            v
        }
    }

    /// Network output on normalized inputs, before de-normalization.
    pub fn forward_normalized(&self, u: &[f64; 2]) -> f64 {
        let mut a: Vec<f64> = u.to_vec();
        let last = self.weights.len() - 1;
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let cols = a.len();
            let mut z: Vec<f64> = b.clone();
            for (r, zr) in z.iter_mut().enumerate() {
                let row = &w[r * cols..(r + 1) * cols];
                *zr += row.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>();
                if i < last {
                    *zr = zr.max(0.0);
                }
            }
            a = z;
        }
        a[0]
    }

    /// Product of layer spectral norms: a Lipschitz bound of the normalized map.
    pub fn lipschitz_bound(&self) -> f64 {
        self.dims()
            .windows(2)
            .zip(&self.weights)
            .map(|(d, w)| spectral_norm(w, d[1], d[0]))
            .product()
    }
}

pub fn layer_dims(widths: &[usize]) -> Vec<usize> {
    std::iter::once(2)
        .chain(widths.iter().copied())
        .chain(std::iter::once(1))
        .collect()
}

fn spectral_norm(w: &[f64], rows: usize, cols: usize) -> f64 {
    let mut v = vec![1.0 / (cols as f64).sqrt(); cols];
    let mut sigma = 0.0;
    for _ in 0..500 {
        let wv: Vec<f64> = (0..rows)
            .map(|r| (0..cols).map(|c| w[r * cols + c] * v[c]).sum())
            .collect();
        let mut wtwv: Vec<f64> = (0..cols)
            .map(|c| (0..rows).map(|r| w[r * cols + c] * wv[r]).sum())
            .collect();
        let n = wtwv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            return 0.0;
        }
        wtwv.iter_mut().for_each(|x| *x /= n);
        let next = n.sqrt();
        v = wtwv;
        if (next - sigma).abs() <= 1e-12 * next {
            return next * (1.0 + 1e-9);
        }
        sigma = next;
    }
    // power iteration approaches from below; pad the estimate
    sigma * 1.01
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    /// Largest accepted relative L2 validation error.
    pub gate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 50_000,
            patience: 2_000,
            validation_fraction: 0.1,
            gate: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub name: String,
    pub epochs: usize,
    pub best_epoch: usize,
    pub train_mse: f64,
    pub validation_mse: f64,
    pub train_rel_error: f64,
    pub validation_rel_error: f64,
}

/// Deterministic split: shuffled indices, the first `fraction` for validation.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((n as f64 * fraction).round() as usize).clamp(1, n.saturating_sub(1));
    let train = idx.split_off(n_val);
    (train, idx)
}

/// `||pred - y|| / ||y||`.
pub fn relative_l2(pred: &[f64], y: &[f64]) -> f64 {
    let num: f64 = pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum();
    let den: f64 = y.iter().map(|t| t * t).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

struct Batch {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
}

impl Batch {
    fn new(
        inputs: &[[f64; 2]],
        targets: &[f64],
        idx: &[usize],
        in_norm: &[Affine; 2],
        t_norm: &Affine,
    ) -> Self {
        let mut x = Vec::with_capacity(2 * idx.len());
        for &i in idx {
            x.push(in_norm[0].forward(inputs[i][0]));
            x.push(in_norm[1].forward(inputs[i][1]));
        }
        Batch {
            x,
            y: idx.iter().map(|&i| t_norm.forward(targets[i])).collect(),
            n: idx.len(),
        }
    }
}

/// `c (m x n) = a (m x k) * b (k x n)` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    c: &mut [f64],
) {
    assert!(c.len() >= m * n);
    // SAFETY: the slices cover every index addressed by the given strides.
    let (a, b, c) = unsafe {
        (
            faer::MatRef::from_raw_parts(a.as_ptr(), m, k, rsa as isize, csa as isize),
            faer::MatRef::from_raw_parts(b.as_ptr(), k, n, rsb as isize, csb as isize),
            faer::MatMut::from_raw_parts_mut(c.as_mut_ptr(), m, n, n as isize, 1),
        )
    };
    faer::linalg::matmul::matmul(c, faer::Accum::Replace, a, b, 1.0, faer::Par::Seq);
}

/// Per-layer activations for a batch; `acts[0]` is the input.
fn forward_batch(net: &Mlp, batch: &Batch, acts: &mut Vec<Vec<f64>>) {
    let dims = net.dims();
    acts.resize(dims.len(), Vec::new());
    acts[0].clear();
    acts[0].extend_from_slice(&batch.x);
    let last = dims.len() - 2;
    for l in 0..dims.len() - 1 {
        let (cin, cout) = (dims[l], dims[l + 1]);
        let (prev, rest) = acts.split_at_mut(l + 1);
        let z = &mut rest[0];
        z.resize(batch.n * cout, 0.0);
        gemm(
            batch.n,
            cin,
            cout,
            &prev[l],
            cin,
            1,
            &net.weights[l],
            1,
            cin,
            z,
        );
        for row in z.chunks_mut(cout) {
            for (v, b) in row.iter_mut().zip(&net.biases[l]) {
                *v += b;
                if l < last {
                    *v = v.max(0.0);
                }
            }
        }
    }
}

fn mse(out: &[f64], y: &[f64]) -> f64 {
    out.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(shapes: impl Iterator<Item = usize>) -> Self {
        let m: Vec<Vec<f64>> = shapes.map(|n| vec![0.0; n]).collect();
        Adam {
            v: m.clone(),
            m,
            t: 0,
        }
    }

    fn step(&mut self, cfg: &TrainConfig, params: &mut [&mut Vec<f64>], grads: &[Vec<f64>]) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..g.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                p[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Trains one network on a fixed train/validation split. Returns the weights
/// with the lowest validation loss. With `log_target` the loss is taken on
/// `ln y`, but the reported relative errors are on `y`.
#[allow(clippy::too_many_arguments)]
pub fn train_mlp(
    name: &str,
    widths: &[usize],
    inputs: &[[f64; 2]],
    targets: &[f64],
    input_norm: [Affine; 2],
    train_idx: &[usize],
    val_idx: &[usize],
    cfg: &TrainConfig,
    init_seed: u64,
    log_target: bool,
) -> Result<(Mlp, TrainReport)> {
    if inputs.len() != targets.len() || train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::InvalidInput(format!(
            "network {name}: empty or mismatched training data"
        )));
    }
    let physical = targets;
    let logged: Vec<f64>;
    let targets = if log_target {
        if let Some(bad) = targets.iter().find(|&&y| !(y > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "network {name}: log target needs positive values, got {bad}"
            )));
        }
        logged = targets.iter().map(|y| y.ln()).collect();
        &logged[..]
    } else {
        targets
    };
    let train_targets: Vec<f64> = train_idx.iter().map(|&i| targets[i]).collect();
    let target_norm = Affine::standardize(&train_targets);
    let mut net = Mlp::zeros(name, widths, input_norm, target_norm);
    net.log_target = log_target;
    let dims = net.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
    // The output layer starts at zero, so the initial prediction is the target mean.
    let hidden = net.weights.len() - 1;
    for (l, w) in net.weights.iter_mut().take(hidden).enumerate() {
        let bound = (6.0 / dims[l] as f64).sqrt();
        w.iter_mut().for_each(|x| *x = rng.gen_range(-bound..bound));
    }

    let train = Batch::new(inputs, targets, train_idx, &input_norm, &target_norm);
    let val = Batch::new(inputs, targets, val_idx, &input_norm, &target_norm);
    let n_layers = dims.len() - 1;
    let mut adam = Adam::new((0..n_layers).flat_map(|l| [dims[l] * dims[l + 1], dims[l + 1]]));
    let mut grads: Vec<Vec<f64>> = (0..n_layers)
        .flat_map(|l| [vec![0.0; dims[l] * dims[l + 1]], vec![0.0; dims[l + 1]]])
        .collect();
    let mut acts = Vec::new();
    let mut val_acts = Vec::new();
    let mut delta = Vec::new();
    let mut delta_prev = Vec::new();

    let mut best = (f64::INFINITY, 0usize, net.clone());
    let mut epochs = 0;
    for epoch in 1..=cfg.max_epochs {
        epochs = epoch;
        forward_batch(&net, &train, &mut acts);
        let out = &acts[n_layers];
        let loss = mse(out, &train.y);
        if !loss.is_finite() {
            return Err(Error::Diverged {
                output: name.to_string(),
                epoch,
                lr: cfg.learning_rate,
            });
        }
        let scale = 2.0 / train.n as f64;
        delta.clear();
        delta.extend(out.iter().zip(&train.y).map(|(p, t)| scale * (p - t)));
        for l in (0..n_layers).rev() {
            let (cin, cout) = (dims[l], dims[l + 1]);
            gemm(
                cout,
                train.n,
                cin,
                &delta,
                1,
                cout,
                &acts[l],
                cin,
                1,
                &mut grads[2 * l],
            );
            let gb = &mut grads[2 * l + 1];
            gb.iter_mut().for_each(|g| *g = 0.0);
            for row in delta.chunks(cout) {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
            if l > 0 {
                delta_prev.resize(train.n * cin, 0.0);
                gemm(
                    train.n,
                    cout,
                    cin,
                    &delta,
                    cout,
                    1,
                    &net.weights[l],
                    cin,
                    1,
                    &mut delta_prev,
                );
                for (d, a) in delta_prev.iter_mut().zip(&acts[l]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut delta_prev);
            }
        }
        {
            let mut params: Vec<&mut Vec<f64>> = Vec::with_capacity(2 * n_layers);
            for (w, b) in net.weights.iter_mut().zip(net.biases.iter_mut()) {
                params.push(w);
                params.push(b);
            }
            adam.step(cfg, &mut params, &grads);
        }
        forward_batch(&net, &val, &mut val_acts);
        let val_loss = mse(&val_acts[n_layers], &val.y);
        if !val_loss.is_finite() {
            return Err(Error::Diverged {
                output: name.to_string(),
                epoch,
                lr: cfg.learning_rate,
            });
        }
        if val_loss < best.0 {
            best = (val_loss, epoch, net.clone());
        } else if epoch - best.1 >= cfg.patience {
            break;
        }
    }

    let net = best.2;
    let eval = |batch: &Batch, idx: &[usize], acts: &mut Vec<Vec<f64>>| {
        forward_batch(&net, batch, acts);
        let out = &acts[n_layers];
        let pred: Vec<f64> = out.iter().map(|&u| net.denormalize(u)).collect();
        let y: Vec<f64> = idx.iter().map(|&i| physical[i]).collect();
        (mse(out, &batch.y), relative_l2(&pred, &y))
    };
    let (train_mse, train_rel_error) = eval(&train, train_idx, &mut acts);
    let (validation_mse, validation_rel_error) = eval(&val, val_idx, &mut val_acts);
    let report = TrainReport {
        name: name.to_string(),
        epochs,
        best_epoch: best.1,
        train_mse,
        validation_mse,
        train_rel_error,
        validation_rel_error,
    };
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm() -> [Affine; 2] {
        [
            Affine::unit_range(0.1, 0.45),
            Affine::unit_range(0.082, 0.783),
        ]
    }

    fn grid(n: usize) -> Vec<[f64; 2]> {
        let mut v = Vec::new();
        for i in 0..n {
            for j in 0..n {
                v.push([
                    0.1 + 0.35 * i as f64 / (n - 1) as f64,
                    0.082 + 0.701 * j as f64 / (n - 1) as f64,
                ]);
            }
        }
        v
    }

    #[test]
    fn zero_network_returns_denormalized_zero() {
        let net = Mlp::zeros(
            "z",
            &[4, 4],
            norm(),
            Affine {
                offset: 2.5,
                scale: 3.0,
            },
        );
        assert_eq!(net.feed_forward(0.3, 0.3).unwrap(), 2.5);
    }

    #[test]
    fn rectifier_clips_negative_preactivation() {
        let ident = Affine {
            offset: 0.0,
            scale: 1.0,
        };
        let mut net = Mlp::zeros("r", &[1], [ident, ident], ident);
        net.weights[0] = vec![1.0, 0.0];
        net.weights[1] = vec![1.0];
        assert_eq!(net.forward_normalized(&[-0.7, 0.0]), 0.0);
        assert_eq!(net.forward_normalized(&[0.7, 0.0]), 0.7);
    }

    #[test]
    fn extrapolation_is_reported_with_coordinate() {
        let net = Mlp::zeros(
            "z",
            &[2],
            norm(),
            Affine {
                offset: 0.0,
                scale: 1.0,
            },
        );
        assert!(net.feed_forward(0.1 - 0.01, 0.3).is_ok());
        match net.feed_forward(0.3, 0.9) {
            Err(Error::Extrapolation { name, value, .. }) => {
                assert_eq!((name, value), ("phi", 0.9))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_target_gives_bias_only_fit() {
        let x = grid(12);
        let y = vec![-0.25; x.len()];
        let (tr, va) = split_indices(x.len(), 0.1, 1);
        let cfg = TrainConfig {
            max_epochs: 300,
            ..TrainConfig::default()
        };
        let (net, rep) = train_mlp("c", &[8, 8], &x, &y, norm(), &tr, &va, &cfg, 3, false).unwrap();
        assert!(rep.train_mse < 1e-10 && rep.validation_mse < 1e-10);
        assert_eq!(net.feed_forward(0.2, 0.5).unwrap(), -0.25);
    }

    #[test]
    fn linear_target_reaches_half_percent() {
        let x = grid(20);
        let y: Vec<f64> = x.iter().map(|p| 3.0 * p[1] - p[0]).collect();
        let (tr, va) = split_indices(x.len(), 0.1, 7);
        let cfg = TrainConfig {
            max_epochs: 2000,
            ..TrainConfig::default()
        };
        let (_, rep) = train_mlp(
            "lin",
            &[50, 50, 50],
            &x,
            &y,
            norm(),
            &tr,
            &va,
            &cfg,
            11,
            false,
        )
        .unwrap();
        assert!(rep.validation_rel_error < 0.005, "{rep:?}");
    }

    #[test]
    fn log_target_fits_decades_and_stays_positive() {
        let x = grid(12);
        let y: Vec<f64> = x.iter().map(|p| 1e-5 * (9.0 * p[1]).exp()).collect();
        let (tr, va) = split_indices(x.len(), 0.1, 4);
        let cfg = TrainConfig {
            max_epochs: 2000,
            ..TrainConfig::default()
        };
        let (net, rep) =
            train_mlp("k", &[10, 10, 10], &x, &y, norm(), &tr, &va, &cfg, 9, true).unwrap();
        assert!(net.log_target);
        assert!(rep.validation_rel_error < 0.02, "{rep:?}");
        // low end of the range, where a linear-space fit is worst
        let low = net.feed_forward(0.3, 0.1).unwrap() / (1e-5 * 0.9f64.exp());
        assert!((low - 1.0).abs() < 0.05, "{low}");
        assert!(x
            .iter()
            .all(|p| net.feed_forward(p[0], p[1]).unwrap() > 0.0));
    }

    #[test]
    fn log_target_rejects_non_positive_values() {
        let x = grid(4);
        let mut y = vec![1.0; x.len()];
        y[3] = 0.0;
        let (tr, va) = split_indices(x.len(), 0.25, 1);
        let cfg = TrainConfig::default();
        assert!(matches!(
            train_mlp("k", &[4], &x, &y, norm(), &tr, &va, &cfg, 1, true),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn missing_log_flag_reads_as_linear_target() {
        let net = Mlp::zeros("z", &[2], norm(), Affine::unit_range(0.0, 1.0));
        let mut v = serde_json::to_value(&net).unwrap();
        v.as_object_mut().unwrap().remove("log_target");
        let back: Mlp = serde_json::from_value(v).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn divergence_reports_epoch_and_rate() {
        let x = grid(6);
        let y: Vec<f64> = x.iter().map(|p| p[0] * 1e3).collect();
        let (tr, va) = split_indices(x.len(), 0.1, 1);
        let cfg = TrainConfig {
            learning_rate: 1e300,
            max_epochs: 50,
            ..TrainConfig::default()
        };
        match train_mlp("d", &[4], &x, &y, norm(), &tr, &va, &cfg, 1, false) {
            Err(Error::Diverged { epoch, lr, .. }) => assert!(epoch >= 1 && lr == 1e300),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let (a, b) = split_indices(2500, 0.1, 42);
        assert_eq!((a.len(), b.len()), (2250, 250));
        assert_eq!(split_indices(2500, 0.1, 42), (a.clone(), b.clone()));
        let mut all: Vec<usize> = a.into_iter().chain(b).collect();
        all.sort_unstable();
        assert_eq!(all, (0..2500).collect::<Vec<_>>());
    }

    #[test]
    fn lipschitz_bound_holds_on_random_net() {
        let x = grid(8);
        let y: Vec<f64> = x.iter().map(|p| (5.0 * p[1]).sin() + p[0]).collect();
        let (tr, va) = split_indices(x.len(), 0.1, 2);
        let cfg = TrainConfig {
            max_epochs: 200,
            ..TrainConfig::default()
        };
        let (net, _) = train_mlp("s", &[10, 10], &x, &y, norm(), &tr, &va, &cfg, 5, false).unwrap();
        let lip = net.lipschitz_bound();
        for w in x.windows(2) {
            let (ua, ub) = (
                net.normalize_input(w[0][0], w[0][1]).unwrap(),
                net.normalize_input(w[1][0], w[1][1]).unwrap(),
            );
            let d = ((ua[0] - ub[0]).powi(2) + (ua[1] - ub[1]).powi(2)).sqrt();
            let df = (net.forward_normalized(&ua) - net.forward_normalized(&ub)).abs();
            assert!(df <= lip * d + 1e-12);
        }
    }
}
