//! One-hidden-layer network for production-style mappings where a linear map
//! lacks capacity. ReLU hidden units; squared-error output for real-valued
//! targets or sigmoid + binary cross-entropy for binary targets.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::FormMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeepLoss {
    SquaredError,
    BinaryCrossEntropy,
}

impl std::str::FromStr for DeepLoss {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "squared-error" | "se" => Ok(DeepLoss::SquaredError),
            "binary-cross-entropy" | "bce" => Ok(DeepLoss::BinaryCrossEntropy),
            other => Err(Error::Argument(format!("unknown loss {other:?}"))),
        }
    }
}

/// All trainable parameters.
#[derive(Debug, Clone)]
pub struct DeepParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl DeepParams {
    fn init(in_dim: usize, width: usize, out_dim: usize, rng: &mut ChaCha12Rng) -> Self {
        let s1 = 1.0 / (in_dim as f64).sqrt();
        let s2 = 1.0 / (width as f64).sqrt();
        DeepParams {
            w1: Array2::from_shape_fn((in_dim, width), |_| rng.gen_range(-s1..s1)),
            b1: Array1::zeros(width),
            w2: Array2::from_shape_fn((width, out_dim), |_| rng.gen_range(-s2..s2)),
            b2: Array1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn width(&self) -> usize {
        self.w1.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.w2.ncols()
    }
}

fn relu_inplace(m: &mut Array2<f64>) {
    m.mapv_inplace(|v| v.max(0.0));
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Pre-activation output (logits for BCE, predictions for squared error).
pub fn forward_linear(params: &DeepParams, x: &Array2<f64>) -> Array2<f64> {
    let mut h = x.dot(&params.w1) + &params.b1;
    relu_inplace(&mut h);
    h.dot(&params.w2) + &params.b2
}

/// Mean per-sample loss of the network on (x, y).
pub fn loss_value(params: &DeepParams, x: &Array2<f64>, y: &Array2<f64>, loss: DeepLoss) -> f64 {
    let o = forward_linear(params, x);
    let m = x.nrows() as f64;
    match loss {
        DeepLoss::SquaredError => {
            let r = &o - y;
            r.iter().map(|v| v * v).sum::<f64>() / (2.0 * m)
        }
        DeepLoss::BinaryCrossEntropy => {
            // Numerically stable logits form:
            // max(o,0) - o*y + ln(1 + exp(-|o|))
            o.iter()
                .zip(y.iter())
                .map(|(&o, &y)| o.max(0.0) - o * y + (-o.abs()).exp().ln_1p())
                .sum::<f64>()
                / m
        }
    }
}

/// Analytic gradients of `loss_value` with respect to every parameter,
/// together with the loss itself.
pub fn loss_gradients(
    params: &DeepParams,
    x: &Array2<f64>,
    y: &Array2<f64>,
    loss: DeepLoss,
) -> (DeepParams, f64) {
    let m = x.nrows() as f64;
    let mut h = x.dot(&params.w1) + &params.b1;
    let pre = h.clone();
    relu_inplace(&mut h);
    let o = h.dot(&params.w2) + &params.b2;

    let (loss_val, mut d_out) = match loss {
        DeepLoss::SquaredError => {
            let r = &o - y;
            let l = r.iter().map(|v| v * v).sum::<f64>() / (2.0 * m);
            (l, r)
        }
        DeepLoss::BinaryCrossEntropy => {
            let l = o
                .iter()
                .zip(y.iter())
                .map(|(&o, &y)| o.max(0.0) - o * y + (-o.abs()).exp().ln_1p())
                .sum::<f64>()
                / m;
            let p = o.mapv(sigmoid);
            (l, p - y)
        }
    };
    d_out.mapv_inplace(|v| v / m);

    let g_w2 = h.t().dot(&d_out);
    let g_b2 = d_out.sum_axis(Axis(0));
    let mut d_h = d_out.dot(&params.w2.t());
    d_h.zip_mut_with(&pre, |d, &z| {
        if z <= 0.0 {
            *d = 0.0;
        }
    });
    let g_w1 = x.t().dot(&d_h);
    let g_b1 = d_h.sum_axis(Axis(0));

    (DeepParams { w1: g_w1, b1: g_b1, w2: g_w2, b2: g_b2 }, loss_val)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub seed: u64,
    /// One entry per epoch where validation improved.
    pub improvements: Vec<EpochLoss>,
}

#[derive(Debug, Clone)]
pub struct DeepConfig {
    pub width: usize,
    pub loss: DeepLoss,
    pub seed: u64,
    pub learning_rate: f64,
    pub batch: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Fraction of rows held back for early stopping; must lie in (0, 1)
    /// when early stopping is enabled.
    pub val_fraction: f64,
    pub early_stopping: bool,
}

impl Default for DeepConfig {
    fn default() -> Self {
        DeepConfig {
            width: 1000,
            loss: DeepLoss::SquaredError,
            seed: 0,
            learning_rate: 0.1,
            batch: 64,
            max_epochs: 500,
            patience: 10,
            val_fraction: 0.1,
            early_stopping: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeepMapping {
    pub params: DeepParams,
    pub loss: DeepLoss,
    pub record: TrainRecord,
}

impl DeepMapping {
    /// Predicted outputs; BCE networks return sigmoid probabilities.
    pub fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.params.in_dim() {
            return Err(Error::Dimension(format!(
                "input has {} columns, network expects {}",
                x.ncols(),
                self.params.in_dim()
            )));
        }
        let mut o = forward_linear(&self.params, x);
        if self.loss == DeepLoss::BinaryCrossEntropy {
            o.mapv_inplace(sigmoid);
        }
        Ok(o)
    }

    pub fn predict_sparse(&self, x: &FormMatrix) -> Result<Array2<f64>> {
        self.predict(&x.to_dense())
    }
}

const DEEP_MAGIC: &str = "lexmorph-deep/1";

#[derive(Serialize, Deserialize)]
struct DeepHeader {
    magic: String,
    in_dim: usize,
    width: usize,
    out_dim: usize,
    loss: DeepLoss,
    record: TrainRecord,
}

/// Container format: one JSON metadata line, then w1, b1, w2, b2
/// concatenated as row-major little-endian f64.
pub fn save_deep(path: impl AsRef<std::path::Path>, mapping: &DeepMapping) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let file = std::fs::File::create(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    let header = DeepHeader {
        magic: DEEP_MAGIC.to_string(),
        in_dim: mapping.params.in_dim(),
        width: mapping.params.width(),
        out_dim: mapping.params.out_dim(),
        loss: mapping.loss,
        record: mapping.record.clone(),
    };
    serde_json::to_writer(&mut w, &header).map_err(|e| Error::Other(e.to_string()))?;
    let io_err = |e| Error::io(path.display().to_string(), e);
    w.write_all(b"\n").map_err(io_err)?;
    for arr in [&mapping.params.w1, &mapping.params.w2] {
        for v in arr.iter() {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    for arr in [&mapping.params.b1, &mapping.params.b2] {
        for v in arr.iter() {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn load_deep(path: impl AsRef<std::path::Path>) -> Result<DeepMapping> {
    use std::io::{BufRead, Read};
    let path = path.as_ref();
    let file =
        std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = std::io::BufReader::new(file);
    let mut header_line = Vec::new();
    r.read_until(b'\n', &mut header_line)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let header: DeepHeader = serde_json::from_slice(&header_line)
        .map_err(|e| Error::Other(format!("bad network header: {e}")))?;
    if header.magic != DEEP_MAGIC {
        return Err(Error::Other(format!("unrecognized container {:?}", header.magic)));
    }
    let total = header.in_dim * header.width
        + header.width * header.out_dim
        + header.width
        + header.out_dim;
    let mut buf = vec![0u8; total * 8];
    r.read_exact(&mut buf).map_err(|e| Error::io(path.display().to_string(), e))?;
    let values: Vec<f64> =
        buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let (w1_len, w2_len) = (header.in_dim * header.width, header.width * header.out_dim);
    let w1 = Array2::from_shape_vec((header.in_dim, header.width), values[..w1_len].to_vec())
        .map_err(|e| Error::Other(e.to_string()))?;
    let w2 = Array2::from_shape_vec(
        (header.width, header.out_dim),
        values[w1_len..w1_len + w2_len].to_vec(),
    )
    .map_err(|e| Error::Other(e.to_string()))?;
    let b1 = Array1::from(values[w1_len + w2_len..w1_len + w2_len + header.width].to_vec());
    let b2 = Array1::from(values[w1_len + w2_len + header.width..].to_vec());
    Ok(DeepMapping {
        params: DeepParams { w1, b1, w2, b2 },
        loss: header.loss,
        record: header.record,
    })
}

/// Train with seeded mini-batch gradient descent. With early stopping on,
/// training halts once validation loss has not improved for `patience`
/// epochs and the best-validation parameters are returned.
pub fn train_deep(x: &Array2<f64>, y: &Array2<f64>, cfg: &DeepConfig) -> Result<DeepMapping> {
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!(
            "design has {} rows, targets have {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if cfg.width == 0 {
        return Err(Error::Argument("hidden width must be at least 1".into()));
    }
    if cfg.early_stopping && !(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "early-stop fraction must lie in (0, 1), got {}",
            cfg.val_fraction
        )));
    }
    if x.nrows() == 0 {
        return Err(Error::Argument("cannot train on an empty dataset".into()));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let n = x.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_val = if cfg.early_stopping {
        ((n as f64) * cfg.val_fraction).round().max(1.0) as usize
    } else {
        0
    };
    let n_val = n_val.min(n.saturating_sub(1));
    let (val_idx, train_idx) = order.split_at(n_val);

    let take = |idx: &[usize], m: &Array2<f64>| -> Array2<f64> {
        let mut out = Array2::zeros((idx.len(), m.ncols()));
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).assign(&m.row(i));
        }
        out
    };
    let xt = take(train_idx, x);
    let yt = take(train_idx, y);
    let (xv, yv) = if n_val > 0 { (take(val_idx, x), take(val_idx, y)) } else
        // Without early stopping the "validation" series tracks training loss.
        { (xt.clone(), yt.clone()) };

    let mut params = DeepParams::init(x.ncols(), cfg.width, y.ncols(), &mut rng);
    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut improvements = Vec::new();
    let mut epochs_run = 0;

    let n_train = xt.nrows();
    let mut batch_order: Vec<usize> = (0..n_train).collect();
    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        batch_order.shuffle(&mut rng);
        for chunk in batch_order.chunks(cfg.batch.max(1)) {
            let xb = take(chunk, &xt);
            let yb = take(chunk, &yt);
            let (g, _) = loss_gradients(&params, &xb, &yb, cfg.loss);
            params.w1.scaled_add(-cfg.learning_rate, &g.w1);
            params.b1.scaled_add(-cfg.learning_rate, &g.b1);
            params.w2.scaled_add(-cfg.learning_rate, &g.w2);
            params.b2.scaled_add(-cfg.learning_rate, &g.b2);
        }
        let val_loss = loss_value(&params, &xv, &yv, cfg.loss);
        if val_loss < best_val {
            best_val = val_loss;
            best = params.clone();
            best_epoch = epoch;
            since_best = 0;
            let train_loss = loss_value(&params, &xt, &yt, cfg.loss);
            improvements.push(EpochLoss { epoch, train_loss, val_loss });
        } else {
            since_best += 1;
            if cfg.early_stopping && since_best >= cfg.patience {
                break;
            }
        }
    }

    Ok(DeepMapping {
        params: best,
        loss: cfg.loss,
        record: TrainRecord { epochs_run, best_epoch, seed: cfg.seed, improvements },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> (Array2<f64>, Array2<f64>) {
        let x = array![[0.3, -0.8, 0.5, 1.2], [1.0, 0.2, -0.4, 0.1], [-0.6, 0.9, 0.7, -0.3]];
        let y_real = array![[0.8, -0.2], [0.1, 0.9], [-0.5, 0.4]];
        (x, y_real)
    }

    fn max_relative_gradient_error(loss: DeepLoss, y: Array2<f64>) -> f64 {
        let (x, _) = toy();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let params = DeepParams::init(4, 6, 2, &mut rng);
        let (analytic, _) = loss_gradients(&params, &x, &y, loss);
        let eps = 1e-6;
        let mut max_err = 0.0_f64;
        let mut check = |get: &dyn Fn(&DeepParams) -> f64, set: &dyn Fn(&mut DeepParams, f64), analytic: f64| {
            let base = get(&params);
            let mut p_plus = params.clone();
            set(&mut p_plus, base + eps);
            let mut p_minus = params.clone();
            set(&mut p_minus, base - eps);
            let fd = (loss_value(&p_plus, &x, &y, loss) - loss_value(&p_minus, &x, &y, loss))
                / (2.0 * eps);
            let denom = (fd.abs() + analytic.abs()).max(1e-8);
            max_err = max_err.max((fd - analytic).abs() / denom);
        };
        for i in 0..4 {
            for j in 0..6 {
                check(&|p| p.w1[[i, j]], &|p, v| p.w1[[i, j]] = v, analytic.w1[[i, j]]);
            }
        }
        for j in 0..6 {
            check(&|p| p.b1[j], &|p, v| p.b1[j] = v, analytic.b1[j]);
        }
        for i in 0..6 {
            for j in 0..2 {
                check(&|p| p.w2[[i, j]], &|p, v| p.w2[[i, j]] = v, analytic.w2[[i, j]]);
            }
        }
        for j in 0..2 {
            check(&|p| p.b2[j], &|p, v| p.b2[j] = v, analytic.b2[j]);
        }
        max_err
    }

    #[test]
    fn gradients_match_central_differences_squared_error() {
        let (_, y) = toy();
        let err = max_relative_gradient_error(DeepLoss::SquaredError, y);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn gradients_match_central_differences_bce() {
        let y = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let err = max_relative_gradient_error(DeepLoss::BinaryCrossEntropy, y);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn overfits_a_tiny_dataset() {
        // 8 words, width 32: training accuracy@1 reaches 100%.
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let x = Array2::from_shape_fn((8, 6), |_| rng.gen_range(-1.0..1.0));
        let y = Array2::from_shape_fn((8, 3), |_| rng.gen_range(-1.0..1.0));
        let cfg = DeepConfig {
            width: 32,
            seed: 1,
            learning_rate: 0.2,
            batch: 8,
            max_epochs: 4000,
            early_stopping: false,
            ..DeepConfig::default()
        };
        let m = train_deep(&x, &y, &cfg).unwrap();
        let final_loss = loss_value(&m.params, &x, &y, DeepLoss::SquaredError);
        assert!(final_loss < 1e-4, "final training loss {final_loss}");

        // Rank each prediction against the 8 gold vectors.
        use crate::corpus::{assemble_dataset, EmbeddingTable, JoinKey, WordEntry};
        let words: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
        let table = EmbeddingTable::from_rows(
            3,
            words.iter().enumerate().map(|(i, w)| (w.clone(), y.row(i).to_vec())),
        )
        .unwrap();
        let entries: Vec<WordEntry> = words.iter().map(|w| WordEntry::new(w.clone(), 1)).collect();
        let ds = assemble_dataset(&entries, &table, JoinKey::Form).unwrap();
        let preds = m.predict(&x).unwrap();
        let rep = crate::eval::accuracy_report(&preds, &ds, &table, &[1], None).unwrap();
        assert_eq!(rep.type_acc[0], 1.0, "training accuracy@1 must be perfect");
    }

    #[test]
    fn wider_network_fits_rank_two_targets_better() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let x = Array2::from_shape_fn((24, 5), |_| rng.gen_range(-1.0..1.0));
        // Rank-2 target structure.
        let a = Array2::from_shape_fn((5, 2), |_| rng.gen_range(-1.0..1.0));
        let b = Array2::from_shape_fn((2, 4), |_| rng.gen_range(-1.0..1.0));
        let y = x.dot(&a).dot(&b).mapv(|v: f64| v.tanh());
        let train = |width: usize| {
            let cfg = DeepConfig {
                width,
                seed: 2,
                learning_rate: 0.1,
                batch: 24,
                max_epochs: 3000,
                early_stopping: false,
                ..DeepConfig::default()
            };
            let m = train_deep(&x, &y, &cfg).unwrap();
            loss_value(&m.params, &x, &y, DeepLoss::SquaredError)
        };
        let narrow = train(1);
        let wide = train(32);
        assert!(wide < narrow, "width 32 loss {wide} should beat width 1 loss {narrow}");
    }

    #[test]
    fn early_stop_fraction_validation() {
        let (x, y) = toy();
        let cfg = DeepConfig { val_fraction: 1.5, ..DeepConfig::default() };
        assert!(matches!(train_deep(&x, &y, &cfg), Err(Error::Argument(_))));
        let cfg = DeepConfig { val_fraction: 0.0, ..DeepConfig::default() };
        assert!(matches!(train_deep(&x, &y, &cfg), Err(Error::Argument(_))));
    }

    #[test]
    fn deep_container_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((12, 3), |_| rng.gen_range(-1.0..1.0));
        let y = Array2::from_shape_fn((12, 2), |_| rng.gen_range(0.0..1.0));
        let cfg = DeepConfig {
            width: 4,
            loss: DeepLoss::BinaryCrossEntropy,
            seed: 7,
            max_epochs: 20,
            ..DeepConfig::default()
        };
        let m = train_deep(&x, &y, &cfg).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_deep(f.path(), &m).unwrap();
        let back = load_deep(f.path()).unwrap();
        assert_eq!(back.params.w1, m.params.w1);
        assert_eq!(back.params.b1, m.params.b1);
        assert_eq!(back.params.w2, m.params.w2);
        assert_eq!(back.params.b2, m.params.b2);
        assert_eq!(back.loss, m.loss);
        assert_eq!(back.record.best_epoch, m.record.best_epoch);
        assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
    }

    #[test]
    fn training_is_reproducible_and_recorded() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let x = Array2::from_shape_fn((30, 4), |_| rng.gen_range(-1.0..1.0));
        let y = Array2::from_shape_fn((30, 2), |_| rng.gen_range(-1.0..1.0));
        let cfg = DeepConfig {
            width: 8,
            seed: 5,
            learning_rate: 0.05,
            max_epochs: 60,
            patience: 10,
            ..DeepConfig::default()
        };
        let a = train_deep(&x, &y, &cfg).unwrap();
        let b = train_deep(&x, &y, &cfg).unwrap();
        assert_eq!(a.params.w1, b.params.w1);
        assert_eq!(a.record.best_epoch, b.record.best_epoch);
        // Validation losses at improvement epochs strictly decrease, and the
        // train-side losses recorded with them do not increase.
        let imps = &a.record.improvements;
        assert!(!imps.is_empty());
        for w in imps.windows(2) {
            assert!(w[1].val_loss < w[0].val_loss);
            assert!(w[1].train_loss <= w[0].train_loss + 1e-9);
        }
        assert_eq!(a.record.best_epoch, imps.last().unwrap().epoch);
    }
}
