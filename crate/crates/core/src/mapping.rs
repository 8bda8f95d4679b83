//! Linear form/meaning mappings: closed-form endstate estimation and
//! incremental frequency-informed learning, plus application and a
//! serialization container.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::FormMatrix;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Form vectors to semantic vectors.
    Comprehension,
    /// Semantic vectors to form vectors.
    Production,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Endstate of learning: penalized least squares.
    Eol,
    /// Frequency-informed learning: incremental delta rule over tokens.
    Fil,
}

/// Training settings worth keeping with the weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A dense linear mapping between form and meaning spaces.
///
/// `weights` is in-dim x out-dim: rows of a comprehension mapping are
/// cue-specific semantic vectors; columns of a production mapping are the
/// cue-supporting vectors.
#[derive(Debug, Clone)]
pub struct LinearMapping {
    pub weights: Array2<f64>,
    pub direction: Direction,
    pub method: Method,
    pub hyperparams: Hyperparams,
}

impl LinearMapping {
    pub fn in_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Semantic vector contributed by one cue (comprehension row).
    pub fn cue_row(&self, cue_id: u32) -> ArrayView1<'_, f64> {
        self.weights.row(cue_id as usize)
    }

    /// Semantic vector supporting one cue (production column).
    pub fn cue_column(&self, cue_id: u32) -> ArrayView1<'_, f64> {
        self.weights.column(cue_id as usize)
    }

    /// Apply to dense input rows: X W.
    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.in_dim() {
            return Err(Error::Dimension(format!(
                "input has {} columns, mapping expects {}",
                x.ncols(),
                self.in_dim()
            )));
        }
        Ok(x.dot(&self.weights))
    }

    /// Apply to binary form rows: each prediction is the column-wise sum of
    /// the weight rows of the word's active cues.
    pub fn apply_sparse(&self, x: &FormMatrix) -> Result<Array2<f64>> {
        linalg::sparse_dot(x, &self.weights)
    }
}

/// Estimate a mapping in the limit of experience: W minimizing
/// ||X W - Y||^2 + lambda ||W||^2 (minimum-norm at lambda = 0).
pub fn solve_endstate(
    x: &Array2<f64>,
    y: &Array2<f64>,
    lambda: f64,
    direction: Direction,
) -> Result<LinearMapping> {
    let weights = linalg::lstsq(x, y, lambda)?;
    Ok(LinearMapping {
        weights,
        direction,
        method: Method::Eol,
        hyperparams: Hyperparams { lambda: Some(lambda), ..Default::default() },
    })
}

/// `solve_endstate` over a binary form matrix without densifying it.
pub fn solve_endstate_sparse(
    x: &FormMatrix,
    y: &Array2<f64>,
    lambda: f64,
    direction: Direction,
) -> Result<LinearMapping> {
    let weights = linalg::lstsq_sparse(x, y, lambda)?;
    Ok(LinearMapping {
        weights,
        direction,
        method: Method::Eol,
        hyperparams: Hyperparams { lambda: Some(lambda), ..Default::default() },
    })
}

/// Token-level input to the delta rule: either a binary cue row or a dense
/// real-valued row.
enum Row<'a> {
    Sparse(&'a [u32]),
    Dense(ArrayView1<'a, f64>),
}

/// Frequency-informed learning: repeat each word frequency-many times,
/// shuffle the token stream once with the given seed, and apply the delta
/// rule W += eta * x^T (y - x W) token by token, starting from W = 0.
#[allow(clippy::too_many_arguments)]
fn train_fil_impl<'a, F: Fn(usize) -> Row<'a>>(
    xs: F,
    y_rows: &Array2<f64>,
    n_rows: usize,
    in_dim: usize,
    freqs: &[u64],
    eta: f64,
    epochs: usize,
    seed: u64,
    direction: Direction,
) -> Result<LinearMapping> {
    if freqs.len() != n_rows {
        return Err(Error::Dimension(format!(
            "{} frequencies for {} rows",
            freqs.len(),
            n_rows
        )));
    }
    if eta <= 0.0 {
        return Err(Error::Argument(format!("learning rate must be positive, got {eta}")));
    }
    let total: u64 = freqs.iter().sum();
    if total == 0 {
        return Err(Error::EmptyTokenStream);
    }

    let mut stream: Vec<u32> = Vec::with_capacity(total as usize);
    for (i, &f) in freqs.iter().enumerate() {
        for _ in 0..f {
            stream.push(i as u32);
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    stream.shuffle(&mut rng);

    let out_dim = y_rows.ncols();
    let mut w = Array2::<f64>::zeros((in_dim, out_dim));
    let mut err = vec![0.0_f64; out_dim];
    for _ in 0..epochs {
        for &t in &stream {
            let t = t as usize;
            let y = y_rows.row(t);
            match xs(t) {
                Row::Sparse(active) => {
                    // prediction = sum of active weight rows
                    for (e, v) in err.iter_mut().zip(y.iter()) {
                        *e = *v;
                    }
                    for &c in active {
                        let wr = w.row(c as usize);
                        for (e, v) in err.iter_mut().zip(wr.iter()) {
                            *e -= v;
                        }
                    }
                    for &c in active {
                        let mut wr = w.row_mut(c as usize);
                        for (v, e) in wr.iter_mut().zip(err.iter()) {
                            *v += eta * e;
                        }
                    }
                }
                Row::Dense(x) => {
                    let pred = x.dot(&w);
                    for ((e, y), p) in err.iter_mut().zip(y.iter()).zip(pred.iter()) {
                        *e = y - p;
                    }
                    for (i, &xi) in x.iter().enumerate() {
                        if xi == 0.0 {
                            continue;
                        }
                        let mut wr = w.row_mut(i);
                        for (v, e) in wr.iter_mut().zip(err.iter()) {
                            *v += eta * xi * e;
                        }
                    }
                }
            }
        }
    }
    Ok(LinearMapping {
        weights: w,
        direction,
        method: Method::Fil,
        hyperparams: Hyperparams {
            eta: Some(eta),
            epochs: Some(epochs),
            seed: Some(seed),
            ..Default::default()
        },
    })
}

/// Frequency-informed learning over binary form rows (comprehension).
#[allow(clippy::too_many_arguments)]
pub fn train_frequency_informed(
    x: &FormMatrix,
    y: &Array2<f64>,
    freqs: &[u64],
    eta: f64,
    epochs: usize,
    seed: u64,
    direction: Direction,
) -> Result<LinearMapping> {
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!(
            "design has {} rows, targets have {}",
            x.nrows(),
            y.nrows()
        )));
    }
    train_fil_impl(
        |i| Row::Sparse(x.row(i)),
        y,
        x.nrows(),
        x.ncols(),
        freqs,
        eta,
        epochs,
        seed,
        direction,
    )
}

/// Frequency-informed learning over dense input rows (e.g. production from
/// semantic vectors).
#[allow(clippy::too_many_arguments)]
pub fn train_frequency_informed_dense(
    x: &Array2<f64>,
    y: &Array2<f64>,
    freqs: &[u64],
    eta: f64,
    epochs: usize,
    seed: u64,
    direction: Direction,
) -> Result<LinearMapping> {
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!(
            "design has {} rows, targets have {}",
            x.nrows(),
            y.nrows()
        )));
    }
    train_fil_impl(
        |i| Row::Dense(x.row(i)),
        y,
        x.nrows(),
        x.ncols(),
        freqs,
        eta,
        epochs,
        seed,
        direction,
    )
}

const MAPPING_MAGIC: &str = "lexmorph-mapping/1";

#[derive(Serialize, Deserialize)]
struct MappingHeader {
    magic: String,
    rows: usize,
    cols: usize,
    direction: Direction,
    method: Method,
    hyperparams: Hyperparams,
}

/// Write the container format: one JSON metadata line, then the weight matrix
/// as row-major little-endian f64.
pub fn save_mapping(path: impl AsRef<Path>, mapping: &LinearMapping) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let header = MappingHeader {
        magic: MAPPING_MAGIC.to_string(),
        rows: mapping.in_dim(),
        cols: mapping.out_dim(),
        direction: mapping.direction,
        method: mapping.method,
        hyperparams: mapping.hyperparams.clone(),
    };
    let io_err = |e| Error::io(path.display().to_string(), e);
    serde_json::to_writer(&mut w, &header).map_err(|e| Error::Other(e.to_string()))?;
    w.write_all(b"\n").map_err(io_err)?;
    for v in mapping.weights.iter() {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn load_mapping(path: impl AsRef<Path>) -> Result<LinearMapping> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = BufReader::new(file);
    let mut header_line = Vec::new();
    {
        use std::io::BufRead;
        r.read_until(b'\n', &mut header_line)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    let header: MappingHeader = serde_json::from_slice(&header_line)
        .map_err(|e| Error::Other(format!("bad mapping header: {e}")))?;
    if header.magic != MAPPING_MAGIC {
        return Err(Error::Other(format!("unrecognized mapping container {:?}", header.magic)));
    }
    let mut buf = vec![0u8; header.rows * header.cols * 8];
    r.read_exact(&mut buf).map_err(|e| Error::io(path.display().to_string(), e))?;
    let values: Vec<f64> =
        buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let weights = Array2::from_shape_vec((header.rows, header.cols), values)
        .map_err(|e| Error::Other(e.to_string()))?;
    Ok(LinearMapping {
        weights,
        direction: header.direction,
        method: header.method,
        hyperparams: header.hyperparams,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;

    fn small_form_matrix() -> FormMatrix {
        let mut fm = FormMatrix::new(4);
        fm.push_row(vec![0, 1]);
        fm.push_row(vec![1, 2]);
        fm.push_row(vec![2, 3]);
        fm
    }

    #[test]
    fn endstate_identity_design() {
        let x = Array2::eye(2);
        let y = array![[1.0, 2.0], [3.0, 4.0]];
        let m = solve_endstate(&x, &y, 0.0, Direction::Comprehension).unwrap();
        assert_abs_diff_eq!(m.weights, y, epsilon = 1e-12);
        assert_eq!(m.method, Method::Eol);
    }

    #[test]
    fn fil_zero_epochs_is_zero_mapping() {
        let fm = small_form_matrix();
        let y = array![[1.0], [2.0], [3.0]];
        let m =
            train_frequency_informed(&fm, &y, &[1, 1, 1], 0.1, 0, 7, Direction::Comprehension)
                .unwrap();
        assert!(m.weights.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fil_all_zero_frequencies_is_error() {
        let fm = small_form_matrix();
        let y = array![[1.0], [2.0], [3.0]];
        let err =
            train_frequency_informed(&fm, &y, &[0, 0, 0], 0.1, 1, 7, Direction::Comprehension)
                .unwrap_err();
        assert!(matches!(err, Error::EmptyTokenStream));
    }

    #[test]
    fn fil_is_reproducible_for_a_seed() {
        let fm = small_form_matrix();
        let y = array![[1.0, -1.0], [2.0, 0.5], [3.0, 0.0]];
        let a = train_frequency_informed(&fm, &y, &[5, 3, 2], 0.05, 3, 42, Direction::Comprehension)
            .unwrap();
        let b = train_frequency_informed(&fm, &y, &[5, 3, 2], 0.05, 3, 42, Direction::Comprehension)
            .unwrap();
        assert_eq!(a.weights, b.weights);
        let c = train_frequency_informed(&fm, &y, &[5, 3, 2], 0.05, 3, 43, Direction::Comprehension)
            .unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn fil_converges_to_endstate_on_full_rank_problem() {
        // Uniform frequencies, small eta, many epochs over a square
        // well-conditioned system approach the least-squares endstate.
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let mut fm = FormMatrix::new(2);
        fm.push_row(vec![0]);
        fm.push_row(vec![1]);
        fm.push_row(vec![0, 1]);
        let y = array![[0.5], [-0.25], [0.25]];
        let eol = solve_endstate(&x, &y, 0.0, Direction::Comprehension).unwrap();
        let fil =
            train_frequency_informed(&fm, &y, &[1, 1, 1], 0.01, 4000, 9, Direction::Comprehension)
                .unwrap();
        assert_abs_diff_eq!(fil.weights, eol.weights, epsilon = 1e-3);
    }

    #[test]
    fn fil_favors_frequent_words_on_shared_cues() {
        // Two words share cue 0; the frequent one keeps its own cue too.
        // Scalar-dimension oracle of the same delta rule, run by hand below.
        let mut fm = FormMatrix::new(3);
        fm.push_row(vec![0, 1]);
        fm.push_row(vec![0, 2]);
        let y = array![[1.0], [-1.0]];
        let m = train_frequency_informed(&fm, &y, &[1000, 1], 0.01, 1, 5, Direction::Comprehension)
            .unwrap();
        let preds = m.apply_sparse(&fm).unwrap();
        let err_frequent = (preds[[0, 0]] - 1.0).abs();
        let err_hapax = (preds[[1, 0]] - (-1.0)).abs();
        assert!(
            err_frequent < err_hapax,
            "frequent word should be predicted better: {err_frequent} vs {err_hapax}"
        );
    }

    #[test]
    fn fil_matches_scalar_delta_rule_oracle() {
        // One-dimensional targets, frequencies (2, 1): replay the exact
        // update order produced by the seeded shuffle.
        let mut fm = FormMatrix::new(2);
        fm.push_row(vec![0]);
        fm.push_row(vec![0, 1]);
        let y = array![[1.0], [2.0]];
        let eta = 0.5;
        let seed = 123;
        let m =
            train_frequency_informed(&fm, &y, &[2, 1], eta, 1, seed, Direction::Comprehension)
                .unwrap();

        let mut stream: Vec<u32> = vec![0, 0, 1];
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        stream.shuffle(&mut rng);
        let rows: [&[u32]; 2] = [&[0], &[0, 1]];
        let targets = [1.0, 2.0];
        let mut w = [0.0_f64; 2];
        for &t in &stream {
            let active = rows[t as usize];
            let pred: f64 = active.iter().map(|&c| w[c as usize]).sum();
            let err = targets[t as usize] - pred;
            for &c in active {
                w[c as usize] += eta * err;
            }
        }
        assert_abs_diff_eq!(m.weights[[0, 0]], w[0], epsilon = 1e-12);
        assert_abs_diff_eq!(m.weights[[1, 0]], w[1], epsilon = 1e-12);
    }

    #[test]
    fn apply_one_hot_selects_weight_row() {
        let y = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let m = LinearMapping {
            weights: y.clone(),
            direction: Direction::Comprehension,
            method: Method::Eol,
            hyperparams: Hyperparams::default(),
        };
        let mut fm = FormMatrix::new(3);
        fm.push_row(vec![1]);
        let pred = m.apply_sparse(&fm).unwrap();
        assert_abs_diff_eq!(pred.row(0).to_owned(), y.row(1).to_owned(), epsilon = 1e-15);
    }

    #[test]
    fn apply_sums_active_cue_rows() {
        // Five active cues: the prediction is the column-wise sum of their rows.
        let w = array![
            [0.1, -0.2],
            [0.3, 0.4],
            [-0.5, 0.6],
            [0.7, -0.8],
            [0.9, 1.0],
            [100.0, 100.0]
        ];
        let m = LinearMapping {
            weights: w.clone(),
            direction: Direction::Comprehension,
            method: Method::Eol,
            hyperparams: Hyperparams::default(),
        };
        let mut fm = FormMatrix::new(6);
        fm.push_row(vec![0, 1, 2, 3, 4]);
        let pred = m.apply_sparse(&fm).unwrap();
        let expected = [0.1 + 0.3 - 0.5 + 0.7 + 0.9, -0.2 + 0.4 + 0.6 - 0.8 + 1.0];
        assert_abs_diff_eq!(pred[[0, 0]], expected[0], epsilon = 1e-12);
        assert_abs_diff_eq!(pred[[0, 1]], expected[1], epsilon = 1e-12);
    }

    #[test]
    fn apply_is_linear() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let w = Array2::from_shape_fn((4, 3), |_| rng.gen_range(-1.0..1.0));
        let m = LinearMapping {
            weights: w,
            direction: Direction::Comprehension,
            method: Method::Eol,
            hyperparams: Hyperparams::default(),
        };
        let x1 = Array2::from_shape_fn((2, 4), |_| rng.gen_range(-1.0..1.0));
        let x2 = Array2::from_shape_fn((2, 4), |_| rng.gen_range(-1.0..1.0));
        let (a, b) = (2.5, -1.25);
        let combined = m.apply(&(a * &x1 + b * &x2)).unwrap();
        let separate = a * m.apply(&x1).unwrap() + b * m.apply(&x2).unwrap();
        assert_abs_diff_eq!(combined, separate, epsilon = 1e-10);
    }

    #[test]
    fn mapping_dimension_mismatch_is_error() {
        let m = LinearMapping {
            weights: Array2::zeros((3, 2)),
            direction: Direction::Comprehension,
            method: Method::Eol,
            hyperparams: Hyperparams::default(),
        };
        assert!(m.apply(&Array2::zeros((1, 4))).is_err());
    }

    #[test]
    fn container_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let m = LinearMapping {
            weights: Array2::from_shape_fn((7, 5), |_| rng.gen_range(-2.0..2.0)),
            direction: Direction::Production,
            method: Method::Fil,
            hyperparams: Hyperparams {
                eta: Some(0.001),
                epochs: Some(1),
                seed: Some(17),
                ..Default::default()
            },
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        save_mapping(f.path(), &m).unwrap();
        let back = load_mapping(f.path()).unwrap();
        assert_eq!(back.weights, m.weights);
        assert_eq!(back.direction, m.direction);
        assert_eq!(back.method, m.method);
        assert_eq!(back.hyperparams, m.hyperparams);
    }
}
