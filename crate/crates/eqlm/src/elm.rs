//! Single-layer feed-forward network with a fixed random hidden layer,
//! batch and regularized ELM solves, and the incremental least-squares
//! (LS-IELM) update rules that drive the EQLM agent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Hidden-node activation. Only the logistic sigmoid is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }
}

/// How random weights are drawn at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightInit {
    /// Every parameter uniform on [-scale, scale]. Scale 1 is the usual
    /// ELM choice; wider scales sharpen the sigmoid features.
    Uniform { scale: f64 },
    /// Uniform on [-1, 1] scaled by 1/sqrt(fan-in) per layer; used by the
    /// gradient-trained baseline so early outputs stay small.
    FanInScaled,
}

/// Single-layer feed-forward network.
///
/// The hidden layer (`input_weights` rows and `biases`) is drawn once at
/// construction; the ELM operations only ever solve for `output_weights`.
/// The gradient-descent agent trains all three parameter blocks through
/// crate-internal access.
#[derive(Debug, Clone, PartialEq)]
pub struct Slfn {
    /// Hidden-node input weights, one row per hidden node (`n_hidden x n_in`).
    pub(crate) input_weights: Matrix,
    /// Hidden-node biases, length `n_hidden`.
    pub(crate) biases: Vec<f64>,
    /// Output weights beta (`n_hidden x n_out`).
    pub(crate) output_weights: Matrix,
    activation: Activation,
}

impl Slfn {
    /// Draws a new network from `rng`. Draw order is input weights
    /// (row-major), biases, then output weights (row-major).
    pub fn random(
        n_in: usize,
        n_hidden: usize,
        n_out: usize,
        init: WeightInit,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if n_in == 0 || n_hidden == 0 || n_out == 0 {
            return Err(Error::InvalidParameter {
                name: "dims",
                reason: format!("n_in={n_in}, n_hidden={n_hidden}, n_out={n_out} must all be >= 1"),
            });
        }
        let (w_scale, b_scale) = match init {
            WeightInit::Uniform { scale } => (scale, scale),
            WeightInit::FanInScaled => (1.0 / (n_in as f64).sqrt(), 1.0 / (n_hidden as f64).sqrt()),
        };
        let input_weights =
            Matrix::from_fn(n_hidden, n_in, |_, _| rng.random_range(-1.0..1.0) * w_scale)?;
        let biases: Vec<f64> = (0..n_hidden)
            .map(|_| rng.random_range(-1.0..1.0) * w_scale)
            .collect();
        let output_weights =
            Matrix::from_fn(n_hidden, n_out, |_, _| rng.random_range(-1.0..1.0) * b_scale)?;
        Ok(Slfn {
            input_weights,
            biases,
            output_weights,
            activation: Activation::Sigmoid,
        })
    }

    /// Assembles a network from explicit parameters, validating shapes.
    pub fn from_parts(
        input_weights: Matrix,
        biases: Vec<f64>,
        output_weights: Matrix,
        activation: Activation,
    ) -> Result<Self> {
        if biases.len() != input_weights.rows() {
            return Err(Error::shape(
                "Slfn::from_parts",
                format!(
                    "{} biases for {} hidden nodes",
                    biases.len(),
                    input_weights.rows()
                ),
            ));
        }
        if output_weights.rows() != input_weights.rows() {
            return Err(Error::shape(
                "Slfn::from_parts",
                format!(
                    "output weights have {} rows, expected {}",
                    output_weights.rows(),
                    input_weights.rows()
                ),
            ));
        }
        if !biases.iter().all(|b| b.is_finite()) {
            return Err(Error::NonFinite("Slfn::from_parts"));
        }
        Ok(Slfn {
            input_weights,
            biases,
            output_weights,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.cols()
    }

    pub fn hidden_count(&self) -> usize {
        self.input_weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.output_weights.cols()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_weights(&self) -> &Matrix {
        &self.input_weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Current output weights beta.
    pub fn output_weights(&self) -> &Matrix {
        &self.output_weights
    }

    /// Replaces beta, keeping the `n_hidden x n_out` shape.
    pub fn set_output_weights(&mut self, beta: Matrix) -> Result<()> {
        if beta.rows() != self.hidden_count() || beta.cols() != self.output_dim() {
            return Err(Error::shape(
                "set_output_weights",
                format!(
                    "{}x{}, expected {}x{}",
                    beta.rows(),
                    beta.cols(),
                    self.hidden_count(),
                    self.output_dim()
                ),
            ));
        }
        self.output_weights = beta;
        Ok(())
    }

    /// Hidden activations for one input sample.
    pub fn hidden_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(
                "hidden_row",
                format!("input length {}, expected {}", x.len(), self.input_dim()),
            ));
        }
        Ok((0..self.hidden_count())
            .map(|i| {
                let w = self.input_weights.row(i);
                let z: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + self.biases[i];
                self.activation.apply(z)
            })
            .collect())
    }

    /// Hidden layer output matrix: row j holds the hidden activations of
    /// sample j, entry (j, i) = g(w_i . x_j + b_i).
    pub fn hidden_matrix(&self, inputs: &Matrix) -> Result<Matrix> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::shape(
                "hidden_matrix",
                format!("inputs have {} columns, expected {}", inputs.cols(), self.input_dim()),
            ));
        }
        let mut h = Matrix::zeros(inputs.rows(), self.hidden_count());
        for j in 0..inputs.rows() {
            let row = self.hidden_row(inputs.row(j))?;
            for (i, v) in row.into_iter().enumerate() {
                h.set(j, i, v);
            }
        }
        Ok(h)
    }

    /// Network output for one sample: hidden activations times beta.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward_with_beta(x, &self.output_weights)
    }

    /// Forward pass with an alternative beta over the same hidden layer.
    /// The EQLM target network is exactly this: shared hidden layer, its
    /// own snapshot of beta.
    pub fn forward_with_beta(&self, x: &[f64], beta: &Matrix) -> Result<Vec<f64>> {
        if beta.rows() != self.hidden_count() {
            return Err(Error::shape(
                "forward_with_beta",
                format!("beta has {} rows, expected {}", beta.rows(), self.hidden_count()),
            ));
        }
        let h = self.hidden_row(x)?;
        let m = beta.cols();
        let mut out = vec![0.0; m];
        for (i, hi) in h.iter().enumerate() {
            let row = beta.row(i);
            for (o, b) in out.iter_mut().zip(row) {
                *o += hi * b;
            }
        }
        Ok(out)
    }

    /// Batch ELM solve: beta <- pinv(H) T, the minimum-norm least-squares
    /// solution of H beta = T.
    pub fn fit_batch_elm(&mut self, inputs: &Matrix, targets: &Matrix) -> Result<()> {
        self.check_training_shapes("fit_batch_elm", inputs, targets)?;
        let h = self.hidden_matrix(inputs)?;
        let beta = h.pinv()?.matmul(targets)?;
        self.output_weights = beta;
        Ok(())
    }

    /// Regularized ELM solve: beta <- pinv(I/gamma_bar + H^T H) H^T T.
    /// Batch ELM is the gamma_bar -> infinity limit.
    pub fn fit_regularized(&mut self, inputs: &Matrix, targets: &Matrix, gamma_bar: f64) -> Result<()> {
        check_gamma_bar(gamma_bar)?;
        self.check_training_shapes("fit_regularized", inputs, targets)?;
        let h = self.hidden_matrix(inputs)?;
        let a = regularized_gram(&h, gamma_bar)?;
        let beta = a.pinv()?.matmul(&h.transpose().matmul(targets)?)?;
        self.output_weights = beta;
        Ok(())
    }

    fn check_training_shapes(&self, op: &'static str, inputs: &Matrix, targets: &Matrix) -> Result<()> {
        if inputs.rows() != targets.rows() {
            return Err(Error::shape(
                op,
                format!("{} input rows vs {} target rows", inputs.rows(), targets.rows()),
            ));
        }
        if targets.cols() != self.output_dim() {
            return Err(Error::shape(
                op,
                format!("targets have {} columns, expected {}", targets.cols(), self.output_dim()),
            ));
        }
        Ok(())
    }

    /// Checkpoint view of the network; `gamma_bar` rides along when the
    /// network is trained by the regularized recursion.
    pub fn to_checkpoint(&self, gamma_bar: Option<f64>) -> SlfnCheckpoint {
        SlfnCheckpoint {
            n_in: self.input_dim(),
            n_hidden: self.hidden_count(),
            n_out: self.output_dim(),
            activation: self.activation,
            gamma_bar,
            input_weights: self.input_weights.as_slice().to_vec(),
            biases: self.biases.clone(),
            output_weights: self.output_weights.as_slice().to_vec(),
        }
    }

    pub fn from_checkpoint(cp: &SlfnCheckpoint) -> Result<Self> {
        let input_weights = Matrix::from_vec(cp.n_hidden, cp.n_in, cp.input_weights.clone())?;
        let output_weights = Matrix::from_vec(cp.n_hidden, cp.n_out, cp.output_weights.clone())?;
        Slfn::from_parts(input_weights, cp.biases.clone(), output_weights, cp.activation)
    }
}

/// Flat checkpoint of an [`Slfn`]: dimensions first, then row-major weight
/// arrays. Serialized as JSON; round-trips are bit-exact for finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlfnCheckpoint {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
    pub activation: Activation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_bar: Option<f64>,
    pub input_weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub output_weights: Vec<f64>,
}

impl SlfnCheckpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("checkpoint parse: {e}")))
    }
}

fn check_gamma_bar(gamma_bar: f64) -> Result<()> {
    if !(gamma_bar.is_finite() && gamma_bar > 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma_bar",
            reason: format!("must be a positive finite number, got {gamma_bar}"),
        });
    }
    Ok(())
}

/// I/gamma_bar + H^T H.
fn regularized_gram(h: &Matrix, gamma_bar: f64) -> Result<Matrix> {
    let ht_h = h.transpose().matmul(h)?;
    Matrix::identity(h.cols()).scale(1.0 / gamma_bar)?.add(&ht_h)
}

/// Incremental least-squares ELM state: the network plus the maintained
/// pseudoinverse of A = I/gamma_bar + H^T H over all data seen so far.
///
/// Only A-dagger is ever stored; the update rules never reference A itself.
/// If any step of an update fails numerically the state is left unmodified,
/// so a training loop can skip a bad minibatch without corrupting it.
#[derive(Debug, Clone)]
pub struct LsielmState {
    net: Slfn,
    a_dagger: Matrix,
    gamma_bar: f64,
    initialized: bool,
}

impl LsielmState {
    pub fn new(net: Slfn, gamma_bar: f64) -> Result<Self> {
        check_gamma_bar(gamma_bar)?;
        let n_hidden = net.hidden_count();
        Ok(LsielmState {
            net,
            // Placeholder until `init`; the update rules are gated on it.
            a_dagger: Matrix::zeros(n_hidden, n_hidden),
            gamma_bar,
            initialized: false,
        })
    }

    pub fn net(&self) -> &Slfn {
        &self.net
    }

    pub fn gamma_bar(&self) -> f64 {
        self.gamma_bar
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// Maintained pseudoinverse of A; meaningful only after `init`.
    pub fn a_dagger(&self) -> &Matrix {
        &self.a_dagger
    }

    /// First fit: A <- I/gamma_bar + H^T H, A-dagger <- pinv(A),
    /// beta <- A-dagger H^T T.
    pub fn init(&mut self, inputs: &Matrix, targets: &Matrix) -> Result<()> {
        if self.initialized {
            return Err(Error::State("LS-IELM state is already initialized"));
        }
        self.net.check_training_shapes("lsielm_init", inputs, targets)?;
        let h = self.net.hidden_matrix(inputs)?;
        let a = regularized_gram(&h, self.gamma_bar)?;
        let a_dagger = a.pinv()?;
        let beta = a_dagger.matmul(&h.transpose().matmul(targets)?)?;
        self.a_dagger = a_dagger;
        self.net.output_weights = beta;
        self.initialized = true;
        Ok(())
    }

    /// Replaces the maintained gain matrix; the EQLM agent uses this to
    /// re-arm the recursion when its target network refreshes.
    pub(crate) fn restore_a_dagger(&mut self, a_dagger: Matrix) {
        assert!(self.initialized, "restore_a_dagger before init");
        assert_eq!(a_dagger.rows(), self.net.hidden_count());
        assert_eq!(a_dagger.cols(), self.net.hidden_count());
        self.a_dagger = a_dagger;
    }

    /// Incorporates one chunk of k samples:
    ///
    /// K = I - Ad H^T (H Ad H^T + I_k)^dagger H
    /// beta <- K beta + K Ad H^T T
    /// Ad <- K Ad
    ///
    /// where H is the chunk's hidden matrix and Ad the stored A-dagger.
    /// All three assignments happen atomically after every intermediate
    /// succeeds.
    pub fn update(&mut self, chunk_inputs: &Matrix, chunk_targets: &Matrix) -> Result<()> {
        if !self.initialized {
            return Err(Error::State("LS-IELM update before init"));
        }
        self.net
            .check_training_shapes("lsielm_update", chunk_inputs, chunk_targets)?;
        if chunk_inputs.rows() == 0 {
            return Err(Error::InvalidInput("empty LS-IELM chunk".to_string()));
        }

        let h_ic = self.net.hidden_matrix(chunk_inputs)?;
        let h_ic_t = h_ic.transpose();
        let ad_ht = self.a_dagger.matmul(&h_ic_t)?;
        let inner = h_ic
            .matmul(&ad_ht)?
            .add(&Matrix::identity(h_ic.rows()))?
            .pinv()?;
        let gain = ad_ht.matmul(&inner)?;
        let k_t = Matrix::identity(self.net.hidden_count()).sub(&gain.matmul(&h_ic)?)?;

        let new_beta = k_t
            .matmul(&self.net.output_weights)?
            .add(&k_t.matmul(&ad_ht.matmul(chunk_targets)?)?)?;
        let new_a_dagger = k_t.matmul(&self.a_dagger)?;

        self.net.output_weights = new_beta;
        self.a_dagger = new_a_dagger;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_net(n_in: usize, n_hidden: usize, n_out: usize, seed: u64) -> Slfn {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Slfn::random(n_in, n_hidden, n_out, WeightInit::Uniform { scale: 1.0 }, &mut rng).unwrap()
    }

    fn random_data(n: usize, n_in: usize, n_out: usize, rng: &mut impl Rng) -> (Matrix, Matrix) {
        let x = Matrix::from_fn(n, n_in, |_, _| rng.random_range(-3.0..3.0)).unwrap();
        let t = Matrix::from_fn(n, n_out, |_, _| rng.random_range(-2.0..2.0)).unwrap();
        (x, t)
    }

    fn zero_weight_net(n_in: usize, n_hidden: usize, beta: Matrix) -> Slfn {
        Slfn::from_parts(
            Matrix::zeros(n_hidden, n_in),
            vec![0.0; n_hidden],
            beta,
            Activation::Sigmoid,
        )
        .unwrap()
    }

    /// Test-only Gaussian elimination solve of A x = b for symmetric
    /// positive-definite A; the oracle route for the regularized fit.
    fn dense_solve(a: &Matrix, b: &Matrix) -> Matrix {
        let n = a.rows();
        let m = b.cols();
        let mut aug: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row = a.row(i).to_vec();
                row.extend_from_slice(b.row(i));
                row
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| aug[p][col].abs().partial_cmp(&aug[q][col].abs()).unwrap())
                .unwrap();
            aug.swap(col, pivot);
            let d = aug[col][col];
            assert!(d.abs() > 0.0, "singular system in oracle");
            for v in &mut aug[col] {
                *v /= d;
            }
            for row in 0..n {
                if row != col {
                    let f = aug[row][col];
                    for j in 0..n + m {
                        aug[row][j] -= f * aug[col][j];
                    }
                }
            }
        }
        Matrix::from_fn(n, m, |i, j| aug[i][n + j]).unwrap()
    }

    #[test]
    fn hidden_matrix_zero_weights_gives_half() {
        let net = zero_weight_net(3, 4, Matrix::zeros(4, 1));
        let x = Matrix::from_fn(5, 3, |i, j| (i + j) as f64).unwrap();
        let h = net.hidden_matrix(&x).unwrap();
        for i in 0..5 {
            for j in 0..4 {
                assert_eq!(h.get(i, j), 0.5);
            }
        }
    }

    #[test]
    fn hidden_matrix_orthogonal_input() {
        let net = Slfn::from_parts(
            Matrix::from_rows(&[&[1.0, 0.0]]).unwrap(),
            vec![0.0],
            Matrix::zeros(1, 1),
            Activation::Sigmoid,
        )
        .unwrap();
        let x = Matrix::from_rows(&[&[0.0, 5.0]]).unwrap();
        let h = net.hidden_matrix(&x).unwrap();
        assert_eq!(h.get(0, 0), 0.5);
    }

    #[test]
    fn hidden_matrix_matches_scalar_oracle() {
        let net = random_net(3, 6, 2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = Matrix::from_fn(4, 3, |_, _| rng.random_range(-2.0..2.0)).unwrap();
        let h = net.hidden_matrix(&x).unwrap();
        for j in 0..4 {
            for i in 0..6 {
                let mut z = net.biases()[i];
                for d in 0..3 {
                    z += net.input_weights().get(i, d) * x.get(j, d);
                }
                let want = 1.0 / (1.0 + (-z).exp());
                assert!((h.get(j, i) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hidden_matrix_rejects_wrong_width() {
        let net = random_net(3, 4, 1, 9);
        let x = Matrix::zeros(2, 5);
        assert!(matches!(net.hidden_matrix(&x), Err(Error::Shape { .. })));
    }

    #[test]
    fn forward_zero_beta_is_zero() {
        let net = random_net(4, 7, 2, 10);
        let mut net = net;
        net.set_output_weights(Matrix::zeros(7, 2)).unwrap();
        let out = net.forward(&[0.3, -0.4, 1.0, 0.1]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn forward_half_activation_scales_beta() {
        let beta = Matrix::from_rows(&[&[2.0, -2.0]]).unwrap();
        let net = zero_weight_net(2, 1, beta);
        let out = net.forward(&[0.7, -0.2]).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-15);
        assert!((out[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn forward_equals_hidden_times_beta() {
        let net = random_net(4, 9, 3, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let xm = Matrix::from_vec(1, 4, x.clone()).unwrap();
        let want = net.hidden_matrix(&xm).unwrap().matmul(net.output_weights()).unwrap();
        let got = net.forward(&x).unwrap();
        for j in 0..3 {
            assert!((got[j] - want.get(0, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_batch_zero_targets_zero_beta() {
        let mut net = random_net(2, 5, 2, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (x, _) = random_data(8, 2, 2, &mut rng);
        net.fit_batch_elm(&x, &Matrix::zeros(8, 2)).unwrap();
        assert!(net.output_weights().max_abs() < 1e-12);
    }

    #[test]
    fn fit_batch_square_interpolates() {
        // N = n_hidden: the network can hit the samples exactly when H is
        // well conditioned.
        let mut net = random_net(2, 5, 1, 15);
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let (x, t) = random_data(5, 2, 1, &mut rng);
        net.fit_batch_elm(&x, &t).unwrap();
        let h = net.hidden_matrix(&x).unwrap();
        let residual = max_abs_diff(&h.matmul(net.output_weights()).unwrap(), &t);
        assert!(residual < 1e-6, "residual {residual}");
    }

    #[test]
    fn fit_batch_overdetermined_matches_normal_equations() {
        let mut net = random_net(3, 5, 2, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let (x, t) = random_data(20, 3, 2, &mut rng);
        net.fit_batch_elm(&x, &t).unwrap();
        let h = net.hidden_matrix(&x).unwrap();
        let ht = h.transpose();
        let beta_oracle = dense_solve(&ht.matmul(&h).unwrap(), &ht.matmul(&t).unwrap());
        assert!(max_abs_diff(net.output_weights(), &beta_oracle) < 1e-8);
    }

    #[test]
    fn fit_batch_rejects_row_mismatch() {
        let mut net = random_net(2, 4, 1, 19);
        let x = Matrix::zeros(3, 2);
        let t = Matrix::zeros(4, 1);
        assert!(matches!(net.fit_batch_elm(&x, &t), Err(Error::Shape { .. })));
    }

    #[test]
    fn fit_regularized_zero_targets_zero_beta() {
        let mut net = random_net(2, 5, 2, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (x, _) = random_data(8, 2, 2, &mut rng);
        net.fit_regularized(&x, &Matrix::zeros(8, 2), 1.0).unwrap();
        assert!(net.output_weights().max_abs() < 1e-12);
    }

    #[test]
    fn fit_regularized_large_gamma_approaches_batch_elm() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (x, t) = random_data(20, 3, 2, &mut rng);
        let mut reg = random_net(3, 5, 2, 23);
        let mut batch = reg.clone();
        reg.fit_regularized(&x, &t, 1e12).unwrap();
        batch.fit_batch_elm(&x, &t).unwrap();
        assert!(max_abs_diff(reg.output_weights(), batch.output_weights()) < 1e-4);
    }

    #[test]
    fn fit_regularized_matches_dense_solve_oracle() {
        let mut net = random_net(3, 6, 2, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let (x, t) = random_data(15, 3, 2, &mut rng);
        net.fit_regularized(&x, &t, 1.0).unwrap();
        let h = net.hidden_matrix(&x).unwrap();
        let ht = h.transpose();
        let a = Matrix::identity(6).add(&ht.matmul(&h).unwrap()).unwrap();
        let beta_oracle = dense_solve(&a, &ht.matmul(&t).unwrap());
        assert!(max_abs_diff(net.output_weights(), &beta_oracle) < 1e-8);
    }

    #[test]
    fn fit_regularized_rejects_bad_gamma() {
        let mut net = random_net(2, 3, 1, 26);
        let x = Matrix::zeros(2, 2);
        let t = Matrix::zeros(2, 1);
        for bad in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                net.fit_regularized(&x, &t, bad),
                Err(Error::InvalidParameter { name: "gamma_bar", .. })
            ));
        }
    }

    #[test]
    fn lsielm_init_scalar_closed_form() {
        // Single hidden node, single sample: a = 1/gamma + h^2, beta = h t / a.
        let net = Slfn::from_parts(
            Matrix::from_rows(&[&[0.8, -0.3]]).unwrap(),
            vec![0.1],
            Matrix::zeros(1, 1),
            Activation::Sigmoid,
        )
        .unwrap();
        let gamma_bar = 2.5;
        let mut state = LsielmState::new(net, gamma_bar).unwrap();
        let x = Matrix::from_rows(&[&[1.2, 0.4]]).unwrap();
        let t = Matrix::from_rows(&[&[0.7]]).unwrap();
        state.init(&x, &t).unwrap();

        let z = 0.8 * 1.2 + (-0.3) * 0.4 + 0.1;
        let h = 1.0 / (1.0 + (-z as f64).exp());
        let a = 1.0 / gamma_bar + h * h;
        let beta_expected = h * 0.7 / a;
        assert!((state.net().output_weights().get(0, 0) - beta_expected).abs() < 1e-12);
        assert!((state.a_dagger().get(0, 0) - 1.0 / a).abs() < 1e-12);
    }

    #[test]
    fn lsielm_init_matches_fit_regularized() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let (x, t) = random_data(12, 3, 2, &mut rng);
        let net = random_net(3, 6, 2, 28);
        let mut reference = net.clone();
        reference.fit_regularized(&x, &t, 0.5).unwrap();
        let mut state = LsielmState::new(net, 0.5).unwrap();
        state.init(&x, &t).unwrap();
        assert!(max_abs_diff(state.net().output_weights(), reference.output_weights()) < 1e-10);
    }

    #[test]
    fn lsielm_double_init_is_state_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let (x, t) = random_data(4, 2, 1, &mut rng);
        let mut state = LsielmState::new(random_net(2, 3, 1, 30), 1.0).unwrap();
        state.init(&x, &t).unwrap();
        assert!(matches!(state.init(&x, &t), Err(Error::State(_))));
    }

    #[test]
    fn lsielm_update_before_init_is_state_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (x, t) = random_data(2, 2, 1, &mut rng);
        let mut state = LsielmState::new(random_net(2, 3, 1, 32), 1.0).unwrap();
        assert!(matches!(state.update(&x, &t), Err(Error::State(_))));
    }

    #[test]
    fn lsielm_update_equals_batch_on_union() {
        // The defining LS-IELM property: init on D1 then update on D2 gives
        // the regularized batch solution on D1 u D2.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (x1, t1) = random_data(10, 3, 2, &mut rng);
        let (x2, t2) = random_data(4, 3, 2, &mut rng);
        let net = random_net(3, 7, 2, 34);
        let gamma_bar = 0.8;

        let mut state = LsielmState::new(net.clone(), gamma_bar).unwrap();
        state.init(&x1, &t1).unwrap();
        state.update(&x2, &t2).unwrap();

        let mut union_x_rows: Vec<&[f64]> = (0..10).map(|i| x1.row(i)).collect();
        union_x_rows.extend((0..4).map(|i| x2.row(i)));
        let union_x = Matrix::from_rows(&union_x_rows).unwrap();
        let mut union_t_rows: Vec<&[f64]> = (0..10).map(|i| t1.row(i)).collect();
        union_t_rows.extend((0..4).map(|i| t2.row(i)));
        let union_t = Matrix::from_rows(&union_t_rows).unwrap();

        let mut reference = net;
        reference.fit_regularized(&union_x, &union_t, gamma_bar).unwrap();
        assert!(max_abs_diff(state.net().output_weights(), reference.output_weights()) < 1e-8);
    }

    #[test]
    fn lsielm_consistent_refit_is_a_fixed_point() {
        // Targets generated by the network itself and nearly no
        // regularization: re-presenting the same data moves beta only
        // marginally.
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let net = random_net(3, 4, 2, 36);
        let x = Matrix::from_fn(12, 3, |_, _| rng.random_range(-3.0..3.0)).unwrap();
        let beta_true = Matrix::from_fn(4, 2, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let t = net.hidden_matrix(&x).unwrap().matmul(&beta_true).unwrap();

        let mut state = LsielmState::new(net, 1e10).unwrap();
        state.init(&x, &t).unwrap();
        let before = state.net().output_weights().clone();
        state.update(&x, &t).unwrap();
        let drift = max_abs_diff(state.net().output_weights(), &before);
        assert!(drift < 1e-6, "drift {drift}");
    }

    #[test]
    fn lsielm_single_sample_matches_scalar_rls_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let (x1, t1) = random_data(8, 3, 2, &mut rng);
        let net = random_net(3, 5, 2, 38);
        let mut state = LsielmState::new(net, 1.3).unwrap();
        state.init(&x1, &t1).unwrap();

        let x_new: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let t_new: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();

        // Rank-one recursive least-squares oracle, computed with scalar
        // loops and no pseudoinverse:
        //   beta' = beta + Ad h^T (t - h beta) / (1 + h Ad h^T)
        //   Ad'   = Ad - (Ad h^T)(h Ad) / (1 + h Ad h^T)
        let h = state.net().hidden_row(&x_new).unwrap();
        let ad = state.a_dagger().clone();
        let nh = h.len();
        let mut ad_h = vec![0.0; nh];
        for i in 0..nh {
            for j in 0..nh {
                ad_h[i] += ad.get(i, j) * h[j];
            }
        }
        let denom = 1.0 + h.iter().zip(&ad_h).map(|(a, b)| a * b).sum::<f64>();
        let beta = state.net().output_weights().clone();
        let mut resid = [0.0; 2];
        for (m, r) in resid.iter_mut().enumerate() {
            let pred: f64 = (0..nh).map(|i| h[i] * beta.get(i, m)).sum();
            *r = t_new[m] - pred;
        }
        let beta_oracle = Matrix::from_fn(nh, 2, |i, m| beta.get(i, m) + ad_h[i] * resid[m] / denom).unwrap();
        let ad_oracle = Matrix::from_fn(nh, nh, |i, j| ad.get(i, j) - ad_h[i] * ad_h[j] / denom).unwrap();

        let xm = Matrix::from_vec(1, 3, x_new).unwrap();
        let tm = Matrix::from_vec(1, 2, t_new).unwrap();
        state.update(&xm, &tm).unwrap();

        assert!(max_abs_diff(state.net().output_weights(), &beta_oracle) < 1e-10);
        assert!(max_abs_diff(state.a_dagger(), &ad_oracle) < 1e-10);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let net = random_net(4, 6, 2, 40);
        let cp = net.to_checkpoint(Some(1.827e-5));
        let json = cp.to_json();
        let back = SlfnCheckpoint::from_json(&json).unwrap();
        assert_eq!(cp.n_in, back.n_in);
        assert_eq!(cp.gamma_bar.map(f64::to_bits), back.gamma_bar.map(f64::to_bits));
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&cp.input_weights), bits(&back.input_weights));
        assert_eq!(bits(&cp.biases), bits(&back.biases));
        assert_eq!(bits(&cp.output_weights), bits(&back.output_weights));

        let restored = Slfn::from_checkpoint(&back).unwrap();
        assert_eq!(&restored, &net);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Any split of a dataset into init set plus fixed-size chunks gives
        /// the same beta as one regularized batch fit on everything.
        #[test]
        fn incremental_fit_equals_batch_fit(
            seed in any::<u64>(),
            n_total in 8usize..60,
            n_hidden in 2usize..12,
            chunk in prop::sample::select(vec![1usize, 2, 5, 26]),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, t) = random_data(n_total, 3, 2, &mut rng);
            let net = random_net(3, n_hidden, 2, seed ^ 0x5eed);
            let gamma_bar = 0.3;

            let n_init = rng.random_range(1..=n_total);
            let rows = |m: &Matrix, lo: usize, hi: usize| {
                Matrix::from_rows(&(lo..hi).map(|i| m.row(i)).collect::<Vec<_>>()).unwrap()
            };

            let mut state = LsielmState::new(net.clone(), gamma_bar).unwrap();
            state.init(&rows(&x, 0, n_init), &rows(&t, 0, n_init)).unwrap();
            let mut lo = n_init;
            while lo < n_total {
                let hi = (lo + chunk).min(n_total);
                state.update(&rows(&x, lo, hi), &rows(&t, lo, hi)).unwrap();
                lo = hi;
            }

            let mut reference = net;
            reference.fit_regularized(&x, &t, gamma_bar).unwrap();
            let gap = max_abs_diff(state.net().output_weights(), reference.output_weights());
            prop_assert!(gap < 1e-6, "gap {}", gap);

            // A-dagger stays symmetric throughout (checked at the end,
            // after every chunk has passed through the recursion).
            let sym_gap = max_abs_diff(&state.a_dagger().transpose(), state.a_dagger());
            prop_assert!(sym_gap < 1e-8, "asymmetry {}", sym_gap);
        }

        /// forward is linear in beta.
        #[test]
        fn forward_is_linear_in_beta(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = random_net(3, 6, 2, seed ^ 0xbeef);
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b1 = Matrix::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0)).unwrap();
            let b2 = Matrix::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0)).unwrap();
            let sum = b1.add(&b2).unwrap();
            let lhs = net.forward_with_beta(&x, &sum).unwrap();
            let f1 = net.forward_with_beta(&x, &b1).unwrap();
            let f2 = net.forward_with_beta(&x, &b2).unwrap();
            for j in 0..2 {
                prop_assert!((lhs[j] - (f1[j] + f2[j])).abs() < 1e-12);
            }
        }

        /// Stronger regularization (smaller gamma_bar) never grows beta.
        #[test]
        fn regularization_shrinks_beta_norm(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, t) = random_data(15, 3, 2, &mut rng);
            let net = random_net(3, 6, 2, seed ^ 0xcafe);
            let g1 = rng.random_range(0.01..1.0);
            let g2 = g1 * rng.random_range(1.5..50.0);
            let mut n1 = net.clone();
            n1.fit_regularized(&x, &t, g1).unwrap();
            let mut n2 = net;
            n2.fit_regularized(&x, &t, g2).unwrap();
            prop_assert!(
                n1.output_weights().frobenius_norm()
                    <= n2.output_weights().frobenius_norm() + 1e-9
            );
        }
    }
}
