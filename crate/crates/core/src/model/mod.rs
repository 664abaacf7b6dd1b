//! The polarity function `p(x) = tanh(w · encode(x) + b)`.
//!
//! Two encoders share the [`PolarityModel`] surface: the mean of the event's
//! token embeddings (default) and a single-layer forward tanh recurrence
//! `h_t = tanh(W_h h_{t-1} + W_x e_t)` whose final state is the encoding.
//!
//! All parameters live in one flat buffer ([`Parameters`]); gradients use the
//! same layout so the optimizer and the finite-difference checks can treat
//! them as plain slices.

mod checkpoint;
mod vocab;

use std::fmt;
use std::io::{self, BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::Event;
use crate::scalar::{cast, Scalar};

pub use checkpoint::{
    export_text, load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint,
    CheckpointHeader, FORMAT_VERSION, MAGIC,
};
pub use vocab::{Vocabulary, UNK_ID, UNK_TOKEN};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a polarity checkpoint (bad magic)")]
    BadMagic,
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint checksum mismatch; file is corrupt")]
    CorruptChecksum,
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("line {line}: {reason}")]
    EmbeddingFormat { line: usize, reason: String },
    #[error("embedding dimension {found} does not match model dimension {expected}")]
    DimensionMismatch { found: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    #[default]
    #[serde(rename = "mean")]
    MeanOfEmbeddings,
    #[serde(rename = "recurrent")]
    SimpleRecurrent,
}

impl FromStr for EncoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(EncoderKind::MeanOfEmbeddings),
            "recurrent" => Ok(EncoderKind::SimpleRecurrent),
            other => Err(format!(
                "unknown encoder {other:?} (expected mean|recurrent)"
            )),
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncoderKind::MeanOfEmbeddings => "mean",
            EncoderKind::SimpleRecurrent => "recurrent",
        })
    }
}

/// Sizes that determine the parameter layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelShape {
    pub vocab_size: usize,
    pub dim: usize,
    pub encoder: EncoderKind,
}

impl ModelShape {
    fn embeddings_len(&self) -> usize {
        self.vocab_size * self.dim
    }

    fn recurrent_len(&self) -> usize {
        match self.encoder {
            EncoderKind::MeanOfEmbeddings => 0,
            EncoderKind::SimpleRecurrent => 2 * self.dim * self.dim,
        }
    }

    fn w_h_offset(&self) -> usize {
        self.embeddings_len()
    }

    fn w_x_offset(&self) -> usize {
        self.embeddings_len() + self.dim * self.dim
    }

    fn linear_offset(&self) -> usize {
        self.embeddings_len() + self.recurrent_len()
    }

    pub fn num_params(&self) -> usize {
        self.linear_offset() + self.dim + 1
    }
}

/// Flat parameter (or gradient) buffer.
///
/// Layout: embeddings `V×D` row-major, then `W_h` and `W_x` (`D×D` each, recurrent
/// encoder only), then the linear weights (`D`), then the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters<T> {
    shape: ModelShape,
    values: Vec<T>,
}

impl<T: Scalar> Parameters<T> {
    pub fn zeros(shape: ModelShape) -> Self {
        Parameters {
            shape,
            values: vec![T::zero(); shape.num_params()],
        }
    }

    pub fn from_values(shape: ModelShape, values: Vec<T>) -> Result<Self, ModelError> {
        if values.len() != shape.num_params() {
            return Err(ModelError::Malformed(format!(
                "expected {} parameters, found {}",
                shape.num_params(),
                values.len()
            )));
        }
        Ok(Parameters { shape, values })
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn fill_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = T::zero());
    }

    pub fn embedding(&self, id: usize) -> &[T] {
        let d = self.shape.dim;
        &self.values[id * d..(id + 1) * d]
    }

    pub fn embedding_mut(&mut self, id: usize) -> &mut [T] {
        let d = self.shape.dim;
        &mut self.values[id * d..(id + 1) * d]
    }

    fn block(&self, offset: usize, len: usize) -> &[T] {
        &self.values[offset..offset + len]
    }

    fn block_mut(&mut self, offset: usize, len: usize) -> &mut [T] {
        &mut self.values[offset..offset + len]
    }

    /// Recurrent state transition, `D×D` row-major. Empty for the mean encoder.
    pub fn w_h(&self) -> &[T] {
        let len = self.shape.recurrent_len() / 2;
        self.block(self.shape.w_h_offset(), len)
    }

    pub fn w_h_mut(&mut self) -> &mut [T] {
        let len = self.shape.recurrent_len() / 2;
        let off = self.shape.w_h_offset();
        self.block_mut(off, len)
    }

    /// Recurrent input projection, `D×D` row-major. Empty for the mean encoder.
    pub fn w_x(&self) -> &[T] {
        let len = self.shape.recurrent_len() / 2;
        self.block(self.shape.w_x_offset(), len)
    }

    pub fn w_x_mut(&mut self) -> &mut [T] {
        let len = self.shape.recurrent_len() / 2;
        let off = self.shape.w_x_offset();
        self.block_mut(off, len)
    }

    pub fn linear_weights(&self) -> &[T] {
        self.block(self.shape.linear_offset(), self.shape.dim)
    }

    pub fn linear_weights_mut(&mut self) -> &mut [T] {
        let off = self.shape.linear_offset();
        let d = self.shape.dim;
        self.block_mut(off, d)
    }

    pub fn bias(&self) -> T {
        self.values[self.values.len() - 1]
    }

    pub fn bias_mut(&mut self) -> &mut T {
        self.values.last_mut().expect("parameters are never empty")
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Human-readable name of a flat parameter index.
    pub fn describe(&self, index: usize) -> String {
        let s = self.shape;
        let d = s.dim;
        if index < s.embeddings_len() {
            format!("embedding.{}.{}", index / d, index % d)
        } else if index < s.w_x_offset() && s.recurrent_len() > 0 {
            let i = index - s.w_h_offset();
            format!("w_h.{}.{}", i / d, i % d)
        } else if index < s.linear_offset() {
            let i = index - s.w_x_offset();
            format!("w_x.{}.{}", i / d, i % d)
        } else if index < s.num_params() - 1 {
            format!("linear.{}", index - s.linear_offset())
        } else {
            "bias".to_owned()
        }
    }
}

/// Cached activations of one forward pass, consumed by [`PolarityModel::backward`].
#[derive(Debug, Clone)]
pub struct Forward<T> {
    ids: Vec<usize>,
    /// Recurrent states `h_1..h_n`; empty for the mean encoder.
    states: Vec<Vec<T>>,
    pub encoded: Vec<T>,
    pub pre_activation: T,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarityModel<T> {
    vocab: Vocabulary,
    params: Parameters<T>,
}

impl<T: Scalar> PolarityModel<T> {
    /// All-zero parameters.
    pub fn zeros(vocab: Vocabulary, dim: usize, encoder: EncoderKind) -> Self {
        let shape = ModelShape {
            vocab_size: vocab.len(),
            dim,
            encoder,
        };
        PolarityModel {
            vocab,
            params: Parameters::zeros(shape),
        }
    }

    /// Weights uniform in `[-0.1, 0.1]`, bias 0, from a seeded generator.
    pub fn init(vocab: Vocabulary, dim: usize, encoder: EncoderKind, seed: u64) -> Self {
        let mut model = Self::zeros(vocab, dim, encoder);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = model.params.len();
        for v in &mut model.params.as_mut_slice()[..n - 1] {
            *v = cast(rng.gen_range(-0.1..=0.1));
        }
        model
    }

    pub fn from_parts(vocab: Vocabulary, params: Parameters<T>) -> Result<Self, ModelError> {
        if params.shape.vocab_size != vocab.len() {
            return Err(ModelError::Malformed(format!(
                "vocabulary has {} entries but parameters expect {}",
                vocab.len(),
                params.shape.vocab_size
            )));
        }
        Ok(PolarityModel { vocab, params })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &Parameters<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Parameters<T> {
        &mut self.params
    }

    pub fn shape(&self) -> ModelShape {
        self.params.shape
    }

    pub fn dim(&self) -> usize {
        self.params.shape.dim
    }

    pub fn encoder(&self) -> EncoderKind {
        self.params.shape.encoder
    }

    pub fn forward_ids(&self, ids: &[usize]) -> Forward<T> {
        let ids = if ids.is_empty() {
            vec![UNK_ID]
        } else {
            ids.to_vec()
        };
        let d = self.dim();
        let p = &self.params;
        let (encoded, states) = match self.encoder() {
            EncoderKind::MeanOfEmbeddings => {
                let mut h = vec![T::zero(); d];
                for &id in &ids {
                    for (acc, &e) in h.iter_mut().zip(p.embedding(id)) {
                        *acc += e;
                    }
                }
                let n: T = cast(ids.len() as f64);
                h.iter_mut().for_each(|v| *v = *v / n);
                (h, Vec::new())
            }
            EncoderKind::SimpleRecurrent => {
                let (w_h, w_x) = (p.w_h(), p.w_x());
                let mut states: Vec<Vec<T>> = Vec::with_capacity(ids.len());
                let zero = vec![T::zero(); d];
                for &id in &ids {
                    let prev = states.last().unwrap_or(&zero);
                    let e = p.embedding(id);
                    let h: Vec<T> = (0..d)
                        .map(|i| {
                            let row_h = &w_h[i * d..(i + 1) * d];
                            let row_x = &w_x[i * d..(i + 1) * d];
                            let mut a = T::zero();
                            for j in 0..d {
                                a += row_h[j] * prev[j] + row_x[j] * e[j];
                            }
                            a.tanh()
                        })
                        .collect();
                    states.push(h);
                }
                (states.last().cloned().unwrap_or(zero), states)
            }
        };
        let pre_activation = encoded
            .iter()
            .zip(p.linear_weights())
            .fold(p.bias(), |acc, (&h, &w)| acc + h * w);
        Forward {
            ids,
            states,
            encoded,
            pre_activation,
            score: pre_activation.tanh(),
        }
    }

    pub fn forward(&self, event: &Event) -> Forward<T> {
        self.forward_ids(&self.vocab.encode(event.tokens()))
    }

    /// Event representation before the linear layer.
    pub fn encode(&self, event: &Event) -> Vec<T> {
        self.forward(event).encoded
    }

    /// Polarity score in `(-1, 1)`.
    pub fn polarity(&self, event: &Event) -> T {
        self.forward(event).score
    }

    /// Scores a raw token sequence; an empty sequence is scored through the UNK row.
    pub fn polarity_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> T {
        self.forward_ids(&self.vocab.encode(tokens)).score
    }

    /// Accumulates `d_score · ∂score/∂θ` into `grads`.
    pub fn backward(&self, fwd: &Forward<T>, d_score: T, grads: &mut Parameters<T>) {
        let d = self.dim();
        let p = &self.params;
        let d_pre = d_score * (T::one() - fwd.score * fwd.score);
        *grads.bias_mut() += d_pre;
        for (g, &h) in grads.linear_weights_mut().iter_mut().zip(&fwd.encoded) {
            *g += d_pre * h;
        }
        let mut d_h: Vec<T> = p.linear_weights().iter().map(|&w| d_pre * w).collect();
        match self.encoder() {
            EncoderKind::MeanOfEmbeddings => {
                let n: T = cast(fwd.ids.len() as f64);
                for &id in &fwd.ids {
                    for (g, &dh) in grads.embedding_mut(id).iter_mut().zip(&d_h) {
                        *g += dh / n;
                    }
                }
            }
            EncoderKind::SimpleRecurrent => {
                let (w_h, w_x) = (p.w_h(), p.w_x());
                let zero = vec![T::zero(); d];
                let mut d_a = vec![T::zero(); d];
                for t in (0..fwd.ids.len()).rev() {
                    let h = &fwd.states[t];
                    let prev = if t == 0 { &zero } else { &fwd.states[t - 1] };
                    let id = fwd.ids[t];
                    for i in 0..d {
                        d_a[i] = d_h[i] * (T::one() - h[i] * h[i]);
                    }
                    {
                        let g_wh = grads.w_h_mut();
                        for i in 0..d {
                            for j in 0..d {
                                g_wh[i * d + j] += d_a[i] * prev[j];
                            }
                        }
                    }
                    {
                        let e = p.embedding(id);
                        let g_wx = grads.w_x_mut();
                        for i in 0..d {
                            for j in 0..d {
                                g_wx[i * d + j] += d_a[i] * e[j];
                            }
                        }
                    }
                    {
                        let g_e = grads.embedding_mut(id);
                        for j in 0..d {
                            let mut acc = T::zero();
                            for i in 0..d {
                                acc += w_x[i * d + j] * d_a[i];
                            }
                            g_e[j] += acc;
                        }
                    }
                    for j in 0..d {
                        let mut acc = T::zero();
                        for i in 0..d {
                            acc += w_h[i * d + j] * d_a[i];
                        }
                        d_h[j] = acc;
                    }
                }
            }
        }
    }

    /// Overwrites embedding rows from a `token v_1 … v_D` text file.
    /// Returns how many vocabulary rows were replaced; unknown tokens are ignored.
    pub fn import_embeddings(&mut self, path: &Path) -> Result<usize, ModelError> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let dim = self.dim();
        let mut replaced = 0;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let values: Vec<f64> = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|e| ModelError::EmbeddingFormat {
                        line: i + 1,
                        reason: format!("{f:?}: {e}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            if values.len() != dim {
                return Err(ModelError::DimensionMismatch {
                    found: values.len(),
                    expected: dim,
                });
            }
            if let Some(id) = self.vocab.get(token) {
                for (dst, v) in self.params.embedding_mut(id).iter_mut().zip(values) {
                    *dst = cast(v);
                }
                replaced += 1;
            }
        }
        Ok(replaced)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ev(s: &str) -> Event {
        Event::from_text(s).unwrap()
    }

    #[test]
    fn zero_model_scores_zero() {
        let m = PolarityModel::<f64>::zeros(
            Vocabulary::from_tokens(["a"]),
            4,
            EncoderKind::MeanOfEmbeddings,
        );
        assert_eq!(m.polarity(&ev("a b")), 0.0);
        let m = PolarityModel::<f64>::zeros(
            Vocabulary::from_tokens(["a"]),
            4,
            EncoderKind::SimpleRecurrent,
        );
        assert_eq!(m.polarity(&ev("a b")), 0.0);
    }

    #[test]
    fn single_token_mean_is_its_row() {
        let mut m = PolarityModel::<f64>::init(
            Vocabulary::from_tokens(["a"]),
            3,
            EncoderKind::MeanOfEmbeddings,
            1,
        );
        m.params_mut()
            .embedding_mut(1)
            .copy_from_slice(&[0.3, -0.2, 0.05]);
        assert_eq!(m.encode(&ev("a")), vec![0.3, -0.2, 0.05]);
    }

    #[test]
    fn two_token_mean() {
        let mut m = PolarityModel::<f64>::zeros(
            Vocabulary::from_tokens(["x", "y"]),
            2,
            EncoderKind::MeanOfEmbeddings,
        );
        m.params_mut().embedding_mut(1).copy_from_slice(&[0.2, 0.0]);
        m.params_mut().embedding_mut(2).copy_from_slice(&[0.0, 0.4]);
        let h = m.encode(&ev("x y"));
        assert_abs_diff_eq!(h[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(h[1], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn all_oov_is_unk_row() {
        let mut m = PolarityModel::<f64>::zeros(
            Vocabulary::from_tokens(["x"]),
            2,
            EncoderKind::MeanOfEmbeddings,
        );
        m.params_mut()
            .embedding_mut(UNK_ID)
            .copy_from_slice(&[0.7, -0.1]);
        let h = m.encode(&ev("p q r"));
        assert_abs_diff_eq!(h[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(h[1], -0.1, epsilon = 1e-15);
        assert_eq!(m.polarity_tokens::<&str>(&[]), m.polarity(&ev("zzz")));
    }

    #[test]
    fn hand_evaluated_tanh() {
        let mut m = PolarityModel::<f64>::zeros(
            Vocabulary::from_tokens(["t"]),
            1,
            EncoderKind::MeanOfEmbeddings,
        );
        m.params_mut().embedding_mut(1)[0] = 2.0;
        m.params_mut().linear_weights_mut()[0] = 1.0;
        assert_abs_diff_eq!(m.polarity(&ev("t")), 0.964_027_580_075_817, epsilon = 1e-9);
    }

    #[test]
    fn recurrent_is_order_sensitive() {
        let m = PolarityModel::<f64>::init(
            Vocabulary::from_tokens(["a", "b"]),
            4,
            EncoderKind::SimpleRecurrent,
            3,
        );
        assert_ne!(m.polarity(&ev("a b")), m.polarity(&ev("b a")));
    }

    #[test]
    fn f32_model_works() {
        let m = PolarityModel::<f32>::init(
            Vocabulary::from_tokens(["a", "b"]),
            4,
            EncoderKind::SimpleRecurrent,
            3,
        );
        let s = m.polarity(&ev("a b"));
        assert!(s.abs() < 1.0);
    }

    #[test]
    fn describe_indices() {
        let shape = ModelShape {
            vocab_size: 2,
            dim: 2,
            encoder: EncoderKind::SimpleRecurrent,
        };
        let p = Parameters::<f64>::zeros(shape);
        assert_eq!(p.len(), 4 + 8 + 2 + 1);
        assert_eq!(p.describe(3), "embedding.1.1");
        assert_eq!(p.describe(4), "w_h.0.0");
        assert_eq!(p.describe(8), "w_x.0.0");
        assert_eq!(p.describe(12), "linear.0");
        assert_eq!(p.describe(14), "bias");
    }

    #[test]
    fn embedding_import() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        std::fs::write(&path, "a 0.5 0.25\nzz 1 1\n").unwrap();
        let mut m = PolarityModel::<f64>::zeros(
            Vocabulary::from_tokens(["a"]),
            2,
            EncoderKind::MeanOfEmbeddings,
        );
        assert_eq!(m.import_embeddings(&path).unwrap(), 1);
        assert_eq!(m.params().embedding(1), &[0.5, 0.25]);
        std::fs::write(&path, "a 0.5\n").unwrap();
        assert!(matches!(
            m.import_embeddings(&path),
            Err(ModelError::DimensionMismatch {
                found: 1,
                expected: 2
            })
        ));
    }

    fn arb_model() -> impl Strategy<Value = PolarityModel<f64>> {
        (1usize..6, any::<u64>(), prop::bool::ANY).prop_map(|(d, seed, rec)| {
            let enc = if rec {
                EncoderKind::SimpleRecurrent
            } else {
                EncoderKind::MeanOfEmbeddings
            };
            let mut m =
                PolarityModel::init(Vocabulary::from_tokens(["a", "b", "c", "d"]), d, enc, seed);
            // Push some parameters well outside the init range.
            for v in m.params_mut().as_mut_slice().iter_mut().step_by(3) {
                *v *= 40.0;
            }
            m
        })
    }

    proptest! {
        #[test]
        fn score_strictly_inside_unit_interval(m in arb_model(), toks in prop::collection::vec(prop::sample::select(vec!["a","b","c","d","e"]), 1..6)) {
            let s = m.polarity_tokens(&toks);
            prop_assert!(s > -1.0 && s < 1.0 || s.abs() == 1.0 && m.forward_ids(&m.vocab().encode(&toks)).pre_activation.abs() > 19.0);
        }

        #[test]
        fn positive_rescaling_keeps_sign(m in arb_model(), c in 0.01f64..100.0, toks in prop::collection::vec(prop::sample::select(vec!["a","b","c","d"]), 1..5)) {
            let before = m.polarity_tokens(&toks);
            let mut scaled = m.clone();
            for w in scaled.params_mut().linear_weights_mut() { *w *= c; }
            *scaled.params_mut().bias_mut() *= c;
            let after = scaled.polarity_tokens(&toks);
            prop_assert_eq!(before > 0.0, after > 0.0);
        }

        #[test]
        fn mean_encoder_is_order_invariant(seed in any::<u64>(), toks in prop::collection::vec(prop::sample::select(vec!["a","b","c","d"]), 1..6)) {
            let m = PolarityModel::<f64>::init(Vocabulary::from_tokens(["a", "b", "c"]), 4, EncoderKind::MeanOfEmbeddings, seed);
            let mut rev = toks.clone();
            rev.reverse();
            prop_assert!((m.polarity_tokens(&toks) - m.polarity_tokens(&rev)).abs() < 1e-12);
        }
    }
}
