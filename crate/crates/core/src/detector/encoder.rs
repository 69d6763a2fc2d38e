//! A BERT encoder with a two-way classification head, written against
//! plain candle tensor ops so every layer is differentiable.
//!
//! Parameter names follow the Hugging Face `BertForSequenceClassification`
//! layout, so `bert.*` tensors from a BERT checkpoint load directly.

use std::collections::{BTreeMap, HashMap};

use candle_core::{DType, Device, Tensor, Var, D};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::DetectorError;

/// Encoder geometry, serialized with the field names of a BERT `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    pub max_position_embeddings: usize,
    #[serde(default = "default_type_vocab")]
    pub type_vocab_size: usize,
    #[serde(default = "default_ln_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "default_dropout")]
    pub hidden_dropout_prob: f64,
    #[serde(default = "default_init_range")]
    pub initializer_range: f64,
}

fn default_type_vocab() -> usize {
    2
}
fn default_ln_eps() -> f64 {
    1e-12
}
fn default_dropout() -> f64 {
    0.1
}
fn default_init_range() -> f64 {
    0.02
}

impl EncoderConfig {
    /// Small geometry for encoders trained from scratch.
    pub fn reduced(vocab_size: usize) -> Self {
        EncoderConfig {
            vocab_size,
            hidden_size: 64,
            num_hidden_layers: 2,
            num_attention_heads: 4,
            intermediate_size: 128,
            max_position_embeddings: 512,
            type_vocab_size: 2,
            layer_norm_eps: 1e-12,
            hidden_dropout_prob: 0.1,
            initializer_range: 0.02,
        }
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |m: String| Err(DetectorError::Config(m));
        if self.hidden_size == 0 || self.num_attention_heads == 0 {
            return bad("hidden_size and num_attention_heads must be positive".into());
        }
        if !self.hidden_size.is_multiple_of(self.num_attention_heads) {
            return bad(format!(
                "hidden_size {} is not a multiple of num_attention_heads {}",
                self.hidden_size, self.num_attention_heads
            ));
        }
        if !(0.0..1.0).contains(&self.hidden_dropout_prob) {
            return bad(format!("hidden_dropout_prob {} outside [0, 1)", self.hidden_dropout_prob));
        }
        if self.type_vocab_size < 2 {
            return bad("type_vocab_size must be at least 2".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Init {
    Normal,
    Zeros,
    Ones,
}

/// Where parameters come from while a model is being assembled.
pub(crate) struct ParamSource<'a> {
    loaded: &'a HashMap<String, Tensor>,
    /// Initialize parameters absent from `loaded` instead of failing.
    allow_init: bool,
    /// Initialize the classifier head from scratch even when loaded.
    fresh_head: bool,
    trainable: bool,
    std: f64,
    rng: ChaCha8Rng,
    device: Device,
    pub(crate) tensors: BTreeMap<String, Tensor>,
    pub(crate) vars: Vec<Var>,
}

impl<'a> ParamSource<'a> {
    pub(crate) fn new(
        loaded: &'a HashMap<String, Tensor>,
        allow_init: bool,
        fresh_head: bool,
        trainable: bool,
        std: f64,
        seed: u64,
    ) -> Self {
        ParamSource {
            loaded,
            allow_init,
            fresh_head,
            trainable,
            std,
            rng: ChaCha8Rng::seed_from_u64(seed),
            device: Device::Cpu,
            tensors: BTreeMap::new(),
            vars: Vec::new(),
        }
    }

    fn get(&mut self, name: &str, shape: &[usize], init: Init) -> Result<Tensor, DetectorError> {
        let is_head = name.starts_with("classifier.");
        let found = if is_head && self.fresh_head {
            None
        } else {
            self.loaded.get(name)
        };
        let t = match found {
            Some(t) => {
                if t.dims() != shape {
                    return Err(DetectorError::Shape {
                        name: name.to_string(),
                        expected: shape.to_vec(),
                        got: t.dims().to_vec(),
                    });
                }
                t.to_dtype(DType::F32)?
            }
            None if self.allow_init || (is_head && self.fresh_head) => self.init(shape, init)?,
            None => return Err(DetectorError::MissingTensor(name.to_string())),
        };
        let t = if self.trainable {
            let v = Var::from_tensor(&t)?;
            let t = v.as_tensor().clone();
            self.vars.push(v);
            t
        } else {
            t
        };
        self.tensors.insert(name.to_string(), t.clone());
        Ok(t)
    }

    fn init(&mut self, shape: &[usize], init: Init) -> Result<Tensor, DetectorError> {
        let n: usize = shape.iter().product();
        let t = match init {
            Init::Zeros => Tensor::zeros(shape, DType::F32, &self.device)?,
            Init::Ones => Tensor::ones(shape, DType::F32, &self.device)?,
            Init::Normal => {
                let normal = Normal::new(0.0f32, self.std as f32)
                    .map_err(|e| DetectorError::Config(e.to_string()))?;
                let data: Vec<f32> = (0..n).map(|_| normal.sample(&mut self.rng)).collect();
                Tensor::from_vec(data, shape, &self.device)?
            }
        };
        Ok(t)
    }
}

#[derive(Debug, Clone)]
struct Dense {
    w: Tensor,
    b: Tensor,
}

impl Dense {
    fn new(src: &mut ParamSource<'_>, name: &str, inp: usize, out: usize, init: Init) -> Result<Self, DetectorError> {
        Ok(Dense {
            w: src.get(&format!("{name}.weight"), &[out, inp], init)?,
            b: src.get(&format!("{name}.bias"), &[out], Init::Zeros)?,
        })
    }

    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        x.broadcast_matmul(&self.w.t()?)?.broadcast_add(&self.b)
    }
}

#[derive(Debug, Clone)]
struct Norm {
    w: Tensor,
    b: Tensor,
    eps: f64,
}

impl Norm {
    fn new(src: &mut ParamSource<'_>, name: &str, dim: usize, eps: f64) -> Result<Self, DetectorError> {
        Ok(Norm {
            w: src.get(&format!("{name}.weight"), &[dim], Init::Ones)?,
            b: src.get(&format!("{name}.bias"), &[dim], Init::Zeros)?,
            eps,
        })
    }

    // Composed from primitive ops: the fused kernel has no backward pass.
    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        let mean = x.mean_keepdim(D::Minus1)?;
        let centered = x.broadcast_sub(&mean)?;
        let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        normed.broadcast_mul(&self.w)?.broadcast_add(&self.b)
    }
}

#[derive(Debug, Clone)]
struct Layer {
    query: Dense,
    key: Dense,
    value: Dense,
    attn_out: Dense,
    attn_norm: Norm,
    intermediate: Dense,
    output: Dense,
    out_norm: Norm,
}

/// Seeded dropout masks for training.
pub(crate) struct Dropout {
    pub(crate) p: f64,
    pub(crate) rng: ChaCha8Rng,
}

impl Dropout {
    fn apply(&mut self, x: &Tensor) -> candle_core::Result<Tensor> {
        use rand::Rng;
        if self.p <= 0.0 {
            return Ok(x.clone());
        }
        let keep = 1.0 / (1.0 - self.p) as f32;
        let n = x.elem_count();
        let mask: Vec<f32> = (0..n)
            .map(|_| if self.rng.random_bool(self.p) { 0.0 } else { keep })
            .collect();
        let mask = Tensor::from_vec(mask, x.dims(), x.device())?;
        x.mul(&mask)
    }
}

fn dropout(d: &mut Option<&mut Dropout>, x: Tensor) -> candle_core::Result<Tensor> {
    match d {
        Some(d) => d.apply(&x),
        None => Ok(x),
    }
}

/// Encoder plus pooler plus classifier; logits index 0 is "correct" and 1 is
/// "erroneous".
#[derive(Debug, Clone)]
pub struct BertClassifier {
    cfg: EncoderConfig,
    word: Tensor,
    position: Tensor,
    token_type: Tensor,
    emb_norm: Norm,
    layers: Vec<Layer>,
    pooler: Dense,
    classifier: Dense,
}

impl BertClassifier {
    pub(crate) fn build(cfg: &EncoderConfig, src: &mut ParamSource<'_>) -> Result<Self, DetectorError> {
        cfg.validate()?;
        let h = cfg.hidden_size;
        let eps = cfg.layer_norm_eps;
        let e = "bert.embeddings";
        let word = src.get(&format!("{e}.word_embeddings.weight"), &[cfg.vocab_size, h], Init::Normal)?;
        let position = src.get(
            &format!("{e}.position_embeddings.weight"),
            &[cfg.max_position_embeddings, h],
            Init::Normal,
        )?;
        let token_type = src.get(
            &format!("{e}.token_type_embeddings.weight"),
            &[cfg.type_vocab_size, h],
            Init::Normal,
        )?;
        let emb_norm = Norm::new(src, &format!("{e}.LayerNorm"), h, eps)?;
        let mut layers = Vec::with_capacity(cfg.num_hidden_layers);
        for i in 0..cfg.num_hidden_layers {
            let p = format!("bert.encoder.layer.{i}");
            layers.push(Layer {
                query: Dense::new(src, &format!("{p}.attention.self.query"), h, h, Init::Normal)?,
                key: Dense::new(src, &format!("{p}.attention.self.key"), h, h, Init::Normal)?,
                value: Dense::new(src, &format!("{p}.attention.self.value"), h, h, Init::Normal)?,
                attn_out: Dense::new(src, &format!("{p}.attention.output.dense"), h, h, Init::Normal)?,
                attn_norm: Norm::new(src, &format!("{p}.attention.output.LayerNorm"), h, eps)?,
                intermediate: Dense::new(
                    src,
                    &format!("{p}.intermediate.dense"),
                    h,
                    cfg.intermediate_size,
                    Init::Normal,
                )?,
                output: Dense::new(src, &format!("{p}.output.dense"), cfg.intermediate_size, h, Init::Normal)?,
                out_norm: Norm::new(src, &format!("{p}.output.LayerNorm"), h, eps)?,
            });
        }
        let pooler = Dense::new(src, "bert.pooler.dense", h, h, Init::Normal)?;
        // A zero head makes an untrained model predict exactly 0.5.
        let classifier = Dense::new(src, "classifier", h, 2, Init::Zeros)?;
        Ok(BertClassifier {
            cfg: cfg.clone(),
            word,
            position,
            token_type,
            emb_norm,
            layers,
            pooler,
            classifier,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    /// `ids`, `types`: `[batch, seq]` u32. `mask`: `[batch, seq]` f32 with 1
    /// for real tokens, or `None` when nothing is padded.
    pub(crate) fn forward(
        &self,
        ids: &Tensor,
        types: &Tensor,
        mask: Option<&Tensor>,
        mut drop: Option<&mut Dropout>,
    ) -> candle_core::Result<Tensor> {
        let (b, s) = ids.dims2()?;
        let h = self.cfg.hidden_size;
        let nh = self.cfg.num_attention_heads;
        let dh = h / nh;
        let word = self.word.index_select(&ids.flatten_all()?, 0)?.reshape((b, s, h))?;
        let pos_ids = Tensor::arange(0u32, s as u32, ids.device())?;
        let pos = self.position.index_select(&pos_ids, 0)?.unsqueeze(0)?;
        let typ = self
            .token_type
            .index_select(&types.flatten_all()?, 0)?
            .reshape((b, s, h))?;
        let x = word.broadcast_add(&pos)?.add(&typ)?;
        let mut x = dropout(&mut drop, self.emb_norm.forward(&x)?)?;

        let bias = match mask {
            Some(m) => Some(((m.ones_like()? - m)? * -10_000.0)?.reshape((b, 1, 1, s))?),
            None => None,
        };
        let scale = 1.0 / (dh as f64).sqrt();
        let heads = |t: Tensor| -> candle_core::Result<Tensor> {
            t.reshape((b, s, nh, dh))?.transpose(1, 2)?.contiguous()
        };
        for layer in &self.layers {
            let q = heads(layer.query.forward(&x)?)?;
            let k = heads(layer.key.forward(&x)?)?;
            let v = heads(layer.value.forward(&x)?)?;
            let mut scores = (q.matmul(&k.t()?.contiguous()?)? * scale)?;
            if let Some(bias) = &bias {
                scores = scores.broadcast_add(bias)?;
            }
            let probs = candle_nn::ops::softmax(&scores, D::Minus1)?;
            let ctx = probs
                .matmul(&v)?
                .transpose(1, 2)?
                .contiguous()?
                .reshape((b, s, h))?;
            let attn = dropout(&mut drop, layer.attn_out.forward(&ctx)?)?;
            x = layer.attn_norm.forward(&(attn + &x)?)?;
            let inter = layer.intermediate.forward(&x)?.gelu_erf()?;
            let out = dropout(&mut drop, layer.output.forward(&inter)?)?;
            x = layer.out_norm.forward(&(out + &x)?)?;
        }
        let cls = x.narrow(1, 0, 1)?.squeeze(1)?;
        let pooled = self.pooler.forward(&cls)?.tanh()?;
        let pooled = dropout(&mut drop, pooled)?;
        self.classifier.forward(&pooled)
    }
}

/// Two-class softmax computed in f64 so the probabilities sum to one.
pub fn softmax2(logits: [f32; 2]) -> [f64; 2] {
    let (a, b) = (logits[0] as f64, logits[1] as f64);
    let m = a.max(b);
    let (ea, eb) = ((a - m).exp(), (b - m).exp());
    let z = ea + eb;
    let p1 = eb / z;
    [1.0 - p1, p1]
}

/// Renames legacy `gamma`/`beta` LayerNorm tensors and adds the `bert.`
/// prefix when a checkpoint stores the bare encoder.
pub(crate) fn normalize_checkpoint_names(tensors: HashMap<String, Tensor>) -> HashMap<String, Tensor> {
    tensors
        .into_iter()
        .map(|(k, v)| {
            let mut k = k.replace("LayerNorm.gamma", "LayerNorm.weight").replace("LayerNorm.beta", "LayerNorm.bias");
            if !k.starts_with("bert.") && !k.starts_with("classifier.") && !k.starts_with("cls.") {
                k = format!("bert.{k}");
            }
            (k, v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> EncoderConfig {
        EncoderConfig {
            vocab_size: 20,
            hidden_size: 8,
            num_hidden_layers: 1,
            num_attention_heads: 2,
            intermediate_size: 16,
            max_position_embeddings: 32,
            ..EncoderConfig::reduced(20)
        }
    }

    fn build(seed: u64) -> BertClassifier {
        let empty = HashMap::new();
        let mut src = ParamSource::new(&empty, true, false, false, 0.02, seed);
        BertClassifier::build(&tiny(), &mut src).unwrap()
    }

    fn ids(v: &[u32]) -> Tensor {
        Tensor::new(v, &Device::Cpu).unwrap().unsqueeze(0).unwrap()
    }

    #[test]
    fn zero_head_gives_even_logits() {
        let m = build(1);
        let t = ids(&[2, 5, 3]);
        let logits = m.forward(&t, &t.zeros_like().unwrap(), None, None).unwrap();
        let v: Vec<f32> = logits.flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn padding_does_not_change_logits() {
        let empty = HashMap::new();
        let mut src = ParamSource::new(&empty, true, false, false, 0.5, 3);
        let mut cfg = tiny();
        cfg.initializer_range = 0.5;
        let mut m = BertClassifier::build(&cfg, &mut src).unwrap();
        m.classifier.w = Tensor::new(&[[1f32, -1., 0.5, 0., 0., 2., 0., 1.], [0f32; 8]], &Device::Cpu).unwrap();
        let a = ids(&[2, 5, 6, 3]);
        let la: Vec<f32> = m.forward(&a, &a.zeros_like().unwrap(), None, None).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        let b = ids(&[2, 5, 6, 3, 0, 0]);
        let mask = Tensor::new(&[[1f32, 1., 1., 1., 0., 0.]], &Device::Cpu).unwrap();
        let lb: Vec<f32> = m
            .forward(&b, &b.zeros_like().unwrap(), Some(&mask), None)
            .unwrap()
            .flatten_all()
            .unwrap()
            .to_vec1()
            .unwrap();
        for (x, y) in la.iter().zip(&lb) {
            assert!((x - y).abs() < 1e-5, "{la:?} vs {lb:?}");
        }
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let a = build(7);
        let b = build(7);
        let c = build(8);
        let va: Vec<f32> = a.word.flatten_all().unwrap().to_vec1().unwrap();
        let vb: Vec<f32> = b.word.flatten_all().unwrap().to_vec1().unwrap();
        let vc: Vec<f32> = c.word.flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(va, vb);
        assert_ne!(va, vc);
    }

    #[test]
    fn softmax2_extremes() {
        for l in [[0.0, 0.0], [80.0, -80.0], [-1e30, 1e30], [3.5, 3.5]] {
            let p = softmax2(l);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn geometry_validation() {
        let mut c = tiny();
        c.num_attention_heads = 3;
        assert!(c.validate().is_err());
    }

    #[test]
    fn legacy_names_normalized() {
        let t = Tensor::zeros(1, DType::F32, &Device::Cpu).unwrap();
        let m: HashMap<_, _> = [("embeddings.LayerNorm.gamma".to_string(), t)].into();
        let n = normalize_checkpoint_names(m);
        assert!(n.contains_key("bert.embeddings.LayerNorm.weight"));
    }
}
