//! Multilayer perceptrons: relu hidden layers followed by a head that emits
//! posterior parameters, observation means, or both means and log sigmas.

use serde::{Deserialize, Serialize};

use crate::distributions::{DiagonalGaussian, ObsParams, LOG_SIGMA_RANGE};
use crate::error::{Error, Result};
use crate::rng::{sample_standard_normal, RngState};
use crate::tensor::{Tape, Tensor, Var};

/// Output head of an MLP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Head {
    /// `[mu | log_sigma]` of a diagonal Gaussian, `2 * dim` outputs.
    GaussianParams { dim: usize },
    /// Sigmoid means of independent Bernoullis.
    BernoulliMeans { dim: usize },
    /// Gaussian means, passed through a sigmoid when `sigmoid` is set.
    GaussianMeans { dim: usize, sigmoid: bool },
    /// Gaussian means and per-dimension log sigmas, `2 * dim` outputs.
    GaussianMeansAndLogSigma { dim: usize, sigmoid: bool },
}

impl Head {
    pub fn dim(&self) -> usize {
        match *self {
            Head::GaussianParams { dim }
            | Head::BernoulliMeans { dim }
            | Head::GaussianMeans { dim, .. }
            | Head::GaussianMeansAndLogSigma { dim, .. } => dim,
        }
    }

    pub fn out_width(&self) -> usize {
        match self {
            Head::GaussianParams { dim } | Head::GaussianMeansAndLogSigma { dim, .. } => 2 * dim,
            Head::BernoulliMeans { dim } | Head::GaussianMeans { dim, .. } => *dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub head: Head,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, head: Head) -> Result<MlpSpec> {
        let spec = MlpSpec {
            input_dim,
            hidden_widths,
            head,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.head.dim() == 0 || self.hidden_widths.contains(&0) {
            return Err(Error::Config(format!("MLP widths must be positive: {self:?}")));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every layer, head last.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut prev = self.input_dim;
        for &w in &self.hidden_widths {
            dims.push((prev, w));
            prev = w;
        }
        dims.push((prev, self.head.out_width()));
        dims
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `[fan_in, fan_out]`
    pub weight: Tensor,
    /// `[fan_out]`
    pub bias: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    spec: MlpSpec,
    layers: Vec<Layer>,
}

impl Network {
    /// He-normal weights (`2 / fan_in`) for relu layers, `1 / fan_in` for the
    /// head, zero biases.
    pub fn init(spec: MlpSpec, rng: &mut RngState) -> Result<Network> {
        spec.validate()?;
        let dims = spec.layer_dims();
        let last = dims.len() - 1;
        let layers = dims
            .iter()
            .enumerate()
            .map(|(i, &(fan_in, fan_out))| {
                let gain = if i == last { 1.0 } else { 2.0 };
                let std = (gain / fan_in as f64).sqrt();
                let w = sample_standard_normal(rng, &[fan_in, fan_out]).map(|v| v * std);
                Layer {
                    weight: w.with_grad(true),
                    bias: Tensor::zeros(&[fan_out]).with_grad(true),
                }
            })
            .collect();
        Ok(Network { spec, layers })
    }

    pub fn zeros(spec: MlpSpec) -> Result<Network> {
        spec.validate()?;
        let layers = spec
            .layer_dims()
            .into_iter()
            .map(|(i, o)| Layer {
                weight: Tensor::zeros(&[i, o]).with_grad(true),
                bias: Tensor::zeros(&[o]).with_grad(true),
            })
            .collect();
        Ok(Network { spec, layers })
    }

    pub fn from_layers(spec: MlpSpec, layers: Vec<Layer>) -> Result<Network> {
        spec.validate()?;
        let dims = spec.layer_dims();
        if dims.len() != layers.len() {
            return Err(Error::shape("network", format!("{} layers for {} in spec", layers.len(), dims.len())));
        }
        for (l, (i, o)) in layers.iter().zip(dims) {
            if l.weight.shape() != [i, o] || l.bias.shape() != [o] {
                return Err(Error::shape(
                    "network",
                    format!("layer {:?}/{:?}, expected [{i}, {o}]/[{o}]", l.weight.shape(), l.bias.shape()),
                ));
            }
        }
        let layers = layers
            .into_iter()
            .map(|l| Layer {
                weight: l.weight.with_grad(true),
                bias: l.bias.with_grad(true),
            })
            .collect();
        Ok(Network { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Weights then bias, layer by layer.
    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.numel()).sum()
    }

    /// Records the parameters on `tape` as trainable leaves.
    pub fn bind(&self, tape: &mut Tape) -> Result<BoundNetwork> {
        let layers = self
            .layers
            .iter()
            .map(|l| Ok((tape.param(&l.weight)?, tape.param(&l.bias)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundNetwork {
            spec: self.spec.clone(),
            layers,
        })
    }
}

/// Dropout configuration for one forward pass.
///
/// Inverted dropout: survivors are scaled by `1 / (1 - rate)` at training
/// time, evaluation is the identity.
pub struct Dropout<'r> {
    rate: f64,
    rng: Option<&'r mut RngState>,
}

impl<'r> Dropout<'r> {
    pub fn off() -> Dropout<'static> {
        Dropout { rate: 0.0, rng: None }
    }

    pub fn train(rate: f64, rng: &'r mut RngState) -> Result<Dropout<'r>> {
        check_rate(rate)?;
        Ok(Dropout { rate, rng: Some(rng) })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn apply(&mut self, tape: &mut Tape, x: Var) -> Result<Var> {
        match self.rng.as_deref_mut() {
            Some(rng) => apply_dropout(tape, x, self.rate, rng, true),
            None => Ok(x),
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    Ok(())
}

/// Zeroes each entry independently with probability `rate` and rescales the
/// survivors. Identity when `training` is false or `rate` is zero (no random
/// draws are consumed in either case).
pub fn apply_dropout(tape: &mut Tape, x: Var, rate: f64, rng: &mut RngState, training: bool) -> Result<Var> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(x);
    }
    let keep = 1.0 / (1.0 - rate);
    let mask = (0..tape.value(x).numel())
        .map(|_| if rng.uniform01() < rate { 0.0 } else { keep })
        .collect();
    tape.mask(x, mask)
}

/// A network whose parameters live on a tape.
#[derive(Clone, Debug)]
pub struct BoundNetwork {
    spec: MlpSpec,
    layers: Vec<(Var, Var)>,
}

impl BoundNetwork {
    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    /// Parameter handles in [`Network::params`] order.
    pub fn param_vars(&self) -> Vec<Var> {
        self.layers.iter().flat_map(|&(w, b)| [w, b]).collect()
    }

    /// Raw head output. Dropout hits the input and every hidden activation.
    pub fn forward(&self, tape: &mut Tape, input: Var, dropout: &mut Dropout) -> Result<Var> {
        let shape = tape.shape(input);
        if shape.len() != 2 || shape[1] != self.spec.input_dim {
            return Err(Error::shape(
                "network",
                format!("input {:?}, network expects [n, {}]", shape, self.spec.input_dim),
            ));
        }
        let mut h = dropout.apply(tape, input)?;
        let last = self.layers.len() - 1;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            h = tape.affine(h, w, b)?;
            if i < last {
                h = tape.relu(h)?;
                h = dropout.apply(tape, h)?;
            }
        }
        Ok(h)
    }

    /// Posterior `q(. | input)` from a [`Head::GaussianParams`] network.
    pub fn encode(&self, tape: &mut Tape, input: Var, dropout: &mut Dropout) -> Result<DiagonalGaussian> {
        self.encode_with_range(tape, input, dropout, LOG_SIGMA_RANGE)
    }

    pub fn encode_with_range(
        &self,
        tape: &mut Tape,
        input: Var,
        dropout: &mut Dropout,
        log_sigma_range: (f64, f64),
    ) -> Result<DiagonalGaussian> {
        let Head::GaussianParams { dim } = self.spec.head else {
            return Err(Error::InvalidArgument(format!("encode needs a gaussian_params head, got {:?}", self.spec.head)));
        };
        let out = self.forward(tape, input, dropout)?;
        let mu = tape.slice(out, 0, dim)?;
        let ls = tape.slice(out, dim, 2 * dim)?;
        DiagonalGaussian::with_range(tape, mu, ls, log_sigma_range)
    }

    /// Observation parameters for a decoder head.
    pub fn decode(&self, tape: &mut Tape, latent: Var, dropout: &mut Dropout) -> Result<ObsParams> {
        let out = self.forward(tape, latent, dropout)?;
        match self.spec.head {
            Head::BernoulliMeans { .. } => Ok(ObsParams {
                mean: tape.sigmoid(out)?,
                logits: Some(out),
                log_sigma: None,
            }),
            Head::GaussianMeans { sigmoid, .. } => Ok(ObsParams {
                mean: if sigmoid { tape.sigmoid(out)? } else { out },
                logits: None,
                log_sigma: None,
            }),
            Head::GaussianMeansAndLogSigma { dim, sigmoid } => {
                let raw = tape.slice(out, 0, dim)?;
                let mean = if sigmoid { tape.sigmoid(raw)? } else { raw };
                let ls = tape.slice(out, dim, 2 * dim)?;
                let ls = tape.clamp(ls, LOG_SIGMA_RANGE.0, LOG_SIGMA_RANGE.1)?;
                Ok(ObsParams {
                    mean,
                    logits: None,
                    log_sigma: Some(ls),
                })
            }
            Head::GaussianParams { .. } => Err(Error::InvalidArgument(
                "decode needs an observation head, got gaussian_params".into(),
            )),
        }
    }

    /// Deterministic code: the posterior mean for a Gaussian-params head,
    /// otherwise the (identity or sigmoid) mean output.
    pub fn embed(&self, tape: &mut Tape, input: Var, dropout: &mut Dropout) -> Result<Var> {
        match self.spec.head {
            Head::GaussianParams { .. } => Ok(self.encode(tape, input, dropout)?.mu),
            _ => Ok(self.decode(tape, input, dropout)?.mean),
        }
    }
}
