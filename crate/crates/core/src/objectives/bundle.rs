use serde::{Deserialize, Serialize};

use super::ObjectiveKind;
use crate::distributions::{ObservationKind, ObservationModel};
use crate::error::{Error, Result};
use crate::networks::{BoundNetwork, Head, MlpSpec, Network};
use crate::rng::RngState;
use crate::tensor::{Tape, Tensor, Var};

/// Architecture and likelihood choices for one model variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ObjectiveKind,
    #[serde(default = "default_d_z")]
    pub d_z: usize,
    /// Private latent sizes; ignored by kinds without private variables.
    #[serde(default = "default_d_h")]
    pub d_hx: usize,
    #[serde(default = "default_d_h")]
    pub d_hy: usize,
    #[serde(default = "default_widths")]
    pub encoder_widths: Vec<usize>,
    #[serde(default = "default_widths")]
    pub decoder_widths: Vec<usize>,
    #[serde(default = "default_obs_x")]
    pub obs_x: ObservationKind,
    #[serde(default = "default_obs_y")]
    pub obs_y: ObservationKind,
}

fn default_d_z() -> usize {
    10
}
fn default_d_h() -> usize {
    30
}
fn default_widths() -> Vec<usize> {
    vec![128, 128]
}
fn default_obs_x() -> ObservationKind {
    ObservationKind::BernoulliMean
}
fn default_obs_y() -> ObservationKind {
    ObservationKind::GaussianLearnedSigma { sigmoid_mean: true }
}

impl ModelConfig {
    pub fn new(kind: ObjectiveKind) -> ModelConfig {
        ModelConfig {
            kind,
            d_z: default_d_z(),
            d_hx: default_d_h(),
            d_hy: default_d_h(),
            encoder_widths: default_widths(),
            decoder_widths: default_widths(),
            obs_x: default_obs_x(),
            obs_y: default_obs_y(),
        }
    }

    /// Private sizes actually used by this kind (zero for shared-only kinds).
    pub fn private_dims(&self) -> (usize, usize) {
        if self.kind.has_private() {
            (self.d_hx, self.d_hy)
        } else {
            (0, 0)
        }
    }
}

/// Canonical network slots, in parameter-serialization order.
pub const SLOTS: [&str; 6] = ["enc_zx", "enc_zy", "enc_hx", "enc_hy", "dec_x", "dec_y"];

/// Encoder/decoder networks plus the observation models of one variant.
///
/// Decoders are single networks shared by both bounds of the bidirectional kinds.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub kind: ObjectiveKind,
    pub d_z: usize,
    pub d_hx: usize,
    pub d_hy: usize,
    pub obs_x: ObservationModel,
    pub obs_y: ObservationModel,
    pub enc_zx: Network,
    pub enc_zy: Option<Network>,
    pub enc_hx: Option<Network>,
    pub enc_hy: Option<Network>,
    pub dec_x: Option<Network>,
    pub dec_y: Option<Network>,
}

fn decoder_head(kind: &ObservationKind, dim: usize) -> Head {
    match *kind {
        ObservationKind::BernoulliMean => Head::BernoulliMeans { dim },
        ObservationKind::GaussianFixedSigma { sigmoid_mean, .. } => Head::GaussianMeans {
            dim,
            sigmoid: sigmoid_mean,
        },
        ObservationKind::GaussianLearnedSigma { sigmoid_mean } => Head::GaussianMeansAndLogSigma {
            dim,
            sigmoid: sigmoid_mean,
        },
    }
}

/// Network specs for every slot the kind uses, keyed by slot name.
pub fn network_specs(cfg: &ModelConfig, d_x: usize, d_y: usize) -> Result<Vec<(&'static str, MlpSpec)>> {
    let kind = cfg.kind;
    let (d_hx, d_hy) = cfg.private_dims();
    let enc = |input: usize, head: Head| MlpSpec::new(input, cfg.encoder_widths.clone(), head);
    let dec = |input: usize, head: Head| MlpSpec::new(input, cfg.decoder_widths.clone(), head);
    let code = Head::GaussianMeans { dim: cfg.d_z, sigmoid: false };
    let post = |dim| Head::GaussianParams { dim };

    let mut specs = Vec::new();
    let deterministic = matches!(kind, ObjectiveKind::Mvae | ObjectiveKind::MvaeVar | ObjectiveKind::Contrastive);
    specs.push(("enc_zx", enc(d_x, if deterministic { code.clone() } else { post(cfg.d_z) })?));
    if kind.is_bidirectional() {
        specs.push(("enc_zy", enc(d_y, post(cfg.d_z))?));
    }
    if kind == ObjectiveKind::Contrastive {
        specs.push(("enc_zy", enc(d_y, code)?));
        return Ok(specs);
    }
    if d_hx > 0 {
        specs.push(("enc_hx", enc(d_x, post(d_hx))?));
    }
    if d_hy > 0 {
        specs.push(("enc_hy", enc(d_y, post(d_hy))?));
    }
    let obs_y = if kind == ObjectiveKind::MvaeVar {
        ObservationKind::BernoulliMean
    } else {
        cfg.obs_y.clone()
    };
    specs.push(("dec_x", dec(cfg.d_z + d_hx, decoder_head(&cfg.obs_x, d_x))?));
    specs.push(("dec_y", dec(cfg.d_z + d_hy, decoder_head(&obs_y, d_y))?));
    Ok(specs)
}

impl ModelBundle {
    /// Initializes every network from its own substream of `rng`, keyed by
    /// slot, so adding or removing a slot never perturbs the others.
    pub fn new(cfg: &ModelConfig, d_x: usize, d_y: usize, rng: &RngState) -> Result<ModelBundle> {
        Self::build(cfg, d_x, d_y, |slot, spec| {
            let idx = SLOTS.iter().position(|s| *s == slot).unwrap() as u64;
            Network::init(spec, &mut rng.substream(idx))
        })
    }

    /// Same layout as [`ModelBundle::new`] with every parameter zero.
    pub fn zeros(cfg: &ModelConfig, d_x: usize, d_y: usize) -> Result<ModelBundle> {
        Self::build(cfg, d_x, d_y, |_, spec| Network::zeros(spec))
    }

    fn build(
        cfg: &ModelConfig,
        d_x: usize,
        d_y: usize,
        mut make: impl FnMut(&str, MlpSpec) -> Result<Network>,
    ) -> Result<ModelBundle> {
        if cfg.d_z == 0 {
            return Err(Error::Config("d_z must be positive".into()));
        }
        let (d_hx, d_hy) = cfg.private_dims();
        let obs_y_kind = if cfg.kind == ObjectiveKind::MvaeVar {
            ObservationKind::BernoulliMean
        } else {
            cfg.obs_y.clone()
        };
        let mut nets = network_specs(cfg, d_x, d_y)?
            .into_iter()
            .map(|(slot, spec)| Ok((slot, make(slot, spec)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut take = |slot: &str| {
            nets.iter()
                .position(|(s, _)| *s == slot)
                .map(|i| nets.remove(i).1)
        };
        let b = ModelBundle {
            kind: cfg.kind,
            d_z: cfg.d_z,
            d_hx,
            d_hy,
            obs_x: ObservationModel::new(cfg.obs_x.clone(), d_x)?,
            obs_y: ObservationModel::new(obs_y_kind, d_y)?,
            enc_zx: take("enc_zx").expect("enc_zx is always specified"),
            enc_zy: take("enc_zy"),
            enc_hx: take("enc_hx"),
            enc_hy: take("enc_hy"),
            dec_x: take("dec_x"),
            dec_y: take("dec_y"),
        };
        b.validate()?;
        Ok(b)
    }

    /// Installs a network in a named slot.
    pub fn set_slot(&mut self, slot: &str, net: Network) -> Result<()> {
        match slot {
            "enc_zx" => self.enc_zx = net,
            "enc_zy" => self.enc_zy = Some(net),
            "enc_hx" => self.enc_hx = Some(net),
            "enc_hy" => self.enc_hy = Some(net),
            "dec_x" => self.dec_x = Some(net),
            "dec_y" => self.dec_y = Some(net),
            other => return Err(Error::Config(format!("unknown network slot {other}"))),
        }
        Ok(())
    }

    /// Checks that every network the kind needs is present.
    pub fn validate(&self) -> Result<()> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{:?} bundle is missing {what}", self.kind)))
            }
        };
        if self.kind.is_bidirectional() || self.kind == ObjectiveKind::Contrastive {
            need(self.enc_zy.is_some(), "enc_zy")?;
        }
        if self.kind != ObjectiveKind::Contrastive {
            need(self.dec_x.is_some() && self.dec_y.is_some(), "decoders")?;
        }
        need(self.d_hx == 0 || self.enc_hx.is_some(), "enc_hx")?;
        need(self.d_hy == 0 || self.enc_hy.is_some(), "enc_hy")?;
        Ok(())
    }

    /// Present networks in canonical slot order.
    pub fn networks(&self) -> Vec<(&'static str, &Network)> {
        let all = [
            Some(&self.enc_zx),
            self.enc_zy.as_ref(),
            self.enc_hx.as_ref(),
            self.enc_hy.as_ref(),
            self.dec_x.as_ref(),
            self.dec_y.as_ref(),
        ];
        SLOTS.iter().zip(all).filter_map(|(s, n)| n.map(|n| (*s, n))).collect()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.networks().into_iter().flat_map(|(_, n)| n.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let all = [
            Some(&mut self.enc_zx),
            self.enc_zy.as_mut(),
            self.enc_hx.as_mut(),
            self.enc_hy.as_mut(),
            self.dec_x.as_mut(),
            self.dec_y.as_mut(),
        ];
        all.into_iter().flatten().flat_map(|n| n.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.numel()).sum()
    }

    pub fn input_dims(&self) -> (usize, usize) {
        (self.obs_x.dim, self.obs_y.dim)
    }

    /// Records every parameter on `tape`.
    pub fn bind(&self, tape: &mut Tape) -> Result<BoundBundle> {
        let bind = |n: &Option<Network>, tape: &mut Tape| n.as_ref().map(|n| n.bind(tape)).transpose();
        Ok(BoundBundle {
            kind: self.kind,
            d_z: self.d_z,
            d_hx: self.d_hx,
            d_hy: self.d_hy,
            obs_x: self.obs_x.clone(),
            obs_y: self.obs_y.clone(),
            enc_zx: self.enc_zx.bind(tape)?,
            enc_zy: bind(&self.enc_zy, tape)?,
            enc_hx: bind(&self.enc_hx, tape)?,
            enc_hy: bind(&self.enc_hy, tape)?,
            dec_x: bind(&self.dec_x, tape)?,
            dec_y: bind(&self.dec_y, tape)?,
        })
    }
}

/// A [`ModelBundle`] whose parameters are recorded on a tape.
#[derive(Clone, Debug)]
pub struct BoundBundle {
    pub kind: ObjectiveKind,
    pub d_z: usize,
    pub d_hx: usize,
    pub d_hy: usize,
    pub obs_x: ObservationModel,
    pub obs_y: ObservationModel,
    pub enc_zx: BoundNetwork,
    pub enc_zy: Option<BoundNetwork>,
    pub enc_hx: Option<BoundNetwork>,
    pub enc_hy: Option<BoundNetwork>,
    pub dec_x: Option<BoundNetwork>,
    pub dec_y: Option<BoundNetwork>,
}

impl BoundBundle {
    /// Parameter handles in [`ModelBundle::params`] order.
    pub fn param_vars(&self) -> Vec<Var> {
        [
            Some(&self.enc_zx),
            self.enc_zy.as_ref(),
            self.enc_hx.as_ref(),
            self.enc_hy.as_ref(),
            self.dec_x.as_ref(),
            self.dec_y.as_ref(),
        ]
        .into_iter()
        .flatten()
        .flat_map(|n| n.param_vars())
        .collect()
    }

    pub(crate) fn require<'a>(net: &'a Option<BoundNetwork>, what: &str) -> Result<&'a BoundNetwork> {
        net.as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("bundle has no {what} network")))
    }
}
