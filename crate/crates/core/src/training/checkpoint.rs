use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::trainer::TrainConfig;
use crate::distributions::ObservationModel;
use crate::error::{Error, Result};
use crate::networks::MlpSpec;
use crate::objectives::{ModelBundle, ModelConfig, ObjectiveKind};
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARAMS_FILE: &str = "params.bin";
/// ADAM moments (`m` then `v`, parameter order); present for resumable checkpoints.
pub const OPTIM_FILE: &str = "optim.bin";

/// Where the random streams stand: training resumes at `epoch` after `step` updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngCursor {
    pub seed: u64,
    pub epoch: usize,
    pub step: u64,
}

/// A model plus everything needed to continue training it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub d_x: usize,
    pub d_y: usize,
    pub bundle: ModelBundle,
    pub train: Option<TrainConfig>,
    pub rng: RngCursor,
    pub adam: Option<AdamState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkEntry {
    slot: String,
    spec: MlpSpec,
    param_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimEntry {
    config: AdamConfig,
    t: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    kind: ObjectiveKind,
    d_x: usize,
    d_y: usize,
    d_z: usize,
    d_hx: usize,
    d_hy: usize,
    model: ModelConfig,
    observation_x: ObservationModel,
    observation_y: ObservationModel,
    networks: Vec<NetworkEntry>,
    /// Concatenation order of `params.bin`.
    parameter_order: Vec<ParamEntry>,
    param_count: usize,
    train: Option<TrainConfig>,
    rng: RngCursor,
    optimizer: Option<OptimEntry>,
}

fn manifest(ck: &Checkpoint) -> Manifest {
    let b = &ck.bundle;
    let mut networks = Vec::new();
    let mut order = Vec::new();
    for (slot, net) in b.networks() {
        networks.push(NetworkEntry {
            slot: slot.to_string(),
            spec: net.spec().clone(),
            param_count: net.param_count(),
        });
        for (i, layer) in net.layers().iter().enumerate() {
            order.push(ParamEntry { name: format!("{slot}.{i}.weight"), shape: layer.weight.shape().to_vec() });
            order.push(ParamEntry { name: format!("{slot}.{i}.bias"), shape: layer.bias.shape().to_vec() });
        }
    }
    Manifest {
        format_version: FORMAT_VERSION,
        kind: b.kind,
        d_x: ck.d_x,
        d_y: ck.d_y,
        d_z: b.d_z,
        d_hx: b.d_hx,
        d_hy: b.d_hy,
        model: ck.model.clone(),
        observation_x: b.obs_x.clone(),
        observation_y: b.obs_y.clone(),
        networks,
        parameter_order: order,
        param_count: b.param_count(),
        train: ck.train.clone(),
        rng: ck.rng,
        optimizer: ck.adam.as_ref().map(|a| OptimEntry { config: a.config, t: a.t }),
    }
}

fn to_bytes<'a>(tensors: impl IntoIterator<Item = &'a Tensor>) -> Vec<u8> {
    tensors
        .into_iter()
        .flat_map(|t| t.data().iter().flat_map(|v| v.to_le_bytes()))
        .collect()
}

fn fill_from_bytes(tensors: Vec<&mut Tensor>, bytes: &[u8], file: &str) -> Result<()> {
    let want: usize = tensors.iter().map(|t| t.numel()).sum::<usize>() * 8;
    if bytes.len() != want {
        return Err(Error::Checkpoint(format!(
            "{file}: expected {want} bytes, found {} (length mismatch)",
            bytes.len()
        )));
    }
    let mut chunks = bytes.chunks_exact(8);
    for t in tensors {
        for v in t.data_mut() {
            let c = chunks.next().expect("length checked above");
            *v = f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
        }
    }
    Ok(())
}

/// Writes `manifest.json`, `params.bin` and (when optimizer state is present)
/// `optim.bin` into `dir`, creating it if needed.
pub fn save_checkpoint(dir: &Path, ck: &Checkpoint) -> Result<()> {
    fs::create_dir_all(dir)?;
    let m = manifest(ck);
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&m)? + "\n")?;
    fs::write(dir.join(PARAMS_FILE), to_bytes(ck.bundle.params()))?;
    let optim = dir.join(OPTIM_FILE);
    match &ck.adam {
        Some(a) => fs::write(optim, to_bytes(a.m.iter().chain(&a.v)))?,
        None if optim.exists() => fs::remove_file(optim)?,
        None => {}
    }
    Ok(())
}

/// Reads a checkpoint written by [`save_checkpoint`]. Parameters come back
/// bit-identical.
pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("corrupt manifest: {e}")))?;
    let version = raw.get("format_version").and_then(|v| v.as_u64());
    if version != Some(FORMAT_VERSION as u64) {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version:?}, this build reads {FORMAT_VERSION}"
        )));
    }
    let m: Manifest =
        serde_json::from_value(raw).map_err(|e| Error::Checkpoint(format!("corrupt manifest: {e}")))?;
    let mut bundle = ModelBundle::zeros(&m.model, m.d_x, m.d_y)?;
    let expected = manifest(&Checkpoint {
        model: m.model.clone(),
        d_x: m.d_x,
        d_y: m.d_y,
        bundle: bundle.clone(),
        train: m.train.clone(),
        rng: m.rng,
        adam: None,
    });
    if expected.networks != m.networks || expected.parameter_order != m.parameter_order || expected.param_count != m.param_count {
        return Err(Error::Checkpoint("manifest networks disagree with its model config".into()));
    }
    if expected.observation_x != m.observation_x || expected.observation_y != m.observation_y {
        return Err(Error::Checkpoint("manifest observation models disagree with its model config".into()));
    }
    fill_from_bytes(bundle.params_mut(), &fs::read(dir.join(PARAMS_FILE))?, PARAMS_FILE)?;
    let adam = match m.optimizer {
        Some(o) => {
            let mut a = AdamState::new(o.config, bundle.params());
            a.t = o.t;
            let bytes = fs::read(dir.join(OPTIM_FILE))?;
            fill_from_bytes(a.m.iter_mut().chain(a.v.iter_mut()).collect(), &bytes, OPTIM_FILE)?;
            Some(a)
        }
        None => None,
    };
    Ok(Checkpoint { model: m.model, d_x: m.d_x, d_y: m.d_y, bundle, train: m.train, rng: m.rng, adam })
}
