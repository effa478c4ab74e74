//! Binary model container.
//!
//! Layout: the 8-byte magic `DREMODEL`, a little-endian `u32` format
//! version, a `u64` header length, a JSON header with the configuration and
//! all shapes, then every array as little-endian `f64` in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::layer::DreLayerModel;
use super::model::{DreModel, FinalHead};
use super::DreConfig;
use crate::features::FeatureBlock;
use crate::ridge::{RidgeGridFit, SolveMode};
use crate::{DreError, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"DREMODEL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: DreConfig,
    input_dim: usize,
    layers: Vec<LayerHeader>,
    heads: Vec<HeadHeader>,
    payload_values: u64,
}

#[derive(Serialize, Deserialize)]
struct LayerHeader {
    blocks: Vec<BlockHeader>,
}

#[derive(Serialize, Deserialize)]
struct BlockHeader {
    input_dim: usize,
    n_features: usize,
    gammas: Vec<f64>,
    mode: SolveMode,
}

#[derive(Serialize, Deserialize)]
struct HeadHeader {
    n_features: usize,
    mode: SolveMode,
    lambda_star_index: usize,
    valid_mse: f64,
}

fn push_all<'a>(out: &mut Vec<f64>, values: impl IntoIterator<Item = &'a f64>) {
    out.extend(values);
}

/// Writes `model` to `w`.
pub fn write_model<W: Write>(model: &DreModel, mut w: W) -> Result<()> {
    let mut payload = Vec::new();
    let mut layers = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let mut blocks = Vec::with_capacity(layer.blocks.len());
        for (block, fit) in layer.blocks.iter().zip(&layer.fits) {
            push_all(&mut payload, block.weights().iter());
            push_all(&mut payload, block.biases().iter());
            push_all(&mut payload, fit.betas().iter());
            blocks.push(BlockHeader {
                input_dim: block.input_dim(),
                n_features: block.n_features(),
                gammas: block.gammas().to_vec(),
                mode: fit.mode(),
            });
        }
        push_all(&mut payload, layer.scales.iter());
        layers.push(LayerHeader { blocks });
    }
    let mut heads = Vec::with_capacity(model.heads.len());
    for head in &model.heads {
        push_all(&mut payload, head.fit.betas().iter());
        heads.push(HeadHeader {
            n_features: head.fit.n_features(),
            mode: head.fit.mode(),
            lambda_star_index: head.lambda_star_index,
            valid_mse: head.valid_mse,
        });
    }
    let header = Header {
        config: model.config.clone(),
        input_dim: model.input_dim,
        layers,
        heads,
        payload_values: payload.len() as u64,
    };
    let json = serde_json::to_vec(&header).map_err(|e| DreError::Format(e.to_string()))?;
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for v in payload {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

struct Payload {
    values: Vec<f64>,
    pos: usize,
}

impl Payload {
    fn take(&mut self, count: usize) -> Result<Vec<f64>> {
        let end = self
            .pos
            .checked_add(count)
            .filter(|&e| e <= self.values.len())
            .ok_or_else(|| DreError::Format("payload shorter than header shapes".into()))?;
        let out = self.values[self.pos..end].to_vec();
        self.pos = end;
        Ok(out)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| DreError::Format("array shape overflows".into()))?;
        Array2::from_shape_vec((rows, cols), self.take(n)?).map_err(|e| DreError::Format(e.to_string()))
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => DreError::Format(format!("file truncated in {what}")),
        _ => DreError::Io(e),
    })
}

/// Reads a model written by [`write_model`].
pub fn read_model<R: Read>(mut r: R) -> Result<DreModel> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MODEL_MAGIC {
        return Err(DreError::Format("not a DRE model file (bad magic)".into()));
    }
    let mut word = [0u8; 4];
    read_exact(&mut r, &mut word, "version")?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(DreError::Format(format!(
            "model format version {version} is not supported (expected {FORMAT_VERSION})"
        )));
    }
    let mut len = [0u8; 8];
    read_exact(&mut r, &mut len, "header length")?;
    let header_len = usize::try_from(u64::from_le_bytes(len))
        .map_err(|_| DreError::Format("header length overflows".into()))?;
    let mut json = Vec::new();
    (&mut r).take(header_len as u64).read_to_end(&mut json)?;
    if json.len() != header_len {
        return Err(DreError::Format("file truncated in header".into()));
    }
    let header: Header =
        serde_json::from_slice(&json).map_err(|e| DreError::Format(format!("corrupt header: {e}")))?;

    let expected_bytes = header
        .payload_values
        .checked_mul(8)
        .ok_or_else(|| DreError::Format("payload size overflows".into()))?;
    let mut bytes = Vec::new();
    (&mut r).take(expected_bytes).read_to_end(&mut bytes)?;
    if (bytes.len() as u64) != expected_bytes {
        return Err(DreError::Format(format!(
            "file truncated: payload has {} of {expected_bytes} bytes",
            bytes.len()
        )));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(DreError::Format("trailing bytes after payload".into()));
    }
    let mut payload = Payload {
        values: bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect(),
        pos: 0,
    };

    let lambdas = header.config.lambdas.clone();
    let l = lambdas.len();
    let mut layers = Vec::with_capacity(header.layers.len());
    for lh in &header.layers {
        let mut blocks = Vec::with_capacity(lh.blocks.len());
        let mut fits = Vec::with_capacity(lh.blocks.len());
        for bh in &lh.blocks {
            let weights = payload.matrix(bh.input_dim, bh.n_features)?;
            let biases = Array1::from(payload.take(bh.n_features)?);
            blocks.push(FeatureBlock::from_parts(weights, biases, bh.gammas.clone())?);
            let betas = payload.matrix(bh.n_features, l)?;
            fits.push(RidgeGridFit::from_parts(lambdas.clone(), betas, bh.mode)?);
        }
        let scales = payload.matrix(lh.blocks.len(), l)?;
        layers.push(DreLayerModel::from_parts(blocks, fits, scales)?);
    }
    let mut heads = Vec::with_capacity(header.heads.len());
    for hh in &header.heads {
        let betas = payload.matrix(hh.n_features, l)?;
        let fit = RidgeGridFit::from_parts(lambdas.clone(), betas, hh.mode)?;
        heads.push(FinalHead::from_parts(fit, hh.lambda_star_index, hh.valid_mse)?);
    }
    if payload.pos != payload.values.len() {
        return Err(DreError::Format("payload longer than header shapes".into()));
    }
    DreModel::from_parts(header.config, header.input_dim, layers, heads)
}

impl DreModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_model(self, BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_model(BufReader::new(File::open(path)?))
    }
}
