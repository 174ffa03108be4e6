//! Parameter checkpoint file format (`.lesp`).
//!
//! Layout (little-endian): magic `LESP`, version `u32`, closure variant
//! `u8`, network spec (layer count `u32`, then per layer `in_ch`, `out_ch`,
//! `radius` as `u32` and an activation tag `u8`), then all weights as `f64`
//! in declaration order, then the raw (pre-reparameterization) `B1`, `B2`,
//! `B3` weights for the skew-symmetric closure. Non-network models store
//! zero layers; the Smagorinsky model stores its constant as a single
//! weight.

use crate::closures::neural::B_PARAMS;
use crate::closures::{ClosureModel, SkewTerms};
use crate::nn::cnn::{Activation, CnnSpec, LayerSpec};
use crate::{Error, Result};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"LESP";
const VERSION: u32 = 1;

fn variant_tag(model: &ClosureModel) -> u8 {
    match model {
        ClosureModel::NoClosure => 0,
        ClosureModel::Smagorinsky { .. } => 1,
        ClosureModel::DynamicSmagorinsky => 2,
        ClosureModel::Cnn { .. } => 3,
        ClosureModel::Div { .. } => 4,
        ClosureModel::Skew { .. } => 5,
        ClosureModel::CnnClipped { .. } => 6,
    }
}

pub fn write_checkpoint(model: &ClosureModel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[variant_tag(model)])?;

    let (spec, weights): (Option<&CnnSpec>, &[f64]) = match model {
        ClosureModel::NoClosure | ClosureModel::DynamicSmagorinsky => (None, &[]),
        ClosureModel::Smagorinsky { cs } => (None, std::slice::from_ref(cs)),
        ClosureModel::Cnn { spec, theta }
        | ClosureModel::Div { spec, theta }
        | ClosureModel::CnnClipped { spec, theta }
        | ClosureModel::Skew { spec, theta, .. } => (Some(spec), theta),
    };

    match spec {
        None => w.write_all(&0u32.to_le_bytes())?,
        Some(spec) => {
            w.write_all(&(spec.layers.len() as u32).to_le_bytes())?;
            for layer in &spec.layers {
                w.write_all(&(layer.in_ch as u32).to_le_bytes())?;
                w.write_all(&(layer.out_ch as u32).to_le_bytes())?;
                w.write_all(&(layer.radius as u32).to_le_bytes())?;
                w.write_all(&[layer.activation.tag()])?;
            }
        }
    }
    // Smagorinsky stores its constant here; for the skew model the trailing
    // 300 values are the raw B weights, in declaration order after the
    // network weights.
    for x in weights {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<ClosureModel> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a LESP file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported LESP version {version}")));
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let tag = tag[0];

    let n_layers = read_u32(&mut r)? as usize;
    let spec = if n_layers > 0 {
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let in_ch = read_u32(&mut r)? as usize;
            let out_ch = read_u32(&mut r)? as usize;
            let radius = read_u32(&mut r)? as usize;
            let mut act = [0u8; 1];
            r.read_exact(&mut act)?;
            let activation = Activation::from_tag(act[0])
                .ok_or_else(|| Error::Format(format!("unknown activation tag {}", act[0])))?;
            layers.push(LayerSpec {
                in_ch,
                out_ch,
                radius,
                activation,
            });
        }
        Some(CnnSpec::new(layers))
    } else {
        None
    };

    let read_weights = |r: &mut BufReader<std::fs::File>, count: usize| -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; count * 8];
        r.read_exact(&mut bytes)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };

    match tag {
        0 => Ok(ClosureModel::NoClosure),
        1 => {
            let w = read_weights(&mut r, 1)?;
            Ok(ClosureModel::Smagorinsky { cs: w[0] })
        }
        2 => Ok(ClosureModel::DynamicSmagorinsky),
        3 | 4 | 6 => {
            let spec = spec.ok_or_else(|| Error::Format("network checkpoint without layers".into()))?;
            let theta = read_weights(&mut r, spec.param_count())?;
            Ok(match tag {
                3 => ClosureModel::Cnn { spec, theta },
                4 => ClosureModel::Div { spec, theta },
                _ => ClosureModel::CnnClipped { spec, theta },
            })
        }
        5 => {
            let spec = spec.ok_or_else(|| Error::Format("network checkpoint without layers".into()))?;
            let theta = read_weights(&mut r, spec.param_count() + 3 * B_PARAMS)?;
            Ok(ClosureModel::Skew {
                spec,
                theta,
                terms: SkewTerms::Both,
            })
        }
        _ => Err(Error::Format(format!("unknown closure variant tag {tag}"))),
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
