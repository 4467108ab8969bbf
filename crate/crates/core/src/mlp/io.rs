//! Plain-text model file.
//!
//! ```text
//! tespar-snn-mlp 1
//! dims 50 80 2
//! activation relu
//! zero_bias true
//! meta <key> <value...>
//! layer <index> <fan_in> <fan_out>
//! <fan_out weights>            (fan_in rows)
//! bias <index> <fan_out>       (only when zero_bias is false)
//! <fan_out values>
//! end
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! write/read cycle is lossless.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{Activation, Layer, MlpModel};
use crate::error::{Error, Result};
use crate::num::Real;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "tespar-snn-mlp";

pub fn format_model<T: Real>(model: &MlpModel<T>) -> String {
    let mut s = String::new();
    let dims: Vec<String> = model.dims().iter().map(|d| d.to_string()).collect();
    writeln!(s, "{MAGIC} {MODEL_FORMAT_VERSION}").unwrap();
    writeln!(s, "dims {}", dims.join(" ")).unwrap();
    writeln!(s, "activation {}", model.activation.name()).unwrap();
    writeln!(s, "zero_bias {}", model.zero_bias()).unwrap();
    for (k, v) in &model.meta {
        writeln!(s, "meta {k} {v}").unwrap();
    }
    let row = |vals: &[T]| vals.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ");
    for (l, layer) in model.layers().iter().enumerate() {
        writeln!(s, "layer {l} {} {}", layer.fan_in, layer.fan_out).unwrap();
        for i in 0..layer.fan_in {
            writeln!(s, "{}", row(layer.row(i))).unwrap();
        }
        if let Some(b) = &layer.bias {
            writeln!(s, "bias {l} {}", b.len()).unwrap();
            writeln!(s, "{}", row(b)).unwrap();
        }
    }
    s.push_str("end\n");
    s
}

pub fn write_model<T: Real>(path: impl AsRef<Path>, model: &MlpModel<T>) -> Result<()> {
    std::fs::write(path, format_model(model))?;
    Ok(())
}

fn perr(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("model line {}: {msg}", line + 1))
}

fn parse_values<T: Real>(line: usize, text: &str, expected: usize) -> Result<Vec<T>> {
    let vals = text
        .split_whitespace()
        .map(|t| f64::from_str(t).map(T::of).map_err(|e| perr(line, format!("{t:?}: {e}"))))
        .collect::<Result<Vec<T>>>()?;
    if vals.len() != expected {
        return Err(perr(line, format!("expected {expected} values, got {}", vals.len())));
    }
    Ok(vals)
}

pub fn parse_model<T: Real>(text: &str) -> Result<MlpModel<T>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next =
        |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("unexpected end of model, wanted {what}")));

    let (n, header) = next("header")?;
    let mut hw = header.split_whitespace();
    if hw.next() != Some(MAGIC) {
        return Err(perr(n, "not a model file"));
    }
    let version: u32 = hw.next().and_then(|v| v.parse().ok()).ok_or_else(|| perr(n, "missing version"))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(perr(n, format!("unsupported version {version}")));
    }

    let mut dims: Option<Vec<usize>> = None;
    let mut activation = Activation::Relu;
    let mut meta = std::collections::BTreeMap::new();
    let mut layers: Vec<Layer<T>> = Vec::new();
    loop {
        let (n, line) = next("section")?;
        let mut words = line.split_whitespace();
        match words.next() {
            Some("dims") => {
                dims = Some(words.map(|w| w.parse().map_err(|e| perr(n, e))).collect::<Result<_>>()?);
            }
            Some("activation") => {
                activation = match words.next() {
                    Some("relu") => Activation::Relu,
                    Some("tanh") => Activation::Tanh,
                    other => return Err(perr(n, format!("unknown activation {other:?}"))),
                }
            }
            Some("zero_bias") => {}
            Some("meta") => {
                let key = words.next().ok_or_else(|| perr(n, "meta without key"))?;
                meta.insert(key.to_string(), words.collect::<Vec<_>>().join(" "));
            }
            Some("layer") => {
                let nums: Vec<usize> = words.map(|w| w.parse().map_err(|e| perr(n, e))).collect::<Result<_>>()?;
                let [idx, fan_in, fan_out] = nums[..] else { return Err(perr(n, "layer needs index fan_in fan_out")) };
                if idx != layers.len() {
                    return Err(perr(n, format!("layer {idx} out of order")));
                }
                let mut weights = Vec::with_capacity(fan_in * fan_out);
                for _ in 0..fan_in {
                    let (rn, row) = next("weight row")?;
                    weights.extend(parse_values::<T>(rn, row, fan_out)?);
                }
                layers.push(Layer { fan_in, fan_out, weights, bias: None });
            }
            Some("bias") => {
                let nums: Vec<usize> = words.map(|w| w.parse().map_err(|e| perr(n, e))).collect::<Result<_>>()?;
                let [idx, len] = nums[..] else { return Err(perr(n, "bias needs index len")) };
                let layer = layers.get_mut(idx).ok_or_else(|| perr(n, "bias before its layer"))?;
                let (rn, row) = next("bias row")?;
                layer.bias = Some(parse_values::<T>(rn, row, len)?);
            }
            Some("end") => break,
            other => return Err(perr(n, format!("unknown section {other:?}"))),
        }
    }
    let mut model = MlpModel::from_layers(layers, activation)?;
    if let Some(d) = dims {
        if d != model.dims() {
            return Err(Error::Parse(format!("dims line {d:?} disagrees with layers {:?}", model.dims())));
        }
    }
    model.meta = meta;
    Ok(model)
}

pub fn read_model<T: Real>(path: impl AsRef<Path>) -> Result<MlpModel<T>> {
    parse_model(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn text_format_is_lossless(seed in any::<u64>(), biased in any::<bool>()) {
            let mut m = MlpModel::<f64>::init(&[4, 3, 2], !biased, Activation::Relu, seed).unwrap();
            m.meta.insert("seed".into(), seed.to_string());
            let back: MlpModel<f64> = parse_model(&format_model(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn f32_round_trip() {
        let m = MlpModel::<f32>::init(&[5, 2], true, Activation::Relu, 3).unwrap();
        assert_eq!(parse_model::<f32>(&format_model(&m)).unwrap(), m);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_model::<f64>("hello").is_err());
        assert!(parse_model::<f64>("tespar-snn-mlp 9\nend\n").is_err());
        assert!(parse_model::<f64>("tespar-snn-mlp 1\nlayer 0 2 1\n0.5\n").is_err());
    }
}
