//! Fixed-point weight quantisation and Gaussian weight variation.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::mlp::{evaluate, MlpModel, Sample};
use crate::num::Real;
use crate::rng;
use crate::snn::{evaluate_snn, SnnConfig};

/// Two's-complement fixed point: one sign bit, `int_bits`, `frac_bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointFormat {
    pub int_bits: u32,
    pub frac_bits: u32,
}

/// The hardware weight format: 1 sign, 3 integer, 6 fractional bits.
pub const HW_FORMAT: FixedPointFormat = FixedPointFormat { int_bits: 3, frac_bits: 6 };

impl FixedPointFormat {
    pub fn new(int_bits: u32, frac_bits: u32) -> Result<Self> {
        let f = Self { int_bits, frac_bits };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width() > 62 {
            return param("fixed-point format wider than 62 bits");
        }
        Ok(())
    }

    pub fn width(&self) -> u32 {
        1 + self.int_bits + self.frac_bits
    }

    pub fn step(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn min_code(&self) -> i64 {
        -(1i64 << (self.int_bits + self.frac_bits))
    }

    pub fn max_code(&self) -> i64 {
        (1i64 << (self.int_bits + self.frac_bits)) - 1
    }

    pub fn min_value(&self) -> f64 {
        self.min_code() as f64 * self.step()
    }

    pub fn max_value(&self) -> f64 {
        self.max_code() as f64 * self.step()
    }

    pub fn value_of(&self, code: i64) -> f64 {
        code as f64 * self.step()
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1,{},{}", self.int_bits, self.frac_bits)
    }
}

impl FromStr for FixedPointFormat {
    type Err = Error;

    /// Accepts `"1,I,F"` or `"I,F"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let nums = |p: &[&str]| -> Result<Vec<u32>> {
            p.iter()
                .map(|v| v.parse::<u32>().map_err(|_| Error::Parse(format!("bad fixed-point format {s:?}"))))
                .collect()
        };
        let v = match parts.len() {
            3 => {
                let v = nums(&parts)?;
                if v[0] != 1 {
                    return Err(Error::Parse("exactly one sign bit is supported".into()));
                }
                vec![v[1], v[2]]
            }
            2 => nums(&parts)?,
            _ => return Err(Error::Parse(format!("bad fixed-point format {s:?}"))),
        };
        Self::new(v[0], v[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// Round to nearest, exact ties to even.
    #[default]
    Nearest,
    /// Drop the low bits (floor in two's complement).
    Truncate,
}

impl Rounding {
    pub fn name(self) -> &'static str {
        match self {
            Rounding::Nearest => "nearest",
            Rounding::Truncate => "truncate",
        }
    }
}

/// Quantised value and its two's-complement code.
pub fn quantize<T: Real>(w: T, fmt: FixedPointFormat, mode: Rounding) -> (T, i64) {
    let scaled = w.as_f64() / fmt.step();
    let raw = match mode {
        Rounding::Nearest => scaled.round_ties_even(),
        Rounding::Truncate => scaled.floor(),
    };
    let code = if raw.is_nan() { 0 } else { raw.clamp(fmt.min_code() as f64, fmt.max_code() as f64) as i64 };
    (T::of(fmt.value_of(code)), code)
}

pub const QUANT_META_KEY: &str = "quant_format";

/// Quantises every weight (and bias, if any); records the format in `meta`.
pub fn quantize_model<T: Real>(model: &MlpModel<T>, fmt: FixedPointFormat, mode: Rounding) -> MlpModel<T> {
    let mut out = model.map_weights(|_, w| quantize(w, fmt, mode).0);
    for layer in out.layers_mut() {
        if let Some(b) = layer.bias.as_mut() {
            b.iter_mut().for_each(|v| *v = quantize(*v, fmt, mode).0);
        }
    }
    out.meta.insert(QUANT_META_KEY.into(), fmt.to_string());
    out.meta.insert("quant_rounding".into(), mode.name().into());
    out
}

/// True when every weight is a representable value of `fmt`.
pub fn is_representable<T: Real>(model: &MlpModel<T>, fmt: FixedPointFormat) -> bool {
    model.weights().all(|&w| {
        let v = w.as_f64();
        let c = v / fmt.step();
        c.fract() == 0.0 && c >= fmt.min_code() as f64 && c <= fmt.max_code() as f64
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbMode {
    /// `w * (1 + g)`
    #[default]
    Relative,
    /// `w + g`, `g` in weight units.
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbSpec {
    /// Standard deviation in percent.
    pub sigma_pct: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub mode: PerturbMode,
}

impl Default for PerturbSpec {
    fn default() -> Self {
        Self { sigma_pct: 0.0, n_trials: 10, seed: 0, mode: PerturbMode::Relative }
    }
}

impl PerturbSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_pct >= 0.0 && self.sigma_pct.is_finite()) {
            return param("sigma_pct must be a finite non-negative number");
        }
        if self.n_trials == 0 {
            return param("n_trials must be at least 1");
        }
        Ok(())
    }
}

/// Independent Gaussian variation of every weight, fixed by `(seed, trial)`.
pub fn perturb_model<T: Real>(model: &MlpModel<T>, spec: &PerturbSpec, trial: usize) -> Result<MlpModel<T>> {
    spec.validate()?;
    if spec.sigma_pct == 0.0 {
        return Ok(model.clone());
    }
    let normal = Normal::new(0.0, spec.sigma_pct / 100.0).map_err(|e| Error::Param(e.to_string()))?;
    let mut r = rng::stream(spec.seed, &[0xBA7, trial as u64]);
    Ok(model.map_weights(|_, w| {
        let g = normal.sample(&mut r);
        match spec.mode {
            PerturbMode::Relative => w * T::of(1.0 + g),
            PerturbMode::Additive => w + T::of(g),
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InferencePath {
    Ann,
    Snn,
}

impl fmt::Display for InferencePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InferencePath::Ann => "ann",
            InferencePath::Snn => "snn",
        })
    }
}

impl FromStr for InferencePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ann" => Ok(InferencePath::Ann),
            "snn" => Ok(InferencePath::Snn),
            _ => Err(Error::Parse(format!("unknown inference path {s:?}"))),
        }
    }
}

fn accuracy<T: Real>(model: &MlpModel<T>, samples: &[Sample<T>], path: InferencePath, snn: &SnnConfig) -> Result<f64> {
    match path {
        InferencePath::Ann => evaluate(model, samples),
        InferencePath::Snn => evaluate_snn(model, samples, snn),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantRow {
    pub frac_bits: u32,
    pub path: InferencePath,
    pub accuracy: f64,
}

/// Accuracy for each fractional width at a fixed integer width.
pub fn quant_sweep<T: Real>(
    model: &MlpModel<T>,
    samples: &[Sample<T>],
    int_bits: u32,
    frac_bits: &[u32],
    mode: Rounding,
    paths: &[InferencePath],
    snn: &SnnConfig,
) -> Result<Vec<QuantRow>> {
    if frac_bits.is_empty() || paths.is_empty() {
        return param("quantisation sweep needs at least one width and one path");
    }
    let mut rows = Vec::new();
    for &fb in frac_bits {
        let q = quantize_model(model, FixedPointFormat::new(int_bits, fb)?, mode);
        for &path in paths {
            rows.push(QuantRow { frac_bits: fb, path, accuracy: accuracy(&q, samples, path, snn)? });
        }
    }
    Ok(rows)
}

pub fn quant_csv(rows: &[QuantRow]) -> String {
    let mut s = String::from("frac_bits,path,accuracy\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:.6}", r.frac_bits, r.path, r.accuracy);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationRow {
    pub sigma_pct: f64,
    pub path: InferencePath,
    pub median_accuracy: f64,
    pub trials: Vec<f64>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Median accuracy over `n_trials` perturbed copies for each sigma and path.
pub fn robustness_sweep<T: Real>(
    model: &MlpModel<T>,
    samples: &[Sample<T>],
    sigmas: &[f64],
    base: &PerturbSpec,
    paths: &[InferencePath],
    snn: &SnnConfig,
) -> Result<Vec<VariationRow>> {
    if sigmas.is_empty() || paths.is_empty() {
        return param("variation sweep needs at least one sigma and one path");
    }
    let mut rows = Vec::new();
    for &sigma in sigmas {
        let spec = PerturbSpec { sigma_pct: sigma, ..*base };
        spec.validate()?;
        let models = (0..spec.n_trials).map(|t| perturb_model(model, &spec, t)).collect::<Result<Vec<_>>>()?;
        for &path in paths {
            let trials = models.iter().map(|m| accuracy(m, samples, path, snn)).collect::<Result<Vec<_>>>()?;
            rows.push(VariationRow { sigma_pct: sigma, path, median_accuracy: median(&trials), trials });
        }
    }
    Ok(rows)
}

pub fn variation_csv(rows: &[VariationRow]) -> String {
    let mut s = String::from("sigma_pct,path,median_accuracy\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:.6}", r.sigma_pct, r.path, r.median_accuracy);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(1.75f64, HW_FORMAT, Rounding::Nearest), (1.75, 112));
        assert_eq!(quantize(9.0f64, HW_FORMAT, Rounding::Nearest), (7.984375, 511));
        assert_eq!(quantize(-9.0f64, HW_FORMAT, Rounding::Nearest), (-8.0, -512));
        assert_eq!(quantize(-0.011f64, HW_FORMAT, Rounding::Nearest), (-0.015625, -1));
    }

    #[test]
    fn ties_go_to_even_and_truncation_floors() {
        let f = FixedPointFormat::new(3, 1).unwrap();
        assert_eq!(quantize(0.25f64, f, Rounding::Nearest).0, 0.0);
        assert_eq!(quantize(0.75f64, f, Rounding::Nearest).0, 1.0);
        assert_eq!(quantize(0.74f64, f, Rounding::Truncate).0, 0.5);
        assert_eq!(quantize(-0.1f64, f, Rounding::Truncate).0, -0.5);
    }

    #[test]
    fn format_parsing() {
        assert_eq!("1,3,6".parse::<FixedPointFormat>().unwrap(), HW_FORMAT);
        assert_eq!("3,6".parse::<FixedPointFormat>().unwrap(), HW_FORMAT);
        assert!("2,3,6".parse::<FixedPointFormat>().is_err());
        assert_eq!(HW_FORMAT.to_string(), "1,3,6");
        assert_eq!(HW_FORMAT.width(), 10);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
