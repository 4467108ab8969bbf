use super::word::SpikeWord;
use crate::error::{Error, Result};
use crate::mlp::Layer;
use crate::num::Real;
use crate::robustness::FixedPointFormat;

/// Integrate-and-fire unit with a 16-bit saturating accumulator holding
/// weight codes (value = code * 2^-frac_bits).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FixedIfNeuron {
    pub acc: i16,
    pub spiked: bool,
}

impl FixedIfNeuron {
    #[inline]
    pub fn integrate(&mut self, code: i16) {
        self.acc = self.acc.saturating_add(code);
    }

    /// Fires and clears when strictly above `threshold`.
    #[inline]
    pub fn fire(&mut self, threshold: i16) -> bool {
        self.spiked = self.acc > threshold;
        if self.spiked {
            self.acc = 0;
        }
        self.spiked
    }
}

/// Weight memory, one address per presynaptic neuron holding all of its
/// fan-out codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightRom {
    fan_in: usize,
    fan_out: usize,
    fmt: FixedPointFormat,
    codes: Vec<i16>,
}

impl WeightRom {
    pub fn from_codes(fan_in: usize, fan_out: usize, fmt: FixedPointFormat, codes: Vec<i16>) -> Result<Self> {
        if codes.len() != fan_in * fan_out {
            return Err(Error::Dimension { expected: fan_in * fan_out, got: codes.len() });
        }
        if fmt.width() > 16 {
            return Err(Error::Param(format!("format {fmt} does not fit a 16-bit word")));
        }
        if let Some(c) = codes.iter().find(|&&c| (c as i64) < fmt.min_code() || (c as i64) > fmt.max_code()) {
            return Err(Error::Param(format!("code {c} outside format {fmt}")));
        }
        Ok(Self { fan_in, fan_out, fmt, codes })
    }

    /// Fails unless every weight is exactly representable in `fmt`.
    pub fn from_layer<T: Real>(layer: &Layer<T>, fmt: FixedPointFormat) -> Result<Self> {
        if layer.bias.is_some() {
            return Err(Error::Conversion("weight ROM cannot hold biases".into()));
        }
        let codes = layer
            .weights
            .iter()
            .map(|&w| {
                let c = w.as_f64() / fmt.step();
                if c.fract() != 0.0 || c < fmt.min_code() as f64 || c > fmt.max_code() as f64 {
                    Err(Error::Conversion(format!("weight {w} is not a {fmt} value; quantise the model first")))
                } else {
                    Ok(c as i16)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_codes(layer.fan_in, layer.fan_out, fmt, codes)
    }

    pub fn fan_in(&self) -> usize {
        self.fan_in
    }

    pub fn fan_out(&self) -> usize {
        self.fan_out
    }

    pub fn format(&self) -> FixedPointFormat {
        self.fmt
    }

    pub fn read(&self, addr: usize) -> Result<&[i16]> {
        if addr >= self.fan_in {
            return Err(Error::Fault(format!("weight ROM address {addr} beyond {} rows", self.fan_in)));
        }
        Ok(&self.codes[addr * self.fan_out..(addr + 1) * self.fan_out])
    }

    /// One hex line per address: the fan-out codes in two's complement,
    /// postsynaptic neuron 0 in the most significant bits, zero padded on the
    /// right to a whole number of nibbles.
    pub fn to_hex(&self) -> String {
        let w = self.fmt.width() as usize;
        let mask = (1u32 << w) - 1;
        let mut out = String::new();
        for a in 0..self.fan_in {
            let mut bits = Vec::with_capacity(self.fan_out * w);
            for &c in &self.codes[a * self.fan_out..(a + 1) * self.fan_out] {
                let u = (c as i32 as u32) & mask;
                bits.extend((0..w).rev().map(|b| (u >> b) & 1 == 1));
            }
            out.push_str(&SpikeWord::from_bools(&bits).to_hex());
            out.push('\n');
        }
        out
    }

    pub fn to_layer<T: Real>(&self) -> Layer<T> {
        Layer {
            fan_in: self.fan_in,
            fan_out: self.fan_out,
            weights: self.codes.iter().map(|&c| T::of(self.fmt.value_of(c as i64))).collect(),
            bias: None,
        }
    }
}

/// Integrates every addressed ROM row into the array, then fires.
pub fn fixed_if_layer_step(
    neurons: &mut [FixedIfNeuron],
    addresses: impl IntoIterator<Item = usize>,
    rom: &WeightRom,
    threshold: i16,
) -> Result<SpikeWord> {
    if neurons.len() != rom.fan_out {
        return Err(Error::Dimension { expected: rom.fan_out, got: neurons.len() });
    }
    for a in addresses {
        for (n, &c) in neurons.iter_mut().zip(rom.read(a)?) {
            n.integrate(c);
        }
    }
    let mut out = SpikeWord::zeros(neurons.len());
    for (j, n) in neurons.iter_mut().enumerate() {
        if n.fire(threshold) {
            out.set(j, true);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robustness::HW_FORMAT;

    #[test]
    fn strict_threshold_across_steps() {
        let rom = WeightRom::from_codes(1, 1, HW_FORMAT, vec![64]).unwrap();
        let mut n = [FixedIfNeuron::default()];
        assert!(!fixed_if_layer_step(&mut n, [0], &rom, 64).unwrap().get(0));
        assert_eq!(n[0].acc, 64);
        assert!(fixed_if_layer_step(&mut n, [0], &rom, 64).unwrap().get(0));
        assert_eq!(n[0].acc, 0);
    }

    #[test]
    fn idle_step_changes_nothing() {
        let rom = WeightRom::from_codes(2, 1, HW_FORMAT, vec![64, 64]).unwrap();
        let mut n = [FixedIfNeuron { acc: 12, spiked: false }];
        assert!(fixed_if_layer_step(&mut n, [], &rom, 64).unwrap().is_zero());
        assert_eq!(n[0].acc, 12);
    }

    #[test]
    fn saturation_and_faults() {
        let rom = WeightRom::from_codes(1, 1, HW_FORMAT, vec![511]).unwrap();
        let mut n = [FixedIfNeuron { acc: i16::MAX, spiked: false }];
        fixed_if_layer_step(&mut n, [0], &rom, i16::MAX).unwrap();
        assert_eq!(n[0].acc, i16::MAX);
        assert!(matches!(fixed_if_layer_step(&mut n, [1], &rom, 64), Err(Error::Fault(_))));
    }

    #[test]
    fn rom_hex_layout() {
        // codes 1 and -1 in 10 bits: 0000000001 1111111111 -> padded to 20 bits.
        let rom = WeightRom::from_codes(1, 2, HW_FORMAT, vec![1, -1]).unwrap();
        assert_eq!(rom.to_hex(), "007ff\n");
        let wide = WeightRom::from_codes(50, 80, HW_FORMAT, vec![0; 4000]).unwrap();
        let hex = wide.to_hex();
        let lines: Vec<&str> = hex.lines().collect();
        assert_eq!(lines.len(), 50);
        assert!(lines.iter().all(|l| l.len() == 200));
    }
}
