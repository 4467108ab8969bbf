//! Operation counts and spike-energy estimates.
//!
//! Energies are exact decimals so that published per-spike figures multiply
//! out without binary rounding.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Per-spike energies of published spiking processors, in pJ.
pub const DEFAULT_ENERGY_CSV: &str = include_str!("../data/spike_energy.csv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyEntry {
    pub ref_id: String,
    pub pj_per_spike_min: Decimal,
    pub pj_per_spike_max: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyTable {
    pub entries: Vec<EnergyEntry>,
}

impl Default for EnergyTable {
    fn default() -> Self {
        Self::parse(DEFAULT_ENERGY_CSV).expect("bundled energy table parses")
    }
}

impl EnergyTable {
    /// CSV with header `ref_id,pj_per_spike_min,pj_per_spike_max`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["ref_id", "pj_per_spike_min", "pj_per_spike_max"] {
            return Err(Error::Parse(format!("unexpected energy table header {headers:?}")));
        }
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| {
                Decimal::from_str(&rec[i]).map_err(|e| Error::Parse(format!("energy value {:?}: {e}", &rec[i])))
            };
            let e = EnergyEntry { ref_id: rec[0].to_string(), pj_per_spike_min: num(1)?, pj_per_spike_max: num(2)? };
            if e.pj_per_spike_min <= Decimal::ZERO || e.pj_per_spike_max < e.pj_per_spike_min {
                return Err(Error::Parse(format!("energy row {} must satisfy 0 < min <= max", e.ref_id)));
            }
            entries.push(e);
        }
        if entries.is_empty() {
            return param("energy table has no rows");
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub ref_id: String,
    pub pj_per_spike_min: Decimal,
    pub pj_per_spike_max: Decimal,
    pub total_pj_min: Decimal,
    pub total_pj_max: Decimal,
}

impl EnergyRow {
    pub fn is_range(&self) -> bool {
        self.total_pj_min != self.total_pj_max
    }
}

/// `n_spk * E` for every table entry; range entries keep both ends.
pub fn energy_estimate(n_spk: u64, table: &EnergyTable) -> Vec<EnergyRow> {
    let n = Decimal::from(n_spk);
    table
        .entries
        .iter()
        .map(|e| EnergyRow {
            ref_id: e.ref_id.clone(),
            pj_per_spike_min: e.pj_per_spike_min,
            pj_per_spike_max: e.pj_per_spike_max,
            total_pj_min: (n * e.pj_per_spike_min).normalize(),
            total_pj_max: (n * e.pj_per_spike_max).normalize(),
        })
        .collect()
}

pub fn energy_csv(rows: &[EnergyRow]) -> String {
    let mut s = String::from("ref_id,pj_per_spike_min,pj_per_spike_max,total_pj_min,total_pj_max\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.ref_id, r.pj_per_spike_min, r.pj_per_spike_max, r.total_pj_min, r.total_pj_max
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub mac_count: u64,
    pub add_count: u64,
    /// Per weight layer: MACs for the ANN, adds for the SNN.
    pub mac_per_layer: Vec<u64>,
    pub add_per_layer: Vec<u64>,
}

/// Multiply-accumulates of one dense forward pass.
pub fn ann_mac_count(dims: &[usize]) -> u64 {
    dims.windows(2).map(|w| (w[0] * w[1]) as u64).sum()
}

/// Synaptic additions implied by per-layer spike totals: every spike of a
/// non-output layer adds into the whole next layer. `totals` may include or
/// omit the output layer.
pub fn snn_add_count(totals: &[u64], dims: &[usize]) -> Result<u64> {
    Ok(snn_adds_per_layer(totals, dims)?.iter().sum())
}

fn snn_adds_per_layer(totals: &[u64], dims: &[usize]) -> Result<Vec<u64>> {
    if dims.len() < 2 {
        return param("need at least two layers");
    }
    if totals.len() != dims.len() && totals.len() + 1 != dims.len() {
        return Err(Error::Dimension { expected: dims.len(), got: totals.len() });
    }
    Ok(totals.iter().zip(&dims[1..]).map(|(&t, &n)| t * n as u64).collect())
}

pub fn op_counts(totals: &[u64], dims: &[usize]) -> Result<OpCounts> {
    let add_per_layer = snn_adds_per_layer(totals, dims)?;
    let mac_per_layer: Vec<u64> = dims.windows(2).map(|w| (w[0] * w[1]) as u64).collect();
    Ok(OpCounts {
        mac_count: mac_per_layer.iter().sum(),
        add_count: add_per_layer.iter().sum(),
        mac_per_layer,
        add_per_layer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(ann_mac_count(&[50, 80, 2]), 4160);
        assert_eq!(ann_mac_count(&[2, 2]), 4);
        assert_eq!(ann_mac_count(&[5, 0, 3]), 0);
        assert_eq!(snn_add_count(&[343, 330], &[50, 80, 2]).unwrap(), 28100);
        assert_eq!(snn_add_count(&[343, 330, 31], &[50, 80, 2]).unwrap(), 28100);
        assert_eq!(snn_add_count(&[0, 0, 0], &[50, 80, 2]).unwrap(), 0);
        assert_eq!(snn_add_count(&[5000, 8000], &[50, 80, 2]).unwrap(), 416_000);
        assert!(snn_add_count(&[1], &[50, 80, 2]).is_err());
    }

    #[test]
    fn bundled_table() {
        let rows = energy_estimate(700, &EnergyTable::default());
        let got: Vec<(String, String, String)> =
            rows.iter().map(|r| (r.ref_id.clone(), r.total_pj_min.to_string(), r.total_pj_max.to_string())).collect();
        let want = [
            ("indiveri2003", "1995000", "1995000"),
            ("lee2004", "7630", "7630"),
            ("merolla2011", "31500", "31500"),
            ("cruz-albrecht2012", "280", "280"),
            ("wu2015", "6510", "6510"),
            ("sourikopoulos2017", "2.8", "2.8"),
            ("saxena2018", "9.8", "980"),
            ("shamsi2018", "3010", "3010"),
        ];
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert_eq!((g.0.as_str(), g.1.as_str(), g.2.as_str()), w);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(EnergyTable::parse("ref_id,pj_per_spike_min,pj_per_spike_max\nx,0,1\n").is_err());
        assert!(EnergyTable::parse("ref_id,pj_per_spike_min,pj_per_spike_max\nx,2,1\n").is_err());
        assert!(EnergyTable::parse("id,e\nx,1\n").is_err());
        assert!(EnergyTable::parse("ref_id,pj_per_spike_min,pj_per_spike_max\n").is_err());
    }
}
