//! JSON storage for analysis and synthesis banks.
//!
//! ```json
//! {"type": "analysis", "M": 16, "N": 8, "k": 2,
//!  "filters": [[[re, im], ...], ...]}
//! {"type": "synthesis", "M": 16, "N": 8, "p1": 1, "p2": 0,
//!  "filters": [[[re, im], ...], ...], "metadata": {...}}
//! ```
//!
//! Analysis filters hold `kN` taps starting at time 0. Synthesis filters hold
//! `pN` taps starting at `-p1 N - N + 1`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{AnalysisBank, ImpulseResponses, SynthesisBank};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BankFile {
    Analysis {
        #[serde(rename = "M")]
        m: usize,
        #[serde(rename = "N")]
        n: usize,
        k: usize,
        filters: Vec<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        metadata: Option<serde_json::Value>,
    },
    Synthesis {
        #[serde(rename = "M")]
        m: usize,
        #[serde(rename = "N")]
        n: usize,
        p1: usize,
        p2: usize,
        filters: Vec<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        metadata: Option<serde_json::Value>,
    },
}

/// A bank read from disk.
#[derive(Clone, Debug)]
pub enum Bank {
    Analysis(AnalysisBank),
    Synthesis(SynthesisBank),
}

fn to_pairs(taps: &[Complex64]) -> Vec<[f64; 2]> {
    taps.iter().map(|v| [v.re, v.im]).collect()
}

fn from_pairs(filters: &[Vec<[f64; 2]>]) -> Vec<Vec<Complex64>> {
    filters
        .iter()
        .map(|f| f.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
        .collect()
}

impl BankFile {
    pub fn from_analysis(bank: &AnalysisBank, metadata: Option<serde_json::Value>) -> Self {
        BankFile::Analysis {
            m: bank.m(),
            n: bank.n(),
            k: bank.k(),
            filters: bank.filters().iter().map(|f| to_pairs(f)).collect(),
            metadata,
        }
    }

    pub fn from_synthesis(bank: &SynthesisBank, metadata: Option<serde_json::Value>) -> Self {
        BankFile::Synthesis {
            m: bank.m(),
            n: bank.n(),
            p1: bank.p1(),
            p2: bank.p2(),
            filters: (0..bank.m()).map(|j| to_pairs(&bank.impulse(j))).collect(),
            metadata,
        }
    }

    pub fn metadata(&self) -> Option<&serde_json::Value> {
        match self {
            BankFile::Analysis { metadata, .. } | BankFile::Synthesis { metadata, .. } => metadata.as_ref(),
        }
    }

    pub fn into_bank(self) -> Result<Bank> {
        match self {
            BankFile::Analysis { m, n, k, filters, .. } => {
                if filters.len() != m {
                    return Err(Error::InvalidBank(format!("expected {m} filters, found {}", filters.len())));
                }
                Ok(Bank::Analysis(AnalysisBank::new(m, n, k, from_pairs(&filters))?))
            }
            BankFile::Synthesis { m, n, p1, p2, filters, .. } => Ok(Bank::Synthesis(SynthesisBank::from_impulses(
                n,
                m,
                p1,
                p2,
                &from_pairs(&filters),
            )?)),
        }
    }
}

pub fn read_bank_file(path: &Path) -> Result<BankFile> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_bank_file(path: &Path, file: &BankFile) -> Result<()> {
    let text = serde_json::to_string_pretty(file)?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_bank(path: &Path) -> Result<Bank> {
    read_bank_file(path)?.into_bank()
}

pub fn load_analysis(path: &Path) -> Result<AnalysisBank> {
    match load_bank(path)? {
        Bank::Analysis(b) => Ok(b),
        Bank::Synthesis(_) => Err(Error::InvalidBank(format!("{} holds a synthesis bank", path.display()))),
    }
}

pub fn load_synthesis(path: &Path) -> Result<SynthesisBank> {
    match load_bank(path)? {
        Bank::Synthesis(b) => Ok(b),
        Bank::Analysis(_) => Err(Error::InvalidBank(format!("{} holds an analysis bank", path.display()))),
    }
}

pub fn save_analysis(path: &Path, bank: &AnalysisBank, metadata: Option<serde_json::Value>) -> Result<()> {
    write_bank_file(path, &BankFile::from_analysis(bank, metadata))
}

pub fn save_synthesis(path: &Path, bank: &SynthesisBank, metadata: Option<serde_json::Value>) -> Result<()> {
    write_bank_file(path, &BankFile::from_synthesis(bank, metadata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank_gen::{mclt, Window};

    #[test]
    fn analysis_json_roundtrip() {
        let bank = mclt(4, 2, 2.0, &Window::Sine).unwrap();
        let file = BankFile::from_analysis(&bank, None);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"type\":\"analysis\""));
        assert!(text.contains("\"M\":8"));
        let back: BankFile = serde_json::from_str(&text).unwrap();
        match back.into_bank().unwrap() {
            Bank::Analysis(b) => assert_eq!(b, bank),
            Bank::Synthesis(_) => panic!("wrong kind"),
        }
    }

    #[test]
    fn wrong_tap_count_is_rejected() {
        let text = r#"{"type":"analysis","M":3,"N":1,"k":2,"filters":[[[1,0],[0,0]],[[1,0]],[[0,0],[1,0]]]}"#;
        let file: BankFile = serde_json::from_str(text).unwrap();
        assert!(file.into_bank().is_err());
    }
}
