//! Label file format: one `chain<TAB>index<TAB>binding<TAB>metal` line per
//! residue, where binding is 0 or 1 and metal is a type id 0-10 for binders
//! or `-` otherwise.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::MetalType;

/// Truth annotation of one residue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelRecord {
    pub chain_id: String,
    pub index: usize,
    pub binding: bool,
    pub metal: Option<u8>,
}

/// All labels of a dataset with a by-residue lookup.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelTable {
    pub records: Vec<LabelRecord>,
}

impl LabelTable {
    pub fn new(records: Vec<LabelRecord>) -> Result<Self> {
        let table = LabelTable { records };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for r in &self.records {
            if !seen.insert((r.chain_id.clone(), r.index)) {
                return Err(Error::Input(format!(
                    "duplicate label for chain {} residue {}",
                    r.chain_id, r.index
                )));
            }
            match (r.binding, r.metal) {
                (true, Some(id)) if (id as usize) < MetalType::COUNT => {}
                (false, None) => {}
                (true, Some(id)) => {
                    return Err(Error::Input(format!("metal id {id} out of range 0-10")))
                }
                (true, None) => {
                    return Err(Error::Input(format!(
                        "binding residue {}:{} lacks a metal id",
                        r.chain_id, r.index
                    )))
                }
                (false, Some(_)) => {
                    return Err(Error::Input(format!(
                        "non-binding residue {}:{} carries a metal id",
                        r.chain_id, r.index
                    )))
                }
            }
        }
        Ok(())
    }

    /// (chain, index) -> record lookup.
    pub fn by_residue(&self) -> BTreeMap<(&str, usize), &LabelRecord> {
        self.records
            .iter()
            .map(|r| ((r.chain_id.as_str(), r.index), r))
            .collect()
    }
}

/// Canonical rendering: records sorted by (chain, index).
pub fn render_labels(table: &LabelTable) -> String {
    let mut records: Vec<&LabelRecord> = table.records.iter().collect();
    records.sort_by(|a, b| (&a.chain_id, a.index).cmp(&(&b.chain_id, b.index)));
    let mut out = String::new();
    for r in records {
        let metal = match r.metal {
            Some(id) => id.to_string(),
            None => "-".to_string(),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.chain_id, r.index, r.binding as u8, metal
        ));
    }
    out
}

pub fn write_labels(path: &Path, table: &LabelTable) -> Result<()> {
    std::fs::write(path, render_labels(table)).map_err(|e| Error::io(path, e))
}

pub fn parse_labels(text: &str, path: &str) -> Result<LabelTable> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(
                line_no,
                format!("expected chain<TAB>index<TAB>binding<TAB>metal, got {line:?}"),
            ));
        }
        let index: usize = fields[1]
            .parse()
            .map_err(|_| err(line_no, format!("bad index {:?}", fields[1])))?;
        let binding = match fields[2] {
            "0" => false,
            "1" => true,
            other => return Err(err(line_no, format!("bad binding flag {other:?}"))),
        };
        let metal = match fields[3] {
            "-" => None,
            id => Some(
                id.parse::<u8>()
                    .map_err(|_| err(line_no, format!("bad metal id {id:?}")))?,
            ),
        };
        records.push(LabelRecord {
            chain_id: fields[0].to_string(),
            index,
            binding,
            metal,
        });
    }
    LabelTable::new(records).map_err(|e| err(0, e.to_string()))
}

pub fn read_labels(path: &Path) -> Result<LabelTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, &path.display().to_string())
}
