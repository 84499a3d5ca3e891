//! Minimal FASTA reading and writing for chain sequences.

use std::path::Path;

use crate::error::{Error, Result};
use crate::netbuild::ChainSeq;

pub fn render_fasta(chains: &[ChainSeq]) -> String {
    let mut out = String::new();
    for c in chains {
        out.push('>');
        out.push_str(&c.id);
        out.push('\n');
        for chunk in c.sequence.as_bytes().chunks(60) {
            out.push_str(std::str::from_utf8(chunk).expect("ascii sequence"));
            out.push('\n');
        }
    }
    out
}

pub fn write_fasta(path: &Path, chains: &[ChainSeq]) -> Result<()> {
    std::fs::write(path, render_fasta(chains)).map_err(|e| Error::io(path, e))
}

pub fn parse_fasta(text: &str, path: &str) -> Result<Vec<ChainSeq>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    let mut chains: Vec<ChainSeq> = Vec::new();
    let mut current: Option<(usize, String, String)> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if let Some(rest) = line.strip_prefix('>') {
            if let Some((start, id, seq)) = current.take() {
                chains.push(ChainSeq::new(id, seq).map_err(|e| err(start, e.to_string()))?);
            }
            let id = rest.split_whitespace().next().unwrap_or("");
            if id.is_empty() {
                return Err(err(line_no, "record with empty id".into()));
            }
            current = Some((line_no, id.to_string(), String::new()));
        } else if !line.trim().is_empty() {
            match &mut current {
                Some((_, _, seq)) => seq.push_str(line.trim()),
                None => return Err(err(line_no, "sequence data before any > header".into())),
            }
        }
    }
    if let Some((start, id, seq)) = current {
        chains.push(ChainSeq::new(id, seq).map_err(|e| err(start, e.to_string()))?);
    }
    if chains.is_empty() {
        return Err(err(1, "no FASTA records found".into()));
    }
    let mut ids = std::collections::BTreeSet::new();
    for c in &chains {
        if !ids.insert(c.id.clone()) {
            return Err(err(1, format!("duplicate chain id {}", c.id)));
        }
    }
    Ok(chains)
}

pub fn read_fasta(path: &Path) -> Result<Vec<ChainSeq>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fasta(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_multi_record() {
        let chains = vec![
            ChainSeq::new("A", "ACDEFGHIKLMNPQRSTVWY").unwrap(),
            ChainSeq::new("c0001", &"CHED".repeat(40)).unwrap(),
        ];
        let text = render_fasta(&chains);
        let back = parse_fasta(&text, "t").unwrap();
        assert_eq!(back, chains);
    }

    #[test]
    fn parse_rejects_bad_records() {
        assert!(parse_fasta("ACDE\n", "t").is_err()); // data before header
        assert!(parse_fasta(">\nACDE\n", "t").is_err()); // empty id
        assert!(parse_fasta(">A\nACDX\n", "t").is_err()); // bad code
        assert!(parse_fasta(">A\nAC\n>A\nDE\n", "t").is_err()); // duplicate id
        assert!(parse_fasta("", "t").is_err());
    }
}
