//! Contact-map text format: `#contacts v1 chain=<id> length=<L>` header, then
//! one `a<TAB>b<TAB>score` line per contact with 0-based indices a < b.

use std::path::Path;

use crate::error::{Error, Result};
use crate::netbuild::ContactRecord;

/// A chain's contact map as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactFile {
    pub chain_id: String,
    pub length: usize,
    pub records: Vec<ContactRecord>,
}

/// Canonical text rendering: records sorted by (a, b).
pub fn render_contacts(file: &ContactFile) -> String {
    let mut records = file.records.clone();
    records.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
    let mut out = format!(
        "#contacts v1 chain={} length={}\n",
        file.chain_id, file.length
    );
    for r in &records {
        out.push_str(&format!("{}\t{}\t{}\n", r.a, r.b, r.score));
    }
    out
}

pub fn write_contacts(path: &Path, file: &ContactFile) -> Result<()> {
    std::fs::write(path, render_contacts(file)).map_err(|e| Error::io(path, e))
}

/// Parses and fully validates contact-map text; `path` tags error messages.
pub fn parse_contacts(text: &str, path: &str) -> Result<ContactFile> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty contact file".into()))?;
    let rest = header
        .strip_prefix("#contacts v1 chain=")
        .ok_or_else(|| err(1, format!("bad header {header:?}")))?;
    let (chain_id, length) = rest
        .split_once(" length=")
        .ok_or_else(|| err(1, format!("bad header {header:?}")))?;
    if chain_id.is_empty() {
        return Err(err(1, "empty chain id".into()));
    }
    let length: usize = length
        .parse()
        .map_err(|_| err(1, format!("bad length {length:?}")))?;

    let mut records = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (a, b, score) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), Some(s), None) => (a, b, s),
            _ => return Err(err(line_no, format!("expected a<TAB>b<TAB>score, got {line:?}"))),
        };
        let a: usize = a
            .parse()
            .map_err(|_| err(line_no, format!("bad index {a:?}")))?;
        let b: usize = b
            .parse()
            .map_err(|_| err(line_no, format!("bad index {b:?}")))?;
        let score: f64 = score
            .parse()
            .map_err(|_| err(line_no, format!("bad score {score:?}")))?;
        if a >= b {
            return Err(err(line_no, format!("indices must satisfy a < b, got {a} >= {b}")));
        }
        if b >= length {
            return Err(err(
                line_no,
                format!("index {b} out of range for chain length {length}"),
            ));
        }
        if !seen.insert((a, b)) {
            return Err(err(line_no, format!("duplicate contact ({a},{b})")));
        }
        let record = ContactRecord::new(a, b, score)
            .map_err(|e| err(line_no, e.to_string()))?;
        records.push(record);
    }
    Ok(ContactFile {
        chain_id: chain_id.to_string(),
        length,
        records,
    })
}

pub fn read_contacts(path: &Path) -> Result<ContactFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_contacts(&text, &path.display().to_string())
}
