//! Prediction report format: a header, one line per covered residue
//! `chain<TAB>index<TAB>aa<TAB>p_binding<TAB>call<TAB>metal<TAB>p_metal`,
//! the residues with no co-evolution evidence, and a network listing.
//! Rendering is byte-deterministic.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::ResiduePrediction;
use crate::pipeline::{MetalType, NetworkSummary, PredictionReport};

fn render_network_line(idx: usize, net: &NetworkSummary) -> String {
    let nodes = net
        .residue_indices
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let edges = if net.edges.is_empty() {
        "-".to_string()
    } else {
        net.edges
            .iter()
            .map(|(a, b)| format!("{a}-{b}"))
            .collect::<Vec<_>>()
            .join(";")
    };
    format!("{idx}\tnodes={nodes}\tedges={edges}\n")
}

pub fn render_report(report: &PredictionReport) -> String {
    let mut out = format!(
        "#mbgnn-report v1 chain={} length={}\n",
        report.chain_id, report.chain_len
    );
    if let Some(reason) = &report.no_network_reason {
        out.push_str(&format!("#reason {reason}\n"));
    }
    let types: BTreeMap<usize, (&[f64; MetalType::COUNT], MetalType)> = report
        .type_calls
        .iter()
        .map(|t| (t.residue.index, (&t.probs, t.metal)))
        .collect();
    out.push_str(&format!("#calls {}\n", report.binding_calls.len()));
    for call in &report.binding_calls {
        let (metal, p_metal) = match types.get(&call.residue.index) {
            Some((probs, metal)) => (
                metal.name().to_string(),
                format!("{:.6}", probs[metal.id() as usize]),
            ),
            None => ("-".to_string(), "-".to_string()),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\n",
            call.residue.chain_id,
            call.residue.index,
            call.residue.amino_acid,
            call.prob_binding,
            call.call as u8,
            metal,
            p_metal
        ));
    }
    out.push_str(&format!(
        "#no-coevolution-evidence {}\n",
        report.uncovered_ched.len()
    ));
    for r in &report.uncovered_ched {
        out.push_str(&format!("{}\t{}\t{}\n", r.chain_id, r.index, r.amino_acid));
    }
    out.push_str(&format!("#networks-stage1 {}\n", report.stage1.len()));
    for (i, net) in report.stage1.iter().enumerate() {
        out.push_str(&render_network_line(i, net));
    }
    out.push_str(&format!("#networks-stage2 {}\n", report.stage2.len()));
    for (i, net) in report.stage2.iter().enumerate() {
        out.push_str(&render_network_line(i, net));
    }
    out.push_str("#end\n");
    out
}

pub fn write_report(path: &Path, report: &PredictionReport) -> Result<()> {
    std::fs::write(path, render_report(report)).map_err(|e| Error::io(path, e))
}

/// The call lines of a report, as needed for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedReport {
    pub chain_id: String,
    pub predictions: Vec<ResiduePrediction>,
}

pub fn parse_report(text: &str, path: &str) -> Result<ParsedReport> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty report".into()))?;
    let rest = header
        .strip_prefix("#mbgnn-report v1 chain=")
        .ok_or_else(|| err(1, format!("bad header {header:?}")))?;
    let (chain_id, _) = rest
        .split_once(" length=")
        .ok_or_else(|| err(1, format!("bad header {header:?}")))?;

    let mut predictions = Vec::new();
    let mut in_calls = false;
    for (i, line) in lines {
        let line_no = i + 1;
        if let Some(n) = line.strip_prefix("#calls ") {
            n.parse::<usize>()
                .map_err(|_| err(line_no, format!("bad call count {n:?}")))?;
            in_calls = true;
            continue;
        }
        if line.starts_with('#') {
            in_calls = false;
            continue;
        }
        if !in_calls || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(err(line_no, format!("expected 7 fields, got {}", fields.len())));
        }
        let index: usize = fields[1]
            .parse()
            .map_err(|_| err(line_no, format!("bad index {:?}", fields[1])))?;
        let p_binding: f64 = fields[3]
            .parse()
            .map_err(|_| err(line_no, format!("bad probability {:?}", fields[3])))?;
        if !(0.0..=1.0).contains(&p_binding) {
            return Err(err(line_no, format!("probability {p_binding} outside [0,1]")));
        }
        let call = match fields[4] {
            "0" => false,
            "1" => true,
            other => return Err(err(line_no, format!("bad call flag {other:?}"))),
        };
        let metal = match fields[5] {
            "-" => None,
            name => Some(
                MetalType::from_name(name)
                    .map_err(|e| err(line_no, e.to_string()))?
                    .id(),
            ),
        };
        if call && metal.is_none() {
            return Err(err(line_no, "positive call without a metal".into()));
        }
        predictions.push(ResiduePrediction {
            chain_id: fields[0].to_string(),
            index,
            call,
            metal,
        });
    }
    Ok(ParsedReport {
        chain_id: chain_id.to_string(),
        predictions,
    })
}

pub fn read_report(path: &Path) -> Result<ParsedReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report(&text, &path.display().to_string())
}
