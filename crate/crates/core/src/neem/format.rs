//! Newline-delimited JSON form of a NEEM: a header record, experience
//! records, narrative nodes, causal links and a closing footer record.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CausalLink, ExperienceRecord, NarrativeNode, Neem, NeemFooter, NeemHeader};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("record {record}: {message}")]
pub struct FormatError {
    /// 1-based line number of the offending record.
    pub record: usize,
    pub message: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum Line {
    Header(NeemHeader),
    Node(NarrativeNode),
    Link(CausalLink),
    Footer(NeemFooter),
    #[serde(untagged)]
    Experience(ExperienceRecord),
}

fn write_line(out: &mut String, line: &Line) {
    out.push_str(&serde_json::to_string(line).expect("NEEM records serialize"));
    out.push('\n');
}

pub fn export_neem(n: &Neem) -> String {
    let mut out = String::new();
    write_line(&mut out, &Line::Header(n.header.clone()));
    for r in &n.experience {
        write_line(&mut out, &Line::Experience(r.clone()));
    }
    for node in &n.narrative {
        write_line(&mut out, &Line::Node(node.clone()));
    }
    for l in &n.links {
        write_line(&mut out, &Line::Link(*l));
    }
    write_line(&mut out, &Line::Footer(n.footer.clone()));
    out
}

pub fn import_neem(text: &str) -> Result<Neem, FormatError> {
    let mut header = None;
    let mut footer = None;
    let mut experience = Vec::new();
    let mut narrative = Vec::new();
    let mut links = Vec::new();
    let mut count = 0;
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        let record = i + 1;
        count = record;
        let err = |message: String| FormatError { record, message };
        if !raw.ends_with('\n') {
            return Err(err("incomplete record".into()));
        }
        if footer.is_some() {
            return Err(err("record after footer".into()));
        }
        let line: Line = serde_json::from_str(raw.trim_end()).map_err(|e| err(e.to_string()))?;
        match (line, header.is_some()) {
            (Line::Header(h), false) => header = Some(h),
            (_, false) => return Err(err("expected header".into())),
            (Line::Header(_), true) => return Err(err("second header".into())),
            (Line::Experience(r), true) => experience.push(r),
            (Line::Node(n), true) => narrative.push(n),
            (Line::Link(l), true) => links.push(l),
            (Line::Footer(f), true) => footer = Some(f),
        }
    }
    let header = header.ok_or(FormatError { record: 1, message: "empty document".into() })?;
    let footer = footer.ok_or(FormatError { record: count + 1, message: "missing footer".into() })?;
    let neem = Neem { header, experience, narrative, links, footer };
    neem.check_links().map_err(|message| FormatError { record: count, message })?;
    Ok(neem)
}
