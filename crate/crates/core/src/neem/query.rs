//! Aggregate queries over stored episodes.
//!
//! `AGGREGATE [episodes|actions] [FIELD] [key=value ...]` where AGGREGATE is
//! one of `count`, `success-rate`, `mean`, `most-frequent`. The last two need
//! a FIELD. The table defaults to `actions`.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::{Annotation, Neem, NodeStatus};

pub type Row = BTreeMap<&'static str, String>;

pub const EPISODE_FIELDS: [&str; 8] = ["gm", "seed", "plan", "outcome", "kind", "repositions", "retries", "projections"];
pub const ACTION_FIELDS: [&str; 12] = [
    "type", "category", "object", "source", "destination", "arm", "grasp", "outcome", "kind", "gm", "ring", "heading",
];

fn kind_of(s: NodeStatus) -> String {
    match s {
        NodeStatus::Failed(k) => k.as_str().to_string(),
        _ => "none".to_string(),
    }
}

pub fn episode_rows(neems: &[Neem]) -> Vec<Row> {
    neems
        .iter()
        .map(|n| {
            let f = &n.footer;
            Row::from([
                ("gm", n.header.gm.clone()),
                ("seed", n.header.seed.to_string()),
                ("plan", n.header.plan.clone()),
                ("outcome", f.outcome.outcome().to_string()),
                ("kind", kind_of(f.outcome)),
                ("repositions", f.repositions.to_string()),
                ("retries", f.retries.to_string()),
                ("projections", f.projections.to_string()),
            ])
        })
        .collect()
}

/// One row per recorded pick or place trial.
pub fn action_rows(neems: &[Neem]) -> Vec<Row> {
    let mut out = Vec::new();
    for n in neems {
        for node in &n.narrative {
            for a in &node.annotations {
                let Annotation::Trial(t) = a else { continue };
                out.push(Row::from([
                    ("type", t.action.clone()),
                    ("category", t.context.category.clone()),
                    ("object", t.object.clone()),
                    ("source", t.context.source.clone()),
                    ("destination", t.context.destination.clone()),
                    ("arm", t.combo.arm.as_str().to_string()),
                    ("grasp", t.combo.grasp.map_or("none", |g| g.as_str()).to_string()),
                    ("outcome", node.status.outcome().to_string()),
                    ("kind", kind_of(node.status)),
                    ("gm", n.header.gm.clone()),
                    ("ring", t.combo.ring.to_string()),
                    ("heading", t.combo.heading.to_string()),
                ]));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("empty query")]
    Empty,
    #[error("unknown aggregate `{0}`")]
    UnknownAggregate(String),
    #[error("unknown field `{field}` for table {table}")]
    UnknownField { table: &'static str, field: String },
    #[error("aggregate `{0}` needs a field")]
    MissingField(String),
    #[error("malformed filter `{0}`, expected key=value")]
    BadFilter(String),
    #[error("field `{field}` has non-numeric value `{value}`")]
    NotNumeric { field: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Aggregate {
    Count,
    SuccessRate,
    Mean(&'static str),
    MostFrequent(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Episodes,
    Actions,
}

impl Table {
    fn name(self) -> &'static str {
        match self {
            Table::Episodes => "episodes",
            Table::Actions => "actions",
        }
    }

    fn fields(self) -> &'static [&'static str] {
        match self {
            Table::Episodes => &EPISODE_FIELDS,
            Table::Actions => &ACTION_FIELDS,
        }
    }

    fn field(self, name: &str) -> Result<&'static str, QueryError> {
        self.fields()
            .iter()
            .copied()
            .find(|f| *f == name)
            .ok_or_else(|| QueryError::UnknownField { table: self.name(), field: name.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeemQuery {
    pub aggregate: Aggregate,
    pub table: Table,
    pub filters: Vec<(&'static str, String)>,
}

impl NeemQuery {
    pub fn parse(text: &str) -> Result<Self, QueryError> {
        let mut toks = text.split_whitespace().peekable();
        let agg = toks.next().ok_or(QueryError::Empty)?;
        let table = match toks.peek() {
            Some(&"episodes") => {
                toks.next();
                Table::Episodes
            }
            Some(&"actions") => {
                toks.next();
                Table::Actions
            }
            _ => Table::Actions,
        };
        let mut field = || match toks.next_if(|t| !t.contains('=')) {
            Some(f) => table.field(f),
            None => Err(QueryError::MissingField(agg.to_string())),
        };
        let aggregate = match agg {
            "count" => Aggregate::Count,
            "success-rate" => Aggregate::SuccessRate,
            "mean" => Aggregate::Mean(field()?),
            "most-frequent" => Aggregate::MostFrequent(field()?),
            other => return Err(QueryError::UnknownAggregate(other.to_string())),
        };
        let filters = toks
            .map(|t| {
                let (k, v) = t.split_once('=').ok_or_else(|| QueryError::BadFilter(t.to_string()))?;
                Ok((table.field(k)?, v.to_string()))
            })
            .collect::<Result<_, QueryError>>()?;
        Ok(NeemQuery { aggregate, table, filters })
    }
}

/// Aggregate value; `None` when the filtered set is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum QueryResult {
    Count(usize),
    Rate(Option<f64>),
    Mean(Option<f64>),
    Mode(Option<String>),
}

pub const UNDEFINED: &str = "undefined";

impl fmt::Display for QueryResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryResult::Count(n) => write!(f, "{n}"),
            QueryResult::Rate(Some(x)) | QueryResult::Mean(Some(x)) => write!(f, "{x:.4}"),
            QueryResult::Mode(Some(s)) => f.write_str(s),
            _ => f.write_str(UNDEFINED),
        }
    }
}

pub fn query_neems(neems: &[Neem], q: &NeemQuery) -> Result<QueryResult, QueryError> {
    let rows = match q.table {
        Table::Episodes => episode_rows(neems),
        Table::Actions => action_rows(neems),
    };
    let rows: Vec<Row> =
        rows.into_iter().filter(|r| q.filters.iter().all(|(k, v)| r.get(k).is_some_and(|x| x.eq_ignore_ascii_case(v)))).collect();
    Ok(match q.aggregate {
        Aggregate::Count => QueryResult::Count(rows.len()),
        Aggregate::SuccessRate => QueryResult::Rate((!rows.is_empty()).then(|| {
            rows.iter().filter(|r| r["outcome"] == "succeeded").count() as f64 / rows.len() as f64
        })),
        Aggregate::Mean(field) => {
            let mut sum = 0.0;
            for r in &rows {
                let v = &r[field];
                sum += v
                    .parse::<f64>()
                    .map_err(|_| QueryError::NotNumeric { field: field.to_string(), value: v.clone() })?;
            }
            QueryResult::Mean((!rows.is_empty()).then(|| sum / rows.len() as f64))
        }
        Aggregate::MostFrequent(field) => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for r in &rows {
                *counts.entry(r[field].as_str()).or_default() += 1;
            }
            // Ties go to the lexicographically smallest value.
            let best = counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)));
            QueryResult::Mode(best.map(|(v, _)| v.to_string()))
        }
    })
}
