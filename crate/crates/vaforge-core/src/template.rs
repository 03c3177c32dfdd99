//! Rendering closed question responses as natural-language sentences.
//!
//! Data-level fusion turns each record's structured responses into short
//! sentences and appends them to the narrative, so a single text model sees
//! both modalities. Which sentence a response produces is driven entirely by
//! a user-supplied template table; a starter table covering a handful of
//! common indicators ships with the crate.
//!
//! One special case is built in: the paired sex indicators (`i019a` "was he
//! male", `i019b` "was she female") render a single sentence chosen from
//! whichever is affirmed, instead of two independent sentences.

use crate::data::{Response, VARecord};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// The paired sex indicators handled by a joint rule.
const SEX_MALE: &str = "i019a";
const SEX_FEMALE: &str = "i019b";

/// Separator between the narrative and the rendered sentences.
pub const FUSION_SEPARATOR: &str = "\n";

/// Sentence templates for one indicator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub indicator: String,
    /// Sentence emitted for a Yes response.
    pub yes_text: String,
    /// Sentence emitted for a No response; None renders nothing on No.
    pub no_text: Option<String>,
    /// Responses that render no sentence, checked before anything else.
    pub skip_on: BTreeSet<Response>,
}

/// The default skipped responses: unanswered or uncertain.
pub fn default_skip_on() -> BTreeSet<Response> {
    [Response::Missing, Response::DontKnow].into_iter().collect()
}

impl QuestionTemplate {
    /// Builds a template, validating that sentences are nonempty and end
    /// with a period.
    pub fn new(
        indicator: impl Into<String>,
        yes_text: impl Into<String>,
        no_text: Option<String>,
        skip_on: BTreeSet<Response>,
    ) -> Result<Self> {
        let indicator = indicator.into();
        let yes_text = yes_text.into();
        for (field, text) in [("yes_text", Some(&yes_text)), ("no_text", no_text.as_ref())] {
            if let Some(text) = text {
                if text.is_empty() {
                    return Err(Error::Schema(format!(
                        "template {indicator:?}: {field} must not be empty"
                    )));
                }
                if !text.ends_with('.') {
                    return Err(Error::Schema(format!(
                        "template {indicator:?}: {field} must end with a period"
                    )));
                }
            }
        }
        Ok(QuestionTemplate {
            indicator,
            yes_text,
            no_text,
            skip_on,
        })
    }
}

/// An ordered collection of question templates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateTable {
    templates: BTreeMap<String, QuestionTemplate>,
    render_order: Vec<String>,
}

impl TemplateTable {
    /// Builds a table from templates; render order is the given order.
    pub fn new(templates: Vec<QuestionTemplate>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut render_order = Vec::with_capacity(templates.len());
        for t in templates {
            if map.contains_key(&t.indicator) {
                return Err(Error::Schema(format!(
                    "duplicate template for indicator {:?}",
                    t.indicator
                )));
            }
            render_order.push(t.indicator.clone());
            map.insert(t.indicator.clone(), t);
        }
        Ok(TemplateTable {
            templates: map,
            render_order,
        })
    }

    /// The bundled starter table.
    pub fn starter() -> Self {
        Self::from_csv_str(include_str!("../data/templates_starter.csv"))
            .expect("bundled starter table is valid")
    }

    /// Indicators in render order.
    pub fn render_order(&self) -> &[String] {
        &self.render_order
    }

    /// The template for an indicator, if present.
    pub fn get(&self, indicator: &str) -> Option<&QuestionTemplate> {
        self.templates.get(indicator)
    }

    /// Parses a table from CSV text with columns
    /// `indicator,yes_text,no_text,skip_on`.
    ///
    /// `no_text` may be empty (renders nothing on No). `skip_on` is a
    /// semicolon-separated list of `yes`/`no`/`dont_know`/`missing`; empty
    /// means the default skip set (missing and don't-know).
    pub fn from_csv_str(raw: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(raw.as_bytes());
        let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        for required in ["indicator", "yes_text", "no_text", "skip_on"] {
            if !headers.iter().any(|h| h == required) {
                return Err(Error::Schema(format!(
                    "template csv is missing required column {required:?}"
                )));
            }
        }
        let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
        let (c_ind, c_yes, c_no, c_skip) = (
            col("indicator"),
            col("yes_text"),
            col("no_text"),
            col("skip_on"),
        );
        let mut templates = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let line_no = i + 2;
            let row = row.map_err(|e| Error::parse(line_no, e.to_string()))?;
            let get = |c: usize| row.get(c).unwrap_or("").trim().to_string();
            let no_text = Some(get(c_no)).filter(|s| !s.is_empty());
            let skip_raw = get(c_skip);
            let skip_on = if skip_raw.is_empty() {
                default_skip_on()
            } else {
                let mut set = BTreeSet::new();
                for token in skip_raw.split(';') {
                    let resp = match token.trim() {
                        "yes" => Response::Yes,
                        "no" => Response::No,
                        "dont_know" => Response::DontKnow,
                        "missing" => Response::Missing,
                        other => {
                            return Err(Error::parse(
                                line_no,
                                format!("unknown skip_on response {other:?}"),
                            ))
                        }
                    };
                    set.insert(resp);
                }
                set
            };
            templates.push(
                QuestionTemplate::new(get(c_ind), get(c_yes), no_text, skip_on)
                    .map_err(|e| Error::parse(line_no, e.to_string()))?,
            );
        }
        TemplateTable::new(templates)
    }

    /// Loads a table from a CSV file.
    pub fn from_csv_file(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    /// Writes the table as CSV in render order.
    pub fn to_csv_file(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["indicator", "yes_text", "no_text", "skip_on"])?;
        for id in &self.render_order {
            let t = &self.templates[id];
            let skip: Vec<&str> = t
                .skip_on
                .iter()
                .map(|r| match r {
                    Response::Yes => "yes",
                    Response::No => "no",
                    Response::DontKnow => "dont_know",
                    Response::Missing => "missing",
                })
                .collect();
            writer.write_record([
                t.indicator.as_str(),
                t.yes_text.as_str(),
                t.no_text.as_deref().unwrap_or(""),
                &skip.join(";"),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Renders the sentence for one response, or None if the response produces
/// no sentence (skipped responses, or No without a negative sentence).
pub fn render_question(
    indicator: &str,
    response: Response,
    table: &TemplateTable,
) -> Result<Option<String>> {
    let template = table
        .get(indicator)
        .ok_or_else(|| Error::UnknownIndicator(indicator.to_string()))?;
    if template.skip_on.contains(&response) {
        return Ok(None);
    }
    Ok(match response {
        Response::Yes => Some(template.yes_text.clone()),
        Response::No => template.no_text.clone(),
        Response::DontKnow | Response::Missing => None,
    })
}

/// The record's response to an indicator; absent entries count as Missing.
fn response_of(rec: &VARecord, indicator: &str) -> Response {
    rec.questions
        .get(indicator)
        .copied()
        .unwrap_or(Response::Missing)
}

/// Renders all of a record's responses in table order and appends them to
/// the narrative, separated by a single newline.
///
/// Output depends only on the record's responses and the table — never on
/// map iteration order. When the table contains both sex indicators, they
/// produce at most one sentence at the position of whichever comes first in
/// render order: the female sentence if `i019b` is Yes, otherwise the male
/// sentence if `i019a` is Yes, otherwise nothing.
pub fn build_fused_document(rec: &VARecord, table: &TemplateTable) -> String {
    let sex_pair_active =
        table.get(SEX_MALE).is_some() && table.get(SEX_FEMALE).is_some();
    let mut sentences: Vec<String> = Vec::new();
    let mut sex_done = false;
    for indicator in table.render_order() {
        if sex_pair_active && (indicator == SEX_MALE || indicator == SEX_FEMALE) {
            if sex_done {
                continue;
            }
            sex_done = true;
            let female = response_of(rec, SEX_FEMALE);
            let male = response_of(rec, SEX_MALE);
            if female == Response::Yes {
                if let Ok(Some(s)) = render_question(SEX_FEMALE, female, table) {
                    sentences.push(s);
                }
            } else if male == Response::Yes {
                if let Ok(Some(s)) = render_question(SEX_MALE, male, table) {
                    sentences.push(s);
                }
            }
            continue;
        }
        let response = response_of(rec, indicator);
        if let Ok(Some(s)) = render_question(indicator, response, table) {
            sentences.push(s);
        }
    }
    format!("{}{FUSION_SEPARATOR}{}", rec.narrative, sentences.join(" "))
}
