//! Reading and writing datasets and taxonomies.
//!
//! Two dataset encodings are supported: JSONL (one record object per line
//! with a nested `questions` map) and flat CSV (question columns named like
//! `i019a`, values `Y`/`N`/`DK`/empty). Writers exist for both so round
//! trips can be checked and synthetic corpora exported.

use super::{
    AgeGroup, CauseTaxonomy, Dataset, Icd10Mapping, Level, Response, VARecord,
};
use crate::error::{Error, Result};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Dataset file encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Jsonl,
    Csv,
}

impl DatasetFormat {
    /// Guesses the format from a file extension; defaults to JSONL.
    pub fn from_path(path: &Path) -> DatasetFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

/// Returns true for column names of the form `i<digits><optional letter>`,
/// the naming scheme for closed question indicators.
pub fn is_question_column(name: &str) -> bool {
    let mut chars = name.chars();
    if chars.next() != Some('i') {
        return false;
    }
    let rest: Vec<char> = chars.collect();
    if rest.is_empty() {
        return false;
    }
    let (digits, suffix) = match rest.iter().position(|c| !c.is_ascii_digit()) {
        None => (&rest[..], &[][..]),
        Some(0) => return false,
        Some(p) => (&rest[..p], &rest[p..]),
    };
    debug_assert!(!digits.is_empty());
    match suffix {
        [] => true,
        [c] => c.is_ascii_lowercase(),
        _ => false,
    }
}

/// Loads a dataset, validating every record against the taxonomy.
///
/// Records with an ICD-10 code but missing category labels are completed
/// from the taxonomy's mapping before validation. Any malformed row fails
/// the load with its line number; nothing is silently dropped.
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    taxonomy: &CauseTaxonomy,
    level: Level,
) -> Result<Dataset> {
    let mut records = match format {
        DatasetFormat::Jsonl => read_jsonl_records(path)?,
        DatasetFormat::Csv => read_csv_records(path)?,
    };
    for rec in &mut records {
        rec.backfill_labels(taxonomy);
    }
    Dataset::new(records, taxonomy.clone(), level)
}

/// Permissive JSONL row; field presence is checked explicitly so missing
/// fields surface as schema errors rather than opaque parse failures.
#[derive(Debug, Deserialize)]
struct JsonlRow {
    id: Option<String>,
    #[serde(default)]
    age_group: Option<AgeGroup>,
    #[serde(default)]
    narrative: Option<String>,
    #[serde(default)]
    questions: Option<BTreeMap<String, Response>>,
    #[serde(default)]
    cause_icd10: Option<String>,
    #[serde(default)]
    cause_level1: Option<String>,
    #[serde(default)]
    cause_level2: Option<String>,
    #[serde(default)]
    cause_level3: Option<String>,
    #[serde(default)]
    sufficiency_score: Option<u8>,
}

fn read_jsonl_records(path: &Path) -> Result<Vec<VARecord>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow = serde_json::from_str(&line)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        let id = row
            .id
            .ok_or_else(|| Error::Schema(format!("line {line_no}: missing required field \"id\"")))?;
        records.push(VARecord {
            id,
            age_group: row.age_group.unwrap_or(AgeGroup::Adult),
            narrative: row.narrative.unwrap_or_default(),
            questions: row.questions.unwrap_or_default(),
            cause_icd10: row.cause_icd10,
            cause_level1: row.cause_level1,
            cause_level2: row.cause_level2,
            cause_level3: row.cause_level3,
            sufficiency_score: row.sufficiency_score,
        });
    }
    Ok(records)
}

/// Writes a dataset as JSONL, one record per line in record order.
pub fn write_dataset_jsonl(ds: &Dataset, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for rec in ds.records() {
        serde_json::to_writer(&mut file, rec)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

fn parse_csv_response(raw: &str, line: usize, column: &str) -> Result<Option<Response>> {
    match raw.trim() {
        "" => Ok(Some(Response::Missing)),
        "Y" | "y" => Ok(Some(Response::Yes)),
        "N" | "n" => Ok(Some(Response::No)),
        "DK" | "dk" => Ok(Some(Response::DontKnow)),
        other => Err(Error::parse(
            line,
            format!("column {column:?}: unknown response {other:?} (expected Y, N, DK, or empty)"),
        )),
    }
}

fn read_csv_records(path: &Path) -> Result<Vec<VARecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let id_col = find("id")
        .ok_or_else(|| Error::Schema("csv is missing required column \"id\"".into()))?;
    let narrative_col = find("narrative")
        .ok_or_else(|| Error::Schema("csv is missing required column \"narrative\"".into()))?;
    let age_col = find("age_group");
    let icd_col = find("cause_icd10");
    let l1_col = find("cause_level1");
    let l2_col = find("cause_level2");
    let l3_col = find("cause_level3");
    let suff_col = find("sufficiency_score");
    let question_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| is_question_column(h))
        .map(|(i, h)| (i, h.clone()))
        .collect();

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        // Header occupies line 1.
        let line_no = i + 2;
        let row = row.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let field = |col: usize| row.get(col).unwrap_or("").trim();
        let opt = |col: Option<usize>| {
            col.map(field)
                .filter(|v| !v.is_empty())
                .map(str::to_string)
        };

        let age_group = match opt(age_col).as_deref() {
            None | Some("adult") => AgeGroup::Adult,
            Some("other") => AgeGroup::Other,
            Some(v) => {
                return Err(Error::parse(
                    line_no,
                    format!("unknown age_group {v:?} (expected \"adult\" or \"other\")"),
                ))
            }
        };
        let sufficiency_score = match opt(suff_col) {
            None => None,
            Some(v) => Some(v.parse::<u8>().map_err(|_| {
                Error::parse(line_no, format!("sufficiency_score {v:?} is not an integer"))
            })?),
        };
        let mut questions = BTreeMap::new();
        for (col, name) in &question_cols {
            if let Some(resp) = parse_csv_response(field(*col), line_no, name)? {
                questions.insert(name.clone(), resp);
            }
        }
        records.push(VARecord {
            id: field(id_col).to_string(),
            age_group,
            narrative: field(narrative_col).to_string(),
            questions,
            cause_icd10: opt(icd_col),
            cause_level1: opt(l1_col),
            cause_level2: opt(l2_col),
            cause_level3: opt(l3_col),
            sufficiency_score,
        });
    }
    Ok(records)
}

/// Writes a dataset as flat CSV.
///
/// Question columns are the sorted union of indicators across all records;
/// responses are encoded `Y`/`N`/`DK`, with `Missing` left empty.
pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut indicators: BTreeSet<&str> = BTreeSet::new();
    for rec in ds.records() {
        indicators.extend(rec.questions.keys().map(String::as_str));
    }
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["id", "age_group", "narrative"];
    header.extend(indicators.iter().copied());
    header.extend([
        "cause_icd10",
        "cause_level1",
        "cause_level2",
        "cause_level3",
        "sufficiency_score",
    ]);
    writer.write_record(&header)?;
    for rec in ds.records() {
        let mut row: Vec<String> = vec![
            rec.id.clone(),
            match rec.age_group {
                AgeGroup::Adult => "adult".into(),
                AgeGroup::Other => "other".into(),
            },
            rec.narrative.clone(),
        ];
        for ind in &indicators {
            let cell = match rec.questions.get(*ind) {
                Some(Response::Yes) => "Y",
                Some(Response::No) => "N",
                Some(Response::DontKnow) => "DK",
                Some(Response::Missing) | None => "",
            };
            row.push(cell.to_string());
        }
        for opt in [
            &rec.cause_icd10,
            &rec.cause_level1,
            &rec.cause_level2,
            &rec.cause_level3,
        ] {
            row.push(opt.clone().unwrap_or_default());
        }
        row.push(
            rec.sufficiency_score
                .map(|s| s.to_string())
                .unwrap_or_default(),
        );
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Loads a taxonomy from CSV with columns `icd10,level1,level2,level3`.
///
/// Class lists are built from first appearance in file order, so the file
/// defines the class encoding. An empty file yields the default level-3
/// categories and empty level-1/2 lists.
pub fn load_taxonomy_csv(path: &Path) -> Result<CauseTaxonomy> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    for required in ["icd10", "level1", "level2", "level3"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Schema(format!(
                "taxonomy csv is missing required column {required:?}"
            )));
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (c_icd, c1, c2, c3) = (col("icd10"), col("level1"), col("level2"), col("level3"));

    let mut level1 = Vec::new();
    let mut level2 = Vec::new();
    let mut level3 = Vec::new();
    let mut map = Vec::new();
    let push_unique = |list: &mut Vec<String>, value: &str| {
        if !value.is_empty() && !list.iter().any(|v| v == value) {
            list.push(value.to_string());
        }
    };
    for (i, row) in reader.records().enumerate() {
        let line_no = i + 2;
        let row = row.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let get = |c: usize| row.get(c).unwrap_or("").trim().to_string();
        let (icd10, l1, l2, l3) = (get(c_icd), get(c1), get(c2), get(c3));
        if l1.is_empty() || l2.is_empty() || l3.is_empty() {
            return Err(Error::parse(
                line_no,
                "taxonomy rows must fill level1, level2, and level3".to_string(),
            ));
        }
        push_unique(&mut level1, &l1);
        push_unique(&mut level2, &l2);
        push_unique(&mut level3, &l3);
        map.push(Icd10Mapping {
            icd10,
            level1: l1,
            level2: l2,
            level3: l3,
        });
    }
    CauseTaxonomy::new(level1, level2, level3, map)
}

/// Writes a taxonomy's mapping rows as CSV.
pub fn write_taxonomy_csv(taxonomy: &CauseTaxonomy, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["icd10", "level1", "level2", "level3"])?;
    for m in taxonomy.icd10_map() {
        writer.write_record([&m.icd10, &m.level1, &m.level2, &m.level3])?;
    }
    writer.flush()?;
    Ok(())
}
