//! Grouped survival datasets and their CSV form.
//!
//! The CSV has the header `time,status,group`; `status` is 0 (censored),
//! 1 (event of interest) or 2 (competing event) and `group` is any label.
//! Group order is the order of first appearance in the file.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{Status, SurvivalRecord};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SurvivalDataset {
    groups: Vec<(String, Vec<SurvivalRecord>)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    time: f64,
    status: u8,
    group: String,
}

impl SurvivalDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, group: &str, record: SurvivalRecord) {
        match self.groups.iter_mut().find(|(g, _)| g == group) {
            Some((_, records)) => records.push(record),
            None => self.groups.push((group.to_string(), vec![record])),
        }
    }

    pub fn insert_group(&mut self, group: &str, records: Vec<SurvivalRecord>) {
        for r in records {
            self.push(group, r);
        }
    }

    pub fn labels(&self) -> Vec<&str> {
        self.groups.iter().map(|(g, _)| g.as_str()).collect()
    }

    pub fn group(&self, label: &str) -> Option<&[SurvivalRecord]> {
        self.groups.iter().find(|(g, _)| g == label).map(|(_, r)| r.as_slice())
    }

    pub fn groups(&self) -> impl Iterator<Item = (&str, &[SurvivalRecord])> {
        self.groups.iter().map(|(g, r)| (g.as_str(), r.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|(_, r)| r.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parse CSV; errors carry the 1-based file line number.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Input(format!("line 1: {e}")))?
            .clone();
        for required in ["time", "status", "group"] {
            if !headers.iter().any(|h| h == required) {
                return Err(Error::Input(format!("line 1: missing column `{required}`")));
            }
        }
        let mut data = SurvivalDataset::new();
        for row in rdr.deserialize::<CsvRow>() {
            let row = row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::Input(format!("line {line}: {e}"))
            })?;
            let line = data.len() + 2;
            if !(row.time >= 0.0) || !row.time.is_finite() {
                return Err(Error::Input(format!("line {line}: time must be finite and >= 0")));
            }
            let status = Status::from_code(row.status).map_err(|e| Error::Input(format!("line {line}: {e}")))?;
            data.push(&row.group, SurvivalRecord::new(row.time, status));
        }
        if data.is_empty() {
            return Err(Error::Input("dataset has no rows".into()));
        }
        Ok(data)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (group, records) in self.groups() {
            for r in records {
                w.serialize(CsvRow { time: r.time, status: r.status.code(), group: group.to_string() })
                    .map_err(|e| Error::Input(e.to_string()))?;
            }
        }
        w.flush().map_err(|e| Error::Input(e.to_string()))
    }
}
