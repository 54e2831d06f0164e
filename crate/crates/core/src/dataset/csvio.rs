use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::record::INTERVALS;
use super::{DatasetError, ExperimentRecord, ExperimentTable, Layout};

/// Input schema. Columns may appear in any order; extra columns are ignored.
pub const CSV_COLUMNS: [&str; 26] = [
    "layout",
    "soil",
    "d50_mm",
    "d10_mm",
    "cc",
    "cu",
    "contact_angle_deg",
    "friction_angle_deg",
    "wev_kpa",
    "slope_deg",
    "rain_mm_hr",
    "td_l_m2",
    "te_g_m2",
    "e1",
    "e2",
    "e3",
    "e4",
    "e5",
    "e6",
    "d1",
    "d2",
    "d3",
    "d4",
    "d5",
    "d6",
    "failure",
];

const EROSION: [&str; INTERVALS] = ["e1", "e2", "e3", "e4", "e5", "e6"];
const DISCHARGE: [&str; INTERVALS] = ["d1", "d2", "d3", "d4", "d5", "d6"];

pub fn load_experiments(
    path: &Path,
    expected_layout: Option<Layout>,
) -> Result<ExperimentTable, DatasetError> {
    let file = File::open(path)?;
    read_experiments(file, expected_layout, path.display().to_string())
}

/// Parses and validates an experiment CSV. Row numbers in errors are 1-based
/// and count data rows only.
pub fn read_experiments<R: Read>(
    reader: R,
    expected_layout: Option<Layout>,
    provenance: impl Into<String>,
) -> Result<ExperimentTable, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mut positions = HashMap::with_capacity(CSV_COLUMNS.len());
    for name in CSV_COLUMNS {
        let pos = index
            .get(name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))?;
        positions.insert(name, *pos);
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let cells = RowCells {
            row: &row,
            row_no,
            positions: &positions,
        };
        let record = cells.parse()?;
        if let Err((column, reason)) = record.validate() {
            return Err(DatasetError::BadValue {
                row: row_no,
                column: column.to_string(),
                reason,
            });
        }
        if let Some(expected) = expected_layout {
            if record.layout != expected {
                return Err(DatasetError::LayoutMismatch {
                    row: row_no,
                    expected,
                    found: record.layout,
                });
            }
        }
        records.push(record);
    }
    Ok(ExperimentTable::new(records, provenance))
}

struct RowCells<'a> {
    row: &'a csv::StringRecord,
    row_no: usize,
    positions: &'a HashMap<&'static str, usize>,
}

impl RowCells<'_> {
    fn cell(&self, column: &str) -> &str {
        self.row.get(self.positions[column]).unwrap_or("")
    }

    fn bad(&self, column: &str, reason: impl Into<String>) -> DatasetError {
        DatasetError::BadValue {
            row: self.row_no,
            column: column.to_string(),
            reason: reason.into(),
        }
    }

    fn optional(&self, column: &str) -> Result<Option<f64>, DatasetError> {
        let raw = self.cell(column);
        if raw.is_empty() {
            return Ok(None);
        }
        let v: f64 = raw
            .parse()
            .map_err(|_| self.bad(column, format!("'{raw}' is not a number")))?;
        if !v.is_finite() {
            return Err(self.bad(column, format!("'{raw}' is not finite")));
        }
        Ok(Some(v))
    }

    fn required(&self, column: &str) -> Result<f64, DatasetError> {
        self.optional(column)?
            .ok_or_else(|| self.bad(column, "empty cell"))
    }

    fn series(&self, columns: &[&str; INTERVALS]) -> Result<Option<[f64; INTERVALS]>, DatasetError> {
        let values = columns
            .iter()
            .map(|c| self.optional(c))
            .collect::<Result<Vec<_>, _>>()?;
        if values.iter().all(Option::is_none) {
            return Ok(None);
        }
        let mut out = [0.0; INTERVALS];
        for (slot, (v, c)) in out.iter_mut().zip(values.iter().zip(columns)) {
            *slot = v.ok_or_else(|| self.bad(c, "interval series is incomplete"))?;
        }
        Ok(Some(out))
    }

    fn parse(&self) -> Result<ExperimentRecord, DatasetError> {
        let layout = self
            .cell("layout")
            .parse()
            .map_err(|e: String| self.bad("layout", e))?;
        let soil = self
            .cell("soil")
            .parse()
            .map_err(|e: String| self.bad("soil", e))?;
        let failure = match self.optional("failure")? {
            None => None,
            Some(0.0) => Some(0),
            Some(1.0) => Some(1),
            Some(v) => return Err(self.bad("failure", format!("{v} is not 0 or 1"))),
        };
        Ok(ExperimentRecord {
            layout,
            soil,
            d50: self.required("d50_mm")?,
            d10: self.required("d10_mm")?,
            cc: self.required("cc")?,
            cu: self.required("cu")?,
            contact_angle: self.required("contact_angle_deg")?,
            friction_angle: self.required("friction_angle_deg")?,
            wev: self.required("wev_kpa")?,
            slope: self.required("slope_deg")?,
            rain_intensity: self.required("rain_mm_hr")?,
            td: self.optional("td_l_m2")?,
            te: self.optional("te_g_m2")?,
            erosion_intervals: self.series(&EROSION)?,
            discharge_intervals: self.series(&DISCHARGE)?,
            failure,
        })
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the table in the input schema, header first; absent values are empty cells.
pub fn write_experiments<W: Write>(table: &ExperimentTable, writer: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_COLUMNS)?;
    for r in &table.records {
        let mut row = vec![
            r.layout.to_string(),
            r.soil.to_string(),
            r.d50.to_string(),
            r.d10.to_string(),
            r.cc.to_string(),
            r.cu.to_string(),
            r.contact_angle.to_string(),
            r.friction_angle.to_string(),
            r.wev.to_string(),
            r.slope.to_string(),
            r.rain_intensity.to_string(),
            opt(r.td),
            opt(r.te),
        ];
        for series in [r.erosion_intervals, r.discharge_intervals] {
            for k in 0..INTERVALS {
                row.push(opt(series.map(|s| s[k])));
            }
        }
        row.push(r.failure.map(|f| f.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::record::sample_record;

    fn to_csv(table: &ExperimentTable) -> String {
        let mut buf = Vec::new();
        write_experiments(table, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip() {
        let mut sub = sample_record();
        sub.layout = Layout::HSub;
        sub.failure = Some(1);
        sub.erosion_intervals = None;
        sub.discharge_intervals = None;
        let table = ExperimentTable::new(vec![sample_record(), sub], "mem");
        let text = to_csv(&table);
        let back = read_experiments(text.as_bytes(), None, "mem").unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn columns_in_any_order() {
        let text = to_csv(&ExperimentTable::new(vec![sample_record()], ""));
        let mut lines: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
        for l in &mut lines {
            l.reverse();
        }
        let shuffled: String = lines.iter().map(|l| l.join(",") + "\n").collect();
        let back = read_experiments(shuffled.as_bytes(), Some(Layout::HTop), "").unwrap();
        assert_eq!(back.records[0], sample_record());
    }

    #[test]
    fn missing_column() {
        let text = to_csv(&ExperimentTable::new(vec![sample_record()], ""))
            .replace("rain_mm_hr", "rain");
        let err = read_experiments(text.as_bytes(), None, "").unwrap_err();
        assert!(matches!(err, DatasetError::MissingColumn(c) if c == "rain_mm_hr"));
    }

    #[test]
    fn h_sub_without_failure_is_bad_value() {
        let mut r = sample_record();
        r.layout = Layout::HSub;
        let err = read_experiments(
            to_csv(&ExperimentTable::new(vec![sample_record(), r], "")).as_bytes(),
            None,
            "",
        )
        .unwrap_err();
        match err {
            DatasetError::BadValue { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "failure");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let text = to_csv(&ExperimentTable::new(vec![sample_record()], ""))
            .replace(",0.2,", ",abc,");
        match read_experiments(text.as_bytes(), None, "").unwrap_err() {
            DatasetError::BadValue { row: 1, column, .. } => assert_eq!(column, "d50_mm"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn layout_mismatch() {
        let text = to_csv(&ExperimentTable::new(vec![sample_record()], ""));
        let err = read_experiments(text.as_bytes(), Some(Layout::HSub), "").unwrap_err();
        assert!(matches!(err, DatasetError::LayoutMismatch { row: 1, .. }));
    }

    #[test]
    fn partial_interval_series_rejected() {
        let mut t = to_csv(&ExperimentTable::new(vec![sample_record()], ""));
        t = t.replace(",0.4,", ",,");
        let err = read_experiments(t.as_bytes(), None, "").unwrap_err();
        assert!(matches!(err, DatasetError::BadValue { ref column, .. } if column == "d4"));
    }
}
