use std::io::{Read, Write};

use crate::engine::Label;

use super::GenError;

/// Writes `packet_index,label` rows.
pub fn write_labels_csv<W: Write>(labels: &[Label], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["packet_index", "label"])?;
    for (i, l) in labels.iter().enumerate() {
        w.write_record([i.to_string().as_str(), l.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a labels file written by [`write_labels_csv`]. Indices must run
/// 0, 1, 2, ... without gaps.
pub fn read_labels_csv<R: Read>(input: R) -> Result<Vec<Label>, GenError> {
    let mut r = csv::Reader::from_reader(input);
    let mut labels = Vec::new();
    for (i, row) in r.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| GenError::BadLabels { line, reason: e.to_string() })?;
        let (Some(index), Some(label)) = (row.get(0), row.get(1)) else {
            return Err(GenError::BadLabels { line, reason: "expected packet_index,label".into() });
        };
        if index.trim().parse::<usize>().ok() != Some(i) {
            return Err(GenError::BadLabels { line, reason: format!("expected packet index {i}, got {index:?}") });
        }
        labels.push(label.parse().map_err(|reason| GenError::BadLabels { line, reason })?);
    }
    Ok(labels)
}
