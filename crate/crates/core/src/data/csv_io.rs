use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// Reads a headed numeric table. When `label_column` is given, that column is
/// split out as the 0/1 label vector.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, label_column, name)
}

pub fn read_csv<T: Scalar, R: Read>(
    reader: R,
    label_column: Option<&str>,
    name: impl Into<String>,
) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let label_idx = match label_column {
        Some(col) => Some(
            headers
                .iter()
                .position(|h| h == col)
                .ok_or_else(|| Error::MissingLabelColumn(col.to_owned()))?,
        ),
        None => None,
    };
    let d = headers.len() - usize::from(label_idx.is_some());

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        // 1-based data row; the header is row 0
        let row = i + 1;
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
                row,
                column: "*".into(),
                message: format!("expected {expected_len} fields, found {len}"),
            },
            _ => Error::Csv(e),
        })?;
        for (j, cell) in record.iter().enumerate() {
            if Some(j) == label_idx {
                labels.push(parse_label(cell).ok_or_else(|| Error::Parse {
                    row,
                    column: headers[j].clone(),
                    message: format!("label `{cell}` is not 0 or 1"),
                })?);
                continue;
            }
            let v: T = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[j].clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: headers[j].clone(),
                    message: format!("`{cell}` is not finite"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    let x = Matrix::new(rows, d, data)?;
    Dataset::new(x, label_idx.map(|_| labels), name)
}

fn parse_label(cell: &str) -> Option<u8> {
    match cell {
        "0" => Some(0),
        "1" => Some(1),
        other => match other.parse::<f64>().ok()? {
            0.0 => Some(0),
            1.0 => Some(1),
            _ => None,
        },
    }
}

/// Header `f0,...,f{d-1}[,label]`, LF line endings, shortest round-trip
/// decimal floats.
pub fn write_csv_to<T: Scalar, W: Write>(ds: &Dataset<T>, mut w: W) -> std::io::Result<()> {
    let d = ds.dim();
    let mut header: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    if ds.y.is_some() {
        header.push("label".into());
    }
    writeln!(w, "{}", header.join(","))?;
    for (i, row) in ds.x.iter_rows().enumerate() {
        let mut line = String::with_capacity(row.len() * 20);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        if let Some(y) = &ds.y {
            line.push(',');
            line.push_str(&y[i].to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()
}

pub fn write_csv<T: Scalar>(ds: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(ds, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_labeled_table() {
        let ds: Dataset<f64> = read_csv("f0,f1,label\n0,1,0\n2,3,1".as_bytes(), Some("label"), "t").unwrap();
        assert_eq!(ds.x.data(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(ds.y, Some(vec![0, 1]));
    }

    #[test]
    fn no_label_column_requested() {
        let ds: Dataset<f64> = read_csv("f0,f1,label\n0,1,0\n2,3,1".as_bytes(), None, "t").unwrap();
        assert_eq!(ds.dim(), 3);
        assert!(ds.y.is_none());
    }

    #[test]
    fn reports_bad_cell_position() {
        let err = read_csv::<f64, _>("f0,f1\n0,1\n2,abc\n".as_bytes(), None, "t").unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "f1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_and_missing_label_rejected() {
        assert!(matches!(
            read_csv::<f64, _>("f0,f1\n0,1\n2\n".as_bytes(), None, "t"),
            Err(Error::Parse { row: 2, .. })
        ));
        assert!(matches!(
            read_csv::<f64, _>("f0,f1\n0,1\n".as_bytes(), Some("label"), "t"),
            Err(Error::MissingLabelColumn(_))
        ));
        assert!(read_csv::<f64, _>("f0,label\n0,2\n".as_bytes(), Some("label"), "t").is_err());
    }

    #[test]
    fn header_only_file_is_empty_dataset() {
        let ds: Dataset<f64> = read_csv("f0,f1\n".as_bytes(), None, "t").unwrap();
        assert_eq!(ds.len(), 0);
        assert_eq!(ds.dim(), 2);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..20),
            labeled in any::<bool>(),
        ) {
            let x = Matrix::from_rows(&rows).unwrap();
            let y = labeled.then(|| (0..rows.len()).map(|i| (i % 2) as u8).collect());
            let ds = Dataset::new(x, y, "p").unwrap();
            let mut buf = Vec::new();
            write_csv_to(&ds, &mut buf).unwrap();
            let back: Dataset<f64> =
                read_csv(buf.as_slice(), labeled.then_some("label"), "p").unwrap();
            prop_assert_eq!(back.x, ds.x);
            prop_assert_eq!(back.y, ds.y);
        }
    }
}
