//! CSV readers and writers.
//!
//! Datasets use the header `x1,...,xd,label` with one row per point and
//! 1-based labels; the label column may be omitted for unlabeled data.
//! Matrices are written as `n` header-less rows of `n` values. Floats use
//! Rust's shortest round-trip formatting, so written values read back exactly.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::mixture::Dataset;

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{kind:?}"),
        },
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(file))
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("cannot parse {field:?} as a number"),
    })
}

pub fn write_dataset_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = writer(path)?;
    let d = dataset.d();
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (p, &l) in dataset.points.iter().zip(&dataset.labels) {
        let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        row.push((l + 1).to_string());
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Points and (when a `label` column is present) 0-based labels.
pub type PointsAndLabels = (Vec<Vec<f64>>, Option<Vec<usize>>);

pub fn read_dataset_csv(path: &Path) -> Result<PointsAndLabels> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let has_label = header.iter().last() == Some("label");
    let d = header.len() - usize::from(has_label);
    for (i, name) in header.iter().take(d).enumerate() {
        if name != format!("x{}", i + 1) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("expected column x{}, found {name:?}", i + 1),
            });
        }
    }
    if d == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "no coordinate columns".into(),
        });
    }

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let coords = rec
            .iter()
            .take(d)
            .map(|f| parse_f64(path, line, f))
            .collect::<Result<Vec<_>>>()?;
        if !coords.iter().all(|v| v.is_finite()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: "non-finite coordinate".into(),
            });
        }
        points.push(coords);
        if has_label {
            let field = &rec[d];
            match field.parse::<usize>() {
                Ok(l) if l >= 1 => labels.push(l - 1),
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        msg: format!("label {field:?} is not a positive integer"),
                    })
                }
            }
        }
    }
    Ok((points, has_label.then_some(labels)))
}

/// Reads `k` centers from a CSV with header `x1,...,xd`.
pub fn read_centers_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let (centers, labels) = read_dataset_csv(path)?;
    if labels.is_some() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "center files must not have a label column".into(),
        });
    }
    Ok(centers)
}

pub fn write_centers_csv(path: &Path, centers: &[Vec<f64>]) -> Result<()> {
    let mut w = writer(path)?;
    let d = centers.first().map_or(0, Vec::len);
    let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for c in centers {
        w.write_record(c.iter().map(|v| v.to_string()))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One `label` column, 1-based.
pub fn write_labels_csv(path: &Path, labels: &[usize]) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::from("label\n");
    for l in labels {
        out.push_str(&(l + 1).to_string());
        out.push('\n');
    }
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_matrix_csv(path: &Path, m: &SymMatrix) -> Result<()> {
    let mut w = writer(path)?;
    for i in 0..m.order() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<SymMatrix> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        for f in rec.iter() {
            data.push(parse_f64(path, line, f)?);
        }
        rows += 1;
    }
    SymMatrix::from_row_major(rows, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{sample_dataset, MixtureSpec, Noise};

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("kmsdp-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn dataset_round_trip() {
        let spec = MixtureSpec::new(
            8,
            vec![vec![0.0, 0.0, 1.0], vec![2.0, -1.0, 0.5]],
            Noise::SphericalGaussian { sigma: 0.7 },
            1.0,
        )
        .unwrap();
        let ds = sample_dataset(&spec, 17).unwrap();
        let path = tmp("ds.csv");
        write_dataset_csv(&path, &ds).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x1,x2,x3,label\n"));
        let (points, labels) = read_dataset_csv(&path).unwrap();
        assert_eq!(points, ds.points);
        assert_eq!(labels.unwrap(), ds.labels);
    }

    #[test]
    fn unlabeled_file_and_bad_values() {
        let path = tmp("pts.csv");
        std::fs::write(&path, "x1,x2\n1,2\n3,4\n").unwrap();
        let (points, labels) = read_dataset_csv(&path).unwrap();
        assert_eq!(points, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!(labels.is_none());

        std::fs::write(&path, "x1,label\n1,1\nabc,2\n").unwrap();
        match read_dataset_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, "x1,label\n1,0\n").unwrap();
        assert!(read_dataset_csv(&path).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let m = SymMatrix::from_fn(3, |i, j| 0.1 * (i + 2 * j) as f64 + 1.0 / 3.0);
        let path = tmp("m.csv");
        write_matrix_csv(&path, &m).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), m);
    }
}
