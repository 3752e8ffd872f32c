use std::fs;
use std::path::Path;

use super::{DatasetError, Label, MtsDataset, MtsInstance};
use crate::scalar::Scalar;

/// Expected layout of a dataset directory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DatasetSchema {
    /// Number of `dim_<k>.csv` files. `None` discovers them, requiring the
    /// indices found to be contiguous from 0.
    pub dims: Option<usize>,
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Lines of a CSV body; blank lines at the end of the file are ignored.
fn body_lines(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    lines
}

fn parse_dimension<F: Scalar>(path: &Path) -> Result<Vec<Vec<F>>, DatasetError> {
    let file = path.display().to_string();
    let text = read(path)?;
    let mut rows: Vec<Vec<F>> = Vec::new();
    let mut width = None;
    for (row, line) in body_lines(&text).into_iter().enumerate() {
        let cells: Vec<&str> = if line.trim().is_empty() {
            Vec::new()
        } else {
            line.split(',').collect()
        };
        let expected = *width.get_or_insert(cells.len());
        if cells.len() != expected {
            return Err(DatasetError::RaggedRow {
                file,
                row,
                expected,
                found: cells.len(),
            });
        }
        let mut values = Vec::with_capacity(cells.len());
        for (col, cell) in cells.iter().enumerate() {
            let v: F = cell.trim().parse().map_err(|_| DatasetError::NonNumeric {
                file: file.clone(),
                row,
                col,
                cell: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::NonFinite {
                    file: file.clone(),
                    row,
                    col,
                });
            }
            values.push(v);
        }
        rows.push(values);
    }
    Ok(rows)
}

fn discover_dims(dir: &Path) -> Result<usize, DatasetError> {
    let entries = fs::read_dir(dir).map_err(|source| DatasetError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut found: Vec<usize> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_prefix("dim_")?.strip_suffix(".csv")?.parse().ok()
        })
        .collect();
    found.sort_unstable();
    if found.is_empty() {
        return Err(DatasetError::NoDimensions(dir.display().to_string()));
    }
    for (expected, &k) in found.iter().enumerate() {
        if k != expected {
            return Err(DatasetError::MissingDimension(
                dir.join(format!("dim_{expected}.csv")).display().to_string(),
            ));
        }
    }
    Ok(found.len())
}

/// Loads `dim_<k>.csv` files and `labels.csv` from `dir`. Row `i` of every
/// file is instance `i`, which also becomes its id.
pub fn load_dataset<F: Scalar>(
    dir: impl AsRef<Path>,
    schema: DatasetSchema,
) -> Result<MtsDataset<F>, DatasetError> {
    let dir = dir.as_ref();
    let dims = match schema.dims {
        Some(d) => d,
        None => discover_dims(dir)?,
    };
    if dims == 0 {
        return Err(DatasetError::NoDimensions(dir.display().to_string()));
    }

    let mut per_dim = Vec::with_capacity(dims);
    for k in 0..dims {
        let path = dir.join(format!("dim_{k}.csv"));
        if !path.is_file() {
            return Err(DatasetError::MissingDimension(path.display().to_string()));
        }
        per_dim.push((path.display().to_string(), parse_dimension::<F>(&path)?));
    }

    let rows = per_dim[0].1.len();
    let width = per_dim[0].1.first().map_or(0, Vec::len);
    for (file, data) in &per_dim[1..] {
        if data.len() != rows {
            return Err(DatasetError::RowCountMismatch {
                file: file.clone(),
                expected: rows,
                found: data.len(),
            });
        }
        if let Some(w) = data.first().map(Vec::len) {
            if w != width {
                return Err(DatasetError::RaggedRow {
                    file: file.clone(),
                    row: 0,
                    expected: width,
                    found: w,
                });
            }
        }
    }

    let label_path = dir.join("labels.csv");
    let label_text = read(&label_path)?;
    let mut labels = Vec::new();
    for (row, line) in body_lines(&label_text).into_iter().enumerate() {
        let token = line.trim();
        if token.is_empty() {
            return Err(DatasetError::EmptyLabel(row));
        }
        labels.push(Label::new(token));
    }
    if labels.len() != rows {
        return Err(DatasetError::LabelCountMismatch {
            labels: labels.len(),
            rows,
        });
    }

    let mut columns: Vec<std::vec::IntoIter<Vec<F>>> =
        per_dim.into_iter().map(|(_, d)| d.into_iter()).collect();
    let mut instances = Vec::with_capacity(rows);
    for id in 0..rows {
        let values = columns
            .iter_mut()
            .map(|c| c.next().expect("row count checked"))
            .collect();
        instances.push(MtsInstance::new(id, values)?);
    }
    MtsDataset::new(instances, labels)
}

fn format_value<F: Scalar>(v: F, precision: Option<usize>) -> String {
    match precision {
        Some(p) => format!("{v:.p$}"),
        None => format!("{v}"),
    }
}

/// Writes a dataset in the layout [`load_dataset`] reads. `precision` fixes
/// the number of decimals; `None` writes the shortest exact representation.
pub fn save_dataset<F: Scalar>(
    ds: &MtsDataset<F>,
    dir: impl AsRef<Path>,
    precision: Option<usize>,
) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| DatasetError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for d in 0..ds.dims() {
        let mut out = String::new();
        for inst in ds.instances() {
            let row: Vec<String> = inst.dim(d).iter().map(|&v| format_value(v, precision)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        let path = dir.join(format!("dim_{d}.csv"));
        fs::write(&path, out).map_err(io_err(&path))?;
    }
    let mut out = String::new();
    for l in ds.labels() {
        out.push_str(l.as_str());
        out.push('\n');
    }
    let path = dir.join("labels.csv");
    fs::write(&path, out).map_err(io_err(&path))?;
    Ok(())
}
