//! Dataset files: little-endian `f64` rows plus a JSON sidecar, and CSV.
//!
//! A dataset stored under base path `data` occupies `data.bin` (row-major
//! values) and `data.json` (header with `n`, `p`, `k`, `seed`, `generator`,
//! optional `labels` and free-form `metadata`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Matrix, Provenance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub seed: u64,
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub metadata: serde_json::Value,
}

/// `(binary path, sidecar path)` for a base path, a `.bin` path or a
/// `.json` path.
pub fn dataset_paths(path: &Path) -> (PathBuf, PathBuf) {
    let base = match path.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let with = |ext: &str| {
        let mut s = base.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".bin"), with(".json"))
}

pub fn write_dataset(
    data: &Dataset,
    path: &Path,
    metadata: serde_json::Value,
) -> Result<(PathBuf, PathBuf)> {
    let (bin, json) = dataset_paths(path);
    let mut w = BufWriter::new(File::create(&bin)?);
    for v in data.points.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let header = DatasetHeader {
        n: data.n,
        p: data.p,
        k: data.provenance.k,
        seed: data.provenance.seed,
        generator: data.provenance.generator.clone(),
        labels: data.labels.clone(),
        metadata,
    };
    let mut j = BufWriter::new(File::create(&json)?);
    serde_json::to_writer_pretty(&mut j, &header)?;
    j.write_all(b"\n")?;
    j.flush()?;
    Ok((bin, json))
}

pub fn read_header(path: &Path) -> Result<DatasetHeader> {
    let (_, json) = dataset_paths(path);
    Ok(serde_json::from_reader(BufReader::new(File::open(json)?))?)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let (bin, _) = dataset_paths(path);
    let header = read_header(path)?;
    let mut bytes = Vec::new();
    BufReader::new(File::open(&bin)?).read_to_end(&mut bytes)?;
    let expected = header.n * header.p * 8;
    if bytes.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: bytes.len(),
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Dataset::new(
        Matrix::from_row_major(header.n, header.p, values)?,
        header.labels,
        Provenance {
            seed: header.seed,
            generator: header.generator,
            k: header.k,
        },
    )
}

/// CSV with columns `x0 .. x{p-1}` and `label` when labels exist. Values
/// use the shortest representation that round-trips.
pub fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..data.p).map(|i| format!("x{i}")).collect();
    if data.labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for j in 0..data.n {
        let mut rec: Vec<String> = data.points.row(j).iter().map(|v| v.to_string()).collect();
        if let Some(l) = &data.labels {
            rec.push(l[j].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        Dataset::new(
            Matrix::from_row_major(3, 2, vec![0.1, -2.5, 1e-300, 3.0, f64::MAX, 0.3]).unwrap(),
            Some(vec![0, 1, 1]),
            Provenance {
                seed: 5,
                generator: "gaussian".into(),
                k: 2,
            },
        )
        .unwrap()
    }

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("projclust-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn binary_round_trip() {
        let d = sample();
        let base = tmp("rt");
        write_dataset(&d, &base, serde_json::json!({"c": 1.0})).unwrap();
        assert_eq!(read_dataset(&base).unwrap(), d);
        assert_eq!(read_dataset(&base.with_extension("bin")).unwrap(), d);
        let h = read_header(&base).unwrap();
        assert_eq!(h.metadata["c"], 1.0);
        assert_eq!(std::fs::metadata(dataset_paths(&base).0).unwrap().len(), 48);
    }

    #[test]
    fn csv_round_trips_values() {
        let d = sample();
        let path = tmp("d.csv");
        write_csv(&d, &path).unwrap();
        let mut r = csv::Reader::from_path(&path).unwrap();
        assert_eq!(r.headers().unwrap(), vec!["x0", "x1", "label"]);
        let rows: Vec<csv::StringRecord> = r.records().map(|r| r.unwrap()).collect();
        for (j, row) in rows.iter().enumerate() {
            for i in 0..2 {
                assert_eq!(row[i].parse::<f64>().unwrap(), d.points.get(j, i));
            }
        }
    }
}
