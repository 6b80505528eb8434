//! On-disk feature files.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! ```text
//! magic        4 bytes  "LYMF"
//! version      u16      currently 1
//! n_records    u64
//! dim          u32
//! n_classes    u32
//! class names  n_classes × (u16 byte length + UTF-8 bytes)
//! records      n_records × (label u16 + dim × f32)
//! ```
//!
//! CSV layout: header `label,f0,f1,...,f{D-1}`, one record per row, integer
//! labels. CSV files carry no class names; [`default_class_names`] is used with
//! `K = max label + 1`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{default_class_names, labels_from_names, DatasetError, FeatureDataset, Result};

pub const MAGIC: &[u8; 4] = b"LYMF";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Binary,
    Csv,
}

impl FileFormat {
    /// `.csv` files are CSV, everything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Binary,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Byte length of the binary header for the given class names.
pub fn binary_header_len(class_names: &[String]) -> usize {
    4 + 2 + 8 + 4 + 4 + class_names.iter().map(|n| 2 + n.len()).sum::<usize>()
}

pub fn load_dataset(path: &Path, format: FileFormat) -> Result<FeatureDataset> {
    let file = File::open(path).map_err(io_err(path))?;
    let provenance = path.display().to_string();
    let ds = match format {
        FileFormat::Binary => read_binary(BufReader::new(file), provenance)?,
        FileFormat::Csv => read_csv(BufReader::new(file), provenance)?,
    };
    if ds.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(ds)
}

pub fn save_dataset(dataset: &FeatureDataset, path: &Path, format: FileFormat) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        FileFormat::Binary => write_binary(dataset, &mut out),
        FileFormat::Csv => write_csv(dataset, &mut out),
    }
    .and_then(|_| out.flush())
    .map_err(io_err(path))
}

fn write_binary<W: Write>(ds: &FeatureDataset, out: &mut W) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(ds.len() as u64).to_le_bytes())?;
    out.write_all(&(ds.dim() as u32).to_le_bytes())?;
    out.write_all(&(ds.n_classes() as u32).to_le_bytes())?;
    for c in ds.classes() {
        out.write_all(&(c.name.len() as u16).to_le_bytes())?;
        out.write_all(c.name.as_bytes())?;
    }
    let mut buf = Vec::with_capacity(2 + 4 * ds.dim());
    for (row, &label) in ds.features().outer_iter().zip(ds.labels()) {
        buf.clear();
        buf.extend_from_slice(&(label as u16).to_le_bytes());
        for &v in row {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

struct HeaderReader<R> {
    inner: R,
}

impl<R: Read> HeaderReader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|_| DatasetError::MalformedHeader(format!("file ends while reading {what}")))?;
        Ok(b)
    }
}

fn read_binary<R: Read>(reader: R, provenance: String) -> Result<FeatureDataset> {
    let mut hr = HeaderReader { inner: reader };
    let magic = hr.bytes::<4>("magic")?;
    if &magic != MAGIC {
        return Err(DatasetError::BadMagic { found: magic });
    }
    let version = u16::from_le_bytes(hr.bytes("version")?);
    if version != FORMAT_VERSION {
        return Err(DatasetError::UnsupportedVersion(version));
    }
    let n = u64::from_le_bytes(hr.bytes("record count")?) as usize;
    let dim = u32::from_le_bytes(hr.bytes("dimension")?) as usize;
    let k = u32::from_le_bytes(hr.bytes("class count")?) as usize;
    if dim == 0 {
        return Err(DatasetError::MalformedHeader("dimension is zero".into()));
    }
    if k == 0 || k > u16::MAX as usize + 1 {
        return Err(DatasetError::MalformedHeader(format!("class count {k}")));
    }
    let mut names = Vec::with_capacity(k);
    for i in 0..k {
        let len = u16::from_le_bytes(hr.bytes("class name length")?) as usize;
        let mut raw = vec![0u8; len];
        hr.inner
            .read_exact(&mut raw)
            .map_err(|_| DatasetError::MalformedHeader(format!("file ends inside class name {i}")))?;
        let name = String::from_utf8(raw)
            .map_err(|_| DatasetError::MalformedHeader(format!("class name {i} is not UTF-8")))?;
        names.push(name);
    }
    labels_from_names(&names)?;

    let mut reader = hr.inner;
    let record_len = 2 + 4 * dim;
    // Cap the preallocation so a corrupt count cannot exhaust memory up front.
    let mut flat = Vec::with_capacity(n.min(1 << 20) * dim);
    let mut labels = Vec::with_capacity(n.min(1 << 20));
    let mut buf = vec![0u8; record_len];
    for record in 0..n {
        reader.read_exact(&mut buf).map_err(|_| DatasetError::Truncated { record })?;
        let label = u16::from_le_bytes([buf[0], buf[1]]) as usize;
        if label >= k {
            return Err(DatasetError::LabelOutOfRange { record, label, classes: k });
        }
        for (feature, chunk) in buf[2..].chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            if !v.is_finite() {
                return Err(DatasetError::NonFinite { record, feature });
            }
            flat.push(v as f64);
        }
        labels.push(label);
    }
    let mut probe = [0u8; 1];
    if reader.read(&mut probe).map(|r| r > 0).unwrap_or(false) {
        return Err(DatasetError::MalformedHeader(format!("trailing bytes after {n} records of dimension {dim}")));
    }
    let features = Array2::from_shape_vec((n, dim), flat).expect("shape checked while reading");
    FeatureDataset::new(features, labels, &names, provenance)
}

fn write_csv<W: Write>(ds: &FeatureDataset, out: &mut W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["label".to_string()];
    header.extend((0..ds.dim()).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    let mut row_buf = Vec::with_capacity(ds.dim() + 1);
    for (row, &label) in ds.features().outer_iter().zip(ds.labels()) {
        row_buf.clear();
        row_buf.push(label.to_string());
        row_buf.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&row_buf)?;
    }
    w.flush()
}

fn read_csv<R: Read>(reader: R, provenance: String) -> Result<FeatureDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| DatasetError::MalformedHeader(e.to_string()))?.clone();
    if header.get(0).map(str::trim) != Some("label") || header.len() < 2 {
        return Err(DatasetError::MalformedHeader("expected header 'label,f0,f1,...'".into()));
    }
    for (i, col) in header.iter().skip(1).enumerate() {
        if col.trim() != format!("f{i}") {
            return Err(DatasetError::MalformedHeader(format!("column {} is '{col}', expected 'f{i}'", i + 1)));
        }
    }
    let dim = header.len() - 1;
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    let mut rec = csv::StringRecord::new();
    let mut record = 0;
    loop {
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                return Err(match e.kind() {
                    csv::ErrorKind::UnequalLengths { len, .. } => DatasetError::DimensionMismatch {
                        record,
                        expected: dim,
                        found: (*len as usize).saturating_sub(1),
                    },
                    _ => DatasetError::Parse { record, message: e.to_string() },
                })
            }
        }
        let label: usize = rec[0].trim().parse().map_err(|_| DatasetError::Parse {
            record,
            message: format!("label '{}' is not a non-negative integer", &rec[0]),
        })?;
        if label > u16::MAX as usize {
            return Err(DatasetError::Parse { record, message: format!("label {label} exceeds u16") });
        }
        for (feature, field) in rec.iter().skip(1).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| DatasetError::Parse {
                record,
                message: format!("feature {feature} value '{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::NonFinite { record, feature });
            }
            flat.push(v);
        }
        labels.push(label);
        record += 1;
    }
    let n = labels.len();
    let k = labels.iter().max().map_or(1, |m| m + 1);
    let features = Array2::from_shape_vec((n, dim), flat).expect("row widths checked by csv reader");
    FeatureDataset::new(features, labels, &default_class_names(k), provenance)
}
