//! Bundle directory format.
//!
//! ```text
//! edges.csv      header `src,dst`, one undirected edge per row (either orientation)
//! features.csv   n rows x d real columns, no header        } one of the two
//! features.bin   "FSNB", u32 n, u32 d, n*d f32, all LE     }
//! labels.csv     one integer class id per line
//! splits.json    {"train": [...], "dev": [...], "test": [...]}
//! ```

use std::collections::HashSet;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::{split_label_space, GraphBundle, LabelSplit, SplitAssignment};
use crate::{Error, Matrix, Result};

pub const FSNB_MAGIC: &[u8; 4] = b"FSNB";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    Csv,
    Binary,
}

/// Load and validate `edges.csv`, features and `labels.csv` from `dir`.
pub fn load_bundle(dir: &Path) -> Result<GraphBundle> {
    let labels = read_labels(&dir.join("labels.csv"))?;
    let bin = dir.join("features.bin");
    let features = if bin.exists() {
        read_fsnb(&bin)?
    } else {
        read_features_csv(&dir.join("features.csv"))?
    };
    let edges = read_edges(&dir.join("edges.csv"))?;
    GraphBundle::new(features, edges, labels)
}

/// Load a bundle together with its `splits.json`.
pub fn load_dataset(dir: &Path) -> Result<(GraphBundle, LabelSplit)> {
    let graph = load_bundle(dir)?;
    let assignment = read_split_assignment(&dir.join("splits.json"))?;
    let split = split_label_space(&graph, &assignment)?;
    Ok((graph, split))
}

pub fn read_split_assignment(path: &Path) -> Result<SplitAssignment> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.len() != 2 || &headers[0] != "src" || &headers[1] != "dst" {
        return Err(Error::parse(path, 1, "expected header `src,dst`"));
    }
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| -> Result<usize> {
            record
                .get(i)
                .ok_or_else(|| Error::parse(path, line, "expected two columns"))?
                .parse()
                .map_err(|_| Error::parse(path, line, format!("invalid node id {:?}", &record[i])))
        };
        let (u, v) = (field(0)?, field(1)?);
        if u == v {
            return Err(Error::parse(path, line, format!("self-loop ({u},{v})")));
        }
        if !seen.insert((u, v)) {
            return Err(Error::parse(path, line, format!("duplicate edge ({u},{v})")));
        }
        // The reverse orientation of an edge already read is the same edge.
        if !seen.contains(&(v, u)) {
            edges.push((u, v));
        }
    }
    Ok(edges)
}

fn read_features_csv(path: &Path) -> Result<Matrix> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if *width.get_or_insert(record.len()) != record.len() {
            return Err(Error::parse(path, line, "ragged feature row"));
        }
        for field in record.iter() {
            data.push(
                field
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, line, format!("invalid number {field:?}")))?,
            );
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, width.unwrap_or(0)), data).map_err(|e| Error::parse(path, 0, e.to_string()))
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("invalid label {l:?}")))
        })
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(path, line, e.to_string())
}

/// Encode a matrix in the FSNB layout (values narrowed to f32).
pub fn encode_fsnb(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * m.len());
    out.extend_from_slice(FSNB_MAGIC);
    out.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
    // Pad the header to 16 bytes.
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_fsnb(bytes: &[u8]) -> std::result::Result<Matrix, String> {
    if bytes.len() < 16 || &bytes[..4] != FSNB_MAGIC {
        return Err("missing FSNB header".into());
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let (n, d) = (word(4), word(8));
    let body = &bytes[16..];
    if body.len() != n * d * 4 {
        return Err(format!("expected {} payload bytes for {n}x{d}, found {}", n * d * 4, body.len()));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
        .collect();
    Array2::from_shape_vec((n, d), data).map_err(|e| e.to_string())
}

pub fn read_fsnb(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_fsnb(&bytes).map_err(|msg| Error::parse(path, 0, msg))
}

/// Write `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Write `g` (and optionally its split assignment) as a bundle directory.
pub fn write_bundle(dir: &Path, g: &GraphBundle, splits: Option<&SplitAssignment>, format: FeatureFormat) -> Result<()> {
    let mut edges = String::from("src,dst\n");
    for (u, v) in g.edges() {
        edges.push_str(&format!("{u},{v}\n"));
    }
    write_atomic(&dir.join("edges.csv"), edges.as_bytes())?;

    match format {
        FeatureFormat::Binary => write_atomic(&dir.join("features.bin"), &encode_fsnb(g.features().dense()))?,
        FeatureFormat::Csv => write_atomic(&dir.join("features.csv"), matrix_csv(g.features().dense()).as_bytes())?,
    }

    let labels: String = g.labels().iter().map(|l| format!("{l}\n")).collect();
    write_atomic(&dir.join("labels.csv"), labels.as_bytes())?;

    if let Some(s) = splits {
        write_atomic(&dir.join("splits.json"), serde_json::to_string_pretty(s)?.as_bytes())?;
    }
    Ok(())
}

/// Rows of comma-separated values using Rust's shortest round-trip formatting.
pub fn matrix_csv(m: &Matrix) -> String {
    let mut out = String::with_capacity(m.len() * 8);
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
