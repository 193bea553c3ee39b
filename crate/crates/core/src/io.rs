//! Matrix file formats.
//!
//! * `DPPM1` dense: magic, `u32` rows, `u32` cols, then `f64` entries
//!   row-major. All integers and floats little-endian.
//! * `DPPS1` sparse columns: magic, `u32` d, `u32` n, then per column a `u32`
//!   nonzero count followed by `(u32 index, f64 value)` pairs in ascending
//!   index order.
//! * CSV dense: one matrix row per line, comma-separated, no header.
//!
//! [`read_matrix`] tells the three apart by their first five bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{DppError, Result};
use crate::kernel::{KernelOracle, SparseColumns};
use crate::matrix::DenseMatrix;
use crate::report::InputKind;

pub const DENSE_MAGIC: &[u8; 5] = b"DPPM1";
pub const SPARSE_MAGIC: &[u8; 5] = b"DPPS1";

fn dim(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| DppError::Format(format!("{what} = {v} does not fit in u32")))
}

pub fn write_dense<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    w.write_all(DENSE_MAGIC)?;
    w.write_u32::<LittleEndian>(dim(m.rows(), "rows")?)?;
    w.write_u32::<LittleEndian>(dim(m.cols(), "cols")?)?;
    for &x in m.as_slice() {
        w.write_f64::<LittleEndian>(x)?;
    }
    w.flush()?;
    Ok(())
}

fn read_magic<R: Read>(r: &mut R) -> Result<[u8; 5]> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    Ok(magic)
}

fn read_dense_body<R: Read>(mut r: R) -> Result<DenseMatrix> {
    let rows = r.read_u32::<LittleEndian>()? as usize;
    let cols = r.read_u32::<LittleEndian>()? as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| DppError::Format(format!("{rows}x{cols} overflows")))?;
    let mut data = vec![0.0; len];
    r.read_f64_into::<LittleEndian>(&mut data)
        .map_err(|e| DppError::Format(format!("truncated DPPM1 body: {e}")))?;
    DenseMatrix::from_vec(rows, cols, data)
}

pub fn read_dense<R: Read>(mut r: R) -> Result<DenseMatrix> {
    if &read_magic(&mut r)? != DENSE_MAGIC {
        return Err(DppError::Format("missing DPPM1 magic".into()));
    }
    read_dense_body(r)
}

pub fn write_sparse<W: Write>(mut w: W, b: &SparseColumns) -> Result<()> {
    w.write_all(SPARSE_MAGIC)?;
    w.write_u32::<LittleEndian>(dim(b.d(), "d")?)?;
    w.write_u32::<LittleEndian>(dim(b.n(), "n")?)?;
    for j in 0..b.n() {
        let c = b.column(j);
        w.write_u32::<LittleEndian>(c.nnz() as u32)?;
        for (&i, &v) in c.indices.iter().zip(c.values) {
            w.write_u32::<LittleEndian>(i)?;
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_sparse_body<R: Read>(mut r: R) -> Result<SparseColumns> {
    let d = r.read_u32::<LittleEndian>()? as usize;
    let n = r.read_u32::<LittleEndian>()? as usize;
    let mut columns = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let nnz = r.read_u32::<LittleEndian>()? as usize;
        let mut col = Vec::with_capacity(nnz.min(d));
        for _ in 0..nnz {
            let i = r.read_u32::<LittleEndian>()?;
            let v = r.read_f64::<LittleEndian>()?;
            col.push((i, v));
        }
        columns.push(col);
    }
    SparseColumns::from_columns(d, &columns)
}

pub fn read_sparse<R: Read>(mut r: R) -> Result<SparseColumns> {
    if &read_magic(&mut r)? != SPARSE_MAGIC {
        return Err(DppError::Format("missing DPPS1 magic".into()));
    }
    read_sparse_body(r)
}

pub fn write_dense_csv<W: Write>(w: W, m: &DenseMatrix) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.rows() {
        // `{}` on f64 prints the shortest string that parses back exactly.
        out.write_record(m.row(i).iter().map(|x| format!("{x}")))
            .map_err(|e| DppError::Format(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dense_csv<R: Read>(r: R) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let line = line as u64 + 1;
        let rec = rec.map_err(|e| DppError::Parse {
            line,
            msg: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| DppError::Parse {
                    line,
                    msg: format!("not a number: {f:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(DppError::Parse {
                    line,
                    msg: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

/// A matrix file of any supported format.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixFile {
    Dense(DenseMatrix),
    Sparse(SparseColumns),
}

/// Reads a DPPM1, DPPS1 or CSV matrix, detected from the leading bytes.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<MatrixFile> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 5];
    let mut got = 0;
    while got < 5 {
        match r.read(&mut magic[got..])? {
            0 => break,
            k => got += k,
        }
    }
    if got == 5 && &magic == DENSE_MAGIC {
        return read_dense_body(r).map(MatrixFile::Dense);
    }
    if got == 5 && &magic == SPARSE_MAGIC {
        return read_sparse_body(r).map(MatrixFile::Sparse);
    }
    read_dense_csv((&magic[..got]).chain(r)).map(MatrixFile::Dense)
}

/// Writes `m` as CSV when `path` ends in `.csv`, as DPPM1 otherwise.
pub fn save_dense(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let w = BufWriter::new(File::create(path)?);
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        write_dense_csv(w, m)
    } else {
        write_dense(w, m)
    }
}

pub fn save_sparse(path: impl AsRef<Path>, b: &SparseColumns) -> Result<()> {
    write_sparse(BufWriter::new(File::create(path)?), b)
}

/// Loads a kernel oracle: a feature matrix for `B`, a square kernel for `L`.
pub fn load_kernel(path: impl AsRef<Path>, kind: InputKind) -> Result<KernelOracle> {
    match (read_matrix(path)?, kind) {
        (MatrixFile::Dense(b), InputKind::B) => Ok(KernelOracle::from_features(&b)),
        (MatrixFile::Sparse(b), InputKind::B) => Ok(KernelOracle::from_sparse(b)),
        (MatrixFile::Dense(l), InputKind::L) => KernelOracle::from_kernel(l),
        (MatrixFile::Sparse(_), InputKind::L) => Err(DppError::Format(
            "L-input needs a dense square kernel, got sparse columns".into(),
        )),
    }
}
