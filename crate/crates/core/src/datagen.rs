//! Synthetic instances and ratings ingestion.
//!
//! Synthetic feature matrices have i.i.d. standard-normal entries, so
//! `L = BᵀB` is a Wishart matrix. Ratings are turned into 0/1 feature columns:
//! each item is a column, each user a feature dimension, and an entry is 1
//! when the user rated the item at or above a threshold.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DppError, Result};
use crate::kernel::SparseColumns;
use crate::matrix::DenseMatrix;
use crate::stream::DecisionStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// `d = n`, the default shape.
    pub fn square(n: usize, seed: u64) -> Self {
        Self { n, d: n, seed }
    }
}

/// A `d × n` matrix of standard normals. Entries are drawn column by column
/// (`B[0,0], B[1,0], …, B[d−1,0], B[0,1], …`) from a [`DecisionStream`] seeded
/// with `spec.seed`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<DenseMatrix> {
    if spec.n == 0 || spec.d == 0 {
        return Err(DppError::Shape(format!(
            "need n, d >= 1, got n = {}, d = {}",
            spec.n, spec.d
        )));
    }
    let mut stream = DecisionStream::new(spec.seed);
    let mut b = DenseMatrix::zeros(spec.d, spec.n);
    for j in 0..spec.n {
        for r in 0..spec.d {
            b.set(r, j, stream.standard_normal());
        }
    }
    Ok(b)
}

/// Zero-based field positions of user, item and rating in each record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ColumnMap {
    pub user: usize,
    pub item: usize,
    pub rating: usize,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            user: 0,
            item: 1,
            rating: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatingsSpec {
    pub columns: ColumnMap,
    /// Ratings `>=` this become 1.
    pub threshold: f64,
    /// Remove items and users left without any 1.
    pub drop_empty: bool,
}

impl Default for RatingsSpec {
    fn default() -> Self {
        Self {
            columns: ColumnMap::default(),
            threshold: 4.0,
            drop_empty: true,
        }
    }
}

impl RatingsSpec {
    /// MovieLens `ratings.csv` (`userId,movieId,rating,timestamp`, with header).
    pub fn movielens() -> Self {
        Self::default()
    }
}

/// Binarized ratings plus the original ids behind each index.
#[derive(Clone, Debug, PartialEq)]
pub struct Ingested {
    /// `d × n`: users by items.
    pub b: SparseColumns,
    pub users: Vec<String>,
    pub items: Vec<String>,
}

/// The `<out>.idmap.json` sidecar: `users[r]` and `items[j]` are the original
/// ids of feature row `r` and item `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdMap {
    pub users: Vec<String>,
    pub items: Vec<String>,
}

impl Ingested {
    pub fn id_map(&self) -> IdMap {
        IdMap {
            users: self.users.clone(),
            items: self.items.clone(),
        }
    }

    pub fn write_id_map(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(f, &self.id_map())?;
        Ok(())
    }
}

/// `<out>.idmap.json` next to an output matrix path.
pub fn id_map_path(out: impl AsRef<Path>) -> PathBuf {
    let mut s = out.as_ref().as_os_str().to_owned();
    s.push(".idmap.json");
    PathBuf::from(s)
}

struct Interner {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn new() -> Self {
        Self {
            ids: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn get(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }
}

/// Reads `user,item,rating` records and binarizes them.
///
/// A first line whose rating field is not a number is taken as a header.
/// Indices follow first appearance among the records that survive filtering
/// (all records when `drop_empty` is off). Repeated `(user, item)` pairs
/// count as 1 if any of them reaches the threshold.
pub fn ingest_ratings<R: Read>(reader: R, spec: &RatingsSpec) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let cols = spec.columns;
    let need = cols.user.max(cols.item).max(cols.rating) + 1;
    let mut records: Vec<(String, String, bool)> = Vec::new();
    let mut warned = false;
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx as u64 + 1;
        let rec = rec.map_err(|e| DppError::Parse {
            line,
            msg: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() < need {
            return Err(DppError::Parse {
                line,
                msg: format!("expected at least {need} fields, found {}", rec.len()),
            });
        }
        let field = &rec[cols.rating];
        let rating = match field.parse::<f64>() {
            Ok(r) if r.is_finite() => r,
            _ if idx == 0 => continue,
            _ => {
                return Err(DppError::Parse {
                    line,
                    msg: format!("rating {field:?} is not a number"),
                });
            }
        };
        if !(0.0..=10.0).contains(&rating) && !warned {
            log::warn!("line {line}: rating {rating} outside [0, 10]");
            warned = true;
        }
        records.push((
            rec[cols.user].to_string(),
            rec[cols.item].to_string(),
            rating >= spec.threshold,
        ));
    }

    let mut users = Interner::new();
    let mut items = Interner::new();
    let mut cells: HashSet<(usize, usize)> = HashSet::new();
    for (u, i, positive) in &records {
        if spec.drop_empty && !positive {
            continue;
        }
        let (u, i) = (users.get(u), items.get(i));
        if *positive {
            cells.insert((i, u));
        }
    }
    if items.ids.is_empty() {
        return Err(DppError::NoItems);
    }
    let mut columns: Vec<Vec<(u32, f64)>> = vec![Vec::new(); items.ids.len()];
    for &(i, u) in &cells {
        columns[i].push((u as u32, 1.0));
    }
    for c in &mut columns {
        c.sort_unstable_by_key(|&(u, _)| u);
    }
    Ok(Ingested {
        b: SparseColumns::from_columns(users.ids.len(), &columns)?,
        users: users.ids,
        items: items.ids,
    })
}

pub fn ingest_ratings_path(path: impl AsRef<Path>, spec: &RatingsSpec) -> Result<Ingested> {
    ingest_ratings(BufReader::new(File::open(path)?), spec)
}

/// Writes the nonzeros back as `user,item,rating` triples, every rating set
/// to `rating`, ordered so that re-ingesting them assigns the same indices.
///
/// Lines are emitted greedily: any line whose user and item are already
/// introduced goes out first; otherwise one line introducing the next user
/// and/or the next item. Such a line always exists when the matrix came from
/// [`ingest_ratings`], since the original input introduced them in that order.
pub fn render_triples<W: Write>(ing: &Ingested, rating: f64, mut w: W) -> Result<()> {
    let mut pending: Vec<(usize, usize)> = Vec::with_capacity(ing.b.nnz());
    for j in 0..ing.b.n() {
        for &u in ing.b.column(j).indices {
            pending.push((u as usize, j));
        }
    }
    writeln!(w, "user,item,rating")?;
    let (mut next_user, mut next_item) = (0usize, 0usize);
    while !pending.is_empty() {
        let (free, rest): (Vec<_>, Vec<_>) = pending
            .into_iter()
            .partition(|&(u, j)| u < next_user && j < next_item);
        pending = rest;
        for (u, j) in free {
            writeln!(w, "{},{},{rating}", ing.users[u], ing.items[j])?;
        }
        if pending.is_empty() {
            break;
        }
        let Some(pos) = pending
            .iter()
            .position(|&(u, j)| u <= next_user && j <= next_item)
        else {
            return Err(DppError::Format(
                "matrix cannot be rendered in first-appearance order".into(),
            ));
        };
        let (u, j) = pending.remove(pos);
        writeln!(w, "{},{},{rating}", ing.users[u], ing.items[j])?;
        next_user = next_user.max(u + 1);
        next_item = next_item.max(j + 1);
    }
    w.flush()?;
    Ok(())
}

/// Converts the Netflix Prize per-movie layout (`MovieID:` lines followed by
/// `CustomerID,Rating,Date` lines) to `user,item,rating` triples.
pub fn netflix_to_triples<R: BufRead, W: Write>(reader: R, mut w: W) -> Result<()> {
    let mut movie: Option<String> = None;
    writeln!(w, "user,item,rating")?;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(id) = line.strip_suffix(':') {
            movie = Some(id.trim().to_string());
            continue;
        }
        let Some(m) = movie.as_deref() else {
            return Err(DppError::Parse {
                line: line_no,
                msg: "rating before any `MovieID:` line".into(),
            });
        };
        let mut fields = line.split(',');
        match (fields.next(), fields.next()) {
            (Some(user), Some(rating)) if !user.is_empty() => {
                writeln!(w, "{},{},{}", user.trim(), m, rating.trim())?;
            }
            _ => {
                return Err(DppError::Parse {
                    line: line_no,
                    msg: format!("malformed rating line {line:?}"),
                });
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(text: &str, spec: &RatingsSpec) -> Result<Ingested> {
        ingest_ratings(text.as_bytes(), spec)
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticSpec::square(3, 7);
        let a = gen_synthetic(&spec).unwrap();
        assert_eq!(a, gen_synthetic(&spec).unwrap());
        assert_ne!(a, gen_synthetic(&SyntheticSpec::square(3, 8)).unwrap());
        assert!(gen_synthetic(&SyntheticSpec {
            n: 0,
            d: 3,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn synthetic_fills_column_by_column() {
        let b = gen_synthetic(&SyntheticSpec {
            n: 2,
            d: 3,
            seed: 5,
        })
        .unwrap();
        let mut s = DecisionStream::new(5);
        let first: Vec<f64> = (0..3).map(|_| s.standard_normal()).collect();
        assert_eq!((0..3).map(|r| b.get(r, 0)).collect::<Vec<_>>(), first);
    }

    #[test]
    fn toy_triples() {
        let ing = ingest("u1,m1,5\nu1,m2,3\nu2,m1,4\n", &RatingsSpec::default()).unwrap();
        assert_eq!((ing.b.d(), ing.b.n()), (2, 1));
        assert_eq!(ing.b.column(0).indices, &[0, 1]);
        assert_eq!(ing.b.column(0).values, &[1.0, 1.0]);
        assert_eq!(ing.items, vec!["m1"]);
        assert_eq!(ing.users, vec!["u1", "u2"]);
    }

    #[test]
    fn header_is_detected_from_rating_field() {
        let text = "userId,movieId,rating,timestamp\n1,10,4.5,0\n2,10,2.0,0\n2,11,5,0\n";
        let ing = ingest(text, &RatingsSpec::movielens()).unwrap();
        assert_eq!(ing.items, vec!["10", "11"]);
        assert_eq!(ing.users, vec!["1", "2"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            ingest("", &RatingsSpec::default()),
            Err(DppError::NoItems)
        ));
        assert!(matches!(
            ingest("u,m,2\n", &RatingsSpec::default()),
            Err(DppError::NoItems)
        ));
        let err = ingest("u,m,5\nu,m2,five\n", &RatingsSpec::default()).unwrap_err();
        assert!(matches!(err, DppError::Parse { line: 2, .. }), "{err}");
        let err = ingest("u,m,5\nu,m2\n", &RatingsSpec::default()).unwrap_err();
        assert!(matches!(err, DppError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn zero_threshold_keeps_everything() {
        let spec = RatingsSpec {
            threshold: 0.0,
            ..RatingsSpec::default()
        };
        let ing = ingest("u1,m1,5\nu1,m2,0\nu2,m1,1\n", &spec).unwrap();
        assert_eq!((ing.b.d(), ing.b.n(), ing.b.nnz()), (2, 2, 3));
    }

    #[test]
    fn duplicates_are_ored() {
        let ing = ingest("u,m,1\nu,m,5\nu,m,2\n", &RatingsSpec::default()).unwrap();
        assert_eq!(ing.b.nnz(), 1);
    }

    #[test]
    fn keeping_empty_items() {
        let spec = RatingsSpec {
            drop_empty: false,
            ..RatingsSpec::default()
        };
        let ing = ingest("u1,m1,5\nu1,m2,3\nu2,m1,4\n", &spec).unwrap();
        assert_eq!(ing.items, vec!["m1", "m2"]);
        assert_eq!(ing.b.column(1).nnz(), 0);
    }

    #[test]
    fn render_then_ingest_is_identity() {
        let text = "a,x,5\nb,y,4\nc,x,1\nc,z,5\nb,x,4\nd,y,2\na,z,5\n";
        let ing = ingest(text, &RatingsSpec::default()).unwrap();
        let mut out = Vec::new();
        render_triples(&ing, 5.0, &mut out).unwrap();
        let again = ingest(std::str::from_utf8(&out).unwrap(), &RatingsSpec::default()).unwrap();
        assert_eq!(again, ing);
    }

    #[test]
    fn netflix_adapter() {
        let src = "1:\n6,3,2005-09-06\n7,5,2005-05-13\n2:\n6,4,2005-01-01\n";
        let mut out = Vec::new();
        netflix_to_triples(src.as_bytes(), &mut out).unwrap();
        assert_eq!(
            std::str::from_utf8(&out).unwrap(),
            "user,item,rating\n6,1,3\n7,1,5\n6,2,4\n"
        );
        let ing = ingest(std::str::from_utf8(&out).unwrap(), &RatingsSpec::default()).unwrap();
        assert_eq!(ing.items, vec!["1", "2"]);
        assert_eq!(ing.users, vec!["7", "6"]);
        assert!(netflix_to_triples("6,3,x\n".as_bytes(), Vec::new()).is_err());
    }
}
