//! The observed label matrix and its summary statistics.
//!
//! Entries are stored sparsely in row-major (CSR) order. Abstentions are
//! never stored; a dense view fills them in as `0`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

/// A source output: `-1`, `0` (abstain) or `+1`.
pub type Vote = i8;

/// On-disk layout of a label matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    /// One CSV row per data point, `m` values in `{-1,0,1}`.
    #[default]
    Dense,
    /// Header `n,m`, then `row,col,label` triplets with label in `{-1,1}`.
    Sparse,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Format::Dense),
            "sparse" => Ok(Format::Sparse),
            other => Err(Error::invalid(format!(
                "unknown matrix format '{other}' (expected dense or sparse)"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Dense => "dense",
            Format::Sparse => "sparse",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    n: usize,
    m: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    votes: Vec<Vote>,
}

impl LabelMatrix {
    /// Build from `(row, col, label)` triplets. Labels must be `-1` or `+1`.
    pub fn from_triplets<I>(n: usize, m: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Vote)>,
    {
        let mut entries: Vec<(usize, usize, Vote)> = Vec::new();
        for (row, col, label) in triplets {
            if row >= n || col >= m {
                return Err(Error::OutOfBounds { row, col, n, m });
            }
            if label != 1 && label != -1 {
                return Err(Error::Domain {
                    line: 0,
                    value: label.to_string(),
                    allowed: "{-1, 1}",
                });
            }
            entries.push((row, col, label));
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::Duplicate {
                row: w[0].0,
                col: w[0].1,
            });
        }
        Ok(Self::from_sorted(n, m, &entries))
    }

    fn from_sorted(n: usize, m: usize, entries: &[(usize, usize, Vote)]) -> Self {
        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _, _) in entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        LabelMatrix {
            n,
            m,
            row_ptr,
            cols: entries.iter().map(|&(_, c, _)| c as u32).collect(),
            votes: entries.iter().map(|&(_, _, v)| v).collect(),
        }
    }

    /// Build from dense rows. Every row must have the same length.
    pub fn from_dense<R: AsRef<[Vote]>>(rows: &[R]) -> Result<Self> {
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::Dimension {
                    what: "dense row length",
                    expected: m,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 | -1 => entries.push((i, j, v)),
                    _ => {
                        return Err(Error::Domain {
                            line: i + 1,
                            value: v.to_string(),
                            allowed: "{-1, 0, 1}",
                        })
                    }
                }
            }
        }
        Ok(Self::from_sorted(rows.len(), m, &entries))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of stored (non-abstain) entries.
    pub fn nnz(&self) -> usize {
        self.votes.len()
    }

    /// Non-abstain entries of row `i` as `(column, vote)`.
    pub fn row(&self, i: usize) -> impl ExactSizeIterator<Item = (usize, Vote)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.votes[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn dense_row(&self, i: usize) -> Vec<Vote> {
        let mut out = vec![0; self.m];
        self.fill_dense_row(i, &mut out);
        out
    }

    /// Write row `i` into `out` (length `m`), zeroing abstentions.
    pub fn fill_dense_row(&self, i: usize, out: &mut [Vote]) {
        out.fill(0);
        for (j, v) in self.row(i) {
            out[j] = v;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Vote {
        self.row(i).find(|&(c, _)| c == j).map_or(0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> Vec<Vec<Vote>> {
        (0..self.n).map(|i| self.dense_row(i)).collect()
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Vote)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Unweighted vote sum of row `i`.
    pub fn vote_sum(&self, i: usize) -> i64 {
        self.row(i).map(|(_, v)| v as i64).sum()
    }

    /// Same matrix with every label negated.
    pub fn negated(&self) -> Self {
        LabelMatrix {
            votes: self.votes.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    /// Rows reordered so that new row `r` is old row `order[r]`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.n)?;
        let entries: Vec<_> = order
            .iter()
            .enumerate()
            .flat_map(|(r, &old)| self.row(old).map(move |(j, v)| (r, j, v)))
            .collect();
        Ok(Self::from_sorted(self.n, self.m, &entries))
    }

    /// Columns relabelled so that new column `c` is old column `order[c]`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.m)?;
        let mut inverse = vec![0; self.m];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        Self::from_triplets(
            self.n,
            self.m,
            self.triplets().map(|(i, j, v)| (i, inverse[j], v)),
        )
    }

    /// Keep only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut entries = Vec::new();
        for (r, &old) in rows.iter().enumerate() {
            if old >= self.n {
                return Err(Error::OutOfBounds {
                    row: old,
                    col: 0,
                    n: self.n,
                    m: self.m,
                });
            }
            entries.extend(self.row(old).map(|(j, v)| (r, j, v)));
        }
        Ok(Self::from_sorted(rows.len(), self.m, &entries))
    }

    /// Column-major copy of the entries: for each column, `(row, vote)` pairs.
    pub fn columns(&self) -> Vec<Vec<(usize, Vote)>> {
        let mut cols = vec![Vec::new(); self.m];
        for (i, j, v) in self.triplets() {
            cols[j].push((i, v));
        }
        cols
    }

    pub fn read<R: BufRead>(reader: R, format: Format) -> Result<Self> {
        match format {
            Format::Dense => read_dense(reader),
            Format::Sparse => read_sparse(reader),
        }
    }

    pub fn write<W: Write>(&self, mut w: W, format: Format) -> Result<()> {
        match format {
            Format::Dense => {
                let mut line = String::new();
                for i in 0..self.n {
                    line.clear();
                    for (j, v) in self.dense_row(i).iter().enumerate() {
                        if j > 0 {
                            line.push(',');
                        }
                        line.push_str(&v.to_string());
                    }
                    writeln!(w, "{line}")?;
                }
            }
            Format::Sparse => {
                writeln!(w, "{},{}", self.n, self.m)?;
                for (i, j, v) in self.triplets() {
                    writeln!(w, "{i},{j},{v}")?;
                }
            }
        }
        Ok(())
    }
}

fn check_permutation(order: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    if order.len() != len {
        return Err(Error::Dimension {
            what: "permutation length",
            expected: len,
            found: order.len(),
        });
    }
    for &o in order {
        if o >= len || std::mem::replace(&mut seen[o], true) {
            return Err(Error::invalid("not a permutation"));
        }
    }
    Ok(())
}

/// Data lines of a text file: skips blank lines and `#` comments, keeps
/// 1-based line numbers for error reporting.
pub(crate) fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(idx, line)| match line {
            Err(e) => Some(Err(Error::Io(e))),
            Ok(l) => {
                let t = l.trim();
                if t.is_empty() || t.starts_with('#') {
                    None
                } else {
                    Some(Ok((idx + 1, t.to_string())))
                }
            }
        })
}

fn parse_int(field: &str, line: usize) -> Result<i64> {
    field.trim().parse::<i64>().map_err(|_| Error::Parse {
        line,
        message: format!("expected an integer, found '{}'", field.trim()),
    })
}

fn parse_index(field: &str, line: usize) -> Result<usize> {
    let v = parse_int(field, line)?;
    usize::try_from(v).map_err(|_| Error::Parse {
        line,
        message: format!("negative index {v}"),
    })
}

fn read_dense<R: BufRead>(reader: R) -> Result<LabelMatrix> {
    let mut m: Option<usize> = None;
    let mut entries = Vec::new();
    let mut n = 0;
    for item in data_lines(reader) {
        let (line_no, line) = item?;
        let fields: Vec<&str> = line.split(',').collect();
        match m {
            None => m = Some(fields.len()),
            Some(width) if width != fields.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {width} columns, found {}", fields.len()),
                })
            }
            _ => {}
        }
        for (j, f) in fields.iter().enumerate() {
            match parse_int(f, line_no)? {
                0 => {}
                v @ (1 | -1) => entries.push((n, j, v as Vote)),
                v => {
                    return Err(Error::Domain {
                        line: line_no,
                        value: v.to_string(),
                        allowed: "{-1, 0, 1}",
                    })
                }
            }
        }
        n += 1;
    }
    Ok(LabelMatrix::from_sorted(n, m.unwrap_or(0), &entries))
}

fn read_sparse<R: BufRead>(reader: R) -> Result<LabelMatrix> {
    let mut lines = data_lines(reader);
    let (n, m) = match lines.next() {
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing 'n,m' header".into(),
            })
        }
        Some(item) => {
            let (line_no, line) = item?;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "header must be 'n,m'".into(),
                });
            }
            (
                parse_index(fields[0], line_no)?,
                parse_index(fields[1], line_no)?,
            )
        }
    };
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for item in lines {
        let (line_no, line) = item?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 'row,col,label', found {} fields", fields.len()),
            });
        }
        let row = parse_index(fields[0], line_no)?;
        let col = parse_index(fields[1], line_no)?;
        let label = parse_int(fields[2], line_no)?;
        if label != 1 && label != -1 {
            return Err(Error::Domain {
                line: line_no,
                value: label.to_string(),
                allowed: "{-1, 1}",
            });
        }
        if row >= n || col >= m {
            return Err(Error::OutOfBounds { row, col, n, m });
        }
        if !seen.insert((row, col)) {
            return Err(Error::Duplicate { row, col });
        }
        entries.push((row, col, label as Vote));
    }
    entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
    Ok(LabelMatrix::from_sorted(n, m, &entries))
}

/// Ground-truth labels, one per data point, each `-1` or `+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldLabels(Vec<Vote>);

impl GoldLabels {
    pub fn new(labels: Vec<Vote>) -> Result<Self> {
        if let Some((i, v)) = labels.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
            return Err(Error::Domain {
                line: i + 1,
                value: v.to_string(),
                allowed: "{-1, 1}",
            });
        }
        Ok(GoldLabels(labels))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Vote] {
        &self.0
    }

    /// Errors unless the labels line up with `matrix`.
    pub fn check_against(&self, matrix: &LabelMatrix) -> Result<()> {
        if self.len() != matrix.n() {
            return Err(Error::Dimension {
                what: "gold labels",
                expected: matrix.n(),
                found: self.len(),
            });
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut out = Vec::new();
        for item in data_lines(reader) {
            let (line_no, line) = item?;
            match parse_int(&line, line_no)? {
                v @ (1 | -1) => out.push(v as Vote),
                v => {
                    return Err(Error::Domain {
                        line: line_no,
                        value: v.to_string(),
                        allowed: "{-1, 1}",
                    })
                }
            }
        }
        Ok(GoldLabels(out))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.0 {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

/// Positive and negative vote counts of one source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ColumnCounts {
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixStats {
    /// Mean number of non-abstain labels per row.
    pub density: f64,
    /// Fraction of rows with at least one label.
    pub coverage: f64,
    /// Fraction of rows with at least two labels.
    pub overlap: f64,
    /// Fraction of rows containing both a `-1` and a `+1`.
    pub conflict: f64,
    pub columns: Vec<ColumnCounts>,
}

pub fn stats(matrix: &LabelMatrix) -> Result<MatrixStats> {
    let n = matrix.n();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut columns = vec![ColumnCounts::default(); matrix.m()];
    let (mut covered, mut overlapping, mut conflicting) = (0usize, 0usize, 0usize);
    for i in 0..n {
        let mut counts = (0usize, 0usize);
        for (j, v) in matrix.row(i) {
            if v > 0 {
                counts.0 += 1;
                columns[j].positive += 1;
            } else {
                counts.1 += 1;
                columns[j].negative += 1;
            }
        }
        let total = counts.0 + counts.1;
        covered += (total >= 1) as usize;
        overlapping += (total >= 2) as usize;
        conflicting += (counts.0 > 0 && counts.1 > 0) as usize;
    }
    let nf = n as f64;
    Ok(MatrixStats {
        density: matrix.nnz() as f64 / nf,
        coverage: covered as f64 / nf,
        overlap: overlapping as f64 / nf,
        conflict: conflicting as f64 / nf,
        columns,
    })
}

/// Counts of `+1` and `-1` labels in a dense row.
pub fn class_counts(row: &[Vote]) -> (usize, usize) {
    row.iter().fold((0, 0), |(p, q), &v| match v {
        1 => (p + 1, q),
        -1 => (p, q + 1),
        _ => (p, q),
    })
}
