//! Word-vector files.
//!
//! Text format: a `<count> <dim>` header, then `<token> <v1> ... <vd>` per line.
//! Files ending in `.bin` use the binary variant: the same header line, then
//! per row the token, a space, `dim` little-endian `f32` values and a newline.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::SharedMatrix;

/// Named vectors in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl VectorSet {
    pub fn new(dim: usize) -> Self {
        VectorSet {
            dim,
            tokens: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    /// Row `i` of `matrix` named `tokens[i]`.
    pub fn from_matrix<S: AsRef<str>>(tokens: &[S], matrix: &SharedMatrix) -> Result<Self> {
        if tokens.len() != matrix.rows() {
            return Err(Error::Invalid(format!(
                "{} tokens for a matrix of {} rows",
                tokens.len(),
                matrix.rows()
            )));
        }
        let mut set = VectorSet::new(matrix.dim());
        let mut row = vec![0.0; matrix.dim()];
        for (i, t) in tokens.iter().enumerate() {
            matrix.read_row(i, &mut row);
            set.push(t.as_ref(), &row)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, token: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Invalid(format!(
                "vector for `{token}` has {} values, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(Error::Invalid(format!(
                "token `{token}` is empty or contains whitespace"
            )));
        }
        if self.index.contains_key(token) {
            return Err(Error::DuplicateToken(token.to_owned()));
        }
        self.index.insert(token.to_owned(), self.tokens.len());
        self.tokens.push(token.to_owned());
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).map(|i| self.row(i))
    }

    pub fn vector(&self, token: &str) -> Result<&[f64]> {
        self.get(token)
            .ok_or_else(|| Error::UnknownToken(token.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.tokens
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim.max(1)))
    }

    /// Largest absolute difference between same-named vectors; `None` when
    /// the two sets differ in tokens, order or dimension.
    pub fn max_abs_deviation(&self, other: &VectorSet) -> Option<f64> {
        if self.dim != other.dim || self.tokens != other.tokens {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Text form. Values use the shortest representation that parses back
    /// to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.len(), self.dim);
        for (token, v) in self.iter() {
            out.push_str(token);
            for x in v {
                let _ = write!(out, " {x:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let (count, dim) = parse_header(lines.next().unwrap_or(""))?;
        let mut set = VectorSet::new(dim);
        let mut values = Vec::with_capacity(dim);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            if set.len() == count {
                return Err(Error::parse(
                    line_no,
                    format!("more than the {count} vectors declared in the header"),
                ));
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("line is not blank");
            values.clear();
            for f in fields {
                let v: f64 = f
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("`{f}` is not a number")))?;
                values.push(v);
            }
            if values.len() != dim {
                return Err(Error::parse(
                    line_no,
                    format!(
                        "expected {dim} values for `{token}`, found {}",
                        values.len()
                    ),
                ));
            }
            set.push(token, &values)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
        if set.len() != count {
            return Err(Error::parse(
                set.len() + 2,
                format!(
                    "header declares {count} vectors but the file has {}",
                    set.len()
                ),
            ));
        }
        Ok(set)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = format!("{} {}\n", self.len(), self.dim).into_bytes();
        for (token, v) in self.iter() {
            out.extend_from_slice(token.as_bytes());
            out.push(b' ');
            for &x in v {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
            out.push(b'\n');
        }
        out
    }

    /// Binary form; line numbers in errors count rows from the header (line 1).
    pub fn parse_binary(bytes: &[u8]) -> Result<Self> {
        let header_end = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse(1, "missing header line"))?;
        let header = std::str::from_utf8(&bytes[..header_end])
            .map_err(|_| Error::parse(1, "header is not UTF-8"))?;
        let (count, dim) = parse_header(header)?;
        let mut set = VectorSet::new(dim);
        let mut pos = header_end + 1;
        let mut values = vec![0.0; dim];
        for r in 0..count {
            let line_no = r + 2;
            let space = bytes[pos..]
                .iter()
                .position(|&b| b == b' ')
                .ok_or_else(|| {
                    Error::parse(
                        line_no,
                        format!("header declares {count} vectors but the file has {r}"),
                    )
                })?;
            let token = std::str::from_utf8(&bytes[pos..pos + space])
                .map_err(|_| Error::parse(line_no, "token is not UTF-8"))?;
            pos += space + 1;
            let end = pos + 4 * dim;
            if end >= bytes.len() {
                return Err(Error::parse(line_no, "truncated vector"));
            }
            for (k, v) in values.iter_mut().enumerate() {
                let b = &bytes[pos + 4 * k..pos + 4 * k + 4];
                *v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
            }
            pos = end;
            if bytes.get(pos) != Some(&b'\n') {
                return Err(Error::parse(line_no, "row does not end with a newline"));
            }
            pos += 1;
            set.push(token, &values)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
        if pos != bytes.len() {
            return Err(Error::parse(
                count + 2,
                format!("more than the {count} vectors declared in the header"),
            ));
        }
        Ok(set)
    }

    /// Read a file, choosing the format by extension.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let parsed = if is_binary(path) {
            Self::parse_binary(&bytes)
        } else {
            std::str::from_utf8(&bytes)
                .map_err(|_| Error::Invalid("file is not UTF-8".into()))
                .and_then(Self::parse_text)
        };
        parsed.map_err(|e| Error::in_file(path, e))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = if is_binary(path) {
            self.to_binary()
        } else {
            self.to_text().into_bytes()
        };
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let bad = || Error::parse(1, "expected header `<count> <dim>`");
    let mut f = line.split_whitespace();
    let count = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let dim: usize = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    if f.next().is_some() || dim == 0 {
        return Err(bad());
    }
    Ok((count, dim))
}

/// Write word and annotation vectors to two files.
pub fn write_vectors(
    words: &VectorSet,
    annotations: &VectorSet,
    words_path: &Path,
    annotations_path: &Path,
) -> Result<()> {
    words.write(words_path)?;
    annotations.write(annotations_path)
}
