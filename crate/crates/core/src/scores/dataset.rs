use std::collections::HashMap;
use std::fmt::Write as _;

use super::ScoreError;

/// A complete discrete dataset: one categorical column per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    names: Vec<String>,
    arities: Vec<usize>,
    rows: Vec<Vec<usize>>,
}

impl Dataset {
    /// Builds a dataset after checking that every row has one in-range
    /// entry per variable and that every variable has at least two states.
    pub fn new(
        names: Vec<String>,
        arities: Vec<usize>,
        rows: Vec<Vec<usize>>,
    ) -> Result<Self, ScoreError> {
        if names.len() != arities.len() {
            return Err(ScoreError::Data(format!(
                "{} names but {} arities",
                names.len(),
                arities.len()
            )));
        }
        if let Some(u) = arities.iter().position(|&a| a < 2) {
            return Err(ScoreError::DegenerateColumn(names[u].clone()));
        }
        let n = names.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ScoreError::RaggedRow {
                    line: i + 2,
                    expected: n,
                    found: row.len(),
                });
            }
            for (u, &v) in row.iter().enumerate() {
                if v >= arities[u] {
                    return Err(ScoreError::Data(format!(
                        "row {}: value {} out of range for {} (arity {})",
                        i, v, names[u], arities[u]
                    )));
                }
            }
        }
        Ok(Dataset {
            names,
            arities,
            rows,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn arity(&self, u: usize) -> usize {
        self.arities[u]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Same variables, a different selection or ordering of rows.
    pub fn with_rows(&self, rows: Vec<Vec<usize>>) -> Result<Self, ScoreError> {
        Dataset::new(self.names.clone(), self.arities.clone(), rows)
    }

    /// Writes the dataset as CSV using the category index as token.
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{}", v);
            }
            out.push('\n');
        }
        out
    }
}

/// Parses a header-plus-rows CSV. Category tokens are mapped to indices in
/// order of first appearance within each column.
pub fn read_dataset(text: &str) -> Result<Dataset, ScoreError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let (_, header) = lines.next().ok_or(ScoreError::EmptyDataset)?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if names.iter().any(|s| s.is_empty()) {
        return Err(ScoreError::Data("empty variable name in header".into()));
    }
    let n = names.len();

    let mut codes: Vec<HashMap<String, usize>> = vec![HashMap::new(); n];
    let mut rows = Vec::new();
    for (line, text) in lines {
        let tokens: Vec<&str> = text.split(',').map(str::trim).collect();
        if tokens.len() != n {
            return Err(ScoreError::RaggedRow {
                line,
                expected: n,
                found: tokens.len(),
            });
        }
        let row = tokens
            .iter()
            .zip(codes.iter_mut())
            .map(|(tok, map)| {
                let next = map.len();
                *map.entry((*tok).to_string()).or_insert(next)
            })
            .collect();
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ScoreError::EmptyDataset);
    }
    let arities = codes.iter().map(HashMap::len).collect();
    Dataset::new(names, arities, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_appearance_indexing() {
        let d = read_dataset("A,B\ny,n\nn,y\n").unwrap();
        assert_eq!(d.n_vars(), 2);
        assert_eq!(d.arities(), &[2, 2]);
        assert_eq!(d.rows(), &[vec![0, 0], vec![1, 1]]);
    }

    #[test]
    fn single_valued_column_rejected() {
        let err = read_dataset("A,B\ny,n\nn,n\n").unwrap_err();
        assert!(matches!(err, ScoreError::DegenerateColumn(ref c) if c == "B"));
    }

    #[test]
    fn ragged_and_empty_rejected() {
        assert!(matches!(
            read_dataset("A,B\ny,n\nn\n"),
            Err(ScoreError::RaggedRow { line: 3, .. })
        ));
        assert!(matches!(read_dataset("A,B\n"), Err(ScoreError::EmptyDataset)));
        assert!(matches!(read_dataset(""), Err(ScoreError::EmptyDataset)));
    }

    #[test]
    fn all_binary_combinations_round_trip() {
        let mut text = String::from("X,Y,Z\n");
        for i in 0..8u32 {
            let bits: Vec<String> = (0..3).map(|b| ((i >> b) & 1).to_string()).collect();
            text.push_str(&bits.join(","));
            text.push('\n');
        }
        let d = read_dataset(&text).unwrap();
        assert_eq!(d.arities(), &[2, 2, 2]);
        assert_eq!(d.n_rows(), 8);
        // Tokens are "0"/"1" and row 0 is all zeros, so indices equal tokens.
        let again = read_dataset(&d.to_csv()).unwrap();
        assert_eq!(again, d);
        for (i, row) in d.rows().iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                assert_eq!(v, (i >> b) & 1);
            }
        }
    }

    #[test]
    fn crlf_and_blank_lines() {
        let d = read_dataset("A,B\r\na,b\r\n\r\nb,a\r\n").unwrap();
        assert_eq!(d.n_rows(), 2);
    }
}
