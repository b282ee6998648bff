use std::collections::HashMap;
use std::fmt::Write as _;

use super::{LocalScoreTable, ScoreEntry, ScoreError};

/// Shortest round-tripping decimal, padded to at least six decimal places.
fn format_score(score: f64) -> String {
    let mut s = format!("{}", score);
    let decimals = s.find('.').map(|dot| s.len() - dot - 1);
    match decimals {
        None => s.push_str(".000000"),
        Some(d) if d < 6 => s.extend(std::iter::repeat_n('0', 6 - d)),
        Some(_) => {}
    }
    s
}

/// Serializes a table in the plain-text score-file format: a variable count,
/// then one block per variable (`name k` followed by `k` lines of
/// `score p parent_1 ... parent_p`).
pub fn write_score_file(table: &LocalScoreTable) -> String {
    let names = table.names();
    let mut out = String::new();
    let _ = writeln!(out, "{}", table.n_vars());
    for (u, list) in table.all_entries().iter().enumerate() {
        let _ = writeln!(out, "{} {}", names[u], list.len());
        for e in list {
            let _ = write!(out, "{} {}", format_score(e.score), e.parents.len());
            for &p in &e.parents {
                let _ = write!(out, " {}", names[p]);
            }
            out.push('\n');
        }
    }
    out
}

struct Block<'a> {
    name: &'a str,
    line: usize,
    families: Vec<(usize, f64, Vec<&'a str>)>,
}

fn bad(line: usize, message: impl Into<String>) -> ScoreError {
    ScoreError::Format {
        line,
        message: message.into(),
    }
}

/// Parses a score file. Parent names may refer to variables whose block
/// appears later in the file.
pub fn read_score_file(text: &str) -> Result<LocalScoreTable, ScoreError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (first, header) = lines.next().ok_or_else(|| bad(1, "empty score file"))?;
    let n: usize = header
        .parse()
        .map_err(|_| bad(first, format!("expected variable count, found `{header}`")))?;

    let mut blocks: Vec<Block> = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, text) = lines
            .next()
            .ok_or_else(|| bad(0, format!("expected {n} variable blocks, found {}", blocks.len())))?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(bad(line, format!("expected `name count`, found `{text}`")));
        }
        let k: usize = tokens[1]
            .parse()
            .map_err(|_| bad(line, format!("bad parent-set count `{}`", tokens[1])))?;
        let mut families = Vec::with_capacity(k);
        for _ in 0..k {
            let (fline, ftext) = lines
                .next()
                .ok_or_else(|| bad(line, format!("{} declares {k} parent sets; file ended early", tokens[0])))?;
            let parts: Vec<&str> = ftext.split_whitespace().collect();
            if parts.len() < 2 {
                return Err(bad(fline, format!("expected `score count parents...`, found `{ftext}`")));
            }
            let score: f64 = parts[0]
                .parse()
                .map_err(|_| bad(fline, format!("bad score `{}`", parts[0])))?;
            let p: usize = parts[1]
                .parse()
                .map_err(|_| bad(fline, format!("bad parent count `{}`", parts[1])))?;
            if parts.len() != 2 + p {
                return Err(bad(
                    fline,
                    format!("declared {p} parents but listed {}", parts.len() - 2),
                ));
            }
            families.push((fline, score, parts[2..].to_vec()));
        }
        blocks.push(Block {
            name: tokens[0],
            line,
            families,
        });
    }
    if let Some((line, text)) = lines.next() {
        return Err(bad(line, format!("unexpected trailing content `{text}`")));
    }

    let mut index: HashMap<&str, usize> = HashMap::with_capacity(n);
    for (u, b) in blocks.iter().enumerate() {
        if index.insert(b.name, u).is_some() {
            return Err(bad(b.line, format!("variable `{}` declared twice", b.name)));
        }
    }

    let mut entries = Vec::with_capacity(n);
    for b in &blocks {
        let mut list = Vec::with_capacity(b.families.len());
        for (line, score, parents) in &b.families {
            let parents = parents
                .iter()
                .map(|p| {
                    index
                        .get(p)
                        .copied()
                        .ok_or_else(|| ScoreError::UnknownVariable {
                            line: *line,
                            name: p.to_string(),
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            list.push(ScoreEntry {
                parents,
                score: *score,
            });
        }
        entries.push(list);
    }
    let names = blocks.iter().map(|b| b.name.to_string()).collect();
    LocalScoreTable::new(names, entries)
}
