//! Data ingestion, BDeu local scores, parent-set pruning and score files.

mod bdeu;
mod dataset;
mod io;
mod table;

pub use bdeu::bdeu_local_score;
pub use dataset::{read_dataset, Dataset};
pub use io::{read_score_file, write_score_file};
pub use table::{enumerate_scores, prune, LocalScoreTable, ScoreEntry, DEFAULT_ENTRY_BUDGET};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("column `{0}` takes a single value")]
    DegenerateColumn(String),
    #[error("invalid dataset: {0}")]
    Data(String),
    #[error("invalid score table: {0}")]
    Table(String),
    #[error("{entries} candidate families exceed the budget of {budget}")]
    Budget { entries: usize, budget: usize },
    #[error("score file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("score file line {line}: unknown variable `{name}`")]
    UnknownVariable { line: usize, name: String },
    #[error("duplicate parent set {parents:?} for `{child}`")]
    DuplicateParentSet { child: String, parents: Vec<String> },
}
