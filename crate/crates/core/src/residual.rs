//! Per-iteration data-misfit history of a reconstruction run.
//!
//! Text form: one `<stage> <iter> <residual>` line per entry; lines starting
//! with `#` carry free-form notes (solver warnings and the like).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEntry {
    pub stage: String,
    pub iteration: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualLog {
    entries: Vec<ResidualEntry>,
    notes: Vec<String>,
}

impl ResidualLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an entry.
    ///
    /// # Panics
    /// If `stage` contains whitespace or `iteration` does not exceed the last
    /// index already recorded for `stage`.
    pub fn record(&mut self, stage: &str, iteration: usize, residual: f64) {
        assert!(
            !stage.is_empty() && !stage.contains(char::is_whitespace),
            "stage label {stage:?} must be a single token"
        );
        if let Some(last) = self.last_iteration(stage) {
            assert!(
                iteration > last,
                "iteration {iteration} of stage {stage} does not follow {last}"
            );
        }
        self.entries.push(ResidualEntry {
            stage: stage.to_owned(),
            iteration,
            residual,
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        let text: String = text.into();
        log::warn!("{text}");
        self.notes.push(text.replace('\n', " "));
    }

    pub fn entries(&self) -> &[ResidualEntry] {
        &self.entries
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn stage(&self, stage: &str) -> impl Iterator<Item = &ResidualEntry> + '_ {
        let stage = stage.to_owned();
        self.entries.iter().filter(move |e| e.stage == stage)
    }

    pub fn last_iteration(&self, stage: &str) -> Option<usize> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.stage == stage)
            .map(|e| e.iteration)
    }

    pub fn extend(&mut self, other: ResidualLog) {
        for e in other.entries {
            self.record(&e.stage, e.iteration, e.residual);
        }
        self.notes.extend(other.notes);
    }

    /// Copies `other` with every stage label prefixed by `prefix`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: ResidualLog) {
        for e in other.entries {
            self.record(&format!("{prefix}{}", e.stage), e.iteration, e.residual);
        }
        self.notes.extend(other.notes);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for note in &self.notes {
            let _ = writeln!(out, "# {note}");
        }
        for e in &self.entries {
            let _ = writeln!(out, "{} {} {:e}", e.stage, e.iteration, e.residual);
        }
        out
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut log = ResidualLog::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(note) = line.strip_prefix('#') {
                log.notes.push(note.trim().to_owned());
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [stage, iter, value] = fields[..] else {
                return Err(format!("line {}: expected 3 fields", lineno + 1));
            };
            let iteration: usize = iter
                .parse()
                .map_err(|e| format!("line {}: iteration: {e}", lineno + 1))?;
            let residual: f64 = value
                .parse()
                .map_err(|e| format!("line {}: residual: {e}", lineno + 1))?;
            if log.last_iteration(stage).is_some_and(|last| iteration <= last) {
                return Err(format!("line {}: iteration out of order", lineno + 1));
            }
            log.record(stage, iteration, residual);
        }
        Ok(log)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text).map_err(|reason| Error::Format {
            path: path.to_owned(),
            reason,
        })
    }
}
