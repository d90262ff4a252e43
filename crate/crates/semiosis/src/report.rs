//! Structured pass/fail reports shared by every validator in the crate.
//!
//! Validators never panic on a failed law — they collect one [`CheckItem`]
//! per law with an optional witness, so callers can distinguish "the input
//! is malformed" (an [`Error`](crate::Error)) from "the input is well-formed
//! and the property does not hold" (a failing report item).

use serde::Serialize;
use std::fmt;

/// Outcome of one named check: a law, a constraint, or a single criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    /// Number of cases inspected (triples sampled, cells compared, …).
    pub cases: usize,
    /// Witness or explanation; always present on failure.
    pub detail: Option<String>,
}

/// A bundle of check outcomes about one subject, plus non-fatal warnings.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub subject: String,
    pub items: Vec<CheckItem>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(subject: impl Into<String>) -> Self {
        Report {
            subject: subject.into(),
            items: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn push_pass(&mut self, name: impl Into<String>, cases: usize) {
        self.items.push(CheckItem {
            name: name.into(),
            pass: true,
            cases,
            detail: None,
        });
    }

    pub fn push_fail(&mut self, name: impl Into<String>, cases: usize, detail: impl Into<String>) {
        self.items.push(CheckItem {
            name: name.into(),
            pass: false,
            cases,
            detail: Some(detail.into()),
        });
    }

    pub fn push(&mut self, name: impl Into<String>, pass: bool, cases: usize, detail: Option<String>) {
        self.items.push(CheckItem {
            name: name.into(),
            pass,
            cases,
            detail,
        });
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// All checks passed (warnings do not count against this).
    pub fn passed(&self) -> bool {
        self.items.iter().all(|item| item.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.items.iter().filter(|item| !item.pass)
    }

    /// Find a check outcome by name.
    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|item| item.name == name)
    }

    /// Merge another report in, prefixing its item names.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for mut item in other.items {
            item.name = format!("{prefix}: {}", item.name);
            self.items.push(item);
        }
        for warning in other.warnings {
            self.warnings.push(format!("{prefix}: {warning}"));
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.subject)?;
        for item in &self.items {
            let verdict = if item.pass { "pass" } else { "FAIL" };
            write!(f, "  {}: {} ({} cases)", item.name, verdict, item.cases)?;
            if let Some(detail) = &item.detail {
                write!(f, " — {detail}")?;
            }
            writeln!(f)?;
        }
        for warning in &self.warnings {
            writeln!(f, "  warning: {warning}")?;
        }
        Ok(())
    }
}
