//! Flat check records with a stable text form.
//!
//! Every verification in this crate reduces to "measured value versus
//! claimed bound". Records capture exactly that, one per line, with fixed
//! field order and full-precision floats so report files diff cleanly
//! across runs and across code versions.

use std::io::{self, Write};

/// One measured-versus-claimed comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    /// Stable machine-readable identifier, e.g. "existence-shell/I".
    pub id: String,
    /// Short human framing of what is being compared.
    pub detail: String,
    /// Inputs that parameterize the check, already formatted.
    pub inputs: String,
    pub measured: f64,
    pub bound: f64,
    /// bound - measured; nonnegative iff the check passes by margin.
    pub margin: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// Builds a record whose pass flag and margin follow from
    /// measured <= bound.
    pub fn le(id: impl Into<String>, detail: impl Into<String>, inputs: impl Into<String>, measured: f64, bound: f64) -> Self {
        CheckRecord {
            id: id.into(),
            detail: detail.into(),
            inputs: inputs.into(),
            measured,
            bound,
            margin: bound - measured,
            pass: measured <= bound,
        }
    }

    /// Builds a record whose pass flag and margin follow from
    /// measured >= bound (a lower bound that must be met).
    pub fn ge(id: impl Into<String>, detail: impl Into<String>, inputs: impl Into<String>, measured: f64, bound: f64) -> Self {
        CheckRecord {
            id: id.into(),
            detail: detail.into(),
            inputs: inputs.into(),
            measured,
            bound,
            margin: measured - bound,
            pass: measured >= bound,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "check={} pass={} measured={:.16e} bound={:.16e} margin={:.16e} inputs=[{}] detail=[{}]",
            self.id,
            if self.pass { 1 } else { 0 },
            self.measured,
            self.bound,
            self.margin,
            self.inputs,
            self.detail
        )
    }
}

pub fn write_records<W: Write>(w: &mut W, records: &[CheckRecord]) -> io::Result<()> {
    for r in records {
        writeln!(w, "{}", r.line())?;
    }
    Ok(())
}

pub fn all_pass(records: &[CheckRecord]) -> bool {
    records.iter().all(|r| r.pass)
}
