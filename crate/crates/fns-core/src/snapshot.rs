//! Plain-text snapshot format for spectral fields.
//!
//! Layout: a short header, then one line per mode in lexicographic order
//! with three integer components followed by six floats (re, im per velocity
//! component). Floats are printed with 17 significant digits, so a write and
//! read round-trips every f64 bit for bit. The format carries its own mode
//! count plus an `end` trailer; the count catches missing lines and the
//! trailer catches a file cut off mid-record, where the surviving prefix of
//! the last number would otherwise still parse.
//!
//! ```text
//! fns-snapshot v1
//! radius 8.0000000000000000e0
//! hermitian 1
//! seed 42            (optional)
//! kind random_ball   (optional)
//! modes 2109
//! -8 0 0 1.2...e-5 -3.4...e-6 ... (six floats)
//! end
//! ```

use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::field::{Frequency, SpectralField};

pub const FORMAT_TAG: &str = "fns-snapshot v1";

/// Tolerance under which a stored field is labeled Hermitian in its header.
const HERMITIAN_LABEL_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("snapshot parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Optional provenance carried in the header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnapshotMeta {
    pub seed: Option<u64>,
    pub kind: Option<String>,
    pub hermitian: Option<bool>,
}

pub fn write_snapshot<W: Write>(
    w: &mut W,
    field: &SpectralField,
    meta: &SnapshotMeta,
) -> io::Result<()> {
    writeln!(w, "{FORMAT_TAG}")?;
    writeln!(w, "radius {:.16e}", field.radius())?;
    let hermitian = meta
        .hermitian
        .unwrap_or_else(|| field.hermitian_defect() <= HERMITIAN_LABEL_TOL);
    writeln!(w, "hermitian {}", if hermitian { 1 } else { 0 })?;
    if let Some(seed) = meta.seed {
        writeln!(w, "seed {seed}")?;
    }
    if let Some(kind) = &meta.kind {
        writeln!(w, "kind {kind}")?;
    }
    writeln!(w, "modes {}", field.len())?;
    for (xi, v) in field.iter() {
        let [x, y, z] = xi.components();
        writeln!(
            w,
            "{x} {y} {z} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
            v[0].re, v[0].im, v[1].re, v[1].im, v[2].re, v[2].im
        )?;
    }
    writeln!(w, "end")?;
    Ok(())
}

pub fn read_snapshot<R: BufRead>(r: &mut R) -> Result<(SpectralField, SnapshotMeta), SnapshotError> {
    let mut lines = r.lines().enumerate();
    let mut next_line = |what: &str| -> Result<(usize, String), SnapshotError> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(SnapshotError::Parse {
                line: i + 1,
                msg: e.to_string(),
            }),
            None => Err(SnapshotError::Parse {
                line: 0,
                msg: format!("unexpected end of file, expected {what}"),
            }),
        }
    };

    let (ln, tag) = next_line("format tag")?;
    if tag.trim() != FORMAT_TAG {
        return Err(SnapshotError::Parse {
            line: ln,
            msg: format!("unknown format tag {tag:?}"),
        });
    }
    let mut meta = SnapshotMeta::default();
    let mut radius: Option<f64> = None;
    // Header: key value lines until "modes", whose value ends the loop.
    let modes: usize = loop {
        let (ln, line) = next_line("header line")?;
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or("");
        let val = parts.next().unwrap_or("");
        let parse_err = |msg: String| SnapshotError::Parse { line: ln, msg };
        match key {
            "radius" => {
                radius = Some(val.parse().map_err(|e| parse_err(format!("bad radius: {e}")))?)
            }
            "hermitian" => {
                meta.hermitian = Some(match val {
                    "1" => true,
                    "0" => false,
                    other => return Err(parse_err(format!("bad hermitian flag {other:?}"))),
                })
            }
            "seed" => meta.seed = Some(val.parse().map_err(|e| parse_err(format!("bad seed: {e}")))?),
            "kind" => meta.kind = Some(val.to_string()),
            "modes" => break val.parse().map_err(|e| parse_err(format!("bad mode count: {e}")))?,
            other => return Err(parse_err(format!("unknown header key {other:?}"))),
        }
    };
    let radius = radius.ok_or(SnapshotError::Parse {
        line: 0,
        msg: "header missing radius".into(),
    })?;

    let mut field = SpectralField::new(radius);
    for _ in 0..modes {
        let (ln, line) = next_line("mode record")?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 9 {
            return Err(SnapshotError::Parse {
                line: ln,
                msg: format!("expected 9 fields, got {}", parts.len()),
            });
        }
        let ints: Result<Vec<i64>, _> = parts[..3].iter().map(|s| s.parse()).collect();
        let floats: Result<Vec<f64>, _> = parts[3..].iter().map(|s| s.parse()).collect();
        let (ints, floats) = match (ints, floats) {
            (Ok(i), Ok(f)) => (i, f),
            _ => {
                return Err(SnapshotError::Parse {
                    line: ln,
                    msg: "malformed mode record".into(),
                })
            }
        };
        let xi = Frequency::new([ints[0], ints[1], ints[2]]).ok_or(SnapshotError::Parse {
            line: ln,
            msg: "zero mode in snapshot".into(),
        })?;
        field.insert(
            xi,
            [
                Complex64::new(floats[0], floats[1]),
                Complex64::new(floats[2], floats[3]),
                Complex64::new(floats[4], floats[5]),
            ],
        );
    }
    if field.len() != modes {
        return Err(SnapshotError::Parse {
            line: 0,
            msg: "duplicate modes in snapshot".into(),
        });
    }
    let (ln, trailer) = next_line("end trailer")?;
    if trailer.trim() != "end" {
        return Err(SnapshotError::Parse {
            line: ln,
            msg: format!("expected end trailer, got {trailer:?}"),
        });
    }
    Ok((field, meta))
}

pub fn save_snapshot(
    path: &std::path::Path,
    field: &SpectralField,
    meta: &SnapshotMeta,
) -> Result<(), SnapshotError> {
    let mut buf = Vec::new();
    write_snapshot(&mut buf, field, meta)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_snapshot(path: &std::path::Path) -> Result<(SpectralField, SnapshotMeta), SnapshotError> {
    let file = std::fs::File::open(path)?;
    let mut reader = io::BufReader::new(file);
    read_snapshot(&mut reader)
}
