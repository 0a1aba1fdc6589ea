use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::IoError;
use crate::routing::{Field, RoutingError};

/// Total rejection-sampling draws allowed when generating a field.
pub const MAX_PACKING_ATTEMPTS: usize = 100_000;

/// Parses target positions from CSV text: one `x,y` pair per line, `#`
/// comments, blank lines ignored, optional `x,y` header.
pub fn parse_field(text: &str) -> Result<Field, IoError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut targets = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = row.split(',').map(str::trim).collect();
        if targets.is_empty() && cols.len() == 2 && cols[0].eq_ignore_ascii_case("x") && cols[1].eq_ignore_ascii_case("y") {
            continue;
        }
        if cols.len() != 2 {
            return Err(IoError::Parse {
                line,
                message: format!("expected 2 columns \"x,y\", found {}", cols.len()),
            });
        }
        let num = |s: &str| -> Result<f64, IoError> {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(IoError::Parse {
                    line,
                    message: format!("\"{s}\" is not a finite number"),
                }),
            }
        };
        targets.push([num(cols[0])?, num(cols[1])?]);
        lines.push(line);
    }
    if targets.len() < 2 {
        return Err(IoError::Field(format!("at least 2 targets are required, found {}", targets.len())));
    }
    Field::new(targets).map_err(|e| match e {
        RoutingError::DuplicateTarget(i, j) => IoError::Field(format!("targets on lines {} and {} coincide", lines[i], lines[j])),
        other => IoError::Field(other.to_string()),
    })
}

pub fn read_field(path: &Path) -> Result<Field, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    parse_field(&text)
}

/// Field CSV text with an optional leading comment.
pub fn write_field(targets: &[[f64; 2]], comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str("x,y\n");
    for t in targets {
        out.push_str(&format!("{},{}\n", t[0], t[1]));
    }
    out
}

/// Uniform random targets in `[0, width] × [0, height]`, pairwise at least
/// `min_separation` apart, by rejection sampling.
pub fn generate_field(seed: u64, count: usize, width: f64, height: f64, min_separation: f64) -> Result<Vec<[f64; 2]>, IoError> {
    if count < 2 {
        return Err(IoError::Config(format!("count must be at least 2, got {count}")));
    }
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(IoError::Config("width and height must be positive".into()));
    }
    if !(min_separation >= 0.0 && min_separation.is_finite()) {
        return Err(IoError::Config("min_separation must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(count);
    let mut attempts = 0;
    while pts.len() < count {
        if attempts == MAX_PACKING_ATTEMPTS {
            return Err(IoError::PackingInfeasible {
                count,
                min_separation,
                attempts,
            });
        }
        attempts += 1;
        let p = [rng.random_range(0.0..=width), rng.random_range(0.0..=height)];
        // zero separation still rejects exact duplicates
        let ok = pts.iter().all(|q| {
            let d = (p[0] - q[0]).hypot(p[1] - q[1]);
            d >= min_separation && d > 0.0
        });
        if ok {
            pts.push(p);
        }
    }
    Ok(pts)
}
