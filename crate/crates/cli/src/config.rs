//! Run configuration: command-line values layered over an optional flat
//! `key=value` file.

use std::collections::HashMap;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use qba_core::analysis::study::MAX_LEVEL;
use qba_core::{BoxBounds, ConstrainedMethod, ControlVariant};

/// Magnitude used for an unbounded side of the box.
pub const UNBOUNDED: f64 = 1e308;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// Lines `key = value`; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = HashMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value, got {raw:?}", no + 1))?;
            values.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else the file value.
    pub fn pick(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.get(key).map(str::to_string))
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool, String> {
        if flag {
            return Ok(true);
        }
        match self.get(key) {
            None => Ok(false),
            Some(v) => parse_bool(v),
        }
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got {s:?}")),
    }
}

pub fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.trim().parse().map_err(|_| format!("invalid alpha {s:?}"))?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(format!("alpha must be positive and finite, got {s}"));
    }
    Ok(a)
}

pub fn parse_alphas(s: &str) -> Result<Vec<f64>, String> {
    let list: Vec<f64> = s.split(',').map(parse_alpha).collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err("empty alpha list".into());
    }
    Ok(list)
}

/// `a:b`, inclusive, nonempty, `1 <= a <= b <= 7`.
pub fn parse_levels(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("levels must look like a:b, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("invalid level {a:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("invalid level {b:?}"))?;
    if a > b {
        return Err(format!("empty level range {a}:{b}"));
    }
    if b > MAX_LEVEL {
        return Err(format!("level {b} exceeds the cap {MAX_LEVEL}"));
    }
    if a == 0 {
        return Err("level 0 has no interior degrees of freedom".into());
    }
    Ok(a..=b)
}

fn parse_bound(s: &str) -> Result<f64, String> {
    match s.trim() {
        "-inf" => Ok(-UNBOUNDED),
        "inf" | "+inf" => Ok(UNBOUNDED),
        t => t.parse().map_err(|_| format!("invalid bound {t:?}")),
    }
}

/// `lo:hi`; `inf`/`-inf` stand for the unbounded sentinels.
pub fn parse_box(s: &str) -> Result<BoxBounds, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("box must look like lo:hi, got {s:?}"))?;
    BoxBounds::new(parse_bound(lo)?, parse_bound(hi)?).map_err(|e| e.to_string())
}

pub fn parse_variant(s: &str) -> Result<ControlVariant, String> {
    match s {
        "full" => Ok(ControlVariant::Full),
        "p0" => Ok(ControlVariant::PiecewiseConstant),
        _ => Err(format!("variant must be full or p0, got {s:?}")),
    }
}

pub fn parse_method(s: &str) -> Result<ConstrainedMethod, String> {
    match s {
        "fixed-point" => Ok(ConstrainedMethod::FixedPoint),
        "ssn" => Ok(ConstrainedMethod::SemismoothNewton),
        _ => Err(format!("method must be fixed-point or ssn, got {s:?}")),
    }
}

pub fn parse_positive(s: &str, what: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("invalid {what} {s:?}"))?;
    if !(v > 0.0) {
        return Err(format!("{what} must be positive, got {s}"));
    }
    Ok(v)
}

pub fn parse_count(s: &str, what: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|_| format!("invalid {what} {s:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels() {
        assert_eq!(parse_levels("3:6"), Ok(3..=6));
        assert_eq!(parse_levels("4:4"), Ok(4..=4));
        assert!(parse_levels("5:4").is_err());
        assert!(parse_levels("3:8").is_err());
        assert!(parse_levels("0:2").is_err());
        assert!(parse_levels("3-6").is_err());
    }

    #[test]
    fn boxes() {
        let b = parse_box("-0.2:0.2").unwrap();
        assert_eq!((b.lo, b.hi), (-0.2, 0.2));
        assert!(parse_box("-inf:inf").unwrap().is_unbounded());
        assert!(parse_box("1:0").is_err());
        assert!(parse_box("0.5:0.5").is_ok());
    }

    #[test]
    fn alpha_lists() {
        assert_eq!(parse_alphas("1,1e-2,1e-4"), Ok(vec![1.0, 1e-2, 1e-4]));
        assert!(parse_alphas("1,0").is_err());
        assert!(parse_alphas("x").is_err());
    }

    #[test]
    fn file_values_yield_to_flags() {
        let cfg = FileConfig::parse("# run\nalpha = 0.5\nlevels=3:4\nzero_data = true\n\n").unwrap();
        assert_eq!(cfg.pick(None, "alpha").as_deref(), Some("0.5"));
        assert_eq!(cfg.pick(Some("2".into()), "alpha").as_deref(), Some("2"));
        assert_eq!(cfg.flag(false, "zero-data"), Ok(true));
        assert!(FileConfig::parse("novalue").is_err());
    }
}
