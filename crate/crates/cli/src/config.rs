//! Config-file support: each subcommand accepts `--config file.json`
//! holding the same keys as its long flags (dashes as underscores).
//! Explicit flags win over file values; defaults fill whatever is left.

use std::path::PathBuf;

use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

pub fn load_overrides<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> CliResult<T> {
    let Some(p) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(p)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))
}

/// Flag value, else config-file value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag value, else config-file value, else a configuration error
/// naming the missing flag.
pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> CliResult<T> {
    flag.or(file)
        .ok_or_else(|| CliError::Config(format!("--{name} is required (flag or config file)")))
}

/// "lo:hi" or a single value, for SNR training ranges.
pub fn parse_snr_range(s: &str) -> CliResult<(f64, f64)> {
    let parse = |part: &str| -> CliResult<f64> {
        part.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad SNR value '{part}' in '{s}'")))
    };
    match s.split_once(':') {
        Some((lo, hi)) => {
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if lo > hi {
                return Err(CliError::Config(format!("empty SNR range '{s}'")));
            }
            Ok((lo, hi))
        }
        None => {
            let v = parse(s)?;
            Ok((v, v))
        }
    }
}

pub fn parse_on_off(s: &str, name: &str) -> CliResult<bool> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(CliError::Config(format!(
            "--{name} must be 'on' or 'off', got '{other}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_range_forms() {
        assert_eq!(parse_snr_range("20").unwrap(), (20.0, 20.0));
        assert_eq!(parse_snr_range("0:20").unwrap(), (0.0, 20.0));
        assert_eq!(parse_snr_range("-5:5").unwrap(), (-5.0, 5.0));
        assert!(parse_snr_range("20:0").is_err());
        assert!(parse_snr_range("abc").is_err());
    }

    #[test]
    fn precedence_is_flag_then_file_then_default() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick::<i32>(None, None, 3), 3);
        assert!(require(None::<i32>, None, "thing").is_err());
    }
}
