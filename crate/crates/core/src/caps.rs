//! Size guards for the exponential routes (dense oracle, partition
//! enumeration, series products).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ENV_ORACLE_LEVEL: &str = "QUASINIL_ORACLE_CAP";
pub const ENV_ALPHA_P: &str = "QUASINIL_ALPHA_CAP";
pub const ENV_SERIES_LEN: &str = "QUASINIL_SERIES_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Largest tensor level realized as a dense `2^N x 2^N` matrix.
    pub oracle_level: usize,
    /// Largest `p` for which alternating partitions are enumerated.
    pub alpha_p: usize,
    /// Largest number of factors kept in truncated infinite products.
    pub series_len: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            oracle_level: 10,
            alpha_p: 8,
            series_len: 60,
        }
    }
}

impl Caps {
    /// Defaults overridden by the `QUASINIL_*_CAP` environment variables.
    pub fn from_env() -> Result<Self> {
        let mut caps = Caps::default();
        for (key, slot) in [
            (ENV_ORACLE_LEVEL, &mut caps.oracle_level),
            (ENV_ALPHA_P, &mut caps.alpha_p),
            (ENV_SERIES_LEN, &mut caps.series_len),
        ] {
            if let Ok(v) = std::env::var(key) {
                *slot = v.trim().parse().map_err(|_| {
                    Error::Parse(format!("{key}={v:?} is not a nonnegative integer"))
                })?;
            }
        }
        Ok(caps)
    }

    pub fn check_oracle(&self, level: usize) -> Result<()> {
        if level > self.oracle_level {
            return Err(Error::CapExceeded {
                what: "dense oracle level N",
                requested: level,
                cap: self.oracle_level,
                estimate: format!(
                    "a dense complex matrix would need about {} MiB",
                    dense_mib(level)
                ),
            });
        }
        Ok(())
    }

    pub fn check_alpha(&self, p: usize) -> Result<()> {
        if p > self.alpha_p {
            return Err(Error::CapExceeded {
                what: "partition size p",
                requested: p,
                cap: self.alpha_p,
                estimate: format!(
                    "enumeration walks set partitions of {} elements (Bell number ~ 10^{:.0})",
                    2 * p,
                    log10_bell(2 * p)
                ),
            });
        }
        Ok(())
    }

    pub fn check_series(&self, len: usize) -> Result<()> {
        if len > self.series_len {
            return Err(Error::CapExceeded {
                what: "series length",
                requested: len,
                cap: self.series_len,
                estimate: "raise the series cap to keep more factors".to_string(),
            });
        }
        Ok(())
    }
}

fn dense_mib(level: usize) -> f64 {
    let dim = 2f64.powi(level as i32);
    dim * dim * 16.0 / (1024.0 * 1024.0)
}

/// log10 of the Bell number B(n), via the Bell triangle in floating point.
fn log10_bell(n: usize) -> f64 {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for v in &row {
            let prev = *next.last().unwrap();
            next.push(prev + v);
        }
        row = next;
    }
    row[0].log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let caps = Caps::default();
        assert_eq!(
            (caps.oracle_level, caps.alpha_p, caps.series_len),
            (10, 8, 60)
        );
        assert!(caps.check_oracle(10).is_ok());
        assert!(caps.check_oracle(11).is_err());
        assert!(caps.check_alpha(30).is_err());
    }

    #[test]
    fn bell_numbers() {
        // B(10) = 115975
        assert!((log10_bell(10) - 115975f64.log10()).abs() < 1e-9);
    }
}
