//! `key = value` configuration files. Blank lines and `#` comments are
//! ignored; keys must be declared by the command, and each may appear once.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use obstacle_core::geometry::{DomainSpec, GammaArc, Point, StarShape};
use obstacle_core::ns_solver::{BumpProfile, SolverOptions};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DOMAIN_KEYS: &[&str] = &["container_radius", "gamma_start", "gamma_end", "rho0", "m0", "m1"];
pub const BUMP_KEYS: &[&str] = &["bump_amplitude", "bump_center", "bump_half_width", "bump_tangential", "bump_normal"];
pub const SOLVER_KEYS: &[&str] = &["mu", "newton_tol", "newton_max_iter"];

pub struct Config {
    dir: PathBuf,
    values: BTreeMap<String, String>,
    /// Hex SHA-256 of the file bytes.
    pub hash: String,
}

impl Config {
    pub fn load(path: &Path, allowed: &[&[&str]]) -> Result<Config, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::config(None, format!("cannot read config {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::config(None, "config is not valid UTF-8".into()))?;
        let allowed: BTreeSet<&str> = allowed.iter().flat_map(|k| k.iter().copied()).collect();
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(None, format!("line {}: expected `key = value`", n + 1)));
            };
            let key = key.trim();
            if !allowed.contains(key) {
                return Err(CliError::config(Some(key), format!("line {}: unknown key `{key}`", n + 1)));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(CliError::config(Some(key), format!("line {}: duplicate key `{key}`", n + 1)));
            }
        }
        let hash = Sha256::digest(&text).iter().map(|b| format!("{b:02x}")).collect();
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Config { dir, values, hash })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| CliError::config(Some(key), format!("`{v}` is not a finite number")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| CliError::config(Some(key), format!("`{v}` is not a count"))))
            .transpose()
            .map(|v| v.unwrap_or(default))
    }

    /// Comma- or whitespace-separated numbers.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.raw(key).map(|v| parse_numbers(key, v)).transpose()
    }

    /// `;`-separated groups of numbers, each of length `width`.
    pub fn groups(&self, key: &str, width: usize) -> Result<Vec<Vec<f64>>, CliError> {
        let Some(v) = self.raw(key) else { return Ok(Vec::new()) };
        v.split(';')
            .map(str::trim)
            .filter(|g| !g.is_empty())
            .map(|g| {
                let nums = parse_numbers(key, g)?;
                if nums.len() != width {
                    return Err(CliError::config(Some(key), format!("`{g}` should have {width} numbers")));
                }
                Ok(nums)
            })
            .collect()
    }

    /// Path relative to the config file's directory; it must exist.
    pub fn existing_path(&self, key: &str) -> Result<Option<PathBuf>, CliError> {
        self.raw(key)
            .map(|v| {
                let p = self.dir.join(v);
                if p.exists() {
                    Ok(p)
                } else {
                    Err(CliError::config(Some(key), format!("file {} does not exist", p.display())))
                }
            })
            .transpose()
    }

    /// `circle cx cy r`, or a shape record `cx cy K a₀..a_K b₁..b_K`.
    pub fn shape(&self, key: &str) -> Result<Option<StarShape>, CliError> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        if v == "none" {
            return Ok(None);
        }
        let bad = |e: String| CliError::config(Some(key), e);
        if let Some(rest) = v.strip_prefix("circle") {
            let n = parse_numbers(key, rest)?;
            if n.len() != 3 {
                return Err(bad("expected `circle cx cy r`".into()));
            }
            return StarShape::circle(Point::new(n[0], n[1]), n[2]).map(Some).map_err(|e| bad(e.to_string()));
        }
        StarShape::from_record(v).map(Some).map_err(|e| bad(e.to_string()))
    }

    pub fn domain(&self, obstacle: Option<StarShape>) -> Result<DomainSpec, CliError> {
        let container = StarShape::circle(Point::ORIGIN, self.f64_or("container_radius", 1.0)?)
            .map_err(|e| CliError::config(Some("container_radius"), e.to_string()))?;
        let gamma = GammaArc::new(self.f64_or("gamma_start", -FRAC_PI_2)?, self.f64_or("gamma_end", FRAC_PI_2)?)
            .map_err(|e| CliError::config(Some("gamma_start"), e.to_string()))?;
        DomainSpec::new(
            container,
            obstacle,
            gamma,
            self.f64_or("rho0", 0.25)?,
            self.f64_or("m0", 1.0)?,
            self.f64_or("m1", 100.0)?,
        )
        .map_err(|e| CliError::config(None, format!("invalid domain: {e}")))
    }

    pub fn bump(&self) -> Result<BumpProfile, CliError> {
        let d = BumpProfile::default();
        Ok(BumpProfile {
            amplitude: self.f64_or("bump_amplitude", d.amplitude)?,
            center: self.f64_or("bump_center", d.center)?,
            half_width: self.f64_or("bump_half_width", d.half_width)?,
            tangential: self.f64_or("bump_tangential", d.tangential)?,
            normal: self.f64_or("bump_normal", d.normal)?,
        })
    }

    pub fn solver(&self) -> Result<SolverOptions, CliError> {
        let d = SolverOptions::default();
        Ok(SolverOptions {
            tol: self.f64_or("newton_tol", d.tol)?,
            max_iter: self.usize_or("newton_max_iter", d.max_iter)?,
            ..d
        })
    }
}

fn parse_numbers(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::config(Some(key), format!("`{s}` is not a finite number")))
        })
        .collect()
}
