//! `key = value` experiment configuration.
//!
//! Grammar: one `key = value` pair per line; blank lines and lines starting
//! with `#` are ignored, as is anything after a `#` on a line. Keys may
//! appear once.
//!
//! Protocol runs recognise `n`, `n_z`, `n_x`, `p_az`, `p_ax` (a rational
//! `a/b` or a decimal such as `0.05`), `seed`, `attack` (built-in id or path
//! to an attack file), `pc_file`, `pk_file` and `trials`. When the matrix
//! files are absent, `r` and `m` request a random full-rank code drawn from
//! the seed. Relative paths resolve against the config file's directory.
//!
//! Bound evaluation recognises `n`, `n_z`, `n_x`, `r`, `m`, `p_az`, `p_ax`,
//! `eps_sec` and `eps_rel`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::Ratio;

use crate::bounds::BoundParams;
use crate::error::{Error, Result};
use crate::gf2::{Gf2Matrix, LinearCodeSpec};
use crate::protocol::{ProtocolConfig, Threshold};
use crate::rng::trial_rng;

/// Stream index reserved for drawing a random code from the seed.
const CODE_STREAM: u64 = u64::MAX;

const PROTOCOL_KEYS: &[&str] = &[
    "n", "n_z", "n_x", "p_az", "p_ax", "seed", "attack", "pc_file", "pk_file", "trials", "r", "m",
];
const BOUND_KEYS: &[&str] = &["n", "n_z", "n_x", "r", "m", "p_az", "p_ax", "eps_sec", "eps_rel"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    &format!("line {}", idx + 1),
                    format!("expected `key = value`, found {line:?}"),
                )
            })?;
            let (k, v) = (k.trim(), v.trim());
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::config(k, "given more than once"));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::config(k, "unknown key")),
            None => Ok(()),
        }
    }

    pub fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key).ok_or_else(|| Error::config(key, "missing"))?;
        raw.parse::<T>()
            .map_err(|e| Error::config(key, format!("{raw:?}: {e}")))
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.required(key).map(Some),
        }
    }

    pub fn threshold(&self, key: &str) -> Result<Threshold> {
        let raw = self.get(key).ok_or_else(|| Error::config(key, "missing"))?;
        parse_threshold(raw).map_err(|m| Error::config(key, m))
    }
}

/// Parses `a/b`, an integer, or a finite decimal into an exact ratio.
pub fn parse_threshold(raw: &str) -> std::result::Result<Threshold, String> {
    let raw = raw.trim();
    let ratio = if let Some((a, b)) = raw.split_once('/') {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad numerator in {raw:?}"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad denominator in {raw:?}"))?;
        if b == 0 {
            return Err(format!("zero denominator in {raw:?}"));
        }
        Ratio::new(a, b)
    } else {
        let (int, frac) = raw.split_once('.').unwrap_or((raw, ""));
        let digits = format!("{int}{frac}");
        if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) || frac.len() > 18 {
            return Err(format!("{raw:?} is not a non-negative decimal or a/b ratio"));
        }
        let num: u64 = digits.parse().map_err(|_| format!("{raw:?} is too large"))?;
        Ratio::new(num, 10u64.pow(frac.len() as u32))
    };
    if ratio > Ratio::from_integer(1) {
        return Err(format!("{raw} is greater than 1"));
    }
    Ok(ratio)
}

/// A fully resolved protocol experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub protocol: ProtocolConfig,
    /// Built-in attack id or resolved path to an attack file.
    pub attack: String,
    pub trials: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_key_values(&KeyValues::parse(&text)?, base)
    }

    pub fn from_key_values(kv: &KeyValues, base: &Path) -> Result<Self> {
        kv.reject_unknown(PROTOCOL_KEYS)?;
        let n: usize = kv.required("n")?;
        let n_z: usize = kv.required("n_z")?;
        let n_x: usize = kv.required("n_x")?;
        let p_az = kv.threshold("p_az")?;
        let p_ax = kv.threshold("p_ax")?;
        let seed: u64 = kv.optional("seed")?.unwrap_or(0);
        let trials: u64 = kv.optional("trials")?.unwrap_or(1);
        let attack = kv.get("attack").unwrap_or("identity").to_string();
        let attack = resolve_attack_path(&attack, base);

        let code = match (kv.get("pc_file"), kv.get("pk_file")) {
            (pc, Some(pk)) => {
                let pk = read_matrix(base, pk, "pk_file")?;
                let pc = match pc {
                    Some(pc) => read_matrix(base, pc, "pc_file")?,
                    None => Gf2Matrix::zero_rows(pk.num_cols()),
                };
                LinearCodeSpec::new(pc, pk).map_err(|e| Error::config("pk_file", e.to_string()))?
            }
            (Some(_), None) => return Err(Error::config("pk_file", "required when pc_file is given")),
            (None, None) => {
                let r: usize = kv.optional("r")?.unwrap_or(0);
                let m: usize = kv
                    .required("m")
                    .map_err(|_| Error::config("pk_file", "give pk_file, or m (and r) for a random code"))?;
                LinearCodeSpec::random(n, r, m, &mut trial_rng(seed, CODE_STREAM))
                    .map_err(|e| Error::config("m", e.to_string()))?
            }
        };
        let protocol = ProtocolConfig::new(n, n_z, n_x, p_az, p_ax, code, seed)?;
        Ok(RunConfig {
            protocol,
            attack,
            trials,
        })
    }
}

fn resolve_attack_path(attack: &str, base: &Path) -> String {
    if crate::attack::CollectiveAttackSpec::builtin(attack).is_ok() {
        return attack.to_string();
    }
    let p = PathBuf::from(attack);
    if p.is_relative() {
        base.join(p).to_string_lossy().into_owned()
    } else {
        attack.to_string()
    }
}

fn read_matrix(base: &Path, rel: &str, field: &str) -> Result<Gf2Matrix> {
    let path = base.join(rel);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::config(field, format!("{}: {e}", path.display())))?;
    Gf2Matrix::parse(&text).map_err(|e| Error::config(field, e.to_string()))
}

pub fn bound_params(kv: &KeyValues) -> Result<BoundParams> {
    kv.reject_unknown(BOUND_KEYS)?;
    let p = BoundParams {
        n: kv.required("n")?,
        n_z: kv.required("n_z")?,
        n_x: kv.required("n_x")?,
        r: kv.optional("r")?.unwrap_or(0),
        m: kv.required("m")?,
        p_az: kv.required("p_az")?,
        p_ax: kv.required("p_ax")?,
        eps_sec: kv.required("eps_sec")?,
        eps_rel: kv.required("eps_rel")?,
    };
    p.validate()?;
    Ok(p)
}
