//! Layered experiment configuration.
//!
//! A config file is TOML. Top-level scalar keys apply to every experiment;
//! a table named after the experiment (`[dominance]`, `[scaling]`, ...)
//! overrides them; command-line flags override both. The merged table is
//! deserialized into the experiment's parameter struct, whose own serde
//! defaults fill whatever is left.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

/// Keys that control where results go; they never enter the content hash.
pub const OUTPUT_KEYS: [&str; 3] = ["json", "csv", "json_out"];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    /// Print the full record as JSON on stdout.
    pub json: bool,
    pub csv: Option<PathBuf>,
    pub json_out: Option<PathBuf>,
}

pub fn load_file(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse::<Table>().with_context(|| format!("parsing {}", path.display()))
}

fn to_table<T: Serialize>(value: &T) -> Result<Table> {
    match Value::try_from(value).context("serializing flags")? {
        Value::Table(t) => Ok(t),
        other => bail!("expected a table of flags, got {other}"),
    }
}

/// Merged configuration for one experiment.
pub struct Effective<P> {
    pub params: P,
    pub output: OutputSpec,
    /// Every parameter after defaults, as echoed into results.
    pub echo: serde_json::Value,
}

/// Merges file, section and flags and deserializes the result. `flags` and
/// `output_flags` serialize with `None` fields omitted, so unset flags never
/// mask file values. A `false` boolean flag is treated as unset.
pub fn resolve<P, F, O>(file: Option<&Table>, section: &str, flags: &F, output_flags: &O) -> Result<Effective<P>>
where
    P: DeserializeOwned + Serialize,
    F: Serialize,
    O: Serialize,
{
    let mut merged = Table::new();
    if let Some(file) = file {
        for (k, v) in file {
            if !v.is_table() {
                merged.insert(k.clone(), v.clone());
            }
        }
        if let Some(sec) = file.get(section) {
            let sec = sec.as_table().with_context(|| format!("`{section}` in the config file must be a table"))?;
            for (k, v) in sec {
                merged.insert(k.clone(), v.clone());
            }
        }
    }
    for t in [to_table(flags)?, to_table(output_flags)?] {
        for (k, v) in t {
            if v.as_bool() == Some(false) && merged.contains_key(&k) {
                continue;
            }
            merged.insert(k, v);
        }
    }
    let mut output_part = Table::new();
    for key in OUTPUT_KEYS {
        if let Some(v) = merged.remove(key) {
            output_part.insert(key.to_string(), v);
        }
    }
    merged.remove("workers");
    let output: OutputSpec = Value::Table(output_part).try_into().context("output settings")?;
    let params: P = Value::Table(merged).try_into().with_context(|| format!("invalid `{section}` configuration"))?;
    let echo = serde_json::to_value(&params).context("echoing configuration")?;
    Ok(Effective { params, output, echo })
}

/// Worker count from the file when no flag or environment value was given.
pub fn file_workers(file: Option<&Table>) -> Option<usize> {
    file?.get("workers")?.as_integer().map(|w| w.max(1) as usize)
}

pub fn require_seed(seed: Option<u64>) -> Result<u64> {
    match seed {
        Some(s) => Ok(s),
        None => bail!("a seed is required (use --seed or `seed = ...` in the config file)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    #[serde(default)]
    struct P {
        n: usize,
        #[serde(rename = "B")]
        b: f64,
        seed: Option<u64>,
        x: Vec<f64>,
    }

    impl Default for P {
        fn default() -> Self {
            Self { n: 10, b: 1.0, seed: None, x: vec![1.0] }
        }
    }

    #[derive(Serialize)]
    struct F {
        n: Option<usize>,
        #[serde(rename = "B")]
        b: Option<f64>,
    }

    #[test]
    fn flags_override_section_override_top_level() {
        let file: Table =
            "seed = 3\nn = 50\nB = 2\n[dominance]\nn = 70\nx = [0.5, 1]\ncsv = 'a.csv'\n".parse().unwrap();
        let out = OutputSpec::default();
        let e: Effective<P> = resolve(Some(&file), "dominance", &F { n: None, b: Some(4.0) }, &out).unwrap();
        assert_eq!(e.params, P { n: 70, b: 4.0, seed: Some(3), x: vec![0.5, 1.0] });
        assert_eq!(e.output.csv, Some(PathBuf::from("a.csv")));
        let e: Effective<P> = resolve(Some(&file), "scaling", &F { n: Some(5), b: None }, &out).unwrap();
        assert_eq!(e.params, P { n: 5, b: 2.0, seed: Some(3), x: vec![1.0] });
        assert!(e.echo.get("csv").is_none());
    }

    #[test]
    fn defaults_without_file() {
        let e: Effective<P> = resolve(None, "x", &F { n: None, b: None }, &OutputSpec::default()).unwrap();
        assert_eq!(e.params, P::default());
        assert!(require_seed(e.params.seed).is_err());
    }
}
