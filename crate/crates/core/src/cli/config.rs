//! Run configuration: defaults, JSON config files, the output-directory
//! environment override and command-line flags, in increasing priority.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::precision::{DOUBLE_BITS, MAX_BITS};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "ZONAL_SOBOLEV_OUT";

pub const MAX_BAND_LIMIT: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Degrees as an explicit list or an inclusive range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EllSpec {
    List(Vec<usize>),
    Text(String),
}

impl EllSpec {
    /// Accepts "a..b", "a-b", "a,b,c" and the empty string.
    pub fn degrees(&self) -> Result<Vec<usize>> {
        let text = match self {
            EllSpec::List(v) => return Ok(v.clone()),
            EllSpec::Text(s) => s.trim(),
        };
        if text.is_empty() {
            return Ok(Vec::new());
        }
        let bad = || Error::Config(format!("cannot parse degree list '{text}'"));
        for sep in ["..=", "..", "-"] {
            if let Some((a, b)) = text.split_once(sep) {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                return Ok((a..=b).collect());
            }
        }
        text.split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|_| bad()))
            .collect()
    }
}

/// Cap radii as an explicit list or "log:a:b:n" / "lin:a:b:n".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TGridSpec {
    List(Vec<f64>),
    Text(String),
}

impl TGridSpec {
    pub fn radii(&self) -> Result<Vec<f64>> {
        let text = match self {
            TGridSpec::List(v) => return check_radii(v.clone()),
            TGridSpec::Text(s) => s.trim(),
        };
        let bad = || Error::Config(format!("cannot parse t-grid '{text}'"));
        if text.is_empty() {
            return Ok(Vec::new());
        }
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() == 4 && (parts[0] == "log" || parts[0] == "lin") {
            let a: f64 = parts[1].parse().map_err(|_| bad())?;
            let b: f64 = parts[2].parse().map_err(|_| bad())?;
            let n: usize = parts[3].parse().map_err(|_| bad())?;
            if n == 0 || !(a > 0.0) || !(b >= a) {
                return Err(bad());
            }
            let v = (0..n)
                .map(|i| {
                    let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    if parts[0] == "log" {
                        (a.ln() + f * (b.ln() - a.ln())).exp()
                    } else {
                        a + f * (b - a)
                    }
                })
                .collect();
            return check_radii(v);
        }
        let v = text
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<f64>>>()?;
        check_radii(v)
    }
}

fn check_radii(v: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(t) = v.iter().find(|t| !(**t > 0.0 && **t <= std::f64::consts::PI)) {
        return Err(Error::Config(format!("cap radius {t} outside (0, π]")));
    }
    Ok(v)
}

/// Fully resolved configuration of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub d: usize,
    pub band_limit: usize,
    pub precision_bits: u32,
    pub alpha: Vec<f64>,
    /// Degrees; absent means 1..=band_limit.
    pub ell: Option<EllSpec>,
    pub t_grid: TGridSpec,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: 3,
            band_limit: 128,
            precision_bits: DOUBLE_BITS,
            alpha: vec![0.5, 1.0, 1.5, 2.0, 3.0],
            ell: None,
            t_grid: TGridSpec::Text("log:1e-3:3:16".into()),
            seed: 20240601,
            output_dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

/// Keys a config file may set; everything is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub d: Option<usize>,
    pub band_limit: Option<usize>,
    pub precision_bits: Option<u32>,
    pub alpha: Option<Vec<f64>>,
    pub ell: Option<EllSpec>,
    pub t_grid: Option<TGridSpec>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Values given on the command line.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// JSON file with flat RunConfig keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sphere S^{d-1} lives in R^d
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub band_limit: Option<usize>,
    /// Comma-separated smoothness indices
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Option<Vec<f64>>,
    /// Degrees: "a..b", "a-b" or "a,b,c"
    #[arg(long)]
    pub ell: Option<String>,
    /// Cap radii: "log:a:b:n", "lin:a:b:n" or "t1,t2,..."
    #[arg(long)]
    pub t_grid: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub precision_bits: Option<u32>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn resolve(flags: &Overrides, env_out: Option<PathBuf>) -> Result<Self> {
        let mut c = RunConfig::default();
        if let Some(path) = &flags.config {
            let f = ConfigFile::load(path)?;
            macro_rules! take {
                ($($k:ident),*) => { $(if let Some(v) = f.$k { c.$k = v; })* };
            }
            take!(d, band_limit, precision_bits, alpha, t_grid, seed, output_dir, format);
            if f.ell.is_some() {
                c.ell = f.ell;
            }
        }
        if let Some(dir) = env_out {
            c.output_dir = dir;
        }
        macro_rules! flag {
            ($($k:ident),*) => { $(if let Some(v) = flags.$k.clone() { c.$k = v; })* };
        }
        flag!(d, band_limit, precision_bits, alpha, seed, format);
        if let Some(e) = &flags.ell {
            c.ell = Some(EllSpec::Text(e.clone()));
        }
        if let Some(t) = &flags.t_grid {
            c.t_grid = TGridSpec::Text(t.clone());
        }
        if let Some(o) = &flags.out {
            c.output_dir = o.clone();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Config(format!("d = {} must be at least 2", self.d)));
        }
        if self.band_limit > MAX_BAND_LIMIT {
            return Err(Error::Config(format!(
                "band limit {} exceeds {MAX_BAND_LIMIT}",
                self.band_limit
            )));
        }
        if !(DOUBLE_BITS..=MAX_BITS).contains(&self.precision_bits) {
            return Err(Error::Config(format!(
                "precision {} bits outside [{DOUBLE_BITS}, {MAX_BITS}]",
                self.precision_bits
            )));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::Config(format!("smoothness α = {a} must be positive")));
        }
        if let Some(l) = self.degrees()?.iter().find(|l| **l > self.band_limit) {
            return Err(Error::Config(format!("degree {l} above band limit {}", self.band_limit)));
        }
        self.t_grid.radii()?;
        Ok(())
    }

    pub fn degrees(&self) -> Result<Vec<usize>> {
        match &self.ell {
            Some(spec) => spec.degrees(),
            None => Ok((1..=self.band_limit).collect()),
        }
    }

    /// SHA-256 of the configuration without the output directory, so the
    /// same run written elsewhere carries the same hash.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Some(m) = v.as_object_mut() {
            m.remove("output_dir");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_specs() {
        assert_eq!(EllSpec::Text("1..4".into()).degrees().unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(EllSpec::Text("2-3".into()).degrees().unwrap(), vec![2, 3]);
        assert_eq!(EllSpec::Text("5, 7".into()).degrees().unwrap(), vec![5, 7]);
        assert!(EllSpec::Text("".into()).degrees().unwrap().is_empty());
        assert!(EllSpec::Text("4..1".into()).degrees().is_err());
        assert!(EllSpec::Text("x".into()).degrees().is_err());
    }

    #[test]
    fn t_grid_specs() {
        let v = TGridSpec::Text("log:1e-3:1:4".into()).radii().unwrap();
        assert_eq!(v.len(), 4);
        assert!((v[1] - 1e-2).abs() < 1e-15 && (v[3] - 1.0).abs() < 1e-15);
        let l = TGridSpec::Text("lin:0.5:1.5:3".into()).radii().unwrap();
        assert_eq!(l, vec![0.5, 1.0, 1.5]);
        assert!(TGridSpec::Text("0.1,5".into()).radii().is_err());
        assert!(TGridSpec::Text("log:0:1:3".into()).radii().is_err());
    }

    #[test]
    fn precedence_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"d": 4, "seed": 9, "output_dir": "from_file"}"#).unwrap();
        let flags = Overrides { config: Some(path.clone()), seed: Some(11), ..Default::default() };
        let c = RunConfig::resolve(&flags, Some(PathBuf::from("from_env"))).unwrap();
        assert_eq!((c.d, c.seed), (4, 11));
        assert_eq!(c.output_dir, PathBuf::from("from_env"));
        let flags = Overrides { config: Some(path), out: Some("flag".into()), ..Default::default() };
        assert_eq!(RunConfig::resolve(&flags, None).unwrap().output_dir, PathBuf::from("flag"));

        let big = Overrides { band_limit: Some(2048), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&big, None), Err(Error::Config(_))));
        let bits = Overrides { precision_bits: Some(40), ..Default::default() };
        assert!(RunConfig::resolve(&bits, None).is_err());
        let neg = Overrides { alpha: Some(vec![-1.0]), ..Default::default() };
        assert!(RunConfig::resolve(&neg, None).is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn malformed_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, "{ not json").unwrap();
        let flags = Overrides { config: Some(path), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&flags, None), Err(Error::Config(_))));
    }
}
