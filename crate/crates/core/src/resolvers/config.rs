use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const RESOLVER_NAMES: &[&str] = &["pinv", "dls", "adls", "edls", "jparse"];

/// Resolver selection with its parameters.
///
/// JSON form: `{"algorithm": "dls", "params": {"lambda": 0.17}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "params", rename_all = "lowercase")]
pub enum ResolverConfig {
    Pinv {},
    Dls {
        lambda: f64,
    },
    Adls {
        lambda0: f64,
        w0: f64,
    },
    Edls {
        sigma_minus: f64,
        sigma_plus: f64,
        beta: f64,
    },
    Jparse {
        gamma: f64,
        #[serde(default)]
        a: f64,
    },
}

impl ResolverConfig {
    pub fn pinv() -> Self {
        ResolverConfig::Pinv {}
    }

    pub fn dls(lambda: f64) -> Self {
        ResolverConfig::Dls { lambda }
    }

    pub fn adls(lambda0: f64, w0: f64) -> Self {
        ResolverConfig::Adls { lambda0, w0 }
    }

    pub fn edls(sigma_minus: f64, sigma_plus: f64, beta: f64) -> Self {
        ResolverConfig::Edls {
            sigma_minus,
            sigma_plus,
            beta,
        }
    }

    pub fn jparse(gamma: f64) -> Self {
        ResolverConfig::Jparse { gamma, a: 0.0 }
    }

    pub fn jparse_shaped(gamma: f64, a: f64) -> Self {
        ResolverConfig::Jparse { gamma, a }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ResolverConfig::Pinv {} => "pinv",
            ResolverConfig::Dls { .. } => "dls",
            ResolverConfig::Adls { .. } => "adls",
            ResolverConfig::Edls { .. } => "edls",
            ResolverConfig::Jparse { .. } => "jparse",
        }
    }

    /// Short identifier safe for file names, e.g. `dls_lambda0.17`.
    pub fn label(&self) -> String {
        self.to_string().replace([':', ','], "_")
    }

    pub fn validate(&self) -> Result<()> {
        fn finite(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite"))
            }
        }
        match *self {
            ResolverConfig::Pinv {} => Ok(()),
            ResolverConfig::Dls { lambda } => {
                finite("lambda", lambda)?;
                if lambda < 0.0 {
                    return Err(Error::param("lambda", "must be >= 0"));
                }
                Ok(())
            }
            ResolverConfig::Adls { lambda0, w0 } => {
                finite("lambda0", lambda0)?;
                finite("w0", w0)?;
                if lambda0 <= 0.0 {
                    return Err(Error::param("lambda0", "must be > 0"));
                }
                if w0 <= 0.0 {
                    return Err(Error::param("w0", "must be > 0"));
                }
                Ok(())
            }
            ResolverConfig::Edls {
                sigma_minus,
                sigma_plus,
                beta,
            } => {
                finite("sigma_minus", sigma_minus)?;
                finite("sigma_plus", sigma_plus)?;
                finite("beta", beta)?;
                if sigma_minus < 0.0 {
                    return Err(Error::param("sigma_minus", "must be >= 0"));
                }
                if sigma_plus <= sigma_minus {
                    return Err(Error::param("sigma_plus", "must exceed sigma_minus"));
                }
                if !(beta > 0.0 && beta < 1.0) {
                    return Err(Error::param("beta", "must lie in (0, 1)"));
                }
                Ok(())
            }
            ResolverConfig::Jparse { gamma, a } => {
                finite("gamma", gamma)?;
                finite("a", a)?;
                if !(gamma > 0.0 && gamma <= 1.0) {
                    return Err(Error::param("gamma", "must lie in (0, 1]"));
                }
                if a < 0.0 {
                    return Err(Error::param("a", "must be >= 0"));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ResolverConfig {
    /// CLI syntax, parseable by [`FromStr`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ResolverConfig::Pinv {} => write!(f, "pinv"),
            ResolverConfig::Dls { lambda } => write!(f, "dls:lambda={lambda}"),
            ResolverConfig::Adls { lambda0, w0 } => write!(f, "adls:lambda0={lambda0},w0={w0}"),
            ResolverConfig::Edls {
                sigma_minus,
                sigma_plus,
                beta,
            } => write!(
                f,
                "edls:sigma_minus={sigma_minus},sigma_plus={sigma_plus},beta={beta}"
            ),
            ResolverConfig::Jparse { gamma, a } => {
                if a == 0.0 {
                    write!(f, "jparse:gamma={gamma}")
                } else {
                    write!(f, "jparse:gamma={gamma},a={a}")
                }
            }
        }
    }
}

/// Parses `name:key=value,key=value`. Unknown names and keys are errors;
/// missing keys fall back to the defaults below.
///
/// | name   | keys (default)                                   |
/// |--------|--------------------------------------------------|
/// | pinv   | none                                             |
/// | dls    | lambda (0.17)                                    |
/// | adls   | lambda0 (0.17), w0 (0.25)                        |
/// | edls   | sigma_minus (0), sigma_plus (0.3), beta (0.02)   |
/// | jparse | gamma (0.1), a (0)                               |
impl FromStr for ResolverConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (s.trim(), ""),
        };
        let mut kv: Vec<(String, f64)> = Vec::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("`{}` is not a number", v.trim())))?;
            kv.push((k.trim().to_string(), v));
        }
        let allowed: &[&str] = match name {
            "pinv" => &[],
            "dls" => &["lambda"],
            "adls" => &["lambda0", "w0"],
            "edls" => &["sigma_minus", "sigma_plus", "beta"],
            "jparse" => &["gamma", "a"],
            _ => {
                return Err(Error::Parse(format!(
                    "unknown resolver `{name}`; valid names: {}",
                    RESOLVER_NAMES.join(", ")
                )))
            }
        };
        for (k, _) in &kv {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Parse(format!(
                    "unknown key `{k}` for {name}; valid keys: {}",
                    if allowed.is_empty() { "(none)".to_string() } else { allowed.join(", ") }
                )));
            }
        }
        let get = |key: &str, default: f64| {
            kv.iter().rev().find(|(k, _)| k == key).map(|(_, v)| *v).unwrap_or(default)
        };
        let cfg = match name {
            "pinv" => ResolverConfig::pinv(),
            "dls" => ResolverConfig::dls(get("lambda", 0.17)),
            "adls" => ResolverConfig::adls(get("lambda0", 0.17), get("w0", 0.25)),
            "edls" => ResolverConfig::edls(get("sigma_minus", 0.0), get("sigma_plus", 0.3), get("beta", 0.02)),
            _ => ResolverConfig::jparse_shaped(get("gamma", 0.1), get("a", 0.0)),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
