//! Run configuration: a flat, human-editable key-value file.
//!
//! Grammar: UTF-8 text, one `key = value` pair per line, keys are dotted
//! lowercase identifiers, `#` starts a comment (full-line or trailing),
//! blank lines ignored. Lists are comma-separated. Serialization emits keys
//! in sorted order, so equal configs produce identical bytes.

use crate::error::{Error, Result};
use crate::solver::Scheme;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Toy,
    Quadratic { a: f64, b: f64, c: f64 },
    ImagingDeblur,
    ImagingSuperRes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingConfig {
    pub size: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub sr_factor: usize,
    /// Soft-threshold weight of the default regularizer.
    pub g_alpha: f64,
    pub paper_faithful: bool,
}

impl Default for ImagingConfig {
    fn default() -> Self {
        ImagingConfig {
            size: 64,
            sigma: 0.03,
            lambda: 0.00026,
            sr_factor: 2,
            g_alpha: 1e-4,
            paper_faithful: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub schemes: Vec<Scheme>,
    /// `None` means derive from the admissible bound (`auto_steps`).
    pub eta_x: Option<f64>,
    pub eta_y: Option<f64>,
    pub auto_steps: bool,
    pub init_x: Vec<f64>,
    pub init_y: Vec<f64>,
    pub max_iter: usize,
    pub grad_tol: Option<f64>,
    pub seed: u64,
    pub diagnostics: bool,
    pub inner_tol: f64,
    pub override_assumption4: bool,
    pub imaging: ImagingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemSpec::Toy,
            schemes: vec![Scheme::GdRga, Scheme::PdRga, Scheme::Ppga],
            eta_x: Some(0.29),
            eta_y: Some(1.0),
            auto_steps: false,
            init_x: vec![-5.0],
            init_y: vec![5.0],
            max_iter: 10_000,
            grad_tol: None,
            seed: 0,
            diagnostics: true,
            inner_tol: 1e-10,
            override_assumption4: false,
            imaging: ImagingConfig::default(),
        }
    }
}

fn scheme_from_str(s: &str) -> Result<Scheme> {
    match s {
        "gdrga" => Ok(Scheme::GdRga),
        "pdrga" => Ok(Scheme::PdRga),
        "ppga" => Ok(Scheme::Ppga),
        other => Err(Error::ConfigParse(format!("unknown scheme '{other}'"))),
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|e| Error::ConfigParse(format!("number '{t}': {e}")))
        })
        .collect()
}

/// Parses the raw key-value map, rejecting malformed lines and duplicates.
pub fn parse_map(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::ConfigParse(format!("line {}: expected 'key = value'", ln + 1))
        })?;
        let key = k.trim().to_string();
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '.' || c == '_')
        {
            return Err(Error::ConfigParse(format!(
                "line {}: bad key '{key}'",
                ln + 1
            )));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::ConfigParse(format!("duplicate key '{key}'")));
        }
    }
    Ok(map)
}

impl RunConfig {
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        match &self.problem {
            ProblemSpec::Toy => put("problem.kind", "toy".into()),
            ProblemSpec::Quadratic { a, b, c } => {
                put("problem.kind", "quadratic".into());
                put("problem.a", format!("{a}"));
                put("problem.b", format!("{b}"));
                put("problem.c", format!("{c}"));
            }
            ProblemSpec::ImagingDeblur => put("problem.kind", "imaging_deblur".into()),
            ProblemSpec::ImagingSuperRes => put("problem.kind", "imaging_superres".into()),
        }
        put(
            "schemes",
            self.schemes
                .iter()
                .map(|s| s.label())
                .collect::<Vec<_>>()
                .join(","),
        );
        if let Some(e) = self.eta_x {
            put("steps.eta_x", format!("{e}"));
        }
        if let Some(e) = self.eta_y {
            put("steps.eta_y", format!("{e}"));
        }
        put("steps.auto", format!("{}", self.auto_steps));
        put("init.x", fmt_list(&self.init_x));
        put("init.y", fmt_list(&self.init_y));
        put("run.max_iter", format!("{}", self.max_iter));
        if let Some(t) = self.grad_tol {
            put("run.grad_tol", format!("{t}"));
        }
        put("run.seed", format!("{}", self.seed));
        put("diagnostics.enabled", format!("{}", self.diagnostics));
        put("diagnostics.inner_tol", format!("{}", self.inner_tol));
        put(
            "override_assumption4",
            format!("{}", self.override_assumption4),
        );
        if matches!(
            self.problem,
            ProblemSpec::ImagingDeblur | ProblemSpec::ImagingSuperRes
        ) {
            put("imaging.size", format!("{}", self.imaging.size));
            put("imaging.sigma", format!("{}", self.imaging.sigma));
            put("imaging.lambda", format!("{}", self.imaging.lambda));
            put("imaging.sr_factor", format!("{}", self.imaging.sr_factor));
            put("imaging.g_alpha", format!("{}", self.imaging.g_alpha));
            put(
                "imaging.paper_faithful",
                format!("{}", self.imaging.paper_faithful),
            );
        }
        m
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| -> Result<&str> {
            map.get(k)
                .map(|s| s.as_str())
                .ok_or_else(|| Error::ConfigParse(format!("missing key '{k}'")))
        };
        let get_f = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|e| Error::ConfigParse(format!("{k}: {e}")))
        };
        let opt_f = |k: &str| -> Result<Option<f64>> {
            match map.get(k) {
                None => Ok(None),
                Some(v) => v
                    .parse()
                    .map(Some)
                    .map_err(|e| Error::ConfigParse(format!("{k}: {e}"))),
            }
        };
        let get_u = |k: &str, default: usize| -> Result<usize> {
            match map.get(k) {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|e| Error::ConfigParse(format!("{k}: {e}"))),
            }
        };
        let get_b = |k: &str, default: bool| -> Result<bool> {
            match map.get(k) {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|e| Error::ConfigParse(format!("{k}: {e}"))),
            }
        };

        let problem = match get("problem.kind")? {
            "toy" => ProblemSpec::Toy,
            "quadratic" => ProblemSpec::Quadratic {
                a: get_f("problem.a")?,
                b: get_f("problem.b")?,
                c: get_f("problem.c")?,
            },
            "imaging_deblur" => ProblemSpec::ImagingDeblur,
            "imaging_superres" => ProblemSpec::ImagingSuperRes,
            other => {
                return Err(Error::ConfigParse(format!(
                    "unknown problem kind '{other}'"
                )))
            }
        };
        let schemes = get("schemes")?
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| scheme_from_str(s.trim()))
            .collect::<Result<Vec<_>>>()?;
        let defaults = ImagingConfig::default();
        Ok(RunConfig {
            problem,
            schemes,
            eta_x: opt_f("steps.eta_x")?,
            eta_y: opt_f("steps.eta_y")?,
            auto_steps: get_b("steps.auto", false)?,
            init_x: parse_list(get("init.x")?)?,
            init_y: parse_list(get("init.y")?)?,
            max_iter: get_u("run.max_iter", 10_000)?,
            grad_tol: opt_f("run.grad_tol")?,
            seed: get_u("run.seed", 0)? as u64,
            diagnostics: get_b("diagnostics.enabled", true)?,
            inner_tol: opt_f("diagnostics.inner_tol")?.unwrap_or(1e-10),
            override_assumption4: get_b("override_assumption4", false)?,
            imaging: ImagingConfig {
                size: get_u("imaging.size", defaults.size)?,
                sigma: opt_f("imaging.sigma")?.unwrap_or(defaults.sigma),
                lambda: opt_f("imaging.lambda")?.unwrap_or(defaults.lambda),
                sr_factor: get_u("imaging.sr_factor", defaults.sr_factor)?,
                g_alpha: opt_f("imaging.g_alpha")?.unwrap_or(defaults.g_alpha),
                paper_faithful: get_b("imaging.paper_faithful", defaults.paper_faithful)?,
            },
        })
    }

    /// Canonical text form: sorted keys, one pair per line.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_map() {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(&parse_map(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize())?;
        Ok(())
    }
}
