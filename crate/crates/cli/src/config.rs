//! Run descriptions: built from flags or read back from a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use remlab_core::analytic_bk::parse_subset;
use remlab_core::analytic_rem::{RemModel, Sign, TruncKind};
use remlab_core::external_field::{Word, WordSpec};
use remlab_core::{BkSpec, FreeEnergyCurve, GremSpec, LevelKind, Levels, ModelSpec, TreeKind};
use serde::{Deserialize, Serialize};

use crate::args::{Flags, Format};
use crate::error::{invalid, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Analytic,
    Simulate,
    Converge,
    Ladder,
    Recover,
    Validate,
}

impl CommandName {
    fn default_format(self) -> Format {
        match self {
            CommandName::Ladder | CommandName::Recover | CommandName::Validate => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Family used to read parameters back from a curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Recovery {
    Exp,
    Gamma { gamma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub replicas: usize,
    #[serde(default)]
    pub tree: TreeKind,
    #[serde(default)]
    pub samples: Option<u64>,
    /// Histogram bin edges.
    #[serde(default)]
    pub hist: Option<Vec<f64>>,
    #[serde(default)]
    pub recovery: Option<Recovery>,
    #[serde(default)]
    pub curve: Option<FreeEnergyCurve>,
    pub format: Format,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn one() -> usize {
    1
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, field: &str) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| invalid(field, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(field, format!("{}: {e}", path.display())))
}

/// `lo:hi:step` or a comma-separated list.
pub fn parse_grid(text: &str, field: &str) -> CliResult<Vec<f64>> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| invalid(field, format!("`{s}` is not a number")));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(invalid(field, "expected lo:hi:step"));
        }
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !step.is_finite() {
            return Err(invalid(field, "grid step must be > 0"));
        }
        if !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(field, "grid needs finite lo <= hi"));
        }
        Ok(remlab_core::curve::beta_grid(lo, hi, step))
    } else {
        text.split(',').map(num).collect()
    }
}

fn parse_tree(text: &str) -> CliResult<TreeKind> {
    serde_json::from_value(serde_json::Value::String(text.to_string()))
        .map_err(|_| invalid("tree", format!("unknown tree `{text}` (fixed, regular-poisson, poisson, multinomial1, multinomial2)")))
}

fn parse_sign(text: Option<&str>) -> CliResult<Sign> {
    match text {
        None | Some("1") | Some("+1") | Some("+") | Some("plus") => Ok(Sign::Plus),
        Some("-1") | Some("-") | Some("minus") => Ok(Sign::Minus),
        Some(s) => Err(invalid("sign", format!("`{s}` is not +1 or -1"))),
    }
}

fn need<T: Clone>(v: &Option<T>, field: &str, model: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| invalid(field, format!("required for model {model}")))
}

fn model_from_flags(f: &Flags) -> CliResult<Option<ModelSpec>> {
    if let Some(path) = &f.spec {
        if f.model.is_some() {
            log::warn!("--spec given; ignoring --model and the model flags");
        }
        return read_json(path, "spec").map(Some);
    }
    let Some(name) = f.model.as_deref() else {
        return Ok(None);
    };
    let rem = |rem: RemModel| ModelSpec::Rem { rem };
    let model = match name {
        "rem-gaussian" => rem(RemModel::Gaussian),
        "rem-exp" | "rem-exponential" => rem(RemModel::Exponential),
        "rem-weibull" => rem(RemModel::Weibull { gamma: need(&f.gamma, "gamma", name)? }),
        "rem-poisson" => rem(RemModel::Poisson { theta: need(&f.theta, "theta", name)?, sign: parse_sign(f.sign.as_deref())? }),
        "rem-binomial" => rem(RemModel::Binomial { p: need(&f.prob, "prob", name)?, sign: parse_sign(f.sign.as_deref())? }),
        "rem-compact" => rem(RemModel::Compact { alpha: need(&f.alpha, "alpha", name)? }),
        "rem-truncated-exp" => rem(RemModel::truncated(TruncKind::Exp, need(&f.alpha, "alpha", name)?)),
        "rem-truncated-gauss" => rem(RemModel::truncated(TruncKind::Gauss, need(&f.alpha, "alpha", name)?)),
        "rem-field" => {
            let a = match f.a.as_deref() {
                None => 1.0,
                Some([a]) => *a,
                Some(_) => return Err(invalid("a", "rem-field takes a single weight")),
            };
            ModelSpec::RemField { a, h: need(&f.h, "h", name)? }
        }
        "grem" => {
            let p = need(&f.p, "p", name)?;
            let a = need(&f.a, "a", name)?;
            let levels = match &f.levels {
                Some(kinds) => {
                    if f.gamma.is_some() {
                        log::warn!("--levels given; ignoring --gamma");
                    }
                    Levels::Mixed(kinds.iter().map(|k| parse_level(k)).collect::<CliResult<_>>()?)
                }
                None => Levels::UniformGamma(f.gamma.unwrap_or(2.0)),
            };
            ModelSpec::Grem { grem: GremSpec::new(p, a, levels)? }
        }
        "bk" => {
            let p = need(&f.p, "p", name)?;
            let path = need(&f.weights, "weights", name)?;
            let raw: BTreeMap<String, f64> = read_json(&path, "weights")?;
            let mut weights = BTreeMap::new();
            for (k, v) in raw {
                weights.insert(parse_subset(&k, p.len()).map_err(|e| invalid("weights", e.to_string()))?, v);
            }
            ModelSpec::Bk { bk: BkSpec::new(p.len(), p, weights, f.gamma.unwrap_or(2.0))? }
        }
        "block-tree" => ModelSpec::BlockTree { p: need(&f.p, "p", name)?, a: need(&f.a, "a", name)? },
        "word" => {
            let p = need(&f.p, "p", name)?;
            let path = need(&f.words, "words", name)?;
            let words: Vec<Word> = read_json(&path, "words")?;
            ModelSpec::Word { word: WordSpec { n: p.len(), words, p, h: f.h.unwrap_or(0.0) } }
        }
        other => return Err(invalid("model", format!("unknown model `{other}`"))),
    };
    Ok(Some(model))
}

fn parse_level(k: &str) -> CliResult<LevelKind> {
    match k {
        "exp" | "exponential" => Ok(LevelKind::Exp),
        "gauss" | "gaussian" => Ok(LevelKind::Gauss),
        other => Err(invalid("levels", format!("unknown level family `{other}` (exp, gauss)"))),
    }
}

fn recovery_from_flags(f: &Flags) -> CliResult<Option<Recovery>> {
    match f.kind.as_deref() {
        None => Ok(f.gamma.map(|gamma| if gamma == 1.0 { Recovery::Exp } else { Recovery::Gamma { gamma } })),
        Some("exp") => Ok(Some(Recovery::Exp)),
        Some("gamma") => Ok(Some(Recovery::Gamma { gamma: need(&f.gamma, "gamma", "recovery")? })),
        Some(other) => Err(invalid("kind", format!("unknown recovery family `{other}` (exp, gamma)"))),
    }
}

impl RunConfig {
    pub fn from_flags(command: CommandName, f: &Flags) -> CliResult<RunConfig> {
        if let Some(path) = &f.config {
            let mut cfg: RunConfig = read_json(path, "config")?;
            if cfg.command != command {
                return Err(invalid("command", format!("config is for `{}`", serde_json::to_value(cfg.command).unwrap())));
            }
            if cfg.version.as_deref().is_some_and(|v| v != VERSION) {
                log::warn!("config written by version {}, running {VERSION}", cfg.version.as_deref().unwrap_or(""));
            }
            if f.model.is_some() || f.spec.is_some() || f.beta.is_some() || f.seed.is_some() || f.n.is_some() {
                log::warn!("--config given; ignoring the other run flags");
            }
            cfg.version = None;
            if f.out.is_some() {
                cfg.out = f.out.clone();
            }
            return Ok(cfg);
        }
        Ok(RunConfig {
            command,
            version: None,
            model: model_from_flags(f)?,
            betas: f.beta.as_deref().map(|b| parse_grid(b, "beta")).transpose()?.unwrap_or_default(),
            n: f.n,
            n_list: f.n_list.clone().unwrap_or_default(),
            seed: f.seed,
            replicas: f.replicas.unwrap_or(1),
            tree: f.tree.as_deref().map(parse_tree).transpose()?.unwrap_or_default(),
            samples: f.samples,
            hist: f.hist.as_deref().map(|h| parse_grid(h, "hist")).transpose()?,
            recovery: recovery_from_flags(f)?,
            curve: f.curve.as_deref().map(|c| read_json(c, "curve")).transpose()?,
            format: f.format.unwrap_or(command.default_format()),
            out: f.out.clone(),
        })
    }

    pub fn model(&self) -> CliResult<&ModelSpec> {
        self.model.as_ref().ok_or_else(|| invalid("model", "a model is required (--model or --spec)"))
    }

    fn need_betas(&self) -> CliResult<()> {
        if self.betas.is_empty() {
            return Err(invalid("beta", "a temperature grid is required"));
        }
        if self.betas.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
            return Err(invalid("beta", "temperatures must be finite and >= 0"));
        }
        Ok(())
    }

    fn need_seed(&self) -> CliResult<()> {
        if self.seed.is_none() {
            return Err(invalid("seed", "stochastic commands need --seed"));
        }
        if self.replicas == 0 {
            return Err(invalid("replicas", "must be >= 1"));
        }
        Ok(())
    }

    /// Checks everything that can be checked before running.
    pub fn check(&self) -> CliResult<()> {
        if let Some(m) = &self.model {
            m.validate()?;
        }
        match self.command {
            CommandName::Analytic => {
                self.model()?;
                self.need_betas()
            }
            CommandName::Simulate => {
                let m = self.model()?;
                self.need_seed()?;
                if self.n.is_none() {
                    return Err(invalid("N", "simulate needs --N"));
                }
                match &self.hist {
                    Some(edges) => {
                        if !matches!(m, ModelSpec::Rem { .. }) {
                            return Err(invalid("hist", "histograms need a single-level rem model"));
                        }
                        if edges.len() < 2 {
                            return Err(invalid("hist", "need at least one bin"));
                        }
                        Ok(())
                    }
                    None => self.need_betas(),
                }
            }
            CommandName::Converge => {
                self.model()?;
                self.need_seed()?;
                self.need_betas()?;
                if self.n_list.is_empty() {
                    return Err(invalid("N-list", "converge needs --N-list"));
                }
                Ok(())
            }
            CommandName::Ladder => match self.model()? {
                ModelSpec::Grem { .. } | ModelSpec::Bk { .. } => Ok(()),
                _ => Err(invalid("model", "ladders exist for grem and bk models")),
            },
            CommandName::Recover => {
                if self.curve.is_none() {
                    self.model()?;
                }
                Ok(())
            }
            CommandName::Validate => self.model().map(|_| ()),
        }
    }
}
