//! One serializable description for every model the crate knows about.

use serde::{Deserialize, Serialize};

use crate::analytic_bk::{bk_energy_chain, bk_energy_min, block_tree_energy, BkSpec};
use crate::analytic_grem::{grem_curve, grem_energy, GremSpec};
use crate::analytic_rem::RemModel;
use crate::curve::FreeEnergyCurve;
use crate::error::{invalid, Error, Result};
use crate::external_field::{rem_field_energy, word_grem_energy, FieldParams, WordSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelSpec {
    Rem { rem: RemModel },
    RemField { a: f64, h: f64 },
    Grem { grem: GremSpec },
    Bk { bk: BkSpec },
    BlockTree { p: Vec<f64>, a: Vec<f64> },
    Word { word: WordSpec },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Rem { rem } => rem.validate(),
            ModelSpec::RemField { a, h } => FieldParams::new(*a, *h).map(|_| ()),
            ModelSpec::Grem { grem } => grem.validate(),
            ModelSpec::Bk { bk } => bk.validate(),
            ModelSpec::BlockTree { p, a } => {
                if p.len() != a.len() {
                    return Err(invalid("a", format!("expected {} weights", p.len())));
                }
                GremSpec::uniform(p.clone(), a.clone(), 2.0).map(|_| ())
            }
            ModelSpec::Word { word } => word.validate(),
        }
    }

    /// Short label used in result files.
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Rem { rem } => {
                let v = serde_json::to_value(rem).expect("serializable");
                format!("rem-{}", v["family"].as_str().unwrap_or("rate"))
            }
            ModelSpec::RemField { .. } => "rem-field".into(),
            ModelSpec::Grem { .. } => "grem".into(),
            ModelSpec::Bk { .. } => "bk".into(),
            ModelSpec::BlockTree { .. } => "block-tree".into(),
            ModelSpec::Word { .. } => "word".into(),
        }
    }

    /// Level proportions of the underlying tree.
    pub fn proportions(&self) -> Vec<f64> {
        match self {
            ModelSpec::Rem { .. } | ModelSpec::RemField { .. } => vec![1.0],
            ModelSpec::Grem { grem } => grem.p.clone(),
            ModelSpec::Bk { bk } => bk.p.clone(),
            ModelSpec::BlockTree { p, .. } => p.clone(),
            ModelSpec::Word { word } => word.p.clone(),
        }
    }

    /// Closed-form curve when one exists.
    pub fn curve(&self) -> Result<Option<FreeEnergyCurve>> {
        match self {
            ModelSpec::Rem { rem } => rem.curve(),
            ModelSpec::Grem { grem } => match grem_curve(grem) {
                Ok(c) => Ok(Some(c)),
                Err(Error::Unsupported(_)) => Ok(None),
                Err(e) => Err(e),
            },
            _ => {
                self.validate()?;
                Ok(None)
            }
        }
    }

    /// Limiting free energy, from the closed form or the matching
    /// numerical solver.
    pub fn analytic_energy(&self, beta: f64) -> Result<f64> {
        match self {
            ModelSpec::Rem { rem } => rem.energy(beta),
            ModelSpec::RemField { a, h } => rem_field_energy(FieldParams::new(*a, *h)?, beta),
            ModelSpec::Grem { grem } => grem_energy(grem, beta),
            ModelSpec::Bk { bk } => {
                if bk.gamma == 2.0 {
                    bk_energy_chain(bk, beta)
                } else {
                    bk_energy_min(bk, beta)
                }
            }
            ModelSpec::BlockTree { p, a } => block_tree_energy(p, a, beta),
            ModelSpec::Word { word } => word_grem_energy(word, beta),
        }
    }
}
