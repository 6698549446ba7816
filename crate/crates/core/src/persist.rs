//! Versioned JSON files for fitted models and ensembles.
//!
//! A saved file carries everything prediction needs: the fitted tables, the
//! external id maps of the shared and target axes, the orientation, the
//! target's global mean for unknown-item fallback, and the full config and
//! training traces. Floats are written in shortest round-trip form, so a
//! reloaded file predicts bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boost::{BoostConfig, Ensemble, RoundRecord, StlcfRun};
use crate::data::{AlignedCollection, Orientation};
use crate::error::{Error, Result};
use crate::gplsa::{EmConfig, Fit, FitTrace, LatentModel};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "kind", rename_all = "kebab-case")]
pub enum Trained<F: Scalar> {
    Model { config: EmConfig<F>, trace: FitTrace<F>, model: LatentModel<F> },
    Ensemble { config: BoostConfig<F>, rounds: Vec<RoundRecord<F>>, ensemble: Ensemble<F> },
}

/// How a by-id prediction was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictPath {
    Fitted,
    /// The user is not on the shared axis; uniform topic mixture used.
    UnseenUser,
    /// The item is not in the target domain; global mean returned.
    UnknownItem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SavedModel<F: Scalar> {
    pub version: u32,
    pub method: String,
    pub orientation: Orientation,
    /// Ids of the model's row axis (the shared axis).
    pub row_ids: Vec<String>,
    /// Ids of the model's target column axis.
    pub col_ids: Vec<String>,
    pub source_col_ids: Vec<Vec<String>>,
    pub global_mean: F,
    pub trained: Trained<F>,
    #[serde(skip)]
    index: Option<Index>,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Index {
    rows: std::collections::HashMap<String, usize>,
    cols: std::collections::HashMap<String, usize>,
}

impl<F: Scalar> SavedModel<F> {
    fn new(method: &str, data: &AlignedCollection<F>, trained: Trained<F>) -> Self {
        let view = data.shared_users_view();
        let mut s = Self {
            version: FORMAT_VERSION,
            method: method.to_string(),
            orientation: data.orientation,
            row_ids: view.target.user_ids().ids().to_vec(),
            col_ids: view.target.item_ids().ids().to_vec(),
            source_col_ids: view.sources.iter().map(|m| m.item_ids().ids().to_vec()).collect(),
            global_mean: data.target.global_mean(),
            trained,
            index: None,
        };
        s.build_index();
        s
    }

    pub fn from_fit(method: &str, data: &AlignedCollection<F>, cfg: &EmConfig<F>, fit: &Fit<F>) -> Self {
        Self::new(method, data, Trained::Model { config: cfg.clone(), trace: fit.trace.clone(), model: fit.model.clone() })
    }

    pub fn from_run(method: &str, data: &AlignedCollection<F>, cfg: &BoostConfig<F>, run: &StlcfRun<F>) -> Self {
        Self::new(method, data, Trained::Ensemble { config: cfg.clone(), rounds: run.rounds.clone(), ensemble: run.ensemble.clone() })
    }

    fn build_index(&mut self) {
        let enumerate = |v: &[String]| v.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        self.index = Some(Index { rows: enumerate(&self.row_ids), cols: enumerate(&self.col_ids) });
    }

    fn bounds(&self) -> crate::data::RatingBounds<F> {
        match &self.trained {
            Trained::Model { model, .. } => model.bounds,
            Trained::Ensemble { ensemble, .. } => ensemble.learners[0].bounds,
        }
    }

    /// Predicts by external ids in the data's own (user, item) orientation.
    pub fn predict_ids(&self, user: &str, item: &str) -> Result<(F, PredictPath)> {
        let index = self.index.as_ref().expect("index is built on construction and load");
        let (row, col) = match self.orientation {
            Orientation::SharedUsers => (user, item),
            Orientation::SharedItems => (item, user),
        };
        let Some(&c) = index.cols.get(col) else {
            return Ok((self.bounds().clamp(self.global_mean), PredictPath::UnknownItem));
        };
        let (v, path) = match (index.rows.get(row), &self.trained) {
            (Some(&r), Trained::Model { model, .. }) => (model.predict(r, c)?, PredictPath::Fitted),
            (Some(&r), Trained::Ensemble { ensemble, .. }) => (ensemble.predict(r, c)?, PredictPath::Fitted),
            (None, Trained::Model { model, .. }) => (model.predict_unseen_user(c)?, PredictPath::UnseenUser),
            (None, Trained::Ensemble { ensemble, .. }) => (ensemble.predict_unseen_user(c)?, PredictPath::UnseenUser),
        };
        Ok((v, path))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let found = v.get("version").and_then(|x| x.as_u64()).unwrap_or(0) as u32;
        if found != FORMAT_VERSION {
            return Err(Error::Version { found, expected: FORMAT_VERSION });
        }
        let mut m: Self = serde_json::from_value(v)?;
        if let Trained::Ensemble { ensemble, .. } = &m.trained {
            if ensemble.is_empty() {
                return Err(Error::InvalidArgument("saved ensemble has no members".into()));
            }
        }
        m.build_index();
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
