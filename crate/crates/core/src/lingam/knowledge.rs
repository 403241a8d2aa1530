use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KnowledgeError {
    #[error("{0} is both forbidden and required")]
    Conflict(EdgeConstraint),
    #[error("self-edge at lag 0 on `{0}`")]
    SelfEdge(String),
    #[error("knowledge refers to unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{0}` appears in both variable groups")]
    OverlappingGroups(String),
}

/// A directed edge `cause(t − lag) → effect(t)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeConstraint {
    pub cause: String,
    pub effect: String,
    #[serde(default)]
    pub lag: usize,
}

impl EdgeConstraint {
    pub fn new(cause: impl Into<String>, effect: impl Into<String>, lag: usize) -> Self {
        Self {
            cause: cause.into(),
            effect: effect.into(),
            lag,
        }
    }
}

impl std::fmt::Display for EdgeConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}(t-{}) -> {}(t)", self.cause, self.lag, self.effect)
    }
}

/// Background knowledge: directed edges that must or must not appear.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Knowledge {
    #[serde(default)]
    pub forbidden: BTreeSet<EdgeConstraint>,
    #[serde(default)]
    pub required: BTreeSet<EdgeConstraint>,
}

impl Knowledge {
    pub fn new(
        forbidden: impl IntoIterator<Item = EdgeConstraint>,
        required: impl IntoIterator<Item = EdgeConstraint>,
    ) -> Result<Self, KnowledgeError> {
        let k = Self {
            forbidden: forbidden.into_iter().collect(),
            required: required.into_iter().collect(),
        };
        k.validate()?;
        Ok(k)
    }

    pub fn is_empty(&self) -> bool {
        self.forbidden.is_empty() && self.required.is_empty()
    }

    pub fn validate(&self) -> Result<(), KnowledgeError> {
        if let Some(c) = self.forbidden.intersection(&self.required).next() {
            return Err(KnowledgeError::Conflict(c.clone()));
        }
        if let Some(c) = self
            .forbidden
            .iter()
            .chain(&self.required)
            .find(|c| c.lag == 0 && c.cause == c.effect)
        {
            return Err(KnowledgeError::SelfEdge(c.cause.clone()));
        }
        Ok(())
    }

    /// Maps names to column indices of `names`.
    pub fn resolve(&self, names: &[String]) -> Result<ResolvedKnowledge, KnowledgeError> {
        self.validate()?;
        let index = |name: &str| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| KnowledgeError::UnknownVariable(name.to_string()))
        };
        let map = |set: &BTreeSet<EdgeConstraint>| -> Result<HashSet<(usize, usize, usize)>, KnowledgeError> {
            set.iter()
                .map(|c| Ok((index(&c.cause)?, index(&c.effect)?, c.lag)))
                .collect()
        };
        Ok(ResolvedKnowledge {
            forbidden: map(&self.forbidden)?,
            required: map(&self.required)?,
        })
    }
}

/// [`Knowledge`] keyed by `(cause, effect, lag)` column indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResolvedKnowledge {
    pub forbidden: HashSet<(usize, usize, usize)>,
    pub required: HashSet<(usize, usize, usize)>,
}

impl ResolvedKnowledge {
    pub fn is_forbidden(&self, cause: usize, effect: usize, lag: usize) -> bool {
        self.forbidden.contains(&(cause, effect, lag))
    }

    pub fn is_required(&self, cause: usize, effect: usize, lag: usize) -> bool {
        self.required.contains(&(cause, effect, lag))
    }

    pub fn required_at(&self, lag: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.required
            .iter()
            .filter(move |c| c.2 == lag)
            .map(|c| (c.0, c.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conflicts_and_self_edges_rejected() {
        let e = EdgeConstraint::new("a", "b", 0);
        assert!(matches!(
            Knowledge::new([e.clone()], [e]),
            Err(KnowledgeError::Conflict(_))
        ));
        assert!(matches!(
            Knowledge::new([EdgeConstraint::new("a", "a", 0)], []),
            Err(KnowledgeError::SelfEdge(_))
        ));
        assert!(Knowledge::new([EdgeConstraint::new("a", "a", 1)], []).is_ok());
    }

    #[test]
    fn resolve_maps_names() {
        let k = Knowledge::new([EdgeConstraint::new("b", "a", 1)], []).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let r = k.resolve(&names).unwrap();
        assert!(r.is_forbidden(1, 0, 1));
        assert!(!r.is_forbidden(1, 0, 0));
        assert!(matches!(
            k.resolve(&["a".to_string()]),
            Err(KnowledgeError::UnknownVariable(_))
        ));
    }
}
