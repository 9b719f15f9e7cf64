use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub type VarName = Arc<str>;

/// Values (1-based) for a set of variables.
///
/// Entries are kept in the order they were given; assignments produced by a
/// [`CausalGraph`](super::CausalGraph) are always in declaration order,
/// which makes derived comparisons and renderings canonical.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize)]
pub struct Assignment(Vec<(VarName, u32)>);

impl Assignment {
    pub fn empty() -> Self {
        Assignment(Vec::new())
    }

    /// Raw constructor; callers are responsible for canonical order.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarName, u32)>) -> Self {
        Assignment(pairs.into_iter().collect())
    }

    pub fn pairs(&self) -> &[(VarName, u32)] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarName, u32)> {
        self.0.iter().map(|(n, v)| (n, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.0.iter().find(|(n, _)| &**n == name).map(|(_, v)| *v)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn names(&self) -> impl Iterator<Item = &VarName> {
        self.0.iter().map(|(n, _)| n)
    }

    /// True when the two assignments agree on every shared variable.
    pub fn consistent_with(&self, other: &Assignment) -> bool {
        self.0.iter().all(|(n, v)| other.get(n).is_none_or(|w| w == *v))
    }

    /// Entries whose variable satisfies `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&str) -> bool) -> Assignment {
        Assignment(self.0.iter().filter(|(n, _)| keep(n)).cloned().collect())
    }
}

impl fmt::Display for Assignment {
    /// `V1=1,V2=2`; the empty assignment renders as the empty string.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (n, v)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid assignment `{0}`: expected NAME=VALUE[,NAME=VALUE...]")]
pub struct ParseAssignmentError(pub String);

impl FromStr for Assignment {
    type Err = ParseAssignmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Assignment::empty());
        }
        let mut out = Vec::new();
        for part in s.split(',') {
            let (n, v) = part.split_once('=').ok_or_else(|| ParseAssignmentError(s.to_string()))?;
            let n = n.trim();
            if !is_identifier(n) {
                return Err(ParseAssignmentError(s.to_string()));
            }
            let v: u32 = v.trim().parse().map_err(|_| ParseAssignmentError(s.to_string()))?;
            out.push((VarName::from(n), v));
        }
        Ok(Assignment(out))
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
