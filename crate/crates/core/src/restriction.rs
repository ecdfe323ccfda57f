//! Partial assignments of input variables.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A restriction is a list of `x_i = b` constraints with distinct indices.
///
/// Restricting a function overwrites the listed coordinates before
/// evaluation: `f_pi(x) = f(x with pi applied)`.  The restricted function
/// keeps the arity of the original.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, u8)>", into = "Vec<(usize, u8)>")]
pub struct Restriction {
    assignments: Vec<(usize, bool)>,
}

impl Restriction {
    pub fn empty() -> Self {
        Restriction { assignments: Vec::new() }
    }

    /// Builds a restriction, rejecting repeated indices.
    pub fn new(assignments: Vec<(usize, bool)>) -> Result<Self> {
        for (pos, &(i, _)) in assignments.iter().enumerate() {
            if assignments[..pos].iter().any(|&(j, _)| j == i) {
                return Err(Error::ConflictingRestriction(i));
            }
        }
        Ok(Restriction { assignments })
    }

    /// Single-variable restriction.
    pub fn fixing(i: usize, b: bool) -> Self {
        Restriction { assignments: vec![(i, b)] }
    }

    /// Internal constructor for callers that already guarantee distinctness
    /// (e.g. the learner's root-to-node paths).
    pub(crate) fn from_distinct(assignments: Vec<(usize, bool)>) -> Self {
        debug_assert!({
            let mut v: Vec<usize> = assignments.iter().map(|&(i, _)| i).collect();
            v.sort_unstable();
            v.windows(2).all(|w| w[0] != w[1])
        });
        Restriction { assignments }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.assignments.iter().any(|&(j, _)| j == i)
    }

    pub fn value_of(&self, i: usize) -> Option<bool> {
        self.assignments.iter().find(|&&(j, _)| j == i).map(|&(_, b)| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.assignments.iter().copied()
    }

    /// Largest variable index mentioned, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.assignments.iter().map(|&(i, _)| i).max()
    }

    /// Union of two restrictions; any repeated index is a conflict.
    pub fn merged(&self, other: &Restriction) -> Result<Restriction> {
        let mut all = self.assignments.clone();
        for (i, b) in other.iter() {
            if self.contains(i) {
                return Err(Error::ConflictingRestriction(i));
            }
            all.push((i, b));
        }
        Ok(Restriction { assignments: all })
    }

    /// Extends with one more constraint; the index must be fresh.
    pub fn extended(&self, i: usize, b: bool) -> Result<Restriction> {
        if self.contains(i) {
            return Err(Error::ConflictingRestriction(i));
        }
        let mut all = self.assignments.clone();
        all.push((i, b));
        Ok(Restriction { assignments: all })
    }

    /// Overwrites the listed coordinates of `x` in place.
    pub fn apply(&self, x: &mut [bool]) {
        for (i, b) in self.iter() {
            x[i] = b;
        }
    }
}

impl TryFrom<Vec<(usize, u8)>> for Restriction {
    type Error = Error;

    fn try_from(raw: Vec<(usize, u8)>) -> Result<Self> {
        let assignments = raw
            .into_iter()
            .map(|(i, b)| match b {
                0 => Ok((i, false)),
                1 => Ok((i, true)),
                other => Err(Error::InvalidSpec(format!(
                    "restriction bit for variable {i} must be 0 or 1, got {other}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Restriction::new(assignments)
    }
}

impl From<Restriction> for Vec<(usize, u8)> {
    fn from(r: Restriction) -> Self {
        r.assignments.into_iter().map(|(i, b)| (i, u8::from(b))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_repeated_index() {
        let err = Restriction::new(vec![(3, true), (3, false)]).unwrap_err();
        assert!(matches!(err, Error::ConflictingRestriction(3)));
    }

    #[test]
    fn merged_detects_conflicts() {
        let a = Restriction::new(vec![(0, true), (2, false)]).unwrap();
        let b = Restriction::new(vec![(1, true)]).unwrap();
        let m = a.merged(&b).unwrap();
        assert_eq!(m.len(), 3);
        assert!(a.merged(&a).is_err());
    }

    #[test]
    fn apply_overwrites() {
        let r = Restriction::new(vec![(1, true), (3, false)]).unwrap();
        let mut x = vec![false, false, true, true];
        r.apply(&mut x);
        assert_eq!(x, vec![false, true, true, false]);
    }

    #[test]
    fn serde_pairs_roundtrip() {
        let r = Restriction::new(vec![(5, true), (0, false)]).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, "[[5,1],[0,0]]");
        let back: Restriction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<Restriction>("[[5,1],[5,0]]").is_err());
    }
}
