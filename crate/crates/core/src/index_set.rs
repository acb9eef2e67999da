use std::fmt;

/// A finite, sorted set of basis indices (the `Ω` of a restriction).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    /// All indices `0..n`.
    pub fn full(n: usize) -> Self {
        IndexSet((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Largest index, if any.
    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// `{0..n} \ self`.
    pub fn complement(&self, n: usize) -> IndexSet {
        IndexSet((0..n).filter(|&i| !self.contains(i)).collect())
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        self.iter().chain(other.iter()).collect()
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        IndexSet(v)
    }
}

impl From<Vec<usize>> for IndexSet {
    fn from(v: Vec<usize>) -> Self {
        v.into_iter().collect()
    }
}

impl<const N: usize> From<[usize; N]> for IndexSet {
    fn from(v: [usize; N]) -> Self {
        v.into_iter().collect()
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_deduplicated() {
        let s: IndexSet = vec![5, 1, 3, 1].into();
        assert_eq!(s.as_slice(), &[1, 3, 5]);
        assert!(s.contains(3));
        assert!(!s.contains(2));
        assert_eq!(s.complement(6).as_slice(), &[0, 2, 4]);
        assert_eq!(s.to_string(), "[1 3 5]");
    }
}
