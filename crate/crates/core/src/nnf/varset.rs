use smallvec::SmallVec;

use super::Var;

/// A set of variables stored as a bitset.
///
/// Up to 128 variables fit inline without allocation, which keeps the
/// per-node bookkeeping of conditioned circuits cheap.
#[derive(Clone, Default)]
pub struct VarSet {
    words: SmallVec<[u64; 2]>,
}

impl VarSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(var: Var) -> Self {
        let mut s = Self::new();
        s.insert(var);
        s
    }

    fn locate(var: Var) -> (usize, u64) {
        let v = var as usize;
        (v / 64, 1u64 << (v % 64))
    }

    pub fn insert(&mut self, var: Var) {
        let (w, bit) = Self::locate(var);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= bit;
    }

    pub fn contains(&self, var: Var) -> bool {
        let (w, bit) = Self::locate(var);
        self.words.get(w).is_some_and(|x| x & bit != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn union_with(&mut self, other: &VarSet) {
        if self.words.len() < other.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= *b;
        }
    }

    pub fn is_disjoint(&self, other: &VarSet) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & b == 0)
    }

    /// Variables in `self` that are not in `other`.
    pub fn difference(&self, other: &VarSet) -> VarSet {
        let mut words = self.words.clone();
        for (a, b) in words.iter_mut().zip(other.words.iter()) {
            *a &= !*b;
        }
        VarSet { words }
    }

    /// Size of `self ∖ other`, without building the set.
    pub fn difference_len(&self, other: &VarSet) -> usize {
        self.words
            .iter()
            .enumerate()
            .map(|(i, &a)| (a & !other.words.get(i).copied().unwrap_or(0)).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = Var> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64u32)
                .filter(move |b| w & (1u64 << b) != 0)
                .map(move |b| (i as u32) * 64 + b)
        })
    }
}

impl PartialEq for VarSet {
    fn eq(&self, other: &Self) -> bool {
        let n = self.words.len().max(other.words.len());
        (0..n).all(|i| self.words.get(i).copied().unwrap_or(0) == other.words.get(i).copied().unwrap_or(0))
    }
}

impl Eq for VarSet {}

impl FromIterator<Var> for VarSet {
    fn from_iter<I: IntoIterator<Item = Var>>(iter: I) -> Self {
        let mut s = VarSet::new();
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl std::fmt::Debug for VarSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let a: VarSet = [1, 3, 200].into_iter().collect();
        let b: VarSet = [3, 4].into_iter().collect();
        assert!(a.contains(200) && !a.contains(2));
        assert_eq!(a.len(), 3);
        assert!(!a.is_disjoint(&b));
        assert_eq!(a.difference(&b).iter().collect::<Vec<_>>(), vec![1, 200]);
        let mut c = b.clone();
        c.union_with(&a);
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![1, 3, 4, 200]);
        assert!(VarSet::new().is_empty());
    }

    #[test]
    fn equality_ignores_trailing_zero_words() {
        let mut a = VarSet::singleton(1);
        let b = VarSet::singleton(1);
        a.insert(130);
        let a = a.difference(&VarSet::singleton(130));
        assert_eq!(a, b);
        assert_ne!(a, VarSet::singleton(2));
    }
}
