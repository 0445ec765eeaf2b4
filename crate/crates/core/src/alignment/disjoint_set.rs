use std::collections::HashMap;
use std::hash::Hash;

/// Union-find over arbitrary keys with union by size and path compression.
#[derive(Debug, Clone)]
pub struct DisjointSet<T> {
    index: HashMap<T, usize>,
    elements: Vec<T>,
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl<T> Default for DisjointSet<T> {
    fn default() -> Self {
        DisjointSet { index: HashMap::new(), elements: Vec::new(), parent: Vec::new(), size: Vec::new() }
    }
}

impl<T: Hash + Eq + Clone> DisjointSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Adds `x` as a singleton if unseen; returns its slot.
    pub fn insert(&mut self, x: &T) -> usize {
        if let Some(&i) = self.index.get(x) {
            return i;
        }
        let i = self.elements.len();
        self.index.insert(x.clone(), i);
        self.elements.push(x.clone());
        self.parent.push(i);
        self.size.push(1);
        i
    }

    fn root(&mut self, mut i: usize) -> usize {
        let mut r = i;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        while self.parent[i] != r {
            let next = self.parent[i];
            self.parent[i] = r;
            i = next;
        }
        r
    }

    /// Representative of `x`'s set, or `None` for unseen elements.
    pub fn find(&mut self, x: &T) -> Option<&T> {
        let i = *self.index.get(x)?;
        let r = self.root(i);
        Some(&self.elements[r])
    }

    /// Merges the sets of `a` and `b`, inserting them if needed.
    /// Returns `false` when they already shared a set.
    pub fn union(&mut self, a: &T, b: &T) -> bool {
        let ia = self.insert(a);
        let ib = self.insert(b);
        let (ra, rb) = (self.root(ia), self.root(ib));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        true
    }

    pub fn same_set(&mut self, a: &T, b: &T) -> bool {
        match (self.index.get(a).copied(), self.index.get(b).copied()) {
            (Some(ia), Some(ib)) => self.root(ia) == self.root(ib),
            _ => a == b,
        }
    }

    /// All sets, each in insertion order, ordered by their first-inserted member.
    pub fn groups(&mut self) -> Vec<Vec<T>> {
        let mut slot_of_root: HashMap<usize, usize> = HashMap::new();
        let mut groups: Vec<Vec<T>> = Vec::new();
        for i in 0..self.elements.len() {
            let r = self.root(i);
            let slot = *slot_of_root.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[slot].push(self.elements[i].clone());
        }
        groups
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn basic() {
        let mut ds = DisjointSet::new();
        assert!(ds.union(&1, &2));
        assert!(!ds.union(&2, &1));
        assert!(ds.same_set(&1, &2));
        assert!(!ds.same_set(&1, &3));
        ds.insert(&3);
        assert_eq!(ds.groups(), vec![vec![1, 2], vec![3]]);
        assert_eq!(ds.find(&4), None);
    }

    /// Quick-find: relabel every member of the absorbed set.
    fn naive_partition(n: usize, unions: &[(usize, usize)]) -> BTreeSet<BTreeSet<usize>> {
        let mut label: Vec<usize> = (0..n).collect();
        for &(a, b) in unions {
            let (la, lb) = (label[a], label[b]);
            for l in label.iter_mut() {
                if *l == lb {
                    *l = la;
                }
            }
        }
        let mut sets = std::collections::BTreeMap::<usize, BTreeSet<usize>>::new();
        for (i, l) in label.iter().enumerate() {
            sets.entry(*l).or_default().insert(i);
        }
        sets.into_values().collect()
    }

    fn partition(n: usize, unions: &[(usize, usize)]) -> BTreeSet<BTreeSet<usize>> {
        let mut ds = DisjointSet::new();
        for i in 0..n {
            ds.insert(&i);
        }
        for (a, b) in unions {
            ds.union(a, b);
        }
        ds.groups().into_iter().map(|g| g.into_iter().collect()).collect()
    }

    proptest! {
        #[test]
        fn matches_naive_union_find(unions in proptest::collection::vec((0usize..25, 0usize..25), 0..40)) {
            prop_assert_eq!(partition(25, &unions), naive_partition(25, &unions));
        }

        #[test]
        fn partition_independent_of_union_order(mut unions in proptest::collection::vec((0usize..20, 0usize..20), 0..30)) {
            let forward = partition(20, &unions);
            unions.reverse();
            let swapped: Vec<_> = unions.iter().map(|&(a, b)| (b, a)).collect();
            prop_assert_eq!(&forward, &partition(20, &swapped));
        }

        #[test]
        fn find_is_idempotent_and_union_connects(unions in proptest::collection::vec((0usize..15, 0usize..15), 1..20)) {
            let mut ds = DisjointSet::new();
            for (a, b) in &unions {
                ds.union(a, b);
                let ra = *ds.find(a).unwrap();
                prop_assert_eq!(Some(&ra), ds.find(b));
                prop_assert_eq!(Some(&ra), ds.find(&ra));
            }
        }
    }
}
