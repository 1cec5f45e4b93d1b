//! Demand situations as bipartite graphs, augmenting-path matching and the
//! allocations matchings induce.
//!
//! Every search runs in a fixed order (ascending buyer index, neighbours in
//! ascending item index), so the maximum matching found for a demand
//! situation is a deterministic function of it. The over-demand search and
//! the mechanism both depend on that.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::model::{Allocation, BuyerId, DemandSituation, ItemId, ItemSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchingError {
    #[error("edge ({buyer}, item {item:?}) is not in the graph")]
    NotAnEdge { buyer: BuyerId, item: ItemId },
    #[error("buyer {0} appears in more than one matched edge")]
    BuyerReused(BuyerId),
    #[error("item {0:?} appears in more than one matched edge")]
    ItemReused(ItemId),
}

/// `BG(D)`: buyers without the dummy in their demand on the left, the real
/// items they demand on the right.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BipartiteGraph {
    adjacency: BTreeMap<BuyerId, Vec<ItemId>>,
    right: ItemSet,
}

impl BipartiteGraph {
    /// Left vertices in ascending order.
    pub fn left(&self) -> impl Iterator<Item = BuyerId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn right(&self) -> &ItemSet {
        &self.right
    }

    pub fn neighbors(&self, buyer: BuyerId) -> &[ItemId] {
        self.adjacency.get(&buyer).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_edge(&self, buyer: BuyerId, item: ItemId) -> bool {
        self.neighbors(buyer).binary_search(&item).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (BuyerId, ItemId)> + '_ {
        self.adjacency.iter().flat_map(|(&i, adj)| adj.iter().map(move |&a| (i, a)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(Vec::len).sum()
    }

    pub fn left_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }
}

/// Builds `BG(D)`. Buyers whose demand contains the dummy are left out.
pub fn build_graph(demands: &DemandSituation) -> BipartiteGraph {
    let mut graph = BipartiteGraph::default();
    for (i, d) in demands.iter() {
        if d.contains(&ItemId::DUMMY) {
            continue;
        }
        let adj: Vec<ItemId> = d.iter().copied().collect();
        graph.right.extend(adj.iter().copied());
        graph.adjacency.insert(i, adj);
    }
    graph
}

/// A set of vertex-disjoint buyer–item pairs, indexed both ways.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct Matching {
    by_buyer: BTreeMap<BuyerId, ItemId>,
    by_item: BTreeMap<ItemId, BuyerId>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (BuyerId, ItemId)>) -> Result<Self, MatchingError> {
        let mut m = Matching::new();
        for (i, a) in pairs {
            m.insert(i, a)?;
        }
        Ok(m)
    }

    /// Adds an edge; both endpoints must be free.
    pub fn insert(&mut self, buyer: BuyerId, item: ItemId) -> Result<(), MatchingError> {
        if self.by_buyer.contains_key(&buyer) {
            return Err(MatchingError::BuyerReused(buyer));
        }
        if self.by_item.contains_key(&item) {
            return Err(MatchingError::ItemReused(item));
        }
        self.by_buyer.insert(buyer, item);
        self.by_item.insert(item, buyer);
        Ok(())
    }

    pub fn item_of(&self, buyer: BuyerId) -> Option<ItemId> {
        self.by_buyer.get(&buyer).copied()
    }

    /// The buyer matched to `item`, if any.
    pub fn holder_of(&self, item: ItemId) -> Option<BuyerId> {
        self.by_item.get(&item).copied()
    }

    pub fn contains_buyer(&self, buyer: BuyerId) -> bool {
        self.by_buyer.contains_key(&buyer)
    }

    pub fn contains_item(&self, item: ItemId) -> bool {
        self.by_item.contains_key(&item)
    }

    pub fn contains(&self, buyer: BuyerId, item: ItemId) -> bool {
        self.item_of(buyer) == Some(item)
    }

    /// Edges in ascending buyer order.
    pub fn pairs(&self) -> impl Iterator<Item = (BuyerId, ItemId)> + '_ {
        self.by_buyer.iter().map(|(&i, &a)| (i, a))
    }

    pub fn buyers(&self) -> impl Iterator<Item = BuyerId> + '_ {
        self.by_buyer.keys().copied()
    }

    pub fn items(&self) -> ItemSet {
        self.by_item.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.by_buyer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_buyer.is_empty()
    }

    /// Checks that every edge belongs to `graph`. Disjointness holds by construction.
    pub fn validate_in(&self, graph: &BipartiteGraph) -> Result<(), MatchingError> {
        match self.pairs().find(|&(i, a)| !graph.has_edge(i, a)) {
            Some((buyer, item)) => Err(MatchingError::NotAnEdge { buyer, item }),
            None => Ok(()),
        }
    }

    /// `M ∩ E`: the edges that belong to `graph`.
    pub fn restricted_to(&self, graph: &BipartiteGraph) -> Matching {
        let mut m = Matching::new();
        for (i, a) in self.pairs().filter(|&(i, a)| graph.has_edge(i, a)) {
            m.by_buyer.insert(i, a);
            m.by_item.insert(a, i);
        }
        m
    }

    /// Union of two matchings that must not share a vertex.
    pub fn union(&self, other: &Matching) -> Result<Matching, MatchingError> {
        let mut m = self.clone();
        for (i, a) in other.pairs() {
            m.insert(i, a)?;
        }
        Ok(m)
    }

    /// Every vertex (buyer or item) covered by the matching is also covered by `other`.
    pub fn vertices_covered_by(&self, other: &Matching) -> bool {
        self.by_buyer.keys().all(|i| other.contains_buyer(*i)) && self.by_item.keys().all(|a| other.contains_item(*a))
    }
}

/// One augmentation phase.
///
/// Breadth-first layering from every unmatched left vertex, then a
/// depth-first sweep over those vertices in ascending order, each scanning
/// its neighbours in ascending item order and taking the first shortest
/// augmenting path that is still available. Runs in `O(|E|)`. Returns the
/// input unchanged exactly when it admits no augmenting path.
pub fn augment(graph: &BipartiteGraph, matching: &Matching) -> Result<Matching, MatchingError> {
    matching.validate_in(graph)?;
    let mut phase = Phase::new(graph, matching);
    if !phase.layer() {
        return Ok(matching.clone());
    }
    let free: Vec<usize> = (0..phase.left.len()).filter(|&u| phase.mate[u].is_none()).collect();
    for u in free {
        phase.search(u);
    }
    Ok(phase.into_matching())
}

const UNREACHED: usize = usize::MAX;

/// Dense working copy of the graph for one phase.
struct Phase<'g> {
    left: Vec<BuyerId>,
    adjacency: Vec<&'g [ItemId]>,
    mate: Vec<Option<ItemId>>,
    owner: BTreeMap<ItemId, usize>,
    dist: Vec<usize>,
    free_dist: usize,
}

impl<'g> Phase<'g> {
    fn new(graph: &'g BipartiteGraph, matching: &Matching) -> Self {
        let left: Vec<BuyerId> = graph.left().collect();
        let adjacency = left.iter().map(|&i| graph.neighbors(i)).collect();
        let mate: Vec<Option<ItemId>> = left.iter().map(|&i| matching.item_of(i)).collect();
        let owner = mate.iter().enumerate().filter_map(|(u, a)| a.map(|a| (a, u))).collect();
        let n = left.len();
        Phase { left, adjacency, mate, owner, dist: vec![UNREACHED; n], free_dist: UNREACHED }
    }

    /// Builds the alternating layers; true if some free item was reached.
    fn layer(&mut self) -> bool {
        let mut queue = VecDeque::new();
        for u in 0..self.left.len() {
            if self.mate[u].is_none() {
                self.dist[u] = 0;
                queue.push_back(u);
            }
        }
        while let Some(u) = queue.pop_front() {
            if self.dist[u] >= self.free_dist {
                continue;
            }
            for &a in self.adjacency[u] {
                match self.owner.get(&a) {
                    None => {
                        if self.free_dist == UNREACHED {
                            self.free_dist = self.dist[u] + 1;
                        }
                    }
                    Some(&w) => {
                        if self.dist[w] == UNREACHED {
                            self.dist[w] = self.dist[u] + 1;
                            queue.push_back(w);
                        }
                    }
                }
            }
        }
        self.free_dist != UNREACHED
    }

    fn search(&mut self, u: usize) -> bool {
        for k in 0..self.adjacency[u].len() {
            let a = self.adjacency[u][k];
            let next = self.dist[u] + 1;
            let found = match self.owner.get(&a).copied() {
                None => next == self.free_dist,
                Some(w) => self.dist[w] == next && self.search(w),
            };
            if found {
                self.mate[u] = Some(a);
                self.owner.insert(a, u);
                return true;
            }
        }
        self.dist[u] = UNREACHED;
        false
    }

    fn into_matching(self) -> Matching {
        let mut m = Matching::new();
        for (u, a) in self.mate.iter().enumerate() {
            if let Some(a) = a {
                m.by_buyer.insert(self.left[u], *a);
                m.by_item.insert(*a, self.left[u]);
            }
        }
        m
    }
}

/// Iterates [`augment`] from `start` until nothing changes.
pub fn maximize(graph: &BipartiteGraph, start: &Matching) -> Result<Matching, MatchingError> {
    let mut current = start.clone();
    loop {
        let next = augment(graph, &current)?;
        if next == current {
            return Ok(current);
        }
        current = next;
    }
}

/// `M̂_D`: the deterministic maximum matching of `BG(D)`.
pub fn max_matching(demands: &DemandSituation) -> Matching {
    maximize(&build_graph(demands), &Matching::new()).expect("the empty matching is valid in every graph")
}

/// `π^M`: matched buyers get their item, everyone else the dummy.
pub fn matching_to_allocation(matching: &Matching, buyer_count: usize) -> Allocation {
    let assignment = (0..buyer_count).map(|i| matching.item_of(BuyerId(i)).unwrap_or(ItemId::DUMMY)).collect();
    Allocation::new(assignment).expect("a matching never assigns an item twice")
}

/// An equilibrium allocation exists iff the maximum matching covers every
/// buyer whose demand excludes the dummy.
pub fn equilibrium_allocation_exists(demands: &DemandSituation) -> bool {
    max_matching(demands).len() == demands.real_demanders().count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::items;

    fn b(i: usize) -> BuyerId {
        BuyerId(i - 1)
    }

    fn ds(rows: &[&[usize]]) -> DemandSituation {
        DemandSituation::from_pairs(rows.iter().enumerate().map(|(i, r)| (BuyerId(i), r.iter().map(|&a| ItemId(a)))))
            .unwrap()
    }

    fn example2() -> DemandSituation {
        // a=1, c=3, d=4
        ds(&[&[3, 4], &[3], &[3], &[1], &[4]])
    }

    #[test]
    fn example2_graph() {
        let g = build_graph(&example2());
        assert_eq!(g.left().collect::<Vec<_>>(), (1..=5).map(b).collect::<Vec<_>>());
        assert_eq!(g.right(), &items(&[1, 3, 4]));
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn dummy_demanders_excluded() {
        let g = build_graph(&ds(&[&[0, 4], &[3]]));
        assert_eq!(g.left().collect::<Vec<_>>(), vec![b(2)]);
        assert!(build_graph(&ds(&[&[0], &[0]])).is_empty());
    }

    #[test]
    fn example2_maximum_matching() {
        let m = max_matching(&example2());
        let expected = Matching::from_pairs([(b(1), ItemId(3)), (b(4), ItemId(1)), (b(5), ItemId(4))]).unwrap();
        assert_eq!(m, expected);
        assert!(!equilibrium_allocation_exists(&example2()));
    }

    #[test]
    fn example2_matching_is_a_fixed_point() {
        let g = build_graph(&example2());
        let m = Matching::from_pairs([(b(1), ItemId(3)), (b(4), ItemId(1)), (b(5), ItemId(4))]).unwrap();
        assert_eq!(augment(&g, &m).unwrap(), m);
    }

    #[test]
    fn augment_from_empty_grows() {
        let g = build_graph(&example2());
        let m = augment(&g, &Matching::new()).unwrap();
        assert!(!m.is_empty());
    }

    #[test]
    fn augment_rejects_foreign_edge() {
        let g = build_graph(&example2());
        let m = Matching::from_pairs([(b(2), ItemId(1))]).unwrap();
        assert_eq!(augment(&g, &m), Err(MatchingError::NotAnEdge { buyer: b(2), item: ItemId(1) }));
        assert_eq!(
            Matching::from_pairs([(b(1), ItemId(3)), (b(2), ItemId(3))]),
            Err(MatchingError::ItemReused(ItemId(3)))
        );
    }

    #[test]
    fn augment_reroutes_along_long_path() {
        // 1:{a,b} 2:{a} starting from {1a}: the only augmenting path is 2-a-1-b.
        let g = build_graph(&ds(&[&[1, 2], &[1]]));
        let m = Matching::from_pairs([(b(1), ItemId(1))]).unwrap();
        let next = augment(&g, &m).unwrap();
        assert_eq!(next.len(), 2);
        assert_eq!(next.item_of(b(1)), Some(ItemId(2)));
        assert!(m.vertices_covered_by(&next));
    }

    #[test]
    fn allocations() {
        let m = Matching::from_pairs([(b(1), ItemId(3)), (b(4), ItemId(1)), (b(5), ItemId(4))]).unwrap();
        let pi = matching_to_allocation(&m, 5);
        assert_eq!(pi.as_slice(), &[ItemId(3), ItemId(0), ItemId(0), ItemId(1), ItemId(4)]);
        let empty = matching_to_allocation(&Matching::new(), 3);
        assert!(empty.as_slice().iter().all(|a| a.is_dummy()));
    }

    #[test]
    fn trivial_existence() {
        assert!(equilibrium_allocation_exists(&ds(&[&[0], &[0, 2]])));
        assert!(equilibrium_allocation_exists(&DemandSituation::default()));
        assert!(max_matching(&DemandSituation::default()).is_empty());
    }

    #[test]
    fn restriction_and_union() {
        let g = build_graph(&ds(&[&[0, 1], &[2]]));
        let m = Matching::from_pairs([(b(1), ItemId(1)), (b(2), ItemId(2))]).unwrap();
        let r = m.restricted_to(&g);
        assert_eq!(r.pairs().collect::<Vec<_>>(), vec![(b(2), ItemId(2))]);
        let other = Matching::from_pairs([(b(3), ItemId(3))]).unwrap();
        assert_eq!(r.union(&other).unwrap().len(), 2);
        assert!(r.union(&m).is_err());
    }
}
