//! An agent's subjective fragment of the landscape.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::landscape::{ArgumentId, AttackView, Edge, Landscape, LandscapeShape, MAX_DEGREE};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KnowledgeError {
    #[error("argument {0} is not part of the landscape")]
    ForeignArgument(ArgumentId),
    #[error("argument {0} has not been discovered")]
    Undiscovered(ArgumentId),
    #[error("fragments belong to differently shaped landscapes")]
    ShapeMismatch,
    #[error("invalid exploration degree {value} with progress {progress}")]
    InvalidDegree { value: u8, progress: u8 },
}

/// How far an argument has been explored: a level in `0..=6` plus the rounds
/// of work already spent towards the next level.
///
/// Ordering is lexicographic on (value, progress), which is exactly the
/// "more explored" order used when fragments are merged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ExplorationDegree {
    value: u8,
    progress: u8,
}

impl ExplorationDegree {
    pub const FULL: Self = Self {
        value: MAX_DEGREE,
        progress: 0,
    };

    pub fn new(value: u8, progress: u8) -> Result<Self, KnowledgeError> {
        if value > MAX_DEGREE || (value == MAX_DEGREE && progress != 0) {
            return Err(KnowledgeError::InvalidDegree { value, progress });
        }
        Ok(Self { value, progress })
    }

    pub fn value(&self) -> u8 {
        self.value
    }

    pub fn progress(&self) -> u8 {
        self.progress
    }

    pub fn is_full(&self) -> bool {
        self.value == MAX_DEGREE
    }

    /// One round of work. Returns true when the level went up.
    pub fn advance(&mut self, rounds_per_degree: u8) -> bool {
        if self.is_full() {
            return false;
        }
        self.progress += 1;
        if self.progress >= rounds_per_degree {
            self.progress = 0;
            self.value += 1;
            true
        } else {
            false
        }
    }
}

/// Discovered arguments (with their exploration degree), and the attack and
/// discovery edges known to one agent. The same type doubles as the fragment
/// exchanged between agents.
#[derive(Clone, Debug)]
pub struct SubjectiveKnowledge {
    shape: Arc<LandscapeShape>,
    degrees: BTreeMap<ArgumentId, ExplorationDegree>,
    // target -> attackers
    attackers: BTreeMap<ArgumentId, BTreeSet<ArgumentId>>,
    children: BTreeMap<ArgumentId, BTreeSet<ArgumentId>>,
    parents: BTreeMap<ArgumentId, ArgumentId>,
    full_per_theory: Vec<usize>,
}

impl PartialEq for SubjectiveKnowledge {
    fn eq(&self, other: &Self) -> bool {
        *self.shape == *other.shape
            && self.degrees == other.degrees
            && self.attackers == other.attackers
            && self.children == other.children
    }
}

impl Eq for SubjectiveKnowledge {}

impl SubjectiveKnowledge {
    pub fn new(shape: Arc<LandscapeShape>) -> Self {
        let n = shape.num_theories();
        Self {
            shape,
            degrees: BTreeMap::new(),
            attackers: BTreeMap::new(),
            children: BTreeMap::new(),
            parents: BTreeMap::new(),
            full_per_theory: vec![0; n],
        }
    }

    /// Knowledge of the whole landscape at full exploration.
    pub fn complete(landscape: &Landscape) -> Self {
        let mut k = Self::new(landscape.shape().clone());
        for a in landscape.arguments() {
            k.raise_degree(a, ExplorationDegree::FULL);
        }
        for e in landscape.attacks() {
            k.attackers.entry(e.target).or_default().insert(e.attacker);
        }
        for d in landscape.discovery_edges() {
            k.children.entry(d.parent).or_default().insert(d.child);
            k.parents.insert(d.child, d.parent);
        }
        k
    }

    pub fn shape(&self) -> &Arc<LandscapeShape> {
        &self.shape
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    fn check(&self, a: ArgumentId) -> Result<(), KnowledgeError> {
        if self.shape.contains(a) {
            Ok(())
        } else {
            Err(KnowledgeError::ForeignArgument(a))
        }
    }

    /// Keeps the larger of the stored and the given degree.
    fn raise_degree(&mut self, a: ArgumentId, degree: ExplorationDegree) -> bool {
        let slot = self.degrees.entry(a).or_default();
        if degree > *slot {
            if degree.is_full() && !slot.is_full() {
                self.full_per_theory[a.theory] += 1;
            }
            *slot = degree;
            true
        } else {
            false
        }
    }

    /// Marks `a` as discovered at degree 0. Returns true if it was unknown.
    pub fn discover(&mut self, a: ArgumentId) -> Result<bool, KnowledgeError> {
        self.check(a)?;
        let fresh = !self.degrees.contains_key(&a);
        self.degrees.entry(a).or_default();
        Ok(fresh)
    }

    pub fn set_degree(&mut self, a: ArgumentId, degree: ExplorationDegree) -> Result<(), KnowledgeError> {
        self.check(a)?;
        self.raise_degree(a, degree);
        Ok(())
    }

    pub fn degree(&self, a: ArgumentId) -> Option<ExplorationDegree> {
        self.degrees.get(&a).copied()
    }

    pub fn is_discovered(&self, a: ArgumentId) -> bool {
        self.degrees.contains_key(&a)
    }

    pub fn is_fully_explored(&self, a: ArgumentId) -> bool {
        self.degree(a).is_some_and(|d| d.is_full())
    }

    /// Discovered arguments with their degrees, in id order.
    pub fn degrees(&self) -> impl Iterator<Item = (ArgumentId, ExplorationDegree)> + '_ {
        self.degrees.iter().map(|(&a, &d)| (a, d))
    }

    pub fn discovered_in(&self, theory: usize) -> impl Iterator<Item = (ArgumentId, ExplorationDegree)> + '_ {
        self.degrees
            .range(ArgumentId::new(theory, 0)..ArgumentId::new(theory + 1, 0))
            .map(|(&a, &d)| (a, d))
    }

    pub fn num_discovered(&self) -> usize {
        self.degrees.len()
    }

    /// True when every argument of `theory` is known at degree 6.
    pub fn theory_fully_explored(&self, theory: usize) -> bool {
        self.full_per_theory[theory] == self.shape.theory_size(theory)
    }

    /// Adds an edge, discovering both endpoints. Returns true if it was new.
    pub fn add_edge(&mut self, edge: Edge) -> Result<bool, KnowledgeError> {
        let (x, y) = edge.endpoints();
        self.check(x)?;
        self.check(y)?;
        self.degrees.entry(x).or_default();
        self.degrees.entry(y).or_default();
        Ok(match edge {
            Edge::Attack { attacker, target } => {
                self.attackers.entry(target).or_default().insert(attacker)
            }
            Edge::Discovery { parent, child } => {
                self.parents.insert(child, parent);
                self.children.entry(parent).or_default().insert(child)
            }
        })
    }

    pub fn knows_edge(&self, edge: Edge) -> bool {
        match edge {
            Edge::Attack { attacker, target } => self
                .attackers
                .get(&target)
                .is_some_and(|s| s.contains(&attacker)),
            Edge::Discovery { parent, child } => self
                .children
                .get(&parent)
                .is_some_and(|s| s.contains(&child)),
        }
    }

    pub fn known_attacks(&self) -> impl Iterator<Item = (ArgumentId, ArgumentId)> + '_ {
        self.attackers
            .iter()
            .flat_map(|(&t, bs)| bs.iter().map(move |&b| (b, t)))
    }

    pub fn known_discovery_edges(&self) -> impl Iterator<Item = (ArgumentId, ArgumentId)> + '_ {
        self.children
            .iter()
            .flat_map(|(&p, cs)| cs.iter().map(move |&c| (p, c)))
    }

    pub fn num_known_edges(&self) -> usize {
        self.attackers.values().map(BTreeSet::len).sum::<usize>()
            + self.children.values().map(BTreeSet::len).sum::<usize>()
    }

    pub fn known_attackers(&self, target: ArgumentId) -> impl Iterator<Item = ArgumentId> + '_ {
        self.attackers.get(&target).into_iter().flatten().copied()
    }

    pub fn known_children(&self, parent: ArgumentId) -> impl Iterator<Item = ArgumentId> + '_ {
        self.children.get(&parent).into_iter().flatten().copied()
    }

    pub fn known_parent(&self, child: ArgumentId) -> Option<ArgumentId> {
        self.parents.get(&child).copied()
    }

    /// Edges incident to `a` that are visible at the current degree of `a`.
    pub fn visible_edges(&self, landscape: &Landscape, a: ArgumentId) -> Result<Vec<Edge>, KnowledgeError> {
        self.check(a)?;
        let degree = self.degree(a).ok_or(KnowledgeError::Undiscovered(a))?;
        let incident = landscape
            .incident(a)
            .map_err(|_| KnowledgeError::ForeignArgument(a))?;
        Ok(incident
            .iter()
            .filter(|i| i.threshold <= degree.value())
            .map(|i| i.edge)
            .collect())
    }

    /// Adds every edge visible from `a` and returns the ones that were new.
    pub fn absorb_visible(&mut self, landscape: &Landscape, a: ArgumentId) -> Result<Vec<Edge>, KnowledgeError> {
        let mut fresh = Vec::new();
        for e in self.visible_edges(landscape, a)? {
            if self.add_edge(e)? {
                fresh.push(e);
            }
        }
        Ok(fresh)
    }

    /// Unions `other` into `self`: discovered sets and edge sets are joined,
    /// each argument keeps the more advanced of the two degrees.
    pub fn merge(&mut self, other: &SubjectiveKnowledge) -> Result<(), KnowledgeError> {
        if !Arc::ptr_eq(&self.shape, &other.shape) && *self.shape != *other.shape {
            return Err(KnowledgeError::ShapeMismatch);
        }
        for (&a, &d) in &other.degrees {
            self.raise_degree(a, d);
        }
        for (&t, bs) in &other.attackers {
            self.attackers.entry(t).or_default().extend(bs.iter().copied());
        }
        for (&p, cs) in &other.children {
            self.children.entry(p).or_default().extend(cs.iter().copied());
            for &c in cs {
                self.parents.insert(c, p);
            }
        }
        Ok(())
    }

    /// Number of discovered arguments of `theory` that are defended against
    /// every known attack.
    pub fn subjective_defensibility(&self, theory: usize) -> usize {
        self.discovered_in(theory)
            .filter(|&(a, _)| {
                self.known_attackers(a)
                    .all(|b| self.known_attackers(b).any(|c| c.theory == theory))
            })
            .count()
    }

    /// The part of this fragment that concerns `theory`: its arguments, its
    /// discovery edges, and attacks with an endpoint in it (far endpoints
    /// come along at degree 0).
    pub fn restricted_to(&self, theory: usize) -> SubjectiveKnowledge {
        let mut out = SubjectiveKnowledge::new(self.shape.clone());
        for (a, d) in self.discovered_in(theory) {
            out.raise_degree(a, d);
        }
        for (b, t) in self.known_attacks() {
            if b.theory == theory || t.theory == theory {
                let _ = out.add_edge(Edge::Attack { attacker: b, target: t });
            }
        }
        for (p, c) in self.known_discovery_edges() {
            if p.theory == theory {
                let _ = out.add_edge(Edge::Discovery { parent: p, child: c });
            }
        }
        out
    }

    /// Drops every known attack whose target is in `theory`.
    pub fn without_attacks_on(&self, theory: usize) -> SubjectiveKnowledge {
        let mut out = self.clone();
        out.attackers.retain(|t, _| t.theory != theory);
        out
    }

    pub fn clear(&mut self) {
        self.degrees.clear();
        self.attackers.clear();
        self.children.clear();
        self.parents.clear();
        self.full_per_theory.iter_mut().for_each(|n| *n = 0);
    }

    /// Debug dump in the same line format as [`Landscape::to_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (a, d) in self.degrees() {
            let _ = writeln!(out, "argument {a} degree={} progress={}", d.value(), d.progress());
        }
        for (p, c) in self.known_discovery_edges() {
            let _ = writeln!(out, "discovery {p} {c}");
        }
        for (b, t) in self.known_attacks() {
            let _ = writeln!(out, "attack {b} {t}");
        }
        out
    }
}

impl AttackView for SubjectiveKnowledge {
    fn contains_argument(&self, a: ArgumentId) -> bool {
        self.is_discovered(a)
    }

    fn attackers(&self, target: ArgumentId) -> Vec<ArgumentId> {
        self.known_attackers(target).collect()
    }

    fn attacked_from_theory(&self, target: ArgumentId, theory: usize) -> bool {
        self.known_attackers(target).any(|c| c.theory == theory)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{is_defended, AttackEdge, AttackOrigin, LandscapeConfig};

    fn small(attacks: &[((usize, usize), (usize, usize))]) -> Landscape {
        let cfg = LandscapeConfig {
            num_theories: 2,
            depth: 1,
            branching: 2,
            attack_probability: 0.0,
            seed: 0,
        };
        let attacks = attacks
            .iter()
            .map(|&(b, a)| AttackEdge {
                attacker: ArgumentId::new(b.0, b.1),
                target: ArgumentId::new(a.0, a.1),
                origin: AttackOrigin::Sampled,
                thresholds: [4, 2],
            })
            .collect();
        Landscape::from_parts(cfg, attacks, |_, _| [3, 1], 0).unwrap()
    }

    fn id(t: usize, n: usize) -> ArgumentId {
        ArgumentId::new(t, n)
    }

    #[test]
    fn degree_advances_every_five_rounds() {
        let mut d = ExplorationDegree::default();
        for _ in 0..4 {
            assert!(!d.advance(5));
        }
        assert!(d.advance(5));
        assert_eq!(d.value(), 1);
        for _ in 0..25 {
            d.advance(5);
        }
        assert_eq!(d, ExplorationDegree::FULL);
        assert!(!d.advance(5));
        assert_eq!(d, ExplorationDegree::FULL);
    }

    #[test]
    fn invalid_degrees_are_rejected() {
        assert!(ExplorationDegree::new(7, 0).is_err());
        assert!(ExplorationDegree::new(6, 1).is_err());
        assert!(ExplorationDegree::new(5, 4).is_ok());
    }

    #[test]
    fn visibility_follows_thresholds() {
        let l = small(&[((1, 1), (0, 0))]);
        let mut k = SubjectiveKnowledge::new(l.shape().clone());
        k.discover(id(0, 0)).unwrap();
        assert!(k.visible_edges(&l, id(0, 0)).unwrap().is_empty());

        k.set_degree(id(0, 0), ExplorationDegree::new(2, 0).unwrap()).unwrap();
        // the attack has threshold 2 at its target
        assert_eq!(
            k.visible_edges(&l, id(0, 0)).unwrap(),
            vec![Edge::Attack {
                attacker: id(1, 1),
                target: id(0, 0)
            }]
        );
        k.set_degree(id(0, 0), ExplorationDegree::new(3, 0).unwrap()).unwrap();
        assert_eq!(k.visible_edges(&l, id(0, 0)).unwrap().len(), 3);

        k.set_degree(id(0, 0), ExplorationDegree::FULL).unwrap();
        assert_eq!(k.visible_edges(&l, id(0, 0)).unwrap().len(), l.incident(id(0, 0)).unwrap().len());
    }

    #[test]
    fn visible_edges_of_unknown_argument_fail() {
        let l = small(&[]);
        let k = SubjectiveKnowledge::new(l.shape().clone());
        assert_eq!(k.visible_edges(&l, id(0, 1)), Err(KnowledgeError::Undiscovered(id(0, 1))));
        assert_eq!(k.visible_edges(&l, id(5, 1)), Err(KnowledgeError::ForeignArgument(id(5, 1))));
    }

    #[test]
    fn absorbing_discovers_far_endpoints() {
        let l = small(&[((1, 1), (0, 0))]);
        let mut k = SubjectiveKnowledge::new(l.shape().clone());
        k.discover(id(0, 0)).unwrap();
        k.set_degree(id(0, 0), ExplorationDegree::new(3, 0).unwrap()).unwrap();
        let fresh = k.absorb_visible(&l, id(0, 0)).unwrap();
        assert_eq!(fresh.len(), 3);
        assert_eq!(k.degree(id(1, 1)), Some(ExplorationDegree::default()));
        assert!(k.is_discovered(id(0, 2)));
        assert!(k.absorb_visible(&l, id(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn merge_takes_maximum_degree() {
        let l = small(&[]);
        let mut a = SubjectiveKnowledge::new(l.shape().clone());
        let mut b = SubjectiveKnowledge::new(l.shape().clone());
        a.set_degree(id(0, 0), ExplorationDegree::new(3, 2).unwrap()).unwrap();
        b.set_degree(id(0, 0), ExplorationDegree::new(5, 0).unwrap()).unwrap();
        b.set_degree(id(1, 0), ExplorationDegree::new(1, 1).unwrap()).unwrap();
        a.merge(&b).unwrap();
        assert_eq!(a.degree(id(0, 0)).unwrap().value(), 5);
        assert!(a.is_discovered(id(1, 0)));

        let mut c = SubjectiveKnowledge::new(l.shape().clone());
        c.set_degree(id(0, 0), ExplorationDegree::new(5, 3).unwrap()).unwrap();
        a.merge(&c).unwrap();
        assert_eq!(a.degree(id(0, 0)), Some(ExplorationDegree::new(5, 3).unwrap()));
    }

    #[test]
    fn merge_rejects_other_landscapes() {
        let l = small(&[]);
        let other = Landscape::generate(&LandscapeConfig::default()).unwrap();
        let mut a = SubjectiveKnowledge::new(l.shape().clone());
        let b = SubjectiveKnowledge::new(other.shape().clone());
        assert_eq!(a.merge(&b), Err(KnowledgeError::ShapeMismatch));
        assert_eq!(a.discover(id(0, 3)), Err(KnowledgeError::ForeignArgument(id(0, 3))));
    }

    #[test]
    fn subjective_defensibility_needs_known_counter() {
        let l = small(&[((1, 1), (0, 1)), ((0, 2), (1, 1))]);
        let mut k = SubjectiveKnowledge::new(l.shape().clone());
        assert_eq!(k.subjective_defensibility(0), 0);
        k.discover(id(0, 0)).unwrap();
        k.add_edge(Edge::Discovery { parent: id(0, 0), child: id(0, 1) }).unwrap();
        k.add_edge(Edge::Attack { attacker: id(1, 1), target: id(0, 1) }).unwrap();
        assert_eq!(k.subjective_defensibility(0), 1);
        assert!(!is_defended(&k, id(0, 1)).unwrap());
        k.add_edge(Edge::Attack { attacker: id(0, 2), target: id(1, 1) }).unwrap();
        assert_eq!(k.subjective_defensibility(0), 3);
        assert!(is_defended(&k, id(0, 1)).unwrap());
    }

    #[test]
    fn complete_knowledge_matches_objective_defensibility() {
        for seed in 0..10 {
            let l = Landscape::generate(&LandscapeConfig { seed, ..Default::default() }).unwrap();
            let k = SubjectiveKnowledge::complete(&l);
            for t in 0..l.num_theories() {
                assert_eq!(k.subjective_defensibility(t), l.full_defensibility(t));
                assert!(k.theory_fully_explored(t));
            }
        }
    }

    #[test]
    fn restriction_and_attack_filter() {
        let l = small(&[((1, 1), (0, 1)), ((0, 2), (1, 1))]);
        let k = SubjectiveKnowledge::complete(&l);
        let r = k.restricted_to(1);
        assert!(r.discovered_in(1).all(|(_, d)| d.is_full()));
        assert_eq!(r.degree(id(0, 1)), Some(ExplorationDegree::default()));
        assert_eq!(r.known_attacks().count(), 2);
        assert_eq!(r.known_discovery_edges().count(), 2);
        let f = r.without_attacks_on(1);
        assert_eq!(f.known_attacks().collect::<Vec<_>>(), vec![(id(1, 1), id(0, 1))]);
    }
}
