//! The objective argumentative landscape.
//!
//! A landscape is a set of theories, each a complete tree of arguments linked
//! by discovery edges, plus an attack relation that only ever connects
//! arguments of different theories. Every edge carries one visibility
//! threshold per endpoint: an agent standing on endpoint `a` sees the edge once
//! her exploration degree of `a` reaches that threshold.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest exploration degree; at this degree every incident edge is visible.
pub const MAX_DEGREE: u8 = 6;

/// How many times the attacks on a theory tying with the best one are redrawn
/// before generation gives up.
pub const TIE_RETRY_BUDGET: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum LandscapeError {
    #[error("invalid landscape config: {0}")]
    Config(String),
    #[error("no strictly best theory after {0} resampling attempts")]
    NoUniqueBest(usize),
    #[error("unknown argument {0}")]
    UnknownArgument(ArgumentId),
}

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ArgumentId {
    pub theory: usize,
    /// Breadth-first position inside the theory tree; the root is 0.
    pub node: usize,
}

impl ArgumentId {
    pub const fn new(theory: usize, node: usize) -> Self {
        Self { theory, node }
    }

    pub const fn root(theory: usize) -> Self {
        Self { theory, node: 0 }
    }

    pub fn is_root(&self) -> bool {
        self.node == 0
    }
}

impl fmt::Display for ArgumentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.theory, self.node)
    }
}

/// A directed edge of the landscape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Edge {
    Attack { attacker: ArgumentId, target: ArgumentId },
    Discovery { parent: ArgumentId, child: ArgumentId },
}

impl Edge {
    pub fn endpoints(&self) -> (ArgumentId, ArgumentId) {
        match *self {
            Edge::Attack { attacker, target } => (attacker, target),
            Edge::Discovery { parent, child } => (parent, child),
        }
    }

    /// The endpoint that is not `a`. `a` must be one of the endpoints.
    pub fn far_end(&self, a: ArgumentId) -> ArgumentId {
        let (x, y) = self.endpoints();
        if x == a {
            y
        } else {
            x
        }
    }
}

/// A complete tree of `branching`-ary arguments down to `depth`, numbered
/// breadth-first. Children of node `k` are `k*b+1 ..= k*b+b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoryTree {
    pub index: usize,
    pub depth: usize,
    pub branching: usize,
    size: usize,
}

impl TheoryTree {
    pub fn new(index: usize, depth: usize, branching: usize) -> Result<Self, LandscapeError> {
        if branching < 1 {
            return Err(LandscapeError::Config("branching must be at least 1".into()));
        }
        let size = tree_size(depth, branching)
            .ok_or_else(|| LandscapeError::Config("theory tree too large".into()))?;
        Ok(Self {
            index,
            depth,
            branching,
            size,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn root(&self) -> ArgumentId {
        ArgumentId::root(self.index)
    }

    pub fn arguments(&self) -> impl Iterator<Item = ArgumentId> + '_ {
        (0..self.size).map(move |n| ArgumentId::new(self.index, n))
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        (node > 0 && node < self.size).then(|| (node - 1) / self.branching)
    }

    pub fn children(&self, node: usize) -> std::ops::Range<usize> {
        let first = node * self.branching + 1;
        if first >= self.size {
            return 0..0;
        }
        first..(first + self.branching).min(self.size)
    }

    /// Discovery edges in breadth-first order of the child.
    pub fn discovery_edges(&self) -> impl Iterator<Item = (ArgumentId, ArgumentId)> + '_ {
        (1..self.size).map(move |n| {
            let p = (n - 1) / self.branching;
            (ArgumentId::new(self.index, p), ArgumentId::new(self.index, n))
        })
    }
}

fn tree_size(depth: usize, branching: usize) -> Option<usize> {
    let mut total: usize = 0;
    let mut level: usize = 1;
    for _ in 0..=depth {
        total = total.checked_add(level)?;
        level = level.checked_mul(branching)?;
    }
    Some(total)
}

/// Sizes of the theories of one landscape. Knowledge fragments carry the shape
/// they were built for so that fragments of different landscapes never mix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LandscapeShape {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl LandscapeShape {
    pub fn new(sizes: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        Self { sizes, offsets }
    }

    pub fn num_theories(&self) -> usize {
        self.sizes.len()
    }

    pub fn theory_size(&self, theory: usize) -> usize {
        self.sizes[theory]
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn contains(&self, a: ArgumentId) -> bool {
        a.theory < self.sizes.len() && a.node < self.sizes[a.theory]
    }

    /// Dense index over all arguments, theory-major.
    pub fn index(&self, a: ArgumentId) -> usize {
        self.offsets[a.theory] + a.node
    }

    pub fn id(&self, index: usize) -> ArgumentId {
        let theory = self.offsets.partition_point(|&o| o <= index) - 1;
        ArgumentId::new(theory, index - self.offsets[theory])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeConfig {
    pub num_theories: usize,
    pub depth: usize,
    pub branching: usize,
    pub attack_probability: f64,
    pub seed: u64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            num_theories: 2,
            depth: 3,
            branching: 4,
            attack_probability: 0.3,
            seed: 0,
        }
    }
}

impl LandscapeConfig {
    pub fn validate(&self) -> Result<(), LandscapeError> {
        if self.num_theories < 2 {
            return Err(LandscapeError::Config(format!(
                "num_theories must be at least 2, got {}",
                self.num_theories
            )));
        }
        if !(0.0..=1.0).contains(&self.attack_probability) {
            return Err(LandscapeError::Config(format!(
                "attack_probability must lie in [0, 1], got {}",
                self.attack_probability
            )));
        }
        if self.branching < 1 {
            return Err(LandscapeError::Config("branching must be at least 1".into()));
        }
        tree_size(self.depth, self.branching)
            .and_then(|s| s.checked_mul(self.num_theories))
            .ok_or_else(|| LandscapeError::Config("landscape too large".into()))?;
        Ok(())
    }
}

/// Whether an attack was drawn by the generator or inserted to defend the
/// best theory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackOrigin {
    Sampled,
    Counter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackEdge {
    pub attacker: ArgumentId,
    pub target: ArgumentId,
    pub origin: AttackOrigin,
    /// Visibility thresholds at (attacker, target).
    pub thresholds: [u8; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveryEdge {
    pub parent: ArgumentId,
    pub child: ArgumentId,
    /// Visibility thresholds at (parent, child).
    pub thresholds: [u8; 2],
}

/// An edge as seen from one of its endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Incident {
    pub edge: Edge,
    pub threshold: u8,
}

/// Read access to an attack relation, shared by the landscape and by
/// subjective knowledge fragments.
pub trait AttackView {
    fn contains_argument(&self, a: ArgumentId) -> bool;
    fn attackers(&self, target: ArgumentId) -> Vec<ArgumentId>;

    /// True iff some argument of `theory` attacks `target`.
    fn attacked_from_theory(&self, target: ArgumentId, theory: usize) -> bool {
        self.attackers(target).iter().any(|c| c.theory == theory)
    }
}

/// An argument is defended when every attacker is itself attacked by some
/// argument of the defended argument's theory.
pub fn is_defended<V: AttackView + ?Sized>(
    view: &V,
    a: ArgumentId,
) -> Result<bool, LandscapeError> {
    if !view.contains_argument(a) {
        return Err(LandscapeError::UnknownArgument(a));
    }
    Ok(view
        .attackers(a)
        .into_iter()
        .all(|b| view.attacked_from_theory(b, a.theory)))
}

#[derive(Clone, Debug)]
pub struct Landscape {
    config: LandscapeConfig,
    theories: Vec<TheoryTree>,
    shape: Arc<LandscapeShape>,
    attacks: Vec<AttackEdge>,
    discovery: Vec<DiscoveryEdge>,
    best_theory: usize,
    incident: Vec<Vec<Incident>>,
    attackers_of: Vec<Vec<ArgumentId>>,
}

impl Landscape {
    /// Generates the landscape determined by `config` alone, seeding a fresh
    /// stream from `config.seed`.
    pub fn generate(config: &LandscapeConfig) -> Result<Self, LandscapeError> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        generate_landscape(config, &mut rng)
    }

    /// Assembles a landscape from explicit parts. Used for hand-built test
    /// fixtures; `best_theory` is taken as given and not checked.
    pub fn from_parts(
        config: LandscapeConfig,
        attacks: Vec<AttackEdge>,
        discovery_thresholds: impl Fn(ArgumentId, ArgumentId) -> [u8; 2],
        best_theory: usize,
    ) -> Result<Self, LandscapeError> {
        let theories = (0..config.num_theories)
            .map(|t| TheoryTree::new(t, config.depth, config.branching))
            .collect::<Result<Vec<_>, _>>()?;
        let shape = LandscapeShape::new(theories.iter().map(TheoryTree::size).collect());
        for e in &attacks {
            if !shape.contains(e.attacker) {
                return Err(LandscapeError::UnknownArgument(e.attacker));
            }
            if !shape.contains(e.target) {
                return Err(LandscapeError::UnknownArgument(e.target));
            }
            if e.attacker.theory == e.target.theory {
                return Err(LandscapeError::Config(format!(
                    "attack {} -> {} inside one theory",
                    e.attacker, e.target
                )));
            }
        }
        let discovery = theories
            .iter()
            .flat_map(|t| t.discovery_edges().collect::<Vec<_>>())
            .map(|(parent, child)| DiscoveryEdge {
                parent,
                child,
                thresholds: discovery_thresholds(parent, child),
            })
            .collect();
        Ok(Self::assemble(config, theories, shape, attacks, discovery, best_theory))
    }

    fn assemble(
        config: LandscapeConfig,
        theories: Vec<TheoryTree>,
        shape: LandscapeShape,
        mut attacks: Vec<AttackEdge>,
        discovery: Vec<DiscoveryEdge>,
        best_theory: usize,
    ) -> Self {
        attacks.sort_by_key(|e| (e.attacker, e.target));
        attacks.dedup_by_key(|e| (e.attacker, e.target));
        let total = shape.total();
        let mut incident = vec![Vec::new(); total];
        let mut attackers_of = vec![Vec::new(); total];
        for d in &discovery {
            let edge = Edge::Discovery {
                parent: d.parent,
                child: d.child,
            };
            incident[shape.index(d.parent)].push(Incident {
                edge,
                threshold: d.thresholds[0],
            });
            incident[shape.index(d.child)].push(Incident {
                edge,
                threshold: d.thresholds[1],
            });
        }
        for a in &attacks {
            let edge = Edge::Attack {
                attacker: a.attacker,
                target: a.target,
            };
            incident[shape.index(a.attacker)].push(Incident {
                edge,
                threshold: a.thresholds[0],
            });
            incident[shape.index(a.target)].push(Incident {
                edge,
                threshold: a.thresholds[1],
            });
            attackers_of[shape.index(a.target)].push(a.attacker);
        }
        Self {
            config,
            theories,
            shape: Arc::new(shape),
            attacks,
            discovery,
            best_theory,
            incident,
            attackers_of,
        }
    }

    pub fn config(&self) -> &LandscapeConfig {
        &self.config
    }

    pub fn theories(&self) -> &[TheoryTree] {
        &self.theories
    }

    pub fn theory(&self, index: usize) -> &TheoryTree {
        &self.theories[index]
    }

    pub fn num_theories(&self) -> usize {
        self.theories.len()
    }

    pub fn shape(&self) -> &Arc<LandscapeShape> {
        &self.shape
    }

    pub fn best_theory(&self) -> usize {
        self.best_theory
    }

    pub fn num_arguments(&self) -> usize {
        self.shape.total()
    }

    pub fn arguments(&self) -> impl Iterator<Item = ArgumentId> + '_ {
        self.theories.iter().flat_map(TheoryTree::arguments)
    }

    pub fn attacks(&self) -> &[AttackEdge] {
        &self.attacks
    }

    pub fn discovery_edges(&self) -> &[DiscoveryEdge] {
        &self.discovery
    }

    pub fn has_attack(&self, attacker: ArgumentId, target: ArgumentId) -> bool {
        self.shape.contains(target)
            && self.attackers_of[self.shape.index(target)].contains(&attacker)
    }

    /// All edges touching `a`, each with its threshold at `a`.
    pub fn incident(&self, a: ArgumentId) -> Result<&[Incident], LandscapeError> {
        if !self.shape.contains(a) {
            return Err(LandscapeError::UnknownArgument(a));
        }
        Ok(&self.incident[self.shape.index(a)])
    }

    /// Number of defended arguments of `theory` over the complete landscape.
    pub fn full_defensibility(&self, theory: usize) -> usize {
        self.theories[theory]
            .arguments()
            .filter(|&a| is_defended(self, a).unwrap_or(false))
            .count()
    }

    /// Checks every structural invariant of a generated landscape and returns
    /// the list of violations.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for a in &self.attacks {
            if a.attacker.theory == a.target.theory {
                problems.push(format!("attack {} -> {} inside a theory", a.attacker, a.target));
            }
            if !a.thresholds.iter().all(|t| (1..=MAX_DEGREE).contains(t)) {
                problems.push(format!("attack {} -> {} has bad thresholds", a.attacker, a.target));
            }
        }
        for tree in &self.theories {
            let edges: Vec<_> = self
                .discovery
                .iter()
                .filter(|d| d.parent.theory == tree.index || d.child.theory == tree.index)
                .collect();
            if edges.len() + 1 != tree.size() {
                problems.push(format!(
                    "theory {} has {} discovery edges for {} arguments",
                    tree.index,
                    edges.len(),
                    tree.size()
                ));
            }
            let mut parents: BTreeMap<ArgumentId, usize> = BTreeMap::new();
            for d in &edges {
                if d.parent.theory != d.child.theory {
                    problems.push(format!("discovery edge {} -> {} crosses theories", d.parent, d.child));
                }
                if !d.thresholds.iter().all(|t| (1..=MAX_DEGREE).contains(t)) {
                    problems.push(format!("discovery edge {} -> {} has bad thresholds", d.parent, d.child));
                }
                *parents.entry(d.child).or_default() += 1;
            }
            if parents.values().any(|&n| n != 1) || parents.contains_key(&tree.root()) {
                problems.push(format!("theory {} is not a tree", tree.index));
            }
            let mut seen = BTreeSet::from([tree.root()]);
            let mut frontier = vec![tree.root()];
            while let Some(a) = frontier.pop() {
                for d in edges.iter().filter(|d| d.parent == a) {
                    if seen.insert(d.child) {
                        frontier.push(d.child);
                    }
                }
            }
            if seen.len() != tree.size() {
                problems.push(format!("theory {} is not connected from its root", tree.index));
            }
        }
        if !self.attacks.is_empty() {
            let best = self.full_defensibility(self.best_theory);
            for t in 0..self.num_theories() {
                if t != self.best_theory && self.full_defensibility(t) >= best {
                    problems.push(format!("theory {t} ties or beats the best theory"));
                }
            }
        }
        problems
    }

    /// Human-readable graph dump: one line per theory, discovery edge and
    /// attack edge, with the visibility thresholds at both endpoints.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "landscape theories={} depth={} branching={} attack_probability={:.2} best={}",
            c.num_theories, c.depth, c.branching, c.attack_probability, self.best_theory
        );
        for t in &self.theories {
            let _ = writeln!(out, "theory {} arguments={}", t.index, t.size());
        }
        for d in &self.discovery {
            let _ = writeln!(
                out,
                "discovery {} {} vis={},{}",
                d.parent, d.child, d.thresholds[0], d.thresholds[1]
            );
        }
        for a in &self.attacks {
            let origin = match a.origin {
                AttackOrigin::Sampled => "sampled",
                AttackOrigin::Counter => "counter",
            };
            let _ = writeln!(
                out,
                "attack {} {} vis={},{} {}",
                a.attacker, a.target, a.thresholds[0], a.thresholds[1], origin
            );
        }
        out
    }
}

impl AttackView for Landscape {
    fn contains_argument(&self, a: ArgumentId) -> bool {
        self.shape.contains(a)
    }

    fn attackers(&self, target: ArgumentId) -> Vec<ArgumentId> {
        if !self.shape.contains(target) {
            return Vec::new();
        }
        self.attackers_of[self.shape.index(target)].clone()
    }

    fn attacked_from_theory(&self, target: ArgumentId, theory: usize) -> bool {
        self.shape.contains(target)
            && self.attackers_of[self.shape.index(target)]
                .iter()
                .any(|c| c.theory == theory)
    }
}

/// Draws a landscape from `rng`.
///
/// Every argument is attacked with probability `attack_probability` by one
/// attacker drawn uniformly from the other theories. One theory is then made
/// the best: each attacker of its arguments receives a counter-attack from a
/// uniformly drawn argument of the best theory, so that it is fully defended.
/// Rival theories that still tie with it get their incoming attacks redrawn.
/// With no attacks at all, theory 0 is the best by convention.
pub fn generate_landscape<R: Rng + ?Sized>(
    config: &LandscapeConfig,
    rng: &mut R,
) -> Result<Landscape, LandscapeError> {
    config.validate()?;
    let theories = (0..config.num_theories)
        .map(|t| TheoryTree::new(t, config.depth, config.branching))
        .collect::<Result<Vec<_>, _>>()?;
    let shape = LandscapeShape::new(theories.iter().map(TheoryTree::size).collect());
    let total = shape.total();
    let p = config.attack_probability;

    let mut best = rng.gen_range(0..config.num_theories);
    let mut sampled: Vec<Option<ArgumentId>> = (0..total)
        .map(|i| draw_attacker(&shape, shape.id(i).theory, p, rng))
        .collect();

    let mut attempt = 0;
    let attacks = loop {
        let attacks = with_counter_attacks(&shape, &sampled, best, rng);
        if attacks.is_empty() {
            best = 0;
            break attacks;
        }
        let ties = tied_theories(&shape, &attacks, best);
        if ties.is_empty() {
            break attacks;
        }
        if attempt == TIE_RETRY_BUDGET {
            return Err(LandscapeError::NoUniqueBest(TIE_RETRY_BUDGET));
        }
        attempt += 1;
        for t in ties {
            for node in 0..shape.theory_size(t) {
                let i = shape.index(ArgumentId::new(t, node));
                sampled[i] = draw_attacker(&shape, t, p, rng);
            }
        }
    };

    let mut threshold = || [rng.gen_range(1..=MAX_DEGREE), rng.gen_range(1..=MAX_DEGREE)];
    let discovery: Vec<DiscoveryEdge> = theories
        .iter()
        .flat_map(|t| t.discovery_edges().collect::<Vec<_>>())
        .map(|(parent, child)| DiscoveryEdge {
            parent,
            child,
            thresholds: threshold(),
        })
        .collect();
    let attacks: Vec<AttackEdge> = attacks
        .into_iter()
        .map(|((attacker, target), origin)| AttackEdge {
            attacker,
            target,
            origin,
            thresholds: threshold(),
        })
        .collect();

    Ok(Landscape::assemble(
        config.clone(),
        theories,
        shape,
        attacks,
        discovery,
        best,
    ))
}

fn draw_attacker<R: Rng + ?Sized>(
    shape: &LandscapeShape,
    theory: usize,
    p: f64,
    rng: &mut R,
) -> Option<ArgumentId> {
    if !rng.gen_bool(p) {
        return None;
    }
    let others = shape.total() - shape.theory_size(theory);
    if others == 0 {
        return None;
    }
    let mut k = rng.gen_range(0..others);
    for t in (0..shape.num_theories()).filter(|&t| t != theory) {
        let size = shape.theory_size(t);
        if k < size {
            return Some(ArgumentId::new(t, k));
        }
        k -= size;
    }
    unreachable!("attacker index within the other theories")
}

type AttackSet = BTreeMap<(ArgumentId, ArgumentId), AttackOrigin>;

fn with_counter_attacks<R: Rng + ?Sized>(
    shape: &LandscapeShape,
    sampled: &[Option<ArgumentId>],
    best: usize,
    rng: &mut R,
) -> AttackSet {
    let mut attacks: AttackSet = sampled
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.map(|b| ((b, shape.id(i)), AttackOrigin::Sampled)))
        .collect();
    let best_size = shape.theory_size(best);
    let mut answered: BTreeSet<ArgumentId> = attacks
        .keys()
        .filter(|(c, _)| c.theory == best)
        .map(|&(_, b)| b)
        .collect();
    let threats: Vec<ArgumentId> = attacks
        .keys()
        .filter(|(_, a)| a.theory == best)
        .map(|&(b, _)| b)
        .collect();
    for b in threats {
        if answered.insert(b) {
            let c = ArgumentId::new(best, rng.gen_range(0..best_size));
            attacks.insert((c, b), AttackOrigin::Counter);
        }
    }
    attacks
}

fn tied_theories(shape: &LandscapeShape, attacks: &AttackSet, best: usize) -> Vec<usize> {
    let mut attackers: BTreeMap<ArgumentId, Vec<ArgumentId>> = BTreeMap::new();
    for &(b, a) in attacks.keys() {
        attackers.entry(a).or_default().push(b);
    }
    let defended = |a: ArgumentId| {
        attackers.get(&a).map_or(true, |bs| {
            bs.iter().all(|b| {
                attackers
                    .get(b)
                    .is_some_and(|cs| cs.iter().any(|c| c.theory == a.theory))
            })
        })
    };
    let score = |t: usize| {
        (0..shape.theory_size(t))
            .filter(|&n| defended(ArgumentId::new(t, n)))
            .count()
    };
    let best_score = score(best);
    (0..shape.num_theories())
        .filter(|&t| t != best && score(t) >= best_score)
        .collect()
}
