//! One scientist: exploration, movement along discovery edges,
//! defense-seeking and theory switching.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::knowledge::{KnowledgeError, SubjectiveKnowledge};
use crate::landscape::{ArgumentId, Edge, Landscape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BehaviorConfig {
    /// Chance of moving to a discovered child instead of exploring.
    pub move_probability: f64,
    pub evaluation_interval: u64,
    /// An agent leaves her theory when its defensibility drops below this
    /// fraction of the best theory's.
    pub switch_threshold: f64,
    pub rounds_per_degree: u8,
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        Self {
            move_probability: 0.5,
            evaluation_interval: 5,
            switch_threshold: 0.9,
            rounds_per_degree: 5,
        }
    }
}

impl BehaviorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.move_probability) {
            return Err(format!("move_probability must lie in [0, 1], got {}", self.move_probability));
        }
        if !(self.switch_threshold > 0.0 && self.switch_threshold <= 1.0) {
            return Err(format!("switch_threshold must lie in (0, 1], got {}", self.switch_threshold));
        }
        if self.evaluation_interval < 1 {
            return Err("evaluation_interval must be at least 1".into());
        }
        if self.rounds_per_degree < 1 {
            return Err("rounds_per_degree must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Action {
    Explore,
    MoveTo(ArgumentId),
    /// Nothing left to explore in the current theory.
    Stay,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExploreOutcome {
    pub level_up: bool,
    pub new_edges: Vec<Edge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TheorySwitch {
    pub from: usize,
    pub to: usize,
    pub landing: ArgumentId,
}

#[derive(Clone, Debug)]
pub struct Agent {
    pub id: usize,
    pub position: ArgumentId,
    pub knowledge: SubjectiveKnowledge,
    pub network_id: usize,
    pub biased: bool,
    /// Set for the round in which the agent received information from
    /// another network.
    pub time_costed: bool,
    /// What the agent found herself since her last inter-network share.
    pub recent: SubjectiveKnowledge,
}

impl Agent {
    pub fn new(id: usize, network_id: usize, biased: bool, start: ArgumentId, landscape: &Landscape) -> Self {
        let mut knowledge = SubjectiveKnowledge::new(landscape.shape().clone());
        knowledge
            .discover(start)
            .expect("start argument belongs to the landscape");
        Self {
            id,
            position: start,
            knowledge,
            network_id,
            biased,
            time_costed: false,
            recent: SubjectiveKnowledge::new(landscape.shape().clone()),
        }
    }

    pub fn theory(&self) -> usize {
        self.position.theory
    }

    /// One round of work on the current position. Level-ups reveal the
    /// edges whose threshold has been reached; everything new also goes into
    /// the recent buffer.
    pub fn explore_step(
        &mut self,
        landscape: &Landscape,
        config: &BehaviorConfig,
    ) -> Result<ExploreOutcome, KnowledgeError> {
        let pos = self.position;
        let mut degree = self.knowledge.degree(pos).ok_or(KnowledgeError::Undiscovered(pos))?;
        if degree.is_full() {
            return Ok(ExploreOutcome::default());
        }
        let level_up = degree.advance(config.rounds_per_degree);
        self.knowledge.set_degree(pos, degree)?;
        if !level_up {
            return Ok(ExploreOutcome::default());
        }
        let new_edges = self.knowledge.absorb_visible(landscape, pos)?;
        self.recent.set_degree(pos, degree)?;
        for &e in &new_edges {
            self.recent.add_edge(e)?;
        }
        Ok(ExploreOutcome { level_up, new_edges })
    }

    /// Discovered children of the current position that could provide a
    /// defense: for a known, still unanswered attack `b -> position`, the
    /// child is seen to attack `b` in the landscape even though that edge is
    /// not yet known. Such "seen" edges never enter the knowledge.
    pub fn potential_defenders(&self, landscape: &Landscape) -> BTreeSet<ArgumentId> {
        let pos = self.position;
        let theory = pos.theory;
        let open_threats: Vec<ArgumentId> = self
            .knowledge
            .known_attackers(pos)
            .filter(|&b| !self.knowledge.known_attackers(b).any(|c| c.theory == theory))
            .collect();
        if open_threats.is_empty() {
            return BTreeSet::new();
        }
        self.knowledge
            .known_children(pos)
            .filter(|&child| !self.knowledge.is_fully_explored(child))
            .filter(|&child| open_threats.iter().any(|&b| landscape.has_attack(child, b)))
            .collect()
    }

    /// Picks this round's move-or-explore decision.
    pub fn choose_action<R: Rng + ?Sized>(
        &self,
        landscape: &Landscape,
        config: &BehaviorConfig,
        rng: &mut R,
    ) -> Action {
        if let Some(&d) = self.potential_defenders(landscape).first() {
            return Action::MoveTo(d);
        }
        let k = &self.knowledge;
        let pos = self.position;
        let children: Vec<ArgumentId> = k
            .known_children(pos)
            .filter(|&c| !k.is_fully_explored(c))
            .collect();
        if !k.is_fully_explored(pos) {
            if !children.is_empty() && rng.gen_bool(config.move_probability) {
                return Action::MoveTo(children[rng.gen_range(0..children.len())]);
            }
            return Action::Explore;
        }
        if !children.is_empty() {
            return Action::MoveTo(children[rng.gen_range(0..children.len())]);
        }
        if let Some(parent) = k.known_parent(pos) {
            if !k.is_fully_explored(parent) {
                return Action::MoveTo(parent);
            }
        }
        let open: Vec<ArgumentId> = k
            .discovered_in(pos.theory)
            .filter(|(a, d)| *a != pos && !d.is_full())
            .map(|(a, _)| a)
            .collect();
        if open.is_empty() {
            Action::Stay
        } else {
            Action::MoveTo(open[rng.gen_range(0..open.len())])
        }
    }

    /// Carries out `action`. Moves stay inside the current theory.
    pub fn perform(
        &mut self,
        action: Action,
        landscape: &Landscape,
        config: &BehaviorConfig,
    ) -> Result<(), KnowledgeError> {
        match action {
            Action::Explore => {
                self.explore_step(landscape, config)?;
            }
            Action::MoveTo(target) => {
                if !self.knowledge.is_discovered(target) {
                    return Err(KnowledgeError::Undiscovered(target));
                }
                debug_assert_eq!(target.theory, self.position.theory);
                self.position = target;
            }
            Action::Stay => {}
        }
        Ok(())
    }

    /// Compares the subjective defensibility of all theories and switches
    /// to a best one when the current theory falls below the threshold.
    pub fn evaluate_and_switch<R: Rng + ?Sized>(
        &mut self,
        config: &BehaviorConfig,
        rng: &mut R,
    ) -> Option<TheorySwitch> {
        let current = self.theory();
        let scores: Vec<usize> = (0..self.knowledge.shape().num_theories())
            .map(|t| self.knowledge.subjective_defensibility(t))
            .collect();
        let best = scores.iter().copied().max().unwrap_or(0);
        if (scores[current] as f64) >= config.switch_threshold * best as f64 {
            return None;
        }
        let candidates: Vec<usize> = (0..scores.len())
            .filter(|&t| t != current && scores[t] == best)
            .collect();
        let to = candidates[rng.gen_range(0..candidates.len())];
        let open: Vec<ArgumentId> = self
            .knowledge
            .discovered_in(to)
            .filter(|(_, d)| !d.is_full())
            .map(|(a, _)| a)
            .collect();
        let landing = if open.is_empty() {
            let root = ArgumentId::root(to);
            self.knowledge.discover(root).expect("root belongs to the landscape");
            root
        } else {
            open[rng.gen_range(0..open.len())]
        };
        self.position = landing;
        Some(TheorySwitch {
            from: current,
            to,
            landing,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::ExplorationDegree;
    use crate::landscape::{AttackEdge, AttackOrigin, LandscapeConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn id(t: usize, n: usize) -> ArgumentId {
        ArgumentId::new(t, n)
    }

    fn landscape(depth: usize, branching: usize, attacks: &[((usize, usize), (usize, usize))]) -> Landscape {
        let cfg = LandscapeConfig {
            num_theories: 2,
            depth,
            branching,
            attack_probability: 0.0,
            seed: 0,
        };
        let attacks = attacks
            .iter()
            .map(|&(b, a)| AttackEdge {
                attacker: id(b.0, b.1),
                target: id(a.0, a.1),
                origin: AttackOrigin::Sampled,
                thresholds: [6, 1],
            })
            .collect();
        Landscape::from_parts(cfg, attacks, |_, _| [1, 1], 0).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn five_rounds_per_degree_thirty_to_full() {
        let l = landscape(0, 1, &[]);
        let cfg = BehaviorConfig::default();
        let mut ag = Agent::new(0, 0, false, id(0, 0), &l);
        for _ in 0..5 {
            ag.explore_step(&l, &cfg).unwrap();
        }
        assert_eq!(ag.knowledge.degree(id(0, 0)).unwrap().value(), 1);
        for _ in 0..25 {
            ag.explore_step(&l, &cfg).unwrap();
        }
        assert!(ag.knowledge.is_fully_explored(id(0, 0)));
        let before = ag.knowledge.clone();
        ag.explore_step(&l, &cfg).unwrap();
        assert_eq!(ag.knowledge, before);
    }

    #[test]
    fn exploring_fills_recent_buffer() {
        let l = landscape(1, 2, &[((1, 0), (0, 0))]);
        let cfg = BehaviorConfig::default();
        let mut ag = Agent::new(0, 0, false, id(0, 0), &l);
        for _ in 0..5 {
            ag.explore_step(&l, &cfg).unwrap();
        }
        // all thresholds at the root side are 1
        assert_eq!(ag.recent.known_discovery_edges().count(), 2);
        assert_eq!(ag.recent.known_attacks().count(), 1);
        assert!(ag.knowledge.is_discovered(id(1, 0)));
    }

    #[test]
    fn nothing_visible_means_explore() {
        let l = landscape(1, 2, &[]);
        let ag = Agent::new(0, 0, false, id(0, 0), &l);
        let mut r = rng();
        for _ in 0..20 {
            assert_eq!(ag.choose_action(&l, &BehaviorConfig::default(), &mut r), Action::Explore);
        }
    }

    #[test]
    fn zero_move_probability_always_explores() {
        let l = landscape(1, 2, &[]);
        let mut ag = Agent::new(0, 0, false, id(0, 0), &l);
        ag.knowledge.add_edge(Edge::Discovery { parent: id(0, 0), child: id(0, 1) }).unwrap();
        let cfg = BehaviorConfig {
            move_probability: 0.0,
            ..Default::default()
        };
        let mut r = rng();
        for _ in 0..50 {
            assert_eq!(ag.choose_action(&l, &cfg, &mut r), Action::Explore);
        }
        let always = BehaviorConfig {
            move_probability: 1.0,
            ..Default::default()
        };
        assert_eq!(ag.choose_action(&l, &always, &mut r), Action::MoveTo(id(0, 1)));
    }

    #[test]
    fn fully_explored_leaf_moves_elsewhere_in_theory() {
        let l = landscape(2, 2, &[]);
        let mut ag = Agent::new(0, 0, false, id(0, 3), &l);
        let k = &mut ag.knowledge;
        for n in [0, 1, 3] {
            k.set_degree(id(0, n), ExplorationDegree::FULL).unwrap();
        }
        k.add_edge(Edge::Discovery { parent: id(0, 0), child: id(0, 1) }).unwrap();
        k.add_edge(Edge::Discovery { parent: id(0, 1), child: id(0, 3) }).unwrap();
        k.discover(id(0, 5)).unwrap();
        let mut r = rng();
        assert_eq!(ag.choose_action(&l, &BehaviorConfig::default(), &mut r), Action::MoveTo(id(0, 5)));
    }

    #[test]
    fn fully_explored_position_prefers_parent() {
        let l = landscape(2, 2, &[]);
        let mut ag = Agent::new(0, 0, false, id(0, 3), &l);
        ag.knowledge.set_degree(id(0, 3), ExplorationDegree::FULL).unwrap();
        ag.knowledge.add_edge(Edge::Discovery { parent: id(0, 1), child: id(0, 3) }).unwrap();
        ag.knowledge.discover(id(0, 5)).unwrap();
        assert_eq!(ag.choose_action(&l, &BehaviorConfig::default(), &mut rng()), Action::MoveTo(id(0, 1)));
    }

    #[test]
    fn complete_theory_stays() {
        let l = landscape(0, 1, &[]);
        let mut ag = Agent::new(0, 0, false, id(0, 0), &l);
        ag.knowledge.set_degree(id(0, 0), ExplorationDegree::FULL).unwrap();
        assert_eq!(ag.choose_action(&l, &BehaviorConfig::default(), &mut rng()), Action::Stay);
    }

    #[test]
    fn defenders_are_children_seen_attacking_the_attacker() {
        // 1:0 attacks the root 0:0; child 0:2 attacks 1:0 in the landscape
        let l = landscape(1, 2, &[((1, 0), (0, 0)), ((0, 2), (1, 0))]);
        let mut ag = Agent::new(0, 0, false, id(0, 0), &l);
        assert!(ag.potential_defenders(&l).is_empty());

        ag.knowledge.add_edge(Edge::Attack { attacker: id(1, 0), target: id(0, 0) }).unwrap();
        assert!(ag.potential_defenders(&l).is_empty(), "child not yet discovered");

        ag.knowledge.add_edge(Edge::Discovery { parent: id(0, 0), child: id(0, 1) }).unwrap();
        ag.knowledge.add_edge(Edge::Discovery { parent: id(0, 0), child: id(0, 2) }).unwrap();
        assert_eq!(ag.potential_defenders(&l), BTreeSet::from([id(0, 2)]));
        // the seen edge does not count as knowledge
        assert_eq!(ag.knowledge.subjective_defensibility(0), 2);

        let cfg = BehaviorConfig {
            move_probability: 0.0,
            ..Default::default()
        };
        assert_eq!(ag.choose_action(&l, &cfg, &mut rng()), Action::MoveTo(id(0, 2)));

        ag.knowledge.add_edge(Edge::Attack { attacker: id(0, 2), target: id(1, 0) }).unwrap();
        assert!(ag.potential_defenders(&l).is_empty(), "threat already answered");
    }

    #[test]
    fn switch_when_below_threshold() {
        let l = landscape(2, 4, &[]);
        let mut ag = Agent::new(0, 0, false, id(0, 0), &l);
        for n in 0..10 {
            ag.knowledge.discover(id(0, n)).unwrap();
        }
        for n in 0..20 {
            ag.knowledge.discover(id(1, n)).unwrap();
        }
        let cfg = BehaviorConfig::default();
        let sw = ag.evaluate_and_switch(&cfg, &mut rng()).unwrap();
        assert_eq!((sw.from, sw.to), (0, 1));
        assert_eq!(ag.theory(), 1);
        assert!(ag.knowledge.is_discovered(sw.landing));
        assert!(!ag.knowledge.is_fully_explored(sw.landing));
    }

    #[test]
    fn stay_when_current_is_best_or_all_zero() {
        let l = landscape(2, 4, &[]);
        let mut ag = Agent::new(0, 0, false, id(0, 0), &l);
        ag.knowledge.discover(id(1, 0)).unwrap();
        assert_eq!(ag.evaluate_and_switch(&BehaviorConfig::default(), &mut rng()), None);

        // a three-cycle of attacks across three theories leaves nothing defended
        let cfg = LandscapeConfig {
            num_theories: 3,
            depth: 0,
            branching: 1,
            attack_probability: 0.0,
            seed: 0,
        };
        let cycle = [((1, 0), (0, 0)), ((2, 0), (1, 0)), ((0, 0), (2, 0))]
            .iter()
            .map(|&(b, a)| AttackEdge {
                attacker: id(b.0, b.1),
                target: id(a.0, a.1),
                origin: AttackOrigin::Sampled,
                thresholds: [1, 1],
            })
            .collect();
        let l = Landscape::from_parts(cfg, cycle, |_, _| [1, 1], 0).unwrap();
        let mut ag = Agent::new(0, 0, false, id(0, 0), &l);
        for (b, a) in [((1, 0), (0, 0)), ((2, 0), (1, 0)), ((0, 0), (2, 0))] {
            ag.knowledge
                .add_edge(Edge::Attack { attacker: id(b.0, b.1), target: id(a.0, a.1) })
                .unwrap();
        }
        for t in 0..3 {
            assert_eq!(ag.knowledge.subjective_defensibility(t), 0);
        }
        assert_eq!(ag.evaluate_and_switch(&BehaviorConfig::default(), &mut rng()), None);
    }

    #[test]
    fn switch_lands_on_root_when_target_has_nothing_open() {
        let l = landscape(1, 2, &[((1, 0), (0, 0))]);
        let mut ag = Agent::new(0, 0, false, id(0, 0), &l);
        ag.knowledge.add_edge(Edge::Attack { attacker: id(1, 0), target: id(0, 0) }).unwrap();
        ag.knowledge.set_degree(id(1, 0), ExplorationDegree::FULL).unwrap();
        let sw = ag.evaluate_and_switch(&BehaviorConfig::default(), &mut rng()).unwrap();
        assert_eq!(sw.landing, id(1, 0));
    }
}
