use std::sync::Arc;

use argabm::agent::{Agent, BehaviorConfig};
use argabm::engine::{run_simulation, SimulationConfig};
use argabm::knowledge::{ExplorationDegree, SubjectiveKnowledge};
use argabm::landscape::{ArgumentId, Edge, Landscape, LandscapeConfig};
use argabm::social::Composition;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn landscape() -> Arc<Landscape> {
    Arc::new(
        Landscape::generate(&LandscapeConfig {
            num_theories: 3,
            depth: 2,
            branching: 2,
            attack_probability: 0.5,
            seed: 5,
        })
        .unwrap(),
    )
}

fn all_edges(l: &Landscape) -> Vec<Edge> {
    l.discovery_edges()
        .iter()
        .map(|d| Edge::Discovery {
            parent: d.parent,
            child: d.child,
        })
        .chain(l.attacks().iter().map(|a| Edge::Attack {
            attacker: a.attacker,
            target: a.target,
        }))
        .collect()
}

/// Knowledge built from (argument index, value, progress) triples and edge
/// indices.
fn knowledge(l: &Landscape, degrees: &[(usize, u8, u8)], edges: &[usize]) -> SubjectiveKnowledge {
    let mut k = SubjectiveKnowledge::new(l.shape().clone());
    let args: Vec<ArgumentId> = l.arguments().collect();
    for &(i, v, p) in degrees {
        let d = if v == 6 {
            ExplorationDegree::FULL
        } else {
            ExplorationDegree::new(v, p).unwrap()
        };
        k.set_degree(args[i % args.len()], d).unwrap();
    }
    let pool = all_edges(l);
    for &e in edges {
        k.add_edge(pool[e % pool.len()]).unwrap();
    }
    k
}

fn knowledge_strategy() -> impl Strategy<Value = (Vec<(usize, u8, u8)>, Vec<usize>)> {
    (
        prop::collection::vec((0usize..64, 0u8..=6, 0u8..5), 0..12),
        prop::collection::vec(0usize..64, 0..12),
    )
}

fn merged(a: &SubjectiveKnowledge, b: &SubjectiveKnowledge) -> SubjectiveKnowledge {
    let mut out = a.clone();
    out.merge(b).unwrap();
    out
}

proptest! {
    #[test]
    fn merge_is_a_semilattice(x in knowledge_strategy(), y in knowledge_strategy(), z in knowledge_strategy()) {
        let l = landscape();
        let (a, b, c) = (knowledge(&l, &x.0, &x.1), knowledge(&l, &y.0, &y.1), knowledge(&l, &z.0, &z.1));
        prop_assert_eq!(merged(&a, &b), merged(&b, &a));
        prop_assert_eq!(merged(&merged(&a, &b), &c), merged(&a, &merged(&b, &c)));
        prop_assert_eq!(merged(&a, &a), a.clone());
        // nothing known before is lost or lowered
        let ab = merged(&a, &b);
        for (arg, d) in a.degrees() {
            prop_assert!(ab.degree(arg).unwrap() >= d);
        }
    }

    #[test]
    fn switch_rule_follows_threshold(x in knowledge_strategy(), threshold in 0.0f64..=1.0, seed in any::<u64>()) {
        let l = landscape();
        let mut agent = Agent::new(0, 0, false, ArgumentId::root(0), &l);
        agent.knowledge.merge(&knowledge(&l, &x.0, &x.1)).unwrap();
        let scores: Vec<usize> = (0..3).map(|t| agent.knowledge.subjective_defensibility(t)).collect();
        let best = *scores.iter().max().unwrap();
        let cfg = BehaviorConfig { switch_threshold: threshold, ..Default::default() };
        let should = (scores[0] as f64) < threshold * best as f64;
        let sw = agent.evaluate_and_switch(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(sw.is_some(), should);
        if let Some(sw) = sw {
            prop_assert_eq!(scores[sw.to], best);
            prop_assert_ne!(sw.to, 0);
            prop_assert_eq!(agent.position, sw.landing);
            prop_assert_eq!(sw.landing.theory, sw.to);
            prop_assert!(!agent.knowledge.is_fully_explored(sw.landing) || sw.landing.is_root());
        }
    }

    #[test]
    fn counter_attack_never_lowers_defensibility(x in knowledge_strategy(), pick in any::<prop::sample::Index>()) {
        let l = landscape();
        let mut k = knowledge(&l, &x.0, &x.1);
        let known: Vec<_> = k.known_attacks().collect();
        prop_assume!(!known.is_empty());
        let (b, _) = known[pick.index(known.len())];
        // any landscape attack onto b answers it
        for e in l.attacks().iter().filter(|e| e.target == b) {
            let before: Vec<usize> = (0..3).map(|t| k.subjective_defensibility(t)).collect();
            k.add_edge(Edge::Attack { attacker: e.attacker, target: b }).unwrap();
            let t = e.attacker.theory;
            prop_assert!(k.subjective_defensibility(t) >= before[t]);
        }
    }

    #[test]
    fn runs_are_reproducible(seed in any::<u64>(), agents in 2usize..12, p in prop::sample::select(vec![0.0, 0.5, 1.0]),
                             hetero in any::<bool>(), biased in any::<bool>()) {
        let mut cfg = SimulationConfig {
            num_agents: agents,
            composition: if hetero { Composition::Heterogeneous } else { Composition::Homogeneous },
            biased,
            max_rounds: 400,
            ..Default::default()
        }
        .with_seed(seed);
        cfg.sharing.share_probability = p;
        cfg.landscape.depth = 2;
        prop_assert_eq!(run_simulation(&cfg).unwrap(), run_simulation(&cfg).unwrap());
    }
}
