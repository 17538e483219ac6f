//! Collaborative networks and information exchange between agents.
//!
//! Members of one collaborative network pool their full knowledge on a fixed
//! schedule. Across networks, each agent sends, with some probability, what
//! she recently found about her current theory to one random agent of another
//! network. Biased senders hold back the attacks on their own theory, and
//! whoever receives something loses the round.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::Agent;
use crate::knowledge::{KnowledgeError, SubjectiveKnowledge};
use crate::landscape::Edge;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SocialError {
    #[error("invalid network setup: {0}")]
    Config(String),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    Homogeneous,
    Heterogeneous,
}

impl Composition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Composition::Homogeneous => "homogeneous",
            Composition::Heterogeneous => "heterogeneous",
        }
    }
}

impl std::str::FromStr for Composition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "homogeneous" | "homo" => Ok(Composition::Homogeneous),
            "heterogeneous" | "hetero" => Ok(Composition::Heterogeneous),
            _ => Err(format!("unknown composition `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Unidirectional,
    Bidirectional,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unidirectional" | "uni" => Ok(Direction::Unidirectional),
            "bidirectional" | "bi" => Ok(Direction::Bidirectional),
            _ => Err(format!("unknown direction `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharingConfig {
    pub share_interval: u64,
    pub share_probability: f64,
    pub direction: Direction,
    pub network_size: usize,
}

impl Default for SharingConfig {
    fn default() -> Self {
        Self {
            share_interval: 5,
            share_probability: 0.0,
            direction: Direction::Unidirectional,
            network_size: 5,
        }
    }
}

impl SharingConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.share_probability) {
            return Err(format!(
                "share_probability must lie in [0, 1], got {}",
                self.share_probability
            ));
        }
        if self.share_interval < 1 {
            return Err("share_interval must be at least 1".into());
        }
        if self.network_size < 1 {
            return Err("network_size must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CollaborativeNetwork {
    pub id: usize,
    pub members: Vec<usize>,
    pub composition: Composition,
}

/// Networks plus the theory each agent starts on (at its root).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    pub networks: Vec<CollaborativeNetwork>,
    pub start_theory: Vec<usize>,
}

impl Placement {
    pub fn network_of(&self, agent: usize) -> usize {
        self.networks
            .iter()
            .position(|n| n.members.contains(&agent))
            .expect("every agent belongs to a network")
    }
}

/// Splits agents `0..num_agents` into consecutive networks of `network_size`
/// (the last one may be smaller) and picks start theories.
///
/// Homogeneous networks are assigned whole to theories in round-robin order.
/// In heterogeneous networks agent `i` starts on theory `i mod num_theories`.
pub fn build_networks(
    num_agents: usize,
    num_theories: usize,
    composition: Composition,
    network_size: usize,
) -> Result<Placement, SocialError> {
    if network_size < 1 {
        return Err(SocialError::Config("network_size must be at least 1".into()));
    }
    if num_theories < 1 || num_agents < num_theories {
        return Err(SocialError::Config(format!(
            "need at least as many agents as theories ({num_agents} < {num_theories})"
        )));
    }
    let networks: Vec<CollaborativeNetwork> = (0..num_agents)
        .collect::<Vec<_>>()
        .chunks(network_size)
        .enumerate()
        .map(|(id, members)| CollaborativeNetwork {
            id,
            members: members.to_vec(),
            composition,
        })
        .collect();
    let mut start_theory = vec![0; num_agents];
    for net in &networks {
        for &a in &net.members {
            start_theory[a] = match composition {
                Composition::Homogeneous => net.id % num_theories,
                Composition::Heterogeneous => a % num_theories,
            };
        }
    }
    Ok(Placement {
        networks,
        start_theory,
    })
}

/// Pools the full knowledge of all members; afterwards every member holds
/// the same knowledge. Costs no time.
pub fn intra_network_share(network: &CollaborativeNetwork, agents: &mut [Agent]) -> Result<(), SocialError> {
    let Some((&first, rest)) = network.members.split_first() else {
        return Ok(());
    };
    if rest.is_empty() {
        return Ok(());
    }
    let mut pooled = agents[first].knowledge.clone();
    for &m in rest {
        pooled.merge(&agents[m].knowledge)?;
    }
    for &m in &network.members {
        agents[m].knowledge.clone_from(&pooled);
    }
    Ok(())
}

/// What `sender` is willing to pass on from `fragment`: everything for a
/// reliable sender; a biased sender drops the attacks on her current theory.
pub fn filter_shared(fragment: &SubjectiveKnowledge, sender: &Agent) -> SubjectiveKnowledge {
    if sender.biased {
        fragment.without_attacks_on(sender.theory())
    } else {
        fragment.clone()
    }
}

/// The fragment an agent sends to another network right now.
pub fn outgoing_fragment(sender: &Agent) -> SubjectiveKnowledge {
    let theory = sender.theory();
    let mut fragment = sender.recent.restricted_to(theory);
    // degrees as the sender knows them at sending time
    let current: Vec<_> = fragment
        .discovered_in(theory)
        .filter_map(|(a, _)| sender.knowledge.degree(a).map(|d| (a, d)))
        .collect();
    // tree edges travel with the degrees, so a receiver never holds an
    // explored argument without the children she could reach from it
    let mut tree = Vec::new();
    for &(a, _) in &current {
        tree.extend(sender.knowledge.known_children(a).map(|c| (a, c)));
        tree.extend(sender.knowledge.known_parent(a).map(|p| (p, a)));
    }
    for (a, d) in current {
        let _ = fragment.set_degree(a, d);
    }
    for (parent, child) in tree {
        let _ = fragment.add_edge(Edge::Discovery { parent, child });
    }
    filter_shared(&fragment, sender)
}

/// One transfer of a fragment between agents of different networks.
#[derive(Clone, Debug)]
pub struct ShareEvent {
    pub sender: usize,
    pub receiver: usize,
    pub sender_theory: usize,
    pub sender_biased: bool,
    pub fragment: SubjectiveKnowledge,
}

/// Inter-network exchange for one sharing round.
///
/// Agents are visited in `order`. Each one, with probability
/// `share_probability`, picks a partner uniformly among the agents of other
/// networks and sends her outgoing fragment (bidirectional mode: the partner
/// answers with hers). Sending empties the sender's recent buffer. Receiving
/// a non-empty fragment marks the receiver time-costed for the round.
pub fn inter_network_share<R: Rng + ?Sized>(
    agents: &mut [Agent],
    order: &[usize],
    config: &SharingConfig,
    rng: &mut R,
    mut on_share: impl FnMut(&ShareEvent),
) -> Result<(), SocialError> {
    let n = agents.len();
    for &i in order {
        if !rng.gen_bool(config.share_probability) {
            continue;
        }
        let net = agents[i].network_id;
        let outsiders = agents.iter().filter(|a| a.network_id != net).count();
        if outsiders == 0 {
            continue;
        }
        let k = rng.gen_range(0..outsiders);
        let j = (0..n)
            .filter(|&x| agents[x].network_id != net)
            .nth(k)
            .expect("partner index within outsiders");

        deliver(agents, i, j, &mut on_share)?;
        if config.direction == Direction::Bidirectional {
            deliver(agents, j, i, &mut on_share)?;
        }
    }
    Ok(())
}

fn deliver(
    agents: &mut [Agent],
    from: usize,
    to: usize,
    on_share: &mut impl FnMut(&ShareEvent),
) -> Result<(), SocialError> {
    let fragment = outgoing_fragment(&agents[from]);
    agents[from].recent.clear();
    if fragment.is_empty() {
        return Ok(());
    }
    agents[to].knowledge.merge(&fragment)?;
    agents[to].time_costed = true;
    on_share(&ShareEvent {
        sender: from,
        receiver: to,
        sender_theory: agents[from].theory(),
        sender_biased: agents[from].biased,
        fragment,
    });
    Ok(())
}
