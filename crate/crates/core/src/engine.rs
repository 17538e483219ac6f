//! Round-based scheduler.
//!
//! Each round runs the same fixed phases:
//!
//! 1. time-cost flags from the previous round are cleared and the round's
//!    agent order is shuffled;
//! 2. on sharing rounds, every collaborative network pools its knowledge, then
//!    the inter-network exchange runs in the shuffled order;
//! 3. on evaluation rounds, every agent that was not time-costed evaluates the
//!    theories (in agent id order) and possibly switches;
//! 4. every agent that neither received information nor switched theory acts
//!    once, in the shuffled order;
//! 5. the round counter advances.
//!
//! Phases 2 and 3 fire on rounds `r > 0` with `r % interval == 0`. A run owns
//! one ChaCha8 stream seeded from the configured seed; it draws the landscape
//! first, then everything the rounds need, so a run is a pure function of its
//! configuration.

use std::io::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Action, Agent, BehaviorConfig, TheorySwitch};
use crate::knowledge::KnowledgeError;
use crate::landscape::{generate_landscape, ArgumentId, Landscape, LandscapeConfig, LandscapeError};
use crate::social::{
    build_networks, inter_network_share, intra_network_share, Composition, Placement, ShareEvent,
    SharingConfig, SocialError,
};

pub const DEFAULT_MAX_ROUNDS: u64 = 100_000;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Social(#[from] SocialError),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Shape of the landscape. Its `seed` is not consulted by a run: the
    /// landscape is drawn from the run's own stream. [`SimulationConfig::with_seed`]
    /// keeps both seeds equal so that `Landscape::generate(&config.landscape)`
    /// reproduces the run's landscape.
    pub landscape: LandscapeConfig,
    pub behavior: BehaviorConfig,
    pub sharing: SharingConfig,
    pub num_agents: usize,
    pub composition: Composition,
    pub biased: bool,
    pub seed: u64,
    pub max_rounds: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            landscape: LandscapeConfig::default(),
            behavior: BehaviorConfig::default(),
            sharing: SharingConfig::default(),
            num_agents: 10,
            composition: Composition::Homogeneous,
            biased: false,
            seed: 0,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }
}

impl SimulationConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.landscape.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        self.landscape.validate()?;
        self.behavior.validate().map_err(SimulationError::Config)?;
        self.sharing.validate().map_err(SimulationError::Config)?;
        if self.num_agents < 1 {
            return Err(SimulationError::Config("num_agents must be at least 1".into()));
        }
        if self.max_rounds < 1 {
            return Err(SimulationError::Config("max_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub rounds: u64,
    pub success: bool,
    pub agents_per_theory: Vec<usize>,
    pub terminated_by_cap: bool,
    pub best_theory: usize,
}

/// A run succeeds when no theory hosts more agents than the best one.
pub fn score_success(agents_per_theory: &[usize], best_theory: usize) -> bool {
    let max = agents_per_theory.iter().copied().max().unwrap_or(0);
    agents_per_theory.get(best_theory).copied().unwrap_or(0) == max
}

/// Hooks into a running simulation. All methods default to no-ops.
pub trait Observer {
    fn on_share(&mut self, _round: u64, _event: &ShareEvent) {}
    fn on_switch(&mut self, _round: u64, _agent: usize, _switch: &TheorySwitch) {}
    fn on_action(&mut self, _round: u64, _agent: usize, _action: Action, _position: ArgumentId, _counts: &[usize]) {}
    fn on_round_end(&mut self, _sim: &Simulation) {}
}

impl Observer for () {}

pub struct Simulation {
    config: SimulationConfig,
    landscape: Arc<Landscape>,
    placement: Placement,
    agents: Vec<Agent>,
    rng: ChaCha8Rng,
    round: u64,
}

impl Simulation {
    pub fn new(config: SimulationConfig) -> Result<Self, SimulationError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let landscape = Arc::new(generate_landscape(&config.landscape, &mut rng)?);
        Self::assemble(config, landscape, rng)
    }

    /// Runs on a given landscape; the stream is seeded from `config.seed`
    /// and no landscape is drawn from it.
    pub fn with_landscape(config: SimulationConfig, landscape: Arc<Landscape>) -> Result<Self, SimulationError> {
        config.behavior.validate().map_err(SimulationError::Config)?;
        config.sharing.validate().map_err(SimulationError::Config)?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::assemble(config, landscape, rng)
    }

    fn assemble(config: SimulationConfig, landscape: Arc<Landscape>, rng: ChaCha8Rng) -> Result<Self, SimulationError> {
        let placement = build_networks(
            config.num_agents,
            landscape.num_theories(),
            config.composition,
            config.sharing.network_size,
        )?;
        let agents = placement
            .start_theory
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                Agent::new(i, placement.network_of(i), config.biased, ArgumentId::root(t), &landscape)
            })
            .collect();
        Ok(Self {
            config,
            landscape,
            placement,
            agents,
            rng,
            round: 0,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn landscape(&self) -> &Arc<Landscape> {
        &self.landscape
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn agents_per_theory(&self) -> Vec<usize> {
        let mut counts = vec![0; self.landscape.num_theories()];
        for a in &self.agents {
            counts[a.theory()] += 1;
        }
        counts
    }

    /// True once every agent stands on a theory she has fully explored, or
    /// the round cap is reached.
    pub fn is_terminated(&self) -> bool {
        self.all_settled() || self.round >= self.config.max_rounds
    }

    fn all_settled(&self) -> bool {
        self.agents
            .iter()
            .all(|a| a.knowledge.theory_fully_explored(a.theory()))
    }

    pub fn score_success(&self) -> bool {
        score_success(&self.agents_per_theory(), self.landscape.best_theory())
    }

    pub fn step(&mut self) -> Result<(), SimulationError> {
        self.step_observed(&mut ())
    }

    pub fn step_observed(&mut self, obs: &mut dyn Observer) -> Result<(), SimulationError> {
        let round = self.round;
        let Self {
            config,
            landscape,
            placement,
            agents,
            rng,
            ..
        } = self;

        for a in agents.iter_mut() {
            a.time_costed = false;
        }
        let mut order: Vec<usize> = (0..agents.len()).collect();
        order.shuffle(rng);

        if round > 0 && round % config.sharing.share_interval == 0 {
            for net in &placement.networks {
                intra_network_share(net, agents)?;
            }
            inter_network_share(agents, &order, &config.sharing, rng, |e| obs.on_share(round, e))?;
        }

        let mut switched = vec![false; agents.len()];
        if round > 0 && round % config.behavior.evaluation_interval == 0 {
            for (i, a) in agents.iter_mut().enumerate() {
                if a.time_costed {
                    continue;
                }
                if let Some(sw) = a.evaluate_and_switch(&config.behavior, rng) {
                    switched[i] = true;
                    obs.on_switch(round, i, &sw);
                }
            }
        }

        let mut counts = vec![0; landscape.num_theories()];
        for a in agents.iter() {
            counts[a.theory()] += 1;
        }
        for &i in &order {
            let a = &mut agents[i];
            if a.time_costed || switched[i] {
                continue;
            }
            let action = a.choose_action(landscape, &config.behavior, rng);
            a.perform(action, landscape, &config.behavior)?;
            obs.on_action(round, i, action, a.position, &counts);
        }

        self.round += 1;
        obs.on_round_end(self);
        Ok(())
    }

    pub fn result(&self) -> RunResult {
        let counts = self.agents_per_theory();
        RunResult {
            rounds: self.round,
            success: score_success(&counts, self.landscape.best_theory()),
            agents_per_theory: counts,
            terminated_by_cap: !self.all_settled() && self.round >= self.config.max_rounds,
            best_theory: self.landscape.best_theory(),
        }
    }

    pub fn run(mut self) -> Result<RunResult, SimulationError> {
        self.run_observed(&mut ())
    }

    pub fn run_observed(&mut self, obs: &mut dyn Observer) -> Result<RunResult, SimulationError> {
        while !self.is_terminated() {
            self.step_observed(obs)?;
        }
        Ok(self.result())
    }
}

/// Runs one simulation to completion.
pub fn run_simulation(config: &SimulationConfig) -> Result<RunResult, SimulationError> {
    Simulation::new(config.clone())?.run()
}

/// Line-delimited trace: one line per action, share and switch.
pub struct TraceWriter<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out, error: None }
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }

    fn line(&mut self, args: std::fmt::Arguments<'_>) {
        if self.error.is_none() {
            if let Err(e) = self.out.write_fmt(args).and_then(|_| self.out.write_all(b"\n")) {
                self.error = Some(e);
            }
        }
    }
}

fn join_counts(counts: &[usize]) -> String {
    counts.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl<W: Write> Observer for TraceWriter<W> {
    fn on_share(&mut self, round: u64, e: &ShareEvent) {
        self.line(format_args!(
            "round={round} share sender={} receiver={} theory={} arguments={} attacks={}",
            e.sender,
            e.receiver,
            e.sender_theory,
            e.fragment.num_discovered(),
            e.fragment.known_attacks().count()
        ));
    }

    fn on_switch(&mut self, round: u64, agent: usize, sw: &TheorySwitch) {
        self.line(format_args!(
            "round={round} agent={agent} action=switch from={} to={} position={}",
            sw.from, sw.to, sw.landing
        ));
    }

    fn on_action(&mut self, round: u64, agent: usize, action: Action, position: ArgumentId, counts: &[usize]) {
        let name = match action {
            Action::Explore => "explore",
            Action::MoveTo(_) => "move",
            Action::Stay => "stay",
        };
        self.line(format_args!(
            "round={round} agent={agent} action={name} position={position} theory_counts={}",
            join_counts(counts)
        ));
    }
}
