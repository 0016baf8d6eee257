//! Schedulers: the three-case adversarial schedule and two baselines.
//!
//! The adversarial schedule runs agents one at a time in round-robin order.
//! Each turn (a *subschedule*) lasts until the agent
//!
//! 1. meets another agent (after the fewest possible steps),
//! 2. otherwise, revisits a (state, cell) pair; it stops at the first visit
//!    of the cycle pair whose state is smallest in the automaton's order,
//! 3. otherwise, it drifts away forever along its travel vector; it runs
//!    until it is more than one travel period ahead of every other agent on
//!    each moving axis, after which a special rule takes over for the rest
//!    of the run: every other agent steps once, then the escaping agent
//!    runs one full travel period, repeated.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::automaton::{Automaton, StateId, StateSet};
use crate::world::{AgentId, CaseType, Cell, Configuration, SubscheduleRecord, Trace, WorldError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("agent {agent} out of range (n = {n})")]
    AgentOutOfRange { agent: AgentId, n: usize },
    #[error("lookahead {bound} is below the required 2N+2 = {required}")]
    BoundTooSmall { bound: u64, required: u64 },
    #[error("solo walk of agent {agent} not classified within {bound} steps")]
    Unclassified { agent: AgentId, bound: u64 },
    #[error("special escape rule is active")]
    EscapeActive,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error(transparent)]
    World(#[from] WorldError),
}

/// How a solo run of one agent, with every other agent frozen, turns out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SoloOutcome {
    /// First lands on an occupied cell after `steps` steps.
    Meets { steps: u64, cell: Cell },
    /// Cycles in place; the subschedule ends after `steps` steps in the
    /// smallest cycle state `q_min`.
    Recurs { steps: u64, q_min: StateId },
    /// Drifts away forever along `travel` with the given period.
    Escapes { travel: (i64, i64), period: u64 },
}

impl SoloOutcome {
    pub fn case(&self) -> CaseType {
        match self {
            SoloOutcome::Meets { .. } => CaseType::Meet,
            SoloOutcome::Recurs { .. } => CaseType::Repeat,
            SoloOutcome::Escapes { .. } => CaseType::Escape,
        }
    }
}

/// Lookahead that always suffices for [`simulate_solo`].
pub fn solo_bound(a: &Automaton) -> u64 {
    2 * a.num_states() as u64 + 2
}

/// Outcome plus the first time (relative to the start) from which the walk
/// is periodic.
struct SoloWalk {
    outcome: SoloOutcome,
    periodic_from: u64,
}

/// Smallest `m >= 0` with `d == m * v`, for `v != (0, 0)`.
fn nonneg_multiple(d: (i64, i64), v: (i64, i64)) -> Option<i64> {
    let m = if v.0 != 0 {
        if d.0 % v.0 != 0 {
            return None;
        }
        d.0 / v.0
    } else {
        if d.0 != 0 || d.1 % v.1 != 0 {
            return None;
        }
        d.1 / v.1
    };
    (m >= 0 && d.1 == m * v.1 && d.0 == m * v.0).then_some(m)
}

fn walk_solo(
    c: &Configuration,
    a: &Automaton,
    agent: AgentId,
    bound: u64,
) -> Result<SoloWalk, ScheduleError> {
    let n = c.num_agents();
    if agent >= n {
        return Err(ScheduleError::AgentOutOfRange { agent, n });
    }
    let required = solo_bound(a);
    if bound < required {
        return Err(ScheduleError::BoundTooSmall { bound, required });
    }
    let frozen: SmallVec<[Cell; 4]> = (0..n).filter(|&b| b != agent).map(|b| c.cell(b)).collect();

    // The first step may sense co-located frozen agents; every later step
    // senses nothing, since touching a frozen cell ends the walk.
    let (q1, mv) = a.step(c.state(agent), c.sensed(agent));
    let c1 = c.cell(agent).offset(mv.offset());
    if frozen.contains(&c1) {
        return Ok(SoloWalk {
            outcome: SoloOutcome::Meets { steps: 1, cell: c1 },
            periodic_from: 1,
        });
    }
    // states[i], cells[i] are the walk at time i + 1.
    let mut states = vec![q1];
    let mut cells = vec![c1];
    let mut seen = vec![u64::MAX; a.num_states()];
    seen[q1.index()] = 1;
    let mut t = 1u64;
    let (mu, v) = loop {
        if t >= bound {
            return Err(ScheduleError::Unclassified { agent, bound });
        }
        let (q, mv) = a.step(*states.last().unwrap(), StateSet::EMPTY);
        let cell = cells.last().unwrap().offset(mv.offset());
        t += 1;
        if frozen.contains(&cell) {
            return Ok(SoloWalk {
                outcome: SoloOutcome::Meets { steps: t, cell },
                periodic_from: t,
            });
        }
        let first = seen[q.index()];
        if first != u64::MAX {
            break (first, cell.diff(cells[first as usize - 1]));
        }
        seen[q.index()] = t;
        states.push(q);
        cells.push(cell);
    };
    let period = t - mu;
    let cycle = (mu as usize - 1)..(t as usize - 1);

    if v == (0, 0) {
        // A pair on the cycle cannot also occur before the cycle starts, so
        // the first visit of the q_min pair lies inside the cycle.
        let pos = cycle
            .clone()
            .min_by_key(|&i| a.rank(states[i]))
            .expect("cycle is non-empty");
        return Ok(SoloWalk {
            outcome: SoloOutcome::Recurs {
                steps: pos as u64 + 1,
                q_min: states[pos],
            },
            periodic_from: mu,
        });
    }

    // From time mu on, the cell at time mu + j + m * period is
    // cells[mu + j] + m * v.
    let mut best: Option<(u64, Cell)> = None;
    for &f in &frozen {
        for i in cycle.clone() {
            let j = (i + 1) as u64 - mu;
            if let Some(m) = nonneg_multiple(f.diff(cells[i]), v) {
                let time = mu + j + m as u64 * period;
                if best.is_none_or(|(bt, _)| time < bt) {
                    best = Some((time, f));
                }
            }
        }
    }
    let outcome = match best {
        Some((steps, cell)) => SoloOutcome::Meets { steps, cell },
        None => SoloOutcome::Escapes { travel: v, period },
    };
    Ok(SoloWalk {
        outcome,
        periodic_from: mu,
    })
}

/// Classifies the solo continuation of `agent` from `c`, all other agents
/// frozen. `bound` is the simulation lookahead and must be at least
/// `2N + 2`.
pub fn simulate_solo(
    c: &Configuration,
    a: &Automaton,
    agent: AgentId,
    bound: u64,
) -> Result<SoloOutcome, ScheduleError> {
    walk_solo(c, a, agent, bound).map(|w| w.outcome)
}

/// The special rule installed by a type-3 subschedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EscapeState {
    pub agent: AgentId,
    pub period: u64,
    pub travel: (i64, i64),
    pub active: bool,
}

/// One finished subschedule: its record, the outcome that determined its
/// length, and every snapshot after the start (the last is the end state).
#[derive(Clone, Debug)]
pub struct SubscheduleRun {
    pub record: SubscheduleRecord,
    pub outcome: SoloOutcome,
    pub path: Vec<Configuration>,
    pub escape: Option<EscapeState>,
}

impl SubscheduleRun {
    pub fn end(&self) -> &Configuration {
        self.path.last().expect("subschedules are non-empty")
    }
}

/// Every other agent is strictly more than `period` behind `agent` along
/// each axis where the travel vector is nonzero.
fn separated(c: &Configuration, agent: AgentId, travel: (i64, i64), period: u64) -> bool {
    let k = period as i64;
    let me = c.cell(agent);
    (0..c.num_agents()).filter(|&r| r != agent).all(|r| {
        let other = c.cell(r);
        let ok = |dir: i64, mine: i64, theirs: i64| match dir.signum() {
            1 => mine - theirs > k,
            -1 => mine - theirs < -k,
            _ => true,
        };
        ok(travel.0, me.x, other.x) && ok(travel.1, me.y, other.y)
    })
}

/// Runs one adversarial subschedule of `agent` from `c`.
pub fn next_subschedule(
    c: &Configuration,
    a: &Automaton,
    agent: AgentId,
) -> Result<SubscheduleRun, ScheduleError> {
    let walk = walk_solo(c, a, agent, solo_bound(a))?;
    let mut path = Vec::new();
    let mut cur = c.clone();
    let mut escape = None;
    match walk.outcome {
        SoloOutcome::Meets { steps, .. } | SoloOutcome::Recurs { steps, .. } => {
            for _ in 0..steps {
                cur = cur.activate(a, &[agent])?;
                path.push(cur.clone());
            }
        }
        SoloOutcome::Escapes { travel, period } => {
            // Only stop once the walk is inside its periodic part, so that
            // each later block of `period` steps moves by exactly `travel`.
            let mut elapsed = 0;
            loop {
                cur = cur.activate(a, &[agent])?;
                elapsed += 1;
                path.push(cur.clone());
                if elapsed >= walk.periodic_from && separated(&cur, agent, travel, period) {
                    break;
                }
            }
            escape = Some(EscapeState {
                agent,
                period,
                travel,
                active: true,
            });
        }
    }
    let record = SubscheduleRecord {
        agent,
        start: c.time,
        end: cur.time,
        case: walk.outcome.case(),
        start_cell: c.cell(agent),
        end_cell: cur.cell(agent),
    };
    Ok(SubscheduleRun {
        record,
        outcome: walk.outcome,
        path,
        escape,
    })
}

/// Which scheduler drives a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    Adversarial,
    RoundRobinSingleStep,
    FullySynchronous,
}

impl FromStr for ScheduleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adversarial" | "adv" => Ok(ScheduleKind::Adversarial),
            "round-robin" | "rr" => Ok(ScheduleKind::RoundRobinSingleStep),
            "sync" | "synchronous" | "fsync" => Ok(ScheduleKind::FullySynchronous),
            other => Err(format!(
                "unknown scheduler `{other}` (expected adversarial, round-robin or sync)"
            )),
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Adversarial => "adversarial",
            ScheduleKind::RoundRobinSingleStep => "round-robin",
            ScheduleKind::FullySynchronous => "sync",
        })
    }
}

pub fn run(kind: ScheduleKind, a: Arc<Automaton>, horizon: u64) -> Result<Trace, ScheduleError> {
    match kind {
        ScheduleKind::Adversarial => run_adversarial(a, horizon),
        ScheduleKind::RoundRobinSingleStep => run_round_robin(a, horizon),
        ScheduleKind::FullySynchronous => run_synchronous(a, horizon),
    }
}

/// Runs the adversarial schedule until the first subschedule boundary at
/// or after `horizon`. Subschedules are never cut short.
pub fn run_adversarial(a: Arc<Automaton>, horizon: u64) -> Result<Trace, ScheduleError> {
    if horizon == 0 {
        return Err(ScheduleError::ZeroHorizon);
    }
    let n = a.num_agents();
    let mut trace = Trace::new(a.clone());
    let mut agent = 0;
    while trace.time() < horizon {
        let sub = next_subschedule(trace.last(), &a, agent)?;
        for snap in sub.path {
            trace.push(smallvec::smallvec![agent], snap);
        }
        trace.push_record(sub.record);
        agent = (agent + 1) % n;
        if let Some(escape) = sub.escape {
            trace.escape_from = Some(trace.time());
            run_escape_rule(&mut trace, escape, horizon)?;
        }
    }
    Ok(trace)
}

/// The special rule: each other agent one step in ascending id order, then
/// the escaping agent for one travel period, repeated until `horizon`.
fn run_escape_rule(
    trace: &mut Trace,
    escape: EscapeState,
    horizon: u64,
) -> Result<(), ScheduleError> {
    let n = trace.automaton().num_agents();
    while trace.time() < horizon {
        for r in (0..n).filter(|&r| r != escape.agent) {
            if trace.time() >= horizon {
                return Ok(());
            }
            trace.step(&[r])?;
        }
        if trace.time() >= horizon {
            return Ok(());
        }
        for _ in 0..escape.period {
            trace.step(&[escape.agent])?;
        }
    }
    Ok(())
}

/// Activates every agent at every step.
pub fn run_synchronous(a: Arc<Automaton>, horizon: u64) -> Result<Trace, ScheduleError> {
    if horizon == 0 {
        return Err(ScheduleError::ZeroHorizon);
    }
    let all: Vec<AgentId> = (0..a.num_agents()).collect();
    let mut trace = Trace::new(a);
    for _ in 0..horizon {
        trace.step(&all)?;
    }
    Ok(trace)
}

/// Activates agent `t mod n` at time `t`.
pub fn run_round_robin(a: Arc<Automaton>, horizon: u64) -> Result<Trace, ScheduleError> {
    if horizon == 0 {
        return Err(ScheduleError::ZeroHorizon);
    }
    let n = a.num_agents() as u64;
    let mut trace = Trace::new(a);
    for t in 0..horizon {
        trace.step(&[(t % n) as usize])?;
    }
    Ok(trace)
}
