//! Configurations on the infinite grid, atomic look-compute-move steps, and
//! the trace of a run.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::automaton::{Automaton, StateId, StateSet};

pub type AgentId = usize;

/// Largest agent count; agent sets are 64-bit masks.
pub const MAX_AGENTS: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub x: i64,
    pub y: i64,
}

impl Cell {
    pub const ORIGIN: Cell = Cell { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, (dx, dy): (i64, i64)) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }

    /// `self - other` as a vector.
    pub fn diff(self, other: Cell) -> (i64, i64) {
        (self.x - other.x, self.y - other.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

pub fn manhattan_distance(a: Cell, b: Cell) -> u64 {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
}

/// A set of agent ids.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentSet(pub u64);

impl AgentSet {
    pub const EMPTY: AgentSet = AgentSet(0);

    pub fn single(a: AgentId) -> Self {
        AgentSet(1 << a)
    }

    pub fn insert(&mut self, a: AgentId) {
        self.0 |= 1 << a;
    }

    pub fn contains(self, a: AgentId) -> bool {
        a < MAX_AGENTS && self.0 & (1 << a) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersection(self, other: AgentSet) -> AgentSet {
        AgentSet(self.0 & other.0)
    }

    pub fn difference(self, other: AgentSet) -> AgentSet {
        AgentSet(self.0 & !other.0)
    }

    /// Smallest member.
    pub fn first(self) -> Option<AgentId> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = AgentId> {
        (0..MAX_AGENTS).filter(move |a| self.0 & (1 << a) != 0)
    }
}

impl FromIterator<AgentId> for AgentSet {
    fn from_iter<I: IntoIterator<Item = AgentId>>(iter: I) -> Self {
        let mut s = AgentSet::EMPTY;
        for a in iter {
            s.insert(a);
        }
        s
    }
}

impl fmt::Display for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_char('{')?;
        for (i, a) in self.iter().enumerate() {
            if i > 0 {
                f.write_char(',')?;
            }
            write!(f, "{a}")?;
        }
        f.write_char('}')
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AgentState {
    pub state: StateId,
    pub cell: Cell,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorldError {
    #[error("activation with no agents")]
    EmptyActivation,
    #[error("agent {agent} out of range (n = {n})")]
    AgentOutOfRange { agent: AgentId, n: usize },
}

/// Snapshot of every agent at an integer point in time.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub time: u64,
    pub agents: Vec<AgentState>,
}

impl Configuration {
    /// Every agent at the origin in its initial state, time 0.
    pub fn initial(a: &Automaton) -> Self {
        Configuration {
            time: 0,
            agents: a
                .initial_states()
                .iter()
                .map(|&state| AgentState {
                    state,
                    cell: Cell::ORIGIN,
                })
                .collect(),
        }
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn cell(&self, agent: AgentId) -> Cell {
        self.agents[agent].cell
    }

    pub fn state(&self, agent: AgentId) -> StateId {
        self.agents[agent].state
    }

    /// States of the *other* agents sharing `agent`'s cell.
    pub fn sensed(&self, agent: AgentId) -> StateSet {
        let here = self.agents[agent].cell;
        self.agents
            .iter()
            .enumerate()
            .filter(|(b, s)| *b != agent && s.cell == here)
            .map(|(_, s)| s.state)
            .collect()
    }

    /// Agents that are not alone in their cell.
    pub fn meeting_set(&self) -> AgentSet {
        let mut set = AgentSet::EMPTY;
        for (i, a) in self.agents.iter().enumerate() {
            for (j, b) in self.agents.iter().enumerate().skip(i + 1) {
                if a.cell == b.cell {
                    set.insert(i);
                    set.insert(j);
                }
            }
        }
        set
    }

    /// Largest Manhattan distance between any two agents.
    pub fn max_pairwise_distance(&self) -> u64 {
        let mut best = 0;
        for (i, a) in self.agents.iter().enumerate() {
            for b in &self.agents[i + 1..] {
                best = best.max(manhattan_distance(a.cell, b.cell));
            }
        }
        best
    }

    /// One atomic time step: every agent in `agents` senses the pre-move
    /// configuration, then all of them apply the transition and move.
    pub fn activate(&self, a: &Automaton, agents: &[AgentId]) -> Result<Configuration, WorldError> {
        if agents.is_empty() {
            return Err(WorldError::EmptyActivation);
        }
        let n = self.num_agents();
        if let Some(&agent) = agents.iter().find(|&&i| i >= n) {
            return Err(WorldError::AgentOutOfRange { agent, n });
        }
        let decisions: SmallVec<[_; 4]> = agents
            .iter()
            .map(|&i| (i, a.step(self.agents[i].state, self.sensed(i))))
            .collect();
        let mut next = self.clone();
        next.time += 1;
        for (i, (state, mv)) in decisions {
            next.agents[i] = AgentState {
                state,
                cell: self.agents[i].cell.offset(mv.offset()),
            };
        }
        Ok(next)
    }
}

/// Why a subschedule ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseType {
    /// Met another agent (type 1).
    Meet,
    /// Repeated a (state, cell) pair (type 2).
    Repeat,
    /// Escaped along a nonzero travel vector (type 3).
    Escape,
}

impl CaseType {
    pub fn code(self) -> u8 {
        match self {
            CaseType::Meet => 1,
            CaseType::Repeat => 2,
            CaseType::Escape => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(CaseType::Meet),
            2 => Some(CaseType::Repeat),
            3 => Some(CaseType::Escape),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SubscheduleRecord {
    pub agent: AgentId,
    pub start: u64,
    pub end: u64,
    pub case: CaseType,
    pub start_cell: Cell,
    pub end_cell: Cell,
}

impl SubscheduleRecord {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// One entry of the event log, in file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event<'a> {
    Snapshot(&'a Configuration),
    Activation { time: u64, agents: &'a [AgentId] },
    Boundary(&'a SubscheduleRecord),
}

pub type Activation = SmallVec<[AgentId; 1]>;

/// Execution history of one run.
///
/// Snapshots are stored densely by time, so `snapshots[t].time == t`, and
/// `activations[t]` is the set of agents stepped between `t` and `t + 1`.
#[derive(Clone, Debug)]
pub struct Trace {
    automaton: Arc<Automaton>,
    snapshots: Vec<Configuration>,
    activations: Vec<Activation>,
    records: Vec<SubscheduleRecord>,
    explored: HashSet<Cell>,
    /// Time at which a special escape rule took over, if it did.
    pub escape_from: Option<u64>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("trace has no snapshots")]
    Empty,
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("time {0} is beyond the end of the trace")]
    OutOfRange(u64),
}

impl Trace {
    pub fn new(automaton: Arc<Automaton>) -> Self {
        let start = Configuration::initial(&automaton);
        Self::from_start(automaton, start)
    }

    /// Trace starting from an arbitrary configuration at its own time; the
    /// configuration's time must be 0.
    pub fn from_start(automaton: Arc<Automaton>, start: Configuration) -> Self {
        debug_assert_eq!(start.time, 0);
        let explored = start.agents.iter().map(|s| s.cell).collect();
        Trace {
            automaton,
            snapshots: vec![start],
            activations: Vec::new(),
            records: Vec::new(),
            explored,
            escape_from: None,
        }
    }

    pub fn automaton(&self) -> &Arc<Automaton> {
        &self.automaton
    }

    /// Current time, i.e. the time of the last snapshot.
    pub fn time(&self) -> u64 {
        self.snapshots.len() as u64 - 1
    }

    pub fn last(&self) -> &Configuration {
        self.snapshots.last().expect("trace always has a snapshot")
    }

    pub fn snapshot(&self, t: u64) -> Option<&Configuration> {
        self.snapshots.get(t as usize)
    }

    pub fn snapshots(&self) -> &[Configuration] {
        &self.snapshots
    }

    pub fn activation(&self, t: u64) -> Option<&[AgentId]> {
        self.activations.get(t as usize).map(|a| a.as_slice())
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn records(&self) -> &[SubscheduleRecord] {
        &self.records
    }

    pub fn explored(&self) -> &HashSet<Cell> {
        &self.explored
    }

    /// Cells occupied at any time in `0..=t`.
    pub fn explored_until(&self, t: u64) -> HashSet<Cell> {
        let end = (t as usize).min(self.snapshots.len() - 1);
        self.snapshots[..=end]
            .iter()
            .flat_map(|c| c.agents.iter().map(|s| s.cell))
            .collect()
    }

    /// Activates `agents` on the latest snapshot and appends the result.
    pub fn step(&mut self, agents: &[AgentId]) -> Result<&Configuration, WorldError> {
        let next = self.last().activate(&self.automaton, agents)?;
        self.push(Activation::from_slice(agents), next);
        Ok(self.last())
    }

    /// Appends an externally computed successor snapshot.
    pub fn push(&mut self, activation: Activation, next: Configuration) {
        debug_assert_eq!(next.time, self.time() + 1);
        self.explored.extend(next.agents.iter().map(|s| s.cell));
        self.activations.push(activation);
        self.snapshots.push(next);
    }

    pub fn push_record(&mut self, record: SubscheduleRecord) {
        self.records.push(record);
    }

    /// Events in file order: at each time the snapshot, then boundaries of
    /// subschedules ending at that time, then the activation.
    pub fn events(&self) -> impl Iterator<Item = Event<'_>> {
        let mut rec = self.records.iter().peekable();
        self.snapshots.iter().flat_map(move |snap| {
            let t = snap.time;
            let mut out = vec![Event::Snapshot(snap)];
            while let Some(r) = rec.next_if(|r| r.end <= t) {
                out.push(Event::Boundary(r));
            }
            if let Some(act) = self.activations.get(t as usize) {
                out.push(Event::Activation {
                    time: t,
                    agents: act.as_slice(),
                });
            }
            out
        })
    }

    /// Serializes to the line-delimited trace format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for event in self.events() {
            match event {
                Event::Snapshot(c) => {
                    write!(out, "C {}", c.time).unwrap();
                    for s in &c.agents {
                        write!(
                            out,
                            " {} {} {}",
                            self.automaton.label(s.state),
                            s.cell.x,
                            s.cell.y
                        )
                        .unwrap();
                    }
                }
                Event::Activation { time, agents } => {
                    write!(out, "A {time} ").unwrap();
                    for (i, a) in agents.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        write!(out, "{a}").unwrap();
                    }
                }
                Event::Boundary(r) => {
                    write!(
                        out,
                        "B {} {} {} {} {} {} {} {}",
                        r.agent,
                        r.start,
                        r.end,
                        r.case.code(),
                        r.start_cell.x,
                        r.start_cell.y,
                        r.end_cell.x,
                        r.end_cell.y
                    )
                    .unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses a trace file. State labels are resolved against `automaton`.
    /// Snapshots must be consecutive from time 0; activations are checked
    /// for range but not replayed.
    pub fn parse(text: &str, automaton: Arc<Automaton>) -> Result<Trace, TraceError> {
        let n = automaton.num_agents();
        let mut snapshots: Vec<Configuration> = Vec::new();
        let mut activations: Vec<Activation> = Vec::new();
        let mut records = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let bad = |message: String| TraceError::Malformed {
                line: line_no,
                message,
            };
            let mut fields = line.split(' ');
            let kind = fields.next().unwrap_or("");
            let num = |tok: Option<&str>, what: &str| -> Result<i64, TraceError> {
                let tok = tok.ok_or_else(|| bad(format!("missing {what}")))?;
                tok.parse::<i64>()
                    .map_err(|_| bad(format!("bad {what} `{tok}`")))
            };
            match kind {
                "C" => {
                    let time = num(fields.next(), "time")?;
                    if time != snapshots.len() as i64 {
                        return Err(bad(format!("snapshot time {time} out of sequence")));
                    }
                    let mut agents = Vec::with_capacity(n);
                    for _ in 0..n {
                        let label = fields.next().ok_or_else(|| bad("missing agent".into()))?;
                        let state = automaton
                            .state_by_label(label)
                            .ok_or_else(|| bad(format!("unknown state `{label}`")))?;
                        let x = num(fields.next(), "x")?;
                        let y = num(fields.next(), "y")?;
                        agents.push(AgentState {
                            state,
                            cell: Cell::new(x, y),
                        });
                    }
                    if let Some(extra) = fields.next() {
                        return Err(bad(format!("unexpected field `{extra}`")));
                    }
                    snapshots.push(Configuration {
                        time: time as u64,
                        agents,
                    });
                }
                "A" => {
                    let time = num(fields.next(), "time")?;
                    if time + 1 != snapshots.len() as i64 || activations.len() as i64 != time {
                        return Err(bad(format!("activation time {time} out of sequence")));
                    }
                    let list = fields.next().ok_or_else(|| bad("missing agents".into()))?;
                    let mut act = Activation::new();
                    for tok in list.split(',') {
                        let a: usize =
                            tok.parse().map_err(|_| bad(format!("bad agent `{tok}`")))?;
                        if a >= n {
                            return Err(bad(format!("agent {a} out of range")));
                        }
                        act.push(a);
                    }
                    if let Some(extra) = fields.next() {
                        return Err(bad(format!("unexpected field `{extra}`")));
                    }
                    activations.push(act);
                }
                "B" => {
                    let mut v = [0i64; 8];
                    for (i, name) in ["agent", "start", "end", "type", "sx", "sy", "ex", "ey"]
                        .iter()
                        .enumerate()
                    {
                        v[i] = num(fields.next(), name)?;
                    }
                    if let Some(extra) = fields.next() {
                        return Err(bad(format!("unexpected field `{extra}`")));
                    }
                    if v[0] < 0 || v[0] as usize >= n {
                        return Err(bad(format!("agent {} out of range", v[0])));
                    }
                    if v[1] < 0 || v[2] <= v[1] {
                        return Err(bad("boundary must have end > start >= 0".into()));
                    }
                    let case = u8::try_from(v[3])
                        .ok()
                        .and_then(CaseType::from_code)
                        .ok_or_else(|| bad(format!("bad type {}", v[3])))?;
                    records.push(SubscheduleRecord {
                        agent: v[0] as usize,
                        start: v[1] as u64,
                        end: v[2] as u64,
                        case,
                        start_cell: Cell::new(v[4], v[5]),
                        end_cell: Cell::new(v[6], v[7]),
                    });
                }
                "" if line.is_empty() => continue,
                other => return Err(bad(format!("unknown record kind `{other}`"))),
            }
        }
        if snapshots.is_empty() {
            return Err(TraceError::Empty);
        }
        if activations.len() + 1 != snapshots.len() {
            return Err(TraceError::Malformed {
                line: text.lines().count(),
                message: "every snapshot except the last needs an activation".into(),
            });
        }
        let last = snapshots.len() as u64 - 1;
        if let Some(r) = records.iter().find(|r| r.end > last) {
            return Err(TraceError::Malformed {
                line: 0,
                message: format!("boundary ends at {} after the last snapshot", r.end),
            });
        }
        let explored = snapshots
            .iter()
            .flat_map(|c| c.agents.iter().map(|s| s.cell))
            .collect();
        // The escape rule starts where a type-3 subschedule ends.
        let escape_from = records
            .iter()
            .find(|r| r.case == CaseType::Escape)
            .map(|r| r.end);
        Ok(Trace {
            automaton,
            snapshots,
            activations,
            records,
            explored,
            escape_from,
        })
    }

    /// Replays the recorded activations from the first snapshot and checks
    /// every later snapshot matches.
    pub fn replay_matches(&self) -> Result<bool, WorldError> {
        let mut cur = self.snapshots[0].clone();
        for (t, act) in self.activations.iter().enumerate() {
            cur = cur.activate(&self.automaton, act)?;
            if cur != self.snapshots[t + 1] {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{builtin, parse_automaton, Move};

    fn swap_automaton() -> Automaton {
        parse_automaton(
            "states: q0 q1\nagents: q0 q1\n\
             delta q0 {q1} -> q0 N\ndelta q0 * -> q0 0\n\
             delta q1 {q0} -> q1 E\ndelta q1 * -> q1 0\n",
        )
        .unwrap()
    }

    #[test]
    fn initial_configuration_is_at_origin() {
        let east = builtin("east1").unwrap();
        let c = Configuration::initial(&east);
        assert_eq!(c.time, 0);
        assert_eq!(c.num_agents(), 3);
        assert!(c
            .agents
            .iter()
            .all(|s| s.cell == Cell::ORIGIN && s.state == StateId(0)));

        let stay = builtin("stay1")
            .unwrap()
            .with_agents(vec![StateId(0)])
            .unwrap();
        let c = Configuration::initial(&stay);
        assert_eq!(
            c.agents,
            vec![AgentState {
                state: StateId(0),
                cell: Cell::ORIGIN
            }]
        );

        let zig = builtin("zig2")
            .unwrap()
            .with_agents(vec![StateId(0), StateId(1), StateId(0)])
            .unwrap();
        let c = Configuration::initial(&zig);
        let states: Vec<_> = c.agents.iter().map(|s| zig.label(s.state)).collect();
        assert_eq!(states, ["z1", "z2", "z1"]);
        let trace = Trace::new(Arc::new(zig));
        assert_eq!(trace.explored().len(), 1);
        assert!(trace.explored().contains(&Cell::ORIGIN));
    }

    #[test]
    fn single_activation_moves_only_that_agent() {
        let east = builtin("east1").unwrap();
        let c = Configuration::initial(&east);
        let next = c.activate(&east, &[0]).unwrap();
        assert_eq!(next.time, 1);
        assert_eq!(next.cell(0), Cell::new(1, 0));
        assert_eq!(next.cell(1), Cell::ORIGIN);
        assert_eq!(next.cell(2), Cell::ORIGIN);
    }

    #[test]
    fn simultaneous_activation_senses_before_moving() {
        let a = swap_automaton();
        let c = Configuration::initial(&a);
        let both = c.activate(&a, &[0, 1]).unwrap();
        assert_eq!(both.cell(0), Cell::new(0, 1));
        assert_eq!(both.cell(1), Cell::new(1, 0));

        // Sequentially, agent 1 no longer sees agent 0 once it has left.
        let seq = c.activate(&a, &[0]).unwrap().activate(&a, &[1]).unwrap();
        assert_eq!(seq.cell(0), Cell::new(0, 1));
        assert_eq!(seq.cell(1), Cell::ORIGIN);
    }

    #[test]
    fn stay_automaton_keeps_cells() {
        let stay = builtin("stay1").unwrap();
        let c = Configuration::initial(&stay);
        let next = c.activate(&stay, &[0, 1, 2]).unwrap();
        assert_eq!(next.time, 1);
        assert_eq!(next.agents, c.agents);
    }

    #[test]
    fn activation_errors() {
        let stay = builtin("stay1").unwrap();
        let c = Configuration::initial(&stay);
        assert_eq!(c.activate(&stay, &[]), Err(WorldError::EmptyActivation));
        assert_eq!(
            c.activate(&stay, &[3]),
            Err(WorldError::AgentOutOfRange { agent: 3, n: 3 })
        );
    }

    #[test]
    fn sensing_excludes_self() {
        let a = swap_automaton().with_agents(vec![StateId(0)]).unwrap();
        let c = Configuration::initial(&a);
        assert!(c.sensed(0).is_empty());
        let two = swap_automaton()
            .with_agents(vec![StateId(0), StateId(0)])
            .unwrap();
        let c = Configuration::initial(&two);
        assert_eq!(c.sensed(0), StateSet(0b01));
        assert_eq!(two.step(StateId(0), c.sensed(0)), (StateId(0), Move::Stay));
    }

    #[test]
    fn manhattan_examples() {
        assert_eq!(manhattan_distance(Cell::ORIGIN, Cell::ORIGIN), 0);
        assert_eq!(manhattan_distance(Cell::ORIGIN, Cell::new(3, -4)), 7);
        assert_eq!(manhattan_distance(Cell::new(-2, 5), Cell::new(1, 5)), 3);
    }

    #[test]
    fn meeting_set_and_distance() {
        let c = Configuration {
            time: 0,
            agents: vec![
                AgentState {
                    state: StateId(0),
                    cell: Cell::new(0, 0),
                },
                AgentState {
                    state: StateId(0),
                    cell: Cell::new(0, 0),
                },
                AgentState {
                    state: StateId(0),
                    cell: Cell::new(5, 7),
                },
            ],
        };
        assert_eq!(c.meeting_set(), AgentSet(0b011));
        assert_eq!(c.max_pairwise_distance(), 12);
    }

    #[test]
    fn trace_text_round_trips() {
        let a = Arc::new(builtin("east1").unwrap());
        let mut t = Trace::new(a.clone());
        t.step(&[0]).unwrap();
        t.step(&[1, 2]).unwrap();
        t.push_record(SubscheduleRecord {
            agent: 0,
            start: 0,
            end: 1,
            case: CaseType::Escape,
            start_cell: Cell::ORIGIN,
            end_cell: Cell::new(1, 0),
        });
        let text = t.to_text();
        assert_eq!(
            text,
            "C 0 e 0 0 e 0 0 e 0 0\nA 0 0\nC 1 e 1 0 e 0 0 e 0 0\nB 0 0 1 3 0 0 1 0\nA 1 1,2\nC 2 e 1 0 e 1 0 e 1 0\n"
        );
        let back = Trace::parse(&text, a).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.explored().len(), 2);
        assert!(back.replay_matches().unwrap());
    }

    #[test]
    fn malformed_traces_are_rejected() {
        let a = Arc::new(builtin("east1").unwrap());
        for bad in [
            "",
            "C 1 e 0 0 e 0 0 e 0 0\n",
            "C 0 e 0 0 e 0 0\n",
            "C 0 e 0 0 e 0 0 x 0 0\n",
            "C 0 e 0 0 e 0 0 e 0 0\nA 0 5\nC 1 e 0 0 e 0 0 e 0 0\n",
            "C 0 e 0 0 e 0 0 e 0 0\nA 0 0\n",
            "C 0 e 0 0 e 0 0 e 0 0\nB 0 0 1 3 0 0 1 0\n",
            "Z 0\n",
        ] {
            assert!(Trace::parse(bad, a.clone()).is_err(), "accepted {bad:?}");
        }
    }
}
