//! The shared deterministic finite automaton that drives every agent.
//!
//! An agent in state `q` that senses the set `S` of states carried by the
//! *other* agents in its cell moves according to `delta(q, S)`. Sensed sets
//! are stored as bitmasks over state indices, so the full transition table
//! has `N * 2^N` entries.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

/// Largest state count accepted by the parser. The dense table has
/// `N * 2^N` entries.
pub const MAX_STATES: usize = 16;

/// Dense 0-based index of a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u16);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One of the five movement outcomes of a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    Stay,
    North,
    East,
    South,
    West,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::Stay, Move::North, Move::East, Move::South, Move::West];

    /// Numeric code: 0 = stay, 1 = north, 2 = east, 3 = south, 4 = west.
    pub fn code(self) -> u8 {
        match self {
            Move::Stay => 0,
            Move::North => 1,
            Move::East => 2,
            Move::South => 3,
            Move::West => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Move> {
        Move::ALL.get(code as usize).copied()
    }

    /// Unit displacement `(dx, dy)`; north is `+y`, east is `+x`.
    pub fn offset(self) -> (i64, i64) {
        match self {
            Move::Stay => (0, 0),
            Move::North => (0, 1),
            Move::East => (1, 0),
            Move::South => (0, -1),
            Move::West => (-1, 0),
        }
    }

    fn token(self) -> &'static str {
        match self {
            Move::Stay => "0",
            Move::North => "N",
            Move::East => "E",
            Move::South => "S",
            Move::West => "W",
        }
    }

    fn parse_token(tok: &str) -> Option<Move> {
        match tok {
            "0" => Some(Move::Stay),
            "N" | "1" => Some(Move::North),
            "E" | "2" => Some(Move::East),
            "S" | "3" => Some(Move::South),
            "W" | "4" => Some(Move::West),
            _ => None,
        }
    }
}

/// A subset of the state space, as a bitmask over state indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateSet(pub u32);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);

    pub fn insert(&mut self, q: StateId) {
        self.0 |= 1 << q.0;
    }

    pub fn contains(self, q: StateId) -> bool {
        self.0 & (1 << q.0) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = StateId> {
        (0..32u16)
            .filter(move |i| self.0 & (1 << i) != 0)
            .map(StateId)
    }
}

impl FromIterator<StateId> for StateSet {
    fn from_iter<I: IntoIterator<Item = StateId>>(iter: I) -> Self {
        let mut set = StateSet::EMPTY;
        for q in iter {
            set.insert(q);
        }
        set
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("line {line}: {message} (at `{token}`)")]
    Syntax {
        line: usize,
        token: String,
        message: String,
    },
    #[error("line {line}: duplicate state `{label}`")]
    DuplicateState { line: usize, label: String },
    #[error("line {line}: undeclared state `{label}`")]
    UndeclaredState { line: usize, label: String },
    #[error("line {line}: conflicting rule for state `{label}`")]
    ConflictingRule { line: usize, label: String },
    #[error("state `{label}` has no rule for sensed set {{{sensed}}} and no `*` default")]
    MissingDefault { label: String, sensed: String },
    #[error("no `states:` line")]
    NoStates,
    #[error("no agents declared (n = 0)")]
    NoAgents,
    #[error("{0} states exceed the supported maximum of {MAX_STATES}")]
    TooManyStates(usize),
    #[error("`order:` must list every state exactly once")]
    BadOrder,
    #[error("state index {0} is not in the automaton")]
    UnknownState(usize),
    #[error("table has {got} entries, expected {expected}")]
    TableSize { got: usize, expected: usize },
}

/// A validated automaton with a total transition table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    labels: Vec<String>,
    /// Indexed by `q * 2^N + sensed_mask`.
    table: Vec<(StateId, Move)>,
    initial: Vec<StateId>,
    /// Rank of each state in the type-2 tie-break order; lower is smaller.
    rank: Vec<usize>,
}

impl Automaton {
    /// Builds an automaton from a dense table indexed by `q * 2^N + mask`.
    /// The state order defaults to index order.
    pub fn from_table(
        labels: Vec<String>,
        table: Vec<(StateId, Move)>,
        initial: Vec<StateId>,
    ) -> Result<Self, AutomatonError> {
        let n_states = labels.len();
        if n_states == 0 {
            return Err(AutomatonError::NoStates);
        }
        if n_states > MAX_STATES {
            return Err(AutomatonError::TooManyStates(n_states));
        }
        let expected = n_states << n_states;
        if table.len() != expected {
            return Err(AutomatonError::TableSize {
                got: table.len(),
                expected,
            });
        }
        if initial.is_empty() {
            return Err(AutomatonError::NoAgents);
        }
        for q in table.iter().map(|(q, _)| q).chain(initial.iter()) {
            if q.index() >= n_states {
                return Err(AutomatonError::UnknownState(q.index()));
            }
        }
        Ok(Automaton {
            rank: (0..n_states).collect(),
            labels,
            table,
            initial,
        })
    }

    /// Replaces the type-2 tie-break order. `order` lists states from smallest
    /// to largest.
    pub fn with_order(mut self, order: &[StateId]) -> Result<Self, AutomatonError> {
        let n = self.num_states();
        if order.len() != n {
            return Err(AutomatonError::BadOrder);
        }
        let mut rank = vec![usize::MAX; n];
        for (pos, q) in order.iter().enumerate() {
            if q.index() >= n || rank[q.index()] != usize::MAX {
                return Err(AutomatonError::BadOrder);
            }
            rank[q.index()] = pos;
        }
        self.rank = rank;
        Ok(self)
    }

    /// Same transition function, different initial states.
    pub fn with_agents(mut self, initial: Vec<StateId>) -> Result<Self, AutomatonError> {
        if initial.is_empty() {
            return Err(AutomatonError::NoAgents);
        }
        if let Some(q) = initial.iter().find(|q| q.index() >= self.num_states()) {
            return Err(AutomatonError::UnknownState(q.index()));
        }
        self.initial = initial;
        Ok(self)
    }

    /// `N`, the number of states.
    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    /// `n`, the number of agents.
    pub fn num_agents(&self) -> usize {
        self.initial.len()
    }

    pub fn initial_states(&self) -> &[StateId] {
        &self.initial
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.num_states() as u16).map(StateId)
    }

    pub fn label(&self, q: StateId) -> &str {
        &self.labels[q.index()]
    }

    pub fn state_by_label(&self, label: &str) -> Option<StateId> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| StateId(i as u16))
    }

    /// Position of `q` in the fixed total order.
    pub fn rank(&self, q: StateId) -> usize {
        self.rank[q.index()]
    }

    /// States from smallest to largest under the fixed total order.
    pub fn order(&self) -> Vec<StateId> {
        let mut states: Vec<StateId> = self.states().collect();
        states.sort_by_key(|q| self.rank(*q));
        states
    }

    /// `delta(q, sensed)` for inputs already known to be in range.
    #[inline]
    pub fn step(&self, q: StateId, sensed: StateSet) -> (StateId, Move) {
        self.table[(q.index() << self.num_states()) | sensed.0 as usize]
    }

    /// `delta(q, sensed)`, rejecting states outside `Q`.
    pub fn apply_transition(
        &self,
        q: StateId,
        sensed: StateSet,
    ) -> Result<(StateId, Move), AutomatonError> {
        let n = self.num_states();
        if q.index() >= n {
            return Err(AutomatonError::UnknownState(q.index()));
        }
        if let Some(bad) = sensed.iter().find(|s| s.index() >= n) {
            return Err(AutomatonError::UnknownState(bad.index()));
        }
        Ok(self.step(q, sensed))
    }

    fn set_text(&self, sensed: StateSet) -> String {
        sensed
            .iter()
            .map(|s| self.label(s))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Serializes into the line format accepted by [`parse_automaton`].
    /// Each state gets a `*` rule for its most common output plus explicit
    /// rules for every other subset.
    pub fn to_text(&self) -> String {
        let n = self.num_states();
        let mut out = String::new();
        out.push_str("states:");
        for l in &self.labels {
            out.push(' ');
            out.push_str(l);
        }
        out.push_str("\nagents:");
        for q in &self.initial {
            out.push(' ');
            out.push_str(self.label(*q));
        }
        out.push_str("\norder:");
        for q in self.order() {
            out.push(' ');
            out.push_str(self.label(q));
        }
        out.push('\n');
        for q in self.states() {
            let row = &self.table[q.index() << n..(q.index() + 1) << n];
            let mut counts: BTreeMap<(StateId, Move), usize> = BTreeMap::new();
            for entry in row {
                *counts.entry(*entry).or_default() += 1;
            }
            // Ties resolve to the smallest output so serialization is stable.
            let default = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(k, _)| *k)
                .expect("row is non-empty");
            for (mask, entry) in row.iter().enumerate() {
                if *entry != default {
                    out.push_str(&format!(
                        "delta {} {{{}}} -> {} {}\n",
                        self.label(q),
                        self.set_text(StateSet(mask as u32)),
                        self.label(entry.0),
                        entry.1.token()
                    ));
                }
            }
            out.push_str(&format!(
                "delta {} * -> {} {}\n",
                self.label(q),
                self.label(default.0),
                default.1.token()
            ));
        }
        out
    }
}

fn syntax(line: usize, token: &str, message: &str) -> AutomatonError {
    AutomatonError::Syntax {
        line,
        token: token.to_string(),
        message: message.to_string(),
    }
}

struct Rule {
    line: usize,
    state: String,
    /// `None` is the `*` wildcard.
    sensed: Option<Vec<String>>,
    target: String,
    mv: Move,
}

fn parse_rule(line_no: usize, rest: &str) -> Result<Rule, AutomatonError> {
    let (lhs, rhs) = rest
        .split_once("->")
        .ok_or_else(|| syntax(line_no, rest.trim(), "expected `->`"))?;
    let lhs = lhs.trim();
    let (state, set_spec) = lhs
        .split_once(char::is_whitespace)
        .ok_or_else(|| syntax(line_no, lhs, "expected `<state> <set>`"))?;
    let set_spec = set_spec.trim();
    let sensed = if set_spec == "*" {
        None
    } else if let Some(inner) = set_spec.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
        let members: Vec<String> = inner
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        Some(members)
    } else {
        return Err(syntax(line_no, set_spec, "expected `*` or `{...}`"));
    };
    let mut rhs_tokens = rhs.split_whitespace();
    let target = rhs_tokens
        .next()
        .ok_or_else(|| syntax(line_no, rhs.trim(), "missing target state"))?;
    let mv_tok = rhs_tokens
        .next()
        .ok_or_else(|| syntax(line_no, rhs.trim(), "missing move"))?;
    if let Some(extra) = rhs_tokens.next() {
        return Err(syntax(line_no, extra, "unexpected token"));
    }
    let mv = Move::parse_token(mv_tok)
        .ok_or_else(|| syntax(line_no, mv_tok, "move must be one of 0 N E S W"))?;
    Ok(Rule {
        line: line_no,
        state: state.to_string(),
        sensed,
        target: target.to_string(),
        mv,
    })
}

/// Parses the line-oriented automaton format.
///
/// ```text
/// states: q0 q1
/// agents: q0 q0 q1
/// order: q1 q0            # optional
/// delta q0 {q1} -> q1 N
/// delta q0 * -> q0 E
/// delta q1 * -> q1 0
/// ```
pub fn parse_automaton(text: &str) -> Result<Automaton, AutomatonError> {
    let mut labels: Option<(usize, Vec<String>)> = None;
    let mut agents: Option<(usize, Vec<String>)> = None;
    let mut order: Option<(usize, Vec<String>)> = None;
    let mut rules = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let header = |slot: &mut Option<(usize, Vec<String>)>, rest: &str, key: &str| {
            if slot.is_some() {
                return Err(syntax(line_no, key, "repeated header"));
            }
            *slot = Some((
                line_no,
                rest.split_whitespace().map(str::to_string).collect(),
            ));
            Ok(())
        };
        if let Some(rest) = line.strip_prefix("states:") {
            header(&mut labels, rest, "states:")?;
        } else if let Some(rest) = line.strip_prefix("agents:") {
            header(&mut agents, rest, "agents:")?;
        } else if let Some(rest) = line.strip_prefix("order:") {
            header(&mut order, rest, "order:")?;
        } else if let Some(rest) = line.strip_prefix("delta") {
            if !rest.starts_with(char::is_whitespace) {
                return Err(syntax(line_no, line, "unknown directive"));
            }
            rules.push(parse_rule(line_no, rest)?);
        } else {
            let tok = line.split_whitespace().next().unwrap_or(line);
            return Err(syntax(line_no, tok, "unknown directive"));
        }
    }

    let (states_line, labels) = labels.ok_or(AutomatonError::NoStates)?;
    if labels.is_empty() {
        return Err(AutomatonError::NoStates);
    }
    if labels.len() > MAX_STATES {
        return Err(AutomatonError::TooManyStates(labels.len()));
    }
    let mut index: HashMap<&str, StateId> = HashMap::new();
    for (i, l) in labels.iter().enumerate() {
        if l.contains(['{', '}', ',', '*']) || l == "->" {
            return Err(syntax(states_line, l, "invalid state label"));
        }
        if index.insert(l.as_str(), StateId(i as u16)).is_some() {
            return Err(AutomatonError::DuplicateState {
                line: states_line,
                label: l.clone(),
            });
        }
    }
    let lookup = |line: usize, label: &str| {
        index
            .get(label)
            .copied()
            .ok_or_else(|| AutomatonError::UndeclaredState {
                line,
                label: label.to_string(),
            })
    };

    let n = labels.len();
    let mut specific: Vec<Option<(StateId, Move)>> = vec![None; n << n];
    let mut defaults: Vec<Option<(StateId, Move)>> = vec![None; n];
    for rule in &rules {
        let q = lookup(rule.line, &rule.state)?;
        let target = lookup(rule.line, &rule.target)?;
        let conflict = || AutomatonError::ConflictingRule {
            line: rule.line,
            label: rule.state.clone(),
        };
        match &rule.sensed {
            None => {
                if defaults[q.index()].replace((target, rule.mv)).is_some() {
                    return Err(conflict());
                }
            }
            Some(members) => {
                let mut mask = StateSet::EMPTY;
                for m in members {
                    mask.insert(lookup(rule.line, m)?);
                }
                let slot = &mut specific[(q.index() << n) | mask.0 as usize];
                if slot.replace((target, rule.mv)).is_some() {
                    return Err(conflict());
                }
            }
        }
    }

    let mut table = Vec::with_capacity(n << n);
    for q in 0..n {
        for mask in 0..(1usize << n) {
            let entry = specific[(q << n) | mask].or(defaults[q]).ok_or_else(|| {
                AutomatonError::MissingDefault {
                    label: labels[q].clone(),
                    sensed: StateSet(mask as u32)
                        .iter()
                        .map(|s| labels[s.index()].as_str())
                        .collect::<Vec<_>>()
                        .join(","),
                }
            })?;
            table.push(entry);
        }
    }

    let (agents_line, agent_labels) = agents.ok_or(AutomatonError::NoAgents)?;
    if agent_labels.is_empty() {
        return Err(AutomatonError::NoAgents);
    }
    let initial = agent_labels
        .iter()
        .map(|l| lookup(agents_line, l))
        .collect::<Result<Vec<_>, _>>()?;

    let automaton = Automaton::from_table(labels.clone(), table, initial)?;
    match order {
        None => Ok(automaton),
        Some((line, order_labels)) => {
            let order = order_labels
                .iter()
                .map(|l| lookup(line, l))
                .collect::<Result<Vec<_>, _>>()?;
            automaton.with_order(&order)
        }
    }
}

/// Source text of the built-in automata.
pub const BUILTINS: [(&str, &str); 3] = [
    (
        "east1",
        "# one state, always east\nstates: e\nagents: e e e\ndelta e * -> e E\n",
    ),
    (
        "stay1",
        "# one state, never moves\nstates: s\nagents: s s s\ndelta s * -> s 0\n",
    ),
    (
        "zig2",
        "# north then east, travel vector (1,1) with period 2\nstates: z1 z2\nagents: z1 z1 z1\ndelta z1 * -> z2 N\ndelta z2 * -> z1 E\n",
    ),
];

/// Looks up a built-in automaton by name.
pub fn builtin(name: &str) -> Option<Automaton> {
    BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| parse_automaton(src).expect("built-in automata are valid"))
}

impl fmt::Display for Automaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
