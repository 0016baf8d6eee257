//! Finite-state agents on the integer grid under a semi-synchronous
//! scheduler: automata, world stepping, adversarial scheduling, trace
//! analysis, and a randomized corpus harness.

pub mod analysis;
pub mod automaton;
pub mod harness;
pub mod scheduler;
pub mod world;

pub use automaton::{builtin, parse_automaton, Automaton, AutomatonError, Move, StateId, StateSet};
pub use scheduler::{run, ScheduleError, ScheduleKind};
pub use world::{AgentId, AgentSet, CaseType, Cell, Configuration, Trace, TraceError};
