//! Seeded corpora of random automata and the checks run over their
//! adversarial traces.
//!
//! Corpora are drawn from xoshiro256** seeded through SplitMix64
//! (`Xoshiro256StarStar::seed_from_u64`). A uniform draw from `0..n` takes
//! 64-bit outputs `x` until `x < n * floor((2^64 - 1) / n)` and returns
//! `x % n`. Each automaton consumes, in order: its state count
//! `1 + draw(max_states)`; for every state `q` and every sensed subset in
//! increasing bitmask order, the next state `draw(N)` then the move code
//! `draw(5)`; and finally one initial state `draw(N)` per agent.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{
    classify_meeting_pairs, dominant_slope, find_q_recurrence_in, first_time_spread, fit_band,
    meeting_sequence, pair_start_distance, travel_gap_bound, travel_gap_excesses,
    verify_periodic_displacement, AnalysisError, MeetingPair, ModBase, ModFrame, PairKind,
    QRecurrence, Slope,
};
use crate::automaton::{Automaton, AutomatonError, Move, StateId, MAX_STATES};
use crate::scheduler::{run_adversarial, simulate_solo, solo_bound, ScheduleError};
use crate::world::{manhattan_distance, AgentId, CaseType, SubscheduleRecord, Trace, MAX_AGENTS};

pub const MAX_CORPUS_STATES: usize = 6;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("max_states must be in 1..={MAX_CORPUS_STATES}, got {0}")]
    MaxStates(usize),
    #[error("n_agents must be in 1..={MAX_AGENTS}, got {0}")]
    Agents(usize),
    #[error("trace has no subschedule boundaries")]
    NoBoundaries,
    #[error("checkpoints must be non-empty and strictly increasing")]
    Checkpoints,
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorpusParams {
    pub seed: u64,
    pub count: usize,
    pub max_states: usize,
    pub n_agents: usize,
}

impl CorpusParams {
    pub fn new(seed: u64, count: usize, max_states: usize) -> Self {
        CorpusParams {
            seed,
            count,
            max_states,
            n_agents: 3,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.count == 0 {
            return Err(HarnessError::ZeroCount);
        }
        if !(1..=MAX_CORPUS_STATES).contains(&self.max_states) {
            return Err(HarnessError::MaxStates(self.max_states));
        }
        if !(1..=MAX_AGENTS).contains(&self.n_agents) {
            return Err(HarnessError::Agents(self.n_agents));
        }
        Ok(())
    }
}

/// Unbiased draw from `0..n` by rejection.
pub fn uniform<R: Rng>(rng: &mut R, n: u64) -> u64 {
    assert!(n > 0);
    let zone = n * (u64::MAX / n);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % n;
        }
    }
}

/// One random automaton in the corpus draw order.
pub fn random_automaton<R: Rng>(
    rng: &mut R,
    max_states: usize,
    n_agents: usize,
) -> Result<Automaton, HarnessError> {
    debug_assert!(max_states <= MAX_STATES);
    let n = 1 + uniform(rng, max_states as u64) as usize;
    let mut table = Vec::with_capacity(n << n);
    for _ in 0..(n << n) {
        let next = StateId(uniform(rng, n as u64) as u16);
        let mv = Move::from_code(uniform(rng, 5) as u8).expect("codes 0..5 are moves");
        table.push((next, mv));
    }
    let initial = (0..n_agents)
        .map(|_| StateId(uniform(rng, n as u64) as u16))
        .collect();
    let labels = (0..n).map(|i| format!("q{i}")).collect();
    Ok(Automaton::from_table(labels, table, initial)?)
}

pub fn generate_corpus(p: &CorpusParams) -> Result<Vec<Automaton>, HarnessError> {
    p.validate()?;
    let mut rng = Xoshiro256StarStar::seed_from_u64(p.seed);
    (0..p.count)
        .map(|_| random_automaton(&mut rng, p.max_states, p.n_agents))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundViolation {
    Type2Length { len: u64, bound: u64 },
    Type1Length { len: u64, distance: u64, bound: u64 },
    StayRun { at: u64, len: u64, bound: u64 },
    Empty,
}

impl fmt::Display for BoundViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundViolation::Type2Length { len, bound } => {
                write!(f, "type-2 length {len} > {bound}")
            }
            BoundViolation::Type1Length {
                len,
                distance,
                bound,
            } => {
                write!(f, "type-1 length {len} > {bound} (D = {distance})")
            }
            BoundViolation::StayRun { at, len, bound } => {
                write!(f, "stay run of {len} from t={at} > {bound}")
            }
            BoundViolation::Empty => f.write_str("empty subschedule"),
        }
    }
}

/// A type-1 subschedule measured against its bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Type1Bound {
    pub len: u64,
    pub distance: u64,
    pub bound: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LemmaReport {
    /// Subschedule counts for types 1, 2, 3.
    pub counts: [usize; 3],
    pub max_type2_len: u64,
    pub type1: Vec<Type1Bound>,
    /// Longest stay run per agent.
    pub stay_run_max: Vec<u64>,
    pub violations: Vec<(SubscheduleRecord, BoundViolation)>,
}

impl LemmaReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_lemma_bounds(tr: &Trace, a: &Automaton) -> Result<LemmaReport, HarnessError> {
    if tr.records().is_empty() {
        return Err(HarnessError::NoBoundaries);
    }
    let n = a.num_states() as u64;
    let mut rep = LemmaReport {
        stay_run_max: vec![0; tr.last().num_agents()],
        ..Default::default()
    };
    for r in tr.records() {
        rep.counts[r.case.code() as usize - 1] += 1;
        let len = r.len();
        if r.is_empty() {
            rep.violations.push((*r, BoundViolation::Empty));
        }
        match r.case {
            CaseType::Repeat => {
                rep.max_type2_len = rep.max_type2_len.max(len);
                if len > n {
                    rep.violations
                        .push((*r, BoundViolation::Type2Length { len, bound: n }));
                }
            }
            CaseType::Meet => {
                let distance = manhattan_distance(r.start_cell, r.end_cell);
                let bound = n * (2 * n + 1 + distance);
                rep.type1.push(Type1Bound {
                    len,
                    distance,
                    bound,
                });
                if len > bound {
                    rep.violations.push((
                        *r,
                        BoundViolation::Type1Length {
                            len,
                            distance,
                            bound,
                        },
                    ));
                }
            }
            CaseType::Escape => {}
        }
        let mut run = 0;
        let mut run_start = r.start;
        for t in r.start..r.end {
            let (Some(c0), Some(c1)) = (tr.snapshot(t), tr.snapshot(t + 1)) else {
                break;
            };
            if c0.cell(r.agent) == c1.cell(r.agent) {
                if run == 0 {
                    run_start = t;
                }
                run += 1;
                if run == n + 1 {
                    rep.violations.push((
                        *r,
                        BoundViolation::StayRun {
                            at: run_start,
                            len: run,
                            bound: n,
                        },
                    ));
                }
            } else {
                run = 0;
            }
            let slot = &mut rep.stay_run_max[r.agent];
            *slot = (*slot).max(run);
        }
    }
    Ok(rep)
}

/// A meeting of an escaped agent after its type-3 subschedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EscapeViolation {
    pub agent: AgentId,
    pub escaped_at: u64,
    pub met_at: u64,
}

/// First later meeting of each type-3 subschedule's agent, if any.
pub fn check_escape_permanence(tr: &Trace) -> Vec<EscapeViolation> {
    let ms = meeting_sequence(tr);
    tr.records()
        .iter()
        .filter(|r| r.case == CaseType::Escape)
        .filter_map(|r| {
            (r.end + 1..ms.len() as u64)
                .find(|&t| ms[t as usize].contains(r.agent))
                .map(|met_at| EscapeViolation {
                    agent: r.agent,
                    escaped_at: r.end,
                    met_at,
                })
        })
        .collect()
}

/// Configurations and agents for which the solo classification failed.
pub fn check_solo_classification(tr: &Trace) -> Vec<(u64, AgentId, ScheduleError)> {
    let a = tr.automaton();
    let bound = solo_bound(a);
    let mut failures = Vec::new();
    for c in tr.snapshots() {
        for agent in 0..c.num_agents() {
            if let Err(e) = simulate_solo(c, a, agent, bound) {
                failures.push((c.time, agent, e));
            }
        }
    }
    failures
}

/// Which travel meeting pairs count as past the warm-up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Warmup {
    /// Pairs starting at or after the first time the largest pairwise
    /// distance exceeds `2N + 1`.
    #[default]
    FirstSpread,
    /// Pairs whose own start has largest pairwise distance above `2N + 1`.
    PairStart,
    /// Pairs starting at or after a fixed time.
    From(u64),
}

impl Warmup {
    fn split(self, tr: &Trace, pairs: Vec<MeetingPair>) -> (Vec<MeetingPair>, Vec<MeetingPair>) {
        let spread = 2 * tr.automaton().num_states() as u64 + 1;
        match self {
            Warmup::FirstSpread => {
                let from = first_time_spread(tr, spread).unwrap_or(u64::MAX);
                pairs.into_iter().partition(|p| p.t >= from)
            }
            Warmup::PairStart => pairs
                .into_iter()
                .partition(|p| pair_start_distance(tr, p) > spread),
            Warmup::From(from) => pairs.into_iter().partition(|p| p.t >= from),
        }
    }
}

/// Travel meeting pairs up to the escape rule, split into those past the
/// warm-up and those before it.
pub fn travel_pairs(tr: &Trace, warmup: Warmup) -> (Vec<MeetingPair>, Vec<MeetingPair>) {
    let limit = tr.escape_from.unwrap_or(u64::MAX);
    let pairs = classify_meeting_pairs(&meeting_sequence(tr))
        .into_iter()
        .filter(|p| p.is_travel() && p.u <= limit)
        .collect();
    warmup.split(tr, pairs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureFault {
    TravelerScheduled { times: usize },
    TravelerRecord { case: CaseType, end: u64 },
    SourceScheduled { times: usize },
    SourceRecord { case: CaseType },
    DestinationScheduled { times: usize },
    DestinationRecord { case: CaseType },
}

impl fmt::Display for StructureFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureFault::TravelerScheduled { times } => {
                write!(f, "traveling agent scheduled {times} times")
            }
            StructureFault::TravelerRecord { case, end } => {
                write!(
                    f,
                    "traveling agent record is type {} ending at {end}",
                    case.code()
                )
            }
            StructureFault::SourceScheduled { times } => {
                write!(f, "source scheduled {times} times")
            }
            StructureFault::SourceRecord { case } => {
                write!(f, "source record is type {}", case.code())
            }
            StructureFault::DestinationScheduled { times } => {
                write!(f, "destination scheduled {times} times")
            }
            StructureFault::DestinationRecord { case } => {
                write!(f, "destination record is type {}", case.code())
            }
        }
    }
}

/// Structural faults of one travel meeting pair; empty when it conforms.
pub fn pair_structure(tr: &Trace, p: &MeetingPair) -> Vec<StructureFault> {
    let PairKind::Travel {
        traveling,
        source,
        destination,
    } = p.kind
    else {
        return Vec::new();
    };
    let inside = |agent: AgentId| -> Vec<&SubscheduleRecord> {
        tr.records()
            .iter()
            .filter(|r| r.agent == agent && r.start < p.u && r.end > p.t)
            .collect()
    };
    let mut faults = Vec::new();
    let trav = inside(traveling);
    if trav.len() != 1 {
        faults.push(StructureFault::TravelerScheduled { times: trav.len() });
    }
    if let Some(r) = trav
        .iter()
        .find(|r| r.case != CaseType::Meet || r.end != p.u)
    {
        faults.push(StructureFault::TravelerRecord {
            case: r.case,
            end: r.end,
        });
    }
    for (agent, is_source) in [(source, true), (destination, false)] {
        let recs = inside(agent);
        if recs.len() > 1 {
            faults.push(if is_source {
                StructureFault::SourceScheduled { times: recs.len() }
            } else {
                StructureFault::DestinationScheduled { times: recs.len() }
            });
        }
        if let Some(r) = recs.iter().find(|r| r.case != CaseType::Repeat) {
            faults.push(if is_source {
                StructureFault::SourceRecord { case: r.case }
            } else {
                StructureFault::DestinationRecord { case: r.case }
            });
        }
    }
    faults
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StructureReport {
    pub checked: usize,
    pub violations: Vec<(MeetingPair, StructureFault)>,
    /// Faults of pairs before the warm-up; reported, not asserted.
    pub pre_warmup: Vec<(MeetingPair, StructureFault)>,
}

pub fn check_travel_structure(tr: &Trace, warmup: Warmup) -> StructureReport {
    let (counted, early) = travel_pairs(tr, warmup);
    let faults = |pairs: &[MeetingPair]| -> Vec<(MeetingPair, StructureFault)> {
        pairs
            .iter()
            .flat_map(|p| pair_structure(tr, p).into_iter().map(move |f| (*p, f)))
            .collect()
    };
    StructureReport {
        checked: counted.len(),
        violations: faults(&counted),
        pre_warmup: faults(&early),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfinementOptions {
    pub slope: Option<Slope>,
    /// Modulus in normalized coordinates; needs `slope` to be meaningful.
    pub base: Option<ModBase>,
    pub warmup: Warmup,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfinementReport {
    pub horizons: Vec<u64>,
    pub slope: Slope,
    pub band_widths: Vec<f64>,
    pub frame: Option<ModFrame>,
    pub travel_pairs: usize,
    pub q_recurrence: Option<QRecurrence>,
    /// `None` when no recurrence was found or the trace ends too early.
    pub periodic_displacement_verified: Option<bool>,
}

fn check_horizons(horizons: &[u64]) -> Result<(), HarnessError> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Checkpoints);
    }
    Ok(())
}

/// Band widths of the explored set at each checkpoint and the Q-tuple
/// recurrence check, over an existing trace.
pub fn analyze_confinement(
    tr: &Trace,
    horizons: &[u64],
    opts: &ConfinementOptions,
) -> Result<ConfinementReport, HarnessError> {
    check_horizons(horizons)?;
    let slope = opts.slope.unwrap_or_else(|| dominant_slope(tr));
    let frame = match opts.base {
        Some(base) => Some(ModFrame::with_base(slope, base)?),
        None => match ModFrame::for_automaton(tr.automaton(), slope) {
            Ok(f) => Some(f),
            Err(e) if opts.slope.is_some() => return Err(e.into()),
            Err(_) => None,
        },
    };
    let band_widths = horizons
        .iter()
        .map(|&h| {
            let cells = tr.explored_until(h.min(tr.time()));
            fit_band(&cells, slope).map(|b| b.half_width)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (pairs, _) = travel_pairs(tr, opts.warmup);
    let (q_recurrence, periodic_displacement_verified) = match &frame {
        Some(frame) => {
            let rec = find_q_recurrence_in(tr, frame, &pairs);
            let verified = rec
                .as_ref()
                .and_then(|r| verify_periodic_displacement(tr, frame, &pairs, r));
            (rec, verified)
        }
        None => (None, None),
    };
    Ok(ConfinementReport {
        horizons: horizons.to_vec(),
        slope,
        band_widths,
        frame,
        travel_pairs: pairs.len(),
        q_recurrence,
        periodic_displacement_verified,
    })
}

/// Runs the adversarial schedule to the last horizon and analyzes it.
pub fn confinement_experiment(
    a: Arc<Automaton>,
    horizons: &[u64],
) -> Result<ConfinementReport, HarnessError> {
    check_horizons(horizons)?;
    let tr = run_adversarial(a, *horizons.last().unwrap())?;
    analyze_confinement(&tr, horizons, &ConfinementOptions::default())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryOptions {
    pub horizon: u64,
    pub checkpoints: Vec<u64>,
    pub warmup: Warmup,
    /// Classify every (configuration, agent) of the trace.
    pub check_solo: bool,
}

impl EntryOptions {
    pub fn new(horizon: u64) -> Self {
        EntryOptions {
            horizon,
            checkpoints: default_checkpoints(horizon),
            warmup: Warmup::default(),
            check_solo: true,
        }
    }
}

/// Powers of ten below `horizon`, then `horizon` itself.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut v: Vec<u64> = std::iter::successors(Some(100u64), |h| h.checked_mul(10))
        .take_while(|&h| h < horizon)
        .collect();
    v.push(horizon);
    v
}

#[derive(Clone, Debug)]
pub struct EntryReport {
    pub index: usize,
    pub automaton: Arc<Automaton>,
    pub steps: u64,
    pub escape_from: Option<u64>,
    pub explored: usize,
    pub lemma: LemmaReport,
    pub escape: Vec<EscapeViolation>,
    pub solo_failures: Vec<(u64, AgentId, ScheduleError)>,
    pub structure: StructureReport,
    pub gap_excesses: Vec<(u64, u64)>,
    pub confinement: ConfinementReport,
}

impl EntryReport {
    pub fn hard_violations(&self) -> usize {
        self.lemma.violations.len() + self.escape.len()
    }

    pub fn falsified(&self) -> bool {
        self.confinement.periodic_displacement_verified == Some(false)
    }
}

pub fn run_entry(
    index: usize,
    a: Arc<Automaton>,
    opts: &EntryOptions,
) -> Result<EntryReport, HarnessError> {
    let tr = run_adversarial(a.clone(), opts.horizon)?;
    let lemma = check_lemma_bounds(&tr, &a)?;
    let (counted, _) = travel_pairs(&tr, opts.warmup);
    Ok(EntryReport {
        index,
        steps: tr.time(),
        escape_from: tr.escape_from,
        explored: tr.explored().len(),
        lemma,
        escape: check_escape_permanence(&tr),
        solo_failures: if opts.check_solo {
            check_solo_classification(&tr)
        } else {
            Vec::new()
        },
        structure: check_travel_structure(&tr, opts.warmup),
        gap_excesses: travel_gap_excesses(&a, &counted),
        confinement: analyze_confinement(
            &tr,
            &opts.checkpoints,
            &ConfinementOptions {
                warmup: opts.warmup,
                ..Default::default()
            },
        )?,
        automaton: a,
    })
}

#[derive(Debug)]
pub struct CorpusReport {
    pub params: CorpusParams,
    pub horizon: u64,
    pub entries: Vec<Result<EntryReport, HarnessError>>,
}

/// Runs every corpus entry in parallel; results are in corpus order.
pub fn run_corpus(p: &CorpusParams, opts: &EntryOptions) -> Result<CorpusReport, HarnessError> {
    let corpus = generate_corpus(p)?;
    let entries = corpus
        .into_par_iter()
        .enumerate()
        .map(|(i, a)| run_entry(i, Arc::new(a), opts))
        .collect();
    Ok(CorpusReport {
        params: *p,
        horizon: opts.horizon,
        entries,
    })
}

/// Totals across a corpus run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Totals {
    pub entries: usize,
    pub errors: usize,
    pub subschedules: [usize; 3],
    pub lemma_violations: usize,
    pub escape_violations: usize,
    pub solo_failures: usize,
    pub travel_pairs_checked: usize,
    pub structure_violations: usize,
    pub structure_pre_warmup: usize,
    pub gap_excesses: usize,
    pub recurrences: usize,
    pub verified: usize,
    pub falsified: usize,
    pub escaped: usize,
}

impl CorpusReport {
    pub fn totals(&self) -> Totals {
        let mut t = Totals {
            entries: self.entries.len(),
            ..Default::default()
        };
        for e in &self.entries {
            let Ok(e) = e else {
                t.errors += 1;
                continue;
            };
            for (sum, c) in t.subschedules.iter_mut().zip(e.lemma.counts) {
                *sum += c;
            }
            t.lemma_violations += e.lemma.violations.len();
            t.escape_violations += e.escape.len();
            t.solo_failures += e.solo_failures.len();
            t.travel_pairs_checked += e.structure.checked;
            t.structure_violations += e.structure.violations.len();
            t.structure_pre_warmup += e.structure.pre_warmup.len();
            t.gap_excesses += e.gap_excesses.len();
            t.escaped += e.escape_from.is_some() as usize;
            if e.confinement.q_recurrence.is_some() {
                t.recurrences += 1;
            }
            match e.confinement.periodic_displacement_verified {
                Some(true) => t.verified += 1,
                Some(false) => t.falsified += 1,
                None => {}
            }
        }
        t
    }

    /// Lemma-bound and escape-permanence violations, plus entries that
    /// failed to run.
    pub fn hard_violations(&self) -> usize {
        let t = self.totals();
        t.lemma_violations + t.escape_violations + t.errors
    }

    pub fn summary_text(&self) -> String {
        let t = self.totals();
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "seed {}", p.seed);
        let _ = writeln!(s, "count {}", p.count);
        let _ = writeln!(s, "max_states {}", p.max_states);
        let _ = writeln!(s, "agents {}", p.n_agents);
        let _ = writeln!(s, "horizon {}", self.horizon);
        let _ = writeln!(s, "entries {} errors {}", t.entries, t.errors);
        let _ = writeln!(
            s,
            "subschedules type1 {} type2 {} type3 {}",
            t.subschedules[0], t.subschedules[1], t.subschedules[2]
        );
        let _ = writeln!(s, "escaped_entries {}", t.escaped);
        let _ = writeln!(s, "lemma_violations {}", t.lemma_violations);
        let _ = writeln!(s, "escape_violations {}", t.escape_violations);
        let _ = writeln!(s, "solo_failures {}", t.solo_failures);
        let _ = writeln!(s, "travel_pairs_checked {}", t.travel_pairs_checked);
        let _ = writeln!(s, "structure_violations {}", t.structure_violations);
        let _ = writeln!(s, "structure_pre_warmup {}", t.structure_pre_warmup);
        let _ = writeln!(s, "travel_gap_excesses {}", t.gap_excesses);
        let _ = writeln!(s, "q_recurrences {}", t.recurrences);
        let _ = writeln!(
            s,
            "periodic_displacement verified {} falsified {}",
            t.verified, t.falsified
        );
        let _ = writeln!(s, "hard_violations {}", self.hard_violations());
        for e in &self.entries {
            match e {
                Err(err) => {
                    let _ = writeln!(s, "error {err}");
                }
                Ok(e) => {
                    for (r, v) in &e.lemma.violations {
                        let _ = writeln!(
                            s,
                            "violation entry {} agent {} t={}..{}: {v}",
                            e.index, r.agent, r.start, r.end
                        );
                    }
                    for v in &e.escape {
                        let _ = writeln!(
                            s,
                            "violation entry {} agent {} escaped at {} met at {}",
                            e.index, v.agent, v.escaped_at, v.met_at
                        );
                    }
                }
            }
        }
        s
    }
}

fn fmt_slope_frame(c: &ConfinementReport) -> String {
    match &c.frame {
        Some(f) => format!("{} base {}", c.slope, f.base),
        None => format!("{} base none", c.slope),
    }
}

fn fmt_verified(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "true",
        Some(false) => "false",
        None => "n/a",
    }
}

pub fn confinement_text(c: &ConfinementReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "slope {}", fmt_slope_frame(c));
    for (h, w) in c.horizons.iter().zip(&c.band_widths) {
        let _ = writeln!(s, "band {h} {w:.6}");
    }
    let _ = writeln!(s, "travel_pairs {}", c.travel_pairs);
    match &c.q_recurrence {
        Some(r) => {
            let _ = writeln!(
                s,
                "q_recurrence k {} h {} t_k {} t_h {} displacement {} {}",
                r.k, r.h, r.k_time, r.h_time, r.displacement.0, r.displacement.1
            );
        }
        None => s.push_str("q_recurrence none\n"),
    }
    let _ = writeln!(
        s,
        "periodic_displacement_verified {}",
        fmt_verified(c.periodic_displacement_verified)
    );
    s
}

impl EntryReport {
    pub fn text(&self) -> String {
        let mut s = String::new();
        let l = &self.lemma;
        let _ = writeln!(s, "entry {}", self.index);
        let _ = writeln!(s, "states {}", self.automaton.num_states());
        let _ = writeln!(s, "steps {}", self.steps);
        let _ = writeln!(
            s,
            "subschedules type1 {} type2 {} type3 {}",
            l.counts[0], l.counts[1], l.counts[2]
        );
        match self.escape_from {
            Some(t) => {
                let _ = writeln!(s, "escape_from {t}");
            }
            None => s.push_str("escape_from none\n"),
        }
        let _ = writeln!(s, "explored {}", self.explored);
        let _ = writeln!(s, "max_type2_len {}", l.max_type2_len);
        if let Some(worst) = l.type1.iter().max_by_key(|b| (b.len, b.distance)) {
            let _ = writeln!(
                s,
                "max_type1 len {} d {} bound {}",
                worst.len, worst.distance, worst.bound
            );
        }
        let stays: Vec<String> = l.stay_run_max.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "stay_run_max {}", stays.join(" "));
        let _ = writeln!(s, "lemma_violations {}", l.violations.len());
        for (r, v) in &l.violations {
            let _ = writeln!(s, "  agent {} t={}..{}: {v}", r.agent, r.start, r.end);
        }
        let _ = writeln!(s, "escape_violations {}", self.escape.len());
        let _ = writeln!(s, "solo_failures {}", self.solo_failures.len());
        let st = &self.structure;
        let _ = writeln!(
            s,
            "travel_structure checked {} violations {} pre_warmup {}",
            st.checked,
            st.violations.len(),
            st.pre_warmup.len()
        );
        for (p, f) in st.violations.iter().chain(&st.pre_warmup) {
            let _ = writeln!(s, "  pair {} {}: {f}", p.t, p.u);
        }
        let _ = writeln!(
            s,
            "travel_gap_bound {} excesses {}",
            travel_gap_bound(&self.automaton),
            self.gap_excesses.len()
        );
        s.push_str(&confinement_text(&self.confinement));
        s
    }
}

/// Entries grouped by how their run ended, for quick inspection.
pub fn outcome_histogram(report: &CorpusReport) -> BTreeMap<&'static str, usize> {
    let mut h = BTreeMap::new();
    for e in &report.entries {
        let key = match e {
            Err(_) => "error",
            Ok(e) if e.escape_from.is_some() => "escaped",
            Ok(_) => "bounded",
        };
        *h.entry(key).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{builtin, parse_automaton};
    use crate::world::{AgentState, Cell, Configuration};
    use smallvec::smallvec;

    #[test]
    fn corpus_is_deterministic_and_valid() {
        let p = CorpusParams::new(42, 10, 3);
        let a = generate_corpus(&p).unwrap();
        let b = generate_corpus(&p).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a, b);
        for aut in &a {
            assert!((1..=3).contains(&aut.num_states()));
            assert_eq!(aut.num_agents(), 3);
            assert_eq!(&parse_automaton(&aut.to_text()).unwrap(), aut);
        }
        let other = generate_corpus(&CorpusParams::new(43, 10, 3)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn corpus_param_errors() {
        assert!(matches!(
            generate_corpus(&CorpusParams::new(1, 0, 3)),
            Err(HarnessError::ZeroCount)
        ));
        assert!(matches!(
            generate_corpus(&CorpusParams::new(1, 1, 0)),
            Err(HarnessError::MaxStates(0))
        ));
        assert!(matches!(
            generate_corpus(&CorpusParams::new(1, 1, 7)),
            Err(HarnessError::MaxStates(7))
        ));
    }

    #[test]
    fn uniform_stays_in_range() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(7);
        let mut seen = [0usize; 5];
        for _ in 0..5000 {
            seen[uniform(&mut rng, 5) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800));
        assert_eq!(uniform(&mut rng, 1), 0);
    }

    #[test]
    fn lemma_bounds_on_builtins() {
        let stay = Arc::new(builtin("stay1").unwrap());
        let tr = run_adversarial(stay.clone(), 100).unwrap();
        let rep = check_lemma_bounds(&tr, &stay).unwrap();
        assert!(rep.ok());
        assert!(rep.type1.iter().all(|b| b.len == 1));
        assert_eq!(rep.counts, [100, 0, 0]);

        let east = Arc::new(builtin("east1").unwrap());
        let tr = run_adversarial(east.clone(), 100).unwrap();
        let rep = check_lemma_bounds(&tr, &east).unwrap();
        assert!(rep.ok());
        assert_eq!(rep.counts[2], 1);
        assert!(check_escape_permanence(&tr).is_empty());
    }

    #[test]
    fn lemma_bounds_need_records() {
        let stay = Arc::new(builtin("stay1").unwrap());
        let tr = Trace::new(stay.clone());
        assert!(matches!(
            check_lemma_bounds(&tr, &stay),
            Err(HarnessError::NoBoundaries)
        ));
    }

    #[test]
    fn fabricated_type2_violation() {
        let stay = Arc::new(
            builtin("stay1")
                .unwrap()
                .with_agents(vec![StateId(0)])
                .unwrap(),
        );
        let mut tr = Trace::new(stay.clone());
        tr.step(&[0]).unwrap();
        tr.step(&[0]).unwrap();
        tr.push_record(SubscheduleRecord {
            agent: 0,
            start: 0,
            end: 2,
            case: CaseType::Repeat,
            start_cell: Cell::ORIGIN,
            end_cell: Cell::ORIGIN,
        });
        let rep = check_lemma_bounds(&tr, &stay).unwrap();
        // Two steps in place also overrun the stay bound.
        assert_eq!(
            rep.violations
                .iter()
                .filter(|(_, v)| matches!(v, BoundViolation::Type2Length { .. }))
                .count(),
            1
        );
        assert!(rep
            .violations
            .iter()
            .any(|(_, v)| matches!(v, BoundViolation::StayRun { len: 2, .. })));
    }

    #[test]
    fn confinement_of_builtins() {
        for name in ["stay1", "east1"] {
            let a = Arc::new(builtin(name).unwrap());
            let rep = confinement_experiment(a, &[100, 1000]).unwrap();
            assert_eq!(rep.band_widths, vec![0.0, 0.0], "{name}");
            assert_eq!(rep.slope, Slope::zero());
            assert_eq!(rep.q_recurrence, None);
            assert_eq!(rep.travel_pairs, 0);
        }
        let a = Arc::new(builtin("east1").unwrap());
        assert!(matches!(
            confinement_experiment(a.clone(), &[]),
            Err(HarnessError::Checkpoints)
        ));
        assert!(matches!(
            confinement_experiment(a, &[10, 10]),
            Err(HarnessError::Checkpoints)
        ));
    }

    /// Three agents whose travel-pair Q-tuples alternate with period two
    /// while the whole team drifts by (3,3) per cycle.
    fn synthetic_cycle(cycles: i64) -> Trace {
        let a = Arc::new(parse_automaton("states: q\nagents: q q q\ndelta q * -> q 0\n").unwrap());
        let q = StateId(0);
        let conf = |time: u64, cells: [(i64, i64); 3]| Configuration {
            time,
            agents: cells
                .iter()
                .map(|&(x, y)| AgentState {
                    state: q,
                    cell: Cell::new(x, y),
                })
                .collect(),
        };
        // Each half-cycle: pair start, gap, pair end.
        let mut snaps = Vec::new();
        for c in 0..=cycles {
            let (dx, dy) = (3 * c, 3 * c);
            let at = |x: i64, y: i64| (x + dx, y + dy);
            snaps.push([at(0, 0), at(0, 0), at(9, 0)]);
            snaps.push([at(0, 0), at(1, 0), at(9, 0)]);
            snaps.push([at(0, 0), at(9, 0), at(9, 0)]);
            snaps.push([at(0, 0), at(9, 1), at(9, 0)]);
        }
        // Close the last pair with the next cycle's start.
        snaps.truncate(4 * cycles as usize + 1);
        let mut tr = Trace::from_start(a, conf(0, snaps[0]));
        for (i, cells) in snaps.iter().enumerate().skip(1) {
            tr.push(smallvec![1], conf(i as u64, *cells));
        }
        tr
    }

    #[test]
    fn synthetic_recurrence_verifies() {
        let tr = synthetic_cycle(3);
        let opts = ConfinementOptions {
            slope: Some(Slope::zero()),
            base: Some(ModBase::new(1, 0).unwrap()),
            warmup: Warmup::From(0),
        };
        let rep = analyze_confinement(&tr, &[tr.time()], &opts).unwrap();
        let rec = rep.q_recurrence.unwrap();
        assert_eq!((rec.k, rec.h), (0, 2));
        assert_eq!(rec.displacement, (3, 3));
        assert_eq!(rep.periodic_displacement_verified, Some(true));
        let short = synthetic_cycle(2);
        let rep = analyze_confinement(&short, &[short.time()], &opts).unwrap();
        assert!(rep.q_recurrence.is_some());
        assert_eq!(rep.periodic_displacement_verified, None);
    }

    #[test]
    fn entry_report_runs() {
        let a = Arc::new(builtin("zig2").unwrap());
        let rep = run_entry(0, a, &EntryOptions::new(1000)).unwrap();
        assert_eq!(rep.hard_violations(), 0);
        assert!(rep.solo_failures.is_empty());
        assert!(rep.text().contains("lemma_violations 0\n"));
        assert_eq!(default_checkpoints(1000), vec![100, 1000]);
        assert_eq!(default_checkpoints(50), vec![50]);
        assert_eq!(default_checkpoints(100000), vec![100, 1000, 10000, 100000]);
    }
}
