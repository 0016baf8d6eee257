//! Derived objects over automata and traces: travel vectors, meeting pairs,
//! slopes and the modulo reduction of relative positions, Q-tuples and
//! their recurrences, and band widths.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use thiserror::Error;

use crate::automaton::{Automaton, StateId, StateSet};
use crate::world::{AgentId, AgentSet, CaseType, Cell, Trace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("no travel vector has slope {0}")]
    EmptySlopeClass(Slope),
    #[error("slope {0} must be normalized to a finite, non-negative value first")]
    UnnormalizedSlope(Slope),
    #[error("modulus x-component must be positive, got {0}")]
    NonPositiveBase(i64),
    #[error("band width of an empty cell set")]
    EmptyCells,
    #[error("base {base} does not have slope {slope} after normalization")]
    InconsistentBase { base: ModBase, slope: Slope },
    #[error("time {0} is beyond the end of the trace")]
    OutOfRange(u64),
    #[error("no activation follows time {0}")]
    NoActivation(u64),
}

/// Displacement and period of a solo agent's eventually periodic walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TravelVector {
    pub dx: i64,
    pub dy: i64,
    pub period: u64,
}

impl TravelVector {
    pub fn vector(&self) -> (i64, i64) {
        (self.dx, self.dy)
    }

    pub fn slope(&self) -> Slope {
        Slope::of(self.dx, self.dy)
    }
}

impl fmt::Display for TravelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}) period {}", self.dx, self.dy, self.period)
    }
}

/// Runs a single agent from `q0` on an empty grid until its first state
/// repetition. Returns `None` when the displacement over the period is zero.
pub fn detect_travel_vector(a: &Automaton, q0: StateId) -> Option<TravelVector> {
    let mut seen: Vec<Option<(u64, i64, i64)>> = vec![None; a.num_states()];
    let (mut q, mut x, mut y, mut t) = (q0, 0i64, 0i64, 0u64);
    loop {
        if let Some((t0, x0, y0)) = seen[q.index()] {
            let (dx, dy) = (x - x0, y - y0);
            return ((dx, dy) != (0, 0)).then_some(TravelVector {
                dx,
                dy,
                period: t - t0,
            });
        }
        seen[q.index()] = Some((t, x, y));
        let (next, mv) = a.step(q, StateSet::EMPTY);
        let (ox, oy) = mv.offset();
        q = next;
        x += ox;
        y += oy;
        t += 1;
    }
}

/// Travel vectors reachable from every starting state.
pub fn enumerate_travel_vectors(a: &Automaton) -> BTreeSet<TravelVector> {
    a.states()
        .filter_map(|q| detect_travel_vector(a, q))
        .collect()
}

/// Exact slope `dy/dx`, or vertical when `dx == 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slope {
    Finite(Ratio<i64>),
    Vertical,
}

impl Slope {
    pub fn of(dx: i64, dy: i64) -> Slope {
        if dx == 0 {
            Slope::Vertical
        } else {
            Slope::Finite(Ratio::new(dy, dx))
        }
    }

    pub fn zero() -> Slope {
        Slope::Finite(Ratio::from_integer(0))
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slope::Vertical => f.write_str("vertical"),
            Slope::Finite(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for Slope {
    type Err = String;

    /// Accepts `vertical`, an integer, or `p/q`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("vertical") || s == "inf" {
            return Ok(Slope::Vertical);
        }
        let bad = || format!("bad slope `{s}` (expected p/q, an integer, or vertical)");
        match s.split_once('/') {
            Some((p, q)) => {
                let p: i64 = p.trim().parse().map_err(|_| bad())?;
                let q: i64 = q.trim().parse().map_err(|_| bad())?;
                if q == 0 {
                    Ok(Slope::Vertical)
                } else {
                    Ok(Slope::Finite(Ratio::new(p, q)))
                }
            }
            None => Ok(Slope::Finite(Ratio::from_integer(
                s.parse().map_err(|_| bad())?,
            ))),
        }
    }
}

/// Coordinate reflection that maps a slope onto a finite, non-negative one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Identity,
    /// `(x, y) -> (-x, y)`, for negative slopes.
    MirrorX,
    /// `(x, y) -> (y, x)`, for vertical slopes.
    SwapAxes,
}

impl Orientation {
    pub fn for_slope(slope: Slope) -> (Orientation, Ratio<i64>) {
        match slope {
            Slope::Vertical => (Orientation::SwapAxes, Ratio::from_integer(0)),
            Slope::Finite(r) if r < Ratio::from_integer(0) => (Orientation::MirrorX, -r),
            Slope::Finite(r) => (Orientation::Identity, r),
        }
    }

    pub fn apply(self, (x, y): (i64, i64)) -> (i64, i64) {
        match self {
            Orientation::Identity => (x, y),
            Orientation::MirrorX => (-x, y),
            Orientation::SwapAxes => (y, x),
        }
    }
}

/// The modulus `(x, y)` with `x > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModBase {
    pub x: i64,
    pub y: i64,
}

impl ModBase {
    pub fn new(x: i64, y: i64) -> Result<Self, AnalysisError> {
        if x <= 0 {
            return Err(AnalysisError::NonPositiveBase(x));
        }
        Ok(ModBase { x, y })
    }
}

impl fmt::Display for ModBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// `x` is the lcm of `|dx|` over the vectors of slope `r`, and `y = r * x`.
/// `r` must already be finite and non-negative.
pub fn canonical_base(vectors: &[(i64, i64)], r: Slope) -> Result<ModBase, AnalysisError> {
    let ratio = match r {
        Slope::Finite(ratio) if ratio >= Ratio::from_integer(0) => ratio,
        other => return Err(AnalysisError::UnnormalizedSlope(other)),
    };
    let x = vectors
        .iter()
        .filter(|&&(dx, dy)| dx != 0 && Ratio::new(dy, dx) == ratio)
        .map(|&(dx, _)| dx.abs())
        .reduce(|acc, dx| acc.lcm(&dx))
        .ok_or(AnalysisError::EmptySlopeClass(r))?;
    let y = ratio * x;
    debug_assert!(y.is_integer());
    ModBase::new(x, y.to_integer())
}

/// `(w + b x, z + b y)` with `b` the smallest integer making the first
/// component non-negative; the first component lands in `[0, x)`.
pub fn mod_reduce((w, z): (i64, i64), base: ModBase) -> (i64, i64) {
    let b = -w.div_euclid(base.x);
    (w + b * base.x, z + b * base.y)
}

/// `(c2 - c1) mod base`.
pub fn ominus(c2: Cell, c1: Cell, base: ModBase) -> (i64, i64) {
    mod_reduce(c2.diff(c1), base)
}

/// Orientation plus modulus, for reducing relative positions of a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModFrame {
    pub slope: Slope,
    pub orientation: Orientation,
    pub base: ModBase,
}

impl ModFrame {
    /// Frame for `slope` over the automaton's solo travel vectors.
    pub fn for_automaton(a: &Automaton, slope: Slope) -> Result<ModFrame, AnalysisError> {
        let vectors: Vec<(i64, i64)> = enumerate_travel_vectors(a)
            .iter()
            .map(|tv| tv.vector())
            .collect();
        ModFrame::from_vectors(&vectors, slope)
    }

    pub fn from_vectors(vectors: &[(i64, i64)], slope: Slope) -> Result<ModFrame, AnalysisError> {
        let (orientation, r) = Orientation::for_slope(slope);
        let turned: Vec<(i64, i64)> = vectors.iter().map(|&v| orientation.apply(v)).collect();
        let base = canonical_base(&turned, Slope::Finite(r))
            .map_err(|_| AnalysisError::EmptySlopeClass(slope))?;
        Ok(ModFrame {
            slope,
            orientation,
            base,
        })
    }

    /// Frame with an explicit modulus, given in normalized coordinates.
    pub fn with_base(slope: Slope, base: ModBase) -> Result<ModFrame, AnalysisError> {
        let (orientation, r) = Orientation::for_slope(slope);
        if base.x <= 0 || Ratio::new(base.y, base.x) != r {
            return Err(AnalysisError::InconsistentBase { base, slope });
        }
        Ok(ModFrame {
            slope,
            orientation,
            base,
        })
    }

    /// `c2 ⊖ c1` in the normalized orientation.
    pub fn ominus(&self, c2: Cell, c1: Cell) -> (i64, i64) {
        mod_reduce(self.orientation.apply(c2.diff(c1)), self.base)
    }
}

/// `M_t` for every snapshot of the trace.
pub fn meeting_sequence(tr: &Trace) -> Vec<AgentSet> {
    tr.snapshots().iter().map(|c| c.meeting_set()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairKind {
    Plain,
    Travel {
        traveling: AgentId,
        source: AgentId,
        destination: AgentId,
    },
}

/// Consecutive non-empty meeting sets `(t, u)` with only empty sets between.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MeetingPair {
    pub t: u64,
    pub u: u64,
    pub kind: PairKind,
}

impl MeetingPair {
    pub fn is_travel(&self) -> bool {
        matches!(self.kind, PairKind::Travel { .. })
    }
}

pub fn classify_meeting_pairs(ms: &[AgentSet]) -> Vec<MeetingPair> {
    let nonempty: Vec<u64> = ms
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(t, _)| t as u64)
        .collect();
    nonempty
        .windows(2)
        .map(|w| {
            let (t, u) = (w[0], w[1]);
            let (mt, mu) = (ms[t as usize], ms[u as usize]);
            let both = mt.intersection(mu);
            // With more than three agents the two sets may be disjoint.
            let kind = if mt.len() == 2 && mu.len() == 2 && both.len() == 1 {
                let traveling = both.first().unwrap();
                PairKind::Travel {
                    traveling,
                    source: mt.difference(both).first().unwrap(),
                    destination: mu.difference(both).first().unwrap(),
                }
            } else {
                PairKind::Plain
            };
            MeetingPair { t, u, kind }
        })
        .collect()
}

/// States, reduced pairwise relative positions, next activation, and
/// meeting set at one point in time.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QTuple {
    pub states: Vec<StateId>,
    /// `c_i ⊖ c_j` for `i < j`, in lexicographic pair order.
    pub rel: Vec<(i64, i64)>,
    pub next: AgentSet,
    pub meeting: AgentSet,
}

pub fn q_tuple(tr: &Trace, t: u64, frame: &ModFrame) -> Result<QTuple, AnalysisError> {
    let snap = tr.snapshot(t).ok_or(AnalysisError::OutOfRange(t))?;
    let next = tr.activation(t).ok_or(AnalysisError::NoActivation(t))?;
    let n = snap.num_agents();
    let mut rel = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            rel.push(frame.ominus(snap.cell(i), snap.cell(j)));
        }
    }
    Ok(QTuple {
        states: snap.agents.iter().map(|s| s.state).collect(),
        rel,
        next: next.iter().copied().collect(),
        meeting: snap.meeting_set(),
    })
}

/// Two travel-pair start times with equal Q-tuples, an even number of
/// travel pairs apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QRecurrence {
    /// Indices into the list of travel pairs considered.
    pub k: usize,
    pub h: usize,
    pub k_time: u64,
    pub h_time: u64,
    /// Source agent's cell at `h_time` minus source agent's cell at `k_time`.
    pub displacement: (i64, i64),
}

/// Travel pairs starting at or after `warmup`, before any escape rule.
pub fn travel_pairs_after(tr: &Trace, warmup: u64) -> Vec<MeetingPair> {
    let limit = tr.escape_from.unwrap_or(u64::MAX);
    classify_meeting_pairs(&meeting_sequence(tr))
        .into_iter()
        .filter(|p| p.is_travel() && p.t >= warmup && p.u <= limit)
        .collect()
}

fn source_cell(tr: &Trace, p: &MeetingPair) -> Cell {
    match p.kind {
        PairKind::Travel { source, .. } => tr.snapshots()[p.t as usize].cell(source),
        PairKind::Plain => unreachable!("only travel pairs have a source"),
    }
}

/// Scans travel pairs after `warmup` for the first `k < h` (smallest `h`,
/// then smallest `k`) with `h - k` even and `Q_{t_k} == Q_{t_h}`.
pub fn find_q_recurrence(tr: &Trace, frame: &ModFrame, warmup: u64) -> Option<QRecurrence> {
    let pairs = travel_pairs_after(tr, warmup);
    find_q_recurrence_in(tr, frame, &pairs)
}

pub fn find_q_recurrence_in(
    tr: &Trace,
    frame: &ModFrame,
    pairs: &[MeetingPair],
) -> Option<QRecurrence> {
    let mut first: HashMap<(usize, QTuple), usize> = HashMap::new();
    for (h, p) in pairs.iter().enumerate() {
        let q = q_tuple(tr, p.t, frame).ok()?;
        match first.get(&(h % 2, q.clone())) {
            Some(&k) => {
                let kp = &pairs[k];
                return Some(QRecurrence {
                    k,
                    h,
                    k_time: kp.t,
                    h_time: p.t,
                    displacement: source_cell(tr, p).diff(source_cell(tr, kp)),
                });
            }
            None => {
                first.insert((h % 2, q), h);
            }
        }
    }
    None
}

/// Checks that the recurrence repeats once more: the pair `h + (h - k)`
/// exists, has the same Q-tuple, and its source sits `displacement` further
/// on. `None` when the trace is too short to tell.
pub fn verify_periodic_displacement(
    tr: &Trace,
    frame: &ModFrame,
    pairs: &[MeetingPair],
    rec: &QRecurrence,
) -> Option<bool> {
    let next = rec.h + (rec.h - rec.k);
    let np = pairs.get(next)?;
    let qk = q_tuple(tr, pairs[rec.k].t, frame).ok()?;
    let qn = q_tuple(tr, np.t, frame).ok()?;
    let moved = source_cell(tr, np).diff(source_cell(tr, &pairs[rec.h]));
    Some(qk == qn && moved == rec.displacement)
}

/// Band of a given slope fitted around a set of cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandSpec {
    pub slope: Slope,
    pub half_width: f64,
    /// A cell on one edge of the band.
    pub anchor: Cell,
    /// Spread of the integer projections onto the band normal.
    pub spread: i128,
    /// Squared length of the integer normal used for the projections.
    pub norm_sq: i128,
}

/// Integer normal `(a, b)` of a line with the given slope.
fn normal(slope: Slope) -> (i128, i128) {
    match slope {
        Slope::Vertical => (1, 0),
        Slope::Finite(r) => (-(*r.numer() as i128), *r.denom() as i128),
    }
}

/// Narrowest band of the given slope containing every cell.
pub fn fit_band<'a, I>(cells: I, slope: Slope) -> Result<BandSpec, AnalysisError>
where
    I: IntoIterator<Item = &'a Cell>,
{
    let (a, b) = normal(slope);
    let mut lo: Option<(i128, Cell)> = None;
    let mut hi: Option<i128> = None;
    for c in cells {
        let s = a * c.x as i128 + b * c.y as i128;
        if lo.is_none_or(|(l, lc)| s < l || (s == l && *c < lc)) {
            lo = Some((s, *c));
        }
        hi = Some(hi.map_or(s, |h| h.max(s)));
    }
    let (lo, anchor) = lo.ok_or(AnalysisError::EmptyCells)?;
    let spread = hi.unwrap() - lo;
    let norm_sq = a * a + b * b;
    Ok(BandSpec {
        slope,
        half_width: spread as f64 / (2.0 * (norm_sq as f64).sqrt()),
        anchor,
        spread,
        norm_sq,
    })
}

pub fn min_band_width<'a, I>(cells: I, slope: Slope) -> Result<f64, AnalysisError>
where
    I: IntoIterator<Item = &'a Cell>,
{
    fit_band(cells, slope).map(|b| b.half_width)
}

/// Travel vectors of the walks behind type-1 and type-3 subschedules, by
/// frequency. Each record contributes the solo travel vector of the state
/// its agent is in after the first step.
pub fn observed_travel_vectors(tr: &Trace) -> BTreeMap<TravelVector, usize> {
    let a = tr.automaton();
    let mut counts = BTreeMap::new();
    for r in tr.records() {
        if r.case == CaseType::Repeat {
            continue;
        }
        let Some(snap) = tr.snapshot(r.start + 1) else {
            continue;
        };
        if let Some(tv) = detect_travel_vector(a, snap.state(r.agent)) {
            *counts.entry(tv).or_insert(0) += 1;
        }
    }
    counts
}

/// Slope of the most frequent observed travel vector (ties go to the
/// smallest vector); falls back to the automaton's first solo travel
/// vector, then to slope 0.
pub fn dominant_slope(tr: &Trace) -> Slope {
    let observed = observed_travel_vectors(tr);
    observed
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(tv, _)| tv.slope())
        .or_else(|| {
            enumerate_travel_vectors(tr.automaton())
                .first()
                .map(|tv| tv.slope())
        })
        .unwrap_or_else(Slope::zero)
}

/// Solo travel vectors grouped by slope.
pub fn slope_classes(vectors: &BTreeSet<TravelVector>) -> BTreeMap<Slope, Vec<TravelVector>> {
    let mut classes: BTreeMap<Slope, Vec<TravelVector>> = BTreeMap::new();
    for tv in vectors {
        classes.entry(tv.slope()).or_default().push(*tv);
    }
    classes
}

/// `8 (N + 1)^5`, the eventual bound on the gap between a travel pair's end
/// and the next travel pair's start.
pub fn travel_gap_bound(a: &Automaton) -> u64 {
    8 * (a.num_states() as u64 + 1).pow(5)
}

/// Gaps `t_{j+1} - u_j` between consecutive travel pairs that exceed
/// [`travel_gap_bound`], as `(u_j, t_{j+1})`.
pub fn travel_gap_excesses(a: &Automaton, pairs: &[MeetingPair]) -> Vec<(u64, u64)> {
    let bound = travel_gap_bound(a);
    pairs
        .windows(2)
        .filter(|w| w[1].t - w[0].u > bound)
        .map(|w| (w[0].u, w[1].t))
        .collect()
}

/// First time the largest pairwise distance exceeds `distance`.
pub fn first_time_spread(tr: &Trace, distance: u64) -> Option<u64> {
    tr.snapshots()
        .iter()
        .find(|c| c.max_pairwise_distance() > distance)
        .map(|c| c.time)
}

/// Manhattan distance between the agents of a pair at its start.
pub fn pair_start_distance(tr: &Trace, p: &MeetingPair) -> u64 {
    tr.snapshots()[p.t as usize].max_pairwise_distance()
}
