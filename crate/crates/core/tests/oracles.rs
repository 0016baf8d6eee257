use std::sync::Arc;

use num_rational::Ratio;
use ssync_core::analysis::{
    canonical_base, detect_travel_vector, min_band_width, mod_reduce, ModBase, Slope, TravelVector,
};
use ssync_core::harness::{check_escape_permanence, generate_corpus, CorpusParams};
use ssync_core::scheduler::{run_adversarial, simulate_solo, solo_bound, SoloOutcome};
use ssync_core::{Automaton, Cell, Configuration, StateId, StateSet};

const SOLO_STEPS: usize = 10_000;

type SlopeCase = (&'static [(i64, i64)], Ratio<i64>);
type SoloRun = (Option<(u64, Cell)>, Vec<(StateId, Cell)>);

/// Solo walk on an empty grid for `SOLO_STEPS` steps, then the shortest
/// period of the state sequence over its second half and the displacement
/// across one such period.
fn brute_travel_vector(a: &Automaton, q0: StateId) -> Option<TravelVector> {
    let mut states = vec![q0];
    let mut pos = vec![(0i64, 0i64)];
    for _ in 0..SOLO_STEPS {
        let (q, mv) = a.step(*states.last().unwrap(), StateSet::EMPTY);
        let (dx, dy) = mv.offset();
        let (x, y) = *pos.last().unwrap();
        states.push(q);
        pos.push((x + dx, y + dy));
    }
    let half = SOLO_STEPS / 2;
    let period = (1..half)
        .find(|&p| (half..=SOLO_STEPS - p).all(|t| states[t] == states[t + p]))
        .expect("finite automata are eventually periodic");
    let (x1, y1) = pos[SOLO_STEPS];
    let (x0, y0) = pos[SOLO_STEPS - period];
    let v = (x1 - x0, y1 - y0);
    (v != (0, 0)).then_some(TravelVector {
        dx: v.0,
        dy: v.1,
        period: period as u64,
    })
}

#[test]
fn travel_vectors_match_brute_force() {
    let corpus = generate_corpus(&CorpusParams::new(2024, 1000, 6)).unwrap();
    let mut mismatches = Vec::new();
    for (i, a) in corpus.iter().enumerate() {
        for q in a.states() {
            let fast = detect_travel_vector(a, q);
            let slow = brute_travel_vector(a, q);
            if fast != slow {
                mismatches.push((i, q, fast, slow));
            }
        }
    }
    assert!(mismatches.is_empty(), "{mismatches:?}");
}

fn brute_mod(v: (i64, i64), base: ModBase) -> (i64, i64) {
    let b = (-10_000..=10_000).find(|b| v.0 + b * base.x >= 0).unwrap();
    (v.0 + b * base.x, v.1 + b * base.y)
}

#[test]
fn mod_reduce_matches_linear_scan() {
    for x in 1..7 {
        for y in -3..4 {
            let base = ModBase::new(x, y).unwrap();
            for w in -40..40 {
                for z in [-5, 0, 11] {
                    assert_eq!(mod_reduce((w, z), base), brute_mod((w, z), base));
                }
            }
        }
    }
}

#[test]
fn canonical_base_matches_search() {
    let sets: &[SlopeCase] = &[
        (&[(1, 1), (2, 2)], Ratio::from_integer(1)),
        (&[(2, 4), (3, 6)], Ratio::from_integer(2)),
        (&[(4, 2), (-6, -3), (1, 5)], Ratio::new(1, 2)),
        (&[(3, 0), (-2, 0), (5, 0)], Ratio::from_integer(0)),
    ];
    for &(vs, r) in sets {
        let b = canonical_base(vs, Slope::Finite(r)).unwrap();
        let members: Vec<_> = vs.iter().filter(|(x, y)| Ratio::new(*y, *x) == r).collect();
        let x = (1..1000)
            .find(|x| members.iter().all(|(dx, _)| x % dx.abs() == 0))
            .unwrap();
        assert_eq!((b.x, b.y), (x, (r * x).to_integer()));
    }
}

#[test]
fn band_width_matches_float_geometry() {
    let cells = [
        Cell::new(0, 0),
        Cell::new(3, 1),
        Cell::new(-2, 4),
        Cell::new(5, -3),
        Cell::new(1, 1),
    ];
    for (p, q) in [(0i64, 1i64), (1, 1), (1, 2), (-3, 2), (2, 1)] {
        let r = p as f64 / q as f64;
        let offsets: Vec<f64> = cells.iter().map(|c| c.y as f64 - r * c.x as f64).collect();
        let (lo, hi) = offsets
            .iter()
            .fold((f64::MAX, f64::MIN), |(l, h), &o| (l.min(o), h.max(o)));
        let expected = (hi - lo) / 2.0 / (1.0 + r * r).sqrt();
        let got = min_band_width(&cells, Slope::Finite(Ratio::new(p, q))).unwrap();
        assert!(
            (got - expected).abs() < 1e-9,
            "slope {p}/{q}: {got} vs {expected}"
        );
    }
    let xs: Vec<i64> = cells.iter().map(|c| c.x).collect();
    let spread = xs.iter().max().unwrap() - xs.iter().min().unwrap();
    assert_eq!(
        min_band_width(&cells, Slope::Vertical).unwrap(),
        spread as f64 / 2.0
    );
}

/// Steps the agent alone with real sensing and reports the first meeting
/// within `limit` steps, plus every (state, cell) visited.
fn brute_solo(
    c: &Configuration,
    a: &Automaton,
    agent: usize,
    limit: u64,
) -> SoloRun {
    let mut cur = c.clone();
    let mut visited = vec![(cur.state(agent), cur.cell(agent))];
    for t in 1..=limit {
        cur = cur.activate(a, &[agent]).unwrap();
        visited.push((cur.state(agent), cur.cell(agent)));
        if cur.meeting_set().contains(agent) {
            return (Some((t, cur.cell(agent))), visited);
        }
    }
    (None, visited)
}

#[test]
fn solo_classification_matches_brute_force() {
    const LIMIT: u64 = 3000;
    let corpus = generate_corpus(&CorpusParams::new(99, 300, 4)).unwrap();
    let spots = [
        (0, 0),
        (1, 0),
        (0, 3),
        (-4, 2),
        (7, 7),
        (-1, -1),
        (12, 0),
        (0, -9),
    ];
    let mut checked = 0;
    for (i, a) in corpus.iter().enumerate() {
        let mut c = Configuration::initial(a);
        for (j, s) in c.agents.iter_mut().enumerate() {
            let (x, y) = spots[(i + 3 * j) % spots.len()];
            s.cell = Cell::new(x, y);
        }
        for agent in 0..c.num_agents() {
            let got = simulate_solo(&c, a, agent, solo_bound(a)).unwrap();
            let (meet, visited) = brute_solo(&c, a, agent, LIMIT);
            match got {
                SoloOutcome::Meets { steps, cell } if steps <= LIMIT => {
                    assert_eq!(meet, Some((steps, cell)), "entry {i} agent {agent}");
                }
                SoloOutcome::Meets { .. } => assert_eq!(meet, None),
                SoloOutcome::Escapes { travel, period } => {
                    assert_eq!(meet, None, "entry {i} agent {agent}");
                    let end = visited.len() - 1;
                    let (q0, c0) = visited[end - period as usize];
                    let (q1, c1) = visited[end];
                    assert_eq!(q0, q1);
                    assert_eq!(c1.diff(c0), travel);
                }
                SoloOutcome::Recurs { steps, q_min } => {
                    assert_eq!(meet, None, "entry {i} agent {agent}");
                    // States on the eventual cycle, and the smallest of them.
                    let tail: Vec<StateId> =
                        visited[visited.len() - 20..].iter().map(|v| v.0).collect();
                    let smallest = tail.iter().min_by_key(|q| a.rank(**q)).unwrap();
                    assert_eq!(*smallest, q_min);
                    let first = (1..visited.len()).find(|&t| visited[t].0 == q_min).unwrap();
                    assert_eq!(first as u64, steps);
                    assert!(visited[first + 1..].contains(&visited[first]));
                }
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 900);
}

#[test]
fn literal_stop_regression_stays_escaped() {
    // With seed 42 this entry escapes while still in its transient prefix.
    let a = generate_corpus(&CorpusParams::new(42, 1000, 4))
        .unwrap()
        .remove(236);
    let tr = run_adversarial(Arc::new(a), 2000).unwrap();
    assert!(tr.escape_from.is_some());
    assert!(check_escape_permanence(&tr).is_empty());
}
