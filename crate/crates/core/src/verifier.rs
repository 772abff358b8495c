//! Composition-based stage classification and the legal-transition graph of
//! a gadget's day.
//!
//! A gadget's stage is read off which of its labels share a cluster and
//! whether its clusters also hold points of the gadget below (`lower`) or the
//! `P`/`Q` points of the gadget above (`upper`). Helper points `I`/`J` are
//! ignored throughout.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::construction::Instance;
use crate::engine::RunTrace;
use crate::error::{Error, Result};
use crate::geometry::{distance, Label, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Stage {
    /// `{A} | {B,C,D,E,P,Q}`
    Morning,
    /// `{A} | {B,C,D,E,Q}`, `P` in a lower cluster.
    Call1I,
    /// `{A,B} | {C,D,E}`, `P`, `Q` in a lower cluster.
    Call1II,
    /// `{A,B,C,P,Q} | {D,E}`
    Afternoon,
    /// `{A,B,C,Q} | {D,E}`, `P` in a lower cluster.
    Call2I,
    /// `{A,B,C,D} | {E}`, `P`, `Q` in a lower cluster. Also the second call's
    /// part II.
    Night,
    /// `{A,B,C,D} | {E,P,Q}`
    Asleep,
    /// Asleep, with `P` of the gadget above joined to `{A,B,C,D}`.
    WakeI,
    /// Asleep, with `P` and `Q` of the gadget above joined.
    WakeII,
    /// Leaf: `{F}` alone.
    LeafAsleep,
    /// Leaf: `{F, P_1}`.
    LeafWakingI,
    /// Leaf: `{F, P_1, Q_1}`.
    LeafWakingII,
    Unclassified,
}

impl Stage {
    pub const ALL: [Stage; 13] = [
        Stage::Morning,
        Stage::Call1I,
        Stage::Call1II,
        Stage::Afternoon,
        Stage::Call2I,
        Stage::Night,
        Stage::Asleep,
        Stage::WakeI,
        Stage::WakeII,
        Stage::LeafAsleep,
        Stage::LeafWakingI,
        Stage::LeafWakingII,
        Stage::Unclassified,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Stage::Morning => "Morning",
            Stage::Call1I => "Call1_I",
            Stage::Call1II => "Call1_II",
            Stage::Afternoon => "Afternoon",
            Stage::Call2I => "Call2_I",
            Stage::Night => "Night",
            Stage::Asleep => "Asleep",
            Stage::WakeI => "Wake_I",
            Stage::WakeII => "Wake_II",
            Stage::LeafAsleep => "LeafAsleep",
            Stage::LeafWakingI => "LeafWaking_I",
            Stage::LeafWakingII => "LeafWaking_II",
            Stage::Unclassified => "Unclassified",
        }
    }

    /// Stages a converged run may end in.
    pub fn is_asleep(self) -> bool {
        matches!(self, Stage::Night | Stage::Asleep | Stage::LeafAsleep)
    }

    pub fn is_leaf(self) -> bool {
        matches!(
            self,
            Stage::LeafAsleep | Stage::LeafWakingI | Stage::LeafWakingII
        )
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.tag() == s)
            .ok_or_else(|| Error::Format(format!("unknown stage tag `{s}`")))
    }
}

/// Whether `prev -> next` is an edge of the day graph.
pub fn check_transition(prev: Stage, next: Stage) -> bool {
    use Stage::*;
    matches!(
        (prev, next),
        (Morning, Morning | Call1I)
            | (Call1I, Call1II)
            | (Call1II, Afternoon)
            | (Afternoon, Afternoon | Call2I)
            | (Call2I, Night)
            | (Night, Asleep | WakeI)
            | (Asleep, Asleep | WakeI)
            | (WakeI, WakeII)
            | (WakeII, Morning)
            | (LeafAsleep, LeafAsleep | LeafWakingI)
            | (LeafWakingI, LeafWakingII)
            | (LeafWakingII, LeafAsleep)
    )
}

/// Whether entering `next` from `prev` is a wake-up of the gadget. Row 0
/// counts for the leaf when it starts out being called.
pub fn is_wake(prev: Option<Stage>, next: Stage) -> bool {
    match (prev, next) {
        (Some(Stage::WakeII), Stage::Morning) => true,
        (Some(Stage::LeafWakingI), Stage::LeafWakingI) => false,
        (_, Stage::LeafWakingI) => true,
        _ => false,
    }
}

/// Foreign members of a cluster as seen from one gadget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Foreign {
    None,
    Lower,
    /// Mask of the upper gadget's `P`/`Q` in the cluster.
    Upper(u16),
    Other,
}

const fn mask(labels: &[Label]) -> u16 {
    let mut m = 0;
    let mut i = 0;
    while i < labels.len() {
        m |= 1 << labels[i] as u16;
        i += 1;
    }
    m
}

use Label::{A, B, C, D, E, F, P, Q};

const M_A: u16 = mask(&[A]);
const M_AB: u16 = mask(&[A, B]);
const M_ABCD: u16 = mask(&[A, B, C, D]);
const M_ABCQ: u16 = mask(&[A, B, C, Q]);
const M_ABCPQ: u16 = mask(&[A, B, C, P, Q]);
const M_BCDEPQ: u16 = mask(&[B, C, D, E, P, Q]);
const M_BCDEQ: u16 = mask(&[B, C, D, E, Q]);
const M_CDE: u16 = mask(&[C, D, E]);
const M_DE: u16 = mask(&[D, E]);
const M_E: u16 = mask(&[E]);
const M_EPQ: u16 = mask(&[E, P, Q]);
const M_P: u16 = mask(&[P]);
const M_PQ: u16 = mask(&[P, Q]);

/// Classifies rows of a run on a fixed instance.
#[derive(Debug, Clone)]
pub struct Classifier {
    num_gadgets: usize,
    /// `(gadget, label bit)` per point; `None` for helper points.
    tags: Vec<Option<(usize, u16)>>,
    /// Per cluster: `(gadget, mask)` entries, rebuilt for every row.
    scratch: Vec<Vec<(usize, u16)>>,
    /// Clusters holding gadget points, per gadget.
    touched: Vec<Vec<usize>>,
}

impl Classifier {
    pub fn new(instance: &Instance) -> Self {
        let tags = instance
            .points
            .iter()
            .map(|p| (!p.label.is_auxiliary()).then(|| (p.gadget, 1u16 << p.label as u16)))
            .collect();
        Classifier {
            num_gadgets: instance.gadgets.len(),
            tags,
            scratch: vec![Vec::new(); instance.centers.len()],
            touched: vec![Vec::new(); instance.gadgets.len()],
        }
    }

    pub fn num_gadgets(&self) -> usize {
        self.num_gadgets
    }

    /// Stage of every gadget under `assignment`, written into `out`.
    pub fn classify_into(&mut self, assignment: &[usize], out: &mut Vec<Stage>) {
        assert_eq!(
            assignment.len(),
            self.tags.len(),
            "assignment does not fit the instance"
        );
        for c in &mut self.scratch {
            c.clear();
        }
        for t in &mut self.touched {
            t.clear();
        }
        for (tag, &cluster) in self.tags.iter().zip(assignment) {
            let Some((g, bit)) = *tag else { continue };
            if cluster >= self.scratch.len() {
                self.scratch.resize(cluster + 1, Vec::new());
            }
            let entries = &mut self.scratch[cluster];
            match entries.iter_mut().find(|(eg, _)| *eg == g) {
                Some(e) => e.1 |= bit,
                None => {
                    entries.push((g, bit));
                    self.touched[g].push(cluster);
                }
            }
        }
        out.clear();
        for g in 0..self.num_gadgets {
            out.push(self.classify_gadget(g));
        }
    }

    pub fn classify(&mut self, assignment: &[usize]) -> Vec<Stage> {
        let mut out = Vec::with_capacity(self.num_gadgets);
        self.classify_into(assignment, &mut out);
        out
    }

    fn classify_gadget(&self, g: usize) -> Stage {
        let mut clusters: Vec<(u16, Foreign)> = Vec::with_capacity(4);
        for &cl in &self.touched[g] {
            let entries = &self.scratch[cl];
            let own = entries.iter().find(|e| e.0 == g).map_or(0, |e| e.1);
            let mut foreign = Foreign::None;
            for &(eg, m) in entries {
                if eg == g {
                    continue;
                }
                let kind = if g > 0 && eg == g - 1 {
                    Foreign::Lower
                } else if eg == g + 1 && m & !M_PQ == 0 {
                    Foreign::Upper(m)
                } else {
                    Foreign::Other
                };
                foreign = match foreign {
                    Foreign::None => kind,
                    _ => Foreign::Other,
                };
            }
            clusters.push((own, foreign));
        }
        clusters.sort_by_key(|c| c.0);
        if g == 0 {
            return match clusters.as_slice() {
                [(m, Foreign::None)] if *m == mask(&[F]) => Stage::LeafAsleep,
                [(m, Foreign::Upper(u))] if *m == mask(&[F]) && *u == M_P => Stage::LeafWakingI,
                [(m, Foreign::Upper(u))] if *m == mask(&[F]) && *u == M_PQ => Stage::LeafWakingII,
                _ => Stage::Unclassified,
            };
        }
        use Foreign::{Lower, None as Alone, Upper};
        let is = |want: &[(u16, Foreign)]| {
            let mut w = want.to_vec();
            w.sort_by_key(|c| c.0);
            clusters == w
        };
        if is(&[(M_A, Alone), (M_BCDEPQ, Alone)]) {
            Stage::Morning
        } else if is(&[(M_A, Alone), (M_BCDEQ, Alone), (M_P, Lower)]) {
            Stage::Call1I
        } else if is(&[(M_AB, Alone), (M_CDE, Alone), (M_PQ, Lower)]) {
            Stage::Call1II
        } else if is(&[(M_ABCPQ, Alone), (M_DE, Alone)]) {
            Stage::Afternoon
        } else if is(&[(M_ABCQ, Alone), (M_DE, Alone), (M_P, Lower)]) {
            Stage::Call2I
        } else if is(&[(M_ABCD, Alone), (M_E, Alone), (M_PQ, Lower)]) {
            Stage::Night
        } else if is(&[(M_ABCD, Alone), (M_EPQ, Alone)]) {
            Stage::Asleep
        } else if is(&[(M_ABCD, Upper(M_P)), (M_EPQ, Alone)]) {
            Stage::WakeI
        } else if is(&[(M_ABCD, Upper(M_PQ)), (M_EPQ, Alone)]) {
            Stage::WakeII
        } else {
            Stage::Unclassified
        }
    }
}

/// Stage of one gadget under `assignment`.
pub fn classify_stage(assignment: &[usize], gadget: usize, instance: &Instance) -> Stage {
    Classifier::new(instance).classify(assignment)[gadget]
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalyzeOptions {
    /// Also require the center holding `A_i` to sit within `1e-6 r_i` of
    /// `S*_i` right after every Night/Asleep row.
    pub strict_geometry: bool,
}

pub const STRICT_GEOMETRY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTimeline {
    /// Per gadget: `(iteration, stage)` for row 0 and every row where the
    /// stage changed.
    pub stages: Vec<Vec<(usize, Stage)>>,
    /// Per gadget: completed wake-ups (for the leaf: calls received).
    pub wake_counts: Vec<usize>,
    pub leaf_wake_count: usize,
    /// Per gadget: number of rows entering Night.
    pub night_counts: Vec<usize>,
    pub final_stages: Vec<Stage>,
    pub rows: usize,
    pub transitions_checked: usize,
    pub complete: bool,
}

impl StageTimeline {
    pub fn all_asleep(&self) -> bool {
        self.final_stages.iter().all(|s| s.is_asleep())
    }

    /// Stage of `gadget` at row `iteration`.
    pub fn stage_at(&self, gadget: usize, iteration: usize) -> Stage {
        let entries = &self.stages[gadget];
        let idx = entries.partition_point(|(k, _)| *k <= iteration);
        entries[idx.saturating_sub(1)].1
    }
}

/// Incremental checker fed one row at a time.
#[derive(Debug, Clone)]
pub struct TimelineBuilder {
    classifier: Classifier,
    current: Vec<Stage>,
    previous: Vec<Stage>,
    timeline: StageTimeline,
    rows: usize,
}

impl TimelineBuilder {
    pub fn new(instance: &Instance) -> Self {
        let t = instance.gadgets.len();
        TimelineBuilder {
            classifier: Classifier::new(instance),
            current: Vec::with_capacity(t),
            previous: Vec::with_capacity(t),
            timeline: StageTimeline {
                stages: vec![Vec::new(); t],
                wake_counts: vec![0; t],
                leaf_wake_count: 0,
                night_counts: vec![0; t],
                final_stages: Vec::new(),
                rows: 0,
                transitions_checked: 0,
                complete: false,
            },
            rows: 0,
        }
    }

    /// Classifies and checks one row; returns its stages and the gadgets
    /// that woke up at this row.
    pub fn push(
        &mut self,
        iteration: usize,
        assignment: &[usize],
    ) -> Result<(&[Stage], Vec<usize>)> {
        std::mem::swap(&mut self.current, &mut self.previous);
        self.classifier.classify_into(assignment, &mut self.current);
        let first = self.rows == 0;
        let mut wakes = Vec::new();
        for (g, &st) in self.current.iter().enumerate() {
            if st == Stage::Unclassified {
                return Err(Error::VerificationFailure {
                    iteration,
                    gadget: g,
                    reason: "composition matches no stage".into(),
                });
            }
            if (g == 0) != st.is_leaf() {
                return Err(Error::VerificationFailure {
                    iteration,
                    gadget: g,
                    reason: format!("stage {st} on the wrong kind of gadget"),
                });
            }
            let prev = (!first).then(|| self.previous[g]);
            if let Some(p) = prev {
                self.timeline.transitions_checked += 1;
                if !check_transition(p, st) {
                    return Err(Error::VerificationFailure {
                        iteration,
                        gadget: g,
                        reason: format!("illegal transition {p} -> {st}"),
                    });
                }
            }
            if prev != Some(st) {
                self.timeline.stages[g].push((iteration, st));
                if st == Stage::Night {
                    self.timeline.night_counts[g] += 1;
                }
            }
            if is_wake(prev, st) {
                self.timeline.wake_counts[g] += 1;
                wakes.push(g);
            }
        }
        self.rows += 1;
        Ok((&self.current, wakes))
    }

    pub fn current(&self) -> &[Stage] {
        &self.current
    }

    pub fn finish(mut self, complete: bool) -> Result<StageTimeline> {
        let tl = &mut self.timeline;
        tl.rows = self.rows;
        tl.final_stages = self.current.clone();
        tl.leaf_wake_count = tl.wake_counts.first().copied().unwrap_or(0);
        tl.complete = complete;
        if complete {
            if let Some(g) = tl.final_stages.iter().position(|s| !s.is_asleep()) {
                return Err(Error::VerificationFailure {
                    iteration: self.rows.saturating_sub(1),
                    gadget: g,
                    reason: format!("run converged with the gadget in {}", tl.final_stages[g]),
                });
            }
        }
        Ok(self.timeline)
    }
}

/// Classifies every row of `trace`, checks each transition, counts wake-ups,
/// and for a converged trace checks that every gadget ends asleep.
pub fn analyze(trace: &RunTrace, instance: &Instance) -> Result<StageTimeline> {
    analyze_with(trace, instance, &AnalyzeOptions::default())
}

pub fn analyze_with(
    trace: &RunTrace,
    instance: &Instance,
    options: &AnalyzeOptions,
) -> Result<StageTimeline> {
    if trace.initial_assignment.len() != instance.points.len() {
        return Err(Error::VerificationFailure {
            iteration: 0,
            gadget: 0,
            reason: format!(
                "trace has {} points, instance has {}",
                trace.initial_assignment.len(),
                instance.points.len()
            ),
        });
    }
    let mut builder = TimelineBuilder::new(instance);
    let a_index: Vec<Option<usize>> = instance
        .gadgets
        .iter()
        .map(|g| {
            let label = if g.is_leaf() { Label::F } else { Label::A };
            instance
                .points
                .iter()
                .position(|p| p.gadget == g.index && p.label == label)
        })
        .collect();
    let mut sleeping = vec![false; instance.gadgets.len()];
    trace.replay(|k, assignment, centers| {
        if options.strict_geometry && k > 0 {
            check_geometry(instance, &a_index, &sleeping, k, assignment, centers)?;
        }
        let (stages, _) = builder.push(k, assignment)?;
        for (s, st) in sleeping.iter_mut().zip(stages) {
            *s = matches!(st, Stage::Night | Stage::Asleep | Stage::LeafAsleep);
        }
        Ok(())
    })?;
    builder.finish(trace.converged)
}

fn check_geometry(
    instance: &Instance,
    a_index: &[Option<usize>],
    sleeping: &[bool],
    iteration: usize,
    assignment: &[usize],
    centers: &[Point],
) -> Result<()> {
    for (g, gadget) in instance.gadgets.iter().enumerate() {
        let Some(a) = a_index[g] else { continue };
        if !sleeping[g] {
            continue;
        }
        let c = centers[assignment[a]];
        let d = distance(c, gadget.s_star);
        if d > STRICT_GEOMETRY_TOLERANCE * gadget.inner_radius {
            return Err(Error::VerificationFailure {
                iteration,
                gadget: g,
                reason: format!("sleeping center {d:e} away from S*"),
            });
        }
    }
    Ok(())
}
