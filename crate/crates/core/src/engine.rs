//! Weighted Lloyd iteration with delta-encoded trace capture.
//!
//! State 0 is the initial centers together with their assignment. Each
//! further round recomputes the centers from the current assignment; if no
//! center moved the run has converged, otherwise the points are reassigned
//! and the round counts as one iteration.

use serde::{Deserialize, Serialize};

use crate::construction::Instance;
use crate::error::{Error, Result};
use crate::geometry::{squared_distance, Point, WeightedPoint};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_ITERATIONS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyClusterPolicy {
    /// Abort with [`Error::EmptyCluster`].
    #[default]
    Fail,
    /// Deactivate the center and keep going with one center fewer.
    Drop,
}

impl std::str::FromStr for EmptyClusterPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fail" => Ok(EmptyClusterPolicy::Fail),
            "drop" => Ok(EmptyClusterPolicy::Drop),
            other => Err(format!(
                "unknown empty-cluster policy `{other}` (expected fail or drop)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub max_iterations: usize,
    /// Relative gap between the two smallest squared distances at or below
    /// which an assignment counts as a tie. Zero means exact equality.
    pub tie_tolerance: f64,
    pub empty_policy: EmptyClusterPolicy,
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tie_tolerance: 0.0,
            empty_policy: EmptyClusterPolicy::Fail,
            trace: true,
        }
    }
}

impl RunOptions {
    pub fn without_trace() -> Self {
        RunOptions {
            trace: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TieEvent {
    pub iteration: usize,
    pub point: usize,
    /// The chosen center and the runner-up, in index order.
    pub centers: [usize; 2],
    pub squared_distances: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EmptyClusterEvent {
    pub iteration: usize,
    pub center: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignment: Vec<usize>,
    pub centers: Vec<Point>,
    /// False for centers removed under [`EmptyClusterPolicy::Drop`].
    pub active: Vec<bool>,
    pub iteration: usize,
}

/// One state of the run, stored as the difference to the previous one.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// `(point, new center)` for every point that changed cluster.
    pub reassigned: Vec<(usize, usize)>,
    /// `(center, new position)` for every center that moved.
    pub moved: Vec<(usize, Point)>,
    /// Potential of the previous assignment against the moved centers.
    pub potential_after_update: f64,
    /// Potential after reassignment.
    pub potential: f64,
}

impl TraceRow {
    pub fn points_reassigned(&self) -> usize {
        self.reassigned.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub initial_centers: Vec<Point>,
    pub initial_assignment: Vec<usize>,
    /// `rows[0]` is the initial state; there is one more row than iterations.
    pub rows: Vec<TraceRow>,
    pub converged: bool,
}

impl RunTrace {
    /// Calls `f(iteration, assignment, centers)` for every row in order.
    pub fn replay<F>(&self, mut f: F) -> Result<()>
    where
        F: FnMut(usize, &[usize], &[Point]) -> Result<()>,
    {
        let mut assignment = self.initial_assignment.clone();
        let mut centers = self.initial_centers.clone();
        for row in &self.rows {
            for &(p, c) in &row.reassigned {
                assignment[p] = c;
            }
            for &(c, pos) in &row.moved {
                centers[c] = pos;
            }
            f(row.iteration, &assignment, &centers)?;
        }
        Ok(())
    }

    /// Full assignment of every row. Memory grows with the run length.
    pub fn assignments(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.rows.len());
        self.replay(|_, a, _| {
            out.push(a.to_vec());
            Ok(())
        })
        .expect("collecting cannot fail");
        out
    }

    pub fn potentials(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.potential).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub iterations: usize,
    pub converged: bool,
    pub ties: Vec<TieEvent>,
    pub empty_clusters: Vec<EmptyClusterEvent>,
    /// Assignment of the last row and the centers recomputed from it.
    pub final_state: Clustering,
    pub trace: Option<RunTrace>,
}

impl RunResult {
    pub fn degeneracy_count(&self) -> usize {
        self.ties.len() + self.empty_clusters.len()
    }
}

/// Nearest-center assignment; ties go to the lowest index.
pub fn assign(
    points: &[WeightedPoint],
    centers: &[Point],
    tie_tolerance: f64,
) -> (Vec<usize>, Vec<TieEvent>) {
    let mut lloyd = Lloyd::<f64>::new(points, centers);
    let mut ties = Vec::new();
    lloyd.assign(0, tie_tolerance, &mut ties, None);
    (lloyd.assignment, ties)
}

/// Weighted means of the clusters. A center that receives no point keeps its
/// position and is reported.
pub fn update(
    points: &[WeightedPoint],
    assignment: &[usize],
    centers: &[Point],
) -> (Vec<Point>, Vec<EmptyClusterEvent>) {
    let mut lloyd = Lloyd::<f64>::new(points, centers);
    lloyd.assignment.copy_from_slice(assignment);
    let mut events = Vec::new();
    lloyd.update(0, &mut events);
    (lloyd.next, events)
}

/// Weighted sum of squared distances to the assigned centers.
pub fn potential(points: &[WeightedPoint], assignment: &[usize], centers: &[Point]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| p.weight as f64 * squared_distance(p.position, centers[c]))
        .sum()
}

pub fn run(instance: &Instance, options: &RunOptions) -> Result<RunResult> {
    run_in::<f64>(instance, options)
}

/// Runs on backend `S`; coordinates are lifted once and reported as `f64`.
pub fn run_in<S: Scalar>(instance: &Instance, options: &RunOptions) -> Result<RunResult> {
    run_points::<S>(&instance.points, &instance.center_positions(), options)
}

pub fn run_points<S: Scalar>(
    points: &[WeightedPoint],
    centers: &[Point],
    options: &RunOptions,
) -> Result<RunResult> {
    if options.max_iterations == 0 {
        return Err(Error::InvalidParams(
            "max_iterations must be at least 1".into(),
        ));
    }
    if points.is_empty() || centers.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(options.tie_tolerance >= 0.0 && options.tie_tolerance.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "tie tolerance {} must be a finite non-negative number",
            options.tie_tolerance
        )));
    }
    let mut lloyd = Lloyd::<S>::new(points, centers);
    let mut ties = Vec::new();
    let mut empties = Vec::new();
    let mut changes = Vec::new();

    let pot0 = lloyd.assign(0, options.tie_tolerance, &mut ties, None);
    let mut trace = options.trace.then(|| RunTrace {
        initial_centers: centers.to_vec(),
        initial_assignment: lloyd.assignment.clone(),
        rows: vec![TraceRow {
            iteration: 0,
            reassigned: Vec::new(),
            moved: Vec::new(),
            potential_after_update: pot0.to_f64(),
            potential: pot0.to_f64(),
        }],
        converged: false,
    });

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let dropped = lloyd.update(iterations + 1, &mut empties);
        if dropped && options.empty_policy == EmptyClusterPolicy::Fail {
            let e = empties.last().expect("drop implies an event");
            return Err(Error::EmptyCluster {
                iteration: e.iteration,
                center: e.center,
            });
        }
        if !lloyd.next.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite {
                iteration: iterations + 1,
            });
        }
        if !dropped && lloyd.next == lloyd.centers {
            converged = true;
            break;
        }
        if iterations == options.max_iterations {
            break;
        }
        iterations += 1;
        match trace.as_mut() {
            Some(tr) => {
                let pot_update = lloyd.potential_against_next();
                let moved = lloyd
                    .next
                    .iter()
                    .zip(&lloyd.centers)
                    .enumerate()
                    .filter(|(_, (n, c))| n != c)
                    .map(|(j, (n, _))| (j, n.to_f64()))
                    .collect();
                lloyd.commit();
                changes.clear();
                let pot = lloyd.assign(
                    iterations,
                    options.tie_tolerance,
                    &mut ties,
                    Some(&mut changes),
                );
                tr.rows.push(TraceRow {
                    iteration: iterations,
                    reassigned: changes.clone(),
                    moved,
                    potential_after_update: pot_update.to_f64(),
                    potential: pot.to_f64(),
                });
            }
            None => {
                lloyd.commit();
                lloyd.assign(iterations, options.tie_tolerance, &mut ties, None);
            }
        }
    }
    if let Some(tr) = trace.as_mut() {
        tr.converged = converged;
    }
    Ok(RunResult {
        iterations,
        converged,
        ties,
        empty_clusters: empties,
        final_state: Clustering {
            assignment: lloyd.assignment.clone(),
            centers: lloyd.next.iter().map(|c| c.to_f64()).collect(),
            active: lloyd.active.clone(),
            iteration: iterations,
        },
        trace,
    })
}

/// Working buffers of a run; sized once, reused every round.
struct Lloyd<S> {
    points: Vec<Point<S>>,
    weights: Vec<S>,
    centers: Vec<Point<S>>,
    next: Vec<Point<S>>,
    active: Vec<bool>,
    assignment: Vec<usize>,
    sum_x: Vec<S>,
    sum_y: Vec<S>,
    sum_w: Vec<S>,
}

impl<S: Scalar> Lloyd<S> {
    fn new(points: &[WeightedPoint], centers: &[Point]) -> Self {
        let k = centers.len();
        let lifted: Vec<Point<S>> = centers.iter().map(|c| c.lift()).collect();
        Lloyd {
            points: points.iter().map(|p| p.position.lift()).collect(),
            weights: points.iter().map(|p| S::from_u64(p.weight)).collect(),
            next: lifted.clone(),
            centers: lifted,
            active: vec![true; k],
            assignment: vec![usize::MAX; points.len()],
            sum_x: vec![S::zero(); k],
            sum_y: vec![S::zero(); k],
            sum_w: vec![S::zero(); k],
        }
    }

    /// Reassigns every point to its nearest active center and returns the
    /// potential of the new assignment.
    fn assign(
        &mut self,
        iteration: usize,
        tie_tolerance: f64,
        ties: &mut Vec<TieEvent>,
        mut changes: Option<&mut Vec<(usize, usize)>>,
    ) -> S {
        let tol = S::from_f64(tie_tolerance);
        let mut total = S::zero();
        for (i, &p) in self.points.iter().enumerate() {
            let mut best = (usize::MAX, S::zero());
            let mut second = (usize::MAX, S::zero());
            for (j, &c) in self.centers.iter().enumerate() {
                if !self.active[j] {
                    continue;
                }
                let d = squared_distance(p, c);
                if best.0 == usize::MAX || d < best.1 {
                    second = best;
                    best = (j, d);
                } else if second.0 == usize::MAX || d < second.1 {
                    second = (j, d);
                }
            }
            if second.0 != usize::MAX && second.1 <= best.1 + tol * best.1 {
                ties.push(TieEvent {
                    iteration,
                    point: i,
                    centers: [best.0, second.0],
                    squared_distances: [best.1.to_f64(), second.1.to_f64()],
                });
            }
            if self.assignment[i] != best.0 {
                self.assignment[i] = best.0;
                if let Some(ch) = changes.as_deref_mut() {
                    ch.push((i, best.0));
                }
            }
            total += self.weights[i] * best.1;
        }
        total
    }

    /// Writes the cluster means into `next`. Returns whether a center lost
    /// all its points; such centers are deactivated.
    fn update(&mut self, iteration: usize, events: &mut Vec<EmptyClusterEvent>) -> bool {
        for j in 0..self.centers.len() {
            self.sum_x[j] = S::zero();
            self.sum_y[j] = S::zero();
            self.sum_w[j] = S::zero();
        }
        for ((p, &w), &a) in self.points.iter().zip(&self.weights).zip(&self.assignment) {
            self.sum_x[a] += w * p.x;
            self.sum_y[a] += w * p.y;
            self.sum_w[a] += w;
        }
        let mut dropped = false;
        for j in 0..self.centers.len() {
            if !self.active[j] {
                self.next[j] = self.centers[j];
                continue;
            }
            if self.sum_w[j] > S::zero() {
                self.next[j] =
                    Point::new(self.sum_x[j] / self.sum_w[j], self.sum_y[j] / self.sum_w[j]);
            } else {
                events.push(EmptyClusterEvent {
                    iteration,
                    center: j,
                });
                self.active[j] = false;
                self.next[j] = self.centers[j];
                dropped = true;
            }
        }
        dropped
    }

    fn potential_against_next(&self) -> S {
        let mut total = S::zero();
        for ((p, &w), &a) in self.points.iter().zip(&self.weights).zip(&self.assignment) {
            total += w * squared_distance(*p, self.next[a]);
        }
        total
    }

    fn commit(&mut self) {
        std::mem::swap(&mut self.centers, &mut self.next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_chain, ConstructionParams};
    use crate::geometry::Label;
    use crate::scalar::DoubleDouble;
    use proptest::prelude::*;

    fn wp(x: f64, y: f64, w: u64) -> WeightedPoint {
        WeightedPoint::new(Point::new(x, y), w, 1, Label::A).unwrap()
    }

    fn chain(t: usize) -> Instance {
        build_chain(&ConstructionParams::reference(t).unwrap()).unwrap()
    }

    #[test]
    fn one_center_takes_everything() {
        let pts = [wp(0.0, 0.0, 1), wp(5.0, 1.0, 3), wp(-2.0, 7.0, 2)];
        let (a, ties) = assign(&pts, &[Point::new(100.0, 100.0)], 0.0);
        assert_eq!(a, vec![0, 0, 0]);
        assert!(ties.is_empty());
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        let pts = [wp(0.0, 0.0, 1)];
        let centers = [
            Point::new(10.0, 0.0),
            Point::new(9.0, 9.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 5.0),
            Point::new(7.0, 7.0),
            Point::new(-1.0, 0.0),
        ];
        let (a, ties) = assign(&pts, &centers, 0.0);
        assert_eq!(a, vec![2]);
        assert_eq!(ties.len(), 1);
        assert_eq!(ties[0].centers, [2, 5]);
        assert_eq!(ties[0].squared_distances, [1.0, 1.0]);
    }

    #[test]
    fn near_tie_needs_tolerance() {
        let pts = [wp(0.0, 0.0, 1)];
        let centers = [Point::new(1.0, 0.0), Point::new(-1.0 - 1e-14, 0.0)];
        assert!(assign(&pts, &centers, 0.0).1.is_empty());
        assert_eq!(assign(&pts, &centers, 1e-12).1.len(), 1);
    }

    #[test]
    fn update_computes_weighted_means() {
        let pts = [wp(0.0, 0.0, 5), wp(2.0, 0.0, 5), wp(3.0, 4.0, 7)];
        let (c, ev) = update(&pts, &[0, 0, 1], &[Point::origin(), Point::origin()]);
        assert_eq!(c, vec![Point::new(1.0, 0.0), Point::new(3.0, 4.0)]);
        assert!(ev.is_empty());
    }

    #[test]
    fn empty_cluster_reported() {
        let pts = [wp(0.0, 0.0, 1)];
        let (c, ev) = update(&pts, &[0], &[Point::origin(), Point::new(4.0, 4.0)]);
        assert_eq!(c[1], Point::new(4.0, 4.0));
        assert_eq!(
            ev,
            vec![EmptyClusterEvent {
                iteration: 0,
                center: 1
            }]
        );
    }

    #[test]
    fn empty_cluster_policy() {
        let pts = [wp(0.0, 0.0, 1), wp(1.0, 0.0, 1)];
        let centers = [Point::new(0.0, 0.0), Point::new(50.0, 0.0)];
        let err = run_points::<f64>(&pts, &centers, &RunOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::EmptyCluster {
                iteration: 1,
                center: 1
            }
        ));
        let opts = RunOptions {
            empty_policy: EmptyClusterPolicy::Drop,
            ..RunOptions::default()
        };
        let res = run_points::<f64>(&pts, &centers, &opts).unwrap();
        assert!(res.converged);
        assert_eq!(res.empty_clusters.len(), 1);
        assert_eq!(res.final_state.active, vec![true, false]);
        assert_eq!(res.final_state.centers[0], Point::new(0.5, 0.0));
    }

    #[test]
    fn single_gadget_is_a_fixed_point() {
        let res = run(&chain(1), &RunOptions::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert!(res.converged);
        assert_eq!(res.trace.unwrap().rows.len(), 1);
    }

    #[test]
    fn p1_joins_leaf_at_seed_state() {
        let inst = chain(2);
        let (a, ties) = assign(&inst.points, &inst.center_positions(), 0.0);
        assert!(ties.is_empty());
        let p1 = inst
            .points
            .iter()
            .position(|p| p.gadget == 1 && p.label == Label::P)
            .unwrap();
        assert_eq!(a[p1], 0);
    }

    #[test]
    fn morning_n_center_at_outer_radius() {
        let inst = chain(2);
        let g = &inst.gadgets[1];
        let assignment: Vec<usize> = inst.seed_assignment().unwrap();
        let (c, _) = update(&inst.points, &assignment, &inst.center_positions());
        let d = crate::geometry::distance(c[2], g.anchor);
        assert!((d / g.outer_radius - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rows_are_iterations_plus_one() {
        let res = run(&chain(4), &RunOptions::default()).unwrap();
        let tr = res.trace.as_ref().unwrap();
        assert_eq!(tr.rows.len(), res.iterations + 1);
        assert!(tr.converged);
        for (k, row) in tr.rows.iter().enumerate() {
            assert_eq!(row.iteration, k);
        }
        // every counted round changed at least one center
        assert!(tr.rows[1..].iter().all(|r| !r.moved.is_empty()));
        let last = tr.assignments().pop().unwrap();
        assert_eq!(last, res.final_state.assignment);
    }

    #[test]
    fn trace_and_fast_path_agree() {
        let inst = chain(5);
        let a = run(&inst, &RunOptions::default()).unwrap();
        let b = run(&inst, &RunOptions::without_trace()).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.final_state, b.final_state);
        assert!(b.trace.is_none());
    }

    #[test]
    fn rerun_from_fixed_point_does_nothing() {
        let inst = chain(5);
        let res = run(&inst, &RunOptions::default()).unwrap();
        let again = run_points::<f64>(
            &inst.points,
            &res.final_state.centers,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(again.iterations, 0);
        assert!(again.converged);
    }

    #[test]
    fn budget_stops_without_convergence() {
        let opts = RunOptions {
            max_iterations: 3,
            ..RunOptions::default()
        };
        let res = run(&chain(4), &opts).unwrap();
        assert_eq!(res.iterations, 3);
        assert!(!res.converged);
        assert!(!res.trace.unwrap().converged);
    }

    #[test]
    fn zero_budget_rejected() {
        let opts = RunOptions {
            max_iterations: 0,
            ..RunOptions::default()
        };
        assert!(run(&chain(2), &opts).is_err());
    }

    #[test]
    fn potential_never_increases() {
        let res = run(&chain(6), &RunOptions::default()).unwrap();
        let tr = res.trace.unwrap();
        for w in tr.rows.windows(2) {
            let tol = 1e-12 * w[0].potential;
            assert!(w[1].potential_after_update <= w[0].potential + tol);
            assert!(w[1].potential <= w[1].potential_after_update + tol);
        }
    }

    #[test]
    fn potential_strictly_monotone_in_extended_precision() {
        let res = run_in::<DoubleDouble>(&chain(5), &RunOptions::default()).unwrap();
        let tr = res.trace.unwrap();
        for w in tr.rows.windows(2) {
            assert!(w[1].potential_after_update <= w[0].potential);
            assert!(w[1].potential <= w[1].potential_after_update);
        }
    }

    #[test]
    fn trace_potential_matches_recomputation() {
        let inst = chain(3);
        let res = run(&inst, &RunOptions::default()).unwrap();
        let tr = res.trace.unwrap();
        tr.replay(|k, a, c| {
            let p = potential(&inst.points, a, c);
            assert!((p - tr.rows[k].potential).abs() <= 1e-12 * p);
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn no_clustering_repeats() {
        use std::collections::HashSet;
        let res = run(&chain(6), &RunOptions::default()).unwrap();
        let tr = res.trace.unwrap();
        let mut states = HashSet::new();
        let mut assignments = HashSet::new();
        tr.replay(|k, a, c| {
            let bits: Vec<(u64, u64)> = c.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
            assert!(states.insert((a.to_vec(), bits)), "state {k} repeats");
            // only the last round moves centers without moving a point
            assert!(
                assignments.insert(a.to_vec()) || k + 1 == tr.rows.len(),
                "assignment {k} repeats"
            );
            Ok(())
        })
        .unwrap();
        assert_eq!(tr.rows.last().unwrap().points_reassigned(), 0);
    }

    #[test]
    fn double_and_extended_runs_agree() {
        for t in 2..=6 {
            let inst = chain(t);
            let a = run(&inst, &RunOptions::default()).unwrap();
            let b = run_in::<DoubleDouble>(&inst, &RunOptions::default()).unwrap();
            assert_eq!(a.iterations, b.iterations, "t={t}");
            assert_eq!(
                a.trace.unwrap().assignments(),
                b.trace.unwrap().assignments()
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn dyadic_scaling_preserves_assignments(k in -20i32..20) {
            let inst = chain(4);
            let s = 2f64.powi(k);
            let mut scaled = inst.clone();
            for p in &mut scaled.points {
                p.position = p.position.scale(s);
            }
            for c in &mut scaled.centers {
                c.position = c.position.scale(s);
            }
            let a = run(&inst, &RunOptions::default()).unwrap();
            let b = run(&scaled, &RunOptions::default()).unwrap();
            prop_assert_eq!(a.iterations, b.iterations);
            let (ta, tb) = (a.trace.unwrap(), b.trace.unwrap());
            prop_assert_eq!(ta.assignments(), tb.assignments());
            for (x, y) in ta.potentials().iter().zip(tb.potentials()) {
                prop_assert_eq!(x * s * s, y);
            }
        }

        #[test]
        fn assignment_picks_a_nearest_center(
            pts in prop::collection::vec((-100f64..100.0, -100f64..100.0, 1u64..50), 1..30),
            cs in prop::collection::vec((-100f64..100.0, -100f64..100.0), 1..8),
        ) {
            let points: Vec<_> = pts.iter().map(|&(x, y, w)| wp(x, y, w)).collect();
            let centers: Vec<_> = cs.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let (a, _) = assign(&points, &centers, 0.0);
            for (p, &j) in points.iter().zip(&a) {
                let d = squared_distance(p.position, centers[j]);
                for (m, c) in centers.iter().enumerate() {
                    let e = squared_distance(p.position, *c);
                    prop_assert!(d < e || (d == e && j <= m) || m == j);
                }
            }
        }

        #[test]
        fn random_runs_have_monotone_potential(
            pts in prop::collection::vec((-100f64..100.0, -100f64..100.0, 1u64..50), 4..40),
            k in 1usize..5,
        ) {
            let points: Vec<_> = pts.iter().map(|&(x, y, w)| wp(x, y, w)).collect();
            let centers: Vec<_> = points.iter().take(k).map(|p| p.position).collect();
            let opts = RunOptions { empty_policy: EmptyClusterPolicy::Drop, ..RunOptions::default() };
            let res = run_points::<f64>(&points, &centers, &opts).unwrap();
            prop_assert!(res.converged);
            let tr = res.trace.unwrap();
            for w in tr.rows.windows(2) {
                let tol = 1e-9 * w[0].potential.max(1.0);
                prop_assert!(w[1].potential <= w[0].potential + tol);
            }
        }
    }
}
