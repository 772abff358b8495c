//! Seeding on data points: per gadget the centers sit on `E` and on two
//! helper points `I`, `J` below `A`.

use crate::construction::chain::{build_chain, build_seeded_in, Instance};
use crate::construction::params::{ConstructionParams, Variant};
use crate::engine::{assign, run, RunOptions};
use crate::error::{Error, Result};
use crate::geometry::Label;
use crate::scalar::Scalar;
use crate::verifier::{Classifier, Stage};

/// Builds the data-point seeded chain and checks by simulation that it
/// reaches the morning clustering of the baseline.
pub fn build_chain_data_point_seeded(params: &ConstructionParams) -> Result<Instance> {
    build_chain_data_point_seeded_in::<f64>(params)
}

pub fn build_chain_data_point_seeded_in<S: Scalar>(
    params: &ConstructionParams,
) -> Result<Instance> {
    let instance = build_seeded_in::<S>(params)?;
    check_seeded_reaches_morning(&instance)?;
    Ok(instance)
}

/// Maps clusterings of a seeded instance onto the morning-means instance
/// with the same parameters.
#[derive(Debug, Clone)]
pub struct BaselineProjection {
    /// For each baseline point, its index in the seeded instance.
    points: Vec<usize>,
    /// For each seeded center, the baseline center it plays the role of.
    centers: Vec<Option<usize>>,
}

impl BaselineProjection {
    pub fn new(seeded: &Instance, baseline: &Instance) -> Result<Self> {
        if seeded.variant != Variant::DataPoints || baseline.variant != Variant::MorningMeans {
            return Err(Error::InvalidParams(
                "projection needs a seeded and a morning-means instance".into(),
            ));
        }
        let points = baseline
            .points
            .iter()
            .map(|b| {
                seeded
                    .points
                    .iter()
                    .position(|s| s.gadget == b.gadget && s.label == b.label)
                    .ok_or_else(|| {
                        Error::InvalidParams(format!("point {}{} missing", b.label, b.gadget))
                    })
            })
            .collect::<Result<_>>()?;
        // leaf center, then (E, I, J) per gadget against (A-mean, N-mean)
        let mut centers = vec![Some(0)];
        for g in 1..seeded.gadgets.len() {
            let a_center = 1 + 2 * (g - 1);
            centers.extend([Some(a_center + 1), Some(a_center), None]);
        }
        if centers.len() != seeded.centers.len() {
            return Err(Error::InvalidParams(
                "unexpected seeded center layout".into(),
            ));
        }
        Ok(BaselineProjection { points, centers })
    }

    /// Baseline assignment matching `seeded_assignment`, or `None` if an
    /// original point sits in a helper-only cluster.
    pub fn project(&self, seeded_assignment: &[usize]) -> Option<Vec<usize>> {
        self.points
            .iter()
            .map(|&i| self.centers[seeded_assignment[i]])
            .collect()
    }
}

/// Checks the two-step property: at row 0 every gadget is in its morning
/// composition (helpers ignored), and at row 1 the clustering of the original
/// points equals the baseline's seed assignment while each `I`/`J` pair forms
/// its own cluster.
pub fn check_seeded_reaches_morning(instance: &Instance) -> Result<()> {
    let unreachable = |msg: String| Error::VariantUnreachable(msg);
    let opts = RunOptions {
        max_iterations: 1,
        ..RunOptions::default()
    };
    let res = run(instance, &opts)?;
    if !res.ties.is_empty() {
        return Err(unreachable(format!(
            "{} ties in the first rounds",
            res.ties.len()
        )));
    }
    let trace = res.trace.expect("tracing enabled");
    let rows = trace.assignments();
    if rows.len() < 2 {
        return Err(unreachable(
            "run stopped before the second assignment".into(),
        ));
    }
    let mut classifier = Classifier::new(instance);
    let stages = classifier.classify(&rows[0]);
    for (g, st) in stages.iter().enumerate() {
        let want = if g == 0 {
            Stage::LeafAsleep
        } else {
            Stage::Morning
        };
        if *st != want {
            return Err(unreachable(format!(
                "gadget {g} starts in {st}, expected {want}"
            )));
        }
    }

    let baseline = build_chain(&instance.params)?;
    let (seed, _) = assign(&baseline.points, &baseline.center_positions(), 0.0);
    let projection = BaselineProjection::new(instance, &baseline)?;
    match projection.project(&rows[1]) {
        Some(p) if p == seed => {}
        _ => {
            return Err(unreachable(
                "second assignment differs from the morning seed state".into(),
            ))
        }
    }
    for g in 1..instance.gadgets.len() {
        let of = |l: Label| {
            instance
                .points
                .iter()
                .position(|p| p.gadget == g && p.label == l)
                .expect("helper present")
        };
        let (i, j) = (of(Label::I), of(Label::J));
        let cluster = rows[1][i];
        let members = rows[1].iter().filter(|&&c| c == cluster).count();
        if rows[1][j] != cluster || members != 2 {
            return Err(unreachable(format!(
                "helpers of gadget {g} do not form their own cluster"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::squared_distance;

    fn params(t: usize) -> ConstructionParams {
        ConstructionParams::reference(t).unwrap()
    }

    #[test]
    fn counts_add_two_points_and_one_center_per_gadget() {
        for t in 2..=6 {
            let inst = build_chain_data_point_seeded(&params(t)).unwrap();
            assert_eq!(inst.points.len(), 9 * (t - 1) + 1);
            assert_eq!(inst.centers.len(), 3 * (t - 1) + 1);
        }
    }

    #[test]
    fn helpers_have_unit_weight_and_share_x() {
        let inst = build_chain_data_point_seeded(&params(3)).unwrap();
        for g in &inst.gadgets[1..] {
            let a = g.position(Label::A);
            for p in inst
                .points
                .iter()
                .filter(|p| p.gadget == g.index && p.label.is_auxiliary())
            {
                assert_eq!(p.weight, 1);
                assert!((p.position.x - a.x).abs() <= 1e-12 * g.inner_radius);
                assert!(p.position.y < a.y);
            }
        }
    }

    #[test]
    fn centers_sit_on_data_points() {
        let inst = build_chain_data_point_seeded(&params(4)).unwrap();
        for c in &inst.centers {
            assert!(inst.points.iter().any(|p| p.position == c.position));
        }
        let d: Vec<Vec<f64>> = inst
            .points
            .iter()
            .map(|p| {
                inst.centers
                    .iter()
                    .map(|c| squared_distance(p.position, c.position))
                    .collect()
            })
            .collect();
        let i1 = inst
            .points
            .iter()
            .position(|p| p.gadget == 1 && p.label == Label::I)
            .unwrap();
        let own = inst
            .centers
            .iter()
            .position(|c| c.position == inst.points[i1].position)
            .unwrap();
        let best = d[i1].iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(d[i1][own], best);
        assert_eq!(d[i1].iter().filter(|&&x| x == best).count(), 1);
    }

    #[test]
    fn single_gadget_rejected() {
        assert!(build_chain_data_point_seeded(&params(1)).is_err());
    }

    #[test]
    fn moving_helpers_far_breaks_the_check() {
        let mut inst = build_seeded_in::<f64>(&params(3)).unwrap();
        // push every I/J far below, so A no longer joins the I center
        for p in inst.points.iter_mut().filter(|p| p.label.is_auxiliary()) {
            p.position.y -= 10.0 * inst.gadgets[p.gadget].inner_radius;
        }
        for (k, c) in inst.centers.iter_mut().enumerate() {
            if k > 0 && k % 3 != 1 {
                c.position.y -= 10.0 * inst.gadgets[c.gadget].inner_radius;
            }
        }
        let err = check_seeded_reaches_morning(&inst).unwrap_err();
        assert!(matches!(err, Error::VariantUnreachable(_)), "{err}");
    }
}
