use serde::{Deserialize, Serialize};

use crate::construction::params::{ConstructionParams, Variant};
use crate::construction::unit::{build_unit_gadget, next_radius, UnitGadget, CLUSTER_N, CLUSTER_S};
use crate::error::{Error, Result};
use crate::geometry::{distance, weighted_mean_iter, Label, Point, WeightedPoint};
use crate::scalar::{Precision, Scalar};

/// Offset of `I` below `A`, as a fraction of `d(A, E)`.
pub const SEED_I_FRACTION: f64 = 1.0 - 1e-6;
/// Gap between `I` and `J`, in units of the gadget's inner radius.
pub const SEED_J_GAP: f64 = 1e-7;

/// One gadget of a chain: its points, radii and sleeping position.
#[derive(Debug, Clone, PartialEq)]
pub struct Gadget<S = f64> {
    pub index: usize,
    pub inner_radius: S,
    pub outer_radius: S,
    /// `P_i` for non-leaf gadgets, `F` for the leaf.
    pub anchor: Point<S>,
    pub points: Vec<WeightedPoint<S>>,
    pub s_star: Point<S>,
}

impl<S: Scalar> Gadget<S> {
    pub fn point(&self, label: Label) -> Option<&WeightedPoint<S>> {
        self.points.iter().find(|p| p.label == label)
    }

    pub fn position(&self, label: Label) -> Point<S> {
        self.point(label)
            .unwrap_or_else(|| panic!("gadget {} has no point {label}", self.index))
            .position
    }

    pub fn mean_of(&self, labels: &[Label]) -> Point<S> {
        weighted_mean_iter(labels.iter().map(|&l| {
            let p = self.point(l).expect("label present in gadget");
            (p.position, p.weight)
        }))
        .expect("non-empty label set")
    }

    pub fn is_leaf(&self) -> bool {
        self.index == 0
    }

    /// Non-leaf gadget with the given inner radius and anchor: every point is
    /// the unit-gadget point scaled by `inner_radius` and shifted by `anchor`.
    pub fn from_anchor(
        unit: &UnitGadget<S>,
        index: usize,
        inner_radius: S,
        anchor: Point<S>,
    ) -> Self {
        let points = Label::GADGET
            .iter()
            .map(|&l| WeightedPoint {
                position: anchor + unit.point(l).scale(inner_radius),
                weight: unit.weights.of(l),
                gadget: index,
                label: l,
            })
            .collect();
        let mut g = Gadget {
            index,
            inner_radius,
            outer_radius: unit.outer_radius * inner_radius,
            anchor,
            points,
            s_star: anchor,
        };
        g.s_star = g.mean_of(&CLUSTER_S);
        g
    }

    fn leaf(params: &ConstructionParams) -> Self {
        let f = params.f_position.lift::<S>();
        let r0 = S::from_f64(params.r0);
        Gadget {
            index: 0,
            inner_radius: r0,
            outer_radius: r0 * (S::one() + S::from_f64(params.delta)),
            anchor: f,
            points: vec![WeightedPoint {
                position: f,
                weight: params.weights.of(Label::F),
                gadget: 0,
                label: Label::F,
            }],
            s_star: f,
        }
    }

    pub fn to_f64(&self) -> Gadget<f64> {
        Gadget {
            index: self.index,
            inner_radius: self.inner_radius.to_f64(),
            outer_radius: self.outer_radius.to_f64(),
            anchor: self.anchor.to_f64(),
            points: self
                .points
                .iter()
                .map(|p| WeightedPoint {
                    position: p.position.to_f64(),
                    weight: p.weight,
                    gadget: p.gadget,
                    label: p.label,
                })
                .collect(),
            s_star: self.s_star.to_f64(),
        }
    }
}

/// Places gadget `index` so that its anchor lies `(1 - epsilon) R_i` to the
/// right of the previous gadget's sleeping position.
pub fn place_gadget<S: Scalar>(
    unit: &UnitGadget<S>,
    index: usize,
    inner_radius: S,
    prev_s_star: Point<S>,
    epsilon: S,
) -> Gadget<S> {
    assert!(
        index >= 1,
        "the leaf gadget is not placed from the unit gadget"
    );
    let outer = unit.outer_radius * inner_radius;
    let anchor = Point::new(prev_s_star.x + outer * (S::one() - epsilon), prev_s_star.y);
    Gadget::from_anchor(unit, index, inner_radius, anchor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub position: Point,
    pub gadget: usize,
}

/// A complete k-means input: weighted points, seeds, and the gadget
/// bookkeeping needed to interpret clusterings.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub params: ConstructionParams,
    pub variant: Variant,
    /// Backend the coordinates were computed on before rounding to `f64`.
    pub precision: Precision,
    pub gadgets: Vec<Gadget>,
    pub points: Vec<WeightedPoint>,
    pub centers: Vec<Center>,
}

impl Instance {
    pub fn num_gadgets(&self) -> usize {
        self.gadgets.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    pub fn center_positions(&self) -> Vec<Point> {
        self.centers.iter().map(|c| c.position).collect()
    }

    /// The morning clustering the seeds are the means of: `A_i` alone, the
    /// rest of gadget `i` together, `F` alone. Only defined for the
    /// morning-means variant.
    pub fn seed_assignment(&self) -> Option<Vec<usize>> {
        if self.variant != Variant::MorningMeans {
            return None;
        }
        Some(
            self.points
                .iter()
                .map(|p| match (p.gadget, p.label) {
                    (0, _) => 0,
                    (g, Label::A) => 1 + 2 * (g - 1),
                    (g, _) => 2 + 2 * (g - 1),
                })
                .collect(),
        )
    }

    /// Every coordinate shifted by `v`.
    pub fn translated(&self, v: Point) -> Instance {
        let mut out = self.clone();
        out.params.f_position = self.params.f_position + v;
        for g in &mut out.gadgets {
            g.anchor += v;
            g.s_star += v;
            for p in &mut g.points {
                p.position += v;
            }
        }
        for p in &mut out.points {
            p.position += v;
        }
        for c in &mut out.centers {
            c.position += v;
        }
        out
    }
}

/// Gadget geometry of a chain computed on backend `S`.
pub fn build_gadgets<S: Scalar>(params: &ConstructionParams) -> Result<Vec<Gadget<S>>> {
    params.check_ranges()?;
    let unit = build_unit_gadget::<S>(params)?;
    let epsilon = S::from_f64(params.epsilon);
    let mut gadgets = Vec::with_capacity(params.num_gadgets);
    let leaf = Gadget::<S>::leaf(params);
    let mut radius = leaf.inner_radius;
    let mut prev_s_star = leaf.s_star;
    gadgets.push(leaf);
    for i in 1..params.num_gadgets {
        radius = next_radius(radius, &unit);
        let g = place_gadget(&unit, i, radius, prev_s_star, epsilon);
        prev_s_star = g.s_star;
        gadgets.push(g);
    }
    for g in &gadgets {
        if !g.points.iter().all(|p| p.position.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "coordinates of gadget {} overflow the number range",
                g.index
            )));
        }
    }
    Ok(gadgets)
}

/// Morning-means chain: seeds are `F`, and per gadget `A_i` and the mean of
/// `{B_i, C_i, D_i, E_i, P_i, Q_i}`.
pub fn build_chain(params: &ConstructionParams) -> Result<Instance> {
    build_chain_in::<f64>(params)
}

/// Same as [`build_chain`], with the geometry computed on backend `S` and
/// rounded to `f64` once at the end.
pub fn build_chain_in<S: Scalar>(params: &ConstructionParams) -> Result<Instance> {
    let gadgets = build_gadgets::<S>(params)?;
    let mut points = Vec::with_capacity(7 * gadgets.len());
    let mut centers = Vec::with_capacity(2 * gadgets.len());
    for g in &gadgets {
        let g64 = g.to_f64();
        points.extend(g64.points.iter().copied());
        if g.is_leaf() {
            centers.push(Center {
                position: g64.anchor,
                gadget: 0,
            });
        } else {
            centers.push(Center {
                position: g64.position(Label::A),
                gadget: g.index,
            });
            centers.push(Center {
                position: g.mean_of(&CLUSTER_N).to_f64(),
                gadget: g.index,
            });
        }
    }
    Ok(Instance {
        params: *params,
        variant: Variant::MorningMeans,
        precision: S::PRECISION,
        gadgets: gadgets.iter().map(Gadget::to_f64).collect(),
        points,
        centers,
    })
}

/// Positions of the seeding helpers `I` and `J` of a gadget.
pub(crate) fn seed_helpers<S: Scalar>(g: &Gadget<S>) -> (Point<S>, Point<S>) {
    let a = g.position(Label::A);
    let e = g.position(Label::E);
    let drop = distance(a, e) * S::from_f64(SEED_I_FRACTION);
    let i = Point::new(a.x, a.y - drop);
    let j = Point::new(a.x, i.y - g.inner_radius * S::from_f64(SEED_J_GAP));
    (i, j)
}

pub(crate) fn build_seeded_in<S: Scalar>(params: &ConstructionParams) -> Result<Instance> {
    if params.num_gadgets < 2 {
        return Err(Error::InvalidParams(
            "the data-point variant needs at least two gadgets".into(),
        ));
    }
    let gadgets = build_gadgets::<S>(params)?;
    let mut points = Vec::with_capacity(9 * gadgets.len());
    let mut centers = Vec::with_capacity(3 * gadgets.len());
    for g in &gadgets {
        let g64 = g.to_f64();
        points.extend(g64.points.iter().copied());
        if g.is_leaf() {
            centers.push(Center {
                position: g64.anchor,
                gadget: 0,
            });
            continue;
        }
        let (i, j) = seed_helpers(g);
        let (i, j) = (i.to_f64(), j.to_f64());
        for (label, pos) in [(Label::I, i), (Label::J, j)] {
            points.push(WeightedPoint {
                position: pos,
                weight: params.weights.of(label),
                gadget: g.index,
                label,
            });
        }
        for pos in [g64.position(Label::E), i, j] {
            centers.push(Center {
                position: pos,
                gadget: g.index,
            });
        }
    }
    Ok(Instance {
        params: *params,
        variant: Variant::DataPoints,
        precision: S::PRECISION,
        gadgets: gadgets.iter().map(Gadget::to_f64).collect(),
        points,
        centers,
    })
}
