//! The canonical gadget: inner radius 1, anchor `P` at the origin.
//!
//! Every non-leaf gadget of a chain is this configuration scaled by its inner
//! radius and translated to its anchor.

use crate::construction::params::{ConstructionParams, GadgetWeights};
use crate::error::{Error, Result};
use crate::geometry::{squared_distance, weighted_mean_iter, Label, Point};
use crate::scalar::Scalar;

/// Labels of the morning cluster holding `A`, `B`, `C`, `P`, `Q`.
pub const CLUSTER_M: [Label; 5] = [Label::A, Label::B, Label::C, Label::P, Label::Q];
/// Labels of the morning cluster holding everything but `A`.
pub const CLUSTER_N: [Label; 6] = [Label::B, Label::C, Label::D, Label::E, Label::P, Label::Q];
/// Labels whose mean is the sleeping position `S*`.
pub const CLUSTER_S: [Label; 4] = [Label::A, Label::B, Label::C, Label::D];

pub const STRETCH_LABELS: [Label; 4] = [Label::A, Label::B, Label::C, Label::D];

#[derive(Debug, Clone, Copy)]
pub struct UnitGadget<S> {
    pub delta: S,
    pub lambda: S,
    pub weights: GadgetWeights,
    pub p: Point<S>,
    pub q: Point<S>,
    pub a: Point<S>,
    pub b: Point<S>,
    pub c: Point<S>,
    pub d: Point<S>,
    pub e: Point<S>,
    pub inner_radius: S,
    pub outer_radius: S,
    pub s_star: Point<S>,
    /// Stretches of `A`, `B`, `C`, `D` in that order.
    pub stretches: [S; 4],
}

impl<S: Scalar> UnitGadget<S> {
    pub fn point(&self, label: Label) -> Point<S> {
        match label {
            Label::P => self.p,
            Label::Q => self.q,
            Label::A => self.a,
            Label::B => self.b,
            Label::C => self.c,
            Label::D => self.d,
            Label::E => self.e,
            other => panic!("label {other} is not part of the unit gadget"),
        }
    }

    pub fn mean_of(&self, labels: &[Label]) -> Point<S> {
        weighted_mean_iter(labels.iter().map(|&l| (self.point(l), self.weights.of(l))))
            .expect("labels are non-empty with positive weights")
    }

    pub fn stretch_of(&self, label: Label) -> S {
        let idx = STRETCH_LABELS
            .iter()
            .position(|&l| l == label)
            .unwrap_or_else(|| panic!("no stretch defined for {label}"));
        self.stretches[idx]
    }

    pub fn y_c(&self) -> S {
        self.c.y
    }

    pub fn y_d(&self) -> S {
        self.d.y
    }
}

fn checked_sqrt<S: Scalar>(quantity: &'static str, radicand: S) -> Result<S> {
    if radicand > S::zero() && radicand.is_finite() {
        Ok(radicand.sqrt())
    } else {
        Err(Error::NegativeRadicand {
            quantity,
            value: radicand.to_f64(),
        })
    }
}

/// Heights of `C` and `D` on the line `x = 1`, fixed by requiring both
/// morning-type means to sit at distance `1 + delta` from the anchor.
pub fn unit_heights<S: Scalar>(params: &ConstructionParams) -> Result<(S, S)> {
    let w = &params.weights;
    let ws = |l: Label| S::from_u64(w.of(l));
    let one = S::one();
    let half = S::from_f64(0.5);
    let delta = S::from_f64(params.delta);
    let lambda = S::from_f64(params.lambda);
    let outer = one + delta;

    let w_m = S::from_u64(w.total(&CLUSTER_M));
    let x_sum_m = ws(Label::A) + ws(Label::B) + ws(Label::C) + ws(Label::Q) * lambda;
    let rad_c = (w_m * outer).square() - x_sum_m.square();
    let y_c = checked_sqrt("y_C", rad_c)? / ws(Label::C);

    let w_n = S::from_u64(w.total(&CLUSTER_N));
    let x_sum_n = ws(Label::B) + ws(Label::C) + ws(Label::D) + ws(Label::Q) * lambda;
    let rad_d = (w_n * outer).square() - x_sum_n.square();
    let root = checked_sqrt("y_D", rad_d)?;
    let y_d = (root - ws(Label::B) * half - ws(Label::C) * y_c - ws(Label::E)).abs() / ws(Label::D);
    Ok((y_c, y_d))
}

/// Stretch of `label` from `S*` with respect to the mean of `{E, P, Q}`.
pub fn stretch<S: Scalar>(unit: &UnitGadget<S>, label: Label) -> Result<S> {
    if !STRETCH_LABELS.contains(&label) {
        return Err(Error::InvalidParams(format!(
            "stretch is undefined for {label}"
        )));
    }
    let z = unit.point(label);
    let epq = unit.mean_of(&[Label::E, Label::P, Label::Q]);
    let radicand = squared_distance(z, epq) - squared_distance(z, unit.s_star);
    let name = match label {
        Label::A => "stretch of A",
        Label::B => "stretch of B",
        Label::C => "stretch of C",
        _ => "stretch of D",
    };
    checked_sqrt(name, radicand)
}

pub fn build_unit_gadget<S: Scalar>(params: &ConstructionParams) -> Result<UnitGadget<S>> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
    if !(params.lambda < 1.0) {
        return Err(Error::InvalidParams(format!(
            "lambda = {} must be below 1",
            params.lambda
        )));
    }
    let (y_c, y_d) = unit_heights::<S>(params)?;
    let zero = S::zero();
    let one = S::one();
    let half = S::from_f64(0.5);
    let delta = S::from_f64(params.delta);
    let lambda = S::from_f64(params.lambda);
    let mut unit = UnitGadget {
        delta,
        lambda,
        weights: params.weights,
        p: Point::new(zero, zero),
        q: Point::new(lambda, zero),
        a: Point::new(one, -half),
        b: Point::new(one, half),
        c: Point::new(one, y_c),
        d: Point::new(one, y_d),
        e: Point::new(zero, one),
        inner_radius: one,
        outer_radius: one + delta,
        s_star: Point::origin(),
        stretches: [zero; 4],
    };
    unit.s_star = unit.mean_of(&CLUSTER_S);
    for (i, &l) in STRETCH_LABELS.iter().enumerate() {
        unit.stretches[i] = stretch(&unit, l)?;
    }
    Ok(unit)
}

/// The four expressions bounding `epsilon` from above, evaluated with the
/// rational weights.
pub fn epsilon_bound_terms<S: Scalar>(unit: &UnitGadget<S>) -> [S; 4] {
    let w = &unit.weights;
    let one = S::one();
    let outer = unit.outer_radius;
    let sa = unit.stretch_of(Label::A);
    let sb = unit.stretch_of(Label::B);
    let w_f = w.rational::<S>(Label::F);
    let w_p = w.rational::<S>(Label::P);
    let w_q = w.rational::<S>(Label::Q);
    [
        squared_distance(unit.s_star, unit.c) / outer.square(),
        unit.lambda / outer,
        (sa - sb) / sa,
        one - (one + unit.lambda * w_q) * (w_f + w_p + w_q) / (outer * w_f),
    ]
}

pub fn epsilon_upper_bound<S: Scalar>(unit: &UnitGadget<S>) -> Result<S> {
    let terms = epsilon_bound_terms(unit);
    let bound = terms[1..].iter().fold(terms[0], |m, &v| m.min(v));
    if bound > S::zero() {
        Ok(bound)
    } else {
        Err(Error::NonPositiveBound {
            value: bound.to_f64(),
        })
    }
}

/// Inner radius of the next gadget up the chain.
pub fn next_radius<S: Scalar>(inner_radius: S, unit: &UnitGadget<S>) -> S {
    let w = &unit.weights;
    let ws = |l: Label| S::from_u64(w.of(l));
    let weight_ratio = (ws(Label::F) + ws(Label::P) + ws(Label::Q))
        / (ws(Label::P) + (S::one() + unit.lambda) * ws(Label::Q));
    inner_radius / unit.outer_radius * weight_ratio * unit.stretch_of(Label::A)
}

/// Ratio between consecutive inner radii.
pub fn growth_factor<S: Scalar>(unit: &UnitGadget<S>) -> S {
    next_radius(S::one(), unit)
}
