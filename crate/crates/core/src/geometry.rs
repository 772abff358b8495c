//! Planar points, labels, weighted means and weight expansion.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::construction::Instance;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<S = f64> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Point { x, y }
    }

    pub fn origin() -> Self {
        Point::new(S::zero(), S::zero())
    }

    pub fn norm(self) -> S {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn scale(self, s: S) -> Self {
        Point::new(self.x * s, self.y * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn cast<T: Scalar>(self) -> Point<T> {
        Point::new(T::from_f64(self.x.to_f64()), T::from_f64(self.y.to_f64()))
    }

    /// Lossless for f64 -> any backend; rounds for the reverse direction.
    pub fn to_f64(self) -> Point<f64> {
        Point::new(self.x.to_f64(), self.y.to_f64())
    }
}

impl Point<f64> {
    pub fn lift<T: Scalar>(self) -> Point<T> {
        Point::new(T::from_f64(self.x), T::from_f64(self.y))
    }
}

impl<S: Scalar> Add for Point<S> {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        Point::new(self.x + other.x, self.y + other.y)
    }
}

impl<S: Scalar> AddAssign for Point<S> {
    fn add_assign(&mut self, other: Self) {
        *self = *self + other;
    }
}

impl<S: Scalar> Sub for Point<S> {
    type Output = Self;

    fn sub(self, other: Self) -> Self {
        Point::new(self.x - other.x, self.y - other.y)
    }
}

/// Squared Euclidean distance.
#[inline]
pub fn squared_distance<S: Scalar>(a: Point<S>, b: Point<S>) -> S {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

#[inline]
pub fn distance<S: Scalar>(a: Point<S>, b: Point<S>) -> S {
    squared_distance(a, b).sqrt()
}

/// Role of a point inside its gadget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    P,
    Q,
    A,
    B,
    C,
    D,
    E,
    F,
    I,
    J,
}

impl Label {
    pub const ALL: [Label; 10] = [
        Label::P,
        Label::Q,
        Label::A,
        Label::B,
        Label::C,
        Label::D,
        Label::E,
        Label::F,
        Label::I,
        Label::J,
    ];

    /// The seven points of every non-leaf gadget, in placement order.
    pub const GADGET: [Label; 7] = [
        Label::P,
        Label::Q,
        Label::A,
        Label::B,
        Label::C,
        Label::D,
        Label::E,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn bit(self) -> u16 {
        1 << self.index()
    }

    /// Seeding helpers of the data-point variant.
    pub fn is_auxiliary(self) -> bool {
        matches!(self, Label::I | Label::J)
    }

    pub fn as_char(self) -> char {
        match self {
            Label::P => 'P',
            Label::Q => 'Q',
            Label::A => 'A',
            Label::B => 'B',
            Label::C => 'C',
            Label::D => 'D',
            Label::E => 'E',
            Label::F => 'F',
            Label::I => 'I',
            Label::J => 'J',
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| s.len() == 1 && s.starts_with(l.as_char()))
            .ok_or_else(|| Error::Format(format!("unknown point label `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint<S = f64> {
    pub position: Point<S>,
    pub weight: u64,
    pub gadget: usize,
    pub label: Label,
}

impl<S: Scalar> WeightedPoint<S> {
    pub fn new(position: Point<S>, weight: u64, gadget: usize, label: Label) -> Result<Self> {
        if weight == 0 {
            return Err(Error::InvalidWeights(format!(
                "point {label} of gadget {gadget} has zero weight"
            )));
        }
        if label == Label::F && gadget != 0 {
            return Err(Error::InvalidParams(format!(
                "label F is reserved for gadget 0, found on gadget {gadget}"
            )));
        }
        Ok(WeightedPoint {
            position,
            weight,
            gadget,
            label,
        })
    }
}

/// Center of mass `(sum w_x x) / (sum w_x)`.
pub fn weighted_mean<S: Scalar>(points: &[WeightedPoint<S>]) -> Result<Point<S>> {
    weighted_mean_iter(points.iter().map(|p| (p.position, p.weight)))
}

pub fn weighted_mean_iter<S: Scalar>(
    points: impl IntoIterator<Item = (Point<S>, u64)>,
) -> Result<Point<S>> {
    let mut sx = S::zero();
    let mut sy = S::zero();
    let mut total: u64 = 0;
    for (p, w) in points {
        let ws = S::from_u64(w);
        sx += ws * p.x;
        sy += ws * p.y;
        total += w;
    }
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let tw = S::from_u64(total);
    Ok(Point::new(sx / tw, sy / tw))
}

/// Largest admissible expansion radius relative to the leaf inner radius.
pub const MAX_SPACING_RATIO: f64 = 1e-9;
/// Default expansion radius relative to the leaf inner radius.
pub const DEFAULT_SPACING_RATIO: f64 = 1e-12;

/// Replaces every point of weight `w >= 2` by `w` unit-weight copies spread
/// evenly on a circle of radius `spacing` around it. Weight-1 points and all
/// centers are left untouched.
pub fn expand_weights(instance: &Instance, spacing: f64) -> Result<Instance> {
    let limit = MAX_SPACING_RATIO * instance.params.r0;
    if !(spacing > 0.0 && spacing <= limit) {
        return Err(Error::InvalidSpacing { spacing, limit });
    }
    let total: u64 = instance.points.iter().map(|p| p.weight).sum();
    let mut points = Vec::with_capacity(total as usize);
    for p in &instance.points {
        if p.weight == 1 {
            points.push(*p);
            continue;
        }
        let w = p.weight;
        for j in 0..w {
            let theta = TAU * (j as f64) / (w as f64);
            let offset = Point::new(spacing * theta.cos(), spacing * theta.sin());
            points.push(WeightedPoint {
                position: p.position + offset,
                weight: 1,
                gadget: p.gadget,
                label: p.label,
            });
        }
    }
    Ok(Instance {
        points,
        ..instance.clone()
    })
}
