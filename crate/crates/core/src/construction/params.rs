use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::construction::unit::{build_unit_gadget, epsilon_upper_bound};
use crate::error::{Error, Result};
use crate::geometry::{Label, Point};
use crate::scalar::Scalar;

/// Integer point weights shared by every non-leaf gadget, plus the weight of
/// the leaf point `F`.
///
/// `scale` is the factor by which the stored integers exceed the rational
/// weights the stability inequalities are stated in (`w_Q = 1/100` is stored
/// as `1` with `scale = 100`). Means do not depend on it; the few inequalities
/// that are not homogeneous in the weights use [`GadgetWeights::rational`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights", into = "RawWeights")]
pub struct GadgetWeights {
    p: u64,
    q: u64,
    a: u64,
    b: u64,
    c: u64,
    d: u64,
    e: u64,
    f: u64,
    scale: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawWeights {
    p: u64,
    q: u64,
    a: u64,
    b: u64,
    c: u64,
    d: u64,
    e: u64,
    f: u64,
    scale: u64,
}

impl TryFrom<RawWeights> for GadgetWeights {
    type Error = Error;

    fn try_from(r: RawWeights) -> Result<Self> {
        GadgetWeights::new(r.p, r.q, r.a, r.b, r.c, r.d, r.e, r.scale).and_then(|w| {
            if w.f != r.f {
                Err(Error::InvalidWeights(format!(
                    "w_F = {} but w_A + w_B + w_C + w_D = {}",
                    r.f, w.f
                )))
            } else {
                Ok(w)
            }
        })
    }
}

impl From<GadgetWeights> for RawWeights {
    fn from(w: GadgetWeights) -> Self {
        RawWeights {
            p: w.p,
            q: w.q,
            a: w.a,
            b: w.b,
            c: w.c,
            d: w.d,
            e: w.e,
            f: w.f,
            scale: w.scale,
        }
    }
}

impl GadgetWeights {
    /// `w_F` is derived as `w_A + w_B + w_C + w_D`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(p: u64, q: u64, a: u64, b: u64, c: u64, d: u64, e: u64, scale: u64) -> Result<Self> {
        let all = [
            ("P", p),
            ("Q", q),
            ("A", a),
            ("B", b),
            ("C", c),
            ("D", d),
            ("E", e),
        ];
        if let Some((name, _)) = all.iter().find(|(_, w)| *w == 0) {
            return Err(Error::InvalidWeights(format!("w_{name} must be positive")));
        }
        if scale == 0 {
            return Err(Error::InvalidWeights(
                "weight scale must be positive".into(),
            ));
        }
        if a != b {
            return Err(Error::InvalidWeights(format!(
                "w_A = {a} differs from w_B = {b}"
            )));
        }
        Ok(GadgetWeights {
            p,
            q,
            a,
            b,
            c,
            d,
            e,
            f: a + b + c + d,
            scale,
        })
    }

    /// Table weights (P=1, Q=0.01, A=B=4, C=11, D=31, E=274) times 100.
    pub fn reference() -> Self {
        GadgetWeights::new(100, 1, 400, 400, 1100, 3100, 27400, 100)
            .expect("reference weights are consistent")
    }

    pub fn of(&self, label: Label) -> u64 {
        match label {
            Label::P => self.p,
            Label::Q => self.q,
            Label::A => self.a,
            Label::B => self.b,
            Label::C => self.c,
            Label::D => self.d,
            Label::E => self.e,
            Label::F => self.f,
            Label::I | Label::J => 1,
        }
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    /// Weight in the units the stability inequalities are written in.
    pub fn rational<S: Scalar>(&self, label: Label) -> S {
        S::from_u64(self.of(label)) / S::from_u64(self.scale)
    }

    /// Total stored weight of a set of labels.
    pub fn total(&self, labels: &[Label]) -> u64 {
        labels.iter().map(|&l| self.of(l)).sum()
    }

    pub fn rational_total<S: Scalar>(&self, labels: &[Label]) -> S {
        S::from_u64(self.total(labels)) / S::from_u64(self.scale)
    }
}

/// Initial-center scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Seeds are the means of every gadget's morning clusters.
    #[default]
    MorningMeans,
    /// Seeds sit on data points (`E`, plus helper points `I`, `J` per gadget).
    DataPoints,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "morning-means" | "morning" => Ok(Variant::MorningMeans),
            "datapoints" | "data-points" => Ok(Variant::DataPoints),
            other => Err(Error::InvalidParams(format!(
                "unknown variant `{other}` (expected morning-means or datapoints)"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::MorningMeans => f.write_str("morning-means"),
            Variant::DataPoints => f.write_str("data-points"),
        }
    }
}

pub const REFERENCE_DELTA: f64 = 0.025;
pub const REFERENCE_LAMBDA: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub delta: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub weights: GadgetWeights,
    /// Inner radius of the leaf gadget.
    pub r0: f64,
    pub f_position: Point,
    pub num_gadgets: usize,
}

impl ConstructionParams {
    /// Reference parameters with `epsilon` at half its upper bound.
    pub fn reference(num_gadgets: usize) -> Result<Self> {
        Self::new(
            REFERENCE_DELTA,
            REFERENCE_LAMBDA,
            GadgetWeights::reference(),
            1.0,
            Point::new(0.0, 0.0),
            num_gadgets,
            None,
        )
    }

    /// Builds and checks parameters. Without an explicit `epsilon` the
    /// midpoint of the admissible interval is used.
    pub fn new(
        delta: f64,
        lambda: f64,
        weights: GadgetWeights,
        r0: f64,
        f_position: Point,
        num_gadgets: usize,
        epsilon: Option<f64>,
    ) -> Result<Self> {
        let mut params = ConstructionParams {
            delta,
            lambda,
            epsilon: 0.5,
            weights,
            r0,
            f_position,
            num_gadgets,
        };
        params.check_ranges()?;
        let unit = build_unit_gadget::<f64>(&params)?;
        let bound = epsilon_upper_bound(&unit)?;
        params.epsilon = match epsilon {
            None => bound / 2.0,
            Some(e) if e > 0.0 && e < bound => e,
            Some(e) => {
                return Err(Error::InvalidParams(format!(
                    "epsilon {e:e} outside the admissible interval (0, {bound:e})"
                )))
            }
        };
        Ok(params)
    }

    /// Range checks that do not need the unit gadget.
    pub fn check_ranges(&self) -> Result<()> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!(
                    "{name} = {v} must lie in (0, 1)"
                )))
            }
        };
        open_unit("delta", self.delta)?;
        open_unit("lambda", self.lambda)?;
        open_unit("epsilon", self.epsilon)?;
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "r0 = {} must be positive",
                self.r0
            )));
        }
        if !self.f_position.is_finite() {
            return Err(Error::InvalidParams("F position must be finite".into()));
        }
        if self.num_gadgets == 0 {
            return Err(Error::InvalidParams(
                "at least one gadget is required".into(),
            ));
        }
        Ok(())
    }

    pub fn with_num_gadgets(mut self, t: usize) -> Self {
        self.num_gadgets = t;
        self
    }

    pub fn with_f_position(mut self, f: Point) -> Self {
        self.f_position = f;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_weights_scaled_to_integers() {
        let w = GadgetWeights::reference();
        assert_eq!(w.of(Label::P), 100);
        assert_eq!(w.of(Label::Q), 1);
        assert_eq!(w.of(Label::A), 400);
        assert_eq!(w.of(Label::B), 400);
        assert_eq!(w.of(Label::C), 1100);
        assert_eq!(w.of(Label::D), 3100);
        assert_eq!(w.of(Label::E), 27400);
        assert_eq!(w.of(Label::F), 5000);
        assert_eq!(w.rational::<f64>(Label::Q), 0.01);
        assert_eq!(w.rational::<f64>(Label::F), 50.0);
    }

    #[test]
    fn unequal_a_b_rejected() {
        let err = GadgetWeights::new(100, 1, 400, 401, 1100, 3100, 27400, 100).unwrap_err();
        assert!(matches!(err, Error::InvalidWeights(_)));
    }

    #[test]
    fn inconsistent_f_rejected_on_deserialize() {
        let json =
            r#"{"p":100,"q":1,"a":400,"b":400,"c":1100,"d":3100,"e":27400,"f":4999,"scale":100}"#;
        assert!(serde_json::from_str::<GadgetWeights>(json).is_err());
        let ok = json.replace("4999", "5000");
        assert_eq!(
            serde_json::from_str::<GadgetWeights>(&ok).unwrap(),
            GadgetWeights::reference()
        );
    }

    #[test]
    fn default_epsilon_is_half_the_bound() {
        let p = ConstructionParams::reference(3).unwrap();
        let bound = REFERENCE_LAMBDA / (1.0 + REFERENCE_DELTA);
        assert!((p.epsilon - bound / 2.0).abs() < 1e-18);
        assert!(p.epsilon > 0.0 && p.epsilon < bound);
    }

    #[test]
    fn epsilon_override_checked() {
        let mk = |e| {
            ConstructionParams::new(
                REFERENCE_DELTA,
                REFERENCE_LAMBDA,
                GadgetWeights::reference(),
                1.0,
                Point::new(0.0, 0.0),
                2,
                Some(e),
            )
        };
        assert!(mk(1e-6).is_ok());
        assert!(mk(1e-5).is_err());
        assert!(mk(0.0).is_err());
    }

    #[test]
    fn range_errors() {
        let base = ConstructionParams::reference(2).unwrap();
        for bad in [
            ConstructionParams { delta: 1.0, ..base },
            ConstructionParams {
                lambda: 0.0,
                ..base
            },
            ConstructionParams { r0: -1.0, ..base },
            ConstructionParams {
                num_gadgets: 0,
                ..base
            },
        ] {
            assert!(bad.check_ranges().is_err());
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(
            "datapoints".parse::<Variant>().unwrap(),
            Variant::DataPoints
        );
        assert_eq!(
            "morning-means".parse::<Variant>().unwrap(),
            Variant::MorningMeans
        );
        assert!("random".parse::<Variant>().is_err());
    }
}
