use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::construction::{build_gadgets, Center, ConstructionParams, Gadget, Instance, Variant};
use crate::error::{Error, Result};
use crate::geometry::{Label, Point, WeightedPoint};
use crate::scalar::{DoubleDouble, Precision};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct PointRow {
    x: f64,
    y: f64,
    w: u64,
    gadget: usize,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct CenterRow {
    x: f64,
    y: f64,
    gadget: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    format_version: u32,
    variant: Variant,
    precision: Precision,
    params: ConstructionParams,
    points: Vec<PointRow>,
    centers: Vec<CenterRow>,
}

/// Writes `instance` as JSON with one point or center per line. Floats use
/// the shortest representation that reads back to the same value.
pub fn write_instance<W: Write>(mut out: W, instance: &Instance) -> Result<()> {
    writeln!(out, "{{")?;
    writeln!(out, "  \"format_version\": {FORMAT_VERSION},")?;
    writeln!(
        out,
        "  \"variant\": {},",
        serde_json::to_string(&instance.variant)?
    )?;
    writeln!(
        out,
        "  \"precision\": {},",
        serde_json::to_string(&instance.precision)?
    )?;
    writeln!(
        out,
        "  \"params\": {},",
        serde_json::to_string(&instance.params)?
    )?;
    writeln!(out, "  \"points\": [")?;
    for (i, p) in instance.points.iter().enumerate() {
        let row = PointRow {
            x: p.position.x,
            y: p.position.y,
            w: p.weight,
            gadget: p.gadget,
            label: p.label.to_string(),
        };
        let sep = if i + 1 < instance.points.len() {
            ","
        } else {
            ""
        };
        writeln!(out, "    {}{sep}", serde_json::to_string(&row)?)?;
    }
    writeln!(out, "  ],")?;
    writeln!(out, "  \"centers\": [")?;
    for (i, c) in instance.centers.iter().enumerate() {
        let row = CenterRow {
            x: c.position.x,
            y: c.position.y,
            gadget: c.gadget,
        };
        let sep = if i + 1 < instance.centers.len() {
            ","
        } else {
            ""
        };
        writeln!(out, "    {}{sep}", serde_json::to_string(&row)?)?;
    }
    writeln!(out, "  ]")?;
    writeln!(out, "}}")?;
    out.flush()?;
    Ok(())
}

pub fn write_instance_file(path: &Path, instance: &Instance) -> Result<()> {
    write_instance(BufWriter::new(File::create(path)?), instance)
}

/// Reads and checks an instance file. Gadget bookkeeping is rebuilt from the
/// stored parameters on the stored precision.
pub fn read_instance<R: Read>(input: R) -> Result<Instance> {
    let raw: RawFile = serde_json::from_reader(input).map_err(|e| Error::Format(e.to_string()))?;
    if raw.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            raw.format_version
        )));
    }
    let p = raw.params;
    let params = ConstructionParams::new(
        p.delta,
        p.lambda,
        p.weights,
        p.r0,
        p.f_position,
        p.num_gadgets,
        Some(p.epsilon),
    )?;
    if params != p {
        return Err(Error::Format(
            "stored parameters do not survive re-validation".into(),
        ));
    }
    let gadgets: Vec<Gadget> = match raw.precision {
        Precision::Double => build_gadgets::<f64>(&params)?,
        Precision::Extended => build_gadgets::<DoubleDouble>(&params)?
            .iter()
            .map(Gadget::to_f64)
            .collect(),
    };
    let t = params.num_gadgets;
    let finite = |x: f64, y: f64, what: &str| {
        if x.is_finite() && y.is_finite() {
            Ok(Point::new(x, y))
        } else {
            Err(Error::Format(format!("{what} has a non-finite coordinate")))
        }
    };
    let mut points = Vec::with_capacity(raw.points.len());
    for (i, row) in raw.points.iter().enumerate() {
        let label: Label = row.label.parse()?;
        if row.gadget >= t {
            return Err(Error::Format(format!(
                "point {i} names gadget {} of {t}",
                row.gadget
            )));
        }
        if label.is_auxiliary() && raw.variant != Variant::DataPoints {
            return Err(Error::Format(format!(
                "point {i} is a helper point outside the data-point variant"
            )));
        }
        let pos = finite(row.x, row.y, &format!("point {i}"))?;
        points.push(
            WeightedPoint::new(pos, row.w, row.gadget, label)
                .map_err(|e| Error::Format(e.to_string()))?,
        );
    }
    let mut centers = Vec::with_capacity(raw.centers.len());
    for (i, row) in raw.centers.iter().enumerate() {
        if row.gadget >= t {
            return Err(Error::Format(format!(
                "center {i} names gadget {} of {t}",
                row.gadget
            )));
        }
        centers.push(Center {
            position: finite(row.x, row.y, &format!("center {i}"))?,
            gadget: row.gadget,
        });
    }
    if points.is_empty() || centers.is_empty() {
        return Err(Error::Format(
            "instance needs at least one point and one center".into(),
        ));
    }
    Ok(Instance {
        params,
        variant: raw.variant,
        precision: raw.precision,
        gadgets,
        points,
        centers,
    })
}

pub fn read_instance_file(path: &Path) -> Result<Instance> {
    read_instance(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_chain, build_chain_data_point_seeded, build_chain_in};
    use crate::geometry::expand_weights;

    fn roundtrip(inst: &Instance) -> (Vec<u8>, Instance, Vec<u8>) {
        let mut a = Vec::new();
        write_instance(&mut a, inst).unwrap();
        let back = read_instance(a.as_slice()).unwrap();
        let mut b = Vec::new();
        write_instance(&mut b, &back).unwrap();
        (a, back, b)
    }

    #[test]
    fn byte_identical_round_trip() {
        for t in [1, 2, 5, 9] {
            let inst = build_chain(&ConstructionParams::reference(t).unwrap()).unwrap();
            let (a, back, b) = roundtrip(&inst);
            assert_eq!(a, b);
            assert_eq!(back, inst);
        }
    }

    #[test]
    fn variants_and_precisions_round_trip() {
        let p = ConstructionParams::reference(4).unwrap();
        let seeded = build_chain_data_point_seeded(&p).unwrap();
        assert_eq!(roundtrip(&seeded).1, seeded);
        let ext = build_chain_in::<DoubleDouble>(&p).unwrap();
        assert_eq!(roundtrip(&ext).1, ext);
        let expanded =
            expand_weights(&build_chain(&p.with_num_gadgets(2)).unwrap(), 1e-12).unwrap();
        let (a, back, b) = roundtrip(&expanded);
        assert_eq!(a, b);
        assert_eq!(back, expanded);
    }

    #[test]
    fn one_point_per_line() {
        let inst = build_chain(&ConstructionParams::reference(3).unwrap()).unwrap();
        let mut out = Vec::new();
        write_instance(&mut out, &inst).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().filter(|l| l.contains("\"label\"")).count(), 15);
        assert_eq!(
            text.lines()
                .filter(|l| l.trim_start().starts_with("{\"x\""))
                .count(),
            20
        );
    }

    #[test]
    fn malformed_files_rejected() {
        let inst = build_chain(&ConstructionParams::reference(2).unwrap()).unwrap();
        let mut out = Vec::new();
        write_instance(&mut out, &inst).unwrap();
        let text = String::from_utf8(out).unwrap();
        for bad in [
            text.replacen("\"label\":\"A\"", "\"label\":\"Z\"", 1),
            text.replacen("\"format_version\": 1", "\"format_version\": 7", 1),
            text.replacen("\"w\":400", "\"w\":0", 1),
            text.replacen("\"gadget\":1", "\"gadget\":5", 1),
            text[..text.len() / 2].to_string(),
        ] {
            let err = read_instance(bad.as_bytes()).unwrap_err();
            assert!(matches!(err, Error::Format(_)), "{err}");
        }
    }
}
