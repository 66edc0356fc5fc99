//! JSON documents: shifts with cylinders or derived sequences, potentials,
//! and torus target descriptions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bc::{derive_sequence, BcError, CylinderSequence};
use crate::gibbs::{GibbsError, Potential};
use crate::shift::{Cylinder, Interval, ShiftError, Symbol, TransitionMatrix};
use crate::toral::{Rectangle, ShrinkingSquares, ToralError, ToralMap};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("symbol {0} does not fit the alphabet")]
    Symbol(i64),
    #[error("document has no cylinders")]
    NoCylinders,
    #[error("unknown measure law {0:?}; expected \"c_over_n\"")]
    UnknownLaw(String),
    #[error("generator parameter {name} = {value} must be positive and finite")]
    BadParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Gibbs(#[from] GibbsError),
    #[error(transparent)]
    Sequence(#[from] BcError),
    #[error(transparent)]
    Toral(#[from] ToralError),
}

fn symbols(raw: &[i64]) -> Result<Vec<Symbol>, IoError> {
    raw.iter()
        .map(|&s| Symbol::try_from(s).map_err(|_| IoError::Symbol(s)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderDoc {
    pub lo: i64,
    pub hi: i64,
    pub word: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeriveDoc {
    pub lengths: Vec<u64>,
}

/// `{"matrix": [[0/1, …], …], "cylinders": [{"lo", "hi", "word"}], "derive": {"lengths": […]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftDoc {
    pub matrix: Vec<Vec<i64>>,
    #[serde(default)]
    pub cylinders: Vec<CylinderDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derive: Option<DeriveDoc>,
}

/// A validated shift document.
#[derive(Debug, Clone)]
pub struct ShiftSpec {
    pub matrix: TransitionMatrix,
    pub cylinders: Vec<Cylinder>,
    pub lengths: Option<Vec<u64>>,
}

impl ShiftSpec {
    /// The explicit sequence of cylinders, or the sequence derived from them
    /// as base cylinders when lengths are present.
    pub fn sequence(&self) -> Result<CylinderSequence, IoError> {
        if self.cylinders.is_empty() {
            return Err(IoError::NoCylinders);
        }
        Ok(match &self.lengths {
            Some(l) => derive_sequence(self.cylinders.clone(), l.clone())?,
            None => CylinderSequence::explicit(self.cylinders.clone())?,
        })
    }
}

pub fn parse_shift(text: &str) -> Result<ShiftSpec, IoError> {
    let doc: ShiftDoc = serde_json::from_str(text)?;
    let matrix = TransitionMatrix::from_integers(&doc.matrix)?;
    let cylinders = doc
        .cylinders
        .iter()
        .map(|c| {
            let iv = Interval::new(c.lo, c.hi)?;
            Ok(Cylinder::on(&matrix, iv, symbols(&c.word)?)?)
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(ShiftSpec {
        matrix,
        cylinders,
        lengths: doc.derive.map(|d| d.lengths),
    })
}

pub fn shift_doc(a: &TransitionMatrix, cylinders: &[Cylinder], lengths: Option<&[u64]>) -> ShiftDoc {
    ShiftDoc {
        matrix: a.entries().iter().map(|r| r.iter().map(|&x| i64::from(x)).collect()).collect(),
        cylinders: cylinders
            .iter()
            .map(|c| CylinderDoc {
                lo: c.interval().lo(),
                hi: c.interval().hi(),
                word: c.word().iter().map(|&s| i64::from(s)).collect(),
            })
            .collect(),
        derive: lengths.map(|l| DeriveDoc { lengths: l.to_vec() }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockValue {
    pub block: Vec<i64>,
    pub value: f64,
}

/// `{"memory": m, "values": [{"block": [symbols], "value": x}, …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialDoc {
    pub memory: usize,
    pub values: Vec<BlockValue>,
}

pub fn parse_potential(text: &str, a: &TransitionMatrix) -> Result<Potential, IoError> {
    let doc: PotentialDoc = serde_json::from_str(text)?;
    let values = doc
        .values
        .iter()
        .map(|bv| Ok((symbols(&bv.block)?, bv.value)))
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(Potential::new(a, doc.memory, values)?)
}

pub fn potential_doc(phi: &Potential) -> PotentialDoc {
    PotentialDoc {
        memory: phi.memory(),
        values: phi
            .entries()
            .map(|(b, v)| BlockValue {
                block: b.iter().map(|&s| i64::from(s)).collect(),
                value: v,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectDoc {
    pub center: [f64; 2],
    pub du: f64,
    pub ds: f64,
}

fn default_law() -> String {
    "c_over_n".to_owned()
}

fn default_c() -> f64 {
    1.0
}

fn default_cap() -> f64 {
    0.001
}

/// Either an explicit list of rectangles or a shrinking-square generator
/// with `Leb(R_n) = min(cap, c/n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetsDoc {
    List { targets: Vec<RectDoc> },
    Generator {
        center: [f64; 2],
        #[serde(default = "default_law")]
        measure_law: String,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_cap")]
        cap: f64,
        aspect: f64,
    },
}

/// `{"map": [[a, b], [c, d]], …targets}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleDoc {
    pub map: [[i64; 2]; 2],
    #[serde(flatten)]
    pub targets: TargetsDoc,
}

#[derive(Debug, Clone)]
pub enum TorusTargets {
    List(Vec<Rectangle>),
    Shrinking(ShrinkingSquares),
}

#[derive(Debug, Clone)]
pub struct RectangleSpec {
    pub map: ToralMap,
    pub targets: TorusTargets,
}

fn positive(name: &'static str, value: f64) -> Result<f64, IoError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(IoError::BadParameter { name, value })
    }
}

/// Parses a rectangle document; explicit rectangles get quasiround indices
/// for `(eps0, eps1)`.
pub fn parse_rectangles(text: &str, eps0: f64, eps1: f64) -> Result<RectangleSpec, IoError> {
    let doc: RectangleDoc = serde_json::from_str(text)?;
    let map = ToralMap::new(doc.map)?;
    let targets = match doc.targets {
        TargetsDoc::List { targets } => TorusTargets::List(
            targets
                .iter()
                .map(|r| Rectangle::new(&map, r.center, r.du, r.ds, eps0, eps1))
                .collect::<Result<_, _>>()?,
        ),
        TargetsDoc::Generator {
            center,
            measure_law,
            c,
            cap,
            aspect,
        } => {
            if measure_law != "c_over_n" {
                return Err(IoError::UnknownLaw(measure_law));
            }
            for (i, x) in center.iter().enumerate() {
                if !x.is_finite() {
                    return Err(IoError::BadParameter {
                        name: if i == 0 { "center.x" } else { "center.y" },
                        value: *x,
                    });
                }
            }
            TorusTargets::Shrinking(ShrinkingSquares::new(
                &map,
                center,
                positive("cap", cap)?,
                positive("c", c)?,
                positive("aspect", aspect)?,
            ))
        }
    };
    Ok(RectangleSpec { map, targets })
}
