//! JSON forms of distributions, objectives and experiments.
//!
//! A CDF is written as `{"domain":[lo,hi],"knots":[{"x":…,"left":…,"right":…},…]}`.
//! On input the shorthands `{"kind":"uniform","domain":[a,b]}`,
//! `{"kind":"dirac","at":c}` and `{"kind":"atoms","atoms":[[x,mass],…]}` are
//! also accepted; their domain is `[0, 1]` unless given.

use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dist::{AtomicDist, Cdf, Domain, Knot, QuantileInterval};
use crate::error::{Error, Result};
use crate::experiment::{
    matching_experiment, nam_experiment, Experiment, FiniteEntry, FiniteExperiment, ParametricKind,
};
use crate::objective::Objective;
use crate::unique::unique_experiment;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KnotRepr {
    x: f64,
    left: f64,
    right: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CdfSpec {
    kind: Option<String>,
    domain: Option<[f64; 2]>,
    knots: Option<Vec<KnotRepr>>,
    at: Option<f64>,
    atoms: Option<Vec<(f64, f64)>>,
}

fn domain_of(d: Option<[f64; 2]>) -> Result<Domain> {
    match d {
        Some([lo, hi]) => Domain::new(lo, hi),
        None => Ok(Domain::unit()),
    }
}

impl CdfSpec {
    fn build(self) -> Result<Cdf> {
        let kind = self.kind.as_deref().unwrap_or("knots");
        match kind {
            "knots" => {
                let domain = self
                    .domain
                    .ok_or_else(|| Error::invariant("missing field `domain`"))?;
                let knots = self
                    .knots
                    .ok_or_else(|| Error::invariant("missing field `knots`"))?
                    .into_iter()
                    .map(|k| Knot::new(k.x, k.left, k.right))
                    .collect();
                Cdf::new(domain_of(Some(domain))?, knots)
            }
            "uniform" => Ok(Cdf::uniform(domain_of(self.domain)?)),
            "dirac" => {
                let at = self
                    .at
                    .ok_or_else(|| Error::invariant("missing field `at`"))?;
                Cdf::dirac(domain_of(self.domain)?, at)
            }
            "atoms" => {
                let atoms = self
                    .atoms
                    .ok_or_else(|| Error::invariant("missing field `atoms`"))?;
                Cdf::atoms(domain_of(self.domain)?, &atoms)
            }
            other => Err(Error::invariant(format!(
                "unknown distribution kind {other:?}; expected knots, uniform, dirac or atoms"
            ))),
        }
    }
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo(), self.hi()].serialize(s)
    }
}

impl Serialize for Cdf {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let knots: Vec<KnotRepr> = self
            .knots()
            .iter()
            .map(|k| KnotRepr {
                x: k.x,
                left: k.left,
                right: k.right,
            })
            .collect();
        let mut st = s.serialize_struct("Cdf", 2)?;
        st.serialize_field("domain", &self.domain())?;
        st.serialize_field("knots", &knots)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Cdf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        CdfSpec::deserialize(d)?.build().map_err(D::Error::custom)
    }
}

impl Serialize for AtomicDist {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.atoms().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomicDist {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let atoms = Vec::<(f64, f64)>::deserialize(d)?;
        AtomicDist::new(atoms).map_err(D::Error::custom)
    }
}

impl Serialize for QuantileInterval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(s)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ObjectiveRepr {
    PiecewiseLinear { points: Vec<(f64, f64)> },
    Quadratic { center: f64 },
    Tent { peak: f64 },
}

impl Serialize for Objective {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Objective::PiecewiseLinear(points) => ObjectiveRepr::PiecewiseLinear {
                points: points.clone(),
            },
            Objective::Quadratic { center } => ObjectiveRepr::Quadratic { center: *center },
            Objective::Tent { peak } => ObjectiveRepr::Tent { peak: *peak },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Objective {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ObjectiveRepr::deserialize(d)? {
            ObjectiveRepr::PiecewiseLinear { points } => {
                Objective::piecewise_linear(points).map_err(D::Error::custom)
            }
            ObjectiveRepr::Quadratic { center } => Ok(Objective::quadratic(center)),
            ObjectiveRepr::Tent { peak } => Ok(Objective::tent(peak)),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRepr {
    label: f64,
    weight: f64,
    atoms: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSpec {
    kind: Option<String>,
    prior: Cdf,
    q: Option<f64>,
    target: Option<Cdf>,
    e: Option<f64>,
    n: Option<u32>,
    entries: Option<Vec<EntryRepr>>,
}

impl ExperimentSpec {
    fn build(self) -> Result<Experiment> {
        let need_q = || self.q.ok_or_else(|| Error::invariant("missing field `q`"));
        match self.kind.as_deref() {
            Some("matching") => Ok(matching_experiment(&self.prior, need_q()?)?.into()),
            Some("nam") => Ok(nam_experiment(&self.prior, need_q()?)?.into()),
            Some("unique_impl") => {
                let target = self
                    .target
                    .clone()
                    .ok_or_else(|| Error::invariant("missing field `target`"))?;
                let e = self
                    .e
                    .ok_or_else(|| Error::invariant("missing field `e`"))?;
                let n = self
                    .n
                    .ok_or_else(|| Error::invariant("missing field `n`"))?;
                Ok(unique_experiment(&target, &self.prior, need_q()?, e, n)?.into())
            }
            None | Some("finite") => {
                let entries = self
                    .entries
                    .ok_or_else(|| Error::invariant("missing field `entries`"))?
                    .into_iter()
                    .map(|e| {
                        Ok(FiniteEntry {
                            label: e.label,
                            weight: e.weight,
                            posterior: AtomicDist::new(e.atoms)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(FiniteExperiment::new(self.prior, entries)?.into())
            }
            Some(other) => Err(Error::invariant(format!(
                "unknown experiment kind {other:?}; expected matching, nam, unique_impl or finite"
            ))),
        }
    }
}

impl<'de> Deserialize<'de> for Experiment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ExperimentSpec::deserialize(d)?
            .build()
            .map_err(D::Error::custom)
    }
}

impl Serialize for Experiment {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Experiment::Parametric(p) => {
                let unique = match p.kind() {
                    ParametricKind::UniqueImpl {
                        refinement,
                        e,
                        target,
                    } => Some((target, *e, refinement.level())),
                    _ => None,
                };
                let len = if unique.is_some() { 6 } else { 3 };
                let mut st = s.serialize_struct("Experiment", len)?;
                st.serialize_field("kind", p.kind().name())?;
                st.serialize_field("prior", p.prior())?;
                st.serialize_field("q", &p.q())?;
                if let Some((target, e, n)) = unique {
                    st.serialize_field("target", target)?;
                    st.serialize_field("e", &e)?;
                    st.serialize_field("n", &n)?;
                }
                st.end()
            }
            Experiment::Finite(f) => {
                let entries: Vec<EntryRepr> = f
                    .entries()
                    .iter()
                    .map(|e| EntryRepr {
                        label: e.label,
                        weight: e.weight,
                        atoms: e.posterior.atoms().to_vec(),
                    })
                    .collect();
                let mut st = s.serialize_struct("Experiment", 3)?;
                st.serialize_field("kind", "finite")?;
                st.serialize_field("prior", f.prior())?;
                st.serialize_field("entries", &entries)?;
                st.end()
            }
        }
    }
}
