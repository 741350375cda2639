//! Self-contained experiment instances: one JSON document carrying the
//! quotient, the sampled base, named sections and plain fields, the scale
//! schedule, and the admissible-class parameters. Loading re-validates
//! every module-level invariant and reports errors with field paths.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cheeger::AdmissibleClass;
use crate::error::{Error, Result};
use crate::quotient::{MetricMode, NormTag, QuotientMap, SampledBase};
use crate::section::{PlainField, Section};
use crate::slope::ScaleSchedule;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientDoc {
    pub s: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub norm: NormTag,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol: Option<f64>,
}

/// Base metric in a document: the literal string `"induced"` or an
/// explicit n×n matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricDoc {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseDoc {
    pub points: Vec<Vec<f64>>,
    pub metric: MetricDoc,
    pub weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub labels: Option<Vec<String>>,
}

/// A named section: either explicit values or null-space lift coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionDoc {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub values: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lift: Option<Vec<Vec<f64>>>,
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldDoc {
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleDoc {
    pub radii: Vec<f64>,
}

/// The on-disk shape of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub quotient: QuotientDoc,
    pub base: BaseDoc,
    pub sections: BTreeMap<String, SectionDoc>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub fields: BTreeMap<String, FieldDoc>,
    pub schedule: ScheduleDoc,
    pub class: AdmissibleClass,
}

/// A fully validated instance, ready for the checkers and solvers.
#[derive(Debug, Clone)]
pub struct Instance {
    pub quotient: Arc<QuotientMap>,
    pub base: Arc<SampledBase>,
    pub sections: BTreeMap<String, Section>,
    pub fields: BTreeMap<String, PlainField>,
    pub schedule: ScaleSchedule,
    pub class: AdmissibleClass,
    doc: InstanceDoc,
}

fn reval<T>(field: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Validation { field: f, reason } if !f.is_empty() => Error::Validation {
            field: format!("{field}.{f}"),
            reason,
        },
        other => Error::Validation {
            field: field.to_string(),
            reason: other.to_string(),
        },
    })
}

fn rows_to_vectors(rows: &[Vec<f64>], dim: usize, field: &str) -> Result<Vec<DVector<f64>>> {
    rows.iter()
        .map(|r| {
            if r.len() != dim {
                Err(Error::Validation {
                    field: field.to_string(),
                    reason: format!("expected row dimension {dim}, got {}", r.len()),
                })
            } else {
                Ok(DVector::from_vec(r.clone()))
            }
        })
        .collect()
}

impl Instance {
    pub fn from_doc(doc: InstanceDoc) -> Result<Self> {
        let qd = &doc.quotient;
        if qd.a.len() != qd.m || qd.a.iter().any(|row| row.len() != qd.s) {
            return Err(Error::Validation {
                field: "quotient.A".into(),
                reason: format!("matrix must be {}x{}", qd.m, qd.s),
            });
        }
        let a = DMatrix::from_fn(qd.m, qd.s, |i, j| qd.a[i][j]);
        let quotient = Arc::new(reval(
            "quotient.A",
            QuotientMap::build(a, qd.norm, qd.tol),
        )?);

        let bd = &doc.base;
        let points = rows_to_vectors(&bd.points, qd.m, "base.points")?;
        let n = points.len();
        let metric = match &bd.metric {
            MetricDoc::Named(name) if name == "induced" => MetricMode::InducedFiberGap,
            MetricDoc::Named(other) => {
                return Err(Error::Validation {
                    field: "base.metric".into(),
                    reason: format!("unknown metric mode {other:?}; use \"induced\" or a matrix"),
                })
            }
            MetricDoc::Matrix(rows) => {
                let flat = rows_to_vectors(rows, n, "base.metric")?;
                MetricMode::Explicit(DMatrix::from_fn(n, n, |i, j| flat[i][j]))
            }
        };
        let base = Arc::new(reval(
            "base.points",
            SampledBase::new(points, metric, bd.weights.clone(), bd.labels.clone()),
        )?);

        let mut sections = BTreeMap::new();
        for (name, sd) in &doc.sections {
            let path = format!("sections.{name}");
            let section = match (&sd.values, &sd.lift) {
                (Some(values), None) => {
                    let vals = rows_to_vectors(values, qd.s, &path)?;
                    reval(
                        &path,
                        Section::validate(quotient.clone(), base.clone(), vals, sd.scale),
                    )?
                }
                (None, Some(lift)) => {
                    let coords = rows_to_vectors(lift, qd.s - qd.m, &path)?;
                    reval(
                        &path,
                        Section::lift(quotient.clone(), base.clone(), &coords, sd.scale),
                    )?
                }
                _ => {
                    return Err(Error::Validation {
                        field: path,
                        reason: "exactly one of \"values\" or \"lift\" is required".into(),
                    })
                }
            };
            sections.insert(name.clone(), section);
        }

        let mut fields = BTreeMap::new();
        for (name, fd) in &doc.fields {
            let path = format!("fields.{name}");
            let vals = rows_to_vectors(&fd.values, qd.s, &path)?;
            fields.insert(
                name.clone(),
                reval(&path, PlainField::new(base.clone(), vals))?,
            );
        }

        let schedule = reval("schedule.radii", ScaleSchedule::new(doc.schedule.radii.clone()))?;
        let class = reval(
            "class",
            AdmissibleClass::new(doc.class.c, doc.class.bound_radius),
        )?;

        Ok(Self {
            quotient,
            base,
            sections,
            fields,
            schedule,
            class,
            doc,
        })
    }

    pub fn doc(&self) -> &InstanceDoc {
        &self.doc
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_doc(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Serialize with full round-trip float precision.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("instance docs always serialize")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn section(&self, name: &str) -> Result<&Section> {
        self.sections.get(name).ok_or_else(|| Error::Validation {
            field: format!("sections.{name}"),
            reason: "no such section".into(),
        })
    }

    /// The canonical three-point fixture: coordinate projection with the
    /// steep graph, the flat graph, and a kinked section.
    pub fn fixture_f1() -> Self {
        let doc = InstanceDoc {
            quotient: QuotientDoc {
                s: 2,
                m: 1,
                a: vec![vec![1.0, 0.0]],
                norm: NormTag::Euclidean,
                tol: None,
            },
            base: BaseDoc {
                points: vec![vec![0.0], vec![1.0], vec![2.0]],
                metric: MetricDoc::Named("induced".into()),
                weights: vec![1.0, 1.0, 1.0],
                labels: None,
            },
            sections: BTreeMap::from([
                (
                    "phi".to_string(),
                    SectionDoc {
                        values: Some(vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![2.0, 4.0]]),
                        lift: None,
                        scale: 1.0,
                    },
                ),
                (
                    "psi".to_string(),
                    SectionDoc {
                        values: Some(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]]),
                        lift: None,
                        scale: 1.0,
                    },
                ),
                (
                    "kink".to_string(),
                    SectionDoc {
                        values: Some(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 3.0]]),
                        lift: None,
                        scale: 1.0,
                    },
                ),
            ]),
            // phi ⊙ psi: off the fibers in general, kept as a plain field
            fields: BTreeMap::from([(
                "prod".to_string(),
                FieldDoc {
                    values: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![4.0, 0.0]],
                },
            )]),
            schedule: ScheduleDoc {
                radii: vec![2.5, 1.5],
            },
            class: AdmissibleClass {
                c: 2.0,
                bound_radius: 10.0,
            },
        };
        Self::from_doc(doc).expect("the fixture is valid by construction")
    }
}

/// Dimensions and seed for synthetic instance generation.
#[derive(Debug, Clone, Copy)]
pub struct GenSpec {
    pub s: usize,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

/// Generate a random validated instance: a conditioned full-rank quotient,
/// separated base points, and two unit-scale lift sections inside the
/// admissibility box. Deterministic per seed.
pub fn generate_instance(spec: GenSpec) -> Result<Instance> {
    let GenSpec { s, m, n, seed } = spec;
    if !(1..=7).contains(&m) || m >= s || s > 8 || !(2..=64).contains(&n) {
        return Err(Error::BadDims {
            reason: format!("need 1 <= m < s <= 8 and 2 <= n <= 64, got s={s} m={m} n={n}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Resample until the condition number is tame.
    let a = loop {
        let cand = DMatrix::from_fn(m, s, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let svals = cand.clone().singular_values();
        let (smax, smin) = (svals.max(), svals.min());
        if smin > 0.0 && smax / smin <= 1e3 {
            break cand;
        }
    };

    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n);
    while points.len() < n {
        let cand: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0f64..2.0)).collect();
        let separated = points.iter().all(|p: &Vec<f64>| {
            p.iter()
                .zip(&cand)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                > 0.05
        });
        if separated {
            points.push(cand);
        }
    }
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5f64..1.5)).collect();

    let k = s - m;
    let lift_doc = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..k).map(|_| rng.gen_range(-1.0f64..1.0)).collect())
            .collect()
    };
    let phi_lift = lift_doc(&mut rng);
    let psi_lift = lift_doc(&mut rng);

    let mut doc = InstanceDoc {
        quotient: QuotientDoc {
            s,
            m,
            a: (0..m).map(|i| (0..s).map(|j| a[(i, j)]).collect()).collect(),
            norm: NormTag::Euclidean,
            tol: None,
        },
        base: BaseDoc {
            points,
            metric: MetricDoc::Named("induced".into()),
            weights,
            labels: None,
        },
        sections: BTreeMap::from([
            (
                "phi".to_string(),
                SectionDoc {
                    values: None,
                    lift: Some(phi_lift),
                    scale: 1.0,
                },
            ),
            (
                "psi".to_string(),
                SectionDoc {
                    values: None,
                    lift: Some(psi_lift),
                    scale: 1.0,
                },
            ),
        ]),
        fields: BTreeMap::new(),
        schedule: ScheduleDoc { radii: vec![] },
        class: AdmissibleClass {
            c: 2.0,
            bound_radius: 1.0,
        },
    };

    // Radii from the realized base spread; box from the realized sections.
    let provisional = InstanceDoc {
        schedule: ScheduleDoc { radii: vec![1.0] },
        class: AdmissibleClass {
            c: 2.0,
            bound_radius: f64::MAX / 4.0,
        },
        ..doc.clone()
    };
    let probe = Instance::from_doc(provisional)?;
    let metric = probe.base.metric_matrix(&probe.quotient)?;
    let dmax = metric.max();
    doc.schedule = ScheduleDoc {
        radii: vec![1.01 * dmax, 0.6 * dmax, 0.35 * dmax],
    };
    let sup = probe
        .sections
        .values()
        .map(|sec| sec.sup_norm())
        .fold(0.0f64, f64::max);
    doc.class = AdmissibleClass {
        c: 2.0,
        bound_radius: 1.5 * sup + 1.0,
    };
    Instance::from_doc(doc)
}
