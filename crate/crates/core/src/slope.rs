//! Intrinsic Lipschitz functionals on sampled sections: the global constant,
//! scale-indexed local and asymptotic slope fields, semicontinuous envelopes,
//! and the admissibility/product constants.
//!
//! Everything here reduces to one shared n×n ratio matrix
//! `ratio(a, b) = ‖x_a − x_b‖ / d(x_a, fiber(b))`, so subset suprema (chain
//! and monotonicity relations) compare identical floats and hold exactly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quotient::{QuotientMap, SampledBase};
use crate::section::{PlainField, Section};

/// Strictly decreasing positive radii at which slope fields are reported.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSchedule {
    radii: Vec<f64>,
}

impl ScaleSchedule {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty()
            || radii.iter().any(|&r| !r.is_finite() || r <= 0.0)
            || radii.windows(2).any(|w| w[0] <= w[1])
        {
            return Err(Error::BadSchedule);
        }
        Ok(Self { radii })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

/// Which slope a field holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeVariant {
    /// One-sided: witnesses approach the center.
    Local,
    /// Two-sided: witness pairs range over the whole ball.
    Asymptotic,
}

/// Per-point, per-scale slope values. `None` marks an empty punctured ball
/// (isolated point at that scale); witnesses record the maximizing ordered
/// pair.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SlopeField {
    pub variant: SlopeVariant,
    pub radii: Vec<f64>,
    /// `values[i][k]` is the slope at point `i`, scale `radii[k]`.
    pub values: Vec<Vec<Option<f64>>>,
    /// Ordered pair `(a, b)` achieving `values[i][k]`.
    pub witnesses: Vec<Vec<Option<(usize, usize)>>>,
}

impl SlopeField {
    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    /// Value at point `i` and the schedule's `k`-th radius.
    pub fn at(&self, i: usize, k: usize) -> Option<f64> {
        self.values[i][k]
    }
}

/// The shared pairwise ratio matrix for values on (or off) the fibers.
/// Entry `(a, b)` is `‖x_a − x_b‖ / d(x_a, fiber_λ(b))`; the diagonal is 0.
/// Off-fiber values can produce `+∞` when a value lands on another fiber.
pub fn ratio_matrix(
    q: &QuotientMap,
    base: &SampledBase,
    values: &[nalgebra::DVector<f64>],
    lambda: f64,
) -> Result<DMatrix<f64>> {
    let n = base.len();
    let mut r = DMatrix::zeros(n, n);
    let scale = 1.0 + values.iter().map(|v| v.abs().max()).fold(0.0, f64::max);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let num = q.norm_of(&(&values[a] - &values[b]));
            let den = q.fiber_distance(&values[a], base.point(b), lambda)?;
            r[(a, b)] = if den <= 1e-14 * scale {
                f64::INFINITY
            } else {
                num / den
            };
        }
    }
    Ok(r)
}

fn section_ratios(phi: &Section) -> Result<DMatrix<f64>> {
    ratio_matrix(phi.quotient(), phi.base(), phi.values(), phi.scale())
}

/// Global intrinsic Lipschitz constant: the exact maximum ratio over all
/// ordered pairs, with its witness pair.
pub fn global_ils(phi: &Section) -> Result<(f64, (usize, usize))> {
    let n = phi.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let r = section_ratios(phi)?;
    Ok(matrix_max(&r))
}

fn matrix_max(r: &DMatrix<f64>) -> (f64, (usize, usize)) {
    let n = r.nrows();
    let mut best = f64::NEG_INFINITY;
    let mut witness = (0, 0);
    for a in 0..n {
        for b in 0..n {
            if a != b && r[(a, b)] > best {
                best = r[(a, b)];
                witness = (a, b);
            }
        }
    }
    (best, witness)
}

/// Closed metric ball membership lists, one per center, center included.
pub fn balls(metric: &DMatrix<f64>, radius: f64) -> Vec<Vec<usize>> {
    let n = metric.nrows();
    (0..n)
        .map(|i| (0..n).filter(|&j| metric[(i, j)] <= radius).collect())
        .collect()
}

fn field_from_ratios(
    ratios: &DMatrix<f64>,
    metric: &DMatrix<f64>,
    sched: &ScaleSchedule,
    variant: SlopeVariant,
) -> SlopeField {
    let n = ratios.nrows();
    let mut values = vec![vec![None; sched.len()]; n];
    let mut witnesses = vec![vec![None; sched.len()]; n];
    for (k, &eps) in sched.radii().iter().enumerate() {
        let ball_sets = balls(metric, eps);
        for i in 0..n {
            let ball = &ball_sets[i];
            let mut best: Option<(f64, (usize, usize))> = None;
            match variant {
                SlopeVariant::Local => {
                    for &j in ball {
                        if j == i {
                            continue;
                        }
                        let v = ratios[(j, i)];
                        if best.is_none_or(|(b, _)| v > b) {
                            best = Some((v, (j, i)));
                        }
                    }
                }
                SlopeVariant::Asymptotic => {
                    for &a in ball {
                        for &b in ball {
                            if a == b {
                                continue;
                            }
                            let v = ratios[(a, b)];
                            if best.is_none_or(|(bst, _)| v > bst) {
                                best = Some((v, (a, b)));
                            }
                        }
                    }
                }
            }
            if let Some((v, w)) = best {
                values[i][k] = Some(v);
                witnesses[i][k] = Some(w);
            }
        }
    }
    SlopeField {
        variant,
        radii: sched.radii().to_vec(),
        values,
        witnesses,
    }
}

/// Scale-indexed slope field of a section under the base metric.
pub fn slope_field(
    phi: &Section,
    sched: &ScaleSchedule,
    variant: SlopeVariant,
) -> Result<SlopeField> {
    let metric = phi.base().metric_matrix(phi.quotient())?;
    slope_field_with_metric(phi, &metric, sched, variant)
}

/// Same as [`slope_field`] with a precomputed base metric.
pub fn slope_field_with_metric(
    phi: &Section,
    metric: &DMatrix<f64>,
    sched: &ScaleSchedule,
    variant: SlopeVariant,
) -> Result<SlopeField> {
    let ratios = section_ratios(phi)?;
    Ok(field_from_ratios(&ratios, metric, sched, variant))
}

/// Slope field of a plain (unconstrained) field; fibers are taken at unit
/// scale and denominators use the field's own values.
pub fn plain_slope_field(
    q: &QuotientMap,
    field: &PlainField,
    metric: &DMatrix<f64>,
    sched: &ScaleSchedule,
    variant: SlopeVariant,
) -> Result<SlopeField> {
    let ratios = ratio_matrix(q, field.base(), field.values(), 1.0)?;
    Ok(field_from_ratios(&ratios, metric, sched, variant))
}

/// Which envelope to take over metric balls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeSide {
    Upper,
    Lower,
}

/// Discrete semicontinuous envelope: pointwise ball-max (upper) or ball-min
/// (lower) of a scalar field, center included.
pub fn envelope_at_scale(
    field: &[f64],
    metric: &DMatrix<f64>,
    eps: f64,
    side: EnvelopeSide,
) -> Vec<f64> {
    debug_assert_eq!(field.len(), metric.nrows());
    let n = field.len();
    (0..n)
        .map(|i| {
            let mut acc = field[i];
            for j in 0..n {
                if metric[(i, j)] <= eps {
                    acc = match side {
                        EnvelopeSide::Upper => acc.max(field[j]),
                        EnvelopeSide::Lower => acc.min(field[j]),
                    };
                }
            }
            acc
        })
        .collect()
}

/// Smallest admissibility constant: the largest ratio of point-to-fiber
/// distance over the corresponding fiber gap. Exactly 1 for true sections.
pub fn c_min(phi: &Section) -> Result<f64> {
    c_min_values(phi.quotient(), phi.base(), phi.values(), phi.scale())
}

/// Diagnostic variant for plain fields (unit-scale fibers); values off the
/// fibers push the constant above 1.
pub fn c_min_plain(q: &QuotientMap, field: &PlainField) -> Result<f64> {
    c_min_values(q, field.base(), field.values(), 1.0)
}

fn c_min_values(
    q: &QuotientMap,
    base: &SampledBase,
    values: &[nalgebra::DVector<f64>],
    lambda: f64,
) -> Result<f64> {
    let n = base.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mut worst = 0.0f64;
    for (y, value) in values.iter().enumerate() {
        for z in 0..n {
            if y == z {
                continue;
            }
            let dist = q.fiber_distance(value, base.point(z), lambda)?;
            let gap = q.fiber_gap(base.point(y), base.point(z), lambda)?;
            worst = worst.max(dist / gap);
        }
    }
    Ok(worst)
}

/// The pair `(M, k)` governing the product bound, with a witness when the
/// product value lands on a foreign fiber and `k` degenerates to `+∞`.
#[derive(Debug, Clone)]
pub struct ProductConstants {
    /// Sup-norm bound over both factors' values.
    pub m_bound: f64,
    /// Worst min-distance over product-distance ratio; `+∞` when vacuous.
    pub k_bound: f64,
    /// Ordered pair `(z, y)` with the product value on the fiber of `y`.
    pub infinite_witness: Option<(usize, usize)>,
}

pub fn product_constants(phi: &Section, psi: &Section) -> Result<ProductConstants> {
    if !phi.same_base(psi) || !phi.same_quotient(psi) {
        return Err(Error::MixedBases);
    }
    let product = crate::section::hadamard_product(phi, psi)?;
    let q = phi.quotient();
    let base = phi.base();
    let n = base.len();
    let m_bound = phi.sup_norm().max(psi.sup_norm());
    let zero_tol = 1e-12 * (1.0 + product.sup_norm());

    let mut k_bound = 0.0f64;
    let mut infinite_witness = None;
    for z in 0..n {
        for y in 0..n {
            if z == y {
                continue;
            }
            let dphi = q.fiber_distance(phi.value(z), base.point(y), 1.0)?;
            let dpsi = q.fiber_distance(psi.value(z), base.point(y), 1.0)?;
            let dprod = q.fiber_distance(product.value(z), base.point(y), 1.0)?;
            if dprod <= zero_tol {
                if infinite_witness.is_none() {
                    infinite_witness = Some((z, y));
                }
                k_bound = f64::INFINITY;
            } else {
                k_bound = k_bound.max(dphi.min(dpsi) / dprod);
            }
        }
    }
    Ok(ProductConstants {
        m_bound,
        k_bound,
        infinite_witness,
    })
}
