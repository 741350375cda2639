//! Weighted `L^q` norms on vector fields over a sampled base, with the
//! componentwise convergence report used by relaxed-slope certificates.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::quotient::SampledBase;
use crate::section::Section;

/// How the per-component norms are combined into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormVariant {
    /// Sum of component norms.
    Sum,
    /// Largest component norm.
    Max,
    /// Euclidean combination of component norms.
    Quad,
}

/// Values over the base paired with its measure. Scalar fields are carried
/// as one-component vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedField {
    base: Arc<SampledBase>,
    values: Vec<DVector<f64>>,
}

impl WeightedField {
    pub fn new(base: Arc<SampledBase>, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != base.len() {
            return Err(Error::Validation {
                field: "field.values".into(),
                reason: format!("expected {} values, got {}", base.len(), values.len()),
            });
        }
        let dim = values.first().map_or(0, |v| v.len());
        if values.iter().any(|v| v.len() != dim || v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Validation {
                field: "field.values".into(),
                reason: "values must be finite and share a dimension".into(),
            });
        }
        Ok(Self { base, values })
    }

    pub fn from_scalars(base: Arc<SampledBase>, scalars: &[f64]) -> Result<Self> {
        let values = scalars
            .iter()
            .map(|&x| DVector::from_vec(vec![x]))
            .collect();
        Self::new(base, values)
    }

    pub fn from_section(phi: &Section) -> Self {
        Self {
            base: phi.base().clone(),
            values: phi.values().to_vec(),
        }
    }

    pub fn base(&self) -> &Arc<SampledBase> {
        &self.base
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn components(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_shape(&self, other: &WeightedField) -> bool {
        (Arc::ptr_eq(&self.base, &other.base) || *self.base == *other.base)
            && self.components() == other.components()
    }

    fn difference(&self, other: &WeightedField) -> Result<WeightedField> {
        if !self.same_shape(other) {
            return Err(Error::MixedBases);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(WeightedField {
            base: self.base.clone(),
            values,
        })
    }
}

fn check_exponent(q: f64) -> Result<()> {
    if !q.is_finite() || q <= 1.0 {
        return Err(Error::BadExponent { q });
    }
    Ok(())
}

/// Weighted `L^q` norm of one component: `(Σ_y |ψᵢ(y)|^q·𝔪(y))^{1/q}`.
/// The q = 2 path uses exact squares so integer-valued fixtures stay exact.
fn component_norm(field: &WeightedField, component: usize, q: f64) -> f64 {
    let w = field.base.weights();
    if q == 2.0 {
        return field
            .values
            .iter()
            .zip(w)
            .map(|(v, &wy)| v[component] * v[component] * wy)
            .sum::<f64>()
            .sqrt();
    }
    field
        .values
        .iter()
        .zip(w)
        .map(|(v, &wy)| v[component].abs().powf(q) * wy)
        .sum::<f64>()
        .powf(1.0 / q)
}

/// The `L^q(Y, ℝˢ, 𝔪)` norm under the chosen combination variant.
pub fn lq_norm(field: &WeightedField, q: f64, variant: NormVariant) -> Result<f64> {
    check_exponent(q)?;
    let comps: Vec<f64> = (0..field.components())
        .map(|i| component_norm(field, i, q))
        .collect();
    Ok(match variant {
        NormVariant::Sum => comps.iter().sum(),
        NormVariant::Max => comps.iter().fold(0.0, |a, &b| a.max(b)),
        NormVariant::Quad => comps.iter().map(|c| c * c).sum::<f64>().sqrt(),
    })
}

/// Norm of the difference of two fields over the same base.
pub fn lq_distance(
    a: &WeightedField,
    b: &WeightedField,
    q: f64,
    variant: NormVariant,
) -> Result<f64> {
    check_exponent(q)?;
    lq_norm(&a.difference(b)?, q, variant)
}

/// Componentwise convergence trace of a sequence toward a limit field.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceReport {
    /// `trace[n][i]` is the `L^q` distance of term `n`'s component `i`.
    pub trace: Vec<Vec<f64>>,
    /// The final term's worst component distance.
    pub final_distance: f64,
    pub tolerance: f64,
    pub converged: bool,
}

/// Per-component distance trace of `seq` against `limit`; converged when
/// every component of the final term is within `tolerance`.
pub fn sequence_convergence(
    seq: &[WeightedField],
    limit: &WeightedField,
    q: f64,
    tolerance: f64,
) -> Result<ConvergenceReport> {
    check_exponent(q)?;
    let mut trace = Vec::with_capacity(seq.len());
    for term in seq {
        let diff = term.difference(limit)?;
        let comps: Vec<f64> = (0..diff.components())
            .map(|i| component_norm(&diff, i, q))
            .collect();
        trace.push(comps);
    }
    let final_distance = trace
        .last()
        .map_or(f64::INFINITY, |c| c.iter().fold(0.0, |a, &b| a.max(b)));
    Ok(ConvergenceReport {
        converged: final_distance <= tolerance,
        trace,
        final_distance,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::MetricMode;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn base_n(n: usize, weights: Vec<f64>) -> Arc<SampledBase> {
        let points = (0..n).map(|i| DVector::from_vec(vec![i as f64])).collect();
        Arc::new(SampledBase::new(points, MetricMode::InducedFiberGap, weights, None).unwrap())
    }

    fn field(base: &Arc<SampledBase>, rows: &[&[f64]]) -> WeightedField {
        let values = rows
            .iter()
            .map(|r| DVector::from_vec(r.to_vec()))
            .collect();
        WeightedField::new(base.clone(), values).unwrap()
    }

    #[test]
    fn hand_fixture_sum_max_quad() {
        let base = base_n(2, vec![1.0, 1.0]);
        let f = field(&base, &[&[3.0, 4.0], &[0.0, 0.0]]);
        assert_abs_diff_eq!(lq_norm(&f, 2.0, NormVariant::Sum).unwrap(), 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lq_norm(&f, 2.0, NormVariant::Max).unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lq_norm(&f, 2.0, NormVariant::Quad).unwrap(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let base = base_n(3, vec![1.0; 3]);
        let f = field(&base, &[&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]]);
        for variant in [NormVariant::Sum, NormVariant::Max, NormVariant::Quad] {
            assert_eq!(lq_norm(&f, 2.0, variant).unwrap(), 0.0);
        }
    }

    #[test]
    fn weighted_fixture_and_bad_exponent() {
        let base = base_n(2, vec![2.0, 1.0]);
        let f = field(&base, &[&[1.0, -1.0], &[0.0, 3.0]]);
        assert!(matches!(
            lq_norm(&f, 1.0, NormVariant::Sum),
            Err(Error::BadExponent { .. })
        ));
        let expected = 2.0f64.sqrt() + 11.0f64.sqrt();
        assert_abs_diff_eq!(
            lq_norm(&f, 2.0, NormVariant::Sum).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn distance_examples() {
        let base = base_n(2, vec![1.0, 1.0]);
        let psi = field(&base, &[&[0.5, -2.0], &[1.0, 0.25]]);
        assert_eq!(lq_distance(&psi, &psi, 2.0, NormVariant::Sum).unwrap(), 0.0);
        let eta = field(&base, &[&[1.5, -2.0], &[2.0, 0.25]]);
        assert_abs_diff_eq!(
            lq_distance(&psi, &eta, 2.0, NormVariant::Sum).unwrap(),
            2.0f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn mixed_bases_are_rejected() {
        let b1 = base_n(2, vec![1.0, 1.0]);
        let b2 = base_n(3, vec![1.0; 3]);
        let f1 = field(&b1, &[&[1.0], &[2.0]]);
        let f2 = field(&b2, &[&[1.0], &[2.0], &[3.0]]);
        assert!(matches!(
            lq_distance(&f1, &f2, 2.0, NormVariant::Sum),
            Err(Error::MixedBases)
        ));
    }

    #[test]
    fn convergence_of_vanishing_perturbation() {
        let base = base_n(2, vec![1.0, 1.0]);
        let limit = field(&base, &[&[1.0, 0.0], &[0.0, 1.0]]);
        let seq: Vec<WeightedField> = (1..=50)
            .map(|n| {
                let d = 1.0 / n as f64;
                field(&base, &[&[1.0 + d, d], &[d, 1.0 - d]])
            })
            .collect();
        let rep = sequence_convergence(&seq, &limit, 2.0, 0.1).unwrap();
        assert!(rep.converged);
        // worst component distance decreases along the trace
        let worst: Vec<f64> = rep
            .trace
            .iter()
            .map(|c| c.iter().fold(0.0f64, |a, &b| a.max(b)))
            .collect();
        assert!(worst.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn constant_sequence_converges_immediately() {
        let base = base_n(2, vec![1.0, 1.0]);
        let limit = field(&base, &[&[1.0, 0.0], &[0.0, 1.0]]);
        let rep = sequence_convergence(std::slice::from_ref(&limit), &limit, 2.0, 1e-15).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.final_distance, 0.0);
    }

    #[test]
    fn alternating_sequence_does_not_converge() {
        let base = base_n(2, vec![1.0, 1.0]);
        let limit = field(&base, &[&[0.0, 0.0], &[0.0, 0.0]]);
        let seq: Vec<WeightedField> = (0..20)
            .map(|n| {
                let d = if n % 2 == 0 { 1.0 } else { -1.0 };
                field(&base, &[&[d, 0.0], &[0.0, d]])
            })
            .collect();
        let rep = sequence_convergence(&seq, &limit, 2.0, 1e-3).unwrap();
        assert!(!rep.converged);
    }

    proptest! {
        #[test]
        fn norm_axioms_on_random_fields(
            raw in proptest::collection::vec(-10.0f64..10.0, 6),
            raw2 in proptest::collection::vec(-10.0f64..10.0, 6),
            lambda in -4.0f64..4.0,
            q in 1.5f64..4.0,
        ) {
            let base = base_n(3, vec![0.5, 1.0, 2.0]);
            let mk = |r: &[f64]| field(&base, &[&r[0..2], &r[2..4], &r[4..6]]);
            let f = mk(&raw);
            let g = mk(&raw2);
            let scaled_raw: Vec<f64> = raw.iter().map(|x| lambda * x).collect();
            let scaled = mk(&scaled_raw);
            for variant in [NormVariant::Sum, NormVariant::Max, NormVariant::Quad] {
                let nf = lq_norm(&f, q, variant).unwrap();
                prop_assert!(nf >= 0.0);
                // absolute homogeneity
                let ns = lq_norm(&scaled, q, variant).unwrap();
                prop_assert!((ns - lambda.abs() * nf).abs() <= 1e-10 * (1.0 + ns.abs()));
                // triangle inequality through lq_distance
                let dfg = lq_distance(&f, &g, q, variant).unwrap();
                let ng = lq_norm(&g, q, variant).unwrap();
                prop_assert!(dfg <= nf + ng + 1e-10);
            }
            // equivalence chain: max ≤ quad ≤ sum ≤ s·max
            let nmax = lq_norm(&f, q, NormVariant::Max).unwrap();
            let nquad = lq_norm(&f, q, NormVariant::Quad).unwrap();
            let nsum = lq_norm(&f, q, NormVariant::Sum).unwrap();
            prop_assert!(nmax <= nquad + 1e-12);
            prop_assert!(nquad <= nsum + 1e-12);
            prop_assert!(nsum <= 2.0 * nmax + 1e-12);
        }
    }
}
