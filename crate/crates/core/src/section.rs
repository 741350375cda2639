//! Sections of the (rescaled) quotient over a sampled base, their
//! null-space lift parametrization, and the section algebra.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::quotient::{QuotientMap, SampledBase};

/// Per-point values `xᵢ ∈ ℝˢ` with `A·xᵢ = λ·bᵢ`: a section of `(1/λ)π`.
#[derive(Debug, Clone)]
pub struct Section {
    quotient: Arc<QuotientMap>,
    base: Arc<SampledBase>,
    scale: f64,
    values: Vec<DVector<f64>>,
}

/// Per-point values with no fiber constraint (e.g. pointwise products).
#[derive(Debug, Clone)]
pub struct PlainField {
    base: Arc<SampledBase>,
    values: Vec<DVector<f64>>,
}

impl Section {
    /// Validate `values` against the fiber constraint and wrap them.
    ///
    /// Fails with the worst offender when any `A·xᵢ` misses `λ·bᵢ` beyond
    /// the map's tolerance.
    pub fn validate(
        quotient: Arc<QuotientMap>,
        base: Arc<SampledBase>,
        values: Vec<DVector<f64>>,
        scale: f64,
    ) -> Result<Self> {
        if scale == 0.0 {
            return Err(Error::DegenerateScale);
        }
        if values.len() != base.len() {
            return Err(Error::Validation {
                field: "section.values".into(),
                reason: format!("expected {} values, got {}", base.len(), values.len()),
            });
        }
        let s = quotient.s();
        if values.iter().any(|x| x.len() != s || x.iter().any(|v| !v.is_finite())) {
            return Err(Error::Validation {
                field: "section.values".into(),
                reason: format!("values must be finite points of dimension {s}"),
            });
        }
        let mut worst = 0.0f64;
        let mut worst_idx = 0usize;
        for (i, x) in values.iter().enumerate() {
            let residual = (quotient.matrix() * x - scale * base.point(i)).abs().max();
            if residual > worst {
                worst = residual;
                worst_idx = i;
            }
        }
        let b_mag = base
            .points()
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |acc, x| acc.max(x.abs()));
        let tol = quotient.tol().max(1e-12) * (1.0 + scale.abs() * b_mag);
        if worst > tol {
            return Err(Error::NotOnFiber {
                index: worst_idx,
                residual: worst,
            });
        }
        Ok(Self {
            quotient,
            base,
            scale,
            values,
        })
    }

    /// Build the section `xᵢ = λ·A⁺bᵢ + N·uᵢ` from null-space coordinates.
    /// The fiber constraint holds by construction.
    pub fn lift(
        quotient: Arc<QuotientMap>,
        base: Arc<SampledBase>,
        coords: &[DVector<f64>],
        scale: f64,
    ) -> Result<Self> {
        if scale == 0.0 {
            return Err(Error::DegenerateScale);
        }
        let k = quotient.s() - quotient.m();
        if coords.len() != base.len() || coords.iter().any(|u| u.len() != k) {
            return Err(Error::Validation {
                field: "section.lift".into(),
                reason: format!(
                    "expected {} coordinate vectors of dimension {k}",
                    base.len()
                ),
            });
        }
        let values = coords
            .iter()
            .enumerate()
            .map(|(i, u)| scale * (quotient.pinv() * base.point(i)) + quotient.null_basis() * u)
            .collect();
        Ok(Self {
            quotient,
            base,
            scale,
            values,
        })
    }

    /// Null-space coordinates of this section; inverse of [`Section::lift`].
    pub fn coordinates(&self) -> Vec<DVector<f64>> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let anchor = self.scale * (self.quotient.pinv() * self.base.point(i));
                self.quotient.null_basis().transpose() * (x - anchor)
            })
            .collect()
    }

    pub fn quotient(&self) -> &Arc<QuotientMap> {
        &self.quotient
    }

    pub fn base(&self) -> &Arc<SampledBase> {
        &self.base
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> &DVector<f64> {
        &self.values[i]
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    /// Largest sup-norm among the section's values.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|x| x.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn same_base(&self, other: &Section) -> bool {
        Arc::ptr_eq(&self.base, &other.base) || *self.base == *other.base
    }

    pub fn same_quotient(&self, other: &Section) -> bool {
        Arc::ptr_eq(&self.quotient, &other.quotient) || *self.quotient == *other.quotient
    }
}

/// `αφ + βψ`, a section of `(1/(α+β))π`. Inputs must share quotient and
/// base and have unit scale.
pub fn combine_sections(alpha: f64, phi: &Section, beta: f64, psi: &Section) -> Result<Section> {
    if alpha == 0.0 || beta == 0.0 {
        return Err(Error::ZeroCoefficient);
    }
    if alpha + beta == 0.0 {
        return Err(Error::DegenerateScale);
    }
    if !phi.same_base(psi) || !phi.same_quotient(psi) {
        return Err(Error::MixedBases);
    }
    for sec in [phi, psi] {
        if sec.scale != 1.0 {
            return Err(Error::UnsupportedScale { found: sec.scale });
        }
    }
    let values = phi
        .values
        .iter()
        .zip(&psi.values)
        .map(|(a, b)| alpha * a + beta * b)
        .collect();
    Ok(Section {
        quotient: phi.quotient.clone(),
        base: phi.base.clone(),
        scale: alpha + beta,
        values,
    })
}

/// `λφ`, a section of `(1/λ)π`. Input must have unit scale.
pub fn scale_section(lambda: f64, phi: &Section) -> Result<Section> {
    if lambda == 0.0 {
        return Err(Error::DegenerateScale);
    }
    if phi.scale != 1.0 {
        return Err(Error::UnsupportedScale { found: phi.scale });
    }
    Ok(Section {
        quotient: phi.quotient.clone(),
        base: phi.base.clone(),
        scale: lambda,
        values: phi.values.iter().map(|x| lambda * x).collect(),
    })
}

/// Componentwise product of two unit-scale sections. The result carries no
/// fiber constraint, so it is a [`PlainField`].
pub fn hadamard_product(phi: &Section, psi: &Section) -> Result<PlainField> {
    if !phi.same_base(psi) || !phi.same_quotient(psi) {
        return Err(Error::MixedBases);
    }
    for sec in [phi, psi] {
        if sec.scale != 1.0 {
            return Err(Error::UnsupportedScale { found: sec.scale });
        }
    }
    let values = phi
        .values
        .iter()
        .zip(&psi.values)
        .map(|(a, b)| a.component_mul(b))
        .collect();
    Ok(PlainField {
        base: phi.base.clone(),
        values,
    })
}

impl PlainField {
    pub fn new(base: Arc<SampledBase>, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != base.len() {
            return Err(Error::Validation {
                field: "field.values".into(),
                reason: format!("expected {} values, got {}", base.len(), values.len()),
            });
        }
        if values.iter().any(|x| x.iter().any(|v| !v.is_finite())) {
            return Err(Error::Validation {
                field: "field.values".into(),
                reason: "values must be finite".into(),
            });
        }
        Ok(Self { base, values })
    }

    pub fn base(&self) -> &Arc<SampledBase> {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> &DVector<f64> {
        &self.values[i]
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|x| x.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::{MetricMode, NormTag};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn setup() -> (Arc<QuotientMap>, Arc<SampledBase>) {
        let q = Arc::new(
            QuotientMap::build(
                DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                NormTag::Euclidean,
                None,
            )
            .unwrap(),
        );
        let base = Arc::new(
            SampledBase::new(
                vec![
                    DVector::from_vec(vec![0.0]),
                    DVector::from_vec(vec![1.0]),
                    DVector::from_vec(vec![2.0]),
                ],
                MetricMode::InducedFiberGap,
                vec![1.0; 3],
                None,
            )
            .unwrap(),
        );
        (q, base)
    }

    fn graph(q: &Arc<QuotientMap>, base: &Arc<SampledBase>, f: impl Fn(f64) -> f64) -> Section {
        let values = base
            .points()
            .iter()
            .map(|b| DVector::from_vec(vec![b[0], f(b[0])]))
            .collect();
        Section::validate(q.clone(), base.clone(), values, 1.0).unwrap()
    }

    #[test]
    fn validate_accepts_on_fiber_values() {
        let (q, base) = setup();
        let values = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![2.0, 4.0]),
        ];
        assert!(Section::validate(q, base, values, 1.0).is_ok());
    }

    #[test]
    fn validate_reports_worst_offender() {
        let (q, base) = setup();
        let values = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.5, 2.0]),
            DVector::from_vec(vec![2.0, 4.0]),
        ];
        let err = Section::validate(q, base, values, 1.0).unwrap_err();
        match err {
            Error::NotOnFiber { index, residual } => {
                assert_eq!(index, 1);
                assert_abs_diff_eq!(residual, 0.5, epsilon = 1e-12);
            }
            other => panic!("expected NotOnFiber, got {other:?}"),
        }
    }

    #[test]
    fn validate_accepts_rescaled_sections() {
        let (q, base) = setup();
        let values = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![2.0, 5.0]),
            DVector::from_vec(vec![4.0, 1.0]),
        ];
        let sec = Section::validate(q, base, values, 2.0).unwrap();
        assert_eq!(sec.scale(), 2.0);
    }

    #[test]
    fn lift_examples() {
        let (q, base) = setup();
        let flat = Section::lift(
            q.clone(),
            base.clone(),
            &[DVector::zeros(1), DVector::zeros(1), DVector::zeros(1)],
            1.0,
        )
        .unwrap();
        for (i, b) in base.points().iter().enumerate() {
            assert_abs_diff_eq!(flat.value(i)[0], b[0], epsilon = 1e-12);
            assert_abs_diff_eq!(flat.value(i)[1], 0.0, epsilon = 1e-12);
        }

        let coords: Vec<_> = [0.0, 2.0, 4.0]
            .iter()
            .map(|&u| DVector::from_vec(vec![u]))
            .collect();
        let lifted = Section::lift(q.clone(), base.clone(), &coords, 1.0).unwrap();
        // Null direction of the coordinate projection is ±e₂; compare values
        // against the validated graph section.
        let target = graph(&q, &base, |y| 2.0 * y);
        for i in 0..3 {
            assert_abs_diff_eq!(
                (lifted.value(i) - target.value(i)).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn lift_minimal_norm_anchor() {
        let q = Arc::new(
            QuotientMap::build(
                DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
                NormTag::Euclidean,
                None,
            )
            .unwrap(),
        );
        let base = Arc::new(
            SampledBase::new(
                vec![DVector::from_vec(vec![0.0]), DVector::from_vec(vec![2.0])],
                MetricMode::InducedFiberGap,
                vec![1.0; 2],
                None,
            )
            .unwrap(),
        );
        let sec = Section::lift(q, base, &[DVector::zeros(1), DVector::zeros(1)], 1.0).unwrap();
        assert_abs_diff_eq!(sec.value(1)[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sec.value(1)[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lift_coordinates_round_trip() {
        let (q, base) = setup();
        let coords: Vec<_> = [-0.7, 1.3, 0.25]
            .iter()
            .map(|&u| DVector::from_vec(vec![u]))
            .collect();
        let sec = Section::lift(q, base, &coords, -3.0).unwrap();
        let back = sec.coordinates();
        for (u, v) in coords.iter().zip(&back) {
            assert_abs_diff_eq!((u - v).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn combine_section_arithmetic() {
        let (q, base) = setup();
        let phi = graph(&q, &base, |y| 2.0 * y);
        let psi = graph(&q, &base, |_| 0.0);

        let eta = combine_sections(3.0, &phi, -1.0, &psi).unwrap();
        assert_eq!(eta.scale(), 2.0);
        for (i, b) in base.points().iter().enumerate() {
            assert_abs_diff_eq!(eta.value(i)[0], 2.0 * b[0], epsilon = 1e-12);
            assert_abs_diff_eq!(eta.value(i)[1], 6.0 * b[0], epsilon = 1e-12);
        }

        let double = combine_sections(1.0, &psi, 1.0, &psi).unwrap();
        assert_eq!(double.scale(), 2.0);
        for (i, b) in base.points().iter().enumerate() {
            assert_abs_diff_eq!(double.value(i)[0], 2.0 * b[0], epsilon = 1e-12);
        }

        assert!(matches!(
            combine_sections(1.0, &phi, -1.0, &psi),
            Err(Error::DegenerateScale)
        ));
        assert!(matches!(
            combine_sections(0.0, &phi, 1.0, &psi),
            Err(Error::ZeroCoefficient)
        ));
    }

    #[test]
    fn combined_section_passes_validation() {
        let (q, base) = setup();
        let phi = graph(&q, &base, |y| 2.0 * y);
        let psi = graph(&q, &base, |y| -0.5 * y);
        let eta = combine_sections(2.0, &phi, 0.5, &psi).unwrap();
        let revalidated = Section::validate(
            q,
            base,
            eta.values().to_vec(),
            eta.scale(),
        );
        assert!(revalidated.is_ok());
    }

    #[test]
    fn scale_section_examples() {
        let (q, base) = setup();
        let phi = graph(&q, &base, |_| 0.0);
        let doubled = scale_section(2.0, &phi).unwrap();
        assert_eq!(doubled.scale(), 2.0);
        assert_abs_diff_eq!(doubled.value(2)[0], 4.0, epsilon = 1e-12);

        let neg = scale_section(-1.0, &graph(&q, &base, |y| 2.0 * y)).unwrap();
        assert_eq!(neg.scale(), -1.0);
        assert_abs_diff_eq!(neg.value(1)[1], -2.0, epsilon = 1e-12);

        // the rescaled values revalidate against the rescaled fibers
        assert!(Section::validate(q.clone(), base.clone(), doubled.values().to_vec(), 2.0).is_ok());
        assert!(matches!(
            scale_section(0.0, &phi),
            Err(Error::DegenerateScale)
        ));
        // re-scaling a non-unit-scale section is rejected
        assert!(matches!(
            scale_section(2.0, &doubled),
            Err(Error::UnsupportedScale { .. })
        ));
    }

    #[test]
    fn hadamard_product_componentwise() {
        let q = Arc::new(
            QuotientMap::build(
                DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                NormTag::Euclidean,
                None,
            )
            .unwrap(),
        );
        let base = Arc::new(
            SampledBase::new(
                vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![2.0])],
                MetricMode::InducedFiberGap,
                vec![1.0; 2],
                None,
            )
            .unwrap(),
        );
        let phi = Section::validate(
            q.clone(),
            base.clone(),
            vec![
                DVector::from_vec(vec![1.0, 1.0]),
                DVector::from_vec(vec![2.0, 1.0]),
            ],
            1.0,
        )
        .unwrap();
        let prod = hadamard_product(&phi, &phi).unwrap();
        assert_abs_diff_eq!(prod.value(0)[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(prod.value(0)[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(prod.value(1)[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(prod.value(1)[1], 1.0, epsilon = 1e-12);

        let psi = Section::validate(
            q,
            base,
            vec![
                DVector::from_vec(vec![1.0, 1.0]),
                DVector::from_vec(vec![2.0, 2.0]),
            ],
            1.0,
        )
        .unwrap();
        let prod2 = hadamard_product(&phi, &psi).unwrap();
        assert_abs_diff_eq!(prod2.value(1)[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(prod2.value(1)[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn convex_combinations_stay_unit_scale() {
        let (q, base) = setup();
        let phi = graph(&q, &base, |y| 2.0 * y);
        let psi = graph(&q, &base, |_| 0.0);
        for &t in &[0.25, 0.5, 0.75] {
            let comb = combine_sections(t, &phi, 1.0 - t, &psi).unwrap();
            assert_abs_diff_eq!(comb.scale(), 1.0, epsilon = 0.0);
            assert!(Section::validate(q.clone(), base.clone(), comb.values().to_vec(), 1.0).is_ok());
        }
    }
}
