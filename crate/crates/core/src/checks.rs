//! Machine-checkable verdicts for the identities and inequalities the slope
//! functionals satisfy. Every check returns a [`TheoremReport`] whose
//! `worst_margin` is the minimum of `bound − value` over everything tested
//! (deviations enter negated), so `pass ⇔ worst_margin ≥ −tolerance`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::quotient::{QuotientMap, SampledBase};
use crate::section::{combine_sections, hadamard_product, scale_section, Section};
use crate::slope::{
    c_min, global_ils, plain_slope_field, product_constants, ratio_matrix, slope_field_with_metric,
    ScaleSchedule, SlopeVariant,
};

/// Slack for relations that hold up to floating-point rounding only.
pub const TOL_EXACT: f64 = 1e-12;
/// Slack for relations that route through factored linear algebra.
pub const TOL_IDENTITY: f64 = 1e-9;

/// Location of the worst margin: participating point indices plus the scale
/// or coefficient it occurred at.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Witness {
    pub indices: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scale: Option<f64>,
}

/// One verdict: named check, pass flag, worst margin, and where it happened.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TheoremReport {
    pub check_name: String,
    pub pass: bool,
    pub worst_margin: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
    #[serde(default)]
    pub skipped: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

impl TheoremReport {
    fn from_margin(name: &str, margin: f64, tol: f64, witness: Option<Witness>) -> Self {
        Self {
            check_name: name.to_string(),
            pass: margin >= -tol,
            worst_margin: margin,
            tolerance: tol,
            witness,
            skipped: false,
            detail: None,
        }
    }

    fn skipped(name: &str, tol: f64, witness: Option<Witness>, detail: &str) -> Self {
        Self {
            check_name: name.to_string(),
            pass: true,
            worst_margin: 0.0,
            tolerance: tol,
            witness,
            skipped: true,
            detail: Some(detail.to_string()),
        }
    }

    fn failed(name: &str, tol: f64, detail: String) -> Self {
        Self {
            check_name: name.to_string(),
            pass: false,
            worst_margin: -1.0,
            tolerance: tol,
            witness: None,
            skipped: false,
            detail: Some(detail),
        }
    }
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-30)
}

/// Tracks the minimum margin and where it occurred.
struct WorstTracker {
    margin: f64,
    witness: Option<Witness>,
}

impl WorstTracker {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            witness: None,
        }
    }

    fn update(&mut self, margin: f64, indices: &[usize], scale: Option<f64>) {
        if margin < self.margin {
            self.margin = margin;
            self.witness = Some(Witness {
                indices: indices.to_vec(),
                scale,
            });
        }
    }

    fn report(self, name: &str, tol: f64) -> TheoremReport {
        if self.witness.is_none() {
            TheoremReport::skipped(name, tol, None, "nothing to test")
        } else {
            TheoremReport::from_margin(name, self.margin, tol, self.witness)
        }
    }
}

/// All pairwise ratios of `(λφ, (1/λ)π)` match those of `(φ, π)`.
pub fn check_scaling_invariance(phi: &Section, lambda: f64) -> Result<TheoremReport> {
    if lambda == 0.0 {
        return Err(Error::DegenerateScale);
    }
    let scaled = scale_section(lambda, phi)?;
    let q = phi.quotient();
    let base = phi.base();
    let r1 = ratio_matrix(q, base, phi.values(), 1.0)?;
    let r2 = ratio_matrix(q, base, scaled.values(), lambda)?;
    let n = base.len();
    let mut worst = WorstTracker::new();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                worst.update(-rel_dev(r1[(a, b)], r2[(a, b)]), &[a, b], Some(lambda));
            }
        }
    }
    Ok(worst.report("scaling_invariance", TOL_EXACT))
}

/// Fiber scaling (`gap_λ = |λ|·gap_1`) and point scaling
/// (`d(λx, fiber_λ) = |λ|·d(x, fiber_1)`) identities over a set of scales.
pub fn check_fiber_identities(
    q: &QuotientMap,
    base: &SampledBase,
    phi: &Section,
    lambdas: &[f64],
) -> Result<TheoremReport> {
    let n = base.len();
    let mut worst = WorstTracker::new();
    for &lambda in lambdas.iter().filter(|&&l| l != 0.0) {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let gap_scaled = q.fiber_gap(base.point(i), base.point(j), lambda)?;
                let gap_unit = q.fiber_gap(base.point(i), base.point(j), 1.0)?;
                worst.update(
                    -rel_dev(gap_scaled, lambda.abs() * gap_unit),
                    &[i, j],
                    Some(lambda),
                );

                let x = phi.value(i);
                let point_scaled =
                    q.fiber_distance(&DVector::from(lambda * x), base.point(j), lambda)?;
                let point_unit = q.fiber_distance(x, base.point(j), 1.0)?;
                worst.update(
                    -rel_dev(point_scaled, lambda.abs() * point_unit),
                    &[i, j],
                    Some(lambda),
                );
            }
        }
    }
    Ok(worst.report("fiber_identities", TOL_IDENTITY))
}

/// For sections, the distance from a value to any other fiber equals the
/// fiber gap: the fibers are parallel and the value sits on its own.
pub fn check_base_point_independence(phi: &Section) -> Result<TheoremReport> {
    let q = phi.quotient();
    let base = phi.base();
    let lambda = phi.scale();
    let n = base.len();
    let mut worst = WorstTracker::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dist = q.fiber_distance(phi.value(i), base.point(j), lambda)?;
            let gap = q.fiber_gap(base.point(i), base.point(j), lambda)?;
            worst.update(-rel_dev(dist, gap), &[i, j], None);
        }
    }
    Ok(worst.report("base_point_independence", TOL_IDENTITY))
}

/// Pointwise chain `1 ≤ local ≤ asymptotic ≤ global` at every scale.
pub fn check_chain(phi: &Section, sched: &ScaleSchedule) -> Result<TheoremReport> {
    let metric = phi.base().metric_matrix(phi.quotient())?;
    let local = slope_field_with_metric(phi, &metric, sched, SlopeVariant::Local)?;
    let asym = slope_field_with_metric(phi, &metric, sched, SlopeVariant::Asymptotic)?;
    let (ils, _) = global_ils(phi)?;
    let mut worst = WorstTracker::new();
    for i in 0..phi.len() {
        for (k, &eps) in sched.radii().iter().enumerate() {
            let (Some(l), Some(a)) = (local.at(i, k), asym.at(i, k)) else {
                continue;
            };
            worst.update(l - 1.0, &[i], Some(eps));
            worst.update(a - l, &[i], Some(eps));
            worst.update(ils - a, &[i], Some(eps));
        }
    }
    Ok(worst.report("chain_inequality", TOL_EXACT))
}

/// Nested-ball comparison: a third-radius asymptotic slope at a nearby
/// center never exceeds the full-radius slope here.
pub fn check_ball_monotonicity(phi: &Section, sched: &ScaleSchedule) -> Result<TheoremReport> {
    let metric = phi.base().metric_matrix(phi.quotient())?;
    let n = phi.len();
    let mut worst = WorstTracker::new();
    for &eps in sched.radii() {
        let big = slope_field_with_metric(
            phi,
            &metric,
            &ScaleSchedule::new(vec![eps])?,
            SlopeVariant::Asymptotic,
        )?;
        let small = slope_field_with_metric(
            phi,
            &metric,
            &ScaleSchedule::new(vec![eps / 3.0])?,
            SlopeVariant::Asymptotic,
        )?;
        for yp in 0..n {
            for y in 0..n {
                if metric[(yp, y)] >= eps / 3.0 {
                    continue;
                }
                let (Some(s), Some(b)) = (small.at(yp, 0), big.at(y, 0)) else {
                    continue;
                };
                worst.update(b - s, &[yp, y], Some(eps));
            }
        }
    }
    Ok(worst.report("ball_monotonicity", TOL_EXACT))
}

/// Discrete envelope sandwich: global constant dominates the asymptotic
/// field, which dominates the ball-max of the local field restricted to
/// pairs inside the center's ball.
pub fn check_envelope_sandwich(phi: &Section, sched: &ScaleSchedule) -> Result<TheoremReport> {
    let q = phi.quotient();
    let base = phi.base();
    let metric = base.metric_matrix(q)?;
    let ratios = ratio_matrix(q, base, phi.values(), phi.scale())?;
    let asym = slope_field_with_metric(phi, &metric, sched, SlopeVariant::Asymptotic)?;
    let (ils, _) = global_ils(phi)?;
    let mut worst = WorstTracker::new();
    for (k, &eps) in sched.radii().iter().enumerate() {
        let ball_sets = crate::slope::balls(&metric, eps);
        for (i, ball) in ball_sets.iter().enumerate() {
            let Some(a) = asym.at(i, k) else { continue };
            worst.update(ils - a, &[i], Some(eps));
            let mut restricted: Option<f64> = None;
            for &p in ball {
                for &c in ball {
                    if p == c || metric[(p, c)] > eps {
                        continue;
                    }
                    let v = ratios[(p, c)];
                    restricted = Some(restricted.map_or(v, |r| r.max(v)));
                }
            }
            if let Some(r) = restricted {
                worst.update(a - r, &[i], Some(eps));
            }
        }
    }
    Ok(worst.report("envelope_sandwich", TOL_EXACT))
}

/// Pointwise combination bound `slope(αφ+βψ) ≤ c/2·(slope(φ) + slope(ψ))`
/// in both slope variants, at every point and scale.
pub fn check_leibniz(
    phi: &Section,
    psi: &Section,
    alpha: f64,
    beta: f64,
    c: f64,
    sched: &ScaleSchedule,
) -> Result<TheoremReport> {
    let needed = c_min(phi)?.max(c_min(psi)?);
    if c < needed - TOL_EXACT {
        return Err(Error::AdmissibilityViolated { given: c, needed });
    }
    let eta = combine_sections(alpha, phi, beta, psi)?;
    let metric = phi.base().metric_matrix(phi.quotient())?;
    let mut worst = WorstTracker::new();
    for variant in [SlopeVariant::Local, SlopeVariant::Asymptotic] {
        let f_phi = slope_field_with_metric(phi, &metric, sched, variant)?;
        let f_psi = slope_field_with_metric(psi, &metric, sched, variant)?;
        let f_eta = slope_field_with_metric(&eta, &metric, sched, variant)?;
        for i in 0..phi.len() {
            for (k, &eps) in sched.radii().iter().enumerate() {
                let (Some(sp), Some(sq), Some(se)) =
                    (f_phi.at(i, k), f_psi.at(i, k), f_eta.at(i, k))
                else {
                    continue;
                };
                worst.update(c / 2.0 * (sp + sq) - se, &[i], Some(eps));
            }
        }
    }
    Ok(worst.report("leibniz", TOL_IDENTITY))
}

/// Pointwise product bound `slope_a(φψ) ≤ M·k·(slope_a(φ) + slope_a(ψ))`,
/// skipped (vacuous) when `k` is infinite.
pub fn check_product_bound(
    phi: &Section,
    psi: &Section,
    sched: &ScaleSchedule,
) -> Result<TheoremReport> {
    let pc = product_constants(phi, psi)?;
    if !pc.k_bound.is_finite() {
        let witness = pc.infinite_witness.map(|(z, y)| Witness {
            indices: vec![z, y],
            scale: None,
        });
        return Ok(TheoremReport::skipped(
            "product_bound",
            TOL_IDENTITY,
            witness,
            "k is infinite: bound is vacuous",
        ));
    }
    let product = hadamard_product(phi, psi)?;
    let q = phi.quotient();
    let metric = phi.base().metric_matrix(q)?;
    let f_prod = plain_slope_field(q, &product, &metric, sched, SlopeVariant::Asymptotic)?;
    let f_phi = slope_field_with_metric(phi, &metric, sched, SlopeVariant::Asymptotic)?;
    let f_psi = slope_field_with_metric(psi, &metric, sched, SlopeVariant::Asymptotic)?;
    let mk = pc.m_bound * pc.k_bound;
    let mut worst = WorstTracker::new();
    for i in 0..phi.len() {
        for (k, &eps) in sched.radii().iter().enumerate() {
            let (Some(sp), Some(sq), Some(spr)) = (f_phi.at(i, k), f_psi.at(i, k), f_prod.at(i, k))
            else {
                continue;
            };
            worst.update(mk * (sp + sq) - spr, &[i], Some(eps));
        }
    }
    Ok(worst.report("product_bound", TOL_IDENTITY))
}

/// Convex combinations of unit-scale sections revalidate as sections and do
/// not increase the admissibility constant.
pub fn check_convexity(phi: &Section, psi: &Section, t_grid: &[f64]) -> Result<TheoremReport> {
    if !phi.same_base(psi) || !phi.same_quotient(psi) {
        return Err(Error::MixedBases);
    }
    let c_max = c_min(phi)?.max(c_min(psi)?);
    let mut worst = WorstTracker::new();
    for &t in t_grid {
        let comb = if t == 0.0 {
            psi.clone()
        } else if t == 1.0 {
            phi.clone()
        } else {
            combine_sections(t, phi, 1.0 - t, psi)?
        };
        let revalidated = Section::validate(
            phi.quotient().clone(),
            phi.base().clone(),
            comb.values().to_vec(),
            comb.scale(),
        );
        match revalidated {
            Ok(sec) => worst.update(c_max - c_min(&sec)?, &[], Some(t)),
            Err(e) => {
                return Ok(TheoremReport::failed(
                    "convexity",
                    TOL_IDENTITY,
                    format!("combination at t={t} failed validation: {e}"),
                ))
            }
        }
    }
    Ok(worst.report("convexity", TOL_IDENTITY))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::{MetricMode, NormTag};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn setup3() -> (Arc<QuotientMap>, Arc<SampledBase>) {
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
    fn scaling_invariance_passes_for_fixtures() {
        let (q, base) = setup3();
        let phi = graph(&q, &base, |y| 2.0 * y);
        let rep = check_scaling_invariance(&phi, 2.0).unwrap();
        assert!(rep.pass, "margin {}", rep.worst_margin);

        let values = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![2.0, 3.0]),
        ];
        let kink = Section::validate(q, base, values, 1.0).unwrap();
        let rep = check_scaling_invariance(&kink, -3.0).unwrap();
        assert!(rep.pass);

        assert!(matches!(
            check_scaling_invariance(&kink, 0.0),
            Err(Error::DegenerateScale)
        ));
    }

    #[test]
    fn fiber_identities_on_fixture() {
        let (q, base) = setup3();
        let phi = graph(&q, &base, |y| 2.0 * y);
        let rep = check_fiber_identities(&q, &base, &phi, &[2.0, -0.5]).unwrap();
        assert!(rep.pass, "margin {}", rep.worst_margin);
    }

    #[test]
    fn base_point_independence_on_fixture() {
        let (q, base) = setup3();
        for f in [
            Box::new(|_: f64| 0.0) as Box<dyn Fn(f64) -> f64>,
            Box::new(|y: f64| 2.0 * y),
        ] {
            let rep = check_base_point_independence(&graph(&q, &base, f)).unwrap();
            assert!(rep.pass);
        }
    }

    #[test]
    fn chain_holds_on_kink_fixture() {
        let (q, base) = setup3();
        let values = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![2.0, 3.0]),
        ];
        let phi = Section::validate(q, base, values, 1.0).unwrap();
        let sched = ScaleSchedule::new(vec![2.5, 1.2, 0.8]).unwrap();
        let rep = check_chain(&phi, &sched).unwrap();
        assert!(rep.pass, "margin {}", rep.worst_margin);
        assert!(rep.worst_margin >= 0.0);
    }

    #[test]
    fn ball_monotonicity_holds() {
        let (q, base) = setup3();
        let values = vec![
            DVector::from_vec(vec![0.0, 0.4]),
            DVector::from_vec(vec![1.0, -0.9]),
            DVector::from_vec(vec![2.0, 2.2]),
        ];
        let phi = Section::validate(q, base, values, 1.0).unwrap();
        let sched = ScaleSchedule::new(vec![3.5, 3.1]).unwrap();
        let rep = check_ball_monotonicity(&phi, &sched).unwrap();
        assert!(rep.pass);
        assert!(rep.worst_margin >= 0.0);
    }

    #[test]
    fn envelope_sandwich_holds() {
        let (q, base) = setup3();
        let values = vec![
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![1.0, -0.3]),
            DVector::from_vec(vec![2.0, 0.6]),
        ];
        let phi = Section::validate(q, base, values, 1.0).unwrap();
        let sched = ScaleSchedule::new(vec![2.5, 1.2]).unwrap();
        let rep = check_envelope_sandwich(&phi, &sched).unwrap();
        assert!(rep.pass);
        assert!(rep.worst_margin >= 0.0);
    }

    #[test]
    fn leibniz_fixture_margins() {
        let (q, base) = setup3();
        let phi = graph(&q, &base, |y| 2.0 * y);
        let psi = graph(&q, &base, |_| 0.0);
        let sched = ScaleSchedule::new(vec![1.5]).unwrap();

        let rep = check_leibniz(&phi, &psi, 1.0, 1.0, 2.0, &sched).unwrap();
        assert!(rep.pass);
        let expected = 5.0f64.sqrt() + 1.0 - 2.0f64.sqrt();
        assert_abs_diff_eq!(rep.worst_margin, expected, epsilon = 1e-9);

        let rep2 = check_leibniz(&phi, &psi, 3.0, -1.0, 2.0, &sched).unwrap();
        assert!(rep2.pass);
        let expected2 = 5.0f64.sqrt() + 1.0 - 10.0f64.sqrt();
        assert_abs_diff_eq!(rep2.worst_margin, expected2, epsilon = 1e-9);

        // flat pair: 1 ≤ 2 with margin 1
        let flat = check_leibniz(&psi, &psi, 1.0, 1.0, 2.0, &sched).unwrap();
        assert!(flat.pass);
        assert_abs_diff_eq!(flat.worst_margin, 1.0, epsilon = 1e-12);

        // inadmissible constant is rejected
        assert!(matches!(
            check_leibniz(&phi, &psi, 1.0, 1.0, 0.5, &sched),
            Err(Error::AdmissibilityViolated { .. })
        ));
    }

    #[test]
    fn product_bound_hand_fixture() {
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
            q,
            base,
            vec![
                DVector::from_vec(vec![1.0, 1.0]),
                DVector::from_vec(vec![2.0, 1.0]),
            ],
            1.0,
        )
        .unwrap();
        let sched = ScaleSchedule::new(vec![1.5]).unwrap();
        let rep = check_product_bound(&phi, &phi, &sched).unwrap();
        assert!(rep.pass && !rep.skipped);
        // LHS = 3, RHS = M·k·(1+1) = 4 → margin 1 at the tight cells
        assert_abs_diff_eq!(rep.worst_margin, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn product_bound_skips_on_infinite_k() {
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
                vec![DVector::from_vec(vec![2.0]), DVector::from_vec(vec![4.0])],
                MetricMode::InducedFiberGap,
                vec![1.0; 2],
                None,
            )
            .unwrap(),
        );
        let phi = Section::validate(
            q,
            base,
            vec![
                DVector::from_vec(vec![2.0, 1.0]),
                DVector::from_vec(vec![4.0, 1.0]),
            ],
            1.0,
        )
        .unwrap();
        let sched = ScaleSchedule::new(vec![3.0]).unwrap();
        let rep = check_product_bound(&phi, &phi, &sched).unwrap();
        assert!(rep.skipped && rep.pass);
        assert_eq!(
            rep.witness,
            Some(Witness {
                indices: vec![0, 1],
                scale: None
            })
        );
    }

    #[test]
    fn convexity_fixture() {
        let (q, base) = setup3();
        let phi = graph(&q, &base, |y| 2.0 * y);
        let psi = graph(&q, &base, |_| 0.0);
        let rep = check_convexity(&phi, &psi, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert!(rep.pass, "margin {}", rep.worst_margin);
    }
}
