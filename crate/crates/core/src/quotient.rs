//! The linear quotient `A: ℝˢ → ℝᵐ`, its rescaled affine fibers
//! `{x : Ax = λ·b}`, and exact point-to-fiber / fiber-to-fiber distances.
//!
//! The euclidean path is closed-form through the pseudoinverse; l1/linf
//! distances are optimization-backed (see [`crate::lp`]) and certified
//! against the map's tolerance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::{self, PolyNorm};

/// Which norm the ambient space carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormTag {
    Euclidean,
    L1,
    Linf,
}

/// Norm of a vector under the given tag.
pub fn vector_norm(v: &DVector<f64>, tag: NormTag) -> f64 {
    match tag {
        NormTag::Euclidean => v.norm(),
        NormTag::L1 => v.iter().map(|x| x.abs()).sum(),
        NormTag::Linf => v.iter().fold(0.0f64, |acc, x| acc.max(x.abs())),
    }
}

/// A full-row-rank linear surjection together with the cached factors all
/// fiber queries run through.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientMap {
    a: DMatrix<f64>,
    pinv: DMatrix<f64>,
    null_basis: DMatrix<f64>,
    norm: NormTag,
    tol: f64,
}

impl QuotientMap {
    /// Factor `a` and build the map. `tol` defaults to `1e-10` scaled by the
    /// largest singular value.
    pub fn build(a: DMatrix<f64>, norm: NormTag, tol: Option<f64>) -> Result<Self> {
        let m = a.nrows();
        let s = a.ncols();
        if m >= s || m == 0 {
            return Err(Error::NotStrictQuotient { m, s });
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation {
                field: "quotient.A".into(),
                reason: "entries must be finite".into(),
            });
        }

        let svals = a.clone().singular_values();
        let sigma_max = svals.max();
        if sigma_max == 0.0 {
            return Err(Error::RankDeficient {
                expected: m,
                found: 0,
            });
        }
        let rank_tol = 1e-10 * sigma_max;
        let rank = svals.iter().filter(|&&x| x > rank_tol).count();
        if rank < m {
            return Err(Error::RankDeficient {
                expected: m,
                found: rank,
            });
        }
        let tol = tol.unwrap_or(rank_tol);

        // Right inverse Aᵀ(AAᵀ)⁻¹; AAᵀ is SPD at full row rank.
        let aat = &a * a.transpose();
        let chol = aat.cholesky().ok_or(Error::RankDeficient {
            expected: m,
            found: rank,
        })?;
        let pinv = chol.solve(&a).transpose();

        // ker(A) = zero eigenspace of AᵀA; take the s−m smallest eigenpairs.
        let ata = a.transpose() * &a;
        let eig = ata.symmetric_eigen();
        let mut order: Vec<usize> = (0..s).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut null_basis = DMatrix::zeros(s, s - m);
        for (col, &idx) in order.iter().take(s - m).enumerate() {
            null_basis.set_column(col, &eig.eigenvectors.column(idx));
        }

        let q = Self {
            a,
            pinv,
            null_basis,
            norm,
            tol,
        };
        q.verify_factors(sigma_max)?;
        Ok(q)
    }

    fn verify_factors(&self, sigma_max: f64) -> Result<()> {
        let m = self.m();
        let check_tol = (self.tol * (1.0 + sigma_max)).max(1e-9);
        let api = &self.a * &self.pinv;
        let api_err = (api - DMatrix::<f64>::identity(m, m)).abs().max();
        let an_err = (&self.a * &self.null_basis).abs().max();
        let ntn = self.null_basis.transpose() * &self.null_basis;
        let k = self.null_basis.ncols();
        let ntn_err = (ntn - DMatrix::<f64>::identity(k, k)).abs().max();
        if api_err > check_tol || an_err > check_tol || ntn_err > check_tol {
            return Err(Error::RankDeficient {
                expected: m,
                found: m,
            });
        }
        Ok(())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    /// Orthonormal basis of `ker(A)`, one column per free direction.
    pub fn null_basis(&self) -> &DMatrix<f64> {
        &self.null_basis
    }

    pub fn norm_tag(&self) -> NormTag {
        self.norm
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Ambient dimension `s`.
    pub fn s(&self) -> usize {
        self.a.ncols()
    }

    /// Base dimension `m`.
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Norm of `v` under this map's norm tag.
    pub fn norm_of(&self, v: &DVector<f64>) -> f64 {
        vector_norm(v, self.norm)
    }

    /// Distance from `x` to the rescaled fiber `{z : Az = λ·b}`.
    pub fn fiber_distance(&self, x: &DVector<f64>, b: &DVector<f64>, lambda: f64) -> Result<f64> {
        self.fiber_solve(x, b, lambda).map(|(d, _)| d)
    }

    /// Nearest point of the rescaled fiber to `x`.
    pub fn project_to_fiber(
        &self,
        x: &DVector<f64>,
        b: &DVector<f64>,
        lambda: f64,
    ) -> Result<DVector<f64>> {
        self.fiber_solve(x, b, lambda).map(|(_, z)| z)
    }

    fn fiber_solve(
        &self,
        x: &DVector<f64>,
        b: &DVector<f64>,
        lambda: f64,
    ) -> Result<(f64, DVector<f64>)> {
        if lambda == 0.0 {
            return Err(Error::DegenerateScale);
        }
        match self.norm {
            NormTag::Euclidean => {
                let residual = &self.a * x - lambda * b;
                let correction = &self.pinv * &residual;
                let z = x - &correction;
                Ok((correction.norm(), z))
            }
            NormTag::L1 | NormTag::Linf => {
                let poly = if self.norm == NormTag::L1 {
                    PolyNorm::L1
                } else {
                    PolyNorm::Linf
                };
                let anchor = lambda * (&self.pinv * b);
                let r = x - &anchor;
                let (value, v, violation) = lp::min_norm_over_affine(poly, &r, &self.null_basis)
                    .ok_or(Error::SolverTolerance {
                        tol: self.tol,
                        residual: f64::INFINITY,
                    })?;
                let z = &anchor + &self.null_basis * v;
                let feas = (&self.a * &z - lambda * b).abs().max();
                let cert_tol = self.tol.max(1e-9) * (1.0 + lambda.abs() * b.abs().max());
                if violation > cert_tol || feas > cert_tol {
                    return Err(Error::SolverTolerance {
                        tol: cert_tol,
                        residual: violation.max(feas),
                    });
                }
                Ok((value, z))
            }
        }
    }

    /// Distance between the parallel rescaled fibers of `b1` and `b2`.
    ///
    /// Arguments are canonicalized so the result is exactly symmetric.
    pub fn fiber_gap(&self, b1: &DVector<f64>, b2: &DVector<f64>, lambda: f64) -> Result<f64> {
        if lambda == 0.0 {
            return Err(Error::DegenerateScale);
        }
        let swap = b1
            .iter()
            .zip(b2.iter())
            .find_map(|(p, q)| match p.total_cmp(q) {
                std::cmp::Ordering::Less => Some(false),
                std::cmp::Ordering::Greater => Some(true),
                std::cmp::Ordering::Equal => None,
            })
            .unwrap_or(false);
        let (lo, hi) = if swap { (b2, b1) } else { (b1, b2) };
        let diff = hi - lo;
        let origin = DVector::zeros(self.s());
        // gap = distance from the origin to {u : Au = λ·(hi − lo)}.
        self.fiber_distance(&origin, &diff, lambda)
    }
}

/// How base-point distances are measured.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricMode {
    /// Distance between the corresponding unit-scale fibers.
    InducedFiberGap,
    /// A caller-supplied n×n distance matrix.
    Explicit(DMatrix<f64>),
}

const METRIC_TOL: f64 = 1e-9;

/// A finite sampled base: points in ℝᵐ, a metric mode, and positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBase {
    points: Vec<DVector<f64>>,
    metric: MetricMode,
    weights: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl SampledBase {
    pub fn new(
        points: Vec<DVector<f64>>,
        metric: MetricMode,
        weights: Vec<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        let m = points[0].len();
        if points.iter().any(|p| p.len() != m || p.iter().any(|x| !x.is_finite())) {
            return Err(Error::Validation {
                field: "base.points".into(),
                reason: "points must share a dimension and be finite".into(),
            });
        }
        if weights.len() != n || weights.iter().any(|&w| !w.is_finite() || w <= 0.0) {
            return Err(Error::Validation {
                field: "base.weights".into(),
                reason: "weights must be n strictly positive finite reals".into(),
            });
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::Validation {
                    field: "base.labels".into(),
                    reason: "label count must match point count".into(),
                });
            }
        }
        let scale = points
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |acc, x| acc.max(x.abs()));
        let dup_tol = 1e-12 * (1.0 + scale);
        for i in 0..n {
            for j in (i + 1)..n {
                if (&points[i] - &points[j]).abs().max() <= dup_tol {
                    return Err(Error::DuplicateBasePoint { i, j });
                }
            }
        }
        if let MetricMode::Explicit(d) = &metric {
            validate_explicit_metric(d, n)?;
        }
        Ok(Self {
            points,
            metric,
            weights,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &DVector<f64> {
        &self.points[i]
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn metric_mode(&self) -> &MetricMode {
        &self.metric
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// The n×n base metric: induced fiber gaps, or the explicit matrix.
    pub fn metric_matrix(&self, q: &QuotientMap) -> Result<DMatrix<f64>> {
        match &self.metric {
            MetricMode::Explicit(d) => Ok(d.clone()),
            MetricMode::InducedFiberGap => {
                let n = self.len();
                let mut d = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in (i + 1)..n {
                        let g = q.fiber_gap(&self.points[i], &self.points[j], 1.0)?;
                        d[(i, j)] = g;
                        d[(j, i)] = g;
                    }
                }
                Ok(d)
            }
        }
    }
}

fn validate_explicit_metric(d: &DMatrix<f64>, n: usize) -> Result<()> {
    let bad = |reason: &str| Error::Validation {
        field: "base.metric".into(),
        reason: reason.into(),
    };
    if d.nrows() != n || d.ncols() != n {
        return Err(bad("matrix must be n×n"));
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(bad("entries must be finite"));
    }
    for i in 0..n {
        if d[(i, i)] != 0.0 {
            return Err(bad("diagonal must be zero"));
        }
        for j in 0..n {
            if i != j && d[(i, j)] <= 0.0 {
                return Err(bad("off-diagonal entries must be positive"));
            }
            if (d[(i, j)] - d[(j, i)]).abs() > METRIC_TOL {
                return Err(bad("matrix must be symmetric"));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if d[(i, j)] > d[(i, k)] + d[(k, j)] + METRIC_TOL {
                    return Err(bad("triangle inequality violated"));
                }
            }
        }
    }
    Ok(())
}
