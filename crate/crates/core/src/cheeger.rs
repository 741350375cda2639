//! Discrete intrinsic Cheeger energy and its proximal relaxation: a
//! derivative-free solver over null-space lift coordinates, relaxed-slope
//! certificates with verification, the lattice meet, and the
//! representation-formula check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::checks::{TheoremReport, Witness};
use crate::error::{Error, Result};
use crate::lq::{lq_distance, NormVariant, WeightedField};
use crate::quotient::NormTag;
use crate::section::{combine_sections, Section};
use crate::slope::{slope_field_with_metric, ScaleSchedule, SlopeVariant};

/// The admissible class: sections dominated by the constant `c` whose
/// values stay inside the sup-norm box of radius `bound_radius`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdmissibleClass {
    pub c: f64,
    #[serde(rename = "boundRadius")]
    pub bound_radius: f64,
}

impl AdmissibleClass {
    pub fn new(c: f64, bound_radius: f64) -> Result<Self> {
        if c < 2.0 {
            return Err(Error::Validation {
                field: "class.c".into(),
                reason: format!("admissibility constant must be >= 2, got {c}"),
            });
        }
        if !bound_radius.is_finite() || bound_radius <= 0.0 {
            return Err(Error::Validation {
                field: "class.boundRadius".into(),
                reason: "bound radius must be positive".into(),
            });
        }
        Ok(Self { c, bound_radius })
    }
}

/// Check membership of a section in the admissible class.
pub fn admissibility(phi: &Section, class: &AdmissibleClass) -> Result<()> {
    let sup = phi.sup_norm();
    if sup > class.bound_radius + 1e-12 {
        return Err(Error::NotAdmissible {
            reason: format!(
                "sup norm {sup} exceeds the bound radius {}",
                class.bound_radius
            ),
        });
    }
    let needed = crate::slope::c_min(phi)?;
    if needed > class.c + 1e-9 {
        return Err(Error::NotAdmissible {
            reason: format!("needs admissibility constant {needed}, class has {}", class.c),
        });
    }
    Ok(())
}

/// Knobs for the relaxation solver.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct RelaxationParams {
    /// Slope scale the energy is taken at.
    pub eps: f64,
    /// Proximity weight: the objective is `E(ψ) + (1/τ)·‖ψ−φ‖²`.
    pub tau: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
}

impl RelaxationParams {
    pub fn new(eps: f64, tau: f64) -> Self {
        Self {
            eps,
            tau,
            max_iters: 2500,
            restarts: 6,
            seed: 0xC0FFEE,
            tol: 1e-6,
        }
    }

    fn validate(&self) -> Result<()> {
        if [self.tau, self.eps, self.tol]
            .iter()
            .any(|v| !v.is_finite() || *v <= 0.0)
        {
            return Err(Error::Validation {
                field: "params".into(),
                reason: "eps, tau and tol must be positive".into(),
            });
        }
        Ok(())
    }
}

/// The quadruple `(G, H₁, H₂, (φ_h))` witnessing a relaxed slope of `phi`,
/// together with the data needed to re-verify it.
#[derive(Debug, Clone)]
pub struct RelaxedSlopeCertificate {
    pub phi: Section,
    pub g: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub sequence: Vec<Section>,
    pub q_exponent: f64,
    pub eps: f64,
    pub class: AdmissibleClass,
}

/// Outcome of a relaxation run. `energy` is the slope energy of the
/// minimizer (the proximity term is excluded from the reported value).
#[derive(Debug, Clone)]
pub struct RelaxationResult {
    pub minimizer: Section,
    pub energy: f64,
    pub h2_field: Vec<f64>,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub certificate: RelaxedSlopeCertificate,
}

/// Per-point slope values at one scale; errors on the first empty ball.
pub fn slope_scalar_field(phi: &Section, eps: f64, variant: SlopeVariant) -> Result<Vec<f64>> {
    let metric = phi.base().metric_matrix(phi.quotient())?;
    slope_scalar_field_with_metric(phi, &metric, eps, variant)
}

fn slope_scalar_field_with_metric(
    phi: &Section,
    metric: &DMatrix<f64>,
    eps: f64,
    variant: SlopeVariant,
) -> Result<Vec<f64>> {
    let sched = ScaleSchedule::new(vec![eps])?;
    let field = slope_field_with_metric(phi, metric, &sched, variant)?;
    field
        .values
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row[0].ok_or(Error::EmptyBall {
                index: i,
                radius: eps,
            })
        })
        .collect()
}

/// `Σᵢ 𝔪ᵢ·slope(yᵢ)²` at scale `eps` under the chosen slope variant.
pub fn cheeger_energy(phi: &Section, eps: f64, variant: SlopeVariant) -> Result<f64> {
    let slopes = slope_scalar_field(phi, eps, variant)?;
    Ok(slopes
        .iter()
        .zip(phi.base().weights())
        .map(|(s, w)| w * s * s)
        .sum())
}

/// Fixed geometry shared by every objective evaluation: section values stay
/// on their fibers under the lift parametrization, so the per-pair ratio
/// denominators are constant and precomputed. Buffers are flat so the hot
/// loop allocates nothing beyond one scratch vector per call.
struct Evaluator {
    n: usize,
    k: usize,
    s: usize,
    /// `λ·A⁺bᵢ`, row-major n×s.
    anchors: Vec<f64>,
    /// Null basis, row-major s×k.
    basis: Vec<f64>,
    /// Constant ratio denominators, row-major n×n.
    gaps: Vec<f64>,
    balls: Vec<Vec<usize>>,
    weights: Vec<f64>,
    norm: NormTag,
    variant: SlopeVariant,
    radius: f64,
    /// Proximity anchor values, row-major n×s.
    prox_values: Vec<f64>,
    prox_weight: f64,
}

impl Evaluator {
    fn values_into(&self, u: &[f64], out: &mut [f64]) {
        let (n, k, s) = (self.n, self.k, self.s);
        for i in 0..n {
            for c in 0..s {
                let mut acc = self.anchors[i * s + c];
                for j in 0..k {
                    acc += self.basis[c * k + j] * u[i * k + j];
                }
                out[i * s + c] = acc;
            }
        }
    }

    fn feasible_values(&self, values: &[f64]) -> bool {
        values.iter().all(|c| c.abs() <= self.radius + 1e-12)
    }

    fn feasible(&self, u: &[f64]) -> bool {
        let mut values = vec![0.0; self.n * self.s];
        self.values_into(u, &mut values);
        self.feasible_values(&values)
    }

    fn pair_norm(&self, values: &[f64], a: usize, b: usize) -> f64 {
        let s = self.s;
        let (va, vb) = (&values[a * s..(a + 1) * s], &values[b * s..(b + 1) * s]);
        match self.norm {
            NormTag::Euclidean => va
                .iter()
                .zip(vb)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            NormTag::L1 => va.iter().zip(vb).map(|(x, y)| (x - y).abs()).sum(),
            NormTag::Linf => va
                .iter()
                .zip(vb)
                .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs())),
        }
    }

    fn energy_of_values(&self, values: &[f64]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            let ball = &self.balls[i];
            let mut slope = 0.0f64;
            match self.variant {
                SlopeVariant::Asymptotic => {
                    for (pos, &a) in ball.iter().enumerate() {
                        for &b in &ball[pos + 1..] {
                            // both orientations share the numerator
                            let num = self.pair_norm(values, a, b);
                            let den = self.gaps[a * n + b].min(self.gaps[b * n + a]);
                            slope = slope.max(num / den);
                        }
                    }
                }
                SlopeVariant::Local => {
                    for &j in ball {
                        if j != i {
                            slope =
                                slope.max(self.pair_norm(values, j, i) / self.gaps[j * n + i]);
                        }
                    }
                }
            }
            total += self.weights[i] * slope * slope;
        }
        total
    }

    fn objective(&self, u: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.resize(self.n * self.s, 0.0);
        self.values_into(u, scratch);
        if !self.feasible_values(scratch) {
            return f64::INFINITY;
        }
        let energy = self.energy_of_values(scratch);
        // L²-sum distance to the proximity anchor, squared.
        let mut dist = 0.0;
        for comp in 0..self.s {
            let mut acc = 0.0;
            for (i, w) in self.weights.iter().enumerate() {
                let d = scratch[i * self.s + comp] - self.prox_values[i * self.s + comp];
                acc += d * d * w;
            }
            dist += acc.sqrt();
        }
        energy + self.prox_weight * dist * dist
    }
}

fn pattern_search(
    eval: &Evaluator,
    start: Vec<f64>,
    initial_step: f64,
    step_floor: f64,
    max_iters: usize,
    poll_seed: u64,
    trace: Option<&mut Vec<f64>>,
) -> (Vec<f64>, f64, bool) {
    let dim = start.len();
    let mut scratch = Vec::new();
    let mut poll_rng = ChaCha8Rng::seed_from_u64(poll_seed);
    let mut u = start;
    let mut f = eval.objective(&u, &mut scratch);
    let mut step = initial_step;
    let mut iters = 0usize;
    let mut local_trace = Vec::new();
    while step >= step_floor && iters < max_iters {
        iters += 1;
        let mut best: Option<(f64, usize, f64)> = None;
        for j in 0..dim {
            for sign in [1.0f64, -1.0] {
                let old = u[j];
                u[j] = old + sign * step;
                let cand = eval.objective(&u, &mut scratch);
                u[j] = old;
                if cand < f && best.is_none_or(|(b, _, _)| cand < b) {
                    best = Some((cand, j, sign));
                }
            }
        }
        let mut moved = false;
        match best {
            Some((cand, j, sign)) => {
                u[j] += sign * step;
                f = cand;
                moved = true;
            }
            None => {
                // The coordinate pattern can stall on corners of the
                // max-of-ratios surface; poll seeded random directions
                // before conceding the step.
                for _ in 0..dim.max(8) {
                    let dir: Vec<f64> =
                        (0..dim).map(|_| poll_rng.gen_range(-1.0f64..1.0)).collect();
                    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
                    if norm == 0.0 {
                        continue;
                    }
                    let cand_u: Vec<f64> = u
                        .iter()
                        .zip(&dir)
                        .map(|(x, d)| x + step / norm * d)
                        .collect();
                    let cand = eval.objective(&cand_u, &mut scratch);
                    if cand < f {
                        u = cand_u;
                        f = cand;
                        moved = true;
                        break;
                    }
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
        local_trace.push(f);
    }
    if let Some(t) = trace {
        *t = local_trace;
    }
    (u, f, step < step_floor)
}

/// (restart index, minimizer coordinates, objective, converged, trace)
type SolverRun = (usize, Vec<f64>, f64, bool, Vec<f64>);

fn flatten_coords(coords: &[DVector<f64>]) -> Vec<f64> {
    coords.iter().flat_map(|c| c.iter().copied()).collect()
}

fn section_from_flat(phi: &Section, u: &[f64]) -> Result<Section> {
    let k = phi.quotient().s() - phi.quotient().m();
    let coords: Vec<DVector<f64>> = (0..phi.len())
        .map(|i| DVector::from_row_slice(&u[i * k..(i + 1) * k]))
        .collect();
    Section::lift(
        phi.quotient().clone(),
        phi.base().clone(),
        &coords,
        phi.scale(),
    )
}

/// Minimize `E_ε(ψ) + (1/τ)·‖ψ−φ‖²` over admissible sections via seeded
/// multistart pattern search, then drive `τ` down to assemble the
/// certificate's approximating sequence.
pub fn relax_energy(
    phi: &Section,
    class: &AdmissibleClass,
    params: &RelaxationParams,
    variant: SlopeVariant,
) -> Result<RelaxationResult> {
    params.validate()?;
    admissibility(phi, class)?;
    let q = phi.quotient();
    let base = phi.base();
    let n = base.len();
    let k = q.s() - q.m();
    let lambda = phi.scale();

    let metric = base.metric_matrix(q)?;
    // Fails fast when some point is isolated at this scale.
    let phi_slopes = slope_scalar_field_with_metric(phi, &metric, params.eps, variant)?;

    let s = q.s();
    let mut gaps = vec![0.0f64; n * n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                gaps[a * n + b] = q.fiber_gap(base.point(a), base.point(b), lambda)?;
            }
        }
    }
    let anchors: Vec<f64> = (0..n)
        .flat_map(|i| {
            let v = lambda * (q.pinv() * base.point(i));
            v.iter().copied().collect::<Vec<_>>()
        })
        .collect();
    let basis: Vec<f64> = {
        let nb = q.null_basis();
        (0..s).flat_map(|c| (0..k).map(move |j| nb[(c, j)]).collect::<Vec<_>>()).collect()
    };
    let eval = Evaluator {
        n,
        k,
        s,
        anchors,
        basis,
        gaps,
        balls: crate::slope::balls(&metric, params.eps),
        weights: base.weights().to_vec(),
        norm: q.norm_tag(),
        variant,
        radius: class.bound_radius,
        prox_values: phi.values().iter().flat_map(|v| v.iter().copied()).collect(),
        prox_weight: 1.0 / params.tau,
    };

    let u_phi = flatten_coords(&phi.coordinates());
    let dim = n * k;
    let initial_step = 0.25 * (1.0 + class.bound_radius);
    let step_floor = 1e-8;

    let starts: Vec<(usize, Vec<f64>)> = (0..params.restarts.max(1))
        .map(|r| {
            if r == 0 {
                (r, u_phi.clone())
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    params.seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                let scale = 0.5 * (1.0 + class.bound_radius);
                let delta: Vec<f64> = (0..dim)
                    .map(|_| rng.gen_range(-1.0f64..1.0) * scale)
                    .collect();
                // Retract toward the known-feasible anchor coordinates.
                let mut t = 1.0;
                loop {
                    let cand: Vec<f64> = u_phi
                        .iter()
                        .zip(&delta)
                        .map(|(u0, d)| u0 + t * d)
                        .collect();
                    if eval.feasible(&cand) {
                        return (r, cand);
                    }
                    t *= 0.5;
                    if t <= 1e-6 {
                        return (r, u_phi.clone());
                    }
                }
            }
        })
        .collect();

    let mut runs: Vec<SolverRun> = starts
        .into_par_iter()
        .map(|(r, start)| {
            let mut trace = Vec::new();
            let (u, f, converged) = pattern_search(
                &eval,
                start,
                initial_step,
                step_floor,
                params.max_iters,
                params.seed ^ (r as u64).wrapping_mul(0x517C_C1B7_2722_0A95),
                Some(&mut trace),
            );
            (r, u, f, converged, trace)
        })
        .collect();
    runs.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
    let (_, best_u, _, converged, trace) = runs.into_iter().next().expect("at least one restart");

    let minimizer = section_from_flat(phi, &best_u)?;
    let h2_field = slope_scalar_field_with_metric(&minimizer, &metric, params.eps, variant)?;
    let energy: f64 = h2_field
        .iter()
        .zip(base.weights())
        .map(|(s, w)| w * s * s)
        .sum();

    // Continuation: drive τ down geometrically until the iterate is close
    // enough to φ for the certificate's convergence clauses at params.tol.
    // The proximal bound ‖ψ_τ − φ‖ ≤ √(τ·E(φ)) sizes both the jumps and the
    // warm-start step.
    let phi_field = WeightedField::from_section(phi);
    let target = 0.25 * params.tol;
    let phi_energy: f64 = phi_slopes
        .iter()
        .zip(base.weights())
        .map(|(sl, w)| w * sl * sl)
        .sum();
    let mut sequence = vec![minimizer.clone()];
    let mut tau = params.tau;
    let mut current = best_u.clone();
    for _ in 0..16 {
        let last = sequence.last().expect("nonempty");
        let dist = lq_distance(
            &WeightedField::from_section(last),
            &phi_field,
            2.0,
            NormVariant::Sum,
        )?;
        if dist <= target {
            break;
        }
        tau *= 1e-3;
        let tightened = Evaluator {
            prox_weight: 1.0 / tau,
            anchors: eval.anchors.clone(),
            basis: eval.basis.clone(),
            gaps: eval.gaps.clone(),
            balls: eval.balls.clone(),
            weights: eval.weights.clone(),
            prox_values: eval.prox_values.clone(),
            ..eval
        };
        let warm_step = (tau * phi_energy.max(1.0))
            .sqrt()
            .clamp(1e-7, initial_step);
        // Warm starts converge in few sweeps; the distance test above is
        // what gates the loop, so the inner budget can stay small.
        let (u, _, _) = pattern_search(
            &tightened,
            current.clone(),
            warm_step,
            1e-9,
            params.max_iters.min(800),
            params.seed ^ sequence.len() as u64,
            None,
        );
        // Convex feasible set: the midpoint of consecutive iterates must
        // stay admissible.
        debug_assert!(tightened.feasible(
            &u.iter()
                .zip(&current)
                .map(|(a, b)| 0.5 * (a + b))
                .collect::<Vec<f64>>()
        ));
        current = u;
        sequence.push(section_from_flat(phi, &current)?);
    }

    // Certificate fields always carry asymptotic slopes: that is what the
    // convergence clause in its verification asks for, whichever variant
    // the energy was minimized with.
    let final_slopes = slope_scalar_field_with_metric(
        sequence.last().expect("nonempty"),
        &metric,
        params.eps,
        SlopeVariant::Asymptotic,
    )?;
    let phi_asym =
        slope_scalar_field_with_metric(phi, &metric, params.eps, SlopeVariant::Asymptotic)?;
    let h1: Vec<f64> = final_slopes
        .iter()
        .zip(&phi_asym)
        .map(|(a, b)| a.min(*b))
        .collect();
    let certificate = RelaxedSlopeCertificate {
        phi: phi.clone(),
        g: final_slopes.clone(),
        h1,
        h2: final_slopes,
        sequence,
        q_exponent: 2.0,
        eps: params.eps,
        class: *class,
    };

    Ok(RelaxationResult {
        minimizer,
        energy,
        h2_field,
        trace,
        converged,
        certificate,
    })
}

impl RelaxedSlopeCertificate {
    /// The certificate a bounded section always admits: its own slope field
    /// with the constant approximating sequence.
    pub fn constant(
        phi: &Section,
        eps: f64,
        q_exponent: f64,
        class: &AdmissibleClass,
    ) -> Result<Self> {
        admissibility(phi, class)?;
        let slope = slope_scalar_field(phi, eps, SlopeVariant::Asymptotic)?;
        Ok(Self {
            phi: phi.clone(),
            g: slope.clone(),
            h1: slope.clone(),
            h2: slope,
            sequence: vec![phi.clone()],
            q_exponent,
            eps,
            class: *class,
        })
    }

    fn same_subject(&self, other: &Self) -> bool {
        self.phi.same_base(&other.phi)
            && self.q_exponent == other.q_exponent
            && self.eps == other.eps
            && self.class == other.class
            && self
                .phi
                .values()
                .iter()
                .zip(other.phi.values())
                .all(|(a, b)| a == b)
    }
}

/// Check every clause of the certificate definition; failures are reported
/// with witnesses, never thrown.
pub fn verify_certificate(cert: &RelaxedSlopeCertificate, tol: f64) -> Result<TheoremReport> {
    let n = cert.phi.len();
    let name = "certificate";
    if cert.sequence.is_empty()
        || cert.g.len() != n
        || cert.h1.len() != n
        || cert.h2.len() != n
    {
        return Ok(TheoremReport {
            check_name: name.into(),
            pass: false,
            worst_margin: -1.0,
            tolerance: tol,
            witness: None,
            skipped: false,
            detail: Some("certificate fields are missing or mis-sized".into()),
        });
    }

    let mut worst = f64::INFINITY;
    let mut witness: Option<Witness> = None;
    let mut track = |margin: f64, indices: &[usize], scale: Option<f64>| {
        if margin < worst {
            worst = margin;
            witness = Some(Witness {
                indices: indices.to_vec(),
                scale,
            });
        }
    };

    for i in 0..n {
        track(cert.g[i], &[i], None);
        track(cert.h1[i], &[i], None);
        track(cert.h2[i], &[i], None);
        track(cert.g[i] - cert.h1[i], &[i], None);
        track(cert.h2[i] - cert.h1[i], &[i], None);
    }

    for (h, member) in cert.sequence.iter().enumerate() {
        if !member.same_base(&cert.phi) {
            return Ok(TheoremReport {
                check_name: name.into(),
                pass: false,
                worst_margin: -1.0,
                tolerance: tol,
                witness: Some(Witness {
                    indices: vec![h],
                    scale: None,
                }),
                skipped: false,
                detail: Some("sequence member lives over a different base".into()),
            });
        }
        track(
            cert.class.bound_radius + 1e-12 - member.sup_norm(),
            &[h],
            None,
        );
        track(cert.class.c - crate::slope::c_min(member)?, &[h], None);
    }

    let last = cert.sequence.last().expect("nonempty");
    let dist = lq_distance(
        &WeightedField::from_section(last),
        &WeightedField::from_section(&cert.phi),
        cert.q_exponent,
        NormVariant::Sum,
    )?;
    track(-dist, &[], None);

    let last_slopes = slope_scalar_field(last, cert.eps, SlopeVariant::Asymptotic)?;
    let base = cert.phi.base().clone();
    let slope_dist = lq_distance(
        &WeightedField::from_scalars(base.clone(), &last_slopes)?,
        &WeightedField::from_scalars(base, &cert.h2)?,
        cert.q_exponent,
        NormVariant::Sum,
    )?;
    track(-slope_dist, &[], None);

    Ok(TheoremReport {
        check_name: name.into(),
        pass: worst >= -tol,
        worst_margin: worst,
        tolerance: tol,
        witness,
        skipped: false,
        detail: None,
    })
}

/// Lattice meet of two certificates for the same section: pointwise-min
/// `G` and `H₁`, averaged approximating sequences, and the slope limit of
/// the combined sequence as `H₂`.
pub fn meet_certificates(
    a: &RelaxedSlopeCertificate,
    b: &RelaxedSlopeCertificate,
) -> Result<RelaxedSlopeCertificate> {
    if !a.same_subject(b) {
        return Err(Error::MixedBases);
    }
    let g: Vec<f64> = a.g.iter().zip(&b.g).map(|(x, y)| x.min(*y)).collect();
    let h1: Vec<f64> = a.h1.iter().zip(&b.h1).map(|(x, y)| x.min(*y)).collect();
    let len = a.sequence.len().max(b.sequence.len());
    let pick = |seq: &[Section], h: usize| seq[h.min(seq.len() - 1)].clone();
    let sequence: Vec<Section> = (0..len)
        .map(|h| combine_sections(0.5, &pick(&a.sequence, h), 0.5, &pick(&b.sequence, h)))
        .collect::<Result<_>>()?;
    let h2 = slope_scalar_field(
        sequence.last().ok_or(Error::EmptyInput)?,
        a.eps,
        SlopeVariant::Asymptotic,
    )?;
    Ok(RelaxedSlopeCertificate {
        phi: a.phi.clone(),
        g,
        h1,
        h2,
        sequence,
        q_exponent: a.q_exponent,
        eps: a.eps,
        class: a.class,
    })
}

/// The pointwise-min candidate together with the report of its domination
/// by the section's own slope field.
#[derive(Debug, Clone)]
pub struct MinimalSlope {
    pub field: Vec<f64>,
    pub domination: TheoremReport,
}

/// Pointwise minimum of verified certificates' `G` fields; the candidate
/// minimal relaxed slope.
pub fn minimal_relaxed_slope(
    certs: &[RelaxedSlopeCertificate],
    tol: f64,
) -> Result<MinimalSlope> {
    let first = certs.first().ok_or(Error::EmptyInput)?;
    for (idx, cert) in certs.iter().enumerate() {
        if !first.same_subject(cert) {
            return Err(Error::Validation {
                field: format!("certs[{idx}]"),
                reason: "certificates must share the section, exponent and scale".into(),
            });
        }
        let report = verify_certificate(cert, tol)?;
        if !report.pass {
            return Err(Error::UnverifiedCertificate {
                check: format!("certs[{idx}]: margin {}", report.worst_margin),
            });
        }
    }
    let n = first.phi.len();
    let field: Vec<f64> = (0..n)
        .map(|i| certs.iter().map(|c| c.g[i]).fold(f64::INFINITY, f64::min))
        .collect();

    let slope = slope_scalar_field(&first.phi, first.eps, SlopeVariant::Asymptotic)?;
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for i in 0..n {
        let margin = slope[i] - field[i];
        if margin < worst {
            worst = margin;
            witness = Some(Witness {
                indices: vec![i],
                scale: None,
            });
        }
    }
    Ok(MinimalSlope {
        field,
        domination: TheoremReport {
            check_name: "minimal_slope_domination".into(),
            pass: worst >= -tol,
            worst_margin: worst,
            tolerance: tol,
            witness,
            skipped: false,
            detail: None,
        },
    })
}

/// Run the relaxation and assert the representation identity: the reported
/// energy equals `Σ𝔪·H₂²`, never exceeds the unrelaxed energy, and never
/// dips below the total measure. Margins carry their slacks, so the report
/// tolerance is zero.
pub fn representation_check(
    phi: &Section,
    class: &AdmissibleClass,
    params: &RelaxationParams,
    variant: SlopeVariant,
) -> Result<TheoremReport> {
    let result = relax_energy(phi, class, params, variant)?;
    representation_report(phi, &result, params, variant)
}

/// The representation margins for an existing relaxation result. Split out
/// so perturbed results can be checked as negative controls.
pub fn representation_report(
    phi: &Section,
    result: &RelaxationResult,
    params: &RelaxationParams,
    variant: SlopeVariant,
) -> Result<TheoremReport> {
    let weights = phi.base().weights();
    let recomputed: f64 = result
        .h2_field
        .iter()
        .zip(weights)
        .map(|(s, w)| w * s * s)
        .sum();
    let unrelaxed = cheeger_energy(phi, params.eps, variant)?;
    let total_weight = phi.base().total_weight();

    let clauses = [
        ("energy equals weighted H2 square sum", params.tol - (result.energy - recomputed).abs()),
        ("relaxed energy below unrelaxed", unrelaxed + 1e-9 - result.energy),
        ("relaxed energy above total measure", result.energy - (total_weight - 1e-9)),
    ];
    let (detail, worst) = clauses
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(d, m)| (d.to_string(), *m))
        .expect("nonempty clauses");
    Ok(TheoremReport {
        check_name: "representation_formula".into(),
        pass: worst >= 0.0,
        worst_margin: worst,
        tolerance: 0.0,
        witness: None,
        skipped: false,
        detail: Some(detail),
    })
}
