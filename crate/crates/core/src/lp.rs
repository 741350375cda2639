//! Dense two-phase simplex for the small linear programs behind l1/linf
//! fiber distances. Problem sizes here are tiny (tens of variables), so a
//! textbook tableau with Bland's rule is plenty and yields the reduced-cost
//! optimality certificate the callers need.

use nalgebra::{DMatrix, DVector};

const PIVOT_EPS: f64 = 1e-11;

/// Outcome of a solved program together with its optimality certificate.
#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Optimal structural variables.
    pub x: Vec<f64>,
    /// Optimal objective value.
    pub objective: f64,
    /// How far the final reduced costs dip below zero (0.0 when clean).
    pub optimality_violation: f64,
}

/// Minimize `c·x` subject to `a x = b`, `x >= 0`.
///
/// Returns `None` when the program is infeasible or unbounded; neither
/// occurs for the norm-minimization programs built in this crate, but the
/// solver reports honestly rather than panicking.
pub fn solve_standard_form(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<LpSolution> {
    let m = a.len();
    let n = c.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert_eq!(b.len(), m);

    // Tableau columns: n structural, m artificial, 1 rhs.
    let cols = n + m + 1;
    let mut t = vec![vec![0.0f64; cols]; m];
    for (i, row) in a.iter().enumerate() {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for (j, &v) in row.iter().enumerate() {
            t[i][j] = sign * v;
        }
        t[i][n + i] = 1.0;
        t[i][cols - 1] = sign * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![0.0f64; n + m];
    phase1_cost[n..].fill(1.0);
    run_phase(&mut t, &mut basis, &phase1_cost, &[])?;
    let feas: f64 = basis
        .iter()
        .zip(t.iter())
        .map(|(&bj, row)| phase1_cost[bj] * row[cols - 1])
        .sum();
    if feas > 1e-7 {
        return None;
    }

    // Phase 2: real costs; artificials are barred from re-entering.
    let mut phase2_cost = vec![0.0f64; n + m];
    phase2_cost[..n].copy_from_slice(c);
    let banned: Vec<usize> = (n..n + m).collect();
    run_phase(&mut t, &mut basis, &phase2_cost, &banned)?;

    let mut x = vec![0.0f64; n];
    for (i, &bj) in basis.iter().enumerate() {
        if bj < n {
            x[bj] = t[i][cols - 1];
        }
    }
    let objective: f64 = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    let violation = worst_reduced_cost(&t, &basis, &phase2_cost, &banned);
    Some(LpSolution {
        x,
        objective,
        optimality_violation: violation.max(0.0),
    })
}

fn reduced_cost(t: &[Vec<f64>], basis: &[usize], cost: &[f64], j: usize) -> f64 {
    let mut r = cost[j];
    for (i, row) in t.iter().enumerate() {
        r -= cost[basis[i]] * row[j];
    }
    r
}

fn worst_reduced_cost(t: &[Vec<f64>], basis: &[usize], cost: &[f64], banned: &[usize]) -> f64 {
    let nv = cost.len();
    let mut worst = 0.0f64;
    for j in 0..nv {
        if banned.contains(&j) || basis.contains(&j) {
            continue;
        }
        worst = worst.max(-reduced_cost(t, basis, cost, j));
    }
    worst
}

fn run_phase(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    banned: &[usize],
) -> Option<()> {
    let m = t.len();
    let cols = t[0].len();
    let nv = cost.len();
    // Bland's rule on both choices guarantees termination.
    loop {
        let mut entering = None;
        for j in 0..nv {
            if banned.contains(&j) || basis.contains(&j) {
                continue;
            }
            if reduced_cost(t, basis, cost, j) < -PIVOT_EPS {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else {
            return Some(());
        };
        let mut leaving: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if t[i][e] > PIVOT_EPS {
                let ratio = t[i][cols - 1] / t[i][e];
                if ratio < best_ratio - PIVOT_EPS
                    || (ratio < best_ratio + PIVOT_EPS
                        && leaving.is_some_and(|l| basis[i] < basis[l]))
                {
                    best_ratio = ratio;
                    leaving = Some(i);
                }
            }
        }
        let l = leaving?; // unbounded otherwise
        pivot(t, l, e);
        basis[l] = e;
    }
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let p = t[row][col];
    for entry in t[row].iter_mut() {
        *entry /= p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i != row {
            let f = r[col];
            if f != 0.0 {
                for (entry, pv) in r.iter_mut().zip(&pivot_row) {
                    *entry -= f * pv;
                }
            }
        }
    }
}

/// Which polyhedral norm a distance program minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyNorm {
    L1,
    Linf,
}

/// Minimize `‖r − n_basis·v‖` over free `v` for the given polyhedral norm.
///
/// Returns the optimal value, the minimizer `v`, and the reduced-cost
/// violation of the underlying program.
pub fn min_norm_over_affine(
    norm: PolyNorm,
    r: &DVector<f64>,
    n_basis: &DMatrix<f64>,
) -> Option<(f64, DVector<f64>, f64)> {
    let s = r.len();
    let k = n_basis.ncols();
    debug_assert_eq!(n_basis.nrows(), s);

    // Variables: v = p − q with p,q >= 0, then the bound variables t,
    // then per-row surplus variables.
    let nt = match norm {
        PolyNorm::L1 => s,
        PolyNorm::Linf => 1,
    };
    let nvars = 2 * k + nt + 2 * s;
    let mut c = vec![0.0f64; nvars];
    for j in 0..nt {
        c[2 * k + j] = 1.0;
    }

    let mut a = vec![vec![0.0f64; nvars]; 2 * s];
    let mut b = vec![0.0f64; 2 * s];
    for i in 0..s {
        let t_col = match norm {
            PolyNorm::L1 => 2 * k + i,
            PolyNorm::Linf => 2 * k,
        };
        // n·v + t − s1 = r   and   −n·v + t − s2 = −r
        for j in 0..k {
            a[i][j] = n_basis[(i, j)];
            a[i][k + j] = -n_basis[(i, j)];
            a[s + i][j] = -n_basis[(i, j)];
            a[s + i][k + j] = n_basis[(i, j)];
        }
        a[i][t_col] = 1.0;
        a[i][2 * k + nt + i] = -1.0;
        a[s + i][t_col] = 1.0;
        a[s + i][2 * k + nt + s + i] = -1.0;
        b[i] = r[i];
        b[s + i] = -r[i];
    }

    let sol = solve_standard_form(&c, &a, &b)?;
    let v = DVector::from_fn(k, |j, _| sol.x[j] - sol.x[k + j]);
    Some((sol.objective, v, sol.optimality_violation))
}
