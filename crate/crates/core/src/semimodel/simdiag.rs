//! Simultaneous diagonalization of commuting unitary matrices via a random
//! Hermitian combination, with per-cluster refinement and a retry loop.

use super::SemiModelError;
use crate::geometry::C64;
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SimultaneousDiagonalization {
    /// Unitary matrix whose columns are joint eigenvectors.
    pub q: DMatrix<C64>,
    /// Per-matrix eigenvalue phases in (-pi, pi], column-aligned with `q`.
    pub phases: Vec<Vec<f64>>,
    /// Largest off-diagonal entry of all `Q* U_j Q`.
    pub residual: f64,
}

fn commutator_norm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a * b - b * a).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let gram = u.adjoint() * u;
    let mut dev = 0.0_f64;
    for j in 0..n {
        for k in 0..n {
            let expect = if j == k { 1.0 } else { 0.0 };
            dev = dev.max((gram[(j, k)] - C64::new(expect, 0.0)).norm());
        }
    }
    dev
}

/// Joint unitary diagonalization: returns `Q` unitary with `Q* U_j Q`
/// diagonal for all `j`. Inputs must be unitary and pairwise commuting
/// within `tol`.
pub fn simultaneous_diagonalize(
    matrices: &[DMatrix<C64>],
    tol: f64,
) -> Result<SimultaneousDiagonalization, SemiModelError> {
    if matrices.is_empty() {
        return Err(SemiModelError::Diagonalization {
            detail: "empty input".into(),
        });
    }
    let n = matrices[0].nrows();
    for (j, u) in matrices.iter().enumerate() {
        if u.nrows() != n || u.ncols() != n {
            return Err(SemiModelError::Diagonalization {
                detail: format!("matrix {j} has mismatched shape"),
            });
        }
        let dev = unitarity_deviation(u);
        if dev > tol.max(1e-10) {
            return Err(SemiModelError::Diagonalization {
                detail: format!("matrix {j} is not unitary (deviation {dev})"),
            });
        }
    }
    let mut worst_comm = 0.0_f64;
    for i in 0..matrices.len() {
        for j in i + 1..matrices.len() {
            worst_comm = worst_comm.max(commutator_norm(&matrices[i], &matrices[j]));
        }
    }
    if worst_comm > tol {
        return Err(SemiModelError::Diagonalization {
            detail: format!("matrices do not commute (max commutator norm {worst_comm})"),
        });
    }
    if n == 0 {
        return Ok(SimultaneousDiagonalization {
            q: DMatrix::zeros(0, 0),
            phases: vec![Vec::new(); matrices.len()],
            residual: 0.0,
        });
    }

    // Retry with fresh random coefficients if a degenerate combination
    // leaves residual off-diagonal mass.
    let mut last_residual = f64::INFINITY;
    for attempt in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1234 ^ attempt);
        let q = joint_eigenvectors(matrices, &mut rng, 0);
        let residual = off_diagonal_residual(matrices, &q);
        last_residual = residual.min(last_residual);
        if residual < 1e-10 {
            let phases = matrices
                .iter()
                .map(|u| {
                    let d = q.adjoint() * u * &q;
                    (0..n).map(|i| phase_of(d[(i, i)])).collect()
                })
                .collect();
            return Ok(SimultaneousDiagonalization {
                q,
                phases,
                residual,
            });
        }
    }
    Err(SemiModelError::Diagonalization {
        detail: format!("off-diagonal residual {last_residual} after retries"),
    })
}

fn phase_of(c: C64) -> f64 {
    let t = c.im.atan2(c.re);
    // atan2 returns -pi at the branch cut; report it as +pi.
    if t <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        t
    }
}

fn off_diagonal_residual(matrices: &[DMatrix<C64>], q: &DMatrix<C64>) -> f64 {
    let n = q.nrows();
    let mut worst = 0.0_f64;
    for u in matrices {
        let d = q.adjoint() * u * q;
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    worst = worst.max(d[(j, k)].norm());
                }
            }
        }
    }
    worst
}

/// Eigenvectors of a random Hermitian combination, refined recursively
/// inside degenerate eigenvalue clusters.
fn joint_eigenvectors(
    matrices: &[DMatrix<C64>],
    rng: &mut ChaCha8Rng,
    depth: usize,
) -> DMatrix<C64> {
    let n = matrices[0].nrows();
    if n == 1 || depth > 8 {
        return DMatrix::identity(n, n);
    }
    let mut combo = DMatrix::<C64>::zeros(n, n);
    for u in matrices {
        let c = rng.gen_range(0.25..1.0);
        combo += (u + u.adjoint()) * C64::new(c, 0.0);
        let c2 = rng.gen_range(0.25..1.0);
        combo += (u - u.adjoint()) * C64::new(0.0, -c2);
    }
    let eig = combo.symmetric_eigen();
    // Sort eigenpairs by eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap()
    });
    let mut q = DMatrix::<C64>::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        q.set_column(col, &eig.eigenvectors.column(idx));
    }
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    // Cluster nearly-equal eigenvalues and recurse per cluster on the
    // projected matrices.
    let spread = (values[n - 1] - values[0]).abs().max(1.0);
    let cluster_tol = 1e-8 * spread;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[end - 1]).abs() < cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            let block = q.columns(start, end - start).into_owned();
            let projected: Vec<DMatrix<C64>> = matrices
                .iter()
                .map(|u| block.adjoint() * u * &block)
                .collect();
            let inner = joint_eigenvectors(&projected, rng, depth + 1);
            let refined = &block * inner;
            for (offset, col) in (start..end).enumerate() {
                q.set_column(col, &refined.column(offset));
            }
        }
        start = end;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
        let mut cols: Vec<nalgebra::DVector<C64>> = Vec::new();
        for _ in 0..n {
            let mut v = nalgebra::DVector::from_iterator(
                n,
                (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
            );
            for prev in &cols {
                let proj = prev.dotc(&v);
                v -= prev * proj;
            }
            let norm = v.norm();
            cols.push(v / C64::new(norm, 0.0));
        }
        DMatrix::from_columns(&cols)
    }

    fn diag_unitary(phases: &[f64]) -> DMatrix<C64> {
        let n = phases.len();
        let mut d = DMatrix::<C64>::zeros(n, n);
        for (i, t) in phases.iter().enumerate() {
            d[(i, i)] = C64::from_polar(1.0, *t);
        }
        d
    }

    #[test]
    fn already_diagonal_inputs_stay_diagonal() {
        let d1 = diag_unitary(&[0.3, -0.9, 2.2]);
        let d2 = diag_unitary(&[1.1, 0.4, -2.0]);
        let out = simultaneous_diagonalize(&[d1.clone(), d2.clone()], 1e-10).unwrap();
        assert!(out.residual < 1e-12);
        // Q is a permutation up to phase: each column has a single unit
        // entry.
        for col in 0..3 {
            let mut big = 0;
            for row in 0..3 {
                if out.q[(row, col)].norm() > 0.5 {
                    big += 1;
                }
            }
            assert_eq!(big, 1);
        }
    }

    #[test]
    fn construct_then_recover() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..10 {
            let n = rng.gen_range(2..=4);
            let v = random_unitary(&mut rng, n);
            let p1: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let p2: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let u1 = &v * diag_unitary(&p1) * v.adjoint();
            let u2 = &v * diag_unitary(&p2) * v.adjoint();
            let out = simultaneous_diagonalize(&[u1.clone(), u2.clone()], 1e-9).unwrap();
            assert!(out.residual < 1e-10, "trial {trial}: residual {}", out.residual);
            // Recovered phase multisets match the constructed ones up to a
            // common permutation: sort both jointly by the first list.
            let mut got: Vec<(f64, f64)> = out.phases[0]
                .iter()
                .copied()
                .zip(out.phases[1].iter().copied())
                .collect();
            let wrap = |t: f64| {
                let mut t = t.rem_euclid(2.0 * std::f64::consts::PI);
                if t > std::f64::consts::PI {
                    t -= 2.0 * std::f64::consts::PI;
                }
                t
            };
            let mut expect: Vec<(f64, f64)> = p1
                .iter()
                .map(|&t| wrap(t))
                .zip(p2.iter().map(|&t| wrap(t)))
                .collect();
            let key = |a: &(f64, f64)| (a.0, a.1);
            got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            expect.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            for (g, e) in got.iter().zip(&expect) {
                assert!(
                    (g.0 - e.0).abs() < 1e-9 && (g.1 - e.1).abs() < 1e-9,
                    "trial {trial}: {g:?} vs {e:?}"
                );
            }
        }
    }

    #[test]
    fn single_matrix_columns_are_eigenvectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_unitary(&mut rng, 2);
        let u = &v * diag_unitary(&[0.7, -1.3]) * v.adjoint();
        let out = simultaneous_diagonalize(&[u.clone()], 1e-10).unwrap();
        for col in 0..2 {
            let x = out.q.column(col).into_owned();
            let ux = &u * &x;
            let lambda = C64::from_polar(1.0, out.phases[0][col]);
            let err = (&ux - &x * lambda).norm();
            assert!(err < 1e-10, "column {col} is not an eigenvector: {err}");
        }
    }

    #[test]
    fn rejects_non_commuting_input() {
        // Two reflections about different axes do not commute.
        let u1 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let theta: f64 = 0.7;
        let u2 = DMatrix::from_row_slice(
            2,
            2,
            &[
                c(theta.cos(), 0.0),
                c(theta.sin(), 0.0),
                c(theta.sin(), 0.0),
                c(-theta.cos(), 0.0),
            ],
        );
        match simultaneous_diagonalize(&[u1, u2], 1e-9) {
            Err(SemiModelError::Diagonalization { detail }) => {
                assert!(detail.contains("commute"), "{detail}");
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn repeated_eigenvalues_are_refined_per_matrix() {
        // U1 has a double eigenvalue; U2 separates the cluster.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let v = random_unitary(&mut rng, 3);
        let u1 = &v * diag_unitary(&[0.4, 0.4, -1.0]) * v.adjoint();
        let u2 = &v * diag_unitary(&[0.9, -2.1, 0.3]) * v.adjoint();
        let out = simultaneous_diagonalize(&[u1, u2], 1e-9).unwrap();
        assert!(out.residual < 1e-10, "residual {}", out.residual);
    }
}
