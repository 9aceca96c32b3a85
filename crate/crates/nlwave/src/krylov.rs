//! Conjugate-residual iteration for symmetric (possibly indefinite) systems.

/// Solves `A x = b` for a symmetric operator given as a matrix-vector
/// closure. Returns the solution or `None` on breakdown / non-convergence.
///
/// Conjugate residuals minimize `‖b − Ax‖` over the Krylov space, so an
/// indefinite but nonsingular `A` is still handled; a (near-)singular one
/// shows up as breakdown of the `⟨Ap, Ap⟩` inner product.
pub fn conjugate_residual(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Option<Vec<f64>> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Some(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ar = vec![0.0; n];
    apply(&r, &mut ar);
    let mut ap = ar.clone();
    let mut rar = dot(&r, &ar);

    for _ in 0..max_iter {
        let apap = dot(&ap, &ap);
        if !apap.is_finite() || apap <= f64::MIN_POSITIVE * 1e10 {
            return None;
        }
        let alpha = rar / apap;
        if !alpha.is_finite() {
            return None;
        }
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * bnorm {
            return Some(x);
        }
        apply(&r, &mut ar);
        let rar_new = dot(&r, &ar);
        let beta = rar_new / rar;
        if !beta.is_finite() {
            return None;
        }
        rar = rar_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        // Ap = Ar + beta * Ap
        for i in 0..n {
            ap[i] = ar[i] + beta * ap[i];
        }
    }
    None
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_diagonal_system() {
        let d = [2.0, 5.0, 0.5, 9.0];
        let b = [1.0, 1.0, 1.0, 1.0];
        let mut apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..4 {
                y[i] = d[i] * x[i];
            }
        };
        let x = conjugate_residual(&mut apply, &b, 1e-14, 50).unwrap();
        for i in 0..4 {
            assert!((x[i] - 1.0 / d[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn solves_indefinite_system() {
        // symmetric indefinite 3x3
        let a = [[2.0, 1.0, 0.0], [1.0, -1.0, 0.5], [0.0, 0.5, 3.0]];
        let b = [1.0, 2.0, -1.0];
        let mut apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..3 {
                y[i] = (0..3).map(|j| a[i][j] * x[j]).sum();
            }
        };
        let x = conjugate_residual(&mut apply, &b, 1e-13, 100).unwrap();
        let mut res = [0.0; 3];
        apply(&x, &mut res);
        for i in 0..3 {
            assert!((res[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn reports_singularity() {
        // rank-deficient system with incompatible right-hand side
        let mut apply = |x: &[f64], y: &mut [f64]| {
            y[0] = x[0];
            y[1] = 0.0;
        };
        let b = [1.0, 1.0];
        assert!(conjugate_residual(&mut apply, &b, 1e-14, 50).is_none());
    }
}
