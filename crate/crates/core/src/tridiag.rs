//! Thomas algorithm for tridiagonal systems.

/// A factored tridiagonal matrix. Row `i` reads
/// `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`; `lower[0]` and
/// `upper[n-1]` are ignored. Factoring once allows repeated solves with
/// different right-hand sides.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    // modified upper coefficients c'_i
    cprime: Vec<f64>,
    // reciprocal pivots 1 / (b_i - a_i c'_{i-1})
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    /// Factors the matrix. Panics if the sizes differ; assumes no zero pivot,
    /// which holds for the diagonally dominant systems used by the solver.
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        assert!(lower.len() == n && upper.len() == n, "tridiagonal size mismatch");
        let mut cprime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let a = if i == 0 { 0.0 } else { lower[i] };
            let inv = 1.0 / (diag[i] - a * prev_c);
            inv_pivot[i] = inv;
            let c = if i + 1 == n { 0.0 } else { upper[i] * inv };
            cprime[i] = c;
            prev_c = c;
        }
        let mut lower = lower.to_vec();
        if let Some(l0) = lower.first_mut() {
            *l0 = 0.0;
        }
        Tridiagonal {
            lower,
            cprime,
            inv_pivot,
        }
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Solves in place: on return `rhs` holds the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        assert_eq!(rhs.len(), self.len(), "rhs length mismatch");
        let mut prev = 0.0;
        for ((r, &a), &inv) in rhs.iter_mut().zip(&self.lower).zip(&self.inv_pivot) {
            prev = (*r - a * prev) * inv;
            *r = prev;
        }
        let mut next = 0.0;
        for (r, &c) in rhs.iter_mut().zip(&self.cprime).rev() {
            next = *r - c * next;
            *r = next;
        }
    }
}

/// One-shot solve of a tridiagonal system.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    Tridiagonal::factor(lower, diag, upper).solve_in_place(rhs);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matvec(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn identity_and_single() {
        let mut r = vec![3.0];
        solve(&[0.0], &[2.0], &[0.0], &mut r);
        assert_eq!(r, vec![1.5]);
        let mut r = vec![1.0, 2.0, 3.0];
        solve(&[0.0; 3], &[1.0; 3], &[0.0; 3], &mut r);
        assert_eq!(r, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn neumann_constant_is_fixed_point() {
        let n = 50;
        let r = 0.7;
        let mut lower = vec![-r; n];
        let diag = vec![1.0 + 2.0 * r; n];
        let mut upper = vec![-r; n];
        upper[0] = -2.0 * r;
        lower[n - 1] = -2.0 * r;
        let mut x = vec![0.25; n];
        solve(&lower, &diag, &upper, &mut x);
        assert!(x.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    proptest! {
        #[test]
        fn residual_is_small(
            n in 1usize..60,
            seed in proptest::collection::vec(-1.0f64..1.0, 180),
        ) {
            let lower: Vec<f64> = (0..n).map(|i| seed[i]).collect();
            let upper: Vec<f64> = (0..n).map(|i| seed[60 + i]).collect();
            let diag: Vec<f64> = (0..n).map(|i| 2.5 + seed[120 + i].abs()).collect();
            let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let b = matvec(&lower, &diag, &upper, &xs);
            let mut sol = b.clone();
            let f = Tridiagonal::factor(&lower, &diag, &upper);
            f.solve_in_place(&mut sol);
            for (s, x) in sol.iter().zip(&xs) {
                prop_assert!((s - x).abs() < 1e-12);
            }
        }
    }
}
