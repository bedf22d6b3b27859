//! Self-contained dense numerics: fixed-step RK4, the continuous Lyapunov
//! matrix equation, and symmetric eigenvalue extremes.
//!
//! Everything here targets desk-scale problems (dimensions up to a few
//! dozen), so the solvers are direct and exhaustively checkable: the
//! Lyapunov equation goes through the Kronecker-vectorized linear system
//! with partial pivoting, and eigenvalue extremes come from cyclic Jacobi
//! rotations.

use crate::error::{LiveError, Result};

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(LiveError::InvalidArgument(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LiveError::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LiveError::InvalidArgument("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn scalar(v: f64) -> Self {
        Self { rows: 1, cols: 1, data: vec![v] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// y = A x, writing into `out`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for i in 0..self.rows {
            let mut acc = 0.0;
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            out[i] = acc;
        }
    }

    /// xᵀ A x for square A.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let mut acc = 0.0;
        for i in 0..self.rows {
            let mut row_acc = 0.0;
            for j in 0..self.cols {
                row_acc += self.get(i, j) * x[j];
            }
            acc += x[i] * row_acc;
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Solve M y = b by Gaussian elimination with partial pivoting. M is consumed.
pub fn solve_linear(mut m: DenseMatrix, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = m.rows;
    assert_eq!(n, m.cols);
    assert_eq!(n, b.len());
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = m.get(col, col).abs();
        for r in (col + 1)..n {
            let v = m.get(r, col).abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val == 0.0 || !pivot_val.is_finite() {
            return Err(LiveError::SingularSystem);
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = m.get(col, j);
                m.set(col, j, m.get(pivot_row, j));
                m.set(pivot_row, j, tmp);
            }
            b.swap(col, pivot_row);
        }
        let inv = 1.0 / m.get(col, col);
        for r in (col + 1)..n {
            let factor = m.get(r, col) * inv;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m.get(r, j) - factor * m.get(col, j);
                m.set(r, j, v);
            }
            b[r] -= factor * b[col];
        }
    }
    let mut y = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in (row + 1)..n {
            acc -= m.get(row, j) * y[j];
        }
        y[row] = acc / m.get(row, row);
    }
    Ok(y)
}

/// Solve PA + AᵀP = -I for symmetric positive definite P.
///
/// The n²-unknown Kronecker system (Aᵀ⊗I + I⊗Aᵀ) vec(P) = vec(-I) is solved
/// directly; the result is symmetrized and then certified: residual
/// ‖PA + AᵀP + I‖_max must not exceed 1e-8 and P must be positive definite.
/// A non-Hurwitz input surfaces as a definiteness error.
pub fn solve_lyapunov(a: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != a.cols {
        return Err(LiveError::InvalidArgument("matrix must be square".into()));
    }
    let n = a.rows;
    let nn = n * n;
    // vec is row-major: vec(P)[i*n + j] = P[i][j].
    // (PA)[i][j] = sum_k P[i][k] A[k][j], (AᵀP)[i][j] = sum_k A[k][i] P[k][j].
    let mut m = DenseMatrix::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                // d(PA)[i][j] / dP[i][k]
                let c = m.get(row, i * n + k) + a.get(k, j);
                m.set(row, i * n + k, c);
                // d(AᵀP)[i][j] / dP[k][j]
                let c = m.get(row, k * n + j) + a.get(k, i);
                m.set(row, k * n + j, c);
            }
        }
    }
    let mut rhs = vec![0.0; nn];
    for i in 0..n {
        rhs[i * n + i] = -1.0;
    }
    let solution = solve_linear(m, rhs)?;
    let mut p = DenseMatrix::new(n, n, solution)?;
    // Symmetrize; the exact solution is symmetric, so this only removes noise.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (p.get(i, j) + p.get(j, i));
            p.set(i, j, avg);
            p.set(j, i, avg);
        }
    }
    let residual = lyapunov_residual(a, &p);
    if residual > 1e-8 {
        return Err(LiveError::Numerical {
            t: 0.0,
            reason: format!("Lyapunov residual {residual:.3e} exceeds 1e-8"),
        });
    }
    let (lambda_min, _) = sym_eig_extremes(&p)?;
    if lambda_min <= 0.0 {
        return Err(LiveError::NotDefinite(lambda_min));
    }
    Ok(p)
}

/// ‖PA + AᵀP + I‖_max.
pub fn lyapunov_residual(a: &DenseMatrix, p: &DenseMatrix) -> f64 {
    let n = a.rows();
    let pa = p.matmul(a);
    let atp = a.transpose().matmul(p);
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { -1.0 } else { 0.0 };
            worst = worst.max((pa.get(i, j) + atp.get(i, j) - target).abs());
        }
    }
    worst
}

/// Eigenvalue extremes of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps run until the off-diagonal Frobenius norm falls below
/// max(1e-14, 1e-13·‖P‖_F), well inside the 1e-12 target.
pub fn sym_eig_extremes(p: &DenseMatrix) -> Result<(f64, f64)> {
    Ok(extremes(&sym_eigenvalues(p)?))
}

/// All eigenvalues of a symmetric matrix (unordered).
pub fn sym_eigenvalues(p: &DenseMatrix) -> Result<Vec<f64>> {
    if p.rows != p.cols {
        return Err(LiveError::InvalidArgument("matrix must be square".into()));
    }
    let asym = p.max_asymmetry();
    let scale = p.max_abs().max(1.0);
    if asym > 1e-10 * scale {
        return Err(LiveError::NotSymmetric(asym));
    }
    let n = p.rows;
    if n == 1 {
        return Ok(vec![p.get(0, 0)]);
    }
    let mut a = p.clone();
    // Enforce exact symmetry before rotating.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, avg);
            a.set(j, i, avg);
        }
    }
    let frob: f64 = a.data.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = (1e-13 * frob).max(1e-14);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let apq = a.get(i, j);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(i, i);
                let aqq = a.get(j, j);
                let theta = (aqq - app) / (2.0 * apq);
                // Stable tangent of the rotation angle.
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let aik = a.get(i, k);
                    let ajk = a.get(j, k);
                    a.set(i, k, c * aik - s * ajk);
                    a.set(j, k, s * aik + c * ajk);
                }
                for k in 0..n {
                    let aki = a.get(k, i);
                    let akj = a.get(k, j);
                    a.set(k, i, c * aki - s * akj);
                    a.set(k, j, s * aki + c * akj);
                }
            }
        }
    }
    Ok((0..n).map(|i| a.get(i, i)).collect())
}

fn extremes(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Classical RK4 on an explicit grid. The grid must start at t0 and end at t1;
/// one step is taken per consecutive pair. Samples at every grid point are
/// returned, the first being x0 itself.
pub fn rk4_integrate<F>(field: F, x0: &[f64], grid: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let mut field = field;
    let dim = x0.len();
    let mut samples = Vec::with_capacity(grid.len());
    samples.push(x0.to_vec());
    if grid.is_empty() {
        return Err(LiveError::InvalidArgument("empty integration grid".into()));
    }
    let mut state = x0.to_vec();
    let mut scratch = Rk4Scratch::new(dim);
    for w in grid.windows(2) {
        let (t, t_next) = (w[0], w[1]);
        rk4_step(&mut field, t, t_next - t, &mut state, &mut scratch)?;
        if state.iter().any(|v| !v.is_finite()) {
            return Err(LiveError::Numerical { t: t_next, reason: "non-finite state".into() });
        }
        samples.push(state.clone());
    }
    Ok(samples)
}

/// Reusable stage buffers for the in-place step.
pub struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn resize(&mut self, dim: usize) {
        self.k1.resize(dim, 0.0);
        self.k2.resize(dim, 0.0);
        self.k3.resize(dim, 0.0);
        self.k4.resize(dim, 0.0);
        self.tmp.resize(dim, 0.0);
    }
}

/// One classical RK4 step, updating `x` in place.
pub fn rk4_step<F>(field: &mut F, t: f64, h: f64, x: &mut [f64], s: &mut Rk4Scratch) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let dim = x.len();
    debug_assert_eq!(s.k1.len(), dim);
    field(t, x, &mut s.k1)?;
    for i in 0..dim {
        s.tmp[i] = x[i] + 0.5 * h * s.k1[i];
    }
    field(t + 0.5 * h, &s.tmp, &mut s.k2)?;
    for i in 0..dim {
        s.tmp[i] = x[i] + 0.5 * h * s.k2[i];
    }
    field(t + 0.5 * h, &s.tmp, &mut s.k3)?;
    for i in 0..dim {
        s.tmp[i] = x[i] + h * s.k3[i];
    }
    field(t + h, &s.tmp, &mut s.k4)?;
    let sixth = h / 6.0;
    for i in 0..dim {
        x[i] += sixth * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
    Ok(())
}

/// Uniform step grid over [a, b]: points a + j·h for j = 0..J, then b.
/// An interior point closer to b than h·1e-9 is dropped in favor of b so the
/// final step is never degenerate. Every produced point is computed as
/// a + (j as f64) * h, which keeps restriction to a shorter horizon bit-exact.
pub fn snapped_grid(a: f64, b: f64, h: f64) -> Vec<f64> {
    debug_assert!(b > a);
    debug_assert!(h > 0.0);
    let eps = h * 1e-9;
    let mut grid = Vec::with_capacity(((b - a) / h) as usize + 2);
    grid.push(a);
    let mut j = 1u64;
    loop {
        let t = a + (j as f64) * h;
        if t >= b - eps {
            break;
        }
        grid.push(t);
        j += 1;
    }
    grid.push(b);
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_constant_field_is_constant() {
        let grid = snapped_grid(0.0, 1.0, 0.25);
        let samples = rk4_integrate(
            |_t, _x, dx| {
                dx[0] = 0.0;
                Ok(())
            },
            &[3.5],
            &grid,
        )
        .unwrap();
        for s in &samples {
            assert_eq!(s[0], 3.5);
        }
    }

    #[test]
    fn rk4_exponential_decay_matches_closed_form() {
        // x' = -x, x(1) = e^{-1}.
        let grid = snapped_grid(0.0, 1.0, 1e-3);
        let samples = rk4_integrate(
            |_t, x, dx| {
                dx[0] = -x[0];
                Ok(())
            },
            &[1.0],
            &grid,
        )
        .unwrap();
        let end = samples.last().unwrap()[0];
        assert!((end - (-1.0f64).exp()).abs() < 1e-10, "got {end}");
    }

    #[test]
    fn rk4_rotation_returns_after_one_period() {
        // x' = [[0,1],[-1,0]] x over [0, 2π].
        let grid = snapped_grid(0.0, 2.0 * std::f64::consts::PI, 1e-3);
        let samples = rk4_integrate(
            |_t, x, dx| {
                dx[0] = x[1];
                dx[1] = -x[0];
                Ok(())
            },
            &[1.0, 0.0],
            &grid,
        )
        .unwrap();
        let end = samples.last().unwrap();
        assert!((end[0] - 1.0).abs() < 1e-6);
        assert!(end[1].abs() < 1e-6);
    }

    #[test]
    fn lyapunov_scalar() {
        let p = solve_lyapunov(&DenseMatrix::scalar(-1.0)).unwrap();
        assert!((p.get(0, 0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn lyapunov_negative_identity() {
        let a = DenseMatrix::new(2, 2, vec![-1.0, 0.0, 0.0, -1.0]).unwrap();
        let p = solve_lyapunov(&a).unwrap();
        assert!((p.get(0, 0) - 0.5).abs() < 1e-14);
        assert!((p.get(1, 1) - 0.5).abs() < 1e-14);
        assert!(p.get(0, 1).abs() < 1e-14);
    }

    #[test]
    fn lyapunov_jordan_block() {
        let a = DenseMatrix::new(2, 2, vec![-1.0, 1.0, 0.0, -1.0]).unwrap();
        let p = solve_lyapunov(&a).unwrap();
        // Hand-solved: P = [[0.5, 0.25], [0.25, 0.75]].
        assert!((p.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((p.get(0, 1) - 0.25).abs() < 1e-12);
        assert!((p.get(1, 1) - 0.75).abs() < 1e-12);
        assert!(lyapunov_residual(&a, &p) <= 1e-8);
        let (lo, _) = sym_eig_extremes(&p).unwrap();
        assert!(lo > 0.0);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let err = solve_lyapunov(&DenseMatrix::scalar(1.0)).unwrap_err();
        assert!(matches!(err, LiveError::NotDefinite(_)));
    }

    #[test]
    fn eig_extremes_examples() {
        let half = DenseMatrix::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(sym_eig_extremes(&half).unwrap(), (0.5, 0.5));

        let diag = DenseMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 4.0]).unwrap();
        assert_eq!(sym_eig_extremes(&diag).unwrap(), (1.0, 4.0));

        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let m = DenseMatrix::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let (lo, hi) = sym_eig_extremes(&m).unwrap();
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eig_rejects_asymmetric() {
        let m = DenseMatrix::new(2, 2, vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(sym_eig_extremes(&m), Err(LiveError::NotSymmetric(_))));
    }

    #[test]
    fn quad_form_sandwich_on_random_vectors() {
        let p = DenseMatrix::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let (lo, hi) = sym_eig_extremes(&p).unwrap();
        let mut rng = crate::rng::SplitMix64::new(7);
        for _ in 0..200 {
            let x = [rng.range(-3.0, 3.0), rng.range(-3.0, 3.0)];
            let nx2: f64 = x.iter().map(|v| v * v).sum();
            let q = p.quad_form(&x);
            assert!(q >= lo * nx2 - 1e-9 * nx2.max(1.0));
            assert!(q <= hi * nx2 + 1e-9 * nx2.max(1.0));
        }
    }
}
