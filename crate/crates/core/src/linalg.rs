//! Symmetric eigensolvers: Sturm bisection for tridiagonal matrices, band
//! Cholesky, and shift-invert block Lanczos for banded operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Number of eigenvalues of the symmetric tridiagonal matrix
/// `(diag, off)` strictly below `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The lowest `count` eigenvalues of a symmetric tridiagonal matrix, by
/// bisection on the Sturm count inside the Gershgorin interval.
pub fn tridiagonal_lowest(diag: &[f64], off: &[f64], count: usize) -> Result<Vec<f64>> {
    let n = diag.len();
    if off.len() + 1 != n && !(n == 0 && off.is_empty()) {
        return Err(Error::InvalidParameter(format!(
            "tridiagonal: {} diagonal entries need {} off-diagonal, got {}",
            n,
            n.saturating_sub(1),
            off.len()
        )));
    }
    if count > n {
        return Err(Error::OutOfRange(format!("asked for {count} eigenvalues of an {n} x {n} matrix")));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let pad = 1e-12 * (hi - lo).abs().max(1.0);
    lo -= pad;
    hi += pad;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        // smallest x with more than k eigenvalues below it
        let (mut a, mut b) = (lo, hi);
        while b - a > 4.0 * f64::EPSILON * (a.abs().max(b.abs())) && b - a > f64::MIN_POSITIVE {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sturm_count(diag, off, mid) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

/// Symmetric band matrix, lower storage: `band[i][d] = A[i][i - d]` for
/// `d <= bw`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    pub n: usize,
    pub bw: usize,
    band: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    fn idx(&self, i: usize, d: usize) -> usize {
        i * (self.bw + 1) + d
    }

    /// `A[i][j]` (zero outside the band).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        if d > self.bw {
            0.0
        } else {
            self.band[self.idx(i, d)]
        }
    }

    /// Adds `v` to `A[i][j]` (and `A[j][i]`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        assert!(d <= self.bw, "entry ({i}, {j}) outside bandwidth {}", self.bw);
        let k = self.idx(i, d);
        self.band[k] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let a = self.band[self.idx(i, 0)];
            y[i] += a * x[i];
            for d in 1..=self.bw.min(i) {
                let a = self.band[self.idx(i, d)];
                if a != 0.0 {
                    y[i] += a * x[i - d];
                    y[i - d] += a * x[i];
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Cholesky factor of `A + shift I`.
    pub fn cholesky(&self, shift: f64) -> Result<BandCholesky> {
        let bw = self.bw;
        let mut l = self.band.clone();
        let w = bw + 1;
        for i in 0..self.n {
            l[i * w] += shift;
        }
        for j in 0..self.n {
            // L[j][j]
            let mut s = l[j * w];
            for d in 1..=bw.min(j) {
                let v = l[j * w + d];
                s -= v * v;
            }
            if !(s > 0.0) {
                return Err(Error::Eigen(format!(
                    "band Cholesky: pivot {s:e} at row {j} is not positive"
                )));
            }
            let djj = s.sqrt();
            l[j * w] = djj;
            // L[i][j] for i in j+1..=j+bw
            for i in j + 1..(j + bw + 1).min(self.n) {
                let dij = i - j;
                let mut s = l[i * w + dij];
                // sum over k < j with k >= i - bw
                let k0 = i.saturating_sub(bw);
                for k in k0..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                l[i * w + dij] = s / djj;
            }
        }
        Ok(BandCholesky { n: self.n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// Solves `L L^T x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut s = x[i];
            for d in 1..=self.bw.min(i) {
                s -= self.l[i * w + d] * x[i - d];
            }
            x[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for d in 1..=self.bw.min(self.n - 1 - i) {
                s -= self.l[(i + d) * w + d] * x[i + d];
            }
            x[i] = s / self.l[i * w];
        }
    }
}

/// Eigenpairs with residual diagnostics.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `||A v - lambda v|| / ||v||` per pair.
    pub residuals: Vec<f64>,
}

/// Residual tolerance: `||A v - lambda v|| <= RESIDUAL_TOL * max(1, |lambda|) ||v||`.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Dense solves are used up to this many unknowns.
pub const DENSE_LIMIT: usize = 800;

fn residual(a: &SymBand, lambda: f64, v: &[f64]) -> f64 {
    let mut av = vec![0.0; a.n];
    a.matvec(v, &mut av);
    let r: f64 = av.iter().zip(v).map(|(x, y)| (x - lambda * y).powi(2)).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    r / nv
}

/// The lowest `count` eigenpairs of a symmetric band matrix bounded below
/// by `lower_bound` (any value strictly below the spectrum): dense below
/// [`DENSE_LIMIT`] unknowns, shift-invert block Lanczos above.
pub fn lowest_eigenpairs(a: &SymBand, count: usize, lower_bound: f64) -> Result<EigenPairs> {
    if count == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
        });
    }
    if count > a.n {
        return Err(Error::OutOfRange(format!("asked for {count} eigenvalues of {} unknowns", a.n)));
    }
    let out = if a.n <= DENSE_LIMIT {
        dense_lowest(a, count)
    } else {
        block_lanczos_lowest(a, count, lower_bound)?
    };
    for (i, (&lam, &r)) in out.values.iter().zip(&out.residuals).enumerate() {
        if r > RESIDUAL_TOL * lam.abs().max(1.0) {
            return Err(Error::Eigen(format!(
                "eigenpair {i} (lambda = {lam}) has residual {r:e}"
            )));
        }
    }
    Ok(out)
}

fn dense_lowest(a: &SymBand, count: usize) -> EigenPairs {
    let eig = SymmetricEigen::new(a.to_dense());
    let mut order: Vec<usize> = (0..a.n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for &i in order.iter().take(count) {
        let v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let lam = eig.eigenvalues[i];
        residuals.push(residual(a, lam, &v));
        values.push(lam);
        vectors.push(v);
    }
    EigenPairs {
        values,
        vectors,
        residuals,
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(b, a)| *b += alpha * a);
}

/// Orthonormalizes `v` against `basis` (two Gram–Schmidt passes); returns
/// `None` when `v` is numerically in the span.
fn orthonormalize(basis: &[Vec<f64>], mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n0 = dot(&v, &v).sqrt();
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &v);
            axpy(-c, q, &mut v);
        }
    }
    let n1 = dot(&v, &v).sqrt();
    if n1 <= 1e-10 * n0 || n1 == 0.0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n1);
    Some(v)
}

const BLOCK: usize = 4;

/// Block Krylov subspace of `(A - shift)^{-1}` with full
/// reorthogonalization, Rayleigh–Ritz on `A` itself, doubling the subspace
/// until the lowest `count` Ritz pairs meet the residual tolerance.
fn block_lanczos_lowest(a: &SymBand, count: usize, lower_bound: f64) -> Result<EigenPairs> {
    let shift = lower_bound;
    let chol = a.cholesky(-shift)?;
    let n = a.n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut block: Vec<Vec<f64>> = Vec::new();
    for _ in 0..BLOCK {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(q) = orthonormalize(&block, v) {
            block.push(q);
        }
    }
    basis.extend(block.iter().cloned());
    let max_basis = (12 * count + 200).min(n);
    let mut target = (3 * count + 20).min(n);
    loop {
        while basis.len() < target {
            let mut next = Vec::with_capacity(BLOCK);
            for q in &block {
                let mut w = q.clone();
                chol.solve_in_place(&mut w);
                next.push(w);
            }
            let mut fresh = Vec::new();
            for w in next {
                let mut all: Vec<Vec<f64>> = Vec::new();
                all.extend(basis.iter().cloned());
                all.extend(fresh.iter().cloned());
                if let Some(q) = orthonormalize(&all, w) {
                    fresh.push(q);
                }
            }
            if fresh.is_empty() {
                // invariant subspace: restart with a random vector
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                match orthonormalize(&basis, v) {
                    Some(q) => fresh.push(q),
                    None => break,
                }
            }
            basis.extend(fresh.iter().cloned());
            block = fresh;
        }
        let m = basis.len();
        // Rayleigh-Ritz on the inverse, which resolves eigenvalues near the
        // shift to relative rather than ||A||-scaled accuracy.
        let mut wq = Vec::with_capacity(m);
        for q in &basis {
            let mut y = q.clone();
            chol.solve_in_place(&mut y);
            wq.push(y);
        }
        let t = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i], &wq[j]) + dot(&basis[j], &wq[i])));
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let mut values = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count);
        let mut residuals = Vec::with_capacity(count);
        let mut ok = order.len() >= count;
        for &k in order.iter().take(count) {
            let lam = shift + 1.0 / eig.eigenvalues[k];
            let mut v = vec![0.0; n];
            for (j, q) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(j, k)], q, &mut v);
            }
            let mut av = vec![0.0; n];
            a.matvec(&v, &mut av);
            let nv = dot(&v, &v).sqrt();
            let r = av.iter().zip(&v).map(|(x, y)| (x - lam * y).powi(2)).sum::<f64>().sqrt() / nv;
            if r > 0.5 * RESIDUAL_TOL * lam.abs().max(1.0) {
                ok = false;
            }
            values.push(lam);
            vectors.push(v);
            residuals.push(r);
        }
        if ok || m >= n {
            // recompute residuals directly against A
            let residuals = values.iter().zip(&vectors).map(|(&l, v)| residual(a, l, v)).collect();
            return Ok(EigenPairs {
                values,
                vectors,
                residuals,
            });
        }
        if target >= max_basis {
            return Err(Error::Eigen(format!(
                "block Lanczos: {count} pairs not converged with a basis of {m}; worst residual {:e}",
                residuals.iter().fold(0.0f64, |a, &b| a.max(b))
            )));
        }
        target = (2 * target).min(max_basis);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn laplacian_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn sturm_bisection_matches_closed_form() {
        let n = 50;
        let (d, o) = laplacian_1d(n);
        let ev = tridiagonal_lowest(&d, &o, 10).unwrap();
        for (k, v) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13, "{k}: {v} vs {exact}");
        }
        assert!(tridiagonal_lowest(&d, &o, 51).is_err());
    }

    proptest! {
        #[test]
        fn sturm_agrees_with_dense(seed in 0u64..1000, n in 2usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let o: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let dense = DMatrix::from_fn(n, n, |i, j| {
                if i == j { d[i] } else if i + 1 == j { o[i] } else if j + 1 == i { o[j] } else { 0.0 }
            });
            let mut ev: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            let bis = tridiagonal_lowest(&d, &o, n).unwrap();
            for (x, y) in bis.iter().zip(&ev) {
                prop_assert!((x - y).abs() < 1e-11);
            }
        }
    }

    fn grid_laplacian(nx: usize, ny: usize) -> SymBand {
        let n = nx * ny;
        let mut a = SymBand::zeros(n, ny);
        for i in 0..nx {
            for j in 0..ny {
                let p = i * ny + j;
                a.add(p, p, 4.0);
                if j + 1 < ny {
                    a.add(p, p + 1, -1.0);
                }
                if i + 1 < nx {
                    a.add(p, p + ny, -1.0);
                }
            }
        }
        a
    }

    #[test]
    fn band_cholesky_solves() {
        let a = grid_laplacian(7, 5);
        let chol = a.cholesky(0.0).unwrap();
        let x: Vec<f64> = (0..35).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; 35];
        a.matvec(&x, &mut b);
        chol.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!(a.cholesky(-10.0).is_err());
    }

    #[test]
    fn lanczos_matches_closed_form_with_multiplicities() {
        // 30 x 30 Dirichlet grid: 900 unknowns, above the dense limit, with
        // exactly degenerate pairs
        let m = 30;
        let a = grid_laplacian(m, m);
        let got = lowest_eigenpairs(&a, 12, 0.0).unwrap();
        let mut exact = Vec::new();
        for i in 1..=m {
            for j in 1..=m {
                let s = |k: usize| 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / (m + 1) as f64).cos();
                exact.push(s(i) + s(j));
            }
        }
        exact.sort_by(f64::total_cmp);
        for (g, e) in got.values.iter().zip(&exact) {
            assert!((g - e).abs() < 1e-10, "{g} vs {e}");
        }
        assert!(got.residuals.iter().all(|&r| r < 1e-8));
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let a = grid_laplacian(20, 9);
        let d = dense_lowest(&a, 8);
        let l = block_lanczos_lowest(&a, 8, -0.5).unwrap();
        for (x, y) in d.values.iter().zip(&l.values) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
