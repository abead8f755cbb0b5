//! Reference spectra from a second-order finite-difference discretisation
//! with Dirichlet ends: eigenvalues by Sturm-count bisection, eigenvectors by
//! inverse iteration, and Richardson extrapolation in the grid step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::par::Exec;
use crate::potential::PotentialModel;

const INVERSE_ITERATION_SEED: u64 = 0x005e_ed0f_e16e;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("potential is not finite at grid node x = {x}")]
    NonFinite { x: f64 },
    #[error("grid needs at least 3 interior nodes, got {0}")]
    GridTooSmall(usize),
    #[error("operator is not symmetric about the window centre")]
    NotSymmetric,
    #[error("eigenvalue index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
}

/// Uniform grid of `n` interior nodes on `[a, b]`; `x_i = a + (i + 1) h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Grid {
    #[must_use]
    pub fn new(a: f64, b: f64, n: usize) -> Self {
        Self { a, b, n }
    }

    /// Odd node count with step at most `h^{3/2} / 4`.
    #[must_use]
    pub fn auto(domain: (f64, f64), hbar: f64) -> Self {
        Self::with_max_step(domain, hbar.powf(1.5) / 4.0)
    }

    /// Smallest odd node count whose step does not exceed `max_step`.
    #[must_use]
    pub fn with_max_step(domain: (f64, f64), max_step: f64) -> Self {
        let (a, b) = domain;
        let mut n = ((b - a) / max_step).ceil() as usize;
        n = n.saturating_sub(1).max(3);
        if n % 2 == 0 {
            n += 1;
        }
        Self { a, b, n }
    }

    #[must_use]
    pub fn step(&self) -> f64 {
        (self.b - self.a) / (self.n + 1) as f64
    }

    #[must_use]
    pub fn x(&self, i: usize) -> f64 {
        self.a + (i + 1) as f64 * self.step()
    }

    /// The grid with half the step.
    #[must_use]
    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n + 1, ..*self }
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    #[must_use]
    pub fn nearest(&self, x: f64) -> usize {
        let k = ((x - self.a) / self.step()).round() - 1.0;
        (k.max(0.0) as usize).min(self.n - 1)
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    #[must_use]
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn pivot_floor(&self) -> f64 {
        let emax = self.off.iter().fold(1.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax
    }

    /// Number of eigenvalues strictly below `sigma`, from the signs of the
    /// `LDL^T` pivots of `T - sigma`.
    #[must_use]
    pub fn count_below(&self, sigma: f64) -> usize {
        let floor = self.pivot_floor();
        let mut count = 0;
        let mut q = self.diag[0] - sigma;
        for i in 0..self.diag.len() {
            if i > 0 {
                let e = self.off[i - 1];
                q = self.diag[i] - sigma - e * e / q;
            }
            if q.abs() < floor {
                q = -floor;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin enclosure of the spectrum.
    #[must_use]
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Eigenvalue number `k` (0-based, ascending) by bisection inside
    /// `[lo, hi]`, which must satisfy `count(lo) <= k < count(hi)`; refined
    /// until the bracket cannot be split further.
    fn bisect(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return mid;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    pub fn eigenvalue(&self, k: usize) -> Result<f64, OracleError> {
        if k >= self.len() {
            return Err(OracleError::IndexOutOfRange { index: k, n: self.len() });
        }
        let (lo, hi) = self.bounds();
        let pad = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        Ok(self.bisect(k, lo - pad, hi + pad))
    }

    /// All eigenvalues in `[lo, hi)`, ascending, with their global indices.
    #[must_use]
    pub fn eigenvalues_in(&self, window: (f64, f64), exec: Exec) -> Vec<(usize, f64)> {
        let (lo, hi) = window;
        let k0 = self.count_below(lo);
        let k1 = self.count_below(hi);
        exec.map_range(k1 - k0, |j| (k0 + j, self.bisect(k0 + j, lo, hi)))
    }

    /// `(T - sigma) y = rhs` by Gaussian elimination with partial pivoting;
    /// exactly singular pivots are nudged so the solve always completes.
    fn shifted_solve(&self, sigma: f64, rhs: &mut [f64]) {
        let n = self.len();
        let tiny = f64::EPSILON * self.bounds().1.abs().max(self.bounds().0.abs()).max(1.0);
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - sigma).collect();
        let mut dl = self.off.clone();
        let mut du = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        for i in 0..n - 1 {
            if swapped[i] {
                rhs.swap(i, i + 1);
            }
            rhs[i + 1] -= dl[i] * rhs[i];
        }
        rhs[n - 1] /= d[n - 1];
        if n >= 2 {
            rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
        }
    }

    #[must_use]
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Orthonormal basis (Euclidean) for the invariant subspace belonging to
    /// the eigenvalues `values`, which should form one cluster, from three
    /// steps of block inverse iteration from a fixed pseudo-random start.
    #[must_use]
    pub fn inverse_iteration(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let n = self.len();
        let sigma = values.iter().sum::<f64>() / values.len() as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(INVERSE_ITERATION_SEED);
        let mut block: Vec<Vec<f64>> =
            values.iter().map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()).collect();
        orthonormalize(&mut block);
        for _ in 0..3 {
            for v in &mut block {
                self.shifted_solve(sigma, v);
            }
            orthonormalize(&mut block);
        }
        if block.len() > 1 {
            rayleigh_ritz(self, &mut block);
        }
        for v in &mut block {
            fix_sign(v);
        }
        block
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthonormalize(block: &mut [Vec<f64>]) {
    for i in 0..block.len() {
        for _ in 0..2 {
            for j in 0..i {
                let c = dot(&block[i], &block[j]);
                let (head, tail) = block.split_at_mut(i);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= c * y;
                }
            }
        }
        let norm = dot(&block[i], &block[i]).sqrt();
        for x in &mut block[i] {
            *x /= norm;
        }
    }
}

/// Rotates an orthonormal 2-block onto the Ritz vectors of `t`.
fn rayleigh_ritz(t: &Tridiagonal, block: &mut [Vec<f64>]) {
    if block.len() != 2 {
        return;
    }
    let t0 = t.apply(&block[0]);
    let t1 = t.apply(&block[1]);
    let (a, b, c) = (dot(&block[0], &t0), dot(&block[0], &t1), dot(&block[1], &t1));
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (s, co) = theta.sin_cos();
    let (u, v) = (block[0].clone(), block[1].clone());
    block[0] = u.iter().zip(&v).map(|(p, q)| co * p + s * q).collect();
    block[1] = u.iter().zip(&v).map(|(p, q)| -s * p + co * q).collect();
    let r0 = dot(&block[0], &t.apply(&block[0]));
    let r1 = dot(&block[1], &t.apply(&block[1]));
    if r0 > r1 {
        block.swap(0, 1);
    }
}

/// Makes the first component above a thousandth of the maximum positive.
fn fix_sign(v: &mut [f64]) {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-3 * m) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// Discretisation of `-h^2 d^2/dx^2 + v` on a grid with Dirichlet ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub grid: Grid,
    pub hbar: f64,
    pub matrix: Tridiagonal,
}

/// One eigenvalue with a grid eigenvector normalised to `h Σ ψ_i^2 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub index: usize,
    pub value: f64,
    pub vector: Vec<f64>,
    /// True when the eigenvalue shares a cluster closer than the isolation
    /// threshold; the vector is then one element of an orthonormal basis of
    /// the cluster's invariant subspace.
    pub clustered: bool,
}

/// Relative separation below which neighbouring eigenvalues are treated as one cluster.
pub const CLUSTER_THRESHOLD: f64 = 1e-10;

impl Operator {
    pub fn assemble(model: &PotentialModel, grid: Grid, hbar: f64) -> Result<Self, OracleError> {
        if grid.n < 3 {
            return Err(OracleError::GridTooSmall(grid.n));
        }
        let h = grid.step();
        let kin = hbar * hbar / (h * h);
        let diag = (0..grid.n)
            .map(|i| {
                let x = grid.x(i);
                let v = model.value(x);
                if v.is_finite() {
                    Ok(2.0 * kin + v)
                } else {
                    Err(OracleError::NonFinite { x })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { grid, hbar, matrix: Tridiagonal { diag, off: vec![-kin; grid.n - 1] } })
    }

    #[must_use]
    pub fn count_below(&self, sigma: f64) -> usize {
        self.matrix.count_below(sigma)
    }

    #[must_use]
    pub fn eigenvalues_in(&self, window: (f64, f64), exec: Exec) -> Vec<(usize, f64)> {
        self.matrix.eigenvalues_in(window, exec)
    }

    /// Eigenpairs for the given `(index, value)` list; clusters are detected
    /// among the listed values only.
    #[must_use]
    pub fn eigenpairs(&self, values: &[(usize, f64)], exec: Exec) -> Vec<Eigenpair> {
        let mut groups: Vec<Vec<(usize, f64)>> = Vec::new();
        for &(k, v) in values {
            match groups.last_mut() {
                Some(g) if (v - g.last().unwrap().1).abs() < CLUSTER_THRESHOLD * v.abs().max(1.0) => g.push((k, v)),
                _ => groups.push(vec![(k, v)]),
            }
        }
        let scale = 1.0 / self.grid.step().sqrt();
        exec.map(&groups, |g| {
            let vals: Vec<f64> = g.iter().map(|p| p.1).collect();
            let basis = self.matrix.inverse_iteration(&vals);
            g.iter()
                .zip(basis)
                .map(|(&(index, value), v)| Eigenpair {
                    index,
                    value,
                    vector: v.into_iter().map(|x| x * scale).collect(),
                    clustered: g.len() > 1,
                })
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    /// `max_i |((T - λ) ψ)_i| / max_i |ψ_i|`.
    #[must_use]
    pub fn residual(&self, value: f64, vector: &[f64]) -> f64 {
        let tv = self.matrix.apply(vector);
        let num = tv.iter().zip(vector).fold(0.0f64, |m, (a, b)| m.max((a - value * b).abs()));
        num / vector.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Even and odd blocks of an operator symmetric about the window centre.
    /// Needs an odd node count so that the centre is a node.
    pub fn parity_sectors(&self) -> Result<(Tridiagonal, Tridiagonal), OracleError> {
        let n = self.grid.n;
        if n % 2 == 0 || ((self.grid.a + self.grid.b) / (self.grid.b - self.grid.a)).abs() > 1e-14 {
            return Err(OracleError::NotSymmetric);
        }
        let d = &self.matrix.diag;
        let scale = d.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if (0..n).any(|i| (d[i] - d[n - 1 - i]).abs() > 1e-12 * scale) {
            return Err(OracleError::NotSymmetric);
        }
        let m = n / 2;
        let e = self.matrix.off[0];
        let mut even_off = vec![e; m];
        even_off[m - 1] = std::f64::consts::SQRT_2 * e;
        let even = Tridiagonal { diag: d[..=m].to_vec(), off: even_off };
        let odd = Tridiagonal { diag: d[..m].to_vec(), off: vec![e; m - 1] };
        Ok((even, odd))
    }

    /// Full-grid vector from an eigenvector of one parity block, normalised
    /// to `h Σ ψ_i^2 = 1`.
    #[must_use]
    pub fn unfold_parity(&self, half: &[f64], even: bool) -> Vec<f64> {
        let n = self.grid.n;
        let m = n / 2;
        let mut v = vec![0.0; n];
        for i in 0..m {
            v[i] = half[i];
            v[n - 1 - i] = if even { half[i] } else { -half[i] };
        }
        if even {
            v[m] = std::f64::consts::SQRT_2 * half[m];
        }
        let norm = (self.grid.step() * dot(&v, &v)).sqrt();
        v.iter().map(|x| x / norm).collect()
    }
}

/// Fourth-order centred derivative of grid values at node `i`, with the
/// Dirichlet zeros beyond both ends.
#[must_use]
pub fn derivative(vector: &[f64], step: f64, i: usize) -> f64 {
    let at = |k: isize| -> f64 {
        if k < 0 || k as usize >= vector.len() {
            0.0
        } else {
            vector[k as usize]
        }
    };
    let k = i as isize;
    (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * step)
}

/// Eigenvalue extrapolated from grids with steps `h` and `h/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined {
    pub index: usize,
    pub value: f64,
    pub coarse: f64,
    pub fine: f64,
    /// `|value - fine|`.
    pub error_estimate: f64,
}

/// Richardson-extrapolated eigenvalues `(4 λ_{h/2} - λ_h) / 3` for every
/// eigenvalue of the coarse operator inside `window`.
pub fn richardson(
    model: &PotentialModel,
    grid: Grid,
    hbar: f64,
    window: (f64, f64),
    exec: Exec,
) -> Result<Vec<Refined>, OracleError> {
    let coarse = Operator::assemble(model, grid, hbar)?;
    let fine = Operator::assemble(model, grid.refined(), hbar)?;
    let coarse_values = coarse.eigenvalues_in(window, exec);
    Ok(exec.map(&coarse_values, |&(index, lc)| {
        let lf = fine.matrix.eigenvalue(index).expect("fine grid has more nodes");
        let value = (4.0 * lf - lc) / 3.0;
        Refined { index, value, coarse: lc, fine: lf, error_estimate: (value - lf).abs() }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn box_operator(n: usize, hbar: f64) -> Operator {
        let m = PotentialModel::parse("0").unwrap();
        Operator::assemble(&m, Grid::new(0.0, PI, n), hbar).unwrap()
    }

    fn box_exact(n: usize, hbar: f64, k: usize) -> f64 {
        let h = PI / (n + 1) as f64;
        4.0 * hbar * hbar / (h * h) * ((k + 1) as f64 * PI / (2.0 * (n + 1) as f64)).sin().powi(2)
    }

    #[test]
    fn box_spectrum_matches_closed_form() {
        let (n, hbar) = (200, 0.7);
        let op = box_operator(n, hbar);
        let (lo, hi) = op.matrix.bounds();
        let vals = op.eigenvalues_in((lo - 1.0, hi + 1.0), Exec::Sequential);
        assert_eq!(vals.len(), n);
        for (k, v) in vals {
            let exact = box_exact(n, hbar, k);
            assert!((v - exact).abs() <= 1e-12 * exact.max(1.0), "{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn count_is_monotone() {
        let op = box_operator(50, 1.0);
        let mut prev = 0;
        for s in 0..200 {
            let c = op.count_below(s as f64 * 50.0);
            assert!(c >= prev);
            prev = c;
        }
        assert_eq!(op.count_below(-1.0), 0);
    }

    #[test]
    fn eigenvector_residual_and_normalisation() {
        let m = PotentialModel::parse("x^2").unwrap();
        let op = Operator::assemble(&m, Grid::auto((-4.0, 4.0), 0.1), 0.1).unwrap();
        let vals = op.eigenvalues_in((0.0, 1.0), Exec::Sequential);
        assert_eq!(vals.len(), 5);
        for p in op.eigenpairs(&vals, Exec::Sequential) {
            assert!(op.residual(p.value, &p.vector) < 1e-9, "{}", op.residual(p.value, &p.vector));
            let norm: f64 = p.vector.iter().map(|x| x * x).sum::<f64>() * op.grid.step();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(!p.clustered);
        }
    }

    #[test]
    fn richardson_improves_harmonic_levels() {
        let m = PotentialModel::parse("x^2").unwrap();
        let r = richardson(&m, Grid::auto((-4.0, 4.0), 0.1), 0.1, (0.05, 1.05), Exec::Sequential).unwrap();
        assert_eq!(r.len(), 5);
        for (n, e) in r.iter().enumerate() {
            let exact = 0.1 * (2 * n + 1) as f64;
            assert!((e.value - exact).abs() < (e.coarse - exact).abs() / 10.0);
        }
    }

    #[test]
    fn parity_sectors_reproduce_full_spectrum() {
        let m = PotentialModel::parse("(x^2-1)^2").unwrap();
        let op = Operator::assemble(&m, Grid::with_max_step((-2.0, 2.0), 0.01), 0.1).unwrap();
        let (even, odd) = op.parity_sectors().unwrap();
        let full = op.eigenvalues_in((0.0, 1.0), Exec::Sequential);
        let mut split: Vec<f64> = even
            .eigenvalues_in((0.0, 1.0), Exec::Sequential)
            .into_iter()
            .chain(odd.eigenvalues_in((0.0, 1.0), Exec::Sequential))
            .map(|p| p.1)
            .collect();
        split.sort_by(f64::total_cmp);
        assert_eq!(split.len(), full.len());
        for (a, b) in split.iter().zip(&full) {
            assert!((a - b.1).abs() < 1e-11);
        }
        let (k, lam) = even.eigenvalues_in((0.0, 1.0), Exec::Sequential)[0];
        let half = even.inverse_iteration(&[lam]).remove(0);
        let v = op.unfold_parity(&half, true);
        assert!(op.residual(lam, &v) < 1e-8);
        assert_eq!(k, 0);
    }

    #[test]
    fn near_degenerate_pair_yields_orthonormal_basis() {
        // deep symmetric double well: the lowest pair is split far below the threshold
        let m = PotentialModel::parse("8*(x^2-1)^2").unwrap();
        let op = Operator::assemble(&m, Grid::with_max_step((-2.0, 2.0), 0.004), 0.05).unwrap();
        let vals = op.eigenvalues_in((0.0, 1.0), Exec::Sequential);
        let pairs = op.eigenpairs(&vals[..2], Exec::Sequential);
        assert!(pairs[0].clustered && pairs[1].clustered);
        let h = op.grid.step();
        let d = dot(&pairs[0].vector, &pairs[1].vector) * h;
        assert!(d.abs() < 1e-10);
        for p in &pairs {
            assert!(op.residual(p.value, &p.vector) < 1e-6);
        }
    }

    #[test]
    fn derivative_is_fourth_order() {
        let g = Grid::new(0.0, 1.0, 99);
        let v: Vec<f64> = (0..g.n).map(|i| (3.0 * g.x(i)).sin()).collect();
        let i = 50;
        let want = 3.0 * (3.0 * g.x(i)).cos();
        assert!((derivative(&v, g.step(), i) - want).abs() < 1e-7);
    }
}
