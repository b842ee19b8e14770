//! Dense complex matrix kernel.
//!
//! Everything else in the crate is built on the decompositions and norms in
//! this module. Matrices are `nalgebra` dynamic matrices over `Complex64`;
//! the Hilbert–Schmidt inner product is `⟨x, y⟩ = tr(y* x)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::OpalgError;
use crate::Result;

/// Dense complex matrix, the universal carrier of the crate.
pub type CMat = DMatrix<Complex64>;
/// Dense complex vector.
pub type CVec = DVector<Complex64>;

/// Numerical tolerances threaded through every module.
///
/// `rank_tol` is a relative singular-value cutoff, `cert_tol` the slack
/// allowed in PSD/equality certificates, `iter_cap` the iteration budget of
/// the feasibility solver.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rank_tol: f64,
    pub cert_tol: f64,
    pub iter_cap: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        // Double precision with headroom for chained decompositions.
        Tolerance {
            rank_tol: 1e-9,
            cert_tol: 1e-8,
            iter_cap: 50_000,
        }
    }
}

impl Tolerance {
    pub fn with_cert_tol(mut self, cert_tol: f64) -> Self {
        self.cert_tol = cert_tol;
        self
    }

    pub fn with_iter_cap(mut self, iter_cap: usize) -> Self {
        self.iter_cap = iter_cap;
        self
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cre(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

/// Matrix unit `E_ij` in `M_d` (1 at row `i`, column `j`, zero-indexed).
pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, j)] = cre(1.0);
    m
}

/// Builds a matrix from rows of `(re, im)` pairs.
pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> CMat {
    let r = rows.len();
    let cols = if r == 0 { 0 } else { rows[0].len() };
    CMat::from_fn(r, cols, |i, j| c(rows[i][j].0, rows[i][j].1))
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// Hilbert–Schmidt inner product `tr(y* x)`, linear in `x`.
pub fn hs_inner(x: &CMat, y: &CMat) -> Complex64 {
    debug_assert_eq!(x.shape(), y.shape());
    let mut acc = Complex64::ZERO;
    for (a, b) in x.iter().zip(y.iter()) {
        acc += a * b.conj();
    }
    acc
}

pub fn hs_norm(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(x: &CMat) -> Complex64 {
    x.diagonal().iter().sum()
}

/// Row-major flattening of a matrix into a vector; the HS inner product of
/// matrices equals the standard inner product of their flattenings.
pub fn vec_row(m: &CMat) -> CVec {
    let (r, cols) = m.shape();
    CVec::from_fn(r * cols, |k, _| m[(k / cols, k % cols)])
}

pub fn unvec_row(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols);
    CMat::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Block-diagonal direct sum of a family of square matrices.
pub fn direct_sum(blocks: &[CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), b.ncols());
        out.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
        off += b.nrows();
    }
    out
}

/// Operator norm: the largest singular value. A `0×0` matrix has norm 0.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}

fn hermitian_deviation(m: &CMat) -> f64 {
    hs_norm(&(m - m.adjoint()))
}

/// Hermitian eigendecomposition `M = U diag(λ) U*` with ascending `λ`.
///
/// The input is symmetrized first; inputs whose symmetrization moves them by
/// more than `1e-6·‖M‖` are rejected rather than silently accepted.
pub fn herm_eig(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    if m.nrows() != m.ncols() {
        return Err(OpalgError::DegenerateInput(format!(
            "herm_eig needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = hs_norm(m).max(1.0);
    let dev = hermitian_deviation(m);
    if dev > 1e-6 * scale {
        return Err(OpalgError::NonHermitian {
            deviation: dev,
            tolerance: 1e-6 * scale,
        });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((vec![], CMat::zeros(0, 0)));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let se = sym.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Smallest eigenvalue of a Hermitian matrix, with its eigenvector.
pub fn min_eig_herm(m: &CMat) -> Result<(f64, CVec)> {
    let (vals, vecs) = herm_eig(m)?;
    Ok((vals[0], vecs.column(0).into_owned()))
}

/// Singular value decomposition `M = U diag(σ) V_h` (note: `V_h = V*`).
pub fn svd(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    (u, svd.singular_values.iter().copied().collect(), vt)
}

/// QR factorization `M = Q R` of a square matrix, normalized so that the
/// diagonal of `R` is real and nonnegative.
pub fn qr(m: &CMat) -> (CMat, CMat) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let k = r.nrows().min(r.ncols());
    for i in 0..k {
        let d = r[(i, i)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for j in 0..r.ncols() {
                r[(i, j)] *= phase.conj();
            }
            for j in 0..q.nrows() {
                q[(j, i)] *= phase;
            }
        }
    }
    (q, r)
}

/// Cholesky factorization of a strictly positive matrix: returns the upper
/// factor `R` with `R* R = P` and strictly positive diagonal.
pub fn cholesky(p: &CMat, tol: &Tolerance) -> Result<CMat> {
    if p.nrows() != p.ncols() {
        return Err(OpalgError::DegenerateInput(
            "cholesky needs a square matrix".into(),
        ));
    }
    let scale = op_norm(p).max(1.0);
    let dev = hermitian_deviation(p);
    if dev > 1e-6 * scale {
        return Err(OpalgError::NonHermitian {
            deviation: dev,
            tolerance: 1e-6 * scale,
        });
    }
    let sym = (p + p.adjoint()).scale(0.5);
    let (vals, _) = herm_eig(&sym)?;
    let lam_min = vals.first().copied().unwrap_or(0.0);
    if lam_min <= tol.cert_tol * scale {
        return Err(OpalgError::NotStrictlyPositive { lambda_min: lam_min });
    }
    let chol = nalgebra::Cholesky::new(sym)
        .ok_or(OpalgError::NotStrictlyPositive { lambda_min: lam_min })?;
    Ok(chol.l().adjoint())
}

/// Polar decomposition `M = U |M|`; for invertible `M` the factor `U` is
/// unitary and `|M| = (M* M)^(1/2)`.
pub fn polar(m: &CMat) -> (CMat, CMat) {
    let (u, s, vh) = svd(m);
    let sig = CMat::from_fn(s.len(), s.len(), |i, j| {
        if i == j {
            cre(s[i])
        } else {
            Complex64::ZERO
        }
    });
    let unitary = &u * &vh;
    let abs = vh.adjoint() * sig * &vh;
    (unitary, abs)
}

/// Square root of a PSD matrix (eigenvalues clipped at zero first).
pub fn sqrt_psd(p: &CMat) -> Result<CMat> {
    let (vals, vecs) = herm_eig(p)?;
    let d = CMat::from_fn(vals.len(), vals.len(), |i, j| {
        if i == j {
            cre(vals[i].max(0.0).sqrt())
        } else {
            Complex64::ZERO
        }
    });
    Ok(&vecs * d * vecs.adjoint())
}

/// Nearest PSD matrix in HS norm: clip negative eigenvalues.
pub fn psd_project(h: &CMat) -> Result<CMat> {
    let (vals, vecs) = herm_eig(h)?;
    let d = CMat::from_fn(vals.len(), vals.len(), |i, j| {
        if i == j {
            cre(vals[i].max(0.0))
        } else {
            Complex64::ZERO
        }
    });
    Ok(&vecs * d * vecs.adjoint())
}

/// Assembles a block matrix from equally shaped blocks; used for level-k
/// amplifications `M_k(A)`.
pub fn amplify(blocks: &[Vec<CMat>]) -> Result<CMat> {
    let k = blocks.len();
    if k == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let cols = blocks[0].len();
    if cols == 0 || blocks.iter().any(|row| row.len() != cols) {
        return Err(OpalgError::DegenerateInput(
            "amplify needs a rectangular grid of blocks".into(),
        ));
    }
    let (br, bc) = blocks[0][0].shape();
    for row in blocks {
        for b in row {
            if b.shape() != (br, bc) {
                return Err(OpalgError::DegenerateInput(
                    "amplify blocks must share a common shape".into(),
                ));
            }
        }
    }
    let mut out = CMat::zeros(k * br, cols * bc);
    for (i, row) in blocks.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            out.view_mut((i * br, j * bc), (br, bc)).copy_from(b);
        }
    }
    Ok(out)
}

/// Orthonormal basis of the null space of `A`, with singular values below
/// `rank_tol·max(σ_max, 1)` treated as zero.
///
/// Tall matrices go through the SVD (null vectors are the conjugated rows
/// of `V_h`). Wide matrices need the Gram-matrix eigendecomposition because
/// the thin SVD does not expose their full null space; squaring costs half
/// the precision, so the cutoff there is floored at the Gram noise level.
pub fn null_space(a: &CMat, rank_tol: f64) -> Vec<CVec> {
    let cols = a.ncols();
    if cols == 0 {
        return vec![];
    }
    if a.nrows() == 0 {
        return (0..cols)
            .map(|i| CVec::from_fn(cols, |k, _| if k == i { cre(1.0) } else { Complex64::ZERO }))
            .collect();
    }
    if a.nrows() >= cols {
        let (_, s, vh) = svd(a);
        let smax = s.iter().cloned().fold(0.0, f64::max).max(1.0);
        let cutoff = rank_tol * smax;
        let mut out = Vec::new();
        for i in 0..cols {
            let sigma = if i < s.len() { s[i] } else { 0.0 };
            if sigma <= cutoff {
                out.push(vh.row(i).map(|z| z.conj()).transpose());
            }
        }
        out
    } else {
        let gram = a.adjoint() * a;
        let (vals, vecs) = match herm_eig(&gram) {
            Ok(v) => v,
            Err(_) => return vec![],
        };
        let lmax = vals.iter().cloned().fold(0.0f64, f64::max).max(1.0);
        let smax = lmax.sqrt();
        let cutoff = (rank_tol * smax).max((1e3 * f64::EPSILON * lmax).sqrt());
        let mut out = Vec::new();
        for (i, &lam) in vals.iter().enumerate() {
            if lam.max(0.0).sqrt() <= cutoff {
                out.push(vecs.column(i).into_owned());
            }
        }
        out
    }
}

/// Least-squares solve `A x ≈ b` through the SVD pseudo-inverse, with
/// singular values below `rank_tol·σ_max` dropped.
pub fn lstsq(a: &CMat, b: &CVec, rank_tol: f64) -> CVec {
    let (u, s, vh) = svd(a);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let cutoff = rank_tol * smax.max(1e-300);
    let mut y = CVec::zeros(s.len());
    let utb = u.adjoint() * b;
    for i in 0..s.len() {
        if s[i] > cutoff {
            y[i] = utb[i] / cre(s[i]);
        }
    }
    vh.adjoint() * y
}

// ── Seeded random samplers ──────────────────────────────────────────

pub fn random_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        c(gauss(rng), gauss(rng)) * cre(std::f64::consts::FRAC_1_SQRT_2)
    })
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller; avoids a rand_distr dependency.
    loop {
        let u1: f64 = rng.random();
        if u1 > 1e-300 {
            let u2: f64 = rng.random();
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let g = random_gaussian(rng, n, n);
    (&g + g.adjoint()).scale(0.5)
}

/// Haar-distributed unitary via QR of a Ginibre matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let g = random_gaussian(rng, n, n);
    let (q, _) = qr(&g);
    q
}

/// Random strictly positive matrix with spectrum in `[lo, hi]`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> CMat {
    let u = random_unitary(rng, n);
    let d = CMat::from_fn(n, n, |i, j| {
        if i == j {
            cre(lo + (hi - lo) * rng.random::<f64>())
        } else {
            Complex64::ZERO
        }
    });
    &u * d * u.adjoint()
}
