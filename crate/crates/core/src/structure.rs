//! Wedderburn decomposition of a unital *-subalgebra `B ⊆ M_d`.
//!
//! The center is cut into minimal central projections by the spectral
//! projections of a generic central element; inside each block, matrix
//! units are recovered from a generic self-adjoint element and rank-one
//! refinement, and their eigenbases assemble a unitary `W` with
//! `W* B W = ⊕_k (M_{n_k} ⊗ 1_{m_k})`.

use rand_chacha::ChaCha8Rng;

use crate::error::OpalgError;
use crate::linalg::{eye, herm_eig, hs_norm, svd, CMat, CVec, Tolerance};
use crate::map::SubspaceMap;
use crate::subspace::{self, Subspace};
use crate::Result;

/// Wedderburn data of `B ≅ ⊕_k (M_{n_k} ⊗ 1_{m_k})`.
#[derive(Debug, Clone)]
pub struct BlockStructure {
    /// Minimal central projections, one per block.
    pub central_projections: Vec<CMat>,
    /// Block sizes `n_k`.
    pub block_dims: Vec<usize>,
    /// Multiplicities `m_k`.
    pub multiplicities: Vec<usize>,
    /// Unitary with `W* b W` block diagonal of the form `β_k ⊗ 1_{m_k}`.
    pub basis_unitary: CMat,
    /// For each block, the *-isomorphism `M_{n_k} → p_k B p_k` as images of
    /// the full matrix-unit basis of `M_{n_k}` (row-major order).
    pub block_iso: Vec<SubspaceMap>,
}

impl BlockStructure {
    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Reads the `n_k × n_k` coefficient matrix of `x` in block `k` out of
    /// the `W`-coordinates (first multiplicity slot).
    pub fn block_coefficient(&self, x: &CMat, k: usize) -> CMat {
        let w = &self.basis_unitary;
        let y = w.adjoint() * x * w;
        let off: usize = self
            .block_dims
            .iter()
            .zip(&self.multiplicities)
            .take(k)
            .map(|(n, m)| n * m)
            .sum();
        let (n, m) = (self.block_dims[k], self.multiplicities[k]);
        CMat::from_fn(n, n, |i, j| y[(off + i * m, off + j * m)])
    }
}

/// Commutant `{x ∈ M_d : xb = bx for all b ∈ B}` via the nullspace of the
/// stacked commutator operators.
pub fn commutant(b: &Subspace, tol: &Tolerance) -> Result<Subspace> {
    let d = b.ambient_dim();
    let n = d * d;
    if b.dim() == 0 {
        return Ok(Subspace::full(d));
    }
    let mut stack = CMat::zeros(b.dim() * n, n);
    let id = eye(d);
    for (r, elt) in b.basis().iter().enumerate() {
        // Row-major vec: vec(bx) = (b ⊗ I)vec(x), vec(xb) = (I ⊗ bᵀ)vec(x).
        let op = elt.kronecker(&id) - id.kronecker(&elt.transpose());
        stack.view_mut((r * n, 0), (n, n)).copy_from(&op);
    }
    let basis: Vec<CMat> = crate::linalg::null_space(&stack, tol.rank_tol)
        .into_iter()
        .map(|v| crate::linalg::unvec_row(&v, d, d))
        .collect();
    let mut out = Subspace::from_orthonormal_basis(d, basis, tol)?;
    out.flags.star_algebra = Some(true);
    out.flags.selfadjoint = Some(true);
    out.flags.unital = Some(true);
    out.flags.algebra = Some(true);
    Ok(out)
}

/// Eigenvalue clustering: ascending values split at gaps above
/// `1e-6 × spread`; returns cluster index ranges.
fn cluster_eigenvalues(vals: &[f64]) -> Vec<(usize, usize)> {
    if vals.is_empty() {
        return vec![];
    }
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let spread = vals[vals.len() - 1] - vals[0];
    // A spread at noise level means a single cluster.
    if spread <= 1e-9 * scale {
        return vec![(0, vals.len())];
    }
    let gap_thresh = 1e-6 * spread;
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..vals.len() {
        if vals[i] - vals[i - 1] > gap_thresh {
            clusters.push((start, i));
            start = i;
        }
    }
    clusters.push((start, vals.len()));
    clusters
}

fn spectral_projection(vecs: &CMat, range: (usize, usize)) -> CMat {
    let n = vecs.nrows();
    let mut p = CMat::zeros(n, n);
    for c in range.0..range.1 {
        let v = vecs.column(c);
        p += &v * v.adjoint();
    }
    p
}

/// Orthonormal basis of the range of a projection (eigenvalue ≈ 1).
fn range_basis_of_projection(p: &CMat) -> Result<Vec<CVec>> {
    let (vals, vecs) = herm_eig(p)?;
    let mut cols = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if v > 0.5 {
            cols.push(vecs.column(i).into_owned());
        }
    }
    Ok(cols)
}

struct BlockUnits {
    /// `e_ij` matrix units, row-major, as `d×d` matrices.
    units: Vec<CMat>,
    n: usize,
    m: usize,
}

/// Recovers matrix units of the factor `p B p ≅ M_n ⊗ 1_m` from a generic
/// self-adjoint element and rank-one refinement.
fn block_matrix_units(
    b: &Subspace,
    p: &CMat,
    tol: &Tolerance,
    rng: &mut ChaCha8Rng,
) -> Result<BlockUnits> {
    let d = b.ambient_dim();
    let compressed: Vec<CMat> = b.basis().iter().map(|x| p * x * p).collect();
    let bk = subspace::span_of(&compressed, tol)?;
    let dim_bk = bk.dim();
    let n = (dim_bk as f64).sqrt().round() as usize;
    if n * n != dim_bk {
        return Err(OpalgError::StructureFailure(format!(
            "block algebra dimension {dim_bk} is not a perfect square"
        )));
    }
    let rank = crate::linalg::trace(p).re.round() as usize;
    if rank % n != 0 {
        return Err(OpalgError::StructureFailure(format!(
            "central projection rank {rank} is not divisible by block size {n}"
        )));
    }
    let m = rank / n;

    // A generic self-adjoint element has n distinct eigenvalues of
    // multiplicity m on ran(p); the kernel of p contributes eigenvalue 0,
    // so only eigenvectors inside the range are clustered.
    for _attempt in 0..8 {
        let h = {
            let raw = bk.random_hermitian_element(rng, tol)?;
            (&raw + raw.adjoint()).scale(0.5)
        };
        let (vals, vecs) = herm_eig(&h)?;
        let mut range_vals = Vec::new();
        let mut range_cols = Vec::new();
        for (i, &v) in vals.iter().enumerate() {
            let col = vecs.column(i).into_owned();
            let pv = p * &col;
            if (pv.norm() - 1.0).abs() < 0.5 {
                range_vals.push(v);
                range_cols.push(col);
            }
        }
        if range_vals.len() != rank {
            continue;
        }
        let clusters = cluster_eigenvalues(&range_vals);
        if clusters.len() != n || clusters.iter().any(|(a, z)| z - a != m) {
            continue;
        }
        let mut q: Vec<CMat> = Vec::with_capacity(n);
        for (a, z) in &clusters {
            let mut proj = CMat::zeros(d, d);
            for col in &range_cols[*a..*z] {
                proj += col * col.adjoint();
            }
            q.push(proj);
        }
        // q_1 B q_j is one-dimensional, spanned by (a multiple of) e_{1j};
        // partial-isometrize the spanning element.
        let mut partials: Vec<CMat> = Vec::with_capacity(n);
        partials.push(q[0].clone());
        let mut ok = true;
        for qj in q.iter().take(n).skip(1) {
            let cands: Vec<CMat> = bk.basis().iter().map(|x| &q[0] * x * qj).collect();
            let sp = subspace::span_of(&cands, tol)?;
            if sp.dim() != 1 {
                ok = false;
                break;
            }
            let v = sp.basis()[0].clone();
            let (u, s, vh) = svd(&v);
            let smax = s.iter().cloned().fold(0.0, f64::max).max(1e-300);
            let mut w = CMat::zeros(d, d);
            for (i, &sv) in s.iter().enumerate() {
                if sv > tol.rank_tol * smax {
                    let ui = u.column(i);
                    let vi = vh.row(i);
                    w += ui * vi;
                }
            }
            let res = hs_norm(&(w.adjoint() * &w - qj)) + hs_norm(&(&w * w.adjoint() - &q[0]));
            if res > tol.cert_tol * 100.0 * (d as f64) {
                ok = false;
                break;
            }
            partials.push(w);
        }
        if !ok {
            continue;
        }
        // e_ij = e_{1i}* e_{1j}.
        let mut units = Vec::with_capacity(n * n);
        for ui in &partials {
            for uj in &partials {
                units.push(ui.adjoint() * uj);
            }
        }
        return Ok(BlockUnits { units, n, m });
    }
    Err(OpalgError::StructureFailure(
        "could not recover matrix units for a block".into(),
    ))
}

fn verify_block_structure(
    b: &Subspace,
    bs: &BlockStructure,
    tol: &Tolerance,
) -> std::result::Result<(), String> {
    let d = b.ambient_dim();
    let slack = tol.cert_tol * 100.0 * (d as f64);
    let loose = Tolerance {
        cert_tol: tol.cert_tol * 100.0,
        ..*tol
    };
    let mut sum = CMat::zeros(d, d);
    for (k, p) in bs.central_projections.iter().enumerate() {
        if hs_norm(&(p - p.adjoint())) > slack {
            return Err(format!("p_{k} not Hermitian"));
        }
        if hs_norm(&(p * p - p)) > slack {
            return Err(format!("p_{k} not idempotent"));
        }
        for (j, pj) in bs.central_projections.iter().enumerate() {
            if j != k && hs_norm(&(p * pj)) > slack {
                return Err(format!("p_{k} p_{j} != 0"));
            }
        }
        for x in b.basis() {
            if hs_norm(&(p * x - x * p)) > slack {
                return Err(format!("p_{k} does not commute with B"));
            }
        }
        if !b.contains(p, &loose) {
            return Err(format!("p_{k} not in B"));
        }
        sum += p;
    }
    if hs_norm(&(sum - eye(d))) > slack {
        return Err("central projections do not sum to 1".into());
    }
    let total: usize = bs
        .block_dims
        .iter()
        .zip(&bs.multiplicities)
        .map(|(n, m)| n * m)
        .sum();
    if total != d {
        return Err(format!("sum n_k m_k = {total} != d = {d}"));
    }
    let alg_dim: usize = bs.block_dims.iter().map(|n| n * n).sum();
    if alg_dim != b.dim() {
        return Err(format!("sum n_k^2 = {alg_dim} != dim B = {}", b.dim()));
    }
    let w = &bs.basis_unitary;
    if hs_norm(&(w.adjoint() * w - eye(d))) > slack {
        return Err("W is not unitary".into());
    }
    for x in b.basis() {
        let y = w.adjoint() * x * w;
        let mut recon = CMat::zeros(d, d);
        let mut off = 0;
        for k in 0..bs.num_blocks() {
            let (n, m) = (bs.block_dims[k], bs.multiplicities[k]);
            let beta = bs.block_coefficient(x, k);
            for i in 0..n {
                for j in 0..n {
                    for t in 0..m {
                        recon[(off + i * m + t, off + j * m + t)] = beta[(i, j)];
                    }
                }
            }
            off += n * m;
        }
        if hs_norm(&(y - recon)) > slack {
            return Err("conjugation by W is not block diagonal with multiplicity".into());
        }
    }
    Ok(())
}

/// Wedderburn decomposition of a unital *-subalgebra. Randomized; retries
/// with fresh randomness up to 5 times before reporting failure.
pub fn wedderburn(b: &Subspace, tol: &Tolerance, rng: &mut ChaCha8Rng) -> Result<BlockStructure> {
    if !b.contains_identity(tol) {
        return Err(OpalgError::DegenerateInput(
            "wedderburn needs a unital *-algebra".into(),
        ));
    }
    let mut last_err = String::new();
    for _attempt in 0..5 {
        match wedderburn_attempt(b, tol, rng) {
            Ok(bs) => match verify_block_structure(b, &bs, tol) {
                Ok(()) => return Ok(bs),
                Err(e) => last_err = e,
            },
            Err(e) => last_err = e.to_string(),
        }
    }
    Err(OpalgError::StructureFailure(format!(
        "wedderburn failed after retries: {last_err}"
    )))
}

fn wedderburn_attempt(
    b: &Subspace,
    tol: &Tolerance,
    rng: &mut ChaCha8Rng,
) -> Result<BlockStructure> {
    let d = b.ambient_dim();
    let comm = commutant(b, tol)?;
    let center = subspace::intersect(b, &comm, tol)?;
    let r = center.dim();
    if r == 0 {
        return Err(OpalgError::StructureFailure(
            "center is zero-dimensional; input is not a unital algebra".into(),
        ));
    }

    // Generic central element: r distinct eigenvalues, one per minimal
    // central projection. Merged clusters trigger a redraw.
    let mut projections: Option<Vec<CMat>> = None;
    for _try in 0..50 {
        let z = {
            let raw = center.random_hermitian_element(rng, tol)?;
            (&raw + raw.adjoint()).scale(0.5)
        };
        let (vals, vecs) = herm_eig(&z)?;
        let clusters = cluster_eigenvalues(&vals);
        if clusters.len() == r {
            projections = Some(
                clusters
                    .iter()
                    .map(|&rg| spectral_projection(&vecs, rg))
                    .collect(),
            );
            break;
        }
    }
    let projections = projections.ok_or_else(|| {
        OpalgError::StructureFailure("central element clustering kept merging".into())
    })?;

    let mut block_dims = Vec::with_capacity(r);
    let mut multiplicities = Vec::with_capacity(r);
    let mut block_iso = Vec::with_capacity(r);
    let mut w = CMat::zeros(d, d);
    let mut col_off = 0;
    for p in &projections {
        let bu = block_matrix_units(b, p, tol, rng)?;
        let (n, m) = (bu.n, bu.m);
        let f = range_basis_of_projection(&bu.units[0])?;
        if f.len() != m {
            return Err(OpalgError::StructureFailure(format!(
                "e_11 range has dimension {} but multiplicity is {m}",
                f.len()
            )));
        }
        for i in 0..n {
            // Columns e_{i1} f_t realize the tensor factorization.
            let ei1 = &bu.units[i * n];
            for ft in f.iter().take(m) {
                let g = ei1 * ft;
                for row in 0..d {
                    w[(row, col_off)] = g[row];
                }
                col_off += 1;
            }
        }
        let domain = Subspace::full(n);
        block_iso.push(SubspaceMap::from_basis_images(domain, d, bu.units.clone())?);
        block_dims.push(n);
        multiplicities.push(m);
    }
    if col_off != d {
        return Err(OpalgError::StructureFailure(format!(
            "adapted basis has {col_off} columns, expected {d}"
        )));
    }
    Ok(BlockStructure {
        central_projections: projections,
        block_dims,
        multiplicities,
        basis_unitary: w,
        block_iso,
    })
}

/// The ideal `Σ_{k ∈ S} p_k B p_k` spanned by a subset of blocks.
pub fn ideal_of_blocks(
    b: &Subspace,
    bs: &BlockStructure,
    blocks: &[usize],
    tol: &Tolerance,
) -> Result<Subspace> {
    let d = b.ambient_dim();
    if blocks.is_empty() {
        return Ok(Subspace::zero(d));
    }
    let mut mats = Vec::new();
    for &k in blocks {
        let p = &bs.central_projections[k];
        for x in b.basis() {
            mats.push(p * x * p);
        }
    }
    subspace::span_of(&mats, tol)
}

/// Cut-down `x ↦ (1 − p_S) x (1 − p_S)` restricted to `B`: the quotient
/// *-homomorphism onto the complementary blocks.
pub fn quotient_map(
    b: &Subspace,
    bs: &BlockStructure,
    blocks: &[usize],
) -> Result<SubspaceMap> {
    let d = b.ambient_dim();
    let mut ps = CMat::zeros(d, d);
    for &k in blocks {
        ps += &bs.central_projections[k];
    }
    let q = eye(d) - ps;
    let images: Vec<CMat> = b.basis().iter().map(|x| &q * x * &q).collect();
    SubspaceMap::from_basis_images(b.clone(), d, images)
}
