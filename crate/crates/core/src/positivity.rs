//! Certification engine.
//!
//! Semidefinite feasibility by Dykstra-corrected alternating projections,
//! CP-extendability of maps on operator systems through Choi matrices, and
//! complete-isometry verdicts obtained by certifying a map and its inverse
//! as completely positive on the associated operator system.
//!
//! The Choi convention is fixed once for the whole crate: the Choi matrix of
//! the extension variable is `C = Σ_ij E_ij ⊗ T(E_ij)` over a full
//! matrix-unit basis of `M_d`, with the constraint imposed only on the given
//! operator system; the induced map is `x ↦ Σ_ij x_ij C_ij`.
//!
//! Verdicts are tri-state. `Refuted` always carries a witness that
//! re-verifies from scratch; `Inconclusive` is never silently promoted —
//! alternating projections cannot prove infeasibility, so honesty about
//! stalled searches is part of the contract. A word on witness levels: a
//! violation of complete positivity for maps into `M_e` is always visible at
//! amplification level `k ≤ e` (the standard range-dimension bound); the
//! witness search relies on that bound.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::error::OpalgError;
use crate::linalg::{
    self, amplify, cre, eye, hs_inner, hs_norm, matrix_unit, min_eig_herm, op_norm, psd_project,
    CMat, Tolerance,
};
use crate::map::SubspaceMap;
use crate::subspace::{self, Subspace};
use crate::Result;

/// Tri-state outcome of a certification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    Refuted,
    Inconclusive,
}

/// Concrete evidence attached to a certificate.
#[derive(Debug, Clone)]
pub enum Witness {
    /// Feasible point of an SDP (e.g. a Choi matrix or a Gram matrix).
    Feasible(CMat),
    /// A PSD block matrix in `M_k(S)` whose image has a negative eigenvalue.
    CpLevel { k: usize, block: CMat, image_min_eig: f64 },
    /// A level-k element whose norm changes under the map.
    NormLevel { k: usize, block: CMat, norm_in: f64, norm_out: f64 },
    /// A nonzero domain element mapped to zero.
    Kernel(CMat),
    /// `a + b* = 0` in the domain system while `T(a) + T(b)* ≠ 0`: the map
    /// admits no *-linear extension to `A + A*`.
    StarObstruction { a_part: CMat, b_part: CMat },
    /// A Hermitian functional separating a point from a cone.
    Separating(CMat),
}

/// Certification result: verdict, evidence, and solver diagnostics.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub residual: f64,
    pub iterations: usize,
    pub detail: String,
}

impl Certificate {
    pub fn certified(witness: Option<Witness>, residual: f64, iterations: usize, detail: &str) -> Self {
        Certificate {
            verdict: Verdict::Certified,
            witness,
            residual,
            iterations,
            detail: detail.to_string(),
        }
    }

    pub fn refuted(witness: Witness, residual: f64, detail: &str) -> Self {
        Certificate {
            verdict: Verdict::Refuted,
            witness: Some(witness),
            residual,
            iterations: 0,
            detail: detail.to_string(),
        }
    }

    pub fn inconclusive(residual: f64, iterations: usize, detail: &str) -> Self {
        Certificate {
            verdict: Verdict::Inconclusive,
            witness: None,
            residual,
            iterations,
            detail: detail.to_string(),
        }
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    pub fn is_refuted(&self) -> bool {
        self.verdict == Verdict::Refuted
    }
}

/// Budget knobs for the randomized searches.
#[derive(Debug, Clone, Copy)]
pub struct CertOptions {
    /// Levels probed by the norm falsifier inside `complete_isometry`.
    pub falsifier_levels: usize,
    /// Samples per level for the norm falsifier.
    pub falsifier_trials: usize,
    /// Total samples for the CP witness search.
    pub witness_trials: usize,
    /// Local refinement steps on the best CP witness candidates.
    pub refine_steps: usize,
}

impl Default for CertOptions {
    fn default() -> Self {
        CertOptions {
            falsifier_levels: 3,
            falsifier_trials: 64,
            witness_trials: 200,
            refine_steps: 50,
        }
    }
}

// ── Affine sets for the feasibility solver ──────────────────────────

/// An affine subspace of Hermitian matrices with an exact projector.
trait AffineSet {
    /// Orthogonal projection onto the affine set.
    fn project(&self, x: &CMat) -> CMat;
    /// The projection of zero (an anchor point in the set).
    fn anchor(&self) -> CMat;
    /// Real dimension of the pinned directions.
    fn pinned_real_dim(&self) -> usize;
}

/// Generic affine set given by Hermitian functionals `⟨K_α, X⟩ = β_α`,
/// orthonormalized over the reals at construction.
struct OrthoAffine {
    n: usize,
    ortho: Vec<CMat>,
    targets: Vec<f64>,
    /// Worst inconsistency found while orthonormalizing dependent
    /// functionals; a genuinely inconsistent affine system has no points.
    pub inconsistency: f64,
}

impl OrthoAffine {
    fn new(n: usize, functionals: &[(CMat, f64)], tol: &Tolerance) -> Result<Self> {
        let mut ortho: Vec<CMat> = Vec::new();
        let mut targets: Vec<f64> = Vec::new();
        let mut inconsistency: f64 = 0.0;
        for (k, beta) in functionals {
            if k.shape() != (n, n) {
                return Err(OpalgError::DegenerateInput(
                    "constraint functional shape mismatch".into(),
                ));
            }
            let herm_dev = hs_norm(&(k - k.adjoint()));
            if herm_dev > 1e-8 * hs_norm(k).max(1.0) {
                return Err(OpalgError::DegenerateInput(
                    "constraint functionals must be Hermitian".into(),
                ));
            }
            // Orthogonalize against accepted functionals, tracking the
            // induced target.
            let mut r = k.clone();
            let mut t = *beta;
            for _ in 0..2 {
                for (o, ot) in ortho.iter().zip(&targets) {
                    let c = hs_inner(&r, o).re;
                    r -= o.scale(c);
                    t -= c * ot;
                }
                // Second pass only adjusts r; recompute t once.
                break;
            }
            // One full re-orthogonalization pass for numerical safety.
            for o in ortho.iter() {
                let c = hs_inner(&r, o).re;
                r -= o.scale(c);
            }
            let norm = hs_norm(&r);
            if norm > tol.rank_tol.max(1e-12) * hs_norm(k).max(1.0) {
                ortho.push(r.map(|z| z / norm));
                targets.push(t / norm);
            } else {
                // Dependent functional; its residual target measures
                // inconsistency of the affine system.
                inconsistency = inconsistency.max(t.abs());
            }
        }
        Ok(OrthoAffine {
            n,
            ortho,
            targets,
            inconsistency,
        })
    }
}

impl AffineSet for OrthoAffine {
    fn project(&self, x: &CMat) -> CMat {
        let mut out = x.clone();
        for (o, t) in self.ortho.iter().zip(&self.targets) {
            let c = hs_inner(&out, o).re - t;
            out -= o.scale(c);
        }
        out
    }

    fn anchor(&self) -> CMat {
        let mut out = CMat::zeros(self.n, self.n);
        for (o, t) in self.ortho.iter().zip(&self.targets) {
            out += o.scale(*t);
        }
        out
    }

    fn pinned_real_dim(&self) -> usize {
        self.ortho.len()
    }
}

/// Choi agreement constraints: the induced map of the Choi variable must
/// reproduce `T` on a Hermitian orthonormal basis of the operator system.
struct ChoiAffine {
    d: usize,
    e: usize,
    herm_basis: Vec<CMat>,
    targets: Vec<CMat>,
}

impl ChoiAffine {
    /// `Σ_ij h_ij C_ij` where `C_ij` are the `e×e` blocks of the Choi
    /// variable; equals the induced map applied to `h`.
    fn contract(&self, h: &CMat, x: &CMat) -> CMat {
        let e = self.e;
        let mut out = CMat::zeros(e, e);
        for i in 0..self.d {
            for j in 0..self.d {
                let hij = h[(i, j)];
                if hij.norm() > 0.0 {
                    let block = x.view((i * e, j * e), (e, e));
                    out += block.map(|z| z * hij);
                }
            }
        }
        out
    }
}

impl AffineSet for ChoiAffine {
    fn project(&self, x: &CMat) -> CMat {
        let e = self.e;
        let mut out = x.clone();
        for (h, t) in self.herm_basis.iter().zip(&self.targets) {
            let delta = self.contract(h, x) - t;
            // Subtract h^T ⊗ delta.
            for i in 0..self.d {
                for j in 0..self.d {
                    let hji = h[(j, i)];
                    if hji.norm() > 0.0 {
                        let mut block = out.view_mut((i * e, j * e), (e, e));
                        for r in 0..e {
                            for c in 0..e {
                                block[(r, c)] -= hji * delta[(r, c)];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn anchor(&self) -> CMat {
        let e = self.e;
        let mut out = CMat::zeros(self.d * e, self.d * e);
        for (h, t) in self.herm_basis.iter().zip(&self.targets) {
            for i in 0..self.d {
                for j in 0..self.d {
                    let hji = h[(j, i)];
                    if hji.norm() > 0.0 {
                        let mut block = out.view_mut((i * e, j * e), (e, e));
                        for r in 0..e {
                            for c in 0..e {
                                block[(r, c)] += hji * t[(r, c)];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn pinned_real_dim(&self) -> usize {
        self.herm_basis.len() * self.e * self.e
    }
}

/// Alternating projections between an affine set and the PSD cone, with the
/// Dykstra correction on the cone side (the affine side needs none).
fn dykstra_feasibility(aff: &dyn AffineSet, n: usize, tol: &Tolerance) -> Result<Certificate> {
    let anchor = aff.anchor();
    let scale = op_norm(&anchor).max(1.0);

    // Fully pinned variable: the affine set is a single point.
    if aff.pinned_real_dim() >= n * n {
        let (lam, _) = min_eig_herm(&anchor)?;
        if lam >= -tol.cert_tol * scale {
            return Ok(Certificate::certified(
                Some(Witness::Feasible(anchor)),
                (-lam).max(0.0),
                0,
                "affine constraints pin the variable; PSD check direct",
            ));
        }
        return Ok(Certificate::inconclusive(
            -lam,
            0,
            "affine constraints pin the variable to a non-PSD point",
        ));
    }

    // Warm start: push the anchor toward the PSD cone along the identity,
    // then return to the affine set.
    let mut x = {
        let (lam, _) = min_eig_herm(&anchor)?;
        if lam < 0.0 {
            aff.project(&(&anchor + eye(n).scale(-lam * 1.05)))
        } else {
            anchor
        }
    };
    let mut p = CMat::zeros(n, n);
    let mut best_gap = f64::INFINITY;
    let mut stall = 0usize;
    // Cycle bookkeeping for geometric extrapolation: the Dykstra iterates
    // approach the intersection linearly, so a one-term Aitken jump along
    // the cycle difference skips most of the tail.
    const CYCLE: usize = 60;
    let mut cycle_prev: Option<CMat> = None;
    let mut cycle_delta_prev: Option<CMat> = None;
    for it in 1..=tol.iter_cap {
        let y = psd_project(&(&x + &p))?;
        p = &x + &p - &y;
        let xn = aff.project(&y);
        let gap = hs_norm(&(&xn - &y));
        x = xn;

        let check_now = gap <= tol.cert_tol * scale || it % 100 == 0;
        if check_now {
            let (lam, _) = min_eig_herm(&x)?;
            if lam >= -tol.cert_tol * scale {
                return Ok(Certificate::certified(
                    Some(Witness::Feasible(x)),
                    (-lam).max(0.0),
                    it,
                    "alternating projections converged",
                ));
            }
        }

        if it % CYCLE == 0 {
            if let Some(prev) = &cycle_prev {
                let delta = &x - prev;
                if let Some(dprev) = &cycle_delta_prev {
                    let num = hs_inner(&delta, dprev).re;
                    let den = hs_inner(dprev, dprev).re.max(1e-300);
                    let rho = num / den;
                    if rho > 0.05 && rho < 0.9995 {
                        let jump = aff.project(&(&x + delta.scale(rho / (1.0 - rho))));
                        let (lam, _) = min_eig_herm(&jump)?;
                        if lam >= -tol.cert_tol * scale {
                            return Ok(Certificate::certified(
                                Some(Witness::Feasible(jump)),
                                (-lam).max(0.0),
                                it,
                                "alternating projections converged (extrapolated)",
                            ));
                        }
                        // Keep the jump when it is no worse than the
                        // current iterate; corrections are stale after it.
                        let jy = psd_project(&jump)?;
                        let jgap = hs_norm(&(aff.project(&jy) - &jy));
                        if jgap < gap {
                            x = jump;
                            p = CMat::zeros(n, n);
                            cycle_prev = None;
                            cycle_delta_prev = None;
                            continue;
                        }
                    }
                }
                cycle_delta_prev = Some(delta);
            }
            cycle_prev = Some(x.clone());
        }

        if gap < best_gap * (1.0 - 1e-4) {
            best_gap = gap;
            stall = 0;
        } else {
            stall += 1;
            if stall > 4000 {
                return Ok(Certificate::inconclusive(
                    gap / scale,
                    it,
                    "projection gap stalled; feasibility undecided",
                ));
            }
        }
    }
    let (lam, _) = min_eig_herm(&x)?;
    if lam >= -tol.cert_tol * scale {
        return Ok(Certificate::certified(
            Some(Witness::Feasible(x)),
            (-lam).max(0.0),
            tol.iter_cap,
            "alternating projections converged at the iteration cap",
        ));
    }
    Ok(Certificate::inconclusive(
        best_gap / scale,
        tol.iter_cap,
        "iteration cap reached",
    ))
}

/// Feasibility of `X ⪰ 0` under Hermitian affine constraints
/// `⟨K_α, X⟩ = β_α` on an `n×n` Hermitian variable.
///
/// Never returns `Refuted`: alternating projections cannot prove
/// infeasibility, so a failed search is `Inconclusive` and refutations are
/// the callers' business (witness searches).
pub fn sdp_feasible(n: usize, functionals: &[(CMat, f64)], tol: &Tolerance) -> Result<Certificate> {
    let aff = OrthoAffine::new(n, functionals, tol)?;
    if aff.inconsistency > tol.cert_tol {
        return Ok(Certificate::inconclusive(
            aff.inconsistency,
            0,
            "affine constraints are mutually inconsistent",
        ));
    }
    dykstra_feasibility(&aff, n, tol)
}

// ── Operator-system plumbing ────────────────────────────────────────

/// Hermitian orthonormal basis of a selfadjoint subspace, with targets under
/// a *-linear map.
fn system_herm_basis(t: &SubspaceMap, tol: &Tolerance) -> Result<(Vec<CMat>, Vec<CMat>)> {
    let herm = t.domain().hermitian_basis(tol)?;
    let targets: Vec<CMat> = herm
        .iter()
        .map(|h| {
            let img = t.apply(h);
            // Symmetrize: a *-linear map sends Hermitian to Hermitian and
            // the residual has been checked by the caller.
            (&img + img.adjoint()).scale(0.5)
        })
        .collect();
    Ok((herm, targets))
}

/// The Choi matrix `Σ_ij E_ij ⊗ T(E_ij)` of a map defined on all of `M_d`.
pub fn choi_of_full_map(t: &SubspaceMap) -> CMat {
    let d = t.domain().ambient_dim();
    let e = t.codomain_dim();
    let mut c = CMat::zeros(d * e, d * e);
    for i in 0..d {
        for j in 0..d {
            let img = t.apply(&matrix_unit(d, i, j));
            c.view_mut((i * e, j * e), (e, e)).copy_from(&img);
        }
    }
    c
}

/// The map induced by a Choi matrix: `x ↦ Σ_ij x_ij C_ij`.
pub fn apply_choi(c: &CMat, x: &CMat, d: usize, e: usize) -> CMat {
    let mut out = CMat::zeros(e, e);
    for i in 0..d {
        for j in 0..d {
            let xij = x[(i, j)];
            if xij.norm() > 0.0 {
                let block = c.view((i * e, j * e), (e, e));
                out += block.map(|z| z * xij);
            }
        }
    }
    out
}

// ── CP witness search ───────────────────────────────────────────────

/// Random Hermitian element of `M_k(S)` (entries in `S`, block-Hermitian).
fn random_block_hermitian(
    s: &Subspace,
    k: usize,
    tol: &Tolerance,
    rng: &mut ChaCha8Rng,
) -> Result<CMat> {
    let d = s.ambient_dim();
    let mut blocks = vec![vec![CMat::zeros(d, d); k]; k];
    for i in 0..k {
        blocks[i][i] = s.random_hermitian_element(rng, tol)?;
        for j in (i + 1)..k {
            let x = s.random_element(rng);
            blocks[i][j] = x.clone();
            blocks[j][i] = x.adjoint();
        }
    }
    amplify(&blocks)
}

fn block_image(t: &SubspaceMap, x: &CMat, k: usize) -> Result<CMat> {
    let d = t.domain().ambient_dim();
    let mut blocks = vec![vec![CMat::zeros(t.codomain_dim(), t.codomain_dim()); k]; k];
    for i in 0..k {
        for j in 0..k {
            let entry = x.view((i * d, j * d), (d, d)).into_owned();
            blocks[i][j] = t.apply(&entry);
        }
    }
    amplify(&blocks)
}

/// Shifts a Hermitian block element to the PSD cone of `M_k(S)` and
/// evaluates the smallest eigenvalue of its image, normalized by `‖X‖`.
fn witness_objective(t: &SubspaceMap, h: &CMat, k: usize) -> Result<(f64, CMat)> {
    let d = t.domain().ambient_dim();
    let (lam_h, _) = min_eig_herm(h)?;
    let x = h - eye(k * d).scale(lam_h.min(0.0));
    let nx = op_norm(&x).max(1e-300);
    let xn = x.map(|z| z / nx);
    let img = block_image(t, &xn, k)?;
    let (lam, _) = min_eig_herm(&img)?;
    Ok((lam, xn))
}

/// HS adjoint of the map, `T†(y) = Σ_i ⟨y, T(s_i)⟩ s_i`.
fn map_adjoint_apply(t: &SubspaceMap, y: &CMat) -> CMat {
    let d = t.domain().ambient_dim();
    let mut out = CMat::zeros(d, d);
    for (s, img) in t.domain().basis().iter().zip(t.images()) {
        let c = hs_inner(y, img);
        out += s.map(|z| z * c);
    }
    out
}

/// Randomized search for a PSD element of `M_k(S)` whose image has a
/// negative eigenvalue; levels run up to the codomain dimension.
fn cp_witness_search(
    t: &SubspaceMap,
    tol: &Tolerance,
    opts: &CertOptions,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(usize, CMat, f64)>> {
    let d = t.domain().ambient_dim();
    let e = t.codomain_dim();
    let k_max = e.max(1);
    if t.domain().dim() == 0 {
        return Ok(None);
    }

    // Deterministic candidate: the full matrix-unit block, available when
    // the system is all of M_d. Its image is the Choi matrix itself.
    if t.domain().dim() == d * d {
        let mut blocks = vec![vec![CMat::zeros(d, d); d]; d];
        for (i, row) in blocks.iter_mut().enumerate() {
            for (j, b) in row.iter_mut().enumerate() {
                *b = matrix_unit(d, i, j);
            }
        }
        let x = amplify(&blocks)?;
        let nx = op_norm(&x).max(1e-300);
        let xn = x.map(|z| z / nx);
        let img = block_image(t, &xn, d)?;
        let (lam, _) = min_eig_herm(&img)?;
        if lam < -tol.cert_tol {
            return Ok(Some((d, xn, lam)));
        }
    }

    let mut best: Option<(usize, CMat, f64)> = None;
    let trials = opts.witness_trials.max(1);
    for trial in 0..trials {
        let k = 1 + trial % k_max;
        let h = random_block_hermitian(t.domain(), k, tol, rng)?;
        let (lam, x) = witness_objective(t, &h, k)?;
        if best.as_ref().map_or(true, |(_, _, b)| lam < *b) {
            best = Some((k, x, lam));
            // Refine promising candidates by subgradient steps on the
            // smallest image eigenvalue.
            if lam < 0.0 {
                let refined = refine_witness(t, &h, k, tol, opts, lam)?;
                if let Some((rx, rlam)) = refined {
                    if rlam < best.as_ref().unwrap().2 {
                        best = Some((k, rx, rlam));
                    }
                }
            }
        }
        if let Some((_, _, lam)) = &best {
            if *lam < -10.0 * tol.cert_tol {
                break;
            }
        }
    }
    match best {
        Some((k, x, lam)) if lam < -tol.cert_tol => Ok(Some((k, x, lam))),
        _ => Ok(None),
    }
}

fn refine_witness(
    t: &SubspaceMap,
    h0: &CMat,
    k: usize,
    tol: &Tolerance,
    opts: &CertOptions,
    lam0: f64,
) -> Result<Option<(CMat, f64)>> {
    let d = t.domain().ambient_dim();
    let mut h = h0.clone();
    let mut best_lam = lam0;
    let mut best_x: Option<CMat> = None;
    for _ in 0..opts.refine_steps {
        let (lam_h, _) = min_eig_herm(&h)?;
        let x = &h - eye(k * d).scale(lam_h.min(0.0));
        let img = block_image(t, &x, k)?;
        let (_, w) = min_eig_herm(&img)?;
        let ww = &w * w.adjoint();
        // Pull the eigenprojection back through the blockwise adjoint and
        // project onto Hermitian elements of M_k(S).
        let e = t.codomain_dim();
        let mut grad_blocks = vec![vec![CMat::zeros(d, d); k]; k];
        for i in 0..k {
            for j in 0..k {
                let wij = ww.view((i * e, j * e), (e, e)).into_owned();
                let pulled = map_adjoint_apply(t, &wij);
                grad_blocks[i][j] = t.domain().project(&pulled);
            }
        }
        let grad_raw = amplify(&grad_blocks)?;
        let grad = (&grad_raw + grad_raw.adjoint()).scale(0.5);
        let gn = hs_norm(&grad).max(1e-300);
        let hn = hs_norm(&h).max(1e-300);
        let mut improved = false;
        for eta in [0.3, 0.1, 0.03] {
            let cand = &h - grad.scale(eta * hn / gn);
            let (lam, xn) = witness_objective(t, &cand, k)?;
            if lam < best_lam {
                best_lam = lam;
                best_x = Some(xn);
                h = cand;
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
        if best_lam < -10.0 * tol.cert_tol {
            break;
        }
    }
    Ok(best_x.map(|x| (x, best_lam)))
}

/// Re-verifies a CP witness from scratch: the block must be PSD with entries
/// in the system, and its image must violate positivity by `cert_tol / 2`.
pub fn verify_cp_witness(
    t: &SubspaceMap,
    block: &CMat,
    k: usize,
    tol: &Tolerance,
) -> Result<f64> {
    let d = t.domain().ambient_dim();
    if block.shape() != (k * d, k * d) {
        return Err(OpalgError::DegenerateInput("witness shape mismatch".into()));
    }
    let scale = op_norm(block).max(1e-300);
    let (lam_block, _) = min_eig_herm(block)?;
    if lam_block < -tol.cert_tol * scale {
        return Err(OpalgError::DegenerateInput(format!(
            "witness block is not PSD (lambda_min = {lam_block:.3e})"
        )));
    }
    for i in 0..k {
        for j in 0..k {
            let entry = block.view((i * d, j * d), (d, d)).into_owned();
            if !t.domain().contains(&entry, &Tolerance {
                cert_tol: tol.cert_tol * 10.0,
                ..*tol
            }) {
                return Err(OpalgError::DegenerateInput(format!(
                    "witness entry ({i},{j}) is not in the operator system"
                )));
            }
        }
    }
    let img = block_image(t, block, k)?;
    let (lam, _) = min_eig_herm(&img)?;
    if lam <= -tol.cert_tol / 2.0 * scale.max(1.0) {
        Ok(lam)
    } else {
        Err(OpalgError::StructureFailure(format!(
            "witness does not re-verify: image lambda_min = {lam:.3e}"
        )))
    }
}

/// CP-extendability of a *-linear map on an operator system `S ⊆ M_d` into
/// `M_e`, decided through Choi-matrix feasibility.
///
/// `Certified` comes with a Choi matrix of a completely positive extension
/// to all of `M_d`; `Refuted` with a PSD element of some `M_k(S)`, `k ≤ e`,
/// whose image fails positivity.
pub fn cp_extendable(
    t: &SubspaceMap,
    tol: &Tolerance,
    opts: &CertOptions,
    rng: &mut ChaCha8Rng,
) -> Result<Certificate> {
    let s = t.domain();
    let d = s.ambient_dim();
    let e = t.codomain_dim();
    if !s.contains_identity(tol) {
        return Err(OpalgError::DegenerateInput(
            "cp_extendable needs a unital operator system as domain".into(),
        ));
    }
    let star_res = t.star_linearity_residual();
    let scale: f64 = t.images().iter().map(hs_norm).fold(1.0, f64::max);
    if star_res > tol.cert_tol * 100.0 * scale {
        return Err(OpalgError::DegenerateInput(format!(
            "map is not *-linear on its system (residual {star_res:.3e})"
        )));
    }

    if let Some((k, block, lam)) = cp_witness_search(t, tol, opts, rng)? {
        verify_cp_witness(t, &block, k, tol)?;
        return Ok(Certificate::refuted(
            Witness::CpLevel {
                k,
                block,
                image_min_eig: lam,
            },
            -lam,
            "PSD block with non-PSD image found by randomized search",
        ));
    }

    let (herm, targets) = system_herm_basis(t, tol)?;
    let aff = ChoiAffine {
        d,
        e,
        herm_basis: herm,
        targets,
    };
    let cert = dykstra_feasibility(&aff, d * e, tol)?;
    if cert.is_certified() {
        // Re-verify agreement of the certified Choi matrix on the basis.
        if let Some(Witness::Feasible(choi)) = &cert.witness {
            let mut agree: f64 = 0.0;
            for (b, img) in s.basis().iter().zip(t.images()) {
                agree = agree.max(hs_norm(&(apply_choi(choi, b, d, e) - img)));
            }
            if agree > tol.cert_tol * 100.0 * scale.max(1.0) {
                return Err(OpalgError::StructureFailure(format!(
                    "certified Choi matrix does not reproduce the map (residual {agree:.3e})"
                )));
            }
        }
    }
    Ok(cert)
}

// ── Norm falsifier ──────────────────────────────────────────────────

/// Randomized level-k isometry check. `Refuted` carries a concrete level-k
/// element whose norm moves; `Certified` only means the falsifier found no
/// violation at this level and is promoted to a real certificate by
/// `complete_isometry`.
pub fn level_k_isometric(
    t: &SubspaceMap,
    k: usize,
    trials: usize,
    tol: &Tolerance,
    rng: &mut ChaCha8Rng,
) -> Result<Certificate> {
    if k == 0 {
        return Err(OpalgError::DegenerateInput("level k must be positive".into()));
    }
    let d = t.domain().ambient_dim();
    if t.domain().dim() == 0 {
        return Ok(Certificate::certified(None, 0.0, 0, "zero domain"));
    }
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let mut blocks = vec![vec![CMat::zeros(d, d); k]; k];
        for row in blocks.iter_mut() {
            for b in row.iter_mut() {
                *b = t.domain().random_element(rng);
            }
        }
        let x = amplify(&blocks)?;
        let nin = op_norm(&x);
        if nin < 1e-300 {
            continue;
        }
        let y = block_image(t, &x, k)?;
        let nout = op_norm(&y);
        let rel = (nout - nin).abs() / nin;
        worst = worst.max(rel);
        if rel > tol.cert_tol {
            let xn = x.map(|z| z / nin);
            return Ok(Certificate::refuted(
                Witness::NormLevel {
                    k,
                    block: xn,
                    norm_in: 1.0,
                    norm_out: nout / nin,
                },
                rel,
                "level-k element changes norm",
            ));
        }
    }
    Ok(Certificate::certified(
        None,
        worst,
        trials,
        "no level-k violation found (falsification only)",
    ))
}

/// Re-verifies a norm witness from scratch.
pub fn verify_norm_witness(
    t: &SubspaceMap,
    block: &CMat,
    k: usize,
    tol: &Tolerance,
) -> Result<f64> {
    let d = t.domain().ambient_dim();
    if block.shape() != (k * d, k * d) {
        return Err(OpalgError::DegenerateInput("witness shape mismatch".into()));
    }
    let nin = op_norm(block);
    if nin < 1e-300 {
        return Err(OpalgError::DegenerateInput("witness is zero".into()));
    }
    let nout = op_norm(&block_image(t, block, k)?);
    let rel = (nout - nin).abs() / nin;
    if rel > tol.cert_tol / 2.0 {
        Ok(rel)
    } else {
        Err(OpalgError::StructureFailure(format!(
            "norm witness does not re-verify (relative change {rel:.3e})"
        )))
    }
}

// ── Complete isometry ───────────────────────────────────────────────

/// Builds the canonical *-linear extension `T̃(a + b*) = T(a) + T(b)*` on
/// `S = span(A ∪ A* ∪ {1})`. Returns the extension, or a witness that no
/// *-linear extension exists.
pub fn unital_system_extension(
    t: &SubspaceMap,
    tol: &Tolerance,
) -> Result<std::result::Result<SubspaceMap, Witness>> {
    let a = t.domain();
    let d = a.ambient_dim();
    let e = t.codomain_dim();
    let mut mats: Vec<CMat> = a.basis().to_vec();
    mats.extend(a.basis().iter().map(|b| b.adjoint()));
    mats.push(eye(d));
    let s = subspace::span_of(&mats, tol)?;

    // Decomposition operator: columns are vec(a_i) then vec(a_i*) then
    // vec(1); a least-squares solve expresses each basis element of S.
    let n = d * d;
    let k = a.dim();
    let cols = 2 * k + 1;
    let mut mtx = CMat::zeros(n, cols);
    for (j, b) in a.basis().iter().enumerate() {
        let v = linalg::vec_row(b);
        let w = linalg::vec_row(&b.adjoint());
        for i in 0..n {
            mtx[(i, j)] = v[i];
            mtx[(i, k + j)] = w[i];
        }
    }
    let idv = linalg::vec_row(&eye(d));
    for i in 0..n {
        mtx[(i, 2 * k)] = idv[i];
    }

    // Well-definedness: kernel combos must map to zero.
    let t1 = t.apply_identity();
    for coeff in linalg::null_space(&mtx, tol.rank_tol) {
        let mut a_part = CMat::zeros(d, d);
        let mut b_part = CMat::zeros(d, d);
        let mut img = CMat::zeros(e, e);
        for (j, b) in a.basis().iter().enumerate() {
            a_part += b.map(|z| z * coeff[j]);
            b_part += b.map(|z| z * coeff[k + j].conj());
        }
        a_part += eye(d).map(|z| z * coeff[2 * k]);
        img += t.apply(&a_part);
        img += (t.apply(&b_part)).adjoint();
        // a_part counts the identity with T; consistent since 1 ∈ A.
        if hs_norm(&img) > tol.cert_tol * 100.0 * op_norm(&t1).max(1.0) {
            return Ok(Err(Witness::StarObstruction { a_part, b_part }));
        }
    }

    let mut images = Vec::with_capacity(s.dim());
    for b in s.basis() {
        let coeff = linalg::lstsq(&mtx, &linalg::vec_row(b), tol.rank_tol);
        let mut a_part = CMat::zeros(d, d);
        let mut b_part = CMat::zeros(d, d);
        let mut lam = Complex64::ZERO;
        for j in 0..k {
            a_part += a.basis()[j].map(|z| z * coeff[j]);
            b_part += a.basis()[j].map(|z| z * coeff[k + j].conj());
        }
        lam += coeff[2 * k];
        let mut img = t.apply(&a_part) + t.apply(&b_part).adjoint();
        img += eye(e).map(|z| z * lam);
        // Reconstruction check.
        let recon = &a_part + b_part.adjoint() + eye(d).map(|z| z * lam);
        if hs_norm(&(recon - b)) > tol.cert_tol * 100.0 {
            return Err(OpalgError::StructureFailure(
                "system decomposition failed to reproduce a basis element".into(),
            ));
        }
        images.push(img);
    }
    Ok(Ok(SubspaceMap::from_basis_images(s, e, images)?))
}

/// Paulsen's off-diagonal system: the unital *-linear map on
/// `{[[λ1, x],[y*, μ1]] : x, y ∈ V} ⊆ M_{2d}` induced by `T`; it is
/// completely positive exactly when `T` is completely contractive.
pub fn paulsen_system_map(t: &SubspaceMap, tol: &Tolerance) -> Result<SubspaceMap> {
    let v = t.domain();
    let d = v.ambient_dim();
    let e = t.codomain_dim();
    let sd = (d as f64).sqrt();
    let se = (e as f64).sqrt();

    let upper = |m: &CMat, n: usize| -> CMat {
        let mut out = CMat::zeros(2 * n, 2 * n);
        out.view_mut((0, n), (n, n)).copy_from(m);
        out
    };
    let lower = |m: &CMat, n: usize| -> CMat {
        let mut out = CMat::zeros(2 * n, 2 * n);
        out.view_mut((n, 0), (n, n)).copy_from(m);
        out
    };
    let diag1 = |n: usize| -> CMat {
        let mut out = CMat::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(&eye(n));
        out
    };
    let diag2 = |n: usize| -> CMat {
        let mut out = CMat::zeros(2 * n, 2 * n);
        out.view_mut((n, n), (n, n)).copy_from(&eye(n));
        out
    };

    let mut basis = vec![diag1(d).map(|z| z / cre(sd)), diag2(d).map(|z| z / cre(sd))];
    let mut images = vec![diag1(e).map(|z| z / cre(sd)), diag2(e).map(|z| z / cre(sd))];
    let _ = se;
    for (b, img) in v.basis().iter().zip(t.images()) {
        basis.push(upper(b, d));
        images.push(upper(img, e));
        basis.push(lower(&b.adjoint(), d));
        images.push(lower(&img.adjoint(), e));
    }
    let domain = Subspace::from_orthonormal_basis(2 * d, basis, tol)?;
    SubspaceMap::from_basis_images(domain, 2 * e, images)
}

/// Complete-isometry certification.
///
/// Unital maps go through the operator-system route: both the canonical
/// extension `T̃` on `A + A*` and its inverse must be CP-extendable. Maps
/// without a unit go through Paulsen's 2×2 corner embedding in a doubled
/// ambient algebra, in both directions.
pub fn complete_isometry(
    t: &SubspaceMap,
    unital: bool,
    tol: &Tolerance,
    opts: &CertOptions,
    rng: &mut ChaCha8Rng,
) -> Result<Certificate> {
    if t.domain().dim() == 0 {
        return Ok(Certificate::certified(None, 0.0, 0, "zero domain"));
    }
    if unital && !t.is_unital(tol) {
        return Err(OpalgError::DegenerateInput(
            "map was declared unital but T(1) differs from 1".into(),
        ));
    }

    // Injectivity is necessary; a kernel element is an immediate witness.
    if let Some(kel) = t.kernel_element(tol) {
        return Ok(Certificate::refuted(
            Witness::Kernel(kel),
            0.0,
            "map has nontrivial kernel",
        ));
    }

    // Cheap norm falsifier before any SDP.
    for k in 1..=opts.falsifier_levels.max(1) {
        let cert = level_k_isometric(t, k, opts.falsifier_trials, tol, rng)?;
        if cert.is_refuted() {
            if let Some(Witness::NormLevel { k, block, .. }) = &cert.witness {
                verify_norm_witness(t, block, *k, tol)?;
            }
            return Ok(cert);
        }
    }

    let effective_unital = unital || t.is_unital(tol);
    let (forward, backward) = if effective_unital {
        let tilde = match unital_system_extension(t, tol)? {
            Ok(m) => m,
            Err(w) => {
                return Ok(Certificate::refuted(
                    w,
                    0.0,
                    "no *-linear extension to A + A* exists",
                ))
            }
        };
        let fwd = cp_extendable(&tilde, tol, opts, rng)?;
        if fwd.is_refuted() {
            return Ok(Certificate {
                detail: format!("forward direction: {}", fwd.detail),
                ..fwd
            });
        }
        let tinv = match tilde.inverse_on_range(tol) {
            Ok(m) => m,
            Err(_) => {
                let kel = tilde.kernel_element(tol).unwrap_or_else(|| {
                    CMat::zeros(tilde.domain().ambient_dim(), tilde.domain().ambient_dim())
                });
                return Ok(Certificate::refuted(
                    Witness::Kernel(kel),
                    0.0,
                    "system extension is not injective",
                ));
            }
        };
        let bwd = cp_extendable(&tinv, tol, opts, rng)?;
        (fwd, bwd)
    } else {
        let phi = paulsen_system_map(t, tol)?;
        let fwd = cp_extendable(&phi, tol, opts, rng)?;
        if fwd.is_refuted() {
            return Ok(Certificate {
                detail: format!("forward corner system: {}", fwd.detail),
                ..fwd
            });
        }
        let tinv = t.inverse_on_range(tol)?;
        let phi_inv = paulsen_system_map(&tinv, tol)?;
        let bwd = cp_extendable(&phi_inv, tol, opts, rng)?;
        (fwd, bwd)
    };

    if backward.is_refuted() {
        return Ok(Certificate {
            detail: format!("inverse direction: {}", backward.detail),
            ..backward
        });
    }
    if forward.is_certified() && backward.is_certified() {
        return Ok(Certificate {
            verdict: Verdict::Certified,
            witness: forward.witness,
            residual: forward.residual.max(backward.residual),
            iterations: forward.iterations + backward.iterations,
            detail: "both directions completely positive".into(),
        });
    }
    let worst = forward.residual.max(backward.residual);
    Ok(Certificate::inconclusive(
        worst,
        forward.iterations + backward.iterations,
        "feasibility search inconclusive in at least one direction",
    ))
}

/// Resolves a tolerance tie between a certification and a refutation: the
/// refutation wins when its witness re-verifies at `cert_tol / 2`;
/// otherwise the contradiction is a structural failure.
pub fn reconcile_tie(
    t: &SubspaceMap,
    certified: Certificate,
    refuted: Certificate,
    tol: &Tolerance,
) -> Result<Certificate> {
    let ok = match &refuted.witness {
        Some(Witness::CpLevel { k, block, .. }) => verify_cp_witness(t, block, *k, tol).is_ok(),
        Some(Witness::NormLevel { k, block, .. }) => {
            verify_norm_witness(t, block, *k, tol).is_ok()
        }
        Some(Witness::Kernel(x)) => hs_norm(&t.apply(x)) <= tol.cert_tol * hs_norm(x).max(1.0),
        _ => false,
    };
    if ok {
        Ok(refuted)
    } else if certified.is_certified() {
        Err(OpalgError::StructureFailure(
            "certificate and refutation disagree and the witness does not re-verify".into(),
        ))
    } else {
        Ok(certified)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_rows, random_unitary};
    use rand::SeedableRng;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn opts() -> CertOptions {
        CertOptions::default()
    }

    #[test]
    fn sdp_trace_constraint_feasible() {
        // trace(X) = 1 on a PSD 2×2 variable; I/2 is feasible.
        let cert = sdp_feasible(2, &[(eye(2), 1.0)], &tol()).unwrap();
        assert!(cert.is_certified());
        if let Some(Witness::Feasible(x)) = cert.witness {
            assert!((hs_inner(&x, &eye(2)).re - 1.0).abs() < 1e-8);
            let (lam, _) = min_eig_herm(&x).unwrap();
            assert!(lam >= -1e-8);
        } else {
            panic!("expected feasible point");
        }
    }

    #[test]
    fn sdp_negative_identity_inconclusive() {
        // X pinned to −I: not PSD, and the solver must not fake a refutation.
        let mut fns = vec![
            (matrix_unit(2, 0, 0), -1.0),
            (matrix_unit(2, 1, 1), -1.0),
        ];
        // Pin off-diagonal to zero.
        let re = (matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0)).scale(0.5);
        let im = (matrix_unit(2, 1, 0) - matrix_unit(2, 0, 1)).map(|z| z * Complex64::new(0.0, 0.5));
        fns.push((re, 0.0));
        fns.push((im, 0.0));
        let cert = sdp_feasible(2, &fns, &tol()).unwrap();
        assert_eq!(cert.verdict, Verdict::Inconclusive);
        assert!((cert.residual - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sdp_forced_offdiagonal_inconclusive() {
        // diag(X) = (1,1), X_12 = 2: |X_12| ≤ 1 is forced for PSD, so the
        // fully pinned point is infeasible.
        let re = (matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0)).scale(0.5);
        let im = (matrix_unit(2, 1, 0) - matrix_unit(2, 0, 1)).map(|z| z * Complex64::new(0.0, 0.5));
        let fns = vec![
            (matrix_unit(2, 0, 0), 1.0),
            (matrix_unit(2, 1, 1), 1.0),
            (re, 2.0),
            (im, 0.0),
        ];
        let cert = sdp_feasible(2, &fns, &tol()).unwrap();
        assert_eq!(cert.verdict, Verdict::Inconclusive);
    }

    fn full_map(d: usize, e: usize, f: impl Fn(&CMat) -> CMat) -> SubspaceMap {
        let s = Subspace::full(d);
        let images: Vec<CMat> = s.basis().iter().map(|b| f(b)).collect();
        SubspaceMap::from_basis_images(s, e, images).unwrap()
    }

    #[test]
    fn cp_identity_certified() {
        let t = full_map(2, 2, |x| x.clone());
        let cert = cp_extendable(&t, &tol(), &opts(), &mut rng(1)).unwrap();
        assert!(cert.is_certified());
    }

    #[test]
    fn cp_transpose_refuted() {
        // Oracle: the Choi matrix of the transpose is the swap, with
        // eigenvalue −1 (eigenvector (E_12 − E_21)/√2).
        let t = full_map(2, 2, |x| x.transpose());
        let cert = cp_extendable(&t, &tol(), &opts(), &mut rng(2)).unwrap();
        assert!(cert.is_refuted());
        match cert.witness {
            Some(Witness::CpLevel { k, block, image_min_eig }) => {
                assert!(k <= 2);
                assert!(image_min_eig < -0.4);
                verify_cp_witness(&t, &block, k, &tol()).unwrap();
            }
            _ => panic!("expected a CP witness"),
        }
    }

    #[test]
    fn cp_compression_certified() {
        // x ↦ x_11 is conjugation by an isometry, hence CP.
        let t = full_map(2, 1, |x| CMat::from_fn(1, 1, |_, _| x[(0, 0)]));
        let cert = cp_extendable(&t, &tol(), &opts(), &mut rng(3)).unwrap();
        assert!(cert.is_certified());
    }

    #[test]
    fn choi_of_certified_map_reproduces_it() {
        let t = full_map(2, 2, |x| x.clone());
        let cert = cp_extendable(&t, &tol(), &opts(), &mut rng(4)).unwrap();
        if let Some(Witness::Feasible(choi)) = cert.witness {
            for b in t.domain().basis() {
                let lhs = apply_choi(&choi, b, 2, 2);
                assert!(hs_norm(&(lhs - t.apply(b))) < 1e-7);
            }
        } else {
            panic!("expected Choi matrix");
        }
    }

    #[test]
    fn level_k_unitary_conjugation_clean() {
        let u = random_unitary(&mut rng(5), 3);
        let t = full_map(3, 3, |x| &u * x * u.adjoint());
        for k in 1..=3 {
            let cert = level_k_isometric(&t, k, 40, &tol(), &mut rng(6)).unwrap();
            assert!(cert.is_certified());
        }
    }

    #[test]
    fn level_k_halving_refuted() {
        let t = full_map(2, 2, |x| x.scale(0.5));
        let cert = level_k_isometric(&t, 1, 10, &tol(), &mut rng(7)).unwrap();
        assert!(cert.is_refuted());
        if let Some(Witness::NormLevel { k, block, .. }) = &cert.witness {
            verify_norm_witness(&t, block, *k, &tol()).unwrap();
        }
    }

    #[test]
    fn level_k_diagonal_compression_refuted() {
        // T_2 → M_2 compress-to-diagonal kills E_12: norm drops 1 → 0.
        let t2 = Subspace::upper_triangular(2);
        let images: Vec<CMat> = t2
            .basis()
            .iter()
            .map(|b| CMat::from_fn(2, 2, |i, j| if i == j { b[(i, j)] } else { Complex64::ZERO }))
            .collect();
        let t = SubspaceMap::from_basis_images(t2, 2, images).unwrap();
        let cert = level_k_isometric(&t, 1, 50, &tol(), &mut rng(8)).unwrap();
        assert!(cert.is_refuted());
    }

    #[test]
    fn complete_isometry_inclusion_t2() {
        let t2 = Subspace::upper_triangular(2);
        let t = SubspaceMap::identity(t2);
        let cert = complete_isometry(&t, true, &tol(), &opts(), &mut rng(9)).unwrap();
        assert!(cert.is_certified());
    }

    #[test]
    fn complete_isometry_direct_sum_with_compression() {
        // φ(A) = diag(A, a_11): a direct sum of the identity and a
        // compression preserves all matrix norms.
        let t2 = Subspace::upper_triangular(2);
        let images: Vec<CMat> = t2
            .basis()
            .iter()
            .map(|b| {
                let mut m = CMat::zeros(3, 3);
                m.view_mut((0, 0), (2, 2)).copy_from(b);
                m[(2, 2)] = b[(0, 0)];
                m
            })
            .collect();
        let t = SubspaceMap::from_basis_images(t2, 3, images).unwrap();
        let cert = complete_isometry(&t, true, &tol(), &opts(), &mut rng(10)).unwrap();
        assert!(cert.is_certified(), "verdict: {:?} {}", cert.verdict, cert.detail);
        // Consistency: the falsifier agrees up to level 3.
        for k in 1..=3 {
            let c = level_k_isometric(&t, k, 200, &tol(), &mut rng(11)).unwrap();
            assert!(c.is_certified());
        }
    }

    #[test]
    fn complete_isometry_halving_refuted() {
        let t = full_map(2, 2, |x| x.scale(0.5));
        let cert = complete_isometry(&t, false, &tol(), &opts(), &mut rng(12)).unwrap();
        assert!(cert.is_refuted());
    }

    #[test]
    fn complete_isometry_conjugation_invariant() {
        // Pre/post-composing with unitary conjugations keeps the verdict.
        let t2 = Subspace::upper_triangular(2);
        let t = SubspaceMap::identity(t2.clone());
        let mut r = rng(13);
        let u = random_unitary(&mut r, 2);
        let conj = t.map_images(|m| &u * m * u.adjoint());
        let cert = complete_isometry(&conj, false, &tol(), &opts(), &mut r).unwrap();
        assert!(cert.is_certified(), "{}", cert.detail);

        let half = t.map_images(|m| (&u * m * u.adjoint()).scale(0.5));
        let cert2 = complete_isometry(&half, false, &tol(), &opts(), &mut r).unwrap();
        assert!(cert2.is_refuted());
    }

    #[test]
    fn paulsen_corner_of_contraction_is_cp() {
        // A strict contraction is completely contractive, so the corner
        // system map must certify CP even though the map is not isometric.
        let t = full_map(2, 2, |x| x.scale(0.5));
        let phi = paulsen_system_map(&t, &tol()).unwrap();
        let cert = cp_extendable(&phi, &tol(), &opts(), &mut rng(14)).unwrap();
        assert!(cert.is_certified(), "{}", cert.detail);
    }

    #[test]
    fn star_obstruction_detected() {
        // On the full system M_2, T(x) = x + x^T is linear but the declared
        // images break *-linearity on A ∩ A* in a way that admits no
        // consistent extension if we force a skewed image of E_12 vs E_21.
        let s = Subspace::full(2);
        let images: Vec<CMat> = s
            .basis()
            .iter()
            .enumerate()
            .map(|(i, b)| if i == 1 { b.scale(2.0) } else { b.clone() })
            .collect();
        let t = SubspaceMap::from_basis_images(s, 2, images).unwrap();
        // T(E_12) = 2E_12 but T(E_21) = E_21: T(x*) ≠ T(x)* on the system,
        // so cp_extendable must reject the map as not *-linear.
        assert!(cp_extendable(&t, &tol(), &opts(), &mut rng(15)).is_err());
    }

    #[test]
    fn from_rows_sanity() {
        let swap = from_rows(&[
            vec![(0.0, 0.0), (1.0, 0.0)],
            vec![(1.0, 0.0), (0.0, 0.0)],
        ]);
        assert!((op_norm(&swap) - 1.0).abs() < 1e-12);
    }
}
