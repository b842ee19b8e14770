//! Analysis and synthesis of complete isometries between matrix algebras.
//!
//! A certified complete isometry `T : A → M_e` is decomposed through the
//! triple system `Z` generated by `T(A)`: the maximal triple ideal `N ⊆ Z`
//! whose quotient stays completely isometric determines support projections
//! `p` (right) and `q` (left), a partial isometry `u = T(1)(1−p)`, and a
//! multiplicative part `θ = u* T(·)(1−p)` with `T(a)(1−p) = u θ(a)`. The
//! product identity `T(ab)(1−p) = T(a) T(1)* T(b)(1−p)` is recorded over
//! every basis pair as a residual ledger.

use rand_chacha::ChaCha8Rng;

use crate::error::OpalgError;
use crate::linalg::{eye, herm_eig, hs_norm, lstsq, op_norm, vec_row, CMat, CVec, Tolerance};
use crate::map::SubspaceMap;
use crate::positivity::{complete_isometry, CertOptions, Certificate, Verdict};
use crate::structure::wedderburn;
use crate::subspace::{self, GeneratorMode, GeneratorSet, Subspace};
use crate::Result;

/// Residual ledger for the identity `T(ab)(1−p) = T(a)T(1)*T(b)(1−p)`.
#[derive(Debug, Clone)]
pub struct StarProductLedger {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Decomposition data of a certified complete isometry.
#[derive(Debug, Clone)]
pub struct IsometryAnalysis {
    pub verdict: Certificate,
    /// The triple system generated by `T(A)`.
    pub triple_system: Subspace,
    /// Indices (into the nonzero triple blocks) of the maximal ideal `N`.
    pub ideal_blocks: Vec<usize>,
    /// Left/right support projections of the triple blocks, per block.
    pub block_supports: Vec<(CMat, CMat)>,
    /// Right support projection of `N`.
    pub p_right: CMat,
    /// Left support projection of `N`.
    pub q_left: CMat,
    /// The partial isometry `u = T(1)(1−p)`.
    pub u: CMat,
    /// The multiplicative part `θ = u* T(·)(1−p)`.
    pub theta: SubspaceMap,
    pub shilov: bool,
    pub left_type1: bool,
    pub right_type1: bool,
    pub star_product: StarProductLedger,
    /// Subset certificate log from the ideal search.
    pub certificates: Vec<(Vec<usize>, Certificate)>,
}

/// Outcome of `analyze`: either the decomposition, or the certificate that
/// stopped it (refuted or inconclusive complete-isometry check).
#[derive(Debug, Clone)]
pub enum AnalysisOutcome {
    Analyzed(Box<IsometryAnalysis>),
    NotCompletelyIsometric(Certificate),
}

/// Support projection of `Σ_i m_i* m_i` (right) or `Σ_i m_i m_i*` (left)
/// over a basis, eigen-thresholded at `rank_tol`.
fn aggregate_support(mats: &[CMat], right: bool, dim: usize, tol: &Tolerance) -> Result<CMat> {
    if mats.is_empty() {
        return Ok(CMat::zeros(dim, dim));
    }
    let mut acc = CMat::zeros(dim, dim);
    for m in mats {
        if right {
            acc += m.adjoint() * m;
        } else {
            acc += m * m.adjoint();
        }
    }
    let (vals, vecs) = herm_eig(&acc)?;
    let vmax = vals.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let mut proj = CMat::zeros(dim, dim);
    for (i, &v) in vals.iter().enumerate() {
        if v > tol.rank_tol * vmax {
            let col = vecs.column(i);
            proj += &col * col.adjoint();
        }
    }
    Ok(proj)
}

/// Nonzero triple blocks of the triple system `Z ⊆ M_e`, as pairs of
/// left/right support projections, read off the Wedderburn blocks of the
/// unitized linking algebra in `M_{2e}`.
fn triple_blocks(
    z: &Subspace,
    tol: &Tolerance,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(CMat, CMat)>> {
    let e = z.ambient_dim();
    if z.dim() == 0 {
        return Ok(vec![]);
    }
    let corner = |m: &CMat| -> CMat {
        let mut out = CMat::zeros(2 * e, 2 * e);
        out.view_mut((0, e), (e, e)).copy_from(m);
        out
    };
    let gens: Vec<CMat> = z.basis().iter().map(&corner).collect();
    let linking = subspace::generate(
        &GeneratorSet {
            ambient_dim: 2 * e,
            generators: gens,
            mode: GeneratorMode::StarAlgebra,
        },
        tol,
    )?;
    let bs = wedderburn(&linking, tol, rng)?;
    let mut blocks = Vec::new();
    for p in &bs.central_projections {
        let ql = p.view((0, 0), (e, e)).into_owned();
        let qr = p.view((e, e), (e, e)).into_owned();
        // Keep only blocks that actually see Z.
        let hit = z
            .basis()
            .iter()
            .map(|m| hs_norm(&(&ql * m * &qr)))
            .fold(0.0f64, f64::max);
        if hit > tol.cert_tol * 10.0 {
            blocks.push((ql, qr));
        }
    }
    Ok(blocks)
}

fn subsets_descending(n: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (0u64..(1u64 << n))
        .map(|mask| (0..n).filter(|i| mask & (1u64 << i) != 0).collect())
        .collect();
    all.sort_by(|x: &Vec<usize>, y: &Vec<usize>| y.len().cmp(&x.len()).then(x.cmp(y)));
    all
}

fn is_superset(bigger: &[usize], smaller: &[usize]) -> bool {
    smaller.iter().all(|k| bigger.contains(k))
}

/// Injectivity of `b ↦ b·cut` (right) or `b ↦ cut·b` (left) on a subspace.
fn cut_injective(b: &Subspace, cut: &CMat, right: bool, tol: &Tolerance) -> bool {
    if b.dim() == 0 {
        return true;
    }
    let e2 = b.ambient_dim() * b.ambient_dim();
    let mut stack = CMat::zeros(e2, b.dim());
    for (j, x) in b.basis().iter().enumerate() {
        let y = if right { x * cut } else { cut * x };
        let v = vec_row(&y);
        for i in 0..e2 {
            stack[(i, j)] = v[i];
        }
    }
    crate::linalg::null_space(&stack, tol.rank_tol).is_empty()
}

/// Decomposes a certified complete isometry `T : A → M_e` between unital
/// algebras. `codomain_algebra` fixes the `B` used for the type-1 flags;
/// the flags can depend on this choice, and the generated unital algebra of
/// `T(A)` is the default.
pub fn analyze(
    t: &SubspaceMap,
    codomain_algebra: Option<&Subspace>,
    tol: &Tolerance,
    opts: &CertOptions,
    rng: &mut ChaCha8Rng,
) -> Result<AnalysisOutcome> {
    if !t.domain().contains_identity(tol) {
        return Err(OpalgError::DegenerateInput(
            "analyze needs a unital domain algebra".into(),
        ));
    }
    let cert = complete_isometry(t, false, tol, opts, rng)?;
    if !cert.is_certified() {
        return Ok(AnalysisOutcome::NotCompletelyIsometric(cert));
    }

    let e = t.codomain_dim();
    let z = subspace::generate(
        &GeneratorSet {
            ambient_dim: e,
            generators: t.images().to_vec(),
            mode: GeneratorMode::TripleSystem,
        },
        tol,
    )?;
    let blocks = triple_blocks(&z, tol, rng)?;
    let nb = blocks.len();

    // Maximal triple ideal with completely isometric quotient: descending
    // subset search with superset pruning, as in the envelope.
    let mut log: Vec<(Vec<usize>, Certificate)> = Vec::new();
    let mut refuted: Vec<Vec<usize>> = Vec::new();
    let mut inconclusive: Vec<Vec<usize>> = Vec::new();
    let mut found: Option<Vec<usize>> = None;
    for subset in subsets_descending(nb) {
        if subset.is_empty() {
            found = Some(subset);
            break;
        }
        if subset.len() == nb {
            log.push((
                subset.clone(),
                Certificate::refuted(
                    crate::positivity::Witness::Kernel(eye(t.domain().ambient_dim())),
                    1.0,
                    "removing every block kills the map",
                ),
            ));
            refuted.push(subset);
            continue;
        }
        if refuted.iter().any(|rf| is_superset(&subset, rf)) {
            log.push((
                subset.clone(),
                Certificate::refuted(
                    crate::positivity::Witness::Kernel(CMat::zeros(1, 1)),
                    0.0,
                    "superset of a refuted subset",
                ),
            ));
            refuted.push(subset);
            continue;
        }
        let mut ql_cut = eye(e);
        let mut qr_cut = eye(e);
        for &j in &subset {
            ql_cut -= &blocks[j].0;
            qr_cut -= &blocks[j].1;
        }
        let images: Vec<CMat> = t.images().iter().map(|m| &ql_cut * m * &qr_cut).collect();
        let tq = SubspaceMap::from_basis_images(t.domain().clone(), e, images)?;
        let c = complete_isometry(&tq, false, tol, opts, rng)?;
        let verdict = c.verdict;
        log.push((subset.clone(), c));
        match verdict {
            Verdict::Certified => {
                found = Some(subset);
                break;
            }
            Verdict::Refuted => refuted.push(subset),
            Verdict::Inconclusive => inconclusive.push(subset),
        }
    }
    let ideal = found.unwrap_or_default();
    if inconclusive.iter().any(|s| s.len() > ideal.len()) {
        return Err(OpalgError::EnvelopeInconclusive(format!(
            "triple-ideal subsets larger than {:?} were inconclusive",
            ideal
        )));
    }

    // Ideal subspace and its support projections.
    let mut ideal_mats = Vec::new();
    for &j in &ideal {
        let (ql, qr) = &blocks[j];
        for m in z.basis() {
            let cut = ql * m * qr;
            if hs_norm(&cut) > tol.cert_tol {
                ideal_mats.push(cut);
            }
        }
    }
    let p_right = aggregate_support(&ideal_mats, true, e, tol)?;
    let q_left = aggregate_support(&ideal_mats, false, e, tol)?;

    let one_minus_p = eye(e) - &p_right;
    let u = t.apply_identity() * &one_minus_p;
    let theta_images: Vec<CMat> = t
        .images()
        .iter()
        .map(|m| u.adjoint() * m * &one_minus_p)
        .collect();
    let theta = SubspaceMap::from_basis_images(t.domain().clone(), e, theta_images)?;

    // Structural validations.
    let scale = op_norm(&t.apply_identity()).max(1.0);
    let slack = tol.cert_tol * 100.0 * scale;
    if hs_norm(&(&u * u.adjoint() * &u - &u)) > slack {
        return Err(OpalgError::StructureFailure(
            "u = T(1)(1−p) is not a partial isometry".into(),
        ));
    }
    for (a, th) in t.domain().basis().iter().zip(theta.images()) {
        let lhs = u.adjoint() * &u * th;
        if hs_norm(&(lhs - th)) > slack {
            return Err(OpalgError::StructureFailure(
                "u*u θ(a) = θ(a) fails on a basis element".into(),
            ));
        }
        let cut = t.apply(a) * &one_minus_p;
        if hs_norm(&(&u * th - cut)) > slack {
            return Err(OpalgError::StructureFailure(
                "T(a)(1−p) = u θ(a) fails on a basis element".into(),
            ));
        }
    }
    let mult_res = theta.multiplicativity_residual();
    if mult_res > slack * scale {
        return Err(OpalgError::StructureFailure(format!(
            "θ is not multiplicative (residual {mult_res:.3e})"
        )));
    }

    // Identity (*) ledger over all basis pairs.
    let t1c = t.apply_identity().adjoint();
    let mut residuals = Vec::new();
    let mut max_residual: f64 = 0.0;
    for a in t.domain().basis() {
        for bmat in t.domain().basis() {
            let lhs = t.apply(&(a * bmat)) * &one_minus_p;
            let rhs = t.apply(a) * &t1c * t.apply(bmat) * &one_minus_p;
            let r = hs_norm(&(lhs - rhs));
            max_residual = max_residual.max(r);
            residuals.push(r);
        }
    }

    // Type flags.
    let bcod = match codomain_algebra {
        Some(b) => b.clone(),
        None => {
            let mut gens = t.images().to_vec();
            gens.push(eye(e));
            subspace::generate(
                &GeneratorSet {
                    ambient_dim: e,
                    generators: gens,
                    mode: GeneratorMode::Algebra,
                },
                tol,
            )?
        }
    };
    let left_type1 = cut_injective(&bcod, &one_minus_p, true, tol);
    let one_minus_q = eye(e) - &q_left;
    let right_type1 = cut_injective(&bcod, &one_minus_q, false, tol);

    Ok(AnalysisOutcome::Analyzed(Box::new(IsometryAnalysis {
        verdict: cert,
        triple_system: z,
        ideal_blocks: ideal,
        block_supports: blocks,
        p_right,
        q_left,
        u,
        theta,
        shilov: ideal_mats.is_empty(),
        left_type1,
        right_type1,
        star_product: StarProductLedger {
            residuals,
            max_residual,
        },
        certificates: log,
    })))
}

/// Block form of a complete isometry from the upper triangular matrices:
/// unitaries `U`, `V` and a complete contraction `S` with
/// `T(A) = U diag(A, S(A)) V`.
#[derive(Debug, Clone)]
pub struct BlockForm {
    pub u: CMat,
    pub v: CMat,
    /// The corner map `S : T_n → M_{m−n}` (empty when `m = n`).
    pub s: SubspaceMap,
    pub reconstruction_residual: f64,
}

fn e_ij(n: usize, i: usize, j: usize) -> CMat {
    crate::linalg::matrix_unit(n, i, j)
}

/// Completes an `m×k` isometry to an `m×m` unitary.
fn complete_isometry_columns(x: &CMat, tol: &Tolerance) -> Result<CMat> {
    let m = x.nrows();
    let k = x.ncols();
    let null = crate::linalg::null_space(&x.adjoint(), tol.rank_tol);
    if null.len() != m - k {
        return Err(OpalgError::StructureFailure(format!(
            "isometry completion found {} complement columns, expected {}",
            null.len(),
            m - k
        )));
    }
    let mut u = CMat::zeros(m, m);
    for c in 0..k {
        for r in 0..m {
            u[(r, c)] = x[(r, c)];
        }
    }
    for (c, v) in null.iter().enumerate() {
        for r in 0..m {
            u[(r, k + c)] = v[r];
        }
    }
    Ok(u)
}

/// Recovers the `U diag(A, S(A)) V` form of a complete isometry on `T_n`.
///
/// The triple part of the analysis extends from `T_n` to a representation
/// of all of `M_n` through triple products of upper triangular elements
/// (`e_ji = e_jn e_in* e_ii`), whose first multiplicity slot provides the
/// row and column frames completed to `U` and `V`.
pub fn block_form_t_n(
    t: &SubspaceMap,
    tol: &Tolerance,
    opts: &CertOptions,
    rng: &mut ChaCha8Rng,
) -> Result<BlockForm> {
    let outcome = analyze(t, None, tol, opts, rng)?;
    let analysis = match outcome {
        AnalysisOutcome::Analyzed(a) => a,
        AnalysisOutcome::NotCompletelyIsometric(c) => {
            return Err(OpalgError::DegenerateInput(format!(
                "block_form_t_n needs a certified complete isometry ({})",
                c.detail
            )))
        }
    };
    block_form_from_analysis(t, &analysis, tol)
}

/// As [`block_form_t_n`], reusing an existing analysis of the same map.
pub fn block_form_from_analysis(
    t: &SubspaceMap,
    analysis: &IsometryAnalysis,
    tol: &Tolerance,
) -> Result<BlockForm> {
    let n = t.domain().ambient_dim();
    let m = t.codomain_dim();
    let tn = Subspace::upper_triangular(n);
    if t.domain().dim() != tn.dim() || !t.domain().is_subspace_of(&tn, tol) {
        return Err(OpalgError::DegenerateInput(
            "block_form_t_n needs the upper triangular algebra as domain".into(),
        ));
    }

    let one_minus_p = eye(m) - &analysis.p_right;
    let r_of = |a: &CMat| -> CMat { t.apply(a) * &one_minus_p };

    let mut tau = vec![vec![CMat::zeros(m, m); n]; n];
    for i in 0..n {
        for j in 0..n {
            if i <= j {
                tau[i][j] = r_of(&e_ij(n, i, j));
            } else {
                tau[i][j] = r_of(&e_ij(n, i, n - 1))
                    * r_of(&e_ij(n, j, n - 1)).adjoint()
                    * r_of(&e_ij(n, j, j));
            }
        }
    }
    let u0 = r_of(&eye(n));
    let pi = |i: usize, j: usize| -> CMat { u0.adjoint() * &tau[i][j] };
    let pi00 = pi(0, 0);
    let (vals, vecs) = herm_eig(&pi00)?;
    let mut f1: Option<CVec> = None;
    let mut rank = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > 0.5 {
            rank += 1;
            if f1.is_none() {
                f1 = Some(vecs.column(i).into_owned());
            }
        }
    }
    let f1 = f1.ok_or_else(|| {
        OpalgError::StructureFailure("π(e_11) has empty range; the triple part degenerated".into())
    })?;
    // The θ-block must carry M_n: π(1) has rank n·s for multiplicity s ≥ 1.
    let pi_unit_rank: usize = (0..n)
        .map(|i| {
            let (vals, _) = herm_eig(&pi(i, i)).unwrap_or((vec![], CMat::zeros(0, 0)));
            vals.iter().filter(|&&v| v > 0.5).count()
        })
        .sum();
    if rank == 0 || pi_unit_rank != rank * n {
        return Err(OpalgError::StructureFailure(format!(
            "triple part is not an n-dimensional matrix block \
             (π(1) rank {pi_unit_rank}, e_11 rank {rank})"
        )));
    }

    let mut x = CMat::zeros(m, n);
    let mut y = CMat::zeros(m, n);
    for i in 0..n {
        let yi = pi(i, 0) * &f1;
        let xi = &u0 * &yi;
        for r in 0..m {
            x[(r, i)] = xi[r];
            y[(r, i)] = yi[r];
        }
    }
    let ortho_res = hs_norm(&(x.adjoint() * &x - eye(n))) + hs_norm(&(y.adjoint() * &y - eye(n)));
    if ortho_res > tol.cert_tol * 1000.0 {
        return Err(OpalgError::StructureFailure(format!(
            "recovered frames are not isometric (residual {ortho_res:.3e})"
        )));
    }

    let u = complete_isometry_columns(&x, tol)?;
    let v_tilde = complete_isometry_columns(&y, tol)?;
    let v = v_tilde.adjoint();

    // S(a) = X⊥* T(a) Y⊥.
    let xs = u.view((0, n), (m, m - n)).into_owned();
    let ys = v_tilde.view((0, n), (m, m - n)).into_owned();
    let s_images: Vec<CMat> = t
        .domain()
        .basis()
        .iter()
        .map(|a| xs.adjoint() * t.apply(a) * &ys)
        .collect();
    let s = SubspaceMap::from_basis_images(t.domain().clone(), m - n, s_images)?;

    // Verify the reconstruction on the basis.
    let mut worst: f64 = 0.0;
    for a in t.domain().basis() {
        let mut middle = CMat::zeros(m, m);
        middle
            .view_mut((0, 0), (n, n))
            .copy_from(&t.domain().project(a));
        if m > n {
            middle
                .view_mut((n, n), (m - n, m - n))
                .copy_from(&s.apply(a));
        }
        let recon = &u * middle * &v;
        worst = worst.max(hs_norm(&(recon - t.apply(a))));
    }
    if worst > tol.cert_tol * 1000.0 {
        return Err(OpalgError::StructureFailure(format!(
            "block form does not reproduce the map (residual {worst:.3e})"
        )));
    }
    Ok(BlockForm {
        u,
        v,
        s,
        reconstruction_residual: worst,
    })
}

/// Residual report for the type-1 consequences.
#[derive(Debug, Clone, Default)]
pub struct Type1Report {
    /// Max commutator residual of `T(1)` with `T(A)`.
    pub commutation_residual: Option<f64>,
    /// `T(1)T(ab) = T(a)T(b)` residual, evaluated when `T(1)` commutes.
    pub product_identity_residual: Option<f64>,
    /// `T = u θ` with `θ = u* T(·)`: max residual of `u u* T(a) = T(a)`.
    pub u_theta_residual: Option<f64>,
    /// `u u* = 1` residual, evaluated when `1 ∈ ran T`.
    pub coisometry_residual: Option<f64>,
    /// Best frame-bound constant `K` over the vector grid.
    pub bound_constant: Option<f64>,
    /// Whether `T(1)` is invertible (smallest singular value above tol).
    pub t1_invertible: Option<bool>,
}

/// Evaluates the identities that hold for left type-1 complete isometries.
/// Empty when the analysis did not flag left type 1.
pub fn type1_consequences(
    t: &SubspaceMap,
    analysis: &IsometryAnalysis,
    tol: &Tolerance,
    rng: &mut ChaCha8Rng,
) -> Result<Type1Report> {
    let mut report = Type1Report::default();
    if !analysis.left_type1 {
        return Ok(report);
    }
    let t1 = t.apply_identity();
    let e = t.codomain_dim();

    // (a) T(1)T(ab) = T(a)T(b) when T(1) commutes with the range.
    let mut comm: f64 = 0.0;
    for img in t.images() {
        comm = comm.max(hs_norm(&(&t1 * img - img * &t1)));
    }
    report.commutation_residual = Some(comm);
    if comm <= tol.cert_tol * 100.0 {
        let mut worst: f64 = 0.0;
        for a in t.domain().basis() {
            for b in t.domain().basis() {
                let lhs = &t1 * t.apply(&(a * b));
                let rhs = t.apply(a) * t.apply(b);
                worst = worst.max(hs_norm(&(lhs - rhs)));
            }
        }
        report.product_identity_residual = Some(worst);
    }

    // (b) T = u θ with θ = u* T(·).
    let u = &analysis.u;
    let mut worst: f64 = 0.0;
    for img in t.images() {
        worst = worst.max(hs_norm(&(u * u.adjoint() * img - img)));
    }
    report.u_theta_residual = Some(worst);

    // (c) coisometry when 1 ∈ ran T.
    let e2 = e * e;
    let mut stack = CMat::zeros(e2, t.images().len());
    for (j, img) in t.images().iter().enumerate() {
        let v = vec_row(img);
        for i in 0..e2 {
            stack[(i, j)] = v[i];
        }
    }
    let coeff = lstsq(&stack, &vec_row(&eye(e)), tol.rank_tol);
    let mut recon = CMat::zeros(e, e);
    for (j, img) in t.images().iter().enumerate() {
        recon += img.map(|z| z * coeff[j]);
    }
    if hs_norm(&(recon - eye(e))) <= tol.cert_tol * 100.0 * (e as f64) {
        report.coisometry_residual = Some(hs_norm(&(u * u.adjoint() - eye(e))));
    }

    // (d) frame bound over a vector grid, and invertibility of T(1).
    let mut k_bound: f64 = 0.0;
    let grid: Vec<CVec> = (0..e)
        .map(|i| {
            CVec::from_fn(e, |r, _| {
                if r == i {
                    crate::linalg::cre(1.0)
                } else {
                    num_complex::Complex64::ZERO
                }
            })
        })
        .chain((0..4).map(|_| {
            let g = crate::linalg::random_gaussian(rng, e, 1);
            let col = g.column(0).into_owned();
            let nrm = col.norm();
            col.map(|z| z / nrm)
        }))
        .collect();
    let samples: Vec<CMat> = (0..16)
        .map(|_| {
            let s = t.domain().random_element(rng);
            let nrm = op_norm(&s).max(1e-300);
            s.map(|z| z / nrm)
        })
        .collect();
    for zeta in &grid {
        let mut best: f64 = 0.0;
        for s in &samples {
            best = best.max((t.apply(s) * zeta).norm());
        }
        if best > 1e-300 {
            k_bound = k_bound.max(zeta.norm() / best);
        }
    }
    report.bound_constant = Some(k_bound);
    let (_, sv, _) = crate::linalg::svd(&t1);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    report.t1_invertible = Some(smin > tol.cert_tol);
    Ok(report)
}

/// Decomposition `T = u θ` of a surjective complete isometry onto `B`:
/// `u = T(1)` is a unitary in `Δ(B)` and `θ = u* T(·)` is a multiplicative
/// complete isometry.
pub fn surjective_decompose(
    t: &SubspaceMap,
    b: &Subspace,
    tol: &Tolerance,
) -> Result<(CMat, SubspaceMap)> {
    let range = t.range(tol)?;
    if range.dim() != b.dim() || !range.is_subspace_of(b, tol) {
        return Err(OpalgError::RangeNotOnto(format!(
            "range dimension {} vs codomain algebra dimension {}",
            range.dim(),
            b.dim()
        )));
    }
    let e = t.codomain_dim();
    let u = t.apply_identity();
    let scale = op_norm(&u).max(1.0);
    if hs_norm(&(u.adjoint() * &u - eye(e))) > tol.cert_tol * 100.0 * scale {
        return Err(OpalgError::StructureFailure(
            "T(1) is not unitary; the map cannot be a surjective complete isometry".into(),
        ));
    }
    // u must lie in the diagonal Δ(B).
    let loose = Tolerance {
        cert_tol: tol.cert_tol * 100.0,
        ..*tol
    };
    if !b.contains(&u, &loose) || !b.contains(&u.adjoint(), &loose) {
        return Err(OpalgError::StructureFailure(
            "T(1) does not lie in the diagonal of B".into(),
        ));
    }
    let theta_images: Vec<CMat> = t.images().iter().map(|m| u.adjoint() * m).collect();
    let theta = SubspaceMap::from_basis_images(t.domain().clone(), e, theta_images)?;
    let mult = theta.multiplicativity_residual();
    if mult > tol.cert_tol * 1000.0 * scale * scale {
        return Err(OpalgError::StructureFailure(format!(
            "θ = T(1)* T(·) is not multiplicative (residual {mult:.3e})"
        )));
    }
    Ok((u, theta))
}
