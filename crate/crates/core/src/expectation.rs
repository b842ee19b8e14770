//! Trace-preserving conditional expectations on `M = ⊕_k M_{n_k}`.
//!
//! Given a faithful tracial state `τ` and a unital subalgebra `A ⊆ M`, the
//! expectation `Φ` onto the diagonal `Δ(A) = A ∩ A*` is the orthogonal
//! projection with respect to the `τ`-weighted inner product
//! `⟨x, y⟩ = τ(y* x)`, computed through a Gram solve on a `Δ(A)` basis
//! (the bases from `diag_part` are HS-orthonormal but not τ-orthonormal
//! when the block weights differ, so the Gram condition number is
//! reported). Uniqueness makes any construction passing the preconditions
//! canonical, which the pairwise checks exploit.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::error::OpalgError;
use crate::linalg::{
    cholesky, eye, hs_norm, min_eig_herm, svd, CMat, Tolerance,
};
use crate::map::SubspaceMap;
use crate::positivity::{cp_extendable, unital_system_extension, CertOptions, Certificate};
use crate::structure::{commutant, BlockStructure};
use crate::subspace::{self, GeneratorMode, GeneratorSet, Subspace};
use crate::Result;

/// A faithful tracial state on `M = ⊕_k M_{n_k}`, as positive block
/// weights with `τ(x) = Σ_k w_k tr(p_k x)` and `τ(1) = 1`.
#[derive(Debug, Clone)]
pub struct TraceState {
    pub block_weights: Vec<f64>,
}

impl TraceState {
    /// The normalized trace `tr(·)/d`.
    pub fn normalized(bs: &BlockStructure) -> Self {
        let d: usize = bs
            .block_dims
            .iter()
            .zip(&bs.multiplicities)
            .map(|(n, m)| n * m)
            .sum();
        TraceState {
            block_weights: vec![1.0 / d as f64; bs.num_blocks()],
        }
    }

    /// Weights from per-block masses (positive, summing to 1): the mass of
    /// block `k` is spread uniformly over its rank.
    pub fn from_block_masses(bs: &BlockStructure, masses: &[f64]) -> Result<Self> {
        if masses.len() != bs.num_blocks() {
            return Err(OpalgError::DegenerateInput(
                "one mass per block is required".into(),
            ));
        }
        if masses.iter().any(|&m| m <= 0.0) {
            return Err(OpalgError::DegenerateInput(
                "trace masses must be strictly positive (faithfulness)".into(),
            ));
        }
        let total: f64 = masses.iter().sum();
        let weights = masses
            .iter()
            .zip(bs.block_dims.iter().zip(&bs.multiplicities))
            .map(|(&mass, (n, m))| mass / total / (n * m) as f64)
            .collect();
        Ok(TraceState {
            block_weights: weights,
        })
    }

    pub fn apply(&self, bs: &BlockStructure, x: &CMat) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (w, p) in self.block_weights.iter().zip(&bs.central_projections) {
            acc += crate::linalg::trace(&(p * x)) * crate::linalg::cre(*w);
        }
        acc
    }

    /// Verifies faithfulness, normalization, and the trace property on
    /// random pairs.
    pub fn verify(
        &self,
        m: &Subspace,
        bs: &BlockStructure,
        tol: &Tolerance,
        rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        if self.block_weights.iter().any(|&w| w <= 0.0) {
            return Err(OpalgError::DegenerateInput(
                "trace weights must be strictly positive".into(),
            ));
        }
        let unit = self.apply(bs, &eye(m.ambient_dim()));
        if (unit - crate::linalg::cre(1.0)).norm() > tol.cert_tol * 100.0 {
            return Err(OpalgError::DegenerateInput(format!(
                "trace state is not normalized: tau(1) = {unit}"
            )));
        }
        for _ in 0..8 {
            let x = m.random_element(rng);
            let y = m.random_element(rng);
            let lhs = self.apply(bs, &(&x * &y));
            let rhs = self.apply(bs, &(&y * &x));
            if (lhs - rhs).norm() > tol.cert_tol * 100.0 * hs_norm(&x) * hs_norm(&y) {
                return Err(OpalgError::DegenerateInput(
                    "functional is not tracial on M".into(),
                ));
            }
        }
        Ok(())
    }
}

/// The τ-preserving conditional expectation of `M` onto `Δ(A)`, with its
/// verification residuals.
#[derive(Debug, Clone)]
pub struct ExpectationResult {
    /// `Φ : M → M` with range `Δ(A)`, held on the basis of `M`.
    pub phi: SubspaceMap,
    pub delta: Subspace,
    pub multiplicative_on_a: Certificate,
    pub bimodule_residual: f64,
    pub trace_preservation_residual: f64,
    pub idempotent_residual: f64,
    pub unital_residual: f64,
    /// Condition number of the τ-Gram matrix of the `Δ(A)` basis.
    pub gram_condition: f64,
}

/// Builds the τ-orthogonal projection of `M` onto a selfadjoint unital
/// subalgebra `delta` (Gram solve on the basis of `delta`).
pub fn tau_projection(
    m: &Subspace,
    bs: &BlockStructure,
    tau: &TraceState,
    delta: &Subspace,
    tol: &Tolerance,
) -> Result<(SubspaceMap, f64)> {
    let k = delta.dim();
    if k == 0 {
        return Err(OpalgError::DegenerateInput(
            "projection target is zero-dimensional".into(),
        ));
    }
    let mut gram = CMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            // ⟨d_i, d_j⟩_τ = τ(d_j* d_i).
            gram[(i, j)] = tau.apply(bs, &(delta.basis()[j].adjoint() * &delta.basis()[i]));
        }
    }
    let (_, sv, _) = svd(&gram);
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let gram_inv = gram.clone().try_inverse().ok_or_else(|| {
        OpalgError::DegenerateInput("τ-Gram matrix is singular; trace not faithful?".into())
    })?;
    let d = m.ambient_dim();
    let images: Vec<CMat> = m
        .basis()
        .iter()
        .map(|x| {
            let t = crate::linalg::CVec::from_fn(k, |i, _| {
                tau.apply(bs, &(delta.basis()[i].adjoint() * x))
            });
            let c = &gram_inv * t;
            let mut out = CMat::zeros(d, d);
            for (i, b) in delta.basis().iter().enumerate() {
                out += b.map(|z| z * c[i]);
            }
            out
        })
        .collect();
    let phi = SubspaceMap::from_basis_images(m.clone(), d, images)?;
    let _ = tol;
    Ok((phi, cond))
}

/// The τ-preserving conditional expectation of `M` onto `Δ(A)`.
pub fn cond_exp(
    m: &Subspace,
    bs: &BlockStructure,
    tau: &TraceState,
    a: &Subspace,
    tol: &Tolerance,
    rng: &mut ChaCha8Rng,
) -> Result<ExpectationResult> {
    if !a.is_subspace_of(m, tol) || !a.contains_identity(tol) {
        return Err(OpalgError::DegenerateInput(
            "cond_exp needs a unital subalgebra A of M".into(),
        ));
    }
    tau.verify(m, bs, tol, rng)?;
    let delta = subspace::diag_part(a, tol)?;
    let (phi, gram_condition) = tau_projection(m, bs, tau, &delta, tol)?;
    let d = m.ambient_dim();

    // Verification of the expectation properties.
    let unital_residual = hs_norm(&(phi.apply(&eye(d)) - eye(d)));
    let mut idem: f64 = 0.0;
    let mut trace_res: f64 = 0.0;
    let mut ortho: f64 = 0.0;
    for x in m.basis() {
        let px = phi.apply(x);
        idem = idem.max(hs_norm(&(phi.apply(&px) - &px)));
        let diff = tau.apply(bs, &px) - tau.apply(bs, x);
        trace_res = trace_res.max(diff.norm());
        // τ-orthogonality of the residual against Δ(A).
        let resid = x - &px;
        for dd in delta.basis() {
            ortho = ortho.max(tau.apply(bs, &(dd.adjoint() * &resid)).norm());
        }
    }
    let slack = tol.cert_tol * 100.0 * (d as f64);
    if unital_residual > slack || idem > slack || trace_res > slack || ortho > slack {
        return Err(OpalgError::StructureFailure(format!(
            "conditional expectation failed verification: unital {unital_residual:.2e}, \
             idempotent {idem:.2e}, trace {trace_res:.2e}, orthogonality {ortho:.2e}"
        )));
    }

    // Bimodule property over Δ-basis × M-basis × Δ-basis.
    let mut bimodule: f64 = 0.0;
    for d1 in delta.basis() {
        for x in m.basis() {
            for d2 in delta.basis() {
                let lhs = phi.apply(&(d1 * x * d2));
                let rhs = d1 * phi.apply(x) * d2;
                bimodule = bimodule.max(hs_norm(&(lhs - rhs)));
            }
        }
    }
    if bimodule > slack {
        return Err(OpalgError::StructureFailure(format!(
            "bimodule residual {bimodule:.2e} too large"
        )));
    }

    // Multiplicativity on A.
    let mut mult: f64 = 0.0;
    for x in a.basis() {
        for y in a.basis() {
            let lhs = phi.apply(&(x * y));
            let rhs = phi.apply(x) * phi.apply(y);
            mult = mult.max(hs_norm(&(lhs - rhs)));
        }
    }
    let multiplicative_on_a = if mult <= tol.cert_tol * 100.0 {
        Certificate::certified(None, mult, 0, "Φ is multiplicative on A")
    } else {
        Certificate::refuted(
            crate::positivity::Witness::Kernel(CMat::zeros(1, 1)),
            mult,
            "Φ is not multiplicative on A",
        )
    };

    Ok(ExpectationResult {
        phi,
        delta,
        multiplicative_on_a,
        bimodule_residual: bimodule,
        trace_preservation_residual: trace_res,
        idempotent_residual: idem,
        unital_residual,
        gram_condition,
    })
}

/// Per-candidate precondition residuals for the uniqueness check.
#[derive(Debug, Clone)]
pub struct PreconditionLedger {
    pub unital: f64,
    pub range_in_delta: f64,
    pub bimodule: f64,
    pub trace_preserving: f64,
    pub passes: bool,
}

fn check_preconditions(
    phi: &SubspaceMap,
    m: &Subspace,
    bs: &BlockStructure,
    tau: &TraceState,
    delta: &Subspace,
    tol: &Tolerance,
) -> PreconditionLedger {
    let d = m.ambient_dim();
    let unital = hs_norm(&(phi.apply(&eye(d)) - eye(d)));
    let mut range: f64 = 0.0;
    let mut trace_res: f64 = 0.0;
    for x in m.basis() {
        let px = phi.apply(x);
        range = range.max(delta.distance(&px));
        trace_res = trace_res.max((tau.apply(bs, &px) - tau.apply(bs, x)).norm());
    }
    let mut bimodule: f64 = 0.0;
    for d1 in delta.basis() {
        for x in m.basis() {
            for d2 in delta.basis() {
                let lhs = phi.apply(&(d1 * x * d2));
                let rhs = d1 * phi.apply(x) * d2;
                bimodule = bimodule.max(hs_norm(&(lhs - rhs)));
            }
        }
    }
    let slack = tol.cert_tol * 100.0 * (d as f64);
    PreconditionLedger {
        unital,
        range_in_delta: range,
        bimodule,
        trace_preserving: trace_res,
        passes: unital <= slack && range <= slack && bimodule <= slack && trace_res <= slack,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniquenessVerdict {
    Equal,
    PreconditionFailed,
    Distinct,
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub first: PreconditionLedger,
    pub second: PreconditionLedger,
    /// `max_x τ(|Φ(x) − Ψ(x)|²)` over the basis of `M`.
    pub max_tau_square: f64,
    pub verdict: UniquenessVerdict,
}

/// Uniqueness of the τ-preserving conditional expectation: two candidates
/// passing the preconditions must agree.
pub fn uniqueness_check(
    phi: &SubspaceMap,
    psi: &SubspaceMap,
    m: &Subspace,
    bs: &BlockStructure,
    tau: &TraceState,
    delta: &Subspace,
    tol: &Tolerance,
) -> Result<UniquenessReport> {
    let first = check_preconditions(phi, m, bs, tau, delta, tol);
    let second = check_preconditions(psi, m, bs, tau, delta, tol);
    if !first.passes || !second.passes {
        return Ok(UniquenessReport {
            first,
            second,
            max_tau_square: f64::NAN,
            verdict: UniquenessVerdict::PreconditionFailed,
        });
    }
    let mut worst: f64 = 0.0;
    for x in m.basis() {
        let diff = phi.apply(x) - psi.apply(x);
        let val = tau.apply(bs, &(diff.adjoint() * &diff));
        worst = worst.max(val.re.abs().max(val.im.abs()));
    }
    let verdict = if worst <= tol.cert_tol * tol.cert_tol * 1e6 {
        UniquenessVerdict::Equal
    } else {
        UniquenessVerdict::Distinct
    };
    Ok(UniquenessReport {
        first,
        second,
        max_tau_square: worst,
        verdict,
    })
}

/// Tracial/subdiagonal classification of `A` inside `(M, τ)`.
#[derive(Debug, Clone)]
pub struct TracialReport {
    pub expectation: ExpectationResult,
    /// `Φ|_A` multiplicative and τ-preserving on `A`.
    pub tracial: bool,
    /// Tracial and `A + A*` spans `M` (weak* density is spanning here).
    pub subdiagonal: bool,
    /// When subdiagonal: the generated C*-algebra of `A` equals `M` with
    /// empty Shilov ideal.
    pub envelope_matches: Option<bool>,
    /// When subdiagonal: random strictly positive elements of `M` factor
    /// as `a* a` with `a, a⁻¹ ∈ A` (attempted constructively; `None` when
    /// no construction applies).
    pub factorization_ok: Option<bool>,
}

/// Cholesky attempt in standard or block coordinates, verified by
/// membership; never reports a false refutation.
fn attempt_factorize_in(
    a: &Subspace,
    bs: &BlockStructure,
    b: &CMat,
    tol: &Tolerance,
) -> Option<CMat> {
    let loose = Tolerance {
        cert_tol: tol.cert_tol * 10.0,
        ..*tol
    };
    if let Ok(r) = cholesky(b, tol) {
        if let Some(rinv) = r.clone().try_inverse() {
            if a.contains(&r, &loose) && a.contains(&rinv, &loose) {
                return Some(r);
            }
        }
    }
    let w = &bs.basis_unitary;
    if let Ok(r) = cholesky(&(w.adjoint() * b * w), tol) {
        let cand = w * r * w.adjoint();
        if let Some(cinv) = cand.clone().try_inverse() {
            if a.contains(&cand, &loose) && a.contains(&cinv, &loose) {
                return Some(cand);
            }
        }
    }
    None
}

pub fn classify_tracial(
    m: &Subspace,
    bs: &BlockStructure,
    tau: &TraceState,
    a: &Subspace,
    tol: &Tolerance,
    rng: &mut ChaCha8Rng,
) -> Result<TracialReport> {
    let expectation = cond_exp(m, bs, tau, a, tol, rng)?;
    let mut tau_on_a: f64 = 0.0;
    for x in a.basis() {
        let diff = tau.apply(bs, &expectation.phi.apply(x)) - tau.apply(bs, x);
        tau_on_a = tau_on_a.max(diff.norm());
    }
    let tracial = expectation.multiplicative_on_a.is_certified() && tau_on_a <= tol.cert_tol * 100.0;

    let mut mats: Vec<CMat> = a.basis().to_vec();
    mats.extend(a.basis().iter().map(|x| x.adjoint()));
    let span = subspace::span_of(&mats, tol)?;
    let subdiagonal = tracial && span.dim() == m.dim();

    let (envelope_matches, factorization_ok) = if subdiagonal {
        let env = crate::envelope::cstar_envelope(
            a,
            tol,
            &crate::envelope::EnvelopeOptions::default(),
            rng,
        )?;
        let b_eq_m = env.generated_algebra.dim() == m.dim()
            && env.generated_algebra.is_subspace_of(m, tol)
            && env.shilov_blocks.is_empty();

        let mut fact = Some(true);
        for _ in 0..10 {
            let h = m.random_hermitian_element(rng, tol)?;
            let (lam, _) = min_eig_herm(&h)?;
            let spd = &h - eye(m.ambient_dim()).scale(lam.min(0.0) - 0.2);
            match attempt_factorize_in(a, bs, &spd, tol) {
                Some(r) => {
                    if hs_norm(&(r.adjoint() * &r - &spd)) > tol.cert_tol * hs_norm(&spd) {
                        fact = Some(false);
                        break;
                    }
                }
                None => {
                    fact = None;
                    break;
                }
            }
        }
        (Some(b_eq_m), fact)
    } else {
        (None, None)
    };

    Ok(TracialReport {
        expectation,
        tracial,
        subdiagonal,
        envelope_matches,
        factorization_ok,
    })
}

/// Report of the completely contractive projection test.
#[derive(Debug, Clone)]
pub struct CcpReport {
    pub unital_residual: f64,
    pub idempotent_residual: f64,
    pub range_matches: bool,
    pub complete_contraction: Certificate,
    /// Bimodule certificate, evaluated once the preconditions hold; a
    /// refutation here would contradict the structure theory and is
    /// flagged as a counterexample alarm in the detail.
    pub bimodule: Option<Certificate>,
}

/// Checks that a completely contractive unital projection of `A` onto a
/// unital subalgebra `B` is a conditional expectation.
pub fn ccp_projection_is_expectation(
    p: &SubspaceMap,
    b_range: &Subspace,
    tol: &Tolerance,
    opts: &CertOptions,
    rng: &mut ChaCha8Rng,
) -> Result<CcpReport> {
    let a = p.domain();
    let d = a.ambient_dim();
    let unital_residual = hs_norm(&(p.apply(&eye(d)) - eye(d)));
    let mut idem: f64 = 0.0;
    let mut range_ok = true;
    for x in a.basis() {
        let px = p.apply(x);
        idem = idem.max(hs_norm(&(p.apply(&px) - &px)));
        if !b_range.contains(&px, &Tolerance {
            cert_tol: tol.cert_tol * 100.0,
            ..*tol
        }) {
            range_ok = false;
        }
    }

    // Complete contraction: the unital system extension must be CP.
    let cc = match unital_system_extension(p, tol)? {
        Ok(ext) => cp_extendable(&ext, tol, opts, rng)?,
        Err(w) => Certificate::refuted(w, 0.0, "no *-linear extension: not a complete contraction"),
    };

    let slack = tol.cert_tol * 100.0 * (d as f64);
    let preconditions_ok =
        unital_residual <= slack && idem <= slack && range_ok && cc.is_certified();
    let bimodule = if preconditions_ok {
        let mut worst: f64 = 0.0;
        for b1 in b_range.basis() {
            for x in a.basis() {
                for b2 in b_range.basis() {
                    let lhs = p.apply(&(b1 * x * b2));
                    let rhs = b1 * p.apply(x) * b2;
                    worst = worst.max(hs_norm(&(lhs - rhs)));
                }
            }
        }
        Some(if worst <= slack {
            Certificate::certified(None, worst, 0, "bimodule identity holds")
        } else {
            Certificate::refuted(
                crate::positivity::Witness::Kernel(CMat::zeros(1, 1)),
                worst,
                "counterexample alarm: certified CC projection violates the bimodule \
                 identity, contradicting the conditional-expectation theorem",
            )
        })
    } else {
        None
    };
    Ok(CcpReport {
        unital_residual,
        idempotent_residual: idem,
        range_matches: range_ok,
        complete_contraction: cc,
        bimodule,
    })
}

/// Hypothesis ledger and verdict of the spanning-density check
/// (finite-dimensional shadow of the L¹-density statement).
#[derive(Debug, Clone)]
pub struct L1Report {
    /// `Δ(A)` sits in the center of `M`.
    pub delta_central: bool,
    /// `Φ|_A` multiplicative and τ-preserving (the tracial precondition).
    pub tracial: bool,
    /// `span(A + A*) = M`.
    pub span_equals_m: bool,
}

pub fn l1_density_check(
    m: &Subspace,
    bs: &BlockStructure,
    tau: &TraceState,
    a: &Subspace,
    tol: &Tolerance,
    rng: &mut ChaCha8Rng,
) -> Result<L1Report> {
    let report = classify_tracial(m, bs, tau, a, tol, rng)?;
    let center = subspace::intersect(m, &commutant(m, tol)?, tol)?;
    let delta_central = report.expectation.delta.is_subspace_of(&center, tol);
    let mut mats: Vec<CMat> = a.basis().to_vec();
    mats.extend(a.basis().iter().map(|x| x.adjoint()));
    let span = subspace::span_of(&mats, tol)?;
    Ok(L1Report {
        delta_central,
        tracial: report.tracial,
        span_equals_m: span.dim() == m.dim(),
    })
}

/// One row of the density scan over random tracial subalgebras.
#[derive(Debug, Clone)]
pub struct DensityScanRow {
    pub algebra_dim: usize,
    pub tracial: bool,
    pub dense: bool,
}

/// Samples random unital subalgebras of `M` and tabulates whether the
/// tracial precondition holds and whether `A + A*` spans `M` — an
/// exploration aid for the open question of when density is automatic; no
/// resolution is claimed.
pub fn density_scan(
    m: &Subspace,
    bs: &BlockStructure,
    tau: &TraceState,
    samples: usize,
    tol: &Tolerance,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DensityScanRow>> {
    let mut rows = Vec::with_capacity(samples);
    for _ in 0..samples {
        let g = m.random_element(rng);
        let a = subspace::generate(
            &GeneratorSet {
                ambient_dim: m.ambient_dim(),
                generators: vec![g],
                mode: GeneratorMode::Algebra,
            },
            tol,
        )?;
        if !a.is_subspace_of(m, tol) {
            continue;
        }
        let tracial = match classify_tracial(m, bs, tau, &a, tol, rng) {
            Ok(rep) => rep.tracial,
            Err(_) => false,
        };
        let mut mats: Vec<CMat> = a.basis().to_vec();
        mats.extend(a.basis().iter().map(|x| x.adjoint()));
        let span = subspace::span_of(&mats, tol)?;
        rows.push(DensityScanRow {
            algebra_dim: a.dim(),
            tracial,
            dense: span.dim() == m.dim(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cre, matrix_unit};
    use crate::structure::wedderburn;
    use rand::SeedableRng;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn full_setup(n: usize, seed: u64) -> (Subspace, BlockStructure, TraceState) {
        let m = Subspace::full(n);
        let bs = wedderburn(&m, &tol(), &mut rng(seed)).unwrap();
        let tau = TraceState::normalized(&bs);
        (m, bs, tau)
    }

    #[test]
    fn cond_exp_t2_is_diagonal_compression() {
        let (m, bs, tau) = full_setup(2, 1);
        let a = Subspace::upper_triangular(2);
        let res = cond_exp(&m, &bs, &tau, &a, &tol(), &mut rng(2)).unwrap();
        // Oracle: Φ(xy)_ii = x_ii y_ii for upper triangular x, y.
        let x = crate::linalg::from_rows(&[
            vec![(1.0, 0.5), (2.0, -1.0)],
            vec![(0.5, 0.0), (3.0, 0.0)],
        ]);
        let px = res.phi.apply(&x);
        let expect = CMat::from_fn(2, 2, |i, j| if i == j { x[(i, i)] } else { Complex64::ZERO });
        assert!(hs_norm(&(px - expect)) < 1e-9);
        assert!(res.multiplicative_on_a.is_certified());
        assert!(res.bimodule_residual < 1e-8);
        assert!(res.trace_preservation_residual < 1e-8);
    }

    #[test]
    fn cond_exp_on_selfadjoint_is_identity() {
        let (m, bs, tau) = full_setup(2, 3);
        let res = cond_exp(&m, &bs, &tau, &m, &tol(), &mut rng(4)).unwrap();
        for x in m.basis() {
            assert!(hs_norm(&(res.phi.apply(x) - x)) < 1e-9);
        }
    }

    #[test]
    fn cond_exp_on_scalars_is_tau() {
        let (m, bs, tau) = full_setup(2, 5);
        let scalars = subspace::span_of(&[eye(2)], &tol()).unwrap();
        let res = cond_exp(&m, &bs, &tau, &scalars, &tol(), &mut rng(6)).unwrap();
        let x = crate::linalg::from_rows(&[
            vec![(1.0, 0.0), (2.0, 1.0)],
            vec![(0.0, 0.0), (5.0, 0.0)],
        ]);
        let expect = eye(2).map(|z| z * tau.apply(&bs, &x));
        assert!(hs_norm(&(res.phi.apply(&x) - expect)) < 1e-9);
    }

    #[test]
    fn cond_exp_positivity_sampled() {
        let (m, bs, tau) = full_setup(3, 7);
        let a = Subspace::upper_triangular(3);
        let res = cond_exp(&m, &bs, &tau, &a, &tol(), &mut rng(8)).unwrap();
        let mut r = rng(9);
        for _ in 0..10 {
            let g = m.random_element(&mut r);
            let img = res.phi.apply(&(g.adjoint() * &g));
            let (lam, _) = min_eig_herm(&(&img + img.adjoint()).scale(0.5)).unwrap();
            assert!(lam > -1e-8, "Φ(x*x) must be PSD, got λ_min = {lam}");
        }
    }

    #[test]
    fn uniqueness_of_expectation() {
        let (m, bs, tau) = full_setup(2, 10);
        let a = Subspace::upper_triangular(2);
        let res = cond_exp(&m, &bs, &tau, &a, &tol(), &mut rng(11)).unwrap();
        // Same map: equal.
        let rep = uniqueness_check(
            &res.phi, &res.phi, &m, &bs, &tau, &res.delta, &tol(),
        )
        .unwrap();
        assert_eq!(rep.verdict, UniquenessVerdict::Equal);

        // Independently constructed: Schur averaging onto the diagonal.
        let images: Vec<CMat> = m
            .basis()
            .iter()
            .map(|x| {
                CMat::from_fn(2, 2, |i, j| if i == j { x[(i, i)] } else { Complex64::ZERO })
            })
            .collect();
        let schur = SubspaceMap::from_basis_images(m.clone(), 2, images).unwrap();
        let rep2 =
            uniqueness_check(&res.phi, &schur, &m, &bs, &tau, &res.delta, &tol()).unwrap();
        assert_eq!(rep2.verdict, UniquenessVerdict::Equal);

        // Perturbed candidate: fails a named precondition.
        let images: Vec<CMat> = m
            .basis()
            .iter()
            .map(|x| {
                let mut px = res.phi.apply(x);
                px[(0, 1)] += c(0.05, 0.0) * x[(0, 1)];
                px
            })
            .collect();
        let bad = SubspaceMap::from_basis_images(m.clone(), 2, images).unwrap();
        let rep3 = uniqueness_check(&res.phi, &bad, &m, &bs, &tau, &res.delta, &tol()).unwrap();
        assert_eq!(rep3.verdict, UniquenessVerdict::PreconditionFailed);
        assert!(rep3.second.range_in_delta > 1e-6);
    }

    #[test]
    fn classify_tracial_t2_subdiagonal() {
        let (m, bs, tau) = full_setup(2, 12);
        let a = Subspace::upper_triangular(2);
        let rep = classify_tracial(&m, &bs, &tau, &a, &tol(), &mut rng(13)).unwrap();
        assert!(rep.tracial);
        assert!(rep.subdiagonal);
        assert_eq!(rep.envelope_matches, Some(true));
        assert_eq!(rep.factorization_ok, Some(true));
    }

    #[test]
    fn classify_tracial_diagonals_not_subdiagonal() {
        let (m, bs, tau) = full_setup(2, 14);
        let a = Subspace::diagonal(2);
        let rep = classify_tracial(&m, &bs, &tau, &a, &tol(), &mut rng(15)).unwrap();
        assert!(rep.tracial);
        assert!(!rep.subdiagonal);
    }

    #[test]
    fn classify_tracial_block_sum() {
        // M = M_2 ⊕ M_2 with equal masses, A = T_2 ⊕ T_2: subdiagonal by
        // blockwise reduction.
        let mut basis = Vec::new();
        for b in Subspace::full(2).basis() {
            basis.push(crate::linalg::direct_sum(&[b.clone(), CMat::zeros(2, 2)]));
        }
        for b in Subspace::full(2).basis() {
            basis.push(crate::linalg::direct_sum(&[CMat::zeros(2, 2), b.clone()]));
        }
        let m = subspace::span_of(&basis, &tol()).unwrap();
        let bs = wedderburn(&m, &tol(), &mut rng(16)).unwrap();
        let tau = TraceState::from_block_masses(&bs, &[0.5, 0.5]).unwrap();
        let mut a_basis = Vec::new();
        for b in Subspace::upper_triangular(2).basis() {
            a_basis.push(crate::linalg::direct_sum(&[b.clone(), CMat::zeros(2, 2)]));
            a_basis.push(crate::linalg::direct_sum(&[CMat::zeros(2, 2), b.clone()]));
        }
        let a = subspace::span_of(&a_basis, &tol()).unwrap();
        let rep = classify_tracial(&m, &bs, &tau, &a, &tol(), &mut rng(17)).unwrap();
        assert!(rep.tracial);
        assert!(rep.subdiagonal);
        assert_eq!(rep.envelope_matches, Some(true));
    }

    #[test]
    fn ccp_diagonal_compression_is_expectation() {
        let m2 = Subspace::full(2);
        let images: Vec<CMat> = m2
            .basis()
            .iter()
            .map(|x| CMat::from_fn(2, 2, |i, j| if i == j { x[(i, i)] } else { Complex64::ZERO }))
            .collect();
        let p = SubspaceMap::from_basis_images(m2, 2, images).unwrap();
        let rep = ccp_projection_is_expectation(
            &p,
            &Subspace::diagonal(2),
            &tol(),
            &CertOptions::default(),
            &mut rng(18),
        )
        .unwrap();
        assert!(rep.complete_contraction.is_certified());
        assert!(rep.bimodule.as_ref().unwrap().is_certified());
    }

    #[test]
    fn ccp_expectation_restricted_is_certified() {
        let (m, bs, tau) = full_setup(2, 19);
        let a = Subspace::upper_triangular(2);
        let res = cond_exp(&m, &bs, &tau, &a, &tol(), &mut rng(20)).unwrap();
        let rep = ccp_projection_is_expectation(
            &res.phi,
            &res.delta,
            &tol(),
            &CertOptions::default(),
            &mut rng(21),
        )
        .unwrap();
        assert!(rep.complete_contraction.is_certified());
        assert!(rep.bimodule.as_ref().unwrap().is_certified());
    }

    #[test]
    fn ccp_skew_projection_fails_contraction() {
        // P(x) = (x_11+x_22)/2·I + (x_12 + x_21)·E_12: unital idempotent
        // onto span{I, E_12} but not contractive (a level-1 witness exists).
        let m2 = Subspace::full(2);
        let images: Vec<CMat> = m2
            .basis()
            .iter()
            .map(|x| {
                let mut out = CMat::zeros(2, 2);
                let avg = (x[(0, 0)] + x[(1, 1)]) * cre(0.5);
                out[(0, 0)] = avg;
                out[(1, 1)] = avg;
                out[(0, 1)] = x[(0, 1)] + x[(1, 0)];
                out
            })
            .collect();
        let p = SubspaceMap::from_basis_images(m2, 2, images).unwrap();
        let range = subspace::span_of(&[eye(2), matrix_unit(2, 0, 1)], &tol()).unwrap();
        // Idempotent and unital by construction.
        let rep = ccp_projection_is_expectation(
            &p,
            &range,
            &tol(),
            &CertOptions::default(),
            &mut rng(22),
        )
        .unwrap();
        assert!(rep.unital_residual < 1e-10);
        assert!(rep.idempotent_residual < 1e-10);
        assert!(!rep.complete_contraction.is_certified());
        assert!(rep.bimodule.is_none());
    }

    #[test]
    fn l1_check_examples() {
        // (M_3, T_3): Δ = diagonals is not central; the span equality holds.
        let (m, bs, tau) = full_setup(3, 23);
        let a = Subspace::upper_triangular(3);
        let rep = l1_density_check(&m, &bs, &tau, &a, &tol(), &mut rng(24)).unwrap();
        assert!(!rep.delta_central);
        assert!(rep.tracial);
        assert!(rep.span_equals_m);

        // (C², A = C²): trivially dense with central diagonal.
        let c2 = Subspace::diagonal(2);
        let bs2 = wedderburn(&c2, &tol(), &mut rng(25)).unwrap();
        let tau2 = TraceState::normalized(&bs2);
        let rep2 = l1_density_check(&c2, &bs2, &tau2, &c2, &tol(), &mut rng(26)).unwrap();
        assert!(rep2.delta_central);
        assert!(rep2.span_equals_m);
    }

    #[test]
    fn l1_check_mixed_block_example() {
        // M = M_2 ⊕ M_2, A = {(x, λ1)}: Δ(A) = A ∩ A* = {(x, λ1)} is
        // central only in the scalar block; the ledger reports partial
        // hypotheses and the span is strictly smaller than M.
        let mut basis = Vec::new();
        for b in Subspace::full(2).basis() {
            basis.push(crate::linalg::direct_sum(&[b.clone(), CMat::zeros(2, 2)]));
        }
        for b in Subspace::full(2).basis() {
            basis.push(crate::linalg::direct_sum(&[CMat::zeros(2, 2), b.clone()]));
        }
        let m = subspace::span_of(&basis, &tol()).unwrap();
        let bs = wedderburn(&m, &tol(), &mut rng(27)).unwrap();
        let tau = TraceState::normalized(&bs);
        let mut a_basis = Vec::new();
        for b in Subspace::full(2).basis() {
            a_basis.push(crate::linalg::direct_sum(&[b.clone(), CMat::zeros(2, 2)]));
        }
        a_basis.push(crate::linalg::direct_sum(&[CMat::zeros(2, 2), eye(2)]));
        let a = subspace::span_of(&a_basis, &tol()).unwrap();
        let rep = l1_density_check(&m, &bs, &tau, &a, &tol(), &mut rng(28)).unwrap();
        assert!(!rep.delta_central);
        assert!(!rep.span_equals_m);
    }

    #[test]
    fn schur_perturbation_family_only_t_zero_passes() {
        // Φ_t = Φ + t·(lower-corner Schur kernel): extends Φ|_{T_2} and is
        // unital for every t, but positivity singles out t = 0.
        let (m, bs, tau) = full_setup(2, 29);
        let a = Subspace::upper_triangular(2);
        let res = cond_exp(&m, &bs, &tau, &a, &tol(), &mut rng(30)).unwrap();
        for t in [-0.3, 0.0, 0.3] {
            let images: Vec<CMat> = m
                .basis()
                .iter()
                .map(|x| {
                    let mut px = res.phi.apply(x);
                    px[(1, 0)] += cre(t) * x[(1, 0)];
                    px
                })
                .collect();
            let cand = SubspaceMap::from_basis_images(m.clone(), 2, images).unwrap();
            // Extension property holds for all t (the kernel kills T_2).
            for x in a.basis() {
                assert!(hs_norm(&(cand.apply(x) - res.phi.apply(x))) < 1e-10);
            }
            // Positivity: Hermitian images of Hermitian inputs plus PSD
            // images of squares.
            let mut positive = true;
            let mut r = rng(31);
            for _ in 0..20 {
                let g = m.random_element(&mut r);
                let img = cand.apply(&(g.adjoint() * &g));
                if hs_norm(&(&img - img.adjoint())) > 1e-9 {
                    positive = false;
                    break;
                }
                let (lam, _) = min_eig_herm(&(&img + img.adjoint()).scale(0.5)).unwrap();
                if lam < -1e-9 {
                    positive = false;
                    break;
                }
            }
            assert_eq!(positive, t == 0.0, "positivity should hold only at t = 0");
        }
    }

    #[test]
    fn density_scan_runs() {
        let (m, bs, tau) = full_setup(2, 32);
        let rows = density_scan(&m, &bs, &tau, 4, &tol(), &mut rng(33)).unwrap();
        assert!(!rows.is_empty());
    }
}
