//! C*-envelope and triple envelope via boundary-ideal search.
//!
//! For a unital subspace `A ⊆ M_d`: replace `M_d` by the unital *-algebra
//! `B` generated by `A`, decompose `B ≅ ⊕_k (M_{n_k} ⊗ 1_{m_k})`, and find
//! the largest set of blocks whose removal leaves `A` completely
//! isometrically embedded. Every ideal of a block direct sum is a block
//! subset, and any subset of a boundary subset is again boundary (factor
//! the quotient through the larger one), so refuted subsets prune all of
//! their supersets and the first certified subset in a size-descending
//! enumeration is the Shilov ideal.
//!
//! Spaces without a unit are unitized by the 2×2 corner embedding
//! `x ↦ [[λ1, x], [0, μ1]]` before the search; the triple envelope is then
//! read off the corner of the result.

use rand_chacha::ChaCha8Rng;

use crate::error::OpalgError;
use crate::linalg::{direct_sum, eye, op_norm, CMat, Tolerance};
use crate::map::SubspaceMap;
use crate::positivity::{complete_isometry, CertOptions, Certificate, Verdict};
use crate::structure::{wedderburn, BlockStructure};
use crate::subspace::{self, GeneratorMode, GeneratorSet, Subspace};
use crate::Result;

/// Search strategy for the boundary-ideal subset search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Exhaustive over all block subsets (default for <= 12 blocks).
    Exhaustive,
    /// Grow one block at a time, then audit maximality blockwise.
    Greedy,
    /// Exhaustive when the block count allows it, greedy otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy)]
pub struct EnvelopeOptions {
    pub mode: SearchMode,
    pub cert: CertOptions,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions {
            mode: SearchMode::Auto,
            cert: CertOptions::default(),
        }
    }
}

/// Result of the envelope computation.
#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    /// The generated unital *-algebra `B`.
    pub generated_algebra: Subspace,
    /// Wedderburn data of `B`.
    pub blocks: BlockStructure,
    /// Blocks forming the Shilov boundary ideal.
    pub shilov_blocks: Vec<usize>,
    /// Block sizes of the envelope `⊕_{k ∉ shilov} M_{n_k}`.
    pub envelope_dims: Vec<usize>,
    /// The completely isometric embedding `A → ⊕_{k ∉ shilov} M_{n_k}`,
    /// multiplicity stripped, as a map into `M_{d'}` with `d' = Σ n_k`.
    pub envelope_iso: SubspaceMap,
    /// Certificate log: every tested subset with its verdict.
    pub certificates: Vec<(Vec<usize>, Certificate)>,
}

/// Isometry onto the coordinates of the kept blocks (columns of `W`).
fn keep_isometry(bs: &BlockStructure, keep: &[usize]) -> CMat {
    let d = bs.basis_unitary.nrows();
    let width: usize = keep
        .iter()
        .map(|&k| bs.block_dims[k] * bs.multiplicities[k])
        .sum();
    let mut v = CMat::zeros(d, width);
    let mut col = 0;
    for &k in keep {
        let off: usize = (0..k).map(|j| bs.block_dims[j] * bs.multiplicities[j]).sum();
        let span = bs.block_dims[k] * bs.multiplicities[k];
        for c in 0..span {
            for r in 0..d {
                v[(r, col)] = bs.basis_unitary[(r, off + c)];
            }
            col += 1;
        }
    }
    v
}

fn complement(r: usize, subset: &[usize]) -> Vec<usize> {
    (0..r).filter(|k| !subset.contains(k)).collect()
}

/// The unital test map `a ↦ V* a V` compressing onto the blocks outside
/// `subset`; completely isometric iff `subset` is a boundary ideal.
fn subset_test_map(a: &Subspace, bs: &BlockStructure, subset: &[usize]) -> Result<SubspaceMap> {
    let keep = complement(bs.num_blocks(), subset);
    let v = keep_isometry(bs, &keep);
    let images: Vec<CMat> = a.basis().iter().map(|x| v.adjoint() * x * &v).collect();
    SubspaceMap::from_basis_images(a.clone(), v.ncols(), images)
}

fn subsets_descending(candidates: &[usize]) -> Vec<Vec<usize>> {
    let n = candidates.len();
    let mut all: Vec<Vec<usize>> = (0u64..(1u64 << n))
        .map(|mask| {
            (0..n)
                .filter(|i| mask & (1u64 << i) != 0)
                .map(|i| candidates[i])
                .collect()
        })
        .collect();
    all.sort_by(|x: &Vec<usize>, y: &Vec<usize>| y.len().cmp(&x.len()).then(x.cmp(y)));
    all
}

fn is_superset(bigger: &[usize], smaller: &[usize]) -> bool {
    smaller.iter().all(|k| bigger.contains(k))
}

/// C*-envelope of a unital subspace of `M_d`.
pub fn cstar_envelope(
    a: &Subspace,
    tol: &Tolerance,
    opts: &EnvelopeOptions,
    rng: &mut ChaCha8Rng,
) -> Result<EnvelopeResult> {
    if !a.contains_identity(tol) {
        return Err(OpalgError::DegenerateInput(
            "cstar_envelope needs a unital subspace; unitize via triple_envelope".into(),
        ));
    }
    let b = subspace::generate(
        &GeneratorSet {
            ambient_dim: a.ambient_dim(),
            generators: a.basis().to_vec(),
            mode: GeneratorMode::StarAlgebra,
        },
        tol,
    )?;
    let bs = wedderburn(&b, tol, rng)?;
    let r = bs.num_blocks();

    // Level-k falsifier depth: the largest block size suffices.
    let cert_opts = CertOptions {
        falsifier_levels: bs.block_dims.iter().cloned().max().unwrap_or(1),
        ..opts.cert
    };

    let mut log: Vec<(Vec<usize>, Certificate)> = Vec::new();
    let mut refuted: Vec<Vec<usize>> = Vec::new();
    let mut inconclusive: Vec<Vec<usize>> = Vec::new();

    let test_subset = |subset: &Vec<usize>,
                           log: &mut Vec<(Vec<usize>, Certificate)>,
                           refuted: &mut Vec<Vec<usize>>,
                           inconclusive: &mut Vec<Vec<usize>>,
                           rng: &mut ChaCha8Rng|
     -> Result<Verdict> {
        if subset.is_empty() {
            let cert =
                Certificate::certified(None, 0.0, 0, "empty ideal: quotient is the identity");
            log.push((subset.clone(), cert));
            return Ok(Verdict::Certified);
        }
        if subset.len() == r {
            let cert = Certificate::refuted(
                crate::positivity::Witness::Kernel(eye(a.ambient_dim())),
                1.0,
                "full ideal: quotient is the zero map",
            );
            log.push((subset.clone(), cert));
            refuted.push(subset.clone());
            return Ok(Verdict::Refuted);
        }
        if refuted.iter().any(|rf| is_superset(subset, rf)) {
            let cert = Certificate::refuted(
                crate::positivity::Witness::Kernel(CMat::zeros(1, 1)),
                0.0,
                "superset of a refuted subset",
            );
            log.push((subset.clone(), cert));
            return Ok(Verdict::Refuted);
        }
        let t = subset_test_map(a, &bs, subset)?;
        let cert = complete_isometry(&t, true, tol, &cert_opts, rng)?;
        let verdict = cert.verdict;
        log.push((subset.clone(), cert));
        match verdict {
            Verdict::Refuted => refuted.push(subset.clone()),
            Verdict::Inconclusive => inconclusive.push(subset.clone()),
            Verdict::Certified => {}
        }
        Ok(verdict)
    };

    let exhaustive = match opts.mode {
        SearchMode::Exhaustive => true,
        SearchMode::Greedy => false,
        SearchMode::Auto => r <= 12,
    };

    let shilov: Vec<usize>;
    if exhaustive {
        // Singleton prefilter: a refuted singleton prunes all supersets.
        let mut candidates = Vec::new();
        for k in 0..r {
            if r == 1 {
                candidates.push(k);
                continue;
            }
            let v = test_subset(&vec![k], &mut log, &mut refuted, &mut inconclusive, rng)?;
            if v != Verdict::Refuted {
                candidates.push(k);
            }
        }
        let mut found: Option<Vec<usize>> = None;
        for subset in subsets_descending(&candidates) {
            if subset.len() == 1 && r > 1 {
                // Already tested in the prefilter.
                if !refuted.iter().any(|rf| rf == &subset)
                    && !inconclusive.iter().any(|i| i == &subset)
                {
                    found = Some(subset);
                    break;
                }
                continue;
            }
            let v = test_subset(&subset, &mut log, &mut refuted, &mut inconclusive, rng)?;
            if v == Verdict::Certified {
                found = Some(subset);
                break;
            }
        }
        let found = found.unwrap_or_default();
        // Maximality needs every strictly larger candidate subset refuted.
        if inconclusive.iter().any(|s| s.len() > found.len()) {
            return Err(OpalgError::EnvelopeInconclusive(format!(
                "subsets larger than the certified ideal were inconclusive: {:?}",
                inconclusive
            )));
        }
        shilov = found;
    } else {
        // Greedy growth with blockwise self-audit.
        let mut current: Vec<usize> = Vec::new();
        loop {
            let mut grown = false;
            for k in 0..r {
                if current.contains(&k) {
                    continue;
                }
                let mut cand = current.clone();
                cand.push(k);
                cand.sort();
                if refuted.iter().any(|rf| is_superset(&cand, rf)) {
                    continue;
                }
                let v = test_subset(&cand, &mut log, &mut refuted, &mut inconclusive, rng)?;
                if v == Verdict::Certified {
                    current = cand;
                    grown = true;
                    break;
                }
            }
            if !grown {
                break;
            }
        }
        // Audit: every excluded block must refute when added.
        for k in 0..r {
            if current.contains(&k) {
                continue;
            }
            let mut cand = current.clone();
            cand.push(k);
            cand.sort();
            let known_refuted = refuted.iter().any(|rf| is_superset(&cand, rf));
            if !known_refuted {
                let v = test_subset(&cand, &mut log, &mut refuted, &mut inconclusive, rng)?;
                if v != Verdict::Refuted {
                    return Err(OpalgError::EnvelopeInconclusive(format!(
                        "greedy audit could not refute adding block {k} to {:?}",
                        current
                    )));
                }
            }
        }
        shilov = current;
    }

    // Envelope embedding: block coefficients of the kept blocks, one copy
    // each (multiplicity stripping is a *-isomorphism, so norms survive).
    let keep = complement(r, &shilov);
    let envelope_dims: Vec<usize> = keep.iter().map(|&k| bs.block_dims[k]).collect();
    let dprime: usize = envelope_dims.iter().sum();
    if dprime > a.ambient_dim() {
        return Err(OpalgError::StructureFailure(format!(
            "envelope dimension {dprime} exceeds the ambient dimension"
        )));
    }
    let images: Vec<CMat> = a
        .basis()
        .iter()
        .map(|x| {
            let parts: Vec<CMat> = keep.iter().map(|&k| bs.block_coefficient(x, k)).collect();
            direct_sum(&parts)
        })
        .collect();
    let envelope_iso = SubspaceMap::from_basis_images(a.clone(), dprime, images)?;

    Ok(EnvelopeResult {
        generated_algebra: b,
        blocks: bs,
        shilov_blocks: shilov,
        envelope_dims,
        envelope_iso,
        certificates: log,
    })
}

/// Result of a triple-envelope computation.
#[derive(Debug, Clone)]
pub struct TripleEnvelopeResult {
    /// Whether the 2×2 corner unitization was used.
    pub unitized: bool,
    /// Envelope data (of `X` itself, or of its corner unitization).
    pub base: EnvelopeResult,
    /// The triple embedding `X → M_{d'}` into the envelope coordinates.
    pub embedding: SubspaceMap,
    /// The triple system generated by the embedded copy of `X`.
    pub triple_system: Subspace,
    /// Images of the two corner unit projections when unitized.
    pub corner_projections: Option<(CMat, CMat)>,
}

/// Triple envelope of a subspace `X ⊆ M_d`.
///
/// A unital `X` keeps its C*-envelope; otherwise `X` is embedded in the
/// corner `[[λ1, x], [0, μ1]] ⊆ M_{2d}` and the envelope of that unital
/// space is computed, with the triple system read off the corner.
pub fn triple_envelope(
    x: &Subspace,
    tol: &Tolerance,
    opts: &EnvelopeOptions,
    rng: &mut ChaCha8Rng,
) -> Result<TripleEnvelopeResult> {
    let d = x.ambient_dim();
    if x.contains_identity(tol) {
        let base = cstar_envelope(x, tol, opts, rng)?;
        let embedding = base.envelope_iso.clone();
        let triple_system = subspace::generate(
            &GeneratorSet {
                ambient_dim: embedding.codomain_dim(),
                generators: embedding.images().to_vec(),
                mode: GeneratorMode::TripleSystem,
            },
            tol,
        )?;
        return Ok(TripleEnvelopeResult {
            unitized: false,
            base,
            embedding,
            triple_system,
            corner_projections: None,
        });
    }

    // Corner unitization in M_{2d}.
    let corner = |m: &CMat| -> CMat {
        let mut out = CMat::zeros(2 * d, 2 * d);
        out.view_mut((0, d), (d, d)).copy_from(m);
        out
    };
    let mut p1 = CMat::zeros(2 * d, 2 * d);
    p1.view_mut((0, 0), (d, d)).copy_from(&eye(d));
    let p2 = eye(2 * d) - &p1;
    let mut gens: Vec<CMat> = x.basis().iter().map(&corner).collect();
    gens.push(p1.clone());
    gens.push(p2.clone());
    let unitized = subspace::span_of(&gens, tol)?;
    let base = cstar_envelope(&unitized, tol, opts, rng)?;

    let embed_mats: Vec<CMat> = x
        .basis()
        .iter()
        .map(|m| base.envelope_iso.apply(&corner(m)))
        .collect();
    let embedding = SubspaceMap::from_basis_images(
        x.clone(),
        base.envelope_iso.codomain_dim(),
        embed_mats.clone(),
    )?;
    let triple_system = subspace::generate(
        &GeneratorSet {
            ambient_dim: base.envelope_iso.codomain_dim(),
            generators: embed_mats,
            mode: GeneratorMode::TripleSystem,
        },
        tol,
    )?;
    let pj = (base.envelope_iso.apply(&p1), base.envelope_iso.apply(&p2));
    Ok(TripleEnvelopeResult {
        unitized: true,
        base,
        embedding,
        triple_system,
        corner_projections: Some(pj),
    })
}

/// Report of the simple-range homomorphism test.
#[derive(Debug, Clone)]
pub struct SimpleRangeReport {
    /// Number of Wedderburn blocks of the C*-algebra generated by `T(A)`.
    pub range_blocks: usize,
    /// Multiplicativity residual of `T`, when the range algebra is simple.
    pub multiplicativity: Option<f64>,
    pub certificate: Certificate,
}

/// When a unital complete isometry has range generating a simple
/// C*-algebra, it must be multiplicative; this checks both halves.
pub fn is_simple_range_homomorphism(
    t: &SubspaceMap,
    tol: &Tolerance,
    opts: &EnvelopeOptions,
    rng: &mut ChaCha8Rng,
) -> Result<SimpleRangeReport> {
    let iso = complete_isometry(t, true, tol, &opts.cert, rng)?;
    if !iso.is_certified() {
        return Ok(SimpleRangeReport {
            range_blocks: 0,
            multiplicativity: None,
            certificate: Certificate {
                detail: format!(
                    "precondition failed: not a certified complete isometry ({})",
                    iso.detail
                ),
                ..iso
            },
        });
    }
    let ran = subspace::generate(
        &GeneratorSet {
            ambient_dim: t.codomain_dim(),
            generators: t.images().to_vec(),
            mode: GeneratorMode::StarAlgebra,
        },
        tol,
    )?;
    let bs = wedderburn(&ran, tol, rng)?;
    let r = bs.num_blocks();
    if r != 1 {
        return Ok(SimpleRangeReport {
            range_blocks: r,
            multiplicativity: None,
            certificate: Certificate::inconclusive(
                0.0,
                0,
                "range C*-algebra is not simple; the test does not apply",
            ),
        });
    }
    let res = t.multiplicativity_residual();
    let scale: f64 = t.images().iter().map(op_norm).fold(1.0, f64::max);
    let cert = if res <= tol.cert_tol * 100.0 * scale * scale {
        Certificate::certified(None, res, 0, "multiplicative on basis pairs")
    } else {
        Certificate::refuted(
            crate::positivity::Witness::Kernel(CMat::zeros(1, 1)),
            res,
            "certified complete isometry with simple range is not multiplicative; \
             this contradicts the structure theory and indicates a certification error",
        )
    };
    Ok(SimpleRangeReport {
        range_blocks: 1,
        multiplicativity: Some(res),
        certificate: cert,
    })
}
