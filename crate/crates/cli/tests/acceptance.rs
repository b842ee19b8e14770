//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass line. The whole suite is desk scale (ambient d ≤ 8).

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use opalg::envelope::{cstar_envelope, EnvelopeOptions, SearchMode};
use opalg::expectation::{
    classify_tracial, cond_exp, tau_projection, uniqueness_check, TraceState, UniquenessVerdict,
};
use opalg::isometry::{analyze, block_form_from_analysis, AnalysisOutcome};
use opalg::linalg::{
    self, eye, hs_norm, matrix_unit, min_eig_herm, op_norm, random_unitary, CMat, Tolerance,
};
use opalg::logmod::{
    cone_membership, factorize, prop41_forms, similarity_transport, verify_separating, ConeSide,
    NestAlgebra,
};
use opalg::positivity::{
    complete_isometry, cp_extendable, verify_cp_witness, verify_norm_witness, CertOptions,
    Verdict, Witness,
};
use opalg::structure::wedderburn;
use opalg::subspace::{self, GeneratorMode, GeneratorSet, Subspace};
use opalg::SubspaceMap;

use opalg_cli::{execute, Command, Common};

fn tol() -> Tolerance {
    Tolerance::default()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn opts() -> CertOptions {
    CertOptions::default()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

#[test]
fn acceptance_01_envelope_of_triangular_algebras() {
    for n in 2..=4 {
        let a = Subspace::upper_triangular(n);
        let exhaustive = cstar_envelope(
            &a,
            &tol(),
            &EnvelopeOptions {
                mode: SearchMode::Exhaustive,
                cert: opts(),
            },
            &mut rng(100 + n as u64),
        )
        .unwrap();
        assert!(exhaustive.shilov_blocks.is_empty(), "T_{n}: ideal not empty");
        assert_eq!(exhaustive.envelope_dims, vec![n], "T_{n}: envelope is not M_{n}");

        let greedy = cstar_envelope(
            &a,
            &tol(),
            &EnvelopeOptions {
                mode: SearchMode::Greedy,
                cert: opts(),
            },
            &mut rng(200 + n as u64),
        )
        .unwrap();
        assert_eq!(greedy.shilov_blocks, exhaustive.shilov_blocks);
        assert_eq!(greedy.envelope_dims, exhaustive.envelope_dims);
    }
    println!("ACCEPTANCE 1 PASS: envelope(T_n) = M_n with empty Shilov ideal, n = 2..4, exhaustive = greedy");
}

/// Independent brute-force oracle for criterion 2: level-k norm sampling
/// over every block subset, no certification machinery involved.
fn brute_force_isometric_subsets(a: &Subspace, trials: usize, r: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    // Ambient M_2 ⊕ C realized in M_3: the block projections are known.
    let p_m2 = {
        let mut p = CMat::zeros(3, 3);
        p[(0, 0)] = linalg::cre(1.0);
        p[(1, 1)] = linalg::cre(1.0);
        p
    };
    let p_c = matrix_unit(3, 2, 2);
    let projs = [p_m2, p_c];
    let mut good = Vec::new();
    for mask in 0u8..4 {
        let subset: Vec<usize> = (0..2).filter(|i| mask & (1 << i) != 0).collect();
        let mut cut = eye(3);
        for &k in &subset {
            cut -= &projs[k];
        }
        let mut worst: f64 = 0.0;
        for t in 0..trials {
            let k = 1 + t % 3;
            let mut blocks = vec![vec![CMat::zeros(3, 3); k]; k];
            for row in blocks.iter_mut() {
                for b in row.iter_mut() {
                    *b = a.random_element(r);
                }
            }
            let x = linalg::amplify(&blocks).unwrap();
            let y_blocks: Vec<Vec<CMat>> = (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| {
                            let e = x.view((i * 3, j * 3), (3, 3)).into_owned();
                            &cut * e * &cut
                        })
                        .collect()
                })
                .collect();
            let y = linalg::amplify(&y_blocks).unwrap();
            let nin = op_norm(&x);
            if nin > 1e-12 {
                worst = worst.max((op_norm(&y) - nin).abs() / nin);
            }
        }
        if worst <= 1e-7 {
            good.push(subset);
        }
    }
    good
}

#[test]
fn acceptance_02_nontrivial_shilov_ideal() {
    // A = span{1, (E_12, 0)} inside M_2 ⊕ C ⊂ M_3.
    let mut gen = CMat::zeros(3, 3);
    gen[(0, 1)] = linalg::cre(1.0);
    let a = subspace::span_of(&[eye(3), gen], &tol()).unwrap();
    let env = cstar_envelope(&a, &tol(), &EnvelopeOptions::default(), &mut rng(2)).unwrap();
    assert_eq!(env.shilov_blocks.len(), 1);
    let k = env.shilov_blocks[0];
    assert_eq!(env.blocks.block_dims[k], 1, "the ideal must be the C block");
    assert_eq!(env.envelope_dims, vec![2]);

    // Brute-force oracle: all 2^2 subsets, 500 level-k samples each, k ≤ 3.
    let good = brute_force_isometric_subsets(&a, 500, &mut rng(3));
    let max_len = good.iter().map(|s| s.len()).max().unwrap();
    let maximal: Vec<&Vec<usize>> = good.iter().filter(|s| s.len() == max_len).collect();
    assert_eq!(maximal.len(), 1, "oracle must find a unique maximal subset");
    assert_eq!(maximal[0], &vec![1], "oracle: the C block is the ideal");
    println!("ACCEPTANCE 2 PASS: M_2 ⊕ C example has Shilov ideal = scalar block, confirmed by brute-force oracle");
}

#[test]
fn acceptance_03_wedderburn_robustness() {
    let mut r = rng(4);
    for trial in 0..20 {
        let u = random_unitary(&mut r, 3);
        let g = &u * matrix_unit(3, 0, 1) * u.adjoint();
        let b = subspace::generate(
            &GeneratorSet {
                ambient_dim: 3,
                generators: vec![g],
                mode: GeneratorMode::StarAlgebra,
            },
            &tol(),
        )
        .unwrap();
        let bs = wedderburn(&b, &tol(), &mut r).unwrap();
        let mut pairs: Vec<(usize, usize)> = bs
            .block_dims
            .iter()
            .zip(&bs.multiplicities)
            .map(|(&n, &m)| (n, m))
            .collect();
        pairs.sort();
        assert_eq!(pairs, vec![(1, 1), (2, 1)], "trial {trial}: wrong block multiset");

        // Invariant residuals at 1e-8.
        let mut sum = CMat::zeros(3, 3);
        for p in &bs.central_projections {
            assert!(hs_norm(&(p - p.adjoint())) <= 1e-8);
            assert!(hs_norm(&(p * p - p)) <= 1e-8);
            for x in b.basis() {
                assert!(hs_norm(&(p * x - x * p)) <= 1e-8);
            }
            sum += p;
        }
        assert!(hs_norm(&(sum - eye(3))) <= 1e-8);
        let w = &bs.basis_unitary;
        assert!(hs_norm(&(w.adjoint() * w - eye(3))) <= 1e-8);
    }
    println!("ACCEPTANCE 3 PASS: 20 unitary conjugations of star-alg(E_12) in M_3 all give blocks {{(2,1),(1,1)}} with residuals <= 1e-8");
}

#[test]
fn acceptance_04_factorization_through_t4() {
    let nest = NestAlgebra::upper_triangular(4);
    let t4 = nest.subspace();
    let mut r = rng(5);
    for trial in 0..100 {
        // Condition number at most 1e4.
        let b = linalg::random_spd(&mut r, 4, 0.01, 100.0);
        let a = factorize(&nest, &b, &tol()).unwrap();
        let res = hs_norm(&(a.adjoint() * &a - &b));
        assert!(
            res <= 1e-9 * hs_norm(&b),
            "trial {trial}: factor residual {res:.3e}"
        );
        let inv = a.clone().try_inverse().unwrap();
        assert!(t4.distance(&a) <= 1e-8 * hs_norm(&a), "trial {trial}: a outside T_4");
        assert!(
            t4.distance(&inv) <= 1e-8 * hs_norm(&inv),
            "trial {trial}: a^-1 outside T_4"
        );

        // The polar-form unitary agrees with the polar decomposition.
        let x = linalg::random_gaussian(&mut r, 4, 4) + eye(4).scale(3.0);
        let (u, _) = prop41_forms(&nest, &x, &tol()).unwrap();
        let (pu, _) = linalg::polar(&x);
        assert!(hs_norm(&(u - pu)) <= 1e-8, "trial {trial}: polar unitary mismatch");
    }
    println!("ACCEPTANCE 4 PASS: 100 strictly positive matrices factor through T_4 at 1e-9 with membership at 1e-8; polar unitaries match at 1e-8");
}

#[test]
fn acceptance_05_cone_tests() {
    let a = subspace::span_of(&[eye(2), matrix_unit(2, 0, 1)], &tol()).unwrap();

    let cert_in = cone_membership(&a, &matrix_unit(2, 1, 1), ConeSide::Left, &tol(), &mut rng(6))
        .unwrap();
    assert!(cert_in.is_certified());
    if let Some(Witness::Feasible(c)) = &cert_in.witness {
        // Independent re-verification of the Gram certificate.
        let k = a.dim();
        let mut recon = CMat::zeros(2, 2);
        for i in 0..k {
            for j in 0..k {
                let p = a.basis()[i].adjoint() * &a.basis()[j];
                recon += p.map(|z| z * c[(i, j)]);
            }
        }
        assert!(hs_norm(&(recon - matrix_unit(2, 1, 1))) <= 1e-6);
        let (lam, _) = min_eig_herm(c).unwrap();
        assert!(lam >= -1e-8);
    } else {
        panic!("expected a Gram certificate");
    }

    let cert_out =
        cone_membership(&a, &matrix_unit(2, 0, 0), ConeSide::Left, &tol(), &mut rng(7)).unwrap();
    assert!(cert_out.is_refuted());
    match &cert_out.witness {
        Some(Witness::Separating(y)) => {
            verify_separating(&a, &matrix_unit(2, 0, 0), y, ConeSide::Left, &tol()).unwrap();
        }
        _ => panic!("expected a separating functional"),
    }
    println!("ACCEPTANCE 5 PASS: E_22 in the cone over span{{1, E_12}} with verified Gram matrix; E_11 refuted with verified separating functional");
}

fn full_map(d: usize, e: usize, f: impl Fn(&CMat) -> CMat) -> SubspaceMap {
    let s = Subspace::full(d);
    let images: Vec<CMat> = s.basis().iter().map(|b| f(b)).collect();
    SubspaceMap::from_basis_images(s, e, images).unwrap()
}

#[test]
fn acceptance_06_cp_certification() {
    // Transpose: refuted with a deep witness.
    let transpose = full_map(2, 2, |x| x.transpose());
    let cert = cp_extendable(&transpose, &tol(), &opts(), &mut rng(8)).unwrap();
    assert!(cert.is_refuted());
    match &cert.witness {
        Some(Witness::CpLevel {
            k,
            block,
            image_min_eig,
        }) => {
            assert!(*image_min_eig <= -0.5, "witness too shallow: {image_min_eig}");
            verify_cp_witness(&transpose, block, *k, &tol()).unwrap();
        }
        _ => panic!("expected CP witness"),
    }

    // Identity and isometry conjugations certify.
    let id = full_map(2, 2, |x| x.clone());
    assert!(cp_extendable(&id, &tol(), &opts(), &mut rng(9)).unwrap().is_certified());
    let mut r0 = rng(10);
    let u = random_unitary(&mut r0, 2);
    let conj = full_map(2, 2, |x| &u * x * u.adjoint());
    assert!(cp_extendable(&conj, &tol(), &opts(), &mut r0).unwrap().is_certified());

    // 50-map randomized suite with ground truth by construction:
    // Kraus compressions are CP, transpose composites are not.
    let mut r = rng(11);
    let mut false_verdicts = 0;
    for trial in 0..50 {
        let is_cp = trial % 2 == 0;
        let map = if is_cp {
            let k1 = linalg::random_gaussian(&mut r, 2, 2).scale(0.7);
            let k2 = linalg::random_gaussian(&mut r, 2, 2).scale(0.7);
            full_map(2, 2, |x| k1.adjoint() * x * &k1 + k2.adjoint() * x * &k2)
        } else {
            let v = random_unitary(&mut r, 2);
            let w = random_unitary(&mut r, 2);
            full_map(2, 2, |x| &w * (&v * x * v.adjoint()).transpose() * w.adjoint())
        };
        let cert = cp_extendable(&map, &tol(), &opts(), &mut r).unwrap();
        let ok = match cert.verdict {
            Verdict::Certified => is_cp,
            Verdict::Refuted => !is_cp,
            Verdict::Inconclusive => false,
        };
        if !ok {
            false_verdicts += 1;
        }
    }
    assert_eq!(false_verdicts, 0, "CP suite produced wrong verdicts");
    println!("ACCEPTANCE 6 PASS: transpose refuted with witness depth <= -0.5; 0 wrong verdicts over the 50-map suite");
}

/// Synthesized complete isometry U diag(A, S(A)) V with a completely
/// contractive corner S built from isometric compressions.
fn synthesize_block_map(n: usize, m: usize, scale: f64, r: &mut ChaCha8Rng) -> SubspaceMap {
    let w1 = random_unitary(r, m);
    let w2 = random_unitary(r, m);
    let tn = Subspace::upper_triangular(n);
    let corner = m - n;
    // S(x) = c · K* x L for isometric column selections K, L (possibly
    // padded), always completely contractive.
    let k_iso = random_unitary(r, n);
    let l_iso = random_unitary(r, n);
    let c = 0.3 + 0.5 * rand::Rng::random::<f64>(r);
    let images: Vec<CMat> = tn
        .basis()
        .iter()
        .map(|b| {
            let mut mid = CMat::zeros(m, m);
            mid.view_mut((0, 0), (n, n)).copy_from(b);
            if corner > 0 {
                let s_full = (k_iso.adjoint() * b * &l_iso).scale(c);
                let take = corner.min(n);
                mid.view_mut((n, n), (take, take))
                    .copy_from(&s_full.view((0, 0), (take, take)));
            }
            (&w1 * mid * &w2).scale(scale)
        })
        .collect();
    SubspaceMap::from_basis_images(tn, m, images).unwrap()
}

#[test]
fn acceptance_07_08_isometry_round_trip_and_star_identity() {
    let mut r = rng(12);
    let mut worst_recon: f64 = 0.0;
    let mut worst_star: f64 = 0.0;
    for trial in 0..25 {
        let (n, m) = if trial % 2 == 0 { (2, 4) } else { (3, 5) };
        let t = synthesize_block_map(n, m, 1.0, &mut r);
        let outcome = analyze(&t, None, &tol(), &opts(), &mut r).unwrap();
        let analysis = match outcome {
            AnalysisOutcome::Analyzed(a) => a,
            AnalysisOutcome::NotCompletelyIsometric(c) => {
                panic!("trial {trial}: synthesized map not certified: {}", c.detail)
            }
        };
        // Criterion 8: the star-product identity ledger at 1e-7.
        worst_star = worst_star.max(analysis.star_product.max_residual);
        assert!(
            analysis.star_product.max_residual <= 1e-7,
            "trial {trial}: identity (*) residual {:.3e}",
            analysis.star_product.max_residual
        );
        // Criterion 7: block form reconstruction at 1e-7.
        let bf = block_form_from_analysis(&t, &analysis, &tol()).unwrap();
        worst_recon = worst_recon.max(bf.reconstruction_residual);
        assert!(
            bf.reconstruction_residual <= 1e-7,
            "trial {trial}: reconstruction residual {:.3e}",
            bf.reconstruction_residual
        );
    }

    // 25 strict contractions refute with re-verifiable witnesses.
    for trial in 0..25 {
        let (n, m) = if trial % 2 == 0 { (2, 4) } else { (3, 5) };
        let t = synthesize_block_map(n, m, 0.8, &mut r);
        let cert = complete_isometry(&t, false, &tol(), &opts(), &mut r).unwrap();
        assert!(cert.is_refuted(), "trial {trial}: contraction not refuted");
        match &cert.witness {
            Some(Witness::NormLevel { k, block, .. }) => {
                verify_norm_witness(&t, block, *k, &tol()).unwrap();
            }
            Some(Witness::CpLevel { k, block, .. }) => {
                verify_cp_witness(&t, block, *k, &tol()).unwrap();
            }
            other => panic!("trial {trial}: unexpected witness {other:?}"),
        }
    }
    println!("ACCEPTANCE 7 PASS: 25 synthesized block maps certified and reconstructed (worst residual {worst_recon:.2e}); 25 contractions refuted with verified witnesses");
    println!("ACCEPTANCE 8 PASS: identity T(ab)(1-p) = T(a)T(1)*T(b)(1-p) holds on all basis pairs (worst residual {worst_star:.2e})");
}

#[test]
fn acceptance_09_conditional_expectation_pipeline() {
    for n in 2..=4 {
        let m = Subspace::full(n);
        let bs = wedderburn(&m, &tol(), &mut rng(300 + n as u64)).unwrap();
        let tau = TraceState::normalized(&bs);
        let a = Subspace::upper_triangular(n);
        let res = cond_exp(&m, &bs, &tau, &a, &tol(), &mut rng(400 + n as u64)).unwrap();
        // Φ is the diagonal compression, at 1e-10 on the basis of M.
        for x in m.basis() {
            let expected = CMat::from_fn(n, n, |i, j| {
                if i == j {
                    x[(i, i)]
                } else {
                    linalg::c(0.0, 0.0)
                }
            });
            assert!(
                hs_norm(&(res.phi.apply(x) - expected)) <= 1e-10,
                "n = {n}: expectation is not the diagonal compression"
            );
        }
        assert!(res.multiplicative_on_a.is_certified());
        assert!(res.trace_preservation_residual <= 1e-10);

        // One pipeline run: classification + envelope cross-check.
        let rep = classify_tracial(&m, &bs, &tau, &a, &tol(), &mut rng(500 + n as u64)).unwrap();
        assert!(rep.tracial && rep.subdiagonal, "T_{n} must be subdiagonal");
        assert_eq!(rep.envelope_matches, Some(true), "envelope cross-check failed");
        assert_eq!(rep.factorization_ok, Some(true), "factorization cross-check failed");
    }
    println!("ACCEPTANCE 9 PASS: (M_n, tr/n, T_n) expectation = diagonal compression at 1e-10, subdiagonal classification and envelope cross-check for n = 2..4");
}

#[test]
fn acceptance_10_uniqueness_of_expectations() {
    // M = M_2 ⊕ M_2, A = T_2 ⊕ T_2, τ = equal masses.
    let mut basis = Vec::new();
    for b in Subspace::full(2).basis() {
        basis.push(linalg::direct_sum(&[b.clone(), CMat::zeros(2, 2)]));
        basis.push(linalg::direct_sum(&[CMat::zeros(2, 2), b.clone()]));
    }
    let m = subspace::span_of(&basis, &tol()).unwrap();
    let bs = wedderburn(&m, &tol(), &mut rng(13)).unwrap();
    let tau = TraceState::from_block_masses(&bs, &[0.5, 0.5]).unwrap();
    let mut a_basis = Vec::new();
    for b in Subspace::upper_triangular(2).basis() {
        a_basis.push(linalg::direct_sum(&[b.clone(), CMat::zeros(2, 2)]));
        a_basis.push(linalg::direct_sum(&[CMat::zeros(2, 2), b.clone()]));
    }
    let a = subspace::span_of(&a_basis, &tol()).unwrap();
    let base = cond_exp(&m, &bs, &tau, &a, &tol(), &mut rng(14)).unwrap();
    let delta = base.delta.clone();
    let d = 4usize;

    // Ten independent constructions.
    let mut candidates: Vec<SubspaceMap> = vec![base.phi.clone()];
    for masses in [[0.3, 0.7], [0.25, 0.75], [0.6, 0.4], [0.9, 0.1]] {
        let tau_alt = TraceState::from_block_masses(&bs, &masses).unwrap();
        let (phi, _) = tau_projection(&m, &bs, &tau_alt, &delta, &tol()).unwrap();
        candidates.push(phi);
    }
    // Schur diagonal extraction.
    let schur = SubspaceMap::from_basis_images(
        m.clone(),
        d,
        m.basis()
            .iter()
            .map(|x| {
                CMat::from_fn(d, d, |i, j| {
                    if i == j {
                        x[(i, i)]
                    } else {
                        linalg::c(0.0, 0.0)
                    }
                })
            })
            .collect(),
    )
    .unwrap();
    candidates.push(schur);
    // Averaging over the 2^4 sign unitaries.
    let sign_avg = SubspaceMap::from_basis_images(
        m.clone(),
        d,
        m.basis()
            .iter()
            .map(|x| {
                let mut acc = CMat::zeros(d, d);
                for mask in 0u8..16 {
                    let u = CMat::from_fn(d, d, |i, j| {
                        if i == j {
                            let s = if mask & (1 << i) != 0 { -1.0 } else { 1.0 };
                            linalg::cre(s)
                        } else {
                            linalg::c(0.0, 0.0)
                        }
                    });
                    acc += &u * x * u.adjoint();
                }
                acc.scale(1.0 / 16.0)
            })
            .collect(),
    )
    .unwrap();
    candidates.push(sign_avg);
    // Averaging over powers of a primitive diagonal unitary.
    let omega = linalg::c(0.0, 1.0);
    let u_root = CMat::from_fn(d, d, |i, j| {
        if i == j {
            omega.powu(i as u32)
        } else {
            linalg::c(0.0, 0.0)
        }
    });
    let root_avg = SubspaceMap::from_basis_images(
        m.clone(),
        d,
        m.basis()
            .iter()
            .map(|x| {
                let mut acc = CMat::zeros(d, d);
                let mut upow = eye(d);
                for _ in 0..4 {
                    acc += &upow * x * upow.adjoint();
                    upow *= &u_root;
                }
                acc.scale(0.25)
            })
            .collect(),
    )
    .unwrap();
    candidates.push(root_avg);
    // Compression sum Σ E_ii x E_ii.
    let comp_sum = SubspaceMap::from_basis_images(
        m.clone(),
        d,
        m.basis()
            .iter()
            .map(|x| {
                let mut acc = CMat::zeros(d, d);
                for i in 0..d {
                    acc += matrix_unit(d, i, i) * x * matrix_unit(d, i, i);
                }
                acc
            })
            .collect(),
    )
    .unwrap();
    candidates.push(comp_sum);
    // Plain HS projection onto Δ(A).
    let hs_proj = SubspaceMap::from_basis_images(
        m.clone(),
        d,
        m.basis().iter().map(|x| delta.project(x)).collect(),
    )
    .unwrap();
    candidates.push(hs_proj);
    assert_eq!(candidates.len(), 10);

    for i in 0..candidates.len() {
        for j in (i + 1)..candidates.len() {
            let rep = uniqueness_check(
                &candidates[i],
                &candidates[j],
                &m,
                &bs,
                &tau,
                &delta,
                &tol(),
            )
            .unwrap();
            assert_eq!(
                rep.verdict,
                UniquenessVerdict::Equal,
                "candidates {i} and {j} disagree (max tau-square {:.3e})",
                rep.max_tau_square
            );
            assert!(
                rep.max_tau_square.sqrt() <= 1e-9,
                "candidates {i}/{j}: agreement beyond 1e-9 required"
            );
        }
    }

    // Ten perturbed candidates, each failing a named precondition.
    let mut failures = 0;
    for pert in 0..10 {
        let eps = 0.01 + 0.005 * pert as f64;
        let images: Vec<CMat> = m
            .basis()
            .iter()
            .map(|x| {
                let mut px = base.phi.apply(x);
                match pert % 3 {
                    // Range violation: leak an off-diagonal component.
                    0 => px[(0, 1)] += linalg::cre(eps) * x[(0, 1)],
                    // Unital violation: rescale.
                    1 => px = px.scale(1.0 + eps),
                    // Bimodule violation: couple slots across the diagonal.
                    _ => px[(0, 0)] += linalg::cre(eps) * x[(1, 1)],
                }
                px
            })
            .collect();
        let cand = SubspaceMap::from_basis_images(m.clone(), d, images).unwrap();
        let rep = uniqueness_check(&base.phi, &cand, &m, &bs, &tau, &delta, &tol()).unwrap();
        if rep.verdict == UniquenessVerdict::PreconditionFailed {
            let l = &rep.second;
            let named = l.unital > 1e-6
                || l.range_in_delta > 1e-6
                || l.bimodule > 1e-6
                || l.trace_preserving > 1e-6;
            assert!(named, "perturbation {pert}: no named precondition identified");
            failures += 1;
        }
    }
    assert_eq!(failures, 10, "all perturbed candidates must fail preconditions");
    println!("ACCEPTANCE 10 PASS: 10 expectation constructions agree pairwise to 1e-9; 10 perturbations each fail a named precondition");
}

#[test]
fn acceptance_11_similarity_transport() {
    let nest = NestAlgebra::upper_triangular(3);
    let t3 = nest.subspace();
    let mut r = rng(15);
    for trial in 0..10 {
        let x = linalg::random_gaussian(&mut r, 3, 3) + eye(3).scale(2.5);
        let (_, rep) = similarity_transport(&nest, &x, &tol(), &mut r).unwrap();
        assert!(rep.subspace_distance <= 1e-7, "trial {trial}");
        assert!(rep.factorization_ok, "trial {trial}: factorization failed");
        assert!(rep.envelope_empty_ideal, "trial {trial}: nonempty ideal");

        // Independent check that the envelope of x T_3 x^{-1} is all of M_3.
        let xinv = x.clone().try_inverse().unwrap();
        let conj: Vec<CMat> = t3.basis().iter().map(|m| &x * m * &xinv).collect();
        let ax = subspace::span_of(&conj, &tol()).unwrap();
        let env = cstar_envelope(&ax, &tol(), &EnvelopeOptions::default(), &mut r).unwrap();
        assert!(env.shilov_blocks.is_empty());
        assert_eq!(env.envelope_dims, vec![3]);
    }
    println!("ACCEPTANCE 11 PASS: 10 similarity transports of T_3 keep envelope M_3 and factor strictly positive elements");
}

#[test]
fn acceptance_12_deterministic_reports() {
    let corpus: Vec<Command> = vec![
        Command::Generate {
            file: fixture("e12_m3.json"),
            set: "B".into(),
            common: Common::default(),
        },
        Command::Wedderburn {
            file: fixture("mult2.json"),
            set: "B".into(),
            common: Common::default(),
        },
        Command::Envelope {
            file: fixture("t3.json"),
            set: "A".into(),
            exhaustive: false,
            greedy: false,
            common: Common::default(),
        },
        Command::Envelope {
            file: fixture("m2_plus_c.json"),
            set: "A".into(),
            exhaustive: true,
            greedy: false,
            common: Common::default(),
        },
        Command::TripleEnvelope {
            file: fixture("corner_e12.json"),
            set: "X".into(),
            common: Common::default(),
        },
        Command::CheckIsometry {
            file: fixture("halving.json"),
            map: "T".into(),
            common: Common::default(),
        },
        Command::CheckIsometry {
            file: fixture("transpose.json"),
            map: "T".into(),
            common: Common::default(),
        },
        Command::AnalyzeIsometry {
            file: fixture("diag_embed.json"),
            map: "T".into(),
            common: Common::default(),
        },
        Command::BlockForm {
            file: fixture("diag_embed.json"),
            map: "T".into(),
            common: Common::default(),
        },
        Command::Factorize {
            file: fixture("t2.json"),
            algebra: "A".into(),
            matrix: "b_spd".into(),
            common: Common::default(),
        },
        Command::ClassifyLadder {
            file: fixture("t3.json"),
            algebra: "A".into(),
            ambient_algebra: None,
            common: Common::default(),
        },
        Command::Condexp {
            file: fixture("t3.json"),
            algebra: "A".into(),
            common: Common::default(),
        },
        Command::ClassifyTracial {
            file: fixture("t2_oplus_t2.json"),
            algebra: "A".into(),
            common: Common::default(),
        },
        Command::L1Check {
            file: fixture("t3.json"),
            algebra: "A".into(),
            common: Common::default(),
        },
        Command::ExploreDensity {
            file: fixture("t2.json"),
            samples: 4,
            common: Common::default(),
        },
    ];
    // Every fixture declares seed 0; two full passes must emit identical
    // machine reports apart from the wall-time field.
    for cmd in &corpus {
        let a = execute(cmd).unwrap().report.to_json_without_timing();
        let b = execute(cmd).unwrap().report.to_json_without_timing();
        assert_eq!(a, b, "nondeterministic report for {:?}", cmd);
    }
    println!("ACCEPTANCE 12 PASS: repeated seed-0 runs over the fixture corpus give byte-identical machine reports");
}
