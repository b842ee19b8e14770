//! Command dispatch, report emission, and exit-code policy for the
//! operator-algebra workbench CLI.
//!
//! Exit codes: 0 when every reported verdict is certified (or the command
//! is purely constructive), 2 when any verdict is refuted, 3 when any is
//! inconclusive, 1 for input or usage errors. Machine reports are JSON
//! with sorted keys; for a fixed seed and input digest they are
//! byte-identical except for the wall-time field.

pub mod problem;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use opalg::envelope::{self, EnvelopeOptions, SearchMode};
use opalg::error::OpalgError;
use opalg::expectation;
use opalg::isometry::{self, AnalysisOutcome};
use opalg::linalg::Tolerance;
use opalg::logmod;
use opalg::positivity::{complete_isometry, CertOptions, Verdict};
use opalg::structure;

use problem::ProblemFile;
use report::{cert_json, rung_json, verdict_str, Report};

#[derive(Error, Debug)]
pub enum CliError {
    /// Bad input or usage; exit code 1.
    #[error("{0}")]
    Input(String),
    /// A computation failed structurally; exit code 1 with diagnostics.
    #[error("{0}")]
    Compute(String),
}

impl From<OpalgError> for CliError {
    fn from(e: OpalgError) -> Self {
        match e {
            OpalgError::DegenerateInput(_)
            | OpalgError::NonHermitian { .. }
            | OpalgError::NotStrictlyPositive { .. }
            | OpalgError::RangeNotOnto(_) => CliError::Input(e.to_string()),
            other => CliError::Compute(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "opalg",
    about = "Numerical workbench for finite-dimensional operator algebras",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Seed for every randomized search (overrides the problem file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Certificate tolerance override.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Rank tolerance override.
    #[arg(long)]
    pub rank_tol: Option<f64>,
    /// Iteration cap for the feasibility solver.
    #[arg(long)]
    pub iter_cap: Option<usize>,
    /// Depth of the level-k norm falsifier.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Trials per level for randomized falsifiers.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Write the machine-readable report to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Embed certificate matrices (Choi matrices, witnesses) in the report.
    #[arg(long)]
    pub embed_certificates: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the closure of a declared set and report its structure.
    Generate {
        file: PathBuf,
        #[arg(long)]
        set: String,
        #[command(flatten)]
        common: Common,
    },
    /// Wedderburn block structure of the *-algebra generated by a set.
    Wedderburn {
        file: PathBuf,
        #[arg(long)]
        set: String,
        #[command(flatten)]
        common: Common,
    },
    /// C*-envelope and Shilov ideal of a unital declared set.
    Envelope {
        file: PathBuf,
        #[arg(long)]
        set: String,
        /// Force the exhaustive subset search.
        #[arg(long)]
        exhaustive: bool,
        /// Force the greedy subset search with self-audit.
        #[arg(long)]
        greedy: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Triple envelope (corner unitization for spaces without a unit).
    TripleEnvelope {
        file: PathBuf,
        #[arg(long)]
        set: String,
        #[command(flatten)]
        common: Common,
    },
    /// Complete-isometry certification of a declared map.
    CheckIsometry {
        file: PathBuf,
        #[arg(long)]
        map: String,
        #[command(flatten)]
        common: Common,
    },
    /// Full decomposition analysis of a certified complete isometry.
    AnalyzeIsometry {
        file: PathBuf,
        #[arg(long)]
        map: String,
        #[command(flatten)]
        common: Common,
    },
    /// U diag(A, S(A)) V form of a complete isometry on T_n.
    BlockForm {
        file: PathBuf,
        #[arg(long)]
        map: String,
        #[command(flatten)]
        common: Common,
    },
    /// Factor a strictly positive matrix through a triangular-type algebra.
    Factorize {
        file: PathBuf,
        #[arg(long)]
        algebra: String,
        #[arg(long)]
        matrix: String,
        #[command(flatten)]
        common: Common,
    },
    /// Dirichlet / factorization / logmodularity ladder classification.
    ClassifyLadder {
        file: PathBuf,
        #[arg(long)]
        algebra: String,
        /// Ambient C*-algebra (defaults to the declared ambient).
        #[arg(long)]
        ambient_algebra: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Trace-preserving conditional expectation onto the diagonal of A.
    Condexp {
        file: PathBuf,
        #[arg(long)]
        algebra: String,
        #[command(flatten)]
        common: Common,
    },
    /// Tracial / finite maximal subdiagonal classification.
    ClassifyTracial {
        file: PathBuf,
        #[arg(long)]
        algebra: String,
        #[command(flatten)]
        common: Common,
    },
    /// Spanning-density check with its hypothesis ledger.
    L1Check {
        file: PathBuf,
        #[arg(long)]
        algebra: String,
        #[command(flatten)]
        common: Common,
    },
    /// Scan random subalgebras and tabulate density of A + A*.
    ExploreDensity {
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Generate { common, .. }
            | Command::Wedderburn { common, .. }
            | Command::Envelope { common, .. }
            | Command::TripleEnvelope { common, .. }
            | Command::CheckIsometry { common, .. }
            | Command::AnalyzeIsometry { common, .. }
            | Command::BlockForm { common, .. }
            | Command::Factorize { common, .. }
            | Command::ClassifyLadder { common, .. }
            | Command::Condexp { common, .. }
            | Command::ClassifyTracial { common, .. }
            | Command::L1Check { common, .. }
            | Command::ExploreDensity { common, .. } => common,
        }
    }

    fn file(&self) -> &PathBuf {
        match self {
            Command::Generate { file, .. }
            | Command::Wedderburn { file, .. }
            | Command::Envelope { file, .. }
            | Command::TripleEnvelope { file, .. }
            | Command::CheckIsometry { file, .. }
            | Command::AnalyzeIsometry { file, .. }
            | Command::BlockForm { file, .. }
            | Command::Factorize { file, .. }
            | Command::ClassifyLadder { file, .. }
            | Command::Condexp { file, .. }
            | Command::ClassifyTracial { file, .. }
            | Command::L1Check { file, .. }
            | Command::ExploreDensity { file, .. } => file,
        }
    }

    fn echo(&self) -> String {
        match self {
            Command::Generate { set, .. } => format!("generate --set {set}"),
            Command::Wedderburn { set, .. } => format!("wedderburn --set {set}"),
            Command::Envelope {
                set,
                exhaustive,
                greedy,
                ..
            } => {
                let mode = if *exhaustive {
                    " --exhaustive"
                } else if *greedy {
                    " --greedy"
                } else {
                    ""
                };
                format!("envelope --set {set}{mode}")
            }
            Command::TripleEnvelope { set, .. } => format!("triple-envelope --set {set}"),
            Command::CheckIsometry { map, .. } => format!("check-isometry --map {map}"),
            Command::AnalyzeIsometry { map, .. } => format!("analyze-isometry --map {map}"),
            Command::BlockForm { map, .. } => format!("block-form --map {map}"),
            Command::Factorize {
                algebra, matrix, ..
            } => format!("factorize --algebra {algebra} --matrix {matrix}"),
            Command::ClassifyLadder {
                algebra,
                ambient_algebra,
                ..
            } => match ambient_algebra {
                Some(b) => format!("classify-ladder --algebra {algebra} --ambient-algebra {b}"),
                None => format!("classify-ladder --algebra {algebra}"),
            },
            Command::Condexp { algebra, .. } => format!("condexp --algebra {algebra}"),
            Command::ClassifyTracial { algebra, .. } => {
                format!("classify-tracial --algebra {algebra}")
            }
            Command::L1Check { algebra, .. } => format!("l1-check --algebra {algebra}"),
            Command::ExploreDensity { samples, .. } => {
                format!("explore-density --samples {samples}")
            }
        }
    }
}

pub struct RunOutput {
    pub report: Report,
    pub human: String,
    pub exit_code: i32,
}

fn exit_code_of(verdicts: &[Verdict]) -> i32 {
    if verdicts.iter().any(|v| *v == Verdict::Refuted) {
        2
    } else if verdicts.iter().any(|v| *v == Verdict::Inconclusive) {
        3
    } else {
        0
    }
}

/// Runs one command against one problem file.
pub fn execute(cmd: &Command) -> Result<RunOutput, CliError> {
    let start = std::time::Instant::now();
    let text = std::fs::read_to_string(cmd.file())
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", cmd.file().display())))?;
    let pf = ProblemFile::parse(&text)?;
    let common = cmd.common();
    let mut tol = pf.tolerance();
    if let Some(t) = common.tol {
        tol.cert_tol = t;
    }
    if let Some(r) = common.rank_tol {
        tol.rank_tol = r;
    }
    if let Some(i) = common.iter_cap {
        tol.iter_cap = i;
    }
    let seed = common.seed.unwrap_or(pf.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cert_opts = CertOptions::default();
    if let Some(l) = common.levels {
        cert_opts.falsifier_levels = l;
    }
    if let Some(t) = common.trials {
        cert_opts.falsifier_trials = t;
        cert_opts.witness_trials = t.max(cert_opts.witness_trials);
    }
    let embed = common.embed_certificates;

    let (results, verdicts, human) = dispatch(cmd, &pf, &tol, &cert_opts, embed, &mut rng)?;
    let exit_code = exit_code_of(&verdicts);
    let report = Report {
        command: cmd.echo(),
        input_digest: pf.digest(),
        seed,
        tolerances: json!({
            "rank_tol": tol.rank_tol,
            "cert_tol": tol.cert_tol,
            "iter_cap": tol.iter_cap,
        }),
        results,
        exit_code,
        wall_time_ms: start.elapsed().as_millis(),
    };
    Ok(RunOutput {
        report,
        human,
        exit_code,
    })
}

#[allow(clippy::type_complexity)]
fn dispatch(
    cmd: &Command,
    pf: &ProblemFile,
    tol: &Tolerance,
    cert_opts: &CertOptions,
    embed: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(serde_json::Value, Vec<Verdict>, String), CliError> {
    match cmd {
        Command::Generate { set, .. } => {
            let space = pf.resolve_set(set, tol)?;
            let flags = json!({
                "unital": space.check_unital(tol),
                "selfadjoint": space.check_selfadjoint(tol),
                "algebra": space.check_algebra(tol),
                "star_algebra": space.check_star_algebra(tol),
                "triple_system": space.check_triple_system(tol),
            });
            let human = format!(
                "generated '{set}': dimension {} in M_{}\nflags: {}",
                space.dim(),
                space.ambient_dim(),
                flags
            );
            Ok((
                json!({"set": set, "dim": space.dim(), "ambient_dim": space.ambient_dim(), "flags": flags}),
                vec![],
                human,
            ))
        }

        Command::Wedderburn { set, .. } => {
            let mut space = pf.resolve_set(set, tol)?;
            if !space.check_star_algebra(tol) {
                space = opalg::subspace::generate(
                    &opalg::subspace::GeneratorSet {
                        ambient_dim: space.ambient_dim(),
                        generators: space.basis().to_vec(),
                        mode: opalg::subspace::GeneratorMode::StarAlgebra,
                    },
                    tol,
                )?;
            }
            let bs = structure::wedderburn(&space, tol, rng)?;
            let blocks: Vec<_> = bs
                .block_dims
                .iter()
                .zip(&bs.multiplicities)
                .map(|(n, m)| json!({"dim": n, "multiplicity": m}))
                .collect();
            let human = format!(
                "wedderburn of '{set}': dim {} = sum of squares of {:?}, multiplicities {:?}",
                space.dim(),
                bs.block_dims,
                bs.multiplicities
            );
            Ok((
                json!({"set": set, "algebra_dim": space.dim(), "blocks": blocks}),
                vec![],
                human,
            ))
        }

        Command::Envelope {
            set,
            exhaustive,
            greedy,
            ..
        } => {
            let space = pf.resolve_set(set, tol)?;
            let mode = if *exhaustive {
                SearchMode::Exhaustive
            } else if *greedy {
                SearchMode::Greedy
            } else {
                SearchMode::Auto
            };
            let opts = EnvelopeOptions {
                mode,
                cert: *cert_opts,
            };
            match envelope::cstar_envelope(&space, tol, &opts, rng) {
                Ok(env) => {
                    let certs: Vec<_> = env
                        .certificates
                        .iter()
                        .map(|(s, c)| json!({"subset": s, "certificate": cert_json(c, embed)}))
                        .collect();
                    let human = format!(
                        "envelope of '{set}': generated *-algebra dim {}, blocks {:?} x {:?},\n\
                         shilov ideal blocks {:?}, envelope block dims {:?}",
                        env.generated_algebra.dim(),
                        env.blocks.block_dims,
                        env.blocks.multiplicities,
                        env.shilov_blocks,
                        env.envelope_dims
                    );
                    Ok((
                        json!({
                            "set": set,
                            "generated_dim": env.generated_algebra.dim(),
                            "block_dims": env.blocks.block_dims,
                            "multiplicities": env.blocks.multiplicities,
                            "shilov_blocks": env.shilov_blocks,
                            "envelope_dims": env.envelope_dims,
                            "subset_certificates": certs,
                        }),
                        vec![Verdict::Certified],
                        human,
                    ))
                }
                Err(OpalgError::EnvelopeInconclusive(msg)) => Ok((
                    json!({"set": set, "inconclusive": msg}),
                    vec![Verdict::Inconclusive],
                    format!("envelope of '{set}': inconclusive: {msg}"),
                )),
                Err(e) => Err(e.into()),
            }
        }

        Command::TripleEnvelope { set, .. } => {
            let space = pf.resolve_set(set, tol)?;
            let opts = EnvelopeOptions {
                mode: SearchMode::Auto,
                cert: *cert_opts,
            };
            match envelope::triple_envelope(&space, tol, &opts, rng) {
                Ok(te) => {
                    let human = format!(
                        "triple envelope of '{set}': unitized = {}, triple system dim {}, \
                         envelope block dims {:?}",
                        te.unitized,
                        te.triple_system.dim(),
                        te.base.envelope_dims
                    );
                    Ok((
                        json!({
                            "set": set,
                            "unitized": te.unitized,
                            "triple_system_dim": te.triple_system.dim(),
                            "envelope_dims": te.base.envelope_dims,
                            "shilov_blocks": te.base.shilov_blocks,
                        }),
                        vec![Verdict::Certified],
                        human,
                    ))
                }
                Err(OpalgError::EnvelopeInconclusive(msg)) => Ok((
                    json!({"set": set, "inconclusive": msg}),
                    vec![Verdict::Inconclusive],
                    format!("triple envelope of '{set}': inconclusive: {msg}"),
                )),
                Err(e) => Err(e.into()),
            }
        }

        Command::CheckIsometry { map, .. } => {
            let t = pf.resolve_map(map, tol)?;
            let unital = t.is_unital(tol);
            let cert = complete_isometry(&t, unital, tol, cert_opts, rng)?;
            let human = format!(
                "check-isometry '{map}': {} (residual {:.3e}; {})",
                verdict_str(cert.verdict),
                cert.residual,
                cert.detail
            );
            let verdict = cert.verdict;
            Ok((
                json!({"map": map, "unital": unital, "certificate": cert_json(&cert, embed)}),
                vec![verdict],
                human,
            ))
        }

        Command::AnalyzeIsometry { map, .. } => {
            let t = pf.resolve_map(map, tol)?;
            match isometry::analyze(&t, None, tol, cert_opts, rng)? {
                AnalysisOutcome::NotCompletelyIsometric(cert) => {
                    let human = format!(
                        "analyze-isometry '{map}': map is not a certified complete isometry: {} ({})",
                        verdict_str(cert.verdict),
                        cert.detail
                    );
                    let verdict = cert.verdict;
                    Ok((
                        json!({"map": map, "certificate": cert_json(&cert, embed)}),
                        vec![verdict],
                        human,
                    ))
                }
                AnalysisOutcome::Analyzed(a) => {
                    let type1 = if a.left_type1 {
                        let rep = isometry::type1_consequences(&t, &a, tol, rng)?;
                        json!({
                            "commutation_residual": rep.commutation_residual,
                            "product_identity_residual": rep.product_identity_residual,
                            "u_theta_residual": rep.u_theta_residual,
                            "coisometry_residual": rep.coisometry_residual,
                            "bound_constant": rep.bound_constant,
                            "t1_invertible": rep.t1_invertible,
                        })
                    } else {
                        json!(null)
                    };
                    let human = format!(
                        "analyze-isometry '{map}': shilov = {}, left_type1 = {}, right_type1 = {},\n\
                         triple system dim {}, ideal blocks {:?}, star-product residual {:.3e}",
                        a.shilov,
                        a.left_type1,
                        a.right_type1,
                        a.triple_system.dim(),
                        a.ideal_blocks,
                        a.star_product.max_residual
                    );
                    Ok((
                        json!({
                            "map": map,
                            "shilov": a.shilov,
                            "left_type1": a.left_type1,
                            "right_type1": a.right_type1,
                            "triple_system_dim": a.triple_system.dim(),
                            "ideal_blocks": a.ideal_blocks,
                            "star_product_max_residual": a.star_product.max_residual,
                            "theta_multiplicativity_residual": a.theta.multiplicativity_residual(),
                            "type1_consequences": type1,
                        }),
                        vec![Verdict::Certified],
                        human,
                    ))
                }
            }
        }

        Command::BlockForm { map, .. } => {
            let t = pf.resolve_map(map, tol)?;
            let bf = isometry::block_form_t_n(&t, tol, cert_opts, rng)?;
            let human = format!(
                "block-form '{map}': reconstruction residual {:.3e}, corner map into M_{}",
                bf.reconstruction_residual,
                bf.s.codomain_dim()
            );
            let mut results = json!({
                "map": map,
                "reconstruction_residual": bf.reconstruction_residual,
                "corner_dim": bf.s.codomain_dim(),
            });
            if embed {
                results["u"] = json!(problem::matrix_to_data(&bf.u));
                results["v"] = json!(problem::matrix_to_data(&bf.v));
            }
            Ok((results, vec![Verdict::Certified], human))
        }

        Command::Factorize {
            algebra, matrix, ..
        } => {
            let space = pf.resolve_set(algebra, tol)?;
            let decl_mode = pf
                .declarations
                .get(algebra)
                .map(|d| d.mode.clone())
                .unwrap_or_default();
            let nest = if decl_mode == "upper_triangular" {
                Some(logmod::NestAlgebra::upper_triangular(pf.ambient_dim()))
            } else {
                logmod::detect_nest(&space, tol)
            };
            let b = pf.matrix(matrix)?;
            match nest {
                None => Ok((
                    json!({"algebra": algebra, "matrix": matrix,
                           "inconclusive": "no nest descriptor applies; factorization undecided"}),
                    vec![Verdict::Inconclusive],
                    format!("factorize: no constructive factorization known for '{algebra}'"),
                )),
                Some(n) => match logmod::factorize(&n, &b, tol) {
                    Ok(a) => {
                        let residual =
                            opalg::linalg::hs_norm(&(a.adjoint() * &a - &b));
                        let human = format!(
                            "factorize '{matrix}' through '{algebra}': residual {residual:.3e}"
                        );
                        let mut results = json!({
                            "algebra": algebra, "matrix": matrix, "residual": residual,
                        });
                        results["factor"] = json!(problem::matrix_to_data(&a));
                        Ok((results, vec![Verdict::Certified], human))
                    }
                    Err(OpalgError::UnsupportedAlgebra(msg)) => Ok((
                        json!({"algebra": algebra, "matrix": matrix, "inconclusive": msg}),
                        vec![Verdict::Inconclusive],
                        format!("factorize: {msg}"),
                    )),
                    Err(e) => Err(e.into()),
                },
            }
        }

        Command::ClassifyLadder {
            algebra,
            ambient_algebra,
            ..
        } => {
            let a = pf.resolve_set(algebra, tol)?;
            let b = match ambient_algebra {
                Some(name) => pf.resolve_set(name, tol)?,
                None => pf.ambient_subspace(),
            };
            let rep = logmod::classify(&a, &b, None, tol, rng)?;
            let statuses = [
                ("dirichlet", rep.dirichlet),
                ("factorization", rep.factorization),
                ("logmodular", rep.logmodular),
                ("logrigged", rep.logrigged),
                ("conv_approx_left", rep.conv_approx_left),
                ("conv_approx_right", rep.conv_approx_right),
            ];
            let mut verdicts = Vec::new();
            for (_, s) in &statuses {
                verdicts.push(if s.is_certified() {
                    Verdict::Certified
                } else if s.is_refuted() {
                    Verdict::Refuted
                } else {
                    Verdict::Inconclusive
                });
            }
            let human = statuses
                .iter()
                .map(|(n, s)| format!("{n}: {}", rung_json(*s)))
                .collect::<Vec<_>>()
                .join("\n");
            Ok((
                json!({
                    "algebra": algebra,
                    "rungs": statuses.iter().map(|(n, s)| json!({"rung": n, "status": rung_json(*s)})).collect::<Vec<_>>(),
                    "envelope_empty_ideal": rep.envelope_empty_ideal,
                    "notes": rep.notes,
                }),
                verdicts,
                format!("classify-ladder '{algebra}':\n{human}"),
            ))
        }

        Command::Condexp { algebra, .. } => {
            let m = pf.ambient_subspace();
            let bs = pf.ambient_blocks();
            let tau = pf.trace_state();
            let a = pf.resolve_set(algebra, tol)?;
            let res = expectation::cond_exp(&m, &bs, &tau, &a, tol, rng)?;
            let human = format!(
                "condexp onto diagonal of '{algebra}': delta dim {}, bimodule residual {:.3e},\n\
                 trace residual {:.3e}, multiplicative on A: {}",
                res.delta.dim(),
                res.bimodule_residual,
                res.trace_preservation_residual,
                verdict_str(res.multiplicative_on_a.verdict)
            );
            let mut results = json!({
                "algebra": algebra,
                "delta_dim": res.delta.dim(),
                "bimodule_residual": res.bimodule_residual,
                "trace_preservation_residual": res.trace_preservation_residual,
                "idempotent_residual": res.idempotent_residual,
                "unital_residual": res.unital_residual,
                "gram_condition": res.gram_condition,
                "multiplicative_on_a": cert_json(&res.multiplicative_on_a, false),
            });
            if embed {
                results["phi_images"] = json!(res
                    .phi
                    .images()
                    .iter()
                    .map(problem::matrix_to_data)
                    .collect::<Vec<_>>());
            }
            Ok((results, vec![Verdict::Certified], human))
        }

        Command::ClassifyTracial { algebra, .. } => {
            let m = pf.ambient_subspace();
            let bs = pf.ambient_blocks();
            let tau = pf.trace_state();
            let a = pf.resolve_set(algebra, tol)?;
            let rep = expectation::classify_tracial(&m, &bs, &tau, &a, tol, rng)?;
            let mut verdicts = vec![Verdict::Certified];
            if rep.envelope_matches == Some(false) || rep.factorization_ok == Some(false) {
                verdicts.push(Verdict::Refuted);
            }
            let human = format!(
                "classify-tracial '{algebra}': tracial = {}, subdiagonal = {}, \
                 envelope matches M = {:?}, factorization = {:?}",
                rep.tracial, rep.subdiagonal, rep.envelope_matches, rep.factorization_ok
            );
            Ok((
                json!({
                    "algebra": algebra,
                    "tracial": rep.tracial,
                    "subdiagonal": rep.subdiagonal,
                    "envelope_matches": rep.envelope_matches,
                    "factorization_ok": rep.factorization_ok,
                    "multiplicative_on_a": cert_json(&rep.expectation.multiplicative_on_a, false),
                }),
                verdicts,
                human,
            ))
        }

        Command::L1Check { algebra, .. } => {
            let m = pf.ambient_subspace();
            let bs = pf.ambient_blocks();
            let tau = pf.trace_state();
            let a = pf.resolve_set(algebra, tol)?;
            let rep = expectation::l1_density_check(&m, &bs, &tau, &a, tol, rng)?;
            let human = format!(
                "l1-check '{algebra}': delta central = {}, tracial = {}, span(A + A*) = M: {}",
                rep.delta_central, rep.tracial, rep.span_equals_m
            );
            Ok((
                json!({
                    "algebra": algebra,
                    "delta_central": rep.delta_central,
                    "tracial": rep.tracial,
                    "span_equals_m": rep.span_equals_m,
                }),
                vec![],
                human,
            ))
        }

        Command::ExploreDensity { samples, .. } => {
            let m = pf.ambient_subspace();
            let bs = pf.ambient_blocks();
            let tau = pf.trace_state();
            let rows = expectation::density_scan(&m, &bs, &tau, *samples, tol, rng)?;
            let human = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    format!(
                        "sample {i}: dim {} tracial={} dense={}",
                        r.algebra_dim, r.tracial, r.dense
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            Ok((
                json!({
                    "samples": rows.iter().map(|r| json!({
                        "algebra_dim": r.algebra_dim,
                        "tracial": r.tracial,
                        "dense": r.dense,
                    })).collect::<Vec<_>>(),
                }),
                vec![],
                format!("explore-density:\n{human}"),
            ))
        }
    }
}
