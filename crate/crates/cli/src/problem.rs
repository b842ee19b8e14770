//! Problem-file schema: ambient algebra, named matrices, generator
//! declarations, and maps, in a single JSON format with complex entries as
//! `[re, im]` pairs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use opalg::linalg::{direct_sum, eye, CMat, Tolerance};
use opalg::structure::BlockStructure;
use opalg::subspace::{self, GeneratorMode, GeneratorSet, Subspace};
use opalg::SubspaceMap;

use crate::CliError;

/// Ambient algebra: a full `M_d`, or a block direct sum `⊕_k M_{n_k}` with
/// per-block trace masses, realized block-diagonally inside `M_d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ambient {
    Dim { dim: usize },
    Blocks { blocks: Vec<BlockSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockSpec {
    pub dim: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Declaration {
    /// One of `span`, `algebra`, `star_algebra`, `triple_system`,
    /// `operator_system`, `upper_triangular`, `diagonal`, `full`.
    pub mode: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapDecl {
    /// Names of spanning matrices of the domain.
    pub basis: Vec<String>,
    /// Names of their images, in the same order.
    pub images: Vec<String>,
    /// Codomain ambient dimension (defaults to the ambient dimension).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codomain_dim: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TolSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cert_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iter_cap: Option<usize>,
}

/// Matrix entries as rows of `[re, im]` pairs.
pub type MatrixData = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub ambient: Ambient,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub matrices: BTreeMap<String, MatrixData>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub declarations: BTreeMap<String, Declaration>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub maps: BTreeMap<String, MapDecl>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolSpec>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let pf: ProblemFile = serde_json::from_str(text).map_err(|e| {
            CliError::Input(format!(
                "parse error at line {}, column {}: {}",
                e.line(),
                e.column(),
                e
            ))
        })?;
        pf.validate()?;
        Ok(pf)
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.ambient {
            Ambient::Dim { dim } => *dim,
            Ambient::Blocks { blocks } => blocks.iter().map(|b| b.dim).sum(),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let d = self.ambient_dim();
        if d == 0 {
            return Err(CliError::Input("ambient: dimension must be positive".into()));
        }
        if let Ambient::Blocks { blocks } = &self.ambient {
            let total: f64 = blocks.iter().map(|b| b.weight).sum();
            if blocks.iter().any(|b| b.weight <= 0.0) {
                return Err(CliError::Input(
                    "ambient.blocks: weights must be strictly positive".into(),
                ));
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(CliError::Input(format!(
                    "ambient.blocks: weights must sum to 1 (got {total})"
                )));
            }
        }
        for (name, rows) in &self.matrices {
            let r = rows.len();
            if r == 0 || rows.iter().any(|row| row.len() != r) {
                return Err(CliError::Input(format!(
                    "matrices.{name}: must be a nonempty square array"
                )));
            }
        }
        for (name, decl) in &self.declarations {
            match decl.mode.as_str() {
                "span" | "algebra" | "star_algebra" | "triple_system" | "operator_system" => {
                    if decl.generators.is_empty() {
                        return Err(CliError::Input(format!(
                            "declarations.{name}: mode '{}' needs generators",
                            decl.mode
                        )));
                    }
                    for g in &decl.generators {
                        let rows = self.matrices.get(g).ok_or_else(|| {
                            CliError::Input(format!(
                                "declarations.{name}: unknown matrix '{g}'"
                            ))
                        })?;
                        if rows.len() != d {
                            return Err(CliError::Input(format!(
                                "declarations.{name}: generator '{g}' is {}x{} but the \
                                 ambient dimension is {d}",
                                rows.len(),
                                rows.len()
                            )));
                        }
                    }
                }
                "upper_triangular" | "diagonal" | "full" => {}
                other => {
                    return Err(CliError::Input(format!(
                        "declarations.{name}: unknown mode '{other}'"
                    )))
                }
            }
        }
        for (name, map) in &self.maps {
            if map.basis.len() != map.images.len() {
                return Err(CliError::Input(format!(
                    "maps.{name}: basis and images must have equal length"
                )));
            }
            let e = map.codomain_dim.unwrap_or(d);
            for b in &map.basis {
                let rows = self.matrices.get(b).ok_or_else(|| {
                    CliError::Input(format!("maps.{name}: unknown matrix '{b}'"))
                })?;
                if rows.len() != d {
                    return Err(CliError::Input(format!(
                        "maps.{name}: basis matrix '{b}' does not match the ambient dimension"
                    )));
                }
            }
            for y in &map.images {
                let rows = self.matrices.get(y).ok_or_else(|| {
                    CliError::Input(format!("maps.{name}: unknown matrix '{y}'"))
                })?;
                if rows.len() != e {
                    return Err(CliError::Input(format!(
                        "maps.{name}: image matrix '{y}' does not match codomain dimension {e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical serialization (sorted keys) used for the input digest and
    /// the round-trip invariant.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("problem files serialize")
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        let mut s = String::with_capacity(71);
        s.push_str("sha256:");
        for b in hash {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn tolerance(&self) -> Tolerance {
        let mut t = Tolerance::default();
        if let Some(spec) = &self.tolerances {
            if let Some(r) = spec.rank_tol {
                t.rank_tol = r;
            }
            if let Some(c) = spec.cert_tol {
                t.cert_tol = c;
            }
            if let Some(i) = spec.iter_cap {
                t.iter_cap = i;
            }
        }
        t
    }

    pub fn matrix(&self, name: &str) -> Result<CMat, CliError> {
        let rows = self
            .matrices
            .get(name)
            .ok_or_else(|| CliError::Input(format!("unknown matrix '{name}'")))?;
        let n = rows.len();
        Ok(CMat::from_fn(n, n, |i, j| {
            opalg::linalg::c(rows[i][j][0], rows[i][j][1])
        }))
    }

    /// The ambient algebra `M` as a subspace (block-diagonally supported
    /// matrix units for block ambients).
    pub fn ambient_subspace(&self) -> Subspace {
        let d = self.ambient_dim();
        match &self.ambient {
            Ambient::Dim { .. } => Subspace::full(d),
            Ambient::Blocks { blocks } => {
                let mut basis = Vec::new();
                let mut off = 0;
                for b in blocks {
                    for i in 0..b.dim {
                        for j in 0..b.dim {
                            basis.push(opalg::linalg::matrix_unit(d, off + i, off + j));
                        }
                    }
                    off += b.dim;
                }
                Subspace::from_orthonormal_basis(d, basis, &self.tolerance())
                    .expect("block matrix units are orthonormal")
            }
        }
    }

    /// Deterministic block structure of the ambient algebra (no randomized
    /// recovery needed: the blocks are declared).
    pub fn ambient_blocks(&self) -> BlockStructure {
        let d = self.ambient_dim();
        match &self.ambient {
            Ambient::Dim { .. } => BlockStructure {
                central_projections: vec![eye(d)],
                block_dims: vec![d],
                multiplicities: vec![1],
                basis_unitary: eye(d),
                block_iso: vec![SubspaceMap::identity(Subspace::full(d))],
            },
            Ambient::Blocks { blocks } => {
                let mut projections = Vec::new();
                let mut block_iso = Vec::new();
                let mut off = 0;
                for b in blocks {
                    let mut p = CMat::zeros(d, d);
                    for i in 0..b.dim {
                        p[(off + i, off + i)] = opalg::linalg::cre(1.0);
                    }
                    projections.push(p);
                    let dom = Subspace::full(b.dim);
                    let images: Vec<CMat> = dom
                        .basis()
                        .iter()
                        .map(|unit| {
                            let mut m = CMat::zeros(d, d);
                            m.view_mut((off, off), (b.dim, b.dim)).copy_from(unit);
                            m
                        })
                        .collect();
                    block_iso.push(
                        SubspaceMap::from_basis_images(dom, d, images)
                            .expect("block embedding is well formed"),
                    );
                    off += b.dim;
                }
                BlockStructure {
                    central_projections: projections,
                    block_dims: blocks.iter().map(|b| b.dim).collect(),
                    multiplicities: vec![1; blocks.len()],
                    basis_unitary: eye(d),
                    block_iso,
                }
            }
        }
    }

    /// Trace state induced by the declared block weights (the normalized
    /// trace for a plain `M_d` ambient).
    pub fn trace_state(&self) -> opalg::expectation::TraceState {
        let bs = self.ambient_blocks();
        match &self.ambient {
            Ambient::Dim { .. } => opalg::expectation::TraceState::normalized(&bs),
            Ambient::Blocks { blocks } => {
                let masses: Vec<f64> = blocks.iter().map(|b| b.weight).collect();
                opalg::expectation::TraceState::from_block_masses(&bs, &masses)
                    .expect("weights were validated")
            }
        }
    }

    /// Resolves a declaration into a subspace.
    pub fn resolve_set(&self, name: &str, tol: &Tolerance) -> Result<Subspace, CliError> {
        let d = self.ambient_dim();
        let decl = self
            .declarations
            .get(name)
            .ok_or_else(|| CliError::Input(format!("unknown declaration '{name}'")))?;
        let gens: Result<Vec<CMat>, CliError> =
            decl.generators.iter().map(|g| self.matrix(g)).collect();
        let gens = gens?;
        let space = match decl.mode.as_str() {
            "span" => subspace::span_of(&gens, tol).map_err(CliError::from)?,
            "algebra" => subspace::generate(
                &GeneratorSet {
                    ambient_dim: d,
                    generators: gens,
                    mode: GeneratorMode::Algebra,
                },
                tol,
            )
            .map_err(CliError::from)?,
            "star_algebra" => subspace::generate(
                &GeneratorSet {
                    ambient_dim: d,
                    generators: gens,
                    mode: GeneratorMode::StarAlgebra,
                },
                tol,
            )
            .map_err(CliError::from)?,
            "triple_system" => subspace::generate(
                &GeneratorSet {
                    ambient_dim: d,
                    generators: gens,
                    mode: GeneratorMode::TripleSystem,
                },
                tol,
            )
            .map_err(CliError::from)?,
            "operator_system" => subspace::generate(
                &GeneratorSet {
                    ambient_dim: d,
                    generators: gens,
                    mode: GeneratorMode::OperatorSystem,
                },
                tol,
            )
            .map_err(CliError::from)?,
            "upper_triangular" => Subspace::upper_triangular(d),
            "diagonal" => Subspace::diagonal(d),
            "full" => Subspace::full(d),
            other => return Err(CliError::Input(format!("unknown mode '{other}'"))),
        };
        Ok(space)
    }

    /// Resolves a map declaration into a `SubspaceMap`.
    pub fn resolve_map(&self, name: &str, tol: &Tolerance) -> Result<SubspaceMap, CliError> {
        let d = self.ambient_dim();
        let decl = self
            .maps
            .get(name)
            .ok_or_else(|| CliError::Input(format!("unknown map '{name}'")))?;
        let e = decl.codomain_dim.unwrap_or(d);
        let pairs: Result<Vec<(CMat, CMat)>, CliError> = decl
            .basis
            .iter()
            .zip(&decl.images)
            .map(|(b, y)| Ok((self.matrix(b)?, self.matrix(y)?)))
            .collect();
        SubspaceMap::from_pairs(d, &pairs?, e, tol).map_err(CliError::from)
    }
}

/// Encodes a matrix for reports: rows of `[re, im]` pairs.
pub fn matrix_to_data(m: &CMat) -> MatrixData {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Builds a block-diagonal matrix from per-block pieces (fixture helper).
pub fn assemble_blocks(parts: &[CMat]) -> CMat {
    direct_sum(parts)
}
