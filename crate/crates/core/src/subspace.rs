//! Operator subspaces of `M_d`.
//!
//! A [`Subspace`] is held as a Hilbert–Schmidt-orthonormal basis together
//! with cached structure flags. Generation closes a set of matrices under
//! products, adjoints, or triple products `x y* z` until the dimension
//! stabilizes; the basis is re-orthonormalized after every closure round so
//! long product chains do not degrade conditioning.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::error::OpalgError;
use crate::linalg::{
    self, cre, eye, hs_inner, hs_norm, matrix_unit, op_norm, svd, vec_row, CMat, Tolerance,
};
use crate::Result;

/// Closure mode for [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorMode {
    /// Unital algebra: closed under products, identity adjoined.
    Algebra,
    /// Unital *-algebra: products and adjoints, identity adjoined.
    StarAlgebra,
    /// Triple system: closed under `x y* z`; no identity adjoined.
    TripleSystem,
    /// Operator system: adjoints and identity only.
    OperatorSystem,
}

/// A set of generating matrices with a closure mode.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub ambient_dim: usize,
    pub generators: Vec<CMat>,
    pub mode: GeneratorMode,
}

/// Cached structure verdicts; `None` means not yet checked.
#[derive(Debug, Clone, Copy, Default)]
pub struct Flags {
    pub unital: Option<bool>,
    pub selfadjoint: Option<bool>,
    pub algebra: Option<bool>,
    pub star_algebra: Option<bool>,
    pub triple_system: Option<bool>,
}

/// A linear subspace of `M_d` held as an HS-orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<CMat>,
    pub flags: Flags,
}

fn scale_complex(m: &CMat, c: Complex64) -> CMat {
    m.map(|z| z * c)
}

/// Gram–Schmidt step: orthogonalize `cand` against `basis` (two passes) and
/// append it when the remainder is relatively larger than `rank_tol`.
///
/// Candidates are products of unit-HS-norm elements, so anything below the
/// absolute floor is a numerically zero product, not a new direction.
pub(crate) fn mgs_append(basis: &mut Vec<CMat>, cand: &CMat, rank_tol: f64) -> bool {
    let norm0 = hs_norm(cand);
    if norm0 <= rank_tol.max(1e-12) {
        return false;
    }
    let mut r = cand.clone();
    for _ in 0..2 {
        for b in basis.iter() {
            let coeff = hs_inner(&r, b);
            r -= scale_complex(b, coeff);
        }
    }
    let n = hs_norm(&r);
    if n > (rank_tol * norm0).max(1e-12) {
        basis.push(r.map(|z| z / n));
        true
    } else {
        false
    }
}

/// HS-orthonormal basis of the span of `mats`, by singular-value
/// thresholding at `rank_tol` (relative to the largest singular value).
pub fn span_of(mats: &[CMat], tol: &Tolerance) -> Result<Subspace> {
    if mats.is_empty() {
        return Err(OpalgError::DegenerateInput(
            "span_of of an empty list has no ambient dimension; use Subspace::zero".into(),
        ));
    }
    let d = mats[0].nrows();
    for m in mats {
        if m.shape() != (d, d) {
            return Err(OpalgError::DegenerateInput(format!(
                "span_of needs a common square shape, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    let k = mats.len();
    let mut stack = CMat::zeros(k, d * d);
    for (i, m) in mats.iter().enumerate() {
        let v = vec_row(m);
        for j in 0..d * d {
            stack[(i, j)] = v[j];
        }
    }
    let (_, s, vh) = svd(&stack);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let mut basis = Vec::new();
    for (i, &sigma) in s.iter().enumerate() {
        if sigma > tol.rank_tol * smax.max(1e-300) {
            let row = vh.row(i).transpose();
            basis.push(linalg::unvec_row(&row, d, d));
        }
    }
    Ok(Subspace {
        ambient_dim: d,
        basis,
        flags: Flags::default(),
    })
}

/// Smallest subspace containing the generators, closed per the mode.
///
/// Each round adds one layer of products (or triple products), re-spans, and
/// stops when the dimension stabilizes; the dimension is bounded by `d²` so
/// the loop always terminates.
pub fn generate(g: &GeneratorSet, tol: &Tolerance) -> Result<Subspace> {
    let d = g.ambient_dim;
    for m in &g.generators {
        if m.shape() != (d, d) {
            return Err(OpalgError::DegenerateInput(
                "generator shape does not match ambient dimension".into(),
            ));
        }
    }
    let mut seed: Vec<CMat> = g.generators.clone();
    match g.mode {
        GeneratorMode::Algebra => seed.push(eye(d)),
        GeneratorMode::StarAlgebra | GeneratorMode::OperatorSystem => {
            seed.extend(g.generators.iter().map(|m| m.adjoint()));
            seed.push(eye(d));
        }
        GeneratorMode::TripleSystem => {}
    }
    let mut space = if seed.is_empty() {
        Subspace::zero(d)
    } else {
        span_of(&seed, tol)?
    };

    for _round in 0..d * d {
        if space.dim() == d * d {
            break;
        }
        let mut basis = space.basis.clone();
        let mut grew = false;
        match g.mode {
            GeneratorMode::Algebra | GeneratorMode::StarAlgebra => {
                let cur = basis.clone();
                for x in &cur {
                    for y in &cur {
                        grew |= mgs_append(&mut basis, &(x * y), tol.rank_tol);
                    }
                }
                if g.mode == GeneratorMode::StarAlgebra {
                    let cur2 = basis.clone();
                    for x in &cur2 {
                        grew |= mgs_append(&mut basis, &x.adjoint(), tol.rank_tol);
                    }
                }
            }
            GeneratorMode::TripleSystem => {
                let cur = basis.clone();
                'outer: for x in &cur {
                    for y in &cur {
                        let xy = x * y.adjoint();
                        for z in &cur {
                            grew |= mgs_append(&mut basis, &(&xy * z), tol.rank_tol);
                            if basis.len() == d * d {
                                break 'outer;
                            }
                        }
                    }
                }
            }
            GeneratorMode::OperatorSystem => {
                let cur = basis.clone();
                for x in &cur {
                    grew |= mgs_append(&mut basis, &x.adjoint(), tol.rank_tol);
                }
            }
        }
        // Full re-orthonormalization between rounds.
        let respanned = span_of(&basis, tol)?;
        if !grew && respanned.dim() == space.dim() {
            space = respanned;
            break;
        }
        space = respanned;
    }

    space.flags = match g.mode {
        GeneratorMode::Algebra => Flags {
            unital: Some(true),
            algebra: Some(true),
            ..Flags::default()
        },
        GeneratorMode::StarAlgebra => Flags {
            unital: Some(true),
            selfadjoint: Some(true),
            algebra: Some(true),
            star_algebra: Some(true),
            triple_system: Some(true),
        },
        GeneratorMode::TripleSystem => Flags {
            triple_system: Some(true),
            ..Flags::default()
        },
        GeneratorMode::OperatorSystem => Flags {
            unital: Some(true),
            selfadjoint: Some(true),
            ..Flags::default()
        },
    };
    Ok(space)
}

impl Subspace {
    pub fn zero(d: usize) -> Self {
        Subspace {
            ambient_dim: d,
            basis: vec![],
            flags: Flags::default(),
        }
    }

    /// All of `M_d`, with the matrix-unit basis.
    pub fn full(d: usize) -> Self {
        let mut basis = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                basis.push(matrix_unit(d, i, j));
            }
        }
        Subspace {
            ambient_dim: d,
            basis,
            flags: Flags {
                unital: Some(true),
                selfadjoint: Some(true),
                algebra: Some(true),
                star_algebra: Some(true),
                triple_system: Some(true),
            },
        }
    }

    /// Upper triangular matrices `T_n`.
    pub fn upper_triangular(n: usize) -> Self {
        let mut basis = Vec::new();
        for i in 0..n {
            for j in i..n {
                basis.push(matrix_unit(n, i, j));
            }
        }
        Subspace {
            ambient_dim: n,
            basis,
            flags: Flags {
                unital: Some(true),
                algebra: Some(true),
                selfadjoint: Some(n <= 1),
                star_algebra: Some(n <= 1),
                triple_system: None,
            },
        }
    }

    /// Diagonal matrices in `M_n`.
    pub fn diagonal(n: usize) -> Self {
        let basis = (0..n).map(|i| matrix_unit(n, i, i)).collect();
        Subspace {
            ambient_dim: n,
            basis,
            flags: Flags {
                unital: Some(true),
                selfadjoint: Some(true),
                algebra: Some(true),
                star_algebra: Some(true),
                triple_system: Some(true),
            },
        }
    }

    /// Builds a subspace directly from an already HS-orthonormal basis.
    pub fn from_orthonormal_basis(d: usize, basis: Vec<CMat>, tol: &Tolerance) -> Result<Self> {
        for (i, a) in basis.iter().enumerate() {
            if a.shape() != (d, d) {
                return Err(OpalgError::DegenerateInput("basis shape mismatch".into()));
            }
            for (j, b) in basis.iter().enumerate() {
                let g = hs_inner(a, b);
                let expect = if i == j { 1.0 } else { 0.0 };
                if (g - cre(expect)).norm() > tol.cert_tol * 10.0 {
                    return Err(OpalgError::DegenerateInput(format!(
                        "basis is not HS-orthonormal at pair ({i},{j})"
                    )));
                }
            }
        }
        Ok(Subspace {
            ambient_dim: d,
            basis,
            flags: Flags::default(),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    /// HS coordinates of `m` with respect to the orthonormal basis.
    pub fn coords(&self, m: &CMat) -> Vec<Complex64> {
        self.basis.iter().map(|b| hs_inner(m, b)).collect()
    }

    /// Orthogonal projection of `m` onto the subspace.
    pub fn project(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(self.ambient_dim, self.ambient_dim);
        for b in &self.basis {
            let c = hs_inner(m, b);
            out += scale_complex(b, c);
        }
        out
    }

    /// Distance from `m` to the subspace.
    pub fn distance(&self, m: &CMat) -> f64 {
        hs_norm(&(m - self.project(m)))
    }

    /// Membership up to `cert_tol` relative to `‖m‖`.
    pub fn contains(&self, m: &CMat, tol: &Tolerance) -> bool {
        let scale = hs_norm(m);
        if scale < 1e-300 {
            return true;
        }
        self.distance(m) <= tol.cert_tol * scale
    }

    pub fn contains_identity(&self, tol: &Tolerance) -> bool {
        self.contains(&eye(self.ambient_dim), tol)
    }

    /// The subspace of adjoints `A*`.
    pub fn adjoint_space(&self) -> Subspace {
        Subspace {
            ambient_dim: self.ambient_dim,
            basis: self.basis.iter().map(|b| b.adjoint()).collect(),
            flags: Flags::default(),
        }
    }

    /// `d² × d²` matrix of the orthogonal projection onto the subspace, in
    /// the row-major vectorization.
    pub fn projector_matrix(&self) -> CMat {
        let n = self.ambient_dim * self.ambient_dim;
        let mut v = CMat::zeros(n, self.dim());
        for (j, b) in self.basis.iter().enumerate() {
            let col = vec_row(b);
            for i in 0..n {
                v[(i, j)] = col[i];
            }
        }
        &v * v.adjoint()
    }

    /// Random element with complex Gaussian coordinates.
    pub fn random_element(&self, rng: &mut ChaCha8Rng) -> CMat {
        let g = linalg::random_gaussian(rng, self.dim().max(1), 1);
        let mut out = CMat::zeros(self.ambient_dim, self.ambient_dim);
        for (i, b) in self.basis.iter().enumerate() {
            out += scale_complex(b, g[(i, 0)]);
        }
        out
    }

    /// Real-orthonormal basis of the Hermitian part; for a selfadjoint
    /// subspace its length equals `dim`.
    ///
    /// Hermitian elements of a selfadjoint span form a real vector space;
    /// Gram–Schmidt over the Hermitian parts of the basis stays inside the
    /// span, and the 1e-6 acceptance threshold separates genuine new
    /// directions (always order one here) from the noise that long closure
    /// chains leave on the basis.
    pub fn hermitian_basis(&self, _tol: &Tolerance) -> Result<Vec<CMat>> {
        let mut herm: Vec<CMat> = Vec::new();
        for b in &self.basis {
            let re = (b + b.adjoint()).scale(0.5);
            let im = (b - b.adjoint()).map(|z| z * Complex64::new(0.0, -0.5));
            for cand in [re, im] {
                mgs_append(&mut herm, &cand, 1e-6);
            }
        }
        if herm.len() != self.dim() {
            return Err(OpalgError::DegenerateInput(format!(
                "hermitian basis has {} elements but the subspace has dimension {}; \
                 the subspace is not selfadjoint",
                herm.len(),
                self.dim()
            )));
        }
        Ok(herm)
    }

    /// Random Hermitian element (real Gaussian coefficients on the
    /// Hermitian basis); requires a selfadjoint subspace.
    pub fn random_hermitian_element(
        &self,
        rng: &mut ChaCha8Rng,
        tol: &Tolerance,
    ) -> Result<CMat> {
        let herm = self.hermitian_basis(tol)?;
        let g = linalg::random_gaussian(rng, herm.len().max(1), 1);
        let mut out = CMat::zeros(self.ambient_dim, self.ambient_dim);
        for (i, h) in herm.iter().enumerate() {
            out += h.scale(g[(i, 0)].re * std::f64::consts::SQRT_2);
        }
        Ok(out)
    }

    pub fn is_subspace_of(&self, other: &Subspace, tol: &Tolerance) -> bool {
        self.basis.iter().all(|b| other.contains(b, tol))
    }

    /// Operator-norm distance between the orthogonal projectors; zero iff
    /// the subspaces coincide.
    pub fn subspace_distance(&self, other: &Subspace) -> f64 {
        op_norm(&(self.projector_matrix() - other.projector_matrix()))
    }

    // ── structure checks (re-verify the cached flags) ────────────────

    pub fn check_unital(&self, tol: &Tolerance) -> bool {
        self.contains_identity(tol)
    }

    pub fn check_selfadjoint(&self, tol: &Tolerance) -> bool {
        self.basis.iter().all(|b| self.contains(&b.adjoint(), tol))
    }

    pub fn check_algebra(&self, tol: &Tolerance) -> bool {
        self.basis
            .iter()
            .all(|x| self.basis.iter().all(|y| self.contains(&(x * y), tol)))
    }

    pub fn check_star_algebra(&self, tol: &Tolerance) -> bool {
        self.check_algebra(tol) && self.check_selfadjoint(tol)
    }

    pub fn check_triple_system(&self, tol: &Tolerance) -> bool {
        self.basis.iter().all(|x| {
            self.basis.iter().all(|y| {
                let xy = x * y.adjoint();
                self.basis.iter().all(|z| self.contains(&(&xy * z), tol))
            })
        })
    }
}

/// Intersection of two subspaces of the same ambient algebra, computed from
/// the kernel of the stacked complement projectors (symmetric in the two
/// inputs; kernel threshold `rank_tol`).
pub fn intersect(s1: &Subspace, s2: &Subspace, tol: &Tolerance) -> Result<Subspace> {
    if s1.ambient_dim != s2.ambient_dim {
        return Err(OpalgError::DegenerateInput(
            "intersect needs a common ambient dimension".into(),
        ));
    }
    let d = s1.ambient_dim;
    let n = d * d;
    let p1 = s1.projector_matrix();
    let p2 = s2.projector_matrix();
    let mut stack = CMat::zeros(2 * n, n);
    let id = eye(n);
    stack.view_mut((0, 0), (n, n)).copy_from(&(&id - &p1));
    stack.view_mut((n, 0), (n, n)).copy_from(&(&id - &p2));
    let basis = linalg::null_space(&stack, tol.rank_tol)
        .into_iter()
        .map(|v| linalg::unvec_row(&v, d, d))
        .collect();
    Ok(Subspace {
        ambient_dim: d,
        basis,
        flags: Flags::default(),
    })
}

/// The diagonal `Δ(A) = A ∩ A*`.
pub fn diag_part(a: &Subspace, tol: &Tolerance) -> Result<Subspace> {
    let mut delta = intersect(a, &a.adjoint_space(), tol)?;
    delta.flags.selfadjoint = Some(true);
    Ok(delta)
}

/// Dirichlet test: `span(A ∪ A*) = B` (density is equality in finite
/// dimension). Requires `A ⊆ B` and both unital.
pub fn is_dirichlet(a: &Subspace, b: &Subspace, tol: &Tolerance) -> Result<bool> {
    if !a.is_subspace_of(b, tol) {
        return Err(OpalgError::DegenerateInput(
            "is_dirichlet: A is not contained in B".into(),
        ));
    }
    if !a.contains_identity(tol) || !b.contains_identity(tol) {
        return Err(OpalgError::DegenerateInput(
            "is_dirichlet: both spaces must be unital".into(),
        ));
    }
    let mut mats: Vec<CMat> = a.basis.to_vec();
    mats.extend(a.basis.iter().map(|m| m.adjoint()));
    let spanned = span_of(&mats, tol)?;
    Ok(spanned.dim() == b.dim())
}
