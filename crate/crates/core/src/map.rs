//! Linear maps between operator subspaces, stored as images of a basis.

use num_complex::Complex64;

use crate::error::OpalgError;
use crate::linalg::{self, eye, hs_norm, svd, vec_row, CMat, CVec, Tolerance};
use crate::subspace::Subspace;
use crate::Result;

/// A linear map `T : domain → M_e`, held as the images of the domain's
/// orthonormal basis.
#[derive(Debug, Clone)]
pub struct SubspaceMap {
    domain: Subspace,
    codomain_dim: usize,
    images: Vec<CMat>,
}

fn scale_complex(m: &CMat, c: Complex64) -> CMat {
    m.map(|z| z * c)
}

impl SubspaceMap {
    /// Builds a map from the images of the domain's own orthonormal basis.
    pub fn from_basis_images(
        domain: Subspace,
        codomain_dim: usize,
        images: Vec<CMat>,
    ) -> Result<Self> {
        if images.len() != domain.dim() {
            return Err(OpalgError::DegenerateInput(format!(
                "expected {} images, got {}",
                domain.dim(),
                images.len()
            )));
        }
        for im in &images {
            if im.shape() != (codomain_dim, codomain_dim) {
                return Err(OpalgError::DegenerateInput(
                    "image shape does not match codomain dimension".into(),
                ));
            }
        }
        Ok(SubspaceMap {
            domain,
            codomain_dim,
            images,
        })
    }

    /// Builds a map from arbitrary (possibly dependent) spanning pairs
    /// `(mats_i, images_i)`; dependent inputs must be linearly consistent.
    pub fn from_pairs(
        d: usize,
        pairs: &[(CMat, CMat)],
        codomain_dim: usize,
        tol: &Tolerance,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(OpalgError::DegenerateInput(
                "a map needs at least one basis/image pair".into(),
            ));
        }
        let mats: Vec<CMat> = pairs.iter().map(|(m, _)| m.clone()).collect();
        let domain = crate::subspace::span_of(&mats, tol)?;
        // Express each orthonormal basis element in the given spanning set,
        // then push the coefficients through the given images.
        let n = d * d;
        let mut a = CMat::zeros(n, pairs.len());
        for (j, (m, _)) in pairs.iter().enumerate() {
            let v = vec_row(m);
            for i in 0..n {
                a[(i, j)] = v[i];
            }
        }
        let mut images = Vec::with_capacity(domain.dim());
        for b in domain.basis() {
            let coeff = linalg::lstsq(&a, &vec_row(b), tol.rank_tol);
            let mut img = CMat::zeros(codomain_dim, codomain_dim);
            let mut recon = CMat::zeros(d, d);
            for (j, (m, y)) in pairs.iter().enumerate() {
                img += scale_complex(y, coeff[j]);
                recon += scale_complex(m, coeff[j]);
            }
            if hs_norm(&(recon - b)) > tol.cert_tol * 10.0 {
                return Err(OpalgError::DegenerateInput(
                    "spanning pairs are inconsistent: basis element not reproduced".into(),
                ));
            }
            images.push(img);
        }
        let map = SubspaceMap::from_basis_images(domain, codomain_dim, images)?;
        // Dependent spanning pairs must agree on their images.
        for (m, y) in pairs {
            let scale = hs_norm(y).max(hs_norm(m)).max(1.0);
            if hs_norm(&(map.apply(m) - y)) > tol.cert_tol * 100.0 * scale {
                return Err(OpalgError::DegenerateInput(
                    "spanning pairs are inconsistent: conflicting images for a dependent input"
                        .into(),
                ));
            }
        }
        Ok(map)
    }

    /// The identity map on a subspace.
    pub fn identity(domain: Subspace) -> Self {
        let images = domain.basis().to_vec();
        let codomain_dim = domain.ambient_dim();
        SubspaceMap {
            domain,
            codomain_dim,
            images,
        }
    }

    pub fn domain(&self) -> &Subspace {
        &self.domain
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn images(&self) -> &[CMat] {
        &self.images
    }

    /// Applies the map to an element of the domain (the element is first
    /// projected onto the domain).
    pub fn apply(&self, x: &CMat) -> CMat {
        let coords = self.domain.coords(x);
        let mut out = CMat::zeros(self.codomain_dim, self.codomain_dim);
        for (c, im) in coords.iter().zip(&self.images) {
            out += scale_complex(im, *c);
        }
        out
    }

    /// Image of the ambient identity.
    pub fn apply_identity(&self) -> CMat {
        self.apply(&eye(self.domain.ambient_dim()))
    }

    /// `T(1) = 1` up to `cert_tol`, provided `1` lies in the domain.
    pub fn is_unital(&self, tol: &Tolerance) -> bool {
        let d = self.domain.ambient_dim();
        self.domain.contains(&eye(d), tol)
            && hs_norm(&(self.apply_identity() - eye(self.codomain_dim)))
                <= tol.cert_tol * (self.codomain_dim as f64).sqrt()
    }

    /// The range `T(domain)` as a subspace of the codomain.
    pub fn range(&self, tol: &Tolerance) -> Result<Subspace> {
        if self.images.is_empty() {
            return Ok(Subspace::zero(self.codomain_dim));
        }
        crate::subspace::span_of(&self.images, tol)
    }

    /// Smallest/largest singular values of the map as a linear operator
    /// between HS spaces (coordinates on the orthonormal domain basis).
    pub fn singular_range(&self) -> (f64, f64) {
        if self.images.is_empty() {
            return (0.0, 0.0);
        }
        let e2 = self.codomain_dim * self.codomain_dim;
        let mut a = CMat::zeros(e2, self.images.len());
        for (j, im) in self.images.iter().enumerate() {
            let v = vec_row(im);
            for i in 0..e2 {
                a[(i, j)] = v[i];
            }
        }
        let (_, s, _) = svd(&a);
        let smax = s.iter().cloned().fold(0.0, f64::max);
        let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
        (if smin.is_finite() { smin } else { 0.0 }, smax)
    }

    /// A unit-norm kernel element, when the map is not injective.
    pub fn kernel_element(&self, tol: &Tolerance) -> Option<CMat> {
        if self.images.is_empty() {
            return None;
        }
        let e2 = self.codomain_dim * self.codomain_dim;
        let k = self.images.len();
        let mut a = CMat::zeros(e2, k);
        for (j, im) in self.images.iter().enumerate() {
            let v = vec_row(im);
            for i in 0..e2 {
                a[(i, j)] = v[i];
            }
        }
        let null = linalg::null_space(&a, tol.rank_tol);
        let coeffs: &CVec = null.first()?;
        let d = self.domain.ambient_dim();
        let mut out = CMat::zeros(d, d);
        for (j, b) in self.domain.basis().iter().enumerate() {
            out += scale_complex(b, coeffs[j]);
        }
        Some(out)
    }

    /// The inverse map on the range; fails if the map is not injective.
    pub fn inverse_on_range(&self, tol: &Tolerance) -> Result<SubspaceMap> {
        let range = self.range(tol)?;
        if range.dim() != self.domain.dim() {
            return Err(OpalgError::DegenerateInput(
                "map is not injective; no inverse on range".into(),
            ));
        }
        // Matrix of T in coordinates: columns are range-coordinates of the
        // images of the domain basis.
        let n = self.domain.dim();
        let mut t = CMat::zeros(n, n);
        for (j, im) in self.images.iter().enumerate() {
            let coords = range.coords(im);
            for i in 0..n {
                t[(i, j)] = coords[i];
            }
        }
        let tinv = t.try_inverse().ok_or_else(|| {
            OpalgError::DegenerateInput("coordinate matrix is numerically singular".into())
        })?;
        let d = self.domain.ambient_dim();
        let mut images = Vec::with_capacity(n);
        for j in 0..n {
            let mut img = CMat::zeros(d, d);
            for (i, b) in self.domain.basis().iter().enumerate() {
                img += scale_complex(b, tinv[(i, j)]);
            }
            images.push(img);
        }
        SubspaceMap::from_basis_images(range, d, images)
    }

    /// Composition `other ∘ self` (apply `self` first).
    pub fn compose(&self, other: &SubspaceMap) -> SubspaceMap {
        let images = self.images.iter().map(|im| other.apply(im)).collect();
        SubspaceMap {
            domain: self.domain.clone(),
            codomain_dim: other.codomain_dim,
            images,
        }
    }

    /// Post-transforms every image by the supplied function.
    pub fn map_images(&self, f: impl Fn(&CMat) -> CMat) -> SubspaceMap {
        let images: Vec<CMat> = self.images.iter().map(|im| f(im)).collect();
        let codomain_dim = images
            .first()
            .map(|m| m.nrows())
            .unwrap_or(self.codomain_dim);
        SubspaceMap {
            domain: self.domain.clone(),
            codomain_dim,
            images,
        }
    }

    /// Residual of `*`-linearity `T(x*) = T(x)*` over the domain basis,
    /// meaningful when the domain is selfadjoint.
    pub fn star_linearity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for b in self.domain.basis() {
            let lhs = self.apply(&b.adjoint());
            let rhs = self.apply(b).adjoint();
            worst = worst.max(hs_norm(&(lhs - rhs)));
        }
        worst
    }

    /// Max residual of multiplicativity `T(xy) = T(x)T(y)` over basis pairs.
    pub fn multiplicativity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in self.domain.basis() {
            for y in self.domain.basis() {
                let lhs = self.apply(&(x * y));
                let rhs = self.apply(x) * self.apply(y);
                worst = worst.max(hs_norm(&(lhs - rhs)));
            }
        }
        worst
    }
}
