//! The Lie algebra so(n) with the Killing-adapted splitting h ⊕ h⊥.
//!
//! Conventions used throughout the crate:
//!
//! * `E_ij` is the elementary matrix with `E_ij e_j = e_i` and all other
//!   columns zero.  Commutator signs depend on this choice.
//! * The inner product is `⟨X,Y⟩ = −½ tr(XY)`, normalized so that the
//!   matrices `E_ij − E_ji` have unit norm.
//! * `h = {X ∈ so(n) : X e_n = 0}` is the Lie algebra of the stabilizer of
//!   `e_n`, and `h⊥` its orthogonal complement (matrices supported on the
//!   last row and column).
//! * The adapted basis is ordered Z-block first: `Z_a = E_an − E_na` for
//!   `a = 1..n−1`, then `Y_(i,j) = E_ij − E_ji` for `1 ≤ i < j ≤ n−1` in
//!   lexicographic order.  For n = 3 this is `(Z_1, Z_2, Y_3)`.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Tolerance on skew-symmetry of algebra elements.
pub const SKEW_TOL: f64 = 1e-13;
/// Tolerance on orthogonality of group elements.
pub const ORTHO_TOL: f64 = 1e-12;

/// An element of so(n), stored as an n×n real skew-symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    mat: DMatrix<f64>,
}

impl AlgebraElement {
    /// Wraps a matrix, verifying skew-symmetry.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(mat.nrows(), mat.ncols()));
        }
        let res = (&mat + mat.transpose()).norm();
        if res > SKEW_TOL * (1.0 + mat.norm()) {
            return Err(Error::NotSkew(res));
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix assumed skew (basis elements, sums of basis elements).
    pub(crate) fn from_skew_unchecked(mat: DMatrix<f64>) -> Self {
        Self { mat }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            mat: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { mat: &self.mat * c }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_n(self.n(), other.n())?;
        Ok(Self {
            mat: &self.mat + &other.mat,
        })
    }

    /// Norm induced by the Killing inner product.
    pub fn norm(&self) -> f64 {
        killing_ip(self, self).expect("same dimension").sqrt()
    }
}

/// An element of SO(n).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    mat: DMatrix<f64>,
}

impl GroupElement {
    /// Wraps a matrix, verifying orthogonality and det = +1.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(mat.nrows(), mat.ncols()));
        }
        let n = mat.nrows();
        let res = (mat.transpose() * &mat - DMatrix::<f64>::identity(n, n)).norm();
        if res > ORTHO_TOL * (n as f64) || mat.determinant() <= 0.0 {
            return Err(Error::NotSpecialOrthogonal(res));
        }
        Ok(Self { mat })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn inverse(&self) -> Self {
        Self {
            mat: self.mat.transpose(),
        }
    }

    /// Group multiplication `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_same_n(self.n(), other.n())?;
        Ok(Self {
            mat: &self.mat * &other.mat,
        })
    }

    /// Deviation from orthogonality, `|sᵀs − 1|`.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.n();
        (self.mat.transpose() * &self.mat - DMatrix::<f64>::identity(n, n)).norm()
    }

    /// Nearest special orthogonal matrix (polar retraction via SVD).
    pub fn reorthonormalize(&self) -> Self {
        let svd = self.mat.clone().svd(true, true);
        let u = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        let mut q = u * vt;
        if q.determinant() < 0.0 {
            // Flip the last column of U; cannot happen starting near SO(n).
            let ncols = q.ncols();
            for r in 0..q.nrows() {
                q[(r, ncols - 1)] = -q[(r, ncols - 1)];
            }
        }
        Self { mat: q }
    }

    /// Whether the element stabilizes e_n, i.e. lies in the embedded SO(n−1).
    pub fn stabilizes_en(&self, tol: f64) -> bool {
        let n = self.n();
        let mut res = 0.0f64;
        for i in 0..n {
            let target = if i == n - 1 { 1.0 } else { 0.0 };
            res = res.max((self.mat[(i, n - 1)] - target).abs());
            res = res.max((self.mat[(n - 1, i)] - target).abs());
        }
        res <= tol
    }
}

fn check_same_n(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(a, b));
    }
    Ok(())
}

/// Matrix commutator `[X,Y] = XY − YX`.
pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    check_same_n(x.n(), y.n())?;
    let m = &x.mat * &y.mat - &y.mat * &x.mat;
    Ok(AlgebraElement::from_skew_unchecked(m))
}

/// Normalized Killing inner product `⟨X,Y⟩ = −½ tr(XY)`.
pub fn killing_ip(x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
    check_same_n(x.n(), y.n())?;
    // −½ tr(XY) = ½ tr(XᵀY) = ½ Σ X_ij Y_ij for skew X.
    let mut acc = 0.0;
    for (a, b) in x.mat.iter().zip(y.mat.iter()) {
        acc += a * b;
    }
    Ok(0.5 * acc)
}

/// Adjoint action `Ad(s)X = s X sᵀ`.
pub fn ad_action(s: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
    check_same_n(s.n(), x.n())?;
    let m = s.mat() * x.mat() * s.mat().transpose();
    Ok(AlgebraElement::from_skew_unchecked(m))
}

/// Matrix exponential by scaling-and-squaring with a truncated Taylor series.
///
/// Used uniformly for all n so trajectories are bit-deterministic across the
/// n = 3 and n > 3 code paths.  The closed-form so(3) exponential
/// [`exp_so3_axis_angle`] serves as an independent cross-check in tests.
pub fn group_exp(x: &AlgebraElement) -> GroupElement {
    let n = x.n();
    let norm = x.mat.norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = &x.mat / 2f64.powi(squarings as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut acc = DMatrix::<f64>::identity(n, n);
    // ‖scaled‖ ≤ 0.5, so 16 terms put the truncation error below 1e-16.
    for k in 1..=16 {
        term = &term * &scaled / (k as f64);
        acc += &term;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    GroupElement { mat: acc }
}

/// Closed-form exponential on so(3) (Rodrigues' formula).
pub fn exp_so3_axis_angle(x: &AlgebraElement) -> Result<GroupElement> {
    if x.n() != 3 {
        return Err(Error::UnsupportedDimension(x.n()));
    }
    // angle² = ⟨X,X⟩ for the normalized Killing form on so(3).
    let theta = x.norm();
    let id = DMatrix::<f64>::identity(3, 3);
    if theta < 1e-12 {
        let m = &id + x.mat() + x.mat() * x.mat() * 0.5;
        return Ok(GroupElement { mat: m });
    }
    let a = theta.sin() / theta;
    let b = (1.0 - theta.cos()) / (theta * theta);
    let m = &id + x.mat() * a + x.mat() * x.mat() * b;
    Ok(GroupElement { mat: m })
}

/// The orthonormal basis of so(n) adapted to h ⊕ h⊥, Z-block first.
#[derive(Debug, Clone)]
pub struct AdaptedBasis {
    n: usize,
    /// Z_a = E_an − E_na, a = 1..n−1 (span of h⊥).
    z: Vec<DMatrix<f64>>,
    /// Y_(i,j) = E_ij − E_ji, 1 ≤ i < j ≤ n−1, lexicographic (span of h).
    y: Vec<DMatrix<f64>>,
}

/// Builds the adapted basis for so(n), n ≥ 3.
pub fn adapted_basis(n: usize) -> Result<AdaptedBasis> {
    if n < 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let elem = |i: usize, j: usize| {
        let mut m = DMatrix::<f64>::zeros(n, n);
        m[(i, j)] = 1.0;
        m[(j, i)] = -1.0;
        m
    };
    let z = (0..n - 1).map(|a| elem(a, n - 1)).collect();
    let mut y = Vec::new();
    for i in 0..n - 1 {
        for j in i + 1..n - 1 {
            y.push(elem(i, j));
        }
    }
    Ok(AdaptedBasis { n, z, y })
}

impl AdaptedBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    /// dim h⊥ = n − 1.
    pub fn dim_hperp(&self) -> usize {
        self.z.len()
    }

    /// dim h = (n−1)(n−2)/2.
    pub fn dim_h(&self) -> usize {
        self.y.len()
    }

    /// dim so(n) = n(n−1)/2.
    pub fn dim(&self) -> usize {
        self.z.len() + self.y.len()
    }

    /// Full ordered basis index: 0..n−1 are Z_a, the rest are Y's.
    pub fn is_z(&self, i: usize) -> bool {
        i < self.z.len()
    }

    pub fn element(&self, i: usize) -> &DMatrix<f64> {
        if i < self.z.len() {
            &self.z[i]
        } else {
            &self.y[i - self.z.len()]
        }
    }

    pub fn z(&self, a: usize) -> AlgebraElement {
        AlgebraElement::from_skew_unchecked(self.z[a].clone())
    }

    pub fn y(&self, alpha: usize) -> AlgebraElement {
        AlgebraElement::from_skew_unchecked(self.y[alpha].clone())
    }

    pub fn basis_element(&self, i: usize) -> AlgebraElement {
        AlgebraElement::from_skew_unchecked(self.element(i).clone())
    }

    /// Coefficients of X in the adapted basis: c_i = ⟨X, B_i⟩.
    pub fn coeffs(&self, x: &AlgebraElement) -> Result<DVector<f64>> {
        check_same_n(self.n, x.n())?;
        let m = self.dim();
        let mut c = DVector::zeros(m);
        for i in 0..m {
            let b = self.element(i);
            // ⟨X, E_ij − E_ji⟩ = X_ij for skew X with our normalization.
            let mut acc = 0.0;
            for (a, v) in b.iter().zip(x.mat.iter()) {
                acc += a * v;
            }
            c[i] = 0.5 * acc;
        }
        Ok(c)
    }

    /// Reconstructs Σ c_i B_i.
    pub fn from_coeffs(&self, c: &DVector<f64>) -> Result<AlgebraElement> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch(c.len(), self.dim()));
        }
        let mut m = DMatrix::<f64>::zeros(self.n, self.n);
        for i in 0..self.dim() {
            m += self.element(i) * c[i];
        }
        Ok(AlgebraElement::from_skew_unchecked(m))
    }

    /// The m×m matrix of Ad(s) in the adapted basis: R_ji = ⟨Ad(s)B_i, B_j⟩.
    pub fn ad_matrix(&self, s: &GroupElement) -> Result<DMatrix<f64>> {
        check_same_n(self.n, s.n())?;
        let m = self.dim();
        let mut r = DMatrix::zeros(m, m);
        for i in 0..m {
            let adb = s.mat() * self.element(i) * s.mat().transpose();
            for j in 0..m {
                let b = self.element(j);
                let mut acc = 0.0;
                for (a, v) in b.iter().zip(adb.iter()) {
                    acc += a * v;
                }
                r[(j, i)] = 0.5 * acc;
            }
        }
        Ok(r)
    }
}

/// Structure constants C^k_ij = ⟨[B_i,B_j], B_k⟩ of the adapted basis.
#[derive(Debug, Clone)]
pub struct StructureTensor {
    m: usize,
    /// Number of Z-type indices (= n−1); indices < n_z are h⊥, the rest h.
    n_z: usize,
    c: Vec<f64>,
    /// Cached ad-matrices of the basis elements, (ad_i)_kj = C^k_ij.
    ad_mats: Vec<DMatrix<f64>>,
}

/// Computes the structure tensor of an adapted basis.
pub fn structure_constants(basis: &AdaptedBasis) -> StructureTensor {
    let m = basis.dim();
    let mut c = vec![0.0; m * m * m];
    for i in 0..m {
        for j in 0..m {
            let br = basis.element(i) * basis.element(j) - basis.element(j) * basis.element(i);
            for k in 0..m {
                let b = basis.element(k);
                let mut acc = 0.0;
                for (a, v) in b.iter().zip(br.iter()) {
                    acc += a * v;
                }
                c[(k * m + i) * m + j] = 0.5 * acc;
            }
        }
    }
    let ad_mats = (0..m)
        .map(|i| DMatrix::from_fn(m, m, |k, j| c[(k * m + i) * m + j]))
        .collect();
    StructureTensor {
        m,
        n_z: basis.dim_hperp(),
        c,
        ad_mats,
    }
}

impl StructureTensor {
    pub fn dim(&self) -> usize {
        self.m
    }

    /// C^k_ij with [B_i, B_j] = Σ_k C^k_ij B_k.
    pub fn c(&self, k: usize, i: usize, j: usize) -> f64 {
        self.c[(k * self.m + i) * self.m + j]
    }

    pub(crate) fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.c[(k * self.m + i) * self.m + j] = v;
        self.ad_mats[i][(k, j)] = v;
    }

    /// The ad-matrix of B_i: (ad_i)_kj = C^k_ij, so c([B_i, X]) = ad_i c(X).
    pub fn ad_matrix_of(&self, i: usize) -> &DMatrix<f64> {
        &self.ad_mats[i]
    }

    /// Max |C^k_ij + C^k_ji|.
    pub fn antisymmetry_residual(&self) -> f64 {
        let m = self.m;
        let mut r = 0.0f64;
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    r = r.max((self.c(k, i, j) + self.c(k, j, i)).abs());
                }
            }
        }
        r
    }

    /// Max residual of the Jacobi identity over all index quadruples.
    pub fn jacobi_residual(&self) -> f64 {
        let m = self.m;
        let mut r = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let mut acc = 0.0;
                        for mm in 0..m {
                            acc += self.c(mm, i, j) * self.c(l, mm, k)
                                + self.c(mm, j, k) * self.c(l, mm, i)
                                + self.c(mm, k, i) * self.c(l, mm, j);
                        }
                        r = r.max(acc.abs());
                    }
                }
            }
        }
        r
    }

    /// Max |c^a_βγ| over h⊥-targets of h×h brackets; zero since [h,h] ⊆ h.
    pub fn hh_block_residual(&self) -> f64 {
        let m = self.m;
        let mut r = 0.0f64;
        for a in 0..self.n_z {
            for beta in self.n_z..m {
                for gamma in self.n_z..m {
                    r = r.max(self.c(a, beta, gamma).abs());
                }
            }
        }
        r
    }

    /// Max |c^α_βb| over h-targets of h×h⊥ brackets; zero since [h,h⊥] ⊆ h⊥.
    pub fn mixed_block_residual(&self) -> f64 {
        let m = self.m;
        let mut r = 0.0f64;
        for alpha in self.n_z..m {
            for beta in self.n_z..m {
                for b in 0..self.n_z {
                    r = r.max(self.c(alpha, beta, b).abs());
                }
            }
        }
        r
    }
}
