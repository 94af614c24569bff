//! The physical model of the n-dimensional Chaplygin ball (radius = mass = 1):
//! inertia operator, rolling connection, coframe coefficient functions, the
//! compressed Hamiltonian, the internal momentum map, the metric operator Φ
//! and the conformal factor f.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{
    adapted_basis, structure_constants, AdaptedBasis, AlgebraElement, GroupElement,
    StructureTensor,
};
use crate::{Error, Result};

/// The inertia operator 𝕀: so(n) → so(n), stored as a symmetric
/// positive-definite m×m matrix acting on adapted-basis coefficient vectors
/// (m = n(n−1)/2).  The paper never fixes a coordinate expression of 𝕀 on
/// so(n); this representation makes "diagonal inertia" scenarios well defined.
#[derive(Debug, Clone)]
pub struct InertiaTensor {
    mat: DMatrix<f64>,
    inv: DMatrix<f64>,
    homogeneous: bool,
}

impl InertiaTensor {
    /// The homogeneous ball, 𝕀 = identity.
    pub fn identity(m: usize) -> Self {
        Self {
            mat: DMatrix::identity(m, m),
            inv: DMatrix::identity(m, m),
            homogeneous: true,
        }
    }

    /// Diagonal inertia in the adapted basis (Z-block first).
    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let m = entries.len();
        let mut mat = DMatrix::zeros(m, m);
        for (i, &e) in entries.iter().enumerate() {
            mat[(i, i)] = e;
        }
        Self::from_matrix(mat)
    }

    /// Principal moments for n = 3, mapped to the operator diagonal in the
    /// basis order (Z_1, Z_2, Y_3): 𝕀 = diag(I1, I2, I3).
    pub fn principal3(i1: f64, i2: f64, i3: f64) -> Result<Self> {
        Self::diagonal(&[i1, i2, i3])
    }

    /// Arbitrary symmetric positive-definite operator in adapted coordinates.
    pub fn from_matrix(mat: DMatrix<f64>) -> Result<Self> {
        let m = mat.nrows();
        if mat.ncols() != m {
            return Err(Error::InvalidInertia);
        }
        if (&mat - mat.transpose()).norm() > 1e-13 * (1.0 + mat.norm()) {
            return Err(Error::InvalidInertia);
        }
        let chol = mat.clone().cholesky().ok_or(Error::InvalidInertia)?;
        let inv = chol.inverse();
        let homogeneous = (&mat - DMatrix::<f64>::identity(m, m)).norm() < 1e-14;
        Ok(Self {
            mat,
            inv,
            homogeneous,
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.inv
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn apply_coeffs(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.mat * c
    }

    pub fn apply_inverse_coeffs(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.inv * c
    }
}

/// A point (s, u) of the left-trivialized TS = SO(n) × so(n).
#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub s: GroupElement,
    pub u: AlgebraElement,
}

impl PhasePoint {
    pub fn new(s: GroupElement, u: AlgebraElement) -> Result<Self> {
        if s.n() != u.n() {
            return Err(Error::DimensionMismatch(s.n(), u.n()));
        }
        Ok(Self { s, u })
    }

    pub fn n(&self) -> usize {
        self.s.n()
    }
}

/// Coframe coefficients at a phase point: angular velocity components
/// (l, g) and angular momentum components (l̃, g̃), all in the space frame.
#[derive(Debug, Clone)]
pub struct CoframeSample {
    /// l_α = ρ^α_s(u).
    pub l: DVector<f64>,
    /// g_a = η^a_s(u).
    pub g: DVector<f64>,
    /// l̃_α = ρ^α_s(𝕀u).
    pub l_tilde: DVector<f64>,
    /// g̃_a = η^a_s(𝕀u).
    pub g_tilde: DVector<f64>,
}

/// Precomputed per-point data used by every coefficient formula: the
/// Ad(s)-matrix `r` in the adapted basis, the coefficient vector `cu` of u,
/// and the space-frame component vectors `w = R cu` (velocity) and
/// `wt = R 𝕀 cu` (momentum).  Indices < n−1 are η/g components, the rest ρ/l.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub r: DMatrix<f64>,
    pub cu: DVector<f64>,
    pub w: DVector<f64>,
    pub wt: DVector<f64>,
}

/// A ball instance: fixed n, adapted basis, structure constants and inertia.
#[derive(Debug, Clone)]
pub struct Model {
    basis: AdaptedBasis,
    structure: StructureTensor,
    inertia: InertiaTensor,
}

impl Model {
    pub fn new(n: usize, inertia: InertiaTensor) -> Result<Self> {
        let basis = adapted_basis(n)?;
        if inertia.dim() != basis.dim() {
            return Err(Error::DimensionMismatch(inertia.dim(), basis.dim()));
        }
        let structure = structure_constants(&basis);
        Ok(Self {
            basis,
            structure,
            inertia,
        })
    }

    pub fn homogeneous(n: usize) -> Result<Self> {
        let basis = adapted_basis(n)?;
        let m = basis.dim();
        Self::new(n, InertiaTensor::identity(m))
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    /// m = dim so(n).
    pub fn m(&self) -> usize {
        self.basis.dim()
    }

    /// Number of h⊥ directions, n − 1.
    pub fn nz(&self) -> usize {
        self.basis.dim_hperp()
    }

    pub fn dim_h(&self) -> usize {
        self.basis.dim_h()
    }

    pub fn basis(&self) -> &AdaptedBasis {
        &self.basis
    }

    pub fn structure(&self) -> &StructureTensor {
        &self.structure
    }

    pub fn inertia(&self) -> &InertiaTensor {
        &self.inertia
    }

    /// Same geometry, different inertia.
    pub fn with_inertia(&self, inertia: InertiaTensor) -> Result<Self> {
        if inertia.dim() != self.m() {
            return Err(Error::DimensionMismatch(inertia.dim(), self.m()));
        }
        Ok(Self {
            basis: self.basis.clone(),
            structure: self.structure.clone(),
            inertia,
        })
    }

    /// Frame field ξ or ζ at s: Ad(s⁻¹)B_i for a full basis index i.
    pub fn frame_field(&self, s: &GroupElement, i: usize) -> Result<AlgebraElement> {
        crate::algebra::ad_action(&s.inverse(), &self.basis.basis_element(i))
    }

    pub fn frame_data(&self, p: &PhasePoint) -> Result<FrameData> {
        let r = self.basis.ad_matrix(&p.s)?;
        let cu = self.basis.coeffs(&p.u)?;
        let w = &r * &cu;
        let wt = &r * self.inertia.apply_coeffs(&cu);
        Ok(FrameData { r, cu, w, wt })
    }

    /// All four coefficient families at p.
    pub fn coframe_coeffs(&self, p: &PhasePoint) -> Result<CoframeSample> {
        let fd = self.frame_data(p)?;
        Ok(self.coframe_from_data(&fd))
    }

    pub fn coframe_from_data(&self, fd: &FrameData) -> CoframeSample {
        let nz = self.nz();
        let dh = self.dim_h();
        CoframeSample {
            g: fd.w.rows(0, nz).into_owned(),
            l: fd.w.rows(nz, dh).into_owned(),
            g_tilde: fd.wt.rows(0, nz).into_owned(),
            l_tilde: fd.wt.rows(nz, dh).into_owned(),
        }
    }

    /// The rolling connection A(s,u) = −Σ_a g_a e_a ∈ R^{n−1}.
    pub fn connection_a(&self, p: &PhasePoint) -> Result<DVector<f64>> {
        let fd = self.frame_data(p)?;
        Ok(-fd.w.rows(0, self.nz()).into_owned())
    }

    /// Independent contact-point evaluation Ã(Ad(s)u) = −Σ ⟨e_a, ũ e_n⟩ e_a.
    ///
    /// Cross-check path for the orientation convention of the adapted basis.
    pub fn connection_a_contact(&self, p: &PhasePoint) -> Result<DVector<f64>> {
        let n = self.n();
        let ut = crate::algebra::ad_action(&p.s, &p.u)?;
        let mut out = DVector::zeros(n - 1);
        for a in 0..n - 1 {
            out[a] = -ut.mat()[(a, n - 1)];
        }
        Ok(out)
    }

    /// H_c(s,u) = ½⟨u, 𝕀u⟩ + ½⟨A_s(u), A_s(u)⟩.
    pub fn compressed_hamiltonian(&self, p: &PhasePoint) -> Result<f64> {
        let fd = self.frame_data(p)?;
        Ok(self.hamiltonian_from_data(&fd))
    }

    pub fn hamiltonian_from_data(&self, fd: &FrameData) -> f64 {
        let rot = 0.5 * fd.cu.dot(&self.inertia.apply_coeffs(&fd.cu));
        let g = fd.w.rows(0, self.nz());
        rot + 0.5 * g.dot(&g)
    }

    /// Internal momentum map J_H(s,u) = Σ_α l̃_α Y_α ∈ h.
    pub fn momentum_jh(&self, p: &PhasePoint) -> Result<AlgebraElement> {
        let c = self.momentum_jh_coeffs(p)?;
        let nz = self.nz();
        let mut full = DVector::zeros(self.m());
        for (alpha, v) in c.iter().enumerate() {
            full[nz + alpha] = *v;
        }
        self.basis.from_coeffs(&full)
    }

    /// The Y-components l̃_α of J_H.
    pub fn momentum_jh_coeffs(&self, p: &PhasePoint) -> Result<DVector<f64>> {
        let fd = self.frame_data(p)?;
        Ok(fd.wt.rows(self.nz(), self.dim_h()).into_owned())
    }

    /// The metric operator Φ_s = 𝕀 + A*A in adapted coordinates:
    /// Φ = 𝕀 + R_Zᵀ R_Z where R_Z collects the η-rows of the Ad(s)-matrix.
    pub fn metric_phi(&self, s: &GroupElement) -> Result<DMatrix<f64>> {
        let r = self.basis.ad_matrix(s)?;
        let rz = r.rows(0, self.nz()).into_owned();
        Ok(self.inertia.matrix() + rz.transpose() * rz)
    }

    /// Conformal factor f(s) = (det Φ_s)^(−1/2), in the adapted basis
    /// (orthonormal, so the determinant is frame-independent).
    pub fn conformal_factor(&self, s: &GroupElement) -> Result<f64> {
        let phi = self.metric_phi(s)?;
        Ok(phi.determinant().powf(-0.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ad_action, group_exp, killing_ip};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    pub(crate) fn random_model(n: usize, rng: &mut StdRng) -> Model {
        let basis = adapted_basis(n).unwrap();
        let m = basis.dim();
        let a = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-0.3..0.3));
        let mat = DMatrix::<f64>::identity(m, m) + &a * a.transpose();
        Model::new(n, InertiaTensor::from_matrix(mat).unwrap()).unwrap()
    }

    fn random_point(model: &Model, rng: &mut StdRng) -> PhasePoint {
        let b = model.basis();
        let c = DVector::from_fn(b.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let s = group_exp(&b.from_coeffs(&c).unwrap());
        let c2 = DVector::from_fn(b.dim(), |_, _| rng.gen_range(-1.0..1.0));
        PhasePoint::new(s, b.from_coeffs(&c2).unwrap()).unwrap()
    }

    fn stabilizer_element(model: &Model, rng: &mut StdRng) -> GroupElement {
        // exp of an h-element stabilizes e_n.
        let b = model.basis();
        let mut c = DVector::zeros(b.dim());
        for alpha in 0..b.dim_h() {
            c[b.dim_hperp() + alpha] = rng.gen_range(-1.5..1.5);
        }
        group_exp(&b.from_coeffs(&c).unwrap())
    }

    #[test]
    fn connection_at_identity() {
        let model = Model::homogeneous(3).unwrap();
        let p = PhasePoint::new(GroupElement::identity(3), model.basis().z(0)).unwrap();
        let a = model.connection_a(&p).unwrap();
        assert!((a - DVector::from_vec(vec![-1.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn connection_vanishes_on_internal_directions() {
        let mut rng = StdRng::seed_from_u64(11);
        for n in [3, 4] {
            let model = random_model(n, &mut rng);
            let p0 = random_point(&model, &mut rng);
            for alpha in 0..model.dim_h() {
                let xi = model
                    .frame_field(&p0.s, model.nz() + alpha)
                    .unwrap();
                let p = PhasePoint::new(p0.s.clone(), xi).unwrap();
                assert!(model.connection_a(&p).unwrap().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn connection_matches_contact_point_formula() {
        // Orientation-convention audit: coframe formula vs ũ ↦ ũ.e_n.
        let mut rng = StdRng::seed_from_u64(12);
        for n in [3, 4, 5] {
            let model = random_model(n, &mut rng);
            for _ in 0..if n == 3 { 1000 } else { 100 } {
                let p = random_point(&model, &mut rng);
                let a1 = model.connection_a(&p).unwrap();
                let a2 = model.connection_a_contact(&p).unwrap();
                assert!((a1 - a2).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn connection_h_equivariance() {
        // A(hs, u) = h·A(s, u) with h acting on R^{n−1} as the upper block.
        let mut rng = StdRng::seed_from_u64(13);
        for n in [3, 4] {
            let model = random_model(n, &mut rng);
            for _ in 0..50 {
                let p = random_point(&model, &mut rng);
                let h = stabilizer_element(&model, &mut rng);
                let hp = PhasePoint::new(h.compose(&p.s).unwrap(), p.u.clone()).unwrap();
                let lhs = model.connection_a(&hp).unwrap();
                let hblock = h.mat().view((0, 0), (n - 1, n - 1)).into_owned();
                let rhs = hblock * model.connection_a(&p).unwrap();
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coframe_basic_values() {
        let model = Model::homogeneous(3).unwrap();
        let p = PhasePoint::new(GroupElement::identity(3), model.basis().z(0)).unwrap();
        let cs = model.coframe_coeffs(&p).unwrap();
        assert!((cs.g[0] - 1.0).abs() < 1e-14);
        assert!(cs.g[1].abs() < 1e-14);
        assert!(cs.l.norm() < 1e-14);
        assert!((cs.g_tilde[0] - 1.0).abs() < 1e-14);

        let zero = PhasePoint::new(GroupElement::identity(3), AlgebraElement::zero(3)).unwrap();
        let cz = model.coframe_coeffs(&zero).unwrap();
        assert!(cz.g.norm() + cz.l.norm() + cz.g_tilde.norm() + cz.l_tilde.norm() < 1e-15);
    }

    #[test]
    fn coframe_homogeneous_tilde_equals_plain() {
        let mut rng = StdRng::seed_from_u64(14);
        let model = Model::homogeneous(4).unwrap();
        let p = random_point(&model, &mut rng);
        let cs = model.coframe_coeffs(&p).unwrap();
        assert!((cs.l_tilde - cs.l).norm() < 1e-13);
        assert!((cs.g_tilde - cs.g).norm() < 1e-13);
    }

    #[test]
    fn coframe_reconstruction() {
        // u = Σ l_α ξ_α(s) + Σ g_a ζ_a(s).
        let mut rng = StdRng::seed_from_u64(15);
        for n in [3, 4, 5] {
            let model = random_model(n, &mut rng);
            for _ in 0..20 {
                let p = random_point(&model, &mut rng);
                let cs = model.coframe_coeffs(&p).unwrap();
                let mut acc = DMatrix::<f64>::zeros(n, n);
                for a in 0..model.nz() {
                    acc += model.frame_field(&p.s, a).unwrap().mat() * cs.g[a];
                }
                for alpha in 0..model.dim_h() {
                    acc += model.frame_field(&p.s, model.nz() + alpha).unwrap().mat()
                        * cs.l[alpha];
                }
                assert!((acc - p.u.mat()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hamiltonian_values() {
        let model = Model::homogeneous(3).unwrap();
        let p = PhasePoint::new(GroupElement::identity(3), model.basis().z(0)).unwrap();
        assert!((model.compressed_hamiltonian(&p).unwrap() - 1.0).abs() < 1e-14);

        let mut rng = StdRng::seed_from_u64(16);
        let q = random_point(&model, &mut rng);
        let xi = model.frame_field(&q.s, model.nz()).unwrap();
        let p2 = PhasePoint::new(q.s.clone(), xi).unwrap();
        assert!((model.compressed_hamiltonian(&p2).unwrap() - 0.5).abs() < 1e-13);

        let zero = PhasePoint::new(GroupElement::identity(3), AlgebraElement::zero(3)).unwrap();
        assert!(model.compressed_hamiltonian(&zero).unwrap().abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_h_invariance() {
        let mut rng = StdRng::seed_from_u64(17);
        for n in [3, 4] {
            let model = random_model(n, &mut rng);
            for _ in 0..50 {
                let p = random_point(&model, &mut rng);
                let h = stabilizer_element(&model, &mut rng);
                let hp = PhasePoint::new(h.compose(&p.s).unwrap(), p.u.clone()).unwrap();
                let d = model.compressed_hamiltonian(&hp).unwrap()
                    - model.compressed_hamiltonian(&p).unwrap();
                assert!(d.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn momentum_examples() {
        let model = Model::homogeneous(3).unwrap();
        let b = model.basis();
        let p = PhasePoint::new(GroupElement::identity(3), b.y(0)).unwrap();
        let j = model.momentum_jh(&p).unwrap();
        assert!((j.mat() - b.y(0).mat()).norm() < 1e-14);

        let aniso = model
            .with_inertia(InertiaTensor::principal3(1.0, 2.0, 3.0).unwrap())
            .unwrap();
        let pz = PhasePoint::new(GroupElement::identity(3), b.z(0)).unwrap();
        assert!(aniso.momentum_jh(&pz).unwrap().mat().norm() < 1e-14);

        let zero = PhasePoint::new(GroupElement::identity(3), AlgebraElement::zero(3)).unwrap();
        assert!(model.momentum_jh(&zero).unwrap().mat().norm() < 1e-15);
    }

    #[test]
    fn momentum_h_equivariance() {
        // J_H(hs, u) = Ad(h) J_H(s, u).
        let mut rng = StdRng::seed_from_u64(18);
        for n in [3, 4] {
            let model = random_model(n, &mut rng);
            for _ in 0..50 {
                let p = random_point(&model, &mut rng);
                let h = stabilizer_element(&model, &mut rng);
                let hp = PhasePoint::new(h.compose(&p.s).unwrap(), p.u.clone()).unwrap();
                let lhs = model.momentum_jh(&hp).unwrap();
                let rhs = ad_action(&h, &model.momentum_jh(&p).unwrap()).unwrap();
                assert!((lhs.mat() - rhs.mat()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn momentum_is_inertia_paired_with_frame() {
        // ⟨𝕀u, ξ_α(s)⟩ = l̃_α by construction.
        let mut rng = StdRng::seed_from_u64(19);
        let model = random_model(4, &mut rng);
        let p = random_point(&model, &mut rng);
        let cs = model.coframe_coeffs(&p).unwrap();
        let iu = model
            .basis()
            .from_coeffs(&model.inertia().apply_coeffs(&model.basis().coeffs(&p.u).unwrap()))
            .unwrap();
        for alpha in 0..model.dim_h() {
            let xi = model.frame_field(&p.s, model.nz() + alpha).unwrap();
            let ip = killing_ip(&iu, &xi).unwrap();
            assert!((ip - cs.l_tilde[alpha]).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_eigenvalues_homogeneous() {
        let mut rng = StdRng::seed_from_u64(20);
        for n in [3, 4] {
            let model = Model::homogeneous(n).unwrap();
            let p = random_point(&model, &mut rng);
            let phi = model.metric_phi(&p.s).unwrap();
            // Eigenvalue 1 on the ξ-span, 2 on the ζ-span.
            for a in 0..model.nz() {
                let zeta = model.frame_field(&p.s, a).unwrap();
                let c = model.basis().coeffs(&zeta).unwrap();
                assert!((&phi * &c - &c * 2.0).norm() < 1e-12);
            }
            for alpha in 0..model.dim_h() {
                let xi = model.frame_field(&p.s, model.nz() + alpha).unwrap();
                let c = model.basis().coeffs(&xi).unwrap();
                assert!((&phi * &c - &c).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn phi_symmetric_positive_definite() {
        let mut rng = StdRng::seed_from_u64(21);
        for n in [3, 4] {
            let model = random_model(n, &mut rng);
            let p = random_point(&model, &mut rng);
            let phi = model.metric_phi(&p.s).unwrap();
            assert!((&phi - phi.transpose()).norm() < 1e-12);
            assert!(phi.clone().cholesky().is_some());
            // ⟨Φu, v⟩ = ⟨u, Φv⟩ on random coefficient vectors.
            let u = DVector::from_fn(model.m(), |_, _| rng.gen_range(-1.0..1.0));
            let v = DVector::from_fn(model.m(), |_, _| rng.gen_range(-1.0..1.0));
            let lhs = (&phi * &u).dot(&v);
            let rhs = u.dot(&(&phi * &v));
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn conformal_factor_homogeneous_values() {
        let mut rng = StdRng::seed_from_u64(22);
        let m3 = Model::homogeneous(3).unwrap();
        let p3 = random_point(&m3, &mut rng);
        assert!((m3.conformal_factor(&p3.s).unwrap() - 0.5).abs() < 1e-13);

        let m4 = Model::homogeneous(4).unwrap();
        let p4 = random_point(&m4, &mut rng);
        assert!((m4.conformal_factor(&p4.s).unwrap() - 2f64.powf(-1.5)).abs() < 1e-13);
    }

    #[test]
    fn conformal_factor_h_invariance() {
        let mut rng = StdRng::seed_from_u64(23);
        let model = Model::new(3, InertiaTensor::principal3(1.0, 2.0, 3.0).unwrap()).unwrap();
        for _ in 0..100 {
            let p = random_point(&model, &mut rng);
            let h = stabilizer_element(&model, &mut rng);
            let hs = h.compose(&p.s).unwrap();
            let d = model.conformal_factor(&hs).unwrap() - model.conformal_factor(&p.s).unwrap();
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn inertia_validation() {
        assert!(InertiaTensor::diagonal(&[1.0, -2.0, 3.0]).is_err());
        let asym = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.1, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(InertiaTensor::from_matrix(asym).is_err());
        assert!(InertiaTensor::identity(3).is_homogeneous());
        assert!(!InertiaTensor::principal3(1.0, 2.0, 3.0).unwrap().is_homogeneous());
    }
}
