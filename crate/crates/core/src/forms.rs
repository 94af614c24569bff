//! Exterior calculus on the left-trivialized TS = SO(n) × so(n).
//!
//! All forms are evaluated through a global moving frame on T(TS):
//!
//! * base fields `Ê_i` (i = 0..m) lifting the right-invariant fields
//!   ξ/ζ on SO(n), with exact flow `(s, u) ↦ (exp(tB_i)s, u)`;
//! * fiber fields `V_j` (j = 0..m) with exact flow `(s, u) ↦ (s, u + tB_j)`.
//!
//! The frame bracket table is `[Ê_i, Ê_j] = −Σ_k C^k_ij Ê_k`, all other
//! brackets vanish, which makes the intrinsic exterior-derivative formula
//! exact up to the accuracy of the coefficient derivatives.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{group_exp, AlgebraElement};
use crate::ball::{FrameData, Model, PhasePoint};
use crate::{Error, Result};

/// Points with some |g_a| at or below this are treated as being on the
/// relative-equilibria set where the truncation projection is undefined.
pub const EQUILIBRIUM_EPS: f64 = 1e-8;

/// A tangent vector to TS at (s, u): `a = s⁻¹ṡ` (left-trivialized base
/// velocity) and `b = u̇` (fiber velocity).
#[derive(Debug, Clone)]
pub struct TangentVectorTS {
    pub a: AlgebraElement,
    pub b: AlgebraElement,
}

impl TangentVectorTS {
    pub fn new(a: AlgebraElement, b: AlgebraElement) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::DimensionMismatch(a.n(), b.n()));
        }
        Ok(Self { a, b })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            a: AlgebraElement::zero(n),
            b: AlgebraElement::zero(n),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            a: self.a.scale(c),
            b: self.b.scale(c),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            a: self.a.add(&other.a)?,
            b: self.b.add(&other.b)?,
        })
    }
}

/// The named 2-forms of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    /// The canonical almost-symplectic form Ω^S = −dθ^S.
    OmegaS,
    /// The nonholonomic correction ⟨J, K⟩.
    Jk,
    /// The curvature pairing ⟨L, Curv⟩.
    LCurv,
    /// Ω_nh = Ω^S − ⟨J, K⟩.
    OmegaNh,
    /// Ω̃ = Ω^S − ⟨L, Curv⟩.
    OmegaTilde,
    /// The conformally rescaled f·Ω̃.
    FOmegaTilde,
    /// ⟨J, K⟩ composed with the truncation projection χ in both slots.
    TruncatedJk,
}

impl FormKind {
    pub const ALL: [FormKind; 7] = [
        FormKind::OmegaS,
        FormKind::Jk,
        FormKind::LCurv,
        FormKind::OmegaNh,
        FormKind::OmegaTilde,
        FormKind::FOmegaTilde,
        FormKind::TruncatedJk,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FormKind::OmegaS => "omega_s",
            FormKind::Jk => "jk",
            FormKind::LCurv => "l_curv",
            FormKind::OmegaNh => "omega_nh",
            FormKind::OmegaTilde => "omega_tilde",
            FormKind::FOmegaTilde => "f_omega_tilde",
            FormKind::TruncatedJk => "truncated_jk",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        FormKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Scenario(format!("unknown form `{s}`")))
    }
}

/// The coframe 1-forms used in tests and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OneForm {
    /// θ^S, the pulled-back canonical/Liouville form.
    ThetaS,
    /// ρ^α (internal coframe component), α = 0..dim h.
    Rho(usize),
    /// η^a (contact-direction coframe component), a = 0..n−1.
    Eta(usize),
}

/// A form together with its degree, for the generic exterior derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferentialForm {
    One(OneForm),
    Two(FormKind),
}

impl DifferentialForm {
    pub fn degree(&self) -> usize {
        match self {
            DifferentialForm::One(_) => 1,
            DifferentialForm::Two(_) => 2,
        }
    }
}

// ---------------------------------------------------------------------------
// Frame machinery
// ---------------------------------------------------------------------------

/// Frame coordinates of v at p: `(R c(a), c(b))`, length 2m.
pub fn frame_coords(model: &Model, fd: &FrameData, v: &TangentVectorTS) -> Result<DVector<f64>> {
    let m = model.m();
    let ca = model.basis().coeffs(&v.a)?;
    let cb = model.basis().coeffs(&v.b)?;
    let xb = &fd.r * ca;
    let mut x = DVector::zeros(2 * m);
    for i in 0..m {
        x[i] = xb[i];
        x[m + i] = cb[i];
    }
    Ok(x)
}

/// Inverse of [`frame_coords`].
pub fn vector_from_frame_coords(
    model: &Model,
    fd: &FrameData,
    x: &DVector<f64>,
) -> Result<TangentVectorTS> {
    let m = model.m();
    if x.len() != 2 * m {
        return Err(Error::DimensionMismatch(x.len(), 2 * m));
    }
    let xb = x.rows(0, m).into_owned();
    let cb = x.rows(m, m).into_owned();
    let ca = fd.r.transpose() * xb;
    TangentVectorTS::new(
        model.basis().from_coeffs(&ca)?,
        model.basis().from_coeffs(&cb)?,
    )
}

/// The frame field with global index `idx` (0..m base, m..2m fiber) at p.
pub fn frame_vector(model: &Model, p: &PhasePoint, idx: usize) -> Result<TangentVectorTS> {
    let m = model.m();
    let n = model.n();
    if idx < m {
        TangentVectorTS::new(model.frame_field(&p.s, idx)?, AlgebraElement::zero(n))
    } else {
        TangentVectorTS::new(
            AlgebraElement::zero(n),
            model.basis().basis_element(idx - m),
        )
    }
}

/// The exact time-t flow of the frame field `idx` starting at p.
pub fn flow_frame(model: &Model, p: &PhasePoint, idx: usize, t: f64) -> Result<PhasePoint> {
    let m = model.m();
    if idx < m {
        let g = group_exp(&model.basis().basis_element(idx).scale(t));
        PhasePoint::new(g.compose(&p.s)?, p.u.clone())
    } else {
        let u = p.u.add(&model.basis().basis_element(idx - m).scale(t))?;
        PhasePoint::new(p.s.clone(), u)
    }
}

/// θ^S-coefficients against the base frame: t_k = w̃_k (+ w_k on η-indices).
pub fn theta_coeffs(model: &Model, fd: &FrameData) -> DVector<f64> {
    let m = model.m();
    let nz = model.nz();
    let mut t = fd.wt.clone();
    for a in 0..nz {
        t[a] += fd.w[a];
    }
    let _ = m;
    t
}

/// Closed-form base derivatives D[i][j] = Ê_i · t_j of the θ^S-coefficients.
pub fn theta_coeffs_base_derivs(model: &Model, fd: &FrameData) -> DMatrix<f64> {
    let m = model.m();
    let nz = model.nz();
    let st = model.structure();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        let adi = st.ad_matrix_of(i);
        let dw = adi * &fd.w;
        let dwt = adi * &fd.wt;
        for j in 0..m {
            d[(i, j)] = dwt[j] + if j < nz { dw[j] } else { 0.0 };
        }
    }
    d
}

/// Closed-form fiber derivatives F[i][j] = V_j · t_i of the θ^S-coefficients.
pub fn theta_coeffs_fiber_derivs(model: &Model, fd: &FrameData) -> DMatrix<f64> {
    let m = model.m();
    let nz = model.nz();
    let ri = &fd.r * model.inertia().matrix();
    let mut f = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            f[(i, j)] = ri[(i, j)] + if i < nz { fd.r[(i, j)] } else { 0.0 };
        }
    }
    f
}

// ---------------------------------------------------------------------------
// One-forms
// ---------------------------------------------------------------------------

/// Frame coefficients (length 2m) of a 1-form at p.
pub fn one_form_coeffs(model: &Model, form: OneForm, fd: &FrameData) -> Result<DVector<f64>> {
    let m = model.m();
    let nz = model.nz();
    let mut c = DVector::zeros(2 * m);
    match form {
        OneForm::ThetaS => {
            let t = theta_coeffs(model, fd);
            for k in 0..m {
                c[k] = t[k];
            }
        }
        OneForm::Rho(alpha) => {
            if alpha >= model.dim_h() {
                return Err(Error::DimensionMismatch(alpha, model.dim_h()));
            }
            c[nz + alpha] = 1.0;
        }
        OneForm::Eta(a) => {
            if a >= nz {
                return Err(Error::DimensionMismatch(a, nz));
            }
            c[a] = 1.0;
        }
    }
    Ok(c)
}

/// Evaluates a 1-form on a tangent vector.
pub fn eval_one_form(
    model: &Model,
    form: OneForm,
    p: &PhasePoint,
    v: &TangentVectorTS,
) -> Result<f64> {
    let fd = model.frame_data(p)?;
    let c = one_form_coeffs(model, form, &fd)?;
    let x = frame_coords(model, &fd, v)?;
    Ok(c.dot(&x))
}

/// Closed-form frame derivatives of the coefficients of a 1-form:
/// entry (dir, j) = E_dir · κ_j.  Available for every [`OneForm`].
fn one_form_coeff_derivs(model: &Model, form: OneForm, fd: &FrameData) -> DMatrix<f64> {
    let m = model.m();
    let mut d = DMatrix::zeros(2 * m, 2 * m);
    if form == OneForm::ThetaS {
        let base = theta_coeffs_base_derivs(model, fd);
        let fib = theta_coeffs_fiber_derivs(model, fd);
        for i in 0..m {
            for j in 0..m {
                d[(i, j)] = base[(i, j)];
                d[(m + i, j)] = fib[(j, i)];
            }
        }
    }
    d
}

// ---------------------------------------------------------------------------
// Two-forms: Gram matrices in the frame basis
// ---------------------------------------------------------------------------

/// The 2m×2m Gram matrix G_ij = ω(E_i, E_j) of a named 2-form at p.
pub fn gram(model: &Model, kind: FormKind, p: &PhasePoint) -> Result<DMatrix<f64>> {
    let fd = model.frame_data(p)?;
    gram_from_data(model, kind, p, &fd)
}

/// [`gram`] with a precomputed [`FrameData`].
pub fn gram_from_data(
    model: &Model,
    kind: FormKind,
    p: &PhasePoint,
    fd: &FrameData,
) -> Result<DMatrix<f64>> {
    let m = model.m();
    match kind {
        FormKind::OmegaS => Ok(gram_omega_s(model, fd)),
        FormKind::Jk => Ok(gram_jk(model, fd)),
        FormKind::LCurv => Ok(gram_lcurv(model, fd)),
        FormKind::OmegaNh => Ok(gram_omega_s(model, fd) - gram_jk(model, fd)),
        FormKind::OmegaTilde => Ok(gram_omega_s(model, fd) - gram_lcurv(model, fd)),
        FormKind::FOmegaTilde => {
            let f = model.conformal_factor(&p.s)?;
            Ok((gram_omega_s(model, fd) - gram_lcurv(model, fd)) * f)
        }
        FormKind::TruncatedJk => {
            let chi = chi_frame_matrix(model, fd)?;
            let g = gram_jk(model, fd);
            let _ = m;
            Ok(chi.transpose() * g * chi)
        }
    }
}

fn gram_omega_s(model: &Model, fd: &FrameData) -> DMatrix<f64> {
    let m = model.m();
    let st = model.structure();
    let t = theta_coeffs(model, fd);
    let d = theta_coeffs_base_derivs(model, fd);
    let f = theta_coeffs_fiber_derivs(model, fd);
    let mut g = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let mut ct = 0.0;
            for k in 0..m {
                ct += st.c(k, i, j) * t[k];
            }
            g[(i, j)] = -d[(i, j)] + d[(j, i)] - ct;
            g[(i, m + j)] = f[(i, j)];
            g[(m + j, i)] = -f[(i, j)];
        }
    }
    g
}

fn gram_jk(model: &Model, fd: &FrameData) -> DMatrix<f64> {
    let m = model.m();
    let nz = model.nz();
    let st = model.structure();
    let mut g = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for a in 0..nz {
                acc -= fd.w[a] * st.c(a, i, j);
            }
            g[(i, j)] = acc;
        }
    }
    g
}

fn gram_lcurv(model: &Model, fd: &FrameData) -> DMatrix<f64> {
    let m = model.m();
    let nz = model.nz();
    let st = model.structure();
    let mut g = DMatrix::zeros(2 * m, 2 * m);
    for b in 0..nz {
        for c in 0..nz {
            let mut acc = 0.0;
            for alpha in nz..m {
                acc += fd.w[alpha] * st.c(alpha, b, c);
            }
            g[(b, c)] = acc;
        }
    }
    g
}

/// Evaluates a named 2-form on a pair of tangent vectors.
pub fn eval_two_form(
    model: &Model,
    kind: FormKind,
    p: &PhasePoint,
    v1: &TangentVectorTS,
    v2: &TangentVectorTS,
) -> Result<f64> {
    let fd = model.frame_data(p)?;
    let g = gram_from_data(model, kind, p, &fd)?;
    let x1 = frame_coords(model, &fd, v1)?;
    let x2 = frame_coords(model, &fd, v2)?;
    Ok((g * x2).dot(&x1))
}

// ---------------------------------------------------------------------------
// The truncation projection χ
// ---------------------------------------------------------------------------

/// The matrix of χ acting on frame coordinates.  Errors with
/// [`Error::NearEquilibrium`] when some |g_a| ≤ [`EQUILIBRIUM_EPS`].
pub fn chi_frame_matrix(model: &Model, fd: &FrameData) -> Result<DMatrix<f64>> {
    let m = model.m();
    let nz = model.nz();
    let mut min_g = f64::INFINITY;
    for a in 0..nz {
        min_g = min_g.min(fd.w[a].abs());
    }
    if min_g <= EQUILIBRIUM_EPS {
        return Err(Error::NearEquilibrium(min_g));
    }
    let scale = 1.0 / (model.n() as f64 - 1.0);
    let mut chi = DMatrix::zeros(2 * m, 2 * m);
    for a in 0..nz {
        chi[(a, a)] = 1.0;
    }
    for alpha in nz..m {
        for a in 0..nz {
            chi[(alpha, a)] = scale * fd.w[alpha] / fd.w[a];
        }
    }
    for j in 0..m {
        chi[(m + j, m + j)] = 1.0;
    }
    Ok(chi)
}

/// Applies the truncation projection χ to a tangent vector at p.
pub fn chi_projection(
    model: &Model,
    p: &PhasePoint,
    v: &TangentVectorTS,
) -> Result<TangentVectorTS> {
    let fd = model.frame_data(p)?;
    let chi = chi_frame_matrix(model, &fd)?;
    let x = frame_coords(model, &fd, v)?;
    vector_from_frame_coords(model, &fd, &(chi * x))
}

// ---------------------------------------------------------------------------
// Exterior derivative
// ---------------------------------------------------------------------------

/// Frame-based exterior derivative.
///
/// Coefficient functions are differentiated along the exact frame flows,
/// either with registered closed-form derivatives (1-forms) or a 4th-order
/// central difference; the non-coordinate frame is corrected through the
/// constant bracket table.
pub struct ExteriorDerivative<'a> {
    model: &'a Model,
    step: f64,
    use_registered: bool,
}

impl<'a> ExteriorDerivative<'a> {
    pub fn new(model: &'a Model) -> Self {
        Self {
            model,
            step: 1e-4,
            use_registered: true,
        }
    }

    /// Forces finite differences even where closed-form derivatives exist
    /// (used to audit the registered derivatives).
    pub fn finite_difference_only(mut self) -> Self {
        self.use_registered = false;
        self
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.step = h;
        self
    }

    /// dκ as an antisymmetric (2m)×(2m) frame matrix.
    pub fn d1_frame(&self, form: OneForm, p: &PhasePoint) -> Result<DMatrix<f64>> {
        let model = self.model;
        let m = model.m();
        let fd = model.frame_data(p)?;
        let c0 = one_form_coeffs(model, form, &fd)?;
        let dcoef = if self.use_registered {
            one_form_coeff_derivs(model, form, &fd)
        } else {
            let mut d = DMatrix::zeros(2 * m, 2 * m);
            for dir in 0..2 * m {
                let row = self.fd4(p, dir, |q| {
                    let fq = model.frame_data(q)?;
                    one_form_coeffs(model, form, &fq)
                })?;
                for j in 0..2 * m {
                    d[(dir, j)] = row[j];
                }
            }
            d
        };
        let st = model.structure();
        let mut out = DMatrix::zeros(2 * m, 2 * m);
        for a in 0..2 * m {
            for b in 0..2 * m {
                let mut v = dcoef[(a, b)] - dcoef[(b, a)];
                // κ([E_a, E_b]) = −Σ C^k_ab κ_k for base-base pairs.
                if a < m && b < m {
                    for k in 0..m {
                        v += st.c(k, a, b) * c0[k];
                    }
                }
                out[(a, b)] = v;
            }
        }
        Ok(out)
    }

    /// dω as a rank-3 frame tensor for a named 2-form.
    pub fn d2_frame(&self, kind: FormKind, p: &PhasePoint) -> Result<D2Tensor> {
        let model = self.model;
        let m = model.m();
        let dim = 2 * m;
        let g0 = gram(model, kind, p)?;
        let mut dg = Vec::with_capacity(dim);
        for dir in 0..dim {
            dg.push(self.fd4_mat(p, dir, |q| gram(model, kind, q))?);
        }
        let st = model.structure();
        let mut t = vec![0.0; dim * dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    let mut v = dg[a][(b, c)] - dg[b][(a, c)] + dg[c][(a, b)];
                    if a < m && b < m {
                        for k in 0..m {
                            v += st.c(k, a, b) * g0[(k, c)];
                        }
                    }
                    if a < m && c < m {
                        for k in 0..m {
                            v -= st.c(k, a, c) * g0[(k, b)];
                        }
                    }
                    if b < m && c < m {
                        for k in 0..m {
                            v += st.c(k, b, c) * g0[(k, a)];
                        }
                    }
                    t[(a * dim + b) * dim + c] = v;
                }
            }
        }
        Ok(D2Tensor { dim, t })
    }

    /// Generic entry point: dω(v_0, …, v_k) with k + 1 = degree + 1 vectors.
    pub fn eval(
        &self,
        form: DifferentialForm,
        p: &PhasePoint,
        vs: &[TangentVectorTS],
    ) -> Result<f64> {
        let deg = form.degree();
        if vs.len() != deg + 1 {
            return Err(Error::UnsupportedDegree(vs.len().saturating_sub(1)));
        }
        let model = self.model;
        let fd = model.frame_data(p)?;
        let xs: Vec<DVector<f64>> = vs
            .iter()
            .map(|v| frame_coords(model, &fd, v))
            .collect::<Result<_>>()?;
        match form {
            DifferentialForm::One(f) => {
                let d = self.d1_frame(f, p)?;
                Ok((d * &xs[1]).dot(&xs[0]))
            }
            DifferentialForm::Two(kind) => {
                let t = self.d2_frame(kind, p)?;
                Ok(t.contract(&xs[0], &xs[1], &xs[2]))
            }
        }
    }

    /// 4th-order central difference of a vector-valued coefficient function
    /// along the exact flow of frame direction `dir`.
    fn fd4<F>(&self, p: &PhasePoint, dir: usize, f: F) -> Result<DVector<f64>>
    where
        F: Fn(&PhasePoint) -> Result<DVector<f64>>,
    {
        let h = self.step;
        let model = self.model;
        let fp2 = f(&flow_frame(model, p, dir, 2.0 * h)?)?;
        let fp1 = f(&flow_frame(model, p, dir, h)?)?;
        let fm1 = f(&flow_frame(model, p, dir, -h)?)?;
        let fm2 = f(&flow_frame(model, p, dir, -2.0 * h)?)?;
        Ok((-fp2 + fp1 * 8.0 - fm1 * 8.0 + fm2) / (12.0 * h))
    }

    fn fd4_mat<F>(&self, p: &PhasePoint, dir: usize, f: F) -> Result<DMatrix<f64>>
    where
        F: Fn(&PhasePoint) -> Result<DMatrix<f64>>,
    {
        let h = self.step;
        let model = self.model;
        let fp2 = f(&flow_frame(model, p, dir, 2.0 * h)?)?;
        let fp1 = f(&flow_frame(model, p, dir, h)?)?;
        let fm1 = f(&flow_frame(model, p, dir, -h)?)?;
        let fm2 = f(&flow_frame(model, p, dir, -2.0 * h)?)?;
        Ok((-fp2 + fp1 * 8.0 - fm1 * 8.0 + fm2) / (12.0 * h))
    }
}

/// dω of a 2-form as a frame tensor; contract with frame coordinates.
pub struct D2Tensor {
    dim: usize,
    t: Vec<f64>,
}

impl D2Tensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.t[(a * self.dim + b) * self.dim + c]
    }

    pub fn contract(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for a in 0..d {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..d {
                if y[b] == 0.0 {
                    continue;
                }
                for c in 0..d {
                    acc += self.get(a, b, c) * x[a] * y[b] * z[c];
                }
            }
        }
        acc
    }

    /// Max |dω(E_a, E_b, E_c)| over all frame triples.
    pub fn max_abs(&self) -> f64 {
        self.t.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
