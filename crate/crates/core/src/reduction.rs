//! The internal SO(n−1) symmetry: group action, projection to the sphere,
//! momentum level sets, closedness diagnostics and dimension audits.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraElement, GroupElement};
use crate::ball::{Model, PhasePoint};
use crate::dynamics::djh_frame;
use crate::forms::{self, ExteriorDerivative, FormKind, TangentVectorTS};
use crate::{Error, Result};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Singular-value cutoff used for numerical ranks and nullspaces.
pub const RANK_CUTOFF: f64 = 1e-10;

/// The action (s, u) ↦ (hs, u) of the stabilizer of e_n.
pub fn h_action(model: &Model, h: &GroupElement, p: &PhasePoint) -> Result<PhasePoint> {
    if h.n() != model.n() {
        return Err(Error::DimensionMismatch(h.n(), model.n()));
    }
    if !h.stabilizes_en(1e-10) {
        let n = h.n();
        let mut res = 0.0f64;
        for i in 0..n {
            let target = if i == n - 1 { 1.0 } else { 0.0 };
            res = res.max((h.mat()[(i, n - 1)] - target).abs());
        }
        return Err(Error::NotInStabilizer(res));
    }
    PhasePoint::new(h.compose(&p.s)?, p.u.clone())
}

/// A point of the reduced space S^{n−1} × so(n), plus orbit invariants of the
/// internal momentum.
#[derive(Debug, Clone)]
pub struct ReducedSample {
    /// The Poisson vector γ = s⁻¹ e_n (unit sphere).
    pub gamma: DVector<f64>,
    /// The (invariant) left-trivialized velocity, as adapted coefficients.
    pub u_coeffs: DVector<f64>,
    /// J_H at the point, as an element of h.
    pub level: AlgebraElement,
    /// Orbit invariants of J_H: sorted singular values of its h-block.
    pub orbit_invariants: Vec<f64>,
}

/// Projects a phase point to the reduced data.
pub fn project_reduced(model: &Model, p: &PhasePoint) -> Result<ReducedSample> {
    let n = model.n();
    let mut en = DVector::zeros(n);
    en[n - 1] = 1.0;
    let gamma = p.s.mat().transpose() * en;
    let level = model.momentum_jh(p)?;
    Ok(ReducedSample {
        gamma,
        u_coeffs: model.basis().coeffs(&p.u)?,
        orbit_invariants: orbit_invariants(&level),
        level,
    })
}

/// Sorted singular values of the upper (n−1)×(n−1) block of an h-element.
pub fn orbit_invariants(level: &AlgebraElement) -> Vec<f64> {
    let n = level.n();
    let block = level.mat().view((0, 0), (n - 1, n - 1)).into_owned();
    let mut sv: Vec<f64> = block.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// An orthonormal frame (in frame coordinates) of the tangent space to the
/// J_H level set at p, from the SVD nullspace of dJ_H.
pub fn level_set_frame(model: &Model, p: &PhasePoint) -> Result<Vec<DVector<f64>>> {
    let fd = model.frame_data(p)?;
    let d = djh_frame(model, &fd);
    nullspace(&d)
}

/// The same frame as tangent vectors.
pub fn level_set_frame_vectors(model: &Model, p: &PhasePoint) -> Result<Vec<TangentVectorTS>> {
    let fd = model.frame_data(p)?;
    level_set_frame(model, p)?
        .iter()
        .map(|x| forms::vector_from_frame_coords(model, &fd, x))
        .collect()
}

fn nullspace(mat: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    // Kernel as the orthogonal complement of the row space: the thin SVD
    // gives an orthonormal row-space basis, which we complete over the
    // standard basis with (twice-iterated) Gram–Schmidt.
    let dim = mat.ncols();
    let svd = mat.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let scale = svd.singular_values.max().max(1.0);
    let mut span: Vec<DVector<f64>> = Vec::new();
    for (r, &s) in svd.singular_values.iter().enumerate() {
        if s > RANK_CUTOFF * scale {
            span.push(vt.row(r).transpose().into_owned());
        }
    }
    let rank = span.len();
    let mut out = Vec::new();
    for i in 0..dim {
        if out.len() == dim - rank {
            break;
        }
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        for _ in 0..2 {
            for b in span.iter().chain(out.iter()) {
                let proj = b.dot(&v);
                v -= b * proj;
            }
        }
        let nrm = v.norm();
        if nrm > 0.3 {
            out.push(v / nrm);
        }
    }
    if out.len() != dim - rank {
        return Err(Error::SingularSystem(out.len() as f64));
    }
    Ok(out)
}

fn numerical_rank(mat: &DMatrix<f64>) -> usize {
    let sv = mat.clone().svd(false, false).singular_values;
    let scale = sv.max().max(1.0);
    sv.iter().filter(|&&s| s > RANK_CUTOFF * scale).count()
}

/// Max |dω| over frame or level-tangent triples at the given points.
pub fn closedness_verdict(
    model: &Model,
    kind: FormKind,
    points: &[PhasePoint],
    restrict_to_level: bool,
    triples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max = 0.0f64;
    for p in points {
        let ext = ExteriorDerivative::new(model);
        let tensor = ext.d2_frame(kind, p)?;
        if !restrict_to_level {
            max = max.max(tensor.max_abs());
            continue;
        }
        let frame = level_set_frame(model, p)?;
        if frame.len() < 3 {
            continue;
        }
        let combo = |rng: &mut StdRng| -> DVector<f64> {
            let mut v = DVector::zeros(2 * model.m());
            for f in &frame {
                v += f * rng.gen_range(-1.0..1.0f64);
            }
            let nrm = v.norm();
            if nrm > 0.0 {
                v /= nrm;
            }
            v
        };
        for _ in 0..triples.max(1) {
            let x = combo(&mut rng);
            let y = combo(&mut rng);
            let z = combo(&mut rng);
            max = max.max(tensor.contract(&x, &y, &z).abs());
        }
    }
    Ok(max)
}

/// Result of the reduced-space dimension audit at a momentum value λ ∈ h.
#[derive(Debug, Clone)]
pub struct DimensionAudit {
    pub n: usize,
    /// dim of the coadjoint/adjoint orbit of λ inside h (algebraic).
    pub orbit_dim: usize,
    /// dim of the isotropy subalgebra h_λ.
    pub isotropy_dim: usize,
    /// Expected reduced dimension 2(n−1) + dim O_λ.
    pub expected_reduced_dim: usize,
    /// Numerically measured dim of the J_H level set (2m − rank dJ_H).
    pub measured_level_dim: usize,
    /// measured_level_dim − dim h_λ.
    pub measured_reduced_dim: usize,
    pub consistent: bool,
}

/// The matrix of ad_λ restricted to h, in the Y-basis.
fn ad_lambda_h(model: &Model, lambda_y: &DVector<f64>) -> DMatrix<f64> {
    let st = model.structure();
    let nz = model.nz();
    let dh = model.dim_h();
    DMatrix::from_fn(dh, dh, |beta, alpha| {
        let mut acc = 0.0;
        for gamma in 0..dh {
            acc += lambda_y[gamma] * st.c(nz + beta, nz + gamma, nz + alpha);
        }
        acc
    })
}

/// Builds a phase point whose internal momentum equals λ (Y-components),
/// at a random attitude and with random contact components.
pub fn random_point_on_level(
    model: &Model,
    lambda_y: &DVector<f64>,
    rng: &mut StdRng,
) -> Result<PhasePoint> {
    let b = model.basis();
    let c = DVector::from_fn(b.dim(), |_, _| rng.gen_range(-1.0..1.0));
    let s = crate::algebra::group_exp(&b.from_coeffs(&c)?);
    // Target space-frame momentum T: Y-components λ, random Z-components.
    let mut ct = DVector::zeros(model.m());
    for a in 0..model.nz() {
        ct[a] = rng.gen_range(-1.0..1.0);
    }
    for alpha in 0..model.dim_h() {
        ct[model.nz() + alpha] = lambda_y[alpha];
    }
    let r = b.ad_matrix(&s)?;
    let cu = model
        .inertia()
        .apply_inverse_coeffs(&(r.transpose() * ct));
    PhasePoint::new(s, b.from_coeffs(&cu)?)
}

/// Audits dim(reduced space) = 2(n−1) + dim O_λ against measured ranks.
pub fn reduced_dimension_audit(
    model: &Model,
    lambda_y: &DVector<f64>,
    seed: u64,
) -> Result<DimensionAudit> {
    if lambda_y.len() != model.dim_h() {
        return Err(Error::DimensionMismatch(lambda_y.len(), model.dim_h()));
    }
    let n = model.n();
    let ad = ad_lambda_h(model, lambda_y);
    let orbit_dim = numerical_rank(&ad);
    let isotropy_dim = model.dim_h() - orbit_dim;
    let expected = 2 * (n - 1) + orbit_dim;

    let mut rng = StdRng::seed_from_u64(seed);
    let p = random_point_on_level(model, lambda_y, &mut rng)?;
    // Confirm the point actually sits on the level.
    let jh = model.momentum_jh_coeffs(&p)?;
    if (jh - lambda_y).norm() > 1e-9 {
        return Err(Error::SingularSystem((&model.momentum_jh_coeffs(&p)? - lambda_y).norm()));
    }
    let fd = model.frame_data(&p)?;
    let rank = numerical_rank(&djh_frame(model, &fd));
    let measured_level_dim = 2 * model.m() - rank;
    let measured_reduced_dim = measured_level_dim - isotropy_dim;
    Ok(DimensionAudit {
        n,
        orbit_dim,
        isotropy_dim,
        expected_reduced_dim: expected,
        measured_level_dim,
        measured_reduced_dim,
        consistent: expected == measured_reduced_dim,
    })
}
