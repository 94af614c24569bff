//! Independent cross-check: the ball integrated in the full configuration
//! space Q = SO(n) × R^{n−1} with explicit Lagrange multipliers enforcing the
//! rolling constraint ẋ^a = η^a_s(u).
//!
//! This path never touches the almost-symplectic machinery: it solves the
//! Euler–Lagrange equations with reaction forces,
//!
//! ```text
//!   (𝕀u)˙ = [𝕀u, u] + Ad(s⁻¹)Λ,   Λ = Σ λ_a Z_a,
//!   ẍ     = −Σ λ_a e_a,
//! ```
//!
//! with λ determined pointwise by differentiating the constraint.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{bracket, group_exp, AlgebraElement, GroupElement};
use crate::ball::{Model, PhasePoint};
use crate::dynamics::{integrate, IntegrateOpts, Trajectory};
use crate::forms::FormKind;
use crate::{Error, Result};

/// A state of the full system: configuration (s, x) and velocity (u, v) with
/// u left-trivialized and v = ẋ.
#[derive(Debug, Clone)]
pub struct FullState {
    pub s: GroupElement,
    pub x: DVector<f64>,
    pub u: AlgebraElement,
    pub v: DVector<f64>,
}

impl FullState {
    /// Starts on the constraint: v is set to g(s, u), x to the origin.
    pub fn on_constraint(model: &Model, p: &PhasePoint) -> Result<Self> {
        let g = contact_velocity(model, p)?;
        Ok(Self {
            s: p.s.clone(),
            x: DVector::zeros(model.nz()),
            u: p.u.clone(),
            v: g,
        })
    }

    pub fn phase_point(&self) -> Result<PhasePoint> {
        PhasePoint::new(self.s.clone(), self.u.clone())
    }
}

/// The constrained contact-point velocity g_a(s, u) = η^a_s(u).
pub fn contact_velocity(model: &Model, p: &PhasePoint) -> Result<DVector<f64>> {
    let fd = model.frame_data(p)?;
    Ok(fd.w.rows(0, model.nz()).into_owned())
}

/// |v − g(s, u)|, the violation of the rolling constraint.
pub fn constraint_residual(model: &Model, st: &FullState) -> Result<f64> {
    let g = contact_velocity(model, &st.phase_point()?)?;
    Ok((&st.v - g).norm())
}

/// The pointwise multiplier solve.
#[derive(Debug, Clone)]
pub struct MultiplierSolution {
    /// u̇ ∈ so(n).
    pub udot: AlgebraElement,
    /// ẍ ∈ R^{n−1}.
    pub xddot: DVector<f64>,
    /// The multipliers λ_a.
    pub lambda: DVector<f64>,
}

/// Solves for (u̇, ẍ, λ) at a constrained state.
pub fn multiplier_solve(model: &Model, st: &FullState) -> Result<MultiplierSolution> {
    let basis = model.basis();
    let nz = model.nz();
    let p = st.phase_point()?;
    let fd = model.frame_data(&p)?;
    let iinv = model.inertia().inverse_matrix();

    // Torque-free part: c([𝕀u, u]).
    let iu = basis.from_coeffs(&model.inertia().apply_coeffs(&fd.cu))?;
    let torque = bracket(&iu, &p.u)?;
    let ct = basis.coeffs(&torque)?;

    // (δ_ab + M_ab) λ_b = −r_a with
    //   M_ab = ⟨Ad(s) 𝕀⁻¹ Ad(s⁻¹) Z_b, Z_a⟩,  r_a = ⟨Ad(s) 𝕀⁻¹ [𝕀u, u], Z_a⟩.
    let mut sys = DMatrix::<f64>::identity(nz, nz);
    for b in 0..nz {
        let zb_body = fd.r.transpose().column(b).into_owned();
        let q = &fd.r * (iinv * zb_body);
        for a in 0..nz {
            sys[(a, b)] += q[a];
        }
    }
    let r_vec = &fd.r * (iinv * &ct);
    let rhs = -r_vec.rows(0, nz).into_owned();
    let lu = sys.lu();
    let det = lu.determinant().abs();
    let lambda = lu.solve(&rhs).ok_or(Error::SingularSystem(det))?;

    // u̇ = 𝕀⁻¹([𝕀u, u] + Ad(s⁻¹)Λ) in coefficients.
    let mut lam_pad = DVector::zeros(model.m());
    for a in 0..nz {
        lam_pad[a] = lambda[a];
    }
    let cudot = iinv * (&ct + fd.r.transpose() * lam_pad);
    let udot = basis.from_coeffs(&cudot)?;
    Ok(MultiplierSolution {
        udot,
        xddot: -&lambda,
        lambda,
    })
}

/// Residual of d'Alembert's principle at a constrained state: the reaction
/// force must annihilate every constraint-compatible virtual displacement.
/// Independent of the multiplier formulation above.
pub fn dalembert_residual(model: &Model, st: &FullState, sol: &MultiplierSolution) -> Result<f64> {
    let basis = model.basis();
    let iu = basis.from_coeffs(&model.inertia().apply_coeffs(&basis.coeffs(&st.u)?))?;
    let iudot = basis.from_coeffs(&model.inertia().apply_coeffs(&basis.coeffs(&sol.udot)?))?;
    // (𝕀u)˙ = 𝕀u̇ since 𝕀 is time-independent in the body frame.
    let torque = bracket(&iu, &st.u)?;
    let mut res = 0.0f64;
    for i in 0..model.m() {
        // Virtual displacement (w, δx) with δx^a = η^a(w), w = ζ_i or ξ_i.
        let w = model.frame_field(&st.s, i)?;
        let pw = PhasePoint::new(st.s.clone(), w.clone())?;
        let dx = contact_velocity(model, &pw)?;
        let body = crate::algebra::killing_ip(&iudot, &w)?
            - crate::algebra::killing_ip(&torque, &w)?;
        let trans = sol.xddot.dot(&dx);
        res = res.max((body + trans).abs());
    }
    Ok(res)
}

/// A full-system trajectory on a uniform time grid.
#[derive(Debug, Clone)]
pub struct FullTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FullState>,
    /// Largest per-step velocity projection applied to stay on the constraint.
    pub max_projection: f64,
    pub max_ortho_residual: f64,
}

/// Integrates the constrained full system with RK4 in the exponential chart,
/// projecting the contact velocity back onto the constraint after each step.
pub fn integrate_constrained(
    model: &Model,
    st0: &FullState,
    t_end: f64,
    dt: f64,
) -> Result<FullTrajectory> {
    let steps = (t_end / dt).round() as usize;
    if steps == 0 || (steps as f64 * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::Scenario(format!(
            "t_end = {t_end} is not an integer multiple of dt = {dt}"
        )));
    }
    let n = model.n();
    let nz = model.nz();
    let basis = model.basis();

    let mut traj = FullTrajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        max_projection: 0.0,
        max_ortho_residual: 0.0,
    };
    let mut st = st0.clone();
    traj.times.push(0.0);
    traj.states.push(st.clone());

    // Chart variables per step: (θ, Δx, Δu, Δv).
    type Stage = (AlgebraElement, DVector<f64>, AlgebraElement, DVector<f64>);
    for k in 0..steps {
        let eval = |theta: &AlgebraElement,
                    dx: &DVector<f64>,
                    du: &AlgebraElement,
                    dv: &DVector<f64>|
         -> Result<Stage> {
            let q = FullState {
                s: st.s.compose(&group_exp(theta))?,
                x: &st.x + dx,
                u: st.u.add(du)?,
                v: &st.v + dv,
            };
            let sol = multiplier_solve(model, &q)?;
            // θ̇ from s⁻¹ṡ = u, same chart correction as the compressed path.
            let c1 = bracket(theta, &q.u)?;
            let c2 = bracket(theta, &c1)?;
            let thetadot = q.u.add(&c1.scale(0.5))?.add(&c2.scale(1.0 / 12.0))?;
            Ok((thetadot, q.v.clone(), sol.udot, sol.xddot))
        };
        let z = AlgebraElement::zero(n);
        let zx = DVector::zeros(nz);
        let k1 = eval(&z, &zx, &z, &zx)?;
        let k2 = eval(
            &k1.0.scale(dt / 2.0),
            &(&k1.1 * (dt / 2.0)),
            &k1.2.scale(dt / 2.0),
            &(&k1.3 * (dt / 2.0)),
        )?;
        let k3 = eval(
            &k2.0.scale(dt / 2.0),
            &(&k2.1 * (dt / 2.0)),
            &k2.2.scale(dt / 2.0),
            &(&k2.3 * (dt / 2.0)),
        )?;
        let k4 = eval(&k3.0.scale(dt), &(&k3.1 * dt), &k3.2.scale(dt), &(&k3.3 * dt))?;

        let comb_alg = |a: &AlgebraElement,
                        b: &AlgebraElement,
                        c: &AlgebraElement,
                        d: &AlgebraElement|
         -> Result<AlgebraElement> {
            a.add(&b.scale(2.0))?
                .add(&c.scale(2.0))?
                .add(d)
                .map(|s| s.scale(dt / 6.0))
        };
        let comb_vec = |a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>| {
            (a + b * 2.0 + c * 2.0 + d) * (dt / 6.0)
        };
        let theta = comb_alg(&k1.0, &k2.0, &k3.0, &k4.0)?;
        let dx = comb_vec(&k1.1, &k2.1, &k3.1, &k4.1);
        let du = comb_alg(&k1.2, &k2.2, &k3.2, &k4.2)?;
        let dv = comb_vec(&k1.3, &k2.3, &k3.3, &k4.3);

        let mut s_next = st.s.compose(&group_exp(&theta))?;
        let ortho = s_next.orthogonality_residual();
        traj.max_ortho_residual = traj.max_ortho_residual.max(ortho);
        if ortho > 1e-12 {
            s_next = s_next.reorthonormalize();
        }
        let u_next = st.u.add(&du)?;
        let v_raw = &st.v + dv;
        // Velocity-level projection back onto the constraint.
        let g = contact_velocity(
            model,
            &PhasePoint::new(s_next.clone(), u_next.clone())?,
        )?;
        let proj = (&v_raw - &g).norm();
        traj.max_projection = traj.max_projection.max(proj);
        if proj > 1e-9 {
            return Err(Error::ConstraintGuard {
                t: (k + 1) as f64 * dt,
                drift: proj,
            });
        }
        st = FullState {
            s: s_next,
            x: &st.x + dx,
            u: u_next,
            v: g,
        };
        traj.times.push((k + 1) as f64 * dt);
        traj.states.push(st.clone());
    }
    let _ = basis;
    Ok(traj)
}

/// Report of a full-vs-compressed comparison run.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub max_state_deviation: f64,
    pub max_constraint_residual: f64,
    pub full_max_projection: f64,
}

/// Integrates both descriptions from the same initial data on the same grid
/// and reports the worst (s, u)-deviation.
pub fn compare_projection(
    model: &Model,
    p0: &PhasePoint,
    t_end: f64,
    dt: f64,
) -> Result<CompareReport> {
    let mut opts = IntegrateOpts::new(t_end, dt);
    opts.form = FormKind::OmegaTilde;
    let comp: Trajectory = integrate(model, p0, &opts)?;
    let st0 = FullState::on_constraint(model, p0)?;
    let full = integrate_constrained(model, &st0, t_end, dt)?;
    if comp.times.len() != full.times.len() {
        return Err(Error::GridMismatch);
    }
    let mut dev = 0.0f64;
    let mut cres = 0.0f64;
    for (a, b) in comp.states.iter().zip(full.states.iter()) {
        dev = dev.max((a.s.mat() - b.s.mat()).norm() + (a.u.mat() - b.u.mat()).norm());
        cres = cres.max(constraint_residual(model, b)?);
    }
    Ok(CompareReport {
        max_state_deviation: dev,
        max_constraint_residual: cres,
        full_max_projection: full.max_projection,
    })
}
