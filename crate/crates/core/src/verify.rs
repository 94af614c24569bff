//! Named verification suites behind `verify` on the CLI.
//!
//! Each check is a residual against a fixed threshold; witness-style checks
//! instead require the residual to *exceed* the threshold.  All randomness is
//! seeded, so a suite run is reproducible.

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    adapted_basis, group_exp, killing_ip, structure_constants, GroupElement,
};
use crate::ball::{InertiaTensor, Model, PhasePoint};
use crate::dynamics::{
    self, djh_frame, integrate, solve_xnh, IntegrateOpts,
};
use crate::forms::{
    self, eval_one_form, eval_two_form, frame_vector, ExteriorDerivative, FormKind, OneForm,
};
use crate::oracle::{self, FullState};
use crate::reduction;
use crate::{Error, Result};

/// The available suite names.
pub const SUITES: [&str; 6] = [
    "algebra",
    "forms",
    "truncation",
    "hamiltonization",
    "oracle",
    "all",
];

/// Direction of a check: residual at most, or witness at least, threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOp {
    AtMost,
    AtLeast,
}

/// One named check with its outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub op: CheckOp,
    pub pass: bool,
}

fn at_most(name: impl Into<String>, residual: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        residual,
        threshold,
        op: CheckOp::AtMost,
        pass: residual.is_finite() && residual <= threshold,
    }
}

fn at_least(name: impl Into<String>, residual: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        residual,
        threshold,
        op: CheckOp::AtLeast,
        pass: residual.is_finite() && residual >= threshold,
    }
}

/// Outcome of a suite run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub ns: Vec<usize>,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

/// Runs a named suite over the given dimensions.
pub fn run_suite(suite: &str, ns: &[usize], seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    match suite {
        "algebra" => {
            for &n in ns {
                algebra_checks(n, seed, false, &mut checks)?;
            }
        }
        "forms" => {
            for &n in ns {
                forms_checks(n, seed, &mut checks)?;
            }
        }
        "truncation" => {
            for &n in ns {
                truncation_checks(n, seed, &mut checks)?;
            }
        }
        "hamiltonization" => {
            for &n in ns {
                hamiltonization_checks(n, seed, &mut checks)?;
            }
        }
        "oracle" => {
            for &n in ns {
                oracle_checks(n, seed, &mut checks)?;
            }
        }
        "all" => {
            for &n in ns {
                algebra_checks(n, seed, false, &mut checks)?;
                forms_checks(n, seed, &mut checks)?;
                truncation_checks(n, seed, &mut checks)?;
                hamiltonization_checks(n, seed, &mut checks)?;
                oracle_checks(n, seed, &mut checks)?;
            }
        }
        other => {
            return Err(Error::Scenario(format!("unknown suite `{other}`")));
        }
    }
    Ok(SuiteReport {
        suite: suite.to_string(),
        seed,
        ns: ns.to_vec(),
        checks,
    })
}

/// Negative-path fixture: runs the algebra checks against a structure tensor
/// with one deliberately corrupted entry; the Jacobi check must fail.
pub fn run_suite_corrupted(ns: &[usize], seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for &n in ns {
        algebra_checks(n, seed, true, &mut checks)?;
    }
    Ok(SuiteReport {
        suite: "all(corrupted-fixture)".to_string(),
        seed,
        ns: ns.to_vec(),
        checks,
    })
}

// ---------------------------------------------------------------------------
// Shared deterministic generators
// ---------------------------------------------------------------------------

fn rng_for(n: usize, seed: u64, salt: u64) -> StdRng {
    StdRng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e3779b97f4a7c15) ^ salt)
}

fn anisotropic_model(n: usize, rng: &mut StdRng) -> Result<Model> {
    let m = n * (n - 1) / 2;
    let a = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-0.3..0.3));
    let mat = DMatrix::<f64>::identity(m, m) + &a * a.transpose();
    Model::new(n, InertiaTensor::from_matrix(mat)?)
}

fn random_point(model: &Model, rng: &mut StdRng, scale: f64) -> Result<PhasePoint> {
    let b = model.basis();
    let c = DVector::from_fn(b.dim(), |_, _| rng.gen_range(-1.0..1.0));
    let s = group_exp(&b.from_coeffs(&c)?);
    let c2 = DVector::from_fn(b.dim(), |_, _| rng.gen_range(-scale..scale));
    PhasePoint::new(s, b.from_coeffs(&c2)?)
}

fn stabilizer_element(model: &Model, rng: &mut StdRng) -> Result<GroupElement> {
    let b = model.basis();
    let mut c = DVector::zeros(b.dim());
    for alpha in 0..b.dim_h() {
        c[b.dim_hperp() + alpha] = rng.gen_range(-1.5..1.5);
    }
    Ok(group_exp(&b.from_coeffs(&c)?))
}

/// Anisotropic inertia that is block-diagonal with respect to the splitting
/// into contact and stabilizer directions, so that the pure-spin set
/// {g_a = 0} consists of genuine relative equilibria.
fn block_anisotropic_model(n: usize, rng: &mut StdRng) -> Result<Model> {
    let m = n * (n - 1) / 2;
    let nz = n - 1;
    let mut mat = DMatrix::<f64>::identity(m, m);
    let mut fill = |lo: usize, d: usize, rng: &mut StdRng| {
        let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-0.3..0.3));
        let b = &a * a.transpose();
        for i in 0..d {
            for j in 0..d {
                mat[(lo + i, lo + j)] += b[(i, j)];
            }
        }
    };
    fill(0, nz, rng);
    fill(nz, m - nz, rng);
    Model::new(n, InertiaTensor::from_matrix(mat)?)
}

/// Random point on the zero level set of the conserved momentum: the body
/// velocity is the pull-back of a pure contact-direction element.
fn zero_level_point(model: &Model, rng: &mut StdRng) -> Result<PhasePoint> {
    let b = model.basis();
    let c = DVector::from_fn(b.dim(), |_, _| rng.gen_range(-1.0..1.0));
    let s = group_exp(&b.from_coeffs(&c)?);
    let mut cz = DVector::zeros(b.dim());
    for a in 0..b.dim_hperp() {
        cz[a] = rng.gen_range(-1.0..1.0);
    }
    let u = crate::algebra::ad_action(&s.inverse(), &b.from_coeffs(&cz)?)?;
    PhasePoint::new(s, u)
}

// ---------------------------------------------------------------------------
// algebra
// ---------------------------------------------------------------------------

fn algebra_checks(
    n: usize,
    seed: u64,
    corrupt: bool,
    out: &mut Vec<CheckResult>,
) -> Result<()> {
    let basis = adapted_basis(n)?;
    let mut st = structure_constants(&basis);
    if corrupt {
        // Break one bracket coefficient; Jacobi can no longer close.
        let v = st.c(0, 0, basis.dim() - 1) + 0.25;
        st.set(0, 0, basis.dim() - 1, v);
    }

    let mut ortho = 0.0f64;
    for i in 0..basis.dim() {
        for j in 0..basis.dim() {
            let ip = killing_ip(&basis.basis_element(i), &basis.basis_element(j))?;
            let expect = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((ip - expect).abs());
        }
    }
    out.push(at_most(format!("orthonormality-n{n}"), ortho, 1e-13));
    out.push(at_most(
        format!("structure-antisymmetry-n{n}"),
        st.antisymmetry_residual(),
        1e-14,
    ));
    out.push(at_most(format!("jacobi-n{n}"), st.jacobi_residual(), 1e-12));
    out.push(at_most(format!("hh-block-n{n}"), st.hh_block_residual(), 1e-15));
    out.push(at_most(
        format!("mixed-block-n{n}"),
        st.mixed_block_residual(),
        1e-15,
    ));
    if n == 3 {
        out.push(at_most(
            "c-y3-z1z2-n3",
            (st.c(2, 0, 1) - (-1.0)).abs(),
            1e-15,
        ));
    }

    let mut rng = rng_for(n, seed, 1);
    let mut ad_ortho = 0.0f64;
    let mut exp_ortho = 0.0f64;
    for _ in 0..10 {
        let c = DVector::from_fn(basis.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let s = group_exp(&basis.from_coeffs(&c)?);
        exp_ortho = exp_ortho.max(s.orthogonality_residual());
        let r = basis.ad_matrix(&s)?;
        let m = basis.dim();
        ad_ortho =
            ad_ortho.max((r.transpose() * &r - DMatrix::<f64>::identity(m, m)).norm());
    }
    out.push(at_most(format!("exp-orthogonality-n{n}"), exp_ortho, 1e-12));
    out.push(at_most(
        format!("ad-matrix-orthogonality-n{n}"),
        ad_ortho,
        1e-12,
    ));
    Ok(())
}

// ---------------------------------------------------------------------------
// forms
// ---------------------------------------------------------------------------

fn forms_checks(n: usize, seed: u64, out: &mut Vec<CheckResult>) -> Result<()> {
    let mut rng = rng_for(n, seed, 2);
    let model = anisotropic_model(n, &mut rng)?;
    let ext = ExteriorDerivative::new(&model);
    let m = model.m();

    // Coframe/frame duality.
    let mut duality = 0.0f64;
    let p = random_point(&model, &mut rng, 1.0)?;
    for a in 0..model.nz() {
        for idx in 0..m {
            let v = frame_vector(&model, &p, idx)?;
            let val = eval_one_form(&model, OneForm::Eta(a), &p, &v)?;
            let expect = if idx == a { 1.0 } else { 0.0 };
            duality = duality.max((val - expect).abs());
        }
    }
    for alpha in 0..model.dim_h() {
        for idx in 0..m {
            let v = frame_vector(&model, &p, idx)?;
            let val = eval_one_form(&model, OneForm::Rho(alpha), &p, &v)?;
            let expect = if idx == model.nz() + alpha { 1.0 } else { 0.0 };
            duality = duality.max((val - expect).abs());
        }
    }
    out.push(at_most(format!("coframe-duality-n{n}"), duality, 1e-12));

    // dρ/dη against the structure constants.
    let st = model.structure();
    let mut drho = 0.0f64;
    for k in 0..m {
        let form = if k < model.nz() {
            OneForm::Eta(k)
        } else {
            OneForm::Rho(k - model.nz())
        };
        let d = ext.d1_frame(form, &p)?;
        for i in 0..m {
            for j in 0..m {
                drho = drho.max((d[(i, j)] - st.c(k, i, j)).abs());
            }
        }
    }
    out.push(at_most(format!("drho-structure-n{n}"), drho, 1e-10));

    // dθ^S = −Ω^S and dΩ^S = 0.
    let mut dtheta = 0.0f64;
    let mut domega = 0.0f64;
    let ext_fd = ExteriorDerivative::new(&model).finite_difference_only();
    for _ in 0..3 {
        let q = random_point(&model, &mut rng, 1.0)?;
        let d = ext_fd.d1_frame(OneForm::ThetaS, &q)?;
        let g = forms::gram(&model, FormKind::OmegaS, &q)?;
        dtheta = dtheta.max((&d + &g).norm());
        domega = domega.max(ext.d2_frame(FormKind::OmegaS, &q)?.max_abs());
    }
    out.push(at_most(format!("dtheta-plus-omega-s-n{n}"), dtheta, 1e-10));
    out.push(at_most(format!("domega-s-n{n}"), domega, 1e-9));

    // Semi-basicity of the correction forms (exact).
    let mut semi = 0.0f64;
    for kind in [FormKind::Jk, FormKind::LCurv] {
        let g = forms::gram(&model, kind, &p)?;
        for i in 0..2 * m {
            for j in m..2 * m {
                semi = semi.max(g[(i, j)].abs()).max(g[(j, i)].abs());
            }
        }
    }
    out.push(at_most(format!("semi-basic-n{n}"), semi, 1e-15));

    // h-invariance of the geometric forms.
    let mut inv = 0.0f64;
    for _ in 0..10 {
        let q = random_point(&model, &mut rng, 1.0)?;
        let h = stabilizer_element(&model, &mut rng)?;
        let hq = reduction::h_action(&model, &h, &q)?;
        let v1 = random_tangent(&model, &mut rng)?;
        let v2 = random_tangent(&model, &mut rng)?;
        for kind in [
            FormKind::OmegaS,
            FormKind::Jk,
            FormKind::LCurv,
            FormKind::OmegaNh,
            FormKind::OmegaTilde,
            FormKind::FOmegaTilde,
        ] {
            let a = eval_two_form(&model, kind, &q, &v1, &v2)?;
            let b = eval_two_form(&model, kind, &hq, &v1, &v2)?;
            inv = inv.max((a - b).abs());
        }
    }
    out.push(at_most(format!("h-invariance-n{n}"), inv, 1e-10));
    Ok(())
}

fn random_tangent(model: &Model, rng: &mut StdRng) -> Result<forms::TangentVectorTS> {
    let b = model.basis();
    let c1 = DVector::from_fn(b.dim(), |_, _| rng.gen_range(-1.0..1.0));
    let c2 = DVector::from_fn(b.dim(), |_, _| rng.gen_range(-1.0..1.0));
    forms::TangentVectorTS::new(b.from_coeffs(&c1)?, b.from_coeffs(&c2)?)
}

// ---------------------------------------------------------------------------
// truncation
// ---------------------------------------------------------------------------

fn truncation_checks(n: usize, seed: u64, out: &mut Vec<CheckResult>) -> Result<()> {
    let mut rng = rng_for(n, seed, 3);
    let model = anisotropic_model(n, &mut rng)?;
    let m = model.m();

    // χ is idempotent on U′.
    let mut idem = 0.0f64;
    let mut sigma = 0.0f64;
    let mut identity_n3 = 0.0f64;
    let mut points = 0;
    while points < 100 {
        let p = random_point(&model, &mut rng, 1.0)?;
        let fd = model.frame_data(&p)?;
        if fd.w.rows(0, model.nz()).amin() < 1e-2 {
            continue;
        }
        points += 1;
        let chi = forms::chi_frame_matrix(&model, &fd)?;
        idem = idem.max((&chi * &chi - &chi).norm());

        // σ(X) = (⟨J,K⟩∘Λ²χ − ⟨J,K⟩)(X, ·) vanishes on the dynamics.
        let xs = solve_xnh(&model, &p, FormKind::OmegaTilde)?;
        let gjk = forms::gram_from_data(&model, FormKind::Jk, &p, &fd)?;
        let gt = forms::gram_from_data(&model, FormKind::TruncatedJk, &p, &fd)?;
        let diff = (&gt - &gjk).transpose() * &xs.frame_coords;
        sigma = sigma.max(diff.amax());

        if n == 3 {
            let glc = forms::gram_from_data(&model, FormKind::LCurv, &p, &fd)?;
            identity_n3 = identity_n3.max((&gt - &glc).norm());
        }
    }
    out.push(at_most(format!("chi-idempotent-n{n}"), idem, 1e-10));
    out.push(at_most(format!("sigma-annihilation-n{n}"), sigma, 1e-12));
    if n == 3 {
        out.push(at_most("truncation-identity-n3", identity_n3, 1e-10));
    } else {
        // For n > 3 only the contraction with X_nh collapses; σ covers it at
        // its own threshold, restated here at the looser documented one.
        out.push(at_most(format!("truncation-contraction-n{n}"), sigma, 1e-10));
    }

    // The projection refuses points on the relative-equilibria set.
    let b = model.basis();
    let mut c = DVector::zeros(m);
    for alpha in 0..model.dim_h() {
        c[model.nz() + alpha] = 0.3 + 0.1 * alpha as f64;
    }
    let pe = PhasePoint::new(GroupElement::identity(n), b.from_coeffs(&c)?)?;
    let fd = model.frame_data(&pe)?;
    let guard_ok = matches!(
        forms::chi_frame_matrix(&model, &fd),
        Err(Error::NearEquilibrium(_))
    );
    out.push(at_most(
        format!("near-equilibrium-guard-n{n}"),
        if guard_ok { 0.0 } else { 1.0 },
        0.5,
    ));
    Ok(())
}

// ---------------------------------------------------------------------------
// hamiltonization
// ---------------------------------------------------------------------------

fn hamiltonization_checks(n: usize, seed: u64, out: &mut Vec<CheckResult>) -> Result<()> {
    let mut rng = rng_for(n, seed, 4);
    let model = anisotropic_model(n, &mut rng)?;
    let homo = Model::homogeneous(n)?;
    let m = model.m();

    // Field agreement and the truncation momentum identity, 1000 points.
    let mut agree = 0.0f64;
    let mut momentum = 0.0f64;
    let mut witness = 0.0f64;
    for _ in 0..1000 {
        let p = random_point(&model, &mut rng, 1.0)?;
        let f1 = solve_xnh(&model, &p, FormKind::OmegaNh)?;
        let f2 = solve_xnh(&model, &p, FormKind::OmegaTilde)?;
        agree = agree.max(
            (f1.v.a.mat() - f2.v.a.mat()).norm() + (f1.v.b.mat() - f2.v.b.mat()).norm(),
        );
        let fd = model.frame_data(&p)?;
        let d = djh_frame(&model, &fd);
        let gt = forms::gram_from_data(&model, FormKind::OmegaTilde, &p, &fd)?;
        let gnh = forms::gram_from_data(&model, FormKind::OmegaNh, &p, &fd)?;
        for alpha in 0..model.dim_h() {
            let row = model.nz() + alpha;
            for j in 0..2 * m {
                momentum = momentum.max((gt[(row, j)] - d[(alpha, j)]).abs());
                witness = witness.max((gnh[(row, j)] - d[(alpha, j)]).abs());
            }
        }
    }
    out.push(at_most(format!("field-agreement-n{n}"), agree, 1e-10));
    out.push(at_most(format!("momentum-identity-n{n}"), momentum, 1e-9));
    out.push(at_least(
        format!("omega-nh-momentum-witness-n{n}"),
        witness,
        1e-4,
    ));

    // Conservation over T = 10, dt = 1e−3.
    let p0 = random_point(&model, &mut rng, 0.7)?;
    let traj = integrate(&model, &p0, &IntegrateOpts::new(10.0, 1e-3))?;
    let h0 = traj.energies[0];
    let hdrift = traj
        .energies
        .iter()
        .fold(0.0f64, |acc, h| acc.max((h - h0).abs()));
    let j0 = model.momentum_jh_coeffs(&traj.states[0])?;
    let mut jdrift = 0.0f64;
    for q in traj.states.iter().step_by(10) {
        jdrift = jdrift.max((model.momentum_jh_coeffs(q)? - &j0).amax());
    }
    out.push(at_most(format!("energy-conservation-n{n}"), hdrift, 1e-8));
    out.push(at_most(format!("momentum-conservation-n{n}"), jdrift, 1e-8));

    // Observed convergence order from state-difference Richardson ratios.
    let dts = [0.02, 0.01, 0.005];
    let mut finals = Vec::new();
    for dt in dts {
        let t = integrate(&model, &p0, &IntegrateOpts::new(1.0, dt))?;
        finals.push(t.last().clone());
    }
    let dev = |a: &PhasePoint, b: &PhasePoint| {
        (a.s.mat() - b.s.mat()).norm() + (a.u.mat() - b.u.mat()).norm()
    };
    let e1 = dev(&finals[0], &finals[1]);
    let e2 = dev(&finals[1], &finals[2]);
    let order = (e1 / e2).log2();
    out.push(at_least(format!("convergence-order-n{n}"), order, 3.5));

    // Homogeneous ball: Ω̃ closed on momentum level-set triples.  For n = 3
    // the stabilizer is abelian and any level works; for n ≥ 4 the curvature
    // obstruction ⟨λ,[ω,Curv]⟩ only vanishes on the zero momentum level, which
    // carries the ultimate reduced cotangent space of the sphere.
    let mut pts = Vec::new();
    for _ in 0..50 {
        pts.push(if n == 3 {
            random_point(&homo, &mut rng, 1.0)?
        } else {
            zero_level_point(&homo, &mut rng)?
        });
    }
    let closed_homo =
        reduction::closedness_verdict(&homo, FormKind::OmegaTilde, &pts, true, 40, seed ^ 11)?;
    out.push(at_most(
        format!("homogeneous-level-closedness-n{n}"),
        closed_homo,
        1e-8,
    ));

    // Conformal factor values and invariance.
    if n == 3 {
        let q = random_point(&homo, &mut rng, 1.0)?;
        out.push(at_most(
            "conformal-factor-value-n3",
            (homo.conformal_factor(&q.s)? - 0.5).abs(),
            1e-13,
        ));
    }
    let mut finv = 0.0f64;
    for _ in 0..50 {
        let q = random_point(&model, &mut rng, 1.0)?;
        let h = stabilizer_element(&model, &mut rng)?;
        let hq = reduction::h_action(&model, &h, &q)?;
        finv = finv
            .max((model.conformal_factor(&q.s)? - model.conformal_factor(&hq.s)?).abs());
    }
    out.push(at_most(format!("conformal-h-invariance-n{n}"), finv, 1e-12));

    if n == 3 {
        // Anisotropic n = 3: f·Ω̃ closed on level sets, Ω_nh visibly not closed.
        let mut lpts = Vec::new();
        for _ in 0..50 {
            lpts.push(random_point(&model, &mut rng, 1.0)?);
        }
        let closed =
            reduction::closedness_verdict(&model, FormKind::FOmegaTilde, &lpts, true, 40, seed ^ 13)?;
        out.push(at_most("fomega-level-closedness-n3", closed, 1e-6));
        let nh_witness = reduction::closedness_verdict(
            &model,
            FormKind::OmegaNh,
            &lpts[..5],
            false,
            0,
            seed ^ 17,
        )?;
        out.push(at_least("domega-nh-witness-n3", nh_witness, 1e-3));
    }

    // Relative equilibria: starting from a pure-spin point of {g_a = 0} the
    // flow stays there.  The inertia must not couple contact and stabilizer
    // directions, otherwise a spin about the vertical axis torques the ball
    // off the axis (classically: the spin axis has to be principal).
    let eqm = block_anisotropic_model(n, &mut rng)?;
    let b = eqm.basis();
    let mut c = DVector::zeros(m);
    for alpha in 0..eqm.dim_h() {
        c[eqm.nz() + alpha] = rng.gen_range(0.3..0.8);
    }
    let se = stabilizer_element(&eqm, &mut rng)?;
    let pe = PhasePoint::new(se, b.from_coeffs(&c)?)?;
    let (on_e, _) = dynamics::relative_equilibria_check(&eqm, &pe, 1e-12)?;
    let te = integrate(&eqm, &pe, &IntegrateOpts::new(10.0, 1e-3))?;
    let mut gmax = if on_e { 0.0f64 } else { 1.0 };
    for q in te.states.iter().step_by(10) {
        let fd = eqm.frame_data(q)?;
        gmax = gmax.max(fd.w.rows(0, eqm.nz()).amax());
    }
    out.push(at_most(format!("relative-equilibria-n{n}"), gmax, 1e-8));

    // Reduced dimension audit, generic λ and λ = 0.
    let lam = DVector::from_fn(model.dim_h(), |k, _| 0.5 + 0.3 * k as f64);
    let generic = reduction::reduced_dimension_audit(&model, &lam, seed ^ 19)?;
    let zero = reduction::reduced_dimension_audit(&model, &DVector::zeros(model.dim_h()), seed ^ 23)?;
    let audit_res = if generic.consistent && zero.consistent {
        0.0
    } else {
        1.0
    };
    out.push(at_most(format!("dimension-audit-n{n}"), audit_res, 0.5));

    // Time reparametrization consistency.
    if n == 3 {
        let rep = dynamics::reparam_consistency(&model, &p0, 1.0, 0.005, 5)?;
        out.push(at_most(
            "reparam-consistency-n3",
            rep.max_state_deviation,
            1e-7,
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

fn oracle_checks(n: usize, seed: u64, out: &mut Vec<CheckResult>) -> Result<()> {
    let mut rng = rng_for(n, seed, 5);
    let model = anisotropic_model(n, &mut rng)?;
    let homo = Model::homogeneous(n)?;

    let mut dal = 0.0f64;
    for _ in 0..50 {
        let p = random_point(&model, &mut rng, 1.0)?;
        let st = FullState::on_constraint(&model, &p)?;
        let sol = oracle::multiplier_solve(&model, &st)?;
        dal = dal.max(oracle::dalembert_residual(&model, &st, &sol)?);
    }
    out.push(at_most(format!("dalembert-n{n}"), dal, 1e-11));

    let mut lam = 0.0f64;
    for _ in 0..20 {
        let p = random_point(&homo, &mut rng, 1.0)?;
        let st = FullState::on_constraint(&homo, &p)?;
        let sol = oracle::multiplier_solve(&homo, &st)?;
        lam = lam.max(sol.lambda.amax()).max(sol.udot.mat().norm());
    }
    out.push(at_most(format!("homogeneous-multipliers-n{n}"), lam, 1e-12));

    // Compressed vs full-space trajectories, 20 scenarios, T = 10.
    let mut dev = 0.0f64;
    let mut cres = 0.0f64;
    for _ in 0..20 {
        let p0 = random_point(&model, &mut rng, 0.5)?;
        let rep = oracle::compare_projection(&model, &p0, 10.0, 1e-3)?;
        dev = dev.max(rep.max_state_deviation);
        cres = cres.max(rep.max_constraint_residual);
    }
    out.push(at_most(format!("oracle-deviation-n{n}"), dev, 1e-6));
    out.push(at_most(format!("constraint-residual-n{n}"), cres, 1e-10));

    // Homogeneous straight-line rolling: contact trace stays on a line.
    let p0 = random_point(&homo, &mut rng, 0.8)?;
    let st0 = FullState::on_constraint(&homo, &p0)?;
    let traj = oracle::integrate_constrained(&homo, &st0, 10.0, 1e-3)?;
    let dir = &traj.states.last().unwrap().x;
    let dnorm = dir.norm();
    let mut coll = 0.0f64;
    if dnorm > 1e-12 {
        let d = dir / dnorm;
        for s in traj.states.iter().step_by(10) {
            let along = s.x.dot(&d);
            coll = coll.max((&s.x - &d * along).norm());
        }
    }
    out.push(at_most(format!("straight-line-rolling-n{n}"), coll, 1e-8));
    Ok(())
}
