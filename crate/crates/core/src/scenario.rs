//! Scenario, trajectory and report file formats used by the CLI.
//!
//! * Scenarios are TOML documents describing the model and the run.
//! * Trajectories are CSV with 17 significant digits and LF line endings,
//!   so identical runs produce bit-identical files.
//! * Diagnostics reports are versioned JSON documents.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::algebra::group_exp;
use crate::ball::{InertiaTensor, Model, PhasePoint};
use crate::dynamics::{IntegrateOpts, Trajectory};
use crate::forms::FormKind;
use crate::{Error, Result};

/// Current schema version of report documents.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Inertia description in a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InertiaSpec {
    /// One of `identity`, `diagonal`, `full`, `principal3`.
    pub kind: String,
    /// Entries: none for `identity`; m values for `diagonal`; m×m row-major
    /// for `full`; (I1, I2, I3) for `principal3` (n = 3 only).
    #[serde(default)]
    pub values: Vec<f64>,
}

impl Default for InertiaSpec {
    fn default() -> Self {
        Self {
            kind: "identity".to_string(),
            values: Vec::new(),
        }
    }
}

/// Initial condition: exponential coordinates of the attitude and adapted
/// coefficients of the body velocity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialSpec {
    pub s0: Vec<f64>,
    pub u0: Vec<f64>,
}

/// A complete run description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub n: usize,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_form")]
    pub form: String,
    #[serde(default)]
    pub reparam: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_guard")]
    pub guard_rel: f64,
    #[serde(default)]
    pub inertia: InertiaSpec,
    pub initial: InitialSpec,
}

fn default_form() -> String {
    "omega_tilde".to_string()
}

fn default_guard() -> f64 {
    1e-3
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let span = e
                .span()
                .map(|s| format!(" at byte {}..{}", s.start, s.end))
                .unwrap_or_default();
            let msg = e.message().replace('\n', "; ");
            Error::Scenario(format!("TOML parse error{span}: {msg}"))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Builds the model, initial point and integration options, validating
    /// every field.
    pub fn build(&self) -> Result<(Model, PhasePoint, IntegrateOpts)> {
        if self.n < 3 {
            return Err(Error::Scenario(format!("n must be at least 3, got {}", self.n)));
        }
        let m = self.n * (self.n - 1) / 2;
        let inertia = build_inertia(&self.inertia, self.n)?;
        let model = Model::new(self.n, inertia)?;
        if !(self.dt > 0.0) {
            return Err(Error::Scenario(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Scenario(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        let steps = (self.t_end / self.dt).round();
        if steps < 1.0 || (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::Scenario(format!(
                "t_end = {} is not an integer multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        let form = FormKind::parse(&self.form)?;
        if self.initial.s0.len() != m {
            return Err(Error::Scenario(format!(
                "initial.s0 needs {m} exponential coordinates, got {}",
                self.initial.s0.len()
            )));
        }
        if self.initial.u0.len() != m {
            return Err(Error::Scenario(format!(
                "initial.u0 needs {m} coefficients, got {}",
                self.initial.u0.len()
            )));
        }
        let cs = DVector::from_vec(self.initial.s0.clone());
        let cu = DVector::from_vec(self.initial.u0.clone());
        let s0 = group_exp(&model.basis().from_coeffs(&cs)?);
        let u0 = model.basis().from_coeffs(&cu)?;
        let p0 = PhasePoint::new(s0, u0)?;
        let mut opts = IntegrateOpts::new(self.t_end, self.dt);
        opts.form = form;
        opts.reparam = self.reparam;
        opts.guard_rel = self.guard_rel;
        Ok((model, p0, opts))
    }
}

fn build_inertia(spec: &InertiaSpec, n: usize) -> Result<InertiaTensor> {
    let m = n * (n - 1) / 2;
    match spec.kind.as_str() {
        "identity" => Ok(InertiaTensor::identity(m)),
        "diagonal" => {
            if spec.values.len() != m {
                return Err(Error::Scenario(format!(
                    "diagonal inertia needs {m} values, got {}",
                    spec.values.len()
                )));
            }
            InertiaTensor::diagonal(&spec.values)
        }
        "full" => {
            if spec.values.len() != m * m {
                return Err(Error::Scenario(format!(
                    "full inertia needs {} row-major values, got {}",
                    m * m,
                    spec.values.len()
                )));
            }
            InertiaTensor::from_matrix(nalgebra::DMatrix::from_row_slice(m, m, &spec.values))
        }
        "principal3" => {
            if n != 3 {
                return Err(Error::Scenario(
                    "principal3 inertia requires n = 3".to_string(),
                ));
            }
            if spec.values.len() != 3 {
                return Err(Error::Scenario(format!(
                    "principal3 inertia needs 3 values, got {}",
                    spec.values.len()
                )));
            }
            InertiaTensor::principal3(spec.values[0], spec.values[1], spec.values[2])
        }
        other => Err(Error::Scenario(format!("unknown inertia kind `{other}`"))),
    }
}

/// Formats a float with 17 significant digits (round-trip exact for f64).
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a trajectory as CSV: integration time, physical time, the group
/// element row-major, the velocity coefficients, the energy, the momentum
/// coefficients and the contact components.
pub fn write_trajectory_csv<W: std::io::Write>(
    model: &Model,
    traj: &Trajectory,
    out: &mut W,
) -> Result<f64> {
    let n = model.n();
    let m = model.m();
    let io_err = |e: std::io::Error| Error::Scenario(format!("write error: {e}"));
    let mut header = vec!["t".to_string(), "phys_t".to_string()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("s_{i}{j}"));
        }
    }
    for k in 0..m {
        header.push(format!("u_{k}"));
    }
    header.push("h_c".to_string());
    for alpha in 0..model.dim_h() {
        header.push(format!("jh_{alpha}"));
    }
    for a in 0..model.nz() {
        header.push(format!("g_{a}"));
    }
    out.write_all(header.join(",").as_bytes()).map_err(io_err)?;
    out.write_all(b"\n").map_err(io_err)?;

    let mut max_ortho = 0.0f64;
    for (k, p) in traj.states.iter().enumerate() {
        max_ortho = max_ortho.max(p.s.orthogonality_residual());
        let mut row = vec![fmt17(traj.times[k]), fmt17(traj.phys_times[k])];
        for i in 0..n {
            for j in 0..n {
                row.push(fmt17(p.s.mat()[(i, j)]));
            }
        }
        let cu = model.basis().coeffs(&p.u)?;
        for v in cu.iter() {
            row.push(fmt17(*v));
        }
        row.push(fmt17(traj.energies[k]));
        let jh = model.momentum_jh_coeffs(p)?;
        for v in jh.iter() {
            row.push(fmt17(*v));
        }
        let fd = model.frame_data(p)?;
        for a in 0..model.nz() {
            row.push(fmt17(fd.w[a]));
        }
        out.write_all(row.join(",").as_bytes()).map_err(io_err)?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    Ok(max_ortho)
}

/// Summary numbers of a finished run, serialized as the JSON report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub schema_version: u32,
    pub n: usize,
    pub form: String,
    pub reparam: bool,
    pub seed: u64,
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub energy_drift: f64,
    pub momentum_drift: f64,
    /// Max |u(t) − u(0)| over the run.
    pub velocity_drift: f64,
    /// True for a homogeneous ball whose body velocity stayed constant:
    /// the contact point traces a straight line.
    pub straight_line: bool,
    pub max_ortho_residual: f64,
    pub max_solve_residual: f64,
    pub max_energy_step: f64,
}

/// Builds the report for a finished trajectory.
pub fn diagnostics_report(
    model: &Model,
    scenario: &Scenario,
    traj: &Trajectory,
) -> Result<DiagnosticsReport> {
    let h0 = traj.energies[0];
    let drift = traj
        .energies
        .iter()
        .fold(0.0f64, |acc, h| acc.max((h - h0).abs()));
    let j0 = model.momentum_jh_coeffs(&traj.states[0])?;
    let mut jdrift = 0.0f64;
    let mut udrift = 0.0f64;
    let u0 = traj.states[0].u.mat().clone();
    for p in &traj.states {
        jdrift = jdrift.max((model.momentum_jh_coeffs(p)? - &j0).norm());
        udrift = udrift.max((p.u.mat() - &u0).norm());
    }
    Ok(DiagnosticsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n: scenario.n,
        form: scenario.form.clone(),
        reparam: scenario.reparam,
        seed: scenario.seed,
        t_end: scenario.t_end,
        dt: scenario.dt,
        steps: traj.states.len() - 1,
        energy_initial: h0,
        energy_final: *traj.energies.last().unwrap(),
        energy_drift: drift,
        momentum_drift: jdrift,
        velocity_drift: udrift,
        straight_line: model.inertia().is_homogeneous() && udrift <= 1e-8,
        max_ortho_residual: traj.max_ortho_residual,
        max_solve_residual: traj.max_solve_residual,
        max_energy_step: traj.max_energy_step,
    })
}

/// Serializes a report as pretty JSON with a trailing newline.
pub fn write_report_json<W: std::io::Write>(
    report: &DiagnosticsReport,
    out: &mut W,
) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Scenario(format!("JSON error: {e}")))?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| Error::Scenario(format!("write error: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate;

    const EXAMPLE: &str = r#"
        n = 3
        t_end = 0.5
        dt = 0.01
        form = "omega_tilde"
        seed = 7

        [inertia]
        kind = "principal3"
        values = [1.0, 1.5, 2.0]

        [initial]
        s0 = [0.1, -0.2, 0.3]
        u0 = [0.5, 0.2, -0.4]
    "#;

    #[test]
    fn parses_and_builds() {
        let sc = Scenario::from_toml_str(EXAMPLE).unwrap();
        let (model, p0, opts) = sc.build().unwrap();
        assert_eq!(model.n(), 3);
        assert!(!model.inertia().is_homogeneous());
        assert!((model.compressed_hamiltonian(&p0).unwrap()).is_finite());
        assert_eq!(opts.form, FormKind::OmegaTilde);
    }

    #[test]
    fn rejects_bad_scenarios() {
        assert!(Scenario::from_toml_str("n = ]").is_err());
        let mut sc = Scenario::from_toml_str(EXAMPLE).unwrap();
        sc.dt = 0.0;
        assert!(sc.build().is_err());
        let mut sc2 = Scenario::from_toml_str(EXAMPLE).unwrap();
        sc2.t_end = 0.505; // not a multiple of dt
        assert!(sc2.build().is_err());
        let mut sc3 = Scenario::from_toml_str(EXAMPLE).unwrap();
        sc3.initial.u0.pop();
        assert!(sc3.build().is_err());
        let mut sc4 = Scenario::from_toml_str(EXAMPLE).unwrap();
        sc4.form = "nonsense".to_string();
        assert!(sc4.build().is_err());
        let mut sc5 = Scenario::from_toml_str(EXAMPLE).unwrap();
        sc5.inertia.kind = "spherical".to_string();
        assert!(sc5.build().is_err());
        let mut sc6 = Scenario::from_toml_str(EXAMPLE).unwrap();
        sc6.n = 4;
        assert!(sc6.build().is_err()); // principal3 only valid for n = 3
    }

    #[test]
    fn csv_is_deterministic() {
        let sc = Scenario::from_toml_str(EXAMPLE).unwrap();
        let (model, p0, opts) = sc.build().unwrap();
        let t1 = integrate(&model, &p0, &opts).unwrap();
        let t2 = integrate(&model, &p0, &opts).unwrap();
        let mut b1 = Vec::new();
        let mut b2 = Vec::new();
        write_trajectory_csv(&model, &t1, &mut b1).unwrap();
        write_trajectory_csv(&model, &t2, &mut b2).unwrap();
        assert_eq!(b1, b2);
        assert!(!b1.contains(&b'\r'));
        let text = String::from_utf8(b1).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 52);
        assert!(lines[0].starts_with("t,phys_t,s_00"));
    }

    #[test]
    fn report_roundtrips_json() {
        let sc = Scenario::from_toml_str(EXAMPLE).unwrap();
        let (model, p0, opts) = sc.build().unwrap();
        let traj = integrate(&model, &p0, &opts).unwrap();
        let rep = diagnostics_report(&model, &sc, &traj).unwrap();
        assert_eq!(rep.schema_version, REPORT_SCHEMA_VERSION);
        assert!(rep.energy_drift < 1e-10);
        let mut buf = Vec::new();
        write_report_json(&rep, &mut buf).unwrap();
        let back: DiagnosticsReport = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back.steps, rep.steps);
    }
}
