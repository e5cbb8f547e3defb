//! Geometric Hamilton-Jacobi machinery: projected fields, residuals of the
//! local HJ equations, relatedness checks by flow comparison, the method of
//! characteristics, and involution diagnostics for complete solutions.
//!
//! Two residual conventions coexist for the cosymplectic case. The canonical
//! one ([`ResidualMode::Theorem`]) is
//! `gamma_t^j + sum_i H_{p_i} gamma^j_{q_i} + H_{q_j} = 0`.
//! [`ResidualMode::AsPrinted`] flips the sign of the source term
//! (`... - H_{q_j} = 0`); the trigonometric example's published solution
//! `gamma = q / tanh(t + C)` satisfies only this variant. Both are kept so
//! either family can be reproduced exactly.

use serde::{Deserialize, Serialize};

use crate::dynamics::{hamiltonian_field, solve_ode_at, IntegratorConfig, StructureKind, Trajectory};
use crate::error::{Error, Result};
use crate::point::{ExtendedPhasePoint, OneForm};
use crate::scalar_field::ScalarField;
use crate::section::{CompleteSolution, Section};

/// Sign convention for the cosymplectic HJ source term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResidualMode {
    /// `gamma_t + H_p gamma_q + H_q = 0` (from the gamma-relatedness theorem).
    Theorem,
    /// `gamma_t + H_p gamma_q - H_q = 0` (the trigonometric example as printed).
    AsPrinted,
}

impl ResidualMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResidualMode::Theorem => "theorem",
            ResidualMode::AsPrinted => "as-printed",
        }
    }
}

impl std::str::FromStr for ResidualMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem" => Ok(ResidualMode::Theorem),
            "as-printed" | "as_printed" => Ok(ResidualMode::AsPrinted),
            other => Err(Error::InvalidConfig(format!("unknown residual mode {other:?}"))),
        }
    }
}

/// Projection of `R_H` to `Q x R` along the section: `dq = H_p(q, gamma, t)`,
/// `dt = 1`.
pub fn project_field_cosymplectic(
    h: &ScalarField,
    g: &Section,
    q: &[f64],
    t: f64,
) -> Result<(Vec<f64>, f64)> {
    let x = g.lift(q, t)?;
    Ok((h.d_p(&x)?, 1.0))
}

/// Projection of `X_H` to `Q x R` along the section: `dq = H_p`,
/// `dt = sum p_i H_{p_i} - H`, with `p = gamma(q, t)`.
pub fn project_field_contact(
    h: &ScalarField,
    g: &Section,
    q: &[f64],
    t: f64,
) -> Result<(Vec<f64>, f64)> {
    let x = g.lift(q, t)?;
    let grad = h.grad(&x)?;
    let dt = x
        .p
        .iter()
        .zip(grad.dp.iter())
        .map(|(pi, hp)| pi * hp)
        .sum::<f64>()
        - h.value(&x)?;
    Ok((grad.dp, dt))
}

/// Cosymplectic HJ residual per fiber index `j`, in the chosen sign mode.
pub fn hj_residual_cosymplectic_mode(
    h: &ScalarField,
    g: &Section,
    q: &[f64],
    t: f64,
    mode: ResidualMode,
) -> Result<Vec<f64>> {
    let x = g.lift(q, t)?;
    let grad = h.grad(&x)?;
    let jac = g.jac_q(q, t)?;
    let d_t = g.d_t(q, t)?;
    let n = g.dim();
    let sign = match mode {
        ResidualMode::Theorem => 1.0,
        ResidualMode::AsPrinted => -1.0,
    };
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut r = d_t[j] + sign * grad.dq[j];
        for i in 0..n {
            r += grad.dp[i] * jac[(j, i)];
        }
        out.push(r);
    }
    Ok(out)
}

/// Theorem-level cosymplectic HJ residual
/// `gamma_t^j + sum_i H_{p_i} gamma^j_{q_i} + H_{q_j}`.
pub fn hj_residual_cosymplectic(
    h: &ScalarField,
    g: &Section,
    q: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    hj_residual_cosymplectic_mode(h, g, q, t, ResidualMode::Theorem)
}

/// The trigonometric example's PDE exactly as printed (source term on the
/// right-hand side), with `p` replaced by `gamma`.
pub fn hj_residual_cosymplectic_as_printed(
    h: &ScalarField,
    g: &Section,
    q: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    hj_residual_cosymplectic_mode(h, g, q, t, ResidualMode::AsPrinted)
}

/// Contact HJ residual per fiber index `j`:
/// `gamma_j H_t + H_{q_j} + (sum_i gamma_i H_{p_i} - H) gamma^j_t
///  + sum_i H_{p_i} gamma^j_{q_i}`, with `p = gamma`.
pub fn hj_residual_contact(h: &ScalarField, g: &Section, q: &[f64], t: f64) -> Result<Vec<f64>> {
    let x = g.lift(q, t)?;
    let grad = h.grad(&x)?;
    let jac = g.jac_q(q, t)?;
    let d_t = g.d_t(q, t)?;
    let n = g.dim();
    let t_rate = x
        .p
        .iter()
        .zip(grad.dp.iter())
        .map(|(pi, hp)| pi * hp)
        .sum::<f64>()
        - h.value(&x)?;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut r = x.p[j] * grad.dt + grad.dq[j] + t_rate * d_t[j];
        for i in 0..n {
            r += grad.dp[i] * jac[(j, i)];
        }
        out.push(r);
    }
    Ok(out)
}

/// Flow-comparison test of the gamma-relatedness theorem: integrate the
/// projected field on `Q x R` from `(q0, t0)`, lift each sample through the
/// section, integrate the full field from the lifted initial point, and
/// return the sup-norm of the fiber discrepancy over the span. Vanishes (to
/// integrator tolerance) exactly when the matching HJ residual vanishes along
/// the trajectory.
pub fn relatedness_error(
    kind: StructureKind,
    h: &ScalarField,
    g: &Section,
    q0: &[f64],
    t0: f64,
    span: [f64; 2],
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let n = g.dim();
    let base_field = |state: &[f64]| -> Result<Vec<f64>> {
        let (q, t) = (&state[..n], state[n]);
        let (dq, dt) = match kind {
            StructureKind::Cosymplectic => project_field_cosymplectic(h, g, q, t)?,
            StructureKind::Contact => project_field_contact(h, g, q, t)?,
        };
        let mut out = dq;
        out.push(dt);
        Ok(out)
    };

    let n_check = 32;
    let times: Vec<f64> = (1..=n_check)
        .map(|k| span[0] + (span[1] - span[0]) * k as f64 / n_check as f64)
        .collect();

    let mut base0 = q0.to_vec();
    base0.push(t0);
    let base_samples = solve_ode_at(&base_field, &base0, span[0], &times, cfg)?;

    let x0 = g.lift(q0, t0)?;
    let full_field = hamiltonian_field(kind, h);
    let full_samples = solve_ode_at(&full_field, &x0.to_state(), span[0], &times, cfg)?;

    let mut worst = 0.0f64;
    for ((_, base), (_, full)) in base_samples.iter().zip(full_samples.iter()) {
        let (q, t) = (&base[..n], base[n]);
        let lifted = g.gamma(q, t)?;
        let full = ExtendedPhasePoint::from_state(full)?;
        for j in 0..n {
            worst = worst.max((lifted[j] - full.p[j]).abs());
        }
    }
    Ok(worst)
}

/// Closedness of the section (`d gamma_t = 0`): symmetry defect of the base
/// Jacobian over the sample points. Returns `(defect <= tol, max defect)`.
pub fn is_closed(g: &Section, samples: &[(Vec<f64>, f64)], tol: f64) -> Result<(bool, f64)> {
    let n = g.dim();
    let mut defect = 0.0f64;
    for (q, t) in samples {
        let jac = g.jac_q(q, *t)?;
        for j in 0..n {
            for i in 0..j {
                defect = defect.max((jac[(j, i)] - jac[(i, j)]).abs());
            }
        }
    }
    Ok((defect <= tol, defect))
}

/// Pullback `gamma* eta = dt - sum gamma_i dq^i` restricted to base
/// directions, reported as a one-form with `-gamma_i` on the `dq` slots and
/// `1` on the `dt` slot. A diagnostic only: a section always contains the
/// `dt` direction, so `eta` cannot vanish on it.
pub fn legendrian_defect(g: &Section, q: &[f64], t: f64) -> Result<OneForm> {
    let gamma = g.gamma(q, t)?;
    Ok(OneForm {
        aq: gamma.iter().map(|c| -c).collect(),
        ap: vec![0.0; g.dim()],
        at: 1.0,
    })
}

/// Bundle of characteristic curves for a 1-d quasilinear HJ problem, sampled
/// on a shared time grid, with monotone reconstruction across curves.
#[derive(Debug, Clone)]
pub struct CharacteristicSolution {
    pub labels: Vec<f64>,
    pub times: Vec<f64>,
    /// `curves[label][time] = (q, gamma)`.
    pub curves: Vec<Vec<(f64, f64)>>,
}

impl CharacteristicSolution {
    /// Interpolate `gamma(q, t)`: linear in `t` between stored slices, then
    /// linear in `q` between adjacent curves. Only inside the convex hull of
    /// the curve positions.
    pub fn reconstruct(&self, q: f64, t: f64) -> Result<f64> {
        let (t0, t1) = (self.times[0], *self.times.last().unwrap());
        if t < t0 - 1e-12 || t > t1 + 1e-12 {
            return Err(Error::Domain(format!("t = {t} outside [{t0}, {t1}]")));
        }
        let hi = self
            .times
            .iter()
            .position(|&tk| tk >= t)
            .unwrap_or(self.times.len() - 1)
            .max(1);
        let (ta, tb) = (self.times[hi - 1], self.times[hi]);
        let w = if tb > ta { (t - ta) / (tb - ta) } else { 0.0 };

        let slice: Vec<(f64, f64)> = self
            .curves
            .iter()
            .map(|curve| {
                let (qa, ga) = curve[hi - 1];
                let (qb, gb) = curve[hi];
                (qa + w * (qb - qa), ga + w * (gb - ga))
            })
            .collect();

        let (q_lo, q_hi) = (slice[0].0, slice[slice.len() - 1].0);
        if q < q_lo - 1e-12 || q > q_hi + 1e-12 {
            return Err(Error::Domain(format!(
                "q = {q} outside curve hull [{q_lo}, {q_hi}] at t = {t}"
            )));
        }
        let k = slice
            .iter()
            .position(|(qk, _)| *qk >= q)
            .unwrap_or(slice.len() - 1)
            .max(1);
        let ((qa, ga), (qb, gb)) = (slice[k - 1], slice[k]);
        let u = if qb > qa { (q - qa) / (qb - qa) } else { 0.0 };
        Ok(ga + u * (gb - ga))
    }

    /// CSV export: header `label,t,q,gamma`, one row per curve sample.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> Result<()> {
        let io_err = |e: std::io::Error| Error::InvalidConfig(format!("csv write failed: {e}"));
        writeln!(out, "label,t,q,gamma").map_err(io_err)?;
        for (label, curve) in self.labels.iter().zip(self.curves.iter()) {
            for (t, (q, gamma)) in self.times.iter().zip(curve.iter()) {
                writeln!(out, "{label:.16e},{t:.16e},{q:.16e},{gamma:.16e}").map_err(io_err)?;
            }
        }
        Ok(())
    }
}

/// Solve the 1-d cosymplectic HJ equation by characteristics: for each label
/// `q0` with initial value `gamma0`, integrate
/// `dq/dt = H_p(q, gamma, t)`, `dgamma/dt = -H_q` (theorem mode; the
/// as-printed mode flips the `dgamma/dt` sign). Curves are recorded on
/// `n_times` output times; crossing of the `q`-ordering aborts.
pub fn solve_characteristics_cosymplectic(
    h: &ScalarField,
    labels: &[f64],
    gamma0: &[f64],
    t_span: [f64; 2],
    n_times: usize,
    mode: ResidualMode,
    cfg: &IntegratorConfig,
) -> Result<CharacteristicSolution> {
    if h.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: h.dim(),
        });
    }
    if labels.len() != gamma0.len() || labels.len() < 2 {
        return Err(Error::InvalidConfig(
            "need matching labels and initial values, at least two".into(),
        ));
    }
    if labels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("labels must be strictly increasing".into()));
    }
    if n_times < 2 {
        return Err(Error::InvalidConfig("need at least two output times".into()));
    }
    let [t0, t1] = t_span;
    if !(t1 > t0) {
        return Err(Error::InvalidConfig("empty span: need t1 > t0".into()));
    }

    let sign = match mode {
        ResidualMode::Theorem => -1.0,
        ResidualMode::AsPrinted => 1.0,
    };
    // state = (q, gamma, t); the flow parameter coincides with t
    let field = |state: &[f64]| -> Result<Vec<f64>> {
        let x = ExtendedPhasePoint::new(vec![state[0]], vec![state[1]], state[2])?;
        let grad = h.grad(&x)?;
        Ok(vec![grad.dp[0], sign * grad.dq[0], 1.0])
    };

    let times: Vec<f64> = (1..n_times)
        .map(|k| t0 + (t1 - t0) * k as f64 / (n_times - 1) as f64)
        .collect();

    let mut curves = Vec::with_capacity(labels.len());
    for (q0, g0) in labels.iter().zip(gamma0.iter()) {
        if !q0.is_finite() || !g0.is_finite() {
            return Err(Error::NonFinite("characteristic initial data".into()));
        }
        let run = solve_ode_at(&field, &[*q0, *g0, t0], t0, &times, cfg)?;
        let mut curve = vec![(*q0, *g0)];
        curve.extend(run.iter().map(|(_, y)| (y[0], y[1])));
        curves.push(curve);
    }

    let mut all_times = vec![t0];
    all_times.extend_from_slice(&times);
    for (k, tk) in all_times.iter().enumerate() {
        for pair in curves.windows(2) {
            if pair[1][k].0 <= pair[0][k].0 {
                return Err(Error::CharacteristicsCrossed(*tk));
            }
        }
    }

    Ok(CharacteristicSolution {
        labels: labels.to_vec(),
        times: all_times,
        curves,
    })
}

/// Max canonical Poisson bracket `|{f_i, f_j}|` of the parameter functions of
/// a complete solution over the given points, with derivatives of
/// `f_i = pi_i o alpha o Phi^{-1}` by central finite differences
/// (step `1e-6 * max(1, |coordinate|)`).
pub fn involution_defect(cs: &CompleteSolution, points: &[ExtendedPhasePoint]) -> Result<f64> {
    let k = cs.parameter_count();
    if k < 2 {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for x in points {
        let n = x.dim();
        let mut grads_q = vec![vec![0.0; n]; k];
        let mut grads_p = vec![vec![0.0; n]; k];
        for i in 0..n {
            let hq = 1e-6 * x.q[i].abs().max(1.0);
            let mut xp = x.clone();
            xp.q[i] += hq;
            let plus = cs.inverse(&xp)?;
            xp.q[i] = x.q[i] - hq;
            let minus = cs.inverse(&xp)?;
            for (m, slot) in grads_q.iter_mut().enumerate() {
                slot[i] = (plus[m] - minus[m]) / (2.0 * hq);
            }
            let hp = 1e-6 * x.p[i].abs().max(1.0);
            let mut xp = x.clone();
            xp.p[i] += hp;
            let plus = cs.inverse(&xp)?;
            xp.p[i] = x.p[i] - hp;
            let minus = cs.inverse(&xp)?;
            for (m, slot) in grads_p.iter_mut().enumerate() {
                slot[i] = (plus[m] - minus[m]) / (2.0 * hp);
            }
        }
        for a in 0..k {
            for b in (a + 1)..k {
                let mut bracket = 0.0;
                for i in 0..n {
                    bracket += grads_q[a][i] * grads_p[b][i] - grads_p[a][i] * grads_q[b][i];
                }
                worst = worst.max(bracket.abs());
            }
        }
    }
    Ok(worst)
}

/// Numerical check of the contact evolution identity `X_H(f) = H R(f)`:
/// the finite-difference slope of `f` along the trajectory samples against
/// `H * f_t` at the interior samples. Returns the max defect.
pub fn contact_parameter_evolution(
    h: &ScalarField,
    f: &ScalarField,
    traj: &Trajectory,
) -> Result<f64> {
    if traj.samples.len() < 3 {
        return Ok(0.0);
    }
    let values: Vec<f64> = traj
        .samples
        .iter()
        .map(|(_, x)| f.value(x))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for k in 1..traj.samples.len() - 1 {
        let (s_prev, _) = traj.samples[k - 1];
        let (s_next, _) = traj.samples[k + 1];
        let slope = (values[k + 1] - values[k - 1]) / (s_next - s_prev);
        let (_, x) = &traj.samples[k];
        let expected = h.value(x)? * f.d_t(x)?;
        worst = worst.max((slope - expected).abs());
    }
    Ok(worst)
}

/// Grid description of a residual sweep (each `q` axis uses the same range).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub q_count: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.q_count < 2 || self.t_count < 2 {
            return Err(Error::InvalidConfig("grid counts must be >= 2".into()));
        }
        if !(self.q_max > self.q_min) || !(self.t_max >= self.t_min) {
            return Err(Error::InvalidConfig("degenerate grid ranges".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub q: Vec<f64>,
    pub t: f64,
    pub residual: Vec<f64>,
}

/// JSON report of a residual sweep over a base grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub system: String,
    pub mode: String,
    pub grid: GridSpec,
    pub max_residual: f64,
    /// Grid points skipped because the section or Hamiltonian was outside
    /// its domain there.
    pub skipped: usize,
    pub points: Vec<ResidualPoint>,
}

/// Evaluate the HJ residual of `kind` over the tensor grid. Domain and
/// singularity errors at individual points are skipped and counted.
pub fn residual_sweep(
    kind: StructureKind,
    mode: ResidualMode,
    h: &ScalarField,
    g: &Section,
    system: &str,
    grid: &GridSpec,
) -> Result<ResidualReport> {
    grid.validate()?;
    let n = g.dim();
    let q_axis: Vec<f64> = (0..grid.q_count)
        .map(|k| grid.q_min + (grid.q_max - grid.q_min) * k as f64 / (grid.q_count - 1) as f64)
        .collect();
    let t_axis: Vec<f64> = (0..grid.t_count)
        .map(|k| {
            if grid.t_count == 1 {
                grid.t_min
            } else {
                grid.t_min + (grid.t_max - grid.t_min) * k as f64 / (grid.t_count - 1) as f64
            }
        })
        .collect();

    let mut report = ResidualReport {
        system: system.to_string(),
        mode: mode.as_str().to_string(),
        grid: grid.clone(),
        max_residual: 0.0,
        skipped: 0,
        points: Vec::new(),
    };

    let total = q_axis.len().pow(n as u32);
    for flat in 0..total {
        let mut idx = flat;
        let q: Vec<f64> = (0..n)
            .map(|_| {
                let v = q_axis[idx % q_axis.len()];
                idx /= q_axis.len();
                v
            })
            .collect();
        for &t in &t_axis {
            let residual = match kind {
                StructureKind::Cosymplectic => hj_residual_cosymplectic_mode(h, g, &q, t, mode),
                StructureKind::Contact => hj_residual_contact(h, g, &q, t),
            };
            match residual {
                Ok(r) => {
                    let mag = r.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                    report.max_residual = report.max_residual.max(mag);
                    report.points.push(ResidualPoint {
                        q: q.clone(),
                        t,
                        residual: r,
                    });
                }
                Err(Error::Domain(_)) | Err(Error::Singularity(_)) => report.skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn harmonic() -> ScalarField {
        ScalarField::polynomial(1, vec![(0.5, vec![0, 2, 0]), (0.5, vec![2, 0, 0])])
    }

    /// gamma = q * cot(t + c): theorem-mode solution for the harmonic H.
    fn cot_section(c: f64) -> Section {
        Section::new(
            1,
            move |q: &[f64], t: f64| {
                let s = (t + c).sin();
                if s.abs() < 1e-3 {
                    return Err(Error::Singularity(format!("cot pole near t + C = {}", t + c)));
                }
                Ok(vec![q[0] * (t + c).cos() / s])
            },
            move |_q: &[f64], t: f64| {
                Ok(DMatrix::from_element(1, 1, (t + c).cos() / (t + c).sin()))
            },
            move |q: &[f64], t: f64| {
                let s = (t + c).sin();
                Ok(vec![-q[0] / (s * s)])
            },
        )
    }

    #[test]
    fn projected_field_trivial() {
        let h = ScalarField::constant(1, 3.0);
        let g = Section::from_value(1, |_q, _t| Ok(vec![1.0]));
        let (dq, dt) = project_field_cosymplectic(&h, &g, &[0.5], 0.0).unwrap();
        assert_eq!((dq[0], dt), (0.0, 1.0));
        let (dq, dt) = project_field_contact(&h, &g, &[0.5], 0.0).unwrap();
        assert_eq!((dq[0], dt), (0.0, -3.0));
    }

    #[test]
    fn cot_section_solves_theorem_residual() {
        let h = harmonic();
        let g = cot_section(2.0);
        for q in [-1.5, 0.3, 1.0] {
            for t in [0.0, 0.4, 0.9] {
                let r = hj_residual_cosymplectic(&h, &g, &[q], t).unwrap();
                assert!(r[0].abs() < 1e-12, "residual {} at q={q}, t={t}", r[0]);
            }
        }
    }

    #[test]
    fn linear_section_residual_value() {
        // gamma = 2q with harmonic H at q=1, t=0:
        // theorem: 0 + gamma*gamma_q + q = 4 + 1; as-printed: 4 - 1
        let h = harmonic();
        let g = Section::from_value(1, |q, _| Ok(vec![2.0 * q[0]]));
        let r = hj_residual_cosymplectic(&h, &g, &[1.0], 0.0).unwrap();
        assert_relative_eq!(r[0], 5.0, epsilon = 1e-8);
        let r = hj_residual_cosymplectic_as_printed(&h, &g, &[1.0], 0.0).unwrap();
        assert_relative_eq!(r[0], 3.0, epsilon = 1e-8);
    }

    #[test]
    fn contact_residual_constant_section() {
        // damped oscillator (m=1, V=0, alpha=0.1), gamma = 1 at q=0, S=0
        let h = ScalarField::polynomial(1, vec![(0.5, vec![0, 2, 0]), (0.1, vec![0, 0, 1])]);
        let g = Section::new(
            1,
            |_, _| Ok(vec![1.0]),
            |_, _| Ok(DMatrix::zeros(1, 1)),
            |_, _| Ok(vec![0.0]),
        );
        let r = hj_residual_contact(&h, &g, &[0.0], 0.0).unwrap();
        assert_relative_eq!(r[0], 0.1, epsilon = 1e-12);

        let h0 = ScalarField::constant(1, 0.0);
        let r = hj_residual_contact(&h0, &g, &[0.3], 0.7).unwrap();
        assert_eq!(r[0], 0.0);
    }

    #[test]
    fn relatedness_solution_vs_control() {
        let h = harmonic();
        let cfg = IntegratorConfig::rk45(1e-10, 1e-12);
        let good = cot_section(2.0);
        let err = relatedness_error(
            StructureKind::Cosymplectic,
            &h,
            &good,
            &[1.0],
            0.0,
            [0.0, 1.0],
            &cfg,
        )
        .unwrap();
        assert!(err < 1e-6, "relatedness error {err}");

        let bad = Section::from_value(1, |q, _| Ok(vec![2.0 * q[0]]));
        let err = relatedness_error(
            StructureKind::Cosymplectic,
            &h,
            &bad,
            &[1.0],
            0.0,
            [0.0, 0.5],
            &cfg,
        )
        .unwrap();
        assert!(err > 0.1, "negative control too small: {err}");
    }

    #[test]
    fn closedness_examples() {
        let one_d = Section::from_value(1, |q, _| Ok(vec![q[0].powi(3)]));
        let (ok, defect) = is_closed(&one_d, &[(vec![1.0], 0.0)], 1e-10).unwrap();
        assert!(ok);
        assert_eq!(defect, 0.0);

        let closed = Section::from_value(2, |q, _| Ok(vec![q[1], q[0]]));
        let (ok, _) = is_closed(&closed, &[(vec![0.3, -0.4], 0.0)], 1e-8).unwrap();
        assert!(ok);

        let not_closed = Section::from_value(2, |q, _| Ok(vec![q[1], -q[0]]));
        let (ok, defect) = is_closed(&not_closed, &[(vec![0.3, -0.4], 0.0)], 1e-8).unwrap();
        assert!(!ok);
        assert_relative_eq!(defect, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn legendrian_defect_reports_pullback() {
        let g = Section::from_value(2, |_, _| Ok(vec![1.0, 2.0]));
        let form = legendrian_defect(&g, &[0.0, 0.0], 0.0).unwrap();
        assert_eq!(form.aq, vec![-1.0, -2.0]);
        assert_eq!(form.at, 1.0);
    }

    #[test]
    fn characteristics_reproduce_cot_family() {
        let h = harmonic();
        let c: f64 = 2.0;
        let labels: Vec<f64> = (0..41).map(|k| 0.5 + k as f64 / 40.0).collect();
        let gamma0: Vec<f64> = labels.iter().map(|q| q * c.cos() / c.sin()).collect();
        let sol = solve_characteristics_cosymplectic(
            &h,
            &labels,
            &gamma0,
            [0.0, 0.5],
            11,
            ResidualMode::Theorem,
            &IntegratorConfig::rk45(1e-10, 1e-12),
        )
        .unwrap();
        // q-hull at t = 0.5 shrinks by sin(2.5)/sin(2)
        let factor = (2.5f64).sin() / (2.0f64).sin();
        for k in 0..21 {
            let q = (0.55 + 0.04 * k as f64) * factor;
            let expect = q * (2.5f64).cos() / (2.5f64).sin();
            let got = sol.reconstruct(q, 0.5).unwrap();
            assert!((got - expect).abs() < 1e-6, "q={q}: {got} vs {expect}");
        }
    }

    #[test]
    fn characteristics_constant_hamiltonian() {
        let h = ScalarField::constant(1, 1.0);
        let labels = [0.0, 0.5, 1.0];
        let gamma0 = [3.0, 2.0, 1.0];
        let sol = solve_characteristics_cosymplectic(
            &h,
            &labels,
            &gamma0,
            [0.0, 1.0],
            5,
            ResidualMode::Theorem,
            &IntegratorConfig::default(),
        )
        .unwrap();
        for (curve, g0) in sol.curves.iter().zip(gamma0.iter()) {
            for (q, g) in curve {
                assert_relative_eq!(*g, *g0, epsilon = 1e-12);
                let _ = q;
            }
        }
        assert_relative_eq!(sol.reconstruct(0.25, 1.0).unwrap(), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn characteristics_crossing_detected() {
        // dq/dt = p with strongly decreasing initial gamma forces a crossing
        let h = ScalarField::polynomial(1, vec![(0.5, vec![0, 2, 0])]);
        let labels = [0.0, 0.1];
        let gamma0 = [1.0, -1.0];
        let err = solve_characteristics_cosymplectic(
            &h,
            &labels,
            &gamma0,
            [0.0, 1.0],
            11,
            ResidualMode::Theorem,
            &IntegratorConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::CharacteristicsCrossed(_)));
    }

    #[test]
    fn involution_single_parameter_is_zero() {
        let cs = CompleteSolution::new(1, |lam: &[f64]| {
            let c = lam[0];
            Ok(Section::from_value(1, move |q, _| Ok(vec![c * q[0]])))
        })
        .with_inverse(|x| Ok(vec![x.p[0] / x.q[0]]));
        let pts = vec![ExtendedPhasePoint::new(vec![1.0], vec![2.0], 0.0).unwrap()];
        assert_eq!(involution_defect(&cs, &pts).unwrap(), 0.0);
    }

    #[test]
    fn involution_negative_control() {
        // f_1 = p_x^2 + x^2, f_2 = x p_y: {f_1, f_2} != 0
        let cs = CompleteSolution::new(2, |_lam: &[f64]| {
            Ok(Section::from_value(2, |_q, _t| Ok(vec![0.0, 0.0])))
        })
        .with_inverse(|x| Ok(vec![x.p[0] * x.p[0] + x.q[0] * x.q[0], x.q[0] * x.p[1]]));
        let pts = vec![ExtendedPhasePoint::new(vec![1.0, 1.0], vec![0.5, 0.5], 0.0).unwrap()];
        assert!(involution_defect(&cs, &pts).unwrap() > 0.1);
    }

    #[test]
    fn contact_evolution_constant_function() {
        let h = ScalarField::polynomial(1, vec![(0.5, vec![0, 2, 0]), (0.1, vec![0, 0, 1])]);
        let traj = crate::dynamics::integrate_hamiltonian(
            StructureKind::Contact,
            &h,
            &ExtendedPhasePoint::new(vec![0.0], vec![1.0], 0.0).unwrap(),
            [0.0, 1.0],
            &IntegratorConfig::rk45(1e-10, 1e-12),
        )
        .unwrap();
        let f = ScalarField::constant(1, 4.0);
        assert!(contact_parameter_evolution(&h, &f, &traj).unwrap() < 1e-10);
    }

    #[test]
    fn contact_evolution_first_integral() {
        // damped free particle (m=1, V=0): f = q + p/alpha is a first
        // integral with no t-dependence, so the identity defect is |df/ds|
        let alpha = 0.1;
        let h = ScalarField::polynomial(
            1,
            vec![(0.5, vec![0, 2, 0]), (alpha, vec![0, 0, 1])],
        );
        let x0 = ExtendedPhasePoint::new(vec![0.0], vec![1.0], 0.0).unwrap();
        let f = ScalarField::polynomial(
            1,
            vec![(1.0, vec![1, 0, 0]), (1.0 / alpha, vec![0, 1, 0])],
        );
        // uniform sampling keeps the finite-difference slope clean
        let field = hamiltonian_field(StructureKind::Contact, &h);
        let times: Vec<f64> = (1..=100).map(|k| k as f64 * 0.01).collect();
        let samples = solve_ode_at(
            &field,
            &x0.to_state(),
            0.0,
            &times,
            &IntegratorConfig::rk45(1e-10, 1e-12),
        )
        .unwrap();
        let traj = Trajectory {
            samples: samples
                .into_iter()
                .map(|(s, y)| (s, ExtendedPhasePoint::from_state(&y).unwrap()))
                .collect(),
        };
        assert!(contact_parameter_evolution(&h, &f, &traj).unwrap() < 1e-6);
    }

    #[test]
    fn residual_sweep_report() {
        let h = harmonic();
        let g = cot_section(2.0);
        let grid = GridSpec {
            q_min: -1.0,
            q_max: 1.0,
            q_count: 5,
            t_min: 0.0,
            t_max: 0.5,
            t_count: 3,
        };
        let report = residual_sweep(
            StructureKind::Cosymplectic,
            ResidualMode::Theorem,
            &h,
            &g,
            "harmonic-cot",
            &grid,
        )
        .unwrap();
        assert_eq!(report.points.len(), 15);
        assert_eq!(report.skipped, 0);
        assert!(report.max_residual < 1e-12);
        // serde round trip
        let json = serde_json::to_string(&report).unwrap();
        let back: ResidualReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.points.len(), report.points.len());
    }
}
