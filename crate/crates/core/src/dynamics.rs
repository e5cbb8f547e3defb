//! Evolution vector fields and their numerical flows.
//!
//! Both structure kinds are integrated as the autonomous `(2n+1)`-dimensional
//! extended system in an external flow parameter `s`; the coordinate `t` is
//! just another state component (`t-dot = 1` cosymplectic,
//! `t-dot = sum p_i H_{p_i} - H` contact).

use std::io::Write;

use crate::error::{Error, Result};
use crate::point::{ExtendedPhasePoint, TangentVector};
use crate::scalar_field::ScalarField;

/// Which almost-cosymplectic structure drives the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    Cosymplectic,
    Contact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Classical fixed-step RK4; kept for convergence measurements.
    Rk4Fixed,
    /// Dormand-Prince 5(4) embedded pair with standard step control.
    Rk45Adaptive,
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4.
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45Adaptive,
            step: 1e-2,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4Fixed,
            step,
            ..Self::default()
        }
    }

    pub fn rk45(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            method: Method::Rk45Adaptive,
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps < 1 {
            return Err(Error::InvalidConfig("max_steps must be >= 1".into()));
        }
        if self.step <= 0.0 || self.rel_tol <= 0.0 || self.abs_tol <= 0.0 {
            return Err(Error::InvalidConfig(
                "step and tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// An integrated flow: samples `(s, x(s))` with `s` strictly increasing.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, ExtendedPhasePoint)>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.samples.first().map(|(_, x)| x.dim()).unwrap_or(0)
    }

    pub fn last(&self) -> Option<&ExtendedPhasePoint> {
        self.samples.last().map(|(_, x)| x)
    }
}

/// Cosymplectic evolution field `R_H = (H_p, -H_q, 1)`.
pub fn evolution_field_cosymplectic(
    h: &ScalarField,
    x: &ExtendedPhasePoint,
) -> Result<TangentVector> {
    let g = h.grad(x)?;
    Ok(TangentVector {
        dq: g.dp,
        dp: g.dq.iter().map(|c| -c).collect(),
        dt: 1.0,
    })
}

/// Contact evolution field
/// `X_H = (H_p, -(p H_t + H_q), sum p_i H_{p_i} - H)`; satisfies
/// `eta(X_H) = -H`.
pub fn evolution_field_contact(h: &ScalarField, x: &ExtendedPhasePoint) -> Result<TangentVector> {
    let g = h.grad(x)?;
    let value = h.value(x)?;
    let dt = x
        .p
        .iter()
        .zip(g.dp.iter())
        .map(|(pi, hp)| pi * hp)
        .sum::<f64>()
        - value;
    Ok(TangentVector {
        dq: g.dp.clone(),
        dp: x
            .p
            .iter()
            .zip(g.dq.iter())
            .map(|(pi, hq)| -(pi * g.dt + hq))
            .collect(),
        dt,
    })
}

/// The evolution field of `kind` as a state-space closure, for the integrator.
pub fn hamiltonian_field(
    kind: StructureKind,
    h: &ScalarField,
) -> impl Fn(&[f64]) -> Result<Vec<f64>> + '_ {
    move |state: &[f64]| {
        let x = ExtendedPhasePoint::from_state(state)?;
        let v = match kind {
            StructureKind::Cosymplectic => evolution_field_cosymplectic(h, &x)?,
            StructureKind::Contact => evolution_field_contact(h, &x)?,
        };
        Ok(v.to_state())
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn check_finite(y: &[f64], s: f64) -> Result<()> {
    if y.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFiniteState(s));
    }
    Ok(())
}

fn rk4_step<F>(f: &F, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let dim = y.len();
    let k1 = f(y)?;
    let mut tmp = vec![0.0; dim];
    for i in 0..dim {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    let k2 = f(&tmp)?;
    for i in 0..dim {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = f(&tmp)?;
    for i in 0..dim {
        tmp[i] = y[i] + h * k3[i];
    }
    let k4 = f(&tmp)?;
    Ok((0..dim)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// One Dormand-Prince attempt: returns (y5, scaled error norm).
fn dp_step<F>(f: &F, y: &[f64], h: f64, rel: f64, abs: f64) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let dim = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    k.push(f(y)?);
    for stage in 0..6 {
        let mut tmp = y.to_vec();
        for (j, &a) in DP_A[stage].iter().enumerate() {
            for i in 0..dim {
                tmp[i] += h * a * k[j][i];
            }
        }
        let _ = DP_C[stage]; // autonomous field; stage times unused
        k.push(f(&tmp)?);
    }
    let mut y5 = y.to_vec();
    let mut y4 = y.to_vec();
    for i in 0..dim {
        for j in 0..7 {
            y5[i] += h * DP_B5[j] * k[j][i];
            y4[i] += h * DP_B4[j] * k[j][i];
        }
    }
    let mut err = 0.0;
    for i in 0..dim {
        let scale = abs + rel * y[i].abs().max(y5[i].abs());
        let e = (y5[i] - y4[i]) / scale;
        err += e * e;
    }
    Ok((y5, (err / dim as f64).sqrt()))
}

/// Integrate `y' = f(y)` from `s0` to `s1`. With `outputs = None`, samples are
/// the accepted steps; otherwise only the requested `s` values (which must be
/// increasing and inside `[s0, s1]`) are recorded.
fn integrate_core<F>(
    f: &F,
    y0: &[f64],
    s0: f64,
    s1: f64,
    cfg: &IntegratorConfig,
    outputs: Option<&[f64]>,
) -> Result<Vec<(f64, Vec<f64>)>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    if !(s1 > s0) {
        return Err(Error::InvalidConfig("empty span: need s1 > s0".into()));
    }
    if let Some(times) = outputs {
        if times.windows(2).any(|w| w[1] <= w[0])
            || times.first().is_some_and(|&t| t < s0)
            || times.last().is_some_and(|&t| t > s1 + 1e-12 * (s1 - s0).abs())
        {
            return Err(Error::InvalidConfig(
                "output times must increase within the span".into(),
            ));
        }
    }
    check_finite(y0, s0)?;

    let mut samples: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut next_out = 0usize;
    fn record(
        outputs: Option<&[f64]>,
        next_out: &mut usize,
        s: f64,
        y: &[f64],
        samples: &mut Vec<(f64, Vec<f64>)>,
    ) {
        match outputs {
            Some(times) => {
                while *next_out < times.len() && times[*next_out] <= s + 1e-14 * s.abs().max(1.0) {
                    samples.push((times[*next_out], y.to_vec()));
                    *next_out += 1;
                }
            }
            None => samples.push((s, y.to_vec())),
        }
    }

    let mut s = s0;
    let mut y = y0.to_vec();
    record(outputs, &mut next_out, s, &y, &mut samples);

    let mut h = match cfg.method {
        Method::Rk4Fixed => cfg.step.min(s1 - s0),
        Method::Rk45Adaptive => ((s1 - s0) / 100.0).min(0.1),
    };
    let mut steps = 0usize;
    while s < s1 {
        if steps >= cfg.max_steps {
            return Err(Error::StepLimitExceeded(cfg.max_steps));
        }
        steps += 1;
        // when recording at requested times we still land exactly on them
        let mut h_try = h.min(s1 - s);
        if let Some(times) = outputs {
            if next_out < times.len() {
                h_try = h_try.min(times[next_out] - s).max(1e-15);
            }
        }
        let truncated = h_try < h;
        match cfg.method {
            Method::Rk4Fixed => {
                let y_new = rk4_step(f, &y, h_try)?;
                s += h_try;
                check_finite(&y_new, s)?;
                y = y_new;
                record(outputs, &mut next_out, s, &y, &mut samples);
            }
            Method::Rk45Adaptive => {
                let (y_new, err) = dp_step(f, &y, h_try, cfg.rel_tol, cfg.abs_tol)?;
                if err <= 1.0 {
                    s += h_try;
                    check_finite(&y_new, s)?;
                    y = y_new;
                    record(outputs, &mut next_out, s, &y, &mut samples);
                }
                let factor = if err > 0.0 {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                } else {
                    5.0
                };
                let candidate = (h_try * factor).max(1e-14 * (s1 - s0));
                // an accepted step that was shortened just to land on an
                // output point must not drag the working step size down
                h = if truncated && err <= 1.0 {
                    h.max(candidate)
                } else {
                    candidate
                };
            }
        }
    }
    Ok(samples)
}

/// Raw state-space adaptive/fixed integration, sampled at accepted steps.
pub fn solve_ode<F>(
    f: &F,
    y0: &[f64],
    s0: f64,
    s1: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, Vec<f64>)>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    integrate_core(f, y0, s0, s1, cfg, None)
}

/// As [`solve_ode`] but records the state exactly at the requested `s` values.
pub fn solve_ode_at<F>(
    f: &F,
    y0: &[f64],
    s0: f64,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, Vec<f64>)>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let s1 = *times.last().ok_or_else(|| {
        Error::InvalidConfig("solve_ode_at needs at least one output time".into())
    })?;
    if s1 <= s0 {
        return Err(Error::InvalidConfig("empty span: need s1 > s0".into()));
    }
    integrate_core(f, y0, s0, s1, cfg, Some(times))
}

/// Integrate a phase-space vector field from `x0` over `span = [s0, s1]`.
pub fn integrate<F>(
    field: &F,
    x0: &ExtendedPhasePoint,
    span: [f64; 2],
    cfg: &IntegratorConfig,
) -> Result<Trajectory>
where
    F: Fn(&ExtendedPhasePoint) -> Result<TangentVector>,
{
    let f = |state: &[f64]| {
        let x = ExtendedPhasePoint::from_state(state)?;
        Ok(field(&x)?.to_state())
    };
    let raw = integrate_core(&f, &x0.to_state(), span[0], span[1], cfg, None)?;
    let samples = raw
        .into_iter()
        .map(|(s, y)| Ok((s, ExtendedPhasePoint::from_state(&y)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { samples })
}

/// Integrate the evolution field of `kind` for the Hamiltonian `h`.
pub fn integrate_hamiltonian(
    kind: StructureKind,
    h: &ScalarField,
    x0: &ExtendedPhasePoint,
    span: [f64; 2],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    match kind {
        StructureKind::Cosymplectic => {
            integrate(&|x| evolution_field_cosymplectic(h, x), x0, span, cfg)
        }
        StructureKind::Contact => integrate(&|x| evolution_field_contact(h, x), x0, span, cfg),
    }
}

/// Conservation/dissipation diagnostic along a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftMode {
    /// Time-independent cosymplectic case: `H` constant along `R_H`.
    Conservative,
    /// Contact case: `H(s) = H(0) exp(-int H_t ds)` along `X_H`.
    Dissipative,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DriftReport {
    pub max_abs: f64,
    pub max_rel: f64,
}

/// Deviation of `H` along a trajectory from the law implied by the structure:
/// constant for [`DriftMode::Conservative`], the exponential dissipation law
/// (with `int H_t ds` accumulated by the trapezoid rule over the samples) for
/// [`DriftMode::Dissipative`].
pub fn hamiltonian_drift(
    h: &ScalarField,
    traj: &Trajectory,
    mode: DriftMode,
) -> Result<DriftReport> {
    if traj.samples.len() < 2 {
        return Ok(DriftReport {
            max_abs: 0.0,
            max_rel: 0.0,
        });
    }
    let h0 = h.value(&traj.samples[0].1)?;
    let scale = h0.abs().max(f64::MIN_POSITIVE);
    let mut report = DriftReport {
        max_abs: 0.0,
        max_rel: 0.0,
    };
    let mut accumulated = 0.0; // int H_t ds
    let mut prev: Option<(f64, f64)> = None; // (s, H_t)
    for (s, x) in &traj.samples {
        let value = h.value(x)?;
        let reference = match mode {
            DriftMode::Conservative => h0,
            DriftMode::Dissipative => {
                let ht = h.d_t(x)?;
                if let Some((s_prev, ht_prev)) = prev {
                    accumulated += 0.5 * (ht + ht_prev) * (s - s_prev);
                }
                prev = Some((*s, ht));
                h0 * (-accumulated).exp()
            }
        };
        let dev = (value - reference).abs();
        report.max_abs = report.max_abs.max(dev);
        report.max_rel = report.max_rel.max(dev / scale);
    }
    Ok(report)
}

/// Trajectory CSV: header `s,t,q1..qn,p1..pn,H`, one row per sample, 17
/// significant digits.
pub fn write_trajectory_csv<W: Write>(
    out: &mut W,
    traj: &Trajectory,
    h: &ScalarField,
) -> Result<()> {
    let n = traj.dim();
    let mut header = String::from("s,t");
    for i in 1..=n {
        header.push_str(&format!(",q{i}"));
    }
    for i in 1..=n {
        header.push_str(&format!(",p{i}"));
    }
    header.push_str(",H");
    let io_err = |e: std::io::Error| Error::InvalidConfig(format!("csv write failed: {e}"));
    writeln!(out, "{header}").map_err(io_err)?;
    for (s, x) in &traj.samples {
        let mut row = format!("{:.16e},{:.16e}", s, x.t);
        for c in x.q.iter().chain(x.p.iter()) {
            row.push_str(&format!(",{c:.16e}"));
        }
        row.push_str(&format!(",{:.16e}", h.value(x)?));
        writeln!(out, "{row}").map_err(io_err)?;
    }
    Ok(())
}
