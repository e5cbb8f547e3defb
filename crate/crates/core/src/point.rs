//! Coordinate containers for the extended phase space `T*Q x R`.
//!
//! Everything lives in a single global Darboux chart `(q^1..q^n, p_1..p_n, t)`.
//! The `t` slot is physical time in the cosymplectic case and the action-like
//! coordinate `S` in the contact case.

use crate::error::{Error, Result};

/// A point `(q, p, t)` of the extended phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl ExtendedPhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>, t: f64) -> Result<Self> {
        if q.is_empty() || q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len().max(1),
                got: p.len(),
            });
        }
        if !t.is_finite() || q.iter().chain(p.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("phase point coordinates".into()));
        }
        Ok(Self { q, p, t })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Flatten to the state layout `[q.., p.., t]` used by the integrator.
    pub fn to_state(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(2 * self.q.len() + 1);
        s.extend_from_slice(&self.q);
        s.extend_from_slice(&self.p);
        s.push(self.t);
        s
    }

    /// Inverse of [`to_state`]; `state.len()` must be odd and at least 3.
    pub fn from_state(state: &[f64]) -> Result<Self> {
        if state.len() < 3 || state.len() % 2 == 0 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: state.len(),
            });
        }
        let n = (state.len() - 1) / 2;
        Self::new(state[..n].to_vec(), state[n..2 * n].to_vec(), state[2 * n])
    }
}

/// A tangent vector in the coordinate frame `(d/dq^i, d/dp_i, d/dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
    pub dt: f64,
}

impl TangentVector {
    pub fn zero(n: usize) -> Self {
        Self {
            dq: vec![0.0; n],
            dp: vec![0.0; n],
            dt: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dq.len()
    }

    pub fn to_state(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(2 * self.dq.len() + 1);
        s.extend_from_slice(&self.dq);
        s.extend_from_slice(&self.dp);
        s.push(self.dt);
        s
    }

    pub fn sup_norm(&self) -> f64 {
        self.dq
            .iter()
            .chain(self.dp.iter())
            .chain(std::iter::once(&self.dt))
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

/// A one-form with coefficients on `(dq^i, dp_i, dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub aq: Vec<f64>,
    pub ap: Vec<f64>,
    pub at: f64,
}

impl OneForm {
    pub fn zero(n: usize) -> Self {
        Self {
            aq: vec![0.0; n],
            ap: vec![0.0; n],
            at: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.aq.len()
    }

    /// Natural pairing `<a, X>`.
    pub fn pair(&self, x: &TangentVector) -> f64 {
        let mut acc = self.at * x.dt;
        for i in 0..self.aq.len() {
            acc += self.aq[i] * x.dq[i] + self.ap[i] * x.dp[i];
        }
        acc
    }

    pub fn sup_norm(&self) -> f64 {
        self.aq
            .iter()
            .chain(self.ap.iter())
            .chain(std::iter::once(&self.at))
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }
}
