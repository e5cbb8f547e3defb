//! Sections of `T*Q x R -> Q x R`: candidate Hamilton-Jacobi solutions.
//!
//! A section assigns fiber (momentum) components `gamma^j(q, t)` to base
//! points; it plays the role of `dW`. Complete solutions are `n`-parameter
//! families of sections together with the inverse map that recovers the
//! parameters from a phase-space point.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::point::ExtendedPhasePoint;
use crate::scalar_field::fd_step;

type GammaFn = dyn Fn(&[f64], f64) -> Result<Vec<f64>> + Send + Sync;
type JacFn = dyn Fn(&[f64], f64) -> Result<DMatrix<f64>> + Send + Sync;
type DtFn = dyn Fn(&[f64], f64) -> Result<Vec<f64>> + Send + Sync;

/// A section `gamma: Q x R -> T*Q x R` with its first derivatives.
/// The Jacobian is indexed `(j, i) = d gamma^j / d q^i`.
#[derive(Clone)]
pub struct Section {
    n: usize,
    gamma: Arc<GammaFn>,
    jac_q: Arc<JacFn>,
    d_t: Arc<DtFn>,
}

impl Section {
    pub fn new<G, J, T>(n: usize, gamma: G, jac_q: J, d_t: T) -> Self
    where
        G: Fn(&[f64], f64) -> Result<Vec<f64>> + Send + Sync + 'static,
        J: Fn(&[f64], f64) -> Result<DMatrix<f64>> + Send + Sync + 'static,
        T: Fn(&[f64], f64) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            n,
            gamma: Arc::new(gamma),
            jac_q: Arc::new(jac_q),
            d_t: Arc::new(d_t),
        }
    }

    /// Build from the fiber map alone; derivatives use central differences.
    pub fn from_value<G>(n: usize, gamma: G) -> Self
    where
        G: Fn(&[f64], f64) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        let gamma = Arc::new(gamma);
        let g_jac = gamma.clone();
        let g_dt = gamma.clone();
        Self {
            n,
            gamma: Arc::new(move |q, t| gamma(q, t)),
            jac_q: Arc::new(move |q: &[f64], t: f64| {
                let mut jac = DMatrix::zeros(n, n);
                for i in 0..n {
                    let h = fd_step(q[i]);
                    let mut qp = q.to_vec();
                    qp[i] += h;
                    let plus = g_jac(&qp, t)?;
                    qp[i] = q[i] - h;
                    let minus = g_jac(&qp, t)?;
                    for j in 0..n {
                        jac[(j, i)] = (plus[j] - minus[j]) / (2.0 * h);
                    }
                }
                Ok(jac)
            }),
            d_t: Arc::new(move |q: &[f64], t: f64| {
                let h = fd_step(t);
                let plus = g_dt(q, t + h)?;
                let minus = g_dt(q, t - h)?;
                Ok(plus
                    .iter()
                    .zip(minus.iter())
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect())
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn gamma(&self, q: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_dim(q)?;
        (self.gamma)(q, t)
    }

    pub fn jac_q(&self, q: &[f64], t: f64) -> Result<DMatrix<f64>> {
        self.check_dim(q)?;
        (self.jac_q)(q, t)
    }

    pub fn d_t(&self, q: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_dim(q)?;
        (self.d_t)(q, t)
    }

    /// Lift a base point through the section: `(q, t) -> (q, gamma(q,t), t)`.
    pub fn lift(&self, q: &[f64], t: f64) -> Result<ExtendedPhasePoint> {
        ExtendedPhasePoint::new(q.to_vec(), self.gamma(q, t)?, t)
    }

    /// Max relative mismatch of the analytic derivatives against central
    /// finite differences over the given base points.
    pub fn gradient_check(&self, points: &[(Vec<f64>, f64)]) -> Result<f64> {
        let mut worst = 0.0f64;
        for (q, t) in points {
            let jac = self.jac_q(q, *t)?;
            for i in 0..self.n {
                let h = fd_step(q[i]);
                let mut qp = q.to_vec();
                qp[i] += h;
                let plus = self.gamma(&qp, *t)?;
                qp[i] = q[i] - h;
                let minus = self.gamma(&qp, *t)?;
                for j in 0..self.n {
                    let fd = (plus[j] - minus[j]) / (2.0 * h);
                    let scale = jac[(j, i)].abs().max(fd.abs()).max(1.0);
                    worst = worst.max((jac[(j, i)] - fd).abs() / scale);
                }
            }
            let h = fd_step(*t);
            let plus = self.gamma(q, t + h)?;
            let minus = self.gamma(q, t - h)?;
            let dt = self.d_t(q, *t)?;
            for j in 0..self.n {
                let fd = (plus[j] - minus[j]) / (2.0 * h);
                let scale = dt[j].abs().max(fd.abs()).max(1.0);
                worst = worst.max((dt[j] - fd).abs() / scale);
            }
        }
        Ok(worst)
    }

    fn check_dim(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: q.len(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Debug for Section {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Section").field("n", &self.n).finish()
    }
}

type FamilyFn = dyn Fn(&[f64]) -> Result<Section> + Send + Sync;
type InverseFn = dyn Fn(&ExtendedPhasePoint) -> Result<Vec<f64>> + Send + Sync;

/// An `n`-parameter family of sections `lambda -> Section`, optionally with
/// the inverse map `x -> lambda` (the composition `alpha o Phi^{-1}`).
#[derive(Clone)]
pub struct CompleteSolution {
    k: usize,
    family: Arc<FamilyFn>,
    inverse: Option<Arc<InverseFn>>,
}

impl CompleteSolution {
    pub fn new<F>(k: usize, family: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Section> + Send + Sync + 'static,
    {
        Self {
            k,
            family: Arc::new(family),
            inverse: None,
        }
    }

    pub fn with_inverse<I>(mut self, inverse: I) -> Self
    where
        I: Fn(&ExtendedPhasePoint) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    pub fn parameter_count(&self) -> usize {
        self.k
    }

    pub fn section(&self, lambda: &[f64]) -> Result<Section> {
        if lambda.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: lambda.len(),
            });
        }
        (self.family)(lambda)
    }

    /// The parameter values whose section passes through `x`.
    pub fn inverse(&self, x: &ExtendedPhasePoint) -> Result<Vec<f64>> {
        match &self.inverse {
            Some(inv) => inv(x),
            None => Err(Error::RootFindFailure(
                "complete solution has no inverse map".into(),
            )),
        }
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    /// Check `family(inverse(x))` reproduces the fiber of `x`; returns the
    /// max component defect.
    pub fn round_trip_defect(&self, x: &ExtendedPhasePoint) -> Result<f64> {
        let lambda = self.inverse(x)?;
        let section = self.section(&lambda)?;
        let p = section.gamma(&x.q, x.t)?;
        Ok(p.iter()
            .zip(x.p.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

impl std::fmt::Debug for CompleteSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompleteSolution")
            .field("k", &self.k)
            .field("has_inverse", &self.inverse.is_some())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn from_value_derivatives() {
        // gamma = (q1*q2 + t, q1 - t^2)
        let s = Section::from_value(2, |q, t| Ok(vec![q[0] * q[1] + t, q[0] - t * t]));
        let q = [1.5, -0.5];
        let jac = s.jac_q(&q, 2.0).unwrap();
        assert_relative_eq!(jac[(0, 0)], -0.5, epsilon = 1e-8);
        assert_relative_eq!(jac[(0, 1)], 1.5, epsilon = 1e-8);
        assert_relative_eq!(jac[(1, 0)], 1.0, epsilon = 1e-8);
        assert_relative_eq!(jac[(1, 1)], 0.0, epsilon = 1e-8);
        let dt = s.d_t(&q, 2.0).unwrap();
        assert_relative_eq!(dt[0], 1.0, epsilon = 1e-8);
        assert_relative_eq!(dt[1], -4.0, epsilon = 1e-7);
    }

    #[test]
    fn lift_builds_phase_point() {
        let s = Section::from_value(1, |q, _| Ok(vec![2.0 * q[0]]));
        let x = s.lift(&[3.0], 1.0).unwrap();
        assert_eq!((x.q[0], x.p[0], x.t), (3.0, 6.0, 1.0));
    }

    #[test]
    fn gradient_check_catches_bad_jacobian() {
        let s = Section::new(
            1,
            |q, _| Ok(vec![q[0] * q[0]]),
            |q, _| Ok(DMatrix::from_element(1, 1, 3.0 * q[0])), // wrong
            |_, _| Ok(vec![0.0]),
        );
        assert!(s.gradient_check(&[(vec![1.0], 0.0)]).unwrap() > 1e-2);
    }

    #[test]
    fn inverse_missing_is_an_error() {
        let cs = CompleteSolution::new(1, |lam: &[f64]| {
            let c = lam[0];
            Ok(Section::from_value(1, move |q, _| Ok(vec![c * q[0]])))
        });
        let x = ExtendedPhasePoint::new(vec![1.0], vec![2.0], 0.0).unwrap();
        assert!(matches!(cs.inverse(&x), Err(Error::RootFindFailure(_))));
    }

    #[test]
    fn round_trip_with_inverse() {
        let cs = CompleteSolution::new(1, |lam: &[f64]| {
            let c = lam[0];
            Ok(Section::from_value(1, move |q, _| Ok(vec![c * q[0]])))
        })
        .with_inverse(|x| Ok(vec![x.p[0] / x.q[0]]));
        let x = ExtendedPhasePoint::new(vec![2.0], vec![5.0], 0.0).unwrap();
        assert!(cs.round_trip_defect(&x).unwrap() < 1e-12);
    }
}
