//! Smooth functions on the extended phase space with first derivatives.
//!
//! A [`ScalarField`] carries its value and analytic first derivatives as
//! closures. Value-only definitions are adapted with central finite
//! differences, which doubles as the cross-check oracle for analytic
//! derivatives. Second derivatives, needed only for bracket-of-bracket
//! computations, default to finite differences of the first derivatives.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::point::ExtendedPhasePoint;

/// First derivatives of a scalar field at a point, split by coordinate block.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrad {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
    pub dt: f64,
}

impl FieldGrad {
    pub fn zero(n: usize) -> Self {
        Self {
            dq: vec![0.0; n],
            dp: vec![0.0; n],
            dt: 0.0,
        }
    }

    /// Flatten to the coordinate order `[q.., p.., t]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.dq.len() + 1);
        v.extend_from_slice(&self.dq);
        v.extend_from_slice(&self.dp);
        v.push(self.dt);
        v
    }
}

type ValueFn = dyn Fn(&ExtendedPhasePoint) -> Result<f64> + Send + Sync;
type GradFn = dyn Fn(&ExtendedPhasePoint) -> Result<FieldGrad> + Send + Sync;
type HessFn = dyn Fn(&ExtendedPhasePoint) -> Result<DMatrix<f64>> + Send + Sync;

/// A smooth function `T*Q x R -> R` with first (and optionally second)
/// partial derivatives.
#[derive(Clone)]
pub struct ScalarField {
    n: usize,
    value: Arc<ValueFn>,
    grad: Arc<GradFn>,
    hess: Option<Arc<HessFn>>,
}

/// Central-difference step for coordinate value `c`: `cbrt(eps) * max(1, |c|)`.
pub fn fd_step(c: f64) -> f64 {
    f64::EPSILON.cbrt() * c.abs().max(1.0)
}

fn perturbed(x: &ExtendedPhasePoint, idx: usize, delta: f64) -> ExtendedPhasePoint {
    let n = x.dim();
    let mut y = x.clone();
    if idx < n {
        y.q[idx] += delta;
    } else if idx < 2 * n {
        y.p[idx - n] += delta;
    } else {
        y.t += delta;
    }
    y
}

impl ScalarField {
    /// Build from analytic value and gradient closures.
    pub fn from_parts<V, G>(n: usize, value: V, grad: G) -> Self
    where
        V: Fn(&ExtendedPhasePoint) -> Result<f64> + Send + Sync + 'static,
        G: Fn(&ExtendedPhasePoint) -> Result<FieldGrad> + Send + Sync + 'static,
    {
        Self {
            n,
            value: Arc::new(value),
            grad: Arc::new(grad),
            hess: None,
        }
    }

    /// Attach an analytic second-derivative provider. The Hessian is indexed
    /// in the flat coordinate order `[q.., p.., t]`.
    pub fn with_hessian<H>(mut self, hess: H) -> Self
    where
        H: Fn(&ExtendedPhasePoint) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.hess = Some(Arc::new(hess));
        self
    }

    /// Adapt a value-only definition; derivatives come from central finite
    /// differences.
    pub fn from_value<V>(n: usize, value: V) -> Self
    where
        V: Fn(&ExtendedPhasePoint) -> Result<f64> + Send + Sync + 'static,
    {
        let value = Arc::new(value);
        let v = value.clone();
        let grad = move |x: &ExtendedPhasePoint| {
            let dim = 2 * n + 1;
            let mut flat = vec![0.0; dim];
            let coords = x.to_state();
            for (idx, slot) in flat.iter_mut().enumerate() {
                let h = fd_step(coords[idx]);
                let plus = v(&perturbed(x, idx, h))?;
                let minus = v(&perturbed(x, idx, -h))?;
                *slot = (plus - minus) / (2.0 * h);
            }
            Ok(FieldGrad {
                dq: flat[..n].to_vec(),
                dp: flat[n..2 * n].to_vec(),
                dt: flat[2 * n],
            })
        };
        Self {
            n,
            value: Arc::new(move |x| value(x)),
            grad: Arc::new(grad),
            hess: None,
        }
    }

    /// Constant field.
    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_parts(n, move |_| Ok(c), move |_| Ok(FieldGrad::zero(n)))
            .with_hessian(move |_| Ok(DMatrix::zeros(2 * n + 1, 2 * n + 1)))
    }

    /// The coordinate function `q^i`, `p_i` or `t` (flat index in `[q.., p.., t]`).
    pub fn coordinate(n: usize, idx: usize) -> Self {
        assert!(idx < 2 * n + 1);
        Self::from_parts(
            n,
            move |x| Ok(x.to_state()[idx]),
            move |_| {
                let mut flat = vec![0.0; 2 * n + 1];
                flat[idx] = 1.0;
                Ok(FieldGrad {
                    dq: flat[..n].to_vec(),
                    dp: flat[n..2 * n].to_vec(),
                    dt: flat[2 * n],
                })
            },
        )
        .with_hessian(move |_| Ok(DMatrix::zeros(2 * n + 1, 2 * n + 1)))
    }

    /// Polynomial in the flat coordinates: each term is a coefficient and one
    /// exponent per coordinate in the `[q.., p.., t]` order. Value, gradient
    /// and Hessian are all analytic.
    pub fn polynomial(n: usize, terms: Vec<(f64, Vec<u32>)>) -> Self {
        let dim = 2 * n + 1;
        for (_, exps) in &terms {
            assert_eq!(exps.len(), dim, "one exponent per coordinate");
        }
        let terms = Arc::new(terms);

        fn mono(coords: &[f64], exps: &[u32], skip: &[usize]) -> f64 {
            let mut acc = 1.0;
            for (idx, (&c, &e)) in coords.iter().zip(exps.iter()).enumerate() {
                let drop = skip.iter().filter(|&&s| s == idx).count() as u32;
                if e < drop {
                    return 0.0;
                }
                acc *= c.powi((e - drop) as i32);
            }
            acc
        }
        fn dcoef(exps: &[u32], wrt: &[usize]) -> f64 {
            let mut acc = 1.0;
            let mut taken: Vec<usize> = Vec::new();
            for &idx in wrt {
                let already = taken.iter().filter(|&&s| s == idx).count() as u32;
                if exps[idx] <= already {
                    return 0.0;
                }
                acc *= (exps[idx] - already) as f64;
                taken.push(idx);
            }
            acc
        }

        let t_val = terms.clone();
        let t_grad = terms.clone();
        let t_hess = terms.clone();
        Self::from_parts(
            n,
            move |x| {
                let coords = x.to_state();
                Ok(t_val
                    .iter()
                    .map(|(c, e)| c * mono(&coords, e, &[]))
                    .sum())
            },
            move |x| {
                let coords = x.to_state();
                let mut flat = vec![0.0; dim];
                for (idx, slot) in flat.iter_mut().enumerate() {
                    for (c, e) in t_grad.iter() {
                        *slot += c * dcoef(e, &[idx]) * mono(&coords, e, &[idx]);
                    }
                }
                Ok(FieldGrad {
                    dq: flat[..n].to_vec(),
                    dp: flat[n..2 * n].to_vec(),
                    dt: flat[2 * n],
                })
            },
        )
        .with_hessian(move |x| {
            let coords = x.to_state();
            let mut h = DMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..=i {
                    let mut acc = 0.0;
                    for (c, e) in t_hess.iter() {
                        acc += c * dcoef(e, &[i, j]) * mono(&coords, e, &[i, j]);
                    }
                    h[(i, j)] = acc;
                    h[(j, i)] = acc;
                }
            }
            Ok(h)
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn value(&self, x: &ExtendedPhasePoint) -> Result<f64> {
        self.check_dim(x)?;
        (self.value)(x)
    }

    pub fn grad(&self, x: &ExtendedPhasePoint) -> Result<FieldGrad> {
        self.check_dim(x)?;
        (self.grad)(x)
    }

    pub fn d_q(&self, x: &ExtendedPhasePoint) -> Result<Vec<f64>> {
        Ok(self.grad(x)?.dq)
    }

    pub fn d_p(&self, x: &ExtendedPhasePoint) -> Result<Vec<f64>> {
        Ok(self.grad(x)?.dp)
    }

    pub fn d_t(&self, x: &ExtendedPhasePoint) -> Result<f64> {
        Ok(self.grad(x)?.dt)
    }

    /// Second derivatives in the flat coordinate order. Falls back to central
    /// finite differences of the analytic gradient when no provider is set.
    pub fn hessian(&self, x: &ExtendedPhasePoint) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        if let Some(h) = &self.hess {
            return h(x);
        }
        let dim = 2 * self.n + 1;
        let coords = x.to_state();
        let mut m = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let h = fd_step(coords[j]);
            let plus = (self.grad)(&perturbed(x, j, h))?.to_vec();
            let minus = (self.grad)(&perturbed(x, j, -h))?.to_vec();
            for i in 0..dim {
                m[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        Ok(m)
    }

    /// Maximum relative mismatch between the analytic gradient and a central
    /// finite-difference estimate over the given points.
    pub fn gradient_check(&self, points: &[ExtendedPhasePoint]) -> Result<f64> {
        let dim = 2 * self.n + 1;
        let mut worst = 0.0f64;
        for x in points {
            let analytic = self.grad(x)?.to_vec();
            let coords = x.to_state();
            for idx in 0..dim {
                let h = fd_step(coords[idx]);
                let plus = self.value(&perturbed(x, idx, h))?;
                let minus = self.value(&perturbed(x, idx, -h))?;
                let fd = (plus - minus) / (2.0 * h);
                let scale = analytic[idx].abs().max(fd.abs()).max(1.0);
                worst = worst.max((analytic[idx] - fd).abs() / scale);
            }
        }
        Ok(worst)
    }

    fn check_dim(&self, x: &ExtendedPhasePoint) -> Result<()> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.dim(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.n)
            .field("analytic_hessian", &self.hess.is_some())
            .finish()
    }
}
