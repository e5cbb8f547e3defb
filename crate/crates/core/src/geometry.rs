//! Geometric structures on the extended phase space, evaluated in Darboux
//! coordinates: one-forms, flat/sharp morphisms, Reeb fields, bivectors and
//! brackets.
//!
//! Sign conventions are fixed as
//! `Omega_canonical = sum dq^i ^ dp_i`,
//! `Omega_H = sum dq^i ^ dp_i + dH ^ dt` (cosymplectic) and
//! `eta = dt - sum p_i dq^i` (contact).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::point::{ExtendedPhasePoint, OneForm, TangentVector};
use crate::scalar_field::ScalarField;

/// Tagged structure descriptor. Cosymplectic carries the Hamiltonian that
/// enters `Omega_H`; LCS carries the local conformal exponent `sigma`.
#[derive(Debug, Clone)]
pub enum GeometricStructure {
    Symplectic { n: usize },
    Cosymplectic { hamiltonian: ScalarField },
    Contact { n: usize },
    Lcs { sigma: ScalarField },
}

impl GeometricStructure {
    pub fn cosymplectic(hamiltonian: ScalarField) -> Self {
        Self::Cosymplectic { hamiltonian }
    }

    pub fn contact(n: usize) -> Self {
        Self::Contact { n }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Symplectic { n } | Self::Contact { n } => *n,
            Self::Cosymplectic { hamiltonian } => hamiltonian.dim(),
            Self::Lcs { sigma } => sigma.dim(),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Self::Symplectic { .. } => "symplectic",
            Self::Cosymplectic { .. } => "cosymplectic",
            Self::Contact { .. } => "contact",
            Self::Lcs { .. } => "locally conformally symplectic",
        }
    }

    fn check_point(&self, x: &ExtendedPhasePoint) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }
}

/// The structure one-form `eta` at `x`: `dt` for cosymplectic,
/// `dt - sum p_i dq^i` for contact.
pub fn eval_eta(s: &GeometricStructure, x: &ExtendedPhasePoint) -> Result<OneForm> {
    s.check_point(x)?;
    let n = x.dim();
    match s {
        GeometricStructure::Cosymplectic { .. } => Ok(OneForm {
            aq: vec![0.0; n],
            ap: vec![0.0; n],
            at: 1.0,
        }),
        GeometricStructure::Contact { .. } => Ok(OneForm {
            aq: x.p.iter().map(|pi| -pi).collect(),
            ap: vec![0.0; n],
            at: 1.0,
        }),
        other => Err(Error::UnsupportedStructure(other.kind_name())),
    }
}

/// Contraction `i_X Omega` at `x`, with `Omega = Omega_H` (cosymplectic) or
/// `Omega = d eta` (contact).
pub fn omega_contraction(
    s: &GeometricStructure,
    v: &TangentVector,
    x: &ExtendedPhasePoint,
) -> Result<OneForm> {
    s.check_point(x)?;
    let n = x.dim();
    match s {
        GeometricStructure::Cosymplectic { hamiltonian } => {
            let g = hamiltonian.grad(x)?;
            let mut out = OneForm::zero(n);
            for i in 0..n {
                out.aq[i] = -v.dp[i] - v.dt * g.dq[i];
                out.ap[i] = v.dq[i] - v.dt * g.dp[i];
                out.at += g.dq[i] * v.dq[i] + g.dp[i] * v.dp[i];
            }
            Ok(out)
        }
        GeometricStructure::Contact { .. } => {
            let mut out = OneForm::zero(n);
            for i in 0..n {
                out.aq[i] = -v.dp[i];
                out.ap[i] = v.dq[i];
            }
            Ok(out)
        }
        other => Err(Error::UnsupportedStructure(other.kind_name())),
    }
}

/// The flat morphism `b(X) = i_X Omega + eta(X) eta` at `x`.
pub fn flat(
    s: &GeometricStructure,
    v: &TangentVector,
    x: &ExtendedPhasePoint,
) -> Result<OneForm> {
    let eta = eval_eta(s, x)?;
    let eta_of_v = eta.pair(v);
    let mut out = omega_contraction(s, v, x)?;
    for i in 0..x.dim() {
        out.aq[i] += eta_of_v * eta.aq[i];
        out.ap[i] += eta_of_v * eta.ap[i];
    }
    out.at += eta_of_v * eta.at;
    Ok(out)
}

/// The sharp morphism: the unique `X` with `flat(X) = a`, found by solving
/// the `(2n+1)`-dimensional linear system of `flat` at `x`. One code path
/// serves both structure kinds.
pub fn sharp(s: &GeometricStructure, a: &OneForm, x: &ExtendedPhasePoint) -> Result<TangentVector> {
    s.check_point(x)?;
    let n = x.dim();
    let dim = 2 * n + 1;
    let mut m = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut basis = TangentVector::zero(n);
        if k < n {
            basis.dq[k] = 1.0;
        } else if k < 2 * n {
            basis.dp[k - n] = 1.0;
        } else {
            basis.dt = 1.0;
        }
        let col = flat(s, &basis, x)?;
        for i in 0..n {
            m[(i, k)] = col.aq[i];
            m[(n + i, k)] = col.ap[i];
        }
        m[(2 * n, k)] = col.at;
    }
    let mut rhs = DVector::zeros(dim);
    for i in 0..n {
        rhs[i] = a.aq[i];
        rhs[n + i] = a.ap[i];
    }
    rhs[2 * n] = a.at;

    let sol = m.lu().solve(&rhs).ok_or(Error::SingularMatrix)?;
    let v = TangentVector {
        dq: sol.as_slice()[..n].to_vec(),
        dp: sol.as_slice()[n..2 * n].to_vec(),
        dt: sol[2 * n],
    };

    // round-trip guard: a failure here means invalid H derivatives or a bug
    let back = flat(s, &v, x)?;
    let scale = a.sup_norm().max(1.0);
    let defect = back
        .aq
        .iter()
        .zip(a.aq.iter())
        .chain(back.ap.iter().zip(a.ap.iter()))
        .map(|(u, w)| (u - w).abs())
        .fold((back.at - a.at).abs(), f64::max);
    if defect > 1e-10 * scale {
        return Err(Error::SingularMatrix);
    }
    Ok(v)
}

/// The Reeb vector field: `i_R eta = 1`, `i_R Omega = 0`. Closed form:
/// cosymplectic `R_H = d/dt + H_p d/dq - H_q d/dp`, contact `R = d/dt`.
pub fn reeb(s: &GeometricStructure, x: &ExtendedPhasePoint) -> Result<TangentVector> {
    s.check_point(x)?;
    let n = x.dim();
    match s {
        GeometricStructure::Cosymplectic { hamiltonian } => {
            let g = hamiltonian.grad(x)?;
            Ok(TangentVector {
                dq: g.dp,
                dp: g.dq.iter().map(|c| -c).collect(),
                dt: 1.0,
            })
        }
        GeometricStructure::Contact { .. } => Ok(TangentVector {
            dq: vec![0.0; n],
            dp: vec![0.0; n],
            dt: 1.0,
        }),
        other => Err(Error::UnsupportedStructure(other.kind_name())),
    }
}

/// The coordinate bivector on two one-forms:
/// cosymplectic `Lambda = sum d/dq^i ^ d/dp_i`,
/// contact `Lambda = sum (d/dq^i + p_i d/dt) ^ d/dp_i`.
pub fn bivector(
    s: &GeometricStructure,
    a: &OneForm,
    b: &OneForm,
    x: &ExtendedPhasePoint,
) -> Result<f64> {
    s.check_point(x)?;
    let n = x.dim();
    match s {
        GeometricStructure::Cosymplectic { .. } => {
            let mut acc = 0.0;
            for i in 0..n {
                acc += a.aq[i] * b.ap[i] - a.ap[i] * b.aq[i];
            }
            Ok(acc)
        }
        GeometricStructure::Contact { .. } => {
            let mut acc = 0.0;
            for i in 0..n {
                acc += (a.aq[i] + x.p[i] * a.at) * b.ap[i] - a.ap[i] * (b.aq[i] + x.p[i] * b.at);
            }
            Ok(acc)
        }
        other => Err(Error::UnsupportedStructure(other.kind_name())),
    }
}

fn grad_to_form(g: &crate::scalar_field::FieldGrad) -> OneForm {
    OneForm {
        aq: g.dq.clone(),
        ap: g.dp.clone(),
        at: g.dt,
    }
}

/// The bracket of two scalar fields at `x`: the Poisson bracket
/// `Lambda(df, dg)` for cosymplectic, the Jacobi bracket
/// `Lambda(df, dg) + f R(g) - g R(f)` for contact (with `R = d/dt`).
pub fn bracket(
    s: &GeometricStructure,
    f: &ScalarField,
    g: &ScalarField,
    x: &ExtendedPhasePoint,
) -> Result<f64> {
    let gf = f.grad(x)?;
    let gg = g.grad(x)?;
    let core = bivector(s, &grad_to_form(&gf), &grad_to_form(&gg), x)?;
    match s {
        GeometricStructure::Cosymplectic { .. } => Ok(core),
        GeometricStructure::Contact { .. } => {
            // grouped so that {f,g} = -{g,f} holds bitwise
            Ok(core + (f.value(x)? * gg.dt - g.value(x)? * gf.dt))
        }
        other => Err(Error::UnsupportedStructure(other.kind_name())),
    }
}

/// The bracket `{f, g}` as a new scalar field with an analytic gradient
/// assembled from the gradients and Hessians of `f` and `g` (Hessians fall
/// back to finite differences of the gradients when not supplied).
pub fn bracket_field(
    s: &GeometricStructure,
    f: &ScalarField,
    g: &ScalarField,
) -> Result<ScalarField> {
    let n = s.dim();
    if f.dim() != n || g.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if f.dim() != n { f.dim() } else { g.dim() },
        });
    }
    if matches!(
        s,
        GeometricStructure::Symplectic { .. } | GeometricStructure::Lcs { .. }
    ) {
        return Err(Error::UnsupportedStructure(s.kind_name()));
    }
    let contact = matches!(s, GeometricStructure::Contact { .. });
    let (sv, fv, gv) = (s.clone(), f.clone(), g.clone());
    let (fg, gg) = (f.clone(), g.clone());
    let value = move |x: &ExtendedPhasePoint| bracket(&sv, &fv, &gv, x);
    let grad = move |x: &ExtendedPhasePoint| {
        let dim = 2 * n + 1;
        let t = 2 * n;
        let grad_f = fg.grad(x)?.to_vec();
        let grad_g = gg.grad(x)?.to_vec();
        let hess_f = fg.hessian(x)?;
        let hess_g = gg.hessian(x)?;
        let mut out = vec![0.0; dim];
        for (a, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                if contact {
                    let lf = grad_f[i] + x.p[i] * grad_f[t];
                    let lg = grad_g[i] + x.p[i] * grad_g[t];
                    let mut dlf = hess_f[(i, a)] + x.p[i] * hess_f[(t, a)];
                    let mut dlg = hess_g[(i, a)] + x.p[i] * hess_g[(t, a)];
                    if a == n + i {
                        dlf += grad_f[t];
                        dlg += grad_g[t];
                    }
                    acc += dlf * grad_g[n + i] + lf * hess_g[(n + i, a)]
                        - hess_f[(n + i, a)] * lg
                        - grad_f[n + i] * dlg;
                } else {
                    acc += hess_f[(i, a)] * grad_g[n + i] + grad_f[i] * hess_g[(n + i, a)]
                        - hess_f[(n + i, a)] * grad_g[i]
                        - grad_f[n + i] * hess_g[(i, a)];
                }
            }
            if contact {
                acc += grad_f[a] * grad_g[t] + fg.value(x)? * hess_g[(t, a)]
                    - grad_g[a] * grad_f[t]
                    - gg.value(x)? * hess_f[(t, a)];
            }
            *slot = acc;
        }
        Ok(crate::scalar_field::FieldGrad {
            dq: out[..n].to_vec(),
            dp: out[n..2 * n].to_vec(),
            dt: out[2 * n],
        })
    };
    Ok(ScalarField::from_parts(n, value, grad))
}

/// Vertical lift of a horizontal one-form `a = sum a_i dq^i`:
/// `a^v = -sum a_i d/dp_i`.
pub fn vertical_lift(a: &OneForm, x: &ExtendedPhasePoint) -> Result<TangentVector> {
    if a.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: a.dim(),
        });
    }
    if a.at != 0.0 || a.ap.iter().any(|c| *c != 0.0) {
        return Err(Error::NonHorizontalForm);
    }
    Ok(TangentVector {
        dq: vec![0.0; x.dim()],
        dp: a.aq.iter().map(|c| -c).collect(),
        dt: 0.0,
    })
}

/// Locally conformally symplectic data in a Darboux chart with `d sigma` as
/// Lee form: the bivector factor `e^{-sigma}` and the vector field
/// `Z = e^{-sigma} (sigma_p d/dq - sigma_q d/dp)`. The `t` slot of `x` is
/// ignored; evaluation only, there are no LCS dynamics here.
pub fn lcs_fields(sigma: &ScalarField, x: &ExtendedPhasePoint) -> Result<(f64, TangentVector)> {
    let factor = (-sigma.value(x)?).exp();
    let g = sigma.grad(x)?;
    let z = TangentVector {
        dq: g.dp.iter().map(|c| factor * c).collect(),
        dp: g.dq.iter().map(|c| -factor * c).collect(),
        dt: 0.0,
    };
    Ok((factor, z))
}
