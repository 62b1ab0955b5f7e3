use std::collections::BTreeMap;

use super::ast::{BinaryOp, Expr, UnaryOp};
use crate::error::ExprError;
use crate::jet::{Jet2, Scalar};

/// Named parameter bindings.
pub type Params = BTreeMap<String, f64>;

/// Integer exponents up to this magnitude are expanded as repeated products.
const MAX_INTEGER_EXPONENT: f64 = 64.0;

fn domain(e: &Expr, message: impl Into<String>) -> ExprError {
    ExprError::Domain {
        expr: e.to_string(),
        message: message.into(),
    }
}

impl Expr {
    /// Evaluates the tree with coordinate values `vars`.
    ///
    /// Domain violations (log or sqrt of a negative value, division by zero,
    /// any non-finite intermediate) are reported eagerly with the offending
    /// subexpression.
    pub fn eval<S: Scalar>(&self, vars: &[S], params: &Params) -> Result<S, ExprError> {
        let out = match self {
            Expr::Number(v) => S::constant(*v),
            Expr::Var { index, name } => vars
                .get(*index)
                .cloned()
                .ok_or_else(|| ExprError::UnknownSymbol(name.clone()))?,
            Expr::Param(name) => S::constant(
                *params
                    .get(name)
                    .ok_or_else(|| ExprError::UnknownSymbol(name.clone()))?,
            ),
            Expr::Unary(op, a) => {
                let x = a.eval(vars, params)?;
                match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Sinh => x.sinh(),
                    UnaryOp::Cosh => x.cosh(),
                    UnaryOp::Tanh => x.tanh(),
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Log => {
                        if x.value() <= 0.0 {
                            return Err(domain(self, format!("log of non-positive value {}", x.value())));
                        }
                        x.ln()
                    }
                    UnaryOp::Sqrt => {
                        if x.value() < 0.0 {
                            return Err(domain(self, format!("sqrt of negative value {}", x.value())));
                        }
                        x.sqrt()
                    }
                }
            }
            Expr::Binary(op, a, b) => match op {
                BinaryOp::Add => a.eval(vars, params)? + b.eval(vars, params)?,
                BinaryOp::Sub => a.eval(vars, params)? - b.eval(vars, params)?,
                BinaryOp::Mul => a.eval(vars, params)? * b.eval(vars, params)?,
                BinaryOp::Div => {
                    let den = b.eval(vars, params)?;
                    if den.value() == 0.0 {
                        return Err(domain(self, "division by zero"));
                    }
                    a.eval(vars, params)? / den
                }
                BinaryOp::Pow => self.eval_pow(a, b, vars, params)?,
            },
        };
        if !out.is_finite() {
            return Err(domain(self, "non-finite result"));
        }
        Ok(out)
    }

    fn eval_pow<S: Scalar>(&self, base: &Expr, exponent: &Expr, vars: &[S], params: &Params) -> Result<S, ExprError> {
        let a = base.eval(vars, params)?;
        if exponent.is_coordinate_free() {
            let p: f64 = exponent.eval(&[], params)?;
            if p.fract() == 0.0 && p.abs() <= MAX_INTEGER_EXPONENT {
                if p < 0.0 && a.value() == 0.0 {
                    return Err(domain(self, "zero raised to a negative power"));
                }
                return Ok(a.powi(p as i64));
            }
        }
        if a.value() <= 0.0 {
            return Err(domain(self, format!("non-integer power of non-positive base {}", a.value())));
        }
        let b = exponent.eval(vars, params)?;
        Ok((b * a.ln()).exp())
    }
}

/// Plain value at `point`.
pub fn eval_value(e: &Expr, point: &[f64], params: &Params) -> Result<f64, ExprError> {
    e.eval(point, params)
}

/// Value, gradient and Hessian at `point`.
pub fn eval_jet2(e: &Expr, point: &[f64], params: &Params) -> Result<Jet2, ExprError> {
    let n = point.len();
    let vars: Vec<Jet2> = point
        .iter()
        .enumerate()
        .map(|(i, &x)| Jet2::variable(x, i, n))
        .collect();
    e.eval(&vars, params)
}

/// Central-difference gradient and Hessian, O(step²) accurate.
///
/// Evaluates only plain values, so it is independent of the jet arithmetic.
pub fn finite_difference_oracle(
    e: &Expr,
    point: &[f64],
    params: &Params,
    step: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), ExprError> {
    assert!(step > 0.0, "finite-difference step must be positive");
    let n = point.len();
    let at = |shifts: &[(usize, f64)]| -> Result<f64, ExprError> {
        let mut x = point.to_vec();
        for &(i, d) in shifts {
            x[i] += d;
        }
        eval_value(e, &x, params)
    };
    let f0 = at(&[])?;
    let mut grad = vec![0.0; n];
    let mut hess = vec![vec![0.0; n]; n];
    for a in 0..n {
        let fp = at(&[(a, step)])?;
        let fm = at(&[(a, -step)])?;
        grad[a] = (fp - fm) / (2.0 * step);
        hess[a][a] = (fp - 2.0 * f0 + fm) / (step * step);
        for b in 0..a {
            let fpp = at(&[(a, step), (b, step)])?;
            let fpm = at(&[(a, step), (b, -step)])?;
            let fmp = at(&[(a, -step), (b, step)])?;
            let fmm = at(&[(a, -step), (b, -step)])?;
            let h = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
            hess[a][b] = h;
            hess[b][a] = h;
        }
    }
    Ok((grad, hess))
}
