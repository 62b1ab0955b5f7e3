//! Truncated forward-mode jets.
//!
//! [`Jet1`] carries a value and a gradient, [`Jet2`] additionally carries a
//! symmetric Hessian stored once per unordered index pair. Both, together with
//! plain `f64`, implement [`Scalar`], so numeric pipelines written once against
//! the trait can be lifted to carry first or second derivatives.
//!
//! An empty gradient (or Hessian) vector stands for an all-zero one; this keeps
//! constants cheap and lets constants mix with jets of any dimension.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the expression evaluator and the frame pipeline.
pub trait Scalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    /// Coordinate `index` of `n` with value `v`; plain numbers ignore the seed.
    fn seed(v: f64, index: usize, n: usize) -> Self;
    fn value(&self) -> f64;
    fn scale(&self, c: f64) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn tanh(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn is_finite(&self) -> bool;

    /// Largest magnitude among the derivative entries; zero for plain numbers.
    fn derivative_magnitude(&self) -> f64 {
        0.0
    }

    fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Integer power by repeated squaring; exact sign handling for negative bases.
    fn powi(&self, exp: i64) -> Self {
        let mut result = Self::constant(1.0);
        let mut base = self.clone();
        let mut e = exp.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = result * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        if exp < 0 {
            Self::constant(1.0) / result
        } else {
            result
        }
    }
}

/// Jets that can be differentiated once more, dropping one order.
pub trait Differentiable: Scalar {
    type Lower: Scalar;
    /// The same quantity with the highest order discarded.
    fn lower(&self) -> Self::Lower;
    /// `∂_i` of the quantity, one order lower.
    fn partial(&self, i: usize) -> Self::Lower;
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn seed(v: f64, _index: usize, _n: usize) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn tanh(&self) -> Self {
        f64::tanh(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// Packed index of the unordered pair `(a, b)` in a lower-triangular layout.
#[inline]
pub fn sym_index(a: usize, b: usize) -> usize {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi * (hi + 1) / 2 + lo
}

fn axpy(out: &mut Vec<f64>, alpha: f64, x: &[f64]) {
    if x.is_empty() || alpha == 0.0 {
        return;
    }
    if out.is_empty() {
        out.extend(x.iter().map(|v| alpha * v));
        return;
    }
    debug_assert_eq!(out.len(), x.len(), "jet dimension mismatch");
    for (o, v) in out.iter_mut().zip(x) {
        *o += alpha * v;
    }
}

fn scaled(x: &[f64], alpha: f64) -> Vec<f64> {
    if alpha == 0.0 {
        Vec::new()
    } else {
        x.iter().map(|v| alpha * v).collect()
    }
}

/// Adds `alpha (u_a v_b + v_a u_b)` into a packed Hessian.
fn add_sym_outer(h: &mut Vec<f64>, alpha: f64, u: &[f64], v: &[f64]) {
    if u.is_empty() || v.is_empty() || alpha == 0.0 {
        return;
    }
    let n = u.len();
    if h.is_empty() {
        h.resize(n * (n + 1) / 2, 0.0);
    }
    for a in 0..n {
        for b in 0..=a {
            h[sym_index(a, b)] += alpha * (u[a] * v[b] + v[a] * u[b]);
        }
    }
}

/// Value plus gradient.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Jet1 {
    pub v: f64,
    pub g: Vec<f64>,
}

impl Jet1 {
    pub fn new(v: f64, g: Vec<f64>) -> Self {
        Self { v, g }
    }

    pub fn variable(v: f64, index: usize, n: usize) -> Self {
        let mut g = vec![0.0; n];
        g[index] = 1.0;
        Self { v, g }
    }

    /// Gradient component, treating an empty gradient as zero.
    pub fn d(&self, i: usize) -> f64 {
        self.g.get(i).copied().unwrap_or(0.0)
    }

    fn map(&self, f0: f64, f1: f64) -> Self {
        Self {
            v: f0,
            g: scaled(&self.g, f1),
        }
    }
}

impl Add for Jet1 {
    type Output = Jet1;
    fn add(mut self, rhs: Jet1) -> Jet1 {
        self.v += rhs.v;
        axpy(&mut self.g, 1.0, &rhs.g);
        self
    }
}

impl Sub for Jet1 {
    type Output = Jet1;
    fn sub(mut self, rhs: Jet1) -> Jet1 {
        self.v -= rhs.v;
        axpy(&mut self.g, -1.0, &rhs.g);
        self
    }
}

impl Mul for Jet1 {
    type Output = Jet1;
    fn mul(self, rhs: Jet1) -> Jet1 {
        let mut g = scaled(&rhs.g, self.v);
        axpy(&mut g, rhs.v, &self.g);
        Jet1 {
            v: self.v * rhs.v,
            g,
        }
    }
}

impl Div for Jet1 {
    type Output = Jet1;
    fn div(self, rhs: Jet1) -> Jet1 {
        let inv = 1.0 / rhs.v;
        self * rhs.map(inv, -inv * inv)
    }
}

impl Neg for Jet1 {
    type Output = Jet1;
    fn neg(self) -> Jet1 {
        self.scale(-1.0)
    }
}

impl Scalar for Jet1 {
    fn constant(c: f64) -> Self {
        Self { v: c, g: Vec::new() }
    }
    fn seed(v: f64, index: usize, n: usize) -> Self {
        Self::variable(v, index, n)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn scale(&self, c: f64) -> Self {
        Self {
            v: self.v * c,
            g: scaled(&self.g, c),
        }
    }
    fn sin(&self) -> Self {
        self.map(self.v.sin(), self.v.cos())
    }
    fn cos(&self) -> Self {
        self.map(self.v.cos(), -self.v.sin())
    }
    fn sinh(&self) -> Self {
        self.map(self.v.sinh(), self.v.cosh())
    }
    fn cosh(&self) -> Self {
        self.map(self.v.cosh(), self.v.sinh())
    }
    fn tanh(&self) -> Self {
        let t = self.v.tanh();
        self.map(t, 1.0 - t * t)
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.map(e, e)
    }
    fn ln(&self) -> Self {
        self.map(self.v.ln(), 1.0 / self.v)
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.map(s, 0.5 / s)
    }
    fn is_finite(&self) -> bool {
        self.v.is_finite() && self.g.iter().all(|x| x.is_finite())
    }
    fn derivative_magnitude(&self) -> f64 {
        self.g.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Differentiable for Jet1 {
    type Lower = f64;
    fn lower(&self) -> f64 {
        self.v
    }
    fn partial(&self, i: usize) -> f64 {
        self.d(i)
    }
}

/// Value, gradient and symmetric Hessian.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub g: Vec<f64>,
    /// Packed lower triangle, see [`sym_index`].
    pub h: Vec<f64>,
}

impl Jet2 {
    pub fn variable(v: f64, index: usize, n: usize) -> Self {
        let mut g = vec![0.0; n];
        g[index] = 1.0;
        Self {
            v,
            g,
            h: Vec::new(),
        }
    }

    pub fn d(&self, i: usize) -> f64 {
        self.g.get(i).copied().unwrap_or(0.0)
    }

    pub fn dd(&self, a: usize, b: usize) -> f64 {
        if self.h.is_empty() {
            0.0
        } else {
            self.h[sym_index(a, b)]
        }
    }

    /// Dense gradient of length `n`.
    pub fn gradient(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.d(i)).collect()
    }

    /// Dense Hessian of size `n × n`.
    pub fn hessian(&self, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|a| (0..n).map(|b| self.dd(a, b)).collect())
            .collect()
    }

    /// Chain rule for `f(self)` given `f`, `f'`, `f''` at the value.
    fn map(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut h = scaled(&self.h, f1);
        add_sym_outer(&mut h, 0.5 * f2, &self.g, &self.g);
        Self {
            v: f0,
            g: scaled(&self.g, f1),
            h,
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: Jet2) -> Jet2 {
        self.v += rhs.v;
        axpy(&mut self.g, 1.0, &rhs.g);
        axpy(&mut self.h, 1.0, &rhs.h);
        self
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(mut self, rhs: Jet2) -> Jet2 {
        self.v -= rhs.v;
        axpy(&mut self.g, -1.0, &rhs.g);
        axpy(&mut self.h, -1.0, &rhs.h);
        self
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let mut g = scaled(&rhs.g, self.v);
        axpy(&mut g, rhs.v, &self.g);
        let mut h = scaled(&rhs.h, self.v);
        axpy(&mut h, rhs.v, &self.h);
        add_sym_outer(&mut h, 1.0, &self.g, &rhs.g);
        Jet2 {
            v: self.v * rhs.v,
            g,
            h,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, rhs: Jet2) -> Jet2 {
        let inv = 1.0 / rhs.v;
        self * rhs.map(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Scalar for Jet2 {
    fn constant(c: f64) -> Self {
        Self {
            v: c,
            g: Vec::new(),
            h: Vec::new(),
        }
    }
    fn seed(v: f64, index: usize, n: usize) -> Self {
        Self::variable(v, index, n)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn scale(&self, c: f64) -> Self {
        Self {
            v: self.v * c,
            g: scaled(&self.g, c),
            h: scaled(&self.h, c),
        }
    }
    fn sin(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.map(s, c, -s)
    }
    fn cos(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.map(c, -s, -c)
    }
    fn sinh(&self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.map(s, c, s)
    }
    fn cosh(&self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.map(c, s, c)
    }
    fn tanh(&self) -> Self {
        let t = self.v.tanh();
        let d1 = 1.0 - t * t;
        self.map(t, d1, -2.0 * t * d1)
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.map(e, e, e)
    }
    fn ln(&self) -> Self {
        let inv = 1.0 / self.v;
        self.map(self.v.ln(), inv, -inv * inv)
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.map(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.g.iter().all(|x| x.is_finite())
            && self.h.iter().all(|x| x.is_finite())
    }
    fn derivative_magnitude(&self) -> f64 {
        self.g.iter().chain(&self.h).fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Differentiable for Jet2 {
    type Lower = Jet1;
    fn lower(&self) -> Jet1 {
        Jet1 {
            v: self.v,
            g: self.g.clone(),
        }
    }
    fn partial(&self, i: usize) -> Jet1 {
        let n = self.g.len();
        let g = if self.h.is_empty() {
            Vec::new()
        } else {
            (0..n).map(|b| self.h[sym_index(i, b)]).collect()
        };
        Jet1 { v: self.d(i), g }
    }
}
