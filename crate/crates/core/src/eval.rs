//! Batch expression evaluation and exact parameter Jacobians.
//!
//! Evaluation walks the preorder node sequence once per call and operates on
//! whole columns of the dataset, so tree-traversal overhead is amortized over
//! all observations. Differentiation is forward-mode with respect to the
//! fitting parameters only; each buffer carries the value lane plus one lane
//! per parameter. Non-finite values propagate under IEEE semantics and are
//! the caller's problem (the fitter treats them as failed candidates).

use crate::data::FeatureMatrix;
use crate::expr::{BinaryOp, Expression, Node, UnaryOp};

/// Row-major view of an m×p Jacobian, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBatch {
    data: Vec<f64>,
    m: usize,
    p: usize,
}

impl JacobianBatch {
    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.p
    }

    /// Column j: derivatives of all predictions with respect to parameter j.
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.m + i]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Evaluates `expr` at parameter vector `theta` over every row of `x`.
pub fn evaluate(expr: &Expression, theta: &[f64], x: &FeatureMatrix) -> Vec<f64> {
    let mut scratch = EvalScratch::new();
    scratch.evaluate(expr, theta, x)
}

/// Evaluates predictions and the m×p Jacobian ∂f(x_i, θ)/∂θ_j in one pass.
pub fn evaluate_with_jacobian(
    expr: &Expression,
    theta: &[f64],
    x: &FeatureMatrix,
) -> (Vec<f64>, JacobianBatch) {
    let mut scratch = EvalScratch::new();
    scratch.evaluate_with_jacobian(expr, theta, x)
}

pub fn jacobian(expr: &Expression, theta: &[f64], x: &FeatureMatrix) -> JacobianBatch {
    evaluate_with_jacobian(expr, theta, x).1
}

/// Reusable buffers; the fitter keeps one of these across its iterations to
/// avoid reallocating per candidate step.
pub(crate) struct EvalScratch {
    pool: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    tmp2: Vec<f64>,
}

impl EvalScratch {
    pub fn new() -> Self {
        Self {
            pool: Vec::new(),
            tmp: Vec::new(),
            tmp2: Vec::new(),
        }
    }

    fn take(&mut self, len: usize) -> Vec<f64> {
        match self.pool.pop() {
            Some(mut buf) => {
                buf.clear();
                buf.resize(len, 0.0);
                buf
            }
            None => vec![0.0; len],
        }
    }

    fn give(&mut self, buf: Vec<f64>) {
        self.pool.push(buf);
    }

    pub fn evaluate(&mut self, expr: &Expression, theta: &[f64], x: &FeatureMatrix) -> Vec<f64> {
        debug_assert!(expr.max_variable().map_or(0, |v| v + 1) <= x.cols());
        let mut cursor = 0;
        let out = self.value_rec(expr.nodes(), &mut cursor, theta, x);
        debug_assert_eq!(cursor, expr.len());
        out
    }

    pub fn evaluate_with_jacobian(
        &mut self,
        expr: &Expression,
        theta: &[f64],
        x: &FeatureMatrix,
    ) -> (Vec<f64>, JacobianBatch) {
        debug_assert!(expr.max_variable().map_or(0, |v| v + 1) <= x.cols());
        let m = x.rows();
        let p = theta.len();
        let mut cursor = 0;
        let buf = self.dual_rec(expr.nodes(), &mut cursor, theta, x, m, p);
        debug_assert_eq!(cursor, expr.len());
        let values = buf[..m].to_vec();
        let data = buf[m..].to_vec();
        self.give(buf);
        (values, JacobianBatch { data, m, p })
    }

    fn value_rec(
        &mut self,
        nodes: &[Node],
        cursor: &mut usize,
        theta: &[f64],
        x: &FeatureMatrix,
    ) -> Vec<f64> {
        let node = nodes[*cursor];
        *cursor += 1;
        let m = x.rows();
        match node {
            Node::Variable(j) => x.col(j).to_vec(),
            Node::Parameter(s) => vec![theta[s]; m],
            Node::IntConstant(c) => vec![c as f64; m],
            Node::Unary(op) => {
                let mut a = self.value_rec(nodes, cursor, theta, x);
                for v in &mut a {
                    *v = unary_value(op, *v);
                }
                a
            }
            Node::Binary(op) => {
                let mut a = self.value_rec(nodes, cursor, theta, x);
                let b = self.value_rec(nodes, cursor, theta, x);
                for (av, bv) in a.iter_mut().zip(&b) {
                    *av = binary_value(op, *av, *bv);
                }
                self.give(b);
                a
            }
        }
    }

    // Dual buffers hold m values followed by p gradient lanes of m entries.
    fn dual_rec(
        &mut self,
        nodes: &[Node],
        cursor: &mut usize,
        theta: &[f64],
        x: &FeatureMatrix,
        m: usize,
        p: usize,
    ) -> Vec<f64> {
        let node = nodes[*cursor];
        *cursor += 1;
        match node {
            Node::Variable(j) => {
                let mut buf = self.take((p + 1) * m);
                buf[..m].copy_from_slice(x.col(j));
                buf
            }
            Node::Parameter(s) => {
                let mut buf = self.take((p + 1) * m);
                buf[..m].fill(theta[s]);
                buf[(s + 1) * m..(s + 2) * m].fill(1.0);
                buf
            }
            Node::IntConstant(c) => {
                let mut buf = self.take((p + 1) * m);
                buf[..m].fill(c as f64);
                buf
            }
            Node::Unary(op) => {
                let mut a = self.dual_rec(nodes, cursor, theta, x, m, p);
                self.apply_unary_dual(op, &mut a, m, p);
                a
            }
            Node::Binary(op) => {
                let mut a = self.dual_rec(nodes, cursor, theta, x, m, p);
                let b = self.dual_rec(nodes, cursor, theta, x, m, p);
                self.apply_binary_dual(op, &mut a, &b, m, p);
                self.give(b);
                a
            }
        }
    }

    fn apply_unary_dual(&mut self, op: UnaryOp, a: &mut [f64], m: usize, p: usize) {
        let scale = &mut self.tmp;
        scale.clear();
        scale.resize(m, 0.0);
        // Derivative scale from the current values, then values in place.
        match op {
            UnaryOp::Square => {
                for i in 0..m {
                    scale[i] = 2.0 * a[i];
                    a[i] *= a[i];
                }
            }
            UnaryOp::Sin => {
                for i in 0..m {
                    scale[i] = a[i].cos();
                    a[i] = a[i].sin();
                }
            }
            UnaryOp::Cos => {
                for i in 0..m {
                    scale[i] = -a[i].sin();
                    a[i] = a[i].cos();
                }
            }
            UnaryOp::Exp => {
                for i in 0..m {
                    a[i] = a[i].exp();
                    scale[i] = a[i];
                }
            }
            UnaryOp::LogAbs => {
                for i in 0..m {
                    scale[i] = 1.0 / a[i];
                    a[i] = a[i].abs().ln();
                }
            }
            UnaryOp::SqrtAbs => {
                for i in 0..m {
                    let s = a[i].abs().sqrt();
                    scale[i] = a[i].signum() / (2.0 * s);
                    a[i] = s;
                }
            }
        }
        for j in 1..=p {
            let lane = &mut a[j * m..(j + 1) * m];
            for i in 0..m {
                lane[i] *= scale[i];
            }
        }
    }

    fn apply_binary_dual(&mut self, op: BinaryOp, a: &mut [f64], b: &[f64], m: usize, p: usize) {
        match op {
            BinaryOp::Add => {
                for i in 0..(p + 1) * m {
                    a[i] += b[i];
                }
            }
            BinaryOp::Sub => {
                for i in 0..(p + 1) * m {
                    a[i] -= b[i];
                }
            }
            BinaryOp::Mul => {
                for j in 1..=p {
                    for i in 0..m {
                        let idx = j * m + i;
                        a[idx] = a[idx] * b[i] + a[i] * b[idx];
                    }
                }
                for i in 0..m {
                    a[i] *= b[i];
                }
            }
            BinaryOp::Div => {
                for j in 1..=p {
                    for i in 0..m {
                        let idx = j * m + i;
                        a[idx] = (a[idx] * b[i] - a[i] * b[idx]) / (b[i] * b[i]);
                    }
                }
                for i in 0..m {
                    a[i] /= b[i];
                }
            }
            BinaryOp::PowAbs => {
                // d|a|^b = b·|a|^{b-1}·sign(a)·da + |a|^b·ln|a|·db
                let (da, db) = (&mut self.tmp, &mut self.tmp2);
                da.clear();
                da.resize(m, 0.0);
                db.clear();
                db.resize(m, 0.0);
                for i in 0..m {
                    let av = a[i];
                    let bv = b[i];
                    let val = av.abs().powf(bv);
                    da[i] = bv * val / av; // == b·|a|^{b-1}·sign(a) for a ≠ 0
                    db[i] = val * av.abs().ln();
                    a[i] = val;
                }
                for j in 1..=p {
                    for i in 0..m {
                        let idx = j * m + i;
                        a[idx] = da[i] * a[idx] + db[i] * b[idx];
                    }
                }
            }
        }
    }
}

fn unary_value(op: UnaryOp, v: f64) -> f64 {
    match op {
        UnaryOp::Square => v * v,
        UnaryOp::Sin => v.sin(),
        UnaryOp::Cos => v.cos(),
        UnaryOp::Exp => v.exp(),
        UnaryOp::LogAbs => v.abs().ln(),
        UnaryOp::SqrtAbs => v.abs().sqrt(),
    }
}

fn binary_value(op: BinaryOp, a: f64, b: f64) -> f64 {
    match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => a / b,
        BinaryOp::PowAbs => a.abs().powf(b),
    }
}
