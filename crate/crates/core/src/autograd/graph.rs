use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use super::mat::{gemm, GemmView, Mat};

const GELU_K: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_C: f64 = 0.044_715;

#[derive(Debug, Clone, Copy)]
enum Unary {
    Sigmoid,
    Gelu,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Relu,
    Softplus,
    Powi(i32),
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Transpose(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    AddRow(usize, usize),
    MulRow(usize, usize),
    /// `scale * x + offset`
    Affine(usize, f64),
    Unary(usize, Unary),
    /// `atan2(y, x)`
    Atan2(usize, usize),
    Softmax(usize),
    LayerNorm(usize, Vec<f64>),
    SliceCols(usize, usize),
    SliceRows(usize, usize),
    ConcatCols(Vec<usize>),
    ConcatRows(Vec<usize>),
    MeanRows(usize),
    Sum(usize),
    Index(usize, usize, usize),
}

struct Node {
    value: Arc<Mat>,
    op: Op,
}

/// Reverse-mode tape. Every operation on a [`Var`] evaluates eagerly and
/// records itself; [`Graph::backward`] walks the tape once in reverse.
pub struct Graph {
    nodes: RefCell<Vec<Node>>,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

/// Handle to a value recorded on a [`Graph`].
#[derive(Clone, Copy)]
pub struct Var<'g> {
    g: &'g Graph,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = self.value();
        write!(f, "Var#{}({}x{})", self.id, v.rows, v.cols)
    }
}

pub struct Gradients {
    grads: Vec<Option<Mat>>,
}

impl Gradients {
    pub fn get(&self, v: Var<'_>) -> Option<&Mat> {
        self.grads.get(v.id).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`, or zeros of the given shape when `v` did not
    /// influence the root.
    pub fn get_or_zeros(&self, v: Var<'_>) -> Mat {
        match self.get(v) {
            Some(g) => g.clone(),
            None => {
                let (r, c) = v.shape();
                Mat::zeros(r, c)
            }
        }
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            nodes: RefCell::new(Vec::with_capacity(1024)),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Mat, op: Op) -> Var<'_> {
        self.push_arc(Arc::new(value), op)
    }

    fn push_arc(&self, value: Arc<Mat>, op: Op) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op });
        Var {
            g: self,
            id: nodes.len() - 1,
        }
    }

    fn value(&self, id: usize) -> Arc<Mat> {
        self.nodes.borrow()[id].value.clone()
    }

    /// Leaf sharing storage with the caller (parameters).
    pub fn leaf(&self, value: Arc<Mat>) -> Var<'_> {
        self.push_arc(value, Op::Leaf)
    }

    pub fn constant(&self, value: Mat) -> Var<'_> {
        self.push(value, Op::Leaf)
    }

    pub fn scalar(&self, v: f64) -> Var<'_> {
        self.constant(Mat::scalar(v))
    }

    pub fn concat_cols<'g>(&'g self, parts: &[Var<'g>]) -> Var<'g> {
        assert!(!parts.is_empty());
        let vals: Vec<Arc<Mat>> = parts.iter().map(|p| p.value()).collect();
        let rows = vals[0].rows;
        assert!(vals.iter().all(|v| v.rows == rows), "concat_cols row mismatch");
        let cols: usize = vals.iter().map(|v| v.cols).sum();
        let mut out = Mat::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for v in &vals {
                out.row_mut(r)[off..off + v.cols].copy_from_slice(v.row(r));
                off += v.cols;
            }
        }
        self.push(out, Op::ConcatCols(parts.iter().map(|p| p.id).collect()))
    }

    pub fn concat_rows<'g>(&'g self, parts: &[Var<'g>]) -> Var<'g> {
        assert!(!parts.is_empty());
        let vals: Vec<Arc<Mat>> = parts.iter().map(|p| p.value()).collect();
        let cols = vals[0].cols;
        assert!(vals.iter().all(|v| v.cols == cols), "concat_rows col mismatch");
        let rows: usize = vals.iter().map(|v| v.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for v in &vals {
            data.extend_from_slice(&v.data);
        }
        self.push(
            Mat::from_vec(rows, cols, data),
            Op::ConcatRows(parts.iter().map(|p| p.id).collect()),
        )
    }

    /// Gradients of the scalar `root` with respect to every recorded node.
    pub fn backward(&self, root: Var<'_>) -> Gradients {
        assert!(std::ptr::eq(root.g, self), "root belongs to another graph");
        let nodes = self.nodes.borrow();
        let mut grads: Vec<Option<Mat>> = (0..nodes.len()).map(|_| None).collect();
        let rv = &nodes[root.id].value;
        grads[root.id] = Some(Mat::from_vec(rv.rows, rv.cols, vec![1.0; rv.len()]));

        for id in (0..=root.id).rev() {
            let Some(gy) = grads[id].take() else { continue };
            let node = &nodes[id];
            let y = &node.value;
            match &node.op {
                Op::Leaf => {
                    grads[id] = Some(gy);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let av = &nodes[*a].value;
                    let bv = &nodes[*b].value;
                    let mut ga = Mat::zeros(av.rows, av.cols);
                    gemm(GemmView::normal(&gy), GemmView::transposed(bv), &mut ga, 0.0);
                    let mut gb = Mat::zeros(bv.rows, bv.cols);
                    gemm(GemmView::transposed(av), GemmView::normal(&gy), &mut gb, 0.0);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Transpose(a) => accumulate(&mut grads, *a, gy.transpose()),
                Op::Add(a, b) => {
                    accumulate(&mut grads, *b, gy.clone());
                    accumulate(&mut grads, *a, gy);
                }
                Op::Sub(a, b) => {
                    let mut gb = gy.clone();
                    gb.scale(-1.0);
                    accumulate(&mut grads, *b, gb);
                    accumulate(&mut grads, *a, gy);
                }
                Op::Mul(a, b) => {
                    let av = &nodes[*a].value;
                    let bv = &nodes[*b].value;
                    let ga = zip_map(&gy, bv, |g, b| g * b);
                    let gb = zip_map(&gy, av, |g, a| g * a);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Div(a, b) => {
                    let bv = &nodes[*b].value;
                    let ga = zip_map(&gy, bv, |g, b| g / b);
                    let mut gb = zip_map(&gy, y, |g, y| -g * y);
                    for (v, b) in gb.data.iter_mut().zip(&bv.data) {
                        *v /= b;
                    }
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::AddRow(a, b) => {
                    let mut gb = Mat::zeros(1, gy.cols);
                    for r in 0..gy.rows {
                        for (s, g) in gb.data.iter_mut().zip(gy.row(r)) {
                            *s += g;
                        }
                    }
                    accumulate(&mut grads, *b, gb);
                    accumulate(&mut grads, *a, gy);
                }
                Op::MulRow(a, b) => {
                    let av = &nodes[*a].value;
                    let bv = &nodes[*b].value;
                    let mut ga = gy.clone();
                    let mut gb = Mat::zeros(1, gy.cols);
                    for r in 0..gy.rows {
                        let gr = gy.row(r);
                        let ar = av.row(r);
                        for c in 0..gy.cols {
                            gb.data[c] += gr[c] * ar[c];
                        }
                        for (g, b) in ga.row_mut(r).iter_mut().zip(&bv.data) {
                            *g *= b;
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Affine(a, scale) => {
                    let mut ga = gy;
                    ga.scale(*scale);
                    accumulate(&mut grads, *a, ga);
                }
                Op::Unary(a, f) => {
                    let xv = &nodes[*a].value;
                    let mut ga = gy;
                    for ((g, &x), &yv) in ga.data.iter_mut().zip(&xv.data).zip(&y.data) {
                        *g *= unary_derivative(*f, x, yv);
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::Atan2(yi, xi) => {
                    let yv = &nodes[*yi].value;
                    let xv = &nodes[*xi].value;
                    let mut gyi = gy.clone();
                    let mut gxi = gy;
                    for i in 0..gyi.data.len() {
                        let (yy, xx) = (yv.data[i], xv.data[i]);
                        let r2 = xx * xx + yy * yy;
                        if r2 == 0.0 {
                            gyi.data[i] = 0.0;
                            gxi.data[i] = 0.0;
                        } else {
                            gyi.data[i] *= xx / r2;
                            gxi.data[i] *= -yy / r2;
                        }
                    }
                    accumulate(&mut grads, *yi, gyi);
                    accumulate(&mut grads, *xi, gxi);
                }
                Op::Softmax(a) => {
                    let mut ga = gy;
                    for r in 0..ga.rows {
                        let yr = y.row(r);
                        let gr = ga.row_mut(r);
                        let dot: f64 = gr.iter().zip(yr).map(|(g, y)| g * y).sum();
                        for (g, &yv) in gr.iter_mut().zip(yr) {
                            *g = yv * (*g - dot);
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::LayerNorm(a, inv_std) => {
                    let n = y.cols as f64;
                    let mut ga = gy;
                    for r in 0..ga.rows {
                        let yr = y.row(r);
                        let gr = ga.row_mut(r);
                        let sum_g: f64 = gr.iter().sum();
                        let sum_gy: f64 = gr.iter().zip(yr).map(|(g, y)| g * y).sum();
                        for (g, &yv) in gr.iter_mut().zip(yr) {
                            *g = inv_std[r] * (*g - sum_g / n - yv * sum_gy / n);
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::SliceCols(a, start) => {
                    let av = &nodes[*a].value;
                    let mut ga = Mat::zeros(av.rows, av.cols);
                    for r in 0..gy.rows {
                        ga.row_mut(r)[*start..*start + gy.cols].copy_from_slice(gy.row(r));
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::SliceRows(a, start) => {
                    let av = &nodes[*a].value;
                    let mut ga = Mat::zeros(av.rows, av.cols);
                    let off = start * av.cols;
                    ga.data[off..off + gy.data.len()].copy_from_slice(&gy.data);
                    accumulate(&mut grads, *a, ga);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let pc = nodes[p].value.cols;
                        let mut gp = Mat::zeros(gy.rows, pc);
                        for r in 0..gy.rows {
                            gp.row_mut(r).copy_from_slice(&gy.row(r)[off..off + pc]);
                        }
                        off += pc;
                        accumulate(&mut grads, p, gp);
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let pv = &nodes[p].value;
                        let len = pv.len();
                        let gp = Mat::from_vec(pv.rows, pv.cols, gy.data[off..off + len].to_vec());
                        off += len;
                        accumulate(&mut grads, p, gp);
                    }
                }
                Op::MeanRows(a) => {
                    let av = &nodes[*a].value;
                    let inv = 1.0 / av.rows as f64;
                    let mut ga = Mat::zeros(av.rows, av.cols);
                    for r in 0..av.rows {
                        for (g, s) in ga.row_mut(r).iter_mut().zip(&gy.data) {
                            *g = s * inv;
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::Sum(a) => {
                    let av = &nodes[*a].value;
                    let ga = Mat::from_vec(av.rows, av.cols, vec![gy.data[0]; av.len()]);
                    accumulate(&mut grads, *a, ga);
                }
                Op::Index(a, r, c) => {
                    let av = &nodes[*a].value;
                    let mut ga = Mat::zeros(av.rows, av.cols);
                    ga.set(*r, *c, gy.data[0]);
                    accumulate(&mut grads, *a, ga);
                }
            }
        }
        Gradients { grads }
    }
}

fn accumulate(grads: &mut [Option<Mat>], id: usize, g: Mat) {
    match &mut grads[id] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn zip_map(a: &Mat, b: &Mat, f: impl Fn(f64, f64) -> f64) -> Mat {
    debug_assert_eq!(a.shape(), b.shape());
    Mat::from_vec(
        a.rows,
        a.cols,
        a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    )
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_K * (x + GELU_C * x * x * x)).tanh())
}

fn unary_apply(f: Unary, x: f64) -> f64 {
    match f {
        Unary::Sigmoid => sigmoid(x),
        Unary::Gelu => gelu(x),
        Unary::Sin => x.sin(),
        Unary::Cos => x.cos(),
        Unary::Exp => x.exp(),
        Unary::Ln => x.ln(),
        Unary::Sqrt => x.sqrt(),
        Unary::Abs => x.abs(),
        Unary::Relu => x.max(0.0),
        Unary::Softplus => softplus(x),
        Unary::Powi(n) => x.powi(n),
    }
}

fn unary_derivative(f: Unary, x: f64, y: f64) -> f64 {
    match f {
        Unary::Sigmoid => y * (1.0 - y),
        Unary::Gelu => {
            let t = (GELU_K * (x + GELU_C * x * x * x)).tanh();
            0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_K * (1.0 + 3.0 * GELU_C * x * x)
        }
        Unary::Sin => x.cos(),
        Unary::Cos => -x.sin(),
        Unary::Exp => y,
        Unary::Ln => 1.0 / x,
        Unary::Sqrt => {
            if y == 0.0 {
                0.0
            } else {
                0.5 / y
            }
        }
        Unary::Abs => {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        Unary::Relu => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Unary::Softplus => sigmoid(x),
        Unary::Powi(n) => n as f64 * x.powi(n - 1),
    }
}

fn map(m: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    Mat::from_vec(m.rows, m.cols, m.data.iter().map(|&v| f(v)).collect())
}

impl<'g> Var<'g> {
    pub fn graph(&self) -> &'g Graph {
        self.g
    }

    pub fn value(&self) -> Arc<Mat> {
        self.g.value(self.id)
    }

    pub fn shape(&self) -> (usize, usize) {
        let nodes = self.g.nodes.borrow();
        nodes[self.id].value.shape()
    }

    /// Value of a 1×1 variable.
    pub fn item(&self) -> f64 {
        let nodes = self.g.nodes.borrow();
        let v = &nodes[self.id].value;
        debug_assert_eq!(v.len(), 1, "item() on a non-scalar");
        v.data[0]
    }

    fn same_graph(&self, other: &Var<'g>) {
        debug_assert!(std::ptr::eq(self.g, other.g), "vars from different graphs");
    }

    fn unary(self, f: Unary) -> Var<'g> {
        let out = map(&self.value(), |x| unary_apply(f, x));
        self.g.push(out, Op::Unary(self.id, f))
    }

    fn binary(self, other: Var<'g>, f: impl Fn(f64, f64) -> f64, op: Op) -> Var<'g> {
        self.same_graph(&other);
        let (a, b) = (self.value(), other.value());
        assert_eq!(a.shape(), b.shape(), "elementwise shape mismatch");
        self.g.push(zip_map(&a, &b, f), op)
    }

    pub fn matmul(self, other: Var<'g>) -> Var<'g> {
        self.same_graph(&other);
        let out = self.value().matmul(&other.value());
        self.g.push(out, Op::MatMul(self.id, other.id))
    }

    pub fn t(self) -> Var<'g> {
        let out = self.value().transpose();
        self.g.push(out, Op::Transpose(self.id))
    }

    /// Adds a `1×cols` row vector to every row.
    pub fn add_row(self, row: Var<'g>) -> Var<'g> {
        self.same_graph(&row);
        let (a, b) = (self.value(), row.value());
        assert_eq!(b.rows, 1);
        assert_eq!(a.cols, b.cols);
        let mut out = (*a).clone();
        for r in 0..out.rows {
            for (v, bb) in out.row_mut(r).iter_mut().zip(&b.data) {
                *v += bb;
            }
        }
        self.g.push(out, Op::AddRow(self.id, row.id))
    }

    /// Multiplies every row elementwise by a `1×cols` row vector.
    pub fn mul_row(self, row: Var<'g>) -> Var<'g> {
        self.same_graph(&row);
        let (a, b) = (self.value(), row.value());
        assert_eq!(b.rows, 1);
        assert_eq!(a.cols, b.cols);
        let mut out = (*a).clone();
        for r in 0..out.rows {
            for (v, bb) in out.row_mut(r).iter_mut().zip(&b.data) {
                *v *= bb;
            }
        }
        self.g.push(out, Op::MulRow(self.id, row.id))
    }

    pub fn affine(self, scale: f64, offset: f64) -> Var<'g> {
        let out = map(&self.value(), |x| scale * x + offset);
        self.g.push(out, Op::Affine(self.id, scale))
    }

    pub fn sigmoid(self) -> Var<'g> {
        self.unary(Unary::Sigmoid)
    }

    pub fn gelu(self) -> Var<'g> {
        self.unary(Unary::Gelu)
    }

    pub fn sin(self) -> Var<'g> {
        self.unary(Unary::Sin)
    }

    pub fn cos(self) -> Var<'g> {
        self.unary(Unary::Cos)
    }

    pub fn exp(self) -> Var<'g> {
        self.unary(Unary::Exp)
    }

    pub fn ln(self) -> Var<'g> {
        self.unary(Unary::Ln)
    }

    pub fn sqrt(self) -> Var<'g> {
        self.unary(Unary::Sqrt)
    }

    pub fn abs(self) -> Var<'g> {
        self.unary(Unary::Abs)
    }

    pub fn relu(self) -> Var<'g> {
        self.unary(Unary::Relu)
    }

    pub fn softplus(self) -> Var<'g> {
        self.unary(Unary::Softplus)
    }

    pub fn powi(self, n: i32) -> Var<'g> {
        self.unary(Unary::Powi(n))
    }

    /// Elementwise `atan2(self, x)`.
    pub fn atan2(self, x: Var<'g>) -> Var<'g> {
        self.binary(x, f64::atan2, Op::Atan2(self.id, x.id))
    }

    /// Row-wise softmax. With `causal`, entry `(i, j)` for `j > i` is masked out.
    pub fn softmax_rows(self, causal: bool) -> Var<'g> {
        let x = self.value();
        let mut out = Mat::zeros(x.rows, x.cols);
        for r in 0..x.rows {
            let limit = if causal { (r + 1).min(x.cols) } else { x.cols };
            let row = &x.row(r)[..limit];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let o = &mut out.row_mut(r)[..limit];
            let mut sum = 0.0;
            for (ov, &v) in o.iter_mut().zip(row) {
                *ov = (v - max).exp();
                sum += *ov;
            }
            o.iter_mut().for_each(|v| *v /= sum);
        }
        self.g.push(out, Op::Softmax(self.id))
    }

    /// Row-wise standardization without affine parameters.
    pub fn layer_norm(self, eps: f64) -> Var<'g> {
        let x = self.value();
        let n = x.cols as f64;
        let mut out = Mat::zeros(x.rows, x.cols);
        let mut inv_std = Vec::with_capacity(x.rows);
        for r in 0..x.rows {
            let row = x.row(r);
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let inv = 1.0 / (var + eps).sqrt();
            for (o, v) in out.row_mut(r).iter_mut().zip(row) {
                *o = (v - mean) * inv;
            }
            inv_std.push(inv);
        }
        self.g.push(out, Op::LayerNorm(self.id, inv_std))
    }

    pub fn slice_cols(self, start: usize, len: usize) -> Var<'g> {
        let x = self.value();
        assert!(start + len <= x.cols);
        let mut out = Mat::zeros(x.rows, len);
        for r in 0..x.rows {
            out.row_mut(r).copy_from_slice(&x.row(r)[start..start + len]);
        }
        self.g.push(out, Op::SliceCols(self.id, start))
    }

    pub fn slice_rows(self, start: usize, len: usize) -> Var<'g> {
        let x = self.value();
        assert!(start + len <= x.rows);
        let out = Mat::from_vec(
            len,
            x.cols,
            x.data[start * x.cols..(start + len) * x.cols].to_vec(),
        );
        self.g.push(out, Op::SliceRows(self.id, start))
    }

    /// Column means as a `1×cols` row.
    pub fn mean_rows(self) -> Var<'g> {
        let x = self.value();
        let mut out = Mat::zeros(1, x.cols);
        for r in 0..x.rows {
            for (o, v) in out.data.iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        out.scale(1.0 / x.rows as f64);
        self.g.push(out, Op::MeanRows(self.id))
    }

    pub fn sum(self) -> Var<'g> {
        let s = self.value().data.iter().sum();
        self.g.push(Mat::scalar(s), Op::Sum(self.id))
    }

    pub fn mean(self) -> Var<'g> {
        let n = self.value().len() as f64;
        self.sum().affine(1.0 / n, 0.0)
    }

    pub fn at(self, r: usize, c: usize) -> Var<'g> {
        let v = self.value().get(r, c);
        self.g.push(Mat::scalar(v), Op::Index(self.id, r, c))
    }
}

impl<'g> Add for Var<'g> {
    type Output = Var<'g>;
    fn add(self, rhs: Var<'g>) -> Var<'g> {
        self.binary(rhs, |a, b| a + b, Op::Add(self.id, rhs.id))
    }
}

impl<'g> Sub for Var<'g> {
    type Output = Var<'g>;
    fn sub(self, rhs: Var<'g>) -> Var<'g> {
        self.binary(rhs, |a, b| a - b, Op::Sub(self.id, rhs.id))
    }
}

impl<'g> Mul for Var<'g> {
    type Output = Var<'g>;
    fn mul(self, rhs: Var<'g>) -> Var<'g> {
        self.binary(rhs, |a, b| a * b, Op::Mul(self.id, rhs.id))
    }
}

impl<'g> Div for Var<'g> {
    type Output = Var<'g>;
    fn div(self, rhs: Var<'g>) -> Var<'g> {
        self.binary(rhs, |a, b| a / b, Op::Div(self.id, rhs.id))
    }
}

impl<'g> Neg for Var<'g> {
    type Output = Var<'g>;
    fn neg(self) -> Var<'g> {
        self.affine(-1.0, 0.0)
    }
}

impl<'g> Add<f64> for Var<'g> {
    type Output = Var<'g>;
    fn add(self, rhs: f64) -> Var<'g> {
        self.affine(1.0, rhs)
    }
}

impl<'g> Sub<f64> for Var<'g> {
    type Output = Var<'g>;
    fn sub(self, rhs: f64) -> Var<'g> {
        self.affine(1.0, -rhs)
    }
}

impl<'g> Mul<f64> for Var<'g> {
    type Output = Var<'g>;
    fn mul(self, rhs: f64) -> Var<'g> {
        self.affine(rhs, 0.0)
    }
}

impl<'g> Div<f64> for Var<'g> {
    type Output = Var<'g>;
    fn div(self, rhs: f64) -> Var<'g> {
        self.affine(1.0 / rhs, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central-difference check of `f` at `x0` against the tape gradient.
    fn check(x0: Mat, f: impl for<'g> Fn(Var<'g>) -> Var<'g>) {
        let g = Graph::new();
        let x = g.constant(x0.clone());
        let y = f(x);
        let grads = g.backward(y);
        let analytic = grads.get_or_zeros(x);
        let h = 1e-6;
        for i in 0..x0.len() {
            let eval = |delta: f64| {
                let mut xp = x0.clone();
                xp.data[i] += delta;
                let g = Graph::new();
                f(g.constant(xp)).item()
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let a = analytic.data[i];
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            assert!(err < 1e-5, "coordinate {i}: analytic {a}, numeric {fd}");
        }
    }

    fn sample(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut s = seed;
        let data = (0..rows * cols)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect();
        Mat::from_vec(rows, cols, data)
    }

    #[test]
    fn matmul_transpose_and_rows() {
        let w = sample(4, 3, 7);
        check(sample(2, 4, 1), |x| {
            let wv = x.graph().constant(w.clone());
            let b = x.graph().constant(Mat::row_vector(&[0.1, -0.2, 0.3]));
            x.matmul(wv).add_row(b).mul_row(b).t().sum()
        });
        check(sample(4, 3, 2), |wv| {
            let x = wv.graph().constant(sample(2, 4, 1));
            (x.matmul(wv) * x.matmul(wv)).mean()
        });
    }

    #[test]
    fn softmax_and_layer_norm() {
        let m = sample(3, 3, 3);
        check(sample(3, 3, 4), |x| {
            let w = x.graph().constant(m.clone());
            (x.softmax_rows(true) * w).sum()
        });
        check(sample(3, 5, 5), |x| {
            let w = x.graph().constant(sample(3, 5, 6));
            (x.layer_norm(1e-5) * w).sum()
        });
    }

    #[test]
    fn unary_ops() {
        let x0 = Mat::from_vec(1, 4, vec![0.3, -0.7, 1.4, 2.1]);
        check(x0.clone(), |x| x.sigmoid().sum());
        check(x0.clone(), |x| x.gelu().sum());
        check(x0.clone(), |x| (x.sin() * x.cos()).sum());
        check(x0.clone(), |x| x.exp().sum());
        check(x0.clone(), |x| x.abs().affine(1.0, 0.5).ln().sum());
        check(x0.clone(), |x| x.abs().sqrt().sum());
        check(x0.clone(), |x| x.softplus().sum());
        check(x0.clone(), |x| x.powi(7).sum());
        check(x0.clone(), |x| (x.relu() + x).sum());
        check(x0, |x| {
            let other = x.graph().constant(Mat::from_vec(1, 4, vec![0.5, 0.2, -1.0, -0.3]));
            (x.atan2(other) + other.atan2(x)).sum()
        });
    }

    #[test]
    fn slicing_concat_and_scalars() {
        check(sample(3, 4, 8), |x| {
            let g = x.graph();
            let a = x.slice_cols(1, 2);
            let b = x.slice_rows(0, 2).mean_rows();
            let c = g.concat_cols(&[a, x]);
            let d = g.concat_rows(&[b, x]);
            (c.sum() * d.at(0, 1)) / (x.at(2, 3) - 3.0) + -x.at(1, 1)
        });
    }

    #[test]
    fn shared_subexpressions_accumulate() {
        let g = Graph::new();
        let x = g.scalar(3.0);
        let y = x * x + x;
        let grads = g.backward(y);
        assert_eq!(grads.get(x).unwrap().data[0], 7.0);
    }
}
