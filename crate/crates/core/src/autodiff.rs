//! Reverse-mode automatic differentiation over dense double-precision
//! matrices.
//!
//! A [`Tape`] is an append-only arena of nodes; every operation validates
//! shapes, computes its forward value eagerly, checks it for NaN/Inf, and
//! records what it needs for the backward sweep. [`Tape::backward`] walks
//! the arena in reverse insertion order and accumulates gradients into leaf
//! nodes created with `requires_grad = true`; repeated backward calls
//! accumulate additively until [`Tape::zero_grad`].
//!
//! The op set is exactly what the training objective needs: dense and
//! sparse-dense products, bias broadcast, elementwise arithmetic, ReLU,
//! sigmoid/softplus, clamped log, row softmax / log-sum-exp, row dots,
//! row gathers, per-row column picks, and scalar reductions. Discrete
//! selections (which rows to gather, which columns to pick) are constants:
//! gradients do not flow through them.

use crate::sparse::CsrMatrix;
use crate::{error::CoreError, Result};
use ndarray::{Array2, ArrayView2, Axis};
use std::sync::Arc;

/// Handle to a node in a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorId(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    /// `A · B`
    MatMul(TensorId, TensorId),
    /// `S · X` for a constant sparse `S`
    Spmm(Arc<CsrMatrix>, TensorId),
    /// matrix plus broadcast row vector (`1×k`)
    AddBias(TensorId, TensorId),
    Add(TensorId, TensorId),
    Sub(TensorId, TensorId),
    MulElem(TensorId, TensorId),
    Scale(TensorId, f64),
    Relu(TensorId),
    Sigmoid(TensorId),
    /// `ln(1 + e^x)`, evaluated overflow-free
    Softplus(TensorId),
    /// `ln(max(x, eps))`; the clamped region has zero gradient
    LogClamped(TensorId, f64),
    Exp(TensorId),
    /// row-wise softmax with max-subtraction stabilization
    SoftmaxRows(TensorId),
    /// `n×k → n×1` row-wise log-sum-exp, stabilized
    LogSumExpRows(TensorId),
    /// per-row dot product of two equal-shape matrices, `→ n×1`
    RowDot(TensorId, TensorId),
    /// row selection (duplicates allowed); backward scatter-adds
    GatherRows(TensorId, Arc<Vec<usize>>),
    /// pick one column per row, `→ n×1`
    PickPerRow(TensorId, Arc<Vec<usize>>),
    /// mean over all entries, `→ 1×1`
    MeanAll(TensorId),
    /// sum over all entries, `→ 1×1`
    SumAll(TensorId),
    /// horizontal concatenation of equal-height matrices
    ConcatCols(Vec<TensorId>),
}

struct Node {
    value: Array2<f64>,
    grad: Option<Array2<f64>>,
    op: Op,
    requires_grad: bool,
}

/// Append-only computation graph.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn stable_softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds an input node. Only leaves may require gradients; everything
    /// else derives the flag from its operands.
    pub fn leaf(&mut self, value: Array2<f64>, requires_grad: bool) -> Result<TensorId> {
        self.push(value, Op::Leaf, requires_grad, "leaf")
    }

    /// Adds a constant input (no gradient tracking).
    pub fn constant(&mut self, value: Array2<f64>) -> Result<TensorId> {
        self.leaf(value, false)
    }

    pub fn value(&self, id: TensorId) -> ArrayView2<'_, f64> {
        self.nodes[id.0].value.view()
    }

    /// Value of a `1×1` node as a scalar.
    pub fn scalar_value(&self, id: TensorId) -> f64 {
        debug_assert_eq!(self.nodes[id.0].value.dim(), (1, 1), "not a scalar node");
        self.nodes[id.0].value[[0, 0]]
    }

    /// Accumulated gradient of a leaf, if any backward pass reached it.
    pub fn grad(&self, id: TensorId) -> Option<ArrayView2<'_, f64>> {
        self.nodes[id.0].grad.as_ref().map(|g| g.view())
    }

    /// Clears accumulated gradients on every node.
    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    fn shape(&self, id: TensorId) -> (usize, usize) {
        self.nodes[id.0].value.dim()
    }

    fn requires(&self, id: TensorId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn push(
        &mut self,
        value: Array2<f64>,
        op: Op,
        requires_grad: bool,
        op_name: &'static str,
    ) -> Result<TensorId> {
        if !value.iter().all(|v| v.is_finite()) {
            return Err(CoreError::NonFinite { op: op_name });
        }
        self.nodes.push(Node { value, grad: None, op, requires_grad });
        Ok(TensorId(self.nodes.len() - 1))
    }

    fn check_same_shape(
        &self,
        op: &'static str,
        a: TensorId,
        b: TensorId,
    ) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(CoreError::ShapeMismatch { op, lhs: self.shape(a), rhs: self.shape(b) });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ac != br {
            return Err(CoreError::ShapeMismatch { op: "matmul", lhs: (ar, ac), rhs: (br, bc) });
        }
        let value = self.nodes[a.0].value.dot(&self.nodes[b.0].value);
        let req = self.requires(a) || self.requires(b);
        self.push(value, Op::MatMul(a, b), req, "matmul")
    }

    pub fn spmm(&mut self, s: &Arc<CsrMatrix>, x: TensorId) -> Result<TensorId> {
        let value = s.dot_dense(self.value(x))?;
        let req = self.requires(x);
        self.push(value, Op::Spmm(Arc::clone(s), x), req, "spmm")
    }

    /// `a + bias`, where `bias` is `1×k` and broadcasts over rows of `a`.
    pub fn add_bias(&mut self, a: TensorId, bias: TensorId) -> Result<TensorId> {
        let (_, ac) = self.shape(a);
        let (br, bc) = self.shape(bias);
        if br != 1 || bc != ac {
            return Err(CoreError::ShapeMismatch {
                op: "add_bias",
                lhs: self.shape(a),
                rhs: (br, bc),
            });
        }
        let value = &self.nodes[a.0].value + &self.nodes[bias.0].value.row(0);
        let req = self.requires(a) || self.requires(bias);
        self.push(value, Op::AddBias(a, bias), req, "add_bias")
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.check_same_shape("add", a, b)?;
        let value = &self.nodes[a.0].value + &self.nodes[b.0].value;
        let req = self.requires(a) || self.requires(b);
        self.push(value, Op::Add(a, b), req, "add")
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.check_same_shape("sub", a, b)?;
        let value = &self.nodes[a.0].value - &self.nodes[b.0].value;
        let req = self.requires(a) || self.requires(b);
        self.push(value, Op::Sub(a, b), req, "sub")
    }

    pub fn mul_elem(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.check_same_shape("mul_elem", a, b)?;
        let value = &self.nodes[a.0].value * &self.nodes[b.0].value;
        let req = self.requires(a) || self.requires(b);
        self.push(value, Op::MulElem(a, b), req, "mul_elem")
    }

    pub fn scale(&mut self, a: TensorId, c: f64) -> Result<TensorId> {
        let value = self.nodes[a.0].value.mapv(|v| v * c);
        let req = self.requires(a);
        self.push(value, Op::Scale(a, c), req, "scale")
    }

    pub fn relu(&mut self, a: TensorId) -> Result<TensorId> {
        let value = self.nodes[a.0].value.mapv(|v| v.max(0.0));
        let req = self.requires(a);
        self.push(value, Op::Relu(a), req, "relu")
    }

    pub fn sigmoid(&mut self, a: TensorId) -> Result<TensorId> {
        let value = self.nodes[a.0].value.mapv(stable_sigmoid);
        let req = self.requires(a);
        self.push(value, Op::Sigmoid(a), req, "sigmoid")
    }

    pub fn softplus(&mut self, a: TensorId) -> Result<TensorId> {
        let value = self.nodes[a.0].value.mapv(stable_softplus);
        let req = self.requires(a);
        self.push(value, Op::Softplus(a), req, "softplus")
    }

    /// `ln(max(x, eps))`. Entries that hit the clamp are counted in the
    /// returned diagnostic and receive zero gradient (the clamp is flat).
    pub fn log_clamped(&mut self, a: TensorId, eps: f64) -> Result<(TensorId, usize)> {
        let clamped = self.nodes[a.0].value.iter().filter(|&&v| v < eps).count();
        let value = self.nodes[a.0].value.mapv(|v| v.max(eps).ln());
        let req = self.requires(a);
        let id = self.push(value, Op::LogClamped(a, eps), req, "log_clamped")?;
        Ok((id, clamped))
    }

    pub fn exp(&mut self, a: TensorId) -> Result<TensorId> {
        let value = self.nodes[a.0].value.mapv(f64::exp);
        let req = self.requires(a);
        self.push(value, Op::Exp(a), req, "exp")
    }

    pub fn softmax_rows(&mut self, a: TensorId) -> Result<TensorId> {
        let mut value = self.nodes[a.0].value.clone();
        for mut row in value.rows_mut() {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
            let sum = row.sum();
            row.mapv_inplace(|v| v / sum);
        }
        let req = self.requires(a);
        self.push(value, Op::SoftmaxRows(a), req, "softmax_rows")
    }

    pub fn logsumexp_rows(&mut self, a: TensorId) -> Result<TensorId> {
        let src = &self.nodes[a.0].value;
        let mut value = Array2::zeros((src.nrows(), 1));
        for (i, row) in src.rows().into_iter().enumerate() {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|&v| (v - max).exp()).sum();
            value[[i, 0]] = max + sum.ln();
        }
        let req = self.requires(a);
        self.push(value, Op::LogSumExpRows(a), req, "logsumexp_rows")
    }

    /// Per-row dot product of equal-shape matrices, producing `n×1`.
    pub fn row_dot(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.check_same_shape("row_dot", a, b)?;
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let mut value = Array2::zeros((va.nrows(), 1));
        for i in 0..va.nrows() {
            value[[i, 0]] = va.row(i).dot(&vb.row(i));
        }
        let req = self.requires(a) || self.requires(b);
        self.push(value, Op::RowDot(a, b), req, "row_dot")
    }

    /// Selects `rows` (with repetition allowed) from `a`.
    pub fn gather_rows(&mut self, a: TensorId, rows: Arc<Vec<usize>>) -> Result<TensorId> {
        let (n, k) = self.shape(a);
        if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
            return Err(CoreError::InvalidParameter {
                name: "gather_rows",
                message: format!("row index {bad} outside matrix with {n} rows"),
            });
        }
        let src = &self.nodes[a.0].value;
        let mut value = Array2::zeros((rows.len(), k));
        for (dst, &r) in rows.iter().enumerate() {
            value.row_mut(dst).assign(&src.row(r));
        }
        let req = self.requires(a);
        self.push(value, Op::GatherRows(a, rows), req, "gather_rows")
    }

    /// Picks entry `(i, cols[i])` from each row `i`, producing `n×1`.
    pub fn pick_per_row(&mut self, a: TensorId, cols: Arc<Vec<usize>>) -> Result<TensorId> {
        let (n, k) = self.shape(a);
        if cols.len() != n {
            return Err(CoreError::DimensionMismatch {
                context: "pick_per_row column list",
                expected: n,
                actual: cols.len(),
            });
        }
        if let Some(&bad) = cols.iter().find(|&&c| c >= k) {
            return Err(CoreError::InvalidParameter {
                name: "pick_per_row",
                message: format!("column index {bad} outside matrix with {k} columns"),
            });
        }
        let src = &self.nodes[a.0].value;
        let mut value = Array2::zeros((n, 1));
        for (i, &c) in cols.iter().enumerate() {
            value[[i, 0]] = src[[i, c]];
        }
        let req = self.requires(a);
        self.push(value, Op::PickPerRow(a, cols), req, "pick_per_row")
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn concat_cols(&mut self, parts: &[TensorId]) -> Result<TensorId> {
        let Some(&first) = parts.first() else {
            return Err(CoreError::InvalidParameter {
                name: "concat_cols",
                message: "need at least one input".into(),
            });
        };
        let n = self.shape(first).0;
        let mut total_cols = 0;
        for &p in parts {
            let (r, c) = self.shape(p);
            if r != n {
                return Err(CoreError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: (n, total_cols),
                    rhs: (r, c),
                });
            }
            total_cols += c;
        }
        let mut value = Array2::zeros((n, total_cols));
        let mut offset = 0;
        for &p in parts {
            let c = self.shape(p).1;
            value
                .slice_mut(ndarray::s![.., offset..offset + c])
                .assign(&self.nodes[p.0].value);
            offset += c;
        }
        let req = parts.iter().any(|&p| self.requires(p));
        self.push(value, Op::ConcatCols(parts.to_vec()), req, "concat_cols")
    }

    pub fn mean_all(&mut self, a: TensorId) -> Result<TensorId> {
        let v = &self.nodes[a.0].value;
        let value = Array2::from_elem((1, 1), v.sum() / v.len() as f64);
        let req = self.requires(a);
        self.push(value, Op::MeanAll(a), req, "mean_all")
    }

    pub fn sum_all(&mut self, a: TensorId) -> Result<TensorId> {
        let value = Array2::from_elem((1, 1), self.nodes[a.0].value.sum());
        let req = self.requires(a);
        self.push(value, Op::SumAll(a), req, "sum_all")
    }

    /// Reverse sweep from a scalar node, accumulating gradients into all
    /// reachable gradient-requiring leaves. May be called repeatedly; leaf
    /// gradients add up across calls.
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        if self.shape(loss) != (1, 1) {
            return Err(CoreError::InvalidParameter {
                name: "loss",
                message: format!("backward needs a 1×1 node, got {:?}", self.shape(loss)),
            });
        }
        // Local adjoint buffer; only leaf adjoints persist on the tape.
        let mut adj: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        adj[loss.0] = Some(Array2::from_elem((1, 1), 1.0));

        for id in (0..=loss.0).rev() {
            let Some(g) = adj[id].take() else { continue };
            if !self.nodes[id].requires_grad {
                continue;
            }
            // Accumulate into the node's persistent grad slot if it's a leaf.
            if matches!(self.nodes[id].op, Op::Leaf) {
                match &mut self.nodes[id].grad {
                    Some(acc) => *acc += &g,
                    slot @ None => *slot = Some(g.clone()),
                }
                continue;
            }
            let send = |adj: &mut Vec<Option<Array2<f64>>>,
                            target: TensorId,
                            delta: Array2<f64>| {
                match &mut adj[target.0] {
                    Some(acc) => *acc += &delta,
                    slot @ None => *slot = Some(delta),
                }
            };
            match &self.nodes[id].op {
                Op::Leaf => unreachable!("handled above"),
                Op::MatMul(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.requires(a) {
                        let da = g.dot(&self.nodes[b.0].value.t());
                        send(&mut adj, a, da);
                    }
                    if self.requires(b) {
                        let db = self.nodes[a.0].value.t().dot(&g);
                        send(&mut adj, b, db);
                    }
                }
                Op::Spmm(s, x) => {
                    let x = *x;
                    if self.requires(x) {
                        let dx = s.t_dot_dense(g.view())?;
                        send(&mut adj, x, dx);
                    }
                }
                Op::AddBias(a, bias) => {
                    let (a, bias) = (*a, *bias);
                    if self.requires(bias) {
                        let db = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                        send(&mut adj, bias, db);
                    }
                    if self.requires(a) {
                        send(&mut adj, a, g);
                    }
                }
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.requires(b) {
                        send(&mut adj, b, g.clone());
                    }
                    if self.requires(a) {
                        send(&mut adj, a, g);
                    }
                }
                Op::Sub(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.requires(b) {
                        send(&mut adj, b, g.mapv(|v| -v));
                    }
                    if self.requires(a) {
                        send(&mut adj, a, g);
                    }
                }
                Op::MulElem(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.requires(a) {
                        let da = &g * &self.nodes[b.0].value;
                        send(&mut adj, a, da);
                    }
                    if self.requires(b) {
                        let db = &g * &self.nodes[a.0].value;
                        send(&mut adj, b, db);
                    }
                }
                Op::Scale(a, c) => {
                    let (a, c) = (*a, *c);
                    send(&mut adj, a, g.mapv(|v| v * c));
                }
                Op::Relu(a) => {
                    let a = *a;
                    let da = ndarray::Zip::from(&g)
                        .and(&self.nodes[a.0].value)
                        .map_collect(|&gv, &xv| if xv > 0.0 { gv } else { 0.0 });
                    send(&mut adj, a, da);
                }
                Op::Sigmoid(a) => {
                    let a = *a;
                    let da = ndarray::Zip::from(&g)
                        .and(&self.nodes[id].value)
                        .map_collect(|&gv, &yv| gv * yv * (1.0 - yv));
                    send(&mut adj, a, da);
                }
                Op::Softplus(a) => {
                    let a = *a;
                    let da = ndarray::Zip::from(&g)
                        .and(&self.nodes[a.0].value)
                        .map_collect(|&gv, &xv| gv * stable_sigmoid(xv));
                    send(&mut adj, a, da);
                }
                Op::LogClamped(a, eps) => {
                    let (a, eps) = (*a, *eps);
                    let da = ndarray::Zip::from(&g)
                        .and(&self.nodes[a.0].value)
                        .map_collect(|&gv, &xv| if xv >= eps { gv / xv } else { 0.0 });
                    send(&mut adj, a, da);
                }
                Op::Exp(a) => {
                    let a = *a;
                    let da = &g * &self.nodes[id].value;
                    send(&mut adj, a, da);
                }
                Op::SoftmaxRows(a) => {
                    let a = *a;
                    let y = &self.nodes[id].value;
                    let mut da = Array2::zeros(y.raw_dim());
                    for i in 0..y.nrows() {
                        let (yr, gr) = (y.row(i), g.row(i));
                        let inner = gr.dot(&yr);
                        for j in 0..y.ncols() {
                            da[[i, j]] = yr[j] * (gr[j] - inner);
                        }
                    }
                    send(&mut adj, a, da);
                }
                Op::LogSumExpRows(a) => {
                    let a = *a;
                    let x = &self.nodes[a.0].value;
                    let lse = &self.nodes[id].value;
                    let mut da = Array2::zeros(x.raw_dim());
                    for i in 0..x.nrows() {
                        let gi = g[[i, 0]];
                        let li = lse[[i, 0]];
                        for j in 0..x.ncols() {
                            da[[i, j]] = gi * (x[[i, j]] - li).exp();
                        }
                    }
                    send(&mut adj, a, da);
                }
                Op::RowDot(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.requires(a) {
                        let mut da = Array2::zeros(self.nodes[a.0].value.raw_dim());
                        for i in 0..da.nrows() {
                            let gi = g[[i, 0]];
                            da.row_mut(i).scaled_add(gi, &self.nodes[b.0].value.row(i));
                        }
                        send(&mut adj, a, da);
                    }
                    if self.requires(b) {
                        let mut db = Array2::zeros(self.nodes[b.0].value.raw_dim());
                        for i in 0..db.nrows() {
                            let gi = g[[i, 0]];
                            db.row_mut(i).scaled_add(gi, &self.nodes[a.0].value.row(i));
                        }
                        send(&mut adj, b, db);
                    }
                }
                Op::GatherRows(a, rows) => {
                    let a = *a;
                    let mut da = Array2::zeros(self.nodes[a.0].value.raw_dim());
                    for (src, &r) in rows.iter().enumerate() {
                        da.row_mut(r).scaled_add(1.0, &g.row(src));
                    }
                    send(&mut adj, a, da);
                }
                Op::PickPerRow(a, cols) => {
                    let a = *a;
                    let mut da = Array2::zeros(self.nodes[a.0].value.raw_dim());
                    for (i, &c) in cols.iter().enumerate() {
                        da[[i, c]] += g[[i, 0]];
                    }
                    send(&mut adj, a, da);
                }
                Op::MeanAll(a) => {
                    let a = *a;
                    let shape = self.nodes[a.0].value.raw_dim();
                    let scale = g[[0, 0]] / self.nodes[a.0].value.len() as f64;
                    send(&mut adj, a, Array2::from_elem(shape, scale));
                }
                Op::SumAll(a) => {
                    let a = *a;
                    let shape = self.nodes[a.0].value.raw_dim();
                    send(&mut adj, a, Array2::from_elem(shape, g[[0, 0]]));
                }
                Op::ConcatCols(parts) => {
                    let parts = parts.clone();
                    let mut offset = 0;
                    for p in parts {
                        let c = self.nodes[p.0].value.ncols();
                        if self.requires(p) {
                            let slice = g.slice(ndarray::s![.., offset..offset + c]).to_owned();
                            send(&mut adj, p, slice);
                        }
                        offset += c;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Outcome of a finite-difference gradient audit.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest relative error seen over all checked entries.
    pub max_rel_err: f64,
    /// `(parameter index, row, column)` of the worst entry.
    pub worst_entry: (usize, usize, usize),
    /// Analytic and numeric derivative at the worst entry.
    pub worst_pair: (f64, f64),
    /// Number of entries compared.
    pub n_checked: usize,
}

/// Compares analytic gradients against central finite differences.
///
/// `loss_fn` must evaluate the scalar loss at the supplied parameter values
/// without mutating any other state. Each parameter entry is perturbed by
/// `±step`; the relative error is `|a − f| / max(|a|, |f|, 1e-8)`. Parameters
/// with more than `max_entries_per_param` entries are subsampled with a
/// seeded generator so the audit stays affordable on large weight matrices.
pub fn grad_check<F>(
    params: &[Array2<f64>],
    analytic: &[Array2<f64>],
    mut loss_fn: F,
    step: f64,
    max_entries_per_param: usize,
    seed: u64,
) -> Result<GradCheckReport>
where
    F: FnMut(&[Array2<f64>]) -> Result<f64>,
{
    use rand::seq::SliceRandom;
    if params.len() != analytic.len() {
        return Err(CoreError::DimensionMismatch {
            context: "grad_check parameter/gradient lists",
            expected: params.len(),
            actual: analytic.len(),
        });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "step",
            message: format!("finite positive step required, got {step}"),
        });
    }
    let mut rng = crate::rng::rng_from(seed);
    let mut work: Vec<Array2<f64>> = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_entry: (0, 0, 0),
        worst_pair: (0.0, 0.0),
        n_checked: 0,
    };
    for (p, grad) in analytic.iter().enumerate() {
        if grad.dim() != params[p].dim() {
            return Err(CoreError::ShapeMismatch {
                op: "grad_check",
                lhs: params[p].dim(),
                rhs: grad.dim(),
            });
        }
        let (rows, cols) = params[p].dim();
        let mut entries: Vec<(usize, usize)> =
            (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
        if entries.len() > max_entries_per_param {
            entries.shuffle(&mut rng);
            entries.truncate(max_entries_per_param);
        }
        for (i, j) in entries {
            let orig = work[p][[i, j]];
            work[p][[i, j]] = orig + step;
            let up = loss_fn(&work)?;
            work[p][[i, j]] = orig - step;
            let down = loss_fn(&work)?;
            work[p][[i, j]] = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = grad[[i, j]];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            report.n_checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_entry = (p, i, j);
                report.worst_pair = (a, numeric);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn square_gradient() {
        let mut t = Tape::new();
        let w = t.leaf(array![[3.0]], true).unwrap();
        let sq = t.mul_elem(w, w).unwrap();
        let loss = t.sum_all(sq).unwrap();
        t.backward(loss).unwrap();
        assert_abs_diff_eq!(t.grad(w).unwrap()[[0, 0]], 6.0);
    }

    #[test]
    fn relu_gradient_masks_negatives() {
        let mut t = Tape::new();
        let x = t.leaf(array![[-1.0, 2.0]], true).unwrap();
        let r = t.relu(x).unwrap();
        let loss = t.sum_all(r).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap(), array![[0.0, 1.0]]);
    }

    #[test]
    fn repeated_backward_accumulates() {
        let mut t = Tape::new();
        let w = t.leaf(array![[2.0]], true).unwrap();
        let loss = t.sum_all(w).unwrap();
        t.backward(loss).unwrap();
        t.backward(loss).unwrap();
        assert_abs_diff_eq!(t.grad(w).unwrap()[[0, 0]], 2.0);
        t.zero_grad();
        assert!(t.grad(w).is_none());
    }

    #[test]
    fn backward_requires_scalar() {
        let mut t = Tape::new();
        let x = t.leaf(array![[1.0, 2.0]], true).unwrap();
        assert!(t.backward(x).is_err());
    }

    #[test]
    fn non_finite_forward_is_rejected() {
        let mut t = Tape::new();
        assert!(t.leaf(array![[f64::NAN]], false).is_err());
        let big = t.leaf(array![[1e308]], true).unwrap();
        // exp(1e308) overflows to +inf and must trip the check.
        assert!(t.exp(big).is_err());
    }

    #[test]
    fn softmax_rows_are_stochastic_and_stable() {
        let mut t = Tape::new();
        let z = t.leaf(array![[0.0, 0.0, 0.0], [1000.0, 0.0, -0.5]], false).unwrap();
        let p = t.softmax_rows(z).unwrap();
        let v = t.value(p);
        for j in 0..3 {
            assert_abs_diff_eq!(v[[0, j]], 1.0 / 3.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(v[[1, 0]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.row(1).sum(), 1.0, epsilon = 1e-12);
    }

    /// Central finite difference on a scalar-valued closure.
    fn fd<F: FnMut(&Array2<f64>) -> f64>(x: &Array2<f64>, i: usize, j: usize, mut f: F) -> f64 {
        let h = 1e-6;
        let mut xp = x.clone();
        xp[[i, j]] += h;
        let mut xm = x.clone();
        xm[[i, j]] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    }

    #[test]
    fn composite_ops_match_finite_differences() {
        // loss = mean(softplus(A·B + bias)) + sum(sigmoid(row_dot(gather(A,[1,0,1]), C)))
        //        + sum(logsumexp_rows(A)) + mean(softmax_rows(A)·w) picks per row
        let a0 = array![[0.3, -1.2], [0.7, 0.4], [-0.5, 1.1]];
        let b0 = array![[0.2, -0.6, 1.0], [-0.3, 0.8, 0.5]];
        let eval = |a: &Array2<f64>, b: &Array2<f64>| -> f64 {
            let mut t = Tape::new();
            let ai = t.leaf(a.clone(), true).unwrap();
            let bi = t.leaf(b.clone(), true).unwrap();
            let bias = t.constant(array![[0.1, -0.1, 0.2]]).unwrap();
            let prod = t.matmul(ai, bi).unwrap();
            let shifted = t.add_bias(prod, bias).unwrap();
            let sp = t.softplus(shifted).unwrap();
            let l1 = t.mean_all(sp).unwrap();

            let idx = Arc::new(vec![1usize, 0, 1]);
            let gathered = t.gather_rows(ai, idx).unwrap();
            let c = t.constant(array![[0.4, 0.9], [-0.2, 0.3], [1.5, -0.7]]).unwrap();
            let rd = t.row_dot(gathered, c).unwrap();
            let sg = t.sigmoid(rd).unwrap();
            let l2 = t.sum_all(sg).unwrap();

            let lse = t.logsumexp_rows(ai).unwrap();
            let l3 = t.sum_all(lse).unwrap();

            let sm = t.softmax_rows(ai).unwrap();
            let picked = t.pick_per_row(sm, Arc::new(vec![0usize, 1, 0])).unwrap();
            let (lg, _) = t.log_clamped(picked, 1e-12).unwrap();
            let l4 = t.mean_all(lg).unwrap();

            let s12 = t.add(l1, l2).unwrap();
            let s34 = t.add(l3, l4).unwrap();
            let total = t.add(s12, s34).unwrap();
            t.scalar_value(total)
        };

        // Analytic gradients.
        let mut t = Tape::new();
        let ai = t.leaf(a0.clone(), true).unwrap();
        let bi = t.leaf(b0.clone(), true).unwrap();
        let bias = t.constant(array![[0.1, -0.1, 0.2]]).unwrap();
        let prod = t.matmul(ai, bi).unwrap();
        let shifted = t.add_bias(prod, bias).unwrap();
        let sp = t.softplus(shifted).unwrap();
        let l1 = t.mean_all(sp).unwrap();
        let idx = Arc::new(vec![1usize, 0, 1]);
        let gathered = t.gather_rows(ai, idx).unwrap();
        let c = t.constant(array![[0.4, 0.9], [-0.2, 0.3], [1.5, -0.7]]).unwrap();
        let rd = t.row_dot(gathered, c).unwrap();
        let sg = t.sigmoid(rd).unwrap();
        let l2 = t.sum_all(sg).unwrap();
        let lse = t.logsumexp_rows(ai).unwrap();
        let l3 = t.sum_all(lse).unwrap();
        let sm = t.softmax_rows(ai).unwrap();
        let picked = t.pick_per_row(sm, Arc::new(vec![0usize, 1, 0])).unwrap();
        let (lg, _) = t.log_clamped(picked, 1e-12).unwrap();
        let l4 = t.mean_all(lg).unwrap();
        let s12 = t.add(l1, l2).unwrap();
        let s34 = t.add(l3, l4).unwrap();
        let total = t.add(s12, s34).unwrap();
        t.backward(total).unwrap();

        let ga = t.grad(ai).unwrap().to_owned();
        let gb = t.grad(bi).unwrap().to_owned();
        for i in 0..3 {
            for j in 0..2 {
                let want = fd(&a0, i, j, |a| eval(a, &b0));
                assert_abs_diff_eq!(ga[[i, j]], want, epsilon = 1e-6);
            }
        }
        for i in 0..2 {
            for j in 0..3 {
                let want = fd(&b0, i, j, |b| eval(&a0, b));
                assert_abs_diff_eq!(gb[[i, j]], want, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn spmm_gradient_matches_dense() {
        let s = Arc::new(
            CsrMatrix::from_triplets(3, 3, vec![(0, 1, 0.5), (1, 0, 0.5), (2, 2, 1.0)]).unwrap(),
        );
        let x0 = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let mut t = Tape::new();
        let x = t.leaf(x0.clone(), true).unwrap();
        let y = t.spmm(&s, x).unwrap();
        let sq = t.mul_elem(y, y).unwrap();
        let loss = t.sum_all(sq).unwrap();
        t.backward(loss).unwrap();
        // d/dX sum((SX)^2) = 2 Sᵀ S X
        let dense = s.to_dense();
        let want = dense.t().dot(&dense.dot(&x0)).mapv(|v| 2.0 * v);
        assert_abs_diff_eq!(t.grad(x).unwrap().to_owned(), want, epsilon = 1e-10);
    }

    #[test]
    fn gather_scatter_adds_duplicate_rows() {
        let mut t = Tape::new();
        let x = t.leaf(array![[1.0], [2.0]], true).unwrap();
        let g = t.gather_rows(x, Arc::new(vec![0, 0, 1])).unwrap();
        let loss = t.sum_all(g).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap(), array![[2.0], [1.0]]);
    }

    #[test]
    fn concat_cols_routes_gradients_to_the_right_blocks() {
        let mut t = Tape::new();
        let a = t.leaf(array![[1.0], [2.0]], true).unwrap();
        let b = t.leaf(array![[3.0, 4.0], [5.0, 6.0]], true).unwrap();
        let cat = t.concat_cols(&[a, b]).unwrap();
        assert_eq!(t.value(cat), array![[1.0, 3.0, 4.0], [2.0, 5.0, 6.0]]);
        // Weight each column differently so routing errors are visible.
        let w = t.constant(array![[1.0, 10.0, 100.0], [1.0, 10.0, 100.0]]).unwrap();
        let prod = t.mul_elem(cat, w).unwrap();
        let loss = t.sum_all(prod).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(a).unwrap(), array![[1.0], [1.0]]);
        assert_eq!(t.grad(b).unwrap(), array![[10.0, 100.0], [10.0, 100.0]]);
        // Mismatched row counts are rejected.
        let mut t2 = Tape::new();
        let x = t2.leaf(array![[1.0]], false).unwrap();
        let y = t2.leaf(array![[1.0], [2.0]], false).unwrap();
        assert!(t2.concat_cols(&[x, y]).is_err());
    }

    #[test]
    fn grad_check_accepts_true_gradient_and_flags_corruption() {
        // loss(w) = sum(sigmoid(w)) has gradient σ(w)(1−σ(w)).
        let w = array![[0.3, -1.1], [2.0, 0.0]];
        let loss = |ps: &[Array2<f64>]| -> crate::Result<f64> {
            Ok(ps[0].mapv(stable_sigmoid).sum())
        };
        let good = w.mapv(|x| {
            let s = stable_sigmoid(x);
            s * (1.0 - s)
        });
        let report =
            grad_check(&[w.clone()], &[good.clone()], loss, 1e-5, usize::MAX, 7).unwrap();
        assert!(report.max_rel_err < 1e-7, "rel err {}", report.max_rel_err);
        assert_eq!(report.n_checked, 4);

        let mut bad = good;
        bad[[1, 0]] += 0.5;
        let report = grad_check(&[w], &[bad], loss, 1e-5, usize::MAX, 7).unwrap();
        assert!(report.max_rel_err > 1e-2);
        assert_eq!(report.worst_entry, (0, 1, 0));
    }

    #[test]
    fn grad_check_subsamples_large_parameters() {
        let w = Array2::from_shape_fn((10, 10), |(i, j)| (i as f64 - j as f64) * 0.05);
        let loss = |ps: &[Array2<f64>]| -> crate::Result<f64> { Ok(ps[0].mapv(|x| x * x).sum()) };
        let grad = w.mapv(|x| 2.0 * x);
        let report = grad_check(&[w], &[grad], loss, 1e-5, 20, 11).unwrap();
        assert_eq!(report.n_checked, 20);
        assert!(report.max_rel_err < 1e-6);
    }

    #[test]
    fn sum_of_losses_grad_is_sum_of_grads() {
        let x0 = array![[0.5, -0.3], [1.2, 0.8]];
        let build = |t: &mut Tape, x: TensorId| -> (TensorId, TensorId) {
            let s = t.sigmoid(x).unwrap();
            let l1 = t.sum_all(s).unwrap();
            let sq = t.mul_elem(x, x).unwrap();
            let l2 = t.mean_all(sq).unwrap();
            (l1, l2)
        };
        // Combined loss.
        let mut t = Tape::new();
        let x = t.leaf(x0.clone(), true).unwrap();
        let (l1, l2) = build(&mut t, x);
        let total = t.add(l1, l2).unwrap();
        t.backward(total).unwrap();
        let combined = t.grad(x).unwrap().to_owned();
        // Separate backwards, accumulated.
        let mut t = Tape::new();
        let x = t.leaf(x0, true).unwrap();
        let (l1, l2) = build(&mut t, x);
        t.backward(l1).unwrap();
        t.backward(l2).unwrap();
        let separate = t.grad(x).unwrap().to_owned();
        assert_abs_diff_eq!(combined, separate, epsilon = 1e-14);
    }
}
