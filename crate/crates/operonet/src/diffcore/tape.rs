use super::matrix::{matmul, Matrix};
use super::{Activation, DiffError};

pub type NodeId = usize;

#[derive(Clone, Debug)]
enum Node {
    /// External value bound at `forward` time (data or parameters).
    Leaf,
    /// Fixed value baked into the tape; receives no gradient.
    Const(Matrix),
    MatMul {
        a: NodeId,
        trans_a: bool,
        b: NodeId,
        trans_b: bool,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    /// Broadcast a 1xC row across every row of an NxC matrix.
    AddRow {
        a: NodeId,
        row: NodeId,
    },
    Act {
        a: NodeId,
        kind: ElemAct,
    },
    /// PReLU with a trainable 1x1 slope node.
    Prelu {
        a: NodeId,
        slope: NodeId,
    },
    ConcatCols {
        a: NodeId,
        b: NodeId,
    },
    ConcatRows {
        a: NodeId,
        b: NodeId,
    },
    SliceCols {
        a: NodeId,
        start: usize,
        len: usize,
    },
    SliceRows {
        a: NodeId,
        start: usize,
        len: usize,
    },
    Reshape {
        a: NodeId,
        rows: usize,
        cols: usize,
    },
    Scale {
        a: NodeId,
        factor: f64,
    },
    /// Sum of all entries, producing a 1x1 matrix.
    Sum {
        a: NodeId,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ElemAct {
    Tanh,
    Relu,
    Identity,
}

/// Wengert tape: operations are recorded in topological order during
/// construction (shapes are checked as nodes are added), `forward` binds
/// leaf values and evaluates every node, `backward` walks the list in
/// reverse with a fixed accumulation order.
///
/// Tapes are single-use per batch by design; rebuilding per minibatch keeps
/// shape handling trivial when batch sizes vary.
pub struct Tape {
    nodes: Vec<Node>,
    shapes: Vec<(usize, usize)>,
    values: Vec<Matrix>,
    leaves: Vec<NodeId>,
    forward_done: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            shapes: Vec::new(),
            values: Vec::new(),
            leaves: Vec::new(),
            forward_done: false,
        }
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        self.shapes[id]
    }

    fn push(&mut self, node: Node, shape: (usize, usize)) -> NodeId {
        self.nodes.push(node);
        self.shapes.push(shape);
        self.nodes.len() - 1
    }

    /// Declare an external input of the given shape. Values are bound by
    /// `forward` in declaration order.
    pub fn leaf(&mut self, rows: usize, cols: usize) -> NodeId {
        let id = self.push(Node::Leaf, (rows, cols));
        self.leaves.push(id);
        id
    }

    /// Embed a fixed matrix into the tape (selection masks, tiling vectors).
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        let shape = value.shape();
        self.push(Node::Const(value), shape)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        self.matmul_t(a, false, b, false)
    }

    pub fn matmul_t(
        &mut self,
        a: NodeId,
        trans_a: bool,
        b: NodeId,
        trans_b: bool,
    ) -> Result<NodeId, DiffError> {
        let (ar, ac) = self.shapes[a];
        let (br, bc) = self.shapes[b];
        let (m, k1) = if trans_a { (ac, ar) } else { (ar, ac) };
        let (k2, n) = if trans_b { (bc, br) } else { (br, bc) };
        if k1 != k2 {
            return Err(DiffError::Dimension(format!(
                "matmul at node {}: inner dims {k1} vs {k2} (operands {a}:{ar}x{ac}, {b}:{br}x{bc})",
                self.nodes.len()
            )));
        }
        Ok(self.push(
            Node::MatMul {
                a,
                trans_a,
                b,
                trans_b,
            },
            (m, n),
        ))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        if self.shapes[a] != self.shapes[b] {
            return Err(DiffError::Dimension(format!(
                "add at node {}: shapes {:?} vs {:?}",
                self.nodes.len(),
                self.shapes[a],
                self.shapes[b]
            )));
        }
        let shape = self.shapes[a];
        Ok(self.push(Node::Add { a, b }, shape))
    }

    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId, DiffError> {
        let (_, ac) = self.shapes[a];
        if self.shapes[row].0 != 1 || self.shapes[row].1 != ac {
            return Err(DiffError::Dimension(format!(
                "add_row at node {}: row shape {:?} does not broadcast over {:?}",
                self.nodes.len(),
                self.shapes[row],
                self.shapes[a]
            )));
        }
        let shape = self.shapes[a];
        Ok(self.push(Node::AddRow { a, row }, shape))
    }

    /// Elementwise activation. For PReLU the slope must be registered first
    /// as a 1x1 leaf via [`Tape::prelu`].
    pub fn activate(&mut self, a: NodeId, act: &Activation) -> Result<NodeId, DiffError> {
        let kind = match act {
            Activation::Tanh => ElemAct::Tanh,
            Activation::Relu => ElemAct::Relu,
            Activation::Identity => ElemAct::Identity,
            Activation::Prelu { .. } => {
                return Err(DiffError::State(
                    "prelu requires a slope node; use Tape::prelu".into(),
                ))
            }
        };
        let shape = self.shapes[a];
        Ok(self.push(Node::Act { a, kind }, shape))
    }

    pub fn prelu(&mut self, a: NodeId, slope: NodeId) -> Result<NodeId, DiffError> {
        if self.shapes[slope] != (1, 1) {
            return Err(DiffError::Dimension(format!(
                "prelu at node {}: slope must be 1x1, got {:?}",
                self.nodes.len(),
                self.shapes[slope]
            )));
        }
        let shape = self.shapes[a];
        Ok(self.push(Node::Prelu { a, slope }, shape))
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        let (ar, ac) = self.shapes[a];
        let (br, bc) = self.shapes[b];
        if ar != br {
            return Err(DiffError::Dimension(format!(
                "concat_cols at node {}: row counts {ar} vs {br}",
                self.nodes.len()
            )));
        }
        Ok(self.push(Node::ConcatCols { a, b }, (ar, ac + bc)))
    }

    pub fn concat_rows(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        let (ar, ac) = self.shapes[a];
        let (br, bc) = self.shapes[b];
        if ac != bc {
            return Err(DiffError::Dimension(format!(
                "concat_rows at node {}: col counts {ac} vs {bc}",
                self.nodes.len()
            )));
        }
        Ok(self.push(Node::ConcatRows { a, b }, (ar + br, ac)))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId, DiffError> {
        let (ar, ac) = self.shapes[a];
        if start + len > ac {
            return Err(DiffError::Dimension(format!(
                "slice_cols at node {}: {start}..{} out of {ac} cols",
                self.nodes.len(),
                start + len
            )));
        }
        Ok(self.push(Node::SliceCols { a, start, len }, (ar, len)))
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId, DiffError> {
        let (ar, ac) = self.shapes[a];
        if start + len > ar {
            return Err(DiffError::Dimension(format!(
                "slice_rows at node {}: {start}..{} out of {ar} rows",
                self.nodes.len(),
                start + len
            )));
        }
        Ok(self.push(Node::SliceRows { a, start, len }, (len, ac)))
    }

    pub fn reshape(&mut self, a: NodeId, rows: usize, cols: usize) -> Result<NodeId, DiffError> {
        let (ar, ac) = self.shapes[a];
        if ar * ac != rows * cols {
            return Err(DiffError::Dimension(format!(
                "reshape at node {}: {ar}x{ac} -> {rows}x{cols}",
                self.nodes.len()
            )));
        }
        Ok(self.push(Node::Reshape { a, rows, cols }, (rows, cols)))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let shape = self.shapes[a];
        self.push(Node::Scale { a, factor }, shape)
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        self.push(Node::Sum { a }, (1, 1))
    }

    /// Bind leaf values (in declaration order) and evaluate every node.
    /// Returns a clone of the final node's value.
    pub fn forward(&mut self, inputs: &[&Matrix]) -> Result<Matrix, DiffError> {
        if inputs.len() != self.leaves.len() {
            return Err(DiffError::Dimension(format!(
                "forward: {} inputs supplied, tape declares {} leaves",
                inputs.len(),
                self.leaves.len()
            )));
        }
        for (slot, input) in self.leaves.iter().zip(inputs) {
            if input.shape() != self.shapes[*slot] {
                return Err(DiffError::Dimension(format!(
                    "forward: leaf {slot} expects {:?}, got {:?}",
                    self.shapes[*slot],
                    input.shape()
                )));
            }
        }
        self.values.clear();
        self.values.reserve(self.nodes.len());
        let mut next_leaf = 0;
        for (id, node) in self.nodes.iter().enumerate() {
            let value = match node {
                Node::Leaf => {
                    let v = inputs[next_leaf].clone();
                    next_leaf += 1;
                    v
                }
                Node::Const(v) => v.clone(),
                Node::MatMul {
                    a,
                    trans_a,
                    b,
                    trans_b,
                } => matmul(&self.values[*a], *trans_a, &self.values[*b], *trans_b),
                Node::Add { a, b } => {
                    let mut out = self.values[*a].clone();
                    for (o, &v) in out.data_mut().iter_mut().zip(self.values[*b].data()) {
                        *o += v;
                    }
                    out
                }
                Node::AddRow { a, row } => {
                    let mut out = self.values[*a].clone();
                    let cols = out.cols();
                    let rowv = self.values[*row].data();
                    for r in 0..out.rows() {
                        let chunk = &mut out.data_mut()[r * cols..(r + 1) * cols];
                        for (o, &v) in chunk.iter_mut().zip(rowv) {
                            *o += v;
                        }
                    }
                    out
                }
                Node::Act { a, kind } => {
                    let mut out = self.values[*a].clone();
                    match kind {
                        ElemAct::Tanh => out.data_mut().iter_mut().for_each(|v| *v = v.tanh()),
                        ElemAct::Relu => out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0)),
                        ElemAct::Identity => {}
                    }
                    out
                }
                Node::Prelu { a, slope } => {
                    let s = self.values[*slope].as_scalar();
                    let mut out = self.values[*a].clone();
                    out.data_mut()
                        .iter_mut()
                        .for_each(|v| *v = if *v > 0.0 { *v } else { s * *v });
                    out
                }
                Node::ConcatCols { a, b } => {
                    let (va, vb) = (&self.values[*a], &self.values[*b]);
                    let mut out = Matrix::zeros(va.rows(), va.cols() + vb.cols());
                    for r in 0..va.rows() {
                        let dst = r * out.cols();
                        out.data_mut()[dst..dst + va.cols()].copy_from_slice(va.row_slice(r));
                        out.data_mut()[dst + va.cols()..dst + va.cols() + vb.cols()]
                            .copy_from_slice(vb.row_slice(r));
                    }
                    out
                }
                Node::ConcatRows { a, b } => {
                    let (va, vb) = (&self.values[*a], &self.values[*b]);
                    let mut data = Vec::with_capacity(va.len() + vb.len());
                    data.extend_from_slice(va.data());
                    data.extend_from_slice(vb.data());
                    Matrix::from_vec(va.rows() + vb.rows(), va.cols(), data)?
                }
                Node::SliceCols { a, start, len } => {
                    let va = &self.values[*a];
                    let mut out = Matrix::zeros(va.rows(), *len);
                    for r in 0..va.rows() {
                        let src = &va.row_slice(r)[*start..*start + *len];
                        out.data_mut()[r * len..(r + 1) * len].copy_from_slice(src);
                    }
                    out
                }
                Node::SliceRows { a, start, len } => {
                    let va = &self.values[*a];
                    let cols = va.cols();
                    let data = va.data()[*start * cols..(*start + *len) * cols].to_vec();
                    Matrix::from_vec(*len, cols, data)?
                }
                Node::Reshape { a, rows, cols } => {
                    Matrix::from_vec(*rows, *cols, self.values[*a].data().to_vec())?
                }
                Node::Scale { a, factor } => {
                    let mut out = self.values[*a].clone();
                    out.data_mut().iter_mut().for_each(|v| *v *= factor);
                    out
                }
                Node::Sum { a } => Matrix::scalar(self.values[*a].data().iter().sum()),
            };
            if !value.all_finite() {
                return Err(DiffError::NonFinite { node: id });
            }
            self.values.push(value);
        }
        self.forward_done = true;
        Ok(self.values.last().expect("empty tape").clone())
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.values[id]
    }

    /// Reverse pass. Returns one gradient per declared leaf, in declaration
    /// order. The seed must match the final node's shape.
    pub fn backward(&self, seed: &Matrix) -> Result<Vec<Matrix>, DiffError> {
        if !self.forward_done {
            return Err(DiffError::State("backward called before forward".into()));
        }
        let last = self.nodes.len() - 1;
        if seed.shape() != self.shapes[last] {
            return Err(DiffError::Dimension(format!(
                "backward: seed shape {:?} does not match output {:?}",
                seed.shape(),
                self.shapes[last]
            )));
        }
        let mut grads: Vec<Matrix> = self
            .shapes
            .iter()
            .map(|&(r, c)| Matrix::zeros(r, c))
            .collect();
        grads[last] = seed.clone();

        for id in (0..self.nodes.len()).rev() {
            // Split borrows: take this node's gradient out, scatter into parents.
            let g = std::mem::replace(&mut grads[id], Matrix::zeros(0, 0));
            match &self.nodes[id] {
                Node::Leaf => {
                    grads[id] = g;
                    continue;
                }
                Node::Const(_) => {}
                Node::MatMul {
                    a,
                    trans_a,
                    b,
                    trans_b,
                } => {
                    let (va, vb) = (&self.values[*a], &self.values[*b]);
                    let (da, db) = match (trans_a, trans_b) {
                        (false, false) => (matmul(&g, false, vb, true), matmul(va, true, &g, false)),
                        (false, true) => (matmul(&g, false, vb, false), matmul(&g, true, va, false)),
                        (true, false) => (matmul(vb, false, &g, true), matmul(va, false, &g, false)),
                        (true, true) => (matmul(vb, true, &g, true), matmul(&g, true, va, true)),
                    };
                    accumulate(&mut grads[*a], &da);
                    accumulate(&mut grads[*b], &db);
                }
                Node::Add { a, b } => {
                    accumulate(&mut grads[*a], &g);
                    accumulate(&mut grads[*b], &g);
                }
                Node::AddRow { a, row } => {
                    accumulate(&mut grads[*a], &g);
                    let cols = g.cols();
                    let dr = grads[*row].data_mut();
                    for r in 0..g.rows() {
                        for (d, &v) in dr.iter_mut().zip(&g.data()[r * cols..(r + 1) * cols]) {
                            *d += v;
                        }
                    }
                }
                Node::Act { a, kind } => {
                    let vin = &self.values[*a];
                    let vout = &self.values[id];
                    let da = grads[*a].data_mut();
                    match kind {
                        ElemAct::Tanh => {
                            for i in 0..da.len() {
                                let t = vout.data()[i];
                                da[i] += g.data()[i] * (1.0 - t * t);
                            }
                        }
                        ElemAct::Relu => {
                            // derivative at 0 defined as 0
                            for i in 0..da.len() {
                                if vin.data()[i] > 0.0 {
                                    da[i] += g.data()[i];
                                }
                            }
                        }
                        ElemAct::Identity => {
                            for i in 0..da.len() {
                                da[i] += g.data()[i];
                            }
                        }
                    }
                }
                Node::Prelu { a, slope } => {
                    let s = self.values[*slope].as_scalar();
                    let vin = self.values[*a].data();
                    let mut ds = 0.0;
                    {
                        let da = grads[*a].data_mut();
                        for i in 0..da.len() {
                            if vin[i] > 0.0 {
                                da[i] += g.data()[i];
                            } else {
                                da[i] += g.data()[i] * s;
                                ds += g.data()[i] * vin[i];
                            }
                        }
                    }
                    grads[*slope].data_mut()[0] += ds;
                }
                Node::ConcatCols { a, b } => {
                    let ac = self.shapes[*a].1;
                    let bc = self.shapes[*b].1;
                    {
                        let da = grads[*a].data_mut();
                        for r in 0..g.rows() {
                            for c in 0..ac {
                                da[r * ac + c] += g.get(r, c);
                            }
                        }
                    }
                    let db = grads[*b].data_mut();
                    for r in 0..g.rows() {
                        for c in 0..bc {
                            db[r * bc + c] += g.get(r, ac + c);
                        }
                    }
                }
                Node::ConcatRows { a, b } => {
                    let alen = grads[*a].len();
                    for (d, &v) in grads[*a].data_mut().iter_mut().zip(&g.data()[..alen]) {
                        *d += v;
                    }
                    for (d, &v) in grads[*b].data_mut().iter_mut().zip(&g.data()[alen..]) {
                        *d += v;
                    }
                }
                Node::SliceCols { a, start, len } => {
                    let ac = self.shapes[*a].1;
                    let da = grads[*a].data_mut();
                    for r in 0..g.rows() {
                        for c in 0..*len {
                            da[r * ac + start + c] += g.get(r, c);
                        }
                    }
                }
                Node::SliceRows { a, start, len: _ } => {
                    let cols = g.cols();
                    let da = grads[*a].data_mut();
                    for (d, &v) in da[*start * cols..].iter_mut().zip(g.data()) {
                        *d += v;
                    }
                }
                Node::Reshape { a, .. } => {
                    for (d, &v) in grads[*a].data_mut().iter_mut().zip(g.data()) {
                        *d += v;
                    }
                }
                Node::Scale { a, factor } => {
                    for (d, &v) in grads[*a].data_mut().iter_mut().zip(g.data()) {
                        *d += v * factor;
                    }
                }
                Node::Sum { a } => {
                    let gv = g.as_scalar();
                    for d in grads[*a].data_mut() {
                        *d += gv;
                    }
                }
            }
        }
        Ok(self
            .leaves
            .iter()
            .map(|&id| std::mem::replace(&mut grads[id], Matrix::zeros(0, 0)))
            .collect())
    }
}

fn accumulate(dst: &mut Matrix, src: &Matrix) {
    debug_assert_eq!(dst.shape(), src.shape());
    for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d += s;
    }
}
