//! Reverse-mode differentiation over dense matrices.
//!
//! Every value on the tape is an `Array2<f64>`; scalars are `1 x 1`. The op
//! set is small but closed under the derivatives the losses need: the
//! derivative of `gelu` is itself a taped op, so forward-mode Jacobian
//! tangents built from taped ops can be differentiated again by the reverse
//! sweep.

use ndarray::{s, Array2, Axis};

use super::activation::{gelu, gelu_prime, gelu_second, sigmoid};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// `a * b^T`
    MatMulT(Var, Var),
    /// `a + bias`, bias broadcast over rows.
    AddRowBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Square(Var),
    Gelu(Var),
    GeluPrime(Var),
    Sigmoid(Var),
    /// Each row repeated `r` times consecutively.
    RepeatRows(Var, usize),
    Sum(Var),
    /// Euclidean distances between the listed row pairs, as a column.
    PairDistances(Var, Vec<(usize, usize)>),
    /// For consecutive row blocks `T_b` of the given height, the flattened
    /// `T_b^T T_b`.
    BlockGram(Var, usize),
}

#[derive(Debug, Clone)]
struct Node {
    value: Array2<f64>,
    op: Op,
}

/// Records values and the ops that produced them.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one scalar with respect to every recorded value.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Array2<f64>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient with respect to `v`, zeros when `v` does not influence the
    /// output.
    pub fn wrt(&self, v: Var) -> Array2<f64> {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Array2::zeros(self.shapes[v.0]))
    }
}

fn scalar(v: f64) -> Array2<f64> {
    Array2::from_elem((1, 1), v)
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

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// Value of a `1 x 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        let val = self.value(v);
        debug_assert_eq!(val.dim(), (1, 1));
        val[[0, 0]]
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn constant_scalar(&mut self, v: f64) -> Var {
        self.leaf(scalar(v))
    }

    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(&self.value(b).t());
        self.push(value, Op::MatMulT(a, b))
    }

    pub fn add_row_bias(&mut self, a: Var, bias: Var) -> Var {
        let value = self.value(a) + self.value(bias);
        self.push(value, Op::AddRowBias(a, bias))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) + self.value(b);
        self.push(value, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) - self.value(b);
        self.push(value, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) * self.value(b);
        self.push(value, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) / self.value(b);
        self.push(value, Op::Div(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a) * c;
        self.push(value, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a) + c;
        self.push(value, Op::AddScalar(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|v| v * v);
        self.push(value, Op::Square(a))
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(gelu);
        self.push(value, Op::Gelu(a))
    }

    pub fn gelu_prime(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(gelu_prime);
        self.push(value, Op::GeluPrime(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(sigmoid);
        self.push(value, Op::Sigmoid(a))
    }

    pub fn repeat_rows(&mut self, a: Var, times: usize) -> Var {
        let src = self.value(a);
        let (n, c) = src.dim();
        let mut value = Array2::zeros((n * times, c));
        for (i, row) in src.rows().into_iter().enumerate() {
            for k in 0..times {
                value.row_mut(i * times + k).assign(&row);
            }
        }
        self.push(value, Op::RepeatRows(a, times))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = scalar(self.value(a).sum());
        self.push(value, Op::Sum(a))
    }

    /// Mean of all entries.
    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len() as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    pub fn pair_distances(&mut self, points: Var, pairs: Vec<(usize, usize)>) -> Var {
        let p = self.value(points);
        let mut value = Array2::zeros((pairs.len(), 1));
        for (r, &(i, j)) in pairs.iter().enumerate() {
            let d: f64 = p
                .row(i)
                .iter()
                .zip(p.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            value[[r, 0]] = d.sqrt();
        }
        self.push(value, Op::PairDistances(points, pairs))
    }

    pub fn block_gram(&mut self, t: Var, block: usize) -> Var {
        let src = self.value(t);
        let (rows, c) = src.dim();
        assert!(
            block > 0 && rows % block == 0,
            "rows must split into blocks"
        );
        let nb = rows / block;
        let mut value = Array2::zeros((nb, c * c));
        for b in 0..nb {
            let tb = src.slice(s![b * block..(b + 1) * block, ..]);
            let g = tb.t().dot(&tb);
            for (idx, v) in g.iter().enumerate() {
                value[[b, idx]] = *v;
            }
        }
        self.push(value, Op::BlockGram(t, block))
    }

    /// Reverse sweep from the scalar `output`.
    pub fn backward(&self, output: Var) -> Gradients {
        assert_eq!(
            self.value(output).dim(),
            (1, 1),
            "backward needs a scalar output"
        );
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(scalar(1.0));

        fn accumulate(grads: &mut [Option<Array2<f64>>], v: Var, g: Array2<f64>) {
            match &mut grads[v.0] {
                Some(existing) => *existing += &g,
                slot => *slot = Some(g),
            }
        }

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatMulT(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    accumulate(&mut grads, *a, g.dot(bv));
                    accumulate(&mut grads, *b, g.t().dot(av));
                }
                Op::AddRowBias(a, bias) => {
                    accumulate(&mut grads, *bias, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    accumulate(&mut grads, *a, g.clone());
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *b, g.clone());
                    accumulate(&mut grads, *a, g.clone());
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *b, -&g);
                    accumulate(&mut grads, *a, g.clone());
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    accumulate(&mut grads, *a, &g * bv);
                    accumulate(&mut grads, *b, &g * av);
                }
                Op::Div(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    accumulate(&mut grads, *a, &g / bv);
                    let gb = -(&g * av) / (bv * bv);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Scale(a, c) => accumulate(&mut grads, *a, &g * *c),
                Op::AddScalar(a) => accumulate(&mut grads, *a, g.clone()),
                Op::Square(a) => {
                    let av = self.value(*a);
                    accumulate(&mut grads, *a, &g * &(av * 2.0));
                }
                Op::Gelu(a) => {
                    let d = self.value(*a).mapv(gelu_prime);
                    accumulate(&mut grads, *a, &g * &d);
                }
                Op::GeluPrime(a) => {
                    let d = self.value(*a).mapv(gelu_second);
                    accumulate(&mut grads, *a, &g * &d);
                }
                Op::Sigmoid(a) => {
                    let d = node.value.mapv(|v| v * (1.0 - v));
                    accumulate(&mut grads, *a, &g * &d);
                }
                Op::RepeatRows(a, times) => {
                    let (n, c) = self.value(*a).dim();
                    let mut out = Array2::zeros((n, c));
                    for i in 0..n {
                        let mut row = out.row_mut(i);
                        for k in 0..*times {
                            row += &g.row(i * times + k);
                        }
                    }
                    accumulate(&mut grads, *a, out);
                }
                Op::Sum(a) => {
                    let shape = self.value(*a).dim();
                    accumulate(&mut grads, *a, Array2::from_elem(shape, g[[0, 0]]));
                }
                Op::PairDistances(points, pairs) => {
                    let p = self.value(*points);
                    let mut out = Array2::zeros(p.dim());
                    for (r, &(i, j)) in pairs.iter().enumerate() {
                        let d = node.value[[r, 0]];
                        if d == 0.0 {
                            continue;
                        }
                        let coef = g[[r, 0]] / d;
                        for a in 0..p.ncols() {
                            let diff = coef * (p[[i, a]] - p[[j, a]]);
                            out[[i, a]] += diff;
                            out[[j, a]] -= diff;
                        }
                    }
                    accumulate(&mut grads, *points, out);
                }
                Op::BlockGram(t, block) => {
                    let tv = self.value(*t);
                    let c = tv.ncols();
                    let mut out = Array2::zeros(tv.dim());
                    for b in 0..g.nrows() {
                        let gb =
                            Array2::from_shape_vec((c, c), g.row(b).to_vec()).expect("c*c entries");
                        let sym = &gb + &gb.t();
                        let rows = s![b * block..(b + 1) * block, ..];
                        out.slice_mut(rows).assign(&tv.slice(rows).dot(&sym));
                    }
                    accumulate(&mut grads, *t, out);
                }
            }
            grads[idx] = Some(g);
        }
        Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.dim()).collect(),
        }
    }
}
