use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;

/// Kind of the operation that produced a tape entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Tanh,
    Sin,
    Square,
}

/// One recorded operation: up to two operands and the local partial
/// derivative of the result with respect to each.
#[derive(Debug, Clone, Copy)]
pub struct TapeNode {
    pub op: OpKind,
    pub operands: [u32; 2],
    pub partials: [f64; 2],
    pub arity: u8,
}

/// Append-only Wengert list. Nodes are stored in evaluation order, which is a
/// topological order, so a single reverse pass computes all adjoints.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<TapeNode>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self { nodes: RefCell::new(Vec::with_capacity(capacity)) }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn leaf(&self, value: f64) -> Var<'_> {
        let index = self.push(TapeNode { op: OpKind::Leaf, operands: [0; 2], partials: [0.0; 2], arity: 0 });
        Var { tape: Some(self), index, value }
    }

    fn push(&self, node: TapeNode) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let index = u32::try_from(nodes.len()).expect("tape exceeds u32 nodes");
        nodes.push(node);
        index
    }

    /// Adjoints of every node with respect to `output`.
    pub fn adjoints(&self, output: &Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        let Some(out) = output.index() else {
            return adj;
        };
        adj[out as usize] = 1.0;
        for i in (0..=out as usize).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = &nodes[i];
            for k in 0..node.arity as usize {
                adj[node.operands[k] as usize] += a * node.partials[k];
            }
        }
        adj
    }
}

/// A scalar that records its provenance on a [`Tape`].
///
/// Values created through [`Scalar::constant`] carry no tape and are folded
/// into their consumers' partials without adding nodes.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: Option<&'t Tape>,
    index: u32,
    value: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index() {
            Some(i) => write!(f, "Var#{i}({})", self.value),
            None => write!(f, "Const({})", self.value),
        }
    }
}

impl Var<'_> {
    pub fn index(&self) -> Option<u32> {
        self.tape.map(|_| self.index)
    }

    fn unary(self, op: OpKind, value: f64, partial: f64) -> Self {
        match self.tape {
            None => Var { tape: None, index: 0, value },
            Some(tape) => {
                let index = tape.push(TapeNode {
                    op,
                    operands: [self.index, 0],
                    partials: [partial, 0.0],
                    arity: 1,
                });
                Var { tape: Some(tape), index, value }
            }
        }
    }

    fn binary(self, rhs: Self, op: OpKind, value: f64, dl: f64, dr: f64) -> Self {
        match (self.tape, rhs.tape) {
            (None, None) => Var { tape: None, index: 0, value },
            (Some(_), None) => self.unary(op, value, dl),
            (None, Some(_)) => rhs.unary(op, value, dr),
            (Some(t), Some(_)) => {
                let index = t.push(TapeNode {
                    op,
                    operands: [self.index, rhs.index],
                    partials: [dl, dr],
                    arity: 2,
                });
                Var { tape: Some(t), index, value }
            }
        }
    }
}

impl Add for Var<'_> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, OpKind::Add, self.value + rhs.value, 1.0, 1.0)
    }
}

impl Sub for Var<'_> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, OpKind::Sub, self.value - rhs.value, 1.0, -1.0)
    }
}

impl Mul for Var<'_> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, OpKind::Mul, self.value * rhs.value, rhs.value, self.value)
    }
}

impl Div for Var<'_> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        self.binary(rhs, OpKind::Div, q, 1.0 / rhs.value, -q / rhs.value)
    }
}

impl Neg for Var<'_> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(OpKind::Neg, -self.value, -1.0)
    }
}

impl Scalar for Var<'_> {
    fn constant(value: f64) -> Self {
        Var { tape: None, index: 0, value }
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn tanh(self) -> Self {
        let y = self.value.tanh();
        self.unary(OpKind::Tanh, y, 1.0 - y * y)
    }

    fn sin(self) -> Self {
        self.unary(OpKind::Sin, self.value.sin(), self.value.cos())
    }

    fn square(self) -> Self {
        self.unary(OpKind::Square, self.value * self.value, 2.0 * self.value)
    }
}
