use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Learnable tensor with its gradient and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Tensor2<T>,
    pub grad: Tensor2<T>,
    pub adam_m: Tensor2<T>,
    pub adam_v: Tensor2<T>,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(name: impl Into<String>, value: Tensor2<T>) -> Self {
        let (r, c) = value.shape();
        Self {
            name: name.into(),
            grad: Tensor2::zeros(r, c),
            adam_m: Tensor2::zeros(r, c),
            adam_v: Tensor2::zeros(r, c),
            value,
        }
    }

    pub fn numel(&self) -> usize {
        self.value.rows() * self.value.cols()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

/// Anything that owns parameters (and optionally non-learnable buffers).
pub trait Module<T: Scalar> {
    fn for_each_param(&self, f: &mut dyn FnMut(&Parameter<T>));
    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>));

    fn for_each_buffer(&self, _f: &mut dyn FnMut(&str, &Tensor2<T>)) {}
    fn for_each_buffer_mut(&mut self, _f: &mut dyn FnMut(&str, &mut Tensor2<T>)) {}

    fn zero_grad(&mut self) {
        self.for_each_param_mut(&mut |p| p.zero_grad());
    }

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.for_each_param(&mut |p| n += p.numel());
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Param,
    Buffer,
}

/// One named tensor of a model snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEntry<T> {
    pub name: String,
    pub kind: EntryKind,
    pub value: Tensor2<T>,
}

/// Snapshot of every parameter value and buffer in visiting order.
pub fn export_state<T: Scalar, M: Module<T> + ?Sized>(m: &M) -> Vec<StateEntry<T>> {
    let mut out = Vec::new();
    m.for_each_param(&mut |p| {
        out.push(StateEntry {
            name: p.name.clone(),
            kind: EntryKind::Param,
            value: p.value.clone(),
        })
    });
    m.for_each_buffer(&mut |name, b| {
        out.push(StateEntry {
            name: name.into(),
            kind: EntryKind::Buffer,
            value: b.clone(),
        })
    });
    out
}

/// Restores a snapshot produced by [`export_state`]. Every parameter and
/// buffer must be present with a matching shape.
pub fn import_state<T: Scalar, M: Module<T> + ?Sized>(m: &mut M, entries: &[StateEntry<T>]) -> Result<()> {
    let find = |name: &str, kind: EntryKind| entries.iter().find(|e| e.name == name && e.kind == kind);
    let mut err = None;
    m.for_each_param_mut(&mut |p| match find(&p.name, EntryKind::Param) {
        Some(e) if e.value.shape() == p.value.shape() => p.value = e.value.clone(),
        _ => {
            err.get_or_insert(Error::UnknownParameter(p.name.clone()));
        }
    });
    m.for_each_buffer_mut(&mut |name, b| match find(name, EntryKind::Buffer) {
        Some(e) if e.value.shape() == b.shape() => *b = e.value.clone(),
        _ => {
            err.get_or_insert(Error::UnknownParameter(name.into()));
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Parameter counts grouped by the first `depth` dot-separated name segments.
pub fn param_breakdown<T: Scalar, M: Module<T> + ?Sized>(m: &M, depth: usize) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = Vec::new();
    m.for_each_param(&mut |p| {
        let key: String = {
            let parts: Vec<&str> = p.name.split('.').take(depth).collect();
            parts.join(".")
        };
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, n)) => *n += p.numel(),
            None => out.push((key, p.numel())),
        }
    });
    out
}
