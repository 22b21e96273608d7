"""Minimal reverse-mode differentiation on an append-only tape.

Values are eager float64 matrices; every tensor on the tape is 2-D,
with scalars as (1, 1) and column vectors as (d, 1).  A matrix may hold
a batch as columns, in which case ``add``/``subtract`` broadcast
(d, 1) bias terms across columns and the corresponding adjoint sums
columns back.

The primitive set is exactly what the recurrent gain network, the
filter recursion, and the squared-error loss need.  Two primitives go
beyond textbook elementwise/matmul rules:

* ``gain_apply`` applies a per-column flattened (m, n) gain to a
  per-column innovation - the learned-filter update step.
* ``model_map`` pushes a column batch through an external state-space
  map; its adjoint is the transposed-Jacobian product, with Jacobians
  supplied by the model (analytic or finite-difference).

Tapes are strictly single-threaded; parallelism happens across
independent tapes with gradient reduction by summation.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .exceptions import ShapeError


class Var:
    """A value on a tape, addressed by node index."""

    __slots__ = ("tape", "index", "value", "grad")

    def __init__(self, tape: "Tape", index: int, value: np.ndarray):
        self.tape = tape
        self.index = index
        self.value = value
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def __add__(self, other: "Var") -> "Var":
        return add(self, other)

    def __sub__(self, other: "Var") -> "Var":
        return subtract(self, other)

    def __matmul__(self, other: "Var") -> "Var":
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Var(#{self.index}, shape={self.value.shape})"


class _Node:
    __slots__ = ("op", "inputs", "value", "aux")

    def __init__(self, op: str, inputs: tuple[int, ...], value: np.ndarray, aux=None):
        self.op = op
        self.inputs = inputs
        self.value = value
        self.aux = aux


class Tape:
    """Append-only record of primitive applications, in topological order."""

    def __init__(self):
        self.nodes: list[_Node] = []
        self._vars: list[Var] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def reset(self) -> None:
        """Drop all nodes so the tape can host a fresh forward pass."""
        self.nodes.clear()
        self._vars.clear()

    def op_log(self) -> list[str]:
        """Names of recorded operations, in execution order."""
        return [n.op for n in self.nodes]

    def _record(self, op: str, inputs: tuple[int, ...], value: np.ndarray, aux=None) -> Var:
        node = _Node(op, inputs, value, aux)
        self.nodes.append(node)
        var = Var(self, len(self.nodes) - 1, value)
        self._vars.append(var)
        return var

    def leaf(self, value, name: str | None = None) -> Var:
        arr = _as_tensor(value)
        return self._record("leaf", (), arr, aux=name)


def _as_tensor(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ShapeError(f"tape tensors are 2-D, got ndim={arr.ndim}")
    return arr


def _same_tape(*vars_: Var) -> Tape:
    tape = vars_[0].tape
    for v in vars_[1:]:
        if v.tape is not tape:
            raise ValueError("cannot mix variables from different tapes")
    return tape


def _broadcastable(a: np.ndarray, b: np.ndarray) -> bool:
    # only column broadcast (d,1) against (d,c) is supported, either side
    return a.shape[0] == b.shape[0] and (a.shape[1] == b.shape[1]
                                         or a.shape[1] == 1 or b.shape[1] == 1)


def _reduce_to(grad: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    if shape[1] == 1 and grad.shape[0] == shape[0]:
        return grad.sum(axis=1, keepdims=True)
    raise ShapeError(f"cannot reduce gradient {grad.shape} to {shape}")


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

def add(a: Var, b: Var) -> Var:
    tape = _same_tape(a, b)
    if not _broadcastable(a.value, b.value):
        raise ShapeError(f"add: incompatible shapes {a.value.shape} and {b.value.shape}")
    return tape._record("add", (a.index, b.index), a.value + b.value)


def subtract(a: Var, b: Var) -> Var:
    tape = _same_tape(a, b)
    if not _broadcastable(a.value, b.value):
        raise ShapeError(f"subtract: incompatible shapes {a.value.shape} and {b.value.shape}")
    return tape._record("subtract", (a.index, b.index), a.value - b.value)


def matmul(a: Var, b: Var) -> Var:
    tape = _same_tape(a, b)
    if a.value.shape[1] != b.value.shape[0]:
        raise ShapeError(f"matmul: {a.value.shape} @ {b.value.shape}")
    return tape._record("matmul", (a.index, b.index), a.value @ b.value)


def hadamard(a: Var, b: Var) -> Var:
    tape = _same_tape(a, b)
    if a.value.shape != b.value.shape:
        raise ShapeError(f"hadamard: {a.value.shape} vs {b.value.shape}")
    return tape._record("hadamard", (a.index, b.index), a.value * b.value)


def scalar_multiply(c: float, a: Var) -> Var:
    return a.tape._record("scalar_multiply", (a.index,), float(c) * a.value, aux=float(c))


def concat(parts: list[Var]) -> Var:
    """Stack along rows; every part must share the column count."""
    tape = _same_tape(*parts)
    cols = parts[0].value.shape[1]
    for p in parts:
        if p.value.shape[1] != cols:
            raise ShapeError("concat: mismatched column counts")
    value = np.concatenate([p.value for p in parts], axis=0)
    aux = [p.value.shape[0] for p in parts]
    return tape._record("concat", tuple(p.index for p in parts), value, aux=aux)


def slice_rows(a: Var, start: int, stop: int) -> Var:
    if not 0 <= start < stop <= a.value.shape[0]:
        raise ShapeError(f"slice_rows: [{start}:{stop}] outside 0..{a.value.shape[0]}")
    return a.tape._record("slice_rows", (a.index,), a.value[start:stop].copy(),
                          aux=(start, stop, a.value.shape[0]))


def tanh(a: Var) -> Var:
    return a.tape._record("tanh", (a.index,), np.tanh(a.value))


def sigmoid(a: Var) -> Var:
    return a.tape._record("sigmoid", (a.index,), 1.0 / (1.0 + np.exp(-a.value)))


def square(a: Var) -> Var:
    return a.tape._record("square", (a.index,), a.value ** 2)


def reduce_sum(a: Var) -> Var:
    return a.tape._record("reduce_sum", (a.index,), np.array([[a.value.sum()]]))


def reduce_mean(a: Var) -> Var:
    return a.tape._record("reduce_mean", (a.index,), np.array([[a.value.mean()]]),
                          aux=a.value.size)


def l2_norm_sq(a: Var) -> Var:
    return a.tape._record("l2_norm_sq", (a.index,), np.array([[np.sum(a.value ** 2)]]))


def gain_apply(K_flat: Var, dy: Var, m: int, n: int) -> Var:
    """Per-column K @ dy where column b of K_flat is a row-major (m, n) gain.

    For a single column this is exactly reshape-then-matmul; with a
    batch it applies each column's own gain to its own innovation.
    """
    tape = _same_tape(K_flat, dy)
    B = K_flat.value.shape[1]
    if K_flat.value.shape[0] != m * n:
        raise ShapeError(f"gain_apply: K rows {K_flat.value.shape[0]} != m*n={m * n}")
    if dy.value.shape != (n, B):
        raise ShapeError(f"gain_apply: dy shape {dy.value.shape} != ({n}, {B})")
    K3 = K_flat.value.T.reshape(B, m, n)
    value = np.einsum("bmn,nb->mb", K3, dy.value)
    return tape._record("gain_apply", (K_flat.index, dy.index), value, aux=(m, n))


def model_map(x: Var, func: Callable[[np.ndarray], np.ndarray],
              jacobian: Callable[[np.ndarray], np.ndarray],
              out_dim: int, tag: str = "model_map") -> Var:
    """Push a column batch through an external map with a known Jacobian.

    The adjoint is J(x_b)^T g_b per column; the Jacobian callable is
    evaluated lazily during the backward pass.
    """
    X = x.value
    value = np.column_stack([func(X[:, j]) for j in range(X.shape[1])])
    if value.shape[0] != out_dim:
        raise ShapeError(f"{tag}: map returned dim {value.shape[0]}, expected {out_dim}")
    if not np.all(np.isfinite(value)):
        raise FloatingPointError(f"{tag}: map produced non-finite values")
    return x.tape._record("model_map", (x.index,), value, aux=jacobian)


def detach(a: Var) -> Var:
    """Copy the value onto a fresh leaf, severing the gradient link."""
    return a.tape.leaf(a.value.copy())


# ---------------------------------------------------------------------------
# Backward pass
# ---------------------------------------------------------------------------

def _acc(grads: list, idx: int, delta: np.ndarray) -> None:
    if grads[idx] is None:
        grads[idx] = delta.copy()
    else:
        grads[idx] += delta


def backward(root: Var) -> None:
    """Reverse sweep from a scalar root; adjoints land on every Var.grad.

    Each node is visited exactly once; a leaf used several times (shared
    weights across time) accumulates its adjoints additively.
    """
    if root.value.shape != (1, 1):
        raise ValueError(f"backward root must be scalar (1,1), got {root.value.shape}")
    tape = root.tape
    nodes = tape.nodes
    grads: list[Optional[np.ndarray]] = [None] * len(nodes)
    grads[root.index] = np.ones((1, 1))

    for idx in range(root.index, -1, -1):
        g = grads[idx]
        if g is None:
            continue
        node = nodes[idx]
        op = node.op
        if op == "leaf":
            continue
        elif op == "add":
            ia, ib = node.inputs
            _acc(grads, ia, _reduce_to(g, nodes[ia].value.shape))
            _acc(grads, ib, _reduce_to(g, nodes[ib].value.shape))
        elif op == "subtract":
            ia, ib = node.inputs
            _acc(grads, ia, _reduce_to(g, nodes[ia].value.shape))
            _acc(grads, ib, _reduce_to(-g, nodes[ib].value.shape))
        elif op == "matmul":
            ia, ib = node.inputs
            _acc(grads, ia, g @ nodes[ib].value.T)
            _acc(grads, ib, nodes[ia].value.T @ g)
        elif op == "hadamard":
            ia, ib = node.inputs
            _acc(grads, ia, g * nodes[ib].value)
            _acc(grads, ib, g * nodes[ia].value)
        elif op == "scalar_multiply":
            _acc(grads, node.inputs[0], node.aux * g)
        elif op == "concat":
            offset = 0
            for inp, rows in zip(node.inputs, node.aux):
                _acc(grads, inp, g[offset:offset + rows])
                offset += rows
        elif op == "slice_rows":
            start, stop, total_rows = node.aux
            full = np.zeros((total_rows, g.shape[1]))
            full[start:stop] = g
            _acc(grads, node.inputs[0], full)
        elif op == "tanh":
            _acc(grads, node.inputs[0], g * (1.0 - node.value ** 2))
        elif op == "sigmoid":
            _acc(grads, node.inputs[0], g * node.value * (1.0 - node.value))
        elif op == "square":
            _acc(grads, node.inputs[0], g * 2.0 * nodes[node.inputs[0]].value)
        elif op == "reduce_sum":
            src = nodes[node.inputs[0]].value
            _acc(grads, node.inputs[0], np.full(src.shape, g[0, 0]))
        elif op == "reduce_mean":
            src = nodes[node.inputs[0]].value
            _acc(grads, node.inputs[0], np.full(src.shape, g[0, 0] / node.aux))
        elif op == "l2_norm_sq":
            _acc(grads, node.inputs[0], 2.0 * g[0, 0] * nodes[node.inputs[0]].value)
        elif op == "gain_apply":
            m, n = node.aux
            iK, idy = node.inputs
            Kv = nodes[iK].value
            dyv = nodes[idy].value
            B = Kv.shape[1]
            K3 = Kv.T.reshape(B, m, n)
            _acc(grads, iK, np.einsum("mb,nb->bmn", g, dyv).reshape(B, m * n).T)
            _acc(grads, idy, np.einsum("bmn,mb->nb", K3, g))
        elif op == "model_map":
            jac = node.aux
            X = nodes[node.inputs[0]].value
            out = np.empty_like(X)
            for j in range(X.shape[1]):
                out[:, j] = jac(X[:, j]).T @ g[:, j]
            _acc(grads, node.inputs[0], out)
        else:  # pragma: no cover - every op above is exhaustive
            raise RuntimeError(f"unknown op {op!r}")

    for var in tape._vars:
        if var.index < len(grads):
            var.grad = grads[var.index]
