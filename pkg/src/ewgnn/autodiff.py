"""Reverse-mode differentiation on numpy arrays with an explicit tape.

Every helper below accepts either plain ndarrays or :class:`Var` nodes; with
plain inputs it just computes, so the decoders are written once and run both
in fast inference mode and in recorded training mode.  Nodes are appended to
the tape in creation order, which is a topological order by construction.
"""

from __future__ import annotations

import numpy as np


class UnsupportedNode(TypeError):
    pass


class Tape:
    """Append-only record of operations for one backward pass."""

    def __init__(self):
        self.nodes = []


class Var:
    """A tape node holding a float64 array value and, after backward, its grad."""

    __slots__ = ("value", "grad", "tape", "_parents", "_vjp")

    def __init__(self, value, tape, parents=(), vjp=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.tape = tape
        self._parents = parents
        self._vjp = vjp
        tape.nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, o):
        return add(self, o)

    __radd__ = __add__

    def __sub__(self, o):
        return sub(self, o)

    def __rsub__(self, o):
        return sub(o, self)

    def __mul__(self, o):
        return mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return div(self, o)

    def __rtruediv__(self, o):
        return div(o, self)

    def __neg__(self):
        return neg(self)


def leaf(value, tape):
    """A differentiable input (parameter) on the tape."""
    return Var(value, tape)


def val(x):
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=np.float64)


def _tape_of(*xs):
    t = None
    for x in xs:
        if isinstance(x, Var):
            if t is None:
                t = x.tape
            elif x.tape is not t:
                raise UnsupportedNode("operands recorded on different tapes")
    return t


def _unbroadcast(g, shape):
    """Sum g down to `shape` (reverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def backward(root, free_memory=True):
    """Reverse accumulation from a scalar (or any) root over its tape.

    With free_memory (default), interior gradients and vjp closures are
    dropped as soon as they are consumed, bounding the peak footprint; leaf
    gradients survive in `.grad`.
    """
    tape = root.tape
    for n in tape.nodes:
        n.grad = None
    root.grad = np.ones_like(root.value)
    for node in reversed(tape.nodes):
        if node.grad is None or node._vjp is None:
            continue
        grads = node._vjp(node.grad)
        for p, g in zip(node._parents, grads):
            if isinstance(p, Var) and g is not None:
                p.grad = g if p.grad is None else p.grad + g
        if free_memory:
            node.grad = None
            node._vjp = None


def _op(value, parents, vjp):
    t = _tape_of(*parents)
    if t is None:
        return value
    return Var(value, t, parents=tuple(parents), vjp=vjp)


# -- elementwise arithmetic -------------------------------------------------


def add(a, b):
    va, vb = val(a), val(b)
    return _op(va + vb, (a, b), lambda g: (_unbroadcast(g, va.shape), _unbroadcast(g, vb.shape)))


def sub(a, b):
    va, vb = val(a), val(b)
    return _op(va - vb, (a, b), lambda g: (_unbroadcast(g, va.shape), _unbroadcast(-g, vb.shape)))


def mul(a, b):
    va, vb = val(a), val(b)
    return _op(va * vb, (a, b), lambda g: (_unbroadcast(g * vb, va.shape), _unbroadcast(g * va, vb.shape)))


def div(a, b):
    va, vb = val(a), val(b)
    out = va / vb
    return _op(
        out,
        (a, b),
        lambda g: (_unbroadcast(g / vb, va.shape), _unbroadcast(-g * out / vb, vb.shape)),
    )


def neg(a):
    va = val(a)
    return _op(-va, (a,), lambda g: (-g,))


def abs_(a):
    va = val(a)
    s = np.sign(va)  # subgradient 0 at 0
    return _op(np.abs(va), (a,), lambda g: (g * s,))


def tanh(a):
    va = val(a)
    t = np.tanh(va)
    return _op(t, (a,), lambda g: (g * (1.0 - t * t),))


def exp(a):
    va = val(a)
    e = np.exp(va)
    return _op(e, (a,), lambda g: (g * e,))


def log(a):
    va = val(a)
    return _op(np.log(va), (a,), lambda g: (g / va,))


def softplus(a):
    """log(1 + e^x), evaluated stably."""
    va = val(a)
    out = np.logaddexp(0.0, va)
    sig = _sigmoid(va)
    return _op(out, (a,), lambda g: (g * sig,))


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def elu(a, beta):
    va = val(a)
    neg_branch = beta * np.expm1(np.minimum(va, 0.0))  # 0 where va >= 0
    out = np.maximum(va, 0.0)
    out += neg_branch
    if beta == 1.0:
        # derivative recoverable from the output: min(out, 0) + 1
        def vjp(g):
            return (g * (np.minimum(out, 0.0) + 1.0),)
    else:
        dgrad = neg_branch + beta  # beta * e^x on the left branch
        np.copyto(dgrad, 1.0, where=va > 0.0)

        def vjp(g):
            return (g * dgrad,)

    return _op(out, (a,), vjp)


def clip_fc(a, alpha):
    """The totalizing clip f_c: bound to [alpha, 2 - alpha]; subgradient 0 outside."""
    va = val(a)
    out = np.clip(va, alpha, 2.0 - alpha)
    inside = ((va >= alpha) & (va <= 2.0 - alpha)).astype(np.float64)
    return _op(out, (a,), lambda g: (g * inside,))


def where_mask(mask, a, b):
    """Select by a constant boolean mask (no gradient through the mask)."""
    va, vb = val(a), val(b)
    out = np.where(mask, va, vb)
    return _op(
        out,
        (a, b),
        lambda g: (
            _unbroadcast(np.where(mask, g, 0.0), va.shape),
            _unbroadcast(np.where(mask, 0.0, g), vb.shape),
        ),
    )


# -- structural ops ---------------------------------------------------------


def reshape(a, shape):
    va = val(a)
    old = va.shape
    return _op(va.reshape(shape), (a,), lambda g: (g.reshape(old),))


def stack_last(parts):
    """Stack equally-shaped arrays along a new trailing axis."""
    vals = [val(p) for p in parts]
    out = np.stack(vals, axis=-1)
    return _op(out, tuple(parts), lambda g: tuple(g[..., i] for i in range(len(vals))))


def matmul(a, b):
    va, vb = val(a), val(b)
    return _op(va @ vb, (a, b), lambda g: (g @ vb.T, va.T @ g))


def affine(x, W, b):
    """x @ W.T + b for a (out, in) weight matrix; fused to keep the tape lean."""
    vx, vw, vb = val(x), val(W), val(b)
    out = vx @ vw.T
    out += vb
    return _op(
        out,
        (x, W, b),
        lambda g: (g @ vw, g.T @ vx, g.sum(axis=0)),
    )


def transpose(a):
    va = val(a)
    return _op(va.T, (a,), lambda g: (g.T,))


def sum_all(a):
    va = val(a)
    shape = va.shape
    return _op(np.sum(va), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def gather(a, idx):
    """out[..., e] = a[..., idx[e]] along the last axis."""
    va = val(a)
    idx = np.asarray(idx)
    out = va[..., idx]

    def vjp(g):
        ga = np.zeros_like(va)
        if va.ndim == 1:
            np.add.at(ga, idx, g)
        else:
            flat = ga.reshape(-1, va.shape[-1])
            gflat = g.reshape(-1, g.shape[-1])
            rows = np.arange(flat.shape[0])[:, None]
            np.add.at(flat, (rows, idx[None, :]), gflat)
        return (ga,)

    return _op(out, (a,), vjp)


def expand_to_edges(a, graph):
    """Broadcast a per-variable array (..., n) to edges (..., E) by edge variable.

    Backward is the exact per-variable segment sum in canonical order.
    """
    va = val(a)
    out = va[..., graph.evar]

    def vjp(g):
        return (_var_segment_sum_value(g, graph),)

    return _op(out, (a,), vjp)


def _var_segment_sum_value(x, graph):
    xs = x[..., graph.var_perm]
    out = np.zeros(x.shape[:-1] + (graph.n_var,))
    nonempty = graph.var_deg > 0
    if nonempty.any():
        out[..., nonempty] = np.add.reduceat(xs, graph.var_starts[nonempty], axis=-1)
    return out


def var_segment_sum(a, graph):
    """Sum a per-edge array (..., E) over each variable's incident edges."""
    va = val(a)
    out = _var_segment_sum_value(va, graph)

    def vjp(g):
        gx = np.empty_like(va)
        gx[..., graph.var_perm] = np.repeat(g, graph.var_deg, axis=-1)
        return (gx,)

    return _op(out, (a,), vjp)


def segment_sum(a, starts, sizes):
    """Sum contiguous groups along the last axis; empty groups contribute 0."""
    va = val(a)
    sizes = np.asarray(sizes)
    nonempty = sizes > 0
    ne_starts = np.asarray(starts)[nonempty]
    shape = va.shape[:-1] + (len(sizes),)
    out = np.zeros(shape)
    if ne_starts.size:
        out[..., nonempty] = np.add.reduceat(va, ne_starts, axis=-1)

    def vjp(g):
        return (np.repeat(g, sizes, axis=-1),)

    return _op(out, (a,), vjp)


def _loo_value(t, graph):
    """Leave-one-out products within check groups via exact shift products."""
    pre = np.ones_like(t)
    suf = np.ones_like(t)
    for dst, src in graph._pre_shifts:
        pre[..., dst] *= t[..., src]
    for dst, src in graph._suf_shifts:
        suf[..., dst] *= t[..., src]
    return pre * suf


def loo_prod(a, graph):
    """For each edge, the product of the other edges' values in its check group.

    Backward uses the division identity on zero-free groups and an exact
    per-group fallback where zeros occur (zeros are measure-zero in decoding).
    """
    va = val(a)
    out = _loo_value(va, graph)

    def vjp(g):
        t = va
        go = g * out
        iszero = t == 0.0
        zc_groups = segment_sum(iszero.astype(np.float64), graph.chk_starts, graph.chk_deg)
        zc_e = np.repeat(zc_groups, graph.chk_deg, axis=-1)
        S = np.repeat(segment_sum(go, graph.chk_starts, graph.chk_deg), graph.chk_deg, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            grad = np.where(zc_e == 0, (S - go) / np.where(iszero, 1.0, t), 0.0)
        if np.any(zc_groups > 0):
            grad = np.atleast_2d(grad)
            t2 = np.atleast_2d(t)
            g2 = np.atleast_2d(g)
            rows, groups = np.nonzero(np.atleast_2d(zc_groups) > 0)
            for r, grp in zip(rows, groups):
                s0 = graph.chk_starts[grp]
                d = graph.chk_deg[grp]
                tt = t2[r, s0 : s0 + d]
                gg = g2[r, s0 : s0 + d]
                for jj in range(d):
                    acc = 0.0
                    for ii in range(d):
                        if ii == jj:
                            continue
                        p = 1.0
                        for ll in range(d):
                            if ll != ii and ll != jj:
                                p *= tt[ll]
                        acc += gg[ii] * p
                    grad[r, s0 + jj] = acc
            grad = grad.reshape(va.shape)
        return (grad,)

    return _op(out, (a,), vjp)
