"""Bipartite decoding graph with the canonical edge ordering used everywhere.

Edges are numbered by a row-major scan of H (check j ascending, then variable
i ascending), which fixes every float summation order in the decoders and
makes results bit-reproducible across runs and worker counts.
"""

from __future__ import annotations

import numpy as np


class EmptyMatrix(ValueError):
    pass


class NotAnEdge(KeyError):
    pass


class TannerGraph:
    """Tanner graph of a parity-check matrix, plus cached decoder index arrays."""

    def __init__(self, H):
        a = H.a
        if not a.any():
            raise EmptyMatrix("parity-check matrix has no nonzero entries")
        self.n_var = a.shape[1]
        self.n_chk = a.shape[0]
        chk, var = np.nonzero(a)  # row-major: canonical edge order
        self.evar = var.astype(np.int64)
        self.echk = chk.astype(np.int64)
        self.E = int(var.size)
        self.edges = list(zip(self.evar.tolist(), self.echk.tolist()))
        self.var_adj = [[] for _ in range(self.n_var)]
        self.chk_adj = [[] for _ in range(self.n_chk)]
        for e, (i, j) in enumerate(self.edges):
            self.var_adj[i].append(e)
            self.chk_adj[j].append(e)
        self.isolated_variables = [i for i in range(self.n_var) if not self.var_adj[i]]
        self.isolated_checks = [j for j in range(self.n_chk) if not self.chk_adj[j]]
        self.has_isolated = bool(self.isolated_variables or self.isolated_checks)
        self._edge_id = {(i, j): e for e, (i, j) in enumerate(self.edges)}
        self._H_shape = a.shape

        # Check-side grouping: edges are already contiguous per check.
        self.chk_deg = np.bincount(self.echk, minlength=self.n_chk)
        self.chk_starts = np.concatenate([[0], np.cumsum(self.chk_deg)[:-1]]).astype(np.int64)
        self.chk_pos = np.arange(self.E) - np.repeat(self.chk_starts, self.chk_deg)

        # Variable-side grouping: permutation into (var, chk) order.
        self.var_perm = np.lexsort((self.echk, self.evar)).astype(np.int64)
        self.var_deg = np.bincount(self.evar, minlength=self.n_var)
        self.var_starts = np.concatenate([[0], np.cumsum(self.var_deg)[:-1]]).astype(np.int64)
        self.evar_sorted = self.evar[self.var_perm]

        # Shift index pairs for exact leave-one-out products within check groups.
        maxdeg = int(self.chk_deg.max(initial=0))
        self.maxdeg = maxdeg
        size_at_edge = np.repeat(self.chk_deg, self.chk_deg)
        self._pre_shifts = []
        self._suf_shifts = []
        for s in range(1, maxdeg):
            dst = np.nonzero(self.chk_pos >= s)[0]
            self._pre_shifts.append((dst, dst - s))
            dst = np.nonzero(self.chk_pos <= size_at_edge - 1 - s)[0]
            self._suf_shifts.append((dst, dst + s))

    def edge_index(self, i, j):
        """Canonical id of edge (variable i, check j)."""
        try:
            return self._edge_id[(i, j)]
        except KeyError:
            raise NotAnEdge(f"H[{j},{i}] is not set") from None

    def edge_endpoints(self, e):
        return self.edges[e]

    def to_matrix(self):
        """Reconstruct H from the edge list."""
        a = np.zeros(self._H_shape, dtype=np.uint8)
        a[self.echk, self.evar] = 1
        return a


def build_graph(H):
    return TannerGraph(H)
