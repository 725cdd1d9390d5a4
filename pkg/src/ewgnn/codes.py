"""GF(2) linear algebra, BCH / regular-LDPC construction, encoding, alist I/O."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import derive_stream


class LengthMismatch(ValueError):
    pass


class RankDeficient(ValueError):
    pass


class InvalidParameter(ValueError):
    pass


class ConstructionFailed(RuntimeError):
    pass


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class DegreeMismatch(ParseError):
    pass


# ---------------------------------------------------------------------------
# GF(2) matrices


class Gf2Matrix:
    """Dense binary matrix; entries live in {0,1} as uint8."""

    def __init__(self, bits):
        a = np.array(bits, dtype=np.uint8)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise InvalidParameter(f"need a 2-D nonempty matrix, got shape {a.shape}")
        if not np.all((a == 0) | (a == 1)):
            raise InvalidParameter("entries must be 0 or 1")
        self.a = a

    @property
    def rows(self):
        return self.a.shape[0]

    @property
    def cols(self):
        return self.a.shape[1]

    def __eq__(self, other):
        return isinstance(other, Gf2Matrix) and np.array_equal(self.a, other.a)

    def __repr__(self):
        return f"Gf2Matrix({self.rows}x{self.cols})"

    def mul(self, other):
        return Gf2Matrix((self.a.astype(np.int64) @ other.a.astype(np.int64)) % 2)

    def mul_vec(self, v):
        v = np.asarray(v, dtype=np.int64)
        return (self.a.astype(np.int64) @ v) % 2

    def transpose(self):
        return Gf2Matrix(self.a.T)


def row_reduce_gf2(M):
    """Reduced row-echelon form over GF(2).

    Returns (reduced, pivot_cols, rank); the row space is preserved.
    """
    a = M.a.copy()
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hit = np.nonzero(a[r:, c])[0]
        if hit.size == 0:
            continue
        p = r + hit[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        others = np.nonzero(a[:, c])[0]
        for o in others:
            if o != r:
                a[o] ^= a[r]
        pivots.append(c)
        r += 1
    return Gf2Matrix(a), pivots, len(pivots)


def kernel_basis(M):
    """Basis of the right null space of M over GF(2), one row per basis vector."""
    red, pivots, rank = row_reduce_gf2(M)
    cols = M.cols
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, p in enumerate(pivots):
            basis[i, p] = red.a[r, f]
    if basis.shape[0] == 0:
        return None
    return Gf2Matrix(basis)


def generator_from_parity(H):
    """Systematic generator for a full-row-rank parity-check matrix.

    Columns are permuted (recorded in the returned permutation) so that the
    last n-k columns of H become invertible; the permutation is the identity
    when they already are.
    """
    red, pivots, rank = row_reduce_gf2(H)
    if rank < H.rows:
        raise RankDeficient(f"rank {rank} < {H.rows} rows")
    n = H.cols
    m = H.rows
    k = n - m
    # Prefer the identity permutation: usable iff the last m columns are invertible.
    _, _, tail_rank = row_reduce_gf2(Gf2Matrix(H.a[:, k:]))
    if tail_rank == m:
        perm = list(range(n))
        a = H.a
    else:
        # Move RREF pivot columns to the back, preserving relative order elsewhere.
        perm = [c for c in range(n) if c not in pivots] + list(pivots)
        a = red.a[:, perm]
    # Reduce [tail | full] so the right block becomes inv(tail) * matrix = [A | I_m].
    aug = np.concatenate([a[:, k:], a], axis=1)
    aug_red, aug_piv, _ = row_reduce_gf2(Gf2Matrix(aug))
    assert aug_piv[:m] == list(range(m))
    A = aug_red.a[:, m : m + k]
    G_perm = np.concatenate([np.eye(k, dtype=np.uint8), A.T], axis=1)
    inv = np.argsort(perm)
    return Gf2Matrix(G_perm[:, inv]), perm


@dataclass(frozen=True)
class Code:
    """A binary linear block code with its generator and parity-check matrices."""

    n: int
    k: int
    generator: Gf2Matrix
    parity: Gf2Matrix
    name: str = ""

    def __post_init__(self):
        G, H = self.generator, self.parity
        if G.rows != self.k or G.cols != self.n or H.cols != self.n:
            raise InvalidParameter("matrix shapes inconsistent with (n, k)")
        prod = (G.a.astype(np.int64) @ H.a.T.astype(np.int64)) % 2
        if prod.any():
            raise InvalidParameter("G H^T != 0")
        _, _, rg = row_reduce_gf2(G)
        _, _, rh = row_reduce_gf2(H)
        if rg != self.k or rh != self.n - self.k:
            raise InvalidParameter("rank conditions violated")


def encode(code, b):
    b = np.asarray(b, dtype=np.int64)
    if b.shape[-1] != code.k:
        raise LengthMismatch(f"message length {b.shape[-1]} != k={code.k}")
    return (b @ code.generator.a.astype(np.int64)) % 2


def syndrome(code, c):
    c = np.asarray(c, dtype=np.int64)
    if c.shape[-1] != code.n:
        raise LengthMismatch(f"word length {c.shape[-1]} != n={code.n}")
    return (c @ code.parity.a.T.astype(np.int64)) % 2


# ---------------------------------------------------------------------------
# Binary polynomials (coefficients lowest degree first)


@dataclass(frozen=True)
class Gf2Poly:
    coeffs: tuple

    def __post_init__(self):
        c = self.coeffs
        if c and c[-1] != 1 and any(c):
            raise InvalidParameter("leading coefficient must be 1")

    @property
    def degree(self):
        return len(self.coeffs) - 1 if any(self.coeffs) else -1


def _poly_trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def poly_mul(a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] ^= bj
    return _poly_trim(out)


def poly_mod(a, m):
    a = list(a)
    dm = len(_poly_trim(m)) - 1
    m = _poly_trim(m)
    while True:
        a = _poly_trim(a)
        da = len(a) - 1
        if da < dm:
            return a
        shift = da - dm
        for j, mj in enumerate(m):
            if mj:
                a[shift + j] ^= 1


# ---------------------------------------------------------------------------
# BCH construction over GF(2^m)

# One fixed primitive polynomial per field degree (bit i = coefficient of x^i).
PRIMITIVE_POLYS = {
    2: 0b111,            # x^2 + x + 1
    3: 0b1011,           # x^3 + x + 1
    4: 0b10011,          # x^4 + x + 1
    5: 0b100101,         # x^5 + x^2 + 1
    6: 0b1000011,        # x^6 + x + 1
    7: 0b10001001,       # x^7 + x^3 + 1
    8: 0b100011101,      # x^8 + x^4 + x^3 + x^2 + 1
    9: 0b1000010001,     # x^9 + x^4 + 1
    10: 0b10000001001,   # x^10 + x^3 + 1
}


def _gf2m_tables(m):
    """(exp, log) tables for GF(2^m) with the fixed primitive polynomial."""
    prim = PRIMITIVE_POLYS[m]
    size = 1 << m
    exp = [0] * (2 * size)
    log = [0] * size
    x = 1
    for i in range(size - 1):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & size:
            x ^= prim
    for i in range(size - 1, 2 * size):
        exp[i] = exp[i - (size - 1)]
    return exp, log


def cyclotomic_coset(s, n):
    """Coset {s, 2s, 4s, ...} mod n."""
    out = []
    x = s % n
    while x not in out:
        out.append(x)
        x = (2 * x) % n
    return sorted(out)


def _minimal_poly(coset, m):
    """Minimal polynomial of alpha^s over GF(2): prod (x - alpha^e) for e in coset."""
    exp, log = _gf2m_tables(m)
    n = (1 << m) - 1

    def gmul(a, b):
        if a == 0 or b == 0:
            return 0
        return exp[log[a] + log[b]]

    poly = [1]  # coefficients in GF(2^m), lowest degree first
    for e in coset:
        root = exp[e % n]
        nxt = [0] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i + 1] ^= c
            nxt[i] ^= gmul(c, root)
        poly = nxt
    if any(c not in (0, 1) for c in poly):
        raise AssertionError("minimal polynomial escaped GF(2)")
    return poly


def bch_construct(m, delta):
    """Narrow-sense binary BCH code of length 2^m - 1 and designed distance delta.

    The generator polynomial is the lcm of the minimal polynomials of
    alpha, alpha^2, ..., alpha^(delta-1); G and H are in cyclic systematic form.
    """
    if not (2 <= m <= 10):
        raise InvalidParameter(f"m must be in [2, 10], got {m}")
    n = (1 << m) - 1
    if delta % 2 == 0 or not (3 <= delta < n):
        raise InvalidParameter(f"delta must be odd with 3 <= delta < {n}, got {delta}")
    seen = set()
    g = [1]
    for s in range(1, delta):
        coset = tuple(cyclotomic_coset(s, n))
        if coset in seen:
            continue
        seen.add(coset)
        g = poly_mul(g, _minimal_poly(list(coset), m))
    r = len(g) - 1
    k = n - r
    if k <= 0:
        raise InvalidParameter(f"designed distance {delta} leaves no message bits")
    # x^n - 1 must be divisible by g
    xn1 = [1] + [0] * (n - 1) + [1]
    if poly_mod(xn1, g):
        raise AssertionError("generator polynomial does not divide x^n - 1")
    # Systematic cyclic form: row i of P = x^(r+i) mod g; G = [P | I_k], H = [I_r | P^T]
    P = np.zeros((k, r), dtype=np.uint8)
    for i in range(k):
        xi = [0] * (r + i) + [1]
        rem = poly_mod(xi, g)
        P[i, : len(rem)] = rem
    G = Gf2Matrix(np.concatenate([P, np.eye(k, dtype=np.uint8)], axis=1))
    H = Gf2Matrix(np.concatenate([np.eye(r, dtype=np.uint8), P.T], axis=1))
    return Code(n=n, k=k, generator=G, parity=H, name=f"BCH({n},{k})")


# ---------------------------------------------------------------------------
# Regular LDPC (random socket-pairing ensemble)


def ldpc_regular_construct(n, wc, wr, seed, max_retries=500):
    """Random (wc, wr)-regular parity-check matrix via seeded socket pairing.

    Variable sockets (wc per variable) are matched to check sockets (wr per
    check) by a seeded permutation; a draw producing a repeated edge is
    discarded and redrawn.  Rank deficiency is permitted: k = n - rank(H),
    and H keeps all its rows so the Tanner graph reflects the drawn ensemble.
    """
    if n * wc % wr != 0:
        raise InvalidParameter(f"n*wc={n * wc} not divisible by wr={wr}")
    m = n * wc // wr
    if m >= n:
        raise InvalidParameter(f"m={m} must be < n={n}")
    var_sockets = np.repeat(np.arange(n), wc)
    chk_sockets = np.repeat(np.arange(m), wr)
    for attempt in range(max_retries):
        rng = derive_stream(seed, [0x1D9C, attempt])
        perm = np.arange(n * wc)
        for i in range(n * wc - 1, 0, -1):  # Fisher-Yates on the socket order
            j = rng.randint_below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        pairs = set(zip(chk_sockets.tolist(), var_sockets[perm].tolist()))
        if len(pairs) == n * wc:
            H = np.zeros((m, n), dtype=np.uint8)
            H[chk_sockets, var_sockets[perm]] = 1
            return code_from_parity(Gf2Matrix(H), name=f"LDPC({n},{wc},{wr},seed={seed})")
    raise ConstructionFailed(f"no collision-free draw in {max_retries} attempts")


def code_from_parity(H, name=""):
    """Build a Code from any parity-check matrix via its kernel (k = n - rank)."""
    G = kernel_basis(H)
    if G is None:
        raise InvalidParameter("parity-check matrix has a trivial kernel (k = 0)")
    return Code(n=H.cols, k=G.rows, generator=G, parity=H, name=name)


# ---------------------------------------------------------------------------
# alist I/O (MacKay format)


def alist_write(H):
    """Serialize a binary matrix in alist form (canonical: no zero padding)."""
    a = H.a
    m, n = a.shape
    col_deg = a.sum(axis=0)
    row_deg = a.sum(axis=1)
    lines = [
        f"{n} {m}",
        f"{int(col_deg.max(initial=0))} {int(row_deg.max(initial=0))}",
        " ".join(str(int(d)) for d in col_deg),
        " ".join(str(int(d)) for d in row_deg),
    ]
    for i in range(n):
        lines.append(" ".join(str(int(j) + 1) for j in np.nonzero(a[:, i])[0]))
    for j in range(m):
        lines.append(" ".join(str(int(i) + 1) for i in np.nonzero(a[j, :])[0]))
    return "\n".join(lines) + "\n"


def alist_read(text):
    """Parse alist text to a Gf2Matrix; zero padding entries are ignored."""
    lines = text.splitlines()

    def ints(idx, what):
        if idx >= len(lines):
            raise ParseError(f"truncated file, expected {what}", line=idx + 1)
        try:
            return [int(t) for t in lines[idx].split()]
        except ValueError:
            raise ParseError(f"non-integer token in {what}", line=idx + 1) from None

    head = ints(0, "matrix dimensions")
    if len(head) != 2:
        raise ParseError("expected 'n m'", line=1)
    n, m = head
    if n < 1 or m < 1:
        raise ParseError(f"bad dimensions {n} {m}", line=1)
    ints(1, "max degrees")  # informational; recomputed below
    col_deg = ints(2, "column degrees")
    row_deg = ints(3, "row degrees")
    if len(col_deg) != n:
        raise ParseError(f"expected {n} column degrees, got {len(col_deg)}", line=3)
    if len(row_deg) != m:
        raise ParseError(f"expected {m} row degrees, got {len(row_deg)}", line=4)
    a = np.zeros((m, n), dtype=np.uint8)
    for i in range(n):
        entries = [e for e in ints(4 + i, f"neighbors of variable {i + 1}") if e != 0]
        if len(entries) != col_deg[i]:
            raise DegreeMismatch(
                f"variable {i + 1} lists {len(entries)} checks, declared {col_deg[i]}",
                line=5 + i,
            )
        for e in entries:
            if not 1 <= e <= m:
                raise ParseError(f"check index {e} out of range", line=5 + i)
            a[e - 1, i] = 1
    for j in range(m):
        entries = [e for e in ints(4 + n + j, f"neighbors of check {j + 1}") if e != 0]
        if len(entries) != row_deg[j]:
            raise DegreeMismatch(
                f"check {j + 1} lists {len(entries)} variables, declared {row_deg[j]}",
                line=5 + n + j,
            )
        for e in entries:
            if not 1 <= e <= n:
                raise ParseError(f"variable index {e} out of range", line=5 + n + j)
            if a[j, e - 1] != 1:
                raise DegreeMismatch(
                    f"check {j + 1} lists variable {e} not present in column lists",
                    line=5 + n + j,
                )
    if int(a.sum()) != sum(col_deg):
        raise DegreeMismatch("degree lists inconsistent with entries")
    return Gf2Matrix(a)
