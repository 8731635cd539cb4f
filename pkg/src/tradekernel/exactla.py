"""Exact integer linear algebra on small sparse matrices.

Rank is computed two independent ways: fraction-free Bareiss elimination
over the integers, and elimination mod a prime (a lower bound on the
exact rank that is cheap enough to repeat for several primes). Kernel
bases and span coefficients use Fraction arithmetic, so every result
here is exact; the numba-accelerated modular routines live in kernels.

None of this is meant for matrices beyond a few thousand rows. The
structured matrices in this package keep Bareiss pivots tiny (they never
exceeded 1024 in profiling), so the exact path is fast where it is used.
"""

from fractions import Fraction
from math import gcd
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import FormatError
from .primes import is_probable_prime


class SparseIntMatrix:
    """Immutable-by-convention sparse integer matrix in dict-of-keys form."""

    def __init__(self, n_rows: int, n_cols: int, entries: Mapping[tuple[int, int], int]):
        if n_rows < 0 or n_cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        clean: dict[tuple[int, int], int] = {}
        for (r, c), v in entries.items():
            if not (0 <= r < n_rows and 0 <= c < n_cols):
                raise ValueError(f"entry ({r}, {c}) out of bounds for {n_rows}x{n_cols}")
            v = int(v)
            if v != 0:
                clean[(r, c)] = v
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.entries = clean

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[int]]) -> "SparseIntMatrix":
        n_rows = len(rows)
        n_cols = len(rows[0]) if n_rows else 0
        entries = {}
        for i, row in enumerate(rows):
            if len(row) != n_cols:
                raise ValueError("ragged rows")
            for j, v in enumerate(row):
                if v:
                    entries[(i, j)] = int(v)
        return cls(n_rows, n_cols, entries)

    def to_dense(self) -> list[list[int]]:
        out = [[0] * self.n_cols for _ in range(self.n_rows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out

    def to_array(self) -> np.ndarray:
        a = np.zeros((self.n_rows, self.n_cols), dtype=np.int64)
        for (r, c), v in self.entries.items():
            a[r, c] = v
        return a

    def matvec(self, v: Sequence[int]) -> list[int]:
        """Exact A @ v with Python integers."""
        if len(v) != self.n_cols:
            raise ValueError("dimension mismatch")
        out = [0] * self.n_rows
        for (r, c), a in self.entries.items():
            out[r] += a * v[c]
        return out

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparseIntMatrix)
            and self.n_rows == other.n_rows
            and self.n_cols == other.n_cols
            and self.entries == other.entries
        )

    def __repr__(self) -> str:
        return f"SparseIntMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def dump_matrix(m: SparseIntMatrix) -> str:
    """`dims R C` header, then one line per entry, `row col value`, sorted."""
    lines = [f"dims {m.n_rows} {m.n_cols}"]
    lines += [f"{r} {c} {v}" for (r, c), v in sorted(m.entries.items())]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> SparseIntMatrix:
    """Inverse of dump_matrix.

    Dimensions are taken from an optional leading `dims R C` line and
    otherwise inferred as one past the largest indices present.
    """
    entries: dict[tuple[int, int], int] = {}
    n_rows = n_cols = None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    start = 0
    if lines and lines[0].split()[0] == "dims":
        parts = lines[0].split()
        if len(parts) != 3:
            raise FormatError("dims line must read `dims R C`")
        try:
            n_rows, n_cols = int(parts[1]), int(parts[2])
        except ValueError as e:
            raise FormatError(f"bad dims line: {lines[0]!r}") from e
        start = 1
    for ln in lines[start:]:
        parts = ln.split()
        if len(parts) != 3:
            raise FormatError(f"bad matrix entry line: {ln!r}")
        try:
            r, c, v = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError as e:
            raise FormatError(f"bad matrix entry line: {ln!r}") from e
        if (r, c) in entries:
            raise FormatError(f"duplicate entry at ({r}, {c})")
        entries[(r, c)] = v
    if n_rows is None:
        n_rows = max((r for r, _ in entries), default=-1) + 1
        n_cols = max((c for _, c in entries), default=-1) + 1
    return SparseIntMatrix(n_rows, n_cols, entries)


# ---------------------------------------------------------------------------
# exact rank


def rank_exact_dense(rows: Sequence[Sequence[int]]) -> int:
    """Rank over Q by fraction-free Bareiss elimination.

    Pivot rule: sweep columns left to right, pick the first row at or
    below the current rank with a nonzero entry. All intermediate values
    are minors of the input, so every division below is exact; the assert
    guards against pivot bookkeeping bugs, not numerical error.
    """
    m = len(rows)
    if m == 0:
        return 0
    n = len(rows[0])
    a = [[int(x) for x in row] for row in rows]
    prev = 1
    rank = 0
    for c in range(n):
        if rank == m:
            break
        pr = next((i for i in range(rank, m) if a[i][c] != 0), None)
        if pr is None:
            continue
        a[rank], a[pr] = a[pr], a[rank]
        ar = a[rank]
        pe = ar[c]
        for i in range(rank + 1, m):
            ai = a[i]
            f = ai[c]
            for k in range(c, n):
                num = pe * ai[k] - f * ar[k]
                q = num // prev
                assert q * prev == num
                ai[k] = q
        prev = pe
        rank += 1
    return rank


def rank_exact(a: SparseIntMatrix) -> int:
    """Exact rank of a sparse integer matrix (Bareiss on the dense form)."""
    return rank_exact_dense(a.to_dense())


def rank_mod_p(a: SparseIntMatrix, p: int) -> int:
    """Rank mod p. Always a lower bound on the exact rank.

    p must be a prime below 2**31 so the elimination kernels stay inside
    int64.
    """
    if not (2 <= p < 2**31) or not is_probable_prime(p):
        raise ValueError(f"p must be a prime below 2**31, got {p}")
    return kernels.modp_rank(a.to_array(), p)


# ---------------------------------------------------------------------------
# Fraction elimination


def _fraction_rref(mat: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    rows = [[Fraction(x) for x in r] for r in mat]
    m = len(rows)
    n = len(rows[0]) if m else 0
    piv: list[int] = []
    r = 0
    for c in range(n):
        if r == m:
            break
        pr = next((i for i in range(r, m) if rows[i][c]), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        pe = rows[r][c]
        rows[r] = [x / pe for x in rows[r]]
        rr = rows[r]
        for i in range(m):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rr)]
        piv.append(c)
        r += 1
    return rows, piv


def _primitive(vec: Iterable[Fraction]) -> list[int]:
    """Scale a rational vector to a primitive integer vector, first nonzero positive."""
    vec = list(vec)
    den = 1
    for x in vec:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in vec]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g > 1:
        ints = [x // g for x in ints]
    lead = next((x for x in ints if x != 0), 0)
    if lead < 0:
        ints = [-x for x in ints]
    return ints


def kernel_basis(a: SparseIntMatrix) -> list[list[int]]:
    """Primitive integer basis of the right kernel of A.

    One vector per free column, ordered by free column index, computed
    from the reduced row echelon form over Q. Length of the result is
    n_cols - rank.
    """
    rows, piv = _fraction_rref(a.to_dense())
    pivset = set(piv)
    out: list[list[int]] = []
    for f in range(a.n_cols):
        if f in pivset:
            continue
        v = [Fraction(0)] * a.n_cols
        v[f] = Fraction(1)
        for r, c in enumerate(piv):
            v[c] = -rows[r][f]
        out.append(_primitive(v))
    return out


def coefficients_in_span(
    generators: Sequence[Sequence[int]], target: Sequence[int]
) -> list[Fraction] | None:
    """Rational coefficients expressing target over the generators, or None.

    Solves G x = t exactly with the generators as columns. Free generator
    coefficients are set to zero, so when the generators are independent
    the answer is the unique one. The recombination is verified before
    returning.
    """
    m = len(generators)
    dim = len(target)
    for g in generators:
        if len(g) != dim:
            raise ValueError("generator and target dimensions differ")
    if m == 0:
        return [] if all(x == 0 for x in target) else None
    aug = [[generators[j][i] for j in range(m)] + [target[i]] for i in range(dim)]
    rows, piv = _fraction_rref(aug)
    if m in piv:
        return None
    coeffs = [Fraction(0)] * m
    for r, c in enumerate(piv):
        coeffs[c] = rows[r][m]
    for i in range(dim):
        acc = Fraction(0)
        for j in range(m):
            if coeffs[j]:
                acc += coeffs[j] * generators[j][i]
        assert acc == target[i]
    return coeffs


# ---------------------------------------------------------------------------
# lattices


def hermite_normal_form(vectors: Sequence[Sequence[int]]) -> list[list[int]]:
    """Canonical row Hermite normal form of the integer row lattice.

    Pivots are positive, entries above a pivot are reduced into
    [0, pivot), zero rows are dropped. Two generating sets span the same
    lattice iff their forms are identical.
    """
    a = [list(map(int, r)) for r in vectors]
    a = [r for r in a if any(r)]
    if not a:
        return []
    m = len(a)
    n = len(a[0])
    if any(len(r) != n for r in a):
        raise ValueError("ragged rows")
    r = 0
    for c in range(n):
        if r == m:
            break
        while True:
            if a[r][c] < 0:
                a[r] = [-x for x in a[r]]
            nz = [i for i in range(r + 1, m) if a[i][c] != 0]
            if a[r][c] == 0:
                if not nz:
                    break
                i0 = min(nz, key=lambda i: (abs(a[i][c]), i))
                a[r], a[i0] = a[i0], a[r]
                continue
            if not nz:
                break
            for i in nz:
                q = a[i][c] // a[r][c]
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
            # remainders are in [0, pivot); promote the smallest nonzero so
            # the pivot strictly shrinks and the loop terminates
            rem = [i for i in range(r + 1, m) if a[i][c] != 0]
            if not rem:
                break
            i0 = min(rem, key=lambda i: (a[i][c], i))
            a[r], a[i0] = a[i0], a[r]
        if a[r][c] == 0:
            continue
        for i in range(r):
            q = a[i][c] // a[r][c]
            if q:
                a[i] = [x - q * y for x, y in zip(a[i], a[r])]
        r += 1
    return a[:r]


LATTICE_DIM_CAP = 600


def lattice_equal(
    gens_a: Sequence[Sequence[int]], gens_b: Sequence[Sequence[int]], max_cols: int = LATTICE_DIM_CAP
) -> bool:
    """Whether two integer generating sets span the same row lattice.

    Ambient dimension is capped (HNF entry growth is untamed in general;
    within the cap the structured vectors here stay small).
    """
    dims = {len(r) for r in gens_a} | {len(r) for r in gens_b}
    if len(dims) > 1:
        raise ValueError("all generators must share one ambient dimension")
    if dims and next(iter(dims)) > max_cols:
        raise ValueError(f"ambient dimension exceeds the cap of {max_cols}")
    return hermite_normal_form(gens_a) == hermite_normal_form(gens_b)
