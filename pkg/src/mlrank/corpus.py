"""Canonical example matrices and seeded random instances.

Random instances use SplitMix64 as a counter-based stream so that any
implementation can reproduce them bit for bit:

* state starts at ``seed``; each draw adds ``0x9E3779B97F4A7C15`` (mod 2^64)
  and returns the SplitMix64 finaliser of the new state;
* entries are visited row-major, and within an entry the index tuples in
  lexicographic order (last block fastest);
* for each index tuple one draw ``u`` decides presence
  (``u / 2^64 < density``); if present a second draw ``v`` picks the
  coefficient code ``1 + v mod (q - 1)``.
"""

from __future__ import annotations

import itertools

from .field import FieldCtx, field_of_order
from .mform import MultilinearForm
from .mlmatrix import FormMatrix, kron

MASK64 = (1 << 64) - 1


class SplitMix64:
    """Counter-based 64-bit generator."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        return self.next() % bound

    def unit(self) -> float:
        return self.next() / 2.0**64


def _lin(ctx: FieldCtx, block: int, n: int, coeffs) -> MultilinearForm:
    return MultilinearForm(ctx, (block,), n, {(j,): c for j, c in enumerate(coeffs) if c})


def _diag(ctx: FieldCtx, blocks, n: int, diag: list[MultilinearForm]) -> FormMatrix:
    z = MultilinearForm.zero(ctx, blocks, n)
    size = len(diag)
    return FormMatrix(ctx, blocks, n, [[diag[i] if i == j else z for j in range(size)]
                                       for i in range(size)])


def intro_diag(q: int = 2) -> FormMatrix:
    """``diag(α, β, α+β)`` with ``α = x_{1,1}``, ``β = x_{1,2}``."""
    ctx = field_of_order(q)
    forms = [_lin(ctx, 1, 2, c) for c in ((1, 0), (0, 1), (1, 1))]
    return _diag(ctx, (1,), 2, forms)


def intro_skew(q: int = 2) -> FormMatrix:
    """The 3x3 skew-symmetric matrix in ``α, β, γ = x_{1,1}, x_{1,2}, x_{1,3}``."""
    ctx = field_of_order(q)
    m1 = ctx.neg(1)
    z = MultilinearForm.zero(ctx, (1,), 3)
    a, b, c = (_lin(ctx, 1, 3, v) for v in ((1, 0, 0), (0, 1, 0), (0, 0, 1)))
    na, nb, nc = (f.scale(m1) for f in (a, b, c))
    return FormMatrix(ctx, (1,), 3, [[z, a, b], [na, z, c], [nb, nc, z]])


def projective_points(q: int, k: int) -> list[tuple[int, ...]]:
    """Nonzero vectors of F_q^k whose first nonzero coordinate is 1.

    Ordered by ``sum_i c_i q^i`` (first coordinate least significant).
    """
    out = []
    for code in range(1, q**k):
        c = tuple((code // q**i) % q for i in range(k))
        first = next(x for x in c if x)
        if first == 1:
            out.append(c)
    return out


def tight_diag(q: int = 2, k: int = 2, block: int = 1) -> FormMatrix:
    """Diagonal matrix of every nonzero linear form in ``k`` variables up to scaling."""
    ctx = field_of_order(q)
    forms = [_lin(ctx, block, k, c) for c in projective_points(q, k)]
    return _diag(ctx, (block,), k, forms)


def tight_kron(q: int = 2, k: int = 2, d: int = 2) -> FormMatrix:
    """Kronecker product of ``tight_diag(q, k)`` in blocks ``1..d``."""
    M = tight_diag(q, k, 1)
    for b in range(2, d + 1):
        M = kron(M, tight_diag(q, k, b))
    return M


def ex45(q: int = 2) -> FormMatrix:
    """The 5x5 d=2 matrix whose differential Schur complement is tight."""
    ctx = field_of_order(q)
    n = 2

    def ab(i, j):
        return MultilinearForm(ctx, (1, 2), n, {(i, j): 1})

    z = MultilinearForm.zero(ctx, (1, 2), n)
    first = [ab(0, 0), ab(0, 0), ab(0, 1), ab(1, 0), ab(1, 1)]
    col = [ab(0, 0), ab(0, 1), ab(1, 0), ab(1, 1)]
    rows = [first] + [[c, z, z, z, z] for c in col]
    return FormMatrix(ctx, (1, 2), n, rows)


EXAMPLES = {
    "intro-diag": intro_diag,
    "intro-skew": intro_skew,
    "tight-diag": tight_diag,
    "tight-kron": tight_kron,
    "ex45": ex45,
}


def make_example(name: str, **params) -> FormMatrix:
    try:
        fn = EXAMPLES[name]
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}") from None
    return fn(**params)


def gen_random(d: int, n: int, rows: int, cols: int, q: int, density: float = 0.5,
               seed: int = 0) -> FormMatrix:
    """Seeded random matrix of multilinear forms (see module docstring)."""
    if d < 0 or n < 1 or rows < 0 or cols < 0:
        raise ValueError("need d >= 0, n >= 1, rows >= 0, cols >= 0")
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    ctx = field_of_order(q)
    rng = SplitMix64(seed)
    blocks = tuple(range(1, d + 1))
    ents = []
    for _ in range(rows):
        row = []
        for _ in range(cols):
            terms = {}
            for idx in itertools.product(range(n), repeat=d):
                if rng.unit() < density:
                    terms[idx] = 1 + rng.below(q - 1)
            row.append(MultilinearForm(ctx, blocks, n, terms, check=False))
        ents.append(row)
    return FormMatrix(ctx, blocks, n, ents)


def gen_random_tensor(n: int, q: int, density: float = 0.5, seed: int = 0) -> MultilinearForm:
    """Seeded random 3-tensor: the single entry of a 1x1 random matrix with d = 3."""
    return gen_random(3, n, 1, 1, q, density, seed).entries[0][0]
