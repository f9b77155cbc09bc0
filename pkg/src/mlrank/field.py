"""Finite fields F_p and F_{p^k} with exact element arithmetic.

Elements are encoded internally as integer *codes*: the power-basis
coordinates ``c_0 + c_1 w + ... + c_{k-1} w^{k-1}`` map to
``c_0 + c_1 p + ... + c_{k-1} p^{k-1}``.  Every routine that works on many
elements at once (forms, matrices, kernels) passes these codes around;
:class:`FieldElem` is the user-facing wrapper.

Multiplication in extension fields is schoolbook polynomial arithmetic
reduced modulo the defining polynomial.  For small fields the results are
cached in dense tables, which the numerical kernels consume.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import FieldMismatch

# fields up to this size get dense add/mul tables
TABLE_LIMIT = 1024


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


# -- polynomials over F_p as constant-first coefficient lists ---------------


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    """Remainder of ``a`` modulo the monic polynomial ``m``."""
    a = _trim([c % p for c in a])
    dm = len(m) - 1
    while len(a) - 1 >= dm and a:
        c = a[-1]
        shift = len(a) - 1 - dm
        for i, mc in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mc) % p
        _trim(a)
    return a


def _pmul(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _is_irreducible(m: Sequence[int], p: int) -> bool:
    """Exhaustive search for a monic factor of degree <= deg(m)/2."""
    k = len(m) - 1
    for deg in range(1, k // 2 + 1):
        for low in itertools.product(range(p), repeat=deg):
            if not _pmod(m, list(low) + [1], p):
                return False
    return True


def _smallest_irreducible(p: int, k: int) -> tuple[int, ...]:
    # ordered by the integer sum(c_i p^i), i.e. highest coefficient first
    for low_code in range(p**k):
        low = [(low_code // p**i) % p for i in range(k)]
        if low[0] == 0:
            continue  # divisible by t
        m = low + [1]
        if _is_irreducible(m, p):
            return tuple(m)
    raise AssertionError("no irreducible polynomial found")  # unreachable


class FieldCtx:
    """The finite field F_{p^k}.

    Instances are immutable and interned by :func:`field_make`; compare them
    with ``==`` or ``is`` interchangeably.
    """

    def __init__(self, p: int, k: int = 1, modulus: Sequence[int] | None = None):
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        if k < 1:
            raise ValueError(f"extension degree must be >= 1, got {k}")
        if k == 1:
            if modulus is not None and len(modulus) not in (0, 2):
                raise ValueError("prime field takes no modulus")
            modulus = None
        else:
            if modulus is None:
                modulus = _smallest_irreducible(p, k)
            modulus = tuple(int(c) % p for c in modulus)
            if len(modulus) != k + 1 or modulus[-1] != 1:
                raise ValueError("modulus must be monic of degree k")
            if not _is_irreducible(modulus, p):
                raise ValueError(f"modulus {modulus} is reducible over F_{p}")
        self.p = p
        self.k = k
        self.modulus: tuple[int, ...] | None = modulus
        self.q = p**k
        self._tables: tuple | None = None
        if k > 1 and self.q <= TABLE_LIMIT:
            self._build_tables()

    # identity ------------------------------------------------------------

    def _key(self):
        return (self.p, self.k, self.modulus)

    def __eq__(self, other):
        return isinstance(other, FieldCtx) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        if self.k == 1:
            return f"GF({self.p})"
        return f"GF({self.p}^{self.k})"

    @property
    def is_prime_field(self) -> bool:
        return self.k == 1

    # code <-> coordinates --------------------------------------------------

    def to_coeffs(self, code: int) -> tuple[int, ...]:
        p = self.p
        return tuple((code // p**i) % p for i in range(self.k))

    def from_coeffs(self, coeffs: Iterable[int]) -> int:
        coeffs = [int(c) % self.p for c in coeffs]
        if len(coeffs) > self.k:
            # reduce a longer polynomial modulo the modulus
            if self.k == 1:
                return sum(coeffs) % self.p
            coeffs = _pmod(coeffs, self.modulus, self.p)
        return sum(c * self.p**i for i, c in enumerate(coeffs))

    def code(self, value) -> int:
        """Coerce an int (a code), a coordinate sequence or a FieldElem to a code."""
        if isinstance(value, FieldElem):
            if value.ctx != self:
                raise FieldMismatch(f"{value.ctx} element used in {self}")
            return value.code
        if isinstance(value, (int, np.integer)):
            value = int(value)
            if self.k == 1:
                return value % self.p
            if not 0 <= value < self.q:
                raise ValueError(f"code {value} out of range for {self}")
            return value
        return self.from_coeffs(value)

    def __call__(self, value) -> "FieldElem":
        return FieldElem(self, self.code(value))

    def elements(self) -> range:
        return range(self.q)

    @property
    def generator_code(self) -> int:
        """Code of the power-basis generator w (equal to 1 in a prime field)."""
        return 1 if self.k == 1 else self.p

    # scalar arithmetic on codes ---------------------------------------------

    def _build_tables(self):
        q = self.q
        add = np.empty((q, q), dtype=np.int64)
        mul = np.empty((q, q), dtype=np.int64)
        for a in range(q):
            for b in range(q):
                add[a, b] = self._add_slow(a, b)
                mul[a, b] = self._mul_slow(a, b)
        neg = np.array([self._neg_slow(a) for a in range(q)], dtype=np.int64)
        inv = np.zeros(q, dtype=np.int64)
        for a in range(1, q):
            inv[a] = int(np.nonzero(mul[a] == 1)[0][0])
        self._tables = (add, mul, neg, inv)
        self._add_l = add.ravel().tolist()
        self._mul_l = mul.ravel().tolist()
        self._neg_l = neg.tolist()
        self._inv_l = inv.tolist()

    def tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Dense (add, mul, neg, inv) tables over codes; built on demand."""
        if self._tables is None:
            if self.q > TABLE_LIMIT:
                raise ValueError(f"{self} too large for dense tables")
            if self.k == 1:
                r = np.arange(self.q, dtype=np.int64)
                add = (r[:, None] + r[None, :]) % self.p
                mul = (r[:, None] * r[None, :]) % self.p
                neg = (-r) % self.p
                inv = np.array([0] + [pow(a, self.p - 2, self.p) for a in range(1, self.q)],
                               dtype=np.int64)
                self._tables = (add, mul, neg, inv)
            else:
                self._build_tables()
        return self._tables

    def _add_slow(self, a, b):
        ca, cb = self.to_coeffs(a), self.to_coeffs(b)
        return self.from_coeffs(x + y for x, y in zip(ca, cb))

    def _neg_slow(self, a):
        return self.from_coeffs(-x for x in self.to_coeffs(a))

    def _mul_slow(self, a, b):
        prod = _pmul(list(self.to_coeffs(a)), list(self.to_coeffs(b)), self.p)
        return self.from_coeffs(_pmod(prod, self.modulus, self.p))

    def add(self, a: int, b: int) -> int:
        if self.k == 1:
            return (a + b) % self.p
        if self._tables is not None:
            return self._add_l[a * self.q + b]
        return self._add_slow(a, b)

    def neg(self, a: int) -> int:
        if self.k == 1:
            return -a % self.p
        if self._tables is not None:
            return self._neg_l[a]
        return self._neg_slow(a)

    def sub(self, a: int, b: int) -> int:
        if self.k == 1:
            return (a - b) % self.p
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.k == 1:
            return a * b % self.p
        if self._tables is not None:
            return self._mul_l[a * self.q + b]
        return self._mul_slow(a, b)

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError(f"inverse of zero in {self}")
        if self.k == 1:
            return pow(a, self.p - 2, self.p)
        if self._tables is not None:
            return self._inv_l[a]
        return self.pow(a, self.q - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return self.pow(self.inv(a), -e)
        if self.k == 1:
            return pow(a, e, self.p)
        result, base = 1, a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    # vectorised arithmetic on numpy code arrays ---------------------------

    def np_add(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.k == 1:
            return (x + y) % self.p
        return self.tables()[0][x, y]

    def np_mul(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.k == 1:
            return (x * y) % self.p
        return self.tables()[1][x, y]

    def np_neg(self, x: np.ndarray) -> np.ndarray:
        if self.k == 1:
            return (-x) % self.p
        return self.tables()[2][x]

    # serialisation -------------------------------------------------------

    def to_json(self) -> dict:
        doc = {"p": self.p, "k": self.k}
        if self.k > 1:
            doc["modulus"] = list(self.modulus)
        return doc

    @staticmethod
    def from_json(doc: dict) -> "FieldCtx":
        return field_make(int(doc["p"]), int(doc.get("k", 1)),
                          tuple(doc["modulus"]) if doc.get("modulus") else None)

    def elem_to_json(self, code: int) -> list[int]:
        return list(self.to_coeffs(code))

    def elem_from_json(self, value) -> int:
        if isinstance(value, int):
            return self.code(value)
        if len(value) != self.k:
            raise ValueError(f"element {value} must have {self.k} coordinates")
        return self.from_coeffs(value)


@functools.lru_cache(maxsize=None)
def field_make(p: int, k: int = 1, modulus: tuple[int, ...] | None = None) -> FieldCtx:
    """Return F_{p^k}; the modulus defaults to the smallest monic irreducible."""
    return FieldCtx(p, k, modulus)


def field_of_order(q: int) -> FieldCtx:
    """F_q for a prime power q."""
    for p in range(2, q + 1):
        if q % p == 0:
            k, r = 0, q
            while r % p == 0:
                r //= p
                k += 1
            if r != 1 or not is_prime(p):
                break
            return field_make(p, k)
    raise ValueError(f"{q} is not a prime power")


@dataclass(frozen=True)
class FieldElem:
    """An element of a finite field, wrapping its integer code."""

    ctx: FieldCtx
    code: int

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.ctx.to_coeffs(self.code)

    def _other(self, other) -> int:
        if isinstance(other, FieldElem):
            if other.ctx != self.ctx:
                raise FieldMismatch(f"cannot combine {self.ctx} and {other.ctx}")
            return other.code
        if isinstance(other, int):
            return self.ctx.code(other) if self.ctx.k == 1 else self.ctx.code(other % self.ctx.p)
        return NotImplemented

    def __add__(self, other):
        b = self._other(other)
        return NotImplemented if b is NotImplemented else FieldElem(self.ctx, self.ctx.add(self.code, b))

    __radd__ = __add__

    def __sub__(self, other):
        b = self._other(other)
        return NotImplemented if b is NotImplemented else FieldElem(self.ctx, self.ctx.sub(self.code, b))

    def __rsub__(self, other):
        b = self._other(other)
        return NotImplemented if b is NotImplemented else FieldElem(self.ctx, self.ctx.sub(b, self.code))

    def __mul__(self, other):
        b = self._other(other)
        return NotImplemented if b is NotImplemented else FieldElem(self.ctx, self.ctx.mul(self.code, b))

    __rmul__ = __mul__

    def __truediv__(self, other):
        b = self._other(other)
        return NotImplemented if b is NotImplemented else FieldElem(self.ctx, self.ctx.div(self.code, b))

    def __neg__(self):
        return FieldElem(self.ctx, self.ctx.neg(self.code))

    def __pow__(self, e: int):
        return FieldElem(self.ctx, self.ctx.pow(self.code, e))

    def inv(self) -> "FieldElem":
        return FieldElem(self.ctx, self.ctx.inv(self.code))

    def __bool__(self):
        return self.code != 0

    def __repr__(self):
        if self.ctx.k == 1:
            return f"{self.code}"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                mono = "" if i == 0 else ("w" if i == 1 else f"w^{i}")
                terms.append(f"{c if c != 1 or not mono else ''}{mono}")
        return " + ".join(terms) if terms else "0"


def arith(op: str, a: FieldElem, b: FieldElem | None = None) -> FieldElem:
    """Dispatch ``add|sub|mul|inv`` on field elements."""
    if op == "inv":
        return a.inv()
    if b is None:
        raise ValueError(f"{op} needs two operands")
    if a.ctx != b.ctx:
        raise FieldMismatch(f"cannot combine {a.ctx} and {b.ctx}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


# -- extensions ---------------------------------------------------------------


def _solve_mod_p(rows: list[list[int]], p: int) -> list[list[int]]:
    """Inverse of a square matrix over F_p (rows given as lists)."""
    n = len(rows)
    aug = [list(r) + [int(i == j) for j in range(n)] for i, r in enumerate(rows)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] % p)
        aug[col], aug[piv] = aug[piv], aug[col]
        s = pow(aug[col][col], p - 2, p)
        aug[col] = [x * s % p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [(x - f * y) % p for x, y in zip(aug[r], aug[col])]
    return [r[n:] for r in aug]


class Extension:
    """The degree-``e`` extension ``big`` of ``small`` with a fixed embedding.

    The relative basis is ``1, w, ..., w^{e-1}`` where ``w`` generates ``big``
    over its prime field.  :meth:`coords` writes a big-field element in that
    basis; :meth:`project_phi` keeps the coordinate of ``1``.
    """

    def __init__(self, small: FieldCtx, big: FieldCtx):
        if small.p != big.p or big.k % small.k:
            raise FieldMismatch(f"{big} is not an extension of {small}")
        self.small, self.big = small, big
        self.e = big.k // small.k
        if small.k == 1:
            theta = 1
        else:
            # image of the small generator: smallest root of its modulus in big
            theta = next(x for x in big.elements() if self._eval_modulus(x) == 0)
        self.theta = theta
        p, K = big.p, big.k
        theta_pows = [big.pow(theta, a) for a in range(small.k)]
        w_pows = [big.pow(big.generator_code, i) for i in range(self.e)]
        basis = [big.mul(t, w) for w in w_pows for t in theta_pows]  # index i*k + a
        cols = [big.to_coeffs(b) for b in basis]
        mat = [[cols[j][i] for j in range(K)] for i in range(K)]
        self._basis_inv = _solve_mod_p(mat, p)
        self._embed = [self._embed_slow(c) for c in small.elements()] if small.q <= 1 << 16 else None

    def _eval_modulus(self, x: int) -> int:
        big, acc = self.big, 0
        for c in reversed(self.small.modulus):
            acc = big.add(big.mul(acc, x), c)
        return acc

    def _embed_slow(self, code: int) -> int:
        big, acc = self.big, 0
        for c in reversed(self.small.to_coeffs(code)):
            acc = big.add(big.mul(acc, self.theta), c)
        return acc

    def embed(self, code: int) -> int:
        if self._embed is not None:
            return self._embed[code]
        return self._embed_slow(code)

    def coords(self, code: int) -> tuple[int, ...]:
        """Small-field codes ``c_i`` with ``a = sum_i embed(c_i) w^i``."""
        p, k = self.big.p, self.small.k
        v = self.big.to_coeffs(code)
        sol = [sum(r[j] * v[j] for j in range(len(v))) % p for r in self._basis_inv]
        return tuple(self.small.from_coeffs(sol[i * k:(i + 1) * k]) for i in range(self.e))

    def project_phi(self, code: int) -> int:
        return self.coords(code)[0]

    def in_base(self, code: int) -> bool:
        return all(c == 0 for c in self.coords(code)[1:])

    def pull(self, code: int) -> int:
        """Inverse of :meth:`embed` on its image."""
        c = self.coords(code)
        if any(c[1:]):
            raise FieldMismatch(f"element {code} of {self.big} is not in {self.small}")
        return c[0]


@functools.lru_cache(maxsize=None)
def extension(small: FieldCtx, e: int) -> Extension:
    """The designated degree-``e`` extension of ``small``."""
    if e < 1:
        raise ValueError("extension degree must be >= 1")
    return Extension(small, field_make(small.p, small.k * e))


def _relation(small: FieldCtx, big: FieldCtx) -> Extension:
    if small.p != big.p or big.k % small.k:
        raise FieldMismatch(f"{big} is not an extension of {small}")
    if field_make(big.p, big.k) != big:
        raise FieldMismatch(f"{big} is not the designated extension of {small}")
    return extension(small, big.k // small.k)


def embed(a: FieldElem, big: FieldCtx) -> FieldElem:
    """Ring embedding of ``a`` into the designated extension ``big``."""
    return FieldElem(big, _relation(a.ctx, big).embed(a.code))


def project_phi(a: FieldElem, small: FieldCtx) -> FieldElem:
    """The F-linear projection onto ``small`` (coordinate of 1 in the power basis)."""
    return FieldElem(small, _relation(small, a.ctx).project_phi(a.code))
