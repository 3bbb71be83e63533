"""Exact rational and number-field arithmetic.

Everything downstream (shapes, propagators, loop invariants) is carried by
elements of Q(x)/(minpoly), stored as coefficient vectors of gmpy2 rationals.
All values are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

import mpmath as mp
from gmpy2 import mpq, mpz

from .errors import DivisionByZero, FieldError, PrecisionFailure, SingularMatrix

Rational = mpq

_RAT_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*([+-]?\d+)\s*)?$")


def rational(p, q=1) -> Rational:
    """Reduced rational p/q with positive denominator (mpq guarantees both)."""
    return mpq(p, q)


def parse_rational(s: str) -> Rational:
    m = _RAT_RE.match(s)
    if not m:
        raise ValueError(f"not a rational literal: {s!r}")
    num, den = m.group(1), m.group(2)
    if den is not None and int(den) == 0:
        raise ValueError(f"zero denominator: {s!r}")
    return mpq(int(num), int(den) if den is not None else 1)


def format_rational(q: Rational) -> str:
    return str(q)


class NumberField:
    """Q(x)/(minpoly) with a preferred complex embedding.

    The minimal polynomial is given by ascending rational coefficients and must
    be monic.  Irreducibility is trusted from upstream; `check_squarefree`
    covers the cheap part of that trust boundary.  The embedding is a decimal
    (re, im) approximation of one root, refined on demand to any precision.
    """

    __slots__ = ("minpoly", "degree", "embedding", "_reduction", "_root_cache")

    def __init__(self, minpoly: Sequence, embedding: tuple[str, str]):
        coeffs = tuple(mpq(c) for c in minpoly)
        if len(coeffs) < 2:
            raise FieldError("minpoly must have positive degree")
        if coeffs[-1] != 1:
            raise FieldError("minpoly must be monic")
        self.minpoly = coeffs
        self.degree = len(coeffs) - 1
        self.embedding = (str(embedding[0]), str(embedding[1]))
        # rows[j] = coefficients of x^(degree+j) reduced mod minpoly
        d = self.degree
        rows = []
        cur = [-c for c in coeffs[:-1]]  # x^d
        rows.append(tuple(cur))
        for _ in range(d - 2):
            shifted = [mpq(0)] + cur[:-1]
            top = cur[-1]
            cur = [s + top * r for s, r in zip(shifted, rows[0])]
            rows.append(tuple(cur))
        self._reduction = tuple(rows)
        self._root_cache: dict[int, mp.mpc] = {}

    def __eq__(self, other):
        return isinstance(other, NumberField) and self.minpoly == other.minpoly

    def __hash__(self):
        return hash(self.minpoly)

    def __repr__(self):
        return f"NumberField(degree={self.degree})"

    # -- element construction -------------------------------------------------

    def element(self, coeffs: Iterable) -> FieldElement:
        c = tuple(mpq(v) for v in coeffs)
        if len(c) != self.degree:
            raise FieldError(
                f"coefficient list has length {len(c)}, field degree is {self.degree}"
            )
        return FieldElement(c, self)

    def from_rational(self, q) -> FieldElement:
        return FieldElement((mpq(q),) + (mpq(0),) * (self.degree - 1), self)

    @property
    def zero(self) -> FieldElement:
        return self.from_rational(0)

    @property
    def one(self) -> FieldElement:
        return self.from_rational(1)

    @property
    def gen(self) -> FieldElement:
        c = [mpq(0)] * self.degree
        if self.degree == 1:
            # degree-1 field: x is the rational root itself
            c[0] = -self.minpoly[0]
        else:
            c[1] = mpq(1)
        return FieldElement(tuple(c), self)

    # -- raw coefficient-tuple arithmetic (hot path) ---------------------------

    def _mul_raw(self, a: tuple, b: tuple) -> tuple:
        d = self.degree
        if d == 1:
            return (a[0] * b[0],)
        full = [mpq(0)] * (2 * d - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        full[i + j] += ai * bj
        out = full[:d]
        for j in range(d - 1):
            top = full[d + j]
            if top:
                row = self._reduction[j]
                for i in range(d):
                    out[i] += top * row[i]
        return tuple(out)

    def _inv_raw(self, a: tuple) -> tuple:
        if not any(a):
            raise DivisionByZero("inverse of zero field element")
        # extended Euclid in Q[x] against the (irreducible) minpoly
        r0, r1 = list(self.minpoly), list(a)
        s0, s1 = [mpq(0)], [mpq(1)]
        while any(r1):
            q, r = _poly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1))
        g = _poly_strip(r0)
        if len(g) != 1:
            raise FieldError("minpoly is not coprime with the element (reducible?)")
        inv_g = 1 / g[0]
        out = [c * inv_g for c in s0]
        out += [mpq(0)] * (self.degree - len(out))
        return tuple(out[: self.degree])

    # -- embedding -------------------------------------------------------------

    def refined_root(self, digits: int) -> mp.mpc:
        """Newton-polish the stored embedding to `digits` working precision."""
        key = int(digits)
        cached = self._root_cache.get(key)
        if cached is not None:
            return cached
        coeffs = [mpq(c) for c in self.minpoly]
        dcoeffs = [i * c for i, c in enumerate(coeffs)][1:]
        with mp.workdps(digits + 15):
            x = mp.mpc(self.embedding[0], self.embedding[1])
            start = x
            tol = mp.mpf(10) ** (-(digits + 5))
            converged = False
            for _ in range(200):
                fx = _mp_polyval(coeffs, x)
                dfx = _mp_polyval(dcoeffs, x)
                if dfx == 0:
                    raise PrecisionFailure("derivative vanished during root polishing")
                step = fx / dfx
                x = x - step
                if abs(step) < tol:
                    converged = True
                    break
            if not converged:
                raise PrecisionFailure(
                    f"root refinement did not converge at {digits} digits"
                )
            if abs(x - start) > mp.mpf("1e-6"):
                raise PrecisionFailure("refined root drifted away from the stored embedding")
            result = +x
        self._root_cache[key] = result
        return result


def _poly_strip(p: list) -> list:
    while len(p) > 1 and p[-1] == 0:
        p = p[:-1]
    return p


def _poly_sub(a: list, b: list) -> list:
    n = max(len(a), len(b))
    a = a + [mpq(0)] * (n - len(a))
    b = b + [mpq(0)] * (n - len(b))
    return _poly_strip([x - y for x, y in zip(a, b)])


def _poly_mul(a: list, b: list) -> list:
    out = [mpq(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return _poly_strip(out)


def _poly_divmod(a: list, b: list) -> tuple[list, list]:
    a = _poly_strip(list(a))
    b = _poly_strip(list(b))
    if b == [mpq(0)]:
        raise ZeroDivisionError("polynomial division by zero")
    q = [mpq(0)] * max(1, len(a) - len(b) + 1)
    r = list(a)
    while len(r) >= len(b) and any(r):
        shift = len(r) - len(b)
        factor = r[-1] / b[-1]
        q[shift] = factor
        for i, bc in enumerate(b):
            r[shift + i] -= factor * bc
        r = _poly_strip(r)
        if r == [mpq(0)]:
            break
    return _poly_strip(q), r


def _mp_polyval(coeffs, x):
    acc = mp.mpc(0)
    for c in reversed(coeffs):
        acc = acc * x + mp.mpf(c.numerator) / mp.mpf(c.denominator)
    return acc


class FieldElement:
    """Element of a NumberField, stored fully reduced (canonical coefficients)."""

    __slots__ = ("coeffs", "field")

    def __init__(self, coeffs: tuple, field: NumberField):
        self.coeffs = coeffs
        self.field = field

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldError("field mismatch")
            return other
        if isinstance(other, (int, mpq, mpz)):
            return self.field.from_rational(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(tuple(a + b for a, b in zip(self.coeffs, o.coeffs)), self.field)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(tuple(a - b for a, b in zip(self.coeffs, o.coeffs)), self.field)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, (int, mpq)):
            q = mpq(other)
            return FieldElement(tuple(c * q for c in self.coeffs), self.field)
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(self.field._mul_raw(self.coeffs, o.coeffs), self.field)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.inverse()

    def __neg__(self):
        return FieldElement(tuple(-c for c in self.coeffs), self.field)

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        acc = self.field.one
        base = self
        while e:
            if e & 1:
                acc = acc * base
            base = base * base
            e >>= 1
        return acc

    def inverse(self) -> FieldElement:
        return FieldElement(self.field._inv_raw(self.coeffs), self.field)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def as_rational(self) -> Rational:
        if not self.is_rational():
            raise FieldError("element is not rational")
        return self.coeffs[0]

    def __eq__(self, other):
        if isinstance(other, (int, mpq)):
            other = self.field.from_rational(other)
        if not isinstance(other, FieldElement):
            return NotImplemented
        return self.field == other.field and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.coeffs, self.field.minpoly))

    def embed(self, digits: int = 30) -> mp.mpc:
        """Complex value of this element at the field's refined root."""
        if digits < 10:
            raise ValueError("digits must be at least 10")
        root = self.field.refined_root(digits)
        with mp.workdps(digits + 15):
            acc = mp.mpc(0)
            for c in reversed(self.coeffs):
                acc = acc * root + mp.mpf(c.numerator) / mp.mpf(c.denominator)
            return +acc

    def __repr__(self):
        return f"FieldElement({self!s})"

    def __str__(self):
        return format_poly(self)


def fe_mul(a: FieldElement, b: FieldElement, field: NumberField) -> FieldElement:
    return FieldElement(field._mul_raw(a.coeffs, b.coeffs), field)


def fe_inv(a: FieldElement, field: NumberField) -> FieldElement:
    return FieldElement(field._inv_raw(a.coeffs), field)


def fe_embed(a: FieldElement, field: NumberField, digits: int) -> mp.mpc:
    return a.embed(digits)


# -- polynomial string form (descending powers, as printed in result documents)

_TERM_RE = re.compile(
    r"\s*([+-]?)\s*(?:(\d+(?:/\d+)?)\s*\*?\s*)?(?:x(?:\s*\^\s*(\d+))?)?"
)


def format_poly(a: FieldElement, var: str = "x") -> str:
    parts = []
    for power in range(a.field.degree - 1, -1, -1):
        c = a.coeffs[power]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        if power == 0:
            body = str(mag)
        else:
            xs = var if power == 1 else f"{var}^{power}"
            body = xs if mag == 1 else f"{mag}*{xs}"
        parts.append((sign, body))
    if not parts:
        return "0"
    first_sign, first_body = parts[0]
    out = ("-" if first_sign == "-" else "") + first_body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def parse_poly(s: str, field: NumberField, var: str = "x") -> FieldElement:
    """Inverse of format_poly; also accepts unnormalized term order."""
    coeffs = [mpq(0)] * field.degree
    pos = 0
    s = s.strip()
    if s == "0":
        return field.zero
    while pos < len(s):
        m = _TERM_RE.match(s, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse polynomial at {s[pos:]!r}")
        sign, num, power = m.group(1), m.group(2), m.group(3)
        has_var = "x" in s[pos : m.end()]
        if num is None and not has_var:
            raise ValueError(f"empty term in {s!r}")
        coeff = mpq(num) if num is not None else mpq(1)
        if sign == "-":
            coeff = -coeff
        if has_var:
            p = int(power) if power is not None else 1
        else:
            p = 0
        if p >= field.degree:
            raise ValueError(f"power {p} exceeds field degree {field.degree}")
        coeffs[p] += coeff
        pos = m.end()
    return field.element(coeffs)


class FieldMatrix:
    """Immutable rectangular matrix of FieldElements with exact linear algebra."""

    __slots__ = ("rows", "nrows", "ncols", "field")

    def __init__(self, rows: Sequence[Sequence[FieldElement]], field: NumberField):
        self.rows = tuple(tuple(r) for r in rows)
        self.nrows = len(self.rows)
        self.ncols = len(self.rows[0]) if self.rows else 0
        if any(len(r) != self.ncols for r in self.rows):
            raise ValueError("ragged matrix")
        self.field = field

    @classmethod
    def identity(cls, n: int, field: NumberField) -> "FieldMatrix":
        return cls(
            [[field.one if i == j else field.zero for j in range(n)] for i in range(n)],
            field,
        )

    @classmethod
    def from_rational_rows(cls, rows, field: NumberField) -> "FieldMatrix":
        return cls([[field.from_rational(v) for v in r] for r in rows], field)

    @classmethod
    def diagonal(cls, entries: Sequence[FieldElement], field: NumberField) -> "FieldMatrix":
        n = len(entries)
        return cls(
            [[entries[i] if i == j else field.zero for j in range(n)] for i in range(n)],
            field,
        )

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, FieldMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def transpose(self) -> "FieldMatrix":
        return FieldMatrix(list(zip(*self.rows)), self.field)

    def __mul__(self, other):
        if isinstance(other, FieldMatrix):
            if self.ncols != other.nrows:
                raise ValueError("dimension mismatch")
            cols = other.transpose().rows
            return FieldMatrix(
                [[_dot(r, c, self.field) for c in cols] for r in self.rows], self.field
            )
        return NotImplemented

    def __add__(self, other):
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return FieldMatrix(
            [
                [a + b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.rows, other.rows)
            ],
            self.field,
        )

    def __neg__(self):
        return FieldMatrix([[-a for a in r] for r in self.rows], self.field)

    def mul_vector(self, v: Sequence[FieldElement]) -> list[FieldElement]:
        return [_dot(r, v, self.field) for r in self.rows]

    def det(self) -> FieldElement:
        """Exact determinant by ordinary elimination, first nonzero pivot."""
        if self.nrows != self.ncols:
            raise ValueError("determinant of a non-square matrix")
        n = self.nrows
        m = [list(r) for r in self.rows]
        det = self.field.one
        for col in range(n):
            pivot = next((r for r in range(col, n) if not m[r][col].is_zero()), None)
            if pivot is None:
                return self.field.zero
            if pivot != col:
                m[col], m[pivot] = m[pivot], m[col]
                det = -det
            det = det * m[col][col]
            inv = m[col][col].inverse()
            for r in range(col + 1, n):
                if m[r][col].is_zero():
                    continue
                factor = m[r][col] * inv
                for c in range(col, n):
                    m[r][c] = m[r][c] - factor * m[col][c]
        return det

    def inverse(self) -> "FieldMatrix":
        """Exact inverse by Gauss-Jordan; raises SingularMatrix on rank deficiency."""
        if self.nrows != self.ncols:
            raise ValueError("inverse of a non-square matrix")
        n = self.nrows
        m = [list(r) + list(ident_r) for r, ident_r in zip(self.rows, FieldMatrix.identity(n, self.field).rows)]
        for col in range(n):
            pivot = next((r for r in range(col, n) if not m[r][col].is_zero()), None)
            if pivot is None:
                raise SingularMatrix("matrix is singular")
            if pivot != col:
                m[col], m[pivot] = m[pivot], m[col]
            inv = m[col][col].inverse()
            m[col] = [v * inv for v in m[col]]
            for r in range(n):
                if r == col or m[r][col].is_zero():
                    continue
                factor = m[r][col]
                m[r] = [v - factor * p for v, p in zip(m[r], m[col])]
        return FieldMatrix([row[n:] for row in m], self.field)

    def rank(self) -> int:
        m = [list(r) for r in self.rows]
        rank = 0
        for col in range(self.ncols):
            pivot = next((r for r in range(rank, self.nrows) if not m[r][col].is_zero()), None)
            if pivot is None:
                continue
            m[rank], m[pivot] = m[pivot], m[rank]
            inv = m[rank][col].inverse()
            for r in range(rank + 1, self.nrows):
                if not m[r][col].is_zero():
                    factor = m[r][col] * inv
                    for c in range(col, self.ncols):
                        m[r][c] = m[r][c] - factor * m[rank][c]
            rank += 1
            if rank == self.nrows:
                break
        return rank


def _dot(row, col, field):
    acc = field.zero
    for a, b in zip(row, col):
        acc = acc + a * b
    return acc


def mat_det(m: FieldMatrix, field: NumberField) -> FieldElement:
    return m.det()


def mat_inverse(m: FieldMatrix, field: NumberField) -> FieldMatrix:
    return m.inverse()


# -- exact rational linear algebra (for integer matrices like A, B) ------------


def rational_matrix_inverse(rows: Sequence[Sequence]) -> list[list[Rational]]:
    """Inverse of a square rational matrix; raises SingularMatrix if singular."""
    n = len(rows)
    m = [[mpq(v) for v in r] + [mpq(1) if i == j else mpq(0) for j in range(n)] for i, r in enumerate(rows)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrix("rational matrix is singular")
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [v - factor * p for v, p in zip(m[r], m[col])]
    return [row[n:] for row in m]


def rational_matrix_det(rows: Sequence[Sequence]) -> Rational:
    n = len(rows)
    m = [[mpq(v) for v in r] for r in rows]
    det = mpq(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return mpq(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                factor = m[r][col] * inv
                for c in range(col, n):
                    m[r][c] -= factor * m[col][c]
    return det
