"""Weight-graded bases, exact differential matrices, cohomology dimensions and characters."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .coeffring import CoeffFn, Scalar
from .voa import FieldExpr, VAContext

Operator = Callable[[FieldExpr], FieldExpr]
BasisKey = Tuple[tuple, tuple]  # (canonical monomial, function key)


class TruncationError(ValueError):
    """The operator left the enumerated span."""


class SectorError(ValueError):
    """The requested sector has no finite basis."""


# ----------------------------------------------------------------------
# bases


@dataclass
class GradedBasis:
    ctx: VAContext
    weight: int
    sector: tuple
    poly_degree: int
    keys: List[BasisKey]
    index: Dict[BasisKey, int] = field(init=False)

    def __post_init__(self):
        self.index = {k: i for i, k in enumerate(self.keys)}

    def __len__(self) -> int:
        return len(self.keys)

    def degree_of(self, i: int) -> int:
        return self.ctx.mono_degree(self.keys[i][0])

    def degrees(self) -> List[int]:
        return sorted({self.degree_of(i) for i in range(len(self))})

    def element(self, i: int) -> FieldExpr:
        mono, fkey = self.keys[i]
        return FieldExpr(self.ctx, {mono: CoeffFn(self.ctx.coords, {fkey: 1})})

    def elements(self) -> List[FieldExpr]:
        return [self.element(i) for i in range(len(self))]

    def coordinates(self, e: FieldExpr) -> Dict[int, Scalar]:
        """Expansion of e in this basis; raises TruncationError outside the span."""
        out: Dict[int, Scalar] = {}
        for mono, f in e.terms.items():
            for fkey, c in f.terms():
                i = self.index.get((mono, fkey))
                if i is None:
                    raise TruncationError(f"term {FieldExpr(self.ctx, {mono: CoeffFn(self.ctx.coords, {fkey: c})})} is outside the basis")
                out[i] = c
        return out


def _function_keys(ctx: VAContext, poly_degree: int, sector: tuple) -> List[tuple]:
    n = ctx.coords.n
    keys = []

    def rec(i, left, acc):
        if i == n:
            keys.append((tuple(acc), tuple(sector)))
            return
        for e in range(left + 1):
            rec(i + 1, left - e, acc + [e])

    rec(0, poly_degree, [])
    return keys


_CHARGE = {"c": 1, "jet": 1, "b": -1, "beta": -1}


def _charge(ctx: VAContext, mono: tuple) -> int:
    out = 0
    for g, _ in mono:
        kind = ctx.generators[g].kind
        if kind not in _CHARGE:
            raise SectorError(f"charge is undefined for generator {ctx.generators[g].name}")
        out += _CHARGE[kind]
    return out


def enumerate_basis(
    ctx: VAContext,
    weight: int,
    sector: Optional[Sequence[int]] = None,
    poly_degree: int = 0,
    degrees: Optional[Iterable[int]] = None,
    charge: Optional[int] = None,
) -> GradedBasis:
    """PBW monomials of the given weight times coefficient monomials.

    Flat coordinates contribute monomials of total degree <= poly_degree;
    angular coordinates are pinned to one Fourier sector.  With ``charge``
    the basis is instead the full sector where (flat degree) + #c + #jets
    - #b - #beta equals ``charge``; the untwisted D preserves this number, so
    such sectors are finite subcomplexes with no truncation.
    """
    coords = ctx.coords
    if coords.m and sector is None:
        raise SectorError("angular coordinates need an explicit Fourier sector")
    sector = tuple(sector or ())
    if len(sector) != coords.m:
        raise SectorError(f"sector needs {coords.m} entries")
    if weight < 0:
        raise ValueError("weight must be non-negative")
    factors = []
    for p, g in enumerate(ctx.generators):
        for d in range(weight + 1):
            w = g.weight + d
            if w > weight:
                break
            if w == 0 and not g.parity:
                raise SectorError(f"even weight-zero generator {g.name} gives an infinite basis")
            factors.append(((p, d), w, g.parity))
    factors.sort()
    monos: List[tuple] = []

    def rec(start, left, acc):
        if left == 0:
            monos.append(tuple(acc))
        for t in range(start, len(factors)):
            x, w, par = factors[t]
            if w > left:
                continue
            if acc and acc[-1] == x and par:
                continue
            rec(t if not par else t + 1, left - w, acc + [x])

    rec(0, weight, [])
    monos = sorted(set(monos))
    want = None if degrees is None else set(degrees)
    monos = [m for m in monos if want is None or ctx.mono_degree(m) in want]
    if charge is None:
        fkeys = _function_keys(ctx, poly_degree, sector)
        keys = [(m, fk) for m in monos for fk in fkeys]
    else:
        keys = []
        for m in monos:
            need = charge - _charge(ctx, m)
            if need >= 0:
                keys += [(m, fk) for fk in _function_keys(ctx, need, sector) if sum(fk[0]) == need]
        poly_degree = max((sum(k[1][0]) for k in keys), default=0)
    keys.sort(key=lambda k: (ctx.mono_degree(k[0]), k))
    return GradedBasis(ctx, weight, sector, poly_degree, keys)


# ----------------------------------------------------------------------
# matrices


@dataclass
class DifferentialMatrix:
    basis: GradedBasis
    entries: Dict[Tuple[int, int], Scalar]  # (row, col)

    def __len__(self) -> int:
        return len(self.basis)

    def compose(self, other: "DifferentialMatrix") -> "DifferentialMatrix":
        """self after other."""
        cols: Dict[int, Dict[int, Scalar]] = defaultdict(dict)
        for (r, c), v in other.entries.items():
            cols[c][r] = v
        rows: Dict[int, Dict[int, Scalar]] = defaultdict(dict)
        for (r, c), v in self.entries.items():
            rows[c][r] = v
        out: Dict[Tuple[int, int], Scalar] = {}
        for c, col in cols.items():
            for k, v in col.items():
                for r, w in rows.get(k, {}).items():
                    s = out.get((r, c), Scalar(0)) + w * v
                    out[(r, c)] = s
        return DifferentialMatrix(self.basis, {k: v for k, v in out.items() if v})

    def is_zero(self) -> bool:
        return not self.entries


class LinearCache:
    """Scalar-linear extension of ``op`` memoised on single terms :x^k X:.

    Squaring checks revisit the same inner terms many times; the cache makes
    ``self(self(e))`` cost roughly one application per distinct term.
    """

    def __init__(self, op: Operator, ctx: VAContext):
        self.op = op
        self.ctx = ctx
        self._memo: Dict[BasisKey, FieldExpr] = {}

    def _term(self, mono: tuple, fkey: tuple) -> FieldExpr:
        key = (mono, fkey)
        hit = self._memo.get(key)
        if hit is None:
            hit = self.op(FieldExpr(self.ctx, {mono: CoeffFn(self.ctx.coords, {fkey: 1})}))
            self._memo[key] = hit
        return hit

    def __call__(self, e: FieldExpr) -> FieldExpr:
        out = FieldExpr.zero(self.ctx)
        for mono, f in e.terms.items():
            for fkey, c in f.terms():
                out = out + self._term(mono, fkey) * c
        return out


def differential_matrix(op: Operator, basis: GradedBasis) -> DifferentialMatrix:
    entries: Dict[Tuple[int, int], Scalar] = {}
    for j in range(len(basis)):
        for i, v in basis.coordinates(op(basis.element(j))).items():
            entries[(i, j)] = v
    return DifferentialMatrix(basis, entries)


def rank(rows: List[List[Scalar]]) -> int:
    """Rank over the Gaussian rationals by exact elimination."""
    m = [list(r) for r in rows if any(r)]
    if not m:
        return 0
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = Scalar(1) / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        r += 1
        if r == len(m):
            break
    return r


def cohomology_dims(d: DifferentialMatrix, shift: Optional[int] = 1) -> Dict[int, int]:
    """dim ker - dim im per degree for an operator raising degree by ``shift``.

    With ``shift=None`` only parity is assumed and the result is keyed by 0, 1.
    """
    if not d.compose(d).is_zero():
        raise ValueError("operator does not square to zero on this basis")
    b = d.basis
    if shift is None:
        grade = lambda i: b.degree_of(i) % 2
        step = 1
    else:
        grade = b.degree_of
        step = shift
    size: Dict[int, int] = defaultdict(int)
    for i in range(len(b)):
        size[grade(i)] += 1
    for (r, c) in d.entries:
        if shift is None:
            ok = (grade(r) - grade(c)) % 2 == 1
        else:
            ok = grade(r) - grade(c) == shift
        if not ok:
            raise ValueError("operator is not homogeneous of the declared degree")

    def block(src, tgt):
        rows = [i for i in range(len(b)) if grade(i) == tgt]
        cols = [i for i in range(len(b)) if grade(i) == src]
        return [[d.entries.get((r, c), Scalar(0)) for c in cols] for r in rows]

    if shift is None:
        rk = {k: rank(block(k, 1 - k)) for k in (0, 1)}
        return {k: size[k] - rk[k] - rk[1 - k] for k in (0, 1)}
    rk = {k: rank(block(k, k + step)) for k in size}
    return {k: size[k] - rk[k] - rk.get(k - step, 0) for k in sorted(size)}


def euler_characteristic(dims: Mapping[int, int]) -> int:
    return sum((-1) ** (k % 2) * v for k, v in dims.items())


# ----------------------------------------------------------------------
# characters


class CharacterSeries:
    """Truncated sum of c[n, d] q^n z^d with n <= N."""

    def __init__(self, N: int, coeffs: Optional[Mapping[Tuple[int, int], int]] = None):
        if N < 0:
            raise ValueError("truncation order must be non-negative")
        self.N = N
        self.coeffs = {k: v for k, v in (coeffs or {}).items() if v and k[0] <= N}

    @classmethod
    def from_z_polynomial(cls, poly: Mapping[int, int], N: int) -> "CharacterSeries":
        return cls(N, {(0, d): v for d, v in poly.items()})

    def __getitem__(self, key: Tuple[int, int]) -> int:
        return self.coeffs.get(key, 0)

    def __mul__(self, other: "CharacterSeries") -> "CharacterSeries":
        N = min(self.N, other.N)
        out: Dict[Tuple[int, int], int] = defaultdict(int)
        for (n1, d1), a in self.coeffs.items():
            for (n2, d2), b in other.coeffs.items():
                if n1 + n2 <= N:
                    out[(n1 + n2, d1 + d2)] += a * b
        return CharacterSeries(N, out)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CharacterSeries) and self.N == other.N and self.coeffs == other.coeffs

    def q_coefficient(self, n: int) -> Dict[int, int]:
        return {d: v for (m, d), v in sorted(self.coeffs.items()) if m == n}

    def z_range(self) -> Tuple[int, int]:
        ds = [d for _, d in self.coeffs] or [0]
        return min(ds), max(ds)

    def grid(self) -> str:
        """Aligned table: rows q^n, columns z^d."""
        lo, hi = self.z_range()
        head = ["q\\z"] + [str(d) for d in range(lo, hi + 1)]
        rows = [head] + [[str(n)] + [str(self[(n, d)]) for d in range(lo, hi + 1)] for n in range(self.N + 1)]
        width = max(len(c) for r in rows for c in r)
        return "\n".join(" ".join(c.rjust(width) for c in r) for r in rows)

    def __str__(self) -> str:
        parts = []
        for (n, d), v in sorted(self.coeffs.items()):
            parts.append(f"{v}*q^{n}*z^{d}")
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__


def fermion_character(N: int) -> CharacterSeries:
    """prod_{n>=1} (1 + q^n z)(1 + q^n z^-1) truncated at q^N."""
    out = CharacterSeries(N, {(0, 0): 1})
    for n in range(1, N + 1):
        out = out * CharacterSeries(N, {(0, 0): 1, (n, 1): 1}) * CharacterSeries(N, {(0, 0): 1, (n, -1): 1})
    return out


def predicted_quotient_character(chi_Z: Mapping[int, int], N: int) -> CharacterSeries:
    return CharacterSeries.from_z_polynomial(chi_Z, N) * fermion_character(N)


def character_of_computed_cohomology(
    ctx: VAContext,
    op: Operator,
    N: int,
    sector: Optional[Sequence[int]] = None,
    poly_degree: int = 0,
) -> CharacterSeries:
    coeffs = {}
    for w in range(N + 1):
        b = enumerate_basis(ctx, w, sector, poly_degree)
        if not len(b):
            continue
        for d, v in cohomology_dims(differential_matrix(op, b)).items():
            coeffs[(w, d)] = v
    return CharacterSeries(N, coeffs)


def algebra_character(ctx: VAContext, N: int, sector: Optional[Sequence[int]] = None, poly_degree: int = 0) -> CharacterSeries:
    """Dimensions of the enumerated spaces themselves."""
    coeffs: Dict[Tuple[int, int], int] = defaultdict(int)
    for w in range(N + 1):
        b = enumerate_basis(ctx, w, sector, poly_degree)
        for i in range(len(b)):
            coeffs[(w, b.degree_of(i))] += 1
    return CharacterSeries(N, coeffs)
