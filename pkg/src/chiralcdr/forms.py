"""Differential forms and vector fields on a coordinate patch."""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .coeffring import CoeffFn, CoordinateError, CoordinateSystem, Scalar

Wedge = Tuple[int, ...]


def _merge_sign(a: Wedge, b: Wedge) -> Tuple[int, Optional[Wedge]]:
    """Sign and sorted index tuple of c^a ^ c^b (None when an index repeats)."""
    if set(a) & set(b):
        return 0, None
    seq = list(a) + list(b)
    # count inversions
    inv = 0
    for i, x in enumerate(a):
        for y in b:
            if y < x:
                inv += 1
    return (-1 if inv % 2 else 1), tuple(sorted(seq))


class VectorField:
    """X = sum_i X_i d/d x^i with coefficient functions."""

    __slots__ = ("coords", "comps")

    def __init__(self, coords: CoordinateSystem, comps: Sequence[CoeffFn]):
        comps = tuple(comps)
        if len(comps) != coords.dim:
            raise CoordinateError(f"expected {coords.dim} components, got {len(comps)}")
        for c in comps:
            if c.coords != coords:
                raise CoordinateError("component on a different coordinate system")
        self.coords = coords
        self.comps = comps

    @classmethod
    def zero(cls, coords: CoordinateSystem) -> "VectorField":
        return cls(coords, [CoeffFn.zero(coords)] * coords.dim)

    @classmethod
    def basis(cls, coords: CoordinateSystem, i, coeff: Optional[CoeffFn] = None) -> "VectorField":
        i = coords.index(i)
        z = CoeffFn.zero(coords)
        c = CoeffFn.const(coords, 1) if coeff is None else coeff
        return cls(coords, [c if j == i else z for j in range(coords.dim)])

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.coords, [a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.coords, [a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self) -> "VectorField":
        return VectorField(self.coords, [-a for a in self.comps])

    def __mul__(self, f) -> "VectorField":
        if isinstance(f, CoeffFn):
            return VectorField(self.coords, [f * a for a in self.comps])
        s = Scalar.of(f)
        return VectorField(self.coords, [a.scale(s) for a in self.comps])

    __rmul__ = __mul__

    def _check(self, other: "VectorField") -> None:
        if not isinstance(other, VectorField) or other.coords != self.coords:
            raise CoordinateError("vector fields on different coordinate systems")

    def __call__(self, f: CoeffFn) -> CoeffFn:
        """Directional derivative X(f)."""
        out = CoeffFn.zero(self.coords)
        for i, c in enumerate(self.comps):
            if c:
                out = out + c * f.partial(i)
        return out

    def bracket(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.coords, [self(b) - other(a) for a, b in zip(self.comps, other.comps)])

    def is_zero(self) -> bool:
        return not any(self.comps)

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VectorField) and other.coords == self.coords and other.comps == self.comps

    def __hash__(self) -> int:
        return hash(self.comps)

    def __str__(self) -> str:
        parts = []
        for i, c in enumerate(self.comps):
            if c:
                parts.append(f"({c})*d/d{self.coords.names[i]}")
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__


class DiffForm:
    """Exterior polynomial sum f_I c^I with sorted index tuples I."""

    __slots__ = ("coords", "terms")

    def __init__(self, coords: CoordinateSystem, terms: Optional[Mapping[Wedge, CoeffFn]] = None):
        self.coords = coords
        clean: Dict[Wedge, CoeffFn] = {}
        for idx, f in (terms or {}).items():
            idx = tuple(idx)
            if list(idx) != sorted(set(idx)):
                raise ValueError(f"wedge index {idx} must be strictly increasing")
            if any(not 0 <= i < coords.dim for i in idx):
                raise CoordinateError(f"wedge index {idx} outside the coordinate system")
            if f.coords != coords:
                raise CoordinateError("coefficient on a different coordinate system")
            if f:
                clean[idx] = clean[idx] + f if idx in clean else f
        self.terms = {k: v for k, v in clean.items() if v}

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, coords: CoordinateSystem) -> "DiffForm":
        return cls(coords)

    @classmethod
    def function(cls, f: CoeffFn) -> "DiffForm":
        return cls(f.coords, {(): f})

    @classmethod
    def const(cls, coords: CoordinateSystem, c) -> "DiffForm":
        return cls(coords, {(): CoeffFn.const(coords, c)})

    @classmethod
    def basis(cls, coords: CoordinateSystem, idx: Iterable, coeff: Optional[CoeffFn] = None) -> "DiffForm":
        """coeff * c^{i1} ^ c^{i2} ^ ... (indices in any order; sign follows the permutation)."""
        idx = [coords.index(i) for i in idx]
        out = cls.function(CoeffFn.const(coords, 1) if coeff is None else coeff)
        for i in idx:
            out = out.wedge(cls(coords, {(i,): CoeffFn.const(coords, 1)}))
        return out

    # arithmetic -------------------------------------------------------
    def _check(self, other: "DiffForm") -> None:
        if not isinstance(other, DiffForm) or other.coords != self.coords:
            raise CoordinateError("forms on different coordinate systems")

    def __add__(self, other: "DiffForm") -> "DiffForm":
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return DiffForm(self.coords, out)

    def __sub__(self, other: "DiffForm") -> "DiffForm":
        return self + (-other)

    def __neg__(self) -> "DiffForm":
        return DiffForm(self.coords, {k: -v for k, v in self.terms.items()})

    def __mul__(self, f) -> "DiffForm":
        if isinstance(f, DiffForm):
            return self.wedge(f)
        if isinstance(f, CoeffFn):
            return DiffForm(self.coords, {k: f * v for k, v in self.terms.items()})
        s = Scalar.of(f)
        return DiffForm(self.coords, {k: v.scale(s) for k, v in self.terms.items()})

    def __rmul__(self, f) -> "DiffForm":
        return self * f

    def wedge(self, other: "DiffForm") -> "DiffForm":
        self._check(other)
        out: Dict[Wedge, CoeffFn] = {}
        for a, fa in self.terms.items():
            for b, fb in other.terms.items():
                sgn, idx = _merge_sign(a, b)
                if idx is None:
                    continue
                v = (fa * fb).scale(sgn)
                out[idx] = out[idx] + v if idx in out else v
        return DiffForm(self.coords, out)

    __xor__ = wedge

    # calculus ---------------------------------------------------------
    def d(self) -> "DiffForm":
        out = DiffForm.zero(self.coords)
        for idx, f in self.terms.items():
            for i in range(self.coords.dim):
                g = f.partial(i)
                if g:
                    out = out + DiffForm(self.coords, {(i,): g}).wedge(DiffForm(self.coords, {idx: CoeffFn.const(self.coords, 1)}))
        return out

    def contract_basis(self, i: int) -> "DiffForm":
        """Contraction with d/dx^i."""
        out: Dict[Wedge, CoeffFn] = {}
        for idx, f in self.terms.items():
            if i in idx:
                pos = idx.index(i)
                rest = idx[:pos] + idx[pos + 1:]
                v = f.scale(-1 if pos % 2 else 1)
                out[rest] = out[rest] + v if rest in out else v
        return DiffForm(self.coords, out)

    def contract(self, X: VectorField) -> "DiffForm":
        if X.coords != self.coords:
            raise CoordinateError("vector field on a different coordinate system")
        out = DiffForm.zero(self.coords)
        for i, c in enumerate(X.comps):
            if c:
                out = out + self.contract_basis(i) * c
        return out

    def lie(self, X: VectorField) -> "DiffForm":
        return self.d().contract(X) + self.contract(X).d()

    # inspection -------------------------------------------------------
    def degrees(self) -> set:
        return {len(k) for k in self.terms}

    def degree(self) -> int:
        ds = self.degrees()
        if len(ds) > 1:
            raise ValueError("form is not homogeneous")
        return ds.pop() if ds else 0

    def component(self, k: int) -> "DiffForm":
        return DiffForm(self.coords, {i: f for i, f in self.terms.items() if len(i) == k})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_closed(self) -> bool:
        return self.d().is_zero()

    def coefficient(self, idx: Iterable) -> CoeffFn:
        idx = tuple(sorted(self.coords.index(i) for i in idx))
        return self.terms.get(idx, CoeffFn.zero(self.coords))

    def function_part(self) -> CoeffFn:
        return self.terms.get((), CoeffFn.zero(self.coords))

    def max_poly_degree(self) -> int:
        return max((f.degree() for f in self.terms.values()), default=-1)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, DiffForm):
            return other.coords == self.coords and other.terms == self.terms
        if isinstance(other, int) and other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for idx in sorted(self.terms, key=lambda t: (len(t), t)):
            f = self.terms[idx]
            if not idx:
                parts.append(str(f) if len(f.terms()) == 1 else f"({f})")
                continue
            w = " ".join(f"c[{i + 1}]" for i in idx)
            w = f":{w}:" if len(idx) > 1 else w
            if f.is_one():
                parts.append(w)
            elif f == -1:
                parts.append("-" + w)
            elif len(f.terms()) == 1 and not str(f).startswith("("):
                parts.append(f"{f}*{w}")
            else:
                parts.append(f"({f})*{w}")
        out = parts[0]
        for p in parts[1:]:
            out += (" - " + p[1:]) if p.startswith("-") else (" + " + p)
        return out

    __repr__ = __str__


def one_form(coords: CoordinateSystem, comps: Sequence[CoeffFn]) -> DiffForm:
    """sum_i comps[i] c^i."""
    return DiffForm(coords, {(i,): c for i, c in enumerate(comps) if c})


def poincare_potential(omega: DiffForm) -> DiffForm:
    """A form alpha with d(alpha) = omega for closed omega of positive degree on flat coordinates.

    Uses the radial homotopy: f x^e c^I maps to f x^e iota_E c^I / (|e| + |I|)
    with E the Euler vector field.
    """
    coords = omega.coords
    if coords.m:
        raise CoordinateError("the radial homotopy needs flat coordinates only")
    if 0 in omega.degrees():
        raise ValueError("functions have no potential")
    if not omega.is_closed():
        raise ValueError("form is not closed")
    out = DiffForm.zero(coords)
    for idx, f in omega.terms.items():
        for (exps, modes), c in f.terms():
            total = sum(exps) + len(idx)
            mono = CoeffFn(coords, {(exps, modes): c * Scalar(Fraction(1, total))})
            for pos, i in enumerate(idx):
                rest = idx[:pos] + idx[pos + 1:]
                coef = mono * CoeffFn.coordinate(coords, i)
                out = out + DiffForm(coords, {rest: coef.scale(-1 if pos % 2 else 1)})
    return out
