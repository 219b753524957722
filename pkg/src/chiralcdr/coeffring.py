"""Exact coefficient rings for patches.

Functions on a patch ``U x T^m`` are modelled by the differential ring of
polynomials in flat coordinates times Fourier monomials ``exp(i k theta)``
in angular coordinates.  Scalars are Gaussian rationals, so every identity
checked by the package is checked exactly.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

Number = Union[int, Fraction, "Scalar"]


class Scalar:
    """Exact Gaussian rational ``re + i*im``."""

    __slots__ = ("re", "im", "_hash")

    def __init__(self, re: Union[int, Fraction] = 0, im: Union[int, Fraction] = 0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)
        self._hash = None

    @staticmethod
    def of(x: Number) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        if isinstance(x, (int, Fraction)):
            return Scalar(x)
        if isinstance(x, complex):
            raise TypeError("floating complex numbers are not exact scalars")
        raise TypeError(f"cannot convert {x!r} to Scalar")

    def __add__(self, other: Number) -> "Scalar":
        o = Scalar.of(other)
        return Scalar(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self) -> "Scalar":
        return Scalar(-self.re, -self.im)

    def __sub__(self, other: Number) -> "Scalar":
        o = Scalar.of(other)
        return Scalar(self.re - o.re, self.im - o.im)

    def __rsub__(self, other: Number) -> "Scalar":
        return Scalar.of(other) - self

    def __mul__(self, other: Number) -> "Scalar":
        if isinstance(other, (int, Fraction)):
            return Scalar(self.re * other, self.im * other)
        o = Scalar.of(other)
        if not self.im and not o.im:
            return Scalar(self.re * o.re)
        return Scalar(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conjugate(self) -> "Scalar":
        return Scalar(self.re, -self.im)

    def __truediv__(self, other: Number) -> "Scalar":
        o = Scalar.of(other)
        if not o:
            raise ZeroDivisionError("division by zero scalar")
        if not o.im:
            return Scalar(self.re / o.re, self.im / o.re)
        den = o.re * o.re + o.im * o.im
        num = self * o.conjugate()
        return Scalar(num.re / den, num.im / den)

    def __rtruediv__(self, other: Number) -> "Scalar":
        return Scalar.of(other) / self

    def __pow__(self, k: int) -> "Scalar":
        if k < 0:
            return Scalar(1) / (self ** (-k))
        out = Scalar(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Scalar):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return not self.im and self.re == other
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.re) if not self.im else hash((self.re, self.im))
        return self._hash

    def is_real(self) -> bool:
        return not self.im

    def __repr__(self) -> str:
        return f"Scalar({self})"

    def __str__(self) -> str:
        def frac(q: Fraction) -> str:
            return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"

        if not self.im:
            return frac(self.re)
        if not self.re:
            if self.im == 1:
                return "i"
            if self.im == -1:
                return "-i"
            return f"{frac(self.im)}*i"
        sign = "+" if self.im > 0 else "-"
        mag = abs(self.im)
        imag = "i" if mag == 1 else f"{frac(mag)}*i"
        return f"({frac(self.re)}{sign}{imag})"


ZERO = Scalar(0)
ONE = Scalar(1)
I = Scalar(0, 1)


class CoordinateError(ValueError):
    """Raised for unknown coordinates or mismatched coordinate systems."""


@dataclass(frozen=True)
class CoordinateSystem:
    """``n`` flat coordinates followed by ``m`` angular (period ``2*pi``) ones."""

    flat: tuple = ()
    angular: tuple = ()

    def __post_init__(self):
        names = list(self.flat) + list(self.angular)
        if len(set(names)) != len(names):
            raise CoordinateError(f"coordinate names must be distinct: {names}")

    @staticmethod
    def standard(n: int, m: int = 0) -> "CoordinateSystem":
        if n < 0 or m < 0:
            raise CoordinateError("coordinate counts must be non-negative")
        return CoordinateSystem(
            tuple(f"gamma{i}" for i in range(1, n + 1)),
            tuple(f"theta{j}" for j in range(1, m + 1)),
        )

    @property
    def n(self) -> int:
        return len(self.flat)

    @property
    def m(self) -> int:
        return len(self.angular)

    @property
    def dim(self) -> int:
        return len(self.flat) + len(self.angular)

    @property
    def names(self) -> tuple:
        return tuple(self.flat) + tuple(self.angular)

    def index(self, coord: Union[int, str]) -> int:
        """Resolve a coordinate id (position or name) to its position."""
        if isinstance(coord, int) and not isinstance(coord, bool):
            if 0 <= coord < self.dim:
                return coord
            raise CoordinateError(f"coordinate index {coord} out of range for {self.names}")
        if isinstance(coord, str):
            try:
                return self.names.index(coord)
            except ValueError:
                raise CoordinateError(f"unknown coordinate {coord!r}") from None
        raise CoordinateError(f"bad coordinate id {coord!r}")

    def is_angular(self, idx: int) -> bool:
        return idx >= self.n


Key = tuple  # (flat exponents, Fourier modes)


@functools.lru_cache(maxsize=None)
def _zero_key(n: int, m: int) -> tuple:
    return ((0,) * n, (0,) * m)


class CoeffFn:
    """Finite sum of scalar * monomial * Fourier factor; canonical and immutable."""

    __slots__ = ("coords", "_terms", "_hash")

    def __init__(self, coords: CoordinateSystem, terms: Mapping[Key, Number] | None = None):
        self.coords = coords
        clean = {}
        if terms:
            n, m = coords.n, coords.m
            for key, c in terms.items():
                exps, modes = key
                if len(exps) != n or len(modes) != m or any(e < 0 for e in exps):
                    raise CoordinateError(f"malformed monomial key {key!r}")
                s = Scalar.of(c)
                if s:
                    clean[(tuple(exps), tuple(modes))] = s
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, coords: CoordinateSystem, terms: dict) -> "CoeffFn":
        obj = cls.__new__(cls)
        obj.coords = coords
        obj._terms = terms
        obj._hash = None
        return obj

    # constructors -------------------------------------------------------
    @classmethod
    def const(cls, coords: CoordinateSystem, c: Number = 1) -> "CoeffFn":
        s = Scalar.of(c)
        if not s:
            return cls._raw(coords, {})
        return cls._raw(coords, {((0,) * coords.n, (0,) * coords.m): s})

    @classmethod
    def zero(cls, coords: CoordinateSystem) -> "CoeffFn":
        return cls._raw(coords, {})

    @classmethod
    def coordinate(cls, coords: CoordinateSystem, coord: Union[int, str]) -> "CoeffFn":
        """The flat coordinate function ``gamma^i``."""
        i = coords.index(coord)
        if coords.is_angular(i):
            raise CoordinateError("angular coordinates are not functions; use fourier()")
        exps = tuple(1 if k == i else 0 for k in range(coords.n))
        return cls._raw(coords, {(exps, (0,) * coords.m): ONE})

    @classmethod
    def fourier(cls, coords: CoordinateSystem, coord: Union[int, str], k: int) -> "CoeffFn":
        """``exp(i k theta)`` for an angular coordinate."""
        j = coords.index(coord)
        if not coords.is_angular(j):
            raise CoordinateError("Fourier factors need an angular coordinate")
        j -= coords.n
        modes = tuple(k if t == j else 0 for t in range(coords.m))
        return cls._raw(coords, {((0,) * coords.n, modes): ONE})

    @classmethod
    def monomial(cls, coords: CoordinateSystem, exps: Iterable[int], modes: Iterable[int] = (), c: Number = 1):
        modes = tuple(modes) or (0,) * coords.m
        return cls(coords, {(tuple(exps), modes): c})

    # inspection ---------------------------------------------------------
    def terms(self) -> list:
        """Canonically sorted list of ``((exps, modes), Scalar)``."""
        return sorted(self._terms.items(), key=lambda kv: kv[0])

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def _zero_key(self) -> tuple:
        return _zero_key(self.coords.n, self.coords.m)

    def is_constant(self) -> bool:
        t = self._terms
        return not t or (len(t) == 1 and self._zero_key() in t)

    def constant_term(self) -> Scalar:
        return self._terms.get(self._zero_key(), ZERO)

    def is_one(self) -> bool:
        t = self._terms
        if len(t) != 1:
            return False
        c = t.get(self._zero_key())
        return c is not None and c == 1

    def degree(self) -> int:
        """Total polynomial degree in the flat coordinates (-1 for zero)."""
        return max((sum(k[0]) for k in self._terms), default=-1)

    def fourier_modes(self) -> set:
        return {k[1] for k in self._terms}

    def _check(self, other: "CoeffFn") -> None:
        if other.coords is not self.coords and other.coords != self.coords:
            raise CoordinateError("coordinate-system mismatch")

    # arithmetic ---------------------------------------------------------
    def __add__(self, other: "CoeffFn") -> "CoeffFn":
        if not isinstance(other, CoeffFn):
            other = CoeffFn.const(self.coords, other)
        self._check(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for k, c in other._terms.items():
            v = out.get(k)
            if v is None:
                out[k] = c
            else:
                v = v + c
                if v:
                    out[k] = v
                else:
                    del out[k]
        return CoeffFn._raw(self.coords, out)

    __radd__ = __add__

    def __neg__(self) -> "CoeffFn":
        return CoeffFn._raw(self.coords, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other: "CoeffFn") -> "CoeffFn":
        if not isinstance(other, CoeffFn):
            other = CoeffFn.const(self.coords, other)
        return self + (-other)

    def __rsub__(self, other) -> "CoeffFn":
        return CoeffFn.const(self.coords, other) - self

    def scale(self, s: Number) -> "CoeffFn":
        s = Scalar.of(s)
        if not s:
            return CoeffFn._raw(self.coords, {})
        if s == 1:
            return self
        return CoeffFn._raw(self.coords, {k: c * s for k, c in self._terms.items()})

    def __mul__(self, other) -> "CoeffFn":
        if not isinstance(other, CoeffFn):
            return self.scale(other)
        self._check(other)
        if not self._terms or not other._terms:
            return CoeffFn._raw(self.coords, {})
        out: dict = {}
        for (e1, m1), c1 in self._terms.items():
            for (e2, m2), c2 in other._terms.items():
                k = (tuple(a + b for a, b in zip(e1, e2)), tuple(a + b for a, b in zip(m1, m2)))
                v = out.get(k)
                c = c1 * c2
                if v is None:
                    out[k] = c
                else:
                    v = v + c
                    if v:
                        out[k] = v
                    else:
                        del out[k]
        return CoeffFn._raw(self.coords, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "CoeffFn":
        if k < 0:
            raise ValueError("negative powers are outside the ring")
        out = CoeffFn.const(self.coords, 1)
        for _ in range(k):
            out = out * self
        return out

    def partial(self, coord: Union[int, str]) -> "CoeffFn":
        i = self.coords.index(coord)
        out: dict = {}
        if not self.coords.is_angular(i):
            for (exps, modes), c in self._terms.items():
                e = exps[i]
                if e:
                    ne = exps[:i] + (e - 1,) + exps[i + 1:]
                    out[(ne, modes)] = c * e
        else:
            j = i - self.coords.n
            for (exps, modes), c in self._terms.items():
                k = modes[j]
                if k:
                    out[(exps, modes)] = c * Scalar(0, k)
        return CoeffFn._raw(self.coords, out)

    def gradient(self) -> tuple:
        return tuple(self.partial(i) for i in range(self.coords.dim))

    def substitute(self, images: list) -> "CoeffFn":
        """Compose with a polynomial map: flat coordinate i is replaced by images[i].

        Only defined for functions without Fourier factors (flat coordinate
        changes); images live in the target coordinate system.
        """
        if not images:
            raise CoordinateError("substitution needs at least one image")
        target = images[0].coords
        out = CoeffFn.zero(target)
        for (exps, modes), c in self._terms.items():
            if any(modes):
                raise CoordinateError("cannot substitute into Fourier factors")
            term = CoeffFn.const(target, c)
            for i, e in enumerate(exps):
                if e:
                    term = term * images[i] ** e
            out = out + term
        return out

    # comparison / hashing ----------------------------------------------
    def __eq__(self, other: object) -> bool:
        if isinstance(other, CoeffFn):
            return self.coords == other.coords and self._terms == other._terms
        if isinstance(other, (int, Fraction, Scalar)):
            return self == CoeffFn.const(self.coords, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # printing -----------------------------------------------------------
    def _term_str(self, key: Key, c: Scalar) -> str:
        exps, modes = key
        parts = []
        for name, e in zip(self.coords.flat, exps):
            if e == 1:
                parts.append(_pretty_coord(name))
            elif e > 1:
                parts.append(f"{_pretty_coord(name)}^{e}")
        for name, k in zip(self.coords.angular, modes):
            if k:
                parts.append(f"exp(i*{k}*{name})")
        body = "*".join(parts)
        if not body:
            return str(c)
        if c == 1:
            return body
        if c == -1:
            return "-" + body
        return f"{c}*{body}"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        pieces = [self._term_str(k, c) for k, c in self.terms()]
        out = pieces[0]
        for p in pieces[1:]:
            out += (" - " + p[1:]) if p.startswith("-") else (" + " + p)
        return out

    def __repr__(self) -> str:
        return f"CoeffFn({self})"


def _pretty_coord(name: str) -> str:
    """gamma3 -> gamma[3]; other names unchanged."""
    if name.startswith("gamma") and name[5:].isdigit():
        return f"gamma[{name[5:]}]"
    return name


def partial(f: CoeffFn, coord: Union[int, str]) -> CoeffFn:
    return f.partial(coord)


def multiply(f: CoeffFn, g: CoeffFn) -> CoeffFn:
    return f * g


def is_zero(f: CoeffFn) -> bool:
    return f.is_zero()
