"""Vertex-algebra calculus on presented algebras with a function-ring prefix.

Elements are finite sums of normally ordered monomials ``:f :x1 :x2 ... :::``
where ``f`` is a coefficient function and ``x1 <= x2 <= ...`` are generator
derivatives in a fixed order (b < c < beta < jets < abstract, then index,
then derivative order).  Lambda-brackets of arbitrary elements are reduced
to the declared generator table with sesquilinearity, skew-symmetry and the
right Wick formula; Wick products are brought to normal form with
quasi-commutativity and quasi-associativity.

Lambda polynomials are stored in divided powers: entry ``k`` is the
coefficient of ``lambda^k / k!``, which is exactly the circle product
``a o(k) b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from .coeffring import CoeffFn, CoordinateSystem, Scalar

KIND_RANK = {"b": 0, "c": 1, "beta": 2, "jet": 3, "abstract": 4}


class ContextError(ValueError):
    """Raised when expressions from different contexts are combined."""


class GradingError(ValueError):
    """Raised when a homogeneous input is required but not supplied."""


@dataclass(frozen=True)
class Generator:
    name: str
    kind: str
    index: int
    parity: int
    weight: int
    degree: int

    def __post_init__(self):
        if self.kind not in KIND_RANK:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.parity not in (0, 1):
            raise ValueError("parity must be 0 (even) or 1 (odd)")
        expected = {
            "b": (1, 1, -1),
            "c": (1, 0, 1),
            "beta": (0, 1, 0),
            "jet": (0, 1, 0),
        }.get(self.kind)
        if expected and (self.parity, self.weight, self.degree) != expected:
            raise GradingError(f"generator {self.name} has gradings inconsistent with kind {self.kind}")


Factor = Tuple[int, int]  # (generator position, derivative order)
Mono = Tuple[Factor, ...]
Raw = Dict[Mono, CoeffFn]
RawPoly = Dict[int, Raw]


def _sign(pa: int, pb: int) -> int:
    return -1 if (pa & pb) else 1


class VAContext:
    """Generators, their lambda-brackets and their action on coefficient functions.

    Parameters
    ----------
    coords:
        coordinate system of the coefficient ring; one jet generator
        ``dgamma[i]`` is added automatically for every coordinate.
    generators:
        non-jet generators.
    vector_fields:
        ``name -> components``; generator ``x`` acts on functions by
        ``[x lam f] = sum_i v_i d_i f`` (a constant in lambda).
    bracket_table:
        callable receiving the context and returning
        ``{(name_a, name_b): {k: FieldExpr}}`` with circle products
        ``a o(k) b`` for ordered pairs; the opposite order follows by
        skew-symmetry.  Pairs not listed bracket to zero.
    graded:
        when true, declared brackets must respect weight and degree; twisted
        algebras are only filtered and pass ``graded=False``.
    """

    def __init__(
        self,
        coords: CoordinateSystem,
        generators: Sequence[Generator] = (),
        vector_fields: Optional[Mapping[str, Sequence[CoeffFn]]] = None,
        bracket_table: Optional[Callable[["VAContext"], Mapping]] = None,
        graded: bool = True,
        label: str = "",
    ):
        self.coords = coords
        self.label = label
        self.graded = graded
        gens = list(generators)
        for i in range(coords.dim):
            gens.append(Generator(f"dgamma[{i + 1}]", "jet", i + 1, 0, 1, 0))
        order = sorted(range(len(gens)), key=lambda t: (KIND_RANK[gens[t].kind], gens[t].index, t))
        self.generators: Tuple[Generator, ...] = tuple(gens[t] for t in order)
        self._pos = {g.name: p for p, g in enumerate(self.generators)}
        if len(self._pos) != len(self.generators):
            raise ValueError("generator names must be distinct")
        self._parity = tuple(g.parity for g in self.generators)
        self._jet_coord = {p: g.index - 1 for p, g in enumerate(self.generators) if g.kind == "jet"}
        self._coord_jet = {c: p for p, c in self._jet_coord.items()}
        self.zero_fn = CoeffFn.zero(coords)
        self.one_fn = CoeffFn.const(coords, 1)
        vfs = {}
        for name, comps in (vector_fields or {}).items():
            p = self.position(name)
            comps = tuple(comps)
            if len(comps) != coords.dim:
                raise ValueError(f"vector field for {name} needs {coords.dim} components")
            if any(c for c in comps):
                if self._parity[p]:
                    raise GradingError("only even generators may act on functions")
                vfs[p] = comps
        self._vf = vfs
        self._table: Dict[Tuple[int, int], RawPoly] = {}
        self._caches: Dict[str, dict] = {
            "xwf": {}, "wick": {}, "br": {}, "gbr": {}, "dfree": {}, "dfn": {},
        }
        if bracket_table is not None:
            for (na, nb), poly in bracket_table(self).items():
                self._declare(na, nb, poly)

    # ------------------------------------------------------------------
    def position(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise ContextError(f"unknown generator {name!r}") from None

    def generator(self, name: str) -> Generator:
        return self.generators[self.position(name)]

    def has(self, name: str) -> bool:
        return name in self._pos

    def jet_position(self, coord: int) -> int:
        return self._coord_jet[coord]

    def _declare(self, na: str, nb: str, poly) -> None:
        pa, pb = self.position(na), self.position(nb)
        ga, gb = self.generators[pa], self.generators[pb]
        if ga.kind == "jet" or gb.kind == "jet":
            raise ValueError("jet brackets are derived from vector fields, not declared")
        raw: RawPoly = {}
        items = poly.items() if isinstance(poly, Mapping) else enumerate(poly)
        for k, e in items:
            if isinstance(e, FieldExpr):
                if e.ctx is not self:
                    raise ContextError("bracket entries must live in the declaring context")
                r = e.terms
            else:
                r = e
            if r:
                raw[int(k)] = dict(r)
        target_parity = (ga.parity + gb.parity) % 2
        for k, r in raw.items():
            for mono in r:
                if self.mono_parity(mono) != target_parity:
                    raise GradingError(f"bracket [{na} lam {nb}] entry {k} breaks parity")
                wt = self.mono_weight(mono)
                limit = ga.weight + gb.weight - k - 1
                if self.graded:
                    if wt != limit or self.mono_degree(mono) != ga.degree + gb.degree:
                        raise GradingError(f"bracket [{na} lam {nb}] entry {k} breaks grading")
                elif wt > limit:
                    raise GradingError(f"bracket [{na} lam {nb}] entry {k} exceeds the weight filtration")
        if pa <= pb:
            self._table[(pa, pb)] = raw
        else:
            self._table[(pb, pa)] = _skew_raw(self, raw, ga.parity, gb.parity)

    # gradings ---------------------------------------------------------
    def mono_parity(self, mono: Mono) -> int:
        return sum(self._parity[g] for g, _ in mono) % 2

    def mono_weight(self, mono: Mono) -> int:
        return sum(self.generators[g].weight + d for g, d in mono)

    def mono_degree(self, mono: Mono) -> int:
        return sum(self.generators[g].degree for g, _ in mono)

    def acts_on_functions(self, g: int) -> bool:
        return g in self._vf

    def cache_size(self) -> int:
        return sum(len(c) for c in self._caches.values())

    def __repr__(self) -> str:
        names = ", ".join(g.name for g in self.generators)
        return f"VAContext({self.label or 'unnamed'}: {names})"


# ----------------------------------------------------------------------
# raw helpers


def _add(acc: Raw, mono: Mono, f: CoeffFn) -> None:
    if not f:
        return
    v = acc.get(mono)
    if v is None:
        acc[mono] = f
    else:
        v = v + f
        if v:
            acc[mono] = v
        else:
            del acc[mono]


def _add_raw(acc: Raw, r: Raw, s=None) -> None:
    for mono, f in r.items():
        _add(acc, mono, f if s is None else f * s)


def _scale_raw(r: Raw, s) -> Raw:
    if isinstance(s, (int, Fraction)):
        s = Scalar(s)
    if isinstance(s, Scalar):
        if not s:
            return {}
        if s == 1:
            return r
    out: Raw = {}
    for mono, f in r.items():
        v = f * s
        if v:
            out[mono] = v
    return out


def _padd(acc: RawPoly, k: int, r: Raw, s=None) -> None:
    if not r:
        return
    slot = acc.setdefault(k, {})
    _add_raw(slot, r, s)
    if not slot:
        del acc[k]


def _clean_poly(p: RawPoly) -> RawPoly:
    return {k: v for k, v in p.items() if v}


def _skew_raw(ctx: VAContext, poly: RawPoly, pa: int, pb: int) -> RawPoly:
    """Given [a lam b], return [b lam a] = -p(a,b) [a  -lam-d  b]."""
    if not poly:
        return {}
    sgn = -_sign(pa, pb)
    out: RawPoly = {}
    top = max(poly)
    for j in range(top + 1):
        acc: Raw = {}
        for k in range(j, top + 1):
            ck = poly.get(k)
            if not ck:
                continue
            term = _dpow_raw(ctx, ck, k - j)
            _add_raw(acc, term, Scalar(sgn * (-1 if k % 2 else 1)))
        if acc:
            out[j] = acc
    return out


def _dpow_raw(ctx: VAContext, r: Raw, m: int) -> Raw:
    """Divided power derivative d^m / m!."""
    if m == 0:
        return r
    out = r
    for _ in range(m):
        out = _deriv_raw(ctx, out)
    if m > 1:
        out = _scale_raw(out, Scalar(Fraction(1, factorial(m))))
    return out


# ----------------------------------------------------------------------
# derivative


def _deriv_fn(ctx: VAContext, f: CoeffFn) -> Raw:
    """d f = sum_i :(d_i f) dgamma^i:."""
    cache = ctx._caches["dfn"]
    hit = cache.get(f)
    if hit is not None:
        return hit
    out: Raw = {}
    for i in range(ctx.coords.dim):
        g = f.partial(i)
        if g:
            _add(out, ((ctx._coord_jet[i], 0),), g)
    cache[f] = out
    return out


def _deriv_free(ctx: VAContext, mono: Mono) -> Raw:
    cache = ctx._caches["dfree"]
    hit = cache.get(mono)
    if hit is not None:
        return hit
    if not mono:
        out: Raw = {}
    else:
        (g, d), rest = mono[0], mono[1:]
        out = dict(_xwick_free(ctx, (g, d + 1), rest))
        if rest:
            _add_raw(out, _xwick(ctx, (g, d), _deriv_free(ctx, rest)))
    cache[mono] = out
    return out


def _deriv_raw(ctx: VAContext, r: Raw) -> Raw:
    out: Raw = {}
    for mono, f in r.items():
        if mono:
            _add_raw(out, _fwick(ctx, f, _deriv_free(ctx, mono)))
        if not f.is_constant():
            df = _deriv_fn(ctx, f)
            _add_raw(out, _wick(ctx, df, {mono: ctx.one_fn}))
    return out


# ----------------------------------------------------------------------
# generator brackets with sesquilinearity


def _base_bracket(ctx: VAContext, a: int, b: int) -> RawPoly:
    """[a lam b] for generators a, b (no derivatives)."""
    ja = a in ctx._jet_coord
    jb = b in ctx._jet_coord
    if jb:
        if ja:
            return {}
        v = ctx._vf.get(a)
        if v is None:
            return {}
        comp = v[ctx._jet_coord[b]]
        if not comp:
            return {}
        out: RawPoly = {1: {(): comp}}
        d = _deriv_fn(ctx, comp)
        if d:
            out[0] = dict(d)
        return out
    if ja:
        return _skew_raw(ctx, _base_bracket(ctx, b, a), ctx._parity[b], ctx._parity[a])
    if a <= b:
        return ctx._table.get((a, b), {})
    t = ctx._table.get((b, a))
    if not t:
        return {}
    return _skew_raw(ctx, t, ctx._parity[b], ctx._parity[a])


def _gen_bracket(ctx: VAContext, x: Factor, y: Factor) -> RawPoly:
    """[d^d a lam d^e b] = (-lam)^d (lam + d)^e [a lam b]."""
    cache = ctx._caches["gbr"]
    key = (x, y)
    hit = cache.get(key)
    if hit is not None:
        return hit
    (a, d), (b, e) = x, y
    base = _base_bracket(ctx, a, b)
    out: RawPoly = {}
    if base:
        # (lam + d)^e = e! sum_j lam^(j) d^(e-j)
        tmp: RawPoly = {}
        for k, ck in base.items():
            for j in range(e + 1):
                term = _dpow_raw(ctx, ck, e - j)
                if term:
                    _padd(tmp, j + k, term, Scalar(factorial(e) * comb(j + k, j)))
        # (-lam)^d = (-1)^d d! lam^(d)
        for m, cm in tmp.items():
            _padd(out, m + d, cm, Scalar((-1) ** d * factorial(d) * comb(d + m, d)))
    out = _clean_poly(out)
    cache[key] = out
    return out


# ----------------------------------------------------------------------
# Wick products


def _fwick(ctx: VAContext, f: CoeffFn, r: Raw) -> Raw:
    """:f E: for a coefficient function f."""
    if f.is_constant():
        return _scale_raw(r, f.constant_term())
    out: Raw = {}
    for mono, g in r.items():
        _add_raw(out, _wick_mono(ctx, ((), f), (mono, g)))
    return out


def _xwick(ctx: VAContext, x: Factor, r: Raw) -> Raw:
    """:x E: for a single generator derivative x."""
    out: Raw = {}
    for mono, g in r.items():
        _add_raw(out, _wick_mono(ctx, ((x,), ctx.one_fn), (mono, g)))
    return out


def _xwick_free(ctx: VAContext, x: Factor, mono: Mono) -> Raw:
    """:x Y: for a function-free canonical monomial Y."""
    cache = ctx._caches["xwf"]
    key = (x, mono)
    hit = cache.get(key)
    if hit is not None:
        return hit
    one = ctx.one_fn
    if not mono or x < mono[0]:
        out: Raw = {(x,) + mono: one}
    elif x == mono[0]:
        if not ctx._parity[x[0]]:
            out = {(x,) + mono: one}
        else:
            # :x:xY:: = ::xx:Y: and :xx: = 1/2 int_{-d}^0 [x lam x]
            sq = _integral_minus_d(ctx, _gen_bracket(ctx, x, x))
            out = _wick(ctx, _scale_raw(sq, Scalar(Fraction(1, 2))), {mono[1:]: one}) if sq else {}
    else:
        y, rest = mono[0], mono[1:]
        sgn = _sign(ctx._parity[x[0]], ctx._parity[y[0]])
        inner = _xwick_free(ctx, x, rest)
        out = {}
        _add_raw(out, _xwick(ctx, y, inner), Scalar(sgn) if sgn < 0 else None)
        corr = _integral_minus_d(ctx, _gen_bracket(ctx, x, y))
        if corr:
            _add_raw(out, _wick(ctx, corr, {rest: one}))
    cache[key] = out
    return out


def _integral_minus_d(ctx: VAContext, poly: RawPoly) -> Raw:
    """int_{-d}^0 [a lam b] d lam = sum_k (-1)^k d^(k+1) (a o(k) b)."""
    out: Raw = {}
    for k, ck in poly.items():
        _add_raw(out, _dpow_raw(ctx, ck, k + 1), Scalar(-1 if k % 2 else 1))
    return out


def _wick(ctx: VAContext, a: Raw, b: Raw) -> Raw:
    out: Raw = {}
    for ma, fa in a.items():
        for mb, fb in b.items():
            _add_raw(out, _wick_mono(ctx, (ma, fa), (mb, fb)))
    return out


def _wick_mono(ctx: VAContext, A: Tuple[Mono, CoeffFn], B: Tuple[Mono, CoeffFn]) -> Raw:
    X, f = A
    Y, g = B
    # pull scalar constants out of both sides
    if f.is_constant() and not f.is_one():
        return _scale_raw(_wick_mono(ctx, (X, ctx.one_fn), B), f.constant_term())
    if g.is_constant() and not g.is_one():
        return _scale_raw(_wick_mono(ctx, A, (Y, ctx.one_fn)), g.constant_term())
    if not X and f.is_one():
        return {Y: g}
    if not Y and g.is_one():
        return {X: f}
    cache = ctx._caches["wick"]
    key = (X, f, Y, g)
    hit = cache.get(key)
    if hit is not None:
        return hit
    one = ctx.one_fn
    out: Raw = {}
    if not X:
        # function atom f against :g Y:
        if not Y:
            _add(out, (), f * g)
        elif g.is_one():
            # :f Y: is canonical
            _add(out, Y, f)
        else:
            # :f:gY:: = :(fg)Y: - QA(f, g, Y)
            _add(out, Y, f * g)
            _add_raw(out, _qa_fn_fn(ctx, f, g, Y), Scalar(-1))
    elif len(X) == 1 and f.is_one():
        x = X[0]
        if g.is_one():
            out = dict(_xwick_free(ctx, x, Y))
        else:
            # :x:gY:: = :g:xY:: + :(d^{d+1}(D_x g)/(d+1)) Y:
            _add_raw(out, _fwick(ctx, g, _xwick_free(ctx, x, Y)))
            if x[1] >= 0 and x[0] in ctx._vf:
                dg = _apply_vf(ctx, ctx._vf[x[0]], g)
                if dg:
                    m = x[1] + 1
                    p = _dpow_raw(ctx, {(): dg}, m)
                    if p:
                        # p is d^m/m!, the correction is d^m/m
                        _add_raw(out, _wick(ctx, _scale_raw(p, Scalar(factorial(m - 1))), {Y: one}))
    elif not f.is_one():
        # ::f X: B: = :f :X B:: + QA(f, X, B)
        inner = _wick_mono(ctx, (X, one), B)
        _add_raw(out, _fwick(ctx, f, inner))
        _add_raw(out, _qa(ctx, ("f", f), X, {Y: g}))
    else:
        # ::x X': B: = :x :X' B:: + QA(x, X', B)
        x, rest = X[0], X[1:]
        inner = _wick_mono(ctx, (rest, one), B)
        _add_raw(out, _xwick(ctx, x, inner))
        _add_raw(out, _qa(ctx, ("x", x), rest, {Y: g}))
    cache[key] = out
    return out


def _apply_vf(ctx: VAContext, vf: Sequence[CoeffFn], f: CoeffFn) -> CoeffFn:
    out = ctx.zero_fn
    for i, v in enumerate(vf):
        if v:
            pf = f.partial(i)
            if pf:
                out = out + v * pf
    return out


def _atom_raw(ctx: VAContext, atom) -> Raw:
    kind, val = atom
    if kind == "f":
        return {(): val}
    return {(val,): ctx.one_fn}


def _atom_parity(ctx: VAContext, atom) -> int:
    kind, val = atom
    return 0 if kind == "f" else ctx._parity[val[0]]


def _qa(ctx: VAContext, a, bmono: Mono, c: Raw) -> Raw:
    """QA(a, b, c) = sum_k :(d^(k+1) a)(b o(k) c): + p(a,b) sum_k :(d^(k+1) b)(a o(k) c):."""
    out: Raw = {}
    araw = _atom_raw(ctx, a)
    braw = {bmono: ctx.one_fn}
    pa = _atom_parity(ctx, a)
    pb = ctx.mono_parity(bmono)
    bc = _bracket(ctx, braw, c)
    for k, e in bc.items():
        da = _dpow_raw(ctx, araw, k + 1)
        if da:
            _add_raw(out, _wick(ctx, da, e))
    ac = _bracket(ctx, araw, c)
    sgn = Scalar(_sign(pa, pb))
    for k, e in ac.items():
        db = _dpow_raw(ctx, braw, k + 1)
        if db:
            _add_raw(out, _wick(ctx, db, e), sgn)
    return out


def _qa_fn_fn(ctx: VAContext, f: CoeffFn, g: CoeffFn, Y: Mono) -> Raw:
    """QA(f, g, Y) for two functions against a function-free monomial."""
    if not any(gp in ctx._vf for gp, _ in Y):
        return {}
    out: Raw = {}
    yraw = {Y: ctx.one_fn}
    for h, other in ((f, g), (g, f)):
        br = _bracket(ctx, {(): other}, yraw)
        for k, e in br.items():
            dh = _dpow_raw(ctx, {(): h}, k + 1)
            if dh:
                _add_raw(out, _wick(ctx, dh, e))
    return out


# ----------------------------------------------------------------------
# lambda brackets


def _bracket(ctx: VAContext, a: Raw, b: Raw) -> RawPoly:
    out: RawPoly = {}
    for ma, fa in a.items():
        for mb, fb in b.items():
            for k, e in _bracket_mono(ctx, (ma, fa), (mb, fb)).items():
                _padd(out, k, e)
    return _clean_poly(out)


def _atoms(ctx: VAContext, X: Mono, f: CoeffFn):
    """Decompose :f X: into (scalar, atoms) with the function as a leading atom."""
    if f.is_constant():
        return f.constant_term(), [("x", x) for x in X]
    return Scalar(1), [("f", f)] + [("x", x) for x in X]


def _bracket_mono(ctx: VAContext, A: Tuple[Mono, CoeffFn], B: Tuple[Mono, CoeffFn]) -> RawPoly:
    X, f = A
    Y, g = B
    if f.is_constant() and not f.is_one():
        s = f.constant_term()
        return {k: _scale_raw(e, s) for k, e in _bracket_mono(ctx, (X, ctx.one_fn), B).items()}
    if g.is_constant() and not g.is_one():
        s = g.constant_term()
        return {k: _scale_raw(e, s) for k, e in _bracket_mono(ctx, A, (Y, ctx.one_fn)).items()}
    if (not X and f.is_constant()) or (not Y and g.is_constant()):
        return {}  # the vacuum is central
    cache = ctx._caches["br"]
    key = (X, f, Y, g)
    hit = cache.get(key)
    if hit is not None:
        return hit
    _, a_atoms = _atoms(ctx, X, f)
    _, b_atoms = _atoms(ctx, Y, g)
    pa = ctx.mono_parity(X)
    pb = ctx.mono_parity(Y)
    if len(b_atoms) == 1:
        if len(a_atoms) == 1:
            out = _atom_bracket(ctx, a_atoms[0], b_atoms[0])
        else:
            out = _skew_raw(ctx, _bracket_mono(ctx, B, A), pb, pa)
    else:
        b1 = b_atoms[0]
        if b1[0] == "f":
            rest = (Y, ctx.one_fn)
        else:
            rest = (Y[1:], ctx.one_fn)
        b1raw = _atom_raw(ctx, b1)
        pb1 = _atom_parity(ctx, b1)
        # [a lam b1]
        if len(a_atoms) == 1:
            ab1 = _atom_bracket(ctx, a_atoms[0], b1)
        else:
            b1mono, b1fn = next(iter(b1raw.items()))
            ab1 = _skew_raw(ctx, _bracket_mono(ctx, (b1mono, b1fn), A), pb1, pa)
        a_rest = _bracket_mono(ctx, A, rest)
        rest_raw = {rest[0]: rest[1]}
        out: RawPoly = {}
        # :[a lam b1] B2:
        for k, ck in ab1.items():
            _padd(out, k, _wick(ctx, ck, rest_raw))
        # p(a,b1) :b1 [a lam B2]:
        sgn = Scalar(_sign(pa, pb1))
        for k, ek in a_rest.items():
            _padd(out, k, _wick(ctx, b1raw, ek), sgn)
        # int_0^lam [[a lam b1] mu B2] d mu
        for k, ck in ab1.items():
            inner = _bracket(ctx, ck, rest_raw)
            for j, ekj in inner.items():
                _padd(out, k + j + 1, ekj, Scalar(comb(k + j + 1, k)))
        out = _clean_poly(out)
    cache[key] = out
    return out


def _atom_bracket(ctx: VAContext, a, b) -> RawPoly:
    ka, va = a
    kb, vb = b
    if ka == "f" and kb == "f":
        return {}
    if ka == "x" and kb == "f":
        g, d = va
        vf = ctx._vf.get(g)
        if vf is None:
            return {}
        h = _apply_vf(ctx, vf, vb)
        if not h:
            return {}
        return {d: {(): h.scale((-1) ** d * factorial(d))}}
    if ka == "f" and kb == "x":
        g, d = vb
        vf = ctx._vf.get(g)
        if vf is None:
            return {}
        h = _apply_vf(ctx, vf, va)
        if not h:
            return {}
        out: RawPoly = {}
        for j in range(d + 1):
            term = _dpow_raw(ctx, {(): h}, d - j)
            if term:
                _padd(out, j, term, Scalar(-factorial(d)))
        return _clean_poly(out)
    return _gen_bracket(ctx, va, vb)


# ----------------------------------------------------------------------
# public types


class FieldExpr:
    """Canonical sum of normally ordered monomials with function coefficients."""

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: VAContext, terms: Optional[Raw] = None):
        self.ctx = ctx
        self.terms: Raw = {m: f for m, f in (terms or {}).items() if f}
        self._hash = None

    # construction helpers ---------------------------------------------
    @classmethod
    def zero(cls, ctx: VAContext) -> "FieldExpr":
        return cls(ctx, {})

    @classmethod
    def one(cls, ctx: VAContext) -> "FieldExpr":
        return cls(ctx, {(): ctx.one_fn})

    @classmethod
    def scalar(cls, ctx: VAContext, c) -> "FieldExpr":
        return cls(ctx, {(): CoeffFn.const(ctx.coords, c)})

    @classmethod
    def function(cls, ctx: VAContext, f: CoeffFn) -> "FieldExpr":
        if f.coords != ctx.coords:
            raise ContextError("function lives on a different coordinate system")
        return cls(ctx, {(): f})

    @classmethod
    def gen(cls, ctx: VAContext, name: str, deriv: int = 0) -> "FieldExpr":
        p = ctx.position(name)
        if deriv < 0:
            raise ValueError("derivative order must be non-negative")
        return cls(ctx, {((p, deriv),): ctx.one_fn})

    # arithmetic -------------------------------------------------------
    def _check(self, other: "FieldExpr") -> None:
        if not isinstance(other, FieldExpr) or other.ctx is not self.ctx:
            raise ContextError("expressions belong to different contexts")

    def __add__(self, other: "FieldExpr") -> "FieldExpr":
        self._check(other)
        out = dict(self.terms)
        _add_raw(out, other.terms)
        return FieldExpr(self.ctx, out)

    def __sub__(self, other: "FieldExpr") -> "FieldExpr":
        self._check(other)
        out = dict(self.terms)
        _add_raw(out, other.terms, Scalar(-1))
        return FieldExpr(self.ctx, out)

    def __neg__(self) -> "FieldExpr":
        return FieldExpr(self.ctx, _scale_raw(self.terms, Scalar(-1)))

    def __mul__(self, s) -> "FieldExpr":
        """Scalar multiple, or Wick product on the left by a coefficient function."""
        if isinstance(s, FieldExpr):
            raise TypeError("use wick() for products of fields")
        if isinstance(s, CoeffFn):
            return FieldExpr(self.ctx, _fwick(self.ctx, s, self.terms))
        return FieldExpr(self.ctx, _scale_raw(self.terms, Scalar.of(s)))

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, FieldExpr):
            return other.ctx is self.ctx and self.terms == other.terms
        if isinstance(other, (int, Fraction, Scalar)):
            return self.terms == FieldExpr.scalar(self.ctx, other).terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # gradings ---------------------------------------------------------
    def weights(self) -> set:
        return {self.ctx.mono_weight(m) for m in self.terms}

    def degrees(self) -> set:
        return {self.ctx.mono_degree(m) for m in self.terms}

    def weight(self) -> int:
        ws = self.weights()
        if len(ws) != 1:
            raise GradingError(f"expression is not weight-homogeneous: weights {sorted(ws)}")
        return ws.pop()

    def parity(self) -> int:
        ps = {self.ctx.mono_parity(m) for m in self.terms}
        if len(ps) > 1:
            raise GradingError("expression is not parity-homogeneous")
        return ps.pop() if ps else 0

    def component(self, weight: Optional[int] = None, degree: Optional[int] = None) -> "FieldExpr":
        ctx = self.ctx
        return FieldExpr(ctx, {
            m: f for m, f in self.terms.items()
            if (weight is None or ctx.mono_weight(m) == weight)
            and (degree is None or ctx.mono_degree(m) == degree)
        })

    def fourier_sectors(self) -> set:
        out = set()
        for f in self.terms.values():
            out |= f.fourier_modes()
        return out

    def max_poly_degree(self) -> int:
        return max((f.degree() for f in self.terms.values()), default=-1)

    # printing ---------------------------------------------------------
    def __str__(self) -> str:
        return format_expr(self)

    def __repr__(self) -> str:
        return f"FieldExpr({self})"


class LambdaPoly:
    """Polynomial in lambda with entries a o(k) b (coefficient of lambda^k/k!)."""

    __slots__ = ("ctx", "_entries")

    def __init__(self, ctx: VAContext, raw: Optional[RawPoly] = None):
        self.ctx = ctx
        self._entries = {k: FieldExpr(ctx, v) for k, v in (raw or {}).items() if v}

    @classmethod
    def from_entries(cls, ctx: VAContext, entries: Union[Sequence[FieldExpr], Mapping[int, FieldExpr]]) -> "LambdaPoly":
        items = entries.items() if isinstance(entries, Mapping) else enumerate(entries)
        return cls(ctx, {k: e.terms for k, e in items})

    def entry(self, k: int) -> FieldExpr:
        return self._entries.get(k, FieldExpr.zero(self.ctx))

    __getitem__ = entry

    @property
    def entries(self) -> list:
        if not self._entries:
            return []
        return [self.entry(k) for k in range(max(self._entries) + 1)]

    def degree(self) -> int:
        return max(self._entries, default=-1)

    def is_zero(self) -> bool:
        return not self._entries

    def __eq__(self, other: object) -> bool:
        if isinstance(other, LambdaPoly):
            return other.ctx is self.ctx and self._entries == other._entries
        return NotImplemented

    def __add__(self, other: "LambdaPoly") -> "LambdaPoly":
        raw: RawPoly = {k: dict(v.terms) for k, v in self._entries.items()}
        for k, v in other._entries.items():
            _padd(raw, k, v.terms)
        return LambdaPoly(self.ctx, raw)

    def __sub__(self, other: "LambdaPoly") -> "LambdaPoly":
        raw: RawPoly = {k: dict(v.terms) for k, v in self._entries.items()}
        for k, v in other._entries.items():
            _padd(raw, k, v.terms, Scalar(-1))
        return LambdaPoly(self.ctx, raw)

    def __str__(self) -> str:
        if not self._entries:
            return "0"
        parts = []
        for k in sorted(self._entries):
            e = str(self._entries[k])
            if k == 0:
                parts.append(e)
            else:
                lam = "lam" if k == 1 else f"lam^{k}/{factorial(k)}"
                parts.append(f"{lam}*({e})")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"LambdaPoly({self})"


def _as_expr(ctx: VAContext, a) -> FieldExpr:
    if isinstance(a, FieldExpr):
        if a.ctx is not ctx:
            raise ContextError("expressions belong to different contexts")
        return a
    if isinstance(a, CoeffFn):
        return FieldExpr.function(ctx, a)
    if isinstance(a, (int, Fraction, Scalar)):
        return FieldExpr.scalar(ctx, a)
    raise TypeError(f"cannot interpret {a!r} as a field expression")


def _ctx_of(*xs) -> VAContext:
    for x in xs:
        if isinstance(x, FieldExpr):
            return x.ctx
    raise ContextError("at least one argument must be a FieldExpr")


def wick(a, b) -> FieldExpr:
    """Normally ordered product :ab: in canonical form."""
    ctx = _ctx_of(a, b)
    a, b = _as_expr(ctx, a), _as_expr(ctx, b)
    return FieldExpr(ctx, _wick(ctx, a.terms, b.terms))


def wick_many(*xs) -> FieldExpr:
    """Right-nested product :x1 :x2 ... xk::."""
    if not xs:
        raise ValueError("need at least one factor")
    out = xs[-1]
    for x in reversed(xs[:-1]):
        out = wick(x, out)
    return _as_expr(_ctx_of(*xs), out)


def lambda_bracket(a, b) -> LambdaPoly:
    ctx = _ctx_of(a, b)
    a, b = _as_expr(ctx, a), _as_expr(ctx, b)
    return LambdaPoly(ctx, _bracket(ctx, a.terms, b.terms))


def derivative(a: FieldExpr, times: int = 1) -> FieldExpr:
    out = a.terms
    for _ in range(times):
        out = _deriv_raw(a.ctx, out)
    return FieldExpr(a.ctx, out)


def circle(a, n: int, b) -> FieldExpr:
    """a o(n) b for any integer n."""
    ctx = _ctx_of(a, b)
    a, b = _as_expr(ctx, a), _as_expr(ctx, b)
    if n >= 0:
        return FieldExpr(ctx, _bracket(ctx, a.terms, b.terms).get(n, {}))
    m = -n - 1
    da = _dpow_raw(ctx, a.terms, m)
    return FieldExpr(ctx, _wick(ctx, da, b.terms))


def mode(a: FieldExpr, n: int, b, weight: Optional[int] = None) -> FieldExpr:
    """a_n b = a o(n + wt(a) - 1) b; a must be weight-homogeneous unless weight is given."""
    w = a.weight() if weight is None else weight
    return circle(a, n + w - 1, b)


def grade(a: FieldExpr) -> list:
    """Decompose into ((weight, degree), component) pairs, sorted."""
    keys = sorted({(a.ctx.mono_weight(m), a.ctx.mono_degree(m)) for m in a.terms})
    return [((w, d), a.component(w, d)) for w, d in keys]


def skew_symmetric_partner(p: LambdaPoly, pa: int, pb: int) -> LambdaPoly:
    """From [a lam b] compute [b lam a]."""
    raw = {k: e.terms for k, e in p._entries.items()}
    return LambdaPoly(p.ctx, _skew_raw(p.ctx, raw, pa, pb))


# ----------------------------------------------------------------------
# printing


def factor_str(ctx: VAContext, x: Factor) -> str:
    g, d = x
    gen = ctx.generators[g]
    if gen.kind == "jet":
        return f"dgamma[{gen.index},{d + 1}]"
    if d == 0:
        return gen.name
    return f"d^{d} {gen.name}"


def mono_str(ctx: VAContext, mono: Mono) -> str:
    if not mono:
        return "1"
    if len(mono) == 1:
        return factor_str(ctx, mono[0])
    return ":" + " ".join(factor_str(ctx, x) for x in mono) + ":"


def format_expr(e: FieldExpr) -> str:
    if not e.terms:
        return "0"
    ctx = e.ctx
    parts = []
    for mono in sorted(e.terms, key=lambda m: (ctx.mono_weight(m), len(m), m)):
        f = e.terms[mono]
        fs = str(f)
        ms = mono_str(ctx, mono)
        if not mono:
            parts.append(fs if len(f.terms()) == 1 else f"({fs})")
        elif f.is_one():
            parts.append(ms)
        elif f == -1:
            parts.append("-" + ms)
        elif len(f.terms()) == 1 and not fs.startswith("("):
            parts.append(f"{fs}*{ms}")
        else:
            parts.append(f"({fs})*{ms}")
    out = parts[0]
    for p in parts[1:]:
        out += (" - " + p[1:]) if p.startswith("-") else (" + " + p)
    return out


# ----------------------------------------------------------------------
# homomorphisms between contexts


class Homomorphism:
    """Vertex-algebra map determined by images of generators and functions.

    ``gen_images`` maps source generator names to target expressions;
    generators not listed map to the same-named target generator.
    ``fn_map`` sends a source coefficient function to a target expression
    (default: the same function, which needs equal coordinate systems).
    Jets map to the derivative of the image of the coordinate function
    when ``fn_map`` is given and the coordinate is flat.
    """

    def __init__(
        self,
        source: VAContext,
        target: VAContext,
        gen_images: Optional[Mapping[str, FieldExpr]] = None,
        fn_map: Optional[Callable[[CoeffFn], FieldExpr]] = None,
    ):
        self.source = source
        self.target = target
        self.fn_map = fn_map
        imgs: Dict[int, FieldExpr] = {}
        given = dict(gen_images or {})
        for p, g in enumerate(source.generators):
            if g.name in given:
                img = given.pop(g.name)
                if img.ctx is not target:
                    raise ContextError(f"image of {g.name} is not in the target context")
                imgs[p] = img
            elif g.kind == "jet" and fn_map is not None and not source.coords.is_angular(g.index - 1):
                coord = CoeffFn.coordinate(source.coords, g.index - 1)
                imgs[p] = derivative(fn_map(coord))
            elif target.has(g.name):
                imgs[p] = FieldExpr.gen(target, g.name)
            else:
                raise ContextError(f"no image for generator {g.name}")
        if given:
            raise ContextError(f"unknown source generators: {sorted(given)}")
        self._img = imgs
        self._dimg: Dict[Factor, FieldExpr] = {}
        self._fcache: Dict[CoeffFn, FieldExpr] = {}

    def image_of_generator(self, name: str) -> FieldExpr:
        return self._img[self.source.position(name)]

    def _factor(self, x: Factor) -> FieldExpr:
        hit = self._dimg.get(x)
        if hit is None:
            g, d = x
            hit = derivative(self._img[g], d) if d else self._img[g]
            self._dimg[x] = hit
        return hit

    def _fn(self, f: CoeffFn) -> FieldExpr:
        hit = self._fcache.get(f)
        if hit is None:
            if self.fn_map is None:
                if f.coords != self.target.coords:
                    raise ContextError("functions need an explicit map between coordinate systems")
                hit = FieldExpr.function(self.target, f)
            else:
                hit = self.fn_map(f)
            self._fcache[f] = hit
        return hit

    def __call__(self, e: FieldExpr) -> FieldExpr:
        if e.ctx is not self.source:
            raise ContextError("expression is not in the source context")
        out = FieldExpr.zero(self.target)
        for mono, f in e.terms.items():
            acc = FieldExpr.one(self.target)
            for x in reversed(mono):
                acc = wick(self._factor(x), acc)
            acc = wick(self._fn(f), acc) if not f.is_constant() else acc * f.constant_term()
            out = out + acc
        return out

    def apply_poly(self, p: LambdaPoly) -> LambdaPoly:
        return LambdaPoly.from_entries(self.target, {k: self(e) for k, e in p._entries.items()})

    def check_brackets(self, names: Optional[Iterable[str]] = None, functions: Iterable[CoeffFn] = ()) -> list:
        """Compare phi([a lam b]) with [phi a lam phi b] on generator pairs.

        Returns a list of (pair, expected, got) mismatches; empty means the
        map preserves every tested bracket.
        """
        src = self.source
        gens = [g.name for g in src.generators] if names is None else list(names)
        items = [("gen", n) for n in gens] + [("fn", f) for f in functions]

        def elem(it):
            kind, v = it
            return FieldExpr.gen(src, v) if kind == "gen" else FieldExpr.function(src, v)

        bad = []
        for i, a in enumerate(items):
            for b in items[i:]:
                ea, eb = elem(a), elem(b)
                lhs = self.apply_poly(lambda_bracket(ea, eb))
                rhs = lambda_bracket(self(ea), self(eb))
                if lhs != rhs:
                    bad.append(((str(ea), str(eb)), lhs, rhs))
        return bad


class Derivation:
    """Odd or even derivation of all circle products, fixed by generator images.

    ``fn_map`` gives the image of a coefficient function (defaults to zero).
    Jets without an explicit image go to the derivative of the image of their
    coordinate function, which needs ``fn_map`` and a flat coordinate.
    """

    def __init__(
        self,
        ctx: VAContext,
        gen_images: Mapping[str, FieldExpr],
        parity: int = 1,
        fn_map: Optional[Callable[[CoeffFn], FieldExpr]] = None,
    ):
        self.ctx = ctx
        self.parity = parity
        self.fn_map = fn_map
        imgs: Dict[int, FieldExpr] = {}
        given = dict(gen_images)
        for p, g in enumerate(ctx.generators):
            if g.name in given:
                img = given.pop(g.name)
                if img.ctx is not ctx:
                    raise ContextError(f"image of {g.name} lives in another context")
                imgs[p] = img
            elif g.kind == "jet" and fn_map is not None and not ctx.coords.is_angular(g.index - 1):
                imgs[p] = derivative(fn_map(CoeffFn.coordinate(ctx.coords, g.index - 1)))
            else:
                imgs[p] = FieldExpr.zero(ctx)
        if given:
            raise ContextError(f"unknown generators: {sorted(given)}")
        self._img = imgs
        self._cache: Dict[Mono, FieldExpr] = {}

    def _fn(self, f: CoeffFn) -> FieldExpr:
        if self.fn_map is None or f.is_constant():
            return FieldExpr.zero(self.ctx)
        return self.fn_map(f)

    def _mono(self, mono: Mono) -> FieldExpr:
        hit = self._cache.get(mono)
        if hit is not None:
            return hit
        ctx = self.ctx
        if not mono:
            out = FieldExpr.zero(ctx)
        else:
            (g, d), rest = mono[0], mono[1:]
            img = derivative(self._img[g], d) if d else self._img[g]
            rest_e = FieldExpr(ctx, {rest: ctx.one_fn})
            out = wick(img, rest_e)
            tail = self._mono(rest)
            if tail:
                x = FieldExpr(ctx, {(mono[0],): ctx.one_fn})
                out = out + wick(x, tail) * _sign(self.parity, ctx._parity[g])
        self._cache[mono] = out
        return out

    def __call__(self, e: FieldExpr) -> FieldExpr:
        if e.ctx is not self.ctx:
            raise ContextError("expression is not in the derivation's context")
        out = FieldExpr.zero(self.ctx)
        for mono, f in e.terms.items():
            m = FieldExpr(self.ctx, {mono: self.ctx.one_fn})
            df = self._fn(f)
            if df:
                out = out + wick(df, m)
            dm = self._mono(mono)
            if dm:
                out = out + (dm * f if not f.is_constant() else dm * f.constant_term())
        return out

    def image_of_generator(self, name: str) -> FieldExpr:
        return self._img[self.ctx.position(name)]

    def check_brackets(self, names: Optional[Iterable[str]] = None, functions: Iterable[CoeffFn] = ()) -> list:
        """Pairs where D[a lam b] != [Da lam b] + (-1)^{p|a|} [a lam Db]."""
        ctx = self.ctx
        gens = [g.name for g in ctx.generators] if names is None else list(names)
        elems = [FieldExpr.gen(ctx, n) for n in gens] + [FieldExpr.function(ctx, f) for f in functions]
        bad = []
        for i, a in enumerate(elems):
            for b in elems[i:]:
                lhs = lambda_bracket(a, b)
                lhs = LambdaPoly.from_entries(ctx, {k: self(v) for k, v in lhs._entries.items()})
                rhs = lambda_bracket(self(a), b)
                s = _sign(self.parity, a.parity())
                other = lambda_bracket(a, self(b))
                rhs = rhs + other if s > 0 else rhs - other
                if lhs != rhs:
                    bad.append(((str(a), str(b)), lhs, rhs))
        return bad


def jacobi_defects(elems: Sequence[FieldExpr], max_index: int = 3) -> list:
    """Triples (a, b, c, m, n) violating the commutator formula.

    a o(m) (b o(n) c) - (-1)^{|a||b|} b o(n) (a o(m) c) = sum_j C(m, j) (a o(j) b) o(m+n-j) c
    for 0 <= m, n <= max_index.
    """
    bad = []
    for a in elems:
        for b in elems:
            s = _sign(a.parity(), b.parity())
            ab = {j: circle(a, j, b) for j in range(max_index + 1)}
            for c in elems:
                for m in range(max_index + 1):
                    amc = circle(a, m, c)
                    for n in range(max_index + 1):
                        lhs = circle(a, m, circle(b, n, c)) - circle(b, n, amc) * s
                        rhs = FieldExpr.zero(a.ctx)
                        for j in range(m + 1):
                            if ab[j]:
                                rhs = rhs + circle(ab[j], m + n - j, c) * comb(m, j)
                        if lhs != rhs:
                            bad.append((str(a), str(b), str(c), m, n))
    return bad
