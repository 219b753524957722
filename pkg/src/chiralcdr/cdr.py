"""Chiral de Rham complex on a coordinate patch and its H-twisted variant."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence

from .coeffring import CoeffFn, CoordinateError, CoordinateSystem, Scalar
from .forms import DiffForm, VectorField
from .voa import (
    FieldExpr,
    Generator,
    GradingError,
    Homomorphism,
    LambdaPoly,
    VAContext,
    circle,
    derivative,
    lambda_bracket,
    wick,
    wick_many,
)


def cdr_generators(dim: int, offset: int = 0) -> List[Generator]:
    gens = []
    for i in range(offset + 1, offset + dim + 1):
        gens += [
            Generator(f"b[{i}]", "b", i, 1, 1, -1),
            Generator(f"c[{i}]", "c", i, 1, 0, 1),
            Generator(f"beta[{i}]", "beta", i, 0, 1, 0),
        ]
    return gens


def form_to_field(ctx: VAContext, omega: DiffForm) -> FieldExpr:
    """Weight-zero field of a differential form (c[i] stands for the i-th coordinate differential)."""
    if omega.coords != ctx.coords:
        raise CoordinateError("form lives on a different coordinate system")
    terms = {}
    for idx, f in omega.terms.items():
        mono = tuple((ctx.position(f"c[{i + 1}]"), 0) for i in idx)
        terms[mono] = f
    return FieldExpr(ctx, terms)


def field_to_form(e: FieldExpr) -> DiffForm:
    """Inverse of form_to_field on expressions built from functions and c's only."""
    ctx = e.ctx
    out = {}
    for mono, f in e.terms.items():
        idx = []
        for g, d in mono:
            gen = ctx.generators[g]
            if gen.kind != "c" or d:
                raise ValueError(f"{e} is not a differential form")
            idx.append(gen.index - 1)
        out[tuple(idx)] = f
    return DiffForm(ctx.coords, out)


def _basic_table(dim: int):
    def table(ctx):
        return {(f"b[{i}]", f"c[{i}]"): {0: FieldExpr.one(ctx)} for i in range(1, dim + 1)}
    return table


def _beta_vfs(coords: CoordinateSystem) -> Dict[str, list]:
    one, zero = CoeffFn.const(coords, 1), CoeffFn.zero(coords)
    return {f"beta[{i + 1}]": [one if j == i else zero for j in range(coords.dim)] for i in range(coords.dim)}


@dataclass(frozen=True)
class StructureFields:
    J: FieldExpr
    Q: FieldExpr
    G: FieldExpr
    L: FieldExpr

    def as_dict(self) -> Dict[str, FieldExpr]:
        return {"J": self.J, "Q": self.Q, "G": self.G, "L": self.L}


class _PatchBase:
    ctx: VAContext
    coords: CoordinateSystem

    def gen(self, name: str, deriv: int = 0) -> FieldExpr:
        return FieldExpr.gen(self.ctx, name, deriv)

    def _idx(self, i) -> int:
        return self.coords.index(i) + 1 if isinstance(i, str) else int(i)

    def b(self, i) -> FieldExpr:
        return self.gen(f"b[{self._idx(i)}]")

    def c(self, i) -> FieldExpr:
        return self.gen(f"c[{self._idx(i)}]")

    def beta(self, i) -> FieldExpr:
        return self.gen(f"beta[{self._idx(i)}]")

    def fn(self, f) -> FieldExpr:
        if not isinstance(f, CoeffFn):
            f = CoeffFn.const(self.coords, f)
        return FieldExpr.function(self.ctx, f)

    def coordinate(self, i) -> CoeffFn:
        """Coordinate function (1-based index or name)."""
        return CoeffFn.coordinate(self.coords, self._idx(i) - 1)

    def dgamma(self, i, k: int = 1) -> FieldExpr:
        """k-th derivative of the i-th coordinate (jet generator, 1-based index)."""
        return FieldExpr.gen(self.ctx, f"dgamma[{self._idx(i)}]", k - 1)

    def form(self, omega: DiffForm) -> FieldExpr:
        return form_to_field(self.ctx, omega)

    def iota(self, X: VectorField) -> FieldExpr:
        out = FieldExpr.zero(self.ctx)
        for i, f in enumerate(X.comps):
            if f:
                out = out + self.b(i + 1) * f
        return out

    def lie(self, X: VectorField) -> FieldExpr:
        """sum :beta^i f_i: + sum :(d_i f_j) c^i b^j:."""
        out = FieldExpr.zero(self.ctx)
        for i, f in enumerate(X.comps):
            if f:
                out = out + wick(self.beta(i + 1), self.fn(f))
        for j, f in enumerate(X.comps):
            for i in range(self.coords.dim):
                g = f.partial(i)
                if g:
                    out = out + wick_many(self.fn(g), self.c(i + 1), self.b(j + 1))
        return out


class Patch(_PatchBase):
    """Untwisted chiral de Rham complex on a flat patch times a torus."""

    def __init__(self, coords: CoordinateSystem, label: str = "patch"):
        self.coords = coords
        self.ctx = VAContext(
            coords, cdr_generators(coords.dim), _beta_vfs(coords), _basic_table(coords.dim), label=label
        )

    @classmethod
    def standard(cls, n: int, m: int = 0) -> "Patch":
        return cls(CoordinateSystem.standard(n, m))

    @cached_property
    def structure(self) -> StructureFields:
        """J = sum :c^i b^i:, Q = sum :beta^i c^i:, G = sum :b^i dgamma^i:, L = sum :beta^i dgamma^i: - :b^i dc^i:."""
        z = FieldExpr.zero(self.ctx)
        J = Q = G = L = z
        for i in range(1, self.coords.dim + 1):
            b, c, be, dg = self.b(i), self.c(i), self.beta(i), self.dgamma(i)
            J = J + wick(c, b)
            Q = Q + wick(be, c)
            G = G + wick(b, dg)
            L = L + wick(be, dg) - wick(b, derivative(c))
        return StructureFields(J, Q, G, L)

    def structure_fields(self) -> StructureFields:
        return self.structure

    def D(self, a: FieldExpr) -> FieldExpr:
        return circle(self.structure.Q, 0, a)

    def G0(self, a: FieldExpr) -> FieldExpr:
        return circle(self.structure.G, 1, a)

    def L0(self, a: FieldExpr) -> FieldExpr:
        return circle(self.structure.L, 1, a)

    def J0(self, a: FieldExpr) -> FieldExpr:
        return circle(self.structure.J, 0, a)


TOPOLOGICAL_PAIRS = ("LL", "JJ", "LJ", "GG", "LG", "JG", "QQ", "LQ", "JQ", "QG")


def topological_table(patch: "Patch", jj_level: Optional[int] = None) -> Dict[str, LambdaPoly]:
    """Expected lambda-brackets among J, Q, G, L for a rank-n patch.

    Entries list the circle products a o(k) b for k = 0, 1, 2.  ``jj_level``
    is the central term of [J lam J]; it defaults to n.
    """
    s = patch.structure
    J, Q, G, L = s.J, s.Q, s.G, s.L
    ctx = patch.ctx
    n = patch.coords.dim
    zero = FieldExpr.zero(ctx)
    const = lambda c: FieldExpr.scalar(ctx, c)
    lvl = n if jj_level is None else jj_level

    def poly(*entries):
        return LambdaPoly.from_entries(ctx, list(entries))

    return {
        "LL": poly(derivative(L), L * 2),
        "JJ": poly(zero, const(lvl)),
        "LJ": poly(derivative(J), J, const(-n)),
        "GG": poly(),
        "LG": poly(derivative(G), G * 2),
        "JG": poly(-G),
        "QQ": poly(),
        "LQ": poly(derivative(Q), Q),
        "JQ": poly(Q),
        "QG": poly(L, J, const(n)),
    }


def topological_brackets(patch: "Patch") -> Dict[str, LambdaPoly]:
    fields = patch.structure.as_dict()
    return {p: lambda_bracket(fields[p[0]], fields[p[1]]) for p in TOPOLOGICAL_PAIRS}


# ----------------------------------------------------------------------
# twisting


class TwistData:
    """A closed 3-form H on a patch."""

    def __init__(self, H: DiffForm):
        if H.is_zero():
            self.H = H
            return
        if H.degrees() != {3}:
            raise GradingError("the twisting form must have degree 3")
        if not H.is_closed():
            raise ValueError(f"twisting form is not closed: dH = {H.d()}")
        self.H = H

    @property
    def coords(self) -> CoordinateSystem:
        return self.H.coords

    def iota_iota(self, i: int, j: int) -> DiffForm:
        """iota_i iota_j H (0-based coordinate indices; iota_j acts first)."""
        return self.H.contract_basis(j).contract_basis(i)


def D_twisted(patch: Patch, t: TwistData, a: FieldExpr) -> FieldExpr:
    """D_H(a) = D(a) + :H a:."""
    return patch.D(a) + wick(patch.form(t.H), a)


class TwistedPatch(_PatchBase):
    """H-twisted complex on a patch, presented on the same generators.

    [beta^i lam b^j] = iota_i iota_j H and [beta^i lam beta^j] = d(iota_i iota_j H).
    The bracket table is only filtered by weight, not graded.
    """

    def __init__(self, t: TwistData, label: str = "twisted"):
        self.twist = t
        self.coords = coords = t.coords
        dim = coords.dim

        def table(ctx):
            tab = _basic_table(dim)(ctx)
            for i in range(dim):
                for j in range(dim):
                    g = t.iota_iota(i, j)
                    if g:
                        tab[(f"beta[{i + 1}]", f"b[{j + 1}]")] = {0: form_to_field(ctx, g)}
                    if j >= i:
                        dg = g.d()
                        if dg:
                            tab[(f"beta[{i + 1}]", f"beta[{j + 1}]")] = {0: form_to_field(ctx, dg)}
            return tab

        self.ctx = VAContext(coords, cdr_generators(dim), _beta_vfs(coords), table, graded=False, label=label)

    def iota_H(self, X: VectorField) -> FieldExpr:
        return self.form(self.twist.H.contract(X))

    @cached_property
    def structure(self) -> StructureFields:
        """J, G as untwisted; Q and L use beta^i - iota_i H in place of beta^i."""
        z = FieldExpr.zero(self.ctx)
        J = Q = G = L = z
        for i in range(1, self.coords.dim + 1):
            b, c, dg = self.b(i), self.c(i), self.dgamma(i)
            shifted = self.beta(i) - self.iota_H(VectorField.basis(self.coords, i - 1))
            J = J + wick(c, b)
            Q = Q + wick(shifted, c)
            G = G + wick(b, dg)
            L = L + wick(shifted, dg) - wick(b, derivative(c))
        return StructureFields(J, Q, G, L)

    def D(self, a: FieldExpr) -> FieldExpr:
        return circle(self.structure.Q, 0, a)

    def G0(self, a: FieldExpr) -> FieldExpr:
        return circle(self.structure.G, 1, a)

    def L0(self, a: FieldExpr) -> FieldExpr:
        return circle(self.structure.L, 1, a)

    def D_H(self, a: FieldExpr) -> FieldExpr:
        return self.D(a) + wick(self.form(self.twist.H), a)


def twisted_context(t: TwistData) -> TwistedPatch:
    return TwistedPatch(t)


def untwist(patch: Patch, tw: TwistedPatch) -> Homomorphism:
    """iota_X -> iota_X, L_X -> L_X - iota_X H, functions and forms unchanged."""
    if patch.coords != tw.coords:
        raise CoordinateError("untwisting needs matching coordinate systems")
    imgs = {}
    for i in range(1, patch.coords.dim + 1):
        X = VectorField.basis(patch.coords, i - 1)
        imgs[f"beta[{i}]"] = tw.beta(i) - tw.iota_H(X)
    return Homomorphism(patch.ctx, tw.ctx, imgs)


# ----------------------------------------------------------------------
# coordinate changes


class CoordinateChange:
    """Polynomial change of flat coordinates new = g(old) with inverse old = f(new).

    ``apply`` sends fields of the new patch to fields of the old patch.
    """

    def __init__(self, old: Patch, new: Patch, g: Sequence[CoeffFn], f: Sequence[CoeffFn]):
        if old.coords.m or new.coords.m:
            raise CoordinateError("coordinate changes are restricted to flat coordinates")
        n = old.coords.dim
        if new.coords.dim != n or len(g) != n or len(f) != n:
            raise CoordinateError("dimension mismatch in coordinate change")
        self.old, self.new, self.g, self.f = old, new, list(g), list(f)
        for i in range(n):
            if f[i].substitute(self.g) != CoeffFn.coordinate(old.coords, i):
                raise ValueError("maps are not mutually inverse (f o g != id)")
            if g[i].substitute(self.f) != CoeffFn.coordinate(new.coords, i):
                raise ValueError("maps are not mutually inverse (g o f != id)")
        P = old
        imgs = {}
        for i in range(n):
            ct = FieldExpr.zero(P.ctx)
            for j in range(n):
                ct = ct + P.c(j + 1) * g[i].partial(j)
            imgs[f"c[{i + 1}]"] = ct
            bt = FieldExpr.zero(P.ctx)
            bet = FieldExpr.zero(P.ctx)
            for j in range(n):
                dfj = f[j].partial(i).substitute(self.g)
                bt = bt + P.b(j + 1) * dfj
                bet = bet + wick(P.beta(j + 1), P.fn(dfj))
            for k in range(n):
                for l in range(n):
                    h = f[k].partial(i).partial(l).substitute(self.g)
                    if not h:
                        continue
                    for r in range(n):
                        coef = h * g[l].partial(r)
                        if coef:
                            bet = bet + wick_many(P.fn(coef), P.c(r + 1), P.b(k + 1))
            imgs[f"b[{i + 1}]"] = bt
            imgs[f"beta[{i + 1}]"] = bet
        self.phi = Homomorphism(new.ctx, old.ctx, imgs, fn_map=lambda fn: P.fn(fn.substitute(self.g)))

    def __call__(self, e: FieldExpr) -> FieldExpr:
        return self.phi(e)

    def verify(self, sample_functions: Sequence[CoeffFn] = ()) -> list:
        """Mismatches between transformed brackets and the canonical table (empty when consistent)."""
        fns = list(sample_functions) or [CoeffFn.coordinate(self.new.coords, i) for i in range(self.new.coords.dim)]
        return self.phi.check_brackets(functions=fns)


def compose_check(first: CoordinateChange, second: CoordinateChange, composite: CoordinateChange) -> list:
    """For U1 -g-> U2 -h-> U3 the pullback of h o g equals pullback(g) o pullback(h) on generators.

    ``first`` is the change for g (old U1, new U2), ``second`` for h (old U2,
    new U3) and ``composite`` for h o g (old U1, new U3); the patches must be
    shared objects.  Returns mismatches.
    """
    if second.old is not first.new or composite.new is not second.new or composite.old is not first.old:
        raise ValueError("changes do not chain through shared patches")
    bad = []
    for gen in composite.new.ctx.generators:
        x = FieldExpr.gen(composite.new.ctx, gen.name)
        via = first(second(x))
        direct = composite(x)
        if via != direct:
            bad.append((gen.name, direct, via))
    return bad


# ----------------------------------------------------------------------
# vanishing theorem


class NotClosedError(ValueError):
    pass


def vanishing_witness(patch: Patch, t: Optional[TwistData], a: FieldExpr, max_steps: int = 64) -> FieldExpr:
    """Return b with D_H(b) = a for a D_H-closed weight-homogeneous a of positive weight.

    Repeatedly removes the lowest-degree piece a^k via b += G0(a^k)/w.
    """
    H = t if t is not None else TwistData(DiffForm.zero(patch.coords))

    def DH(x):
        return D_twisted(patch, H, x)

    if a.is_zero():
        return FieldExpr.zero(patch.ctx)
    w = a.weight()
    if w <= 0:
        raise ValueError("the witness algorithm needs positive weight")
    if not DH(a).is_zero():
        raise NotClosedError("input is not D_H-closed")
    b = FieldExpr.zero(patch.ctx)
    rest = a
    inv = Scalar(Fraction(1, w))
    for _ in range(max_steps):
        if rest.is_zero():
            return b
        k = min(rest.degrees())
        piece = rest.component(degree=k)
        step = patch.G0(piece) * inv
        b = b + step
        rest = rest - DH(step)
    raise RuntimeError("witness iteration did not terminate")


def untwist_replay(patch: Patch, tw: TwistedPatch, X: VectorField, Y: VectorField) -> List[tuple]:
    """Replay the two untwisting computations for vector fields X, Y.

    Checks that phi preserves [L_X lam iota_Y] and [L_X lam L_Y] and that the
    lambda^0 entries are iota_[X,Y] and L_[X,Y] - iota_[X,Y] H on the twisted
    side.  Returns (label, expected, got) mismatches.
    """
    phi = untwist(patch, tw)
    XY = X.bracket(Y)
    bad = []
    LX, LY, iY = phi(patch.lie(X)), phi(patch.lie(Y)), phi(patch.iota(Y))
    br_li = lambda_bracket(LX, iY)
    if br_li != phi.apply_poly(lambda_bracket(patch.lie(X), patch.iota(Y))):
        bad.append(("[L_X lam iota_Y] preserved", phi.apply_poly(lambda_bracket(patch.lie(X), patch.iota(Y))), br_li))
    if br_li.entry(0) != tw.iota(XY):
        bad.append(("[L_X lam iota_Y] = iota_[X,Y]", tw.iota(XY), br_li.entry(0)))
    br_ll = lambda_bracket(LX, LY)
    if br_ll != phi.apply_poly(lambda_bracket(patch.lie(X), patch.lie(Y))):
        bad.append(("[L_X lam L_Y] preserved", phi.apply_poly(lambda_bracket(patch.lie(X), patch.lie(Y))), br_ll))
    want = tw.lie(XY) - tw.iota_H(XY)
    if br_ll.entry(0) != want:
        bad.append(("[L_X lam L_Y] = L_[X,Y] - iota_[X,Y] H", want, br_ll.entry(0)))
    return bad


def untwist_relations(patch: Patch, tw: TwistedPatch, g: CoeffFn, X: VectorField) -> List[tuple]:
    """Images of iota_{gX} - :g iota_X: and L_{gX} - :(dg) iota_X: - :g L_X: (both should vanish)."""
    phi = untwist(patch, tw)
    dg = patch.form(DiffForm.function(g).d())
    r1 = patch.iota(X * g) - wick(patch.fn(g), patch.iota(X))
    r2 = patch.lie(X * g) - wick(dg, patch.iota(X)) - wick(patch.fn(g), patch.lie(X))
    return [(name, phi(r)) for name, r in (("iota", r1), ("lie", r2)) if not phi(r).is_zero() or not r.is_zero()]
