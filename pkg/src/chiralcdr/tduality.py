"""Circle bundles, invariant and quotient algebras, and chiral T-duality maps."""

from __future__ import annotations

from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

from .cdr import Patch, _PatchBase, _beta_vfs, cdr_generators, form_to_field
from .coeffring import CoordinateError, CoordinateSystem
from .courant import InvariantForm, ReductionData, embed_form, total_coords
from .forms import DiffForm, VectorField
from .voa import (
    Derivation,
    FieldExpr,
    Generator,
    GradingError,
    Homomorphism,
    LambdaPoly,
    VAContext,
    circle,
    derivative,
    lambda_bracket,
    mode,
    wick,
)


# ----------------------------------------------------------------------
# total space of a trivialized circle bundle


class BundlePatch:
    """W x S^1 with connection A = d theta + a, as a chiral de Rham patch."""

    def __init__(self, base: CoordinateSystem, a: Optional[DiffForm] = None, fiber: str = "theta"):
        if a is None:
            a = DiffForm.zero(base)
        if a.coords != base:
            raise CoordinateError("connection form lives on a different patch")
        if a and a.degrees() != {1}:
            raise ValueError("connection form must be a 1-form")
        self.base = base
        self.a = a
        self.coords = total_coords(base, fiber)
        self.patch = Patch(self.coords, label="bundle")
        self.fiber_index = self.coords.dim  # 1-based index of theta

    @property
    def ctx(self) -> VAContext:
        return self.patch.ctx

    @cached_property
    def F_A(self) -> DiffForm:
        return self.a.d()

    @cached_property
    def A(self) -> FieldExpr:
        P = self.patch
        return P.c(self.fiber_index) + P.form(embed_form(self.a, self.coords))

    @cached_property
    def iota_A(self) -> FieldExpr:
        return self.patch.b(self.fiber_index)

    @cached_property
    def L_A(self) -> FieldExpr:
        return self.patch.beta(self.fiber_index)

    @cached_property
    def gamma_A(self) -> FieldExpr:
        """G0(dA) with d the translation operator."""
        return self.patch.G0(derivative(self.A))

    @cached_property
    def xi_A(self) -> FieldExpr:
        return self.patch.G0(derivative(self.patch.D(self.A)))

    def invariant_check(self, x: FieldExpr) -> bool:
        """True iff every nonnegative circle product of L_A with x vanishes."""
        return lambda_bracket(self.L_A, x).is_zero()

    def heisenberg(self) -> Dict[str, LambdaPoly]:
        L, G = self.L_A, self.gamma_A
        return {
            "L_A,Gamma^A": lambda_bracket(L, G),
            "L_A,L_A": lambda_bracket(L, L),
            "Gamma^A,Gamma^A": lambda_bracket(G, G),
        }

    def heisenberg_holds(self) -> bool:
        br = self.heisenberg()
        expect = LambdaPoly.from_entries(self.ctx, {1: FieldExpr.one(self.ctx)})
        return br["L_A,Gamma^A"] == expect and br["L_A,L_A"].is_zero() and br["Gamma^A,Gamma^A"].is_zero()


# ----------------------------------------------------------------------
# quotient algebras presented by generators


class QuotientContext(_PatchBase):
    """Invariant algebra modulo L_A, presented on b, c, beta, jets, A and iota_A.

    The twisted table follows from reduction data (F_A, H3, H2); L_A has been
    replaced by H2.  Names of the bc-pair are configurable so that both sides
    of a dual pair can be told apart.
    """

    def __init__(self, rd: ReductionData, a_name: str = "A", iota_name: str = "iota_A", label: str = "quotient"):
        self.rd = rd
        self.coords = coords = rd.coords
        self.a_name, self.iota_name = a_name, iota_name
        dim = coords.dim
        F, H3, H2 = rd.F_A, rd.H3, rd.H2
        self.twisted = bool(H3) or bool(H2)

        def table(ctx):
            form = lambda w: form_to_field(ctx, w)
            A = FieldExpr.gen(ctx, a_name)
            iA = FieldExpr.gen(ctx, iota_name)
            tab = {(iota_name, a_name): {0: FieldExpr.one(ctx)}}
            for i in range(1, dim + 1):
                tab[(f"b[{i}]", f"c[{i}]")] = {0: FieldExpr.one(ctx)}
            for i in range(dim):
                bi = f"beta[{i + 1}]"
                if F.contract_basis(i):
                    tab[(bi, a_name)] = {0: form(F.contract_basis(i))}
                if H2.contract_basis(i):
                    tab[(bi, iota_name)] = {0: form(H2.contract_basis(i))}
                for j in range(dim):
                    h3 = H3.contract_basis(j).contract_basis(i)
                    g2 = H2.contract_basis(j).contract_basis(i).function_part()
                    g1 = F.contract_basis(j).contract_basis(i).function_part()
                    e = form(h3) + A * g2 + iA * g1
                    if e:
                        tab[(bi, f"b[{j + 1}]")] = {0: e}
                    if j < i:
                        continue
                    dg2 = DiffForm.function(g2).d()
                    dg1 = DiffForm.function(g1).d()
                    e = (
                        form(h3.d())
                        + form(F) * g2
                        - wick(A, form(dg2))
                        + wick(form(dg1), iA)
                        + form(H2) * g1
                    )
                    if e:
                        tab[(bi, f"beta[{j + 1}]")] = {0: e}
            return tab

        gens = cdr_generators(dim) + [
            Generator(a_name, "abstract", 1, 1, 0, 1),
            Generator(iota_name, "abstract", 2, 1, 1, -1),
        ]
        self.ctx = VAContext(coords, gens, _beta_vfs(coords), table, graded=not self.twisted, label=label)

    @property
    def A(self) -> FieldExpr:
        return self.gen(self.a_name)

    @property
    def iota_A(self) -> FieldExpr:
        return self.gen(self.iota_name)

    def H_field(self) -> FieldExpr:
        """H = H3 + A ^ H2 as a weight-zero field."""
        return self.form(self.rd.H3) + wick(self.A, self.form(self.rd.H2))

    def iota_H(self, i: int) -> FieldExpr:
        """iota_i H = iota_i H3 - A ^ iota_i H2 (1-based base index)."""
        k = i - 1
        return self.form(self.rd.H3.contract_basis(k)) - wick(self.A, self.form(self.rd.H2.contract_basis(k)))

    def invariant_form(self, G: InvariantForm) -> FieldExpr:
        return self.form(G.G0) + wick(self.A, self.form(G.G1))

    @cached_property
    def D(self) -> Derivation:
        """Differential of the presented algebra (twisted when H3 or H2 is nonzero)."""
        rd = self.rd
        dim = self.coords.dim
        imgs = {self.a_name: self.form(rd.F_A), self.iota_name: FieldExpr.zero(self.ctx)}
        for i in range(1, dim + 1):
            k = i - 1
            imgs[f"b[{i}]"] = self.beta(i) - self.iota_H(i)
            imgs[f"c[{i}]"] = FieldExpr.zero(self.ctx)
            h3, h2 = rd.H3.contract_basis(k), rd.H2.contract_basis(k)
            imgs[f"beta[{i}]"] = (
                self.form(h3.d()) - self.form(rd.F_A.wedge(h2)) + wick(self.A, self.form(h2.d()))
            )
            imgs[f"dgamma[{i}]"] = derivative(self.c(i))
        return Derivation(self.ctx, imgs, 1, lambda f: self.form(DiffForm.function(f).d()))

    @cached_property
    def Q(self) -> FieldExpr:
        """sum :(beta^i - iota_i H) c^i: - :F_A iota_A:, whose zero mode reproduces D."""
        out = -wick(self.form(self.rd.F_A), self.iota_A)
        for i in range(1, self.coords.dim + 1):
            out = out + wick(self.beta(i) - self.iota_H(i), self.c(i))
        return out

    def modified_differential(self, x: FieldExpr) -> FieldExpr:
        """(D + H o(0)) x."""
        return self.D(x) + circle(self.H_field(), 0, x)


class DualPairSetup:
    """Base data (F_A, F_Ahat, H3) with dH3 = -F_A ^ F_Ahat; H2 = F_Ahat and Hhat2 = F_A."""

    def __init__(self, F_A: DiffForm, F_Ahat: DiffForm, H3: Optional[DiffForm] = None):
        coords = F_A.coords
        if H3 is None:
            H3 = DiffForm.zero(coords)
        self.coords = coords
        self.F_A, self.F_Ahat, self.H3 = F_A, F_Ahat, H3
        self.rd = ReductionData(F_A, H3, F_Ahat)
        self.rd_hat = self.rd.dual()

    @classmethod
    def point(cls) -> "DualPairSetup":
        c = CoordinateSystem.standard(0)
        return cls(DiffForm.zero(c), DiffForm.zero(c))

    @cached_property
    def Z(self) -> QuotientContext:
        return QuotientContext(self.rd, "A", "iota_A", label="Z")

    @cached_property
    def Zhat(self) -> QuotientContext:
        return QuotientContext(self.rd_hat, "Ahat", "iota_Ahat", label="Zhat")

    def side(self, name: str) -> QuotientContext:
        if name in ("Z", "z"):
            return self.Z
        if name in ("Zhat", "zhat", "hat"):
            return self.Zhat
        raise ValueError(f"unknown side {name!r}")

    @cached_property
    def untwisted(self) -> Tuple[QuotientContext, QuotientContext]:
        zero2, zero3 = DiffForm.zero(self.coords), DiffForm.zero(self.coords)
        return (
            QuotientContext(ReductionData(self.F_A, zero3, zero2), "A", "iota_A", label="Z untwisted"),
            QuotientContext(ReductionData(self.F_Ahat, zero3, zero2), "Ahat", "iota_Ahat", label="Zhat untwisted"),
        )

    @cached_property
    def tau(self) -> Homomorphism:
        return tau_ch(self)


def build_quotient(setup: DualPairSetup, side: str = "Z") -> QuotientContext:
    return setup.side(side)


def untwist_quotient(setup: DualPairSetup, side: str = "Z") -> Homomorphism:
    """Untwisted quotient -> twisted quotient: beta^i -> beta^i - iota_i H, rest fixed."""
    tw = setup.side(side)
    plain = setup.untwisted[0 if tw is setup.Z else 1]
    imgs = {f"beta[{i}]": tw.beta(i) - tw.iota_H(i) for i in range(1, tw.coords.dim + 1)}
    return Homomorphism(plain.ctx, tw.ctx, imgs)


def tau_ch(setup: DualPairSetup) -> Homomorphism:
    """A -> iota_Ahat, iota_A -> Ahat; all base generators fixed."""
    Z, Zh = setup.Z, setup.Zhat
    return Homomorphism(Z.ctx, Zh.ctx, {"A": Zh.iota_A, "iota_A": Zh.A})


def tau_ch_replay(setup: DualPairSetup, X: VectorField, Y: VectorField) -> List[Tuple[str, LambdaPoly, LambdaPoly]]:
    """Compare tau[a lam b] with [tau a lam tau b] for (L_X, iota_A), (L_X, A), (L_X, iota_Y), (L_X, L_Y).

    Returns the mismatches.
    """
    Z, tau = setup.Z, setup.tau
    LX = Z.lie(X)
    pairs = [
        ("L_X,iota_A", LX, Z.iota_A),
        ("L_X,A", LX, Z.A),
        ("L_X,iota_Y", LX, Z.iota(Y)),
        ("L_X,L_Y", LX, Z.lie(Y)),
    ]
    bad = []
    for name, a, b in pairs:
        lhs = tau.apply_poly(lambda_bracket(a, b))
        rhs = lambda_bracket(tau(a), tau(b))
        if lhs != rhs:
            bad.append((name, lhs, rhs))
    return bad


def predicted_brackets(q: QuotientContext, X: VectorField, Y: VectorField) -> Dict[str, FieldExpr]:
    """Closed forms of the lambda^0 entries of [L_X lam iota_Y] and [L_X lam L_Y]."""
    rd = q.rd
    g2 = rd.H2.contract(Y).contract(X).function_part()
    g1 = rd.F_A.contract(Y).contract(X).function_part()
    h3 = rd.H3.contract(Y).contract(X)
    iota_xy_H = q.form(h3) + q.A * g2
    LI = q.iota(X.bracket(Y)) + iota_xy_H + q.iota_A * g1
    LL = (
        q.lie(X.bracket(Y))
        + q.D(iota_xy_H)
        + wick(q.form(DiffForm.function(g1).d()), q.iota_A)
        + q.form(rd.H2) * g1
    )
    return {"L_X,iota_Y": LI, "L_X,L_Y": LL}


def intertwining_defects(setup: DualPairSetup, modified: bool = True) -> Dict[str, Tuple[FieldExpr, FieldExpr]]:
    """Generators x where tau(Dx) != Dhat(tau x); D is D + H o(0) when ``modified``."""
    Z, Zh, tau = setup.Z, setup.Zhat, setup.tau
    if modified:
        op, op_hat = Z.modified_differential, Zh.modified_differential
    else:
        op, op_hat = Z.D, Zh.D
    bad = {}
    for g in Z.ctx.generators:
        x = FieldExpr.gen(Z.ctx, g.name)
        lhs, rhs = tau(op(x)), op_hat(tau(x))
        if lhs != rhs:
            bad[g.name] = (lhs, rhs)
    return bad


# ----------------------------------------------------------------------
# T^ch


def _tau_factor(setup: DualPairSetup, x) -> FieldExpr:
    return setup.tau._factor(x)


def T_ch(setup: DualPairSetup, mu: FieldExpr) -> FieldExpr:
    """Module map on canonical words.

    A monomial :f y1 (y2 (... 1)): is read as f_{-1} (y1)_{-wt y1} ... 1 and each
    step nu_k m goes to (-1)^{|nu|} tau(nu)_k T(m), with modes taken relative
    to the weight of the field they belong to.  T(1) is Ahat.
    """
    Z, Zh = setup.Z, setup.Zhat
    if mu.ctx is not Z.ctx:
        raise ValueError("T_ch acts on the Z-side quotient")
    out = FieldExpr.zero(Zh.ctx)
    for mono, f in mu.terms.items():
        acc = Zh.A
        for x in reversed(mono):
            gen = Z.ctx.generators[x[0]]
            w = gen.weight + x[1]
            img = _tau_factor(setup, x)
            acc = circle(img, img.weight() - w - 1, acc)
            if gen.parity:
                acc = -acc
        acc = acc * f if not f.is_constant() else acc * f.constant_term()
        out = out + acc
    return out


ModeWord = Sequence[Tuple[FieldExpr, int]]


def evaluate_word(q: QuotientContext, word: ModeWord) -> FieldExpr:
    """nu1_{k1} nu2_{k2} ... 1 (outermost first)."""
    acc = FieldExpr.one(q.ctx)
    for nu, k in reversed(list(word)):
        acc = mode(nu, k, acc)
    return acc


def T_ch_word(setup: DualPairSetup, word: ModeWord) -> FieldExpr:
    """T^ch evaluated along an arbitrary mode word, without rewriting it first."""
    acc = setup.Zhat.A
    for nu, k in reversed(list(word)):
        if len(nu.weights()) != 1:
            raise GradingError("mode words need weight-homogeneous fields")
        img = setup.tau(nu)
        if len(img.weights()) > 1:
            raise GradingError(f"tau({nu}) is not weight-homogeneous")
        acc = mode(img, k, acc)
        if nu.parity():
            acc = -acc
    return acc


def well_definedness_counterexample(setup: DualPairSetup) -> Tuple[ModeWord, ModeWord]:
    """Two mode words for the vacuum whose step-by-step images differ.

    (iota_A)_1 (dA)_{-1} 1 = 1, while the recursion sends it to
    (d iota_Ahat)_{-1} Ahat, which is zero.
    """
    Z = setup.Z
    return [], [(Z.iota_A, 1), (derivative(Z.A), -1)]
