"""Generalized geometry on a patch: Courant brackets, Clifford action, dimension reduction, Hori map."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from .coeffring import CoeffFn, CoordinateError, CoordinateSystem, Scalar
from .forms import DiffForm, VectorField, one_form

HALF = Scalar(Fraction(1, 2))


def _as_H(H, coords: CoordinateSystem) -> DiffForm:
    if H is None:
        return DiffForm.zero(coords)
    return getattr(H, "H", H)


@dataclass(frozen=True)
class CourantSection:
    X: VectorField
    xi: DiffForm

    def __post_init__(self):
        if self.X.coords != self.xi.coords:
            raise CoordinateError("vector and form parts on different patches")
        if self.xi.degrees() - {1}:
            raise ValueError("the form part must be a 1-form")

    @property
    def coords(self) -> CoordinateSystem:
        return self.X.coords

    @classmethod
    def of(cls, X: Optional[VectorField] = None, xi: Optional[DiffForm] = None, coords: Optional[CoordinateSystem] = None):
        coords = coords or (X.coords if X is not None else xi.coords)
        return cls(X if X is not None else VectorField.zero(coords), xi if xi is not None else DiffForm.zero(coords))

    def __add__(self, o: "CourantSection") -> "CourantSection":
        return CourantSection(self.X + o.X, self.xi + o.xi)

    def __sub__(self, o: "CourantSection") -> "CourantSection":
        return CourantSection(self.X - o.X, self.xi - o.xi)

    def __neg__(self) -> "CourantSection":
        return CourantSection(-self.X, -self.xi)

    def scale(self, f) -> "CourantSection":
        return CourantSection(self.X * f, self.xi * f)

    def is_zero(self) -> bool:
        return self.X.is_zero() and self.xi.is_zero()

    def __str__(self) -> str:
        return f"({self.X}) + ({self.xi})"


def pairing(s1: CourantSection, s2: CourantSection) -> CoeffFn:
    """<X+xi, Y+eta> = 1/2 (iota_X eta + iota_Y xi)."""
    if s1.coords != s2.coords:
        raise CoordinateError("sections on different patches")
    v = s2.xi.contract(s1.X).function_part() + s1.xi.contract(s2.X).function_part()
    return v.scale(HALF)


def anchor(s: CourantSection) -> VectorField:
    return s.X


def courant_d(f: CoeffFn, scale=1) -> CourantSection:
    """The section df characterized by <df, A> = 1/2 pi(A) f.

    Under the standard pairing this is the de Rham differential; ``scale``
    exists only to exhibit what goes wrong with other normalizations.
    """
    return CourantSection.of(xi=DiffForm.function(f).d() * Scalar.of(scale), coords=f.coords)


def bracket_H(H, s1: CourantSection, s2: CourantSection, corrupt: bool = False) -> CourantSection:
    """[X+xi, Y+eta]_H = [X,Y] + L_X eta - L_Y xi - 1/2 d(iota_X eta - iota_Y xi) + iota_X iota_Y H.

    ``corrupt=True`` drops the 1/2 d(...) term (negative control).
    """
    coords = s1.coords
    if s2.coords != coords:
        raise CoordinateError("sections on different patches")
    Hf = _as_H(H, coords)
    X, xi, Y, eta = s1.X, s1.xi, s2.X, s2.xi
    form = eta.lie(X) - xi.lie(Y)
    if not corrupt:
        form = form - (eta.contract(X) - xi.contract(Y)).d() * HALF
    if Hf:
        form = form + Hf.contract(Y).contract(X)
    return CourantSection(X.bracket(Y), form)


def dorfman_H(H, s1: CourantSection, s2: CourantSection) -> CourantSection:
    """Derived (Dorfman) bracket: the Courant bracket plus d<s1, s2> (de Rham)."""
    return bracket_H(H, s1, s2) + courant_d(pairing(s1, s2))


def clifford_act(s: CourantSection, omega: DiffForm) -> DiffForm:
    """(X+xi).omega = iota_X omega + xi ^ omega."""
    return omega.contract(s.X) + s.xi.wedge(omega)


def d_H(H, omega: DiffForm) -> DiffForm:
    Hf = _as_H(H, omega.coords)
    return omega.d() + Hf.wedge(omega)


def derived_action(H, s1: CourantSection, s2: CourantSection, omega: DiffForm) -> DiffForm:
    """[[d_H, s1], s2] . omega with graded commutators of operators on forms."""

    def op1(w):  # [d_H, s1] = d_H s1 + s1 d_H (both odd)
        return d_H(H, clifford_act(s1, w)) + clifford_act(s1, d_H(H, w))

    return op1(clifford_act(s2, omega)) - clifford_act(s2, op1(omega))


def bracket_compat_check(H, s1: CourantSection, s2: CourantSection, omega: DiffForm, bracket: str = "courant") -> bool:
    """Does [s1, s2]_H . omega equal [[d_H, s1], s2] . omega?"""
    br = bracket_H(H, s1, s2) if bracket == "courant" else dorfman_H(H, s1, s2)
    return clifford_act(br, omega) == derived_action(H, s1, s2, omega)


# ----------------------------------------------------------------------
# axioms


@dataclass
class AxiomReport:
    passed: Dict[int, int] = field(default_factory=lambda: {k: 0 for k in range(1, 6)})
    failures: Dict[int, List[str]] = field(default_factory=lambda: {k: [] for k in range(1, 6)})

    def ok(self, axiom: Optional[int] = None) -> bool:
        if axiom is None:
            return not any(self.failures.values())
        return not self.failures[axiom]

    def record(self, axiom: int, good: bool, witness: Callable[[], str]) -> None:
        if good:
            self.passed[axiom] += 1
        else:
            self.failures[axiom].append(witness())


def check_axioms(
    H,
    samples: Iterable[Tuple[CourantSection, CourantSection, CourantSection, CoeffFn]],
    corrupt: bool = False,
    d_scale=1,
) -> AxiomReport:
    """Evaluate the five Courant algebroid axioms on (A, B, C, f) samples."""
    rep = AxiomReport()

    def br(a, b):
        return bracket_H(H, a, b, corrupt=corrupt)

    def dd(f):
        return courant_d(f, d_scale)

    for A, B, C, f in samples:
        AB, BC, CA = br(A, B), br(B, C), br(C, A)
        rep.record(1, AB.X == A.X.bracket(B.X), lambda: f"pi[A,B] != [piA,piB] for A={A}, B={B}")
        jac = br(AB, C) + br(BC, A) + br(CA, B)
        nij = (pairing(AB, C) + pairing(BC, A) + pairing(CA, B)).scale(Scalar(Fraction(1, 3)))
        dn = dd(nij)
        rep.record(2, jac.X == dn.X and jac.xi == dn.xi, lambda: f"Jac - d(Nij) = {jac - dn} for A={A}, B={B}, C={C}")
        rep.record(3, dd(f).X.is_zero(), lambda: f"pi(df) != 0 for f={f}")
        lhs = br(A, B.scale(f))
        rhs = B.scale(A.X(f)) + AB.scale(f) - dd(f).scale(pairing(A, B))
        rep.record(4, lhs.X == rhs.X and lhs.xi == rhs.xi, lambda: f"Leibniz defect {lhs - rhs} for A={A}, B={B}, f={f}")
        l5 = A.X(pairing(B, C))
        r5 = pairing(AB + dd(pairing(A, B)), C) + pairing(B, br(A, C) + dd(pairing(A, C)))
        rep.record(5, l5 == r5, lambda: f"invariance defect {l5 - r5} for A={A}, B={B}, C={C}")
    return rep


def random_function(rng: random.Random, coords: CoordinateSystem, max_degree: int = 2, terms: int = 3) -> CoeffFn:
    out = CoeffFn.zero(coords)
    for _ in range(rng.randint(1, terms)):
        deg = rng.randint(0, max_degree)
        exps = [0] * coords.n
        for _ in range(deg):
            if coords.n:
                exps[rng.randrange(coords.n)] += 1
        out = out + CoeffFn.monomial(coords, exps, c=rng.randint(-3, 3))
    return out


def random_section(rng: random.Random, coords: CoordinateSystem, max_degree: int = 2) -> CourantSection:
    X = VectorField(coords, [random_function(rng, coords, max_degree) for _ in range(coords.dim)])
    xi = one_form(coords, [random_function(rng, coords, max_degree) for _ in range(coords.dim)])
    return CourantSection(X, xi)


def random_samples(seed: int, coords: CoordinateSystem, count: int, max_degree: int = 2):
    rng = random.Random(seed)
    return [
        (
            random_section(rng, coords, max_degree),
            random_section(rng, coords, max_degree),
            random_section(rng, coords, max_degree),
            random_function(rng, coords, max_degree),
        )
        for _ in range(count)
    ]


# ----------------------------------------------------------------------
# dimension reduction


class ReductionData:
    """Base data (F_A, H3, H2) with dF_A = 0, dH2 = 0 and dH3 = -F_A ^ H2."""

    def __init__(self, F_A: DiffForm, H3: DiffForm, H2: DiffForm):
        coords = F_A.coords
        if H3.coords != coords or H2.coords != coords:
            raise CoordinateError("reduction data on different patches")
        for name, form, deg in (("F_A", F_A, 2), ("H2", H2, 2), ("H3", H3, 3)):
            if form and form.degrees() != {deg}:
                raise ValueError(f"{name} must have degree {deg}")
        if not F_A.is_closed():
            raise ValueError("F_A is not closed")
        if not H2.is_closed():
            raise ValueError("H2 is not closed")
        if H3.d() != -(F_A.wedge(H2)):
            raise ValueError("closedness of H = H3 + A^H2 fails: dH3 != -F_A ^ H2")
        self.coords, self.F_A, self.H3, self.H2 = coords, F_A, H3, H2

    def dual(self) -> "ReductionData":
        """Swap the curvature with the fiberwise flux."""
        return ReductionData(self.H2, self.H3, self.F_A)


@dataclass(frozen=True)
class ReducedSection:
    X: VectorField
    f: CoeffFn
    omega: DiffForm
    g: CoeffFn

    @property
    def coords(self) -> CoordinateSystem:
        return self.X.coords

    def __sub__(self, o: "ReducedSection") -> "ReducedSection":
        return ReducedSection(self.X - o.X, self.f - o.f, self.omega - o.omega, self.g - o.g)

    def __str__(self) -> str:
        return f"(({self.X}), {self.f}) + (({self.omega}), {self.g})"


def reduced_pairing(r1: ReducedSection, r2: ReducedSection) -> CoeffFn:
    v = (
        r2.omega.contract(r1.X).function_part()
        + r1.omega.contract(r2.X).function_part()
        + r1.f * r2.g
        + r2.f * r1.g
    )
    return v.scale(HALF)


def reduced_bracket(rd: ReductionData, r1: ReducedSection, r2: ReducedSection, literal_typo: bool = False) -> ReducedSection:
    """Bracket of invariant sections written in base data.

    The H2 term in the form component is f2 iota_{X1} H2 - f1 iota_{X2} H2;
    ``literal_typo=True`` uses iota_{X1} in both places instead.
    """
    X1, f1, w1, g1 = r1.X, r1.f, r1.omega, r1.g
    X2, f2, w2, g2 = r2.X, r2.f, r2.omega, r2.g
    F, H3, H2 = rd.F_A, rd.H3, rd.H2

    def fn(x: DiffForm) -> CoeffFn:
        return x.function_part()

    X = X1.bracket(X2)
    f = X1(f2) - X2(f1) + fn(F.contract(X2).contract(X1))
    d = lambda h: DiffForm.function(h).d()
    om = (
        w2.lie(X1)
        - w1.lie(X2)
        + F.contract(X1) * g2
        - F.contract(X2) * g1
        - (w2.contract(X1) - w1.contract(X2)).d() * HALF
        + (d(f1) * g2 + d(g1) * f2 - d(g2) * f1 - d(f2) * g1) * HALF
        + H3.contract(X2).contract(X1)
        + H2.contract(X1) * f2
        - (H2.contract(X1) if literal_typo else H2.contract(X2)) * f1
    )
    g = X1(g2) - X2(g1) + fn(H2.contract(X2).contract(X1))
    return ReducedSection(X, f, om, g)


def cg_tau(r: ReducedSection) -> ReducedSection:
    """(X, f) + (omega, g) -> (X, g) + (omega, f)."""
    return ReducedSection(r.X, r.g, r.omega, r.f)


# total-space lift used to validate the reduced formulas

def total_coords(base: CoordinateSystem, fiber: str = "theta") -> CoordinateSystem:
    return CoordinateSystem(base.flat, base.angular + (fiber,))


def embed_fn(f: CoeffFn, total: CoordinateSystem) -> CoeffFn:
    return CoeffFn(total, {(e, m + (0,)): c for (e, m), c in f.terms()})


def embed_form(w: DiffForm, total: CoordinateSystem) -> DiffForm:
    return DiffForm(total, {idx: embed_fn(f, total) for idx, f in w.terms.items()})


def embed_vf(X: VectorField, total: CoordinateSystem) -> VectorField:
    return VectorField(total, [embed_fn(c, total) for c in X.comps] + [CoeffFn.zero(total)])


class BundleLift:
    """Trivialized circle bundle over a patch with connection A = d theta + a."""

    def __init__(self, a: DiffForm):
        self.base = a.coords
        self.total = total_coords(self.base)
        self.a = a
        self.theta = self.total.dim - 1
        self.A = DiffForm.basis(self.total, [self.theta]) + embed_form(a, self.total)
        self.F_A = a.d()

    def lift(self, r: ReducedSection) -> CourantSection:
        T = self.total
        Xh = embed_vf(r.X, T)
        vert = embed_fn(r.f, T) - embed_fn(self.a.contract(r.X).function_part(), T)
        X = Xh + VectorField.basis(T, self.theta, vert)
        xi = embed_form(r.omega, T) + self.A * embed_fn(r.g, T)
        return CourantSection(X, xi)

    def reduce(self, s: CourantSection) -> ReducedSection:
        B = self.base
        n = B.dim

        def down(f: CoeffFn) -> CoeffFn:
            out = {}
            for (e, m), c in f.terms():
                if m[-1]:
                    raise ValueError("section is not invariant")
                out[(e, m[:-1])] = c
            return CoeffFn(B, out)

        Xb = VectorField(B, [down(c) for c in s.X.comps[:n]])
        f = down(s.X.comps[self.theta]) + self.a.contract(Xb).function_part()
        g = down(s.xi.coefficient([self.theta]))
        omega = one_form(B, [down(s.xi.coefficient([i])) for i in range(n)]) - self.a * g
        return ReducedSection(Xb, f, omega, g)

    def total_H(self, rd: ReductionData) -> DiffForm:
        T = self.total
        return embed_form(rd.H3, T) + self.A.wedge(embed_form(rd.H2, T))


# ----------------------------------------------------------------------
# invariant forms and the Hori map


@dataclass(frozen=True)
class InvariantForm:
    """G0 + A ^ G1 with base forms G0, G1."""

    G0: DiffForm
    G1: DiffForm

    def __add__(self, o: "InvariantForm") -> "InvariantForm":
        return InvariantForm(self.G0 + o.G0, self.G1 + o.G1)

    def __sub__(self, o: "InvariantForm") -> "InvariantForm":
        return InvariantForm(self.G0 - o.G0, self.G1 - o.G1)

    def __neg__(self) -> "InvariantForm":
        return InvariantForm(-self.G0, -self.G1)

    def scale(self, s) -> "InvariantForm":
        return InvariantForm(self.G0 * s, self.G1 * s)

    def is_zero(self) -> bool:
        return self.G0.is_zero() and self.G1.is_zero()

    def __str__(self) -> str:
        return f"{self.G0} + A^({self.G1})"


def inv_d_H(rd: ReductionData, G: InvariantForm) -> InvariantForm:
    """d_H on G0 + A^G1 with dA = F_A and H = H3 + A^H2."""
    F, H3, H2 = rd.F_A, rd.H3, rd.H2
    new0 = G.G0.d() + F.wedge(G.G1) + H3.wedge(G.G0)
    new1 = -G.G1.d() - H3.wedge(G.G1) + H2.wedge(G.G0)
    return InvariantForm(new0, new1)


def inv_clifford(r: ReducedSection, G: InvariantForm) -> InvariantForm:
    """Action of (X + f X_A) + (omega + g A) on G0 + A^G1."""
    G0, G1 = G.G0, G.G1
    new0 = G0.contract(r.X) + G1 * r.f + r.omega.wedge(G0)
    new1 = -G1.contract(r.X) - r.omega.wedge(G1) + G0 * r.g
    return InvariantForm(new0, new1)


def hori_T(G: InvariantForm) -> InvariantForm:
    """G0 + A^G1 -> -G1 + Ahat^G0."""
    return InvariantForm(-G.G1, G.G0)


def clifford_sign(samples: Iterable[Tuple[ReducedSection, InvariantForm]]) -> Tuple[Optional[int], list]:
    """Find the unique eps with T(s.G) = eps * tau(s).T(G) on all samples.

    Returns (eps, failures); eps is None when no single sign works.
    """
    candidates = {1, -1}
    bad = []
    for s, G in samples:
        lhs = hori_T(inv_clifford(s, G))
        rhs = inv_clifford(cg_tau(s), hori_T(G))
        ok = {e for e in candidates if (lhs - rhs.scale(e)).is_zero()}
        if lhs.is_zero() and rhs.is_zero():
            continue
        if not ok:
            bad.append((s, G, lhs, rhs))
        candidates &= ok
    if bad or len(candidates) != 1:
        return None, bad
    return candidates.pop(), bad
