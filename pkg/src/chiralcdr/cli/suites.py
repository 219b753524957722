"""Verification suites driven by a SuiteConfig.

Every suite returns a Report; records are sorted at emission so the output
is independent of evaluation order.  Randomised checks draw from
``random.Random(cfg.seed)`` and record the seed.
"""

from __future__ import annotations

import itertools
import random
from typing import Callable, Dict, List

from ..cdr import (
    D_twisted,
    NotClosedError,
    Patch,
    TwistedPatch,
    topological_brackets,
    topological_table,
    untwist_relations,
    untwist_replay,
    vanishing_witness,
)
from ..coeffring import CoeffFn, CoordinateSystem
from ..cohomlab import (
    LinearCache,
    character_of_computed_cohomology,
    cohomology_dims,
    differential_matrix,
    enumerate_basis,
    predicted_quotient_character,
)
from ..courant import (
    BundleLift,
    InvariantForm,
    ReducedSection,
    bracket_H,
    bracket_compat_check,
    cg_tau,
    check_axioms,
    clifford_sign,
    hori_T,
    inv_d_H,
    random_function,
    random_samples,
    random_section,
    reduced_bracket,
    reduced_pairing,
)
from ..forms import DiffForm, VectorField, one_form, poincare_potential
from ..tduality import (
    BundlePatch,
    DualPairSetup,
    T_ch,
    intertwining_defects,
    predicted_brackets,
    tau_ch_replay,
    untwist_quotient,
)
from ..voa import FieldExpr, jacobi_defects, lambda_bracket
from .config import SuiteConfig
from .report import Report

SUITES = ("cdr", "courant", "tduality", "characters")


def _rng(cfg: SuiteConfig, salt: str) -> random.Random:
    return random.Random(f"{cfg.seed}:{salt}")


def _random_vf(rng: random.Random, coords: CoordinateSystem) -> VectorField:
    return VectorField(coords, [random_function(rng, coords) for _ in range(coords.dim)])


def _random_form(rng: random.Random, coords: CoordinateSystem, k: int) -> DiffForm:
    out = DiffForm.zero(coords)
    for idx in itertools.combinations(range(coords.dim), k):
        if rng.random() < 0.6:
            out = out + DiffForm(coords, {idx: random_function(rng, coords)})
    return out


def _random_reduced(rng: random.Random, coords: CoordinateSystem) -> ReducedSection:
    rf = lambda: random_function(rng, coords)  # noqa: E731
    return ReducedSection(_random_vf(rng, coords), rf(), one_form(coords, [rf() for _ in range(coords.dim)]), rf())


def _random_element(rng: random.Random, basis_elems: List[FieldExpr], terms: int = 3) -> FieldExpr:
    ctx = basis_elems[0].ctx
    out = FieldExpr.zero(ctx)
    for x in rng.sample(basis_elems, min(terms, len(basis_elems))):
        out = out + x * rng.choice([-3, -2, -1, 1, 2, 3])
    return out


def _first(bad: list, limit: int = 3) -> str:
    return "\n".join(str(b) for b in bad[:limit]) + (f"\n... {len(bad) - limit} more" if len(bad) > limit else "")


# ----------------------------------------------------------------------
# cdr


def suite_cdr(cfg: SuiteConfig) -> Report:
    rep = Report()
    P = cfg.patch
    want, got = topological_table(P), topological_brackets(P)
    for pair in want:
        a, b = pair
        ok = want[pair] == got[pair]
        rep.add("cdr", f"ope/[{a} lam {b}]", "J, Q, G, L brackets at rank n", ok,
                f"expected {want[pair]}\n     got {got[pair]}")

    # homotopy and square-zero on the PBW set
    elems = [x for w in range(cfg.max_weight + 1) for x in enumerate_basis(P.ctx, w, poly_degree=cfg.poly_degree).elements()]
    D, G0, L0 = LinearCache(P.D, P.ctx), LinearCache(P.G0, P.ctx), LinearCache(P.L0, P.ctx)
    bad = [x for x in elems if D(G0(x)) + G0(D(x)) != L0(x)]
    rep.add("cdr", "homotopy/[D,G0]=L0", "G0 is a homotopy for L0", not bad,
            f"{len(bad)} of {len(elems)} basis vectors fail, e.g. {_first(bad, 1)}")
    bad = [x for x in elems if not D(D(x)).is_zero()]
    rep.add("cdr", "square-zero/D", "square-zero differential", not bad, f"D^2 != 0 on {_first(bad)}")
    tw_data = cfg.twist
    DH = LinearCache(lambda a: D_twisted(P, tw_data, a), P.ctx)
    bad = [x for x in elems if not DH(DH(x)).is_zero()]
    rep.add("cdr", "square-zero/D_H", "twisted differential", not bad, f"D_H^2 != 0 on {_first(bad)}")

    # vanishing witnesses at positive weight
    rng = _rng(cfg, "witness")
    pools = {w: enumerate_basis(P.ctx, w, poly_degree=min(cfg.poly_degree, 1)).elements() for w in (1, 2)}
    failures = []
    for i in range(cfg.witnesses):
        w = 1 + i % 2
        a = DH(_random_element(rng, pools[w]))
        if a.is_zero():
            continue
        try:
            b = vanishing_witness(P, tw_data, a)
        except (NotClosedError, RuntimeError) as exc:
            failures.append(f"{a}: {exc}")
            continue
        if D_twisted(P, tw_data, b) != a:
            failures.append(f"D_H(b) != a for a = {a}, b = {b}")
    rep.add("cdr", "vanishing/witness", "closed positive-weight elements are exact", not failures,
            _first(failures), seed=cfg.seed)

    # untwisting
    tw = TwistedPatch(tw_data)
    rng = _rng(cfg, "untwist")
    X, Y = _random_vf(rng, P.coords), _random_vf(rng, P.coords)
    g = random_function(rng, P.coords)
    bad = untwist_replay(P, tw, X, Y)
    rep.add("cdr", "untwist/replay", "untwisting map", not bad, _first(bad), seed=cfg.seed)
    bad = untwist_relations(P, tw, g, X)
    rep.add("cdr", "untwist/relations", "untwisting map", not bad, _first(bad), seed=cfg.seed)
    return rep


# ----------------------------------------------------------------------
# courant


def suite_courant(cfg: SuiteConfig) -> Report:
    rep = Report()
    C = cfg.patch.coords
    H = cfg.form("H")
    samples = random_samples(cfg.seed, C, cfg.samples)
    for label, form in (("standard", DiffForm.zero(C)), ("twisted", H)):
        ar = check_axioms(form, samples, corrupt=cfg.corrupt)
        name = f"{label}-corrupted" if cfg.corrupt else label
        for ax in range(1, 6):
            rep.add("courant", f"axiom/{name}/{ax}", "Courant axioms", ar.ok(ax),
                    f"{len(ar.failures[ax])} of {len(samples)} samples fail; first: {(ar.failures[ax] or [''])[0]}",
                    seed=cfg.seed)
    if not cfg.corrupt:
        neg = check_axioms(H, samples[: min(10, len(samples))], corrupt=True)
        rep.add("courant", "axiom/negative-control", "corrupted bracket violates Jacobi", not neg.ok(2),
                "the corrupted bracket passed axiom 2", seed=cfg.seed)

    rng = _rng(cfg, "compat")
    bad = []
    for _ in range(5):
        s1, s2 = random_section(rng, C), random_section(rng, C)
        w = _random_form(rng, C, 1) + _random_form(rng, C, 2)
        if not bracket_compat_check(H, s1, s2, w, "dorfman"):
            bad.append((str(s1), str(s2), str(w)))
    rep.add("courant", "derived-bracket/dorfman", "Dorfman bracket is the d_H derived bracket", not bad, _first(bad), seed=cfg.seed)

    rd = cfg.reduction
    lift = BundleLift(poincare_potential(rd.F_A))
    Htot = lift.total_H(rd)
    rng = _rng(cfg, "reduction")
    bad = []
    for _ in range(6):
        r1, r2 = _random_reduced(rng, C), _random_reduced(rng, C)
        full = lift.reduce(bracket_H(Htot, lift.lift(r1), lift.lift(r2)))
        red = reduced_bracket(rd, r1, r2)
        d = full - red
        if not (d.X.is_zero() and d.f.is_zero() and d.omega.is_zero() and d.g.is_zero()):
            bad.append(f"reduced bracket differs from lift by {d}")
    rep.add("courant", "reduction/bracket-vs-lift", "reduced bracket equals lifted bracket, reduced", not bad, _first(bad), seed=cfg.seed)

    du = rd.dual()
    bad = []
    for _ in range(4):
        r1, r2 = _random_reduced(rng, C), _random_reduced(rng, C)
        x = reduced_bracket(du, cg_tau(r1), cg_tau(r2)) - cg_tau(reduced_bracket(rd, r1, r2))
        if not (x.X.is_zero() and x.f.is_zero() and x.omega.is_zero() and x.g.is_zero()):
            bad.append(f"tau defect {x}")
        if reduced_pairing(cg_tau(r1), cg_tau(r2)) != reduced_pairing(r1, r2):
            bad.append("tau changes the pairing")
    rep.add("courant", "reduction/tau-isomorphism", "tau preserves reduced bracket and pairing", not bad, _first(bad), seed=cfg.seed)

    inv = [(_random_reduced(rng, C), _random_invariant(rng, C)) for _ in range(8)]
    eps, bad = clifford_sign(inv)
    rep.add("courant", "hori/clifford-sign", f"Clifford compatibility, eps = {eps}", eps is not None,
            f"no single sign; {len(bad)} mismatches", seed=cfg.seed)
    bad = []
    for _, G in inv:
        if not (hori_T(inv_d_H(rd, G)) + inv_d_H(du, hori_T(G))).is_zero():
            bad.append(str(G))
    rep.add("courant", "hori/intertwines-d_H", "T d_H = -d_Hhat T", not bad, _first(bad), seed=cfg.seed)
    return rep


def _random_invariant(rng: random.Random, C: CoordinateSystem) -> InvariantForm:
    return InvariantForm(_random_form(rng, C, rng.randint(0, min(3, C.dim))),
                         _random_form(rng, C, rng.randint(0, min(3, C.dim))))


# ----------------------------------------------------------------------
# tduality


def _invariant_spanning_set(C: CoordinateSystem) -> List[InvariantForm]:
    fns = [CoeffFn.const(C, 1)] + ([CoeffFn.coordinate(C, 0)] if C.n else [])
    base = [DiffForm.zero(C)]
    out = []
    for k in range(min(2, C.dim) + 1):
        for idx in itertools.combinations(range(C.dim), k):
            for f in fns:
                w = DiffForm(C, {idx: f})
                out.append(InvariantForm(w, base[0]))
                out.append(InvariantForm(base[0], w))
    return out


def suite_tduality(cfg: SuiteConfig) -> Report:
    rep = Report()
    C = cfg.patch.coords
    rd = cfg.reduction
    rng = _rng(cfg, "tduality")

    bp = BundlePatch(C, poincare_potential(rd.F_A))
    br = bp.heisenberg()
    rep.add("tduality", "heisenberg", "L_A and Gamma^A form a Heisenberg pair", bp.heisenberg_holds(),
            "; ".join(f"[{k}] = {v}" for k, v in br.items()))

    S = DualPairSetup(rd.F_A, rd.H2, rd.H3)
    fns = [CoeffFn.coordinate(C, 0)] if C.n else []
    for side in ("Z", "Zhat"):
        q = S.side(side)
        gens = [FieldExpr.gen(q.ctx, g.name) for g in q.ctx.generators]
        bad = q.D.check_brackets(functions=fns)
        bad += [(str(x), "D^2") for x in gens if not q.D(q.D(x)).is_zero()]
        rep.add("tduality", f"quotient/{side}/differential", "quotient differential", not bad, _first(bad))
        jd = jacobi_defects(gens + [FieldExpr.function(q.ctx, f) for f in fns], 2)
        rep.add("tduality", f"quotient/{side}/jacobi", "Borcherds identities in the quotient", not jd, _first(jd))

    bad = S.tau.check_brackets(functions=fns)
    rep.add("tduality", "tau/generator-brackets", "tau^ch respects lambda-brackets", not bad, _first(bad))
    X, Y = _random_vf(rng, C), _random_vf(rng, C)
    bad = tau_ch_replay(S, X, Y)
    rep.add("tduality", "tau/replay", "tau^ch respects lambda-brackets", not bad, _first(bad), seed=cfg.seed)
    Z = S.Z
    pb = predicted_brackets(Z, X, Y)
    ok = lambda_bracket(Z.lie(X), Z.iota(Y)).entry(0) == pb["L_X,iota_Y"] and \
        lambda_bracket(Z.lie(X), Z.lie(Y)).entry(0) == pb["L_X,L_Y"]
    rep.add("tduality", "quotient/predicted-brackets", "reduced brackets in the quotient", ok, f"X = {X}, Y = {Y}", seed=cfg.seed)

    bad = []
    for G in _invariant_spanning_set(C):
        got = T_ch(S, Z.invariant_form(G))
        want = S.Zhat.invariant_form(hori_T(G))
        if got != want:
            bad.append(f"G = {G}: T_ch = {got}, Hori = {want}")
    rep.add("tduality", "T_ch/weight-zero", "T^ch agrees with hori_T on weight-zero forms", not bad, _first(bad))

    bad = intertwining_defects(S, modified=True)
    rep.add("tduality", "intertwining/modified", "tau(D + H_0) = (D + Hhat_0) tau", not bad, _first(list(bad.items())))
    naive = intertwining_defects(S, modified=False)
    if rd.H2.is_zero():
        rep.skip("tduality", "intertwining/naive-fails", "unmodified D is not intertwined by tau^ch",
                 "F_Ahat = 0, so the unmodified differentials may agree")
    else:
        rep.add("tduality", "intertwining/naive-fails", "unmodified D is not intertwined by tau^ch",
                "iota_A" in naive, "tau D(iota_A) = D tau(iota_A) although F_Ahat != 0")

    for side in ("Z", "Zhat"):
        u = untwist_quotient(S, side)
        plain = S.untwisted[0 if side == "Z" else 1]
        tw = S.side(side)
        bad = u.check_brackets(functions=fns)
        bad += [x.name for x in plain.ctx.generators
                if u(plain.D(FieldExpr.gen(plain.ctx, x.name))) != tw.D(u(FieldExpr.gen(plain.ctx, x.name)))]
        rep.add("tduality", f"untwist/{side}", "untwisting the quotient", not bad, _first(bad))
    return rep


# ----------------------------------------------------------------------
# characters


def suite_characters(cfg: SuiteConfig) -> Report:
    rep = Report()
    N = cfg.order
    S = DualPairSetup.point()
    Z = S.Z
    got = character_of_computed_cohomology(Z.ctx, Z.D, N)
    want = predicted_quotient_character({0: 1, 1: 1}, N)
    rep.add("characters", f"base-point/q^{N}", "character equals (1+z) prod (1+q^n z)(1+q^n/z)", got == want,
            f"computed:\n{got.grid()}\npredicted:\n{want.grid()}")
    rep.tables[f"computed cohomology character, base-point pair, through q^{N}"] = got.grid()
    rep.tables[f"predicted (1+z) * fermion character through q^{N}"] = want.grid()

    # S^1 with Fourier sectors: sector 0 carries 1 + z, others are acyclic
    P = Patch.standard(0, 1)
    bad = []
    for s in (-1, 0, 1):
        for w in range(min(N, 2) + 1):
            dims = cohomology_dims(differential_matrix(P.D, enumerate_basis(P.ctx, w, (s,))))
            expect = {0: 1, 1: 1} if (s == 0 and w == 0) else {}
            if {k: v for k, v in dims.items() if v} != expect:
                bad.append(f"sector {s}, weight {w}: {dims}")
    rep.add("characters", "circle/fourier-sectors", "de Rham cohomology of the circle", not bad, _first(bad))
    return rep


RUNNERS: Dict[str, Callable[[SuiteConfig], Report]] = {
    "cdr": suite_cdr,
    "courant": suite_courant,
    "tduality": suite_tduality,
    "characters": suite_characters,
}


def run_suite(name: str, cfg: SuiteConfig) -> Report:
    try:
        runner = RUNNERS[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return runner(cfg)


def run_all(cfg: SuiteConfig) -> Report:
    rep = Report()
    for name in SUITES:
        rep.extend(run_suite(name, cfg))
    return rep


__all__ = ["SUITES", "run_suite", "run_all"]
