"""Independent Fock-space model of the free b, c, beta, dgamma system.

States are finite sums of ordered creation-mode words acting on the vacuum.
Composite fields act through the normally ordered mode formula

    (:x Y:)_(n) = sum_{j<0} x_(j) Y_(n-j-1) + (-1)^{|x||Y|} sum_{j>=0} Y_(n-j-1) x_(j)

and (d^k x)_(n) = (-1)^k n(n-1)...(n-k+1) x_(n-k).  Nothing here calls the
lambda-bracket engine; only the generator table (two scalars) is shared.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Dict, Tuple

Op = Tuple[int, int]  # (generator position, circle-mode index)
State = Dict[Tuple[Op, ...], Fraction]


def gbinom(m: int, j: int) -> Fraction:
    """Generalised binomial C(m, j) for any integer m and j >= 0."""
    out = Fraction(1)
    for i in range(j):
        out = out * (m - i) / (i + 1)
    return out


class FockModel:
    def __init__(self, ctx):
        self.ctx = ctx
        self.parity = [g.parity for g in ctx.generators]
        self.weight = [g.weight for g in ctx.generators]
        pos = {g.name: p for p, g in enumerate(ctx.generators)}
        # (x, y) -> {j: x o(j) y} for scalar circle products of generators
        self.table: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
        for g in ctx.generators:
            i = g.name[g.name.index("[") :]
            kind = g.kind
            if kind == "b":
                self.table[(pos[f"b{i}"], pos[f"c{i}"])] = {0: Fraction(1)}
                self.table[(pos[f"c{i}"], pos[f"b{i}"])] = {0: Fraction(1)}
            elif kind == "beta":
                self.table[(pos[f"beta{i}"], pos[f"dgamma{i}"])] = {1: Fraction(1)}
                self.table[(pos[f"dgamma{i}"], pos[f"beta{i}"])] = {1: Fraction(1)}

    # single modes -----------------------------------------------------
    def commutator(self, x: Op, y: Op) -> Fraction:
        (gx, m), (gy, n) = x, y
        j = m + n + 1
        if j < 0:
            return Fraction(0)
        return gbinom(m, j) * self.table.get((gx, gy), {}).get(j, Fraction(0))

    def _sign(self, a: int, b: int) -> int:
        return -1 if self.parity[a] and self.parity[b] else 1

    def apply_op(self, op: Op, state: State) -> State:
        out: State = {}
        for word, c in state.items():
            for w2, c2 in self._apply_word(op, word):
                out[w2] = out.get(w2, Fraction(0)) + c * c2
        return {k: v for k, v in out.items() if v}

    def _apply_word(self, op: Op, word: Tuple[Op, ...]):
        g, m = op
        if m < 0:
            # creation: insert in sorted position
            sign = 1
            for i, y in enumerate(word):
                if y == op and self.parity[g]:
                    return []
                if op < y:
                    return [(word[:i] + (op,) + word[i:], Fraction(sign))]
                sign *= self._sign(g, y[0])
            return [(word + (op,), Fraction(sign))]
        # annihilation: sweep right, picking up scalar commutators
        out = []
        sign = 1
        for i, y in enumerate(word):
            c = self.commutator(op, y)
            if c:
                out.append((word[:i] + word[i + 1 :], c * sign))
            sign *= self._sign(g, y[0])
        return out

    # fields ------------------------------------------------------------
    def mono_weight(self, mono) -> int:
        return sum(self.weight[g] + d for g, d in mono)

    def mono_parity(self, mono) -> int:
        return sum(self.parity[g] for g, _ in mono) % 2

    def state_weight(self, word: Tuple[Op, ...]) -> int:
        return sum(self.weight[g] - m - 1 for g, m in word)

    def apply_field(self, mono, n: int, state: State) -> State:
        if not state:
            return {}
        if not mono:
            return dict(state) if n == -1 else {}
        if len(mono) == 1:
            (g, d), = mono
            coef = Fraction((-1) ** d)
            for i in range(d):
                coef *= n - i
            if not coef:
                return {}
            return {k: v * coef for k, v in self.apply_op((g, n - d), state).items()}
        x, Y = mono[:1], mono[1:]
        hx, hY = self.mono_weight(x), self.mono_weight(Y)
        w = max(self.state_weight(k) for k in state)
        sgn = -1 if self.mono_parity(x) and self.mono_parity(Y) else 1
        out: State = {}

        def acc(s, scale=1):
            for k, v in s.items():
                out[k] = out.get(k, Fraction(0)) + v * scale

        # Y_(k) lowers the weight by k + 1 - hY, so it kills the state once k >= w + hY
        j = -1
        while n - j - 1 < w + hY:
            inner = self.apply_field(Y, n - j - 1, state)
            if inner:
                acc(self.apply_field(x, j, inner))
            j -= 1
        for j in range(0, max(0, w + hx)):
            inner = self.apply_field(x, j, state)
            if inner:
                acc(self.apply_field(Y, n - j - 1, inner), sgn)
        return {k: v for k, v in out.items() if v}

    def state_of_mono(self, mono) -> State:
        st: State = {(): Fraction(1)}
        for g, d in reversed(mono):
            st = {k: v * factorial(d) for k, v in self.apply_op((g, -1 - d), st).items()}
        return st

    def state_of(self, e) -> State:
        """Fock state of a function-free FieldExpr."""
        out: State = {}
        for mono, f in e.terms.items():
            if not f.is_constant():
                raise ValueError("the oracle handles constant coefficients only")
            c = f.constant_term()
            if c.im:
                raise ValueError("the oracle handles rational coefficients only")
            for k, v in self.state_of_mono(mono).items():
                out[k] = out.get(k, Fraction(0)) + v * c.re
        return {k: v for k, v in out.items() if v}

    def circle_state(self, a, n: int, b) -> State:
        """State of a o(n) b computed entirely in the Fock model."""
        out: State = {}
        bst = self.state_of(b)
        for mono, f in a.terms.items():
            c = f.constant_term().re
            for k, v in self.apply_field(mono, n, bst).items():
                out[k] = out.get(k, Fraction(0)) + v * c
        return {k: v for k, v in out.items() if v}
