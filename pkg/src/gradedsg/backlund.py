"""Auto-Backlund rewrite systems, series solution, currents, audits.

Two oriented systems are supported.  The minus-oriented one relates the
covariant derivatives of a target superfield to a seed superfield through
spinor parameters lambda+-; the plus-oriented one swaps the two derivative
directions and uses the mirrored eta parameters.  Everything here works in
the z-independent truncation, where the two mixed covariant derivatives of
a superfield coincide.

The verification strategy substitutes the first-order relations into
explicit chain-rule factors (each substitution step is itself checked
against the engine as an oracle), so no heuristic pattern matching on
normalized expressions is ever needed for the theorem-level checks.  The
jet-level rewriter ``bt_reduce`` exposes the same relations as oriented
rules for interactive use and for the body-system export.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import algebra as al
from . import model as md
from . import superspace as ss
from .algebra import Context, GradedExpr, Q
from .errors import InconsistentSystem, NonTermination, UnresolvedGenerator
from .grading import DEG_01, DEG_10
from .report import Report, timer

HALF = Q(1, 2)
QUARTER = Q(1, 4)


# ---------------------------------------------------------------------------
# systems

@dataclass(frozen=True)
class BTSystem:
    """An oriented auto-Backlund rewrite system between two superfields.

    orientation 'minus': the growth equation feeds the D- derivative and
    carries lambda+; 'plus' swaps the derivative directions and uses the
    eta family.  ``sabotage`` flips the trig-term sign of one equation and
    exists only so that non-solutions demonstrably fail.
    """

    orientation: str = "minus"
    seed: str = "Phi"
    target: str = "Phi~"
    order: int = 6
    ctx: Context = al.BT_CTX
    sabotage: Optional[str] = None  # None | 'flip-first' | 'flip-second'

    def __post_init__(self):
        if self.orientation not in ("minus", "plus"):
            raise ValueError("orientation must be 'minus' or 'plus'")
        if self.ctx.nz != 0:
            raise ValueError("Backlund systems require the z-independent mode")

    # derivations and parameters, orientation-resolved
    @property
    def D1(self) -> ss.Derivation:
        return ss.D_MINUS if self.orientation == "minus" else ss.D_PLUS

    @property
    def D2(self) -> ss.Derivation:
        return ss.D_PLUS if self.orientation == "minus" else ss.D_MINUS

    @property
    def param1(self) -> str:
        return "lambda+" if self.orientation == "minus" else "eta+"

    @property
    def param2(self) -> str:
        return "lambda-" if self.orientation == "minus" else "eta-"

    def d1_jet(self, e: GradedExpr) -> GradedExpr:
        return al.d_x(e, "-" if self.orientation == "minus" else "+")

    def d2_jet(self, e: GradedExpr) -> GradedExpr:
        return al.d_x(e, "+" if self.orientation == "minus" else "-")

    def d1_cov(self, e: GradedExpr) -> GradedExpr:
        return ss.apply(self.D1, e)

    def d2_cov(self, e: GradedExpr) -> GradedExpr:
        return ss.apply(self.D2, e)

    @functools.cached_property
    def seed_field(self) -> ss.SuperField:
        return ss.generic_superfield(self.seed, nz=0, ctx=self.ctx)

    @functools.cached_property
    def target_field(self) -> ss.SuperField:
        return ss.generic_superfield(self.target, nz=0, ctx=self.ctx)

    @functools.cached_property
    def sum_arg(self) -> GradedExpr:
        return self.target_field.expr + self.seed_field.expr

    @functools.cached_property
    def diff_arg(self) -> GradedExpr:
        return self.target_field.expr - self.seed_field.expr

    @functools.cached_property
    def rhs1(self) -> GradedExpr:
        """Right-hand side for D1(target)."""
        ctx = self.ctx
        sign = -1 if self.sabotage == "flip-first" else 1
        term = (al.gen("a", ctx) * al.gen(self.param1, ctx)
                * al.trig_of("s", self.sum_arg, QUARTER)).scale(2 * sign)
        return ss.apply(self.D1, self.seed_field.expr) + term

    @functools.cached_property
    def rhs2(self) -> GradedExpr:
        """Right-hand side for D2(target)."""
        ctx = self.ctx
        sign = -1 if self.sabotage == "flip-second" else 1
        term = (al.apow(-1, ctx) * al.gen(self.param2, ctx)
                * al.trig_of("s", self.diff_arg, QUARTER)).scale(2 * sign)
        return -ss.apply(self.D2, self.seed_field.expr) + term


# ---------------------------------------------------------------------------
# chain-rule oracle and component-sector recomputation

def trig_chain_residual(D: ss.Derivation, kind: str, arg: GradedExpr,
                        half: Fraction) -> GradedExpr:
    """Engine derivative of a trig expansion minus its chain-rule form.

    Valid when the argument's monomials mutually commute (true for plain
    superfield arguments; the series solution violates it because its odd
    coefficients anticommute, which is why audits recompute derivatives
    sector-wise instead).
    """
    lhs = ss.apply(D, al.trig_of(kind, arg, half))
    darg = ss.apply(D, arg)
    if kind == "s":
        rhs = (al.trig_of("c", arg, half) * darg).scale(Q(half))
    else:
        rhs = (al.trig_of("s", arg, half) * darg).scale(-Q(half))
    return lhs - rhs


def component_apply_cov(which: str, e: GradedExpr) -> GradedExpr:
    """Covariant derivative evaluated sector-by-sector (z-independent mode).

    Independent of the derivation pipeline: splits the expression into theta
    sectors, applies the coordinate formula to each coefficient and
    reassembles with explicit theta multiplications.
    """
    if e.ctx.nz != 0:
        raise ValueError("component recomputation works in z-independent mode")
    sec = al.component_split(e)
    ctx = e.ctx
    zero = GradedExpr.zero(ctx)
    c00 = sec.get((0, 0), zero)
    c10 = sec.get((1, 0), zero)  # theta- coefficient
    c01 = sec.get((0, 1), zero)  # theta+ coefficient
    c11 = sec.get((1, 1), zero)
    tm = al.gen("theta-", ctx)
    tp = al.gen("theta+", ctx)
    if which == "-":
        return (c10 + tp * c11
                - (tm * al.d_minus(c00)).scale(HALF)
                - (tm * (tp * al.d_minus(c01))).scale(HALF))
    if which == "+":
        return (c01 + tm * c11
                - (tp * al.d_plus(c00)).scale(HALF)
                - (tm * (tp * al.d_plus(c10))).scale(HALF))
    raise ValueError("which must be '-' or '+'")


# ---------------------------------------------------------------------------
# jet-level rewriter

def _sector_rules(sys: BTSystem, which: str) -> dict[tuple[str, int, int], GradedExpr]:
    """Solve one equation's theta sectors for the target jets they contain."""
    lhs = ss.apply(sys.D1 if which == "eq1" else sys.D2, sys.target_field.expr)
    rhs = sys.rhs1 if which == "eq1" else sys.rhs2
    lsec = al.component_split(lhs)
    rsec = al.component_split(rhs)
    rules: dict[tuple[str, int, int], GradedExpr] = {}
    for sector, expr in lsec.items():
        if len(expr.terms) != 1:
            raise AssertionError("unexpected sector shape on the left-hand side")
        (key, coef), = expr.terms.items()
        atoms = key[6] or key[7]
        assert len(atoms) == 1 and atoms[0][1] == 1
        atom = atoms[0][0]
        target = rsec.get(sector, GradedExpr.zero(sys.ctx))
        rules[atom] = target.scale(1 / coef)
    return rules


class BTReducer:
    """Oriented replacement of target-field jets by Backlund right-hand sides.

    Jet lookup picks the most specific base rule (the one already carrying
    the larger part of the requested derivative string); the ``prefer``
    argument breaks the tie for jets both equations determine (the auxiliary
    component).  Prolongations are derivatives of the base rules and are
    generated lazily.
    """

    def __init__(self, sys: BTSystem, prefer: str = "eq1"):
        if prefer not in ("eq1", "eq2"):
            raise ValueError("prefer must be 'eq1' or 'eq2'")
        self.sys = sys
        self.prefer = prefer
        self._bases: dict[tuple[str, int, int], list[tuple[str, GradedExpr]]] = {}
        for which in ("eq1", "eq2"):
            for atom, expr in _sector_rules(sys, which).items():
                self._bases.setdefault(atom, []).append((which, expr))

    @functools.lru_cache(maxsize=None)
    def _rule(self, name: str, m: int, n: int) -> Optional[GradedExpr]:
        candidates = []
        for (bname, bm, bn), variants in self._bases.items():
            if bname != name or bm > m or bn > n:
                continue
            for which, expr in variants:
                candidates.append((bm + bn, which == self.prefer, bm, bn, which, expr))
        if not candidates:
            return None
        candidates.sort(key=lambda c: (c[0], c[1]), reverse=True)
        _, _, bm, bn, _, expr = candidates[0]
        for _ in range(m - bm):
            expr = al.d_minus(expr)
        for _ in range(n - bn):
            expr = al.d_plus(expr)
        return expr

    def reduce(self, e: GradedExpr, max_passes: int = 64) -> GradedExpr:
        for _ in range(max_passes):
            new = al.substitute_jets(e, self._rule)
            if new.terms == e.terms:
                return new
            e = new
        raise NonTermination("Backlund rewriting did not reach a fixed point")


def bt_reduce(e: GradedExpr, sys: BTSystem, prefer: str = "eq1") -> GradedExpr:
    return BTReducer(sys, prefer).reduce(e)


# ---------------------------------------------------------------------------
# the auto-Backlund theorem

def verify_auto_bt(sys: BTSystem) -> Report:
    """Check that the rewrite system maps seed solutions to target solutions.

    In the z-independent mode both mixed covariant derivatives of the target
    coincide, so the target residual is evaluated as twice the mixed
    derivative with the second relation substituted innermost, the first
    relation substituted into the chain-rule factor, and the seed equation
    of motion applied at the end.  The chain-rule steps themselves are
    asserted against the engine first.
    """
    rep = Report(f"verify-bt[{sys.orientation}]")
    with timer(rep):
        ctx = sys.ctx
        seed = sys.seed_field
        target = sys.target_field
        alpha = al.gen("alpha", ctx)

        # chain-rule oracles for both trig factors
        for label, kind, arg in (("sum", "s", sys.sum_arg), ("diff", "s", sys.diff_arg)):
            res = trig_chain_residual(sys.D1, kind, arg, QUARTER)
            rep.add(f"chain-rule oracle D1 {label}", "pass" if res.is_zero() else "fail",
                    () if res.is_zero() else (al.to_text(res),))
            res = trig_chain_residual(sys.D2, kind, arg, QUARTER)
            rep.add(f"chain-rule oracle D2 {label}", "pass" if res.is_zero() else "fail",
                    () if res.is_zero() else (al.to_text(res),))

        # D1(rhs2) with the chain factor substituted via the first relation
        sign2 = -1 if sys.sabotage == "flip-second" else 1
        d1_of_trig2 = (al.trig_of("c", sys.diff_arg, QUARTER)
                       * (sys.rhs1 - ss.apply(sys.D1, seed.expr))).scale(QUARTER)
        d1_rhs2 = (-ss.apply(sys.D1, ss.apply(sys.D2, seed.expr))
                   + (al.apow(-1, ctx) * al.gen(sys.param2, ctx)
                      * d1_of_trig2).scale(2 * sign2))
        target_residual = (d1_rhs2.scale(2)
                           + alpha * al.trig_of("s", target.expr, HALF))
        E = target_residual - md.sg_residual(seed)
        E = md.reduce_on_shell(E, seed)
        ok = E.is_zero()
        rep.add("target residual equals seed residual on shell",
                "pass" if ok else "fail",
                () if ok else tuple(sorted(al.term_str(k, c) for k, c in E.terms.items())))

        # route asymmetry of the printed system (informational): substituting
        # the first relation innermost instead leaves a nonzero obstruction.
        sign1 = -1 if sys.sabotage == "flip-first" else 1
        d2_of_trig1 = (al.trig_of("c", sys.sum_arg, QUARTER)
                       * (sys.rhs2 + ss.apply(sys.D2, seed.expr))).scale(QUARTER)
        d2_rhs1 = (ss.apply(sys.D2, ss.apply(sys.D1, seed.expr))
                   + (al.gen("a", ctx) * al.gen(sys.param1, ctx)
                      * d2_of_trig1).scale(2 * sign1))
        alt = (d2_rhs1.scale(2) + alpha * al.trig_of("s", target.expr, HALF)
               - md.sg_residual(seed))
        alt = md.reduce_on_shell(alt, seed)
        rep.add("route asymmetry (other mixed-derivative route)", "info",
                (al.to_text(alt),), is_zero=alt.is_zero())
    return rep


# ---------------------------------------------------------------------------
# series solution

def expand_series(sys: BTSystem, N: Optional[int] = None) -> list[GradedExpr]:
    """Series coefficients of the target field, [order 0 .. order N].

    Order 0 is the seed; order 1 follows from the lowest-order matching of
    the second relation (which carries a doubled seed derivative); higher
    orders follow from the recursion that inverts the spinor parameter by a
    left multiplication with alpha * param1.
    """
    if N is None:
        N = sys.order
    ctx = sys.ctx
    seed = sys.seed_field.expr
    alpha_p1 = al.gen("alpha", ctx) * al.gen(sys.param1, ctx)
    out = [seed]
    if N >= 1:
        out.append((alpha_p1 * sys.d2_cov(seed)).scale(4))
    for n in range(1, N):
        out.append((alpha_p1 * sys.d2_cov(out[-1])).scale(2))
    return out


def closed_form_coefficient(sys: BTSystem, n: int) -> GradedExpr:
    """Engine closed form: sign * 2^(n+1) * p1^(2n) p2^n * D2^n(seed).

    The sign is (-1)^(n + floor(n/2)); the printed source formula carries
    (-1)^(n+1), which disagrees with its own order-1 value (see the
    per-order report emitted by ``verify_closed_form``).
    """
    ctx = sys.ctx
    if n == 0:
        return sys.seed_field.expr
    cliff = GradedExpr.rational(1, ctx)
    p1 = al.gen(sys.param1, ctx)
    p2 = al.gen(sys.param2, ctx)
    for _ in range(2 * n):
        cliff = cliff * p1
    for _ in range(n):
        cliff = cliff * p2
    deriv = sys.seed_field.expr
    for _ in range(n):
        deriv = sys.d2_cov(deriv)
    sign = -1 if (n + n // 2) % 2 else 1
    return (cliff * deriv).scale(sign * 2 ** (n + 1))


def verify_closed_form(sys: BTSystem, N: Optional[int] = None) -> Report:
    if N is None:
        N = sys.order
    rep = Report(f"closed-form[{sys.orientation}]")
    with timer(rep):
        series = expand_series(sys, N)
        for n in range(1, N + 1):
            res = series[n] - closed_form_coefficient(sys, n)
            ok = res.is_zero()
            printed_sign = -1 if (n + 1) % 2 else 1
            engine_sign = -1 if (n + n // 2) % 2 else 1
            rep.add(f"order {n}", "pass" if ok else "fail",
                    () if ok else (al.to_text(res),),
                    printed_sign_agrees=(printed_sign == engine_sign))
        # nilpotency audit: reported, not asserted
        for n in range(1, N + 1):
            sq = series[n] * series[n]
            rep.add(f"nilpotency order {n}", "info",
                    (al.to_text(sq),) if not sq.is_zero() else (),
                    square_is_zero=sq.is_zero())
    return rep


def verify_recursion(sys: BTSystem, N: Optional[int] = None) -> Report:
    """2 D2(coef_n) = param2 * coef_{n+1} for n >= 1; doubled anchor at n=0."""
    if N is None:
        N = sys.order
    rep = Report(f"series-recursion[{sys.orientation}]")
    with timer(rep):
        series = expand_series(sys, N)
        p2 = al.gen(sys.param2, sys.ctx)
        anchor = sys.d2_cov(series[0]).scale(4) - p2 * series[1]
        rep.add("order 0 anchor (doubled seed derivative)",
                "pass" if anchor.is_zero() else "fail",
                () if anchor.is_zero() else (al.to_text(anchor),))
        for n in range(1, N):
            res = sys.d2_cov(series[n]).scale(2) - p2 * series[n + 1]
            rep.add(f"order {n}", "pass" if res.is_zero() else "fail",
                    () if res.is_zero() else (al.to_text(res),))
    return rep


def series_sum(sys: BTSystem, N: Optional[int] = None) -> GradedExpr:
    if N is None:
        N = sys.order
    series = expand_series(sys, N)
    ctx = sys.ctx
    out = GradedExpr.zero(ctx)
    for n, coef in enumerate(series):
        out = out + al.apow(n, ctx) * coef
    return out


def verify_redundancy(sys: BTSystem, N: Optional[int] = None) -> Report:
    """Order-by-order residual of the first relation on the series solution.

    The series is built from the second relation alone, so the first one is
    a claim, not a construction; each order's on-shell residual is reported
    as engine truth.
    """
    if N is None:
        N = sys.order
    rep = Report(f"redundancy[{sys.orientation}]")
    with timer(rep):
        phis = series_sum(sys, N)
        seed = sys.seed_field
        ctx = sys.ctx
        lhs = ss.apply(sys.D1, phis) - ss.apply(sys.D1, seed.expr)
        rhs = (al.gen("a", ctx) * al.gen(sys.param1, ctx)
               * al.trig_of("s", phis + seed.expr, QUARTER)).scale(2)
        residual = md.reduce_on_shell(lhs - rhs, seed)
        for n in range(0, N + 1):
            part = al.series_coefficient(residual, n)
            rep.add(f"order {n}", "info",
                    (al.to_text(part),) if not part.is_zero() else (),
                    is_zero=part.is_zero())
    return rep


# ---------------------------------------------------------------------------
# currents and conservation laws

def currents(sys: BTSystem) -> tuple[GradedExpr, GradedExpr]:
    """The spinor current pair (j_first, j_second).

    For the minus-oriented system these are (j+, j-): j+ = a p1 cos of the
    quarter sum, j- = a^-1 p2 cos of the quarter difference.
    """
    ctx = sys.ctx
    j1 = al.gen("a", ctx) * al.gen(sys.param1, ctx) * al.trig_of("c", sys.sum_arg, QUARTER)
    j2 = al.apow(-1, ctx) * al.gen(sys.param2, ctx) * al.trig_of("c", sys.diff_arg, QUARTER)
    return j1, j2


def verify_current_conservation(sys: BTSystem) -> Report:
    """D2(j_first) + D1(j_second) = 0 under the rewrite system.

    Both halves are evaluated through their chain-rule factor with the
    matching relation substituted; the halves are reported separately to
    exhibit the cancellation, which rests on the anticommutation of the two
    spinor parameters.
    """
    rep = Report(f"currents[{sys.orientation}]")
    with timer(rep):
        ctx = sys.ctx
        seed = sys.seed_field
        j1, j2 = currents(sys)
        deg1, deg2 = j1.degree(), j2.degree()
        w1, w2 = j1.weight(), j2.weight()
        exp_first = DEG_01 if sys.orientation == "minus" else DEG_10
        exp_second = DEG_10 if sys.orientation == "minus" else DEG_01
        rep.add("current degrees", "pass"
                if (deg1, deg2) == (exp_first, exp_second) else "fail",
                degrees=f"{deg1}, {deg2}")
        wexp = (1, -1) if sys.orientation == "minus" else (-1, 1)
        rep.add("current weights", "pass" if (w1, w2) == wexp else "fail",
                weights=f"{w1}/2, {w2}/2")

        # chain oracles
        for label, D, arg in (("first", sys.D2, sys.sum_arg),
                              ("second", sys.D1, sys.diff_arg)):
            res = trig_chain_residual(D, "c", arg, QUARTER)
            rep.add(f"chain-rule oracle {label}", "pass" if res.is_zero() else "fail",
                    () if res.is_zero() else (al.to_text(res),))

        # D2 j1 = -(a/4) p1 sin(sum/4) (D2 target + D2 seed) -> rhs2 + D2 seed
        half_first = (al.gen("a", ctx) * al.gen(sys.param1, ctx)
                      * al.trig_of("s", sys.sum_arg, QUARTER)
                      * (sys.rhs2 + ss.apply(sys.D2, seed.expr))).scale(-QUARTER)
        # D1 j2 = -(a^-1/4) p2 sin(diff/4) (D1 target - D1 seed) -> rhs1 - D1 seed
        half_second = (al.apow(-1, ctx) * al.gen(sys.param2, ctx)
                       * al.trig_of("s", sys.diff_arg, QUARTER)
                       * (sys.rhs1 - ss.apply(sys.D1, seed.expr))).scale(-QUARTER)
        residual = half_first + half_second
        ok = residual.is_zero()
        rep.add("divergence vanishes", "pass" if ok else "fail",
                () if ok else (al.to_text(residual),),
                half_first=al.to_text(half_first),
                half_second=al.to_text(half_second),
                halves_cancel=ok and not half_first.is_zero())
    return rep


def conservation_audit(sys: BTSystem, K: int = 4) -> Report:
    """Order-by-order audit of the conservation-law family (informational).

    Expands the current identity on the series solution through order K,
    recomputes every derivative through an independent chain-rule path, and
    evaluates the claimed closed-form laws for k <= K on shell.  Statuses
    are engine truth; this report is meant to be diffed against a golden
    file, not asserted.
    """
    N = max(sys.order, K + 2)
    rep = Report(f"conservation-audit[{sys.orientation}]")
    with timer(rep):
        ctx = sys.ctx
        seed = sys.seed_field
        phis = series_sum(sys, N)
        u_arg = phis + seed.expr
        v_arg = phis - seed.expr
        p1 = al.gen(sys.param1, ctx)
        p2 = al.gen(sys.param2, ctx)

        # exact current identity in the D-swapped reading (equivalent to the
        # divergence computation of the currents report)
        cons = verify_current_conservation(sys)
        rep.add("current identity (swapped-derivative reading)",
                "pass" if cons.passed() else "fail",
                by="divergence computation")

        # printed placement: p1 D1(cos(sum/4)) + a^-2 p2 D2(cos(diff/4)),
        # audited order-by-order on the series solution, on shell.
        w1 = "-" if sys.orientation == "minus" else "+"
        w2 = "+" if sys.orientation == "minus" else "-"
        cos_u = al.trig_of("c", u_arg, QUARTER)
        cos_v = al.trig_of("c", v_arg, QUARTER)
        lhs = p1 * ss.apply(sys.D1, cos_u)
        rhs = (al.apow(-2, ctx) * p2 * ss.apply(sys.D2, cos_v)).scale(-1)
        # independent path: sector-wise recomputation of both derivatives
        lhs_comp = p1 * component_apply_cov(w1, cos_u)
        rhs_comp = (al.apow(-2, ctx) * p2 * component_apply_cov(w2, cos_v)).scale(-1)
        rep.add("two-path agreement (left side)", "pass"
                if (lhs - lhs_comp).is_zero() else "fail")
        rep.add("two-path agreement (right side)", "pass"
                if (rhs - rhs_comp).is_zero() else "fail")

        diff = md.reduce_on_shell(lhs - rhs, seed)
        for n in range(0, K + 1):
            part = al.series_coefficient(diff, n)
            rep.add(f"printed placement order {n}", "info",
                    (al.to_text(part),) if not part.is_zero() else (),
                    is_zero=part.is_zero())

        # claimed closed-form laws: D1(cos(seed/2)) and
        # D1(sin(seed/2) * D2^k seed), k = 1..K, on shell.
        law0 = md.reduce_on_shell(
            ss.apply(sys.D1, al.trig_of("c", seed.expr, HALF)), seed)
        rep.add("claimed law k=0", "info",
                (al.to_text(law0),) if not law0.is_zero() else (),
                is_zero=law0.is_zero())
        dk = seed.expr
        for k in range(1, K + 1):
            dk = sys.d2_cov(dk)
            law = md.reduce_on_shell(
                ss.apply(sys.D1, al.trig_of("s", seed.expr, HALF) * dk), seed)
            rep.add(f"claimed law k={k}", "info",
                    (al.to_text(law),) if not law.is_zero() else (),
                    is_zero=law.is_zero())

        # nilpotency audit of the series coefficients
        series = expand_series(sys, min(N, 6))
        for n in range(1, len(series)):
            sq = series[n] * series[n]
            rep.add(f"series coefficient {n} square", "info",
                    square_is_zero=sq.is_zero())
    return rep


# ---------------------------------------------------------------------------
# body-system export

@dataclass(frozen=True)
class BodyBTSpec:
    """Symbolic body shadow of a Backlund system, with engine provenance.

    ``p`` and ``q`` describe the sine terms of the two first-order body
    relations as (rational, a-power, v-power, argument combo) tuples, where
    the combo lists (symbol, rational coefficient) pairs of the sine
    argument.  ``q_raw`` is the literal sector export; the shipped ``q``
    carries the sign completion that makes the pair cross-derivative
    compatible with the seed equation (the raw export fails that check, see
    ``mismatch_raw``).
    """

    orientation: str
    seed_body: str
    target_body: str
    p: tuple
    q: tuple
    q_raw: tuple
    relation_first: str
    relation_second: str
    relation_second_raw: str
    induced_fermion_first: str
    induced_fermion_second: str
    mismatch_raw: str
    mismatch_completed: str
    completion_applied: bool

    def to_pairs(self) -> list[tuple[str, str]]:
        """(target jet, right-hand side) pairs in the algebra text form."""
        first = "-" if self.orientation == "minus" else "+"
        second = "+" if self.orientation == "minus" else "-"
        return [(f"{self.target_body}_{{{first}}}", self.relation_first),
                (f"{self.target_body}_{{{second}}}", self.relation_second)]

    def to_text(self) -> str:
        lines = [f"{jet} = {rhs}" for jet, rhs in self.to_pairs()]
        lines.append(f"raw second relation: {self.relation_second_raw}")
        lines.append(f"cross-derivative mismatch raw/completed: "
                     f"{self.mismatch_raw} / {self.mismatch_completed}")
        return "\n".join(lines) + "\n"


def _extract_trig_coef(expr: GradedExpr):
    """Sine-term data of a body relation: (coef, a-power, v-power, combo)."""
    for key, coef in expr.terms.items():
        z, tm, tp, cf, v, a, gj, bj, trig = key
        if trig is None:
            continue
        if cf != al.CF_ONE or gj or bj or z or tm or tp:
            raise UnresolvedGenerator(
                f"unexpected structure in body relation term {al.term_str(key, coef)}")
        kind, combo, pioff = trig
        if kind != "s" or pioff != 0:
            raise UnresolvedGenerator("body relation trig term is not a plain sine")
        return coef, a, v, combo
    raise UnresolvedGenerator("no trig term found in body relation")


def export_body_system(sys: BTSystem, on_shell_seed: bool = True) -> BodyBTSpec:
    """Body shadow of the system: closed first-order relations for the target.

    Expands both relations by theta sector with the seed fermions set to
    zero, solves the lowest sectors for the induced target fermions,
    substitutes them into the linear sectors and collapses all spinor
    parameters through their quadratic relations.  The raw pair fails the
    on-shell cross-derivative check by an engine-computed mismatch; the
    exported second relation carries the unique trig-sign completion that
    makes the mismatch vanish, with both variants recorded.
    """
    ctx = sys.ctx
    seed = sys.seed_field
    target = sys.target_field
    zero = GradedExpr.zero(ctx)
    kill = {seed.component("psi+"): zero, seed.component("psi-"): zero,
            seed.component("F"): md.auxiliary_solution(seed) if on_shell_seed else zero}

    rules1 = _sector_rules(sys, "eq1")
    rules2 = _sector_rules(sys, "eq2")
    tpsi_first = target.component("psi+") if sys.orientation == "minus" else target.component("psi-")
    tpsi_second = target.component("psi-") if sys.orientation == "minus" else target.component("psi+")
    jet1 = (1, 0) if sys.orientation == "minus" else (0, 1)
    jet2 = (0, 1) if sys.orientation == "minus" else (1, 0)

    fer1 = al.substitute(rules1[(tpsi_first, 0, 0)], kill)
    fer2 = al.substitute(rules2[(tpsi_second, 0, 0)], kill)
    rel1 = al.substitute(rules1[(target.body, *jet1)], kill)
    rel1 = al.substitute(rel1, {tpsi_first: fer1}, check=False)
    rel2_raw = al.substitute(rules2[(target.body, *jet2)], kill)
    rel2_raw = al.substitute(rel2_raw, {tpsi_second: fer2}, check=False)

    for name, expr in (("first", rel1), ("second", rel2_raw)):
        for key in expr.terms:
            if key[6] or key[3] != al.CF_ONE:
                raise UnresolvedGenerator(
                    f"odd generator survived in the {name} body relation")

    def mismatch(relA: GradedExpr, relB: GradedExpr) -> GradedExpr:
        # d2(relA) - d1(relB) with target first derivatives resubstituted by
        # the relations and the seed taken on shell (classical sector).
        def rule(name, m, n):
            if name != target.body:
                return None
            if (m, n) == jet1:
                return relA
            if (m, n) == jet2:
                return relB
            return None

        res = sys.d2_jet(relA) - sys.d1_jet(relB)
        for _ in range(8):
            new = al.substitute_jets(res, rule)
            if new.terms == res.terms:
                break
            res = new
        # classical seed equation: mixed second derivative of the body
        seed_rule = lambda name, m, n: (
            al.trig("s", {seed.body: Q(1)}, ctx=ctx).scale(QUARTER)
            if name == seed.body and m >= 1 and n >= 1 and (m, n) == (1, 1) else None)
        res = al.substitute_jets(res, seed_rule)
        return res

    mis_raw = mismatch(rel1, rel2_raw)
    # completion: flip the trig-term sign of the second relation
    rel2 = GradedExpr(ctx, {k: (-c if k[8] is not None else c)
                            for k, c in rel2_raw.terms.items()})
    mis_completed = mismatch(rel1, rel2)
    if not mis_completed.is_zero():
        raise InconsistentSystem(
            "sign completion did not restore cross-derivative compatibility: "
            + al.to_text(mis_completed))

    return BodyBTSpec(
        orientation=sys.orientation,
        seed_body=seed.body,
        target_body=target.body,
        p=_extract_trig_coef(rel1),
        q=_extract_trig_coef(rel2),
        q_raw=_extract_trig_coef(rel2_raw),
        relation_first=al.to_text(rel1),
        relation_second=al.to_text(rel2),
        relation_second_raw=al.to_text(rel2_raw),
        induced_fermion_first=al.to_text(fer1),
        induced_fermion_second=al.to_text(fer2),
        mismatch_raw=al.to_text(mis_raw),
        mismatch_completed=al.to_text(mis_completed),
        completion_applied=True,
    )
