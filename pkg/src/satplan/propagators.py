"""Propagators tying allocations, activity columns, and both objectives.

Conventions: configuration slots are 0-based columns 0..s-1; an interval
variable C holds the number of used configurations, so C = 1 + max
allocation.  Column-usage booleans g_i realise the order encoding
g_i <=> C >= i+1; when g_i is off the column is empty, when on every
scope is filled to its exact capacity.  Per-scope switch counters are
bounded through the sequence-support engine over the activity columns
with an empty prefix position, so the counter's value is the number of
activations; subtracting the tested units of the scope gives the
re-activation count the objective charges.
"""

from __future__ import annotations

from .engine import Model, Propagator
from .switch_engine import CardProfile, SetVarBounds, filter_switch


class TestChannel(Propagator):
    """Link a test's slot choice to the activity of its in-scope units."""

    __slots__ = ("avar", "ovars")

    def __init__(self, avar: int, ovars: list[list[int]]) -> None:
        # ovars: per in-scope required unit, the o-row of length s
        super().__init__()
        self.avar = avar
        self.ovars = ovars

    def run(self, m: Model) -> bool:
        for i in m.mvals(self.avar):
            if any(m.ihi[row[i]] == 0 for row in self.ovars):
                if not m.mremove(self.avar, i):
                    return False
        if m.mfixed(self.avar):
            i = m.mmin(self.avar)
            for row in self.ovars:
                if not m.set_lo(row[i], 1):
                    return False
        return True


class ColumnSum(Propagator):
    """Sum of a scope's activity in one column: exact capacity, or empty.

    With a usage boolean the column is either off (all zero) or on
    (exactly the capacity); without one the capacity is unconditional.
    """

    __slots__ = ("ovars", "cap", "gvar")

    def __init__(self, ovars: list[int], cap: int, gvar: int | None) -> None:
        super().__init__()
        self.ovars = ovars
        self.cap = cap
        self.gvar = gvar

    def run(self, m: Model) -> bool:
        ones = 0
        poss = 0
        for v in self.ovars:
            ones += m.ilo[v]
            poss += m.ihi[v]
        g = self.gvar
        if g is not None:
            if ones >= 1 and not m.set_lo(g, 1):
                return False
            if poss < self.cap and not m.set_hi(g, 0):
                return False
            if m.ihi[g] == 0:
                for v in self.ovars:
                    if not m.set_hi(v, 0):
                        return False
                return True
            if m.ilo[g] == 0:
                return True  # undecided column: nothing to force yet
        if ones > self.cap or poss < self.cap:
            return False
        if ones == self.cap:
            for v in self.ovars:
                if m.ilo[v] == 0 and not m.set_hi(v, 0):
                    return False
        elif poss == self.cap:
            for v in self.ovars:
                if m.ihi[v] == 1 and not m.set_lo(v, 1):
                    return False
        return True


class AllocSpan(Propagator):
    """C = 1 + max over tests of the chosen slot."""

    __slots__ = ("avars", "cvar")

    def __init__(self, avars: list[int], cvar: int) -> None:
        super().__init__()
        self.avars = avars
        self.cvar = cvar

    def run(self, m: Model) -> bool:
        lo = 0
        hi = 0
        for a in self.avars:
            lo = max(lo, m.mmin(a) + 1)
            hi = max(hi, m.mmax(a) + 1)
        if not m.set_lo(self.cvar, lo):
            return False
        if not m.set_hi(self.cvar, hi):
            return False
        top = m.ihi[self.cvar] - 1
        for a in self.avars:
            if not m.mcap_hi(a, top):
                return False
        return True


class UseChannel(Propagator):
    """g_i <=> C >= i+1."""

    __slots__ = ("gvar", "cvar", "pos")

    def __init__(self, gvar: int, cvar: int, pos: int) -> None:
        super().__init__()
        self.gvar = gvar
        self.cvar = cvar
        self.pos = pos

    def run(self, m: Model) -> bool:
        i = self.pos
        if m.ilo[self.cvar] >= i + 1 and not m.set_lo(self.gvar, 1):
            return False
        if m.ihi[self.cvar] <= i and not m.set_hi(self.gvar, 0):
            return False
        if m.ilo[self.gvar] == 1 and not m.set_lo(self.cvar, i + 1):
            return False
        if m.ihi[self.gvar] == 0 and not m.set_hi(self.cvar, i):
            return False
        return True


class CountActive(Propagator):
    """N_u = max(static lower bound, number of columns where u is active)."""

    __slots__ = ("ovars", "nvar", "floor")

    def __init__(self, ovars: list[int], nvar: int, floor: int) -> None:
        super().__init__()
        self.ovars = ovars
        self.nvar = nvar
        self.floor = floor

    def run(self, m: Model) -> bool:
        ones = 0
        poss = 0
        for v in self.ovars:
            ones += m.ilo[v]
            poss += m.ihi[v]
        if not m.set_lo(self.nvar, max(self.floor, ones)):
            return False
        if not m.set_hi(self.nvar, max(self.floor, poss)):
            return False
        # activity may not exceed the counter's ceiling
        cap = m.ihi[self.nvar]
        if ones > cap:
            return False
        if ones == cap:
            for v in self.ovars:
                if m.ilo[v] == 0 and not m.set_hi(v, 0):
                    return False
        return True


class ScopeLoad(Propagator):
    """C >= ceil(sum of per-unit activity counters / capacity) for a scope."""

    __slots__ = ("nvars", "cvar", "cap")

    def __init__(self, nvars: list[int], cvar: int, cap: int) -> None:
        super().__init__()
        self.nvars = nvars
        self.cvar = cvar
        self.cap = cap

    def run(self, m: Model) -> bool:
        total_lo = sum(m.ilo[v] for v in self.nvars)
        if not m.set_lo(self.cvar, -(-total_lo // self.cap)):
            return False
        room = m.ihi[self.cvar] * self.cap
        for v in self.nvars:
            if not m.set_hi(v, room - (total_lo - m.ilo[v])):
                return False
        return True


class ScopeSwitch(Propagator):
    """Bound a scope's activation counter through sequence supports.

    Works on the activity columns of the scope's units with an empty
    prefix position, so every activation is a charged addition.  The
    counter variable holds activations minus the scope's tested units;
    when every watched column and usage boolean is fixed the counter is
    fixed to its exact value.
    """

    __slots__ = ("units", "orows", "gvars", "zvar", "discount", "must_visit", "cap_lo", "cap_hi", "s")

    def __init__(
        self,
        units: list[int],
        orows: dict[int, list[int]],
        gvars: list[int] | None,
        zvar: int,
        discount: int,
        must_visit: frozenset[int],
        cap_lo: int,
        cap_hi: int,
        s: int,
    ) -> None:
        super().__init__()
        self.units = units
        self.orows = orows
        self.gvars = gvars
        self.zvar = zvar
        self.discount = discount
        self.must_visit = must_visit
        self.cap_lo = cap_lo
        self.cap_hi = cap_hi
        self.s = s

    def run(self, m: Model) -> bool:
        lbs: list[frozenset[int]] = [frozenset()]
        ubs: list[frozenset[int]] = [frozenset()]
        los = [0]
        his = [0]
        ground = True
        for i in range(self.s):
            lb = []
            ub = []
            for u in self.units:
                v = self.orows[u][i]
                if m.ilo[v] == 1:
                    lb.append(u)
                if m.ihi[v] == 1:
                    ub.append(u)
            if len(lb) != len(ub):
                ground = False
            lbs.append(frozenset(lb))
            ubs.append(frozenset(ub))
            if self.gvars is None:
                los.append(self.cap_lo)
                his.append(self.cap_hi)
            else:
                g = self.gvars[i]
                if m.ilo[g] == 1:
                    los.append(self.cap_lo)
                    his.append(self.cap_hi)
                elif m.ihi[g] == 0:
                    los.append(0)
                    his.append(0)
                else:
                    ground = False
                    los.append(0)
                    his.append(self.cap_hi)
        bounds = SetVarBounds(tuple(lbs), tuple(ubs))
        card = CardProfile(tuple(los), tuple(his))
        act_lo = m.ilo[self.zvar] + self.discount
        act_hi = m.ihi[self.zvar] + self.discount
        new_lo, ok = filter_switch(bounds, card, act_lo, act_hi, self.must_visit)
        if not ok:
            return False
        if not m.set_lo(self.zvar, new_lo - self.discount):
            return False
        if ground:
            return m.set_hi(self.zvar, new_lo - self.discount)
        return True


class SumLink(Propagator):
    """total = sum of terms, bounds-consistent both ways."""

    __slots__ = ("terms", "total")

    def __init__(self, terms: list[int], total: int) -> None:
        super().__init__()
        self.terms = terms
        self.total = total

    def run(self, m: Model) -> bool:
        slo = sum(m.ilo[v] for v in self.terms)
        shi = sum(m.ihi[v] for v in self.terms)
        if not m.set_lo(self.total, slo):
            return False
        if not m.set_hi(self.total, shi):
            return False
        tlo = m.ilo[self.total]
        thi = m.ihi[self.total]
        for v in self.terms:
            if not m.set_hi(v, thi - (slo - m.ilo[v])):
                return False
            if not m.set_lo(v, tlo - (shi - m.ihi[v])):
                return False
        return True


class WeightedLink(Propagator):
    """W = coef * C + z.

    The coefficient is stored under its own name: the base class already
    uses `weight` for the failure counter the wdeg heuristic reads.
    """

    __slots__ = ("cvar", "zvar", "wvar", "coef")

    def __init__(self, cvar: int, zvar: int, wvar: int, coef: int) -> None:
        super().__init__()
        self.cvar = cvar
        self.zvar = zvar
        self.wvar = wvar
        self.coef = coef

    def run(self, m: Model) -> bool:
        w = self.coef
        if not m.set_lo(self.wvar, w * m.ilo[self.cvar] + m.ilo[self.zvar]):
            return False
        if not m.set_hi(self.wvar, w * m.ihi[self.cvar] + m.ihi[self.zvar]):
            return False
        if not m.set_hi(self.cvar, (m.ihi[self.wvar] - m.ilo[self.zvar]) // w):
            return False
        if not m.set_hi(self.zvar, m.ihi[self.wvar] - w * m.ilo[self.cvar]):
            return False
        return True


class Incumbent:
    """Shared best-so-far record; the bound propagator reads it live."""

    __slots__ = ("mode", "plan", "configurations", "switches", "weighted")

    def __init__(self, mode: str) -> None:
        self.mode = mode
        self.plan = None
        self.configurations: int | None = None
        self.switches: int | None = None
        self.weighted: int | None = None

    def key(self) -> tuple | None:
        if self.plan is None:
            return None
        if self.mode == "weighted":
            return (self.weighted,)
        if self.mode == "lex":
            return (self.configurations, self.switches)
        if self.mode == "configs":
            return (self.configurations,)
        return (self.switches,)


class ObjectiveCut(Propagator):
    """Require a strict improvement over the incumbent.

    The incumbent lives outside the trail, so the cut survives
    backtracking; search re-queues this propagator before every
    propagation round.
    """

    __slots__ = ("inc", "cvar", "zvar", "wvar")

    def __init__(self, inc: Incumbent, cvar: int, zvar: int | None, wvar: int | None) -> None:
        super().__init__()
        self.inc = inc
        self.cvar = cvar
        self.zvar = zvar
        self.wvar = wvar

    def run(self, m: Model) -> bool:
        inc = self.inc
        if inc.plan is None:
            return True
        if inc.mode == "weighted":
            return m.set_hi(self.wvar, inc.weighted - 1)
        if inc.mode == "configs":
            return m.set_hi(self.cvar, inc.configurations - 1)
        if inc.mode == "switches":
            return m.set_hi(self.zvar, inc.switches - 1)
        # lex: C may match only with fewer switches
        if not m.set_hi(self.cvar, inc.configurations):
            return False
        if m.ilo[self.cvar] >= inc.configurations:
            return m.set_hi(self.zvar, inc.switches - 1)
        return True


class LexColumns(Propagator):
    """Neighbouring activity columns in non-increasing lex order.

    Packing-only symmetry break: configurations are interchangeable
    there, so force the in-scope column vectors (units ascending) to be
    lexicographically non-increasing left to right.  Propagation walks
    the fixed equal prefix and aligns bounds at the first open spot.
    """

    __slots__ = ("xs", "ys")

    def __init__(self, xs: list[int], ys: list[int]) -> None:
        super().__init__()
        self.xs = xs
        self.ys = ys

    def run(self, m: Model) -> bool:
        for x, y in zip(self.xs, self.ys):
            if m.ifixed(x) and m.ifixed(y):
                if m.ival(x) == m.ival(y):
                    continue
                return m.ival(x) > m.ival(y)  # first fixed strict step decides
            if not m.set_lo(x, m.ilo[y]):
                return False
            if not m.set_hi(y, m.ihi[x]):
                return False
            return True
        return True
