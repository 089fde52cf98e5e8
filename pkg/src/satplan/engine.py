"""Trailed constraint store with bounds and finite-domain variables.

Two variable kinds: interval variables carry an integer range (lo, hi)
and cover booleans and counters; mask variables carry a small set of
candidate values as a bitmask and cover the per-test configuration
choices.  Every domain change is trailed so search can restore any
earlier state exactly, and wakes the propagators watching the variable.
Propagation runs the woken propagators in FIFO order to a fixpoint.
"""

from __future__ import annotations

from collections import deque


class Propagator:
    """Base class; subclasses override run() and return False on wipeout."""

    __slots__ = ("pid", "weight")

    def __init__(self) -> None:
        self.pid = -1
        self.weight = 1

    def run(self, m: "Model") -> bool:
        raise NotImplementedError


class Model:
    def __init__(self) -> None:
        self.ilo: list[int] = []
        self.ihi: list[int] = []
        self.inames: list[str] = []
        self.mdom: list[int] = []
        self.mnames: list[str] = []
        # watchers[kind][var] -> propagator ids woken by a change
        self.iwatch: list[list[int]] = []
        self.mwatch: list[list[int]] = []
        self.props: list[Propagator] = []
        self._queue: deque[int] = deque()
        self._queued: list[bool] = []
        self._trail_i: list[tuple[int, int, int]] = []
        self._trail_m: list[tuple[int, int]] = []
        self.propagations = 0
        self.last_fail: Propagator | None = None

    # -- variables ---------------------------------------------------

    def new_ivar(self, name: str, lo: int, hi: int) -> int:
        if lo > hi:
            raise ValueError(f"empty initial domain for {name}")
        self.ilo.append(lo)
        self.ihi.append(hi)
        self.inames.append(name)
        self.iwatch.append([])
        return len(self.ilo) - 1

    def new_mvar(self, name: str, size: int) -> int:
        if size <= 0:
            raise ValueError(f"empty initial domain for {name}")
        self.mdom.append((1 << size) - 1)
        self.mnames.append(name)
        self.mwatch.append([])
        return len(self.mdom) - 1

    # -- interval access ---------------------------------------------

    def ifixed(self, v: int) -> bool:
        return self.ilo[v] == self.ihi[v]

    def ival(self, v: int) -> int:
        return self.ilo[v]

    def set_lo(self, v: int, x: int) -> bool:
        if x <= self.ilo[v]:
            return True
        self._trail_i.append((v, self.ilo[v], self.ihi[v]))
        self.ilo[v] = x
        if x > self.ihi[v]:
            return False
        self._wake_i(v)
        return True

    def set_hi(self, v: int, x: int) -> bool:
        if x >= self.ihi[v]:
            return True
        self._trail_i.append((v, self.ilo[v], self.ihi[v]))
        self.ihi[v] = x
        if x < self.ilo[v]:
            return False
        self._wake_i(v)
        return True

    def ifix(self, v: int, x: int) -> bool:
        return self.set_lo(v, x) and self.set_hi(v, x)

    # -- mask access -------------------------------------------------

    def msize(self, v: int) -> int:
        return self.mdom[v].bit_count()

    def mmin(self, v: int) -> int:
        d = self.mdom[v]
        return (d & -d).bit_length() - 1

    def mmax(self, v: int) -> int:
        return self.mdom[v].bit_length() - 1

    def mhas(self, v: int, val: int) -> bool:
        return val >= 0 and (self.mdom[v] >> val) & 1 == 1

    def mfixed(self, v: int) -> bool:
        d = self.mdom[v]
        return d != 0 and d & (d - 1) == 0

    def mvals(self, v: int) -> list[int]:
        d = self.mdom[v]
        out = []
        while d:
            low = d & -d
            out.append(low.bit_length() - 1)
            d ^= low
        return out

    def _mset(self, v: int, new: int) -> bool:
        if new == self.mdom[v]:
            return True
        self._trail_m.append((v, self.mdom[v]))
        self.mdom[v] = new
        if new == 0:
            return False
        self._wake_m(v)
        return True

    def massign(self, v: int, val: int) -> bool:
        return self._mset(v, self.mdom[v] & (1 << val))

    def mremove(self, v: int, val: int) -> bool:
        return self._mset(v, self.mdom[v] & ~(1 << val))

    def mcap_hi(self, v: int, val: int) -> bool:
        """Drop every candidate above val."""
        return self._mset(v, self.mdom[v] & ((1 << (val + 1)) - 1 if val >= 0 else 0))

    # -- propagator wiring -------------------------------------------

    def add_propagator(
        self,
        p: Propagator,
        ivars: tuple[int, ...] = (),
        mvars: tuple[int, ...] = (),
    ) -> None:
        p.pid = len(self.props)
        self.props.append(p)
        self._queued.append(False)
        for v in ivars:
            self.iwatch[v].append(p.pid)
        for v in mvars:
            self.mwatch[v].append(p.pid)
        self.enqueue(p.pid)

    def enqueue(self, pid: int) -> None:
        if not self._queued[pid]:
            self._queued[pid] = True
            self._queue.append(pid)

    def _wake_i(self, v: int) -> None:
        for pid in self.iwatch[v]:
            self.enqueue(pid)

    def _wake_m(self, v: int) -> None:
        for pid in self.mwatch[v]:
            self.enqueue(pid)

    def propagate(self) -> bool:
        while self._queue:
            pid = self._queue.popleft()
            self._queued[pid] = False
            p = self.props[pid]
            self.propagations += 1
            if not p.run(self):
                p.weight += 1
                self.last_fail = p
                self._queue.clear()
                for i in range(len(self._queued)):
                    self._queued[i] = False
                return False
        return True

    # -- trail -------------------------------------------------------

    def mark(self) -> tuple[int, int]:
        return (len(self._trail_i), len(self._trail_m))

    def undo_to(self, mk: tuple[int, int]) -> None:
        ti, tm = mk
        while len(self._trail_i) > ti:
            v, lo, hi = self._trail_i.pop()
            self.ilo[v] = lo
            self.ihi[v] = hi
        while len(self._trail_m) > tm:
            v, dom = self._trail_m.pop()
            self.mdom[v] = dom
        self._queue.clear()
        for i in range(len(self._queued)):
            self._queued[i] = False
