"""Bracketed golden-section searches for scalar fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchResult:
    x: float
    fx: float
    iterations: int
    at_bound: bool


def golden_section(fn, lo: float, hi: float, tol: float = 1e-3,
                   max_iter: int = 200) -> SearchResult:
    """Minimize a unimodal ``fn`` on ``[lo, hi]`` to bracket width ``tol``.

    Both endpoints are evaluated too, so a minimum sitting on a bound is
    returned as that bound with ``at_bound`` set.
    """
    if not hi > lo:
        raise ValueError("empty search interval")
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    it = 0
    while b - a > tol and it < max_iter:
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = fn(d)
    x, fx = (c, fc) if fc <= fd else (d, fd)
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo < fx and f_lo <= f_hi:
        return SearchResult(lo, f_lo, it, True)
    if f_hi < fx:
        return SearchResult(hi, f_hi, it, True)
    return SearchResult(x, fx, it, False)


def golden_section_int(fn, lo: int, hi: int) -> SearchResult:
    """Integer variant: narrows ``[lo, hi]`` by golden cuts, then scans.

    Ties go to the larger argument.
    """
    if hi < lo:
        raise ValueError("empty search interval")
    a, b = lo, hi
    it = 0
    while b - a > 3:
        it += 1
        span = b - a
        c = b - int(round(INV_PHI * span))
        d = a + int(round(INV_PHI * span))
        if c >= d:
            c, d = d - 1, d
        if fn(c) < fn(d):
            b = d
        else:
            a = c
    best_x, best_f = None, math.inf
    for k in range(a, b + 1):
        fk = fn(k)
        if fk <= best_f:
            best_x, best_f = k, fk
    it += 1
    return SearchResult(best_x, best_f, it, best_x in (lo, hi))
