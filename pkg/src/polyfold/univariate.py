"""Dense univariate polynomials over Q and exact real-root isolation.

Polynomials are lists of ``mpq`` coefficients, constant term first, with no
trailing zeros (the zero polynomial is ``[]``).  Root isolation uses Sturm
sequences of the square-free part and exact rational bisection.
"""

from __future__ import annotations

from typing import Sequence

from gmpy2 import mpq

from .poly import Q, horner

INF = float("inf")


def strip(p: Sequence) -> list[mpq]:
    p = [Q(c) for c in p]
    while p and not p[-1]:
        p.pop()
    return p


def degree(p: Sequence) -> int:
    return len(p) - 1


def derivative(p: Sequence[mpq]) -> list[mpq]:
    return strip([k * c for k, c in enumerate(p)][1:])


def divmod_poly(a: Sequence[mpq], b: Sequence[mpq]) -> tuple[list[mpq], list[mpq]]:
    a, b = strip(a), strip(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    quot = [mpq(0)] * max(len(a) - len(b) + 1, 0)
    rem = list(a)
    lead = b[-1]
    while len(rem) >= len(b):
        k = len(rem) - len(b)
        f = rem[-1] / lead
        quot[k] = f
        for i, c in enumerate(b):
            rem[k + i] -= f * c
        rem = strip(rem)
    return strip(quot), rem


def monic(p: Sequence[mpq]) -> list[mpq]:
    p = strip(p)
    return [c / p[-1] for c in p] if p else []


def gcd(a: Sequence[mpq], b: Sequence[mpq]) -> list[mpq]:
    a, b = strip(a), strip(b)
    while b:
        a, b = b, divmod_poly(a, b)[1]
    return monic(a)


def squarefree(p: Sequence[mpq]) -> list[mpq]:
    p = strip(p)
    if len(p) <= 2:
        return monic(p)
    g = gcd(p, derivative(p))
    return monic(divmod_poly(p, g)[0])


def sturm_sequence(p: Sequence[mpq]) -> list[list[mpq]]:
    seq = [strip(p), derivative(p)]
    while seq[-1]:
        r = divmod_poly(seq[-2], seq[-1])[1]
        seq.append([-c for c in r])
    return seq[:-1]


def sign(v) -> int:
    return (v > 0) - (v < 0)


def sign_at(p: Sequence[mpq], t) -> int:
    """Sign of ``p`` at a rational ``t`` or at ``+inf`` / ``-inf``."""
    if not p:
        return 0
    if t == INF:
        return sign(p[-1])
    if t == -INF:
        return sign(p[-1]) * (-1 if (len(p) - 1) % 2 else 1)
    return sign(horner(p, t))


def _variations(seq: list[list[mpq]], t) -> int:
    signs = [s for s in (sign_at(q, t) for q in seq) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_roots(p: Sequence[mpq], lo=-INF, hi=INF) -> int:
    """Number of distinct real roots in the half-open interval ``]lo, hi]``."""
    p = squarefree(p)
    if len(p) <= 1:
        return 0
    seq = sturm_sequence(p)
    return _variations(seq, lo) - _variations(seq, hi)


def count_roots_open(p: Sequence[mpq], lo=-INF, hi=INF) -> int:
    """Number of distinct real roots in the open interval ``]lo, hi[``."""
    n = count_roots(p, lo, hi)
    if hi != INF and p and horner(strip(p), Q(hi)) == 0:
        n -= 1
    return n


def root_bound(p: Sequence[mpq]) -> mpq:
    """Cauchy bound: every real root lies in ``[-B, B]``."""
    p = strip(p)
    lead = abs(p[-1])
    return 1 + max((abs(c) / lead for c in p[:-1]), default=mpq(0))


def isolate_real_roots(p: Sequence[mpq], lo=None, hi=None) -> list[tuple[mpq, mpq]]:
    """Disjoint intervals, each holding exactly one real root of ``p``.

    Intervals are half-open ``]a, b]``.  Restricted to ``]lo, hi]`` when
    bounds are given.
    """
    sq = squarefree(p)
    if len(sq) <= 1:
        return []
    seq = sturm_sequence(sq)
    bound = root_bound(sq)
    a = Q(lo) if lo is not None else -bound - 1
    b = Q(hi) if hi is not None else bound + 1
    out: list[tuple[mpq, mpq]] = []
    stack = [(a, b, _variations(seq, a) - _variations(seq, b))]
    while stack:
        a, b, n = stack.pop()
        if n == 0:
            continue
        if n == 1:
            out.append((a, b))
            continue
        m = (a + b) / 2
        step = (b - a) / 4
        while horner(sq, m) == 0:
            # splitting exactly on a root would leave it on a shared endpoint
            m -= step
            step /= 2
        left = _variations(seq, a) - _variations(seq, m)
        stack.append((m, b, n - left))
        stack.append((a, m, left))
    return sorted(out)


def bisect_sign_change(p: Sequence[mpq], lo: mpq, hi: mpq, width: mpq) -> tuple[mpq, mpq]:
    """Shrink ``[lo, hi]`` (with ``p(lo)``, ``p(hi)`` of opposite signs) to ``width``.

    Returns the final bracket; if a midpoint is an exact root the bracket
    collapses to that point.
    """
    lo, hi = Q(lo), Q(hi)
    slo = sign(horner(p, lo))
    if slo == 0:
        return lo, lo
    if sign(horner(p, hi)) == slo:
        raise ValueError("no sign change on the given bracket")
    while hi - lo > width:
        mid = (lo + hi) / 2
        s = sign(horner(p, mid))
        if s == 0:
            return mid, mid
        if s == slo:
            lo = mid
        else:
            hi = mid
    return lo, hi
