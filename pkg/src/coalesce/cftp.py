"""Coupling from the past, exactly, plus coalescence-time diagnostics.

The sampler composes random functions drawn from a grand coupling. Running
the composition backward (new draw applied first) and returning the constant
value the first time the composite becomes constant produces a state with
exactly the chain's invariant distribution, with no burn-in bias. The
doubling schedule reuses draws: the function at depth t is always generated
from the same substream, so extending the horizon never resamples the past.

Backward and forward one-step compositions become constant at the same time
in distribution (the draws are exchangeable), which gives a sharp self-test:
the empirical laws of the two times must agree.
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from hashlib import blake2b

from .coupling import BlockCoupling, ExplicitCoupling, GrandCoupling, expand_support
from .errors import ClosureTooLarge, SupportTooLarge
from .semigroup import coalescence_number

DEFAULT_T_MAX = 2**20


@dataclass(frozen=True)
class RngStream:
    """A reproducible tree of random generators.

    fork(i) descends to an independent child stream; substream(t) yields a
    fresh random.Random whose seed is a keyed hash of the full path, so the
    generator for a given position never depends on how much of the tree has
    been visited.
    """

    seed: int
    path: tuple[int, ...] = ()

    def fork(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.path + (index,))

    def substream(self, index: int) -> random.Random:
        h = blake2b(digest_size=16)
        h.update(repr((self.seed, self.path, index)).encode())
        return random.Random(int.from_bytes(h.digest(), "big"))


@dataclass(frozen=True)
class DidNotCoalesce:
    """The composition never became constant within the horizon."""

    t_max: int

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class CoalescenceRecord:
    """First time a one-step composition chain became constant, and where.

    trace, when collected, holds the number of distinct trajectory classes
    after each step; it is non-increasing.
    """

    time: int | DidNotCoalesce
    state: int | None
    direction: str
    trace: tuple[int, ...] | None = None

    @property
    def coalesced(self) -> bool:
        return not isinstance(self.time, DidNotCoalesce)


def sample_function(mu: GrandCoupling, rng: random.Random):
    """One draw from the coupling, as an image tuple."""
    return mu.sample_image(rng)


def _is_constant(images: tuple[int, ...]) -> bool:
    first = images[0]
    return all(v == first for v in images)


def _all_permutations(mu: GrandCoupling) -> bool:
    """True when every support function is a bijection.

    Compositions of bijections are bijections, so such a coupling can never
    coalesce; the sampler uses this to answer DidNotCoalesce without
    drawing. Block couplings are checked structurally.
    """
    if isinstance(mu, ExplicitCoupling):
        return all(f.is_permutation() for f, _ in mu.terms)
    if isinstance(mu, BlockCoupling):
        for r, blk in enumerate(mu.partition.blocks):
            for s in range(mu.partition.size):
                if mu.law.marginal(r, s) == 0:
                    continue
                targets: set[int] = set()
                for i in sorted(blk):
                    dist = mu.within_dist(i, s)
                    if dist is None or len(dist) != 1:
                        return False
                    targets.add(dist[0][0])
                if len(targets) != len(blk):
                    return False
        return True
    return False


def provably_never_coalesces(
    mu: GrandCoupling, expand_cap: int = 1024, closure_cap: int = 20_000
) -> bool:
    """True only with a proof that no composition of support functions is
    constant, so every sampling run must end in DidNotCoalesce.

    Cheap structural route first (all support functions bijective), then a
    budgeted closure computation: the minimum image size over the closed
    composition semigroup exceeding 1 rules coalescence out surely, not just
    almost surely. Returns False when the budgets are exhausted, never
    guessing.
    """
    if _all_permutations(mu):
        return True
    try:
        support = expand_support(mu, cap=expand_cap)
        return coalescence_number(support, max_closure=closure_cap) > 1
    except (SupportTooLarge, ClosureTooLarge):
        return False


def cftp_sample(
    mu: GrandCoupling,
    stream: RngStream,
    t_max: int = DEFAULT_T_MAX,
    short_circuit: bool = True,
) -> int | DidNotCoalesce:
    """One exact draw from the invariant distribution of the coupled chain.

    Doubles the backward horizon until the composition of the drawn
    functions (most recent applied last) is constant, then returns the
    constant. The draw at each depth is pinned to its own substream, so
    deeper horizons extend the past instead of resampling it. Returns
    DidNotCoalesce when the horizon t_max is reached without coalescence;
    couplings supported entirely on bijections are recognized up front,
    since they provably never coalesce.
    """
    n = mu.n
    if n == 1:
        return 0
    if short_circuit and _all_permutations(mu):
        return DidNotCoalesce(t_max)
    composite = None  # backward composite at current depth
    depth = 0
    target = 1
    while True:
        # extend: suffix = F_{-(depth+1)} o ... o F_{-target}, applied first
        suffix = tuple(range(n))
        for t in range(depth + 1, target + 1):
            img = mu.sample_image(stream.substream(t))
            suffix = tuple(suffix[v] for v in img)
        composite = (
            suffix if composite is None else tuple(composite[v] for v in suffix)
        )
        depth = target
        if _is_constant(composite):
            return composite[0]
        if depth >= t_max:
            return DidNotCoalesce(t_max)
        target = min(depth * 2, t_max)


def backward_record(
    mu: GrandCoupling,
    stream: RngStream,
    t_max: int = DEFAULT_T_MAX,
    collect_trace: bool = False,
) -> CoalescenceRecord:
    """Exact first constancy time of the backward composition, one step at a
    time, with the constant value. Uses the same substream layout as
    cftp_sample, so the value agrees with it run for run."""
    n = mu.n
    if n == 1:
        return CoalescenceRecord(1, 0, "backward", (1,) if collect_trace else None)
    composite = tuple(range(n))
    trace: list[int] | None = [] if collect_trace else None
    for t in range(1, t_max + 1):
        img = mu.sample_image(stream.substream(t))
        composite = tuple(composite[v] for v in img)
        if trace is not None:
            trace.append(len(set(composite)))
        if _is_constant(composite):
            return CoalescenceRecord(
                t, composite[0], "backward", tuple(trace) if trace else None
            )
    return CoalescenceRecord(
        DidNotCoalesce(t_max), None, "backward", tuple(trace) if trace else None
    )


def forward_record(
    mu: GrandCoupling,
    stream: RngStream,
    t_max: int = DEFAULT_T_MAX,
    collect_trace: bool = False,
) -> CoalescenceRecord:
    """First time the forward composition (new draw applied last) is
    constant. The time matches the backward one in distribution, though the
    constant value does not follow the invariant distribution."""
    n = mu.n
    if n == 1:
        return CoalescenceRecord(1, 0, "forward", (1,) if collect_trace else None)
    composite = tuple(range(n))
    trace: list[int] | None = [] if collect_trace else None
    for t in range(1, t_max + 1):
        img = mu.sample_image(stream.substream(t))
        composite = tuple(img[v] for v in composite)
        if trace is not None:
            trace.append(len(set(composite)))
        if _is_constant(composite):
            return CoalescenceRecord(
                t, composite[0], "forward", tuple(trace) if trace else None
            )
    return CoalescenceRecord(
        DidNotCoalesce(t_max), None, "forward", tuple(trace) if trace else None
    )


def sample_counts(
    mu: GrandCoupling,
    stream: RngStream,
    count: int,
    t_max: int = DEFAULT_T_MAX,
) -> tuple[Counter, int]:
    """count independent exact samples; returns (state counts, failures)."""
    states: Counter = Counter()
    if provably_never_coalesces(mu):
        return states, count
    failures = 0
    for i in range(count):
        out = cftp_sample(mu, stream.fork(i), t_max=t_max)
        if isinstance(out, DidNotCoalesce):
            failures += 1
        else:
            states[out] += 1
    return states, failures


@dataclass(frozen=True)
class EquidistributionReport:
    """Empirical comparison of backward and forward coalescence times."""

    runs: int
    backward: tuple[tuple[int, int], ...]  # (time, count), ascending
    forward: tuple[tuple[int, int], ...]
    backward_failures: int
    forward_failures: int
    max_cdf_gap: Fraction

    def passed(self, tolerance: float) -> bool:
        if self.backward_failures or self.forward_failures:
            return False
        return self.max_cdf_gap < tolerance


def _max_cdf_gap(a: Counter, b: Counter, runs: int) -> Fraction:
    times = sorted(set(a) | set(b))
    ca = cb = 0
    gap = Fraction(0)
    for t in times:
        ca += a.get(t, 0)
        cb += b.get(t, 0)
        d = abs(Fraction(ca, runs) - Fraction(cb, runs))
        if d > gap:
            gap = d
    return gap


def equidistribution_report(
    mu: GrandCoupling,
    stream: RngStream,
    runs: int,
    t_max: int = DEFAULT_T_MAX,
) -> EquidistributionReport:
    """Compare backward and forward coalescence-time laws over many runs.

    Backward runs fork the stream at even indices, forward at odd, so the
    two samples are independent. The statistic is the largest absolute gap
    between the two empirical CDFs, failures counting as never-finite.
    A coupling that provably cannot coalesce is reported as all failures
    without walking the horizon, which is surely what each run would do.
    """
    back: Counter = Counter()
    fwd: Counter = Counter()
    if provably_never_coalesces(mu):
        return EquidistributionReport(
            runs=runs,
            backward=(),
            forward=(),
            backward_failures=runs,
            forward_failures=runs,
            max_cdf_gap=Fraction(0),
        )
    bfail = ffail = 0
    for i in range(runs):
        rec = backward_record(mu, stream.fork(2 * i), t_max=t_max)
        if rec.coalesced:
            back[rec.time] += 1
        else:
            bfail += 1
        rec = forward_record(mu, stream.fork(2 * i + 1), t_max=t_max)
        if rec.coalesced:
            fwd[rec.time] += 1
        else:
            ffail += 1
    return EquidistributionReport(
        runs=runs,
        backward=tuple(sorted(back.items())),
        forward=tuple(sorted(fwd.items())),
        backward_failures=bfail,
        forward_failures=ffail,
        max_cdf_gap=_max_cdf_gap(back, fwd, runs),
    )


def total_variation(counts, dist) -> Fraction:
    """TV distance between empirical counts and an exact distribution."""
    total = sum(counts.values())
    if total == 0:
        raise ValueError("no successful samples to compare")
    acc = Fraction(0)
    for j, pj in enumerate(dist):
        acc += abs(Fraction(counts.get(j, 0), total) - Fraction(pj))
    return acc / 2


def chi_square_pvalue(counts, dist) -> float:
    """Goodness-of-fit p-value of empirical counts against an exact law."""
    from scipy.stats import chisquare

    total = sum(counts.values())
    observed = [counts.get(j, 0) for j in range(len(dist))]
    expected = [float(pj) * total for pj in dist]
    return float(chisquare(observed, expected).pvalue)
