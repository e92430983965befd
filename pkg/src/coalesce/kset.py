"""The achievable set of coalescence numbers of a transition matrix.

K(P) collects every value k for which some grand coupling consistent with P
has coalescence number k. Since k depends only on the support, and supports
live inside the finite set of row-compatible functions, K(P) is computable
by exhaustive enumeration: test each candidate support for exact
feasibility, and close the feasible ones under composition.

Enumeration is exponential in the allowed-function count, so a second,
certificate-based route covers larger instances with one-sided conclusions:
aperiodicity settles membership of 1, double stochasticity settles n, a
per-pair balance condition can rule out n-1, and lumpable partitions with
doubly stochastic block matrices contribute verified block-measure members.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .blocks import (
    check_lumpability,
    construct_block_measure,
    is_block_measure,
    uniform_divisor_coupling,
)
from .coupling import (
    GrandCoupling,
    doeblin_coupling,
    is_consistent,
    permutation_coupling,
)
from .errors import (
    BudgetExceeded,
    ClosureTooLarge,
    SupportTooLarge,
)
from .feasibility import FeasibilityWitness, SupportTester
from .mapfun import MapFunction, Partition, Support
from .matrix import StochasticMatrix, is_doubly_stochastic, period
from .semigroup import DEFAULT_CLOSURE_CAP, coalescence_number

DEFAULT_SUBSET_BUDGET = 2**20

_ZERO = Fraction(0)


@dataclass(frozen=True)
class KMember:
    """One achieved coalescence number, with the coupling that achieves it."""

    k: int
    coupling: GrandCoupling
    how: str  # 'exhaustive' | 'aperiodicity' | 'double-stochasticity' | 'block-partition' | 'divisor'


@dataclass(frozen=True)
class KExclusion:
    """One ruled-out coalescence number, with the reason it is impossible."""

    k: int
    reason: str  # 'exhaustive' | 'aperiodicity' | 'double-stochasticity' | 'single-pair-criterion'
    detail: str = ""


@dataclass(frozen=True)
class KSetReport:
    n: int
    members: tuple[KMember, ...]
    exclusions: tuple[KExclusion, ...]
    exact: bool
    subsets_enumerated: int = 0
    lp_decided: int = 0
    cover_skipped: int = 0
    pruned: int = 0
    feasible: tuple[tuple[Support, int], ...] | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        overlap = self.values & {e.k for e in self.exclusions}
        if overlap:
            raise ValueError(f"values {sorted(overlap)} both included and excluded")

    @property
    def values(self) -> frozenset[int]:
        return frozenset(m.k for m in self.members)

    def witness_for(self, k: int) -> GrandCoupling:
        for m in self.members:
            if m.k == k:
                return m.coupling
        raise KeyError(k)


def allowed_functions(P: StochasticMatrix) -> Support:
    """Every function whose graph stays inside the positive cells of P.

    These are exactly the functions any consistent coupling may charge; the
    count is the product of the row support sizes.
    """
    return Support.of(
        MapFunction(combo) for combo in itertools.product(*P.row_supports)
    )


def single_pair_balance(P: StochasticMatrix, a: int, b: int) -> bool:
    """Necessary balance for {a, b} to be the only coalescing pair.

    If some coupling of P can merge the pair {a, b} and nothing else, then
    the mass a and b send outside the pair must agree, and must also equal
    the total mass the other states send into the pair. All three sums are
    compared exactly. States are 0-based here.
    """
    n = P.n
    if not (0 <= a < n and 0 <= b < n) or a == b:
        raise ValueError("need two distinct states")
    others = [i for i in range(n) if i not in (a, b)]
    out_a = sum((P.entries[a][j] for j in others), _ZERO)
    out_b = sum((P.entries[b][j] for j in others), _ZERO)
    into = sum((P.entries[i][a] + P.entries[i][b] for i in others), _ZERO)
    return out_a == out_b == into


def can_exclude_second_largest(P: StochasticMatrix) -> bool:
    """True when k = n-1 is impossible because every pair fails the balance.

    A coupling with k = n-1 has exactly one coalescing pair, and that pair
    must satisfy single_pair_balance. Only meaningful for n >= 3.
    """
    n = P.n
    if n < 3:
        return False
    return not any(
        single_pair_balance(P, a, b) for a, b in itertools.combinations(range(n), 2)
    )


def _set_partitions(n: int):
    """All partitions of range(n), by restricted growth strings."""
    codes = [0] * n

    def rec(i: int, m: int):
        if i == n:
            blocks: list[list[int]] = [[] for _ in range(m)]
            for v, c in enumerate(codes):
                blocks[c].append(v)
            yield Partition.from_blocks(blocks)
            return
        for c in range(m + 1):
            codes[i] = c
            yield from rec(i + 1, max(m, c + 1))

    yield from rec(1, 1) if n else iter(())


def k_set_exact(
    P: StochasticMatrix,
    cap: int = DEFAULT_SUBSET_BUDGET,
    prune: bool = True,
    collect_feasible: bool = False,
    max_closure: int = DEFAULT_CLOSURE_CAP,
) -> KSetReport:
    """K(P) by exhaustive support enumeration. Exact, but exponential.

    Every non-empty subset of the allowed functions is considered, smallest
    first. Subsets failing the cell-cover precheck are discarded without
    solving; feasible ones contribute their closure's minimum image size.

    With prune=True (safe for the resulting set), a subset is skipped when
    it contains an already-feasible subset T such that every value between
    k(allowed) and k(T) has been achieved: enlarging a support can only move
    k within that interval. Witnesses are kept for the first support
    achieving each value. With collect_feasible=True every feasible support
    actually tested is recorded with its k, and no early stop is taken.

    Raises BudgetExceeded when there are more than cap non-empty subsets.
    """
    allowed = allowed_functions(P)
    functions = allowed.sorted_functions()
    m = len(functions)
    total_subsets = (1 << m) - 1
    if total_subsets > cap:
        raise BudgetExceeded(
            f"{total_subsets} candidate supports exceed the budget of {cap}; "
            "use the certificate route instead"
        )
    tester = SupportTester(P, allowed)
    n = P.n
    k_floor = coalescence_number(allowed, max_closure=max_closure)
    full_range = set(range(k_floor, n + 1))
    achieved: dict[int, FeasibilityWitness] = {}
    records: list[tuple[Support, int]] = []
    prune_list: list[tuple[int, int]] = []  # (mask, k) antichain
    enumerated = lp_decided = cover_skipped = pruned = 0
    bit = [1 << c for c in range(m)]
    stop = False
    for size in range(1, m + 1):
        if stop:
            break
        for idxs in itertools.combinations(range(m), size):
            enumerated += 1
            mask = 0
            for c in idxs:
                mask |= bit[c]
            if not tester.covers(idxs):
                cover_skipped += 1
                continue
            if prune and any(pm & mask == pm for pm, _ in prune_list):
                pruned += 1
                continue
            lp_decided += 1
            if not tester.decide(idxs):
                continue
            k_s = coalescence_number(
                [functions[c] for c in idxs], max_closure=max_closure
            )
            if collect_feasible:
                records.append((Support.of(functions[c] for c in idxs), k_s))
            if k_s not in achieved:
                witness = tester.witness(idxs)
                assert isinstance(witness, FeasibilityWitness)
                achieved[k_s] = witness
            if prune and all(v in achieved for v in range(k_floor, k_s + 1)):
                if not any(pm & mask == pm for pm, _ in prune_list):
                    prune_list = [
                        (pm, kv) for pm, kv in prune_list if pm & mask != mask
                    ]
                    prune_list.append((mask, k_s))
            if not collect_feasible and set(achieved) == full_range:
                stop = True
                break
    members = tuple(
        KMember(k, achieved[k].as_coupling(), "exhaustive") for k in sorted(achieved)
    )
    exclusions = tuple(
        KExclusion(k, "exhaustive") for k in range(1, n + 1) if k not in achieved
    )
    return KSetReport(
        n=n,
        members=members,
        exclusions=exclusions,
        exact=True,
        subsets_enumerated=enumerated,
        lp_decided=lp_decided,
        cover_skipped=cover_skipped,
        pruned=pruned,
        feasible=tuple(records) if collect_feasible else None,
    )


def k_set_certificates(
    P: StochasticMatrix,
    max_partitions: int = 20_000,
    max_closure: int = DEFAULT_CLOSURE_CAP,
) -> KSetReport:
    """One-sided conclusions about K(P) that avoid subset enumeration.

    Membership of 1 is equivalent to aperiodicity (witnessed by the product
    coupling), membership of n to double stochasticity (witnessed by a
    permutation coupling). The value n-1 is excluded when every state pair
    fails the single-pair balance. Lumpable partitions whose block matrix
    is doubly stochastic contribute members after their constructed coupling
    verifies as a block measure. The report is marked inexact.
    """
    n = P.n
    members: list[KMember] = []
    exclusions: list[KExclusion] = []
    notes: list[str] = []
    seen: set[int] = set()
    if period(P) == 1:
        members.append(KMember(1, doeblin_coupling(P, lazy=True), "aperiodicity"))
        seen.add(1)
    else:
        exclusions.append(
            KExclusion(1, "aperiodicity", "periodic chains admit no coalescing coupling")
        )
    if is_doubly_stochastic(P):
        if n not in seen:
            members.append(KMember(n, permutation_coupling(P), "double-stochasticity"))
            seen.add(n)
    else:
        exclusions.append(
            KExclusion(
                n,
                "double-stochasticity",
                "a coupling with no coalescing pair must ride on permutations",
            )
        )
    if n >= 3 and can_exclude_second_largest(P):
        exclusions.append(
            KExclusion(
                n - 1,
                "single-pair-criterion",
                "every pair fails the balance required of a lone coalescing pair",
            )
        )
    counted = 0
    truncated = False
    for partition in _set_partitions(n):
        counted += 1
        if counted > max_partitions:
            truncated = True
            break
        l = partition.size
        if l in seen or l == n or l == 1:
            continue
        lumped = check_lumpability(P, partition)
        if not lumped:
            continue
        if not is_doubly_stochastic(lumped):
            continue
        mu = construct_block_measure(P, partition)
        try:
            if is_block_measure(mu, partition, max_closure=max_closure):
                members.append(KMember(l, mu, "block-partition"))
                seen.add(l)
        except (SupportTooLarge, ClosureTooLarge):
            notes.append(
                f"partition {partition.format_onebased()} produced a coupling too "
                "large to verify; not counted"
            )
    if truncated:
        notes.append(
            f"partition search stopped after {max_partitions} partitions"
        )
    return KSetReport(
        n=n,
        members=tuple(sorted(members, key=lambda m: m.k)),
        exclusions=tuple(sorted(exclusions, key=lambda e: e.k)),
        exact=False,
        notes=tuple(notes),
    )


def k_set_report(
    P: StochasticMatrix,
    cap: int = DEFAULT_SUBSET_BUDGET,
    max_closure: int = DEFAULT_CLOSURE_CAP,
) -> KSetReport:
    """Exact enumeration when it fits the budget, certificates otherwise."""
    try:
        return k_set_exact(P, cap=cap, max_closure=max_closure)
    except BudgetExceeded as exc:
        report = k_set_certificates(P, max_closure=max_closure)
        return KSetReport(
            n=report.n,
            members=report.members,
            exclusions=report.exclusions,
            exact=False,
            notes=report.notes + (str(exc),),
        )


def divisor_members(n: int) -> KSetReport:
    """Verified members of K for the uniform chain: every divisor of n.

    Each divisor l gets the consecutive-blocks coupling, rechecked for
    consistency and for being a block measure (so its coalescence number is
    the block count). The report is inexact: it asserts nothing about
    non-divisors except what the balance criterion rules out.
    """
    P = StochasticMatrix.uniform(n)
    members = []
    for l in range(1, n + 1):
        if n % l:
            continue
        mu = uniform_divisor_coupling(n, l)
        if not is_consistent(mu, P):
            raise AssertionError(f"divisor coupling for l={l} lost consistency")
        if not is_block_measure(mu):
            raise AssertionError(f"divisor coupling for l={l} is not a block measure")
        members.append(KMember(l, mu, "divisor"))
    exclusions = []
    if n >= 3 and can_exclude_second_largest(P):
        exclusions.append(
            KExclusion(
                n - 1,
                "single-pair-criterion",
                "every pair fails the balance required of a lone coalescing pair",
            )
        )
    return KSetReport(
        n=n,
        members=tuple(members),
        exclusions=tuple(exclusions),
        exact=False,
    )
