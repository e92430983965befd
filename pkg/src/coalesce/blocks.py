"""Block measures: couplings that permute the blocks of a partition.

A coupling is a block measure for a partition when almost every support
function sends each block into a single block, bijectively at the block
level, and the coalescence number equals the number of blocks. Such
couplings glue the chain down to exactly one survivor per block.

Construction goes through lumpability: if the row mass of P from any state
of block r into block s depends only on r, those masses form a block-level
matrix. When that matrix is doubly stochastic it carries a law on block
permutations, and the conditional rows inside each block complete a
BlockCoupling. The construction is marginal-correct by design; whether the
result actually coalesces to the block count is a separate question answered
by is_block_measure.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .birkhoff import _max_matching, birkhoff_decomposition
from .coupling import (
    DEFAULT_SUPPORT_CAP,
    BlockCoupling,
    ExplicitPermLaw,
    GrandCoupling,
    UniformPermLaw,
    expand_support,
)
from .errors import BlockConditionsFail, DimensionMismatch, NotADivisor
from .mapfun import MapFunction, Partition
from .matrix import StochasticMatrix, is_doubly_stochastic
from .semigroup import DEFAULT_CLOSURE_CAP, coalescence_number

_ZERO = Fraction(0)


@dataclass(frozen=True)
class NotLumpable:
    """Certificate that two states of one block disagree on a target block."""

    block: int
    states: tuple[int, int]
    target_block: int
    masses: tuple[Fraction, Fraction]

    def __bool__(self) -> bool:
        return False

    def describe(self) -> str:
        i, j = self.states
        a, b = self.masses
        return (
            f"states {i + 1} and {j + 1} share block {self.block + 1} but send "
            f"mass {a} and {b} into block {self.target_block + 1}"
        )


def check_lumpability(
    P: StochasticMatrix, partition: Partition
) -> StochasticMatrix | NotLumpable:
    """The block-level matrix of P, or a certificate that none exists.

    Lumpable means: for every ordered pair of blocks (r, s), the total mass
    a state sends into block s is the same for all states of block r.
    """
    if partition.n != P.n:
        raise DimensionMismatch(f"partition on n={partition.n}, matrix on n={P.n}")
    l = partition.size
    rows = []
    for r, blk in enumerate(partition.blocks):
        members = sorted(blk)
        ref = members[0]
        ref_masses = [
            sum((P.entries[ref][j] for j in partition.blocks[s]), _ZERO)
            for s in range(l)
        ]
        for i in members[1:]:
            for s in range(l):
                mass = sum((P.entries[i][j] for j in partition.blocks[s]), _ZERO)
                if mass != ref_masses[s]:
                    return NotLumpable(r, (ref, i), s, (ref_masses[s], mass))
        rows.append(ref_masses)
    return StochasticMatrix(tuple(tuple(row) for row in rows))


def check_block_conditions(
    P: StochasticMatrix,
    partition: Partition,
    law: ExplicitPermLaw | UniformPermLaw | None = None,
) -> bool:
    """True when construct_block_measure would succeed with these arguments."""
    try:
        construct_block_measure(P, partition, law)
    except BlockConditionsFail:
        return False
    return True


def construct_block_measure(
    P: StochasticMatrix,
    partition: Partition,
    law: ExplicitPermLaw | UniformPermLaw | None = None,
) -> BlockCoupling:
    """Build the block-structured coupling of P over a partition.

    Requires P lumpable over the partition, with the block-level matrix
    matching the law's marginals. When no law is given the block-level
    matrix must be doubly stochastic, and its Birkhoff decomposition is used
    as the law.

    Raises BlockConditionsFail when any requirement fails. Note that the
    result is always a consistent coupling, but not automatically a block
    measure: the coalescence number can exceed the block count. Use
    is_block_measure to check.
    """
    lumped = check_lumpability(P, partition)
    if not lumped:
        raise BlockConditionsFail(f"not lumpable: {lumped.describe()}")
    l = partition.size
    if law is None:
        if not is_doubly_stochastic(lumped):
            raise BlockConditionsFail(
                "the block-level matrix is not doubly stochastic, so no law on "
                "block permutations has these marginals"
            )
        decomp = birkhoff_decomposition(lumped)
        law = ExplicitPermLaw(tuple((f.image, w) for f, w in decomp.terms))
    else:
        if law.l != l:
            raise BlockConditionsFail(
                f"law permutes {law.l} blocks, partition has {l}"
            )
        for r in range(l):
            for s in range(l):
                if law.marginal(r, s) != lumped.entries[r][s]:
                    raise BlockConditionsFail(
                        f"law sends block {r + 1} to block {s + 1} with "
                        f"probability {law.marginal(r, s)}, but the block-level "
                        f"matrix says {lumped.entries[r][s]}"
                    )
    block_of = partition.block_of()
    within = []
    for i in range(P.n):
        r = block_of[i]
        entry = []
        for s in range(l):
            lam = lumped.entries[r][s]
            if lam == 0:
                continue
            dist = tuple(
                (j, P.entries[i][j] / lam)
                for j in sorted(partition.blocks[s])
                if P.entries[i][j] > 0
            )
            entry.append((s, dist))
        within.append(tuple(entry))
    return BlockCoupling(partition, law, tuple(within))


def _block_bijection_of(f: MapFunction, partition: Partition) -> tuple[int, ...] | None:
    """The permutation of blocks f induces, or None.

    None means f fails the structural condition: either some block is not
    mapped into a single block, or the induced block map is not a bijection.
    Injectivity inside a block is not required.
    """
    block_of = partition.block_of()
    out = []
    for blk in partition.blocks:
        targets = {block_of[f(i)] for i in blk}
        if len(targets) != 1:
            return None
        out.append(targets.pop())
    if sorted(out) != list(range(partition.size)):
        return None
    return tuple(out)


def _within_support_sets(mu: BlockCoupling) -> list[dict[int, set[int]]]:
    out = []
    for entry in mu.within:
        out.append({s: {j for j, _ in dist} for s, dist in entry})
    return out


def _common_point_certificate(mu: BlockCoupling) -> bool:
    """Sufficient check that some support function is constant on each block.

    Looks for a block permutation in the law's support such that, for every
    block r, all states of r can simultaneously target one common state of
    the image block. Such a function has image size equal to the block
    count, which pins the coalescence number there.
    """
    l = mu.partition.size
    supports = _within_support_sets(mu)
    members = [sorted(blk) for blk in mu.partition.blocks]
    common = [[False] * l for _ in range(l)]
    for r in range(l):
        for s in range(l):
            if mu.law.marginal(r, s) == 0:
                continue
            acc: set[int] | None = None
            ok = True
            for i in members[r]:
                sup = supports[i].get(s)
                if sup is None:
                    ok = False
                    break
                acc = set(sup) if acc is None else acc & sup
                if not acc:
                    ok = False
                    break
            common[r][s] = ok and bool(acc)
    if isinstance(mu.law, UniformPermLaw):
        adj = [[s for s in range(l) if common[r][s]] for r in range(l)]
        return _max_matching(adj, l, [-1] * l)
    return any(
        all(common[r][perm[r]] for r in range(l)) for perm in mu.law.iter_support()
    )


def is_block_measure(
    mu: GrandCoupling,
    partition: Partition | None = None,
    max_closure: int = DEFAULT_CLOSURE_CAP,
    support_cap: int = DEFAULT_SUPPORT_CAP,
) -> bool:
    """Whether mu permutes the partition's blocks and coalesces to one
    survivor per block.

    Two requirements: every support function induces a bijection of blocks,
    and the coalescence number equals the block count. For block-structured
    couplings over the same partition the first is automatic and the second
    is first attempted structurally, so enormous supports (for example a
    uniform law over all block permutations) are handled without
    enumeration.
    """
    if partition is None:
        if not isinstance(mu, BlockCoupling):
            raise ValueError("a partition is required for explicit couplings")
        partition = mu.partition
    if partition.n != mu.n:
        raise DimensionMismatch(f"partition on n={partition.n}, coupling on n={mu.n}")
    l = partition.size
    if isinstance(mu, BlockCoupling) and mu.partition == partition:
        if _common_point_certificate(mu):
            return True
        support = expand_support(mu, cap=support_cap)
        return coalescence_number(support, max_closure=max_closure) == l
    support = expand_support(mu, cap=support_cap)
    for f in support:
        if _block_bijection_of(f, partition) is None:
            return False
    return coalescence_number(support, max_closure=max_closure) == l


def uniform_divisor_coupling(n: int, l: int) -> BlockCoupling:
    """A block measure of the uniform chain on n states with exactly l blocks.

    Splits the states into l consecutive blocks of size n/l, draws a uniform
    block permutation, and picks images uniformly inside the target block.
    Every state then has marginal 1/n on every target, so this couples the
    uniform chain, and the coalescence number is exactly l. Requires l to
    divide n.
    """
    if n < 1 or l < 1:
        raise NotADivisor(f"need positive sizes, got n={n}, l={l}")
    if n % l:
        raise NotADivisor(f"{l} does not divide {n}")
    m = n // l
    partition = Partition.from_blocks(range(r * m, (r + 1) * m) for r in range(l))
    law = UniformPermLaw(l)
    share = Fraction(1, m)
    within = tuple(
        tuple(
            (s, tuple((j, share) for j in range(s * m, (s + 1) * m)))
            for s in range(l)
        )
        for _ in range(n)
    )
    return BlockCoupling(partition, law, within)
