"""Grand couplings: probability measures on maps of the state set.

A grand coupling assigns one random image to every state simultaneously; it
is consistent with a transition matrix P when the per-state marginals match
P's rows. Two storage forms are supported:

* ExplicitCoupling: a finite list of (function, weight) terms.
* BlockCoupling: a partition of the states, a law on block permutations, and
  per-state conditional distributions inside the permuted target block.

The block form can describe supports far too large to enumerate (for example
a uniform law over all l! block permutations), while still allowing exact
marginal computations and exact sampling.

JSON schema (states, blocks and map notation are 1-based):

    {"n": 4, "functions": [{"map": "3434", "weight": "1/4"}, ...]}

    {"n": 4,
     "partition": [[1, 2], [3, 4]],
     "block_perms": [{"perm": [2, 1], "weight": "1"}, ...]   (or "uniform"),
     "within": [{"2": {"3": "1/2", "4": "1/2"}}, ...]}

"within" lists one object per state; keys are target block indices, values
map target states to weights. Zero-weight entries are rejected everywhere.
"""
from __future__ import annotations

import itertools
import json
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import factorial

from .birkhoff import birkhoff_decomposition
from .errors import (
    CouplingFormatError,
    DimensionMismatch,
    SupportTooLarge,
)
from .mapfun import MapFunction, Partition, Support
from .matrix import StochasticMatrix
from .rational import format_rational, parse_rational

_ZERO = Fraction(0)
_ONE = Fraction(1)

DEFAULT_SUPPORT_CAP = 10**6


def _sampling_table(pairs):
    """Cumulative integer thresholds for exact inverse-CDF sampling.

    pairs is a sequence of (payload, Fraction weight) with weights summing to
    one; returns (denominator, cumulative thresholds, payloads).
    """
    weights = [w for _, w in pairs]
    den = 1
    for w in weights:
        den = den * w.denominator // _gcd(den, w.denominator)
    cum = []
    acc = 0
    for w in weights:
        acc += int(w * den)
        cum.append(acc)
    return den, cum, [p for p, _ in pairs]


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _pick(rng, table):
    den, cum, payloads = table
    return payloads[bisect_right(cum, rng.randrange(den))]


@dataclass(frozen=True)
class ExplicitCoupling:
    """A grand coupling given by explicit (function, weight) terms."""

    terms: tuple[tuple[MapFunction, Fraction], ...]

    def __post_init__(self):
        if not self.terms:
            raise CouplingFormatError("a coupling needs at least one function")
        n = self.terms[0][0].n
        seen = set()
        total = _ZERO
        for f, w in self.terms:
            if f.n != n:
                raise DimensionMismatch("mixed state-set sizes in coupling")
            if f in seen:
                raise CouplingFormatError(f"duplicate function {f.to_notation()}")
            seen.add(f)
            if w <= 0:
                raise CouplingFormatError("weights must be strictly positive")
            total += w
        if total != 1:
            raise CouplingFormatError(f"weights sum to {total}, expected 1")
        if list(self.terms) != sorted(self.terms, key=lambda t: t[0]):
            raise CouplingFormatError("terms must be sorted by function")

    @classmethod
    def from_pairs(cls, pairs) -> "ExplicitCoupling":
        return cls(tuple(sorted(((f, Fraction(w)) for f, w in pairs), key=lambda t: t[0])))

    @property
    def n(self) -> int:
        return self.terms[0][0].n

    def support(self) -> Support:
        return Support.of(f for f, _ in self.terms)

    def support_size(self) -> int:
        return len(self.terms)

    def iter_terms(self):
        return iter(self.terms)

    def weight_of(self, f: MapFunction) -> Fraction:
        for g, w in self.terms:
            if g == f:
                return w
        return _ZERO

    @cached_property
    def induced(self) -> StochasticMatrix:
        n = self.n
        out = [[_ZERO] * n for _ in range(n)]
        for f, w in self.terms:
            for i in range(n):
                out[i][f(i)] += w
        return StochasticMatrix(tuple(tuple(r) for r in out))

    @cached_property
    def _table(self):
        return _sampling_table([(f.image, w) for f, w in self.terms])

    def sample_image(self, rng) -> tuple[int, ...]:
        return _pick(rng, self._table)


@dataclass(frozen=True)
class ExplicitPermLaw:
    """A finitely supported law on permutations of the block indices."""

    terms: tuple[tuple[tuple[int, ...], Fraction], ...]

    def __post_init__(self):
        if not self.terms:
            raise CouplingFormatError("block permutation law needs at least one term")
        l = len(self.terms[0][0])
        total = _ZERO
        seen = set()
        for perm, w in self.terms:
            if sorted(perm) != list(range(l)):
                raise CouplingFormatError(f"not a block permutation: {perm}")
            if perm in seen:
                raise CouplingFormatError("duplicate block permutation")
            seen.add(perm)
            if w <= 0:
                raise CouplingFormatError("block permutation weights must be positive")
            total += w
        if total != 1:
            raise CouplingFormatError(f"block permutation weights sum to {total}")

    @property
    def l(self) -> int:
        return len(self.terms[0][0])

    def marginal(self, r: int, s: int) -> Fraction:
        """Probability that block r is sent to block s."""
        return sum((w for perm, w in self.terms if perm[r] == s), _ZERO)

    def weight_of(self, perm: tuple[int, ...]) -> Fraction:
        for p, w in self.terms:
            if p == perm:
                return w
        return _ZERO

    def support_count(self) -> int:
        return len(self.terms)

    def iter_support(self):
        for perm, _ in self.terms:
            yield perm

    @cached_property
    def _table(self):
        return _sampling_table(self.terms)

    def sample(self, rng) -> tuple[int, ...]:
        return _pick(rng, self._table)


@dataclass(frozen=True)
class UniformPermLaw:
    """The uniform law over all l! permutations of the block indices.

    Stored structurally so that couplings built on it stay exact even when
    l! is far beyond enumeration.
    """

    l: int

    def __post_init__(self):
        if self.l < 1:
            raise CouplingFormatError("need at least one block")

    def marginal(self, r: int, s: int) -> Fraction:
        return Fraction(1, self.l)

    def weight_of(self, perm: tuple[int, ...]) -> Fraction:
        if sorted(perm) != list(range(self.l)):
            return _ZERO
        return Fraction(1, factorial(self.l))

    def support_count(self) -> int:
        return factorial(self.l)

    def iter_support(self):
        return itertools.permutations(range(self.l))

    def sample(self, rng) -> tuple[int, ...]:
        perm = list(range(self.l))
        rng.shuffle(perm)
        return tuple(perm)


@dataclass(frozen=True)
class BlockCoupling:
    """A grand coupling with block structure.

    A block permutation Pi is drawn from `law`; conditionally on Pi each
    state i in block r picks its image inside block Pi(r), independently
    across states, from the stored within-distribution.

    within[i] is a tuple of (target_block, distribution) pairs sorted by
    target block, where distribution is a tuple of (state, weight) pairs.
    Every target block reachable under the law must carry a distribution,
    and no unreachable block may carry one.
    """

    partition: Partition
    law: ExplicitPermLaw | UniformPermLaw
    within: tuple[tuple[tuple[int, tuple[tuple[int, Fraction], ...]], ...], ...]

    def __post_init__(self):
        n = self.partition.n
        l = self.partition.size
        if self.law.l != l:
            raise DimensionMismatch("law and partition disagree on block count")
        if len(self.within) != n:
            raise CouplingFormatError("within must list one entry per state")
        block_of = self.partition.block_of()
        for i, entry in enumerate(self.within):
            r = block_of[i]
            blocks_here = [s for s, _ in entry]
            if blocks_here != sorted(blocks_here) or len(set(blocks_here)) != len(blocks_here):
                raise CouplingFormatError("within entries must be sorted by target block")
            reachable = {
                s for s in range(l) if self.law.marginal(r, s) > 0
            }
            if set(blocks_here) != reachable:
                raise CouplingFormatError(
                    f"state {i + 1}: within blocks {sorted(b + 1 for b in blocks_here)} "
                    f"do not match reachable blocks {sorted(b + 1 for b in reachable)}"
                )
            for s, dist in entry:
                if not dist:
                    raise CouplingFormatError("empty within-distribution")
                total = _ZERO
                for j, w in dist:
                    if j not in self.partition.blocks[s]:
                        raise CouplingFormatError(
                            f"state {i + 1} targets {j + 1} outside block {s + 1}"
                        )
                    if w <= 0:
                        raise CouplingFormatError("within weights must be positive")
                    total += w
                if total != 1:
                    raise CouplingFormatError(
                        f"within-distribution of state {i + 1} into block {s + 1} "
                        f"sums to {total}"
                    )

    @property
    def n(self) -> int:
        return self.partition.n

    @cached_property
    def _within_maps(self) -> tuple[dict[int, tuple[tuple[int, Fraction], ...]], ...]:
        return tuple({s: dist for s, dist in entry} for entry in self.within)

    def within_dist(self, state: int, target_block: int):
        return self._within_maps[state].get(target_block)

    @cached_property
    def induced(self) -> StochasticMatrix:
        n = self.n
        block_of = self.partition.block_of()
        out = [[_ZERO] * n for _ in range(n)]
        for i in range(n):
            r = block_of[i]
            for s, dist in self.within[i]:
                lam = self.law.marginal(r, s)
                for j, w in dist:
                    out[i][j] += lam * w
        return StochasticMatrix(tuple(tuple(row) for row in out))

    def support_size(self, cap: int | None = None) -> int:
        """Number of support functions; stops early past cap when given."""
        per_pi_floor = 1
        count_pi = self.law.support_count()
        if cap is not None and count_pi * per_pi_floor > cap:
            return count_pi  # already past cap, each permutation contributes
        block_of = self.partition.block_of()
        total = 0
        for perm in self.law.iter_support():
            prod = 1
            for i in range(self.n):
                dist = self.within_dist(i, perm[block_of[i]])
                prod *= len(dist)
            total += prod
            if cap is not None and total > cap:
                return total
        return total

    def iter_terms(self):
        """Yield (function, weight) over the whole support. May be huge."""
        block_of = self.partition.block_of()
        for perm in self.law.iter_support():
            pw = self.law.weight_of(perm)
            choices = [self.within_dist(i, perm[block_of[i]]) for i in range(self.n)]
            for combo in itertools.product(*choices):
                img = tuple(j for j, _ in combo)
                w = pw
                for _, ww in combo:
                    w *= ww
                yield MapFunction(img), w

    def weight_of(self, f: MapFunction) -> Fraction:
        perm = self._block_perm_of(f)
        if perm is None:
            return _ZERO
        w = self.law.weight_of(perm)
        if w == 0:
            return _ZERO
        block_of = self.partition.block_of()
        for i in range(self.n):
            dist = self.within_dist(i, perm[block_of[i]])
            if dist is None:
                return _ZERO
            prob = next((ww for j, ww in dist if j == f(i)), _ZERO)
            if prob == 0:
                return _ZERO
            w *= prob
        return w

    def _block_perm_of(self, f: MapFunction) -> tuple[int, ...] | None:
        """The block permutation induced by f, or None if f spans blocks."""
        block_of = self.partition.block_of()
        out = [-1] * self.partition.size
        for r, blk in enumerate(self.partition.blocks):
            targets = {block_of[f(i)] for i in blk}
            if len(targets) != 1:
                return None
            out[r] = targets.pop()
        if sorted(out) != list(range(self.partition.size)):
            return None
        return tuple(out)

    @cached_property
    def _samplers(self):
        block_of = self.partition.block_of()
        tables = []
        for i in range(self.n):
            tables.append(
                {
                    s: _sampling_table([(j, w) for j, w in dist])
                    for s, dist in self.within[i]
                }
            )
        return block_of, tables

    def sample_image(self, rng) -> tuple[int, ...]:
        block_of, tables = self._samplers
        perm = self.law.sample(rng)
        return tuple(
            _pick(rng, tables[i][perm[block_of[i]]]) for i in range(self.n)
        )


GrandCoupling = ExplicitCoupling | BlockCoupling


def induced_matrix(mu: GrandCoupling) -> StochasticMatrix:
    """The transition matrix with entries mu(f(i) = j), computed exactly.

    For block couplings this uses the block-permutation marginals, never the
    expanded support.
    """
    return mu.induced


def is_consistent(mu: GrandCoupling, P: StochasticMatrix) -> bool:
    """True when mu's per-state marginals equal P row by row."""
    if mu.n != P.n:
        raise DimensionMismatch(f"coupling on n={mu.n}, matrix on n={P.n}")
    return induced_matrix(mu).entries == P.entries


def expand_support(mu: GrandCoupling, cap: int = DEFAULT_SUPPORT_CAP) -> Support:
    """The set of functions carrying positive weight.

    Raises SupportTooLarge when more than cap functions would be produced.
    """
    if isinstance(mu, ExplicitCoupling):
        if mu.support_size() > cap:
            raise SupportTooLarge(f"{mu.support_size()} functions exceed cap {cap}")
        return mu.support()
    size = mu.support_size(cap=cap)
    if size > cap:
        raise SupportTooLarge(f"support of at least {size} functions exceeds cap {cap}")
    return Support.of(f for f, _ in mu.iter_terms())


def to_explicit(mu: GrandCoupling, cap: int = DEFAULT_SUPPORT_CAP) -> ExplicitCoupling:
    """Materialise any coupling as an ExplicitCoupling (subject to cap)."""
    if isinstance(mu, ExplicitCoupling):
        if mu.support_size() > cap:
            raise SupportTooLarge(f"{mu.support_size()} functions exceed cap {cap}")
        return mu
    size = mu.support_size(cap=cap)
    if size > cap:
        raise SupportTooLarge(f"support of at least {size} functions exceeds cap {cap}")
    return ExplicitCoupling.from_pairs(mu.iter_terms())


def doeblin_coupling(
    P: StochasticMatrix, cap: int = DEFAULT_SUPPORT_CAP, lazy: bool = False
) -> GrandCoupling:
    """The independent product coupling: each state draws from its own row.

    With lazy=True the result is a BlockCoupling over the single-block
    partition (identity block permutation, rows as within-distributions),
    which samples in O(n) regardless of how many functions the product
    support would contain.
    """
    n = P.n
    if lazy:
        law = ExplicitPermLaw((((0,), _ONE),))
        within = tuple(
            ((0, tuple((j, P.entries[i][j]) for j in P.row_supports[i])),)
            for i in range(n)
        )
        return BlockCoupling(Partition.single_block(n), law, within)
    size = 1
    for sup in P.row_supports:
        size *= len(sup)
        if size > cap:
            raise SupportTooLarge(
                f"product support of {size}+ functions exceeds cap {cap}; "
                "pass lazy=True to sample without enumeration"
            )
    pairs = []
    for combo in itertools.product(*P.row_supports):
        w = _ONE
        for i, j in enumerate(combo):
            w *= P.entries[i][j]
        pairs.append((MapFunction(tuple(combo)), w))
    return ExplicitCoupling.from_pairs(pairs)


def permutation_coupling(P: StochasticMatrix) -> ExplicitCoupling:
    """A coupling supported on permutations, via Birkhoff decomposition.

    Requires P doubly stochastic; the result never coalesces.
    """
    decomp = birkhoff_decomposition(P)
    return ExplicitCoupling.from_pairs(decomp.terms)


# --- serialization ---------------------------------------------------------


def serialize_coupling(mu: GrandCoupling) -> str:
    if isinstance(mu, ExplicitCoupling):
        doc = {
            "n": mu.n,
            "functions": [
                {"map": f.to_notation(), "weight": format_rational(w)}
                for f, w in mu.terms
            ],
        }
        return json.dumps(doc, indent=1)
    perms: object
    if isinstance(mu.law, UniformPermLaw):
        perms = "uniform"
    else:
        perms = [
            {"perm": [v + 1 for v in perm], "weight": format_rational(w)}
            for perm, w in mu.law.terms
        ]
    within = []
    for entry in mu.within:
        within.append(
            {
                str(s + 1): {str(j + 1): format_rational(w) for j, w in dist}
                for s, dist in entry
            }
        )
    doc = {
        "n": mu.n,
        "partition": [sorted(v + 1 for v in b) for b in mu.partition.blocks],
        "block_perms": perms,
        "within": within,
    }
    return json.dumps(doc, indent=1)


def parse_coupling(text: str) -> GrandCoupling:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CouplingFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "n" not in doc:
        raise CouplingFormatError("coupling document must be an object with 'n'")
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise CouplingFormatError(f"bad state count: {n!r}")
    if "functions" in doc:
        return _parse_explicit(doc, n)
    if "partition" in doc:
        return _parse_block(doc, n)
    raise CouplingFormatError("expected 'functions' or 'partition'")


def _parse_explicit(doc: dict, n: int) -> ExplicitCoupling:
    items = doc["functions"]
    if not isinstance(items, list):
        raise CouplingFormatError("'functions' must be a list")
    pairs = []
    for item in items:
        try:
            f = MapFunction.from_notation(str(item["map"]))
            w = parse_rational(str(item["weight"]))
        except (KeyError, TypeError):
            raise CouplingFormatError(f"bad function entry: {item!r}") from None
        if f.n != n:
            raise CouplingFormatError(
                f"function {item['map']!r} is on {f.n} states, document says {n}"
            )
        if w <= 0:
            raise CouplingFormatError(f"zero or negative weight on {item['map']!r}")
        pairs.append((f, w))
    return ExplicitCoupling.from_pairs(pairs)


def _parse_block(doc: dict, n: int) -> BlockCoupling:
    try:
        partition = Partition.from_onebased(doc["partition"])
    except (TypeError, KeyError):
        raise CouplingFormatError("bad 'partition'") from None
    if partition.n != n:
        raise CouplingFormatError("partition does not cover 1..n")
    l = partition.size
    raw_law = doc.get("block_perms")
    law: ExplicitPermLaw | UniformPermLaw
    if raw_law == "uniform":
        law = UniformPermLaw(l)
    elif isinstance(raw_law, list):
        terms = []
        for item in raw_law:
            try:
                perm = tuple(int(v) - 1 for v in item["perm"])
                w = parse_rational(str(item["weight"]))
            except (KeyError, TypeError, ValueError):
                raise CouplingFormatError(f"bad block permutation entry: {item!r}") from None
            if w <= 0:
                raise CouplingFormatError("zero or negative block permutation weight")
            terms.append((perm, w))
        law = ExplicitPermLaw(tuple(terms))
    else:
        raise CouplingFormatError("'block_perms' must be a list or \"uniform\"")
    raw_within = doc.get("within")
    if not isinstance(raw_within, list) or len(raw_within) != n:
        raise CouplingFormatError("'within' must list one object per state")
    within = []
    for i, obj in enumerate(raw_within):
        if not isinstance(obj, dict):
            raise CouplingFormatError(f"within entry for state {i + 1} is not an object")
        entry = []
        for key in sorted(obj, key=lambda k: int(k)):
            dist_obj = obj[key]
            s = int(key) - 1
            if not isinstance(dist_obj, dict) or not dist_obj:
                raise CouplingFormatError(
                    f"bad within-distribution for state {i + 1}, block {key}"
                )
            dist = tuple(
                sorted(
                    (int(jk) - 1, parse_rational(str(wv))) for jk, wv in dist_obj.items()
                )
            )
            if any(w <= 0 for _, w in dist):
                raise CouplingFormatError("zero or negative within weight")
            entry.append((s, dist))
        within.append(tuple(entry))
    return BlockCoupling(partition, law, tuple(within))
