"""Composition closure of a set of maps, and what it says about coalescence.

The coalescence number of a grand coupling depends only on which functions
carry positive weight: it is the least image size over all finite
compositions of support functions. This module computes that closure, the
pairs of states that can be merged, and the partitions a coupling can lock
into.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .errors import ClosureTooLarge
from .mapfun import MapFunction, Partition, Support, compose

DEFAULT_CLOSURE_CAP = 250_000

# unordered state pairs, 0-based
PairSet = frozenset[frozenset[int]]


@dataclass(eq=False)
class SemigroupClosure:
    """All finite compositions of a generating set, with shortest words.

    elements are listed in breadth-first order, so generators come first and
    image sizes along the list are a superset-filtration friendly order.
    """

    n: int
    generators: tuple[MapFunction, ...]
    elements: tuple[MapFunction, ...]
    _words: dict[MapFunction, tuple[int, ...]] = field(repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, f: MapFunction) -> bool:
        return f in self._words

    def word_for(self, f: MapFunction) -> tuple[MapFunction, ...]:
        """A shortest sequence of generators composing to f (leftmost last applied)."""
        idxs = self._words.get(f)
        if idxs is None:
            raise KeyError(f"{f.to_notation()} is not in the closure")
        return tuple(self.generators[i] for i in idxs)

    @property
    def max_word_length(self) -> int:
        return max(len(w) for w in self._words.values())

    def min_image_size(self) -> int:
        return min(f.image_size() for f in self.elements)

    def min_image_elements(self) -> tuple[MapFunction, ...]:
        k = self.min_image_size()
        return tuple(f for f in self.elements if f.image_size() == k)


def _generators(support) -> tuple[MapFunction, ...]:
    if isinstance(support, Support):
        gens = support.sorted_functions()
    else:
        gens = tuple(sorted(set(support)))
    if not gens:
        raise ValueError("cannot close an empty set of functions")
    return gens


def close(support, max_size: int = DEFAULT_CLOSURE_CAP) -> SemigroupClosure:
    """Breadth-first closure under composition, recording shortest words.

    Raises ClosureTooLarge when the closure would exceed max_size elements.
    """
    gens = _generators(support)
    n = gens[0].n
    words: dict[MapFunction, tuple[int, ...]] = {}
    order: list[MapFunction] = []
    for i, g in enumerate(gens):
        if g not in words:
            words[g] = (i,)
            order.append(g)
    frontier = list(order)
    while frontier:
        fresh = []
        for e in frontier:
            we = words[e]
            for i, g in enumerate(gens):
                h = compose(g, e)
                if h not in words:
                    words[h] = (i,) + we
                    order.append(h)
                    fresh.append(h)
        if len(words) > max_size:
            raise ClosureTooLarge(
                f"closure exceeds {max_size} elements; raise the cap to continue"
            )
        frontier = fresh
    return SemigroupClosure(n, gens, tuple(order), words)


def _min_image_bfs(images: list[tuple[int, ...]], max_size: int) -> int:
    """Least image size over the composition closure, early exit at 1."""
    gens = images
    seen: set[tuple[int, ...]] = set()
    frontier: list[tuple[int, ...]] = []
    best = len(gens[0])
    for t in gens:
        if t not in seen:
            seen.add(t)
            frontier.append(t)
            sz = len(set(t))
            if sz < best:
                best = sz
    if best == 1:
        return 1
    while frontier:
        fresh = []
        for t in frontier:
            for g in gens:
                c = tuple(g[v] for v in t)
                if c not in seen:
                    seen.add(c)
                    fresh.append(c)
                    sz = len(set(c))
                    if sz < best:
                        best = sz
                        if best == 1:
                            return 1
        if len(seen) > max_size:
            raise ClosureTooLarge(
                f"closure exceeds {max_size} elements; raise the cap to continue"
            )
        frontier = fresh
    return best


def coalescence_number(support, max_closure: int = DEFAULT_CLOSURE_CAP) -> int:
    """k(S): the least image size over all compositions of members of S.

    Depends only on the support set, and is antitone in it: enlarging the
    support can only lower (never raise) the value.
    """
    gens = _generators(support)
    return _min_image_bfs([g.image for g in gens], max_closure)


def coalescing_pairs(support) -> PairSet:
    """The pairs of distinct states that some composition merges.

    A pair {x, y} belongs to the result exactly when some finite composition
    f of support functions has f(x) = f(y). Computed by a fixpoint on the
    pair graph: a pair coalesces if some single function either merges it
    outright or sends it to a pair already known to coalesce.
    """
    gens = _generators(support)
    n = gens[0].n
    pairs = [frozenset(p) for p in combinations(range(n), 2)]
    coalescing: set[frozenset[int]] = set()
    for p in pairs:
        x, y = tuple(p)
        if any(g(x) == g(y) for g in gens):
            coalescing.add(p)
    changed = True
    while changed:
        changed = False
        for p in pairs:
            if p in coalescing:
                continue
            x, y = tuple(p)
            for g in gens:
                if frozenset((g(x), g(y))) in coalescing:
                    coalescing.add(p)
                    changed = True
                    break
    return frozenset(coalescing)


def limiting_partitions(support, max_closure: int = DEFAULT_CLOSURE_CAP) -> frozenset[Partition]:
    """Kernels of the minimum-image-size elements of the closure.

    These are exactly the partitions a trajectory of the coupling can end up
    gluing states by: each is reachable with positive probability, and once
    the image size bottoms out the kernel can only be one of these.
    """
    closure = close(support, max_size=max_closure)
    return frozenset(f.kernel() for f in closure.min_image_elements())
