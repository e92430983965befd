"""Independent brute-force references used only by the tests.

Nothing here imports the package. Closures are saturated as raw image
tuples, feasibility is decided by enumerating basic solutions of the exact
linear system, and instances are generated with plain random.Random. All of
it is slow and obvious on purpose, so the fast implementations have
something trustworthy to disagree with.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations, permutations, product

Image = tuple[int, ...]


def compose_images(f: Image, g: Image) -> Image:
    """f after g."""
    return tuple(f[v] for v in g)


def image_size(t: Image) -> int:
    return len(set(t))


def kernel_of(t: Image) -> frozenset[frozenset[int]]:
    classes: dict[int, list[int]] = {}
    for i, v in enumerate(t):
        classes.setdefault(v, []).append(i)
    return frozenset(frozenset(c) for c in classes.values())


def word_closure(images: list[Image]) -> set[Image]:
    """Every composite of one or more generators, saturated to a fixpoint."""
    n = len(images[0])
    closure: set[Image] = set(images)
    frontier = set(images)
    while frontier:
        new: set[Image] = set()
        for w in frontier:
            for g in images:
                for comp in (compose_images(g, w), compose_images(w, g)):
                    if comp not in closure:
                        closure.add(comp)
                        new.add(comp)
        frontier = new
        assert len(closure) <= n**n
    return closure


def bounded_min_image(images: list[Image], max_len: int) -> int:
    """Smallest image size over composites of at most max_len generators."""
    best = min(image_size(t) for t in images)
    seen: set[Image] = set(images)
    frontier = set(images)
    length = 1
    while frontier and length < max_len and best > 1:
        length += 1
        new: set[Image] = set()
        for w in frontier:
            for g in images:
                comp = compose_images(g, w)
                if comp not in seen:
                    seen.add(comp)
                    new.add(comp)
                    best = min(best, image_size(comp))
        frontier = new
    return best


def oracle_min_image(images: list[Image]) -> int:
    return min(image_size(t) for t in word_closure(images))


def oracle_coalescing_pairs(images: list[Image]) -> set[frozenset[int]]:
    pairs: set[frozenset[int]] = set()
    n = len(images[0])
    for w in word_closure(images):
        for i in range(n):
            for j in range(i + 1, n):
                if w[i] == w[j]:
                    pairs.add(frozenset((i, j)))
    return pairs


def oracle_limiting_kernels(images: list[Image]) -> set[frozenset[frozenset[int]]]:
    closure = word_closure(images)
    k = min(image_size(t) for t in closure)
    return {kernel_of(t) for t in closure if image_size(t) == k}


# --- exact linear algebra ---------------------------------------------------


def gauss_rank(rows: list[list[Fraction]]) -> int:
    m = [row[:] for row in rows]
    rank = 0
    cols = len(m[0]) if m else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = m[rank][c]
        m[rank] = [v / inv for v in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][c] != 0:
                f = m[r][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def solve_exact(A: list[list[Fraction]], b: list[Fraction]):
    """The unique solution of Ax=b for full-column-rank A, else None.

    None covers both an inconsistent system and a rank-deficient one, which
    is all the vertex enumeration below needs.
    """
    rows, cols = len(A), len(A[0])
    m = [A[r][:] + [b[r]] for r in range(rows)]
    pivots: list[int] = []
    rank = 0
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = m[rank][c]
        m[rank] = [v / inv for v in m[rank]]
        for r in range(rows):
            if r != rank and m[r][c] != 0:
                f = m[r][c]
                m[r] = [a - f * bb for a, bb in zip(m[r], m[rank])]
        pivots.append(c)
        rank += 1
    if rank < cols:
        return None
    if any(m[r][cols] != 0 for r in range(rank, rows)):
        return None
    x = [Fraction(0)] * cols
    for r, c in enumerate(pivots):
        x[c] = m[r][cols]
    return x


# --- exact-support feasibility by basic-solution enumeration ----------------


def _cell_system(P_rows, images: list[Image]):
    n = len(P_rows)
    cells = [(i, j) for i in range(n) for j in range(n) if P_rows[i][j] > 0]
    cell_index = {c: r for r, c in enumerate(cells)}
    cols = []
    for t in images:
        col = [Fraction(0)] * len(cells)
        for i in range(n):
            key = (i, t[i])
            if key not in cell_index:
                return None, None
            col[cell_index[key]] = Fraction(1)
        cols.append(col)
    b = [P_rows[i][j] for (i, j) in cells]
    return cols, b


def polytope_vertices(P_rows, images: list[Image]):
    """All basic nonnegative solutions of the marginal equations.

    Yields weight vectors indexed like images. Every vertex of the feasible
    polytope appears at least once.
    """
    cols, b = _cell_system(P_rows, images)
    if cols is None:
        return
    mcols = len(cols)
    A = [[cols[c][r] for c in range(mcols)] for r in range(len(b))]
    r = gauss_rank([row[:] for row in A])
    seen: set[tuple] = set()
    for basis in combinations(range(mcols), r):
        sub = [[A[row][c] for c in basis] for row in range(len(b))]
        x = solve_exact(sub, b)
        if x is None or any(v < 0 for v in x):
            continue
        full = [Fraction(0)] * mcols
        for c, v in zip(basis, x):
            full[c] = v
        key = tuple(full)
        if key not in seen:
            seen.add(key)
            yield full


def oracle_exact_feasible(P_rows, images: list[Image]) -> bool:
    """Is there a strictly positive weighting of exactly these functions?

    The feasible set is a polytope; the maximal support of any point is the
    union of the vertex supports, so exact feasibility means that union
    covers every function.
    """
    covered: set[int] = set()
    nonempty = False
    for vertex in polytope_vertices(P_rows, images):
        nonempty = True
        covered.update(c for c, v in enumerate(vertex) if v > 0)
        if len(covered) == len(images):
            return True
    return nonempty and len(covered) == len(images)


def oracle_weakly_feasible(P_rows, images: list[Image]) -> bool:
    cols, b = _cell_system(P_rows, images)
    if cols is None:
        # functions outside the allowed set get weight zero; drop them
        keep = []
        n = len(P_rows)
        for t in images:
            if all(P_rows[i][t[i]] > 0 for i in range(n)):
                keep.append(t)
        if not keep:
            return False
        return any(True for _ in polytope_vertices(P_rows, keep))
    return any(True for _ in polytope_vertices(P_rows, images))


# --- random instances -------------------------------------------------------


def strongly_connected(P_rows) -> bool:
    n = len(P_rows)

    def reach(start, rows):
        seen = {start}
        stack = [start]
        while stack:
            i = stack.pop()
            for j in range(n):
                if rows[i][j] > 0 and j not in seen:
                    seen.add(j)
                    stack.append(j)
        return seen

    transpose = [[P_rows[j][i] for j in range(n)] for i in range(n)]
    return len(reach(0, P_rows)) == n and len(reach(0, transpose)) == n


def random_stochastic(rng: random.Random, n: int, irreducible: bool = True):
    """Rows of random positive fractions on random supports, summing to one."""
    while True:
        rows = []
        for _ in range(n):
            size = rng.randint(1, n)
            sup = rng.sample(range(n), size)
            raw = [rng.randint(1, 6) for _ in sup]
            total = sum(raw)
            row = [Fraction(0)] * n
            for j, a in zip(sup, raw):
                row[j] = Fraction(a, total)
            rows.append(row)
        if not irreducible or strongly_connected(rows):
            return rows


def random_doubly_stochastic(rng: random.Random, n: int, max_perms: int = 10):
    """A convex combination of a few random permutation matrices."""
    while True:
        count = rng.randint(2, max_perms)
        perms = [tuple(rng.sample(range(n), n)) for _ in range(count)]
        raw = [rng.randint(1, 9) for _ in perms]
        total = sum(raw)
        rows = [[Fraction(0)] * n for _ in range(n)]
        for perm, a in zip(perms, raw):
            for i in range(n):
                rows[i][perm[i]] += Fraction(a, total)
        if strongly_connected(rows):
            return rows


def allowed_images(P_rows) -> list[Image]:
    n = len(P_rows)
    supports = [[j for j in range(n) if P_rows[i][j] > 0] for i in range(n)]
    return [tuple(c) for c in product(*supports)]


def random_subset(rng: random.Random, items, size: int):
    return rng.sample(list(items), size)


def random_permutation_image(rng: random.Random, n: int) -> Image:
    return tuple(rng.sample(range(n), n))


def all_images(n: int) -> list[Image]:
    return [tuple(t) for t in product(range(n), repeat=n)]


def all_permutation_images(n: int) -> list[Image]:
    return [tuple(p) for p in permutations(range(n))]
