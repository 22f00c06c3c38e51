"""Exact helpers for small finite Markov chains.

Chains here are tiny (a handful of states), so we solve for stationary
distributions with exact rational Gaussian elimination instead of floating
point. Keeps long-horizon accrual constants drift-free.
"""

from fractions import Fraction


def as_fraction(x):
    """Coerce config-style values to Fraction.

    Accepts Fraction, int, and strings ("0.35", "7/20"). Floats go through
    their repr, so 0.2 means 1/5, not the binary expansion.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(str(x).strip())


def check_rows_stochastic(rows):
    """Every row must be non-negative and sum to exactly 1."""
    for i, row in enumerate(rows):
        total = sum(row, Fraction(0))
        if total != 1:
            raise ValueError(f"transition matrix row {i} sums to {total}, expected 1")
        if any(p < 0 for p in row):
            raise ValueError(f"transition matrix row {i} has a negative entry")


def is_irreducible(rows):
    """Strong connectivity of the positive-entry digraph."""
    n = len(rows)

    def reachable(start, forward):
        seen = {start}
        stack = [start]
        while stack:
            i = stack.pop()
            for j in range(n):
                edge = rows[i][j] if forward else rows[j][i]
                if edge > 0 and j not in seen:
                    seen.add(j)
                    stack.append(j)
        return seen

    return len(reachable(0, True)) == n and len(reachable(0, False)) == n


def stationary_distribution(rows):
    """Exact stationary distribution of a row-stochastic matrix.

    Solves pi P = pi with sum(pi) = 1 by rational Gaussian elimination.
    Raises ValueError when the chain is reducible (no unique solution).
    """
    rows = [[as_fraction(p) for p in row] for row in rows]
    n = len(rows)
    if any(len(row) != n for row in rows):
        raise ValueError("transition matrix must be square")
    check_rows_stochastic(rows)
    if not is_irreducible(rows):
        raise ValueError("no unique stationary distribution: chain is reducible")
    if n == 1:
        return (Fraction(1),)

    # Unknowns pi_0..pi_{n-1}: equations (P^T - I) pi = 0 for columns 0..n-2,
    # plus sum(pi) = 1.
    a = []
    for j in range(n - 1):
        a.append([rows[i][j] - (1 if i == j else 0) for i in range(n)] + [Fraction(0)])
    a.append([Fraction(1)] * n + [Fraction(1)])

    for col in range(n):
        pivot = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [v - factor * w for v, w in zip(a[r], a[col])]
    return tuple(a[i][n] for i in range(n))


def step_state(rows, state, u):
    """Advance one step given a uniform draw u in [0, 1)."""
    acc = 0.0
    row = rows[state]
    for j, p in enumerate(row):
        acc += float(p)
        if u < acc:
            return j
    return len(row) - 1


def sample_distribution(weights, u):
    """Index drawn from a finite distribution given a uniform u."""
    acc = 0.0
    for j, p in enumerate(weights):
        acc += float(p)
        if u < acc:
            return j
    return len(weights) - 1
