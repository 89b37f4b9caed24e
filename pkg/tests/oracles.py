"""Independent edit-distance oracles shared by several test modules.

Both are direct transcriptions of the defining recurrence, kept
deliberately separate from the two-row implementation under test.
"""


def recurrence_distance(a: str, b: str) -> int:
    """Defining recurrence, verbatim: lev(i, j) over prefix lengths.

    Exponential; only usable for very short strings.
    """

    def lev(i: int, j: int) -> int:
        if min(i, j) == 0:
            return max(i, j)
        cost = 0 if a[i - 1] == b[j - 1] else 1
        return min(lev(i - 1, j) + 1, lev(i, j - 1) + 1, lev(i - 1, j - 1) + cost)

    return lev(len(a), len(b))


def memo_recurrence_distance(a: str, b: str) -> int:
    """Same recurrence with memoized subproblems, for larger sweeps."""
    memo: dict[tuple[int, int], int] = {}

    def lev(i: int, j: int) -> int:
        if min(i, j) == 0:
            return max(i, j)
        key = (i, j)
        if key not in memo:
            cost = 0 if a[i - 1] == b[j - 1] else 1
            memo[key] = min(lev(i - 1, j) + 1, lev(i, j - 1) + 1, lev(i - 1, j - 1) + cost)
        return memo[key]

    return lev(len(a), len(b))
