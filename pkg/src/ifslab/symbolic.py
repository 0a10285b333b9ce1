"""Finite and eventually periodic words over the alphabet {1, ..., m}."""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, EqualWords

Word = tuple[int, ...]

DEFAULT_BUDGET = 2**24


def cylinder_budget() -> int:
    """Maximum number of cylinders a single call may enumerate.

    Read from the ``IFSLAB_BUDGET`` environment variable when set.
    """
    raw = os.environ.get("IFSLAB_BUDGET")
    if raw is None or raw.strip() == "":
        return DEFAULT_BUDGET
    return int(raw)


def check_budget(m: int, n: int, budget: int | None = None) -> int:
    """Return ``m**n`` or raise BudgetExceeded when it is over budget."""
    limit = cylinder_budget() if budget is None else budget
    count = m**n
    if count > limit:
        raise BudgetExceeded(f"{m}^{n} = {count} cylinders exceeds budget {limit}")
    return count


def max_depth(m: int, budget: int | None = None) -> int:
    """Largest n with m**n within budget."""
    limit = cylinder_budget() if budget is None else budget
    n = 0
    while m ** (n + 1) <= limit:
        n += 1
    return n


def as_word(symbols, m: int | None = None) -> Word:
    w = tuple(int(s) for s in symbols)
    for s in w:
        if s < 1 or (m is not None and s > m):
            raise ValueError(f"symbol {s} outside alphabet 1..{m}")
    return w


def _primitive_root(period: Word) -> Word:
    n = len(period)
    for d in range(1, n + 1):
        if n % d == 0 and period[:d] * (n // d) == period:
            return period[:d]
    return period


@dataclass(frozen=True)
class EventuallyPeriodicWord:
    """The infinite word ``preperiod`` followed by ``period`` repeated forever.

    The representation is canonical: the period is primitive and the
    preperiod is as short as possible, so two instances are equal exactly
    when they describe the same infinite word.
    """

    preperiod: Word
    period: Word

    def __post_init__(self):
        pre = as_word(self.preperiod)
        per = as_word(self.period)
        if not per:
            raise ValueError("period must be nonempty")
        per = _primitive_root(per)
        while pre and pre[-1] == per[-1]:
            per = (pre[-1],) + per[:-1]
            pre = pre[:-1]
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    @classmethod
    def periodic(cls, period) -> EventuallyPeriodicWord:
        return cls((), tuple(period))

    def symbol(self, index: int) -> int:
        """Symbol at 0-based position ``index``."""
        if index < len(self.preperiod):
            return self.preperiod[index]
        return self.period[(index - len(self.preperiod)) % len(self.period)]

    def max_symbol(self) -> int:
        return max(self.preperiod + self.period)

    def __str__(self):
        pre = ",".join(map(str, self.preperiod))
        per = ",".join(map(str, self.period))
        return f"{pre}({per})"


def prefix(w: EventuallyPeriodicWord, n: int) -> Word:
    """First ``n`` symbols of the unrolled word."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    pre, per = w.preperiod, w.period
    if n <= len(pre):
        return pre[:n]
    rest = n - len(pre)
    reps = -(-rest // len(per))
    return pre + (per * reps)[:rest]


def common_prefix(i: EventuallyPeriodicWord, j: EventuallyPeriodicWord) -> Word:
    """Longest common prefix of two distinct infinite words."""
    if i == j:
        raise EqualWords(f"{i} and {j} are the same word")
    # distinct eventually periodic words differ before this position
    horizon = max(len(i.preperiod), len(j.preperiod)) + math.lcm(len(i.period), len(j.period))
    a, b = prefix(i, horizon), prefix(j, horizon)
    k = 0
    while a[k] == b[k]:
        k += 1
    return a[:k]


def shift(i: EventuallyPeriodicWord) -> EventuallyPeriodicWord:
    """Drop the first symbol."""
    if i.preperiod:
        return EventuallyPeriodicWord(i.preperiod[1:], i.period)
    return EventuallyPeriodicWord((), i.period[1:] + i.period[:1])


def shift_n(i: EventuallyPeriodicWord, n: int) -> EventuallyPeriodicWord:
    if n <= len(i.preperiod):
        return EventuallyPeriodicWord(i.preperiod[n:], i.period)
    r = (n - len(i.preperiod)) % len(i.period)
    return EventuallyPeriodicWord((), i.period[r:] + i.period[:r])


def enumerate_words(m: int, n: int, budget: int | None = None) -> list[Word]:
    """All words of length ``n`` over {1..m} in lexicographic order."""
    if m < 1 or n < 0:
        raise ValueError("need m >= 1 and n >= 0")
    check_budget(m, n, budget)
    return list(itertools.product(range(1, m + 1), repeat=n))


def word_array(m: int, n: int, budget: int | None = None) -> np.ndarray:
    """Words of length ``n`` as rows of an integer array, lexicographic order."""
    count = check_budget(m, n, budget)
    idx = np.arange(count)
    out = np.empty((count, n), dtype=np.int64)
    for pos in range(n):
        out[:, pos] = (idx // m ** (n - 1 - pos)) % m + 1
    return out


def word_index(w, m: int) -> int:
    """Position of a finite word in the lexicographic enumeration of its length."""
    k = 0
    for s in w:
        k = k * m + (s - 1)
    return k


def index_word(k: int, m: int, n: int) -> Word:
    out = []
    for _ in range(n):
        k, r = divmod(k, m)
        out.append(r + 1)
    return tuple(reversed(out))
