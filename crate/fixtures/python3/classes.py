import functools
from typing import List, Optional


class Stack:
    """A tiny stack."""

    def __init__(self, items: Optional[List[int]] = None) -> None:
        self.items = list(items or [])

    @property
    def top(self):
        return self.items[-1] if self.items else None

    def push(self, *values, **kw):
        for v in values:
            self.items.append(v)
        return self


def total(xs):
    acc = 0
    for x in xs:
        if x % 2 == 0 and x > 0:
            acc += x ** 2
        elif x < 0:
            continue
        else:
            acc -= 1
    return acc
