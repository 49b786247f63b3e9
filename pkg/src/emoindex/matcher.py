"""Multi-pattern substring search.

``AhoCorasick`` reports which labels have at least one pattern occurring in a
text, scanning the text once. ``naive_match`` is the nested-loop reference the
automaton must agree with.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable


class AhoCorasick:
    """Character-level Aho-Corasick automaton mapping patterns to labels.

    Several patterns may share one label (a head word and its spelling
    variants); ``labels_in`` returns each label at most once.
    """

    def __init__(self) -> None:
        self._goto: list[dict[str, int]] = [{}]
        self._fail: list[int] = [0]
        self._out: list[frozenset[str]] = [frozenset()]
        self._pending: list[set[str]] = [set()]
        self._built = False

    def add(self, pattern: str, label: str) -> None:
        if not pattern:
            raise ValueError("empty pattern")
        node = 0
        for ch in pattern:
            nxt = self._goto[node].get(ch)
            if nxt is None:
                nxt = len(self._goto)
                self._goto[node][ch] = nxt
                self._goto.append({})
                self._fail.append(0)
                self._pending.append(set())
            node = nxt
        self._pending[node].add(label)
        self._built = False

    def build(self) -> None:
        n = len(self._goto)
        out: list[set[str]] = [set(s) for s in self._pending]
        fail = [0] * n
        queue = deque(self._goto[0].values())
        while queue:
            node = queue.popleft()
            for ch, child in self._goto[node].items():
                if node:
                    f = fail[node]
                    while f and ch not in self._goto[f]:
                        f = fail[f]
                    fail[child] = self._goto[f].get(ch, 0)
                # BFS order guarantees the fail target's output is already complete
                out[child] |= out[fail[child]]
                queue.append(child)
        self._fail = fail
        self._out = [frozenset(s) for s in out]
        self._built = True

    def labels_in(self, text: str) -> set[str]:
        if not self._built:
            raise RuntimeError("build() must be called after adding patterns")
        goto, fail, out = self._goto, self._fail, self._out
        found: set[str] = set()
        node = 0
        for ch in text:
            while node and ch not in goto[node]:
                node = fail[node]
            node = goto[node].get(ch, 0)
            if out[node]:
                found |= out[node]
        return found


def naive_match(text: str, patterns: Iterable[tuple[str, str]]) -> set[str]:
    """Labels whose pattern occurs in ``text``, by direct substring test."""
    return {label for pattern, label in patterns if pattern in text}
