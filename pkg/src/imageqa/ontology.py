"""Rooted concept taxonomy with depth, least-common-ancestor, and
Wu-Palmer similarity, plus the word-to-concept lexicon.

File formats are tab separated: taxonomy lines are ``concept<TAB>parent``
with ``-`` marking the single root, lexicon lines are
``word<TAB>concept[,concept...]``.
"""

from __future__ import annotations

from collections import deque
from typing import Mapping

from .errors import FormatError
from .textpipe import _read_text


class Taxonomy:
    """A tree of concepts; the root has depth 1."""

    def __init__(self, parent: Mapping[str, str | None], _lines: Mapping[str, int] | None = None):
        lines = dict(_lines or {})

        def where(concept: str) -> str:
            return f" (line {lines[concept]})" if concept in lines else ""

        self.parent: dict[str, str] = {}
        root = None
        for concept, par in parent.items():
            if par is None or par == concept:
                if root is not None:
                    raise FormatError(
                        f"second root '{concept}'{where(concept)}; a taxonomy has one"
                    )
                root = concept
                self.parent[concept] = concept
            else:
                self.parent[concept] = par
        if root is None:
            raise FormatError("taxonomy has no root")
        for concept, par in self.parent.items():
            if par not in self.parent:
                raise FormatError(
                    f"unknown parent '{par}' of '{concept}'{where(concept)}"
                )

        # walk down from the root; anything unreachable sits on a cycle
        children: dict[str, list[str]] = {c: [] for c in self.parent}
        for concept, par in self.parent.items():
            if concept != root:
                children[par].append(concept)
        self.root = root
        self._depth: dict[str, int] = {root: 1}
        queue = deque([root])
        while queue:
            node = queue.popleft()
            for child in children[node]:
                self._depth[child] = self._depth[node] + 1
                queue.append(child)
        if len(self._depth) != len(self.parent):
            lost = min(set(self.parent) - set(self._depth))
            raise FormatError(f"cycle through concept '{lost}'{where(lost)}")

    def __contains__(self, concept: str) -> bool:
        return concept in self.parent

    def __len__(self) -> int:
        return len(self.parent)

    @property
    def concepts(self) -> set[str]:
        return set(self.parent)

    def _require(self, concept: str) -> None:
        if concept not in self.parent:
            raise KeyError(f"concept '{concept}' is not in the taxonomy")

    def depth(self, concept: str) -> int:
        self._require(concept)
        return self._depth[concept]

    def lca(self, a: str, b: str) -> str:
        """Deepest concept lying on both root chains (each chain includes
        the concept itself)."""
        self._require(a)
        self._require(b)
        da, db = self._depth[a], self._depth[b]
        while da > db:
            a = self.parent[a]
            da -= 1
        while db > da:
            b = self.parent[b]
            db -= 1
        while a != b:
            a = self.parent[a]
            b = self.parent[b]
        return a

    def wup(self, a: str, b: str) -> float:
        """2 * depth(lca) / (depth(a) + depth(b)); 1.0 exactly when a == b."""
        anc = self.lca(a, b)
        return 2.0 * self._depth[anc] / (self._depth[a] + self._depth[b])


def parse_taxonomy(source) -> Taxonomy:
    parent: dict[str, str | None] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(_read_text(source).split("\n"), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"taxonomy line {lineno} is not 'concept<TAB>parent'")
        concept, par = parts[0].strip(), parts[1].strip()
        if not concept or not par:
            raise FormatError(f"taxonomy line {lineno} has an empty field")
        if concept in parent:
            raise FormatError(f"taxonomy line {lineno} redefines '{concept}'")
        parent[concept] = None if par == "-" else par
        lines[concept] = lineno
    return Taxonomy(parent, _lines=lines)


class Lexicon:
    """Maps a word to its concept senses; words may be absent entirely."""

    def __init__(self, senses: Mapping[str, list[str]]):
        self._senses = {w: list(cs) for w, cs in senses.items()}

    def __contains__(self, word: str) -> bool:
        return word in self._senses

    def __len__(self) -> int:
        return len(self._senses)

    def senses(self, word: str) -> list[str] | None:
        got = self._senses.get(word)
        return list(got) if got is not None else None


def parse_lexicon(source, taxonomy: Taxonomy) -> Lexicon:
    senses: dict[str, list[str]] = {}
    for lineno, line in enumerate(_read_text(source).split("\n"), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"lexicon line {lineno} is not 'word<TAB>concepts'")
        word = parts[0].strip()
        concepts = [c.strip() for c in parts[1].split(",") if c.strip()]
        if not word or not concepts:
            raise FormatError(f"lexicon line {lineno} has an empty field")
        if word in senses:
            raise FormatError(f"lexicon line {lineno} repeats word '{word}'")
        for concept in concepts:
            if concept not in taxonomy:
                raise FormatError(
                    f"lexicon line {lineno} names unknown concept '{concept}'"
                )
        senses[word] = concepts
    return Lexicon(senses)


def word_wup(word_a: str, word_b: str, lexicon: Lexicon, taxonomy: Taxonomy) -> float:
    """Best Wu-Palmer similarity over all sense pairs of the two words.

    Words missing from the lexicon fall back to exact string comparison:
    1.0 on equality, 0.0 otherwise.
    """
    sa = lexicon.senses(word_a)
    sb = lexicon.senses(word_b)
    if sa is None or sb is None:
        return 1.0 if word_a == word_b else 0.0
    return max(taxonomy.wup(ca, cb) for ca in sa for cb in sb)
