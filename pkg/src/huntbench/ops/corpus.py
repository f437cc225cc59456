"""Local advisory corpus with lexical (token-overlap) retrieval."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

_TOKEN_RE = re.compile(r"[a-z0-9][a-z0-9._-]*")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class EmptyCorpusError(ValueError):
    pass


@dataclass
class CorpusIndex:
    """JSON Lines document store with TF-IDF-weighted overlap scoring."""

    documents: dict[str, str] = field(default_factory=dict)

    def add(self, doc_id: str, text: str) -> None:
        self.documents[doc_id] = text

    def __len__(self) -> int:
        return len(self.documents)

    def rank(self, query: str, top_n: int = 5) -> list[tuple[str, float]]:
        if not self.documents:
            raise EmptyCorpusError("corpus index is empty")
        q_tokens = set(tokenize(query))
        n_docs = len(self.documents)
        doc_freq: dict[str, int] = {}
        doc_tokens = {doc_id: set(tokenize(text)) for doc_id, text in self.documents.items()}
        for tokens in doc_tokens.values():
            for tok in tokens:
                doc_freq[tok] = doc_freq.get(tok, 0) + 1
        scored = []
        for doc_id, tokens in doc_tokens.items():
            score = sum(
                math.log(1 + n_docs / doc_freq[tok])
                for tok in q_tokens & tokens
            )
            scored.append((doc_id, score))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return scored[:top_n]

    # -- persistence --------------------------------------------------------
    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for doc_id in sorted(self.documents):
                fh.write(json.dumps({"id": doc_id, "text": self.documents[doc_id]},
                                    sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str) -> "CorpusIndex":
        index = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    index.add(rec["id"], rec["text"])
        return index
