"""On-disk guideline store: one JSON document per version."""
from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import replace
from datetime import datetime, timedelta
from pathlib import Path

from ..errors import CorruptStore, NotFound
from .guideline import Guideline

_FIELDS = ("version", "text", "iteration", "sources", "reflector_model", "created_at", "selection", "parent")


def _checksum(doc):
    body = {k: doc[k] for k in _FIELDS}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


class GuidelineStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _paths(self):
        return sorted(self.root.glob("g*.json"))

    def _read(self, path) -> Guideline:
        try:
            doc = json.loads(path.read_text())
        except (OSError, ValueError) as exc:
            raise CorruptStore(f"{path}: {exc}") from exc
        if doc.get("checksum") != _checksum(doc):
            raise CorruptStore(f"{path}: checksum mismatch")
        return Guideline(doc["text"], doc["iteration"], tuple(doc["sources"]), doc["reflector_model"],
                         doc["created_at"], doc["selection"], doc["parent"], doc["version"])

    def save(self, guideline: Guideline) -> Guideline:
        """Persist ``guideline`` under a fresh version id and return it with that id set."""
        with self._lock:
            paths = self._paths()
            seq = int(paths[-1].stem[1:]) + 1 if paths else 0
            created = guideline.created_at
            if paths:
                last = self._read(paths[-1]).created_at
                if created <= last:
                    bumped = datetime.fromisoformat(last) + timedelta(microseconds=1)
                    created = bumped.isoformat(timespec="microseconds")
            g = replace(guideline, version=f"{seq:04d}", created_at=created)
            doc = {
                "version": g.version,
                "text": g.text,
                "iteration": g.iteration,
                "sources": [list(s) if isinstance(s, tuple) else s for s in g.sources],
                "reflector_model": g.reflector_model,
                "created_at": g.created_at,
                "selection": g.selection,
                "parent": g.parent,
                "word_count": g.word_count,
            }
            doc["checksum"] = _checksum(doc)
            path = self.root / f"g{g.version}.json"
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
            os.replace(tmp, path)
            return g

    def all(self) -> list:
        return [self._read(p) for p in self._paths()]

    def load(self, version=None) -> Guideline:
        """A specific version, or the latest (max iteration, then newest)."""
        if version is None or version == "latest":
            items = self.all()
            if not items:
                raise NotFound(f"guideline store {self.root} is empty")
            return max(items, key=lambda g: (g.iteration, g.created_at, g.version))
        path = self.root / f"g{version}.json"
        if not path.exists():
            raise NotFound(f"no guideline version {version} in {self.root}")
        return self._read(path)

    def list(self) -> list:
        return [
            {"version": g.version, "iteration": g.iteration, "word_count": g.word_count,
             "sources": len(g.sources), "selection": g.selection, "created_at": g.created_at}
            for g in self.all()
        ]

    def ancestry(self, version) -> list:
        """``version`` followed by its parents back to iteration 0."""
        chain = [self.load(version)]
        while chain[-1].parent is not None:
            chain.append(self.load(chain[-1].parent))
        return chain
