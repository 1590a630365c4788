"""A bank of per-source dictionaries with instrumented access.

The bank maps speaker and noise-type labels to learned dictionaries and keeps
a shared access counter per source.  Restricted views (with some sources
removed) share the parent's counters, so a test can run a pipeline on a view
and then assert that the removed sources were never consulted.
"""

from __future__ import annotations

import hashlib
import json
from typing import Iterable, Mapping

import numpy as np

from .dictionary import LearnedDictionary
from .errors import DataError

__all__ = ["DictionaryBank"]


class DictionaryBank:
    """Speaker and noise dictionaries, access-counted and serialisable."""

    def __init__(
        self,
        speakers: Mapping[str, LearnedDictionary],
        noises: Mapping[str, LearnedDictionary],
        *,
        method: str,
        params: Mapping[str, object] | None = None,
        feature_params: Mapping[str, object] | None = None,
        _counters: dict[tuple[str, str], int] | None = None,
    ) -> None:
        self._speakers = dict(speakers)
        self._noises = dict(noises)
        self.method = method
        self.params = dict(params or {})
        self.feature_params = dict(feature_params or {})
        self.access_counts: dict[tuple[str, str], int] = (
            _counters if _counters is not None else {}
        )
        for label in self._speakers:
            self.access_counts.setdefault(("speaker", label), 0)
        for label in self._noises:
            self.access_counts.setdefault(("noise", label), 0)

    # -- lookup ---------------------------------------------------------------

    @property
    def speaker_labels(self) -> tuple[str, ...]:
        return tuple(sorted(self._speakers))

    @property
    def noise_labels(self) -> tuple[str, ...]:
        return tuple(sorted(self._noises))

    def get_speaker(self, label: str) -> LearnedDictionary:
        if label not in self._speakers:
            raise KeyError(f"speaker {label!r} not in bank")
        self.access_counts[("speaker", label)] += 1
        return self._speakers[label]

    def get_noise(self, label: str) -> LearnedDictionary:
        if label not in self._noises:
            raise KeyError(f"noise {label!r} not in bank")
        self.access_counts[("noise", label)] += 1
        return self._noises[label]

    def concatenated(
        self,
        speaker_labels: Iterable[str] = (),
        noise_labels: Iterable[str] = (),
    ) -> tuple[np.ndarray, list[tuple[str, str, slice]]]:
        """Stack the requested dictionaries into one atom matrix.

        Returns the matrix and a list of ``(kind, label, column_slice)``
        giving each source's block of columns.
        """
        blocks: list[np.ndarray] = []
        groups: list[tuple[str, str, slice]] = []
        start = 0
        for label in speaker_labels:
            atoms = self.get_speaker(label).atoms
            blocks.append(atoms)
            groups.append(("speaker", label, slice(start, start + atoms.shape[1])))
            start += atoms.shape[1]
        for label in noise_labels:
            atoms = self.get_noise(label).atoms
            blocks.append(atoms)
            groups.append(("noise", label, slice(start, start + atoms.shape[1])))
            start += atoms.shape[1]
        if not blocks:
            raise ValueError("no dictionaries requested")
        return np.concatenate(blocks, axis=1), groups

    # -- derived banks --------------------------------------------------------

    def restricted(
        self,
        exclude_speakers: Iterable[str] = (),
        exclude_noises: Iterable[str] = (),
    ) -> "DictionaryBank":
        """View without the given sources; shares this bank's access counters."""
        ex_s = set(exclude_speakers)
        ex_n = set(exclude_noises)
        return DictionaryBank(
            {k: v for k, v in self._speakers.items() if k not in ex_s},
            {k: v for k, v in self._noises.items() if k not in ex_n},
            method=self.method,
            params=self.params,
            feature_params=self.feature_params,
            _counters=self.access_counts,
        )

    def with_replaced(
        self, kind: str, label: str, replacement: LearnedDictionary
    ) -> "DictionaryBank":
        """Copy of the bank with one source dictionary replaced or added."""
        speakers = dict(self._speakers)
        noises = dict(self._noises)
        if kind == "speaker":
            speakers[label] = replacement
        elif kind == "noise":
            noises[label] = replacement
        else:
            raise ValueError("kind must be 'speaker' or 'noise'")
        return DictionaryBank(
            speakers,
            noises,
            method=self.method,
            params=self.params,
            feature_params=self.feature_params,
            _counters=self.access_counts,
        )

    # -- serialisation --------------------------------------------------------

    def save(self, path) -> None:
        arrays: dict[str, np.ndarray] = {}
        for kind, table in (("speaker", self._speakers), ("noise", self._noises)):
            for label, d in table.items():
                arrays[f"{kind}/{label}/atoms"] = d.atoms
                arrays[f"{kind}/{label}/appended"] = d.appended
        meta = {
            "format": "sparsescene-bank",
            "version": 1,
            "method": self.method,
            "params": self.params,
            "feature_params": self.feature_params,
            "speakers": sorted(self._speakers),
            "noises": sorted(self._noises),
            "dict_methods": {
                f"{kind}/{label}": d.method
                for kind, table in (("speaker", self._speakers), ("noise", self._noises))
                for label, d in table.items()
            },
        }
        arrays["meta"] = np.frombuffer(
            json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8
        )
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> "DictionaryBank":
        try:
            data = np.load(path, allow_pickle=False)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot read dictionary bank {path}: {exc}") from exc
        try:
            meta = json.loads(bytes(data["meta"]).decode("utf-8"))
            if meta.get("format") != "sparsescene-bank":
                raise KeyError("format")
            speakers = {
                label: LearnedDictionary(
                    atoms=np.asarray(data[f"speaker/{label}/atoms"], dtype=np.float64),
                    method=meta["dict_methods"][f"speaker/{label}"],
                    appended=np.asarray(data[f"speaker/{label}/appended"], dtype=bool),
                )
                for label in meta["speakers"]
            }
            noises = {
                label: LearnedDictionary(
                    atoms=np.asarray(data[f"noise/{label}/atoms"], dtype=np.float64),
                    method=meta["dict_methods"][f"noise/{label}"],
                    appended=np.asarray(data[f"noise/{label}/appended"], dtype=bool),
                )
                for label in meta["noises"]
            }
        except KeyError as exc:
            raise DataError(f"{path} is not a valid dictionary bank") from exc
        return cls(
            speakers,
            noises,
            method=meta["method"],
            params=meta.get("params", {}),
            feature_params=meta.get("feature_params", {}),
        )

    def content_hash(self) -> str:
        """Stable digest of the bank's dictionaries and parameters."""
        h = hashlib.sha256()
        h.update(
            json.dumps(
                {
                    "method": self.method,
                    "params": self.params,
                    "feature_params": self.feature_params,
                },
                sort_keys=True,
            ).encode("utf-8")
        )
        for kind, table in (("speaker", self._speakers), ("noise", self._noises)):
            for label in sorted(table):
                d = table[label]
                h.update(f"{kind}/{label}/{d.method}".encode("utf-8"))
                h.update(np.ascontiguousarray(d.atoms).tobytes())
                h.update(np.ascontiguousarray(d.appended).tobytes())
        return h.hexdigest()
