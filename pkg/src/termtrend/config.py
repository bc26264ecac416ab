"""Pipeline configuration: one declarative JSON file plus CLI overrides.

Precedence is flags > file > defaults. The resolved configuration is hashed
and stamped (with the seed) into every output header so artifacts stay
traceable to the run that produced them.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

from . import __version__
from .dtm import DtmConfig
from .termextract import PATENT_STOP_WORDS, StopWordPolicy


@dataclass(frozen=True)
class PipelineConfig:
    corpus_path: str | None = None
    revision_path: str | None = None
    output_dir: str = "out"
    slice_by: str = "year"                 # year | quarter | month
    separator: str = " "
    token_mode: str = "auto"               # auto | tagged | all-nouns
    stop_words: tuple[str, ...] = PATENT_STOP_WORDS
    drop_symbols: bool = True
    drop_numbers: bool = True
    drop_single_latin_letters: bool = True
    high_frequency_cutoff: int = 10_000
    low_frequency_floor: int = 100
    revision_frequency_floor: int = 1
    topics: int = 20
    em_iters: int = 20
    alpha: float = 0.1
    chain_variance: float = 0.005
    obs_variance: float = 0.5
    converge_tol: float = 1e-4
    seed: int = 0
    top_terms: int = 100
    eval_ns: tuple[int, ...] = (10, 50, 100)

    def __post_init__(self) -> None:
        if self.top_terms < 1:
            raise ValueError("top_terms must be >= 1")
        if not self.eval_ns or list(self.eval_ns) != sorted(set(self.eval_ns)):
            raise ValueError("eval_ns must be strictly increasing")
        if self.token_mode not in ("auto", "tagged", "all-nouns"):
            raise ValueError(f"unknown token_mode {self.token_mode!r}")

    def stopword_policy(self, for_revisions: bool = False) -> StopWordPolicy:
        floor = self.revision_frequency_floor if for_revisions else self.low_frequency_floor
        return StopWordPolicy(
            literal_stops=frozenset(self.stop_words),
            drop_symbols=self.drop_symbols,
            drop_numbers=self.drop_numbers,
            drop_single_latin_letters=self.drop_single_latin_letters,
            high_frequency_cutoff=self.high_frequency_cutoff,
            low_frequency_floor=floor,
        )

    def dtm_config(self) -> DtmConfig:
        return DtmConfig(
            n_topics=self.topics,
            max_em_iters=self.em_iters,
            alpha=self.alpha,
            chain_variance=self.chain_variance,
            obs_variance=self.obs_variance,
            converge_tol=self.converge_tol,
            seed=self.seed,
        )

    def config_hash(self) -> str:
        """Hash of the analysis parameters; file locations are excluded so the
        same analysis hashes identically wherever inputs and outputs live."""
        payload = dataclasses.asdict(self)
        for volatile in ("corpus_path", "revision_path", "output_dir"):
            payload.pop(volatile)
        encoded = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(encoded.encode("utf-8")).hexdigest()[:12]

    def header_lines(self) -> list[str]:
        return [f"termtrend={__version__} seed={self.seed} config={self.config_hash()}"]


_TUPLE_FIELDS = {"stop_words", "eval_ns"}


def load_pipeline_config(path: str | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Build a config from defaults, an optional JSON file, and overrides."""
    merged: dict = {}
    if path is not None:
        if not os.path.exists(path):
            raise FileNotFoundError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        merged.update(data)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})

    valid = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(merged) - valid
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in _TUPLE_FIELDS & set(merged):
        merged[key] = tuple(merged[key])
    return PipelineConfig(**merged)
