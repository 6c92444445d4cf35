"""Run configuration, the model/distance compatibility matrix and
content fingerprints."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from normsurprise.distances import KINDS, canonical_kind
from normsurprise.errors import UsageError
from normsurprise.recommenders import ALGORITHMS

MODELS = ("C", "P", "U", "N")
MODES = ("sampled", "exhaustive")

_COMPOSITIONAL = ("jaccard", "jensen_shannon", "aitchison")

COMPATIBLE = {
    "C": ("euclidean", "cosine") + _COMPOSITIONAL,
    "P": ("euclidean", "cosine"),
    "U": ("euclidean", "cosine") + _COMPOSITIONAL,
    "N": ("npmi",),
}


def check_compatibility(model: str, distance: str) -> None:
    """Raise :class:`UsageError` naming the rule a model/distance pair breaks."""
    model = model.upper()
    if model not in MODELS:
        raise UsageError(f"unknown model {model!r}; expected one of {', '.join(MODELS)}")
    try:
        kind = canonical_kind(distance)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if kind in COMPATIBLE[model]:
        return
    if kind == "npmi":
        raise UsageError("the npmi distance requires an NPMI score model (model N)")
    if model == "N":
        raise UsageError("model N is an NPMI score model and admits only the npmi distance")
    if kind in _COMPOSITIONAL:
        raise UsageError(
            f"{kind} requires compositional data and can only be applied to vectors "
            "from models C and U"
        )
    raise UsageError(f"distance {kind} is not available for model {model}")


def compatible_pairs() -> list[tuple[str, str]]:
    return [(m, d) for m in MODELS for d in KINDS if d in COMPATIBLE[m]]


@dataclass(frozen=True)
class RunConfig:
    ratings_path: str | None = None
    descriptions_path: str | None = None
    vectors_path: str | None = None
    stopwords_path: str | None = None
    ratings_format: str | None = None
    model: str = "C"
    distance: str = "cosine"
    algorithm: str = "knn"
    top_n: int = 10
    sample_size: int = 1000
    k: int = 50
    frame_size: int = 1500
    min_common_users: int = 30
    seed: int = 0
    mode: str = "sampled"
    threads: int = 1
    output_dir: str = "out"

    def __post_init__(self):
        object.__setattr__(self, "model", self.model.upper())
        try:
            object.__setattr__(self, "distance", canonical_kind(self.distance))
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def validate(self) -> "RunConfig":
        check_compatibility(self.model, self.distance)
        if self.algorithm not in ALGORITHMS:
            raise UsageError(f"algorithm must be one of {', '.join(ALGORITHMS)}")
        if self.mode not in MODES:
            raise UsageError(f"mode must be one of {', '.join(MODES)}")
        for name in ("top_n", "sample_size", "k", "frame_size", "min_common_users", "threads"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name.replace('_', '-')} must be a positive integer")
        if self.top_n > self.sample_size:
            raise UsageError("top-n cannot exceed sample-size")
        if not self.ratings_path:
            raise UsageError("a ratings file is required")
        if self.model == "C" and not self.descriptions_path:
            raise UsageError("model C needs a descriptions file")
        if self.model == "P" and not self.vectors_path:
            raise UsageError("model P needs a dense-vector file")
        return self

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_INT_FIELDS = {n for n, t in FIELD_TYPES.items() if t == "int"}


def coerce(name: str, value: str):
    name = name.strip().replace("-", "_")
    if name not in FIELD_TYPES:
        raise UsageError(f"unknown configuration key {name!r}")
    value = value.strip()
    if name in _INT_FIELDS:
        try:
            return name, int(value)
        except ValueError:
            raise UsageError(f"{name} must be an integer, got {value!r}") from None
    return name, value


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        name, parsed = coerce(key, value)
        values[name] = parsed
    return values


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# output location and parallelism never change results
_NOT_FINGERPRINTED = {"threads", "output_dir"}
_PATH_FIELDS = ("ratings_path", "descriptions_path", "vectors_path", "stopwords_path")


def input_digests(config: RunConfig) -> dict:
    return {
        name: file_digest(getattr(config, name)) if getattr(config, name) else None
        for name in _PATH_FIELDS
    }


def fingerprint(config: RunConfig, digests: dict | None = None) -> str:
    digests = input_digests(config) if digests is None else digests
    fields = {
        k: v
        for k, v in dataclasses.asdict(config).items()
        if k not in _NOT_FINGERPRINTED and k not in _PATH_FIELDS
    }
    payload = json.dumps({"config": fields, "inputs": digests}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def matrix_fingerprint(config: RunConfig, digests: dict | None = None) -> str:
    """Identity of the distance matrix: representation inputs + model + distance."""
    digests = input_digests(config) if digests is None else digests
    relevant = {"ratings_path": digests["ratings_path"], "ratings_format": config.ratings_format}
    if config.model == "C":
        relevant["descriptions_path"] = digests["descriptions_path"]
        relevant["stopwords_path"] = digests["stopwords_path"]
    elif config.model == "P":
        relevant["vectors_path"] = digests["vectors_path"]
    payload = json.dumps(
        {"model": config.model, "distance": config.distance, "inputs": relevant}, sort_keys=True
    )
    return hashlib.sha256(payload.encode()).hexdigest()
