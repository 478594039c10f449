"""JSON run configuration.

Schema (all sections optional except where noted)::

    {
      "dataset": {"name": "sbm", "sbm": {"n": 300, "blocks": 3, "p_in": 0.1,
                                         "p_out": 0.01, "feature_noise": 0.5}}
                 or {"name": "cora", "edges": "...", "features": "...", "labels": "..."},
      "train":   {<TrainConfig field>: value, ...},
      "eval":    {"seeds": [0, 1, 2, 3, 4], "tasks": ["classification", "clustering"]},
      "out":     "runs/default"
    }

Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .data import DatasetSpec, SBMParams
from .trainer import TrainConfig

TASKS = ("classification", "clustering")


class ConfigError(ValueError):
    pass


@dataclass
class EvalConfig:
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    tasks: list = field(default_factory=lambda: list(TASKS))

    def __post_init__(self):
        self.seeds = [int(s) for s in self.seeds]
        self.tasks = list(self.tasks)
        if not self.seeds:
            raise ValueError("eval.seeds must not be empty")
        for t in self.tasks:
            if t not in TASKS:
                raise ValueError(f"unknown task {t!r}")


@dataclass
class RunConfig:
    dataset: DatasetSpec = field(default_factory=lambda: DatasetSpec(sbm=SBMParams()))
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    out: str = "runs/default"

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset.to_dict(),
            "train": self.train.to_dict(),
            "eval": dataclasses.asdict(self.eval),
            "out": self.out,
        }

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(d) - {"dataset", "train", "eval", "out"}
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            kwargs = {}
            if "dataset" in d:
                ds = d["dataset"]
                extra = set(ds) - {"name", "edges", "features", "labels", "sbm"}
                if extra:
                    raise ConfigError(f"unknown dataset keys: {sorted(extra)}")
                kwargs["dataset"] = DatasetSpec.from_dict(ds)
            if "train" in d:
                kwargs["train"] = TrainConfig(**d["train"])
            if "eval" in d:
                kwargs["eval"] = EvalConfig(**d["eval"])
            if "out" in d:
                kwargs["out"] = str(d["out"])
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> RunConfig:
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text)

    def with_train(self, **changes) -> RunConfig:
        try:
            train = dataclasses.replace(self.train, **changes)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return dataclasses.replace(self, train=train)
