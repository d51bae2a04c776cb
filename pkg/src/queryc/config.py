"""Runtime configuration for commands that talk to backends.

One JSON document configures everything:

    {
      "endpoint": "https://llm.example/v1/chat/completions",
      "model": "my-model",
      "api_key": "...",
      "retriever_endpoint": "https://search.example/retrieve",
      "corpus": "corpus.jsonl",
      "k": 3,
      "parallelism": 4,
      "schedule": {"temperatures": [0.0, 0.3, 0.7, 1.0],
                   "attempts_per_temperature": 2,
                   "request_timeout": 60.0},
      "prompts": {"leaf_answer": "my_leaf_prompt.txt"}
    }

Environment variables QC_ENDPOINT, QC_MODEL and QC_API_KEY override the
file.  Prompt overrides map bundled template names to files whose text
replaces the bundled bytes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import ConfigError
from .prompts import TEMPLATE_NAMES
from .translator import SamplingSchedule

_KEYS = {
    "endpoint", "model", "api_key", "retriever_endpoint", "corpus",
    "k", "parallelism", "schedule", "prompts",
}


@dataclass
class AppConfig:
    endpoint: str | None = None
    model: str | None = None
    api_key: str | None = None
    retriever_endpoint: str | None = None
    corpus: str | None = None
    k: int = 3
    parallelism: int = 1
    schedule: SamplingSchedule = field(default_factory=SamplingSchedule)
    # template name -> replacement text (already loaded)
    prompt_overrides: dict[str, str] = field(default_factory=dict)

    def require(self, attr: str, hint: str) -> str:
        value = getattr(self, attr)
        if not value:
            raise ConfigError(f"{attr} is not configured ({hint})")
        return value


def load_config(path: str | Path | None = None,
                env: Mapping[str, str] | None = None) -> AppConfig:
    """Read the config file (if any) and apply environment overrides."""
    env = os.environ if env is None else env
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text("utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = data.keys() - _KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    try:
        schedule = SamplingSchedule(**data["schedule"]) if "schedule" in data else SamplingSchedule()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad schedule: {exc}") from exc

    k = data.get("k", 3)
    parallelism = data.get("parallelism", 1)
    if not isinstance(k, int) or k < 1:
        raise ConfigError("k must be a positive integer")
    if not isinstance(parallelism, int) or parallelism < 1:
        raise ConfigError("parallelism must be a positive integer")

    overrides: dict[str, str] = {}
    for name, override_path in (data.get("prompts") or {}).items():
        if name not in TEMPLATE_NAMES:
            raise ConfigError(f"unknown prompt template {name!r}")
        try:
            overrides[name] = Path(override_path).read_text("utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read prompt override {override_path}: {exc}") from exc

    return AppConfig(
        endpoint=env.get("QC_ENDPOINT") or data.get("endpoint"),
        model=env.get("QC_MODEL") or data.get("model"),
        api_key=env.get("QC_API_KEY") or data.get("api_key"),
        retriever_endpoint=data.get("retriever_endpoint"),
        corpus=data.get("corpus"),
        k=k,
        parallelism=parallelism,
        schedule=schedule,
        prompt_overrides=overrides,
    )
