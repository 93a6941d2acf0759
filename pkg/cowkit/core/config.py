# cowkit/core/config.py
from __future__ import annotations

import os
from typing import Optional

import yaml
from pydantic import BaseModel, Field


class VerifyCfg(BaseModel):
    naive_max_columns: int = Field(default=16, ge=1)
    work_limit: int = Field(default=10**9, ge=1)
    chunk_size: int = Field(default=65536, ge=1)  # ternary vectors per numpy batch


class ConstructCfg(BaseModel):
    augment_budget: int = Field(default=10**6, ge=1)
    augment_seed: int = 0


class CapacityCfg(BaseModel):
    exhaustive_max_n: int = Field(default=80, ge=1)
    coarse_divisions: int = Field(default=40, ge=1)
    pmf_tolerance: float = 1e-9
    bisection_rtol: float = 1e-10
    sweep_digits: int = Field(default=12, ge=1)


class DecoderCfg(BaseModel):
    ml_max_users: int = Field(default=20, ge=1)
    table_entry_cap: int = Field(default=2**24, ge=1)


class SimulationCfg(BaseModel):
    min_bit_errors: int = Field(default=100, ge=1)
    max_trials: int = Field(default=10**6, ge=1)
    batch_size: int = Field(default=1000, ge=1)
    seed: int = Field(default=1, ge=0)


class LoggingCfg(BaseModel):
    level: str = "INFO"
    json_format: bool = Field(default=False, alias="json")

    model_config = {"populate_by_name": True}


def _truthy(val: str) -> bool:
    return val.strip().lower() in ("1", "true", "yes", "on")


class Settings(BaseModel):
    verify: VerifyCfg = VerifyCfg()
    construct_cfg: ConstructCfg = Field(default_factory=ConstructCfg, alias="construct")
    capacity: CapacityCfg = CapacityCfg()
    decoder: DecoderCfg = DecoderCfg()
    simulation: SimulationCfg = SimulationCfg()
    logging: LoggingCfg = LoggingCfg()

    threads: Optional[int] = None  # None = machine parallelism

    model_config = {"populate_by_name": True}

    def worker_count(self) -> int:
        return self.threads if self.threads and self.threads > 0 else (os.cpu_count() or 1)

    @staticmethod
    def load(path: Optional[str] = None) -> "Settings":
        path = path or os.getenv("COWKIT_SETTINGS", "configs/settings.yaml")
        data = {}
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}

        settings = Settings.model_validate(data)

        # Env overrides
        if os.getenv("COWKIT_THREADS", "").strip():
            settings.threads = int(os.environ["COWKIT_THREADS"])
        if "LOG_LEVEL" in os.environ:
            settings.logging.level = os.environ["LOG_LEVEL"].strip().upper()
        if "COWKIT_LOG_JSON" in os.environ:
            settings.logging.json_format = _truthy(os.environ["COWKIT_LOG_JSON"])
        if "COWKIT_WORK_LIMIT" in os.environ:
            settings.verify.work_limit = int(float(os.environ["COWKIT_WORK_LIMIT"]))
        if "COWKIT_SEED" in os.environ:
            settings.simulation.seed = int(os.environ["COWKIT_SEED"])

        return settings


__all__ = [
    "VerifyCfg",
    "ConstructCfg",
    "CapacityCfg",
    "DecoderCfg",
    "SimulationCfg",
    "LoggingCfg",
    "Settings",
]
