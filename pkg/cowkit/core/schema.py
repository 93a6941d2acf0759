from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .matrix import BIN01, PM1, TernaryVector

# ---------------------------
# Verification
# ---------------------------

VerifyMethod = Literal["naive", "fast", "structural"]


def _signed(v: int) -> str:
    return f"{v:+d}" if v else "0"


class Verdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    is_errorless: bool
    method: VerifyMethod
    work: int = Field(ge=0)
    alphabet: Literal["pm1", "01"] = PM1
    witness: Optional[List[int]] = None
    columns: int = 0
    rank: Optional[int] = None

    @model_validator(mode="after")
    def _witness_iff_negative(self) -> "Verdict":
        if self.witness is not None:
            if self.is_errorless:
                raise ValueError("a positive verdict carries no witness")
            if any(v not in (-1, 0, 1) for v in self.witness) or not any(self.witness):
                raise ValueError("witness must be a nonzero {-1,0,1} vector")
        elif not self.is_errorless and self.method != "structural":
            raise ValueError(f"negative {self.method} verdict needs a witness")
        return self

    @property
    def label(self) -> str:
        if not self.is_errorless:
            return "not-errorless"
        return "coo" if self.alphabet == BIN01 else "cow"

    @property
    def witness_vector(self) -> Optional[TernaryVector]:
        return TernaryVector(tuple(self.witness)) if self.witness is not None else None

    def line(self) -> str:
        """`verdict <cow|coo|not-errorless> method <m> work <w>` plus an optional witness line."""
        text = f"verdict {self.label} method {self.method} work {self.work}"
        if self.witness is not None:
            text += "\nwitness " + " ".join(_signed(v) for v in self.witness)
        return text


# ---------------------------
# Capacity
# ---------------------------

BoundName = Literal[
    "thm6", "appxA", "lemma2_n", "lemma2_log", "lemma3", "thm7_lower", "thm8_upper"
]


class BoundReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=1)
    n: int = Field(ge=1)
    bound: BoundName
    value_bits: float
    aux: Optional[str] = None

    @field_validator("value_bits")
    @classmethod
    def _finite(cls, v: float) -> float:
        if v != v or v in (float("inf"), float("-inf")):
            raise ValueError("bound value must be finite")
        return v


# ---------------------------
# Decoding
# ---------------------------

class DecodedWord(BaseModel):
    model_config = ConfigDict(frozen=True)

    bits: List[int]
    score: float
    alphabet: Literal["pm1", "01"] = PM1
    candidates: int = 0  # distance evaluations spent

    @model_validator(mode="after")
    def _bits_in_alphabet(self) -> "DecodedWord":
        allowed = (1, -1) if self.alphabet == PM1 else (0, 1)
        if any(b not in allowed for b in self.bits):
            raise ValueError(f"decoded bits outside the {self.alphabet} alphabet")
        return self


# ---------------------------
# Simulation
# ---------------------------

DecoderName = Literal["tensor", "ml", "hadamard_baseline", "block", "optical", "auto"]


class SimConfig(BaseModel):
    code: str
    decoder: DecoderName = "tensor"
    ebn0_db: List[float] = Field(default_factory=list)
    max_trials: int = Field(default=10**6, ge=1)
    min_bit_errors: int = Field(default=100, ge=1)
    seed: int = Field(default=1, ge=0)
    batch_size: int = Field(default=1000, ge=1)
    threads: Optional[int] = None

    @field_validator("ebn0_db")
    @classmethod
    def _finite_grid(cls, v: List[float]) -> List[float]:
        for x in v:
            if x != x or x in (float("inf"), float("-inf")):
                raise ValueError("Eb/N0 grid entries must be finite")
        return v


class BerRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    code: str
    decoder: str
    ebn0_db: float
    trials: int = Field(ge=0)
    bits: int = Field(ge=0)
    bit_errors: int = Field(ge=0)
    ber: float = Field(ge=0.0, le=1.0)
    seconds: float = Field(ge=0.0)

    @model_validator(mode="after")
    def _consistent(self) -> "BerRecord":
        if self.bit_errors > self.bits:
            raise ValueError("more bit errors than transmitted bits")
        return self


__all__ = [
    "VerifyMethod",
    "Verdict",
    "BoundName",
    "BoundReport",
    "DecodedWord",
    "DecoderName",
    "SimConfig",
    "BerRecord",
]
