"""Run configuration and the report envelope written by the CLI."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any

from .inequality import HBAR_DEFAULT, ConstantsProfile
from .quadrature import MAX_CELLS, default_nu_ladder
from .reporting import schema_errors, to_plain

__all__ = ["Config", "ConfigError", "RunReport"]


class ConfigError(ValueError):
    pass


def _default_profile() -> ConstantsProfile:
    return ConstantsProfile(HBAR_DEFAULT, 2.0 / math.pi, 1.0 / (2.0 * math.pi), "defaults")


@dataclass(frozen=True)
class Config:
    """Tolerances, ladder parameters, constants and the seed of one run."""

    tol: float = 1e-10
    match_tol: float = 1e-2
    mass_tol: float = 1e-2
    boundary_tol: float = 1e-8
    conv_tol: float = 1e-2
    nu_max: int = 10_000
    ladder_factor: float = 2.0
    ladder_count: int = 8
    trend_window: int = 5
    max_cells: int = MAX_CELLS
    seed: int = 0
    profile: ConstantsProfile = field(default_factory=_default_profile)

    def __post_init__(self):
        errs = schema_errors(self.to_json(), "config")
        if errs:
            raise ConfigError("; ".join(errs))
        if self.trend_window > self.ladder_count:
            raise ConfigError("$.trend_window: exceeds ladder_count")

    @property
    def nus(self) -> tuple[int, ...]:
        return tuple(default_nu_ladder(self.nu_max, self.ladder_count, factor=self.ladder_factor))

    def to_json(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "profile"}
        p = self.profile
        d["profile"] = {"hbar": p.hbar, "C": p.C, "c": p.c, "provenance": p.provenance}
        return d

    @classmethod
    def from_json(cls, data: Any) -> "Config":
        errs = schema_errors(data, "config")
        if errs:
            raise ConfigError("; ".join(errs))
        kw = dict(data)
        if "profile" in kw:
            p = kw["profile"]
            kw["profile"] = ConstantsProfile(p["hbar"], p["C"], p["c"], p.get("provenance", "config file"))
        return cls(**kw)

    def with_overrides(self, **kw) -> "Config":
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return replace(self, **kw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class RunReport:
    """What ran, with which configuration and inputs, and what came out.

    ``wall_time`` is kept out of :meth:`payload` so that a replay with the
    same inputs and configuration reproduces the payload byte for byte.
    """

    command: list[str]
    config: Config
    inputs: dict[str, str]
    outputs: dict
    verdict: str
    wall_time: float | None = None

    def payload(self) -> dict:
        return {
            "schema": "gromovdisc.run_report/1",
            "command": list(self.command),
            "config": self.config.to_json(),
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": to_plain(self.outputs),
            "verdict": self.verdict,
        }

    def to_json(self) -> dict:
        d = self.payload()
        if self.wall_time is not None:
            d["wall_time"] = self.wall_time
        return d
