"""Experiment configuration.

A study is described by one JSON document::

    {
      "name": "table4",
      "kind": "subdiffusion",            # or "diffusionwave"
      "problem": "manufactured",
      "coefficients": "paper_section5",  # preset name
      "alphas": [0.7],
      "gammas": [1, "opt", "2.5/alpha"], # number, "opt" or "<c>/alpha"
      "N": [500],
      "M": [4, 8, 16, 32],
      "T": 1.0,
      "kernel": "direct",                # or "soe"
      "soe_epsilon": 1e-12,
      "norm": "semi",                    # "semi" or "h1" for E1
      "psi": "analytic",                 # diffusion-wave: "analytic" or "discrete"
      "solver": {"mode": "auto", "rel_tol": 1e-12, "max_iter": 500},
      "sigma": null,                     # optional regularity overrides
      "output": {"dir": "results", "formats": ["csv", "markdown"], "plot_data": true}
    }

Every key except ``kind``, ``alphas``, ``N`` and ``M`` has a default.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import PreconditionError
from ..spatial import SolverOptions
from .problems import gamma_opt

_RATIO = re.compile(r"^\s*([0-9.eE+-]+)\s*/\s*alpha\s*$")


def resolve_gamma(spec, kind: str, alpha: float) -> float:
    """Turn a gamma entry (number, "opt" or "c/alpha") into a value."""
    if isinstance(spec, (int, float)):
        return float(spec)
    if isinstance(spec, str):
        if spec.strip() == "opt":
            return gamma_opt(kind, alpha)
        m = _RATIO.match(spec)
        if m:
            return float(m.group(1)) / alpha
        try:
            return float(spec)
        except ValueError:
            pass
    raise PreconditionError(f"cannot interpret gamma entry {spec!r}")


def gamma_label(spec) -> str:
    if isinstance(spec, str):
        return "gamma_opt" if spec.strip() == "opt" else spec.replace(" ", "")
    return f"{float(spec):g}"


@dataclass
class OutputSpec:
    dir: str = "results"
    formats: list = field(default_factory=lambda: ["csv", "markdown"])
    plot_data: bool = True
    snapshots: bool = False


@dataclass
class ExperimentConfig:
    kind: str
    alphas: list
    N: list
    M: list
    gammas: list = field(default_factory=lambda: ["opt"])
    name: str = "study"
    problem: str = "manufactured"
    coefficients: str = "paper_section5"
    T: float = 1.0
    kernel: str = "direct"
    soe_epsilon: float = 1e-12
    norm: str = "semi"
    psi: str = "analytic"
    solver: dict = field(default_factory=dict)
    sigma: dict | None = None
    output: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        if isinstance(self.output, dict):
            self.output = OutputSpec(**self.output)
        for key in ("alphas", "N", "M", "gammas"):
            val = getattr(self, key)
            if not isinstance(val, (list, tuple)) or len(val) == 0:
                raise PreconditionError(f"config field {key!r} must be a nonempty list")
            setattr(self, key, list(val))
        if self.kind not in ("subdiffusion", "diffusionwave"):
            raise PreconditionError(f"unknown kind {self.kind!r}")
        lo, hi = (0.0, 1.0) if self.kind == "subdiffusion" else (1.0, 2.0)
        for a in self.alphas:
            if not lo < float(a) < hi:
                raise PreconditionError(f"alpha={a} outside ({lo}, {hi}) for {self.kind}")
        if any(int(n) < 1 for n in self.N) or any(int(m) < 2 for m in self.M):
            raise PreconditionError("N entries must be >= 1 and M entries >= 2")
        if self.kernel not in ("direct", "soe"):
            raise PreconditionError(f"unknown kernel mode {self.kernel!r}")
        if self.norm not in ("semi", "h1"):
            raise PreconditionError(f"unknown norm {self.norm!r}")
        if self.psi not in ("analytic", "discrete"):
            raise PreconditionError(f"unknown psi mode {self.psi!r}")
        if self.problem != "manufactured":
            raise PreconditionError("only the manufactured problems are available from a config file")
        for a in self.alphas:
            for g in self.gammas:
                resolve_gamma(g, self.kind, float(a))

    def solver_options(self) -> SolverOptions:
        return SolverOptions(**self.solver)

    def sigmas(self, alpha: float) -> list:
        """Regularity exponents entering min{2, gamma sigma}."""
        if self.sigma:
            return [float(v) for v in self.sigma.values()]
        if self.kind == "subdiffusion":
            return [alpha]
        return [alpha, alpha / 2.0]

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise PreconditionError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def override(self, **kw) -> "ExperimentConfig":
        data = self.to_dict()
        for k, v in kw.items():
            if v is None:
                continue
            if k in ("formats", "dir"):
                data["output"][k] = v
            else:
                data[k] = v
        return ExperimentConfig.from_dict(data)
