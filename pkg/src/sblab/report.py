"""Certification report container shared by the verification modules."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class CertReport:
    alpha: float
    target: float
    min_bound: float
    argmin: dict
    passed: bool
    n_cells: int
    grid: dict
    extra: dict = field(default_factory=dict)

    def to_json(self, indent: int | None = None) -> str:
        d = {
            "alpha": self.alpha,
            "target": self.target,
            "min_bound": self.min_bound,
            "argmin": self.argmin,
            "pass": self.passed,
            "n_cells": self.n_cells,
            "grid": self.grid,
        }
        d.update(self.extra)
        return json.dumps(d, indent=indent)
