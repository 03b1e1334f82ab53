"""Black-box wrapper around a trained classifier.

Every distinct input costs one query; bit-identical repeats are served
from a cache for free. Queries are booked to a phase: "setup" covers the
initial dataset labeling (the QN1 side of the ledger), "attack" covers
transfer checks and search queries (QN2). An optional budget bounds the
total; exceeding it raises BudgetExhaustedError with the ledger attached.

Attacks only ever see soft labels. Gradients and parameters stay behind
glass_box_handle(), which works only for oracles created in diagnostic
mode and exists for the convergence diagnostics, never for attacks.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExhaustedError, ConfigError, OracleAccessError

PHASES = ("setup", "attack")


@dataclass
class QueryLedger:
    setup_queries: int = 0
    attack_queries: int = 0
    setup_cache_hits: int = 0
    attack_cache_hits: int = 0

    @property
    def total(self) -> int:
        return self.setup_queries + self.attack_queries

    def to_dict(self) -> dict:
        return {
            "setup_queries": self.setup_queries,
            "attack_queries": self.attack_queries,
            "setup_cache_hits": self.setup_cache_hits,
            "attack_cache_hits": self.attack_cache_hits,
            "total": self.total,
        }


class BlackBoxOracle:
    def __init__(self, model, budget=None, diagnostic=False):
        if budget is not None and budget < 1:
            raise ConfigError(f"budget must be positive when set, got {budget}")
        self._model = model
        self.budget = budget
        self.diagnostic = bool(diagnostic)
        self.ledger = QueryLedger()
        self._cache = {}

    @property
    def query_count(self) -> int:
        return self.ledger.total

    @property
    def n_classes(self) -> int:
        return self._model.n_classes

    def query(self, x: np.ndarray, phase: str = "attack") -> np.ndarray:
        """Soft label for one input; returns a copy of the probability vector."""
        if phase not in PHASES:
            raise ConfigError(f"phase must be one of {PHASES}, got {phase!r}")
        x = np.ascontiguousarray(x, dtype=np.float64)
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            if phase == "setup":
                self.ledger.setup_cache_hits += 1
            else:
                self.ledger.attack_cache_hits += 1
            return hit.copy()
        if self.budget is not None and self.query_count + 1 > self.budget:
            raise BudgetExhaustedError(
                f"query budget {self.budget} exhausted",
                self.query_count,
                self.ledger.setup_queries,
                self.ledger.attack_queries,
            )
        probs = np.asarray(self._model.predict_proba(x), dtype=np.float64)
        self._cache[key] = probs
        if phase == "setup":
            self.ledger.setup_queries += 1
        else:
            self.ledger.attack_queries += 1
        return probs.copy()

    def hard_label(self, x: np.ndarray, phase: str = "attack") -> int:
        """Argmax class of query(x), 1-based; same cost as query."""
        return int(np.argmax(self.query(x, phase)) + 1)

    def glass_box_handle(self):
        """The wrapped model itself; diagnostic-mode oracles only."""
        if not self.diagnostic:
            raise OracleAccessError(
                "glass-box access denied: oracle was created in attack mode"
            )
        return self._model
