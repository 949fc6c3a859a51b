"""Test-time metrics: per-step negative log-likelihood, bpc, perplexity.

Everything is accumulated in nats with exact summation, so the report is
independent of how sequences were chunked. Bits-per-character and perplexity
are derived at report time: bpc = nll_per_step / ln 2, perplexity =
exp(nll_per_step). For piano rolls, nll_per_step is the per-timestep value,
summed over the 88 bernoulli dimensions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import SubseqChunk, iter_subsequences
from .errors import ConfigurationError
from .model import HiddenState, ModelConfig, ParamSet, forward


@dataclass
class MetricReport:
    total_nll_nats: float
    steps: int
    nll_per_step: float
    bpc: float
    perplexity: float

    @classmethod
    def from_total(cls, total_nll: float, steps: int) -> "MetricReport":
        if steps < 1:
            raise ConfigurationError("no prediction steps to evaluate")
        per_step = total_nll / steps
        return cls(total_nll_nats=total_nll, steps=steps, nll_per_step=per_step,
                   bpc=per_step / math.log(2.0), perplexity=math.exp(per_step))

    def to_text(self) -> str:
        return (f"total_nll_nats={self.total_nll_nats!r}\n"
                f"steps={self.steps}\n"
                f"nll_per_step={self.nll_per_step!r}\n"
                f"bpc={self.bpc!r}\n"
                f"perplexity={self.perplexity!r}\n")

    def to_json(self) -> str:
        return json.dumps({"total_nll_nats": self.total_nll_nats,
                           "steps": self.steps,
                           "nll_per_step": self.nll_per_step,
                           "bpc": self.bpc,
                           "perplexity": self.perplexity}, sort_keys=True)


def evaluate_chunks(params: ParamSet, config: ModelConfig,
                    chunks: Sequence[SubseqChunk]) -> MetricReport:
    """Exact summed cross-entropy over a chunk stream with state carry."""
    state: HiddenState | None = None
    parts: list[np.ndarray] = []
    for chunk in chunks:
        if not chunk.carry_state:
            state = HiddenState.zeros(config)
        res = forward(params, config, chunk.inputs, chunk.targets, state)
        state = res.final_state
        parts.append(res.nll_steps)
    if not parts:
        return MetricReport.from_total(0.0, 0)
    all_steps = np.concatenate(parts)
    return MetricReport.from_total(math.fsum(all_steps), all_steps.shape[0])


def evaluate(params: ParamSet, config: ModelConfig,
             seqs: Sequence[np.ndarray], max_len: int) -> MetricReport:
    """Evaluate whole sequences, chunked internally at ``max_len`` steps."""
    return evaluate_chunks(params, config, iter_subsequences(seqs, max_len))
