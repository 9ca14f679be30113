"""Reference cost and latency figures for hosted models.

Prices are the public per-1K-token rates in effect when the benchmark
numbers were collected (USD). Latency rows summarize observed wall-clock
seconds per inference, including network and queueing overhead, so they
describe user-facing behavior rather than raw model speed.
"""

from __future__ import annotations

from dataclasses import dataclass

from hearth.gateway import CostRates

MODEL_RATES = {
    "gpt-3.5-turbo": CostRates(input_per_1k=0.02, output_per_1k=0.02),
    "gpt-4": CostRates(input_per_1k=0.03, output_per_1k=0.06),
}


@dataclass(frozen=True)
class LatencyRow:
    min_s: float | None
    max_s: float | None
    mean_s: float


# Single-inference latency by model. Locally hosted models ran on dedicated
# hardware, so only their means are comparable.
MODEL_LATENCY = {
    "gpt-3.5-turbo": LatencyRow(2.66, 76.35, 20.21),
    "gpt-4": LatencyRow(4.75, 132.91, 33.43),
    "llama-30b": LatencyRow(None, None, 11.15),
    "llama-65b": LatencyRow(None, None, 12.04),
}

# Per-step latency of the full reasoning chain over gpt-3.5-turbo.
CHAIN_STEP_LATENCY = {
    "relevance": LatencyRow(0.37, 5.35, 2.01),
    "filtering": LatencyRow(2.11, 78.75, 19.36),
    "planning": LatencyRow(2.87, 60.56, 12.91),
    "feedback": LatencyRow(3.68, 57.56, 14.83),
    "total": LatencyRow(19.19, 165.41, 59.78),
}


def rates_for(model: str) -> CostRates:
    """Rates for a known model, or free-of-charge rates for anything else."""
    return MODEL_RATES.get(model, CostRates(0.0, 0.0))
