"""Per-period arrival-set generation.

Two arrival processes: deterministic periodic cadences (VoIP-style codecs)
and per-client Markov-modulated VBR (MPEG-style video). Periodic clients
sharing an offset produce dependent arrivals; VBR clients are independent.
"""

from dataclasses import dataclass
from fractions import Fraction

from .markov import (
    as_fraction,
    is_irreducible,
    sample_distribution,
    stationary_distribution,
    step_state,
)


@dataclass(frozen=True)
class Periodic:
    """One packet every `interval` periods, first at period offset-1 (so an
    offset of 1 means periods 0, interval, 2*interval, ...)."""

    interval: int
    offset: int

    def problems(self):
        out = []
        if self.interval < 1:
            out.append("interval must be >= 1 period")
        elif not (1 <= self.offset <= self.interval):
            out.append("offset must satisfy 1 <= offset <= interval")
        return out

    def arrives_at(self, k):
        return k % self.interval == self.offset - 1


@dataclass(frozen=True)
class MarkovVBR:
    """states: tuple of (label, arrival_probability); matrix: row-stochastic
    transition probabilities over those states."""

    states: tuple
    matrix: tuple

    def problems(self):
        out = []
        if len(self.matrix) != len(self.states):
            out.append("transition matrix size does not match state count")
            return out
        for label, p in self.states:
            p = as_fraction(p)
            if not (0 <= p <= 1):
                out.append(f"arrival probability for state {label!r} not in [0,1]")
        for i, row in enumerate(self.matrix):
            total = sum((as_fraction(p) for p in row), Fraction(0))
            if total != 1 or any(as_fraction(p) < 0 for p in row):
                out.append(f"transition matrix row {i} is not a probability row")
        return out


def arrival_frequency(model):
    """Long-run arrival rate (packets per period) of one arrival model.

    Periodic is exact by construction; MarkovVBR solves the stationary
    distribution of its chain and averages the per-state probabilities.
    Raises ValueError for a reducible VBR chain.
    """
    if isinstance(model, Periodic):
        return Fraction(1, model.interval)
    if isinstance(model, MarkovVBR):
        rows = [[as_fraction(p) for p in row] for row in model.matrix]
        if not is_irreducible(rows):
            raise ValueError("no unique stationary distribution: chain is reducible")
        pi = stationary_distribution(rows)
        return sum(
            (w * as_fraction(p) for w, (_, p) in zip(pi, model.states)),
            Fraction(0),
        )
    raise TypeError(f"unknown arrival model {type(model).__name__}")


class TrafficState:
    """Mutable per-run arrival state for one client."""

    __slots__ = ("client_id", "model", "chain", "probs", "rows")

    def __init__(self, client_id, model, rng):
        self.client_id = client_id
        self.model = model
        if isinstance(model, MarkovVBR):
            self.rows = [[float(as_fraction(p)) for p in row] for row in model.matrix]
            self.probs = [float(as_fraction(p)) for _, p in model.states]
            pi = [float(w) for w in stationary_distribution(model.matrix)]
            self.chain = sample_distribution(pi, rng.random())
        else:
            self.rows = None
            self.probs = None
            self.chain = None


def init_traffic(clients, rng):
    """Build per-client states; VBR chains start from a stationary draw."""
    return [TrafficState(c.id, c.arrival, rng) for c in clients]


def next_arrivals(model_states, k, rng):
    """Arrival set S_k for period k, as a sorted tuple of client ids.

    VBR chains advance exactly once per call and always consume two draws
    (advance + arrival), so the stream stays aligned across policies.
    """
    out = []
    for st in model_states:
        m = st.model
        if isinstance(m, Periodic):
            if m.arrives_at(k):
                out.append(st.client_id)
        else:
            st.chain = step_state(st.rows, st.chain, rng.random())
            u = rng.random()
            if u < st.probs[st.chain]:
                out.append(st.client_id)
    return tuple(out)
