"""Per-period channel-state processes.

The state is drawn once per period and held for all T slots. Exponential
sojourns from measurement studies are discretized to geometric per-period
switching with matched means; sub-period structure is unobservable anyway
because the model holds the state constant within a period.

In fixed-rate mode a client's channel_params map state labels to
reliabilities; in rate-adaptation mode they map to service times in slots.
This module is agnostic: it only produces labels and stationary weights.
"""

from dataclasses import dataclass
from fractions import Fraction

from .markov import as_fraction, is_irreducible, sample_distribution, stationary_distribution

GOOD = "good"
BAD = "bad"


@dataclass(frozen=True)
class Static:
    label: str = "static"

    def client_state_labels(self, client_id):
        return (self.label,)

    def problems(self):
        return []


@dataclass(frozen=True)
class TwoStateParams:
    """Gilbert-Elliot style parameters for one client. Values are the
    channel_params entries (reliability or service time); means are sojourn
    lengths in periods."""

    good_value: object
    bad_value: object
    mean_good_periods: Fraction
    mean_bad_periods: Fraction


@dataclass(frozen=True)
class PerClientTwoState:
    """Independent two-state chain per client; params keyed by client id."""

    params: dict

    def client_state_labels(self, client_id):
        return (GOOD, BAD)

    def problems(self):
        out = []
        for cid, pr in self.params.items():
            if as_fraction(pr.mean_good_periods) < 1 or as_fraction(pr.mean_bad_periods) < 1:
                out.append(f"client {cid}: mean sojourns must be >= 1 period")
        return out

    def stationary(self, client_id):
        pr = self.params[client_id]
        mg = as_fraction(pr.mean_good_periods)
        mb = as_fraction(pr.mean_bad_periods)
        return {GOOD: mg / (mg + mb), BAD: mb / (mg + mb)}


@dataclass(frozen=True)
class GlobalMarkov:
    """One chain shared by all clients; per-client values still come from
    each client's channel_params."""

    labels: tuple
    matrix: tuple

    def client_state_labels(self, client_id):
        return tuple(self.labels)

    def problems(self):
        out = []
        if len(self.matrix) != len(self.labels):
            out.append("transition matrix size does not match state count")
            return out
        for i, row in enumerate(self.matrix):
            total = sum((as_fraction(p) for p in row), Fraction(0))
            if total != 1 or any(as_fraction(p) < 0 for p in row):
                out.append(f"transition matrix row {i} is not a probability row")
        return out


def stationary_weights(model, client_id):
    """Stationary distribution over the client's state labels, exact."""
    if isinstance(model, Static):
        return {model.label: Fraction(1)}
    if isinstance(model, PerClientTwoState):
        return model.stationary(client_id)
    if isinstance(model, GlobalMarkov):
        rows = [[as_fraction(p) for p in row] for row in model.matrix]
        if not is_irreducible(rows):
            raise ValueError("no unique stationary distribution: chain is reducible")
        pi = stationary_distribution(rows)
        return dict(zip(model.labels, pi))
    raise TypeError(f"unknown channel model {type(model).__name__}")


def average_reliability(model, client):
    """Time-averaged channel value for one client (ClientSpec).

    Fixed-rate mode: the time-averaged reliability pbar_n. Rate-adaptation
    mode: the same stationary average applied to service times, i.e. the
    mean slots per transmission. Exact Fraction either way.
    """
    weights = stationary_weights(model, client.id)
    return sum(
        (w * as_fraction(client.channel_params[label]) for label, w in weights.items()),
        Fraction(0),
    )


class ChannelState:
    """Mutable per-run channel state; one instance per simulation."""

    def __init__(self, model, clients, rng):
        self.model = model
        self.client_ids = [c.id for c in clients]
        if isinstance(model, Static):
            self._labels = tuple(model.label for _ in clients)
        elif isinstance(model, PerClientTwoState):
            # switch probabilities: geometric sojourns matching the means
            self._switch = {}
            good = []
            for c in clients:
                pr = model.params[c.id]
                self._switch[c.id] = (
                    float(1 / as_fraction(pr.mean_good_periods)),
                    float(1 / as_fraction(pr.mean_bad_periods)),
                )
                pi_good = float(model.stationary(c.id)[GOOD])
                good.append(rng.random() < pi_good)
            self._good = good
            self._labels = tuple(GOOD if g else BAD for g in good)
        elif isinstance(model, GlobalMarkov):
            self._rows = [[float(as_fraction(p)) for p in row] for row in model.matrix]
            pi = [float(w) for w in stationary_distribution(model.matrix)]
            self._idx = sample_distribution(pi, rng.random())
            self._labels = tuple(model.labels[self._idx] for _ in clients)
        else:
            raise TypeError(f"unknown channel model {type(model).__name__}")

    def advance(self, rng):
        """Draw the next period's state. Consumes a fixed number of draws
        per period for stream alignment (N for per-client chains, 1 for a
        global chain, 0 for static)."""
        model = self.model
        if isinstance(model, Static):
            return
        if isinstance(model, PerClientTwoState):
            new = []
            for cid, g in zip(self.client_ids, self._good):
                leave_good, leave_bad = self._switch[cid]
                u = rng.random()
                if g:
                    new.append(u >= leave_good)
                else:
                    new.append(u < leave_bad)
            self._good = new
            self._labels = tuple(GOOD if g else BAD for g in new)
            return
        from .markov import step_state

        self._idx = step_state(self._rows, self._idx, rng.random())
        self._labels = tuple(model.labels[self._idx] for _ in self.client_ids)

    def labels(self):
        """Per-client state labels for the current period."""
        return self._labels

    def compact(self):
        """Single identifier for the system state (CSV friendly)."""
        if isinstance(self.model, Static):
            return self.model.label
        if isinstance(self.model, PerClientTwoState):
            return "".join("g" if lab == GOOD else "b" for lab in self._labels)
        return self._labels[0]


def next_channel_state(state, rng):
    """Advance one period and return the state identifier c_k."""
    state.advance(rng)
    return state.compact()
