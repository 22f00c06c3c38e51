"""Built-in scenario presets.

Five scenarios: VoIP and MPEG under rate adaptation, the same two traffic
mixes under fixed-rate Gilbert-Elliot channels, and a static-channel VoIP
mix with heterogeneous deadlines.

Slot and period bookkeeping, from the MAC timings:
  VoIP rate adaptation: 160 us slots, 20 ms periods -> T = 125; a packet
    takes 3 slots at 11 Mb/s and 4 at 5.5 Mb/s.
  MPEG rate adaptation: 60 us slots, 6 ms periods -> T = 100; 11 slots at
    54 Mb/s, 16 at 24 Mb/s.
  VoIP fixed-rate: one 480 us transmission per slot, 20 ms periods ->
    T = 41.
  MPEG fixed-rate: one 660 us transmission per slot, 6 ms periods -> T = 9.
  VoIP heterogeneous deadlines: the short deadline is 22 slots, stated as
    two thirds of the period -> T = 33.

`scale` multiplies the per-subgroup client counts AND the period length
(both rounded half-up, floor 1), with deadlines kept proportional, so
scaled-down runs preserve the per-period load of the full scenario and
finish in seconds. Each scaled client keeps the parameter set of its index
within the subgroup, cycling through the base roster when scaled above it
(index formulas like the (84+n)% reliabilities only define probabilities
for the base count). Service times do not scale; they are slot counts
fixed by the MAC.

Channel dynamics: state sojourns are exponential in the measurement
studies, discretized here to geometric per-period switching with the same
means. Good-state means of 1 + 0.5n seconds (n-th client of a subgroup)
and a 500 ms bad-state mean give the fixed-rate presets their
time-averaged reliability of (2.2+n)/(3.0+n). The rate-adaptation presets
reuse the same two-state shape for the data-rate alternation with 1 s at
the high rate and 500 ms at the low rate.

The MPEG arrival chain holds per-state arrival probabilities (1, 0.8,
0.75) from the cited traffic study; the study's transition matrix is not
reproduced, so we use a symmetric one (0.9 self, 0.05 cross), whose
stationary law is uniform. Group B thins every arrival probability by 0.8.

q_n is the required deliveries per period: delivery ratio times arrival
rate (e.g. 90% of one packet per 3 periods -> q = 0.3).
"""

from fractions import Fraction

from .channel import PerClientTwoState, Static, TwoStateParams
from .markov import as_fraction
from .model import ClientSpec, FIXED_RATE, RATE_ADAPTATION, SystemConfig
from .traffic import MarkovVBR, Periodic

_MPEG_MATRIX = (
    (Fraction(9, 10), Fraction(1, 20), Fraction(1, 20)),
    (Fraction(1, 20), Fraction(9, 10), Fraction(1, 20)),
    (Fraction(1, 20), Fraction(1, 20), Fraction(9, 10)),
)
_MPEG_STATES_A = (
    ("great", Fraction(1)),
    ("high", Fraction(4, 5)),
    ("regular", Fraction(3, 4)),
)
_MPEG_STATES_B = tuple(
    (label, p * Fraction(4, 5)) for label, p in _MPEG_STATES_A
)


def _scaled(x, scale):
    """Half-up rounding with a floor of 1. scale may be int, Fraction,
    float, or a string like "6/19"."""
    return max(1, int(Fraction(x) * as_fraction(scale) + Fraction(1, 2)))


def _scaled_tau(tau_base, T_base, T):
    return max(1, min(T, int(Fraction(tau_base * T, T_base) + Fraction(1, 2))))


def _periods(ms, period_ms):
    """Sojourn mean in periods from milliseconds."""
    return Fraction(ms) / Fraction(period_ms)


def _cycled(n, base):
    """Index into the base parameter roster; wraps when scaled above it."""
    return (n - 1) % base + 1


def _voip_groups(per_subgroup, base):
    """(group, subgroup offset, roster index) for the two VoIP groups:
    A arrives every 3 periods, B every 2."""
    plan = []
    for offset in (1, 2, 3):
        for n in range(1, per_subgroup + 1):
            plan.append(("A", offset, _cycled(n, base)))
    for offset in (1, 2):
        for n in range(1, per_subgroup + 1):
            plan.append(("B", offset, _cycled(n, base)))
    return plan


def voip_rate_adaptation(scale=1, horizon=5000, seed=1):
    T_base, period_ms = 125, 20
    per = _scaled(22, scale)
    T = _scaled(T_base, scale)
    clients = []
    params = {}
    for group, offset, n in _voip_groups(per, 22):
        cid = len(clients) + 1
        interval = 3 if group == "A" else 2
        q = Fraction(9, 10) / 3 if group == "A" else Fraction(7, 10) / 2
        tau = T if group == "A" else _scaled_tau(83, T_base, T)
        clients.append(
            ClientSpec(cid, q, tau, Periodic(interval, offset), {"good": 3, "bad": 4})
        )
        params[cid] = TwoStateParams(3, 4, _periods(1000, period_ms), _periods(500, period_ms))
    return SystemConfig(
        tuple(clients), T, RATE_ADAPTATION, PerClientTwoState(params),
        horizon, seed, nonrt_client=True,
    )


def mpeg_rate_adaptation(scale=1, horizon=5000, seed=1):
    T_base, period_ms = 100, 6
    per = _scaled(6, scale)
    T = _scaled(T_base, scale)
    freq_a = Fraction(17, 20)  # uniform stationary law over the three states
    clients = []
    params = {}
    for group in ("A", "B"):
        states = _MPEG_STATES_A if group == "A" else _MPEG_STATES_B
        ratio = Fraction(9, 10) if group == "A" else Fraction(3, 5)
        freq = freq_a if group == "A" else freq_a * Fraction(4, 5)
        for _ in range(per):
            cid = len(clients) + 1
            clients.append(
                ClientSpec(cid, ratio * freq, T, MarkovVBR(states, _MPEG_MATRIX),
                           {"good": 11, "bad": 16})
            )
            params[cid] = TwoStateParams(
                11, 16, _periods(1000, period_ms), _periods(500, period_ms)
            )
    return SystemConfig(
        tuple(clients), T, RATE_ADAPTATION, PerClientTwoState(params),
        horizon, seed, nonrt_client=True,
    )


def voip_gilbert_elliot(scale=1, horizon=5000, seed=1):
    T_base, period_ms = 41, 20
    per = _scaled(19, scale)
    T = _scaled(T_base, scale)
    clients = []
    params = {}
    for group, offset, n in _voip_groups(per, 19):
        cid = len(clients) + 1
        interval = 3 if group == "A" else 2
        q = Fraction(9, 10) / 3 if group == "A" else Fraction(7, 10) / 2
        clients.append(
            ClientSpec(cid, q, T, Periodic(interval, offset),
                       {"good": Fraction(1), "bad": Fraction(1, 5)})
        )
        params[cid] = TwoStateParams(
            Fraction(1), Fraction(1, 5),
            _periods(1000 + 500 * n, period_ms), _periods(500, period_ms),
        )
    return SystemConfig(
        tuple(clients), T, FIXED_RATE, PerClientTwoState(params),
        horizon, seed, nonrt_client=True,
    )


def mpeg_gilbert_elliot(scale=1, horizon=5000, seed=1):
    T_base, period_ms = 9, 6
    per = _scaled(4, scale)
    T = _scaled(T_base, scale)
    freq_a = Fraction(17, 20)
    clients = []
    params = {}
    for group in ("A", "B"):
        states = _MPEG_STATES_A if group == "A" else _MPEG_STATES_B
        ratio = Fraction(9, 10) if group == "A" else Fraction(3, 5)
        freq = freq_a if group == "A" else freq_a * Fraction(4, 5)
        for n in range(1, per + 1):
            cid = len(clients) + 1
            idx = _cycled(n, 4)
            clients.append(
                ClientSpec(cid, ratio * freq, T, MarkovVBR(states, _MPEG_MATRIX),
                           {"good": Fraction(1), "bad": Fraction(1, 5)})
            )
            params[cid] = TwoStateParams(
                Fraction(1), Fraction(1, 5),
                _periods(1000 + 500 * idx, period_ms), _periods(500, period_ms),
            )
    return SystemConfig(
        tuple(clients), T, FIXED_RATE, PerClientTwoState(params),
        horizon, seed, nonrt_client=True,
    )


def voip_hetero_deadline(scale=1, horizon=5000, seed=1):
    T_base = 33
    per = _scaled(14, scale)
    T = _scaled(T_base, scale)
    tau_b = _scaled_tau(22, T_base, T)
    clients = []
    for n in range(1, per + 1):
        cid = len(clients) + 1
        clients.append(
            ClientSpec(cid, Fraction(9, 10), T, Periodic(1, 1),
                       {"static": Fraction(84 + _cycled(n, 14), 100)})
        )
    for n in range(1, per + 1):
        cid = len(clients) + 1
        clients.append(
            ClientSpec(cid, Fraction(1, 2), tau_b, Periodic(1, 1),
                       {"static": Fraction(29 + _cycled(n, 14), 100)})
        )
    return SystemConfig(
        tuple(clients), T, FIXED_RATE, Static(), horizon, seed, nonrt_client=True,
    )


PRESETS = {
    "voip-rate-adaptation": voip_rate_adaptation,
    "mpeg-rate-adaptation": mpeg_rate_adaptation,
    "voip-gilbert-elliot": voip_gilbert_elliot,
    "mpeg-gilbert-elliot": mpeg_gilbert_elliot,
    "voip-hetero-deadline": voip_hetero_deadline,
}

PRESET_NOTES = {
    "voip-rate-adaptation": "VoIP over 802.11b with rate adaptation (T=125, s=3/4)",
    "mpeg-rate-adaptation": "MPEG VBR over 802.11a with rate adaptation (T=100, s=11/16)",
    "voip-gilbert-elliot": "VoIP, fixed 11 Mb/s, Gilbert-Elliot channels (T=41)",
    "mpeg-gilbert-elliot": "MPEG VBR, fixed 54 Mb/s, Gilbert-Elliot channels (T=9)",
    "voip-hetero-deadline": "VoIP, static channels, deadlines 33 vs 22 slots (T=33)",
}


def build_preset(name, scale=1, horizon=5000, seed=1):
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ValueError(f"unknown preset {name!r} (known: {known})")
    return PRESETS[name](scale=scale, horizon=horizon, seed=seed)
