from fractions import Fraction

from timelysim.channel import Static
from timelysim.model import ClientSpec, FIXED_RATE, SystemConfig
from timelysim.traffic import Periodic


def static_config(qs, ps, taus, T, horizon=100, seed=1, nonrt=False):
    """Fixed-rate config on a static channel, every client arriving every
    period. qs/ps/taus are aligned sequences; client ids are 1..N."""
    clients = tuple(
        ClientSpec(i + 1, Fraction(q), tau, Periodic(1, 1), {"static": Fraction(p)})
        for i, (q, p, tau) in enumerate(zip(qs, ps, taus))
    )
    return SystemConfig(clients, T, FIXED_RATE, Static(), horizon, seed, nonrt_client=nonrt)
