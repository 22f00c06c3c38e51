"""Pseudo-debt ledgers.

A ledger accrues a constant z_n per client at each period start and settles
mu_n at each period end, with r_n(0) = 0. Three variants:

  time-based          z = q/pbar,  mu = slots spent on the client
  weighted-delivery   z = q/pbar,  mu = (1/pbar) per delivered packet
  delivery            z = q,    mu = 1 per delivered packet

pbar is the static reliability when the channel is static; under time-varying
channels the time-based variant uses the time-averaged reliability, while
the weighted-delivery variant degenerates to the raw deficit q*k - d (the
division by reliability happens policy-side, against the current state).
Under rate adaptation 1/pbar is the mean service time in slots.

Values are stored as integer numerators over a fixed per-client denominator,
so no accumulation drift is possible at any horizon.
"""

from fractions import Fraction
from math import lcm

TIME_BASED = "time-based"
WEIGHTED_DELIVERY = "weighted-delivery"
DELIVERY = "delivery"


class DebtLedger:
    """One debt variant for all clients of a run.

    zs / slot_costs / delivery_costs are per-client Fractions: the accrual
    constant, the decrement per slot spent, and the decrement per delivered
    packet. The three named constructors cover the variants above.
    """

    def __init__(self, variant, client_ids, zs, slot_costs, delivery_costs):
        self.variant = variant
        self.client_ids = tuple(client_ids)
        n = len(self.client_ids)
        zs = [Fraction(z) for z in zs]
        slot_costs = [Fraction(x) for x in slot_costs]
        delivery_costs = [Fraction(x) for x in delivery_costs]
        if not (len(zs) == len(slot_costs) == len(delivery_costs) == n):
            raise ValueError("per-client constant lists must match client count")
        if any(z <= 0 for z in zs):
            raise ValueError("accrual constants must be strictly positive")
        self.dens = [
            lcm(z.denominator, s.denominator, d.denominator)
            for z, s, d in zip(zs, slot_costs, delivery_costs)
        ]
        self.z_nums = [int(z * den) for z, den in zip(zs, self.dens)]
        self.slot_cost_nums = [int(s * den) for s, den in zip(slot_costs, self.dens)]
        self.delivery_cost_nums = [int(d * den) for d, den in zip(delivery_costs, self.dens)]
        self.nums = [0] * n
        self._index = {cid: i for i, cid in enumerate(self.client_ids)}

    # -- variant constructors -------------------------------------------------

    @classmethod
    def delivery(cls, client_ids, qs):
        qs = [Fraction(q) for q in qs]
        return cls(DELIVERY, client_ids, qs, [0] * len(qs), [1] * len(qs))

    @classmethod
    def time_based(cls, client_ids, qs, pbars):
        """pbars: static reliability, or the time-averaged reliability under
        a time-varying channel; under rate adaptation pass 1/E[s]."""
        zs = [Fraction(q) / Fraction(p) for q, p in zip(qs, pbars)]
        return cls(TIME_BASED, client_ids, zs, [1] * len(zs), [0] * len(zs))

    @classmethod
    def weighted_delivery(cls, client_ids, qs, pbars, time_varying=False):
        """Static: z = q/p, settle 1/p per delivery. Time-varying: the ledger
        keeps the raw deficit (z = q, settle 1 per delivery); the per-state
        division is a policy-side transform."""
        if time_varying:
            qs = [Fraction(q) for q in qs]
            return cls(WEIGHTED_DELIVERY, client_ids, qs, [0] * len(qs), [1] * len(qs))
        zs = [Fraction(q) / Fraction(p) for q, p in zip(qs, pbars)]
        costs = [1 / Fraction(p) for p in pbars]
        return cls(WEIGHTED_DELIVERY, client_ids, zs, [0] * len(zs), costs)

    # -- period updates -------------------------------------------------------

    def accrue(self):
        """Add z_n to every client. Call exactly once at each period start."""
        nums = self.nums
        zs = self.z_nums
        for i in range(len(nums)):
            nums[i] += zs[i]

    def settle(self, slots, delivered, arrived):
        """Apply mu_n for the period that just ran.

        slots/delivered/arrived are per-client sequences aligned with
        client_ids. A client that never had a packet this period must have
        slots == 0 and delivered False.
        """
        nums = self.nums
        for i in range(len(nums)):
            if (slots[i] > 0 or delivered[i]) and not arrived[i]:
                raise ValueError(
                    f"settlement for phantom packet: client {self.client_ids[i]}"
                )
            dec = slots[i] * self.slot_cost_nums[i]
            if delivered[i]:
                dec += self.delivery_cost_nums[i]
            nums[i] -= dec

    # -- views ----------------------------------------------------------------

    def value(self, client_id):
        i = self._index[client_id]
        return Fraction(self.nums[i], self.dens[i])

    def values(self):
        return {
            cid: Fraction(num, den)
            for cid, num, den in zip(self.client_ids, self.nums, self.dens)
        }

    def scaled_numerators(self):
        """Current numerators (ints) aligned with client_ids; pair with
        .dens to reconstruct exact values."""
        return list(self.nums)
