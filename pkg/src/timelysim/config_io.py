"""YAML config files for SystemConfig.

Conventions: slot counts and service times are integers; probabilities,
requirements, and sojourn means are decimal strings ("0.85") or fraction
strings ("9/13"), parsed exactly. Dumping uses the shortest exact form, so
a load/dump cycle is lossless.

Top-level keys: mode, T, horizon_periods, seed, nonrt_client, channel,
clients. See the README for a complete example.
"""

import warnings
from fractions import Fraction

import yaml

from .channel import GlobalMarkov, PerClientTwoState, Static, TwoStateParams
from .markov import as_fraction
from .model import ClientSpec, FIXED_RATE, SystemConfig, validate
from .traffic import MarkovVBR, Periodic


def frac_str(x):
    """Shortest exact text form: integer, terminating decimal, or "p/q"."""
    f = Fraction(x)
    if f.denominator == 1:
        return str(f.numerator)
    d = f.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d == 1:
        digits = max(twos, fives)
        scaled = abs(f.numerator) * 10**digits // f.denominator
        s = str(scaled).rjust(digits + 1, "0")
        sign = "-" if f.numerator < 0 else ""
        return f"{sign}{s[:-digits]}.{s[-digits:]}"
    return f"{f.numerator}/{f.denominator}"


def _need(mapping, key, where):
    if key not in mapping:
        raise ValueError(f"{where}: missing required key {key!r}")
    return mapping[key]


def _arrival_from_dict(d, where):
    kind = _need(d, "kind", where)
    if kind == "periodic":
        return Periodic(int(_need(d, "interval", where)), int(_need(d, "offset", where)))
    if kind == "markov-vbr":
        states = tuple(
            (str(label), as_fraction(p)) for label, p in _need(d, "states", where)
        )
        matrix = tuple(
            tuple(as_fraction(p) for p in row) for row in _need(d, "matrix", where)
        )
        return MarkovVBR(states, matrix)
    raise ValueError(f"{where}: unknown arrival kind {kind!r}")


def _arrival_to_dict(model):
    if isinstance(model, Periodic):
        return {"kind": "periodic", "interval": model.interval, "offset": model.offset}
    return {
        "kind": "markov-vbr",
        "states": [[label, frac_str(p)] for label, p in model.states],
        "matrix": [[frac_str(p) for p in row] for row in model.matrix],
    }


def _channel_from_dict(d, mode):
    kind = _need(d, "kind", "channel")
    if kind == "static":
        return Static(str(d.get("label", "static")))
    if kind == "per-client-two-state":
        params = {}
        for cid, pr in _need(d, "params", "channel").items():
            where = f"channel.params[{cid}]"
            params[int(cid)] = TwoStateParams(
                _value(_need(pr, "good_value", where), mode),
                _value(_need(pr, "bad_value", where), mode),
                as_fraction(_need(pr, "mean_good_periods", where)),
                as_fraction(_need(pr, "mean_bad_periods", where)),
            )
        return PerClientTwoState(params)
    if kind == "global-markov":
        labels = tuple(str(s) for s in _need(d, "labels", "channel"))
        matrix = tuple(
            tuple(as_fraction(p) for p in row) for row in _need(d, "matrix", "channel")
        )
        return GlobalMarkov(labels, matrix)
    raise ValueError(f"channel: unknown kind {kind!r}")


def _value(v, mode):
    """Fixed-rate channel values are probabilities; rate-adaptation values
    are integer slot counts."""
    return as_fraction(v) if mode == FIXED_RATE else int(v)


def _channel_to_dict(model, mode):
    if isinstance(model, Static):
        return {"kind": "static", "label": model.label}
    if isinstance(model, PerClientTwoState):
        return {
            "kind": "per-client-two-state",
            "params": {
                cid: {
                    "good_value": _value_out(pr.good_value, mode),
                    "bad_value": _value_out(pr.bad_value, mode),
                    "mean_good_periods": frac_str(pr.mean_good_periods),
                    "mean_bad_periods": frac_str(pr.mean_bad_periods),
                }
                for cid, pr in sorted(model.params.items())
            },
        }
    return {
        "kind": "global-markov",
        "labels": list(model.labels),
        "matrix": [[frac_str(p) for p in row] for row in model.matrix],
    }


def _value_out(v, mode):
    return frac_str(v) if mode == FIXED_RATE else int(v)


def config_from_dict(raw):
    mode = str(_need(raw, "mode", "config"))
    channel = _channel_from_dict(_need(raw, "channel", "config"), mode)
    clients = []
    for i, c in enumerate(_need(raw, "clients", "config")):
        where = f"clients[{i}]"
        clients.append(
            ClientSpec(
                int(_need(c, "id", where)),
                as_fraction(_need(c, "q", where)),
                int(_need(c, "tau", where)),
                _arrival_from_dict(_need(c, "arrival", where), where),
                {
                    str(label): _value(v, mode)
                    for label, v in _need(c, "channel_params", where).items()
                },
            )
        )
    return SystemConfig(
        tuple(clients),
        int(_need(raw, "T", "config")),
        mode,
        channel,
        int(raw.get("horizon_periods", 1000)),
        int(raw.get("seed", 0)),
        nonrt_client=bool(raw.get("nonrt_client", False)),
    )


def config_to_dict(config):
    return {
        "mode": config.mode,
        "T": config.T,
        "horizon_periods": config.horizon_periods,
        "seed": config.seed,
        "nonrt_client": config.nonrt_client,
        "channel": _channel_to_dict(config.channel_model, config.mode),
        "clients": [
            {
                "id": c.id,
                "q": frac_str(c.q),
                "tau": c.tau,
                "arrival": _arrival_to_dict(c.arrival),
                "channel_params": {
                    label: _value_out(v, config.mode)
                    for label, v in sorted(c.channel_params.items())
                },
            }
            for c in config.clients
        ],
    }


def load_config(path):
    """Parse and validate a config file. Error diagnostics fail the load;
    warning diagnostics are emitted as warnings."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ValueError(f"{path}: parse error: {e}") from e
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a mapping at the top level")
    try:
        config = config_from_dict(raw)
    except (ValueError, TypeError, KeyError) as e:
        raise ValueError(f"{path}: {e}") from e
    diagnostics = validate(config)
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        listing = "\n  ".join(str(d) for d in errors)
        raise ValueError(f"{path}: invalid config:\n  {listing}")
    for d in diagnostics:
        if d.severity != "error":
            warnings.warn(f"{path}: {d}", stacklevel=2)
    return config


def dump_config(config, path=None):
    """Serialize to YAML text; optionally write it to path."""
    text = yaml.safe_dump(config_to_dict(config), sort_keys=False, allow_unicode=True)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text
