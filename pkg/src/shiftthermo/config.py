"""Algorithm defaults, overridable through ``SHIFTTHERMO_<NAME>`` environment variables."""

from __future__ import annotations

import hashlib
import json
import os

DEFAULTS = {
    "N": 60,  # pressure iterates
    "D": 3,  # cylinder depth of constructed measures
    "tau_add": 1e-9,  # additivity tolerance (relative)
    "tol": 1e-3,  # beta_0 bisection width
    "eps_schedule": [0.1, 0.05, 0.025],
    "series_cap": 10_000,  # max terms of a resolvent series
    "series_rel_tol": 1e-14,
    "k_tail": 3,  # diverging-sequence points used for the ratio limit
    "ratio_spread_tol": 1e-6,
    "core_pressure_tol": 1e-8,
    "beam_width": 100_000,
    "exp_nmax": 6,
    "exp_branches": 50,
}


def _coerce(name: str, raw: str):
    default = DEFAULTS[name]
    if isinstance(default, list):
        return [float(t) for t in raw.replace(",", " ").split()]
    if isinstance(default, int):
        return int(raw)
    return float(raw)


def settings(env: dict[str, str] | None = None) -> dict:
    """Return DEFAULTS with any ``SHIFTTHERMO_*`` overrides applied."""
    env = os.environ if env is None else env
    out = {k: (list(v) if isinstance(v, list) else v) for k, v in DEFAULTS.items()}
    for name in DEFAULTS:
        key = "SHIFTTHERMO_" + name.upper()
        if key in env:
            out[name] = _coerce(name, env[key])
    return out


def fingerprint(cfg: dict | None = None) -> str:
    cfg = settings() if cfg is None else cfg
    blob = json.dumps(cfg, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]
