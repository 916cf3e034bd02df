import json
import os
from pathlib import Path

from errors import ConfigError


class Config:
    THREADS = int(os.getenv("DTMECH_THREADS", "1"))
    LOG_LEVEL = os.getenv("DTMECH_LOG_LEVEL", "WARNING")
    SEED = int(os.getenv("DTMECH_SEED", "0"))

    # quadrature
    QUAD_RTOL = float(os.getenv("DTMECH_QUAD_RTOL", "1e-10"))
    QUAD_ATOL = float(os.getenv("DTMECH_QUAD_ATOL", "1e-13"))
    MIN_NODES = 32
    MAX_NODES = int(os.getenv("DTMECH_MAX_NODES", "512"))
    # nodes whose normalized weight falls below this may sit outside a signal's support
    WEIGHT_FLOOR = 1e-25

    # ODE integration
    ODE_RTOL = float(os.getenv("DTMECH_ODE_RTOL", "1e-10"))
    ODE_METHOD = "DOP853"

    # Monte Carlo
    MC_SAMPLES = 10_000
    EXPONENTIAL_SUM_MAX_N = 16

    # Lyapunov fits
    FIT_RESIDUAL_MAX = 0.5


# (hbar, tau) per preset; hbar in J*s and tau in s for si-planck, dimensionless for natural
PRESETS = {
    "natural": {"hbar": 1.0, "tau": 1.0},
    "si-planck": {"hbar": 1.054571817e-34, "tau": 5.4e-44},
}


def load_config_file(path: str) -> dict:
    """Read a JSON experiment file; returned mapping is used as click's default_map."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("Config file must hold a JSON object at the top level.")

    # click wants underscores; accept the dashed spelling used on the command line
    def normalize(d):
        out = {}
        for k, v in d.items():
            key = k.replace("-", "_") if not isinstance(v, dict) else k
            out[key] = normalize(v) if isinstance(v, dict) else v
        return out

    return normalize(data)
