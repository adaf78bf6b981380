"""Line-oriented configuration shared by all CLI subcommands.

A config file holds one ``key=value`` per line with ``#`` comments.
Precedence: command-line flags beat file values beat built-in defaults.
The effective configuration is echoed as header lines into every
artifact a subcommand writes, so outputs are self-describing.
"""

import os

ENV_CONFIG = "CLIRKIT_CONFIG"

DEFAULTS = {
    "source_lang": "en",
    "target_lang": "fr",
    "lambda": "0.7",
    "top_k": "1000",
    "theta": "0.1",
    "topn": "100000",
    "iterations": "5",
    "typical_ratio": "1.0",
    "length_tolerance": "0.40",
    "structure_threshold": "0.20",
    "min_text": "200",
    "max_pairings": "1",
    "cognate_weight": "0.3",
    "cognate_prefix_len": "4",
    "length_variance": "6.8",
    "marginal_floor": "1e-6",
    "digit_rule": "1",
    "alpha": "0.05",
    "oov_policy": "passthrough",
}


def read_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {line!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


class RunConfig:
    """Merged view of defaults, a config file and CLI overrides."""

    def __init__(self, config_path=None, overrides=None):
        self.values = dict(DEFAULTS)
        path = config_path or os.environ.get(ENV_CONFIG)
        if path:
            self.values.update(read_config_file(path))
        if overrides:
            self.values.update({k: str(v) for k, v in overrides.items()
                                if v is not None})

    def get(self, key, default=None):
        return self.values.get(key, default)

    def get_float(self, key):
        return float(self.values[key])

    def get_int(self, key):
        return int(self.values[key])

    def get_bool(self, key):
        return self.values.get(key, "0").lower() in ("1", "true", "yes", "on")

    def header_lines(self, keys):
        """Config header for an artifact, restricted to the keys the
        producing subcommand actually consulted."""
        return [f"config {k}={self.values[k]}" for k in sorted(keys)
                if k in self.values]
