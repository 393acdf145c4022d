"""Job configuration files.

A job is a YAML mapping. Exactly one source block is required::

    command: roundtrip            # optional; must match the CLI subcommand
    realization:                  # phi(z) = C (zI - A)^{-1} B
      C: [[[0, -1]]]
      A: [[[0, -1]]]
      B: [[1]]
    # gbdt:                       # or explicit generating parameters
    #   m1: 1
    #   m2: 1
    #   alpha: [[0]]
    #   sigma0: [[1]]
    #   theta1: [[1]]
    #   theta2: [[1]]
    grid: {x_max: 50, step: 0.001}
    z_points: [[0, 2]]            # [re, im] pairs
    tolerances: {riccati: 1.0e-9}
    output: {path: out.csv, format: csv}

Matrices are row-major nested lists whose entries are real numbers or
``[re, im]`` pairs. Unknown keys are rejected.
"""

from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigInvalid

COMMANDS = ("gen-potential", "weyl-eval", "direct-solve", "inverse", "roundtrip", "bound-states")

TOLERANCE_DEFAULTS = {
    "identity": None,          # make_gbdt default: 1e-10 (1 + ||alpha|| ||sigma0||)
    "riccati": 1e-9,
    "rank": 1e-9,
    "roundtrip_slack": 1e-6,
    "real_eigenvalue": None,   # bound_states default: 1e-8 (1 + ||theta||)
}

DEFAULT_INVERSE_GRID = {"x_max": 5.0, "step": 0.05}

_TOP_KEYS = {"command", "gbdt", "realization", "grid", "z_points", "tolerances", "output"}
_GBDT_KEYS = {"m1", "m2", "alpha", "sigma0", "theta1", "theta2"}
_REAL_KEYS = {"C", "A", "B", "m1", "m2"}


@dataclass
class JobConfig:
    command: str
    gbdt: dict = None
    realization: dict = None
    grid: dict = None
    z_points: list = field(default_factory=list)
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCE_DEFAULTS))
    output_path: str = None
    output_format: str = None


def _line_map(node, path=(), out=None):
    if out is None:
        out = {}
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            _line_map(value, path + (str(key.value),), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            _line_map(value, path + (i,), out)
    return out


class _Reader:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, path, message):
        line = self.lines.get(tuple(path))
        while line is None and path:
            path = path[:-1]
            line = self.lines.get(tuple(path))
        name = ".".join(str(p) for p in path) or None
        raise ConfigInvalid(message, line=line, field=name)

    def keys(self, data, allowed, path):
        if not isinstance(data, dict):
            self.fail(path, "expected a mapping")
        for key in data:
            if key not in allowed:
                self.fail(tuple(path) + (key,), f"unknown key '{key}'")

    def number(self, value, path):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if not np.isfinite(value):
            self.fail(path, "number must be finite")
        return float(value)

    def scalar(self, value, path):
        if isinstance(value, list):
            if len(value) != 2:
                self.fail(path, "complex numbers are written as [re, im]")
            return complex(self.number(value[0], path + (0,)), self.number(value[1], path + (1,)))
        return complex(self.number(value, path))

    def matrix(self, value, path, shape=None):
        if not isinstance(value, list):
            M = np.array([[self.scalar(value, path)]])
        else:
            rows = []
            for i, row in enumerate(value):
                if not isinstance(row, list):
                    self.fail(path + (i,), "matrix rows must be lists")
                rows.append([self.scalar(e, path + (i, k)) for k, e in enumerate(row)])
            if len({len(r) for r in rows}) > 1:
                self.fail(path, "matrix rows have different lengths")
            ncols = len(rows[0]) if rows else 0
            M = np.array(rows, dtype=complex).reshape(len(rows), ncols)
        if shape is not None:
            if M.size == 0:
                M = np.zeros(shape, dtype=complex)
            elif M.shape != shape:
                self.fail(path, f"expected shape {shape}, got {M.shape}")
        return M

    def count(self, value, path):
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            self.fail(path, "expected a positive integer")
        return value


def _parse_gbdt(rd, data):
    p = ("gbdt",)
    rd.keys(data, _GBDT_KEYS, p)
    for key in ("m1", "m2", "alpha", "sigma0", "theta1", "theta2"):
        if key not in data:
            rd.fail(p, f"missing key '{key}'")
    m1 = rd.count(data["m1"], p + ("m1",))
    m2 = rd.count(data["m2"], p + ("m2",))
    alpha = rd.matrix(data["alpha"], p + ("alpha",))
    n = alpha.shape[0] if alpha.size else 0
    if alpha.size and alpha.shape != (n, n):
        rd.fail(p + ("alpha",), "alpha must be square")
    return {
        "m1": m1, "m2": m2, "alpha": alpha.reshape(n, n),
        "sigma0": rd.matrix(data["sigma0"], p + ("sigma0",), (n, n)),
        "theta1": rd.matrix(data["theta1"], p + ("theta1",), (n, m1)),
        "theta2": rd.matrix(data["theta2"], p + ("theta2",), (n, m2)),
    }


def _parse_realization(rd, data):
    p = ("realization",)
    rd.keys(data, _REAL_KEYS, p)
    for key in ("C", "A", "B"):
        if key not in data:
            rd.fail(p, f"missing key '{key}'")
    A = rd.matrix(data["A"], p + ("A",))
    N = A.shape[0] if A.size else 0
    if A.size and A.shape != (N, N):
        rd.fail(p + ("A",), "A must be square")
    C = rd.matrix(data["C"], p + ("C",))
    B = rd.matrix(data["B"], p + ("B",))
    m2 = rd.count(data["m2"], p + ("m2",)) if "m2" in data else (C.shape[0] if C.size else None)
    m1 = rd.count(data["m1"], p + ("m1",)) if "m1" in data else (B.shape[1] if B.size else None)
    if m1 is None or m2 is None:
        rd.fail(p, "give m1 and m2 explicitly for an empty realization")
    C = rd.matrix(data["C"], p + ("C",), (m2, N))
    B = rd.matrix(data["B"], p + ("B",), (N, m1))
    return {"C": C, "A": A.reshape(N, N), "B": B}


def parse_config(text, command=None):
    """Parse and validate a job configuration; raises :class:`ConfigInvalid`."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigInvalid(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                            line=None if mark is None else mark.line + 1) from None
    if node is None or not isinstance(data, dict):
        raise ConfigInvalid("configuration must be a YAML mapping", line=1)
    rd = _Reader(_line_map(node))
    rd.keys(data, _TOP_KEYS, ())

    cmd = data.get("command", command)
    if cmd not in COMMANDS:
        rd.fail(("command",), f"command must be one of {', '.join(COMMANDS)}")
    if command is not None and cmd != command:
        rd.fail(("command",), f"config is for '{cmd}' but '{command}' was requested")
    cfg = JobConfig(command=cmd)

    has_g, has_r = "gbdt" in data, "realization" in data
    if has_g == has_r:
        rd.fail((), "exactly one of 'gbdt' or 'realization' is required")
    if has_g:
        cfg.gbdt = _parse_gbdt(rd, data["gbdt"])
    else:
        cfg.realization = _parse_realization(rd, data["realization"])
    if cmd in ("inverse", "roundtrip") and not has_r:
        rd.fail(("gbdt",), f"'{cmd}' needs a 'realization' source")

    if "grid" in data:
        g = data["grid"]
        rd.keys(g, {"x_max", "step"}, ("grid",))
        for key in ("x_max", "step"):
            if key not in g:
                rd.fail(("grid",), f"missing key '{key}'")
            if rd.number(g[key], ("grid", key)) <= 0:
                rd.fail(("grid", key), "must be positive")
        cfg.grid = {"x_max": float(g["x_max"]), "step": float(g["step"])}
    elif cmd in ("gen-potential", "direct-solve", "roundtrip", "bound-states"):
        rd.fail((), f"'{cmd}' needs a 'grid' block")
    elif cmd == "inverse":
        cfg.grid = dict(DEFAULT_INVERSE_GRID)

    if "z_points" in data:
        zs = data["z_points"]
        if not isinstance(zs, list) or not zs:
            rd.fail(("z_points",), "expected a nonempty list of [re, im] pairs")
        cfg.z_points = [rd.scalar(z, ("z_points", i)) for i, z in enumerate(zs)]
    elif cmd in ("weyl-eval", "direct-solve", "roundtrip"):
        rd.fail((), f"'{cmd}' needs 'z_points'")
    if cmd in ("direct-solve", "roundtrip"):
        for i, z in enumerate(cfg.z_points):
            if z.imag <= 0:
                rd.fail(("z_points", i), f"Im z must be positive for {cmd}, got {z}")

    if "tolerances" in data:
        t = data["tolerances"]
        rd.keys(t, set(TOLERANCE_DEFAULTS), ("tolerances",))
        for key, value in t.items():
            if value is not None and rd.number(value, ("tolerances", key)) <= 0:
                rd.fail(("tolerances", key), "tolerances must be positive")
            cfg.tolerances[key] = None if value is None else float(value)

    if "output" in data:
        o = data["output"]
        rd.keys(o, {"path", "format"}, ("output",))
        if "path" in o:
            if not isinstance(o["path"], str):
                rd.fail(("output", "path"), "expected a string")
            cfg.output_path = o["path"]
        if "format" in o:
            if o["format"] not in ("csv", "doc"):
                rd.fail(("output", "format"), "format must be 'csv' or 'doc'")
            cfg.output_format = o["format"]
    return cfg
