"""Experiment configuration: flat key=value files, flags, validation.

The potential is specified either through a small expression whitelist
(constants, a linear term, sin/cos with integer-or-float multiples of
pi, and sums of those) or through a file of grid samples referenced as
``file:<path>``.
"""

import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .sturm_liouville import Potential

DEFAULT_LAMBDAS = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)
# Measured-mode fit wants more samples than fit coefficients; 16 points
# on a geometric ladder is an engineering default, not a derived value.
DEFAULT_FIT_LAMBDAS = tuple(float(v) for v in np.geomspace(0.125, 32.0, 16))

_TERM_RE = re.compile(
    r"""^\s*
    (?P<coef>[+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)?   # optional coefficient
    \s*\*?\s*
    (?P<body>x|(?:sin|cos)\([^)]*\))?
    \s*$""",
    re.VERBOSE,
)
_TRIG_RE = re.compile(
    r"""^(?P<fn>sin|cos)\(\s*
    (?P<freq>\d+(?:\.\d*)?)?\s*\*?\s*
    (?P<pi>pi)?\s*\*?\s*
    x\s*\)$""",
    re.VERBOSE,
)


def _parse_term(term: str):
    """One whitelist term -> callable of x."""
    m = _TERM_RE.match(term)
    if not m or (m.group("coef") is None and m.group("body") is None):
        raise ConfigError("unrecognized potential term %r" % term)
    coef = float(m.group("coef")) if m.group("coef") is not None else 1.0
    body = m.group("body")
    if body is None:
        return lambda x: coef * np.ones_like(x)
    if body == "x":
        return lambda x: coef * x
    tm = _TRIG_RE.match(body.replace(" ", ""))
    if not tm:
        raise ConfigError("unrecognized trig term %r" % term)
    freq = float(tm.group("freq")) if tm.group("freq") else 1.0
    if tm.group("pi"):
        freq *= np.pi
    fn = np.sin if tm.group("fn") == "sin" else np.cos
    return lambda x: coef * fn(freq * x)


def parse_potential_expression(expr: str, n_nodes: int) -> Potential:
    """Whitelist expression -> grid samples.

    Accepts sums/differences of: numbers, ``x``, ``sin(k*pi*x)``,
    ``cos(k*pi*x)`` with optional leading coefficients.
    """
    cleaned = expr.strip()
    if not cleaned:
        raise ConfigError("empty potential expression")
    # Split on top-level +/- while keeping signs (no nesting to worry
    # about beyond the trig parentheses).
    parts = re.split(r"(?<![eE*(])\s*([+-])\s*(?![^(]*\))", cleaned)
    terms = []
    sign = 1.0
    pending = parts[0]
    if pending:
        terms.append((1.0, pending))
    for k in range(1, len(parts), 2):
        sign = 1.0 if parts[k] == "+" else -1.0
        terms.append((sign, parts[k + 1]))
    x = np.linspace(0.0, 1.0, n_nodes)
    total = np.zeros(n_nodes)
    for sgn, text in terms:
        if not text.strip():
            raise ConfigError("dangling operator in potential expression %r" % expr)
        total += sgn * _parse_term(text)(x)
    return Potential(total)


def load_potential_samples(path: str) -> Potential:
    """One sample per line; '#' comments allowed."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError("cannot read potential file %s: %s" % (path, exc)) from exc
    vals = []
    for ln in lines:
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        try:
            vals.append(float(ln.split()[-1]))
        except ValueError as exc:
            raise ConfigError("bad sample line %r in %s" % (ln, path)) from exc
    if len(vals) < 3:
        raise ConfigError("potential file %s has fewer than 3 samples" % path)
    try:
        return Potential(np.array(vals))
    except ValueError as exc:
        raise ConfigError("invalid potential samples in %s: %s" % (path, exc)) from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of one reconstruction experiment."""

    potential_spec: str = "sin(2*pi*x)"
    n_nodes: int = 201
    j_max: int = 16
    tol_root: float = 1e-10
    tol_iter: float = 1e-8
    tol_quad: float = 1e-8
    max_iter: int = 100
    pulse_T: float = 0.2
    pulse_shape: str = "quartic"
    pulse_amplitude: float = 1.0
    lambdas: tuple = DEFAULT_LAMBDAS
    fit_lambdas: tuple = DEFAULT_FIT_LAMBDAS
    fit_modes: int = 2
    m_steps: int = 6000
    t_end: float = 0.0  # 0 means: use the tail rule
    mode: str = "synthetic"
    seed_free: bool = False
    ridge: float = 0.0
    out_dir: str = "out"
    figures: bool = True
    timings: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.n_nodes < 51 or self.n_nodes % 2 == 0:
            raise ConfigError("n_nodes must be odd and >= 51")
        if self.j_max < 4:
            raise ConfigError("j_max must be >= 4")
        for name in ("tol_root", "tol_iter", "tol_quad"):
            if getattr(self, name) <= 0:
                raise ConfigError("%s must be positive" % name)
        if self.pulse_T <= 0:
            raise ConfigError("pulse_T must be positive")
        if self.pulse_amplitude == 0:
            raise ConfigError("pulse amplitude must be nonzero: a(t) may not vanish identically")
        if self.pulse_shape not in ("quartic", "sine2"):
            raise ConfigError("pulse_shape must be quartic or sine2")
        if self.mode not in ("synthetic", "measured"):
            raise ConfigError("mode must be synthetic or measured")
        if any(l <= 0 for l in self.lambdas) or not self.lambdas:
            raise ConfigError("lambdas must be a nonempty list of positive values")
        if self.m_steps < 100:
            raise ConfigError("m_steps must be >= 100")
        return self

    def potential(self) -> Potential:
        spec = self.potential_spec.strip()
        if spec.startswith("file:"):
            q = load_potential_samples(spec[5:])
            if q.n_nodes % 2 == 0 or q.n_nodes < 51:
                raise ConfigError(
                    "potential file must carry an odd number (>= 51) of samples"
                )
            return q
        return parse_potential_expression(spec, self.n_nodes)

    def effective_t_end(self) -> float:
        if self.t_end > 0:
            return self.t_end
        return max(5.0 * self.pulse_T, 3.0 / min(self.lambdas))

    def echo_lines(self) -> list:
        """Stable key = value listing for file headers.

        out_dir is omitted: it does not affect the computation, and
        leaving it out keeps outputs byte-identical across directories.
        """
        out = []
        for f in fields(self):
            if f.name == "out_dir":
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join("%.12g" % x for x in v)
            out.append("%s = %s" % (f.name, v))
        return out


_FLOAT_KEYS = {
    "tol_root",
    "tol_iter",
    "tol_quad",
    "pulse_T",
    "pulse_amplitude",
    "t_end",
    "ridge",
}
_INT_KEYS = {"n_nodes", "j_max", "m_steps", "max_iter", "fit_modes"}
_BOOL_KEYS = {"seed_free", "figures", "timings"}
_TUPLE_KEYS = {"lambdas", "fit_lambdas"}


def _coerce(key: str, raw: str):
    raw = raw.strip()
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _INT_KEYS:
        return int(raw)
    if key in _BOOL_KEYS:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError("boolean key %s got %r" % (key, raw))
    if key in _TUPLE_KEYS:
        return tuple(float(v) for v in raw.replace(",", " ").split())
    return raw


def load_config(path: str) -> ExperimentConfig:
    """Flat key = value file (comments with '#') -> ExperimentConfig."""
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from exc
    for lineno, ln in enumerate(text.splitlines(), start=1):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        if "=" not in ln:
            raise ConfigError("%s:%d: expected key = value" % (path, lineno))
        key, raw = (s.strip() for s in ln.split("=", 1))
        if key not in known:
            raise ConfigError("%s:%d: unknown key %r" % (path, lineno, key))
        try:
            values[key] = _coerce(key, raw)
        except (ValueError, ConfigError) as exc:
            raise ConfigError("%s:%d: %s" % (path, lineno, exc)) from exc
    return ExperimentConfig(**values)


def apply_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Non-None overrides (CLI flags win over the file)."""
    clean = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **clean) if clean else cfg
