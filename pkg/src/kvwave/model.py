"""Problem instances: domain, piecewise-constant coefficients, damping layouts.

A problem couples two Dirichlet waves on (0, L),

    u_tt - (a u_x + b(x) u_tx)_x + c(x) y_t = 0,
    y_tt - y_xx               - c(x) u_t = 0,

where b is a Kelvin-Voigt damping profile supported on (alpha1, alpha3) and
c a coupling profile supported on (alpha2, alpha4).  Named presets freeze the
configurations the experiments refer to:

    main_local          local damping and local coupling (the main system)
    global              b(x)=b0 and c(x)=c0 on all of (0, L)
    transmission_local  L=1, a=1, damping = indicator of (1/2, 1), constant
                        coupling c on (0, 1)
    auxiliary           viscous damping (indicator of (alpha2, alpha3-2*eps))
                        on both equations instead of Kelvin-Voigt
    conservative        all damping and coupling switched off (oracle runs)

Coefficients are piecewise constant; the value AT a breakpoint is the value
of the cell to its right (a fixed convention, the endpoints carry no mass).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError


class Preset(enum.Enum):
    MAIN_LOCAL = "main_local"
    GLOBAL = "global"
    TRANSMISSION_LOCAL = "transmission_local"
    AUXILIARY = "auxiliary"
    CONSERVATIVE = "conservative"


class DampingKind(enum.Enum):
    KELVIN_VOIGT = "kelvin_voigt"
    VISCOUS = "viscous"


@dataclass(frozen=True)
class DampingSpec:
    """One damping mechanism on one equation.

    Kelvin-Voigt damping enters through ``(b(x) u_tx)_x`` (a stiffness-like
    form acting on the velocity), viscous damping through ``d(x) u_t``
    (a mass-like form).  ``interval`` is an open subinterval of (0, L).
    """

    kind: DampingKind
    interval: tuple[float, float]
    amplitude: float


@dataclass(frozen=True)
class PiecewiseConstant:
    """Right-continuous piecewise-constant function on [0, L].

    ``breakpoints`` are strictly increasing with first 0 and last L;
    ``values[i]`` is the value on [breakpoints[i], breakpoints[i+1]).
    Evaluation at L returns the value of the last cell.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bp = self.breakpoints
        if len(bp) < 2 or len(self.values) != len(bp) - 1:
            raise ConfigError("piecewise function needs k+1 breakpoints for k values")
        if any(b1 >= b2 for b1, b2 in zip(bp, bp[1:])):
            raise ConfigError("breakpoints must be strictly increasing")

    def __call__(self, x: float) -> float:
        lo, hi = self.breakpoints[0], self.breakpoints[-1]
        if not (lo <= x <= hi):
            raise DomainError(f"x={x} outside [{lo}, {hi}]")
        i = np.searchsorted(self.breakpoints, x, side="right") - 1
        i = min(int(i), len(self.values) - 1)  # x == L falls into the last cell
        return self.values[i]

    def integral(self) -> float:
        bp = np.asarray(self.breakpoints)
        return float(np.sum(np.asarray(self.values) * np.diff(bp)))

    def interior_breakpoints(self) -> tuple[float, ...]:
        return tuple(self.breakpoints[1:-1])


def _profile(L: float, pieces: list[tuple[float, float, float]]) -> PiecewiseConstant:
    """Build a piecewise-constant profile from (lo, hi, amplitude) pieces.

    Pieces may not overlap; gaps get value 0.
    """
    pts = {0.0, L}
    for lo, hi, _ in pieces:
        pts.update((lo, hi))
    bp = sorted(pts)
    vals = []
    for left, right in zip(bp, bp[1:]):
        mid = 0.5 * (left + right)
        v = 0.0
        for lo, hi, amp in pieces:
            if lo < mid < hi:
                v += amp
        vals.append(v)
    return PiecewiseConstant(tuple(bp), tuple(vals))


@dataclass(frozen=True)
class ProblemConfig:
    """Immutable description of one damped/coupled wave system instance."""

    preset: Preset
    L: float
    a: float
    b0: float
    c0: float
    alphas: tuple[float, float, float, float]
    damping_layout: tuple[tuple[DampingSpec, ...], tuple[DampingSpec, ...]]
    coupling_interval: tuple[float, float]
    epsilon: float | None = None

    # ---- preset constructors -------------------------------------------

    @classmethod
    def main_local(cls, L=1.0, a=1.0, b0=1.0, c0=1.0,
                   alphas=(0.2, 0.4, 0.6, 0.8)) -> "ProblemConfig":
        a1, a2, a3, a4 = alphas
        layout = ((DampingSpec(DampingKind.KELVIN_VOIGT, (a1, a3), b0),), ())
        return cls(Preset.MAIN_LOCAL, L, a, b0, c0, tuple(alphas), layout, (a2, a4))

    @classmethod
    def global_damping(cls, L=math.pi, a=2.0, b0=1.0, c0=1.0) -> "ProblemConfig":
        # interior interface points are irrelevant here; keep an admissible set
        alphas = (0.2 * L, 0.4 * L, 0.6 * L, 0.8 * L)
        layout = ((DampingSpec(DampingKind.KELVIN_VOIGT, (0.0, L), b0),), ())
        return cls(Preset.GLOBAL, L, a, b0, c0, alphas, layout, (0.0, L))

    @classmethod
    def transmission_local(cls, c=2.0) -> "ProblemConfig":
        layout = ((DampingSpec(DampingKind.KELVIN_VOIGT, (0.5, 1.0), 1.0),), ())
        return cls(Preset.TRANSMISSION_LOCAL, 1.0, 1.0, 1.0, float(c),
                   (0.2, 0.4, 0.6, 0.8), layout, (0.0, 1.0))

    @classmethod
    def auxiliary(cls, L=1.0, a=1.0, c0=1.0, alphas=(0.2, 0.3, 0.7, 0.8),
                  epsilon=0.05) -> "ProblemConfig":
        # default interfaces put the viscous interval (alpha2, alpha3-2eps)
        # across the x = L/2 node of the second Dirichlet mode; centering it
        # there (e.g. alphas 0.2/0.4/0.6/0.8) leaves that mode weakly damped
        # and the resolvent envelope visibly peaked at low frequency
        a1, a2, a3, a4 = alphas
        iv = (a2, a3 - 2.0 * epsilon)
        spec = DampingSpec(DampingKind.VISCOUS, iv, 1.0)
        return cls(Preset.AUXILIARY, L, a, 0.0, c0, tuple(alphas),
                   ((spec,), (spec,)), (a2, a4), epsilon=epsilon)

    @classmethod
    def conservative(cls, L=1.0, a=1.0) -> "ProblemConfig":
        return cls(Preset.CONSERVATIVE, L, a, 0.0, 0.0,
                   (0.2 * L, 0.4 * L, 0.6 * L, 0.8 * L), ((), ()), (0.0, L))

    # ---- coefficient profiles ------------------------------------------

    def damping_profile(self, equation: int, kind: DampingKind) -> PiecewiseConstant:
        """Profile of all `kind` dampings acting on equation 0 (u) or 1 (y)."""
        pieces = [(s.interval[0], s.interval[1], s.amplitude)
                  for s in self.damping_layout[equation] if s.kind is kind]
        return _profile(self.L, pieces)

    def b_profile(self) -> PiecewiseConstant:
        return self.damping_profile(0, DampingKind.KELVIN_VOIGT)

    def c_profile(self) -> PiecewiseConstant:
        lo, hi = self.coupling_interval
        return _profile(self.L, [(lo, hi, self.c0)] if self.c0 != 0.0 else [])

    def viscous_profile(self, equation: int) -> PiecewiseConstant:
        return self.damping_profile(equation, DampingKind.VISCOUS)

    def interior_breakpoints(self) -> tuple[float, ...]:
        pts: set[float] = set()
        for prof in (self.b_profile(), self.c_profile(),
                     self.viscous_profile(0), self.viscous_profile(1)):
            pts.update(prof.interior_breakpoints())
        return tuple(sorted(pts))


def coefficient_b(config: ProblemConfig, x: float) -> float:
    """Kelvin-Voigt damping coefficient b(x) of the u-equation."""
    return config.b_profile()(x)


def coefficient_c(config: ProblemConfig, x: float) -> float:
    """Coupling coefficient c(x)."""
    return config.c_profile()(x)


def validate(config: ProblemConfig) -> list[str]:
    """Check every invariant; returns the list of violations (empty = ok).

    Violations are data, not exceptions: downstream assembly refuses configs
    for which this list is nonempty.
    """
    v: list[str] = []
    L, a = config.L, config.a
    if not L > 0:
        v.append(f"domain length must be positive, got L={L}")
    if not a > 0:
        v.append(f"wave speed coefficient must be positive, got a={a}")
    a1, a2, a3, a4 = config.alphas
    if not (0 < a1 < a2 < a3 < a4 < L):
        v.append(f"interfaces not strictly ordered inside (0, L): "
                 f"alphas={config.alphas}, L={L}")
    if config.b0 < 0:
        v.append(f"damping amplitude must be nonnegative, got b0={config.b0}")
    if config.preset is not Preset.TRANSMISSION_LOCAL and config.c0 < 0:
        v.append(f"coupling amplitude must be nonnegative, got c0={config.c0}")

    for eq, specs in enumerate(config.damping_layout):
        for s in specs:
            lo, hi = s.interval
            if not (0 <= lo < hi <= L):
                v.append(f"damping interval {s.interval} of equation "
                         f"{'uy'[eq]} not inside (0, {L})")
            if s.amplitude < 0:
                v.append(f"damping amplitude must be nonnegative, got {s.amplitude}")
    lo, hi = config.coupling_interval
    if not (0 <= lo < hi <= L):
        v.append(f"coupling interval {config.coupling_interval} not inside (0, {L})")

    p = config.preset
    if p is Preset.MAIN_LOCAL and not config.b0 > 0:
        v.append("main_local requires b0 > 0")
    if p is Preset.TRANSMISSION_LOCAL:
        if L != 1.0 or a != 1.0:
            v.append("transmission_local forces L=1 and a=1")
        kv = [s for s in config.damping_layout[0] if s.kind is DampingKind.KELVIN_VOIGT]
        if len(kv) != 1 or kv[0].interval != (0.5, 1.0) or kv[0].amplitude != 1.0:
            v.append("transmission_local forces unit damping on (1/2, 1)")
        if config.coupling_interval != (0.0, 1.0):
            v.append("transmission_local forces coupling on all of (0, 1)")
    if p is Preset.AUXILIARY:
        eps = config.epsilon
        if eps is None or not 0 < eps < (a3 - a1) / 4:
            v.append(f"epsilon too large: need 0 < epsilon < (alpha3-alpha1)/4 "
                     f"= {(a3 - a1) / 4}, got {eps}")
        for eq in (0, 1):
            if any(s.kind is DampingKind.KELVIN_VOIGT for s in config.damping_layout[eq]):
                v.append("auxiliary preset admits viscous damping only")
        d0 = config.viscous_profile(0)
        d1 = config.viscous_profile(1)
        if d0 != d1:
            v.append("auxiliary damping must act identically on both equations")
    if p is Preset.CONSERVATIVE and (config.b0 != 0 or config.c0 != 0
                                     or any(config.damping_layout)):
        v.append("conservative preset must have no damping and no coupling")
    return v


# ---------------------------------------------------------------------------
# Config file loading
#
# Line-oriented "key = value" text.  Optional sections override the preset
# damping per equation and carry experiment parameters:
#
#     preset = main_local
#     L = 1.0
#     b0 = 1.0
#     [damping u]
#     kind = kelvin_voigt
#     interval = 0.2 0.6
#     amplitude = 1.0
#     [experiment]
#     n_cells = 400
#
# Unknown keys are errors; duplicate keys report both offending lines.
# ---------------------------------------------------------------------------

_PROBLEM_KEYS = ("L", "a", "b0", "c0", "alpha1", "alpha2", "alpha3", "alpha4",
                 "preset", "epsilon", "c")
_DAMPING_KEYS = ("kind", "interval", "amplitude")
_SECTION_RE = re.compile(r"^\[\s*([a-zA-Z_][\w ./-]*?)\s*\]$")


@dataclass
class ConfigText:
    """Parsed key/value file: section name -> {key: (lineno, raw value)}."""

    path: str
    sections: dict[str, dict[str, tuple[int, str]]] = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        entry = self.sections.get(section, {}).get(key)
        return default if entry is None else entry[1]

    def getfloat(self, section: str, key: str, default=None):
        entry = self.sections.get(section, {}).get(key)
        if entry is None:
            return default
        lineno, raw = entry
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{self.path}:{lineno}: malformed number "
                              f"for '{key}': {raw!r}") from None

    def getint(self, section: str, key: str, default=None):
        entry = self.sections.get(section, {}).get(key)
        if entry is None:
            return default
        lineno, raw = entry
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{self.path}:{lineno}: malformed integer "
                              f"for '{key}': {raw!r}") from None

    def check_keys(self, section: str, allowed) -> None:
        for key, (lineno, _) in self.sections.get(section, {}).items():
            if key not in allowed:
                raise ConfigError(f"{self.path}:{lineno}: unknown key "
                                  f"'{key}' in section [{section or 'top'}]")


def read_config_text(path: str) -> ConfigText:
    text = ConfigText(str(path))
    section = ""
    lines_seen: dict[tuple[str, str], int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            m = _SECTION_RE.match(stripped)
            if m:
                section = m.group(1).strip().lower()
                text.sections.setdefault(section, {})
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', "
                                  f"got {stripped!r}")
            key, _, value = stripped.partition("=")
            key = key.strip()
            value = value.strip()
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            prev = lines_seen.get((section, key))
            if prev is not None:
                raise ConfigError(f"{path}:{lineno}: duplicate key '{key}' "
                                  f"(first set on line {prev})")
            lines_seen[(section, key)] = lineno
            text.sections.setdefault(section, {})[key] = (lineno, value)
    return text


def _parse_damping_section(text: ConfigText, section: str) -> tuple[DampingSpec, ...]:
    text.check_keys(section, _DAMPING_KEYS)
    kind_raw = text.get(section, "kind", "none")
    if kind_raw == "none":
        return ()
    try:
        kind = DampingKind(kind_raw)
    except ValueError:
        lineno = text.sections[section]["kind"][0]
        raise ConfigError(f"{text.path}:{lineno}: unknown damping kind "
                          f"{kind_raw!r}") from None
    iv_entry = text.sections.get(section, {}).get("interval")
    if iv_entry is None:
        raise ConfigError(f"{text.path}: section [{section}] needs 'interval'")
    lineno, raw = iv_entry
    parts = raw.replace(",", " ").split()
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{text.path}:{lineno}: interval must be two "
                          f"numbers, got {raw!r}") from None
    amp = text.getfloat(section, "amplitude", 1.0)
    return (DampingSpec(kind, (lo, hi), amp),)


def problem_from_text(text: ConfigText) -> ProblemConfig:
    """Build and return the ProblemConfig described by a parsed file.

    Tolerates an [experiment] section (owned by the CLI); any other unknown
    section or key is an error.
    """
    for section in text.sections:
        if section not in ("", "damping u", "damping y", "experiment"):
            raise ConfigError(f"{text.path}: unknown section [{section}]")
    text.check_keys("", _PROBLEM_KEYS)

    preset_raw = text.get("", "preset")
    if preset_raw is None:
        raise ConfigError(f"{text.path}: missing required key 'preset'")
    try:
        preset = Preset(preset_raw)
    except ValueError:
        lineno = text.sections[""]["preset"][0]
        raise ConfigError(f"{text.path}:{lineno}: unknown preset "
                          f"{preset_raw!r}") from None

    alphas_given = [text.getfloat("", f"alpha{i}") for i in (1, 2, 3, 4)]
    has_alphas = any(x is not None for x in alphas_given)
    if has_alphas and not all(x is not None for x in alphas_given):
        raise ConfigError(f"{text.path}: give all of alpha1..alpha4 or none")
    if preset is not Preset.AUXILIARY and text.get("", "epsilon") is not None:
        lineno = text.sections[""]["epsilon"][0]
        raise ConfigError(f"{text.path}:{lineno}: 'epsilon' only applies to "
                          "the auxiliary preset")
    if preset is not Preset.TRANSMISSION_LOCAL and text.get("", "c") is not None:
        lineno = text.sections[""]["c"][0]
        raise ConfigError(f"{text.path}:{lineno}: 'c' only applies to the "
                          "transmission_local preset (use c0)")

    def base() -> ProblemConfig:
        kw = {}
        for name in ("L", "a", "b0", "c0"):
            val = text.getfloat("", name)
            if val is not None:
                kw[name] = val
        if preset is Preset.MAIN_LOCAL:
            if has_alphas:
                kw["alphas"] = tuple(alphas_given)
            return ProblemConfig.main_local(**kw)
        if preset is Preset.GLOBAL:
            return ProblemConfig.global_damping(**kw)
        if preset is Preset.TRANSMISSION_LOCAL:
            for bad in ("L", "a", "b0", "c0"):
                if bad in kw:
                    raise ConfigError(f"{text.path}: transmission_local takes "
                                      f"only 'c', not '{bad}'")
            c = text.getfloat("", "c", 2.0)
            return ProblemConfig.transmission_local(c=c)
        if preset is Preset.AUXILIARY:
            kw.pop("b0", None)
            if has_alphas:
                kw["alphas"] = tuple(alphas_given)
            eps = text.getfloat("", "epsilon")
            if eps is not None:
                kw["epsilon"] = eps
            return ProblemConfig.auxiliary(**kw)
        kw.pop("b0", None)
        kw.pop("c0", None)
        return ProblemConfig.conservative(**kw)

    config = base()

    overrides = {}
    for eq, section in ((0, "damping u"), (1, "damping y")):
        if section in text.sections:
            overrides[eq] = _parse_damping_section(text, section)
    if overrides:
        layout = tuple(overrides.get(eq, config.damping_layout[eq]) for eq in (0, 1))
        config = ProblemConfig(config.preset, config.L, config.a, config.b0,
                               config.c0, config.alphas, layout,
                               config.coupling_interval, config.epsilon)
    return config


def load_problem(path: str) -> ProblemConfig:
    """Load a ProblemConfig from a key = value text file."""
    return problem_from_text(read_config_text(path))
