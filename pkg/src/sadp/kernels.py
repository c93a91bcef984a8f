"""Bounded learning functions L(kappa): linear, analytical, and device-derived.

The device path turns memtransistor potentiation/depression conductance
traces into normalized updates dG/G0, places them on evenly spaced agreement
grids over (0,1] and [-1,0), and fits one cubic least-squares spline per
half-domain under a residual budget s (fewest interior knots whose residual
sum of squares meets the budget). The analytical kernel mirrors the two
exponential STDP branches across zero so potentiation peaks at full
agreement instead of small causal lag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline, make_lsq_spline

from .errors import (
    DataError,
    DomainError,
    FitError,
    ParseError,
    UnsupportedVersionError,
)

KERNEL_FILE_VERSION = 1

POTENTIATION = "potentiation"
DEPRESSION = "depression"

_KAPPA_TOL = 1e-9


@dataclass(frozen=True)
class StdpParams:
    """Amplitudes and decay constants of the two exponential branches.

    Decay constants are expressed in normalized agreement units for the
    analytical agreement kernel, and in timesteps for the raw STDP kernel.
    """

    A_plus: float = 0.01
    A_minus: float = 0.01
    tau_plus: float = 0.25
    tau_minus: float = 0.25

    def __post_init__(self):
        for name in ("A_plus", "A_minus", "tau_plus", "tau_minus"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0")


def _check_kappa(kappa):
    kappa = np.asarray(kappa, dtype=np.float64)
    if np.any(np.abs(kappa) > 1.0 + _KAPPA_TOL):
        raise DomainError("kappa outside [-1, 1]")
    return np.clip(kappa, -1.0, 1.0)


def linear_kernel(kappa: float, eta_pot: float, eta_dep: float) -> float:
    """eta_pot * kappa for kappa > 0, eta_dep * kappa for kappa < 0."""
    if eta_pot <= 0 or eta_dep <= 0:
        raise DomainError("learning rates must be > 0")
    k = float(_check_kappa(kappa))
    if k > 0:
        return eta_pot * k
    if k < 0:
        return eta_dep * k
    return 0.0


def stdp_kernel(dt: float, p: StdpParams) -> float:
    """Classical pair-based kernel over the spike-time difference dt."""
    if dt == 0:
        raise DomainError("STDP kernel is undefined at dt = 0")
    if dt > 0:
        return p.A_plus * np.exp(-dt / p.tau_plus)
    return -p.A_minus * np.exp(dt / p.tau_minus)


def ideal_sadp_kernel(delta, p: StdpParams, literal_shift: bool = False):
    """Analytical agreement kernel: potentiation peaks at delta = 1.

    delta > 0:  A+ exp(-(1 - delta)/tau+)
    delta < 0: -A- exp(-(1 + delta)/tau-)
    delta = 0:  0 by convention.

    literal_shift=True instead evaluates the raw shifted STDP branches
    (K_STDP(delta -+ 1)), which assigns depression-branch values to positive
    agreement; kept only as an alternate for comparison.
    """
    delta = _check_kappa(delta)
    scalar = delta.ndim == 0
    delta = np.atleast_1d(delta)
    out = np.zeros_like(delta)
    pos = delta > 0
    neg = delta < 0
    if literal_shift:
        # K_STDP(delta - 1) for delta > 0; K_STDP(delta + 1) for delta < 0.
        out[pos] = -p.A_minus * np.exp((delta[pos] - 1.0) / p.tau_minus)
        out[neg] = p.A_plus * np.exp(-(delta[neg] + 1.0) / p.tau_plus)
    else:
        out[pos] = p.A_plus * np.exp(-(1.0 - delta[pos]) / p.tau_plus)
        out[neg] = -p.A_minus * np.exp(-(1.0 + delta[neg]) / p.tau_minus)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Device traces
# ---------------------------------------------------------------------------

CSV_HEADER = "pulse_index,conductance_S,phase"
_PHASE_CODES = {"P": POTENTIATION, "D": DEPRESSION}


@dataclass
class DeviceTrace:
    """Ordered conductance samples from potentiation/depression pulse runs."""

    pulse_index: np.ndarray   # int, strictly increasing within each phase
    conductance: np.ndarray   # siemens, > 0
    phase: np.ndarray         # POTENTIATION / DEPRESSION per sample

    def __post_init__(self):
        self.pulse_index = np.asarray(self.pulse_index, dtype=np.int64)
        self.conductance = np.asarray(self.conductance, dtype=np.float64)
        self.phase = np.asarray(self.phase, dtype=object)
        if not (len(self.pulse_index) == len(self.conductance) == len(self.phase)):
            raise DataError("trace columns have mismatched lengths")
        if np.any(self.conductance <= 0):
            raise DataError("conductance must be > 0")
        for ph in (POTENTIATION, DEPRESSION):
            idx = self.pulse_index[self.phase == ph]
            if idx.size and np.any(np.diff(idx) <= 0):
                raise DataError(f"pulse_index not strictly increasing in {ph} phase")

    def phase_conductance(self, ph: str) -> np.ndarray:
        return self.conductance[self.phase == ph]

    @classmethod
    def from_csv(cls, path) -> "DeviceTrace":
        with open(path) as f:
            lines = [ln.strip() for ln in f if ln.strip()]
        if not lines or lines[0] != CSV_HEADER:
            raise ParseError(f"line 1: expected header {CSV_HEADER!r}")
        idx, g, ph = [], [], []
        for lineno, ln in enumerate(lines[1:], start=2):
            parts = ln.split(",")
            if len(parts) != 3:
                raise ParseError(f"line {lineno}: expected 3 fields, got {len(parts)}")
            try:
                idx.append(int(parts[0]))
                g.append(float(parts[1]))
            except ValueError as e:
                raise ParseError(f"line {lineno}: {e}") from None
            if parts[2] not in _PHASE_CODES:
                raise ParseError(f"line {lineno}: phase must be P or D, got {parts[2]!r}")
            ph.append(_PHASE_CODES[parts[2]])
        return cls(np.array(idx), np.array(g), np.array(ph, dtype=object))

    def to_csv(self, path) -> None:
        codes = {v: k for k, v in _PHASE_CODES.items()}
        with open(path, "w") as f:
            f.write(CSV_HEADER + "\n")
            for i, g, ph in zip(self.pulse_index, self.conductance, self.phase):
                f.write(f"{int(i)},{float(g)!r},{codes[ph]}\n")


def extract_updates(trace: DeviceTrace, eps: float = 1e-8):
    """Normalized updates (G[t+1]-G[t])/(G[t]+eps) on even agreement grids.

    Potentiation updates are sorted ascending onto the ascending grid over
    (0,1] (strongest update at delta=1); depression updates are sorted so the
    largest-magnitude (most negative) update sits at delta=-1.

    Returns (grid_pot, dg_pot, grid_dep, dg_dep).
    """
    results = {}
    for ph in (POTENTIATION, DEPRESSION):
        g = trace.phase_conductance(ph)
        if g.size < 5:
            raise FitError(f"{ph} phase has {g.size} samples, need >= 5")
        dg = np.diff(g) / (g[:-1] + eps)
        n = dg.size
        if ph == POTENTIATION:
            grid = np.linspace(1.0 / n, 1.0, n)
            results[ph] = (grid, np.sort(dg))
        else:
            grid = np.linspace(-1.0, -1.0 / n, n)
            # ascending sort puts the most negative update first, i.e. at -1
            results[ph] = (grid, np.sort(dg))
    gp, up = results[POTENTIATION]
    gd, ud = results[DEPRESSION]
    return gp, up, gd, ud


# ---------------------------------------------------------------------------
# Spline fitting
# ---------------------------------------------------------------------------


def _fit_half(x: np.ndarray, y: np.ndarray, s: float, max_knots: int):
    """Fewest-interior-knot cubic least-squares fit with residual <= s."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.size != y.size:
        raise FitError("grid/update arrays must be equal-length vectors")
    if np.any(np.diff(x) <= 0):
        raise FitError("grid must be strictly increasing")
    k = 3
    best_residual = np.inf
    n_interior = 0
    while True:
        if n_interior == 0:
            interior = np.array([])
        else:
            # interior knots at interior quantiles keeps Schoenberg-Whitney happy
            qs = np.linspace(0, 1, n_interior + 2)[1:-1]
            interior = np.quantile(x, qs)
        t = np.r_[[x[0]] * (k + 1), interior, [x[-1]] * (k + 1)]
        try:
            spl = make_lsq_spline(x, y, t, k=k)
        except Exception:
            break
        residual = float(np.sum((spl(x) - y) ** 2))
        best_residual = min(best_residual, residual)
        if residual <= s:
            return spl, residual
        if n_interior >= max_knots:
            break
        n_interior = max(1, n_interior * 2)
    raise FitError(
        f"cannot meet smoothing budget s={s} with <= {max_knots} interior knots "
        f"(best residual {best_residual:.6g})",
        achieved_residual=best_residual,
    )


@dataclass
class SplineKernel:
    """Cubic-spline halves f+ on (0,1] and f- on [-1,0); L(0) = 0."""

    spline_pot: BSpline
    spline_dep: BSpline
    s_pot: float
    s_dep: float
    residual_pot: float
    residual_dep: float

    kind = "spline"

    def evaluate(self, kappa: np.ndarray) -> np.ndarray:
        kappa = np.atleast_1d(np.asarray(kappa, dtype=np.float64))
        out = np.zeros_like(kappa)
        pos = kappa > 0
        neg = kappa < 0
        if pos.any():
            tp = self.spline_pot.t
            out[pos] = self.spline_pot(np.clip(kappa[pos], tp[0], tp[-1]))
        if neg.any():
            td = self.spline_dep.t
            out[neg] = self.spline_dep(np.clip(kappa[neg], td[0], td[-1]))
        return out


def fit_spline_kernel(
    grid_pot, dg_pot, grid_dep, dg_dep, s_pot: float = 0.1, s_dep: float = 0.01,
    max_knots: int = 64,
) -> SplineKernel:
    """Fit both half-domain splines from extract_updates output."""
    spl_pot, res_pot = _fit_half(grid_pot, dg_pot, s_pot, max_knots)
    spl_dep, res_dep = _fit_half(grid_dep, dg_dep, s_dep, max_knots)
    return SplineKernel(
        spline_pot=spl_pot,
        spline_dep=spl_dep,
        s_pot=s_pot,
        s_dep=s_dep,
        residual_pot=res_pot,
        residual_dep=res_dep,
    )


# ---------------------------------------------------------------------------
# Kernel objects and dispatch
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearKernel:
    eta_pot: float = 0.01
    eta_dep: float = 0.01

    kind = "linear"

    def evaluate(self, kappa: np.ndarray) -> np.ndarray:
        kappa = np.atleast_1d(np.asarray(kappa, dtype=np.float64))
        return np.where(kappa > 0, self.eta_pot * kappa, self.eta_dep * kappa)


@dataclass(frozen=True)
class IdealSadpKernel:
    params: StdpParams = field(default_factory=StdpParams)
    literal_shift: bool = False

    kind = "ideal"

    def evaluate(self, kappa: np.ndarray) -> np.ndarray:
        return np.atleast_1d(
            ideal_sadp_kernel(kappa, self.params, literal_shift=self.literal_shift)
        )


def eval_kernel(kernel, kappa, l_max: float = 1.0):
    """Evaluate any kernel at kappa in [-1,1], clamped to |L| <= l_max."""
    kappa = _check_kappa(kappa)
    scalar = kappa.ndim == 0
    out = kernel.evaluate(np.atleast_1d(kappa))
    out = np.clip(out, -l_max, l_max)
    out[np.atleast_1d(kappa) == 0.0] = 0.0
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Kernel file I/O (human-readable JSON, versioned)
# ---------------------------------------------------------------------------


def _bspline_payload(spl: BSpline) -> dict:
    return {"knots": spl.t.tolist(), "coefficients": spl.c.tolist(), "degree": spl.k}


def _bspline_from_payload(d: dict) -> BSpline:
    return BSpline(np.array(d["knots"]), np.array(d["coefficients"]), d["degree"])


def export_kernel(kernel, path) -> None:
    doc = {"version": KERNEL_FILE_VERSION, "kind": kernel.kind}
    if kernel.kind == "linear":
        doc["params"] = {"eta_pot": kernel.eta_pot, "eta_dep": kernel.eta_dep}
    elif kernel.kind == "ideal":
        p = kernel.params
        doc["params"] = {
            "A_plus": p.A_plus,
            "A_minus": p.A_minus,
            "tau_plus": p.tau_plus,
            "tau_minus": p.tau_minus,
        }
        doc["literal_shift"] = kernel.literal_shift
    elif kernel.kind == "spline":
        doc["potentiation"] = _bspline_payload(kernel.spline_pot)
        doc["depression"] = _bspline_payload(kernel.spline_dep)
        doc["s"] = {"potentiation": kernel.s_pot, "depression": kernel.s_dep}
        doc["fit_residual"] = {
            "potentiation": kernel.residual_pot,
            "depression": kernel.residual_dep,
        }
    else:
        raise DomainError(f"unknown kernel kind {kernel.kind!r}")
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def import_kernel(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed kernel file at line {e.lineno}: {e.msg}") from None
    if not isinstance(doc, dict) or "version" not in doc:
        raise ParseError("kernel file missing 'version' field")
    if doc["version"] != KERNEL_FILE_VERSION:
        raise UnsupportedVersionError(
            f"kernel file version {doc['version']} unsupported "
            f"(expected {KERNEL_FILE_VERSION})"
        )
    try:
        kind = doc["kind"]
        if kind == "linear":
            return LinearKernel(**doc["params"])
        if kind == "ideal":
            return IdealSadpKernel(
                params=StdpParams(**doc["params"]),
                literal_shift=doc.get("literal_shift", False),
            )
        if kind == "spline":
            return SplineKernel(
                spline_pot=_bspline_from_payload(doc["potentiation"]),
                spline_dep=_bspline_from_payload(doc["depression"]),
                s_pot=doc["s"]["potentiation"],
                s_dep=doc["s"]["depression"],
                residual_pot=doc["fit_residual"]["potentiation"],
                residual_dep=doc["fit_residual"]["depression"],
            )
    except KeyError as e:
        raise ParseError(f"kernel file missing field {e}") from None
    raise ParseError(f"unknown kernel kind {doc['kind']!r}")


def synthetic_saturation_trace(
    n_pulses: int = 1000,
    g_min: float = 1e-6,
    g_max: float = 5e-6,
    tau: float = 200.0,
    noise: float = 0.0,
    seed: int = 0,
) -> DeviceTrace:
    """Exponential-saturation P/D trace shaped like the recorded device curve."""
    t = np.arange(n_pulses, dtype=np.float64)
    rng = np.random.default_rng(seed)
    g_pot = g_min + (g_max - g_min) * (1.0 - np.exp(-t / tau))
    g_dep = g_max - (g_max - g_min) * (1.0 - np.exp(-t / tau))
    if noise:
        g_pot = np.maximum(g_pot + rng.normal(0, noise, n_pulses), g_min * 1e-3)
        g_dep = np.maximum(g_dep + rng.normal(0, noise, n_pulses), g_min * 1e-3)
    return DeviceTrace(
        pulse_index=np.r_[np.arange(n_pulses), np.arange(n_pulses)],
        conductance=np.r_[g_pot, g_dep],
        phase=np.array([POTENTIATION] * n_pulses + [DEPRESSION] * n_pulses, dtype=object),
    )
