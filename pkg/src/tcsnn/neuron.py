"""Fixed-point spiking neuron models.

Five variants share one integrate-fire-reset core:

- ``lif``            binary in / binary out (ignores input spike weights)
- ``iw-lif``         weighted in / binary out
- ``iow-lif``        weighted in / weighted out (multi-threshold firing)
- ``burst-lif``      binary burst model with per-source burst gain g
- ``iow-burst-lif``  weighted burst model (g updated by beta**weight)

Step functions operate on whole populations (int64 arrays of raw fixed-point
values) and are pure transitions: state in, state out, no globals. Membrane
and synapse decays are realized as shifter steps driven by per-step shift
amounts taken from a :class:`~tcsnn.compress.TimeConstantPlan`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .compress import TimeConstantPlan, decay_step, plan_time_constant
from .fixedpoint import DEFAULT_FORMAT, FixedPointFormat, SaturationCounter, fixed_mul, saturate, to_fixed


def _mul(scalar_fp: int, arr: np.ndarray, fmt: FixedPointFormat, sat) -> np.ndarray:
    # fixed_mul fast path: python-int scalar times int64 array
    return saturate((scalar_fp * arr) >> fmt.frac_bits, fmt, sat)

__all__ = [
    "MODELS",
    "SynapseParams",
    "LIFParams",
    "BurstParams",
    "NeuronState",
    "CompiledNeuron",
    "new_neuron_state",
    "compile_neuron",
    "synapse_step",
    "lif_step",
    "iw_lif_step",
    "iow_lif_step",
    "burst_lif_step",
    "burst_iow_step",
    "burst_g_update",
    "model_uses_input_weights",
    "model_emits_weights",
    "model_is_bursting",
]

MODELS = ("lif", "iw-lif", "iow-lif", "burst-lif", "iow-burst-lif")


def model_uses_input_weights(model: str) -> bool:
    """Whether the model's synaptic current scales with input spike weights."""
    return model in ("iw-lif", "iow-lif", "iow-burst-lif")


def model_emits_weights(model: str) -> bool:
    return model in ("iow-lif", "iow-burst-lif")


def model_is_bursting(model: str) -> bool:
    return model in ("burst-lif", "iow-burst-lif")


@dataclass(frozen=True)
class SynapseParams:
    """Synaptic current filter: zeroth (instant), first, or second order."""

    order: str = "second"
    tau_s1_nom: float = 4.0  # rise stage
    tau_s2_nom: float = 8.0  # decay stage
    q: float = 1.0

    def __post_init__(self):
        if self.order not in ("zeroth", "first", "second"):
            raise ValueError(f"unknown synapse order {self.order!r}")
        if self.order == "first" and self.tau_s1_nom <= 1.0:
            raise ValueError("first order needs tau_s1_nom > 1")
        if self.order == "second":
            if self.tau_s1_nom <= 1.0 or self.tau_s2_nom <= 1.0:
                raise ValueError("second order needs both time constants > 1")
            if self.tau_s1_nom == self.tau_s2_nom:
                raise ValueError("second order needs tau_s1_nom != tau_s2_nom")


@dataclass(frozen=True)
class LIFParams:
    """Membrane parameters. tau_m_nom=inf selects a leakless integrator
    (no decay, drive gain R) used for exact spike-mass accounting."""

    tau_m_nom: float = 32.0
    u_th: float = 1.0
    R: float = 1.0
    n_max: int = 7
    synapse: SynapseParams = field(default_factory=SynapseParams)

    def __post_init__(self):
        if not self.tau_m_nom > 1.0:
            raise ValueError("tau_m_nom must exceed 1")
        if self.u_th <= 0.0:
            raise ValueError("u_th must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def leakless(self) -> bool:
        return math.isinf(self.tau_m_nom)


@dataclass(frozen=True)
class BurstParams:
    """Burst function constant and the threshold set it scales."""

    beta: float
    u_th: float = 1.0
    n_max: int = 7

    def __post_init__(self):
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")


@dataclass
class NeuronState:
    """Per-population state arrays (raw fixed-point int64).

    ``g`` holds each unit's own burst value; it doubles as the
    per-presynaptic-channel value seen by downstream neurons because the
    burst function depends only on the source's firing history. ``prev_out``
    carries the previous step's output weights (the E flags plus the weight
    that drives the beta**weight update).
    """

    u: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    g: np.ndarray | None = None
    prev_out: np.ndarray | None = None

    def copy(self) -> "NeuronState":
        return NeuronState(
            u=self.u.copy(),
            s1=self.s1.copy(),
            s2=self.s2.copy(),
            g=None if self.g is None else self.g.copy(),
            prev_out=None if self.prev_out is None else self.prev_out.copy(),
        )


def new_neuron_state(n: int, fmt: FixedPointFormat = DEFAULT_FORMAT, bursting: bool = False) -> NeuronState:
    zeros = lambda: np.zeros(n, dtype=np.int64)  # noqa: E731
    return NeuronState(
        u=zeros(),
        s1=zeros(),
        s2=zeros(),
        g=np.full(n, fmt.scale, dtype=np.int64) if bursting else None,
        prev_out=zeros() if bursting else None,
    )


@dataclass(frozen=True)
class CompiledNeuron:
    """All per-(params, gamma) constants precomputed in fixed point."""

    model: str
    lif: LIFParams
    gamma: int
    fmt: FixedPointFormat
    u_th_fp: int
    gain_fp: int  # membrane drive gain: R/tau_m_c, or R when leakless
    q_fp: int
    syn_gain_fp: int  # second-order output normalization (unit impulse peak ~ q)
    n_max: int
    tau_m_plan: TimeConstantPlan | None
    tau_s1_plan: TimeConstantPlan | None
    tau_s2_plan: TimeConstantPlan | None
    burst: BurstParams | None = None
    beta_pow_fp: np.ndarray | None = None  # LUT: fp(beta**k)


def _second_order_peak(tau_rise_c: float, tau_decay_c: float) -> float:
    """Peak of the discrete impulse response a_d**t - a_r**t over t >= 0."""
    a_r = 1.0 - 1.0 / tau_rise_c
    a_d = 1.0 - 1.0 / tau_decay_c
    best = 0.0
    v_r, v_d = 1.0, 1.0
    for _ in range(100000):
        v_r *= a_r
        v_d *= a_d
        cur = abs(v_d - v_r)
        if cur > best:
            best = cur
        elif v_d + v_r < best:  # both branches below the peak: done
            break
    if best <= 0.0:
        raise ValueError("degenerate second-order response")
    return best


def compile_neuron(
    model: str,
    lif: LIFParams,
    gamma: int,
    fmt: FixedPointFormat = DEFAULT_FORMAT,
    burst: BurstParams | None = None,
    beta_pow_max: int = 16,
) -> CompiledNeuron:
    """Precompute fixed-point gains and decay schedules for one ratio."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    bursting = model_is_bursting(model)
    if bursting:
        if burst is None:
            raise ValueError(f"{model} requires BurstParams")
        if lif.synapse.order != "zeroth":
            raise ValueError("bursting models require a zeroth-order synapse")

    syn = lif.synapse
    if lif.leakless:
        tau_m_plan = None
        gain = lif.R
    else:
        tau_m_plan = plan_time_constant(lif.tau_m_nom, gamma)
        gain = lif.R / tau_m_plan.tau_nom_c_exact

    tau_s1_plan = tau_s2_plan = None
    syn_gain_fp = 0
    if syn.order in ("first", "second"):
        tau_s1_plan = plan_time_constant(syn.tau_s1_nom, gamma)
    if syn.order == "second":
        tau_s2_plan = plan_time_constant(syn.tau_s2_nom, gamma)
        peak = _second_order_peak(tau_s1_plan.tau_nom_c_exact, tau_s2_plan.tau_nom_c_exact)
        syn_gain_fp = to_fixed(syn.q / peak, fmt)

    u_th = burst.u_th if bursting else lif.u_th
    n_max = burst.n_max if bursting else lif.n_max

    beta_pow_fp = None
    if bursting:
        ks = np.arange(max(n_max, beta_pow_max) + 1)
        beta_pow_fp = np.array([to_fixed(burst.beta**int(k), fmt) for k in ks], dtype=np.int64)

    return CompiledNeuron(
        model=model,
        lif=lif,
        gamma=gamma,
        fmt=fmt,
        u_th_fp=to_fixed(u_th, fmt),
        gain_fp=to_fixed(gain, fmt),
        q_fp=to_fixed(syn.q, fmt),
        syn_gain_fp=syn_gain_fp,
        n_max=n_max,
        tau_m_plan=tau_m_plan,
        tau_s1_plan=tau_s1_plan,
        tau_s2_plan=tau_s2_plan,
        burst=burst,
        beta_pow_fp=beta_pow_fp,
    )


def synapse_step(
    state: NeuronState,
    drive_fp: np.ndarray,
    comp: CompiledNeuron,
    k_s1: int = 0,
    k_s2: int = 0,
    sat: SaturationCounter | None = None,
) -> np.ndarray:
    """Advance the synaptic filter one step and return the current I.

    ``drive_fp`` is the weight-multiplied input sum per neuron (raw fixed
    point). Zeroth order passes it through; first order is a decaying
    accumulator scaled by q; second order subtracts a fast rise stage from a
    slow decay stage, normalized so a unit impulse peaks near q.
    """
    order = comp.lif.synapse.order
    fmt = comp.fmt
    if order == "zeroth":
        return drive_fp
    if order == "first":
        state.s1 = saturate(decay_step(state.s1, k_s1) + _mul(comp.q_fp, drive_fp, fmt, sat), fmt, sat)
        return state.s1
    state.s1 = saturate(decay_step(state.s1, k_s1) + drive_fp, fmt, sat)
    state.s2 = saturate(decay_step(state.s2, k_s2) + drive_fp, fmt, sat)
    return _mul(comp.syn_gain_fp, state.s2 - state.s1, fmt, sat)


def _integrate(state: NeuronState, i_fp: np.ndarray, comp: CompiledNeuron, k_m: int, sat):
    decayed = state.u if comp.lif.leakless else decay_step(state.u, k_m)
    state.u = saturate(decayed + _mul(comp.gain_fp, i_fp, comp.fmt, sat), comp.fmt, sat)


def lif_step(
    state: NeuronState,
    i_fp: np.ndarray,
    comp: CompiledNeuron,
    k_m: int = 0,
    sat: SaturationCounter | None = None,
) -> np.ndarray:
    """Binary-output step: decay, integrate, fire once on u >= u_th,
    soft reset by subtracting u_th."""
    _integrate(state, i_fp, comp, k_m, sat)
    out = (state.u >= comp.u_th_fp).astype(np.int64)
    state.u -= out * comp.u_th_fp
    return out


def iw_lif_step(
    state: NeuronState,
    i_fp: np.ndarray,
    comp: CompiledNeuron,
    k_m: int = 0,
    sat: SaturationCounter | None = None,
) -> np.ndarray:
    """Input-weighted ablation: consumes weighted current but the output is
    clamped to {0,1} and reset subtracts exactly one u_th."""
    return lif_step(state, i_fp, comp, k_m, sat)


def iow_lif_step(
    state: NeuronState,
    i_fp: np.ndarray,
    comp: CompiledNeuron,
    k_m: int = 0,
    sat: SaturationCounter | None = None,
) -> np.ndarray:
    """Multi-threshold step: with k*u_th <= u < (k+1)*u_th the output weight
    is k (capped at n_max) and the reset subtracts k*u_th. Above
    n_max*u_th the residual may exceed u_th and fires again next step."""
    _integrate(state, i_fp, comp, k_m, sat)
    out = np.minimum(np.maximum(state.u // comp.u_th_fp, 0), comp.n_max)
    state.u -= out * comp.u_th_fp
    return out


def burst_g_update(g_prev, fired_prev, spike_weight, beta: float):
    """Burst function update (real-valued reference semantics).

    Sources that fired last step scale their g by beta**spike_weight (the
    weight of that spike; binary mode passes 1); all others reset to 1.
    """
    g_prev = np.asarray(g_prev, dtype=np.float64)
    fired = np.asarray(fired_prev, dtype=bool)
    w = np.asarray(spike_weight, dtype=np.float64)
    out = np.where(fired, beta**w * g_prev, 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def _burst_g_step_fp(state: NeuronState, comp: CompiledNeuron, sat) -> None:
    """Fixed-point burst update from the previous step's own output."""
    lut = comp.beta_pow_fp
    idx = np.minimum(state.prev_out, len(lut) - 1)
    scaled = saturate((state.g * lut[idx]) >> comp.fmt.frac_bits, comp.fmt, sat)
    state.g = np.where(state.prev_out > 0, scaled, np.int64(comp.fmt.scale))


def _burst_thresholds(state: NeuronState, comp: CompiledNeuron, sat) -> np.ndarray:
    thr = _mul(comp.u_th_fp, state.g, comp.fmt, sat)
    return np.maximum(thr, 1)  # threshold floor: one LSB


def burst_lif_step(
    state: NeuronState,
    i_fp: np.ndarray,
    comp: CompiledNeuron,
    k_m: int = 0,
    sat: SaturationCounter | None = None,
) -> np.ndarray:
    """Binary bursting step: threshold g*u_th, reset subtracts g*u_th,
    g multiplied by beta after each consecutive firing, else reset to 1."""
    _burst_g_step_fp(state, comp, sat)
    thr = _burst_thresholds(state, comp, sat)
    _integrate(state, i_fp, comp, k_m, sat)
    out = (state.u >= thr).astype(np.int64)
    state.u -= out * thr
    state.prev_out = out
    return out


def burst_iow_step(
    state: NeuronState,
    i_fp: np.ndarray,
    comp: CompiledNeuron,
    k_m: int = 0,
    sat: SaturationCounter | None = None,
) -> np.ndarray:
    """Weighted bursting step: threshold set {k*g*u_th}, output weight k,
    reset subtracts k*g*u_th, g scaled by beta**k after firing."""
    _burst_g_step_fp(state, comp, sat)
    thr = _burst_thresholds(state, comp, sat)
    _integrate(state, i_fp, comp, k_m, sat)
    out = np.minimum(np.maximum(state.u // thr, 0), comp.n_max)
    state.u -= out * thr
    state.prev_out = out
    return out


STEP_FUNCTIONS = {
    "lif": lif_step,
    "iw-lif": iw_lif_step,
    "iow-lif": iow_lif_step,
    "burst-lif": burst_lif_step,
    "iow-burst-lif": burst_iow_step,
}
