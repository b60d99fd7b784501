"""Pulse-domain image operators built from subtraction microcircuits.

A zero-sum integer mask is decomposed into unit (+pixel, -pixel) pairs,
one microcircuit each; summation units merge pair outputs into per-mask
responses; a second subtraction layer corrects the one-sidedness of the
positive-domain circuits; and a final merge yields the absolute
response.  The same offsets drive the conventional oracle, so pulsed
and reference paths index pixels identically.

Summation units count pulses with weight theta/capacity, capacity a
power of two at least the unit's fan-in, so no tick can deliver more
than one threshold of charge.  The final two-way merges run at
capacity one: their inputs are complementary (at most one side is
active at a time), so counting is preserved rather than divided.
"""

from __future__ import annotations

import json

from dataclasses import dataclass

import numpy as np

from .banks import MicrocircuitBank, SummationArray
from .kernel import PulseTrain
from .plasticity import DendriteRuleParams, MembraneRuleParams
from .retina import (
    DEFAULT_RATE_CEILING,
    OpticsModel,
    PixelCellArray,
    brightness_to_rate,
    smooth_image,
    validate_image,
)
from .aer import PulseHistogram, RoutingTable
from .oracle import gabor_kernel

__all__ = [
    "IntegerMask",
    "MaskDecomposition",
    "decompose_mask",
    "static_mask_response",
    "static_response_map",
    "quantize_kernel",
    "default_gabor_mask",
    "abs_pool",
    "abs_pool_grid",
    "MaskBankResult",
    "run_mask_bank",
    "EdgeDetectorBank",
    "EdgeResponse",
    "build_edge_detector",
    "PyramidConfig",
    "GaborPyramid",
    "PyramidResult",
    "build_gabor_pyramid",
    "pow2_capacity",
]


def pow2_capacity(fan_in: int) -> int:
    """Smallest power of two >= fan_in (minimum 1)."""
    if fan_in < 1:
        raise ValueError(f"fan_in must be >= 1, got {fan_in}")
    return 1 << (fan_in - 1).bit_length() if fan_in > 1 else 1


@dataclass(frozen=True)
class IntegerMask:
    """Integer convolution mask with an anchor position.

    Coefficients are stored 2-D; 1-D input becomes a single row.  The
    anchor defaults to the grid center and only labels alignment — the
    valid-region operators ignore it.
    """

    coefficients: np.ndarray
    anchor: tuple = None

    def __post_init__(self) -> None:
        coeff = np.asarray(self.coefficients)
        if coeff.ndim == 1:
            coeff = coeff[None, :]
        if coeff.ndim != 2 or coeff.size == 0:
            raise ValueError(f"mask must be 1-D or 2-D and nonempty, got shape {coeff.shape}")
        if not np.issubdtype(coeff.dtype, np.integer):
            if np.any(coeff != np.round(coeff)):
                raise ValueError("mask coefficients must be integers")
        coeff = coeff.astype(np.int64)
        coeff.setflags(write=False)
        object.__setattr__(self, "coefficients", coeff)
        anchor = self.anchor
        if anchor is None:
            anchor = (coeff.shape[0] // 2, coeff.shape[1] // 2)
        anchor = (int(anchor[0]), int(anchor[1]))
        if not (0 <= anchor[0] < coeff.shape[0] and 0 <= anchor[1] < coeff.shape[1]):
            raise ValueError(f"anchor {anchor} outside mask grid {coeff.shape}")
        object.__setattr__(self, "anchor", anchor)

    @property
    def shape(self) -> tuple:
        return self.coefficients.shape

    @property
    def coefficient_sum(self) -> int:
        return int(self.coefficients.sum())

    def negated(self) -> "IntegerMask":
        return IntegerMask(-self.coefficients, self.anchor)

    def to_json(self, path=None):
        payload = {
            "coefficients": self.coefficients.tolist(),
            "anchor": list(self.anchor),
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, text: str) -> "IntegerMask":
        payload = json.loads(text)
        anchor = payload.get("anchor")
        return cls(np.asarray(payload["coefficients"]), tuple(anchor) if anchor else None)


@dataclass(frozen=True)
class MaskDecomposition:
    """A zero-sum mask as unit (+position, -position) pairs.

    Positions are (row, col) cells of the mask grid.  ``polarity`` is
    +1 for the mask as given, -1 for the swapped variant that realizes
    its negation.
    """

    pairs: tuple
    shape: tuple
    anchor: tuple
    polarity: int = 1

    def __len__(self) -> int:
        return len(self.pairs)

    def swapped(self) -> "MaskDecomposition":
        """The opposite-polarity bank: plus and minus roles exchanged."""
        return MaskDecomposition(
            tuple((m, p) for p, m in self.pairs),
            self.shape,
            self.anchor,
            -self.polarity,
        )

    def reconstruct(self) -> IntegerMask:
        """Coefficients implied by the pairs: +1/-1 per pair entry."""
        coeff = np.zeros(self.shape, dtype=np.int64)
        for plus, minus in self.pairs:
            coeff[plus] += 1
            coeff[minus] -= 1
        return IntegerMask(coeff, self.anchor)


def decompose_mask(mask: IntegerMask) -> MaskDecomposition:
    """Split a zero-sum mask into unit pairs, deterministically.

    Each coefficient expands into |c| unit entries.  Positive units are
    consumed in row-major scan order; each takes the nearest remaining
    negative unit (squared Euclidean distance, ties to the smallest
    (row, col) position).  Any valid pairing reconstructs the mask; the
    fixed order keeps golden outputs stable.
    """
    total = mask.coefficient_sum
    if total != 0:
        raise ValueError(f"mask is not zero-sum: coefficients sum to {total}")
    coeff = mask.coefficients
    negatives = {}
    for r, c in zip(*np.nonzero(coeff < 0)):
        negatives[(int(r), int(c))] = int(-coeff[r, c])
    pairs = []
    for r, c in zip(*np.nonzero(coeff > 0)):
        for _ in range(int(coeff[r, c])):
            best = None
            for (nr, nc), left in negatives.items():
                if left == 0:
                    continue
                d = (nr - r) ** 2 + (nc - c) ** 2
                key = (d, nr, nc)
                if best is None or key < best:
                    best = key
            if best is None:
                raise ValueError("ran out of negative units (mask not zero-sum?)")
            chosen = (best[1], best[2])
            negatives[chosen] -= 1
            pairs.append(((int(r), int(c)), chosen))
    return MaskDecomposition(tuple(pairs), coeff.shape, mask.anchor)


def static_mask_response(decomp: MaskDecomposition, pattern) -> float:
    """Ideal steady-state response of one pulsed bank on a rate patch.

    Sum over pairs of max(rate[plus] - rate[minus], 0); the fast oracle
    for the simulated bank.  ``pattern`` must cover the mask grid.
    """
    pattern = np.asarray(pattern, dtype=np.float64)
    if pattern.ndim == 1:
        pattern = pattern[None, :]
    if pattern.shape[0] < decomp.shape[0] or pattern.shape[1] < decomp.shape[1]:
        raise ValueError(f"pattern {pattern.shape} does not cover mask grid {decomp.shape}")
    total = 0.0
    for plus, minus in decomp.pairs:
        total += max(pattern[plus] - pattern[minus], 0.0)
    return total


def static_response_map(decomp: MaskDecomposition, rates: np.ndarray) -> np.ndarray:
    """``static_mask_response`` at every valid location of a rate grid."""
    rates = np.asarray(rates, dtype=np.float64)
    mh, mw = decomp.shape
    out_h = rates.shape[0] - mh + 1
    out_w = rates.shape[1] - mw + 1
    if out_h < 1 or out_w < 1:
        raise ValueError(f"mask grid {decomp.shape} larger than rate grid {rates.shape}")
    out = np.zeros((out_h, out_w))
    for (pr, pc), (mr, mc) in decomp.pairs:
        diff = rates[pr : pr + out_h, pc : pc + out_w] - rates[mr : mr + out_h, mc : mc + out_w]
        out += np.maximum(diff, 0.0)
    return out


def quantize_kernel(kernel: np.ndarray, max_coeff: int = 2, positive_budget: int = 8) -> IntegerMask:
    """Integer mask from a real zero-mean kernel.

    Scales the kernel so its largest magnitude hits ``max_coeff``,
    shrinking until the rounded positive coefficients total at most
    ``positive_budget`` (the pulse-bank fan-in limit), then repairs the
    coefficient sum to exactly zero by largest-remainder adjustment.
    Deterministic for a given kernel.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.size == 0:
        raise ValueError("kernel must be 2-D and nonempty")
    if max_coeff < 1 or positive_budget < 1:
        raise ValueError("max_coeff and positive_budget must be >= 1")
    peak = np.abs(kernel).max()
    if peak == 0:
        raise ValueError("kernel is identically zero")
    scale = max_coeff / peak
    for _ in range(200):
        scaled = kernel * scale
        coeff = np.round(scaled).astype(np.int64)
        if coeff[coeff > 0].sum() <= positive_budget and np.abs(coeff).max() <= max_coeff:
            break
        scale *= 0.95
    else:
        raise ValueError("could not fit kernel into the coefficient budget")
    if np.all(coeff == 0):
        raise ValueError("kernel quantized to nothing; raise max_coeff or budget")
    # repair the sum: move the cells whose rounding can absorb a unit
    # with the least distortion, one unit at a time
    excess = int(coeff.sum())
    while excess != 0:
        step = -1 if excess > 0 else 1
        best = None
        for r in range(coeff.shape[0]):
            for c in range(coeff.shape[1]):
                candidate = coeff[r, c] + step
                if abs(candidate) > max_coeff:
                    continue
                distortion = abs(candidate - scaled[r, c]) - abs(coeff[r, c] - scaled[r, c])
                key = (distortion, r, c)
                if best is None or key < best:
                    best = key
        if best is None:
            raise ValueError("zero-sum repair failed within coefficient bounds")
        coeff[best[1], best[2]] += step
        excess += step
    if np.all(coeff == 0):
        raise ValueError("kernel quantized to nothing; raise max_coeff or budget")
    if coeff[coeff > 0].sum() > positive_budget:
        raise ValueError("zero-sum repair exceeded the positive budget")
    return IntegerMask(coeff)


def default_gabor_mask(size: int = 7, wavelength: float = 6.0, orientation: float = 0.0) -> IntegerMask:
    """The built-in mask: an integer-quantized even Gabor kernel."""
    kernel = gabor_kernel(
        wavelength=wavelength,
        orientation=orientation,
        sigma=2.2,
        aspect=0.9,
        phase=0.0,
        size=size,
    )
    return quantize_kernel(kernel)


# -- pulsed assemblies -------------------------------------------------


def _bank_rules(dt: float, decay: float, gain: float):
    plus = MembraneRuleParams(decay=decay, gain=gain)
    minus = MembraneRuleParams(decay=decay, gain=-gain)
    branch = DendriteRuleParams(relax=1.0 / dt)
    return plus, minus, branch


def abs_pool(
    r_plus: PulseTrain,
    r_minus: PulseTrain,
    *,
    decay: float = 0.05,
    gain: float = 0.5,
) -> PulseTrain:
    """Absolute rate difference of two trains as a pulse train.

    The trains drive one subtraction circuit in each direction; a
    capacity-one merge unit sums the two outputs, approximating
    |rate(r_plus) - rate(r_minus)|.
    """
    if r_plus.dt != r_minus.dt or r_plus.n_ticks != r_minus.n_ticks:
        raise ValueError("trains must share clock and run length")
    dt = r_plus.dt
    n_ticks = r_plus.n_ticks
    pr, mr, br = _bank_rules(dt, decay, gain)
    bank = MicrocircuitBank(2, dt=dt, plus_rule=pr, minus_rule=mr, branch_rule=br)
    merge = SummationArray(1, capacity=1)
    a = r_plus.indicator()
    b = r_minus.indicator()
    prev = np.zeros(2, dtype=bool)
    out_ticks = []
    for t in range(n_ticks):
        _, fired = bank.step(
            np.array([a[t], b[t]]), np.array([b[t], a[t]])
        )
        merged = merge.step(prev[:1].astype(np.int64) + prev[1:].astype(np.int64))
        if merged[0]:
            out_ticks.append(t)
        prev = fired
    return PulseTrain(np.asarray(out_ticks, dtype=np.int64), dt, n_ticks)


def abs_pool_grid(
    rates_a,
    rates_b,
    duration: float = 120.0,
    *,
    dt: float = 0.0025,
    decay: float = 0.05,
    gain: float = 0.5,
):
    """Measured abs_pool output rate for every (a, b) rate pair.

    Drives one two-way circuit pair per entry in lockstep, with the
    usual half-period offset between the two regular trains, and
    measures over the second half of the run.  Returns an array shaped
    like the broadcast inputs.
    """
    from .kernel import regular_train

    rates_a = np.atleast_1d(np.asarray(rates_a, dtype=np.float64))
    rates_b = np.atleast_1d(np.asarray(rates_b, dtype=np.float64))
    rates_a, rates_b = np.broadcast_arrays(rates_a, rates_b)
    flat_a = rates_a.ravel()
    flat_b = rates_b.ravel()
    n = flat_a.size
    n_ticks = int(round(duration / dt))

    cache = {}

    def train(rate, phase):
        key = (float(rate), phase)
        if key not in cache:
            cache[key] = regular_train(key[0], n_ticks, dt, phase=phase).indicator()
        return cache[key]

    x_plus = np.zeros((n_ticks, 2 * n), dtype=bool)
    x_minus = np.zeros((n_ticks, 2 * n), dtype=bool)
    for i in range(n):
        a = train(flat_a[i], 0.0)
        b = train(flat_b[i], 0.5)
        x_plus[:, 2 * i] = a
        x_minus[:, 2 * i] = b
        x_plus[:, 2 * i + 1] = b
        x_minus[:, 2 * i + 1] = a

    pr, mr, br = _bank_rules(dt, decay, gain)
    bank = MicrocircuitBank(2 * n, dt=dt, plus_rule=pr, minus_rule=mr, branch_rule=br)
    merge = SummationArray(n, capacity=1)
    half = n_ticks // 2
    counts = np.zeros(n, dtype=np.int64)
    prev = np.zeros(2 * n, dtype=bool)
    for t in range(n_ticks):
        _, fired = bank.step(x_plus[t], x_minus[t])
        merged = merge.step(prev[0::2].astype(np.int64) + prev[1::2].astype(np.int64))
        if t >= half:
            counts += merged
        prev = fired
    window = duration - half * dt
    return (counts / window).reshape(rates_a.shape)


@dataclass(frozen=True)
class MaskBankResult:
    """Measured rates of one simulated mask bank, in input-rate units.

    Summation units divide counts by their capacity; the reported
    rates undo that known factor so they compare directly with
    ``static_mask_response``.
    """

    positive: float
    negative: float
    corrected: float
    capacity: int
    window: float


def run_mask_bank(
    decomp: MaskDecomposition,
    pattern,
    duration: float = 120.0,
    *,
    dt: float = 0.0025,
    decay: float = 0.05,
    gain: float = 0.5,
) -> MaskBankResult:
    """Simulate both polarity banks of a mask on a steady rate patch.

    Every pair is a subtraction circuit on regular pixel trains; pair
    outputs feed one summation unit per polarity, and a final circuit
    subtracts the negative sum from the positive sum (the corrected,
    still one-sided response).  Rates are measured over the second half
    and rescaled by the summation capacity.
    """
    from .kernel import regular_train

    pattern = np.asarray(pattern, dtype=np.float64)
    if pattern.ndim == 1:
        pattern = pattern[None, :]
    neg = decomp.swapped()
    n_pairs = len(decomp.pairs)
    n_ticks = int(round(duration / dt))

    cache = {}

    def train(rate, phase):
        key = (float(rate), phase)
        if key not in cache:
            cache[key] = regular_train(key[0], n_ticks, dt, phase=phase).indicator()
        return cache[key]

    # the shared-pixel trains: plus-role pixels at phase 0, minus-role
    # at phase 0.5, consistently across both banks
    x_plus = np.zeros((n_ticks, 2 * n_pairs), dtype=bool)
    x_minus = np.zeros((n_ticks, 2 * n_pairs), dtype=bool)
    for i, (p, m) in enumerate(decomp.pairs):
        x_plus[:, i] = train(pattern[p], 0.0)
        x_minus[:, i] = train(pattern[m], 0.5)
    for i, (p, m) in enumerate(neg.pairs):
        x_plus[:, n_pairs + i] = train(pattern[p], 0.5)
        x_minus[:, n_pairs + i] = train(pattern[m], 0.0)

    pr, mr, br = _bank_rules(dt, decay, gain)
    bank = MicrocircuitBank(2 * n_pairs, dt=dt, plus_rule=pr, minus_rule=mr, branch_rule=br)
    capacity = pow2_capacity(n_pairs)
    sums = SummationArray(2, capacity=capacity)
    corrector = MicrocircuitBank(1, dt=dt, plus_rule=pr, minus_rule=mr, branch_rule=br)

    half = n_ticks // 2
    counts = np.zeros(3, dtype=np.int64)  # positive, negative, corrected
    prev_pairs = np.zeros(2 * n_pairs, dtype=bool)
    prev_sums = np.zeros(2, dtype=bool)
    for t in range(n_ticks):
        _, fired = bank.step(x_plus[t], x_minus[t])
        arriving = np.array(
            [
                prev_pairs[:n_pairs].sum(),
                prev_pairs[n_pairs:].sum(),
            ],
            dtype=np.int64,
        )
        sum_fired = sums.step(arriving)
        _, corr_fired = corrector.step(prev_sums[:1], prev_sums[1:])
        if t >= half:
            counts[0] += sum_fired[0]
            counts[1] += sum_fired[1]
            counts[2] += corr_fired[0]
        prev_pairs = fired
        prev_sums = sum_fired
    window = duration - half * dt
    rates = counts / window * capacity
    return MaskBankResult(
        positive=float(rates[0]),
        negative=float(rates[1]),
        corrected=float(rates[2]),
        capacity=capacity,
        window=window,
    )


@dataclass(frozen=True)
class EdgeResponse:
    """Edge detector output rates for one stimulus row."""

    unpooled: float
    pooled: float | None
    positive: float
    negative: float
    window: float


@dataclass(frozen=True)
class EdgeDetectorBank:
    """Column-difference detector over a pixel window.

    One subtraction circuit per adjacent pixel pair: the positive bank
    takes (+, -) = (left, right), the negative bank the reverse; each
    bank feeds a summation unit.  With ``pooled`` set, a further
    circuit subtracts the negative sum from the positive sum, which
    suppresses the isolated single-sided responses at an edge's
    borders at the cost of some peak height.
    """

    window: int
    pooled: bool

    def __post_init__(self) -> None:
        if self.window < 2:
            raise ValueError(f"window must be >= 2 pixels, got {self.window}")

    @property
    def n_pairs(self) -> int:
        return self.window - 1

    @property
    def capacity(self) -> int:
        return pow2_capacity(self.n_pairs)

    def run(
        self,
        pixel_rates,
        duration: float = 20.0,
        *,
        dt: float = 0.002,
        decay: float = 10.0,
        gain: float = 0.5,
        noise_level: float = 0.0,
        seed: int = 0,
    ) -> EdgeResponse:
        """Drive the detector with steady pixel rates; measure rates.

        ``pixel_rates`` must cover the window.  Rates are measured over
        the second half at the summation outputs (and the pooling
        circuit's output when pooled), in summation-output units.
        """
        pixel_rates = np.asarray(pixel_rates, dtype=np.float64).ravel()
        if pixel_rates.size != self.window:
            raise ValueError(
                f"need {self.window} pixel rates, got {pixel_rates.size}"
            )
        n_ticks = int(round(duration / dt))
        half = n_ticks // 2
        pixels = PixelCellArray(pixel_rates, dt, noise_level, seed)
        p = self.n_pairs
        pr, mr, br = _bank_rules(dt, decay, gain)
        bank = MicrocircuitBank(2 * p, dt=dt, plus_rule=pr, minus_rule=mr, branch_rule=br)
        sums = SummationArray(2, capacity=self.capacity)
        pool = MicrocircuitBank(1, dt=dt, plus_rule=pr, minus_rule=mr, branch_rule=br)

        left = np.arange(p)
        right = left + 1
        prev_pix = np.zeros(self.window, dtype=bool)
        prev_pairs = np.zeros(2 * p, dtype=bool)
        prev_sums = np.zeros(2, dtype=bool)
        counts = np.zeros(3, dtype=np.int64)  # positive, negative, pooled
        for t in range(n_ticks):
            pix = pixels.step()
            x_plus = np.concatenate([prev_pix[left], prev_pix[right]])
            x_minus = np.concatenate([prev_pix[right], prev_pix[left]])
            _, fired = bank.step(x_plus, x_minus)
            arriving = np.array(
                [prev_pairs[:p].sum(), prev_pairs[p:].sum()], dtype=np.int64
            )
            sum_fired = sums.step(arriving)
            _, pool_fired = pool.step(prev_sums[:1], prev_sums[1:])
            if t >= half:
                counts[0] += sum_fired[0]
                counts[1] += sum_fired[1]
                counts[2] += pool_fired[0]
            prev_pix = pix
            prev_pairs = fired
            prev_sums = sum_fired
        window = duration - half * dt
        return EdgeResponse(
            unpooled=float(counts[0] / window),
            pooled=float(counts[2] / window) if self.pooled else None,
            positive=float(counts[0] / window),
            negative=float(counts[1] / window),
            window=window,
        )


def build_edge_detector(window: int, pooled: bool = False) -> EdgeDetectorBank:
    """Detector over ``window`` adjacent pixels; see EdgeDetectorBank."""
    return EdgeDetectorBank(window=window, pooled=pooled)


# -- the processing pyramid --------------------------------------------


@dataclass(frozen=True)
class PyramidConfig:
    """Clock, optics, and adaptation settings for a pyramid run.

    Pipeline lanes start with zero correlator weights: subtraction is
    carried by the gating path from the first pulse on, and the
    adaptive weights grow only where the input statistics drive them.
    Starting from theta/2 instead costs the first few pattern periods
    to transient gating, which matters when early snapshots are taken.
    The fast weight decay keeps whatever the correlators learn from
    accumulating into image-specific bias.
    """

    dt: float = 0.001
    duration: float = 12.0
    theta: float = 1.0
    sigma: float = 1.4
    rate_ceiling: float = DEFAULT_RATE_CEILING
    noise_level: float = 0.0
    seed: int = 0
    weight_decay: float = 10.0
    weight_gain: float = 0.5
    weight_init: float = 0.0
    snapshot_pulses: tuple = ()

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.duration <= 0:
            raise ValueError("dt and duration must be > 0")
        if self.rate_ceiling * self.dt > 1.0:
            raise ValueError("rate ceiling exceeds one pulse per tick")
        if any(int(k) < 1 for k in self.snapshot_pulses):
            raise ValueError("snapshot pulse counts must be >= 1")


@dataclass(frozen=True)
class PyramidResult:
    """Per-stage pulse histograms of one pyramid run.

    ``snapshots`` maps a brightest-pixel pulse count to a copy of the
    final-stage counts at the moment that pulse was emitted.
    """

    config: PyramidConfig
    out_shape: tuple
    image_shape: tuple
    histograms: dict
    snapshots: dict
    brightest_address: int
    brightest_pulses: int

    def grid(self, stage: str) -> np.ndarray:
        """Counts of one stage reshaped onto its grid."""
        hist = self.histograms[stage]
        shape = self.image_shape if stage == "pixels" else self.out_shape
        return hist.counts.reshape(shape)

    def snapshot_grid(self, pulses: int) -> np.ndarray:
        return self.snapshots[pulses].reshape(self.out_shape)


STAGE_NAMES = (
    "pixels",
    "pairs_pos",
    "pairs_neg",
    "sum_pos",
    "sum_neg",
    "sub_pos",
    "sub_neg",
    "abs",
)


class GaborPyramid:
    """The full pulse-convolution pipeline for one mask and image.

    Stages: pixel cells, unit-pair circuits in both polarities at every
    valid location, per-polarity summation units (the positive and
    negative mask responses), a bidirectional subtraction layer, and a
    final capacity-one merge per location.  Pulses cross one stage per
    tick.  Construction only builds index arrays; every ``run`` starts
    from fresh state, so repeated runs are identical.
    """

    def __init__(self, mask: IntegerMask, image: np.ndarray, config: PyramidConfig) -> None:
        if mask.coefficient_sum != 0:
            raise ValueError(
                f"mask is not zero-sum: coefficients sum to {mask.coefficient_sum}"
            )
        image = validate_image(image)
        mh, mw = mask.shape
        height, width = image.shape
        if mh > height or mw > width:
            raise ValueError(f"mask {mask.shape} larger than image {image.shape}")
        self.mask = mask
        self.image = image
        self.config = config
        self.decomp_pos = decompose_mask(mask)
        self.decomp_neg = self.decomp_pos.swapped()
        self.out_shape = (height - mh + 1, width - mw + 1)
        self.n_locations = self.out_shape[0] * self.out_shape[1]
        self.n_pairs = len(self.decomp_pos)
        self.sum_capacity = pow2_capacity(self.n_pairs)

        smoothed = smooth_image(image, OpticsModel(config.sigma))
        self.rates = brightness_to_rate(smoothed, config.rate_ceiling)
        # snapshot trigger counts pulses of the pixel that is brightest
        # BEFORE optical smoothing (ties to the lowest address); its
        # cell still runs at the smoothed rate
        self.brightest_address = int(np.argmax(self.image))

        rr, cc = np.mgrid[0 : self.out_shape[0], 0 : self.out_shape[1]]
        base = (rr * width + cc).ravel()

        def lane_index(decomp):
            plus = np.empty((self.n_locations, self.n_pairs), dtype=np.int64)
            minus = np.empty((self.n_locations, self.n_pairs), dtype=np.int64)
            for i, ((pr, pc), (mr, mc)) in enumerate(decomp.pairs):
                plus[:, i] = base + pr * width + pc
                minus[:, i] = base + mr * width + mc
            return plus.ravel(), minus.ravel()

        self.pos_plus_idx, self.pos_minus_idx = lane_index(self.decomp_pos)
        self.neg_plus_idx, self.neg_minus_idx = lane_index(self.decomp_neg)

    def run(self, snapshot_pulses=None) -> PyramidResult:
        cfg = self.config
        if snapshot_pulses is None:
            snapshot_pulses = cfg.snapshot_pulses
        wanted = sorted(set(int(k) for k in snapshot_pulses))
        dt = cfg.dt
        n_ticks = int(round(cfg.duration / dt))
        n_pix = self.rates.size
        nl = self.n_locations
        p = self.n_pairs

        pixels = PixelCellArray(self.rates, dt, cfg.noise_level, cfg.seed)
        pr, mr, br = _bank_rules(dt, cfg.weight_decay, cfg.weight_gain)
        lane_kw = dict(
            dt=dt,
            theta=cfg.theta,
            plus_rule=pr,
            minus_rule=mr,
            branch_rule=br,
            init_plus=cfg.weight_init,
            init_minus=cfg.weight_init,
        )
        bank_pos = MicrocircuitBank(nl * p, **lane_kw)
        bank_neg = MicrocircuitBank(nl * p, **lane_kw)
        sums = SummationArray(2 * nl, capacity=self.sum_capacity, theta=cfg.theta)
        sub = MicrocircuitBank(2 * nl, **lane_kw)
        merge = SummationArray(nl, capacity=1, theta=cfg.theta)

        hist = {
            "pixels": PulseHistogram(n_pix),
            "pairs_pos": PulseHistogram(nl),
            "pairs_neg": PulseHistogram(nl),
            "sum_pos": PulseHistogram(nl),
            "sum_neg": PulseHistogram(nl),
            "sub_pos": PulseHistogram(nl),
            "sub_neg": PulseHistogram(nl),
            "abs": PulseHistogram(nl),
        }
        snapshots = {}
        brightest = self.brightest_address
        bright_count = 0

        prev_pix = np.zeros(n_pix, dtype=bool)
        prev_pair_pos = np.zeros(nl * p, dtype=bool)
        prev_pair_neg = np.zeros(nl * p, dtype=bool)
        prev_sum = np.zeros(2 * nl, dtype=bool)
        prev_sub = np.zeros(2 * nl, dtype=bool)

        for t in range(n_ticks):
            pix_fired = pixels.step()
            _, out_pos = bank_pos.step(
                prev_pix[self.pos_plus_idx], prev_pix[self.pos_minus_idx]
            )
            _, out_neg = bank_neg.step(
                prev_pix[self.neg_plus_idx], prev_pix[self.neg_minus_idx]
            )
            arriving = np.empty(2 * nl, dtype=np.int64)
            pos_counts = prev_pair_pos.reshape(nl, p).sum(axis=1)
            neg_counts = prev_pair_neg.reshape(nl, p).sum(axis=1)
            arriving[0::2] = pos_counts
            arriving[1::2] = neg_counts
            sum_fired = sums.step(arriving)
            sub_plus = np.empty(2 * nl, dtype=bool)
            sub_minus = np.empty(2 * nl, dtype=bool)
            sub_plus[0::2] = prev_sum[0::2]
            sub_plus[1::2] = prev_sum[1::2]
            sub_minus[0::2] = prev_sum[1::2]
            sub_minus[1::2] = prev_sum[0::2]
            _, sub_fired = sub.step(sub_plus, sub_minus)
            merged = merge.step(
                prev_sub[0::2].astype(np.int64) + prev_sub[1::2].astype(np.int64)
            )

            hist["pixels"].add(pix_fired, t)
            hist["pairs_pos"].add(out_pos.reshape(nl, p).sum(axis=1), t)
            hist["pairs_neg"].add(out_neg.reshape(nl, p).sum(axis=1), t)
            hist["sum_pos"].add(sum_fired[0::2], t)
            hist["sum_neg"].add(sum_fired[1::2], t)
            hist["sub_pos"].add(sub_fired[0::2], t)
            hist["sub_neg"].add(sub_fired[1::2], t)
            hist["abs"].add(merged, t)

            if pix_fired[brightest]:
                bright_count += 1
                while wanted and bright_count >= wanted[0]:
                    snapshots[wanted.pop(0)] = hist["abs"].counts.copy()

            prev_pix = pix_fired
            prev_pair_pos = out_pos
            prev_pair_neg = out_neg
            prev_sum = sum_fired
            prev_sub = sub_fired

        for k in wanted:  # requested counts the brightest pixel never reached
            snapshots[k] = hist["abs"].counts.copy()
        return PyramidResult(
            config=cfg,
            out_shape=self.out_shape,
            image_shape=self.image.shape,
            histograms=hist,
            snapshots=snapshots,
            brightest_address=brightest,
            brightest_pulses=bright_count,
        )

    def to_routing_table(self) -> RoutingTable:
        """Materialize the stage wiring as address-event routes.

        Address blocks, in order: pixels, positive pair lanes, negative
        pair lanes, summation units (positive then negative), the two
        subtraction lanes, and the final merge units.
        """
        nl = self.n_locations
        p = self.n_pairs
        n_pix = self.rates.size
        base_pairs_pos = n_pix
        base_pairs_neg = base_pairs_pos + nl * p
        base_sum_pos = base_pairs_neg + nl * p
        base_sum_neg = base_sum_pos + nl
        base_sub_pos = base_sum_neg + nl
        base_sub_neg = base_sub_pos + nl
        base_merge = base_sub_neg + nl

        table = RoutingTable()
        for lane in range(nl * p):
            table.add(int(self.pos_plus_idx[lane]), base_pairs_pos + lane, "plus")
            table.add(int(self.pos_minus_idx[lane]), base_pairs_pos + lane, "minus")
            table.add(int(self.neg_plus_idx[lane]), base_pairs_neg + lane, "plus")
            table.add(int(self.neg_minus_idx[lane]), base_pairs_neg + lane, "minus")
            loc = lane // p
            table.add(base_pairs_pos + lane, base_sum_pos + loc, "plus")
            table.add(base_pairs_neg + lane, base_sum_neg + loc, "plus")
        for loc in range(nl):
            table.add(base_sum_pos + loc, base_sub_pos + loc, "plus")
            table.add(base_sum_pos + loc, base_sub_neg + loc, "minus")
            table.add(base_sum_neg + loc, base_sub_pos + loc, "minus")
            table.add(base_sum_neg + loc, base_sub_neg + loc, "plus")
            table.add(base_sub_pos + loc, base_merge + loc, "plus")
            table.add(base_sub_neg + loc, base_merge + loc, "plus")
        return table


def build_gabor_pyramid(mask: IntegerMask, image: np.ndarray, config: PyramidConfig | None = None) -> GaborPyramid:
    """Wire the full pipeline for ``mask`` over ``image``."""
    if config is None:
        config = PyramidConfig()
    return GaborPyramid(mask, image, config)
