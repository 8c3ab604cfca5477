"""Physical parameters and photon-pair number statistics.

Everything downstream (closed-form efficiency, Monte Carlo, the CLI) consumes
the two value types defined here: :class:`SourceParams` bundles the physical
efficiencies of the pumped pair source and the chip, :class:`SchemeConfig`
selects the multiplexing topology and detection protocol.  Both are frozen, so
instances can be shared freely between worker threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

SPEED_OF_LIGHT = 299_792_458.0  # m/s

#: Hard truncation for all pair-number series.  The pumping regimes studied
#: keep the mean pair parameter at or below 1, where the tail mass beyond
#: n = 200 is far below double precision.
MAX_PAIRS = 200


class DomainError(ValueError):
    """A numeric argument lies outside the modeled domain."""


class PairDistribution(Enum):
    POISSON = "poisson"
    THERMAL_APPROX = "thermal"


class Topology(Enum):
    BINARY_DELAY = "binary"
    SINGLE_DELAY_LINE = "single-line"


class Detection(Enum):
    SINGLE_DETECTOR = "single"
    DETECTOR_ARRAY = "array"


class Selection(Enum):
    FIRST_PHOTON = "first"
    LAST_PHOTON = "last"


def incremental_loss_db(alpha_lin_db_per_cm: float = 0.1,
                        group_index: float = 4.0,
                        period: float = 40e-12) -> float:
    """Waveguide loss in dB accumulated over one pump period of delay.

    One time bin of delay corresponds to a waveguide length of
    ``c * period / group_index``; the linear propagation loss over that length
    is the per-bin increment used by the transmission model.
    """
    if alpha_lin_db_per_cm < 0 or group_index <= 0 or period <= 0:
        raise DomainError("loss, group index and period must be positive")
    length_cm = SPEED_OF_LIGHT * period / group_index * 100.0
    return alpha_lin_db_per_cm * length_cm


#: Default per-bin delay loss: 0.1 dB/cm ridge waveguide, group index 4,
#: 40 ps bins -> about 0.03 dB per bin of delay.
DEFAULT_ALPHA_INC = incremental_loss_db()


@dataclass(frozen=True)
class ArrayGeometry:
    """Routing geometry of the heralding detector array.

    A binary switch tree fanning out to ``array_size`` detectors has
    ``four_switch_paths`` leaves reached through 4 switch passes and
    ``five_switch_paths`` through 5.  ``blanking`` is the duty-cycle factor
    left after a fired detector is blanked for the following output period.
    These are data, not constants, so alternative array geometries can be
    studied.
    """

    array_size: int = 25
    four_switch_paths: int = 7
    five_switch_paths: int = 18
    blanking: float = 24.0 / 25.0

    def __post_init__(self) -> None:
        if self.array_size < 1:
            raise DomainError("array_size must be >= 1")
        if self.four_switch_paths < 0 or self.five_switch_paths < 0:
            raise DomainError("path counts must be non-negative")
        if self.four_switch_paths + self.five_switch_paths != self.array_size:
            raise DomainError("path counts must sum to array_size")
        if not 0.0 <= self.blanking <= 1.0:
            raise DomainError("blanking must be in [0, 1]")


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class SourceParams:
    """Physical parameters of the pumped pair source and the chip.

    lam           mean-pair parameter per time bin (dimensionless)
    period        pump period T in seconds
    eta_f         filtering efficiency
    eta_c         on-chip coupling efficiency (composite: includes fiber
                  coupling and fiber transmission)
    eta_sw        per-pass switch transmission
    eta_det       raw detector efficiency (0.7 single detector, 0.8 array)
    eta_conv      up-conversion efficiency
    alpha_inc     waveguide loss per bin of delay, in dB
    pair_dist     pair-number distribution sampled per bin
    """

    lam: float = 0.1
    period: float = 40e-12
    eta_f: float = 0.99
    eta_c: float = 0.84
    eta_sw: float = 0.87
    eta_det: float = 0.7
    eta_conv: float = 0.85
    alpha_inc: float = DEFAULT_ALPHA_INC
    pair_dist: PairDistribution = PairDistribution.POISSON

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise DomainError(f"lam must be >= 0, got {self.lam}")
        if self.period <= 0:
            raise DomainError(f"period must be > 0, got {self.period}")
        if self.alpha_inc < 0:
            raise DomainError(f"alpha_inc must be >= 0, got {self.alpha_inc}")
        for name in ("eta_f", "eta_c", "eta_sw", "eta_det", "eta_conv"):
            _check_unit(name, getattr(self, name))

    @classmethod
    def table_defaults(cls, detection: Detection = Detection.SINGLE_DETECTOR,
                       **overrides) -> "SourceParams":
        """Default parameter set, with the detector efficiency matched to the
        detection protocol (0.7 single detector, 0.8 detector array)."""
        eta_det = 0.8 if detection is Detection.DETECTOR_ARRAY else 0.7
        overrides.setdefault("eta_det", eta_det)
        return cls(**overrides)

    def with_(self, **changes) -> "SourceParams":
        return replace(self, **changes)


#: Canonical selection policy for each detection protocol: a single detector
#: can only record the first herald, a detector array enables last-photon
#: selection.
CANONICAL_SELECTION = {
    Detection.SINGLE_DETECTOR: Selection.FIRST_PHOTON,
    Detection.DETECTOR_ARRAY: Selection.LAST_PHOTON,
}


@dataclass(frozen=True)
class SchemeConfig:
    """Multiplexing depth, delay topology, detection protocol and selection.

    The selection policy is tied to the detection hardware; passing
    ``selection`` explicitly with a non-canonical pairing requires
    ``allow_mismatched_selection=True`` (used for selection-policy studies).
    """

    n_bins: int
    topology: Topology = Topology.BINARY_DELAY
    detection: Detection = Detection.SINGLE_DETECTOR
    selection: Selection | None = None
    array_geometry: ArrayGeometry = ArrayGeometry()
    allow_mismatched_selection: bool = False

    def __post_init__(self) -> None:
        if self.n_bins < 1:
            raise DomainError(f"n_bins must be >= 1, got {self.n_bins}")
        canonical = CANONICAL_SELECTION[self.detection]
        if self.selection is None:
            object.__setattr__(self, "selection", canonical)
        elif self.selection is not canonical and not self.allow_mismatched_selection:
            raise DomainError(
                f"{self.detection.value} detection pairs with "
                f"{canonical.value}-photon selection; pass "
                "allow_mismatched_selection=True to override")

    def with_(self, **changes) -> "SchemeConfig":
        return replace(self, **changes)


def pair_count_distribution(params: SourceParams, n: int) -> float:
    """Probability of generating exactly ``n`` photon pairs in one bin.

    The Poisson branch is the textbook pmf.  The thermal branch renormalizes
    the approximate pair-number form (n+1)(lam/2)^n e^-lam, whose closed-form
    sum is e^-lam / (1 - lam/2)^2, so that the distribution is exactly
    normalized and can be sampled.
    """
    if n < 0:
        raise DomainError(f"pair count must be >= 0, got {n}")
    lam = params.lam
    if lam == 0.0:
        return 1.0 if n == 0 else 0.0
    if params.pair_dist is PairDistribution.POISSON:
        return math.exp(-lam + n * math.log(lam) - math.lgamma(n + 1))
    x = lam / 2.0
    if x >= 1.0:
        raise DomainError("thermal pair distribution requires lam < 2")
    # (n+1) x^n e^-lam divided by e^-lam / (1-x)^2
    return (n + 1) * x**n * (1.0 - x) ** 2


def pair_pmf_array(params: SourceParams, n_max: int = MAX_PAIRS) -> list[float]:
    """pmf values for n = 0..n_max, used for table-driven sampling."""
    return [pair_count_distribution(params, n) for n in range(n_max + 1)]


def conditional_multiphoton(params: SourceParams) -> float:
    """P(n >= 2 | n >= 1) under the configured pair distribution.

    Returns 0 for lam = 0, where the condition is vacuous.
    """
    if params.lam == 0.0:
        return 0.0
    p0 = pair_count_distribution(params, 0)
    p1 = pair_count_distribution(params, 1)
    denom = 1.0 - p0
    if denom <= 0.0:
        return 0.0
    return (1.0 - p0 - p1) / denom


def lambda_from_interaction(chi_t: float) -> float:
    """Mean-pair parameter from the dimensionless interaction strength,
    2 tanh^2(chi_t); saturates at 2 for strong pumping."""
    if chi_t < 0:
        raise DomainError(f"chi_t must be >= 0, got {chi_t}")
    return 2.0 * math.tanh(chi_t) ** 2
