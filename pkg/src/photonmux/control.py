"""Digital control plane of the multiplexer.

The variable delay circuit is a chain of delay stages (coarsest first, lengths
2^(m-1) T ... 2T, T for N = 2^m bins) bounded by 2x2 phase switches.  A photon
heralded in bin r must be delayed by (N - r) pump periods so that every frame
emits in the same output slot; the per-stage switch phases that realize this
are periodic in the bin index and can therefore be produced by divided clocks
rather than by a processor.

Routing convention: phase pi means cross.  The photon enters the first switch
on the bypass rail, so a pi on the entry stage steers it into the coarsest
delay.  After the coarsest stage the rails merge onto the delay-side input of
the second switch (a pi there *skips* the next delay); the remaining stages
form a two-rail chain where the phase is the XOR of consecutive delay bits,
and the exit switch folds the final rail onto the output port.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .model import DomainError

PHASE_PI = math.pi


def _stage_bits(n_bins: int, bin_index: int) -> list[int]:
    """Phase bits (0 -> phase 0, 1 -> phase pi) for one bin, entry to exit."""
    m = n_bins.bit_length() - 1
    d = n_bins - bin_index
    msb_bits = [(d >> (m - 1 - s)) & 1 for s in range(m)]
    cols = []
    for s in range(m + 1):
        if s == 0:
            cols.append(msb_bits[0])
        elif s == m:
            cols.append(msb_bits[m - 1])
        elif s == 1:
            cols.append(1 - msb_bits[1])
        else:
            cols.append(msb_bits[s - 1] ^ msb_bits[s])
    return cols


@dataclass(frozen=True)
class PhaseSchedule:
    """Per-bin, per-stage switch phases for one frame of ``n_bins`` bins.

    Row r-1 holds the phases applied while bin r's photon traverses the
    chain; entries are 0 or pi.  Stage 0 is the coarsest (entry) switch,
    stage ``stage_count - 1`` the exit switch.
    """

    n_bins: int
    phases: tuple[tuple[float, ...], ...]

    @property
    def stage_count(self) -> int:
        return len(self.phases[0])

    def row(self, bin_index: int) -> tuple[float, ...]:
        if not 1 <= bin_index <= self.n_bins:
            raise DomainError(
                f"bin index must be in [1, {self.n_bins}], got {bin_index}")
        return self.phases[bin_index - 1]

    def decode_delay(self, bin_index: int) -> int:
        """Recover the delay (in bins) encoded by one row of phases.

        Inverts the routing convention stage by stage and checks that the
        exit-stage phase is consistent with the recovered path.
        """
        row = self.row(bin_index)
        m = self.stage_count - 1
        bits = [0] * m
        bits[0] = int(row[0] == PHASE_PI)
        if m >= 2:
            bits[1] = 1 - int(row[1] == PHASE_PI)
        for s in range(2, m):
            bits[s] = bits[s - 1] ^ int(row[s] == PHASE_PI)
        if int(row[m] == PHASE_PI) != bits[m - 1]:
            raise DomainError(
                f"inconsistent exit phase in row for bin {bin_index}")
        return sum(bits[s] << (m - 1 - s) for s in range(m))

    def to_csv(self, path) -> None:
        """Write the schedule as CSV: bin, delay_bins, one column per stage."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["bin", "delay_bins"]
            header += [f"phi_stage{s}" for s in range(self.stage_count)]
            writer.writerow(header)
            for r in range(1, self.n_bins + 1):
                row = [r, self.n_bins - r]
                row += ["pi" if p == PHASE_PI else "0" for p in self.row(r)]
                writer.writerow(row)


def delay_decompose(delay_bins: int, n_bins: int) -> list[int]:
    """Binary expansion of a delay, least-significant stage first.

    Coefficient j set means the photon is routed through the 2^j T delay.
    """
    if n_bins < 1:
        raise DomainError(f"n_bins must be >= 1, got {n_bins}")
    if not 0 <= delay_bins <= n_bins - 1:
        raise DomainError(
            f"delay must be in [0, {n_bins - 1}], got {delay_bins}")
    n_stages = max(1, (n_bins - 1).bit_length())
    return [(delay_bins >> j) & 1 for j in range(n_stages)]


def phase_schedule(n_bins: int) -> PhaseSchedule:
    """Switch-phase matrix for a full frame; requires n_bins a power of two.

    Bin r's row routes its photon through delay (n_bins - r) T.  Each column
    is a square wave in the bin index, which is what allows clock-division
    drive (see :func:`drive_waveforms`).
    """
    if n_bins < 2 or n_bins & (n_bins - 1):
        raise DomainError(
            f"phase schedule needs a power-of-two n_bins >= 2, got {n_bins}")
    rows = tuple(
        tuple(PHASE_PI if b else 0.0 for b in _stage_bits(n_bins, r))
        for r in range(1, n_bins + 1))
    return PhaseSchedule(n_bins=n_bins, phases=rows)


def clock_divisions(n_bins: int) -> tuple[int, ...]:
    """Clock division factor per stage: the full period, in bins, of each
    stage's drive square wave."""
    if n_bins < 2 or n_bins & (n_bins - 1):
        raise DomainError(
            f"clock divisions need a power-of-two n_bins >= 2, got {n_bins}")
    m = n_bins.bit_length() - 1
    divisions = [n_bins]
    for s in range(1, m + 1):
        if s == 1 and m >= 2:
            divisions.append(n_bins // 2)
        else:
            divisions.append(2 ** (m - s + 1))
    return tuple(divisions)


def _waveform_bit(n_bins: int, stage: int, r: int) -> int:
    """Square-wave construction of stage phases, independent of the routing
    bits; cross-checked against :func:`phase_schedule` by the test suite."""
    m = n_bins.bit_length() - 1
    if stage == 0:
        return ((r - 1) // (n_bins // 2) + 1) % 2
    if stage == m:
        return r % 2
    if stage == 1:
        return ((r - 1) // (n_bins // 4)) % 2
    half = 2 ** (m - stage)
    return ((r - 1 + half // 2) // half) % 2


def drive_waveforms(n_bins: int, n_frames: int) -> tuple[tuple[float, ...], ...]:
    """Per-stage drive waveforms sampled at the bin rate over ``n_frames``.

    Each stage is a 50 percent duty square wave at its clock division (with a
    fixed per-stage offset), built directly from the divided-clock rule; in
    every frame the samples reproduce the phase-schedule rows.
    """
    if n_frames < 1:
        raise DomainError(f"n_frames must be >= 1, got {n_frames}")
    if n_bins < 2 or n_bins & (n_bins - 1):
        raise DomainError(
            f"drive waveforms need a power-of-two n_bins >= 2, got {n_bins}")
    m = n_bins.bit_length() - 1
    waves = []
    for stage in range(m + 1):
        samples = []
        for _ in range(n_frames):
            for r in range(1, n_bins + 1):
                samples.append(PHASE_PI if _waveform_bit(n_bins, stage, r) else 0.0)
        waves.append(tuple(samples))
    return tuple(waves)


@dataclass(frozen=True)
class HeraldFrame:
    """One frame of heralding-detector outcomes; bit r-1 is set when the
    detector fired in bin r."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.bits:
            raise DomainError("herald frame must contain at least one bin")
        if any(b not in (0, 1) for b in self.bits):
            raise DomainError("herald bits must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def from_string(cls, text: str) -> "HeraldFrame":
        return cls(tuple(int(c) for c in text))


def select_first(frame: HeraldFrame) -> int | None:
    """Bin index of the earliest herald, or None for an idle frame."""
    for i, bit in enumerate(frame.bits):
        if bit:
            return i + 1
    return None


def select_last(frame: HeraldFrame) -> tuple[tuple[int, ...], int | None]:
    """Lookup-table last-photon selection.

    Returns the one-hot output frame driving the decision switch together
    with the selected bin index; an all-zero input yields an all-zero output
    (the source idles that frame).
    """
    selected = None
    for i in range(len(frame.bits) - 1, -1, -1):
        if frame.bits[i]:
            selected = i + 1
            break
    out = [0] * len(frame.bits)
    if selected is not None:
        out[selected - 1] = 1
    return tuple(out), selected
