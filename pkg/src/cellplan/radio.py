"""Scalar radio math: dB algebra, wavelength, noise floor, NRSRQ/SINR."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

#: propagation speed; the rounded value keeps 3500 MHz at exactly 8.571428... cm
SPEED_OF_LIGHT = 3.0e8
THERMAL_NOISE_DENSITY_DBM_HZ = -174.0


class Duplex(str, enum.Enum):
    TDD = "TDD"
    FDD = "FDD"


@dataclass(frozen=True)
class CarrierConfig:
    """NR carrier.

    ``subcarrier_count`` is the number of subcarriers across the channel
    bandwidth (1944 for 60 MHz at 30 kHz spacing, i.e. 162 resource blocks).
    """

    center_freq: float  # MHz
    bandwidth: float  # MHz
    subcarrier_count: int
    duplex: Duplex = Duplex.TDD

    def __post_init__(self):
        if not self.center_freq > 0:
            raise ValueError(f"center_freq must be positive, got {self.center_freq}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if int(self.subcarrier_count) != self.subcarrier_count or self.subcarrier_count < 1:
            raise ValueError(f"subcarrier_count must be a positive integer, got {self.subcarrier_count}")
        object.__setattr__(self, "subcarrier_count", int(self.subcarrier_count))
        object.__setattr__(self, "duplex", Duplex(self.duplex))

    @property
    def per_re_offset_db(self) -> float:
        """10*log10(subcarrier_count): wideband to per-resource-element."""
        return 10.0 * math.log10(self.subcarrier_count)

    @classmethod
    def from_dict(cls, d: dict) -> "CarrierConfig":
        return cls(
            center_freq=float(d["center_freq_mhz"]),
            bandwidth=float(d["bandwidth_mhz"]),
            subcarrier_count=d["subcarrier_count"],
            duplex=d.get("duplex", "TDD"),
        )

    def to_dict(self) -> dict:
        return {
            "center_freq_mhz": self.center_freq,
            "bandwidth_mhz": self.bandwidth,
            "subcarrier_count": self.subcarrier_count,
            "duplex": self.duplex.value,
        }


def db_to_linear(v):
    return np.power(10.0, np.asarray(v, dtype=float) / 10.0) if np.ndim(v) else 10.0 ** (v / 10.0)


def linear_to_db(r):
    if np.ndim(r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("linear_to_db requires strictly positive ratios")
        return 10.0 * np.log10(r)
    if not r > 0:
        raise ValueError(f"linear_to_db requires a positive ratio, got {r}")
    return 10.0 * math.log10(r)


def wavelength(freq_mhz: float) -> float:
    """Free-space wavelength in meters for a frequency in MHz."""
    if not freq_mhz > 0:
        raise ValueError(f"frequency must be positive, got {freq_mhz}")
    return SPEED_OF_LIGHT / (freq_mhz * 1e6)


def thermal_noise(bandwidth_mhz: float, noise_figure_db: float = 0.0) -> float:
    """Receiver noise floor in dBm."""
    if not bandwidth_mhz > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_mhz}")
    return THERMAL_NOISE_DENSITY_DBM_HZ + 10.0 * math.log10(bandwidth_mhz * 1e6) + noise_figure_db


def _check_activity(x: float):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"activity factor must lie in [0, 1], got {x}")


def sinr_from_nrsrq(nrsrq: float, n: int, x: float) -> float:
    """Linear SINR implied by a linear NRSRQ.

    ``n`` is the number of subcarriers and ``x`` the per-antenna subcarrier
    activity factor. Raises ``ValueError`` when ``1/(n*nrsrq) <= x``, i.e.
    when the NRSRQ is too high to be consistent with the activity factor.
    """
    _check_activity(x)
    nq = n * nrsrq
    if not nq > 0:
        raise ValueError(f"n*nrsrq must be positive, got {nq}")
    if x == 0.0:
        return nq
    denom = 1.0 / nq - x
    if not denom > 0:
        raise ValueError(
            f"NRSRQ {nrsrq} with n={n} is inconsistent with activity factor {x} "
            f"(1/(n*NRSRQ) - x = {denom})"
        )
    return 1.0 / denom


def nrsrq_from_sinr(sinr: float, n: int, x: float) -> float:
    _check_activity(x)
    if not sinr > 0:
        raise ValueError(f"sinr must be positive, got {sinr}")
    if not n > 0:
        raise ValueError(f"subcarrier count must be positive, got {n}")
    if x == 0.0:
        return sinr / n
    return 1.0 / (n * (1.0 / sinr + x))


def required_sinr_for_throughput(throughput_mbps: float, bandwidth_mhz: float,
                                 layers: int = 1, efficiency: float = 0.75) -> float:
    """SINR in dB needed to carry ``throughput_mbps`` under a derated Shannon bound."""
    if not throughput_mbps > 0:
        raise ValueError(f"throughput must be positive, got {throughput_mbps}")
    if not bandwidth_mhz > 0 or not layers > 0:
        raise ValueError("bandwidth and layers must be positive")
    if not 0 < efficiency <= 1:
        raise ValueError(f"efficiency must lie in (0, 1], got {efficiency}")
    se = throughput_mbps / (layers * bandwidth_mhz * efficiency)
    return 10.0 * math.log10(math.expm1(se * math.log(2.0)))
