"""Synthetic 2-D random fields and biased covariance estimation.

The test scene is a single complex exponential in additive circular white
Gaussian noise on a T1 x T2 sampling rectangle.  Covariances on a lag
rectangle are estimated with the standard biased estimator (normalization by
T1*T2 regardless of overlap), which keeps the estimated sequence positive
semidefinite and the downstream Hessians well conditioned.  The constant
prior for the estimation pipeline is the zero-lag covariance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .lagset import IndexSet, SymmetricMultisequence
from .spectral import FrequencyGrid, GridFunction

#: Amplitude-to-noise-standard-deviation ratio of the reference scenario.
DEFAULT_RATIO = 1.0 / np.sqrt(2.0)

#: Planted frequency used by the command line when none is given
#: (a configuration choice, on-grid for 30 x 30 sampling).
DEFAULT_FREQ = (2.0 * np.pi * 0.3, 2.0 * np.pi * 0.2)


@dataclass(frozen=True)
class FieldSamples:
    """Complex observations y[t1, t2] with t_j in 0..T_j-1."""

    T1: int
    T2: int
    y: np.ndarray

    def __post_init__(self):
        if self.y.shape != (self.T1, self.T2):
            raise ValueError(f"sample array shape {self.y.shape} != ({self.T1}, {self.T2})")


@dataclass(frozen=True)
class FieldModel:
    """One complex exponential plus circular white Gaussian noise.

    ``amplitude / noise_std`` is the configured signal-to-noise ratio; the
    noise has independent real and imaginary parts of variance
    ``noise_std**2 / 2`` each.  Sampling uses numpy's PCG64 generator seeded
    with ``seed``, so identical seeds reproduce samples bit for bit.
    """

    freq: tuple[float, float]
    amplitude: float
    noise_std: float
    phase: float
    seed: int

    def __post_init__(self):
        if self.amplitude < 0.0 or self.noise_std < 0.0:
            raise ValueError("amplitude and noise_std must be nonnegative")

    @classmethod
    def from_ratio(cls, freq: tuple[float, float] = DEFAULT_FREQ,
                   ratio: float = DEFAULT_RATIO, seed: int = 0) -> "FieldModel":
        """Unit amplitude, noise_std = 1/ratio, phase drawn uniformly from the seed."""
        if ratio <= 0.0:
            raise ValueError("ratio must be positive")
        phase = float(np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi))
        return cls(freq=(float(freq[0]), float(freq[1])), amplitude=1.0,
                   noise_std=1.0 / float(ratio), phase=phase, seed=int(seed))


def synth_field(model: FieldModel, T1: int, T2: int) -> FieldSamples:
    """Draw ``y_t = A exp(i(<t, freq> + phase)) + w_t`` on the sample rectangle."""
    if T1 < 1 or T2 < 1:
        raise ValueError("sample dimensions must be positive")
    t1 = np.arange(T1)[:, None]
    t2 = np.arange(T2)[None, :]
    carrier = model.amplitude * np.exp(
        1j * (t1 * model.freq[0] + t2 * model.freq[1] + model.phase)
    )
    rng = np.random.default_rng(model.seed)
    scale = model.noise_std / np.sqrt(2.0)
    noise = scale * (rng.standard_normal((T1, T2)) + 1j * rng.standard_normal((T1, T2)))
    return FieldSamples(T1, T2, carrier + noise)


def biased_covariances(samples: FieldSamples, s: IndexSet) -> SymmetricMultisequence:
    """Biased lag covariances ``sum_t y[t+k] conj(y[t]) / (T1*T2)`` over Lambda.

    Lags with k1 >= 0 are summed directly over the overlapping sample region;
    the k1 < 0 half follows from conjugate symmetry.  Requires n_j < T_j
    (estimates are only trustworthy for n_j well below T_j).
    """
    T1, T2, y = samples.T1, samples.T2, samples.y
    if s.n1 >= T1 or s.n2 >= T2:
        raise ValueError(
            f"index set ({s.n1}, {s.n2}) too large for {T1} x {T2} samples"
        )
    norm = 1.0 / (T1 * T2)
    v = np.zeros(s.shape, dtype=complex)
    for k1 in range(0, s.n1 + 1):
        for k2 in range(-s.n2, s.n2 + 1):
            lead = y[k1:, k2:] if k2 >= 0 else y[k1:, :T2 + k2]
            lag = y[:T1 - k1, :T2 - k2] if k2 >= 0 else y[:T1 - k1, -k2:]
            v[s.n1 + k1, s.n2 + k2] = norm * np.sum(lead * np.conj(lag))
    for k1 in range(1, s.n1 + 1):
        v[s.n1 - k1] = np.conj(v[s.n1 + k1])[::-1]
    v[s.n1, s.n2] = v[s.n1, s.n2].real
    return SymmetricMultisequence(s, v)


def constant_prior(sigma: SymmetricMultisequence, g: FrequencyGrid) -> GridFunction:
    """Constant prior spectrum equal to the zero-lag covariance."""
    s0 = sigma.value((0, 0)).real
    if s0 <= 0.0:
        raise ValueError(f"zero-lag covariance must be positive, got {s0}")
    return GridFunction.constant(g, s0)


def write_samples_csv(path, samples: FieldSamples) -> None:
    """Write ``t1,t2,re,im`` rows behind a ``# T1=.. T2=..`` preamble."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# T1={samples.T1} T2={samples.T2}\n")
        w = csv.writer(fh)
        w.writerow(["t1", "t2", "re", "im"])
        for t1 in range(samples.T1):
            for t2 in range(samples.T2):
                c = samples.y[t1, t2]
                w.writerow([t1, t2, f"{c.real:.17g}", f"{c.imag:.17g}"])


def read_samples_csv(path) -> FieldSamples:
    """Read a samples CSV produced by :func:`write_samples_csv`."""
    with open(path, newline="") as fh:
        preamble = fh.readline().strip()
        if not preamble.startswith("#"):
            raise ValueError(f"{path}: missing '# T1=.. T2=..' preamble")
        try:
            fields = dict(tok.split("=") for tok in preamble.lstrip("#").split())
            T1, T2 = int(fields["T1"]), int(fields["T2"])
        except (ValueError, KeyError) as exc:
            raise ValueError(f"{path}: malformed preamble {preamble!r}") from exc
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header] != ["t1", "t2", "re", "im"]:
            raise ValueError(f"{path}: expected header 't1,t2,re,im'")
        y = np.full((T1, T2), np.nan, dtype=complex)
        for line in r:
            if not line:
                continue
            t1, t2 = int(line[0]), int(line[1])
            if not (0 <= t1 < T1 and 0 <= t2 < T2):
                raise ValueError(f"{path}: sample index ({t1}, {t2}) out of range")
            y[t1, t2] = complex(float(line[2]), float(line[3]))
    if np.isnan(y.real).any():
        raise ValueError(f"{path}: incomplete sample grid")
    return FieldSamples(T1, T2, y)
