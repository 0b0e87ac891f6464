"""Sensing ensembles, the quadratic measurement map and its adjoint, and noise.

Randomness is counter-based so every draw is reproducible independent of
sampling order or parallelism: each (seed, tag, index) triple keys its own
Philox4x64 stream, and Gaussians come from Box-Muller applied to that stream's
53-bit uniforms. Ensemble row i uses (seed, TAG_ROW, i); noise vectors use
(seed, TAG_NOISE, 0); signal draws use (seed, TAG_SIGNAL, 0).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .linalg import symmetrize

MODELS = ("real_gaussian", "real_sphere", "complex_gaussian", "complex_sphere")
NOISE_KINDS = ("gaussian", "uniform", "adversarial_sign")

TAG_ROW = 0
TAG_NOISE = 1
TAG_SIGNAL = 2

_MASK64 = (1 << 64) - 1
_MASK48 = (1 << 48) - 1


def stream(seed: int, tag: int, index: int) -> np.random.Generator:
    """Philox stream keyed by (seed, tag, index); 128-bit key = seed | tag | index."""
    key = ((int(seed) & _MASK64) << 64) | ((int(tag) & 0xFFFF) << 48) | (int(index) & _MASK48)
    return np.random.Generator(np.random.Philox(key=key))


def gaussian(rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
    """Standard normals via Box-Muller on the stream's uniforms (build-stable)."""
    shape = (size,) if isinstance(size, int) else tuple(size)
    count = int(np.prod(shape)) if shape else 1
    pairs = (count + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # in (0, 1], keeps log finite
    u2 = rng.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:count].reshape(shape)


@dataclass(frozen=True)
class MeasurementEnsemble:
    """m sensing vectors of dimension n drawn i.i.d. from one of MODELS."""

    model: str
    n: int
    m: int
    seed: int
    vectors: np.ndarray  # (m, n), rows are the sensing vectors

    @property
    def is_complex(self) -> bool:
        return self.model.startswith("complex")


@dataclass(frozen=True)
class Observations:
    """Measurement values b, optionally the noise realization w and the ground truth."""

    b: np.ndarray
    w: np.ndarray | None = None
    ground_truth: np.ndarray | None = None


@dataclass(frozen=True)
class NoiseSpec:
    kind: str  # one of NOISE_KINDS
    level: float  # sigma / eta / epsilon

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.level < 0:
            raise ValueError(f"noise level must be nonnegative, got {self.level}")


def _sample_row(model: str, n: int, seed: int, row: int) -> np.ndarray:
    rng = stream(seed, TAG_ROW, row)
    if model == "real_gaussian":
        return gaussian(rng, n)
    if model == "real_sphere":
        g = gaussian(rng, n)
        return g * (np.sqrt(n) / np.linalg.norm(g))
    # complex models: N(0, I/2) + i N(0, I/2)
    g = gaussian(rng, 2 * n)
    a = (g[:n] + 1j * g[n:]) / np.sqrt(2.0)
    if model == "complex_sphere":
        a *= np.sqrt(n) / np.linalg.norm(a)
    return a


def sample_ensemble(model: str, n: int, m: int, seed: int) -> MeasurementEnsemble:
    """Draw m i.i.d. sensing vectors; rows are keyed per index so the ensemble
    is bit-reproducible from (model, n, m, seed)."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    if n < 1 or m < 1:
        raise ValueError(f"n and m must be positive, got n={n}, m={m}")
    dtype = complex if model.startswith("complex") else float
    vectors = np.empty((m, n), dtype=dtype)
    for i in range(m):
        vectors[i] = _sample_row(model, n, seed, i)
    return MeasurementEnsemble(model=model, n=n, m=m, seed=seed, vectors=vectors)


def _check_signal(ensemble: MeasurementEnsemble, x0: np.ndarray) -> np.ndarray:
    x0 = np.asarray(x0).ravel()
    if x0.shape[0] != ensemble.n:
        raise ValueError(f"signal dimension {x0.shape[0]} != ensemble n={ensemble.n}")
    if np.iscomplexobj(x0) and not ensemble.is_complex:
        raise ValueError("complex signal is not compatible with a real ensemble")
    if ensemble.is_complex:
        x0 = x0.astype(complex)
    return x0


def measure(ensemble: MeasurementEnsemble, x0: np.ndarray) -> Observations:
    """Clean quadratic measurements b_i = |<a_i, x0>|^2 with <a, x> = a* x."""
    x0 = _check_signal(ensemble, x0)
    inner = ensemble.vectors.conj() @ x0
    b = np.abs(inner) ** 2
    return Observations(b=b, w=None, ground_truth=x0)


def apply_A(ensemble: MeasurementEnsemble, X: np.ndarray) -> np.ndarray:
    """Linear map A(X)_i = a_i* X a_i for symmetric/Hermitian X (returns reals)."""
    X = np.asarray(X)
    n = ensemble.n
    if X.shape != (n, n):
        raise ValueError(f"matrix shape {X.shape} != ({n}, {n})")
    A = ensemble.vectors
    vals = np.einsum("ij,ij->i", A.conj() @ X, A)
    if np.iscomplexobj(vals):
        scale = max(1.0, float(np.max(np.abs(vals))))
        imax = float(np.max(np.abs(vals.imag)))
        if imax > 1e-10 * scale:
            raise ValueError(f"A(X) has non-negligible imaginary part {imax:.3e}; X not Hermitian?")
        vals = vals.real
    return vals


def apply_At(ensemble: MeasurementEnsemble, y: np.ndarray) -> np.ndarray:
    """Adjoint A*(y) = sum_i y_i a_i a_i*, symmetric/Hermitian by construction."""
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != ensemble.m:
        raise ValueError(f"multiplier length {y.shape[0]} != ensemble m={ensemble.m}")
    A = ensemble.vectors
    Y = A.T @ (y[:, None] * A.conj())
    return symmetrize(Y)


def add_noise(obs: Observations, spec: NoiseSpec, seed: int) -> Observations:
    """Return observations with b replaced by b + w, w drawn per the noise spec."""
    if obs.w is not None:
        raise ValueError("observations already carry noise")
    m = obs.b.shape[0]
    rng = stream(seed, TAG_NOISE, 0)
    if spec.kind == "gaussian":
        w = spec.level * gaussian(rng, m)
    elif spec.kind == "uniform":
        w = spec.level * (2.0 * rng.random(m) - 1.0)
    else:  # adversarial_sign: epsilon times Rademacher signs
        w = spec.level * np.where(rng.random(m) < 0.5, -1.0, 1.0)
    return replace(obs, b=obs.b + w, w=w)


def random_signal(n: int, seed: int, complex_field: bool = False) -> np.ndarray:
    """Unit-norm signal drawn uniform on the sphere of the matching field."""
    rng = stream(seed, TAG_SIGNAL, 0)
    if complex_field:
        g = gaussian(rng, 2 * n)
        x = g[:n] + 1j * g[n:]
    else:
        x = gaussian(rng, n)
    return x / np.linalg.norm(x)
