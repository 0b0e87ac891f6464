"""JSON schemas for problems, solver results, and certificate reports.

Problem files hold {schema, model, n, m, seed, vectors?, b?, w?, x0?}. The
sensing vectors are optional because (model, n, m, seed) regenerates them
bit-identically; complex entries are encoded as [re, im] pairs.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .measurement import MeasurementEnsemble, Observations, sample_ensemble

SCHEMA_VERSION = 1


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_vector(x: np.ndarray) -> list:
    """Real vector -> [r, ...]; complex vector -> [[re, im], ...]."""
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return [[float(v.real), float(v.imag)] for v in x]
    return [float(v) for v in x]


def decode_vector(data: list) -> np.ndarray:
    if data and isinstance(data[0], (list, tuple)):
        return np.array([complex(re, im) for re, im in data])
    return np.array(data, dtype=float)


def problem_to_dict(
    ensemble: MeasurementEnsemble,
    obs: Observations | None = None,
    include_vectors: bool = False,
) -> dict:
    d: dict = {
        "schema": SCHEMA_VERSION,
        "model": ensemble.model,
        "n": ensemble.n,
        "m": ensemble.m,
        "seed": ensemble.seed,
    }
    if include_vectors:
        d["vectors"] = [encode_vector(row) for row in ensemble.vectors]
    if obs is not None:
        d["b"] = [float(v) for v in obs.b]
        if obs.w is not None:
            d["w"] = [float(v) for v in obs.w]
        if obs.ground_truth is not None:
            d["x0"] = encode_vector(obs.ground_truth)
    return d


def problem_from_dict(d: dict) -> tuple[MeasurementEnsemble, Observations | None]:
    for key in ("model", "n", "m", "seed"):
        if key not in d:
            raise ValueError(f"problem file is missing required field {key!r}")
    ensemble = sample_ensemble(d["model"], int(d["n"]), int(d["m"]), int(d["seed"]))
    if "vectors" in d:
        vectors = np.array([decode_vector(row) for row in d["vectors"]])
        if vectors.shape != ensemble.vectors.shape:
            raise ValueError(
                f"stored vectors have shape {vectors.shape}, expected ({d['m']}, {d['n']})"
            )
        ensemble = MeasurementEnsemble(
            model=d["model"], n=int(d["n"]), m=int(d["m"]), seed=int(d["seed"]), vectors=vectors
        )
    obs = None
    if "b" in d:
        b = np.array(d["b"], dtype=float)
        if b.shape[0] != ensemble.m:
            raise ValueError(f"b has length {b.shape[0]} but ensemble has m={ensemble.m}")
        w = np.array(d["w"], dtype=float) if "w" in d else None
        x0 = decode_vector(d["x0"]) if "x0" in d else None
        obs = Observations(b=b, w=w, ground_truth=x0)
    return ensemble, obs


def save_problem(
    path: str,
    ensemble: MeasurementEnsemble,
    obs: Observations | None = None,
    include_vectors: bool = False,
) -> None:
    d = problem_to_dict(ensemble, obs, include_vectors=include_vectors)
    atomic_write_text(path, json.dumps(d, indent=2) + "\n")


def load_problem(path: str) -> tuple[MeasurementEnsemble, Observations | None]:
    with open(path) as fh:
        d = json.load(fh)
    return problem_from_dict(d)
