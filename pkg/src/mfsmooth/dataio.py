"""File formats: CSV data with empty-cell missing markers, key=value config
files, parameter bundles, and a small binary archive for draw stacks.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .model import AggregationScheme, VarParams, intra_quarterly_average, skip_sampling

__all__ = [
    "write_data_csv",
    "read_data_csv",
    "write_config",
    "read_config",
    "save_params",
    "load_params",
    "write_archive",
    "read_archive",
    "scheme_from_config",
]

ARCHIVE_MAGIC = b"MFSM"
ARCHIVE_VERSION = 1


def write_data_csv(path: str | Path, values: np.ndarray, names: list[str]) -> None:
    """Header row of variable names, one row per month, empty cells missing;
    quarterly columns last."""
    values = np.asarray(values, dtype=float)
    if values.shape[1] != len(names):
        raise ConfigurationError("number of names must match number of columns")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in values:
            w.writerow(["" if np.isnan(v) else repr(float(v)) for v in row])


def read_data_csv(path: str | Path) -> tuple[np.ndarray, list[str]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        try:
            names = next(r)
        except StopIteration:
            raise ConfigurationError(f"{path}: empty data file") from None
        rows = []
        for lineno, row in enumerate(r, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise ConfigurationError(f"{path}:{lineno}: expected {len(names)} fields, got {len(row)}")
            rows.append([np.nan if f.strip() == "" else float(f) for f in row])
    return np.array(rows, dtype=float), names


def write_config(path: str | Path, config: dict) -> None:
    with open(path, "w") as fh:
        for k, v in config.items():
            fh.write(f"{k} = {v}\n")


def read_config(path: str | Path) -> dict:
    """key = value lines; '#' starts a comment; values kept as strings."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def scheme_from_config(config: dict) -> AggregationScheme:
    kind = config.get("aggregation", "intra_quarterly_average")
    if kind == "intra_quarterly_average":
        return intra_quarterly_average()
    if kind == "skip_sampling":
        return skip_sampling()
    if kind == "custom":
        weights = [float(w) for w in config["weights"].split(",")]
        return AggregationScheme("custom", np.array(weights), len(weights))
    raise ConfigurationError(f"unknown aggregation scheme {kind!r}")


def save_params(path: str | Path, params: VarParams) -> None:
    np.savez(
        path,
        n_m=params.n_m,
        n_q=params.n_q,
        p=params.p,
        intercept=params.intercept,
        lag_coeffs=params.lag_coeffs,
        chol_cov=params.chol_cov,
    )


def load_params(path: str | Path) -> VarParams:
    with np.load(path) as z:
        return VarParams(
            int(z["n_m"]), int(z["n_q"]), int(z["p"]),
            z["intercept"], z["lag_coeffs"], z["chol_cov"],
        )


@dataclass(frozen=True)
class ArchiveHeader:
    T: int
    n: int
    n_q: int
    n_draws: int


def write_archive(path: str | Path, draws: np.ndarray, n_q: int) -> None:
    """Binary draw stack: magic, version, T, n, n_q, draw count (uint32 LE),
    then row-major little-endian float64 values."""
    draws = np.ascontiguousarray(draws, dtype="<f8")
    if draws.ndim != 3:
        raise ConfigurationError("draw archive expects an (n_draws, T, n) array")
    k, T, n = draws.shape
    with open(path, "wb") as fh:
        fh.write(ARCHIVE_MAGIC)
        fh.write(struct.pack("<IIIII", ARCHIVE_VERSION, T, n, n_q, k))
        fh.write(draws.tobytes())


def read_archive(path: str | Path) -> tuple[np.ndarray, ArchiveHeader]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != ARCHIVE_MAGIC:
            raise ConfigurationError(f"{path}: not a draw archive")
        version, T, n, n_q, k = struct.unpack("<IIIII", fh.read(20))
        if version != ARCHIVE_VERSION:
            raise ConfigurationError(f"{path}: unsupported archive version {version}")
        buf = fh.read(8 * k * T * n)
    draws = np.frombuffer(buf, dtype="<f8").reshape(k, T, n).copy()
    return draws, ArchiveHeader(T, n, n_q, k)
