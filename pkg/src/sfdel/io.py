"""CSV site/value files with an optional JSON sidecar for lambda and region.

Files have a header ``x,y,z`` (or ``x1,...,xd,z``) and one site per row.
The sidecar ``<file>.meta.json`` records ``lambda`` and the prototype
region; without it both are inferred from the bounding box of the sites.
"""
from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .sampling import PrototypeRegion, SiteSample

__all__ = ["DataError", "read_sites_csv", "write_sites_csv", "sidecar_path"]

# keeps boundary sites strictly inside the half-open region after inference
_PAD = 1e-9


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def sidecar_path(path) -> str:
    return os.fspath(path) + ".meta.json"


def _header_dim(header, path) -> int:
    names = [h.strip() for h in header]
    if names == ["x", "y", "z"]:
        return 2
    d = len(names) - 1
    if d >= 1 and names[-1] == "z" and names[:-1] == [f"x{i}" for i in range(1, d + 1)]:
        return d
    raise DataError(f"{path}: line 1: expected header 'x,y,z' or 'x1,...,xd,z', got {','.join(names)!r}")


def _infer(sites: np.ndarray):
    lo, hi = sites.min(axis=0), sites.max(axis=0)
    center = 0.5 * (lo + hi)
    extent = hi - lo
    lam = float(extent.max()) * (1.0 + 4 * _PAD)
    if lam <= 0.0:
        raise DataError("cannot infer lambda: all sites coincide")
    half = np.maximum(0.5 * extent * (1.0 + 2 * _PAD), _PAD * lam) / lam
    half = np.minimum(half, 0.5)
    return lam, PrototypeRegion(-half, half), center


def read_sites_csv(path, lam: float | None = None) -> SiteSample:
    """Read a site file.

    ``lam`` overrides the sidecar. When the region is inferred the sites are
    translated to the center of their bounding box; ``meta['origin']`` holds
    the shift and ``meta['inferred']`` is true.
    """
    path = os.fspath(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: file is empty")
        d = _header_dim(header, path)
        for record in reader:
            line = reader.line_num
            if not record or all(not f.strip() for f in record):
                continue
            if len(record) != d + 1:
                raise DataError(f"{path}: line {line}: expected {d + 1} fields, got {len(record)}")
            try:
                row = [float(f) for f in record]
            except ValueError:
                raise DataError(f"{path}: line {line}: non-numeric field in {','.join(record)!r}") from None
            if not all(math.isfinite(v) for v in row):
                raise DataError(f"{path}: line {line}: non-finite value")
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    sites, values = data[:, :d], data[:, d]

    meta_file = sidecar_path(path)
    if os.path.exists(meta_file):
        try:
            with open(meta_file, encoding="utf-8") as fh:
                meta = json.load(fh)
            region = PrototypeRegion(meta["region"]["lo"], meta["region"]["hi"])
            side_lam = float(meta["lambda"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{meta_file}: invalid sidecar ({exc})") from None
        if region.d != d:
            raise DataError(f"{meta_file}: region has dimension {region.d}, data has {d}")
        try:
            return SiteSample(side_lam if lam is None else float(lam), region, sites, values,
                              {"inferred": False, "source": path})
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None

    inferred_lam, region, center = _infer(sites)
    if lam is not None:
        lam = float(lam)
        half = np.asarray(region.hi) * inferred_lam / lam
        if np.any(half > 0.5):
            raise DataError(f"{path}: sites span more than lambda={lam} along some axis")
        region = PrototypeRegion(-half, half)
        inferred_lam = lam
    meta = {"inferred": True, "origin": center.tolist(), "source": path}
    return SiteSample(inferred_lam, region, sites - center, values, meta)


def write_sites_csv(sample: SiteSample, path, sidecar: bool = True) -> None:
    """Write ``sample`` with shortest round-trip float formatting and LF endings."""
    if sample.values is None:
        raise ValueError("sample has no values to write")
    path = os.fspath(path)
    header = ["x", "y", "z"] if sample.d == 2 else [f"x{i}" for i in range(1, sample.d + 1)] + ["z"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for site, value in zip(sample.sites, sample.values):
            writer.writerow([repr(float(v)) for v in site] + [repr(float(value))])
    if sidecar:
        meta = {"lambda": float(sample.lam),
                "region": {"lo": list(sample.region.lo), "hi": list(sample.region.hi)}}
        with open(sidecar_path(path), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")
