import json

import numpy as np
import pytest

from sfdel.io import DataError, read_sites_csv, sidecar_path, write_sites_csv
from sfdel.sampling import PrototypeRegion, Seed, SiteSample, Uniform, draw_sites


def test_round_trip(tmp_path):
    s = draw_sites(Uniform(), PrototypeRegion.unit(2), 12.0, 100, Seed(0, 0))
    s = s.with_values(np.random.default_rng(0).normal(size=100))
    path = tmp_path / "d.csv"
    write_sites_csv(s, path)
    back = read_sites_csv(path)
    assert np.max(np.abs(back.sites - s.sites)) <= 1e-12
    assert np.max(np.abs(back.values - s.values)) <= 1e-12
    assert back.lam == s.lam and not back.meta.get("inferred", False)
    assert open(path, "rb").read().count(b"\r") == 0


def test_non_numeric_value_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y,z\n0.1,0.2,1.0\n0.3,0.4,abc\n")
    with pytest.raises(DataError, match="line 3"):
        read_sites_csv(path)


def test_coal_sized_file(tmp_path):
    rng = np.random.default_rng(1)
    pts = rng.uniform(-4.9, 4.9, (105, 2))
    z = rng.normal(40, 3, 105)
    path = tmp_path / "coal.csv"
    path.write_text("x,y,z\n" + "".join(f"{a},{b},{c}\n" for (a, b), c in zip(pts, z)))
    s = read_sites_csv(path)
    assert s.n == 105 and s.meta["inferred"]
    assert np.allclose(s.sites + s.meta["origin"], pts, atol=1e-12)
    assert np.all(s.region.contains(s.sites / s.lam))


@pytest.mark.parametrize("text,match", [
    ("", "empty"),
    ("x,y,z\n1,2\n", "line 2"),
    ("x,y,z\n1,2,3,4\n", "line 2"),
    ("a,b,c\n1,2,3\n", "header"),
    ("x,y,z\n1,2,nan\n", "non-finite"),
])
def test_malformed_files(tmp_path, text, match):
    path = tmp_path / "f.csv"
    path.write_text(text)
    with pytest.raises(DataError, match=match):
        read_sites_csv(path)


def test_general_dimension_header(tmp_path):
    path = tmp_path / "d1.csv"
    path.write_text("x1,z\n-1.0,2.0\n1.5,3.0\n")
    s = read_sites_csv(path)
    assert s.sites.shape == (2, 1)


def test_sidecar_dimension_mismatch(tmp_path):
    s = SiteSample(4.0, PrototypeRegion.unit(2), [[0.0, 0.0], [1.0, 1.0]], [1.0, 2.0])
    path = tmp_path / "d.csv"
    write_sites_csv(s, path)
    with open(sidecar_path(path), "w") as fh:
        json.dump({"lambda": 4.0, "region": {"lo": [-0.5], "hi": [0.5]}}, fh)
    with pytest.raises(DataError):
        read_sites_csv(path)


def test_lambda_override(tmp_path):
    s = SiteSample(4.0, PrototypeRegion.unit(2), [[0.0, 0.0], [1.0, 1.0]], [1.0, 2.0])
    path = tmp_path / "d.csv"
    write_sites_csv(s, path, sidecar=False)
    assert read_sites_csv(path, lam=8.0).lam == 8.0
