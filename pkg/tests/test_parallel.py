import numpy as np

from ngbound import _parallel
from ngbound.region2 import total_bound


def _square(x):
    return x * x


def test_env_caps_workers(monkeypatch):
    monkeypatch.setenv("NGB_THREADS", "2")
    assert _parallel.max_workers(8) == 2
    monkeypatch.setenv("NGB_THREADS", "junk")
    assert _parallel.max_workers(3) == 3
    monkeypatch.delenv("NGB_THREADS")
    assert _parallel.max_workers(1) == 1


def test_pmap_preserves_order(monkeypatch):
    monkeypatch.setenv("NGB_THREADS", "2")
    items = list(range(300))
    assert _parallel.pmap(_square, items, workers=2, chunksize=8) == [x * x for x in items]


def test_parallel_surface_equals_serial(monkeypatch):
    mgs, mus = np.linspace(0.1, 0.9, 12), np.linspace(0.2, 1.0, 12)
    serial = total_bound(mgs, mus, workers=1).to_csv()
    monkeypatch.setenv("NGB_THREADS", "2")
    assert total_bound(mgs, mus, workers=2).to_csv() == serial
