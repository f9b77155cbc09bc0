import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlrank import kernels
from mlrank.field import field_of_order
from mlrank.mlmatrix import ScalarMatrix

needs_compiled = pytest.mark.skipif(kernels._compiled is None, reason="compiled kernels not built")


@st.composite
def stacks(draw):
    q = draw(st.sampled_from([2, 3, 4, 5, 7, 8, 9]))
    N, a, b = draw(st.integers(1, 6)), draw(st.integers(1, 5)), draw(st.integers(1, 5))
    flat = draw(st.lists(st.integers(0, q - 1), min_size=N * a * b, max_size=N * a * b))
    return field_of_order(q), np.array(flat, dtype=np.int64).reshape(N, a, b)


@given(stacks())
def test_python_kernel_matches_reference(data):
    ctx, mats = data
    got = kernels.rank_batch(ctx, mats, backend="python")
    assert got.tolist() == [ScalarMatrix(ctx, m.tolist()).rank() for m in mats]


@needs_compiled
@given(stacks())
def test_backends_agree(data):
    ctx, mats = data
    assert (kernels.rank_batch(ctx, mats, backend="cython")
            == kernels.rank_batch(ctx, mats, backend="python")).all()


def test_input_untouched_and_shapes():
    ctx = field_of_order(3)
    mats = np.array([[[1, 2], [2, 1]], [[1, 2], [2, 1]]], dtype=np.int64)
    before = mats.copy()
    kernels.rank_batch(ctx, mats)
    assert (mats == before).all()
    assert kernels.rank_batch(ctx, np.zeros((0, 2, 2))).shape == (0,)
    assert kernels.rank_batch(ctx, np.zeros((3, 0, 2))).tolist() == [0, 0, 0]
    with pytest.raises(ValueError):
        kernels.rank_batch(ctx, np.zeros((2, 2)))


def test_large_field_generic_path():
    ctx = field_of_order(2003)
    mats = np.array([[[1, 2], [2, 4]], [[1, 0], [0, 2002]]], dtype=np.int64)
    assert kernels.rank_batch(ctx, mats).tolist() == [1, 2]


def test_backend_name():
    assert kernels.BACKEND in ("python", "cython")
    if kernels._compiled is None:
        with pytest.raises(RuntimeError):
            kernels.rank_batch(field_of_order(2), np.zeros((1, 1, 1)), backend="cython")


def test_env_forces_fallback():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-c", "import mlrank.kernels as k; print(k.BACKEND)"],
                         env={"MLRANK_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


def test_benchmark_runs(tmp_path, monkeypatch, capsys):
    import importlib.util
    import json
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    monkeypatch.setattr(bench, "CASES", [(3, 50, 3, 3)])
    out = tmp_path / "b.json"
    bench.main(["--repeat", "1", "--json", str(out)])
    doc = json.loads(out.read_text())
    assert doc["backend"] == kernels.BACKEND and len(doc["results"]) == 4
    assert "speedup" in capsys.readouterr().out
