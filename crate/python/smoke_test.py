"""Smoke test for the protqtn extension module.

Build first with `cargo build --release -p protqtn-py`, then run
`python3 python/smoke_test.py`. The script loads target/release/libprotqtn.so
(or the debug build) under the module name `protqtn`.
"""

import cmath
import importlib.util
import math
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libprotqtn.so"
        if lib.exists():
            spec = importlib.util.spec_from_file_location("protqtn", lib)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("libprotqtn.so not found; run `cargo build --release -p protqtn-py`")


def main():
    pq = load()

    cfg = pq.ModelConfig(topology="ptn", sharing="hierarchical", mode="discard")
    model = pq.Model(cfg, max_len=8, seed=1)
    out = model.evaluate("AGSQ")
    assert abs(out["p0"] + out["p1"] - 1.0) < 1e-12, out
    assert out["predicted"] in (0, 1)
    assert model.evaluate("AGSQ") == out

    diagram = [l for l in model.diagram("AGSQ").splitlines() if not l.startswith("#")]
    assert len(diagram) == 8, diagram

    loss, grad = model.gradient("AGSQ", 1)
    _, shifted = model.gradient("AGSQ", 1, method="param_shift")
    assert len(grad) == model.num_params == len(model.params())
    assert max(abs(a - b) for a, b in zip(grad, shifted)) < 1e-8
    assert loss > 0

    with tempfile.TemporaryDirectory() as d:
        path = str(pathlib.Path(d) / "model.json")
        model.save(path)
        again = pq.Model.load(path)
        assert again.params() == model.params()
        assert again.evaluate("AGSQ") == out

    try:
        model.evaluate("ACDEFGHIK")
    except ValueError:
        pass
    else:
        raise AssertionError("sequence longer than the trained length was accepted")
    try:
        pq.ModelConfig(topology="ring")
    except ValueError as e:
        assert "ptn" in str(e)
    else:
        raise AssertionError("invalid topology was accepted")

    angles = [0.3 * (k + 1) for k in range(pq.param_count_of("sim14", 2, 2))]
    u = pq.unitary("sim14", 2, 2, angles)
    for i in range(4):
        for j in range(4):
            s = sum(u[k][i].conjugate() * u[k][j] for k in range(4))
            assert cmath.isclose(s, 1.0 if i == j else 0.0, abs_tol=1e-12)

    records = pq.synth_motif(200, seq_len=5, seed=3)
    assert sum(r[1] for r in records) == 100
    trained, history = pq.train(records, cfg, seed=3, max_epochs=3, learning_rate=0.05)
    assert 1 <= len(history) <= 3
    assert all(math.isfinite(row[1]) for row in history)
    assert trained.evaluate(records[0][2])["predicted"] in (0, 1)

    print("protqtn smoke test passed:", model, "->", out)


if __name__ == "__main__":
    main()
