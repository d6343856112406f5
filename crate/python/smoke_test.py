#!/usr/bin/env python3
"""Smoke test for the longcycle_py extension module.

Builds nothing itself: it expects `cargo build --release -p longcycle-py`
to have produced target/release/liblongcycle_py.so, stages that library
under an importable name, and exercises the exposed surface end to end.

Run from anywhere:  python3 python/smoke_test.py
"""

import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def stage_module() -> None:
    built = ROOT / "target" / "release" / "liblongcycle_py.so"
    if not built.exists():
        sys.exit(f"missing {built}; run `cargo build --release -p longcycle-py` first")
    staging = pathlib.Path(tempfile.mkdtemp(prefix="longcycle_py_"))
    shutil.copy2(built, staging / "longcycle_py.so")
    sys.path.insert(0, str(staging))


def main() -> None:
    stage_module()
    import longcycle_py as lc

    # fluid limit: the headline constant
    alpha = lc.ode_alpha()
    assert alpha > 1.186, alpha
    print(f"ode_alpha: {alpha:.6f}")

    # graph round trip
    g = lc.gnm(50_000, 30_000, seed=1)
    assert g.n() == 50_000 and g.num_edges() == 30_000
    g2 = lc.Graph.from_edge_list(g.n(), g.edge_list())
    assert g2.edge_list() == g.edge_list()
    print(f"gnm + edge-list round trip: {g!r}")

    # kernel of the 2-core, with its identities
    k = lc.kernel_of(g)
    stats = json.loads(k.stats_json())
    assert stats["n2"] == sum(w - 1 for w in k.weights()), stats
    assert stats["e_k"] == len(k.weights())
    assert k.luczak() > 0
    print(f"kernel: {k!r}, luczak={k.luczak():.1f}")

    # 2-Greedy on a min-degree-3 instance
    n = 20_000
    gy = lc.all_y_graph(n, 3 * n // 2, seed=2)
    greedy = json.loads(lc.two_greedy(gy, seed=3))
    assert greedy["matching_edges"] > 0.9 * n, greedy
    assert greedy["w_matching"] / n > 1.0, greedy
    print(f"two_greedy: {greedy}")

    # end-to-end stitched cycle on the same instance, unit weights
    cycle, weight, report = lc.long_cycle(gy, [1] * gy.num_edges(), seed=4)
    rep = json.loads(report)
    assert weight == len(cycle) > 0.5 * n, (weight, len(cycle))
    assert rep["kernel_cycle_weight"] == weight
    print(f"long_cycle: len={len(cycle)} hamiltonian={rep['hamiltonian']}")

    # harness experiment + schema validation of the summary
    cfg = {"n": 40_000, "eps": 0.25, "seed": 5, "trials": 2}
    summary = json.loads(lc.run_experiment("longcycle", json.dumps(cfg)))
    cols = summary["columns"]
    verified = [row[cols.index("verified")] for row in summary["rows"]]
    assert verified == [1.0, 1.0], summary["rows"]
    assert summary["scalars"]["min_len"] > 0

    try:
        import jsonschema
    except ImportError:
        print("jsonschema not installed; skipping schema validation")
    else:
        schema = json.loads((ROOT / "docs" / "schema" / "summary.schema.json").read_text())
        jsonschema.validate(summary, schema)
        print("summary validates against docs/schema/summary.schema.json")

    # determinism across calls
    again = lc.run_experiment("longcycle", json.dumps(cfg))
    assert json.loads(again) == summary
    print("determinism: identical summary on re-run")

    print("smoke test passed")


if __name__ == "__main__":
    main()
