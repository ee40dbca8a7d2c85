"""Smoke test for the `cwc` extension module.

Build and install it first, e.g. `maturin develop -m crates/py/Cargo.toml`.
"""

from pathlib import Path

import cwc

MODELS = Path(__file__).resolve().parent.parent / "models"


def main():
    t = cwc.Term("2 a b ({l} d c | f e)")
    assert str(t) == "2 a b ({l} c d | e f)"
    assert t == cwc.Term("b a ({l} c d | e f) a")
    assert len(t) == 4
    assert t.multiplicity("a") == 2

    assert cwc.count_matches("a b", "a a b b") == 4
    assert cwc.count_matches("2 Tip", cwc.Term("5 Tip")) == 10
    assert len(cwc.eval_coords("6,6 rect[1,1 3,2] col[5]", 6, 6)) == 13

    try:
        cwc.Term("({l} $x | $X)")
    except ValueError as e:
        assert "ground term" in str(e)
    else:
        raise AssertionError("variables accepted in a ground term")

    model = cwc.Model.load(MODELS / "am_calospora.cwc")
    assert model.name == "am_calospora" and model.dims == (1, 13)
    assert model.diagnostics() == []
    compiled = model.compile()
    assert compiled.n_rules == 104
    assert compiled.monitor_names[:2] == ["hyp@1,1", "hyp@1,2"]
    assert compiled.ground_text().startswith("cwc-ground v1\n")

    run = compiled.simulate(2.0, 0.5, seed=3)
    assert run["times"] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert run == compiled.simulate(2.0, 0.5, seed=3)

    ens = compiled.run_ensemble(4, 2.0, 0.5, seed=1)
    assert len(ens["runs"]) == 4
    assert ens["means"][0][0] == 10.0 and ens["stds"][0][0] == 0.0
    print("smoke test passed")


if __name__ == "__main__":
    main()
