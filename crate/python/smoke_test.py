"""Smoke test for the eeorder Python extension.

Uses an installed `eeorder` module when available; otherwise builds the
extension with cargo and loads it from a temporary directory.
"""

import importlib
import os
import shutil
import subprocess
import sys
import sysconfig
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load_module():
    try:
        return importlib.import_module("eeorder")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "eeorder-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    target = os.environ.get("CARGO_TARGET_DIR", os.path.join(ROOT, "target"))
    lib = next(
        os.path.join(target, "release", name)
        for name in ("libeeorder.so", "libeeorder.dylib", "eeorder.dll")
        if os.path.exists(os.path.join(target, "release", name))
    )
    out = tempfile.mkdtemp(prefix="eeorder-py-")
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    shutil.copy(lib, os.path.join(out, "eeorder" + suffix))
    sys.path.insert(0, out)
    return importlib.import_module("eeorder")


def main():
    ee = load_module()
    print("eeorder", ee.__version__)

    hmong = ee.Language("hmong")
    assert hmong.sizes() == (58, 14, 8), hmong.sizes()
    assert hmong.parse("ntuj") == ("nt", "u", "j")
    assert hmong.parse("lo") == ("l", "o", "∅")
    assert hmong.parse("qqq9") is None
    assert hmong.focal == "tone"

    assert abs(ee.chi2(10, 0, 0, 10) - 20.0) < 1e-9
    assert abs(ee.in_context_accuracy(439, 447, 4, 0) - 886 / 890) < 1e-12

    with tempfile.TemporaryDirectory() as d:
        ee.write_fixtures(d, 3)
        planted = ee.Scale.load(os.path.join(d, "planted.scale"))
        data = os.path.join(d, "planted_ee.tsv")

        found, acc = ee.search_best_scale(hmong, data)
        assert acc == 1.0
        assert found.ranked_symbols() == planted.ranked_symbols()
        assert ee.rule_accuracy(hmong, data, planted) == 1.0
        assert planted.compare("j", "g") == "attested"

        with open(os.path.join(d, "hmong_tree.json")) as f:
            induced = ee.induce_scale(hmong, f.read())
        assert str(induced).startswith("j < b < m < v < s < g < ∅"), str(induced)

        report = ee.classify(hmong, data, classifier="tree", features="all", seed=1)
        row = report["rows"][0]
        assert row["mean_accuracy"] == 1.0, row

        emb = ee.Embeddings.load(os.path.join(d, "planted_emb.bin"))
        gold = os.path.join(d, "planted_corpus.tagged")
        text = os.path.join(d, "planted_corpus.txt")
        precision = []
        for stages in ["none", "parsable", "parsable,sim", "parsable,sim,scale"]:
            out = os.path.join(d, "pred.tagged")
            ee.baseline_tag(hmong, text, out, stages=stages, embeddings=emb, scale=planted)
            m = ee.evaluate_tags(out, gold)
            if stages == "none":
                assert m["span"]["recall"] == 1.0
            precision.append(m["span"]["precision"])
        assert all(a < b for a, b in zip(precision, precision[1:])), precision

        toy = ee.Embeddings.train(os.path.join(d, "toy_embedding_corpus.txt"), dim=16, epochs=2, min_count=1, seed=1)
        assert "p0" in toy and toy.dim == 16
        assert len(toy.neighbors("p0", k=3)) == 3

    print("ok")


if __name__ == "__main__":
    main()
