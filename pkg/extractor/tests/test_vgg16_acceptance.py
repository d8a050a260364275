"""Secondary acceptance: VGG16 extraction over a 10-image folder.

Runs with seeded random weights so the check is hermetic (no weight
download); the gated properties - M discovered from the architecture,
layout coverage, primary-reader compatibility, rerun determinism - do not
depend on the weight values.
"""

from vdextract.cli import run

from visdist import read_layer_layout, read_manifest, read_raw_matrix

VGG16_EXPECTED_FEATURES = 12_416  # 13 conv filter banks + fc1 + fc2


def extract(image_tree, out_dir, tag):
    out = {
        "raw": out_dir / f"raw-{tag}.fne",
        "manifest": out_dir / f"manifest-{tag}.tsv",
        "layout": out_dir / f"layout-{tag}.tsv",
    }
    code = run(
        ["--images-dir", str(image_tree), "--by-synset-subdirs",
         "--arch", "vgg16", "--weights", "random", "--seed", "42",
         "--batch", "4",
         "--out-raw", str(out["raw"]),
         "--out-manifest", str(out["manifest"]),
         "--out-layout", str(out["layout"])]
    )
    assert code == 0
    return out


def test_vgg16_ten_images(image_tree, tmp_path):
    first = extract(image_tree, tmp_path, "first")

    with open(first["raw"], "rb") as source:
        matrix = read_raw_matrix(source)  # zero errors
    assert matrix.shape == (10, VGG16_EXPECTED_FEATURES)

    with open(first["manifest"], encoding="utf-8") as source:
        manifest = read_manifest(source)
    assert manifest.n_samples == 10
    assert manifest.synset_ids() == ["n01440764", "n02084071", "n03000134"]

    with open(first["layout"], encoding="utf-8") as source:
        layout = read_layer_layout(source)
    layout.check_covers(VGG16_EXPECTED_FEATURES)
    kinds = [segment.kind for segment in layout.segments]
    assert kinds.count("conv") == 13
    assert kinds.count("fc") == 2
    conv_total = sum(
        segment.end_exclusive - segment.start
        for segment in layout.segments
        if segment.kind == "conv"
    )
    assert conv_total == 4224  # 64*2 + 128*2 + 256*3 + 512*6
    assert VGG16_EXPECTED_FEATURES - conv_total == 2 * 4096

    second = extract(image_tree, tmp_path, "second")
    assert first["raw"].read_bytes() == second["raw"].read_bytes()
    assert first["manifest"].read_bytes() == second["manifest"].read_bytes()
    assert first["layout"].read_bytes() == second["layout"].read_bytes()
    print("[ACCEPTANCE] pass  extractor: vgg16 M=12416, layout covers "
          "[0, M), parses cleanly, rerun row-identical")
