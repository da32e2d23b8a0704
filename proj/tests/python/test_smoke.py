import json
import os
import subprocess

import numpy as np
import pytest

import facex

HAIR = 17
SKIN = 1
HAT = 18


def write_dataset(root, samples=6, size=16):
    rng = np.random.default_rng(0)
    records = []
    for i in range(samples):
        mask = np.full((size, size), SKIN, dtype=np.uint8)
        mask[: size // 4, :] = HAIR
        if i == 0:
            mask[: size // 8, : size // 2] = HAT
        attribution = (rng.random((size, size)) * 0.2).astype(np.float32)
        attribution[mask == HAIR] += 0.7
        attribution.astype("<f4").tofile(root / f"s{i}.f32")
        mask.tofile(root / f"s{i}.lbl")
        records.append(
            {
                "id": f"s{i}",
                "image_path": f"s{i}.png",
                "attribution_path": f"s{i}.f32",
                "mask_path": f"s{i}.lbl",
                "attributes": {"Target": i % 2, "Attr": (i // 2) % 2},
            }
        )
    manifest = {"format_version": 1, "height": size, "width": size, "samples": records}
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


def test_sample_ior_matches_numpy():
    rng = np.random.default_rng(1)
    g = rng.random((12, 10)).astype(np.float32)
    m = rng.integers(0, 19, size=(12, 10)).astype(np.uint8)
    values = facex.sample_ior(g, m)
    for r in range(19):
        sel = m == r
        if sel.any():
            assert values[r] == pytest.approx(float(g[sel].astype(np.float64).mean()), abs=1e-12)
        else:
            assert values[r] is None


def test_patch_scores_sum_to_region_mass():
    rng = np.random.default_rng(2)
    g = rng.random((16, 16)).astype(np.float32)
    m = rng.integers(0, 19, size=(16, 16)).astype(np.uint8)
    scores = facex.score_patches(g, m, patch_size=4, region=HAIR)
    assert scores.shape == (4, 4)
    assert scores.sum() == pytest.approx(float(g[m == HAIR].astype(np.float64).sum()))


def test_manifest_aggregate_and_topk(tmp_path):
    manifest = facex.read_manifest(write_dataset(tmp_path))
    assert [s.id for s in manifest.samples] == [f"s{i}" for i in range(6)]
    assert manifest.region_table.names[HAIR] == "hair"

    summary = facex.aggregate(manifest, "female", workers=3)
    ranking = summary.ranking()
    assert ranking[0][0] == "hair"
    assert summary.per_region[HAT].count == 1
    assert summary.sample_count == 6

    records = facex.topk_patches(manifest, "hair", patch_size=4, k=5)
    assert len(records) == 5
    scores = [r["score"] for r in records]
    assert scores == sorted(scores, reverse=True)

    result = facex.evaluate(summary, "Gender", ["Blond_Hair", "Race"])
    assert result["rp1"] == 1
    assert result["rp2"] == 2

    subset = facex.balance_subset(manifest, "Target", "Attr", seed=4)
    assert len(subset.samples) == 4


def test_metrics_and_colors():
    assert facex.mean_ranking([3, 6, 1, 5, 1, 2, 2, 3, 1, 1, 1, 1]) == (2.25, "2.25")
    assert facex.mean_ranking([11, 11, 2, 7, 2, 12, 10, 6, 4, 2, 11, 2])[1] == "6.67"
    assert facex.color_of(0.0) == (0, 0, 255)
    assert facex.color_of(1.0) == (255, 0, 0)
    assert facex.hex_color(0.5) == "#00ff00"
    with pytest.raises(facex.FacexError) as info:
        facex.color_of(2.0)
    assert info.value.code == "value_out_of_range"


def test_errors_carry_codes(tmp_path):
    path = write_dataset(tmp_path)
    manifest = facex.read_manifest(path)
    (tmp_path / "s2.lbl").write_bytes(b"\x00" * 3)
    with pytest.raises(facex.FacexError) as info:
        facex.aggregate(manifest)
    assert info.value.code == "size_mismatch"
    assert "s2" in str(info.value)


def test_run_command_aggregate(tmp_path):
    config = facex.RunConfig()
    config.manifest_path = str(write_dataset(tmp_path))
    config.output_dir = str(tmp_path / "out")
    code, out, err = facex.run_command("aggregate", config)
    assert code == 0, err
    assert "hair" in out
    summary = facex.parse_summary((tmp_path / "out" / "summary.json").read_text())
    assert summary.ranking()[0][0] == "hair"


@pytest.mark.skipif("FACEX_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_exit_codes(tmp_path):
    cli = os.environ["FACEX_CLI"]
    assert subprocess.run([cli, "bogus"], capture_output=True).returncode == 2
    path = write_dataset(tmp_path)
    done = subprocess.run([cli, "aggregate", "--manifest", str(path), "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert done.returncode == 0, done.stderr
