import numpy as np
import pytest

from augmetrics.cli import entry, main
from augmetrics.frechet import fid, write_features
from augmetrics.imagecore import GrayImage, save_png
from augmetrics.manifest import Manifest, Record, load_manifest, save_manifest
from augmetrics.rng import make_rng
from augmetrics import adacontrol


def run(*argv):
    return entry([str(a) for a in argv])


def make_dataset(root, sizes, h=16, w=16, with_masks=False):
    """Write PNGs plus a manifest; masks cover a centered region."""
    imgdir = root / "images"
    imgdir.mkdir(parents=True)
    if with_masks:
        (root / "masks").mkdir()
    r = make_rng(0)
    records = []
    for cls, n in sizes.items():
        for i in range(n):
            rid = f"{cls}{i}"
            save_png(GrayImage(r.random((h, w))), imgdir / f"{rid}.png")
            if with_masks:
                mask = np.zeros((h, w))
                mask[2 : h - 2, 2 : w - 2] = 1.0
                save_png(GrayImage(mask), root / "masks" / f"{rid}.png")
            records.append(Record(rid, f"images/{rid}.png", cls))
    save_manifest(Manifest(records), root / "manifest.csv")
    return root / "manifest.csv"


def read_meta(path):
    return dict(
        line.split(" = ", 1) for line in path.read_text().strip().splitlines()
    )


class TestParsing:
    def test_version_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0

    def test_unknown_subcommand_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_required_flag_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["fid", "--features-a", "x.fvec"])
        assert exc.value.code == 2


class TestExitCodes:
    def test_contract_violation_is_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.fvec"
        bad.write_bytes(b"FVEC1\x00")
        code = run("fid", "--features-a", bad, "--features-b", bad)
        assert code == 3
        assert "error:" in capsys.readouterr().err

    def test_io_failure_is_4(self, tmp_path, capsys):
        code = run(
            "fid",
            "--features-a",
            tmp_path / "missing.fvec",
            "--features-b",
            tmp_path / "missing.fvec",
        )
        assert code == 4
        assert "i/o error:" in capsys.readouterr().err


class TestConfig:
    def test_config_supplies_defaults_flags_win(self, tmp_path, capsys):
        manifest = make_dataset(tmp_path / "data", {"a": 6})
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# defaults\nmetric = ssim\nn = 4\n")
        out = tmp_path / "out"
        code = run(
            "similarity",
            "--manifest",
            manifest,
            "--class-a",
            "a",
            "--metric",
            "rmse",  # overrides the config's ssim
            "--config",
            cfg,
            "--out",
            out,
        )
        assert code == 0
        meta = read_meta(out / "run.meta")
        assert meta["metric"] == "rmse"
        assert meta["n"] == "4"
        assert (out / "intra_rmse_values.txt").exists()
        # C(4,2) pairs from the config-supplied sample size
        assert len((out / "intra_rmse_values.txt").read_text().split()) == 6

    def test_underscore_keys_accepted(self, tmp_path):
        manifest = make_dataset(tmp_path / "data", {"a": 4})
        cfg = tmp_path / "run.cfg"
        cfg.write_text("class_a = a\nn = 3\n")
        out = tmp_path / "out"
        assert run("similarity", "--manifest", manifest, "--config", cfg, "--out", out) == 0

    def test_malformed_config_is_3(self, tmp_path, capsys):
        manifest = make_dataset(tmp_path / "data", {"a": 4})
        cfg = tmp_path / "run.cfg"
        cfg.write_text("metric rmse\n")
        code = run(
            "similarity", "--manifest", manifest, "--class-a", "a",
            "--config", cfg, "--out", tmp_path / "out",
        )
        assert code == 3
        assert "line 1" in capsys.readouterr().err


class TestPreprocess:
    def test_writes_images_manifest_meta(self, tmp_path, capsys):
        manifest = make_dataset(tmp_path / "data", {"a": 3}, with_masks=True)
        out = tmp_path / "out"
        code = run(
            "preprocess", "--manifest", manifest,
            "--masks", tmp_path / "data" / "masks",
            "--target", 8, "--out", out,
        )
        assert code == 0
        for i in range(3):
            assert (out / "images" / f"a{i}.png").exists()
        m = load_manifest(out / "manifest.csv")
        assert [r.path for r in m] == [f"images/a{i}.png" for i in range(3)]
        meta = read_meta(out / "run.meta")
        assert meta["command"] == "preprocess"
        assert meta["target"] == "8"
        assert "out" not in meta and "jobs" not in meta and "config" not in meta
        import hashlib

        assert meta["digest_manifest"] == hashlib.sha256(manifest.read_bytes()).hexdigest()

    def test_output_side_length(self, tmp_path):
        manifest = make_dataset(tmp_path / "data", {"a": 1}, with_masks=True)
        out = tmp_path / "out"
        assert run(
            "preprocess", "--manifest", manifest,
            "--masks", tmp_path / "data" / "masks",
            "--target", 10, "--out", out,
        ) == 0
        from augmetrics.imagecore import load_png

        assert load_png(out / "images" / "a0.png").pixels.shape == (10, 10)

    def test_missing_mask_fails_record_exit_3(self, tmp_path, capsys):
        manifest = make_dataset(tmp_path / "data", {"a": 3}, with_masks=True)
        (tmp_path / "data" / "masks" / "a1.png").unlink()
        out = tmp_path / "out"
        code = run(
            "preprocess", "--manifest", manifest,
            "--masks", tmp_path / "data" / "masks",
            "--target", 8, "--out", out,
        )
        assert code == 3
        failures = (out / "failures.txt").read_text()
        assert failures.startswith("a1:")
        m = load_manifest(out / "manifest.csv")
        assert [r.id for r in m] == ["a0", "a2"]


class TestSimilarity:
    def test_intra_only_files(self, tmp_path, capsys):
        manifest = make_dataset(tmp_path / "data", {"a": 6})
        out = tmp_path / "out"
        code = run(
            "similarity", "--manifest", manifest, "--class-a", "a",
            "--n", 4, "--metric", "rmse", "--out", out,
        )
        assert code == 0
        for suffix in ("_values.txt", ".meta", ".csv"):
            assert (out / f"intra_rmse{suffix}").exists()
        assert not (out / "inter_rmse.csv").exists()
        stdout = capsys.readouterr().out
        assert "intra_rmse: 6 values, 0 dropped" in stdout
        header = (out / "intra_rmse.csv").read_text().splitlines()[0]
        assert header == "bin_lo,bin_hi,count,density"

    def test_two_class_files_and_counts(self, tmp_path, capsys):
        manifest = make_dataset(tmp_path / "data", {"a": 5, "b": 5})
        out = tmp_path / "out"
        code = run(
            "similarity", "--manifest", manifest, "--class-a", "a",
            "--class-b", "b", "--n", 4, "--metric", "ssim", "--out", out,
        )
        assert code == 0
        for name in ("intra_a_ssim", "intra_b_ssim", "inter_ssim"):
            assert (out / f"{name}_values.txt").exists()
        assert len((out / "inter_ssim_values.txt").read_text().split()) == 16
        assert len((out / "intra_a_ssim_values.txt").read_text().split()) == 6

    def test_jobs_do_not_change_bytes(self, tmp_path):
        manifest = make_dataset(tmp_path / "data", {"a": 6})
        outs = []
        for jobs, name in ((1, "o1"), (8, "o8")):
            out = tmp_path / name
            assert run(
                "similarity", "--manifest", manifest, "--class-a", "a",
                "--n", 5, "--metric", "ssim", "--jobs", jobs, "--out", out,
            ) == 0
            outs.append(out)
        for fname in ("intra_ssim_values.txt", "intra_ssim.csv", "intra_ssim.meta", "run.meta"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()

    def test_same_class_b_is_intra_only(self, tmp_path):
        manifest = make_dataset(tmp_path / "data", {"a": 4})
        out = tmp_path / "out"
        assert run(
            "similarity", "--manifest", manifest, "--class-a", "a",
            "--class-b", "a", "--n", 3, "--out", out,
        ) == 0
        assert (out / "intra_rmse_values.txt").exists()
        assert not (out / "inter_rmse_values.txt").exists()


class TestFid:
    def test_same_file_prints_zero(self, tmp_path, capsys):
        data = make_rng(0).random((12, 4)).astype(np.float32)
        path = tmp_path / "f.fvec"
        write_features(path, data, layer_tag="pool")
        assert run("fid", "--features-a", path, "--features-b", path) == 0
        assert capsys.readouterr().out.strip() == "0.0"

    def test_matches_library_and_writes_out(self, tmp_path, capsys):
        r = make_rng(1)
        da = r.random((20, 3)).astype(np.float32)
        db = (r.random((18, 3)) * 2).astype(np.float32)
        pa, pb = tmp_path / "a.fvec", tmp_path / "b.fvec"
        write_features(pa, da, layer_tag="pool")
        write_features(pb, db, layer_tag="pool")
        out = tmp_path / "out"
        assert run("fid", "--features-a", pa, "--features-b", pb, "--out", out) == 0
        printed = float(capsys.readouterr().out.strip())
        assert printed == fid(da.astype(np.float64), db.astype(np.float64))
        assert float((out / "fid.txt").read_text()) == printed
        meta = read_meta(out / "run.meta")
        assert "digest_features_a" in meta and "digest_features_b" in meta

    def test_tag_mismatch_warns(self, tmp_path, capsys):
        r = make_rng(2)
        pa, pb = tmp_path / "a.fvec", tmp_path / "b.fvec"
        write_features(pa, r.random((8, 2)).astype(np.float32), layer_tag="x")
        write_features(pb, r.random((8, 2)).astype(np.float32), layer_tag="y")
        assert run("fid", "--features-a", pa, "--features-b", pb) == 0
        assert "layer tags differ" in capsys.readouterr().err


class TestBalance:
    def test_dup_mode(self, tmp_path, capsys):
        manifest = make_dataset(tmp_path / "data", {"a": 5, "b": 2})
        out = tmp_path / "out"
        assert run("balance", "--manifest", manifest, "--mode", "dup", "--out", out) == 0
        m = load_manifest(out / "manifest.csv")
        assert m.class_counts() == {"a": 5, "b": 5}
        assert sum(1 for r in m if r.origin == "dup") == 3
        assert "a=5, b=5" in capsys.readouterr().out

    def test_aug_mode_writes_images(self, tmp_path):
        manifest = make_dataset(tmp_path / "data", {"a": 4, "b": 2})
        out = tmp_path / "out"
        assert run(
            "balance", "--manifest", manifest, "--mode", "aug",
            "--rot", 5, "--shift", 5, "--stretch", 5, "--zoom", 15,
            "--bright", 40, "--out", out,
        ) == 0
        assert sorted(p.name for p in (out / "images").iterdir()) == [
            "b_synth_0.png",
            "b_synth_1.png",
        ]
        m = load_manifest(out / "manifest.csv")
        assert m.class_counts() == {"a": 4, "b": 4}
        added = [r for r in m if r.origin == "aug"]
        assert [r.path for r in added] == ["images/b_synth_0.png", "images/b_synth_1.png"]
        from augmetrics.imagecore import load_png

        for r in added:
            assert load_png(out / r.path).pixels.shape == (16, 16)


class TestSplit:
    def test_counts_and_manifest(self, tmp_path, capsys):
        manifest = make_dataset(tmp_path / "data", {"a": 8, "b": 8})
        out = tmp_path / "out"
        code = run(
            "split", "--manifest", manifest, "--val-per-class", 2,
            "--test-per-class", 1, "--out", out,
        )
        assert code == 0
        m = load_manifest(out / "manifest.csv")
        assert m.class_counts("val") == {"a": 2, "b": 2}
        assert m.class_counts("test") == {"a": 1, "b": 1}
        assert m.class_counts("train") == {"a": 5, "b": 5}
        stdout = capsys.readouterr().out
        assert "val: 4 (a=2, b=2)" in stdout
        assert "train: 10 (a=5, b=5)" in stdout


class TestEval:
    def write_labels(self, path, labels):
        path.write_text("".join(f"{v}\n" for v in labels))

    def test_perfect_prediction(self, tmp_path, capsys):
        truth = tmp_path / "truth.txt"
        pred = tmp_path / "pred.txt"
        labels = ["x", "y", "x", "z", "y", "z"] * 4
        self.write_labels(truth, labels)
        self.write_labels(pred, labels)
        assert run("eval", "--truth", truth, "--pred", pred) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "accuracy,precision,recall,f1,specificity,mcc"
        assert [float(v) for v in lines[1].split(",")] == [1.0] * 6

    def test_pairwise_test_and_outputs(self, tmp_path, capsys):
        truth = tmp_path / "truth.txt"
        p1 = tmp_path / "p1.txt"
        p2 = tmp_path / "p2.txt"
        labels = ["x", "y"] * 10
        self.write_labels(truth, labels)
        self.write_labels(p1, labels)
        self.write_labels(p2, labels)
        out = tmp_path / "out"
        assert run("eval", "--truth", truth, "--pred", p1, p2, "--out", out) == 0
        stdout = capsys.readouterr().out
        assert "stuart-maxwell" in stdout
        assert "pvalue=1.0" in stdout
        sm = (out / "stuart_maxwell.csv").read_text().splitlines()
        assert sm[0] == "a,b,chi2,df,pvalue"
        assert sm[1].endswith(",1.0")
        metrics_rows = (out / "metrics.csv").read_text().splitlines()
        assert len(metrics_rows) == 3  # header + one row per prediction file
        meta = read_meta(out / "run.meta")
        assert "digest_truth" in meta and "digest_pred0" in meta and "digest_pred1" in meta

    def test_explicit_label_order(self, tmp_path):
        truth = tmp_path / "truth.txt"
        pred = tmp_path / "pred.txt"
        self.write_labels(truth, ["b", "a", "b", "a"])
        self.write_labels(pred, ["b", "a", "a", "a"])
        assert run("eval", "--truth", truth, "--pred", pred, "--labels", "b,a") == 0


class TestAdaSim:
    def test_trajectory_matches_library(self, tmp_path, capsys):
        signs = tmp_path / "signs.txt"
        values = [1.0, 1.0, -1.0, 0.5, 1.0, -1.0, 0.0, 1.0]
        signs.write_text("# comment\n" + "".join(f"{v}\n" for v in values))
        out = tmp_path / "out"
        assert run(
            "ada-sim", "--signs", signs, "--target", 0.6, "--step", 0.01,
            "--n", 4, "--out", out,
        ) == 0
        rows = (out / "trajectory.csv").read_text().strip().splitlines()
        assert rows[0] == "step,r_t,p"
        assert len(rows) == len(values) + 1

        state = adacontrol.new_ada(0.6, 0.01, 4)
        for row, v in zip(rows[1:], values):
            step, r_t, p = row.split(",")
            adacontrol.observe(state, v)
            assert float(r_t) == adacontrol.r_t(state)
            assert float(p) == state.p
        assert int(rows[-1].split(",")[0]) == len(values)

    def test_bad_sign_line_is_3(self, tmp_path, capsys):
        signs = tmp_path / "signs.txt"
        signs.write_text("1.0\nnope\n")
        assert run("ada-sim", "--signs", signs) == 3
        assert "line 2" in capsys.readouterr().err


class TestGridSearch:
    def test_needs_scorer_or_manifest(self, capsys):
        assert run("grid-search") == 2
        assert "grid-search needs" in capsys.readouterr().err

    def test_external_scorer(self, tmp_path, monkeypatch, capsys):
        mod = tmp_path / "peaky.py"
        mod.write_text(
            "def score(p):\n"
            "    return -((p.rotation_max_deg - 5) ** 2\n"
            "             + (p.zoom_max_frac * 100 - 15) ** 2\n"
            "             + (p.brightness_max_frac * 100 - 40) ** 2)\n"
        )
        monkeypatch.syspath_prepend(str(tmp_path))
        out = tmp_path / "out"
        assert run("grid-search", "--scorer", "peaky:score", "--out", out) == 0
        stdout = capsys.readouterr().out
        assert "best: rot=5 shift=5 stretch=5 zoom=15 bright=40 score=" in stdout
        report = (out / "grid_report.csv").read_text().splitlines()
        assert report[0] == "rot,shift,stretch,zoom,bright,score"
        assert len(report) == 28  # header + 27 combinations

    def test_builtin_proxy_scorer(self, tmp_path, capsys):
        manifest = make_dataset(tmp_path / "data", {"a": 3})
        assert run(
            "grid-search", "--manifest", manifest, "--n", 2,
            "--geo-levels", "0,5", "--zoom-levels", "10", "--bright-levels", "30",
        ) == 0
        assert "best:" in capsys.readouterr().out

    def test_custom_levels_change_grid_size(self, tmp_path, monkeypatch):
        mod = tmp_path / "flat.py"
        mod.write_text("def score(p):\n    return 0.0\n")
        monkeypatch.syspath_prepend(str(tmp_path))
        out = tmp_path / "out"
        assert run(
            "grid-search", "--scorer", "flat:score", "--geo-levels", "0,5",
            "--zoom-levels", "10,20", "--bright-levels", "30", "--out", out,
        ) == 0
        report = (out / "grid_report.csv").read_text().splitlines()
        assert len(report) == 5  # header + 2*2*1
