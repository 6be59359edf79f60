"""Experiment harness and command-line interface."""

import csv
import json
import os

import numpy as np
import pytest

from dtofsim.cli import main
from dtofsim.harness import (ExperimentSpec, bundled_scene_path,
                             run_sweep, summarize_across_psi)
from dtofsim.pfm import read_pfm, write_pfm
from dtofsim.scene import load_scene


class TestHarness:
    def test_bundled_scenes_exist(self):
        for name in ("cornell_moving_box", "receding_plane",
                     "rotating_sphere"):
            assert os.path.exists(bundled_scene_path(name))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ExperimentSpec(scene_path="x.json", omega_tildes=())
        with pytest.raises(ValueError):
            ExperimentSpec(scene_path="x.json", reference_factor=8)

    def test_small_sweep_rows_and_csv(self, tmp_path):
        spec = ExperimentSpec(
            scene_path=bundled_scene_path("receding_plane"),
            omega_tildes=(1.0,), psis=(0.0,),
            strategies=("uniform", "shifted"), mappings=("none", "replay"),
            spp=4, k_max=2)
        rows = run_sweep(spec, out_dir=str(tmp_path))
        assert len(rows) == 4
        assert all(set(r) >= {"rmse", "mae", "psnr", "mse", "scene_hash"}
                   for r in rows)
        with open(tmp_path / "metrics.csv") as f:
            assert len(list(csv.DictReader(f))) == 4

    def test_sweep_is_deterministic(self):
        spec = ExperimentSpec(
            scene_path=bundled_scene_path("receding_plane"),
            omega_tildes=(0.5,), strategies=("shifted",),
            mappings=("replay",), spp=4, k_max=2)
        cache = {}
        r1 = run_sweep(spec, reference_cache=cache)
        r2 = run_sweep(spec, reference_cache=cache)
        assert r1 == r2

    def test_summarize_across_psi(self):
        rows = [{"omega_tilde": 1.0, "psi": p, "seed": 0,
                 "strategy": "shifted", "mapping": "replay", "k_d": 2,
                 "n_t": 2, "rmse": v, "mae": v, "psnr": 10.0, "mse": v * v}
                for p, v in ((0.0, 1.0), (np.pi, 3.0))]
        out = summarize_across_psi(rows)
        assert len(out) == 1
        assert out[0]["rmse_mean"] == pytest.approx(2.0)
        assert out[0]["rmse_std"] == pytest.approx(1.0)


class TestCli:
    def test_missing_scene_exits_2(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["render", "--scene", "no_such_scene.json"])
        assert e.value.code == 2
        assert "not found" in capsys.readouterr().err

    def test_render_writes_buffers(self, tmp_path, monkeypatch):
        scene_path = self._small_scene(tmp_path)
        out = tmp_path / "out"
        code = main(["render", "--scene", scene_path, "--spp", "4",
                     "--k-max", "2", "-o", str(out)])
        assert code == 0
        for name in ("dtof", "intensity", "variance"):
            img = read_pfm(str(out / f"{name}.pfm"))
            assert img.shape == (8, 8)
        assert (out / "diag.csv").exists()

    def test_metrics_subcommand(self, tmp_path, capsys):
        a = tmp_path / "a.pfm"
        b = tmp_path / "b.pfm"
        write_pfm(str(a), np.ones((2, 2), dtype=np.float32))
        write_pfm(str(b), np.zeros((2, 2), dtype=np.float32))
        assert main(["metrics", "--buffer", str(a),
                     "--reference", str(b)]) == 0
        out = capsys.readouterr().out
        assert "rmse,1.0" in out

    def test_modlab_subcommand(self, tmp_path):
        out = tmp_path / "var.csv"
        code = main(["modlab", "--omega-tildes", "0.5,1.0",
                     "--thetas", "0.0", "-o", str(out)])
        assert code == 0
        with open(out) as f:
            rows = list(csv.DictReader(f))
        assert {r["strategy"] for r in rows} >= {"uniform", "shifted"}
        assert all(float(r["variance"]) >= -1e-12 for r in rows)

    def test_sweep_subcommand(self, tmp_path):
        scene_path = self._small_scene(tmp_path)
        exp = {"scene_path": scene_path, "omega_tildes": [1.0],
               "strategies": ["shifted"], "mappings": ["replay"],
               "spp": 4, "k_max": 2}
        exp_path = tmp_path / "exp.json"
        exp_path.write_text(json.dumps(exp))
        out = tmp_path / "sweep"
        assert main(["sweep", "--experiment", str(exp_path),
                     "-o", str(out)]) == 0
        assert (out / "metrics.csv").exists()
        assert (out / "summary.csv").exists()

    def _small_scene(self, tmp_path):
        scene = load_scene(bundled_scene_path("receding_plane"))
        scene.camera.resolution = (8, 8)
        from dtofsim.scene import save_scene
        path = tmp_path / "scene.json"
        save_scene(scene, str(path))
        return str(path)
