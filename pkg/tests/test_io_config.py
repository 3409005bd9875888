import json

import numpy as np
import pytest

from thermcolor import imageio as io
from thermcolor.arraycore import UNLABELED, InvalidInputError
from thermcolor.config import RunConfig, load_config


def test_raw_roundtrip(tmp_path):
    a = np.random.default_rng(0).random((4, 5, 6)).astype(np.float32)
    io.write_raw(tmp_path / "x.f32", a, kind="prob")
    np.testing.assert_array_equal(io.read_raw(tmp_path / "x.f32"), a.astype(np.float64))
    header = json.loads(open(tmp_path / "x.f32", "rb").readline())
    assert header["n_classes"] == 4 and header["h"] == 5


def test_raw_truncated(tmp_path):
    io.write_raw(tmp_path / "x.f32", np.zeros((2, 3, 3)))
    data = (tmp_path / "x.f32").read_bytes()
    (tmp_path / "x.f32").write_bytes(data[:-4])
    with pytest.raises(InvalidInputError):
        io.read_raw(tmp_path / "x.f32")


def test_png_stack_roundtrip(tmp_path):
    v = np.random.default_rng(1).dirichlet(np.ones(5), size=(6, 7)).transpose(2, 0, 1)
    io.write_png_stack(tmp_path / "s", v)
    back = io.read_prob(tmp_path / "s")
    np.testing.assert_allclose(back, v, atol=1e-4)
    np.testing.assert_allclose(back.sum(axis=0), 1.0)


def test_mask_roundtrip(tmp_path):
    m = np.array([[0, 3], [UNLABELED, 18]])
    io.write_mask(tmp_path / "m.png", m)
    np.testing.assert_array_equal(io.read_mask(tmp_path / "m.png"), m)


def test_image_roundtrip(tmp_path):
    rgb = np.random.default_rng(2).integers(0, 256, (3, 4, 5)) / 255.0
    io.write_image(tmp_path / "c.png", rgb)
    np.testing.assert_allclose(io.read_image(tmp_path / "c.png"), rgb, atol=1e-12)
    io.write_image(tmp_path / "g.png", rgb[0])
    assert io.read_image(tmp_path / "g.png").shape == (1, 4, 5)


def test_mask_range_checked(tmp_path):
    with pytest.raises(InvalidInputError):
        io.write_mask(tmp_path / "m.png", np.array([[300]]))


def test_config_roundtrip(tmp_path):
    cfg = RunConfig(theta_fg=0.9, weights={"tv": 2.0}, scene={"width": 40}, seed=3)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    back = load_config(path)
    assert back == cfg
    assert back.loss_weights().tv == 2.0


def test_config_env_var(tmp_path, monkeypatch):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"theta_bg": 0.98}))
    monkeypatch.setenv("THERMCOLOR_CONFIG", str(path))
    assert load_config().theta_bg == 0.98
    monkeypatch.delenv("THERMCOLOR_CONFIG")
    assert load_config() == RunConfig()


def test_config_rejects_unknown(tmp_path):
    with pytest.raises(ValueError):
        RunConfig.from_dict({"thetafg": 0.9})


def test_config_schedules_resolve():
    cfg = RunConfig()
    v = cfg.vocab
    steps = cfg.schedule("ntir").steps
    assert steps[0] == (v.id("sky"), (v.id("vegetation"), v.id("pole")))
    assert len(cfg.schedule("dc").steps) == 3
