import json
import os
import shutil
import struct
import subprocess
from pathlib import Path

import numpy as np
import pytest

import topointeract as ti

WALL = "classes 3\ncontain 1 in 2\nconn 4\n"


def broken_wall():
    return np.array(
        [
            [0, 0, 0, 0, 0],
            [0, 2, 2, 2, 0],
            [0, 2, 1, 0, 0],
            [0, 2, 2, 2, 0],
            [0, 0, 0, 0, 0],
        ],
        dtype=np.uint8,
    )


def random_likelihood(rng, classes, shape):
    f = rng.uniform(0.05, 1.0, size=(classes,) + shape)
    return (f / f.sum(axis=0, keepdims=True)).astype(np.float32)


def test_broken_wall():
    mask, violations, foreground = ti.detect(broken_wall(), WALL)
    expect = np.zeros((5, 5), dtype=np.uint8)
    expect[2, 2] = expect[2, 3] = 1
    assert mask.dtype == np.uint8
    assert np.array_equal(mask, expect)
    assert (violations, foreground) == (2, 8)


def test_connectivity_override_and_aliases():
    labels = np.zeros((4, 4), dtype=np.int64)
    labels[1, 1], labels[2, 2] = 1, 2
    cfg = "classes 3\nexclude 1 2\n"
    assert ti.py_detect(labels, cfg, conn="4")[1] == 0
    assert ti.detect(labels, cfg, conn="8")[1] == 2


def test_empty_constraint_set_gives_zero_mask():
    labels = np.random.default_rng(0).integers(0, 3, size=(6, 7, 5)).astype(np.uint8)
    mask, violations, _ = ti.detect(labels, "classes 3\n")
    assert violations == 0
    assert not mask.any()


def test_errors_raise():
    with pytest.raises(ValueError, match="line 2"):
        ti.detect(broken_wall(), "classes 3\nfrobnicate\n")
    with pytest.raises(ValueError):
        ti.detect(np.full((3, 3), 7, dtype=np.uint8), WALL)
    with pytest.raises(TypeError):
        ti.detect(np.zeros((3, 3), dtype=np.float32), WALL)
    f = random_likelihood(np.random.default_rng(1), 3, (4, 4))
    with pytest.raises(ValueError, match="dims"):
        ti.loss_ti(f, np.zeros((4, 5), dtype=np.uint8), WALL)
    f[0, 1, 1] = np.nan
    with pytest.raises(ValueError, match="finite"):
        ti.loss_ti(f, np.zeros((4, 4), dtype=np.uint8), WALL)
    with pytest.raises(ValueError, match="not normalized"):
        ti.loss_ti(np.full((3, 4, 4), 0.5, dtype=np.float32), np.zeros((4, 4), dtype=np.uint8), WALL)


def test_correct_one_hot_has_zero_interaction_loss():
    gt = broken_wall()
    f = np.stack([(gt == k).astype(np.float32) for k in range(3)])
    for surrogate in ("ce", "mse"):
        l_ti, grad = ti.py_loss_ti(f, gt, WALL, surrogate)
        assert l_ti == 0.0
        assert grad.shape == f.shape and grad.dtype == np.float64
        if surrogate == "mse":
            assert not grad.any()
    # cross-entropy still pulls on the target channel at the two flagged sites
    _, grad = ti.loss_ti(f, gt, WALL, "ce")
    expect = np.zeros_like(grad)
    expect[1, 2, 2] = expect[0, 2, 3] = -0.5
    assert np.array_equal(grad, expect)


def test_loss_matches_definition():
    rng = np.random.default_rng(2)
    gt = rng.integers(0, 3, size=(9, 9)).astype(np.uint8)
    f = random_likelihood(rng, 3, (9, 9))
    mask, _, _ = ti.detect(np.argmax(f, axis=0).astype(np.uint8), WALL)
    v = mask.astype(bool)
    assert v.any()
    l_ti, grad = ti.loss_ti(f, gt, WALL, "ce")
    picked = np.take_along_axis(f.astype(np.float64), gt[None], axis=0)[0]
    assert l_ti == pytest.approx(-np.log(picked[v]).mean(), rel=1e-12)
    assert np.all(grad[:, ~v] == 0)


# Cross-checks against the command-line tool when it has been built.

CLI = os.environ.get("TOPO_CLI") or shutil.which("topo") or str(Path(__file__).resolve().parents[2] / "build/tools/topo")


def segv(kind, payload, shape, classes):
    head = b"SEGV" + struct.pack("<HBB", 1, kind, len(shape))
    head += struct.pack(f"<{len(shape)}I", *shape) + struct.pack("<H", classes)
    head += struct.pack(f"<{len(shape)}f", *([1.0] * len(shape)))
    return head + payload


def read_mask(path, shape):
    data = Path(path).read_bytes()
    return np.frombuffer(data[-int(np.prod(shape)) :], dtype=np.uint8).reshape(shape)


@pytest.mark.skipif(not Path(CLI).exists(), reason="topo executable not built")
def test_fixtures_agree_with_cli(tmp_path):
    rng = np.random.default_rng(3)
    cfgs = ["classes 4\ncontain 1 in 2\nexclude 1 3 d=2\nconn 8\n", "classes 3\nexclude 1 2\nconn 4\n"]
    for case in range(50):
        shape = (12, 14) if case % 2 == 0 else (6, 7, 5)
        cfg = cfgs[case % 2]
        if len(shape) == 3:
            cfg = cfg.replace("conn 8", "conn 26").replace("conn 4", "conn 6")
        classes = int(cfg.split()[1])
        gt = rng.integers(0, classes, size=shape).astype(np.uint8)
        f = random_likelihood(rng, classes, shape)
        (tmp_path / "c.cfg").write_text(cfg)
        (tmp_path / "g.segv").write_bytes(segv(0, gt.tobytes(), shape, classes))
        (tmp_path / "f.segv").write_bytes(segv(2, f.astype("<f4").tobytes(), shape, classes))

        run = subprocess.run(
            [CLI, "check", tmp_path / "g.segv", tmp_path / "c.cfg", "--json", "--out", tmp_path / "v.segv"],
            capture_output=True,
            text=True,
        )
        assert run.returncode in (0, 3), run.stderr
        mask, violations, foreground = ti.detect(gt, cfg)
        report = json.loads(run.stdout)
        assert np.array_equal(mask, read_mask(tmp_path / "v.segv", shape))
        assert (violations, foreground) == (report["violations"], report["foreground"])

        for surrogate in ("ce", "mse", "dice"):
            run = subprocess.run(
                [CLI, "loss", tmp_path / "f.segv", tmp_path / "g.segv", tmp_path / "c.cfg",
                 "--surrogate", surrogate, "--lambda-dice", "0"],
                capture_output=True,
                text=True,
            )
            assert run.returncode == 0, run.stderr
            l_ti, _ = ti.loss_ti(f, gt, cfg, surrogate)
            assert abs(l_ti - json.loads(run.stdout)["l_ti"]) <= 1e-12
