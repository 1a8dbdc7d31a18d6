import json
import math
import pathlib
import random
import re

import pytest
import requests

import dlaas

ROOT = pathlib.Path(__file__).resolve().parents[2]
SAMPLE_MANIFEST = (ROOT / "testdata" / "manifests" / "caffe_mnist.yml").read_text()


def manifest(framework="logreg", learners=1, container="train"):
    return f"""name: py-smoke
version: "1.0"
learners: {learners}
gpus: 0
memory: 512MiB
data_stores:
- id: local
  type: local
  training_data:
    container: {container}
  training_results:
    container: results
  connection:
    auth_url: https://auth.local/v1
    user_name: u
    password: p
framework:
  name: {framework}
  version: "1"
  job: solver.txt
"""


DEFINITION = {"epochs": 3, "batch_size": 16, "learning_rate": 0.5, "seed": 7}


def test_sample_manifest():
    m = dlaas.parse_manifest(SAMPLE_MANIFEST)
    assert m["learners"] == 2
    assert m["gpus"] == 2
    assert m["framework"]["name"] == "caffe"
    canon = dlaas.canonical_manifest(SAMPLE_MANIFEST)
    assert dlaas.canonical_manifest(canon) == canon


def test_bad_manifest_raises():
    with pytest.raises(dlaas.DlaasError, match="^(SYNTAX|SCHEMA)_ERROR"):
        dlaas.parse_manifest("name: [oops")


def test_metric_parser():
    r = dlaas.parse_metric_line("[learner-3] ITER 100 LOSS 0.693 ACC 0.50 LR 0.1 TS 17000")
    assert r == {
        "iteration": 100,
        "loss": 0.693,
        "accuracy": 0.5,
        "learning_rate": 0.1,
        "wallclock_ms": 17000,
        "learner_id": 3,
    }
    assert dlaas.parse_metric_line("garbage") is None
    records, skipped = dlaas.parse_log("ITER 1 LOSS 1 ACC 0 LR 1 TS 1\nnoise\nITER 2 LOSS 1 ACC 0 LR 1 TS 2\n")
    assert [r["iteration"] for r in records] == [1, 2]
    assert skipped == 1


def test_gradient_matches_finite_differences():
    rng = random.Random(3)
    dim, n = 3, 6
    features = [rng.gauss(0, 1) for _ in range(dim * n)]
    labels = [float(rng.random() < 0.5) for _ in range(n)]
    w = [rng.gauss(0, 1) for _ in range(dim + 1)]
    _, g = dlaas.trainer_loss_and_gradient("logreg", dim, w, features, labels)
    h = 1e-6
    for i in range(len(w)):
        wp, wm = list(w), list(w)
        wp[i] += h
        wm[i] -= h
        fp, _ = dlaas.trainer_loss_and_gradient("logreg", dim, wp, features, labels)
        fm, _ = dlaas.trainer_loss_and_gradient("logreg", dim, wm, features, labels)
        assert math.isclose(g[i], (fp - fm) / (2 * h), rel_tol=1e-5, abs_tol=1e-8)
    assert dlaas.resolve_trainer("caffe") == "mlp"


def test_platform_runs_a_job(tmp_path):
    with dlaas.Platform(tmp_path) as p:
        p.put_dataset("train", samples=400, dim=2, seed=3)
        mid = p.create_model(manifest(learners=2), DEFINITION)
        assert re.fullmatch(r"model-[0-9a-f]{12}", mid)
        tid = p.submit(mid, memory_mib=600)
        job = p.wait(tid, 60)
        assert job["state"] == "COMPLETED", job
        assert job["memory_mib"] == 600
        w = p.result_weights("results", tid)
        assert len(w) == 3
        assert "[learner-1] ITER" in p.log(tid)
        with pytest.raises(dlaas.DlaasError, match="^MODEL_NOT_FOUND"):
            p.submit("model-000000000000")


def test_rest_api(tmp_path):
    with dlaas.Platform(tmp_path, token="tok") as p:
        p.put_dataset("train", samples=400)
        base = "http://" + p.serve()
        auth = {"Authorization": "Bearer tok"}
        assert requests.get(base + "/v1/health").json() == {"status": "ok"}
        assert requests.get(base + "/v1/models").status_code == 401
        r = requests.post(base + "/v1/models", headers=auth,
                          json={"manifest": manifest(), "definition": "epochs: 2\n"})
        assert r.status_code == 201
        mid = r.json()["model_id"]
        r = requests.post(base + "/v1/trainings", headers=auth, json={"model_id": mid})
        assert r.status_code == 201
        tid = r.json()["training_id"]
        assert p.wait(tid)["state"] == "COMPLETED"
        assert requests.get(f"{base}/v1/trainings/{tid}", headers=auth).json()["state"] == "COMPLETED"
        r = requests.get(f"{base}/v1/trainings/{tid}/result", headers=auth)
        assert r.status_code == 200
        assert r.headers["Content-Type"] == "application/x-tar"
        r = requests.get(base + "/v1/trainings/training-000000000000", headers=auth)
        assert r.status_code == 404
        assert r.json()["code"] == "NOT_FOUND"
