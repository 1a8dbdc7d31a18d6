"""Python bindings for the dlaas training platform."""

import json

from . import _core
from ._core import DlaasError, resolve_trainer, trainer_loss_and_gradient

__all__ = [
    "DlaasError",
    "Platform",
    "canonical_manifest",
    "parse_log",
    "parse_manifest",
    "parse_metric_line",
    "resolve_trainer",
    "trainer_loss_and_gradient",
]


def parse_manifest(text):
    return json.loads(_core.parse_manifest(text))


def canonical_manifest(text):
    return _core.canonical_manifest(text)


def parse_metric_line(line):
    rec = _core.parse_metric_line(line)
    return None if rec is None else json.loads(rec)


def parse_log(text):
    """Returns (records, skipped_line_count)."""
    records, skipped = _core.parse_log(text)
    return [json.loads(r) for r in records], skipped


class Platform:
    """Coordination store, object store, registry, simulated cluster and
    lifecycle manager in this process. serve() puts the REST API in front."""

    def __init__(self, data_dir, topology="", token=""):
        self._p = _core.Platform(str(data_dir), topology, token)

    def close(self):
        self._p.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def put_dataset(self, container, kind="separable", samples=1000, dim=2, seed=1):
        self._p.put_dataset(container, kind, samples, dim, seed)

    def create_model(self, manifest, definition=b""):
        if isinstance(definition, dict):
            definition = "".join(f"{k}: {v}\n" for k, v in definition.items())
        if isinstance(definition, str):
            definition = definition.encode()
        return self._p.create_model(manifest, definition)

    def list_models(self):
        return self._p.list_models()

    def get_model(self, model_id):
        return json.loads(self._p.get_model(model_id))

    def delete_model(self, model_id):
        self._p.delete_model(model_id)

    def submit(self, model_id, learners=None, gpus=None, memory_mib=None):
        return self._p.submit(model_id, learners, gpus, memory_mib)

    def get_job(self, training_id):
        return json.loads(self._p.get_job(training_id))

    def list_jobs(self):
        return [json.loads(j) for j in self._p.list_jobs()]

    def halt(self, training_id):
        self._p.halt(training_id)

    def delete_job(self, training_id):
        self._p.delete_job(training_id)

    def wait(self, training_id, timeout_s=60.0):
        return json.loads(self._p.wait(training_id, timeout_s))

    def log(self, training_id):
        return self._p.log(training_id)

    def result_weights(self, container, training_id):
        return self._p.result_weights(container, training_id)

    def serve(self, host="127.0.0.1", port=0):
        """Starts the REST API; returns "host:port"."""
        return self._p.serve(host, port)
