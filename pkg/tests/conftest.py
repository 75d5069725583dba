import io
import os
import re
import sys
import time
from contextlib import redirect_stdout
from types import SimpleNamespace

import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture(scope="session")
def toy_model(tmp_path_factory):
    """Recognizer trained once per session on the 32 synthetic fixtures
    through the real `train` entry point; shared by the learning-check,
    recognition and service tests."""
    import fixtures
    from handscribe.cli import main

    base = tmp_path_factory.mktemp("toy-model")
    manifest = fixtures.write_fixture_dataset(os.path.join(base, "data"))
    model_path = os.path.join(base, "model.sgm")

    log = io.StringIO()
    started = time.time()
    with redirect_stdout(log):
        exit_code = main(["train", manifest, "-o", model_path] + fixtures.TOY_TRAIN_ARGS)
    elapsed = time.time() - started

    history = []
    for line in log.getvalue().splitlines():
        m = re.match(r"epoch (\d+) loss (\S+) train_cer (\S+) val_cer (\S+)", line)
        if m:
            history.append({
                "epoch": int(m.group(1)), "loss": float(m.group(2)),
                "train_cer": float(m.group(3)), "val_cer": float(m.group(4)),
            })
    return SimpleNamespace(
        path=model_path, manifest=manifest, base=str(base),
        exit_code=exit_code, history=history, seconds=elapsed,
        log=log.getvalue(),
    )
