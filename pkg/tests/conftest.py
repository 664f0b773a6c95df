import re

import pytest
import torch

from nvc.backbone import VaeConfig
from nvc.models import ModelConfig, build_models

_CRITERION_PATTERN = re.compile(r"test_(c\d{2}[a-z]?)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, ()):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            match = _CRITERION_PATTERN.search(nodeid)
            if not match:
                continue
            status = "PASS" if outcome == "passed" else "FAIL"
            lines.append(f"ACCEPTANCE {match.group(1)} "
                         f"{match.group(2)}: {status}")
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(set(lines)):
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _seed():
    torch.manual_seed(0)


@pytest.fixture
def tiny_vae_cfg():
    return VaeConfig(latent_channels=16, base_width=16, hyper_channels=8)


@pytest.fixture
def tiny_models():
    torch.manual_seed(7)
    cfg = ModelConfig(latent_channels=16, base_width=16, hyper_channels=8,
                      mcn_width_mult=0.25)
    return build_models(cfg).eval()


@pytest.fixture(scope="session")
def trained():
    """Toy codec ladder trained on synthetic clips (see _toytrain)."""
    import _toytrain
    return _toytrain.load_or_train()
