import dataclasses

import numpy as np
import pytest

from nfdx.synth import (
    Carrier,
    MotorConfig,
    OperatingCondition,
    SensingConfig,
    SynthConfig,
    default_plan,
    generate_dataset,
    synthesize_trial,
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_trace(condition, noise_sigma=0.1, seed=42, carrier=Carrier.GHZ_5_8, position_cm=0, **cfg):
    cfg = SynthConfig(noise_sigma=noise_sigma, seed=seed, **cfg)
    return synthesize_trial(
        MotorConfig(condition=OperatingCondition(condition)),
        SensingConfig(carrier=carrier, position_cm=position_cm),
        cfg,
    )


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """{5.8 GHz, 433 MHz} x {0, 10} cm, 6 trials per condition."""
    out = tmp_path_factory.mktemp("dataset")
    plan = default_plan(trials=6, carriers=[Carrier.GHZ_5_8, Carrier.MHZ_433], positions=[0, 10])
    manifest = generate_dataset(plan, SynthConfig(seed=7), out)
    return out, manifest


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, title, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
