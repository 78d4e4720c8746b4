import json

import oracles


def test_frozen_values_are_reproducible(frozen):
    # a change here means an oracle changed, not the library
    assert json.loads(json.dumps(oracles.compute())) == frozen


def test_frozen_spot_values(frozen):
    assert frozen["dnf_seq_or"] == [["b1", "b2"], ["b1", "b3"]]
    assert frozen["eval_or_seq"] is True
    assert frozen["empty_trace_r1"] == [True, None]
